use std::collections::BTreeMap;
use std::net::{IpAddr, Ipv4Addr, SocketAddr};

use tabula_core::composition::{access_header, SegmentVerdict};
use tabula_core::doc::{enclosing_ordinals, Token};
use tabula_core::key::SYMBOL_TYPE;
use tabula_core::{
    attach_digests, compose_decrypt, compose_encrypt, parse_xml, verify_digests, CompositionPolicy, DigestAlgorithm,
    EncryptedMessage, KeyBounds, KeyRing, Mode, OwnershipView, TenElementKey, Verdict, WordStream, GET_KEY,
};

use crate::intermediary::{spawn_intermediary, IntermediaryConfig};
use crate::server::{serve, ServerConfig};
use crate::{http_client, Client, NetError, Transcript, PLAIN_HTTP_WARNING};

const SERVER: &str = "S";

#[derive(Debug, Clone)]
pub struct Participant {
    pub intermediary: IntermediaryConfig,
    /// 0 picks a free port.
    pub port: u16,
}

#[derive(Debug, Clone)]
pub struct ScenarioConfig {
    pub document: WordStream,
    /// Key ids are participant names plus the group key's id.
    pub policy: CompositionPolicy,
    /// Visited in order; each gets the message as left by the previous one.
    pub participants: Vec<Participant>,
    pub mode: Mode,
    /// Run a symbol-form round first so tag tables are populated.
    pub prime: bool,
    pub algorithm: DigestAlgorithm,
    /// Keys the server hands out to named participants instead of fresh ones.
    pub pinned_keys: BTreeMap<String, TenElementKey>,
    pub group_key: Option<TenElementKey>,
    /// Bounds for keys that are not pinned.
    pub bounds: KeyBounds,
    pub seed: Option<u64>,
    pub bind: IpAddr,
    pub server_port: u16,
}

impl ScenarioConfig {
    /// Three parties: `sp1` rewrites element 2, `sp2` elements 3 and 4, and
    /// the root stays under the group key.
    pub fn example() -> ScenarioConfig {
        let doc = parse_xml(r#"<root attr1="value1" attr2="value2"><name>iiti</name><value>2</value><nv>a1</nv></root>"#)
            .expect("static document");
        let participant = |name: &str, edits: &[(usize, &str)]| Participant {
            intermediary: IntermediaryConfig {
                name: name.to_string(),
                edits: edits.iter().map(|(o, t)| (*o, t.to_string())).collect(),
                ..Default::default()
            },
            port: 0,
        };
        let key = |s: &str| s.parse::<TenElementKey>().expect("static key");
        ScenarioConfig {
            document: doc,
            policy: CompositionPolicy::new("group").assign(2, "sp1").assign(3, "sp2").assign(4, "sp2"),
            participants: vec![participant("sp1", &[(2, "indore")]), participant("sp2", &[(3, "7"), (4, "b2")])],
            mode: Mode::St,
            prime: false,
            algorithm: DigestAlgorithm::Md5,
            pinned_keys: [
                ("sp1".to_string(), key("[12,6,1,1,1,14,4,1,3,2]")),
                ("sp2".to_string(), key("[6,12,1,0,1,14,3,1,3,2]")),
            ]
            .into(),
            group_key: Some(key("[7,10,0,0,1,14,3,0,3,2]")),
            // symbol types whose tables cover all of printable ASCII
            bounds: KeyBounds::default().with(SYMBOL_TYPE, 40..=63),
            seed: None,
            bind: IpAddr::V4(Ipv4Addr::LOCALHOST),
            server_port: 0,
        }
    }

    pub fn participant_mut(&mut self, name: &str) -> Option<&mut IntermediaryConfig> {
        self.participants
            .iter_mut()
            .map(|p| &mut p.intermediary)
            .find(|p| p.name == name)
    }

    pub fn validate(&self) -> Result<(), NetError> {
        let names: Vec<&str> = self.participants.iter().map(|p| p.intermediary.name.as_str()).collect();
        for (i, n) in names.iter().enumerate() {
            if n.is_empty() || *n == SERVER || names[..i].contains(n) {
                return Err(NetError::Config(format!("bad or duplicate participant name {n:?}")));
            }
        }
        if names.contains(&self.policy.group()) {
            return Err(NetError::Config("the group key id cannot be a participant".into()));
        }
        for (_, id) in self.policy.assignments() {
            if id != self.policy.group() && !names.contains(&id) {
                return Err(NetError::Config(format!("policy names undeclared participant {id:?}")));
            }
        }
        self.policy.resolve(&tabula_core::composition::stream_parents(&self.document))?;
        Ok(())
    }

    /// The document with every participant's edits applied, in order.
    pub fn expected_document(&self) -> WordStream {
        let owners = self
            .policy
            .resolve(&tabula_core::composition::stream_parents(&self.document))
            .expect("validated policy");
        let enclosing = enclosing_ordinals(&self.document);
        let mut tokens = self.document.tokens().to_vec();
        for p in &self.participants {
            for (&ord, text) in &p.intermediary.edits {
                if owners.get(ord - 1).map(String::as_str) != Some(p.intermediary.name.as_str()) {
                    continue;
                }
                for (t, &e) in tokens.iter_mut().zip(&enclosing) {
                    if e == ord && matches!(t, Token::Variable(_)) {
                        *t = Token::Variable(text.clone());
                    }
                }
            }
        }
        WordStream::new(tokens).expect("edits keep the shape")
    }
}

/// Why the pipeline stopped early.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Halt {
    pub participant: String,
    /// Rejected elements; `None` stands for the whole-document digest.
    pub rejected: Vec<Option<usize>>,
    pub reason: String,
}

#[derive(Debug, Clone)]
pub struct ScenarioOutcome {
    pub transcript: Transcript,
    /// Verdicts on each reply, per participant and round.
    pub verdicts: Vec<(String, Vec<SegmentVerdict>)>,
    /// Document assembled after the last round; `None` after a halt.
    pub final_document: Option<WordStream>,
    pub halt: Option<Halt>,
    pub warnings: Vec<String>,
}

/// Run S -> participants -> S over loopback HTTP (`run_composition_scenario`).
///
/// Participants obtain their pairwise and group keys from S with "Get
/// key". S then encrypts and signs the document, sends it to each
/// participant in turn with that participant's access header, checks every
/// digest of each reply with its own keys and stops at the first rejection.
pub async fn run_composition_scenario(config: ScenarioConfig) -> Result<ScenarioOutcome, NetError> {
    config.validate()?;
    let mut server_config = ServerConfig {
        group_key: config.group_key,
        bounds: config.bounds.clone(),
        seed: config.seed,
        ..ServerConfig::default()
    };
    for (peer, key) in &config.pinned_keys {
        server_config.peer_bounds.insert(peer.clone(), KeyBounds::exactly(key));
    }
    let server = serve(server_config, SocketAddr::new(config.bind, config.server_port)).await?;
    let mut services = Vec::new();
    for p in &config.participants {
        services.push(spawn_intermediary(p.intermediary.clone(), SocketAddr::new(config.bind, p.port)).await?);
    }

    let mut transcript = Transcript::default();
    let group = config.policy.group().to_string();
    for (p, service) in config.participants.iter().zip(&services) {
        let name = &p.intermediary.name;
        let mut client = Client::new(&server.url(), name, SERVER);
        let key = client.exchange_key().await?;
        transcript.push(name, SERVER, &client.peer_url(), GET_KEY);
        transcript.push(SERVER, name, &client.peer_url(), &key.serialize());
        let group_key = client.exchange_group_key().await?;
        let url = format!("{}/group-key", client.peer_url());
        transcript.push(name, SERVER, &url, GET_KEY);
        transcript.push(SERVER, name, &url, &group_key.serialize());
        let mut ring = KeyRing::new();
        ring.add(name, key, false)?;
        ring.add(&group, group_key, true)?;
        service.state.set_ring(ring);
    }

    let mut ring = KeyRing::new();
    for p in &config.participants {
        let name = &p.intermediary.name;
        let key = server
            .state
            .peer_key(name)
            .ok_or_else(|| NetError::Config(format!("no key agreed with {name}")))?;
        ring.add(name, key, false)?;
    }
    ring.add(&group, *server.state.group_key(), true)?;

    let http = http_client();
    let view = OwnershipView::Policy(config.policy.clone());
    let alg = config.algorithm;
    let mut outcome = ScenarioOutcome {
        transcript: Transcript::default(),
        verdicts: Vec::new(),
        final_document: None,
        halt: None,
        warnings: vec![PLAIN_HTTP_WARNING.to_string()],
    };
    let rounds = if config.prime { vec![Mode::St, config.mode] } else { vec![config.mode] };
    'rounds: for mode in rounds {
        let body = compose_encrypt(&config.document, &config.policy, &mut ring, mode)?;
        let mut current = attach_digests(&body, &config.policy, &ring, alg)?;
        for (p, service) in config.participants.iter().zip(&services) {
            let name = &p.intermediary.name;
            let access = access_header(&config.document, &config.policy, &[name.as_str()])?;
            let sent = EncryptedMessage::new(access, current.clone()).to_string();
            let uri = format!("{}/process?mode={}", service.url(), mode);
            transcript.push(SERVER, name, &uri, &sent);
            let resp = http
                .post(&uri)
                .header(reqwest::header::CONTENT_TYPE, "text/plain")
                .body(sent)
                .send()
                .await?;
            let status = resp.status();
            let text = resp.text().await?;
            transcript.push(name, SERVER, &uri, &text);
            if !status.is_success() {
                return Err(NetError::Status {
                    status: status.as_u16(),
                    body: text,
                });
            }
            let checked = text
                .parse::<EncryptedMessage>()
                .map_err(|e| e.to_string())
                .and_then(|reply| {
                    verify_digests(&reply, &ring, &view, alg)
                        .map(|v| (reply, v))
                        .map_err(|e| e.to_string())
                });
            match checked {
                Ok((reply, verdicts)) => {
                    let rejected: Vec<Option<usize>> = verdicts
                        .iter()
                        .filter(|v| v.verdict == Verdict::Reject)
                        .map(|v| v.ordinal)
                        .collect();
                    outcome.verdicts.push((name.clone(), verdicts));
                    if !rejected.is_empty() {
                        outcome.halt = Some(Halt {
                            participant: name.clone(),
                            rejected,
                            reason: "digest mismatch".into(),
                        });
                        break 'rounds;
                    }
                    current = reply.words;
                }
                Err(reason) => {
                    outcome.halt = Some(Halt {
                        participant: name.clone(),
                        rejected: Vec::new(),
                        reason,
                    });
                    break 'rounds;
                }
            }
        }
        let assembled = compose_decrypt(&EncryptedMessage::new(vec![], current), &mut ring, &view, mode)?;
        outcome.final_document = Some(assembled.to_stream()?);
    }
    if outcome.halt.is_some() {
        outcome.final_document = None;
    }
    outcome.transcript = transcript;
    for s in services {
        s.stop().await;
    }
    server.stop().await;
    Ok(outcome)
}
