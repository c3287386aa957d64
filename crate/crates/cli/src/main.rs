use std::fs;
use std::io::{self, Read, Write};
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::rngs::StdRng;
use rand::SeedableRng;
use tabula_core::composition::{access_header, attach_digests, attach_digests_for, Verdict};
use tabula_core::corpus::{generate_corpus, measure_sizes, DocGen, SizeRow, Stratum};
use tabula_core::doc::{emit_json, emit_xml};
use tabula_core::key::SYMBOL_TYPE;
use tabula_core::keystore::SESSION_KEY_ID;
use tabula_core::{
    compose_encrypt, generate_key, parse_json, parse_xml, verify_digests, CompositionPolicy, DigestAlgorithm,
    EncryptedMessage, KeyBounds, KeyRing, KeyRole, KeyStore, Mode, OwnershipView, Session, TenElementKey,
    WordStream,
};
use tabula_net::{run_composition_scenario, serve, Client, ScenarioConfig, ServerConfig, PLAIN_HTTP_WARNING};

mod error;

use error::CliError;

/// Default key for `bench`: its table covers all of printable ASCII.
const BENCH_KEY: &str = "[12,8,1,1,1,40,4,1,3,2]";

#[derive(Parser)]
#[command(name = "tabula", version, about = "Key-derived table encryption for XML and JSON messages")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate random keys.
    Keygen(KeygenArgs),
    /// Print a key's symbol table and tag table.
    Tables(TablesArgs),
    /// Encrypt a document.
    Encrypt(CodecArgs),
    /// Decrypt a message.
    Decrypt(CodecArgs),
    /// Encrypt a document under several keys and sign its parts.
    Sign(SignArgs),
    /// Check the digests of a signed message.
    Verify(VerifyArgs),
    /// Compare message sizes.
    Bench(BenchArgs),
    /// Run the encrypting resource server.
    Serve(ServeArgs),
    /// Exchange a key with a server and fetch a resource.
    Fetch(FetchArgs),
    /// Run the three-party composition pipeline on loopback.
    Scenario(ScenarioArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Xml,
    Json,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    St,
    Tat,
}

impl From<ModeArg> for Mode {
    fn from(m: ModeArg) -> Mode {
        match m {
            ModeArg::St => Mode::St,
            ModeArg::Tat => Mode::Tat,
        }
    }
}

#[derive(Args)]
struct KeyArgs {
    /// Key text, e.g. [12,6,1,1,1,14,4,1,3,2].
    #[arg(long)]
    key: Option<String>,
    /// Keystore file to take the key from.
    #[arg(long)]
    keyring: Option<PathBuf>,
    #[arg(long, default_value = "local")]
    peer: String,
    #[arg(long, default_value = SESSION_KEY_ID)]
    id: String,
}

impl KeyArgs {
    fn resolve(&self) -> Result<Option<TenElementKey>, CliError> {
        if let Some(k) = &self.key {
            return Ok(Some(TenElementKey::parse(k)?));
        }
        if let Some(path) = &self.keyring {
            let store = KeyStore::load(path)?;
            let (_, key) = store
                .get(&self.peer, &self.id)
                .ok_or_else(|| CliError::new("MissingKey", format!("no key {}/{} in {}", self.peer, self.id, path.display())))?;
            return Ok(Some(*key));
        }
        Ok(None)
    }
}

#[derive(Args)]
struct SessionArgs {
    #[command(flatten)]
    key: KeyArgs,
    /// Tables dump carrying the tag table between runs; updated in place.
    #[arg(long)]
    state: Option<PathBuf>,
    /// Documents exchanged before this one, to grow the tag table.
    #[arg(long)]
    prime: Vec<PathBuf>,
}

impl SessionArgs {
    fn open(&self) -> Result<Session, CliError> {
        let mut session = match (&self.state, self.key.resolve()?) {
            (Some(path), key) if path.exists() => {
                let s = Session::from_dump(&fs::read_to_string(path)?)?;
                if key.is_some_and(|k| &k != s.key()) {
                    return Err(CliError::new("KeyMismatch", "the state file belongs to another key"));
                }
                s
            }
            (_, Some(key)) => Session::new(key)?,
            (_, None) => return Err(CliError::new("MissingKey", "give --key, --keyring or an existing --state")),
        };
        for path in &self.prime {
            let doc = read_document(&fs::read_to_string(path)?, None)?;
            session.encode(&doc, Mode::St, &[])?;
        }
        Ok(session)
    }

    fn save(&self, session: &Session) -> Result<(), CliError> {
        if let Some(path) = &self.state {
            fs::write(path, session.dump())?;
        }
        Ok(())
    }
}

#[derive(Args)]
struct IoArgs {
    /// Input file; standard input if absent.
    #[arg(long = "in")]
    input: Option<PathBuf>,
    /// Output file; standard output if absent.
    #[arg(long = "out")]
    output: Option<PathBuf>,
}

impl IoArgs {
    fn read(&self) -> Result<String, CliError> {
        match &self.input {
            Some(p) => Ok(fs::read_to_string(p)?),
            None => {
                let mut s = String::new();
                io::stdin().read_to_string(&mut s)?;
                Ok(s)
            }
        }
    }

    fn write(&self, text: &str) -> Result<(), CliError> {
        match &self.output {
            Some(p) => fs::write(p, text)?,
            None => io::stdout().write_all(text.as_bytes())?,
        }
        Ok(())
    }
}

#[derive(Args)]
struct KeygenArgs {
    #[arg(long, default_value_t = 1)]
    count: usize,
    #[arg(long)]
    seed: Option<u64>,
    /// Restrict to symbol types covering all printable ASCII.
    #[arg(long)]
    printable: bool,
    /// Store the (last) key in this keystore file.
    #[arg(long)]
    keyring: Option<PathBuf>,
    #[arg(long, default_value = "local")]
    peer: String,
    #[arg(long, default_value = SESSION_KEY_ID)]
    id: String,
    #[arg(long, value_enum, default_value = "pairwise")]
    role: RoleArg,
}

#[derive(Clone, Copy, ValueEnum)]
enum RoleArg {
    Pairwise,
    Group,
}

#[derive(Args)]
struct TablesArgs {
    #[command(flatten)]
    session: SessionArgs,
    #[arg(long = "out")]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct CodecArgs {
    #[command(flatten)]
    session: SessionArgs,
    #[command(flatten)]
    io: IoArgs,
    #[arg(long, value_enum, default_value = "st")]
    mode: ModeArg,
    /// Document format; guessed from the input when encrypting.
    #[arg(long, value_enum)]
    format: Option<Format>,
    /// Access header, e.g. 2,3.
    #[arg(long, value_delimiter = ',')]
    access: Vec<usize>,
}

#[derive(Args)]
struct RingArgs {
    /// Keystore holding every key of the policy.
    #[arg(long)]
    keyring: PathBuf,
    /// Only this peer's records; all records otherwise.
    #[arg(long)]
    peer: Option<String>,
    /// Owner per element, e.g. "group=K3 2=K1 3=K2".
    #[arg(long)]
    policy: Option<String>,
    #[arg(long, default_value = "md5")]
    alg: String,
}

impl RingArgs {
    fn ring(&self) -> Result<KeyRing, CliError> {
        let store = KeyStore::load(&self.keyring)?;
        Ok(match &self.peer {
            Some(p) => store.ring_for(p)?,
            None => store.ring_all()?,
        })
    }

    fn policy(&self) -> Result<Option<CompositionPolicy>, CliError> {
        self.policy.as_deref().map(str::parse).transpose().map_err(CliError::from)
    }

    fn alg(&self) -> Result<DigestAlgorithm, CliError> {
        self.alg.parse().map_err(|e| CliError::new("BadArgument", e))
    }
}

#[derive(Args)]
struct SignArgs {
    #[command(flatten)]
    ring: RingArgs,
    #[command(flatten)]
    io: IoArgs,
    #[arg(long, value_enum, default_value = "st")]
    mode: ModeArg,
    #[arg(long, value_enum)]
    format: Option<Format>,
    /// Documents composed before this one, to grow the tag tables.
    #[arg(long)]
    prime: Vec<PathBuf>,
    /// Sign only the parts of these keys (and the whole body) and give the
    /// message their access header.
    #[arg(long = "for", value_delimiter = ',')]
    recipient: Vec<String>,
}

#[derive(Args)]
struct VerifyArgs {
    #[command(flatten)]
    ring: RingArgs,
    #[command(flatten)]
    io: IoArgs,
}

#[derive(Args)]
struct BenchArgs {
    #[command(flatten)]
    key: KeyArgs,
    /// Documents to measure.
    files: Vec<PathBuf>,
    /// Also measure a generated corpus with this many documents per stratum.
    #[arg(long)]
    corpus: Option<usize>,
    #[arg(long, default_value_t = 1)]
    seed: u64,
}

#[derive(Args)]
struct ServeArgs {
    #[arg(long, default_value = "127.0.0.1:8080")]
    addr: SocketAddr,
    /// name=path, repeatable.
    #[arg(long = "resource")]
    resources: Vec<String>,
    /// Keystore file, loaded at start and rewritten on every exchange.
    #[arg(long)]
    keyring: Option<PathBuf>,
    #[arg(long)]
    group_key: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct FetchArgs {
    /// Server base URL.
    #[arg(long)]
    url: String,
    #[arg(long)]
    peer: String,
    #[arg(long)]
    resource: String,
    /// Number of GETs after the exchange.
    #[arg(long, default_value_t = 1)]
    count: usize,
    #[arg(long, value_enum, default_value = "xml")]
    format: Format,
    /// Print the wire bodies too.
    #[arg(long)]
    wire: bool,
    /// Store the agreed key here.
    #[arg(long)]
    keyring: Option<PathBuf>,
}

#[derive(Args)]
struct ScenarioArgs {
    #[arg(long, value_enum, default_value = "st")]
    mode: ModeArg,
    /// Run a symbol-form round first.
    #[arg(long)]
    prime: bool,
    /// Have the first intermediary alter this element although it does not
    /// hold its key.
    #[arg(long)]
    tamper: Option<usize>,
    /// Draw fresh keys instead of the built-in ones.
    #[arg(long)]
    fresh_keys: bool,
    #[arg(long)]
    seed: Option<u64>,
    /// Write the transcript here instead of standard output.
    #[arg(long)]
    transcript: Option<PathBuf>,
}

fn read_document(text: &str, format: Option<Format>) -> Result<WordStream, CliError> {
    let format = format.unwrap_or(if text.trim_start().starts_with('<') { Format::Xml } else { Format::Json });
    Ok(match format {
        Format::Xml => parse_xml(text)?,
        Format::Json => parse_json(text)?,
    })
}

fn emit(doc: &WordStream, format: Format) -> String {
    match format {
        Format::Xml => emit_xml(doc),
        Format::Json => emit_json(doc),
    }
}

fn keygen(a: KeygenArgs) -> Result<(), CliError> {
    let mut rng = match a.seed {
        Some(s) => StdRng::seed_from_u64(s),
        None => StdRng::from_os_rng(),
    };
    let bounds = if a.printable {
        KeyBounds::default().with(SYMBOL_TYPE, 40..=63)
    } else {
        KeyBounds::default()
    };
    let mut last = None;
    for _ in 0..a.count {
        let key = generate_key(&bounds, &mut rng)?;
        println!("{key}");
        last = Some(key);
    }
    if let (Some(path), Some(key)) = (&a.keyring, last) {
        let mut store = if path.exists() { KeyStore::load(path)? } else { KeyStore::new() };
        let role = match a.role {
            RoleArg::Pairwise => KeyRole::Pairwise,
            RoleArg::Group => KeyRole::Group,
        };
        store.insert(&a.peer, &a.id, role, key);
        store.save(path)?;
    }
    Ok(())
}

fn tables(a: TablesArgs) -> Result<(), CliError> {
    let session = a.session.open()?;
    IoArgs {
        input: None,
        output: a.output,
    }
    .write(&session.dump())
}

fn encrypt(a: CodecArgs) -> Result<(), CliError> {
    let mut session = a.session.open()?;
    let doc = read_document(&a.io.read()?, a.format)?;
    let msg = session.encode(&doc, a.mode.into(), &a.access)?;
    a.session.save(&session)?;
    a.io.write(&format!("{msg}\n"))
}

fn decrypt(a: CodecArgs) -> Result<(), CliError> {
    let mut session = a.session.open()?;
    let msg: EncryptedMessage = a.io.read()?.trim_end().parse()?;
    let doc = session.decode(&msg, a.mode.into())?;
    a.session.save(&session)?;
    a.io.write(&format!("{}\n", emit(&doc, a.format.unwrap_or(Format::Xml))))
}

fn sign(a: SignArgs) -> Result<(), CliError> {
    let mut ring = a.ring.ring()?;
    let policy = a
        .ring
        .policy()?
        .ok_or_else(|| CliError::new("BadArgument", "sign needs --policy"))?;
    let alg = a.ring.alg()?;
    let doc = read_document(&a.io.read()?, a.format)?;
    for path in &a.prime {
        let primer = read_document(&fs::read_to_string(path)?, None)?;
        compose_encrypt(&primer, &policy, &mut ring, Mode::St)?;
    }
    let body = compose_encrypt(&doc, &policy, &mut ring, a.mode.into())?;
    let msg = if a.recipient.is_empty() {
        EncryptedMessage::new(vec![], attach_digests(&body, &policy, &ring, alg)?)
    } else {
        let ids: Vec<&str> = a.recipient.iter().map(String::as_str).collect();
        let access = access_header(&doc, &policy, &ids)?;
        EncryptedMessage::new(access, attach_digests_for(&body, &policy, &ring, &ids, alg)?)
    };
    a.io.write(&format!("{msg}\n"))
}

fn verify(a: VerifyArgs) -> Result<(), CliError> {
    let ring = a.ring.ring()?;
    let view = match a.ring.policy()? {
        Some(p) => OwnershipView::Policy(p),
        None => OwnershipView::Header,
    };
    let msg: EncryptedMessage = a.io.read()?.trim_end().parse()?;
    let verdicts = verify_digests(&msg, &ring, &view, a.ring.alg()?)?;
    let mut out = String::new();
    let mut rejected = 0;
    for v in &verdicts {
        let what = match v.ordinal {
            Some(o) => format!("element {o}"),
            None => "document".to_string(),
        };
        let verdict = match v.verdict {
            Verdict::Accept => "accept",
            Verdict::Reject => {
                rejected += 1;
                "reject"
            }
            Verdict::NotCheckable => "not-checkable",
        };
        out.push_str(&format!("{what}\t{}\t{verdict}\n", v.key_id.as_deref().unwrap_or("-")));
    }
    a.io.write(&out)?;
    if rejected > 0 {
        return Err(CliError::new("Reject", format!("{rejected} digest(s) rejected")));
    }
    Ok(())
}

fn bench_row(name: &str, r: &SizeRow) -> String {
    format!(
        "{name}\t{}\t{}\t{}\t{}\t{}\t{:.3}\n",
        r.non_variable_chars,
        r.variable_chars,
        r.original,
        r.stbe,
        r.tatbe,
        r.tatbe_over_stbe()
    )
}

fn bench(a: BenchArgs) -> Result<(), CliError> {
    let key = match a.key.resolve()? {
        Some(k) => k,
        None => TenElementKey::parse(BENCH_KEY)?,
    };
    let mut out = String::from("document\tnon-variable\tvariable\toriginal\tstbe\ttatbe\ttatbe/stbe\n");
    for path in &a.files {
        let doc = read_document(&fs::read_to_string(path)?, None)?;
        out.push_str(&bench_row(&path.display().to_string(), &measure_sizes(&doc, &key)?));
    }
    if let Some(n) = a.corpus {
        let gen = DocGen::for_key(&key).ok_or_else(|| CliError::new("BadArgument", "the key cannot spell element names"))?;
        let corpus = generate_corpus(&gen, n, &mut StdRng::seed_from_u64(a.seed));
        let mut summary = String::from("\nstratum\tdocuments\ttatbe<stbe\tmean tatbe/stbe\n");
        for s in Stratum::ALL {
            let rows = corpus
                .iter()
                .filter(|d| d.stratum == s)
                .map(|d| measure_sizes(&d.stream, &key))
                .collect::<Result<Vec<_>, _>>()?;
            let shorter = rows.iter().filter(|r| r.tatbe < r.stbe).count();
            let mean = rows.iter().map(SizeRow::tatbe_over_stbe).sum::<f64>() / rows.len().max(1) as f64;
            summary.push_str(&format!("{s}\t{}\t{shorter}\t{mean:.3}\n", rows.len()));
        }
        out.push_str(&summary);
    }
    print!("{out}");
    Ok(())
}

fn runtime() -> Result<tokio::runtime::Runtime, CliError> {
    Ok(tokio::runtime::Runtime::new()?)
}

fn serve_cmd(a: ServeArgs) -> Result<(), CliError> {
    let mut config = ServerConfig {
        seed: a.seed,
        keystore: a.keyring,
        group_key: a.group_key.as_deref().map(TenElementKey::parse).transpose()?,
        ..ServerConfig::default()
    };
    for r in &a.resources {
        let (name, path) = r
            .split_once('=')
            .ok_or_else(|| CliError::new("BadArgument", format!("expected name=path, got {r:?}")))?;
        let doc = read_document(&fs::read_to_string(Path::new(path))?, None)?;
        config.resources.insert(name.to_string(), doc);
    }
    runtime()?.block_on(async {
        let running = serve(config, a.addr).await?;
        eprintln!("{PLAIN_HTTP_WARNING}");
        println!("listening on {}", running.url());
        tokio::signal::ctrl_c().await?;
        running.stop().await;
        Ok(())
    })
}

fn fetch(a: FetchArgs) -> Result<(), CliError> {
    runtime()?.block_on(async {
        eprintln!("{PLAIN_HTTP_WARNING}");
        let mut client = Client::new(&a.url, &a.peer, "server");
        if let Some(path) = &a.keyring {
            if path.exists() {
                client = client.with_store(KeyStore::load(path)?);
            }
        }
        let key = client.exchange_key().await?;
        if a.wire {
            println!("key\t{key}");
        }
        if let Some(path) = &a.keyring {
            client.store().save(path)?;
        }
        for _ in 0..a.count {
            let (msg, doc) = client.fetch(&a.resource).await?;
            if a.wire {
                println!("wire\t{msg}");
            }
            println!("{}", emit(&doc, a.format));
        }
        Ok(())
    })
}

fn scenario(a: ScenarioArgs) -> Result<(), CliError> {
    let mut config = ScenarioConfig::example();
    config.mode = a.mode.into();
    config.prime = a.prime;
    config.seed = a.seed;
    if a.fresh_keys {
        config.pinned_keys.clear();
        config.group_key = None;
    }
    if let Some(o) = a.tamper {
        let first = config.participants[0].intermediary.name.clone();
        config.participant_mut(&first).expect("declared").tamper = Some(o);
    }
    let outcome = runtime()?.block_on(run_composition_scenario(config))?;
    for w in &outcome.warnings {
        eprintln!("{w}");
    }
    let transcript = outcome.transcript.to_string();
    match &a.transcript {
        Some(p) => fs::write(p, &transcript)?,
        None => print!("{transcript}"),
    }
    for (who, verdicts) in &outcome.verdicts {
        for v in verdicts {
            let what = v.ordinal.map_or("document".to_string(), |o| format!("element {o}"));
            eprintln!("{who}\t{what}\t{:?}", v.verdict);
        }
    }
    if let Some(h) = outcome.halt {
        return Err(CliError::new(
            "Reject",
            format!("{} rejected at {:?}: {}", h.participant, h.rejected, h.reason),
        ));
    }
    if let Some(doc) = outcome.final_document {
        let line = emit_xml(&doc);
        match &a.transcript {
            Some(_) => println!("{line}"),
            None => eprintln!("{line}"),
        }
    }
    Ok(())
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Keygen(a) => keygen(a),
        Command::Tables(a) => tables(a),
        Command::Encrypt(a) => encrypt(a),
        Command::Decrypt(a) => decrypt(a),
        Command::Sign(a) => sign(a),
        Command::Verify(a) => verify(a),
        Command::Bench(a) => bench(a),
        Command::Serve(a) => serve_cmd(a),
        Command::Fetch(a) => fetch(a),
        Command::Scenario(a) => scenario(a),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}: {}", e.name, e.message);
            ExitCode::FAILURE
        }
    }
}
