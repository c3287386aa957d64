use std::collections::{BTreeMap, HashMap};
use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::{Arc, Mutex};

use axum::extract::{Path, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::post;
use axum::Router;
use rand::rngs::StdRng;
use rand::SeedableRng;
use tabula_core::keystore::SESSION_KEY_ID;
use tabula_core::{
    generate_key, KeyBounds, KeyManager, KeyReply, KeyRole, KeyStore, Mode, Session, TenElementKey, WordStream,
    GET_KEY,
};
use tokio::net::TcpListener;
use tokio::sync::oneshot;
use tokio::task::JoinHandle;

use crate::NetError;

/// Body of the 409 answer to a resource request before any key exchange.
pub const NO_SESSION_KEY: &str = "no session key";

/// Key id of group keys in the server's store.
pub(crate) const GROUP_KEY_ID: &str = "group";

#[derive(Debug, Clone)]
#[derive(Default)]
pub struct ServerConfig {
    pub resources: BTreeMap<String, WordStream>,
    /// Handed out on `/peers/{peer}/group-key`; drawn at start when unset.
    pub group_key: Option<TenElementKey>,
    pub bounds: KeyBounds,
    /// Per-peer key bounds, e.g. to pin a peer's key.
    pub peer_bounds: BTreeMap<String, KeyBounds>,
    pub seed: Option<u64>,
    pub keystore: Option<PathBuf>,
}


struct PeerSession {
    session: Session,
    sent: usize,
}

/// Shared state of a running server.
pub struct ServerState {
    keys: Mutex<KeyManager<StdRng>>,
    sessions: Mutex<HashMap<String, PeerSession>>,
    resources: BTreeMap<String, WordStream>,
    group_key: TenElementKey,
}

impl ServerState {
    pub fn new(config: ServerConfig) -> Result<ServerState, NetError> {
        let mut rng = match config.seed {
            Some(s) => StdRng::seed_from_u64(s),
            None => StdRng::from_os_rng(),
        };
        let group_key = match config.group_key {
            Some(k) => k,
            None => generate_key(&config.bounds, &mut rng).map_err(|e| NetError::Config(e.to_string()))?,
        };
        let store = match &config.keystore {
            Some(p) if p.exists() => KeyStore::load(p)?,
            _ => KeyStore::new(),
        };
        let mut keys = KeyManager::new(store, config.bounds, rng);
        for (peer, bounds) in config.peer_bounds {
            keys = keys.with_peer_bounds(&peer, bounds);
        }
        if let Some(p) = config.keystore {
            keys = keys.persist_to(p);
        }
        Ok(ServerState {
            keys: Mutex::new(keys),
            sessions: Mutex::new(HashMap::new()),
            resources: config.resources,
            group_key,
        })
    }

    pub fn group_key(&self) -> &TenElementKey {
        &self.group_key
    }

    /// Copy of the key store.
    pub fn store(&self) -> KeyStore {
        self.keys.lock().expect("poisoned").store().clone()
    }

    /// The pairwise key currently agreed with `peer`.
    pub fn peer_key(&self, peer: &str) -> Option<TenElementKey> {
        self.keys
            .lock()
            .expect("poisoned")
            .store()
            .get(peer, SESSION_KEY_ID)
            .map(|(_, k)| *k)
    }

    fn key_request(&self, peer: &str, body: &str) -> Result<Option<String>, Response> {
        let reply = self
            .keys
            .lock()
            .expect("poisoned")
            .handle_key_request(body, peer)
            .map_err(|e| error(StatusCode::INTERNAL_SERVER_ERROR, e.name(), &e.to_string()))?;
        match reply {
            KeyReply::PassThrough => Ok(None),
            KeyReply::Key(key) => {
                let session = Session::new(key)
                    .map_err(|e| error(StatusCode::INTERNAL_SERVER_ERROR, e.name(), &e.to_string()))?;
                // a new key starts a new conversation with empty tag tables
                self.sessions
                    .lock()
                    .expect("poisoned")
                    .insert(peer.to_string(), PeerSession { session, sent: 0 });
                Ok(Some(key.serialize()))
            }
        }
    }

    /// First message of a session in symbol form, later ones with the tag
    /// table; `force_st` always uses the symbol form.
    fn encrypt(&self, peer: &str, name: &str, force_st: bool) -> Response {
        let Some(doc) = self.resources.get(name) else {
            return error(StatusCode::NOT_FOUND, "NotFound", &format!("no resource {name:?}"));
        };
        let mut sessions = self.sessions.lock().expect("poisoned");
        let Some(peer_session) = sessions.get_mut(peer) else {
            return (StatusCode::CONFLICT, text_headers(), NO_SESSION_KEY).into_response();
        };
        let mode = if force_st || peer_session.sent == 0 { Mode::St } else { Mode::Tat };
        match peer_session.session.encode(doc, mode, &[]) {
            Ok(msg) => {
                peer_session.sent += 1;
                ok(msg.to_string())
            }
            Err(e) => error(StatusCode::INTERNAL_SERVER_ERROR, e.name(), &e.to_string()),
        }
    }
}

fn text_headers() -> [(header::HeaderName, &'static str); 1] {
    [(header::CONTENT_TYPE, "text/plain; charset=utf-8")]
}

fn ok(body: String) -> Response {
    (StatusCode::OK, text_headers(), body).into_response()
}

fn error(status: StatusCode, name: &str, detail: &str) -> Response {
    (status, text_headers(), format!("{name}: {detail}")).into_response()
}

async fn post_peer(State(state): State<Arc<ServerState>>, Path(peer): Path<String>, body: String) -> Response {
    match state.key_request(&peer, &body) {
        Ok(Some(key)) => ok(key),
        Ok(None) => error(StatusCode::BAD_REQUEST, "BadRequest", &format!("expected {GET_KEY:?}")),
        Err(r) => r,
    }
}

async fn post_group_key(State(state): State<Arc<ServerState>>, Path(peer): Path<String>, body: String) -> Response {
    if body != GET_KEY {
        return error(StatusCode::BAD_REQUEST, "BadRequest", &format!("expected {GET_KEY:?}"));
    }
    let key = state.group_key;
    let stored = state
        .keys
        .lock()
        .expect("poisoned")
        .set(&peer, GROUP_KEY_ID, KeyRole::Group, key);
    match stored {
        Ok(()) => ok(key.serialize()),
        Err(e) => error(StatusCode::INTERNAL_SERVER_ERROR, e.name(), &e.to_string()),
    }
}

async fn get_resource(State(state): State<Arc<ServerState>>, Path((peer, name)): Path<(String, String)>) -> Response {
    state.encrypt(&peer, &name, false)
}

async fn post_resource(
    State(state): State<Arc<ServerState>>,
    Path((peer, name)): Path<(String, String)>,
    body: String,
) -> Response {
    match state.key_request(&peer, &body) {
        Ok(Some(key)) => ok(key),
        Ok(None) if body.is_empty() => state.encrypt(&peer, &name, true),
        Ok(None) => error(StatusCode::BAD_REQUEST, "BadRequest", "expected an empty body or a key request"),
        Err(r) => r,
    }
}

pub fn router(state: Arc<ServerState>) -> Router {
    Router::new()
        .route("/peers/{peer}", post(post_peer))
        .route("/peers/{peer}/group-key", post(post_group_key))
        .route("/peers/{peer}/resources/{name}", post(post_resource).get(get_resource))
        .with_state(state)
}

/// A service listening on a loopback port; stops when dropped.
pub struct Running<S> {
    pub addr: SocketAddr,
    pub state: Arc<S>,
    shutdown: Option<oneshot::Sender<()>>,
    task: Option<JoinHandle<()>>,
}

impl<S> Running<S> {
    pub fn url(&self) -> String {
        format!("http://{}", self.addr)
    }

    pub async fn stop(mut self) {
        if let Some(tx) = self.shutdown.take() {
            let _ = tx.send(());
        }
        if let Some(task) = self.task.take() {
            let _ = task.await;
        }
    }
}

impl<S> Drop for Running<S> {
    fn drop(&mut self) {
        if let Some(tx) = self.shutdown.take() {
            let _ = tx.send(());
        }
    }
}

pub(crate) async fn spawn_router<S: Send + Sync + 'static>(
    addr: SocketAddr,
    router: Router,
    state: Arc<S>,
) -> Result<Running<S>, NetError> {
    let listener = TcpListener::bind(addr).await.map_err(|e| NetError::Bind {
        addr: addr.to_string(),
        reason: e.to_string(),
    })?;
    let addr = listener.local_addr().map_err(|e| NetError::Bind {
        addr: addr.to_string(),
        reason: e.to_string(),
    })?;
    let (tx, rx) = oneshot::channel::<()>();
    let task = tokio::spawn(async move {
        let _ = axum::serve(listener, router)
            .with_graceful_shutdown(async {
                let _ = rx.await;
            })
            .await;
    });
    Ok(Running {
        addr,
        state,
        shutdown: Some(tx),
        task: Some(task),
    })
}

/// Start the resource server on `addr` (port 0 picks a free one).
pub async fn serve(config: ServerConfig, addr: SocketAddr) -> Result<Running<ServerState>, NetError> {
    let state = Arc::new(ServerState::new(config)?);
    spawn_router(addr, router(state.clone()), state).await
}
