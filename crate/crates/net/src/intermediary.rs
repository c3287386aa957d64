use std::collections::{BTreeMap, HashMap};
use std::net::SocketAddr;
use std::sync::{Arc, Mutex};

use axum::extract::{Query, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::post;
use axum::Router;
use tabula_core::composition::{resign_digests, PartialStream};
use tabula_core::{compose_decrypt, CompositionError, DigestAlgorithm, EncryptedMessage, KeyRing, Mode, OwnershipView, WordKind};

use crate::server::{spawn_router, Running};
use crate::NetError;

/// What an intermediary does to the elements it is sent.
#[derive(Debug, Clone, Default)]
pub struct IntermediaryConfig {
    pub name: String,
    /// New text per element ordinal; only elements in the access header are
    /// touched.
    pub edits: BTreeMap<usize, String>,
    /// Alter the ciphertext of this element's text although its key is not
    /// held: a dishonest intermediary.
    pub tamper: Option<usize>,
    pub algorithm: DigestAlgorithm,
}

pub struct IntermediaryState {
    pub config: IntermediaryConfig,
    ring: Mutex<KeyRing>,
}

impl IntermediaryState {
    pub fn ring(&self) -> KeyRing {
        self.ring.lock().expect("poisoned").clone()
    }

    /// Install the keys obtained from the exchange.
    pub fn set_ring(&self, ring: KeyRing) {
        *self.ring.lock().expect("poisoned") = ring;
    }

    /// Decode what the keys allow, apply the edits, re-sign and return the
    /// message to send back.
    pub fn process(&self, msg: &EncryptedMessage, mode: Mode) -> Result<EncryptedMessage, CompositionError> {
        let mut ring = self.ring.lock().expect("poisoned");
        let mut partial = compose_decrypt(msg, &mut ring, &OwnershipView::Header, mode)?;
        for (&ord, text) in &self.config.edits {
            if msg.access.contains(&ord) {
                partial.set_variable(ord, text, &ring)?;
            }
        }
        if let Some(ord) = self.config.tamper {
            tamper(&mut partial, ord);
        }
        let words = resign_digests(&partial.to_message(), &ring, &OwnershipView::Header, self.config.algorithm)?;
        Ok(EncryptedMessage::new(msg.access.clone(), words))
    }
}

/// Bump the last digit of an element's text word.
fn tamper(partial: &mut PartialStream, ord: usize) {
    if let Some(w) = partial
        .words
        .iter_mut()
        .find(|w| w.ordinal == ord && w.kind == WordKind::Variable)
    {
        let mut bytes = w.raw.clone().into_bytes();
        if let Some(last) = bytes.last_mut() {
            *last = b'0' + (*last - b'0' + 1) % 10;
        }
        w.raw = String::from_utf8(bytes).expect("digits");
    }
}

fn reply(status: StatusCode, body: String) -> Response {
    (status, [(header::CONTENT_TYPE, "text/plain; charset=utf-8")], body).into_response()
}

async fn process(
    State(state): State<Arc<IntermediaryState>>,
    Query(query): Query<HashMap<String, String>>,
    body: String,
) -> Response {
    let mode = match query.get("mode").map(|m| m.parse::<Mode>()) {
        None => Mode::St,
        Some(Ok(m)) => m,
        Some(Err(e)) => return reply(StatusCode::BAD_REQUEST, format!("BadRequest: {e}")),
    };
    let msg: EncryptedMessage = match body.parse() {
        Ok(m) => m,
        Err(e) => return reply(StatusCode::BAD_REQUEST, format!("MalformedMessage: {e}")),
    };
    match state.process(&msg, mode) {
        Ok(out) => reply(StatusCode::OK, out.to_string()),
        Err(e) => reply(StatusCode::UNPROCESSABLE_ENTITY, format!("{}: {e}", e.name())),
    }
}

/// Start an intermediary service; its keys are installed afterwards with
/// [`IntermediaryState::set_ring`].
pub async fn spawn_intermediary(
    config: IntermediaryConfig,
    addr: SocketAddr,
) -> Result<Running<IntermediaryState>, NetError> {
    let state = Arc::new(IntermediaryState {
        config,
        ring: Mutex::new(KeyRing::new()),
    });
    let router = Router::new().route("/process", post(process)).with_state(state.clone());
    spawn_router(addr, router, state).await
}
