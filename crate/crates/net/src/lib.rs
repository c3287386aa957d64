//! HTTP side of the codec: the "Get key" exchange, an encrypting resource
//! server with its client, and a three-party composition pipeline in which
//! every hop is a real loopback request.

mod client;
mod error;
mod intermediary;
mod scenario;
mod server;
mod transcript;

pub use client::{request_key, request_key_at, Client};
pub use error::NetError;
pub use intermediary::{spawn_intermediary, IntermediaryConfig, IntermediaryState};
pub use scenario::{run_composition_scenario, Halt, Participant, ScenarioConfig, ScenarioOutcome};
pub use server::{router, serve, Running, ServerConfig, ServerState, NO_SESSION_KEY};
pub use transcript::{Record, Transcript};

/// Printed by every entry point that starts a listener.
pub const PLAIN_HTTP_WARNING: &str =
    "warning: keys and messages travel over plain HTTP; put TLS in front of this service outside a test bench";

pub(crate) fn http_client() -> reqwest::Client {
    reqwest::Client::builder()
        .no_proxy()
        .build()
        .expect("static client configuration")
}
