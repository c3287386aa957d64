use tabula_core::keystore::SESSION_KEY_ID;
use tabula_core::{EncryptedMessage, KeyRole, KeyStore, Mode, Session, TenElementKey, WordStream, GET_KEY};

use crate::{http_client, NetError};

async fn post_text(http: &reqwest::Client, url: &str, body: &str) -> Result<String, NetError> {
    let resp = http
        .post(url)
        .header(reqwest::header::CONTENT_TYPE, "text/plain")
        .body(body.to_string())
        .send()
        .await?;
    read(resp).await
}

async fn read(resp: reqwest::Response) -> Result<String, NetError> {
    let status = resp.status();
    let body = resp.text().await?;
    if status.is_success() {
        Ok(body)
    } else {
        Err(NetError::Status {
            status: status.as_u16(),
            body,
        })
    }
}

/// POST `"Get key"` to `url` and parse the answer (`request_key`). Nothing is
/// stored; see [`request_key`] for the storing variant.
pub async fn request_key_at(http: &reqwest::Client, url: &str) -> Result<TenElementKey, NetError> {
    let body = post_text(http, url, GET_KEY).await?;
    TenElementKey::parse(body.trim_end_matches('\n')).map_err(|e| NetError::Malformed(e.to_string()))
}

/// Request a key and store it under (`peer`, `key_id`) only if the answer
/// parses.
pub async fn request_key(
    url: &str,
    store: &mut KeyStore,
    peer: &str,
    key_id: &str,
    role: KeyRole,
) -> Result<TenElementKey, NetError> {
    let key = request_key_at(&http_client(), url).await?;
    store.insert(peer, key_id, role, key);
    Ok(key)
}

/// Client of one resource server.
pub struct Client {
    http: reqwest::Client,
    base: String,
    peer: String,
    server_id: String,
    store: KeyStore,
    session: Option<Session>,
    received: usize,
}

impl Client {
    /// `peer` is the id this client uses in request paths; `server_id` the
    /// id its key store files the server's keys under.
    pub fn new(base: &str, peer: &str, server_id: &str) -> Client {
        Client {
            http: http_client(),
            base: base.trim_end_matches('/').to_string(),
            peer: peer.to_string(),
            server_id: server_id.to_string(),
            store: KeyStore::new(),
            session: None,
            received: 0,
        }
    }

    pub fn with_store(mut self, store: KeyStore) -> Client {
        self.store = store;
        self
    }

    pub fn store(&self) -> &KeyStore {
        &self.store
    }

    pub fn session(&self) -> Option<&Session> {
        self.session.as_ref()
    }

    pub fn peer_url(&self) -> String {
        format!("{}/peers/{}", self.base, self.peer)
    }

    pub fn resource_url(&self, name: &str) -> String {
        format!("{}/resources/{}", self.peer_url(), name)
    }

    pub async fn exchange_key(&mut self) -> Result<TenElementKey, NetError> {
        let key = request_key_at(&self.http, &self.peer_url()).await?;
        self.install(key)?;
        Ok(key)
    }

    pub async fn exchange_group_key(&mut self) -> Result<TenElementKey, NetError> {
        let url = format!("{}/group-key", self.peer_url());
        let key = request_key_at(&self.http, &url).await?;
        self.store.insert(&self.server_id, "group", KeyRole::Group, key);
        Ok(key)
    }

    fn install(&mut self, key: TenElementKey) -> Result<(), NetError> {
        let session = Session::new(key).map_err(|e| NetError::Malformed(e.to_string()))?;
        self.store.insert(&self.server_id, SESSION_KEY_ID, KeyRole::Pairwise, key);
        self.session = Some(session);
        self.received = 0;
        Ok(())
    }

    fn decode(&mut self, body: &str, mode: Mode) -> Result<(EncryptedMessage, WordStream), NetError> {
        let session = self
            .session
            .as_mut()
            .ok_or_else(|| NetError::BadRequest("no key exchanged yet".into()))?;
        let msg: EncryptedMessage = body.parse().map_err(|e| NetError::Malformed(format!("{e}")))?;
        let doc = session.decode(&msg, mode)?;
        self.received += 1;
        Ok((msg, doc))
    }

    /// GET a resource: the first message of a session is in symbol form,
    /// the server switches to the tag table afterwards and so does this side.
    pub async fn fetch(&mut self, name: &str) -> Result<(EncryptedMessage, WordStream), NetError> {
        let body = read(self.http.get(self.resource_url(name)).send().await?).await?;
        let mode = if self.received == 0 { Mode::St } else { Mode::Tat };
        self.decode(&body, mode)
    }

    /// Empty POST: always a symbol-form representation.
    pub async fn post_empty(&mut self, name: &str) -> Result<(EncryptedMessage, WordStream), NetError> {
        let body = post_text(&self.http, &self.resource_url(name), "").await?;
        self.decode(&body, Mode::St)
    }
}
