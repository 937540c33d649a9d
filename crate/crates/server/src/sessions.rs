//! Bearer tokens issued at login.

use std::collections::HashMap;
use std::time::{Duration, Instant};

use parking_lot::RwLock;
use rand::RngCore;

#[derive(Debug, Clone)]
struct Session {
    username: String,
    expires: Instant,
}

pub struct Sessions {
    ttl: Duration,
    by_token: RwLock<HashMap<String, Session>>,
}

impl Sessions {
    pub fn new(ttl: Duration) -> Self {
        Self {
            ttl,
            by_token: RwLock::new(HashMap::new()),
        }
    }

    pub fn ttl(&self) -> Duration {
        self.ttl
    }

    pub fn issue(&self, username: &str) -> String {
        let mut bytes = [0u8; 32];
        rand::rng().fill_bytes(&mut bytes);
        let token = hex::encode(bytes);
        let now = Instant::now();
        let mut sessions = self.by_token.write();
        sessions.retain(|_, s| s.expires > now);
        sessions.insert(
            token.clone(),
            Session {
                username: username.to_string(),
                expires: now + self.ttl,
            },
        );
        token
    }

    /// The username behind a live token.
    pub fn resolve(&self, token: &str) -> Option<String> {
        let sessions = self.by_token.read();
        sessions
            .get(token)
            .filter(|s| s.expires > Instant::now())
            .map(|s| s.username.clone())
    }

    pub fn revoke(&self, token: &str) {
        self.by_token.write().remove(token);
    }

    pub fn revoke_user(&self, username: &str) {
        self.by_token.write().retain(|_, s| s.username != username);
    }
}
