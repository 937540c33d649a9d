//! User accounts: salted password digests, temporary passwords, and the
//! on-disk user table. All mutations go through one writer lock.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use argon2::password_hash::rand_core::OsRng;
use argon2::password_hash::{PasswordHash, PasswordHasher, PasswordVerifier, SaltString};
use argon2::Argon2;
use distaf_core::access::Role;
use parking_lot::Mutex;
use rand::distr::{Alphanumeric, SampleString};
use serde::{Deserialize, Serialize};
use tempfile::NamedTempFile;
use thiserror::Error;

pub const MIN_PASSWORD_LEN: usize = 8;
const TEMPORARY_PASSWORD_LEN: usize = 16;

#[derive(Debug, Error)]
pub enum UserError {
    #[error("user `{0}` already exists")]
    DuplicateUsername(String),
    #[error("unknown user `{0}`")]
    UnknownUser(String),
    #[error("invalid username `{0}`: use 1-64 letters, digits, '.', '_' or '-'")]
    InvalidUsername(String),
    #[error("passwords must be at least {MIN_PASSWORD_LEN} characters")]
    WeakPassword,
    #[error("current password is incorrect")]
    WrongPassword,
    #[error("an admin already exists")]
    AdminExists,
    #[error("password hashing failed: {0}")]
    Hash(String),
    #[error("user table {path}: {message}")]
    Storage { path: PathBuf, message: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct User {
    pub username: String,
    pub role: Role,
    /// PHC string: algorithm, parameters, salt and digest.
    pub credential: String,
    pub enabled: bool,
    pub must_change_password: bool,
}

/// What the API shows of a user.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct UserView {
    pub username: String,
    pub role: Role,
    pub enabled: bool,
    pub must_change_password: bool,
}

impl From<&User> for UserView {
    fn from(u: &User) -> Self {
        Self {
            username: u.username.clone(),
            role: u.role,
            enabled: u.enabled,
            must_change_password: u.must_change_password,
        }
    }
}

/// A user together with a freshly issued temporary password.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IssuedPassword {
    pub user: UserView,
    pub temporary_password: String,
}

fn hash(password: &str) -> Result<String, UserError> {
    let salt = SaltString::generate(&mut OsRng);
    Argon2::default()
        .hash_password(password.as_bytes(), &salt)
        .map(|h| h.to_string())
        .map_err(|e| UserError::Hash(e.to_string()))
}

fn verify(password: &str, credential: &str) -> bool {
    PasswordHash::new(credential)
        .map(|h| {
            Argon2::default()
                .verify_password(password.as_bytes(), &h)
                .is_ok()
        })
        .unwrap_or(false)
}

fn temporary_password() -> String {
    Alphanumeric.sample_string(&mut rand::rng(), TEMPORARY_PASSWORD_LEN)
}

fn valid_username(name: &str) -> bool {
    (1..=64).contains(&name.len())
        && name
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || matches!(c, '.' | '_' | '-'))
}

pub struct UserStore {
    path: Option<PathBuf>,
    users: Mutex<BTreeMap<String, User>>,
}

impl UserStore {
    pub fn in_memory() -> Self {
        Self {
            path: None,
            users: Mutex::new(BTreeMap::new()),
        }
    }

    /// Loads `path`, or starts empty if it does not exist yet.
    pub fn open(path: &Path) -> Result<Self, UserError> {
        let storage = |e: &dyn ToString| UserError::Storage {
            path: path.to_path_buf(),
            message: e.to_string(),
        };
        let users = if path.exists() {
            let text = fs::read_to_string(path).map_err(|e| storage(&e))?;
            let list: Vec<User> = serde_json::from_str(&text).map_err(|e| storage(&e))?;
            list.into_iter().map(|u| (u.username.clone(), u)).collect()
        } else {
            BTreeMap::new()
        };
        Ok(Self {
            path: Some(path.to_path_buf()),
            users: Mutex::new(users),
        })
    }

    fn persist(&self, users: &BTreeMap<String, User>) -> Result<(), UserError> {
        let Some(path) = &self.path else {
            return Ok(());
        };
        let storage = |e: &dyn ToString| UserError::Storage {
            path: path.clone(),
            message: e.to_string(),
        };
        let dir = path
            .parent()
            .filter(|d| !d.as_os_str().is_empty())
            .unwrap_or(Path::new("."));
        fs::create_dir_all(dir).map_err(|e| storage(&e))?;
        let list: Vec<&User> = users.values().collect();
        let mut json = serde_json::to_vec_pretty(&list).map_err(|e| storage(&e))?;
        json.push(b'\n');
        let mut tmp = NamedTempFile::new_in(dir).map_err(|e| storage(&e))?;
        tmp.write_all(&json).map_err(|e| storage(&e))?;
        tmp.as_file().sync_all().map_err(|e| storage(&e))?;
        tmp.persist(path).map_err(|e| storage(&e.error))?;
        Ok(())
    }

    /// Runs `f` on the table under the writer lock and persists the result.
    /// Nothing changes if `f` or the write fails.
    fn update<T>(
        &self,
        f: impl FnOnce(&mut BTreeMap<String, User>) -> Result<T, UserError>,
    ) -> Result<T, UserError> {
        let mut users = self.users.lock();
        let mut next = users.clone();
        let out = f(&mut next)?;
        self.persist(&next)?;
        *users = next;
        Ok(out)
    }

    pub fn get(&self, username: &str) -> Option<User> {
        self.users.lock().get(username).cloned()
    }

    pub fn list(&self) -> Vec<UserView> {
        self.users.lock().values().map(UserView::from).collect()
    }

    pub fn is_empty(&self) -> bool {
        self.users.lock().is_empty()
    }

    /// Checks a login. Disabled and unknown users never authenticate.
    pub fn authenticate(&self, username: &str, password: &str) -> Option<User> {
        let user = self.get(username)?;
        (user.enabled && verify(password, &user.credential)).then_some(user)
    }

    /// Creates a user with a temporary password that must be changed on
    /// first login.
    pub fn create(&self, username: &str, role: Role) -> Result<IssuedPassword, UserError> {
        if !valid_username(username) {
            return Err(UserError::InvalidUsername(username.to_string()));
        }
        let password = temporary_password();
        let credential = hash(&password)?;
        self.update(|users| {
            if users.contains_key(username) {
                return Err(UserError::DuplicateUsername(username.to_string()));
            }
            let user = User {
                username: username.to_string(),
                role,
                credential,
                enabled: true,
                must_change_password: true,
            };
            let view = UserView::from(&user);
            users.insert(username.to_string(), user);
            Ok(IssuedPassword {
                user: view,
                temporary_password: password,
            })
        })
    }

    /// Seeds the first admin. Refuses once any admin exists.
    pub fn init_admin(&self, username: &str) -> Result<IssuedPassword, UserError> {
        if self.users.lock().values().any(|u| u.role == Role::Admin) {
            return Err(UserError::AdminExists);
        }
        self.create(username, Role::Admin)
    }

    pub fn disable(&self, username: &str) -> Result<UserView, UserError> {
        self.modify(username, |u| u.enabled = false)
    }

    pub fn set_role(&self, username: &str, role: Role) -> Result<UserView, UserError> {
        self.modify(username, |u| u.role = role)
    }

    /// Issues a new temporary password.
    pub fn regenerate_password(&self, username: &str) -> Result<IssuedPassword, UserError> {
        let password = temporary_password();
        let credential = hash(&password)?;
        let user = self.modify(username, |u| {
            u.credential = credential;
            u.must_change_password = true;
        })?;
        Ok(IssuedPassword {
            user,
            temporary_password: password,
        })
    }

    /// The user's own password change; clears the temporary flag.
    pub fn change_password(
        &self,
        username: &str,
        current: &str,
        new: &str,
    ) -> Result<UserView, UserError> {
        if new.chars().count() < MIN_PASSWORD_LEN {
            return Err(UserError::WeakPassword);
        }
        let user = self
            .get(username)
            .ok_or_else(|| UserError::UnknownUser(username.to_string()))?;
        if !verify(current, &user.credential) {
            return Err(UserError::WrongPassword);
        }
        let credential = hash(new)?;
        self.modify(username, |u| {
            u.credential = credential;
            u.must_change_password = false;
        })
    }

    fn modify(&self, username: &str, f: impl FnOnce(&mut User)) -> Result<UserView, UserError> {
        self.update(|users| {
            let user = users
                .get_mut(username)
                .ok_or_else(|| UserError::UnknownUser(username.to_string()))?;
            f(user);
            Ok(UserView::from(&*user))
        })
    }
}
