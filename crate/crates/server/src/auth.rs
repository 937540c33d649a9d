//! Request authentication and the assessment visibility gate.

use axum::extract::FromRequestParts;
use axum::http::header::AUTHORIZATION;
use axum::http::request::Parts;
use distaf_core::access::{authz_check, Action, Role};
use distaf_core::store::StoreError;
use distaf_core::{AssessmentState, AssessmentStatus};

use crate::error::{ApiError, ApiResult};
use crate::users::User;
use crate::AppState;

fn bearer(parts: &Parts) -> Option<&str> {
    let value = parts.headers.get(AUTHORIZATION)?.to_str().ok()?;
    let token = value.strip_prefix("Bearer ")?.trim();
    (!token.is_empty()).then_some(token)
}

fn authenticate(parts: &Parts, state: &AppState) -> ApiResult<Caller> {
    let token = bearer(parts).ok_or_else(ApiError::unauthorized)?;
    let username = state
        .sessions
        .resolve(token)
        .ok_or_else(ApiError::unauthorized)?;
    // the role and enabled flag are read fresh on every request
    let user = state
        .users
        .get(&username)
        .filter(|u| u.enabled)
        .ok_or_else(|| {
            state.sessions.revoke(token);
            ApiError::unauthorized()
        })?;
    Ok(Caller {
        user,
        token: token.to_string(),
    })
}

/// An authenticated user who has replaced any temporary password.
#[derive(Debug, Clone)]
pub struct Caller {
    pub user: User,
    pub token: String,
}

impl Caller {
    pub fn role(&self) -> Role {
        self.user.role
    }

    pub fn may(&self, action: Action, status: AssessmentStatus) -> bool {
        authz_check(self.role(), action, status).allowed
    }

    /// Fails with 403 unless the role may perform `action` regardless of any
    /// assessment (user management, creation).
    pub fn require(&self, action: Action) -> ApiResult<()> {
        let decision = authz_check(self.role(), action, AssessmentStatus::Draft);
        if decision.allowed {
            Ok(())
        } else {
            Err(ApiError::forbidden(decision.reason))
        }
    }

    /// Loads an assessment the caller may see and act on.
    ///
    /// Assessments the caller cannot read are reported exactly like missing
    /// ones, so their existence does not leak.
    pub fn assessment(
        &self,
        state: &AppState,
        id: &str,
        action: Action,
    ) -> ApiResult<AssessmentState> {
        let hidden = || ApiError::not_found(format!("assessment `{id}`"));
        let a = match state.store.get(id) {
            Ok(a) => a,
            Err(StoreError::UnknownAssessment(_)) => return Err(hidden()),
            Err(e) => return Err(e.into()),
        };
        if !self.may(Action::ReadAssessment, a.status) {
            return Err(hidden());
        }
        let decision = authz_check(self.role(), action, a.status);
        if !decision.allowed {
            return Err(ApiError::forbidden(decision.reason));
        }
        Ok(a)
    }
}

impl FromRequestParts<AppState> for Caller {
    type Rejection = ApiError;

    async fn from_request_parts(
        parts: &mut Parts,
        state: &AppState,
    ) -> Result<Self, Self::Rejection> {
        let caller = authenticate(parts, state)?;
        if caller.user.must_change_password {
            return Err(ApiError::forbidden(
                "password change required: POST /password first",
            ));
        }
        Ok(caller)
    }
}

/// Authenticated, possibly still on a temporary password. Only the password
/// change and session endpoints accept this.
#[derive(Debug, Clone)]
pub struct PendingCaller(pub Caller);

impl FromRequestParts<AppState> for PendingCaller {
    type Rejection = ApiError;

    async fn from_request_parts(
        parts: &mut Parts,
        state: &AppState,
    ) -> Result<Self, Self::Rejection> {
        authenticate(parts, state).map(PendingCaller)
    }
}
