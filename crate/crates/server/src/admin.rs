//! Login, password changes and user administration.

use axum::extract::{Path, State};
use axum::http::StatusCode;
use axum::response::IntoResponse;
use axum::Json;
use distaf_core::access::{Action, Role};
use serde::{Deserialize, Serialize};

use crate::auth::{Caller, PendingCaller};
use crate::error::{ApiError, ApiResult};
use crate::users::{IssuedPassword, UserView};
use crate::AppState;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LoginRequest {
    pub username: String,
    pub password: String,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct LoginResponse {
    pub token: String,
    pub username: String,
    pub role: Role,
    pub must_change_password: bool,
    pub expires_in_secs: u64,
}

pub async fn login(
    State(state): State<AppState>,
    Json(req): Json<LoginRequest>,
) -> ApiResult<Json<LoginResponse>> {
    let user = state
        .users
        .authenticate(&req.username, &req.password)
        .ok_or_else(|| ApiError::new(StatusCode::UNAUTHORIZED, "invalid credentials"))?;
    let token = state.sessions.issue(&user.username);
    Ok(Json(LoginResponse {
        token,
        username: user.username,
        role: user.role,
        must_change_password: user.must_change_password,
        expires_in_secs: state.sessions.ttl().as_secs(),
    }))
}

pub async fn logout(
    State(state): State<AppState>,
    PendingCaller(caller): PendingCaller,
) -> StatusCode {
    state.sessions.revoke(&caller.token);
    StatusCode::NO_CONTENT
}

pub async fn me(PendingCaller(caller): PendingCaller) -> Json<UserView> {
    Json(UserView::from(&caller.user))
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PasswordChange {
    pub current_password: String,
    pub new_password: String,
}

pub async fn change_password(
    State(state): State<AppState>,
    PendingCaller(caller): PendingCaller,
    Json(req): Json<PasswordChange>,
) -> ApiResult<Json<UserView>> {
    let view = state.users.change_password(
        &caller.user.username,
        &req.current_password,
        &req.new_password,
    )?;
    Ok(Json(view))
}

pub async fn list_users(
    State(state): State<AppState>,
    caller: Caller,
) -> ApiResult<Json<Vec<UserView>>> {
    caller.require(Action::ManageUsers)?;
    Ok(Json(state.users.list()))
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NewUser {
    pub username: String,
    pub role: Role,
}

pub async fn create_user(
    State(state): State<AppState>,
    caller: Caller,
    Json(req): Json<NewUser>,
) -> ApiResult<impl IntoResponse> {
    caller.require(Action::ManageUsers)?;
    let issued: IssuedPassword = state.users.create(&req.username, req.role)?;
    Ok((StatusCode::CREATED, Json(issued)))
}

pub async fn disable_user(
    State(state): State<AppState>,
    caller: Caller,
    Path(name): Path<String>,
) -> ApiResult<Json<UserView>> {
    caller.require(Action::ManageUsers)?;
    let view = state.users.disable(&name)?;
    state.sessions.revoke_user(&name);
    Ok(Json(view))
}

pub async fn regenerate_password(
    State(state): State<AppState>,
    caller: Caller,
    Path(name): Path<String>,
) -> ApiResult<Json<IssuedPassword>> {
    caller.require(Action::ManageUsers)?;
    let issued = state.users.regenerate_password(&name)?;
    state.sessions.revoke_user(&name);
    Ok(Json(issued))
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RoleChange {
    pub role: Role,
}

pub async fn set_role(
    State(state): State<AppState>,
    caller: Caller,
    Path(name): Path<String>,
    Json(req): Json<RoleChange>,
) -> ApiResult<Json<UserView>> {
    caller.require(Action::ManageUsers)?;
    Ok(Json(state.users.set_role(&name, req.role)?))
}
