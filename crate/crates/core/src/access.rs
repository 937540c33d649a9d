//! The role model: who may do what to an assessment in a given status.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::assessment::AssessmentStatus;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    /// Manages user accounts; no assessment powers beyond reading public ones.
    Admin,
    /// Conducts assessments.
    Assessor,
    /// Read-only consumer of published results.
    External,
}

impl Role {
    pub const ALL: [Role; 3] = [Role::Admin, Role::Assessor, Role::External];

    pub fn as_str(self) -> &'static str {
        match self {
            Role::Admin => "admin",
            Role::Assessor => "assessor",
            Role::External => "external",
        }
    }
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Role {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "admin" => Ok(Role::Admin),
            "assessor" => Ok(Role::Assessor),
            "external" => Ok(Role::External),
            other => Err(format!("unknown role `{other}`")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Action {
    ManageUsers,
    CreateAssessment,
    EditAssessment,
    ReadAssessment,
    Compare,
    Export,
}

impl Action {
    pub const ALL: [Action; 6] = [
        Action::ManageUsers,
        Action::CreateAssessment,
        Action::EditAssessment,
        Action::ReadAssessment,
        Action::Compare,
        Action::Export,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Action::ManageUsers => "manage_users",
            Action::CreateAssessment => "create_assessment",
            Action::EditAssessment => "edit_assessment",
            Action::ReadAssessment => "read_assessment",
            Action::Compare => "compare",
            Action::Export => "export",
        }
    }
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AuthzDecision {
    pub allowed: bool,
    pub reason: String,
}

impl AuthzDecision {
    fn allow(reason: impl Into<String>) -> Self {
        Self {
            allowed: true,
            reason: reason.into(),
        }
    }

    fn deny(reason: impl Into<String>) -> Self {
        Self {
            allowed: false,
            reason: reason.into(),
        }
    }
}

/// Decides whether `role` may perform `action` on an assessment in `status`.
///
/// For actions that do not target an assessment (user management, creation)
/// the status is ignored.
pub fn authz_check(role: Role, action: Action, status: AssessmentStatus) -> AuthzDecision {
    use Action::*;
    use AssessmentStatus::Public;
    match (role, action) {
        (Role::Admin, ManageUsers) => AuthzDecision::allow("admins manage users"),
        (Role::Admin, ReadAssessment) if status == Public => {
            AuthzDecision::allow("public assessments are readable by every role")
        }
        (Role::Admin, _) => AuthzDecision::deny(format!("admins cannot {action}")),

        (Role::Assessor, ManageUsers) => AuthzDecision::deny("only admins manage users"),
        (Role::Assessor, _) => AuthzDecision::allow(format!("assessors may {action}")),

        (Role::External, ReadAssessment | Export) if status == Public => {
            AuthzDecision::allow("externals have read-only access to public assessments")
        }
        (Role::External, ReadAssessment | Export) => AuthzDecision::deny(format!(
            "{status} assessments are visible to assessors only"
        )),
        (Role::External, _) => AuthzDecision::deny(format!("externals cannot {action}")),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn examples() {
        assert!(
            !authz_check(
                Role::External,
                Action::ReadAssessment,
                AssessmentStatus::Private
            )
            .allowed
        );
        assert!(!authz_check(Role::External, Action::Compare, AssessmentStatus::Public).allowed);
        assert!(
            authz_check(
                Role::Assessor,
                Action::EditAssessment,
                AssessmentStatus::Draft
            )
            .allowed
        );
        assert!(
            authz_check(
                Role::Admin,
                Action::ReadAssessment,
                AssessmentStatus::Public
            )
            .allowed
        );
        assert!(!authz_check(Role::Admin, Action::ReadAssessment, AssessmentStatus::Draft).allowed);
    }

    #[test]
    fn role_names_round_trip() {
        for role in Role::ALL {
            assert_eq!(role.as_str().parse::<Role>().unwrap(), role);
        }
    }
}
