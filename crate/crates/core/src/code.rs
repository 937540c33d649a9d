//! Metric identifiers of the form `<PILLAR>.<MECH>.<D|O><index>`, e.g. `S.AC.D8`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

/// Longest allowed pillar or mechanism token.
pub const MAX_TOKEN_LEN: usize = 8;

/// Lifecycle phase a metric is assessed in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Phase {
    Design,
    Operational,
}

impl Phase {
    pub const ALL: [Phase; 2] = [Phase::Design, Phase::Operational];

    pub fn letter(self) -> char {
        match self {
            Phase::Design => 'D',
            Phase::Operational => 'O',
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Phase::Design => "design",
            Phase::Operational => "operational",
        }
    }
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Phase {
    type Err = CodeError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "design" | "d" => Ok(Phase::Design),
            "operational" | "o" => Ok(Phase::Operational),
            _ => Err(CodeError::UnknownPhase(s.to_string())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CodeError {
    #[error("malformed metric code `{input}`: {reason}")]
    MalformedCode { input: String, reason: &'static str },
    #[error("malformed mechanism id `{input}`: {reason}")]
    MalformedMechanismId { input: String, reason: &'static str },
    #[error("unknown phase `{0}` (expected design or operational)")]
    UnknownPhase(String),
}

/// Checks a pillar or mechanism token: 1-8 uppercase ASCII letters.
pub fn is_valid_token(token: &str) -> bool {
    !token.is_empty()
        && token.len() <= MAX_TOKEN_LEN
        && token.bytes().all(|b| b.is_ascii_uppercase())
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct MetricCode {
    pillar: String,
    mechanism: String,
    phase: Phase,
    index: u32,
}

impl MetricCode {
    pub fn new(
        pillar: impl Into<String>,
        mechanism: impl Into<String>,
        phase: Phase,
        index: u32,
    ) -> Result<Self, CodeError> {
        let pillar = pillar.into();
        let mechanism = mechanism.into();
        let code = Self {
            pillar,
            mechanism,
            phase,
            index,
        };
        let malformed = |reason| CodeError::MalformedCode {
            input: code.to_string(),
            reason,
        };
        if !is_valid_token(&code.pillar) {
            return Err(malformed("pillar token must be 1-8 uppercase letters"));
        }
        if !is_valid_token(&code.mechanism) {
            return Err(malformed("mechanism token must be 1-8 uppercase letters"));
        }
        if code.index == 0 {
            return Err(malformed("index must be at least 1"));
        }
        Ok(code)
    }

    pub fn pillar_code(&self) -> &str {
        &self.pillar
    }

    pub fn mechanism_code(&self) -> &str {
        &self.mechanism
    }

    pub fn phase(&self) -> Phase {
        self.phase
    }

    pub fn index(&self) -> u32 {
        self.index
    }

    /// The qualified id of the mechanism this metric belongs to.
    pub fn mechanism_id(&self) -> MechanismId {
        MechanismId {
            pillar: self.pillar.clone(),
            mechanism: self.mechanism.clone(),
        }
    }
}

/// Parses a metric code. Input is trimmed and uppercased first.
pub fn parse_metric_code(text: &str) -> Result<MetricCode, CodeError> {
    let normalized = text.trim().to_ascii_uppercase();
    let malformed = |reason| CodeError::MalformedCode {
        input: text.to_string(),
        reason,
    };

    let segments: Vec<&str> = normalized.split('.').collect();
    let [pillar, mechanism, tail] = segments.as_slice() else {
        return Err(malformed("expected three dot-separated segments"));
    };
    if !is_valid_token(pillar) {
        return Err(malformed("pillar token must be 1-8 uppercase letters"));
    }
    if !is_valid_token(mechanism) {
        return Err(malformed("mechanism token must be 1-8 uppercase letters"));
    }
    let mut chars = tail.chars();
    let phase = match chars.next() {
        Some('D') => Phase::Design,
        Some('O') => Phase::Operational,
        Some(_) => return Err(malformed("phase letter must be D or O")),
        None => return Err(malformed("missing phase and index")),
    };
    let digits = chars.as_str();
    if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
        return Err(malformed("index must be a decimal number"));
    }
    if digits.starts_with('0') {
        return Err(malformed("index must be at least 1 without leading zeros"));
    }
    let index: u32 = digits
        .parse()
        .map_err(|_| malformed("index out of range"))?;
    Ok(MetricCode {
        pillar: pillar.to_string(),
        mechanism: mechanism.to_string(),
        phase,
        index,
    })
}

impl FromStr for MetricCode {
    type Err = CodeError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_metric_code(s)
    }
}

impl fmt::Display for MetricCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}.{}.{}{}",
            self.pillar,
            self.mechanism,
            self.phase.letter(),
            self.index
        )
    }
}

impl Serialize for MetricCode {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for MetricCode {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let text = String::deserialize(deserializer)?;
        parse_metric_code(&text).map_err(serde::de::Error::custom)
    }
}

/// Pillar-qualified mechanism identifier, written `<PILLAR>.<MECH>` (e.g. `S.AC`).
///
/// Mechanism tokens are only unique within a pillar, so everything keyed by
/// mechanism (exclusions, scorecards, answers) uses this form.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct MechanismId {
    pillar: String,
    mechanism: String,
}

impl MechanismId {
    pub fn new(pillar: impl Into<String>, mechanism: impl Into<String>) -> Result<Self, CodeError> {
        let id = Self {
            pillar: pillar.into(),
            mechanism: mechanism.into(),
        };
        if !is_valid_token(&id.pillar) || !is_valid_token(&id.mechanism) {
            return Err(CodeError::MalformedMechanismId {
                input: id.to_string(),
                reason: "tokens must be 1-8 uppercase letters",
            });
        }
        Ok(id)
    }

    /// Builds an id from template tokens without re-checking them; validation
    /// reports bad tokens separately.
    pub(crate) fn unchecked(pillar: &str, mechanism: &str) -> Self {
        Self {
            pillar: pillar.to_string(),
            mechanism: mechanism.to_string(),
        }
    }

    pub fn pillar_code(&self) -> &str {
        &self.pillar
    }

    pub fn mechanism_code(&self) -> &str {
        &self.mechanism
    }
}

impl FromStr for MechanismId {
    type Err = CodeError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let normalized = s.trim().to_ascii_uppercase();
        match normalized.split_once('.') {
            Some((p, m)) if !m.contains('.') => MechanismId::new(p, m),
            _ => Err(CodeError::MalformedMechanismId {
                input: s.to_string(),
                reason: "expected <PILLAR>.<MECH>",
            }),
        }
    }
}

impl fmt::Display for MechanismId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}.{}", self.pillar, self.mechanism)
    }
}

impl Serialize for MechanismId {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for MechanismId {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let text = String::deserialize(deserializer)?;
        text.parse().map_err(serde::de::Error::custom)
    }
}
