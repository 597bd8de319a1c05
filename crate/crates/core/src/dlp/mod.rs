//! Sensitivity policy, verdicts and audit logging.
//!
//! A predicted category is mapped to a [`SensitivityLevel`], combined with
//! the [`TransferContext`] of the data movement, and run through an ordered
//! first-match rule table to choose a remedial [`Action`]. The engine only
//! decides; enforcing an action (encrypting, quarantining, ...) is the
//! caller's job.

mod audit;
mod policy;
mod scan;

use std::fmt;
use std::str::FromStr;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

pub use audit::{read_audit_log, AuditLog};
pub use policy::{decide, load_policy, MatchedRule, PolicyError, PolicyRule, PolicyTable, Verdict};
pub use scan::{scan, ContextTemplate, ScanError, ScanReport};

/// Error for a token outside one of the closed enumerations below.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UnknownToken {
    pub kind: &'static str,
    pub token: String,
}

impl fmt::Display for UnknownToken {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "unknown {} {:?}", self.kind, self.token)
    }
}

impl std::error::Error for UnknownToken {}

fn normalize_token(s: &str) -> String {
    s.chars()
        .filter(|c| !matches!(c, '_' | '-' | ' '))
        .flat_map(char::to_lowercase)
        .collect()
}

/// Closed enumerations with a canonical spelling; parsing ignores case,
/// `_`, `-` and spaces.
macro_rules! token_enum {
    ($(#[$meta:meta])* $name:ident, $kind:literal, { $($variant:ident => $text:literal),+ $(,)? }) => {
        $(#[$meta])*
        #[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
        pub enum $name {
            $($variant),+
        }

        impl $name {
            pub const ALL: &'static [$name] = &[$($name::$variant),+];

            pub fn as_str(self) -> &'static str {
                match self {
                    $($name::$variant => $text),+
                }
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(self.as_str())
            }
        }

        impl FromStr for $name {
            type Err = UnknownToken;

            fn from_str(s: &str) -> Result<Self, Self::Err> {
                let wanted = normalize_token(s);
                Self::ALL
                    .iter()
                    .copied()
                    .find(|v| normalize_token(v.as_str()) == wanted)
                    .ok_or_else(|| UnknownToken { kind: $kind, token: s.to_string() })
            }
        }

        impl Serialize for $name {
            fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
                serializer.serialize_str(self.as_str())
            }
        }

        impl<'de> Deserialize<'de> for $name {
            fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
                let s = String::deserialize(deserializer)?;
                s.parse().map_err(serde::de::Error::custom)
            }
        }
    };
}

token_enum!(
    /// Secrecy level of a category, ordered from least to most sensitive.
    SensitivityLevel, "level", {
        Public => "Public",
        Privileged => "Privileged",
        Classified => "Classified",
        TopClassified => "TopClassified",
    }
);

token_enum!(
    /// Remedial action. "Caution" maps to `Alert` and "chunks" to `Block`.
    Action, "action", {
        Allow => "Allow",
        Alert => "Alert",
        Block => "Block",
        Quarantine => "Quarantine",
        Encrypt => "Encrypt",
        Audit => "Audit",
    }
);

token_enum!(
    DataState, "data state", {
        InUse => "in_use",
        InTransit => "in_transit",
        AtRest => "at_rest",
    }
);

token_enum!(
    ReceiverZone, "receiver zone", {
        Internal => "internal",
        External => "external",
    }
);

impl Action {
    /// Whether the action stops the transfer outright.
    pub fn is_blocking(self) -> bool {
        matches!(self, Action::Block | Action::Quarantine)
    }
}

/// Context of a data movement: who sends what to whom, when, and how much.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransferContext {
    pub sender: String,
    pub receiver: String,
    /// File format, usually the extension without the leading dot.
    pub format: String,
    #[serde(with = "rfc3339")]
    pub timestamp: DateTime<Utc>,
    pub size_bytes: u64,
    pub data_state: DataState,
    pub receiver_zone: ReceiverZone,
}

pub(crate) mod rfc3339 {
    use chrono::{DateTime, SecondsFormat, Utc};
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(t: &DateTime<Utc>, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&t.to_rfc3339_opts(SecondsFormat::Millis, true))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<DateTime<Utc>, D::Error> {
        let s = String::deserialize(d)?;
        DateTime::parse_from_rfc3339(&s)
            .map(|t| t.with_timezone(&Utc))
            .map_err(serde::de::Error::custom)
    }
}
