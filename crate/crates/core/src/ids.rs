//! Typed identifiers.
//!
//! Every object in a basis gets a short, prefix-tagged id (`P3`, `A1`, `E12`).
//! Ids serialize as their display string so logs and CLI arguments stay
//! readable, and they order numerically within a kind.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::Error;

macro_rules! typed_id {
    ($(#[$meta:meta])* $name:ident, $prefix:literal) => {
        $(#[$meta])*
        #[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
        pub struct $name(pub u32);

        impl $name {
            pub const PREFIX: &'static str = $prefix;
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                write!(f, "{}{}", $prefix, self.0)
            }
        }

        impl FromStr for $name {
            type Err = Error;

            fn from_str(s: &str) -> Result<Self, Self::Err> {
                s.strip_prefix($prefix)
                    .filter(|rest| !rest.is_empty() && rest.bytes().all(|b| b.is_ascii_digit()))
                    .and_then(|rest| rest.parse().ok())
                    .map($name)
                    .ok_or_else(|| Error::BadId(s.to_string()))
            }
        }

        impl Serialize for $name {
            fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
                serializer.collect_str(self)
            }
        }

        impl<'de> Deserialize<'de> for $name {
            fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
                let s = String::deserialize(deserializer)?;
                s.parse().map_err(serde::de::Error::custom)
            }
        }

        impl From<$name> for ObjectId {
            fn from(id: $name) -> Self {
                ObjectId::$name(id)
            }
        }
    };
}

typed_id!(/// A premise (`P`).
    PremiseId, "P");
typed_id!(/// An evidence record (`E`).
    EvidenceId, "E");
typed_id!(/// A pending action (`A`).
    ActionId, "A");
typed_id!(/// An expectation on an observable (`X`).
    ExpectationId, "X");
typed_id!(/// A framework object: goal, constraint, threshold, ... (`F`).
    FrameworkId, "F");
typed_id!(/// A dependency link (`L`).
    LinkId, "L");
typed_id!(/// A discrepancy (`D`).
    DiscrepancyId, "D");
typed_id!(/// A registered probe (`Q`).
    ProbeId, "Q");
typed_id!(/// A working session (`S`).
    SessionId, "S");

/// Any addressable object in a basis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ObjectId {
    PremiseId(PremiseId),
    EvidenceId(EvidenceId),
    ActionId(ActionId),
    ExpectationId(ExpectationId),
    FrameworkId(FrameworkId),
    LinkId(LinkId),
    DiscrepancyId(DiscrepancyId),
    ProbeId(ProbeId),
    SessionId(SessionId),
}

impl ObjectId {
    pub fn as_premise(self) -> Option<PremiseId> {
        match self {
            ObjectId::PremiseId(id) => Some(id),
            _ => None,
        }
    }

    pub fn as_action(self) -> Option<ActionId> {
        match self {
            ObjectId::ActionId(id) => Some(id),
            _ => None,
        }
    }

    pub fn as_expectation(self) -> Option<ExpectationId> {
        match self {
            ObjectId::ExpectationId(id) => Some(id),
            _ => None,
        }
    }

    pub fn as_framework(self) -> Option<FrameworkId> {
        match self {
            ObjectId::FrameworkId(id) => Some(id),
            _ => None,
        }
    }
}

impl fmt::Display for ObjectId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ObjectId::PremiseId(id) => id.fmt(f),
            ObjectId::EvidenceId(id) => id.fmt(f),
            ObjectId::ActionId(id) => id.fmt(f),
            ObjectId::ExpectationId(id) => id.fmt(f),
            ObjectId::FrameworkId(id) => id.fmt(f),
            ObjectId::LinkId(id) => id.fmt(f),
            ObjectId::DiscrepancyId(id) => id.fmt(f),
            ObjectId::ProbeId(id) => id.fmt(f),
            ObjectId::SessionId(id) => id.fmt(f),
        }
    }
}

impl FromStr for ObjectId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let prefix = s.chars().next().ok_or_else(|| Error::BadId(s.to_string()))?;
        Ok(match prefix {
            'P' => ObjectId::PremiseId(s.parse()?),
            'E' => ObjectId::EvidenceId(s.parse()?),
            'A' => ObjectId::ActionId(s.parse()?),
            'X' => ObjectId::ExpectationId(s.parse()?),
            'F' => ObjectId::FrameworkId(s.parse()?),
            'L' => ObjectId::LinkId(s.parse()?),
            'D' => ObjectId::DiscrepancyId(s.parse()?),
            'Q' => ObjectId::ProbeId(s.parse()?),
            'S' => ObjectId::SessionId(s.parse()?),
            _ => return Err(Error::BadId(s.to_string())),
        })
    }
}

impl Serialize for ObjectId {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for ObjectId {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}
