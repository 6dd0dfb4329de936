//! Domain objects of a decision basis: framework objects, premises,
//! evidence, pending actions, expectations and probes.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::ids::{ActionId, EvidenceId, ExpectationId, FrameworkId, LinkId, ObjectId, PremiseId, ProbeId, SessionId};

macro_rules! kebab_enum {
    ($(#[$meta:meta])* $name:ident { $($variant:ident => $text:literal),+ $(,)? }) => {
        $(#[$meta])*
        #[derive(
            Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash,
            ::serde::Serialize, ::serde::Deserialize,
        )]
        #[serde(rename_all = "kebab-case")]
        pub enum $name { $($variant),+ }

        impl $name {
            pub const ALL: &'static [$name] = &[$($name::$variant),+];

            pub fn as_str(self) -> &'static str {
                match self { $($name::$variant => $text),+ }
            }
        }

        impl ::std::fmt::Display for $name {
            fn fmt(&self, f: &mut ::std::fmt::Formatter<'_>) -> ::std::fmt::Result {
                f.write_str(self.as_str())
            }
        }

        impl ::std::str::FromStr for $name {
            type Err = $crate::error::Error;

            fn from_str(s: &str) -> ::std::result::Result<Self, Self::Err> {
                match s {
                    $($text => Ok($name::$variant),)+
                    _ => Err($crate::error::Error::BadRequest(format!(
                        concat!("unknown ", stringify!($name), " `{}`"), s
                    ))),
                }
            }
        }
    };
}
pub(crate) use kebab_enum;

kebab_enum!(
    /// Alignment axis of a substrate object.
    Axis { Teleological => "teleological", Epistemic => "epistemic", Procedural => "procedural" }
);

kebab_enum!(
    /// Premise lifecycle status.
    PremiseStatus {
        Draft => "draft",
        Contested => "contested",
        Committed => "committed",
        Rejected => "rejected",
    }
);

impl PremiseStatus {
    /// Draft or contested.
    pub fn is_uncommitted(self) -> bool {
        matches!(self, PremiseStatus::Draft | PremiseStatus::Contested)
    }
}

kebab_enum!(Stakes { Low => "low", High => "high" });

kebab_enum!(
    FrameworkKind {
        Goal => "goal",
        Constraint => "constraint",
        Priority => "priority",
        Threshold => "threshold",
        Protocol => "protocol",
        RoleAllocation => "role-allocation",
    }
);

impl FrameworkKind {
    pub fn axis(self) -> Axis {
        match self {
            FrameworkKind::Goal | FrameworkKind::Constraint | FrameworkKind::Priority => {
                Axis::Teleological
            }
            FrameworkKind::Threshold | FrameworkKind::Protocol | FrameworkKind::RoleAllocation => {
                Axis::Procedural
            }
        }
    }
}

kebab_enum!(Direction { Supports => "supports", Refutes => "refutes" });

kebab_enum!(
    EvidenceSource {
        Observation => "observation",
        ExpertAssertion => "expert-assertion",
        ProbeResult => "probe-result",
    }
);

kebab_enum!(
    ActionStatus { Pending => "pending", Committed => "committed", Withdrawn => "withdrawn" }
);

kebab_enum!(LinkKind { Supports => "supports", Grounds => "grounds" });

kebab_enum!(Role { Expert => "expert", Assistant => "assistant" });

/// A standing rule of the expert's decision framework. Revisions are kept;
/// `revision` counts from 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameworkObject {
    pub id: FrameworkId,
    pub kind: FrameworkKind,
    pub statement: String,
    pub params: BTreeMap<String, f64>,
    pub revision: u32,
}

impl FrameworkObject {
    pub fn axis(&self) -> Axis {
        self.kind.axis()
    }
}

/// An explicit action-justifying claim.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Premise {
    pub id: PremiseId,
    pub axis: Axis,
    pub statement: String,
    pub status: PremiseStatus,
    pub credence: f64,
    pub evidence_threshold: f64,
    pub evidence_ids: Vec<EvidenceId>,
    pub stakes: Stakes,
    pub created_from: Option<PremiseId>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub actor: String,
    pub session: SessionId,
    pub timestamp: u64,
}

/// An immutable observation or assertion. There is deliberately no way to
/// edit or delete one; corrections are new records.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvidenceRecord {
    pub id: EvidenceId,
    pub payload: String,
    pub direction: Direction,
    pub weight: f64,
    pub source: EvidenceSource,
    pub provenance: Provenance,
}

impl EvidenceRecord {
    /// Signed contribution to a premise's evidence score.
    pub fn signed_weight(&self) -> f64 {
        match self.direction {
            Direction::Supports => self.weight,
            Direction::Refutes => -self.weight,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PendingAction {
    pub id: ActionId,
    pub description: String,
    /// Expert-assigned desirability, used only to break ties among
    /// gate-passing candidates.
    pub utility: f64,
    pub consequential: bool,
    pub status: ActionStatus,
}

/// Predicate an expectation places on an observable.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "kebab-case")]
pub enum Predicate {
    Equals { value: f64 },
    InRange { low: f64, high: f64 },
    AtLeast { value: f64 },
    AtMost { value: f64 },
}

impl Predicate {
    pub fn holds(&self, observed: f64) -> bool {
        match *self {
            Predicate::Equals { value } => observed == value,
            Predicate::InRange { low, high } => low <= observed && observed <= high,
            Predicate::AtLeast { value } => observed >= value,
            Predicate::AtMost { value } => observed <= value,
        }
    }

    pub(crate) fn validate(&self) -> crate::Result<()> {
        use crate::error::require_finite;
        match *self {
            Predicate::Equals { value } | Predicate::AtLeast { value } | Predicate::AtMost { value } => {
                require_finite("predicate operand", value)?;
            }
            Predicate::InRange { low, high } => {
                require_finite("predicate operand", low)?;
                require_finite("predicate operand", high)?;
                if low > high {
                    return Err(Error::InvalidValue {
                        field: "predicate range",
                        reason: format!("low {low} exceeds high {high}"),
                    });
                }
            }
        }
        Ok(())
    }
}

impl fmt::Display for Predicate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Predicate::Equals { value } => write!(f, "equals {value}"),
            Predicate::InRange { low, high } => write!(f, "in-range {low}..{high}"),
            Predicate::AtLeast { value } => write!(f, "at-least {value}"),
            Predicate::AtMost { value } => write!(f, "at-most {value}"),
        }
    }
}

/// Parses `at-least:0.8`, `at-most:3`, `equals:1`, `in-range:0.2:0.9`.
impl FromStr for Predicate {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || Error::BadRequest(format!("bad predicate `{s}`"));
        let mut parts = s.split(':');
        let op = parts.next().ok_or_else(bad)?;
        let nums: Vec<f64> = parts
            .map(|p| p.trim().parse::<f64>().map_err(|_| bad()))
            .collect::<Result<_, _>>()?;
        match (op, nums.as_slice()) {
            ("equals", [value]) => Ok(Predicate::Equals { value: *value }),
            ("at-least", [value]) => Ok(Predicate::AtLeast { value: *value }),
            ("at-most", [value]) => Ok(Predicate::AtMost { value: *value }),
            ("in-range", [low, high]) => Ok(Predicate::InRange { low: *low, high: *high }),
            _ => Err(bad()),
        }
    }
}

/// A committed expectation about an observable, grounded in one premise.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Expectation {
    pub id: ExpectationId,
    pub premise_id: PremiseId,
    pub variable: String,
    pub predicate: Predicate,
}

/// A discriminating test that can be run against a premise.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Probe {
    pub id: ProbeId,
    pub premise: PremiseId,
    pub description: String,
    pub discrimination: f64,
    pub cost: f64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DependencyLink {
    pub id: LinkId,
    pub from: ObjectId,
    pub to: ObjectId,
    pub kind: LinkKind,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Session {
    pub id: SessionId,
    pub actor: String,
    pub role: Role,
    pub open: bool,
}
