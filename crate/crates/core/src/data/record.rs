use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::schema::CovariateValue;

/// Randomized treatment arm.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Arm {
    /// `T = 0`.
    Reference,
    /// `T = 1`.
    Experimental,
}

impl Arm {
    pub const BOTH: [Arm; 2] = [Arm::Reference, Arm::Experimental];

    pub fn index(self) -> usize {
        match self {
            Arm::Reference => 0,
            Arm::Experimental => 1,
        }
    }

    pub fn from_indicator(t: u8) -> Option<Arm> {
        match t {
            0 => Some(Arm::Reference),
            1 => Some(Arm::Experimental),
            _ => None,
        }
    }

    pub fn other(self) -> Arm {
        match self {
            Arm::Reference => Arm::Experimental,
            Arm::Experimental => Arm::Reference,
        }
    }
}

impl fmt::Display for Arm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.index())
    }
}

/// Time of an intercurrent event in weeks, or `Never` (treated as +infinity).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum EventTime {
    At(f64),
    Never,
}

impl EventTime {
    pub fn weeks(self) -> f64 {
        match self {
            EventTime::At(t) => t,
            EventTime::Never => f64::INFINITY,
        }
    }

    pub fn finite(self) -> Option<f64> {
        match self {
            EventTime::At(t) => Some(t),
            EventTime::Never => None,
        }
    }

    pub fn is_never(self) -> bool {
        matches!(self, EventTime::Never)
    }

    pub fn from_option(t: Option<f64>) -> Self {
        t.map_or(EventTime::Never, EventTime::At)
    }
}

/// Discontinuation reason as recorded on the disposition form.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DispositionReason {
    #[serde(rename = "AE")]
    Ae,
    Death,
    LostToFollowup,
    ProtocolViolation,
    WithdrawalBySubject,
    PhysicianDecision,
    SponsorDecision,
    Completed,
}

impl DispositionReason {
    pub const ALL: [DispositionReason; 8] = [
        DispositionReason::Ae,
        DispositionReason::Death,
        DispositionReason::LostToFollowup,
        DispositionReason::ProtocolViolation,
        DispositionReason::WithdrawalBySubject,
        DispositionReason::PhysicianDecision,
        DispositionReason::SponsorDecision,
        DispositionReason::Completed,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            DispositionReason::Ae => "AE",
            DispositionReason::Death => "death",
            DispositionReason::LostToFollowup => "lost_to_followup",
            DispositionReason::ProtocolViolation => "protocol_violation",
            DispositionReason::WithdrawalBySubject => "withdrawal_by_subject",
            DispositionReason::PhysicianDecision => "physician_decision",
            DispositionReason::SponsorDecision => "sponsor_decision",
            DispositionReason::Completed => "completed",
        }
    }
}

impl fmt::Display for DispositionReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for DispositionReason {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        DispositionReason::ALL
            .into_iter()
            .find(|r| r.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| format!("unknown disposition reason `{s}`"))
    }
}

/// Coded evidence about why a subject stopped treatment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DispositionEvidence {
    pub recorded_reason: DispositionReason,
    /// A safety issue was recorded near discontinuation.
    pub ae_flag: bool,
    /// Efficacy at discontinuation showed no meaningful improvement from baseline.
    pub efficacy_no_improvement_flag: bool,
}

impl DispositionEvidence {
    pub fn completed() -> Self {
        DispositionEvidence {
            recorded_reason: DispositionReason::Completed,
            ae_flag: false,
            efficacy_no_improvement_flag: false,
        }
    }

    pub fn is_completer(&self) -> bool {
        self.recorded_reason == DispositionReason::Completed
    }
}

/// One randomized subject.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubjectRecord {
    pub id: String,
    pub arm: Arm,
    /// Baseline covariates in schema order.
    pub x: Vec<CovariateValue>,
    /// Intermediate outcome per scheduled visit.
    pub z: Vec<Option<f64>>,
    /// Final outcome at `d_max`.
    pub y: Option<f64>,
    pub d_ae: EventTime,
    pub d_loe: EventTime,
    pub d_admin: EventTime,
    pub evidence: DispositionEvidence,
}

impl SubjectRecord {
    /// Earliest event time of any cause (+infinity if none).
    pub fn first_event_weeks(&self) -> f64 {
        self.d_ae.weeks().min(self.d_loe.weeks()).min(self.d_admin.weeks())
    }

    /// `A = I(D_AE > D_max) I(D_LoE > D_max) I(D_A > D_max)`.
    pub fn is_adherent(&self, d_max: f64) -> bool {
        self.first_event_weeks() > d_max
    }
}
