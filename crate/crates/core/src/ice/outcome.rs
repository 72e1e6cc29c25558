use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::data::SubjectRecord;

/// Cause category of a first ICE. `Any` pools all causes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum IceCause {
    #[serde(rename = "AE")]
    Ae,
    #[serde(rename = "LoE")]
    Loe,
    Admin,
    Any,
}

impl IceCause {
    pub const ALL: [IceCause; 4] = [IceCause::Any, IceCause::Ae, IceCause::Loe, IceCause::Admin];

    pub fn as_str(self) -> &'static str {
        match self {
            IceCause::Ae => "AE",
            IceCause::Loe => "LoE",
            IceCause::Admin => "Admin",
            IceCause::Any => "Any",
        }
    }

    /// Whether `outcome` counts toward this cause.
    pub fn indicator(self, outcome: &IceOutcome) -> bool {
        match self {
            IceCause::Ae => outcome.ae,
            IceCause::Loe => outcome.loe,
            IceCause::Admin => outcome.admin,
            IceCause::Any => !outcome.adherent,
        }
    }
}

impl fmt::Display for IceCause {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for IceCause {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        IceCause::ALL
            .into_iter()
            .find(|c| c.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| format!("unknown ICE cause `{s}`"))
    }
}

/// Adherence and first-ICE indicators for one subject.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IceOutcome {
    pub adherent: bool,
    pub ae: bool,
    pub loe: bool,
    pub admin: bool,
    /// Time of the first ICE, if one occurred by `d_max`.
    pub first_ice_time: Option<f64>,
    /// `min(first ICE time, d_max)`.
    pub exposure_weeks: f64,
}

/// Derives adherence and first-ICE indicators.
///
/// AE and LoE may both be set when their times tie; administrative ICEs
/// lose every tie.
pub fn derive_ice_outcome(rec: &SubjectRecord, d_max: f64) -> IceOutcome {
    let (ae_t, loe_t, admin_t) = (rec.d_ae.weeks(), rec.d_loe.weeks(), rec.d_admin.weeks());
    let ae = ae_t <= d_max && ae_t <= loe_t && ae_t <= admin_t;
    let loe = loe_t <= d_max && loe_t <= ae_t && loe_t <= admin_t;
    let admin = admin_t <= d_max && admin_t < ae_t && admin_t < loe_t;
    let first = ae_t.min(loe_t).min(admin_t);
    let adherent = first > d_max;
    IceOutcome {
        adherent,
        ae,
        loe,
        admin,
        first_ice_time: (!adherent).then_some(first),
        exposure_weeks: first.min(d_max),
    }
}
