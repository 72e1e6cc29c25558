use std::fmt;

use serde::{Deserialize, Serialize};

use super::record::{EventTime, SubjectRecord};
use super::schema::{CovariateKind, CovariateSchema, CovariateValue};
use super::TrialDataset;

/// A record-level invariant.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Rule {
    /// Record arity differs from the schema.
    SchemaArity,
    /// Categorical value outside the declared level list or wrong value kind.
    CovariateKind,
    /// A finite value is required but NaN/infinite was stored.
    NonFiniteValue,
    /// An event time is zero or negative.
    NonPositiveEventTime,
    /// An intermediate value is present at or after the first ICE.
    IntermediateAfterIce,
    /// The final outcome is present although an ICE occurred before `d_max`.
    OutcomeAfterIce,
    /// A completer carries discontinuation flags.
    CompletedWithFlags,
    /// Recorded as completed although an ICE occurred before `d_max`.
    CompletedWithIce,
    /// Recorded as discontinued but no ICE occurred before `d_max`.
    DiscontinuedWithoutIce,
}

impl Rule {
    pub fn name(self) -> &'static str {
        match self {
            Rule::SchemaArity => "schema-arity",
            Rule::CovariateKind => "covariate-kind",
            Rule::NonFiniteValue => "non-finite-value",
            Rule::NonPositiveEventTime => "nonpositive-event-time",
            Rule::IntermediateAfterIce => "intermediate-after-ice",
            Rule::OutcomeAfterIce => "outcome-after-ice",
            Rule::CompletedWithFlags => "completed-with-flags",
            Rule::CompletedWithIce => "completed-with-ice",
            Rule::DiscontinuedWithoutIce => "discontinued-without-ice",
        }
    }
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub subject_id: String,
    pub rule: Rule,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_clean(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn has(&self, id: &str, rule: Rule) -> bool {
        self.violations.iter().any(|v| v.subject_id == id && v.rule == rule)
    }
}

/// Checks every record against the data-model invariants. Never fails:
/// problems are returned as violations in subject order.
pub fn validate_dataset(ds: &TrialDataset) -> ValidationReport {
    let mut violations = Vec::new();
    for s in ds.subjects() {
        for rule in check_subject(s, ds.schema()) {
            violations.push(Violation { subject_id: s.id.clone(), rule });
        }
    }
    ValidationReport { violations }
}

fn check_subject(s: &SubjectRecord, schema: &CovariateSchema) -> Vec<Rule> {
    let mut rules = Vec::new();
    let d_max = schema.d_max();

    if s.x.len() != schema.covariates().len() || s.z.len() != schema.visits().len() {
        rules.push(Rule::SchemaArity);
    }
    let kinds_ok = schema.covariates().iter().zip(&s.x).all(|(c, v)| match (&c.kind, v) {
        (CovariateKind::Continuous, CovariateValue::Continuous(_)) => true,
        (CovariateKind::Categorical { levels }, CovariateValue::Level(l)) => *l < levels.len(),
        _ => false,
    });
    if !kinds_ok {
        rules.push(Rule::CovariateKind);
    }
    let finite_x = s.x.iter().all(|v| match v {
        CovariateValue::Continuous(v) => v.is_finite(),
        CovariateValue::Level(_) => true,
    });
    let finite_zy = s.z.iter().flatten().chain(s.y.iter()).all(|v| v.is_finite());
    let times = [s.d_ae, s.d_loe, s.d_admin];
    let finite_t = times.iter().all(|t| t.finite().is_none_or(f64::is_finite));
    if !(finite_x && finite_zy && finite_t) {
        rules.push(Rule::NonFiniteValue);
    }
    if times.iter().any(|t| matches!(t, EventTime::At(v) if *v <= 0.0)) {
        rules.push(Rule::NonPositiveEventTime);
    }

    let first = s.first_event_weeks();
    let had_ice = first <= d_max;
    let after_ice = schema
        .visits()
        .iter()
        .zip(&s.z)
        .any(|(visit, z)| z.is_some() && visit.week >= first);
    if after_ice {
        rules.push(Rule::IntermediateAfterIce);
    }
    if had_ice && s.y.is_some() {
        rules.push(Rule::OutcomeAfterIce);
    }
    let ev = &s.evidence;
    if ev.is_completer() && (ev.ae_flag || ev.efficacy_no_improvement_flag) {
        rules.push(Rule::CompletedWithFlags);
    }
    if ev.is_completer() && had_ice {
        rules.push(Rule::CompletedWithIce);
    }
    if !ev.is_completer() && !had_ice {
        rules.push(Rule::DiscontinuedWithoutIce);
    }
    rules
}
