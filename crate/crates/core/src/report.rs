//! Table formatting and the tripartite report.
//!
//! Everything here renders already-computed results; nothing is estimated.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ace::{Method, StratumEstimate};
use crate::data::{Arm, ArmCounts};
use crate::ice::IceCause;
use crate::ice_estimands::IceSummary;

#[derive(Debug, Error, PartialEq)]
pub enum ReportError {
    #[error("missing result: {0}")]
    Missing(String),
}

/// A rectangular table emitted both as aligned text and as CSV.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Table {
    pub headers: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(headers: &[&str]) -> Self {
        Table { headers: headers.iter().map(|h| h.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.headers.len());
        self.rows.push(row);
    }

    /// Left-aligned first column, right-aligned others, two-space gutters.
    pub fn to_aligned(&self) -> String {
        let n = self.headers.len();
        let mut widths: Vec<usize> = self.headers.iter().map(|h| h.chars().count()).collect();
        for r in &self.rows {
            for (w, c) in widths.iter_mut().zip(r) {
                *w = (*w).max(c.chars().count());
            }
        }
        let line = |cells: &[String]| {
            let mut s = String::new();
            for (i, c) in cells.iter().enumerate() {
                let pad = widths[i] - c.chars().count();
                if i == 0 {
                    s.push_str(c);
                    s.push_str(&" ".repeat(pad));
                } else {
                    s.push_str("  ");
                    s.push_str(&" ".repeat(pad));
                    s.push_str(c);
                }
            }
            s.trim_end().to_string()
        };
        let mut out = line(&self.headers);
        out.push('\n');
        out.push_str(&"-".repeat(widths.iter().sum::<usize>() + 2 * (n.saturating_sub(1))));
        out.push('\n');
        for r in &self.rows {
            out.push_str(&line(r));
            out.push('\n');
        }
        out
    }

    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.headers).expect("in-memory write");
        for r in &self.rows {
            w.write_record(r).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 input")
    }
}

/// Fixed-point formatting that never prints `-0.0`.
pub fn fixed(v: f64, digits: usize) -> String {
    let s = format!("{v:.digits$}");
    if s.starts_with('-') && s[1..].chars().all(|c| c == '0' || c == '.') {
        s[1..].to_string()
    } else {
        s
    }
}

/// `"5.2 (2.1, 8.3)"`: a proportion difference and its interval in
/// percentage points, one decimal.
pub fn pct_with_ci(diff: f64, ci: (f64, f64)) -> String {
    format!("{} ({}, {})", fixed(100.0 * diff, 1), fixed(100.0 * ci.0, 1), fixed(100.0 * ci.1, 1))
}

pub fn value_with_ci(v: f64, ci: Option<(f64, f64)>, digits: usize) -> String {
    match ci {
        Some((lo, hi)) => format!("{} ({}, {})", fixed(v, digits), fixed(lo, digits), fixed(hi, digits)),
        None => fixed(v, digits),
    }
}

fn p_value(p: f64) -> String {
    if p < 0.001 {
        "<0.001".into()
    } else {
        format!("{p:.3}")
    }
}

/// First-ICE table: one row per cause with counts, percentages, the
/// difference with its interval, and the p-value.
pub fn ice_table(summary: &IceSummary) -> Table {
    let mut t = Table::new(&["first ICE", "arm 1 n (%)", "arm 0 n (%)", "diff % (CI)", "p-value"]);
    for r in &summary.rows {
        t.push(vec![
            r.cause.as_str().to_string(),
            format!("{} ({})", r.x1, fixed(100.0 * r.p1, 1)),
            format!("{} ({})", r.x0, fixed(100.0 * r.p0, 1)),
            pct_with_ci(r.diff, r.ci),
            p_value(r.p_value),
        ]);
    }
    t
}

pub fn exposure_table(summary: &IceSummary) -> Table {
    let mut t = Table::new(&["first ICE", "arm 1 n", "arm 1 mean weeks", "arm 0 n", "arm 0 mean weeks"]);
    let weeks = |w: Option<f64>| w.map_or("-".to_string(), |w| fixed(w, 1));
    for r in &summary.exposure {
        t.push(vec![
            r.cause.as_str().to_string(),
            r.count[Arm::Experimental.index()].to_string(),
            weeks(r.mean_weeks[Arm::Experimental.index()]),
            r.count[Arm::Reference.index()].to_string(),
            weeks(r.mean_weeks[Arm::Reference.index()]),
        ]);
    }
    t
}

/// Persisted output of the estimator battery.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateOutput {
    pub seed: u64,
    pub alpha: f64,
    pub counts: ArmCounts,
    pub estimates: Vec<StratumEstimate>,
    pub p_plus_plus: Option<f64>,
    pub bootstrap_replicates: usize,
    pub bootstrap_failures: usize,
}

impl EstimateOutput {
    pub fn get(&self, method: Method) -> Option<&StratumEstimate> {
        self.estimates.iter().find(|e| e.method == method)
    }
}

fn method_label(m: Method) -> &'static str {
    match m {
        Method::Naive => "naive adherers (non-causal)",
        Method::AceStarPlus => "ACE S*+",
        Method::AcePlusPlus => "ACE S++",
        Method::Mar => "hypothetical MAR (S**)",
        Method::J2r => "J2R imputation",
    }
}

/// Battery table: method, per-arm means with SEs, difference and interval.
pub fn battery_table(out: &EstimateOutput) -> Table {
    let mut t = Table::new(&["method", "stratum", "mean arm 0 (SE)", "mean arm 1 (SE)", "diff (SE)", "CI"]);
    let with_se = |v: f64, se: Option<f64>| match se {
        Some(se) => format!("{} ({})", fixed(v, 3), fixed(se, 3)),
        None => fixed(v, 3),
    };
    for e in &out.estimates {
        let arm_se = e.arm_se.map(|s| (Some(s[0]), Some(s[1]))).unwrap_or((None, None));
        t.push(vec![
            method_label(e.method).to_string(),
            e.stratum.as_str().to_string(),
            with_se(e.mean0, arm_se.0),
            with_se(e.mean1, arm_se.1),
            with_se(e.diff, e.se),
            e.ci.map_or("-".into(), |(lo, hi)| format!("({}, {})", fixed(lo, 3), fixed(hi, 3))),
        ]);
    }
    t
}

/// The tripartite report as text and as a long-format CSV
/// (`estimand,quantity,arm,value`).
pub fn render_tripartite_report(summary: &IceSummary, estimates: &EstimateOutput) -> Result<(String, String), ReportError> {
    let need = |c: IceCause| summary.row(c).ok_or_else(|| ReportError::Missing(format!("{} proportion row", c.as_str())));
    let ae = need(IceCause::Ae)?;
    let loe = need(IceCause::Loe)?;
    let star_plus = estimates.get(Method::AceStarPlus).ok_or_else(|| ReportError::Missing("S*+ estimate".into()))?;
    let plus_plus = estimates.get(Method::AcePlusPlus).ok_or_else(|| ReportError::Missing("S++ estimate".into()))?;
    let p_pp = estimates.p_plus_plus.ok_or_else(|| ReportError::Missing("p++ estimate".into()))?;
    let level = fixed(100.0 * (1.0 - summary.alpha), 0);

    let mut text = String::new();
    text.push_str("TRIPARTITE ESTIMANDS\n\n");
    for (title, r) in [("Estimand 1: first ICE due to adverse event", ae), ("Estimand 2: first ICE due to lack of efficacy", loe)] {
        text.push_str(&format!("{title}\n"));
        text.push_str(&format!(
            "  arm 1: {}/{} ({}%)   arm 0: {}/{} ({}%)\n",
            r.x1,
            r.n1,
            fixed(100.0 * r.p1, 1),
            r.x0,
            r.n0,
            fixed(100.0 * r.p0, 1)
        ));
        text.push_str(&format!(
            "  difference, percentage points ({level}% CI, {}): {}   p = {} ({})\n\n",
            r.ci_method,
            pct_with_ci(r.diff, r.ci),
            p_value(r.p_value),
            r.test_method
        ));
    }
    text.push_str("Mean treatment exposure by first-ICE cause (weeks)\n");
    for line in exposure_table(summary).to_aligned().lines() {
        text.push_str(&format!("  {line}\n"));
    }
    text.push('\n');
    text.push_str("Estimand 3: efficacy in adherence strata\n");
    for e in [star_plus, plus_plus] {
        text.push_str(&format!(
            "  {:<8} {}   arm 1 mean {}, arm 0 mean {}\n",
            e.stratum.as_str(),
            value_with_ci(e.diff, e.ci, 3),
            fixed(e.mean1, 3),
            fixed(e.mean0, 3)
        ));
    }
    text.push_str(&format!("  estimated share adherent to both arms (p++): {}%\n\n", fixed(100.0 * p_pp, 1)));
    text.push_str("Estimator battery\n");
    for line in battery_table(estimates).to_aligned().lines() {
        text.push_str(&format!("  {line}\n"));
    }

    let mut t = Table::new(&["estimand", "quantity", "arm", "value"]);
    let mut put = |e: &str, q: &str, arm: &str, v: String| t.push(vec![e.into(), q.into(), arm.into(), v]);
    for (name, r) in [("ae", ae), ("loe", loe)] {
        put(name, "proportion", "1", r.p1.to_string());
        put(name, "proportion", "0", r.p0.to_string());
        put(name, "diff", "", r.diff.to_string());
        put(name, "ci_lower", "", r.ci.0.to_string());
        put(name, "ci_upper", "", r.ci.1.to_string());
        put(name, "p_value", "", r.p_value.to_string());
    }
    for x in &summary.exposure {
        for arm in Arm::BOTH {
            if let Some(w) = x.mean_weeks[arm.index()] {
                put("exposure", &format!("mean_weeks_{}", x.cause.as_str()), &arm.to_string(), w.to_string());
            }
        }
    }
    for (name, e) in [("s_star_plus", star_plus), ("s_plus_plus", plus_plus)] {
        put(name, "mean", "0", e.mean0.to_string());
        put(name, "mean", "1", e.mean1.to_string());
        put(name, "diff", "", e.diff.to_string());
        if let Some((lo, hi)) = e.ci {
            put(name, "ci_lower", "", lo.to_string());
            put(name, "ci_upper", "", hi.to_string());
        }
    }
    put("s_plus_plus", "p_plus_plus", "", p_pp.to_string());
    Ok((text, t.to_csv()))
}
