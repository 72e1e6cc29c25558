use serde::{Deserialize, Serialize};

use super::{derive_ice_outcome, IceCause, IceError};
use crate::data::{Arm, TrialDataset};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CifPoint {
    pub time_weeks: f64,
    pub proportion: f64,
}

/// Empirical cumulative incidence of first ICEs of one cause, per arm.
///
/// Every subject is followed until its first ICE or `d_max`, so the plain
/// proportion is exact and no censoring adjustment is needed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CifCurve {
    pub cause: IceCause,
    /// Indexed by [`Arm::index`].
    pub arms: [Vec<CifPoint>; 2],
}

impl CifCurve {
    pub fn points(&self, arm: Arm) -> &[CifPoint] {
        &self.arms[arm.index()]
    }

    /// Step-function value at `t`.
    pub fn value_at(&self, arm: Arm, t: f64) -> f64 {
        self.points(arm)
            .iter()
            .take_while(|p| p.time_weeks <= t)
            .last()
            .map_or(0.0, |p| p.proportion)
    }
}

/// `CIF(t) = #{first ICE of this cause at or before t} / N_arm`, evaluated at
/// week 0, every distinct first-ICE time and `d_max`.
pub fn cumulative_incidence(ds: &TrialDataset, cause: IceCause) -> CifCurve {
    let d_max = ds.d_max();
    let outcomes: Vec<_> = ds.subjects().iter().map(|s| (s.arm, derive_ice_outcome(s, d_max))).collect();

    let mut grid: Vec<f64> = outcomes.iter().filter_map(|(_, o)| o.first_ice_time).collect();
    grid.push(0.0);
    grid.push(d_max);
    grid.sort_by(f64::total_cmp);
    grid.dedup();

    let mut arms: [Vec<CifPoint>; 2] = [Vec::new(), Vec::new()];
    for arm in Arm::BOTH {
        let mut times: Vec<f64> = outcomes
            .iter()
            .filter(|(a, o)| *a == arm && cause.indicator(o))
            .filter_map(|(_, o)| o.first_ice_time)
            .collect();
        times.sort_by(f64::total_cmp);
        let n = ds.counts().size(arm) as f64;
        let mut seen = 0usize;
        arms[arm.index()] = grid
            .iter()
            .map(|&t| {
                while seen < times.len() && times[seen] <= t {
                    seen += 1;
                }
                CifPoint { time_weeks: t, proportion: seen as f64 / n }
            })
            .collect();
    }
    CifCurve { cause, arms }
}

/// Counts of first ICEs due to LoE per time bucket `[0, w), [w, 2w), ...`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LoeHistogram {
    pub interval_weeks: f64,
    /// `(start, end)` of each bucket; the last one is closed at `d_max`.
    pub buckets: Vec<(f64, f64)>,
    /// Indexed by [`Arm::index`], then bucket.
    pub counts: [Vec<usize>; 2],
}

pub fn loe_timing_histogram(ds: &TrialDataset, interval_weeks: f64) -> Result<LoeHistogram, IceError> {
    if !(interval_weeks > 0.0 && interval_weeks.is_finite()) {
        return Err(IceError::InvalidInterval(interval_weeks));
    }
    let d_max = ds.d_max();
    let n_buckets = ((d_max / interval_weeks).ceil() as usize).max(1);
    let buckets = (0..n_buckets)
        .map(|b| (b as f64 * interval_weeks, ((b + 1) as f64 * interval_weeks).min(d_max)))
        .collect();
    let mut counts = [vec![0usize; n_buckets], vec![0usize; n_buckets]];
    for s in ds.subjects() {
        let o = derive_ice_outcome(s, d_max);
        if let (true, Some(t)) = (o.loe, o.first_ice_time) {
            let b = ((t / interval_weeks).floor() as usize).min(n_buckets - 1);
            counts[s.arm.index()][b] += 1;
        }
    }
    Ok(LoeHistogram { interval_weeks, buckets, counts })
}
