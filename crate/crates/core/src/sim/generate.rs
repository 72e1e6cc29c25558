use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::spec::{CovariateDist, SimulationSpec};
use super::SimError;
use crate::data::{
    Arm, CovariateValue, DispositionEvidence, DispositionReason, EventTime, SubjectRecord, TrialDataset,
};
use crate::regression::sigmoid;
use crate::rng;

/// Everything a subject would experience under one arm.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PotentialWorld {
    pub z: Vec<f64>,
    pub y: f64,
    pub adherent: bool,
    pub d_ae: EventTime,
    pub d_loe: EventTime,
    pub d_admin: EventTime,
}

impl PotentialWorld {
    pub fn first_ice(&self) -> Option<f64> {
        let t = self.d_ae.weeks().min(self.d_loe.weeks()).min(self.d_admin.weeks());
        t.is_finite().then_some(t)
    }
}

/// Baseline covariates plus both potential worlds of one subject.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PotentialSubject {
    pub x: Vec<CovariateValue>,
    /// Expanded regressors of `x`.
    pub regressors: Vec<f64>,
    /// Indexed by [`Arm::index`].
    pub worlds: [PotentialWorld; 2],
}

impl PotentialSubject {
    pub fn in_star_plus(&self) -> bool {
        self.worlds[1].adherent
    }

    pub fn in_plus_plus(&self) -> bool {
        self.worlds[0].adherent && self.worlds[1].adherent
    }

    pub fn effect(&self) -> f64 {
        self.worlds[1].y - self.worlds[0].y
    }
}

fn draw_covariates(spec: &SimulationSpec, r: &mut ChaCha8Rng) -> (Vec<CovariateValue>, Vec<f64>) {
    let mut x = Vec::with_capacity(spec.covariates.len());
    let mut regressors = Vec::new();
    for c in &spec.covariates {
        match &c.dist {
            CovariateDist::Normal { mean, sd } => {
                let e: f64 = r.sample(StandardNormal);
                let v = mean + sd * e;
                x.push(CovariateValue::Continuous(v));
                regressors.push(v);
            }
            CovariateDist::Categorical { levels, probs } => {
                let u: f64 = r.random();
                let mut acc = 0.0;
                let mut level = levels.len() - 1;
                for (i, p) in probs.iter().enumerate() {
                    acc += p;
                    if u < acc {
                        level = i;
                        break;
                    }
                }
                x.push(CovariateValue::Level(level));
                regressors.extend((1..levels.len()).map(|l| if l == level { 1.0 } else { 0.0 }));
            }
        }
    }
    (x, regressors)
}

/// Draws the potential world under arm `t`.
///
/// Intermediates and the outcome follow the sequential linear models. In
/// each interval a clinical ICE occurs with the complement of the arm's
/// adherence probability and an administrative ICE with the complement of
/// the shared administrative probability; event times are uniform within
/// the interval and the earlier event is the first ICE.
fn draw_world(spec: &SimulationSpec, t: usize, x: &[f64], r: &mut ChaCha8Rng) -> PotentialWorld {
    let arm = spec.arm(t);
    let k = spec.visits.len();
    let mut z = Vec::with_capacity(k);
    for m in &arm.z_models {
        let e: f64 = r.sample(StandardNormal);
        let v = m.mean(x, &z) + m.sd * e;
        z.push(v);
    }
    let e_y: f64 = r.sample(StandardNormal);
    let y = arm.y_model.mean(x, &z) + arm.y_model.sd * e_y;

    let mut b = Vec::with_capacity(k + 2);
    b.push(0.0);
    b.extend(spec.visits.iter().map(|v| v.week));
    b.push(spec.d_max);

    let mut world =
        PotentialWorld { z, y, adherent: true, d_ae: EventTime::Never, d_loe: EventTime::Never, d_admin: EventTime::Never };
    for i in 0..=k {
        let (u_clin, u_admin, s_clin, s_admin, u_cause, u_tie): (f64, f64, f64, f64, f64, f64) =
            (r.random(), r.random(), r.random(), r.random(), r.random(), r.random());
        let eta = arm.adherence[i].intercept
            + super::spec::dot(0.0, &arm.adherence[i].coefficients, x, &world.z[..i])
            + spec.a5_violation * e_y;
        let clinical = u_clin >= sigmoid(eta);
        let admin = spec.admin.get(i).is_some_and(|m| u_admin >= m.probability(x, &[]));
        if !(clinical || admin) {
            continue;
        }
        let width = b[i + 1] - b[i];
        let t_clin = b[i] + width * (1.0 - s_clin);
        let t_admin = b[i] + width * (1.0 - s_admin);
        world.adherent = false;
        if clinical && (!admin || t_clin <= t_admin) {
            let last_z = if i == 0 { 0.0 } else { world.z[i - 1] };
            let loe = u_cause < sigmoid(arm.loe_share.intercept + arm.loe_share.efficacy_slope * last_z);
            let both = u_tie < spec.concurrent_share;
            if loe || both {
                world.d_loe = EventTime::At(t_clin);
            }
            if !loe || both {
                world.d_ae = EventTime::At(t_clin);
            }
        } else {
            world.d_admin = EventTime::At(t_admin);
        }
        break;
    }
    world
}

/// Draws subject `j` from streams keyed by `(seed, j)`: baseline covariates
/// from one stream and each potential world from its own, so the two
/// worlds are conditionally independent given `X`.
pub fn draw_subject(spec: &SimulationSpec, seed: u64, j: u64) -> PotentialSubject {
    let subject_seed = rng::derive_seed(seed, j);
    let (x, regressors) = draw_covariates(spec, &mut rng::stream(subject_seed, 0));
    let worlds = [0, 1].map(|t| draw_world(spec, t, &regressors, &mut rng::stream(subject_seed, 1 + t as u64)));
    PotentialSubject { x, regressors, worlds }
}

/// Reveals the observed record of a subject assigned to `arm`: intermediates
/// measured before the first ICE, the outcome only for adherers, and
/// disposition evidence consistent with the ICE causes.
pub fn observe(id: String, arm: Arm, subject: &PotentialSubject, spec: &SimulationSpec) -> SubjectRecord {
    let w = &subject.worlds[arm.index()];
    let first = w.first_ice().unwrap_or(f64::INFINITY);
    let z = spec.visits.iter().zip(&w.z).map(|(v, &z)| (v.week < first).then_some(z)).collect();
    let (ae, loe) = (!w.d_ae.is_never(), !w.d_loe.is_never());
    let evidence = if w.adherent {
        DispositionEvidence::completed()
    } else if ae || loe {
        DispositionEvidence {
            recorded_reason: if ae { DispositionReason::Ae } else { DispositionReason::WithdrawalBySubject },
            ae_flag: ae,
            efficacy_no_improvement_flag: loe,
        }
    } else {
        DispositionEvidence {
            recorded_reason: DispositionReason::LostToFollowup,
            ae_flag: false,
            efficacy_no_improvement_flag: false,
        }
    };
    SubjectRecord {
        id,
        arm,
        x: subject.x.clone(),
        z,
        y: w.adherent.then_some(w.y),
        d_ae: w.d_ae,
        d_loe: w.d_loe,
        d_admin: w.d_admin,
        evidence,
    }
}

/// True stratum effects among the subjects of one generated trial.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SampleEffects {
    pub star_star: f64,
    pub star_plus: Option<f64>,
    pub plus_plus: Option<f64>,
    pub p_plus_plus: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationTruth {
    /// In dataset order.
    pub subjects: Vec<PotentialSubject>,
    pub effects: SampleEffects,
}

pub(crate) fn sample_effects(subjects: &[PotentialSubject]) -> SampleEffects {
    let mean_of = |f: &dyn Fn(&PotentialSubject) -> bool| {
        let (mut n, mut s) = (0usize, 0.0);
        for p in subjects.iter().filter(|p| f(p)) {
            n += 1;
            s += p.effect();
        }
        (n > 0).then(|| s / n as f64)
    };
    SampleEffects {
        star_star: mean_of(&|_| true).unwrap_or(f64::NAN),
        star_plus: mean_of(&|p| p.in_star_plus()),
        plus_plus: mean_of(&|p| p.in_plus_plus()),
        p_plus_plus: subjects.iter().filter(|p| p.in_plus_plus()).count() as f64 / subjects.len() as f64,
    }
}

/// Generates one randomized trial and its potential-outcome truth.
///
/// Exactly `n_reference` and `n_experimental` subjects are assigned by a
/// random permutation, independent of everything else.
pub fn generate_trial(spec: &SimulationSpec, seed: u64) -> Result<(TrialDataset, SimulationTruth), SimError> {
    spec.validate()?;
    let schema = spec.schema()?;
    let n = spec.n_reference + spec.n_experimental;
    let mut arms: Vec<Arm> = std::iter::repeat_n(Arm::Reference, spec.n_reference)
        .chain(std::iter::repeat_n(Arm::Experimental, spec.n_experimental))
        .collect();
    arms.shuffle(&mut rng::stream(seed, u64::MAX));
    let width = n.to_string().len();
    let mut records = Vec::with_capacity(n);
    let mut subjects = Vec::with_capacity(n);
    for (j, &arm) in arms.iter().enumerate() {
        let p = draw_subject(spec, seed, j as u64);
        records.push(observe(format!("S{:0width$}", j + 1), arm, &p, spec));
        subjects.push(p);
    }
    let effects = sample_effects(&subjects);
    let ds = TrialDataset::new(schema, records).map_err(|e| SimError::InvalidSpec(e.to_string()))?;
    Ok((ds, SimulationTruth { subjects, effects }))
}
