//! Lower-bound estimation and certification.
//!
//! The estimators in this module turn orbit data into lower-bound candidates;
//! the certifiers in [`certify`] apply the theorem-level implications that
//! predict convergence from certified bounds. Hypothesis failures and
//! conclusion failures are kept as distinct report states: "not applicable"
//! is never conflated with "violated".

mod certify;

pub use certify::*;

use std::sync::Arc;

use serde::Serialize;

use crate::error::{LabError, Result};
use crate::semigroup::Semigroup;
use crate::vector::{LatticeVector, NormKind};

/// Default shrink factor applied to tail-infimum estimates; asymptotic
/// domination tolerates the slack.
pub const DEFAULT_SHRINK: f64 = 0.95;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundKind {
    Uniform,
    Individual,
    Maximal,
    PsiWeighted,
}

/// Mode of the uniform check: pointwise-in-f ("strong") or with the sup over
/// the normalized positive cone ("uniform", the operator-norm variant).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckMode {
    Strong,
    Uniform,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Passed,
    Failed,
    Skipped,
}

#[derive(Debug, Clone, Serialize)]
pub struct HypothesisCheck {
    pub name: String,
    pub status: Status,
    pub detail: String,
}

impl HypothesisCheck {
    pub fn new(name: &str, ok: bool, detail: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            status: if ok { Status::Passed } else { Status::Failed },
            detail: detail.into(),
        }
    }

    pub fn skipped(name: &str, detail: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            status: Status::Skipped,
            detail: detail.into(),
        }
    }

    pub fn passed(&self) -> bool {
        self.status == Status::Passed
    }
}

/// Verdict of a theorem-level certifier.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Conclusion {
    /// Hypotheses held and the predicted conclusion was observed.
    Certified,
    /// Hypotheses did not hold; the theorem makes no prediction here.
    NotApplicable,
    /// Hypotheses held but the predicted conclusion failed. On any gallery
    /// instance this is a build-failing event.
    Violated,
}

#[derive(Debug, Clone, Serialize)]
pub struct CertifierReport {
    pub theorem: String,
    pub hypotheses: Vec<HypothesisCheck>,
    pub conclusion: Conclusion,
    pub notes: Vec<String>,
    pub tolerance: f64,
}

impl CertifierReport {
    fn new(theorem: &str, tolerance: f64) -> Self {
        Self {
            theorem: theorem.into(),
            hypotheses: Vec::new(),
            conclusion: Conclusion::NotApplicable,
            notes: Vec::new(),
            tolerance,
        }
    }
}

/// Structured verdict about one lower-bound candidate.
#[derive(Debug, Clone, Serialize)]
pub struct LowerBoundReport {
    pub kind: BoundKind,
    /// The bound that was checked or estimated (shrunk, for estimates).
    pub bound: LatticeVector,
    pub norm_of_bound: f64,
    /// Norm of the unshrunk tail-infimum candidate; the epsilon-floor
    /// hypotheses of the certifiers are evaluated against this value.
    pub raw_norm: f64,
    /// `(t, deficiency)` along the horizon; sup over vertices for the
    /// uniform kind, single-orbit otherwise.
    pub deficiency_trace: Vec<(f64, f64)>,
    pub certified: bool,
    pub hypothesis_log: Vec<HypothesisCheck>,
    /// Sampled estimate of `sup_t ||T_t||`; an estimate, not a proof.
    pub norm_bound_estimate: f64,
    pub escaped_mass: f64,
    pub tolerance: f64,
}

fn require_nonnegative(v: &LatticeVector, what: &str) -> Result<()> {
    if !v.is_nonnegative() {
        return Err(LabError::InvalidVector(format!("{what} has negative entries")));
    }
    Ok(())
}

fn require_horizon(horizon: usize) -> Result<()> {
    if horizon < 2 {
        return Err(LabError::InvalidConfig("horizon must be at least 2".into()));
    }
    Ok(())
}

/// Max deficiency over the tail quarter of a trace.
fn tail_max(trace: &[(f64, f64)]) -> f64 {
    let quarter = (trace.len() / 4).max(1);
    trace
        .iter()
        .rev()
        .take(quarter)
        .fold(0.0f64, |m, &(_, d)| m.max(d))
}

/// Checks a candidate `h >= 0` as a uniform lower bound (Lasota-Yorke sense):
/// the deficiency `||(T_t f - h)^-||_1` must vanish along the horizon for
/// every normalized `f >= 0`.
///
/// The sup over the normalized positive cone is attained at the weighted
/// basis vertices `e_j / ||e_j||`: the map `f -> ||(Af - h)^-||_1` is convex
/// (coordinatewise composition of an affine map with `max(-x, 0)`, summed
/// with positive weights) and the normalized cone is the convex hull of the
/// vertices, so the check iterates the basis orbits only. The randomized
/// soundness property test guards this reduction.
pub fn uniform_lower_bound_check(
    s: &Semigroup,
    h: &LatticeVector,
    horizon: usize,
    tol: f64,
    mode: CheckMode,
) -> Result<LowerBoundReport> {
    require_horizon(horizon)?;
    require_nonnegative(h, "lower bound h")?;
    let space = Arc::clone(s.space());
    space.check_same(h.space())?;
    if !space.is_al() {
        return Err(LabError::InvalidSpace(
            "uniform lower bounds are an AL-mode notion; use the psi-weighted checker on p > 1 spaces"
                .into(),
        ));
    }
    let n = space.dim();
    let step = s.unit_step()?;

    let mut sup_trace = vec![0.0f64; horizon];
    let mut per_vertex_tail = vec![0.0f64; n];
    let mut norm_estimate = 0.0f64;
    let mut escaped_max = 0.0f64;
    for j in 0..n {
        let e_j = LatticeVector::basis(Arc::clone(&space), j);
        let mut current = e_j.scale(1.0 / e_j.al_norm());
        let mut escaped = 0.0;
        let mut vertex_trace = Vec::with_capacity(horizon);
        for t in 1..=horizon {
            let (next, e) = step.apply_tracked(&current)?;
            current = next;
            escaped += e;
            let d = current.deficiency(h, &NormKind::Al)?;
            sup_trace[t - 1] = sup_trace[t - 1].max(d);
            vertex_trace.push((t as f64, d));
            norm_estimate = norm_estimate.max(current.al_norm());
        }
        per_vertex_tail[j] = tail_max(&vertex_trace);
        escaped_max = escaped_max.max(escaped);
    }

    let trace: Vec<(f64, f64)> = (0..horizon)
        .map(|k| ((k + 1) as f64, sup_trace[k]))
        .collect();
    let settled = match mode {
        CheckMode::Uniform => tail_max(&trace) <= tol,
        CheckMode::Strong => per_vertex_tail.iter().all(|&d| d <= tol),
    };
    let escape_ok = escaped_max <= tol;
    let hypothesis_log = vec![
        HypothesisCheck::new("al_mode", true, "p = 1"),
        HypothesisCheck::new("bound_nonnegative", true, format!("||h|| = {}", h.al_norm())),
        HypothesisCheck::new(
            "escape_within_tolerance",
            escape_ok,
            format!("max escaped mass {escaped_max:.3e}"),
        ),
    ];
    Ok(LowerBoundReport {
        kind: BoundKind::Uniform,
        bound: h.clone(),
        norm_of_bound: h.al_norm(),
        raw_norm: h.al_norm(),
        deficiency_trace: trace,
        certified: settled && escape_ok,
        hypothesis_log,
        norm_bound_estimate: norm_estimate,
        escaped_mass: escaped_max,
        tolerance: tol,
    })
}

/// Estimates an individual lower bound for `(T, f)` as the coordinatewise
/// infimum of the orbit tail (last half of the horizon), scaled by the shrink
/// factor, and validates the estimate by its own deficiency trace. The
/// epsilon-floor hypotheses downstream are evaluated on the unshrunk
/// infimum (`raw_norm`). A null tail-infimum yields the zero bound, which is
/// always valid and never useful.
pub fn individual_lower_bound_estimate(
    s: &Semigroup,
    f: &LatticeVector,
    horizon: usize,
    shrink: f64,
    tol: f64,
) -> Result<LowerBoundReport> {
    require_horizon(horizon)?;
    require_nonnegative(f, "orbit start f")?;
    if f.is_zero() {
        return Err(LabError::InvalidVector("orbit start f must be nonzero".into()));
    }
    if !(shrink > 0.0 && shrink <= 1.0) {
        return Err(LabError::InvalidConfig(format!(
            "shrink factor must lie in (0, 1], got {shrink}"
        )));
    }
    let orbit = s.unit_orbit(f, horizon)?;
    let tail_start = horizon / 2;
    let mid = tail_start + (horizon - tail_start) / 2;
    let window_inf = |lo: usize, hi: usize| -> Result<LatticeVector> {
        let mut inf = orbit.points[lo].clone();
        for p in &orbit.points[lo..hi] {
            inf = inf.meet(p)?;
        }
        Ok(inf)
    };
    let early = window_inf(tail_start, mid)?;
    let late = window_inf(mid, horizon)?;
    let mut raw = early.meet(&late)?;
    // A tail infimum that keeps shrinking across the window halves belongs to
    // a decaying orbit: its asymptotic infimum is null, not the finite-horizon
    // leftover. Treat it as the zero bound.
    let mut decaying = false;
    if late.al_norm() < 0.5 * early.al_norm() {
        raw = LatticeVector::zeros(Arc::clone(s.space()));
        decaying = true;
    }
    let bound = raw.scale(shrink);
    let mut trace = Vec::with_capacity(horizon);
    let mut norm_estimate = 0.0f64;
    let f_norm = f.al_norm();
    for (k, p) in orbit.points.iter().enumerate() {
        trace.push(((k + 1) as f64, p.deficiency(&bound, &NormKind::Al)?));
        norm_estimate = norm_estimate.max(p.al_norm() / f_norm);
    }
    let escaped = *orbit.escaped.last().unwrap_or(&0.0);
    let escape_ok = escaped <= tol;
    let certified = tail_max(&trace) <= tol && escape_ok;
    let mut hypothesis_log = vec![HypothesisCheck::new(
        "escape_within_tolerance",
        escape_ok,
        format!("escaped mass {escaped:.3e}"),
    )];
    if decaying {
        hypothesis_log.push(HypothesisCheck::skipped(
            "tail_infimum_decaying",
            "tail infimum halves across the window; treated as null",
        ));
    }
    Ok(LowerBoundReport {
        kind: BoundKind::Individual,
        norm_of_bound: bound.al_norm(),
        raw_norm: raw.al_norm(),
        bound,
        deficiency_trace: trace,
        certified,
        hypothesis_log,
        norm_bound_estimate: norm_estimate,
        escaped_mass: escaped,
        tolerance: tol,
    })
}

/// Report of the maximal-bound iteration.
#[derive(Debug, Clone, Serialize)]
pub struct MaximalBoundReport {
    pub report: LowerBoundReport,
    /// Whether the final bound is numerically a fixed point of the semigroup.
    pub fixed_point: bool,
    pub fixed_point_residual: f64,
    pub rounds: usize,
}

const MAX_ROUNDS: usize = 200;

/// Estimates the maximal fixed lower bound for `(T, f)` by alternating a
/// fixed-point refinement (join with the tail infimum of the current bound's
/// orbit) with a residual-augmentation step: the late-orbit surplus
/// `(T_t f - h)^+` is itself granted a lower bound estimate, which is added
/// to `h`. Every candidate is re-validated against the orbit of `f` before
/// acceptance; the iteration stops when the AL-norm gain per round drops to
/// `tol`.
pub fn maximal_lower_bound_estimate(
    s: &Semigroup,
    f: &LatticeVector,
    horizon: usize,
    tol: f64,
) -> Result<MaximalBoundReport> {
    let first = individual_lower_bound_estimate(s, f, horizon, DEFAULT_SHRINK, tol)?;
    let orbit = s.unit_orbit(f, horizon)?;
    let late = orbit.points.last().expect("horizon >= 1").clone();
    let escaped = *orbit.escaped.last().unwrap_or(&0.0);

    let validate = |candidate: &LatticeVector| -> Result<(bool, Vec<(f64, f64)>)> {
        let mut trace = Vec::with_capacity(orbit.points.len());
        for (k, p) in orbit.points.iter().enumerate() {
            trace.push(((k + 1) as f64, p.deficiency(candidate, &NormKind::Al)?));
        }
        Ok((tail_max(&trace) <= tol, trace))
    };

    let mut h = first.bound.clone();
    let mut trace = first.deficiency_trace.clone();
    let mut rounds = 0usize;
    while rounds < MAX_ROUNDS {
        rounds += 1;
        let before = h.al_norm();
        // Fixed-point refinement.
        let mut candidate = h.clone();
        if !h.is_zero() {
            let refined = tail_infimum(s, &h, horizon)?;
            candidate = candidate.join(&refined)?;
        }
        // Residual growth (the constructive step behind the convergence
        // theorems): grant the late surplus its own estimated bound.
        let (surplus, _) = late.sub(&candidate)?.decompose();
        if surplus.al_norm() > tol {
            let extra = tail_infimum(s, &surplus, horizon)?.scale(DEFAULT_SHRINK);
            let grown = candidate.add(&extra)?;
            if let (true, t) = validate(&grown)? {
                candidate = grown;
                trace = t;
            }
        }
        if candidate.al_norm() > before {
            match validate(&candidate)? {
                (true, t) => {
                    h = candidate;
                    trace = t;
                }
                (false, _) => break,
            }
        }
        if h.al_norm() - before <= tol {
            break;
        }
    }

    let step = s.unit_step()?;
    let fixed_residual = step.apply(&h)?.sub(&h)?.al_norm();
    let fixed_point = fixed_residual <= tol.max(1e-9) * (1.0 + h.al_norm());
    let certified = validate(&h)?.0 && escaped <= tol;
    let norm = h.al_norm();
    Ok(MaximalBoundReport {
        report: LowerBoundReport {
            kind: BoundKind::Maximal,
            bound: h,
            norm_of_bound: norm,
            raw_norm: norm,
            deficiency_trace: trace,
            certified,
            hypothesis_log: vec![HypothesisCheck::new(
                "escape_within_tolerance",
                escaped <= tol,
                format!("escaped mass {escaped:.3e}"),
            )],
            norm_bound_estimate: first.norm_bound_estimate,
            escaped_mass: escaped,
            tolerance: tol,
        },
        fixed_point,
        fixed_point_residual: fixed_residual,
        rounds,
    })
}

/// Coordinatewise infimum of the tail (last half) of the orbit of `g`.
fn tail_infimum(s: &Semigroup, g: &LatticeVector, horizon: usize) -> Result<LatticeVector> {
    if g.is_zero() {
        return Ok(g.clone());
    }
    let orbit = s.unit_orbit(g, horizon)?;
    let tail_start = horizon / 2;
    let mut inf = orbit.points[tail_start].clone();
    for p in &orbit.points[tail_start..] {
        inf = inf.meet(p)?;
    }
    Ok(inf)
}
