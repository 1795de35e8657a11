//! Convergence diagnostics for semigroups: strong (orbitwise) convergence,
//! operator-norm convergence, and the consistency checks between a
//! continuous semigroup and its embedded discrete semigroups.
//!
//! Convergence is declared by tail-window Cauchy testing rather than by
//! fixed-point residuals: the limit operator need not be a rank-1 projection.

use std::collections::VecDeque;
use std::sync::Arc;

use serde::Serialize;

use crate::error::Result;
use crate::functional::Functional;
use crate::numeric::DenseMatrix;
use crate::semigroup::{Semigroup, SemigroupKind};
use crate::space::WeightedSpace;
use crate::vector::LatticeVector;

/// Default certification tolerance.
pub const DEFAULT_TOL: f64 = 1e-9;
/// Default horizon in discrete steps.
pub const DEFAULT_HORIZON: usize = 200;
/// Fixed threshold for numerical rank estimation; echoed into every report
/// so borderline cases are auditable.
pub const RANK_THRESHOLD: f64 = 1e-8;

/// Early-stop plateau: an orbit that moves less than `tol * PLATEAU_FACTOR`
/// for `PLATEAU_STEPS` consecutive steps is considered settled.
const PLATEAU_FACTOR: f64 = 1e-3;
const PLATEAU_STEPS: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ConvergenceMode {
    Strong,
    OperatorNorm,
}

#[derive(Debug, Clone, Serialize)]
pub struct ConvergenceReport {
    pub mode: ConvergenceMode,
    pub converged: bool,
    /// Assembled limit, present only on a converged verdict.
    pub limit: Option<DenseMatrix>,
    pub horizon_used: usize,
    pub tolerance: f64,
    /// `(t, residual)` where the residual is the largest one-step movement
    /// over all (normalized) basis orbits at time t.
    pub residual_trace: Vec<(f64, f64)>,
    /// Largest distance from a tail-window point to the final point, over all
    /// basis orbits; the Cauchy quantity the verdict is based on.
    pub tail_residual: f64,
    /// `||P^2 - P||` in the weighted operator norm (converged runs only).
    pub projection_defect: Option<f64>,
    /// `max_t ||T_t P - P||` over a few sampled times (converged runs only).
    pub commutation_defect: Option<f64>,
    pub rank_estimate: Option<usize>,
    pub rank_threshold: f64,
    /// Largest cumulative escaped AL mass over the normalized basis orbits.
    pub escaped_mass: f64,
    /// Escape exceeded the declared tolerance: the verdict is not trustworthy
    /// for the untruncated operator.
    pub escape_exceeded: bool,
}

/// Runs all (normalized) basis orbits of the semigroup and declares strong
/// convergence if every orbit is Cauchy over the tail quarter of its horizon.
/// The limit is assembled column by column. Non-convergence is a report
/// outcome, not an error.
pub fn detect_strong_convergence(
    s: &Semigroup,
    horizon: usize,
    tol: f64,
) -> Result<ConvergenceReport> {
    if horizon < 2 {
        return Err(crate::error::LabError::InvalidConfig(
            "horizon must be at least 2".into(),
        ));
    }
    let space = Arc::clone(s.space());
    let n = space.dim();
    let step = s.unit_step()?;

    let window_cap = horizon / 4 + 2;
    let mut limit = DenseMatrix::zeros(n);
    let mut trace = vec![0.0f64; horizon];
    let mut trace_len = 0usize;
    let mut tail_residual = 0.0f64;
    let mut escaped_max = 0.0f64;

    for j in 0..n {
        let e_j = LatticeVector::basis(Arc::clone(&space), j);
        let scale = e_j.p_norm();
        let mut current = e_j.scale(1.0 / scale);
        let mut window: VecDeque<LatticeVector> = VecDeque::with_capacity(window_cap);
        let mut escaped = 0.0f64;
        let mut plateau = 0usize;
        let mut steps_used = 0usize;
        for t in 1..=horizon {
            let (next, e) = step.apply_tracked(&current)?;
            escaped += e;
            let residual = next.sub(&current)?.p_norm();
            current = next;
            steps_used = t;
            trace[t - 1] = trace[t - 1].max(residual);
            if window.len() == window_cap {
                window.pop_front();
            }
            window.push_back(current.clone());
            if residual <= tol * PLATEAU_FACTOR {
                plateau += 1;
                // The settled stretch must cover the whole tail-quarter
                // window, otherwise the Cauchy check would see the transient.
                if plateau >= PLATEAU_STEPS.max(t / 4 + 2) {
                    break;
                }
            } else {
                plateau = 0;
            }
        }
        trace_len = trace_len.max(steps_used);
        // Cauchy check over the last quarter of this orbit's run: distance of
        // every window point to the final point.
        let quarter = (steps_used / 4).max(1) + 1;
        let final_point = window.back().expect("horizon >= 2").clone();
        let mut orbit_tail = 0.0f64;
        for p in window.iter().rev().take(quarter) {
            orbit_tail = orbit_tail.max(p.sub(&final_point)?.p_norm());
        }
        tail_residual = tail_residual.max(orbit_tail);
        escaped_max = escaped_max.max(escaped);
        limit.set_column(j, final_point.scale(scale).entries());
    }

    let escape_exceeded = escaped_max > tol;
    let converged = tail_residual <= tol && !escape_exceeded;
    let residual_trace: Vec<(f64, f64)> = (0..trace_len)
        .map(|k| ((k + 1) as f64, trace[k]))
        .collect();

    let (limit, projection_defect, commutation_defect, rank_estimate) = if converged {
        let weights = space.weights();
        let p2 = limit.matmul(&limit);
        let projection_defect = p2.sub(&limit).weighted_operator_norm(weights);
        let step_dense = step.to_dense()?;
        let mut commutation = 0.0f64;
        let mut m = limit.clone();
        for _ in 0..3 {
            m = step_dense.matmul(&m);
            commutation = commutation.max(m.sub(&limit).weighted_operator_norm(weights));
        }
        let rank = limit.rank(RANK_THRESHOLD);
        (Some(limit), Some(projection_defect), Some(commutation), Some(rank))
    } else {
        (None, None, None, None)
    };

    Ok(ConvergenceReport {
        mode: ConvergenceMode::Strong,
        converged,
        limit,
        horizon_used: trace_len,
        tolerance: tol,
        residual_trace,
        tail_residual,
        projection_defect,
        commutation_defect,
        rank_estimate,
        rank_threshold: RANK_THRESHOLD,
        escaped_mass: escaped_max,
        escape_exceeded,
    })
}

/// Verdict of the single-orbit diagnostic.
#[derive(Debug, Clone, Serialize)]
pub struct OrbitVerdict {
    pub converged: bool,
    pub tail_residual: f64,
    pub residual_trace: Vec<(f64, f64)>,
}

/// Single-orbit Cauchy diagnostic in the space norm; cheaper than the full
/// basis sweep when only one direction matters.
pub fn orbit_convergence(
    s: &Semigroup,
    f: &LatticeVector,
    horizon: usize,
    tol: f64,
) -> Result<OrbitVerdict> {
    let orbit = s.unit_orbit(f, horizon)?;
    let final_point = orbit.points.last().expect("horizon >= 1");
    let quarter = (horizon / 4).max(1);
    let mut tail = 0.0f64;
    for p in orbit.points.iter().rev().take(quarter + 1) {
        tail = tail.max(p.sub(final_point)?.p_norm());
    }
    let mut trace = Vec::with_capacity(horizon);
    let mut prev = f.clone();
    for (k, p) in orbit.points.iter().enumerate() {
        trace.push(((k + 1) as f64, p.sub(&prev)?.p_norm()));
        prev = p.clone();
    }
    Ok(OrbitVerdict {
        converged: tail <= tol,
        tail_residual: tail,
        residual_trace: trace,
    })
}

/// Tests `||T_t - P|| -> 0` in the weighted operator norm, with `P` taken
/// from the strong diagnostic. Requires dense materialization.
pub fn operator_norm_convergence(
    s: &Semigroup,
    horizon: usize,
    tol: f64,
) -> Result<ConvergenceReport> {
    let strong = detect_strong_convergence(s, horizon, tol)?;
    let weights = s.space().weights();
    let step = s.unit_step()?.to_dense()?;

    let Some(p) = strong.limit.clone() else {
        // No strong limit: record the one-step operator movement and fail.
        let mut m = step.clone();
        let mut trace = Vec::with_capacity(horizon);
        for t in 1..=horizon {
            let next = step.matmul(&m);
            trace.push((t as f64, next.sub(&m).weighted_operator_norm(weights)));
            m = next;
        }
        return Ok(ConvergenceReport {
            mode: ConvergenceMode::OperatorNorm,
            converged: false,
            limit: None,
            residual_trace: trace,
            ..strong
        });
    };

    let mut m = DenseMatrix::identity(s.space().dim());
    let mut trace = Vec::with_capacity(horizon);
    let mut tail = 0.0f64;
    let quarter = (horizon / 4).max(1);
    for t in 1..=horizon {
        m = step.matmul(&m);
        let dist = m.sub(&p).weighted_operator_norm(weights);
        trace.push((t as f64, dist));
        if t + quarter > horizon {
            tail = tail.max(dist);
        }
    }
    let converged = tail <= tol && !strong.escape_exceeded;
    Ok(ConvergenceReport {
        mode: ConvergenceMode::OperatorNorm,
        converged,
        limit: converged.then_some(p),
        tail_residual: tail,
        residual_trace: trace,
        ..strong
    })
}

/// A rank-1 operator split `P = phi ⊗ f0` with `f0 >= 0` AL-normalized.
#[derive(Debug, Clone)]
pub struct RankOneParts {
    pub fixed_vector: LatticeVector,
    pub functional: Functional,
    /// `||P - phi ⊗ f0||` in the weighted operator norm.
    pub residual: f64,
}

/// Factors a (numerically) rank-1 matrix into `phi ⊗ f0`. Returns `None` for
/// the zero matrix.
pub fn rank_one_parts(p: &DenseMatrix, space: &Arc<WeightedSpace>) -> Option<RankOneParts> {
    let n = p.dim();
    let weights = space.weights();
    // Pick the heaviest column as the direction.
    let (j_star, norm_star) = (0..n)
        .map(|j| {
            let col = p.column(j);
            let norm: f64 = col
                .iter()
                .zip(weights)
                .map(|(x, w)| w * x.abs())
                .sum();
            (j, norm)
        })
        .max_by(|a, b| a.1.total_cmp(&b.1))?;
    if norm_star == 0.0 {
        return None;
    }
    let f0_entries: Vec<f64> = p.column(j_star).iter().map(|x| x / norm_star).collect();
    let f0 = LatticeVector::new(Arc::clone(space), f0_entries).ok()?;
    // beta_j = <col_j, f0>_w / <f0, f0>_w; phi coefficient is beta_j / w_j.
    let f0_sq: f64 = f0
        .entries()
        .iter()
        .zip(weights)
        .map(|(x, w)| w * x * x)
        .sum();
    let coeffs: Vec<f64> = (0..n)
        .map(|j| {
            let col = p.column(j);
            let dot: f64 = col
                .iter()
                .zip(f0.entries())
                .zip(weights)
                .map(|((c, x), w)| w * c * x)
                .sum();
            dot / f0_sq / weights[j]
        })
        .collect();
    let functional = Functional::new(Arc::clone(space), coeffs).ok()?;
    // Residual of the factorization.
    let mut approx = DenseMatrix::zeros(n);
    for j in 0..n {
        let beta = functional.coefficient(j) * weights[j];
        for i in 0..n {
            approx[(i, j)] = beta * f0.get(i);
        }
    }
    let residual = p.sub(&approx).weighted_operator_norm(weights);
    Some(RankOneParts {
        fixed_vector: f0,
        functional,
        residual,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct EmbeddedStepVerdict {
    pub step: f64,
    pub converged: bool,
    pub rank_estimate: Option<usize>,
    pub tail_residual: f64,
    #[serde(skip)]
    pub limit: Option<DenseMatrix>,
}

#[derive(Debug, Clone, Serialize)]
pub struct EmbeddedConsistencyReport {
    pub steps: Vec<EmbeddedStepVerdict>,
    /// Max pairwise distance between converged embedded limits.
    pub pairwise_defect: f64,
    pub all_embedded_agree: bool,
    pub continuous_converged: bool,
    pub continuous_tail_residual: f64,
    /// Whether a rank-1 embedded limit forced a full-convergence prediction.
    pub rank_one_prediction: bool,
    /// A theorem-backed implication failed on this instance.
    pub violated: bool,
    pub notes: Vec<String>,
    pub tolerance: f64,
}

/// Default embedding steps.
pub fn default_embedding_steps() -> Vec<f64> {
    vec![0.3, 1.0, std::f64::consts::SQRT_2]
}

/// For each step `t`, diagnoses the embedded discrete semigroup `(T_{tn})_n`
/// and cross-checks the verdicts against the direct continuous diagnostic.
/// Only the theorem-backed implications are asserted: full convergence forces
/// every embedded semigroup to converge to the same limit, and a rank-1
/// embedded limit forces full convergence. A finite step set samples the
/// quantifier, it does not prove it; the sampled steps are part of the report.
pub fn embedded_discrete_consistency(
    s: &Semigroup,
    steps: &[f64],
    horizon: usize,
    tol: f64,
) -> Result<EmbeddedConsistencyReport> {
    if matches!(s.kind(), SemigroupKind::Discrete { .. }) {
        return Err(crate::error::LabError::InvalidConfig(
            "embedded consistency applies to continuous-time semigroups".into(),
        ));
    }
    let mut verdicts = Vec::with_capacity(steps.len());
    let mut notes = Vec::new();
    for &step in steps {
        let embedded = Semigroup::discrete(s.evaluate(step)?);
        let report = detect_strong_convergence(&embedded, horizon, tol)?;
        verdicts.push(EmbeddedStepVerdict {
            step,
            converged: report.converged,
            rank_estimate: report.rank_estimate,
            tail_residual: report.tail_residual,
            limit: report.limit,
        });
    }

    let weights = s.space().weights();
    let mut pairwise = 0.0f64;
    for a in 0..verdicts.len() {
        for b in (a + 1)..verdicts.len() {
            if let (Some(pa), Some(pb)) = (&verdicts[a].limit, &verdicts[b].limit) {
                pairwise = pairwise.max(pa.sub(pb).weighted_operator_norm(weights));
            }
        }
    }
    let all_converged = verdicts.iter().all(|v| v.converged);
    let all_embedded_agree = all_converged && pairwise <= tol;

    // Direct continuous diagnostic over two incommensurate sampling grids:
    // a single grid step can be commensurate with a hidden period and fake
    // convergence; two grids with irrational ratio cannot both be.
    let grid_a = detect_strong_convergence(s, horizon, tol)?;
    let embedded_b = Semigroup::discrete(s.evaluate(std::f64::consts::FRAC_1_SQRT_2)?);
    let grid_b = detect_strong_convergence(&embedded_b, horizon, tol)?;
    let grids_agree = match (&grid_a.limit, &grid_b.limit) {
        (Some(pa), Some(pb)) => pa.sub(pb).weighted_operator_norm(weights) <= tol,
        _ => false,
    };
    let continuous_converged = grid_a.converged && grid_b.converged && grids_agree;
    if grid_a.converged && !continuous_converged {
        notes.push(
            "unit-grid sampling looked convergent but the incommensurate grid disagreed"
                .to_string(),
        );
    }
    let mut continuous = grid_a;
    continuous.converged = continuous_converged;
    if !continuous_converged {
        continuous.limit = None;
    }

    let mut violated = false;
    if continuous.converged {
        // Full convergence forces each embedded semigroup to converge to the
        // same limit.
        for v in &verdicts {
            if !v.converged {
                violated = true;
                notes.push(format!(
                    "full semigroup converges but embedded step {} does not",
                    v.step
                ));
            } else if let (Some(pc), Some(pe)) = (&continuous.limit, &v.limit) {
                let d = pc.sub(pe).weighted_operator_norm(weights);
                if d > tol {
                    violated = true;
                    notes.push(format!(
                        "embedded limit at step {} differs from continuous limit by {d:.3e}",
                        v.step
                    ));
                }
            }
        }
    }

    let mut rank_one_prediction = false;
    for v in &verdicts {
        if v.converged && v.rank_estimate == Some(1) {
            rank_one_prediction = true;
            if !continuous.converged {
                violated = true;
                notes.push(format!(
                    "embedded step {} converges to a rank-1 limit but the full semigroup does not converge",
                    v.step
                ));
            } else if let (Some(pc), Some(pe)) = (&continuous.limit, &v.limit) {
                let d = pc.sub(pe).weighted_operator_norm(weights);
                if d > tol {
                    violated = true;
                    notes.push(format!(
                        "rank-1 embedded limit at step {} differs from the full limit by {d:.3e}",
                        v.step
                    ));
                }
            }
        }
    }
    if !continuous.converged && !rank_one_prediction {
        notes.push(
            "no rank-1 embedded limit: embedded convergence alone does not decide the full semigroup"
                .into(),
        );
    }

    Ok(EmbeddedConsistencyReport {
        steps: verdicts,
        pairwise_defect: pairwise,
        all_embedded_agree,
        continuous_converged: continuous.converged,
        continuous_tail_residual: continuous.tail_residual,
        rank_one_prediction,
        violated,
        notes,
        tolerance: tol,
    })
}

/// A projection semigroup is constant: if every sampled `T_t` is idempotent
/// within `tol`, returns the maximal pairwise operator-norm distance (which
/// the caller may then assert to be <= 3 tol). Returns `None` when some
/// sampled operator is not idempotent, i.e. the premise fails.
pub fn projection_constancy_defect(
    s: &Semigroup,
    grid: &[f64],
    tol: f64,
) -> Result<Option<f64>> {
    let weights = s.space().weights();
    let mut mats = Vec::with_capacity(grid.len());
    for &t in grid {
        let m = s.evaluate(t)?.to_dense()?;
        let defect = m.matmul(&m).sub(&m).weighted_operator_norm(weights);
        if defect > tol {
            return Ok(None);
        }
        mats.push(m);
    }
    let mut max_dist = 0.0f64;
    for a in 0..mats.len() {
        for b in (a + 1)..mats.len() {
            max_dist = max_dist.max(mats[a].sub(&mats[b]).weighted_operator_norm(weights));
        }
    }
    Ok(Some(max_dist))
}
