//! Theorem-level certifiers: each one checks the hypotheses of a convergence
//! theorem on orbit data, then asserts the predicted conclusion against the
//! convergence diagnostics. A certifier distinguishes three outcomes:
//! certified, not applicable (hypotheses failed), and violated (hypotheses
//! held, prediction failed).

use std::sync::Arc;

use serde::Serialize;

use crate::convergence::{
    detect_strong_convergence, rank_one_parts, ConvergenceReport, RankOneParts,
};
use crate::error::{LabError, Result};
use crate::functional::Functional;
use crate::numeric::DenseMatrix;
use crate::semigroup::Semigroup;
use crate::vector::{LatticeVector, NormKind};

use super::{
    individual_lower_bound_estimate, uniform_lower_bound_check, CertifierReport, CheckMode,
    Conclusion, HypothesisCheck, LowerBoundReport, DEFAULT_SHRINK,
};

/// Default floor below which a limit column is treated as zero.
pub const DEFAULT_POSITIVITY_FLOOR: f64 = 1e-12;

/// Minimum AL norm of the limit columns, normalized by the basis norms:
/// `min_j ||P e_j||_1 / ||e_j||_1`.
fn min_column_ratio(p: &DenseMatrix, weights: &[f64]) -> f64 {
    let n = p.dim();
    (0..n)
        .map(|j| {
            let col = p.column(j);
            let norm: f64 = col.iter().zip(weights).map(|(x, w)| w * x.abs()).sum();
            norm / weights[j]
        })
        .fold(f64::INFINITY, f64::min)
}

fn min_column_norm(p: &DenseMatrix, weights: &[f64]) -> f64 {
    let n = p.dim();
    (0..n)
        .map(|j| {
            p.column(j)
                .iter()
                .zip(weights)
                .map(|(x, w)| w * x.abs())
                .sum::<f64>()
        })
        .fold(f64::INFINITY, f64::min)
}

/// Outcome of the Lasota-Yorke certification: a certified non-zero uniform
/// lower bound predicts strong convergence to a rank-1 projection
/// `P = phi ⊗ f0`; in Markov mode `phi` is the norm functional and
/// `||f0||_1 = 1`, in merely-bounded mode the fixed functional is floored by
/// the bound norm.
#[derive(Debug, Clone, Serialize)]
pub struct LasotaYorkeOutcome {
    pub bound_report: LowerBoundReport,
    pub certifier: CertifierReport,
    pub convergence: ConvergenceReport,
    pub predicted_limit: Option<DenseMatrix>,
    pub fixed_vector: Option<LatticeVector>,
    pub fixed_functional: Option<Functional>,
    pub markov_mode: bool,
}

pub fn lasota_yorke_certify(
    s: &Semigroup,
    h: &LatticeVector,
    horizon: usize,
    tol: f64,
) -> Result<LasotaYorkeOutcome> {
    let bound_report = uniform_lower_bound_check(s, h, horizon, tol, CheckMode::Uniform)?;
    if !bound_report.certified {
        return Err(LabError::HypothesisNotCertified(
            "h failed the uniform lower-bound check".into(),
        ));
    }
    if bound_report.norm_of_bound <= 0.0 {
        return Err(LabError::HypothesisNotCertified(
            "the zero bound certifies trivially but predicts nothing".into(),
        ));
    }
    let epsilon = bound_report.norm_of_bound;
    let markov_mode = s.unit_step()?.is_markov(tol.max(1e-12));

    let mut certifier = CertifierReport::new("lasota-yorke", tol);
    certifier.hypotheses.push(HypothesisCheck::new(
        "nonzero_uniform_lower_bound",
        true,
        format!("||h|| = {epsilon}"),
    ));
    certifier.hypotheses.push(HypothesisCheck::new(
        "bounded_semigroup_sampled",
        bound_report.norm_bound_estimate.is_finite(),
        format!("sampled sup ||T_t|| = {:.6}", bound_report.norm_bound_estimate),
    ));
    certifier.hypotheses.push(HypothesisCheck::new(
        "markov_mode",
        true,
        if markov_mode { "Markov" } else { "bounded positive" }.to_string(),
    ));

    let convergence = detect_strong_convergence(s, horizon, tol)?;
    let slack = 10.0 * tol;
    let mut failures = Vec::new();
    let mut parts: Option<RankOneParts> = None;
    if !convergence.converged {
        failures.push("predicted strong convergence not observed".to_string());
    } else {
        if convergence.rank_estimate != Some(1) {
            failures.push(format!(
                "limit rank {:?} is not 1",
                convergence.rank_estimate
            ));
        }
        let p = convergence.limit.as_ref().expect("converged");
        match rank_one_parts(p, s.space()) {
            None => failures.push("limit is numerically zero".into()),
            Some(split) => {
                if split.residual > slack.max(1e-8) {
                    failures.push(format!(
                        "rank-1 factorization residual {:.3e} too large",
                        split.residual
                    ));
                }
                if !split.fixed_vector.is_nonnegative() {
                    failures.push("fixed vector of the limit is not nonnegative".into());
                }
                if markov_mode {
                    let f0_norm = split.fixed_vector.al_norm();
                    if (f0_norm - 1.0).abs() > slack {
                        failures.push(format!("Markov mode: ||f0|| = {f0_norm} != 1"));
                    }
                    let max_dev = split
                        .functional
                        .coefficients()
                        .iter()
                        .fold(0.0f64, |m, c| m.max((c - 1.0).abs()));
                    if max_dev > slack.max(1e-7) {
                        failures.push(format!(
                            "Markov mode: fixed functional deviates from the norm functional by {max_dev:.3e}"
                        ));
                    }
                } else {
                    // Bounded mode: <phi, e_j> / ||e_j|| >= epsilon = ||h||.
                    let min_phi = split
                        .functional
                        .coefficients()
                        .iter()
                        .fold(f64::INFINITY, |m, &c| m.min(c));
                    if min_phi < epsilon * (1.0 - 1e-6) - slack {
                        failures.push(format!(
                            "fixed functional floor {min_phi:.6} below the bound norm {epsilon:.6}"
                        ));
                    }
                }
                parts = Some(split);
            }
        }
    }

    certifier.conclusion = if failures.is_empty() {
        Conclusion::Certified
    } else {
        Conclusion::Violated
    };
    certifier.notes = failures;
    Ok(LasotaYorkeOutcome {
        bound_report,
        predicted_limit: convergence.limit.clone(),
        fixed_vector: parts.as_ref().map(|p| p.fixed_vector.clone()),
        fixed_functional: parts.map(|p| p.functional),
        convergence,
        certifier,
        markov_mode,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct VertexBound {
    pub index: usize,
    pub raw_norm: f64,
    pub shrunk_norm: f64,
    pub certified: bool,
}

/// Two-sided certification of the individual-lower-bound theorem: vertex
/// bounds with norms floored by `epsilon` predict strong convergence with
/// `||P e_j|| >= epsilon ||e_j||`, and conversely a floored limit grants each
/// vertex its limit column as a certified bound.
#[derive(Debug, Clone, Serialize)]
pub struct IndividualBoundsOutcome {
    pub epsilon: f64,
    pub vertices: Vec<VertexBound>,
    pub min_raw_norm: f64,
    pub hypothesis_holds: bool,
    pub converged: bool,
    pub rank_estimate: Option<usize>,
    pub min_limit_ratio: Option<f64>,
    pub forward: Conclusion,
    pub backward: Conclusion,
    pub certifier: CertifierReport,
}

pub fn individual_bounds_certify(
    s: &Semigroup,
    epsilon: f64,
    horizon: usize,
    tol: f64,
) -> Result<IndividualBoundsOutcome> {
    if !(epsilon > 0.0) {
        return Err(LabError::InvalidConfig(format!(
            "epsilon floor must be positive, got {epsilon}"
        )));
    }
    let space = Arc::clone(s.space());
    let n = space.dim();

    let mut vertices = Vec::with_capacity(n);
    let mut min_raw = f64::INFINITY;
    let mut all_certified = true;
    for j in 0..n {
        let e_j = LatticeVector::basis(Arc::clone(&space), j);
        let v_j = e_j.scale(1.0 / e_j.al_norm());
        let r = individual_lower_bound_estimate(s, &v_j, horizon, DEFAULT_SHRINK, tol)?;
        min_raw = min_raw.min(r.raw_norm);
        all_certified &= r.certified;
        vertices.push(VertexBound {
            index: j,
            raw_norm: r.raw_norm,
            shrunk_norm: r.norm_of_bound,
            certified: r.certified,
        });
    }
    let hypothesis_holds = all_certified && min_raw >= epsilon;

    let convergence = detect_strong_convergence(s, horizon, tol)?;
    let min_ratio = convergence
        .limit
        .as_ref()
        .map(|p| min_column_ratio(p, space.weights()));

    let mut certifier = CertifierReport::new("individual-lower-bounds", tol);
    certifier.hypotheses.push(HypothesisCheck::new(
        "vertex_bounds_floored",
        hypothesis_holds,
        format!("min vertex bound {min_raw:.6e} vs epsilon {epsilon:.6e}"),
    ));

    let slack = epsilon * 1e-6 + 10.0 * tol;
    let forward = if hypothesis_holds {
        let ok = convergence.converged
            && min_ratio.is_some_and(|r| r >= epsilon - slack);
        if !ok {
            certifier.notes.push(format!(
                "forward: converged = {}, min limit ratio = {min_ratio:?}",
                convergence.converged
            ));
        }
        if ok {
            Conclusion::Certified
        } else {
            Conclusion::Violated
        }
    } else {
        Conclusion::NotApplicable
    };

    // Backward: a converged limit with columns floored by epsilon grants each
    // vertex the bound h_j = P e_j / ||e_j||, validated by its deficiency
    // trace.
    let backward = match (&convergence.limit, min_ratio) {
        (Some(p), Some(r)) if convergence.converged && r >= epsilon => {
            let mut ok = true;
            for j in 0..n {
                let e_j = LatticeVector::basis(Arc::clone(&space), j);
                let scale = e_j.al_norm();
                let h_j = LatticeVector::new(Arc::clone(&space), p.column(j))?.scale(1.0 / scale);
                let orbit = s.unit_orbit(&e_j.scale(1.0 / scale), horizon)?;
                let quarter = (horizon / 4).max(1);
                let tail = orbit
                    .points
                    .iter()
                    .rev()
                    .take(quarter)
                    .map(|x| x.deficiency(&h_j, &NormKind::Al))
                    .collect::<Result<Vec<_>>>()?
                    .into_iter()
                    .fold(0.0f64, f64::max);
                if tail > 2.0 * tol {
                    ok = false;
                    certifier.notes.push(format!(
                        "backward: limit column {j} fails as a bound (tail deficiency {tail:.3e})"
                    ));
                }
            }
            if ok {
                Conclusion::Certified
            } else {
                Conclusion::Violated
            }
        }
        _ => Conclusion::NotApplicable,
    };

    certifier.conclusion = match (forward, backward) {
        (Conclusion::Violated, _) | (_, Conclusion::Violated) => Conclusion::Violated,
        (Conclusion::Certified, _) | (_, Conclusion::Certified) => Conclusion::Certified,
        _ => Conclusion::NotApplicable,
    };

    Ok(IndividualBoundsOutcome {
        epsilon,
        vertices,
        min_raw_norm: min_raw,
        hypothesis_holds,
        converged: convergence.converged,
        rank_estimate: convergence.rank_estimate,
        min_limit_ratio: min_ratio,
        forward,
        backward,
        certifier,
    })
}

/// Domination transfer: if the dominated semigroup converges to a limit with
/// `||P f|| >= eps ||f||` and the dominating semigroup asymptotically
/// dominates it on the cone, the dominating semigroup must converge too.
#[derive(Debug, Clone, Serialize)]
pub struct DominationOutcome {
    pub domination_certified: bool,
    pub domination_trace: Vec<(f64, f64)>,
    pub sub_converged: bool,
    pub sub_min_ratio: Option<f64>,
    pub dom_converged: Option<bool>,
    pub certifier: CertifierReport,
}

pub fn domination_transfer(
    s_dom: &Semigroup,
    s_sub: &Semigroup,
    horizon: usize,
    tol: f64,
) -> Result<DominationOutcome> {
    s_dom.space().check_same(s_sub.space())?;
    let space = Arc::clone(s_dom.space());
    let n = space.dim();
    let dom_step = s_dom.unit_step()?;
    let sub_step = s_sub.unit_step()?;

    // Vertex sweep of both semigroups in lockstep; the sup of the domination
    // deficiency over normalized f is attained at the vertices by the same
    // convexity argument as for the uniform check.
    let mut trace = vec![0.0f64; horizon];
    for j in 0..n {
        let e_j = LatticeVector::basis(Arc::clone(&space), j);
        let start = e_j.scale(1.0 / e_j.al_norm());
        let mut dom = start.clone();
        let mut sub = start;
        for t in 1..=horizon {
            dom = dom_step.apply(&dom)?;
            sub = sub_step.apply(&sub)?;
            trace[t - 1] = trace[t - 1].max(dom.deficiency(&sub, &NormKind::Al)?);
        }
    }
    let trace: Vec<(f64, f64)> = (0..horizon).map(|k| ((k + 1) as f64, trace[k])).collect();
    let quarter = (horizon / 4).max(1);
    let domination_certified = trace
        .iter()
        .rev()
        .take(quarter)
        .all(|&(_, d)| d <= tol);

    let sub_report = detect_strong_convergence(s_sub, horizon, tol)?;
    let sub_min_ratio = sub_report
        .limit
        .as_ref()
        .map(|p| min_column_ratio(p, space.weights()));

    let mut certifier = CertifierReport::new("domination-transfer", tol);
    certifier.hypotheses.push(HypothesisCheck::new(
        "asymptotic_domination",
        domination_certified,
        format!("tail domination deficiency <= {tol:.1e}"),
    ));
    let floored = sub_report.converged && sub_min_ratio.is_some_and(|r| r > tol);
    certifier.hypotheses.push(HypothesisCheck::new(
        "dominated_limit_floored",
        floored,
        format!("sub converged = {}, min ratio = {sub_min_ratio:?}", sub_report.converged),
    ));

    let mut dom_converged = None;
    certifier.conclusion = if domination_certified && floored {
        let dom_report = detect_strong_convergence(s_dom, horizon, tol)?;
        dom_converged = Some(dom_report.converged);
        if dom_report.converged {
            Conclusion::Certified
        } else {
            certifier
                .notes
                .push("dominating semigroup failed to converge".into());
            Conclusion::Violated
        }
    } else {
        certifier
            .notes
            .push("hypotheses not met; no prediction made".into());
        Conclusion::NotApplicable
    };

    Ok(DominationOutcome {
        domination_certified,
        domination_trace: trace,
        sub_converged: sub_report.converged,
        sub_min_ratio,
        dom_converged,
        certifier,
    })
}

/// Ding-style certification for semigroups whose adjoint is a lattice
/// homomorphism (structurally: at most one nonzero per column). Per-vertex
/// nonzero individual bounds, with no epsilon floor, predict strong
/// convergence to a limit with strictly positive columns.
#[derive(Debug, Clone, Serialize)]
pub struct DingOutcome {
    pub vertices: Vec<VertexBound>,
    pub hypothesis_holds: bool,
    pub converged: bool,
    pub min_column_norm: Option<f64>,
    pub positivity_floor: f64,
    pub limit: Option<DenseMatrix>,
    pub certifier: CertifierReport,
}

pub fn ding_certify(
    s: &Semigroup,
    horizon: usize,
    tol: f64,
    positivity_floor: f64,
) -> Result<DingOutcome> {
    let step = s.unit_step()?;
    if !step.adjoint_is_lattice_homomorphism() {
        return Err(LabError::StructuralGate(
            "ding certification requires the adjoint to be a lattice homomorphism \
             (at most one structural nonzero per column)"
                .into(),
        ));
    }
    let space = Arc::clone(s.space());
    let n = space.dim();
    let mut vertices = Vec::with_capacity(n);
    let mut hypothesis = true;
    for j in 0..n {
        let e_j = LatticeVector::basis(Arc::clone(&space), j);
        let v_j = e_j.scale(1.0 / e_j.al_norm());
        let r = individual_lower_bound_estimate(s, &v_j, horizon, DEFAULT_SHRINK, tol)?;
        hypothesis &= r.certified && r.raw_norm > 0.0;
        vertices.push(VertexBound {
            index: j,
            raw_norm: r.raw_norm,
            shrunk_norm: r.norm_of_bound,
            certified: r.certified,
        });
    }

    let mut certifier = CertifierReport::new("ding", tol);
    certifier.hypotheses.push(HypothesisCheck::new(
        "adjoint_lattice_homomorphism",
        true,
        "structural gate passed",
    ));
    certifier.hypotheses.push(HypothesisCheck::new(
        "vertex_bounds_nonzero",
        hypothesis,
        format!(
            "min raw bound {:.3e}",
            vertices.iter().fold(f64::INFINITY, |m, v| m.min(v.raw_norm))
        ),
    ));

    let convergence = detect_strong_convergence(s, horizon, tol)?;
    let min_col = convergence
        .limit
        .as_ref()
        .map(|p| min_column_norm(p, space.weights()));
    certifier.conclusion = if hypothesis {
        let positive = min_col.is_some_and(|m| m >= positivity_floor);
        if convergence.converged && positive {
            Conclusion::Certified
        } else {
            certifier.notes.push(format!(
                "converged = {}, min column norm = {min_col:?} vs floor {positivity_floor:.1e}",
                convergence.converged
            ));
            Conclusion::Violated
        }
    } else {
        certifier
            .notes
            .push("some vertex admits only the zero bound; no prediction".into());
        Conclusion::NotApplicable
    };

    Ok(DingOutcome {
        vertices,
        hypothesis_holds: hypothesis,
        converged: convergence.converged,
        min_column_norm: min_col,
        positivity_floor,
        limit: convergence.limit,
        certifier,
    })
}

/// Rigidity of semigroups of lattice homomorphisms: nonzero individual
/// bounds (equivalently, a strictly positive limit) force the semigroup to
/// be the identity.
#[derive(Debug, Clone, Serialize)]
pub struct RigidityOutcome {
    pub hypothesis_holds: bool,
    pub identity_defect: f64,
    pub is_identity: bool,
    pub converged: bool,
    pub strictly_positive_limit: bool,
    pub forward: Conclusion,
    pub backward: Conclusion,
    pub certifier: CertifierReport,
}

pub fn lattice_homo_rigidity(s: &Semigroup, horizon: usize, tol: f64) -> Result<RigidityOutcome> {
    let step = s.unit_step()?;
    if !step.is_lattice_homomorphism() {
        return Err(LabError::StructuralGate(
            "rigidity applies to semigroups of lattice homomorphisms \
             (at most one structural nonzero per row)"
                .into(),
        ));
    }
    let space = Arc::clone(s.space());
    let n = space.dim();

    let mut hypothesis = true;
    for j in 0..n {
        let e_j = LatticeVector::basis(Arc::clone(&space), j);
        let v_j = e_j.scale(1.0 / e_j.al_norm());
        let r = individual_lower_bound_estimate(s, &v_j, horizon, DEFAULT_SHRINK, tol)?;
        hypothesis &= r.certified && r.raw_norm > 0.0;
    }

    let weights = space.weights();
    let identity_defect = if s.is_discrete() {
        step.to_dense()?
            .sub(&DenseMatrix::identity(n))
            .weighted_operator_norm(weights)
    } else {
        let mut d = 0.0f64;
        for t in [0.5, 1.0, std::f64::consts::SQRT_2] {
            d = d.max(
                s.evaluate(t)?
                    .to_dense()?
                    .sub(&DenseMatrix::identity(n))
                    .weighted_operator_norm(weights),
            );
        }
        d
    };
    let is_identity = identity_defect <= tol;

    let convergence = detect_strong_convergence(s, horizon, tol)?;
    let strictly_positive_limit = convergence.converged
        && convergence
            .limit
            .as_ref()
            .is_some_and(|p| min_column_norm(p, weights) >= DEFAULT_POSITIVITY_FLOOR);

    let mut certifier = CertifierReport::new("lattice-homomorphism-rigidity", tol);
    certifier.hypotheses.push(HypothesisCheck::new(
        "lattice_homomorphism",
        true,
        "structural gate passed",
    ));
    certifier.hypotheses.push(HypothesisCheck::new(
        "vertex_bounds_nonzero",
        hypothesis,
        "per-vertex nonzero individual bounds",
    ));

    let forward = if hypothesis {
        if is_identity {
            Conclusion::Certified
        } else {
            certifier.notes.push(format!(
                "nonzero bounds certified but identity defect is {identity_defect:.3e}"
            ));
            Conclusion::Violated
        }
    } else {
        Conclusion::NotApplicable
    };
    let backward = if strictly_positive_limit {
        if is_identity {
            Conclusion::Certified
        } else {
            certifier.notes.push(format!(
                "strictly positive limit detected but identity defect is {identity_defect:.3e}"
            ));
            Conclusion::Violated
        }
    } else {
        Conclusion::NotApplicable
    };
    certifier.conclusion = match (forward, backward) {
        (Conclusion::Violated, _) | (_, Conclusion::Violated) => Conclusion::Violated,
        (Conclusion::Certified, _) | (_, Conclusion::Certified) => Conclusion::Certified,
        _ => Conclusion::NotApplicable,
    };

    Ok(RigidityOutcome {
        hypothesis_holds: hypothesis,
        identity_defect,
        is_identity,
        converged: convergence.converged,
        strictly_positive_limit,
        forward,
        backward,
        certifier,
    })
}

/// psi-weighted certification on general (p >= 1) spaces. The domination
/// hypotheses `T_t f0 <= M f0` and `T_t' psi <= M psi` are verified
/// coordinatewise with the smallest feasible sampled `M`; on certification
/// of a nonzero psi-bound, strong convergence in the native norm is
/// asserted, rank-1 with `P' psi >= eps psi` in the uniform case.
#[derive(Debug, Clone, Serialize)]
pub struct PsiOutcome {
    pub m_for_psi: f64,
    pub psi_domination_growing: bool,
    pub m_for_f0: Option<f64>,
    pub f0_domination_growing: bool,
    pub f0_supplied: bool,
    pub f0_quasi_interior: bool,
    /// The psi-weighted uniform check of `h` (sup of the psi-deficiency over
    /// the psi-normalized vertices).
    pub bound_report: LowerBoundReport,
    pub uniform_certified: bool,
    pub psi_norm_of_h: f64,
    pub vertex_min_psi_bound: f64,
    pub vertices_certified: bool,
    pub native_convergence: Option<ConvergenceReport>,
    pub adjoint_floor: Option<f64>,
    pub certifier: CertifierReport,
}

pub fn psi_lower_bound_certify(
    s: &Semigroup,
    h: &LatticeVector,
    psi: &Functional,
    f0: Option<&LatticeVector>,
    horizon: usize,
    tol: f64,
) -> Result<PsiOutcome> {
    if !psi.is_strictly_positive() {
        return Err(LabError::InvalidVector(
            "psi must be strictly positive".into(),
        ));
    }
    super::require_horizon(horizon)?;
    super::require_nonnegative(h, "psi lower bound h")?;
    let space = Arc::clone(s.space());
    space.check_same(psi.space())?;
    space.check_same(h.space())?;
    let n = space.dim();
    let step = s.unit_step()?;

    // T_t' psi <= M psi, sampled along the horizon by iterating the adjoint.
    let mut psi_t = psi.clone();
    let mut m_psi = 1.0f64;
    let mut m_psi_half = 1.0f64;
    for t in 1..=horizon {
        psi_t = step.adjoint_apply(&psi_t)?;
        let ratio = psi_t
            .coefficients()
            .iter()
            .zip(psi.coefficients())
            .fold(0.0f64, |m, (a, b)| m.max(a / b));
        m_psi = m_psi.max(ratio);
        if t == horizon / 2 {
            m_psi_half = m_psi;
        }
    }
    let psi_growing = m_psi > m_psi_half * (1.0 + 1e-9) + 1e-12;

    // T_t f0 <= M f0 for a quasi-interior f0, sampled along its orbit.
    let (m_f0, f0_growing, f0_quasi_interior) = match f0 {
        None => (None, false, false),
        Some(f0) => {
            let quasi = f0.is_quasi_interior();
            if !quasi {
                (None, false, false)
            } else {
                let orbit = s.unit_orbit(f0, horizon)?;
                let mut m = 1.0f64;
                let mut m_half = 1.0f64;
                for (t, p) in orbit.points.iter().enumerate() {
                    let ratio = p
                        .entries()
                        .iter()
                        .zip(f0.entries())
                        .fold(0.0f64, |acc, (a, b)| acc.max(a / b));
                    m = m.max(ratio);
                    if t + 1 == horizon / 2 {
                        m_half = m;
                    }
                }
                (Some(m), m > m_half * (1.0 + 1e-9) + 1e-12, true)
            }
        }
    };

    // Uniform psi-check for h over the psi-normalized vertices; the vertex
    // reduction applies verbatim since f -> <psi, (Af - h)^-> is convex.
    let psi_kind = NormKind::Psi(psi.clone());
    let mut sup_trace = vec![0.0f64; horizon];
    let mut vertex_min = f64::INFINITY;
    let mut vertices_certified = true;
    for j in 0..n {
        let e_j = LatticeVector::basis(Arc::clone(&space), j);
        let v_j = e_j.scale(1.0 / psi.apply(&e_j)?);
        let mut current = v_j.clone();
        let mut points = Vec::with_capacity(horizon);
        for t in 1..=horizon {
            current = step.apply(&current)?;
            sup_trace[t - 1] = sup_trace[t - 1].max(current.deficiency(h, &psi_kind)?);
            points.push(current.clone());
        }
        // Per-vertex psi-individual estimate from the tail infimum.
        let tail_start = horizon / 2;
        let mut raw = points[tail_start].clone();
        for p in &points[tail_start..] {
            raw = raw.meet(p)?;
        }
        let quarter = (horizon / 4).max(1);
        let mut tail_def = 0.0f64;
        let shrunk = raw.scale(DEFAULT_SHRINK);
        for p in points.iter().rev().take(quarter) {
            tail_def = tail_def.max(p.deficiency(&shrunk, &psi_kind)?);
        }
        vertices_certified &= tail_def <= tol;
        vertex_min = vertex_min.min(psi.apply(&raw)?);
    }
    let uniform_trace: Vec<(f64, f64)> = (0..horizon)
        .map(|k| ((k + 1) as f64, sup_trace[k]))
        .collect();
    let quarter = (horizon / 4).max(1);
    let uniform_certified = uniform_trace
        .iter()
        .rev()
        .take(quarter)
        .all(|&(_, d)| d <= tol);
    let psi_norm_of_h = psi.apply(h)?;
    let bound_report = LowerBoundReport {
        kind: super::BoundKind::PsiWeighted,
        bound: h.clone(),
        norm_of_bound: psi_norm_of_h,
        raw_norm: psi_norm_of_h,
        deficiency_trace: uniform_trace,
        certified: uniform_certified,
        hypothesis_log: vec![HypothesisCheck::new(
            "psi_strictly_positive",
            true,
            "checked on entry",
        )],
        norm_bound_estimate: m_psi,
        escaped_mass: 0.0,
        tolerance: tol,
    };

    let mut certifier = CertifierReport::new("psi-lower-bound", tol);
    certifier.hypotheses.push(HypothesisCheck::new(
        "psi_strictly_positive",
        true,
        "checked on entry",
    ));
    certifier.hypotheses.push(HypothesisCheck::new(
        "psi_domination",
        !psi_growing,
        format!("smallest feasible M for psi = {m_psi:.6} (sampled)"),
    ));
    let f0_ok = f0.is_some() && f0_quasi_interior && !f0_growing && m_f0.is_some();
    certifier.hypotheses.push(match (f0, f0_quasi_interior) {
        (None, _) => HypothesisCheck::new(
            "f0_domination",
            false,
            "no qualifying f0 supplied; prediction declined",
        ),
        (Some(_), false) => {
            HypothesisCheck::new("f0_domination", false, "f0 is not quasi-interior")
        }
        (Some(_), true) => HypothesisCheck::new(
            "f0_domination",
            !f0_growing,
            format!("smallest feasible M for f0 = {:?} (sampled)", m_f0),
        ),
    });

    let hypotheses_ok = !psi_growing && f0_ok;
    let uniform_nonzero = uniform_certified && psi_norm_of_h > 0.0;
    let individual_nonzero = vertices_certified && vertex_min > tol;

    let mut native_convergence = None;
    let mut adjoint_floor = None;
    certifier.conclusion = if hypotheses_ok && (uniform_nonzero || individual_nonzero) {
        let conv = detect_strong_convergence(s, horizon, tol)?;
        let mut failures = Vec::new();
        if !conv.converged {
            failures.push("predicted native-norm strong convergence not observed".to_string());
        } else if let Some(p) = &conv.limit {
            // (P' psi)_j / psi_j >= eps.
            let w = space.weights();
            let floor = (0..n)
                .map(|j| {
                    let num: f64 = (0..n)
                        .map(|i| psi.coefficient(i) * p[(i, j)] * w[i])
                        .sum();
                    num / w[j] / psi.coefficient(j)
                })
                .fold(f64::INFINITY, f64::min);
            adjoint_floor = Some(floor);
            let eps = if uniform_nonzero {
                psi_norm_of_h
            } else {
                vertex_min
            };
            if floor < eps * (1.0 - 1e-6) - 10.0 * tol {
                failures.push(format!(
                    "adjoint floor {floor:.6e} below the certified bound {eps:.6e}"
                ));
            }
            if uniform_nonzero && conv.rank_estimate != Some(1) {
                failures.push(format!(
                    "uniform psi-bound predicts a rank-1 limit, got rank {:?}",
                    conv.rank_estimate
                ));
            }
        }
        native_convergence = Some(conv);
        if failures.is_empty() {
            Conclusion::Certified
        } else {
            certifier.notes = failures;
            Conclusion::Violated
        }
    } else {
        if !hypotheses_ok {
            certifier
                .notes
                .push("domination hypotheses not satisfied; no prediction made".into());
        } else {
            certifier
                .notes
                .push("no nonzero psi lower bound certified; no prediction made".into());
        }
        Conclusion::NotApplicable
    };

    Ok(PsiOutcome {
        m_for_psi: m_psi,
        psi_domination_growing: psi_growing,
        m_for_f0: m_f0,
        f0_domination_growing: f0_growing,
        f0_supplied: f0.is_some(),
        f0_quasi_interior,
        uniform_certified,
        bound_report,
        psi_norm_of_h,
        vertex_min_psi_bound: vertex_min,
        vertices_certified,
        native_convergence,
        adjoint_floor,
        certifier,
    })
}
