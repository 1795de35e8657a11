//! Experiment execution: gallery runs with their expected-property lists,
//! single-certifier checks, and report/trace output.

use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{json, Value};

use semigroup_lab::bounds::{
    self, CheckMode, Conclusion, DEFAULT_POSITIVITY_FLOOR,
};
use semigroup_lab::convergence::{
    detect_strong_convergence, embedded_discrete_consistency, operator_norm_convergence,
    orbit_convergence,
};
use semigroup_lab::fp::{invariant_density, is_measure_preserving};
use semigroup_lab::io::{self, BuiltInstance, InstanceSpec, ReportEnvelope};
use semigroup_lab::{gallery, Functional, LabError, LatticeVector, Result, Semigroup};

/// Exit contract: 0 all expectations matched, 1 a theorem-level violation,
/// 2 hypotheses inapplicable, 64 usage error.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    Inapplicable,
    Violation,
}

impl Verdict {
    pub fn exit_code(self) -> i32 {
        match self {
            Verdict::Pass => 0,
            Verdict::Violation => 1,
            Verdict::Inapplicable => 2,
        }
    }

    fn merge(self, other: Verdict) -> Verdict {
        use Verdict::*;
        match (self, other) {
            (Violation, _) | (_, Violation) => Violation,
            (Inapplicable, _) | (_, Inapplicable) => Inapplicable,
            _ => Pass,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Expectation {
    pub name: String,
    pub expected: String,
    pub observed: String,
    pub matched: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub instance: String,
    pub parameters: Value,
    pub expectations: Vec<Expectation>,
    pub verdict: Verdict,
    pub notes: Vec<String>,
    #[serde(skip)]
    pub traces: Vec<(String, Vec<(f64, f64)>)>,
}

impl RunReport {
    fn new(instance: &str, parameters: Value) -> Self {
        Self {
            instance: instance.to_string(),
            parameters,
            expectations: Vec::new(),
            verdict: Verdict::Pass,
            notes: Vec::new(),
            traces: Vec::new(),
        }
    }

    fn expect(&mut self, name: &str, expected: impl ToString, observed: impl ToString, matched: bool) {
        self.expectations.push(Expectation {
            name: name.to_string(),
            expected: expected.to_string(),
            observed: observed.to_string(),
            matched,
        });
        if !matched {
            self.verdict = self.verdict.merge(Verdict::Violation);
        }
    }

    fn trace(&mut self, name: &str, series: Vec<(f64, f64)>) {
        self.traces.push((name.to_string(), series));
    }
}

pub struct RunConfig {
    pub dim: Option<usize>,
    pub horizon: Option<usize>,
    pub tol: f64,
    pub p: Option<f64>,
    pub period: Option<f64>,
    pub cells: Option<usize>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            dim: None,
            horizon: None,
            tol: 1e-9,
            p: None,
            period: None,
            cells: None,
        }
    }
}

/// Runs the standard experiment battery of a gallery instance: each named
/// closed-form property is evaluated and compared against its expected
/// outcome.
pub fn run_gallery(id: &str, cfg: &RunConfig) -> Result<RunReport> {
    let tol = cfg.tol;
    match id {
        "shift-feedback" => {
            let dim = cfg.dim.unwrap_or(64);
            let horizon = cfg
                .horizon
                .unwrap_or_else(|| gallery::max_exact_horizon(dim).min(40));
            let g = gallery::build_shift_feedback(dim)?;
            let mut report = RunReport::new(id, json!({"dim": dim, "horizon": horizon, "tol": tol}));
            if horizon > gallery::max_exact_horizon(dim) {
                report
                    .notes
                    .push("horizon exceeds the exact window; results downgraded to approximate".into());
            }
            let markov = g.semigroup.generator().unwrap().is_markov(0.0);
            report.expect("markov_with_escape", true, markov, markov);

            let conv = detect_strong_convergence(&g.semigroup, horizon, tol)?;
            report.expect("strong_convergence", false, conv.converged, !conv.converged);
            report.trace("strong_residual", conv.residual_trace.clone());

            let space = g.semigroup.space().clone();
            let e1 = LatticeVector::basis(space.clone(), 1);
            let ind = bounds::individual_lower_bound_estimate(&g.semigroup, &e1, horizon, 0.95, tol)?;
            report.expect(
                "individual_bound_e1_certified_nonzero",
                true,
                format!("certified={} norm={:.6}", ind.certified, ind.norm_of_bound),
                ind.certified && ind.norm_of_bound >= 0.95 * 0.5,
            );
            report.trace("individual_deficiency_e1", ind.deficiency_trace.clone());

            let out = bounds::individual_bounds_certify(&g.semigroup, 1e-3, horizon, tol)?;
            report.expect(
                "epsilon_floor_hypothesis",
                "fails (vertex floors decay)",
                format!("holds={}", out.hypothesis_holds),
                !out.hypothesis_holds,
            );
            report.expect(
                "no_theorem_violation",
                true,
                format!("{:?}", out.certifier.conclusion),
                out.certifier.conclusion != Conclusion::Violated,
            );
            Ok(report)
        }
        "rank-one-projection" => {
            let dim = cfg.dim.unwrap_or(32);
            let horizon = cfg.horizon.unwrap_or(60);
            let g = gallery::build_rank_one_projection(dim)?;
            let mut report = RunReport::new(id, json!({"dim": dim, "horizon": horizon, "tol": tol}));
            let floor = 0.5f64.powi(dim as i32 + 1);
            let ding = bounds::ding_certify(&g.semigroup, horizon, tol, floor)?;
            report.expect(
                "ding_certified",
                "certified",
                format!("{:?}", ding.certifier.conclusion),
                ding.certifier.conclusion == Conclusion::Certified,
            );
            let norm_conv = operator_norm_convergence(&g.semigroup, horizon, tol)?;
            report.expect("norm_convergent", true, norm_conv.converged, norm_conv.converged);
            if let (Some(p), Ok(t)) = (&norm_conv.limit, g.operator.to_dense()) {
                let equals_t = p.sub(&t).max_abs() <= 1e-14;
                report.expect("limit_equals_projection", true, equals_t, equals_t);
            }
            let min_col = ding.min_column_norm.unwrap_or(0.0);
            report.expect(
                "column_floor_vanishes",
                format!("2^-{}", dim - 1),
                format!("{min_col:.3e}"),
                (min_col - 0.5f64.powi(dim as i32 - 1)).abs() <= 1e-15,
            );
            Ok(report)
        }
        "weighted-shift" => {
            let dim = cfg.dim.unwrap_or(400);
            let p = cfg.p.unwrap_or(2.0);
            let horizon = cfg.horizon.unwrap_or(300.min(dim - 8));
            let g = gallery::build_weighted_shift(dim, p)?;
            let mut report =
                RunReport::new(id, json!({"dim": dim, "p": p, "horizon": horizon, "tol": tol}));
            let e1 = LatticeVector::basis(g.native.space().clone(), 1);
            let native = orbit_convergence(&g.native, &e1, horizon, tol)?;
            report.expect(
                "native_lp_convergence",
                false,
                native.converged,
                !native.converged,
            );
            report.expect(
                "native_tail_residual_large",
                ">= 0.9",
                format!("{:.6}", native.tail_residual),
                native.tail_residual >= 0.9,
            );
            report.trace("native_orbit_residual", native.residual_trace);

            let e1_env = LatticeVector::basis(g.envelope.space().clone(), 1);
            let orbit = g.envelope.unit_orbit(&e1_env, horizon)?;
            let target = LatticeVector::basis(g.envelope.space().clone(), 0);
            let final_residual = orbit
                .points
                .last()
                .unwrap()
                .sub(&target)
                .map(|d| d.al_norm())
                .unwrap_or(f64::NAN);
            let oracle = 2.0 * (1.0 + horizon as f64).powf(1.0 - p);
            report.expect(
                "envelope_residual_matches_series_oracle",
                format!("{oracle:.6e}"),
                format!("{final_residual:.6e}"),
                (final_residual - oracle).abs() <= 1e-10,
            );

            let h = LatticeVector::basis(g.native.space().clone(), 0);
            let psi_out =
                bounds::psi_lower_bound_certify(&g.native, &h, &g.psi, None, horizon.min(80), tol)?;
            report.expect(
                "psi_certifier_declines_without_f0",
                "not_applicable",
                format!("{:?}", psi_out.certifier.conclusion),
                psi_out.certifier.conclusion == Conclusion::NotApplicable,
            );
            report.expect(
                "psi_is_fixed_functional",
                "M = 1",
                format!("{:.9}", psi_out.m_for_psi),
                (psi_out.m_for_psi - 1.0).abs() <= 1e-9,
            );
            Ok(report)
        }
        "two-point-collapse" => {
            let horizon = cfg.horizon.unwrap_or(40);
            let (s, op) = gallery::build_two_point_collapse()?;
            let mut report = RunReport::new(id, json!({"horizon": horizon, "tol": tol}));
            let norm_conv = operator_norm_convergence(&s, horizon, tol)?;
            report.expect("norm_convergent", true, norm_conv.converged, norm_conv.converged);
            let not_identity = norm_conv
                .limit
                .as_ref()
                .map(|p| p.sub(&semigroup_lab::DenseMatrix::identity(2)).max_abs() > 0.5)
                .unwrap_or(false);
            report.expect("limit_differs_from_identity", true, not_identity, not_identity);
            let preserving = is_measure_preserving(&op, tol);
            report.expect("measure_preserving", false, preserving, !preserving);
            Ok(report)
        }
        "rotation" => {
            let period = cfg.period.unwrap_or(1.3);
            let horizon = cfg.horizon.unwrap_or(60);
            let s = gallery::build_rotation(period)?;
            let mut report =
                RunReport::new(id, json!({"period": period, "horizon": horizon, "tol": tol}));
            let emb = embedded_discrete_consistency(&s, &[period / 2.0, period], horizon, tol)?;
            report.expect(
                "embedded_at_period_converges",
                true,
                emb.steps[1].converged,
                emb.steps[1].converged,
            );
            report.expect(
                "embedded_at_half_period_diverges",
                false,
                emb.steps[0].converged,
                !emb.steps[0].converged,
            );
            report.expect(
                "full_semigroup_diverges",
                false,
                emb.continuous_converged,
                !emb.continuous_converged,
            );
            report.expect("no_theorem_violation", false, emb.violated, !emb.violated);
            Ok(report)
        }
        "doubling-ulam" => {
            let cells = cfg.cells.or(cfg.dim).unwrap_or(256);
            let resolution = gallery::ulam_resolution_horizon(2.0, cells);
            let horizon = cfg.horizon.unwrap_or(resolution.saturating_sub(1).max(2));
            let u = gallery::build_doubling_ulam(cells)?;
            let mut report = RunReport::new(
                id,
                json!({"cells": cells, "horizon": horizon, "resolution_horizon": resolution, "tol": tol}),
            );
            report.expect(
                "exact_markov_partition",
                true,
                u.exact_markov_partition,
                u.exact_markov_partition,
            );
            let preserving = is_measure_preserving(&u.operator, 0.0);
            report.expect("measure_preserving", true, preserving, preserving);
            let s = Semigroup::discrete(u.operator.clone());
            let norm_conv = operator_norm_convergence(&s, horizon, tol)?;
            report.expect(
                "norm_convergence_within_resolution",
                false,
                norm_conv.converged,
                !norm_conv.converged,
            );
            report.trace("operator_norm_distance", norm_conv.residual_trace.clone());
            if horizon >= resolution {
                report
                    .notes
                    .push("horizon exceeds the resolution horizon; discretization saturated".into());
            }
            Ok(report)
        }
        "tent-ulam" => {
            let cells = cfg.cells.or(cfg.dim).unwrap_or(256);
            let u = gallery::build_tent_ulam(cells)?;
            let mut report = RunReport::new(id, json!({"cells": cells, "tol": tol}));
            report.expect(
                "exact_markov_partition",
                true,
                u.exact_markov_partition,
                u.exact_markov_partition,
            );
            let d = invariant_density(&u.operator, 1e-12, 500)?;
            let uniform = d.entries().iter().all(|&x| (x - 1.0).abs() <= 1e-12);
            report.expect("invariant_density_uniform", true, uniform, uniform);
            Ok(report)
        }
        "cyclic-permutation" => {
            let dim = cfg.dim.unwrap_or(8);
            let horizon = cfg.horizon.unwrap_or(50);
            let s = gallery::build_cyclic_permutation(dim)?;
            let mut report = RunReport::new(id, json!({"dim": dim, "horizon": horizon, "tol": tol}));
            let op = s.generator().unwrap().clone();
            let preserving = is_measure_preserving(&op, 0.0);
            report.expect("measure_preserving", true, preserving, preserving);
            let conv = detect_strong_convergence(&s, horizon, tol)?;
            report.expect("strong_convergence", false, conv.converged, !conv.converged);
            let density = invariant_density(&op, 1e-10, 200);
            report.expect(
                "power_iteration_detects_periodicity",
                "non-convergence error",
                format!("{:?}", density.as_ref().err().map(|_| "error")),
                density.is_err(),
            );
            Ok(report)
        }
        "collapse-chain" => {
            let dim = cfg.dim.unwrap_or(100);
            let horizon = cfg.horizon.unwrap_or(2 * dim + 20);
            let s = gallery::build_collapse_chain(dim)?;
            let mut report = RunReport::new(id, json!({"dim": dim, "horizon": horizon, "tol": tol}));
            let ding = bounds::ding_certify(&s, horizon, tol, DEFAULT_POSITIVITY_FLOOR)?;
            report.expect(
                "ding_certified",
                "certified",
                format!("{:?}", ding.certifier.conclusion),
                ding.certifier.conclusion == Conclusion::Certified,
            );
            if let Some(p) = &ding.limit {
                let is_e1 = (0..dim).all(|j| (p[(1, j)] - 1.0).abs() <= 1e-12);
                report.expect("limit_is_ones_tensor_e1", true, is_e1, is_e1);
            }
            Ok(report)
        }
        "identity" => {
            let dim = cfg.dim.unwrap_or(8);
            let horizon = cfg.horizon.unwrap_or(40);
            let s = gallery::build_identity(dim)?;
            let mut report = RunReport::new(id, json!({"dim": dim, "horizon": horizon, "tol": tol}));
            let conv = detect_strong_convergence(&s, horizon, tol)?;
            report.expect("strong_convergence", true, conv.converged, conv.converged);
            report.expect(
                "limit_rank_is_dim",
                dim,
                format!("{:?}", conv.rank_estimate),
                conv.rank_estimate == Some(dim),
            );
            let rig = bounds::lattice_homo_rigidity(&s, horizon, tol)?;
            report.expect(
                "rigidity_certified",
                "certified",
                format!("{:?}", rig.certifier.conclusion),
                rig.certifier.conclusion == Conclusion::Certified,
            );
            Ok(report)
        }
        other => Err(LabError::InvalidConfig(format!(
            "unknown gallery id '{other}'; see `gallery list`"
        ))),
    }
}

/// Named lower-bound candidates for `check --h`.
pub fn resolve_bound(
    name: &str,
    semigroup: &Semigroup,
    tol: f64,
) -> Result<LatticeVector> {
    let space = semigroup.space().clone();
    match name {
        "zero" => Ok(LatticeVector::zeros(space)),
        "uniform" => {
            let ones = LatticeVector::ones(space.clone());
            let norm = ones.al_norm();
            Ok(ones.scale(1.0 / norm))
        }
        "perron-half" => {
            let step = semigroup.unit_step()?;
            let pi = invariant_density(&step, tol.min(1e-10), 100_000)?;
            Ok(pi.scale(0.5))
        }
        path => {
            let text = std::fs::read_to_string(path).map_err(|e| {
                LabError::InvalidConfig(format!("cannot read bound file '{path}': {e}"))
            })?;
            let entries: Vec<f64> = serde_json::from_str(&text).map_err(|e| {
                LabError::InvalidConfig(format!("bound file must be a JSON array: {e}"))
            })?;
            LatticeVector::new(space, entries)
        }
    }
}

pub struct CheckConfig {
    pub horizon: usize,
    pub tol: f64,
    pub epsilon: f64,
    pub bound: Option<String>,
    /// Order-bounding vector for the psi checker (same naming scheme as the
    /// bound candidates); omitted means the hypothesis is not supplied.
    pub f0: Option<String>,
    pub floor: f64,
}

/// Dispatches one certifier against a built instance; the verdict maps to
/// the exit contract.
pub fn run_check(
    certifier: &str,
    instance: &BuiltInstance,
    cfg: &CheckConfig,
) -> Result<RunReport> {
    let s = &instance.semigroup;
    let mut report = RunReport::new(
        &format!("{}:{}", certifier, instance.label),
        json!({"horizon": cfg.horizon, "tol": cfg.tol, "epsilon": cfg.epsilon}),
    );
    report.notes = instance.notes.clone();
    let conclusion = match certifier {
        "lasota-yorke" => {
            let h = resolve_bound(cfg.bound.as_deref().unwrap_or("perron-half"), s, cfg.tol)?;
            let out = bounds::lasota_yorke_certify(s, &h, cfg.horizon, cfg.tol)?;
            report.trace("uniform_deficiency", out.bound_report.deficiency_trace.clone());
            report.notes.extend(out.certifier.notes.clone());
            out.certifier.conclusion
        }
        "uniform-lower-bound" => {
            let h = resolve_bound(cfg.bound.as_deref().unwrap_or("perron-half"), s, cfg.tol)?;
            let out = bounds::uniform_lower_bound_check(s, &h, cfg.horizon, cfg.tol, CheckMode::Uniform)?;
            report.trace("uniform_deficiency", out.deficiency_trace.clone());
            if out.certified {
                Conclusion::Certified
            } else {
                Conclusion::NotApplicable
            }
        }
        "individual-bounds" => {
            let out = bounds::individual_bounds_certify(s, cfg.epsilon, cfg.horizon, cfg.tol)?;
            report.notes.extend(out.certifier.notes.clone());
            out.certifier.conclusion
        }
        "ding" => {
            let out = bounds::ding_certify(s, cfg.horizon, cfg.tol, cfg.floor)?;
            report.notes.extend(out.certifier.notes.clone());
            out.certifier.conclusion
        }
        "lattice-homo-rigidity" => {
            let out = bounds::lattice_homo_rigidity(s, cfg.horizon, cfg.tol)?;
            report.notes.extend(out.certifier.notes.clone());
            out.certifier.conclusion
        }
        "strong-convergence" => {
            let out = detect_strong_convergence(s, cfg.horizon, cfg.tol)?;
            report.trace("strong_residual", out.residual_trace.clone());
            if out.converged {
                Conclusion::Certified
            } else {
                Conclusion::NotApplicable
            }
        }
        "norm-convergence" => {
            let out = operator_norm_convergence(s, cfg.horizon, cfg.tol)?;
            report.trace("operator_norm_distance", out.residual_trace.clone());
            if out.converged {
                Conclusion::Certified
            } else {
                Conclusion::NotApplicable
            }
        }
        "embedded-consistency" => {
            let steps = semigroup_lab::convergence::default_embedding_steps();
            let out = embedded_discrete_consistency(s, &steps, cfg.horizon, cfg.tol)?;
            report.notes.extend(out.notes.clone());
            if out.violated {
                Conclusion::Violated
            } else if out.continuous_converged {
                Conclusion::Certified
            } else {
                Conclusion::NotApplicable
            }
        }
        "psi" => {
            let psi = Functional::norm_functional(s.space().clone());
            let h = resolve_bound(cfg.bound.as_deref().unwrap_or("perron-half"), s, cfg.tol)?;
            let f0 = match &cfg.f0 {
                Some(name) => Some(resolve_bound(name, s, cfg.tol)?),
                None => None,
            };
            let out =
                bounds::psi_lower_bound_certify(s, &h, &psi, f0.as_ref(), cfg.horizon, cfg.tol)?;
            report.trace("psi_deficiency", out.bound_report.deficiency_trace.clone());
            report.notes.extend(out.certifier.notes.clone());
            out.certifier.conclusion
        }
        other => {
            return Err(LabError::InvalidConfig(format!(
                "unknown certifier '{other}'"
            )))
        }
    };
    report.expect(
        "conclusion",
        "certified",
        format!("{conclusion:?}"),
        conclusion == Conclusion::Certified,
    );
    report.verdict = match conclusion {
        Conclusion::Certified => Verdict::Pass,
        Conclusion::NotApplicable => Verdict::Inapplicable,
        Conclusion::Violated => Verdict::Violation,
    };
    Ok(report)
}

pub fn build_instance_arg(arg: &str) -> Result<BuiltInstance> {
    if let Some(id) = arg.strip_prefix("gallery:") {
        return io::build_gallery_instance(id, None, None, None, None);
    }
    let text = std::fs::read_to_string(arg)
        .map_err(|e| LabError::InvalidConfig(format!("cannot read instance '{arg}': {e}")))?;
    let spec: InstanceSpec = serde_json::from_str(&text)
        .map_err(|e| LabError::InvalidConfig(format!("malformed instance spec: {e}")))?;
    spec.build()
}

/// One experiment as a flat config file: an instance, which checker to run,
/// and the numeric knobs. `checker = "gallery"` runs the instance's standard
/// gallery battery instead of a single certifier.
#[derive(Debug, Clone, serde::Deserialize)]
pub struct ExperimentConfig {
    pub instance: InstanceSpec,
    pub checker: String,
    #[serde(default)]
    pub horizon: Option<usize>,
    #[serde(default)]
    pub tol: Option<f64>,
    #[serde(default)]
    pub epsilon: Option<f64>,
    #[serde(default)]
    pub floor: Option<f64>,
    #[serde(default)]
    pub h: Option<String>,
    #[serde(default)]
    pub f0: Option<String>,
    #[serde(default)]
    pub out: Option<PathBuf>,
    #[serde(default)]
    pub format: Option<String>,
}

impl ExperimentConfig {
    fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("tol", self.tol),
            ("epsilon", self.epsilon),
            ("floor", self.floor),
        ] {
            if let Some(v) = v {
                if !(v > 0.0) {
                    return Err(LabError::InvalidConfig(format!(
                        "{name} must be positive, got {v}"
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Runs a config-file experiment; returns the report and where it was written.
pub fn run_experiment(config: &ExperimentConfig) -> Result<RunReport> {
    config.validate()?;
    let tol = config.tol.unwrap_or(1e-9);
    if config.checker == "gallery" {
        let io::BuiltInstance { label, .. } = config.instance.build()?;
        let cfg = RunConfig {
            dim: None,
            horizon: config.horizon,
            tol,
            p: None,
            period: None,
            cells: None,
        };
        return run_gallery(&label, &cfg);
    }
    let built = config.instance.build()?;
    let cfg = CheckConfig {
        horizon: config.horizon.unwrap_or(200),
        tol,
        epsilon: config.epsilon.unwrap_or(0.1),
        bound: config.h.clone(),
        f0: config.f0.clone(),
        floor: config.floor.unwrap_or(1e-12),
    };
    run_check(&config.checker, &built, &cfg)
}

/// Writes the JSON report (and CSV traces when requested) under `out`.
pub fn emit_report(
    report: &RunReport,
    out: Option<&Path>,
    csv: bool,
) -> std::io::Result<Vec<PathBuf>> {
    let mut written = Vec::new();
    let envelope = ReportEnvelope::new(report.instance.clone(), report.notes.clone(), report);
    match out {
        None => println!("{}", envelope.to_json()),
        Some(dir) => {
            std::fs::create_dir_all(dir)?;
            let slug: String = report
                .instance
                .chars()
                .map(|c| if c.is_alphanumeric() { c } else { '-' })
                .collect();
            let path = dir.join(format!("{slug}.json"));
            envelope.write_json(&path)?;
            written.push(path);
            if csv {
                for (name, series) in &report.traces {
                    let path = dir.join(format!("{slug}.{name}.csv"));
                    io::write_trace_csv(&path, name, series)?;
                    written.push(path);
                }
            }
        }
    }
    Ok(written)
}
