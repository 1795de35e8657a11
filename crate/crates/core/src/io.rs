//! JSON instance descriptions and flat-file report output.
//!
//! Reports are deterministic: identical inputs produce byte-identical JSON
//! (no timestamps). The schema version is embedded in every envelope.

use std::io::Write;
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::fp::{self, Branch, FiniteMap, IntervalMap};
use crate::gallery;
use crate::numeric::DenseMatrix;
use crate::operator::PositiveOperator;
use crate::semigroup::Semigroup;
use crate::space::WeightedSpace;

pub const REPORT_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SpaceSpec {
    pub dim: usize,
    /// Omitted weights mean the counting measure.
    #[serde(default)]
    pub weights: Option<Vec<f64>>,
    #[serde(default = "default_p")]
    pub p: f64,
}

fn default_p() -> f64 {
    1.0
}

impl SpaceSpec {
    pub fn build(&self) -> Result<Arc<WeightedSpace>> {
        match &self.weights {
            Some(w) => {
                if w.len() != self.dim {
                    return Err(LabError::DimensionMismatch {
                        left: w.len(),
                        right: self.dim,
                    });
                }
                WeightedSpace::new(w.clone(), self.p)
            }
            None => WeightedSpace::new(vec![1.0; self.dim], self.p),
        }
    }

    pub fn of(space: &WeightedSpace) -> Self {
        Self {
            dim: space.dim(),
            weights: Some(space.weights().to_vec()),
            p: space.p_exponent(),
        }
    }
}

/// Structured operator description.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum OperatorSpec {
    /// Dense row-major matrix.
    Dense { matrix: Vec<Vec<f64>> },
    /// COO triplets `(row, col, value)`.
    Coo {
        dim: usize,
        triplets: Vec<(usize, usize, f64)>,
    },
    Transport { sigma: Vec<usize>, gains: Vec<f64> },
    Diagonal { multiplier: Vec<f64> },
    RightShift { dim: usize },
}

impl OperatorSpec {
    pub fn dim(&self) -> usize {
        match self {
            OperatorSpec::Dense { matrix } => matrix.len(),
            OperatorSpec::Coo { dim, .. } | OperatorSpec::RightShift { dim } => *dim,
            OperatorSpec::Transport { sigma, .. } => sigma.len(),
            OperatorSpec::Diagonal { multiplier } => multiplier.len(),
        }
    }

    pub fn build(&self, space: Arc<WeightedSpace>) -> Result<PositiveOperator> {
        match self {
            OperatorSpec::Dense { matrix } => {
                if matrix.iter().any(|r| r.len() != matrix.len()) {
                    return Err(LabError::InvalidConfig("dense matrix must be square".into()));
                }
                PositiveOperator::dense(space, DenseMatrix::from_rows(matrix.clone()))
            }
            OperatorSpec::Coo { triplets, .. } => {
                PositiveOperator::sparse(space, triplets.clone())
            }
            OperatorSpec::Transport { sigma, gains } => {
                PositiveOperator::transport(space, sigma.clone(), gains.clone())
            }
            OperatorSpec::Diagonal { multiplier } => {
                PositiveOperator::diagonal(space, multiplier.clone())
            }
            OperatorSpec::RightShift { .. } => Ok(PositiveOperator::right_shift(space)),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BranchSpec {
    pub domain: (f64, f64),
    pub slope: f64,
    pub intercept: f64,
}

/// Interval or finite map description.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MapSpec {
    PiecewiseAffine { branches: Vec<BranchSpec> },
    Finite {
        sigma: Vec<usize>,
        #[serde(default)]
        weights: Option<Vec<f64>>,
    },
}

impl MapSpec {
    pub fn build_interval_map(&self) -> Result<IntervalMap> {
        match self {
            MapSpec::PiecewiseAffine { branches } => IntervalMap::new(
                branches
                    .iter()
                    .map(|b| Branch::Affine {
                        domain: b.domain,
                        slope: b.slope,
                        intercept: b.intercept,
                    })
                    .collect(),
            ),
            MapSpec::Finite { .. } => Err(LabError::InvalidConfig(
                "finite maps have no interval representation".into(),
            )),
        }
    }
}

/// A runnable instance: a semigroup plus provenance notes.
#[derive(Debug, Clone)]
pub struct BuiltInstance {
    pub label: String,
    pub semigroup: Semigroup,
    pub notes: Vec<String>,
}

/// Top-level instance description accepted by the command line and the
/// checker entry points.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InstanceSpec {
    Discrete {
        operator: OperatorSpec,
        #[serde(default)]
        space: Option<SpaceSpec>,
    },
    Continuous {
        q: Vec<Vec<f64>>,
        #[serde(default)]
        lambda: Option<f64>,
        #[serde(default)]
        space: Option<SpaceSpec>,
    },
    FiniteMap {
        sigma: Vec<usize>,
        #[serde(default)]
        weights: Option<Vec<f64>>,
    },
    Ulam { map: MapSpec, cells: usize },
    Gallery {
        id: String,
        #[serde(default)]
        dim: Option<usize>,
        #[serde(default)]
        p: Option<f64>,
        #[serde(default)]
        period: Option<f64>,
        #[serde(default)]
        cells: Option<usize>,
    },
}

impl InstanceSpec {
    pub fn build(&self) -> Result<BuiltInstance> {
        match self {
            InstanceSpec::Discrete { operator, space } => {
                let space = match space {
                    Some(s) => s.build()?,
                    None => WeightedSpace::unit(operator.dim()),
                };
                let op = operator.build(space)?;
                Ok(BuiltInstance {
                    label: "discrete".into(),
                    semigroup: Semigroup::discrete(op),
                    notes: vec![],
                })
            }
            InstanceSpec::Continuous { q, lambda, space } => {
                let space = match space {
                    Some(s) => s.build()?,
                    None => WeightedSpace::unit(q.len()),
                };
                let s = Semigroup::continuous(space, DenseMatrix::from_rows(q.clone()), *lambda)?;
                Ok(BuiltInstance {
                    label: "continuous".into(),
                    semigroup: s,
                    notes: vec![],
                })
            }
            InstanceSpec::FiniteMap { sigma, weights } => {
                let space = match weights {
                    Some(w) => WeightedSpace::new(w.clone(), 1.0)?,
                    None => WeightedSpace::unit(sigma.len()),
                };
                let op = fp::fp_of_finite_map(&FiniteMap::new(sigma.clone(), space)?);
                Ok(BuiltInstance {
                    label: "finite-map".into(),
                    semigroup: Semigroup::discrete(op),
                    notes: vec!["frobenius-perron operator of a finite map".into()],
                })
            }
            InstanceSpec::Ulam { map, cells } => {
                let interval = map.build_interval_map()?;
                let u = fp::ulam_matrix(&interval, *cells)?;
                let mut notes = vec![format!("ulam discretization on {cells} cells")];
                if !u.exact_markov_partition {
                    notes.push("approximate: branch grid is not a Markov partition".into());
                }
                Ok(BuiltInstance {
                    label: "ulam".into(),
                    semigroup: Semigroup::discrete(u.operator),
                    notes,
                })
            }
            InstanceSpec::Gallery {
                id,
                dim,
                p,
                period,
                cells,
            } => build_gallery_instance(id, *dim, *p, *period, *cells),
        }
    }
}

pub fn build_gallery_instance(
    id: &str,
    dim: Option<usize>,
    p: Option<f64>,
    period: Option<f64>,
    cells: Option<usize>,
) -> Result<BuiltInstance> {
    let default_dim = gallery::gallery_list()
        .into_iter()
        .find(|e| e.id == id)
        .map(|e| e.default_dim);
    let n = dim.or(default_dim).unwrap_or(64);
    let mut notes = Vec::new();
    let semigroup = match id {
        "shift-feedback" => {
            notes.push(format!("exact horizon cap {}", gallery::max_exact_horizon(n)));
            gallery::build_shift_feedback(n)?.semigroup
        }
        "rank-one-projection" => gallery::build_rank_one_projection(n)?.semigroup,
        "weighted-shift" => {
            let g = gallery::build_weighted_shift(n, p.unwrap_or(2.0))?;
            notes.push("native l^p semigroup; the l1 envelope is exposed in gallery runs".into());
            g.native
        }
        "two-point-collapse" => gallery::build_two_point_collapse()?.0,
        "rotation" => {
            notes.push("positivity exempt; only embedded-discrete diagnostics apply".into());
            gallery::build_rotation(period.unwrap_or(1.3))?
        }
        "doubling-ulam" => {
            let c = cells.or(dim).unwrap_or(256);
            notes.push(format!(
                "resolution horizon {}",
                gallery::ulam_resolution_horizon(2.0, c)
            ));
            Semigroup::discrete(gallery::build_doubling_ulam(c)?.operator)
        }
        "tent-ulam" => {
            let c = cells.or(dim).unwrap_or(256);
            Semigroup::discrete(gallery::build_tent_ulam(c)?.operator)
        }
        "cyclic-permutation" => gallery::build_cyclic_permutation(n)?,
        "collapse-chain" => gallery::build_collapse_chain(n)?,
        "identity" => gallery::build_identity(n)?,
        other => {
            return Err(LabError::InvalidConfig(format!(
                "unknown gallery id '{other}'; see `gallery list`"
            )))
        }
    };
    Ok(BuiltInstance {
        label: id.to_string(),
        semigroup,
        notes,
    })
}

/// Versioned report envelope; serialization is deterministic.
#[derive(Debug, Clone, Serialize)]
pub struct ReportEnvelope<T: Serialize> {
    pub schema_version: u32,
    pub label: String,
    pub notes: Vec<String>,
    pub report: T,
}

impl<T: Serialize> ReportEnvelope<T> {
    pub fn new(label: impl Into<String>, notes: Vec<String>, report: T) -> Self {
        Self {
            schema_version: REPORT_SCHEMA_VERSION,
            label: label.into(),
            notes,
            report,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports are serializable")
    }

    pub fn write_json(&self, path: &Path) -> std::io::Result<()> {
        write_atomic(path, self.to_json().as_bytes())
    }
}

/// Writes `t, quantity, value` rows, gnuplot-ready.
pub fn write_trace_csv(
    path: &Path,
    quantity: &str,
    series: &[(f64, f64)],
) -> std::io::Result<()> {
    let mut buf = String::from("t,quantity,value\n");
    for (t, v) in series {
        buf.push_str(&format!("{t},{quantity},{v:e}\n"));
    }
    write_atomic(path, buf.as_bytes())
}

/// One CSV row per vector.
pub fn vector_csv_row(entries: &[f64]) -> String {
    entries
        .iter()
        .map(|x| format!("{x:e}"))
        .collect::<Vec<_>>()
        .join(",")
}

/// Write-then-rename so concurrent runs never observe a half-written report.
fn write_atomic(path: &Path, bytes: &[u8]) -> std::io::Result<()> {
    let tmp = path.with_extension("tmp");
    {
        let mut f = std::fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    std::fs::rename(&tmp, path)
}
