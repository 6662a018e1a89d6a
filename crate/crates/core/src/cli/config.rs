use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Result, SchemaViolation, TogeError};
use crate::geodesic::{GeodesicPair, CONVEXITY_RESOLUTION};
use crate::polytope::{DelzantPolytope, PolytopeSpec};
use crate::potential::{PotentialSpec, SymplecticPotential};
use crate::quadrature::QuadratureConfig;
use crate::quantize::norming_registry;

pub const MAX_K: u32 = 512;

fn default_k_values() -> Vec<u32> {
    vec![16, 32, 64, 128]
}

fn default_t_grid() -> usize {
    11
}

fn default_x_grid() -> usize {
    33
}

fn default_localization_delta() -> f64 {
    0.1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub polytope: PolytopeSpec,
    #[serde(default)]
    pub u0: PotentialSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub u1: Option<PotentialSpec>,
    #[serde(default = "default_k_values")]
    pub k_values: Vec<u32>,
    #[serde(default = "default_t_grid")]
    pub t_grid: usize,
    #[serde(default = "default_x_grid")]
    pub x_grid: usize,
    /// Grid margin; `max(0.02, 1/(4k))` per level when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub margin: Option<f64>,
    #[serde(default)]
    pub quadrature: QuadratureConfig,
    /// Evaluation points for `pkernel` and `szego`; the origin when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rho_values: Option<Vec<Vec<f64>>>,
    #[serde(default = "default_localization_delta")]
    pub localization_delta: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threads: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out_dir: Option<String>,
}

impl RunConfig {
    pub fn minimal(polytope: PolytopeSpec) -> Self {
        serde_json::from_value(serde_json::json!({ "polytope": polytope }))
            .expect("defaults are valid")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| {
            TogeError::Schema(vec![SchemaViolation {
                path: "config".into(),
                message: e.to_string(),
            }])
        })
    }

    /// SHA-256 of the canonical JSON form, excluding settings that cannot
    /// change results (thread count, output directory).
    pub fn hash(&self) -> String {
        let mut c = self.clone();
        c.threads = None;
        c.out_dir = None;
        let text = serde_json::to_string(&c).expect("config serializes");
        Sha256::digest(text.as_bytes())
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }

    pub fn rho_points(&self, dim: usize) -> Vec<Vec<f64>> {
        self.rho_values
            .clone()
            .unwrap_or_else(|| vec![vec![0.0; dim]])
    }

    /// Every violation, with `requires_pair` adding the `u1` requirement.
    pub fn validate(&self, requires_pair: Option<&str>) -> Result<Problem> {
        let mut v = Vec::new();
        let mut push = |path: &str, msg: String| {
            v.push(SchemaViolation {
                path: path.into(),
                message: msg,
            })
        };
        if self.k_values.is_empty() {
            push("k_values", "must not be empty".into());
        }
        if self.k_values.windows(2).any(|w| w[0] >= w[1]) {
            push("k_values", "k_values not increasing".into());
        }
        if let Some(&k) = self.k_values.iter().find(|&&k| k == 0 || k > MAX_K) {
            push("k_values", format!("{k} is outside 1..={MAX_K}"));
        }
        if self.t_grid < 3 {
            push("t_grid", "needs at least 3 points".into());
        }
        if self.x_grid < 3 {
            push("x_grid", "needs at least 3 points".into());
        }
        if let Some(m) = self.margin {
            if !(m > 0.0 && m < 0.5) {
                push("margin", "must lie in (0, 0.5)".into());
            }
        }
        if !(self.localization_delta.is_finite() && self.localization_delta >= 0.0) {
            push(
                "localization_delta",
                "must be finite and nonnegative".into(),
            );
        }
        if self.threads == Some(0) {
            push("threads", "must be positive".into());
        }
        let q = &self.quadrature;
        if !norming_registry().contains(&q.scheme) {
            push(
                "quadrature.scheme",
                format!(
                    "unknown scheme '{}' (known: {})",
                    q.scheme,
                    norming_registry().names().join(", ")
                ),
            );
        }
        if q.cells_per_axis == Some(0) {
            push("quadrature.cells_per_axis", "must be positive".into());
        }
        if q.gauss_order == 0 || q.gauss_order > 64 {
            push("quadrature.gauss_order", "must lie in 1..=64".into());
        }
        if q.refine_factor == 0 {
            push("quadrature.refine_factor", "must be positive".into());
        }
        if !(q.rtol > 0.0 && q.rtol < 1.0) {
            push("quadrature.rtol", "must lie in (0, 1)".into());
        }
        if q.max_doublings == 0 {
            push("quadrature.max_doublings", "must be positive".into());
        }
        if let Some(cmd) = requires_pair {
            if self.u1.is_none() {
                push("u1", format!("required by command '{cmd}'"));
            }
        }

        let polytope = match DelzantPolytope::from_spec(&self.polytope) {
            Ok(p) => Some(Arc::new(p)),
            Err(e) => {
                push_error(&mut v, "polytope", e);
                None
            }
        };
        let mut problem = None;
        if let Some(p) = polytope {
            let m = p.dim();
            if let Some(rhos) = &self.rho_values {
                if rhos
                    .iter()
                    .any(|r| r.len() != m || r.iter().any(|x| !x.is_finite()))
                {
                    v.push(SchemaViolation {
                        path: "rho_values".into(),
                        message: format!("each entry needs {m} finite coordinates"),
                    });
                }
            }
            let mut build = |name: &str, spec: &PotentialSpec| -> Option<SymplecticPotential> {
                match SymplecticPotential::from_spec(p.clone(), spec) {
                    Ok(u) => {
                        if u.convexity_check(CONVEXITY_RESOLUTION) <= 0.0 {
                            v.push(SchemaViolation {
                                path: name.into(),
                                message: "potential is not strictly convex".into(),
                            });
                            None
                        } else {
                            Some(u)
                        }
                    }
                    Err(e) => {
                        push_error(&mut v, name, e);
                        None
                    }
                }
            };
            let u0 = build("u0", &self.u0);
            let u1 = self.u1.as_ref().and_then(|s| build("u1", s));
            if let (Some(u0), true) = (u0, self.u1.is_none() || u1.is_some()) {
                let pair = match u1 {
                    Some(u1) => match GeodesicPair::new(u0.clone(), u1) {
                        Ok(pair) => Some(pair),
                        Err(e) => {
                            push_error(&mut v, "u1", e);
                            None
                        }
                    },
                    None => None,
                };
                problem = Some(Problem {
                    polytope: p,
                    u0,
                    pair,
                });
            }
        }
        if v.is_empty() {
            Ok(problem.expect("no violations means the problem was built"))
        } else {
            Err(TogeError::Schema(v))
        }
    }
}

fn push_error(v: &mut Vec<SchemaViolation>, path: &str, e: TogeError) {
    match e {
        TogeError::Schema(inner) => v.extend(inner.into_iter().map(|s| SchemaViolation {
            path: format!("{path}.{}", s.path),
            message: s.message,
        })),
        other => v.push(SchemaViolation {
            path: path.into(),
            message: other.to_string(),
        }),
    }
}

/// The validated objects a configuration describes.
#[derive(Debug, Clone)]
pub struct Problem {
    pub polytope: Arc<DelzantPolytope>,
    pub u0: SymplecticPotential,
    pub pair: Option<GeodesicPair>,
}

pub fn parse_config(path: &Path) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| {
        TogeError::Io(std::io::Error::new(
            e.kind(),
            format!("{}: {e}", path.display()),
        ))
    })?;
    let cfg = RunConfig::from_json(&text)?;
    cfg.validate(None)?;
    Ok(cfg)
}
