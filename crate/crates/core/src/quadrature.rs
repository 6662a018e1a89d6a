//! Tensor Gauss-Legendre quadrature of peaked log-integrands over a polytope.
//!
//! Intervals are split into equal cells. Polygons are fanned into triangles
//! from the vertex centroid, and each triangle is pulled back to the unit
//! square by the collapsed map `x = c + s (e1 + t e2)` with Jacobian
//! `s |det(e1, e2)|`, so the integrand stays smooth on every cell. Cells that
//! contain the peak are split further. The cell count is doubled until two
//! successive levels agree to `rtol`.

use serde::{Deserialize, Serialize};

use crate::error::{Result, TogeError};
use crate::polytope::DelzantPolytope;
use crate::special::gauss_legendre;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QuadratureConfig {
    pub scheme: String,
    /// Defaults to 32 on intervals and 4 on polygons.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cells_per_axis: Option<usize>,
    pub gauss_order: usize,
    pub refine_factor: usize,
    pub rtol: f64,
    pub max_doublings: usize,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        QuadratureConfig {
            scheme: "gauss-legendre".into(),
            cells_per_axis: None,
            gauss_order: 16,
            refine_factor: 4,
            rtol: 1e-8,
            max_doublings: 3,
        }
    }
}

impl QuadratureConfig {
    pub fn cells_for_dim(&self, dim: usize) -> usize {
        self.cells_per_axis
            .unwrap_or(if dim == 1 { 32 } else { 4 })
            .max(1)
    }
}

#[derive(Debug, Clone)]
enum Patch {
    Segment {
        lo: f64,
        len: f64,
    },
    Triangle {
        c: [f64; 2],
        e1: [f64; 2],
        e2: [f64; 2],
        jac: f64,
    },
}

impl Patch {
    #[inline]
    fn map(&self, s: &[f64], x: &mut [f64]) -> f64 {
        match *self {
            Patch::Segment { lo, len } => {
                x[0] = lo + len * s[0];
                len
            }
            Patch::Triangle { c, e1, e2, jac } => {
                let (p, t) = (s[0], s[1]);
                x[0] = c[0] + p * (e1[0] + t * e2[0]);
                x[1] = c[1] + p * (e1[1] + t * e2[1]);
                p * jac
            }
        }
    }

    /// Parameter coordinates of a physical point, if it lies in the patch.
    fn preimage(&self, x: &[f64]) -> Option<Vec<f64>> {
        const TOL: f64 = 1e-12;
        match *self {
            Patch::Segment { lo, len } => {
                let s = (x[0] - lo) / len;
                (-TOL..=1.0 + TOL).contains(&s).then(|| vec![s])
            }
            Patch::Triangle { c, e1, e2, .. } => {
                let d = [x[0] - c[0], x[1] - c[1]];
                let det = e1[0] * e2[1] - e1[1] * e2[0];
                let p = (d[0] * e2[1] - d[1] * e2[0]) / det;
                let q = (e1[0] * d[1] - e1[1] * d[0]) / det;
                if !(-TOL..=1.0 + TOL).contains(&p) {
                    return None;
                }
                if p.abs() < TOL {
                    return Some(vec![0.0, f64::NAN]);
                }
                let t = q / p;
                (-TOL..=1.0 + TOL).contains(&t).then(|| vec![p, t])
            }
        }
    }
}

/// A polytope pulled back to a union of unit parameter cubes.
#[derive(Debug, Clone)]
pub struct QuadDomain {
    dim: usize,
    patches: Vec<Patch>,
}

impl QuadDomain {
    pub fn new(polytope: &DelzantPolytope) -> Result<Self> {
        let verts: Vec<Vec<f64>> = polytope
            .vertices()
            .iter()
            .map(|v| v.iter().map(|&c| c as f64).collect())
            .collect();
        match polytope.dim() {
            1 => {
                let lo = verts.iter().map(|v| v[0]).fold(f64::INFINITY, f64::min);
                let hi = verts.iter().map(|v| v[0]).fold(f64::NEG_INFINITY, f64::max);
                Ok(QuadDomain {
                    dim: 1,
                    patches: vec![Patch::Segment { lo, len: hi - lo }],
                })
            }
            2 => {
                let n = verts.len() as f64;
                let c = [
                    verts.iter().map(|v| v[0]).sum::<f64>() / n,
                    verts.iter().map(|v| v[1]).sum::<f64>() / n,
                ];
                let mut ring = verts.clone();
                ring.sort_by(|a, b| {
                    let ta = (a[1] - c[1]).atan2(a[0] - c[0]);
                    let tb = (b[1] - c[1]).atan2(b[0] - c[0]);
                    ta.total_cmp(&tb)
                });
                let patches = (0..ring.len())
                    .map(|i| {
                        let a = &ring[i];
                        let b = &ring[(i + 1) % ring.len()];
                        let e1 = [a[0] - c[0], a[1] - c[1]];
                        let e2 = [b[0] - a[0], b[1] - a[1]];
                        let jac = (e1[0] * e2[1] - e1[1] * e2[0]).abs();
                        Patch::Triangle { c, e1, e2, jac }
                    })
                    .collect();
                Ok(QuadDomain { dim: 2, patches })
            }
            m => Err(TogeError::Unsupported(format!(
                "quadrature in dimension {m}"
            ))),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }
}

/// Gauss-Legendre rule on `[0, 1]`.
#[derive(Debug, Clone)]
pub struct GaussRule {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussRule {
    pub fn new(order: usize) -> Self {
        let (x, w) = gauss_legendre(order);
        GaussRule {
            nodes: x.iter().map(|v| 0.5 * (v + 1.0)).collect(),
            weights: w.iter().map(|v| 0.5 * v).collect(),
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct LogIntegral {
    pub log_value: f64,
    /// Relative change between the last two refinement levels.
    pub rel_change: f64,
}

/// `sum over cells` of a scaled integrand `exp(log_f(x) - shift)`.
fn integrate_level<F>(
    domain: &QuadDomain,
    rule: &GaussRule,
    cells: usize,
    refine: usize,
    peak: &[f64],
    log_f: &F,
    shift: f64,
) -> f64
where
    F: Fn(&[f64]) -> f64,
{
    let m = domain.dim;
    let h = 1.0 / cells as f64;
    let mut x = [0.0f64; 2];
    let mut s = [0.0f64; 2];
    let mut total = 0.0;
    for patch in &domain.patches {
        let pre = patch.preimage(peak);
        let mut cell_sum = |lo: [f64; 2], width: f64| -> f64 {
            let mut acc = 0.0;
            if m == 1 {
                for (&n, &w) in rule.nodes.iter().zip(&rule.weights) {
                    s[0] = lo[0] + width * n;
                    let jac = patch.map(&s[..1], &mut x[..1]);
                    acc += w * jac * (log_f(&x[..1]) - shift).exp();
                }
                acc * width
            } else {
                for (&n0, &w0) in rule.nodes.iter().zip(&rule.weights) {
                    s[0] = lo[0] + width * n0;
                    for (&n1, &w1) in rule.nodes.iter().zip(&rule.weights) {
                        s[1] = lo[1] + width * n1;
                        let jac = patch.map(&s, &mut x);
                        acc += w0 * w1 * jac * (log_f(&x) - shift).exp();
                    }
                }
                acc * width * width
            }
        };
        let holds_peak = |idx: &[usize]| -> bool {
            let Some(p) = &pre else { return false };
            (0..m).all(|j| {
                if p[j].is_nan() {
                    return true;
                }
                let lo = idx[j] as f64 * h - 1e-12;
                let hi = (idx[j] + 1) as f64 * h + 1e-12;
                p[j] >= lo && p[j] <= hi
            })
        };
        let sub = 1.0 / refine as f64;
        if m == 1 {
            for i in 0..cells {
                let lo = [i as f64 * h, 0.0];
                if refine > 1 && holds_peak(&[i]) {
                    for a in 0..refine {
                        total += cell_sum([lo[0] + a as f64 * h * sub, 0.0], h * sub);
                    }
                } else {
                    total += cell_sum(lo, h);
                }
            }
        } else {
            for i in 0..cells {
                for j in 0..cells {
                    let lo = [i as f64 * h, j as f64 * h];
                    if refine > 1 && holds_peak(&[i, j]) {
                        for a in 0..refine {
                            for b in 0..refine {
                                let l = [lo[0] + a as f64 * h * sub, lo[1] + b as f64 * h * sub];
                                total += cell_sum(l, h * sub);
                            }
                        }
                    } else {
                        total += cell_sum(lo, h);
                    }
                }
            }
        }
    }
    total
}

/// `ln integral_P exp(log_f(x)) dx` where `log_f <= shift` everywhere and the
/// integrand peaks at `peak`.
pub fn integrate_log<F>(
    domain: &QuadDomain,
    config: &QuadratureConfig,
    peak: &[f64],
    shift: f64,
    log_f: F,
) -> std::result::Result<LogIntegral, LogIntegral>
where
    F: Fn(&[f64]) -> f64,
{
    let rule = GaussRule::new(config.gauss_order);
    let mut cells = config.cells_for_dim(domain.dim);
    let refine = config.refine_factor.max(1);
    let mut prev = integrate_level(domain, &rule, cells, refine, peak, &log_f, shift);
    let mut rel_change = f64::INFINITY;
    for _ in 0..config.max_doublings.max(1) {
        cells *= 2;
        let next = integrate_level(domain, &rule, cells, refine, peak, &log_f, shift);
        rel_change = ((next - prev) / next).abs();
        prev = next;
        if rel_change <= config.rtol {
            return Ok(LogIntegral {
                log_value: shift + next.ln(),
                rel_change,
            });
        }
    }
    Err(LogIntegral {
        log_value: shift + prev.ln(),
        rel_change,
    })
}
