//! Symplectic potentials `u = sum_r l_r log l_r + f` and their Legendre duals.
//!
//! Conventions on the open orbit: `|z_j|^2 = e^{rho_j}`, the Kahler potential
//! is `phi(rho) = max_x <x, rho> - u(x)`, the moment map is `grad_rho phi`
//! and its inverse is `grad_x u`.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Result, TogeError};
use crate::poly::Polynomial;
use crate::polytope::DelzantPolytope;

/// Derivatives refuse to evaluate closer than this to a logarithmic facet.
pub const BOUNDARY_EPS: f64 = 1e-12;
const NEWTON_MAX_ITER: usize = 200;
const NEWTON_RTOL: f64 = 1e-12;
const FRACTION_TO_BOUNDARY: f64 = 0.5;

/// Potential description as it appears in configuration files.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PotentialSpec {
    #[serde(default)]
    pub smooth: Polynomial,
    /// Facets carrying the `l log l` term; all of them when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub log_facets: Option<Vec<bool>>,
}

#[derive(Debug, Clone)]
pub struct SymplecticPotential {
    polytope: Arc<DelzantPolytope>,
    log_facets: Vec<bool>,
    smooth: Polynomial,
}

#[derive(Debug, Clone)]
pub struct LegendreResult {
    pub value: f64,
    pub maximizer: Vec<f64>,
    pub iterations: usize,
    pub residual: f64,
}

/// `G = hess u`, `H = G^{-1}`, `det G` and the smooth density `delta` with
/// `det(G^{-1}) = delta * prod_r l_r`.
#[derive(Debug, Clone)]
pub struct HessianPair {
    pub g: DMatrix<f64>,
    pub h: DMatrix<f64>,
    pub det_g: f64,
    pub delta_factor: f64,
}

impl SymplecticPotential {
    pub fn new(polytope: Arc<DelzantPolytope>, smooth: Polynomial) -> Result<Self> {
        let d = polytope.num_facets();
        Self::with_log_facets(polytope, smooth, vec![true; d])
    }

    pub fn canonical(polytope: Arc<DelzantPolytope>) -> Self {
        Self::new(polytope, Polynomial::zero()).expect("zero polynomial fits any dimension")
    }

    pub fn with_log_facets(
        polytope: Arc<DelzantPolytope>,
        smooth: Polynomial,
        log_facets: Vec<bool>,
    ) -> Result<Self> {
        if !smooth.dim_ok(polytope.dim()) {
            return Err(TogeError::schema(
                "smooth",
                format!("every monomial needs {} finite exponents", polytope.dim()),
            ));
        }
        if log_facets.len() != polytope.num_facets() {
            return Err(TogeError::schema(
                "log_facets",
                format!("expected {} entries", polytope.num_facets()),
            ));
        }
        Ok(SymplecticPotential {
            polytope,
            log_facets,
            smooth: smooth.simplified(),
        })
    }

    pub fn from_spec(polytope: Arc<DelzantPolytope>, spec: &PotentialSpec) -> Result<Self> {
        let d = polytope.num_facets();
        let mask = spec.log_facets.clone().unwrap_or_else(|| vec![true; d]);
        Self::with_log_facets(polytope, spec.smooth.clone(), mask)
    }

    /// Bargmann-Fock potential `sum_j (x_j log x_j - x_j)` truncated to `[0, size]^m`.
    pub fn bargmann_fock(dim: usize, size: i64) -> Result<Self> {
        let poly = Arc::new(DelzantPolytope::cube(dim, size)?);
        let smooth = Polynomial::new(
            (0..dim)
                .map(|j| {
                    let mut e = vec![0; dim];
                    e[j] = 1;
                    (e, -1.0)
                })
                .collect(),
        );
        let mask = (0..2 * dim).map(|r| r < dim).collect();
        Self::with_log_facets(poly, smooth, mask)
    }

    pub fn polytope(&self) -> &Arc<DelzantPolytope> {
        &self.polytope
    }

    pub fn dim(&self) -> usize {
        self.polytope.dim()
    }

    pub fn smooth(&self) -> &Polynomial {
        &self.smooth
    }

    pub fn log_facets(&self) -> &[bool] {
        &self.log_facets
    }

    pub fn is_log_facet(&self, r: usize) -> bool {
        self.log_facets[r]
    }

    /// Same canonical part with smooth part replaced.
    pub fn with_smooth(&self, smooth: Polynomial) -> SymplecticPotential {
        SymplecticPotential {
            polytope: self.polytope.clone(),
            log_facets: self.log_facets.clone(),
            smooth: smooth.simplified(),
        }
    }

    /// `(1 - t) self + t other`; both must share polytope and log facets.
    pub fn interpolate(&self, other: &SymplecticPotential, t: f64) -> SymplecticPotential {
        debug_assert_eq!(self.log_facets, other.log_facets);
        self.with_smooth(self.smooth.combine(1.0 - t, &other.smooth, t))
    }

    /// `u + <c, x> + b`.
    pub fn add_affine(&self, c: &[f64], b: f64) -> SymplecticPotential {
        let m = self.dim();
        let mut terms: Vec<(Vec<u32>, f64)> = vec![(vec![0; m], b)];
        for (j, &cj) in c.iter().enumerate() {
            let mut e = vec![0; m];
            e[j] = 1;
            terms.push((e, cj));
        }
        self.with_smooth(self.smooth.combine(1.0, &Polynomial::new(terms), 1.0))
    }

    pub fn eval_u(&self, x: &[f64]) -> Result<f64> {
        let ls = self.polytope.facet_values(x)?;
        if ls.iter().any(|&l| l < -1e-12) {
            return Err(TogeError::OutsidePolytope(x.to_vec()));
        }
        Ok(self.canonical_part(&ls) + self.smooth.eval(x))
    }

    fn canonical_part(&self, ls: &[f64]) -> f64 {
        ls.iter()
            .zip(&self.log_facets)
            .filter(|&(&l, &on)| on && l > 0.0)
            .map(|(&l, _)| l * l.ln())
            .sum()
    }

    fn interior_values(&self, x: &[f64]) -> Result<Vec<f64>> {
        let ls = self.polytope.facet_values(x)?;
        for (r, &l) in ls.iter().enumerate() {
            if l < -1e-12 {
                return Err(TogeError::OutsidePolytope(x.to_vec()));
            }
            if self.log_facets[r] && l < BOUNDARY_EPS {
                return Err(TogeError::TooCloseToBoundary {
                    x: x.to_vec(),
                    facet: r,
                    eps: BOUNDARY_EPS,
                });
            }
        }
        Ok(ls)
    }

    pub fn grad_u(&self, x: &[f64]) -> Result<Vec<f64>> {
        let ls = self.interior_values(x)?;
        Ok(self.grad_from(x, &ls))
    }

    fn grad_from(&self, x: &[f64], ls: &[f64]) -> Vec<f64> {
        let mut g = self.smooth.grad(x);
        for (r, f) in self.polytope.facets().iter().enumerate() {
            if !self.log_facets[r] {
                continue;
            }
            let c = 1.0 + ls[r].ln();
            for (gi, &v) in g.iter_mut().zip(&f.normal) {
                *gi += c * v as f64;
            }
        }
        g
    }

    fn hess_from(&self, x: &[f64], ls: &[f64]) -> DMatrix<f64> {
        let m = self.dim();
        let mut h = vec![0.0; m * m];
        self.smooth.add_hess(x, &mut h);
        for (r, f) in self.polytope.facets().iter().enumerate() {
            if !self.log_facets[r] {
                continue;
            }
            for i in 0..m {
                for j in 0..m {
                    h[i * m + j] += (f.normal[i] * f.normal[j]) as f64 / ls[r];
                }
            }
        }
        DMatrix::from_row_slice(m, m, &h)
    }

    pub fn hess_matrix(&self, x: &[f64]) -> Result<DMatrix<f64>> {
        let ls = self.interior_values(x)?;
        Ok(self.hess_from(x, &ls))
    }

    pub fn hess_u(&self, x: &[f64]) -> Result<HessianPair> {
        let ls = self.interior_values(x)?;
        let g = self.hess_from(x, &ls);
        let chol = g
            .clone()
            .cholesky()
            .ok_or_else(|| TogeError::NonConvexAt(x.to_vec()))?;
        let h = chol.inverse();
        let det_g = g.determinant();
        let delta_factor = 1.0 / self.volume_factor_from(x, &ls);
        Ok(HessianPair {
            g,
            h,
            det_g,
            delta_factor,
        })
    }

    /// `det(hess u) * prod_{log facets} l_r`, a polynomial in `x` that stays
    /// finite and positive up to the boundary.
    pub fn volume_factor(&self, x: &[f64]) -> Result<f64> {
        let ls = self.polytope.facet_values(x)?;
        if ls.iter().any(|&l| l < -1e-12) {
            return Err(TogeError::OutsidePolytope(x.to_vec()));
        }
        Ok(self.volume_factor_from(x, &ls))
    }

    /// The density `delta` of `det(G^{-1}) = delta * prod l_r`, valid on the closed polytope.
    pub fn delta(&self, x: &[f64]) -> Result<f64> {
        Ok(1.0 / self.volume_factor(x)?)
    }

    fn volume_factor_from(&self, x: &[f64], ls: &[f64]) -> f64 {
        let m = self.dim();
        let facets = self.polytope.facets();
        let logs: Vec<usize> = (0..facets.len()).filter(|&r| self.log_facets[r]).collect();
        let prod_except = |skip: &[usize]| -> f64 {
            logs.iter()
                .filter(|r| !skip.contains(r))
                .map(|&r| ls[r].max(0.0))
                .product()
        };
        let mut fh = vec![0.0; m * m];
        self.smooth.add_hess(x, &mut fh);
        match m {
            1 => {
                let mut s = fh[0] * prod_except(&[]);
                for &r in &logs {
                    let v = facets[r].normal[0] as f64;
                    s += v * v * prod_except(&[r]);
                }
                s
            }
            2 => {
                let det_f = fh[0] * fh[3] - fh[1] * fh[2];
                let mut s = det_f * prod_except(&[]);
                for (a, &r) in logs.iter().enumerate() {
                    let v = &facets[r].normal;
                    let (p0, p1) = (-(v[1] as f64), v[0] as f64);
                    let quad = p0 * p0 * fh[0] + p0 * p1 * (fh[1] + fh[2]) + p1 * p1 * fh[3];
                    s += quad * prod_except(&[r]);
                    for &q in &logs[a + 1..] {
                        let w = &facets[q].normal;
                        let d = (v[0] * w[1] - v[1] * w[0]) as f64;
                        s += d * d * prod_except(&[r, q]);
                    }
                }
                s
            }
            _ => self.hess_from(x, ls).determinant() * prod_except(&[]),
        }
    }

    /// Legendre dual `phi(rho) = max_x <x, rho> - u(x)` by damped Newton on
    /// `grad u(x) = rho`, started at the analytic center.
    pub fn legendre(&self, rho: &[f64]) -> Result<LegendreResult> {
        self.legendre_from(rho, self.polytope.analytic_center())
    }

    pub fn legendre_from(&self, rho: &[f64], start: &[f64]) -> Result<LegendreResult> {
        self.polytope.check_dim(rho)?;
        if rho.iter().any(|v| !v.is_finite()) {
            return Err(TogeError::NewtonDivergence {
                rho: rho.to_vec(),
                iterations: 0,
                residual: f64::INFINITY,
            });
        }
        let m = self.dim();
        let facets = self.polytope.facets();
        let rho_norm = rho.iter().map(|v| v * v).sum::<f64>().sqrt();
        let tol = NEWTON_RTOL * (1.0 + rho_norm);
        let residual_of = |x: &[f64], ls: &[f64]| -> DVector<f64> {
            let g = self.grad_from(x, ls);
            DVector::from_fn(m, |i, _| g[i] - rho[i])
        };

        let mut x = start.to_vec();
        let mut ls = self.polytope.facet_values(&x)?;
        let mut res = residual_of(&x, &ls);
        let mut iterations = 0;
        while res.norm() > tol {
            if iterations >= NEWTON_MAX_ITER {
                return Err(TogeError::NewtonDivergence {
                    rho: rho.to_vec(),
                    iterations,
                    residual: res.norm(),
                });
            }
            iterations += 1;
            let g = self.hess_from(&x, &ls);
            let step = g
                .cholesky()
                .ok_or_else(|| TogeError::NonConvexAt(x.clone()))?
                .solve(&(-&res));
            let mut tau = 1.0f64;
            for (f, &l) in facets.iter().zip(&ls) {
                let dl: f64 = f
                    .normal
                    .iter()
                    .zip(step.iter())
                    .map(|(&v, s)| v as f64 * s)
                    .sum();
                if dl < 0.0 {
                    tau = tau.min(FRACTION_TO_BOUNDARY * l / -dl);
                }
            }
            let base = res.norm();
            let accepted = loop {
                let trial: Vec<f64> = x
                    .iter()
                    .zip(step.iter())
                    .map(|(a, s)| a + tau * s)
                    .collect();
                let tls = self.polytope.facet_values(&trial)?;
                if tls
                    .iter()
                    .zip(&self.log_facets)
                    .all(|(&l, &on)| !on || l > 0.0)
                {
                    let tres = residual_of(&trial, &tls);
                    if tres.norm() < base || tau < 1e-10 {
                        break Some((trial, tls, tres));
                    }
                }
                tau *= 0.5;
                if tau < 1e-12 {
                    break None;
                }
            };
            match accepted {
                Some((nx, nls, nres)) => {
                    let stalled = nres.norm() >= base;
                    x = nx;
                    ls = nls;
                    res = nres;
                    if stalled {
                        break;
                    }
                }
                None => break,
            }
        }
        let residual = res.norm();
        // near the boundary the residual floor is set by rounding in l_r
        if residual > tol.max(1e-7 * (1.0 + rho_norm)) {
            return Err(TogeError::NewtonDivergence {
                rho: rho.to_vec(),
                iterations,
                residual,
            });
        }
        let u = self.canonical_part(&ls) + self.smooth.eval(&x);
        let value = x.iter().zip(rho).map(|(a, b)| a * b).sum::<f64>() - u;
        Ok(LegendreResult {
            value,
            maximizer: x,
            iterations,
            residual,
        })
    }

    pub fn moment_map(&self, rho: &[f64]) -> Result<Vec<f64>> {
        Ok(self.legendre(rho)?.maximizer)
    }

    pub fn inverse_moment(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.grad_u(x)
    }

    /// Smallest Hessian eigenvalue over a tensor grid with `resolution` points
    /// per axis, skipping points within `1 / (4 resolution)` of a facet.
    pub fn convexity_check(&self, resolution: usize) -> f64 {
        let m = self.dim();
        let (lo, hi) = self.polytope.bounding_box();
        let margin = 1.0 / (4.0 * resolution as f64);
        let n = resolution.max(2);
        let mut worst = f64::INFINITY;
        let mut idx = vec![0usize; m];
        loop {
            let x: Vec<f64> = (0..m)
                .map(|j| lo[j] as f64 + (hi[j] - lo[j]) as f64 * idx[j] as f64 / (n - 1) as f64)
                .collect();
            if let Ok(ls) = self.polytope.facet_values(&x) {
                if ls.iter().all(|&l| l >= margin) {
                    let g = self.hess_from(&x, &ls);
                    let ev = g.symmetric_eigenvalues().min();
                    worst = worst.min(ev);
                }
            }
            let mut j = m;
            loop {
                if j == 0 {
                    return worst;
                }
                j -= 1;
                if idx[j] + 1 < n {
                    idx[j] += 1;
                    idx[j + 1..m].fill(0);
                    break;
                }
            }
        }
    }
}
