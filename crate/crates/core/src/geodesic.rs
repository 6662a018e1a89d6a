//! The Monge-Ampere geodesic `phi_t = Legendre(u_t)` with `u_t = (1 - t) u_0 + t u_1`,
//! the Bergman geodesic `psi_k(t, rho) = (1/k) log sum_alpha Q_0^{t-1} Q_1^{-t} e^{<alpha, rho>}`,
//! and the ratio `R_k = Q_t / (Q_0^{1-t} Q_1^t)` with its limit `R_inf`.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::error::{Result, TogeError};
use crate::poly::Polynomial;
use crate::polytope::DelzantPolytope;
use crate::potential::SymplecticPotential;
use crate::quantize::{NormingScheme, NormingTable};
use crate::special::log_sum_exp;

/// Resolution of the convexity check applied to both endpoints.
pub const CONVEXITY_RESOLUTION: usize = 17;

#[derive(Debug, Clone)]
pub struct GeodesicPair {
    pub u0: SymplecticPotential,
    pub u1: SymplecticPotential,
    /// `u_1 - u_0`.
    pub f: Polynomial,
}

impl GeodesicPair {
    pub fn new(u0: SymplecticPotential, u1: SymplecticPotential) -> Result<Self> {
        if u0.polytope().facets() != u1.polytope().facets() {
            return Err(TogeError::schema(
                "u1",
                "endpoints live on different polytopes",
            ));
        }
        if u0.log_facets() != u1.log_facets() {
            return Err(TogeError::schema(
                "u1.log_facets",
                "endpoints differ in log facets",
            ));
        }
        for (name, u) in [("u0", &u0), ("u1", &u1)] {
            if u.convexity_check(CONVEXITY_RESOLUTION) <= 0.0 {
                let c = u.polytope().analytic_center().to_vec();
                return Err(TogeError::NonConvexAt(c).at(name));
            }
        }
        let f = u1.smooth().combine(1.0, u0.smooth(), -1.0);
        // share one polytope allocation
        let u1 = u0.with_smooth(u1.smooth().clone());
        Ok(GeodesicPair { u0, u1, f })
    }

    pub fn trivial(u0: SymplecticPotential) -> Result<Self> {
        Self::new(u0.clone(), u0)
    }

    pub fn polytope(&self) -> &Arc<DelzantPolytope> {
        self.u0.polytope()
    }

    pub fn dim(&self) -> usize {
        self.u0.dim()
    }

    pub fn at(&self, t: f64) -> SymplecticPotential {
        if t == 0.0 {
            self.u0.clone()
        } else if t == 1.0 {
            self.u1.clone()
        } else {
            self.u0.interpolate(&self.u1, t)
        }
    }

    /// `(u_1, u_0)`; the geodesic runs backwards in `t`.
    pub fn swapped(&self) -> Self {
        GeodesicPair {
            u0: self.u1.clone(),
            u1: self.u0.clone(),
            f: self.f.combine(-1.0, &Polynomial::zero(), 0.0),
        }
    }
}

#[derive(Debug, Clone)]
pub struct MAJet {
    pub t: f64,
    pub rho: Vec<f64>,
    pub x: Vec<f64>,
    pub phi: f64,
    pub dt: f64,
    pub dt2: f64,
    pub grad: Vec<f64>,
    pub hess: DMatrix<f64>,
    pub mixed: Vec<f64>,
}

impl MAJet {
    /// `dt2 - <hess^{-1} mixed, mixed>`, zero along a geodesic.
    pub fn ma_residual(&self) -> f64 {
        let mixed = DVector::from_column_slice(&self.mixed);
        let y = match self.hess.clone().cholesky() {
            Some(c) => c.solve(&mixed),
            None => return f64::NAN,
        };
        self.dt2 - y.dot(&mixed)
    }
}

pub fn ma_jet(pair: &GeodesicPair, t: f64, rho: &[f64]) -> Result<MAJet> {
    let ut = pair.at(t);
    let leg = ut.legendre(rho)?;
    let x = leg.maximizer;
    let hp = ut.hess_u(&x)?;
    let df = DVector::from_vec(pair.f.grad(&x));
    let hdf = &hp.h * &df;
    Ok(MAJet {
        t,
        rho: rho.to_vec(),
        phi: leg.value,
        dt: -pair.f.eval(&x),
        dt2: df.dot(&hdf),
        grad: x.clone(),
        hess: hp.h,
        mixed: hdf.iter().map(|v| -v).collect(),
        x,
    })
}

/// Norming tables of both endpoints at one level `k`.
#[derive(Debug, Clone)]
pub struct TablePair {
    pub k: u32,
    pub q0: NormingTable,
    pub q1: NormingTable,
}

impl TablePair {
    pub fn build(pair: &GeodesicPair, k: u32, scheme: &dyn NormingScheme) -> Result<Self> {
        let q0 = NormingTable::build(&pair.u0, k, scheme)?;
        let q1 = if pair.f.is_zero() {
            q0.clone()
        } else {
            NormingTable::build(&pair.u1, k, scheme)?
        };
        Self::from_tables(q0, q1)
    }

    pub fn from_tables(q0: NormingTable, q1: NormingTable) -> Result<Self> {
        if q0.k != q1.k || q0.lattice != q1.lattice {
            return Err(TogeError::MissingNormingTable(q1.k));
        }
        Ok(TablePair { k: q0.k, q0, q1 })
    }

    pub fn len(&self) -> usize {
        self.q0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.q0.is_empty()
    }

    pub fn points(&self) -> &[Vec<i64>] {
        self.q0.points()
    }

    /// `2 lambda_alpha = log Q_0 - log Q_1`.
    pub fn two_lambda(&self) -> Vec<f64> {
        self.q0
            .log_q
            .iter()
            .zip(&self.q1.log_q)
            .map(|(a, b)| a - b)
            .collect()
    }
}

#[derive(Debug, Clone)]
pub struct BergmanJet {
    pub t: f64,
    pub rho: Vec<f64>,
    pub psi: f64,
    pub dt: f64,
    pub dt2: f64,
    pub grad: Vec<f64>,
    pub hess: DMatrix<f64>,
    pub mixed: Vec<f64>,
    pub weights: Vec<f64>,
}

pub fn bergman_jet(tables: &TablePair, t: f64, rho: &[f64]) -> Result<BergmanJet> {
    let k = tables.k as f64;
    let pts = tables.points();
    let m = rho.len();
    if pts.first().is_some_and(|a| a.len() != m) {
        return Err(TogeError::DimensionMismatch {
            expected: pts[0].len(),
            got: m,
        });
    }
    let lam = tables.two_lambda();
    let log_w: Vec<f64> = pts
        .iter()
        .zip(tables.q0.log_q.iter().zip(&tables.q1.log_q))
        .map(|(a, (l0, l1))| {
            (t - 1.0) * l0 - t * l1 + a.iter().zip(rho).map(|(&ai, r)| ai as f64 * r).sum::<f64>()
        })
        .collect();
    let lse = log_sum_exp(&log_w);
    let p: Vec<f64> = log_w.iter().map(|v| (v - lse).exp()).collect();

    let mut mean = vec![0.0; m];
    let mut mean_l = 0.0;
    for ((a, &w), &l) in pts.iter().zip(&p).zip(&lam) {
        for j in 0..m {
            mean[j] += w * a[j] as f64;
        }
        mean_l += w * l;
    }
    let mut cov = DMatrix::zeros(m, m);
    let mut cross = vec![0.0; m];
    let mut var_l = 0.0;
    for ((a, &w), &l) in pts.iter().zip(&p).zip(&lam) {
        let dl = l - mean_l;
        var_l += w * dl * dl;
        for i in 0..m {
            let di = a[i] as f64 - mean[i];
            cross[i] += w * di * dl;
            for j in 0..m {
                cov[(i, j)] += w * di * (a[j] as f64 - mean[j]);
            }
        }
    }
    Ok(BergmanJet {
        t,
        rho: rho.to_vec(),
        psi: lse / k,
        dt: mean_l / k,
        dt2: var_l / k,
        grad: mean.iter().map(|v| v / k).collect(),
        hess: cov / k,
        mixed: cross.iter().map(|v| v / k).collect(),
        weights: p,
    })
}

/// `(det G_0^{1-t} det G_1^t / det G_t)^{1/2}`, evaluated through the
/// boundary-regular factors `det G * prod l`.
pub fn rinfty(pair: &GeodesicPair, t: f64, x: &[f64]) -> Result<f64> {
    let v0 = pair.u0.volume_factor(x)?;
    let v1 = pair.u1.volume_factor(x)?;
    let vt = pair.at(t).volume_factor(x)?;
    Ok((0.5 * ((1.0 - t) * v0.ln() + t * v1.ln() - vt.ln())).exp())
}

/// `R_k` and `R_inf` at one lattice point.
#[derive(Debug, Clone, PartialEq)]
pub struct RkRow {
    pub alpha: Vec<i64>,
    pub log_rk: f64,
    pub rinf: f64,
    /// All log facets at distance `>= k^{-2/3}`.
    pub interior: bool,
}

impl RkRow {
    pub fn rk(&self) -> f64 {
        self.log_rk.exp()
    }

    pub fn gap(&self) -> f64 {
        (self.rk() - self.rinf).abs()
    }
}

/// Norming table of `u_t`, reusing the endpoint tables at `t = 0, 1`.
pub fn table_at(
    pair: &GeodesicPair,
    tables: &TablePair,
    t: f64,
    scheme: &dyn NormingScheme,
) -> Result<NormingTable> {
    if t == 0.0 {
        Ok(tables.q0.clone())
    } else if t == 1.0 {
        Ok(tables.q1.clone())
    } else {
        NormingTable::build(&pair.at(t), tables.k, scheme)
    }
}

pub fn rk_rows(
    pair: &GeodesicPair,
    tables: &TablePair,
    qt: &NormingTable,
    t: f64,
) -> Result<Vec<RkRow>> {
    let k = tables.k;
    let kf = k as f64;
    let cut = kf.powf(-2.0 / 3.0);
    let ut = pair.at(t);
    tables
        .points()
        .par_iter()
        .enumerate()
        .map(|(i, alpha)| {
            let (l0, l1, lt) = (tables.q0.log_q[i], tables.q1.log_q[i], qt.log_q[i]);
            let log_rk = lt - (1.0 - t) * l0 - t * l1;
            let x: Vec<f64> = alpha.iter().map(|&a| a as f64 / kf).collect();
            // same quantity through the special values P = e^{k u} / Q
            let lp =
                |u: &SymplecticPotential, lq: f64| -> Result<f64> { Ok(kf * u.eval_u(&x)? - lq) };
            let via_p = (1.0 - t) * lp(&pair.u0, l0)? + t * lp(&pair.u1, l1)? - lp(&ut, lt)?;
            debug_assert!(
                (via_p - log_rk).abs() <= 1e-8 * (1.0 + kf * ut.eval_u(&x)?.abs()),
                "R_k guard failed at alpha={alpha:?}: {log_rk} vs {via_p}"
            );
            let ls = pair.polytope().facet_values(&x)?;
            let interior = ls
                .iter()
                .enumerate()
                .all(|(r, &l)| !pair.u0.is_log_facet(r) || l >= cut);
            Ok(RkRow {
                alpha: alpha.clone(),
                log_rk,
                rinf: rinfty(pair, t, &x)?,
                interior,
            })
        })
        .collect()
}

pub fn rk_ratio(
    pair: &GeodesicPair,
    tables: &TablePair,
    t: f64,
    alpha: &[i64],
    scheme: &dyn NormingScheme,
) -> Result<f64> {
    let i = tables
        .q0
        .lattice
        .index_of(alpha)
        .ok_or_else(|| TogeError::OutsideLattice {
            k: tables.k,
            alpha: alpha.to_vec(),
        })?;
    let lt = if t == 0.0 || t == 1.0 {
        if t == 0.0 {
            tables.q0.log_q[i]
        } else {
            tables.q1.log_q[i]
        }
    } else {
        scheme.log_q_raw(&pair.at(t), tables.k, alpha)?.log_q
    };
    Ok((lt - (1.0 - t) * tables.q0.log_q[i] - t * tables.q1.log_q[i]).exp())
}

#[derive(Debug, Clone, PartialEq)]
pub struct GapReport {
    pub k: u32,
    pub t: f64,
    pub sup_all: f64,
    pub sup_interior: f64,
    pub sup_boundary: f64,
    pub rows: Vec<RkRow>,
}

pub fn summarize_gap(k: u32, t: f64, rows: Vec<RkRow>) -> GapReport {
    let sup = |pick: &dyn Fn(&RkRow) -> bool| {
        rows.iter()
            .filter(|r| pick(r))
            .map(RkRow::gap)
            .fold(0.0, f64::max)
    };
    GapReport {
        k,
        t,
        sup_all: sup(&|_| true),
        sup_interior: sup(&|r| r.interior),
        sup_boundary: sup(&|r| !r.interior),
        rows,
    }
}

pub fn regularity_gap(
    pair: &GeodesicPair,
    tables: &TablePair,
    t: f64,
    scheme: &dyn NormingScheme,
) -> Result<GapReport> {
    let qt = table_at(pair, tables, t, scheme)?;
    let rows = rk_rows(pair, tables, &qt, t)?;
    Ok(summarize_gap(tables.k, t, rows))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantize::ClosedFormScheme;

    fn fs() -> SymplecticPotential {
        SymplecticPotential::canonical(Arc::new(DelzantPolytope::interval()))
    }

    fn standard_pair() -> GeodesicPair {
        let u0 = fs();
        let u1 = u0.with_smooth(Polynomial::new(vec![(vec![1], 0.5), (vec![2], -0.5)]));
        GeodesicPair::new(u0, u1).unwrap()
    }

    #[test]
    fn symmetric_midpoint_jet() {
        let j = ma_jet(&standard_pair(), 0.5, &[0.0]).unwrap();
        assert!((j.x[0] - 0.5).abs() < 1e-14);
        assert!((j.dt + 0.125).abs() < 1e-14);
        assert!(j.dt2.abs() < 1e-14);
        assert!(j.ma_residual().abs() < 1e-14);
    }

    #[test]
    fn rinfty_at_midpoint() {
        // det G in {4, 3, 3.5} at x = 1/2
        let r = rinfty(&standard_pair(), 0.5, &[0.5]).unwrap();
        assert!((r - (12f64.sqrt() / 3.5).sqrt()).abs() < 1e-14);
        assert_eq!(rinfty(&standard_pair(), 0.0, &[0.3]).unwrap(), 1.0);
        assert!(rinfty(&standard_pair(), 0.5, &[0.0]).unwrap().is_finite());
    }

    #[test]
    fn trivial_pair_has_flat_time() {
        let pair = GeodesicPair::trivial(fs()).unwrap();
        let tables = TablePair::build(&pair, 8, &ClosedFormScheme).unwrap();
        let a = bergman_jet(&tables, 0.2, &[0.4]).unwrap();
        let b = bergman_jet(&tables, 0.9, &[0.4]).unwrap();
        assert_eq!(a.dt, 0.0);
        assert!((a.psi - b.psi).abs() < 1e-15);
        assert!((a.weights.iter().sum::<f64>() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn rejects_nonconvex_endpoint() {
        let u0 = fs();
        let u1 = u0.with_smooth(Polynomial::new(vec![(vec![1], 3.0), (vec![2], -3.0)]));
        assert!(GeodesicPair::new(u0, u1).is_err());
    }
}
