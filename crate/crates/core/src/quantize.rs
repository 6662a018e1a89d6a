//! Norming constants of monomials, the dual kernel `P`, Szego diagonal sums
//! and the boundary-zone asymptotic model.
//!
//! `Q_raw(alpha) = int_P exp(k g(x)) dx` with `g(x) = u(x) + <alpha/k - x, grad u(x)>`.
//! No `(d_k + 1) / vol` factor is applied to stored values; it cancels in every
//! geodesic quantity and is available as `log_normalization` for comparisons.

use rayon::prelude::*;

use crate::error::{Result, TogeError};
use crate::polytope::{DelzantPolytope, LatticeSet};
use crate::potential::SymplecticPotential;
use crate::quadrature::{integrate_log, QuadDomain, QuadratureConfig};
use crate::registry::Registry;
use crate::special::{ln_bargmann_fock, ln_factorial, ln_lower_incomplete_gamma_int, log_sum_exp};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QEntry {
    pub log_q: f64,
    pub quad_err: f64,
}

pub trait NormingScheme: Send + Sync {
    fn name(&self) -> &'static str;
    fn log_q_raw(&self, u: &SymplecticPotential, k: u32, alpha: &[i64]) -> Result<QEntry>;
}

pub fn norming_registry() -> Registry<QuadratureConfig, dyn NormingScheme> {
    let mut r: Registry<QuadratureConfig, dyn NormingScheme> = Registry::new("norming scheme");
    r.register("gauss-legendre", |c| {
        Box::new(GaussLegendreScheme::new(c.clone()))
    });
    r.register("closed-form", |_| Box::new(ClosedFormScheme));
    r
}

pub fn scheme_from_config(config: &QuadratureConfig) -> Result<Box<dyn NormingScheme>> {
    norming_registry().build(&config.scheme, config)
}

/// `k l_r(alpha / k)` for every facet; errors if alpha is outside `kP`.
fn scaled_facet_values(p: &DelzantPolytope, k: u32, alpha: &[i64]) -> Result<Vec<i64>> {
    p.check_dim(&alpha.iter().map(|&a| a as f64).collect::<Vec<_>>())?;
    let n: Vec<i64> = p
        .facets()
        .iter()
        .map(|f| f.scaled_lattice_value(alpha, k as i64))
        .collect();
    if n.iter().any(|&v| v < 0) {
        return Err(TogeError::OutsideLattice {
            k,
            alpha: alpha.to_vec(),
        });
    }
    Ok(n)
}

fn scaled_point(alpha: &[i64], k: u32) -> Vec<f64> {
    alpha.iter().map(|&a| a as f64 / k as f64).collect()
}

/// Tensor Gauss-Legendre quadrature in `x`-space.
pub struct GaussLegendreScheme {
    config: QuadratureConfig,
}

impl GaussLegendreScheme {
    pub fn new(config: QuadratureConfig) -> Self {
        GaussLegendreScheme { config }
    }
}

impl NormingScheme for GaussLegendreScheme {
    fn name(&self) -> &'static str {
        "gauss-legendre"
    }

    fn log_q_raw(&self, u: &SymplecticPotential, k: u32, alpha: &[i64]) -> Result<QEntry> {
        let p = u.polytope();
        let n = scaled_facet_values(p, k, alpha)?;
        let domain = QuadDomain::new(p)?;
        let a = scaled_point(alpha, k);
        let kf = k as f64;
        // k g = sum_log n_r log l_r + sum_log (n_r - k l_r) + k (f + <a - x, grad f>)
        let facets: Vec<(Vec<f64>, f64, f64)> = p
            .facets()
            .iter()
            .zip(&n)
            .enumerate()
            .filter(|(r, _)| u.is_log_facet(*r))
            .map(|(_, (f, &nr))| {
                (
                    f.normal.iter().map(|&v| v as f64).collect(),
                    f.offset as f64,
                    nr as f64,
                )
            })
            .collect();
        let smooth = u.smooth();
        let m = a.len();
        let log_f = |x: &[f64]| -> f64 {
            let mut s = 0.0;
            for (v, lam, nr) in &facets {
                let l = v.iter().zip(x).map(|(vi, xi)| vi * xi).sum::<f64>() - lam;
                if *nr > 0.0 {
                    if l <= 0.0 {
                        return f64::NEG_INFINITY;
                    }
                    s += nr * l.ln();
                }
                s += nr - kf * l;
            }
            let mut g = [0.0f64; 3];
            smooth.add_grad(x, &mut g[..m]);
            let mut lin = smooth.eval(x);
            for j in 0..m {
                lin += (a[j] - x[j]) * g[j];
            }
            s + kf * lin
        };
        let shift = kf * u.eval_u(&a)?;
        match integrate_log(&domain, &self.config, &a, shift, log_f) {
            Ok(r) => Ok(QEntry {
                log_q: r.log_value,
                quad_err: r.rel_change,
            }),
            Err(r) => Err(TogeError::QuadratureNotConverged {
                k,
                alpha: alpha.to_vec(),
                rel_change: r.rel_change,
            }),
        }
    }
}

/// Exact values for affine smooth parts on simplices and boxes.
pub struct ClosedFormScheme;

enum ClosedShape {
    Simplex,
    Cube(i64),
}

fn closed_shape(p: &DelzantPolytope) -> Option<ClosedShape> {
    let m = p.dim();
    if DelzantPolytope::simplex(m).is_ok_and(|s| s.facets() == p.facets()) {
        return Some(ClosedShape::Simplex);
    }
    let size = p.facets().get(m).map(|f| -f.offset)?;
    if DelzantPolytope::cube(m, size).is_ok_and(|c| c.facets() == p.facets()) {
        return Some(ClosedShape::Cube(size));
    }
    None
}

impl ClosedFormScheme {
    pub fn supports(u: &SymplecticPotential) -> bool {
        u.smooth().is_affine()
            && match closed_shape(u.polytope()) {
                Some(ClosedShape::Simplex) => u.log_facets().iter().all(|&b| b),
                Some(ClosedShape::Cube(_)) => true,
                None => false,
            }
    }
}

impl NormingScheme for ClosedFormScheme {
    fn name(&self) -> &'static str {
        "closed-form"
    }

    fn log_q_raw(&self, u: &SymplecticPotential, k: u32, alpha: &[i64]) -> Result<QEntry> {
        if !Self::supports(u) {
            return Err(TogeError::Unsupported(
                "closed-form norming needs an affine smooth part on a simplex or box".into(),
            ));
        }
        let p = u.polytope();
        let n = scaled_facet_values(p, k, alpha)?;
        let a = scaled_point(alpha, k);
        let m = p.dim();
        let kf = k as f64;
        // for affine f the smooth part contributes the constant k f(a)
        let mut log_q = kf * u.smooth().eval(&a);
        match closed_shape(p) {
            Some(ClosedShape::Simplex) => {
                log_q += n.iter().map(|&v| ln_factorial(v as u64)).sum::<f64>()
                    - ln_factorial(k as u64 + m as u64);
            }
            Some(ClosedShape::Cube(size)) => {
                let s = size as f64;
                for j in 0..m {
                    let (lo, hi) = (n[j] as u64, n[m + j] as u64);
                    log_q += match (u.is_log_facet(j), u.is_log_facet(m + j)) {
                        (true, true) => {
                            (lo + hi + 1) as f64 * s.ln() + ln_factorial(lo) + ln_factorial(hi)
                                - ln_factorial(lo + hi + 1)
                        }
                        (true, false) => {
                            lo as f64 + ln_lower_incomplete_gamma_int(lo, kf * s)
                                - (lo + 1) as f64 * kf.ln()
                        }
                        (false, true) => {
                            hi as f64 + ln_lower_incomplete_gamma_int(hi, kf * s)
                                - (hi + 1) as f64 * kf.ln()
                        }
                        (false, false) => s.ln(),
                    };
                }
            }
            None => unreachable!("checked by supports"),
        }
        Ok(QEntry {
            log_q,
            quad_err: 0.0,
        })
    }
}

pub fn norming_constant(
    u: &SymplecticPotential,
    k: u32,
    alpha: &[i64],
    scheme: &dyn NormingScheme,
) -> Result<QEntry> {
    scheme.log_q_raw(u, k, alpha)
}

/// `log Q_raw` for every lattice point of `kP`, in lattice order.
#[derive(Debug, Clone)]
pub struct NormingTable {
    pub k: u32,
    pub scheme: String,
    pub lattice: LatticeSet,
    pub log_q: Vec<f64>,
    pub quad_err: Vec<f64>,
    /// `ln((d_k + 1) / vol P)`.
    pub log_normalization: f64,
}

impl NormingTable {
    pub fn build(u: &SymplecticPotential, k: u32, scheme: &dyn NormingScheme) -> Result<Self> {
        let lattice = u.polytope().lattice_points(k)?;
        let entries: Vec<QEntry> = lattice
            .points
            .par_iter()
            .map(|alpha| scheme.log_q_raw(u, k, alpha))
            .collect::<Result<_>>()?;
        let log_normalization = (lattice.count() as f64 / u.polytope().volume()).ln();
        Ok(NormingTable {
            k,
            scheme: scheme.name().to_string(),
            log_q: entries.iter().map(|e| e.log_q).collect(),
            quad_err: entries.iter().map(|e| e.quad_err).collect(),
            lattice,
            log_normalization,
        })
    }

    pub fn len(&self) -> usize {
        self.log_q.len()
    }

    pub fn is_empty(&self) -> bool {
        self.log_q.is_empty()
    }

    pub fn points(&self) -> &[Vec<i64>] {
        &self.lattice.points
    }

    pub fn log_q_of(&self, alpha: &[i64]) -> Result<f64> {
        self.lattice
            .index_of(alpha)
            .map(|i| self.log_q[i])
            .ok_or_else(|| TogeError::OutsideLattice {
                k: self.k,
                alpha: alpha.to_vec(),
            })
    }

    pub fn normalized_log_q(&self, i: usize) -> f64 {
        self.log_q[i] + self.log_normalization
    }

    pub fn max_quad_err(&self) -> f64 {
        self.quad_err.iter().copied().fold(0.0, f64::max)
    }
}

/// `ln P(alpha, rho)` and the special value `ln P(alpha)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PValue {
    pub alpha: Vec<i64>,
    pub log_at_z: Option<f64>,
    pub log_special: f64,
}

fn is_interior(p: &DelzantPolytope, alpha: &[i64], k: u32) -> bool {
    p.facets()
        .iter()
        .all(|f| f.scaled_lattice_value(alpha, k as i64) > 0)
}

/// Without `rho`, interior points are also evaluated at `rho = grad u(alpha / k)`
/// so the special value is available from two independent paths.
pub fn pkernel(
    u: &SymplecticPotential,
    table: &NormingTable,
    alpha: &[i64],
    rho: Option<&[f64]>,
) -> Result<PValue> {
    let log_q = table.log_q_of(alpha)?;
    let k = table.k;
    let a = scaled_point(alpha, k);
    let log_special = k as f64 * u.eval_u(&a)? - log_q;
    let eval_at = |rho: &[f64]| -> Result<f64> {
        let phi = u.legendre(rho)?.value;
        let pair: f64 = alpha.iter().zip(rho).map(|(&a, r)| a as f64 * r).sum();
        Ok(pair - k as f64 * phi - log_q)
    };
    let log_at_z = match rho {
        Some(r) => Some(eval_at(r)?),
        None if is_interior(u.polytope(), alpha, k) => Some(eval_at(&u.inverse_moment(&a)?)?),
        None => None,
    };
    Ok(PValue {
        alpha: alpha.to_vec(),
        log_at_z,
        log_special,
    })
}

/// `Pi(rho) = sum_alpha P(alpha, rho)` with the normalized weights.
#[derive(Debug, Clone)]
pub struct SzegoValue {
    pub log_pi: f64,
    pub phi: f64,
    pub moment: Vec<f64>,
    /// `ln P(alpha, rho)` in lattice order.
    pub log_terms: Vec<f64>,
    pub weights: Vec<f64>,
}

impl SzegoValue {
    pub fn pi(&self) -> f64 {
        self.log_pi.exp()
    }

    /// `E_p[alpha / k]`.
    pub fn mean_point(&self, table: &NormingTable) -> Vec<f64> {
        let m = self.moment.len();
        let mut e = vec![0.0; m];
        for (alpha, w) in table.points().iter().zip(&self.weights) {
            for j in 0..m {
                e[j] += w * alpha[j] as f64;
            }
        }
        e.iter().map(|v| v / table.k as f64).collect()
    }
}

pub fn szego_diagonal(
    u: &SymplecticPotential,
    table: &NormingTable,
    rho: &[f64],
) -> Result<SzegoValue> {
    let leg = u.legendre(rho)?;
    let k = table.k as f64;
    let log_terms: Vec<f64> = table
        .points()
        .iter()
        .zip(&table.log_q)
        .map(|(alpha, lq)| {
            alpha
                .iter()
                .zip(rho)
                .map(|(&a, r)| a as f64 * r)
                .sum::<f64>()
                - k * leg.value
                - lq
        })
        .collect();
    let log_pi = log_sum_exp(&log_terms);
    let weights = log_terms.iter().map(|t| (t - log_pi).exp()).collect();
    Ok(SzegoValue {
        log_pi,
        phi: leg.value,
        moment: leg.maximizer,
        log_terms,
        weights,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Localization {
    pub radius: f64,
    /// Share of `Pi` carried by `|alpha/k - mu(rho)| <= radius`.
    pub inside_mass: f64,
    /// Largest single `P(alpha, rho)` outside the window (0 if none).
    pub outside_max: f64,
    pub outside_count: usize,
}

pub fn localization_profile(
    u: &SymplecticPotential,
    table: &NormingTable,
    rho: &[f64],
    delta: f64,
) -> Result<Localization> {
    let sz = szego_diagonal(u, table, rho)?;
    let k = table.k as f64;
    let radius = k.powf(-0.5 + delta);
    let mut inside_mass = 0.0;
    let mut outside_max = 0.0f64;
    let mut outside_count = 0;
    for (i, alpha) in table.points().iter().enumerate() {
        let dist = alpha
            .iter()
            .zip(&sz.moment)
            .map(|(&a, mu)| (a as f64 / k - mu).powi(2))
            .sum::<f64>()
            .sqrt();
        if dist <= radius {
            inside_mass += sz.weights[i];
        } else {
            outside_count += 1;
            outside_max = outside_max.max(sz.log_terms[i].exp());
        }
    }
    Ok(Localization {
        radius,
        inside_mass,
        outside_max,
        outside_count,
    })
}

/// Model factors for `P(alpha)` at `x = alpha / k`, all in log form.
/// `sqrt det G` and the product of Bargmann-Fock laws are separately singular on
/// the boundary; `log_model1` combines them through `det G * prod l`.
#[derive(Debug, Clone, PartialEq)]
pub struct AsymptoticModel {
    pub alpha: Vec<i64>,
    pub log_p: f64,
    pub log_detg_factor: f64,
    pub log_ptwiddle: f64,
    pub log_bf_corner: f64,
    pub log_gcal: f64,
    pub near_count: usize,
    pub log_model1: f64,
    pub log_model2: f64,
    /// All log facets at distance `>= delta_k`.
    pub interior: bool,
    /// On a facet while another facet sits in `[delta_k, 2 delta_k)`.
    pub mixed: bool,
}

pub fn default_delta_k(k: u32) -> f64 {
    (k as f64).powf(-2.0 / 3.0)
}

pub fn asymptotic_model(
    u: &SymplecticPotential,
    table: &NormingTable,
    alpha: &[i64],
    delta_k: f64,
) -> Result<AsymptoticModel> {
    let k = table.k;
    let kf = k as f64;
    let m = u.dim() as f64;
    let x = scaled_point(alpha, k);
    let log_p = pkernel(u, table, alpha, None)?.log_special;
    let ls = u.polytope().facet_values(&x)?;
    let log_vf = u.volume_factor(&x)?.ln();
    let mut log_ptwiddle = 0.0;
    let mut log_prod_l = 0.0;
    let mut log_safe = 0.0;
    let mut log_bf_corner = 0.0;
    let mut log_far_l = 0.0;
    let mut near_count = 0;
    let mut on_facet = false;
    let mut in_band = false;
    let (ln_k, half_ln_2pi) = (kf.ln(), 0.5 * (2.0 * std::f64::consts::PI).ln());
    for (r, &l) in ls.iter().enumerate() {
        if !u.is_log_facet(r) {
            continue;
        }
        let l = l.max(0.0);
        let bf = ln_bargmann_fock(kf, kf * l);
        log_ptwiddle += -ln_k + half_ln_2pi + 0.5 * l.ln() + bf;
        log_prod_l += l.ln();
        log_safe += -ln_k + half_ln_2pi + bf;
        if l < delta_k {
            near_count += 1;
            log_bf_corner += bf;
        } else {
            log_far_l += l.ln();
        }
        on_facet |= l == 0.0;
        in_band |= l >= delta_k && l < 2.0 * delta_k;
    }
    let log_detg_factor = 0.5 * (log_vf - log_prod_l);
    let log_gcal = log_vf - log_far_l;
    Ok(AsymptoticModel {
        alpha: alpha.to_vec(),
        log_p,
        log_detg_factor,
        log_ptwiddle,
        log_bf_corner,
        log_gcal,
        near_count,
        log_model1: 0.5 * m * ln_k + 0.5 * log_vf + log_safe,
        log_model2: 0.5 * (m - near_count as f64) * ln_k + 0.5 * log_gcal + log_bf_corner,
        interior: near_count == 0,
        mixed: on_facet && in_band,
    })
}

/// Models for every lattice point with `C` fitted as the median ratio over
/// interior points.
#[derive(Debug, Clone)]
pub struct ModelFit {
    pub k: u32,
    pub delta_k: f64,
    pub log_c1: f64,
    pub log_c2: f64,
    pub points: Vec<AsymptoticModel>,
    /// `P / (C model)` per point.
    pub ratio1: Vec<f64>,
    pub ratio2: Vec<f64>,
}

impl ModelFit {
    /// `max |ratio - 1|` over interior points.
    pub fn spread1(&self) -> f64 {
        self.spread(&self.ratio1)
    }

    pub fn spread2(&self) -> f64 {
        self.spread(&self.ratio2)
    }

    fn spread(&self, ratio: &[f64]) -> f64 {
        self.points
            .iter()
            .zip(ratio)
            .filter(|(p, _)| p.interior)
            .map(|(_, r)| (r - 1.0).abs())
            .fold(0.0, f64::max)
    }
}

fn median(mut v: Vec<f64>) -> f64 {
    if v.is_empty() {
        return f64::NAN;
    }
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

pub fn fit_asymptotic_model(
    u: &SymplecticPotential,
    table: &NormingTable,
    delta_k: Option<f64>,
) -> Result<ModelFit> {
    let delta_k = delta_k.unwrap_or_else(|| default_delta_k(table.k));
    let points: Vec<AsymptoticModel> = table
        .points()
        .par_iter()
        .map(|a| asymptotic_model(u, table, a, delta_k))
        .collect::<Result<_>>()?;
    let interior = || points.iter().filter(|p| p.interior);
    let log_c1 = median(interior().map(|p| p.log_p - p.log_model1).collect());
    let log_c2 = median(interior().map(|p| p.log_p - p.log_model2).collect());
    let ratio1 = points
        .iter()
        .map(|p| (p.log_p - p.log_model1 - log_c1).exp())
        .collect();
    let ratio2 = points
        .iter()
        .map(|p| (p.log_p - p.log_model2 - log_c2).exp())
        .collect();
    Ok(ModelFit {
        k: table.k,
        delta_k,
        log_c1,
        log_c2,
        points,
        ratio1,
        ratio2,
    })
}
