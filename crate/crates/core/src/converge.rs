//! Error fields between the Bergman and Monge-Ampere geodesics on a grid,
//! and decay-rate fits in `k`.

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::error::{Result, TogeError};
use crate::geodesic::{bergman_jet, ma_jet, BergmanJet, GeodesicPair, MAJet, TablePair};
use crate::registry::Registry;

/// Points with some facet closer than this are evaluated in the `r`-frame too.
pub const NEAR_BOUNDARY: f64 = 0.1;

#[derive(Debug, Clone, PartialEq)]
pub struct EvalGrid {
    pub t_values: Vec<f64>,
    pub points: Vec<Vec<f64>>,
    pub near_boundary: Vec<bool>,
    pub margin: f64,
}

impl EvalGrid {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

pub fn default_margin(k: u32) -> f64 {
    0.02f64.max(1.0 / (4.0 * k as f64))
}

pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    (0..n)
        .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
        .collect()
}

/// Tensor grid with `n_x` points per axis over the bounding box shrunk by
/// `margin`, filtered to `min l_r >= margin`.
pub fn build_grid(pair: &GeodesicPair, n_t: usize, n_x: usize, margin: f64) -> Result<EvalGrid> {
    if n_t < 3 || n_x < 3 {
        return Err(TogeError::schema(
            "grid",
            "t_grid and x_grid need at least 3 points",
        ));
    }
    if margin.is_nan() || margin <= 0.0 {
        return Err(TogeError::schema("margin", "margin must be positive"));
    }
    let p = pair.polytope();
    let m = p.dim();
    let (lo, hi) = p.bounding_box();
    let axes: Vec<Vec<f64>> = (0..m)
        .map(|j| linspace(lo[j] as f64 + margin, hi[j] as f64 - margin, n_x))
        .collect();
    let mut points = Vec::new();
    let mut near_boundary = Vec::new();
    let mut idx = vec![0usize; m];
    'scan: loop {
        let x: Vec<f64> = (0..m).map(|j| axes[j][idx[j]]).collect();
        let ls = p.facet_values(&x)?;
        if ls.iter().all(|&l| l >= margin - 1e-12) {
            near_boundary.push(
                ls.iter()
                    .enumerate()
                    .any(|(r, &l)| pair.u0.is_log_facet(r) && l < NEAR_BOUNDARY),
            );
            points.push(x);
        }
        let mut j = m;
        loop {
            if j == 0 {
                break 'scan;
            }
            j -= 1;
            if idx[j] + 1 < n_x {
                idx[j] += 1;
                idx[j + 1..].iter_mut().for_each(|v| *v = 0);
                break;
            }
        }
    }
    if points.is_empty() {
        return Err(TogeError::EmptyGrid);
    }
    Ok(EvalGrid {
        t_values: linspace(0.0, 1.0, n_t),
        points,
        near_boundary,
        margin,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Field {
    E0,
    E1Space,
    E1Time,
    E2Space,
    E2Mixed,
    E2Time,
}

impl Field {
    pub const ALL: [Field; 6] = [
        Field::E0,
        Field::E1Space,
        Field::E1Time,
        Field::E2Space,
        Field::E2Mixed,
        Field::E2Time,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Field::E0 => "e0",
            Field::E1Space => "e1_space",
            Field::E1Time => "e1_time",
            Field::E2Space => "e2_space",
            Field::E2Mixed => "e2_mixed",
            Field::E2Time => "e2_time",
        }
    }

    pub fn from_name(s: &str) -> Option<Field> {
        Field::ALL.into_iter().find(|f| f.name() == s)
    }
}

/// `r`-frame fields on near-boundary points.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum RField {
    E1Space,
    E2Space,
    E2Mixed,
}

impl RField {
    pub const ALL: [RField; 3] = [RField::E1Space, RField::E2Space, RField::E2Mixed];

    pub fn name(self) -> &'static str {
        match self {
            RField::E1Space => "e1_space_r",
            RField::E2Space => "e2_space_r",
            RField::E2Mixed => "e2_mixed_r",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FieldSup {
    pub value: f64,
    pub argmax_t: f64,
    pub argmax_x: Vec<f64>,
}

impl FieldSup {
    fn empty() -> Self {
        FieldSup {
            value: 0.0,
            argmax_t: f64::NAN,
            argmax_x: Vec::new(),
        }
    }

    fn offer(&mut self, v: f64, t: f64, x: &[f64]) {
        if v > self.value || (self.argmax_x.is_empty() && v >= self.value) {
            self.value = v;
            self.argmax_t = t;
            self.argmax_x = x.to_vec();
        }
    }
}

/// `d/dr_j` and `d^2/dr_i dr_j` from `rho`-derivatives, `r_j = e^{rho_j / 2}`.
pub fn to_rframe(rho: &[f64], grad: &[f64], hess: &DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let r: Vec<f64> = rho.iter().map(|v| (0.5 * v).exp()).collect();
    let m = rho.len();
    let g = (0..m).map(|j| 2.0 / r[j] * grad[j]).collect();
    let h = DMatrix::from_fn(m, m, |i, j| {
        let diag = if i == j { 0.5 * grad[j] } else { 0.0 };
        4.0 / (r[i] * r[j]) * (hess[(i, j)] - diag)
    });
    (g, h)
}

/// Inverse of [`to_rframe`].
pub fn from_rframe(rho: &[f64], grad_r: &[f64], hess_r: &DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let r: Vec<f64> = rho.iter().map(|v| (0.5 * v).exp()).collect();
    let m = rho.len();
    let g: Vec<f64> = (0..m).map(|j| 0.5 * r[j] * grad_r[j]).collect();
    let h = DMatrix::from_fn(m, m, |i, j| {
        let diag = if i == j { 0.5 * g[j] } else { 0.0 };
        0.25 * r[i] * r[j] * hess_r[(i, j)] + diag
    });
    (g, h)
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|a| a * a).sum::<f64>().sqrt()
}

fn diff(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

/// Both jets at one `(t, x)` with `rho = grad u_t(x)`.
#[derive(Debug, Clone)]
pub struct JetPair {
    pub t: f64,
    pub x: Vec<f64>,
    pub near_boundary: bool,
    pub ma: MAJet,
    pub bergman: BergmanJet,
}

pub fn jet_pairs(pair: &GeodesicPair, tables: &TablePair, grid: &EvalGrid) -> Result<Vec<JetPair>> {
    let cells: Vec<(f64, usize)> = grid
        .t_values
        .iter()
        .flat_map(|&t| (0..grid.len()).map(move |i| (t, i)))
        .collect();
    cells
        .par_iter()
        .map(|&(t, i)| {
            let x = &grid.points[i];
            let locate = |e: TogeError| e.at(format!("k={} t={t} x={x:?}", tables.k));
            let rho = pair.at(t).inverse_moment(x).map_err(locate)?;
            let ma = ma_jet(pair, t, &rho).map_err(locate)?;
            let bergman = bergman_jet(tables, t, &rho).map_err(locate)?;
            Ok(JetPair {
                t,
                x: x.clone(),
                near_boundary: grid.near_boundary[i],
                ma,
                bergman,
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct ErrorRow {
    pub k: u32,
    /// Grid mean of `psi_k - phi` at `t = 0`.
    pub c_k: f64,
    pub fields: Vec<(Field, FieldSup)>,
    pub rframe: Vec<(RField, FieldSup)>,
}

impl ErrorRow {
    pub fn get(&self, f: Field) -> &FieldSup {
        &self
            .fields
            .iter()
            .find(|(g, _)| *g == f)
            .expect("all fields present")
            .1
    }

    pub fn get_r(&self, f: RField) -> &FieldSup {
        &self
            .rframe
            .iter()
            .find(|(g, _)| *g == f)
            .expect("all fields present")
            .1
    }
}

pub fn error_fields(pair: &GeodesicPair, tables: &TablePair, grid: &EvalGrid) -> Result<ErrorRow> {
    let jets = jet_pairs(pair, tables, grid)?;
    Ok(reduce_errors(tables.k, &jets))
}

pub fn reduce_errors(k: u32, jets: &[JetPair]) -> ErrorRow {
    let at0: Vec<&JetPair> = jets.iter().filter(|j| j.t == 0.0).collect();
    let c_k = if at0.is_empty() {
        0.0
    } else {
        at0.iter().map(|j| j.bergman.psi - j.ma.phi).sum::<f64>() / at0.len() as f64
    };
    let mut sups: Vec<(Field, FieldSup)> =
        Field::ALL.iter().map(|&f| (f, FieldSup::empty())).collect();
    let mut rsups: Vec<(RField, FieldSup)> = RField::ALL
        .iter()
        .map(|&f| (f, FieldSup::empty()))
        .collect();
    for j in jets {
        let (a, b) = (&j.bergman, &j.ma);
        let vals = [
            (a.psi - b.phi - c_k).abs(),
            norm(&diff(&a.grad, &b.grad)),
            (a.dt - b.dt).abs(),
            (&a.hess - &b.hess).norm(),
            norm(&diff(&a.mixed, &b.mixed)),
            (a.dt2 - b.dt2).abs(),
        ];
        for ((_, s), v) in sups.iter_mut().zip(vals) {
            s.offer(v, j.t, &j.x);
        }
        if j.near_boundary {
            let (ga, ha) = to_rframe(&a.rho, &a.grad, &a.hess);
            let (gb, hb) = to_rframe(&b.rho, &b.grad, &b.hess);
            let (ma, _) = to_rframe(&a.rho, &a.mixed, &DMatrix::zeros(a.rho.len(), a.rho.len()));
            let (mb, _) = to_rframe(&b.rho, &b.mixed, &DMatrix::zeros(b.rho.len(), b.rho.len()));
            let rvals = [
                norm(&diff(&ga, &gb)),
                (ha - hb).norm(),
                norm(&diff(&ma, &mb)),
            ];
            for ((_, s), v) in rsups.iter_mut().zip(rvals) {
                s.offer(v, j.t, &j.x);
            }
        }
    }
    ErrorRow {
        k,
        c_k,
        fields: sups,
        rframe: rsups,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateFit {
    pub slope: f64,
    pub intercept: f64,
    /// Largest absolute residual of the log-log fit.
    pub residual: f64,
}

pub trait RateModel: Send + Sync {
    fn name(&self) -> &'static str;
    /// Response variable for `log e` at level `k`.
    fn response(&self, k: f64, log_e: f64) -> f64;
}

/// `e = C k^s`.
pub struct PowerLaw;

impl RateModel for PowerLaw {
    fn name(&self) -> &'static str {
        "power"
    }
    fn response(&self, _k: f64, log_e: f64) -> f64 {
        log_e
    }
}

/// `e = C k^s log k`.
pub struct PowerLogLaw;

impl RateModel for PowerLogLaw {
    fn name(&self) -> &'static str {
        "power-log"
    }
    fn response(&self, k: f64, log_e: f64) -> f64 {
        log_e - k.ln().ln()
    }
}

pub fn rate_registry() -> Registry<(), dyn RateModel> {
    let mut r: Registry<(), dyn RateModel> = Registry::new("rate model");
    r.register("power", |_| Box::new(PowerLaw));
    r.register("power-log", |_| Box::new(PowerLogLaw));
    r
}

/// Least squares of the model response against `log k`. All-zero errors give
/// slope `-inf`.
pub fn fit_rate(ks: &[u32], es: &[f64], model: &dyn RateModel) -> Result<RateFit> {
    if ks.len() != es.len() {
        return Err(TogeError::DegenerateFit(format!(
            "{} k values but {} errors",
            ks.len(),
            es.len()
        )));
    }
    if ks.len() < 4 {
        return Err(TogeError::DegenerateFit(format!(
            "need at least 4 points, got {}",
            ks.len()
        )));
    }
    if es.iter().all(|&e| e == 0.0) {
        return Ok(RateFit {
            slope: f64::NEG_INFINITY,
            intercept: f64::NEG_INFINITY,
            residual: 0.0,
        });
    }
    if es.iter().any(|&e| !(e > 0.0 && e.is_finite())) {
        return Err(TogeError::DegenerateFit(
            "errors must all be positive and finite".into(),
        ));
    }
    if ks.iter().any(|&k| k < 2) {
        return Err(TogeError::DegenerateFit("k must be at least 2".into()));
    }
    let xs: Vec<f64> = ks.iter().map(|&k| (k as f64).ln()).collect();
    let ys: Vec<f64> = ks
        .iter()
        .zip(es)
        .map(|(&k, &e)| model.response(k as f64, e.ln()))
        .collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(TogeError::DegenerateFit("all k values equal".into()));
    }
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let residual = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (y - intercept - slope * x).abs())
        .fold(0.0, f64::max);
    Ok(RateFit {
        slope,
        intercept,
        residual,
    })
}

/// Error rows for every `k` with fitted rates per field and model.
#[derive(Debug, Clone)]
pub struct ErrorReport {
    pub rows: Vec<ErrorRow>,
    pub rates: Vec<(Field, &'static str, Option<RateFit>)>,
}

impl ErrorReport {
    pub fn from_rows(rows: Vec<ErrorRow>) -> Self {
        let ks: Vec<u32> = rows.iter().map(|r| r.k).collect();
        let registry = rate_registry();
        let mut rates = Vec::new();
        for f in Field::ALL {
            let es: Vec<f64> = rows.iter().map(|r| r.get(f).value).collect();
            for name in registry.names() {
                let model = registry.build(name, &()).expect("registered");
                rates.push((f, name, fit_rate(&ks, &es, model.as_ref()).ok()));
            }
        }
        ErrorReport { rows, rates }
    }

    pub fn series(&self, f: Field) -> Vec<f64> {
        self.rows.iter().map(|r| r.get(f).value).collect()
    }

    pub fn rate(&self, f: Field, model: &str) -> Option<RateFit> {
        self.rates
            .iter()
            .find(|(g, n, _)| *g == f && *n == model)
            .and_then(|(_, _, r)| *r)
    }
}
