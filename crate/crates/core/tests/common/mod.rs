#![allow(dead_code)]

use std::path::PathBuf;
use std::sync::Arc;

use toge::cli::RunConfig;
use toge::geodesic::GeodesicPair;
use toge::quadrature::QuadratureConfig;
use toge::quantize::GaussLegendreScheme;
use toge::{DelzantPolytope, Polynomial, SymplecticPotential};

pub fn configs_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

pub fn load_config(name: &str) -> RunConfig {
    let text = std::fs::read_to_string(configs_dir().join(name)).expect("config readable");
    RunConfig::from_json(&text).expect("shipped config parses")
}

pub fn pair_from_config(name: &str) -> (RunConfig, GeodesicPair) {
    let cfg = load_config(name);
    let problem = cfg
        .validate(Some("converge"))
        .expect("shipped config validates");
    let pair = problem.pair.expect("config has u1");
    (cfg, pair)
}

pub fn gl() -> GaussLegendreScheme {
    GaussLegendreScheme::new(QuadratureConfig::default())
}

pub fn interval() -> Arc<DelzantPolytope> {
    Arc::new(DelzantPolytope::interval())
}

pub fn simplex() -> Arc<DelzantPolytope> {
    Arc::new(DelzantPolytope::simplex(2).unwrap())
}

pub fn fs_interval() -> SymplecticPotential {
    SymplecticPotential::canonical(interval())
}

pub fn fs_simplex() -> SymplecticPotential {
    SymplecticPotential::canonical(simplex())
}

/// `c x (1 - x)` as a polynomial.
pub fn bump(c: f64) -> Polynomial {
    Polynomial::new(vec![(vec![1], c), (vec![2], -c)])
}

/// `u0 = FS`, `u1 = u0 + x(1 - x) / 2`.
pub fn standard_pair() -> GeodesicPair {
    let u0 = fs_interval();
    let u1 = u0.with_smooth(bump(0.5));
    GeodesicPair::new(u0, u1).unwrap()
}

pub fn perturbed_interval() -> SymplecticPotential {
    fs_interval().with_smooth(bump(0.5))
}

/// `u1 = u0 + <c, x> + b`.
pub fn affine_pair(u0: SymplecticPotential, c: &[f64], b: f64) -> GeodesicPair {
    let u1 = u0.add_affine(c, b);
    GeodesicPair::new(u0, u1).unwrap()
}

pub fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
}

pub fn binary() -> PathBuf {
    PathBuf::from(env!("CARGO_BIN_EXE_toge"))
}
