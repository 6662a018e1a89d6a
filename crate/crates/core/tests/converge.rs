mod common;

use std::sync::Arc;

use nalgebra::DMatrix;

use common::*;
use toge::converge::{
    build_grid, default_margin, error_fields, fit_rate, from_rframe, jet_pairs, rate_registry,
    to_rframe, ErrorReport, ErrorRow, Field, PowerLaw, PowerLogLaw, RField,
};
use toge::geodesic::{GeodesicPair, TablePair};
use toge::{DelzantPolytope, Facet, SymplecticPotential, TogeError};

fn rows(pair: &GeodesicPair, ks: &[u32], n_t: usize, n_x: usize) -> Vec<ErrorRow> {
    ks.iter()
        .map(|&k| {
            let tables = TablePair::build(pair, k, &gl()).unwrap();
            let grid = build_grid(pair, n_t, n_x, default_margin(k)).unwrap();
            error_fields(pair, &tables, &grid).unwrap()
        })
        .collect()
}

/// Ordinary least squares slope, written out independently of `fit_rate`.
fn ols_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let (sx, sy) = (xs.iter().sum::<f64>(), ys.iter().sum::<f64>());
    let sxx: f64 = xs.iter().map(|x| x * x).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| x * y).sum();
    (n * sxy - sx * sy) / (n * sxx - sx * sx)
}

#[test]
fn grid_examples() {
    let pair = standard_pair();
    let g = build_grid(&pair, 3, 9, 0.05).unwrap();
    assert_eq!(g.len(), 9);
    assert!((g.points[0][0] - 0.05).abs() < 1e-15 && (g.points[8][0] - 0.95).abs() < 1e-15);
    assert_eq!(g.t_values, vec![0.0, 0.5, 1.0]);

    let s = GeodesicPair::trivial(fs_simplex()).unwrap();
    let g = build_grid(&s, 3, 11, 0.05).unwrap();
    for x in &g.points {
        let ls = s.polytope().facet_values(x).unwrap();
        assert!(ls.iter().all(|&l| l >= 0.05 - 1e-12));
    }
    for (x, near) in g.points.iter().zip(&g.near_boundary) {
        let ls = s.polytope().facet_values(x).unwrap();
        assert_eq!(*near, ls.iter().any(|&l| l < 0.1));
    }

    let g = build_grid(&pair, 3, 5, 0.4).unwrap();
    assert!(g
        .points
        .iter()
        .all(|x| x[0] >= 0.4 - 1e-15 && x[0] <= 0.6 + 1e-15));

    assert!(matches!(
        build_grid(&s, 3, 9, 0.45),
        Err(TogeError::EmptyGrid)
    ));
    assert!(build_grid(&pair, 2, 9, 0.05).unwrap_err().is_schema());
    assert_eq!(
        build_grid(&pair, 3, 9, 0.05).unwrap(),
        build_grid(&pair, 3, 9, 0.05).unwrap()
    );
}

#[test]
fn fit_rate_examples() {
    let ks = [16u32, 32, 64, 128, 256];
    let lk: Vec<f64> = ks.iter().map(|&k| (k as f64).ln()).collect();

    let inv: Vec<f64> = ks.iter().map(|&k| 3.0 / k as f64).collect();
    let f = fit_rate(&ks, &inv, &PowerLaw).unwrap();
    assert!((f.slope + 1.0).abs() < 1e-12 && f.residual < 1e-12);

    let cube_root: Vec<f64> = ks
        .iter()
        .map(|&k| 0.7 * (k as f64).powf(-1.0 / 3.0))
        .collect();
    let f = fit_rate(&ks, &cube_root, &PowerLaw).unwrap();
    assert!((f.slope + 1.0 / 3.0).abs() < 1e-12);

    let loglaw: Vec<f64> = ks
        .iter()
        .map(|&k| 2.0 * (k as f64).ln() / k as f64)
        .collect();
    let f = fit_rate(&ks, &loglaw, &PowerLogLaw).unwrap();
    assert!((f.slope + 1.0).abs() < 1e-12 && f.residual < 1e-12);
    // pure power slope of c log k / k over 16..256, from the closed-form regression
    let ys: Vec<f64> = loglaw.iter().map(|e| e.ln()).collect();
    let oracle = ols_slope(&lk, &ys);
    let f = fit_rate(&ks, &loglaw, &PowerLaw).unwrap();
    assert!((f.slope - oracle).abs() < 1e-12);
    assert!(f.slope > -0.8 && f.slope < -0.7, "{}", f.slope);
}

#[test]
fn fit_rate_degenerate_inputs() {
    let ks = [16u32, 32, 64, 128];
    let zero = fit_rate(&ks, &[0.0; 4], &PowerLaw).unwrap();
    assert_eq!(zero.slope, f64::NEG_INFINITY);
    assert!(matches!(
        fit_rate(&ks[..3], &[1.0, 0.5, 0.25], &PowerLaw),
        Err(TogeError::DegenerateFit(_))
    ));
    assert!(fit_rate(&ks, &[1.0, 0.0, 0.5, 0.2], &PowerLaw).is_err());
    assert!(fit_rate(&ks, &[1.0, 0.5], &PowerLaw).is_err());
    assert_eq!(rate_registry().names(), vec!["power", "power-log"]);
}

#[test]
fn rframe_conversion_matches_closed_form() {
    // phi = log(1 + e^rho) = log(1 + r^2)
    for rho in [-3.0f64, -0.5, 0.0, 1.7] {
        let e = rho.exp();
        let grad = [e / (1.0 + e)];
        let hess = DMatrix::from_element(1, 1, e / (1.0 + e).powi(2));
        let (gr, hr) = to_rframe(&[rho], &grad, &hess);
        let r = (0.5 * rho).exp();
        let r2 = r * r;
        assert!(rel_err(gr[0], 2.0 * r / (1.0 + r2)) < 1e-13);
        assert!((hr[(0, 0)] - 2.0 * (1.0 - r2) / (1.0 + r2).powi(2)).abs() < 1e-12);
        let (g, h) = from_rframe(&[rho], &gr, &hr);
        assert!(rel_err(g[0], grad[0]) < 1e-13);
        assert!(rel_err(h[(0, 0)], hess[(0, 0)]) < 1e-9);
    }
}

#[test]
fn trivial_pair_has_static_errors() {
    let pair = GeodesicPair::trivial(perturbed_interval()).unwrap();
    let tables = TablePair::build(&pair, 32, &gl()).unwrap();
    let grid = build_grid(&pair, 5, 9, 0.05).unwrap();
    let jets = jet_pairs(&pair, &tables, &grid).unwrap();
    let row = error_fields(&pair, &tables, &grid).unwrap();
    for f in [Field::E1Time, Field::E2Mixed, Field::E2Time] {
        assert_eq!(row.get(f).value, 0.0, "{}", f.name());
    }
    let n = grid.len();
    for (i, j) in jets.iter().enumerate() {
        let base = &jets[i % n];
        assert!(
            (j.bergman.grad[0] - j.ma.grad[0] - (base.bergman.grad[0] - base.ma.grad[0])).abs()
                < 1e-15
        );
    }
}

#[test]
fn trivial_pair_second_derivative_rate() {
    let pair = GeodesicPair::trivial(perturbed_interval()).unwrap();
    let ks = [16u32, 32, 64, 128, 256];
    let report = ErrorReport::from_rows(rows(&pair, &ks, 3, 17));
    let fit = report.rate(Field::E2Space, "power").unwrap();
    assert!(fit.slope <= -1.0, "{}", fit.slope);
}

#[test]
fn affine_pair_errors_translate() {
    let (c, b) = ([0.6], 0.2);
    let pair = affine_pair(perturbed_interval(), &c, b);
    let tables = TablePair::build(&pair, 24, &gl()).unwrap();
    let grid = build_grid(&pair, 3, 9, 0.05).unwrap();
    let jets = jet_pairs(&pair, &tables, &grid).unwrap();
    for j in jets.iter().filter(|j| j.t > 0.0) {
        let shifted = [j.ma.rho[0] - j.t * c[0]];
        let ma0 = toge::geodesic::ma_jet(&pair, 0.0, &shifted).unwrap();
        let bj0 = toge::geodesic::bergman_jet(&tables, 0.0, &shifted).unwrap();
        let d = (j.bergman.psi - j.ma.phi) - (bj0.psi - ma0.phi);
        assert!(d.abs() < 1e-9);
        let d1 = (j.bergman.grad[0] - j.ma.grad[0]) - (bj0.grad[0] - ma0.grad[0]);
        assert!(d1.abs() < 1e-9);
        let d2 =
            (j.bergman.hess[(0, 0)] - j.ma.hess[(0, 0)]) - (bj0.hess[(0, 0)] - ma0.hess[(0, 0)]);
        assert!(d2.abs() < 1e-9);
    }
}

#[test]
fn standard_pair_e0_decreases() {
    let ks = [16u32, 32, 64, 128, 256];
    let report = ErrorReport::from_rows(rows(&standard_pair(), &ks, 5, 9));
    let e0 = report.series(Field::E0);
    assert!(e0.windows(2).all(|w| w[1] < w[0]), "{e0:?}");
    for r in &report.rows {
        assert_eq!(r.fields.len(), 6);
        assert!(r
            .fields
            .iter()
            .all(|(_, s)| s.value >= 0.0 && s.value.is_finite()));
        assert_eq!(r.rframe.len(), RField::ALL.len());
    }
    assert!(report.rate(Field::E0, "power-log").is_some());
}

#[test]
fn e0_ignores_constants_in_the_endpoints() {
    let base = standard_pair();
    let shifted_u1 = GeodesicPair::new(base.u0.clone(), base.u1.add_affine(&[0.0], 0.8)).unwrap();
    let shifted_u0 = GeodesicPair::new(base.u0.add_affine(&[0.0], -0.5), base.u1.clone()).unwrap();
    let a = &rows(&base, &[24], 5, 9)[0];
    for other in [&shifted_u1, &shifted_u0] {
        let b = &rows(other, &[24], 5, 9)[0];
        assert!((a.get(Field::E0).value - b.get(Field::E0).value).abs() < 1e-12);
        assert!((a.get(Field::E1Time).value - b.get(Field::E1Time).value).abs() < 1e-11);
    }
}

#[test]
fn errors_ignore_facet_order() {
    let flipped = Arc::new(
        DelzantPolytope::from_facets(1, vec![Facet::new(vec![-1], -1), Facet::new(vec![1], 0)])
            .unwrap(),
    );
    let base = standard_pair();
    let u0 = SymplecticPotential::canonical(flipped);
    let u1 = u0.with_smooth(base.u1.smooth().clone());
    let other = GeodesicPair::new(u0, u1).unwrap();
    let a = &rows(&base, &[20], 5, 9)[0];
    let b = &rows(&other, &[20], 5, 9)[0];
    for f in Field::ALL {
        let (x, y) = (a.get(f).value, b.get(f).value);
        assert!(
            (x - y).abs() <= 1e-10 * x.max(1e-12),
            "{}: {x} vs {y}",
            f.name()
        );
    }
}

#[test]
fn rframe_rows_cover_near_boundary_points() {
    let pair = standard_pair();
    let row = &rows(&pair, &[32], 3, 21)[0];
    for f in RField::ALL {
        let s = row.get_r(f);
        assert!(s.value > 0.0);
        let x = s.argmax_x[0];
        assert!(x.min(1.0 - x) < 0.1, "{}: {x}", f.name());
    }
}
