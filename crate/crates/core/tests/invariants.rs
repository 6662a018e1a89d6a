mod common;

use proptest::prelude::*;

use common::*;
use toge::cli::csv::num;
use toge::converge::{fit_rate, from_rframe, to_rframe, PowerLaw};
use toge::geodesic::{bergman_jet, TablePair};
use toge::{DelzantPolytope, Polynomial};

use nalgebra::DMatrix;

fn brute_lattice(p: &DelzantPolytope, k: i64) -> Vec<Vec<i64>> {
    let (lo, hi) = p.bounding_box();
    let mut out = Vec::new();
    for a in lo[0] * k..=hi[0] * k {
        for b in lo[1] * k..=hi[1] * k {
            let ok = p
                .facets()
                .iter()
                .all(|f| f.normal[0] * a + f.normal[1] * b - f.offset * k >= 0);
            if ok {
                out.push(vec![a, b]);
            }
        }
    }
    out
}

fn builtin_2d() -> impl Strategy<Value = DelzantPolytope> {
    prop_oneof![
        Just(DelzantPolytope::simplex(2).unwrap()),
        (1i64..4).prop_map(|s| DelzantPolytope::cube(2, s).unwrap()),
        (0i64..4).prop_map(|a| DelzantPolytope::hirzebruch(a).unwrap()),
    ]
}

/// A point strictly inside the simplex from barycentric weights.
fn simplex_point(w: (f64, f64, f64)) -> [f64; 2] {
    let s = w.0 + w.1 + w.2;
    [w.0 / s, w.1 / s]
}

fn weight() -> impl Strategy<Value = f64> {
    0.05f64..1.0
}

fn smooth_simplex() -> impl Strategy<Value = toge::SymplecticPotential> {
    (-0.3f64..0.3, -0.3f64..0.3, -0.3f64..0.3).prop_map(|(a, b, c)| {
        fs_simplex().with_smooth(Polynomial::new(vec![
            (vec![1, 1], a),
            (vec![2, 0], b),
            (vec![0, 2], c),
        ]))
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn lattice_count_matches_brute_force(p in builtin_2d(), k in 1u32..9) {
        let set = p.lattice_points(k).unwrap();
        prop_assert_eq!(set.points, brute_lattice(&p, k as i64));
    }

    #[test]
    fn facet_values_are_affine(p in builtin_2d(), s in 0.0f64..1.0, a in (weight(), weight(), weight()), b in (weight(), weight(), weight())) {
        let x = simplex_point(a);
        let y = simplex_point(b);
        let z = [(1.0 - s) * x[0] + s * y[0], (1.0 - s) * x[1] + s * y[1]];
        let (lx, ly, lz) = (p.facet_values(&x).unwrap(), p.facet_values(&y).unwrap(), p.facet_values(&z).unwrap());
        for r in 0..p.num_facets() {
            prop_assert!((lz[r] - ((1.0 - s) * lx[r] + s * ly[r])).abs() < 1e-12);
        }
    }

    #[test]
    fn near_facets_grow_with_delta(a in (weight(), weight(), weight()), d1 in 0.0f64..0.5, d2 in 0.0f64..0.5) {
        let p = DelzantPolytope::simplex(2).unwrap();
        let x = simplex_point(a);
        let (lo, hi) = if d1 <= d2 { (d1, d2) } else { (d2, d1) };
        let small = p.near_facets(&x, lo).unwrap();
        let large = p.near_facets(&x, hi).unwrap();
        prop_assert!(small.near_set.iter().all(|r| large.near_set.contains(r)));
    }

    #[test]
    fn legendre_is_an_involution(u in smooth_simplex(), rho in (-2.0f64..2.0, -2.0f64..2.0)) {
        let rho = [rho.0, rho.1];
        let leg = u.legendre(&rho).unwrap();
        let g = u.grad_u(&leg.maximizer).unwrap();
        prop_assert!((g[0] - rho[0]).abs() < 1e-9 && (g[1] - rho[1]).abs() < 1e-9);
        // Young equality at the maximizer
        let ux = u.eval_u(&leg.maximizer).unwrap();
        let pairing = leg.maximizer[0] * rho[0] + leg.maximizer[1] * rho[1];
        prop_assert!((leg.value + ux - pairing).abs() < 1e-10);
    }

    #[test]
    fn hessian_inverse_pair(u in smooth_simplex(), a in (weight(), weight(), weight())) {
        let x = simplex_point(a);
        let hp = u.hess_u(&x).unwrap();
        let prod = &hp.g * &hp.h;
        prop_assert!((prod - DMatrix::identity(2, 2)).norm() < 1e-10);
    }

    #[test]
    fn bergman_weights_sum_to_one(t in 0.0f64..1.0, rho in -3.0f64..3.0, k in 4u32..24) {
        let tables = TablePair::build(&standard_pair(), k, &gl()).unwrap();
        let j = bergman_jet(&tables, t, &[rho]).unwrap();
        prop_assert!((j.weights.iter().sum::<f64>() - 1.0).abs() < 1e-13);
        prop_assert!(j.weights.iter().all(|&w| w >= 0.0));
    }

    #[test]
    fn swapping_endpoints_reverses_time(t in 0.0f64..1.0, rho in -2.0f64..2.0) {
        let pair = standard_pair();
        let tables = TablePair::build(&pair, 12, &gl()).unwrap();
        let back = TablePair::from_tables(tables.q1.clone(), tables.q0.clone()).unwrap();
        let a = bergman_jet(&tables, t, &[rho]).unwrap();
        let b = bergman_jet(&back, 1.0 - t, &[rho]).unwrap();
        prop_assert!((a.psi - b.psi).abs() < 1e-12);
    }

    #[test]
    fn rframe_round_trip(rho in (-3.0f64..3.0, -3.0f64..3.0), g in (-2.0f64..2.0, -2.0f64..2.0), h in (0.1f64..2.0, -0.5f64..0.5, 0.1f64..2.0)) {
        let rho = [rho.0, rho.1];
        let grad = [g.0, g.1];
        let hess = DMatrix::from_row_slice(2, 2, &[h.0, h.1, h.1, h.2]);
        let (gr, hr) = to_rframe(&rho, &grad, &hess);
        let (g2, h2) = from_rframe(&rho, &gr, &hr);
        for i in 0..2 {
            prop_assert!((g2[i] - grad[i]).abs() < 1e-9);
        }
        prop_assert!((h2 - hess).norm() < 1e-9);
    }

    #[test]
    fn fit_rate_recovers_power_slopes(slope in -3.0f64..-0.1, c in 0.01f64..100.0) {
        let ks = [16u32, 32, 64, 128, 256];
        let e: Vec<f64> = ks.iter().map(|&k| c * (k as f64).powf(slope)).collect();
        let f = fit_rate(&ks, &e, &PowerLaw).unwrap();
        prop_assert!((f.slope - slope).abs() < 1e-10);
        prop_assert!((f.intercept - c.ln()).abs() < 1e-9);
    }

    #[test]
    fn csv_numbers_round_trip(v in any::<f64>().prop_filter("finite", |v| v.is_finite())) {
        let s = num(v);
        prop_assert_eq!(s.parse::<f64>().unwrap().to_bits(), v.to_bits());
    }
}
