//! Delzant lattice polytopes given by facet inequalities.
//!
//! A polytope is `P = { x : l_r(x) >= 0 }` with `l_r(x) = <x, v_r> - lambda_r`,
//! `v_r` a primitive integer normal and `lambda_r` an integer offset. Facet
//! order is the declaration order and is used as the facet index everywhere.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Result, TogeError};

/// Default cap on the number of lattice points of a dilate.
pub const LATTICE_CAP: usize = 10_000_000;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Facet {
    pub normal: Vec<i64>,
    pub offset: i64,
}

impl Facet {
    pub fn new(normal: Vec<i64>, offset: i64) -> Self {
        Facet { normal, offset }
    }

    #[inline]
    pub fn value(&self, x: &[f64]) -> f64 {
        self.normal
            .iter()
            .zip(x)
            .map(|(&v, &xi)| v as f64 * xi)
            .sum::<f64>()
            - self.offset as f64
    }

    /// `k * l_r(alpha / k)`, exact in integers.
    #[inline]
    pub fn scaled_lattice_value(&self, alpha: &[i64], k: i64) -> i64 {
        self.normal
            .iter()
            .zip(alpha)
            .map(|(&v, &a)| v * a)
            .sum::<i64>()
            - k * self.offset
    }
}

/// Polytope description as it appears in configuration files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PolytopeSpec {
    Builtin {
        builtin: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        dim: Option<usize>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        a: Option<i64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        size: Option<i64>,
    },
    Facets {
        facets: Vec<Facet>,
    },
}

impl PolytopeSpec {
    pub fn builtin(name: &str) -> Self {
        PolytopeSpec::Builtin {
            builtin: name.to_string(),
            dim: None,
            a: None,
            size: None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct DelzantPolytope {
    dim: usize,
    facets: Vec<Facet>,
    vertices: Vec<Vec<i64>>,
    euclidean_volume: f64,
    analytic_center: Vec<f64>,
}

/// Lattice points of the dilate `kP`, lexicographically sorted.
#[derive(Debug, Clone, PartialEq)]
pub struct LatticeSet {
    pub k: u32,
    pub points: Vec<Vec<i64>>,
}

impl LatticeSet {
    /// `d_k + 1`.
    pub fn count(&self) -> usize {
        self.points.len()
    }

    pub fn index_of(&self, alpha: &[i64]) -> Option<usize> {
        self.points
            .binary_search_by(|p| p.as_slice().cmp(alpha))
            .ok()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FacetProximity {
    pub near_set: Vec<usize>,
    pub distances: Vec<f64>,
}

impl FacetProximity {
    pub fn near_count(&self) -> usize {
        self.near_set.len()
    }
}

fn gcd(a: i64, b: i64) -> i64 {
    if b == 0 {
        a.abs()
    } else {
        gcd(b, a % b)
    }
}

fn combinations(n: usize, r: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    if r > n {
        return out;
    }
    let mut idx: Vec<usize> = (0..r).collect();
    loop {
        out.push(idx.clone());
        let mut i = r;
        while i > 0 && idx[i - 1] == i - 1 + n - r {
            i -= 1;
        }
        if i == 0 {
            return out;
        }
        idx[i - 1] += 1;
        for j in i..r {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

fn int_det(rows: &[&[i64]]) -> i64 {
    let m = rows.len();
    match m {
        0 => 1,
        1 => rows[0][0],
        2 => rows[0][0] * rows[1][1] - rows[0][1] * rows[1][0],
        _ => {
            let mut det = 0;
            for c in 0..m {
                let minor: Vec<Vec<i64>> = rows[1..]
                    .iter()
                    .map(|r| {
                        r.iter()
                            .enumerate()
                            .filter(|&(j, _)| j != c)
                            .map(|(_, &v)| v)
                            .collect()
                    })
                    .collect();
                let minor_refs: Vec<&[i64]> = minor.iter().map(|r| r.as_slice()).collect();
                let sign = if c % 2 == 0 { 1 } else { -1 };
                det += sign * rows[0][c] * int_det(&minor_refs);
            }
            det
        }
    }
}

impl DelzantPolytope {
    /// Validates facet data and enumerates vertices.
    pub fn from_facets(dim: usize, facets: Vec<Facet>) -> Result<Self> {
        if dim == 0 || dim > 3 {
            return Err(TogeError::Unsupported(format!("dimension {dim}")));
        }
        for (r, f) in facets.iter().enumerate() {
            if f.normal.len() != dim {
                return Err(TogeError::DimensionMismatch {
                    expected: dim,
                    got: f.normal.len(),
                });
            }
            let g = f.normal.iter().fold(0, |acc, &v| gcd(acc, v));
            if g != 1 {
                return Err(TogeError::NonPrimitiveNormal {
                    facet: r,
                    normal: f.normal.clone(),
                });
            }
        }
        check_bounded(dim, &facets)?;

        let mut vertices: Vec<Vec<i64>> = Vec::new();
        for subset in combinations(facets.len(), dim) {
            let a = DMatrix::from_fn(dim, dim, |i, j| facets[subset[i]].normal[j] as f64);
            let b = DVector::from_fn(dim, |i, _| facets[subset[i]].offset as f64);
            let Some(sol) = a.lu().solve(&b) else {
                continue;
            };
            let feasible = facets.iter().all(|f| f.value(sol.as_slice()) >= -1e-9);
            if !feasible {
                continue;
            }
            let rounded: Vec<i64> = sol.iter().map(|v| v.round() as i64).collect();
            if sol
                .iter()
                .zip(&rounded)
                .any(|(s, &r)| (s - r as f64).abs() > 1e-9)
            {
                return Err(TogeError::NotDelzant {
                    vertex: sol.iter().copied().collect(),
                    reason: "vertex is not a lattice point".into(),
                });
            }
            if !vertices.contains(&rounded) {
                vertices.push(rounded);
            }
        }
        if vertices.len() < dim + 1 {
            return Err(TogeError::EmptyInterior);
        }
        vertices.sort();

        for v in &vertices {
            let tight: Vec<&Facet> = facets
                .iter()
                .filter(|f| f.scaled_lattice_value(v, 1) == 0)
                .collect();
            let vf: Vec<f64> = v.iter().map(|&c| c as f64).collect();
            if tight.len() != dim {
                return Err(TogeError::NotDelzant {
                    vertex: vf,
                    reason: format!("{} facets meet, expected {dim}", tight.len()),
                });
            }
            let rows: Vec<&[i64]> = tight.iter().map(|f| f.normal.as_slice()).collect();
            let det = int_det(&rows);
            if det.abs() != 1 {
                return Err(TogeError::NotDelzant {
                    vertex: vf,
                    reason: format!("normal determinant {det}"),
                });
            }
        }
        for (r, f) in facets.iter().enumerate() {
            let on = vertices
                .iter()
                .filter(|v| f.scaled_lattice_value(v, 1) == 0)
                .count();
            if on < dim {
                return Err(TogeError::RedundantFacet(r));
            }
        }

        let volume = euclidean_volume(dim, &facets, &vertices);
        if volume <= 0.0 {
            return Err(TogeError::EmptyInterior);
        }
        let mut poly = DelzantPolytope {
            dim,
            facets,
            vertices,
            euclidean_volume: volume,
            analytic_center: Vec::new(),
        };
        poly.analytic_center = poly.compute_analytic_center();
        Ok(poly)
    }

    pub fn from_spec(spec: &PolytopeSpec) -> Result<Self> {
        match spec {
            PolytopeSpec::Facets { facets } => {
                let dim = facets.first().map(|f| f.normal.len()).unwrap_or(0);
                Self::from_facets(dim, facets.clone())
            }
            PolytopeSpec::Builtin {
                builtin,
                dim,
                a,
                size,
            } => match builtin.as_str() {
                "interval" => Self::cube(1, size.unwrap_or(1)),
                "simplex" => Self::simplex(dim.unwrap_or(2)),
                "cube" => Self::cube(dim.unwrap_or(2), size.unwrap_or(1)),
                "hirzebruch" => Self::hirzebruch(a.unwrap_or(1)),
                other => Err(TogeError::schema(
                    "polytope.builtin",
                    format!("unknown builtin polytope '{other}'"),
                )),
            },
        }
    }

    pub fn interval() -> Self {
        Self::cube(1, 1).expect("unit interval is Delzant")
    }

    /// The standard simplex with facets `x_1, ..., x_m, 1 - sum x_j`.
    pub fn simplex(dim: usize) -> Result<Self> {
        let mut facets: Vec<Facet> = (0..dim).map(|i| Facet::new(unit(dim, i, 1), 0)).collect();
        facets.push(Facet::new(vec![-1; dim], -1));
        Self::from_facets(dim, facets)
    }

    /// `[0, size]^m` with facets `x_1, ..., x_m, size - x_1, ..., size - x_m`.
    pub fn cube(dim: usize, size: i64) -> Result<Self> {
        if size < 1 {
            return Err(TogeError::EmptyInterior);
        }
        let mut facets: Vec<Facet> = (0..dim).map(|i| Facet::new(unit(dim, i, 1), 0)).collect();
        facets.extend((0..dim).map(|i| Facet::new(unit(dim, i, -1), -size)));
        Self::from_facets(dim, facets)
    }

    /// Trapezoid `x >= 0, y >= 0, 1 - y >= 0, (1 + a) - x - a y >= 0`.
    pub fn hirzebruch(a: i64) -> Result<Self> {
        if a < 0 {
            return Err(TogeError::schema(
                "polytope.a",
                "hirzebruch parameter must be >= 0",
            ));
        }
        Self::from_facets(
            2,
            vec![
                Facet::new(vec![1, 0], 0),
                Facet::new(vec![0, 1], 0),
                Facet::new(vec![0, -1], -1),
                Facet::new(vec![-1, -a], -(1 + a)),
            ],
        )
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn facets(&self) -> &[Facet] {
        &self.facets
    }

    pub fn num_facets(&self) -> usize {
        self.facets.len()
    }

    pub fn vertices(&self) -> &[Vec<i64>] {
        &self.vertices
    }

    pub fn volume(&self) -> f64 {
        self.euclidean_volume
    }

    /// Minimizer of the log barrier `-sum log l_r`.
    pub fn analytic_center(&self) -> &[f64] {
        &self.analytic_center
    }

    pub fn bounding_box(&self) -> (Vec<i64>, Vec<i64>) {
        let mut lo = vec![i64::MAX; self.dim];
        let mut hi = vec![i64::MIN; self.dim];
        for v in &self.vertices {
            for j in 0..self.dim {
                lo[j] = lo[j].min(v[j]);
                hi[j] = hi[j].max(v[j]);
            }
        }
        (lo, hi)
    }

    pub fn facet_values(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_dim(x)?;
        Ok(self.facets.iter().map(|f| f.value(x)).collect())
    }

    pub fn contains(&self, x: &[f64], tol: f64) -> bool {
        x.len() == self.dim && self.facets.iter().all(|f| f.value(x) >= -tol)
    }

    pub fn check_dim(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim {
            return Err(TogeError::DimensionMismatch {
                expected: self.dim,
                got: x.len(),
            });
        }
        Ok(())
    }

    pub fn lattice_points(&self, k: u32) -> Result<LatticeSet> {
        self.lattice_points_capped(k, LATTICE_CAP)
    }

    pub fn lattice_points_capped(&self, k: u32, cap: usize) -> Result<LatticeSet> {
        if k == 0 {
            return Err(TogeError::schema("k", "dilation must be positive"));
        }
        let k = k as i64;
        let (lo, hi) = self.bounding_box();
        let lo: Vec<i64> = lo.iter().map(|v| v * k).collect();
        let hi: Vec<i64> = hi.iter().map(|v| v * k).collect();
        let mut points = Vec::new();
        let mut alpha = lo.clone();
        'scan: loop {
            if self
                .facets
                .iter()
                .all(|f| f.scaled_lattice_value(&alpha, k) >= 0)
            {
                if points.len() >= cap {
                    return Err(TogeError::Overflow { cap });
                }
                points.push(alpha.clone());
            }
            // odometer, last coordinate fastest -> lexicographic order
            let mut j = self.dim;
            loop {
                if j == 0 {
                    break 'scan;
                }
                j -= 1;
                if alpha[j] < hi[j] {
                    alpha[j] += 1;
                    alpha[j + 1..].copy_from_slice(&lo[j + 1..]);
                    break;
                }
            }
        }
        Ok(LatticeSet {
            k: k as u32,
            points,
        })
    }

    pub fn near_facets(&self, x: &[f64], delta: f64) -> Result<FacetProximity> {
        let distances = self.facet_values(x)?;
        if distances.iter().any(|&l| l < -1e-12) {
            return Err(TogeError::OutsidePolytope(x.to_vec()));
        }
        let near_set = distances
            .iter()
            .enumerate()
            .filter(|&(_, &l)| l < delta)
            .map(|(r, _)| r)
            .collect();
        Ok(FacetProximity {
            near_set,
            distances,
        })
    }

    fn compute_analytic_center(&self) -> Vec<f64> {
        let m = self.dim;
        let mut x: Vec<f64> = (0..m)
            .map(|j| {
                self.vertices.iter().map(|v| v[j] as f64).sum::<f64>() / self.vertices.len() as f64
            })
            .collect();
        for _ in 0..100 {
            let mut grad = DVector::<f64>::zeros(m);
            let mut hess = DMatrix::<f64>::zeros(m, m);
            for f in &self.facets {
                let l = f.value(&x);
                for i in 0..m {
                    grad[i] -= f.normal[i] as f64 / l;
                    for j in 0..m {
                        hess[(i, j)] += (f.normal[i] * f.normal[j]) as f64 / (l * l);
                    }
                }
            }
            let Some(step) = hess.cholesky().map(|c| c.solve(&(-&grad))) else {
                break;
            };
            let mut tau = 1.0f64;
            for f in &self.facets {
                let l = f.value(&x);
                let dl: f64 = f
                    .normal
                    .iter()
                    .zip(step.iter())
                    .map(|(&v, s)| v as f64 * s)
                    .sum();
                if dl < 0.0 {
                    tau = tau.min(0.5 * l / -dl);
                }
            }
            for i in 0..m {
                x[i] += tau * step[i];
            }
            if grad.norm() < 1e-14 {
                break;
            }
        }
        x
    }
}

fn unit(dim: usize, i: usize, s: i64) -> Vec<i64> {
    let mut v = vec![0; dim];
    v[i] = s;
    v
}

/// Rejects facet systems whose recession cone `{y : <y, v_r> >= 0}` is nontrivial.
fn check_bounded(dim: usize, facets: &[Facet]) -> Result<()> {
    let n = DMatrix::from_fn(facets.len(), dim, |i, j| facets[i].normal[j] as f64);
    if facets.len() < dim + 1 || n.clone().svd(false, false).rank(1e-9) < dim {
        return Err(TogeError::Unbounded);
    }
    let candidates: Vec<Vec<f64>> = match dim {
        1 => vec![vec![1.0]],
        2 => facets
            .iter()
            .map(|f| vec![-(f.normal[1] as f64), f.normal[0] as f64])
            .collect(),
        _ => combinations(facets.len(), 2)
            .into_iter()
            .map(|c| {
                let a = &facets[c[0]].normal;
                let b = &facets[c[1]].normal;
                vec![
                    (a[1] * b[2] - a[2] * b[1]) as f64,
                    (a[2] * b[0] - a[0] * b[2]) as f64,
                    (a[0] * b[1] - a[1] * b[0]) as f64,
                ]
            })
            .filter(|y| y.iter().any(|&c| c != 0.0))
            .collect(),
    };
    for y in candidates {
        for s in [1.0, -1.0] {
            let ok = facets.iter().all(|f| {
                f.normal
                    .iter()
                    .zip(&y)
                    .map(|(&v, &c)| v as f64 * c * s)
                    .sum::<f64>()
                    >= 0.0
            });
            if ok {
                return Err(TogeError::Unbounded);
            }
        }
    }
    Ok(())
}

fn polygon_area_2d(points: &mut [[f64; 2]]) -> f64 {
    let n = points.len() as f64;
    let cx = points.iter().map(|p| p[0]).sum::<f64>() / n;
    let cy = points.iter().map(|p| p[1]).sum::<f64>() / n;
    points.sort_by(|a, b| {
        let ta = (a[1] - cy).atan2(a[0] - cx);
        let tb = (b[1] - cy).atan2(b[0] - cx);
        ta.total_cmp(&tb)
    });
    let mut area = 0.0;
    for i in 0..points.len() {
        let p = points[i];
        let q = points[(i + 1) % points.len()];
        area += p[0] * q[1] - q[0] * p[1];
    }
    0.5 * area.abs()
}

fn euclidean_volume(dim: usize, facets: &[Facet], vertices: &[Vec<i64>]) -> f64 {
    match dim {
        1 => {
            let lo = vertices.iter().map(|v| v[0]).min().unwrap_or(0);
            let hi = vertices.iter().map(|v| v[0]).max().unwrap_or(0);
            (hi - lo) as f64
        }
        2 => {
            let mut pts: Vec<[f64; 2]> = vertices
                .iter()
                .map(|v| [v[0] as f64, v[1] as f64])
                .collect();
            polygon_area_2d(&mut pts)
        }
        _ => {
            // pyramids over facets with apex at the vertex centroid
            let nv = vertices.len() as f64;
            let c: Vec<f64> = (0..3)
                .map(|j| vertices.iter().map(|v| v[j] as f64).sum::<f64>() / nv)
                .collect();
            let mut vol = 0.0;
            for f in facets {
                let on: Vec<[f64; 3]> = vertices
                    .iter()
                    .filter(|v| f.scaled_lattice_value(v, 1) == 0)
                    .map(|v| [v[0] as f64, v[1] as f64, v[2] as f64])
                    .collect();
                let nrm: Vec<f64> = f.normal.iter().map(|&v| v as f64).collect();
                let nn = nrm.iter().map(|v| v * v).sum::<f64>().sqrt();
                let h = f.value(&c) / nn;
                // orthonormal basis of the facet plane
                let e0 = if nrm[0].abs() < 0.9 * nn {
                    [1.0, 0.0, 0.0]
                } else {
                    [0.0, 1.0, 0.0]
                };
                let n = [nrm[0] / nn, nrm[1] / nn, nrm[2] / nn];
                let d = e0[0] * n[0] + e0[1] * n[1] + e0[2] * n[2];
                let mut a = [e0[0] - d * n[0], e0[1] - d * n[1], e0[2] - d * n[2]];
                let an = (a[0] * a[0] + a[1] * a[1] + a[2] * a[2]).sqrt();
                a = [a[0] / an, a[1] / an, a[2] / an];
                let b = [
                    n[1] * a[2] - n[2] * a[1],
                    n[2] * a[0] - n[0] * a[2],
                    n[0] * a[1] - n[1] * a[0],
                ];
                let mut proj: Vec<[f64; 2]> = on
                    .iter()
                    .map(|p| {
                        [
                            p[0] * a[0] + p[1] * a[1] + p[2] * a[2],
                            p[0] * b[0] + p[1] * b[1] + p[2] * b[2],
                        ]
                    })
                    .collect();
                vol += h * polygon_area_2d(&mut proj) / 3.0;
            }
            vol
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn hirz() -> DelzantPolytope {
        DelzantPolytope::hirzebruch(1).unwrap()
    }

    #[test]
    fn interval_basics() {
        let p = DelzantPolytope::interval();
        assert_eq!(p.vertices(), &[vec![0], vec![1]]);
        assert_eq!(p.volume(), 1.0);
        assert_eq!(p.facet_values(&[0.25]).unwrap(), vec![0.25, 0.75]);
        assert!((p.analytic_center()[0] - 0.5).abs() < 1e-14);
    }

    #[test]
    fn simplex_vertices_and_values() {
        let p = DelzantPolytope::simplex(2).unwrap();
        assert_eq!(p.vertices(), &[vec![0, 0], vec![0, 1], vec![1, 0]]);
        assert_eq!(p.facet_values(&[0.0, 0.0]).unwrap(), vec![0.0, 0.0, 1.0]);
        assert!((p.volume() - 0.5).abs() < 1e-15);
        let c = p.analytic_center();
        assert!((c[0] - 1.0 / 3.0).abs() < 1e-12 && (c[1] - 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn hirzebruch_vertices_brute_force() {
        let p = hirz();
        // brute force: every pair of facet lines, 2x2 solve by Cramer, feasibility filter
        let f = p.facets();
        let mut brute = Vec::new();
        for i in 0..f.len() {
            for j in i + 1..f.len() {
                let (a, b) = (&f[i], &f[j]);
                let det = a.normal[0] * b.normal[1] - a.normal[1] * b.normal[0];
                if det == 0 {
                    continue;
                }
                let x = (a.offset * b.normal[1] - a.normal[1] * b.offset) as f64 / det as f64;
                let y = (a.normal[0] * b.offset - a.offset * b.normal[0]) as f64 / det as f64;
                if f.iter().all(|g| g.value(&[x, y]) >= 0.0) {
                    brute.push(vec![x as i64, y as i64]);
                    assert_eq!(det.abs(), 1);
                }
            }
        }
        brute.sort();
        brute.dedup();
        assert_eq!(brute, vec![vec![0, 0], vec![0, 1], vec![1, 1], vec![2, 0]]);
        assert_eq!(p.vertices(), brute.as_slice());
        assert_eq!(
            p.facet_values(&[1.0, 0.5]).unwrap(),
            vec![1.0, 0.5, 0.5, 0.5]
        );
        assert!((p.volume() - 1.5).abs() < 1e-15);
    }

    #[test]
    fn lattice_point_examples() {
        let p = DelzantPolytope::interval();
        let l = p.lattice_points(5).unwrap();
        assert_eq!(l.count(), 6);
        assert_eq!(l.points[3], vec![3]);
        assert_eq!(
            DelzantPolytope::simplex(2)
                .unwrap()
                .lattice_points(2)
                .unwrap()
                .count(),
            6
        );
        let h = hirz().lattice_points(1).unwrap();
        assert_eq!(
            h.points,
            vec![vec![0, 0], vec![0, 1], vec![1, 0], vec![1, 1], vec![2, 0]]
        );
        assert_eq!(h.index_of(&[1, 1]), Some(3));
        assert_eq!(h.index_of(&[2, 1]), None);
    }

    #[test]
    fn lattice_cap_overflow() {
        let p = DelzantPolytope::simplex(2).unwrap();
        assert!(matches!(
            p.lattice_points_capped(10, 20),
            Err(TogeError::Overflow { cap: 20 })
        ));
    }

    #[test]
    fn near_facet_examples() {
        let p = DelzantPolytope::interval();
        assert_eq!(p.near_facets(&[0.5], 0.1).unwrap().near_count(), 0);
        let n = p.near_facets(&[0.05], 0.1).unwrap();
        assert_eq!(n.near_set, vec![0]);
        let s = DelzantPolytope::simplex(2).unwrap();
        assert_eq!(s.near_facets(&[0.01, 0.01], 0.1).unwrap().near_count(), 2);
        assert!(matches!(
            p.near_facets(&[1.5], 0.1),
            Err(TogeError::OutsidePolytope(_))
        ));
    }

    #[test]
    fn rejects_bad_polytopes() {
        // orbifold corner: normals (1,0) and (1,2) have determinant 2
        let bad = DelzantPolytope::from_facets(
            2,
            vec![
                Facet::new(vec![0, 1], 0),
                Facet::new(vec![1, 0], 0),
                Facet::new(vec![-1, -2], -2),
            ],
        );
        assert!(matches!(bad, Err(TogeError::NotDelzant { .. })));
        let unbounded = DelzantPolytope::from_facets(
            2,
            vec![Facet::new(vec![1, 0], 0), Facet::new(vec![0, 1], 0)],
        );
        assert!(matches!(unbounded, Err(TogeError::Unbounded)));
        let half_strip = DelzantPolytope::from_facets(
            2,
            vec![
                Facet::new(vec![1, 0], 0),
                Facet::new(vec![0, 1], 0),
                Facet::new(vec![0, -1], -1),
            ],
        );
        assert!(matches!(half_strip, Err(TogeError::Unbounded)));
        let empty =
            DelzantPolytope::from_facets(1, vec![Facet::new(vec![1], 1), Facet::new(vec![-1], 0)]);
        assert!(matches!(empty, Err(TogeError::EmptyInterior)));
        let nonprim =
            DelzantPolytope::from_facets(1, vec![Facet::new(vec![2], 0), Facet::new(vec![-1], -1)]);
        assert!(matches!(nonprim, Err(TogeError::NonPrimitiveNormal { .. })));
    }

    #[test]
    fn cube_three_dimensional() {
        let c = DelzantPolytope::cube(3, 1).unwrap();
        assert_eq!(c.vertices().len(), 8);
        assert!((c.volume() - 1.0).abs() < 1e-12);
        assert_eq!(c.lattice_points(2).unwrap().count(), 27);
        let s = DelzantPolytope::simplex(3).unwrap();
        assert!((s.volume() - 1.0 / 6.0).abs() < 1e-12);
    }

    #[test]
    fn spec_parsing() {
        let spec: PolytopeSpec = serde_json::from_str(r#"{"builtin":"hirzebruch","a":2}"#).unwrap();
        let p = DelzantPolytope::from_spec(&spec).unwrap();
        assert_eq!(p.vertices().len(), 4);
        let spec: PolytopeSpec = serde_json::from_str(
            r#"{"facets":[{"normal":[1],"offset":0},{"normal":[-1],"offset":-3}]}"#,
        )
        .unwrap();
        assert_eq!(DelzantPolytope::from_spec(&spec).unwrap().volume(), 3.0);
    }
}
