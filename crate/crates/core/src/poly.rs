//! Multivariate polynomials with integer exponents.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Monomial {
    pub exp: Vec<u32>,
    pub coef: f64,
}

/// `f(x) = sum_j coef_j x^exp_j`. Serialized as a list of `{"exp": [..], "coef": ..}`.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Polynomial {
    pub terms: Vec<Monomial>,
}

#[inline]
fn pow(x: f64, e: u32) -> f64 {
    match e {
        0 => 1.0,
        1 => x,
        2 => x * x,
        _ => x.powi(e as i32),
    }
}

impl Polynomial {
    pub fn zero() -> Self {
        Polynomial { terms: Vec::new() }
    }

    pub fn new(terms: Vec<(Vec<u32>, f64)>) -> Self {
        Polynomial {
            terms: terms
                .into_iter()
                .map(|(exp, coef)| Monomial { exp, coef })
                .collect(),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.iter().all(|t| t.coef == 0.0)
    }

    /// Degree of the polynomial; `0` for constants and the zero polynomial.
    pub fn degree(&self) -> u32 {
        self.terms
            .iter()
            .filter(|t| t.coef != 0.0)
            .map(|t| t.exp.iter().sum::<u32>())
            .max()
            .unwrap_or(0)
    }

    pub fn is_affine(&self) -> bool {
        self.degree() <= 1
    }

    pub fn dim_ok(&self, dim: usize) -> bool {
        self.terms
            .iter()
            .all(|t| t.exp.len() == dim && t.coef.is_finite())
    }

    /// `a * self + b * other`, terms concatenated.
    pub fn combine(&self, a: f64, other: &Polynomial, b: f64) -> Polynomial {
        let mut terms: Vec<Monomial> = self
            .terms
            .iter()
            .map(|t| Monomial {
                exp: t.exp.clone(),
                coef: a * t.coef,
            })
            .collect();
        terms.extend(other.terms.iter().map(|t| Monomial {
            exp: t.exp.clone(),
            coef: b * t.coef,
        }));
        Polynomial { terms }.simplified()
    }

    /// Merges equal exponents and drops zero coefficients; order is by exponent.
    pub fn simplified(mut self) -> Polynomial {
        self.terms.sort_by(|a, b| a.exp.cmp(&b.exp));
        let mut out: Vec<Monomial> = Vec::with_capacity(self.terms.len());
        for t in self.terms {
            match out.last_mut() {
                Some(last) if last.exp == t.exp => last.coef += t.coef,
                _ => out.push(t),
            }
        }
        out.retain(|t| t.coef != 0.0);
        Polynomial { terms: out }
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.terms
            .iter()
            .map(|t| {
                t.coef
                    * t.exp
                        .iter()
                        .zip(x)
                        .map(|(&e, &xi)| pow(xi, e))
                        .product::<f64>()
            })
            .sum()
    }

    /// Adds the gradient into `grad`.
    pub fn add_grad(&self, x: &[f64], grad: &mut [f64]) {
        for t in &self.terms {
            for i in 0..x.len() {
                let ei = t.exp[i];
                if ei == 0 {
                    continue;
                }
                let mut v = t.coef * ei as f64 * pow(x[i], ei - 1);
                for (j, (&e, &xj)) in t.exp.iter().zip(x).enumerate() {
                    if j != i {
                        v *= pow(xj, e);
                    }
                }
                grad[i] += v;
            }
        }
    }

    pub fn grad(&self, x: &[f64]) -> Vec<f64> {
        let mut g = vec![0.0; x.len()];
        self.add_grad(x, &mut g);
        g
    }

    /// Adds the Hessian (row-major `m x m`) into `hess`.
    pub fn add_hess(&self, x: &[f64], hess: &mut [f64]) {
        let m = x.len();
        for t in &self.terms {
            for i in 0..m {
                for j in i..m {
                    let mut v = t.coef;
                    for (q, (&e, &xq)) in t.exp.iter().zip(x).enumerate() {
                        let d = (q == i) as u32 + (q == j) as u32;
                        if e < d {
                            v = 0.0;
                            break;
                        }
                        let falling = if d == 0 {
                            1.0
                        } else if d == 1 {
                            e as f64
                        } else {
                            (e * (e - 1)) as f64
                        };
                        v *= falling * pow(xq, e - d);
                    }
                    hess[i * m + j] += v;
                    if i != j {
                        hess[j * m + i] += v;
                    }
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Polynomial {
        // 0.5 x - 0.5 x^2 + 2 x y^2 - 1
        Polynomial::new(vec![
            (vec![1, 0], 0.5),
            (vec![2, 0], -0.5),
            (vec![1, 2], 2.0),
            (vec![0, 0], -1.0),
        ])
    }

    #[test]
    fn eval_grad_hess() {
        let p = sample();
        let x = [0.3, 0.7];
        let v = 0.15 - 0.045 + 2.0 * 0.3 * 0.49 - 1.0;
        assert!((p.eval(&x) - v).abs() < 1e-15);
        let g = p.grad(&x);
        assert!((g[0] - (0.5 - 0.3 + 2.0 * 0.49)).abs() < 1e-15);
        assert!((g[1] - 4.0 * 0.3 * 0.7).abs() < 1e-15);
        let mut h = vec![0.0; 4];
        p.add_hess(&x, &mut h);
        assert!((h[0] + 1.0).abs() < 1e-15);
        assert!((h[1] - 4.0 * 0.7).abs() < 1e-15);
        assert_eq!(h[1], h[2]);
        assert!((h[3] - 4.0 * 0.3).abs() < 1e-15);
    }

    #[test]
    fn combine_and_degree() {
        let p = sample();
        let d = p.combine(1.0, &p, -1.0);
        assert!(d.is_zero());
        assert_eq!(p.degree(), 3);
        assert!(Polynomial::new(vec![(vec![1, 0], 2.0), (vec![0, 0], 1.0)]).is_affine());
    }

    #[test]
    fn serde_shape() {
        let p: Polynomial =
            serde_json::from_str(r#"[{"exp":[1],"coef":0.5},{"exp":[2],"coef":-0.5}]"#).unwrap();
        assert!((p.eval(&[0.5]) - 0.125).abs() < 1e-15);
    }
}
