//! Special functions and numerically stable reductions.

use std::f64::consts::PI;

const LANCZOS_G: f64 = 7.0;
const LANCZOS_COEF: [f64; 9] = [
    0.999_999_999_999_809_9,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];

/// `ln Gamma(x)` for `x > 0` (Lanczos, g = 7).
pub fn ln_gamma(x: f64) -> f64 {
    if x < 0.5 {
        // reflection
        return (PI / (PI * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut a = LANCZOS_COEF[0];
    let t = x + LANCZOS_G + 0.5;
    for (i, &c) in LANCZOS_COEF.iter().enumerate().skip(1) {
        a += c / (x + i as f64);
    }
    0.5 * (2.0 * PI).ln() + (x + 0.5) * t.ln() - t + a.ln()
}

/// `ln n!`, exact summation for small `n`.
pub fn ln_factorial(n: u64) -> f64 {
    if n < 32 {
        (2..=n).map(|j| (j as f64).ln()).sum()
    } else {
        ln_gamma(n as f64 + 1.0)
    }
}

pub fn ln_beta(a: f64, b: f64) -> f64 {
    ln_gamma(a) + ln_gamma(b) - ln_gamma(a + b)
}

/// `ln (k choose alpha_1, ..., alpha_m, k - |alpha|)`.
pub fn ln_multinomial(k: u64, alpha: &[i64]) -> f64 {
    let rest = k as i64 - alpha.iter().sum::<i64>();
    ln_factorial(k)
        - alpha.iter().map(|&a| ln_factorial(a as u64)).sum::<f64>()
        - ln_factorial(rest as u64)
}

/// `ln( k e^{-y} y^y / Gamma(y + 1) )`: the one-dimensional Bargmann-Fock law,
/// extended real-analytically to `y >= 0` (with `0^0 = 1`).
pub fn ln_bargmann_fock(k: f64, y: f64) -> f64 {
    let yy = if y > 0.0 { y * y.ln() } else { 0.0 };
    k.ln() - y + yy - ln_gamma(y + 1.0)
}

/// `ln gamma(n + 1, y)` (lower incomplete gamma at integer order), via
/// `gamma(n+1, y) = n! (1 - e^{-y} sum_{j<=n} y^j / j!)`.
pub fn ln_lower_incomplete_gamma_int(n: u64, y: f64) -> f64 {
    let terms: Vec<f64> = (0..=n)
        .map(|j| j as f64 * y.ln() - ln_factorial(j) - y)
        .collect();
    let tail = log_sum_exp(&terms).exp();
    if tail < 0.5 {
        ln_factorial(n) + (-tail).ln_1p()
    } else {
        // small y: gamma(a, y) = y^a e^{-y} sum_{j>=0} y^j / (a (a+1) ... (a+j))
        let a = n as f64 + 1.0;
        let mut term = 1.0 / a;
        let mut sum = term;
        let mut j = 1.0;
        while term > sum * 1e-17 {
            term *= y / (a + j);
            sum += term;
            j += 1.0;
        }
        a * y.ln() - y + sum.ln()
    }
}

/// `ln sum exp(v_i)` with max shift; `-inf` for an empty or all `-inf` input.
pub fn log_sum_exp(values: &[f64]) -> f64 {
    let m = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + values.iter().map(|&v| (v - m).exp()).sum::<f64>().ln()
}

/// Gauss-Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for j in 2..=n {
                let p2 = ((2 * j - 1) as f64 * x * p1 - (j - 1) as f64 * p0) / j as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}
