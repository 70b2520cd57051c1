//! Gauss-Legendre rules, composite panel rules and the tail-summation helpers
//! used to extrapolate partial-wave series.

use crate::error::{invalid, Result};
use nalgebra::{DMatrix, DVector};
use std::f64::consts::PI;

/// Gauss-Legendre nodes and weights on [-1, 1], nodes increasing.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, z);
            dp = d;
            let dz = p / d;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, z);
        dp = if d.is_finite() { d } else { dp };
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    if n % 2 == 1 {
        x[n / 2] = 0.0;
    }
    (x, w)
}

fn legendre_with_derivative(n: usize, z: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = z;
    if n == 0 {
        return (1.0, 0.0);
    }
    for j in 2..=n {
        let p2 = ((2 * j - 1) as f64 * z * p1 - (j - 1) as f64 * p0) / j as f64;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (z * p1 - p0) / (z * z - 1.0);
    (p1, d)
}

/// A quadrature rule on a finite interval: nodes strictly increasing, weights positive.
#[derive(Debug, Clone, PartialEq)]
pub struct Quadrature {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl Quadrature {
    /// Gauss-Legendre rule with `n` nodes mapped to [a, b].
    pub fn gauss(a: f64, b: f64, n: usize) -> Self {
        let (x, w) = gauss_legendre(n);
        let h = 0.5 * (b - a);
        let c = 0.5 * (b + a);
        Quadrature {
            nodes: x.iter().map(|&t| c + h * t).collect(),
            weights: w.iter().map(|&t| h * t).collect(),
        }
    }

    /// Composite Gauss-Legendre rule of `per_panel` nodes on consecutive
    /// panels delimited by `breaks` (strictly increasing).
    pub fn composite(breaks: &[f64], per_panel: usize) -> Self {
        let (x, w) = gauss_legendre(per_panel);
        let mut nodes = Vec::with_capacity(per_panel * breaks.len());
        let mut weights = Vec::with_capacity(per_panel * breaks.len());
        for pair in breaks.windows(2) {
            let (a, b) = (pair[0], pair[1]);
            if b <= a {
                continue;
            }
            let h = 0.5 * (b - a);
            let c = 0.5 * (b + a);
            for (&t, &wt) in x.iter().zip(&w) {
                nodes.push(c + h * t);
                weights.push(h * wt);
            }
        }
        Quadrature { nodes, weights }
    }

    /// Uniform panels on [a, b].
    pub fn uniform_panels(a: f64, b: f64, panels: usize, per_panel: usize) -> Self {
        let breaks: Vec<f64> = (0..=panels)
            .map(|i| a + (b - a) * i as f64 / panels as f64)
            .collect();
        Self::composite(&breaks, per_panel)
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Applies the rule to a function.
    pub fn integrate<T, F>(&self, f: F) -> T
    where
        T: std::iter::Sum<T> + std::ops::Mul<f64, Output = T>,
        F: Fn(f64) -> T,
    {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| f(x) * w)
            .sum()
    }
}

/// Gauss-Legendre rule on [0, R] with `n` nodes.
pub fn build_quadrature(r_max: f64, n: usize) -> Result<Quadrature> {
    if n < 2 {
        return invalid(format!("quadrature order must be at least 2, got {n}"));
    }
    if !(r_max > 0.0 && r_max.is_finite()) {
        return invalid(format!("support radius must be positive, got {r_max}"));
    }
    Ok(Quadrature::gauss(0.0, r_max, n))
}

/// Splits [a, b] at the given interior points and integrates `f` with a
/// composite rule of `panels` equal pieces per segment.
pub fn integrate_segments<T, F>(a: f64, b: f64, interior: &[f64], panels: usize, order: usize, f: F) -> T
where
    T: std::iter::Sum<T> + std::ops::Mul<f64, Output = T> + std::ops::Add<Output = T>,
    F: Fn(f64) -> T,
{
    let mut pts = vec![a];
    let mut cuts: Vec<f64> = interior.iter().copied().filter(|&x| x > a && x < b).collect();
    cuts.sort_by(|x, y| x.total_cmp(y));
    pts.extend(cuts);
    pts.push(b);
    let mut breaks = Vec::new();
    for pair in pts.windows(2) {
        for i in 0..panels {
            breaks.push(pair[0] + (pair[1] - pair[0]) * i as f64 / panels as f64);
        }
    }
    breaks.push(b);
    Quadrature::composite(&breaks, order).integrate(f)
}

/// Hurwitz zeta function for integer order s >= 2 and a > 0.
pub fn hurwitz_zeta(s: u32, a: f64) -> f64 {
    const B2K: [f64; 8] = [
        1.0 / 6.0,
        -1.0 / 30.0,
        1.0 / 42.0,
        -1.0 / 30.0,
        5.0 / 66.0,
        -691.0 / 2730.0,
        7.0 / 6.0,
        -3617.0 / 510.0,
    ];
    let sf = s as f64;
    let n_direct = 12usize;
    let mut sum = 0.0;
    for n in 0..n_direct {
        sum += (a + n as f64).powf(-sf);
    }
    let x = a + n_direct as f64;
    sum += x.powf(1.0 - sf) / (sf - 1.0) + 0.5 * x.powf(-sf);
    let mut rising = sf;
    let mut fact = 2.0;
    let mut xpow = x.powf(-sf - 1.0);
    for (k, b) in B2K.iter().enumerate() {
        sum += b / fact * rising * xpow;
        let k2 = 2.0 * (k as f64 + 1.0);
        rising *= (sf + k2 - 1.0) * (sf + k2);
        fact *= (k2 + 1.0) * (k2 + 2.0);
        xpow /= x * x;
    }
    sum
}

/// Result of extrapolating a partial-wave series beyond its last computed term.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TailEstimate<T> {
    /// Estimated sum of all omitted terms.
    pub tail: T,
    /// Spread between two fits of different order, used as an error estimate.
    pub spread: f64,
}

/// Fits c_l ~ sum_m alpha_m nu^{-m}, nu = l + 1/2, over the last `window`
/// values of `terms` (indexed by l starting at 0) with powers
/// m0 .. m0 + nfit - 1, and returns the sum of the fitted model over l > L.
fn fit_tail_once(terms: &[num_complex::Complex64], m0: u32, nfit: usize, window: usize) -> Option<num_complex::Complex64> {
    let l_last = terms.len().checked_sub(1)?;
    if window < nfit || window > terms.len() {
        return None;
    }
    let first = terms.len() - window;
    let mut a = DMatrix::<f64>::zeros(window, nfit);
    let mut br = DVector::<f64>::zeros(window);
    let mut bi = DVector::<f64>::zeros(window);
    for (row, l) in (first..terms.len()).enumerate() {
        let nu = l as f64 + 0.5;
        let scale = nu.powi(m0 as i32);
        for j in 0..nfit {
            a[(row, j)] = nu.powi(-(j as i32));
        }
        br[row] = terms[l].re * scale;
        bi[row] = terms[l].im * scale;
    }
    let svd = a.svd(true, true);
    let xr = svd.solve(&br, 1e-14).ok()?;
    let xi = svd.solve(&bi, 1e-14).ok()?;
    let start = l_last as f64 + 1.5;
    let mut tail = num_complex::Complex64::new(0.0, 0.0);
    for j in 0..nfit {
        let z = hurwitz_zeta(m0 + j as u32, start);
        tail += num_complex::Complex64::new(xr[j], xi[j]) * z;
    }
    Some(tail)
}

/// Tail of a series with terms decaying like nu^{-m0}, estimated from two
/// least-squares fits of orders `nfit` and `nfit - 1`.
pub fn fit_tail(terms: &[num_complex::Complex64], m0: u32, nfit: usize) -> TailEstimate<num_complex::Complex64> {
    let zero = num_complex::Complex64::new(0.0, 0.0);
    let window = (2 * nfit + 2).min(terms.len());
    if terms.len() < 4 || nfit < 2 {
        return TailEstimate { tail: zero, spread: f64::INFINITY };
    }
    let nfit = nfit.min(window / 2).max(2);
    let hi = fit_tail_once(terms, m0, nfit, window);
    let lo = fit_tail_once(terms, m0, nfit - 1, window);
    match (hi, lo) {
        (Some(h), Some(l)) => TailEstimate { tail: h, spread: (h - l).norm() },
        (Some(h), None) => TailEstimate { tail: h, spread: h.norm() },
        _ => TailEstimate { tail: zero, spread: f64::INFINITY },
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_point_rule() {
        let q = build_quadrature(1.0, 2).unwrap();
        let s = 1.0 / 3f64.sqrt();
        assert!((q.nodes[0] - (1.0 - s) / 2.0).abs() < 1e-15);
        assert!((q.nodes[1] - (1.0 + s) / 2.0).abs() < 1e-15);
        assert!((q.weights[0] - 0.5).abs() < 1e-15);
        assert!((q.weights[1] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn cubic_exactness_two_points() {
        let r = 2.7;
        let q = build_quadrature(r, 2).unwrap();
        let v: f64 = q.integrate(|x| x * x);
        assert!((v - r * r * r / 3.0).abs() < 1e-14);
    }

    #[test]
    fn exponential_twenty_points() {
        let q = build_quadrature(1.0, 20).unwrap();
        let v: f64 = q.integrate(|x| (-x).exp());
        assert!((v - (1.0 - (-1.0f64).exp())).abs() < 1e-15);
    }

    #[test]
    fn rejects_small_order() {
        assert!(build_quadrature(1.0, 1).is_err());
    }

    #[test]
    fn large_rule_weights_sum() {
        let (x, w) = gauss_legendre(1024);
        let s: f64 = w.iter().sum();
        assert!((s - 2.0).abs() < 1e-13);
        assert!(x.windows(2).all(|p| p[0] < p[1]));
        assert!(w.iter().all(|&v| v > 0.0));
        let i4: f64 = x.iter().zip(&w).map(|(a, b)| a.powi(4) * b).sum();
        assert!((i4 - 0.4).abs() < 1e-13);
    }

    #[test]
    fn hurwitz_against_riemann() {
        let z2 = hurwitz_zeta(2, 1.0);
        assert!((z2 - PI * PI / 6.0).abs() < 1e-14);
        let z4 = hurwitz_zeta(4, 1.0);
        assert!((z4 - PI.powi(4) / 90.0).abs() < 1e-14);
        let z3 = hurwitz_zeta(3, 3.0);
        assert!((z3 - (1.2020569031595942 - 1.0 - 0.125)).abs() < 1e-14);
    }

    #[test]
    fn tail_of_model_series_is_exact() {
        use num_complex::Complex64;
        let terms: Vec<Complex64> = (0..30)
            .map(|l| {
                let nu = l as f64 + 0.5;
                Complex64::new(2.0 / nu.powi(2) - 1.0 / nu.powi(3), 0.5 / nu.powi(4))
            })
            .collect();
        let est = fit_tail(&terms, 2, 4);
        let exact = Complex64::new(
            2.0 * hurwitz_zeta(2, 30.5) - hurwitz_zeta(3, 30.5),
            0.5 * hurwitz_zeta(4, 30.5),
        );
        assert!((est.tail - exact).norm() < 1e-12, "{:?} {:?}", est, exact);
    }
}
