//! Independent reference computations used to validate the determinant
//! pipeline: bound-state counts by zero-energy shooting, the s-wave
//! square-well binding condition, and the Hilbert-Schmidt norm as a double
//! integral in bipolar coordinates.

use crate::error::{invalid, Result};
use crate::potential::{Potential, Profile};
use crate::quad::Quadrature;
use num_complex::Complex64;
use std::f64::consts::PI;

/// Bound states of one channel of a real potential.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ChannelCount {
    pub l: usize,
    pub states: usize,
}

fn require_real(v: &Potential) -> Result<()> {
    let imag = match &v.profile {
        Profile::Table { v: vals, .. } => vals.iter().any(|z| (v.g * z).im != 0.0),
        _ => v.g.im != 0.0,
    };
    if imag {
        return invalid("shooting oracle needs a real potential");
    }
    Ok(())
}

/// Number of zeros in (0, inf) of the regular zero-energy solution of
/// u'' = (l(l+1)/r^2 + V) u, which equals the number of bound states of the
/// channel (Sturm oscillation). The solution is integrated with classical
/// RK4 on [0, R] and continued analytically beyond the support.
pub fn shooting_count_channel(v: &Potential, l: usize, steps: usize) -> Result<usize> {
    require_real(v)?;
    if steps < 10 {
        return invalid("shooting needs at least 10 steps");
    }
    let r_end = v.support;
    let lf = l as f64;
    let cent = lf * (lf + 1.0);
    let rhs = |r: f64, u: f64, du: f64| -> (f64, f64) { (du, (cent / (r * r) + v.eval(r).re) * u) };
    // start on the regular branch u = r^(l+1) at a small radius
    let mut r = r_end * 1e-6;
    let mut u = 1.0;
    let mut du = (lf + 1.0) / r;
    let h = (r_end - r) / steps as f64;
    let mut nodes = 0;
    for _ in 0..steps {
        let (k1u, k1d) = rhs(r, u, du);
        let (k2u, k2d) = rhs(r + 0.5 * h, u + 0.5 * h * k1u, du + 0.5 * h * k1d);
        let (k3u, k3d) = rhs(r + 0.5 * h, u + 0.5 * h * k2u, du + 0.5 * h * k2d);
        let (k4u, k4d) = rhs(r + h, u + h * k3u, du + h * k3d);
        let un = u + h / 6.0 * (k1u + 2.0 * k2u + 2.0 * k3u + k4u);
        let dn = du + h / 6.0 * (k1d + 2.0 * k2d + 2.0 * k3d + k4d);
        if un == 0.0 || un.signum() != u.signum() {
            nodes += 1;
        }
        r += h;
        u = un;
        du = dn;
        let s = u.abs().max(du.abs());
        if s > 1e100 {
            u /= s;
            du /= s;
        }
    }
    // outside: u = a r^(l+1) + b r^(-l); one more node iff a b < 0 with the
    // crossing radius beyond R
    let p = 2.0 * lf + 1.0;
    let a = (lf * u + r * du) / (p * r.powf(lf + 1.0));
    let b = ((lf + 1.0) * u - r * du) * r.powf(lf) / p;
    if a != 0.0 && b != 0.0 && a.signum() != b.signum() {
        let cross = (-b / a).powf(1.0 / p);
        if cross > r {
            nodes += 1;
        }
    }
    Ok(nodes)
}

/// Bound-state counts for channels 0, 1, ... until a channel holds none.
/// The total with multiplicities is sum (2l+1) states.
pub fn shooting_count(v: &Potential, steps: usize) -> Result<Vec<ChannelCount>> {
    let mut out = Vec::new();
    for l in 0.. {
        let states = shooting_count_channel(v, l, steps)?;
        if states == 0 {
            break;
        }
        out.push(ChannelCount { l, states });
    }
    Ok(out)
}

/// Total number of bound states counted with multiplicity 2l+1.
pub fn total_with_multiplicity(counts: &[ChannelCount]) -> usize {
    counts.iter().map(|c| (2 * c.l + 1) * c.states).sum()
}

/// Binding wave numbers kappa > 0 of the s-wave square well of depth v0 and
/// radius `radius`: sqrt(v0 - kappa^2) cot(sqrt(v0 - kappa^2) R) = -kappa,
/// sorted in decreasing order (deepest first).
pub fn square_well_s_roots(v0: f64, radius: f64) -> Result<Vec<f64>> {
    if !(v0 > 0.0 && radius > 0.0) {
        return invalid("square well needs positive depth and radius");
    }
    // in terms of q = sqrt(v0 - kappa^2) R: f(q) = q cos q + kappa R sin q
    let qmax = v0.sqrt() * radius;
    let f = |q: f64| {
        let kr = (qmax * qmax - q * q).max(0.0).sqrt();
        q * q.cos() + kr * q.sin()
    };
    let n = 20_000;
    let mut roots = Vec::new();
    let mut qa = 1e-12;
    let mut fa = f(qa);
    for i in 1..=n {
        let qb = qmax * i as f64 / n as f64;
        let fb = f(qb);
        if fa.signum() != fb.signum() && qb < qmax {
            let (mut lo, mut hi) = (qa, qb);
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if f(lo).signum() == f(mid).signum() {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            let q = 0.5 * (lo + hi);
            roots.push((qmax * qmax - q * q).sqrt() / radius);
        }
        qa = qb;
        fa = fb;
    }
    roots.sort_by(|a, b| b.partial_cmp(a).unwrap());
    Ok(roots)
}

/// ||Y0(k)||_{B2}^2 = (1/(4 pi)^2) int int |V(x)||V(y)| e^{-2 Im k |x-y|} / |x-y|^2 dx dy
/// = (1/(4 pi)) int_0^{2R} e^{-2 Im k s} A_{|V|}(s) ds, where A_{|V|} is the
/// autocorrelation of |V|.
pub fn hs_norm_sq_bipolar(v: &Potential, k: Complex64) -> f64 {
    if v.is_zero() {
        return 0.0;
    }
    let abs_v = abs_potential(v);
    let top = 2.0 * v.support;
    let mut breaks = vec![0.0];
    let mut h = 1e-4 * top;
    while h < 0.05 * top {
        breaks.push(h);
        h *= 3.0;
    }
    let start = *breaks.last().unwrap();
    let panels = ((top - start) / 0.1).ceil() as usize;
    for i in 1..=panels {
        breaks.push(start + (top - start) * i as f64 / panels as f64);
    }
    let rule = Quadrature::composite(&breaks, 16);
    let s: f64 = rule.integrate(|t| (-2.0 * k.im * t).exp() * abs_v.autocorrelation_raw(t).re);
    s / (4.0 * PI)
}

fn abs_potential(v: &Potential) -> Potential {
    match &v.profile {
        Profile::Table { r, v: vals, .. } => {
            let a: Vec<Complex64> = vals.iter().map(|z| Complex64::new((v.g * z).norm(), 0.0)).collect();
            Potential { profile: Profile::Table { r: r.clone(), v: a, dv: None }, g: Complex64::new(1.0, 0.0), ..v.clone() }
        }
        _ => Potential { g: Complex64::new(v.g.norm(), 0.0), ..v.clone() },
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn well(v0: f64) -> Potential {
        Potential::square_well(Complex64::new(-v0, 0.0), 1.0)
    }

    #[test]
    fn square_well_counts() {
        assert_eq!(total_with_multiplicity(&shooting_count(&well(1.0), 4000).unwrap()), 0);
        let c5 = shooting_count(&well(5.0), 4000).unwrap();
        assert_eq!(c5, vec![ChannelCount { l: 0, states: 1 }]);
        let c12 = shooting_count(&well(12.0), 4000).unwrap();
        assert_eq!(total_with_multiplicity(&c12), 4);
    }

    #[test]
    fn s_wave_root_satisfies_binding_condition() {
        let roots = square_well_s_roots(5.0, 1.0).unwrap();
        assert_eq!(roots.len(), 1);
        let kappa = roots[0];
        let q = (5.0 - kappa * kappa).sqrt();
        assert!((q / q.tan() + kappa).abs() < 1e-12);
        assert!(square_well_s_roots(1.0, 1.0).unwrap().is_empty());
    }

    #[test]
    fn p_wave_threshold_matches_bessel_zero() {
        // the l = 1 channel binds once sqrt(V0) R exceeds pi
        let below = Potential::square_well(Complex64::new(-(PI * PI) * 0.99, 0.0), 1.0);
        let above = Potential::square_well(Complex64::new(-(PI * PI) * 1.01, 0.0), 1.0);
        assert_eq!(shooting_count_channel(&below, 1, 4000).unwrap(), 0);
        assert_eq!(shooting_count_channel(&above, 1, 4000).unwrap(), 1);
    }

    #[test]
    fn bipolar_norm_of_gaussian_at_zero_decay() {
        // for Im k = 0 the double integral is int A(s) ds / (4 pi) with
        // A(s) = (pi/2)^{3/2} e^{-s^2/2} for the unit Gaussian
        let v = Potential::gaussian(Complex64::new(0.6, 0.8));
        let got = hs_norm_sq_bipolar(&v, Complex64::new(1.0, 0.0));
        let want = (PI / 2.0).powf(1.5) * (PI / 2.0).sqrt() / (4.0 * PI);
        assert!((got - want).abs() < 1e-10 * want, "{got} {want}");
    }
}
