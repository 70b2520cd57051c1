//! Free-resolvent kernels in three dimensions and in partial waves.
//!
//! Spherical Bessel functions are handled through the scaled forms
//! `jhat_l(z) = j_l(z) (2l+1)!! / z^l` and
//! `hhat_l(z) = h_l(z) z^(l+1) / (-i (2l-1)!!)`, which stay of moderate size
//! for every order and vanish nowhere near the origin.

use crate::error::{invalid, BsError, Result};
use num_complex::Complex64;
use std::f64::consts::PI;

/// Largest |Im z| accepted before exponential factors approach overflow.
pub const MAX_IMAG_ARG: f64 = 600.0;

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Wave number in the closed upper half-plane, excluding the origin.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WaveNumber(Complex64);

impl WaveNumber {
    pub fn new(k: Complex64) -> Result<Self> {
        if !(k.re.is_finite() && k.im.is_finite()) {
            return invalid("wave number must be finite");
        }
        if k.im < 0.0 {
            return invalid(format!("wave number must satisfy Im k >= 0, got {k}"));
        }
        if k.norm() == 0.0 {
            return invalid("wave number must be nonzero");
        }
        Ok(WaveNumber(k))
    }

    pub fn value(self) -> Complex64 {
        self.0
    }
}

/// e^{ik|x-y|} / (4 pi |x-y|).
pub fn free_resolvent_kernel(x: [f64; 3], y: [f64; 3], k: Complex64) -> Result<Complex64> {
    let d = ((x[0] - y[0]).powi(2) + (x[1] - y[1]).powi(2) + (x[2] - y[2]).powi(2)).sqrt();
    if d == 0.0 {
        return Err(BsError::Singular("free resolvent kernel at coincident points".into()));
    }
    Ok((I * k * d).exp() / (4.0 * PI * d))
}

fn check_arg(z: Complex64) -> Result<()> {
    if !(z.re.is_finite() && z.im.is_finite()) {
        return Err(BsError::OutOfRange(format!("non-finite Bessel argument {z}")));
    }
    if z.im.abs() > MAX_IMAG_ARG {
        return Err(BsError::OutOfRange(format!("|Im z| = {} exceeds {MAX_IMAG_ARG}", z.im.abs())));
    }
    Ok(())
}

fn jhat0(z: Complex64) -> Complex64 {
    if z.norm() < 1e-4 {
        let z2 = z * z;
        Complex64::new(1.0, 0.0) - z2 / 6.0 + z2 * z2 / 120.0
    } else {
        z.sin() / z
    }
}

fn jhat1(z: Complex64) -> Complex64 {
    if z.norm() < 0.3 {
        let z2 = z * z;
        let one = Complex64::new(1.0, 0.0);
        one - z2 / 10.0 + z2 * z2 / 280.0 - z2 * z2 * z2 / 15120.0 + z2 * z2 * z2 * z2 / 1330560.0
    } else {
        (z.sin() - z * z.cos()) * 3.0 / (z * z * z)
    }
}

/// Scaled regular functions jhat_0 .. jhat_lmax by downward recurrence from
/// index lmax + 20 + ceil(|z|), normalized against the closed forms.
pub fn scaled_j_seq(lmax: usize, z: Complex64) -> Result<Vec<Complex64>> {
    check_arg(z)?;
    let z2 = z * z;
    let start = lmax + 20 + z.norm().ceil() as usize;
    let mut out = vec![Complex64::new(0.0, 0.0); lmax + 1];
    let mut f_next = Complex64::new(0.0, 0.0);
    let mut f = Complex64::new(1.0, 0.0);
    let mut f1 = f;
    let mut m = start;
    while m > 0 {
        if m <= lmax {
            out[m] = f;
        }
        if m == 1 {
            f1 = f;
        }
        let denom = ((2 * m + 1) * (2 * m + 3)) as f64;
        let f_prev = f - z2 * f_next / denom;
        f_next = f;
        f = f_prev;
        m -= 1;
        let big = f.norm();
        if big > 1e250 {
            f /= big;
            f_next /= big;
            for o in out.iter_mut() {
                *o /= big;
            }
        }
    }
    out[0] = f;
    let (e0, e1) = (jhat0(z), jhat1(z));
    let scale = if e0.norm() >= e1.norm() { e0 / out[0] } else { e1 / f1 };
    for o in out.iter_mut() {
        *o *= scale;
    }
    if lmax == 0 {
        out[0] = e0;
    }
    Ok(out)
}

/// Scaled outgoing functions hhat_0 .. hhat_lmax by upward recurrence, with
/// their derivatives in z.
pub fn scaled_h_seq(lmax: usize, z: Complex64) -> Result<(Vec<Complex64>, Vec<Complex64>)> {
    check_arg(z)?;
    let z2 = z * z;
    let e = (I * z).exp();
    let mut h = Vec::with_capacity(lmax + 1);
    let mut d = Vec::with_capacity(lmax + 1);
    h.push(e);
    d.push(I * e);
    if lmax >= 1 {
        h.push(e * (Complex64::new(1.0, 0.0) - I * z));
    }
    for l in 1..lmax {
        let next = h[l] - h[l - 1] * z2 / (((2 * l + 1) * (2 * l - 1)) as f64);
        h.push(next);
    }
    for l in 1..=lmax {
        d.push(z * h[l - 1] / ((2 * l - 1) as f64));
    }
    Ok((h, d))
}

/// z^l / (2l+1)!! as a running product.
fn power_over_double_factorial(l: usize, z: Complex64) -> Complex64 {
    let mut p = Complex64::new(1.0, 0.0);
    for m in 1..=l {
        p *= z / ((2 * m + 1) as f64);
    }
    p
}

/// Regular spherical Bessel function j_l(z).
pub fn spherical_bessel_j(l: usize, z: Complex64) -> Result<Complex64> {
    let seq = scaled_j_seq(l, z)?;
    let v = seq[l] * power_over_double_factorial(l, z);
    if !(v.re.is_finite() && v.im.is_finite()) {
        return Err(BsError::OutOfRange(format!("j_{l}({z}) overflows")));
    }
    Ok(v)
}

/// Spherical Hankel function of the first kind h_l^(1)(z).
pub fn spherical_hankel1(l: usize, z: Complex64) -> Result<Complex64> {
    if z.norm() == 0.0 {
        return Err(BsError::Singular("spherical Hankel function at z = 0".into()));
    }
    let (h, _) = scaled_h_seq(l, z)?;
    let mut f = -I / z;
    for m in 1..=l {
        f *= ((2 * m - 1) as f64) / z;
    }
    let v = h[l] * f;
    if !(v.re.is_finite() && v.im.is_finite()) {
        return Err(BsError::OutOfRange(format!("h_{l}({z}) overflows")));
    }
    Ok(v)
}

/// Irregular spherical Bessel function y_l(z) = (h_l(z) - j_l(z)) / i.
pub fn spherical_bessel_y(l: usize, z: Complex64) -> Result<Complex64> {
    Ok((spherical_hankel1(l, z)? - spherical_bessel_j(l, z)?) / I)
}

/// Derivative of j_l from the three-term relations.
pub fn spherical_bessel_j_deriv(l: usize, z: Complex64) -> Result<Complex64> {
    if l == 0 {
        return Ok(-spherical_bessel_j(1, z)?);
    }
    Ok(spherical_bessel_j(l - 1, z)? - spherical_bessel_j(l, z)? * ((l + 1) as f64) / z)
}

/// Derivative of y_l from the three-term relations.
pub fn spherical_bessel_y_deriv(l: usize, z: Complex64) -> Result<Complex64> {
    if l == 0 {
        return Ok(-spherical_bessel_y(1, z)?);
    }
    Ok(spherical_bessel_y(l - 1, z)? - spherical_bessel_y(l, z)? * ((l + 1) as f64) / z)
}

/// Kernel of the l-th partial-wave block of the free resolvent on
/// L^2((0, inf), dr): i k j_l(k r<) h_l(k r>) r r'.
pub fn radial_green(l: usize, k: Complex64, r: f64, rp: f64) -> Result<Complex64> {
    if !(r > 0.0 && rp > 0.0) {
        return invalid("radial_green needs r, r' > 0");
    }
    WaveNumber::new(k)?;
    let (rl, rg) = if r <= rp { (r, rp) } else { (rp, r) };
    let j = scaled_j_seq(l, k * rl)?[l];
    let (h, _) = scaled_h_seq(l, k * rg)?;
    Ok(scaled_green(l, j, h[l], rl, rg))
}

/// Partial-wave Green function from scaled Bessel values at k r< and k r>.
#[inline]
pub fn scaled_green(l: usize, jhat_lo: Complex64, hhat_hi: Complex64, r_lo: f64, r_hi: f64) -> Complex64 {
    jhat_lo * hhat_hi * ((r_lo / r_hi).powi(l as i32) * r_lo / (2 * l + 1) as f64)
}

/// Legendre polynomial P_l(x).
pub fn legendre_p(l: usize, x: f64) -> f64 {
    let (mut p0, mut p1) = (1.0, x);
    if l == 0 {
        return 1.0;
    }
    for j in 2..=l {
        let p2 = ((2 * j - 1) as f64 * x * p1 - (j - 1) as f64 * p0) / j as f64;
        p0 = p1;
        p1 = p2;
    }
    p1
}

/// Truncated partial-wave sum sum_{l<=L} (2l+1)/(4 pi r r') g_l P_l(cos theta).
pub fn partial_wave_kernel(lmax: usize, k: Complex64, r: f64, rp: f64, cos_theta: f64) -> Result<Complex64> {
    WaveNumber::new(k)?;
    let (rl, rg) = if r <= rp { (r, rp) } else { (rp, r) };
    let js = scaled_j_seq(lmax, k * rl)?;
    let (hs, _) = scaled_h_seq(lmax, k * rg)?;
    let mut sum = Complex64::new(0.0, 0.0);
    for l in 0..=lmax {
        let g = scaled_green(l, js[l], hs[l], rl, rg);
        sum += g * ((2 * l + 1) as f64 * legendre_p(l, cos_theta));
    }
    Ok(sum / (4.0 * PI * r * rp))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn rel(a: Complex64, b: Complex64) -> f64 {
        (a - b).norm() / b.norm()
    }

    #[test]
    fn kernel_examples() {
        let k = free_resolvent_kernel([0.0; 3], [1.0, 0.0, 0.0], c(0.0, 1.0)).unwrap();
        assert!((k.re - (-1.0f64).exp() / (4.0 * PI)).abs() < 1e-15 && k.im.abs() < 1e-16);
        let k0 = free_resolvent_kernel([0.0; 3], [0.0, 1.0, 0.0], c(1e-12, 0.0)).unwrap();
        assert!((k0.re - 1.0 / (4.0 * PI)).abs() < 1e-12);
        let kr = free_resolvent_kernel([0.0; 3], [0.0, 0.0, 2.0], c(3.3, 0.0)).unwrap();
        assert!((kr.norm() - 1.0 / (8.0 * PI)).abs() < 1e-15);
        assert!(free_resolvent_kernel([1.0; 3], [1.0; 3], c(1.0, 0.0)).is_err());
    }

    #[test]
    fn closed_forms() {
        let one = c(1.0, 0.0);
        assert!(rel(spherical_bessel_j(0, one).unwrap(), c(1f64.sin(), 0.0)) < 1e-15);
        assert!(rel(spherical_bessel_j(1, one).unwrap(), c(1f64.sin() - 1f64.cos(), 0.0)) < 1e-14);
        assert!((spherical_bessel_j(0, c(1e-9, 0.0)).unwrap() - one).norm() < 1e-15);
        let h0i = spherical_hankel1(0, c(0.0, 1.0)).unwrap();
        assert!(rel(h0i, c(-(-1.0f64).exp(), 0.0)) < 1e-15);
        let h01 = spherical_hankel1(0, one).unwrap();
        assert!(rel(h01, c(1f64.sin(), -1f64.cos())) < 1e-15);
        let h11 = spherical_hankel1(1, one).unwrap();
        assert!(rel(h11, -(I * 1.0).exp() * c(1.0, 1.0)) < 1e-15);
        assert!(spherical_hankel1(0, c(0.0, 0.0)).is_err());
        assert!(spherical_bessel_j(3, c(1.0, 900.0)).is_err());
    }

    #[test]
    fn reference_values() {
        // Values from an arbitrary-precision evaluation of the closed forms.
        let cases: [(usize, Complex64, Complex64); 6] = [
            (5, c(2.0, 0.0), c(0.0026351697702441173, 0.0)),
            (10, c(30.0, 5.0), c(-0.98183467028511265, -1.5691498687839946)),
            (40, c(1.0, 1.0), c(1.6225619475729726e-55, -1.9549884060028273e-57)),
            (3, c(0.001, 0.0), c(9.5238089947090067e-12, 0.0)),
            (20, c(95.0, 1.0), c(0.0026110727070910309, -0.011987392105241618)),
            (60, c(50.0, 30.0), c(522.57884870718984, 191.73347369306993)),
        ];
        for (l, z, want) in cases {
            let got = spherical_bessel_j(l, z).unwrap();
            assert!(rel(got, want) < 1e-12, "j_{l}({z}) = {got}, want {want}");
        }
    }

    #[test]
    fn wronskian() {
        for &z in &[c(0.7, 0.2), c(3.0, 1.0), c(12.0, 0.5), c(-2.0, 4.0), c(25.0, 0.0)] {
            for l in [0usize, 1, 4, 9] {
                let w = spherical_bessel_j(l, z).unwrap() * spherical_bessel_y_deriv(l, z).unwrap()
                    - spherical_bessel_j_deriv(l, z).unwrap() * spherical_bessel_y(l, z).unwrap();
                let want = Complex64::new(1.0, 0.0) / (z * z);
                assert!(rel(w, want) < 1e-10, "l={l} z={z} w={w}");
            }
        }
    }

    #[test]
    fn green_l0_closed_form_and_symmetry() {
        let k = c(1.2, 0.4);
        let (r, rp) = (0.6, 1.9);
        let g = radial_green(0, k, r, rp).unwrap();
        let want = (I * k * rp).exp() * (k * r).sin() / k;
        assert!(rel(g, want) < 1e-14);
        for l in [0, 3, 7] {
            let a = radial_green(l, k, r, rp).unwrap();
            let b = radial_green(l, k, rp, r).unwrap();
            assert_eq!(a, b);
        }
        let lhs = radial_green(2, k, 1.0, 1.0 - 1e-9).unwrap();
        let rhs = radial_green(2, k, 1.0, 1.0 + 1e-9).unwrap();
        assert!(rel(lhs, rhs) < 1e-8);
    }

    #[test]
    fn partial_wave_completeness() {
        let k = c(1.0, 0.3);
        let (r, rp, th) = (1.0, 0.7, PI / 3.0);
        let d = (r * r + rp * rp - 2.0 * r * rp * th.cos()).sqrt();
        let want = (I * k * d).exp() / (4.0 * PI * d);
        // The omitted orders l > 40 carry a relative weight of 6.55e-8 here.
        let got40 = partial_wave_kernel(40, k, r, rp, th.cos()).unwrap();
        assert!((rel(got40, want) - 6.5538e-8).abs() < 1e-11, "{}", rel(got40, want));
        let got80 = partial_wave_kernel(80, k, r, rp, th.cos()).unwrap();
        assert!(rel(got80, want) < 1e-13);
    }

    #[test]
    fn derivative_of_scaled_hankel() {
        let z = c(2.3, 0.7);
        let eps = 1e-6;
        let (h, d) = scaled_h_seq(6, z).unwrap();
        let (hp, _) = scaled_h_seq(6, z + eps).unwrap();
        let (hm, _) = scaled_h_seq(6, z - eps).unwrap();
        for l in 0..=6 {
            let fd = (hp[l] - hm[l]) / (2.0 * eps);
            assert!(rel(d[l], fd) < 1e-8, "l={l}");
            assert!(h[l].norm() > 0.0);
        }
    }
}
