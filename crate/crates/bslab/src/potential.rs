//! Radial complex potentials, their norms, autocorrelation and the moments
//! Q0 and Q2 of the high-energy expansion of the determinant.

use crate::error::{invalid, BsError, Result};
use crate::quad::{integrate_segments, Quadrature};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Truncation level defining the effective support of decaying profiles.
pub const SUPPORT_CUTOFF: f64 = 1e-16;

/// Shape of a radial profile. The amplitude is carried separately.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Profile {
    /// exp(-(r/width)^2)
    Gaussian { width: f64 },
    /// 1 for r <= radius
    SquareWell { radius: f64 },
    /// exp(-decay * r)
    Exponential { decay: f64 },
    /// Piecewise-linear interpolation of tabulated values; `dv` optionally
    /// tabulates the radial derivative for the gradient moment.
    Table {
        r: Vec<f64>,
        v: Vec<Complex64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        dv: Option<Vec<Complex64>>,
    },
}

/// A radial potential V(|x|) = g * profile(|x|), truncated beyond `support`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Potential {
    pub profile: Profile,
    pub g: Complex64,
    pub support: f64,
    pub smoothness_m: u32,
}

/// Moments of the large-k expansion of log psi.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Moments {
    pub q0: Complex64,
    pub q2: Option<Complex64>,
}

impl Moments {
    /// I_j = Im Q_j for j = 0..=2, with I_1 = 0.
    pub fn i_list(&self) -> Vec<f64> {
        let mut out = vec![self.q0.im, 0.0];
        if let Some(q2) = self.q2 {
            out.push(q2.im);
        }
        out
    }
}

impl Potential {
    /// Gaussian g * exp(-r^2) with its 1e-16 support radius.
    pub fn gaussian(g: Complex64) -> Self {
        Self::gaussian_width(g, 1.0)
    }

    pub fn gaussian_width(g: Complex64, width: f64) -> Self {
        let support = width * (-SUPPORT_CUTOFF.ln()).sqrt();
        Potential { profile: Profile::Gaussian { width }, g, support, smoothness_m: 3 }
    }

    /// Constant g on the ball of the given radius.
    pub fn square_well(g: Complex64, radius: f64) -> Self {
        Potential { profile: Profile::SquareWell { radius }, g, support: radius, smoothness_m: 0 }
    }

    pub fn exponential(g: Complex64, decay: f64) -> Self {
        let support = -SUPPORT_CUTOFF.ln() / decay;
        Potential { profile: Profile::Exponential { decay }, g, support, smoothness_m: 0 }
    }

    /// Tabulated profile; the support is the last abscissa.
    pub fn table(r: Vec<f64>, v: Vec<Complex64>, dv: Option<Vec<Complex64>>) -> Result<Self> {
        if r.len() < 2 || r.len() != v.len() || dv.as_ref().is_some_and(|d| d.len() != r.len()) {
            return invalid("table profile needs at least two points and matching lengths");
        }
        if r[0] != 0.0 || r.windows(2).any(|p| p[1] <= p[0]) {
            return invalid("table abscissae must start at 0 and increase strictly");
        }
        let support = *r.last().unwrap();
        Ok(Potential { profile: Profile::Table { r, v, dv }, g: Complex64::new(1.0, 0.0), support, smoothness_m: 0 })
    }

    /// Zero potential (a Gaussian with vanishing amplitude).
    pub fn zero() -> Self {
        Self::gaussian(Complex64::new(0.0, 0.0))
    }

    pub fn is_zero(&self) -> bool {
        if self.g == Complex64::new(0.0, 0.0) {
            return true;
        }
        match &self.profile {
            Profile::Table { v, .. } => v.iter().all(|z| z.norm() == 0.0),
            _ => false,
        }
    }

    /// Same profile with amplitude multiplied by `s`.
    pub fn scaled(&self, s: Complex64) -> Self {
        let mut out = self.clone();
        match &mut out.profile {
            Profile::Table { v, dv, .. } => {
                v.iter_mut().for_each(|z| *z *= s);
                if let Some(d) = dv {
                    d.iter_mut().for_each(|z| *z *= s);
                }
            }
            _ => out.g *= s,
        }
        out
    }

    /// Checks shape parameters.
    pub fn validate(&self) -> Result<()> {
        let ok = match &self.profile {
            Profile::Gaussian { width } => *width > 0.0 && width.is_finite(),
            Profile::SquareWell { radius } => *radius > 0.0 && radius.is_finite(),
            Profile::Exponential { decay } => *decay > 0.0 && decay.is_finite(),
            Profile::Table { .. } => true,
        };
        if !ok || !(self.support > 0.0 && self.support.is_finite()) {
            return invalid("profile shape parameters and support radius must be positive and finite");
        }
        if !(self.g.re.is_finite() && self.g.im.is_finite()) {
            return invalid("amplitude must be finite");
        }
        Ok(())
    }

    /// Value V(r); exactly zero beyond the support radius.
    pub fn eval(&self, r: f64) -> Complex64 {
        if r > self.support {
            return Complex64::new(0.0, 0.0);
        }
        match &self.profile {
            Profile::Gaussian { width } => self.g * (-(r / width).powi(2)).exp(),
            Profile::SquareWell { .. } => self.g,
            Profile::Exponential { decay } => self.g * (-decay * r).exp(),
            Profile::Table { r: rs, v, .. } => self.g * interp(rs, v, r),
        }
    }

    /// Radial derivative V'(r), analytic per profile.
    pub fn deriv(&self, r: f64) -> Result<Complex64> {
        if r > self.support {
            return Ok(Complex64::new(0.0, 0.0));
        }
        match &self.profile {
            Profile::Gaussian { width } => Ok(self.eval(r) * (-2.0 * r / (width * width))),
            Profile::SquareWell { .. } => Ok(Complex64::new(0.0, 0.0)),
            Profile::Exponential { decay } => Ok(self.eval(r) * (-decay)),
            Profile::Table { r: rs, dv, .. } => match dv {
                Some(d) => Ok(self.g * interp(rs, d, r)),
                None => Err(BsError::Unsupported("table profile has no derivative data".into())),
            },
        }
    }

    /// Points where the profile or its derivative may be discontinuous.
    pub fn breakpoints(&self) -> Vec<f64> {
        match &self.profile {
            Profile::Table { r, .. } => r.clone(),
            _ => Vec::new(),
        }
    }

    /// Length over which the profile varies appreciably.
    pub fn length_scale(&self) -> f64 {
        match &self.profile {
            Profile::Gaussian { width } => *width,
            Profile::SquareWell { radius } => *radius,
            Profile::Exponential { decay } => 1.0 / decay,
            Profile::Table { r, .. } => r.windows(2).map(|p| p[1] - p[0]).fold(f64::INFINITY, f64::min).max(1e-3),
        }
    }

    /// Radius containing the part of the profile above `rel` times its maximum.
    pub fn effective_radius(&self, rel: f64) -> f64 {
        match &self.profile {
            Profile::Gaussian { width } => (width * (-rel.ln()).sqrt()).min(self.support),
            Profile::SquareWell { radius } => *radius,
            Profile::Exponential { decay } => (-rel.ln() / decay).min(self.support),
            Profile::Table { .. } => self.support,
        }
    }

    /// sup_r |V(r)|.
    pub fn sup_abs(&self) -> f64 {
        match &self.profile {
            Profile::Table { v, .. } => v.iter().map(|z| (self.g * z).norm()).fold(0.0, f64::max),
            _ => self.g.norm(),
        }
    }

    fn radial_integral<F: Fn(f64) -> f64>(&self, f: F) -> f64 {
        let panels = match &self.profile {
            Profile::Table { .. } => 1,
            _ => 24,
        };
        integrate_segments(0.0, self.support, &self.breakpoints(), panels, 20, f)
    }

    fn radial_integral_c<F: Fn(f64) -> Complex64>(&self, f: F) -> Complex64 {
        let panels = match &self.profile {
            Profile::Table { .. } => 1,
            _ => 24,
        };
        integrate_segments(0.0, self.support, &self.breakpoints(), panels, 20, f)
    }

    /// ||V||_p = (4 pi int |V|^p r^2 dr)^{1/p} for p in {1, 3/2, 2}.
    pub fn norm_lp(&self, p: f64) -> Result<f64> {
        if ![1.0, 1.5, 2.0].contains(&p) {
            return invalid(format!("unsupported exponent p = {p}; expected 1, 3/2 or 2"));
        }
        if self.is_zero() {
            return Ok(0.0);
        }
        let s = self.radial_integral(|r| self.eval(r).norm().powf(p) * r * r);
        Ok((4.0 * PI * s).powf(1.0 / p))
    }

    /// int_a^b s V(s) ds, with closed forms where they exist.
    pub fn first_moment(&self, a: f64, b: f64) -> Complex64 {
        let b = b.min(self.support);
        if b <= a {
            return Complex64::new(0.0, 0.0);
        }
        match &self.profile {
            Profile::Gaussian { width } => {
                let w2 = width * width;
                let ea = (-a * a / w2).exp();
                self.g * (-0.5 * w2 * ea * (-(b - a) * (b + a) / w2).exp_m1())
            }
            Profile::SquareWell { .. } => self.g * (0.5 * (b - a) * (b + a)),
            _ => {
                let panels = ((b - a) / self.length_scale()).ceil().clamp(1.0, 16.0) as usize;
                integrate_segments(a, b, &self.breakpoints(), panels, 16, |s| self.eval(s) * s)
            }
        }
    }

    /// Complex (non-conjugated) autocorrelation A(t) = int V(x - t e) V(x) dx.
    pub fn autocorrelation_raw(&self, t: f64) -> Complex64 {
        let rr = self.support;
        if self.is_zero() || t >= 2.0 * rr {
            return Complex64::new(0.0, 0.0);
        }
        if t == 0.0 {
            return self.radial_integral_c(|r| self.eval(r) * self.eval(r) * r * r) * (4.0 * PI);
        }
        let mut cuts = vec![t, rr - t, t - rr];
        cuts.extend(self.breakpoints());
        let panels = match &self.profile {
            Profile::Table { .. } => 1,
            _ => 12,
        };
        let inner = integrate_segments(0.0, rr, &cuts, panels, 16, |r| {
            let lo = (r - t).abs();
            if lo >= rr {
                return Complex64::new(0.0, 0.0);
            }
            self.eval(r) * r * self.first_moment(lo, r + t)
        });
        inner * (2.0 * PI / t)
    }

    /// gamma(t) = A(t) / (8 pi), the kernel of the closed form of psi_2.
    pub fn autocorrelation(&self, t: f64) -> Result<Complex64> {
        if t < 0.0 || !t.is_finite() {
            return invalid(format!("autocorrelation needs t >= 0, got {t}"));
        }
        Ok(self.autocorrelation_raw(t) / (8.0 * PI))
    }

    /// Q0 = (1/16 pi) int V^2 and Q2 = (1/(3 pi 4^3)) int ((grad V)^2 + 2 V^3).
    pub fn moments_q(&self) -> Result<Moments> {
        if self.is_zero() {
            let z = Complex64::new(0.0, 0.0);
            return Ok(Moments { q0: z, q2: Some(z) });
        }
        let q0 = self.radial_integral_c(|r| self.eval(r).powi(2) * r * r) * (4.0 * PI / (16.0 * PI));
        let q2 = if self.smoothness_m >= 1 {
            self.deriv(0.0)?;
            let s = self.radial_integral_c(|r| {
                let v = self.eval(r);
                let d = self.deriv(r).unwrap_or_default();
                (d * d + v * v * v * 2.0) * r * r
            });
            Some(s * (4.0 * PI / (3.0 * PI * 64.0)))
        } else {
            None
        };
        Ok(Moments { q0, q2 })
    }

    /// Q2 or an error when the smoothness class does not provide it.
    pub fn q2(&self) -> Result<Complex64> {
        self.moments_q()?
            .q2
            .ok_or_else(|| BsError::Unsupported("Q2 needs a potential of smoothness class m >= 1".into()))
    }
}

fn interp(rs: &[f64], v: &[Complex64], r: f64) -> Complex64 {
    let i = match rs.binary_search_by(|x| x.total_cmp(&r)) {
        Ok(i) => return v[i],
        Err(i) => i,
    };
    if i == 0 {
        return v[0];
    }
    if i >= rs.len() {
        return v[rs.len() - 1];
    }
    let s = (r - rs[i - 1]) / (rs[i] - rs[i - 1]);
    v[i - 1] * (1.0 - s) + v[i] * s
}

/// Tabulated autocorrelation on a composite rule over [0, 2R], reused for
/// every wave number at which the closed form of psi_2 is evaluated.
#[derive(Debug, Clone)]
pub struct AutocorrTable {
    rule: Quadrature,
    gamma: Vec<Complex64>,
}

impl AutocorrTable {
    pub fn new(v: &Potential) -> Self {
        let top = 2.0 * v.support;
        let mut breaks = vec![0.0];
        let mut h = 1e-4 * top;
        while h < 0.05 * top {
            breaks.push(h);
            h *= 3.0;
        }
        let start = *breaks.last().unwrap();
        let panels = ((top - start) / 0.08).ceil().max(4.0) as usize;
        for i in 1..=panels {
            breaks.push(start + (top - start) * i as f64 / panels as f64);
        }
        let rule = Quadrature::composite(&breaks, 16);
        let gamma = if v.is_zero() {
            vec![Complex64::new(0.0, 0.0); rule.len()]
        } else {
            rule.nodes.iter().map(|&t| v.autocorrelation_raw(t) / (8.0 * PI)).collect()
        };
        AutocorrTable { rule, gamma }
    }

    /// int_0^{2R} exp(2ikt) gamma(t) dt.
    pub fn psi2(&self, k: Complex64) -> Complex64 {
        let two_ik = Complex64::new(0.0, 2.0) * k;
        self.rule
            .nodes
            .iter()
            .zip(&self.rule.weights)
            .zip(&self.gamma)
            .map(|((&t, &w), &g)| (two_ik * t).exp() * g * w)
            .sum()
    }
}
