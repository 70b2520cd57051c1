//! Hardy-space tools on the upper half-plane: Cauchy transforms of boundary
//! data h(t) = log|f(t + i0)|, Blaschke products and their expansion at
//! infinity, the moment functionals J_j, and the check of the inner-outer
//! factorization f = B e^{iM} of the determinant.

use crate::det::DetEngine;
use crate::error::{invalid, BsError, Result};
use crate::quad::gauss_legendre;
use crate::spectra::{blaschke_coeffs, ZeroSet};
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

type C = Complex64;
const ZERO: C = C::new(0.0, 0.0);

/// Gauss-Legendre nodes per panel of the boundary grid.
const PANEL: usize = 16;

/// Lowest admissible Im k of a factorization probe.
pub const PROBE_FLOOR: f64 = 1e-2;

/// Symmetric boundary grid t = +-T u^3 with composite Gauss-Legendre nodes
/// in u on (0, 1]. Returns nodes in increasing order and their weights; the
/// negative half is the exact mirror image of the positive half.
pub fn graded_grid(n: usize, t_max: f64) -> Result<(Vec<f64>, Vec<f64>)> {
    if n == 0 || n % (2 * PANEL) != 0 {
        return invalid(format!("boundary grid size must be a positive multiple of {}, got {n}", 2 * PANEL));
    }
    if !(t_max > 0.0 && t_max.is_finite()) {
        return invalid(format!("T_max must be positive, got {t_max}"));
    }
    let (x, w) = gauss_legendre(PANEL);
    let panels = n / (2 * PANEL);
    let mut pos_t = Vec::with_capacity(n / 2);
    let mut pos_w = Vec::with_capacity(n / 2);
    for p in 0..panels {
        let a = p as f64 / panels as f64;
        let half = 0.5 / panels as f64;
        for (&xi, &wi) in x.iter().zip(&w) {
            let u = a + half * (xi + 1.0);
            pos_t.push(t_max * u * u * u);
            pos_w.push(3.0 * t_max * u * u * half * wi);
        }
    }
    let mut t: Vec<f64> = pos_t.iter().rev().map(|&x| -x).collect();
    let mut wts: Vec<f64> = pos_w.iter().rev().copied().collect();
    t.extend_from_slice(&pos_t);
    wts.extend_from_slice(&pos_w);
    Ok((t, wts))
}

/// Samples of h = log|f(t + i0)| on the graded grid, with the coefficients
/// I_0, I_1, ... of the expansion h(t) ~ sum_j I_j t^{-(j+1)} used beyond
/// +-T_max.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundaryData {
    pub t: Vec<f64>,
    pub weights: Vec<f64>,
    pub h: Vec<f64>,
    pub tail_coeffs: Vec<f64>,
    pub t_max: f64,
}

impl BoundaryData {
    /// Boundary data from values at the nodes of `graded_grid(h.len(), t_max)`.
    pub fn new(t_max: f64, h: Vec<f64>, tail_coeffs: Vec<f64>) -> Result<Self> {
        let (t, weights) = graded_grid(h.len(), t_max)?;
        if h.iter().chain(&tail_coeffs).any(|x| !x.is_finite()) {
            return invalid("boundary samples and tail coefficients must be finite");
        }
        Ok(BoundaryData { t, weights, h, tail_coeffs, t_max })
    }

    /// Samples h at the grid nodes (in parallel, results in node order).
    pub fn from_fn<F>(n: usize, t_max: f64, tail_coeffs: Vec<f64>, f: F) -> Result<Self>
    where
        F: Fn(f64) -> Result<f64> + Sync,
    {
        let (t, _) = graded_grid(n, t_max)?;
        let h: Vec<f64> = t.par_iter().map(|&x| f(x)).collect::<Result<_>>()?;
        Self::new(t_max, h, tail_coeffs)
    }

    /// Rebuilds boundary data from stored (t, h) pairs. The nodes must be
    /// those of a graded grid; T_max is recovered from the outermost node.
    pub fn from_samples(t: &[f64], h: &[f64], tail_coeffs: Vec<f64>) -> Result<Self> {
        if t.len() != h.len() {
            return invalid(format!("{} nodes but {} values", t.len(), h.len()));
        }
        let (unit, _) = graded_grid(t.len(), 1.0)?;
        let last = *t.last().unwrap_or(&0.0);
        let t_max = last / unit[unit.len() - 1];
        let out = Self::new(t_max, h.to_vec(), tail_coeffs)?;
        for (a, b) in out.t.iter().zip(t) {
            if (a - b).abs() > 1e-12 * t_max {
                return invalid(format!("node {b} does not belong to the graded grid of size {} and T_max {t_max}", t.len()));
            }
        }
        Ok(out)
    }

    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    /// Least-squares fit of I_0 .. I_{order-1} from the samples with
    /// T_max/2 <= |t| <= T_max.
    pub fn fit_tail_coeffs(&self, order: usize) -> Result<Vec<f64>> {
        let rows: Vec<usize> = (0..self.len()).filter(|&i| self.t[i].abs() >= 0.5 * self.t_max).collect();
        if order == 0 || rows.len() < 2 * order {
            return invalid(format!("cannot fit {order} tail coefficients from {} samples", rows.len()));
        }
        // columns scaled by T^{j+1} so that all entries are of order one
        let mut a = DMatrix::<f64>::zeros(rows.len(), order);
        let mut b = DVector::<f64>::zeros(rows.len());
        for (r, &i) in rows.iter().enumerate() {
            let s = self.t_max / self.t[i];
            for j in 0..order {
                a[(r, j)] = s.powi(j as i32 + 1);
            }
            b[r] = self.h[i] * self.t_max;
        }
        let x = a.svd(true, true).solve(&b, 1e-15).map_err(|e| BsError::NumericFailure(format!("tail fit: {e}")))?;
        Ok((0..order).map(|j| x[j] * self.t_max.powi(j as i32)).collect())
    }

    /// Integral of the tail model over |t| > T_max.
    fn model_tail_integral(&self) -> f64 {
        // odd powers cancel between the two half-lines
        self.tail_coeffs
            .iter()
            .enumerate()
            .filter(|(j, _)| j % 2 == 1)
            .map(|(j, &c)| 2.0 * c * self.t_max.powi(-(j as i32)) / j as f64)
            .sum()
    }
}

/// E_n(k, T) = int_T^inf t^{-n} / (k - t) dt and its k-derivative.
fn tail_e(n: usize, k: C, t_max: f64) -> (C, C) {
    if k.norm() < 0.5 * t_max {
        let mut val = ZERO;
        let mut der = ZERO;
        let mut kp = C::new(1.0, 0.0);
        let mut kp_prev = ZERO;
        for m in 0..200 {
            let denom = t_max.powi((n + m) as i32) * (n + m) as f64;
            let term = kp / denom;
            val -= term;
            der -= kp_prev * m as f64 / denom;
            if term.norm() < 1e-18 * val.norm().max(1e-300) {
                break;
            }
            kp_prev = kp;
            kp *= k;
        }
        return (val, der);
    }
    let mut val = (C::new(1.0, 0.0) - k / t_max).ln() / k;
    let mut der = -val / k - C::new(1.0, 0.0) / (k * (t_max - k));
    for m in 2..=n {
        let nv = (t_max.powi(1 - m as i32) / (m - 1) as f64 + val) / k;
        der = (-nv + der) / k;
        val = nv;
    }
    (val, der)
}

fn check_upper(k: C) -> Result<()> {
    if !(k.im > 0.0) || !k.is_finite() {
        return invalid(format!("the Cauchy transform needs Im k > 0, got {k}"));
    }
    Ok(())
}

/// Barycentric weights of the Gauss-Legendre panel nodes on [-1, 1].
fn barycentric_weights(x: &[f64]) -> Vec<f64> {
    (0..x.len())
        .map(|j| 1.0 / (0..x.len()).filter(|&m| m != j).map(|m| x[j] - x[m]).product::<f64>())
        .collect()
}

/// Sum of w h / (k - t) and -w h / (k - t)^2 over one panel of 16 nodes
/// whose u-range is [ua, ub]. When k is close to the panel relative to its
/// length, the degree-15 interpolant of h in u is integrated on an adaptive
/// subdivision instead of the plain rule.
fn panel_sums(bd: &BoundaryData, first: usize, ua: f64, ub: f64, k: C, x: &[f64], bw: &[f64]) -> (C, C) {
    let (ta, tb) = (bd.t[first], bd.t[first + PANEL - 1]);
    let len = (tb - ta).abs().max(1e-300);
    let dist = if k.re < ta.min(tb) {
        (k - ta.min(tb)).norm()
    } else if k.re > ta.max(tb) {
        (k - ta.max(tb)).norm()
    } else {
        k.im
    };
    let mut val = ZERO;
    let mut der = ZERO;
    if dist >= 2.0 * len {
        for i in first..first + PANEL {
            let r = C::new(1.0, 0.0) / (k - bd.t[i]);
            val += r * (bd.weights[i] * bd.h[i]);
            der -= r * r * (bd.weights[i] * bd.h[i]);
        }
        return (val, der);
    }
    let h = &bd.h[first..first + PANEL];
    let interp = |u: f64| -> f64 {
        let s = 2.0 * (u - ua) / (ub - ua) - 1.0;
        let mut num = 0.0;
        let mut den = 0.0;
        for j in 0..PANEL {
            let d = s - x[j];
            if d == 0.0 {
                return h[j];
            }
            let c = bw[j] / d;
            num += c * h[j];
            den += c;
        }
        num / den
    };
    let (gx, gw) = gauss_legendre(PANEL);
    let mut stack = vec![(ua, ub, 0usize)];
    while let Some((a, b, depth)) = stack.pop() {
        let t_a = bd.t_max * a * a * a;
        let t_b = bd.t_max * b * b * b;
        let seg = (t_b - t_a).abs();
        let near = if k.re < t_a.min(t_b) {
            (k - t_a.min(t_b)).norm()
        } else if k.re > t_a.max(t_b) {
            (k - t_a.max(t_b)).norm()
        } else {
            k.im
        };
        if seg > 0.5 * near && depth < 48 {
            let m = 0.5 * (a + b);
            stack.push((a, m, depth + 1));
            stack.push((m, b, depth + 1));
            continue;
        }
        let half = 0.5 * (b - a);
        for (&xi, &wi) in gx.iter().zip(&gw) {
            let u = a + half * (xi + 1.0);
            let t = bd.t_max * u * u * u;
            let w = 3.0 * bd.t_max * u * u * half * wi;
            let r = C::new(1.0, 0.0) / (k - t);
            let wh = w * interp(u);
            val += r * wh;
            der -= r * r * wh;
        }
    }
    (val, der)
}

/// M(k) = (1/pi) int h(t) / (k - t) dt together with M'(k).
pub fn cauchy_transform_with_derivative(bd: &BoundaryData, k: C) -> Result<(C, C)> {
    check_upper(k)?;
    let (x, _) = gauss_legendre(PANEL);
    let bw = barycentric_weights(&x);
    let panels = bd.len() / PANEL;
    let half_panels = panels / 2;
    let mut val = ZERO;
    let mut der = ZERO;
    for p in 0..panels {
        // panels are uniform in u on [-1, 1] and, in both halves, their
        // nodes appear in increasing u, matching the panel rule nodes
        let (ua, ub) = if p < half_panels {
            let q = half_panels - 1 - p;
            (-((q + 1) as f64) / half_panels as f64, -(q as f64) / half_panels as f64)
        } else {
            let q = p - half_panels;
            (q as f64 / half_panels as f64, (q + 1) as f64 / half_panels as f64)
        };
        let (v, d) = panel_sums(bd, p * PANEL, ua, ub, k, &x, &bw);
        val += v;
        der += d;
    }
    for (j, &c) in bd.tail_coeffs.iter().enumerate() {
        if c == 0.0 {
            continue;
        }
        let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
        let (ep, dp) = tail_e(j + 1, k, bd.t_max);
        let (em, dm) = tail_e(j + 1, -k, bd.t_max);
        val += (ep + em * sign) * c;
        der += (dp - dm * sign) * c;
    }
    Ok((val / PI, der / PI))
}

/// M(k) = (1/pi) int h(t) / (k - t) dt for Im k > 0: graded-grid quadrature
/// on [-T_max, T_max] plus the analytic integral of the tail expansion.
pub fn cauchy_transform(bd: &BoundaryData, k: C) -> Result<C> {
    cauchy_transform_with_derivative(bd, k).map(|x| x.0)
}

/// B(k) = prod_j ((k - k_j) / (k - conj k_j))^{m_j}.
pub fn blaschke_eval(zs: &ZeroSet, k: C) -> Result<C> {
    let mut b = C::new(1.0, 0.0);
    for z in &zs.zeros {
        let den = k - z.k.conj();
        if den.norm() == 0.0 {
            return Err(BsError::Singular(format!("k = {k} is a pole of the Blaschke product")));
        }
        b *= ((k - z.k) / den).powu(z.multiplicity as u32);
    }
    Ok(b)
}

/// log B(k) = -i sum_{n <= nmax} B_n / ((n+1) k^{n+1}) for |k| > r0, with
/// the bound (A/r0)(r0/|k|)^{nmax+1} / (1 - r0/|k|), A = (pi/2) B_0, on the
/// omitted terms.
pub fn blaschke_log_series(zs: &ZeroSet, k: C, nmax: usize) -> Result<(C, f64)> {
    if zs.zeros.is_empty() {
        return Ok((ZERO, 0.0));
    }
    let r0 = zs.zeros.iter().map(|z| z.k.norm()).fold(zs.r0, f64::max);
    if k.norm() <= r0 {
        return Err(BsError::Divergent(format!("|k| = {} does not exceed r0 = {r0}", k.norm())));
    }
    let b = blaschke_coeffs(&zs.zeros, nmax);
    let mut sum = ZERO;
    let mut kp = k;
    for (n, &bn) in b.iter().enumerate() {
        sum += C::new(bn / (n + 1) as f64, 0.0) / kp;
        kp *= k;
    }
    let q = r0 / k.norm();
    let bound = 0.5 * PI * b[0] / r0 * q.powi(nmax as i32 + 1) / (1.0 - q);
    Ok((C::new(0.0, -1.0) * sum, bound))
}

/// J_j = (1/pi) v.p. int h_{j-1}(t) dt for j = 0..=m, where
/// h_{j-1} = t^j (h - sum_{i<j} I_i t^{-(i+1)}) and h_{-1} = h. The grid is
/// symmetric, so the truncated integral is the principal value; beyond
/// T_max only the even part of the tail model contributes.
pub fn moments_j(bd: &BoundaryData, m: usize) -> Result<Vec<f64>> {
    if bd.tail_coeffs.len() <= m {
        return invalid(format!("J_{m} needs tail coefficients through I_{m}, have {}", bd.tail_coeffs.len()));
    }
    let mut out = Vec::with_capacity(m + 1);
    for j in 0..=m {
        let mut s = 0.0;
        for ((&t, &w), &h) in bd.t.iter().zip(&bd.weights).zip(&bd.h) {
            let p: f64 = bd.tail_coeffs[..j].iter().enumerate().map(|(i, &c)| c * t.powi(-(i as i32 + 1))).sum();
            s += w * t.powi(j as i32) * (h - p);
        }
        for (i, &c) in bd.tail_coeffs.iter().enumerate().skip(j + 1) {
            // t^{j-i-1} with an even exponent survives the symmetric pairing
            if (i - j) % 2 == 1 {
                let p = (i - j) as i32 + 1;
                s += 2.0 * c * bd.t_max.powi(1 - p) / (p - 1) as f64;
            }
        }
        out.push(s / PI);
    }
    Ok(out)
}

/// Check of M(k) = sum_{j<=m} (J_j - i I_j) / k^{j+1} + M_m(k) / k^{m+1}
/// on the imaginary axis, M_m(i tau) -> 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AsymptoticCheck {
    pub m: usize,
    pub j_coeffs: Vec<f64>,
    pub i_coeffs: Vec<f64>,
    pub taus: Vec<f64>,
    /// |M_m(i tau)| = tau^{m+1} |M(i tau) - partial sum| per tau.
    pub remainders: Vec<f64>,
}

pub fn asymptotic_m(bd: &BoundaryData, m: usize, taus: &[f64]) -> Result<AsymptoticCheck> {
    let j_coeffs = moments_j(bd, m)?;
    let i_coeffs = bd.tail_coeffs[..=m].to_vec();
    let mut remainders = Vec::with_capacity(taus.len());
    for &tau in taus {
        let k = C::new(0.0, tau);
        let full = cauchy_transform(bd, k)?;
        let mut partial = ZERO;
        let mut kp = k;
        for j in 0..=m {
            partial += C::new(j_coeffs[j], -i_coeffs[j]) / kp;
            kp *= k;
        }
        remainders.push(tau.powi(m as i32 + 1) * (full - partial).norm());
    }
    Ok(AsymptoticCheck { m, j_coeffs, i_coeffs, taus: taus.to_vec(), remainders })
}

/// |f(k) - B(k) e^{iM(k)}| at one probe.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProbeResidual {
    pub k: C,
    pub residual: f64,
}

/// Canonical factorization of psi under the policy nu = 0 (no singular inner
/// factor), with the residuals that test it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FactorizationData {
    pub zeros: ZeroSet,
    pub nu_total: f64,
    #[serde(rename = "K")]
    pub k_coeffs: Vec<f64>,
    #[serde(rename = "J")]
    pub j_coeffs: Vec<f64>,
    pub residual_probes: Vec<ProbeResidual>,
}

impl FactorizationData {
    pub fn max_residual(&self) -> f64 {
        self.residual_probes.iter().map(|p| p.residual).fold(0.0, f64::max)
    }
}

/// Compares psi(k) with B(k) e^{iM(k)} at each probe, with B from `zs` and
/// M the Cauchy transform of the boundary data of log|psi|.
pub fn inner_outer_residual(engine: &DetEngine, zs: &ZeroSet, bd: &BoundaryData, probes: &[C]) -> Result<FactorizationData> {
    if let Some(k) = probes.iter().find(|k| !(k.im >= PROBE_FLOOR)) {
        return invalid(format!("probe {k} lies below Im k = {PROBE_FLOOR}, where the boundary data is ill-conditioned"));
    }
    let residual_probes: Vec<ProbeResidual> = probes
        .par_iter()
        .map(|&k| {
            let psi = engine.eval(k)?.psi;
            let model = blaschke_eval(zs, k)? * (C::new(0.0, 1.0) * cauchy_transform(bd, k)?).exp();
            Ok(ProbeResidual { k, residual: (psi - model).norm() })
        })
        .collect::<Result<_>>()?;
    let m = bd.tail_coeffs.len().saturating_sub(1).min(2);
    let j_coeffs = if bd.tail_coeffs.is_empty() { Vec::new() } else { moments_j(bd, m)? };
    Ok(FactorizationData {
        zeros: zs.clone(),
        nu_total: 0.0,
        k_coeffs: vec![0.0; j_coeffs.len()],
        j_coeffs,
        residual_probes,
    })
}

/// (1/pi) int h dt over the real line, with the tail model beyond T_max.
pub fn boundary_integral(bd: &BoundaryData) -> f64 {
    let s: f64 = bd.weights.iter().zip(&bd.h).map(|(w, h)| w * h).sum();
    (s + bd.model_tail_integral()) / PI
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectra::{Rect, Zero};

    fn lorentz(n: usize, t_max: f64) -> BoundaryData {
        let coeffs = vec![0.0, 1.0, 0.0, -1.0, 0.0, 1.0, 0.0, -1.0];
        BoundaryData::from_fn(n, t_max, coeffs, |t| Ok(1.0 / (1.0 + t * t))).unwrap()
    }

    fn zero_set(ks: &[C]) -> ZeroSet {
        let zeros: Vec<Zero> =
            ks.iter().map(|&k| Zero { k, multiplicity: 1, lambda: k * k, newton_residual: 0.0 }).collect();
        let rect = Rect::new(-10.0, 10.0, 1e-3, 10.0).unwrap();
        let r0 = ks.iter().map(|k| k.norm()).fold(0.0, f64::max);
        ZeroSet { b: blaschke_coeffs(&zeros, 4), zeros, r0, search_rect: rect, count: ks.len(), unresolved: Vec::new() }
    }

    #[test]
    fn grid_is_symmetric_and_integrates_polynomial_decay() {
        let (t, w) = graded_grid(256, 20.0).unwrap();
        for i in 0..t.len() {
            assert_eq!(t[i], -t[t.len() - 1 - i]);
            assert_eq!(w[i], w[t.len() - 1 - i]);
        }
        let s: f64 = t.iter().zip(&w).map(|(x, w)| w / (1.0 + x * x)).sum();
        let exact = 2.0 * 20f64.atan();
        assert!((s - exact).abs() < 1e-12, "{s} {exact}");
        assert!(graded_grid(100, 1.0).is_err());
    }

    #[test]
    fn tail_integral_matches_direct_sum() {
        // E_n by both branches against a long composite quadrature
        for &(n, k) in &[(1usize, C::new(3.0, 2.0)), (3, C::new(-2.0, 0.5)), (2, C::new(40.0, 5.0)), (4, C::new(-35.0, 1.0))] {
            let t_max = 60.0;
            let (val, der) = tail_e(n, k, t_max);
            let mut want = ZERO;
            let mut dwant = ZERO;
            // substitute t = T/s, s in (0, 1]
            let q = crate::quad::Quadrature::uniform_panels(0.0, 1.0, 400, 16);
            for (&s, &w) in q.nodes.iter().zip(&q.weights) {
                let t = t_max / s;
                let jac = t_max / (s * s);
                want += C::new(w * jac * t.powi(-(n as i32)), 0.0) / (k - t);
                dwant -= C::new(w * jac * t.powi(-(n as i32)), 0.0) / ((k - t) * (k - t));
            }
            assert!((val - want).norm() < 1e-12 * want.norm(), "{n} {k} {val} {want}");
            assert!((der - dwant).norm() < 1e-10 * dwant.norm(), "{n} {k} {der} {dwant}");
        }
    }

    #[test]
    fn lorentzian_transform_and_moments() {
        let bd = lorentz(2048, 60.0);
        for k in [C::new(0.0, 1.0), C::new(2.0, 0.5), C::new(-7.0, 0.1), C::new(80.0, 3.0), C::new(2.3, 1e-3), C::new(-0.4, 1e-2)] {
            let m = cauchy_transform(&bd, k).unwrap();
            let want = C::new(1.0, 0.0) / (k + C::new(0.0, 1.0));
            assert!((m - want).norm() < 1e-9, "{k} {m} {want}");
        }
        let j = moments_j(&bd, 1).unwrap();
        assert!((j[0] - 1.0).abs() < 1e-12 && j[1].abs() < 1e-12, "{j:?}");
        let fitted = bd.fit_tail_coeffs(6).unwrap();
        assert!(fitted[0].abs() < 1e-9 && (fitted[1] - 1.0).abs() < 1e-9, "{fitted:?}");
    }

    #[test]
    fn transform_is_linear() {
        let a = lorentz(512, 30.0);
        let b = BoundaryData::from_fn(512, 30.0, vec![1.0], |t| Ok(t / (1.0 + t * t))).unwrap();
        let sum = BoundaryData::new(
            30.0,
            a.h.iter().zip(&b.h).map(|(x, y)| x + 2.0 * y).collect(),
            a.tail_coeffs.iter().enumerate().map(|(i, &c)| c + if i == 0 { 2.0 } else { 0.0 }).collect(),
        )
        .unwrap();
        let k = C::new(0.3, 0.8);
        let lhs = cauchy_transform(&sum, k).unwrap();
        let rhs = cauchy_transform(&a, k).unwrap() + cauchy_transform(&b, k).unwrap() * 2.0;
        assert!((lhs - rhs).norm() < 1e-12 * lhs.norm());
    }

    #[test]
    fn asymptotic_remainders_shrink() {
        let bd = lorentz(2048, 60.0);
        let chk = asymptotic_m(&bd, 1, &[20.0, 40.0, 80.0]).unwrap();
        assert!(chk.remainders.windows(2).all(|w| w[1] < w[0]), "{:?}", chk.remainders);
    }

    #[test]
    fn blaschke_basics() {
        let zs = zero_set(&[C::new(0.0, 1.0)]);
        let b = blaschke_eval(&zs, C::new(0.0, 2.0)).unwrap();
        assert!((b - C::new(1.0 / 3.0, 0.0)).norm() < 1e-15);
        assert_eq!(blaschke_eval(&zs, C::new(0.0, 1.0)).unwrap(), ZERO);
        let k = C::new(0.0, 10.0);
        let direct = blaschke_eval(&zs, k).unwrap().ln();
        let mut last = f64::INFINITY;
        for nmax in [2, 4, 8] {
            let (s, bound) = blaschke_log_series(&zs, k, nmax).unwrap();
            assert!((s - direct).norm() <= bound, "{nmax} {s} {direct} {bound}");
            assert!(bound < last);
            last = bound;
        }
        assert!(blaschke_log_series(&zs, C::new(0.0, 0.5), 3).is_err());
    }

    #[test]
    fn blaschke_has_unit_modulus_on_the_axis() {
        let zs = zero_set(&[C::new(0.5, 1.0), C::new(-1.0, 0.3)]);
        for t in [-3.0, -0.2, 0.7, 4.0] {
            let b = blaschke_eval(&zs, C::new(t, 1e-6)).unwrap();
            assert!((b.norm() - 1.0).abs() < 1e-4);
        }
        for k in [C::new(0.1, 0.2), C::new(-2.0, 3.0)] {
            assert!(blaschke_eval(&zs, k).unwrap().norm() <= 1.0);
        }
    }
}
