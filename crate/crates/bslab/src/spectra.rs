//! Zeros k_j of psi in the upper half-plane (k_j^2 are the eigenvalues of
//! H = -Laplacian + V), the radius r0 beyond which ||Y0(k)|| <= 1/2, and the
//! Taylor coefficients B_n of log B at infinity.

use crate::bsop::{build_quadrature, ChannelMatrix};
use crate::det::DetEngine;
use crate::error::{invalid, BsError, Result};
use crate::greenfn::{scaled_h_seq, scaled_j_seq, scaled_green};
use crate::potential::Potential;
use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

type C = Complex64;

/// Axis-aligned rectangle in the upper half-plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    pub re_min: f64,
    pub re_max: f64,
    pub im_min: f64,
    pub im_max: f64,
}

impl Rect {
    pub fn new(re_min: f64, re_max: f64, im_min: f64, im_max: f64) -> Result<Self> {
        if !(re_min < re_max && im_min < im_max) || ![re_min, re_max, im_min, im_max].iter().all(|x| x.is_finite()) {
            return invalid(format!("degenerate rectangle [{re_min}, {re_max}] x [{im_min}, {im_max}]"));
        }
        Ok(Rect { re_min, re_max, im_min, im_max })
    }

    pub fn contains(&self, k: C) -> bool {
        k.re >= self.re_min && k.re <= self.re_max && k.im >= self.im_min && k.im <= self.im_max
    }

    pub fn center(&self) -> C {
        C::new(0.5 * (self.re_min + self.re_max), 0.5 * (self.im_min + self.im_max))
    }

    fn width(&self) -> f64 {
        self.re_max - self.re_min
    }

    fn height(&self) -> f64 {
        self.im_max - self.im_min
    }

    /// Four sub-rectangles, split slightly off-center so that the cut lines
    /// avoid symmetry axes where zeros of real potentials sit.
    pub fn split(&self) -> [Rect; 4] {
        let xm = self.re_min + 0.4871 * self.width();
        let ym = self.im_min + 0.5129 * self.height();
        [
            Rect { re_max: xm, im_max: ym, ..*self },
            Rect { re_min: xm, im_max: ym, ..*self },
            Rect { re_max: xm, im_min: ym, ..*self },
            Rect { re_min: xm, im_min: ym, ..*self },
        ]
    }

    /// Corners in counter-clockwise order starting at the lower left.
    fn corners(&self) -> [C; 4] {
        [
            C::new(self.re_min, self.im_min),
            C::new(self.re_max, self.im_min),
            C::new(self.re_max, self.im_max),
            C::new(self.re_min, self.im_max),
        ]
    }
}

/// Settings of the argument-principle search.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SearchOptions {
    /// Required |psi| at a refined zero.
    pub tol_zero: f64,
    /// Largest subdivision depth.
    pub max_depth: usize,
    /// Lowest admissible Im k of the search rectangle.
    pub delta_floor: f64,
    /// Contour sample points per unit length before adaptive refinement.
    pub panels_per_unit: f64,
    /// Smallest |psi| tolerated on a contour.
    pub tol_edge: f64,
}

impl Default for SearchOptions {
    fn default() -> Self {
        SearchOptions { tol_zero: 1e-10, max_depth: 8, delta_floor: 1e-3, panels_per_unit: 4.0, tol_edge: 1e-12 }
    }
}

/// A located zero of psi.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Zero {
    pub k: C,
    pub multiplicity: usize,
    /// Eigenvalue k^2 of H.
    pub lambda: C,
    /// |psi| at the refined point.
    pub newton_residual: f64,
}

/// Zeros found in a search rectangle with the derived Blaschke data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZeroSet {
    /// Ordered by decreasing Im k.
    pub zeros: Vec<Zero>,
    pub b: Vec<f64>,
    pub r0: f64,
    pub search_rect: Rect,
    /// Total winding number of the search rectangle.
    pub count: usize,
    /// Cells whose zeros could not be isolated within the depth limit.
    pub unresolved: Vec<Rect>,
}

impl ZeroSet {
    pub fn empty(search_rect: Rect) -> Self {
        ZeroSet { zeros: Vec::new(), b: vec![0.0], r0: 0.0, search_rect, count: 0, unresolved: Vec::new() }
    }

    /// Copy without the zero at `index`, with B and r0 recomputed.
    pub fn without(&self, index: usize) -> ZeroSet {
        let mut zeros = self.zeros.clone();
        zeros.remove(index);
        let nmax = self.b.len().saturating_sub(1);
        ZeroSet { b: blaschke_coeffs(&zeros, nmax), zeros, ..self.clone() }
    }

    /// B_0 = 2 sum m_j Im k_j.
    pub fn b0(&self) -> f64 {
        blaschke_coeffs(&self.zeros, 0)[0]
    }
}

/// B_n = 2 sum_j m_j Im(k_j^{n+1}) for n = 0..=nmax.
pub fn blaschke_coeffs(zeros: &[Zero], nmax: usize) -> Vec<f64> {
    (0..=nmax)
        .map(|n| 2.0 * zeros.iter().map(|z| z.multiplicity as f64 * z.k.powu(n as u32 + 1).im).fold(0.0, |a, x| a + x))
        .collect()
}

/// Central-difference logarithmic derivative psi'/psi with step h.
fn log_derivative(engine: &DetEngine, k: C, h: f64) -> Result<C> {
    let plus = engine.eval(k + h)?;
    let minus = engine.eval(k - h)?;
    let mut d = plus.log_psi - minus.log_psi;
    // the two logarithms are close; remove any 2 pi i between their branches
    d.im -= 2.0 * PI * (d.im / (2.0 * PI)).round();
    Ok(d / (2.0 * h))
}

/// Change of arg psi along the segment a -> b. Sub-segments are bisected
/// until both halves change arg psi by less than pi/4 and |psi| by less than
/// a factor e^{1/2}, and the halves agree with the whole piece.
fn edge_phase(engine: &DetEngine, a: C, b: C, opts: &SearchOptions) -> Result<f64> {
    let len = (b - a).norm();
    let n0 = (len * opts.panels_per_unit).ceil().max(8.0) as usize;
    let ts: Vec<f64> = (0..=n0).map(|i| i as f64 / n0 as f64).collect();
    let vals: Vec<Result<C>> = ts.par_iter().map(|&t| engine.eval(a + (b - a) * t).map(|d| d.psi)).collect();
    let mut pts: Vec<(f64, C)> = Vec::with_capacity(ts.len());
    for (t, v) in ts.into_iter().zip(vals) {
        pts.push((t, v?));
    }
    let check = |t: f64, z: C| -> Result<()> {
        if !(z.norm() >= opts.tol_edge) {
            return Err(BsError::BoundaryConflict(format!("|psi| = {:.2e} on the contour at k = {}", z.norm(), a + (b - a) * t)));
        }
        Ok(())
    };
    for &(t, z) in &pts {
        check(t, z)?;
    }
    let mut total = 0.0;
    let mut stack: Vec<((f64, C), (f64, C))> = pts.windows(2).rev().map(|w| (w[0], w[1])).collect();
    while let Some(((ta, za), (tb, zb))) = stack.pop() {
        let tm = 0.5 * (ta + tb);
        let zm = engine.eval(a + (b - a) * tm)?.psi;
        check(tm, zm)?;
        let d = (zb / za).arg();
        let (d1, d2) = ((zm / za).arg(), (zb / zm).arg());
        let gentle = |x: C, y: C, dx: f64| dx.abs() <= PI / 4.0 && (y.norm() / x.norm()).ln().abs() <= 0.5;
        // the midpoint must confirm the coarse increment, which rules out a
        // full turn hiding between two samples
        let smooth = gentle(za, zm, d1) && gentle(zm, zb, d2) && (d1 + d2 - d).abs() <= 1e-6;
        if smooth || (tb - ta) * len < 1e-12 * len.max(1.0) {
            if (d1 + d2).abs() > PI / 2.0 {
                return Err(BsError::BoundaryConflict(format!(
                    "argument jump {:.3} unresolved near k = {}",
                    d1 + d2,
                    a + (b - a) * ta
                )));
            }
            total += d1 + d2;
            continue;
        }
        stack.push(((tm, zm), (tb, zb)));
        stack.push(((ta, za), (tm, zm)));
    }
    Ok(total)
}

/// Winding number of psi around the rectangle boundary, unrounded.
pub fn winding(engine: &DetEngine, rect: &Rect, opts: &SearchOptions) -> Result<f64> {
    let c = rect.corners();
    let mut total = 0.0;
    for e in 0..4 {
        total += edge_phase(engine, c[e], c[(e + 1) % 4], opts)?;
    }
    Ok(total / (2.0 * PI))
}

fn check_rect(rect: &Rect, opts: &SearchOptions) -> Result<()> {
    if rect.im_min < opts.delta_floor {
        return invalid(format!("search rectangle reaches Im k = {} below the floor {}", rect.im_min, opts.delta_floor));
    }
    Ok(())
}

/// Number of zeros of psi inside the rectangle, counted with multiplicity,
/// from the argument principle. The winding number must lie within 1/4 of a
/// non-negative integer.
pub fn count_zeros(engine: &DetEngine, rect: &Rect, opts: &SearchOptions) -> Result<usize> {
    check_rect(rect, opts)?;
    if engine.potential.is_zero() {
        return Ok(0);
    }
    settle(winding(engine, rect, opts)?)
}

fn settle(w: f64) -> Result<usize> {
    let n = w.round();
    if (w - n).abs() > 0.25 || n < -0.5 {
        return Err(BsError::Resolution(format!("winding number {w:.4} is not close to a non-negative integer")));
    }
    Ok(n as usize)
}

/// Newton iteration for a zero of multiplicity m: k <- k - m psi/psi'.
/// The difference step shrinks with the Newton step so that it stays well
/// inside the distance to the zero. Returns the point of smallest |psi|
/// once the steps stall, provided |psi| <= tol there.
fn refine(engine: &DetEngine, start: C, m: usize, cell: &Rect, tol: f64) -> Option<(C, f64)> {
    let mut k = start;
    let scale = cell.width().max(cell.height());
    let mut last_step = scale;
    let mut best: Option<(C, f64)> = None;
    for _ in 0..80 {
        let value = engine.eval(k).ok()?;
        let r = value.psi.norm();
        if best.map_or(true, |(_, b)| r < b) {
            best = Some((k, r));
        }
        if r == 0.0 {
            break;
        }
        let unit = k.norm().max(1.0);
        let h = (1e-2 * last_step).clamp(1e-9 * unit, 1e-5 * unit);
        let d = log_derivative(engine, k, h).ok()?;
        if !d.is_finite() || d.norm() == 0.0 {
            return None;
        }
        let step = C::new(m as f64, 0.0) / d;
        let step = if step.norm() > 0.5 * scale { step * (0.5 * scale / step.norm()) } else { step };
        k -= step;
        if !cell.contains(k) || k.im <= 0.0 {
            return None;
        }
        last_step = step.norm();
        if last_step < 1e-13 * unit {
            let r = engine.eval(k).ok()?.psi.norm();
            if r < best.map_or(f64::INFINITY, |b| b.1) {
                best = Some((k, r));
            }
            break;
        }
    }
    best.filter(|&(_, r)| r <= tol)
}

/// Recursive subdivision of the rectangle until each cell's zeros collapse
/// onto a single point found by Newton refinement; the cell winding number
/// is the multiplicity. r0 combines the largest |k_j| with `r0_hint`.
pub fn locate_zeros(engine: &DetEngine, rect: &Rect, opts: &SearchOptions, nmax: usize, r0_hint: f64) -> Result<ZeroSet> {
    let count = count_zeros(engine, rect, opts)?;
    let mut zeros = Vec::new();
    let mut unresolved = Vec::new();
    let mut stack = vec![(*rect, count, 0usize)];
    while let Some((cell, m, depth)) = stack.pop() {
        if m == 0 {
            continue;
        }
        if let Some((k, resid)) = refine(engine, cell.center(), m, &cell, opts.tol_zero) {
            // a simple zero is isolated by the cell count; a multiple one must
            // also carry the full count in a small box around the point
            let accept = m == 1 || {
                let rad = (0.25 * cell.width().min(cell.height())).min(1e-3 * k.norm().max(1.0));
                let lo = (k.im - rad).max(opts.delta_floor);
                Rect::new(k.re - rad, k.re + rad, lo, k.im + rad)
                    .and_then(|b| count_zeros(engine, &b, opts))
                    .is_ok_and(|c| c == m)
            };
            if accept {
                zeros.push(Zero { k, multiplicity: m, lambda: k * k, newton_residual: resid });
                continue;
            }
        }
        if depth >= opts.max_depth {
            unresolved.push(cell);
            continue;
        }
        let subs = cell.split();
        let mut counts = Vec::with_capacity(4);
        for s in &subs {
            counts.push(count_zeros(engine, s, opts)?);
        }
        if counts.iter().sum::<usize>() != m {
            return Err(BsError::Resolution(format!(
                "sub-cell counts {counts:?} do not add up to {m} in cell {cell:?}"
            )));
        }
        for (s, c) in subs.iter().zip(counts).rev() {
            stack.push((*s, c, depth + 1));
        }
    }
    zeros.sort_by(|a, b| b.k.im.partial_cmp(&a.k.im).unwrap().then(a.k.re.partial_cmp(&b.k.re).unwrap()));
    let b = blaschke_coeffs(&zeros, nmax);
    let r0 = zeros.iter().map(|z| z.k.norm()).fold(r0_hint, f64::max);
    Ok(ZeroSet { zeros, b, r0, search_rect: *rect, count, unresolved })
}

/// Largest singular value of the discretized Y0(k) over all channels.
pub fn operator_norm(v: &Potential, k: C, quad_n: usize) -> Result<f64> {
    let q = build_quadrature(v.support, quad_n)?;
    let l_turn = (1.2 * k.norm() * v.effective_radius(1e-8)).ceil() as usize;
    let cap = l_turn + 200;
    let js: Vec<Vec<C>> = q.nodes.iter().map(|&r| scaled_j_seq(cap, k * r)).collect::<Result<_>>()?;
    let hs: Vec<Vec<C>> = q.nodes.iter().map(|&r| scaled_h_seq(cap, k * r).map(|x| x.0)).collect::<Result<_>>()?;
    let u: Vec<C> = q.nodes.iter().zip(&q.weights).map(|(&r, &w)| v.eval(r).sqrt() * w.sqrt()).collect();
    let n = q.len();
    let mut best: f64 = 0.0;
    let mut falling = 0;
    for l in 0..=cap {
        let mut a = DMatrix::from_element(n, n, C::new(0.0, 0.0));
        for i in 0..n {
            for j in i..n {
                let x = u[i] * scaled_green(l, js[i][l], hs[j][l], q.nodes[i], q.nodes[j]) * u[j];
                a[(i, j)] = x;
                a[(j, i)] = x;
            }
        }
        let frobenius = a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        let s = ChannelMatrix { l, k, a, frobenius }.spectral_norm();
        falling = if s < best { falling + 1 } else { 0 };
        best = best.max(s);
        if l >= l_turn && falling >= 3 && s < 0.5 * best {
            break;
        }
    }
    Ok(best)
}

/// Smallest radius rho on a bisection grid such that the operator norm on
/// the arc |k| = rho, 0 <= arg k <= pi (sampled at `arc_points` points) is
/// at most 1/2.
pub fn r0_estimate(v: &Potential, quad_n: usize, arc_points: usize) -> Result<f64> {
    const RHO_MIN: f64 = 1e-2;
    const RHO_MAX: f64 = 100.0;
    if v.is_zero() {
        return Ok(RHO_MIN);
    }
    let arc_points = arc_points.max(32);
    let arc_max = |rho: f64| -> Result<f64> {
        let norms: Vec<Result<f64>> = (0..arc_points)
            .into_par_iter()
            .map(|i| {
                let th = PI * i as f64 / (arc_points - 1) as f64;
                operator_norm(v, C::from_polar(rho, th), quad_n)
            })
            .collect();
        norms.into_iter().try_fold(0.0, |m: f64, x| x.map(|y| m.max(y)))
    };
    if arc_max(RHO_MIN)? <= 0.5 {
        return Ok(RHO_MIN);
    }
    let mut hi = RHO_MIN;
    loop {
        hi *= 2.0;
        if hi > RHO_MAX {
            return Err(BsError::OutOfRange(format!("||Y0(k)|| exceeds 1/2 on every arc up to |k| = {RHO_MAX}")));
        }
        if arc_max(hi)? <= 0.5 {
            break;
        }
    }
    let mut lo = hi / 2.0;
    while hi - lo > 1e-3 * hi {
        let mid = 0.5 * (lo + hi);
        if arc_max(mid)? <= 0.5 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn blaschke_coefficients_of_single_zero() {
        let z = Zero { k: C::new(0.0, 1.0), multiplicity: 1, lambda: C::new(-1.0, 0.0), newton_residual: 0.0 };
        let b = blaschke_coeffs(&[z], 2);
        assert_eq!(b, vec![2.0, 0.0, -2.0]);
        assert_eq!(blaschke_coeffs(&[], 3), vec![0.0; 4]);
    }

    #[test]
    fn split_covers_rectangle() {
        let r = Rect::new(-1.0, 2.0, 0.5, 1.5).unwrap();
        let s = r.split();
        let area: f64 = s.iter().map(|c| c.width() * c.height()).sum();
        assert!((area - r.width() * r.height()).abs() < 1e-12);
        assert!(s.iter().all(|c| c.re_min >= r.re_min && c.im_max <= r.im_max));
    }

    #[test]
    fn rejects_rectangle_below_floor() {
        let e = DetEngine::new(&Potential::zero(), Default::default()).unwrap();
        let r = Rect::new(-1.0, 1.0, 0.0, 1.0).unwrap();
        assert!(matches!(count_zeros(&e, &r, &SearchOptions::default()), Err(BsError::InvalidArgument(_))));
    }
}
