//! Per-channel determinants and traces from the radial Volterra problem.
//!
//! The partial-wave kernel of the Birman-Schwinger operator is semiseparable,
//! so det(I + A_l) equals the Jost coefficient of the regular solution of
//! `chi'' + (2l+2)/r chi' = (V - k^2) chi`, `phi = r^(l+1) chi`, and the
//! traces Tr A_l^n follow from the Born iterates of the same equation.
//! Every mode is advanced with one Radau IIA collocation scheme,
//! so the discrete traces are the exact Taylor coefficients of the discrete
//! determinant in the coupling constant.

use crate::error::{invalid, BsError, Result};
use crate::greenfn::{legendre_p, scaled_h_seq};
use crate::quad::{fit_tail, gauss_legendre, TailEstimate};
use crate::potential::Potential;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::sync::OnceLock;

type C = Complex64;
const ZERO: C = C::new(0.0, 0.0);
const ONE: C = C::new(1.0, 0.0);

/// Step-size controls of the collocation integrator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JostOptions {
    /// Largest phase advance |k| h per step.
    pub theta: f64,
    /// Largest step as a fraction of the potential's length scale.
    pub potential_frac: f64,
    /// First step as a fraction of the largest step.
    pub first_frac: f64,
    /// Geometric growth factor of consecutive steps near the origin.
    pub growth: f64,
}

impl Default for JostOptions {
    fn default() -> Self {
        JostOptions { theta: 0.6, potential_frac: 0.2, first_frac: 1e-3, growth: 2.0 }
    }
}

/// Determinant and low trace powers of one partial-wave block.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelJost {
    pub l: usize,
    /// det(I + A_l).
    pub det: C,
    /// Tr A_l, Tr A_l^2, Tr A_l^3.
    pub traces: [C; 3],
    /// Taylor coefficients F_1, F_2, F_3 of det(I + s A_l) in s and the
    /// remainder det - 1 - F_1 - F_2 - F_3, integrated directly.
    pub taylor: [C; 4],
    /// Jost coefficient of the free problem; equals 1 up to discretization error.
    pub free_check: C,
    pub steps: usize,
}

impl ChannelJost {
    /// log det_4(I + A_l) = Log det - T1 + T2/2 - T3/3, insensitive to the
    /// branch of the logarithm once multiplied by an integer multiplicity.
    ///
    /// The terms of order below four cancel algebraically, so they are
    /// removed before any floating-point subtraction takes place.
    pub fn log_det4(&self) -> C {
        let [a, b, c, d] = self.taylor;
        let u = a + b + c + d;
        let s = b + c + d;
        // u - u^2/2 + u^3/3 - T1 + T2/2 - T3/3, written without cancellation
        let poly = d - a * (c + d) - s * s * 0.5 + s * (u * u + u * a + a * a) / 3.0;
        poly + log1p_tail3(u)
    }
}

/// log(1 + u) - u + u^2/2 - u^3/3.
fn log1p_tail3(u: C) -> C {
    let r = u.norm();
    if r < 0.5 {
        let mut term = u * u * u;
        let mut acc = ZERO;
        for n in 4..200 {
            term *= -u;
            let add = term / n as f64;
            acc += add;
            if add.norm() <= 1e-17 * acc.norm() || add.norm() < 1e-300 {
                break;
            }
        }
        acc
    } else {
        (ONE + u).ln() - u + u * u * 0.5 - u * u * u / 3.0
    }
}

/// Number of collocation stages; the scheme has order 2S - 1.
pub const STAGES: usize = 5;
const N: usize = 2 * STAGES;

/// Radau IIA tableau with `STAGES` stages.
struct Tableau {
    c: [f64; STAGES],
    a: [[f64; STAGES]; STAGES],
}

fn radau() -> &'static Tableau {
    static TAB: OnceLock<Tableau> = OnceLock::new();
    TAB.get_or_init(|| {
        let s = STAGES;
        // right Radau points: zeros of P_s - P_{s-1} on [-1, 1], mapped to [0, 1]
        let f = |x: f64| legendre_p(s, x) - legendre_p(s - 1, x);
        let mut roots = Vec::new();
        let grid = 4000;
        let mut xa = -1.0;
        let mut fa = f(xa);
        for i in 1..=grid {
            let xb = -1.0 + 2.0 * i as f64 / grid as f64;
            let fb = f(xb);
            if fb == 0.0 {
                roots.push(xb);
            } else if fa * fb < 0.0 {
                let (mut lo, mut hi) = (xa, xb);
                for _ in 0..200 {
                    let mid = 0.5 * (lo + hi);
                    if f(lo) * f(mid) <= 0.0 {
                        hi = mid;
                    } else {
                        lo = mid;
                    }
                }
                roots.push(0.5 * (lo + hi));
            }
            xa = xb;
            fa = fb;
        }
        assert_eq!(roots.len(), s, "Radau nodes");
        let mut c = [0.0; STAGES];
        for (ci, x) in c.iter_mut().zip(&roots) {
            *ci = 0.5 * (x + 1.0);
        }
        c[s - 1] = 1.0;
        let (gx, gw) = gauss_legendre(s + 1);
        let mut a = [[0.0; STAGES]; STAGES];
        for i in 0..s {
            for j in 0..s {
                let mut acc = 0.0;
                for (x, w) in gx.iter().zip(&gw) {
                    let t = 0.5 * c[i] * (x + 1.0);
                    let mut basis = 1.0;
                    for m in 0..s {
                        if m != j {
                            basis *= (t - c[m]) / (c[j] - c[m]);
                        }
                    }
                    acc += 0.5 * c[i] * w * basis;
                }
                a[i][j] = acc;
            }
        }
        Tableau { c, a }
    })
}

/// LU factorization of the stage matrix with partial pivoting.
struct Lu {
    m: [[C; N]; N],
    piv: [usize; N],
}

impl Lu {
    fn new(mut m: [[C; N]; N]) -> Self {
        let mut piv = [0usize; N];
        for col in 0..N {
            let mut p = col;
            let mut best = m[col][col].norm_sqr();
            for (row, r) in m.iter().enumerate().skip(col + 1) {
                let v = r[col].norm_sqr();
                if v > best {
                    best = v;
                    p = row;
                }
            }
            piv[col] = p;
            m.swap(col, p);
            let inv = ONE / m[col][col];
            for row in col + 1..N {
                let f = m[row][col] * inv;
                m[row][col] = f;
                if f == ZERO {
                    continue;
                }
                for j in col + 1..N {
                    let t = m[col][j];
                    m[row][j] -= f * t;
                }
            }
        }
        Lu { m, piv }
    }

    fn solve(&self, mut b: [C; N]) -> [C; N] {
        for col in 0..N {
            b.swap(col, self.piv[col]);
        }
        for col in 0..N {
            for row in col + 1..N {
                let t = b[col];
                b[row] -= self.m[row][col] * t;
            }
        }
        for col in (0..N).rev() {
            let mut s = b[col];
            for j in col + 1..N {
                s -= self.m[col][j] * b[j];
            }
            b[col] = s / self.m[col][col];
        }
        b
    }
}

fn stage_matrix(tab: &Tableau, h: f64, q: &[C; STAGES], damp: &[f64; STAGES]) -> [[C; N]; N] {
    let mut m = [[ZERO; N]; N];
    for i in 0..STAGES {
        for j in 0..STAGES {
            let ha = h * tab.a[i][j];
            // block (i, j) = delta_ij I - h a_ij M_j, M_j = [[0, 1], [q_j, -damp_j]]
            let d = if i == j { ONE } else { ZERO };
            m[2 * i][2 * j] = d;
            m[2 * i][2 * j + 1] = C::new(-ha, 0.0);
            m[2 * i + 1][2 * j] = -q[j] * ha;
            m[2 * i + 1][2 * j + 1] = d + ha * damp[j];
        }
    }
    m
}

/// Step sequence on [0, R]: geometric start, then bounded by phase and
/// potential resolution.
pub fn step_grid(v: &Potential, k: C, opts: &JostOptions) -> Vec<f64> {
    let r_end = v.support;
    let mut h_max = (opts.theta / k.norm()).min(opts.potential_frac * v.length_scale()).min(r_end / 8.0);
    h_max = h_max.max(r_end * 1e-6);
    let mut pts = vec![0.0];
    let mut bps: Vec<f64> = v.breakpoints().into_iter().filter(|&b| b > 0.0 && b < r_end).collect();
    bps.push(r_end);
    let mut h = h_max * opts.first_frac;
    let mut r = 0.0;
    for &stop in &bps {
        while r < stop {
            let mut step = h.min(h_max);
            if r + step > stop || stop - (r + step) < 0.25 * step {
                step = stop - r;
            }
            r += step;
            pts.push(r);
            h = (h * opts.growth).min(h_max);
        }
        r = stop;
        if let Some(last) = pts.last_mut() {
            *last = stop;
        }
    }
    pts
}

/// Potential values at the collocation points of a step grid.
pub struct ChannelGrid {
    pub nodes: Vec<f64>,
    stage_r: Vec<[f64; STAGES]>,
    stage_v: Vec<[C; STAGES]>,
}

impl ChannelGrid {
    pub fn new(v: &Potential, k: C, opts: &JostOptions) -> Self {
        let tab = radau();
        let nodes = step_grid(v, k, opts);
        let mut stage_r = Vec::with_capacity(nodes.len());
        let mut stage_v = Vec::with_capacity(nodes.len());
        for w in nodes.windows(2) {
            let h = w[1] - w[0];
            let mut rs = [0.0; STAGES];
            let mut vs = [ZERO; STAGES];
            for i in 0..STAGES {
                rs[i] = w[0] + tab.c[i] * h;
                // the last stage sits on the step end; evaluate just inside it so
                // that a profile jump at a breakpoint belongs to the next step
                let probe = if i + 1 == STAGES { w[1] - 1e-14 * h } else { rs[i] };
                vs[i] = v.eval(probe);
            }
            stage_r.push(rs);
            stage_v.push(vs);
        }
        ChannelGrid { nodes, stage_r, stage_v }
    }

    pub fn steps(&self) -> usize {
        self.stage_r.len()
    }
}

/// Solves channel `l` at wave number `k` on a prepared grid. `hhat` and
/// `dhhat` are the scaled outgoing function and its derivative at z = k R.
pub fn solve_channel_on(grid: &ChannelGrid, l: usize, k: C, r_end: f64, hhat: C, dhhat: C) -> ChannelJost {
    let tab = radau();
    let k2 = k * k;
    let cl = (2 * l + 2) as f64;
    // mode 0 is the full solution, modes 1..=4 the free solution and its Born
    // iterates, mode 5 the remainder of the full solution beyond third order
    let mut y = [[ZERO; 2]; 6];
    y[0][0] = ONE;
    y[1][0] = ONE;
    let neg_k2 = [-k2; STAGES];
    let last = 2 * STAGES - 2;
    for (idx, w) in grid.nodes.windows(2).enumerate() {
        let h = w[1] - w[0];
        let rs = &grid.stage_r[idx];
        let vs = &grid.stage_v[idx];
        let mut damp = [0.0; STAGES];
        let mut qf = [ZERO; STAGES];
        for i in 0..STAGES {
            damp[i] = cl / rs[i];
            qf[i] = vs[i] - k2;
        }
        let lu_full = Lu::new(stage_matrix(tab, h, &qf, &damp));
        let lu_free = Lu::new(stage_matrix(tab, h, &neg_k2, &damp));
        let rhs_plain = |y: &[C; 2]| {
            let mut b = [ZERO; N];
            for i in 0..STAGES {
                b[2 * i] = y[0];
                b[2 * i + 1] = y[1];
            }
            b
        };
        let sf = lu_full.solve(rhs_plain(&y[0]));
        y[0] = [sf[last], sf[last + 1]];
        let mut prev = lu_free.solve(rhs_plain(&y[1]));
        y[1] = [prev[last], prev[last + 1]];
        for mode in 2..5 {
            let mut b = rhs_plain(&y[mode]);
            for i in 0..STAGES {
                let mut acc = ZERO;
                for j in 0..STAGES {
                    acc += vs[j] * prev[2 * j] * tab.a[i][j];
                }
                b[2 * i + 1] += acc * h;
            }
            let s = lu_free.solve(b);
            y[mode] = [s[last], s[last + 1]];
            prev = s;
        }
        let mut b = rhs_plain(&y[5]);
        for i in 0..STAGES {
            let mut acc = ZERO;
            for j in 0..STAGES {
                acc += vs[j] * prev[2 * j] * tab.a[i][j];
            }
            b[2 * i + 1] += acc * h;
        }
        let s = lu_full.solve(b);
        y[5] = [s[last], s[last + 1]];
    }
    let scale = r_end / (2 * l + 1) as f64;
    let jost = |m: &[C; 2]| m[0] * hhat + (m[1] * hhat - k * m[0] * dhhat) * scale;
    // the discrete free problem shares the leading discretization error of
    // every mode; dividing by it keeps the Born modes exact Taylor
    // coefficients of the normalized determinant
    let free_check = jost(&y[1]);
    let det = jost(&y[0]) / free_check;
    let f1 = jost(&y[2]) / free_check;
    let f2 = jost(&y[3]) / free_check;
    let f3 = jost(&y[4]) / free_check;
    let rem = jost(&y[5]) / free_check;
    let t1 = f1;
    let t2 = f1 * f1 - f2 * 2.0;
    let t3 = f3 * 3.0 - f1 * f2 * 3.0 + f1 * f1 * f1;
    ChannelJost { l, det, traces: [t1, t2, t3], taylor: [f1, f2, f3, rem], free_check, steps: grid.steps() }
}

/// Solves one channel from scratch.
pub fn solve_channel(v: &Potential, l: usize, k: C, opts: &JostOptions) -> Result<ChannelJost> {
    if k.norm() == 0.0 {
        return Err(BsError::InvalidArgument("wave number must be nonzero".into()));
    }
    let grid = ChannelGrid::new(v, k, opts);
    let (h, d) = scaled_h_seq(l, k * v.support)?;
    Ok(solve_channel_on(&grid, l, k, v.support, h[l], d[l]))
}

/// Channels solved at one wave number, with the partial-wave sums and their
/// algebraic tails.
#[derive(Debug, Clone)]
pub struct JostSet {
    pub k: C,
    pub channels: Vec<ChannelJost>,
}

/// Number of channels used by default: every channel whose classical turning
/// radius l/|k| lies inside the region where |V| exceeds 1e-8 of its maximum,
/// plus a margin of channels for the tail fit.
pub fn default_channel_count(v: &Potential, k: C) -> usize {
    if v.is_zero() {
        return 0;
    }
    (1.2 * k.norm() * v.effective_radius(1e-8)).ceil() as usize + 24
}

/// Solves channels 0..=l_max in parallel; the result is independent of the
/// thread count.
pub fn solve_channels(v: &Potential, k: C, l_max: usize, opts: &JostOptions) -> Result<JostSet> {
    use rayon::prelude::*;
    if k.norm() == 0.0 {
        return Err(BsError::InvalidArgument("wave number must be nonzero".into()));
    }
    if k.im < 0.0 {
        return Err(BsError::InvalidArgument(format!("wave number {k} lies below the real axis")));
    }
    if v.is_zero() {
        return Ok(JostSet { k, channels: Vec::new() });
    }
    let grid = ChannelGrid::new(v, k, opts);
    let (h, d) = scaled_h_seq(l_max, k * v.support)?;
    let channels: Vec<ChannelJost> =
        (0..=l_max).into_par_iter().map(|l| solve_channel_on(&grid, l, k, v.support, h[l], d[l])).collect();
    if let Some(bad) = channels.iter().find(|c| !c.det.is_finite() || c.taylor.iter().any(|t| !t.is_finite())) {
        return Err(BsError::NumericFailure(format!("channel {} at k = {k} is not finite", bad.l)));
    }
    Ok(JostSet { k, channels })
}

impl JostSet {
    pub fn l_max(&self) -> usize {
        self.channels.len().saturating_sub(1)
    }

    fn weighted<F: Fn(&ChannelJost) -> C>(&self, f: F) -> Vec<C> {
        self.channels.iter().map(|c| f(c) * (2 * c.l + 1) as f64).collect()
    }

    fn sum_with_tail(terms: &[C], m0: u32) -> (C, TailEstimate<C>) {
        let head: C = terms.iter().sum();
        let tail = if terms.len() >= 12 { fit_tail(terms, m0, 4) } else { TailEstimate { tail: ZERO, spread: 0.0 } };
        (head + tail.tail, tail)
    }

    /// sum_l (2l+1) Tr A_l^n for n in {2, 3}, including the fitted tail of
    /// the omitted channels, whose terms decay like nu^{-2(n-1)}.
    pub fn trace_power(&self, n: usize) -> Result<(C, TailEstimate<C>)> {
        if !(2..=3).contains(&n) {
            return invalid(format!("trace power {n} unavailable; the channel solver carries n = 2 and n = 3"));
        }
        let terms = self.weighted(|c| c.traces[n - 1]);
        Ok(Self::sum_with_tail(&terms, 2 * (n as u32 - 1)))
    }

    /// log D_4 = sum_l (2l+1) log det_4(I + A_l), tail terms decaying like nu^{-6}.
    pub fn log_det4(&self) -> (C, TailEstimate<C>) {
        let terms = self.weighted(|c| c.log_det4());
        Self::sum_with_tail(&terms, 6)
    }

    /// Largest deviation of the discrete free Jost coefficient from 1.
    pub fn free_defect(&self) -> f64 {
        self.channels.iter().map(|c| (c.free_check - ONE).norm()).fold(0.0, f64::max)
    }
}
