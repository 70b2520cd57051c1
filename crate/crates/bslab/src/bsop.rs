//! Nystrom discretization of the partial-wave blocks of the Birman-Schwinger
//! operator `Y0(k) = V1 R0(k) V2`, with the symmetrized kernel
//! `U(r) g_l(k; r, r') U(r')`, `U = V^{1/2}` on the principal branch.

use crate::error::{invalid, BsError, Result};
use crate::greenfn::{scaled_green, scaled_h_seq, scaled_j_seq, WaveNumber};
use crate::potential::Potential;
use crate::quad::fit_tail;
pub use crate::quad::{build_quadrature, Quadrature};
use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;

type C = Complex64;
const ZERO: C = C::new(0.0, 0.0);

/// Nystrom matrix of one partial-wave block.
#[derive(Debug, Clone)]
pub struct ChannelMatrix {
    pub l: usize,
    pub k: C,
    pub a: DMatrix<C>,
    pub frobenius: f64,
}

/// Channels 0..=L at a common wave number.
#[derive(Debug, Clone)]
pub struct ChannelSet {
    pub k: C,
    pub channels: Vec<ChannelMatrix>,
    /// Estimated squared Hilbert-Schmidt mass of the omitted channels.
    pub tail_bound: f64,
}

impl ChannelSet {
    /// Highest channel index present.
    pub fn l_max(&self) -> usize {
        self.channels.len().saturating_sub(1)
    }
}

/// Scaled Bessel tables at the quadrature nodes, shared by all channels.
struct NodeTables {
    r: Vec<f64>,
    sw_u: Vec<C>,
    jhat: Vec<Vec<C>>,
    hhat: Vec<Vec<C>>,
}

impl NodeTables {
    fn new(v: &Potential, k: C, q: &Quadrature, l_max: usize) -> Result<Self> {
        WaveNumber::new(k)?;
        let mut jhat = Vec::with_capacity(q.len());
        let mut hhat = Vec::with_capacity(q.len());
        for &r in &q.nodes {
            jhat.push(scaled_j_seq(l_max, k * r)?);
            hhat.push(scaled_h_seq(l_max, k * r)?.0);
        }
        let sw_u = q.nodes.iter().zip(&q.weights).map(|(&r, &w)| v.eval(r).sqrt() * w.sqrt()).collect();
        Ok(NodeTables { r: q.nodes.clone(), sw_u, jhat, hhat })
    }

    fn channel(&self, l: usize, k: C) -> ChannelMatrix {
        let n = self.r.len();
        let mut a = DMatrix::from_element(n, n, ZERO);
        for i in 0..n {
            if self.sw_u[i] == ZERO {
                continue;
            }
            for j in i..n {
                // nodes are increasing, so r_i <= r_j
                let g = scaled_green(l, self.jhat[i][l], self.hhat[j][l], self.r[i], self.r[j]);
                let x = self.sw_u[i] * g * self.sw_u[j];
                a[(i, j)] = x;
                a[(j, i)] = x;
            }
        }
        let frobenius = a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        ChannelMatrix { l, k, a, frobenius }
    }
}

/// A_ij = sqrt(w_i) U(r_i) g_l(k; r_i, r_j) U(r_j) sqrt(w_j).
pub fn build_channel(v: &Potential, l: usize, k: C, q: &Quadrature) -> Result<ChannelMatrix> {
    Ok(NodeTables::new(v, k, q, l)?.channel(l, k))
}

/// Channels 0..=l_max without a truncation test.
pub fn build_channels(v: &Potential, k: C, q: &Quadrature, l_max: usize) -> Result<ChannelSet> {
    let tables = NodeTables::new(v, k, q, l_max)?;
    let channels = (0..=l_max).into_par_iter().map(|l| tables.channel(l, k)).collect();
    Ok(ChannelSet { k, channels, tail_bound: 0.0 })
}

impl ChannelMatrix {
    /// Tr A^n for n >= 1.
    pub fn trace_power(&self, n: usize) -> C {
        match n {
            0 => C::new(self.a.nrows() as f64, 0.0),
            1 => self.a.trace(),
            // A is complex symmetric, so Tr A^2 = sum A_ij^2
            2 => self.a.iter().map(|z| z * z).sum(),
            _ => {
                let half = n / 2;
                let mut p = self.a.clone();
                for _ in 1..half {
                    p = &p * &self.a;
                }
                if n % 2 == 0 {
                    p.iter().map(|z| z * z).sum()
                } else {
                    let q = &p * &self.a;
                    // Tr(P Q) with P = A^half, Q = A^(half+1), both symmetric
                    p.iter().zip(q.iter()).map(|(x, y)| x * y).sum()
                }
            }
        }
    }

    /// Largest singular value, by power iteration on A* A with a dense SVD
    /// fallback when the iteration stalls.
    pub fn spectral_norm(&self) -> f64 {
        if self.frobenius == 0.0 {
            return 0.0;
        }
        let n = self.a.nrows();
        let mut x = nalgebra::DVector::from_fn(n, |i, _| C::new(1.0 + (i as f64 * 0.37).sin() * 0.1, 0.0));
        x /= C::new(x.norm(), 0.0);
        let mut sigma2 = 0.0;
        for _ in 0..400 {
            let y = &self.a * &x;
            let z = self.a.adjoint() * &y;
            let next = y.norm_squared();
            let zn = z.norm();
            if zn == 0.0 {
                return 0.0;
            }
            x = z / C::new(zn, 0.0);
            if (next - sigma2).abs() <= 1e-13 * next {
                return next.sqrt();
            }
            sigma2 = next;
        }
        self.a.clone().singular_values().iter().fold(0.0, |m: f64, &s| m.max(s))
    }

    /// ||A||_{B4}^4 = Tr (A* A)^2 = ||A* A||_F^2.
    pub fn b4_norm4(&self) -> f64 {
        if self.frobenius == 0.0 {
            return 0.0;
        }
        let g = self.a.adjoint() * &self.a;
        g.iter().map(|z| z.norm_sqr()).sum()
    }

    /// Eigenvalues from a complex Schur decomposition, together with the
    /// backward error ||A Q - Q T||_F / ||A||_F of that decomposition.
    pub fn eigenvalues(&self) -> Result<(Vec<C>, f64)> {
        if self.frobenius == 0.0 {
            return Ok((vec![ZERO; self.a.nrows()], 0.0));
        }
        let schur = nalgebra::linalg::Schur::try_new(self.a.clone(), 1e-15, 10_000)
            .ok_or_else(|| BsError::NumericFailure(format!("Schur iteration did not converge in channel {}", self.l)))?;
        let (qm, t) = schur.unpack();
        let resid = (&self.a * &qm - &qm * &t).iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt() / self.frobenius;
        Ok((t.diagonal().iter().copied().collect(), resid))
    }
}

fn weighted_sum_with_tail(terms: &[C], m0: u32) -> (C, f64) {
    let head: C = terms.iter().sum();
    if terms.len() < 12 {
        return (head, 0.0);
    }
    let t = fit_tail(terms, m0, 4);
    (head + t.tail, t.spread)
}

/// sum_l (2l+1) ||A_l||_F^2 plus the fitted tail of the omitted channels.
pub fn hs_norm_sq(cs: &ChannelSet) -> Result<f64> {
    if cs.channels.is_empty() {
        return invalid("empty channel set");
    }
    let terms: Vec<C> = cs.channels.iter().map(|c| C::new((2 * c.l + 1) as f64 * c.frobenius.powi(2), 0.0)).collect();
    Ok(weighted_sum_with_tail(&terms, 2).0.re)
}

/// sum_l (2l+1) Tr A_l^n plus the fitted tail, whose terms decay like
/// nu^{-2(n-1)} in nu = l + 1/2.
pub fn trace_power(cs: &ChannelSet, n: usize) -> Result<C> {
    if n < 2 {
        return invalid(format!("trace power n = {n} needs n >= 2"));
    }
    let terms: Vec<C> = cs.channels.iter().map(|c| c.trace_power(n) * (2 * c.l + 1) as f64).collect();
    Ok(weighted_sum_with_tail(&terms, 2 * (n as u32 - 1)).0)
}

/// ||Y0||_{B4}^4 summed over channels; the terms decay like nu^{-6}.
pub fn b4_norm4(cs: &ChannelSet) -> f64 {
    let terms: Vec<C> = cs.channels.iter().map(|c| C::new((2 * c.l + 1) as f64 * c.b4_norm4(), 0.0)).collect();
    weighted_sum_with_tail(&terms, 6).0.re
}

/// Largest singular value over the channels.
pub fn spectral_norm(cs: &ChannelSet) -> f64 {
    cs.channels.iter().map(ChannelMatrix::spectral_norm).fold(0.0, f64::max)
}

/// Channels l = 0, 1, ... until three consecutive weighted contributions
/// (2l+1)||A_l||_F^2 fall below `eps` times the running total, never stopping
/// before the turning-point index 1.2 |k| r_eff. The contributions decay only
/// algebraically (like l^-2), so `tail_bound` is the least-squares tail of
/// the omitted channels rather than a geometric extrapolation.
pub fn channel_cutoff(v: &Potential, k: C, q: &Quadrature, eps: f64, l_max: usize) -> Result<ChannelSet> {
    if !(eps > 0.0) {
        return invalid("truncation tolerance must be positive");
    }
    WaveNumber::new(k)?;
    if v.is_zero() {
        return build_channels(v, k, q, 0);
    }
    let l_min = (1.2 * k.norm() * v.effective_radius(1e-8)).ceil() as usize;
    let tables = NodeTables::new(v, k, q, l_max)?;
    let mut channels = Vec::new();
    let mut terms: Vec<C> = Vec::new();
    let mut total = 0.0;
    let mut small = 0;
    for l in 0..=l_max {
        let c = tables.channel(l, k);
        let w = (2 * l + 1) as f64 * c.frobenius.powi(2);
        total += w;
        terms.push(C::new(w, 0.0));
        channels.push(c);
        small = if w < eps * total { small + 1 } else { 0 };
        if small >= 3 && l >= l_min {
            let tail = if terms.len() >= 12 { fit_tail(&terms, 2, 3).tail.re.abs() } else { 0.0 };
            return Ok(ChannelSet { k, channels, tail_bound: tail });
        }
    }
    Err(BsError::TruncationFailure {
        l: l_max,
        detail: format!("channel contributions still above {eps:.1e} of the total {total:.6e}"),
    })
}
