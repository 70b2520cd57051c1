//! Regularized determinants of I + Y0(k): psi = det_2, D_4 = psi e^{psi_2 - psi_3},
//! and the trace functions psi_2, psi_3.
//!
//! The default backend obtains every channel determinant and trace from the
//! radial Volterra problem (see [`crate::jost`]); the Nystrom backend
//! diagonalizes the channel matrices of [`crate::bsop`] and serves as an
//! independent cross-check at small |k|.

use crate::bsop::{self, build_quadrature, ChannelSet};
use crate::error::{invalid, BsError, Result};
use crate::greenfn::WaveNumber;
use crate::jost::{default_channel_count, solve_channels, JostOptions, JostSet};
use crate::potential::{AutocorrTable, Potential};
use crate::quad::fit_tail;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

type C = Complex64;
const ZERO: C = C::new(0.0, 0.0);
const ONE: C = C::new(1.0, 0.0);

/// How the channel determinants are computed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Backend {
    /// Collocation solution of the radial Volterra equation.
    #[default]
    Volterra,
    /// Eigenvalues of Nystrom channel matrices.
    Nystrom,
}

/// Numerical settings of a determinant evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetConfig {
    pub backend: Backend,
    /// Gauss-Legendre order of the Nystrom backend.
    pub quad_n: usize,
    /// Fixed channel cap; `None` selects the turning-point rule of
    /// [`default_channel_count`].
    pub l_max: Option<usize>,
    /// Truncation tolerance of the Nystrom channel cutoff.
    pub ell_eps: f64,
    pub jost: JostOptions,
}

impl Default for DetConfig {
    fn default() -> Self {
        DetConfig { backend: Backend::Volterra, quad_n: 200, l_max: None, ell_eps: 1e-4, jost: JostOptions::default() }
    }
}

/// Truncation and accuracy indicators of one evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    /// Highest channel computed.
    pub l: usize,
    /// Quadrature order (Nystrom) or number of integration steps (Volterra).
    pub n: usize,
    /// Size of the fitted partial-wave tail of log D_4.
    pub tail_bound: f64,
    /// Schur backward error (Nystrom) or free-problem defect (Volterra).
    pub eig_residual: f64,
    /// psi_2 from the channel sum, to compare with the closed form.
    pub psi2_channels: C,
}

/// Determinant data at one wave number.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetEval {
    pub k: C,
    pub psi: C,
    pub d4: C,
    pub psi2: C,
    pub psi3: C,
    /// log psi with the imaginary part fixed only modulo 2 pi.
    pub log_psi: C,
    pub log_d4: C,
    pub log_abs_psi: f64,
    pub log_abs_d4: f64,
    pub diagnostics: Diagnostics,
}

impl DetEval {
    fn identity(k: C) -> Self {
        DetEval {
            k,
            psi: ONE,
            d4: ONE,
            psi2: ZERO,
            psi3: ZERO,
            log_psi: ZERO,
            log_d4: ZERO,
            log_abs_psi: 0.0,
            log_abs_d4: 0.0,
            diagnostics: Diagnostics { l: 0, n: 0, tail_bound: 0.0, eig_residual: 0.0, psi2_channels: ZERO },
        }
    }

    fn assemble(k: C, log_d4: C, psi2: C, psi3: C, diagnostics: Diagnostics) -> Self {
        let log_psi = log_d4 - psi2 + psi3;
        DetEval {
            k,
            psi: log_psi.exp(),
            d4: log_d4.exp(),
            psi2,
            psi3,
            log_psi,
            log_d4,
            log_abs_psi: log_psi.re,
            log_abs_d4: log_d4.re,
            diagnostics,
        }
    }
}

/// psi_2(k) = int_0^{2R} e^{2ikt} gamma(t) dt with gamma the autocorrelation.
pub fn psi2_closed(v: &Potential, k: C) -> Result<C> {
    if k.im < 0.0 {
        return invalid(format!("psi_2 closed form needs Im k >= 0, got {k}"));
    }
    Ok(AutocorrTable::new(v).psi2(k))
}

/// Reusable evaluator for one potential: caches the autocorrelation table.
#[derive(Debug, Clone)]
pub struct DetEngine {
    pub potential: Potential,
    pub config: DetConfig,
    table: AutocorrTable,
}

impl DetEngine {
    pub fn new(v: &Potential, config: DetConfig) -> Result<Self> {
        v.validate()?;
        if config.backend == Backend::Nystrom && config.quad_n < 2 {
            return invalid("quad_n must be at least 2");
        }
        Ok(DetEngine { potential: v.clone(), config, table: AutocorrTable::new(v) })
    }

    /// psi_2 from the autocorrelation formula.
    pub fn psi2_closed(&self, k: C) -> C {
        self.table.psi2(k)
    }

    /// Channel cap used at wave number k.
    pub fn channel_count(&self, k: C) -> usize {
        self.config.l_max.unwrap_or_else(|| default_channel_count(&self.potential, k))
    }

    /// Solved channels of the Volterra backend.
    pub fn channels(&self, k: C) -> Result<JostSet> {
        solve_channels(&self.potential, k, self.channel_count(k), &self.config.jost)
    }

    pub fn eval(&self, k: C) -> Result<DetEval> {
        WaveNumber::new(k)?;
        if self.potential.is_zero() {
            return Ok(DetEval::identity(k));
        }
        match self.config.backend {
            Backend::Volterra => self.eval_volterra(k),
            Backend::Nystrom => self.eval_nystrom(k),
        }
    }

    fn eval_volterra(&self, k: C) -> Result<DetEval> {
        let set = self.channels(k)?;
        let (log_d4, tail) = set.log_det4();
        let (t2, _) = set.trace_power(2)?;
        let (t3, _) = set.trace_power(3)?;
        let psi2 = self.table.psi2(k);
        let diagnostics = Diagnostics {
            l: set.l_max(),
            n: set.channels.first().map_or(0, |c| c.steps),
            tail_bound: tail.tail.norm() + tail.spread,
            eig_residual: set.free_defect(),
            psi2_channels: t2 * 0.5,
        };
        let out = DetEval::assemble(k, log_d4, psi2, t3 / 3.0, diagnostics);
        if !(out.log_psi.re.is_finite() || out.log_psi.re == f64::NEG_INFINITY) {
            return Err(BsError::NumericFailure(format!("non-finite determinant at k = {k}")));
        }
        Ok(out)
    }

    fn eval_nystrom(&self, k: C) -> Result<DetEval> {
        let q = build_quadrature(self.potential.support, self.config.quad_n)?;
        let cs = match self.config.l_max {
            Some(l) => bsop::build_channels(&self.potential, k, &q, l)?,
            None => bsop::channel_cutoff(&self.potential, k, &q, self.config.ell_eps, 400)?,
        };
        let (log_det2, eig_residual) = log_det2(&cs)?;
        let psi2 = bsop::trace_power(&cs, 2)? * 0.5;
        let psi3 = bsop::trace_power(&cs, 3)? / 3.0;
        let diagnostics =
            Diagnostics { l: cs.l_max(), n: self.config.quad_n, tail_bound: cs.tail_bound, eig_residual, psi2_channels: psi2 };
        Ok(DetEval::assemble(k, log_det2 + psi2 - psi3, psi2, psi3, diagnostics))
    }
}

/// log det_2 over a channel set from channel eigenvalues, with the fitted
/// tail of the omitted channels; also returns the worst Schur backward error.
pub fn log_det2(cs: &ChannelSet) -> Result<(C, f64)> {
    let mut terms = Vec::with_capacity(cs.channels.len());
    let mut worst: f64 = 0.0;
    for ch in &cs.channels {
        let (eigs, resid) = ch.eigenvalues()?;
        worst = worst.max(resid);
        let s: C = eigs.iter().map(|&lam| (ONE + lam).ln() - lam).sum();
        terms.push(s * (2 * ch.l + 1) as f64);
    }
    let head: C = terms.iter().sum();
    let tail = if terms.len() >= 12 { fit_tail(&terms, 2, 3).tail } else { ZERO };
    Ok((head + tail, worst))
}

/// det_2 = prod_l [prod_i (1 + lambda_i) e^{-lambda_i}]^{2l+1}.
pub fn det2(cs: &ChannelSet) -> Result<C> {
    Ok(log_det2(cs)?.0.exp())
}

/// One-shot evaluation; scans should reuse a [`DetEngine`].
pub fn eval_det(v: &Potential, k: C, config: &DetConfig) -> Result<DetEval> {
    DetEngine::new(v, *config)?.eval(k)
}

/// Evaluations in input order; a failing row does not stop the scan.
pub fn log_det_scan(v: &Potential, ks: &[C], config: &DetConfig) -> Result<Vec<Result<DetEval>>> {
    use rayon::prelude::*;
    let engine = DetEngine::new(v, *config)?;
    Ok(ks.par_iter().map(|&k| engine.eval(k)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C {
        C::new(re, im)
    }

    #[test]
    fn zero_potential_is_identity() {
        let e = eval_det(&Potential::zero(), c(1.0, 1.0), &DetConfig::default()).unwrap();
        assert_eq!(e.psi, ONE);
        assert_eq!(e.d4, ONE);
        assert_eq!(e.psi2, ZERO);
    }

    #[test]
    fn d4_relation_holds() {
        let e = eval_det(&Potential::gaussian(c(1.0, 0.5)), c(1.0, 1.0), &DetConfig::default()).unwrap();
        let rebuilt = e.psi * (e.psi2 - e.psi3).exp();
        assert!((rebuilt - e.d4).norm() <= 1e-12 * e.d4.norm());
        let rel = (e.psi2 - e.diagnostics.psi2_channels).norm() / e.psi2.norm();
        assert!(rel < 1e-6, "{rel}");
    }

    #[test]
    fn real_potential_on_imaginary_axis_is_real() {
        let e = eval_det(&Potential::gaussian(c(-2.0, 0.0)), c(0.0, 1.3), &DetConfig::default()).unwrap();
        assert!(e.psi.im.abs() < 1e-12 * e.psi.norm());
    }

    #[test]
    fn single_eigenvalue_minus_one_gives_zero() {
        use crate::bsop::ChannelMatrix;
        use nalgebra::DMatrix;
        let a = DMatrix::from_element(1, 1, c(-1.0, 0.0));
        let cs = ChannelSet { k: ONE, channels: vec![ChannelMatrix { l: 0, k: ONE, a, frobenius: 1.0 }], tail_bound: 0.0 };
        assert_eq!(det2(&cs).unwrap().norm(), 0.0);
    }

    #[test]
    fn direct_sum_multiplies() {
        let v = Potential::gaussian(c(1.5, -0.5));
        let q = build_quadrature(v.support, 24).unwrap();
        let cs = bsop::build_channels(&v, c(0.6, 0.4), &q, 1).unwrap();
        let only = |l: usize| ChannelSet { k: cs.k, channels: vec![cs.channels[l].clone()], tail_bound: 0.0 };
        let both = det2(&cs).unwrap();
        let split = det2(&only(0)).unwrap() * det2(&only(1)).unwrap();
        assert!((both - split).norm() < 1e-12 * both.norm());
    }
}
