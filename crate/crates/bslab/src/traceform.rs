//! Both sides of the trace formulas and of the eigenvalue and envelope
//! bounds, assembled into residual reports.

use crate::bsop::{self, build_quadrature};
use crate::det::{DetConfig, DetEngine, DetEval};
use crate::error::{invalid, BsError, Result};
use crate::hardy::{cauchy_transform_with_derivative, graded_grid, BoundaryData};
use crate::jost::default_channel_count;
use crate::oracle::hs_norm_sq_bipolar;
use crate::potential::{Moments, Potential};
use crate::spectra::{blaschke_coeffs, locate_zeros, Rect, SearchOptions, ZeroSet};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

type C = Complex64;

/// C_* = 1 / (8 (4 pi)^{2/3}).
pub fn c_star() -> f64 {
    1.0 / (8.0 * (4.0 * PI).powf(2.0 / 3.0))
}

/// Constant c_4 of the det_4 bound |log D_4| <= (c_4 / 2) ||Y0||_{B4}^4.
pub const C4: f64 = 17.0;

/// Which identity or bound a report checks.
#[derive(Debug, Clone, PartialEq)]
pub enum Identity {
    Tr12,
    Trj(usize),
    Tre1(C),
    T4Bound,
    Envelope(String),
}

impl fmt::Display for Identity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Identity::Tr12 => write!(f, "tr12"),
            Identity::Trj(j) => write!(f, "trj:{j}"),
            Identity::Tre1(k) => write!(f, "tre1@{k}"),
            Identity::T4Bound => write!(f, "T4_bound"),
            Identity::Envelope(name) => write!(f, "envelope:{name}"),
        }
    }
}

impl FromStr for Identity {
    type Err = BsError;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s == "tr12" {
            return Ok(Identity::Tr12);
        }
        if s == "T4_bound" {
            return Ok(Identity::T4Bound);
        }
        if let Some(j) = s.strip_prefix("trj:") {
            return j.parse().map(Identity::Trj).map_err(|_| BsError::InvalidArgument(format!("bad trace index in {s:?}")));
        }
        if let Some(k) = s.strip_prefix("tre1@") {
            return C::from_str(k).map(Identity::Tre1).map_err(|_| BsError::InvalidArgument(format!("bad wave number in {s:?}")));
        }
        if let Some(name) = s.strip_prefix("envelope:") {
            return Ok(Identity::Envelope(name.to_string()));
        }
        invalid(format!("unknown identity {s:?}"))
    }
}

impl Serialize for Identity {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Identity {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Fail,
    Inconclusive,
}

/// One checked identity or bound.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceReport {
    pub identity: Identity,
    pub lhs: C,
    pub rhs: C,
    /// |lhs - rhs| / (1 + |lhs| + |rhs|).
    pub residual: f64,
    pub verdict: Verdict,
    pub params: Value,
}

pub fn relative_residual(lhs: C, rhs: C) -> f64 {
    (lhs - rhs).norm() / (1.0 + lhs.norm() + rhs.norm())
}

impl TraceReport {
    /// Report of an identity: pass iff the residual is at most `tol`.
    pub fn identity(identity: Identity, lhs: C, rhs: C, tol: f64, params: Value) -> Self {
        let residual = relative_residual(lhs, rhs);
        let verdict = if residual <= tol { Verdict::Pass } else { Verdict::Fail };
        TraceReport { identity, lhs, rhs, residual, verdict, params }
    }

    /// Report of an inequality lhs <= rhs + slack on real quantities.
    pub fn bound(identity: Identity, lhs: f64, rhs: f64, slack: f64, params: Value) -> Self {
        let (l, r) = (C::new(lhs, 0.0), C::new(rhs, 0.0));
        let verdict = if lhs <= rhs + slack { Verdict::Pass } else { Verdict::Fail };
        TraceReport { identity, lhs: l, rhs: r, residual: relative_residual(l, r), verdict, params }
    }

    pub fn passed(&self) -> bool {
        self.verdict == Verdict::Pass
    }
}

/// Settings shared by the trace-formula checks.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceSettings {
    pub det: DetConfig,
    /// Points of the graded boundary grid.
    pub n_grid: usize,
    pub t_max: f64,
    /// Zero search rectangle.
    pub rect: Rect,
    pub search: SearchOptions,
    /// Highest Blaschke coefficient index.
    pub nmax: usize,
    pub tol_tr12: f64,
    pub tol_trj: f64,
    pub tol_tre1: f64,
}

impl Default for TraceSettings {
    fn default() -> Self {
        TraceSettings {
            det: DetConfig::default(),
            n_grid: 2048,
            t_max: 60.0,
            rect: Rect { re_min: -6.0, re_max: 6.0, im_min: 1e-2, im_max: 6.0 },
            search: SearchOptions::default(),
            nmax: 4,
            tol_tr12: 1e-3,
            tol_trj: 1e-2,
            tol_tre1: 1e-3,
        }
    }
}

impl TraceSettings {
    fn snapshot(&self) -> Value {
        json!({
            "quad_n": self.det.quad_n,
            "backend": self.det.backend,
            "n_grid": self.n_grid,
            "T_max": self.t_max,
            "rect": self.rect,
            "tol_zero": self.search.tol_zero,
        })
    }
}

/// Determinant values on the graded real-axis grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundaryScan {
    pub t_max: f64,
    pub t: Vec<f64>,
    pub weights: Vec<f64>,
    pub log_abs_psi: Vec<f64>,
    pub log_abs_d4: Vec<f64>,
}

impl BoundaryScan {
    pub fn new(engine: &DetEngine, n: usize, t_max: f64) -> Result<Self> {
        let (t, weights) = graded_grid(n, t_max)?;
        let evals: Vec<DetEval> = t.par_iter().map(|&x| engine.eval(C::new(x, 0.0))).collect::<Result<_>>()?;
        Ok(BoundaryScan {
            t_max,
            log_abs_psi: evals.iter().map(|e| e.log_abs_psi).collect(),
            log_abs_d4: evals.iter().map(|e| e.log_abs_d4).collect(),
            t,
            weights,
        })
    }

    /// Boundary data of log|psi| with the tail coefficients I_j = Im Q_j.
    pub fn psi_boundary(&self, moments: &Moments) -> Result<BoundaryData> {
        let mut coeffs = moments.i_list();
        // Q_3 = 0, so the expansion is known one order further
        if coeffs.len() == 3 {
            coeffs.push(0.0);
        }
        BoundaryData::new(self.t_max, self.log_abs_psi.clone(), coeffs)
    }

    /// (1/pi) int log|D_4(t)| dt with a C/t^2 tail fitted on each half-line
    /// over T/2 <= |t| <= T. Returns the value and the two tail integrals.
    pub fn d4_integral(&self) -> (f64, [f64; 2]) {
        let body: f64 = self.weights.iter().zip(&self.log_abs_d4).map(|(w, f)| w * f).sum();
        let mut tails = [0.0; 2];
        for (side, tail) in tails.iter_mut().enumerate() {
            let (mut num, mut den) = (0.0, 0.0);
            for (&t, &f) in self.t.iter().zip(&self.log_abs_d4) {
                let on_side = if side == 0 { t < 0.0 } else { t > 0.0 };
                if on_side && t.abs() >= 0.5 * self.t_max {
                    let b = t.powi(-2);
                    num += f * b;
                    den += b * b;
                }
            }
            if den > 0.0 {
                *tail = num / den / self.t_max;
            }
        }
        ((body + tails[0] + tails[1]) / PI, tails)
    }
}

/// Everything the trace formulas consume: zeros, boundary scan, moments.
#[derive(Debug, Clone)]
pub struct Evidence {
    pub engine: DetEngine,
    pub settings: TraceSettings,
    pub zeros: ZeroSet,
    pub scan: BoundaryScan,
    pub moments: Moments,
}

impl Evidence {
    pub fn collect(v: &Potential, settings: &TraceSettings) -> Result<Self> {
        let engine = DetEngine::new(v, settings.det)?;
        let zeros = if v.is_zero() {
            ZeroSet::empty(settings.rect)
        } else {
            locate_zeros(&engine, &settings.rect, &settings.search, settings.nmax, 0.0)?
        };
        Self::with_zeros(v, settings, zeros)
    }

    /// Reuses an already located zero set.
    pub fn with_zeros(v: &Potential, settings: &TraceSettings, zeros: ZeroSet) -> Result<Self> {
        let engine = DetEngine::new(v, settings.det)?;
        let scan = BoundaryScan::new(&engine, settings.n_grid, settings.t_max)?;
        let moments = v.moments_q()?;
        Ok(Evidence { engine, settings: *settings, zeros, scan, moments })
    }

    pub fn boundary(&self) -> Result<BoundaryData> {
        self.scan.psi_boundary(&self.moments)
    }

    fn params(&self, extra: Value) -> Value {
        let mut p = self.settings.snapshot();
        p["zeros"] = json!(self.zeros.zeros.len());
        p["unresolved"] = json!(self.zeros.unresolved.len());
        p["nu_policy"] = json!("nu = 0");
        if let (Value::Object(base), Value::Object(more)) = (&mut p, extra) {
            base.extend(more);
        }
        p
    }

    fn inconclusive(&self, mut report: TraceReport) -> TraceReport {
        if !self.zeros.unresolved.is_empty() {
            report.verdict = Verdict::Inconclusive;
        }
        report
    }

    /// B_0 + nu(R)/pi = (1/pi) int log|D_4(t)| dt with nu = 0.
    pub fn verify_tr12(&self) -> TraceReport {
        let lhs = self.zeros.b0();
        let (rhs, tails) = self.scan.d4_integral();
        let params = self.params(json!({ "tail_fit": tails }));
        self.inconclusive(TraceReport::identity(Identity::Tr12, C::new(lhs, 0.0), C::new(rhs, 0.0), self.settings.tol_tr12, params))
    }

    /// B_j/(j+1) + K_j = Re Q_j + J_j with K_j = 0, for j = 1, 2.
    pub fn verify_trj(&self, j: usize) -> Result<TraceReport> {
        let re_q = match j {
            1 => 0.0,
            2 => {
                self.moments.q2.ok_or_else(|| BsError::Unsupported("the j = 2 formula needs Q_2, which needs V'".into()))?.re
            }
            _ => return Err(BsError::Unsupported(format!("trace formula j = {j}: only j = 1, 2 are available"))),
        };
        let bd = self.boundary()?;
        let jj = crate::hardy::moments_j(&bd, j)?;
        let b = blaschke_coeffs(&self.zeros.zeros, j);
        let lhs = b[j] / (j + 1) as f64;
        let rhs = re_q + jj[j];
        let params = self.params(json!({ "re_Q": re_q, "J": jj, "B": b }));
        Ok(self.inconclusive(TraceReport::identity(Identity::Trj(j), C::new(lhs, 0.0), C::new(rhs, 0.0), self.settings.tol_trj, params)))
    }

    /// psi'(k)/psi(k) = sum_j 2i m_j Im k_j / ((k - k_j)(k - conj k_j)) + i M'(k),
    /// where i M'(k) = -(i/pi) int log|psi(t)| dt / (t - k)^2 (nu = 0).
    pub fn verify_tre1(&self, k: C) -> Result<TraceReport> {
        if !(k.im >= 0.1) {
            return invalid(format!("tre1 needs Im k >= 0.1, got {k}"));
        }
        let here = self.engine.eval(k)?;
        if here.psi.norm() <= 10.0 * self.settings.search.tol_zero {
            return Err(BsError::IllConditioned(format!("k = {k} is at a zero of psi")));
        }
        let h = 1e-5 * k.norm().max(1.0);
        let plus = self.engine.eval(k + h)?;
        let minus = self.engine.eval(k - h)?;
        let mut d = plus.log_psi - minus.log_psi;
        d.im -= 2.0 * PI * (d.im / (2.0 * PI)).round();
        let lhs = d / (2.0 * h);
        let mut rhs = C::new(0.0, 0.0);
        for z in &self.zeros.zeros {
            rhs += C::new(0.0, 2.0 * z.k.im * z.multiplicity as f64) / ((k - z.k) * (k - z.k.conj()));
        }
        let (_, dm) = cauchy_transform_with_derivative(&self.boundary()?, k)?;
        rhs += C::new(0.0, 1.0) * dm;
        let params = self.params(json!({ "k": k, "fd_step": h }));
        Ok(self.inconclusive(TraceReport::identity(Identity::Tre1(k), lhs, rhs, self.settings.tol_tre1, params)))
    }
}

/// Coefficients a_1, a_2, a_3 of F(l) = a_1 l^{1/2} + a_2 l + a_3 l^{3/2}.
pub fn t4_coefficients(c2: f64) -> [f64; 3] {
    let r = 68f64.powf(0.25);
    [
        c2 * r / (4.0 * PI).powf(7.0 / 6.0),
        68f64.sqrt() / (4.0 * PI).powf(5.0 / 6.0) * c2 * c2,
        c2.powi(3) * r / (3.0 * PI * (4.0 * PI).sqrt()),
    ]
}

/// nu(R) + sum m_j Im k_j <= ||V||_2^2 F(||V||_{3/2}) with nu = 0. The
/// params carry the smallest C_2 for which the inequality holds.
pub fn check_bound_t4(v: &Potential, zs: &ZeroSet, c2: f64) -> Result<TraceReport> {
    if !(c2 > 0.0 && c2.is_finite()) {
        return invalid(format!("C2 must be positive, got {c2}"));
    }
    let lhs: f64 = zs.zeros.iter().map(|z| z.multiplicity as f64 * z.k.im).sum::<f64>() + 0.0;
    let n2 = v.norm_lp(2.0)?;
    let n32 = v.norm_lp(1.5)?;
    let rhs_at = |c: f64| {
        let a = t4_coefficients(c);
        n2 * n2 * (a[0] * n32.sqrt() + a[1] * n32 + a[2] * n32.powf(1.5))
    };
    let c2_min = if lhs <= 0.0 {
        0.0
    } else {
        let (mut lo, mut hi) = (0.0, 1.0);
        while rhs_at(hi) < lhs {
            hi *= 2.0;
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if rhs_at(mid) >= lhs {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        hi
    };
    let params = json!({ "C2": c2, "C2_min": c2_min, "norm_2": n2, "norm_3_2": n32, "nu_policy": "nu = 0" });
    Ok(TraceReport::bound(Identity::T4Bound, lhs, rhs_at(c2), 0.0, params))
}

/// Names of the envelope bounds, in report order.
pub const ENVELOPE_BOUNDS: [&str; 6] = ["D1", "epe", "B22", "B21", "p23", "DA2x"];

/// Settings of the envelope-bound scan.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnvelopeSettings {
    pub det: DetConfig,
    /// Nystrom order used for the B4 norm.
    pub quad_n: usize,
    pub slack: f64,
}

impl Default for EnvelopeSettings {
    fn default() -> Self {
        EnvelopeSettings { det: DetConfig::default(), quad_n: 64, slack: 1e-6 }
    }
}

/// Worst case over `grid` of each envelope bound:
/// D1 |psi| <= exp(C_* ||V||_{3/2}^2), epe |psi_2| <= C_* ||V||_{3/2}^2,
/// B22 ||Y0||_{B2}^2 <= 2 C_* ||V||_{3/2}^2, B21 ||Y0||_{B2}^2 <= ||V||_2^2 / (8 pi Im k),
/// p23 |psi_3| <= ||V||_{3/2}^3 / (96 pi), DA2x |log D_4| <= (c_4/2) ||Y0||_{B4}^4.
/// Each report holds the grid point with the largest lhs - rhs.
pub fn check_envelope_bounds(v: &Potential, grid: &[C], settings: &EnvelopeSettings) -> Result<Vec<TraceReport>> {
    if grid.is_empty() {
        return invalid("empty k grid");
    }
    if let Some(k) = grid.iter().find(|k| !(k.im >= 0.0) || k.norm() == 0.0) {
        return invalid(format!("grid point {k} is outside the closed upper half-plane or zero"));
    }
    let n32 = v.norm_lp(1.5)?;
    let n2 = v.norm_lp(2.0)?;
    let cs = c_star();
    let engine = DetEngine::new(v, settings.det)?;
    let q = build_quadrature(v.support, settings.quad_n)?;
    let rows: Vec<[(f64, f64); 6]> = grid
        .par_iter()
        .map(|&k| -> Result<[(f64, f64); 6]> {
            let e = engine.eval(k)?;
            let hs = hs_norm_sq_bipolar(v, k);
            let b4 = if v.is_zero() {
                0.0
            } else {
                let cset = bsop::build_channels(v, k, &q, default_channel_count(v, k))?;
                bsop::b4_norm4(&cset)
            };
            let b21 = if k.im > 0.0 { n2 * n2 / (8.0 * PI * k.im) } else { f64::INFINITY };
            Ok([
                (e.psi.norm(), (cs * n32 * n32).exp()),
                (e.psi2.norm(), cs * n32 * n32),
                (hs, 2.0 * cs * n32 * n32),
                (hs, b21),
                (e.psi3.norm(), n32.powi(3) / (96.0 * PI)),
                (e.log_d4.norm(), 0.5 * C4 * b4),
            ])
        })
        .collect::<Result<_>>()?;
    let mut out = Vec::with_capacity(ENVELOPE_BOUNDS.len());
    for (b, name) in ENVELOPE_BOUNDS.iter().enumerate() {
        let mut worst = 0;
        let mut violations = 0;
        for (i, row) in rows.iter().enumerate() {
            let (l, r) = row[b];
            if l > r + settings.slack {
                violations += 1;
            }
            if l - r > rows[worst][b].0 - rows[worst][b].1 {
                worst = i;
            }
        }
        let (l, r) = rows[worst][b];
        let params = json!({
            "k": grid[worst],
            "grid_points": grid.len(),
            "violations": violations,
            "slack": settings.slack,
            "C_star": cs,
            "c4": C4,
            "B4_quad_n": settings.quad_n,
        });
        out.push(TraceReport::bound(Identity::Envelope(name.to_string()), l, r, settings.slack, params));
    }
    Ok(out)
}
