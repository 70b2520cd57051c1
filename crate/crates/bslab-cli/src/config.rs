//! Run configuration: a TOML file with `potential`, `numerics`, `task` and
//! `output` sections, command-line `section.key=value` overrides, and the
//! hash that tags every output.

use bslab::det::{Backend, DetConfig};
use bslab::potential::Potential;
use bslab::spectra::{Rect, SearchOptions};
use bslab::traceform::{EnvelopeSettings, Identity, TraceSettings, ENVELOPE_BOUNDS};
use bslab::Complex64;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::path::PathBuf;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("config syntax: {0}")]
    Parse(String),
    #[error("bad override {0:?}: expected section.key=value")]
    Override(String),
    #[error("invalid config: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProfileKind {
    Zero,
    Gaussian,
    SquareWell,
    Exponential,
}

/// `[potential]`: V(r) = (g_re + i g_im) * profile(r).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PotentialSection {
    pub profile: ProfileKind,
    #[serde(default)]
    pub g_re: f64,
    #[serde(default)]
    pub g_im: f64,
    /// Gaussian width or exponential decay rate.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shape: Option<f64>,
    /// Square-well radius, or an explicit support radius for decaying profiles.
    #[serde(rename = "R", default, skip_serializing_if = "Option::is_none")]
    pub r: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub smoothness_m: Option<u32>,
}

/// `[numerics]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NumericsSection {
    #[serde(default = "d_backend")]
    pub backend: Backend,
    #[serde(default = "d_quad_n")]
    pub quad_n: usize,
    #[serde(default = "d_ell_eps")]
    pub ell_eps: f64,
    #[serde(rename = "L_max", default, skip_serializing_if = "Option::is_none")]
    pub l_max: Option<usize>,
    #[serde(rename = "T_max", default = "d_t_max")]
    pub t_max: f64,
    #[serde(default = "d_n_grid")]
    pub n_grid: usize,
    #[serde(default = "d_tol_zero")]
    pub tol_zero: f64,
    #[serde(default = "d_delta_floor")]
    pub delta_floor: f64,
    /// Zero search rectangle [re_min, re_max, im_min, im_max].
    #[serde(default = "d_rect")]
    pub rect: [f64; 4],
    #[serde(default = "d_max_depth")]
    pub max_depth: usize,
}

/// k grid of a scan: n_re x n_im points, rows ordered by Im k, then Re k.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub re_min: f64,
    pub re_max: f64,
    pub n_re: usize,
    pub im_min: f64,
    pub im_max: f64,
    pub n_im: usize,
}

/// Probes on the arc |k| = radius at angles pi (i + 1/2) / count.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArcSpec {
    pub radius: f64,
    pub count: usize,
}

/// `[task]`: parameters of the individual subcommands.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TaskSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<GridSpec>,
    /// Explicit wave numbers [re, im], scanned after the grid.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub k_list: Vec<[f64; 2]>,
    #[serde(default = "d_identities")]
    pub identities: Vec<String>,
    #[serde(default = "d_arc")]
    pub probes: ArcSpec,
    #[serde(default = "d_nmax")]
    pub nmax: usize,
    #[serde(rename = "C2", default = "d_c2")]
    pub c2: f64,
    #[serde(default = "d_tol_factorization")]
    pub tol_factorization: f64,
    #[serde(default = "d_envelope_quad_n")]
    pub envelope_quad_n: usize,
}

/// `[output]`: destination files; unset paths go to standard output.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path: Option<PathBuf>,
    /// Boundary samples `t,h` written by `factorize`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub boundary: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub potential: PotentialSection,
    #[serde(default)]
    pub numerics: NumericsSection,
    #[serde(default)]
    pub task: TaskSection,
    #[serde(default)]
    pub output: OutputSection,
}

fn d_backend() -> Backend {
    Backend::Volterra
}
fn d_quad_n() -> usize {
    200
}
fn d_ell_eps() -> f64 {
    1e-4
}
fn d_t_max() -> f64 {
    60.0
}
fn d_n_grid() -> usize {
    2048
}
fn d_tol_zero() -> f64 {
    1e-10
}
fn d_delta_floor() -> f64 {
    1e-3
}
fn d_rect() -> [f64; 4] {
    [-6.0, 6.0, 1e-2, 6.0]
}
fn d_max_depth() -> usize {
    8
}
fn d_identities() -> Vec<String> {
    vec!["tr12".into()]
}
fn d_arc() -> ArcSpec {
    ArcSpec { radius: 3.0, count: 8 }
}
fn d_nmax() -> usize {
    4
}
fn d_c2() -> f64 {
    1.0
}
fn d_tol_factorization() -> f64 {
    1e-3
}
fn d_envelope_quad_n() -> usize {
    64
}

impl Default for NumericsSection {
    fn default() -> Self {
        toml::from_str("").expect("defaults")
    }
}

impl Default for TaskSection {
    fn default() -> Self {
        toml::from_str("").expect("defaults")
    }
}

fn invalid(msg: impl Into<String>) -> ConfigError {
    ConfigError::Invalid(msg.into())
}

impl RunConfig {
    /// Parses TOML text and applies `section.key=value` overrides, whose
    /// values use TOML syntax (`numerics.quad_n=100`, `task.identities=["tr12"]`).
    pub fn parse(text: &str, overrides: &[String]) -> Result<Self, ConfigError> {
        let mut doc: toml::Table = toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))?;
        for item in overrides {
            let (path, value) = item.split_once('=').ok_or_else(|| ConfigError::Override(item.clone()))?;
            let (section, key) = path.trim().split_once('.').ok_or_else(|| ConfigError::Override(item.clone()))?;
            let value = parse_value(value.trim()).ok_or_else(|| ConfigError::Override(item.clone()))?;
            let table = doc
                .entry(section.to_string())
                .or_insert_with(|| toml::Value::Table(toml::Table::new()))
                .as_table_mut()
                .ok_or_else(|| ConfigError::Override(item.clone()))?;
            table.insert(key.to_string(), value);
        }
        let cfg: RunConfig = toml::Value::Table(doc).try_into().map_err(|e: toml::de::Error| ConfigError::Parse(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &std::path::Path, overrides: &[String]) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read { path: path.to_path_buf(), source })?;
        Self::parse(&text, overrides)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// SHA-256 of the normalized TOML form without the output paths, so that
    /// the same computation written to different files carries the same hash.
    pub fn params_hash(&self) -> String {
        let numeric = RunConfig { output: OutputSection::default(), ..self.clone() };
        let digest = Sha256::digest(numeric.to_toml().as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let p = &self.potential;
        let positive = |name: &str, x: Option<f64>| match x {
            Some(v) if !(v > 0.0 && v.is_finite()) => Err(invalid(format!("potential.{name} must be positive, got {v}"))),
            _ => Ok(()),
        };
        positive("shape", p.shape)?;
        positive("R", p.r)?;
        if !(p.g_re.is_finite() && p.g_im.is_finite()) {
            return Err(invalid("potential amplitude must be finite"));
        }
        if p.profile == ProfileKind::SquareWell && p.r.is_none() {
            return Err(invalid("square_well needs potential.R"));
        }
        let n = &self.numerics;
        for (name, v) in [("ell_eps", n.ell_eps), ("T_max", n.t_max), ("tol_zero", n.tol_zero), ("delta_floor", n.delta_floor)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(invalid(format!("numerics.{name} must be positive, got {v}")));
            }
        }
        if n.quad_n < 2 {
            return Err(invalid("numerics.quad_n must be at least 2"));
        }
        if n.n_grid == 0 || n.n_grid % 32 != 0 {
            return Err(invalid(format!("numerics.n_grid must be a positive multiple of 32, got {}", n.n_grid)));
        }
        let r = n.rect;
        if !(r[0] < r[1] && r[2] < r[3]) || r.iter().any(|x| !x.is_finite()) {
            return Err(invalid(format!("numerics.rect {r:?} is not a rectangle")));
        }
        if r[2] < n.delta_floor {
            return Err(invalid(format!("numerics.rect reaches Im k = {} below delta_floor {}", r[2], n.delta_floor)));
        }
        let t = &self.task;
        if let Some(g) = &t.grid {
            if g.n_re == 0 || g.n_im == 0 {
                return Err(invalid("task.grid needs at least one point per axis"));
            }
            if g.im_min < 0.0 || g.im_max < g.im_min || g.re_max < g.re_min {
                return Err(invalid("task.grid must lie in the closed upper half-plane with min <= max"));
            }
        }
        if t.k_list.iter().any(|k| !(k[1] >= 0.0) || !k[0].is_finite()) {
            return Err(invalid("task.k_list entries need Im k >= 0"));
        }
        if !(t.probes.radius > 0.0) || t.probes.count == 0 {
            return Err(invalid("task.probes needs a positive radius and count"));
        }
        for (name, v) in [("C2", t.c2), ("tol_factorization", t.tol_factorization)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(invalid(format!("task.{name} must be positive, got {v}")));
            }
        }
        for id in &t.identities {
            match id.parse::<Identity>().map_err(|e| invalid(e.to_string()))? {
                Identity::Envelope(name) if name != "all" && !ENVELOPE_BOUNDS.contains(&name.as_str()) => {
                    return Err(invalid(format!("unknown envelope bound {name:?}")));
                }
                Identity::Envelope(_) if t.grid.is_none() && t.k_list.is_empty() => {
                    return Err(invalid("envelope bounds need task.grid or task.k_list"));
                }
                Identity::Tre1(k) if !(k.im > 0.0) => return Err(invalid(format!("{id} needs Im k > 0"))),
                _ => {}
            }
        }
        Ok(())
    }

    pub fn potential(&self) -> Potential {
        let p = &self.potential;
        let g = Complex64::new(p.g_re, p.g_im);
        let mut v = match p.profile {
            ProfileKind::Zero => Potential::zero(),
            ProfileKind::Gaussian => Potential::gaussian_width(g, p.shape.unwrap_or(1.0)),
            ProfileKind::SquareWell => Potential::square_well(g, p.r.unwrap_or(1.0)),
            ProfileKind::Exponential => Potential::exponential(g, p.shape.unwrap_or(1.0)),
        };
        if p.profile != ProfileKind::SquareWell {
            if let Some(r) = p.r {
                v.support = r;
            }
        }
        if let Some(m) = p.smoothness_m {
            v.smoothness_m = m;
        }
        v
    }

    pub fn det_config(&self) -> DetConfig {
        let n = &self.numerics;
        DetConfig { backend: n.backend, quad_n: n.quad_n, l_max: n.l_max, ell_eps: n.ell_eps, ..DetConfig::default() }
    }

    pub fn rect(&self) -> Rect {
        let r = self.numerics.rect;
        Rect { re_min: r[0], re_max: r[1], im_min: r[2], im_max: r[3] }
    }

    pub fn search(&self) -> SearchOptions {
        SearchOptions {
            tol_zero: self.numerics.tol_zero,
            max_depth: self.numerics.max_depth,
            delta_floor: self.numerics.delta_floor,
            ..SearchOptions::default()
        }
    }

    pub fn trace_settings(&self) -> TraceSettings {
        TraceSettings {
            det: self.det_config(),
            n_grid: self.numerics.n_grid,
            t_max: self.numerics.t_max,
            rect: self.rect(),
            search: self.search(),
            nmax: self.task.nmax,
            ..TraceSettings::default()
        }
    }

    pub fn envelope_settings(&self) -> EnvelopeSettings {
        EnvelopeSettings { det: self.det_config(), quad_n: self.task.envelope_quad_n, ..EnvelopeSettings::default() }
    }

    /// Scan points: the grid (Im-major order) followed by `k_list`.
    pub fn k_points(&self) -> Vec<Complex64> {
        let mut out = Vec::new();
        if let Some(g) = &self.task.grid {
            let axis = |lo: f64, hi: f64, n: usize, i: usize| if n == 1 { lo } else { lo + (hi - lo) * i as f64 / (n - 1) as f64 };
            for j in 0..g.n_im {
                for i in 0..g.n_re {
                    out.push(Complex64::new(axis(g.re_min, g.re_max, g.n_re, i), axis(g.im_min, g.im_max, g.n_im, j)));
                }
            }
        }
        out.extend(self.task.k_list.iter().map(|k| Complex64::new(k[0], k[1])));
        out
    }

    pub fn probes(&self) -> Vec<Complex64> {
        let a = &self.task.probes;
        (0..a.count)
            .map(|i| Complex64::from_polar(a.radius, std::f64::consts::PI * (i as f64 + 0.5) / a.count as f64))
            .collect()
    }
}

fn parse_value(text: &str) -> Option<toml::Value> {
    let doc: toml::Table = toml::from_str(&format!("v = {text}")).ok()?;
    doc.get("v").cloned().or_else(|| Some(toml::Value::String(text.to_string())))
}
