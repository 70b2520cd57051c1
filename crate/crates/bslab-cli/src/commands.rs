//! The subcommands. Each returns its text output and whether every check it
//! ran passed.

use crate::config::RunConfig;
use crate::output;
use bslab::det::{log_det_scan, DetEngine};
use bslab::hardy::inner_outer_residual;
use bslab::jost::default_channel_count;
use bslab::spectra::{locate_zeros, Rect, ZeroSet};
use bslab::traceform::{c_star, check_bound_t4, check_envelope_bounds, Evidence, Identity, TraceReport, ENVELOPE_BOUNDS};
use bslab::{BsError, Complex64};
use serde_json::{json, Value};

pub struct Outcome {
    pub text: String,
    /// Extra files (path, contents) written next to the main output.
    pub extra: Vec<(std::path::PathBuf, String)>,
    pub passed: bool,
}

impl Outcome {
    fn new(text: String, passed: bool) -> Self {
        Outcome { text, extra: Vec::new(), passed }
    }
}

fn rect_json(r: &Rect) -> Value {
    json!([r.re_min, r.re_max, r.im_min, r.im_max])
}

fn zeros_json(zs: &ZeroSet) -> Value {
    let zeros: Vec<Value> = zs
        .zeros
        .iter()
        .map(|z| {
            json!({
                "k_re": z.k.re,
                "k_im": z.k.im,
                "mult": z.multiplicity,
                "lambda_re": z.lambda.re,
                "lambda_im": z.lambda.im,
                "residual": z.newton_residual,
            })
        })
        .collect();
    json!({
        "zeros": zeros,
        "unresolved": zs.unresolved.iter().map(rect_json).collect::<Vec<_>>(),
        "B": zs.b,
        "r0": zs.r0,
        "count": zs.count,
        "search_rect": rect_json(&zs.search_rect),
    })
}

fn find_zeros(cfg: &RunConfig, engine: &DetEngine) -> Result<ZeroSet, BsError> {
    if cfg.potential().is_zero() {
        return Ok(ZeroSet::empty(cfg.rect()));
    }
    locate_zeros(engine, &cfg.rect(), &cfg.search(), cfg.task.nmax, 0.0)
}

pub fn scan(cfg: &RunConfig) -> Result<Outcome, BsError> {
    let ks = cfg.k_points();
    if ks.is_empty() {
        return Err(BsError::InvalidArgument("scan needs task.grid or task.k_list".into()));
    }
    let rows = log_det_scan(&cfg.potential(), &ks, &cfg.det_config())?;
    Ok(Outcome::new(output::scan_csv(&cfg.params_hash(), &ks, &rows), true))
}

pub fn eigs(cfg: &RunConfig) -> Result<Outcome, BsError> {
    let engine = DetEngine::new(&cfg.potential(), cfg.det_config())?;
    let zs = find_zeros(cfg, &engine)?;
    let mut doc = zeros_json(&zs);
    doc["params_hash"] = json!(cfg.params_hash());
    Ok(Outcome::new(output::json_text(&doc), zs.unresolved.is_empty()))
}

pub fn verify(cfg: &RunConfig) -> Result<Outcome, BsError> {
    let v = cfg.potential();
    let ids: Vec<Identity> = cfg.task.identities.iter().map(|s| s.parse()).collect::<Result<_, _>>()?;
    let needs_evidence = ids.iter().any(|id| matches!(id, Identity::Tr12 | Identity::Trj(_) | Identity::Tre1(_)));
    let evidence = if needs_evidence { Some(Evidence::collect(&v, &cfg.trace_settings())?) } else { None };
    let mut zeros = evidence.as_ref().map(|e| e.zeros.clone());
    let mut envelope: Option<Vec<TraceReport>> = None;
    let mut reports = Vec::new();
    for id in &ids {
        match id {
            Identity::Tr12 => reports.push(evidence.as_ref().expect("collected").verify_tr12()),
            Identity::Trj(j) => reports.push(evidence.as_ref().expect("collected").verify_trj(*j)?),
            Identity::Tre1(k) => reports.push(evidence.as_ref().expect("collected").verify_tre1(*k)?),
            Identity::T4Bound => {
                if zeros.is_none() {
                    let engine = DetEngine::new(&v, cfg.det_config())?;
                    zeros = Some(find_zeros(cfg, &engine)?);
                }
                let zs = zeros.as_ref().expect("located");
                let mut r = check_bound_t4(&v, zs, cfg.task.c2)?;
                if !zs.unresolved.is_empty() {
                    r.verdict = bslab::traceform::Verdict::Inconclusive;
                }
                reports.push(r);
            }
            Identity::Envelope(name) => {
                if envelope.is_none() {
                    envelope = Some(check_envelope_bounds(&v, &cfg.k_points(), &cfg.envelope_settings())?);
                }
                let all = envelope.as_ref().expect("computed");
                for (r, bound) in all.iter().zip(ENVELOPE_BOUNDS) {
                    if name == "all" || name == bound {
                        reports.push(r.clone());
                    }
                }
            }
        }
    }
    let hash = cfg.params_hash();
    for r in &mut reports {
        r.params["params_hash"] = json!(hash);
    }
    let passed = reports.iter().all(TraceReport::passed);
    let doc = serde_json::to_value(&reports).expect("reports serialize");
    Ok(Outcome::new(output::json_text(&doc), passed))
}

pub fn factorize(cfg: &RunConfig) -> Result<Outcome, BsError> {
    let ev = Evidence::collect(&cfg.potential(), &cfg.trace_settings())?;
    let bd = ev.boundary()?;
    let data = inner_outer_residual(&ev.engine, &ev.zeros, &bd, &cfg.probes())?;
    let max_residual = data.max_residual();
    let hash = cfg.params_hash();
    let passed = max_residual <= cfg.task.tol_factorization && ev.zeros.unresolved.is_empty();
    let probes: Vec<Value> = data
        .residual_probes
        .iter()
        .map(|p| json!({ "k_re": p.k.re, "k_im": p.k.im, "residual": p.residual }))
        .collect();
    let doc = json!({
        "params_hash": hash,
        "K": data.k_coeffs,
        "J": data.j_coeffs,
        "nu_total": data.nu_total,
        "nu_policy": "nu = 0",
        "residual_probes": probes,
        "max_residual": max_residual,
        "tol": cfg.task.tol_factorization,
        "verdict": if passed { "pass" } else { "fail" },
        "zeros": zeros_json(&ev.zeros),
    });
    let mut out = Outcome::new(output::json_text(&doc), passed);
    if let Some(path) = &cfg.output.boundary {
        out.extra.push((path.clone(), output::boundary_csv(&hash, &bd.t, &bd.h)));
    }
    Ok(out)
}

pub fn info(cfg: &RunConfig) -> Result<Outcome, BsError> {
    let v = cfg.potential();
    let moments = v.moments_q()?;
    let n32 = v.norm_lp(1.5)?;
    let n2 = v.norm_lp(2.0)?;
    let k_unit = Complex64::new(0.0, 1.0);
    let q2 = moments.q2.map(|q| json!([q.re, q.im]));
    let doc = json!({
        "params_hash": cfg.params_hash(),
        "threads": rayon::current_num_threads(),
        "potential": {
            "profile": v.profile,
            "g": [v.g.re, v.g.im],
            "support": v.support,
            "smoothness_m": v.smoothness_m,
            "sup_abs": v.sup_abs(),
            "norm_3_2": n32,
            "norm_2": n2,
            "Q0": [moments.q0.re, moments.q0.im],
            "Q2": q2,
        },
        "C_star": c_star(),
        "psi2_envelope": c_star() * n32 * n32,
        "channels_at_i": default_channel_count(&v, k_unit),
        "config": cfg.to_toml(),
    });
    Ok(Outcome::new(output::json_text(&doc), true))
}
