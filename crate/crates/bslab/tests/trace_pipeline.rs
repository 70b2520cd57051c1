//! End-to-end checks of the trace-formula pipeline at a coarse boundary
//! level, fast enough for every test run.

use bslab::hardy::inner_outer_residual;
use bslab::potential::Potential;
use bslab::traceform::{check_bound_t4, Evidence, TraceSettings, Verdict};
use bslab::Complex64 as C;

fn coarse() -> TraceSettings {
    TraceSettings { n_grid: 256, t_max: 10.0, ..TraceSettings::default() }
}

#[test]
fn repulsive_gaussian_identities_at_a_coarse_level() {
    let v = Potential::gaussian(C::new(1.0, 0.5));
    let ev = Evidence::collect(&v, &coarse()).unwrap();
    assert!(ev.zeros.zeros.is_empty());
    assert!(ev.zeros.unresolved.is_empty());

    let tr12 = ev.verify_tr12();
    assert_eq!(tr12.verdict, Verdict::Pass);
    assert_eq!(tr12.lhs, C::new(0.0, 0.0));
    assert!(tr12.residual < 1e-8, "{}", tr12.residual);

    for j in [1, 2] {
        let r = ev.verify_trj(j).unwrap();
        assert!(r.passed(), "trj:{j} residual {}", r.residual);
    }
    for k in [C::new(0.0, 1.5), C::new(1.0, 2.0)] {
        let r = ev.verify_tre1(k).unwrap();
        assert!(r.residual < 1e-6, "tre1 at {k}: {}", r.residual);
    }

    let probes: Vec<C> = (0..4).map(|i| C::from_polar(3.0, std::f64::consts::PI * (i as f64 + 0.5) / 4.0)).collect();
    let fact = inner_outer_residual(&ev.engine, &ev.zeros, &ev.boundary().unwrap(), &probes).unwrap();
    assert!(fact.max_residual() < 1e-5, "{}", fact.max_residual());
    assert_eq!(fact.nu_total, 0.0);
    assert!((fact.j_coeffs[0] + ev.moments.q0.re).abs() < 1e-6);
}

#[test]
fn trace_reports_serialize_with_the_documented_fields() {
    let v = Potential::gaussian(C::new(1.0, 0.5));
    let ev = Evidence::collect(&v, &TraceSettings { n_grid: 64, t_max: 4.0, ..TraceSettings::default() }).unwrap();
    let json = serde_json::to_value(ev.verify_tr12()).unwrap();
    for key in ["identity", "lhs", "rhs", "residual", "verdict", "params"] {
        assert!(json.get(key).is_some(), "{key}");
    }
    assert_eq!(json["identity"], "tr12");
    assert_eq!(json["lhs"].as_array().unwrap().len(), 2);
    assert!(["pass", "fail", "inconclusive"].contains(&json["verdict"].as_str().unwrap()));
}

#[test]
fn t4_bound_reports_the_smallest_constant() {
    let v = Potential::square_well(C::new(-5.0, 0.0), 1.0);
    let ev = Evidence::collect(&v, &TraceSettings { n_grid: 64, t_max: 4.0, ..TraceSettings::default() }).unwrap();
    assert_eq!(ev.zeros.zeros.len(), 1);
    let probe = check_bound_t4(&v, &ev.zeros, 1.0).unwrap();
    let c2_min = probe.params["C2_min"].as_f64().unwrap();
    assert!(c2_min > 0.0);
    assert!(check_bound_t4(&v, &ev.zeros, 1.001 * c2_min).unwrap().passed());
    assert!(!check_bound_t4(&v, &ev.zeros, 0.999 * c2_min).unwrap().passed());
}
