use proptest::prelude::*;

use sandwich_core::params::{
    case1_formulas, poisson_density, select_params, solve_mu_stage1, solve_mu_stage2, validate_constraints,
    validate_selected, ParamCase, Relation,
};

fn along(n: f64) -> sandwich_core::params::ConstraintReport {
    let d = n.ln().powi(7);
    let f = case1_formulas(n, d);
    validate_constraints(n, d, f.xi1, f.f, f.sigma)
}

#[test]
fn log4_ratio_grows_along_lower_end() {
    let a = along(1e6);
    let b = along(1e8);
    let name = "xi1*d >= log^4 n";
    assert!(b.get(name).unwrap().ratio > a.get(name).unwrap().ratio);
}

#[test]
fn xi1_f_trends_to_zero() {
    let trend = |n: f64| {
        let f = case1_formulas(n, 1e4_f64.max(n.ln().powi(7)));
        f.xi1 * f.f
    };
    assert!(trend(1e12) < trend(1e6));
    let f = case1_formulas(1e6, 1e4);
    let r = validate_constraints(1e6, 1e4, f.xi1, f.f, f.sigma);
    let c = r.get("xi1*f = o(1)").unwrap();
    assert!(c.ratio.is_finite() && c.ratio > 0.0);
    assert_eq!(c.pass, None);
}

#[test]
fn log_ratio_relation_degrades_at_lower_end() {
    // log(n/ξ₁d) / (σf) ~ ln n / (lnln n · lnlnln n) along d = ln⁷n
    let name = "log(n/(xi1*d)) = o(sigma*f)";
    let r: Vec<f64> = [1e6, 1e8, 1e10, 1e12]
        .iter()
        .map(|&n| along(n).get(name).unwrap().ratio)
        .collect();
    assert!(r.windows(2).all(|w| w[1] > w[0]), "{r:?}");
}

#[test]
fn directions_are_declared() {
    let r = along(1e6);
    for c in &r.constraints {
        match c.relation {
            Relation::AtLeast | Relation::Dominates => assert!(c.pass.is_some()),
            Relation::LittleO | Relation::BigO => assert!(c.pass.is_none()),
        }
    }
    assert_eq!(r.constraints.len(), 8);
}

#[test]
fn desk_scale_is_reported_unsatisfied() {
    let p = select_params(1_000_000, 10_000).unwrap();
    assert_eq!(p.case, ParamCase::Case1);
    assert!(!validate_selected(&p).all_checkable_pass);
    let p = select_params(100, 99).unwrap();
    assert!(!p.in_validity_window);
    let p = select_params(1_000_000, 100_000).unwrap();
    assert_eq!(p.case, ParamCase::Case2);
}

proptest! {
    #[test]
    fn stage1_round_trip(n in 3u64..5000, dfrac in 0.0f64..1.0, xi1 in 0.001f64..0.999) {
        let d = 1 + ((n - 2) as f64 * dfrac) as u64;
        if let Ok(mu) = solve_mu_stage1(n, d, xi1) {
            let p0 = (1.0 - xi1) * (d as f64 * n as f64 / 2.0) / (n * (n - 1) / 2) as f64;
            prop_assert!((poisson_density(n, mu) - p0).abs() <= 1e-12);
        }
    }

    #[test]
    fn stage2_round_trip(n in 3u64..5000, xi in 0.0001f64..=1.0) {
        let mu = solve_mu_stage2(n, xi).unwrap();
        prop_assert!((1.0 - poisson_density(n, mu) - xi).abs() <= 1e-12);
    }

    #[test]
    fn selection_is_total_and_deterministic(n in 3u64..1_000_000, dfrac in 0.0f64..1.0) {
        let d = 1 + ((n - 2) as f64 * dfrac) as u64;
        let a = select_params(n, d).unwrap();
        let b = select_params(n, d).unwrap();
        prop_assert_eq!(a, b);
    }
}
