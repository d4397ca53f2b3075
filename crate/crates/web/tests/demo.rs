use std::collections::BTreeSet;

use sandwich_web::{edge_table, params_view, sandwich_view, Pair, MAX_N};

fn set(edges: &[Pair]) -> BTreeSet<Pair> {
    edges.iter().copied().collect()
}

#[test]
fn trial_view_matches_its_flags() {
    let mut seen_ind_sample = false;
    for trial in 0..200 {
        let v = sandwich_view(6, 3, 1, trial, 1.0, 0.4, 0.8).unwrap();
        let (lo, mid, up) = (set(&v.lower), set(&v.middle), set(&v.upper));
        assert_eq!(v.middle.len(), 9);
        let mut deg = [0; 6];
        for [a, b] in &v.middle {
            deg[*a] += 1;
            deg[*b] += 1;
        }
        assert_eq!(deg, [3; 6]);
        assert!(set(&v.partial).is_subset(&mid));
        assert_eq!(v.contains_lower, lo.is_subset(&mid));
        assert_eq!(v.contains_upper, mid.is_subset(&up));
        if !(v.stage1_ind_sample || v.stage2_ind_sample) {
            assert!(v.contains_lower && v.contains_upper, "trial {trial}");
        } else {
            seen_ind_sample = true;
        }
    }
    assert!(seen_ind_sample);
}

#[test]
fn trial_view_is_reproducible_and_rejects_large_n() {
    let a = serde_json::to_string(&sandwich_view(5, 2, 3, 4, 1.0, 0.4, 0.8).unwrap()).unwrap();
    let b = serde_json::to_string(&sandwich_view(5, 2, 3, 4, 1.0, 0.4, 0.8).unwrap()).unwrap();
    assert_eq!(a, b);
    assert!(sandwich_view(MAX_N + 2, 3, 0, 0, 1.0, 0.4, 0.8).is_err());
    assert!(sandwich_view(5, 2, 0, 0, 10.0, 0.4, 0.8).is_err());
}

#[test]
fn k4_perfect_matchings() {
    let v = edge_table("1 1 1 1", "").unwrap();
    assert_eq!(v.factors, 3);
    assert_eq!(v.edges.len(), 6);
    for r in &v.edges {
        assert_eq!(r.fraction, "1/3");
        assert_eq!(r.eta, 0.0);
    }
}

#[test]
fn edge_table_on_a_given_host() {
    // path 0-1-2-3 plus chord 0-2; t = (1,1,1,1) forces the matching {01, 23}
    let v = edge_table("1,1,1,1", "4 4\n0 1\n0 2\n1 2\n2 3\n").unwrap();
    assert_eq!(v.factors, 1);
    let p: Vec<(Pair, &str, f64)> = v.edges.iter().map(|r| (r.edge, r.fraction.as_str(), r.eta)).collect();
    assert_eq!(
        p,
        vec![
            ([0, 1], "1/1", 0.0),
            ([0, 2], "0/1", 1.0),
            ([1, 2], "0/1", 1.0),
            ([2, 3], "1/1", 0.0)
        ]
    );
    assert_eq!(v.max_eta, 1.0);
    assert!(edge_table("1 1 x 1", "").is_err());
    assert!(edge_table("1 1 1", "").is_err());
    assert!(edge_table("1 1 1 1", "4 1\n3 1\n").is_err());
}

#[test]
fn params_view_selects_cases() {
    let a = params_view(1_000_000, 10_000, 10.0).unwrap();
    assert!((a.params.xi1 - 0.111_375_323_807_442_7).abs() < 1e-12);
    assert_eq!(a.constraints.constraints.len(), 8);
    let b = params_view(1_000_000, 100_000, 10.0).unwrap();
    assert!((b.params.sigma - 2.0 / 3.0).abs() < 1e-12);
    assert!(params_view(2, 1, 10.0).is_err());
}
