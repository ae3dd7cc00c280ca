//! Builders, splitting, probing and file ingestion.

use std::f64::consts::PI;

use fspair::measures::{
    antipodal_split, degree_probe, integrate_against, load_pair, make_guinand, make_meyer,
    make_poisson, meyer_chi, pair_from_json, pair_to_json, Density, FSPair, ProbeVerdict,
    SummationFunction, TemperedMeasure,
};
use fspair::qseries::r3_sequence;
use fspair::quadrature::gauss_fixed;
use fspair::testfn::{verify_pair, TestFunctionSpec};
use fspair::{Complex64, Error};
use proptest::prelude::*;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn builtins() -> Vec<FSPair> {
    vec![
        make_poisson(64.0, 64.0).unwrap(),
        make_guinand(0.0, 256).unwrap(),
        make_guinand(1.0 / 9.0, 512).unwrap(),
        make_guinand(0.125, 128).unwrap(),
        make_meyer(2000).unwrap(),
    ]
}

#[test]
fn builders_pass_their_own_validation() {
    for p in builtins() {
        p.validate().unwrap();
        assert!(p.antipodal && p.mu.is_real(), "{}", p.name);
        let locs: Vec<f64> = p.mu.atoms().iter().map(|a| a.location).collect();
        assert!(locs.windows(2).all(|w| w[0] < w[1]), "{}", p.name);
    }
}

#[test]
fn meyer_dual_side_is_minus_i_times_mu() {
    let p = make_meyer(2000).unwrap();
    assert_eq!(p.a.support().len(), p.mu.atoms().len());
    for (atom, &(l, v)) in p.mu.atoms().iter().zip(p.a.support()) {
        assert_eq!(atom.location, l);
        assert_eq!(v, -Complex64::i() * atom.weight);
    }
}

#[test]
fn meyer_weights_follow_the_lattice_count() {
    let p = make_meyer(400).unwrap();
    let r3 = r3_sequence(400);
    for n in 1..=400usize {
        let expected = meyer_chi(n) * r3.get(n) as f64 / (n as f64).sqrt();
        let t = (n as f64).sqrt() / 2.0;
        let stored = p.mu.atoms_in(t - 1e-12, t + 1e-12);
        if expected == 0.0 {
            assert!(stored.is_empty(), "n = {n}");
        } else {
            assert_eq!(stored.len(), 1, "n = {n}");
            assert!((stored[0].weight.re - expected).abs() < 1e-12);
            let mirror = p.mu.atoms_in(-t - 1e-12, -t + 1e-12);
            assert_eq!(mirror[0].weight.re, -stored[0].weight.re);
        }
    }
}

#[test]
fn guinand_atoms_are_symmetric_and_self_dual() {
    for c0 in [0.0, 1.0 / 12.0, 1.0 / 9.0, 0.125] {
        let p = make_guinand(c0, 300).unwrap();
        let atoms = p.mu.atoms();
        for (a, b) in atoms.iter().zip(atoms.iter().rev()) {
            assert_eq!(a.location, -b.location);
            assert_eq!(a.weight, b.weight);
        }
        for a in atoms {
            assert_eq!(p.a.value(a.location), a.weight);
        }
    }
}

#[test]
fn guinand_first_atom_at_one_ninth() {
    let p = make_guinand(1.0 / 9.0, 16).unwrap();
    let t = (1.0f64 + 1.0 / 9.0).sqrt();
    let w = p.mu.atoms_in(t - 1e-12, t + 1e-12)[0].weight;
    assert!((w.re + 2.0 / 3.0).abs() < 1e-12);
}

#[test]
fn split_of_a_single_complex_atom() {
    let mu = TemperedMeasure::new(
        vec![fspair::Atom { location: 0.0, weight: c(1.0, 1.0) }],
        None,
        0,
        1.0,
        "single atom",
    )
    .unwrap();
    let a = SummationFunction::new(vec![(0.0, c(1.0, 1.0))], 1.0, 1.0).unwrap();
    let pair = FSPair::new("delta", mu, a, false, 0.1).unwrap();
    let (p1, p2) = antipodal_split(&pair).unwrap();
    assert_eq!(p1.mu.atoms()[0].weight, c(1.0, 0.0));
    assert_eq!(p2.mu.atoms()[0].weight, c(-1.0, 0.0));
    assert_eq!(p1.a.value(0.0), c(1.0, 0.0));
    assert_eq!(p2.a.value(0.0), c(-1.0, 0.0));
}

fn weight() -> impl Strategy<Value = Complex64> {
    (-3.0f64..3.0, -3.0f64..3.0).prop_map(|(x, y)| c(x, y))
}

fn random_pair() -> impl Strategy<Value = FSPair> {
    (
        prop::collection::vec((-5.0f64..5.0, weight()), 1..12),
        prop::collection::vec((-5.0f64..5.0, weight()), 1..12),
    )
        .prop_map(|(mu, a)| {
            let mu = TemperedMeasure::from_unsorted(mu, None, 0, 5.0, "random").unwrap();
            let a = SummationFunction::from_unsorted(a, 1.0, 5.0).unwrap();
            FSPair::new("random", mu, a, false, 0.1).unwrap()
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn split_parts_are_antipodal_and_reconstruct(pair in random_pair()) {
        let (p1, p2) = antipodal_split(&pair).unwrap();
        for p in [&p1, &p2] {
            prop_assert!(p.mu.is_real());
            for &(l, v) in p.a.support() {
                prop_assert!((p.a.value(-l) - v.conj()).norm() <= 1e-15 * (1.0 + v.norm()));
            }
        }
        for atom in pair.mu.atoms() {
            let t = atom.location;
            let w1 = p1.mu.atoms_in(t, t).first().map_or(c(0.0, 0.0), |a| a.weight);
            let w2 = p2.mu.atoms_in(t, t).first().map_or(c(0.0, 0.0), |a| a.weight);
            prop_assert_eq!(w1 - Complex64::i() * w2, atom.weight);
        }
        for &(l, v) in pair.a.support() {
            let rebuilt = p1.a.value(l) - Complex64::i() * p2.a.value(l);
            prop_assert!((rebuilt - v).norm() <= 4.0 * f64::EPSILON * (1.0 + v.norm()));
        }
    }

    #[test]
    fn json_round_trip_preserves_the_pair(pair in random_pair()) {
        let back = pair_from_json(&pair_to_json(&pair).unwrap()).unwrap();
        prop_assert_eq!(back.mu.atoms(), pair.mu.atoms());
        prop_assert_eq!(back.a.support(), pair.a.support());
    }
}

#[test]
fn split_of_antipodal_pair_leaves_nothing_behind() {
    let p = make_guinand(1.0 / 9.0, 64).unwrap();
    let (p1, p2) = antipodal_split(&p).unwrap();
    assert_eq!(p1.mu.atoms(), p.mu.atoms());
    assert!(p2.mu.is_empty());
    assert!(p2.a.support().is_empty());
}

fn geometric(first: f64, ratio: f64, count: usize) -> Vec<f64> {
    (0..count).map(|i| first * ratio.powi(i as i32)).collect()
}

#[test]
fn degree_probe_verdicts_survive_refinement() {
    let poisson = make_poisson(4096.0, 1.0).unwrap().mu;
    let selberg_like =
        TemperedMeasure::new(vec![], Some(Density::r_tanh_pi_r(1.0)), 3, f64::INFINITY, "density only")
            .unwrap();
    let cases = [
        (&poisson, 2, ProbeVerdict::Converging),
        (&poisson, 1, ProbeVerdict::Diverging),
        (&selberg_like, 3, ProbeVerdict::Converging),
        (&selberg_like, 2, ProbeVerdict::Diverging),
    ];
    for grid in [geometric(16.0, 2.0, 8), geometric(16.0, 2f64.sqrt(), 15)] {
        for (mu, n, expected) in &cases {
            let probe = degree_probe(mu, *n, &grid).unwrap();
            assert_eq!(probe.verdict, *expected, "n = {n}, grid {:?}", grid);
            assert!(probe.partial_integrals.windows(2).all(|w| w[1] >= w[0]));
        }
    }
}

#[test]
fn degree_probe_rejects_decreasing_grid() {
    let mu = make_poisson(8.0, 1.0).unwrap().mu;
    assert!(degree_probe(&mu, 2, &[4.0, 2.0, 8.0]).is_err());
}

#[test]
fn density_integral_matches_fixed_gauss_rule() {
    let mu = TemperedMeasure::new(vec![], Some(Density::r_tanh_pi_r(1.0)), 3, 10.0, "density").unwrap();
    let f = |r: f64| c((-r * r).exp(), 0.0);
    let got = integrate_against(&mu, f, 10.0, 1e-13);
    assert!(got.converged);
    let oracle: Complex64 = (0..40)
        .map(|i| {
            let a = -10.0 + 0.5 * i as f64;
            gauss_fixed(|r| f(r) * r * (PI * r).tanh(), a, a + 0.5, 30)
        })
        .sum();
    assert!((got.value - oracle).norm() < 1e-10, "{} vs {oracle}", got.value);
}

#[test]
fn integrating_a_single_atom_evaluates_the_function() {
    let mu = TemperedMeasure::new(
        vec![fspair::Atom { location: 0.0, weight: c(1.0, 0.0) }],
        None,
        0,
        1.0,
        "delta",
    )
    .unwrap();
    let r = integrate_against(&mu, |t| c((t + 0.3).cos(), t), 1.0, 1e-12);
    assert_eq!(r.value, c(0.3f64.cos(), 0.0));
}

fn write(dir: &tempfile::TempDir, name: &str, body: &str) -> std::path::PathBuf {
    let path = dir.path().join(name);
    std::fs::write(&path, body).unwrap();
    path
}

#[test]
fn loader_reports_schema_problems_by_field() {
    let dir = tempfile::tempdir().unwrap();
    let unknown = write(
        &dir,
        "unknown.json",
        r#"{"name":"x","antipodal":true,"strip_constant":0.1,"extra":1,
            "mu":{"degree_bound":2,"atoms":[]},"a":{"growth_constant":1,"support":[]}}"#,
    );
    match load_pair(&unknown) {
        Err(Error::Schema { message, .. }) => assert!(message.contains("extra")),
        other => panic!("expected a schema error, got {other:?}"),
    }
    let bad_strip = write(
        &dir,
        "strip.json",
        r#"{"name":"x","antipodal":true,"strip_constant":-1,
            "mu":{"degree_bound":2,"atoms":[]},"a":{"growth_constant":1,"support":[]}}"#,
    );
    match load_pair(&bad_strip) {
        Err(Error::Schema { field, .. }) => assert_eq!(field, "strip_constant"),
        other => panic!("expected a schema error, got {other:?}"),
    }
    assert!(load_pair(dir.path().join("missing.json")).is_err());
}

#[test]
fn loader_rejects_unsorted_atoms_and_broken_antipodality() {
    let unsorted = r#"{"name":"x","antipodal":false,"strip_constant":0.1,
        "mu":{"degree_bound":2,"atoms":[{"t":1,"re":1,"im":0},{"t":-1,"re":1,"im":0}]},
        "a":{"growth_constant":1,"support":[]}}"#;
    assert!(matches!(pair_from_json(unsorted), Err(Error::Unsorted { index: 1, .. })));

    let not_antipodal = r#"{"name":"x","antipodal":true,"strip_constant":0.1,
        "mu":{"degree_bound":2,"atoms":[{"t":-1,"re":1,"im":0},{"t":1,"re":1,"im":0}]},
        "a":{"growth_constant":1,"support":[{"lambda":-1,"re":1,"im":1},{"lambda":1,"re":1,"im":1}]}}"#;
    assert!(matches!(pair_from_json(not_antipodal), Err(Error::Antipodality { .. })));
}

#[test]
fn loader_merges_near_duplicate_atoms() {
    let text = r#"{"name":"x","antipodal":false,"strip_constant":0.1,
        "mu":{"degree_bound":2,"atoms":[{"t":0.5,"re":1,"im":0},{"t":0.5000000000001,"re":2,"im":0}]},
        "a":{"growth_constant":1,"support":[]}}"#;
    let p = pair_from_json(text).unwrap();
    assert_eq!(p.mu.atoms().len(), 1);
    assert_eq!(p.mu.atoms()[0].weight, c(3.0, 0.0));
}

#[test]
fn selberg_shaped_file_loads_and_probes_as_degree_three() {
    // spectral atoms at ±r_j/2π and a length-side a(±log N) as user data
    let text = r#"{"name":"selberg-like","antipodal":true,"strip_constant":0.5,
        "mu":{"degree_bound":3,
              "atoms":[{"t":-0.9,"re":1,"im":0},{"t":-0.6,"re":1,"im":0},
                       {"t":0.6,"re":1,"im":0},{"t":0.9,"re":1,"im":0}],
              "density":{"kind":"r_tanh_pi_r","scale":-0.25}},
        "a":{"growth_constant":1,
             "support":[{"lambda":-1.7,"re":0.4,"im":0},{"lambda":1.7,"re":0.4,"im":0}]}}"#;
    let p = pair_from_json(text).unwrap();
    assert_eq!(p.mu.degree_bound(), 3);
    let grid = geometric(16.0, 2.0, 8);
    assert_eq!(degree_probe(&p.mu, 3, &grid).unwrap().verdict, ProbeVerdict::Converging);
    assert_eq!(degree_probe(&p.mu, 2, &grid).unwrap().verdict, ProbeVerdict::Diverging);
}

#[test]
fn empty_pair_loads_and_verifies_trivially() {
    let text = r#"{"name":"empty","antipodal":true,"strip_constant":0.1,
        "mu":{"degree_bound":0,"atoms":[],"density":null},"a":{"growth_constant":1,"support":[]}}"#;
    let p = pair_from_json(text).unwrap();
    let r = verify_pair(&p, &TestFunctionSpec::bump(2.0, 0.3).unwrap(), 1e-10).unwrap();
    assert_eq!(r.lhs, c(0.0, 0.0));
    assert_eq!(r.rhs, c(0.0, 0.0));
}

#[test]
fn poisson_builder_matches_its_definition() {
    let p = make_poisson(2.0, 3.0).unwrap();
    let locs: Vec<f64> = p.mu.atoms().iter().map(|a| a.location).collect();
    assert_eq!(locs, vec![-2.0, -1.0, 0.0, 1.0, 2.0]);
    assert!(p.mu.atoms().iter().all(|a| a.weight == c(1.0, 0.0)));
    assert_eq!(p.a.support().len(), 7);
    assert_eq!(p.mu.degree_bound(), 2);
}
