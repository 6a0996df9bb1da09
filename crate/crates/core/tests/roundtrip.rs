//! Parser/printer round-trip: fuzzed ASTs over the whole grammar reparse
//! to alpha-equal terms, and substitution respects alpha-equivalence.

mod common;

use common::Fuzzer;
use dcbpv::ast::*;
use dcbpv::kernel::normalize_value;
use dcbpv::parser::{parse_open_comp, parse_open_value};
use dcbpv::pretty;
use proptest::prelude::*;

const SCOPE: [&str; 2] = ["a", "b"];

#[test]
fn fuzzed_comp_roundtrip_10k() {
    let scope: Vec<Ident> = SCOPE.iter().map(|s| s.to_string()).collect();
    let mut failures = 0usize;
    for seed in 0..10_000u64 {
        let mut f = Fuzzer::new(seed);
        let t = f.comp(&scope, 4);
        let printed = pretty::comp(&t);
        match parse_open_comp(&printed, &SCOPE) {
            Ok(back) => {
                if !alpha_eq_comp(&back, &t) {
                    failures += 1;
                    if failures < 4 {
                        eprintln!("seed {seed}: mismatch\n  ast: {t:?}\n  printed: {printed}");
                    }
                }
            }
            Err(e) => {
                failures += 1;
                if failures < 4 {
                    eprintln!("seed {seed}: reparse failed: {e}\n  printed: {printed}");
                }
            }
        }
    }
    assert_eq!(failures, 0, "{failures} round-trip failures out of 10000");
}

#[test]
fn fuzzed_value_roundtrip() {
    let scope: Vec<Ident> = SCOPE.iter().map(|s| s.to_string()).collect();
    for seed in 0..2_000u64 {
        let mut f = Fuzzer::new(seed.wrapping_mul(7919));
        let t = f.value(&scope, 4);
        let printed = pretty::value(&t);
        let back = parse_open_value(&printed, &SCOPE)
            .unwrap_or_else(|e| panic!("seed {seed}: reparse failed: {e}\n{printed}"));
        assert!(alpha_eq_value(&back, &t), "seed {seed}: {printed}");
    }
}

// ---------------------------------------------------------------------------
// Substitution / alpha properties
// ---------------------------------------------------------------------------

fn arb_value() -> impl Strategy<Value = Value> {
    (0u64..1_000_000).prop_map(|seed| {
        let mut f = Fuzzer::new(seed);
        f.value(&["a".into(), "b".into()], 3)
    })
}

fn arb_comp() -> impl Strategy<Value = Comp> {
    (0u64..1_000_000).prop_map(|seed| {
        let mut f = Fuzzer::new(seed.wrapping_add(17));
        f.comp(&["a".into(), "b".into()], 3)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    // substitution absorbs when the variable is gone from the substituted value
    #[test]
    fn subst_absorbs(t in arb_comp(), v in arb_value()) {
        prop_assume!(!free_idents_value(&v).contains("a"));
        let once = subst_comp(&t, "a", &v);
        let twice = subst_comp(&once, "a", &v);
        prop_assert!(alpha_eq_comp(&once, &twice));
    }

    // x is gone after substituting an x-free value
    #[test]
    fn subst_removes_variable(t in arb_comp(), v in arb_value()) {
        prop_assume!(!free_idents_value(&v).contains("a"));
        let s = subst_comp(&t, "a", &v);
        prop_assert!(!free_idents_comp(&s).contains("a"));
    }

    // alpha_eq is reflexive and respected by substitution
    #[test]
    fn subst_respects_alpha(t in arb_comp(), v in arb_value()) {
        prop_assert!(alpha_eq_comp(&t, &t));
        // an alpha-variant via a fresh renaming of a binder-free rename:
        // print and reparse to get an alpha-equal copy
        let printed = pretty::comp(&t);
        let t2 = parse_open_comp(&printed, &SCOPE).unwrap();
        prop_assert!(alpha_eq_comp(&t, &t2));
        let s1 = subst_comp(&t, "a", &v);
        let s2 = subst_comp(&t2, "a", &v);
        prop_assert!(alpha_eq_comp(&s1, &s2));
    }

    // normalization of values is idempotent
    #[test]
    fn normalize_idempotent(v in arb_value()) {
        let n = normalize_value(&v);
        prop_assert_eq!(normalize_value(&n), n);
    }

    // alpha equivalence is symmetric and transitive across printed variants
    #[test]
    fn alpha_eq_is_equivalence(t in arb_comp()) {
        let printed = pretty::comp(&t);
        let u = parse_open_comp(&printed, &SCOPE).unwrap();
        let printed2 = pretty::comp(&u);
        let w = parse_open_comp(&printed2, &SCOPE).unwrap();
        prop_assert!(alpha_eq_comp(&t, &u) && alpha_eq_comp(&u, &t));
        prop_assert!(alpha_eq_comp(&u, &w));
        prop_assert!(alpha_eq_comp(&t, &w)); // transitivity on the chain
    }
}

#[test]
fn output_monoid_laws_on_samples() {
    // the output monoid is token sequences under concatenation with the
    // empty sequence as unit
    let samples: Vec<Vec<String>> = vec![
        vec![],
        vec!["a".into()],
        vec!["a".into(), "b".into()],
        vec!["c".into(), "a".into(), "c".into()],
    ];
    let concat = |x: &Vec<String>, y: &Vec<String>| {
        let mut z = x.clone();
        z.extend(y.iter().cloned());
        z
    };
    let unit: Vec<String> = vec![];
    for x in &samples {
        assert_eq!(concat(&unit, x), *x);
        assert_eq!(concat(x, &unit), *x);
        for y in &samples {
            for z in &samples {
                assert_eq!(concat(&concat(x, y), z), concat(x, &concat(y, z)));
            }
        }
    }
}
