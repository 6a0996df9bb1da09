//! Directed tests for the equational theory: every beta row is a
//! normalization or machine fact; each eta row is accepted by the equality
//! judgement exactly under its flag, and the rows with no corresponding
//! flag are never definitional.

use dcbpv::ast::*;
use dcbpv::kernel::{comps_equal, normalize_value, types_equal, values_equal};
use dcbpv::machine::{run, Outcome, Strategy};
use dcbpv::parser::{parse_comp_str, parse_open_comp, parse_open_value, parse_open_vtype, parse_vtype_str};

fn sig() -> EffectSignature {
    let mut s = EffectSignature::default();
    s.monoid_alphabet.insert("a".into());
    s
}

fn sig_with(f: impl Fn(&mut Features)) -> EffectSignature {
    let mut s = sig();
    f(&mut s.features);
    s
}

fn v(src: &str) -> Value {
    parse_open_value(src, &["v", "w", "g", "k"]).unwrap()
}

fn norm_is(src: &str, expect: &str) {
    let t = v(src);
    let n = normalize_value(&t);
    let e = v(expect);
    assert!(alpha_eq_value(&n, &e), "normalize({src}) = {n}, expected {expect}");
}

fn machine_eq(lhs: &str, rhs: &str) {
    let s = sig();
    let a = run(&s, &parse_comp_str(lhs).unwrap(), 10_000, Strategy::First);
    let b = run(&s, &parse_comp_str(rhs).unwrap(), 10_000, Strategy::First);
    match (&a, &b) {
        (Outcome::Terminal(c1), Outcome::Terminal(c2)) => {
            assert!(
                alpha_eq_comp(&c1.comp, &c2.comp) && c1.out == c2.out && c1.state == c2.state,
                "{lhs} and {rhs} evaluate differently: {c1} vs {c2}"
            );
        }
        _ => panic!("{lhs} / {rhs}: non-terminal outcomes {a:?} {b:?}"),
    }
}

// ---- beta rows, value fragment (normalize_value facts) ----

#[test]
fn beta_let_value() {
    norm_is("let x be v in <x, x>", "<v, v>");
}

#[test]
fn beta_pm_sum_value() {
    norm_is("pm <1, v> as <i, x> in {1 -> x, 2 -> ()}", "v");
}

#[test]
fn beta_pm_unit_value() {
    norm_is("pm () as () in v", "v");
}

#[test]
fn beta_pm_pair_value() {
    norm_is("pm <v, w> as <x, y> in <y, x>", "<w, v>");
}

#[test]
fn beta_pm_refl_value() {
    norm_is("pm (refl v) as refl x in <x, x>", "<v, v>");
}

#[test]
fn beta_value_application() {
    norm_is("v ' (lam x. <x, x>)", "<v, v>");
}

// ---- beta rows, computation fragment (machine facts) ----

#[test]
fn beta_to_return() {
    machine_eq("return () to x in return <x, x>", "return <(), ()>");
}

#[test]
fn beta_force_thunk() {
    machine_eq("force (thunk (print \"a\" (return ())))", "print \"a\" (return ())");
}

#[test]
fn beta_let_comp() {
    machine_eq("let x be () in return x", "return ()");
}

#[test]
fn beta_letnil() {
    machine_eq("let nil be return () in (nil to x in return <x, x>)", "return <(), ()>");
}

#[test]
fn beta_proj_tuple() {
    machine_eq("proj 2 (lam {1 -> return (), 2 -> return <1, ()>})", "return <1, ()>");
}

#[test]
fn beta_app_lambda() {
    machine_eq("() ' lam x. return <x, x>", "return <(), ()>");
}

#[test]
fn beta_pm_sum_comp() {
    machine_eq("pm <2, ()> as <i, x> in {1 -> diverge, 2 -> return x}", "return ()");
}

#[test]
fn beta_pm_id_comp() {
    machine_eq("pm (refl ()) as refl x in return <x, x>", "return <(), ()>");
}

#[test]
fn beta_tensor() {
    machine_eq(
        "rtensor () (print \"a\" (return ())) to rtensor x in (nil to y in return <x, y>)",
        "print \"a\" (return <(), ()>)",
    );
}

#[test]
fn beta_apphom() {
    machine_eq("return () ' (lam nil. (nil to x in return <x, x>))", "return <(), ()>");
}

// ---- eta rows with a flag: accepted only under it ----

#[test]
fn eta_thunk_gated() {
    let lhs = v("thunk (force v)");
    let rhs = v("v");
    assert!(!values_equal(&sig(), &lhs, &rhs));
    assert!(values_equal(&sig_with(|f| f.eta_thunk = true), &lhs, &rhs));
}

#[test]
fn eta_thunk_via_types_equal() {
    let a = parse_open_vtype("Id (U F 1) (thunk (force v)) v", &["v"]).unwrap();
    let b = parse_open_vtype("Id (U F 1) v v", &["v"]).unwrap();
    assert!(!types_equal(&sig(), &a, &b));
    assert!(types_equal(&sig_with(|f| f.eta_thunk = true), &a, &b));
}

#[test]
fn eta_fun_lambda_gated() {
    let lhs = parse_open_comp("lam x. (x ' force k)", &["k"]).unwrap();
    let rhs = parse_open_comp("force k", &["k"]).unwrap();
    assert!(!comps_equal(&sig(), &lhs, &rhs));
    assert!(comps_equal(&sig_with(|f| f.eta_fun = true), &lhs, &rhs));
}

#[test]
fn eta_fun_tuple_gated() {
    let lhs =
        parse_open_comp("lam {1 -> proj 1 (force k), 2 -> proj 2 (force k)}", &["k"]).unwrap();
    let rhs = parse_open_comp("force k", &["k"]).unwrap();
    assert!(!comps_equal(&sig(), &lhs, &rhs));
    assert!(comps_equal(&sig_with(|f| f.eta_fun = true), &lhs, &rhs));
}

#[test]
fn eta_fun_value_lambda_gated() {
    let lhs = v("lam x. (x ' g)");
    let rhs = v("g");
    assert!(!values_equal(&sig(), &lhs, &rhs));
    assert!(values_equal(&sig_with(|f| f.eta_fun = true), &lhs, &rhs));
}

#[test]
fn eta_fun_hom_gated() {
    let lhs = v("lam nil. (nil ' g)");
    let rhs = v("g");
    assert!(!values_equal(&sig(), &lhs, &rhs));
    assert!(values_equal(&sig_with(|f| f.eta_fun = true), &lhs, &rhs));
}

// ---- effect equations, gated by effect-eqs ----

#[test]
fn effect_algebraicity_gated() {
    let lhs = parse_comp_str("(print \"a\" (return ())) to x in return <x, x>").unwrap();
    let rhs = parse_comp_str("print \"a\" (return () to x in return <x, x>)").unwrap();
    assert!(!comps_equal(&sig(), &lhs, &rhs));
    assert!(comps_equal(&sig_with(|f| f.effect_eqs = true), &lhs, &rhs));
}

#[test]
fn effect_mu_unroll_gated() {
    let lhs = parse_comp_str("mu z. return ()").unwrap();
    let rhs = parse_comp_str("return ()").unwrap();
    assert!(!comps_equal(&sig(), &lhs, &rhs));
    assert!(comps_equal(&sig_with(|f| f.effect_eqs = true), &lhs, &rhs));
}

// ---- eta rows with no flag: never definitional ----

fn all_flags() -> EffectSignature {
    sig_with(|f| {
        f.eta_thunk = true;
        f.eta_fun = true;
        f.effect_eqs = true;
    })
}

#[test]
fn eta_f_sequencing_not_definitional() {
    // L[K/nil] = K to x. L[return x/nil] for L = nil to y. return <y, y>
    let lhs = parse_open_comp("force k to y in return <y, y>", &["k"]).unwrap();
    let rhs =
        parse_open_comp("force k to x in (return x to y in return <y, y>)", &["k"]).unwrap();
    assert!(!comps_equal(&sig(), &lhs, &rhs));
    assert!(!comps_equal(&all_flags(), &lhs, &rhs));
}

#[test]
fn eta_sum_not_definitional() {
    // R[v/z] = pm v as <i, x> in R[<i, x>/z] at R = return z
    let lhs = parse_open_comp("return v", &["v"]).unwrap();
    let rhs = parse_open_comp(
        "pm (v : Sum {1, 1}) as <i, x> in {1 -> return <1, x>, 2 -> return <2, x>}",
        &["v"],
    )
    .unwrap();
    assert!(!comps_equal(&all_flags(), &lhs, &rhs));
}

#[test]
fn eta_unit_not_definitional() {
    let lhs = parse_open_comp("return v", &["v"]).unwrap();
    let rhs = parse_open_comp("pm v as () in return ()", &["v"]).unwrap();
    assert!(!comps_equal(&all_flags(), &lhs, &rhs));
}

#[test]
fn eta_pair_not_definitional() {
    let lhs = parse_open_comp("return v", &["v"]).unwrap();
    let rhs = parse_open_comp("pm v as <x, y> in return <x, y>", &["v"]).unwrap();
    assert!(!comps_equal(&all_flags(), &lhs, &rhs));
}

#[test]
fn eta_id_not_definitional() {
    // the identity eta (extensional Id) is documented but never definitional
    let lhs = v("v");
    let rhs = v("pm v as refl x in refl x");
    assert!(!values_equal(&all_flags(), &lhs, &rhs));
}

#[test]
fn eta_tensor_not_definitional() {
    let lhs = parse_open_comp("force k to y in return <y, y>", &["k"]).unwrap();
    let rhs = parse_open_comp(
        "force k to rtensor x in (nil to y in return <y, y>)",
        &["k"],
    )
    .unwrap();
    assert!(!comps_equal(&all_flags(), &lhs, &rhs));
}

// ---- unit beta inside a type (conversion view) ----

#[test]
fn unit_beta_in_types() {
    let a = ValueType::Id(
        Box::new(ValueType::Unit),
        Box::new(parse_open_value("pm () as () in ()", &[]).unwrap()),
        Box::new(Value::UnitV),
    );
    let b = parse_vtype_str("Id 1 () ()").unwrap();
    assert!(types_equal(&sig(), &a, &b));
}
