//! Pretty-printer for types, terms and programs.
//!
//! The output reparses to an alpha-equal term. Precedence, loosest first:
//! `to ... in` and the prefix binders (`lam`, `mu`, `let`, `pm`, `print`,
//! `write`, `rtensor`), then application `'`, then atoms. For types the
//! arrow formers bind loosest, `-o` next, prefix `U`/`F` tightest.

use crate::ast::*;
use std::collections::BTreeSet;
use std::fmt::Write;

#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Level {
    Low,
    App,
    Atom,
}

fn parens_if(s: String, cond: bool) -> String {
    if cond {
        format!("({s})")
    } else {
        s
    }
}

// ---------------------------------------------------------------------------
// Types
// ---------------------------------------------------------------------------

pub fn vtype(a: &ValueType) -> String {
    vtype_at(a, Level::Low)
}

pub fn ctype(b: &CompType) -> String {
    ctype_at(b, Level::Low)
}

fn vtype_at(a: &ValueType, lv: Level) -> String {
    match a {
        ValueType::Unit => "1".to_string(),
        ValueType::U(b) => parens_if(format!("U {}", ctype_at(b, Level::App)), lv > Level::App),
        ValueType::FinSum(vs) => {
            let inner = vs.iter().map(|v| vtype_at(v, Level::Low)).collect::<Vec<_>>().join(", ");
            format!("Sum {{{inner}}}")
        }
        ValueType::Sigma(x, a1, a2) => parens_if(
            format!("Sigma ({x} : {}) -> {}", vtype_at(a1, Level::Low), vtype_at(a2, Level::Low)),
            lv > Level::Low,
        ),
        ValueType::Pi(x, a1, a2) => parens_if(
            format!("Pi ({x} : {}) -> {}", vtype_at(a1, Level::Low), vtype_at(a2, Level::Low)),
            lv > Level::Low,
        ),
        ValueType::Id(a, v, w) => parens_if(
            format!(
                "Id {} {} {}",
                vtype_at(a, Level::Atom),
                value_at(v, Level::Atom),
                value_at(w, Level::Atom)
            ),
            lv > Level::App,
        ),
        ValueType::Hom(b, c) => parens_if(
            format!("{} -o {}", ctype_at(b, Level::App), ctype_at(c, Level::Low)),
            lv > Level::Low,
        ),
    }
}

fn ctype_at(b: &CompType, lv: Level) -> String {
    match b {
        CompType::F(a) => parens_if(format!("F {}", vtype_at(a, Level::App)), lv > Level::App),
        CompType::FinProd(bs) => {
            let inner = bs.iter().map(|b| ctype_at(b, Level::Low)).collect::<Vec<_>>().join(", ");
            format!("Prod {{{inner}}}")
        }
        CompType::FunPi(x, a, b2) => parens_if(
            format!("Pi ({x} : {}) -> {}", vtype_at(a, Level::Low), ctype_at(b2, Level::Low)),
            lv > Level::Low,
        ),
        CompType::SigmaF(x, a, b2) => parens_if(
            format!("SigmaF ({x} : {}) -> {}", vtype_at(a, Level::Low), ctype_at(b2, Level::Low)),
            lv > Level::Low,
        ),
        CompType::DepProd(entries) => {
            let inner = entries
                .iter()
                .map(|(z, b)| format!("{z} -> {}", ctype_at(b, Level::Low)))
                .collect::<Vec<_>>()
                .join(", ");
            format!("DProd {{{inner}}}")
        }
    }
}

// ---------------------------------------------------------------------------
// Terms
// ---------------------------------------------------------------------------

pub fn value(v: &Value) -> String {
    value_at(v, Level::Low)
}

pub fn comp(m: &Comp) -> String {
    comp_at(m, Level::Low)
}

fn motive_str<T>(m: &Option<Motive<T>>, body: impl Fn(&T) -> String) -> String {
    match m {
        None => String::new(),
        Some(m) => format!(" [{}. {}]", m.binder, body(&m.body)),
    }
}

fn id_motive_str<T>(m: &Option<IdMotive<T>>, body: impl Fn(&T) -> String) -> String {
    match m {
        None => String::new(),
        Some(m) => format!(" [{} {} {}. {}]", m.left, m.right, m.witness, body(&m.body)),
    }
}

fn scrut_str(scrut: &Value, scrut_ty: &Option<Box<ValueType>>) -> String {
    match scrut_ty {
        None => value_at(scrut, Level::Atom),
        Some(t) => format!("({} : {})", value_at(scrut, Level::Low), vtype_at(t, Level::Low)),
    }
}

/// Renames the per-branch binders of a sum pattern-match to one common name
/// for printing.
fn common_branches<T: Clone>(
    branches: &[(Ident, T)],
    frees: impl Fn(&T) -> BTreeSet<Ident>,
    rename: impl Fn(&T, &str, &Ident) -> T,
) -> (Ident, Vec<T>) {
    if branches.is_empty() {
        return ("x".to_string(), Vec::new());
    }
    let base = branches[0].0.clone();
    let mut avoid = BTreeSet::new();
    for (b, t) in branches {
        let mut fv = frees(t);
        fv.remove(b);
        avoid.extend(fv);
    }
    let name = if branches.iter().all(|(b, _)| *b == base) && !avoid.contains(&base) {
        base
    } else {
        freshen(&base, &avoid)
    };
    let bodies = branches
        .iter()
        .map(|(b, t)| if *b == name { t.clone() } else { rename(t, b, &name) })
        .collect();
    (name, bodies)
}

fn value_at(v: &Value, lv: Level) -> String {
    match v {
        Value::Var(x) => x.clone(),
        Value::UnitV => "()".to_string(),
        Value::Pair(a, b) => {
            format!("<{}, {}>", value_at(a, Level::Low), value_at(b, Level::Low))
        }
        Value::Inj(i, a) => format!("<{i}, {}>", value_at(a, Level::Low)),
        Value::Thunk(m) => {
            parens_if(format!("thunk {}", comp_at(m, Level::Atom)), lv > Level::App)
        }
        Value::Refl(a) => parens_if(format!("refl {}", value_at(a, Level::Atom)), lv > Level::App),
        Value::LetV { x, ann, val, body } => {
            let binder = match ann {
                None => x.clone(),
                Some(a) => format!("({x} : {})", vtype_at(a, Level::Low)),
            };
            parens_if(
                format!(
                    "let {binder} be {} in {}",
                    value_at(val, Level::Low),
                    value_at(body, Level::Low)
                ),
                lv > Level::Low,
            )
        }
        Value::PmSum { scrut, scrut_ty, branches, motive } => {
            let (name, bodies) = common_branches(
                branches,
                free_idents_value,
                |t, from, to| subst_value(t, from, &Value::Var(to.clone())),
            );
            let bs = bodies
                .iter()
                .enumerate()
                .map(|(i, b)| format!("{} -> {}", i + 1, value_at(b, Level::Low)))
                .collect::<Vec<_>>()
                .join(", ");
            parens_if(
                format!(
                    "pm {} as <i, {name}>{} in {{{bs}}}",
                    scrut_str(scrut, scrut_ty),
                    motive_str(motive, vtype)
                ),
                lv > Level::Low,
            )
        }
        Value::PmUnit { scrut, body, motive } => parens_if(
            format!(
                "pm {} as (){} in {}",
                scrut_str(scrut, &None),
                motive_str(motive, vtype),
                value_at(body, Level::Low)
            ),
            lv > Level::Low,
        ),
        Value::PmPair { scrut, scrut_ty, x, y, body, motive } => parens_if(
            format!(
                "pm {} as <{x}, {y}>{} in {}",
                scrut_str(scrut, scrut_ty),
                motive_str(motive, vtype),
                value_at(body, Level::Low)
            ),
            lv > Level::Low,
        ),
        Value::PmId { scrut, scrut_ty, binder, body, motive } => parens_if(
            format!(
                "pm {} as refl {binder}{} in {}",
                scrut_str(scrut, scrut_ty),
                id_motive_str(motive, vtype),
                value_at(body, Level::Low)
            ),
            lv > Level::Low,
        ),
        Value::LamV { x, body } => {
            parens_if(format!("lam {x}. {}", value_at(body, Level::Low)), lv > Level::Low)
        }
        Value::AppV { arg, fun } => parens_if(
            format!("{} ' {}", value_at(arg, Level::Atom), value_at(fun, Level::App)),
            lv > Level::App,
        ),
        Value::LamNil(k) => {
            parens_if(format!("lam nil. {}", comp_at(k, Level::Low)), lv > Level::Low)
        }
    }
}

fn comp_at(m: &Comp, lv: Level) -> String {
    match m {
        Comp::Nil => "nil".to_string(),
        Comp::Diverge => "diverge".to_string(),
        Comp::Error(e) => parens_if(format!("error {e}"), lv > Level::App),
        Comp::Return(v) => {
            parens_if(format!("return {}", value_at(v, Level::Atom)), lv > Level::App)
        }
        Comp::Force(v) => {
            parens_if(format!("force {}", value_at(v, Level::Atom)), lv > Level::App)
        }
        Comp::LetV { x, ann, val, body } => {
            let binder = match ann {
                None => x.clone(),
                Some(a) => format!("({x} : {})", vtype_at(a, Level::Low)),
            };
            parens_if(
                format!(
                    "let {binder} be {} in {}",
                    value_at(val, Level::Low),
                    comp_at(body, Level::Low)
                ),
                lv > Level::Low,
            )
        }
        Comp::LetNil { bound, body } => parens_if(
            format!("let nil be {} in {}", comp_at(bound, Level::App), comp_at(body, Level::Low)),
            lv > Level::Low,
        ),
        Comp::To { comp, x, body, motive } => parens_if(
            format!(
                "{} to {x}{} in {}",
                comp_at(comp, Level::App),
                motive_str(motive, ctype),
                comp_at(body, Level::Low)
            ),
            lv > Level::Low,
        ),
        Comp::ToTensor { comp, x, body } => parens_if(
            format!(
                "{} to rtensor {x} in {}",
                comp_at(comp, Level::App),
                comp_at(body, Level::Low)
            ),
            lv > Level::Low,
        ),
        Comp::PmSum { scrut, scrut_ty, branches, motive } => {
            let (name, bodies) = common_branches(
                branches,
                free_idents_comp,
                |t, from, to| subst_comp(t, from, &Value::Var(to.clone())),
            );
            let bs = bodies
                .iter()
                .enumerate()
                .map(|(i, b)| format!("{} -> {}", i + 1, comp_at(b, Level::Low)))
                .collect::<Vec<_>>()
                .join(", ");
            parens_if(
                format!(
                    "pm {} as <i, {name}>{} in {{{bs}}}",
                    scrut_str(scrut, scrut_ty),
                    motive_str(motive, ctype)
                ),
                lv > Level::Low,
            )
        }
        Comp::PmUnit { scrut, body, motive } => parens_if(
            format!(
                "pm {} as (){} in {}",
                scrut_str(scrut, &None),
                motive_str(motive, ctype),
                comp_at(body, Level::Low)
            ),
            lv > Level::Low,
        ),
        Comp::PmPair { scrut, scrut_ty, x, y, body, motive } => parens_if(
            format!(
                "pm {} as <{x}, {y}>{} in {}",
                scrut_str(scrut, scrut_ty),
                motive_str(motive, ctype),
                comp_at(body, Level::Low)
            ),
            lv > Level::Low,
        ),
        Comp::PmId { scrut, scrut_ty, binder, body, motive } => parens_if(
            format!(
                "pm {} as refl {binder}{} in {}",
                scrut_str(scrut, scrut_ty),
                id_motive_str(motive, ctype),
                comp_at(body, Level::Low)
            ),
            lv > Level::Low,
        ),
        Comp::LamI(ks) => {
            let bs = ks
                .iter()
                .enumerate()
                .map(|(i, k)| format!("{} -> {}", i + 1, comp_at(k, Level::Low)))
                .collect::<Vec<_>>()
                .join(", ");
            parens_if(format!("lam {{{bs}}}"), lv > Level::App)
        }
        Comp::ProjI(i, k) => {
            parens_if(format!("proj {i} {}", comp_at(k, Level::Atom)), lv > Level::App)
        }
        Comp::Lam { x, body } => {
            parens_if(format!("lam {x}. {}", comp_at(body, Level::Low)), lv > Level::Low)
        }
        Comp::App { arg, fun } => parens_if(
            format!("{} ' {}", value_at(arg, Level::Atom), comp_at(fun, Level::App)),
            lv > Level::App,
        ),
        Comp::RetTensor { val, comp } => parens_if(
            format!("rtensor {} {}", value_at(val, Level::Atom), comp_at(comp, Level::Atom)),
            lv > Level::App,
        ),
        Comp::AppHom { comp, fun, fun_ty } => {
            let f = match fun_ty {
                None => value_at(fun, Level::Atom),
                Some(t) => format!("({} : {})", value_at(fun, Level::Low), vtype_at(t, Level::Low)),
            };
            // an argument push on the left would re-associate to the right
            let lhs = match comp.as_ref() {
                Comp::App { .. } => format!("({})", comp_at(comp, Level::Low)),
                _ => comp_at(comp, Level::App),
            };
            parens_if(format!("{lhs} ' {f}"), lv > Level::App)
        }
        Comp::Mu { z, body } => {
            parens_if(format!("mu {z}. {}", comp_at(body, Level::Low)), lv > Level::Low)
        }
        Comp::Print(tokens, k) => {
            let mut s = String::from("print");
            for t in tokens {
                write!(s, " \"{t}\"").unwrap();
            }
            write!(s, " {}", comp_at(k, Level::Low)).unwrap();
            parens_if(s, lv > Level::Low)
        }
        Comp::Choose(ks) => {
            let bs = ks.iter().map(|k| comp_at(k, Level::Low)).collect::<Vec<_>>().join(", ");
            parens_if(format!("choose {{{bs}}}"), lv > Level::App)
        }
        Comp::Write(s, k) => {
            parens_if(format!("write {s} {}", comp_at(k, Level::Low)), lv > Level::Low)
        }
        Comp::Read(branches) => {
            let bs = branches
                .iter()
                .map(|(s, k)| format!("{s} -> {}", comp_at(k, Level::Low)))
                .collect::<Vec<_>>()
                .join(", ");
            parens_if(format!("read {{{bs}}}"), lv > Level::App)
        }
        Comp::Annot { comp, ty } => {
            format!("({} : {})", comp_at(comp, Level::Low), ctype_at(ty, Level::Low))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spec_examples() {
        assert_eq!(comp(&Comp::Return(Box::new(Value::UnitV))), "return ()");
        assert_eq!(value(&Value::Thunk(Box::new(Comp::Diverge))), "thunk diverge");
        let t = CompType::FunPi(
            "x".into(),
            Box::new(ValueType::Unit),
            Box::new(CompType::F(Box::new(ValueType::Unit))),
        );
        assert_eq!(ctype(&t), "Pi (x : 1) -> F 1");
    }

    #[test]
    fn chained_prefix_types() {
        let t = ValueType::U(Box::new(CompType::F(Box::new(ValueType::Unit))));
        assert_eq!(vtype(&t), "U F 1");
    }
}
