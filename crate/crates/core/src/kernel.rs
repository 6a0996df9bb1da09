//! Well-formedness and typing for the core calculus, value normalization,
//! and definitional equality of types and values.
//!
//! The discipline is bidirectional: introductions check, variables and
//! eliminations synthesize, and conversion is applied at the boundary via
//! [`types_equal`]. The stoup is threaded linearly: positions whose rule
//! requires an empty stoup reject a context that still carries one.

use crate::ast::*;
use serde::Serialize;
use std::fmt;

/// Feature toggles; see [`Features`].
pub type Flags = Features;

pub const DEFAULT_EQ_FUEL: u32 = 1000;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TypeError {
    /// Stable rule name; the vocabulary is listed in the language reference.
    pub rule: &'static str,
    /// Where the error arose (a declaration name or a description).
    pub location: String,
    pub expected: Option<String>,
    pub found: Option<String>,
    pub msg: String,
}

impl fmt::Display for TypeError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}] {}", self.rule, self.msg)?;
        if let Some(e) = &self.expected {
            write!(f, "\n  expected: {e}")?;
        }
        if let Some(g) = &self.found {
            write!(f, "\n  found:    {g}")?;
        }
        if !self.location.is_empty() {
            write!(f, "\n  at: {}", self.location)?;
        }
        Ok(())
    }
}

impl std::error::Error for TypeError {}

pub type TcResult<T> = Result<T, Box<TypeError>>;

fn err<T>(rule: &'static str, msg: impl Into<String>) -> TcResult<T> {
    Err(Box::new(TypeError {
        rule,
        location: String::new(),
        expected: None,
        found: None,
        msg: msg.into(),
    }))
}

fn err_conv<T>(rule: &'static str, expected: impl fmt::Display, found: impl fmt::Display) -> TcResult<T> {
    Err(Box::new(TypeError {
        rule,
        location: String::new(),
        expected: Some(expected.to_string()),
        found: Some(found.to_string()),
        msg: "type mismatch".into(),
    }))
}

/// `tr V` is the abbreviation `thunk (return V)`.
pub fn tr(v: Value) -> Value {
    Value::Thunk(Box::new(Comp::Return(Box::new(v))))
}

// ---------------------------------------------------------------------------
// Context formation
// ---------------------------------------------------------------------------

pub fn wf_context(sig: &EffectSignature, ctx: &Context) -> TcResult<()> {
    let mut seen: Vec<&str> = Vec::new();
    let mut prefix = Context::empty();
    for (x, a) in &ctx.gamma {
        if seen.contains(&x.as_str()) {
            return err("ctx-dup", format!("duplicate identifier `{x}` in context"));
        }
        wf_vtype(sig, &prefix, a)?;
        seen.push(x);
        prefix = prefix.extended(x.clone(), a.clone());
    }
    if let Some(b) = &ctx.stoup {
        wf_ctype(sig, &prefix, b)?;
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Type formation
// ---------------------------------------------------------------------------

pub fn wf_vtype(sig: &EffectSignature, ctx: &Context, a: &ValueType) -> TcResult<()> {
    let ctx = ctx.without_stoup();
    match a {
        ValueType::U(b) => wf_ctype(sig, &ctx, b),
        ValueType::FinSum(items) => {
            for a in items {
                wf_vtype(sig, &ctx, a)?;
            }
            Ok(())
        }
        ValueType::Unit => Ok(()),
        ValueType::Sigma(x, a1, a2) | ValueType::Pi(x, a1, a2) => {
            wf_vtype(sig, &ctx, a1)?;
            let (x2, a2) = fresh_binder_vt(&ctx, x, a2);
            wf_vtype(sig, &ctx.extended(x2, a1.as_ref().clone()), &a2)
        }
        ValueType::Id(a0, v, w) => {
            wf_vtype(sig, &ctx, a0)?;
            check_value(sig, &ctx, v, a0)?;
            check_value(sig, &ctx, w, a0)
        }
        ValueType::Hom(b, c) => {
            wf_ctype(sig, &ctx, b)?;
            wf_ctype(sig, &ctx, c)
        }
    }
}

pub fn wf_ctype(sig: &EffectSignature, ctx: &Context, b: &CompType) -> TcResult<()> {
    let ctx = ctx.without_stoup();
    match b {
        CompType::F(a) => wf_vtype(sig, &ctx, a),
        CompType::FinProd(items) => {
            for b in items {
                wf_ctype(sig, &ctx, b)?;
            }
            Ok(())
        }
        CompType::FunPi(x, a, b2) | CompType::SigmaF(x, a, b2) => {
            wf_vtype(sig, &ctx, a)?;
            let (x2, b2) = fresh_binder_ct(&ctx, x, b2);
            wf_ctype(sig, &ctx.extended(x2, a.as_ref().clone()), &b2)
        }
        CompType::DepProd(entries) => {
            if !sig.features.proj_products {
                return err(
                    "feature-disabled",
                    "dependent projection products require the proj-products flag",
                );
            }
            let mut ctx = ctx.clone();
            for (z, b) in entries {
                wf_ctype(sig, &ctx, b)?;
                ctx = ctx.extended(z.clone(), ValueType::U(Box::new(b.clone())));
            }
            Ok(())
        }
    }
}

fn gamma_names(ctx: &Context) -> std::collections::BTreeSet<Ident> {
    ctx.gamma.iter().map(|(x, _)| x.clone()).collect()
}

/// Renames a binder apart from the context before extending it.
fn fresh_binder_vt(ctx: &Context, x: &Ident, body: &ValueType) -> (Ident, ValueType) {
    let avoid = gamma_names(ctx);
    if !avoid.contains(x) {
        return (x.clone(), body.clone());
    }
    let mut avoid = avoid;
    avoid.extend(free_idents_vtype(body));
    let fresh = freshen(x, &avoid);
    (fresh.clone(), subst_vtype(body, x, &Value::Var(fresh)))
}

fn fresh_binder_ct(ctx: &Context, x: &Ident, body: &CompType) -> (Ident, CompType) {
    let avoid = gamma_names(ctx);
    if !avoid.contains(x) {
        return (x.clone(), body.clone());
    }
    let mut avoid = avoid;
    avoid.extend(free_idents_ctype(body));
    let fresh = freshen(x, &avoid);
    (fresh.clone(), subst_ctype(body, x, &Value::Var(fresh)))
}

// ---------------------------------------------------------------------------
// Value normalization (beta only)
// ---------------------------------------------------------------------------

/// Reduces a value to its beta-normal form: lets, pattern matches over
/// canonical scrutinees, and value-level applications are contracted,
/// recursively and in parallel. Computations under `thunk` and `lam nil.`
/// are left untouched.
pub fn normalize_value(v: &Value) -> Value {
    match v {
        Value::Var(_) | Value::UnitV => v.clone(),
        Value::LetV { x, val, body, .. } => {
            let nv = normalize_value(val);
            normalize_value(&subst_value(body, x, &nv))
        }
        Value::Thunk(_) | Value::LamNil(_) => v.clone(),
        Value::Inj(i, w) => Value::Inj(*i, Box::new(normalize_value(w))),
        Value::Pair(a, b) => {
            Value::Pair(Box::new(normalize_value(a)), Box::new(normalize_value(b)))
        }
        Value::Refl(w) => Value::Refl(Box::new(normalize_value(w))),
        Value::PmSum { scrut, scrut_ty, branches, motive } => {
            let ns = normalize_value(scrut);
            if let Value::Inj(j, w) = &ns {
                if let Some((x, body)) = j.checked_sub(1).and_then(|j| branches.get(j)) {
                    return normalize_value(&subst_value(body, x, w));
                }
            }
            Value::PmSum {
                scrut: Box::new(ns),
                scrut_ty: scrut_ty.as_ref().map(|t| Box::new(normalize_vtype(t))),
                branches: branches
                    .iter()
                    .map(|(x, b)| (x.clone(), normalize_value(b)))
                    .collect(),
                motive: normalize_motive_vt(motive),
            }
        }
        Value::PmUnit { scrut, body, motive } => {
            let ns = normalize_value(scrut);
            if ns == Value::UnitV {
                return normalize_value(body);
            }
            Value::PmUnit {
                scrut: Box::new(ns),
                body: Box::new(normalize_value(body)),
                motive: normalize_motive_vt(motive),
            }
        }
        Value::PmPair { scrut, scrut_ty, x, y, body, motive } => {
            let ns = normalize_value(scrut);
            if let Value::Pair(a, b) = &ns {
                let t = subst_value(body, x, a);
                return normalize_value(&subst_value(&t, y, b));
            }
            Value::PmPair {
                scrut: Box::new(ns),
                scrut_ty: scrut_ty.as_ref().map(|t| Box::new(normalize_vtype(t))),
                x: x.clone(),
                y: y.clone(),
                body: Box::new(normalize_value(body)),
                motive: normalize_motive_vt(motive),
            }
        }
        Value::PmId { scrut, scrut_ty, binder, body, motive } => {
            let ns = normalize_value(scrut);
            if let Value::Refl(w) = &ns {
                return normalize_value(&subst_value(body, binder, w));
            }
            Value::PmId {
                scrut: Box::new(ns),
                scrut_ty: scrut_ty.as_ref().map(|t| Box::new(normalize_vtype(t))),
                binder: binder.clone(),
                body: Box::new(normalize_value(body)),
                motive: motive.as_ref().map(|m| IdMotive {
                    left: m.left.clone(),
                    right: m.right.clone(),
                    witness: m.witness.clone(),
                    body: Box::new(normalize_vtype(&m.body)),
                }),
            }
        }
        Value::LamV { x, body } => {
            Value::LamV { x: x.clone(), body: Box::new(normalize_value(body)) }
        }
        Value::AppV { arg, fun } => {
            let nf = normalize_value(fun);
            let na = normalize_value(arg);
            if let Value::LamV { x, body } = &nf {
                return normalize_value(&subst_value(body, x, &na));
            }
            Value::AppV { arg: Box::new(na), fun: Box::new(nf) }
        }
    }
}

fn normalize_motive_vt(m: &Option<Motive<ValueType>>) -> Option<Motive<ValueType>> {
    m.as_ref().map(|m| Motive { binder: m.binder.clone(), body: Box::new(normalize_vtype(&m.body)) })
}

/// Normalizes the values embedded in a type.
pub fn normalize_vtype(a: &ValueType) -> ValueType {
    match a {
        ValueType::U(b) => ValueType::U(Box::new(normalize_ctype(b))),
        ValueType::FinSum(items) => ValueType::FinSum(items.iter().map(normalize_vtype).collect()),
        ValueType::Unit => ValueType::Unit,
        ValueType::Sigma(x, a1, a2) => ValueType::Sigma(
            x.clone(),
            Box::new(normalize_vtype(a1)),
            Box::new(normalize_vtype(a2)),
        ),
        ValueType::Pi(x, a1, a2) => ValueType::Pi(
            x.clone(),
            Box::new(normalize_vtype(a1)),
            Box::new(normalize_vtype(a2)),
        ),
        ValueType::Id(a0, v, w) => ValueType::Id(
            Box::new(normalize_vtype(a0)),
            Box::new(normalize_value(v)),
            Box::new(normalize_value(w)),
        ),
        ValueType::Hom(b, c) => {
            ValueType::Hom(Box::new(normalize_ctype(b)), Box::new(normalize_ctype(c)))
        }
    }
}

pub fn normalize_ctype(b: &CompType) -> CompType {
    match b {
        CompType::F(a) => CompType::F(Box::new(normalize_vtype(a))),
        CompType::FinProd(items) => CompType::FinProd(items.iter().map(normalize_ctype).collect()),
        CompType::FunPi(x, a, b2) => CompType::FunPi(
            x.clone(),
            Box::new(normalize_vtype(a)),
            Box::new(normalize_ctype(b2)),
        ),
        CompType::SigmaF(x, a, b2) => CompType::SigmaF(
            x.clone(),
            Box::new(normalize_vtype(a)),
            Box::new(normalize_ctype(b2)),
        ),
        CompType::DepProd(entries) => CompType::DepProd(
            entries.iter().map(|(z, b)| (z.clone(), normalize_ctype(b))).collect(),
        ),
    }
}

pub fn is_normal_value(v: &Value) -> bool {
    normalize_value(v) == *v
}

// ---------------------------------------------------------------------------
// Definitional equality
// ---------------------------------------------------------------------------

struct EqEngine {
    flags: Features,
    fuel: std::cell::Cell<u32>,
}

struct PairEnv {
    pairs: Vec<(Ident, Ident)>,
}

impl PairEnv {
    fn new() -> Self {
        PairEnv { pairs: Vec::new() }
    }
    fn matches(&self, a: &str, b: &str) -> bool {
        for (x, y) in self.pairs.iter().rev() {
            if x == a || y == b {
                return x == a && y == b;
            }
        }
        a == b
    }
}

impl EqEngine {
    fn new(flags: Features) -> Self {
        EqEngine { flags, fuel: std::cell::Cell::new(DEFAULT_EQ_FUEL) }
    }

    fn spend(&self) -> bool {
        let f = self.fuel.get();
        if f == 0 {
            return false;
        }
        self.fuel.set(f - 1);
        true
    }

    /// Flag-gated terminating contractions on values.
    fn contract_value(&self, v: &Value) -> Value {
        let mut v = v.clone();
        loop {
            match &v {
                Value::Thunk(m) => {
                    if self.flags.eta_thunk {
                        if let Comp::Force(inner) = m.as_ref() {
                            v = inner.as_ref().clone();
                            continue;
                        }
                    }
                }
                Value::LamV { x, body } => {
                    if self.flags.eta_fun {
                        if let Value::AppV { arg, fun } = body.as_ref() {
                            if matches!(arg.as_ref(), Value::Var(y) if y == x)
                                && !free_idents_value(fun).contains(x)
                            {
                                v = fun.as_ref().clone();
                                continue;
                            }
                        }
                    }
                }
                Value::LamNil(k)
                    if self.flags.eta_fun => {
                        if let Comp::AppHom { comp, fun, .. } = k.as_ref() {
                            if matches!(comp.as_ref(), Comp::Nil) {
                                v = fun.as_ref().clone();
                                continue;
                            }
                        }
                    }
                _ => {}
            }
            return v;
        }
    }

    /// Flag-gated terminating rewrites on computations: lambda-eta
    /// contractions and the algebraicity direction that hoists effect
    /// operators out of stack positions.
    fn contract_comp(&self, m: &Comp) -> Comp {
        let mut m = m.clone();
        loop {
            if self.flags.eta_fun {
                match &m {
                    Comp::Lam { x, body } => {
                        if let Comp::App { arg, fun } = body.as_ref() {
                            if matches!(arg.as_ref(), Value::Var(y) if y == x)
                                && !free_idents_comp(fun).contains(x)
                            {
                                m = fun.as_ref().clone();
                                continue;
                            }
                        }
                    }
                    Comp::LamI(ks) if !ks.is_empty() => {
                        let mut base: Option<&Comp> = None;
                        let all_projs = ks.iter().enumerate().all(|(i, k)| match k {
                            Comp::ProjI(j, inner) if *j == i + 1 => {
                                if let Some(b) = base {
                                    alpha_eq_comp(b, inner)
                                } else {
                                    base = Some(inner);
                                    true
                                }
                            }
                            _ => false,
                        });
                        if all_projs {
                            if let Some(b) = base {
                                m = b.clone();
                                continue;
                            }
                        }
                    }
                    _ => {}
                }
            }
            if self.flags.effect_eqs {
                if let Some(hoisted) = hoist_effect(&m) {
                    if self.spend() {
                        m = hoisted;
                        continue;
                    }
                }
            }
            return m;
        }
    }

    fn eq_vtype(&self, a: &ValueType, b: &ValueType, env: &mut PairEnv) -> bool {
        use ValueType::*;
        match (a, b) {
            (U(x), U(y)) => self.eq_ctype(x, y, env),
            (FinSum(xs), FinSum(ys)) => {
                xs.len() == ys.len() && xs.iter().zip(ys).all(|(x, y)| self.eq_vtype(x, y, env))
            }
            (Unit, Unit) => true,
            (Sigma(x, a1, a2), Sigma(y, b1, b2)) | (Pi(x, a1, a2), Pi(y, b1, b2)) => {
                self.eq_vtype(a1, b1, env) && {
                    env.pairs.push((x.clone(), y.clone()));
                    let r = self.eq_vtype(a2, b2, env);
                    env.pairs.pop();
                    r
                }
            }
            (Id(a1, v1, w1), Id(a2, v2, w2)) => {
                self.eq_vtype(a1, a2, env)
                    && self.eq_value(v1, v2, env)
                    && self.eq_value(w1, w2, env)
            }
            (Hom(b1, c1), Hom(b2, c2)) => {
                self.eq_ctype(b1, b2, env) && self.eq_ctype(c1, c2, env)
            }
            _ => false,
        }
    }

    fn eq_ctype(&self, a: &CompType, b: &CompType, env: &mut PairEnv) -> bool {
        use CompType::*;
        match (a, b) {
            (F(x), F(y)) => self.eq_vtype(x, y, env),
            (FinProd(xs), FinProd(ys)) => {
                xs.len() == ys.len() && xs.iter().zip(ys).all(|(x, y)| self.eq_ctype(x, y, env))
            }
            (FunPi(x, a1, b1), FunPi(y, a2, b2)) | (SigmaF(x, a1, b1), SigmaF(y, a2, b2)) => {
                self.eq_vtype(a1, a2, env) && {
                    env.pairs.push((x.clone(), y.clone()));
                    let r = self.eq_ctype(b1, b2, env);
                    env.pairs.pop();
                    r
                }
            }
            (DepProd(xs), DepProd(ys)) => {
                if xs.len() != ys.len() {
                    return false;
                }
                let mut pushed = 0usize;
                let mut ok = true;
                for ((zx, bx), (zy, by)) in xs.iter().zip(ys) {
                    if !self.eq_ctype(bx, by, env) {
                        ok = false;
                        break;
                    }
                    env.pairs.push((zx.clone(), zy.clone()));
                    pushed += 1;
                }
                for _ in 0..pushed {
                    env.pairs.pop();
                }
                ok
            }
            _ => false,
        }
    }

    fn eq_value(&self, a: &Value, b: &Value, env: &mut PairEnv) -> bool {
        let a = self.contract_value(&normalize_value(a));
        let b = self.contract_value(&normalize_value(b));
        self.eq_value_nf(&a, &b, env)
    }

    fn eq_value_nf(&self, a: &Value, b: &Value, env: &mut PairEnv) -> bool {
        use Value::*;
        match (a, b) {
            (Var(x), Var(y)) => env.matches(x, y),
            (UnitV, UnitV) => true,
            (Inj(i, v), Inj(j, w)) => i == j && self.eq_value(v, w, env),
            (Pair(v1, w1), Pair(v2, w2)) => {
                self.eq_value(v1, v2, env) && self.eq_value(w1, w2, env)
            }
            (Refl(v), Refl(w)) => self.eq_value(v, w, env),
            (Thunk(m), Thunk(n)) => self.eq_comp(m, n, env),
            (LamNil(k), LamNil(l)) => self.eq_comp(k, l, env),
            (LamV { x, body: b1 }, LamV { x: y, body: b2 }) => {
                env.pairs.push((x.clone(), y.clone()));
                let r = self.eq_value(b1, b2, env);
                env.pairs.pop();
                r
            }
            (AppV { arg: a1, fun: f1 }, AppV { arg: a2, fun: f2 }) => {
                self.eq_value(a1, a2, env) && self.eq_value(f1, f2, env)
            }
            (
                PmSum { scrut: s1, branches: br1, motive: m1, .. },
                PmSum { scrut: s2, branches: br2, motive: m2, .. },
            ) => {
                self.eq_value(s1, s2, env)
                    && br1.len() == br2.len()
                    && br1.iter().zip(br2).all(|((x, v), (y, w))| {
                        env.pairs.push((x.clone(), y.clone()));
                        let r = self.eq_value(v, w, env);
                        env.pairs.pop();
                        r
                    })
                    && self.eq_opt_motive_vt(m1, m2, env)
            }
            (
                PmUnit { scrut: s1, body: b1, motive: m1 },
                PmUnit { scrut: s2, body: b2, motive: m2 },
            ) => {
                self.eq_value(s1, s2, env)
                    && self.eq_value(b1, b2, env)
                    && self.eq_opt_motive_vt(m1, m2, env)
            }
            (
                PmPair { scrut: s1, x: x1, y: y1, body: b1, motive: m1, .. },
                PmPair { scrut: s2, x: x2, y: y2, body: b2, motive: m2, .. },
            ) => {
                self.eq_value(s1, s2, env)
                    && {
                        env.pairs.push((x1.clone(), x2.clone()));
                        env.pairs.push((y1.clone(), y2.clone()));
                        let r = self.eq_value(b1, b2, env);
                        env.pairs.pop();
                        env.pairs.pop();
                        r
                    }
                    && self.eq_opt_motive_vt(m1, m2, env)
            }
            (
                PmId { scrut: s1, binder: x1, body: b1, .. },
                PmId { scrut: s2, binder: x2, body: b2, .. },
            ) => {
                self.eq_value(s1, s2, env) && {
                    env.pairs.push((x1.clone(), x2.clone()));
                    let r = self.eq_value(b1, b2, env);
                    env.pairs.pop();
                    r
                }
            }
            (LetV { .. }, _) | (_, LetV { .. }) => false, // removed by normalization
            _ => false,
        }
    }

    fn eq_opt_motive_vt(
        &self,
        a: &Option<Motive<ValueType>>,
        b: &Option<Motive<ValueType>>,
        env: &mut PairEnv,
    ) -> bool {
        match (a, b) {
            (None, None) => true,
            (Some(a), Some(b)) => {
                env.pairs.push((a.binder.clone(), b.binder.clone()));
                let r = self.eq_vtype(&a.body, &b.body, env);
                env.pairs.pop();
                r
            }
            _ => false,
        }
    }

    fn eq_comp(&self, a: &Comp, b: &Comp, env: &mut PairEnv) -> bool {
        let a = self.contract_comp(a);
        let b = self.contract_comp(b);
        if self.eq_comp_nf(&a, &b, env) {
            return true;
        }
        if self.flags.effect_eqs {
            // One-step mu-unrolling retries, fuel-bounded.
            if let Comp::Mu { z, body } = &a {
                if self.spend() {
                    let unrolled = subst_comp(body, z, &Value::Thunk(Box::new(a.clone())));
                    if self.eq_comp(&unrolled, &b, env) {
                        return true;
                    }
                }
            }
            if let Comp::Mu { z, body } = &b {
                if self.spend() {
                    let unrolled = subst_comp(body, z, &Value::Thunk(Box::new(b.clone())));
                    if self.eq_comp(&a, &unrolled, env) {
                        return true;
                    }
                }
            }
        }
        false
    }

    fn eq_comp_nf(&self, a: &Comp, b: &Comp, env: &mut PairEnv) -> bool {
        use Comp::*;
        match (a, b) {
            (Annot { comp, .. }, _) => self.eq_comp(comp, b, env),
            (_, Annot { comp, .. }) => self.eq_comp(a, comp, env),
            (Nil, Nil) => true,
            (Return(v), Return(w)) => self.eq_value(v, w, env),
            (Force(v), Force(w)) => self.eq_value(v, w, env),
            (
                LetV { x, val: v1, body: b1, .. },
                LetV { x: y, val: v2, body: b2, .. },
            ) => {
                self.eq_value(v1, v2, env) && {
                    env.pairs.push((x.clone(), y.clone()));
                    let r = self.eq_comp(b1, b2, env);
                    env.pairs.pop();
                    r
                }
            }
            (LetNil { bound: k1, body: l1 }, LetNil { bound: k2, body: l2 }) => {
                self.eq_comp(k1, k2, env) && self.eq_comp(l1, l2, env)
            }
            (
                To { comp: c1, x, body: n1, motive: mo1 },
                To { comp: c2, x: y, body: n2, motive: mo2 },
            ) => {
                self.eq_comp(c1, c2, env)
                    && {
                        env.pairs.push((x.clone(), y.clone()));
                        let r = self.eq_comp(n1, n2, env);
                        env.pairs.pop();
                        r
                    }
                    && match (mo1, mo2) {
                        (None, None) => true,
                        (Some(m1), Some(m2)) => {
                            env.pairs.push((m1.binder.clone(), m2.binder.clone()));
                            let r = self.eq_ctype(&m1.body, &m2.body, env);
                            env.pairs.pop();
                            r
                        }
                        _ => false,
                    }
            }
            (
                PmSum { scrut: s1, branches: br1, .. },
                PmSum { scrut: s2, branches: br2, .. },
            ) => {
                self.eq_value(s1, s2, env)
                    && br1.len() == br2.len()
                    && br1.iter().zip(br2).all(|((x, k), (y, l))| {
                        env.pairs.push((x.clone(), y.clone()));
                        let r = self.eq_comp(k, l, env);
                        env.pairs.pop();
                        r
                    })
            }
            (PmUnit { scrut: s1, body: b1, .. }, PmUnit { scrut: s2, body: b2, .. }) => {
                self.eq_value(s1, s2, env) && self.eq_comp(b1, b2, env)
            }
            (
                PmPair { scrut: s1, x: x1, y: y1, body: b1, .. },
                PmPair { scrut: s2, x: x2, y: y2, body: b2, .. },
            ) => {
                self.eq_value(s1, s2, env) && {
                    env.pairs.push((x1.clone(), x2.clone()));
                    env.pairs.push((y1.clone(), y2.clone()));
                    let r = self.eq_comp(b1, b2, env);
                    env.pairs.pop();
                    env.pairs.pop();
                    r
                }
            }
            (
                PmId { scrut: s1, binder: x1, body: b1, .. },
                PmId { scrut: s2, binder: x2, body: b2, .. },
            ) => {
                self.eq_value(s1, s2, env) && {
                    env.pairs.push((x1.clone(), x2.clone()));
                    let r = self.eq_comp(b1, b2, env);
                    env.pairs.pop();
                    r
                }
            }
            (LamI(ks), LamI(ls)) => {
                ks.len() == ls.len() && ks.iter().zip(ls).all(|(k, l)| self.eq_comp(k, l, env))
            }
            (ProjI(i, k), ProjI(j, l)) => i == j && self.eq_comp(k, l, env),
            (Lam { x, body: b1 }, Lam { x: y, body: b2 }) => {
                env.pairs.push((x.clone(), y.clone()));
                let r = self.eq_comp(b1, b2, env);
                env.pairs.pop();
                r
            }
            (App { arg: a1, fun: f1 }, App { arg: a2, fun: f2 }) => {
                self.eq_value(a1, a2, env) && self.eq_comp(f1, f2, env)
            }
            (RetTensor { val: v1, comp: k1 }, RetTensor { val: v2, comp: k2 }) => {
                self.eq_value(v1, v2, env) && self.eq_comp(k1, k2, env)
            }
            (
                ToTensor { comp: c1, x, body: b1 },
                ToTensor { comp: c2, x: y, body: b2 },
            ) => {
                self.eq_comp(c1, c2, env) && {
                    env.pairs.push((x.clone(), y.clone()));
                    let r = self.eq_comp(b1, b2, env);
                    env.pairs.pop();
                    r
                }
            }
            (AppHom { comp: k1, fun: f1, .. }, AppHom { comp: k2, fun: f2, .. }) => {
                self.eq_comp(k1, k2, env) && self.eq_value(f1, f2, env)
            }
            (Diverge, Diverge) => true,
            (Mu { z, body: b1 }, Mu { z: w, body: b2 }) => {
                env.pairs.push((z.clone(), w.clone()));
                let r = self.eq_comp(b1, b2, env);
                env.pairs.pop();
                r
            }
            (Print(m1, k1), Print(m2, k2)) => m1 == m2 && self.eq_comp(k1, k2, env),
            (Choose(ks), Choose(ls)) => {
                ks.len() == ls.len() && ks.iter().zip(ls).all(|(k, l)| self.eq_comp(k, l, env))
            }
            (Error(e1), Error(e2)) => e1 == e2,
            (Write(s1, k1), Write(s2, k2)) => s1 == s2 && self.eq_comp(k1, k2, env),
            (Read(br1), Read(br2)) => {
                br1.len() == br2.len()
                    && br1
                        .iter()
                        .zip(br2)
                        .all(|((s, k), (t, l))| s == t && self.eq_comp(k, l, env))
            }
            _ => false,
        }
    }
}

/// Hoists an effect operator out of a stack position (the algebraicity
/// direction `K[op M / nil] -> op K[M / nil]`), one step at the head.
fn hoist_effect(m: &Comp) -> Option<Comp> {
    macro_rules! rebuild {
        ($inner:expr, $build:expr) => {{
            let build = $build;
            match $inner.as_ref() {
                Comp::Print(ts, k) => Some(Comp::Print(ts.clone(), Box::new(build(k.as_ref().clone())))),
                Comp::Write(s, k) => Some(Comp::Write(s.clone(), Box::new(build(k.as_ref().clone())))),
                Comp::Read(bs) => Some(Comp::Read(
                    bs.iter().map(|(s, k)| (s.clone(), build(k.clone()))).collect(),
                )),
                Comp::Choose(ks) => Some(Comp::Choose(ks.iter().map(|k| build(k.clone())).collect())),
                Comp::Error(e) => Some(Comp::Error(e.clone())),
                Comp::Diverge => Some(Comp::Diverge),
                _ => None,
            }
        }};
    }
    match m {
        Comp::To { comp, x, body, motive } => rebuild!(comp, |k: Comp| Comp::To {
            comp: Box::new(k),
            x: x.clone(),
            body: body.clone(),
            motive: motive.clone(),
        }),
        Comp::ProjI(i, comp) => {
            let i = *i;
            rebuild!(comp, move |k: Comp| Comp::ProjI(i, Box::new(k)))
        }
        Comp::App { arg, fun } => rebuild!(fun, |k: Comp| Comp::App {
            arg: arg.clone(),
            fun: Box::new(k),
        }),
        Comp::AppHom { comp, fun, fun_ty } => rebuild!(comp, |k: Comp| Comp::AppHom {
            comp: Box::new(k),
            fun: fun.clone(),
            fun_ty: fun_ty.clone(),
        }),
        Comp::ToTensor { comp, x, body } => rebuild!(comp, |k: Comp| Comp::ToTensor {
            comp: Box::new(k),
            x: x.clone(),
            body: body.clone(),
        }),
        Comp::LetNil { bound, body } => rebuild!(bound, |k: Comp| Comp::LetNil {
            bound: Box::new(k),
            body: body.clone(),
        }),
        _ => None,
    }
}

/// Judgemental equality of value types (beta on embedded values, alpha on
/// binders; eta and effect equations when the corresponding flags are on).
pub fn types_equal(sig: &EffectSignature, a: &ValueType, b: &ValueType) -> bool {
    EqEngine::new(sig.features).eq_vtype(a, b, &mut PairEnv::new())
}

pub fn ctypes_equal(sig: &EffectSignature, a: &CompType, b: &CompType) -> bool {
    EqEngine::new(sig.features).eq_ctype(a, b, &mut PairEnv::new())
}

/// Judgemental equality of values, used for `refl` checking.
pub fn values_equal(sig: &EffectSignature, a: &Value, b: &Value) -> bool {
    EqEngine::new(sig.features).eq_value(a, b, &mut PairEnv::new())
}

pub fn comps_equal(sig: &EffectSignature, a: &Comp, b: &Comp) -> bool {
    EqEngine::new(sig.features).eq_comp(a, b, &mut PairEnv::new())
}

// ---------------------------------------------------------------------------
// Typing: values
// ---------------------------------------------------------------------------

fn require_no_stoup(ctx: &Context, rule: &'static str) -> TcResult<()> {
    if ctx.stoup.is_some() {
        return err(
            "stoup",
            format!("the stoup must be consumed elsewhere; `{rule}` requires an empty stoup"),
        );
    }
    Ok(())
}

pub fn synth_value(sig: &EffectSignature, ctx: &Context, v: &Value) -> TcResult<ValueType> {
    match v {
        Value::Var(x) => match ctx.lookup(x) {
            Some(a) => Ok(a.clone()),
            None => err("scope", format!("unbound identifier `{x}`")),
        },
        Value::UnitV => Ok(ValueType::Unit),
        Value::Pair(a, b) => {
            let ta = synth_value(sig, ctx, a)?;
            let tb = synth_value(sig, ctx, b)?;
            let mut avoid = gamma_names(ctx);
            avoid.extend(free_idents_vtype(&tb));
            let fresh = freshen("p", &avoid);
            Ok(ValueType::Sigma(fresh, Box::new(ta), Box::new(tb)))
        }
        Value::Refl(w) => {
            let a = synth_value(sig, ctx, w)?;
            Ok(ValueType::Id(Box::new(a), w.clone(), w.clone()))
        }
        Value::Thunk(m) => {
            let b = synth_comp(sig, &ctx.without_stoup(), m)?;
            Ok(ValueType::U(Box::new(b)))
        }
        Value::AppV { arg, fun } => {
            let tf = synth_value(sig, ctx, fun)?;
            match tf {
                ValueType::Pi(x, a, a2) => {
                    check_value(sig, ctx, arg, &a)?;
                    Ok(subst_vtype(&a2, &x, arg))
                }
                other => err_conv("app-val", "Pi (_ : _) -> _", other),
            }
        }
        Value::LetV { x, ann, val, body } => {
            let a = match ann {
                Some(a) => {
                    wf_vtype(sig, ctx, a)?;
                    check_value(sig, ctx, val, a)?;
                    a.as_ref().clone()
                }
                None => synth_value(sig, ctx, val)?,
            };
            let (x2, body2) = {
                let avoid = gamma_names(ctx);
                if avoid.contains(x) {
                    let mut avoid = avoid;
                    avoid.extend(free_idents_value(body));
                    let f = freshen(x, &avoid);
                    (f.clone(), subst_value(body, x, &Value::Var(f)))
                } else {
                    (x.clone(), body.as_ref().clone())
                }
            };
            let t = synth_value(sig, &ctx.extended(x2.clone(), a), &body2)?;
            Ok(subst_vtype(&t, &x2, val))
        }
        Value::PmSum { .. } | Value::PmUnit { .. } | Value::PmPair { .. } | Value::PmId { .. } => {
            synth_pm_value(sig, ctx, v)
        }
        Value::Inj(..) => err("synth", "cannot synthesize the type of an injection"),
        Value::LamV { .. } => err("synth", "cannot synthesize the type of a value lambda"),
        Value::LamNil(_) => err("synth", "cannot synthesize the type of a homomorphism"),
    }
}

fn scrut_type(
    sig: &EffectSignature,
    ctx: &Context,
    scrut: &Value,
    scrut_ty: &Option<Box<ValueType>>,
) -> TcResult<ValueType> {
    match scrut_ty {
        Some(t) => {
            wf_vtype(sig, ctx, t)?;
            check_value(sig, ctx, scrut, t)?;
            Ok(t.as_ref().clone())
        }
        None => synth_value(sig, ctx, scrut),
    }
}

fn synth_pm_value(sig: &EffectSignature, ctx: &Context, v: &Value) -> TcResult<ValueType> {
    match v {
        Value::PmSum { scrut, scrut_ty, branches, motive } => {
            let st = scrut_type(sig, ctx, scrut, scrut_ty)?;
            let comps = match normalize_vtype(&st) {
                ValueType::FinSum(items) => items,
                other => return err_conv("pm-sum", "Sum {..}", other),
            };
            if comps.len() != branches.len() {
                return err(
                    "arity",
                    format!("pattern match has {} branches, sum has {}", branches.len(), comps.len()),
                );
            }
            let m = match motive {
                Some(m) => m,
                None => {
                    // non-dependent: all branches must synthesize one type
                    let mut result: Option<ValueType> = None;
                    for ((x, body), ai) in branches.iter().zip(&comps) {
                        let (x2, (body2, _)) = fresh2_vt(ctx, x, body, &ValueType::Unit);
                        let t = synth_value(sig, &ctx.extended(x2.clone(), ai.clone()), &body2)?;
                        if free_idents_vtype(&t).contains(&x2) {
                            return err("motive", "branch type depends on the pattern; annotate a motive");
                        }
                        match &result {
                            None => result = Some(t),
                            Some(r) => {
                                if !types_equal(sig, r, &t) {
                                    return err_conv("motive", crate::pretty::vtype(r), crate::pretty::vtype(&t));
                                }
                            }
                        }
                    }
                    return match result {
                        Some(t) => Ok(t),
                        None => err("motive", "cannot synthesize an empty pattern match without a motive"),
                    };
                }
            };
            wf_vtype(sig, &ctx.extended(m.binder.clone(), st.clone()), &m.body)?;
            for (i, ((x, body), ai)) in branches.iter().zip(&comps).enumerate() {
                let expected = subst_vtype(
                    &m.body,
                    &m.binder,
                    &Value::Inj(i + 1, Box::new(Value::Var(x.clone()))),
                );
                let (x2, pair) = fresh2_vt(ctx, x, body, &expected);
                let (body2, expected2) = pair;
                check_value(sig, &ctx.extended(x2, ai.clone()), &body2, &expected2)?;
            }
            Ok(subst_vtype(&m.body, &m.binder, scrut))
        }
        Value::PmUnit { scrut, body, motive } => {
            check_value(sig, ctx, scrut, &ValueType::Unit)?;
            let m = match motive {
                Some(m) => m,
                None => return synth_value(sig, ctx, body),
            };
            wf_vtype(sig, &ctx.extended(m.binder.clone(), ValueType::Unit), &m.body)?;
            let expected = subst_vtype(&m.body, &m.binder, &Value::UnitV);
            check_value(sig, ctx, body, &expected)?;
            Ok(subst_vtype(&m.body, &m.binder, scrut))
        }
        Value::PmPair { scrut, scrut_ty, x, y, body, motive } => {
            let st = scrut_type(sig, ctx, scrut, scrut_ty)?;
            let (bx, a1, a2) = match normalize_vtype(&st) {
                ValueType::Sigma(bx, a1, a2) => (bx, a1, a2),
                other => return err_conv("pm-pair", "Sigma (_ : _) -> _", other),
            };
            let m = match motive {
                Some(m) => m,
                None => {
                    let mut avoid = gamma_names(ctx);
                    avoid.extend(free_idents_value(body));
                    avoid.insert(y.clone());
                    let x2 = if gamma_names(ctx).contains(x) { freshen(x, &avoid) } else { x.clone() };
                    avoid.insert(x2.clone());
                    let y2 = if gamma_names(ctx).contains(y) || y == &x2 { freshen(y, &avoid) } else { y.clone() };
                    let body2 = subst_value(
                        &subst_value(body, x, &Value::Var(x2.clone())),
                        y,
                        &Value::Var(y2.clone()),
                    );
                    let a2i = subst_vtype(&a2, &bx, &Value::Var(x2.clone()));
                    let inner = ctx.extended(x2.clone(), a1.as_ref().clone()).extended(y2.clone(), a2i);
                    let t = synth_value(sig, &inner, &body2)?;
                    let fv = free_idents_vtype(&t);
                    if fv.contains(&x2) || fv.contains(&y2) {
                        return err("motive", "branch type depends on the pattern; annotate a motive");
                    }
                    return Ok(t);
                }
            };
            wf_vtype(sig, &ctx.extended(m.binder.clone(), st.clone()), &m.body)?;
            let expected = subst_vtype(
                &m.body,
                &m.binder,
                &Value::Pair(Box::new(Value::Var(x.clone())), Box::new(Value::Var(y.clone()))),
            );
            // rename x, y apart from the context
            let mut avoid = gamma_names(ctx);
            avoid.extend(free_idents_value(body));
            avoid.extend(free_idents_vtype(&expected));
            avoid.insert(y.clone());
            let x2 = if gamma_names(ctx).contains(x) { freshen(x, &avoid) } else { x.clone() };
            avoid.insert(x2.clone());
            let y2 = if gamma_names(ctx).contains(y) || y == &x2 { freshen(y, &avoid) } else { y.clone() };
            let body2 = subst_value(&subst_value(body, x, &Value::Var(x2.clone())), y, &Value::Var(y2.clone()));
            let expected2 = subst_vtype(
                &subst_vtype(&expected, x, &Value::Var(x2.clone())),
                y,
                &Value::Var(y2.clone()),
            );
            let a2i = subst_vtype(&a2, &bx, &Value::Var(x2.clone()));
            let inner = ctx.extended(x2, a1.as_ref().clone()).extended(y2, a2i);
            check_value(sig, &inner, &body2, &expected2)?;
            Ok(subst_vtype(&m.body, &m.binder, scrut))
        }
        Value::PmId { scrut, scrut_ty, binder, body, motive } => {
            let st = scrut_type(sig, ctx, scrut, scrut_ty)?;
            let (a0, v1, v2) = match normalize_vtype(&st) {
                ValueType::Id(a0, v1, v2) => (a0, v1, v2),
                other => return err_conv("pm-id", "Id _ _ _", other),
            };
            let m = match motive {
                Some(m) => m,
                None => {
                    let (x2, (body2, _)) = fresh2_vt(ctx, binder, body, &ValueType::Unit);
                    let t = synth_value(sig, &ctx.extended(x2.clone(), a0.as_ref().clone()), &body2)?;
                    if free_idents_vtype(&t).contains(&x2) {
                        return err("motive", "branch type depends on the pattern; annotate a motive");
                    }
                    return Ok(t);
                }
            };
            // motive lives in ctx, l : A, r : A, p : Id A l r
            let mctx = ctx
                .extended(m.left.clone(), a0.as_ref().clone())
                .extended(m.right.clone(), a0.as_ref().clone())
                .extended(
                    m.witness.clone(),
                    ValueType::Id(
                        a0.clone(),
                        Box::new(Value::Var(m.left.clone())),
                        Box::new(Value::Var(m.right.clone())),
                    ),
                );
            wf_vtype(sig, &mctx, &m.body)?;
            let refl_x = Value::Refl(Box::new(Value::Var(binder.clone())));
            let expected = subst_vtype(
                &subst_vtype(
                    &subst_vtype(&m.body, &m.left, &Value::Var(binder.clone())),
                    &m.right,
                    &Value::Var(binder.clone()),
                ),
                &m.witness,
                &refl_x,
            );
            let (x2, (body2, expected2)) = fresh2_vt(ctx, binder, body, &expected);
            check_value(sig, &ctx.extended(x2, a0.as_ref().clone()), &body2, &expected2)?;
            let result = subst_vtype(
                &subst_vtype(&subst_vtype(&m.body, &m.left, &v1), &m.right, &v2),
                &m.witness,
                scrut,
            );
            Ok(result)
        }
        _ => unreachable!(),
    }
}

fn fresh2_vt(
    ctx: &Context,
    x: &Ident,
    body: &Value,
    expected: &ValueType,
) -> (Ident, (Value, ValueType)) {
    if !gamma_names(ctx).contains(x) {
        return (x.clone(), (body.clone(), expected.clone()));
    }
    let mut avoid = gamma_names(ctx);
    avoid.extend(free_idents_value(body));
    avoid.extend(free_idents_vtype(expected));
    let f = freshen(x, &avoid);
    (
        f.clone(),
        (subst_value(body, x, &Value::Var(f.clone())), subst_vtype(expected, x, &Value::Var(f))),
    )
}

pub fn check_value(sig: &EffectSignature, ctx: &Context, v: &Value, a: &ValueType) -> TcResult<()> {
    match (v, a) {
        (Value::UnitV, ValueType::Unit) => Ok(()),
        (Value::UnitV, other) => err_conv("unit-intro", other, "1"),
        (Value::Thunk(m), ValueType::U(b)) => check_comp(sig, &ctx.without_stoup(), m, b),
        (Value::Thunk(_), other) => err_conv("thunk", other, "U _"),
        (Value::Inj(i, w), ValueType::FinSum(items)) => {
            if *i == 0 || *i > items.len() {
                return err(
                    "inj",
                    format!("injection index {i} out of range for a sum of arity {}", items.len()),
                );
            }
            check_value(sig, ctx, w, &items[i - 1])
        }
        (Value::Inj(..), other) => err_conv("inj", other, "Sum {..}"),
        (Value::Pair(p, q), ValueType::Sigma(x, a1, a2)) => {
            check_value(sig, ctx, p, a1)?;
            let a2i = subst_vtype(a2, x, p);
            check_value(sig, ctx, q, &a2i)
        }
        (Value::Pair(..), other) => err_conv("pair", other, "Sigma (_ : _) -> _"),
        (Value::Refl(w), ValueType::Id(a0, v1, v2)) => {
            check_value(sig, ctx, w, a0)?;
            if !values_equal(sig, w, v1) || !values_equal(sig, w, v2) {
                return err_conv(
                    "refl",
                    format!("Id {} {} {}", crate::pretty::vtype(a0), v1, v2),
                    format!("refl {w}"),
                );
            }
            Ok(())
        }
        (Value::Refl(_), other) => err_conv("refl", other, "Id _ _ _"),
        (Value::LamV { x, body }, ValueType::Pi(y, a1, a2)) => {
            let mut avoid = gamma_names(ctx);
            avoid.extend(free_idents_value(body));
            avoid.extend(free_idents_vtype(a2));
            let x2 = if gamma_names(ctx).contains(x) { freshen(x, &avoid) } else { x.clone() };
            let body2 = if x2 == *x { body.as_ref().clone() } else { subst_value(body, x, &Value::Var(x2.clone())) };
            let a2i = subst_vtype(a2, y, &Value::Var(x2.clone()));
            check_value(sig, &ctx.extended(x2, a1.as_ref().clone()), &body2, &a2i)
        }
        (Value::LamV { .. }, other) => err_conv("lam-val", other, "Pi (_ : _) -> _"),
        (Value::LamNil(k), ValueType::Hom(b, c)) => {
            let inner = ctx.without_stoup().with_stoup(b.as_ref().clone());
            check_comp(sig, &inner, k, c)
        }
        (Value::LamNil(_), other) => err_conv("lam-nil", other, "_ -o _"),
        (Value::LetV { x, ann, val, body }, _) => {
            if let Some(t) = ann {
                wf_vtype(sig, ctx, t)?;
                check_value(sig, ctx, val, t)?;
            }
            // let is transparent up to the beta law: check body[val/x].
            check_value(sig, ctx, &subst_value(body, x, val), a)
        }
        (
            Value::PmSum { .. } | Value::PmUnit { .. } | Value::PmPair { .. } | Value::PmId { .. },
            _,
        ) => check_pm_value(sig, ctx, v, a),
        _ => {
            let got = synth_value(sig, ctx, v)?;
            if types_equal(sig, &got, a) {
                Ok(())
            } else {
                err_conv("conv", crate::pretty::vtype(a), crate::pretty::vtype(&got))
            }
        }
    }
}

fn check_pm_value(sig: &EffectSignature, ctx: &Context, v: &Value, a: &ValueType) -> TcResult<()> {
    let has_motive = match v {
        Value::PmSum { motive, .. } => motive.is_some(),
        Value::PmUnit { motive, .. } => motive.is_some(),
        Value::PmPair { motive, .. } => motive.is_some(),
        Value::PmId { motive, .. } => motive.is_some(),
        _ => unreachable!(),
    };
    if has_motive {
        let got = synth_pm_value(sig, ctx, v)?;
        return if types_equal(sig, &got, a) {
            Ok(())
        } else {
            err_conv("conv", crate::pretty::vtype(a), crate::pretty::vtype(&got))
        };
    }
    // Non-dependent elimination: every branch checks against the target.
    match v {
        Value::PmSum { scrut, scrut_ty, branches, .. } => {
            let st = scrut_type(sig, ctx, scrut, scrut_ty)?;
            let comps = match normalize_vtype(&st) {
                ValueType::FinSum(items) => items,
                other => return err_conv("pm-sum", "Sum {..}", other),
            };
            if comps.len() != branches.len() {
                return err(
                    "arity",
                    format!("pattern match has {} branches, sum has {}", branches.len(), comps.len()),
                );
            }
            for ((x, body), ai) in branches.iter().zip(&comps) {
                let (x2, (body2, a2)) = fresh2_vt(ctx, x, body, a);
                check_value(sig, &ctx.extended(x2, ai.clone()), &body2, &a2)?;
            }
            Ok(())
        }
        Value::PmUnit { scrut, body, .. } => {
            check_value(sig, ctx, scrut, &ValueType::Unit)?;
            check_value(sig, ctx, body, a)
        }
        Value::PmPair { scrut, scrut_ty, x, y, body, .. } => {
            let st = scrut_type(sig, ctx, scrut, scrut_ty)?;
            let (bx, a1, a2) = match normalize_vtype(&st) {
                ValueType::Sigma(bx, a1, a2) => (bx, a1, a2),
                other => return err_conv("pm-pair", "Sigma (_ : _) -> _", other),
            };
            let mut avoid = gamma_names(ctx);
            avoid.extend(free_idents_value(body));
            avoid.extend(free_idents_vtype(a));
            avoid.insert(y.clone());
            let x2 = if gamma_names(ctx).contains(x) { freshen(x, &avoid) } else { x.clone() };
            avoid.insert(x2.clone());
            let y2 = if gamma_names(ctx).contains(y) || y == &x2 { freshen(y, &avoid) } else { y.clone() };
            let body2 = subst_value(&subst_value(body, x, &Value::Var(x2.clone())), y, &Value::Var(y2.clone()));
            let a2i = subst_vtype(&a2, &bx, &Value::Var(x2.clone()));
            let inner = ctx.extended(x2, a1.as_ref().clone()).extended(y2, a2i);
            check_value(sig, &inner, &body2, a)
        }
        Value::PmId { scrut, scrut_ty, binder, body, .. } => {
            let st = scrut_type(sig, ctx, scrut, scrut_ty)?;
            let a0 = match normalize_vtype(&st) {
                ValueType::Id(a0, ..) => a0,
                other => return err_conv("pm-id", "Id _ _ _", other),
            };
            let (x2, (body2, a2)) = fresh2_vt(ctx, binder, body, a);
            check_value(sig, &ctx.extended(x2, a0.as_ref().clone()), &body2, &a2)
        }
        _ => unreachable!(),
    }
}

// ---------------------------------------------------------------------------
// Typing: computations
// ---------------------------------------------------------------------------

pub fn synth_comp(sig: &EffectSignature, ctx: &Context, m: &Comp) -> TcResult<CompType> {
    match m {
        Comp::Nil => match &ctx.stoup {
            Some(b) => Ok(b.clone()),
            None => err("nil", "no stoup hypothesis is available here"),
        },
        Comp::Annot { comp, ty } => {
            wf_ctype(sig, ctx, ty)?;
            check_comp(sig, ctx, comp, ty)?;
            Ok(ty.as_ref().clone())
        }
        Comp::Return(v) => {
            require_no_stoup(ctx, "return")?;
            let a = synth_value(sig, ctx, v)?;
            Ok(CompType::F(Box::new(a)))
        }
        Comp::Force(v) => {
            require_no_stoup(ctx, "force")?;
            match synth_value(sig, ctx, v)? {
                ValueType::U(b) => Ok(*b),
                other => err_conv("force", "U _", other),
            }
        }
        Comp::To { comp, x, body, motive } => synth_to(sig, ctx, comp, x, body, motive),
        Comp::LetV { x, ann, val, body } => {
            let a = match ann {
                Some(a) => {
                    wf_vtype(sig, ctx, a)?;
                    check_value(sig, ctx, val, a)?;
                    a.as_ref().clone()
                }
                None => synth_value(sig, ctx, val)?,
            };
            let mut avoid = gamma_names(ctx);
            avoid.extend(free_idents_comp(body));
            let x2 = if gamma_names(ctx).contains(x) { freshen(x, &avoid) } else { x.clone() };
            let body2 =
                if x2 == *x { body.as_ref().clone() } else { subst_comp(body, x, &Value::Var(x2.clone())) };
            let t = synth_comp(sig, &ctx.extended(x2.clone(), a), &body2)?;
            Ok(subst_ctype(&t, &x2, val))
        }
        Comp::LetNil { bound, body } => {
            let b = synth_comp(sig, ctx, bound)?;
            synth_comp(sig, &ctx.without_stoup().with_stoup(b), body)
        }
        Comp::LamI(ks) => {
            let mut out = Vec::with_capacity(ks.len());
            for k in ks {
                out.push(synth_comp(sig, ctx, k)?);
            }
            Ok(CompType::FinProd(out))
        }
        Comp::ProjI(i, k) => {
            let t = synth_comp(sig, ctx, k)?;
            match t {
                CompType::FinProd(items) => {
                    if *i == 0 || *i > items.len() {
                        return err(
                            "proj-i",
                            format!("projection {i} out of range for arity {}", items.len()),
                        );
                    }
                    Ok(items[i - 1].clone())
                }
                CompType::DepProd(entries) => {
                    if !sig.features.proj_products {
                        return err(
                            "feature-disabled",
                            "dependent projection products require the proj-products flag",
                        );
                    }
                    require_no_stoup(ctx, "proj")?;
                    if *i == 0 || *i > entries.len() {
                        return err(
                            "proj-i",
                            format!("projection {i} out of range for arity {}", entries.len()),
                        );
                    }
                    let mut t = entries[i - 1].1.clone();
                    for (j, (z, _)) in entries.iter().enumerate().take(i - 1) {
                        let proj = Value::Thunk(Box::new(Comp::ProjI(j + 1, k.clone())));
                        t = subst_ctype(&t, z, &proj);
                    }
                    Ok(t)
                }
                other => err_conv("proj-i", "Prod {..}", other),
            }
        }
        Comp::App { arg, fun } => {
            let t = synth_comp(sig, ctx, fun)?;
            match t {
                CompType::FunPi(x, a, b) => {
                    check_value(sig, ctx, arg, &a)?;
                    Ok(subst_ctype(&b, &x, arg))
                }
                other => err_conv("app", "Pi (_ : _) -> _", other),
            }
        }
        Comp::ToTensor { comp, x, body } => {
            let t = synth_comp(sig, ctx, comp)?;
            let (bx, a, b) = match t {
                CompType::SigmaF(bx, a, b) => (bx, a, b),
                other => return err_conv("to-tensor", "SigmaF (_ : _) -> _", other),
            };
            let mut avoid = gamma_names(ctx);
            avoid.extend(free_idents_comp(body));
            avoid.extend(free_idents_ctype(&b));
            let x2 = if gamma_names(ctx).contains(x) { freshen(x, &avoid) } else { x.clone() };
            let body2 =
                if x2 == *x { body.as_ref().clone() } else { subst_comp(body, x, &Value::Var(x2.clone())) };
            let bi = subst_ctype(&b, &bx, &Value::Var(x2.clone()));
            let inner = ctx.without_stoup().extended(x2.clone(), a.as_ref().clone()).with_stoup(bi);
            let c = synth_comp(sig, &inner, &body2)?;
            if free_idents_ctype(&c).contains(&x2) {
                return err("to-tensor", format!("result type may not depend on `{x2}`"));
            }
            Ok(c)
        }
        Comp::AppHom { comp, fun, fun_ty } => {
            let t = match fun_ty {
                Some(t) => {
                    wf_vtype(sig, &ctx.without_stoup(), t)?;
                    check_value(sig, &ctx.without_stoup(), fun, t)?;
                    t.as_ref().clone()
                }
                None => synth_value(sig, &ctx.without_stoup(), fun)?,
            };
            match t {
                ValueType::Hom(b, c) => {
                    check_comp(sig, ctx, comp, &b)?;
                    Ok(*c)
                }
                other => err_conv("app-hom", "_ -o _", other),
            }
        }
        Comp::Print(_, k) => {
            require_no_stoup(ctx, "print")?;
            synth_comp(sig, ctx, k)
        }
        Comp::Write(s, k) => {
            require_no_stoup(ctx, "write")?;
            if !sig.has_state(s) {
                return err("write", format!("unknown state `{s}`"));
            }
            synth_comp(sig, ctx, k)
        }
        Comp::Read(branches) => {
            require_no_stoup(ctx, "read")?;
            check_read_coverage(sig, branches)?;
            let t = synth_comp(sig, ctx, &branches[0].1)?;
            for (_, k) in branches.iter().skip(1) {
                check_comp(sig, ctx, k, &t)?;
            }
            Ok(t)
        }
        Comp::Choose(ks) => {
            require_no_stoup(ctx, "choose")?;
            if ks.is_empty() {
                return err("choose", "choose requires at least one alternative");
            }
            let t = synth_comp(sig, ctx, &ks[0])?;
            for k in ks.iter().skip(1) {
                check_comp(sig, ctx, k, &t)?;
            }
            Ok(t)
        }
        Comp::Error(e) => {
            require_no_stoup(ctx, "error")?;
            if !sig.errors.contains(e) {
                return err("error", format!("undeclared error label `{e}`"));
            }
            err("synth", "cannot synthesize the type of `error`; annotate it")
        }
        Comp::Diverge => {
            require_no_stoup(ctx, "diverge")?;
            err("synth", "cannot synthesize the type of `diverge`; annotate it")
        }
        Comp::Mu { .. } => err("synth", "cannot synthesize the type of `mu`; annotate it"),
        Comp::Lam { .. } => err("synth", "cannot synthesize the type of a lambda; annotate it"),
        Comp::RetTensor { .. } => {
            err("synth", "cannot synthesize the type of `rtensor`; annotate it")
        }
        Comp::PmSum { .. } | Comp::PmUnit { .. } | Comp::PmPair { .. } | Comp::PmId { .. } => {
            synth_pm_comp(sig, ctx, m)
        }
    }
}

fn check_read_coverage(sig: &EffectSignature, branches: &[(StateName, Comp)]) -> TcResult<()> {
    let mut names: Vec<&str> = branches.iter().map(|(s, _)| s.as_str()).collect();
    names.sort_unstable();
    names.dedup();
    if names.len() != branches.len() {
        return err("read", "duplicate state branch in read");
    }
    let mut states: Vec<&str> = sig.states.iter().map(|s| s.as_str()).collect();
    states.sort_unstable();
    if names != states {
        return err(
            "read",
            format!(
                "read must supply exactly one branch per state; states are {{{}}}",
                sig.states.join(", ")
            ),
        );
    }
    Ok(())
}

fn synth_to(
    sig: &EffectSignature,
    ctx: &Context,
    comp: &Comp,
    x: &Ident,
    body: &Comp,
    motive: &Option<Motive<CompType>>,
) -> TcResult<CompType> {
    match motive {
        None => {
            let t = synth_comp(sig, ctx, comp)?;
            let a = match t {
                CompType::F(a) => a,
                other => return err_conv("to", "F _", other),
            };
            let mut avoid = gamma_names(ctx);
            avoid.extend(free_idents_comp(body));
            let x2 = if gamma_names(ctx).contains(x) { freshen(x, &avoid) } else { x.clone() };
            let body2 =
                if x2 == *x { body.clone() } else { subst_comp(body, x, &Value::Var(x2.clone())) };
            let b = synth_comp(sig, &ctx.without_stoup().extended(x2.clone(), *a), &body2)?;
            if free_idents_ctype(&b).contains(&x2) {
                return err(
                    "to",
                    format!(
                        "the result type depends on `{x2}`; a dependent motive requires the plus flag"
                    ),
                );
            }
            Ok(b)
        }
        Some(mot) => {
            if !sig.features.plus {
                return err("to-dep", "dependent motive requires plus");
            }
            require_no_stoup(ctx, "to (dependent)")?;
            let t = synth_comp(sig, ctx, comp)?;
            let a = match t {
                CompType::F(a) => a,
                other => return err_conv("to-dep", "F _", other),
            };
            let ufa = ValueType::U(Box::new(CompType::F(a.clone())));
            wf_ctype(sig, &ctx.extended(mot.binder.clone(), ufa), &mot.body)?;
            // body checks at the motive instantiated with `tr x`
            let mut avoid = gamma_names(ctx);
            avoid.extend(free_idents_comp(body));
            avoid.extend(free_idents_ctype(&mot.body));
            let x2 = if gamma_names(ctx).contains(x) { freshen(x, &avoid) } else { x.clone() };
            let body2 =
                if x2 == *x { body.clone() } else { subst_comp(body, x, &Value::Var(x2.clone())) };
            let expected = subst_ctype(&mot.body, &mot.binder, &tr(Value::Var(x2.clone())));
            check_comp(sig, &ctx.extended(x2, *a), &body2, &expected)?;
            Ok(subst_ctype(&mot.body, &mot.binder, &Value::Thunk(Box::new(strip_annots(comp)))))
        }
    }
}

/// Erases `Annot` wrappers; used when a computation is quoted into a type.
pub fn strip_annots(m: &Comp) -> Comp {
    match m {
        Comp::Annot { comp, .. } => strip_annots(comp),
        other => other.clone(),
    }
}

fn synth_pm_comp(sig: &EffectSignature, ctx: &Context, m: &Comp) -> TcResult<CompType> {
    match m {
        Comp::PmSum { scrut, scrut_ty, branches, motive } => {
            let st = scrut_type(sig, &ctx.without_stoup(), scrut, scrut_ty)?;
            let comps = match normalize_vtype(&st) {
                ValueType::FinSum(items) => items,
                other => return err_conv("pm-sum", "Sum {..}", other),
            };
            if comps.len() != branches.len() {
                return err(
                    "arity",
                    format!("pattern match has {} branches, sum has {}", branches.len(), comps.len()),
                );
            }
            let mot = match motive {
                Some(mo) => mo,
                None => {
                    let mut result: Option<CompType> = None;
                    for ((x, body), ai) in branches.iter().zip(&comps) {
                        let (x2, (body2, _)) =
                            fresh2_ct(ctx, x, body, &CompType::F(Box::new(ValueType::Unit)));
                        let t = synth_comp(sig, &ctx.extended(x2.clone(), ai.clone()), &body2)?;
                        if free_idents_ctype(&t).contains(&x2) {
                            return err("motive", "branch type depends on the pattern; annotate a motive");
                        }
                        match &result {
                            None => result = Some(t),
                            Some(r) => {
                                if !ctypes_equal(sig, r, &t) {
                                    return err_conv("motive", crate::pretty::ctype(r), crate::pretty::ctype(&t));
                                }
                            }
                        }
                    }
                    return match result {
                        Some(t) => Ok(t),
                        None => err("motive", "cannot synthesize an empty pattern match without a motive"),
                    };
                }
            };
            wf_ctype(sig, &ctx.without_stoup().extended(mot.binder.clone(), st.clone()), &mot.body)?;
            for (i, ((x, body), ai)) in branches.iter().zip(&comps).enumerate() {
                let expected = subst_ctype(
                    &mot.body,
                    &mot.binder,
                    &Value::Inj(i + 1, Box::new(Value::Var(x.clone()))),
                );
                let (x2, (body2, expected2)) = fresh2_ct(ctx, x, body, &expected);
                check_comp(sig, &ctx.extended(x2, ai.clone()), &body2, &expected2)?;
            }
            Ok(subst_ctype(&mot.body, &mot.binder, scrut))
        }
        Comp::PmUnit { scrut, body, motive } => {
            check_value(sig, &ctx.without_stoup(), scrut, &ValueType::Unit)?;
            let mot = match motive {
                Some(mo) => mo,
                None => return synth_comp(sig, ctx, body),
            };
            wf_ctype(sig, &ctx.without_stoup().extended(mot.binder.clone(), ValueType::Unit), &mot.body)?;
            let expected = subst_ctype(&mot.body, &mot.binder, &Value::UnitV);
            check_comp(sig, ctx, body, &expected)?;
            Ok(subst_ctype(&mot.body, &mot.binder, scrut))
        }
        Comp::PmPair { scrut, scrut_ty, x, y, body, motive } => {
            let st = scrut_type(sig, &ctx.without_stoup(), scrut, scrut_ty)?;
            let (bx, a1, a2) = match normalize_vtype(&st) {
                ValueType::Sigma(bx, a1, a2) => (bx, a1, a2),
                other => return err_conv("pm-pair", "Sigma (_ : _) -> _", other),
            };
            let mot = match motive {
                Some(mo) => mo,
                None => {
                    let mut avoid = gamma_names(ctx);
                    avoid.extend(free_idents_comp(body));
                    avoid.insert(y.clone());
                    let x2 = if gamma_names(ctx).contains(x) { freshen(x, &avoid) } else { x.clone() };
                    avoid.insert(x2.clone());
                    let y2 = if gamma_names(ctx).contains(y) || y == &x2 { freshen(y, &avoid) } else { y.clone() };
                    let body2 = subst_comp(
                        &subst_comp(body, x, &Value::Var(x2.clone())),
                        y,
                        &Value::Var(y2.clone()),
                    );
                    let a2i = subst_vtype(&a2, &bx, &Value::Var(x2.clone()));
                    let inner = ctx.extended(x2.clone(), a1.as_ref().clone()).extended(y2.clone(), a2i);
                    let t = synth_comp(sig, &inner, &body2)?;
                    let fv = free_idents_ctype(&t);
                    if fv.contains(&x2) || fv.contains(&y2) {
                        return err("motive", "branch type depends on the pattern; annotate a motive");
                    }
                    return Ok(t);
                }
            };
            wf_ctype(sig, &ctx.without_stoup().extended(mot.binder.clone(), st.clone()), &mot.body)?;
            let expected = subst_ctype(
                &mot.body,
                &mot.binder,
                &Value::Pair(Box::new(Value::Var(x.clone())), Box::new(Value::Var(y.clone()))),
            );
            let mut avoid = gamma_names(ctx);
            avoid.extend(free_idents_comp(body));
            avoid.extend(free_idents_ctype(&expected));
            avoid.insert(y.clone());
            let x2 = if gamma_names(ctx).contains(x) { freshen(x, &avoid) } else { x.clone() };
            avoid.insert(x2.clone());
            let y2 = if gamma_names(ctx).contains(y) || y == &x2 { freshen(y, &avoid) } else { y.clone() };
            let body2 = subst_comp(&subst_comp(body, x, &Value::Var(x2.clone())), y, &Value::Var(y2.clone()));
            let expected2 = subst_ctype(
                &subst_ctype(&expected, x, &Value::Var(x2.clone())),
                y,
                &Value::Var(y2.clone()),
            );
            let a2i = subst_vtype(&a2, &bx, &Value::Var(x2.clone()));
            let inner = ctx.extended(x2, a1.as_ref().clone()).extended(y2, a2i);
            check_comp(sig, &inner, &body2, &expected2)?;
            Ok(subst_ctype(&mot.body, &mot.binder, scrut))
        }
        Comp::PmId { scrut, scrut_ty, binder, body, motive } => {
            let st = scrut_type(sig, &ctx.without_stoup(), scrut, scrut_ty)?;
            let (a0, v1, v2) = match normalize_vtype(&st) {
                ValueType::Id(a0, v1, v2) => (a0, v1, v2),
                other => return err_conv("pm-id", "Id _ _ _", other),
            };
            let mot = match motive {
                Some(mo) => mo,
                None => {
                    let (x2, (body2, _)) =
                        fresh2_ct(ctx, binder, body, &CompType::F(Box::new(ValueType::Unit)));
                    let t = synth_comp(sig, &ctx.extended(x2.clone(), a0.as_ref().clone()), &body2)?;
                    if free_idents_ctype(&t).contains(&x2) {
                        return err("motive", "branch type depends on the pattern; annotate a motive");
                    }
                    return Ok(t);
                }
            };
            let mctx = ctx
                .without_stoup()
                .extended(mot.left.clone(), a0.as_ref().clone())
                .extended(mot.right.clone(), a0.as_ref().clone())
                .extended(
                    mot.witness.clone(),
                    ValueType::Id(
                        a0.clone(),
                        Box::new(Value::Var(mot.left.clone())),
                        Box::new(Value::Var(mot.right.clone())),
                    ),
                );
            wf_ctype(sig, &mctx, &mot.body)?;
            let refl_x = Value::Refl(Box::new(Value::Var(binder.clone())));
            let expected = subst_ctype(
                &subst_ctype(
                    &subst_ctype(&mot.body, &mot.left, &Value::Var(binder.clone())),
                    &mot.right,
                    &Value::Var(binder.clone()),
                ),
                &mot.witness,
                &refl_x,
            );
            let (x2, (body2, expected2)) = fresh2_ct(ctx, binder, body, &expected);
            check_comp(sig, &ctx.extended(x2, a0.as_ref().clone()), &body2, &expected2)?;
            Ok(subst_ctype(
                &subst_ctype(&subst_ctype(&mot.body, &mot.left, &v1), &mot.right, &v2),
                &mot.witness,
                scrut,
            ))
        }
        _ => unreachable!(),
    }
}

fn fresh2_ct(
    ctx: &Context,
    x: &Ident,
    body: &Comp,
    expected: &CompType,
) -> (Ident, (Comp, CompType)) {
    if !gamma_names(ctx).contains(x) {
        return (x.clone(), (body.clone(), expected.clone()));
    }
    let mut avoid = gamma_names(ctx);
    avoid.extend(free_idents_comp(body));
    avoid.extend(free_idents_ctype(expected));
    let f = freshen(x, &avoid);
    (
        f.clone(),
        (subst_comp(body, x, &Value::Var(f.clone())), subst_ctype(expected, x, &Value::Var(f))),
    )
}

pub fn check_comp(sig: &EffectSignature, ctx: &Context, m: &Comp, b: &CompType) -> TcResult<()> {
    match (m, b) {
        (Comp::Annot { comp, ty }, _) => {
            wf_ctype(sig, ctx, ty)?;
            check_comp(sig, ctx, comp, ty)?;
            if ctypes_equal(sig, ty, b) {
                Ok(())
            } else {
                err_conv("conv", crate::pretty::ctype(b), crate::pretty::ctype(ty))
            }
        }
        (Comp::Return(v), CompType::F(a)) => {
            require_no_stoup(ctx, "return")?;
            check_value(sig, ctx, v, a)
        }
        (Comp::Return(_), other) => err_conv("return", other, "F _"),
        (Comp::Force(v), _) => {
            require_no_stoup(ctx, "force")?;
            check_value(sig, ctx, v, &ValueType::U(Box::new(b.clone())))
        }
        (Comp::To { comp, x, body, motive }, _) => match motive {
            None => {
                let t = synth_comp(sig, ctx, comp)?;
                let a = match t {
                    CompType::F(a) => a,
                    other => return err_conv("to", "F _", other),
                };
                let mut avoid = gamma_names(ctx);
                avoid.extend(free_idents_comp(body));
                avoid.extend(free_idents_ctype(b));
                let x2 = if gamma_names(ctx).contains(x) { freshen(x, &avoid) } else { x.clone() };
                let body2 = if x2 == *x {
                    body.as_ref().clone()
                } else {
                    subst_comp(body, x, &Value::Var(x2.clone()))
                };
                check_comp(sig, &ctx.without_stoup().extended(x2, *a), &body2, b)
            }
            Some(_) => {
                let got = synth_to(sig, ctx, comp, x, body, motive)?;
                if ctypes_equal(sig, &got, b) {
                    Ok(())
                } else {
                    err_conv("conv", crate::pretty::ctype(b), crate::pretty::ctype(&got))
                }
            }
        },
        (Comp::LetV { x, ann, val, body }, _) => {
            if let Some(t) = ann {
                wf_vtype(sig, &ctx.without_stoup(), t)?;
                check_value(sig, &ctx.without_stoup(), val, t)?;
            }
            check_comp(sig, ctx, &subst_comp(body, x, val), b)
        }
        (Comp::LetNil { bound, body }, _) => {
            let t = synth_comp(sig, ctx, bound)?;
            check_comp(sig, &ctx.without_stoup().with_stoup(t), body, b)
        }
        (Comp::Lam { x, body }, CompType::FunPi(y, a, b2)) => {
            let mut avoid = gamma_names(ctx);
            avoid.extend(free_idents_comp(body));
            avoid.extend(free_idents_ctype(b2));
            let x2 = if gamma_names(ctx).contains(x) { freshen(x, &avoid) } else { x.clone() };
            let body2 =
                if x2 == *x { body.as_ref().clone() } else { subst_comp(body, x, &Value::Var(x2.clone())) };
            let b2i = subst_ctype(b2, y, &Value::Var(x2.clone()));
            check_comp(sig, &ctx.extended(x2, a.as_ref().clone()), &body2, &b2i)
        }
        (Comp::Lam { .. }, other) => err_conv("lam", other, "Pi (_ : _) -> _"),
        (Comp::LamI(ks), CompType::FinProd(bs)) => {
            if ks.len() != bs.len() {
                return err(
                    "arity",
                    format!("tuple has {} components, product has {}", ks.len(), bs.len()),
                );
            }
            for (k, bi) in ks.iter().zip(bs) {
                check_comp(sig, ctx, k, bi)?;
            }
            Ok(())
        }
        (Comp::LamI(ks), CompType::DepProd(entries)) => {
            if !sig.features.proj_products {
                return err(
                    "feature-disabled",
                    "dependent projection products require the proj-products flag",
                );
            }
            require_no_stoup(ctx, "lam (projection product)")?;
            if ks.len() != entries.len() {
                return err(
                    "arity",
                    format!("tuple has {} components, product has {}", ks.len(), entries.len()),
                );
            }
            for (i, (k, (_, bi))) in ks.iter().zip(entries).enumerate() {
                let mut expected = bi.clone();
                for (j, (z, _)) in entries.iter().enumerate().take(i) {
                    let v = Value::Thunk(Box::new(strip_annots(&ks[j])));
                    expected = subst_ctype(&expected, z, &v);
                }
                check_comp(sig, ctx, k, &expected)?;
            }
            Ok(())
        }
        (Comp::LamI(_), other) => err_conv("lam-i", other, "Prod {..}"),
        (Comp::RetTensor { val, comp }, CompType::SigmaF(x, a, b2)) => {
            check_value(sig, &ctx.without_stoup(), val, a)?;
            let b2i = subst_ctype(b2, x, val);
            check_comp(sig, ctx, comp, &b2i)
        }
        (Comp::RetTensor { .. }, other) => err_conv("rtensor", other, "SigmaF (_ : _) -> _"),
        (Comp::ToTensor { comp, x, body }, _) => {
            let t = synth_comp(sig, ctx, comp)?;
            let (bx, a, b2) = match t {
                CompType::SigmaF(bx, a, b2) => (bx, a, b2),
                other => return err_conv("to-tensor", "SigmaF (_ : _) -> _", other),
            };
            let mut avoid = gamma_names(ctx);
            avoid.extend(free_idents_comp(body));
            avoid.extend(free_idents_ctype(&b2));
            avoid.extend(free_idents_ctype(b));
            let x2 = if gamma_names(ctx).contains(x) { freshen(x, &avoid) } else { x.clone() };
            let body2 =
                if x2 == *x { body.as_ref().clone() } else { subst_comp(body, x, &Value::Var(x2.clone())) };
            let bi = subst_ctype(&b2, &bx, &Value::Var(x2.clone()));
            let inner = ctx.without_stoup().extended(x2, a.as_ref().clone()).with_stoup(bi);
            check_comp(sig, &inner, &body2, b)
        }
        (Comp::Mu { z, body }, _) => {
            require_no_stoup(ctx, "mu")?;
            let mut avoid = gamma_names(ctx);
            avoid.extend(free_idents_comp(body));
            let z2 = if gamma_names(ctx).contains(z) { freshen(z, &avoid) } else { z.clone() };
            let body2 =
                if z2 == *z { body.as_ref().clone() } else { subst_comp(body, z, &Value::Var(z2.clone())) };
            let inner = ctx.extended(z2, ValueType::U(Box::new(b.clone())));
            check_comp(sig, &inner, &body2, b)
        }
        (Comp::Print(_, k), _) => {
            require_no_stoup(ctx, "print")?;
            check_comp(sig, ctx, k, b)
        }
        (Comp::Write(s, k), _) => {
            require_no_stoup(ctx, "write")?;
            if !sig.has_state(s) {
                return err("write", format!("unknown state `{s}`"));
            }
            check_comp(sig, ctx, k, b)
        }
        (Comp::Read(branches), _) => {
            require_no_stoup(ctx, "read")?;
            check_read_coverage(sig, branches)?;
            for (_, k) in branches {
                check_comp(sig, ctx, k, b)?;
            }
            Ok(())
        }
        (Comp::Choose(ks), _) => {
            require_no_stoup(ctx, "choose")?;
            if ks.is_empty() {
                return err("choose", "choose requires at least one alternative");
            }
            for k in ks {
                check_comp(sig, ctx, k, b)?;
            }
            Ok(())
        }
        (Comp::Error(e), _) => {
            require_no_stoup(ctx, "error")?;
            if !sig.errors.contains(e) {
                return err("error", format!("undeclared error label `{e}`"));
            }
            Ok(())
        }
        (Comp::Diverge, _) => {
            require_no_stoup(ctx, "diverge")?;
            Ok(())
        }
        (
            Comp::PmSum { motive: None, .. }
            | Comp::PmUnit { motive: None, .. }
            | Comp::PmPair { motive: None, .. }
            | Comp::PmId { motive: None, .. },
            _,
        ) => check_pm_comp_nondep(sig, ctx, m, b),
        _ => {
            let got = synth_comp(sig, ctx, m)?;
            if ctypes_equal(sig, &got, b) {
                Ok(())
            } else {
                err_conv("conv", crate::pretty::ctype(b), crate::pretty::ctype(&got))
            }
        }
    }
}

fn check_pm_comp_nondep(
    sig: &EffectSignature,
    ctx: &Context,
    m: &Comp,
    b: &CompType,
) -> TcResult<()> {
    match m {
        Comp::PmSum { scrut, scrut_ty, branches, .. } => {
            let st = scrut_type(sig, &ctx.without_stoup(), scrut, scrut_ty)?;
            let comps = match normalize_vtype(&st) {
                ValueType::FinSum(items) => items,
                other => return err_conv("pm-sum", "Sum {..}", other),
            };
            if comps.len() != branches.len() {
                return err(
                    "arity",
                    format!("pattern match has {} branches, sum has {}", branches.len(), comps.len()),
                );
            }
            for ((x, k), ai) in branches.iter().zip(&comps) {
                let (x2, (k2, b2)) = fresh2_ct(ctx, x, k, b);
                check_comp(sig, &ctx.extended(x2, ai.clone()), &k2, &b2)?;
            }
            Ok(())
        }
        Comp::PmUnit { scrut, body, .. } => {
            check_value(sig, &ctx.without_stoup(), scrut, &ValueType::Unit)?;
            check_comp(sig, ctx, body, b)
        }
        Comp::PmPair { scrut, scrut_ty, x, y, body, .. } => {
            let st = scrut_type(sig, &ctx.without_stoup(), scrut, scrut_ty)?;
            let (bx, a1, a2) = match normalize_vtype(&st) {
                ValueType::Sigma(bx, a1, a2) => (bx, a1, a2),
                other => return err_conv("pm-pair", "Sigma (_ : _) -> _", other),
            };
            let mut avoid = gamma_names(ctx);
            avoid.extend(free_idents_comp(body));
            avoid.extend(free_idents_ctype(b));
            avoid.insert(y.clone());
            let x2 = if gamma_names(ctx).contains(x) { freshen(x, &avoid) } else { x.clone() };
            avoid.insert(x2.clone());
            let y2 = if gamma_names(ctx).contains(y) || y == &x2 { freshen(y, &avoid) } else { y.clone() };
            let body2 = subst_comp(&subst_comp(body, x, &Value::Var(x2.clone())), y, &Value::Var(y2.clone()));
            let a2i = subst_vtype(&a2, &bx, &Value::Var(x2.clone()));
            let inner = ctx.extended(x2, a1.as_ref().clone()).extended(y2, a2i);
            check_comp(sig, &inner, &body2, b)
        }
        Comp::PmId { scrut, scrut_ty, binder, body, .. } => {
            let st = scrut_type(sig, &ctx.without_stoup(), scrut, scrut_ty)?;
            let a0 = match normalize_vtype(&st) {
                ValueType::Id(a0, ..) => a0,
                other => return err_conv("pm-id", "Id _ _ _", other),
            };
            let (x2, (body2, b2)) = fresh2_ct(ctx, binder, body, b);
            check_comp(sig, &ctx.extended(x2, a0.as_ref().clone()), &body2, &b2)
        }
        _ => unreachable!(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parser::{parse_comp_str, parse_ctype_str, parse_open_comp, parse_value_str, parse_vtype_str};

    fn sig() -> EffectSignature {
        EffectSignature::default()
    }

    fn sig_plus() -> EffectSignature {
        EffectSignature::with_features(Features { plus: true, ..Default::default() })
    }

    #[test]
    fn wf_context_examples() {
        let s = sig();
        assert!(wf_context(&s, &Context::empty()).is_ok());

        let ok = Context::empty()
            .extended("x".into(), ValueType::Unit)
            .with_stoup(CompType::F(Box::new(ValueType::Unit)));
        assert!(wf_context(&s, &ok).is_ok());

        let dup = Context::empty()
            .extended("x".into(), ValueType::Unit)
            .extended("x".into(), ValueType::Unit);
        let e = wf_context(&s, &dup).unwrap_err();
        assert_eq!(e.rule, "ctx-dup");
    }

    #[test]
    fn wf_vtype_examples() {
        let s = sig();
        let ctx = Context::empty();
        assert!(wf_vtype(&s, &ctx, &parse_vtype_str("Id 1 () ()").unwrap()).is_ok());
        assert!(wf_vtype(&s, &ctx, &parse_vtype_str("Sigma (x : 1) -> U F 1").unwrap()).is_ok());
        let dep = parse_ctype_str("DProd {z -> F 1}").unwrap();
        let e = wf_ctype(&s, &ctx, &dep).unwrap_err();
        assert_eq!(e.rule, "feature-disabled");
        let s2 = EffectSignature::with_features(Features { proj_products: true, ..Default::default() });
        assert!(wf_ctype(&s2, &ctx, &dep).is_ok());
    }

    #[test]
    fn check_value_examples() {
        let s = sig();
        let ctx = Context::empty();
        // thunk (return ()) : U F 1
        let v = parse_value_str("thunk (return ())").unwrap();
        assert!(check_value(&s, &ctx, &v, &parse_vtype_str("U F 1").unwrap()).is_ok());
        // refl () : Id 1 () ()
        let v = parse_value_str("refl ()").unwrap();
        assert!(check_value(&s, &ctx, &v, &parse_vtype_str("Id 1 () ()").unwrap()).is_ok());
        // unbound identifier
        let v = Value::Thunk(Box::new(Comp::Force(Box::new(Value::var("x")))));
        let e = check_value(&s, &ctx, &v, &parse_vtype_str("U F 1").unwrap()).unwrap_err();
        assert_eq!(e.rule, "scope");
    }

    #[test]
    fn check_comp_stack_example() {
        // .; nil : F 1 |- nil to x in return <x, x> : F (Sigma (_ : 1) -> 1)
        let s = sig();
        let ctx = Context::empty().with_stoup(parse_ctype_str("F 1").unwrap());
        let m = parse_comp_str("nil to x in return <x, x>").unwrap();
        let t = parse_ctype_str("F Sigma (p : 1) -> 1").unwrap();
        assert!(check_comp(&s, &ctx, &m, &t).is_ok(), "{:?}", check_comp(&s, &ctx, &m, &t));
    }

    #[test]
    fn dependent_to_requires_plus() {
        let term = "return () to x [z. F Id (U F 1) z z] in return (refl (thunk (return x)))";
        let m = parse_comp_str(term).unwrap();
        let e = synth_comp(&sig(), &Context::empty(), &m).unwrap_err();
        assert_eq!(e.rule, "to-dep");

        // with plus on, the result type instantiates the motive at
        // thunk (return ()).
        let t = synth_comp(&sig_plus(), &Context::empty(), &m).unwrap();
        let expected =
            parse_ctype_str("F Id (U F 1) (thunk (return ())) (thunk (return ()))").unwrap();
        assert!(
            ctypes_equal(&sig_plus(), &t, &expected),
            "got {} expected {}",
            crate::pretty::ctype(&t),
            crate::pretty::ctype(&expected)
        );
    }

    #[test]
    fn normalize_value_examples() {
        // pm <1, ()> as <i, x> in {1 -> x, 2 -> ()} -> ()
        let v = parse_value_str("pm (<1, ()> : Sum {1, 1}) as <i, x> in {1 -> x, 2 -> ()}").unwrap();
        assert_eq!(normalize_value(&v), Value::UnitV);

        // pm refl () as refl x in <x, x> -> <(), ()>
        let v = parse_value_str("pm (refl ()) as refl x in <x, x>").unwrap();
        assert_eq!(
            normalize_value(&v),
            Value::Pair(Box::new(Value::UnitV), Box::new(Value::UnitV))
        );

        // no reduction under thunk
        let v = parse_value_str("thunk (force (thunk diverge))").unwrap();
        assert_eq!(normalize_value(&v), v);
    }

    #[test]
    fn types_equal_examples() {
        let s = sig();
        // Id 1 (pm () as () in ()) () = Id 1 () ()
        let a = ValueType::Id(
            Box::new(ValueType::Unit),
            Box::new(parse_value_str("pm () as () in ()").unwrap()),
            Box::new(Value::UnitV),
        );
        let b = parse_vtype_str("Id 1 () ()").unwrap();
        assert!(types_equal(&s, &a, &b));

        // print-prefixed thunks are not identified with plain ones
        let t1 = parse_vtype_str(
            "Id (U F 1) (thunk (print \"a\" (return ()))) (thunk (return ()))",
        )
        .unwrap();
        let t2 = parse_vtype_str("Id (U F 1) (thunk (return ())) (thunk (return ()))").unwrap();
        let t1s = parse_vtype_str(
            "Id (U F 1) (thunk (return ())) (thunk (print \"a\" (return ())))",
        )
        .unwrap();
        assert!(!types_equal(&s, &t1, &t2));
        assert!(!types_equal(&s, &t1s, &t2));
        assert!(!types_equal(&s, &t1, &t1s));
        // they stay distinct even with effect equations on
        let se = EffectSignature::with_features(Features { effect_eqs: true, ..Default::default() });
        assert!(!types_equal(&se, &t1, &t2));
    }

    #[test]
    fn eta_flags_gate_equalities() {
        let off = sig();
        let on = EffectSignature::with_features(Features {
            eta_thunk: true,
            eta_fun: true,
            ..Default::default()
        });
        let ctx = Context::empty().extended("v".into(), parse_vtype_str("U F 1").unwrap());
        let a = parse_open_comp("force (thunk (force v))", &["v"]).unwrap();
        let b = parse_open_comp("force v", &["v"]).unwrap();
        let va = Value::Thunk(Box::new(a));
        let vb = Value::Thunk(Box::new(b));
        assert!(!values_equal(&off, &va, &vb));
        assert!(values_equal(&on, &va, &vb));
        let _ = ctx;
    }

    #[test]
    fn effect_eqs_mu_unroll() {
        let s = EffectSignature::with_features(Features { effect_eqs: true, ..Default::default() });
        let a = parse_comp_str("mu z. return ()").unwrap();
        let b = parse_comp_str("return ()").unwrap();
        assert!(comps_equal(&s, &a, &b));
        assert!(!comps_equal(&sig(), &a, &b));
    }

    #[test]
    fn effect_eqs_algebraicity() {
        let s = EffectSignature::with_features(Features { effect_eqs: true, ..Default::default() });
        let a = parse_comp_str("(print \"a\" (return ())) to x in return x").unwrap();
        let b = parse_comp_str("print \"a\" (return () to x in return x)").unwrap();
        assert!(comps_equal(&s, &a, &b));
        assert!(!comps_equal(&sig(), &a, &b));
    }

    #[test]
    fn dependent_projection_products() {
        let s = EffectSignature::with_features(Features {
            proj_products: true,
            ..Default::default()
        });
        let ctx = Context::empty();
        let ty = parse_ctype_str("DProd {z1 -> F 1, z2 -> F Id (U F 1) z1 z1}").unwrap();
        wf_ctype(&s, &ctx, &ty).unwrap();
        // intro: the second component checks at the first's thunk
        let m = parse_comp_str(
            "lam {1 -> return (), 2 -> return (refl (thunk (return ())))}",
        )
        .unwrap();
        check_comp(&s, &ctx, &m, &ty).unwrap();
        // elim: the projection substitutes thunks of earlier projections
        let e = Comp::ProjI(
            2,
            Box::new(Comp::Annot { comp: Box::new(m.clone()), ty: Box::new(ty.clone()) }),
        );
        let got = synth_comp(&s, &ctx, &e).unwrap();
        match &got {
            CompType::F(a) => match a.as_ref() {
                ValueType::Id(_, l, r) => {
                    let proj = Value::Thunk(Box::new(Comp::ProjI(1, Box::new(m.clone()))));
                    assert!(values_equal(&s, l, &proj), "left endpoint: {l}");
                    assert!(values_equal(&s, r, &proj));
                }
                other => panic!("unexpected: {other:?}"),
            },
            other => panic!("unexpected: {other:?}"),
        }
        // a mismatched second component is rejected
        let bad = parse_comp_str(
            "lam {1 -> return (), 2 -> return (refl (thunk diverge))}",
        )
        .unwrap();
        assert!(check_comp(&s, &ctx, &bad, &ty).is_err());
    }

    #[test]
    fn normalization_preserves_typing() {
        let s = sig();
        let ctx = Context::empty();
        let v = parse_value_str("pm (<(), ()> : Sigma (x : 1) -> 1) as <x, y> in <y, x>").unwrap();
        let a = parse_vtype_str("Sigma (x : 1) -> 1").unwrap();
        check_value(&s, &ctx, &v, &a).unwrap();
        let n = normalize_value(&v);
        check_value(&s, &ctx, &n, &a).unwrap();
        assert_eq!(n, normalize_value(&n));
    }
}
