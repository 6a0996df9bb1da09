//! Goal-directed generation of well-typed programs, used by the metatheory
//! corpora. Generation is driven by the typing rules: to produce a term of
//! a given type, pick an introduction for its head, a sequencing step, an
//! eliminator against something in scope, or an effect wrapper. Everything
//! is deterministic from the seed.
//!
//! Computations placed in synthesis positions (the scrutinee of `to`, the
//! head of applications and projections) are wrapped in ascriptions so the
//! generated program and all of its machine reducts stay checkable.

use crate::ast::*;
use crate::kernel::{ctypes_equal, types_equal};
use crate::machine::SplitMix64;
use crate::surface::{SurfaceTerm, SurfaceType};

pub struct Gen {
    rng: SplitMix64,
    pub sig: EffectSignature,
    fresh: u64,
}

#[derive(Clone, Copy)]
pub struct GenOptions {
    pub max_depth: usize,
    pub effects: bool,
    pub mu_diverge: bool,
    pub choose: bool,
}

impl Default for GenOptions {
    fn default() -> Self {
        GenOptions { max_depth: 7, effects: true, mu_diverge: true, choose: true }
    }
}

impl Gen {
    pub fn new(seed: u64) -> Gen {
        let mut sig = EffectSignature {
            states: vec!["s0".into(), "s1".into()],
            initial_state: "s0".into(),
            ..Default::default()
        };
        sig.errors.insert("oops".into());
        sig.monoid_alphabet.extend(["a".to_string(), "b".to_string(), "c".to_string()]);
        Gen { rng: SplitMix64::new(seed), sig, fresh: 0 }
    }

    fn pick(&mut self, n: usize) -> usize {
        (self.rng.next_u64() % n as u64) as usize
    }

    fn coin(&mut self, p_num: u64, p_den: u64) -> bool {
        self.rng.next_u64() % p_den < p_num
    }

    fn name(&mut self, base: &str) -> Ident {
        self.fresh += 1;
        format!("{base}{}", self.fresh)
    }

    // -- types ---------------------------------------------------------------

    pub fn vtype(&mut self, d: usize) -> ValueType {
        if d == 0 {
            return if self.coin(1, 2) {
                ValueType::Unit
            } else {
                ValueType::FinSum(vec![ValueType::Unit, ValueType::Unit])
            };
        }
        match self.pick(10) {
            0 | 1 => ValueType::Unit,
            2 | 3 => {
                let n = 1 + self.pick(3);
                ValueType::FinSum((0..n).map(|_| self.vtype(d - 1)).collect())
            }
            4 | 5 => ValueType::U(Box::new(self.ctype(d - 1))),
            6 => {
                let a = self.vtype(d - 1);
                let b = self.vtype(d - 1);
                ValueType::Sigma(self.name("s"), Box::new(a), Box::new(b))
            }
            7 => {
                let a = self.vtype(d - 1);
                let v = self.canonical_value(&a);
                ValueType::Id(Box::new(a), Box::new(v.clone()), Box::new(v))
            }
            8 => {
                let a = self.vtype(d - 1);
                let b = self.vtype(d - 1);
                ValueType::Pi(self.name("p"), Box::new(a), Box::new(b))
            }
            _ => ValueType::Hom(Box::new(self.ctype(d - 1)), Box::new(self.ctype(d - 1))),
        }
    }

    pub fn ctype(&mut self, d: usize) -> CompType {
        if d == 0 {
            return CompType::F(Box::new(ValueType::Unit));
        }
        match self.pick(9) {
            0..=3 => CompType::F(Box::new(self.vtype(d - 1))),
            4 | 5 => {
                let n = 1 + self.pick(3);
                CompType::FinProd((0..n).map(|_| self.ctype(d - 1)).collect())
            }
            6 | 7 => {
                let a = self.vtype(d - 1);
                let b = self.ctype(d - 1);
                CompType::FunPi(self.name("x"), Box::new(a), Box::new(b))
            }
            _ => {
                let a = self.vtype(d - 1);
                let b = self.ctype(d - 1);
                CompType::SigmaF(self.name("x"), Box::new(a), Box::new(b))
            }
        }
    }

    // -- canonical inhabitants -------------------------------------------------

    pub fn canonical_value(&mut self, a: &ValueType) -> Value {
        match a {
            ValueType::Unit => Value::UnitV,
            ValueType::FinSum(items) => {
                if items.is_empty() {
                    // uninhabited; the generator never produces these
                    Value::UnitV
                } else {
                    let i = self.pick(items.len());
                    Value::Inj(i + 1, Box::new(self.canonical_value(&items[i])))
                }
            }
            ValueType::U(b) => Value::Thunk(Box::new(self.canonical_comp(b))),
            ValueType::Sigma(x, a1, a2) => {
                let v = self.canonical_value(a1);
                let a2i = subst_vtype(a2, x, &v);
                Value::Pair(Box::new(v), Box::new(self.canonical_value(&a2i)))
            }
            ValueType::Id(_, v, _) => Value::Refl(Box::new(v.as_ref().clone())),
            ValueType::Pi(x, _, a2) => {
                Value::LamV { x: x.clone(), body: Box::new(self.canonical_value(a2)) }
            }
            ValueType::Hom(b, c) => Value::LamNil(Box::new(self.canonical_stack(b, c))),
        }
    }

    pub fn canonical_comp(&mut self, b: &CompType) -> Comp {
        match b {
            CompType::F(a) => Comp::Return(Box::new(self.canonical_value(a))),
            CompType::FinProd(items) => {
                Comp::LamI(items.iter().map(|b| self.canonical_comp(b)).collect())
            }
            CompType::FunPi(x, _, b2) => {
                Comp::Lam { x: x.clone(), body: Box::new(self.canonical_comp(b2)) }
            }
            CompType::SigmaF(x, a, b2) => {
                let v = self.canonical_value(a);
                let b2i = subst_ctype(b2, x, &v);
                // annotated so the component can still be re-derived after
                // a tensor pop plugs it into a stack
                let k = self.canonical_comp(&b2i);
                Comp::RetTensor {
                    val: Box::new(v),
                    comp: Box::new(Comp::Annot { comp: Box::new(k), ty: Box::new(b2i) }),
                }
            }
            CompType::DepProd(entries) => {
                // built left to right, substituting earlier components
                let mut comps: Vec<Comp> = Vec::new();
                for (i, (_, b)) in entries.iter().enumerate() {
                    let mut t = b.clone();
                    for (j, (z, _)) in entries.iter().enumerate().take(i) {
                        t = subst_ctype(&t, z, &Value::Thunk(Box::new(comps[j].clone())));
                    }
                    comps.push(self.canonical_comp(&t));
                }
                Comp::LamI(comps)
            }
        }
    }

    /// A stack `nil : b_in |- K : c_out`, consuming the stoup linearly.
    pub fn canonical_stack(&mut self, b_in: &CompType, c_out: &CompType) -> Comp {
        if ctypes_equal(&self.sig, b_in, c_out) {
            return Comp::Nil;
        }
        // peel the output side first
        match c_out {
            CompType::FinProd(items) => {
                let items = items.clone();
                return Comp::LamI(
                    items.iter().map(|c| self.canonical_stack(b_in, c)).collect(),
                );
            }
            CompType::FunPi(x, _, c2) => {
                return Comp::Lam { x: x.clone(), body: Box::new(self.canonical_stack(b_in, c2)) };
            }
            CompType::SigmaF(x, a, c2) => {
                let v = self.canonical_value(a);
                let c2i = subst_ctype(c2, x, &v);
                return Comp::RetTensor {
                    val: Box::new(v),
                    comp: Box::new(self.canonical_stack(b_in, &c2i)),
                };
            }
            _ => {}
        }
        // then the input side
        match b_in {
            CompType::F(_) => {
                let x = self.name("x");
                Comp::To {
                    comp: Box::new(Comp::Nil),
                    x,
                    body: Box::new(self.canonical_comp(c_out)),
                    motive: None,
                }
            }
            CompType::FinProd(items) => {
                if items.is_empty() {
                    // no way through a nullary product; land in a fresh To
                    // via a wrapper that ignores the stoup is impossible, so
                    // the generator avoids Prod {} on the input side.
                    Comp::Nil
                } else {
                    let i = self.pick(items.len());
                    let inner = self.canonical_stack(&items[i], c_out);
                    subst_stoup(&inner, &Comp::ProjI(i + 1, Box::new(Comp::Nil)))
                }
            }
            CompType::FunPi(x, a, b2) => {
                let v = self.canonical_value(a);
                let b2i = subst_ctype(b2, x, &v);
                let inner = self.canonical_stack(&b2i, c_out);
                subst_stoup(&inner, &Comp::App { arg: Box::new(v), fun: Box::new(Comp::Nil) })
            }
            CompType::SigmaF(x, a, b2) => {
                let x2 = self.name("x");
                let _ = a;
                let b2i = subst_ctype(b2, x, &Value::Var(x2.clone()));
                let body = self.canonical_stack(&b2i, c_out);
                Comp::ToTensor { comp: Box::new(Comp::Nil), x: x2, body: Box::new(body) }
            }
            CompType::DepProd(entries) => {
                if entries.is_empty() {
                    return Comp::Nil;
                }
                let inner = self.canonical_stack(&entries[0].1, c_out);
                subst_stoup(&inner, &Comp::ProjI(1, Box::new(Comp::Nil)))
            }
        }
    }

    // -- terms ---------------------------------------------------------------

    fn vars_of_vtype(&self, ctx: &Context, want: &ValueType) -> Vec<Ident> {
        ctx.gamma
            .iter()
            .filter(|(_, a)| types_equal(&self.sig, a, want))
            .map(|(x, _)| x.clone())
            .collect()
    }

    pub fn value(&mut self, ctx: &Context, a: &ValueType, d: usize, opt: GenOptions) -> Value {
        let vars = self.vars_of_vtype(ctx, a);
        if !vars.is_empty() && self.coin(2, 5) {
            let i = self.pick(vars.len());
            return Value::Var(vars[i].clone());
        }
        if d == 0 {
            return self.canonical_value_in(ctx, a);
        }
        match a {
            ValueType::Unit => Value::UnitV,
            ValueType::FinSum(items) if !items.is_empty() => {
                let i = self.pick(items.len());
                Value::Inj(i + 1, Box::new(self.value(ctx, &items[i], d - 1, opt)))
            }
            ValueType::U(b) => {
                Value::Thunk(Box::new(self.comp(&ctx.without_stoup(), b, d - 1, opt)))
            }
            ValueType::Sigma(x, a1, a2) => {
                let v = self.value(ctx, a1, d - 1, opt);
                let a2i = subst_vtype(a2, x, &v);
                Value::Pair(Box::new(v), Box::new(self.value(ctx, &a2i, d - 1, opt)))
            }
            ValueType::Pi(x, a1, a2) => {
                let x2 = self.name("v");
                let a2i = subst_vtype(a2, x, &Value::Var(x2.clone()));
                let inner = ctx.extended(x2.clone(), a1.as_ref().clone());
                Value::LamV { x: x2, body: Box::new(self.value(&inner, &a2i, d - 1, opt)) }
            }
            ValueType::Hom(b, c) => Value::LamNil(Box::new(self.stack(ctx, b, c, d - 1, opt))),
            _ => self.canonical_value_in(ctx, a),
        }
    }

    fn canonical_value_in(&mut self, ctx: &Context, a: &ValueType) -> Value {
        let vars = self.vars_of_vtype(ctx, a);
        if !vars.is_empty() {
            let i = self.pick(vars.len());
            return Value::Var(vars[i].clone());
        }
        self.canonical_value(a)
    }

    /// A closed-stoup computation of type `b` under `ctx`.
    pub fn comp(&mut self, ctx: &Context, b: &CompType, d: usize, opt: GenOptions) -> Comp {
        debug_assert!(ctx.stoup.is_none());
        if d == 0 {
            return self.intro_comp(ctx, b, 0, opt);
        }
        let effect_budget = if opt.effects { 4 } else { 0 };
        let roll = self.pick(10 + effect_budget);
        match roll {
            // sequencing
            0 | 1 => {
                let a = self.vtype(d.min(2).saturating_sub(1));
                let fa = CompType::F(Box::new(a.clone()));
                let k = self.comp(ctx, &fa, d - 1, opt);
                let x = self.name("x");
                let body = self.comp(&ctx.extended(x.clone(), a), b, d - 1, opt);
                Comp::To {
                    comp: Box::new(Comp::Annot { comp: Box::new(k), ty: Box::new(fa) }),
                    x,
                    body: Box::new(body),
                    motive: None,
                }
            }
            // let binding
            2 => {
                let a = self.vtype(d.min(2).saturating_sub(1));
                let v = self.value(ctx, &a, d - 1, opt);
                let x = self.name("x");
                let body = self.comp(&ctx.extended(x.clone(), a.clone()), b, d - 1, opt);
                Comp::LetV { x, ann: Some(Box::new(a)), val: Box::new(v), body: Box::new(body) }
            }
            // eliminate a pair from scope, else fall through to an intro
            3 if self.coin(1, 3) => {
                let pairs: Vec<(Ident, (Ident, ValueType, ValueType))> = ctx
                    .gamma
                    .iter()
                    .filter_map(|(x, a)| match a {
                        ValueType::Sigma(bx, a1, a2) => {
                            Some((x.clone(), (bx.clone(), a1.as_ref().clone(), a2.as_ref().clone())))
                        }
                        _ => None,
                    })
                    .collect();
                if pairs.is_empty() {
                    let v = self.value(ctx, &ValueType::U(Box::new(b.clone())), d - 1, opt);
                    return Comp::Force(Box::new(v));
                }
                let (x, (bx, a1, a2)) = pairs[self.pick(pairs.len())].clone();
                let ty = ValueType::Sigma(bx.clone(), Box::new(a1.clone()), Box::new(a2.clone()));
                let p = self.name("p");
                let q = self.name("q");
                let a2i = subst_vtype(&a2, &bx, &Value::Var(p.clone()));
                let inner = ctx.extended(p.clone(), a1).extended(q.clone(), a2i);
                Comp::PmPair {
                    scrut: Box::new(Value::Var(x)),
                    scrut_ty: Some(Box::new(ty)),
                    x: p,
                    y: q,
                    body: Box::new(self.comp(&inner, b, d - 1, opt)),
                    motive: None,
                }
            }
            // force of a thunk
            3 => {
                let v = self.value(ctx, &ValueType::U(Box::new(b.clone())), d - 1, opt);
                Comp::Force(Box::new(v))
            }
            // eliminate a sum from scope, else fall through to an intro
            4 => {
                let sums: Vec<(Ident, Vec<ValueType>)> = ctx
                    .gamma
                    .iter()
                    .filter_map(|(x, a)| match a {
                        ValueType::FinSum(items) if !items.is_empty() && items.len() <= 3 => {
                            Some((x.clone(), items.clone()))
                        }
                        _ => None,
                    })
                    .collect();
                if sums.is_empty() {
                    self.intro_comp(ctx, b, d, opt)
                } else {
                    let (x, items) = sums[self.pick(sums.len())].clone();
                    let ty = ValueType::FinSum(items.clone());
                    let branches = items
                        .iter()
                        .map(|ai| {
                            let y = self.name("y");
                            let inner = ctx.extended(y.clone(), ai.clone());
                            (y, self.comp(&inner, b, d - 1, opt))
                        })
                        .collect();
                    Comp::PmSum {
                        scrut: Box::new(Value::Var(x)),
                        scrut_ty: Some(Box::new(ty)),
                        branches,
                        motive: None,
                    }
                }
            }
            // application chain
            5 => {
                let a = self.vtype(d.min(2).saturating_sub(1));
                let fun_ty = CompType::FunPi(self.name("x"), Box::new(a.clone()), Box::new(b.clone()));
                let fun = self.comp(ctx, &fun_ty, d - 1, opt);
                let arg = self.value(ctx, &a, d - 1, opt);
                Comp::App {
                    arg: Box::new(arg),
                    fun: Box::new(Comp::Annot { comp: Box::new(fun), ty: Box::new(fun_ty) }),
                }
            }
            // projection
            6 => {
                let before = self.pick(2);
                let after = self.pick(2);
                let mut items = Vec::new();
                for _ in 0..before {
                    items.push(self.ctype(d.min(2).saturating_sub(1)));
                }
                items.push(b.clone());
                for _ in 0..after {
                    items.push(self.ctype(d.min(2).saturating_sub(1)));
                }
                let prod = CompType::FinProd(items);
                let tuple = self.comp(ctx, &prod, d - 1, opt);
                Comp::ProjI(
                    before + 1,
                    Box::new(Comp::Annot { comp: Box::new(tuple), ty: Box::new(prod) }),
                )
            }
            // homomorphism application
            7 => {
                let bin = self.ctype(d.min(2).saturating_sub(1));
                let hom_ty = ValueType::Hom(Box::new(bin.clone()), Box::new(b.clone()));
                let fun = self.value(ctx, &hom_ty, d - 1, opt);
                let k = self.comp(ctx, &bin, d - 1, opt);
                Comp::AppHom {
                    comp: Box::new(Comp::Annot { comp: Box::new(k), ty: Box::new(bin) }),
                    fun: Box::new(fun),
                    fun_ty: Some(Box::new(hom_ty)),
                }
            }
            // plug a generated stack
            8 => {
                let bin = self.ctype(d.min(2).saturating_sub(1));
                let bound = self.comp(ctx, &bin, d - 1, opt);
                let body = self.stack(ctx, &bin, b, d - 1, opt);
                Comp::LetNil {
                    bound: Box::new(Comp::Annot { comp: Box::new(bound), ty: Box::new(bin) }),
                    body: Box::new(body),
                }
            }
            9 => self.intro_comp(ctx, b, d, opt),
            // effects
            10 => {
                let token = ["a", "b", "c"][self.pick(3)].to_string();
                Comp::Print(vec![token], Box::new(self.comp(ctx, b, d - 1, opt)))
            }
            11 => {
                if self.coin(1, 2) {
                    let i = self.pick(self.sig.states.len());
                    let s = self.sig.states[i].clone();
                    Comp::Write(s, Box::new(self.comp(ctx, b, d - 1, opt)))
                } else {
                    let branches = self
                        .sig
                        .states
                        .clone()
                        .into_iter()
                        .map(|s| (s, self.comp(ctx, b, d - 1, opt)))
                        .collect();
                    Comp::Read(branches)
                }
            }
            12 => {
                if opt.choose {
                    let n = 2 + self.pick(2);
                    Comp::Choose((0..n).map(|_| self.comp(ctx, b, d - 1, opt)).collect())
                } else {
                    self.intro_comp(ctx, b, d, opt)
                }
            }
            _ => {
                if opt.mu_diverge {
                    match self.pick(3) {
                        0 => Comp::Diverge,
                        1 => Comp::Error("oops".into()),
                        _ => {
                            let z = self.name("z");
                            let inner = ctx.extended(z.clone(), ValueType::U(Box::new(b.clone())));
                            Comp::Mu { z, body: Box::new(self.comp(&inner, b, d - 1, opt)) }
                        }
                    }
                } else if self.coin(1, 3) {
                    Comp::Error("oops".into())
                } else {
                    self.intro_comp(ctx, b, d, opt)
                }
            }
        }
    }

    fn intro_comp(&mut self, ctx: &Context, b: &CompType, d: usize, opt: GenOptions) -> Comp {
        match b {
            CompType::F(a) => Comp::Return(Box::new(if d == 0 {
                self.canonical_value_in(ctx, a)
            } else {
                self.value(ctx, a, d - 1, opt)
            })),
            CompType::FinProd(items) => Comp::LamI(
                items
                    .iter()
                    .map(|bi| {
                        if d == 0 {
                            self.canonical_comp(bi)
                        } else {
                            self.comp(ctx, bi, d - 1, opt)
                        }
                    })
                    .collect(),
            ),
            CompType::FunPi(x, a, b2) => {
                let x2 = self.name("x");
                let b2i = subst_ctype(b2, x, &Value::Var(x2.clone()));
                let inner = ctx.extended(x2.clone(), a.as_ref().clone());
                let body = if d == 0 {
                    self.canonical_comp(&b2i)
                } else {
                    self.comp(&inner, &b2i, d - 1, opt)
                };
                Comp::Lam { x: x2, body: Box::new(body) }
            }
            CompType::SigmaF(x, a, b2) => {
                let v = if d == 0 {
                    self.canonical_value_in(ctx, a)
                } else {
                    self.value(ctx, a, d - 1, opt)
                };
                let b2i = subst_ctype(b2, x, &v);
                let k = if d == 0 {
                    self.canonical_comp(&b2i)
                } else {
                    self.comp(ctx, &b2i, d - 1, opt)
                };
                Comp::RetTensor {
                    val: Box::new(v),
                    comp: Box::new(Comp::Annot { comp: Box::new(k), ty: Box::new(b2i) }),
                }
            }
            CompType::DepProd(_) => self.canonical_comp(b),
        }
    }

    /// A stack `ctx; nil : b_in |- K : c_out` with generated leaves.
    pub fn stack(&mut self, ctx: &Context, b_in: &CompType, c_out: &CompType, d: usize, opt: GenOptions) -> Comp {
        if d == 0 {
            return self.canonical_stack(b_in, c_out);
        }
        if ctypes_equal(&self.sig, b_in, c_out) && self.coin(1, 2) {
            return Comp::Nil;
        }
        match b_in {
            CompType::F(a) => {
                let x = self.name("x");
                let inner = ctx.extended(x.clone(), a.as_ref().clone());
                let body = self.comp(&inner, c_out, d - 1, opt);
                Comp::To { comp: Box::new(Comp::Nil), x, body: Box::new(body), motive: None }
            }
            CompType::FinProd(items) if !items.is_empty() => {
                let i = self.pick(items.len());
                let inner = self.stack(ctx, &items[i], c_out, d - 1, opt);
                subst_stoup(&inner, &Comp::ProjI(i + 1, Box::new(Comp::Nil)))
            }
            CompType::FunPi(x, a, b2) => {
                let v = self.value(ctx, a, d - 1, opt);
                let b2i = subst_ctype(b2, x, &v);
                let inner = self.stack(ctx, &b2i, c_out, d - 1, opt);
                subst_stoup(&inner, &Comp::App { arg: Box::new(v), fun: Box::new(Comp::Nil) })
            }
            CompType::SigmaF(x, a, b2) => {
                let x2 = self.name("x");
                let b2i = subst_ctype(b2, x, &Value::Var(x2.clone()));
                let inner = ctx.extended(x2.clone(), a.as_ref().clone());
                let body = self.stack(&inner, &b2i, c_out, d - 1, opt);
                Comp::ToTensor { comp: Box::new(Comp::Nil), x: x2, body: Box::new(body) }
            }
            _ => self.canonical_stack(b_in, c_out),
        }
    }

    /// A closed well-typed program along with its type.
    pub fn program(&mut self, opt: GenOptions) -> (Comp, CompType) {
        let b = self.ctype(2);
        let m = self.comp(&Context::empty(), &b, opt.max_depth, opt);
        (m, b)
    }

    // -- surface programs ------------------------------------------------------

    /// A closed, effect-free surface term of the given ground sum type,
    /// annotated throughout so both elaborations stay checkable.
    pub fn surface_ground(&mut self, arity: usize, d: usize) -> SurfaceTerm {
        let ty = SurfaceType::Sum(vec![SurfaceType::Unit; arity]);
        let t = self.surf(&mut Vec::new(), &ty, d);
        SurfaceTerm::Annot { term: Box::new(t), ty: Box::new(ty) }
    }

    fn surf_small_type(&mut self, d: usize) -> SurfaceType {
        match if d == 0 { 0 } else { self.pick(4) } {
            0 => SurfaceType::Unit,
            1 => SurfaceType::Sum(vec![SurfaceType::Unit; 1 + self.pick(3)]),
            2 => SurfaceType::Sigma(
                self.name("q"),
                Box::new(self.surf_small_type(0)),
                Box::new(self.surf_small_type(0)),
            ),
            _ => SurfaceType::Sum(vec![SurfaceType::Unit, SurfaceType::Unit]),
        }
    }

    fn surf(&mut self, scope: &mut Vec<(Ident, SurfaceType)>, ty: &SurfaceType, d: usize) -> SurfaceTerm {
        // variables of the right type
        let vars: Vec<Ident> = scope
            .iter()
            .filter(|(_, t)| t == ty)
            .map(|(x, _)| x.clone())
            .collect();
        if !vars.is_empty() && self.coin(1, 3) {
            let i = self.pick(vars.len());
            return SurfaceTerm::Var(vars[i].clone());
        }
        if d == 0 {
            return self.surf_canonical(ty);
        }
        let annot = |t: SurfaceTerm, ty: &SurfaceType| SurfaceTerm::Annot {
            term: Box::new(t),
            ty: Box::new(ty.clone()),
        };
        match self.pick(6) {
            0 => self.surf_intro(scope, ty, d),
            // let
            1 => {
                let a = self.surf_small_type(d - 1);
                let val = self.surf(scope, &a, d - 1);
                let x = self.name("u");
                scope.push((x.clone(), a.clone()));
                let body = self.surf(scope, ty, d - 1);
                scope.pop();
                SurfaceTerm::Let {
                    x,
                    val: Box::new(annot(val, &a)),
                    body: Box::new(body),
                }
            }
            // beta-redex
            2 => {
                let a = self.surf_small_type(d - 1);
                let arg = self.surf(scope, &a, d - 1);
                let x = self.name("u");
                scope.push((x.clone(), a.clone()));
                let body = self.surf(scope, ty, d - 1);
                scope.pop();
                let fun_ty = SurfaceType::Pi(x.clone(), Box::new(a.clone()), Box::new(ty.clone()));
                SurfaceTerm::App {
                    arg: Box::new(annot(arg, &a)),
                    fun: Box::new(annot(SurfaceTerm::Lam { x, body: Box::new(body) }, &fun_ty)),
                }
            }
            // sum elimination
            3 => {
                let n = 1 + self.pick(3);
                let scrut_ty = SurfaceType::Sum(vec![SurfaceType::Unit; n]);
                let scrut = self.surf(scope, &scrut_ty, d - 1);
                let x = self.name("u");
                let mut branches = Vec::new();
                for _ in 0..n {
                    scope.push((x.clone(), SurfaceType::Unit));
                    let b = self.surf(scope, ty, d - 1);
                    scope.pop();
                    branches.push((x.clone(), b));
                }
                SurfaceTerm::PmSum {
                    scrut: Box::new(annot(scrut, &scrut_ty)),
                    branches,
                    motive: None,
                }
            }
            // pair elimination
            4 => {
                let a = self.surf_small_type(0);
                let b = self.surf_small_type(0);
                let q = self.name("q");
                let scrut_ty = SurfaceType::Sigma(q, Box::new(a.clone()), Box::new(b.clone()));
                let scrut = self.surf(scope, &scrut_ty, d - 1);
                let x = self.name("u");
                let y = self.name("w");
                scope.push((x.clone(), a));
                scope.push((y.clone(), b));
                let body = self.surf(scope, ty, d - 1);
                scope.pop();
                scope.pop();
                SurfaceTerm::PmPair {
                    scrut: Box::new(annot(scrut, &scrut_ty)),
                    x,
                    y,
                    body: Box::new(body),
                    motive: None,
                }
            }
            // finite product projection
            _ => {
                let before = self.pick(2);
                let mut items = vec![self.surf_small_type(0); before];
                items.push(ty.clone());
                items.push(SurfaceType::Unit);
                let prod_ty = SurfaceType::ProdI(items.clone());
                let mut comps = Vec::new();
                for it in &items {
                    comps.push(self.surf(scope, it, d - 1));
                }
                SurfaceTerm::ProjI(
                    before + 1,
                    Box::new(annot(SurfaceTerm::LamI(comps), &prod_ty)),
                )
            }
        }
    }

    fn surf_intro(&mut self, scope: &mut Vec<(Ident, SurfaceType)>, ty: &SurfaceType, d: usize) -> SurfaceTerm {
        match ty {
            SurfaceType::Unit => SurfaceTerm::Unit,
            SurfaceType::Sum(items) if !items.is_empty() => {
                let i = self.pick(items.len());
                let inner = self.surf(scope, &items[i], d.saturating_sub(1));
                SurfaceTerm::Inj(i + 1, Box::new(inner))
            }
            SurfaceType::Sigma(_, a, b) => {
                let l = self.surf(scope, a, d.saturating_sub(1));
                let r = self.surf(scope, b, d.saturating_sub(1));
                SurfaceTerm::Pair(Box::new(l), Box::new(r))
            }
            SurfaceType::Pi(_, a, b) => {
                let x2 = self.name("u");
                scope.push((x2.clone(), a.as_ref().clone()));
                let body = self.surf(scope, b, d.saturating_sub(1));
                scope.pop();
                SurfaceTerm::Lam { x: x2, body: Box::new(body) }
            }
            SurfaceType::ProdI(items) => {
                let mut comps = Vec::new();
                for it in items {
                    comps.push(self.surf(scope, it, d.saturating_sub(1)));
                }
                SurfaceTerm::LamI(comps)
            }
            _ => self.surf_canonical(ty),
        }
    }

    fn surf_canonical(&mut self, ty: &SurfaceType) -> SurfaceTerm {
        match ty {
            SurfaceType::Unit => SurfaceTerm::Unit,
            SurfaceType::Sum(items) if !items.is_empty() => {
                let i = self.pick(items.len());
                SurfaceTerm::Inj(i + 1, Box::new(self.surf_canonical(&items[i])))
            }
            SurfaceType::Sigma(_, a, b) => SurfaceTerm::Pair(
                Box::new(self.surf_canonical(a)),
                Box::new(self.surf_canonical(b)),
            ),
            SurfaceType::Pi(_, _, b) => SurfaceTerm::Lam {
                x: self.name("u"),
                body: Box::new(self.surf_canonical(b)),
            },
            SurfaceType::ProdI(items) => {
                SurfaceTerm::LamI(items.iter().map(|t| self.surf_canonical(t)).collect())
            }
            _ => SurfaceTerm::Unit,
        }
    }
}
