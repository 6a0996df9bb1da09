//! Abstract syntax for the calculus: value and computation types, values,
//! computations/stacks, contexts and effect signatures.
//!
//! Terms are immutable trees; every operation here is a pure function.
//! Identifiers are plain names; substitution freshens binders on demand, so
//! terms are always compared up to alpha-equivalence.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

pub type Ident = String;
/// A printable output token. The output monoid is finite token sequences
/// under concatenation with the empty sequence as unit.
pub type Token = String;
pub type StateName = String;
pub type ErrorLabel = String;

/// Feature toggles of the kernel. All default to off.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Features {
    /// Dependent Kleisli extensions: `m to x [z. B] in n` with `z` free in `B`.
    pub plus: bool,
    /// Dependent projection products `DProd {z1 -> B1, ...}`.
    pub proj_products: bool,
    /// Eta for U: `thunk (force v)` is identified with `v`.
    pub eta_thunk: bool,
    /// Eta for lambda forms (finite products, functions, homomorphisms).
    pub eta_fun: bool,
    /// Algebraicity of effect operators and mu-unrolling as definitional,
    /// fuel-bounded.
    pub effect_eqs: bool,
}

/// The effect signature a program runs under: output tokens, global states
/// with an initial one, error labels, and feature toggles.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EffectSignature {
    pub monoid_alphabet: BTreeSet<Token>,
    pub states: Vec<StateName>,
    pub initial_state: StateName,
    pub errors: BTreeSet<ErrorLabel>,
    pub features: Features,
}

impl Default for EffectSignature {
    fn default() -> Self {
        EffectSignature {
            monoid_alphabet: BTreeSet::new(),
            states: vec!["s0".to_string()],
            initial_state: "s0".to_string(),
            errors: BTreeSet::new(),
            features: Features::default(),
        }
    }
}

impl EffectSignature {
    pub fn with_features(features: Features) -> Self {
        EffectSignature { features, ..Default::default() }
    }

    pub fn has_state(&self, s: &str) -> bool {
        self.states.iter().any(|t| t == s)
    }
}

/// A one-binder motive annotation `[z. T]` on an eliminator: the result type
/// as a function of the scrutinee.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Motive<T> {
    pub binder: Ident,
    pub body: Box<T>,
}

/// The three-binder motive `[x x' p. T]` of an identity eliminator.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IdMotive<T> {
    pub left: Ident,
    pub right: Ident,
    pub witness: Ident,
    pub body: Box<T>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum ValueType {
    /// `U B`: thunks of computations of type `B`.
    U(Box<CompType>),
    /// `Sum {A1, ..., An}`: finite sum, n >= 0.
    FinSum(Vec<ValueType>),
    /// `1`
    Unit,
    /// `Sigma (x : A) -> A'`
    Sigma(Ident, Box<ValueType>, Box<ValueType>),
    /// `Id A V W`
    Id(Box<ValueType>, Box<Value>, Box<Value>),
    /// `Pi (x : A) -> A'`: value-level functions.
    Pi(Ident, Box<ValueType>, Box<ValueType>),
    /// `B -o C`: stacks/homomorphisms from `B` to `C`, as a value type.
    Hom(Box<CompType>, Box<CompType>),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum CompType {
    /// `F A`: computations returning a value of type `A`.
    F(Box<ValueType>),
    /// `Prod {B1, ..., Bn}`: finite product, n >= 0.
    FinProd(Vec<CompType>),
    /// `Pi (x : A) -> B`: functions from values into computations.
    FunPi(Ident, Box<ValueType>, Box<CompType>),
    /// `SigmaF (x : A) -> B`: the multiplicative sigma on computation types.
    SigmaF(Ident, Box<ValueType>, Box<CompType>),
    /// `DProd {z1 -> B1, ..., zn -> Bn}`: dependent projection products;
    /// `zi` stands for `thunk` of the i-th component in later components.
    DepProd(Vec<(Ident, CompType)>),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum Value {
    Var(Ident),
    /// `let x be V in W`; the optional ascription records the type of `x`.
    LetV {
        x: Ident,
        ann: Option<Box<ValueType>>,
        val: Box<Value>,
        body: Box<Value>,
    },
    Thunk(Box<Comp>),
    /// `<i, V>` with 1-based index.
    Inj(usize, Box<Value>),
    /// `()`
    UnitV,
    /// `<V, W>`
    Pair(Box<Value>, Box<Value>),
    /// `refl V`
    Refl(Box<Value>),
    PmSum {
        scrut: Box<Value>,
        /// Recorded scrutinee type; keeps eliminators checkable after
        /// substitution plugs a canonical value in for a variable.
        scrut_ty: Option<Box<ValueType>>,
        branches: Vec<(Ident, Value)>,
        motive: Option<Motive<ValueType>>,
    },
    PmUnit {
        scrut: Box<Value>,
        body: Box<Value>,
        motive: Option<Motive<ValueType>>,
    },
    PmPair {
        scrut: Box<Value>,
        scrut_ty: Option<Box<ValueType>>,
        x: Ident,
        y: Ident,
        body: Box<Value>,
        motive: Option<Motive<ValueType>>,
    },
    PmId {
        scrut: Box<Value>,
        scrut_ty: Option<Box<ValueType>>,
        binder: Ident,
        body: Box<Value>,
        motive: Option<IdMotive<ValueType>>,
    },
    /// `lam x. V`: value-level abstraction, of type `Pi (x : A) -> A'`.
    LamV { x: Ident, body: Box<Value> },
    /// `V ' W`: value-level application; `W` is the function.
    AppV { arg: Box<Value>, fun: Box<Value> },
    /// `lam nil. K`: homomorphism abstraction, of type `B -o C`.
    LamNil(Box<Comp>),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum Comp {
    /// The stoup reference.
    Nil,
    LetV {
        x: Ident,
        ann: Option<Box<ValueType>>,
        val: Box<Value>,
        body: Box<Comp>,
    },
    /// `let nil be K in L`: plugs `K` into the stack `L`.
    LetNil { bound: Box<Comp>, body: Box<Comp> },
    Return(Box<Value>),
    /// `K to x in N`, optionally `K to x [z. B] in N` (dependent form).
    To {
        comp: Box<Comp>,
        x: Ident,
        body: Box<Comp>,
        motive: Option<Motive<CompType>>,
    },
    Force(Box<Value>),
    PmSum {
        scrut: Box<Value>,
        scrut_ty: Option<Box<ValueType>>,
        branches: Vec<(Ident, Comp)>,
        motive: Option<Motive<CompType>>,
    },
    PmUnit {
        scrut: Box<Value>,
        body: Box<Comp>,
        motive: Option<Motive<CompType>>,
    },
    PmPair {
        scrut: Box<Value>,
        scrut_ty: Option<Box<ValueType>>,
        x: Ident,
        y: Ident,
        body: Box<Comp>,
        motive: Option<Motive<CompType>>,
    },
    PmId {
        scrut: Box<Value>,
        scrut_ty: Option<Box<ValueType>>,
        binder: Ident,
        body: Box<Comp>,
        motive: Option<IdMotive<CompType>>,
    },
    /// `lam {1 -> K1, ..., n -> Kn}`: finite-product introduction.
    LamI(Vec<Comp>),
    /// `proj i K`
    ProjI(usize, Box<Comp>),
    /// `lam x. K`
    Lam { x: Ident, body: Box<Comp> },
    /// `V ' K`: push the argument `V`, run `K`.
    App { arg: Box<Value>, fun: Box<Comp> },
    /// `rtensor V K`: introduction of `SigmaF`.
    RetTensor { val: Box<Value>, comp: Box<Comp> },
    /// `L to rtensor x in K`: elimination of `SigmaF`; binds `x` and the
    /// stoup of `K`.
    ToTensor { comp: Box<Comp>, x: Ident, body: Box<Comp> },
    /// `K ' V`: apply the homomorphism `V` to the computation `K`.
    AppHom {
        comp: Box<Comp>,
        fun: Box<Value>,
        /// Recorded type of `fun`, a `Hom`; see `PmSum::scrut_ty`.
        fun_ty: Option<Box<ValueType>>,
    },
    Diverge,
    Mu { z: Ident, body: Box<Comp> },
    Print(Vec<Token>, Box<Comp>),
    Choose(Vec<Comp>),
    Error(ErrorLabel),
    Write(StateName, Box<Comp>),
    /// `read {s0 -> M0, ...}`: one branch per state of the signature.
    Read(Vec<(StateName, Comp)>),
    /// `(M : B)`: checkable ascription, transparent to the machine.
    Annot { comp: Box<Comp>, ty: Box<CompType> },
}

impl Value {
    pub fn var(s: &str) -> Value {
        Value::Var(s.to_string())
    }
}

/// The dual context `Gamma; Delta`: value declarations plus an optional
/// stoup entry (the single linear computation hypothesis, named `nil`).
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Context {
    pub gamma: Vec<(Ident, ValueType)>,
    pub stoup: Option<CompType>,
}

impl Context {
    pub fn empty() -> Context {
        Context::default()
    }

    pub fn lookup(&self, x: &str) -> Option<&ValueType> {
        self.gamma.iter().rev().find(|(y, _)| y == x).map(|(_, a)| a)
    }

    pub fn extended(&self, x: Ident, a: ValueType) -> Context {
        let mut c = self.clone();
        c.gamma.push((x, a));
        c
    }

    pub fn with_stoup(&self, b: CompType) -> Context {
        let mut c = self.clone();
        c.stoup = Some(b);
        c
    }

    pub fn without_stoup(&self) -> Context {
        let mut c = self.clone();
        c.stoup = None;
        c
    }
}

// ---------------------------------------------------------------------------
// Free identifiers
// ---------------------------------------------------------------------------

fn fi_motive<T>(m: &Option<Motive<T>>, acc: &mut BTreeSet<Ident>, fi: impl Fn(&T, &mut BTreeSet<Ident>))
{
    if let Some(m) = m {
        let mut inner = BTreeSet::new();
        fi(&m.body, &mut inner);
        inner.remove(&m.binder);
        acc.extend(inner);
    }
}

fn fi_id_motive<T>(m: &Option<IdMotive<T>>, acc: &mut BTreeSet<Ident>, fi: impl Fn(&T, &mut BTreeSet<Ident>))
{
    if let Some(m) = m {
        let mut inner = BTreeSet::new();
        fi(&m.body, &mut inner);
        inner.remove(&m.left);
        inner.remove(&m.right);
        inner.remove(&m.witness);
        acc.extend(inner);
    }
}

fn fi_under(binders: &[&Ident], acc: &mut BTreeSet<Ident>, inner: BTreeSet<Ident>) {
    let mut inner = inner;
    for b in binders {
        inner.remove(*b);
    }
    acc.extend(inner);
}

pub fn fi_vtype(a: &ValueType, acc: &mut BTreeSet<Ident>) {
    match a {
        ValueType::U(b) => fi_ctype(b, acc),
        ValueType::FinSum(vs) => vs.iter().for_each(|v| fi_vtype(v, acc)),
        ValueType::Unit => {}
        ValueType::Sigma(x, a1, a2) | ValueType::Pi(x, a1, a2) => {
            fi_vtype(a1, acc);
            let mut inner = BTreeSet::new();
            fi_vtype(a2, &mut inner);
            fi_under(&[x], acc, inner);
        }
        ValueType::Id(a, v, w) => {
            fi_vtype(a, acc);
            fi_value(v, acc);
            fi_value(w, acc);
        }
        ValueType::Hom(b, c) => {
            fi_ctype(b, acc);
            fi_ctype(c, acc);
        }
    }
}

pub fn fi_ctype(b: &CompType, acc: &mut BTreeSet<Ident>) {
    match b {
        CompType::F(a) => fi_vtype(a, acc),
        CompType::FinProd(bs) => bs.iter().for_each(|b| fi_ctype(b, acc)),
        CompType::FunPi(x, a, b) | CompType::SigmaF(x, a, b) => {
            fi_vtype(a, acc);
            let mut inner = BTreeSet::new();
            fi_ctype(b, &mut inner);
            fi_under(&[x], acc, inner);
        }
        CompType::DepProd(entries) => {
            // z_i scopes over the later components.
            let mut bound: Vec<&Ident> = Vec::new();
            for (z, b) in entries {
                let mut inner = BTreeSet::new();
                fi_ctype(b, &mut inner);
                for b in &bound {
                    inner.remove(*b);
                }
                acc.extend(inner);
                bound.push(z);
            }
        }
    }
}

pub fn fi_value(v: &Value, acc: &mut BTreeSet<Ident>) {
    match v {
        Value::Var(x) => {
            acc.insert(x.clone());
        }
        Value::LetV { x, ann, val, body } => {
            if let Some(a) = ann {
                fi_vtype(a, acc);
            }
            fi_value(val, acc);
            let mut inner = BTreeSet::new();
            fi_value(body, &mut inner);
            fi_under(&[x], acc, inner);
        }
        Value::Thunk(m) => fi_comp(m, acc),
        Value::Inj(_, v) => fi_value(v, acc),
        Value::UnitV => {}
        Value::Pair(v, w) => {
            fi_value(v, acc);
            fi_value(w, acc);
        }
        Value::Refl(v) => fi_value(v, acc),
        Value::PmSum { scrut, scrut_ty, branches, motive } => {
            fi_value(scrut, acc);
            if let Some(t) = scrut_ty {
                fi_vtype(t, acc);
            }
            for (x, w) in branches {
                let mut inner = BTreeSet::new();
                fi_value(w, &mut inner);
                fi_under(&[x], acc, inner);
            }
            fi_motive(motive, acc, fi_vtype);
        }
        Value::PmUnit { scrut, body, motive } => {
            fi_value(scrut, acc);
            fi_value(body, acc);
            fi_motive(motive, acc, fi_vtype);
        }
        Value::PmPair { scrut, scrut_ty, x, y, body, motive } => {
            fi_value(scrut, acc);
            if let Some(t) = scrut_ty {
                fi_vtype(t, acc);
            }
            let mut inner = BTreeSet::new();
            fi_value(body, &mut inner);
            fi_under(&[x, y], acc, inner);
            fi_motive(motive, acc, fi_vtype);
        }
        Value::PmId { scrut, scrut_ty, binder, body, motive } => {
            fi_value(scrut, acc);
            if let Some(t) = scrut_ty {
                fi_vtype(t, acc);
            }
            let mut inner = BTreeSet::new();
            fi_value(body, &mut inner);
            fi_under(&[binder], acc, inner);
            fi_id_motive(motive, acc, fi_vtype);
        }
        Value::LamV { x, body } => {
            let mut inner = BTreeSet::new();
            fi_value(body, &mut inner);
            fi_under(&[x], acc, inner);
        }
        Value::AppV { arg, fun } => {
            fi_value(arg, acc);
            fi_value(fun, acc);
        }
        Value::LamNil(k) => fi_comp(k, acc),
    }
}

pub fn fi_comp(m: &Comp, acc: &mut BTreeSet<Ident>) {
    match m {
        Comp::Nil => {}
        Comp::LetV { x, ann, val, body } => {
            if let Some(a) = ann {
                fi_vtype(a, acc);
            }
            fi_value(val, acc);
            let mut inner = BTreeSet::new();
            fi_comp(body, &mut inner);
            fi_under(&[x], acc, inner);
        }
        Comp::LetNil { bound, body } => {
            fi_comp(bound, acc);
            fi_comp(body, acc);
        }
        Comp::Return(v) => fi_value(v, acc),
        Comp::To { comp, x, body, motive } => {
            fi_comp(comp, acc);
            let mut inner = BTreeSet::new();
            fi_comp(body, &mut inner);
            fi_under(&[x], acc, inner);
            fi_motive(motive, acc, fi_ctype);
        }
        Comp::Force(v) => fi_value(v, acc),
        Comp::PmSum { scrut, scrut_ty, branches, motive } => {
            fi_value(scrut, acc);
            if let Some(t) = scrut_ty {
                fi_vtype(t, acc);
            }
            for (x, k) in branches {
                let mut inner = BTreeSet::new();
                fi_comp(k, &mut inner);
                fi_under(&[x], acc, inner);
            }
            fi_motive(motive, acc, fi_ctype);
        }
        Comp::PmUnit { scrut, body, motive } => {
            fi_value(scrut, acc);
            fi_comp(body, acc);
            fi_motive(motive, acc, fi_ctype);
        }
        Comp::PmPair { scrut, scrut_ty, x, y, body, motive } => {
            fi_value(scrut, acc);
            if let Some(t) = scrut_ty {
                fi_vtype(t, acc);
            }
            let mut inner = BTreeSet::new();
            fi_comp(body, &mut inner);
            fi_under(&[x, y], acc, inner);
            fi_motive(motive, acc, fi_ctype);
        }
        Comp::PmId { scrut, scrut_ty, binder, body, motive } => {
            fi_value(scrut, acc);
            if let Some(t) = scrut_ty {
                fi_vtype(t, acc);
            }
            let mut inner = BTreeSet::new();
            fi_comp(body, &mut inner);
            fi_under(&[binder], acc, inner);
            fi_id_motive(motive, acc, fi_ctype);
        }
        Comp::LamI(ks) => ks.iter().for_each(|k| fi_comp(k, acc)),
        Comp::ProjI(_, k) => fi_comp(k, acc),
        Comp::Lam { x, body } => {
            let mut inner = BTreeSet::new();
            fi_comp(body, &mut inner);
            fi_under(&[x], acc, inner);
        }
        Comp::App { arg, fun } => {
            fi_value(arg, acc);
            fi_comp(fun, acc);
        }
        Comp::RetTensor { val, comp } => {
            fi_value(val, acc);
            fi_comp(comp, acc);
        }
        Comp::ToTensor { comp, x, body } => {
            fi_comp(comp, acc);
            let mut inner = BTreeSet::new();
            fi_comp(body, &mut inner);
            fi_under(&[x], acc, inner);
        }
        Comp::AppHom { comp, fun, fun_ty } => {
            fi_comp(comp, acc);
            fi_value(fun, acc);
            if let Some(t) = fun_ty {
                fi_vtype(t, acc);
            }
        }
        Comp::Diverge | Comp::Error(_) => {}
        Comp::Mu { z, body } => {
            let mut inner = BTreeSet::new();
            fi_comp(body, &mut inner);
            fi_under(&[z], acc, inner);
        }
        Comp::Print(_, m) | Comp::Write(_, m) => fi_comp(m, acc),
        Comp::Choose(ms) => ms.iter().for_each(|m| fi_comp(m, acc)),
        Comp::Read(branches) => branches.iter().for_each(|(_, m)| fi_comp(m, acc)),
        Comp::Annot { comp, ty } => {
            fi_comp(comp, acc);
            fi_ctype(ty, acc);
        }
    }
}

/// The free value identifiers of a value. The stoup is tracked separately;
/// see [`has_free_nil`].
pub fn free_idents_value(v: &Value) -> BTreeSet<Ident> {
    let mut acc = BTreeSet::new();
    fi_value(v, &mut acc);
    acc
}

pub fn free_idents_comp(m: &Comp) -> BTreeSet<Ident> {
    let mut acc = BTreeSet::new();
    fi_comp(m, &mut acc);
    acc
}

pub fn free_idents_vtype(a: &ValueType) -> BTreeSet<Ident> {
    let mut acc = BTreeSet::new();
    fi_vtype(a, &mut acc);
    acc
}

pub fn free_idents_ctype(b: &CompType) -> BTreeSet<Ident> {
    let mut acc = BTreeSet::new();
    fi_ctype(b, &mut acc);
    acc
}

/// Whether the computation refers to the ambient stoup.
pub fn has_free_nil(m: &Comp) -> bool {
    match m {
        Comp::Nil => true,
        Comp::LetV { val: _, body, .. } => has_free_nil(body),
        // `bound` uses the outer stoup; `body`'s stoup is rebound.
        Comp::LetNil { bound, .. } => has_free_nil(bound),
        Comp::Return(_) | Comp::Force(_) => false,
        Comp::To { comp, .. } => has_free_nil(comp),
        Comp::PmSum { branches, .. } => branches.iter().any(|(_, k)| has_free_nil(k)),
        Comp::PmUnit { body, .. } => has_free_nil(body),
        Comp::PmPair { body, .. } => has_free_nil(body),
        Comp::PmId { body, .. } => has_free_nil(body),
        Comp::LamI(ks) => ks.iter().any(has_free_nil),
        Comp::ProjI(_, k) => has_free_nil(k),
        Comp::Lam { body, .. } => has_free_nil(body),
        Comp::App { fun, .. } => has_free_nil(fun),
        Comp::RetTensor { comp, .. } => has_free_nil(comp),
        Comp::ToTensor { comp, .. } => has_free_nil(comp),
        Comp::AppHom { comp, .. } => has_free_nil(comp),
        Comp::Diverge
        | Comp::Mu { .. }
        | Comp::Print(..)
        | Comp::Choose(_)
        | Comp::Error(_)
        | Comp::Write(..)
        | Comp::Read(_) => false,
        Comp::Annot { comp, .. } => has_free_nil(comp),
    }
}

// ---------------------------------------------------------------------------
// Substitution
// ---------------------------------------------------------------------------

/// Picks a name based on `base` that avoids everything in `avoid`.
pub fn freshen(base: &str, avoid: &BTreeSet<Ident>) -> Ident {
    if !avoid.contains(base) {
        return base.to_string();
    }
    let stem: String = {
        let trimmed = base.trim_end_matches(|c: char| c.is_ascii_digit());
        if trimmed.is_empty() { "x" } else { trimmed }.to_string()
    };
    let mut n: u64 = 1;
    loop {
        let cand = format!("{stem}{n}");
        if !avoid.contains(&cand) {
            return cand;
        }
        n += 1;
    }
}

#[derive(Clone)]
struct SubstEnv<'a> {
    x: &'a str,
    v: &'a Value,
    fv_v: &'a BTreeSet<Ident>,
}

trait SubstTarget: Clone {
    fn apply(&self, env: &SubstEnv<'_>) -> Self;
    fn frees(&self) -> BTreeSet<Ident>;
    fn rename(&self, from: &str, to: &Ident) -> Self {
        let v = Value::Var(to.clone());
        let mut fv = BTreeSet::new();
        fv.insert(to.clone());
        self.apply(&SubstEnv { x: from, v: &v, fv_v: &fv })
    }
}

impl SubstTarget for Value {
    fn apply(&self, env: &SubstEnv<'_>) -> Self {
        subst_value_env(self, env)
    }
    fn frees(&self) -> BTreeSet<Ident> {
        free_idents_value(self)
    }
}

impl SubstTarget for Comp {
    fn apply(&self, env: &SubstEnv<'_>) -> Self {
        subst_comp_env(self, env)
    }
    fn frees(&self) -> BTreeSet<Ident> {
        free_idents_comp(self)
    }
}

impl SubstTarget for ValueType {
    fn apply(&self, env: &SubstEnv<'_>) -> Self {
        subst_vtype_env(self, env)
    }
    fn frees(&self) -> BTreeSet<Ident> {
        free_idents_vtype(self)
    }
}

impl SubstTarget for CompType {
    fn apply(&self, env: &SubstEnv<'_>) -> Self {
        subst_ctype_env(self, env)
    }
    fn frees(&self) -> BTreeSet<Ident> {
        free_idents_ctype(self)
    }
}

/// Substitutes under a group of binders that jointly scope over `bodies`,
/// renaming them apart from the substituted value when needed. All bodies
/// must share exactly the binders in `binders`.
fn under_binders<T: SubstTarget>(
    binders: &[&Ident],
    bodies: &[&T],
    env: &SubstEnv<'_>,
) -> (Vec<Ident>, Vec<T>) {
    if binders.iter().any(|b| b.as_str() == env.x) {
        // Shadowed: nothing to substitute below.
        return (
            binders.iter().map(|b| (*b).clone()).collect(),
            bodies.iter().map(|b| (*b).clone()).collect(),
        );
    }
    let needs_rename = binders.iter().any(|b| env.fv_v.contains(*b));
    if !needs_rename {
        return (
            binders.iter().map(|b| (*b).clone()).collect(),
            bodies.iter().map(|b| b.apply(env)).collect(),
        );
    }
    let mut avoid: BTreeSet<Ident> = env.fv_v.clone();
    avoid.insert(env.x.to_string());
    for b in bodies {
        avoid.extend(b.frees());
    }
    for b in binders {
        avoid.insert((*b).clone());
    }
    let mut new_binders = Vec::with_capacity(binders.len());
    let mut new_bodies: Vec<T> = bodies.iter().map(|b| (*b).clone()).collect();
    for b in binders {
        if env.fv_v.contains(*b) {
            let fresh = freshen(b, &avoid);
            avoid.insert(fresh.clone());
            for body in &mut new_bodies {
                *body = body.rename(b, &fresh);
            }
            new_binders.push(fresh);
        } else {
            new_binders.push((*b).clone());
        }
    }
    (new_binders, new_bodies.iter().map(|b| b.apply(env)).collect())
}

fn subst_motive<T: SubstTarget>(m: &Option<Motive<T>>, env: &SubstEnv<'_>) -> Option<Motive<T>> {
    m.as_ref().map(|m| {
        let (bs, mut ts) = under_binders(&[&m.binder], &[m.body.as_ref()], env);
        Motive { binder: bs.into_iter().next().unwrap(), body: Box::new(ts.remove(0)) }
    })
}

fn subst_id_motive<T: SubstTarget>(m: &Option<IdMotive<T>>, env: &SubstEnv<'_>) -> Option<IdMotive<T>> {
    m.as_ref().map(|m| {
        let (bs, mut ts) =
            under_binders(&[&m.left, &m.right, &m.witness], &[m.body.as_ref()], env);
        let mut it = bs.into_iter();
        IdMotive {
            left: it.next().unwrap(),
            right: it.next().unwrap(),
            witness: it.next().unwrap(),
            body: Box::new(ts.remove(0)),
        }
    })
}

fn subst_vtype_env(a: &ValueType, env: &SubstEnv<'_>) -> ValueType {
    match a {
        ValueType::U(b) => ValueType::U(Box::new(subst_ctype_env(b, env))),
        ValueType::FinSum(vs) => {
            ValueType::FinSum(vs.iter().map(|v| subst_vtype_env(v, env)).collect())
        }
        ValueType::Unit => ValueType::Unit,
        ValueType::Sigma(x, a1, a2) => {
            let a1 = subst_vtype_env(a1, env);
            let (bs, mut ts) = under_binders(&[x], &[a2.as_ref()], env);
            ValueType::Sigma(bs.into_iter().next().unwrap(), Box::new(a1), Box::new(ts.remove(0)))
        }
        ValueType::Pi(x, a1, a2) => {
            let a1 = subst_vtype_env(a1, env);
            let (bs, mut ts) = under_binders(&[x], &[a2.as_ref()], env);
            ValueType::Pi(bs.into_iter().next().unwrap(), Box::new(a1), Box::new(ts.remove(0)))
        }
        ValueType::Id(a, v, w) => ValueType::Id(
            Box::new(subst_vtype_env(a, env)),
            Box::new(subst_value_env(v, env)),
            Box::new(subst_value_env(w, env)),
        ),
        ValueType::Hom(b, c) => ValueType::Hom(
            Box::new(subst_ctype_env(b, env)),
            Box::new(subst_ctype_env(c, env)),
        ),
    }
}

fn subst_ctype_env(b: &CompType, env: &SubstEnv<'_>) -> CompType {
    match b {
        CompType::F(a) => CompType::F(Box::new(subst_vtype_env(a, env))),
        CompType::FinProd(bs) => {
            CompType::FinProd(bs.iter().map(|b| subst_ctype_env(b, env)).collect())
        }
        CompType::FunPi(x, a, b2) => {
            let a = subst_vtype_env(a, env);
            let (bs, mut ts) = under_binders(&[x], &[b2.as_ref()], env);
            CompType::FunPi(bs.into_iter().next().unwrap(), Box::new(a), Box::new(ts.remove(0)))
        }
        CompType::SigmaF(x, a, b2) => {
            let a = subst_vtype_env(a, env);
            let (bs, mut ts) = under_binders(&[x], &[b2.as_ref()], env);
            CompType::SigmaF(bs.into_iter().next().unwrap(), Box::new(a), Box::new(ts.remove(0)))
        }
        CompType::DepProd(entries) => {
            // Telescope: substitute component-wise, treating earlier binders
            // as scoping over the remainder of the telescope.
            let mut out: Vec<(Ident, CompType)> = Vec::with_capacity(entries.len());
            let mut rest: Vec<(Ident, CompType)> = entries.clone();
            while !rest.is_empty() {
                let (z, b) = rest.remove(0);
                let b = subst_ctype_env(&b, env);
                if z == env.x || rest.is_empty() {
                    let shadowed = z == env.x;
                    out.push((z, b));
                    if shadowed {
                        out.extend(rest);
                        break;
                    }
                    continue;
                }
                if env.fv_v.contains(&z) {
                    let mut avoid: BTreeSet<Ident> = env.fv_v.clone();
                    avoid.insert(env.x.to_string());
                    for (w, t) in &rest {
                        avoid.insert(w.clone());
                        avoid.extend(free_idents_ctype(t));
                    }
                    let fresh = freshen(&z, &avoid);
                    for (_, t) in rest.iter_mut() {
                        *t = t.rename(&z, &fresh);
                    }
                    out.push((fresh, b));
                } else {
                    out.push((z, b));
                }
            }
            CompType::DepProd(out)
        }
    }
}

fn subst_value_env(t: &Value, env: &SubstEnv<'_>) -> Value {
    match t {
        Value::Var(y) => {
            if y == env.x {
                env.v.clone()
            } else {
                t.clone()
            }
        }
        Value::LetV { x, ann, val, body } => {
            let val = subst_value_env(val, env);
            let ann = ann.as_ref().map(|a| Box::new(subst_vtype_env(a, env)));
            let (bs, mut ts) = under_binders(&[x], &[body.as_ref()], env);
            Value::LetV {
                x: bs.into_iter().next().unwrap(),
                ann,
                val: Box::new(val),
                body: Box::new(ts.remove(0)),
            }
        }
        Value::Thunk(m) => Value::Thunk(Box::new(subst_comp_env(m, env))),
        Value::Inj(i, v) => Value::Inj(*i, Box::new(subst_value_env(v, env))),
        Value::UnitV => Value::UnitV,
        Value::Pair(v, w) => Value::Pair(
            Box::new(subst_value_env(v, env)),
            Box::new(subst_value_env(w, env)),
        ),
        Value::Refl(v) => Value::Refl(Box::new(subst_value_env(v, env))),
        Value::PmSum { scrut, scrut_ty, branches, motive } => Value::PmSum {
            scrut: Box::new(subst_value_env(scrut, env)),
            scrut_ty: scrut_ty.as_ref().map(|t| Box::new(subst_vtype_env(t, env))),
            branches: branches
                .iter()
                .map(|(x, w)| {
                    let (bs, mut ts) = under_binders(&[x], &[w], env);
                    (bs.into_iter().next().unwrap(), ts.remove(0))
                })
                .collect(),
            motive: subst_motive(motive, env),
        },
        Value::PmUnit { scrut, body, motive } => Value::PmUnit {
            scrut: Box::new(subst_value_env(scrut, env)),
            body: Box::new(subst_value_env(body, env)),
            motive: subst_motive(motive, env),
        },
        Value::PmPair { scrut, scrut_ty, x, y, body, motive } => {
            let scrut = subst_value_env(scrut, env);
            let scrut_ty = scrut_ty.as_ref().map(|t| Box::new(subst_vtype_env(t, env)));
            let (bs, mut ts) = under_binders(&[x, y], &[body.as_ref()], env);
            let mut it = bs.into_iter();
            Value::PmPair {
                scrut: Box::new(scrut),
                scrut_ty,
                x: it.next().unwrap(),
                y: it.next().unwrap(),
                body: Box::new(ts.remove(0)),
                motive: subst_motive(motive, env),
            }
        }
        Value::PmId { scrut, scrut_ty, binder, body, motive } => {
            let scrut = subst_value_env(scrut, env);
            let scrut_ty = scrut_ty.as_ref().map(|t| Box::new(subst_vtype_env(t, env)));
            let (bs, mut ts) = under_binders(&[binder], &[body.as_ref()], env);
            Value::PmId {
                scrut: Box::new(scrut),
                scrut_ty,
                binder: bs.into_iter().next().unwrap(),
                body: Box::new(ts.remove(0)),
                motive: subst_id_motive(motive, env),
            }
        }
        Value::LamV { x, body } => {
            let (bs, mut ts) = under_binders(&[x], &[body.as_ref()], env);
            Value::LamV { x: bs.into_iter().next().unwrap(), body: Box::new(ts.remove(0)) }
        }
        Value::AppV { arg, fun } => Value::AppV {
            arg: Box::new(subst_value_env(arg, env)),
            fun: Box::new(subst_value_env(fun, env)),
        },
        Value::LamNil(k) => Value::LamNil(Box::new(subst_comp_env(k, env))),
    }
}

fn subst_comp_env(t: &Comp, env: &SubstEnv<'_>) -> Comp {
    match t {
        Comp::Nil => Comp::Nil,
        Comp::LetV { x, ann, val, body } => {
            let val = subst_value_env(val, env);
            let ann = ann.as_ref().map(|a| Box::new(subst_vtype_env(a, env)));
            let (bs, mut ts) = under_binders(&[x], &[body.as_ref()], env);
            Comp::LetV {
                x: bs.into_iter().next().unwrap(),
                ann,
                val: Box::new(val),
                body: Box::new(ts.remove(0)),
            }
        }
        Comp::LetNil { bound, body } => Comp::LetNil {
            bound: Box::new(subst_comp_env(bound, env)),
            body: Box::new(subst_comp_env(body, env)),
        },
        Comp::Return(v) => Comp::Return(Box::new(subst_value_env(v, env))),
        Comp::To { comp, x, body, motive } => {
            let comp = subst_comp_env(comp, env);
            let (bs, mut ts) = under_binders(&[x], &[body.as_ref()], env);
            Comp::To {
                comp: Box::new(comp),
                x: bs.into_iter().next().unwrap(),
                body: Box::new(ts.remove(0)),
                motive: subst_motive(motive, env),
            }
        }
        Comp::Force(v) => Comp::Force(Box::new(subst_value_env(v, env))),
        Comp::PmSum { scrut, scrut_ty, branches, motive } => Comp::PmSum {
            scrut: Box::new(subst_value_env(scrut, env)),
            scrut_ty: scrut_ty.as_ref().map(|t| Box::new(subst_vtype_env(t, env))),
            branches: branches
                .iter()
                .map(|(x, k)| {
                    let (bs, mut ts) = under_binders(&[x], &[k], env);
                    (bs.into_iter().next().unwrap(), ts.remove(0))
                })
                .collect(),
            motive: subst_motive(motive, env),
        },
        Comp::PmUnit { scrut, body, motive } => Comp::PmUnit {
            scrut: Box::new(subst_value_env(scrut, env)),
            body: Box::new(subst_comp_env(body, env)),
            motive: subst_motive(motive, env),
        },
        Comp::PmPair { scrut, scrut_ty, x, y, body, motive } => {
            let scrut = subst_value_env(scrut, env);
            let scrut_ty = scrut_ty.as_ref().map(|t| Box::new(subst_vtype_env(t, env)));
            let (bs, mut ts) = under_binders(&[x, y], &[body.as_ref()], env);
            let mut it = bs.into_iter();
            Comp::PmPair {
                scrut: Box::new(scrut),
                scrut_ty,
                x: it.next().unwrap(),
                y: it.next().unwrap(),
                body: Box::new(ts.remove(0)),
                motive: subst_motive(motive, env),
            }
        }
        Comp::PmId { scrut, scrut_ty, binder, body, motive } => {
            let scrut = subst_value_env(scrut, env);
            let scrut_ty = scrut_ty.as_ref().map(|t| Box::new(subst_vtype_env(t, env)));
            let (bs, mut ts) = under_binders(&[binder], &[body.as_ref()], env);
            Comp::PmId {
                scrut: Box::new(scrut),
                scrut_ty,
                binder: bs.into_iter().next().unwrap(),
                body: Box::new(ts.remove(0)),
                motive: subst_id_motive(motive, env),
            }
        }
        Comp::LamI(ks) => Comp::LamI(ks.iter().map(|k| subst_comp_env(k, env)).collect()),
        Comp::ProjI(i, k) => Comp::ProjI(*i, Box::new(subst_comp_env(k, env))),
        Comp::Lam { x, body } => {
            let (bs, mut ts) = under_binders(&[x], &[body.as_ref()], env);
            Comp::Lam { x: bs.into_iter().next().unwrap(), body: Box::new(ts.remove(0)) }
        }
        Comp::App { arg, fun } => Comp::App {
            arg: Box::new(subst_value_env(arg, env)),
            fun: Box::new(subst_comp_env(fun, env)),
        },
        Comp::RetTensor { val, comp } => Comp::RetTensor {
            val: Box::new(subst_value_env(val, env)),
            comp: Box::new(subst_comp_env(comp, env)),
        },
        Comp::ToTensor { comp, x, body } => {
            let comp = subst_comp_env(comp, env);
            let (bs, mut ts) = under_binders(&[x], &[body.as_ref()], env);
            Comp::ToTensor {
                comp: Box::new(comp),
                x: bs.into_iter().next().unwrap(),
                body: Box::new(ts.remove(0)),
            }
        }
        Comp::AppHom { comp, fun, fun_ty } => Comp::AppHom {
            comp: Box::new(subst_comp_env(comp, env)),
            fun: Box::new(subst_value_env(fun, env)),
            fun_ty: fun_ty.as_ref().map(|t| Box::new(subst_vtype_env(t, env))),
        },
        Comp::Diverge => Comp::Diverge,
        Comp::Mu { z, body } => {
            let (bs, mut ts) = under_binders(&[z], &[body.as_ref()], env);
            Comp::Mu { z: bs.into_iter().next().unwrap(), body: Box::new(ts.remove(0)) }
        }
        Comp::Print(m, k) => Comp::Print(m.clone(), Box::new(subst_comp_env(k, env))),
        Comp::Choose(ms) => Comp::Choose(ms.iter().map(|m| subst_comp_env(m, env)).collect()),
        Comp::Error(e) => Comp::Error(e.clone()),
        Comp::Write(s, k) => Comp::Write(s.clone(), Box::new(subst_comp_env(k, env))),
        Comp::Read(branches) => Comp::Read(
            branches.iter().map(|(s, m)| (s.clone(), subst_comp_env(m, env))).collect(),
        ),
        Comp::Annot { comp, ty } => Comp::Annot {
            comp: Box::new(subst_comp_env(comp, env)),
            ty: Box::new(subst_ctype_env(ty, env)),
        },
    }
}

/// Capture-avoiding substitution `t[v/x]` for values.
pub fn subst_value(t: &Value, x: &str, v: &Value) -> Value {
    let fv = free_idents_value(v);
    subst_value_env(t, &SubstEnv { x, v, fv_v: &fv })
}

pub fn subst_comp(t: &Comp, x: &str, v: &Value) -> Comp {
    let fv = free_idents_value(v);
    subst_comp_env(t, &SubstEnv { x, v, fv_v: &fv })
}

pub fn subst_vtype(t: &ValueType, x: &str, v: &Value) -> ValueType {
    let fv = free_idents_value(v);
    subst_vtype_env(t, &SubstEnv { x, v, fv_v: &fv })
}

pub fn subst_ctype(t: &CompType, x: &str, v: &Value) -> CompType {
    let fv = free_idents_value(v);
    subst_ctype_env(t, &SubstEnv { x, v, fv_v: &fv })
}

/// Substitution of a computation for the free stoup reference: `t[k/nil]`.
/// Value binders on the path are renamed apart from `k`'s free identifiers.
pub fn subst_stoup(t: &Comp, k: &Comp) -> Comp {
    let fv = free_idents_comp(k);
    subst_stoup_go(t, k, &fv)
}

fn subst_stoup_go(t: &Comp, k: &Comp, fv_k: &BTreeSet<Ident>) -> Comp {
    // Only descend where the ambient stoup can occur.
    match t {
        Comp::Nil => k.clone(),
        Comp::LetV { x, ann, val, body } => {
            if !has_free_nil(body) {
                return t.clone();
            }
            let (x, body) = if fv_k.contains(x) {
                let mut avoid = fv_k.clone();
                avoid.extend(free_idents_comp(body));
                let fresh = freshen(x, &avoid);
                let body2 = body.rename(x, &fresh);
                (fresh, body2)
            } else {
                (x.clone(), body.as_ref().clone())
            };
            Comp::LetV {
                x,
                ann: ann.clone(),
                val: val.clone(),
                body: Box::new(subst_stoup_go(&body, k, fv_k)),
            }
        }
        Comp::LetNil { bound, body } => Comp::LetNil {
            bound: Box::new(subst_stoup_go(bound, k, fv_k)),
            body: body.clone(),
        },
        Comp::To { comp, x, body, motive } => Comp::To {
            comp: Box::new(subst_stoup_go(comp, k, fv_k)),
            x: x.clone(),
            body: body.clone(),
            motive: motive.clone(),
        },
        Comp::PmSum { scrut, scrut_ty, branches, motive } => Comp::PmSum {
            scrut: scrut.clone(),
            scrut_ty: scrut_ty.clone(),
            branches: branches
                .iter()
                .map(|(x, m)| {
                    if !has_free_nil(m) {
                        return (x.clone(), m.clone());
                    }
                    let (x, m) = if fv_k.contains(x) {
                        let mut avoid = fv_k.clone();
                        avoid.extend(free_idents_comp(m));
                        let fresh = freshen(x, &avoid);
                        let m2 = m.rename(x, &fresh);
                        (fresh, m2)
                    } else {
                        (x.clone(), m.clone())
                    };
                    (x, subst_stoup_go(&m, k, fv_k))
                })
                .collect(),
            motive: motive.clone(),
        },
        Comp::PmUnit { scrut, body, motive } => Comp::PmUnit {
            scrut: scrut.clone(),
            body: Box::new(subst_stoup_go(body, k, fv_k)),
            motive: motive.clone(),
        },
        Comp::PmPair { scrut, scrut_ty, x, y, body, motive } => {
            if !has_free_nil(body) {
                return t.clone();
            }
            let mut x2 = x.clone();
            let mut y2 = y.clone();
            let mut body2 = body.as_ref().clone();
            if fv_k.contains(x) || fv_k.contains(y) {
                let mut avoid = fv_k.clone();
                avoid.extend(free_idents_comp(body));
                avoid.insert(x.clone());
                avoid.insert(y.clone());
                if fv_k.contains(x) {
                    x2 = freshen(x, &avoid);
                    avoid.insert(x2.clone());
                    body2 = body2.rename(x, &x2);
                }
                if fv_k.contains(y) {
                    y2 = freshen(y, &avoid);
                    body2 = body2.rename(y, &y2);
                }
            }
            Comp::PmPair {
                scrut: scrut.clone(),
                scrut_ty: scrut_ty.clone(),
                x: x2,
                y: y2,
                body: Box::new(subst_stoup_go(&body2, k, fv_k)),
                motive: motive.clone(),
            }
        }
        Comp::PmId { scrut, scrut_ty, binder, body, motive } => {
            if !has_free_nil(body) {
                return t.clone();
            }
            let (b2, body2) = if fv_k.contains(binder) {
                let mut avoid = fv_k.clone();
                avoid.extend(free_idents_comp(body));
                let fresh = freshen(binder, &avoid);
                let body2 = body.rename(binder, &fresh);
                (fresh, body2)
            } else {
                (binder.clone(), body.as_ref().clone())
            };
            Comp::PmId {
                scrut: scrut.clone(),
                scrut_ty: scrut_ty.clone(),
                binder: b2,
                body: Box::new(subst_stoup_go(&body2, k, fv_k)),
                motive: motive.clone(),
            }
        }
        Comp::LamI(ks) => Comp::LamI(ks.iter().map(|m| subst_stoup_go(m, k, fv_k)).collect()),
        Comp::ProjI(i, m) => Comp::ProjI(*i, Box::new(subst_stoup_go(m, k, fv_k))),
        Comp::Lam { x, body } => {
            if !has_free_nil(body) {
                return t.clone();
            }
            let (x, body) = if fv_k.contains(x) {
                let mut avoid = fv_k.clone();
                avoid.extend(free_idents_comp(body));
                let fresh = freshen(x, &avoid);
                let body2 = body.rename(x, &fresh);
                (fresh, body2)
            } else {
                (x.clone(), body.as_ref().clone())
            };
            Comp::Lam { x, body: Box::new(subst_stoup_go(&body, k, fv_k)) }
        }
        Comp::App { arg, fun } => Comp::App {
            arg: arg.clone(),
            fun: Box::new(subst_stoup_go(fun, k, fv_k)),
        },
        Comp::RetTensor { val, comp } => Comp::RetTensor {
            val: val.clone(),
            comp: Box::new(subst_stoup_go(comp, k, fv_k)),
        },
        Comp::ToTensor { comp, x, body } => Comp::ToTensor {
            comp: Box::new(subst_stoup_go(comp, k, fv_k)),
            x: x.clone(),
            body: body.clone(),
        },
        Comp::AppHom { comp, fun, fun_ty } => Comp::AppHom {
            comp: Box::new(subst_stoup_go(comp, k, fv_k)),
            fun: fun.clone(),
            fun_ty: fun_ty.clone(),
        },
        Comp::Annot { comp, ty } => Comp::Annot {
            comp: Box::new(subst_stoup_go(comp, k, fv_k)),
            ty: ty.clone(),
        },
        // No stoup can occur below these.
        Comp::Return(_)
        | Comp::Force(_)
        | Comp::Diverge
        | Comp::Mu { .. }
        | Comp::Print(..)
        | Comp::Choose(_)
        | Comp::Error(_)
        | Comp::Write(..)
        | Comp::Read(_) => t.clone(),
    }
}

// ---------------------------------------------------------------------------
// Alpha-equivalence
// ---------------------------------------------------------------------------

#[derive(Default)]
struct AlphaEnv {
    pairs: Vec<(Ident, Ident)>,
}

impl AlphaEnv {
    fn matches(&self, a: &str, b: &str) -> bool {
        for (x, y) in self.pairs.iter().rev() {
            if x == a || y == b {
                return x == a && y == b;
            }
        }
        a == b
    }

    fn push(&mut self, a: &Ident, b: &Ident) {
        self.pairs.push((a.clone(), b.clone()));
    }

    fn pop(&mut self, n: usize) {
        for _ in 0..n {
            self.pairs.pop();
        }
    }
}

fn alpha_motive<T>(
    a: &Option<Motive<T>>,
    b: &Option<Motive<T>>,
    env: &mut AlphaEnv,
    eq: impl Fn(&T, &T, &mut AlphaEnv) -> bool,
) -> bool {
    match (a, b) {
        (None, None) => true,
        (Some(a), Some(b)) => {
            env.push(&a.binder, &b.binder);
            let r = eq(&a.body, &b.body, env);
            env.pop(1);
            r
        }
        _ => false,
    }
}

fn alpha_id_motive<T>(
    a: &Option<IdMotive<T>>,
    b: &Option<IdMotive<T>>,
    env: &mut AlphaEnv,
    eq: impl Fn(&T, &T, &mut AlphaEnv) -> bool,
) -> bool {
    match (a, b) {
        (None, None) => true,
        (Some(a), Some(b)) => {
            env.push(&a.left, &b.left);
            env.push(&a.right, &b.right);
            env.push(&a.witness, &b.witness);
            let r = eq(&a.body, &b.body, env);
            env.pop(3);
            r
        }
        _ => false,
    }
}

fn alpha_opt_vtype(a: &Option<Box<ValueType>>, b: &Option<Box<ValueType>>, env: &mut AlphaEnv) -> bool {
    match (a, b) {
        (None, None) => true,
        (Some(a), Some(b)) => alpha_vtype_env(a, b, env),
        _ => false,
    }
}

fn alpha_vtype_env(a: &ValueType, b: &ValueType, env: &mut AlphaEnv) -> bool {
    use ValueType::*;
    match (a, b) {
        (U(x), U(y)) => alpha_ctype_env(x, y, env),
        (FinSum(xs), FinSum(ys)) => {
            xs.len() == ys.len() && xs.iter().zip(ys).all(|(x, y)| alpha_vtype_env(x, y, env))
        }
        (Unit, Unit) => true,
        (Sigma(x, a1, a2), Sigma(y, b1, b2)) | (Pi(x, a1, a2), Pi(y, b1, b2)) => {
            alpha_vtype_env(a1, b1, env) && {
                env.push(x, y);
                let r = alpha_vtype_env(a2, b2, env);
                env.pop(1);
                r
            }
        }
        (Id(a1, v1, w1), Id(a2, v2, w2)) => {
            alpha_vtype_env(a1, a2, env)
                && alpha_value_env(v1, v2, env)
                && alpha_value_env(w1, w2, env)
        }
        (Hom(b1, c1), Hom(b2, c2)) => {
            alpha_ctype_env(b1, b2, env) && alpha_ctype_env(c1, c2, env)
        }
        _ => false,
    }
}

fn alpha_ctype_env(a: &CompType, b: &CompType, env: &mut AlphaEnv) -> bool {
    use CompType::*;
    match (a, b) {
        (F(x), F(y)) => alpha_vtype_env(x, y, env),
        (FinProd(xs), FinProd(ys)) => {
            xs.len() == ys.len() && xs.iter().zip(ys).all(|(x, y)| alpha_ctype_env(x, y, env))
        }
        (FunPi(x, a1, b1), FunPi(y, a2, b2)) | (SigmaF(x, a1, b1), SigmaF(y, a2, b2)) => {
            alpha_vtype_env(a1, a2, env) && {
                env.push(x, y);
                let r = alpha_ctype_env(b1, b2, env);
                env.pop(1);
                r
            }
        }
        (DepProd(xs), DepProd(ys)) => {
            if xs.len() != ys.len() {
                return false;
            }
            let mut pushed = 0;
            let mut ok = true;
            for ((zx, bx), (zy, by)) in xs.iter().zip(ys) {
                if !alpha_ctype_env(bx, by, env) {
                    ok = false;
                    break;
                }
                env.push(zx, zy);
                pushed += 1;
            }
            env.pop(pushed);
            ok
        }
        _ => false,
    }
}

fn alpha_value_env(a: &Value, b: &Value, env: &mut AlphaEnv) -> bool {
    use Value::*;
    match (a, b) {
        (Var(x), Var(y)) => env.matches(x, y),
        (
            LetV { x, ann: an1, val: v1, body: b1 },
            LetV { x: y, ann: an2, val: v2, body: b2 },
        ) => {
            alpha_opt_vtype(an1, an2, env) && alpha_value_env(v1, v2, env) && {
                env.push(x, y);
                let r = alpha_value_env(b1, b2, env);
                env.pop(1);
                r
            }
        }
        (Thunk(m), Thunk(n)) => alpha_comp_env(m, n, env),
        (Inj(i, v), Inj(j, w)) => i == j && alpha_value_env(v, w, env),
        (UnitV, UnitV) => true,
        (Pair(v1, w1), Pair(v2, w2)) => {
            alpha_value_env(v1, v2, env) && alpha_value_env(w1, w2, env)
        }
        (Refl(v), Refl(w)) => alpha_value_env(v, w, env),
        (
            PmSum { scrut: s1, scrut_ty: t1, branches: br1, motive: m1 },
            PmSum { scrut: s2, scrut_ty: t2, branches: br2, motive: m2 },
        ) => {
            alpha_value_env(s1, s2, env)
                && alpha_opt_vtype(t1, t2, env)
                && br1.len() == br2.len()
                && br1.iter().zip(br2).all(|((x, v), (y, w))| {
                    env.push(x, y);
                    let r = alpha_value_env(v, w, env);
                    env.pop(1);
                    r
                })
                && alpha_motive(m1, m2, env, alpha_vtype_env)
        }
        (
            PmUnit { scrut: s1, body: b1, motive: m1 },
            PmUnit { scrut: s2, body: b2, motive: m2 },
        ) => {
            alpha_value_env(s1, s2, env)
                && alpha_value_env(b1, b2, env)
                && alpha_motive(m1, m2, env, alpha_vtype_env)
        }
        (
            PmPair { scrut: s1, scrut_ty: t1, x: x1, y: y1, body: b1, motive: m1 },
            PmPair { scrut: s2, scrut_ty: t2, x: x2, y: y2, body: b2, motive: m2 },
        ) => {
            alpha_value_env(s1, s2, env) && alpha_opt_vtype(t1, t2, env) && {
                env.push(x1, x2);
                env.push(y1, y2);
                let r = alpha_value_env(b1, b2, env);
                env.pop(2);
                r
            } && alpha_motive(m1, m2, env, alpha_vtype_env)
        }
        (
            PmId { scrut: s1, scrut_ty: t1, binder: x1, body: b1, motive: m1 },
            PmId { scrut: s2, scrut_ty: t2, binder: x2, body: b2, motive: m2 },
        ) => {
            alpha_value_env(s1, s2, env) && alpha_opt_vtype(t1, t2, env) && {
                env.push(x1, x2);
                let r = alpha_value_env(b1, b2, env);
                env.pop(1);
                r
            } && alpha_id_motive(m1, m2, env, alpha_vtype_env)
        }
        (LamV { x, body: b1 }, LamV { x: y, body: b2 }) => {
            env.push(x, y);
            let r = alpha_value_env(b1, b2, env);
            env.pop(1);
            r
        }
        (AppV { arg: a1, fun: f1 }, AppV { arg: a2, fun: f2 }) => {
            alpha_value_env(a1, a2, env) && alpha_value_env(f1, f2, env)
        }
        (LamNil(k1), LamNil(k2)) => alpha_comp_env(k1, k2, env),
        _ => false,
    }
}

fn alpha_comp_env(a: &Comp, b: &Comp, env: &mut AlphaEnv) -> bool {
    use Comp::*;
    match (a, b) {
        (Nil, Nil) => true,
        (
            LetV { x, ann: an1, val: v1, body: b1 },
            LetV { x: y, ann: an2, val: v2, body: b2 },
        ) => {
            alpha_opt_vtype(an1, an2, env) && alpha_value_env(v1, v2, env) && {
                env.push(x, y);
                let r = alpha_comp_env(b1, b2, env);
                env.pop(1);
                r
            }
        }
        (LetNil { bound: k1, body: l1 }, LetNil { bound: k2, body: l2 }) => {
            alpha_comp_env(k1, k2, env) && alpha_comp_env(l1, l2, env)
        }
        (Return(v), Return(w)) => alpha_value_env(v, w, env),
        (
            To { comp: c1, x, body: n1, motive: m1 },
            To { comp: c2, x: y, body: n2, motive: m2 },
        ) => {
            alpha_comp_env(c1, c2, env)
                && {
                    env.push(x, y);
                    let r = alpha_comp_env(n1, n2, env);
                    env.pop(1);
                    r
                }
                && alpha_motive(m1, m2, env, alpha_ctype_env)
        }
        (Force(v), Force(w)) => alpha_value_env(v, w, env),
        (
            PmSum { scrut: s1, scrut_ty: t1, branches: br1, motive: m1 },
            PmSum { scrut: s2, scrut_ty: t2, branches: br2, motive: m2 },
        ) => {
            alpha_value_env(s1, s2, env)
                && alpha_opt_vtype(t1, t2, env)
                && br1.len() == br2.len()
                && br1.iter().zip(br2).all(|((x, k), (y, l))| {
                    env.push(x, y);
                    let r = alpha_comp_env(k, l, env);
                    env.pop(1);
                    r
                })
                && alpha_motive(m1, m2, env, alpha_ctype_env)
        }
        (
            PmUnit { scrut: s1, body: b1, motive: m1 },
            PmUnit { scrut: s2, body: b2, motive: m2 },
        ) => {
            alpha_value_env(s1, s2, env)
                && alpha_comp_env(b1, b2, env)
                && alpha_motive(m1, m2, env, alpha_ctype_env)
        }
        (
            PmPair { scrut: s1, scrut_ty: t1, x: x1, y: y1, body: b1, motive: m1 },
            PmPair { scrut: s2, scrut_ty: t2, x: x2, y: y2, body: b2, motive: m2 },
        ) => {
            alpha_value_env(s1, s2, env) && alpha_opt_vtype(t1, t2, env) && {
                env.push(x1, x2);
                env.push(y1, y2);
                let r = alpha_comp_env(b1, b2, env);
                env.pop(2);
                r
            } && alpha_motive(m1, m2, env, alpha_ctype_env)
        }
        (
            PmId { scrut: s1, scrut_ty: t1, binder: x1, body: b1, motive: m1 },
            PmId { scrut: s2, scrut_ty: t2, binder: x2, body: b2, motive: m2 },
        ) => {
            alpha_value_env(s1, s2, env) && alpha_opt_vtype(t1, t2, env) && {
                env.push(x1, x2);
                let r = alpha_comp_env(b1, b2, env);
                env.pop(1);
                r
            } && alpha_id_motive(m1, m2, env, alpha_ctype_env)
        }
        (LamI(ks), LamI(ls)) => {
            ks.len() == ls.len() && ks.iter().zip(ls).all(|(k, l)| alpha_comp_env(k, l, env))
        }
        (ProjI(i, k), ProjI(j, l)) => i == j && alpha_comp_env(k, l, env),
        (Lam { x, body: b1 }, Lam { x: y, body: b2 }) => {
            env.push(x, y);
            let r = alpha_comp_env(b1, b2, env);
            env.pop(1);
            r
        }
        (App { arg: a1, fun: f1 }, App { arg: a2, fun: f2 }) => {
            alpha_value_env(a1, a2, env) && alpha_comp_env(f1, f2, env)
        }
        (RetTensor { val: v1, comp: k1 }, RetTensor { val: v2, comp: k2 }) => {
            alpha_value_env(v1, v2, env) && alpha_comp_env(k1, k2, env)
        }
        (
            ToTensor { comp: c1, x, body: b1 },
            ToTensor { comp: c2, x: y, body: b2 },
        ) => {
            alpha_comp_env(c1, c2, env) && {
                env.push(x, y);
                let r = alpha_comp_env(b1, b2, env);
                env.pop(1);
                r
            }
        }
        (
            AppHom { comp: k1, fun: f1, fun_ty: t1 },
            AppHom { comp: k2, fun: f2, fun_ty: t2 },
        ) => {
            alpha_comp_env(k1, k2, env)
                && alpha_value_env(f1, f2, env)
                && alpha_opt_vtype(t1, t2, env)
        }
        (Diverge, Diverge) => true,
        (Mu { z, body: b1 }, Mu { z: w, body: b2 }) => {
            env.push(z, w);
            let r = alpha_comp_env(b1, b2, env);
            env.pop(1);
            r
        }
        (Print(m1, k1), Print(m2, k2)) => m1 == m2 && alpha_comp_env(k1, k2, env),
        (Choose(ks), Choose(ls)) => {
            ks.len() == ls.len() && ks.iter().zip(ls).all(|(k, l)| alpha_comp_env(k, l, env))
        }
        (Error(e1), Error(e2)) => e1 == e2,
        (Write(s1, k1), Write(s2, k2)) => s1 == s2 && alpha_comp_env(k1, k2, env),
        (Read(br1), Read(br2)) => {
            br1.len() == br2.len()
                && br1
                    .iter()
                    .zip(br2)
                    .all(|((s, k), (t, l))| s == t && alpha_comp_env(k, l, env))
        }
        (Annot { comp: c1, ty: t1 }, Annot { comp: c2, ty: t2 }) => {
            alpha_comp_env(c1, c2, env) && alpha_ctype_env(t1, t2, env)
        }
        _ => false,
    }
}

pub fn alpha_eq_value(a: &Value, b: &Value) -> bool {
    alpha_value_env(a, b, &mut AlphaEnv::default())
}

pub fn alpha_eq_comp(a: &Comp, b: &Comp) -> bool {
    alpha_comp_env(a, b, &mut AlphaEnv::default())
}

pub fn alpha_eq_vtype(a: &ValueType, b: &ValueType) -> bool {
    alpha_vtype_env(a, b, &mut AlphaEnv::default())
}

pub fn alpha_eq_ctype(a: &CompType, b: &CompType) -> bool {
    alpha_ctype_env(a, b, &mut AlphaEnv::default())
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", crate::pretty::value(self))
    }
}

impl fmt::Display for Comp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", crate::pretty::comp(self))
    }
}

impl fmt::Display for ValueType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", crate::pretty::vtype(self))
    }
}

impl fmt::Display for CompType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", crate::pretty::ctype(self))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ret(v: Value) -> Comp {
        Comp::Return(Box::new(v))
    }

    #[test]
    fn subst_identity_case() {
        // subst(Var x, x, ()) = ()
        let t = Value::var("x");
        assert_eq!(subst_value(&t, "x", &Value::UnitV), Value::UnitV);
    }

    #[test]
    fn subst_under_return() {
        let t = ret(Value::var("x"));
        let pair = Value::Pair(Box::new(Value::UnitV), Box::new(Value::UnitV));
        let got = subst_comp(&t, "x", &pair);
        assert_eq!(got, ret(pair));
    }

    #[test]
    fn subst_shadowing_lambda_unchanged() {
        // (lam x. return x)[()/x] is unchanged up to alpha.
        let t = Comp::Lam { x: "x".into(), body: Box::new(ret(Value::var("x"))) };
        let got = subst_comp(&t, "x", &Value::UnitV);
        assert!(alpha_eq_comp(&got, &t));
    }

    #[test]
    fn subst_capture_avoided() {
        // (lam y. return <x, y>)[y/x] must rename the binder.
        let t = Comp::Lam {
            x: "y".into(),
            body: Box::new(ret(Value::Pair(
                Box::new(Value::var("x")),
                Box::new(Value::var("y")),
            ))),
        };
        let got = subst_comp(&t, "x", &Value::var("y"));
        let expect = Comp::Lam {
            x: "w".into(),
            body: Box::new(ret(Value::Pair(
                Box::new(Value::var("y")),
                Box::new(Value::var("w")),
            ))),
        };
        assert!(alpha_eq_comp(&got, &expect));
        assert!(!free_idents_comp(&got).contains("x"));
    }

    #[test]
    fn subst_stoup_basic() {
        let unit_ret = ret(Value::UnitV);
        assert_eq!(subst_stoup(&Comp::Nil, &unit_ret), unit_ret);

        let t = Comp::ProjI(1, Box::new(Comp::Nil));
        let lam = Comp::LamI(vec![unit_ret.clone(), Comp::Diverge]);
        assert_eq!(subst_stoup(&t, &lam), Comp::ProjI(1, Box::new(lam)));
    }

    #[test]
    fn subst_stoup_under_to() {
        // (nil to x in return x)[return () / nil] = return () to x in return x
        let t = Comp::To {
            comp: Box::new(Comp::Nil),
            x: "x".into(),
            body: Box::new(ret(Value::var("x"))),
            motive: None,
        };
        let got = subst_stoup(&t, &ret(Value::UnitV));
        let expect = Comp::To {
            comp: Box::new(ret(Value::UnitV)),
            x: "x".into(),
            body: Box::new(ret(Value::var("x"))),
            motive: None,
        };
        assert_eq!(got, expect);
    }

    #[test]
    fn alpha_eq_binders() {
        let a = Comp::Lam { x: "x".into(), body: Box::new(ret(Value::var("x"))) };
        let b = Comp::Lam { x: "y".into(), body: Box::new(ret(Value::var("y"))) };
        let c = Comp::Lam { x: "x".into(), body: Box::new(ret(Value::UnitV)) };
        assert!(alpha_eq_comp(&a, &b));
        assert!(!alpha_eq_comp(&a, &c));

        let t1 = Value::Thunk(Box::new(Comp::Mu {
            z: "z".into(),
            body: Box::new(Comp::Force(Box::new(Value::var("z")))),
        }));
        let t2 = Value::Thunk(Box::new(Comp::Mu {
            z: "w".into(),
            body: Box::new(Comp::Force(Box::new(Value::var("w")))),
        }));
        assert!(alpha_eq_value(&t1, &t2));
    }

    #[test]
    fn free_idents_examples() {
        let t = ret(Value::var("x"));
        assert_eq!(free_idents_comp(&t), ["x".to_string()].into_iter().collect());

        let t = Value::Thunk(Box::new(ret(Value::UnitV)));
        assert!(free_idents_value(&t).is_empty());

        // force f to x in return <x, y> has frees {f, y}
        let t = Comp::To {
            comp: Box::new(Comp::Force(Box::new(Value::var("f")))),
            x: "x".into(),
            body: Box::new(ret(Value::Pair(
                Box::new(Value::var("x")),
                Box::new(Value::var("y")),
            ))),
            motive: None,
        };
        let fv = free_idents_comp(&t);
        assert_eq!(fv, ["f".to_string(), "y".to_string()].into_iter().collect());
    }

    #[test]
    fn stoup_tracked_separately() {
        assert!(has_free_nil(&Comp::Nil));
        assert!(!has_free_nil(&ret(Value::UnitV)));
        let t = Comp::LetNil {
            bound: Box::new(Comp::Nil),
            body: Box::new(Comp::Nil),
        };
        assert!(has_free_nil(&t));
        let t = Comp::LetNil {
            bound: Box::new(ret(Value::UnitV)),
            body: Box::new(Comp::Nil),
        };
        assert!(!has_free_nil(&t));
    }
}
