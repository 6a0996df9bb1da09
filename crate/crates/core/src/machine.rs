//! The CK abstract machine: small-step evaluation of closed computations
//! against a frame stack, with printing, global state, erratic choice,
//! errors, divergence and recursion.
//!
//! A configuration is `(M, K, m, s)`: the current computation, the frame
//! stack, the output-monoid element accumulated so far, and the current
//! store state. Initial configurations have an empty stack, empty output
//! and the signature's initial state. Whenever a computation term former
//! takes a value argument, the machine first normalizes the value as an
//! explicit pre-step; pre-steps count against fuel.

use crate::ast::*;
use crate::kernel::{self, is_normal_value, normalize_value};
use serde::Serialize;
use std::collections::VecDeque;
use std::fmt;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Frame {
    /// `[.] to x in N`, with the motive kept when the push came from a
    /// dependent sequencing.
    To { x: Ident, body: Comp, motive: Option<Motive<CompType>> },
    /// `j :: [.]`
    Idx(usize),
    /// `V :: [.]`
    Arg(Value),
    /// `[.] to rtensor x in L`
    Tensor { x: Ident, body: Comp },
    /// An arbitrary stack term as a frame; never produced by transitions.
    LetNil { body: Comp },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Config {
    pub comp: Comp,
    /// Frame stack; the last element is the top.
    pub stack: Vec<Frame>,
    pub out: Vec<Token>,
    pub state: StateName,
}

impl Config {
    pub fn initial(sig: &EffectSignature, comp: Comp) -> Config {
        Config { comp, stack: Vec::new(), out: Vec::new(), state: sig.initial_state.clone() }
    }

    pub fn out_string(&self) -> String {
        self.out.concat()
    }
}

impl fmt::Display for Config {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "({}, depth {}, out \"{}\", state {})",
            crate::pretty::comp(&self.comp),
            self.stack.len(),
            self.out_string(),
            self.state
        )
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Outcome {
    Terminal(Config),
    FuelExhausted(Config),
    Stuck(Config, String),
    /// Only under [`Strategy::All`]: one outcome per explored branch.
    Branches(Vec<Outcome>),
}

impl Outcome {
    pub fn is_terminal(&self) -> bool {
        matches!(self, Outcome::Terminal(_))
    }

    /// Flattens a branching outcome into its leaves.
    pub fn leaves(&self) -> Vec<&Outcome> {
        match self {
            Outcome::Branches(bs) => bs.iter().flat_map(|b| b.leaves()).collect(),
            other => vec![other],
        }
    }
}

/// Deterministic splitmix64 generator; the branch picked by
/// `seeded(n)` at a `choose` of arity `k` is `next_u64() % k`.
#[derive(Debug, Clone)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        SplitMix64 { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }
}

#[derive(Debug, Clone)]
pub enum Strategy {
    First,
    Seeded(SplitMix64),
    All,
}

impl Strategy {
    pub fn seeded(n: u64) -> Strategy {
        Strategy::Seeded(SplitMix64::new(n))
    }
}

/// The raw transition relation at a configuration.
#[derive(Debug, Clone)]
pub enum Transitions {
    Terminal,
    Stuck(String),
    Next(Vec<(&'static str, Config)>),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InjectError(pub String);

impl fmt::Display for InjectError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl std::error::Error for InjectError {}

/// Builds the initial configuration for a closed computation.
pub fn inject(sig: &EffectSignature, m: &Comp) -> Result<Config, InjectError> {
    let fv = free_idents_comp(m);
    if !fv.is_empty() {
        return Err(InjectError(format!(
            "open term: free identifiers {{{}}}",
            fv.into_iter().collect::<Vec<_>>().join(", ")
        )));
    }
    if has_free_nil(m) {
        return Err(InjectError("open term: free stoup reference".into()));
    }
    Ok(Config::initial(sig, m.clone()))
}

fn peel(mut m: &Comp) -> &Comp {
    while let Comp::Annot { comp, .. } = m {
        m = comp;
    }
    m
}

/// Whether the peeled computation matches the terminal-configuration table.
pub fn is_terminal(c: &Config) -> bool {
    match peel(&c.comp) {
        Comp::Error(_) => true,
        Comp::Return(v) => c.stack.is_empty() && is_normal_value(v),
        Comp::LamI(_) | Comp::Lam { .. } => c.stack.is_empty(),
        Comp::RetTensor { val, .. } => c.stack.is_empty() && is_normal_value(val),
        _ => false,
    }
}

/// Computes every applicable transition at a configuration. `choose`
/// contributes one successor per alternative.
pub fn transitions(_sig: &EffectSignature, c: &Config) -> Transitions {
    use Comp::*;
    let next = |label: &'static str, comp: Comp, stack: Vec<Frame>, out: Vec<Token>, state: StateName| {
        Transitions::Next(vec![(label, Config { comp, stack, out, state })])
    };
    let keep = |label: &'static str, comp: Comp| {
        next(label, comp, c.stack.clone(), c.out.clone(), c.state.clone())
    };
    let comp = peel(&c.comp);

    // A stack whose top is an arbitrary stack-term frame collapses by the
    // let-nil equation.
    if let Some(Frame::LetNil { body }) = c.stack.last() {
        let mut stack = c.stack.clone();
        let body = body.clone();
        stack.pop();
        return next(
            "letnil-frame",
            subst_stoup(&body, comp),
            stack,
            c.out.clone(),
            c.state.clone(),
        );
    }

    match comp {
        Nil => Transitions::Stuck("open stoup reference".into()),
        Error(_) => Transitions::Terminal,
        LetV { x, ann, val, body } => {
            if !is_normal_value(val) {
                keep(
                    "let-norm",
                    LetV {
                        x: x.clone(),
                        ann: ann.clone(),
                        val: Box::new(normalize_value(val)),
                        body: body.clone(),
                    },
                )
            } else {
                keep("let-subst", subst_comp(body, x, val))
            }
        }
        LetNil { bound, body } => keep("letnil-subst", subst_stoup(body, bound)),
        To { comp: k, x, body, motive } => {
            let mut stack = c.stack.clone();
            stack.push(Frame::To { x: x.clone(), body: body.as_ref().clone(), motive: motive.clone() });
            next("to-push", k.as_ref().clone(), stack, c.out.clone(), c.state.clone())
        }
        Return(v) => {
            if !is_normal_value(v) {
                return keep("return-norm", Return(Box::new(normalize_value(v))));
            }
            match c.stack.last() {
                Some(Frame::To { x, body, .. }) => {
                    let mut stack = c.stack.clone();
                    let (x, body) = (x.clone(), body.clone());
                    stack.pop();
                    next(
                        "return-pop",
                        subst_comp(&body, &x, v),
                        stack,
                        c.out.clone(),
                        c.state.clone(),
                    )
                }
                None => Transitions::Terminal,
                Some(_) => Transitions::Stuck("return against a non-to frame".into()),
            }
        }
        Force(v) => {
            if !is_normal_value(v) {
                return keep("force-norm", Force(Box::new(normalize_value(v))));
            }
            match v.as_ref() {
                Value::Thunk(m) => keep("force-thunk", m.as_ref().clone()),
                _ => Transitions::Stuck("neutral: force of a non-thunk".into()),
            }
        }
        PmSum { scrut, scrut_ty, branches, motive } => {
            if !is_normal_value(scrut) {
                return keep(
                    "pm-sum-norm",
                    PmSum {
                        scrut: Box::new(normalize_value(scrut)),
                        scrut_ty: scrut_ty.clone(),
                        branches: branches.clone(),
                        motive: motive.clone(),
                    },
                );
            }
            match scrut.as_ref() {
                Value::Inj(j, w) => match j.checked_sub(1).and_then(|j| branches.get(j)) {
                    Some((x, body)) => keep("pm-sum-beta", subst_comp(body, x, w)),
                    None => Transitions::Stuck("injection index out of range".into()),
                },
                _ => Transitions::Stuck("neutral: sum pattern match on a non-injection".into()),
            }
        }
        PmUnit { scrut, body, motive } => {
            if !is_normal_value(scrut) {
                return keep(
                    "pm-unit-norm",
                    PmUnit {
                        scrut: Box::new(normalize_value(scrut)),
                        body: body.clone(),
                        motive: motive.clone(),
                    },
                );
            }
            match scrut.as_ref() {
                Value::UnitV => keep("pm-unit-beta", body.as_ref().clone()),
                _ => Transitions::Stuck("neutral: unit pattern match on a non-unit".into()),
            }
        }
        PmPair { scrut, scrut_ty, x, y, body, motive } => {
            if !is_normal_value(scrut) {
                return keep(
                    "pm-pair-norm",
                    PmPair {
                        scrut: Box::new(normalize_value(scrut)),
                        scrut_ty: scrut_ty.clone(),
                        x: x.clone(),
                        y: y.clone(),
                        body: body.clone(),
                        motive: motive.clone(),
                    },
                );
            }
            match scrut.as_ref() {
                Value::Pair(v, w) => {
                    let t = subst_comp(body, x, v);
                    keep("pm-pair-beta", subst_comp(&t, y, w))
                }
                _ => Transitions::Stuck("neutral: pair pattern match on a non-pair".into()),
            }
        }
        PmId { scrut, scrut_ty, binder, body, motive } => {
            if !is_normal_value(scrut) {
                return keep(
                    "pm-id-norm",
                    PmId {
                        scrut: Box::new(normalize_value(scrut)),
                        scrut_ty: scrut_ty.clone(),
                        binder: binder.clone(),
                        body: body.clone(),
                        motive: motive.clone(),
                    },
                );
            }
            match scrut.as_ref() {
                Value::Refl(w) => keep("pm-id-beta", subst_comp(body, binder, w)),
                _ => Transitions::Stuck("neutral: refl pattern match on a non-refl".into()),
            }
        }
        ProjI(j, k) => {
            let mut stack = c.stack.clone();
            stack.push(Frame::Idx(*j));
            next("proj-push", k.as_ref().clone(), stack, c.out.clone(), c.state.clone())
        }
        LamI(ks) => match c.stack.last() {
            Some(Frame::Idx(j)) => match j.checked_sub(1).and_then(|j| ks.get(j)) {
                Some(k) => {
                    let mut stack = c.stack.clone();
                    let k = k.clone();
                    stack.pop();
                    next("proj-pop", k, stack, c.out.clone(), c.state.clone())
                }
                None => Transitions::Stuck("projection index out of range".into()),
            },
            None => Transitions::Terminal,
            Some(_) => Transitions::Stuck("tuple against a non-index frame".into()),
        },
        App { arg, fun } => {
            if !is_normal_value(arg) {
                return keep(
                    "arg-norm",
                    App { arg: Box::new(normalize_value(arg)), fun: fun.clone() },
                );
            }
            let mut stack = c.stack.clone();
            stack.push(Frame::Arg(arg.as_ref().clone()));
            next("arg-push", fun.as_ref().clone(), stack, c.out.clone(), c.state.clone())
        }
        Lam { x, body } => match c.stack.last() {
            Some(Frame::Arg(v)) => {
                let mut stack = c.stack.clone();
                let v = v.clone();
                stack.pop();
                next(
                    "fun-pop",
                    subst_comp(body, x, &v),
                    stack,
                    c.out.clone(),
                    c.state.clone(),
                )
            }
            None => Transitions::Terminal,
            Some(_) => Transitions::Stuck("lambda against a non-argument frame".into()),
        },
        RetTensor { val, comp: k } => {
            if !is_normal_value(val) {
                return keep(
                    "rtensor-norm",
                    RetTensor { val: Box::new(normalize_value(val)), comp: k.clone() },
                );
            }
            match c.stack.last() {
                Some(Frame::Tensor { x, body }) => {
                    let mut stack = c.stack.clone();
                    let (x, body) = (x.clone(), body.clone());
                    stack.pop();
                    let plugged = subst_stoup(&subst_comp(&body, &x, val), k);
                    next("rtensor-pop", plugged, stack, c.out.clone(), c.state.clone())
                }
                None => Transitions::Terminal,
                Some(_) => Transitions::Stuck("tensor against a non-tensor frame".into()),
            }
        }
        ToTensor { comp: k, x, body } => {
            let mut stack = c.stack.clone();
            stack.push(Frame::Tensor { x: x.clone(), body: body.as_ref().clone() });
            next("totensor-push", k.as_ref().clone(), stack, c.out.clone(), c.state.clone())
        }
        AppHom { comp: k, fun, .. } => {
            if !is_normal_value(fun) {
                return keep(
                    "apphom-norm",
                    AppHom {
                        comp: k.clone(),
                        fun: Box::new(normalize_value(fun)),
                        fun_ty: None,
                    },
                );
            }
            match fun.as_ref() {
                Value::LamNil(l) => keep("apphom-beta", subst_stoup(l, k)),
                _ => Transitions::Stuck("neutral: application of a non-homomorphism".into()),
            }
        }
        Diverge => keep("diverge-loop", Diverge),
        Mu { z, body } => {
            let unrolled = subst_comp(
                body,
                z,
                &Value::Thunk(Box::new(Mu { z: z.clone(), body: body.clone() })),
            );
            keep("mu-unroll", unrolled)
        }
        Print(tokens, k) => {
            let mut out = c.out.clone();
            out.extend(tokens.iter().cloned());
            next("print", k.as_ref().clone(), c.stack.clone(), out, c.state.clone())
        }
        Write(s, k) => {
            next("write", k.as_ref().clone(), c.stack.clone(), c.out.clone(), s.clone())
        }
        Read(branches) => match branches.iter().find(|(s, _)| *s == c.state) {
            Some((_, k)) => keep("read", k.clone()),
            None => Transitions::Stuck(format!("read has no branch for state `{}`", c.state)),
        },
        Choose(ks) => Transitions::Next(
            ks.iter()
                .map(|k| {
                    (
                        "choose",
                        Config {
                            comp: k.clone(),
                            stack: c.stack.clone(),
                            out: c.out.clone(),
                            state: c.state.clone(),
                        },
                    )
                })
                .collect(),
        ),
        Annot { .. } => unreachable!("peeled"),
    }
}

/// Counts the transition rules whose left-hand side matches, with their
/// labels; `choose` counts one per branch. Zero exactly at terminal
/// configurations.
pub fn applicable_transitions(sig: &EffectSignature, c: &Config) -> (usize, Vec<&'static str>) {
    match transitions(sig, c) {
        Transitions::Terminal => (0, Vec::new()),
        Transitions::Stuck(_) => (0, Vec::new()),
        Transitions::Next(v) => (v.len(), v.into_iter().map(|(l, _)| l).collect()),
    }
}

/// One machine step under a strategy. Returns the chosen successors with
/// their rule labels; empty exactly when no transition applies.
pub fn step(
    sig: &EffectSignature,
    c: &Config,
    strategy: &mut Strategy,
) -> Result<Vec<(&'static str, Config)>, String> {
    match transitions(sig, c) {
        Transitions::Terminal => Ok(Vec::new()),
        Transitions::Stuck(r) => Err(r),
        Transitions::Next(mut succ) => {
            if succ.len() <= 1 {
                return Ok(succ);
            }
            match strategy {
                Strategy::First => Ok(vec![succ.remove(0)]),
                Strategy::Seeded(rng) => {
                    let i = (rng.next_u64() % succ.len() as u64) as usize;
                    Ok(vec![succ.remove(i)])
                }
                Strategy::All => Ok(succ),
            }
        }
    }
}

/// Branch cap for [`Strategy::All`] exploration.
pub const BRANCH_CAP: usize = 4096;

/// Iterates the machine from a closed computation until a terminal
/// configuration or fuel runs out. Under `All`, explores the finite
/// branching tree breadth-first up to [`BRANCH_CAP`] simultaneous branches.
pub fn run(sig: &EffectSignature, m: &Comp, fuel: usize, strategy: Strategy) -> Outcome {
    let c = match inject(sig, m) {
        Ok(c) => c,
        Err(e) => {
            return Outcome::Stuck(Config::initial(sig, m.clone()), e.0);
        }
    };
    run_config(sig, c, fuel, strategy)
}

pub fn run_config(sig: &EffectSignature, c: Config, fuel: usize, strategy: Strategy) -> Outcome {
    match strategy {
        Strategy::All => {
            let mut frontier: VecDeque<(Config, usize)> = VecDeque::new();
            frontier.push_back((c, fuel));
            let mut leaves: Vec<Outcome> = Vec::new();
            let mut branched = false;
            while let Some((cfg, fuel_left)) = frontier.pop_front() {
                if fuel_left == 0 {
                    leaves.push(Outcome::FuelExhausted(cfg));
                    continue;
                }
                match transitions(sig, &cfg) {
                    Transitions::Terminal => leaves.push(Outcome::Terminal(cfg)),
                    Transitions::Stuck(r) => leaves.push(Outcome::Stuck(cfg, r)),
                    Transitions::Next(succ) => {
                        if succ.len() > 1 {
                            branched = true;
                        }
                        for (_, s) in succ {
                            if frontier.len() + leaves.len() >= BRANCH_CAP {
                                leaves.push(Outcome::FuelExhausted(s));
                            } else {
                                frontier.push_back((s, fuel_left - 1));
                            }
                        }
                    }
                }
            }
            if leaves.len() == 1 && !branched {
                leaves.pop().unwrap()
            } else {
                Outcome::Branches(leaves)
            }
        }
        mut strategy => {
            let mut cfg = c;
            for _ in 0..fuel {
                match step(sig, &cfg, &mut strategy) {
                    Ok(succ) => {
                        if succ.is_empty() {
                            return Outcome::Terminal(cfg);
                        }
                        cfg = succ.into_iter().next().unwrap().1;
                    }
                    Err(reason) => return Outcome::Stuck(cfg, reason),
                }
            }
            Outcome::FuelExhausted(cfg)
        }
    }
}

/// One record per machine step, for `--trace`.
#[derive(Debug, Clone, Serialize)]
pub struct TraceStep {
    pub index: usize,
    pub rule: &'static str,
    pub comp: String,
    pub stack_depth: usize,
    pub out: String,
    pub state: String,
}

/// Runs with a single-successor strategy, recording one trace line per step.
pub fn run_trace(
    sig: &EffectSignature,
    m: &Comp,
    fuel: usize,
    mut strategy: Strategy,
) -> (Outcome, Vec<TraceStep>) {
    let mut trace = Vec::new();
    let c = match inject(sig, m) {
        Ok(c) => c,
        Err(e) => return (Outcome::Stuck(Config::initial(sig, m.clone()), e.0), trace),
    };
    let mut cfg = c;
    for i in 0..fuel {
        match step(sig, &cfg, &mut strategy) {
            Ok(succ) => {
                if succ.is_empty() {
                    return (Outcome::Terminal(cfg), trace);
                }
                let (rule, next) = succ.into_iter().next().unwrap();
                trace.push(TraceStep {
                    index: i,
                    rule,
                    comp: crate::pretty::comp(&next.comp),
                    stack_depth: next.stack.len(),
                    out: next.out_string(),
                    state: next.state.clone(),
                });
                cfg = next;
            }
            Err(reason) => return (Outcome::Stuck(cfg, reason), trace),
        }
    }
    (Outcome::FuelExhausted(cfg), trace)
}

// ---------------------------------------------------------------------------
// Configuration typing
// ---------------------------------------------------------------------------

/// Expands a frame to its defining stack term with `nil` in the hole.
pub fn frame_term(f: &Frame) -> Comp {
    match f {
        Frame::To { x, body, motive } => Comp::To {
            comp: Box::new(Comp::Nil),
            x: x.clone(),
            body: Box::new(body.clone()),
            motive: motive.clone(),
        },
        Frame::Idx(j) => Comp::ProjI(*j, Box::new(Comp::Nil)),
        Frame::Arg(v) => Comp::App { arg: Box::new(v.clone()), fun: Box::new(Comp::Nil) },
        Frame::Tensor { x, body } => Comp::ToTensor {
            comp: Box::new(Comp::Nil),
            x: x.clone(),
            body: Box::new(body.clone()),
        },
        Frame::LetNil { body } => body.clone(),
    }
}

/// Elaborates a frame stack into a single stack term (a computation with
/// one free `nil`, where the top frame consumes the hole first).
pub fn elaborate_stack(stack: &[Frame]) -> Comp {
    let mut acc = Comp::Nil;
    for f in stack {
        acc = Comp::LetNil { bound: Box::new(frame_term(f)), body: Box::new(acc) };
    }
    acc
}

/// Types a configuration at `expected`: the computation synthesizes some
/// `B`, and the elaborated stack must check at `expected` under the stoup
/// `nil : B`.
pub fn type_config(
    sig: &EffectSignature,
    c: &Config,
    expected: &CompType,
) -> kernel::TcResult<()> {
    let b = kernel::synth_comp(sig, &Context::empty(), &c.comp)?;
    let stack_term = elaborate_stack(&c.stack);
    let ctx = Context::empty().with_stoup(b);
    kernel::check_comp(sig, &ctx, &stack_term, expected)
}
