//! Executable metatheory checks over programs and corpora: subject
//! reduction, determinism, and strong normalization, plus the report
//! plumbing used by the `meta` command.
//!
//! Subject reduction is verified by a typed replay of the machine: every
//! reachable configuration's computation is re-checked against an expected
//! type that is transported along the fired transition, and every frame
//! carries the output type it was pushed with. A dependent `to` frame is
//! untypable as a stack term, so it is certified by the paired-transition
//! argument instead: the frame remembers its motive and the thunk of the
//! sequenced computation, and at the matching pop the popped value's
//! instantiation must be judgementally equal to the remembered one (with
//! effect equations enabled). Pure effects pass this test; printing,
//! writing and erratic choice fail it, which is exactly the hypothesis of
//! the limited subject-reduction theorem.

use crate::ast::*;
use crate::kernel::{self, check_comp, ctypes_equal, strip_annots, synth_comp, tr};
use crate::machine::{self, Config, Transitions};
use serde::Serialize;
use std::collections::{HashSet, VecDeque};
use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Property {
    #[serde(rename = "subject-reduction")]
    SubjectReduction,
    #[serde(rename = "determinism")]
    Determinism,
    #[serde(rename = "normalization")]
    Normalization,
    #[serde(rename = "iso")]
    Iso,
    #[serde(rename = "adequacy")]
    Adequacy,
}

impl fmt::Display for Property {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Property::SubjectReduction => "subject-reduction",
            Property::Determinism => "determinism",
            Property::Normalization => "normalization",
            Property::Iso => "iso",
            Property::Adequacy => "adequacy",
        };
        write!(f, "{s}")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Pass,
    Fail,
    InconclusiveFuel,
    Skipped,
}

/// Replay data for a failure: enough to rerun deterministically.
#[derive(Debug, Clone, Serialize)]
pub struct Witness {
    pub seed: Option<u64>,
    pub flags: Features,
    pub step_index: usize,
    pub config: String,
    pub reason: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub program: String,
    pub property: Property,
    pub verdict: Verdict,
    pub witness: Option<Witness>,
    pub detail: String,
}

impl Report {
    fn pass(program: &str, property: Property, detail: impl Into<String>) -> Report {
        Report {
            program: program.to_string(),
            property,
            verdict: Verdict::Pass,
            witness: None,
            detail: detail.into(),
        }
    }

    fn skipped(program: &str, property: Property, detail: impl Into<String>) -> Report {
        Report {
            program: program.to_string(),
            property,
            verdict: Verdict::Skipped,
            witness: None,
            detail: detail.into(),
        }
    }
}

// ---------------------------------------------------------------------------
// Typed replay
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
enum Pairing {
    /// A dependent `to` frame: certified against the pushed motive and the
    /// thunk of the computation that was sequenced.
    DepTo { motive: Motive<CompType>, pushed: Comp },
}

#[derive(Debug, Clone)]
struct FrameInfo {
    out: CompType,
    pairing: Option<Pairing>,
}

#[derive(Debug, Clone)]
struct Tracked {
    cfg: Config,
    expected: CompType,
    frames: Vec<FrameInfo>,
    depth: usize,
}

fn dedup_key(t: &Tracked) -> u64 {
    use std::hash::{Hash, Hasher};
    let mut h = std::collections::hash_map::DefaultHasher::new();
    // output is irrelevant to typing; exclude it so printing loops collapse
    crate::pretty::comp(&t.cfg.comp).hash(&mut h);
    t.cfg.state.hash(&mut h);
    t.cfg.stack.len().hash(&mut h);
    for f in &t.cfg.stack {
        crate::pretty::comp(&machine::frame_term(f)).hash(&mut h);
    }
    crate::pretty::ctype(&t.expected).hash(&mut h);
    h.finish()
}

/// How many simultaneous branches a replay may track.
const REPLAY_BRANCH_CAP: usize = machine::BRANCH_CAP;

/// Verifies subject reduction for one (type-checked) program: every
/// configuration reachable within `fuel` steps, exploring all branches of
/// erratic choice, re-checks at the transported type.
pub fn check_subject_reduction(
    sig: &EffectSignature,
    name: &str,
    program: &Comp,
    expected: Option<&CompType>,
    fuel: usize,
) -> Report {
    let prop = Property::SubjectReduction;
    // establish the initial type
    let b0 = match expected {
        Some(b) => match check_comp(sig, &Context::empty(), program, b) {
            Ok(()) => b.clone(),
            Err(e) => {
                return Report {
                    program: name.into(),
                    property: prop,
                    verdict: Verdict::Fail,
                    witness: Some(Witness {
                        seed: None,
                        flags: sig.features,
                        step_index: 0,
                        config: crate::pretty::comp(program),
                        reason: format!("program does not type-check: {e}"),
                    }),
                    detail: "initial type check failed".into(),
                }
            }
        },
        None => match synth_comp(sig, &Context::empty(), program) {
            Ok(b) => b,
            Err(e) => {
                return Report {
                    program: name.into(),
                    property: prop,
                    verdict: Verdict::Fail,
                    witness: Some(Witness {
                        seed: None,
                        flags: sig.features,
                        step_index: 0,
                        config: crate::pretty::comp(program),
                        reason: format!("cannot synthesize program type: {e}"),
                    }),
                    detail: "initial type synthesis failed".into(),
                }
            }
        },
    };
    let cfg = match machine::inject(sig, program) {
        Ok(c) => c,
        Err(e) => {
            return Report {
                program: name.into(),
                property: prop,
                verdict: Verdict::Fail,
                witness: None,
                detail: format!("inject failed: {e}"),
            }
        }
    };
    // equality for pop certification: the ambient flags plus effect
    // equations, so that pure-effect reducts count as equal.
    let mut eq_sig = sig.clone();
    eq_sig.features.effect_eqs = true;

    let mut seen: HashSet<u64> = HashSet::new();
    let mut frontier: VecDeque<Tracked> = VecDeque::new();
    frontier.push_back(Tracked { cfg, expected: b0, frames: Vec::new(), depth: 0 });
    let mut steps_verified = 0usize;

    // memoized comp checks
    let mut check_cache: HashSet<u64> = HashSet::new();
    let mut check_at = |sig: &EffectSignature, comp: &Comp, b: &CompType| -> Result<(), String> {
        use std::hash::{Hash, Hasher};
        let mut h = std::collections::hash_map::DefaultHasher::new();
        crate::pretty::comp(comp).hash(&mut h);
        crate::pretty::ctype(b).hash(&mut h);
        let key = h.finish();
        if check_cache.contains(&key) {
            return Ok(());
        }
        match check_comp(sig, &Context::empty(), comp, b) {
            Ok(()) => {
                check_cache.insert(key);
                Ok(())
            }
            Err(e) => Err(e.to_string()),
        }
    };

    while let Some(t) = frontier.pop_front() {
        if t.depth >= fuel {
            continue;
        }
        let key = dedup_key(&t);
        if !seen.insert(key) {
            continue;
        }
        // 1. the configuration re-checks at the transported type
        if let Err(e) = check_at(sig, &t.cfg.comp, &t.expected) {
            return Report {
                program: name.into(),
                property: prop,
                verdict: Verdict::Fail,
                witness: Some(Witness {
                    seed: None,
                    flags: sig.features,
                    step_index: t.depth,
                    config: t.cfg.to_string(),
                    reason: e,
                }),
                detail: format!("configuration fails to re-check at {}", t.expected),
            };
        }
        steps_verified += 1;
        // 2. step and transport
        let succ = match transitions_with_transport(sig, &eq_sig, &t) {
            Ok(s) => s,
            Err((reason, at_pop)) => {
                return Report {
                    program: name.into(),
                    property: prop,
                    verdict: Verdict::Fail,
                    witness: Some(Witness {
                        seed: None,
                        flags: sig.features,
                        step_index: t.depth,
                        config: t.cfg.to_string(),
                        reason,
                    }),
                    detail: if at_pop {
                        "type not preserved at the return-pop step".into()
                    } else {
                        "transition left the typed fragment".into()
                    },
                }
            }
        };
        for s in succ {
            if frontier.len() < REPLAY_BRANCH_CAP {
                frontier.push_back(s);
            }
        }
    }
    Report::pass(name, prop, format!("verified {steps_verified} configurations"))
}

/// Applies the machine transition relation to a tracked configuration and
/// computes the successors' expected types. Returns `Err((reason, at_pop))`
/// if a pop fails its pairing certification or a push cannot re-derive the
/// intermediate type.
fn transitions_with_transport(
    sig: &EffectSignature,
    eq_sig: &EffectSignature,
    t: &Tracked,
) -> Result<Vec<Tracked>, (String, bool)> {
    let succ = match machine::transitions(sig, &t.cfg) {
        Transitions::Terminal => return Ok(Vec::new()),
        Transitions::Stuck(r) => return Err((format!("stuck: {r}"), false)),
        Transitions::Next(s) => s,
    };
    let mut out = Vec::new();
    for (label, cfg) in succ {
        let (expected, frames) = transport(sig, eq_sig, t, label, &cfg)?;
        out.push(Tracked { cfg, expected, frames, depth: t.depth + 1 });
    }
    Ok(out)
}

fn peel_annots(m: &Comp) -> &Comp {
    let mut m = m;
    while let Comp::Annot { comp, .. } = m {
        m = comp;
    }
    m
}

fn transport(
    sig: &EffectSignature,
    eq_sig: &EffectSignature,
    t: &Tracked,
    label: &'static str,
    _next: &Config,
) -> Result<(CompType, Vec<FrameInfo>), (String, bool)> {
    let comp = peel_annots(&t.cfg.comp);
    let mut frames = t.frames.clone();
    let expected = t.expected.clone();
    match label {
        "to-push" => {
            let (k, motive) = match comp {
                Comp::To { comp, motive, .. } => (comp.as_ref(), motive.clone()),
                _ => unreachable!(),
            };
            let fa = synth_comp(sig, &Context::empty(), k)
                .map_err(|e| (format!("cannot re-derive the sequenced type: {e}"), false))?;
            let pairing = motive.map(|m| Pairing::DepTo { motive: m, pushed: strip_annots(k) });
            frames.push(FrameInfo { out: expected, pairing });
            Ok((fa, frames))
        }
        "return-pop" => {
            let v = match comp {
                Comp::Return(v) => v.as_ref().clone(),
                _ => unreachable!(),
            };
            let info = frames.pop().expect("pop with empty tracked stack");
            match info.pairing {
                None => Ok((info.out, frames)),
                Some(Pairing::DepTo { motive, pushed }) => {
                    let actual = subst_ctype(&motive.body, &motive.binder, &tr(v));
                    let promised =
                        subst_ctype(&motive.body, &motive.binder, &Value::Thunk(Box::new(pushed)));
                    if ctypes_equal(eq_sig, &actual, &promised) {
                        Ok((actual, frames))
                    } else {
                        Err((
                            format!(
                                "dependent to: popped instantiation {} differs from the pushed one {}",
                                actual, promised
                            ),
                            true,
                        ))
                    }
                }
            }
        }
        "proj-push" => {
            let k = match comp {
                Comp::ProjI(_, k) => k.as_ref(),
                _ => unreachable!(),
            };
            let prod = synth_comp(sig, &Context::empty(), k)
                .map_err(|e| (format!("cannot re-derive the projected type: {e}"), false))?;
            frames.push(FrameInfo { out: expected, pairing: None });
            Ok((prod, frames))
        }
        "proj-pop" => {
            let info = frames.pop().expect("pop with empty tracked stack");
            Ok((info.out, frames))
        }
        "arg-push" => {
            let fun = match comp {
                Comp::App { fun, .. } => fun.as_ref(),
                _ => unreachable!(),
            };
            let pi = synth_comp(sig, &Context::empty(), fun)
                .map_err(|e| (format!("cannot re-derive the applied type: {e}"), false))?;
            frames.push(FrameInfo { out: expected, pairing: None });
            Ok((pi, frames))
        }
        "fun-pop" => {
            let info = frames.pop().expect("pop with empty tracked stack");
            Ok((info.out, frames))
        }
        "totensor-push" => {
            let k = match comp {
                Comp::ToTensor { comp, .. } => comp.as_ref(),
                _ => unreachable!(),
            };
            let st = synth_comp(sig, &Context::empty(), k)
                .map_err(|e| (format!("cannot re-derive the tensor type: {e}"), false))?;
            frames.push(FrameInfo { out: expected, pairing: None });
            Ok((st, frames))
        }
        "rtensor-pop" => {
            let info = frames.pop().expect("pop with empty tracked stack");
            Ok((info.out, frames))
        }
        // everything else preserves the expected type and the frame stack
        _ => Ok((expected, frames)),
    }
}

// ---------------------------------------------------------------------------
// Determinism and normalization
// ---------------------------------------------------------------------------

pub fn comp_contains(m: &Comp, pred: &dyn Fn(&Comp) -> bool) -> bool {
    fn walk(m: &Comp, pred: &dyn Fn(&Comp) -> bool) -> bool {
        if pred(m) {
            return true;
        }
        let in_value = |v: &Value| value_contains_comp(v, pred);
        match m {
            Comp::Nil | Comp::Diverge | Comp::Error(_) => false,
            Comp::LetV { val, body, .. } => in_value(val) || walk(body, pred),
            Comp::LetNil { bound, body } => walk(bound, pred) || walk(body, pred),
            Comp::Return(v) | Comp::Force(v) => in_value(v),
            Comp::To { comp, body, .. } | Comp::ToTensor { comp, body, .. } => {
                walk(comp, pred) || walk(body, pred)
            }
            Comp::PmSum { scrut, branches, .. } => {
                in_value(scrut) || branches.iter().any(|(_, k)| walk(k, pred))
            }
            Comp::PmUnit { scrut, body, .. }
            | Comp::PmPair { scrut, body, .. }
            | Comp::PmId { scrut, body, .. } => in_value(scrut) || walk(body, pred),
            Comp::LamI(ks) | Comp::Choose(ks) => ks.iter().any(|k| walk(k, pred)),
            Comp::ProjI(_, k)
            | Comp::Lam { body: k, .. }
            | Comp::Mu { body: k, .. }
            | Comp::Print(_, k)
            | Comp::Write(_, k)
            | Comp::Annot { comp: k, .. } => walk(k, pred),
            Comp::App { arg, fun } => in_value(arg) || walk(fun, pred),
            Comp::RetTensor { val, comp } => in_value(val) || walk(comp, pred),
            Comp::AppHom { comp, fun, .. } => walk(comp, pred) || in_value(fun),
            Comp::Read(bs) => bs.iter().any(|(_, k)| walk(k, pred)),
        }
    }
    fn value_contains_comp(v: &Value, pred: &dyn Fn(&Comp) -> bool) -> bool {
        match v {
            Value::Var(_) | Value::UnitV => false,
            Value::Thunk(m) | Value::LamNil(m) => walk(m, pred),
            Value::LetV { val, body, .. } => {
                value_contains_comp(val, pred) || value_contains_comp(body, pred)
            }
            Value::Inj(_, w) | Value::Refl(w) => value_contains_comp(w, pred),
            Value::Pair(a, b) => value_contains_comp(a, pred) || value_contains_comp(b, pred),
            Value::PmSum { scrut, branches, .. } => {
                value_contains_comp(scrut, pred)
                    || branches.iter().any(|(_, w)| value_contains_comp(w, pred))
            }
            Value::PmUnit { scrut, body, .. }
            | Value::PmPair { scrut, body, .. }
            | Value::PmId { scrut, body, .. } => {
                value_contains_comp(scrut, pred) || value_contains_comp(body, pred)
            }
            Value::LamV { body, .. } => value_contains_comp(body, pred),
            Value::AppV { arg, fun } => {
                value_contains_comp(arg, pred) || value_contains_comp(fun, pred)
            }
        }
    }
    walk(m, pred)
}

pub fn has_choose(m: &Comp) -> bool {
    comp_contains(m, &|c| matches!(c, Comp::Choose(_)))
}

pub fn has_mu_or_diverge(m: &Comp) -> bool {
    comp_contains(m, &|c| matches!(c, Comp::Mu { .. } | Comp::Diverge))
}

/// Determinism: absent erratic choice, at most one transition applies at
/// every reachable configuration.
pub fn check_determinism(sig: &EffectSignature, name: &str, program: &Comp, fuel: usize) -> Report {
    let prop = Property::Determinism;
    if has_choose(program) {
        return Report::skipped(name, prop, "contains erratic choice; out of the claim's scope");
    }
    let mut cfg = match machine::inject(sig, program) {
        Ok(c) => c,
        Err(e) => return Report::skipped(name, prop, format!("inject failed: {e}")),
    };
    let mut seen = HashSet::new();
    for i in 0..fuel {
        let (n, labels) = machine::applicable_transitions(sig, &cfg);
        if n > 1 {
            return Report {
                program: name.into(),
                property: prop,
                verdict: Verdict::Fail,
                witness: Some(Witness {
                    seed: None,
                    flags: sig.features,
                    step_index: i,
                    config: cfg.to_string(),
                    reason: format!("{n} transitions apply: {labels:?}"),
                }),
                detail: "determinism violated".into(),
            };
        }
        // terminality soundness: zero transitions exactly at terminal rows
        let terminal = machine::is_terminal(&cfg);
        if (n == 0) != terminal {
            return Report {
                program: name.into(),
                property: prop,
                verdict: Verdict::Fail,
                witness: Some(Witness {
                    seed: None,
                    flags: sig.features,
                    step_index: i,
                    config: cfg.to_string(),
                    reason: format!(
                        "applicable transitions = {n} but terminal-table match = {terminal}"
                    ),
                }),
                detail: "terminality mismatch".into(),
            };
        }
        if n == 0 {
            return Report::pass(name, prop, format!("deterministic for {i} steps to terminal"));
        }
        use std::hash::{Hash, Hasher};
        let mut h = std::collections::hash_map::DefaultHasher::new();
        cfg.to_string().hash(&mut h);
        if !seen.insert(h.finish()) {
            return Report::pass(name, prop, format!("deterministic cycle after {i} steps"));
        }
        match machine::step(sig, &cfg, &mut machine::Strategy::First) {
            Ok(succ) if !succ.is_empty() => cfg = succ.into_iter().next().unwrap().1,
            Ok(_) => return Report::pass(name, prop, "terminal"),
            Err(r) => {
                return Report {
                    program: name.into(),
                    property: prop,
                    verdict: Verdict::Fail,
                    witness: Some(Witness {
                        seed: None,
                        flags: sig.features,
                        step_index: i,
                        config: cfg.to_string(),
                        reason: format!("stuck: {r}"),
                    }),
                    detail: "stuck non-terminal configuration".into(),
                }
            }
        }
    }
    Report::pass(name, prop, "deterministic within fuel")
}

/// Strong normalization: absent divergence and recursion, every run reaches
/// a terminal configuration; fuel exhaustion is reported as inconclusive,
/// never as refutation.
pub fn check_normalization(
    sig: &EffectSignature,
    name: &str,
    program: &Comp,
    fuel: usize,
) -> Report {
    let prop = Property::Normalization;
    if has_mu_or_diverge(program) {
        return Report::skipped(name, prop, "contains mu or diverge; out of the claim's scope");
    }
    let outcome = machine::run(sig, program, fuel, machine::Strategy::All);
    let leaves = outcome.leaves();
    let mut inconclusive = 0usize;
    for leaf in &leaves {
        match leaf {
            machine::Outcome::Terminal(_) => {}
            machine::Outcome::FuelExhausted(c) => {
                inconclusive += 1;
                let _ = c;
            }
            machine::Outcome::Stuck(c, r) => {
                return Report {
                    program: name.into(),
                    property: prop,
                    verdict: Verdict::Fail,
                    witness: Some(Witness {
                        seed: None,
                        flags: sig.features,
                        step_index: 0,
                        config: c.to_string(),
                        reason: format!("stuck: {r}"),
                    }),
                    detail: "stuck configuration".into(),
                }
            }
            machine::Outcome::Branches(_) => unreachable!("flattened"),
        }
    }
    if inconclusive > 0 {
        return Report {
            program: name.into(),
            property: prop,
            verdict: Verdict::InconclusiveFuel,
            witness: None,
            detail: format!("{inconclusive} branch(es) did not terminate within fuel"),
        };
    }
    Report::pass(name, prop, format!("{} branch(es) terminal", leaves.len()))
}

/// An independent recursive big-step evaluator for the effect-free
/// fragment, used as an oracle against the machine.
pub fn eval_effect_free(m: &Comp) -> Result<Comp, String> {
    use crate::kernel::normalize_value as nf;
    match peel_annots(m) {
        Comp::Return(v) => Ok(Comp::Return(Box::new(nf(v)))),
        Comp::Lam { .. } | Comp::LamI(_) => Ok(peel_annots(m).clone()),
        Comp::RetTensor { val, comp } => Ok(Comp::RetTensor {
            val: Box::new(nf(val)),
            comp: comp.clone(),
        }),
        Comp::LetV { x, val, body, .. } => eval_effect_free(&subst_comp(body, x, &nf(val))),
        Comp::LetNil { bound, body } => eval_effect_free(&subst_stoup(body, bound)),
        Comp::To { comp, x, body, .. } => match eval_effect_free(comp)? {
            Comp::Return(v) => eval_effect_free(&subst_comp(body, x, &v)),
            other => Err(format!("to of a non-returner: {other}")),
        },
        Comp::Force(v) => match nf(v) {
            Value::Thunk(inner) => eval_effect_free(&inner),
            other => Err(format!("force of a non-thunk: {other}")),
        },
        Comp::PmSum { scrut, branches, .. } => match nf(scrut) {
            Value::Inj(j, w) => match j.checked_sub(1).and_then(|j| branches.get(j)) {
                Some((x, k)) => eval_effect_free(&subst_comp(k, x, &w)),
                None => Err("injection out of range".into()),
            },
            other => Err(format!("pm of a non-injection: {other}")),
        },
        Comp::PmUnit { scrut, body, .. } => match nf(scrut) {
            Value::UnitV => eval_effect_free(body),
            other => Err(format!("pm of a non-unit: {other}")),
        },
        Comp::PmPair { scrut, x, y, body, .. } => match nf(scrut) {
            Value::Pair(a, b) => {
                let t = subst_comp(body, x, &a);
                eval_effect_free(&subst_comp(&t, y, &b))
            }
            other => Err(format!("pm of a non-pair: {other}")),
        },
        Comp::PmId { scrut, binder, body, .. } => match nf(scrut) {
            Value::Refl(w) => eval_effect_free(&subst_comp(body, binder, &w)),
            other => Err(format!("pm of a non-refl: {other}")),
        },
        Comp::ProjI(i, k) => match eval_effect_free(k)? {
            Comp::LamI(ks) => match i.checked_sub(1).and_then(|i| ks.get(i)) {
                Some(k) => eval_effect_free(k),
                None => Err("projection out of range".into()),
            },
            other => Err(format!("projection of a non-tuple: {other}")),
        },
        Comp::App { arg, fun } => match eval_effect_free(fun)? {
            Comp::Lam { x, body } => eval_effect_free(&subst_comp(&body, &x, &nf(arg))),
            other => Err(format!("application of a non-lambda: {other}")),
        },
        Comp::ToTensor { comp, x, body } => match eval_effect_free(comp)? {
            Comp::RetTensor { val, comp: k } => {
                let t = subst_comp(body, x, &val);
                eval_effect_free(&subst_stoup(&t, &k))
            }
            other => Err(format!("tensor elimination of a non-tensor: {other}")),
        },
        Comp::AppHom { comp, fun, .. } => match nf(fun) {
            Value::LamNil(l) => eval_effect_free(&subst_stoup(&l, comp)),
            other => Err(format!("application of a non-homomorphism: {other}")),
        },
        other => Err(format!("effectful or open computation: {other}")),
    }
}

// ---------------------------------------------------------------------------
// Corpus driver
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize)]
pub struct CorpusSummary {
    pub reports: Vec<CorpusReport>,
    pub unexpected_failures: usize,
    pub expected_failures: usize,
    pub passes: usize,
    pub skipped: usize,
    pub inconclusive: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct CorpusReport {
    #[serde(flatten)]
    pub report: Report,
    pub expected_fail: bool,
    pub unexpected: bool,
}

/// Runs subject reduction, determinism and normalization over a set of
/// parsed programs, honoring `EXPECT-FAIL` markers.
pub fn run_reports(items: Vec<(String, EffectSignature, Comp, Vec<String>)>, fuel: usize) -> CorpusSummary {
    let mut reports = Vec::new();
    for (name, sig, comp, expect_fail) in items {
        let rs = vec![
            check_subject_reduction(&sig, &name, &comp, None, fuel),
            check_determinism(&sig, &name, &comp, fuel),
            check_normalization(&sig, &name, &comp, fuel),
        ];
        for r in rs {
            let expected_fail = expect_fail.iter().any(|p| p == &r.property.to_string());
            let unexpected = match r.verdict {
                Verdict::Fail => !expected_fail,
                Verdict::Pass => expected_fail,
                _ => false,
            };
            reports.push(CorpusReport { report: r, expected_fail, unexpected });
        }
    }
    summarize(reports)
}

pub fn summarize(reports: Vec<CorpusReport>) -> CorpusSummary {
    let unexpected_failures = reports.iter().filter(|r| r.unexpected).count();
    let expected_failures = reports
        .iter()
        .filter(|r| r.expected_fail && r.report.verdict == Verdict::Fail)
        .count();
    let passes = reports.iter().filter(|r| r.report.verdict == Verdict::Pass).count();
    let skipped = reports.iter().filter(|r| r.report.verdict == Verdict::Skipped).count();
    let inconclusive = reports
        .iter()
        .filter(|r| r.report.verdict == Verdict::InconclusiveFuel)
        .count();
    CorpusSummary { reports, unexpected_failures, expected_failures, passes, skipped, inconclusive }
}

/// Loads every `.dcbpv` and `.dtt` file under `path` (one level) and runs
/// the metatheory checks on their main computations.
pub fn run_corpus(path: &std::path::Path, flags: Features, fuel: usize) -> Result<CorpusSummary, String> {
    let mut items = Vec::new();
    let mut files: Vec<std::path::PathBuf> = Vec::new();
    if path.is_file() {
        files.push(path.to_path_buf());
    } else {
        let rd = std::fs::read_dir(path).map_err(|e| format!("{}: {e}", path.display()))?;
        for entry in rd {
            let entry = entry.map_err(|e| e.to_string())?;
            let p = entry.path();
            if p.extension().is_some_and(|e| e == "dcbpv" || e == "dtt") {
                files.push(p);
            }
        }
        files.sort();
    }
    for p in files {
        let text = std::fs::read_to_string(&p).map_err(|e| format!("{}: {e}", p.display()))?;
        let name = p.file_name().unwrap().to_string_lossy().to_string();
        if p.extension().is_some_and(|e| e == "dtt") {
            let prog = crate::surface::parse_surface_program(&text)
                .map_err(|e| format!("{name}: {e}"))?;
            let mut sig = prog.signature.clone();
            merge_flags(&mut sig.features, flags);
            let image = crate::translate::translate_cbn(&prog.main, sig.features.plus);
            if synth_comp(&sig, &Context::empty(), &image).is_ok() {
                items.push((format!("{name} (cbn image)"), sig, image, Vec::new()));
            }
        } else {
            let prog = crate::parser::parse_program(&text).map_err(|e| format!("{name}: {e}"))?;
            let mut sig = prog.signature.clone();
            merge_flags(&mut sig.features, flags);
            if let Some(main) = prog.main {
                items.push((name, sig, main, prog.expect_fail.clone()));
            }
        }
    }
    Ok(run_reports(items, fuel))
}

pub fn merge_flags(into: &mut Features, from: Features) {
    into.plus |= from.plus;
    into.proj_products |= from.proj_products;
    into.eta_thunk |= from.eta_thunk;
    into.eta_fun |= from.eta_fun;
    into.effect_eqs |= from.effect_eqs;
}

// ---------------------------------------------------------------------------
// Ground comparison helpers (adequacy)
// ---------------------------------------------------------------------------

/// The injection index of a ground terminal outcome `return <j, _>`, or
/// `return ()` as index 1 of the unit observation.
pub fn ground_index(outcome: &machine::Outcome) -> Option<usize> {
    match outcome {
        machine::Outcome::Terminal(c) => match peel_annots(&c.comp) {
            Comp::Return(v) => match kernel::normalize_value(v) {
                Value::Inj(j, _) => Some(j),
                Value::UnitV => Some(1),
                _ => None,
            },
            _ => None,
        },
        _ => None,
    }
}

/// Compare two terminal outcomes up to alpha on the computation plus
/// output and state.
pub fn outcomes_agree(a: &machine::Outcome, b: &machine::Outcome) -> bool {
    match (a, b) {
        (machine::Outcome::Terminal(c1), machine::Outcome::Terminal(c2)) => {
            alpha_eq_comp(peel_annots(&c1.comp), peel_annots(&c2.comp))
                && c1.out == c2.out
                && c1.state == c2.state
        }
        _ => false,
    }
}
