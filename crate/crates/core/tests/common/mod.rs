//! Shared test fixtures: one golden case per machine transition row, and a
//! raw AST fuzzer over the full grammar for round-trip testing.

use dcbpv::ast::*;
use dcbpv::machine::{Config, Frame, SplitMix64};
use dcbpv::parser::{parse_open_comp, parse_open_value};

pub struct GoldenCase {
    pub name: &'static str,
    pub rule: &'static str,
    pub before: Config,
    pub after: Config,
}

pub fn test_sig() -> EffectSignature {
    let mut sig = EffectSignature::default();
    sig.states = vec!["s0".into(), "s1".into()];
    sig.initial_state = "s0".into();
    sig.errors.insert("e".into());
    sig.monoid_alphabet.insert("a".into());
    sig
}

fn cfg(comp: &str, stack: Vec<Frame>, out: &[&str], state: &str) -> Config {
    Config {
        comp: parse_open_comp(comp, &["v", "w"]).unwrap(),
        stack,
        out: out.iter().map(|s| s.to_string()).collect(),
        state: state.to_string(),
    }
}

fn to_frame(x: &str, body: &str) -> Frame {
    Frame::To {
        x: x.to_string(),
        body: parse_open_comp(body, &[x, "v", "w"]).unwrap(),
        motive: None,
    }
}

fn tensor_frame(x: &str, body: &str) -> Frame {
    Frame::Tensor { x: x.to_string(), body: parse_open_comp(body, &[x]).unwrap() }
}

fn arg_frame(v: &str) -> Frame {
    Frame::Arg(parse_open_value(v, &[]).unwrap())
}

/// One golden case per transition row of the machine figures: the basic
/// rows, the effect rows, the identity-witness rows, and the rows for the
/// extra connectives.
pub fn golden_cases() -> Vec<GoldenCase> {
    let mut cases = Vec::new();
    let mut add = |name, rule, before: Config, after: Config| {
        cases.push(GoldenCase { name, rule, before, after });
    };

    // ---- basic machine rows ----
    add(
        "let-norm",
        "let-norm",
        cfg("let x be (pm () as () in ()) in return x", vec![], &[], "s0"),
        cfg("let x be () in return x", vec![], &[], "s0"),
    );
    add(
        "let-subst",
        "let-subst",
        cfg("let x be () in return x", vec![], &[], "s0"),
        cfg("return ()", vec![], &[], "s0"),
    );
    add(
        "letnil-subst",
        "letnil-subst",
        cfg("let nil be return () in (nil to x in return x)", vec![], &[], "s0"),
        cfg("return () to x in return x", vec![], &[], "s0"),
    );
    add(
        "to-push",
        "to-push",
        cfg("return () to x in return <x, x>", vec![], &[], "s0"),
        cfg("return ()", vec![to_frame("x", "return <x, x>")], &[], "s0"),
    );
    add(
        "return-norm",
        "return-norm",
        cfg("return (pm <(), ()> as <x, y> in x)", vec![], &[], "s0"),
        cfg("return ()", vec![], &[], "s0"),
    );
    add(
        "return-pop",
        "return-pop",
        cfg("return ()", vec![to_frame("x", "return <x, x>")], &[], "s0"),
        cfg("return <(), ()>", vec![], &[], "s0"),
    );
    add(
        "force-norm",
        "force-norm",
        cfg("force (let u be thunk (return ()) in u)", vec![], &[], "s0"),
        cfg("force (thunk (return ()))", vec![], &[], "s0"),
    );
    add(
        "force-thunk",
        "force-thunk",
        cfg("force (thunk (return ()))", vec![], &[], "s0"),
        cfg("return ()", vec![], &[], "s0"),
    );
    add(
        "pm-sum-norm",
        "pm-sum-norm",
        cfg(
            "pm (let u be <1, ()> in u) as <i, x> in {1 -> return x, 2 -> diverge}",
            vec![],
            &[],
            "s0",
        ),
        cfg("pm <1, ()> as <i, x> in {1 -> return x, 2 -> diverge}", vec![], &[], "s0"),
    );
    add(
        "pm-sum-beta",
        "pm-sum-beta",
        cfg("pm <1, ()> as <i, x> in {1 -> return x, 2 -> diverge}", vec![], &[], "s0"),
        cfg("return ()", vec![], &[], "s0"),
    );
    add(
        "pm-unit-norm",
        "pm-unit-norm",
        cfg("pm (pm () as () in ()) as () in return ()", vec![], &[], "s0"),
        cfg("pm () as () in return ()", vec![], &[], "s0"),
    );
    add(
        "pm-unit-beta",
        "pm-unit-beta",
        cfg("pm () as () in return ()", vec![], &[], "s0"),
        cfg("return ()", vec![], &[], "s0"),
    );
    add(
        "pm-pair-norm",
        "pm-pair-norm",
        cfg("pm (let u be <(), ()> in u) as <x, y> in return <y, x>", vec![], &[], "s0"),
        cfg("pm <(), ()> as <x, y> in return <y, x>", vec![], &[], "s0"),
    );
    add(
        "pm-pair-beta",
        "pm-pair-beta",
        cfg("pm <(), <2, ()>> as <x, y> in return <y, x>", vec![], &[], "s0"),
        cfg("return <<2, ()>, ()>", vec![], &[], "s0"),
    );
    add(
        "proj-push",
        "proj-push",
        cfg("proj 2 (lam {1 -> return (), 2 -> diverge})", vec![], &[], "s0"),
        cfg("lam {1 -> return (), 2 -> diverge}", vec![Frame::Idx(2)], &[], "s0"),
    );
    add(
        "proj-pop",
        "proj-pop",
        cfg("lam {1 -> return (), 2 -> diverge}", vec![Frame::Idx(2)], &[], "s0"),
        cfg("diverge", vec![], &[], "s0"),
    );
    add(
        "arg-norm",
        "arg-norm",
        cfg("(pm () as () in ()) ' lam x. return x", vec![], &[], "s0"),
        cfg("() ' lam x. return x", vec![], &[], "s0"),
    );
    add(
        "arg-push",
        "arg-push",
        cfg("() ' lam x. return x", vec![], &[], "s0"),
        cfg("lam x. return x", vec![arg_frame("()")], &[], "s0"),
    );
    add(
        "fun-pop",
        "fun-pop",
        cfg("lam x. return x", vec![arg_frame("()")], &[], "s0"),
        cfg("return ()", vec![], &[], "s0"),
    );

    // ---- divergence, recursion, erratic choice ----
    add("diverge-loop", "diverge-loop", cfg("diverge", vec![], &[], "s0"), cfg("diverge", vec![], &[], "s0"));
    add(
        "mu-unroll",
        "mu-unroll",
        cfg("mu z. force z", vec![], &[], "s0"),
        cfg("force (thunk (mu z. force z))", vec![], &[], "s0"),
    );
    add(
        "choose-first",
        "choose",
        cfg("choose {return (), diverge}", vec![], &[], "s0"),
        cfg("return ()", vec![], &[], "s0"),
    );

    // ---- printing and global state ----
    add(
        "print",
        "print",
        cfg("print \"a\" (return ())", vec![], &[], "s0"),
        cfg("return ()", vec![], &["a"], "s0"),
    );
    add(
        "write",
        "write",
        cfg("write s1 (return ())", vec![], &[], "s0"),
        cfg("return ()", vec![], &[], "s1"),
    );
    add(
        "read",
        "read",
        cfg("read {s0 -> return (), s1 -> diverge}", vec![], &[], "s1"),
        cfg("diverge", vec![], &[], "s1"),
    );

    // ---- identity witnesses ----
    add(
        "pm-id-norm",
        "pm-id-norm",
        cfg("pm (let u be refl () in u) as refl x in return x", vec![], &[], "s0"),
        cfg("pm (refl ()) as refl x in return x", vec![], &[], "s0"),
    );
    add(
        "pm-id-beta",
        "pm-id-beta",
        cfg("pm (refl ()) as refl x in return <x, x>", vec![], &[], "s0"),
        cfg("return <(), ()>", vec![], &[], "s0"),
    );

    // ---- extra connectives ----
    add(
        "totensor-push",
        "totensor-push",
        cfg("rtensor () (return ()) to rtensor x in return x", vec![], &[], "s0"),
        cfg("rtensor () (return ())", vec![tensor_frame("x", "return x")], &[], "s0"),
    );
    add(
        "rtensor-norm",
        "rtensor-norm",
        cfg("rtensor (pm () as () in ()) (return ())", vec![], &[], "s0"),
        cfg("rtensor () (return ())", vec![], &[], "s0"),
    );
    add(
        "rtensor-pop",
        "rtensor-pop",
        cfg(
            "rtensor () (return ())",
            vec![tensor_frame("x", "nil to y in return <x, y>")],
            &[],
            "s0",
        ),
        cfg("return () to y in return <(), y>", vec![], &[], "s0"),
    );
    add(
        "apphom-norm",
        "apphom-norm",
        cfg("return () ' (let h be (lam nil. nil) in h)", vec![], &[], "s0"),
        cfg("return () ' (lam nil. nil)", vec![], &[], "s0"),
    );
    add(
        "apphom-beta",
        "apphom-beta",
        cfg("return () ' (lam nil. (nil to x in return <x, x>))", vec![], &[], "s0"),
        cfg("return () to x in return <x, x>", vec![], &[], "s0"),
    );

    cases
}

// ---------------------------------------------------------------------------
// Raw AST fuzzer
// ---------------------------------------------------------------------------

pub struct Fuzzer {
    rng: SplitMix64,
    counter: u64,
}

impl Fuzzer {
    pub fn new(seed: u64) -> Fuzzer {
        Fuzzer { rng: SplitMix64::new(seed), counter: 0 }
    }

    fn pick(&mut self, n: usize) -> usize {
        (self.rng.next_u64() % n as u64) as usize
    }

    fn name(&mut self, scope: &[Ident]) -> Ident {
        if !scope.is_empty() && self.pick(2) == 0 {
            scope[self.pick(scope.len())].clone()
        } else {
            self.counter += 1;
            format!("v{}", self.counter)
        }
    }

    fn fresh(&mut self) -> Ident {
        self.counter += 1;
        format!("b{}", self.counter)
    }

    pub fn vtype(&mut self, scope: &[Ident], d: usize) -> ValueType {
        if d == 0 {
            return ValueType::Unit;
        }
        match self.pick(7) {
            0 => ValueType::Unit,
            1 => {
                let n = self.pick(3);
                ValueType::FinSum((0..n).map(|_| self.vtype(scope, d - 1)).collect())
            }
            2 => ValueType::U(Box::new(self.ctype(scope, d - 1))),
            3 => {
                let x = self.fresh();
                let a = self.vtype(scope, d - 1);
                let mut scope2 = scope.to_vec();
                scope2.push(x.clone());
                ValueType::Sigma(x, Box::new(a), Box::new(self.vtype(&scope2, d - 1)))
            }
            4 => ValueType::Id(
                Box::new(self.vtype(scope, d - 1)),
                Box::new(self.value(scope, d - 1)),
                Box::new(self.value(scope, d - 1)),
            ),
            5 => {
                let x = self.fresh();
                let a = self.vtype(scope, d - 1);
                let mut scope2 = scope.to_vec();
                scope2.push(x.clone());
                ValueType::Pi(x, Box::new(a), Box::new(self.vtype(&scope2, d - 1)))
            }
            _ => ValueType::Hom(
                Box::new(self.ctype(scope, d - 1)),
                Box::new(self.ctype(scope, d - 1)),
            ),
        }
    }

    pub fn ctype(&mut self, scope: &[Ident], d: usize) -> CompType {
        if d == 0 {
            return CompType::F(Box::new(ValueType::Unit));
        }
        match self.pick(5) {
            0 | 1 => CompType::F(Box::new(self.vtype(scope, d - 1))),
            2 => {
                let n = self.pick(3);
                CompType::FinProd((0..n).map(|_| self.ctype(scope, d - 1)).collect())
            }
            3 => {
                let x = self.fresh();
                let a = self.vtype(scope, d - 1);
                let mut scope2 = scope.to_vec();
                scope2.push(x.clone());
                CompType::FunPi(x, Box::new(a), Box::new(self.ctype(&scope2, d - 1)))
            }
            _ => {
                let x = self.fresh();
                let a = self.vtype(scope, d - 1);
                let mut scope2 = scope.to_vec();
                scope2.push(x.clone());
                CompType::SigmaF(x, Box::new(a), Box::new(self.ctype(&scope2, d - 1)))
            }
        }
    }

    fn motive_vt(&mut self, scope: &[Ident], d: usize) -> Option<Motive<ValueType>> {
        if self.pick(2) == 0 {
            return None;
        }
        let z = self.fresh();
        let mut scope2 = scope.to_vec();
        scope2.push(z.clone());
        Some(Motive { binder: z, body: Box::new(self.vtype(&scope2, d)) })
    }

    fn motive_ct(&mut self, scope: &[Ident], d: usize) -> Option<Motive<CompType>> {
        if self.pick(2) == 0 {
            return None;
        }
        let z = self.fresh();
        let mut scope2 = scope.to_vec();
        scope2.push(z.clone());
        Some(Motive { binder: z, body: Box::new(self.ctype(&scope2, d)) })
    }

    fn opt_vtype(&mut self, scope: &[Ident], d: usize) -> Option<Box<ValueType>> {
        if self.pick(2) == 0 {
            None
        } else {
            Some(Box::new(self.vtype(scope, d)))
        }
    }

    pub fn value(&mut self, scope: &[Ident], d: usize) -> Value {
        if d == 0 {
            return if scope.is_empty() || self.pick(2) == 0 {
                Value::UnitV
            } else {
                Value::Var(scope[self.pick(scope.len())].clone())
            };
        }
        match self.pick(12) {
            0 => {
                if scope.is_empty() {
                    Value::UnitV
                } else {
                    Value::Var(scope[self.pick(scope.len())].clone())
                }
            }
            1 => {
                let x = self.fresh();
                let ann = self.opt_vtype(scope, d - 1);
                let val = self.value(scope, d - 1);
                let mut scope2 = scope.to_vec();
                scope2.push(x.clone());
                Value::LetV { x, ann, val: Box::new(val), body: Box::new(self.value(&scope2, d - 1)) }
            }
            2 => Value::Thunk(Box::new(self.comp(scope, d - 1))),
            3 => Value::Inj(1 + self.pick(3), Box::new(self.value(scope, d - 1))),
            4 => Value::Pair(
                Box::new(self.value(scope, d - 1)),
                Box::new(self.value(scope, d - 1)),
            ),
            5 => Value::Refl(Box::new(self.value(scope, d - 1))),
            6 => {
                let n = self.pick(3);
                let b = self.fresh();
                let mut scope2 = scope.to_vec();
                scope2.push(b.clone());
                let branches = (0..n).map(|_| (b.clone(), self.value(&scope2, d - 1))).collect();
                Value::PmSum {
                    scrut: Box::new(self.value(scope, d - 1)),
                    scrut_ty: self.opt_vtype(scope, d - 1),
                    branches,
                    motive: self.motive_vt(scope, d - 1),
                }
            }
            7 => Value::PmUnit {
                scrut: Box::new(self.value(scope, d - 1)),
                body: Box::new(self.value(scope, d - 1)),
                motive: self.motive_vt(scope, d - 1),
            },
            8 => {
                let x = self.fresh();
                let y = self.fresh();
                let mut scope2 = scope.to_vec();
                scope2.push(x.clone());
                scope2.push(y.clone());
                Value::PmPair {
                    scrut: Box::new(self.value(scope, d - 1)),
                    scrut_ty: self.opt_vtype(scope, d - 1),
                    x,
                    y,
                    body: Box::new(self.value(&scope2, d - 1)),
                    motive: self.motive_vt(scope, d - 1),
                }
            }
            9 => {
                let x = self.fresh();
                let mut scope2 = scope.to_vec();
                scope2.push(x.clone());
                let motive = if self.pick(2) == 0 {
                    None
                } else {
                    let l = self.fresh();
                    let r = self.fresh();
                    let p = self.fresh();
                    let mut scope3 = scope.to_vec();
                    scope3.extend([l.clone(), r.clone(), p.clone()]);
                    Some(IdMotive {
                        left: l,
                        right: r,
                        witness: p,
                        body: Box::new(self.vtype(&scope3, d - 1)),
                    })
                };
                Value::PmId {
                    scrut: Box::new(self.value(scope, d - 1)),
                    scrut_ty: self.opt_vtype(scope, d - 1),
                    binder: x,
                    body: Box::new(self.value(&scope2, d - 1)),
                    motive,
                }
            }
            10 => {
                let x = self.fresh();
                let mut scope2 = scope.to_vec();
                scope2.push(x.clone());
                Value::LamV { x, body: Box::new(self.value(&scope2, d - 1)) }
            }
            _ => {
                if self.pick(2) == 0 {
                    Value::AppV {
                        arg: Box::new(self.value(scope, d - 1)),
                        fun: Box::new(self.value(scope, d - 1)),
                    }
                } else {
                    Value::LamNil(Box::new(self.comp(scope, d - 1)))
                }
            }
        }
    }

    pub fn comp(&mut self, scope: &[Ident], d: usize) -> Comp {
        if d == 0 {
            return match self.pick(3) {
                0 => Comp::Diverge,
                1 => Comp::Return(Box::new(Value::UnitV)),
                _ => Comp::Error("e".into()),
            };
        }
        match self.pick(16) {
            0 => Comp::Return(Box::new(self.value(scope, d - 1))),
            1 => Comp::Force(Box::new(self.value(scope, d - 1))),
            2 => {
                let x = self.fresh();
                let mut scope2 = scope.to_vec();
                scope2.push(x.clone());
                Comp::To {
                    comp: Box::new(self.comp(scope, d - 1)),
                    x,
                    body: Box::new(self.comp(&scope2, d - 1)),
                    motive: self.motive_ct(scope, d - 1),
                }
            }
            3 => {
                let x = self.fresh();
                let ann = self.opt_vtype(scope, d - 1);
                let val = self.value(scope, d - 1);
                let mut scope2 = scope.to_vec();
                scope2.push(x.clone());
                Comp::LetV { x, ann, val: Box::new(val), body: Box::new(self.comp(&scope2, d - 1)) }
            }
            4 => Comp::LetNil {
                bound: Box::new(self.comp(scope, d - 1)),
                body: Box::new(self.comp(scope, d - 1)),
            },
            5 => {
                let n = self.pick(3);
                let b = self.fresh();
                let mut scope2 = scope.to_vec();
                scope2.push(b.clone());
                let branches = (0..n).map(|_| (b.clone(), self.comp(&scope2, d - 1))).collect();
                Comp::PmSum {
                    scrut: Box::new(self.value(scope, d - 1)),
                    scrut_ty: self.opt_vtype(scope, d - 1),
                    branches,
                    motive: self.motive_ct(scope, d - 1),
                }
            }
            6 => {
                let x = self.fresh();
                let y = self.fresh();
                let mut scope2 = scope.to_vec();
                scope2.extend([x.clone(), y.clone()]);
                Comp::PmPair {
                    scrut: Box::new(self.value(scope, d - 1)),
                    scrut_ty: self.opt_vtype(scope, d - 1),
                    x,
                    y,
                    body: Box::new(self.comp(&scope2, d - 1)),
                    motive: self.motive_ct(scope, d - 1),
                }
            }
            7 => {
                let n = self.pick(3);
                Comp::LamI((0..n).map(|_| self.comp(scope, d - 1)).collect())
            }
            8 => Comp::ProjI(1 + self.pick(2), Box::new(self.comp(scope, d - 1))),
            9 => {
                let x = self.fresh();
                let mut scope2 = scope.to_vec();
                scope2.push(x.clone());
                Comp::Lam { x, body: Box::new(self.comp(&scope2, d - 1)) }
            }
            10 => Comp::App {
                arg: Box::new(self.value(scope, d - 1)),
                fun: Box::new(self.comp(scope, d - 1)),
            },
            11 => Comp::RetTensor {
                val: Box::new(self.value(scope, d - 1)),
                comp: Box::new(self.comp(scope, d - 1)),
            },
            12 => {
                let x = self.fresh();
                let mut scope2 = scope.to_vec();
                scope2.push(x.clone());
                Comp::ToTensor {
                    comp: Box::new(self.comp(scope, d - 1)),
                    x,
                    body: Box::new(self.comp(&scope2, d - 1)),
                }
            }
            13 => Comp::AppHom {
                comp: Box::new(self.comp(scope, d - 1)),
                fun: Box::new(self.value(scope, d - 1)),
                fun_ty: self.opt_vtype(scope, d - 1),
            },
            14 => match self.pick(6) {
                0 => Comp::Diverge,
                1 => {
                    let z = self.fresh();
                    let mut scope2 = scope.to_vec();
                    scope2.push(z.clone());
                    Comp::Mu { z, body: Box::new(self.comp(&scope2, d - 1)) }
                }
                2 => Comp::Print(
                    vec![["a", "b"][self.pick(2)].to_string()],
                    Box::new(self.comp(scope, d - 1)),
                ),
                3 => {
                    let n = 1 + self.pick(2);
                    Comp::Choose((0..n).map(|_| self.comp(scope, d - 1)).collect())
                }
                4 => Comp::Error("e".into()),
                _ => Comp::Write("s1".into(), Box::new(self.comp(scope, d - 1))),
            },
            _ => match self.pick(3) {
                0 => Comp::Read(vec![
                    ("s0".into(), self.comp(scope, d - 1)),
                    ("s1".into(), self.comp(scope, d - 1)),
                ]),
                1 => Comp::Annot {
                    comp: Box::new(self.comp(scope, d - 1)),
                    ty: Box::new(self.ctype(scope, d - 1)),
                },
                _ => {
                    let x = self.fresh();
                    let mut scope2 = scope.to_vec();
                    scope2.push(x.clone());
                    Comp::PmId {
                        scrut: Box::new(self.value(scope, d - 1)),
                        scrut_ty: self.opt_vtype(scope, d - 1),
                        binder: x,
                        body: Box::new(self.comp(&scope2, d - 1)),
                        motive: None,
                    }
                }
            },
        }
    }
}
