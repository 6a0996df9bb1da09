//! Call-by-value and call-by-name elaboration of the surface calculus into
//! the core, and the observational type-isomorphism witnesses.
//!
//! Both translations are total structural recursions over raw surface
//! syntax. Call-by-name images use non-dependent motives unless the caller
//! requests plus-mode output (then surface motives become strong motives on
//! the elaborated eliminators). The call-by-value translation needs
//! dependent sequencing wherever the surface program is genuinely
//! dependent; without plus-mode output those images are rejected by the
//! kernel, which is the expected behaviour.

use crate::ast::*;
use crate::kernel::tr;
use crate::surface::*;
use std::collections::BTreeSet;

fn fresh_avoiding(base: &str, avoid: &BTreeSet<Ident>) -> Ident {
    freshen(base, avoid)
}

fn fresh_for_comps(base: &str, comps: &[&Comp]) -> Ident {
    let mut avoid = BTreeSet::new();
    for c in comps {
        avoid.extend(free_idents_comp(c));
    }
    fresh_avoiding(base, &avoid)
}

// ---------------------------------------------------------------------------
// Call-by-name
// ---------------------------------------------------------------------------

pub fn translate_cbn_type(t: &SurfaceType, plus: bool) -> CompType {
    match t {
        SurfaceType::Sum(items) => CompType::F(Box::new(ValueType::FinSum(
            items.iter().map(|b| ValueType::U(Box::new(translate_cbn_type(b, plus)))).collect(),
        ))),
        SurfaceType::Unit => CompType::F(Box::new(ValueType::Unit)),
        SurfaceType::Sigma(x, b, b2) => CompType::F(Box::new(ValueType::Sigma(
            x.clone(),
            Box::new(ValueType::U(Box::new(translate_cbn_type(b, plus)))),
            Box::new(ValueType::U(Box::new(translate_cbn_type(b2, plus)))),
        ))),
        SurfaceType::Id(b, m, n) => CompType::F(Box::new(ValueType::Id(
            Box::new(ValueType::U(Box::new(translate_cbn_type(b, plus)))),
            Box::new(Value::Thunk(Box::new(translate_cbn(m, plus)))),
            Box::new(Value::Thunk(Box::new(translate_cbn(n, plus)))),
        ))),
        SurfaceType::ProdI(items) => {
            CompType::FinProd(items.iter().map(|b| translate_cbn_type(b, plus)).collect())
        }
        SurfaceType::Pi(x, b, b2) => CompType::FunPi(
            x.clone(),
            Box::new(ValueType::U(Box::new(translate_cbn_type(b, plus)))),
            Box::new(translate_cbn_type(b2, plus)),
        ),
    }
}

/// Strong motives for an eliminated scrutinee: the motive type as a
/// function of the `to`-bound thunk, and of the pattern-bound value.
fn cbn_motives(
    motive: &Option<SurfaceMotive>,
    plus: bool,
) -> (Option<Motive<CompType>>, Option<Motive<CompType>>) {
    if !plus {
        return (None, None);
    }
    match motive {
        None => (None, None),
        Some(m) => {
            let c = translate_cbn_type(&m.body, plus);
            let mut avoid = free_idents_ctype(&c);
            avoid.insert(m.binder.clone());
            let w = fresh_avoiding("w", &avoid);
            let outer = Motive {
                binder: w.clone(),
                body: Box::new(subst_ctype(&c, &m.binder, &Value::Var(w.clone()))),
            };
            let z = fresh_avoiding("z", &avoid);
            let inner = Motive {
                binder: z.clone(),
                body: Box::new(subst_ctype(&c, &m.binder, &tr(Value::Var(z.clone())))),
            };
            (Some(outer), Some(inner))
        }
    }
}

/// The core value type of an annotated surface scrutinee under the CBN
/// image (its translation with the outer `F` stripped), when derivable.
fn cbn_scrut_vtype(scrut: &SurfaceTerm, plus: bool) -> Option<Box<ValueType>> {
    match scrut {
        SurfaceTerm::Annot { ty, .. } => match translate_cbn_type(ty, plus) {
            CompType::F(a) => Some(a),
            _ => None,
        },
        _ => None,
    }
}

fn cbv_scrut_vtype(scrut: &SurfaceTerm, plus: bool) -> Option<Box<ValueType>> {
    match scrut {
        SurfaceTerm::Annot { ty, .. } => {
            translate_cbv_type(ty, plus).ok().map(Box::new)
        }
        _ => None,
    }
}

pub fn translate_cbn(t: &SurfaceTerm, plus: bool) -> Comp {
    use SurfaceTerm::*;
    match t {
        Var(x) => Comp::Force(Box::new(Value::Var(x.clone()))),
        Annot { term, ty } => Comp::Annot {
            comp: Box::new(translate_cbn(term, plus)),
            ty: Box::new(translate_cbn_type(ty, plus)),
        },
        Let { x, val, body } => Comp::LetV {
            x: x.clone(),
            ann: None,
            val: Box::new(Value::Thunk(Box::new(translate_cbn(val, plus)))),
            body: Box::new(translate_cbn(body, plus)),
        },
        Lam { x, body } => Comp::Lam { x: x.clone(), body: Box::new(translate_cbn(body, plus)) },
        App { arg, fun } => Comp::App {
            arg: Box::new(Value::Thunk(Box::new(translate_cbn(arg, plus)))),
            fun: Box::new(translate_cbn(fun, plus)),
        },
        LamI(ms) => Comp::LamI(ms.iter().map(|m| translate_cbn(m, plus)).collect()),
        ProjI(i, m) => Comp::ProjI(*i, Box::new(translate_cbn(m, plus))),
        Inj(i, m) => Comp::Return(Box::new(Value::Inj(
            *i,
            Box::new(Value::Thunk(Box::new(translate_cbn(m, plus)))),
        ))),
        Unit => Comp::Return(Box::new(Value::UnitV)),
        Pair(m, n) => Comp::Return(Box::new(Value::Pair(
            Box::new(Value::Thunk(Box::new(translate_cbn(m, plus)))),
            Box::new(Value::Thunk(Box::new(translate_cbn(n, plus)))),
        ))),
        Refl(m, _) => Comp::Return(Box::new(Value::Refl(Box::new(Value::Thunk(Box::new(
            translate_cbn(m, plus),
        )))))),
        PmSum { scrut, branches, motive } => {
            let st = cbn_scrut_vtype(scrut, plus);
            let s = translate_cbn(scrut, plus);
            let bs: Vec<(Ident, Comp)> =
                branches.iter().map(|(x, b)| (x.clone(), translate_cbn(b, plus))).collect();
            let (outer, inner) = cbn_motives(motive, plus);
            let z = fresh_for_comps("z", &bs.iter().map(|(_, b)| b).collect::<Vec<_>>());
            Comp::To {
                comp: Box::new(s),
                x: z.clone(),
                body: Box::new(Comp::PmSum {
                    scrut: Box::new(Value::Var(z)),
                    scrut_ty: st,
                    branches: bs,
                    motive: inner,
                }),
                motive: outer,
            }
        }
        PmUnit { scrut, body, motive } => {
            let s = translate_cbn(scrut, plus);
            let b = translate_cbn(body, plus);
            let (outer, inner) = cbn_motives(motive, plus);
            let z = fresh_for_comps("z", &[&b]);
            Comp::To {
                comp: Box::new(s),
                x: z.clone(),
                body: Box::new(Comp::PmUnit {
                    scrut: Box::new(Value::Var(z)),
                    body: Box::new(b),
                    motive: inner,
                }),
                motive: outer,
            }
        }
        PmPair { scrut, x, y, body, motive } => {
            let st = cbn_scrut_vtype(scrut, plus);
            let s = translate_cbn(scrut, plus);
            let b = translate_cbn(body, plus);
            let (outer, inner) = cbn_motives(motive, plus);
            let z = fresh_for_comps("z", &[&b]);
            Comp::To {
                comp: Box::new(s),
                x: z.clone(),
                body: Box::new(Comp::PmPair {
                    scrut: Box::new(Value::Var(z)),
                    scrut_ty: st,
                    x: x.clone(),
                    y: y.clone(),
                    body: Box::new(b),
                    motive: inner,
                }),
                motive: outer,
            }
        }
        PmId { scrut, binder, body, motive } => {
            let s = translate_cbn(scrut, plus);
            let b = translate_cbn(body, plus);
            // Strong elimination needs the endpoints of the scrutinee's
            // identity type; they are available when the scrutinee carries
            // an ascription.
            let st = cbn_scrut_vtype(scrut, plus);
            let (outer, inner) = cbn_id_motives(scrut, motive, plus);
            let z = fresh_for_comps("z", &[&b]);
            Comp::To {
                comp: Box::new(s),
                x: z.clone(),
                body: Box::new(Comp::PmId {
                    scrut: Box::new(Value::Var(z)),
                    scrut_ty: st,
                    binder: binder.clone(),
                    body: Box::new(b),
                    motive: inner,
                }),
                motive: outer,
            }
        }
        Diverge => Comp::Diverge,
        ErrorT(e) => Comp::Error(e.clone()),
        Print(ts, m) => Comp::Print(ts.clone(), Box::new(translate_cbn(m, plus))),
        Write(s, m) => Comp::Write(s.clone(), Box::new(translate_cbn(m, plus))),
        Read(bs) => Comp::Read(
            bs.iter().map(|(s, m)| (s.clone(), translate_cbn(m, plus))).collect(),
        ),
        Choose(ms) => Comp::Choose(ms.iter().map(|m| translate_cbn(m, plus)).collect()),
        Mu { x, body } => Comp::Mu { z: x.clone(), body: Box::new(translate_cbn(body, plus)) },
    }
}

fn cbn_id_motives(
    scrut: &SurfaceTerm,
    motive: &Option<SurfaceIdMotive>,
    plus: bool,
) -> (Option<Motive<CompType>>, Option<IdMotive<CompType>>) {
    if !plus {
        return (None, None);
    }
    let m = match motive {
        Some(m) => m,
        None => return (None, None),
    };
    let (ty_l, ty_r) = match scrut {
        SurfaceTerm::Annot { ty, .. } => match ty.as_ref() {
            SurfaceType::Id(_, l, r) => {
                (Value::Thunk(Box::new(translate_cbn(l, plus))), Value::Thunk(Box::new(translate_cbn(r, plus))))
            }
            _ => return (None, None),
        },
        _ => return (None, None),
    };
    let c = translate_cbn_type(&m.body, plus);
    let mut avoid = free_idents_ctype(&c);
    avoid.extend([m.left.clone(), m.right.clone(), m.witness.clone()]);
    let w = fresh_avoiding("w", &avoid);
    let outer_body = subst_ctype(
        &subst_ctype(&subst_ctype(&c, &m.left, &ty_l), &m.right, &ty_r),
        &m.witness,
        &Value::Var(w.clone()),
    );
    let outer = Motive { binder: w, body: Box::new(outer_body) };
    let l = fresh_avoiding("l", &avoid);
    let r = fresh_avoiding("r", &avoid);
    let p = fresh_avoiding("p", &avoid);
    let inner_body = subst_ctype(
        &subst_ctype(
            &subst_ctype(&c, &m.left, &Value::Var(l.clone())),
            &m.right,
            &Value::Var(r.clone()),
        ),
        &m.witness,
        &tr(Value::Var(p.clone())),
    );
    let inner = IdMotive { left: l, right: r, witness: p, body: Box::new(inner_body) };
    (Some(outer), Some(inner))
}

// ---------------------------------------------------------------------------
// Call-by-value
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RequiresPlus(pub String);

impl std::fmt::Display for RequiresPlus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "requires plus: {}", self.0)
    }
}

impl std::error::Error for RequiresPlus {}

/// The `(-)^*` lifting of a thunk value across the surface binders in
/// scope: `thunk (force z1 to z1 in ... force zn to zn in force V)`.
fn cbv_star(v: Value, scope: &[Ident]) -> Value {
    if scope.is_empty() {
        return v;
    }
    let mut body = Comp::Force(Box::new(v));
    for z in scope.iter().rev() {
        body = Comp::To {
            comp: Box::new(Comp::Force(Box::new(Value::Var(z.clone())))),
            x: z.clone(),
            body: Box::new(body),
            motive: None,
        };
    }
    Value::Thunk(Box::new(body))
}

pub fn translate_cbv_type(t: &SurfaceType, plus: bool) -> Result<ValueType, RequiresPlus> {
    translate_cbv_type_in(t, plus, &[])
}

fn translate_cbv_type_in(
    t: &SurfaceType,
    plus: bool,
    scope: &[Ident],
) -> Result<ValueType, RequiresPlus> {
    match t {
        SurfaceType::Sum(items) => Ok(ValueType::FinSum(
            items
                .iter()
                .map(|a| translate_cbv_type_in(a, plus, scope))
                .collect::<Result<_, _>>()?,
        )),
        SurfaceType::Unit => Ok(ValueType::Unit),
        SurfaceType::Sigma(x, a, a2) => {
            let dependent = {
                let mut fv = std::collections::BTreeSet::new();
                crate::surface::free_vars(&SurfaceTerm::Var(x.clone()));
                fv.extend(free_surface_type_vars(a2));
                fv.contains(x)
            };
            if dependent && !plus {
                return Err(RequiresPlus(format!("dependent Sigma over `{x}`")));
            }
            let av = translate_cbv_type_in(a, plus, scope)?;
            let mut scope2 = scope.to_vec();
            scope2.push(x.clone());
            let a2v = translate_cbv_type_in(a2, plus, &scope2)?;
            let a2v = subst_vtype(&a2v, x, &tr(Value::Var(x.clone())));
            Ok(ValueType::Sigma(x.clone(), Box::new(av), Box::new(a2v)))
        }
        SurfaceType::Pi(x, a, a2) => {
            let dependent = free_surface_type_vars(a2).contains(x);
            if dependent && !plus {
                return Err(RequiresPlus(format!("dependent Pi over `{x}`")));
            }
            let av = translate_cbv_type_in(a, plus, scope)?;
            let mut scope2 = scope.to_vec();
            scope2.push(x.clone());
            let a2v = translate_cbv_type_in(a2, plus, &scope2)?;
            let a2v = subst_vtype(&a2v, x, &tr(Value::Var(x.clone())));
            Ok(ValueType::U(Box::new(CompType::FunPi(
                x.clone(),
                Box::new(av),
                Box::new(CompType::F(Box::new(a2v))),
            ))))
        }
        SurfaceType::ProdI(items) => Ok(ValueType::U(Box::new(CompType::FinProd(
            items
                .iter()
                .map(|a| Ok(CompType::F(Box::new(translate_cbv_type_in(a, plus, scope)?))))
                .collect::<Result<_, RequiresPlus>>()?,
        )))),
        SurfaceType::Id(a, m, n) => {
            if !plus {
                return Err(RequiresPlus("identity type over computations".into()));
            }
            let av = translate_cbv_type_in(a, plus, scope)?;
            let mv = translate_cbv(m, plus);
            let nv = translate_cbv(n, plus);
            Ok(ValueType::Id(
                Box::new(ValueType::U(Box::new(CompType::F(Box::new(av))))),
                Box::new(cbv_star(Value::Thunk(Box::new(mv)), scope)),
                Box::new(cbv_star(Value::Thunk(Box::new(nv)), scope)),
            ))
        }
    }
}

fn free_surface_type_vars(t: &SurfaceType) -> std::collections::BTreeSet<Ident> {
    // free term variables of a surface type
    let mut acc = std::collections::BTreeSet::new();
    fn go(t: &SurfaceType, acc: &mut std::collections::BTreeSet<Ident>) {
        match t {
            SurfaceType::Sum(ts) | SurfaceType::ProdI(ts) => ts.iter().for_each(|t| go(t, acc)),
            SurfaceType::Unit => {}
            SurfaceType::Sigma(x, a, b) | SurfaceType::Pi(x, a, b) => {
                go(a, acc);
                let mut inner = std::collections::BTreeSet::new();
                go(b, &mut inner);
                inner.remove(x);
                acc.extend(inner);
            }
            SurfaceType::Id(a, m, n) => {
                go(a, acc);
                acc.extend(crate::surface::free_vars(m));
                acc.extend(crate::surface::free_vars(n));
            }
        }
    }
    go(t, &mut acc);
    acc
}

fn cbv_motives(
    motive: &Option<SurfaceMotive>,
    plus: bool,
) -> (Option<Motive<CompType>>, Option<Motive<CompType>>) {
    if !plus {
        return (None, None);
    }
    match motive {
        None => (None, None),
        Some(m) => {
            let cv = match translate_cbv_type(&m.body, plus) {
                Ok(cv) => cv,
                Err(_) => return (None, None),
            };
            let mut avoid = free_idents_vtype(&cv);
            avoid.insert(m.binder.clone());
            let w = fresh_avoiding("w", &avoid);
            let outer = Motive {
                binder: w.clone(),
                body: Box::new(CompType::F(Box::new(subst_vtype(
                    &cv,
                    &m.binder,
                    &Value::Var(w.clone()),
                )))),
            };
            let z = fresh_avoiding("z", &avoid);
            let inner = Motive {
                binder: z.clone(),
                body: Box::new(CompType::F(Box::new(subst_vtype(
                    &cv,
                    &m.binder,
                    &tr(Value::Var(z.clone())),
                )))),
            };
            (Some(outer), Some(inner))
        }
    }
}

pub fn translate_cbv(t: &SurfaceTerm, plus: bool) -> Comp {
    use SurfaceTerm::*;
    let seq = |m: Comp, x: Ident, n: Comp| Comp::To {
        comp: Box::new(m),
        x,
        body: Box::new(n),
        motive: None,
    };
    match t {
        Var(x) => Comp::Return(Box::new(Value::Var(x.clone()))),
        Annot { term, ty } => {
            let image = translate_cbv(term, plus);
            match translate_cbv_type(ty, plus) {
                Ok(tv) => Comp::Annot { comp: Box::new(image), ty: Box::new(CompType::F(Box::new(tv))) },
                Err(_) => image,
            }
        }
        Let { x, val, body } => {
            seq(translate_cbv(val, plus), x.clone(), translate_cbv(body, plus))
        }
        Lam { x, body } => Comp::Return(Box::new(Value::Thunk(Box::new(Comp::Lam {
            x: x.clone(),
            body: Box::new(translate_cbv(body, plus)),
        })))),
        App { arg, fun } => {
            let mv = translate_cbv(arg, plus);
            let nv = translate_cbv(fun, plus);
            let x = fresh_for_comps("x", &[&mv, &nv]);
            let z = fresh_for_comps("z", &[&mv, &nv]);
            let z = if z == x { format!("{z}1") } else { z };
            seq(
                mv,
                x.clone(),
                seq(
                    nv,
                    z.clone(),
                    Comp::App {
                        arg: Box::new(Value::Var(x)),
                        fun: Box::new(Comp::Force(Box::new(Value::Var(z)))),
                    },
                ),
            )
        }
        LamI(ms) => Comp::Return(Box::new(Value::Thunk(Box::new(Comp::LamI(
            ms.iter().map(|m| translate_cbv(m, plus)).collect(),
        ))))),
        ProjI(i, n) => {
            let nv = translate_cbv(n, plus);
            let z = fresh_for_comps("z", &[&nv]);
            seq(nv, z.clone(), Comp::ProjI(*i, Box::new(Comp::Force(Box::new(Value::Var(z))))))
        }
        Inj(i, m) => {
            let mv = translate_cbv(m, plus);
            let x = fresh_for_comps("x", &[&mv]);
            seq(
                mv,
                x.clone(),
                Comp::Return(Box::new(Value::Inj(*i, Box::new(Value::Var(x))))),
            )
        }
        Unit => Comp::Return(Box::new(Value::UnitV)),
        Pair(m, n) => {
            let mv = translate_cbv(m, plus);
            let nv = translate_cbv(n, plus);
            let x = fresh_for_comps("x", &[&mv, &nv]);
            let y = fresh_for_comps("y", &[&mv, &nv]);
            let y = if y == x { format!("{y}1") } else { y };
            seq(
                mv,
                x.clone(),
                seq(
                    nv,
                    y.clone(),
                    Comp::Return(Box::new(Value::Pair(
                        Box::new(Value::Var(x)),
                        Box::new(Value::Var(y)),
                    ))),
                ),
            )
        }
        Refl(m, ann) => {
            let mv = translate_cbv(m, plus);
            let z = fresh_for_comps("z", &[&mv]);
            let motive = if plus {
                ann.as_ref().and_then(|a| translate_cbv_type(a, plus).ok()).map(|av| {
                    let w = fresh_avoiding("w", &free_idents_vtype(&av));
                    Motive {
                        binder: w.clone(),
                        body: Box::new(CompType::F(Box::new(ValueType::Id(
                            Box::new(ValueType::U(Box::new(CompType::F(Box::new(av))))),
                            Box::new(Value::Var(w.clone())),
                            Box::new(Value::Var(w)),
                        )))),
                    }
                })
            } else {
                None
            };
            Comp::To {
                comp: Box::new(mv),
                x: z.clone(),
                body: Box::new(Comp::Return(Box::new(Value::Refl(Box::new(tr(Value::Var(
                    z,
                ))))))),
                motive,
            }
        }
        PmSum { scrut, branches, motive } => {
            let st = cbv_scrut_vtype(scrut, plus);
            let sv = translate_cbv(scrut, plus);
            let bs: Vec<(Ident, Comp)> =
                branches.iter().map(|(x, b)| (x.clone(), translate_cbv(b, plus))).collect();
            let (outer, inner) = cbv_motives(motive, plus);
            let z = fresh_for_comps("z", &bs.iter().map(|(_, b)| b).collect::<Vec<_>>());
            Comp::To {
                comp: Box::new(sv),
                x: z.clone(),
                body: Box::new(Comp::PmSum {
                    scrut: Box::new(Value::Var(z)),
                    scrut_ty: st,
                    branches: bs,
                    motive: inner,
                }),
                motive: outer,
            }
        }
        PmUnit { scrut, body, motive } => {
            let sv = translate_cbv(scrut, plus);
            let bv = translate_cbv(body, plus);
            let (outer, inner) = cbv_motives(motive, plus);
            let z = fresh_for_comps("z", &[&bv]);
            Comp::To {
                comp: Box::new(sv),
                x: z.clone(),
                body: Box::new(Comp::PmUnit {
                    scrut: Box::new(Value::Var(z)),
                    body: Box::new(bv),
                    motive: inner,
                }),
                motive: outer,
            }
        }
        PmPair { scrut, x, y, body, motive } => {
            let st = cbv_scrut_vtype(scrut, plus);
            let sv = translate_cbv(scrut, plus);
            let bv = translate_cbv(body, plus);
            let (outer, inner) = cbv_motives(motive, plus);
            let z = fresh_for_comps("z", &[&bv]);
            Comp::To {
                comp: Box::new(sv),
                x: z.clone(),
                body: Box::new(Comp::PmPair {
                    scrut: Box::new(Value::Var(z)),
                    scrut_ty: st,
                    x: x.clone(),
                    y: y.clone(),
                    body: Box::new(bv),
                    motive: inner,
                }),
                motive: outer,
            }
        }
        PmId { scrut, binder, body, motive: _ } => {
            let st = cbv_scrut_vtype(scrut, plus);
            let sv = translate_cbv(scrut, plus);
            let bv = translate_cbv(body, plus);
            let z = fresh_for_comps("z", &[&bv]);
            let y = fresh_for_comps("y", &[&bv]);
            let y = if y == z { format!("{y}1") } else { y };
            Comp::To {
                comp: Box::new(sv),
                x: z.clone(),
                body: Box::new(Comp::PmId {
                    scrut: Box::new(Value::Var(z)),
                    scrut_ty: st,
                    binder: y.clone(),
                    body: Box::new(Comp::To {
                        comp: Box::new(Comp::Force(Box::new(Value::Var(y)))),
                        x: binder.clone(),
                        body: Box::new(bv),
                        motive: None,
                    }),
                    motive: None,
                }),
                motive: None,
            }
        }
        Diverge => Comp::Diverge,
        ErrorT(e) => Comp::Error(e.clone()),
        Print(ts, m) => Comp::Print(ts.clone(), Box::new(translate_cbv(m, plus))),
        Write(s, m) => Comp::Write(s.clone(), Box::new(translate_cbv(m, plus))),
        Read(bs) => {
            Comp::Read(bs.iter().map(|(s, m)| (s.clone(), translate_cbv(m, plus))).collect())
        }
        Choose(ms) => Comp::Choose(ms.iter().map(|m| translate_cbv(m, plus)).collect()),
        Mu { x, body } => {
            let bv = translate_cbv(body, plus);
            let z = fresh_for_comps("z", &[&bv]);
            Comp::Mu {
                z: z.clone(),
                body: Box::new(Comp::To {
                    comp: Box::new(Comp::Force(Box::new(Value::Var(z)))),
                    x: x.clone(),
                    body: Box::new(bv),
                    motive: None,
                }),
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Type isomorphisms
// ---------------------------------------------------------------------------

/// One ground observation: run both computations and compare the outcomes.
#[derive(Debug, Clone)]
pub struct IsoSample {
    pub desc: String,
    pub round_trip: Comp,
    pub identity: Comp,
}

#[derive(Debug, Clone)]
pub struct IsoInstance {
    pub desc: String,
    pub to: Value,
    pub to_ty: ValueType,
    pub from: Value,
    pub from_ty: ValueType,
    pub samples: Vec<IsoSample>,
}

#[derive(Debug, Clone)]
pub struct IsoWitness {
    pub name: &'static str,
    pub instances: Vec<IsoInstance>,
}

fn pv(s: &str) -> Value {
    crate::parser::parse_value_str(s).unwrap_or_else(|e| panic!("bad witness value `{s}`: {e}"))
}

fn pvt(s: &str) -> ValueType {
    crate::parser::parse_vtype_str(s).unwrap_or_else(|e| panic!("bad witness type `{s}`: {e}"))
}

fn pc(s: &str) -> Comp {
    crate::parser::parse_comp_str(s).unwrap_or_else(|e| panic!("bad witness comp `{s}`: {e}"))
}

fn appv(arg: Value, fun: Value) -> Value {
    Value::AppV { arg: Box::new(arg), fun: Box::new(fun) }
}

fn apph(k: Comp, v: Value) -> Comp {
    Comp::AppHom { comp: Box::new(k), fun: Box::new(v), fun_ty: None }
}

/// The five isomorphisms, each with ground instantiations whose round trips
/// are compared with the identity on the CK machine.
pub fn iso_witnesses() -> Vec<IsoWitness> {
    let mut out = Vec::new();

    // U Pi (x : A) -> B  ~  Pi (x : A) -> U B
    {
        let mut instances = Vec::new();
        for (a, b, f, args, obs) in [
            ("1", "F 1", "thunk (lam x. return x)", vec!["()"], None),
            (
                "Sum {1, 1}",
                "F Sum {1, 1}",
                "thunk (lam x. print \"t\" (return x))",
                vec!["<1, ()>", "<2, ()>"],
                None,
            ),
            (
                "1",
                "Prod {F 1, F 1}",
                "thunk (lam x. lam {1 -> return x, 2 -> print \"p\" (return ())})",
                vec!["()"],
                Some(2usize),
            ),
        ] {
            let to = pv("lam f. lam x. thunk (x ' force f)");
            let from = pv("lam g. thunk (lam x. force (x ' g))");
            let to_ty = pvt(&format!(
                "Pi (f : U Pi (x : {a}) -> {b}) -> Pi (x : {a}) -> U ({b})"
            ));
            let from_ty = pvt(&format!(
                "Pi (g : Pi (x : {a}) -> U ({b})) -> U Pi (x : {a}) -> {b}"
            ));
            let fv = pv(f);
            let round = appv(appv(fv.clone(), to.clone()), from.clone());
            let samples = args
                .iter()
                .map(|arg| {
                    let argv = pv(arg);
                    let mk = |w: Value| {
                        let base = Comp::App {
                            arg: Box::new(argv.clone()),
                            fun: Box::new(Comp::Force(Box::new(w))),
                        };
                        match obs {
                            None => base,
                            Some(i) => Comp::ProjI(i, Box::new(base)),
                        }
                    };
                    IsoSample {
                        desc: format!("arg {arg}"),
                        round_trip: mk(round.clone()),
                        identity: mk(fv.clone()),
                    }
                })
                .collect();
            instances.push(IsoInstance {
                desc: format!("A = {a}, B = {b}"),
                to,
                to_ty,
                from,
                from_ty,
                samples,
            });
        }
        out.push(IsoWitness { name: "u-pi", instances });
    }

    // F A -o B  ~  U (Pi (x : A) -> B), x fresh in B
    {
        let mut instances = Vec::new();
        for (a, b, h, args) in [
            ("1", "F 1", "lam nil. (nil to x in print \"h\" (return x))", vec!["()"]),
            (
                "Sum {1, 1}",
                "F Sum {1, 1}",
                "lam nil. (nil to x in pm (x : Sum {1, 1}) as <i, y> in {1 -> return <2, ()>, 2 -> return <1, ()>})",
                vec!["<1, ()>", "<2, ()>"],
            ),
            ("Sum {1, 1}", "F 1", "lam nil. (nil to x in return ())", vec!["<2, ()>"]),
        ] {
            let to = pv("lam h. thunk (lam x. (return x) ' h)");
            let from = pv("lam g. lam nil. (nil to x in (x ' force g))");
            let to_ty = pvt(&format!("Pi (h : F ({a}) -o {b}) -> U Pi (x : {a}) -> {b}"));
            let from_ty = pvt(&format!("Pi (g : U Pi (x : {a}) -> {b}) -> (F ({a}) -o {b})"));
            let hv = pv(h);
            let round = appv(appv(hv.clone(), to.clone()), from.clone());
            let samples = args
                .iter()
                .map(|arg| {
                    let argv = pv(arg);
                    let mk = |w: Value| apph(Comp::Return(Box::new(argv.clone())), w);
                    IsoSample {
                        desc: format!("arg {arg}"),
                        round_trip: mk(round.clone()),
                        identity: mk(hv.clone()),
                    }
                })
                .collect();
            instances.push(IsoInstance {
                desc: format!("A = {a}, B = {b}"),
                to,
                to_ty,
                from,
                from_ty,
                samples,
            });
        }
        out.push(IsoWitness { name: "f-hom", instances });
    }

    // F (Sigma (x : A) -> A')  ~  SigmaF (x : A) -> F A'
    {
        let mut instances = Vec::new();
        for (a, a2, inputs) in [
            ("1", "1", vec!["return <(), ()>", "print \"p\" (return <(), ()>)"]),
            ("Sum {1, 1}", "1", vec!["return <<2, ()>, ()>"]),
            ("1", "Sum {1, 1}", vec!["return <(), <1, ()>>", "print \"q\" (return <(), <2, ()>>)"]),
        ] {
            let to = pv(&format!(
                "lam nil. (nil to p in pm (p : Sigma (x : {a}) -> {a2}) as <x, y> in rtensor x (return y))"
            ));
            let from = pv("lam nil. (nil to rtensor x in (nil to y in return <x, y>))");
            let to_ty = pvt(&format!(
                "(F Sigma (x : {a}) -> {a2}) -o SigmaF (x : {a}) -> F ({a2})"
            ));
            let from_ty = pvt(&format!(
                "(SigmaF (x : {a}) -> F ({a2})) -o F Sigma (x : {a}) -> {a2}"
            ));
            let samples = inputs
                .iter()
                .map(|src| {
                    let input = pc(src);
                    IsoSample {
                        desc: format!("input {src}"),
                        round_trip: apph(apph(input.clone(), to.clone()), from.clone()),
                        identity: input,
                    }
                })
                .collect();
            instances.push(IsoInstance {
                desc: format!("A = {a}, A' = {a2}"),
                to,
                to_ty,
                from,
                from_ty,
                samples,
            });
        }
        out.push(IsoWitness { name: "f-sigma-tensor", instances });
    }

    // SigmaF (x : 1) -> B  ~  B
    {
        let mut instances = Vec::new();
        for (b, inputs, obs) in [
            ("F 1", vec!["rtensor () (return ())", "rtensor () (print \"a\" (return ()))"], None),
            ("F Sum {1, 1}", vec!["rtensor () (return <2, ()>)"], None),
            (
                "Prod {F 1, F 1}",
                vec!["rtensor () (lam {1 -> return (), 2 -> print \"b\" (return ())})"],
                Some(2usize),
            ),
        ] {
            let to = pv("lam nil. (nil to rtensor x in nil)");
            let from = pv("lam nil. rtensor () nil");
            let to_ty = pvt(&format!("(SigmaF (x : 1) -> {b}) -o {b}"));
            let from_ty = pvt(&format!("({b}) -o SigmaF (x : 1) -> {b}"));
            let samples = inputs
                .iter()
                .map(|src| {
                    let input = pc(src);
                    let round = apph(apph(input.clone(), to.clone()), from.clone());
                    // observe both sides through the extractor, then
                    // optionally through a projection to reach ground.
                    let mk = |m: Comp| {
                        let base = apph(m, to.clone());
                        match obs {
                            None => base,
                            Some(i) => Comp::ProjI(i, Box::new(base)),
                        }
                    };
                    IsoSample {
                        desc: format!("input {src}"),
                        round_trip: mk(round),
                        identity: mk(input),
                    }
                })
                .collect();
            instances.push(IsoInstance {
                desc: format!("B = {b}"),
                to,
                to_ty,
                from,
                from_ty,
                samples,
            });
        }
        out.push(IsoWitness { name: "tensor-unit", instances });
    }

    // SigmaF (x : A) -> F 1  ~  F A
    {
        let mut instances = Vec::new();
        for (a, inputs) in [
            ("1", vec!["rtensor () (return ())"]),
            ("Sum {1, 1}", vec!["rtensor <1, ()> (return ())", "rtensor <2, ()> (print \"q\" (return ()))"]),
            ("Sum {1, 1, 1}", vec!["rtensor <3, ()> (return ())"]),
        ] {
            let to = pv("lam nil. (nil to rtensor x in (nil to u in return x))");
            let from = pv("lam nil. (nil to x in rtensor x (return ()))");
            let to_ty = pvt(&format!("(SigmaF (x : {a}) -> F 1) -o F ({a})"));
            let from_ty = pvt(&format!("(F ({a})) -o SigmaF (x : {a}) -> F 1"));
            let samples = inputs
                .iter()
                .map(|src| {
                    let input = pc(src);
                    let round = apph(apph(input.clone(), to.clone()), from.clone());
                    let mk = |m: Comp| apph(m, to.clone());
                    IsoSample {
                        desc: format!("input {src}"),
                        round_trip: mk(round),
                        identity: mk(input),
                    }
                })
                .collect();
            instances.push(IsoInstance {
                desc: format!("A = {a}"),
                to,
                to_ty,
                from,
                from_ty,
                samples,
            });
        }
        out.push(IsoWitness { name: "tensor-f", instances });
    }

    out
}
