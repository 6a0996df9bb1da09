//! The surface calculus: a dependently typed lambda-calculus with effect
//! primitives, parsed from `.dtt` files and elaborated into the core by
//! the call-by-value and call-by-name translations.
//!
//! There is no standalone surface type checker: a surface program is
//! certified by checking its translated core image in the kernel.

use crate::ast::{ErrorLabel, Ident, StateName, Token};
use crate::parser::{lex_for_surface, ParseError, Tok};
use crate::EffectSignature;
use std::collections::HashMap;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SurfaceMotive {
    pub binder: Ident,
    pub body: Box<SurfaceType>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SurfaceIdMotive {
    pub left: Ident,
    pub right: Ident,
    pub witness: Ident,
    pub body: Box<SurfaceType>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SurfaceTerm {
    Var(Ident),
    Let { x: Ident, val: Box<SurfaceTerm>, body: Box<SurfaceTerm> },
    Lam { x: Ident, body: Box<SurfaceTerm> },
    /// `M ' N`: apply `N` to the argument `M`.
    App { arg: Box<SurfaceTerm>, fun: Box<SurfaceTerm> },
    LamI(Vec<SurfaceTerm>),
    ProjI(usize, Box<SurfaceTerm>),
    Inj(usize, Box<SurfaceTerm>),
    PmSum {
        scrut: Box<SurfaceTerm>,
        branches: Vec<(Ident, SurfaceTerm)>,
        motive: Option<SurfaceMotive>,
    },
    Unit,
    PmUnit {
        scrut: Box<SurfaceTerm>,
        body: Box<SurfaceTerm>,
        motive: Option<SurfaceMotive>,
    },
    Pair(Box<SurfaceTerm>, Box<SurfaceTerm>),
    PmPair {
        scrut: Box<SurfaceTerm>,
        x: Ident,
        y: Ident,
        body: Box<SurfaceTerm>,
        motive: Option<SurfaceMotive>,
    },
    /// `refl M`; the optional ascription is the type of `M`, needed to
    /// produce the dependent motive in the call-by-value image.
    Refl(Box<SurfaceTerm>, Option<Box<SurfaceType>>),
    PmId {
        scrut: Box<SurfaceTerm>,
        binder: Ident,
        body: Box<SurfaceTerm>,
        motive: Option<SurfaceIdMotive>,
    },
    Diverge,
    ErrorT(ErrorLabel),
    Print(Vec<Token>, Box<SurfaceTerm>),
    Write(StateName, Box<SurfaceTerm>),
    Read(Vec<(StateName, SurfaceTerm)>),
    Choose(Vec<SurfaceTerm>),
    Mu { x: Ident, body: Box<SurfaceTerm> },
    Annot { term: Box<SurfaceTerm>, ty: Box<SurfaceType> },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SurfaceType {
    Sum(Vec<SurfaceType>),
    Unit,
    Sigma(Ident, Box<SurfaceType>, Box<SurfaceType>),
    Id(Box<SurfaceType>, Box<SurfaceTerm>, Box<SurfaceTerm>),
    /// Finite projection product.
    ProdI(Vec<SurfaceType>),
    Pi(Ident, Box<SurfaceType>, Box<SurfaceType>),
}

#[derive(Debug, Clone)]
pub struct SurfaceProgram {
    pub signature: EffectSignature,
    pub main: SurfaceTerm,
}

pub fn free_vars(t: &SurfaceTerm) -> std::collections::BTreeSet<Ident> {
    let mut acc = std::collections::BTreeSet::new();
    fv_term(t, &mut acc);
    acc
}

fn remove_bound(
    acc: &mut std::collections::BTreeSet<Ident>,
    inner: std::collections::BTreeSet<Ident>,
    bound: &[&Ident],
) {
    let mut inner = inner;
    for b in bound {
        inner.remove(*b);
    }
    acc.extend(inner);
}

fn fv_term(t: &SurfaceTerm, acc: &mut std::collections::BTreeSet<Ident>) {
    use SurfaceTerm::*;
    match t {
        Var(x) => {
            acc.insert(x.clone());
        }
        Let { x, val, body } => {
            fv_term(val, acc);
            let mut inner = Default::default();
            fv_term(body, &mut inner);
            remove_bound(acc, inner, &[x]);
        }
        Lam { x, body } | Mu { x, body } => {
            let mut inner = Default::default();
            fv_term(body, &mut inner);
            remove_bound(acc, inner, &[x]);
        }
        App { arg, fun } => {
            fv_term(arg, acc);
            fv_term(fun, acc);
        }
        LamI(ts) | Choose(ts) => ts.iter().for_each(|t| fv_term(t, acc)),
        ProjI(_, t) | Inj(_, t) | Print(_, t) | Write(_, t) => fv_term(t, acc),
        PmSum { scrut, branches, motive } => {
            fv_term(scrut, acc);
            for (x, b) in branches {
                let mut inner = Default::default();
                fv_term(b, &mut inner);
                remove_bound(acc, inner, &[x]);
            }
            if let Some(m) = motive {
                let mut inner = Default::default();
                fv_type(&m.body, &mut inner);
                remove_bound(acc, inner, &[&m.binder]);
            }
        }
        Unit | Diverge | ErrorT(_) => {}
        PmUnit { scrut, body, motive } => {
            fv_term(scrut, acc);
            fv_term(body, acc);
            if let Some(m) = motive {
                let mut inner = Default::default();
                fv_type(&m.body, &mut inner);
                remove_bound(acc, inner, &[&m.binder]);
            }
        }
        Pair(a, b) => {
            fv_term(a, acc);
            fv_term(b, acc);
        }
        PmPair { scrut, x, y, body, motive } => {
            fv_term(scrut, acc);
            let mut inner = Default::default();
            fv_term(body, &mut inner);
            remove_bound(acc, inner, &[x, y]);
            if let Some(m) = motive {
                let mut im = Default::default();
                fv_type(&m.body, &mut im);
                remove_bound(acc, im, &[&m.binder]);
            }
        }
        Refl(m, ann) => {
            fv_term(m, acc);
            if let Some(t) = ann {
                fv_type(t, acc);
            }
        }
        PmId { scrut, binder, body, motive } => {
            fv_term(scrut, acc);
            let mut inner = Default::default();
            fv_term(body, &mut inner);
            remove_bound(acc, inner, &[binder]);
            if let Some(m) = motive {
                let mut im = Default::default();
                fv_type(&m.body, &mut im);
                remove_bound(acc, im, &[&m.left, &m.right, &m.witness]);
            }
        }
        Read(bs) => bs.iter().for_each(|(_, t)| fv_term(t, acc)),
        Annot { term, ty } => {
            fv_term(term, acc);
            fv_type(ty, acc);
        }
    }
}

fn fv_type(t: &SurfaceType, acc: &mut std::collections::BTreeSet<Ident>) {
    use SurfaceType::*;
    match t {
        Sum(ts) | ProdI(ts) => ts.iter().for_each(|t| fv_type(t, acc)),
        Unit => {}
        Sigma(x, a, b) | Pi(x, a, b) => {
            fv_type(a, acc);
            let mut inner = Default::default();
            fv_type(b, &mut inner);
            remove_bound(acc, inner, &[x]);
        }
        Id(a, m, n) => {
            fv_type(a, acc);
            fv_term(m, acc);
            fv_term(n, acc);
        }
    }
}

// ---------------------------------------------------------------------------
// Surface parser
// ---------------------------------------------------------------------------

struct SParser {
    toks: Vec<(Tok, usize, usize)>,
    pos: usize,
    scope: Vec<Ident>,
    env: HashMap<String, SurfaceTerm>,
    tenv: HashMap<String, SurfaceType>,
}

type PResult<T> = Result<T, ParseError>;

impl SParser {
    fn here(&self) -> (usize, usize) {
        self.toks
            .get(self.pos)
            .map(|(_, l, c)| (*l, *c))
            .or_else(|| self.toks.last().map(|(_, l, c)| (*l, *c + 1)))
            .unwrap_or((1, 1))
    }

    fn err<T>(&self, msg: impl Into<String>) -> PResult<T> {
        let (line, col) = self.here();
        Err(ParseError { line, col, msg: msg.into() })
    }

    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(t, _, _)| t)
    }

    fn eat(&mut self, t: &Tok) -> bool {
        if self.peek() == Some(t) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, t: &Tok) -> PResult<()> {
        if self.eat(t) {
            Ok(())
        } else {
            self.err(format!("expected {t}"))
        }
    }

    fn expect_ident(&mut self) -> PResult<String> {
        match self.peek() {
            Some(Tok::Ident(s)) => {
                let s = s.clone();
                self.pos += 1;
                Ok(s)
            }
            _ => self.err("expected identifier"),
        }
    }

    fn expect_nat(&mut self) -> PResult<usize> {
        match self.peek() {
            Some(Tok::Nat(n)) => {
                let n = *n;
                self.pos += 1;
                Ok(n)
            }
            _ => self.err("expected a number"),
        }
    }

    fn parse_type(&mut self) -> PResult<SurfaceType> {
        match self.peek().cloned() {
            Some(Tok::Pi) | Some(Tok::Sigma) => {
                let head = self.peek().cloned().unwrap();
                self.pos += 1;
                self.expect(&Tok::LParen)?;
                let x = self.expect_ident()?;
                self.expect(&Tok::Colon)?;
                let a = self.parse_type()?;
                self.expect(&Tok::RParen)?;
                self.expect(&Tok::Arrow)?;
                self.scope.push(x.clone());
                let b = self.parse_type();
                self.scope.pop();
                let b = b?;
                Ok(match head {
                    Tok::Pi => SurfaceType::Pi(x, Box::new(a), Box::new(b)),
                    _ => SurfaceType::Sigma(x, Box::new(a), Box::new(b)),
                })
            }
            Some(Tok::Nat(1)) => {
                self.pos += 1;
                Ok(SurfaceType::Unit)
            }
            Some(Tok::Sum) | Some(Tok::Prod) => {
                let is_sum = self.peek() == Some(&Tok::Sum);
                self.pos += 1;
                self.expect(&Tok::LBrace)?;
                let mut items = Vec::new();
                if !self.eat(&Tok::RBrace) {
                    loop {
                        items.push(self.parse_type()?);
                        if self.eat(&Tok::RBrace) {
                            break;
                        }
                        self.expect(&Tok::Comma)?;
                    }
                }
                Ok(if is_sum { SurfaceType::Sum(items) } else { SurfaceType::ProdI(items) })
            }
            Some(Tok::Id) => {
                self.pos += 1;
                let a = self.parse_type_atom()?;
                let m = self.parse_atom()?;
                let n = self.parse_atom()?;
                Ok(SurfaceType::Id(Box::new(a), Box::new(m), Box::new(n)))
            }
            Some(Tok::LParen) => {
                self.pos += 1;
                let t = self.parse_type()?;
                self.expect(&Tok::RParen)?;
                Ok(t)
            }
            Some(Tok::Ident(name)) => {
                if let Some(t) = self.tenv.get(&name) {
                    let t = t.clone();
                    self.pos += 1;
                    Ok(t)
                } else {
                    self.err(format!("unknown type `{name}`"))
                }
            }
            _ => self.err("expected a surface type"),
        }
    }

    fn parse_type_atom(&mut self) -> PResult<SurfaceType> {
        match self.peek() {
            Some(Tok::LParen) => {
                self.pos += 1;
                let t = self.parse_type()?;
                self.expect(&Tok::RParen)?;
                Ok(t)
            }
            Some(Tok::Nat(1)) => {
                self.pos += 1;
                Ok(SurfaceType::Unit)
            }
            Some(Tok::Sum) | Some(Tok::Prod) | Some(Tok::Ident(_)) => self.parse_type(),
            _ => self.err("expected a surface type"),
        }
    }

    fn parse_term(&mut self) -> PResult<SurfaceTerm> {
        match self.peek().cloned() {
            Some(Tok::Lam) => {
                self.pos += 1;
                if self.peek() == Some(&Tok::LBrace) {
                    self.pos += 1;
                    let mut items = Vec::new();
                    if !self.eat(&Tok::RBrace) {
                        loop {
                            let idx = self.expect_nat()?;
                            if idx != items.len() + 1 {
                                return self.err("branches must be numbered in order");
                            }
                            self.expect(&Tok::Arrow)?;
                            items.push(self.parse_term()?);
                            if self.eat(&Tok::RBrace) {
                                break;
                            }
                            self.expect(&Tok::Comma)?;
                        }
                    }
                    return Ok(SurfaceTerm::LamI(items));
                }
                let x = self.expect_ident()?;
                self.expect(&Tok::Dot)?;
                self.scope.push(x.clone());
                let body = self.parse_term();
                self.scope.pop();
                Ok(SurfaceTerm::Lam { x, body: Box::new(body?) })
            }
            Some(Tok::Mu) => {
                self.pos += 1;
                let x = self.expect_ident()?;
                self.expect(&Tok::Dot)?;
                self.scope.push(x.clone());
                let body = self.parse_term();
                self.scope.pop();
                Ok(SurfaceTerm::Mu { x, body: Box::new(body?) })
            }
            Some(Tok::Let) => {
                self.pos += 1;
                let x = self.expect_ident()?;
                self.expect(&Tok::Be)?;
                let val = self.parse_term()?;
                self.expect(&Tok::In)?;
                self.scope.push(x.clone());
                let body = self.parse_term();
                self.scope.pop();
                Ok(SurfaceTerm::Let { x, val: Box::new(val), body: Box::new(body?) })
            }
            Some(Tok::Pm) => self.parse_pm(),
            Some(Tok::Print) => {
                self.pos += 1;
                let mut tokens = Vec::new();
                while let Some(Tok::Str(s)) = self.peek().cloned() {
                    self.pos += 1;
                    tokens.push(s);
                }
                if tokens.is_empty() {
                    return self.err("print takes at least one string token");
                }
                let body = self.parse_term()?;
                Ok(SurfaceTerm::Print(tokens, Box::new(body)))
            }
            Some(Tok::Write) => {
                self.pos += 1;
                let s = self.expect_ident()?;
                let body = self.parse_term()?;
                Ok(SurfaceTerm::Write(s, Box::new(body)))
            }
            Some(Tok::Read) => {
                self.pos += 1;
                self.expect(&Tok::LBrace)?;
                let mut branches = Vec::new();
                loop {
                    let s = self.expect_ident()?;
                    self.expect(&Tok::Arrow)?;
                    branches.push((s, self.parse_term()?));
                    if self.eat(&Tok::RBrace) {
                        break;
                    }
                    self.expect(&Tok::Comma)?;
                }
                Ok(SurfaceTerm::Read(branches))
            }
            Some(Tok::Choose) => {
                self.pos += 1;
                self.expect(&Tok::LBrace)?;
                let mut items = Vec::new();
                loop {
                    items.push(self.parse_term()?);
                    if self.eat(&Tok::RBrace) {
                        break;
                    }
                    self.expect(&Tok::Comma)?;
                }
                Ok(SurfaceTerm::Choose(items))
            }
            _ => {
                let a = self.parse_atom()?;
                if self.eat(&Tok::Tick) {
                    let f = self.parse_term()?;
                    Ok(SurfaceTerm::App { arg: Box::new(a), fun: Box::new(f) })
                } else {
                    Ok(a)
                }
            }
        }
    }

    fn parse_motive(&mut self) -> PResult<Option<SurfaceMotive>> {
        if self.peek() != Some(&Tok::LBracket) {
            return Ok(None);
        }
        self.pos += 1;
        let z = self.expect_ident()?;
        self.expect(&Tok::Dot)?;
        self.scope.push(z.clone());
        let body = self.parse_type();
        self.scope.pop();
        self.expect(&Tok::RBracket)?;
        Ok(Some(SurfaceMotive { binder: z, body: Box::new(body?) }))
    }

    fn parse_id_motive(&mut self) -> PResult<Option<SurfaceIdMotive>> {
        if self.peek() != Some(&Tok::LBracket) {
            return Ok(None);
        }
        self.pos += 1;
        let a = self.expect_ident()?;
        let b = self.expect_ident()?;
        let p = self.expect_ident()?;
        self.expect(&Tok::Dot)?;
        self.scope.push(a.clone());
        self.scope.push(b.clone());
        self.scope.push(p.clone());
        let body = self.parse_type();
        self.scope.truncate(self.scope.len() - 3);
        self.expect(&Tok::RBracket)?;
        Ok(Some(SurfaceIdMotive { left: a, right: b, witness: p, body: Box::new(body?) }))
    }

    fn parse_pm(&mut self) -> PResult<SurfaceTerm> {
        self.expect(&Tok::Pm)?;
        let scrut = self.parse_atom()?;
        self.expect(&Tok::As)?;
        match self.peek().cloned() {
            Some(Tok::LParen) => {
                self.pos += 1;
                self.expect(&Tok::RParen)?;
                let motive = self.parse_motive()?;
                self.expect(&Tok::In)?;
                let body = self.parse_term()?;
                Ok(SurfaceTerm::PmUnit { scrut: Box::new(scrut), body: Box::new(body), motive })
            }
            Some(Tok::Refl) => {
                self.pos += 1;
                let x = self.expect_ident()?;
                let motive = self.parse_id_motive()?;
                self.expect(&Tok::In)?;
                self.scope.push(x.clone());
                let body = self.parse_term();
                self.scope.pop();
                Ok(SurfaceTerm::PmId {
                    scrut: Box::new(scrut),
                    binder: x,
                    body: Box::new(body?),
                    motive,
                })
            }
            Some(Tok::LAngle) => {
                self.pos += 1;
                let a = self.expect_ident()?;
                self.expect(&Tok::Comma)?;
                let b = self.expect_ident()?;
                self.expect(&Tok::RAngle)?;
                let motive = self.parse_motive()?;
                self.expect(&Tok::In)?;
                if self.peek() == Some(&Tok::LBrace) {
                    self.pos += 1;
                    let mut branches = Vec::new();
                    loop {
                        let idx = self.expect_nat()?;
                        if idx != branches.len() + 1 {
                            return self.err("branches must be numbered in order");
                        }
                        self.expect(&Tok::Arrow)?;
                        self.scope.push(b.clone());
                        let t = self.parse_term();
                        self.scope.pop();
                        branches.push((b.clone(), t?));
                        if self.eat(&Tok::RBrace) {
                            break;
                        }
                        self.expect(&Tok::Comma)?;
                    }
                    Ok(SurfaceTerm::PmSum { scrut: Box::new(scrut), branches, motive })
                } else {
                    self.scope.push(a.clone());
                    self.scope.push(b.clone());
                    let body = self.parse_term();
                    self.scope.truncate(self.scope.len() - 2);
                    Ok(SurfaceTerm::PmPair {
                        scrut: Box::new(scrut),
                        x: a,
                        y: b,
                        body: Box::new(body?),
                        motive,
                    })
                }
            }
            _ => self.err("expected a pattern: `()`, `<x, y>`, `<i, x>` or `refl x`"),
        }
    }

    fn parse_atom(&mut self) -> PResult<SurfaceTerm> {
        match self.peek().cloned() {
            Some(Tok::Ident(name)) => {
                self.pos += 1;
                if self.scope.contains(&name) {
                    return Ok(SurfaceTerm::Var(name));
                }
                match self.env.get(&name) {
                    Some(t) => Ok(t.clone()),
                    None => self.err(format!("unknown identifier `{name}`")),
                }
            }
            Some(Tok::Proj) => {
                self.pos += 1;
                let i = self.expect_nat()?;
                let t = self.parse_atom()?;
                Ok(SurfaceTerm::ProjI(i, Box::new(t)))
            }
            Some(Tok::Refl) => {
                self.pos += 1;
                if self.eat(&Tok::LParen) {
                    if self.eat(&Tok::RParen) {
                        return Ok(SurfaceTerm::Refl(Box::new(SurfaceTerm::Unit), None));
                    }
                    let m = self.parse_term()?;
                    if self.eat(&Tok::Colon) {
                        let t = self.parse_type()?;
                        self.expect(&Tok::RParen)?;
                        return Ok(SurfaceTerm::Refl(Box::new(m), Some(Box::new(t))));
                    }
                    self.expect(&Tok::RParen)?;
                    return Ok(SurfaceTerm::Refl(Box::new(m), None));
                }
                let m = self.parse_atom()?;
                Ok(SurfaceTerm::Refl(Box::new(m), None))
            }
            Some(Tok::Diverge) => {
                self.pos += 1;
                Ok(SurfaceTerm::Diverge)
            }
            Some(Tok::KwError) => {
                self.pos += 1;
                let e = self.expect_ident()?;
                Ok(SurfaceTerm::ErrorT(e))
            }
            Some(Tok::LParen) => {
                self.pos += 1;
                if self.eat(&Tok::RParen) {
                    return Ok(SurfaceTerm::Unit);
                }
                let t = self.parse_term()?;
                if self.eat(&Tok::Colon) {
                    let ty = self.parse_type()?;
                    self.expect(&Tok::RParen)?;
                    return Ok(SurfaceTerm::Annot { term: Box::new(t), ty: Box::new(ty) });
                }
                self.expect(&Tok::RParen)?;
                Ok(t)
            }
            Some(Tok::LAngle) => {
                self.pos += 1;
                if let Some(Tok::Nat(i)) = self.peek().cloned() {
                    self.pos += 1;
                    self.expect(&Tok::Comma)?;
                    let m = self.parse_term()?;
                    self.expect(&Tok::RAngle)?;
                    if i == 0 {
                        return self.err("injection indices are 1-based");
                    }
                    return Ok(SurfaceTerm::Inj(i, Box::new(m)));
                }
                let m = self.parse_term()?;
                self.expect(&Tok::Comma)?;
                let n = self.parse_term()?;
                self.expect(&Tok::RAngle)?;
                Ok(SurfaceTerm::Pair(Box::new(m), Box::new(n)))
            }
            Some(t) => self.err(format!("expected a surface term, found {t}")),
            None => self.err("expected a surface term, found end of input"),
        }
    }

    fn parse_program(&mut self) -> PResult<SurfaceProgram> {
        let mut sig = EffectSignature::default();
        let mut main: Option<SurfaceTerm> = None;
        loop {
            match self.peek().cloned() {
                None => break,
                Some(Tok::Hash(h)) => {
                    self.parse_header(&h, &mut sig)?;
                }
                Some(Tok::Def) => {
                    self.pos += 1;
                    let name = self.expect_ident()?;
                    if self.env.contains_key(&name) || self.tenv.contains_key(&name) {
                        return self.err(format!("duplicate declaration `{name}`"));
                    }
                    self.expect(&Tok::Eq)?;
                    // try a term first, then a type
                    let save = self.pos;
                    match self.parse_term() {
                        Ok(t) if self.at_boundary() => {
                            if !free_vars(&t).is_empty() {
                                return self.err(format!("declaration `{name}` has free identifiers"));
                            }
                            self.env.insert(name, t);
                        }
                        _ => {
                            self.pos = save;
                            let t = self.parse_type()?;
                            if !self.at_boundary() {
                                return self.err("unexpected token after declaration body");
                            }
                            self.tenv.insert(name, t);
                        }
                    }
                }
                Some(Tok::Main) => {
                    self.pos += 1;
                    self.expect(&Tok::Eq)?;
                    let m = self.parse_term()?;
                    if !self.at_boundary() {
                        return self.err("unexpected token after `main` body");
                    }
                    if !free_vars(&m).is_empty() {
                        return self.err("`main` must be closed");
                    }
                    main = Some(m);
                }
                Some(t) => return self.err(format!("expected `def`, `main` or a header, found {t}")),
            }
        }
        match main {
            Some(main) => {
                collect_surface_tokens(&main, &mut sig.monoid_alphabet);
                Ok(SurfaceProgram { signature: sig, main })
            }
            None => self.err("surface program has no `main`"),
        }
    }

    fn parse_header(&mut self, name: &str, sig: &mut EffectSignature) -> PResult<()> {
        self.pos += 1;
        match name {
            "states" => {
                self.expect(&Tok::LBrace)?;
                let mut states = Vec::new();
                loop {
                    states.push(self.expect_ident()?);
                    if self.eat(&Tok::RBrace) {
                        break;
                    }
                    self.expect(&Tok::Comma)?;
                }
                self.expect(&Tok::Init)?;
                let init = self.expect_ident()?;
                if !states.contains(&init) {
                    return self.err("initial state is not in the state set");
                }
                sig.states = states;
                sig.initial_state = init;
                Ok(())
            }
            "errors" => {
                self.expect(&Tok::LBrace)?;
                if !self.eat(&Tok::RBrace) {
                    loop {
                        sig.errors.insert(self.expect_ident()?);
                        if self.eat(&Tok::RBrace) {
                            break;
                        }
                        self.expect(&Tok::Comma)?;
                    }
                }
                Ok(())
            }
            "flags" => loop {
                let mut flag = self.expect_ident()?;
                while self.eat(&Tok::Minus) {
                    flag.push('-');
                    flag.push_str(&self.expect_ident()?);
                }
                match flag.as_str() {
                    "plus" => sig.features.plus = true,
                    "proj-products" => sig.features.proj_products = true,
                    "eta-thunk" => sig.features.eta_thunk = true,
                    "eta-fun" => sig.features.eta_fun = true,
                    "effect-eqs" => sig.features.effect_eqs = true,
                    other => return self.err(format!("unknown flag `{other}`")),
                }
                if !self.eat(&Tok::Comma) {
                    return Ok(());
                }
            },
            other => self.err(format!("unknown header `#{other}`")),
        }
    }

    fn at_boundary(&self) -> bool {
        matches!(self.peek(), None | Some(Tok::Def) | Some(Tok::Main) | Some(Tok::Hash(_)))
    }
}

fn collect_surface_tokens(t: &SurfaceTerm, acc: &mut std::collections::BTreeSet<Token>) {
    use SurfaceTerm::*;
    match t {
        Print(ts, k) => {
            acc.extend(ts.iter().cloned());
            collect_surface_tokens(k, acc);
        }
        Let { val, body, .. } => {
            collect_surface_tokens(val, acc);
            collect_surface_tokens(body, acc);
        }
        Lam { body, .. } | Mu { body, .. } => collect_surface_tokens(body, acc),
        App { arg, fun } => {
            collect_surface_tokens(arg, acc);
            collect_surface_tokens(fun, acc);
        }
        LamI(ts) | Choose(ts) => ts.iter().for_each(|t| collect_surface_tokens(t, acc)),
        ProjI(_, t) | Inj(_, t) | Write(_, t) => collect_surface_tokens(t, acc),
        PmSum { scrut, branches, .. } => {
            collect_surface_tokens(scrut, acc);
            branches.iter().for_each(|(_, b)| collect_surface_tokens(b, acc));
        }
        PmUnit { scrut, body, .. } | PmPair { scrut, body, .. } | PmId { scrut, body, .. } => {
            collect_surface_tokens(scrut, acc);
            collect_surface_tokens(body, acc);
        }
        Pair(a, b) => {
            collect_surface_tokens(a, acc);
            collect_surface_tokens(b, acc);
        }
        Refl(m, _) => collect_surface_tokens(m, acc),
        Read(bs) => bs.iter().for_each(|(_, t)| collect_surface_tokens(t, acc)),
        Annot { term, .. } => collect_surface_tokens(term, acc),
        Var(_) | Unit | Diverge | ErrorT(_) => {}
    }
}

/// Parses a `.dtt` surface program (headers, `def`s, and a `main`).
pub fn parse_surface_program(text: &str) -> Result<SurfaceProgram, ParseError> {
    let toks = lex_for_surface(text)?;
    let mut p = SParser { toks, pos: 0, scope: Vec::new(), env: HashMap::new(), tenv: HashMap::new() };
    p.parse_program()
}

/// Parses a standalone surface term.
pub fn parse_surface_term(text: &str) -> Result<SurfaceTerm, ParseError> {
    let toks = lex_for_surface(text)?;
    let mut p = SParser { toks, pos: 0, scope: Vec::new(), env: HashMap::new(), tenv: HashMap::new() };
    let t = p.parse_term()?;
    if p.peek().is_some() {
        return p.err("unexpected trailing tokens");
    }
    Ok(t)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_identity() {
        let t = parse_surface_term("lam x. x").unwrap();
        assert_eq!(
            t,
            SurfaceTerm::Lam { x: "x".into(), body: Box::new(SurfaceTerm::Var("x".into())) }
        );
    }

    #[test]
    fn parses_program() {
        let p = parse_surface_program("def two = <2, ()>\nmain = pm two as <i, x> in {1 -> (), 2 -> x}")
            .unwrap();
        match p.main {
            SurfaceTerm::PmSum { branches, .. } => assert_eq!(branches.len(), 2),
            other => panic!("unexpected: {other:?}"),
        }
    }

    #[test]
    fn parses_refl_with_ascription() {
        let t = parse_surface_term("refl (() : 1)").unwrap();
        assert_eq!(
            t,
            SurfaceTerm::Refl(Box::new(SurfaceTerm::Unit), Some(Box::new(SurfaceType::Unit)))
        );
    }
}
