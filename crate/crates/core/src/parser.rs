//! Lexer and parser for `.dcbpv` programs and standalone terms.
//!
//! A program is a sequence of signature header lines (`#states`, `#errors`,
//! `#flags`), declarations `def name [: type] = body`, and an optional
//! `main = <computation>`. `--` starts a line comment. Declaration bodies
//! may reference earlier declarations only; references are resolved by
//! splicing the (closed) earlier body in.

use crate::ast::*;
use std::collections::HashMap;
use std::fmt;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseError {
    pub line: usize,
    pub col: usize,
    pub msg: String,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "parse error at {}:{}: {}", self.line, self.col, self.msg)
    }
}

impl std::error::Error for ParseError {}

type PResult<T> = Result<T, ParseError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DeclKind {
    VType,
    CType,
    Value,
    Comp,
}

impl fmt::Display for DeclKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            DeclKind::VType => "vtype",
            DeclKind::CType => "ctype",
            DeclKind::Value => "value",
            DeclKind::Comp => "comp",
        };
        write!(f, "{s}")
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Item {
    V(Value),
    C(Comp),
    VT(ValueType),
    CT(CompType),
}

impl Item {
    pub fn kind(&self) -> DeclKind {
        match self {
            Item::V(_) => DeclKind::Value,
            Item::C(_) => DeclKind::Comp,
            Item::VT(_) => DeclKind::VType,
            Item::CT(_) => DeclKind::CType,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Decl {
    pub name: String,
    pub kind: DeclKind,
    pub ascription: Option<Item>,
    pub body: Item,
    pub line: usize,
}

/// A parsed, name-resolved program.
#[derive(Debug, Clone)]
pub struct Program {
    pub signature: EffectSignature,
    pub decls: Vec<Decl>,
    pub main: Option<Comp>,
    /// Properties this file is expected to fail, from
    /// `-- EXPECT-FAIL: <property>` comments.
    pub expect_fail: Vec<String>,
}

// ---------------------------------------------------------------------------
// Lexer
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) enum Tok {
    Ident(String),
    Nat(usize),
    Str(String),
    Hash(String),
    // term keywords
    Return,
    To,
    Thunk,
    Force,
    Pm,
    As,
    In,
    Let,
    Be,
    Lam,
    Proj,
    Diverge,
    Mu,
    Print,
    Choose,
    KwError,
    Write,
    Read,
    Refl,
    Rtensor,
    Nil,
    // program keywords
    Def,
    Main,
    Init,
    // type keywords
    U,
    F,
    Sum,
    Prod,
    Sigma,
    SigmaF,
    Pi,
    Id,
    DProd,
    // punctuation
    LParen,
    RParen,
    LBrace,
    RBrace,
    LBracket,
    RBracket,
    LAngle,
    RAngle,
    Comma,
    Dot,
    Colon,
    Eq,
    Tick,
    Arrow,
    Lolli,
    Minus,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Ident(s) => write!(f, "identifier `{s}`"),
            Tok::Nat(n) => write!(f, "number `{n}`"),
            Tok::Str(s) => write!(f, "string \"{s}\""),
            Tok::Hash(s) => write!(f, "#{s}"),
            t => write!(f, "`{}`", keyword_text(t)),
        }
    }
}

fn keyword_text(t: &Tok) -> &'static str {
    match t {
        Tok::Return => "return",
        Tok::To => "to",
        Tok::Thunk => "thunk",
        Tok::Force => "force",
        Tok::Pm => "pm",
        Tok::As => "as",
        Tok::In => "in",
        Tok::Let => "let",
        Tok::Be => "be",
        Tok::Lam => "lam",
        Tok::Proj => "proj",
        Tok::Diverge => "diverge",
        Tok::Mu => "mu",
        Tok::Print => "print",
        Tok::Choose => "choose",
        Tok::KwError => "error",
        Tok::Write => "write",
        Tok::Read => "read",
        Tok::Refl => "refl",
        Tok::Rtensor => "rtensor",
        Tok::Nil => "nil",
        Tok::Def => "def",
        Tok::Main => "main",
        Tok::Init => "init",
        Tok::U => "U",
        Tok::F => "F",
        Tok::Sum => "Sum",
        Tok::Prod => "Prod",
        Tok::Sigma => "Sigma",
        Tok::SigmaF => "SigmaF",
        Tok::Pi => "Pi",
        Tok::Id => "Id",
        Tok::DProd => "DProd",
        Tok::LParen => "(",
        Tok::RParen => ")",
        Tok::LBrace => "{",
        Tok::RBrace => "}",
        Tok::LBracket => "[",
        Tok::RBracket => "]",
        Tok::LAngle => "<",
        Tok::RAngle => ">",
        Tok::Comma => ",",
        Tok::Dot => ".",
        Tok::Colon => ":",
        Tok::Eq => "=",
        Tok::Tick => "'",
        Tok::Arrow => "->",
        Tok::Lolli => "-o",
        Tok::Minus => "-",
        _ => "?",
    }
}

fn keyword_of(s: &str) -> Option<Tok> {
    Some(match s {
        "return" => Tok::Return,
        "to" => Tok::To,
        "thunk" => Tok::Thunk,
        "force" => Tok::Force,
        "pm" => Tok::Pm,
        "as" => Tok::As,
        "in" => Tok::In,
        "let" => Tok::Let,
        "be" => Tok::Be,
        "lam" => Tok::Lam,
        "proj" => Tok::Proj,
        "diverge" => Tok::Diverge,
        "mu" => Tok::Mu,
        "print" => Tok::Print,
        "choose" => Tok::Choose,
        "error" => Tok::KwError,
        "write" => Tok::Write,
        "read" => Tok::Read,
        "refl" => Tok::Refl,
        "rtensor" => Tok::Rtensor,
        "nil" => Tok::Nil,
        "def" => Tok::Def,
        "main" => Tok::Main,
        "init" => Tok::Init,
        "U" => Tok::U,
        "F" => Tok::F,
        "Sum" => Tok::Sum,
        "Prod" => Tok::Prod,
        "Sigma" => Tok::Sigma,
        "SigmaF" => Tok::SigmaF,
        "Pi" => Tok::Pi,
        "Id" => Tok::Id,
        "DProd" => Tok::DProd,
        _ => return None,
    })
}

struct Lexed {
    toks: Vec<(Tok, usize, usize)>,
}

fn lex(text: &str) -> PResult<Lexed> {
    let mut toks = Vec::new();
    let mut line = 1usize;
    let mut col = 1usize;
    let chars: Vec<char> = text.chars().collect();
    let mut i = 0usize;
    macro_rules! bump {
        () => {{
            if chars[i] == '\n' {
                line += 1;
                col = 1;
            } else {
                col += 1;
            }
            i += 1;
        }};
    }
    while i < chars.len() {
        let c = chars[i];
        let (tl, tc) = (line, col);
        if c.is_whitespace() {
            bump!();
            continue;
        }
        if c == '-' {
            if i + 1 < chars.len() && chars[i + 1] == '-' {
                while i < chars.len() && chars[i] != '\n' {
                    bump!();
                }
                continue;
            }
            if i + 1 < chars.len() && chars[i + 1] == '>' {
                bump!();
                bump!();
                toks.push((Tok::Arrow, tl, tc));
                continue;
            }
            if i + 1 < chars.len()
                && chars[i + 1] == 'o'
                && (i + 2 >= chars.len() || !chars[i + 2].is_alphanumeric() && chars[i + 2] != '_')
            {
                bump!();
                bump!();
                toks.push((Tok::Lolli, tl, tc));
                continue;
            }
            bump!();
            toks.push((Tok::Minus, tl, tc));
            continue;
        }
        if c == '"' {
            bump!();
            let mut s = String::new();
            loop {
                if i >= chars.len() || chars[i] == '\n' {
                    return Err(ParseError { line: tl, col: tc, msg: "unterminated string".into() });
                }
                if chars[i] == '"' {
                    bump!();
                    break;
                }
                s.push(chars[i]);
                bump!();
            }
            toks.push((Tok::Str(s), tl, tc));
            continue;
        }
        if c == '#' {
            bump!();
            let mut s = String::new();
            while i < chars.len() && (chars[i].is_alphanumeric() || chars[i] == '_') {
                s.push(chars[i]);
                bump!();
            }
            toks.push((Tok::Hash(s), tl, tc));
            continue;
        }
        if c.is_ascii_digit() {
            let mut n = 0usize;
            while i < chars.len() && chars[i].is_ascii_digit() {
                n = n * 10 + (chars[i] as usize - '0' as usize);
                bump!();
            }
            toks.push((Tok::Nat(n), tl, tc));
            continue;
        }
        if c.is_alphabetic() || c == '_' {
            let mut s = String::new();
            while i < chars.len() && (chars[i].is_alphanumeric() || chars[i] == '_') {
                s.push(chars[i]);
                bump!();
            }
            let tok = keyword_of(&s).unwrap_or(Tok::Ident(s));
            toks.push((tok, tl, tc));
            continue;
        }
        let tok = match c {
            '(' => Tok::LParen,
            ')' => Tok::RParen,
            '{' => Tok::LBrace,
            '}' => Tok::RBrace,
            '[' => Tok::LBracket,
            ']' => Tok::RBracket,
            '<' => Tok::LAngle,
            '>' => Tok::RAngle,
            ',' => Tok::Comma,
            '.' => Tok::Dot,
            ':' => Tok::Colon,
            '=' => Tok::Eq,
            '\'' => Tok::Tick,
            _ => {
                return Err(ParseError {
                    line: tl,
                    col: tc,
                    msg: format!("unexpected character `{c}`"),
                })
            }
        };
        bump!();
        toks.push((tok, tl, tc));
    }
    Ok(Lexed { toks })
}

// ---------------------------------------------------------------------------
// Parser
// ---------------------------------------------------------------------------

struct Parser {
    toks: Vec<(Tok, usize, usize)>,
    pos: usize,
    scope: Vec<String>,
    env: HashMap<String, Item>,
}

#[derive(Clone, Copy)]
struct Save {
    pos: usize,
    scope_len: usize,
}

impl Parser {
    fn new(toks: Vec<(Tok, usize, usize)>) -> Parser {
        Parser { toks, pos: 0, scope: Vec::new(), env: HashMap::new() }
    }

    fn save(&self) -> Save {
        Save { pos: self.pos, scope_len: self.scope.len() }
    }

    fn restore(&mut self, s: Save) {
        self.pos = s.pos;
        self.scope.truncate(s.scope_len);
    }

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

    fn next_tok(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.pos).map(|(t, _, _)| t.clone());
        if t.is_some() {
            self.pos += 1;
        }
        t
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
            match self.peek() {
                Some(got) => {
                    let got = got.clone();
                    self.err(format!("expected {t}, found {got}"))
                }
                None => self.err(format!("expected {t}, found end of input")),
            }
        }
    }

    fn expect_ident(&mut self) -> PResult<String> {
        match self.peek() {
            Some(Tok::Ident(s)) => {
                let s = s.clone();
                self.pos += 1;
                Ok(s)
            }
            Some(t) => {
                let t = t.clone();
                self.err(format!("expected identifier, found {t}"))
            }
            None => self.err("expected identifier, found end of input"),
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

    fn is_bound(&self, x: &str) -> bool {
        self.scope.iter().any(|s| s == x)
    }

    // -- types ---------------------------------------------------------------

    fn parse_type(&mut self) -> PResult<Item> {
        match self.peek() {
            Some(Tok::Pi) | Some(Tok::Sigma) | Some(Tok::SigmaF) => {
                let head = self.next_tok().unwrap();
                self.expect(&Tok::LParen)?;
                let x = self.expect_ident()?;
                self.expect(&Tok::Colon)?;
                let a = self.parse_vtype()?;
                self.expect(&Tok::RParen)?;
                self.expect(&Tok::Arrow)?;
                self.scope.push(x.clone());
                let body = self.parse_type();
                self.scope.pop();
                let body = body?;
                match (head, body) {
                    (Tok::Pi, Item::VT(b)) => {
                        Ok(Item::VT(ValueType::Pi(x, Box::new(a), Box::new(b))))
                    }
                    (Tok::Pi, Item::CT(b)) => {
                        Ok(Item::CT(CompType::FunPi(x, Box::new(a), Box::new(b))))
                    }
                    (Tok::Sigma, Item::VT(b)) => {
                        Ok(Item::VT(ValueType::Sigma(x, Box::new(a), Box::new(b))))
                    }
                    (Tok::SigmaF, Item::CT(b)) => {
                        Ok(Item::CT(CompType::SigmaF(x, Box::new(a), Box::new(b))))
                    }
                    (Tok::Sigma, _) => self.err("Sigma body must be a value type"),
                    (Tok::SigmaF, _) => self.err("SigmaF body must be a computation type"),
                    _ => self.err("malformed arrow type"),
                }
            }
            _ => {
                let t1 = self.parse_type_prefix()?;
                if self.eat(&Tok::Lolli) {
                    let b = match t1 {
                        Item::CT(b) => b,
                        _ => return self.err("left of `-o` must be a computation type"),
                    };
                    let t2 = self.parse_type()?;
                    let c = match t2 {
                        Item::CT(c) => c,
                        _ => return self.err("right of `-o` must be a computation type"),
                    };
                    Ok(Item::VT(ValueType::Hom(Box::new(b), Box::new(c))))
                } else {
                    Ok(t1)
                }
            }
        }
    }

    fn parse_vtype(&mut self) -> PResult<ValueType> {
        match self.parse_type()? {
            Item::VT(a) => Ok(a),
            _ => self.err("expected a value type"),
        }
    }

    fn parse_ctype(&mut self) -> PResult<CompType> {
        match self.parse_type()? {
            Item::CT(b) => Ok(b),
            _ => self.err("expected a computation type"),
        }
    }

    fn parse_type_prefix(&mut self) -> PResult<Item> {
        match self.peek().cloned() {
            Some(Tok::U) => {
                self.pos += 1;
                let b = match self.parse_type_prefix()? {
                    Item::CT(b) => b,
                    _ => return self.err("U takes a computation type"),
                };
                Ok(Item::VT(ValueType::U(Box::new(b))))
            }
            Some(Tok::F) => {
                self.pos += 1;
                let a = match self.parse_type_prefix()? {
                    Item::VT(a) => a,
                    _ => return self.err("F takes a value type"),
                };
                Ok(Item::CT(CompType::F(Box::new(a))))
            }
            Some(Tok::Id) => {
                self.pos += 1;
                let a = match self.parse_type_atom()? {
                    Item::VT(a) => a,
                    _ => return self.err("Id takes a value type"),
                };
                let v = self.parse_value_atom()?;
                let w = self.parse_value_atom()?;
                Ok(Item::VT(ValueType::Id(Box::new(a), Box::new(v), Box::new(w))))
            }
            _ => self.parse_type_atom(),
        }
    }

    fn parse_type_atom(&mut self) -> PResult<Item> {
        match self.peek().cloned() {
            Some(Tok::Nat(1)) => {
                self.pos += 1;
                Ok(Item::VT(ValueType::Unit))
            }
            Some(Tok::Sum) => {
                self.pos += 1;
                self.expect(&Tok::LBrace)?;
                let mut items = Vec::new();
                if !self.eat(&Tok::RBrace) {
                    loop {
                        items.push(self.parse_vtype()?);
                        if self.eat(&Tok::RBrace) {
                            break;
                        }
                        self.expect(&Tok::Comma)?;
                    }
                }
                Ok(Item::VT(ValueType::FinSum(items)))
            }
            Some(Tok::Prod) => {
                self.pos += 1;
                self.expect(&Tok::LBrace)?;
                let mut items = Vec::new();
                if !self.eat(&Tok::RBrace) {
                    loop {
                        items.push(self.parse_ctype()?);
                        if self.eat(&Tok::RBrace) {
                            break;
                        }
                        self.expect(&Tok::Comma)?;
                    }
                }
                Ok(Item::CT(CompType::FinProd(items)))
            }
            Some(Tok::DProd) => {
                self.pos += 1;
                self.expect(&Tok::LBrace)?;
                let mut items: Vec<(Ident, CompType)> = Vec::new();
                let mut pushed = 0;
                if self.peek() != Some(&Tok::RBrace) {
                    loop {
                        let z = self.expect_ident()?;
                        self.expect(&Tok::Arrow)?;
                        let b = self.parse_ctype()?;
                        items.push((z.clone(), b));
                        self.scope.push(z);
                        pushed += 1;
                        if self.peek() == Some(&Tok::RBrace) {
                            break;
                        }
                        self.expect(&Tok::Comma)?;
                    }
                }
                self.expect(&Tok::RBrace)?;
                for _ in 0..pushed {
                    self.scope.pop();
                }
                Ok(Item::CT(CompType::DepProd(items)))
            }
            Some(Tok::LParen) => {
                self.pos += 1;
                let t = self.parse_type()?;
                self.expect(&Tok::RParen)?;
                Ok(t)
            }
            Some(Tok::Pi) | Some(Tok::Sigma) | Some(Tok::SigmaF) => self.parse_type(),
            Some(Tok::Ident(name)) => {
                if let Some(item) = self.env.get(&name) {
                    match item {
                        Item::VT(_) | Item::CT(_) => {
                            self.pos += 1;
                            Ok(self.env[&name].clone())
                        }
                        _ => self.err(format!("`{name}` is not a type declaration")),
                    }
                } else {
                    self.err(format!("unknown identifier `{name}`"))
                }
            }
            _ => self.err("expected a type"),
        }
    }

    // -- values --------------------------------------------------------------

    fn parse_value(&mut self) -> PResult<Value> {
        match self.peek() {
            Some(Tok::Lam) => {
                self.pos += 1;
                if self.eat(&Tok::Nil) {
                    self.expect(&Tok::Dot)?;
                    let k = self.parse_comp()?;
                    return Ok(Value::LamNil(Box::new(k)));
                }
                let x = self.expect_ident()?;
                self.expect(&Tok::Dot)?;
                self.scope.push(x.clone());
                let body = self.parse_value();
                self.scope.pop();
                Ok(Value::LamV { x, body: Box::new(body?) })
            }
            Some(Tok::Let) => {
                self.pos += 1;
                let (x, ann) = self.parse_let_binder()?;
                self.expect(&Tok::Be)?;
                let val = self.parse_value()?;
                self.expect(&Tok::In)?;
                self.scope.push(x.clone());
                let body = self.parse_value();
                self.scope.pop();
                Ok(Value::LetV { x, ann, val: Box::new(val), body: Box::new(body?) })
            }
            Some(Tok::Pm) => self.parse_pm_value(),
            _ => self.parse_value_app(),
        }
    }

    fn parse_value_app(&mut self) -> PResult<Value> {
        let a = self.parse_value_atom()?;
        if self.eat(&Tok::Tick) {
            let f = self.parse_value_app()?;
            Ok(Value::AppV { arg: Box::new(a), fun: Box::new(f) })
        } else {
            Ok(a)
        }
    }

    fn parse_let_binder(&mut self) -> PResult<(Ident, Option<Box<ValueType>>)> {
        if self.eat(&Tok::LParen) {
            let x = self.expect_ident()?;
            self.expect(&Tok::Colon)?;
            let a = self.parse_vtype()?;
            self.expect(&Tok::RParen)?;
            Ok((x, Some(Box::new(a))))
        } else {
            Ok((self.expect_ident()?, None))
        }
    }

    fn parse_value_atom(&mut self) -> PResult<Value> {
        let (v, ann) = self.parse_value_atom_with_ann()?;
        if ann.is_some() {
            return self.err(
                "value ascription is only allowed on pm scrutinees and hom applications",
            );
        }
        Ok(v)
    }

    fn parse_value_atom_with_ann(&mut self) -> PResult<(Value, Option<Box<ValueType>>)> {
        match self.peek().cloned() {
            Some(Tok::Ident(name)) => {
                self.pos += 1;
                if self.is_bound(&name) {
                    return Ok((Value::Var(name), None));
                }
                match self.env.get(&name) {
                    Some(Item::V(v)) => Ok((v.clone(), None)),
                    Some(_) => self.err(format!("`{name}` is not a value declaration")),
                    None => self.err(format!("unknown identifier `{name}`")),
                }
            }
            Some(Tok::LParen) => {
                self.pos += 1;
                if self.eat(&Tok::RParen) {
                    return Ok((Value::UnitV, None));
                }
                let v = self.parse_value()?;
                let ann = if self.eat(&Tok::Colon) {
                    Some(Box::new(self.parse_vtype()?))
                } else {
                    None
                };
                self.expect(&Tok::RParen)?;
                Ok((v, ann))
            }
            Some(Tok::LAngle) => {
                self.pos += 1;
                if let Some(Tok::Nat(i)) = self.peek().cloned() {
                    self.pos += 1;
                    self.expect(&Tok::Comma)?;
                    let v = self.parse_value()?;
                    self.expect(&Tok::RAngle)?;
                    if i == 0 {
                        return self.err("injection indices are 1-based");
                    }
                    return Ok((Value::Inj(i, Box::new(v)), None));
                }
                let v = self.parse_value()?;
                self.expect(&Tok::Comma)?;
                let w = self.parse_value()?;
                self.expect(&Tok::RAngle)?;
                Ok((Value::Pair(Box::new(v), Box::new(w)), None))
            }
            Some(Tok::Thunk) => {
                self.pos += 1;
                let m = self.parse_comp_atom()?;
                Ok((Value::Thunk(Box::new(m)), None))
            }
            Some(Tok::Refl) => {
                self.pos += 1;
                let v = self.parse_value_atom()?;
                Ok((Value::Refl(Box::new(v)), None))
            }
            Some(t) => self.err(format!("expected a value, found {t}")),
            None => self.err("expected a value, found end of input"),
        }
    }

    fn parse_motive_vt(&mut self) -> PResult<Option<Motive<ValueType>>> {
        if self.peek() != Some(&Tok::LBracket) {
            return Ok(None);
        }
        self.pos += 1;
        let z = self.expect_ident()?;
        self.expect(&Tok::Dot)?;
        self.scope.push(z.clone());
        let t = self.parse_vtype();
        self.scope.pop();
        self.expect(&Tok::RBracket)?;
        Ok(Some(Motive { binder: z, body: Box::new(t?) }))
    }

    fn parse_motive_ct(&mut self) -> PResult<Option<Motive<CompType>>> {
        if self.peek() != Some(&Tok::LBracket) {
            return Ok(None);
        }
        self.pos += 1;
        let z = self.expect_ident()?;
        self.expect(&Tok::Dot)?;
        self.scope.push(z.clone());
        let t = self.parse_ctype();
        self.scope.pop();
        self.expect(&Tok::RBracket)?;
        Ok(Some(Motive { binder: z, body: Box::new(t?) }))
    }

    fn parse_id_motive_vt(&mut self) -> PResult<Option<IdMotive<ValueType>>> {
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
        let t = self.parse_vtype();
        self.scope.truncate(self.scope.len() - 3);
        self.expect(&Tok::RBracket)?;
        Ok(Some(IdMotive { left: a, right: b, witness: p, body: Box::new(t?) }))
    }

    fn parse_id_motive_ct(&mut self) -> PResult<Option<IdMotive<CompType>>> {
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
        let t = self.parse_ctype();
        self.scope.truncate(self.scope.len() - 3);
        self.expect(&Tok::RBracket)?;
        Ok(Some(IdMotive { left: a, right: b, witness: p, body: Box::new(t?) }))
    }

    fn parse_pm_value(&mut self) -> PResult<Value> {
        self.expect(&Tok::Pm)?;
        let (scrut, scrut_ty) = self.parse_value_atom_with_ann()?;
        self.expect(&Tok::As)?;
        match self.peek().cloned() {
            Some(Tok::LParen) => {
                self.pos += 1;
                self.expect(&Tok::RParen)?;
                let motive = self.parse_motive_vt()?;
                self.expect(&Tok::In)?;
                let body = self.parse_value()?;
                Ok(Value::PmUnit { scrut: Box::new(scrut), body: Box::new(body), motive })
            }
            Some(Tok::Refl) => {
                self.pos += 1;
                let x = self.expect_ident()?;
                let motive = self.parse_id_motive_vt()?;
                self.expect(&Tok::In)?;
                self.scope.push(x.clone());
                let body = self.parse_value();
                self.scope.pop();
                Ok(Value::PmId {
                    scrut: Box::new(scrut),
                    scrut_ty,
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
                let motive = self.parse_motive_vt()?;
                self.expect(&Tok::In)?;
                if self.peek() == Some(&Tok::LBrace) {
                    // sum: `a` is the index placeholder, `b` the binder
                    let branches =
                        self.parse_branches(&b, |p| p.parse_value())?;
                    Ok(Value::PmSum { scrut: Box::new(scrut), scrut_ty, branches, motive })
                } else {
                    self.scope.push(a.clone());
                    self.scope.push(b.clone());
                    let body = self.parse_value();
                    self.scope.truncate(self.scope.len() - 2);
                    Ok(Value::PmPair {
                        scrut: Box::new(scrut),
                        scrut_ty,
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

    fn parse_branches<T>(
        &mut self,
        binder: &str,
        mut sub: impl FnMut(&mut Self) -> PResult<T>,
    ) -> PResult<Vec<(Ident, T)>> {
        self.expect(&Tok::LBrace)?;
        let mut out = Vec::new();
        if self.eat(&Tok::RBrace) {
            return Ok(out);
        }
        loop {
            let idx = self.expect_nat()?;
            if idx != out.len() + 1 {
                return self.err(format!("branches must be numbered in order; expected {}", out.len() + 1));
            }
            self.expect(&Tok::Arrow)?;
            self.scope.push(binder.to_string());
            let t = sub(self);
            self.scope.pop();
            out.push((binder.to_string(), t?));
            if self.eat(&Tok::RBrace) {
                break;
            }
            self.expect(&Tok::Comma)?;
        }
        Ok(out)
    }

    // -- computations ----------------------------------------------------------

    fn parse_comp(&mut self) -> PResult<Comp> {
        let c = self.parse_comp_app()?;
        if self.eat(&Tok::To) {
            if self.eat(&Tok::Rtensor) {
                let x = self.expect_ident()?;
                self.expect(&Tok::In)?;
                self.scope.push(x.clone());
                let body = self.parse_comp();
                self.scope.pop();
                return Ok(Comp::ToTensor { comp: Box::new(c), x, body: Box::new(body?) });
            }
            let x = self.expect_ident()?;
            let motive = self.parse_motive_ct()?;
            self.expect(&Tok::In)?;
            self.scope.push(x.clone());
            let body = self.parse_comp();
            self.scope.pop();
            return Ok(Comp::To { comp: Box::new(c), x, body: Box::new(body?), motive });
        }
        Ok(c)
    }

    fn peek_is_definite_comp_head(&self) -> bool {
        matches!(
            self.peek(),
            Some(
                Tok::Return
                    | Tok::Force
                    | Tok::Nil
                    | Tok::Proj
                    | Tok::Rtensor
                    | Tok::Diverge
                    | Tok::Mu
                    | Tok::Print
                    | Tok::Choose
                    | Tok::KwError
                    | Tok::Write
                    | Tok::Read
                    | Tok::Let
                    | Tok::Lam
                    | Tok::Pm
            )
        )
    }

    fn parse_comp_app(&mut self) -> PResult<Comp> {
        if self.peek_is_definite_comp_head() {
            return self.parse_comp_head_then_homs();
        }
        // Value-leading: `V ' K` pushes the argument V. Parenthesized comps
        // also land here, so try the value route first and fall back.
        let save = self.save();
        let value_route = (|| -> PResult<Comp> {
            let v = self.parse_value_atom()?;
            self.expect(&Tok::Tick)?;
            let f = self.parse_comp_app()?;
            Ok(Comp::App { arg: Box::new(v), fun: Box::new(f) })
        })();
        match value_route {
            Ok(c) => Ok(c),
            Err(e1) => {
                self.restore(save);
                match self.parse_comp_head_then_homs() {
                    Ok(c) => Ok(c),
                    Err(e2) => {
                        // report the error from the longer parse
                        if e1.line > e2.line || (e1.line == e2.line && e1.col >= e2.col) {
                            Err(e1)
                        } else {
                            Err(e2)
                        }
                    }
                }
            }
        }
    }

    fn parse_comp_head_then_homs(&mut self) -> PResult<Comp> {
        let mut k = self.parse_comp_head()?;
        while self.eat(&Tok::Tick) {
            let (v, ann) = self.parse_value_atom_with_ann()?;
            k = Comp::AppHom { comp: Box::new(k), fun: Box::new(v), fun_ty: ann };
        }
        Ok(k)
    }

    fn parse_comp_atom(&mut self) -> PResult<Comp> {
        match self.peek().cloned() {
            Some(Tok::Diverge) => {
                self.pos += 1;
                Ok(Comp::Diverge)
            }
            Some(Tok::Nil) => {
                self.pos += 1;
                Ok(Comp::Nil)
            }
            Some(Tok::LParen) => {
                self.pos += 1;
                let m = self.parse_comp()?;
                let m = if self.eat(&Tok::Colon) {
                    let t = self.parse_ctype()?;
                    Comp::Annot { comp: Box::new(m), ty: Box::new(t) }
                } else {
                    m
                };
                self.expect(&Tok::RParen)?;
                Ok(m)
            }
            Some(Tok::Ident(name)) => {
                if self.is_bound(&name) {
                    return self.err(format!("`{name}` is a value here, not a computation"));
                }
                match self.env.get(&name) {
                    Some(Item::C(c)) => {
                        self.pos += 1;
                        Ok(c.clone())
                    }
                    Some(_) => self.err(format!("`{name}` is not a computation declaration")),
                    None => self.err(format!("unknown identifier `{name}`")),
                }
            }
            Some(t) => self.err(format!("expected a computation, found {t}")),
            None => self.err("expected a computation, found end of input"),
        }
    }

    fn parse_comp_head(&mut self) -> PResult<Comp> {
        match self.peek().cloned() {
            Some(Tok::Return) => {
                self.pos += 1;
                let v = self.parse_value_atom()?;
                Ok(Comp::Return(Box::new(v)))
            }
            Some(Tok::Force) => {
                self.pos += 1;
                let v = self.parse_value_atom()?;
                Ok(Comp::Force(Box::new(v)))
            }
            Some(Tok::Let) => {
                self.pos += 1;
                if self.eat(&Tok::Nil) {
                    self.expect(&Tok::Be)?;
                    let bound = self.parse_comp_app()?;
                    self.expect(&Tok::In)?;
                    let body = self.parse_comp()?;
                    return Ok(Comp::LetNil { bound: Box::new(bound), body: Box::new(body) });
                }
                let (x, ann) = self.parse_let_binder()?;
                self.expect(&Tok::Be)?;
                let val = self.parse_value()?;
                self.expect(&Tok::In)?;
                self.scope.push(x.clone());
                let body = self.parse_comp();
                self.scope.pop();
                Ok(Comp::LetV { x, ann, val: Box::new(val), body: Box::new(body?) })
            }
            Some(Tok::Lam) => {
                self.pos += 1;
                if self.peek() == Some(&Tok::LBrace) {
                    let branches = self.parse_branches("_", |p| p.parse_comp())?;
                    return Ok(Comp::LamI(branches.into_iter().map(|(_, k)| k).collect()));
                }
                if self.peek() == Some(&Tok::Nil) {
                    return self.err("`lam nil.` forms a value (a homomorphism); parenthesize it");
                }
                let x = self.expect_ident()?;
                self.expect(&Tok::Dot)?;
                self.scope.push(x.clone());
                let body = self.parse_comp();
                self.scope.pop();
                Ok(Comp::Lam { x, body: Box::new(body?) })
            }
            Some(Tok::Pm) => self.parse_pm_comp(),
            Some(Tok::Proj) => {
                self.pos += 1;
                let i = self.expect_nat()?;
                if i == 0 {
                    return self.err("projection indices are 1-based");
                }
                let k = self.parse_comp_atom()?;
                Ok(Comp::ProjI(i, Box::new(k)))
            }
            Some(Tok::Rtensor) => {
                self.pos += 1;
                let v = self.parse_value_atom()?;
                let k = self.parse_comp_atom()?;
                Ok(Comp::RetTensor { val: Box::new(v), comp: Box::new(k) })
            }
            Some(Tok::Mu) => {
                self.pos += 1;
                let z = self.expect_ident()?;
                self.expect(&Tok::Dot)?;
                self.scope.push(z.clone());
                let body = self.parse_comp();
                self.scope.pop();
                Ok(Comp::Mu { z, body: Box::new(body?) })
            }
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
                let k = self.parse_comp()?;
                Ok(Comp::Print(tokens, Box::new(k)))
            }
            Some(Tok::Choose) => {
                self.pos += 1;
                self.expect(&Tok::LBrace)?;
                let mut ks = Vec::new();
                loop {
                    ks.push(self.parse_comp()?);
                    if self.eat(&Tok::RBrace) {
                        break;
                    }
                    self.expect(&Tok::Comma)?;
                }
                Ok(Comp::Choose(ks))
            }
            Some(Tok::KwError) => {
                self.pos += 1;
                let e = self.expect_ident()?;
                Ok(Comp::Error(e))
            }
            Some(Tok::Write) => {
                self.pos += 1;
                let s = self.expect_ident()?;
                let k = self.parse_comp()?;
                Ok(Comp::Write(s, Box::new(k)))
            }
            Some(Tok::Read) => {
                self.pos += 1;
                self.expect(&Tok::LBrace)?;
                let mut branches = Vec::new();
                loop {
                    let s = self.expect_ident()?;
                    self.expect(&Tok::Arrow)?;
                    let k = self.parse_comp()?;
                    branches.push((s, k));
                    if self.eat(&Tok::RBrace) {
                        break;
                    }
                    self.expect(&Tok::Comma)?;
                }
                Ok(Comp::Read(branches))
            }
            _ => self.parse_comp_atom(),
        }
    }

    fn parse_pm_comp(&mut self) -> PResult<Comp> {
        self.expect(&Tok::Pm)?;
        let (scrut, scrut_ty) = self.parse_value_atom_with_ann()?;
        self.expect(&Tok::As)?;
        match self.peek().cloned() {
            Some(Tok::LParen) => {
                self.pos += 1;
                self.expect(&Tok::RParen)?;
                let motive = self.parse_motive_ct()?;
                self.expect(&Tok::In)?;
                let body = self.parse_comp()?;
                Ok(Comp::PmUnit { scrut: Box::new(scrut), body: Box::new(body), motive })
            }
            Some(Tok::Refl) => {
                self.pos += 1;
                let x = self.expect_ident()?;
                let motive = self.parse_id_motive_ct()?;
                self.expect(&Tok::In)?;
                self.scope.push(x.clone());
                let body = self.parse_comp();
                self.scope.pop();
                Ok(Comp::PmId {
                    scrut: Box::new(scrut),
                    scrut_ty,
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
                let motive = self.parse_motive_ct()?;
                self.expect(&Tok::In)?;
                if self.peek() == Some(&Tok::LBrace) {
                    let branches = self.parse_branches(&b, |p| p.parse_comp())?;
                    Ok(Comp::PmSum { scrut: Box::new(scrut), scrut_ty, branches, motive })
                } else {
                    self.scope.push(a.clone());
                    self.scope.push(b.clone());
                    let body = self.parse_comp();
                    self.scope.truncate(self.scope.len() - 2);
                    Ok(Comp::PmPair {
                        scrut: Box::new(scrut),
                        scrut_ty,
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

    // -- programs --------------------------------------------------------------

    fn parse_header(&mut self, sig: &mut EffectSignature) -> PResult<bool> {
        let name = match self.peek() {
            Some(Tok::Hash(h)) => h.clone(),
            _ => return Ok(false),
        };
        self.pos += 1;
        match name.as_str() {
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
                    return self.err(format!("initial state `{init}` is not in the state set"));
                }
                sig.states = states;
                sig.initial_state = init;
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
                    break;
                }
            },
            other => return self.err(format!("unknown header `#{other}`")),
        }
        Ok(true)
    }

    fn at_decl_boundary(&self) -> bool {
        matches!(self.peek(), None | Some(Tok::Def) | Some(Tok::Main) | Some(Tok::Hash(_)))
    }

    fn parse_decl_body(&mut self) -> PResult<Item> {
        let save = self.save();
        let mut best: Option<(ParseError, usize)> = None;
        macro_rules! attempt {
            ($e:expr, $wrap:expr) => {
                match $e {
                    Ok(v) => {
                        if self.at_decl_boundary() {
                            return Ok($wrap(v));
                        }
                        let err = self
                            .err::<()>("unexpected token after declaration body")
                            .unwrap_err();
                        let reached = self.pos;
                        if best.as_ref().map_or(true, |(_, p)| reached > *p) {
                            best = Some((err, reached));
                        }
                        self.restore(save);
                    }
                    Err(e) => {
                        let reached = self.pos;
                        if best.as_ref().map_or(true, |(_, p)| reached > *p) {
                            best = Some((e, reached));
                        }
                        self.restore(save);
                    }
                }
            };
        }
        attempt!(self.parse_comp(), Item::C);
        attempt!(self.parse_value(), Item::V);
        attempt!(self.parse_type(), |t| t);
        Err(best.unwrap().0)
    }

    fn parse_program(&mut self) -> PResult<Program> {
        let mut sig = EffectSignature::default();
        let mut decls: Vec<Decl> = Vec::new();
        let mut main: Option<Comp> = None;
        loop {
            if self.parse_header(&mut sig)? {
                continue;
            }
            match self.peek() {
                None => break,
                Some(Tok::Def) => {
                    let (line, _) = self.here();
                    self.pos += 1;
                    let name = self.expect_ident()?;
                    if self.env.contains_key(&name) {
                        return self.err(format!("duplicate declaration `{name}`"));
                    }
                    let ascription = if self.eat(&Tok::Colon) {
                        Some(self.parse_type()?)
                    } else {
                        None
                    };
                    self.expect(&Tok::Eq)?;
                    let body = self.parse_decl_body()?;
                    match (&ascription, &body) {
                        (Some(Item::VT(_)), Item::V(_)) | (Some(Item::CT(_)), Item::C(_)) | (None, _) => {}
                        (Some(_), Item::VT(_)) | (Some(_), Item::CT(_)) => {
                            return self.err("type declarations take no ascription")
                        }
                        _ => return self.err("ascription kind does not match the body"),
                    }
                    let closed = match &body {
                        Item::V(v) => free_idents_value(v).is_empty(),
                        Item::C(c) => free_idents_comp(c).is_empty() && !has_free_nil(c),
                        Item::VT(t) => free_idents_vtype(t).is_empty(),
                        Item::CT(t) => free_idents_ctype(t).is_empty(),
                    };
                    if !closed {
                        return self.err(format!("declaration `{name}` has free identifiers"));
                    }
                    // Splice computation declarations together with their
                    // ascription so references stay synthesizable.
                    let spliced = match (&body, &ascription) {
                        (Item::C(c), Some(Item::CT(t))) => Item::C(Comp::Annot {
                            comp: Box::new(c.clone()),
                            ty: Box::new(t.clone()),
                        }),
                        _ => body.clone(),
                    };
                    self.env.insert(name.clone(), spliced);
                    decls.push(Decl { name, kind: body.kind(), ascription, body, line });
                }
                Some(Tok::Main) => {
                    if main.is_some() {
                        return self.err("duplicate `main`");
                    }
                    self.pos += 1;
                    self.expect(&Tok::Eq)?;
                    let m = self.parse_comp()?;
                    if !self.at_decl_boundary() {
                        return self.err("unexpected token after `main` body");
                    }
                    if !free_idents_comp(&m).is_empty() || has_free_nil(&m) {
                        return self.err("`main` must be a closed computation");
                    }
                    main = Some(m);
                }
                Some(t) => {
                    let t = t.clone();
                    return self.err(format!("expected `def`, `main` or a header, found {t}"));
                }
            }
        }
        // Collect print tokens used anywhere into the output alphabet.
        for d in &decls {
            if let Item::C(c) = &d.body {
                collect_tokens(c, &mut sig.monoid_alphabet);
            }
        }
        if let Some(m) = &main {
            collect_tokens(m, &mut sig.monoid_alphabet);
        }
        Ok(Program { signature: sig, decls, main, expect_fail: Vec::new() })
    }
}

fn collect_tokens(m: &Comp, acc: &mut std::collections::BTreeSet<Token>) {
    use Comp::*;
    match m {
        Print(ts, k) => {
            acc.extend(ts.iter().cloned());
            collect_tokens(k, acc);
        }
        LetV { val, body, .. } => {
            collect_tokens_value(val, acc);
            collect_tokens(body, acc);
        }
        LetNil { bound, body } => {
            collect_tokens(bound, acc);
            collect_tokens(body, acc);
        }
        Return(v) | Force(v) => collect_tokens_value(v, acc),
        To { comp, body, .. } | ToTensor { comp, body, .. } => {
            collect_tokens(comp, acc);
            collect_tokens(body, acc);
        }
        PmSum { scrut, branches, .. } => {
            collect_tokens_value(scrut, acc);
            branches.iter().for_each(|(_, k)| collect_tokens(k, acc));
        }
        PmUnit { scrut, body, .. } | PmPair { scrut, body, .. } | PmId { scrut, body, .. } => {
            collect_tokens_value(scrut, acc);
            collect_tokens(body, acc);
        }
        LamI(ks) | Choose(ks) => ks.iter().for_each(|k| collect_tokens(k, acc)),
        ProjI(_, k) | Lam { body: k, .. } | Mu { body: k, .. } | Write(_, k) => {
            collect_tokens(k, acc)
        }
        App { arg, fun } => {
            collect_tokens_value(arg, acc);
            collect_tokens(fun, acc);
        }
        RetTensor { val, comp } => {
            collect_tokens_value(val, acc);
            collect_tokens(comp, acc);
        }
        AppHom { comp, fun, .. } => {
            collect_tokens(comp, acc);
            collect_tokens_value(fun, acc);
        }
        Read(bs) => bs.iter().for_each(|(_, k)| collect_tokens(k, acc)),
        Annot { comp, .. } => collect_tokens(comp, acc),
        Nil | Diverge | Error(_) => {}
    }
}

fn collect_tokens_value(v: &Value, acc: &mut std::collections::BTreeSet<Token>) {
    use Value::*;
    match v {
        Thunk(m) | LamNil(m) => collect_tokens(m, acc),
        LetV { val, body, .. } => {
            collect_tokens_value(val, acc);
            collect_tokens_value(body, acc);
        }
        Inj(_, w) | Refl(w) => collect_tokens_value(w, acc),
        Pair(a, b) => {
            collect_tokens_value(a, acc);
            collect_tokens_value(b, acc);
        }
        PmSum { scrut, branches, .. } => {
            collect_tokens_value(scrut, acc);
            branches.iter().for_each(|(_, w)| collect_tokens_value(w, acc));
        }
        PmUnit { scrut, body, .. } | PmPair { scrut, body, .. } | PmId { scrut, body, .. } => {
            collect_tokens_value(scrut, acc);
            collect_tokens_value(body, acc);
        }
        LamV { body, .. } => collect_tokens_value(body, acc),
        AppV { arg, fun } => {
            collect_tokens_value(arg, acc);
            collect_tokens_value(fun, acc);
        }
        Var(_) | UnitV => {}
    }
}

fn scan_expect_fail(text: &str) -> Vec<String> {
    let mut out = Vec::new();
    for line in text.lines() {
        if let Some(idx) = line.find("-- EXPECT-FAIL:") {
            let rest = &line[idx + "-- EXPECT-FAIL:".len()..];
            let prop = rest.trim().to_string();
            if !prop.is_empty() {
                out.push(prop);
            }
        }
    }
    out
}

/// Parses a whole `.dcbpv` program.
pub fn parse_program(text: &str) -> Result<Program, ParseError> {
    let expect_fail = scan_expect_fail(text);
    let lexed = lex(text)?;
    let mut p = Parser::new(lexed.toks);
    let mut prog = p.parse_program()?;
    prog.expect_fail = expect_fail;
    Ok(prog)
}

/// Parses a standalone computation (used by the repl and tests).
pub fn parse_comp_str(text: &str) -> Result<Comp, ParseError> {
    let lexed = lex(text)?;
    let mut p = Parser::new(lexed.toks);
    let c = p.parse_comp()?;
    if p.peek().is_some() {
        return p.err("unexpected trailing tokens");
    }
    Ok(c)
}

/// Parses a standalone computation that may have free identifiers
/// (scope-checked against `bound`).
pub fn parse_open_comp(text: &str, bound: &[&str]) -> Result<Comp, ParseError> {
    let lexed = lex(text)?;
    let mut p = Parser::new(lexed.toks);
    p.scope.extend(bound.iter().map(|s| s.to_string()));
    let c = p.parse_comp()?;
    if p.peek().is_some() {
        return p.err("unexpected trailing tokens");
    }
    Ok(c)
}

/// Parses a standalone value.
pub fn parse_value_str(text: &str) -> Result<Value, ParseError> {
    parse_open_value(text, &[])
}

pub fn parse_open_value(text: &str, bound: &[&str]) -> Result<Value, ParseError> {
    let lexed = lex(text)?;
    let mut p = Parser::new(lexed.toks);
    p.scope.extend(bound.iter().map(|s| s.to_string()));
    let v = p.parse_value()?;
    if p.peek().is_some() {
        return p.err("unexpected trailing tokens");
    }
    Ok(v)
}

/// Parses a standalone value type.
pub fn parse_vtype_str(text: &str) -> Result<ValueType, ParseError> {
    parse_open_vtype(text, &[])
}

pub fn parse_open_vtype(text: &str, bound: &[&str]) -> Result<ValueType, ParseError> {
    let lexed = lex(text)?;
    let mut p = Parser::new(lexed.toks);
    p.scope.extend(bound.iter().map(|s| s.to_string()));
    let t = p.parse_vtype()?;
    if p.peek().is_some() {
        return p.err("unexpected trailing tokens");
    }
    Ok(t)
}

/// Parses a standalone computation type.
pub fn parse_ctype_str(text: &str) -> Result<CompType, ParseError> {
    parse_open_ctype(text, &[])
}

pub fn parse_open_ctype(text: &str, bound: &[&str]) -> Result<CompType, ParseError> {
    let lexed = lex(text)?;
    let mut p = Parser::new(lexed.toks);
    p.scope.extend(bound.iter().map(|s| s.to_string()));
    let t = p.parse_ctype()?;
    if p.peek().is_some() {
        return p.err("unexpected trailing tokens");
    }
    Ok(t)
}

pub(crate) fn lex_for_surface(text: &str) -> PResult<Vec<(Tok, usize, usize)>> {
    Ok(lex(text)?.toks)
}
