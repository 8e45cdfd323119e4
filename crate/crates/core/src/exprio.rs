//! Textual boundary of the tool: a hand-written recursive-descent parser and
//! a canonical formatter for algebra expressions.
//!
//! The grammar (loosest to tightest binding):
//!
//! ```text
//! expr    :=  tensor (('+' | '-') tensor)*
//! tensor  :=  term ('(x)' term)*
//! term    :=  factor (('*' | '/') factor)*
//! factor  :=  '-' factor | power
//! power   :=  primary ('^' ['-' | '+'] INT)?
//! primary :=  INT | SYMBOL | FUNC '(' expr ')' | '(' expr ')' | '[' expr ',' expr ']'
//! FUNC    :=  'exp' | 'sinh' | 'cosh'
//! ```
//!
//! Symbols are context sensitive: `z`, `i`, `E`, `g00`..`g33`, `P0`..`P3`
//! always resolve; the momentum aliases `P+`, `P-` and the conserved
//! combination `W+` resolve only in the null-plane presentation; the six
//! letter names come from the presentation.  `exp`, `sinh`, `cosh` accept
//! only integer multiples of `z*P0` and lower onto `E` powers.  Division is
//! defined only by invertible monomials (rational multiples of `z^a*E^b`).
//!
//! The formatter emits a canonical form: one printed monomial per additive
//! chunk, factors ordered numeric, `z`, metric entries, letters, momenta,
//! `E`-part; terms ordered by descending letter word (graded, then
//! lexicographic), coefficient monomials ascending.  Exactly matched
//! `E^k ± E^-k` pairs re-sugar to `cosh`/`sinh`; everything else stays a raw
//! `E` power (`exp` is never emitted).  Tensor factors print flat around
//! `(x)` without sugar.  `parse . format` is the identity and distinct
//! canonical objects render distinctly.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::ground::{Gaussian, Rational};
use crate::hopf::{Tensor3Element, TensorElement};
use crate::ncalg::{commutator, mul, Element, Gen, LMono, Tensor};
use crate::presentations::{parse_integer, PresId, Presentation};
use crate::scalars::{
    evar, map_slots, pvar, split_tensor_monomial, zvar, CoeffScalar, Expo, MPoly, GVARS, V1, V2,
    V3,
};

// ---------------------------------------------------------------------------
// Errors
// ---------------------------------------------------------------------------

/// Syntax error with a 1-based column and a description of what was expected.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseError {
    pub position: usize,
    pub expected: String,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "column {}: expected {}", self.position, self.expected)
    }
}

impl std::error::Error for ParseError {}

/// Well-formed syntax that does not elaborate to an engine object.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ElaborationError {
    pub position: usize,
    pub message: String,
}

impl fmt::Display for ElaborationError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "column {}: {}", self.position, self.message)
    }
}

impl std::error::Error for ElaborationError {}

/// Either stage of failure when reading an expression.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ExprError {
    #[error("parse error at {0}")]
    Parse(#[from] ParseError),
    #[error("elaboration error at {0}")]
    Elaborate(#[from] ElaborationError),
}

// ---------------------------------------------------------------------------
// Elaborated values
// ---------------------------------------------------------------------------

/// Result of reading an expression: a commutative coefficient, an element,
/// or a two- or three-fold tensor element.
#[derive(Debug, Clone, PartialEq)]
pub enum Parsed<R: Rational> {
    Scalar(CoeffScalar<R>),
    Elem(Element<R>),
    T2(TensorElement<R>),
    T3(Tensor3Element<R>),
}

impl<R: Rational> Parsed<R> {
    /// Tensor depth: scalars count as rank 0 only when they involve no
    /// momentum or `E` content (shared `z`, metric, numeric factors).
    pub fn rank(&self) -> usize {
        match self {
            Parsed::Scalar(s) => {
                if shared_only(s) {
                    0
                } else {
                    1
                }
            }
            Parsed::Elem(_) => 1,
            Parsed::T2(_) => 2,
            Parsed::T3(_) => 3,
        }
    }

    /// View a rank-(0|1) value as an element.
    pub fn into_element(self) -> Option<Element<R>> {
        match self {
            Parsed::Scalar(s) => Some(Element::from_coeff(s)),
            Parsed::Elem(e) => Some(e),
            _ => None,
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            Parsed::Scalar(s) => s.is_zero(),
            Parsed::Elem(e) => e.is_zero(),
            Parsed::T2(t) => t.is_zero(),
            Parsed::T3(t) => t.is_zero(),
        }
    }
}

fn shared_only<R: Rational>(s: &CoeffScalar<R>) -> bool {
    s.iter().all(|(e, _)| {
        e.iter()
            .enumerate()
            .all(|(idx, k)| *k == 0 || idx < 1 + GVARS)
    })
}

// ---------------------------------------------------------------------------
// Lexer
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LPar,
    RPar,
    LBrk,
    RBrk,
    Comma,
    TensorOp,
    Int(String),
    Ident(String),
    End,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Plus => "'+'".into(),
            Tok::Minus => "'-'".into(),
            Tok::Star => "'*'".into(),
            Tok::Slash => "'/'".into(),
            Tok::Caret => "'^'".into(),
            Tok::LPar => "'('".into(),
            Tok::RPar => "')'".into(),
            Tok::LBrk => "'['".into(),
            Tok::RBrk => "']'".into(),
            Tok::Comma => "','".into(),
            Tok::TensorOp => "'(x)'".into(),
            Tok::Int(s) => format!("integer '{s}'"),
            Tok::Ident(s) => format!("symbol '{s}'"),
            Tok::End => "end of input".into(),
        }
    }
}

/// Tokenize. `null_names` enables the maximal-munch momentum aliases `P+`,
/// `P-` and the conserved-quantity name `W+`.
fn lex(src: &str, null_names: bool) -> Result<Vec<(usize, Tok)>, ParseError> {
    let b = src.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < b.len() {
        let c = b[i];
        if c.is_ascii_whitespace() {
            i += 1;
            continue;
        }
        let col = i + 1;
        match c {
            b'+' => {
                out.push((col, Tok::Plus));
                i += 1;
            }
            b'-' => {
                out.push((col, Tok::Minus));
                i += 1;
            }
            b'*' => {
                out.push((col, Tok::Star));
                i += 1;
            }
            b'/' => {
                out.push((col, Tok::Slash));
                i += 1;
            }
            b'^' => {
                out.push((col, Tok::Caret));
                i += 1;
            }
            b'(' => {
                if i + 2 < b.len() && b[i + 1] == b'x' && b[i + 2] == b')' {
                    out.push((col, Tok::TensorOp));
                    i += 3;
                } else {
                    out.push((col, Tok::LPar));
                    i += 1;
                }
            }
            b')' => {
                out.push((col, Tok::RPar));
                i += 1;
            }
            b'[' => {
                out.push((col, Tok::LBrk));
                i += 1;
            }
            b']' => {
                out.push((col, Tok::RBrk));
                i += 1;
            }
            b',' => {
                out.push((col, Tok::Comma));
                i += 1;
            }
            b'0'..=b'9' => {
                let start = i;
                while i < b.len() && b[i].is_ascii_digit() {
                    i += 1;
                }
                out.push((col, Tok::Int(src[start..i].to_string())));
            }
            _ if c.is_ascii_alphabetic() => {
                let start = i;
                while i < b.len() && b[i].is_ascii_alphanumeric() {
                    i += 1;
                }
                let mut name = src[start..i].to_string();
                if null_names && i < b.len() {
                    if (name == "P" && (b[i] == b'+' || b[i] == b'-'))
                        || (name == "W" && b[i] == b'+')
                    {
                        name.push(b[i] as char);
                        i += 1;
                    }
                }
                out.push((col, Tok::Ident(name)));
            }
            _ => {
                return Err(ParseError {
                    position: col,
                    expected: format!("a token (found unexpected character '{}')", c as char),
                })
            }
        }
    }
    out.push((src.len() + 1, Tok::End));
    Ok(out)
}

// ---------------------------------------------------------------------------
// AST and parser
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
struct Node {
    pos: usize,
    kind: Kind,
}

#[derive(Debug, Clone)]
enum Kind {
    Int(String),
    Sym(String),
    Neg(Box<Node>),
    Add(Box<Node>, Box<Node>),
    Sub(Box<Node>, Box<Node>),
    Mul(Box<Node>, Box<Node>),
    Div(Box<Node>, Box<Node>),
    Pow(Box<Node>, i64),
    TensorProd(Box<Node>, Box<Node>),
    Comm(Box<Node>, Box<Node>),
    Call(String, Box<Node>),
}

struct Parser {
    toks: Vec<(usize, Tok)>,
    at: usize,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.at].1
    }

    fn pos(&self) -> usize {
        self.toks[self.at].0
    }

    fn bump(&mut self) -> (usize, Tok) {
        let t = self.toks[self.at].clone();
        if self.at + 1 < self.toks.len() {
            self.at += 1;
        }
        t
    }

    fn expect(&mut self, want: &Tok, what: &str) -> Result<usize, ParseError> {
        if self.peek() == want {
            Ok(self.bump().0)
        } else {
            Err(ParseError {
                position: self.pos(),
                expected: format!("{what} (found {})", self.peek().describe()),
            })
        }
    }

    fn parse_full(mut self) -> Result<Node, ParseError> {
        let e = self.expr()?;
        if *self.peek() != Tok::End {
            return Err(ParseError {
                position: self.pos(),
                expected: format!(
                    "an operator or end of input (found {})",
                    self.peek().describe()
                ),
            });
        }
        Ok(e)
    }

    fn expr(&mut self) -> Result<Node, ParseError> {
        let mut lhs = self.tensor()?;
        loop {
            let pos = self.pos();
            match self.peek() {
                Tok::Plus => {
                    self.bump();
                    let rhs = self.tensor()?;
                    lhs = Node { pos, kind: Kind::Add(Box::new(lhs), Box::new(rhs)) };
                }
                Tok::Minus => {
                    self.bump();
                    let rhs = self.tensor()?;
                    lhs = Node { pos, kind: Kind::Sub(Box::new(lhs), Box::new(rhs)) };
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn tensor(&mut self) -> Result<Node, ParseError> {
        let mut lhs = self.term()?;
        while *self.peek() == Tok::TensorOp {
            let pos = self.bump().0;
            let rhs = self.term()?;
            lhs = Node { pos, kind: Kind::TensorProd(Box::new(lhs), Box::new(rhs)) };
        }
        Ok(lhs)
    }

    fn term(&mut self) -> Result<Node, ParseError> {
        let mut lhs = self.factor()?;
        loop {
            let pos = self.pos();
            match self.peek() {
                Tok::Star => {
                    self.bump();
                    let rhs = self.factor()?;
                    lhs = Node { pos, kind: Kind::Mul(Box::new(lhs), Box::new(rhs)) };
                }
                Tok::Slash => {
                    self.bump();
                    let rhs = self.factor()?;
                    lhs = Node { pos, kind: Kind::Div(Box::new(lhs), Box::new(rhs)) };
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn factor(&mut self) -> Result<Node, ParseError> {
        if *self.peek() == Tok::Minus {
            let pos = self.bump().0;
            let inner = self.factor()?;
            return Ok(Node { pos, kind: Kind::Neg(Box::new(inner)) });
        }
        self.power()
    }

    fn power(&mut self) -> Result<Node, ParseError> {
        let base = self.primary()?;
        if *self.peek() != Tok::Caret {
            return Ok(base);
        }
        let pos = self.bump().0;
        let mut sign: i64 = 1;
        match self.peek() {
            Tok::Minus => {
                sign = -1;
                self.bump();
            }
            Tok::Plus => {
                self.bump();
            }
            _ => {}
        }
        let ipos = self.pos();
        let digits = match self.bump().1 {
            Tok::Int(s) => s,
            other => {
                return Err(ParseError {
                    position: ipos,
                    expected: format!("an integer exponent (found {})", other.describe()),
                })
            }
        };
        let mag: i64 = digits.parse().map_err(|_| ParseError {
            position: ipos,
            expected: "an exponent within the machine integer range".into(),
        })?;
        Ok(Node { pos, kind: Kind::Pow(Box::new(base), sign * mag) })
    }

    fn primary(&mut self) -> Result<Node, ParseError> {
        let pos = self.pos();
        match self.peek().clone() {
            Tok::Int(s) => {
                self.bump();
                Ok(Node { pos, kind: Kind::Int(s) })
            }
            Tok::Ident(name) => {
                self.bump();
                if matches!(name.as_str(), "exp" | "sinh" | "cosh") {
                    self.expect(&Tok::LPar, "'(' after a function name")?;
                    let arg = self.expr()?;
                    self.expect(&Tok::RPar, "')' closing the function argument")?;
                    Ok(Node { pos, kind: Kind::Call(name, Box::new(arg)) })
                } else {
                    Ok(Node { pos, kind: Kind::Sym(name) })
                }
            }
            Tok::LPar => {
                self.bump();
                let inner = self.expr()?;
                self.expect(&Tok::RPar, "')'")?;
                Ok(inner)
            }
            Tok::LBrk => {
                self.bump();
                let a = self.expr()?;
                self.expect(&Tok::Comma, "',' between commutator arguments")?;
                let b = self.expr()?;
                self.expect(&Tok::RBrk, "']'")?;
                Ok(Node { pos, kind: Kind::Comm(Box::new(a), Box::new(b)) })
            }
            other => Err(ParseError {
                position: pos,
                expected: format!(
                    "an integer, a symbol, '(', '[', or '-' (found {})",
                    other.describe()
                ),
            }),
        }
    }
}

// ---------------------------------------------------------------------------
// Elaboration
// ---------------------------------------------------------------------------

const MAX_ELEMENT_POWER: i64 = 32;
const MAX_SCALAR_POWER: i64 = 1000;

struct Elab<'a, R: Rational> {
    ctx: &'a Presentation<R>,
}

type EResult<R> = Result<Parsed<R>, ElaborationError>;

impl<'a, R: Rational> Elab<'a, R> {
    fn err<T>(&self, pos: usize, msg: impl Into<String>) -> Result<T, ElaborationError> {
        Err(ElaborationError { position: pos, message: msg.into() })
    }

    fn ev(&self, n: &Node) -> EResult<R> {
        match &n.kind {
            Kind::Int(s) => {
                let v: R = parse_integer(s).ok_or_else(|| ElaborationError {
                    position: n.pos,
                    message: format!("integer literal '{s}' does not embed into the scalar type"),
                })?;
                Ok(Parsed::Scalar(MPoly::constant(Gaussian::new(v, R::zero()))))
            }
            Kind::Sym(name) => self.symbol(n.pos, name),
            Kind::Neg(a) => Ok(neg_parsed(self.ev(a)?)),
            Kind::Add(a, b) => self.add_sub(a, b, false),
            Kind::Sub(a, b) => self.add_sub(a, b, true),
            Kind::Mul(a, b) => {
                let va = self.ev(a)?;
                let vb = self.ev(b)?;
                self.mul_parsed(n.pos, va, vb)
            }
            Kind::Div(a, b) => {
                let va = self.ev(a)?;
                let vb = self.ev(b)?;
                let inv = self.invert(b.pos, vb)?;
                self.mul_parsed(n.pos, va, Parsed::Scalar(inv))
            }
            Kind::Pow(a, k) => self.pow(n.pos, self.ev(a)?, *k),
            Kind::TensorProd(a, b) => {
                let va = self.ev(a)?;
                let vb = self.ev(b)?;
                self.tensor_prod(n.pos, va, vb)
            }
            Kind::Comm(a, b) => {
                let va = self.ev(a)?;
                let vb = self.ev(b)?;
                self.comm(n.pos, va, vb)
            }
            Kind::Call(f, arg) => self.call(f, arg),
        }
    }

    fn symbol(&self, pos: usize, name: &str) -> EResult<R> {
        match name {
            "z" => return Ok(Parsed::Scalar(crate::scalars::zpow::<R, V1>(1))),
            "i" => return Ok(Parsed::Scalar(MPoly::imag_unit())),
            _ => {}
        }
        if let Some(g) = self.ctx.gen_by_name(name) {
            return Ok(match g {
                Gen::E => Parsed::Scalar(crate::scalars::epow(1)),
                Gen::P(mu) => Parsed::Scalar(crate::scalars::pmu(mu as usize)),
                Gen::Letter(l) => Parsed::Elem(Element::term(
                    [LMono::single(l)],
                    MPoly::one(),
                )),
            });
        }
        let by = name.as_bytes();
        if by.len() == 3 && by[0] == b'g' && by[1].is_ascii_digit() && by[2].is_ascii_digit() {
            let a = (by[1] - b'0') as usize;
            let b = (by[2] - b'0') as usize;
            if a < 4 && b < 4 {
                let (mu, nu) = (a.min(b), a.max(b));
                return Ok(Parsed::Scalar(crate::scalars::gmn(mu, nu)));
            }
        }
        if let Some(c) = self.ctx.constants.get(name) {
            return Ok(Parsed::Elem(c.clone()));
        }
        self.err(pos, format!("unknown symbol '{name}' in presentation {}", self.ctx.name()))
    }

    fn add_sub(&self, a: &Node, b: &Node, sub: bool) -> EResult<R> {
        let va = self.ev(a)?;
        let vb = if sub {
            neg_parsed(self.ev(b)?)
        } else {
            self.ev(b)?
        };
        let rank = va.rank().max(vb.rank()).max(1);
        let la = self.lift(a.pos, va, rank)?;
        let lb = self.lift(b.pos, vb, rank)?;
        Ok(match (la, lb) {
            (Parsed::Elem(x), Parsed::Elem(y)) => Parsed::Elem(x.add(&y)),
            (Parsed::T2(x), Parsed::T2(y)) => Parsed::T2(x.add(&y)),
            (Parsed::T3(x), Parsed::T3(y)) => Parsed::T3(x.add(&y)),
            _ => unreachable!("lift produces matching ranks"),
        })
    }

    /// Raise a value to the requested tensor rank.  Only values without
    /// slot content can move up; anything else is stuck at its own rank.
    fn lift(&self, pos: usize, v: Parsed<R>, rank: usize) -> EResult<R> {
        let own = v.rank();
        if own == rank {
            return Ok(match v {
                Parsed::Scalar(s) => Parsed::Elem(Element::from_coeff(s)),
                other => other,
            });
        }
        if own > rank || (own != 0 && own < rank) {
            return self.err(
                pos,
                format!("cannot combine a rank-{own} value with a rank-{rank} value"),
            );
        }
        // own == 0 (shared-only scalar): multiply onto the identity of the
        // target rank.
        let s = match v {
            Parsed::Scalar(s) => s,
            _ => unreachable!("rank 0 is always a scalar"),
        };
        Ok(match rank {
            1 => Parsed::Elem(Element::from_coeff(s)),
            2 => Parsed::T2(Tensor::from_coeff(map_slots::<R, V1, V2>(&s, &[0]))),
            3 => Parsed::T3(Tensor::from_coeff(map_slots::<R, V1, V3>(&s, &[0]))),
            _ => unreachable!("ranks are bounded by 3"),
        })
    }

    fn mul_parsed(&self, pos: usize, a: Parsed<R>, b: Parsed<R>) -> EResult<R> {
        let table = &self.ctx.table;
        // Shared-only scalars act centrally on any rank.
        if a.rank() == 0 {
            let s = match a {
                Parsed::Scalar(s) => s,
                _ => unreachable!(),
            };
            return Ok(scale_parsed(b, &s));
        }
        if b.rank() == 0 {
            let s = match b {
                Parsed::Scalar(s) => s,
                _ => unreachable!(),
            };
            return Ok(scale_parsed(a, &s));
        }
        match (a, b) {
            (Parsed::Scalar(x), Parsed::Scalar(y)) => Ok(Parsed::Scalar(x.mul(&y))),
            (Parsed::Scalar(x), Parsed::Elem(y)) => Ok(Parsed::Elem(mul(
                table,
                &Element::from_coeff(x),
                &y,
            ))),
            (Parsed::Elem(x), Parsed::Scalar(y)) => Ok(Parsed::Elem(mul(
                table,
                &x,
                &Element::from_coeff(y),
            ))),
            (Parsed::Elem(x), Parsed::Elem(y)) => Ok(Parsed::Elem(mul(table, &x, &y))),
            (Parsed::T2(x), Parsed::T2(y)) => Ok(Parsed::T2(mul(table, &x, &y))),
            (Parsed::T3(x), Parsed::T3(y)) => Ok(Parsed::T3(mul(table, &x, &y))),
            (x, y) => self.err(
                pos,
                format!(
                    "cannot multiply a rank-{} value by a rank-{} value",
                    x.rank(),
                    y.rank()
                ),
            ),
        }
    }

    /// Invert a divisor: it must be a scalar (or letter-free element) whose
    /// single monomial is a unit of the coefficient ring.
    fn invert(&self, pos: usize, v: Parsed<R>) -> Result<CoeffScalar<R>, ElaborationError> {
        let s = match v {
            Parsed::Scalar(s) => s,
            Parsed::Elem(e) => match elem_as_scalar(&e) {
                Some(s) => s,
                None => {
                    return self.err(pos, "division is defined only by scalars, not elements")
                }
            },
            other => {
                return self.err(
                    pos,
                    format!("division is defined only by scalars, not rank-{} values", other.rank()),
                )
            }
        };
        match s.try_invert() {
            Some(inv) => Ok(inv),
            None => self.err(
                pos,
                "division is defined only by invertible monomials (rational multiples of z^a*E^b)",
            ),
        }
    }

    fn pow(&self, pos: usize, v: Parsed<R>, k: i64) -> EResult<R> {
        match v {
            Parsed::Scalar(s) => {
                if k.unsigned_abs() > MAX_SCALAR_POWER as u64 {
                    return self.err(pos, format!("exponent {k} is out of range"));
                }
                match s.pow(k as i32) {
                    Ok(r) => Ok(Parsed::Scalar(r)),
                    Err(_) => self.err(
                        pos,
                        "negative powers are defined only for invertible monomials",
                    ),
                }
            }
            Parsed::Elem(e) => {
                if let Some(s) = elem_as_scalar(&e) {
                    return self.pow(pos, Parsed::Scalar(s), k);
                }
                if k < 0 {
                    return self.err(
                        pos,
                        "negative powers are defined only for invertible scalars",
                    );
                }
                if k > MAX_ELEMENT_POWER {
                    return self.err(pos, format!("exponent {k} is out of range for elements"));
                }
                let mut acc = Element::from_coeff(MPoly::one());
                for _ in 0..k {
                    acc = mul(&self.ctx.table, &acc, &e);
                }
                Ok(Parsed::Elem(acc))
            }
            other => self.err(
                pos,
                format!("powers are not defined for rank-{} values", other.rank()),
            ),
        }
    }

    fn tensor_prod(&self, pos: usize, a: Parsed<R>, b: Parsed<R>) -> EResult<R> {
        let ra = a.rank().max(1);
        let rb = b.rank().max(1);
        if ra + rb > 3 {
            return self.err(pos, "tensor expressions are limited to three factors");
        }
        match (ra, rb) {
            (1, 1) => {
                let x = a.into_element().unwrap();
                let y = b.into_element().unwrap();
                Ok(Parsed::T2(t2_of(&x, &y)))
            }
            (2, 1) => {
                let x = match a {
                    Parsed::T2(t) => t,
                    _ => unreachable!(),
                };
                let y = b.into_element().unwrap();
                Ok(Parsed::T3(t3_join(&x, &y, false)))
            }
            (1, 2) => {
                let x = a.into_element().unwrap();
                let y = match b {
                    Parsed::T2(t) => t,
                    _ => unreachable!(),
                };
                Ok(Parsed::T3(t3_join(&y, &x, true)))
            }
            _ => unreachable!("ranks bounded by the sum check"),
        }
    }

    fn comm(&self, pos: usize, a: Parsed<R>, b: Parsed<R>) -> EResult<R> {
        let table = &self.ctx.table;
        let rank = a.rank().max(b.rank()).max(1);
        let la = self.lift(pos, a, rank)?;
        let lb = self.lift(pos, b, rank)?;
        Ok(match (la, lb) {
            (Parsed::Elem(x), Parsed::Elem(y)) => Parsed::Elem(commutator(table, &x, &y)),
            (Parsed::T2(x), Parsed::T2(y)) => Parsed::T2(commutator(table, &x, &y)),
            (Parsed::T3(x), Parsed::T3(y)) => Parsed::T3(commutator(table, &x, &y)),
            _ => unreachable!("lift produces matching ranks"),
        })
    }

    fn call(&self, f: &str, arg: &Node) -> EResult<R> {
        let v = self.ev(arg)?;
        let s = match v {
            Parsed::Scalar(s) => s,
            Parsed::Elem(e) => match elem_as_scalar(&e) {
                Some(s) => s,
                None => {
                    return self.err(
                        arg.pos,
                        format!("the argument of {f} must be an integer multiple of z*{}", self.p0_name()),
                    )
                }
            },
            _ => {
                return self.err(
                    arg.pos,
                    format!("the argument of {f} must be a scalar, not a tensor"),
                )
            }
        };
        if s.is_zero() {
            return Ok(Parsed::Scalar(match f {
                "sinh" => MPoly::zero(),
                _ => MPoly::one(),
            }));
        }
        let bad = || {
            format!(
                "the argument of {f} must be an integer multiple of z*{}",
                self.p0_name()
            )
        };
        let (expo, c) = match s.as_monomial() {
            Some(m) => m,
            None => return self.err(arg.pos, bad()),
        };
        let mut shape = [0i16; V1];
        shape[zvar()] = 1;
        shape[pvar(0, 0)] = 1;
        if expo != shape || !c.im.is_zero() {
            return self.err(arg.pos, bad());
        }
        let r = c.re;
        if !(r.clone() % R::one()).is_zero() {
            return self.err(arg.pos, bad());
        }
        let printed = r.to_string();
        let k: i64 = match printed.parse() {
            Ok(k) => k,
            Err(_) => return self.err(arg.pos, bad()),
        };
        if k.unsigned_abs() > MAX_SCALAR_POWER as u64 {
            return self.err(arg.pos, format!("multiple {k} is out of range"));
        }
        let k = k as i16;
        Ok(Parsed::Scalar(match f {
            "exp" => crate::scalars::epow(k),
            "sinh" => crate::scalars::sinh_pow(k),
            "cosh" => crate::scalars::cosh_pow(k),
            _ => unreachable!("lexer admits only these names"),
        }))
    }

    fn p0_name(&self) -> &'static str {
        self.ctx.momentum_names[0]
    }
}

fn neg_parsed<R: Rational>(v: Parsed<R>) -> Parsed<R> {
    match v {
        Parsed::Scalar(s) => Parsed::Scalar(s.neg()),
        Parsed::Elem(e) => Parsed::Elem(e.neg()),
        Parsed::T2(t) => Parsed::T2(t.neg()),
        Parsed::T3(t) => Parsed::T3(t.neg()),
    }
}

fn scale_parsed<R: Rational>(v: Parsed<R>, s: &CoeffScalar<R>) -> Parsed<R> {
    match v {
        Parsed::Scalar(x) => Parsed::Scalar(x.mul(s)),
        Parsed::Elem(x) => Parsed::Elem(x.mul_coeff(s)),
        Parsed::T2(x) => Parsed::T2(x.mul_coeff(&map_slots::<R, V1, V2>(s, &[0]))),
        Parsed::T3(x) => Parsed::T3(x.mul_coeff(&map_slots::<R, V1, V3>(s, &[0]))),
    }
}

/// `Some(coeff)` when the element has no letters.
pub(crate) fn elem_as_scalar<R: Rational>(e: &Element<R>) -> Option<CoeffScalar<R>> {
    let mut out = CoeffScalar::<R>::zero();
    for (lms, c) in e.iter() {
        if !lms[0].is_empty() {
            return None;
        }
        out = out.add(c);
    }
    Some(out)
}

/// Plain tensor product of two elements: disjoint slots, shared `z`/metric
/// variables multiplied through.
fn t2_of<R: Rational>(a: &Element<R>, b: &Element<R>) -> TensorElement<R> {
    let mut out = TensorElement::zero();
    for (la, ca) in a.iter() {
        let wa = map_slots::<R, V1, V2>(ca, &[0]);
        for (lb, cb) in b.iter() {
            let wb = map_slots::<R, V1, V2>(cb, &[1]);
            out.add_term([la[0], lb[0]], wa.mul(&wb));
        }
    }
    out
}

/// Join a two-slot element with one more factor; `on_left` prepends it.
fn t3_join<R: Rational>(
    t: &TensorElement<R>,
    e: &Element<R>,
    on_left: bool,
) -> Tensor3Element<R> {
    let (tslots, eslot): (&[usize], usize) = if on_left { (&[1, 2], 0) } else { (&[0, 1], 2) };
    let mut out = Tensor3Element::zero();
    for (lt, ct) in t.iter() {
        let wt = map_slots::<R, V2, V3>(ct, tslots);
        for (le, ce) in e.iter() {
            let we = map_slots::<R, V1, V3>(ce, &[eslot]);
            let mut lms = [LMono::empty(); 3];
            lms[tslots[0]] = lt[0];
            lms[tslots[1]] = lt[1];
            lms[eslot] = le[0];
            out.add_term(lms, wt.mul(&we));
        }
    }
    out
}

// ---------------------------------------------------------------------------
// Entry point: parse
// ---------------------------------------------------------------------------

/// Read an expression in the context of a presentation and normal-order it.
pub fn parse<R: Rational>(src: &str, ctx: &Presentation<R>) -> Result<Parsed<R>, ExprError> {
    let toks = lex(src, ctx.id == PresId::NullPlane)?;
    let ast = Parser { toks, at: 0 }.parse_full()?;
    let v = Elab { ctx }.ev(&ast)?;
    // Collapse a letter-free element back to its scalar coefficient so the
    // result type mirrors the mathematical rank.
    Ok(match v {
        Parsed::Elem(e) => match elem_as_scalar(&e) {
            Some(s) => Parsed::Scalar(s),
            None => Parsed::Elem(e),
        },
        other => other,
    })
}

// ---------------------------------------------------------------------------
// Formatting
// ---------------------------------------------------------------------------

/// Metric-entry names in the order of their ring variables.
const G_NAMES: [&str; GVARS] = [
    "g00", "g01", "g02", "g03", "g11", "g12", "g13", "g22", "g23", "g33",
];

fn rat_str<R: Rational>(r: &R) -> String {
    r.to_string()
}

/// Numeric prefix of a printed monomial: sign plus zero or more `*`-joined
/// tokens (empty for an implicit 1 when other factors follow).
fn numeric_tokens<R: Rational>(c: &Gaussian<R>, has_other: bool) -> (bool, Vec<String>) {
    if c.im.is_zero() {
        let neg = c.re.is_negative();
        let a = c.re.abs();
        if a.is_one() && has_other {
            (neg, vec![])
        } else {
            (neg, vec![rat_str(&a)])
        }
    } else if c.re.is_zero() {
        let neg = c.im.is_negative();
        let b = c.im.abs();
        if b.is_one() {
            (neg, vec!["i".into()])
        } else {
            (neg, vec![rat_str(&b), "i".into()])
        }
    } else {
        let im_neg = c.im.is_negative();
        let b = c.im.abs();
        let im_part = if b.is_one() {
            "i".to_string()
        } else {
            format!("{}*i", rat_str(&b))
        };
        (
            false,
            vec![format!(
                "({}{}{})",
                rat_str(&c.re),
                if im_neg { "-" } else { "+" },
                im_part
            )],
        )
    }
}

fn push_pow(tokens: &mut Vec<String>, name: &str, k: i16) {
    match k {
        0 => {}
        1 => tokens.push(name.to_string()),
        _ => tokens.push(format!("{name}^{k}")),
    }
}

/// Commuting factors of one slot, `E` excluded: shared `z`/metric variables,
/// letters, momenta.
fn slot_tokens<R: Rational>(
    ctx: &Presentation<R>,
    shared: &Expo<V1>,
    lm: &LMono,
    slot: &Expo<V1>,
    with_shared: bool,
) -> Vec<String> {
    let mut t = Vec::new();
    if with_shared {
        push_pow(&mut t, "z", shared[zvar()]);
        for (gi, name) in G_NAMES.iter().enumerate() {
            push_pow(&mut t, name, shared[1 + gi]);
        }
    }
    for (idx, name) in ctx.letter_names.iter().enumerate() {
        push_pow(&mut t, name, lm.0[idx] as i16);
    }
    for (mu, name) in ctx.momentum_names.iter().enumerate() {
        push_pow(&mut t, name, slot[pvar(0, mu)]);
    }
    t
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum ERender {
    Plain(i16),
    Sinh(i16),
    Cosh(i16),
}

fn e_token<R: Rational>(ctx: &Presentation<R>, e: ERender) -> Option<String> {
    let arg = |k: i16| {
        if k == 1 {
            format!("z*{}", ctx.momentum_names[0])
        } else {
            format!("{k}*z*{}", ctx.momentum_names[0])
        }
    };
    match e {
        ERender::Plain(0) => None,
        ERender::Plain(1) => Some("E".into()),
        ERender::Plain(k) => Some(format!("E^{k}")),
        ERender::Sinh(k) => Some(format!("sinh({})", arg(k))),
        ERender::Cosh(k) => Some(format!("cosh({})", arg(k))),
    }
}

struct Chunk {
    neg: bool,
    body: String,
}

fn chunk<R: Rational>(numeric: &Gaussian<R>, rest: Vec<String>) -> Chunk {
    let (neg, mut toks) = numeric_tokens(numeric, !rest.is_empty());
    toks.extend(rest);
    if toks.is_empty() {
        toks.push("1".into());
    }
    Chunk { neg, body: toks.join("*") }
}

fn join_chunks(chunks: Vec<Chunk>) -> String {
    if chunks.is_empty() {
        return "0".into();
    }
    let mut out = String::new();
    for (n, c) in chunks.iter().enumerate() {
        if n == 0 {
            if c.neg {
                out.push('-');
            }
        } else {
            out.push_str(if c.neg { " - " } else { " + " });
        }
        out.push_str(&c.body);
    }
    out
}

/// Printing order of letter words: graded (total degree) descending, then
/// lexicographic descending, so letter terms precede pure-coefficient ones.
fn word_key(lms: &[LMono]) -> (u32, Vec<u8>) {
    let deg: u32 = lms.iter().map(|l| l.degree()).sum();
    let flat: Vec<u8> = lms.iter().flat_map(|l| l.0.iter().copied()).collect();
    (deg, flat)
}

/// Printing order of coefficient monomials within one letter word: total
/// absolute degree ascending, then lexicographic descending, so short
/// factors come first and metric entries appear in name order.
fn monomial_order<const N: usize>(a: &Expo<N>, b: &Expo<N>) -> std::cmp::Ordering {
    let deg = |e: &Expo<N>| e.iter().map(|k| k.unsigned_abs() as u32).sum::<u32>();
    deg(a).cmp(&deg(b)).then_with(|| b.cmp(a))
}

/// Canonical rendering of a single-copy element with `sinh`/`cosh` sugar on
/// exactly matched `E^k ± E^-k` pairs.
pub fn format_element<R: Rational>(ctx: &Presentation<R>, x: &Element<R>) -> String {
    let mut terms: Vec<(&[LMono; 1], &CoeffScalar<R>)> = x.iter().collect();
    terms.sort_by(|a, b| word_key(b.0).cmp(&word_key(a.0)));
    let mut chunks = Vec::new();
    for (lms, coeff) in terms {
        // Group the coefficient monomials by everything except the E power.
        let mut groups: BTreeMap<Expo<V1>, BTreeMap<i16, Gaussian<R>>> = BTreeMap::new();
        for (e, c) in coeff.iter() {
            let mut sig = *e;
            sig[evar(0)] = 0;
            groups.entry(sig).or_default().insert(e[evar(0)], c.clone());
        }
        let mut ordered: Vec<_> = groups.iter().collect();
        ordered.sort_by(|a, b| monomial_order(a.0, b.0));
        for (sig, emap) in ordered {
            let mut handled: BTreeSet<i16> = BTreeSet::new();
            for (&k, c) in emap.iter().rev() {
                if handled.contains(&k) {
                    continue;
                }
                handled.insert(k);
                let mut numeric = c.clone();
                let mut render = ERender::Plain(k);
                if k > 0 {
                    if let Some(opp) = emap.get(&-k) {
                        if *opp == *c {
                            render = ERender::Cosh(k);
                        } else if *opp == c.neg() {
                            render = ERender::Sinh(k);
                        }
                        if render != ERender::Plain(k) {
                            handled.insert(-k);
                            numeric = c.add(c);
                        }
                    }
                }
                let mut toks = slot_tokens(ctx, sig, &lms[0], sig, true);
                if let Some(t) = e_token(ctx, render) {
                    toks.push(t);
                }
                chunks.push(chunk(&numeric, toks));
            }
        }
    }
    join_chunks(chunks)
}

/// Canonical rendering of a commutative coefficient.
pub fn format_scalar<R: Rational>(ctx: &Presentation<R>, s: &CoeffScalar<R>) -> String {
    format_element(ctx, &Element::from_coeff(s.clone()))
}

fn format_tensor_generic<R: Rational, const K: usize, const N: usize>(
    ctx: &Presentation<R>,
    x: &Tensor<R, K, N>,
) -> String {
    let mut terms: Vec<(&[LMono; K], &MPoly<R, N>)> = x.iter().collect();
    terms.sort_by(|a, b| word_key(b.0.as_slice()).cmp(&word_key(a.0.as_slice())));
    let mut chunks = Vec::new();
    for (lms, coeff) in terms {
        let mut monos: Vec<_> = coeff.iter().collect();
        monos.sort_by(|a, b| monomial_order(a.0, b.0));
        for (e, c) in monos {
            let (shared, parts) = split_tensor_monomial(e);
            let mut factors = Vec::with_capacity(K);
            for s in 0..K {
                let toks = slot_tokens(ctx, &shared, &lms[s], &parts[s], s == 0);
                let mut toks = toks;
                if let Some(t) = e_token(ctx, ERender::Plain(parts[s][evar(0)])) {
                    toks.push(t);
                }
                factors.push(toks);
            }
            let (neg, num) = numeric_tokens(c, !factors[0].is_empty());
            let mut first = num;
            first.extend(std::mem::take(&mut factors[0]));
            factors[0] = first;
            let body = factors
                .iter()
                .map(|f| {
                    if f.is_empty() {
                        "1".to_string()
                    } else {
                        f.join("*")
                    }
                })
                .collect::<Vec<_>>()
                .join(" (x) ");
            chunks.push(Chunk { neg, body });
        }
    }
    join_chunks(chunks)
}

/// Canonical rendering of a two-slot element; tensor factors print flat,
/// without `sinh`/`cosh` sugar.
pub fn format_tensor2<R: Rational>(ctx: &Presentation<R>, x: &TensorElement<R>) -> String {
    format_tensor_generic(ctx, x)
}

/// Canonical rendering of a three-slot element.
pub fn format_tensor3<R: Rational>(ctx: &Presentation<R>, x: &Tensor3Element<R>) -> String {
    format_tensor_generic(ctx, x)
}

/// Canonical rendering of any parse result.
pub fn format<R: Rational>(ctx: &Presentation<R>, x: &Parsed<R>) -> String {
    match x {
        Parsed::Scalar(s) => format_scalar(ctx, s),
        Parsed::Elem(e) => format_element(ctx, e),
        Parsed::T2(t) => format_tensor2(ctx, t),
        Parsed::T3(t) => format_tensor3(ctx, t),
    }
}

// ---------------------------------------------------------------------------
// Tests
// ---------------------------------------------------------------------------
