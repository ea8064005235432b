//! PCTL formulas with a single top-level probability operator.
//!
//! Text syntax (ASCII or the usual symbols):
//!
//! ```text
//! query := "P" cmp NUMBER "[" path "]" | "P=?" "[" path "]" | path
//! cmp   := ">=" | ">" | "<=" | "<"
//! path  := "X" state | state "U" ["<=" INT] state | "F" ["<=" INT] state
//! state := and ("|" and)*          and := unary ("&" unary)*
//! unary := "!" unary | "true" | "false" | IDENT | '"' label '"' | "(" state ")"
//! ```

use alloc::boxed::Box;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum StateFormula {
    True,
    Prop(String),
    Not(Box<StateFormula>),
    And(Box<StateFormula>, Box<StateFormula>),
}

impl StateFormula {
    pub fn prop(name: impl Into<String>) -> Self {
        StateFormula::Prop(name.into())
    }

    pub fn falsum() -> Self {
        StateFormula::True.not()
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(self) -> Self {
        StateFormula::Not(Box::new(self))
    }

    pub fn and(self, other: Self) -> Self {
        StateFormula::And(Box::new(self), Box::new(other))
    }

    /// `a ∨ b` as `¬(¬a ∧ ¬b)`.
    pub fn or(self, other: Self) -> Self {
        self.not().and(other.not()).not()
    }

    /// Truth value in a state carrying `labels`.
    pub fn holds<S: AsRef<str>>(&self, labels: &[S]) -> bool {
        match self {
            StateFormula::True => true,
            StateFormula::Prop(p) => labels.iter().any(|l| l.as_ref() == p),
            StateFormula::Not(f) => !f.holds(labels),
            StateFormula::And(a, b) => a.holds(labels) && b.holds(labels),
        }
    }

    pub fn propositions(&self) -> Vec<&str> {
        let mut out = Vec::new();
        self.collect(&mut out);
        out
    }

    fn collect<'a>(&'a self, out: &mut Vec<&'a str>) {
        match self {
            StateFormula::True => {}
            StateFormula::Prop(p) => {
                if !out.contains(&p.as_str()) {
                    out.push(p)
                }
            }
            StateFormula::Not(f) => f.collect(out),
            StateFormula::And(a, b) => {
                a.collect(out);
                b.collect(out);
            }
        }
    }

    /// Errors on the first proposition not in `ap`.
    pub fn check_declared<S: AsRef<str>>(&self, ap: &[S]) -> Result<()> {
        for p in self.propositions() {
            if !ap.iter().any(|a| a.as_ref() == p) {
                return Err(Error::UndeclaredProposition(p.to_string()));
            }
        }
        Ok(())
    }
}

impl fmt::Display for StateFormula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StateFormula::True => write!(f, "true"),
            StateFormula::Prop(p) if is_ident(p) => write!(f, "{p}"),
            StateFormula::Prop(p) => write!(f, "\"{p}\""),
            StateFormula::Not(inner) => match inner.as_ref() {
                StateFormula::True => write!(f, "false"),
                StateFormula::And(..) => write!(f, "!({inner})"),
                _ => write!(f, "!{inner}"),
            },
            StateFormula::And(a, b) => {
                let wrap = |g: &StateFormula| matches!(g, StateFormula::And(..));
                if wrap(b) {
                    write!(f, "{a} & ({b})")
                } else {
                    write!(f, "{a} & {b}")
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PathFormula {
    Next(StateFormula),
    BoundedUntil {
        lhs: StateFormula,
        rhs: StateFormula,
        k: usize,
    },
    Until {
        lhs: StateFormula,
        rhs: StateFormula,
    },
}

impl PathFormula {
    pub fn eventually(target: StateFormula) -> Self {
        PathFormula::Until {
            lhs: StateFormula::True,
            rhs: target,
        }
    }

    pub fn bounded_eventually(target: StateFormula, k: usize) -> Self {
        PathFormula::BoundedUntil {
            lhs: StateFormula::True,
            rhs: target,
            k,
        }
    }

    pub fn check_declared<S: AsRef<str>>(&self, ap: &[S]) -> Result<()> {
        match self {
            PathFormula::Next(f) => f.check_declared(ap),
            PathFormula::BoundedUntil { lhs, rhs, .. } | PathFormula::Until { lhs, rhs } => {
                lhs.check_declared(ap)?;
                rhs.check_declared(ap)
            }
        }
    }
}

impl fmt::Display for PathFormula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PathFormula::Next(g) => write!(f, "X ({g})"),
            PathFormula::BoundedUntil { lhs, rhs, k } => write!(f, "({lhs}) U<={k} ({rhs})"),
            PathFormula::Until { lhs, rhs } => write!(f, "({lhs}) U ({rhs})"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum Comparison {
    #[cfg_attr(feature = "serde", serde(rename = "<"))]
    Lt,
    #[cfg_attr(feature = "serde", serde(rename = "<="))]
    Le,
    #[cfg_attr(feature = "serde", serde(rename = ">"))]
    Gt,
    #[cfg_attr(feature = "serde", serde(rename = ">="))]
    Ge,
}

impl Comparison {
    pub fn holds(self, value: f64, threshold: f64) -> bool {
        match self {
            Comparison::Lt => value < threshold,
            Comparison::Le => value <= threshold,
            Comparison::Gt => value > threshold,
            Comparison::Ge => value >= threshold,
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            Comparison::Lt => "<",
            Comparison::Le => "<=",
            Comparison::Gt => ">",
            Comparison::Ge => ">=",
        }
    }
}

/// `P⋈p [ψ]`, or a bare path formula when `bound` is `None`.
#[derive(Debug, Clone, PartialEq)]
pub struct Query {
    pub bound: Option<(Comparison, f64)>,
    pub path: PathFormula,
}

impl fmt::Display for Query {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.bound {
            Some((c, p)) => write!(f, "P{}{} [ {} ]", c.symbol(), p, self.path),
            None => write!(f, "P=? [ {} ]", self.path),
        }
    }
}

fn is_ident(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic() || c == '_')
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
        && !matches!(s, "X" | "U" | "F" | "P" | "true" | "false")
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Quoted(String),
    Num(String),
    Sym(&'static str),
}

fn lex(src: &str) -> Result<Vec<(usize, Tok)>> {
    let mut out = Vec::new();
    let bytes: Vec<(usize, char)> = src.char_indices().collect();
    let mut i = 0;
    let err = |pos: usize, msg: &str| Error::Parse {
        pos,
        msg: msg.to_string(),
    };
    while i < bytes.len() {
        let (pos, c) = bytes[i];
        if c.is_whitespace() {
            i += 1;
            continue;
        }
        let two: String = bytes[i..bytes.len().min(i + 2)].iter().map(|b| b.1).collect();
        let sym2 = match two.as_str() {
            ">=" => Some(">="),
            "<=" => Some("<="),
            "=?" => Some("=?"),
            "&&" => Some("&"),
            "||" => Some("|"),
            _ => None,
        };
        if let Some(s) = sym2 {
            out.push((pos, Tok::Sym(s)));
            i += 2;
            continue;
        }
        let sym1 = match c {
            '>' => Some(">"),
            '<' => Some("<"),
            '[' => Some("["),
            ']' => Some("]"),
            '(' => Some("("),
            ')' => Some(")"),
            '!' | '¬' => Some("!"),
            '&' | '∧' => Some("&"),
            '|' | '∨' => Some("|"),
            '◊' => Some("F"),
            '≤' => Some("<="),
            '≥' => Some(">="),
            _ => None,
        };
        if let Some(s) = sym1 {
            out.push((pos, Tok::Sym(s)));
            i += 1;
            continue;
        }
        if c == '"' {
            let start = i + 1;
            let mut j = start;
            while j < bytes.len() && bytes[j].1 != '"' {
                j += 1;
            }
            if j == bytes.len() {
                return Err(err(pos, "unterminated quoted label"));
            }
            out.push((pos, Tok::Quoted(bytes[start..j].iter().map(|b| b.1).collect())));
            i = j + 1;
            continue;
        }
        if c.is_ascii_digit() || c == '.' {
            let mut j = i;
            while j < bytes.len()
                && (bytes[j].1.is_ascii_digit() || matches!(bytes[j].1, '.' | 'e' | 'E' | '-' | '+'))
            {
                if matches!(bytes[j].1, '-' | '+') && !matches!(bytes[j - 1].1, 'e' | 'E') {
                    break;
                }
                j += 1;
            }
            out.push((pos, Tok::Num(bytes[i..j].iter().map(|b| b.1).collect())));
            i = j;
            continue;
        }
        if c.is_ascii_alphabetic() || c == '_' {
            let mut j = i;
            while j < bytes.len() && (bytes[j].1.is_ascii_alphanumeric() || bytes[j].1 == '_') {
                j += 1;
            }
            out.push((pos, Tok::Ident(bytes[i..j].iter().map(|b| b.1).collect())));
            i = j;
            continue;
        }
        return Err(err(pos, &format!("unexpected character `{c}`")));
    }
    Ok(out)
}

struct Parser {
    toks: Vec<(usize, Tok)>,
    i: usize,
    end: usize,
}

impl Parser {
    fn pos(&self) -> usize {
        self.toks.get(self.i).map_or(self.end, |t| t.0)
    }

    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.i).map(|t| &t.1)
    }

    fn err<T>(&self, msg: impl Into<String>) -> Result<T> {
        Err(Error::Parse {
            pos: self.pos(),
            msg: msg.into(),
        })
    }

    fn is_sym(&self, s: &str) -> bool {
        matches!(self.peek(), Some(Tok::Sym(t)) if *t == s)
    }

    fn is_kw(&self, s: &str) -> bool {
        matches!(self.peek(), Some(Tok::Ident(t)) if t == s) || (s == "F" && self.is_sym("F"))
    }

    fn expect_sym(&mut self, s: &str) -> Result<()> {
        if self.is_sym(s) {
            self.i += 1;
            Ok(())
        } else {
            self.err(format!("expected `{s}`"))
        }
    }

    fn number(&mut self) -> Result<f64> {
        match self.peek() {
            Some(Tok::Num(s)) => {
                let v: f64 = s.parse().map_err(|_| Error::Parse {
                    pos: self.pos(),
                    msg: format!("bad number `{s}`"),
                })?;
                self.i += 1;
                Ok(v)
            }
            _ => self.err("expected a number"),
        }
    }

    fn bound(&mut self) -> Result<Option<usize>> {
        if !self.is_sym("<=") {
            return Ok(None);
        }
        self.i += 1;
        match self.peek() {
            Some(Tok::Num(s)) => {
                let k: usize = s.parse().map_err(|_| Error::Parse {
                    pos: self.pos(),
                    msg: format!("step bound must be a nonnegative integer, got `{s}`"),
                })?;
                self.i += 1;
                Ok(Some(k))
            }
            _ => self.err("expected a step bound"),
        }
    }

    fn query(&mut self) -> Result<Query> {
        if self.is_kw("P") {
            self.i += 1;
            let bound = if self.is_sym("=?") {
                self.i += 1;
                None
            } else {
                let cmp = match self.peek() {
                    Some(Tok::Sym(">=")) => Comparison::Ge,
                    Some(Tok::Sym(">")) => Comparison::Gt,
                    Some(Tok::Sym("<=")) => Comparison::Le,
                    Some(Tok::Sym("<")) => Comparison::Lt,
                    _ => return self.err("expected a comparison after `P`"),
                };
                self.i += 1;
                let p = self.number()?;
                if !(0.0..=1.0).contains(&p) {
                    return self.err("probability threshold must lie in [0, 1]");
                }
                Some((cmp, p))
            };
            self.expect_sym("[")?;
            let path = self.path()?;
            self.expect_sym("]")?;
            return Ok(Query { bound, path });
        }
        Ok(Query {
            bound: None,
            path: self.path()?,
        })
    }

    fn path(&mut self) -> Result<PathFormula> {
        if self.is_kw("X") {
            self.i += 1;
            return Ok(PathFormula::Next(self.state()?));
        }
        if self.is_kw("F") {
            self.i += 1;
            let k = self.bound()?;
            let target = self.state()?;
            return Ok(match k {
                Some(k) => PathFormula::bounded_eventually(target, k),
                None => PathFormula::eventually(target),
            });
        }
        let lhs = self.state()?;
        if !self.is_kw("U") {
            return self.err("expected `U` in path formula");
        }
        self.i += 1;
        let k = self.bound()?;
        let rhs = self.state()?;
        Ok(match k {
            Some(k) => PathFormula::BoundedUntil { lhs, rhs, k },
            None => PathFormula::Until { lhs, rhs },
        })
    }

    fn state(&mut self) -> Result<StateFormula> {
        let mut f = self.conj()?;
        while self.is_sym("|") {
            self.i += 1;
            f = f.or(self.conj()?);
        }
        Ok(f)
    }

    fn conj(&mut self) -> Result<StateFormula> {
        let mut f = self.unary()?;
        while self.is_sym("&") {
            self.i += 1;
            f = f.and(self.unary()?);
        }
        Ok(f)
    }

    fn unary(&mut self) -> Result<StateFormula> {
        if self.is_sym("!") {
            self.i += 1;
            return Ok(self.unary()?.not());
        }
        if self.is_sym("(") {
            self.i += 1;
            let f = self.state()?;
            self.expect_sym(")")?;
            return Ok(f);
        }
        let tok = self.peek().cloned();
        match tok {
            Some(Tok::Ident(s)) => match s.as_str() {
                "true" => {
                    self.i += 1;
                    Ok(StateFormula::True)
                }
                "false" => {
                    self.i += 1;
                    Ok(StateFormula::falsum())
                }
                "P" => self.err("nested probabilistic operators are not supported"),
                "X" | "U" | "F" => self.err(format!("unexpected temporal operator `{s}`")),
                _ => {
                    self.i += 1;
                    Ok(StateFormula::Prop(s))
                }
            },
            Some(Tok::Quoted(s)) => {
                self.i += 1;
                Ok(StateFormula::Prop(s))
            }
            _ => self.err("expected a state formula"),
        }
    }
}

pub fn parse_query(src: &str) -> Result<Query> {
    let mut p = Parser {
        toks: lex(src)?,
        i: 0,
        end: src.len(),
    };
    let q = p.query()?;
    if p.i != p.toks.len() {
        return p.err("trailing input");
    }
    Ok(q)
}

pub fn parse_state_formula(src: &str) -> Result<StateFormula> {
    let mut p = Parser {
        toks: lex(src)?,
        i: 0,
        end: src.len(),
    };
    let f = p.state()?;
    if p.i != p.toks.len() {
        return p.err("trailing input");
    }
    Ok(f)
}
