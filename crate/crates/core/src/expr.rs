//! Coefficient-function expressions.
//!
//! Grammar (EBNF, whitespace ignored):
//!
//! ```text
//! expr    = term , { ("+" | "-") , term } ;
//! term    = unary , { ("*" | "/") , unary } ;
//! unary   = "-" , unary | power ;
//! power   = primary , [ "^" , unary ] ;          (* right-associative *)
//! primary = number | "n" | call | "(" , expr , ")" ;
//! call    = ident , "(" , expr , { "," , expr } , ")" ;
//! ident   = "exp" | "log" | "log10" | "sqrt" | "floor" | "abs"   (* 1 arg *)
//!         | "pow" | "uniform" ;                                   (* 2 args *)
//! number  = digit , { digit } , [ "." , { digit } ] , [ ("e" | "E") , [ "+" | "-" ] , digit , { digit } ] ;
//! ```
//!
//! `uniform(lo, hi)` draws from the keyed generator in [`crate::rng`]. Draws
//! are numbered in evaluation order: arguments first, left to right, then the
//! node itself.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::rng::keyed_uniform;
use crate::scinum::SciNum;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Exp,
    Log,
    Log10,
    Sqrt,
    Floor,
    Abs,
    Pow,
}

impl Func {
    fn from_name(name: &str) -> Option<Func> {
        Some(match name {
            "exp" => Func::Exp,
            "log" => Func::Log,
            "log10" => Func::Log10,
            "sqrt" => Func::Sqrt,
            "floor" => Func::Floor,
            "abs" => Func::Abs,
            "pow" => Func::Pow,
            _ => return None,
        })
    }

    pub fn name(self) -> &'static str {
        match self {
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Log10 => "log10",
            Func::Sqrt => "sqrt",
            Func::Floor => "floor",
            Func::Abs => "abs",
            Func::Pow => "pow",
        }
    }

    pub fn arity(self) -> usize {
        match self {
            Func::Pow => 2,
            _ => 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Lit(f64),
    N,
    Neg(Box<Expr>),
    Bin(BinOp, Box<Expr>, Box<Expr>),
    Call(Func, Vec<Expr>),
    Uniform(Box<Expr>, Box<Expr>),
}

/// Step index and random-stream position for one evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EvalContext {
    pub n: u64,
    pub trial_seed: u64,
    pub draw_counter: u64,
}

impl EvalContext {
    pub fn new(n: u64, trial_seed: u64) -> Self {
        EvalContext {
            n,
            trial_seed,
            draw_counter: 0,
        }
    }

    fn draw(&mut self) -> f64 {
        let u = keyed_uniform(self.trial_seed, self.n, self.draw_counter);
        self.draw_counter += 1;
        u
    }
}

pub fn parse(text: &str) -> Result<Expr> {
    let mut p = Parser {
        src: text,
        tokens: tokenize(text)?,
        pos: 0,
    };
    let e = p.expr()?;
    match p.peek() {
        None => Ok(e),
        Some(t) => Err(p.error_at(t.offset, format!("unexpected {}", t.kind.describe()))),
    }
}

impl Expr {
    pub fn lit(v: f64) -> Expr {
        Expr::Lit(v)
    }

    pub fn bin(op: BinOp, a: Expr, b: Expr) -> Expr {
        Expr::Bin(op, Box::new(a), Box::new(b))
    }

    /// True when the expression mentions neither `n` nor a random draw.
    pub fn is_constant(&self) -> bool {
        !self.any(&|e| matches!(e, Expr::N | Expr::Uniform(..)))
    }

    pub fn has_random(&self) -> bool {
        self.any(&|e| matches!(e, Expr::Uniform(..)))
    }

    fn any(&self, pred: &dyn Fn(&Expr) -> bool) -> bool {
        if pred(self) {
            return true;
        }
        match self {
            Expr::Lit(_) | Expr::N => false,
            Expr::Neg(a) => a.any(pred),
            Expr::Bin(_, a, b) | Expr::Uniform(a, b) => a.any(pred) || b.any(pred),
            Expr::Call(_, args) => args.iter().any(|a| a.any(pred)),
        }
    }

    pub fn eval_at(&self, n: u64, trial_seed: u64) -> Result<f64> {
        self.eval(&mut EvalContext::new(n, trial_seed))
    }

    pub fn eval(&self, ctx: &mut EvalContext) -> Result<f64> {
        let v = match self {
            Expr::Lit(v) => *v,
            Expr::N => ctx.n as f64,
            Expr::Neg(a) => -a.eval(ctx)?,
            Expr::Bin(op, a, b) => {
                let x = a.eval(ctx)?;
                let y = b.eval(ctx)?;
                match op {
                    BinOp::Add => x + y,
                    BinOp::Sub => x - y,
                    BinOp::Mul => x * y,
                    BinOp::Div => {
                        if y == 0.0 {
                            return Err(Error::Domain("division by zero".into()));
                        }
                        x / y
                    }
                    BinOp::Pow => real_pow(x, y)?,
                }
            }
            Expr::Call(f, args) => {
                let x = args[0].eval(ctx)?;
                match f {
                    Func::Exp => x.exp(),
                    Func::Log => {
                        positive(x, "log")?;
                        x.ln()
                    }
                    Func::Log10 => {
                        positive(x, "log10")?;
                        x.log10()
                    }
                    Func::Sqrt => {
                        if x < 0.0 {
                            return Err(Error::Domain(format!("sqrt of negative {x}")));
                        }
                        x.sqrt()
                    }
                    Func::Floor => x.floor(),
                    Func::Abs => x.abs(),
                    Func::Pow => real_pow(x, args[1].eval(ctx)?)?,
                }
            }
            Expr::Uniform(lo, hi) => {
                let lo = lo.eval(ctx)?;
                let hi = hi.eval(ctx)?;
                lo + (hi - lo) * ctx.draw()
            }
        };
        if !v.is_finite() {
            return Err(Error::Domain(format!("non-finite value from {self}")));
        }
        Ok(v)
    }

    /// Evaluates in [`SciNum`] arithmetic, so products like `exp(√2·n²)`
    /// stay representable. Draw order matches [`Expr::eval`].
    pub fn eval_sci(&self, ctx: &mut EvalContext) -> Result<SciNum> {
        match self {
            Expr::Lit(v) => SciNum::from_real(*v),
            Expr::N => SciNum::from_real(ctx.n as f64),
            Expr::Neg(a) => Ok(a.eval_sci(ctx)?.neg()),
            Expr::Bin(op, a, b) => {
                let x = a.eval_sci(ctx)?;
                let y = b.eval_sci(ctx)?;
                match op {
                    BinOp::Add => x.add(y),
                    BinOp::Sub => x.sub(y),
                    BinOp::Mul => x.mul(y),
                    BinOp::Div => x.div(y),
                    BinOp::Pow => sci_pow(x, y),
                }
            }
            Expr::Call(f, args) => {
                let x = args[0].eval_sci(ctx)?;
                match f {
                    Func::Exp => {
                        let v = finite_real(x, "exp")?;
                        SciNum::from_log10(1, v * std::f64::consts::LOG10_E)
                    }
                    Func::Log => {
                        sci_positive(x, "log")?;
                        SciNum::from_real(x.log10_abs()? * std::f64::consts::LN_10)
                    }
                    Func::Log10 => {
                        sci_positive(x, "log10")?;
                        SciNum::from_real(x.log10_abs()?)
                    }
                    Func::Sqrt => match x.sign() {
                        0 => Ok(SciNum::ZERO),
                        1 => x.pow_real(0.5),
                        _ => Err(Error::Domain("sqrt of negative value".into())),
                    },
                    Func::Floor => {
                        if x.exponent() >= 17 {
                            Ok(x)
                        } else {
                            SciNum::from_real(x.to_f64().floor())
                        }
                    }
                    Func::Abs => Ok(x.abs()),
                    Func::Pow => {
                        let y = args[1].eval_sci(ctx)?;
                        sci_pow(x, y)
                    }
                }
            }
            Expr::Uniform(lo, hi) => {
                let lo = finite_real(lo.eval_sci(ctx)?, "uniform")?;
                let hi = finite_real(hi.eval_sci(ctx)?, "uniform")?;
                SciNum::from_real(lo + (hi - lo) * ctx.draw())
            }
        }
    }
}

fn positive(x: f64, what: &str) -> Result<()> {
    if x <= 0.0 {
        return Err(Error::Domain(format!("{what} of non-positive {x}")));
    }
    Ok(())
}

fn sci_positive(x: SciNum, what: &str) -> Result<()> {
    if x.sign() != 1 {
        return Err(Error::Domain(format!("{what} of non-positive value")));
    }
    Ok(())
}

fn finite_real(x: SciNum, what: &str) -> Result<f64> {
    let v = x.to_f64();
    if !v.is_finite() {
        return Err(Error::Domain(format!("{what} argument {x} out of range")));
    }
    Ok(v)
}

fn real_pow(x: f64, y: f64) -> Result<f64> {
    if x < 0.0 && y.fract() != 0.0 {
        return Err(Error::Domain(format!("{x}^{y} is not real")));
    }
    if x == 0.0 && y < 0.0 {
        return Err(Error::Domain("division by zero in 0^negative".into()));
    }
    Ok(x.powf(y))
}

fn sci_pow(x: SciNum, y: SciNum) -> Result<SciNum> {
    let e = finite_real(y, "power")?;
    match x.sign() {
        0 if e > 0.0 => Ok(SciNum::ZERO),
        0 if e == 0.0 => Ok(SciNum::ONE),
        0 => Err(Error::Domain("division by zero in 0^negative".into())),
        1 => x.pow_real(e),
        _ => {
            if e.fract() != 0.0 {
                return Err(Error::Domain(format!("negative base to power {e} is not real")));
            }
            let mag = x.abs().pow_real(e)?;
            Ok(if e % 2.0 == 0.0 { mag } else { mag.neg() })
        }
    }
}

// Printing: binary and negation children are parenthesized, so the text
// re-parses to the same tree.
impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn child(f: &mut fmt::Formatter<'_>, e: &Expr) -> fmt::Result {
            match e {
                Expr::Bin(..) | Expr::Neg(_) => write!(f, "({e})"),
                Expr::Lit(v) if *v < 0.0 => write!(f, "({e})"),
                _ => write!(f, "{e}"),
            }
        }
        match self {
            Expr::Lit(v) => write!(f, "{v:?}"),
            Expr::N => write!(f, "n"),
            Expr::Neg(a) => {
                write!(f, "-")?;
                child(f, a)
            }
            Expr::Bin(op, a, b) => {
                child(f, a)?;
                let s = match op {
                    BinOp::Add => " + ",
                    BinOp::Sub => " - ",
                    BinOp::Mul => " * ",
                    BinOp::Div => " / ",
                    BinOp::Pow => " ^ ",
                };
                write!(f, "{s}")?;
                child(f, b)
            }
            Expr::Call(func, args) => {
                write!(f, "{}(", func.name())?;
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        write!(f, ", ")?;
                    }
                    write!(f, "{a}")?;
                }
                write!(f, ")")
            }
            Expr::Uniform(lo, hi) => write!(f, "uniform({lo}, {hi})"),
        }
    }
}

impl FromStr for Expr {
    type Err = Error;
    fn from_str(s: &str) -> Result<Expr> {
        parse(s)
    }
}

impl Serialize for Expr {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Expr {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        parse(&s).map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq)]
enum TokKind {
    Num(f64),
    Ident(String),
    Op(char),
    LParen,
    RParen,
    Comma,
}

impl TokKind {
    fn describe(&self) -> String {
        match self {
            TokKind::Num(v) => format!("number {v}"),
            TokKind::Ident(s) => format!("identifier '{s}'"),
            TokKind::Op(c) => format!("'{c}'"),
            TokKind::LParen => "'('".into(),
            TokKind::RParen => "')'".into(),
            TokKind::Comma => "','".into(),
        }
    }
}

#[derive(Debug, Clone)]
struct Token {
    kind: TokKind,
    offset: usize,
}

fn tokenize(src: &str) -> Result<Vec<Token>> {
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        let start = i;
        let kind = match c {
            b' ' | b'\t' | b'\n' | b'\r' => {
                i += 1;
                continue;
            }
            b'0'..=b'9' | b'.' => {
                while i < bytes.len() && (bytes[i].is_ascii_digit() || bytes[i] == b'.') {
                    i += 1;
                }
                if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
                    let mut j = i + 1;
                    if j < bytes.len() && (bytes[j] == b'+' || bytes[j] == b'-') {
                        j += 1;
                    }
                    if j < bytes.len() && bytes[j].is_ascii_digit() {
                        while j < bytes.len() && bytes[j].is_ascii_digit() {
                            j += 1;
                        }
                        i = j;
                    }
                }
                let text = &src[start..i];
                let v: f64 = text.parse().map_err(|_| Error::Parse {
                    offset: start,
                    message: format!("malformed number '{text}'"),
                })?;
                out.push(Token {
                    kind: TokKind::Num(v),
                    offset: start,
                });
                continue;
            }
            b'a'..=b'z' | b'A'..=b'Z' | b'_' => {
                while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                    i += 1;
                }
                out.push(Token {
                    kind: TokKind::Ident(src[start..i].to_string()),
                    offset: start,
                });
                continue;
            }
            b'+' | b'-' | b'*' | b'/' | b'^' => TokKind::Op(c as char),
            b'(' => TokKind::LParen,
            b')' => TokKind::RParen,
            b',' => TokKind::Comma,
            _ => {
                let ch = src[start..].chars().next().unwrap_or('?');
                return Err(Error::Parse {
                    offset: start,
                    message: format!("unexpected character '{ch}'"),
                });
            }
        };
        out.push(Token {
            kind,
            offset: start,
        });
        i += 1;
    }
    Ok(out)
}

struct Parser<'a> {
    src: &'a str,
    tokens: Vec<Token>,
    pos: usize,
}

impl Parser<'_> {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos)
    }

    fn next(&mut self) -> Option<Token> {
        let t = self.tokens.get(self.pos).cloned();
        self.pos += 1;
        t
    }

    fn end_offset(&self) -> usize {
        self.src.len()
    }

    fn error_at(&self, offset: usize, message: String) -> Error {
        Error::Parse { offset, message }
    }

    fn eat_op(&mut self, ops: &[char]) -> Option<char> {
        match self.peek() {
            Some(Token {
                kind: TokKind::Op(c),
                ..
            }) if ops.contains(c) => {
                let c = *c;
                self.pos += 1;
                Some(c)
            }
            _ => None,
        }
    }

    fn expect(&mut self, want: TokKind) -> Result<Token> {
        match self.next() {
            Some(t) if t.kind == want => Ok(t),
            Some(t) => Err(self.error_at(
                t.offset,
                format!("expected {}, found {}", want.describe(), t.kind.describe()),
            )),
            None => Err(self.error_at(
                self.end_offset(),
                format!("expected {}, found end of input", want.describe()),
            )),
        }
    }

    fn expr(&mut self) -> Result<Expr> {
        let mut lhs = self.term()?;
        while let Some(c) = self.eat_op(&['+', '-']) {
            let rhs = self.term()?;
            let op = if c == '+' { BinOp::Add } else { BinOp::Sub };
            lhs = Expr::bin(op, lhs, rhs);
        }
        Ok(lhs)
    }

    fn term(&mut self) -> Result<Expr> {
        let mut lhs = self.unary()?;
        while let Some(c) = self.eat_op(&['*', '/']) {
            let rhs = self.unary()?;
            let op = if c == '*' { BinOp::Mul } else { BinOp::Div };
            lhs = Expr::bin(op, lhs, rhs);
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Expr> {
        if self.eat_op(&['-']).is_some() {
            return Ok(Expr::Neg(Box::new(self.unary()?)));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr> {
        let base = self.primary()?;
        if self.eat_op(&['^']).is_some() {
            let exp = self.unary()?;
            return Ok(Expr::bin(BinOp::Pow, base, exp));
        }
        Ok(base)
    }

    fn primary(&mut self) -> Result<Expr> {
        let Some(tok) = self.next() else {
            return Err(self.error_at(self.end_offset(), "unexpected end of input".into()));
        };
        match tok.kind {
            TokKind::Num(v) => Ok(Expr::Lit(v)),
            TokKind::LParen => {
                let e = self.expr()?;
                self.expect(TokKind::RParen)?;
                Ok(e)
            }
            TokKind::Ident(ref name) if name == "n" => Ok(Expr::N),
            TokKind::Ident(ref name) => self.call(name, &tok),
            other => Err(self.error_at(tok.offset, format!("unexpected {}", other.describe()))),
        }
    }

    fn call(&mut self, name: &str, tok: &Token) -> Result<Expr> {
        let arity = match name {
            "uniform" => 2,
            _ => match Func::from_name(name) {
                Some(f) => f.arity(),
                None => {
                    return Err(self.error_at(tok.offset, format!("unknown identifier '{name}'")))
                }
            },
        };
        self.expect(TokKind::LParen)?;
        let mut args = vec![self.expr()?];
        while matches!(self.peek(), Some(t) if t.kind == TokKind::Comma) {
            self.pos += 1;
            args.push(self.expr()?);
        }
        self.expect(TokKind::RParen)?;
        if args.len() != arity {
            return Err(self.error_at(
                tok.offset,
                format!(
                    "'{name}' takes {arity} argument{}, got {}",
                    if arity == 1 { "" } else { "s" },
                    args.len()
                ),
            ));
        }
        Ok(match Func::from_name(name) {
            Some(f) => Expr::Call(f, args),
            None => {
                let mut it = args.into_iter();
                let lo = it.next().unwrap();
                let hi = it.next().unwrap();
                Expr::Uniform(Box::new(lo), Box::new(hi))
            }
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn p(s: &str) -> Expr {
        parse(s).unwrap()
    }

    fn lit(v: f64) -> Expr {
        Expr::Lit(v)
    }

    #[test]
    fn precedence_examples() {
        assert_eq!(
            p("n^2 + 1"),
            Expr::bin(BinOp::Add, Expr::bin(BinOp::Pow, Expr::N, lit(2.0)), lit(1.0))
        );
        assert_eq!(
            p("2*n^3"),
            Expr::bin(BinOp::Mul, lit(2.0), Expr::bin(BinOp::Pow, Expr::N, lit(3.0)))
        );
        assert_eq!(
            p("uniform(0,1)*n"),
            Expr::bin(
                BinOp::Mul,
                Expr::Uniform(Box::new(lit(0.0)), Box::new(lit(1.0))),
                Expr::N
            )
        );
    }

    #[test]
    fn power_is_right_associative_and_binds_tighter_than_negation() {
        assert_eq!(p("2^3^2").eval_at(1, 0).unwrap(), 512.0);
        assert_eq!(p("-2^2").eval_at(1, 0).unwrap(), -4.0);
        assert_eq!(p("2^-1").eval_at(1, 0).unwrap(), 0.5);
        assert_eq!(p("8/4/2").eval_at(1, 0).unwrap(), 1.0);
        assert_eq!(p("1-2-3").eval_at(1, 0).unwrap(), -4.0);
        assert_eq!(p("(1+2)*3").eval_at(1, 0).unwrap(), 9.0);
    }

    #[test]
    fn eval_examples() {
        assert_eq!(p("n^2+1").eval_at(3, 0).unwrap(), 10.0);
        assert_eq!(p("exp(0)").eval_at(1, 0).unwrap(), 1.0);
        assert_eq!(p("pow(n, 0.5)").eval_at(16, 0).unwrap(), 4.0);
        assert_eq!(p("floor(n/3) + abs(-2) + log10(100) + log(1) + sqrt(9)").eval_at(7, 0).unwrap(), 9.0);
        assert_eq!(p("1.5e2 + .5").eval_at(1, 0).unwrap(), 150.5);
    }

    #[test]
    fn uniform_golden_value() {
        let e = p("uniform(0,1)");
        let u = e.eval_at(1, 42).unwrap();
        assert_eq!(u.to_bits(), keyed_uniform(42, 1, 0).to_bits());
        assert_eq!(u, 0.8315298503035657);
        let scaled = p("uniform(2,4)").eval_at(1, 42).unwrap();
        assert_eq!(scaled, 2.0 + 2.0 * u);
    }

    #[test]
    fn draws_advance_left_to_right() {
        let e = p("uniform(0,1) - uniform(0,1)");
        let mut ctx = EvalContext::new(5, 9);
        let v = e.eval(&mut ctx).unwrap();
        assert_eq!(ctx.draw_counter, 2);
        assert_eq!(v, keyed_uniform(9, 5, 0) - keyed_uniform(9, 5, 1));
    }

    #[test]
    fn repeated_evaluation_is_bit_identical() {
        let e = p("n*uniform(0,1) + exp(uniform(-1, 1))");
        let first = e.eval_at(17, 1234).unwrap().to_bits();
        for _ in 0..1000 {
            assert_eq!(e.eval_at(17, 1234).unwrap().to_bits(), first);
        }
    }

    #[test]
    fn whitespace_does_not_matter() {
        let a = p("n^2+3*n-1/n");
        let b = p("  n ^ 2 +\t3 * n - 1 /n ");
        assert_eq!(a, b);
        assert_eq!(a.eval_at(7, 0).unwrap(), b.eval_at(7, 0).unwrap());
    }

    #[test]
    fn parse_errors_carry_offsets() {
        match parse("n + * 2") {
            Err(Error::Parse { offset, .. }) => assert_eq!(offset, 4),
            other => panic!("{other:?}"),
        }
        match parse("2 * foo(n)") {
            Err(Error::Parse { offset, message }) => {
                assert_eq!(offset, 4);
                assert!(message.contains("unknown identifier"));
            }
            other => panic!("{other:?}"),
        }
        match parse("pow(n)") {
            Err(Error::Parse { message, .. }) => assert!(message.contains("2 arguments")),
            other => panic!("{other:?}"),
        }
        match parse("(n + 1") {
            Err(Error::Parse { offset, .. }) => assert_eq!(offset, 6),
            other => panic!("{other:?}"),
        }
        assert!(matches!(parse("n $ 1"), Err(Error::Parse { offset: 2, .. })));
        assert!(matches!(parse("uniform(0,1,2)"), Err(Error::Parse { .. })));
        assert!(matches!(parse(""), Err(Error::Parse { offset: 0, .. })));
    }

    #[test]
    fn domain_errors() {
        assert!(matches!(p("log(n - 1)").eval_at(1, 0), Err(Error::Domain(_))));
        assert!(matches!(p("sqrt(-n)").eval_at(1, 0), Err(Error::Domain(_))));
        assert!(matches!(p("1/(n-2)").eval_at(2, 0), Err(Error::Domain(_))));
        assert!(matches!(p("(-2)^0.5").eval_at(1, 0), Err(Error::Domain(_))));
        assert_eq!(p("(-2)^3").eval_at(1, 0).unwrap(), -8.0);
        assert!(matches!(p("exp(n)").eval_at(1000, 0), Err(Error::Domain(_))));
    }

    #[test]
    fn sci_evaluation_matches_real_and_survives_overflow() {
        for s in ["n^2+1", "n*exp(0.5)", "sqrt(n)/3", "pow(n, 1.5) - 2", "(-n)^3", "log(n)+log10(n)"] {
            let e = p(s);
            for n in 1..20 {
                let r = e.eval_at(n, 0).unwrap();
                let x = e.eval_sci(&mut EvalContext::new(n, 0)).unwrap().to_f64();
                assert!((r - x).abs() <= 1e-12 * r.abs().max(1.0), "{s} at {n}: {r} vs {x}");
            }
        }
        let big = p("exp(1.4142135623730951*n^2)")
            .eval_sci(&mut EvalContext::new(1000, 0))
            .unwrap();
        let want = std::f64::consts::SQRT_2 * 1e6 * std::f64::consts::LOG10_E;
        assert!((big.log10_abs().unwrap() - want).abs() < 1e-6);
        let r = p("n*uniform(0,1)");
        let a = r.eval_at(3, 11).unwrap();
        let b = r.eval_sci(&mut EvalContext::new(3, 11)).unwrap().to_f64();
        assert!((a - b).abs() < 1e-15);
    }

    #[test]
    fn constant_detection() {
        assert!(p("2 + 3*exp(1)").is_constant());
        assert!(!p("n").is_constant());
        assert!(!p("uniform(0,1)").is_constant());
        assert!(p("uniform(0,1)").has_random());
        assert!(!p("n^2").has_random());
    }

    fn arb_expr() -> impl Strategy<Value = Expr> {
        let leaf = prop_oneof![
            (0u32..1000).prop_map(|v| Expr::Lit(f64::from(v) / 8.0)),
            Just(Expr::N),
        ];
        leaf.prop_recursive(4, 24, 3, |inner| {
            prop_oneof![
                inner.clone().prop_map(|a| Expr::Neg(Box::new(a))),
                (
                    prop_oneof![
                        Just(BinOp::Add),
                        Just(BinOp::Sub),
                        Just(BinOp::Mul),
                        Just(BinOp::Div),
                        Just(BinOp::Pow)
                    ],
                    inner.clone(),
                    inner.clone()
                )
                    .prop_map(|(op, a, b)| Expr::bin(op, a, b)),
                (
                    prop_oneof![
                        Just(Func::Exp),
                        Just(Func::Log),
                        Just(Func::Log10),
                        Just(Func::Sqrt),
                        Just(Func::Floor),
                        Just(Func::Abs)
                    ],
                    inner.clone()
                )
                    .prop_map(|(f, a)| Expr::Call(f, vec![a])),
                (inner.clone(), inner.clone()).prop_map(|(a, b)| Expr::Call(Func::Pow, vec![a, b])),
                (inner.clone(), inner).prop_map(|(a, b)| Expr::Uniform(Box::new(a), Box::new(b))),
            ]
        })
    }

    proptest! {
        #[test]
        fn print_parse_round_trip(e in arb_expr()) {
            let text = e.to_string();
            let back = parse(&text).unwrap();
            prop_assert_eq!(&back, &e);
            prop_assert_eq!(back.to_string(), text);
        }
    }
}
