//! A small expression language for scalar functions of time.
//!
//! Grammar (lowest to highest precedence):
//!
//! ```text
//! expr   := term (('+' | '-') term)*
//! term   := unary (('*' | '/') unary)*
//! unary  := ('-' | '+') unary | power
//! power  := atom ('^' unary)?
//! atom   := number | 't' | constant | func '(' expr ')' | '(' expr ')'
//! ```
//!
//! `^` is right-associative and binds tighter than unary minus, so `-2^2`
//! is `-(2^2)` and `2^3^2` is `2^(3^2)`. Constants are `pi` and `e`;
//! functions are `sin`, `cos`, `exp`, `sqrt` and `abs`.

use std::fmt;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("syntax error at position {pos}: {kind}")]
pub struct ParseError {
    /// Byte offset into the source; equals the source length for
    /// errors at end of input.
    pub pos: usize,
    pub kind: ParseErrorKind,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseErrorKind {
    #[error("unexpected character '{0}'")]
    UnexpectedChar(char),
    #[error("malformed number '{0}'")]
    BadNumber(String),
    #[error("unexpected {0}")]
    UnexpectedToken(String),
    #[error("unexpected end of input")]
    UnexpectedEnd,
    #[error("unknown identifier '{0}'")]
    UnknownIdentifier(String),
    #[error("unknown function '{0}'")]
    UnknownFunction(String),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("division by zero at t = {t:e} s")]
    DivisionByZero { t: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinaryOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

impl BinaryOp {
    fn symbol(self) -> char {
        match self {
            BinaryOp::Add => '+',
            BinaryOp::Sub => '-',
            BinaryOp::Mul => '*',
            BinaryOp::Div => '/',
            BinaryOp::Pow => '^',
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Sin,
    Cos,
    Exp,
    Sqrt,
    Abs,
}

impl Func {
    pub const ALL: [Func; 5] = [Func::Sin, Func::Cos, Func::Exp, Func::Sqrt, Func::Abs];

    fn from_name(name: &str) -> Option<Func> {
        Some(match name {
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "exp" => Func::Exp,
            "sqrt" => Func::Sqrt,
            "abs" => Func::Abs,
            _ => return None,
        })
    }

    pub fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Exp => "exp",
            Func::Sqrt => "sqrt",
            Func::Abs => "abs",
        }
    }

    fn apply(self, x: f64) -> f64 {
        match self {
            Func::Sin => x.sin(),
            Func::Cos => x.cos(),
            Func::Exp => x.exp(),
            Func::Sqrt => x.sqrt(),
            Func::Abs => x.abs(),
        }
    }
}

/// Syntax tree of a parsed expression.
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Number(f64),
    /// The time variable `t`, in seconds.
    Time,
    Neg(Box<Expr>),
    Binary {
        op: BinaryOp,
        lhs: Box<Expr>,
        rhs: Box<Expr>,
    },
    Call {
        func: Func,
        arg: Box<Expr>,
    },
}

impl Expr {
    pub fn eval(&self, t: f64) -> Result<f64, EvalError> {
        Ok(match self {
            Expr::Number(v) => *v,
            Expr::Time => t,
            Expr::Neg(e) => -e.eval(t)?,
            Expr::Binary { op, lhs, rhs } => {
                let a = lhs.eval(t)?;
                let b = rhs.eval(t)?;
                match op {
                    BinaryOp::Add => a + b,
                    BinaryOp::Sub => a - b,
                    BinaryOp::Mul => a * b,
                    BinaryOp::Div => {
                        if b == 0.0 {
                            return Err(EvalError::DivisionByZero { t });
                        }
                        a / b
                    }
                    BinaryOp::Pow => pow(a, b),
                }
            }
            Expr::Call { func, arg } => func.apply(arg.eval(t)?),
        })
    }

    /// True when the tree does not reference `t`.
    pub fn is_constant(&self) -> bool {
        match self {
            Expr::Number(_) => true,
            Expr::Time => false,
            Expr::Neg(e) => e.is_constant(),
            Expr::Binary { lhs, rhs, .. } => lhs.is_constant() && rhs.is_constant(),
            Expr::Call { arg, .. } => arg.is_constant(),
        }
    }
}

// Integer exponents go through powi so that `x^2` matches `x*x` bit for bit
// on the common case.
fn pow(base: f64, exp: f64) -> f64 {
    if exp.fract() == 0.0 && exp.abs() <= i32::MAX as f64 {
        base.powi(exp as i32)
    } else {
        base.powf(exp)
    }
}

/// Fully parenthesised rendering. Re-parsing the output yields a tree that
/// evaluates identically.
impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Number(v) if *v < 0.0 || (*v == 0.0 && v.is_sign_negative()) => {
                write!(f, "(-{:?})", -v)
            }
            Expr::Number(v) => write!(f, "{v:?}"),
            Expr::Time => f.write_str("t"),
            Expr::Neg(e) => write!(f, "(-{e})"),
            Expr::Binary { op, lhs, rhs } => write!(f, "({lhs} {} {rhs})", op.symbol()),
            Expr::Call { func, arg } => write!(f, "{}({arg})", func.name()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Token {
    Number(f64),
    Ident(String),
    Op(char),
    LParen,
    RParen,
}

impl Token {
    fn describe(&self) -> String {
        match self {
            Token::Number(v) => format!("number {v}"),
            Token::Ident(s) => format!("identifier '{s}'"),
            Token::Op(c) => format!("operator '{c}'"),
            Token::LParen => "'('".to_string(),
            Token::RParen => "')'".to_string(),
        }
    }
}

fn tokenize(src: &str) -> Result<Vec<(usize, Token)>, ParseError> {
    let bytes = src.as_bytes();
    let mut tokens = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i] as char;
        if c.is_ascii_whitespace() {
            i += 1;
            continue;
        }
        let start = i;
        if c.is_ascii_digit() || c == '.' {
            while i < bytes.len() && (bytes[i].is_ascii_digit() || bytes[i] == b'.') {
                i += 1;
            }
            // Exponent part, only if followed by digits (optionally signed).
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
            let value: f64 = text.parse().map_err(|_| ParseError {
                pos: start,
                kind: ParseErrorKind::BadNumber(text.to_string()),
            })?;
            tokens.push((start, Token::Number(value)));
        } else if c.is_ascii_alphabetic() || c == '_' {
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                i += 1;
            }
            tokens.push((start, Token::Ident(src[start..i].to_string())));
        } else {
            let tok = match c {
                '+' | '-' | '*' | '/' | '^' => Token::Op(c),
                '(' => Token::LParen,
                ')' => Token::RParen,
                _ => {
                    let ch = src[start..].chars().next().unwrap_or(c);
                    return Err(ParseError {
                        pos: start,
                        kind: ParseErrorKind::UnexpectedChar(ch),
                    });
                }
            };
            tokens.push((start, tok));
            i += 1;
        }
    }
    Ok(tokens)
}

struct Parser<'a> {
    tokens: Vec<(usize, Token)>,
    idx: usize,
    src: &'a str,
}

impl Parser<'_> {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.idx).map(|(_, t)| t)
    }

    fn pos(&self) -> usize {
        self.tokens
            .get(self.idx)
            .map(|(p, _)| *p)
            .unwrap_or(self.src.len())
    }

    fn next(&mut self) -> Option<Token> {
        let tok = self.tokens.get(self.idx).map(|(_, t)| t.clone());
        if tok.is_some() {
            self.idx += 1;
        }
        tok
    }

    fn error_here(&self) -> ParseError {
        match self.peek() {
            Some(tok) => ParseError {
                pos: self.pos(),
                kind: ParseErrorKind::UnexpectedToken(tok.describe()),
            },
            None => ParseError {
                pos: self.src.len(),
                kind: ParseErrorKind::UnexpectedEnd,
            },
        }
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.term()?;
        while let Some(Token::Op(c @ ('+' | '-'))) = self.peek() {
            let op = if *c == '+' { BinaryOp::Add } else { BinaryOp::Sub };
            self.idx += 1;
            let rhs = self.term()?;
            lhs = Expr::Binary {
                op,
                lhs: Box::new(lhs),
                rhs: Box::new(rhs),
            };
        }
        Ok(lhs)
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.unary()?;
        while let Some(Token::Op(c @ ('*' | '/'))) = self.peek() {
            let op = if *c == '*' { BinaryOp::Mul } else { BinaryOp::Div };
            self.idx += 1;
            let rhs = self.unary()?;
            lhs = Expr::Binary {
                op,
                lhs: Box::new(lhs),
                rhs: Box::new(rhs),
            };
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Expr, ParseError> {
        match self.peek() {
            Some(Token::Op('-')) => {
                self.idx += 1;
                Ok(Expr::Neg(Box::new(self.unary()?)))
            }
            Some(Token::Op('+')) => {
                self.idx += 1;
                self.unary()
            }
            _ => self.power(),
        }
    }

    fn power(&mut self) -> Result<Expr, ParseError> {
        let base = self.atom()?;
        if let Some(Token::Op('^')) = self.peek() {
            self.idx += 1;
            let exp = self.unary()?;
            return Ok(Expr::Binary {
                op: BinaryOp::Pow,
                lhs: Box::new(base),
                rhs: Box::new(exp),
            });
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Expr, ParseError> {
        let pos = self.pos();
        match self.next() {
            Some(Token::Number(v)) => Ok(Expr::Number(v)),
            Some(Token::LParen) => {
                let inner = self.expr()?;
                self.close_paren()?;
                Ok(inner)
            }
            Some(Token::Ident(name)) => {
                if let Some(Token::LParen) = self.peek() {
                    let func = Func::from_name(&name).ok_or(ParseError {
                        pos,
                        kind: ParseErrorKind::UnknownFunction(name.clone()),
                    })?;
                    self.idx += 1;
                    let arg = self.expr()?;
                    self.close_paren()?;
                    Ok(Expr::Call {
                        func,
                        arg: Box::new(arg),
                    })
                } else {
                    match name.as_str() {
                        "t" => Ok(Expr::Time),
                        "pi" => Ok(Expr::Number(std::f64::consts::PI)),
                        "e" => Ok(Expr::Number(std::f64::consts::E)),
                        _ => Err(ParseError {
                            pos,
                            kind: ParseErrorKind::UnknownIdentifier(name),
                        }),
                    }
                }
            }
            Some(_) => {
                self.idx -= 1;
                Err(self.error_here())
            }
            None => Err(self.error_here()),
        }
    }

    fn close_paren(&mut self) -> Result<(), ParseError> {
        match self.peek() {
            Some(Token::RParen) => {
                self.idx += 1;
                Ok(())
            }
            _ => Err(self.error_here()),
        }
    }
}

/// Parse an expression in the time variable `t`.
pub fn parse_expr(src: &str) -> Result<Expr, ParseError> {
    let tokens = tokenize(src)?;
    let mut parser = Parser {
        tokens,
        idx: 0,
        src,
    };
    let expr = parser.expr()?;
    if parser.idx < parser.tokens.len() {
        return Err(parser.error_here());
    }
    Ok(expr)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn eval(src: &str, t: f64) -> f64 {
        parse_expr(src).unwrap().eval(t).unwrap()
    }

    #[test]
    fn zero_expression() {
        let e = parse_expr("0").unwrap();
        for t in [0.0, 1e-9, 1.0] {
            assert_eq!(e.eval(t).unwrap(), 0.0);
        }
    }

    #[test]
    fn precedence_and_associativity() {
        assert_eq!(eval("2 + 3 * 4", 0.0), 14.0);
        assert_eq!(eval("(2 + 3) * 4", 0.0), 20.0);
        assert_eq!(eval("10 - 4 - 3", 0.0), 3.0);
        assert_eq!(eval("8 / 4 / 2", 0.0), 1.0);
        assert_eq!(eval("2^3^2", 0.0), 512.0);
        assert_eq!(eval("-2^2", 0.0), -4.0);
        assert_eq!(eval("2^-1", 0.0), 0.5);
        assert_eq!(eval("--3", 0.0), 3.0);
    }

    #[test]
    fn literals_constants_and_functions() {
        assert_eq!(eval("81.87e-6", 0.0), 81.87e-6);
        assert_eq!(eval("1E3", 0.0), 1000.0);
        assert_eq!(eval(".5", 0.0), 0.5);
        assert_eq!(eval("pi", 0.0), PI);
        assert_eq!(eval("e", 0.0), std::f64::consts::E);
        assert_eq!(eval("t", 3.5), 3.5);
        assert!((eval("sin(pi/2)", 0.0) - 1.0).abs() < 1e-15);
        assert_eq!(eval("sqrt(16) + abs(-2) + exp(0) + cos(0)", 0.0), 8.0);
    }

    #[test]
    fn unbalanced_parenthesis_reports_end_of_input() {
        let src = "sin(2*pi*1e6*t";
        let err = parse_expr(src).unwrap_err();
        assert_eq!(err.pos, src.len());
        assert_eq!(err.kind, ParseErrorKind::UnexpectedEnd);

        let err = parse_expr("(1 + 2").unwrap_err();
        assert_eq!(err.kind, ParseErrorKind::UnexpectedEnd);
    }

    #[test]
    fn syntax_errors_carry_position() {
        let err = parse_expr("1 + * 2").unwrap_err();
        assert_eq!(err.pos, 4);
        let err = parse_expr("1 2").unwrap_err();
        assert_eq!(err.pos, 2);
        let err = parse_expr("3 $ 4").unwrap_err();
        assert_eq!(err.kind, ParseErrorKind::UnexpectedChar('$'));
        assert_eq!(err.pos, 2);
        let err = parse_expr("").unwrap_err();
        assert_eq!(err.kind, ParseErrorKind::UnexpectedEnd);
        let err = parse_expr("(1))").unwrap_err();
        assert_eq!(err.pos, 3);
    }

    #[test]
    fn unknown_identifiers() {
        let err = parse_expr("2 * x").unwrap_err();
        assert_eq!(err.kind, ParseErrorKind::UnknownIdentifier("x".into()));
        assert_eq!(err.pos, 4);
        let err = parse_expr("tan(t)").unwrap_err();
        assert_eq!(err.kind, ParseErrorKind::UnknownFunction("tan".into()));
    }

    #[test]
    fn division_by_zero_is_an_evaluation_error() {
        let e = parse_expr("1 / t").unwrap();
        assert_eq!(e.eval(0.0), Err(EvalError::DivisionByZero { t: 0.0 }));
        assert_eq!(e.eval(2.0).unwrap(), 0.5);
    }

    #[test]
    fn display_reparses() {
        let src = "81.87e-6 * sin(2*pi*1e6*t/2)^2 * -(t - 3)^-2";
        let e = parse_expr(src).unwrap();
        let again = parse_expr(&e.to_string()).unwrap();
        assert_eq!(e, again);
    }
}
