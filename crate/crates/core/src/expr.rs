//! Grammar for algorithm, learner and measure specs.
//!
//! ```text
//! expr  := call | list | number
//! call  := ident [ "(" [ arg { "," arg } ] ")" ]
//! arg   := [ ident "=" ] expr
//! list  := "[" [ expr { "," expr } ] "]"
//! ```
//!
//! Examples: `hill_descend(start=3)`, `random(seed=42)`,
//! `cv_select(candidates=[constant(0),constant(1),majority], folds=loo)`.

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub enum Expr {
    Number(f64),
    Call(Call),
    List(Vec<Expr>),
}

#[derive(Clone, Debug, PartialEq)]
pub struct Call {
    pub name: String,
    pub args: Vec<Arg>,
    /// Source text, used in error messages.
    pub text: String,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Arg {
    pub key: Option<String>,
    pub value: Expr,
}

impl Expr {
    pub fn parse(input: &str) -> Result<Expr> {
        let mut p = Parser { src: input, pos: 0 };
        let e = p.expr()?;
        p.skip_ws();
        if p.pos != input.len() {
            return Err(p.error("trailing input"));
        }
        Ok(e)
    }

    pub fn as_call(&self, kind: &'static str) -> Result<&Call> {
        match self {
            Expr::Call(c) => Ok(c),
            other => Err(Error::Syntax {
                input: format!("{other:?}"),
                reason: format!("expected a {kind} name"),
            }),
        }
    }

    pub fn as_f64(&self) -> Option<f64> {
        match self {
            Expr::Number(v) => Some(*v),
            Expr::Call(c) if c.args.is_empty() && (c.name == "inf" || c.name == "infinity") => {
                Some(f64::INFINITY)
            }
            _ => None,
        }
    }

    pub fn as_usize(&self) -> Option<usize> {
        match self {
            Expr::Number(v) if *v >= 0.0 && v.fract() == 0.0 && *v <= u32::MAX as f64 => {
                Some(*v as usize)
            }
            _ => None,
        }
    }

    pub fn as_u64(&self) -> Option<u64> {
        match self {
            Expr::Number(v) if *v >= 0.0 && v.fract() == 0.0 && *v < 9.007_199_254_740_992e15 => {
                Some(*v as u64)
            }
            _ => None,
        }
    }

    pub fn as_ident(&self) -> Option<&str> {
        match self {
            Expr::Call(c) if c.args.is_empty() => Some(&c.name),
            _ => None,
        }
    }
}

impl Call {
    /// Value of the argument named `key`, or the positional argument at `pos`.
    pub fn arg(&self, pos: usize, key: &str) -> Option<&Expr> {
        if let Some(a) = self.args.iter().find(|a| a.key.as_deref() == Some(key)) {
            return Some(&a.value);
        }
        self.args
            .iter()
            .enumerate()
            .find(|(i, a)| a.key.is_none() && *i == pos)
            .map(|(_, a)| &a.value)
    }

    pub fn no_args(&self) -> Result<()> {
        match self.args.first() {
            None => Ok(()),
            Some(a) => Err(Error::InvalidArgument {
                spec: self.text.clone(),
                arg: a.key.clone().unwrap_or_else(|| "#0".into()),
                reason: format!("`{}` takes no arguments", self.name),
            }),
        }
    }

    /// Rejects keyword arguments outside `allowed` and surplus positionals.
    pub fn expect_keys(&self, allowed: &[&str]) -> Result<()> {
        for (i, a) in self.args.iter().enumerate() {
            match &a.key {
                Some(k) if !allowed.contains(&k.as_str()) => {
                    return Err(self.invalid(k, "unknown argument"));
                }
                None if i >= allowed.len() => {
                    return Err(self.invalid(&format!("#{i}"), "too many positional arguments"));
                }
                _ => {}
            }
        }
        Ok(())
    }

    pub fn invalid(&self, arg: &str, reason: &str) -> Error {
        Error::InvalidArgument { spec: self.text.clone(), arg: arg.into(), reason: reason.into() }
    }

    pub fn missing(&self, arg: &str) -> Error {
        Error::MissingArgument { spec: self.text.clone(), arg: arg.into() }
    }

    pub fn required(&self, pos: usize, key: &str) -> Result<&Expr> {
        self.arg(pos, key).ok_or_else(|| self.missing(key))
    }

    pub fn required_usize(&self, pos: usize, key: &str) -> Result<usize> {
        self.required(pos, key)?
            .as_usize()
            .ok_or_else(|| self.invalid(key, "expected a non-negative integer"))
    }

    pub fn required_u64(&self, pos: usize, key: &str) -> Result<u64> {
        self.required(pos, key)?
            .as_u64()
            .ok_or_else(|| self.invalid(key, "expected a non-negative integer"))
    }

    pub fn required_f64(&self, pos: usize, key: &str) -> Result<f64> {
        self.required(pos, key)?.as_f64().ok_or_else(|| self.invalid(key, "expected a number"))
    }

    pub fn required_list(&self, pos: usize, key: &str) -> Result<&[Expr]> {
        match self.required(pos, key)? {
            Expr::List(items) => Ok(items),
            _ => Err(self.invalid(key, "expected a list")),
        }
    }
}

struct Parser<'a> {
    src: &'a str,
    pos: usize,
}

impl<'a> Parser<'a> {
    fn error(&self, reason: &str) -> Error {
        Error::Syntax {
            input: self.src.to_string(),
            reason: format!("{reason} at byte {}", self.pos),
        }
    }

    fn peek(&self) -> Option<char> {
        self.src[self.pos..].chars().next()
    }

    fn skip_ws(&mut self) {
        while let Some(c) = self.peek() {
            if c.is_whitespace() {
                self.pos += c.len_utf8();
            } else {
                break;
            }
        }
    }

    fn eat(&mut self, c: char) -> bool {
        self.skip_ws();
        if self.peek() == Some(c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expr(&mut self) -> Result<Expr> {
        self.skip_ws();
        match self.peek() {
            Some('[') => {
                self.pos += 1;
                let mut items = Vec::new();
                if !self.eat(']') {
                    loop {
                        items.push(self.expr()?);
                        if self.eat(']') {
                            break;
                        }
                        if !self.eat(',') {
                            return Err(self.error("expected `,` or `]`"));
                        }
                    }
                }
                Ok(Expr::List(items))
            }
            Some(c) if c.is_ascii_digit() || c == '-' || c == '+' || c == '.' => self.number(),
            Some(c) if c.is_ascii_alphabetic() || c == '_' => self.call(),
            Some(_) => Err(self.error("unexpected character")),
            None => Err(self.error("unexpected end of input")),
        }
    }

    fn number(&mut self) -> Result<Expr> {
        let start = self.pos;
        while let Some(c) = self.peek() {
            if c.is_ascii_alphanumeric() || matches!(c, '.' | '-' | '+' | '_') {
                self.pos += 1;
            } else {
                break;
            }
        }
        let text = &self.src[start..self.pos];
        text.replace('_', "")
            .parse::<f64>()
            .map(Expr::Number)
            .map_err(|_| Error::Syntax { input: self.src.into(), reason: format!("bad number `{text}`") })
    }

    fn ident(&mut self) -> Result<String> {
        self.skip_ws();
        let start = self.pos;
        while let Some(c) = self.peek() {
            if c.is_ascii_alphanumeric() || c == '_' {
                self.pos += 1;
            } else {
                break;
            }
        }
        if start == self.pos {
            return Err(self.error("expected identifier"));
        }
        Ok(self.src[start..self.pos].to_ascii_lowercase())
    }

    fn call(&mut self) -> Result<Expr> {
        let start = self.pos;
        let name = self.ident()?;
        let mut args = Vec::new();
        if self.eat('(') && !self.eat(')') {
            loop {
                args.push(self.arg()?);
                if self.eat(')') {
                    break;
                }
                if !self.eat(',') {
                    return Err(self.error("expected `,` or `)`"));
                }
            }
        }
        let text = self.src[start..self.pos].trim().to_string();
        Ok(Expr::Call(Call { name, args, text }))
    }

    fn arg(&mut self) -> Result<Arg> {
        self.skip_ws();
        let save = self.pos;
        if matches!(self.peek(), Some(c) if c.is_ascii_alphabetic() || c == '_') {
            let key = self.ident()?;
            if self.eat('=') {
                return Ok(Arg { key: Some(key), value: self.expr()? });
            }
            self.pos = save;
        }
        Ok(Arg { key: None, value: self.expr()? })
    }
}
