//! OpenQASM 2.0 subset parser.
//!
//! Quantum registers are flattened into one index space in declaration
//! order, so the first `qreg q[3]` yields simulator qubits 0..3 and a
//! following `qreg r[2]` yields 3..5. `q[0]` maps to the simulator's q0,
//! which is the most significant bit of a basis index.
//!
//! User `gate` definitions are inlined at every call site. `include` lines
//! are skipped (the standard-library gates are built in), `barrier` is
//! dropped, and classical-control, `opaque` and `reset` are rejected.

use std::collections::HashMap;
use std::f64::consts::PI;

use super::{Circuit, GateKind, GateOp};
use crate::error::{Error, Result};

const MAX_INLINE_DEPTH: usize = 64;

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Ident(String),
    Number(f64),
    Str(String),
    Sym(&'static str),
    Eof,
}

#[derive(Clone, Debug)]
struct Token {
    tok: Tok,
    line: usize,
    column: usize,
}

fn lex(src: &str) -> Result<Vec<Token>> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0usize, 1usize, 1usize);
    let err = |line, column, message: String| Error::Parse { line, column, message };

    while i < chars.len() {
        let c = chars[i];
        let (tl, tc) = (line, col);
        let advance = |i: &mut usize, n: usize, line: &mut usize, col: &mut usize| {
            for _ in 0..n {
                if chars[*i] == '\n' {
                    *line += 1;
                    *col = 1;
                } else {
                    *col += 1;
                }
                *i += 1;
            }
        };
        if c.is_whitespace() {
            advance(&mut i, 1, &mut line, &mut col);
            continue;
        }
        if c == '/' && chars.get(i + 1) == Some(&'/') {
            while i < chars.len() && chars[i] != '\n' {
                advance(&mut i, 1, &mut line, &mut col);
            }
            continue;
        }
        if c == '/' && chars.get(i + 1) == Some(&'*') {
            advance(&mut i, 2, &mut line, &mut col);
            loop {
                if i >= chars.len() {
                    return Err(err(tl, tc, "unterminated block comment".into()));
                }
                if chars[i] == '*' && chars.get(i + 1) == Some(&'/') {
                    advance(&mut i, 2, &mut line, &mut col);
                    break;
                }
                advance(&mut i, 1, &mut line, &mut col);
            }
            continue;
        }
        if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                advance(&mut i, 1, &mut line, &mut col);
            }
            out.push(Token {
                tok: Tok::Ident(chars[start..i].iter().collect()),
                line: tl,
                column: tc,
            });
            continue;
        }
        if c.is_ascii_digit() || (c == '.' && chars.get(i + 1).is_some_and(|d| d.is_ascii_digit())) {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.') {
                advance(&mut i, 1, &mut line, &mut col);
            }
            if i < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
                let mut j = i + 1;
                if j < chars.len() && (chars[j] == '+' || chars[j] == '-') {
                    j += 1;
                }
                if j < chars.len() && chars[j].is_ascii_digit() {
                    let step = j - i;
                    advance(&mut i, step, &mut line, &mut col);
                    while i < chars.len() && chars[i].is_ascii_digit() {
                        advance(&mut i, 1, &mut line, &mut col);
                    }
                }
            }
            let text: String = chars[start..i].iter().collect();
            let value = text
                .parse::<f64>()
                .map_err(|_| err(tl, tc, format!("malformed number `{text}`")))?;
            out.push(Token {
                tok: Tok::Number(value),
                line: tl,
                column: tc,
            });
            continue;
        }
        if c == '"' {
            advance(&mut i, 1, &mut line, &mut col);
            let start = i;
            while i < chars.len() && chars[i] != '"' {
                if chars[i] == '\n' {
                    return Err(err(tl, tc, "unterminated string".into()));
                }
                advance(&mut i, 1, &mut line, &mut col);
            }
            if i >= chars.len() {
                return Err(err(tl, tc, "unterminated string".into()));
            }
            let text: String = chars[start..i].iter().collect();
            advance(&mut i, 1, &mut line, &mut col);
            out.push(Token {
                tok: Tok::Str(text),
                line: tl,
                column: tc,
            });
            continue;
        }
        let two: String = chars[i..chars.len().min(i + 2)].iter().collect();
        let sym = match two.as_str() {
            "->" => Some("->"),
            "==" => Some("=="),
            _ => None,
        };
        if let Some(s) = sym {
            advance(&mut i, 2, &mut line, &mut col);
            out.push(Token {
                tok: Tok::Sym(s),
                line: tl,
                column: tc,
            });
            continue;
        }
        let s = match c {
            ';' => ";",
            ',' => ",",
            '(' => "(",
            ')' => ")",
            '[' => "[",
            ']' => "]",
            '{' => "{",
            '}' => "}",
            '+' => "+",
            '-' => "-",
            '*' => "*",
            '/' => "/",
            '^' => "^",
            _ => return Err(err(tl, tc, format!("unexpected character `{c}`"))),
        };
        advance(&mut i, 1, &mut line, &mut col);
        out.push(Token {
            tok: Tok::Sym(s),
            line: tl,
            column: tc,
        });
    }
    out.push(Token {
        tok: Tok::Eof,
        line,
        column: col,
    });
    Ok(out)
}

#[derive(Clone, Debug)]
enum Expr {
    Num(f64),
    Param(String),
    Neg(Box<Expr>),
    Bin(char, Box<Expr>, Box<Expr>),
    Call(String, Box<Expr>),
}

impl Expr {
    fn eval(&self, env: &HashMap<String, f64>) -> std::result::Result<f64, String> {
        Ok(match self {
            Expr::Num(v) => *v,
            Expr::Param(name) => *env.get(name).ok_or_else(|| format!("unknown parameter `{name}`"))?,
            Expr::Neg(e) => -e.eval(env)?,
            Expr::Bin(op, a, b) => {
                let (a, b) = (a.eval(env)?, b.eval(env)?);
                match op {
                    '+' => a + b,
                    '-' => a - b,
                    '*' => a * b,
                    '/' => a / b,
                    '^' => a.powf(b),
                    _ => unreachable!("operator set is fixed by the parser"),
                }
            }
            Expr::Call(f, e) => {
                let v = e.eval(env)?;
                match f.as_str() {
                    "sin" => v.sin(),
                    "cos" => v.cos(),
                    "tan" => v.tan(),
                    "exp" => v.exp(),
                    "ln" => v.ln(),
                    "sqrt" => v.sqrt(),
                    _ => return Err(format!("unknown function `{f}`")),
                }
            }
        })
    }
}

#[derive(Clone, Debug)]
struct BodyCall {
    name: String,
    params: Vec<Expr>,
    args: Vec<String>,
    line: usize,
    column: usize,
}

#[derive(Clone, Debug)]
struct GateDef {
    params: Vec<String>,
    qargs: Vec<String>,
    body: Vec<BodyCall>,
}

#[derive(Clone, Debug)]
enum Arg {
    Bit(String, usize),
    Reg(String),
}

struct Register {
    offset: usize,
    size: usize,
}

struct Parser {
    toks: Vec<Token>,
    pos: usize,
    qregs: HashMap<String, Register>,
    cregs: HashMap<String, usize>,
    num_qubits: usize,
    gates: HashMap<String, GateDef>,
    ops: Vec<GateOp>,
    notes: Vec<String>,
}

fn unsupported(line: usize, construct: impl Into<String>) -> Error {
    Error::UnsupportedConstruct {
        line,
        construct: construct.into(),
    }
}

impl Parser {
    fn peek(&self) -> &Token {
        &self.toks[self.pos]
    }

    fn next(&mut self) -> Token {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn error_at(&self, t: &Token, message: impl Into<String>) -> Error {
        Error::Parse {
            line: t.line,
            column: t.column,
            message: message.into(),
        }
    }

    fn describe(t: &Tok) -> String {
        match t {
            Tok::Ident(s) => format!("`{s}`"),
            Tok::Number(v) => format!("number {v}"),
            Tok::Str(s) => format!("string \"{s}\""),
            Tok::Sym(s) => format!("`{s}`"),
            Tok::Eof => "end of input".into(),
        }
    }

    fn expect_sym(&mut self, s: &'static str) -> Result<Token> {
        let t = self.next();
        if t.tok == Tok::Sym(s) {
            Ok(t)
        } else {
            Err(self.error_at(&t, format!("expected `{s}`, found {}", Self::describe(&t.tok))))
        }
    }

    fn eat_sym(&mut self, s: &'static str) -> bool {
        if self.peek().tok == Tok::Sym(s) {
            self.next();
            true
        } else {
            false
        }
    }

    fn expect_ident(&mut self) -> Result<(String, Token)> {
        let t = self.next();
        match &t.tok {
            Tok::Ident(s) => Ok((s.clone(), t.clone())),
            other => Err(self.error_at(&t, format!("expected identifier, found {}", Self::describe(other)))),
        }
    }

    fn expect_index(&mut self) -> Result<usize> {
        let t = self.next();
        match t.tok {
            Tok::Number(v) if v >= 0.0 && v.fract() == 0.0 => Ok(v as usize),
            ref other => Err(self.error_at(&t, format!("expected non-negative integer, found {}", Self::describe(other)))),
        }
    }

    fn parse_program(&mut self) -> Result<()> {
        if let Tok::Ident(s) = &self.peek().tok {
            if s == "OPENQASM" {
                self.next();
                let t = self.next();
                match t.tok {
                    Tok::Number(v) if (v - 2.0).abs() < 1e-9 => {}
                    _ => return Err(self.error_at(&t, "only OPENQASM 2.0 is supported")),
                }
                self.expect_sym(";")?;
            }
        }
        while self.peek().tok != Tok::Eof {
            self.parse_statement()?;
        }
        Ok(())
    }

    fn parse_statement(&mut self) -> Result<()> {
        let (word, t) = self.expect_ident()?;
        match word.as_str() {
            "OPENQASM" => Err(self.error_at(&t, "version header must come first")),
            "include" => {
                let f = self.next();
                let Tok::Str(file) = f.tok else {
                    return Err(self.error_at(&f, "expected file name string after `include`"));
                };
                self.expect_sym(";")?;
                self.notes
                    .push(format!("line {}: include \"{file}\" ignored; standard gates are built in", t.line));
                Ok(())
            }
            "qreg" | "creg" => {
                let (name, nt) = self.expect_ident()?;
                self.expect_sym("[")?;
                let size = self.expect_index()?;
                self.expect_sym("]")?;
                self.expect_sym(";")?;
                if self.qregs.contains_key(&name) || self.cregs.contains_key(&name) {
                    return Err(self.error_at(&nt, format!("register `{name}` already declared")));
                }
                if word == "qreg" {
                    self.qregs.insert(
                        name,
                        Register {
                            offset: self.num_qubits,
                            size,
                        },
                    );
                    self.num_qubits += size;
                } else {
                    self.cregs.insert(name, size);
                }
                Ok(())
            }
            "gate" => self.parse_gate_def(),
            "opaque" => Err(unsupported(t.line, "opaque")),
            "if" => Err(unsupported(t.line, "if")),
            "reset" => Err(unsupported(t.line, "reset")),
            "measure" => {
                let q = self.parse_arg()?;
                self.expect_sym("->")?;
                let c = self.parse_arg()?;
                self.expect_sym(";")?;
                let qubits = self.resolve_qubits(&q, &t)?;
                let csize = match &c {
                    Arg::Bit(name, i) => {
                        let size = *self
                            .cregs
                            .get(name)
                            .ok_or_else(|| self.error_at(&t, format!("unknown classical register `{name}`")))?;
                        if *i >= size {
                            return Err(self.error_at(&t, format!("index {i} out of range for `{name}`")));
                        }
                        None
                    }
                    Arg::Reg(name) => Some(
                        *self
                            .cregs
                            .get(name)
                            .ok_or_else(|| self.error_at(&t, format!("unknown classical register `{name}`")))?,
                    ),
                };
                let broadcast = matches!(q, Arg::Reg(_));
                if broadcast != csize.is_some() || csize.is_some_and(|s| s != qubits.len()) {
                    return Err(self.error_at(&t, "measure operands have mismatched sizes"));
                }
                for q in qubits {
                    self.ops.push(GateOp::single(GateKind::Measure, q));
                }
                Ok(())
            }
            "barrier" => {
                loop {
                    let a = self.parse_arg()?;
                    self.resolve_qubits(&a, &t)?;
                    if !self.eat_sym(",") {
                        break;
                    }
                }
                self.expect_sym(";")?;
                Ok(())
            }
            _ => self.parse_gate_call(word, t),
        }
    }

    fn parse_arg(&mut self) -> Result<Arg> {
        let (name, _) = self.expect_ident()?;
        if self.eat_sym("[") {
            let i = self.expect_index()?;
            self.expect_sym("]")?;
            Ok(Arg::Bit(name, i))
        } else {
            Ok(Arg::Reg(name))
        }
    }

    fn resolve_qubits(&self, arg: &Arg, at: &Token) -> Result<Vec<usize>> {
        let name = match arg {
            Arg::Bit(n, _) | Arg::Reg(n) => n,
        };
        let reg = self
            .qregs
            .get(name)
            .ok_or_else(|| self.error_at(at, format!("unknown quantum register `{name}`")))?;
        match arg {
            Arg::Bit(_, i) if *i < reg.size => Ok(vec![reg.offset + i]),
            Arg::Bit(_, i) => Err(self.error_at(at, format!("index {i} out of range for `{name}[{}]`", reg.size))),
            Arg::Reg(_) => Ok((reg.offset..reg.offset + reg.size).collect()),
        }
    }

    fn parse_param_list(&mut self) -> Result<Vec<Expr>> {
        let mut params = Vec::new();
        if self.eat_sym("(") {
            if !self.eat_sym(")") {
                loop {
                    params.push(self.parse_expr()?);
                    if self.eat_sym(")") {
                        break;
                    }
                    self.expect_sym(",")?;
                }
            }
        }
        Ok(params)
    }

    fn parse_gate_call(&mut self, name: String, t: Token) -> Result<()> {
        let params = self.parse_param_list()?;
        let mut args = Vec::new();
        loop {
            args.push(self.parse_arg()?);
            if !self.eat_sym(",") {
                break;
            }
        }
        self.expect_sym(";")?;

        let env = HashMap::new();
        let values = params
            .iter()
            .map(|e| e.eval(&env).map_err(|m| self.error_at(&t, m)))
            .collect::<Result<Vec<f64>>>()?;
        let resolved = args
            .iter()
            .map(|a| self.resolve_qubits(a, &t))
            .collect::<Result<Vec<_>>>()?;
        let width = args
            .iter()
            .zip(&resolved)
            .filter(|(a, _)| matches!(a, Arg::Reg(_)))
            .map(|(_, r)| r.len())
            .max();
        let reps = match width {
            Some(w) => {
                for (a, r) in args.iter().zip(&resolved) {
                    if matches!(a, Arg::Reg(_)) && r.len() != w {
                        return Err(self.error_at(&t, "register arguments have different sizes"));
                    }
                }
                w
            }
            None => 1,
        };
        for k in 0..reps {
            let qubits: Vec<usize> = args
                .iter()
                .zip(&resolved)
                .map(|(a, r)| if matches!(a, Arg::Reg(_)) { r[k] } else { r[0] })
                .collect();
            let mut distinct = qubits.clone();
            distinct.sort_unstable();
            distinct.dedup();
            if distinct.len() != qubits.len() {
                return Err(self.error_at(&t, format!("gate `{name}` applied to repeated qubit arguments")));
            }
            self.expand(&name, &values, &qubits, t.line, t.column, 0)?;
        }
        Ok(())
    }

    fn expand(&mut self, name: &str, params: &[f64], qubits: &[usize], line: usize, column: usize, depth: usize) -> Result<()> {
        if depth > MAX_INLINE_DEPTH {
            return Err(Error::Parse {
                line,
                column,
                message: format!("gate `{name}` nests deeper than {MAX_INLINE_DEPTH} levels"),
            });
        }
        let arity_error = |what: &str, want: usize, got: usize| Error::Parse {
            line,
            column,
            message: format!("gate `{name}` expects {want} {what}, got {got}"),
        };
        if let Some(def) = self.gates.get(name).cloned() {
            if def.params.len() != params.len() {
                return Err(arity_error("parameter(s)", def.params.len(), params.len()));
            }
            if def.qargs.len() != qubits.len() {
                return Err(arity_error("qubit argument(s)", def.qargs.len(), qubits.len()));
            }
            let env: HashMap<String, f64> = def.params.iter().cloned().zip(params.iter().copied()).collect();
            let qenv: HashMap<&str, usize> = def.qargs.iter().map(|s| s.as_str()).zip(qubits.iter().copied()).collect();
            for call in &def.body {
                let values = call
                    .params
                    .iter()
                    .map(|e| {
                        e.eval(&env).map_err(|m| Error::Parse {
                            line: call.line,
                            column: call.column,
                            message: m,
                        })
                    })
                    .collect::<Result<Vec<f64>>>()?;
                let qs: Vec<usize> = call.args.iter().map(|a| qenv[a.as_str()]).collect();
                self.expand(&call.name, &values, &qs, call.line, call.column, depth + 1)?;
            }
            return Ok(());
        }
        let Some((nparams, nqubits)) = builtin_arity(name) else {
            return Err(unsupported(line, format!("gate `{name}`")));
        };
        if params.len() != nparams {
            return Err(arity_error("parameter(s)", nparams, params.len()));
        }
        if qubits.len() != nqubits {
            return Err(arity_error("qubit argument(s)", nqubits, qubits.len()));
        }
        self.ops.extend(builtin_ops(name, params, qubits));
        Ok(())
    }

    fn parse_gate_def(&mut self) -> Result<()> {
        let (name, nt) = self.expect_ident()?;
        let mut params = Vec::new();
        if self.eat_sym("(") && !self.eat_sym(")") {
            loop {
                params.push(self.expect_ident()?.0);
                if self.eat_sym(")") {
                    break;
                }
                self.expect_sym(",")?;
            }
        }
        let mut qargs = Vec::new();
        loop {
            qargs.push(self.expect_ident()?.0);
            if !self.eat_sym(",") {
                break;
            }
        }
        self.expect_sym("{")?;
        let mut body = Vec::new();
        while !self.eat_sym("}") {
            let (word, t) = self.expect_ident()?;
            match word.as_str() {
                "barrier" => {
                    loop {
                        let (a, at) = self.expect_ident()?;
                        if !qargs.contains(&a) {
                            return Err(self.error_at(&at, format!("unknown qubit argument `{a}`")));
                        }
                        if !self.eat_sym(",") {
                            break;
                        }
                    }
                    self.expect_sym(";")?;
                }
                "opaque" | "if" | "reset" | "measure" => return Err(unsupported(t.line, word)),
                _ => {
                    let call_params = self.parse_param_list()?;
                    let mut args = Vec::new();
                    loop {
                        let (a, at) = self.expect_ident()?;
                        if !qargs.contains(&a) {
                            return Err(self.error_at(&at, format!("unknown qubit argument `{a}` in gate `{name}`")));
                        }
                        args.push(a);
                        if !self.eat_sym(",") {
                            break;
                        }
                    }
                    self.expect_sym(";")?;
                    if !self.gates.contains_key(&word) && builtin_arity(&word).is_none() {
                        return Err(unsupported(t.line, format!("gate `{word}`")));
                    }
                    for e in &call_params {
                        check_params(e, &params).map_err(|m| self.error_at(&t, m))?;
                    }
                    body.push(BodyCall {
                        name: word,
                        params: call_params,
                        args,
                        line: t.line,
                        column: t.column,
                    });
                }
            }
        }
        if self.gates.contains_key(&name) {
            return Err(self.error_at(&nt, format!("gate `{name}` already defined")));
        }
        self.gates.insert(name, GateDef { params, qargs, body });
        Ok(())
    }

    // expr := term (('+'|'-') term)*
    fn parse_expr(&mut self) -> Result<Expr> {
        let mut lhs = self.parse_term()?;
        loop {
            let op = match self.peek().tok {
                Tok::Sym("+") => '+',
                Tok::Sym("-") => '-',
                _ => return Ok(lhs),
            };
            self.next();
            let rhs = self.parse_term()?;
            lhs = Expr::Bin(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn parse_term(&mut self) -> Result<Expr> {
        let mut lhs = self.parse_unary()?;
        loop {
            let op = match self.peek().tok {
                Tok::Sym("*") => '*',
                Tok::Sym("/") => '/',
                _ => return Ok(lhs),
            };
            self.next();
            let rhs = self.parse_unary()?;
            lhs = Expr::Bin(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn parse_unary(&mut self) -> Result<Expr> {
        if self.eat_sym("-") {
            return Ok(Expr::Neg(Box::new(self.parse_unary()?)));
        }
        if self.eat_sym("+") {
            return self.parse_unary();
        }
        self.parse_power()
    }

    fn parse_power(&mut self) -> Result<Expr> {
        let base = self.parse_primary()?;
        if self.eat_sym("^") {
            let exp = self.parse_unary()?;
            return Ok(Expr::Bin('^', Box::new(base), Box::new(exp)));
        }
        Ok(base)
    }

    fn parse_primary(&mut self) -> Result<Expr> {
        let t = self.next();
        match t.tok {
            Tok::Number(v) => Ok(Expr::Num(v)),
            Tok::Sym("(") => {
                let e = self.parse_expr()?;
                self.expect_sym(")")?;
                Ok(e)
            }
            Tok::Ident(ref s) if s == "pi" => Ok(Expr::Num(PI)),
            Tok::Ident(ref s) if matches!(s.as_str(), "sin" | "cos" | "tan" | "exp" | "ln" | "sqrt") => {
                self.expect_sym("(")?;
                let e = self.parse_expr()?;
                self.expect_sym(")")?;
                Ok(Expr::Call(s.clone(), Box::new(e)))
            }
            Tok::Ident(ref s) => Ok(Expr::Param(s.clone())),
            ref other => Err(self.error_at(&t, format!("expected expression, found {}", Self::describe(other)))),
        }
    }
}

fn check_params(e: &Expr, names: &[String]) -> std::result::Result<(), String> {
    match e {
        Expr::Num(_) => Ok(()),
        Expr::Param(p) if names.contains(p) => Ok(()),
        Expr::Param(p) => Err(format!("unknown parameter `{p}`")),
        Expr::Neg(a) | Expr::Call(_, a) => check_params(a, names),
        Expr::Bin(_, a, b) => {
            check_params(a, names)?;
            check_params(b, names)
        }
    }
}

/// (parameter count, qubit count) of the built-in gates.
pub(super) fn builtin_arity(name: &str) -> Option<(usize, usize)> {
    Some(match name {
        "id" | "x" | "y" | "z" | "h" | "s" | "sdg" | "t" | "tdg" | "sx" | "sxdg" => (0, 1),
        "rx" | "ry" | "rz" | "p" | "u1" | "phase" => (1, 1),
        "u2" => (2, 1),
        "u3" | "u" | "U" => (3, 1),
        "cx" | "CX" | "cy" | "cz" | "ch" | "swap" => (0, 2),
        "crx" | "cry" | "crz" | "cp" | "cu1" | "cphase" | "rzz" => (1, 2),
        "cu3" => (3, 2),
        "ccx" | "cswap" => (0, 3),
        _ => return None,
    })
}

fn builtin_ops(name: &str, p: &[f64], q: &[usize]) -> Vec<GateOp> {
    use GateKind::*;
    let one = |kind| vec![GateOp::single(kind, q[0])];
    let ctrl = |kind, params: Vec<f64>| vec![GateOp::new(kind, params, vec![q[1]], vec![q[0]])];
    match name {
        "id" => one(I),
        "x" => one(X),
        "y" => one(Y),
        "z" => one(Z),
        "h" => one(H),
        "s" => one(S),
        "sdg" => one(Sdg),
        "t" => one(T),
        "tdg" => one(Tdg),
        "sx" => vec![GateOp::single(Sdg, q[0]), GateOp::single(H, q[0]), GateOp::single(Sdg, q[0])],
        "sxdg" => vec![GateOp::single(S, q[0]), GateOp::single(H, q[0]), GateOp::single(S, q[0])],
        "rx" => vec![GateOp::rotation(RX, p[0], q[0])],
        "ry" => vec![GateOp::rotation(RY, p[0], q[0])],
        "rz" => vec![GateOp::rotation(RZ, p[0], q[0])],
        "p" | "u1" | "phase" => vec![GateOp::rotation(Phase, p[0], q[0])],
        "u2" => vec![GateOp::new(U3, vec![PI / 2.0, p[0], p[1]], vec![q[0]], vec![])],
        "u3" | "u" | "U" => vec![GateOp::new(U3, p.to_vec(), vec![q[0]], vec![])],
        "cx" | "CX" => vec![GateOp::cx(q[0], q[1])],
        "cy" => ctrl(Y, vec![]),
        "cz" => vec![GateOp::new(CZ, vec![], vec![q[1]], vec![q[0]])],
        "ch" => ctrl(H, vec![]),
        "swap" => vec![GateOp::swap(q[0], q[1])],
        "crx" => ctrl(RX, p.to_vec()),
        "cry" => ctrl(RY, p.to_vec()),
        "crz" => ctrl(RZ, p.to_vec()),
        "cp" | "cu1" | "cphase" => ctrl(Phase, p.to_vec()),
        "cu3" => ctrl(U3, p.to_vec()),
        "rzz" => vec![
            GateOp::cx(q[0], q[1]),
            GateOp::rotation(Phase, p[0], q[1]),
            GateOp::cx(q[0], q[1]),
        ],
        "ccx" => vec![GateOp::new(CCX, vec![], vec![q[2]], vec![q[0], q[1]])],
        "cswap" => vec![GateOp::new(Swap, vec![], vec![q[1], q[2]], vec![q[0]])],
        _ => unreachable!("arity table and op table list the same names"),
    }
}

/// Parses an OpenQASM 2.0 program and returns the circuit together with
/// informational notes (for example, skipped `include` lines).
pub fn parse_qasm_with_notes(source: &str) -> Result<(Circuit, Vec<String>)> {
    let toks = lex(source)?;
    let mut p = Parser {
        toks,
        pos: 0,
        qregs: HashMap::new(),
        cregs: HashMap::new(),
        num_qubits: 0,
        gates: HashMap::new(),
        ops: Vec::new(),
        notes: Vec::new(),
    };
    p.parse_program()?;
    let circuit = Circuit {
        name: "qasm".into(),
        num_qubits: p.num_qubits,
        ops: p.ops,
    };
    Ok((circuit, p.notes))
}

/// Parses an OpenQASM 2.0 program.
pub fn parse_qasm(source: &str) -> Result<Circuit> {
    parse_qasm_with_notes(source).map(|(c, _)| c)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::generate_ghz;

    #[test]
    fn bell_program_matches_generator() {
        let c = parse_qasm("OPENQASM 2.0;\ninclude \"qelib1.inc\";\nqreg q[2]; h q[0]; cx q[0],q[1];").unwrap();
        assert_eq!(c.num_qubits, 2);
        assert_eq!(c.ops, generate_ghz(2).unwrap().ops);
    }

    #[test]
    fn macro_is_inlined() {
        let c = parse_qasm("qreg q[1]; gate foo a { x a; } foo q[0];").unwrap();
        assert_eq!(c.ops, vec![GateOp::single(GateKind::X, 0)]);
    }

    #[test]
    fn nested_macros_with_parameters() {
        let src = "qreg q[2];
            gate inner(t) a { rz(t/2) a; }
            gate outer(t) a, b { inner(2*t) b; cx a, b; inner(-t) a; }
            outer(pi/2) q[1], q[0];";
        let c = parse_qasm(src).unwrap();
        assert_eq!(
            c.ops,
            vec![
                GateOp::rotation(GateKind::RZ, PI / 2.0, 0),
                GateOp::cx(1, 0),
                GateOp::rotation(GateKind::RZ, -PI / 4.0, 1),
            ]
        );
    }

    #[test]
    fn pi_expressions() {
        let c = parse_qasm("qreg q[1]; rz(3*pi/4) q[0]; rx(-pi) q[0]; ry(2^3 - 1.5e1 + (pi)) q[0]; p(cos(0)) q[0];").unwrap();
        let angles: Vec<f64> = c.ops.iter().map(|o| o.params[0]).collect();
        assert_eq!(angles, vec![3.0 * PI / 4.0, -PI, 8.0 - 15.0 + PI, 1.0]);
    }

    #[test]
    fn registers_flatten_in_declaration_order() {
        let c = parse_qasm("qreg a[2]; creg c[3]; qreg b[3]; cx a[1], b[2]; x b;").unwrap();
        assert_eq!(c.num_qubits, 5);
        assert_eq!(c.ops[0], GateOp::cx(1, 4));
        assert_eq!(c.ops[1..], [2, 3, 4].map(|q| GateOp::single(GateKind::X, q)));
    }

    #[test]
    fn measure_broadcasts_and_barrier_is_dropped() {
        let c = parse_qasm("qreg q[3]; creg c[3]; h q; barrier q; measure q -> c; measure q[1] -> c[0];").unwrap();
        let kinds: Vec<GateKind> = c.ops.iter().map(|o| o.kind).collect();
        assert_eq!(kinds.iter().filter(|k| **k == GateKind::H).count(), 3);
        assert_eq!(kinds.iter().filter(|k| **k == GateKind::Measure).count(), 4);
        assert!(!kinds.contains(&GateKind::Barrier));
    }

    #[test]
    fn broadcast_pairs_registers() {
        let c = parse_qasm("qreg a[2]; qreg b[2]; cx a, b; cx a[0], b;").unwrap();
        assert_eq!(c.ops, vec![GateOp::cx(0, 2), GateOp::cx(1, 3), GateOp::cx(0, 2), GateOp::cx(0, 3)]);
    }

    #[test]
    fn unsupported_constructs_name_their_line() {
        let cases = [
            ("qreg q[1];\ncreg c[1];\nif(c==1) x q[0];", 3, "if"),
            ("qreg q[1];\nopaque magic a;", 2, "opaque"),
            ("qreg q[1];\n\nreset q[0];", 3, "reset"),
            ("qreg q[1];\nfoo q[0];", 2, "gate `foo`"),
        ];
        for (src, line, construct) in cases {
            match parse_qasm(src) {
                Err(Error::UnsupportedConstruct { line: l, construct: c }) => {
                    assert_eq!((l, c.as_str()), (line, construct), "{src}");
                }
                other => panic!("{src}: {other:?}"),
            }
        }
    }

    #[test]
    fn syntax_errors_carry_position() {
        match parse_qasm("qreg q[2];\nh q[0]\ncx q[0], q[1];") {
            Err(Error::Parse { line, column, .. }) => assert_eq!((line, column), (3, 1)),
            other => panic!("{other:?}"),
        }
        match parse_qasm("qreg q[2];\n  h r[0];") {
            Err(Error::Parse { line, column, message }) => {
                assert_eq!((line, column), (2, 3));
                assert!(message.contains("`r`"));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn arity_and_range_errors() {
        assert!(matches!(parse_qasm("qreg q[1]; rx q[0];"), Err(Error::Parse { .. })));
        assert!(matches!(parse_qasm("qreg q[1]; x q[1];"), Err(Error::Parse { .. })));
        assert!(matches!(parse_qasm("qreg q[2]; cx q[0], q[0];"), Err(Error::Parse { .. })));
        assert!(matches!(parse_qasm("OPENQASM 3.0;"), Err(Error::Parse { .. })));
        assert!(matches!(parse_qasm("qreg q[1]; /* open"), Err(Error::Parse { .. })));
    }

    #[test]
    fn include_produces_a_note() {
        let (_, notes) = parse_qasm_with_notes("include \"qelib1.inc\";\nqreg q[1];").unwrap();
        assert_eq!(notes.len(), 1);
        assert!(notes[0].contains("qelib1.inc"));
    }
}
