//! Line-oriented schedule language. A statement ends at a newline unless a
//! `{` or `(` is still open; `#` starts a comment.

use std::collections::HashMap;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::Zero;
use thiserror::Error;

use crate::agents::{AgentId, Conclusion, ConclusionRule, InferenceRow, InferenceTable};
use crate::amplitude::ExactReal;
use crate::hilbert::{LabelVector, Register, RegisterId, Token};
use crate::time::TimeStamp;

use super::{validate, Action, AgentDecl, BasisSpec, Diagnostic, HaltCondition, RecordRule, Schedule, Step};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParseError {
    #[error("line {line}, column {col}: {message}")]
    Syntax { line: usize, col: usize, message: String },
    #[error("{}", render_diagnostics(.0))]
    Semantic(Vec<Diagnostic>),
}

fn render_diagnostics(d: &[Diagnostic]) -> String {
    d.iter().map(|d| d.to_string()).collect::<Vec<_>>().join("\n")
}

/// Parses and validates.
pub fn parse_schedule(src: &str) -> Result<Schedule, ParseError> {
    let schedule = parse_unchecked(src)?;
    let diagnostics = validate(&schedule);
    if diagnostics.is_empty() {
        Ok(schedule)
    } else {
        Err(ParseError::Semantic(diagnostics))
    }
}

/// Parses without the semantic checks of [`validate`]. Only syntax errors
/// and references to undeclared labels or bases are reported.
pub fn parse_unchecked(src: &str) -> Result<Schedule, ParseError> {
    let tokens = lex(src)?;
    let mut p = Parser {
        tokens,
        idx: 0,
        named: HashMap::new(),
        bases: HashMap::new(),
        schedule: Schedule::default(),
    };
    p.statements()?;
    Ok(p.schedule)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Pos {
    line: usize,
    col: usize,
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Str(String),
    Num(String),
    Sym(char),
    Arrow,
    Newline,
    Eof,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("`{s}`"),
            Tok::Str(s) => format!("{s:?}"),
            Tok::Num(s) => format!("number {s}"),
            Tok::Sym(c) => format!("`{c}`"),
            Tok::Arrow => "`->`".into(),
            Tok::Newline => "end of line".into(),
            Tok::Eof => "end of input".into(),
        }
    }
}

fn syntax(pos: Pos, message: impl Into<String>) -> ParseError {
    ParseError::Syntax {
        line: pos.line,
        col: pos.col,
        message: message.into(),
    }
}

fn lex(src: &str) -> Result<Vec<(Tok, Pos)>, ParseError> {
    let mut out = Vec::new();
    let mut depth = 0usize;
    let chars: Vec<char> = src.chars().collect();
    let (mut i, mut line, mut col) = (0usize, 1usize, 1usize);
    while i < chars.len() {
        let c = chars[i];
        let pos = Pos { line, col };
        let start = i;
        match c {
            '\n' => {
                if depth == 0 {
                    out.push((Tok::Newline, pos));
                }
                i += 1;
                line += 1;
                col = 1;
                continue;
            }
            '#' => {
                while i < chars.len() && chars[i] != '\n' {
                    i += 1;
                }
            }
            c if c.is_whitespace() => i += 1,
            c if c.is_ascii_alphabetic() || c == '_' => {
                while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                    i += 1;
                }
                out.push((Tok::Ident(chars[start..i].iter().collect()), pos));
            }
            c if c.is_ascii_digit() => {
                while i < chars.len() && chars[i].is_ascii_digit() {
                    i += 1;
                }
                out.push((Tok::Num(chars[start..i].iter().collect()), pos));
            }
            '"' => {
                i += 1;
                let mut s = String::new();
                loop {
                    match chars.get(i) {
                        None | Some('\n') => return Err(syntax(pos, "unterminated string")),
                        Some('"') => break,
                        Some('\\') => {
                            match chars.get(i + 1) {
                                Some(&e @ ('"' | '\\')) => s.push(e),
                                _ => return Err(syntax(pos, "unknown escape in string")),
                            }
                            i += 2;
                        }
                        Some(&ch) => {
                            s.push(ch);
                            i += 1;
                        }
                    }
                }
                i += 1;
                out.push((Tok::Str(s), pos));
            }
            '-' if chars.get(i + 1) == Some(&'>') => {
                i += 2;
                out.push((Tok::Arrow, pos));
            }
            '{' | '(' => {
                depth += 1;
                i += 1;
                out.push((Tok::Sym(c), pos));
            }
            '}' | ')' => {
                depth = depth.saturating_sub(1);
                i += 1;
                out.push((Tok::Sym(c), pos));
            }
            '|' | '>' | ',' | '=' | ':' | ';' | '/' | '*' | '+' | '-' => {
                i += 1;
                out.push((Tok::Sym(c), pos));
            }
            other => return Err(syntax(pos, format!("unexpected character {other:?}"))),
        }
        col += i - start;
    }
    out.push((Tok::Eof, Pos { line, col }));
    Ok(out)
}

/// A ket as written, before it is resolved against the register list.
struct RawKet {
    names: Vec<String>,
    pos: Pos,
}

type RawVector = Vec<(ExactReal, RawKet)>;

struct Parser {
    tokens: Vec<(Tok, Pos)>,
    idx: usize,
    /// `label` and `state` declarations: registers and vector.
    named: HashMap<String, (Vec<RegisterId>, LabelVector)>,
    bases: HashMap<String, BasisSpec>,
    schedule: Schedule,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.tokens[self.idx].0
    }

    fn peek_at(&self, k: usize) -> &Tok {
        &self.tokens[(self.idx + k).min(self.tokens.len() - 1)].0
    }

    fn pos(&self) -> Pos {
        self.tokens[self.idx].1
    }

    fn bump(&mut self) -> Tok {
        let t = self.tokens[self.idx].0.clone();
        if self.idx + 1 < self.tokens.len() {
            self.idx += 1;
        }
        t
    }

    fn unexpected(&self, expected: &str) -> ParseError {
        syntax(
            self.pos(),
            format!("expected {expected}, found {}", self.peek().describe()),
        )
    }

    fn is_sym(&self, c: char) -> bool {
        self.peek() == &Tok::Sym(c)
    }

    fn is_keyword(&self, kw: &str) -> bool {
        matches!(self.peek(), Tok::Ident(s) if s == kw)
    }

    fn eat_sym(&mut self, c: char) -> bool {
        if self.is_sym(c) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn eat_keyword(&mut self, kw: &str) -> bool {
        if self.is_keyword(kw) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn expect_sym(&mut self, c: char) -> Result<(), ParseError> {
        if self.eat_sym(c) {
            Ok(())
        } else {
            Err(self.unexpected(&format!("`{c}`")))
        }
    }

    fn expect_keyword(&mut self, kw: &str) -> Result<(), ParseError> {
        if self.eat_keyword(kw) {
            Ok(())
        } else {
            Err(self.unexpected(&format!("`{kw}`")))
        }
    }

    fn expect_arrow(&mut self) -> Result<(), ParseError> {
        if self.peek() == &Tok::Arrow {
            self.bump();
            Ok(())
        } else {
            Err(self.unexpected("`->`"))
        }
    }

    /// Identifier or quoted string.
    fn name(&mut self, what: &str) -> Result<String, ParseError> {
        match self.peek().clone() {
            Tok::Ident(s) | Tok::Str(s) => {
                self.bump();
                Ok(s)
            }
            _ => Err(self.unexpected(what)),
        }
    }

    /// A register token: identifier, quoted string or bare number.
    fn token(&mut self) -> Result<Token, ParseError> {
        match self.peek().clone() {
            Tok::Ident(s) | Tok::Str(s) | Tok::Num(s) => {
                self.bump();
                Ok(s)
            }
            _ => Err(self.unexpected("a token")),
        }
    }

    fn end_of_statement(&mut self) -> Result<(), ParseError> {
        match self.peek() {
            Tok::Newline => {
                self.bump();
                Ok(())
            }
            Tok::Eof => Ok(()),
            _ => Err(self.unexpected("end of line")),
        }
    }

    fn statements(&mut self) -> Result<(), ParseError> {
        loop {
            match self.peek().clone() {
                Tok::Eof => return Ok(()),
                Tok::Newline => {
                    self.bump();
                }
                Tok::Ident(kw) => {
                    match kw.as_str() {
                        "register" => self.register_decl()?,
                        "agent" => self.agent_decl()?,
                        "label" | "state" => self.named_decl()?,
                        "basis" => self.basis_decl()?,
                        "at" => self.step()?,
                        _ => return Err(self.unexpected("`register`, `agent`, `label`, `state`, `basis` or `at`")),
                    }
                    self.end_of_statement()?;
                }
                _ => return Err(self.unexpected("a statement")),
            }
        }
    }

    fn register_decl(&mut self) -> Result<(), ParseError> {
        self.bump();
        let id = self.name("a register name")?;
        self.expect_keyword("alphabet")?;
        self.expect_sym('{')?;
        let mut alphabet = Vec::new();
        if !self.is_sym('}') {
            loop {
                alphabet.push(self.token()?);
                if !self.eat_sym(',') {
                    break;
                }
            }
        }
        self.expect_sym('}')?;
        self.expect_keyword("init")?;
        let ready = self.token()?;
        self.schedule.registers.push(Register {
            id: id.into(),
            alphabet,
            ready,
        });
        Ok(())
    }

    fn agent_decl(&mut self) -> Result<(), ParseError> {
        self.bump();
        let id = self.name("an agent name")?;
        self.expect_keyword("memory")?;
        let memory = self.name("a register name")?;
        let conforming = !self.eat_keyword("nonconforming");
        self.schedule.agents.push(AgentDecl {
            id: id.into(),
            memory: memory.into(),
            conforming,
        });
        Ok(())
    }

    fn named_decl(&mut self) -> Result<(), ParseError> {
        self.bump();
        let pos = self.pos();
        let name = self.name("a name")?;
        self.expect_sym('=')?;
        let raw = self.vector()?;
        self.expect_keyword("on")?;
        let regs = self.register_list()?;
        let v = self.resolve(raw, &regs)?;
        if self.named.insert(name.clone(), (regs, v)).is_some() {
            return Err(syntax(pos, format!("{name} is already defined")));
        }
        Ok(())
    }

    fn basis_decl(&mut self) -> Result<(), ParseError> {
        self.bump();
        let pos = self.pos();
        let name = self.name("a basis name")?;
        self.expect_keyword("on")?;
        let targets = self.register_list()?;
        self.expect_sym('{')?;
        let mut outcomes = Vec::new();
        loop {
            let tok = self.token()?;
            self.expect_sym('=')?;
            let raw = self.vector()?;
            outcomes.push((tok, self.resolve(raw, &targets)?));
            if !self.eat_sym(',') || self.is_sym('}') {
                break;
            }
        }
        self.expect_sym('}')?;
        let spec = BasisSpec {
            name: name.clone(),
            targets,
            outcomes,
        };
        if self.bases.insert(name.clone(), spec).is_some() {
            return Err(syntax(pos, format!("basis {name} is already defined")));
        }
        Ok(())
    }

    fn register_list(&mut self) -> Result<Vec<RegisterId>, ParseError> {
        if self.eat_sym('(') {
            let mut out = vec![RegisterId::new(self.name("a register name")?)];
            while self.eat_sym(',') {
                out.push(RegisterId::new(self.name("a register name")?));
            }
            self.expect_sym(')')?;
            Ok(out)
        } else {
            Ok(vec![RegisterId::new(self.name("a register name")?)])
        }
    }

    fn time(&mut self) -> Result<TimeStamp, ParseError> {
        let pos = self.pos();
        let round = match self.bump() {
            Tok::Num(n) => n,
            Tok::Ident(n) if n == "n" => n,
            _ => return Err(syntax(pos, "expected a time such as 0:10 or n:10")),
        };
        if !self.eat_sym(':') {
            return Err(syntax(pos, "expected a time such as 0:10 or n:10"));
        }
        let tick = match self.bump() {
            Tok::Num(n) => n,
            _ => return Err(syntax(pos, "expected a time such as 0:10 or n:10")),
        };
        format!("{round}:{tick}")
            .parse()
            .map_err(|e| syntax(pos, format!("{e}")))
    }

    fn step(&mut self) -> Result<(), ParseError> {
        self.bump();
        let at = self.time()?;
        let pos = self.pos();
        let verb = self.name("an action")?;
        let action = match verb.as_str() {
            "prepare" => {
                let register = RegisterId::new(self.name("a register name")?);
                self.expect_keyword("as")?;
                let state = self.vector_or_name(std::slice::from_ref(&register))?;
                Action::PrepareRandom { register, state }
            }
            "condprepare" => {
                let target = RegisterId::new(self.name("a register name")?);
                self.expect_keyword("from")?;
                let source = RegisterId::new(self.name("a register name")?);
                self.expect_sym('{')?;
                let mut branches = Vec::new();
                loop {
                    let tok = self.token()?;
                    self.expect_arrow()?;
                    let v = self.vector_or_name(std::slice::from_ref(&target))?;
                    branches.push((tok, v));
                    if !self.eat_sym(',') || self.is_sym('}') {
                        break;
                    }
                }
                self.expect_sym('}')?;
                Action::ConditionalPrepare {
                    source,
                    target,
                    branches,
                }
            }
            "measure" => self.measure()?,
            "infer" => {
                let agent = AgentId::new(self.name("an agent name")?);
                let table = self.table()?;
                let check_consistency = self.eat_keyword("check");
                Action::Infer {
                    agent,
                    table,
                    check_consistency,
                }
            }
            "access" => {
                let agent = AgentId::new(self.name("an agent name")?);
                self.expect_keyword("from")?;
                let source = RegisterId::new(self.name("a register name")?);
                let variable = if self.eat_keyword("as") {
                    Some(self.name("a variable name")?)
                } else {
                    None
                };
                let table = self.table()?;
                Action::AccessMemory {
                    agent,
                    source,
                    variable,
                    table,
                }
            }
            "halt" => {
                self.expect_keyword("when")?;
                let mut conditions = Vec::new();
                loop {
                    let register = RegisterId::new(self.name("a register name")?);
                    self.expect_sym('=')?;
                    let value = self.token()?;
                    conditions.push(HaltCondition { register, value });
                    if !self.eat_keyword("and") {
                        break;
                    }
                }
                Action::HaltCheck { conditions }
            }
            other => {
                return Err(syntax(
                    pos,
                    format!("unknown action `{other}`; expected prepare, condprepare, measure, infer, access or halt"),
                ))
            }
        };
        self.schedule.steps.push(Step { at, action });
        Ok(())
    }

    fn measure(&mut self) -> Result<Action, ParseError> {
        let agent = AgentId::new(self.name("an agent name")?);
        self.expect_keyword("on")?;
        let on_pos = self.pos();
        let targets = self.register_list()?;
        self.expect_keyword("basis")?;
        let basis_pos = self.pos();
        let name = self.name("a basis name")?;
        let basis = self
            .bases
            .get(&name)
            .cloned()
            .ok_or_else(|| syntax(basis_pos, format!("unknown basis {name}")))?;
        if basis.targets != targets {
            return Err(syntax(
                on_pos,
                format!(
                    "basis {name} is declared on ({}), not ({})",
                    join_ids(&basis.targets),
                    join_ids(&targets)
                ),
            ));
        }
        self.expect_keyword("into")?;
        let dest = RegisterId::new(self.name("a register name")?);
        let variable = if self.eat_keyword("as") {
            self.name("a variable name")?
        } else {
            name.clone()
        };
        let mut record = Vec::new();
        if self.eat_sym('{') {
            while !self.is_sym('}') {
                let first = self.token()?;
                let (prior, outcome) = if self.eat_sym('/') {
                    (Some(first), self.token()?)
                } else {
                    (None, first)
                };
                self.expect_arrow()?;
                let token = self.token()?;
                record.push(RecordRule { prior, outcome, token });
                if !self.eat_sym(',') {
                    break;
                }
            }
            self.expect_sym('}')?;
        }
        Ok(Action::Measure {
            agent,
            basis,
            dest,
            variable,
            record,
        })
    }

    fn table(&mut self) -> Result<InferenceTable, ParseError> {
        self.expect_sym('{')?;
        let mut rows = Vec::new();
        while !self.is_sym('}') {
            let trigger = self.token()?;
            self.expect_arrow()?;
            let output = self.token()?;
            let mut conclusions = Vec::new();
            if self.eat_sym(':') {
                loop {
                    conclusions.push(self.conclusion()?);
                    if !self.eat_sym(';') {
                        break;
                    }
                }
            }
            rows.push(InferenceRow {
                trigger,
                output,
                conclusions,
            });
            if !self.eat_sym(',') {
                break;
            }
        }
        self.expect_sym('}')?;
        Ok(InferenceTable::new(rows))
    }

    fn conclusion(&mut self) -> Result<Conclusion, ParseError> {
        self.expect_keyword("certain")?;
        let variable = self.name("a variable name")?;
        self.expect_sym('=')?;
        let value = self.token()?;
        self.expect_keyword("at")?;
        let time = self.time()?;
        self.expect_keyword("rule")?;
        let rule = if self.eat_keyword("Q") {
            ConclusionRule::Q
        } else if self.eat_keyword("C") {
            self.expect_keyword("via")?;
            ConclusionRule::C {
                via: AgentId::new(self.name("an agent name")?),
            }
        } else {
            return Err(self.unexpected("`Q` or `C via AGENT`"));
        };
        Ok(Conclusion {
            variable,
            value,
            time,
            rule,
        })
    }

    fn starts_vector(&self) -> bool {
        match self.peek() {
            Tok::Sym('|' | '-' | '+' | '(') | Tok::Num(_) => true,
            Tok::Ident(s) => s == "sqrt" && self.peek_at(1) == &Tok::Sym('('),
            _ => false,
        }
    }

    fn vector_or_name(&mut self, regs: &[RegisterId]) -> Result<LabelVector, ParseError> {
        if self.starts_vector() {
            let raw = self.vector()?;
            return self.resolve(raw, regs);
        }
        let pos = self.pos();
        let name = self.name("a state name or vector")?;
        match self.named.get(&name) {
            Some((on, v)) if on == regs => Ok(v.clone()),
            Some((on, _)) => Err(syntax(
                pos,
                format!("{name} is defined on ({}), not ({})", join_ids(on), join_ids(regs)),
            )),
            None => Err(syntax(pos, format!("unknown state {name}"))),
        }
    }

    /// `[sign] term ((+|-) term)*`, a term being `[coefficient [*]] |ket>`.
    fn vector(&mut self) -> Result<RawVector, ParseError> {
        let mut out = Vec::new();
        let mut negative = self.leading_sign();
        loop {
            let mut c = if self.is_sym('|') {
                ExactReal::one()
            } else {
                let c = self.product()?;
                self.eat_sym('*');
                c
            };
            if negative {
                c = -c;
            }
            out.push((c, self.ket()?));
            if self.eat_sym('+') {
                negative = false;
            } else if self.eat_sym('-') {
                negative = true;
            } else {
                return Ok(out);
            }
        }
    }

    fn leading_sign(&mut self) -> bool {
        if self.eat_sym('-') {
            true
        } else {
            self.eat_sym('+');
            false
        }
    }

    fn ket(&mut self) -> Result<RawKet, ParseError> {
        let pos = self.pos();
        self.expect_sym('|')?;
        let mut names = vec![self.token()?];
        while self.eat_sym(',') {
            names.push(self.token()?);
        }
        self.expect_sym('>')?;
        Ok(RawKet { names, pos })
    }

    /// `factor (* factor)*`; a `*` followed by a ket is left for the caller.
    fn product(&mut self) -> Result<ExactReal, ParseError> {
        let mut c = self.factor()?;
        while self.is_sym('*') && self.peek_at(1) != &Tok::Sym('|') {
            self.bump();
            c = &c * &self.factor()?;
        }
        Ok(c)
    }

    fn factor(&mut self) -> Result<ExactReal, ParseError> {
        let pos = self.pos();
        if self.eat_keyword("sqrt") {
            self.expect_sym('(')?;
            let r = self.ratio()?;
            self.expect_sym(')')?;
            return ExactReal::from_sqrt(&r).map_err(|e| syntax(pos, e.to_string()));
        }
        if self.eat_sym('(') {
            let mut sum = ExactReal::zero();
            let mut negative = self.leading_sign();
            loop {
                let c = self.product()?;
                sum = if negative { &sum - &c } else { &sum + &c };
                if self.eat_sym('+') {
                    negative = false;
                } else if self.eat_sym('-') {
                    negative = true;
                } else {
                    break;
                }
            }
            self.expect_sym(')')?;
            return Ok(sum);
        }
        Ok(ExactReal::from_rational(self.ratio()?))
    }

    fn ratio(&mut self) -> Result<BigRational, ParseError> {
        let pos = self.pos();
        let number = |t: Tok| match t {
            Tok::Num(n) => n.parse::<BigInt>().ok(),
            _ => None,
        };
        let n = number(self.bump()).ok_or_else(|| syntax(pos, "expected a number"))?;
        let d = if self.is_sym('/') {
            self.bump();
            let dpos = self.pos();
            number(self.bump()).ok_or_else(|| syntax(dpos, "expected a denominator"))?
        } else {
            BigInt::from(1)
        };
        if d.is_zero() {
            return Err(syntax(pos, "zero denominator"));
        }
        Ok(BigRational::new(n, d))
    }

    /// A ket with one token per register is a product label; a single name
    /// that is not a token of the register refers to a declared label.
    fn resolve(&self, raw: RawVector, regs: &[RegisterId]) -> Result<LabelVector, ParseError> {
        let mut out = LabelVector::new();
        for (c, ket) in raw {
            let single_register_token = regs.len() == 1
                && self
                    .schedule
                    .register(&regs[0])
                    .is_some_and(|r| r.contains(&ket.names[0]));
            if ket.names.len() == 1 && !single_register_token {
                if let Some((on, v)) = self.named.get(&ket.names[0]) {
                    if on != regs {
                        return Err(syntax(
                            ket.pos,
                            format!(
                                "{} is defined on ({}), not ({})",
                                ket.names[0],
                                join_ids(on),
                                join_ids(regs)
                            ),
                        ));
                    }
                    for (l, lc) in v.iter() {
                        out.add_term(l.clone(), &(&c * lc));
                    }
                    continue;
                }
            }
            if ket.names.len() != regs.len() {
                return Err(syntax(
                    ket.pos,
                    format!(
                        "ket has {} tokens but the vector is on {} registers",
                        ket.names.len(),
                        regs.len()
                    ),
                ));
            }
            out.add_term(ket.names, &c);
        }
        Ok(out)
    }
}

fn join_ids(ids: &[RegisterId]) -> String {
    ids.iter().map(|r| r.as_str()).collect::<Vec<_>>().join(", ")
}
