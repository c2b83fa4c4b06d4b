use crate::logic::Value;

use super::ast::*;
use super::lexer::{tokenize, Tok, Token};
use super::HdlError;

/// Parses one entity and its architecture.
pub fn parse(src: &str) -> Result<DesignUnit, HdlError> {
    let tokens = tokenize(src)?;
    let mut p = Parser { tokens, pos: 0 };
    let unit = p.design_unit()?;
    p.expect_tok(Tok::Eof, "end of file")?;
    Ok(unit)
}

/// Words that belong to VHDL constructs outside the supported subset.
const UNSUPPORTED: &[(&str, &str)] = &[
    ("wait", "wait statements"),
    ("after", "after clauses"),
    ("loop", "loops"),
    ("for", "loops"),
    ("while", "loops"),
    ("elsif", "elsif branches"),
    ("case", "case statements"),
    ("library", "library clauses"),
    ("use", "use clauses"),
    ("generic", "generics"),
    ("component", "component declarations"),
    ("port", "port maps"),
    ("constant", "constants"),
    ("type", "type declarations"),
    ("function", "subprograms"),
    ("procedure", "subprograms"),
    ("assert", "assertions"),
    ("report", "report statements"),
    ("null", "null statements"),
    ("transport", "delay mechanisms"),
    ("inertial", "delay mechanisms"),
    ("block", "blocks"),
    ("generate", "generate statements"),
    ("with", "selected assignments"),
    ("when", "conditional assignments"),
    ("inout", "bidirectional ports"),
    ("buffer", "buffer ports"),
];

const RESERVED: &[&str] = &[
    "entity",
    "is",
    "port",
    "in",
    "out",
    "bit",
    "end",
    "architecture",
    "of",
    "signal",
    "begin",
    "process",
    "variable",
    "if",
    "then",
    "else",
    "not",
    "and",
    "or",
    "nand",
    "nor",
    "xor",
    "xnor",
];

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> &Token {
        &self.tokens[self.pos]
    }

    fn peek_at(&self, k: usize) -> &Tok {
        &self.tokens[(self.pos + k).min(self.tokens.len() - 1)].tok
    }

    fn bump(&mut self) -> Token {
        let t = self.tokens[self.pos].clone();
        if self.pos + 1 < self.tokens.len() {
            self.pos += 1;
        }
        t
    }

    fn at(&self) -> Anchor {
        self.peek().at
    }

    fn describe(tok: &Tok) -> String {
        match tok {
            Tok::Ident(s) => format!("`{s}`"),
            Tok::Bit(c) => format!("'{c}'"),
            Tok::Int(s) => format!("`{s}`"),
            Tok::LParen => "`(`".into(),
            Tok::RParen => "`)`".into(),
            Tok::Semi => "`;`".into(),
            Tok::Colon => "`:`".into(),
            Tok::Comma => "`,`".into(),
            Tok::VarAssign => "`:=`".into(),
            Tok::SigAssign => "`<=`".into(),
            Tok::Eq => "`=`".into(),
            Tok::Neq => "`/=`".into(),
            Tok::Eof => "end of file".into(),
        }
    }

    fn error(&self, expected: &str) -> HdlError {
        let t = self.peek();
        if let Tok::Ident(w) = &t.tok {
            if let Some((_, feature)) = UNSUPPORTED.iter().find(|(k, _)| w.eq_ignore_ascii_case(k))
            {
                return HdlError::Unsupported {
                    at: t.at,
                    feature: (*feature).into(),
                };
            }
        }
        HdlError::Syntax {
            at: t.at,
            message: format!("expected {expected}, found {}", Self::describe(&t.tok)),
        }
    }

    fn is_kw(&self, kw: &str) -> bool {
        matches!(&self.peek().tok, Tok::Ident(w) if w.eq_ignore_ascii_case(kw))
    }

    fn eat_kw(&mut self, kw: &str) -> bool {
        if self.is_kw(kw) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn expect_kw(&mut self, kw: &str) -> Result<Anchor, HdlError> {
        if self.is_kw(kw) {
            Ok(self.bump().at)
        } else {
            Err(self.error(&format!("`{kw}`")))
        }
    }

    fn eat_tok(&mut self, tok: Tok) -> bool {
        if self.peek().tok == tok {
            self.bump();
            true
        } else {
            false
        }
    }

    fn expect_tok(&mut self, tok: Tok, what: &str) -> Result<Anchor, HdlError> {
        if self.peek().tok == tok {
            Ok(self.bump().at)
        } else {
            Err(self.error(what))
        }
    }

    fn ident(&mut self) -> Result<(Ident, Anchor), HdlError> {
        match &self.peek().tok {
            Tok::Ident(w) if !RESERVED.iter().any(|r| w.eq_ignore_ascii_case(r)) => {
                if UNSUPPORTED.iter().any(|(k, _)| w.eq_ignore_ascii_case(k)) {
                    return Err(self.error("an identifier"));
                }
                let t = self.bump();
                let Tok::Ident(w) = t.tok else { unreachable!() };
                Ok((Ident(w), t.at))
            }
            _ => Err(self.error("an identifier")),
        }
    }

    fn ident_list(&mut self) -> Result<Vec<(Ident, Anchor)>, HdlError> {
        let mut out = vec![self.ident()?];
        while self.eat_tok(Tok::Comma) {
            out.push(self.ident()?);
        }
        Ok(out)
    }

    /// Optional closing name after `end ...`; must match when present.
    fn end_name(&mut self, expected: &Ident) -> Result<(), HdlError> {
        if let Tok::Ident(w) = &self.peek().tok {
            let at = self.at();
            if !expected.eq(w.as_str()) {
                return Err(HdlError::Syntax {
                    at,
                    message: format!("closing name `{w}` does not match `{expected}`"),
                });
            }
            self.bump();
        }
        Ok(())
    }

    fn bit_type(&mut self) -> Result<(), HdlError> {
        if self.eat_kw("bit") {
            return Ok(());
        }
        match &self.peek().tok {
            Tok::Ident(w) => Err(HdlError::Unsupported {
                at: self.at(),
                feature: format!("type `{w}` (only `bit` is supported)"),
            }),
            _ => Err(self.error("`bit`")),
        }
    }

    fn initializer(&mut self) -> Result<Option<Value>, HdlError> {
        if !self.eat_tok(Tok::VarAssign) {
            return Ok(None);
        }
        let t = self.bump();
        match t.tok {
            Tok::Bit(c) => Ok(Some(if c == '1' { Value::One } else { Value::Zero })),
            Tok::Int(s) if s == "0" || s == "1" => {
                Ok(Some(if s == "1" { Value::One } else { Value::Zero }))
            }
            other => Err(HdlError::Syntax {
                at: t.at,
                message: format!("expected '0' or '1', found {}", Self::describe(&other)),
            }),
        }
    }

    fn design_unit(&mut self) -> Result<DesignUnit, HdlError> {
        self.expect_kw("entity")?;
        let (entity, _) = self.ident()?;
        self.expect_kw("is")?;
        let mut ports = Vec::new();
        if self.eat_kw("port") {
            self.expect_tok(Tok::LParen, "`(`")?;
            loop {
                let names = self.ident_list()?;
                self.expect_tok(Tok::Colon, "`:`")?;
                let direction = if self.eat_kw("in") {
                    Direction::In
                } else if self.eat_kw("out") {
                    Direction::Out
                } else {
                    return Err(self.error("`in` or `out`"));
                };
                self.bit_type()?;
                for (name, anchor) in names {
                    ports.push(Port {
                        name,
                        direction,
                        anchor,
                    });
                }
                if !self.eat_tok(Tok::Semi) {
                    break;
                }
            }
            self.expect_tok(Tok::RParen, "`)`")?;
            self.expect_tok(Tok::Semi, "`;`")?;
        }
        self.expect_kw("end")?;
        self.eat_kw("entity");
        self.end_name(&entity)?;
        self.expect_tok(Tok::Semi, "`;`")?;

        self.expect_kw("architecture")?;
        let (architecture, _) = self.ident()?;
        self.expect_kw("of")?;
        let (of, at) = self.ident()?;
        if of != entity {
            return Err(HdlError::Syntax {
                at,
                message: format!("architecture of unknown entity `{of}`"),
            });
        }
        self.expect_kw("is")?;
        let mut signals = Vec::new();
        while self.eat_kw("signal") {
            signals.extend(self.object_decl()?);
        }
        self.expect_kw("begin")?;
        let mut processes = Vec::new();
        while !self.is_kw("end") {
            processes.push(self.process()?);
        }
        self.expect_kw("end")?;
        self.eat_kw("architecture");
        self.end_name(&architecture)?;
        self.expect_tok(Tok::Semi, "`;`")?;
        Ok(DesignUnit {
            entity,
            ports,
            architecture,
            signals,
            processes,
        })
    }

    fn object_decl(&mut self) -> Result<Vec<ObjectDecl>, HdlError> {
        let names = self.ident_list()?;
        self.expect_tok(Tok::Colon, "`:`")?;
        self.bit_type()?;
        let init = self.initializer()?;
        self.expect_tok(Tok::Semi, "`;`")?;
        Ok(names
            .into_iter()
            .map(|(name, anchor)| ObjectDecl { name, init, anchor })
            .collect())
    }

    fn process(&mut self) -> Result<Process, HdlError> {
        if !(matches!(self.peek().tok, Tok::Ident(_)) && *self.peek_at(1) == Tok::Colon) {
            return Err(self.error("a labelled process"));
        }
        let (label, anchor) = self.ident()?;
        self.expect_tok(Tok::Colon, "`:`")?;
        self.expect_kw("process")?;
        let sensitivity = if self.eat_tok(Tok::LParen) {
            let names = self.ident_list()?;
            self.expect_tok(Tok::RParen, "`)`")?;
            Some(names.into_iter().map(|(n, _)| n).collect())
        } else {
            None
        };
        self.eat_kw("is");
        let mut variables = Vec::new();
        while self.eat_kw("variable") {
            variables.extend(self.object_decl()?);
        }
        self.expect_kw("begin")?;
        let body = self.statements()?;
        self.expect_kw("end")?;
        self.expect_kw("process")?;
        self.end_name(&label)?;
        self.expect_tok(Tok::Semi, "`;`")?;
        Ok(Process {
            label,
            sensitivity,
            variables,
            body,
            anchor,
        })
    }

    fn statements(&mut self) -> Result<Vec<Statement>, HdlError> {
        let mut out = Vec::new();
        while !(self.is_kw("end") || self.is_kw("else") || self.peek().tok == Tok::Eof) {
            out.push(self.statement()?);
        }
        Ok(out)
    }

    fn statement(&mut self) -> Result<Statement, HdlError> {
        if self.is_kw("if") {
            let anchor = self.bump().at;
            let cond = self.expr()?;
            self.expect_kw("then")?;
            let then_branch = self.statements()?;
            let else_branch = if self.eat_kw("else") {
                Some(self.statements()?)
            } else {
                None
            };
            self.expect_kw("end")?;
            self.expect_kw("if")?;
            self.expect_tok(Tok::Semi, "`;`")?;
            return Ok(Statement {
                kind: StmtKind::If {
                    cond,
                    then_branch,
                    else_branch,
                },
                anchor,
            });
        }
        let (target, anchor) = self.ident()?;
        let signal = if self.eat_tok(Tok::SigAssign) {
            true
        } else if self.eat_tok(Tok::VarAssign) {
            false
        } else {
            return Err(self.error("`<=` or `:=`"));
        };
        let expr = self.expr()?;
        if self.is_kw("after") {
            return Err(self.error("`;`"));
        }
        self.expect_tok(Tok::Semi, "`;`")?;
        let kind = if signal {
            StmtKind::SignalAssign { target, expr }
        } else {
            StmtKind::VariableAssign { target, expr }
        };
        Ok(Statement { kind, anchor })
    }

    /// expression ::= relation { logical_op relation }
    fn expr(&mut self) -> Result<Expr, HdlError> {
        let first = self.relation()?;
        let Some((op, op_at)) = self.logical_op() else {
            return Ok(first);
        };
        let mut args = vec![first];
        loop {
            args.push(self.relation()?);
            match self.logical_op() {
                None => break,
                Some((next, _)) if next == op && op.chainable() => {}
                Some((next, at)) => {
                    let message = if next == op {
                        format!("`{}` cannot be chained without parentheses", op.symbol())
                    } else {
                        format!(
                            "mixing `{}` and `{}` requires parentheses",
                            op.symbol(),
                            next.symbol()
                        )
                    };
                    return Err(HdlError::Syntax { at, message });
                }
            }
        }
        Ok(Expr::Binary(op, args, op_at))
    }

    fn logical_op(&mut self) -> Option<(BinOp, Anchor)> {
        let Tok::Ident(w) = &self.peek().tok else {
            return None;
        };
        let op = BinOp::from_word(w)?;
        Some((op, self.bump().at))
    }

    /// relation ::= factor [ ( "=" | "/=" ) factor ]
    fn relation(&mut self) -> Result<Expr, HdlError> {
        let lhs = self.factor()?;
        let op = match self.peek().tok {
            Tok::Eq => BinOp::Eq,
            Tok::Neq => BinOp::Neq,
            _ => return Ok(lhs),
        };
        let at = self.bump().at;
        let rhs = self.factor()?;
        if matches!(self.peek().tok, Tok::Eq | Tok::Neq) {
            return Err(HdlError::Syntax {
                at: self.at(),
                message: "relational operators cannot be chained".into(),
            });
        }
        Ok(Expr::Binary(op, vec![lhs, rhs], at))
    }

    /// factor ::= "not" primary | primary
    fn factor(&mut self) -> Result<Expr, HdlError> {
        if self.is_kw("not") {
            let at = self.bump().at;
            let inner = self.primary()?;
            return Ok(Expr::Not(Box::new(inner), at));
        }
        self.primary()
    }

    fn primary(&mut self) -> Result<Expr, HdlError> {
        let at = self.at();
        match self.peek().tok.clone() {
            Tok::LParen => {
                self.bump();
                let e = self.expr()?;
                self.expect_tok(Tok::RParen, "`)`")?;
                Ok(e)
            }
            Tok::Bit(c) => {
                self.bump();
                Ok(Expr::Literal(
                    if c == '1' { Value::One } else { Value::Zero },
                    at,
                ))
            }
            Tok::Ident(_) => {
                let (name, at) = self.ident()?;
                Ok(Expr::Name(name, at))
            }
            _ => Err(self.error("an expression")),
        }
    }
}
