//! Recursive-descent parser for WHERE-clause predicates.

use super::ast::{ArithOp, Atom, CmpOp, Expr, Predicate};
use super::lexer::{Tok, Token};
use super::RewriteError;

/// Words that end an expression and can never be column names.
const RESERVED: [&str; 20] = [
    "and", "or", "not", "in", "between", "like", "is", "null", "select", "exists", "from", "where", "group", "order",
    "having", "case", "when", "then", "else", "end",
];

#[derive(Debug)]
struct Fail {
    /// Token index at which the failure was detected; the furthest wins when
    /// two alternatives both fail.
    at: usize,
    pos: usize,
    msg: String,
}

impl From<Fail> for RewriteError {
    fn from(f: Fail) -> Self {
        RewriteError::Syntax { pos: f.pos, msg: f.msg }
    }
}

type PResult<T> = Result<T, Fail>;

pub(crate) struct Parser<'a> {
    toks: &'a [Token],
    pos: usize,
    eof: usize,
    subqueries: usize,
}

/// Canonical text of a token run: single spaces, none inside parentheses
/// or around dots and before commas.
pub(crate) fn render(toks: &[Token]) -> String {
    let mut out = String::new();
    let mut prev: Option<&Tok> = None;
    for t in toks {
        let space = match (prev, &t.tok) {
            (None, _) => false,
            (Some(Tok::LParen | Tok::Dot), _) => false,
            (_, Tok::RParen | Tok::Comma | Tok::Dot | Tok::Semi) => false,
            (Some(Tok::Ident(name)), Tok::LParen) => RESERVED.contains(&name.as_str()) || is_clause_word(name),
            _ => true,
        };
        if space {
            out.push(' ');
        }
        out.push_str(&t.tok.render());
        prev = Some(&t.tok);
    }
    out
}

fn is_clause_word(name: &str) -> bool {
    matches!(name, "as" | "on" | "by" | "all" | "any" | "some" | "distinct")
}

impl<'a> Parser<'a> {
    pub(crate) fn new(toks: &'a [Token], eof: usize) -> Self {
        Parser { toks, pos: 0, eof, subqueries: 0 }
    }

    /// Parses the whole token slice as one predicate.
    pub(crate) fn parse_all(mut self) -> Result<Predicate, RewriteError> {
        if self.toks.is_empty() {
            return Err(RewriteError::syntax(self.eof, "empty predicate"));
        }
        let p = self.or_expr()?;
        if let Some(t) = self.peek_token() {
            let msg = if t.tok == Tok::RParen {
                "unmatched `)`".to_string()
            } else {
                format!("unexpected `{}`", t.tok.render())
            };
            return Err(RewriteError::syntax(t.start, msg));
        }
        Ok(p)
    }

    fn peek_token(&self) -> Option<&'a Token> {
        self.toks.get(self.pos)
    }

    fn peek(&self) -> Option<&'a Tok> {
        self.peek_token().map(|t| &t.tok)
    }

    fn peek_at(&self, offset: usize) -> Option<&'a Tok> {
        self.toks.get(self.pos + offset).map(|t| &t.tok)
    }

    fn at_kw(&self, kw: &str) -> bool {
        self.peek().is_some_and(|t| t.is_kw(kw))
    }

    fn bump(&mut self) -> Option<&'a Tok> {
        let t = self.peek();
        self.pos += 1;
        t
    }

    fn fail(&self, msg: impl Into<String>) -> Fail {
        let pos = self.peek_token().map_or(self.eof, |t| t.start);
        Fail { at: self.pos, pos, msg: msg.into() }
    }

    fn expect_kw(&mut self, kw: &str) -> PResult<()> {
        if self.at_kw(kw) {
            self.pos += 1;
            Ok(())
        } else {
            Err(self.fail(format!("expected `{kw}`")))
        }
    }

    fn expect_lparen(&mut self) -> PResult<usize> {
        if self.peek() == Some(&Tok::LParen) {
            self.pos += 1;
            Ok(self.pos - 1)
        } else {
            Err(self.fail("expected `(`"))
        }
    }

    /// Expects the `)` closing the `(` at token index `open`.
    fn expect_rparen(&mut self, open: usize) -> PResult<()> {
        match self.peek() {
            Some(Tok::RParen) => {
                self.pos += 1;
                Ok(())
            }
            None => Err(Fail { at: self.pos, pos: self.toks[open].start, msg: "unclosed parenthesis".into() }),
            Some(t) => Err(self.fail(format!("expected `)`, found `{}`", t.render()))),
        }
    }

    /// Skips a balanced parenthesized run starting at the current `(`.
    fn skip_balanced(&mut self) -> PResult<()> {
        let open = self.expect_lparen()?;
        let mut depth = 1;
        while depth > 0 {
            match self.bump() {
                Some(Tok::LParen) => depth += 1,
                Some(Tok::RParen) => depth -= 1,
                Some(_) => {}
                None => {
                    self.pos = self.toks.len();
                    return Err(Fail { at: self.pos, pos: self.toks[open].start, msg: "unclosed parenthesis".into() });
                }
            }
        }
        Ok(())
    }

    fn or_expr(&mut self) -> PResult<Predicate> {
        let mut items = vec![self.and_expr()?];
        while self.at_kw("or") {
            self.pos += 1;
            items.push(self.and_expr()?);
        }
        Ok(Predicate::or(items))
    }

    fn and_expr(&mut self) -> PResult<Predicate> {
        let mut items = vec![self.not_expr()?];
        while self.at_kw("and") {
            self.pos += 1;
            items.push(self.not_expr()?);
        }
        Ok(Predicate::and(items))
    }

    fn not_expr(&mut self) -> PResult<Predicate> {
        if self.at_kw("not") {
            self.pos += 1;
            return Ok(Predicate::not(self.not_expr()?));
        }
        self.primary()
    }

    fn continues_atom(&self) -> bool {
        match self.peek() {
            Some(Tok::Op(_)) => true,
            Some(t) => ["in", "between", "like", "is", "not"].iter().any(|k| t.is_kw(k)),
            None => false,
        }
    }

    fn primary(&mut self) -> PResult<Predicate> {
        if self.at_kw("exists") {
            let start = self.pos;
            self.pos += 1;
            self.skip_balanced()?;
            self.subqueries += 1;
            return Ok(Predicate::Atom(Atom::Opaque(render(&self.toks[start..self.pos]))));
        }
        let grouped = self.peek() == Some(&Tok::LParen) && !self.peek_at(1).is_some_and(|t| t.is_kw("select"));
        if !grouped {
            return self.atom().map(Predicate::Atom);
        }
        let save = (self.pos, self.subqueries);
        let attempt: PResult<Predicate> = (|| {
            let open = self.expect_lparen()?;
            let inner = self.or_expr()?;
            self.expect_rparen(open)?;
            Ok(inner)
        })();
        match attempt {
            Ok(p) if !self.continues_atom() => Ok(p),
            Ok(_) => {
                (self.pos, self.subqueries) = save;
                self.atom().map(Predicate::Atom)
            }
            Err(first) => {
                (self.pos, self.subqueries) = save;
                match self.atom() {
                    Ok(a) => Ok(Predicate::Atom(a)),
                    Err(second) if second.at > first.at => Err(second),
                    Err(_) => Err(first),
                }
            }
        }
    }

    fn atom(&mut self) -> PResult<Atom> {
        let start = self.pos;
        let before = self.subqueries;
        let left = self.expr()?;
        let atom = match self.peek() {
            Some(Tok::Op(op)) => {
                let cmp = match *op {
                    "=" => CmpOp::Eq,
                    "<>" | "!=" => CmpOp::Ne,
                    "<" => CmpOp::Lt,
                    "<=" => CmpOp::Le,
                    ">" => CmpOp::Gt,
                    ">=" => CmpOp::Ge,
                    other => return Err(self.fail(format!("unexpected operator `{other}`"))),
                };
                self.pos += 1;
                let right = self.expr()?;
                Atom::compare(left, cmp, right)
            }
            Some(t) if t.is_kw("is") => {
                self.pos += 1;
                let negated = self.at_kw("not");
                if negated {
                    self.pos += 1;
                }
                self.expect_kw("null")?;
                Atom::IsNull { expr: left, negated }
            }
            Some(t) if t.is_kw("not") || t.is_kw("in") || t.is_kw("between") || t.is_kw("like") => {
                let negated = t.is_kw("not");
                if negated {
                    self.pos += 1;
                }
                self.negatable(left, negated)?
            }
            _ => return Err(self.fail("expected a comparison, IN, BETWEEN, LIKE or IS")),
        };
        if self.subqueries > before {
            return Ok(Atom::Opaque(render(&self.toks[start..self.pos])));
        }
        Ok(atom)
    }

    fn negatable(&mut self, expr: Expr, negated: bool) -> PResult<Atom> {
        match self.peek() {
            Some(t) if t.is_kw("in") => {
                self.pos += 1;
                if self.peek_at(1).is_some_and(|t| t.is_kw("select")) {
                    self.skip_balanced()?;
                    self.subqueries += 1;
                    return Ok(Atom::InList { expr, negated, items: Vec::new() });
                }
                let open = self.expect_lparen()?;
                let mut items = vec![self.expr()?];
                while self.peek() == Some(&Tok::Comma) {
                    self.pos += 1;
                    items.push(self.expr()?);
                }
                self.expect_rparen(open)?;
                Ok(Atom::InList { expr, negated, items })
            }
            Some(t) if t.is_kw("between") => {
                self.pos += 1;
                let low = self.expr()?;
                self.expect_kw("and")?;
                let high = self.expr()?;
                Ok(Atom::Between { expr, negated, low, high })
            }
            Some(t) if t.is_kw("like") => {
                self.pos += 1;
                let pattern = self.expr()?;
                Ok(Atom::Like { expr, negated, pattern })
            }
            _ => Err(self.fail("expected IN, BETWEEN or LIKE after NOT")),
        }
    }

    fn binary_level(&mut self, ops: &[(&str, ArithOp)], next: fn(&mut Self) -> PResult<Expr>) -> PResult<Expr> {
        let mut left = next(self)?;
        while let Some(Tok::Op(o)) = self.peek() {
            let Some((_, op)) = ops.iter().find(|(s, _)| s == o) else { break };
            self.pos += 1;
            let right = next(self)?;
            left = Expr::Binary { op: *op, left: Box::new(left), right: Box::new(right) };
        }
        Ok(left)
    }

    fn expr(&mut self) -> PResult<Expr> {
        self.binary_level(&[("||", ArithOp::Concat)], Self::additive)
    }

    fn additive(&mut self) -> PResult<Expr> {
        self.binary_level(&[("+", ArithOp::Add), ("-", ArithOp::Sub)], Self::multiplicative)
    }

    fn multiplicative(&mut self) -> PResult<Expr> {
        self.binary_level(&[("*", ArithOp::Mul), ("/", ArithOp::Div), ("%", ArithOp::Mod)], Self::unary)
    }

    fn unary(&mut self) -> PResult<Expr> {
        match self.peek() {
            Some(Tok::Op("-")) => {
                self.pos += 1;
                Ok(Expr::Neg(Box::new(self.unary()?)))
            }
            Some(Tok::Op("+")) => {
                self.pos += 1;
                self.unary()
            }
            _ => self.operand(),
        }
    }

    fn ident(&mut self) -> PResult<String> {
        match self.peek() {
            Some(Tok::Ident(s)) if !RESERVED.contains(&s.as_str()) => {
                self.pos += 1;
                Ok(s.clone())
            }
            Some(t) => Err(self.fail(format!("expected an identifier, found `{}`", t.render()))),
            None => Err(self.fail("expected an identifier, found end of input")),
        }
    }

    fn operand(&mut self) -> PResult<Expr> {
        match self.peek() {
            Some(Tok::Number(n)) => {
                self.pos += 1;
                Ok(Expr::Number(n.clone()))
            }
            Some(Tok::Str(s)) => {
                self.pos += 1;
                Ok(Expr::Str(s.clone()))
            }
            Some(Tok::Ident(ty))
                if ["date", "interval", "timestamp", "time"].contains(&ty.as_str())
                    && matches!(self.peek_at(1), Some(Tok::Str(_))) =>
            {
                let Some(Tok::Str(value)) = self.peek_at(1) else { unreachable!() };
                self.pos += 2;
                Ok(Expr::Typed { ty: ty.clone(), value: value.clone() })
            }
            Some(Tok::Ident(_)) => {
                let mut name = self.ident()?;
                while self.peek() == Some(&Tok::Dot) {
                    self.pos += 1;
                    name.push('.');
                    name.push_str(&self.ident()?);
                }
                if self.peek() != Some(&Tok::LParen) {
                    return Ok(Expr::Column(name));
                }
                let open = self.expect_lparen()?;
                let mut args = Vec::new();
                if self.peek() != Some(&Tok::RParen) {
                    args.push(self.expr()?);
                    while self.peek() == Some(&Tok::Comma) {
                        self.pos += 1;
                        args.push(self.expr()?);
                    }
                }
                self.expect_rparen(open)?;
                Ok(Expr::Func { name, args })
            }
            Some(Tok::LParen) if self.peek_at(1).is_some_and(|t| t.is_kw("select")) => {
                let start = self.pos;
                self.skip_balanced()?;
                self.subqueries += 1;
                Ok(Expr::Subquery(render(&self.toks[start..self.pos])))
            }
            Some(Tok::LParen) => {
                let open = self.expect_lparen()?;
                let e = self.expr()?;
                self.expect_rparen(open)?;
                Ok(e)
            }
            Some(t) => Err(self.fail(format!("expected an expression, found `{}`", t.render()))),
            None => Err(self.fail("expected an expression, found end of input")),
        }
    }
}
