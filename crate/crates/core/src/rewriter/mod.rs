//! Predicate rewriter: parses the WHERE clause of a query into a boolean
//! AST and hoists conjuncts that every branch of a disjunction repeats.

mod ast;
mod factor;
mod lexer;
mod parser;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

pub use ast::{emit_sql, emit_sql_pretty, ArithOp, Atom, CmpOp, Expr, Predicate};
pub use factor::{factor_common_conjuncts, RewriteReport};
pub use lexer::{tokenize, Tok, Token};

use crate::datagen::splitmix64;
use crate::par::Parallelism;

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum RewriteError {
    #[error("syntax error at byte {pos}: {msg}")]
    Syntax { pos: usize, msg: String },
}

impl RewriteError {
    pub(crate) fn syntax(pos: usize, msg: impl Into<String>) -> Self {
        RewriteError::Syntax { pos, msg: msg.into() }
    }
}

/// Parses a WHERE-clause body.
pub fn parse_predicate(text: &str) -> Result<Predicate, RewriteError> {
    let toks = tokenize(text)?;
    parser::Parser::new(&toks, text.len()).parse_all()
}

const CLAUSE_END: [&str; 10] =
    ["group", "order", "having", "limit", "union", "intersect", "except", "window", "offset", "fetch"];

/// Token index range of the first top-level WHERE body, if any.
fn where_body(toks: &[Token]) -> Option<(usize, usize)> {
    let mut depth = 0i32;
    let mut start = None;
    for (i, t) in toks.iter().enumerate() {
        match &t.tok {
            Tok::LParen => depth += 1,
            Tok::RParen => {
                depth -= 1;
                if depth < 0 {
                    return start.map(|s| (s, i));
                }
            }
            Tok::Semi if depth == 0 && start.is_some() => return start.map(|s| (s, i)),
            Tok::Ident(w) if depth == 0 => {
                if start.is_none() && w == "where" {
                    start = Some(i + 1);
                } else if start.is_some() && CLAUSE_END.contains(&w.as_str()) {
                    return start.map(|s| (s, i));
                }
            }
            _ => {}
        }
    }
    start.map(|s| (s, toks.len()))
}

/// Leading whitespace of the line containing byte `at`, or four spaces
/// when the line has other text before `at`.
fn indent_at(sql: &str, at: usize) -> String {
    let line_start = sql[..at].rfind('\n').map_or(0, |n| n + 1);
    let prefix = &sql[line_start..at];
    if prefix.chars().all(char::is_whitespace) {
        prefix.to_string()
    } else {
        "    ".to_string()
    }
}

/// Locates the top-level WHERE clause, factors it and splices the result
/// back in place. Text outside the predicate is left byte for byte; when
/// nothing is hoisted the input is returned unchanged.
pub fn rewrite_query(sql: &str) -> Result<(String, RewriteReport), RewriteError> {
    let toks = tokenize(sql)?;
    let Some((first, last)) = where_body(&toks) else {
        return Ok((sql.to_string(), RewriteReport::default()));
    };
    let body = &toks[first..last];
    let eof = body.last().map_or(sql.len(), |t| t.end);
    let predicate = parser::Parser::new(body, eof).parse_all()?;
    let (factored, report) = factor_common_conjuncts(&predicate);
    if !report.changed {
        return Ok((sql.to_string(), report));
    }
    let (start, end) = (body[0].start, body[body.len() - 1].end);
    let text = emit_sql_pretty(&factored, &indent_at(sql, start));
    Ok((format!("{}{}{}", &sql[..start], text, &sql[end..]), report))
}

/// The top-level WHERE predicate of a query, if it has one.
pub fn where_predicate(sql: &str) -> Result<Option<Predicate>, RewriteError> {
    let toks = tokenize(sql)?;
    let Some((first, last)) = where_body(&toks) else { return Ok(None) };
    let body = &toks[first..last];
    let eof = body.last().map_or(sql.len(), |t| t.end);
    parser::Parser::new(body, eof).parse_all().map(Some)
}

/// Outcome of comparing two predicates over the truth values of their atoms.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Equivalence {
    /// Every assignment was enumerated.
    Exhaustive { atoms: usize, equal: bool },
    /// Too many atoms to enumerate; `samples` random assignments were tried.
    Sampled { atoms: usize, samples: u64, equal: bool },
}

impl Equivalence {
    pub fn holds(self) -> bool {
        match self {
            Equivalence::Exhaustive { equal, .. } | Equivalence::Sampled { equal, .. } => equal,
        }
    }
}

/// Largest atom count checked exhaustively.
pub const EXHAUSTIVE_LIMIT: usize = 20;

/// Checks that `a` and `b` agree on every truth assignment of their atoms
/// (exhaustively up to [`EXHAUSTIVE_LIMIT`] atoms, on `samples` seeded
/// random assignments beyond it).
pub fn check_equivalence(a: &Predicate, b: &Predicate, par: Parallelism, samples: u64, seed: u64) -> Equivalence {
    let mut atoms: Vec<&Atom> = a.distinct_atoms();
    for x in b.distinct_atoms() {
        if !atoms.contains(&x) {
            atoms.push(x);
        }
    }
    let k = atoms.len();
    let index = |x: &Atom| atoms.iter().position(|y| *y == x).expect("atom collected");
    if k <= EXHAUSTIVE_LIMIT {
        let equal = par.all_indices(1u64 << k, |mask| {
            let v = |x: &Atom| mask >> index(x) & 1 == 1;
            a.eval(&v) == b.eval(&v)
        });
        return Equivalence::Exhaustive { atoms: k, equal };
    }
    let equal = par.all_indices(samples, |i| {
        let mut rng = ChaCha8Rng::seed_from_u64(splitmix64(seed ^ splitmix64(i)));
        let bits: Vec<bool> = (0..k).map(|_| rng.random_bool(0.5)).collect();
        let v = |x: &Atom| bits[index(x)];
        a.eval(&v) == b.eval(&v)
    });
    Equivalence::Sampled { atoms: k, samples, equal }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn simple_conjunction() {
        let p = parse_predicate("a = 1 and b = 2").unwrap();
        assert_eq!(p.conjuncts().len(), 2);
        assert_eq!(emit_sql(&p), "(a = 1) and (b = 2)");
    }

    #[test]
    fn unclosed_paren_position() {
        let err = parse_predicate("a = 1 and (b = 2").unwrap_err();
        assert_eq!(err, RewriteError::Syntax { pos: 10, msg: "unclosed parenthesis".into() });
        assert!(matches!(parse_predicate("a = 1)"), Err(RewriteError::Syntax { pos: 5, .. })));
        assert!(matches!(parse_predicate(""), Err(RewriteError::Syntax { .. })));
        assert!(matches!(parse_predicate("a"), Err(RewriteError::Syntax { pos: 1, .. })));
    }

    #[test]
    fn atom_forms() {
        let src = "x not in ('a', 'b') and y between 1 and 5 and z not like '%q%' and w is not null \
                   and d < date '1995-01-01' + interval '1 year' and substr(c_phone, 1, 2) in ('11')";
        let p = parse_predicate(src).unwrap();
        assert_eq!(p.conjuncts().len(), 6);
        assert_eq!(parse_predicate(&emit_sql(&p)).unwrap(), p);
    }

    #[test]
    fn arithmetic_inside_parens_is_not_a_group() {
        let p = parse_predicate("(a + 1) * 2 > b and (c = 1)").unwrap();
        assert_eq!(p.conjuncts().len(), 2);
        let q = parse_predicate("((a)) = 1").unwrap();
        assert_eq!(q, parse_predicate("a = 1").unwrap());
    }

    #[test]
    fn subqueries_are_opaque() {
        let p = parse_predicate(
            "exists (select * from t where t.k = o.k) and ps_suppkey not in (select s_suppkey from supplier) \
             and q < (select 0.2 * avg(q) from l)",
        )
        .unwrap();
        let cs = p.conjuncts();
        assert_eq!(cs.len(), 3);
        for c in cs {
            assert!(matches!(c, Predicate::Atom(Atom::Opaque(_))), "{c:?}");
        }
        assert_eq!(parse_predicate(&emit_sql(&p)).unwrap(), p);
    }

    #[test]
    fn where_location() {
        let sql = "select a from t where a = 1 and (b = 2 or b = 3) group by a;";
        let p = where_predicate(sql).unwrap().unwrap();
        assert_eq!(p, parse_predicate("a = 1 and (b = 2 or b = 3)").unwrap());
        assert_eq!(where_predicate("select 1 from (select 2 from t where x = 1) s").unwrap(), None);
    }

    #[test]
    fn rewrite_preserves_outside_text() {
        let sql = "select  x\nfrom t\nwhere\n    (a = 1 and b = 2) or (a = 1 and c = 3)\norder by x;";
        let (out, r) = rewrite_query(sql).unwrap();
        assert!(r.changed);
        assert!(out.starts_with("select  x\nfrom t\nwhere\n    "));
        assert!(out.ends_with("\norder by x;"));
        let p = where_predicate(&out).unwrap().unwrap();
        assert_eq!(p, parse_predicate("a = 1 and (b = 2 or c = 3)").unwrap());
        let plain = "select x from t where a = 1";
        assert_eq!(rewrite_query(plain).unwrap().0, plain);
        assert!(rewrite_query("select x from t where a = ").is_err());
    }

    #[test]
    fn equivalence_modes() {
        let a = parse_predicate("(a = 1 and b = 2) or (a = 1 and c = 3)").unwrap();
        let (f, _) = factor_common_conjuncts(&a);
        assert_eq!(
            check_equivalence(&a, &f, Parallelism::Sequential, 0, 0),
            Equivalence::Exhaustive { atoms: 3, equal: true }
        );
        let wrong = parse_predicate("a = 1 and b = 2").unwrap();
        assert!(!check_equivalence(&a, &wrong, Parallelism::Parallel, 0, 0).holds());
        let wide: Vec<String> = (0..24).map(|i| format!("(x{i} = 1 and k = 0)")).collect();
        let big = parse_predicate(&wide.join(" or ")).unwrap();
        let (fb, _) = factor_common_conjuncts(&big);
        let e = check_equivalence(&big, &fb, Parallelism::Parallel, 2000, 7);
        assert_eq!(e, Equivalence::Sampled { atoms: 25, samples: 2000, equal: true });
    }
}
