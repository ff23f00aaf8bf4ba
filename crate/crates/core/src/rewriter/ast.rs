//! Predicate AST, normalizing constructors and SQL emission.

use std::fmt;

use super::lexer::quote;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ArithOp {
    Add,
    Sub,
    Mul,
    Div,
    Mod,
    Concat,
}

impl ArithOp {
    pub fn symbol(self) -> &'static str {
        match self {
            ArithOp::Add => "+",
            ArithOp::Sub => "-",
            ArithOp::Mul => "*",
            ArithOp::Div => "/",
            ArithOp::Mod => "%",
            ArithOp::Concat => "||",
        }
    }

    fn precedence(self) -> u8 {
        match self {
            ArithOp::Concat => 1,
            ArithOp::Add | ArithOp::Sub => 2,
            ArithOp::Mul | ArithOp::Div | ArithOp::Mod => 3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Expr {
    /// Possibly qualified column, lowercased: `n1.n_name`.
    Column(String),
    Number(String),
    Str(String),
    /// `date '1995-01-01'`, `interval '3 month'`.
    Typed { ty: String, value: String },
    Neg(Box<Expr>),
    Binary { op: ArithOp, left: Box<Expr>, right: Box<Expr> },
    Func { name: String, args: Vec<Expr> },
    /// Parenthesized subquery kept as canonical token text.
    Subquery(String),
}

impl Expr {
    fn sort_key(&self) -> (u8, String) {
        let rank = match self {
            Expr::Column(_) => 0,
            Expr::Func { .. } => 1,
            Expr::Neg(_) | Expr::Binary { .. } => 2,
            Expr::Subquery(_) => 3,
            Expr::Number(_) | Expr::Str(_) | Expr::Typed { .. } => 4,
        };
        (rank, self.to_string())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum CmpOp {
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
}

impl CmpOp {
    pub fn symbol(self) -> &'static str {
        match self {
            CmpOp::Eq => "=",
            CmpOp::Ne => "<>",
            CmpOp::Lt => "<",
            CmpOp::Le => "<=",
            CmpOp::Gt => ">",
            CmpOp::Ge => ">=",
        }
    }

    pub fn is_symmetric(self) -> bool {
        matches!(self, CmpOp::Eq | CmpOp::Ne)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Atom {
    Compare { left: Expr, op: CmpOp, right: Expr },
    InList { expr: Expr, negated: bool, items: Vec<Expr> },
    Between { expr: Expr, negated: bool, low: Expr, high: Expr },
    Like { expr: Expr, negated: bool, pattern: Expr },
    IsNull { expr: Expr, negated: bool },
    /// Anything involving a subquery (`exists (...)`, `x in (select ...)`,
    /// `x = (select ...)`), kept verbatim as canonical token text.
    Opaque(String),
}

impl Atom {
    /// Comparison with operands ordered canonically for `=` and `<>`:
    /// columns before computed values before literals, then by text.
    pub fn compare(left: Expr, op: CmpOp, right: Expr) -> Atom {
        if op.is_symmetric() && left.sort_key() > right.sort_key() {
            Atom::Compare { left: right, op, right: left }
        } else {
            Atom::Compare { left, op, right }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Predicate {
    Atom(Atom),
    And(Vec<Predicate>),
    Or(Vec<Predicate>),
    Not(Box<Predicate>),
}

impl Predicate {
    /// Conjunction with nested `And`s flattened; a single child is returned
    /// as is.
    pub fn and(children: Vec<Predicate>) -> Predicate {
        Self::junction(children, true)
    }

    /// Disjunction, flattened like [`Predicate::and`].
    pub fn or(children: Vec<Predicate>) -> Predicate {
        Self::junction(children, false)
    }

    fn junction(children: Vec<Predicate>, is_and: bool) -> Predicate {
        let mut flat = Vec::with_capacity(children.len());
        for c in children {
            match c {
                Predicate::And(cs) if is_and => flat.extend(cs),
                Predicate::Or(cs) if !is_and => flat.extend(cs),
                other => flat.push(other),
            }
        }
        assert!(!flat.is_empty(), "empty junction");
        if flat.len() == 1 {
            return flat.pop().unwrap();
        }
        if is_and {
            Predicate::And(flat)
        } else {
            Predicate::Or(flat)
        }
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(child: Predicate) -> Predicate {
        Predicate::Not(Box::new(child))
    }

    /// Number of atom occurrences.
    pub fn atom_count(&self) -> usize {
        match self {
            Predicate::Atom(_) => 1,
            Predicate::And(cs) | Predicate::Or(cs) => cs.iter().map(Predicate::atom_count).sum(),
            Predicate::Not(c) => c.atom_count(),
        }
    }

    /// Distinct atoms in first-appearance order.
    pub fn distinct_atoms(&self) -> Vec<&Atom> {
        fn walk<'a>(p: &'a Predicate, out: &mut Vec<&'a Atom>) {
            match p {
                Predicate::Atom(a) => {
                    if !out.contains(&a) {
                        out.push(a);
                    }
                }
                Predicate::And(cs) | Predicate::Or(cs) => cs.iter().for_each(|c| walk(c, out)),
                Predicate::Not(c) => walk(c, out),
            }
        }
        let mut out = Vec::new();
        walk(self, &mut out);
        out
    }

    /// Evaluates under an assignment of truth values to atoms.
    pub fn eval(&self, value: &impl Fn(&Atom) -> bool) -> bool {
        match self {
            Predicate::Atom(a) => value(a),
            Predicate::And(cs) => cs.iter().all(|c| c.eval(value)),
            Predicate::Or(cs) => cs.iter().any(|c| c.eval(value)),
            Predicate::Not(c) => !c.eval(value),
        }
    }

    /// Children when viewed as a conjunction.
    pub fn conjuncts(&self) -> &[Predicate] {
        match self {
            Predicate::And(cs) => cs,
            other => std::slice::from_ref(other),
        }
    }
}

fn write_list(f: &mut fmt::Formatter<'_>, items: &[Expr]) -> fmt::Result {
    for (i, e) in items.iter().enumerate() {
        if i > 0 {
            f.write_str(", ")?;
        }
        write!(f, "{e}")?;
    }
    Ok(())
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Column(c) | Expr::Number(c) | Expr::Subquery(c) => f.write_str(c),
            Expr::Str(s) => f.write_str(&quote(s)),
            Expr::Typed { ty, value } => write!(f, "{ty} {}", quote(value)),
            Expr::Neg(e) => match **e {
                Expr::Binary { .. } | Expr::Neg(_) => write!(f, "-({e})"),
                _ => write!(f, "-{e}"),
            },
            Expr::Binary { op, left, right } => {
                let wrap = |e: &Expr, right_side: bool| match e {
                    Expr::Binary { op: inner, .. } => {
                        inner.precedence() < op.precedence() || (right_side && inner.precedence() == op.precedence())
                    }
                    _ => false,
                };
                if wrap(left, false) {
                    write!(f, "({left})")?;
                } else {
                    write!(f, "{left}")?;
                }
                write!(f, " {} ", op.symbol())?;
                if wrap(right, true) {
                    write!(f, "({right})")
                } else {
                    write!(f, "{right}")
                }
            }
            Expr::Func { name, args } => {
                write!(f, "{name}(")?;
                write_list(f, args)?;
                f.write_str(")")
            }
        }
    }
}

fn not_kw(negated: bool) -> &'static str {
    if negated {
        "not "
    } else {
        ""
    }
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Atom::Compare { left, op, right } => write!(f, "{left} {} {right}", op.symbol()),
            Atom::InList { expr, negated, items } => {
                write!(f, "{expr} {}in (", not_kw(*negated))?;
                write_list(f, items)?;
                f.write_str(")")
            }
            Atom::Between { expr, negated, low, high } => {
                write!(f, "{expr} {}between {low} and {high}", not_kw(*negated))
            }
            Atom::Like { expr, negated, pattern } => write!(f, "{expr} {}like {pattern}", not_kw(*negated)),
            Atom::IsNull { expr, negated } => write!(f, "{expr} is {}null", not_kw(*negated)),
            Atom::Opaque(text) => f.write_str(text),
        }
    }
}

/// Single-line form: every child of `and` / `or` / `not` is parenthesized,
/// e.g. `(a = 1) and (b = 2)`.
pub fn emit_sql(p: &Predicate) -> String {
    match p {
        Predicate::Atom(a) => a.to_string(),
        Predicate::And(cs) => join_wrapped(cs, " and "),
        Predicate::Or(cs) => join_wrapped(cs, " or "),
        Predicate::Not(c) => format!("not ({})", emit_sql(c)),
    }
}

fn join_wrapped(cs: &[Predicate], sep: &str) -> String {
    cs.iter().map(|c| format!("({})", emit_sql(c))).collect::<Vec<_>>().join(sep)
}

/// Multi-line form used when splicing a rewritten predicate back into a
/// query; `indent` is the indentation of the first line's continuation.
pub fn emit_sql_pretty(p: &Predicate, indent: &str) -> String {
    let deeper = format!("{indent}    ");
    let block = |c: &Predicate| format!("(\n{deeper}{}\n{indent})", emit_sql_pretty(c, &deeper));
    match p {
        Predicate::Atom(a) => a.to_string(),
        Predicate::And(cs) => cs
            .iter()
            .map(|c| match c {
                Predicate::Or(_) => block(c),
                other => emit_sql_pretty(other, indent),
            })
            .collect::<Vec<_>>()
            .join(&format!("\n{indent}and ")),
        Predicate::Or(cs) => cs
            .iter()
            .map(|c| match c {
                Predicate::And(_) => block(c),
                other => emit_sql_pretty(other, indent),
            })
            .collect::<Vec<_>>()
            .join(&format!("\n{indent}or ")),
        Predicate::Not(c) => format!("not ({})", emit_sql(c)),
    }
}

impl fmt::Display for Predicate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&emit_sql(self))
    }
}
