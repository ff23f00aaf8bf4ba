//! Hoisting of conjuncts shared by every disjunct of an `or`.

use super::ast::Predicate;

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RewriteReport {
    /// Conjuncts moved out of a disjunction, in hoisting order.
    pub hoisted: Vec<Predicate>,
    /// Disjuncts left under the rewritten `or` nodes.
    pub residual_disjuncts: usize,
    pub changed: bool,
}

/// Rewrites `(c ∧ x₁) ∨ … ∨ (c ∧ xₙ)` into `c ∧ (x₁ ∨ … ∨ xₙ)` for every
/// `or` node, bottom-up, until nothing more can be hoisted.
pub fn factor_common_conjuncts(p: &Predicate) -> (Predicate, RewriteReport) {
    let mut report = RewriteReport::default();
    let mut current = p.clone();
    loop {
        let before = report.hoisted.len();
        current = factor_node(current, &mut report);
        if report.hoisted.len() == before {
            break;
        }
    }
    report.changed = !report.hoisted.is_empty();
    (current, report)
}

fn factor_node(p: Predicate, report: &mut RewriteReport) -> Predicate {
    match p {
        Predicate::Atom(_) => p,
        Predicate::Not(c) => Predicate::not(factor_node(*c, report)),
        Predicate::And(cs) => Predicate::and(cs.into_iter().map(|c| factor_node(c, report)).collect()),
        Predicate::Or(cs) => {
            let ds: Vec<Predicate> = cs.into_iter().map(|c| factor_node(c, report)).collect();
            factor_or(ds, report)
        }
    }
}

fn factor_or(disjuncts: Vec<Predicate>, report: &mut RewriteReport) -> Predicate {
    let (first, rest) = disjuncts.split_first().expect("or has children");
    let mut common: Vec<Predicate> = Vec::new();
    for c in first.conjuncts() {
        if !common.contains(c) && rest.iter().all(|d| d.conjuncts().contains(c)) {
            common.push(c.clone());
        }
    }
    if common.is_empty() {
        return Predicate::or(disjuncts);
    }
    let residuals: Vec<Vec<Predicate>> = disjuncts
        .iter()
        .map(|d| d.conjuncts().iter().filter(|c| !common.contains(c)).cloned().collect())
        .collect();
    report.hoisted.extend(common.iter().cloned());
    if residuals.iter().any(Vec::is_empty) {
        // One disjunct is exactly the common part, which absorbs the rest.
        return Predicate::and(common);
    }
    report.residual_disjuncts += residuals.len();
    let residual_or = Predicate::or(residuals.into_iter().map(Predicate::and).collect());
    common.push(residual_or);
    Predicate::and(common)
}
