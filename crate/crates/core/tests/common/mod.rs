//! Independent oracles shared by the integration and acceptance tests.
#![allow(dead_code)]

use std::collections::HashMap;

use dssbench::rewriter::{ArithOp, Atom, CmpOp, Expr, Predicate};
use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Truth value of `p` with atom `i` of `atoms` set to bit `i` of `mask`.
pub fn truth(p: &Predicate, atoms: &[Atom], mask: u64) -> bool {
    match p {
        Predicate::Atom(a) => {
            let i = atoms.iter().position(|x| x == a).expect("atom listed");
            mask >> i & 1 == 1
        }
        Predicate::And(cs) => cs.iter().fold(true, |acc, c| acc & truth(c, atoms, mask)),
        Predicate::Or(cs) => cs.iter().fold(false, |acc, c| acc | truth(c, atoms, mask)),
        Predicate::Not(c) => !truth(c, atoms, mask),
    }
}

pub fn collect_atoms(p: &Predicate, out: &mut Vec<Atom>) {
    match p {
        Predicate::Atom(a) => {
            if !out.contains(a) {
                out.push(a.clone());
            }
        }
        Predicate::And(cs) | Predicate::Or(cs) => cs.iter().for_each(|c| collect_atoms(c, out)),
        Predicate::Not(c) => collect_atoms(c, out),
    }
}

/// Exhaustive agreement over every assignment of the union of atoms.
pub fn same_truth_table(a: &Predicate, b: &Predicate) -> bool {
    let mut atoms = Vec::new();
    collect_atoms(a, &mut atoms);
    collect_atoms(b, &mut atoms);
    assert!(atoms.len() <= 20, "too many atoms for enumeration");
    (0..1u64 << atoms.len()).all(|m| truth(a, &atoms, m) == truth(b, &atoms, m))
}

pub fn occurrences(p: &Predicate) -> usize {
    match p {
        Predicate::Atom(_) => 1,
        Predicate::And(cs) | Predicate::Or(cs) => cs.iter().map(occurrences).sum(),
        Predicate::Not(c) => occurrences(c),
    }
}

fn atom_pool(n: usize) -> Vec<Atom> {
    (0..n)
        .map(|i| Atom::Compare {
            left: Expr::Column(format!("c{i}")),
            op: CmpOp::Eq,
            right: Expr::Number(i.to_string()),
        })
        .collect()
}

/// Random predicate over at most `max_atoms` distinct atoms, biased towards
/// disjunctions of conjunctions that share members.
pub fn random_predicate(rng: &mut ChaCha8Rng, max_atoms: usize) -> Predicate {
    let pool = atom_pool(rng.random_range(2..=max_atoms));
    gen(rng, &pool, 0)
}

fn gen(rng: &mut ChaCha8Rng, pool: &[Atom], depth: u32) -> Predicate {
    let leaf = depth >= 3 || rng.random_ratio(1, 4);
    if leaf {
        return Predicate::Atom(pool.choose(rng).unwrap().clone());
    }
    let n = rng.random_range(2..=4);
    match rng.random_range(0..10) {
        0 => Predicate::not(gen(rng, pool, depth + 1)),
        1..=5 => {
            let shared: Vec<Predicate> = (0..rng.random_range(0..=2))
                .map(|_| Predicate::Atom(pool.choose(rng).unwrap().clone()))
                .collect();
            let ds = (0..n)
                .map(|_| {
                    let mut cs = shared.clone();
                    cs.push(gen(rng, pool, depth + 1));
                    if rng.random_bool(0.5) {
                        cs.reverse();
                    }
                    Predicate::and(cs)
                })
                .collect();
            Predicate::or(ds)
        }
        _ => Predicate::and((0..n).map(|_| gen(rng, pool, depth + 1)).collect()),
    }
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    Num(f64),
    Text(String),
}

fn value(e: &Expr, row: &HashMap<&str, Value>) -> Value {
    match e {
        Expr::Column(c) => row.get(c.as_str()).unwrap_or_else(|| panic!("no column {c}")).clone(),
        Expr::Number(n) => Value::Num(n.parse().unwrap()),
        Expr::Str(s) => Value::Text(s.clone()),
        Expr::Neg(x) => match value(x, row) {
            Value::Num(v) => Value::Num(-v),
            other => panic!("negating {other:?}"),
        },
        Expr::Binary { op, left, right } => match (value(left, row), value(right, row)) {
            (Value::Num(a), Value::Num(b)) => Value::Num(match op {
                ArithOp::Add => a + b,
                ArithOp::Sub => a - b,
                ArithOp::Mul => a * b,
                ArithOp::Div => a / b,
                other => panic!("unsupported {other:?}"),
            }),
            other => panic!("arithmetic on {other:?}"),
        },
        other => panic!("row evaluator does not handle {other:?}"),
    }
}

fn cmp(a: &Value, b: &Value) -> std::cmp::Ordering {
    match (a, b) {
        (Value::Num(x), Value::Num(y)) => x.partial_cmp(y).unwrap(),
        (Value::Text(x), Value::Text(y)) => x.cmp(y),
        other => panic!("comparing {other:?}"),
    }
}

/// Evaluates an atom against a concrete row.
pub fn row_atom(a: &Atom, row: &HashMap<&str, Value>) -> bool {
    use std::cmp::Ordering::*;
    match a {
        Atom::Compare { left, op, right } => {
            let o = cmp(&value(left, row), &value(right, row));
            match op {
                CmpOp::Eq => o == Equal,
                CmpOp::Ne => o != Equal,
                CmpOp::Lt => o == Less,
                CmpOp::Le => o != Greater,
                CmpOp::Gt => o == Greater,
                CmpOp::Ge => o != Less,
            }
        }
        Atom::InList { expr, negated, items } => {
            let v = value(expr, row);
            items.iter().any(|i| cmp(&v, &value(i, row)) == Equal) != *negated
        }
        Atom::Between { expr, negated, low, high } => {
            let v = value(expr, row);
            (cmp(&v, &value(low, row)) != Less && cmp(&v, &value(high, row)) != Greater) != *negated
        }
        other => panic!("row evaluator does not handle {other:?}"),
    }
}

pub fn row_eval(p: &Predicate, row: &HashMap<&str, Value>) -> bool {
    match p {
        Predicate::Atom(a) => row_atom(a, row),
        Predicate::And(cs) => cs.iter().all(|c| row_eval(c, row)),
        Predicate::Or(cs) => cs.iter().any(|c| row_eval(c, row)),
        Predicate::Not(c) => !row_eval(c, row),
    }
}

/// Random LINEITEM x PART row over values the Q19 predicate tests, so
/// every branch is reachable.
pub fn q19_row(rng: &mut ChaCha8Rng) -> HashMap<&'static str, Value> {
    let brands = ["Brand#34", "Brand#51", "Brand#14", "Brand#11"];
    let containers = ["SM CASE", "SM BOX", "MED BAG", "MED PACK", "LG CASE", "LG PKG", "JUMBO JAR"];
    let modes = ["AIR", "AIR REG", "MAIL", "TRUCK"];
    let instr = ["DELIVER IN PERSON", "NONE"];
    let pk = rng.random_range(1..=3) as f64;
    let lk = if rng.random_bool(0.7) { pk } else { rng.random_range(1..=3) as f64 };
    HashMap::from([
        ("p_partkey", Value::Num(pk)),
        ("l_partkey", Value::Num(lk)),
        ("p_brand", Value::Text(brands.choose(rng).unwrap().to_string())),
        ("p_container", Value::Text(containers.choose(rng).unwrap().to_string())),
        ("l_quantity", Value::Num(rng.random_range(1..=50) as f64)),
        ("p_size", Value::Num(rng.random_range(1..=20) as f64)),
        ("l_shipmode", Value::Text(modes.choose(rng).unwrap().to_string())),
        ("l_shipinstruct", Value::Text(instr.choose(rng).unwrap().to_string())),
    ])
}

/// Exact rational power metric: 3600·SF / (∏ t)^(1/24), with the root taken
/// by integer bisection on a 2^-64-scaled fixed point.
pub fn exact_power(timings: &[f64], sf: f64) -> f64 {
    let prod = timings.iter().fold(BigRational::one(), |acc, &t| acc * BigRational::from_float(t).unwrap());
    let root = rational_root(&prod, timings.len() as u32);
    3600.0 * sf / root
}

/// `x^(1/n)` to about 60 significant bits.
pub fn rational_root(x: &BigRational, n: u32) -> f64 {
    assert!(x > &BigRational::zero());
    let shift = 64u32;
    // floor(x · 2^(64n)) then integer n-th root gives root · 2^64.
    let scaled = (x.numer().magnitude() << (shift * n) as usize) / x.denom().magnitude();
    let r: BigUint = scaled.nth_root(n);
    r.to_f64().unwrap() / 2f64.powi(shift as i32)
}
