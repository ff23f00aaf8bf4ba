mod common;

use dssbench::rewriter::{check_equivalence, emit_sql, factor_common_conjuncts, parse_predicate};
use dssbench::Parallelism;
use proptest::prelude::*;

#[test]
fn factoring_is_sound_idempotent_and_non_inflating() {
    let mut rng = common::rng(2024);
    let mut changed = 0;
    for _ in 0..500 {
        let p = common::random_predicate(&mut rng, 16);
        let (f, report) = factor_common_conjuncts(&p);
        assert!(common::same_truth_table(&p, &f), "{p}\n=> {f}");
        assert_eq!(factor_common_conjuncts(&f).0, f, "not idempotent: {p}");
        assert!(common::occurrences(&f) <= common::occurrences(&p));
        assert_eq!(report.changed, !report.hoisted.is_empty());
        changed += report.changed as u32;
    }
    assert!(changed > 50, "generator rarely exercises hoisting ({changed})");
}

#[test]
fn emitted_text_round_trips() {
    let mut rng = common::rng(7);
    for _ in 0..300 {
        let p = common::random_predicate(&mut rng, 10);
        assert_eq!(parse_predicate(&emit_sql(&p)).unwrap(), p);
        let (f, _) = factor_common_conjuncts(&p);
        assert_eq!(parse_predicate(&emit_sql(&f)).unwrap(), f);
    }
}

#[test]
fn library_checker_agrees_with_oracle() {
    let mut rng = common::rng(99);
    for _ in 0..100 {
        let a = common::random_predicate(&mut rng, 8);
        let b = common::random_predicate(&mut rng, 8);
        let oracle = common::same_truth_table(&a, &b);
        for par in [Parallelism::Sequential, Parallelism::Parallel] {
            assert_eq!(check_equivalence(&a, &b, par, 0, 0).holds(), oracle);
        }
    }
}

proptest! {
    #[test]
    fn comparison_atoms_survive_round_trip(col in "[a-z][a-z_]{0,6}", n in 0u32..100000, s in "[A-Za-z' #]{0,8}") {
        prop_assume!(!["and", "or", "not", "in", "is", "like", "between", "null", "date", "interval",
                       "select", "exists", "from", "where", "group", "order", "having", "case", "when",
                       "then", "else", "end", "time", "timestamp"].contains(&col.as_str()));
        let quoted = s.replace('\'', "''");
        let text = format!("{col} >= {n} and {col} <> '{quoted}'");
        let p = parse_predicate(&text).unwrap();
        prop_assert_eq!(parse_predicate(&emit_sql(&p)).unwrap(), p);
    }
}
