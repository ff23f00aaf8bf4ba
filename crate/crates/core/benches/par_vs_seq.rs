use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use dssbench::bitmap::{EncodedBitmap, SimpleBitmap};
use dssbench::datagen::generate_partitioned;
use dssbench::querygen::{substitute_params, QueryTemplate};
use dssbench::rewriter::{check_equivalence, factor_common_conjuncts, where_predicate};
use dssbench::{Parallelism, ScaleFactor, Table};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const MODES: [(&str, Parallelism); 2] = [("sequential", Parallelism::Sequential), ("parallel", Parallelism::Parallel)];

fn datagen(c: &mut Criterion) {
    let sf = ScaleFactor::new(0.01).unwrap();
    let mut g = c.benchmark_group("datagen_sf0.01");
    g.sample_size(10);
    for (name, par) in MODES {
        g.bench_function(name, |b| {
            b.iter(|| {
                let dir = tempfile::tempdir().unwrap();
                generate_partitioned(sf, &Table::ALL, 4, 1, dir.path(), par).unwrap();
            })
        });
    }
    g.finish();
}

fn bitmap(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let col: Vec<u32> = (0..1_000_000).map(|_| rng.random_range(0..64)).collect();
    let mut g = c.benchmark_group("bitmap_build_1e6");
    g.sample_size(10);
    for (name, par) in MODES {
        g.bench_with_input(BenchmarkId::new("simple", name), &par, |b, &par| b.iter(|| SimpleBitmap::build_with(&col, par).unwrap()));
        g.bench_with_input(BenchmarkId::new("encoded", name), &par, |b, &par| b.iter(|| EncodedBitmap::build_with(&col, par).unwrap()));
    }
    g.finish();
}

fn truth_table(c: &mut Criterion) {
    let sql = substitute_params(&QueryTemplate::q19_original(), 0, 0).unwrap().sql;
    let original = where_predicate(&sql).unwrap().unwrap();
    let (factored, _) = factor_common_conjuncts(&original);
    let mut g = c.benchmark_group("q19_truth_table");
    g.sample_size(10);
    for (name, par) in MODES {
        g.bench_function(name, |b| b.iter(|| assert!(check_equivalence(&original, &factored, par, 0, 0).holds())));
    }
    g.finish();
}

criterion_group!(benches, datagen, bitmap, truth_table);
criterion_main!(benches);
