use criterion::{criterion_group, criterion_main, BatchSize, Criterion};
use follmer_core::decompositions::multiplicative::multiplicative;
use follmer_core::follmer::{construct_follmer, verify_ky_all, Target};
use follmer_core::lattice::random::{random_supermartingale, random_tree, TreeShape};
use follmer_core::lattice::stopping::enumerate_stopping_times;
use follmer_core::lattice::DEFAULT_ENUMERATION_CAP;
use follmer_core::{AdaptedProcess, FilteredTree};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn sample(n: usize) -> Vec<(FilteredTree, AdaptedProcess)> {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let shape = TreeShape::default();
    (0..n)
        .map(|_| {
            let t = random_tree(&mut rng, &shape);
            let z = random_supermartingale(&mut rng, &t);
            (t, z)
        })
        .collect()
}

fn bench(c: &mut Criterion) {
    let trees = sample(20);
    c.bench_function("enumerate_stopping_times/20", |b| {
        b.iter(|| trees.iter().map(|(t, _)| enumerate_stopping_times(t, DEFAULT_ENUMERATION_CAP).unwrap().len()).sum::<usize>())
    });
    c.bench_function("multiplicative/20", |b| {
        b.iter(|| trees.iter().map(|(t, z)| multiplicative(t, z).unwrap()).count())
    });
    c.bench_function("construct_and_verify/20", |b| {
        b.iter_batched(
            || trees.clone(),
            |trees| {
                for (t, z) in &trees {
                    let pair = construct_follmer(t, z, Target::Cemetery).unwrap();
                    assert!(verify_ky_all(&pair, t, z, DEFAULT_ENUMERATION_CAP).unwrap().ok);
                }
            },
            BatchSize::LargeInput,
        )
    });
}

criterion_group!(benches, bench);
criterion_main!(benches);
