use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};
use dipolar_bench::SEED;
use dipolar_core::algebra::{
    enumerate_relations, lattice_dipoles, sample_general_position, sweep_lattice,
};
use dipolar_core::relate;

fn relate_pairs(c: &mut Criterion) {
    let dipoles = lattice_dipoles(4);
    c.bench_function("relate/lattice-600x600", |b| {
        b.iter(|| {
            let mut n = 0u32;
            for a in &dipoles {
                for d in &dipoles {
                    n = n.wrapping_add(relate(black_box(a), black_box(d)).to_string().len() as u32);
                }
            }
            n
        })
    });
}

fn enumeration(c: &mut Criterion) {
    let mut group = c.benchmark_group("enumerate");
    group.sample_size(10);
    for budget in [10_000usize, 100_000] {
        group.bench_with_input(
            BenchmarkId::new("general-position", budget),
            &budget,
            |b, &n| b.iter(|| sample_general_position(n, SEED)),
        );
    }
    group.bench_function("lattice-sweep", |b| b.iter(|| sweep_lattice(4)));
    group.bench_function("all-tiers-1e6", |b| {
        b.iter(|| enumerate_relations(1_000_000, SEED))
    });
    group.finish();
}

criterion_group!(benches, relate_pairs, enumeration);
criterion_main!(benches);
