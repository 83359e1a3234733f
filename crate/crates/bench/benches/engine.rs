//! Hot paths of the engine: on-shell normalization, whole-law verification,
//! and numeric on-shell sampling.

use criterion::{criterion_group, criterion_main, Criterion};

use conslaw_core::{
    case, case_instances, sample_on_shell, verify_conservation_law, DEFAULT_CLOSURE_ORDER,
};

/// Reducing a divergence-sized expression modulo model relations.  Case 4.1
/// carries two constrained function symbols and a potential level, so its
/// divergence exercises the rewriting engine hardest.
fn normalization(c: &mut Criterion) {
    let mut g = c.benchmark_group("normalize");
    for id in ["1", "1.6", "4.1"] {
        let tc = case(id).unwrap();
        let div = tc.law.divergence().unwrap();
        let model = tc.system.model().clone();
        g.bench_function(format!("case {id} divergence"), |b| {
            b.iter(|| model.normalize(&div).unwrap())
        });
    }
    g.finish();
}

/// Full verification: total derivatives, on-shell reduction, zero test.
fn verification(c: &mut Criterion) {
    let mut g = c.benchmark_group("verify");
    for id in ["1", "2.1", "4.1"] {
        let tc = case(id).unwrap();
        g.bench_function(format!("case {id}"), |b| {
            b.iter(|| {
                let rep =
                    verify_conservation_law(&tc.system, &tc.law, DEFAULT_CLOSURE_ORDER).unwrap();
                assert!(rep.holds);
            })
        });
    }
    g.finish();
}

/// Numeric cross-check: compile the divergence and its consequence programs,
/// then evaluate at 256 pseudo-random on-shell points.
fn sampling(c: &mut Criterion) {
    let mut g = c.benchmark_group("sample");
    for id in ["1", "1.4"] {
        let variants = case_instances(id).unwrap();
        let ci = &variants[0];
        g.bench_function(format!("case {id} [{}], n = 256", ci.label), |b| {
            b.iter(|| {
                let rep = sample_on_shell(&ci.law, &ci.system, &ci.instance, 256, 7).unwrap();
                assert!(rep.max_residual < 1e-9);
            })
        });
    }
    g.finish();
}

criterion_group!(benches, normalization, verification, sampling);
criterion_main!(benches);
