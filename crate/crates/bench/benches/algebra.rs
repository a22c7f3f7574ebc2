use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use ufb_core::algebra::LaurentPoly;
use ufb_core::presets::Preset;
use ufb_core::spectra::analysis_psd;
use ufb_core::wiener::wiener_solve;
use ufb_core::Complex64;
use ufb_core::InputPsd;

fn poly(len: usize, seed: f64) -> LaurentPoly {
    let coeffs = (0..len)
        .map(|k| Complex64::new((seed * (k as f64 + 1.0)).sin(), 0.0))
        .collect();
    LaurentPoly::new(-(len as i64) / 2, coeffs)
}

fn laurent_mul(c: &mut Criterion) {
    let (a, b) = (poly(32, 0.7), poly(32, 1.3));
    c.bench_function("laurent_mul_32x32", |bench| {
        bench.iter(|| black_box(&a) * black_box(&b))
    });
}

fn det_adjugate(c: &mut Criterion) {
    let svv = analysis_psd(&Preset::Exp2.bank(), &InputPsd::white(1.0));
    c.bench_function("det_adjugate_exp2", |bench| {
        bench.iter(|| black_box(&svv).det_adjugate().unwrap())
    });
}

fn solve(c: &mut Criterion) {
    let white = InputPsd::white(1.0);
    for preset in Preset::ALL {
        let fb = preset.bank();
        c.bench_function(&format!("wiener_solve_{}", preset.name()), |bench| {
            bench.iter(|| wiener_solve(black_box(&fb), &white).unwrap())
        });
    }
}

criterion_group!(benches, laurent_mul, det_adjugate, solve);
criterion_main!(benches);
