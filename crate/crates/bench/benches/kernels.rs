use criterion::{black_box, criterion_group, criterion_main, Criterion};
use kslab_core::flow::{step, FlowContext, ModulationState};
use kslab_core::profiles::{build_measure, phi0_exact, shoot_profile, ShootParams};
use kslab_core::{assemble, eigen_solve, make_grid};

fn shooting(c: &mut Criterion) {
    let params = ShootParams::default();
    c.bench_function("shoot_profile a=1", |b| b.iter(|| shoot_profile(black_box(1.0), &params).unwrap()));
    c.bench_function("shoot_profile a=300", |b| b.iter(|| shoot_profile(black_box(300.0), &params).unwrap()));
}

fn spectrum(c: &mut Criterion) {
    let grid = make_grid(2001, 30.0, 1.0).unwrap();
    let profile = phi0_exact(&grid);
    let measure = build_measure(&profile, &grid).unwrap();
    c.bench_function("assemble 2001", |b| b.iter(|| assemble(&profile, &measure).unwrap()));
    let op = assemble(&profile, &measure).unwrap();
    c.bench_function("eigen_solve k=3 2001", |b| b.iter(|| eigen_solve(&op, black_box(3)).unwrap()));
}

fn flow(c: &mut Criterion) {
    let grid = make_grid(2001, 30.0, 1.0).unwrap();
    let ctx = FlowContext::new(&phi0_exact(&grid)).unwrap();
    let mut state = ModulationState::self_similar(&ctx, 6.0);
    let g = ctx.grid().nodes().to_vec();
    state.eps.iter_mut().zip(&g).for_each(|(e, r)| *e = 1e-4 * (-r * r / 4.0).exp());
    c.bench_function("flow step 2001", |b| b.iter(|| step(black_box(&state), &ctx, 1e-3).unwrap()));
}

criterion_group! {
    name = kernels;
    config = Criterion::default().sample_size(10);
    targets = shooting, spectrum, flow
}
criterion_main!(kernels);
