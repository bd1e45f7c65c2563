use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};

use memkin_core::field::electric_field;
use memkin_core::{
    ContactModel, Device, DeviceParameters, DeviceSetup, Grid1D, PoissonSolver, SeriesCircuit, SolverOptions,
};

fn poisson(c: &mut Criterion) {
    let p = DeviceParameters::default();
    let mut grid = Grid1D::new(601, p.length_m).unwrap();
    let positions: Vec<f64> = (0..5000).map(|k| p.length_m * (k as f64 + 0.5) / 5000.0).collect();
    grid.deposit(&positions, 1e-17).unwrap();
    grid.update_density(p.area_m2);
    let mut solver = PoissonSolver::new(601).unwrap();
    c.bench_function("poisson_601", |b| {
        b.iter(|| {
            solver.solve(&mut grid, black_box(5.0), 0.0, p.permittivity()).unwrap();
            electric_field(&mut grid);
        })
    });
    c.bench_function("deposit_5000", |b| {
        b.iter(|| {
            grid.clear_charge();
            grid.deposit(black_box(&positions), 1e-17).unwrap();
        })
    });
}

fn circuit(c: &mut Criterion) {
    let p = DeviceParameters::default();
    let (top, bottom) = (ContactModel::top(&p), ContactModel::bottom(&p));
    let circuit = SeriesCircuit::new(0.3, &top, &bottom, &p).unwrap();
    let opts = SolverOptions::default();
    c.bench_function("circuit_solve", |b| {
        b.iter(|| {
            for v in [-8.5, -2.0, 0.5, 2.0, 8.5] {
                black_box(circuit.solve(black_box(v), &opts).unwrap());
            }
        })
    });
}

fn device_step(c: &mut Criterion) {
    let setup = DeviceSetup::default();
    let mut device = Device::new(&setup, 1).unwrap();
    let mut v = 0.0;
    c.bench_function("device_step_5000", |b| {
        b.iter(|| {
            // slow ramp keeps the state in a realistic range
            v = (v + 1e-3) % 8.5;
            black_box(device.step(v, 1e-3).unwrap());
        })
    });
}

criterion_group!(benches, poisson, circuit, device_step);
criterion_main!(benches);
