use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};

use cornerflow::{build_delta_bar_profile, march_grid, solve_node, CornerProblem, EosModel, SolverOptions, VacuumCut};

fn dam_break() -> CornerProblem {
    let eos = EosModel::shallow_water(2.0, 0.25).unwrap();
    let c0 = eos.c(1.0);
    CornerProblem::new(eos, 3.0 * c0, 1.0, -1.3, VacuumCut::default()).unwrap()
}

fn options(p: &CornerProblem) -> SolverOptions {
    SolverOptions { tau_vac: p.tau_cut, c_vac: p.cut.c_vac * p.c0, phi_tol: 1e-2 * p.c0 * p.c0, ..SolverOptions::default() }
}

fn node(c: &mut Criterion) {
    let p = dam_break();
    let pq = p.curve_pq(p.tau_cut, 65).unwrap();
    let pr = p.curve_pr_with_states(p.pr_tau_end(), 65).unwrap();
    let opts = options(&p);
    c.bench_function("solve_node", |b| b.iter(|| solve_node(black_box(&pq.points[1]), black_box(&pr.points[1]), &p.table, &opts)));
}

fn march(c: &mut Criterion) {
    let p = dam_break();
    let opts = options(&p);
    let mut g = c.benchmark_group("march_grid");
    g.sample_size(10);
    for n in [64usize, 128, 256] {
        let pq = p.curve_pq(p.tau_cut, n + 1).unwrap();
        let pr = p.curve_pr_with_states(p.pr_tau_end(), n + 1).unwrap();
        g.bench_with_input(BenchmarkId::from_parameter(n), &n, |b, _| b.iter(|| march_grid(&pq, &pr, &p.table, &opts).unwrap()));
    }
    g.finish();
}

fn profile(c: &mut Criterion) {
    let eos = EosModel::van_der_waals(0.28, 0.05).unwrap();
    c.bench_function("delta_bar_profile_vdw", |b| b.iter(|| build_delta_bar_profile(&eos, 10.0, 1e4, 400).unwrap()));
}

criterion_group!(benches, node, march, profile);
criterion_main!(benches);
