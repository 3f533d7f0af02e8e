//! Acceptance suite: one line per criterion, nonzero exit if any fails.

use std::time::{Duration, Instant};

use qja_core::dynamics::{
    build_heatbath_generator, jarzynski_estimate, jarzynski_exact, jarzynski_exact_with,
    stationarity_defect, verify_detailed_balance, TransitionFactor,
};
use qja_core::engines::{run_qa, run_qja, unitary_step, DriverHamiltonian};
use qja_core::mapping::{gap_profile, map_to_quantum, spectral_certificate, Convention};
use qja_core::model::{
    build_random_potential, gibbs_reference, AnnealSchedule, ising_to_diagonal, make_linear_schedule,
    CostDiagonal, IsingInstance, PotentialDistribution,
};
use qja_core::{HeatBath, QuantumState, Topology};

struct Outcome {
    pass: bool,
    detail: String,
}

const JE_DT: f64 = 1.0;

fn potential(dim: usize, seed: u64) -> CostDiagonal<f64> {
    build_random_potential(dim, seed, PotentialDistribution::Uniform01).unwrap()
}

fn dynamics_for(cost: &CostDiagonal<f64>) -> HeatBath<f64> {
    HeatBath::new(Topology::default_for(cost))
}

/// Two degenerate wells at sites 0 and 8 of a 16-site ring.
fn double_well() -> CostDiagonal<f64> {
    let d = 16;
    let e = (0..d)
        .map(|i| -0.25 * (4.0 * std::f64::consts::PI * i as f64 / d as f64).cos())
        .collect();
    CostDiagonal::new(e, "double-well(D=16)").unwrap()
}

fn mapping_instances() -> Vec<CostDiagonal<f64>> {
    let mut v: Vec<_> = (0..5).map(|s| potential(8, s)).collect();
    for s in 0..3 {
        v.push(ising_to_diagonal(&IsingInstance::random(3, s).unwrap()).unwrap());
    }
    v
}

fn je_grid() -> Vec<(usize, usize, f64)> {
    let mut g = Vec::new();
    for &d in &[2, 4, 8, 64] {
        for &n in &[1, 3, 10, 100] {
            for &bf in &[1.0, 5.0] {
                g.push((d, n, bf));
            }
        }
    }
    g
}

fn c1_mapping_spectrum() -> Outcome {
    let mut worst_lmin = 0.0_f64;
    let mut worst_fid = 0.0_f64;
    let mut min_l1 = f64::INFINITY;
    for cost in mapping_instances() {
        for &beta in &[0.0, 1.0, 10.0, 100.0] {
            let gen = dynamics_for(&cost).generator(&cost, beta).unwrap();
            let hq = map_to_quantum(&gen, &cost, Convention::Kernel, 0.1).unwrap();
            let c = spectral_certificate(&hq, &cost);
            worst_lmin = worst_lmin.max(c.lambda_min.abs());
            min_l1 = min_l1.min(c.lambda_1);
            worst_fid = worst_fid.max(1.0 - c.gs_fidelity);
        }
    }
    Outcome {
        pass: worst_lmin < 1e-10 && min_l1 > 0.0 && worst_fid < 1e-8,
        detail: format!("max|lambda_min|={worst_lmin:e} min lambda_1={min_l1:e} max(1-fid)={worst_fid:e}"),
    }
}

fn c2_c3_runs() -> (Outcome, Outcome) {
    let cost = potential(64, 13);
    let schedule = make_linear_schedule(1000, 0.1, 100.0).unwrap();
    let qja = run_qja(&cost, &schedule, &HeatBath::new(Topology::Ring)).unwrap();
    let gibbs = gibbs_reference(&cost, 100.0);
    let defect = 1.0 - qja.min_overlap();
    let final_err = qja
        .final_distribution
        .iter()
        .zip(&gibbs.probabilities)
        .fold(0.0_f64, |m, (a, b)| m.max((a - b).abs()));
    let c2 = Outcome {
        pass: qja.per_step.len() == 1001 && defect <= 1e-8 && final_err <= 1e-6,
        detail: format!(
            "max(1-overlap)={defect:e} final max-abs={final_err:e} qja wall={:.2?}",
            qja.wall_time
        ),
    };
    let driver = DriverHamiltonian::for_cost(&cost).unwrap();
    let qa = run_qa(&cost, &schedule, &driver).unwrap();
    let (pa, pj) = (qa.final_gs_prob(), qja.final_gs_prob());
    let c3 = Outcome {
        pass: pa < pj && pa < 0.9 && pj > 0.99,
        detail: format!("qa gs={pa:.6} qja gs={pj:.6} tau={}", schedule.total_time()),
    };
    (c2, c3)
}

/// Sum over all `2^(n+1)` trajectories of a two-state chain, with the
/// closed-form kernel `I + (1 - e^{-(a+b) dt}) / (a+b) M`.
fn two_state_path_sum(e: [f64; 2], betas: &[f64], dt: f64) -> f64 {
    let n = betas.len() - 1;
    let fermi = |x: f64| 1.0 / (1.0 + x.exp());
    let kernel = |beta: f64| {
        let a = fermi(beta * (e[1] - e[0]));
        let b = fermi(beta * (e[0] - e[1]));
        let f = (1.0 - (-(a + b) * dt).exp()) / (a + b);
        [[1.0 - f * a, f * b], [f * a, 1.0 - f * b]]
    };
    let z0: f64 = e.iter().map(|x| (-betas[0] * x).exp()).sum();
    let mut total = 0.0;
    for path in 0..(1usize << (n + 1)) {
        let s = |k: usize| (path >> k) & 1;
        let mut weight = (-betas[0] * e[s(0)]).exp() / z0;
        let mut work = 0.0;
        for k in 0..n {
            work += (betas[k + 1] - betas[k]) * e[s(k)];
            weight *= kernel(betas[k + 1])[s(k + 1)][s(k)];
        }
        total += weight * (-work).exp();
    }
    total
}

fn c4_jarzynski_exact() -> Outcome {
    let mut worst = 0.0_f64;
    for (d, n, bf) in je_grid() {
        let cost = potential(d, 100 + d as u64);
        let schedule = make_linear_schedule(n, JE_DT, bf).unwrap();
        let je = jarzynski_exact(&cost, &schedule, &dynamics_for(&cost)).unwrap();
        worst = worst.max(je.rel_error());
    }
    let mut worst_enum = 0.0_f64;
    for n in 1..=3 {
        for &bf in &[1.0, 5.0] {
            let cost = potential(2, 7);
            let schedule = make_linear_schedule(n, JE_DT, bf).unwrap();
            let je = jarzynski_exact(&cost, &schedule, &dynamics_for(&cost)).unwrap();
            let e = [cost.energies()[0], cost.energies()[1]];
            let oracle = two_state_path_sum(e, schedule.beta_grid(), JE_DT);
            worst_enum = worst_enum.max(((je.lhs_estimate - oracle) / oracle).abs());
        }
    }
    Outcome {
        pass: worst <= 1e-12 && worst_enum <= 1e-12,
        detail: format!("max rel err vs Z ratio={worst:e} vs path enumeration={worst_enum:e}"),
    }
}

fn c5_jarzynski_mc() -> Outcome {
    let cost = potential(4, 5);
    let schedule = make_linear_schedule(3, JE_DT, 2.0).unwrap();
    let dynamics = dynamics_for(&cost);
    let hits = (0..20)
        .filter(|&seed| {
            let je = jarzynski_estimate(&cost, &schedule, &dynamics, 100_000, seed).unwrap();
            je.abs_error() <= 3.0 * je.std_error
        })
        .count();
    Outcome {
        pass: hits >= 19,
        detail: format!("{hits}/20 seeds within 3 std errors"),
    }
}

fn c6_triviality() -> Outcome {
    let mut worst = 0.0_f64;
    for (d, n, bf) in je_grid() {
        let cost = potential(d, 100 + d as u64);
        let schedule = make_linear_schedule(n, JE_DT, bf).unwrap();
        let je = jarzynski_exact_with(&cost, &schedule, &dynamics_for(&cost), TransitionFactor::Identity)
            .unwrap();
        worst = worst.max(je.rel_error());
    }
    Outcome {
        pass: worst <= 1e-14,
        detail: format!("max rel err={worst:e}"),
    }
}

fn c7_detailed_balance() -> Outcome {
    let mut costs = mapping_instances();
    costs.push(potential(64, 13));
    costs.push(double_well());
    costs.push(potential(4, 5));
    costs.extend([2, 4, 8, 64].iter().map(|&d| potential(d, 100 + d as u64)));
    let betas: Vec<f64> = (0..=20).map(|k| 5.0 * k as f64).chain([0.5, 1.0, 2.0]).collect();
    let mut worst_db = 0.0_f64;
    let mut worst_fix = 0.0_f64;
    for cost in &costs {
        for &beta in &betas {
            let gen = build_heatbath_generator(cost, beta, Topology::default_for(cost), 1.0).unwrap();
            worst_db = worst_db.max(verify_detailed_balance(&gen, cost));
            for dt in [0.1, 1.0] {
                worst_fix = worst_fix.max(stationarity_defect(&gen.kernel(dt), cost, beta));
            }
        }
    }
    Outcome {
        pass: worst_db < 1e-12 && worst_fix < 1e-10,
        detail: format!("max db residual={worst_db:e} max fixed-point defect={worst_fix:e}"),
    }
}

fn c8_unitarity() -> Outcome {
    let mut worst_drift = 0.0_f64;
    let mut worst_fid = 0.0_f64;
    for cost in [potential(64, 13), potential(8, 1), double_well()] {
        for &beta in &[0.0, 1.0, 10.0, 100.0] {
            let gen = dynamics_for(&cost).generator(&cost, beta).unwrap();
            let hq = map_to_quantum(&gen, &cost, Convention::Kernel, 0.1).unwrap();
            let mut psi = QuantumState::<f64>::basis(cost.dim(), 0);
            for _ in 0..100 {
                let next = unitary_step(&psi, &hq, 0.1);
                worst_drift = worst_drift.max((next.norm() - psi.norm()).abs());
                psi = next;
            }
            let ground = QuantumState::from_real(hq.ground_vector().as_slice()).unwrap();
            let out = unitary_step(&ground, &hq, 0.1);
            worst_fid = worst_fid.max(1.0 - out.fidelity(&ground));
        }
    }
    Outcome {
        pass: worst_drift < 1e-13 && worst_fid <= 1e-12,
        detail: format!("max per-step drift={worst_drift:e} max(1-fid)={worst_fid:e}"),
    }
}

fn c9_gap_profile() -> Outcome {
    let cost = double_well();
    let dynamics = HeatBath::new(Topology::Ring);
    let schedule = make_linear_schedule(100, 1.0, 100.0).unwrap();
    let profile = gap_profile(&cost, &schedule, &dynamics, Convention::Kernel).unwrap();
    let tail: Vec<_> = profile.points.iter().filter(|p| p.beta >= 5.0).collect();
    let monotone = tail.windows(2).all(|w| w[1].gap < w[0].gap);
    let last = profile.points.last().unwrap();
    let min = profile.minimum();
    // finer beta grid, same mapping time step
    let refined = schedule.refined(10).unwrap();
    let refined =
        AnnealSchedule::new(schedule.dt(), refined.beta_grid().to_vec(), refined.f_grid().to_vec()).unwrap();
    let fine = gap_profile(&cost, &refined, &dynamics, Convention::Kernel).unwrap();
    let fmin = fine.minimum();
    // one coarse grid spacing in beta, and the gap change across it
    let spacing = schedule.beta(1) - schedule.beta(0);
    let gap_span = (tail[tail.len() - 2].gap - min.gap).abs();
    let agree = (fmin.beta - min.beta).abs() <= spacing && (fmin.gap - min.gap).abs() <= gap_span;
    Outcome {
        pass: monotone && last.gap < 1e-3 && agree,
        detail: format!(
            "monotone beyond beta=5: {monotone}, gap(100)={:e}, min at beta={} refined min at beta={}",
            last.gap, min.beta, fmin.beta
        ),
    }
}

fn timed<F: FnOnce() -> Outcome>(f: F) -> (Outcome, Duration) {
    let t = Instant::now();
    let o = f();
    (o, t.elapsed())
}

fn main() {
    let mut results: Vec<(usize, Outcome, Duration, Option<Duration>)> = Vec::new();
    let (o, d) = timed(c1_mapping_spectrum);
    results.push((1, o, d, Some(Duration::from_secs(5))));
    let t = Instant::now();
    let (c2, c3) = c2_c3_runs();
    let d = t.elapsed();
    results.push((2, c2, d, Some(Duration::from_secs(60))));
    results.push((3, c3, d, None));
    let (o, d) = timed(c4_jarzynski_exact);
    results.push((4, o, d, Some(Duration::from_secs(10))));
    let (o, d) = timed(c5_jarzynski_mc);
    results.push((5, o, d, Some(Duration::from_secs(30))));
    let (o, d) = timed(c6_triviality);
    results.push((6, o, d, None));
    let (o, d) = timed(c7_detailed_balance);
    results.push((7, o, d, None));
    let (o, d) = timed(c8_unitarity);
    results.push((8, o, d, None));
    let (o, d) = timed(c9_gap_profile);
    results.push((9, o, d, None));

    let mut failed = 0;
    for (k, o, d, budget) in &results {
        let in_time = budget.map_or(true, |b| *d <= b);
        let pass = o.pass && in_time;
        failed += usize::from(!pass);
        let budget = budget.map_or(String::new(), |b| format!(" budget={b:?}"));
        println!(
            "criterion {k}: {} ({}; runtime={d:.2?}{budget})",
            if pass { "PASS" } else { "FAIL" },
            o.detail
        );
    }
    println!("acceptance: {}/{} passed", results.len() - failed, results.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
