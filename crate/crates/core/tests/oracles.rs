//! Frozen values from independent computations.

use qja_core::dynamics::{jarzynski_exact, partition_ratio, sample_trajectory};
use qja_core::mapping::{map_to_quantum, Convention};
use qja_core::model::{make_linear_schedule, CostDiagonal};
use qja_core::{HeatBath, Topology};

/// Eigenvalues of the rate-convention `H_q` for these energies on an
/// 8-site ring at beta = 100, evaluated with 80-digit arithmetic.
#[test]
fn tiny_eigenvalues_match_high_precision_reference() {
    let energies: Vec<f64> = vec![
        -0.8813407293505765,
        -0.5484309665677798,
        -0.7892508066800136,
        -0.8573410623312527,
        -0.22208639983595246,
        -0.67578837061637,
        -0.9316622824714995,
        -0.01654683922611866,
    ];
    let reference: [f64; 8] = [
        -1.8e-83,
        1.0795550330730378e-29,
        2.0914594200276058e-14,
        1.0,
        1.0,
        1.9999999999999791,
        2.0,
        2.0,
    ];
    let cost = CostDiagonal::new(energies, "frozen").unwrap();
    let gen = HeatBath::new(Topology::Ring).generator(&cost, 100.0).unwrap();
    let hq = map_to_quantum(&gen, &cost, Convention::Rate, 0.1).unwrap();
    let values = &hq.spectrum().values;
    assert!(values[0].abs() < 1e-40, "{}", values[0]);
    for (got, want) in values.iter().zip(&reference).skip(1) {
        let rel = ((got - want) / want).abs();
        assert!(rel < 1e-12, "got {got:e} want {want:e}");
    }
}

fn fermi(x: f64) -> f64 {
    1.0 / (1.0 + x.exp())
}

/// `P[to][from]` for a two-state chain with hop rates `a` (0 -> 1) and `b` (1 -> 0).
fn two_state_kernel(e: [f64; 2], beta: f64, dt: f64) -> [[f64; 2]; 2] {
    let a = fermi(beta * (e[1] - e[0]));
    let b = fermi(beta * (e[0] - e[1]));
    let f = (1.0 - (-(a + b) * dt).exp()) / (a + b);
    [[1.0 - f * a, f * b], [f * a, 1.0 - f * b]]
}

fn gibbs2(e: [f64; 2], beta: f64) -> [f64; 2] {
    let w = [(-beta * e[0]).exp(), (-beta * e[1]).exp()];
    [w[0] / (w[0] + w[1]), w[1] / (w[0] + w[1])]
}

fn path_sum(e: [f64; 2], betas: &[f64], dt: f64) -> f64 {
    let n = betas.len() - 1;
    let p0 = gibbs2(e, betas[0]);
    let mut total = 0.0;
    for path in 0..(1usize << (n + 1)) {
        let s = |k: usize| (path >> k) & 1;
        let mut weight = p0[s(0)];
        let mut work = 0.0;
        for k in 0..n {
            work += (betas[k + 1] - betas[k]) * e[s(k)];
            weight *= two_state_kernel(e, betas[k + 1], dt)[s(k + 1)][s(k)];
        }
        total += weight * (-work).exp();
    }
    total
}

#[test]
fn transfer_product_matches_path_enumeration() {
    let e = [0.3, -0.7];
    let cost = CostDiagonal::new(e.to_vec(), "two").unwrap();
    let dynamics = HeatBath::new(Topology::Ring);
    for n in 1..=3 {
        for &(bf, dt) in &[(1.0, 1.0), (5.0, 0.25), (2.0, 3.0)] {
            let schedule = make_linear_schedule(n, dt, bf).unwrap();
            let je = jarzynski_exact(&cost, &schedule, &dynamics).unwrap();
            let oracle = path_sum(e, schedule.beta_grid(), dt);
            assert!(((je.lhs_estimate - oracle) / oracle).abs() < 1e-12);
            let ratio = ((-bf * e[0]).exp() + (-bf * e[1]).exp()) / 2.0;
            assert!(((partition_ratio(&cost, &schedule) - ratio) / ratio).abs() < 1e-14);
            assert!(((oracle - ratio) / ratio).abs() < 1e-12);
        }
    }
}

#[test]
fn sampled_paths_follow_the_enumerated_distribution() {
    let e = [0.0, -1.0];
    let cost = CostDiagonal::new(e.to_vec(), "two").unwrap();
    let dynamics = HeatBath::new(Topology::Ring);
    let schedule = make_linear_schedule(1, 1.0, 2.0).unwrap();
    let p0 = gibbs2(e, 0.0);
    let k = two_state_kernel(e, 2.0, 1.0);
    let n = 20_000;
    let mut counts = [[0usize; 2]; 2];
    for seed in 0..n {
        let t = sample_trajectory(&cost, &schedule, &dynamics, seed as u64).unwrap();
        counts[t.states[0]][t.states[1]] += 1;
        let expected_work = -2.0 * e[t.states[0]];
        assert_eq!(t.work_exponent, expected_work);
    }
    for s0 in 0..2 {
        for s1 in 0..2 {
            let p = p0[s0] * k[s1][s0];
            let freq = counts[s0][s1] as f64 / n as f64;
            let sigma = (p * (1.0 - p) / n as f64).sqrt();
            assert!((freq - p).abs() < 4.0 * sigma, "path ({s0},{s1}): {freq} vs {p}");
        }
    }
}

#[test]
fn beta_zero_ring_gap_has_closed_form() {
    for d in [3usize, 5, 8, 16] {
        let cost = CostDiagonal::new((0..d).map(|i| i as f64 * 0.1).collect(), "flat").unwrap();
        let gamma = 1.0;
        let dt = 0.3;
        let gen = HeatBath::new(Topology::Ring).generator(&cost, 0.0).unwrap();
        let hq = map_to_quantum(&gen, &cost, Convention::Kernel, dt).unwrap();
        let v = &hq.spectrum().values;
        let theta = 2.0 * std::f64::consts::PI / d as f64;
        let expected = 1.0 - (-dt * (gamma / 2.0) * (2.0 - 2.0 * theta.cos())).exp();
        assert!((v[1] - v[0] - expected).abs() < 1e-14, "D={d}: {} vs {expected}", v[1] - v[0]);
    }
}
