mod common;

use centroidal_to::fddp::{
    backward_pass, expected_change, forward_pass, linearise, solve, solve_box_qp, ActionModel, BoxQpSettings, Settings,
};
use common::lqr::*;
use nalgebra::DVector;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn backward_pass_reproduces_riccati_gains() {
    let mut rng = ChaCha8Rng::seed_from_u64(71);
    for _ in 0..20 {
        let p = random_lqr(&mut rng, 4, 2, 12);
        let (xs, us) = random_init(&mut rng, &p);
        let lin = linearise(&p, &xs, &us, false).unwrap();
        let g = backward_pass(&p, &lin, &us, 0.0, &BoxQpSettings::default(), None).unwrap();
        let (oracle, _) = riccati(&p);
        for k in 0..p.running.len() {
            assert!((&g.feedback[k] - &oracle[k]).amax() < 1e-10);
        }
    }
}

#[test]
fn solver_reaches_riccati_cost_in_two_iterations() {
    let mut rng = ChaCha8Rng::seed_from_u64(73);
    for _ in 0..20 {
        let p = random_lqr(&mut rng, 4, 2, 15);
        let (xs, us) = random_init(&mut rng, &p);
        let (sol, _) = solve(&p, xs, us, &Settings::default()).unwrap();
        let (_, p0) = riccati(&p);
        let optimum = 0.5 * p.x0.dot(&(&p0 * &p.x0));
        assert!(sol.converged());
        assert!(sol.iterations <= 2, "{}", sol.iterations);
        assert!(
            (sol.cost - optimum).abs() < 1e-9 * (1.0 + optimum),
            "{} vs {optimum}",
            sol.cost
        );
    }
}

#[test]
fn zero_gradient_gives_zero_feedforward() {
    let mut rng = ChaCha8Rng::seed_from_u64(79);
    let mut p = random_lqr(&mut rng, 3, 2, 6);
    p.x0 = DVector::zeros(3);
    let xs = vec![DVector::zeros(3); 7];
    let us = vec![DVector::zeros(2); 6];
    let lin = linearise(&p, &xs, &us, false).unwrap();
    let g = backward_pass(&p, &lin, &us, 0.0, &BoxQpSettings::default(), None).unwrap();
    assert!(g.feedforward.iter().all(|k| k.amax() == 0.0));
}

#[test]
fn zero_step_keeps_the_trajectory() {
    let mut rng = ChaCha8Rng::seed_from_u64(83);
    let p = random_lqr(&mut rng, 3, 2, 6);
    let mut xs = vec![p.x0.clone()];
    let us: Vec<DVector<f64>> = (0..6)
        .map(|_| DVector::from_fn(2, |_, _| rng.random_range(-1.0..1.0)))
        .collect();
    for (k, u) in us.iter().enumerate() {
        let next = p.running[k].calc(&xs[k], u).unwrap().0;
        xs.push(next);
    }
    let lin = linearise(&p, &xs, &us, false).unwrap();
    let mut g = backward_pass(&p, &lin, &us, 0.0, &BoxQpSettings::default(), None).unwrap();
    g.feedforward.iter_mut().for_each(|k| k.fill(0.0));
    let roll = forward_pass(&p, &xs, &us, &g, &lin.gaps, 1e-300, 1e6).unwrap();
    for k in 0..6 {
        assert!((&roll.xs[k] - &xs[k]).amax() < 1e-15);
        assert!((&roll.us[k] - &us[k]).amax() < 1e-15);
    }
}

#[test]
fn full_step_closes_all_gaps() {
    let mut rng = ChaCha8Rng::seed_from_u64(89);
    let p = random_lqr(&mut rng, 4, 2, 10);
    // Straight-line interpolation that ignores the dynamics.
    let target = DVector::from_element(4, 5.0);
    let xs: Vec<DVector<f64>> = (0..=10)
        .map(|k| &p.x0 + (&target - &p.x0) * (k as f64 / 10.0))
        .collect();
    let us = vec![DVector::zeros(2); 10];
    let lin = linearise(&p, &xs, &us, false).unwrap();
    assert!(lin.gap_norm() > 0.1);
    let g = backward_pass(&p, &lin, &us, 0.0, &BoxQpSettings::default(), None).unwrap();
    let roll = forward_pass(&p, &xs, &us, &g, &lin.gaps, 1.0, 1e6).unwrap();
    let after = linearise(&p, &roll.xs, &roll.us, false).unwrap();
    assert!(after.gap_norm() <= 1e-9);
}

#[test]
fn feasible_lqr_step_lands_on_optimum() {
    let mut rng = ChaCha8Rng::seed_from_u64(97);
    let p = random_lqr(&mut rng, 4, 2, 10);
    let mut xs = vec![p.x0.clone()];
    let us = vec![DVector::zeros(2); 10];
    for (k, u) in us.iter().enumerate() {
        let next = p.running[k].calc(&xs[k], u).unwrap().0;
        xs.push(next);
    }
    let lin = linearise(&p, &xs, &us, false).unwrap();
    let g = backward_pass(&p, &lin, &us, 0.0, &BoxQpSettings::default(), None).unwrap();
    let roll = forward_pass(&p, &xs, &us, &g, &lin.gaps, 1.0, 1e6).unwrap();
    let (_, p0) = riccati(&p);
    let optimum = 0.5 * p.x0.dot(&(&p0 * &p.x0));
    assert!((roll.cost - optimum).abs() < 1e-10 * (1.0 + optimum));
    let model = expected_change(&lin, &g);
    assert!((lin.cost + model.at(1.0) - roll.cost).abs() < 1e-9 * (1.0 + lin.cost));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]
    #[test]
    fn box_qp_matches_enumeration(seed in any::<u64>(), n in 1usize..6) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let h = spd(&mut rng, n, 0.05);
        let g = DVector::from_fn(n, |_, _| rng.random_range(-3.0..3.0));
        let lo = DVector::from_fn(n, |_, _| rng.random_range(-1.0..0.0));
        let hi = DVector::from_fn(n, |i, _| lo[i] + rng.random_range(0.0..1.5));
        let x0 = DVector::from_fn(n, |_, _| rng.random_range(-2.0..2.0));
        let s = solve_box_qp(&h, &g, &lo, &hi, &x0, &BoxQpSettings::default()).unwrap();
        let oracle = enumerate_box_qp(&h, &g, &lo, &hi);
        prop_assert!((&s.x - &oracle).amax() < 1e-8, "{} vs {}", s.x, oracle);
    }
}

#[test]
fn tight_box_double_integrator_matches_enumeration() {
    for bound in [0.3, 0.6, 1.0, 5.0] {
        let p = double_integrator(bound);
        let (h, g) = condensed(&p);
        let lo = DVector::from_element(3, -bound);
        let hi = DVector::from_element(3, bound);
        let oracle = enumerate_box_qp(&h, &g, &lo, &hi);
        let xs = vec![p.x0.clone(); 4];
        let us = vec![DVector::zeros(1); 3];
        let (sol, _) = solve(&p, xs, us, &Settings::default()).unwrap();
        assert!(sol.converged());
        for k in 0..3 {
            assert!(
                (sol.us[k][0] - oracle[k]).abs() < 1e-6,
                "bound {bound}: {} vs {}",
                sol.us[k][0],
                oracle[k]
            );
        }
    }
}

#[test]
fn trace_is_deterministic_and_monotone_once_feasible() {
    let p = double_integrator(0.4);
    let run = || {
        solve(
            &p,
            vec![p.x0.clone(); 4],
            vec![DVector::zeros(1); 3],
            &Settings::default(),
        )
        .unwrap()
        .1
    };
    let (a, b) = (run(), run());
    assert_eq!(a.to_jsonl(), b.to_jsonl());
    let mut last = f64::INFINITY;
    for r in a.records.iter().filter(|r| r.alpha > 0.0) {
        if r.gap_norm < 1e-9 && last.is_finite() {
            assert!(r.cost <= last);
        }
        if r.gap_norm < 1e-9 {
            last = r.cost;
        }
    }
}
