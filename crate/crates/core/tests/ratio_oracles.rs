mod common;

use common::{grid_search_rate, rng, TABLE1_R, TABLE1_Z};
use ctxrank::ratios::{
    compose_contexts, pfs_rate, solve_balance_enumerate, solve_context_free, BalanceOptions,
};
use ctxrank::{remark5_instance, Instance};
use rand::Rng;

#[test]
fn table1_solutions() {
    let rep = solve_balance_enumerate(&remark5_instance(), &BalanceOptions::default()).unwrap();
    assert_eq!(rep.solutions.len(), 4);
    for (s, sol) in rep.solutions.iter().enumerate() {
        assert!(
            (sol.z - TABLE1_Z[s]).abs() <= 1e-5,
            "z{} = {}",
            s + 1,
            sol.z
        );
        for i in 0..4 {
            for l in 0..2 {
                assert!((sol.r[(i, l)] - TABLE1_R[s][i][l]).abs() <= 1e-4);
            }
        }
        assert_eq!(sol.kkt_ok, s == 3);
        assert!(sol.residuals.eq12 <= 1e-8 && sol.residuals.eq11 <= 1e-8);
    }
    assert_eq!(rep.optimal_index, Some(3));
    assert!(!rep.non_unique);
}

#[test]
fn negative_multiplier_signs_on_nonoptimal_solutions() {
    let rep = solve_balance_enumerate(&remark5_instance(), &BalanceOptions::default()).unwrap();
    let lam = |s: usize, l: usize| {
        rep.solutions[s]
            .multipliers
            .as_ref()
            .unwrap()
            .get(0, 3, l)
            .unwrap()
    };
    assert!(lam(0, 0) < 0.0 && lam(0, 1) < 0.0);
    assert!(lam(1, 0) < 0.0);
    assert!(lam(2, 1) < 0.0);
    let opt = rep.solutions[3].multipliers.as_ref().unwrap();
    assert!(opt.lambda.iter().all(|m| m.value >= -1e-6));
}

#[test]
fn context_free_composition_matches_joint_optimum() {
    let inst = remark5_instance();
    let s2 = inst.variances();
    let parts: Vec<_> = (0..2)
        .map(|l| solve_context_free(&inst.means.column(l), &s2.column(l), 2).unwrap())
        .collect();
    let mut sol = compose_contexts(&parts).unwrap();
    sol.evaluate(&inst).unwrap();
    for i in 0..4 {
        for l in 0..2 {
            assert!((sol.r[(i, l)] - TABLE1_R[3][i][l]).abs() <= 1e-3);
        }
    }
    assert!((sol.z - TABLE1_Z[3]).abs() <= 1e-5);
    assert!(sol.residuals.eq11 <= 1e-8 && sol.residuals.eq12 <= 1e-8);
    assert!(sol.kkt_ok);
}

#[test]
fn two_design_instance_has_one_solution() {
    let inst =
        Instance::uniform_m(1, vec![vec![1.0], vec![0.0]], vec![vec![2.0], vec![0.5]]).unwrap();
    let rep = solve_balance_enumerate(&inst, &BalanceOptions::default()).unwrap();
    assert_eq!(rep.solutions.len(), 1);
    assert!(rep.solutions[0].kkt_ok);
}

fn random_small(g: &mut impl Rng) -> Instance {
    loop {
        let k = g.random_range(2..=4);
        let q = g.random_range(1..=2);
        let m = g.random_range(1..=2usize.min(k - 1));
        let means = (0..k)
            .map(|_| (0..q).map(|_| g.random_range(-3.0..3.0)).collect())
            .collect();
        let stds = (0..k)
            .map(|_| (0..q).map(|_| g.random_range(0.5..2.5)).collect())
            .collect();
        if let Ok(inst) = Instance::uniform_m(m, means, stds) {
            return inst;
        }
    }
}

#[test]
fn solver_matches_simplex_grid_search() {
    let mut g = rng(2024);
    for n in 0..20 {
        let inst = random_small(&mut g);
        let rep = solve_balance_enumerate(&inst, &BalanceOptions::default()).unwrap();
        for s in &rep.solutions {
            assert!(
                s.residuals.eq12 <= 1e-8,
                "instance {n}: eq12 residual {}",
                s.residuals.eq12
            );
        }
        let opt = rep
            .optimal()
            .unwrap_or_else(|| panic!("instance {n}: no kkt_ok solution"));
        let z = pfs_rate(&opt.r, &inst).unwrap();
        let grid = grid_search_rate(&inst, 0.005);
        assert!(
            (z - grid).abs() <= 2e-3,
            "instance {n}: solver {z} vs grid {grid}"
        );
        assert!(
            z >= grid - 1e-12,
            "instance {n}: grid point beats the solver"
        );
    }
}
