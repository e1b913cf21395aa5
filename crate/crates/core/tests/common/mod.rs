#![allow(dead_code)]

use mobility_equity::lp::{LpProblem, Relation};
use mobility_equity::model::{MarketInstance, Matrix};
use rand::Rng;

/// Dense LP with `n` variables and `m` rows, integer data in `[-5, 5]`.
pub fn random_lp<R: Rng>(rng: &mut R, n: usize, m: usize) -> LpProblem {
    let mut p = LpProblem::with_objective((0..n).map(|_| f64::from(rng.gen_range(-5..=5))).collect());
    for _ in 0..m {
        let row: Vec<f64> = (0..n).map(|_| f64::from(rng.gen_range(-5..=5))).collect();
        let rel = match rng.gen_range(0..4) {
            0 => Relation::Ge,
            1 => Relation::Eq,
            _ => Relation::Le,
        };
        p.add_row(&row, rel, f64::from(rng.gen_range(-5..=5)));
    }
    p
}

pub fn matrix(rows: &[&[f64]]) -> Matrix {
    Matrix::from_rows(rows).unwrap()
}

/// Two travelers, two services, unit limits and capacities, budgets of 10,
/// and the single profile ((3, 1), (1, 3)).
pub fn reference_instance() -> MarketInstance {
    MarketInstance::new(
        vec![10.0, 10.0],
        vec![1, 1],
        vec![1, 1],
        vec![matrix(&[&[3.0, 1.0], &[1.0, 3.0]])],
    )
    .unwrap()
}

/// Beale's cycling example in maximization form; optimum 1/20.
pub fn beale() -> LpProblem {
    let mut p = LpProblem::with_objective(vec![0.75, -150.0, 0.02, -6.0]);
    p.add_row(&[0.25, -60.0, -0.04, 9.0], Relation::Le, 0.0);
    p.add_row(&[0.5, -90.0, -0.02, 3.0], Relation::Le, 0.0);
    p.add_row(&[0.0, 0.0, 1.0, 0.0], Relation::Le, 1.0);
    p
}

/// A homogeneous four-variable program on which the largest-coefficient rule
/// with lowest-index ties revisits a basis.
pub fn homogeneous_cycle() -> LpProblem {
    let mut p = LpProblem::with_objective(vec![2.0, 3.0, -1.0, -12.0]);
    p.add_row(&[-2.0, -9.0, 1.0, 9.0], Relation::Le, 0.0);
    p.add_row(&[1.0 / 3.0, 1.0, -1.0 / 3.0, -2.0], Relation::Le, 0.0);
    p
}
