//! Exhaustive search over gridded assignment matrices.

use crate::model::{Assignment, MarketInstance, Matrix};

/// Largest number of grid points a search may visit.
pub const MAX_GRID_POINTS: u128 = 10_000_000;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum GridError {
    #[error("grid of {0} points exceeds the limit of {MAX_GRID_POINTS}")]
    TooLarge(u128),
    #[error("{0} cells exceed the limit of 9")]
    TooManyCells(usize),
    #[error("step must be positive and finite, got {0}")]
    Step(f64),
    #[error("no grid point is feasible")]
    Empty,
}

/// Multiples of `step` in `[0, upper]` together with the corners 0 and 1
/// (when `1 ≤ upper`), ascending.
pub fn grid_levels(step: f64, upper: f64) -> Result<Vec<f64>, GridError> {
    if !(step > 0.0 && step.is_finite()) {
        return Err(GridError::Step(step));
    }
    let count = (upper / step + 1e-9).floor().max(0.0) as usize;
    let mut levels: Vec<f64> = (0..=count).map(|k| k as f64 * step).collect();
    if upper >= 1.0 {
        levels.push(1.0);
    }
    levels.sort_by(f64::total_cmp);
    levels.dedup();
    Ok(levels)
}

/// Maximizes `objective` over every matrix whose entry `(i, j)` is drawn from
/// `levels[i * cols + j]` and which `feasible` accepts. Ties keep the first
/// point in odometer order (last cell varies fastest).
pub fn grid_maximize(
    rows: usize,
    cols: usize,
    levels: &[Vec<f64>],
    feasible: impl Fn(&Matrix) -> bool,
    objective: impl Fn(&Matrix) -> f64,
) -> Result<(f64, Matrix), GridError> {
    assert_eq!(levels.len(), rows * cols, "one level list per cell");
    let points = levels
        .iter()
        .try_fold(1u128, |acc, l| acc.checked_mul(l.len() as u128))
        .unwrap_or(u128::MAX);
    if points > MAX_GRID_POINTS {
        return Err(GridError::TooLarge(points));
    }
    if levels.iter().any(Vec::is_empty) {
        return Err(GridError::Empty);
    }
    let mut digits = vec![0usize; rows * cols];
    let mut point = Matrix::zeros(rows, cols);
    let mut best: Option<(f64, Matrix)> = None;
    loop {
        for (k, &d) in digits.iter().enumerate() {
            point[(k / cols.max(1), k % cols.max(1))] = levels[k][d];
        }
        if feasible(&point) {
            let value = objective(&point);
            if best.as_ref().is_none_or(|(b, _)| value > *b) {
                best = Some((value, point.clone()));
            }
        }
        let mut pos = digits.len();
        loop {
            if pos == 0 {
                return best.ok_or(GridError::Empty);
            }
            pos -= 1;
            digits[pos] += 1;
            if digits[pos] < levels[pos].len() {
                break;
            }
            digits[pos] = 0;
        }
    }
}

/// Best welfare `Σ v_ij a_ij` of one scenario over gridded assignments that
/// respect service limits, capacities and budget rows `Σ_j v_ij a_ij ≤ b_i`.
pub fn brute_force_assignment(
    instance: &MarketInstance,
    scenario: &Matrix,
    step: f64,
) -> Result<(f64, Assignment), GridError> {
    let (ni, nj) = (instance.traveler_count(), instance.service_count());
    if ni * nj > 9 {
        return Err(GridError::TooManyCells(ni * nj));
    }
    let levels = (0..ni)
        .flat_map(|i| (0..nj).map(move |j| (i, j)))
        .map(|(i, j)| {
            let upper = f64::from(instance.service_limits[i].min(instance.capacities[j]));
            grid_levels(step, upper)
        })
        .collect::<Result<Vec<_>, _>>()?;
    let feasible = |a: &Matrix| {
        (0..ni).all(|i| {
            a.row(i).iter().sum::<f64>() <= f64::from(instance.service_limits[i]) + 1e-12
                && a.row(i).iter().zip(scenario.row(i)).map(|(x, v)| x * v).sum::<f64>() <= instance.budgets[i] + 1e-12
        }) && (0..nj).all(|j| (0..ni).map(|i| a[(i, j)]).sum::<f64>() <= f64::from(instance.capacities[j]) + 1e-12)
    };
    let (value, a) = grid_maximize(ni, nj, &levels, feasible, |a| a.frobenius_dot(scenario))?;
    Ok((value, Assignment(a)))
}
