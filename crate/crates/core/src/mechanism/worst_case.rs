//! Worst-case program, worst-case profile selection and the nominal program.
//!
//! The worst-case program maximizes an epigraph variable `t` bounded by the
//! welfare of every scenario block. Each block carries service-limit,
//! capacity and budget rows. Truthfulness rows
//! `v_ij a_ij(s') − v_ij a_ij(s) ≤ 0` couple blocks `s` and `s'` whose
//! profiles differ only in row `i` (so `s'` is `i`'s misreport against the
//! others' true rows in `s`); one row per service with `v_ij ≠ 0`.
//!
//! The nominal assignment is the optimum of a single block at the worst-case
//! profile `w`, restricted to cells where `w_ij` is the smallest valuation any
//! scenario gives that cell. Holding a cell at its pessimistic value is what
//! keeps every realized profile's utility nonnegative once that cell is
//! charged its reservation payment.

use serde::{Deserialize, Serialize};

use super::{DualCertificate, MechanismError, MechanismOptions, MisreportDual, ScenarioDuals};
use crate::lp::{check_certificate, solve, LpProblem, LpSolution, LpStatus, Relation};
use crate::model::{validate, Assignment, Issue, MarketInstance, Matrix, ValuationProfile};

/// Slack allowed on the certificate of every offline LP.
const CERTIFICATE_TOLERANCE: f64 = 1e-6;

/// What each row of the worst-case program constrains.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum RowFamily {
    Epigraph {
        scenario: usize,
    },
    ServiceLimit {
        scenario: usize,
        traveler: usize,
    },
    Capacity {
        scenario: usize,
        service: usize,
    },
    Budget {
        scenario: usize,
        traveler: usize,
    },
    Misreport {
        traveler: usize,
        scenario: usize,
        misreport: usize,
        service: usize,
    },
}

/// The worst-case program with its row bookkeeping. Variable 0 is `t`;
/// `a_ij` of block `s` is variable `1 + (s·I + i)·J + j`.
#[derive(Debug, Clone, PartialEq)]
pub struct EpigraphProgram {
    pub problem: LpProblem,
    pub rows: Vec<RowFamily>,
    pub travelers: usize,
    pub services: usize,
    pub scenarios: usize,
}

impl EpigraphProgram {
    pub fn build(instance: &MarketInstance) -> Self {
        let (ni, nj, ns) = (
            instance.traveler_count(),
            instance.service_count(),
            instance.scenario_count(),
        );
        let var = |s: usize, i: usize, j: usize| 1 + (s * ni + i) * nj + j;
        let mut objective = vec![0.0; 1 + ns * ni * nj];
        objective[0] = 1.0;
        let mut problem = LpProblem::with_objective(objective);
        problem.set_free(0);
        let mut rows = Vec::new();

        for (s, v) in instance.scenarios.iter().enumerate() {
            let welfare = (0..ni).flat_map(|i| (0..nj).map(move |j| (i, j)));
            problem.add_sparse_row(
                std::iter::once((0, 1.0)).chain(welfare.map(|(i, j)| (var(s, i, j), -v[(i, j)]))),
                Relation::Le,
                0.0,
            );
            rows.push(RowFamily::Epigraph { scenario: s });
            for i in 0..ni {
                problem.add_sparse_row(
                    (0..nj).map(|j| (var(s, i, j), 1.0)),
                    Relation::Le,
                    f64::from(instance.service_limits[i]),
                );
                rows.push(RowFamily::ServiceLimit {
                    scenario: s,
                    traveler: i,
                });
            }
            for j in 0..nj {
                problem.add_sparse_row(
                    (0..ni).map(|i| (var(s, i, j), 1.0)),
                    Relation::Le,
                    f64::from(instance.capacities[j]),
                );
                rows.push(RowFamily::Capacity {
                    scenario: s,
                    service: j,
                });
            }
            for i in 0..ni {
                problem.add_sparse_row(
                    (0..nj).map(|j| (var(s, i, j), v[(i, j)])),
                    Relation::Le,
                    instance.budgets[i],
                );
                rows.push(RowFamily::Budget {
                    scenario: s,
                    traveler: i,
                });
            }
        }

        for (s, v) in instance.scenarios.iter().enumerate() {
            for (m, u) in instance.scenarios.iter().enumerate() {
                if m == s {
                    continue;
                }
                let Some(i) = sole_differing_row(v, u) else {
                    continue;
                };
                for j in 0..nj {
                    let coeff = v[(i, j)];
                    if coeff == 0.0 {
                        continue;
                    }
                    problem.add_sparse_row([(var(m, i, j), coeff), (var(s, i, j), -coeff)], Relation::Le, 0.0);
                    rows.push(RowFamily::Misreport {
                        traveler: i,
                        scenario: s,
                        misreport: m,
                        service: j,
                    });
                }
            }
        }

        Self {
            problem,
            rows,
            travelers: ni,
            services: nj,
            scenarios: ns,
        }
    }

    pub fn block(&self, solution: &LpSolution, scenario: usize) -> Assignment {
        let (ni, nj) = (self.travelers, self.services);
        Assignment(Matrix::from_fn(ni, nj, |i, j| {
            solution.x[1 + (scenario * ni + i) * nj + j]
        }))
    }
}

/// The row in which two equally shaped matrices differ, if there is exactly one.
fn sole_differing_row(a: &Matrix, b: &Matrix) -> Option<usize> {
    let mut differing = (0..a.rows()).filter(|&i| a.row(i) != b.row(i));
    let first = differing.next()?;
    differing.next().is_none().then_some(first)
}

/// Offline result of the worst-case program.
#[derive(Debug, Clone, PartialEq)]
pub struct WorstCase {
    pub objective: f64,
    pub v_worst: ValuationProfile,
    pub block_optima: Vec<f64>,
    pub certificate: DualCertificate,
    pub program: EpigraphProgram,
    pub solution: LpSolution,
}

pub fn solve_worst_case(instance: &MarketInstance, options: &MechanismOptions) -> Result<WorstCase, MechanismError> {
    let errors: Vec<Issue> = validate(instance).into_iter().filter(Issue::is_error).collect();
    if !errors.is_empty() {
        return Err(MechanismError::Model(crate::model::ModelError::Invalid(errors)));
    }
    let program = EpigraphProgram::build(instance);
    let solution = solve(&program.problem, options.lp_tolerance)?;
    match solution.status {
        LpStatus::Optimal => {}
        LpStatus::Infeasible => return Err(MechanismError::NoFeasibleNominal),
        LpStatus::Unbounded => return Err(MechanismError::Unbounded("worst-case")),
    }
    if !check_certificate(&program.problem, &solution, CERTIFICATE_TOLERANCE) {
        return Err(MechanismError::CertificateRejected("worst-case"));
    }
    let certificate = extract_duals(&program, &solution, options.lp_tolerance)?;

    let block_optima = (0..instance.scenario_count())
        .map(|s| block_optimum(instance, &instance.scenarios[s], options).map(|(value, _)| value))
        .collect::<Result<Vec<_>, _>>()?;
    let tol = options.absolute(instance);
    let lowest = block_optima.iter().copied().fold(f64::INFINITY, f64::min);
    let worst = block_optima
        .iter()
        .position(|&v| v <= lowest + tol)
        .expect("scenario set is non-empty");

    Ok(WorstCase {
        objective: solution.objective,
        v_worst: instance.scenario(worst),
        block_optima,
        certificate,
        program,
        solution,
    })
}

/// Partitions the worst-case program's dual vector by row family.
pub fn extract_duals(
    program: &EpigraphProgram,
    solution: &LpSolution,
    tol: f64,
) -> Result<DualCertificate, MechanismError> {
    if !solution.is_optimal() || solution.y.len() != program.rows.len() {
        return Err(MechanismError::Precondition(
            "dual extraction needs an optimal solution of the worst-case program".into(),
        ));
    }
    let (ni, nj, ns) = (program.travelers, program.services, program.scenarios);
    let mut cert = DualCertificate {
        xi1: vec![vec![0.0; ni]; ns],
        xi2: vec![vec![0.0; nj]; ns],
        xi3: vec![0.0; ns],
        xi4: Vec::new(),
        xi5: vec![vec![0.0; ni]; ns],
        xi6: vec![vec![0.0; ni]; ns],
    };
    for (row, &y) in program.rows.iter().zip(&solution.y) {
        // All rows are ≤ rows; their duals are nonnegative up to noise.
        let y = if y < 0.0 && y > -tol { 0.0 } else { y };
        match *row {
            RowFamily::Epigraph { scenario } => cert.xi3[scenario] = y,
            RowFamily::ServiceLimit { scenario, traveler } => cert.xi1[scenario][traveler] = y,
            RowFamily::Capacity { scenario, service } => cert.xi2[scenario][service] = y,
            RowFamily::Budget { scenario, traveler } => cert.xi6[scenario][traveler] = y,
            RowFamily::Misreport {
                traveler,
                scenario,
                misreport,
                service,
            } => cert.xi4.push(MisreportDual {
                traveler,
                scenario,
                misreport,
                service,
                value: y,
            }),
        }
    }
    let total: f64 = cert.xi3.iter().sum();
    if (total - 1.0).abs() > CERTIFICATE_TOLERANCE {
        return Err(MechanismError::CertificateRejected("epigraph normalization"));
    }
    Ok(cert)
}

/// A single scenario block over the cells marked in `allowed`.
struct BlockProgram {
    problem: LpProblem,
    cells: Vec<(usize, usize)>,
}

impl BlockProgram {
    fn build(instance: &MarketInstance, values: &Matrix, allowed: impl Fn(usize, usize) -> bool) -> Self {
        let (ni, nj) = (instance.traveler_count(), instance.service_count());
        let cells: Vec<(usize, usize)> = (0..ni)
            .flat_map(|i| (0..nj).map(move |j| (i, j)))
            .filter(|&(i, j)| allowed(i, j))
            .collect();
        let mut problem = LpProblem::with_objective(cells.iter().map(|&(i, j)| values[(i, j)]).collect());
        let pick = |pred: &dyn Fn(usize, usize) -> bool, coeff: &dyn Fn(usize, usize) -> f64| {
            cells
                .iter()
                .enumerate()
                .filter(|&(_, &(i, j))| pred(i, j))
                .map(|(k, &(i, j))| (k, coeff(i, j)))
                .collect::<Vec<_>>()
        };
        // Rows: service limits (0..I), capacities (I..I+J), budgets (I+J..2I+J).
        for t in 0..ni {
            problem.add_sparse_row(
                pick(&|i, _| i == t, &|_, _| 1.0),
                Relation::Le,
                f64::from(instance.service_limits[t]),
            );
        }
        for s in 0..nj {
            problem.add_sparse_row(
                pick(&|_, j| j == s, &|_, _| 1.0),
                Relation::Le,
                f64::from(instance.capacities[s]),
            );
        }
        for t in 0..ni {
            problem.add_sparse_row(
                pick(&|i, _| i == t, &|i, j| values[(i, j)]),
                Relation::Le,
                instance.budgets[t],
            );
        }
        Self { problem, cells }
    }

    fn solve(
        &self,
        instance: &MarketInstance,
        options: &MechanismOptions,
    ) -> Result<(LpSolution, Assignment), MechanismError> {
        let solution = solve(&self.problem, options.lp_tolerance)?;
        match solution.status {
            LpStatus::Optimal => {}
            LpStatus::Infeasible => return Err(MechanismError::NoFeasibleNominal),
            LpStatus::Unbounded => return Err(MechanismError::Unbounded("scenario block")),
        }
        if !check_certificate(&self.problem, &solution, CERTIFICATE_TOLERANCE) {
            return Err(MechanismError::CertificateRejected("scenario block"));
        }
        let mut a = Matrix::zeros(instance.traveler_count(), instance.service_count());
        for (&(i, j), &x) in self.cells.iter().zip(&solution.x) {
            a[(i, j)] = x;
        }
        Ok((solution, Assignment(a)))
    }
}

/// Optimal welfare of one scenario block solved on its own.
pub fn block_optimum(
    instance: &MarketInstance,
    values: &Matrix,
    options: &MechanismOptions,
) -> Result<(f64, Assignment), MechanismError> {
    let (solution, a) = BlockProgram::build(instance, values, |_, _| true).solve(instance, options)?;
    Ok((solution.objective, a))
}

/// Nominal assignment with the duals its reservation payments are read from.
#[derive(Debug, Clone, PartialEq)]
pub struct Nominal {
    pub assignment: Assignment,
    pub objective: f64,
    pub duals: ScenarioDuals,
    /// Cells the nominal program may use.
    pub robust_cells: Vec<Vec<bool>>,
}

pub fn compute_nominal(
    instance: &MarketInstance,
    v_worst: &ValuationProfile,
    options: &MechanismOptions,
) -> Result<Nominal, MechanismError> {
    let (ni, nj) = (instance.traveler_count(), instance.service_count());
    let w = &v_worst.values;
    if w.shape() != (ni, nj) {
        return Err(MechanismError::Precondition(format!(
            "worst-case profile is {}x{}, instance is {ni}x{nj}",
            w.rows(),
            w.cols()
        )));
    }
    let robust_cells: Vec<Vec<bool>> = (0..ni)
        .map(|i| {
            (0..nj)
                .map(|j| instance.scenarios.iter().all(|u| w[(i, j)] <= u[(i, j)]))
                .collect()
        })
        .collect();
    let program = BlockProgram::build(instance, w, |i, j| robust_cells[i][j]);
    let (solution, assignment) = program.solve(instance, options)?;

    let tol = options.lp_tolerance;
    let dual = |k: usize| {
        let y = solution.y[k];
        if y < 0.0 && y > -tol {
            0.0
        } else {
            y
        }
    };
    let duals = ScenarioDuals {
        xi1: (0..ni).map(dual).collect(),
        xi2: (0..nj).map(|j| dual(ni + j)).collect(),
        xi3: 1.0,
        xi5: vec![0.0; ni],
        xi6: (0..ni).map(|i| dual(ni + nj + i)).collect(),
    };
    Ok(Nominal {
        objective: solution.objective,
        assignment,
        duals,
        robust_cells,
    })
}
