//! Dense primal active-set method for small concave quadratic programs.
//!
//! Each iteration solves the equality-constrained subproblem on the current
//! working set through a null-space factorisation: a Householder QR of the
//! working-set normals gives an orthonormal basis `Z` of their null space,
//! and the reduced Hessian `ZᵀGZ` is diagonalised. Directions of zero reduced
//! curvature along which the objective still improves are followed as rays
//! until a constraint blocks; otherwise the Newton step on the positive
//! curvature subspace is taken. Multipliers come from the same QR factors.

mod kkt;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use kkt::{kkt_residuals, KktReport, StationarityEntry, StorageConditions};

use crate::program::{QuadraticProgram, Sense};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SolveError {
    #[error(
        "iteration limit {iterations} reached without convergence (possible cycling); last working set {working_set:?}"
    )]
    IterationLimit { iterations: usize, working_set: Vec<usize> },

    #[error("objective is unbounded along a feasible ray after {iterations} iterations; working set {working_set:?}")]
    Unbounded { iterations: usize, working_set: Vec<usize> },

    #[error("starting point violates row {row} by {violation:e}")]
    Infeasible { row: usize, violation: f64 },

    #[error("starting point has {actual} entries, program has {expected} variables")]
    BadStart { expected: usize, actual: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverOptions {
    /// Maximum row violation accepted at the start and at the solution.
    pub feasibility_tol: f64,
    pub stationarity_tol: f64,
    pub complementarity_tol: f64,
    /// Defaults to ten times the number of rows.
    pub max_iterations: Option<usize>,
    /// Feasible starting point; the origin when absent.
    pub start: Option<Vec<f64>>,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            feasibility_tol: 1e-8,
            stationarity_tol: 1e-7,
            complementarity_tol: 1e-7,
            max_iterations: None,
            start: None,
        }
    }
}

/// Optimal point together with one multiplier per constraint row.
///
/// Multipliers follow the Lagrangian `L = f − Σ yᵢ (aᵢx − bᵢ)` of the
/// maximisation, so duals of `≤` rows are non-negative and the gradient of
/// the objective equals `Aᵀy` at the optimum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrimalDualSolution {
    pub x: Vec<f64>,
    pub duals: Vec<f64>,
    pub objective: f64,
    /// Rows of the final working set, ascending.
    pub active_set: Vec<usize>,
    pub iterations: usize,
    /// Objective after every accepted step, starting at the initial point.
    pub objective_trace: Vec<f64>,
}

impl PrimalDualSolution {
    pub fn value(&self, column: usize) -> f64 {
        self.x[column]
    }

    pub fn dual(&self, row: usize) -> f64 {
        self.duals[row]
    }
}

const CURVATURE_TOL: f64 = 1e-10;
const RAY_TOL: f64 = 1e-10;
const STEP_TOL: f64 = 1e-12;
const DUAL_TOL: f64 = 1e-11;
const DIRECTION_TOL: f64 = 1e-12;

pub fn solve(qp: &QuadraticProgram) -> Result<PrimalDualSolution, SolveError> {
    solve_with(qp, &SolverOptions::default())
}

pub fn solve_with(qp: &QuadraticProgram, opts: &SolverOptions) -> Result<PrimalDualSolution, SolveError> {
    let n = qp.num_variables();
    let m = qp.num_rows();
    // minimisation form: ½xᵀGx + gᵀx
    let hess = -&qp.quadratic;
    let lin = -&qp.linear;
    let hess_scale = hess.amax().max(1.0);

    let mut x = match &opts.start {
        Some(s) if s.len() != n => {
            return Err(SolveError::BadStart {
                expected: n,
                actual: s.len(),
            })
        }
        Some(s) => DVector::from_column_slice(s),
        None => DVector::zeros(n),
    };
    let residual = &qp.constraints * &x - &qp.rhs;
    for row in &qp.rows {
        let v = match row.sense {
            Sense::Equal => residual[row.row].abs(),
            Sense::LessEqual => residual[row.row],
        };
        if v > opts.feasibility_tol {
            return Err(SolveError::Infeasible {
                row: row.row,
                violation: v,
            });
        }
    }

    let is_equality: Vec<bool> = qp.rows.iter().map(|r| r.sense == Sense::Equal).collect();
    let row_norms: Vec<f64> = (0..m).map(|i| qp.constraints.row(i).norm()).collect();
    let mut working: Vec<usize> = (0..m).filter(|&i| is_equality[i]).collect();
    let mut in_working = vec![false; m];
    for &i in &working {
        in_working[i] = true;
    }

    let objective = |x: &DVector<f64>| -(0.5 * x.dot(&(&hess * x)) + lin.dot(x));
    let mut trace = vec![objective(&x)];
    let cap = opts.max_iterations.unwrap_or(10 * m.max(1));

    for iter in 0..cap {
        let grad = &hess * &x + &lin;
        let grad_scale = grad.amax().max(1.0);
        let basis = WorkingBasis::new(&qp.constraints, &working, n);
        let direction = basis.direction(&hess, &grad, hess_scale, grad_scale);

        let (p, is_ray) = match direction {
            Direction::Ray(p) => (p, true),
            Direction::Newton(p) if p.amax() > STEP_TOL * (1.0 + x.amax()) => (p, false),
            Direction::Newton(_) => {
                let y = basis.multipliers(&grad);
                let leaving = working
                    .iter()
                    .zip(y.iter())
                    .filter(|(&row, &yi)| !is_equality[row] && yi < -DUAL_TOL * grad_scale)
                    .min_by(|a, b| a.1.total_cmp(b.1).then(a.0.cmp(b.0)))
                    .map(|(&row, _)| row);
                match leaving {
                    Some(row) => {
                        log::trace!("iter {iter}: row {row} ({}) leaves the working set", qp.rows[row].name);
                        working.retain(|&r| r != row);
                        in_working[row] = false;
                        continue;
                    }
                    None => {
                        log::debug!(
                            "active-set converged after {iter} iterations, {} rows in working set",
                            working.len()
                        );
                        return Ok(finish(qp, &hess, &lin, x, working, iter, trace));
                    }
                }
            }
        };

        // ratio test; exact ties go to the smallest row index
        let p_norm = p.norm();
        let mut step = if is_ray { f64::INFINITY } else { 1.0 };
        let mut blocking = None;
        for i in 0..m {
            if in_working[i] || is_equality[i] {
                continue;
            }
            let ap = qp.constraints.row(i).transpose().dot(&p);
            if ap <= DIRECTION_TOL * row_norms[i] * p_norm {
                continue;
            }
            let slack = (qp.rhs[i] - qp.constraints.row(i).transpose().dot(&x)).max(0.0);
            let alpha = slack / ap;
            if alpha < step {
                step = alpha;
                blocking = Some(i);
            }
        }
        if is_ray && blocking.is_none() {
            working.sort_unstable();
            return Err(SolveError::Unbounded {
                iterations: iter,
                working_set: working,
            });
        }
        x += step * &p;
        trace.push(objective(&x));
        if let Some(row) = blocking {
            log::trace!("iter {iter}: step {step:e}, row {row} ({}) enters", qp.rows[row].name);
            working.push(row);
            in_working[row] = true;
        } else {
            log::trace!("iter {iter}: full Newton step");
        }
    }
    working.sort_unstable();
    Err(SolveError::IterationLimit {
        iterations: cap,
        working_set: working,
    })
}

fn finish(
    qp: &QuadraticProgram,
    hess: &DMatrix<f64>,
    lin: &DVector<f64>,
    mut x: DVector<f64>,
    mut working: Vec<usize>,
    iterations: usize,
    mut trace: Vec<f64>,
) -> PrimalDualSolution {
    let n = qp.num_variables();
    let basis = WorkingBasis::new(&qp.constraints, &working, n);
    // remove rounding drift off the working-set rows
    let residual = DVector::from_iterator(
        working.len(),
        working
            .iter()
            .map(|&r| qp.rhs[r] - qp.constraints.row(r).transpose().dot(&x)),
    );
    x += basis.min_norm_correction(&residual);
    let grad = hess * &x + lin;
    let y = basis.multipliers(&grad);

    let mut duals = vec![0.0; qp.num_rows()];
    for (&row, &yi) in working.iter().zip(y.iter()) {
        duals[row] = match qp.rows[row].sense {
            Sense::Equal => yi,
            Sense::LessEqual => yi.max(0.0),
        };
    }
    working.sort_unstable();
    let objective = -(0.5 * x.dot(&(hess * &x)) + lin.dot(&x));
    trace.push(objective);
    PrimalDualSolution {
        x: x.as_slice().to_vec(),
        duals,
        objective,
        active_set: working,
        iterations,
        objective_trace: trace,
    }
}

enum Direction {
    Newton(DVector<f64>),
    Ray(DVector<f64>),
}

/// Orthogonal factorisation of the working-set normals:
/// `[A_Wᵀ | 0] = Q R`, with `Q = [Q₁ | Z]`.
struct WorkingBasis {
    range: DMatrix<f64>,
    r: DMatrix<f64>,
    null: DMatrix<f64>,
}

impl WorkingBasis {
    fn new(constraints: &DMatrix<f64>, working: &[usize], n: usize) -> Self {
        let k = working.len();
        let mut padded = DMatrix::zeros(n, n);
        for (j, &row) in working.iter().enumerate() {
            padded.set_column(j, &constraints.row(row).transpose());
        }
        let qr = padded.qr();
        let q = qr.q();
        let r = qr.r();
        Self {
            range: q.columns(0, k).into_owned(),
            r: r.view((0, 0), (k, k)).into_owned(),
            null: q.columns(k, n - k).into_owned(),
        }
    }

    fn direction(&self, hess: &DMatrix<f64>, grad: &DVector<f64>, hess_scale: f64, grad_scale: f64) -> Direction {
        let n = grad.len();
        if self.null.ncols() == 0 {
            return Direction::Newton(DVector::zeros(n));
        }
        let z = &self.null;
        let reduced_grad = z.transpose() * grad;
        let reduced_hess = z.transpose() * hess * z;
        let reduced_hess = 0.5 * (&reduced_hess + reduced_hess.transpose());
        let eig = SymmetricEigen::new(reduced_hess);

        let mut ray = DVector::zeros(z.ncols());
        let mut newton = DVector::zeros(z.ncols());
        for (j, &lambda) in eig.eigenvalues.iter().enumerate() {
            let v = eig.eigenvectors.column(j);
            let proj = v.dot(&reduced_grad);
            if lambda <= CURVATURE_TOL * hess_scale {
                if proj.abs() > RAY_TOL * grad_scale {
                    ray -= proj * v;
                }
            } else {
                newton -= (proj / lambda) * v;
            }
        }
        if ray.amax() > 0.0 {
            let p = z * ray;
            let norm = p.norm();
            Direction::Ray(p / norm)
        } else {
            Direction::Newton(z * newton)
        }
    }

    /// Solves `A_Wᵀ y = −grad` (the maximisation-form `∇f = A_Wᵀ y`) in the
    /// least-squares sense.
    fn multipliers(&self, grad: &DVector<f64>) -> DVector<f64> {
        let k = self.r.ncols();
        if k == 0 {
            return DVector::zeros(0);
        }
        let rhs = -(self.range.transpose() * grad);
        self.r.solve_upper_triangular(&rhs).unwrap_or_else(|| DVector::zeros(k))
    }

    /// Smallest `δ` with `A_W δ = residual`.
    fn min_norm_correction(&self, residual: &DVector<f64>) -> DVector<f64> {
        let k = self.r.ncols();
        if k == 0 {
            return DVector::zeros(self.range.nrows());
        }
        // A_W = Rᵀ Q₁ᵀ, so δ = Q₁ R⁻ᵀ residual
        match self.r.transpose().solve_lower_triangular(residual) {
            Some(w) => &self.range * w,
            None => DVector::zeros(self.range.nrows()),
        }
    }
}
