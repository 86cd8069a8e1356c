//! The active-set solver against brute-force grid maximisation on small
//! random concave programs over a box with coupling rows.

use nalgebra::{DMatrix, DVector};
use peakload::program::QuadraticProgram;
use peakload::solver::kkt_residuals;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Case {
    q: DMatrix<f64>,
    c: DVector<f64>,
    a: DMatrix<f64>,
    b: DVector<f64>,
}

impl Case {
    fn random(rng: &mut ChaCha8Rng) -> Self {
        let n = rng.random_range(2..=3);
        let m = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
        let q = -(m.transpose() * &m + DMatrix::identity(n, n) * 0.1);
        let c = DVector::from_fn(n, |_, _| rng.random_range(-2.0..4.0));
        let couplings = rng.random_range(1..=2);
        // box rows x_j ≤ u_j and −x_j ≤ 0, then coupling rows with
        // non-negative weights so the origin is feasible
        let rows = 2 * n + couplings;
        let mut a = DMatrix::zeros(rows, n);
        let mut b = DVector::zeros(rows);
        for j in 0..n {
            a[(j, j)] = 1.0;
            b[j] = rng.random_range(0.5..3.0);
            a[(n + j, j)] = -1.0;
        }
        for r in 2 * n..rows {
            for j in 0..n {
                a[(r, j)] = rng.random_range(0.0..1.0);
            }
            b[r] = rng.random_range(0.5..2.0);
        }
        Self { q, c, a, b }
    }

    fn value(&self, x: &DVector<f64>) -> f64 {
        0.5 * x.dot(&(&self.q * x)) + self.c.dot(x)
    }

    fn feasible(&self, x: &DVector<f64>) -> bool {
        (&self.a * x - &self.b).iter().all(|v| *v <= 1e-12)
    }

    fn upper(&self) -> Vec<f64> {
        (0..self.c.len()).map(|j| self.b[j]).collect()
    }

    /// Grid maximisation with repeated refinement around the incumbent. The
    /// window keeps four steps either side so an optimum on a slanted face
    /// stays inside it.
    fn grid_max(&self) -> f64 {
        let n = self.c.len();
        let points: usize = 41;
        let mut lo = vec![0.0; n];
        let mut step: Vec<f64> = self.upper().iter().map(|u| u / (points - 1) as f64).collect();
        let mut best = f64::NEG_INFINITY;
        let mut best_x = DVector::zeros(n);
        for _ in 0..8 {
            let total = points.pow(n as u32);
            for idx in 0..total {
                let mut k = idx;
                let x = DVector::from_fn(n, |j, _| {
                    let v = lo[j] + step[j] * (k % points) as f64;
                    k /= points;
                    v
                });
                if x.iter().all(|v| *v >= 0.0) && self.feasible(&x) {
                    let v = self.value(&x);
                    if v > best {
                        best = v;
                        best_x = x;
                    }
                }
            }
            for j in 0..n {
                lo[j] = best_x[j] - 4.0 * step[j];
                step[j] *= 8.0 / (points - 1) as f64;
            }
        }
        best
    }
}

#[test]
fn solver_matches_grid_on_random_programs() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for case_no in 0..40 {
        let case = Case::random(&mut rng);
        let qp = QuadraticProgram::from_dense(
            case.q.clone(),
            case.c.clone(),
            None,
            Some((case.a.clone(), case.b.clone())),
        )
        .unwrap();
        let sol = peakload::solve(&qp).unwrap();
        assert!(
            qp.max_violation(&sol.x).unwrap() <= 1e-9,
            "case {case_no}: infeasible {:?}",
            sol.x
        );
        let grid = case.grid_max();
        let scale = 1.0 + grid.abs();
        assert!(
            sol.objective >= grid - 1e-9 * scale,
            "case {case_no}: solver {} below grid {grid}",
            sol.objective
        );
        // an optimum on an edge of the polytope is only approached to grid
        // resolution, so the two-sided comparison is relative at 1e-3
        assert!(
            sol.objective - grid <= 1e-3 * scale,
            "case {case_no}: solver {} vs grid {grid}",
            sol.objective
        );
        let kkt = kkt_residuals(&qp, &sol).unwrap();
        assert!(
            kkt.max_stationarity <= 1e-9 && kkt.max_complementarity <= 1e-9,
            "case {case_no}: {kkt:?}"
        );
    }
}

#[test]
fn unconstrained_interior_optimum_is_exact() {
    // −(x−1)² − 2(y+0.5)² + const; the box keeps y ≥ 0
    let qp = QuadraticProgram::from_dense(
        DMatrix::from_row_slice(2, 2, &[-2.0, 0.0, 0.0, -4.0]),
        DVector::from_row_slice(&[2.0, -2.0]),
        None,
        Some((
            DMatrix::from_row_slice(2, 2, &[-1.0, 0.0, 0.0, -1.0]),
            DVector::zeros(2),
        )),
    )
    .unwrap();
    let sol = peakload::solve(&qp).unwrap();
    assert!((sol.x[0] - 1.0).abs() < 1e-12 && sol.x[1].abs() < 1e-12);
    // y ≥ 0 binds with multiplier equal to the slope there
    assert!((sol.duals[1] - 2.0).abs() < 1e-12);
}
