//! Two-phase primal simplex over the standard form
//! `minimize cᵀx subject to A x = b, x >= 0`, with Bland's anti-cycling rule.
//!
//! Dense tableau; sized for the few dozen columns the code search produces.

use crate::scalar::LpScalar;

const MAX_PIVOTS: usize = 100_000;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
    IterationLimit,
}

#[derive(Clone, Debug)]
pub struct LpSolution<T> {
    pub status: LpStatus,
    /// Primal point, present for `Optimal`.
    pub x: Option<Vec<T>>,
    /// Phase-one objective (sum of artificials) at termination of phase one.
    pub infeasibility: T,
    pub pivots: usize,
}

impl<T> LpSolution<T> {
    pub fn is_feasible(&self) -> bool {
        matches!(self.status, LpStatus::Optimal | LpStatus::Unbounded)
    }
}

struct Tableau<T> {
    /// m constraint rows followed by one objective row, each of length `width + 1` (last = rhs).
    rows: Vec<Vec<T>>,
    basis: Vec<usize>,
    width: usize,
    pivots: usize,
}

impl<T: LpScalar> Tableau<T> {
    fn m(&self) -> usize {
        self.basis.len()
    }

    fn pivot(&mut self, r: usize, col: usize) {
        let p = self.rows[r][col].clone();
        for v in self.rows[r].iter_mut() {
            *v = v.clone() / p.clone();
        }
        let pivot_row = self.rows[r].clone();
        for (i, row) in self.rows.iter_mut().enumerate() {
            if i == r {
                continue;
            }
            let f = row[col].clone();
            if f.is_zero() {
                continue;
            }
            for (v, pv) in row.iter_mut().zip(&pivot_row) {
                if !pv.is_zero() {
                    *v = v.clone() - f.clone() * pv.clone();
                }
            }
        }
        self.basis[r] = col;
        self.pivots += 1;
    }

    /// Runs simplex iterations on the current objective row over columns `allowed`.
    /// Returns false when the objective is unbounded below.
    fn optimize(&mut self, allowed: &dyn Fn(usize) -> bool) -> Option<bool> {
        let tol = T::pivot_tolerance();
        let m = self.m();
        loop {
            if self.pivots >= MAX_PIVOTS {
                return None;
            }
            let obj = &self.rows[m];
            // Bland: lowest-index column with negative reduced cost.
            let entering = (0..self.width).find(|&j| allowed(j) && obj[j] < -tol.clone());
            let Some(col) = entering else {
                return Some(true);
            };
            let mut best: Option<(usize, T)> = None;
            for i in 0..m {
                let a = &self.rows[i][col];
                if *a > tol {
                    let ratio = self.rows[i][self.width].clone() / a.clone();
                    best = match best {
                        None => Some((i, ratio)),
                        Some((bi, br)) => {
                            if ratio < br || (ratio == br && self.basis[i] < self.basis[bi]) {
                                Some((i, ratio))
                            } else {
                                Some((bi, br))
                            }
                        }
                    };
                }
            }
            match best {
                Some((r, _)) => self.pivot(r, col),
                None => return Some(false),
            }
        }
    }
}

/// Solves `min cᵀx, A x = b, x >= 0`. A missing cost vector means pure feasibility.
pub fn solve_standard_form<T: LpScalar>(a: &[Vec<T>], b: &[T], cost: Option<&[T]>) -> LpSolution<T> {
    let m = a.len();
    let n = a.first().map_or(cost.map_or(0, <[T]>::len), Vec::len);
    assert_eq!(b.len(), m, "rhs length must equal the number of rows");
    assert!(a.iter().all(|r| r.len() == n), "ragged constraint matrix");
    let width = n + m;

    let mut rows = Vec::with_capacity(m + 1);
    for (row, bi) in a.iter().zip(b) {
        let flip = *bi < T::zero();
        let mut r = Vec::with_capacity(width + 1);
        for v in row {
            r.push(if flip { -v.clone() } else { v.clone() });
        }
        r.extend(std::iter::repeat(T::zero()).take(m));
        r.push(if flip { -bi.clone() } else { bi.clone() });
        rows.push(r);
    }
    for (i, r) in rows.iter_mut().enumerate() {
        r[n + i] = T::one();
    }
    // phase-one objective: minimize Σ artificials, expressed in nonbasic terms
    let mut obj = vec![T::zero(); width + 1];
    for r in &rows {
        for j in 0..n {
            obj[j] = obj[j].clone() - r[j].clone();
        }
        obj[width] = obj[width].clone() - r[width].clone();
    }
    rows.push(obj);

    let mut t = Tableau {
        rows,
        basis: (n..n + m).collect(),
        width,
        pivots: 0,
    };

    let Some(_) = t.optimize(&|_| true) else {
        return LpSolution {
            status: LpStatus::IterationLimit,
            x: None,
            infeasibility: -t.rows[m][width].clone(),
            pivots: t.pivots,
        };
    };
    let infeasibility = -t.rows[t.m()][width].clone();
    if infeasibility > T::feasibility_tolerance() {
        return LpSolution {
            status: LpStatus::Infeasible,
            x: None,
            infeasibility,
            pivots: t.pivots,
        };
    }

    // Drive artificials out of the basis; rows where that is impossible are redundant.
    let tol = T::pivot_tolerance();
    let mut i = 0;
    while i < t.m() {
        if t.basis[i] >= n {
            if let Some(col) = (0..n).find(|&j| t.rows[i][j].abs() > tol) {
                t.pivot(i, col);
            } else {
                t.rows.remove(i);
                t.basis.remove(i);
                continue;
            }
        }
        i += 1;
    }

    // phase two
    let m2 = t.m();
    let mut obj = vec![T::zero(); width + 1];
    if let Some(c) = cost {
        for (j, cj) in c.iter().enumerate() {
            obj[j] = cj.clone();
        }
        for (r, &bj) in t.basis.iter().enumerate() {
            let cb = obj[bj].clone();
            if cb.is_zero() {
                continue;
            }
            for k in 0..=width {
                obj[k] = obj[k].clone() - cb.clone() * t.rows[r][k].clone();
            }
        }
    }
    t.rows[m2] = obj;
    let outcome = t.optimize(&|j| j < n);

    let mut x = vec![T::zero(); n];
    for (r, &bj) in t.basis.iter().enumerate() {
        if bj < n {
            x[bj] = t.rows[r][width].clone();
        }
    }
    let status = match outcome {
        None => LpStatus::IterationLimit,
        Some(true) => LpStatus::Optimal,
        Some(false) => LpStatus::Unbounded,
    };
    LpSolution {
        x: if status == LpStatus::Optimal { Some(x) } else { None },
        status,
        infeasibility,
        pivots: t.pivots,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_bigint::BigInt;
    use num_rational::BigRational;

    fn q(n: i64, d: i64) -> BigRational {
        BigRational::new(BigInt::from(n), BigInt::from(d))
    }

    #[test]
    fn simple_feasible_system() {
        // x + y = 1, x - y = 0
        let a: Vec<Vec<f64>> = vec![vec![1.0, 1.0], vec![1.0, -1.0]];
        let s = solve_standard_form(&a, &[1.0, 0.0], None);
        assert_eq!(s.status, LpStatus::Optimal);
        let x = s.x.unwrap();
        assert!((x[0] - 0.5).abs() < 1e-12 && (x[1] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn infeasible_nonnegativity() {
        // x + y = 1, x + y = 2
        let a = vec![vec![1.0, 1.0], vec![1.0, 1.0]];
        assert_eq!(solve_standard_form(&a, &[1.0, 2.0], None).status, LpStatus::Infeasible);
        // x = -1
        assert_eq!(solve_standard_form(&[vec![1.0]], &[-1.0], None).status, LpStatus::Infeasible);
    }

    #[test]
    fn redundant_rows_are_tolerated() {
        let a = vec![vec![1.0, 1.0, 1.0], vec![2.0, 2.0, 2.0], vec![1.0, 0.0, -1.0]];
        let s = solve_standard_form(&a, &[1.0, 2.0, 0.0], None);
        assert_eq!(s.status, LpStatus::Optimal);
    }

    #[test]
    fn phase_two_minimizes() {
        // min -x - 2y, x + y + s = 4, x + 3y + t = 6
        let a: Vec<Vec<f64>> = vec![vec![1.0, 1.0, 1.0, 0.0], vec![1.0, 3.0, 0.0, 1.0]];
        let s = solve_standard_form(&a, &[4.0, 6.0], Some(&[-1.0, -2.0, 0.0, 0.0]));
        let x = s.x.unwrap();
        assert!((x[0] - 3.0).abs() < 1e-12 && (x[1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn unbounded_detected() {
        // min -x, x - y = 0
        let s = solve_standard_form(&[vec![1.0, -1.0]], &[0.0], Some(&[-1.0, 0.0]));
        assert_eq!(s.status, LpStatus::Unbounded);
    }

    #[test]
    fn exact_rational_solve() {
        // a + b + c = 1, 2a - b - c = 1/5
        let a = vec![
            vec![q(1, 1), q(1, 1), q(1, 1)],
            vec![q(2, 1), q(-1, 1), q(-1, 1)],
        ];
        let s = solve_standard_form(&a, &[q(1, 1), q(1, 5)], None);
        assert_eq!(s.status, LpStatus::Optimal);
        let x = s.x.unwrap();
        assert_eq!(x[0].clone(), q(2, 5));
        assert_eq!(x[1].clone() + x[2].clone(), q(3, 5));
    }

    #[test]
    fn degenerate_cycling_example_terminates() {
        // Beale's classic cycling instance in equality form with slacks.
        let a = vec![
            vec![0.25, -8.0, -1.0, 9.0, 1.0, 0.0, 0.0],
            vec![0.5, -12.0, -0.5, 3.0, 0.0, 1.0, 0.0],
            vec![0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0],
        ];
        let c = [-0.75, 20.0, -0.5, 6.0, 0.0, 0.0, 0.0];
        let s = solve_standard_form(&a, &[0.0, 0.0, 1.0], Some(&c));
        assert_eq!(s.status, LpStatus::Optimal);
        let x = s.x.unwrap();
        let obj: f64 = x.iter().zip(c).map(|(a, b)| a * b).sum();
        assert!((obj + 1.25).abs() < 1e-9);
    }
}
