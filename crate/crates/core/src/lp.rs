//! Dense two-phase simplex with Bland's rule, for the small LPs used by the
//! feasibility, MFCQ and face-enumeration routines.
//!
//! Problem form: maximize `cᵀx` subject to `A_ub x ≤ b_ub`, `A_eq x = b_eq`, `x` free.

use nalgebra::{DMatrix, DVector};

use crate::scalar::Real;

#[derive(Debug, Clone, PartialEq)]
pub enum LpStatus<T: Real> {
    Optimal { x: DVector<T>, value: T },
    Infeasible,
    Unbounded,
}

impl<T: Real> LpStatus<T> {
    pub fn optimal(&self) -> Option<(&DVector<T>, T)> {
        match self {
            LpStatus::Optimal { x, value } => Some((x, *value)),
            _ => None,
        }
    }
}

struct Tableau<T: Real> {
    /// rows × (cols + 1); last column is the rhs
    t: DMatrix<T>,
    basis: Vec<usize>,
    tol: T,
}

impl<T: Real> Tableau<T> {
    fn pivot(&mut self, r: usize, c: usize) {
        let ncol = self.t.ncols();
        let pv = self.t[(r, c)];
        for j in 0..ncol {
            self.t[(r, j)] /= pv;
        }
        for i in 0..self.t.nrows() {
            if i != r {
                let f = self.t[(i, c)];
                if f != T::zero() {
                    for j in 0..ncol {
                        let v = self.t[(r, j)];
                        self.t[(i, j)] -= f * v;
                    }
                }
            }
        }
        self.basis[r] = c;
    }

    /// Minimize `cost·y` over the current tableau, only entering columns `< allowed`.
    /// Returns false when unbounded.
    fn run(&mut self, cost: &[T], allowed: usize) -> bool {
        let m = self.t.nrows();
        let rhs = self.t.ncols() - 1;
        for _ in 0..10_000 {
            // reduced costs
            let mut enter = None;
            for j in 0..allowed {
                if self.basis.contains(&j) {
                    continue;
                }
                let mut rc = cost[j];
                for i in 0..m {
                    rc -= cost[self.basis[i]] * self.t[(i, j)];
                }
                if rc < -self.tol {
                    enter = Some(j);
                    break;
                }
            }
            let Some(c) = enter else { return true };
            let mut leave: Option<(usize, T)> = None;
            for i in 0..m {
                let a = self.t[(i, c)];
                if a > self.tol {
                    let ratio = self.t[(i, rhs)] / a;
                    match leave {
                        None => leave = Some((i, ratio)),
                        Some((li, lr)) => {
                            if ratio < lr - self.tol
                                || (ratio <= lr + self.tol && self.basis[i] < self.basis[li])
                            {
                                leave = Some((i, ratio));
                            }
                        }
                    }
                }
            }
            let Some((r, _)) = leave else { return false };
            self.pivot(r, c);
        }
        true
    }
}

/// Solve the LP.
pub fn maximize<T: Real>(
    c: &DVector<T>,
    a_ub: &DMatrix<T>,
    b_ub: &DVector<T>,
    a_eq: &DMatrix<T>,
    b_eq: &DVector<T>,
) -> LpStatus<T> {
    let n = c.len();
    let mu = a_ub.nrows();
    let me = a_eq.nrows();
    let m = mu + me;
    // variables: x+ (n), x- (n), slacks (mu), artificials (m)
    let nv = 2 * n + mu;
    let ncol = nv + m;
    let mut t = DMatrix::zeros(m, ncol + 1);
    let scale = T::one() + a_ub.amax().max(a_eq.amax()) + b_ub.amax().max(b_eq.amax());
    let tol = T::tol(1e-11) * scale;
    for i in 0..m {
        let (row, rhs) = if i < mu { (a_ub.row(i).transpose(), b_ub[i]) } else { (a_eq.row(i - mu).transpose(), b_eq[i - mu]) };
        let sgn = if rhs < T::zero() { -T::one() } else { T::one() };
        for j in 0..n {
            t[(i, j)] = row[j] * sgn;
            t[(i, n + j)] = -row[j] * sgn;
        }
        if i < mu {
            t[(i, 2 * n + i)] = sgn;
        }
        t[(i, nv + i)] = T::one();
        t[(i, ncol)] = rhs * sgn;
    }
    let mut tab = Tableau { t, basis: (nv..nv + m).collect(), tol };
    let mut cost1 = vec![T::zero(); ncol];
    for c1 in cost1.iter_mut().skip(nv) {
        *c1 = T::one();
    }
    tab.run(&cost1, ncol);
    let infeas: T = (0..m).map(|i| if tab.basis[i] >= nv { tab.t[(i, ncol)] } else { T::zero() }).fold(T::zero(), |a, b| a + b);
    if infeas > tol * T::lit(10.0) {
        return LpStatus::Infeasible;
    }
    // drive artificials out of the basis
    for i in 0..m {
        if tab.basis[i] >= nv {
            if let Some(j) = (0..nv).find(|&j| tab.t[(i, j)].abs() > tol && !tab.basis.contains(&j)) {
                tab.pivot(i, j);
            }
        }
    }
    let mut cost2 = vec![T::zero(); ncol];
    for j in 0..n {
        cost2[j] = -c[j];
        cost2[n + j] = c[j];
    }
    // artificial columns stay out: forbid entering them; redundant rows keep their artificial at 0
    if !tab.run(&cost2, nv) {
        return LpStatus::Unbounded;
    }
    let mut y = vec![T::zero(); ncol];
    for i in 0..m {
        y[tab.basis[i]] = tab.t[(i, ncol)];
    }
    let x = DVector::from_iterator(n, (0..n).map(|j| y[j] - y[n + j]));
    let value = c.dot(&x);
    LpStatus::Optimal { x, value }
}

/// Feasibility of `{x : A x ≤ b, E x = e}`; returns a feasible point.
pub fn feasible_point<T: Real>(
    a_ub: &DMatrix<T>,
    b_ub: &DVector<T>,
    a_eq: &DMatrix<T>,
    b_eq: &DVector<T>,
    n: usize,
) -> Option<DVector<T>> {
    match maximize(&DVector::zeros(n), a_ub, b_ub, a_eq, b_eq) {
        LpStatus::Optimal { x, .. } => Some(x),
        _ => None,
    }
}
