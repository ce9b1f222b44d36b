//! Exact two-phase simplex over arbitrary-precision rationals (Bland's rule).

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Cmp {
    Le,
    Ge,
    Eq,
}

/// `maximize objective·x` subject to `rows` and `x ≥ 0`.
#[derive(Clone, Debug, Default)]
pub struct LinearProgram {
    pub num_vars: usize,
    pub rows: Vec<(Vec<BigRational>, Cmp, BigRational)>,
    pub objective: Vec<BigRational>,
}

#[derive(Clone, Debug, PartialEq)]
pub enum LpOutcome {
    Optimal {
        x: Vec<BigRational>,
        value: BigRational,
    },
    Infeasible,
    Unbounded,
}

pub fn rat(n: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(n))
}

impl LinearProgram {
    pub fn new(num_vars: usize) -> LinearProgram {
        LinearProgram {
            num_vars,
            rows: Vec::new(),
            objective: vec![BigRational::zero(); num_vars],
        }
    }

    /// Add `Σ coeffs[j]·x_j cmp rhs` from sparse integer coefficients.
    pub fn add_row(&mut self, coeffs: &[(usize, i64)], cmp: Cmp, rhs: i64) {
        let mut row = vec![BigRational::zero(); self.num_vars];
        for &(j, c) in coeffs {
            row[j] += rat(c);
        }
        self.rows.push((row, cmp, rat(rhs)));
    }

    pub fn solve(&self) -> LpOutcome {
        Tableau::build(self).run(self)
    }
}

struct Tableau {
    /// `m` rows of `cols + 1` entries; the last entry is the right-hand side.
    t: Vec<Vec<BigRational>>,
    basis: Vec<usize>,
    cols: usize,
    first_artificial: usize,
}

impl Tableau {
    fn build(lp: &LinearProgram) -> Tableau {
        let n = lp.num_vars;
        let m = lp.rows.len();
        let slacks = lp.rows.iter().filter(|r| r.1 != Cmp::Eq).count();
        let first_artificial = n + slacks;
        let cols = first_artificial + m;
        let mut t = Vec::with_capacity(m);
        let mut basis = Vec::with_capacity(m);
        let mut slack = n;
        for (i, (coeffs, cmp, rhs)) in lp.rows.iter().enumerate() {
            let mut row = vec![BigRational::zero(); cols + 1];
            let flip = rhs.is_negative();
            let sign = if flip {
                -BigRational::one()
            } else {
                BigRational::one()
            };
            for (j, c) in coeffs.iter().enumerate() {
                row[j] = c * &sign;
            }
            row[cols] = rhs * &sign;
            match cmp {
                Cmp::Le => {
                    row[slack] = sign.clone();
                    slack += 1;
                }
                Cmp::Ge => {
                    row[slack] = -sign.clone();
                    slack += 1;
                }
                Cmp::Eq => {}
            }
            row[first_artificial + i] = BigRational::one();
            basis.push(first_artificial + i);
            t.push(row);
        }
        Tableau {
            t,
            basis,
            cols,
            first_artificial,
        }
    }

    fn pivot(&mut self, r: usize, c: usize) {
        let p = self.t[r][c].clone();
        for x in self.t[r].iter_mut() {
            *x /= &p;
        }
        let pivot_row = self.t[r].clone();
        for (i, row) in self.t.iter_mut().enumerate() {
            if i == r || row[c].is_zero() {
                continue;
            }
            let f = row[c].clone();
            for (x, y) in row.iter_mut().zip(&pivot_row) {
                if !y.is_zero() {
                    *x -= &f * y;
                }
            }
        }
        self.basis[r] = c;
    }

    /// Maximize `cost·x` over columns `< limit`; false when unbounded.
    fn optimize(&mut self, cost: &[BigRational], limit: usize) -> bool {
        loop {
            let mut entering = None;
            for j in 0..limit {
                if self.basis.contains(&j) {
                    continue;
                }
                let mut rc = cost[j].clone();
                for (i, &b) in self.basis.iter().enumerate() {
                    if !self.t[i][j].is_zero() && !cost[b].is_zero() {
                        rc -= &cost[b] * &self.t[i][j];
                    }
                }
                if rc.is_positive() {
                    entering = Some(j);
                    break;
                }
            }
            let Some(j) = entering else {
                return true;
            };
            let mut leaving: Option<(usize, BigRational)> = None;
            for i in 0..self.t.len() {
                if self.t[i][j].is_positive() {
                    let ratio = &self.t[i][self.cols] / &self.t[i][j];
                    let better = match &leaving {
                        None => true,
                        Some((l, best)) => {
                            ratio < *best || (ratio == *best && self.basis[i] < self.basis[*l])
                        }
                    };
                    if better {
                        leaving = Some((i, ratio));
                    }
                }
            }
            match leaving {
                Some((i, _)) => self.pivot(i, j),
                None => return false,
            }
        }
    }

    fn run(mut self, lp: &LinearProgram) -> LpOutcome {
        let mut phase1 = vec![BigRational::zero(); self.cols];
        for c in phase1.iter_mut().skip(self.first_artificial) {
            *c = -BigRational::one();
        }
        self.optimize(&phase1, self.cols);
        let infeasibility: BigRational = self
            .basis
            .iter()
            .enumerate()
            .filter(|(_, &b)| b >= self.first_artificial)
            .map(|(i, _)| self.t[i][self.cols].clone())
            .sum();
        if infeasibility.is_positive() {
            return LpOutcome::Infeasible;
        }
        // drive remaining (zero-valued) artificials out of the basis
        let mut i = 0;
        while i < self.t.len() {
            if self.basis[i] >= self.first_artificial {
                match (0..self.first_artificial).find(|&j| !self.t[i][j].is_zero()) {
                    Some(j) => self.pivot(i, j),
                    None => {
                        self.t.remove(i);
                        self.basis.remove(i);
                        continue;
                    }
                }
            }
            i += 1;
        }
        let mut cost = vec![BigRational::zero(); self.cols];
        cost[..lp.num_vars].clone_from_slice(&lp.objective);
        if !self.optimize(&cost, self.first_artificial) {
            return LpOutcome::Unbounded;
        }
        let mut x = vec![BigRational::zero(); lp.num_vars];
        for (i, &b) in self.basis.iter().enumerate() {
            if b < lp.num_vars {
                x[b] = self.t[i][self.cols].clone();
            }
        }
        let value = x.iter().zip(&lp.objective).map(|(a, b)| a * b).sum();
        LpOutcome::Optimal { x, value }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn textbook_maximum() {
        // max 3x + 5y; x ≤ 4; 2y ≤ 12; 3x + 2y ≤ 18 → (2, 6), 36
        let mut lp = LinearProgram::new(2);
        lp.objective = vec![rat(3), rat(5)];
        lp.add_row(&[(0, 1)], Cmp::Le, 4);
        lp.add_row(&[(1, 2)], Cmp::Le, 12);
        lp.add_row(&[(0, 3), (1, 2)], Cmp::Le, 18);
        assert_eq!(
            lp.solve(),
            LpOutcome::Optimal {
                x: vec![rat(2), rat(6)],
                value: rat(36)
            }
        );
    }

    #[test]
    fn infeasible_and_unbounded() {
        let mut lp = LinearProgram::new(1);
        lp.add_row(&[(0, 1)], Cmp::Ge, 3);
        lp.add_row(&[(0, 1)], Cmp::Le, 2);
        assert_eq!(lp.solve(), LpOutcome::Infeasible);
        let mut lp = LinearProgram::new(1);
        lp.objective = vec![rat(1)];
        lp.add_row(&[(0, 1)], Cmp::Ge, 1);
        assert_eq!(lp.solve(), LpOutcome::Unbounded);
    }

    #[test]
    fn equalities_and_negative_rhs() {
        // min x + y s.t. x - y = -1, x + y ≥ 3
        let mut lp = LinearProgram::new(2);
        lp.objective = vec![rat(-1), rat(-1)];
        lp.add_row(&[(0, 1), (1, -1)], Cmp::Eq, -1);
        lp.add_row(&[(0, 1), (1, 1)], Cmp::Ge, 3);
        match lp.solve() {
            LpOutcome::Optimal { x, value } => {
                assert_eq!(value, rat(-3));
                assert_eq!(&x[1] - &x[0], rat(1));
            }
            other => panic!("{other:?}"),
        }
    }
}
