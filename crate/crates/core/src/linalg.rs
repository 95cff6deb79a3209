//! Banded storage and LU factorization with partial pivoting inside the band.

use crate::error::{Error, Result};
use crate::mesh::RadialField;
use crate::operator::DiscreteBiharmonic;

/// Pivots below this fraction of the largest pivot mark the matrix singular.
pub const SINGULAR_PIVOT_RATIO: f64 = 1e-14;

/// Square matrix with `kl` sub-diagonals and `ku` super-diagonals, stored row-wise.
#[derive(Debug, Clone, PartialEq)]
pub struct BandMatrix {
    dim: usize,
    kl: usize,
    ku: usize,
    data: Vec<f64>,
}

impl BandMatrix {
    pub fn zeros(dim: usize, kl: usize, ku: usize) -> Self {
        Self {
            dim,
            kl,
            ku,
            data: vec![0.0; dim * (kl + ku + 1)],
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn lower_bandwidth(&self) -> usize {
        self.kl
    }

    pub fn upper_bandwidth(&self) -> usize {
        self.ku
    }

    fn width(&self) -> usize {
        self.kl + self.ku + 1
    }

    fn in_band(&self, i: usize, j: usize) -> bool {
        j + self.kl >= i && j <= i + self.ku && j < self.dim
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        if self.in_band(i, j) {
            self.data[i * self.width() + j + self.kl - i]
        } else {
            0.0
        }
    }

    /// Adds `value` at `(i, j)`; panics if the entry lies outside the band.
    pub fn add(&mut self, i: usize, j: usize, value: f64) {
        assert!(self.in_band(i, j), "entry ({i}, {j}) outside band");
        let w = self.width();
        self.data[i * w + j + self.kl - i] += value;
    }

    /// Columns of row `i` that lie inside the band.
    pub fn row_range(&self, i: usize) -> std::ops::Range<usize> {
        i.saturating_sub(self.kl)..(i + self.ku + 1).min(self.dim)
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        (0..self.dim)
            .map(|i| self.row_range(i).map(|j| self.get(i, j) * x[j]).sum())
            .collect()
    }

    /// Row sums of `|a_ij| |x_j|`, used for floating-point error bounds.
    pub fn abs_mul_vec(&self, x: &[f64]) -> Vec<f64> {
        (0..self.dim)
            .map(|i| {
                self.row_range(i)
                    .map(|j| (self.get(i, j) * x[j]).abs())
                    .sum()
            })
            .collect()
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        (0..self.dim)
            .map(|i| (0..self.dim).map(|j| self.get(i, j)).collect())
            .collect()
    }
}

/// LU factors `P A = L U` of a band matrix.
///
/// `U` has `kl + ku` super-diagonals after row interchanges. The multipliers of
/// step `k` stay in column `k` of the rows they eliminated.
#[derive(Debug, Clone)]
pub struct BandLu {
    dim: usize,
    kl: usize,
    ku: usize,
    data: Vec<f64>,
    pivots: Vec<usize>,
    min_pivot: f64,
    max_pivot: f64,
}

impl BandLu {
    fn width(&self) -> usize {
        2 * self.kl + self.ku + 1
    }

    fn idx(&self, i: usize, j: usize) -> usize {
        i * self.width() + j + self.kl - i
    }

    pub fn factor(a: &BandMatrix) -> Result<Self> {
        let (dim, kl, ku) = (a.dim, a.kl, a.ku);
        let mut lu = BandLu {
            dim,
            kl,
            ku,
            data: vec![0.0; dim * (2 * kl + ku + 1)],
            pivots: vec![0; dim],
            min_pivot: f64::INFINITY,
            max_pivot: 0.0,
        };
        for i in 0..dim {
            for j in a.row_range(i) {
                let k = lu.idx(i, j);
                lu.data[k] = a.get(i, j);
            }
        }
        let reach = kl + ku;
        for k in 0..dim {
            let last_row = (k + kl).min(dim - 1);
            let last_col = (k + reach).min(dim - 1);
            let mut p = k;
            let mut best = lu.data[lu.idx(k, k)].abs();
            for i in k + 1..=last_row {
                let v = lu.data[lu.idx(i, k)].abs();
                if v > best {
                    best = v;
                    p = i;
                }
            }
            lu.pivots[k] = p;
            if !best.is_finite() || best == 0.0 {
                return Err(Error::SingularOperator {
                    row: k,
                    pivot: best,
                    max_pivot: lu.max_pivot,
                });
            }
            if p != k {
                for j in k..=last_col {
                    let (a_idx, b_idx) = (lu.idx(k, j), lu.idx(p, j));
                    lu.data.swap(a_idx, b_idx);
                }
            }
            let pivot = lu.data[lu.idx(k, k)];
            lu.min_pivot = lu.min_pivot.min(pivot.abs());
            lu.max_pivot = lu.max_pivot.max(pivot.abs());
            for i in k + 1..=last_row {
                let li = lu.idx(i, k);
                let l = lu.data[li] / pivot;
                lu.data[li] = l;
                if l == 0.0 {
                    continue;
                }
                for j in k + 1..=last_col {
                    let (t, s) = (lu.idx(i, j), lu.idx(k, j));
                    lu.data[t] -= l * lu.data[s];
                }
            }
        }
        if lu.min_pivot < SINGULAR_PIVOT_RATIO * lu.max_pivot {
            let row = (0..dim)
                .min_by(|&a, &b| {
                    let pa = lu.data[lu.idx(a, a)].abs();
                    let pb = lu.data[lu.idx(b, b)].abs();
                    pa.total_cmp(&pb)
                })
                .unwrap_or(0);
            return Err(Error::SingularOperator {
                row,
                pivot: lu.min_pivot,
                max_pivot: lu.max_pivot,
            });
        }
        Ok(lu)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Ratio of smallest to largest pivot magnitude.
    pub fn pivot_ratio(&self) -> f64 {
        self.min_pivot / self.max_pivot
    }

    pub fn solve_in_place(&self, b: &mut [f64]) {
        assert_eq!(b.len(), self.dim);
        for k in 0..self.dim {
            let p = self.pivots[k];
            if p != k {
                b.swap(k, p);
            }
            let bk = b[k];
            if bk != 0.0 {
                for i in k + 1..=(k + self.kl).min(self.dim - 1) {
                    b[i] -= self.data[self.idx(i, k)] * bk;
                }
            }
        }
        let reach = self.kl + self.ku;
        for k in (0..self.dim).rev() {
            let mut s = b[k];
            for j in k + 1..=(k + reach).min(self.dim - 1) {
                s -= self.data[self.idx(k, j)] * b[j];
            }
            b[k] = s / self.data[self.idx(k, k)];
        }
    }
}

/// Factorization of `Δ²_h - diag(shift)` with the clamped boundary rows intact.
#[derive(Debug, Clone)]
pub struct BandedFactorization {
    lu: BandLu,
    bandwidth: (usize, usize),
    shifted: bool,
}

impl BandedFactorization {
    pub fn dim(&self) -> usize {
        self.lu.dim()
    }

    pub fn bandwidth(&self) -> (usize, usize) {
        self.bandwidth
    }

    pub fn is_shifted(&self) -> bool {
        self.shifted
    }

    pub fn pivot_ratio(&self) -> f64 {
        self.lu.pivot_ratio()
    }
}

/// Factor the clamped operator, optionally subtracting a diagonal `shift` on the
/// equation rows (the boundary row `u(1) = 0` is never shifted).
pub fn factor(op: &DiscreteBiharmonic, shift: Option<&RadialField>) -> Result<BandedFactorization> {
    let mut matrix = op.matrix().clone();
    let dim = matrix.dim();
    if let Some(s) = shift {
        s.check_len(dim)?;
        for (i, &v) in s.values[..dim - 1].iter().enumerate() {
            if !v.is_finite() {
                return Err(Error::SingularWeight { node: i, value: v });
            }
            matrix.add(i, i, -v);
        }
    }
    let lu = BandLu::factor(&matrix)?;
    Ok(BandedFactorization {
        lu,
        bandwidth: (matrix.lower_bandwidth(), matrix.upper_bandwidth()),
        shifted: shift.is_some(),
    })
}

/// Solve the clamped system with source `rhs` on the equation rows.
///
/// The boundary entry of `rhs` is ignored and the homogeneous condition
/// `u(1) = 0` is imposed instead.
pub fn solve_linear(fact: &BandedFactorization, rhs: &RadialField) -> Result<RadialField> {
    rhs.check_len(fact.dim())?;
    let mut b = rhs.values.clone();
    let last = b.len() - 1;
    b[last] = 0.0;
    fact.lu.solve_in_place(&mut b);
    if b.iter().any(|v| !v.is_finite()) {
        return Err(Error::SingularOperator {
            row: 0,
            pivot: fact.lu.min_pivot,
            max_pivot: fact.lu.max_pivot,
        });
    }
    Ok(RadialField::new(b))
}
