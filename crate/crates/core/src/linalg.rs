//! Tridiagonal and dense direct solvers.
//!
//! The 1D schemes produce one tridiagonal matrix per run (two for L2-1sigma,
//! since the leading weight differs at the first step), so both solvers here
//! separate factorization from the solve and keep the factors around.

use nalgebra::{DMatrix, DVector, Dyn, LU};

use crate::error::{Error, Result};

/// `sub[i]` multiplies `x[i-1]` in row `i` (`sub[0]` unused), `sup[i]`
/// multiplies `x[i+1]` (`sup[n-1]` unused).
#[derive(Debug, Clone, PartialEq)]
pub struct Tridiag {
    pub sub: Vec<f64>,
    pub diag: Vec<f64>,
    pub sup: Vec<f64>,
}

impl Tridiag {
    pub fn new(sub: Vec<f64>, diag: Vec<f64>, sup: Vec<f64>) -> Result<Self> {
        let n = diag.len();
        if n == 0 || sub.len() != n || sup.len() != n {
            return Err(Error::DimensionMismatch(format!(
                "tridiagonal bands have lengths {}, {}, {}",
                sub.len(),
                n,
                sup.len()
            )));
        }
        Ok(Self { sub, diag, sup })
    }

    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let n = self.len();
        (0..n)
            .map(|i| {
                let mut s = self.diag[i] * x[i];
                if i > 0 {
                    s += self.sub[i] * x[i - 1];
                }
                if i + 1 < n {
                    s += self.sup[i] * x[i + 1];
                }
                s
            })
            .collect()
    }

    /// Strict row diagonal dominance `|b_i| > |a_i| + |c_i|`.
    pub fn is_diagonally_dominant(&self) -> bool {
        let n = self.len();
        (0..n).all(|i| {
            let off = if i > 0 { self.sub[i].abs() } else { 0.0 }
                + if i + 1 < n { self.sup[i].abs() } else { 0.0 };
            self.diag[i].abs() > off
        })
    }

    pub fn to_dense(&self) -> DenseMatrix {
        let n = self.len();
        let mut m = DenseMatrix::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = self.diag[i];
            if i > 0 {
                m[(i, i - 1)] = self.sub[i];
            }
            if i + 1 < n {
                m[(i, i + 1)] = self.sup[i];
            }
        }
        m
    }

    /// Thomas elimination without pivoting.
    pub fn factor(&self) -> Result<TridiagLU> {
        let n = self.len();
        let mut denom = vec![0.0; n];
        let mut upper = vec![0.0; n];
        let scale = self.diag.iter().fold(0.0f64, |a, v| a.max(v.abs())).max(f64::MIN_POSITIVE);
        for i in 0..n {
            let d = if i == 0 {
                self.diag[0]
            } else {
                self.diag[i] - self.sub[i] * upper[i - 1]
            };
            if !(d.abs() > f64::EPSILON * scale) {
                return Err(Error::ZeroPivot { row: i });
            }
            denom[i] = d;
            upper[i] = if i + 1 < n { self.sup[i] / d } else { 0.0 };
        }
        Ok(TridiagLU {
            sub: self.sub.clone(),
            denom,
            upper,
        })
    }
}

#[derive(Debug, Clone)]
pub struct TridiagLU {
    sub: Vec<f64>,
    denom: Vec<f64>,
    upper: Vec<f64>,
}

impl TridiagLU {
    pub fn solve(&self, rhs: &[f64]) -> Result<Vec<f64>> {
        let n = self.denom.len();
        if rhs.len() != n {
            return Err(Error::DimensionMismatch(format!(
                "right-hand side has {} entries, matrix has {n} rows",
                rhs.len()
            )));
        }
        let mut x = vec![0.0; n];
        x[0] = rhs[0] / self.denom[0];
        for i in 1..n {
            x[i] = (rhs[i] - self.sub[i] * x[i - 1]) / self.denom[i];
        }
        for i in (0..n - 1).rev() {
            x[i] -= self.upper[i] * x[i + 1];
        }
        Ok(x)
    }
}

/// One-shot Thomas solve.
pub fn thomas_solve(matrix: &Tridiag, rhs: &[f64]) -> Result<Vec<f64>> {
    matrix.factor()?.solve(rhs)
}

/// Row-major dense matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    pub rows: usize,
    pub cols: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|row| row.len() != c) {
            return Err(Error::DimensionMismatch("ragged rows".into()));
        }
        Ok(Self {
            rows: r,
            cols: c,
            data: rows.concat(),
        })
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        (0..self.rows)
            .map(|i| self.row(i).iter().zip(x).map(|(a, b)| a * b).sum())
            .collect()
    }

    pub fn max_abs_diff(&self, other: &DenseMatrix) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .fold(0.0, |a, (x, y)| a.max((x - y).abs()))
    }

    /// LU with partial pivoting.
    pub fn factor(&self) -> Result<DenseLU> {
        if self.rows != self.cols {
            return Err(Error::DimensionMismatch(format!(
                "LU needs a square matrix, got {}x{}",
                self.rows, self.cols
            )));
        }
        let n = self.rows;
        let scale = self.data.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(f64::MIN_POSITIVE);
        let lu = DMatrix::from_row_slice(n, n, &self.data).lu();
        let u = lu.u();
        if let Some(column) = (0..n).find(|&k| !(u[(k, k)].abs() > f64::EPSILON * scale)) {
            return Err(Error::Singular { column });
        }
        Ok(DenseLU { n, lu })
    }
}

impl std::ops::Index<(usize, usize)> for DenseMatrix {
    type Output = f64;

    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for DenseMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.cols + j]
    }
}

#[derive(Debug, Clone)]
pub struct DenseLU {
    n: usize,
    lu: LU<f64, Dyn, Dyn>,
}

impl DenseLU {
    pub fn solve(&self, rhs: &[f64]) -> Result<Vec<f64>> {
        let n = self.n;
        if rhs.len() != n {
            return Err(Error::DimensionMismatch(format!(
                "right-hand side has {} entries, matrix has {n} rows",
                rhs.len()
            )));
        }
        let mut x = DVector::from_column_slice(rhs);
        if !self.lu.solve_mut(&mut x) {
            return Err(Error::Singular { column: 0 });
        }
        Ok(x.as_slice().to_vec())
    }
}

/// Factorization used by the 1D solvers: Thomas when it succeeds, dense LU
/// with pivoting otherwise.
#[derive(Debug, Clone)]
pub enum BandedFactor {
    Thomas(TridiagLU),
    Dense(DenseLU),
}

impl BandedFactor {
    pub fn new(matrix: &Tridiag) -> Result<Self> {
        match matrix.factor() {
            Ok(f) => Ok(BandedFactor::Thomas(f)),
            Err(Error::ZeroPivot { .. }) => Ok(BandedFactor::Dense(matrix.to_dense().factor()?)),
            Err(e) => Err(e),
        }
    }

    pub fn solve(&self, rhs: &[f64]) -> Result<Vec<f64>> {
        match self {
            BandedFactor::Thomas(f) => f.solve(rhs),
            BandedFactor::Dense(f) => f.solve(rhs),
        }
    }

    pub fn is_dense(&self) -> bool {
        matches!(self, BandedFactor::Dense(_))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn thomas_small_system() {
        // [2 1 0; 1 2 1; 0 1 2] x = [4 8 8] -> x = [1 2 3]
        let m = Tridiag::new(vec![0.0, 1.0, 1.0], vec![2.0; 3], vec![1.0, 1.0, 0.0]).unwrap();
        let x = thomas_solve(&m, &[4.0, 8.0, 8.0]).unwrap();
        for (a, b) in x.iter().zip([1.0, 2.0, 3.0]) {
            assert!((a - b).abs() < 1e-14);
        }
        assert!(!m.is_diagonally_dominant());
    }

    #[test]
    fn zero_pivot_falls_back_to_dense() {
        let m = Tridiag::new(vec![0.0, 1.0], vec![0.0, 1.0], vec![1.0, 0.0]).unwrap();
        assert!(matches!(m.factor(), Err(Error::ZeroPivot { row: 0 })));
        let f = BandedFactor::new(&m).unwrap();
        assert!(f.is_dense());
        let x = f.solve(&[2.0, 5.0]).unwrap();
        assert!((x[0] - 3.0).abs() < 1e-14 && (x[1] - 2.0).abs() < 1e-14);
    }

    #[test]
    fn singular_dense_is_reported() {
        let m = DenseMatrix::from_rows(&[vec![1.0, 2.0], vec![2.0, 4.0]]).unwrap();
        assert!(matches!(m.factor(), Err(Error::Singular { column: 1 })));
    }

    #[test]
    fn dense_lu_needs_pivoting() {
        let m = DenseMatrix::from_rows(&[
            vec![0.0, 2.0, 1.0],
            vec![1.0, -1.0, 0.0],
            vec![3.0, 0.0, 1.0],
        ])
        .unwrap();
        let x_true = [1.0, -2.0, 0.5];
        let b = m.matvec(&x_true);
        let x = m.factor().unwrap().solve(&b).unwrap();
        for (a, e) in x.iter().zip(x_true) {
            assert!((a - e).abs() < 1e-14);
        }
    }

    #[test]
    fn dimension_checks() {
        assert!(Tridiag::new(vec![0.0], vec![1.0, 1.0], vec![0.0, 0.0]).is_err());
        let m = Tridiag::new(vec![0.0; 2], vec![1.0; 2], vec![0.0; 2]).unwrap();
        assert!(thomas_solve(&m, &[1.0]).is_err());
        assert!(DenseMatrix::zeros(2, 3).factor().is_err());
    }

    proptest::proptest! {
        #[test]
        fn thomas_matches_dense(n in 1usize..40, seed in 0u64..10_000) {
            let mut s = seed as f64;
            let mut next = || { s = (s * 1.618_033_988_7 + 0.5).fract() * 0.999 + 0.000_5; s * 2.0 - 1.0 };
            let sub: Vec<f64> = (0..n).map(|_| next()).collect();
            let sup: Vec<f64> = (0..n).map(|_| next()).collect();
            let diag: Vec<f64> = (0..n).map(|i| 2.5 + next() + sub[i].abs() + sup[i].abs()).collect();
            let rhs: Vec<f64> = (0..n).map(|_| next() * 10.0).collect();
            let m = Tridiag::new(sub, diag, sup).unwrap();
            let a = thomas_solve(&m, &rhs).unwrap();
            let b = m.to_dense().factor().unwrap().solve(&rhs).unwrap();
            for (x, y) in a.iter().zip(&b) {
                proptest::prop_assert!((x - y).abs() < 1e-10);
            }
        }
    }
}
