//! Dense extended-precision linear algebra: row-major matrices, LU with
//! partial pivoting, and a Hessenberg form for repeated shifted solves.

use rug::ops::NegAssign;
use rug::Float;

use crate::error::{Error, Result};
use crate::mp::{Complex, Precision};

/// Square or rectangular matrix stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Float>,
}

impl DenseMatrix {
    pub fn zeros(rows: usize, cols: usize, prec: Precision) -> Self {
        DenseMatrix { rows, cols, data: vec![prec.zero(); rows * cols] }
    }

    pub fn identity(n: usize, prec: Precision) -> Self {
        let mut m = DenseMatrix::zeros(n, n, prec);
        for i in 0..n {
            m[(i, i)] = prec.one();
        }
        m
    }

    pub fn from_rows(rows: Vec<Vec<Float>>) -> Result<Self> {
        let n_rows = rows.len();
        let n_cols = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(n_rows * n_cols);
        for row in rows {
            if row.len() != n_cols {
                return Err(Error::Shape { expected: n_cols, actual: row.len() });
            }
            data.extend(row);
        }
        Ok(DenseMatrix { rows: n_rows, cols: n_cols, data })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn row(&self, i: usize) -> &[Float] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn matvec(&self, x: &[Float]) -> Result<Vec<Float>> {
        if x.len() != self.cols {
            return Err(Error::Shape { expected: self.cols, actual: x.len() });
        }
        let prec = x.first().map_or(53, Float::prec);
        Ok((0..self.rows)
            .map(|i| {
                let mut acc = Float::new(prec);
                for (a, b) in self.row(i).iter().zip(x) {
                    acc += a * b;
                }
                acc
            })
            .collect())
    }

    pub fn matmul(&self, other: &DenseMatrix) -> Result<DenseMatrix> {
        if self.cols != other.rows {
            return Err(Error::Shape { expected: self.cols, actual: other.rows });
        }
        let prec = self.data.first().map_or(53, Float::prec);
        let mut out = vec![Float::new(prec); self.rows * other.cols];
        for i in 0..self.rows {
            for l in 0..self.cols {
                let a = &self[(i, l)];
                if a.is_zero() {
                    continue;
                }
                for j in 0..other.cols {
                    out[i * other.cols + j] += a * &other[(l, j)];
                }
            }
        }
        Ok(DenseMatrix { rows: self.rows, cols: other.cols, data: out })
    }

    /// Copy of the block `rows[r0..r1] x cols[c0..c1]`.
    pub fn submatrix(&self, r0: usize, r1: usize, c0: usize, c1: usize) -> DenseMatrix {
        let mut data = Vec::with_capacity((r1 - r0) * (c1 - c0));
        for i in r0..r1 {
            data.extend_from_slice(&self.data[i * self.cols + c0..i * self.cols + c1]);
        }
        DenseMatrix { rows: r1 - r0, cols: c1 - c0, data }
    }

    /// `diag * I - self`.
    pub fn shifted_negation(&self, diag: &Float) -> DenseMatrix {
        let mut out = self.clone();
        for v in &mut out.data {
            v.neg_assign();
        }
        for i in 0..self.rows.min(self.cols) {
            out[(i, i)] += diag;
        }
        out
    }
}

impl std::ops::Index<(usize, usize)> for DenseMatrix {
    type Output = Float;
    fn index(&self, (i, j): (usize, usize)) -> &Float {
        &self.data[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for DenseMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Float {
        &mut self.data[i * self.cols + j]
    }
}

/// `P A = L U` with unit-lower `L`; both factors share one matrix.
#[derive(Debug, Clone)]
pub struct LuFactors {
    lu: DenseMatrix,
    perm: Vec<usize>,
}

impl LuFactors {
    pub fn factor(matrix: &DenseMatrix) -> Result<Self> {
        if !matrix.is_square() {
            return Err(Error::LinearSolver(format!(
                "LU needs a square matrix, got {}x{}",
                matrix.rows, matrix.cols
            )));
        }
        let n = matrix.rows;
        let mut lu = matrix.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        let scale = crate::mp::max_abs(&lu.data);
        for col in 0..n {
            let pivot = (col..n)
                .max_by(|&a, &b| {
                    lu[(a, col)]
                        .clone()
                        .abs()
                        .partial_cmp(&lu[(b, col)].clone().abs())
                        .expect("finite entries")
                })
                .expect("non-empty range");
            let pivot_abs = lu[(pivot, col)].clone().abs();
            if pivot_abs.is_zero() || pivot_abs <= scale.clone() * tiny(scale.prec()) {
                return Err(Error::LinearSolver(format!("singular matrix at column {col}")));
            }
            if pivot != col {
                for j in 0..n {
                    lu.data.swap(pivot * n + j, col * n + j);
                }
                perm.swap(pivot, col);
            }
            for i in col + 1..n {
                let factor = lu[(i, col)].clone() / &lu[(col, col)];
                if factor.is_zero() {
                    lu[(i, col)] = factor;
                    continue;
                }
                for j in col + 1..n {
                    let delta = Float::with_val(factor.prec(), &factor * &lu[(col, j)]);
                    lu[(i, j)] -= delta;
                }
                lu[(i, col)] = factor;
            }
        }
        Ok(LuFactors { lu, perm })
    }

    pub fn dim(&self) -> usize {
        self.lu.rows
    }

    pub fn solve(&self, rhs: &[Float]) -> Result<Vec<Float>> {
        let n = self.dim();
        if rhs.len() != n {
            return Err(Error::Shape { expected: n, actual: rhs.len() });
        }
        let mut x: Vec<Float> = self.perm.iter().map(|&p| rhs[p].clone()).collect();
        for i in 0..n {
            for j in 0..i {
                let delta = Float::with_val(x[i].prec(), &self.lu[(i, j)] * &x[j]);
                x[i] -= delta;
            }
        }
        for i in (0..n).rev() {
            for j in i + 1..n {
                let delta = Float::with_val(x[i].prec(), &self.lu[(i, j)] * &x[j]);
                x[i] -= delta;
            }
            x[i] /= &self.lu[(i, i)];
        }
        Ok(x)
    }
}

fn tiny(prec: u32) -> Float {
    // pivots below 2^{-(prec + 16)} relative to the largest entry are treated as zero
    Float::with_val(prec, Float::u_exp(1, -(prec as i32) - 16))
}

/// Orthogonal similarity `A = Q H Q^T` with `H` upper Hessenberg. Shifted
/// systems `(s I - A) x = b` then cost `O(n^2)` per complex shift.
#[derive(Debug, Clone)]
pub struct HessenbergForm {
    h: DenseMatrix,
    q: DenseMatrix,
}

impl HessenbergForm {
    pub fn reduce(matrix: &DenseMatrix) -> Result<Self> {
        if !matrix.is_square() {
            return Err(Error::Shape { expected: matrix.rows, actual: matrix.cols });
        }
        let n = matrix.rows;
        let prec = Precision::new(matrix.data.first().map_or(53, Float::prec))?;
        let mut h = matrix.clone();
        let mut q = DenseMatrix::identity(n, prec);
        for col in 0..n.saturating_sub(2) {
            let mut norm = prec.zero();
            for i in col + 1..n {
                norm += h[(i, col)].clone().square();
            }
            let norm = norm.sqrt();
            if norm.is_zero() {
                continue;
            }
            // Householder vector u with H = I - 2 u u^T / (u^T u)
            let mut u: Vec<Float> = (col + 1..n).map(|i| h[(i, col)].clone()).collect();
            let alpha = if u[0].is_sign_negative() { norm } else { -norm };
            u[0] -= &alpha;
            let mut unorm2 = prec.zero();
            for v in &u {
                unorm2 += v.clone().square();
            }
            if unorm2.is_zero() {
                continue;
            }
            let two_over = Float::with_val(prec.bits(), 2) / unorm2;
            // H <- P H
            for j in 0..n {
                let mut dot = prec.zero();
                for (k, uk) in u.iter().enumerate() {
                    dot += uk * &h[(col + 1 + k, j)];
                }
                dot *= &two_over;
                for (k, uk) in u.iter().enumerate() {
                    let delta = Float::with_val(prec.bits(), uk * &dot);
                    h[(col + 1 + k, j)] -= delta;
                }
            }
            // H <- H P, Q <- Q P
            for target in [&mut h, &mut q] {
                for i in 0..n {
                    let mut dot = prec.zero();
                    for (k, uk) in u.iter().enumerate() {
                        dot += uk * &target[(i, col + 1 + k)];
                    }
                    dot *= &two_over;
                    for (k, uk) in u.iter().enumerate() {
                        let delta = Float::with_val(prec.bits(), uk * &dot);
                        target[(i, col + 1 + k)] -= delta;
                    }
                }
            }
            for i in col + 2..n {
                h[(i, col)] = prec.zero();
            }
        }
        Ok(HessenbergForm { h, q })
    }

    pub fn hessenberg(&self) -> &DenseMatrix {
        &self.h
    }

    pub fn q(&self) -> &DenseMatrix {
        &self.q
    }

    /// `Q^T x` for a real vector.
    pub fn to_basis(&self, x: &[Float]) -> Vec<Float> {
        let n = self.q.rows;
        let prec = x.first().map_or(53, Float::prec);
        (0..n)
            .map(|j| {
                let mut acc = Float::new(prec);
                for (i, xi) in x.iter().enumerate() {
                    acc += &self.q[(i, j)] * xi;
                }
                acc
            })
            .collect()
    }

    /// `Q y` for a real vector.
    pub fn from_basis(&self, y: &[Float]) -> Vec<Float> {
        self.q.matvec(y).expect("dimension checked by construction")
    }

    /// Solves `(shift I - H) y = rhs` in the Hessenberg basis by Gaussian
    /// elimination with adjacent-row pivoting.
    pub fn solve_shifted(&self, shift: &Complex, rhs: &[Complex]) -> Result<Vec<Complex>> {
        let n = self.h.rows;
        if rhs.len() != n {
            return Err(Error::Shape { expected: n, actual: rhs.len() });
        }
        // Row i of the working matrix only needs columns >= i - 1.
        let mut rows: Vec<Vec<Complex>> = (0..n)
            .map(|i| {
                let start = i.saturating_sub(1);
                (start..n)
                    .map(|j| {
                        let mut c = Complex::real(-self.h[(i, j)].clone());
                        if i == j {
                            c = &c + shift;
                        }
                        c
                    })
                    .collect()
            })
            .collect();
        let mut b = rhs.to_vec();
        let at = |i: usize, j: usize| j - i.saturating_sub(1);
        for i in 0..n.saturating_sub(1) {
            // candidates for pivot: row i (col i) and row i+1 (col i)
            let d_top = rows[i][at(i, i)].norm_sqr();
            let d_bot = rows[i + 1][at(i + 1, i)].norm_sqr();
            if d_bot > d_top {
                // swap rows i and i+1 over columns i..n
                for j in i..n {
                    let top = rows[i][at(i, j)].clone();
                    let bot = std::mem::replace(&mut rows[i + 1][at(i + 1, j)], top);
                    rows[i][at(i, j)] = bot;
                }
                b.swap(i, i + 1);
            }
            let pivot = rows[i][at(i, i)].clone();
            if pivot.norm_sqr().is_zero() {
                return Err(Error::LinearSolver(format!("zero pivot in shifted Hessenberg solve at row {i}")));
            }
            let factor = rows[i + 1][at(i + 1, i)].div(&pivot);
            for j in i + 1..n {
                let top = rows[i][at(i, j)].clone();
                rows[i + 1][at(i + 1, j)].sub_mul(&factor, &top);
            }
            rows[i + 1][at(i + 1, i)] = Complex::zero(Precision::new(pivot.re.prec())?);
            let bi = b[i].clone();
            b[i + 1].sub_mul(&factor, &bi);
        }
        let mut y = b;
        for i in (0..n).rev() {
            for j in i + 1..n {
                let yj = y[j].clone();
                y[i].sub_mul(&rows[i][at(i, j)], &yj);
            }
            let d = &rows[i][at(i, i)];
            if d.norm_sqr().is_zero() {
                return Err(Error::LinearSolver(format!("zero diagonal in shifted Hessenberg solve at row {i}")));
            }
            y[i] = y[i].div(d);
        }
        Ok(y)
    }
}
