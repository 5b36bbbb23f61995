//! Chebyshev-Gauss-Lobatto collocation of the Dirichlet Laplacian on
//! `(-1, 1)` and the Clenshaw-Curtis weighted discrete `l2` norm.

use std::io::Write;

use rug::Float;

use crate::error::{Error, Result};
use crate::linalg::DenseMatrix;
use crate::mp::{self, Precision};
use crate::source_smoothing::ScalarFn;

pub const MIN_DEGREE: usize = 4;
pub const DEFAULT_DEGREE: usize = 32;

#[derive(Debug, Clone)]
pub struct SpatialOperator {
    degree: usize,
    points: Vec<Float>,
    diff: DenseMatrix,
    laplacian: DenseMatrix,
    norm_weights: Vec<Float>,
}

impl SpatialOperator {
    /// Polynomial degree `M`; there are `M + 1` nodes and `M - 1` unknowns.
    pub fn degree(&self) -> usize {
        self.degree
    }

    /// All nodes `x_j = cos(jπ/M)`, from `1` down to `-1`.
    pub fn points(&self) -> &[Float] {
        &self.points
    }

    pub fn interior_points(&self) -> &[Float] {
        &self.points[1..self.degree]
    }

    /// First-derivative collocation matrix on all `M + 1` nodes.
    pub fn diff(&self) -> &DenseMatrix {
        &self.diff
    }

    /// Interior block of `D^2`: the Laplacian with homogeneous Dirichlet data.
    pub fn laplacian(&self) -> &DenseMatrix {
        &self.laplacian
    }

    pub fn norm_weights(&self) -> &[Float] {
        &self.norm_weights
    }

    pub fn interior_len(&self) -> usize {
        self.degree - 1
    }

    pub fn precision(&self) -> Precision {
        Precision::new(self.points[0].prec()).expect("built from a valid precision")
    }

    pub fn sample_interior(&self, f: &ScalarFn) -> Vec<Float> {
        self.interior_points().iter().map(|x| f.eval(x)).collect()
    }

    /// Writes `x_j,w_j` for the interior nodes.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["x", "weight"])?;
        for (x, wt) in self.interior_points().iter().zip(&self.norm_weights) {
            w.write_record([mp::to_decimal(x), mp::to_decimal(wt)])?;
        }
        w.flush()?;
        Ok(())
    }
}

pub fn build_spatial(degree: usize, prec: Precision) -> Result<SpatialOperator> {
    if degree < MIN_DEGREE {
        return Err(Error::InvalidResolution(format!(
            "spectral degree must be at least {MIN_DEGREE}, got {degree}"
        )));
    }
    let m = degree;
    let pi = prec.pi();
    // sin form keeps the nodes exactly antisymmetric, with x = 0 exact for even M
    let points: Vec<Float> = (0..=m)
        .map(|j| (pi.clone() * (m as i64 - 2 * j as i64) / (2 * m) as u32).sin())
        .collect();

    let mut diff = DenseMatrix::zeros(m + 1, m + 1, prec);
    let weight = |j: usize| if j == 0 || j == m { 2u32 } else { 1u32 };
    for i in 0..=m {
        let mut row_sum = prec.zero();
        for j in 0..=m {
            if i == j {
                continue;
            }
            let sign = if (i + j) % 2 == 0 { 1 } else { -1 };
            let entry = prec.int(sign) * weight(i) / weight(j) / (points[i].clone() - &points[j]);
            row_sum += &entry;
            diff[(i, j)] = entry;
        }
        // negative-sum trick: rows of D annihilate constants exactly
        diff[(i, i)] = -row_sum;
    }
    let second = diff.matmul(&diff)?;
    let laplacian = second.submatrix(1, m, 1, m);
    let norm_weights = clenshaw_curtis_interior(m, prec);
    Ok(SpatialOperator { degree, points, diff, laplacian, norm_weights })
}

/// Clenshaw-Curtis weights at the interior Chebyshev-Lobatto nodes.
fn clenshaw_curtis_interior(m: usize, prec: Precision) -> Vec<Float> {
    let pi = prec.pi();
    (1..m)
        .map(|j| {
            let theta = pi.clone() * j as u32 / m as u32;
            let mut v = prec.one();
            let upper = if m % 2 == 0 { m / 2 - 1 } else { (m - 1) / 2 };
            for k in 1..=upper {
                let c = (theta.clone() * (2 * k) as u32).cos();
                v -= c * 2u32 / (4 * k * k - 1) as u32;
            }
            if m % 2 == 0 {
                let c = (theta.clone() * m as u32).cos();
                v -= c / (m * m - 1) as u32;
            }
            v * 2u32 / m as u32
        })
        .collect()
}

/// `sqrt(Σ w_j v_j^2)` over the interior nodes.
pub fn discrete_l2_norm(values: &[Float], op: &SpatialOperator) -> Result<Float> {
    if values.len() != op.interior_len() {
        return Err(Error::Shape { expected: op.interior_len(), actual: values.len() });
    }
    let prec = op.precision();
    let mut acc = prec.zero();
    for (v, w) in values.iter().zip(&op.norm_weights) {
        acc += v.clone().square() * w;
    }
    Ok(acc.sqrt())
}

/// Norm of the difference of two interior vectors.
pub fn discrete_l2_distance(a: &[Float], b: &[Float], op: &SpatialOperator) -> Result<Float> {
    if a.len() != b.len() {
        return Err(Error::Shape { expected: a.len(), actual: b.len() });
    }
    let diff: Vec<Float> = a.iter().zip(b).map(|(x, y)| x.clone() - y).collect();
    discrete_l2_norm(&diff, op)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rug::ops::Pow;

    fn p() -> Precision {
        Precision::DEFAULT
    }

    #[test]
    fn degree_four_nodes() {
        let op = build_spatial(4, p()).unwrap();
        let half_sqrt2 = p().int(2).sqrt() / 2u32;
        let expected = [p().one(), half_sqrt2.clone(), p().zero(), -half_sqrt2, -p().one()];
        for (x, e) in op.points().iter().zip(&expected) {
            assert!((x.clone() - e).abs() < 1e-75);
        }
        assert!(op.points()[2].is_zero());
        assert!(matches!(build_spatial(3, p()), Err(Error::InvalidResolution(_))));
    }

    #[test]
    fn rows_of_d_sum_to_zero() {
        let op = build_spatial(12, p()).unwrap();
        for i in 0..=12 {
            let s = op.diff().row(i).iter().fold(p().zero(), |acc, v| acc + v);
            assert!(s.abs() < 1e-70);
        }
    }

    #[test]
    fn differentiates_polynomials_exactly() {
        let op = build_spatial(16, p()).unwrap();
        let cube: Vec<Float> = op.points().iter().map(|x| x.clone().pow(3u32)).collect();
        let d = op.diff().matvec(&cube).unwrap();
        for (x, v) in op.points().iter().zip(&d) {
            assert!((v.clone() - x.clone().square() * 3u32).abs() < 1e-68);
        }
        let sq: Vec<Float> = op.points().iter().map(|x| x.clone().square()).collect();
        let d2 = op.diff().matvec(&op.diff().matvec(&sq).unwrap()).unwrap();
        for v in &d2 {
            assert!((v.clone() - 2u32).abs() < 1e-65);
        }
    }

    #[test]
    fn laplacian_eigenfunction_is_spectrally_accurate() {
        let op = build_spatial(32, p()).unwrap();
        let half_pi = p().pi() / 2u32;
        let f: Vec<Float> = op.interior_points().iter().map(|x| ((x.clone() + 1u32) * &half_pi).sin()).collect();
        let af = op.laplacian().matvec(&f).unwrap();
        let lambda = half_pi.clone().square();
        for (a, v) in af.iter().zip(&f) {
            assert!((a.clone() + v.clone() * &lambda).abs() < 1e-20);
        }
    }

    #[test]
    fn laplacian_spectrum_is_in_the_left_half_plane() {
        use nalgebra::DMatrix;
        let op = build_spatial(16, p()).unwrap();
        let n = op.interior_len();
        let a = DMatrix::from_fn(n, n, |i, j| op.laplacian()[(i, j)].to_f64());
        let eig = a.complex_eigenvalues();
        assert!(eig.iter().all(|z| z.re < 0.0), "{eig:?}");
    }

    #[test]
    fn norm_of_zero_constant_and_parabola() {
        let op = build_spatial(32, p()).unwrap();
        let n = op.interior_len();
        assert!(discrete_l2_norm(&vec![p().zero(); n], &op).unwrap().is_zero());
        let ones = vec![p().one(); n];
        let norm = discrete_l2_norm(&ones, &op).unwrap();
        // interior weights miss the two endpoint weights 1/(M^2 - 1)
        let expected = (p().int(2) - p().ratio(2, 32 * 32 - 1)).sqrt();
        assert!((norm - expected).abs() < 1e-70);
        let arc: Vec<Float> = op.interior_points().iter().map(|x| (p().one() - x.clone().square()).sqrt()).collect();
        let sq = discrete_l2_norm(&arc, &op).unwrap().square();
        assert!((sq - p().ratio(4, 3)).abs() < 1e-70);
    }

    #[test]
    fn norm_is_homogeneous_and_checks_shape() {
        let op = build_spatial(8, p()).unwrap();
        let v: Vec<Float> = op.interior_points().iter().map(|x| x.clone().exp()).collect();
        let c = p().from_f64(-2.5);
        let scaled: Vec<Float> = v.iter().map(|x| x.clone() * &c).collect();
        let a = discrete_l2_norm(&scaled, &op).unwrap();
        let b = discrete_l2_norm(&v, &op).unwrap() * c.abs();
        assert!((a - b).abs() < 1e-74);
        assert!(matches!(discrete_l2_norm(&v[1..], &op), Err(Error::Shape { .. })));
    }

    #[test]
    fn indicator_profile_at_nodes() {
        let op = build_spatial(8, p()).unwrap();
        let q = op.sample_interior(&ScalarFn::exp_with_indicator());
        // interior nodes: x_1 .. x_7, x_4 = 0 sits outside (0, 1)
        assert_eq!(q[3], p().one());
        assert_eq!(q[0], op.interior_points()[0].clone().exp() * 2u32);
        assert_eq!(q[6], op.interior_points()[6].clone().exp());
    }
}
