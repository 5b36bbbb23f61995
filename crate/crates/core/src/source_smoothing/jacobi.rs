//! Gauss-Jacobi rules for `∫_{-1}^{1} (1+s)^β P(s) ds` by the Golub-Welsch
//! procedure: eigenvalues of the Jacobi matrix are the nodes, squared first
//! eigenvector components times the zeroth moment are the weights.

use rug::ops::Pow;
use rug::Float;

use crate::error::{Error, Result};
use crate::mp::Precision;

/// An `n`-point Gauss rule for the weight `(1+s)^β` on `[-1, 1]`, exact for
/// polynomials of degree `2n - 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct JacobiRule {
    beta: Float,
    nodes: Vec<Float>,
    weights: Vec<Float>,
}

impl JacobiRule {
    pub fn beta(&self) -> &Float {
        &self.beta
    }

    pub fn nodes(&self) -> &[Float] {
        &self.nodes
    }

    pub fn weights(&self) -> &[Float] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// `Σ w_i f(s_i)`, approximating `∫ (1+s)^β f(s) ds`.
    pub fn integrate<F: FnMut(&Float) -> Float>(&self, mut f: F) -> Float {
        let prec = self.beta.prec();
        let mut acc = Float::new(prec);
        for (x, w) in self.nodes.iter().zip(&self.weights) {
            acc += f(x) * w;
        }
        acc
    }
}

/// Builds the `(0, β)` Gauss-Jacobi rule with `n` nodes.
pub fn jacobi_rule(beta: &Float, n: usize, prec: Precision) -> Result<JacobiRule> {
    if beta.is_nan() || *beta <= -1 {
        return Err(Error::InvalidWeight(format!(
            "Jacobi exponent must exceed -1, got {}",
            crate::mp::to_decimal_digits(beta, 12)
        )));
    }
    if n == 0 {
        return Err(Error::Config("quadrature needs at least one node".into()));
    }
    let work = prec.widened(32);
    let b = work.of(beta);

    let mut diag = Vec::with_capacity(n);
    let mut off = Vec::with_capacity(n);
    for i in 0..n {
        let two_i_ab = Float::with_val(work.bits(), 2 * i as u32) + &b;
        let d = if i == 0 {
            b.clone() / (b.clone() + 2u32)
        } else {
            // (β² - 0) / ((2i+β)(2i+β+2))
            b.clone().square() / (two_i_ab.clone() * (two_i_ab.clone() + 2u32))
        };
        diag.push(d);
        if i + 1 < n {
            let j = (i + 1) as u32;
            let two_j_ab = Float::with_val(work.bits(), 2 * j) + &b;
            // 4 j (j+a)(j+b)(j+a+b) / ((2j+a+b)^2 (2j+a+b+1)(2j+a+b-1)) with a = 0
            let num = Float::with_val(work.bits(), 4 * j) * j * (b.clone() + j) * (b.clone() + j);
            let den = two_j_ab.clone().square() * (two_j_ab.clone() + 1u32) * (two_j_ab.clone() - 1u32);
            off.push((num / den).sqrt());
        }
    }
    off.push(work.zero());

    let two = Float::with_val(work.bits(), 2);
    let mu0 = two.pow(b.clone() + 1u32) / (b.clone() + 1u32);
    let mut z = vec![work.zero(); n];
    z[0] = mu0.clone().sqrt();

    implicit_ql(&mut diag, &mut off, &mut z, work)?;

    let mut pairs: Vec<(Float, Float)> = diag.into_iter().zip(z).map(|(x, zi)| (x, zi.square())).collect();
    pairs.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("finite nodes"));
    let (nodes, weights) = pairs.into_iter().map(|(x, w)| (prec.of(&x), prec.of(&w))).unzip();
    Ok(JacobiRule { beta: prec.of(beta), nodes, weights })
}

/// Diagonalises the symmetric tridiagonal matrix `(diag, off)` in place by
/// implicit QL sweeps and applies the accumulated rotations to `z`.
fn implicit_ql(d: &mut [Float], e: &mut [Float], z: &mut [Float], prec: Precision) -> Result<()> {
    let n = d.len();
    if n == 1 {
        return Ok(());
    }
    let eps = Float::with_val(prec.bits(), Float::u_exp(1, -(prec.bits() as i32)));
    let max_iter = 60;
    for l in 0..n {
        let mut iter = 0;
        loop {
            let mut m = l;
            while m < n - 1 {
                let scale = d[m].clone().abs() + d[m + 1].clone().abs();
                if e[m].clone().abs() <= eps.clone() * scale {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            if iter >= max_iter {
                return Err(Error::Accuracy(format!(
                    "Golub-Welsch eigen-iteration did not converge for eigenvalue {l} after {max_iter} sweeps"
                )));
            }
            iter += 1;
            let p0 = d[l].clone();
            let mut g = (d[l + 1].clone() - &p0) / (e[l].clone() * 2u32);
            let mut r = (g.clone().square() + 1u32).sqrt();
            let signed_r = if g.is_sign_negative() { -r.clone() } else { r.clone() };
            g = d[m].clone() - &p0 + e[l].clone() / (g + signed_r);
            let mut s = prec.one();
            let mut c = prec.one();
            let mut p = prec.zero();
            for i in (l..m).rev() {
                let f = s.clone() * &e[i];
                let b = c.clone() * &e[i];
                if g.clone().abs() <= f.clone().abs() {
                    c = g.clone() / &f;
                    r = (c.clone().square() + 1u32).sqrt();
                    e[i + 1] = f * &r;
                    s = prec.one() / &r;
                    c *= &s;
                } else {
                    s = f / &g;
                    r = (s.clone().square() + 1u32).sqrt();
                    e[i + 1] = g.clone() * &r;
                    c = prec.one() / &r;
                    s *= &c;
                }
                g = d[i + 1].clone() - &p;
                r = (d[i].clone() - &g) * &s + c.clone() * &b * 2u32;
                p = s.clone() * &r;
                d[i + 1] = g.clone() + &p;
                g = c.clone() * &r - &b;
                let f = z[i + 1].clone();
                z[i + 1] = s.clone() * &z[i] + c.clone() * &f;
                z[i] = c.clone() * &z[i] - s.clone() * &f;
            }
            d[l] -= &p;
            e[l] = g;
            e[m] = prec.zero();
        }
    }
    Ok(())
}
