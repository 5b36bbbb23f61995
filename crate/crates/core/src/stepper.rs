//! Time marching for `∂_t^α (u - v) - A u = g` with the ID`m`-BDF`k` scheme
//! and the unsmoothed BDF`k` baseline (`m = 0`).
//!
//! With `V = u - v`, step `n` solves
//!
//! ```text
//! (ω_0 τ^{-α} I - A) V^n = -τ^{-α} Σ_{j=1}^{n} ω_j V^{n-j}
//!                          + τ^{-m} Σ_{j=0}^{min(n, km)} ω^{(m)}_j (t_{n-j}^m / m! · Av + G^{n-j} q)
//! ```
//!
//! where `ω` are the coefficients of `δ(ξ)^α`, `ω^{(m)}` those of `δ(ξ)^m`,
//! `G` the `m`-fold integral of the time profile and `q` the spatial
//! profile. The baseline uses `ω^{(0)} = [1]` and `G^n = g_t(t_n)`. Both the
//! `Av` and `q` terms reduce to scalar tables, so each step costs one history
//! sum and one triangular solve.

use std::io::Write;
use std::sync::Arc;

use rug::ops::Pow;
use rug::Float;
use serde::{Deserialize, Serialize};

use crate::cq_weights::{bdf_poly, frac_power_weights, int_power_weights, MAX_BDF_ORDER};
use crate::error::{Error, Result};
use crate::linalg::{DenseMatrix, LuFactors};
use crate::mp::{self, Precision};
use crate::source_smoothing::{build_pointwise_table, build_smoothed_table, SourceSpec, DEFAULT_QUAD_NODES};
use crate::spatial::{SpatialOperator, DEFAULT_DEGREE, MIN_DEGREE};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SchemeConfig {
    pub alpha: f64,
    pub k: usize,
    /// Smoothing order; `0` selects the unsmoothed baseline.
    pub m: usize,
    #[serde(rename = "N")]
    pub steps: usize,
    #[serde(rename = "T")]
    pub final_time: f64,
    #[serde(default)]
    pub precision: Precision,
    #[serde(rename = "M", default = "default_degree")]
    pub degree: usize,
    #[serde(default = "default_quad")]
    pub quad_n: usize,
}

fn default_degree() -> usize {
    DEFAULT_DEGREE
}

fn default_quad() -> usize {
    DEFAULT_QUAD_NODES
}

impl SchemeConfig {
    pub fn new(alpha: f64, k: usize, m: usize, steps: usize) -> Self {
        SchemeConfig {
            alpha,
            k,
            m,
            steps,
            final_time: 1.0,
            precision: Precision::DEFAULT,
            degree: DEFAULT_DEGREE,
            quad_n: DEFAULT_QUAD_NODES,
        }
    }

    pub fn with_steps(&self, steps: usize) -> Self {
        SchemeConfig { steps, ..self.clone() }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::Config(format!("alpha must lie in (0, 1), got {}", self.alpha)));
        }
        if self.k == 0 || self.k > MAX_BDF_ORDER {
            return Err(Error::InvalidOrder(format!("BDF order k must be in 1..={MAX_BDF_ORDER}, got {}", self.k)));
        }
        if self.m > self.k {
            return Err(Error::InvalidOrder(format!("smoothing order m = {} exceeds k = {}", self.m, self.k)));
        }
        if self.steps < self.k {
            return Err(Error::InvalidResolution(format!("N = {} is below k = {}", self.steps, self.k)));
        }
        if !(self.final_time.is_finite() && self.final_time > 0.0) {
            return Err(Error::Config(format!("final time must be positive, got {}", self.final_time)));
        }
        if self.degree < MIN_DEGREE {
            return Err(Error::InvalidResolution(format!(
                "spectral degree must be at least {MIN_DEGREE}, got {}",
                self.degree
            )));
        }
        if self.quad_n < 2 {
            return Err(Error::Config("smoothing quadrature needs at least two nodes".into()));
        }
        Ok(())
    }

    fn tau(&self) -> Float {
        self.precision.from_f64(self.final_time) / self.steps as u32
    }
}

/// Everything needed to rebuild the step-`n` system from stored history.
#[derive(Debug)]
struct StepSystem {
    matrix: DenseMatrix,
    /// `τ^{-α} ω_j`, `j = 0..N`.
    history: Vec<Float>,
    av: Vec<Float>,
    q: Vec<Float>,
    /// `τ^{-m} Σ_j ω^{(m)}_j t_{n-j}^m / m!`.
    init_coeff: Vec<Float>,
    /// `τ^{-m} Σ_j ω^{(m)}_j G^{n-j}`.
    source_coeff: Vec<Float>,
}

impl StepSystem {
    fn rhs(&self, n: usize, shifted: &[Vec<Float>], prec: Precision) -> Vec<Float> {
        let dim = self.av.len();
        let mut out = Vec::with_capacity(dim);
        for i in 0..dim {
            let mut acc = prec.zero();
            for j in 1..=n {
                acc += &self.history[j] * &shifted[n - j][i];
            }
            acc = -acc;
            acc += &self.init_coeff[n] * &self.av[i];
            acc += &self.source_coeff[n] * &self.q[i];
            out.push(acc);
        }
        out
    }
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    config: SchemeConfig,
    nodes: Option<Vec<Float>>,
    initial: Vec<Float>,
    u: Vec<Vec<Float>>,
    shifted: Vec<Vec<Float>>,
    system: Arc<StepSystem>,
}

impl Trajectory {
    pub fn config(&self) -> &SchemeConfig {
        &self.config
    }

    pub fn steps(&self) -> usize {
        self.u.len() - 1
    }

    /// `u^n` at the interior nodes.
    pub fn u(&self, n: usize) -> &[Float] {
        &self.u[n]
    }

    /// `V^n = u^n - v`.
    pub fn shifted(&self, n: usize) -> &[Float] {
        &self.shifted[n]
    }

    pub fn final_u(&self) -> &[Float] {
        &self.u[self.steps()]
    }

    pub fn initial(&self) -> &[Float] {
        &self.initial
    }

    pub fn time(&self, n: usize) -> Float {
        self.config.tau() * n as u32
    }

    /// Infinity norm of `(ω_0 τ^{-α} I - A) V^n - rhs_n`, rebuilt from the
    /// stored history.
    pub fn residual(&self, n: usize) -> Float {
        assert!(n >= 1 && n <= self.steps(), "residual index {n} outside 1..={}", self.steps());
        let prec = self.config.precision;
        let rhs = self.system.rhs(n, &self.shifted, prec);
        let lhs = self.system.matrix.matvec(&self.shifted[n]).expect("square system");
        let diffs: Vec<Float> = lhs.iter().zip(&rhs).map(|(a, b)| a.clone() - b).collect();
        mp::max_abs(&diffs)
    }

    pub fn max_residual(&self) -> Float {
        (1..=self.steps())
            .map(|n| self.residual(n))
            .fold(self.config.precision.zero(), |acc, r| if r > acc { r } else { acc })
    }

    /// Adds `delta` to one stored entry of `V^n` (and `u^n`); for residual probes.
    pub fn perturb(&mut self, n: usize, i: usize, delta: &Float) {
        self.shifted[n][i] += delta;
        self.u[n][i] += delta;
    }

    /// `x,u` at `t = T`, decimal strings at full precision. Scalar runs use
    /// the component index in place of `x`.
    pub fn write_final_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["x", "u"])?;
        for (i, value) in self.final_u().iter().enumerate() {
            let x = match &self.nodes {
                Some(nodes) => mp::to_decimal(&nodes[i]),
                None => i.to_string(),
            };
            w.write_record([x, mp::to_decimal(value)])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// ID`m`-BDF`k` on the Chebyshev Laplacian; `m = 0` runs the baseline.
pub fn march(config: &SchemeConfig, op: &SpatialOperator, v: &[Float], spec: &SourceSpec) -> Result<Trajectory> {
    config.validate()?;
    if op.degree() != config.degree {
        return Err(Error::Config(format!(
            "operator degree {} differs from configured M = {}",
            op.degree(),
            config.degree
        )));
    }
    let q = profile_vector(op, spec);
    let mut traj = march_operator(config, op.laplacian(), v, &q, spec)?;
    traj.nodes = Some(op.interior_points().to_vec());
    Ok(traj)
}

/// Baseline BDF`k` with pointwise source samples; requires `m = 0`.
pub fn march_baseline(config: &SchemeConfig, op: &SpatialOperator, v: &[Float], spec: &SourceSpec) -> Result<Trajectory> {
    if config.m != 0 {
        return Err(Error::InvalidOrder(format!("baseline scheme needs m = 0, got m = {}", config.m)));
    }
    march(config, op, v, spec)
}

/// The scheme for an arbitrary operator matrix `A` and source profile `q`.
pub fn march_operator(
    config: &SchemeConfig,
    a: &DenseMatrix,
    v: &[Float],
    q: &[Float],
    spec: &SourceSpec,
) -> Result<Trajectory> {
    config.validate()?;
    let dim = a.rows();
    if !a.is_square() {
        return Err(Error::Shape { expected: dim, actual: a.cols() });
    }
    if v.len() != dim {
        return Err(Error::Shape { expected: dim, actual: v.len() });
    }
    if q.len() != dim {
        return Err(Error::Shape { expected: dim, actual: q.len() });
    }
    let prec = config.precision;
    let n_steps = config.steps;
    let tau = config.tau();
    let final_time = prec.from_f64(config.final_time);
    let alpha = prec.from_f64(config.alpha);

    let poly = bdf_poly(config.k, prec)?;
    let tau_neg_alpha = tau.clone().pow(&(-alpha.clone()));
    let history: Vec<Float> = frac_power_weights(&poly, &alpha, n_steps)?
        .weights()
        .iter()
        .map(|w| w.clone() * &tau_neg_alpha)
        .collect();

    let smoothing = smoothing_weights(config.k, config.m, n_steps, prec)?;
    let tau_neg_m = tau.clone().pow(-(config.m as i32));

    let mut factorial = prec.one();
    for i in 2..=config.m {
        factorial *= i as u32;
    }
    let init_table: Vec<Float> = (0..=n_steps)
        .map(|n| {
            let t = tau.clone() * n as u32;
            if config.m == 0 {
                prec.one()
            } else {
                t.pow(config.m as u32) / &factorial
            }
        })
        .collect();
    let init_coeff = differentiate_table(&smoothing, &init_table, &tau_neg_m);

    let source_coeff = if spec.is_zero() {
        vec![prec.zero(); n_steps + 1]
    } else {
        let table = if config.m == 0 {
            build_pointwise_table(spec, n_steps, &final_time, config.quad_n, prec)?
        } else {
            build_smoothed_table(spec, config.m, n_steps, &final_time, config.quad_n, prec)?
        };
        differentiate_table(&smoothing, table.values(), &tau_neg_m)
    };

    let av = a.matvec(v)?;
    let matrix = a.shifted_negation(&history[0]);
    let lu = LuFactors::factor(&matrix)?;
    let system = StepSystem { matrix, history, av, q: q.to_vec(), init_coeff, source_coeff };

    let mut shifted: Vec<Vec<Float>> = Vec::with_capacity(n_steps + 1);
    shifted.push(vec![prec.zero(); dim]);
    for n in 1..=n_steps {
        let rhs = system.rhs(n, &shifted, prec);
        shifted.push(lu.solve(&rhs)?);
    }
    let u = shifted
        .iter()
        .map(|vn| vn.iter().zip(v).map(|(a, b)| a.clone() + b).collect())
        .collect();
    Ok(Trajectory {
        config: config.clone(),
        nodes: None,
        initial: v.to_vec(),
        u,
        shifted,
        system: Arc::new(system),
    })
}

/// Coefficients of `δ(ξ)^m` up to lag `min(N, km)`; `[1]` for `m = 0`.
pub fn smoothing_weights(k: usize, m: usize, steps: usize, prec: Precision) -> Result<Vec<Float>> {
    if m == 0 {
        return Ok(vec![prec.one()]);
    }
    let poly = bdf_poly(k, prec)?;
    Ok(int_power_weights(&poly, m, steps.min(k * m))?.weights().to_vec())
}

/// `scale · Σ_{j=0}^{min(n, len-1)} w_j values_{n-j}` for every `n`.
pub fn differentiate_table(weights: &[Float], values: &[Float], scale: &Float) -> Vec<Float> {
    (0..values.len())
        .map(|n| {
            let mut acc = Float::new(scale.prec());
            for (j, w) in weights.iter().enumerate().take(n + 1) {
                acc += w * &values[n - j];
            }
            acc * scale
        })
        .collect()
}

fn profile_vector(op: &SpatialOperator, spec: &SourceSpec) -> Vec<Float> {
    if spec.is_zero() {
        vec![op.precision().zero(); op.interior_len()]
    } else {
        op.sample_interior(spec.spatial_profile())
    }
}
