//! Refinement studies: march a case on a doubling sequence of step counts,
//! compare solutions at `t = T`, and emit the error/rate table.
//!
//! For an N-list `N_1, 2N_1, ...` the row for `N` holds `‖u^{N/2}(T) - u^N(T)‖`
//! and the rate `log2(err_{N/2} / err_N)`, so the coarsest march uses `N_1/2`
//! steps. [`ErrorPairing::Fine`] instead pairs each `N` with
//! `‖u^N - u^{2N}‖`.

use std::fmt::Write as _;
use std::path::Path;

use rug::Float;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::DenseMatrix;
use crate::mp::{self, Precision};
use crate::oracle::{contour_solution_operator, ContourParams};
use crate::source_smoothing::{ScalarFn, SourceMode, SourceSpec, TimeKernelTerm, DEFAULT_QUAD_NODES};
use crate::spatial::{build_spatial, discrete_l2_distance, SpatialOperator, DEFAULT_DEGREE};
use crate::stepper::{march, march_operator, SchemeConfig, Trajectory};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CaseId {
    /// `v = sin(x) sqrt(1 - x^2)`, `g = 0`.
    A,
    /// Same `v`, `g = ((1 + t^μ) * (e^t + 1)) e^x (1 + χ_(0,1)(x))`.
    BConv,
    /// Same `v`, `g = (1 + t^μ)(e^t + 1) e^x (1 + χ_(0,1)(x))`.
    BProd,
    /// `A = -1`, `v = 1`, `g = 0`.
    Scalar,
    /// Same `v`, `g = t^μ e^x (1 + χ_(0,1)(x))`, checked against the contour oracle.
    OracleCompare,
    /// `b-prod` data through the unsmoothed scheme (`m = 0`).
    Baseline,
}

impl CaseId {
    pub fn name(self) -> &'static str {
        match self {
            CaseId::A => "a",
            CaseId::BConv => "b-conv",
            CaseId::BProd => "b-prod",
            CaseId::Scalar => "scalar",
            CaseId::OracleCompare => "oracle-compare",
            CaseId::Baseline => "baseline",
        }
    }

    pub fn parse(text: &str) -> Result<Self> {
        [CaseId::A, CaseId::BConv, CaseId::BProd, CaseId::Scalar, CaseId::OracleCompare, CaseId::Baseline]
            .into_iter()
            .find(|id| id.name() == text)
            .ok_or_else(|| Error::Parse(format!("unknown case id '{text}'")))
    }

    fn needs_mu(self) -> bool {
        matches!(self, CaseId::BConv | CaseId::BProd | CaseId::OracleCompare | CaseId::Baseline)
    }
}

/// Which pair of marches feeds the error of row `N`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ErrorPairing {
    /// `‖u^{N/2} - u^N‖`.
    #[default]
    Coarse,
    /// `‖u^N - u^{2N}‖`.
    Fine,
}

impl ErrorPairing {
    pub fn parse(text: &str) -> Result<Self> {
        match text {
            "coarse" => Ok(ErrorPairing::Coarse),
            "fine" => Ok(ErrorPairing::Fine),
            other => Err(Error::Parse(format!("unknown error pairing '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentCase {
    pub id: CaseId,
    pub alpha: f64,
    #[serde(default)]
    pub mu: Option<f64>,
    pub k: usize,
    pub m: usize,
    #[serde(rename = "N")]
    pub n_list: Vec<usize>,
    #[serde(rename = "M", default = "default_degree")]
    pub degree: usize,
    #[serde(default)]
    pub precision: Precision,
    #[serde(rename = "T", default = "default_time")]
    pub final_time: f64,
    #[serde(default = "default_quad")]
    pub quad_n: usize,
    #[serde(default)]
    pub pairing: ErrorPairing,
}

fn default_degree() -> usize {
    DEFAULT_DEGREE
}

fn default_time() -> f64 {
    1.0
}

fn default_quad() -> usize {
    DEFAULT_QUAD_NODES
}

impl ExperimentCase {
    pub fn new(id: CaseId, alpha: f64, mu: Option<f64>, k: usize, m: usize, n_list: Vec<usize>) -> Self {
        ExperimentCase {
            id,
            alpha,
            mu,
            k,
            m,
            n_list,
            degree: DEFAULT_DEGREE,
            precision: Precision::DEFAULT,
            final_time: 1.0,
            quad_n: DEFAULT_QUAD_NODES,
            pairing: ErrorPairing::Coarse,
        }
    }

    pub fn scheme(&self, steps: usize) -> SchemeConfig {
        SchemeConfig {
            alpha: self.alpha,
            k: self.k,
            m: self.m,
            steps,
            final_time: self.final_time,
            precision: self.precision,
            degree: self.degree,
            quad_n: self.quad_n,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_list.is_empty() {
            return Err(Error::Config("N-list is empty".into()));
        }
        for pair in self.n_list.windows(2) {
            if pair[1] != 2 * pair[0] {
                return Err(Error::Config(format!("N-list must double: {} is followed by {}", pair[0], pair[1])));
            }
        }
        if self.n_list[0] < 2 * self.k {
            return Err(Error::Config(format!("smallest N = {} is below 2k = {}", self.n_list[0], 2 * self.k)));
        }
        if self.id.needs_mu() && self.mu.is_none() {
            return Err(Error::Config(format!("case '{}' needs mu", self.id.name())));
        }
        if let Some(mu) = self.mu {
            if !(mu > -1.0) {
                return Err(Error::Config(format!("mu must exceed -1, got {mu}")));
            }
        }
        if self.id == CaseId::Baseline && self.m != 0 {
            return Err(Error::InvalidOrder(format!("baseline case needs m = 0, got m = {}", self.m)));
        }
        self.scheme(self.n_list[0] / 2).validate()
    }
}

/// Discretized problem data shared by every march of a study.
#[derive(Debug, Clone)]
pub struct Problem {
    pub operator: ProblemOperator,
    pub v: Vec<Float>,
    pub q: Vec<Float>,
    pub spec: SourceSpec,
    /// `Some(μ)` when the source is `t^μ q` (or zero), so the contour oracle applies.
    pub power: Option<f64>,
}

#[derive(Debug, Clone)]
pub enum ProblemOperator {
    Spatial(SpatialOperator),
    Matrix(DenseMatrix),
}

impl Problem {
    pub fn for_case(case: &ExperimentCase) -> Result<Self> {
        let prec = case.precision;
        if case.id == CaseId::Scalar {
            let a = DenseMatrix::from_rows(vec![vec![prec.int(-1)]])?;
            return Ok(Problem {
                operator: ProblemOperator::Matrix(a),
                v: vec![prec.one()],
                q: vec![prec.zero()],
                spec: SourceSpec::none(),
                power: Some(0.0),
            });
        }
        let op = build_spatial(case.degree, prec)?;
        let v = op
            .interior_points()
            .iter()
            .map(|x| x.clone().sin() * (prec.one() - x.clone().square()).sqrt())
            .collect();
        let mu = case.mu.map(|mu| prec.from_f64(mu));
        let profile = ScalarFn::exp_with_indicator();
        let two_terms = |mu: &Float| -> Result<Vec<TimeKernelTerm>> {
            Ok(vec![
                TimeKernelTerm::new(prec.one(), prec.zero(), Some(ScalarFn::exp_plus_one()))?,
                TimeKernelTerm::new(prec.one(), mu.clone(), Some(ScalarFn::exp_plus_one()))?,
            ])
        };
        let (spec, power) = match (case.id, mu) {
            (CaseId::A, _) => (SourceSpec::none(), Some(0.0)),
            (CaseId::BConv, Some(mu)) => {
                (SourceSpec::new(SourceMode::Convolution, two_terms(&mu)?, profile, "(1+t^mu) * (e^t+1)")?, None)
            }
            (CaseId::BProd | CaseId::Baseline, Some(mu)) => {
                (SourceSpec::new(SourceMode::Product, two_terms(&mu)?, profile, "(1+t^mu)(e^t+1)")?, None)
            }
            (CaseId::OracleCompare, Some(mu_f)) => {
                let term = TimeKernelTerm::power(prec.one(), mu_f)?;
                (SourceSpec::new(SourceMode::PurePower, vec![term], profile, "t^mu")?, case.mu)
            }
            (id, None) => return Err(Error::Config(format!("case '{}' needs mu", id.name()))),
            (CaseId::Scalar, _) => unreachable!("handled above"),
        };
        let q = if spec.is_zero() { vec![prec.zero(); op.interior_len()] } else { op.sample_interior(spec.spatial_profile()) };
        Ok(Problem { operator: ProblemOperator::Spatial(op), v, q, spec, power })
    }

    pub fn march(&self, config: &SchemeConfig) -> Result<Trajectory> {
        match &self.operator {
            ProblemOperator::Spatial(op) => march(config, op, &self.v, &self.spec),
            ProblemOperator::Matrix(a) => march_operator(config, a, &self.v, &self.q, &self.spec),
        }
    }

    /// Discrete `l2` distance on the spatial grid; plain Euclidean distance
    /// for matrix problems.
    pub fn distance(&self, a: &[Float], b: &[Float]) -> Result<Float> {
        match &self.operator {
            ProblemOperator::Spatial(op) => discrete_l2_distance(a, b, op),
            ProblemOperator::Matrix(_) => {
                if a.len() != b.len() {
                    return Err(Error::Shape { expected: a.len(), actual: b.len() });
                }
                let prec = Precision::new(a.first().map_or(Precision::DEFAULT.bits(), Float::prec))?;
                let mut acc = prec.zero();
                for (x, y) in a.iter().zip(b) {
                    acc += (x.clone() - y).square();
                }
                Ok(acc.sqrt())
            }
        }
    }

    pub fn oracle(&self, alpha: f64, t: f64, params: &ContourParams) -> Result<Vec<Float>> {
        let mu = self.power.ok_or_else(|| {
            Error::Config(format!("oracle needs a pure-power source, got '{}'", self.spec.description()))
        })?;
        let a = match &self.operator {
            ProblemOperator::Spatial(op) => op.laplacian(),
            ProblemOperator::Matrix(a) => a,
        };
        contour_solution_operator(a, alpha, &self.v, mu, &self.q, t, params)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceRow {
    pub n: usize,
    pub error: Float,
    pub rate: Option<Float>,
}

/// Rows plus the largest step residual over every march of the study.
#[derive(Debug, Clone)]
pub struct Study {
    pub rows: Vec<ConvergenceRow>,
    pub max_residual: Option<Float>,
}

pub fn run_study(case: &ExperimentCase) -> Result<Vec<ConvergenceRow>> {
    Ok(run_study_detailed(case, false)?.rows)
}

/// Marches every `N` of the study (plus `N_1/2`) in parallel. With
/// `verify` set, every step of every march is re-checked through
/// [`Trajectory::residual`].
pub fn run_study_detailed(case: &ExperimentCase, verify: bool) -> Result<Study> {
    case.validate()?;
    let problem = Problem::for_case(case)?;
    study_problem(&problem, case, verify)
}

pub fn study_problem(problem: &Problem, case: &ExperimentCase, verify: bool) -> Result<Study> {
    case.validate()?;
    let steps: Vec<usize> = match case.pairing {
        ErrorPairing::Coarse => std::iter::once(case.n_list[0] / 2).chain(case.n_list.iter().copied()).collect(),
        ErrorPairing::Fine => case.n_list.iter().copied().chain(case.n_list.last().map(|n| 2 * n)).collect(),
    };
    let finals = march_all(problem, case, &steps, verify)?;
    let mut errors = Vec::with_capacity(case.n_list.len());
    for pair in finals.windows(2) {
        errors.push(problem.distance(&pair[0].0, &pair[1].0)?);
    }
    let max_residual = max_of(finals.into_iter().map(|(_, r)| r));
    Ok(Study { rows: rows_from_errors(&case.n_list, errors), max_residual })
}

/// Errors against the contour oracle at `t = T` for each `N` of the list.
pub fn run_oracle_compare(case: &ExperimentCase) -> Result<Vec<ConvergenceRow>> {
    Ok(run_oracle_compare_detailed(case, &ContourParams::default(), false)?.rows)
}

pub fn run_oracle_compare_detailed(case: &ExperimentCase, params: &ContourParams, verify: bool) -> Result<Study> {
    case.validate()?;
    let problem = Problem::for_case(case)?;
    let reference = problem.oracle(case.alpha, case.final_time, params)?;
    let finals = march_all(&problem, case, &case.n_list, verify)?;
    let mut errors = Vec::with_capacity(finals.len());
    for (u, _) in &finals {
        errors.push(problem.distance(u, &reference)?);
    }
    let max_residual = max_of(finals.into_iter().map(|(_, r)| r));
    Ok(Study { rows: rows_from_errors(&case.n_list, errors), max_residual })
}

type MarchOutput = (Vec<Float>, Option<Float>);

fn march_all(problem: &Problem, case: &ExperimentCase, steps: &[usize], verify: bool) -> Result<Vec<MarchOutput>> {
    std::thread::scope(|scope| {
        let handles: Vec<_> = steps
            .iter()
            .map(|&n| {
                let config = case.scheme(n);
                scope.spawn(move || -> Result<MarchOutput> {
                    let traj = problem.march(&config)?;
                    let residual = verify.then(|| traj.max_residual());
                    Ok((traj.final_u().to_vec(), residual))
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("march thread panicked")).collect()
    })
}

fn max_of(values: impl Iterator<Item = Option<Float>>) -> Option<Float> {
    values.flatten().reduce(|a, b| if b > a { b } else { a })
}

/// Rates `log2(e_{i-1}/e_i)`; absent for the first row and whenever an error
/// is zero.
pub fn rows_from_errors(n_list: &[usize], errors: Vec<Float>) -> Vec<ConvergenceRow> {
    let mut rows: Vec<ConvergenceRow> = Vec::with_capacity(errors.len());
    for (i, (n, error)) in n_list.iter().zip(errors).enumerate() {
        let rate = if i == 0 || error.is_zero() || rows[i - 1].error.is_zero() {
            None
        } else {
            Some((rows[i - 1].error.clone() / &error).log2())
        };
        rows.push(ConvergenceRow { n: *n, error, rate });
    }
    rows
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Csv,
    Markdown,
}

impl OutputFormat {
    pub fn parse(text: &str) -> Result<Self> {
        match text {
            "csv" => Ok(OutputFormat::Csv),
            "markdown" | "md" => Ok(OutputFormat::Markdown),
            other => Err(Error::Parse(format!("unknown output format '{other}'"))),
        }
    }
}

pub fn render(rows: &[ConvergenceRow], format: OutputFormat) -> Result<String> {
    if rows.is_empty() {
        return Err(Error::Config("no rows to emit".into()));
    }
    match format {
        OutputFormat::Csv => render_csv(rows),
        OutputFormat::Markdown => Ok(render_markdown(rows)),
    }
}

fn render_csv(rows: &[ConvergenceRow]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["N", "error", "rate"])?;
    for row in rows {
        let rate = row.rate.as_ref().map(mp::to_decimal).unwrap_or_default();
        w.write_record([row.n.to_string(), mp::to_decimal(&row.error), rate])?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv output is ASCII"))
}

/// One column per `N`: errors on the first line, rates below.
fn render_markdown(rows: &[ConvergenceRow]) -> String {
    let mut out = String::from("|      |");
    for row in rows {
        let _ = write!(out, " N={} |", row.n);
    }
    out.push_str("\n|------|");
    for _ in rows {
        out.push_str("------|");
    }
    out.push_str("\n| error |");
    for row in rows {
        let _ = write!(out, " {:.4e} |", row.error.to_f64());
    }
    out.push_str("\n| rate |");
    for row in rows {
        match &row.rate {
            Some(r) => {
                let _ = write!(out, " {:.4} |", r.to_f64());
            }
            None => out.push_str("  |"),
        }
    }
    out.push('\n');
    out
}

pub fn emit(rows: &[ConvergenceRow], format: OutputFormat, path: &Path) -> Result<()> {
    let text = render(rows, format)?;
    std::fs::write(path, text)?;
    Ok(())
}

/// Reads back the CSV written by [`emit`].
pub fn parse_csv(text: &str, prec: Precision) -> Result<Vec<ConvergenceRow>> {
    let mut reader = csv::Reader::from_reader(text.as_bytes());
    let headers = reader.headers()?.clone();
    if headers.iter().collect::<Vec<_>>() != ["N", "error", "rate"] {
        return Err(Error::Parse(format!("unexpected header {headers:?}")));
    }
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record?;
        let n = record[0].parse().map_err(|_| Error::Parse(format!("bad N '{}'", &record[0])))?;
        let error = prec.parse(&record[1])?;
        let rate = if record[2].is_empty() { None } else { Some(prec.parse(&record[2])?) };
        rows.push(ConvergenceRow { n, error, rate });
    }
    Ok(rows)
}
