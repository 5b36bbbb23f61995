//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Rate-table runs pair each column `N` with `‖u^N - u^{2N}‖`, so every
//! study marches `N = 200, 400, 800, 1600`.

use std::process::ExitCode;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rug::ops::Pow;
use rug::Float;
use subdiffcq_core::cq_weights::{
    bdf_poly, eulerian_coeffs, frac_power_weights, frac_power_weights_fft, int_power_weights, MAX_EULERIAN_ROW,
};
use subdiffcq_core::harness::{
    run_oracle_compare_detailed, run_study_detailed, CaseId, ConvergenceRow, ErrorPairing, ExperimentCase, Problem,
};
use subdiffcq_core::oracle::ContourParams;
use subdiffcq_core::Precision;

const SEED: u64 = 0x5eed_cafe;

struct Ledger {
    max_residual: Float,
    marches: usize,
}

impl Ledger {
    fn record(&mut self, residual: Option<Float>, marches: usize) {
        let r = residual.expect("studies run with residual verification");
        if r > self.max_residual {
            self.max_residual = r;
        }
        self.marches += marches;
    }
}

struct Verdict {
    pass: bool,
    lines: Vec<String>,
}

impl Verdict {
    fn new() -> Self {
        Verdict { pass: true, lines: Vec::new() }
    }

    fn check(&mut self, ok: bool, line: String) {
        self.pass &= ok;
        self.lines.push(format!("    {} {line}", if ok { "ok  " } else { "FAIL" }));
    }
}

fn table_case(id: CaseId, alpha: f64, mu: Option<f64>, k: usize, m: usize) -> ExperimentCase {
    ExperimentCase { pairing: ErrorPairing::Fine, ..ExperimentCase::new(id, alpha, mu, k, m, vec![200, 400, 800]) }
}

fn study(case: &ExperimentCase, ledger: &mut Ledger) -> Result<Vec<ConvergenceRow>, String> {
    let s = run_study_detailed(case, true).map_err(|e| e.to_string())?;
    ledger.record(s.max_residual, case.n_list.len() + 1);
    Ok(s.rows)
}

fn rate(row: &ConvergenceRow) -> f64 {
    row.rate.as_ref().map_or(f64::NAN, Float::to_f64)
}

fn fmt_rows(rows: &[ConvergenceRow]) -> String {
    rows.iter()
        .map(|r| match &r.rate {
            Some(rt) => format!("N={} {:.4e} ({:.4})", r.n, r.error.to_f64(), rt.to_f64()),
            None => format!("N={} {:.4e}", r.n, r.error.to_f64()),
        })
        .collect::<Vec<_>>()
        .join(", ")
}

/// Checks the rates of rows 400 and 800 against `expected` within `tol`.
fn check_rates(v: &mut Verdict, label: &str, rows: &[ConvergenceRow], expected: [f64; 2], tol: f64) {
    let got = [rate(&rows[1]), rate(&rows[2])];
    let ok = got.iter().zip(expected).all(|(g, e)| (g - e).abs() <= tol);
    v.check(ok, format!("{label}: rates {:.4}/{:.4} vs {:.4}/{:.4} ± {tol}; {}", got[0], got[1], expected[0], expected[1], fmt_rows(rows)));
}

fn criterion_1(ledger: &mut Ledger) -> Verdict {
    let mut v = Verdict::new();
    let targets = [(1, [2.00, 2.00]), (2, [4.05, 4.01]), (4, [6.06, 6.03]), (5, [6.06, 6.03]), (6, [6.06, 6.03])];
    for alpha in [0.3, 0.7] {
        for (m, expected) in targets {
            let label = format!("case a, alpha={alpha}, k=6, m={m}");
            match study(&table_case(CaseId::A, alpha, None, 6, m), ledger) {
                Ok(rows) => check_rates(&mut v, &label, &rows, expected, 0.2),
                Err(e) => v.check(false, format!("{label}: {e}")),
            }
        }
    }
    v
}

fn criterion_2(ledger: &mut Ledger) -> Verdict {
    let mut v = Verdict::new();
    let table = [
        (1, [1.6138, 1.61033], [5.6978e-06, 1.8615e-06, 6.0971e-07]),
        (2, [2.5933, 2.59671], [4.7855e-09, 7.9295e-10, 1.3108e-10]),
        (3, [3.6725, 3.62449], [1.7095e-11, 1.3407e-12, 1.0870e-13]),
        (4, [6.1494, 6.2981], [9.9716e-13, 1.4047e-14, 1.7852e-16]),
    ];
    for (m, rates, errors) in table {
        let label = format!("b-prod, alpha=0.3, mu=-0.4, k=6, m={m}");
        match study(&table_case(CaseId::BProd, 0.3, Some(-0.4), 6, m), ledger) {
            Ok(rows) => {
                check_rates(&mut v, &label, &rows, rates, 0.25);
                let ratios: Vec<f64> = rows.iter().zip(errors).map(|(r, e)| r.error.to_f64() / e).collect();
                let ok = ratios.iter().all(|q| (0.1..=10.0).contains(q));
                v.check(ok, format!("{label}: error / table = {:.3?}", ratios));
            }
            Err(e) => v.check(false, format!("{label}: {e}")),
        }
    }
    v
}

fn criterion_3(ledger: &mut Ledger) -> Verdict {
    let mut v = Verdict::new();
    for (m, expected, tol) in [(1, [2.00, 2.00], 0.1), (4, [6.0449, 6.0221], 0.2)] {
        let label = format!("b-conv, alpha=0.7, mu=0.3, k=6, m={m}");
        match study(&table_case(CaseId::BConv, 0.7, Some(0.3), 6, m), ledger) {
            Ok(rows) => check_rates(&mut v, &label, &rows, expected, tol),
            Err(e) => v.check(false, format!("{label}: {e}")),
        }
    }
    v
}

fn criterion_4(ledger: &mut Ledger) -> Verdict {
    let mut v = Verdict::new();
    let runs = [
        ("BDF2 baseline", CaseId::Baseline, 2, 0, [0.62, 0.62], 0.15),
        ("ID2-BDF2", CaseId::BProd, 2, 2, [2.00, 2.00], 0.1),
        ("ID4-BDF4", CaseId::BProd, 4, 4, [4.00, 4.00], 0.1),
    ];
    for (name, id, k, m, expected, tol) in runs {
        let label = format!("{name}, b-prod, alpha=0.3, mu=-0.4");
        match study(&table_case(id, 0.3, Some(-0.4), k, m), ledger) {
            Ok(rows) => check_rates(&mut v, &label, &rows, expected, tol),
            Err(e) => v.check(false, format!("{label}: {e}")),
        }
    }
    v
}

/// Least-squares slope of `log y` against `log x`.
fn fitted_slope(x: &[f64], y: &[f64]) -> f64 {
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let cov: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let var: f64 = lx.iter().map(|a| (a - mx).powi(2)).sum();
    cov / var
}

fn criterion_5(ledger: &mut Ledger) -> Verdict {
    let mut v = Verdict::new();
    for alpha in [0.3, 0.7] {
        let label = format!("case a vs contour oracle, alpha={alpha}, k=6, m=4");
        let case = ExperimentCase::new(CaseId::A, alpha, None, 6, 4, vec![100, 200, 400, 800]);
        match run_oracle_compare_detailed(&case, &ContourParams::default(), true) {
            Ok(s) => {
                ledger.record(s.max_residual, case.n_list.len());
                let n: Vec<f64> = s.rows.iter().map(|r| r.n as f64).collect();
                let e: Vec<f64> = s.rows.iter().map(|r| r.error.to_f64()).collect();
                let order = -fitted_slope(&n, &e);
                v.check(order >= 5.7, format!("{label}: fitted order {order:.4} (>= 5.7); {}", fmt_rows(&s.rows)));
            }
            Err(e) => v.check(false, format!("{label}: {e}")),
        }
    }
    let case = ExperimentCase::new(CaseId::A, 0.5, None, 6, 4, vec![100]);
    let result = Problem::for_case(&case).and_then(|problem| {
        let base = ContourParams::default();
        let doubled = ContourParams { n_ray: 2 * base.n_ray, n_arc: 2 * base.n_arc, ..base.clone() };
        let u1 = problem.oracle(0.5, 1.0, &base)?;
        let u2 = problem.oracle(0.5, 1.0, &doubled)?;
        problem.distance(&u1, &u2)
    });
    match result {
        Ok(d) => v.check(d < 1e-25, format!("contour self-convergence under node doubling: {:.3e} (<= 1e-25)", d.to_f64())),
        Err(e) => v.check(false, format!("contour self-convergence: {e}")),
    }
    v
}

fn criterion_6() -> Verdict {
    let mut v = Verdict::new();
    let prec = Precision::DEFAULT;
    let tol = prec.tolerance(10);
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let scaled_gap = |a: &Float, b: &Float| -> f64 {
        let scale = a.clone().abs().max(&Float::with_val(a.prec(), 1));
        ((a.clone() - b).abs() / scale).to_f64()
    };

    let (mut worst, mut trials) = (0.0f64, 0);
    for _ in 0..24 {
        let k = rng.gen_range(1..=6);
        let n = rng.gen_range(1..=64);
        let pv = prec.from_f64(rng.gen_range(0.01..1.99));
        let qv = prec.from_f64(rng.gen_range(0.01..1.99));
        let poly = bdf_poly(k, prec).unwrap();
        let wp = frac_power_weights(&poly, &pv, n).unwrap();
        let wq = frac_power_weights(&poly, &qv, n).unwrap();
        let wpq = frac_power_weights(&poly, &(pv + &qv), n).unwrap();
        for j in 0..=n {
            let mut conv = prec.zero();
            for i in 0..=j {
                conv += &wp.weights()[i] * &wq.weights()[j - i];
            }
            worst = worst.max(scaled_gap(&wpq.weights()[j], &conv));
        }
        trials += 1;
    }
    v.check(worst <= tol, format!("composition law w(p)*w(q) = w(p+q): {trials} draws, worst {worst:.2e} (<= {tol:.0e})"));

    let (mut worst, mut trials) = (0.0f64, 0);
    for _ in 0..12 {
        let k = rng.gen_range(1..=6);
        let n = rng.gen_range(8..=64);
        let alpha = prec.from_f64(rng.gen_range(0.01..0.99));
        let poly = bdf_poly(k, prec).unwrap();
        let rec = frac_power_weights(&poly, &alpha, n).unwrap();
        let fft = frac_power_weights_fft(&poly, &alpha, n).unwrap();
        for (a, b) in rec.weights().iter().zip(fft.weights()) {
            worst = worst.max(scaled_gap(a, b));
        }
        trials += 1;
    }
    v.check(worst <= tol, format!("recurrence vs FFT: {trials} draws, worst {worst:.2e} (<= {tol:.0e})"));

    let (mut worst, mut support_ok) = (0.0f64, true);
    for k in 1..=6 {
        for m in 1..=k {
            let poly = bdf_poly(k, prec).unwrap();
            let n = k * m + 8;
            let int = int_power_weights(&poly, m, n).unwrap();
            let frac = frac_power_weights(&poly, &prec.int(m as i64), n).unwrap();
            for (a, b) in int.weights().iter().zip(frac.weights()) {
                worst = worst.max(scaled_gap(a, b));
            }
            support_ok &= int.weights()[k * m + 1..].iter().all(Float::is_zero);
        }
    }
    v.check(
        worst <= tol && support_ok,
        format!("integer powers: repeated product vs recurrence worst {worst:.2e}, zero beyond km: {support_ok}"),
    );

    let mut eulerian_ok = true;
    for l in 1..=MAX_EULERIAN_ROW {
        let row = eulerian_coeffs(l).unwrap();
        let a = row.coeffs();
        let symmetric = (0..l).all(|j| a[j] == a[l - 1 - j]);
        let factorial: u64 = (1..=l as u64).product();
        eulerian_ok &= symmetric && a.iter().sum::<u64>() == factorial;
    }
    v.check(eulerian_ok, format!("Eulerian rows 1..={MAX_EULERIAN_ROW}: symmetric with row sum l!"));
    v
}

fn criterion_7() -> Verdict {
    let mut v = Verdict::new();
    let prec = Precision::DEFAULT;
    for l in 1..=6usize {
        let row = eulerian_coeffs(l).unwrap();
        let factorial: u64 = (1..=l as u64).product();
        let mut etas = Vec::new();
        let mut gaps = Vec::new();
        for e in 3..=10 {
            let eta = Float::with_val(prec.bits(), Float::u_exp(1, -e));
            let scaled = row.gamma_at_exp_neg(&eta) / factorial * eta.clone().pow(l as u32 + 1);
            gaps.push((scaled - 1u32).abs().to_f64());
            etas.push(eta.to_f64());
        }
        let slope = fitted_slope(&etas, &gaps);
        let need = if l % 2 == 1 { l as f64 + 0.9 } else { l as f64 + 1.9 };
        v.check(slope >= need, format!("l={l}: slope {slope:.4} (>= {need})"));
    }
    v
}

fn main() -> ExitCode {
    let start = Instant::now();
    let mut ledger = Ledger { max_residual: Precision::DEFAULT.zero(), marches: 0 };
    let mut all_pass = true;
    let mut report = |n: usize, title: &str, verdict: Verdict, t: Instant| {
        all_pass &= verdict.pass;
        println!(
            "criterion {n}: {} {title} ({:.1}s)",
            if verdict.pass { "PASS" } else { "FAIL" },
            t.elapsed().as_secs_f64()
        );
        for line in verdict.lines {
            println!("{line}");
        }
    };

    let t = Instant::now();
    let v = criterion_1(&mut ledger);
    report(1, "case (a) rate table, k=6", v, t);
    let t = Instant::now();
    let v = criterion_2(&mut ledger);
    report(2, "case (b) product rate and error table", v, t);
    let t = Instant::now();
    let v = criterion_3(&mut ledger);
    report(3, "case (b) convolution rates", v, t);
    let t = Instant::now();
    let v = criterion_4(&mut ledger);
    report(4, "order reduction of the unsmoothed baseline", v, t);
    let t = Instant::now();
    let v = criterion_5(&mut ledger);
    report(5, "march vs contour oracle", v, t);
    let t = Instant::now();
    let v = criterion_6();
    report(6, "algebraic weight suite", v, t);
    let t = Instant::now();
    let v = criterion_7();
    report(7, "Eulerian generating-function slope test", v, t);

    let t = Instant::now();
    let mut v = Verdict::new();
    let worst = ledger.max_residual.to_f64();
    v.check(worst <= 1e-40, format!("{} marches, largest step residual {worst:.3e} (<= 1e-40)", ledger.marches));
    report(8, "step residuals", v, t);

    println!("total {:.1}s", start.elapsed().as_secs_f64());
    if all_pass {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
