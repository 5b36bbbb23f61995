use super::*;
use crate::spatial::{build_spatial, discrete_l2_distance, discrete_l2_norm};
use crate::stepper::{march_operator, SchemeConfig};
use crate::source_smoothing::SourceSpec;

fn p() -> Precision {
    Precision::DEFAULT
}

fn scalar(lambda: i64) -> DenseMatrix {
    DenseMatrix::from_rows(vec![vec![p().int(-lambda)]]).unwrap()
}

fn case_a_data(degree: usize) -> (SpatialOperator, Vec<Float>) {
    let op = build_spatial(degree, p()).unwrap();
    let v = op.interior_points().iter().map(|x| x.clone().sin() * (p().one() - x.clone().square()).sqrt()).collect();
    (op, v)
}

fn erfc_form(x: f64) -> Float {
    // E_{1/2}(-x) = e^{x^2} erfc(x)
    let x = p().from_f64(x);
    x.clone().square().exp() * x.erfc()
}

#[test]
fn zero_data_gives_zero() {
    let (op, _) = case_a_data(8);
    let zero = vec![p().zero(); op.interior_len()];
    let u = contour_solution(&op, 0.5, &zero, 0.3, &zero, 1.0, &ContourParams::default()).unwrap();
    assert!(u.iter().all(Float::is_zero));
}

#[test]
fn scalar_contour_matches_closed_form() {
    for x in [1.0, 2.5] {
        // ∂^{1/2}(u - 1) = -λ u at t = 1 gives E_{1/2}(-λ)
        let lambda = x * x;
        let a = DenseMatrix::from_rows(vec![vec![-p().from_f64(lambda)]]).unwrap();
        let u = contour_solution_operator(&a, 0.5, &[p().one()], 0.0, &[p().zero()], 1.0, &ContourParams::default()).unwrap();
        let expected = erfc_form(lambda);
        let diff = (u[0].clone() - &expected).abs();
        assert!(diff < 1e-40, "λ = {lambda}: {} vs {}", u[0], expected);
    }
}

#[test]
fn scalar_power_source_matches_mittag_leffler() {
    // ∂^α u + u = t^μ, u(0) = 0: u = Γ(μ+1) t^{α+μ} E_{α, α+μ+1}(-t^α)
    let (alpha, mu, t) = (0.6, -0.4, 1.5);
    let u = contour_solution_operator(&scalar(1), alpha, &[p().zero()], mu, &[p().one()], t, &ContourParams::default())
        .unwrap();
    let a = p().from_f64(alpha);
    let tf = p().from_f64(t);
    let beta = a.clone() + p().from_f64(mu) + 1u32;
    let ml = mittag_leffler(&a, &beta, &(-tf.clone().pow(&a))).unwrap();
    let expected = (p().from_f64(mu) + 1u32).gamma() * tf.pow(a + p().from_f64(mu)) * ml;
    assert!((u[0].clone() - &expected).abs() < 1e-40, "{} vs {}", u[0], expected);
}

#[test]
fn self_convergence_under_node_and_radius_doubling() {
    let (op, v) = case_a_data(16);
    let q = op.sample_interior(&crate::source_smoothing::ScalarFn::exp_with_indicator());
    let base = ContourParams::default();
    let u1 = contour_solution(&op, 0.3, &v, -0.4, &q, 1.0, &base).unwrap();
    let default_r = (f64::from(p().digits()) * LN_10 + 5.0) / base.theta.cos().abs();
    let doubled = ContourParams { n_ray: 800, n_arc: 200, radius: Some(2.0 * default_r), ..base };
    let u2 = contour_solution(&op, 0.3, &v, -0.4, &q, 1.0, &doubled).unwrap();
    let diff = discrete_l2_distance(&u1, &u2, &op).unwrap();
    assert!(diff < 1e-25, "{}", diff.to_f64());
}

#[test]
fn result_is_independent_of_the_contour() {
    let (op, v) = case_a_data(8);
    let q = op.sample_interior(&crate::source_smoothing::ScalarFn::constant(1.0));
    let t = 0.7;
    let reference = contour_solution(&op, 0.7, &v, 0.3, &q, t, &ContourParams::default()).unwrap();
    for frac in [0.55, 0.6, 0.75] {
        for kt in [0.5, 1.0, 2.0] {
            let params = ContourParams { theta: frac * PI, kappa: Some(kt / t), ..ContourParams::default() };
            let u = contour_solution(&op, 0.7, &v, 0.3, &q, t, &params).unwrap();
            let diff = discrete_l2_distance(&u, &reference, &op).unwrap();
            assert!(diff < 1e-25, "θ = {frac}π, κt = {kt}: {}", diff.to_f64());
        }
    }
}

#[test]
fn full_contour_is_conjugate_symmetric() {
    let (op, v) = case_a_data(8);
    let q = op.sample_interior(&crate::source_smoothing::ScalarFn::exp_plus_one());
    let params = ContourParams::default();
    let full = contour_shift_full(op.laplacian(), 0.4, &v, -0.2, &q, 1.0, &params).unwrap();
    let re: Vec<Float> = full.iter().map(|c| c.re.clone()).collect();
    let im: Vec<Float> = full.iter().map(|c| c.im.clone()).collect();
    let re_norm = discrete_l2_norm(&re, &op).unwrap();
    assert!(discrete_l2_norm(&im, &op).unwrap() <= re_norm * 1e-25);
    // and the real part is the symmetric half-contour result
    let half = contour_solution(&op, 0.4, &v, -0.2, &q, 1.0, &params).unwrap();
    let shift: Vec<Float> = half.iter().zip(&v).map(|(u, vi)| u.clone() - vi).collect();
    assert!(discrete_l2_distance(&shift, &re, &op).unwrap() < 1e-40);
}

#[test]
fn recovers_initial_value_at_small_time() {
    let op = build_spatial(16, p()).unwrap();
    let half_pi = p().pi() / 2u32;
    let v: Vec<Float> = op.interior_points().iter().map(|x| ((x.clone() + 1u32) * &half_pi).sin()).collect();
    let zero = vec![p().zero(); v.len()];
    let u = contour_solution(&op, 0.9, &v, 0.0, &zero, 1e-3, &ContourParams::default()).unwrap();
    let gap = discrete_l2_distance(&u, &v, &op).unwrap();
    assert!(gap < 1e-2, "{}", gap.to_f64());
    assert!(gap > 0);
}

#[test]
fn contour_rejects_bad_parameters() {
    let a = scalar(1);
    let one = [p().one()];
    let zero = [p().zero()];
    let run = |params: ContourParams, t: f64| contour_solution_operator(&a, 0.5, &one, 0.0, &zero, t, &params);
    assert!(matches!(run(ContourParams::default(), 0.0), Err(Error::Domain(_))));
    assert!(matches!(run(ContourParams { theta: 0.4 * PI, ..Default::default() }, 1.0), Err(Error::Config(_))));
    assert!(matches!(run(ContourParams { radius: Some(0.5), ..Default::default() }, 1.0), Err(Error::Config(_))));
    assert!(matches!(run(ContourParams { radius: Some(20.0), ..Default::default() }, 1.0), Err(Error::Accuracy(_))));
}

#[test]
fn ray_layout_is_graded_then_uniform() {
    let breaks = ray_breaks(1.0, 258.0, 1.0, 400);
    assert_eq!(breaks[0], 1.0);
    assert_eq!(*breaks.last().unwrap(), 258.0);
    assert!(breaks.len() - 1 >= 400usize.div_ceil(PANEL_NODES));
    for pair in breaks.windows(2) {
        assert!(pair[1] > pair[0]);
        assert!(pair[1] - pair[0] <= PANEL_SPAN + 1e-9);
    }
    assert_eq!(&breaks[..4], &[1.0, 2.0, 4.0, 8.0]);
}

#[test]
fn mittag_leffler_exponential_case() {
    let one = p().one();
    for z in [-3.7, 0.25, 10.0, -50.0] {
        let zf = p().from_f64(z);
        let e = mittag_leffler(&one, &one, &zf).unwrap();
        let expected = zf.exp();
        assert!(((e - &expected) / &expected).abs() < 1e-70, "z = {z}");
    }
}

#[test]
fn mittag_leffler_at_zero() {
    let beta = p().from_f64(1.7);
    let value = mittag_leffler(&p().from_f64(0.3), &beta, &p().zero()).unwrap();
    assert_eq!(value, beta.gamma().recip());
}

#[test]
fn mittag_leffler_matches_long_partial_sum() {
    let wide = 1024;
    let z = Float::with_val(wide, -1);
    // Γ(j/2 + 1) by separate recurrences for even and odd j
    let partial = |terms: usize| {
        let mut gamma_even = Float::with_val(wide, 1); // Γ(1)
        let mut gamma_odd = Float::with_val(wide, Float::with_val(wide, rug::float::Constant::Pi).sqrt() / 2u32); // Γ(3/2)
        let mut power = Float::with_val(wide, 1);
        let mut sum = Float::with_val(wide, 0);
        for j in 0..terms {
            let g = if j % 2 == 0 { &mut gamma_even } else { &mut gamma_odd };
            sum += power.clone() / &*g;
            // advance Γ(x) to Γ(x + 1)
            let x = Float::with_val(wide, j + 2) / 2u32;
            *g *= x;
            power *= &z;
        }
        sum
    };
    let s10k = partial(10_000);
    let s11k = partial(11_000);
    assert_eq!(s10k, s11k);
    let value = mittag_leffler(&p().ratio(1, 2), &p().one(), &p().int(-1)).unwrap();
    assert!((value.clone() - p().of(&s10k)).abs() < 1e-75);
    assert!((value - erfc_form(1.0)).abs() < 1e-75);
}

#[test]
fn mittag_leffler_far_argument() {
    for x in [5.0, 7.0] {
        let value = mittag_leffler(&p().ratio(1, 2), &p().one(), &p().from_f64(-x)).unwrap();
        let expected = erfc_form(x);
        assert!(((value - &expected) / &expected).abs() < 1e-70, "x = {x}");
    }
}

#[test]
fn mittag_leffler_domain() {
    let one = p().one();
    assert!(matches!(mittag_leffler(&one, &one, &p().int(51)), Err(Error::Domain(_))));
    assert!(matches!(mittag_leffler(&p().from_f64(1.2), &one, &one), Err(Error::Domain(_))));
    assert!(matches!(mittag_leffler(&p().from_f64(0.05), &one, &p().int(-50)), Err(Error::Domain(_))));
}

#[test]
fn scalar_reference_special_cases() {
    let v = p().from_f64(2.5);
    let lambda = p().from_f64(1.3);
    assert_eq!(scalar_reference(&p().ratio(1, 2), &lambda, &v, &p().zero()).unwrap(), v);
    let t = p().from_f64(0.8);
    let value = scalar_reference(&p().one(), &lambda, &v, &t).unwrap();
    let expected = (-(lambda.clone() * &t)).exp() * &v;
    assert!((value - expected).abs() < 1e-70);
    assert!(matches!(scalar_reference(&p().one(), &p().zero(), &v, &t), Err(Error::Domain(_))));
}

#[test]
fn scalar_reference_matches_extrapolated_march() {
    let a = scalar(1);
    let run = |n: usize| {
        let cfg = SchemeConfig::new(0.5, 1, 1, n);
        march_operator(&cfg, &a, &[p().one()], &[p().zero()], &SourceSpec::none()).unwrap().final_u()[0].clone()
    };
    let (coarse, fine) = (run(800), run(1600));
    let extrapolated = fine * 2u32 - coarse;
    let reference = scalar_reference(&p().ratio(1, 2), &p().one(), &p().one(), &p().one()).unwrap();
    assert!((extrapolated - reference).abs() < 1e-6);
}
