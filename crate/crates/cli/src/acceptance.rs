//! Criterion checks behind `validate`.
//!
//! Each check returns a [`CriterionReport`] with one verdict line and the
//! measured quantities behind it. Checks that a closed-form claim turns out
//! not to support are still asserted as stated and report honest failures,
//! with the diagnostics needed to see what the numbers actually do.

use crate::experiments::{
    rate_regime, reference_medium, split_state, CONTINUATION_STEPS,
};
use crate::RunError;
use kerrcat::atomic::{
    figure_of_merit, kerr_rate_chi, lambda_pk_approx, lambda_si, pk_matrix, tracked_eigenvalue,
    tracked_eigenvalue_pk, tracked_eigenvalue_si, FourLevelParams, SixLevelParams, HBAR,
};
use kerrcat::fock::{
    coherent_state, fidelity, partial_trace, reduced_density, superposition, trace_distance,
    truncation_dim, DensityOperator, FockError, ModeOperator, PureState, SpaceSpec,
};
use kerrcat::linalg::max_abs_diff;
use kerrcat::measure::{
    analytic_pdf_in_phase, analytic_pdf_out_phase, duan_s, duan_s_with_loss, onoff_povm,
    p_two_clicks, p_two_clicks_analytic, quadrature_pdf, s_perfect_analytic,
    two_clicks_visibility, DuanConfig, HomodyneSetting,
};
use kerrcat::optics::{
    beam_splitter, cross_kerr, displacement, loss_channel, BeamSplitterSpec, KerrPhase,
};
use kerrcat::protocol::{
    even_cat, generate_entangled_state, rotated_ecs, rotation_coincidence, EcsSpec, ProtocolError,
};
use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::{FRAC_PI_2, PI, SQRT_2, TAU};

const A1_MIN_FIDELITY: f64 = 1.0 - 1e-9;
const A2_CLOSED_FORM_TOL: f64 = 1e-6;
const A2_SCORE_AT_TWO: f64 = 1.995;
const A2_SCORE_AT_TWO_TOL: f64 = 2e-3;
const A2_PEAK_DEVIATION: f64 = 0.28;
const A2_PEAK_DEVIATION_TOL: f64 = 0.01;
const A3_FLOOR_SLACK: f64 = 1e-8;
const A3_Q: [f64; 3] = [0.5, 1.0, 2.0];
const A4_MAX_ABS_ERR: f64 = 1e-6;
const A4_WAVENUMBER_REL: f64 = 0.01;
const A5_ETAS: [f64; 3] = [1.0, 0.8, 0.4];
const A6_ABS_TOL: f64 = 1e-8;
const A6_VISIBILITY_TOL: f64 = 1e-4;
const A7_MAX_REL: f64 = 0.02;
const A8_PHASE_WINDOW: f64 = 10.0;
const A8_MIN_MERIT: f64 = 10.0;
const A9_CHANNEL_REL: f64 = 0.05;
const A10_OPERATOR_TOL: f64 = 1e-10;
const A10_EXACT_TOL: f64 = 1e-12;
const A10_PDF_TOL: f64 = 1e-6;

#[derive(Debug, Clone)]
pub struct CriterionReport {
    pub id: &'static str,
    pub title: &'static str,
    pub passed: bool,
    pub details: Vec<String>,
}

impl CriterionReport {
    fn new(id: &'static str, title: &'static str) -> Self {
        Self {
            id,
            title,
            passed: true,
            details: Vec::new(),
        }
    }

    fn clause(&mut self, ok: bool, text: impl Into<String>) {
        self.passed &= ok;
        let mark = if ok { "ok  " } else { "FAIL" };
        self.details.push(format!("{mark} {}", text.into()));
    }

    fn info(&mut self, text: impl Into<String>) {
        self.details.push(format!("note {}", text.into()));
    }

    fn error(&mut self, err: RunError) {
        self.passed = false;
        self.details.push(format!("FAIL aborted: {err}"));
    }

    pub fn verdict_line(&self) -> String {
        let verdict = if self.passed { "PASS" } else { "FAIL" };
        format!("{} {verdict} {}", self.id, self.title)
    }

    pub fn render(&self) -> String {
        let mut out = self.verdict_line();
        for line in &self.details {
            out.push_str("\n    ");
            out.push_str(line);
        }
        out
    }
}

pub fn run_all(fast: bool) -> Vec<CriterionReport> {
    vec![
        a1(fast),
        a2(fast),
        a3(fast),
        a4(fast),
        a5(fast),
        a6(fast),
        a7(fast),
        a8(fast),
        a9(fast),
        a10(fast),
    ]
}

pub fn summary_line(reports: &[CriterionReport]) -> String {
    let passed = reports.iter().filter(|r| r.passed).count();
    format!("passed {passed} of {} criteria", reports.len())
}

macro_rules! criterion {
    ($name:ident, $with_body:ident, $id:literal, $title:literal) => {
        pub fn $name(fast: bool) -> CriterionReport {
            let mut report = CriterionReport::new($id, $title);
            if let Err(err) = $with_body(fast, &mut report) {
                report.error(err);
            }
            report
        }
    };
}

criterion!(
    a1,
    a1_body,
    "A1",
    "pi cross-Kerr splits a coherent pair into signed parity branches"
);

fn a1_body(_fast: bool, r: &mut CriterionReport) -> Result<(), RunError> {
    for (alpha, gamma) in [(0.5, 0.5), (1.0, 1.0), (2.0, 1.5)] {
        let psi = generate_entangled_state(alpha, gamma, PI)?;
        let da = truncation_dim(alpha);
        let db = truncation_dim(gamma);
        let ap = coherent_state(Complex64::new(alpha, 0.0), da)?;
        let am = coherent_state(Complex64::new(-alpha, 0.0), da)?;
        let gp = coherent_state(Complex64::new(gamma, 0.0), db)?;
        let gm = coherent_state(Complex64::new(-gamma, 0.0), db)?;
        let half = Complex64::new(0.5, 0.0);
        let target = superposition(&[
            (half, &ap.tensor(&gp)?),
            (half, &ap.tensor(&gm)?),
            (half, &am.tensor(&gp)?),
            (-half, &am.tensor(&gm)?),
        ])?
        .normalized()?;
        let f = fidelity(&psi, &target)?;
        r.clause(
            f >= A1_MIN_FIDELITY,
            format!("alpha = {alpha}, gamma = {gamma}: branch-split infidelity {:.1e}", 1.0 - f),
        );
    }
    Ok(())
}

criterion!(
    a2,
    a2_exact_body,
    "A2",
    "split-cat score matches its closed form and dips 28 percent"
);

fn a2_exact_body(fast: bool, r: &mut CriterionReport) -> Result<(), RunError> {
    a2_body(fast, 1.0, r)
}

/// Negative-control entry: scales the closed form so a biased constant must
/// be caught by the first clause.
pub fn a2_with_scale(fast: bool, closed_form_scale: f64) -> CriterionReport {
    let mut report = CriterionReport::new("A2", "split-cat score matches its closed form and dips 28 percent");
    if let Err(err) = a2_body(fast, closed_form_scale, &mut report) {
        report.error(err);
    }
    report
}

fn split_score(gamma: f64, duan: &DuanConfig) -> Result<f64, RunError> {
    let rho = split_state(gamma, 1.0, None)?;
    Ok(duan_s(&rho, duan)?.s)
}

fn a2_body(fast: bool, closed_form_scale: f64, r: &mut CriterionReport) -> Result<(), RunError> {
    let duan = DuanConfig::default();
    let mut worst = 0.0_f64;
    for k in 0..=25 {
        let gamma = 0.1 * k as f64;
        let s = split_score(gamma, &duan)?;
        let target = closed_form_scale * s_perfect_analytic(gamma);
        worst = worst.max((s - target).abs());
    }
    r.clause(
        worst < A2_CLOSED_FORM_TOL,
        format!("max |numeric - closed form| = {worst:.1e} for gamma in [0, 2.5]"),
    );
    let s2 = split_score(2.0, &duan)?;
    r.clause(
        (s2 - A2_SCORE_AT_TWO).abs() <= A2_SCORE_AT_TWO_TOL,
        format!("S(2) = {s2:.6} within {A2_SCORE_AT_TWO} +- {A2_SCORE_AT_TWO_TOL}"),
    );
    let step = if fast { 0.01 } else { 0.005 };
    let n = ((1.1_f64 - 0.5) / step).round() as usize;
    let mut peak = (0.0_f64, 0.0_f64);
    for k in 0..=n {
        let gamma = 0.5 + step * k as f64;
        let dev = (2.0 - split_score(gamma, &duan)?) / 2.0;
        if dev > peak.0 {
            peak = (dev, gamma);
        }
    }
    r.clause(
        (peak.0 - A2_PEAK_DEVIATION).abs() <= A2_PEAK_DEVIATION_TOL,
        format!(
            "deepest drop below the bound is {:.2}% at gamma = {:.3}",
            100.0 * peak.0,
            peak.1
        ),
    );
    Ok(())
}

criterion!(
    a3,
    a3_body,
    "A3",
    "separable inputs never fall below the correlation floor"
);

fn random_disc(rng: &mut ChaCha8Rng, radius: f64) -> Complex64 {
    let r = radius * rng.gen::<f64>().sqrt();
    Complex64::from_polar(r, TAU * rng.gen::<f64>())
}

fn a3_body(fast: bool, r: &mut CriterionReport) -> Result<(), RunError> {
    let n_samples = if fast { 50 } else { 200 };
    let dim = 32;
    let space = SpaceSpec::new(vec![dim, dim])?;
    let total = space.total_dim();
    let mut rng = ChaCha8Rng::seed_from_u64(0x6b65_7272);
    let mut min_slack = f64::INFINITY;
    for _ in 0..n_samples {
        let branches = rng.gen_range(1..=3);
        let weights: Vec<f64> = (0..branches).map(|_| rng.gen_range(0.05..1.0)).collect();
        let weight_sum: f64 = weights.iter().sum();
        let mut m = DMatrix::<Complex64>::zeros(total, total);
        for w in &weights {
            let prod = coherent_state(random_disc(&mut rng, 1.2), dim)?
                .tensor(&coherent_state(random_disc(&mut rng, 1.2), dim)?)?;
            let amps = prod.amplitudes();
            let scale = Complex64::new(w / weight_sum, 0.0);
            for i in 0..total {
                let left = amps[i] * scale;
                for j in 0..total {
                    m[(i, j)] += left * amps[j].conj();
                }
            }
        }
        let (rho, _) = DensityOperator::from_unnormalized(space.clone(), m)?;
        for q in A3_Q {
            let score = duan_s(&rho, &DuanConfig::new(q)?)?;
            min_slack = min_slack.min(score.s - score.bound);
        }
    }
    r.clause(
        min_slack >= -A3_FLOOR_SLACK,
        format!(
            "{n_samples} sampled product and classical-mixture states: min slack above q^2 + 1/q^2 is {min_slack:.2e} for q in {A3_Q:?}"
        ),
    );
    let gammas: &[f64] = if fast { &[0.8] } else { &[0.4, 0.8, 1.2] };
    let mut mix_slack = f64::INFINITY;
    let mut worst_two = 0.0_f64;
    for &gamma in gammas {
        let rho = split_state(gamma, 0.0, None)?;
        for q in A3_Q {
            let score = duan_s(&rho, &DuanConfig::new(q)?)?;
            mix_slack = mix_slack.min(score.s - score.bound);
            if q == 1.0 {
                worst_two = worst_two.max((score.s - 2.0).abs());
            }
        }
    }
    r.clause(
        mix_slack >= -A3_FLOOR_SLACK && worst_two < 1e-9,
        format!(
            "incoherent split mixtures sit on the floor: min slack {mix_slack:.2e}, |S - 2| at q = 1 up to {worst_two:.1e}"
        ),
    );
    Ok(())
}

criterion!(
    a4,
    a4_body,
    "A4",
    "homodyne distributions match the closed forms, hills and fringes included"
);

fn argmax_nonnegative(xs: &[f64], ys: &[f64]) -> usize {
    let mut best = None;
    for (i, (x, y)) in xs.iter().zip(ys).enumerate() {
        if *x < 0.0 {
            continue;
        }
        match best {
            Some((_, by)) if by >= *y => {}
            _ => best = Some((i, *y)),
        }
    }
    best.expect("covering grid reaches x = 0").0
}

fn fit_wavenumber(xs: &[f64], ps: &[f64], gamma: f64) -> f64 {
    // least-squares cos(k h) from the three-term identity
    // r(x - h) + r(x + h) = 2 cos(k h) r(x) on r = P Z e^{x^2} - 1
    let z = PI.sqrt() * (1.0 + (-2.0 * gamma * gamma).exp());
    let h = xs[1] - xs[0];
    let r: Vec<f64> = xs
        .iter()
        .zip(ps)
        .filter(|(x, _)| x.abs() <= 3.0)
        .map(|(x, p)| p * z * (x * x).exp() - 1.0)
        .collect();
    let mut num = 0.0;
    let mut den = 0.0;
    for j in 1..r.len() - 1 {
        num += r[j] * (r[j - 1] + r[j + 1]);
        den += 2.0 * r[j] * r[j];
    }
    (num / den).clamp(-1.0, 1.0).acos() / h
}

fn a4_body(fast: bool, r: &mut CriterionReport) -> Result<(), RunError> {
    let gammas: &[f64] = if fast { &[1.0, 2.0] } else { &[0.5, 1.0, 1.5, 2.0] };
    let etas: &[f64] = if fast { &[0.1, 0.8, 1.0] } else { &[0.1, 0.4, 0.8, 0.95, 1.0] };
    let mut combos = 0;
    let mut max_err = 0.0_f64;
    let mut hill_misses: Vec<String> = Vec::new();
    let mut peak_route_steps = 0.0_f64;
    let mut k_worst = 0.0_f64;
    for &gamma in gammas {
        let rho = even_cat(gamma, truncation_dim(gamma))?.to_density()?;
        for &eta in etas {
            combos += 1;
            let setting = HomodyneSetting::covering(0.0, eta, gamma)?;
            let dist = quadrature_pdf(&rho, 0, &setting)?;
            let xs = dist.xs();
            let ps = dist.ps();
            let h = xs[1] - xs[0];
            let mut analytic = Vec::with_capacity(xs.len());
            for (x, p) in xs.iter().zip(ps) {
                let a = analytic_pdf_in_phase(gamma, eta, *x)?;
                max_err = max_err.max((p - a).abs());
                analytic.push(a);
            }
            let m = (2.0 * eta).sqrt() * gamma;
            let x_num = xs[argmax_nonnegative(xs, ps)];
            let x_ana = xs[argmax_nonnegative(xs, &analytic)];
            peak_route_steps = peak_route_steps.max((x_num - x_ana).abs() / h);
            if (x_num - m).abs() > h {
                hill_misses.push(format!(
                    "gamma = {gamma}, eta = {eta}: right peak at {x_num:.4} vs sqrt(2 eta) gamma = {m:.4} ({:.1} grid steps apart)",
                    (x_num - m).abs() / h
                ));
            }
            let setting = HomodyneSetting::covering(FRAC_PI_2, eta, gamma)?;
            let dist = quadrature_pdf(&rho, 0, &setting)?;
            for (x, p) in dist.xs().iter().zip(dist.ps()) {
                max_err = max_err.max((p - analytic_pdf_out_phase(gamma, eta, *x)?).abs());
            }
            let k_fit = fit_wavenumber(dist.xs(), dist.ps(), gamma);
            let k_target = 2.0 * (2.0 * eta).sqrt() * gamma;
            k_worst = k_worst.max((k_fit - k_target).abs() / k_target);
        }
    }
    r.clause(
        max_err < A4_MAX_ABS_ERR,
        format!("max |numeric - closed form| = {max_err:.1e} across {combos} combos, both quadrature angles"),
    );
    r.clause(
        hill_misses.is_empty(),
        format!(
            "hill maxima land on +-sqrt(2 eta) gamma within one grid step: {} of {combos} combos",
            combos - hill_misses.len()
        ),
    );
    for miss in &hill_misses {
        r.info(miss.clone());
    }
    r.info(format!(
        "numeric peaks track the closed form's own maxima to {peak_route_steps:.2} grid steps at worst; the closed form places its maxima inside +-sqrt(2 eta) gamma (merging at 0 for sqrt(2 eta) gamma below about 0.7) because the component Gaussians overlap"
    ));
    r.clause(
        k_worst < A4_WAVENUMBER_REL,
        format!("fitted fringe wavenumber within {:.2}% of 2 sqrt(2 eta) gamma at worst", 100.0 * k_worst),
    );
    Ok(())
}

criterion!(
    a5,
    a5_body,
    "A5",
    "detector loss shifts the optimal amplitude upward"
);

fn a5_body(fast: bool, r: &mut CriterionReport) -> Result<(), RunError> {
    let step = if fast { 0.05 } else { 0.025 };
    let n = ((1.1_f64 - 0.5) / step).round() as usize;
    let gammas: Vec<f64> = (0..=n).map(|k| 0.5 + step * k as f64).collect();
    let duan = DuanConfig::default();
    let mut rhos = Vec::with_capacity(gammas.len());
    for &gamma in &gammas {
        let spec = EcsSpec::new(gamma)?;
        rhos.push(spec.state(spec.default_dim())?.to_density()?);
    }
    let mut argmins = Vec::new();
    let mut ideal_scores = Vec::with_capacity(gammas.len());
    let mut affine_dev = 0.0_f64;
    for (ei, &eta) in A5_ETAS.iter().enumerate() {
        let mut best = (f64::INFINITY, 0.0_f64);
        for (gi, rho) in rhos.iter().enumerate() {
            let s = if eta >= 1.0 {
                duan_s(rho, &duan)?.s
            } else {
                duan_s_with_loss(rho, &duan, eta)?.s
            };
            if ei == 0 {
                ideal_scores.push(s);
            } else {
                affine_dev = affine_dev.max((s - (eta * ideal_scores[gi] + 2.0 * (1.0 - eta))).abs());
            }
            if s < best.0 {
                best = (s, gammas[gi]);
            }
        }
        argmins.push(best.1);
        r.info(format!(
            "eta = {eta}: optimal gamma = {:.3} with S = {:.6} (grid step {step})",
            best.1, best.0
        ));
    }
    r.clause(
        argmins[1] > argmins[0] && argmins[2] > argmins[1],
        format!("optimal gamma strictly increases as eta drops through {A5_ETAS:?}"),
    );
    r.info(format!(
        "measured scores obey S_eta = eta S_1 + 2 (1 - eta) to {affine_dev:.1e}, an affine map in eta, so every efficiency shares the same optimum"
    ));
    Ok(())
}

criterion!(
    a6,
    a6_body,
    "A6",
    "two-click probability matches its closed form and visibility"
);

fn a6_body(_fast: bool, r: &mut CriterionReport) -> Result<(), RunError> {
    let mut worst = 0.0_f64;
    let mut count = 0;
    for gamma in [0.5, 1.0, 1.5, 2.0, 2.5] {
        let spec = EcsSpec::new(gamma)?;
        let dim = spec.default_dim();
        for eta in [0.25, 0.5, 0.75, 1.0] {
            for alpha in [0.0, PI / 3.0, FRAC_PI_2, 2.0 * PI / 3.0, PI] {
                let psi = spec.rotated_state(alpha, dim)?;
                let p = p_two_clicks(&psi, eta)?;
                worst = worst.max((p - p_two_clicks_analytic(gamma, eta, alpha)?).abs());
                count += 1;
            }
        }
    }
    r.clause(
        worst < A6_ABS_TOL,
        format!("max |numeric - closed form| = {worst:.1e} across {count} phase-rotated settings"),
    );
    let spec = EcsSpec::new(2.0)?;
    let dim = spec.default_dim();
    let bright = p_two_clicks(&spec.rotated_state(0.0, dim)?, 0.75)?;
    let dark = p_two_clicks(&spec.rotated_state(PI, dim)?, 0.75)?;
    let fringe = (bright - dark) / (bright + dark);
    let ratio = two_clicks_visibility(2.0, 0.75)?;
    r.clause(
        (fringe - ratio).abs() < A6_VISIBILITY_TOL,
        format!(
            "fringe visibility at gamma = 2, eta = 0.75: measured {:.4}% vs coefficient ratio {:.4}%",
            100.0 * fringe,
            100.0 * ratio
        ),
    );
    let spec = EcsSpec::new(1.0)?;
    let psi = spec.rotated_state(0.0, spec.default_dim())?;
    let fading: Vec<f64> = [1.0e-2, 1.0e-3, 1.0e-4]
        .into_iter()
        .map(|eta| p_two_clicks(&psi, eta))
        .collect::<Result<_, _>>()?;
    r.clause(
        fading[1] < fading[0] && fading[2] < fading[1] && fading[2] < 1.0e-3,
        format!(
            "click probability fades with detector efficiency: {:.1e}, {:.1e}, {:.1e}",
            fading[0], fading[1], fading[2]
        ),
    );
    Ok(())
}

criterion!(
    a7,
    a7_body,
    "A7",
    "continued interaction eigenvalue approaches the weak-probe formulas"
);

fn a7_body(_fast: bool, r: &mut CriterionReport) -> Result<(), RunError> {
    let od = Complex64::new(TAU * 1.0e6, 0.0);
    let delta = TAU * 1.0e6;
    let gamma = TAU * 5.0e4;
    let mut prev = f64::INFINITY;
    for frac in [50.0, 100.0, 200.0] {
        let p = SixLevelParams::new(od / frac, od / frac, od, delta, gamma)?;
        let tracked = tracked_eigenvalue_pk(&p, CONTINUATION_STEPS)?;
        let dev = (tracked.value / (lambda_pk_approx(&p)? / HBAR) - Complex64::ONE).norm();
        r.clause(
            dev < A7_MAX_REL && dev < prev,
            format!("six-level, drive-to-probe {frac:.0}: relative deviation {dev:.1e}"),
        );
        prev = dev;
    }
    let mut prev = f64::INFINITY;
    for frac in [50.0, 100.0, 200.0] {
        let p = FourLevelParams::new(od / frac, od / frac, od, delta, gamma, gamma)?;
        let tracked = tracked_eigenvalue_si(&p, CONTINUATION_STEPS)?;
        let dev = (tracked.value / (lambda_si(&p)? / HBAR) - Complex64::ONE).norm();
        r.clause(
            dev < A7_MAX_REL && dev < prev,
            format!("four-level, drive-to-probe {frac:.0}: relative deviation {dev:.1e}"),
        );
        prev = dev;
    }
    let base = SixLevelParams::new(od / 50.0, od / 50.0, od, delta, gamma)?;
    let frozen = tracked_eigenvalue(
        |eps| {
            pk_matrix(&SixLevelParams {
                omega_a: base.omega_a * eps,
                omega_b: base.omega_b * eps,
                ..base
            })
        },
        CONTINUATION_STEPS,
    )?;
    let formula = (lambda_pk_approx(&base)? / HBAR).norm();
    r.info(format!(
        "continuing the bare interaction matrix with the drive phase frozen keeps the followed branch dark: |lambda| = {:.1e} vs formula {:.1e}; the checks above use the drive-averaged continuation",
        frozen.value.norm(),
        formula
    ));
    Ok(())
}

criterion!(
    a8,
    a8_body,
    "A8",
    "rate regime accumulates a pi-scale phase at usable figure of merit"
);

fn a8_body(_fast: bool, r: &mut CriterionReport) -> Result<(), RunError> {
    let medium = reference_medium()?;
    for gamma in [1.0e4, 2.5e4, 5.0e4, 7.5e4, 1.0e5] {
        let p = rate_regime(gamma)?;
        let rate = kerr_rate_chi(&p, &medium)?;
        let ratio = rate.phase.abs() / PI;
        let merit = figure_of_merit(&p)?;
        r.clause(
            ratio > 1.0 / A8_PHASE_WINDOW && ratio < A8_PHASE_WINDOW && merit >= A8_MIN_MERIT,
            format!(
                "dephasing {gamma:.1e} rad/s: |chi tau| / pi = {ratio:.3}, figure of merit {merit:.0}"
            ),
        );
    }
    let angular = SixLevelParams::new(
        Complex64::new(TAU * 1.0e4, 0.0),
        Complex64::new(TAU * 1.0e4, 0.0),
        Complex64::new(TAU * 1.0e6, 0.0),
        TAU * 1.0e6,
        TAU * 5.0e4,
    )?;
    let rate = kerr_rate_chi(&angular, &medium)?;
    r.info(format!(
        "reading the same figures as 2 pi x Hz instead gives |chi tau| / pi = {:.1e}; the plain rad/s reading above is the one on the pi scale",
        rate.phase.abs() / PI
    ));
    Ok(())
}

criterion!(
    a9,
    a9_body,
    "A9",
    "weak rotation converges to the displaced pair and tracks the click formula"
);

fn a9_body(fast: bool, r: &mut CriterionReport) -> Result<(), RunError> {
    let gamma = 1.0;
    let theta = 0.05_f64;
    let alpha = 2.0 * SQRT_2 * gamma * theta;
    let spec = EcsSpec::new(gamma)?;
    let mut prev = f64::INFINITY;
    for t in [0.9, 0.99, 0.999] {
        let (rho, report) = rotated_ecs(gamma, alpha, t)?;
        let dims = rho.space().mode_dims().to_vec();
        debug_assert_eq!(dims[0], dims[1]);
        let psi = spec.state(dims[0])?;
        let target = displacement(Complex64::new(0.0, theta), 0, psi.space())?
            .apply(&psi)?
            .to_density()?;
        let d = trace_distance(&rho, &target)?;
        r.clause(
            d < prev,
            format!("T = {t}: trace distance to the displaced pair {d:.2e}"),
        );
        prev = d;
        if t == 0.999 {
            r.info(format!(
                "rotation validity ratio theta / sqrt(mean n) = {:.3}",
                report.validity_ratio
            ));
        }
    }
    let t_clicks = if fast { 0.99 } else { 0.999 };
    for alpha in [0.0, FRAC_PI_2, PI] {
        let rep = rotation_coincidence(gamma, alpha, t_clicks, 0.8)?;
        let rel = (rep.channel - rep.ideal).abs() / rep.ideal;
        r.clause(
            rel <= A9_CHANNEL_REL,
            format!(
                "alpha = {alpha:.3}, T = {t_clicks}: channel clicks {:.4e} vs ideal-rotation formula {:.4e} (rel {:.1}%)",
                rep.channel,
                rep.ideal,
                100.0 * rel
            ),
        );
    }
    r.info(
        "the channel output itself converges (first clause); the click formula assumes the ideal phase rotation, and the channel's displacement-like action departs from it as alpha grows",
    );
    Ok(())
}

criterion!(
    a10,
    a10_body,
    "A10",
    "structural invariants hold across operators, channels, and readout"
);

fn number_marginal(psi: &PureState, mode: usize) -> Vec<f64> {
    let space = psi.space();
    let mut out = vec![0.0; space.mode_dim(mode)];
    for (flat, amp) in psi.amplitudes().iter().enumerate() {
        out[space.occupations(flat)[mode]] += amp.norm_sqr();
    }
    out
}

fn a10_body(_fast: bool, r: &mut CriterionReport) -> Result<(), RunError> {
    let space = SpaceSpec::new(vec![10, 10])?;
    let identity = ModeOperator::identity(space.clone());
    let bs = beam_splitter(&BeamSplitterSpec::new(0.37, (0, 1))?, &space)?;
    let bs_dev = max_abs_diff(bs.adjoint().compose(&bs)?.matrix(), identity.matrix());
    let kerr = cross_kerr(KerrPhase::new(0.9)?, (0, 1), &space)?;
    let kerr_dev = max_abs_diff(kerr.adjoint().compose(&kerr)?.matrix(), identity.matrix());
    r.clause(
        bs_dev < A10_OPERATOR_TOL && kerr_dev < A10_OPERATOR_TOL,
        format!("beam splitter and cross-Kerr unitarity defects {bs_dev:.1e}, {kerr_dev:.1e}"),
    );

    let spec = EcsSpec::new(1.0)?;
    let rho = spec.state(spec.default_dim())?.to_density()?;
    let trace_dev = (loss_channel(0.6, 0, &rho)?.trace() - 1.0).norm();
    r.clause(
        trace_dev < A10_OPERATOR_TOL,
        format!("loss channel trace defect {trace_dev:.1e}"),
    );

    let cat = even_cat(1.5, truncation_dim(1.5))?.to_density()?;
    let dist = quadrature_pdf(&cat, 0, &HomodyneSetting::covering(0.9, 0.7, 1.5)?)?;
    let norm_dev = (dist.integral() - 1.0).abs();
    r.clause(
        norm_dev < A10_PDF_TOL,
        format!("quadrature distribution normalization defect {norm_dev:.1e}"),
    );

    let single = SpaceSpec::single(25)?;
    let (no_click, click) = onoff_povm(0.37, 0, &single)?;
    let povm_dev = max_abs_diff(
        no_click.add(&click)?.matrix(),
        ModeOperator::identity(single).matrix(),
    );
    r.clause(
        povm_dev < A10_EXACT_TOL,
        format!("on/off outcomes sum to the identity within {povm_dev:.1e}"),
    );

    let joint = coherent_state(Complex64::new(0.9, 0.0), truncation_dim(0.9))?
        .tensor(&coherent_state(Complex64::new(1.1, 0.0), truncation_dim(1.1))?)?;
    let rotated = cross_kerr(KerrPhase::new(1.3)?, (0, 1), joint.space())?.apply(&joint)?;
    let marg_dev = (0..2)
        .map(|mode| {
            number_marginal(&joint, mode)
                .iter()
                .zip(number_marginal(&rotated, mode))
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max)
        })
        .fold(0.0, f64::max);
    r.clause(
        marg_dev < A10_EXACT_TOL,
        format!("cross-Kerr leaves both photon-number marginals fixed within {marg_dev:.1e}"),
    );

    let left = coherent_state(Complex64::new(0.8, 0.0), truncation_dim(0.8))?;
    let right = even_cat(1.0, truncation_dim(1.0))?;
    let product = left.to_density()?.tensor(&right.to_density()?)?;
    let back_left = max_abs_diff(
        partial_trace(&product, &[0])?.matrix(),
        left.to_density()?.matrix(),
    );
    let back_right = max_abs_diff(
        reduced_density(&left.tensor(&right)?, &[1])?.matrix(),
        right.to_density()?.matrix(),
    );
    r.clause(
        back_left < A10_EXACT_TOL && back_right < A10_EXACT_TOL,
        format!("tensor then trace returns each factor within {back_left:.1e}, {back_right:.1e}"),
    );

    let flagged = matches!(
        even_cat(2.0, 8),
        Err(ProtocolError::Fock(FockError::TruncationLeakage { .. }))
    );
    r.clause(
        flagged,
        "an 8-level register at gamma = 2 is rejected as truncation leakage",
    );
    Ok(())
}
