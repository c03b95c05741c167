//! End-to-end runs through the public API: interaction, heralding, splitting,
//! and readout chained the way an experiment would use them.

use std::f64::consts::{FRAC_PI_2, PI};

use kerrcat::fock::truncation_dim;
use kerrcat::measure::{
    analytic_pdf_in_phase, analytic_pdf_out_phase, duan_s, duan_s_with_loss, p_two_clicks,
    p_two_clicks_analytic, quadrature_pdf, s_perfect_analytic, DuanConfig, HomodyneSetting,
};
use kerrcat::protocol::{conditional_cat, ecs_from_cat, even_cat, CatLabel, EcsSpec};

#[test]
fn heralded_cat_splits_to_the_closed_form_score() {
    let outcomes = conditional_cat(1.2, 1.0).expect("heralding succeeds");
    let total: f64 = outcomes.iter().map(|o| o.probability).sum();
    assert!((total - 1.0).abs() < 1e-9, "branch probabilities sum to {total}");

    let even = outcomes
        .iter()
        .find(|o| o.label == CatLabel::Even)
        .expect("even branch present");
    let dim = even.conditional_state.space().mode_dim(0);
    let target = even_cat(1.0, dim).expect("target cat");
    let f = even
        .conditional_state
        .fidelity_with_pure(&target)
        .expect("same space");
    assert!(f > 1.0 - 1e-9, "herald fidelity {f}");

    let cat = even_cat(1.0, truncation_dim(1.0)).expect("cat state");
    let rho = ecs_from_cat(&cat).expect("vacuum split");
    let score = duan_s(&rho, &DuanConfig::default()).expect("two-mode score");
    let target = s_perfect_analytic(1.0);
    assert!((score.s - target).abs() < 1e-9, "{} vs {target}", score.s);
    assert!(score.below_bound());
}

#[test]
fn heralded_cat_homodyne_statistics_match_the_closed_forms() {
    let outcomes = conditional_cat(1.5, 1.2).expect("heralding succeeds");
    let even = outcomes
        .iter()
        .find(|o| o.label == CatLabel::Even)
        .expect("even branch present");

    let eta = 0.8;
    let setting = HomodyneSetting::covering(0.0, eta, 1.2).expect("grid");
    let dist = quadrature_pdf(&even.conditional_state, 0, &setting).expect("pdf");
    let mut worst = 0.0_f64;
    for (x, p) in dist.xs().iter().zip(dist.ps()) {
        let a = analytic_pdf_in_phase(1.2, eta, *x).expect("closed form");
        worst = worst.max((p - a).abs());
    }
    assert!(worst < 1e-5, "in-phase deviation {worst:.2e}");

    let setting = HomodyneSetting::covering(FRAC_PI_2, eta, 1.2).expect("grid");
    let dist = quadrature_pdf(&even.conditional_state, 0, &setting).expect("pdf");
    let mut worst = 0.0_f64;
    let mut mass = 0.0;
    let h = dist.xs()[1] - dist.xs()[0];
    for (i, (x, p)) in dist.xs().iter().zip(dist.ps()).enumerate() {
        let a = analytic_pdf_out_phase(1.2, eta, *x).expect("closed form");
        worst = worst.max((p - a).abs());
        let edge = i == 0 || i == dist.xs().len() - 1;
        mass += if edge { 0.5 } else { 1.0 } * p * h;
    }
    assert!(worst < 1e-5, "out-of-phase deviation {worst:.2e}");
    assert!((mass - 1.0).abs() < 1e-6, "pdf mass {mass}");
}

#[test]
fn split_pair_under_loss_keeps_the_affine_score_law() {
    let cat = even_cat(0.9, truncation_dim(0.9)).expect("cat state");
    let rho = ecs_from_cat(&cat).expect("vacuum split");
    let cfg = DuanConfig::default();
    let clean = duan_s(&rho, &cfg).expect("lossless score").s;
    for eta in [0.85, 0.6, 0.3] {
        let lossy = duan_s_with_loss(&rho, &cfg, eta).expect("lossy score").s;
        let affine = eta * clean + 2.0 * (1.0 - eta);
        assert!(
            (lossy - affine).abs() < 1e-9,
            "eta = {eta}: {lossy} vs {affine}"
        );
    }
}

#[test]
fn rotated_pair_coincidences_follow_the_fringe_formula() {
    let spec = EcsSpec::new(1.0).expect("spec");
    let dim = spec.default_dim();
    let eta = 0.75;
    let mut probs = Vec::new();
    for alpha in [0.0, PI / 3.0, PI] {
        let psi = spec.rotated_state(alpha, dim).expect("rotated pair");
        let p = p_two_clicks(&psi, eta).expect("click probability");
        let a = p_two_clicks_analytic(1.0, eta, alpha).expect("closed form");
        assert!((p - a).abs() < 1e-8, "alpha = {alpha}: {p} vs {a}");
        probs.push(p);
    }
    assert!(
        probs[0] > probs[2],
        "fringe should fall from {} to {}",
        probs[0],
        probs[2]
    );
}
