//! The experiment catalog: each entry turns a validated [`Config`] into a
//! [`SweepTable`] pairing a numeric column with its closed-form companion
//! wherever one exists.

use crate::config::{Config, Range};
use crate::table::{format_value, SweepTable};
use crate::RunError;
use kerrcat::atomic::{
    figure_of_merit, kerr_rate_chi, lambda_pk_approx, lambda_si, tracked_eigenvalue_pk,
    tracked_eigenvalue_si, FourLevelParams, MediumParams, SixLevelParams, HBAR, SPEED_OF_LIGHT,
};
use kerrcat::fock::{coherent_state, truncation_dim, DensityOperator};
use kerrcat::measure::{
    analytic_pdf_in_phase, analytic_pdf_out_phase, duan_s, duan_s_with_loss, p_two_clicks,
    p_two_clicks_analytic, quadrature_pdf, DuanConfig, HomodyneSetting,
};
use kerrcat::optics::{beam_splitter, BeamSplitterSpec};
use kerrcat::protocol::{
    conditional_cat_with_efficiency, even_cat, odd_cat, CatLabel, EcsSpec, MixedCatSpec,
};
use num_complex::Complex64;
use std::f64::consts::{FRAC_PI_2, PI, TAU};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Experiment {
    SSweep,
    SLossSweep,
    PdfInPhase,
    PdfOutPhase,
    Coincidence,
    AtomicEigenvalue,
    KerrRate,
    CatGenerate,
}

impl Experiment {
    pub const ALL: [Experiment; 8] = [
        Experiment::SSweep,
        Experiment::SLossSweep,
        Experiment::PdfInPhase,
        Experiment::PdfOutPhase,
        Experiment::Coincidence,
        Experiment::AtomicEigenvalue,
        Experiment::KerrRate,
        Experiment::CatGenerate,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Experiment::SSweep => "s-sweep",
            Experiment::SLossSweep => "s-loss-sweep",
            Experiment::PdfInPhase => "pdf-in-phase",
            Experiment::PdfOutPhase => "pdf-out-phase",
            Experiment::Coincidence => "coincidence",
            Experiment::AtomicEigenvalue => "atomic-eigenvalue",
            Experiment::KerrRate => "kerr-rate",
            Experiment::CatGenerate => "cat-generate",
        }
    }

    pub fn parse(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|e| e.name() == name)
    }

    pub fn summary(self) -> &'static str {
        match self {
            Experiment::SSweep => {
                "correlation score of the split cat mixture against its closed form, over gamma (a c column appears when c_steps > 1)"
            }
            Experiment::SLossSweep => {
                "correlation score after equal loss on both arms against the affine loss law, over eta and gamma; c is read as a fixed value"
            }
            Experiment::PdfInPhase => {
                "in-phase homodyne distribution of the even cat against its closed form, over the covering grid in x"
            }
            Experiment::PdfOutPhase => {
                "out-of-phase homodyne distribution of the even cat against its oscillating closed form, over the covering grid in x"
            }
            Experiment::Coincidence => {
                "two-detector click probability of the phase-rotated pair state against its closed form, over alpha"
            }
            Experiment::AtomicEigenvalue => {
                "interaction eigenvalue continuation against the weak-probe formulas for both level schemes, over a fixed probe ladder"
            }
            Experiment::KerrRate => {
                "cross-Kerr rate and accumulated phase over a dephasing range given in kHz"
            }
            Experiment::CatGenerate => {
                "heralded cat outcomes with probability and fidelity against the parity targets"
            }
        }
    }

    pub fn default_config(self) -> Config {
        let fixed = Range::fixed;
        let (gamma, eta, c, alpha) = match self {
            Experiment::SSweep => (
                Range::new(0.0, 3.0, 300),
                fixed(1.0),
                fixed(1.0),
                fixed(0.0),
            ),
            Experiment::SLossSweep => (
                Range::new(0.4, 1.4, 11),
                Range::new(0.4, 1.0, 4),
                fixed(1.0),
                fixed(0.0),
            ),
            Experiment::PdfInPhase => (fixed(1.5), fixed(0.1), fixed(1.0), fixed(0.0)),
            Experiment::PdfOutPhase => (fixed(1.5), fixed(0.8), fixed(1.0), fixed(0.0)),
            Experiment::Coincidence => (
                fixed(1.0),
                fixed(0.8),
                fixed(1.0),
                Range::new(0.0, PI, 61),
            ),
            Experiment::AtomicEigenvalue => (fixed(1.0), fixed(1.0), fixed(1.0), fixed(0.0)),
            Experiment::KerrRate => (
                Range::new(10.0, 100.0, 10),
                fixed(1.0),
                fixed(1.0),
                fixed(0.0),
            ),
            Experiment::CatGenerate => (fixed(1.0), fixed(1.0), fixed(1.0), fixed(1.0)),
        };
        Config {
            experiment: self,
            gamma,
            eta,
            c,
            alpha,
            t: fixed(0.999),
            dim: None,
            out: None,
        }
    }
}

pub fn run_experiment(cfg: &Config) -> Result<SweepTable, RunError> {
    match cfg.experiment {
        Experiment::SSweep => s_sweep(cfg),
        Experiment::SLossSweep => s_loss_sweep(cfg),
        Experiment::PdfInPhase => pdf_sweep(cfg, false),
        Experiment::PdfOutPhase => pdf_sweep(cfg, true),
        Experiment::Coincidence => coincidence(cfg),
        Experiment::AtomicEigenvalue => atomic_eigenvalue(cfg),
        Experiment::KerrRate => kerr_rate(cfg),
        Experiment::CatGenerate => cat_generate(cfg),
    }
}

fn echo_config(table: &mut SweepTable, cfg: &Config) {
    table.note("experiment", cfg.experiment.name());
    for (name, r) in [
        ("gamma", &cfg.gamma),
        ("eta", &cfg.eta),
        ("c", &cfg.c),
        ("alpha", &cfg.alpha),
        ("t", &cfg.t),
    ] {
        table.note(&format!("{name}_min"), format_value(r.min));
        table.note(&format!("{name}_max"), format_value(r.max));
        table.note(&format!("{name}_steps"), r.steps);
    }
    match cfg.dim {
        Some(d) => table.note("dim", d),
        None => table.note("dim", "default"),
    }
}

/// The two-arm split of the cat mixture, built on `dim` levels per mode when
/// given and on the amplitude-derived defaults otherwise.
pub fn split_state(gamma: f64, c: f64, dim: Option<usize>) -> Result<DensityOperator, RunError> {
    if gamma == 0.0 {
        let d = dim.unwrap_or_else(|| truncation_dim(0.0));
        let vac = coherent_state(Complex64::ZERO, d)?;
        return Ok(vac.tensor(&vac)?.to_density()?);
    }
    if c == 1.0 {
        let spec = EcsSpec::new(gamma)?;
        let d = dim.unwrap_or_else(|| spec.default_dim());
        return Ok(spec.state(d)?.to_density()?);
    }
    let spec = MixedCatSpec::new(gamma, c)?;
    let d = dim.unwrap_or_else(|| spec.default_dim());
    let single = spec.density(d)?;
    let vac = coherent_state(Complex64::ZERO, d)?.to_density()?;
    let joint = single.tensor(&vac)?;
    let bs = beam_splitter(&BeamSplitterSpec::new(0.5, (0, 1))?, joint.space())?;
    Ok(bs.conjugate_density(&joint)?)
}

/// Closed-form score of the split mixture; 2 exactly at gamma = 0.
pub fn split_score_analytic(gamma: f64, c: f64) -> Result<f64, RunError> {
    if gamma == 0.0 {
        return Ok(2.0);
    }
    Ok(MixedCatSpec::new(gamma, c)?.duan_analytic())
}

fn s_sweep(cfg: &Config) -> Result<SweepTable, RunError> {
    let multi_c = !cfg.c.is_fixed();
    let mut cols: Vec<&'static str> = Vec::new();
    if multi_c {
        cols.push("c");
    }
    cols.extend(["gamma", "S_numeric", "S_analytic", "abs_diff"]);
    let mut table = SweepTable::new(cols);
    echo_config(&mut table, cfg);
    let duan = DuanConfig::default();
    for c in cfg.c.values() {
        for gamma in cfg.gamma.values() {
            let rho = split_state(gamma, c, cfg.dim)?;
            let numeric = duan_s(&rho, &duan)?.s;
            let analytic = split_score_analytic(gamma, c)?;
            let mut row = Vec::new();
            if multi_c {
                row.push(c);
            }
            row.extend([gamma, numeric, analytic, (numeric - analytic).abs()]);
            table.push(row)?;
        }
    }
    Ok(table)
}

fn s_loss_sweep(cfg: &Config) -> Result<SweepTable, RunError> {
    let mut table = SweepTable::new(vec!["eta", "gamma", "S_numeric", "S_analytic", "abs_diff"]);
    echo_config(&mut table, cfg);
    let duan = DuanConfig::default();
    let c = cfg.c.min;
    for eta in cfg.eta.values() {
        for gamma in cfg.gamma.values() {
            let rho = split_state(gamma, c, cfg.dim)?;
            let numeric = duan_s_with_loss(&rho, &duan, eta)?.s;
            let analytic = eta * split_score_analytic(gamma, c)? + 2.0 * (1.0 - eta);
            table.push(vec![eta, gamma, numeric, analytic, (numeric - analytic).abs()])?;
        }
    }
    Ok(table)
}

fn pdf_sweep(cfg: &Config, out_phase: bool) -> Result<SweepTable, RunError> {
    let multi_g = !cfg.gamma.is_fixed();
    let multi_e = !cfg.eta.is_fixed();
    let mut cols: Vec<&'static str> = Vec::new();
    if multi_g {
        cols.push("gamma");
    }
    if multi_e {
        cols.push("eta");
    }
    cols.extend(["x", "p_numeric", "p_analytic", "abs_diff"]);
    let mut table = SweepTable::new(cols);
    echo_config(&mut table, cfg);
    let theta = if out_phase { FRAC_PI_2 } else { 0.0 };
    for gamma in cfg.gamma.values() {
        let dim = cfg.dim.unwrap_or_else(|| truncation_dim(gamma));
        if !multi_g {
            table.note("fock_dim", dim);
        }
        let rho = even_cat(gamma, dim)?.to_density()?;
        for eta in cfg.eta.values() {
            let setting = HomodyneSetting::covering(theta, eta, gamma)?;
            let dist = quadrature_pdf(&rho, 0, &setting)?;
            for (x, p) in dist.xs().iter().zip(dist.ps()) {
                let analytic = if out_phase {
                    analytic_pdf_out_phase(gamma, eta, *x)?
                } else {
                    analytic_pdf_in_phase(gamma, eta, *x)?
                };
                let mut row = Vec::new();
                if multi_g {
                    row.push(gamma);
                }
                if multi_e {
                    row.push(eta);
                }
                row.extend([*x, *p, analytic, (*p - analytic).abs()]);
                table.push(row)?;
            }
        }
    }
    Ok(table)
}

fn coincidence(cfg: &Config) -> Result<SweepTable, RunError> {
    let multi_e = !cfg.eta.is_fixed();
    let mut cols: Vec<&'static str> = Vec::new();
    if multi_e {
        cols.push("eta");
    }
    cols.extend(["alpha", "p_numeric", "p_analytic", "abs_diff"]);
    let mut table = SweepTable::new(cols);
    echo_config(&mut table, cfg);
    let gamma = cfg.gamma.min;
    let spec = EcsSpec::new(gamma)?;
    let dim = cfg.dim.unwrap_or_else(|| spec.default_dim());
    table.note("fock_dim", dim);
    for eta in cfg.eta.values() {
        for alpha in cfg.alpha.values() {
            let psi = spec.rotated_state(alpha, dim)?;
            let numeric = p_two_clicks(&psi, eta)?;
            let analytic = p_two_clicks_analytic(gamma, eta, alpha)?;
            let mut row = Vec::new();
            if multi_e {
                row.push(eta);
            }
            row.extend([alpha, numeric, analytic, (numeric - analytic).abs()]);
            table.push(row)?;
        }
    }
    Ok(table)
}

/// Probe ladder for the eigenvalue continuation, as drive-to-probe ratios.
pub const PROBE_RATIOS: [f64; 6] = [10.0, 20.0, 50.0, 100.0, 200.0, 500.0];

/// Continuation resolution matching the library's own convergence checks.
pub const CONTINUATION_STEPS: usize = 50;

fn atomic_eigenvalue(cfg: &Config) -> Result<SweepTable, RunError> {
    let mut table = SweepTable::new(vec![
        "scheme",
        "ratio",
        "re_numeric",
        "im_numeric",
        "re_analytic",
        "im_analytic",
        "abs_diff",
        "rel_err",
    ]);
    echo_config(&mut table, cfg);
    let od = Complex64::new(TAU * 1.0e6, 0.0);
    let delta = TAU * 1.0e6;
    let gamma = TAU * 5.0e4;
    table.note("omega_d_rad_s", format_value(od.re));
    table.note("delta_rad_s", format_value(delta));
    table.note("gamma_rad_s", format_value(gamma));
    table.note("scheme_0", "four-level ladder");
    table.note("scheme_1", "six-level double ladder");
    for ratio in PROBE_RATIOS {
        let probe = od / ratio;
        let p4 = FourLevelParams::new(probe, probe, od, delta, gamma, gamma)?;
        let tracked = tracked_eigenvalue_si(&p4, CONTINUATION_STEPS)?;
        let target = lambda_si(&p4)? / HBAR;
        push_eigen_row(&mut table, 0.0, ratio, tracked.value, target)?;
        let p6 = SixLevelParams::new(probe, probe, od, delta, gamma)?;
        let tracked = tracked_eigenvalue_pk(&p6, CONTINUATION_STEPS)?;
        let target = lambda_pk_approx(&p6)? / HBAR;
        push_eigen_row(&mut table, 1.0, ratio, tracked.value, target)?;
    }
    Ok(table)
}

fn push_eigen_row(
    table: &mut SweepTable,
    scheme: f64,
    ratio: f64,
    value: Complex64,
    target: Complex64,
) -> Result<(), RunError> {
    let diff = (value - target).norm();
    table.push(vec![
        scheme,
        ratio,
        value.re,
        value.im,
        target.re,
        target.im,
        diff,
        diff / target.norm(),
    ])
}

/// Vapor cell used by the rate sweeps: dense, dipole 1e-32 C m on both
/// transitions, 600 nm carriers, 1 mm length, 50 um waist, 1 us dwell.
pub fn reference_medium() -> Result<MediumParams, RunError> {
    let omega = TAU * SPEED_OF_LIGHT / 600.0e-9;
    Ok(MediumParams::new(
        1.0e21,
        1.0e-32,
        1.0e-32,
        omega,
        omega,
        1.0e-3,
        PI * 50.0e-6 * 50.0e-6,
        1.0e-6,
    )?)
}

/// Field parameters of the rate regime at a given dephasing, plain rad/s.
pub fn rate_regime(gamma: f64) -> Result<SixLevelParams, RunError> {
    Ok(SixLevelParams::new(
        Complex64::new(1.0e4, 0.0),
        Complex64::new(1.0e4, 0.0),
        Complex64::new(1.0e6, 0.0),
        1.0e6,
        gamma,
    )?)
}

fn kerr_rate(cfg: &Config) -> Result<SweepTable, RunError> {
    let mut table = SweepTable::new(vec![
        "gamma_khz",
        "chi_rad_s",
        "phase_rad",
        "phase_over_pi",
        "figure_of_merit",
    ]);
    echo_config(&mut table, cfg);
    table.note("gamma_unit", "kHz, plain angular rate 1e3 * value rad/s");
    let medium = reference_medium()?;
    for gamma_khz in cfg.gamma.values() {
        let p = rate_regime(1.0e3 * gamma_khz)?;
        let rate = kerr_rate_chi(&p, &medium)?;
        let fom = figure_of_merit(&p)?;
        table.push(vec![
            gamma_khz,
            rate.chi,
            rate.phase,
            rate.phase / PI,
            fom,
        ])?;
    }
    Ok(table)
}

fn cat_generate(cfg: &Config) -> Result<SweepTable, RunError> {
    let multi_a = !cfg.alpha.is_fixed();
    let mut cols: Vec<&'static str> = Vec::new();
    if multi_a {
        cols.push("alpha");
    }
    cols.extend(["outcome", "probability", "fidelity"]);
    let mut table = SweepTable::new(cols);
    echo_config(&mut table, cfg);
    table.note("outcome_0", "detector 1 clicked, even-cat target");
    table.note("outcome_1", "detector 2 clicked, odd-cat target");
    table.note("outcome_2", "no click, coherent target");
    let gamma = cfg.gamma.min;
    let eta = cfg.eta.min;
    for alpha in cfg.alpha.values() {
        let outcomes = conditional_cat_with_efficiency(alpha, gamma, eta)?;
        for (idx, outcome) in outcomes.iter().enumerate() {
            let dim = outcome.conditional_state.space().mode_dim(0);
            let target = match outcome.label {
                CatLabel::Even => even_cat(gamma, dim)?,
                CatLabel::Odd => odd_cat(gamma, dim)?,
                CatLabel::Inconclusive => coherent_state(Complex64::new(gamma, 0.0), dim)?,
            };
            let fidelity = outcome.conditional_state.fidelity_with_pure(&target)?;
            let mut row = Vec::new();
            if multi_a {
                row.push(alpha);
            }
            row.extend([idx as f64, outcome.probability, fidelity]);
            table.push(row)?;
        }
    }
    Ok(table)
}

#[cfg(test)]
mod tests {
    use super::*;
    use kerrcat::fock::FockError;
    use kerrcat::protocol::ProtocolError;

    fn cfg(exp: Experiment) -> Config {
        exp.default_config()
    }

    #[test]
    fn names_round_trip_through_parse() {
        for e in Experiment::ALL {
            assert_eq!(Experiment::parse(e.name()), Some(e));
        }
        assert_eq!(Experiment::parse("warp"), None);
    }

    #[test]
    fn s_sweep_rows_track_the_closed_form() {
        let mut c = cfg(Experiment::SSweep);
        c.gamma = Range::new(0.0, 1.5, 4);
        let table = run_experiment(&c).unwrap();
        assert_eq!(
            table.columns(),
            ["gamma", "S_numeric", "S_analytic", "abs_diff"]
        );
        assert_eq!(table.n_rows(), 4);
        for row in table.rows() {
            assert!(row[3] < 1e-6, "gamma {}: diff {}", row[0], row[3]);
        }
    }

    #[test]
    fn s_sweep_prepends_a_c_column_when_swept() {
        let mut c = cfg(Experiment::SSweep);
        c.gamma = Range::fixed(0.8);
        c.c = Range::new(0.0, 1.0, 3);
        let table = run_experiment(&c).unwrap();
        assert_eq!(
            table.columns(),
            ["c", "gamma", "S_numeric", "S_analytic", "abs_diff"]
        );
        assert_eq!(table.n_rows(), 3);
        for row in table.rows() {
            assert!(row[4] < 1e-6);
        }
        // no coherence, no violation: the c = 0 row sits at the bound
        assert!((table.rows()[0][2] - 2.0).abs() < 1e-9);
    }

    #[test]
    fn loss_rows_obey_the_affine_law() {
        let mut c = cfg(Experiment::SLossSweep);
        c.gamma = Range::new(0.6, 1.0, 2);
        c.eta = Range::new(0.5, 1.0, 2);
        let table = run_experiment(&c).unwrap();
        assert_eq!(table.n_rows(), 4);
        for row in table.rows() {
            assert!(row[4] < 1e-7, "eta {} gamma {}: diff {}", row[0], row[1], row[4]);
        }
    }

    #[test]
    fn pdf_rows_match_the_closed_form_on_the_covering_grid() {
        for out_phase in [false, true] {
            let mut c = cfg(if out_phase {
                Experiment::PdfOutPhase
            } else {
                Experiment::PdfInPhase
            });
            c.gamma = Range::fixed(1.2);
            c.eta = Range::fixed(0.6);
            let table = run_experiment(&c).unwrap();
            assert_eq!(table.n_rows(), 2001);
            let worst = table.rows().iter().map(|r| r[3]).fold(0.0, f64::max);
            assert!(worst < 1e-6, "out_phase {out_phase}: worst {worst}");
        }
    }

    #[test]
    fn reduced_truncation_surfaces_as_a_leakage_error() {
        let mut c = cfg(Experiment::PdfInPhase);
        c.gamma = Range::fixed(2.0);
        c.dim = Some(8);
        let err = run_experiment(&c).unwrap_err();
        assert!(matches!(
            err,
            RunError::Protocol(ProtocolError::Fock(FockError::TruncationLeakage { .. }))
        ));
    }

    #[test]
    fn coincidence_rows_match_the_closed_form() {
        let mut c = cfg(Experiment::Coincidence);
        c.alpha = Range::new(0.0, PI, 9);
        let table = run_experiment(&c).unwrap();
        assert_eq!(table.n_rows(), 9);
        for row in table.rows() {
            assert!(row[3] < 1e-8);
        }
    }

    #[test]
    fn eigenvalue_ladder_tightens_with_weaker_probes() {
        let table = run_experiment(&cfg(Experiment::AtomicEigenvalue)).unwrap();
        assert_eq!(table.n_rows(), 12);
        for scheme in [0.0, 1.0] {
            let rels: Vec<f64> = table
                .rows()
                .iter()
                .filter(|r| r[0] == scheme)
                .map(|r| r[7])
                .collect();
            assert_eq!(rels.len(), 6);
            for pair in rels.windows(2) {
                assert!(pair[1] < pair[0], "scheme {scheme}: {rels:?}");
            }
        }
    }

    #[test]
    fn rate_sweep_stays_on_the_pi_scale() {
        let table = run_experiment(&cfg(Experiment::KerrRate)).unwrap();
        assert_eq!(table.n_rows(), 10);
        for row in table.rows() {
            let phase_over_pi = row[3].abs();
            assert!(phase_over_pi > 0.1 && phase_over_pi < 10.0);
            assert!(row[4] >= 10.0);
        }
    }

    #[test]
    fn cat_generation_heralds_the_parity_targets() {
        let table = run_experiment(&cfg(Experiment::CatGenerate)).unwrap();
        assert_eq!(table.n_rows(), 3);
        let total: f64 = table.rows().iter().map(|r| r[1]).sum();
        assert!((total - 1.0).abs() < 1e-9);
        for row in table.rows() {
            assert!(row[2] > 1.0 - 1e-8, "outcome {}: fidelity {}", row[0], row[2]);
        }
    }
}
