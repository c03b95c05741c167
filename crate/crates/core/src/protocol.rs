//! End-to-end preparation and read-out pipelines: cross-Kerr generation of
//! cat states in mode b, conditional detection that picks the parity,
//! beam-splitter conversion of a cat into a two-mode entangled coherent
//! state, and the rotation-device coincidence measurement.

use nalgebra::DMatrix;
use num_complex::Complex64;
use std::f64::consts::{FRAC_1_SQRT_2, PI, SQRT_2};
use thiserror::Error;

use crate::fock::{
    coherent_state, superposition, truncation_dim, DensityOperator, FockError, PureState,
    SpaceSpec,
};
use crate::measure::{onoff_efficiency_for, onoff_povm, p_two_clicks_analytic, MeasureError};
use crate::optics::{
    apply_beam_splitter, cross_kerr, rotate_cat, BeamSplitterSpec, KerrPhase, OpticsError,
    RotationReport,
};

#[derive(Debug, Error)]
pub enum ProtocolError {
    #[error(transparent)]
    Fock(#[from] FockError),
    #[error(transparent)]
    Optics(#[from] OpticsError),
    #[error(transparent)]
    Measure(#[from] MeasureError),
    #[error("amplitude must be finite and nonzero, got {value}")]
    BadAmplitude { value: f64 },
    #[error("coherence parameter must lie in [-1, 1], got {c}")]
    BadCoherence { c: f64 },
    #[error("detector efficiency must lie in (0, 1], got {eta}")]
    BadEfficiency { eta: f64 },
    #[error("expected a single-mode state, got {n_modes} modes")]
    NotSingleMode { n_modes: usize },
}

/// Read-out label of one conditional-generation run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CatLabel {
    Even,
    Odd,
    Inconclusive,
}

/// One detector outcome with the mode-b state it projects onto.
#[derive(Debug, Clone)]
pub struct CatOutcome {
    pub label: CatLabel,
    pub probability: f64,
    pub conditional_state: DensityOperator,
}

fn check_positive_amplitude(value: f64) -> Result<f64, ProtocolError> {
    if !value.is_finite() || value <= 0.0 {
        return Err(ProtocolError::BadAmplitude { value });
    }
    Ok(value)
}

/// Normalized even superposition of |gamma> and |-gamma>.
pub fn even_cat(gamma: f64, dim: usize) -> Result<PureState, ProtocolError> {
    cat_superposition(gamma, Complex64::new(1.0, 0.0), dim)
}

/// Normalized odd superposition of |gamma> and |-gamma>.
pub fn odd_cat(gamma: f64, dim: usize) -> Result<PureState, ProtocolError> {
    cat_superposition(gamma, Complex64::new(-1.0, 0.0), dim)
}

fn cat_superposition(
    gamma: f64,
    sign: Complex64,
    dim: usize,
) -> Result<PureState, ProtocolError> {
    check_positive_amplitude(gamma)?;
    let one = Complex64::new(1.0, 0.0);
    let plus = coherent_state(Complex64::new(gamma, 0.0), dim)?;
    let minus = coherent_state(Complex64::new(-gamma, 0.0), dim)?;
    Ok(superposition(&[(one, &plus), (sign, &minus)])?.normalized()?)
}

/// Single-mode cat-like mixture
/// A {|g><g| + |-g><-g| + c (|g><-g| + |-g><g|)} at amplitude g = gamma.
#[derive(Debug, Clone, Copy)]
pub struct MixedCatSpec {
    gamma: f64,
    c: f64,
}

impl MixedCatSpec {
    pub fn new(gamma: f64, c: f64) -> Result<Self, ProtocolError> {
        check_positive_amplitude(gamma)?;
        if !c.is_finite() || !(-1.0..=1.0).contains(&c) {
            return Err(ProtocolError::BadCoherence { c });
        }
        Ok(Self { gamma, c })
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn coherence(&self) -> f64 {
        self.c
    }

    /// Normalization weight A = 1 / (2 (1 + c e^{-2 gamma^2})).
    pub fn mixing_weight(&self) -> f64 {
        1.0 / (2.0 * (1.0 + self.c * (-2.0 * self.gamma * self.gamma).exp()))
    }

    pub fn default_dim(&self) -> usize {
        truncation_dim(self.gamma)
    }

    /// Correlation score of the split mixture in closed form,
    /// 2 - 4 gamma^2 c e^{-2 gamma^2} / (1 + c e^{-2 gamma^2}).
    pub fn duan_analytic(&self) -> f64 {
        let k = self.c * (-2.0 * self.gamma * self.gamma).exp();
        2.0 - 4.0 * self.gamma * self.gamma * k / (1.0 + k)
    }

    pub fn density(&self, dim: usize) -> Result<DensityOperator, ProtocolError> {
        let a = self.mixing_weight();
        let plus = coherent_state(Complex64::new(self.gamma, 0.0), dim)?;
        let minus = coherent_state(Complex64::new(-self.gamma, 0.0), dim)?;
        let vp = plus.amplitudes();
        let vm = minus.amplitudes();
        let mut m = DMatrix::<Complex64>::zeros(dim, dim);
        for i in 0..dim {
            for j in 0..dim {
                let direct = vp[i] * vp[j].conj() + vm[i] * vm[j].conj();
                let cross = vp[i] * vm[j].conj() + vm[i] * vp[j].conj();
                m[(i, j)] = Complex64::new(a, 0.0) * (direct + cross.scale(self.c));
            }
        }
        Ok(DensityOperator::new(plus.space().clone(), m)?)
    }
}

/// Two-mode entangled coherent state N {|g,-g> + |-g,g>} with g = gamma/sqrt(2).
#[derive(Debug, Clone, Copy)]
pub struct EcsSpec {
    gamma: f64,
}

impl EcsSpec {
    pub fn new(gamma: f64) -> Result<Self, ProtocolError> {
        check_positive_amplitude(gamma)?;
        Ok(Self { gamma })
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    /// Prefactor N = 1 / sqrt(2 (1 + e^{-2 gamma^2})).
    pub fn normalization(&self) -> f64 {
        1.0 / (2.0 * (1.0 + (-2.0 * self.gamma * self.gamma).exp())).sqrt()
    }

    /// Per-mode truncation covering the component amplitude gamma/sqrt(2).
    pub fn default_dim(&self) -> usize {
        truncation_dim(self.gamma * FRAC_1_SQRT_2)
    }

    pub fn state(&self, dim: usize) -> Result<PureState, ProtocolError> {
        let n = Complex64::new(self.normalization(), 0.0);
        self.weighted_state((n, n), dim, dim)
    }

    /// Relative-phase variant N {e^{i alpha/2}|g,-g> + e^{-i alpha/2}|-g,g>}.
    /// Keeps the unrotated prefactor, so the norm dips below 1 for alpha != 0.
    pub fn rotated_state(&self, alpha: f64, dim: usize) -> Result<PureState, ProtocolError> {
        if !alpha.is_finite() {
            return Err(ProtocolError::BadAmplitude { value: alpha });
        }
        let n = self.normalization();
        let cp = Complex64::from_polar(n, 0.5 * alpha);
        let cm = Complex64::from_polar(n, -0.5 * alpha);
        self.weighted_state((cp, cm), dim, dim)
    }

    fn weighted_state(
        &self,
        coeffs: (Complex64, Complex64),
        d0: usize,
        d1: usize,
    ) -> Result<PureState, ProtocolError> {
        let g = self.gamma * FRAC_1_SQRT_2;
        let gp = Complex64::new(g, 0.0);
        let plus = coherent_state(gp, d0)?.tensor(&coherent_state(-gp, d1)?)?;
        let minus = coherent_state(-gp, d0)?.tensor(&coherent_state(gp, d1)?)?;
        Ok(superposition(&[(coeffs.0, &plus), (coeffs.1, &minus)])?)
    }
}

/// Coherent states in modes a and b coupled by the cross-Kerr phase phi:
/// each |n>_b sector of mode b multiplies mode a into coherent(alpha e^{-i phi n}).
pub fn generate_entangled_state(
    alpha: f64,
    gamma: f64,
    phi: f64,
) -> Result<PureState, ProtocolError> {
    if !alpha.is_finite() {
        return Err(ProtocolError::BadAmplitude { value: alpha });
    }
    if !gamma.is_finite() {
        return Err(ProtocolError::BadAmplitude { value: gamma });
    }
    kerr_state(
        alpha,
        gamma,
        phi,
        truncation_dim(alpha.abs()),
        truncation_dim(gamma.abs()),
    )
}

fn kerr_state(
    alpha: f64,
    gamma: f64,
    phi: f64,
    da: usize,
    db: usize,
) -> Result<PureState, ProtocolError> {
    let a = coherent_state(Complex64::new(alpha, 0.0), da)?;
    let b = coherent_state(Complex64::new(gamma, 0.0), db)?;
    let joint = a.tensor(&b)?;
    let u = cross_kerr(KerrPhase::new(phi)?, (0, 1), joint.space())?;
    Ok(u.apply(&joint)?)
}

/// Conditional cat generation with ideal click/no-click detectors.
pub fn conditional_cat(alpha: f64, gamma: f64) -> Result<Vec<CatOutcome>, ProtocolError> {
    conditional_cat_with_efficiency(alpha, gamma, 1.0)
}

/// Conditional cat generation: the phi = pi entangled state, mode a mixed with
/// a phase-locked coherent(alpha) ancilla on a 50:50 beam splitter, read out by
/// on/off detectors of efficiency eta on both output ports. Detector 1 watches
/// the port that turns bright for the |alpha> branch, detector 2 the other;
/// (click, silent) heralds the even cat, (silent, click) the odd one, and two
/// silent detectors leave the parity undecided.
pub fn conditional_cat_with_efficiency(
    alpha: f64,
    gamma: f64,
    eta: f64,
) -> Result<Vec<CatOutcome>, ProtocolError> {
    if !alpha.is_finite() || alpha == 0.0 {
        return Err(ProtocolError::BadAmplitude { value: alpha });
    }
    check_positive_amplitude(gamma)?;
    if !eta.is_finite() || !(eta > 0.0 && eta <= 1.0) {
        return Err(ProtocolError::BadEfficiency { eta });
    }
    // The bright output port carries amplitude sqrt(2) alpha.
    let da = truncation_dim(SQRT_2 * alpha.abs());
    let db = truncation_dim(gamma);
    let psi = kerr_state(alpha, gamma, PI, da, db)?;
    let ancilla = coherent_state(Complex64::new(alpha, 0.0), da)?;
    let joint = psi.tensor(&ancilla)?;
    let bs = BeamSplitterSpec::new(0.5, (0, 2))?;
    let out = apply_beam_splitter(&bs, &joint)?;
    let (w_silent, w_click) = onoff_weights(eta, da)?;
    let outcomes = vec![
        detector_outcome(&out, CatLabel::Even, &w_click, &w_silent)?,
        detector_outcome(&out, CatLabel::Odd, &w_silent, &w_click)?,
        detector_outcome(&out, CatLabel::Inconclusive, &w_silent, &w_silent)?,
    ];
    Ok(outcomes)
}

fn onoff_weights(eta: f64, dim: usize) -> Result<(Vec<f64>, Vec<f64>), ProtocolError> {
    let space = SpaceSpec::single(dim)?;
    let (no_click, click) = onoff_povm(eta, 0, &space)?;
    let w_nc = (0..dim).map(|n| no_click.matrix()[(n, n)].re).collect();
    let w_c = (0..dim).map(|n| click.matrix()[(n, n)].re).collect();
    Ok((w_nc, w_c))
}

/// Projects modes 0 and 2 onto diagonal detector weights and normalizes the
/// resulting mode-1 state.
fn detector_outcome(
    out: &PureState,
    label: CatLabel,
    w_d1: &[f64],
    w_d2: &[f64],
) -> Result<CatOutcome, ProtocolError> {
    let space = out.space();
    let (da, db, dc) = (
        space.mode_dim(0),
        space.mode_dim(1),
        space.mode_dim(2),
    );
    let amps = out.amplitudes();
    let mut m = DMatrix::<Complex64>::zeros(db, db);
    let mut slice = vec![Complex64::new(0.0, 0.0); db];
    for n0 in 0..da {
        for n2 in 0..dc {
            let w = w_d1[n0] * w_d2[n2];
            if w == 0.0 {
                continue;
            }
            for (mb, s) in slice.iter_mut().enumerate() {
                *s = amps[(n0 * db + mb) * dc + n2];
            }
            for i in 0..db {
                let wi = slice[i].scale(w);
                for j in 0..=i {
                    m[(i, j)] += wi * slice[j].conj();
                }
            }
        }
    }
    for i in 0..db {
        for j in (i + 1)..db {
            m[(i, j)] = m[(j, i)].conj();
        }
    }
    let mode_b = SpaceSpec::single(db)?;
    let (conditional_state, probability) = DensityOperator::from_unnormalized(mode_b, m)?;
    Ok(CatOutcome {
        label,
        probability,
        conditional_state,
    })
}

/// Splits a single-mode cat on a 50:50 beam splitter against vacuum, leaving
/// the two-mode entangled coherent state at component amplitude gamma/sqrt(2).
pub fn ecs_from_cat(cat: &PureState) -> Result<DensityOperator, ProtocolError> {
    let n_modes = cat.space().n_modes();
    if n_modes != 1 {
        return Err(ProtocolError::NotSingleMode { n_modes });
    }
    let dim = cat.space().mode_dim(0);
    let vacuum = coherent_state(Complex64::new(0.0, 0.0), dim)?;
    let joint = cat.tensor(&vacuum)?;
    let bs = BeamSplitterSpec::new(0.5, (0, 1))?;
    Ok(apply_beam_splitter(&bs, &joint)?.to_density()?)
}

/// Density-operator variant of [`ecs_from_cat`] for the coherence-c mixture.
pub fn ecs_from_cat_mixture(spec: &MixedCatSpec) -> Result<DensityOperator, ProtocolError> {
    let dim = spec.default_dim();
    let rho = spec.density(dim)?;
    let vacuum = coherent_state(Complex64::new(0.0, 0.0), dim)?.to_density()?;
    let joint = rho.tensor(&vacuum)?;
    let bs = BeamSplitterSpec::new(0.5, (0, 1))?;
    let u = crate::optics::beam_splitter(&bs, joint.space())?;
    Ok(u.conjugate_density(&joint)?)
}

/// Coincidence read-out after the rotation device.
#[derive(Debug, Clone)]
pub struct CoincidenceReport {
    /// Two-click probability of the simulated beam-splitter channel.
    pub channel: f64,
    /// Closed-form value for an idealized phase rotation.
    pub ideal: f64,
    /// Transmittivity and ancilla-amplitude bookkeeping of the rotation step.
    pub rotation: RotationReport,
}

/// Channel state of the kept modes after rotating mode 0 of the entangled
/// coherent state by alpha; the ancilla amplitude follows
/// E = alpha / (2 sqrt(2 (1 - T)) gamma).
pub fn rotated_ecs(
    gamma: f64,
    alpha: f64,
    t: f64,
) -> Result<(DensityOperator, RotationReport), ProtocolError> {
    let spec = EcsSpec::new(gamma)?;
    if !alpha.is_finite() {
        return Err(ProtocolError::BadAmplitude { value: alpha });
    }
    let g = gamma * FRAC_1_SQRT_2;
    let theta = alpha / (2.0 * SQRT_2 * gamma);
    // Mode 0 picks up the displacement offset i theta on top of +-g.
    let d0 = truncation_dim(g.hypot(theta));
    let d1 = spec.default_dim();
    let n = Complex64::new(spec.normalization(), 0.0);
    let psi = spec.weighted_state((n, n), d0, d1)?;
    Ok(rotate_cat(theta, t, 0, &psi)?)
}

/// Rotates one arm of the entangled coherent state and reads both modes with
/// on/off detectors whose single-photon miss probability is 1 - eta. Returns
/// the simulated coincidence probability next to the idealized-rotation value.
pub fn rotation_coincidence(
    gamma: f64,
    alpha: f64,
    t: f64,
    eta: f64,
) -> Result<CoincidenceReport, ProtocolError> {
    let (rho, rotation) = rotated_ecs(gamma, alpha, t)?;
    let e = onoff_efficiency_for(eta)?;
    let space = rho.space();
    let (d0, d1) = (space.mode_dim(0), space.mode_dim(1));
    let (_, w_c0) = onoff_weights(e, d0)?;
    let (_, w_c1) = onoff_weights(e, d1)?;
    let m = rho.matrix();
    let mut channel = 0.0;
    for n0 in 0..d0 {
        for n1 in 0..d1 {
            let j = n0 * d1 + n1;
            channel += m[(j, j)].re * w_c0[n0] * w_c1[n1];
        }
    }
    let ideal = p_two_clicks_analytic(gamma, eta, alpha)?;
    Ok(CoincidenceReport {
        channel,
        ideal,
        rotation,
    })
}
