//! Homodyne quadrature statistics, the two-mode total-variance separability
//! test, and on/off photodetector coincidences.

use nalgebra::DVector;
use num_complex::Complex64;
use std::f64::consts::{FRAC_1_SQRT_2, PI, SQRT_2};
use thiserror::Error;

use crate::fock::{
    partial_trace, DensityOperator, FockError, ModeOperator, PureState, SpaceSpec,
};
use crate::optics::{ladder, loss_channel, OpticsError};

/// Allowed deviation of a sampled density's Simpson integral from 1.
pub const PDF_NORMALIZATION_TOL: f64 = 1e-6;
/// Most negative sampled density value tolerated as roundoff.
pub const PDF_FLOOR: f64 = -1e-10;
/// Point count of the stock sampling grid.
pub const DEFAULT_GRID_POINTS: usize = 2001;

#[derive(Debug, Error)]
pub enum MeasureError {
    #[error(transparent)]
    Fock(#[from] FockError),
    #[error(transparent)]
    Optics(#[from] OpticsError),
    #[error("efficiency {eta} outside [0, 1]")]
    BadEfficiency { eta: f64 },
    #[error("quadrature angle {theta} is not finite")]
    BadAngle { theta: f64 },
    #[error("grid [{x_min}, {x_max}] with {n_points} points needs x_min < x_max and an odd count of at least 3")]
    BadGrid {
        x_min: f64,
        x_max: f64,
        n_points: usize,
    },
    #[error("grid misses probability mass: integral {integral} is off 1 by more than {tol:.0e}")]
    GridCoverage { integral: f64, tol: f64 },
    #[error("sampled density dips to {min:.3e}, below the roundoff floor")]
    NegativeDensity { min: f64 },
    #[error("need a two-mode state, got {n_modes} modes")]
    NotTwoMode { n_modes: usize },
    #[error("combination weight q must be finite and nonzero, got {q}")]
    BadWeight { q: f64 },
    #[error("amplitude {value} is not finite")]
    NonFiniteAmplitude { value: f64 },
}

fn check_eta(eta: f64) -> Result<(), MeasureError> {
    if !eta.is_finite() || !(0.0..=1.0).contains(&eta) {
        return Err(MeasureError::BadEfficiency { eta });
    }
    Ok(())
}

fn check_amplitude(value: f64) -> Result<(), MeasureError> {
    if !value.is_finite() {
        return Err(MeasureError::NonFiniteAmplitude { value });
    }
    Ok(())
}

fn check_mode(space: &SpaceSpec, mode: usize) -> Result<(), MeasureError> {
    if mode >= space.n_modes() {
        return Err(FockError::InvalidMode {
            mode,
            n_modes: space.n_modes(),
        }
        .into());
    }
    Ok(())
}

/// Local-oscillator phase, detector efficiency, and sampling grid of one
/// homodyne channel.
#[derive(Debug, Clone, Copy)]
pub struct HomodyneSetting {
    theta: f64,
    eta: f64,
    x_min: f64,
    x_max: f64,
    n_points: usize,
}

impl HomodyneSetting {
    pub fn new(
        theta: f64,
        eta: f64,
        x_min: f64,
        x_max: f64,
        n_points: usize,
    ) -> Result<Self, MeasureError> {
        if !theta.is_finite() {
            return Err(MeasureError::BadAngle { theta });
        }
        check_eta(eta)?;
        if !x_min.is_finite() || !x_max.is_finite() || x_min >= x_max || n_points < 3
            || n_points % 2 == 0
        {
            return Err(MeasureError::BadGrid {
                x_min,
                x_max,
                n_points,
            });
        }
        Ok(Self {
            theta,
            eta,
            x_min,
            x_max,
            n_points,
        })
    }

    /// Stock grid wide enough for any state of coherent extent up to `a_max`:
    /// symmetric about 0 with halfwidth sqrt(2) a_max + 6.
    pub fn covering(theta: f64, eta: f64, a_max: f64) -> Result<Self, MeasureError> {
        check_amplitude(a_max)?;
        let w = SQRT_2 * a_max.abs() + 6.0;
        Self::new(theta, eta, -w, w, DEFAULT_GRID_POINTS)
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn grid(&self) -> (f64, f64, usize) {
        (self.x_min, self.x_max, self.n_points)
    }

    /// Sample abscissas, uniformly spaced, endpoints included.
    pub fn xs(&self) -> Vec<f64> {
        let h = (self.x_max - self.x_min) / (self.n_points - 1) as f64;
        (0..self.n_points)
            .map(|i| self.x_min + h * i as f64)
            .collect()
    }
}

/// Uniform Simpson weights; caller guarantees odd length >= 3.
fn simpson(xs: &[f64], ps: &[f64]) -> f64 {
    let h = (xs[xs.len() - 1] - xs[0]) / (xs.len() - 1) as f64;
    let mut acc = ps[0] + ps[ps.len() - 1];
    for (i, &p) in ps.iter().enumerate().skip(1).take(ps.len() - 2) {
        acc += if i % 2 == 1 { 4.0 * p } else { 2.0 * p };
    }
    acc * h / 3.0
}

/// Probability density sampled on a uniform quadrature grid.
#[derive(Debug, Clone)]
pub struct QuadratureDistribution {
    xs: Vec<f64>,
    ps: Vec<f64>,
}

impl QuadratureDistribution {
    fn new(xs: Vec<f64>, ps: Vec<f64>) -> Result<Self, MeasureError> {
        let min = ps.iter().copied().fold(f64::INFINITY, f64::min);
        if min < PDF_FLOOR {
            return Err(MeasureError::NegativeDensity { min });
        }
        Ok(Self { xs, ps })
    }

    pub fn xs(&self) -> &[f64] {
        &self.xs
    }

    pub fn ps(&self) -> &[f64] {
        &self.ps
    }

    /// Simpson integral of the density over the grid.
    pub fn integral(&self) -> f64 {
        simpson(&self.xs, &self.ps)
    }

    /// Simpson integral of x p(x).
    pub fn mean(&self) -> f64 {
        let xp: Vec<f64> = self.xs.iter().zip(&self.ps).map(|(x, p)| x * p).collect();
        simpson(&self.xs, &xp)
    }

    /// Simpson integral of (x - mean)^2 p(x).
    pub fn variance(&self) -> f64 {
        let m = self.mean();
        let xxp: Vec<f64> = self
            .xs
            .iter()
            .zip(&self.ps)
            .map(|(x, p)| (x - m) * (x - m) * p)
            .collect();
        simpson(&self.xs, &xxp)
    }
}

/// Rotated quadrature (b' e^{i theta} + b e^{-i theta}) / sqrt(2) on one mode.
///
/// theta = 0 gives the in-phase quadrature x, theta = pi/2 the out-of-phase
/// quadrature p.
pub fn quadrature_operator(
    theta: f64,
    mode: usize,
    space: &SpaceSpec,
) -> Result<ModeOperator, MeasureError> {
    if !theta.is_finite() {
        return Err(MeasureError::BadAngle { theta });
    }
    let b = ladder(mode, space)?;
    let fwd = Complex64::from_polar(FRAC_1_SQRT_2, -theta);
    let bwd = Complex64::from_polar(FRAC_1_SQRT_2, theta);
    Ok(b.adjoint().scaled(bwd).add(&b.scaled(fwd))?)
}

/// Harmonic-oscillator position wavefunctions psi_n(x) for n < dim, built by
/// the stable upward recurrence from psi_0 = pi^{-1/4} e^{-x^2/2}.
fn oscillator_table(dim: usize, xs: &[f64]) -> Vec<Vec<f64>> {
    let mut tab = vec![vec![0.0; xs.len()]; dim];
    let norm0 = PI.powf(-0.25);
    for (i, &x) in xs.iter().enumerate() {
        tab[0][i] = norm0 * (-x * x / 2.0).exp();
    }
    if dim > 1 {
        for (i, &x) in xs.iter().enumerate() {
            tab[1][i] = SQRT_2 * x * tab[0][i];
        }
    }
    for n in 1..dim.saturating_sub(1) {
        let c_up = (2.0 / (n as f64 + 1.0)).sqrt();
        let c_down = (n as f64 / (n as f64 + 1.0)).sqrt();
        for (i, &x) in xs.iter().enumerate() {
            tab[n + 1][i] = c_up * x * tab[n][i] - c_down * tab[n - 1][i];
        }
    }
    tab
}

/// Homodyne sample density of one mode of a state.
///
/// Detector loss acts first as a beam-splitter dilation at transmittivity
/// eta on the measured mode; the surviving mode is then read out along the
/// quadrature rotated by the local-oscillator phasen.
pub fn quadrature_pdf(
    rho: &DensityOperator,
    mode: usize,
    setting: &HomodyneSetting,
) -> Result<QuadratureDistribution, MeasureError> {
    check_mode(rho.space(), mode)?;
    let single = if rho.space().n_modes() == 1 {
        rho.clone()
    } else {
        partial_trace(rho, &[mode])?
    };
    let lossy = loss_channel(setting.eta, 0, &single)?;
    let d = lossy.space().total_dim();
    let m = lossy.matrix();
    let xs = setting.xs();
    let tab = oscillator_table(d, &xs);
    let mut ps = vec![0.0; xs.len()];
    for n in 0..d {
        let w = m[(n, n)].re;
        for (i, p) in ps.iter_mut().enumerate() {
            *p += w * tab[n][i] * tab[n][i];
        }
    }
    for n in 0..d {
        for k in (n + 1)..d {
            let phase = Complex64::from_polar(1.0, -setting.theta * (n as f64 - k as f64));
            let w = 2.0 * (m[(n, k)] * phase).re;
            if w == 0.0 {
                continue;
            }
            for (i, p) in ps.iter_mut().enumerate() {
                *p += w * tab[n][i] * tab[k][i];
            }
        }
    }
    let dist = QuadratureDistribution::new(xs, ps)?;
    let integral = dist.integral();
    if (integral - 1.0).abs() > PDF_NORMALIZATION_TOL {
        return Err(MeasureError::GridCoverage {
            integral,
            tol: PDF_NORMALIZATION_TOL,
        });
    }
    Ok(dist)
}

/// Closed-form lossy in-phase density of a balanced even superposition of
/// coherent amplitudes +gamma and -gamma: two Gaussian hills at
/// +-sqrt(2 eta) gamma plus a small central term.
pub fn analytic_pdf_in_phase(gamma: f64, eta: f64, x: f64) -> Result<f64, MeasureError> {
    check_amplitude(gamma)?;
    check_eta(eta)?;
    let g2 = gamma * gamma;
    let c = (2.0 * eta).sqrt() * gamma;
    let num = 2.0 * (-x * x - 2.0 * g2).exp()
        + (-(x - c) * (x - c)).exp()
        + (-(x + c) * (x + c)).exp();
    Ok(num / (2.0 * PI.sqrt() * (1.0 + (-2.0 * g2).exp())))
}

/// Closed-form lossy out-of-phase density of the same superposition: a
/// Gaussian envelope carrying a fringe of frequency 2 sqrt(2 eta) gamma whose
/// contrast is e^{-2 (1 - eta) gamma^2}.
pub fn analytic_pdf_out_phase(gamma: f64, eta: f64, x: f64) -> Result<f64, MeasureError> {
    check_amplitude(gamma)?;
    check_eta(eta)?;
    let g2 = gamma * gamma;
    let contrast = (-2.0 * (1.0 - eta) * g2).exp();
    let fringe = 1.0 + contrast * (2.0 * (2.0 * eta).sqrt() * gamma * x).cos();
    Ok((-x * x).exp() * fringe / (PI.sqrt() * (1.0 + (-2.0 * g2).exp())))
}

/// Weight of the collective quadrature pair u = |q| x1 + x2 / q,
/// v = |q| p1 - p2 / q.
#[derive(Debug, Clone, Copy)]
pub struct DuanConfig {
    q: f64,
}

impl DuanConfig {
    pub fn new(q: f64) -> Result<Self, MeasureError> {
        if !q.is_finite() || q == 0.0 {
            return Err(MeasureError::BadWeight { q });
        }
        Ok(Self { q })
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    /// Total variance any separable state must reach: q^2 + 1/q^2.
    pub fn bound(&self) -> f64 {
        self.q * self.q + 1.0 / (self.q * self.q)
    }
}

impl Default for DuanConfig {
    fn default() -> Self {
        Self { q: 1.0 }
    }
}

/// Total variance of the collective pair, next to the separability bound it
/// is judged against.
#[derive(Debug, Clone, Copy)]
pub struct DuanScore {
    pub s: f64,
    pub bound: f64,
}

impl DuanScore {
    /// True when the score witnesses entanglement.
    pub fn below_bound(&self) -> bool {
        self.s < self.bound
    }
}

/// First and second ladder moments of a two-mode density, accumulated in one
/// sweep over the stored entries.
struct LadderMoments {
    a1: Complex64,
    a2: Complex64,
    n1: f64,
    n2: f64,
    a1_sq: Complex64,
    a2_sq: Complex64,
    a1_a2: Complex64,
    a1_dag_a2: Complex64,
}

fn ladder_moments(rho: &DensityOperator) -> LadderMoments {
    let d1 = rho.space().mode_dim(0);
    let d2 = rho.space().mode_dim(1);
    let m = rho.matrix();
    let mut mom = LadderMoments {
        a1: Complex64::default(),
        a2: Complex64::default(),
        n1: 0.0,
        n2: 0.0,
        a1_sq: Complex64::default(),
        a2_sq: Complex64::default(),
        a1_a2: Complex64::default(),
        a1_dag_a2: Complex64::default(),
    };
    for n1 in 0..d1 {
        for n2 in 0..d2 {
            let j = n1 * d2 + n2;
            mom.n1 += n1 as f64 * m[(j, j)].re;
            mom.n2 += n2 as f64 * m[(j, j)].re;
            if n1 + 1 < d1 {
                mom.a1 += m[(j, j + d2)] * ((n1 + 1) as f64).sqrt();
            }
            if n2 + 1 < d2 {
                mom.a2 += m[(j, j + 1)] * ((n2 + 1) as f64).sqrt();
            }
            if n1 + 2 < d1 {
                mom.a1_sq += m[(j, j + 2 * d2)] * (((n1 + 1) * (n1 + 2)) as f64).sqrt();
            }
            if n2 + 2 < d2 {
                mom.a2_sq += m[(j, j + 2)] * (((n2 + 1) * (n2 + 2)) as f64).sqrt();
            }
            if n1 + 1 < d1 && n2 + 1 < d2 {
                let w = (((n1 + 1) * (n2 + 1)) as f64).sqrt();
                mom.a1_a2 += m[(j, j + d2 + 1)] * w;
                mom.a1_dag_a2 += m[(j + d2, j + 1)] * w;
            }
        }
    }
    mom
}

/// Total variance of u and v over a two-mode state.
pub fn duan_s(rho: &DensityOperator, cfg: &DuanConfig) -> Result<DuanScore, MeasureError> {
    if rho.space().n_modes() != 2 {
        return Err(MeasureError::NotTwoMode {
            n_modes: rho.space().n_modes(),
        });
    }
    let mom = ladder_moments(rho);
    let x1 = SQRT_2 * mom.a1.re;
    let p1 = SQRT_2 * mom.a1.im;
    let x2 = SQRT_2 * mom.a2.re;
    let p2 = SQRT_2 * mom.a2.im;
    let x1_sq = mom.a1_sq.re + mom.n1 + 0.5;
    let p1_sq = -mom.a1_sq.re + mom.n1 + 0.5;
    let x2_sq = mom.a2_sq.re + mom.n2 + 0.5;
    let p2_sq = -mom.a2_sq.re + mom.n2 + 0.5;
    let x1_x2 = mom.a1_a2.re + mom.a1_dag_a2.re;
    let p1_p2 = mom.a1_dag_a2.re - mom.a1_a2.re;
    let qa = cfg.q.abs();
    let qb = 1.0 / cfg.q;
    let u_mean = qa * x1 + qb * x2;
    let u_sq = qa * qa * x1_sq + qb * qb * x2_sq + 2.0 * qa * qb * x1_x2;
    let v_mean = qa * p1 - qb * p2;
    let v_sq = qa * qa * p1_sq + qb * qb * p2_sq - 2.0 * qa * qb * p1_p2;
    Ok(DuanScore {
        s: (u_sq - u_mean * u_mean) + (v_sq - v_mean * v_mean),
        bound: cfg.bound(),
    })
}

/// Total variance after equal detector loss eta on both modes.
pub fn duan_s_with_loss(
    rho: &DensityOperator,
    cfg: &DuanConfig,
    eta: f64,
) -> Result<DuanScore, MeasureError> {
    if rho.space().n_modes() != 2 {
        return Err(MeasureError::NotTwoMode {
            n_modes: rho.space().n_modes(),
        });
    }
    check_eta(eta)?;
    let first = loss_channel(eta, 0, rho)?;
    let both = loss_channel(eta, 1, &first)?;
    duan_s(&both, cfg)
}

/// Closed-form total variance of the balanced entangled pair obtained by
/// splitting an even superposition of +-gamma on a 50:50 mirror, at q = 1.
pub fn s_perfect_analytic(gamma: f64) -> f64 {
    let g2 = gamma * gamma;
    let e = (-2.0 * g2).exp();
    2.0 * (1.0 - g2 * 2.0 * e / (1.0 + e))
}

/// No-click and click elements of an on/off photodetector on one mode.
///
/// The no-click weight on n photons is (1 - efficiency)^{2n}; the click
/// element is its complement.
pub fn onoff_povm(
    efficiency: f64,
    mode: usize,
    space: &SpaceSpec,
) -> Result<(ModeOperator, ModeOperator), MeasureError> {
    check_eta(efficiency)?;
    check_mode(space, mode)?;
    let dim = space.total_dim();
    let stride = space.strides()[mode];
    let d = space.mode_dim(mode);
    let base = 1.0 - efficiency;
    let mut no_click = DVector::from_element(dim, Complex64::default());
    for flat in 0..dim {
        let n = (flat / stride) % d;
        no_click[flat] = Complex64::new(base.powi(2 * n as i32), 0.0);
    }
    let nc = ModeOperator::new(space.clone(), nalgebra::DMatrix::from_diagonal(&no_click))?;
    let click = ModeOperator::identity(space.clone()).add(&nc.scaled(Complex64::new(-1.0, 0.0)))?;
    Ok((nc, click))
}

/// Overall miss chance 1 - eta maps onto the squared-exponent detector
/// elements through efficiency = 1 - sqrt(1 - eta).
pub fn onoff_efficiency_for(eta: f64) -> Result<f64, MeasureError> {
    check_eta(eta)?;
    Ok(1.0 - (1.0 - eta).sqrt())
}

/// Joint click probability of on/off detectors of equal quantum efficiency
/// eta watching both modes of a two-mode state vector.
///
/// The vector is used exactly as given; a sub-unit norm scales the
/// probability with it.
pub fn p_two_clicks(phi: &PureState, eta: f64) -> Result<f64, MeasureError> {
    if phi.space().n_modes() != 2 {
        return Err(MeasureError::NotTwoMode {
            n_modes: phi.space().n_modes(),
        });
    }
    let e = onoff_efficiency_for(eta)?;
    let (_, click_a) = onoff_povm(e, 0, phi.space())?;
    let (_, click_b) = onoff_povm(e, 1, phi.space())?;
    let amps = phi.amplitudes();
    let ma = click_a.matrix();
    let mb = click_b.matrix();
    let mut p = 0.0;
    for j in 0..amps.len() {
        p += amps[j].norm_sqr() * ma[(j, j)].re * mb[(j, j)].re;
    }
    Ok(p)
}

/// Closed-form joint click probability for the phase-tagged entangled pair of
/// total amplitude gamma rotated by alpha, carrying the fixed prefactor of
/// the unrotated pair.
pub fn p_two_clicks_analytic(gamma: f64, eta: f64, alpha: f64) -> Result<f64, MeasureError> {
    check_amplitude(gamma)?;
    check_eta(eta)?;
    check_amplitude(alpha)?;
    let g2 = gamma * gamma;
    let n_sq = 1.0 / (2.0 * (1.0 + (-2.0 * g2).exp()));
    let c = 2.0 * (-g2).exp() * n_sq;
    let bright = (g2 / 2.0).exp() - ((1.0 - eta) * g2 / 2.0).exp();
    let dark = (-g2 / 2.0).exp() - (-(1.0 - eta) * g2 / 2.0).exp();
    Ok(c * (bright * bright + alpha.cos() * dark * dark))
}

/// Fringe contrast of the click coincidence as the rotation angle is
/// scanned: the ratio of the oscillating to the constant coefficient.
pub fn two_clicks_visibility(gamma: f64, eta: f64) -> Result<f64, MeasureError> {
    check_amplitude(gamma)?;
    check_eta(eta)?;
    let g2 = gamma * gamma;
    let bright = (g2 / 2.0).exp() - ((1.0 - eta) * g2 / 2.0).exp();
    let dark = (-g2 / 2.0).exp() - (-(1.0 - eta) * g2 / 2.0).exp();
    Ok((dark * dark) / (bright * bright))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::{coherent_state, superposition, truncation_dim};
    use nalgebra::DMatrix;

    const TAU: f64 = 1e-12;

    fn coh(alpha: Complex64, dim: usize) -> PureState {
        coherent_state(alpha, dim).unwrap()
    }

    fn re(x: f64) -> Complex64 {
        Complex64::new(x, 0.0)
    }

    /// Balanced even superposition of +-gamma on one mode, normalized.
    fn even_pair(gamma: f64, dim: usize) -> PureState {
        let plus = coh(re(gamma), dim);
        let minus = coh(re(-gamma), dim);
        superposition(&[(re(1.0), &plus), (re(1.0), &minus)])
            .unwrap()
            .normalized()
            .unwrap()
    }

    /// Two-mode entangled pair from splitting the even superposition of
    /// total amplitude gamma, normalized.
    fn entangled_pair(gamma: f64, dim: usize) -> PureState {
        let b = gamma / SQRT_2;
        let t1 = coh(re(b), dim).tensor(&coh(re(-b), dim)).unwrap();
        let t2 = coh(re(-b), dim).tensor(&coh(re(b), dim)).unwrap();
        superposition(&[(re(1.0), &t1), (re(1.0), &t2)])
            .unwrap()
            .normalized()
            .unwrap()
    }

    /// Same pair rotated by alpha, carrying the fixed prefactor of the
    /// unrotated pair instead of a unit norm.
    fn rotated_pair(gamma: f64, alpha: f64, dim: usize) -> PureState {
        let b = gamma / SQRT_2;
        let t1 = coh(re(b), dim).tensor(&coh(re(-b), dim)).unwrap();
        let t2 = coh(re(-b), dim).tensor(&coh(re(b), dim)).unwrap();
        let norm = 1.0 / (2.0 * (1.0 + (-2.0 * gamma * gamma).exp())).sqrt();
        let fwd = Complex64::from_polar(norm, alpha / 2.0);
        let bwd = Complex64::from_polar(norm, -alpha / 2.0);
        superposition(&[(fwd, &t1), (bwd, &t2)]).unwrap()
    }

    /// Four-term two-mode density with cross weight c, normalized.
    fn pair_mixture(gamma: f64, c: f64, dim: usize) -> DensityOperator {
        let b = gamma / SQRT_2;
        let u = coh(re(b), dim).tensor(&coh(re(-b), dim)).unwrap();
        let w = coh(re(-b), dim).tensor(&coh(re(b), dim)).unwrap();
        let ua = u.amplitudes();
        let wa = w.amplitudes();
        let dim2 = ua.len();
        let mut m = DMatrix::<Complex64>::zeros(dim2, dim2);
        for i in 0..dim2 {
            for j in 0..dim2 {
                m[(i, j)] = ua[i] * ua[j].conj()
                    + wa[i] * wa[j].conj()
                    + re(c) * (wa[i] * ua[j].conj() + ua[i] * wa[j].conj());
            }
        }
        let (rho, _) = DensityOperator::from_unnormalized(u.space().clone(), m).unwrap();
        rho
    }

    #[test]
    fn setting_rejects_bad_input() {
        assert!(matches!(
            HomodyneSetting::new(0.0, 1.2, -1.0, 1.0, 5),
            Err(MeasureError::BadEfficiency { .. })
        ));
        assert!(matches!(
            HomodyneSetting::new(f64::NAN, 1.0, -1.0, 1.0, 5),
            Err(MeasureError::BadAngle { .. })
        ));
        assert!(matches!(
            HomodyneSetting::new(0.0, 1.0, 1.0, -1.0, 5),
            Err(MeasureError::BadGrid { .. })
        ));
        assert!(matches!(
            HomodyneSetting::new(0.0, 1.0, -1.0, 1.0, 4),
            Err(MeasureError::BadGrid { .. })
        ));
        assert!(matches!(
            HomodyneSetting::new(0.0, 1.0, -1.0, 1.0, 1),
            Err(MeasureError::BadGrid { .. })
        ));
        let s = HomodyneSetting::covering(0.3, 0.9, 1.5).unwrap();
        let (lo, hi, n) = s.grid();
        assert_eq!(n, DEFAULT_GRID_POINTS);
        assert!((lo + (SQRT_2 * 1.5 + 6.0)).abs() < TAU);
        assert!((hi - (SQRT_2 * 1.5 + 6.0)).abs() < TAU);
        let xs = s.xs();
        assert_eq!(xs.len(), n);
        assert!((xs[0] - lo).abs() < TAU && (xs[n - 1] - hi).abs() < TAU);
    }

    #[test]
    fn quadrature_operator_matches_ladder_combinations() {
        let space = SpaceSpec::single(12).unwrap();
        let b = ladder(0, &space).unwrap();
        let x = quadrature_operator(0.0, 0, &space).unwrap();
        let want_x = b.adjoint().add(&b).unwrap().scaled(re(FRAC_1_SQRT_2));
        assert!((x.matrix() - want_x.matrix()).norm() < TAU);
        let p = quadrature_operator(PI / 2.0, 0, &space).unwrap();
        let want_p = b
            .adjoint()
            .scaled(Complex64::new(0.0, 1.0))
            .add(&b.scaled(Complex64::new(0.0, -1.0)))
            .unwrap()
            .scaled(re(FRAC_1_SQRT_2));
        assert!((p.matrix() - want_p.matrix()).norm() < TAU);
        let herm = quadrature_operator(0.73, 0, &space).unwrap();
        assert!((herm.matrix() - herm.adjoint().matrix()).norm() < 1e-12);
    }

    #[test]
    fn quadrature_commutator_holds_below_truncation_edge() {
        let space = SpaceSpec::single(14).unwrap();
        let x = quadrature_operator(0.0, 0, &space).unwrap();
        let p = quadrature_operator(PI / 2.0, 0, &space).unwrap();
        let comm = x.compose(&p).unwrap().matrix() - p.compose(&x).unwrap().matrix();
        for i in 0..12 {
            for j in 0..12 {
                let want = if i == j {
                    Complex64::new(0.0, 1.0)
                } else {
                    Complex64::default()
                };
                assert!((comm[(i, j)] - want).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn coherent_quadrature_mean_and_variance() {
        let alpha = Complex64::new(0.8, 0.3);
        let dim = truncation_dim(alpha.norm());
        let rho = coh(alpha, dim).to_density().unwrap();
        let setting = HomodyneSetting::covering(0.7, 1.0, 1.0).unwrap();
        let dist = quadrature_pdf(&rho, 0, &setting).unwrap();
        assert!((dist.mean() - 1.138638572590).abs() < 1e-9);
        let x = quadrature_operator(0.7, 0, rho.space()).unwrap();
        let op_mean = x.expectation_density(&rho).unwrap().re;
        assert!((dist.mean() - op_mean).abs() < 1e-9);
        let beta = Complex64::new(0.9, -0.4);
        let rho2 = coh(beta, truncation_dim(beta.norm())).to_density().unwrap();
        for theta in [0.0, PI / 2.0, 1.1] {
            let s = HomodyneSetting::covering(theta, 1.0, 1.0).unwrap();
            let d = quadrature_pdf(&rho2, 0, &s).unwrap();
            assert!((d.variance() - 0.5).abs() < 1e-9);
            assert!((d.mean() - SQRT_2 * (beta * Complex64::from_polar(1.0, -theta)).re).abs()
                < 1e-9);
        }
    }

    #[test]
    fn vacuum_pdf_is_the_unit_gaussian() {
        let rho = coh(Complex64::default(), 20).to_density().unwrap();
        let setting = HomodyneSetting::covering(0.3, 1.0, 0.0).unwrap();
        let dist = quadrature_pdf(&rho, 0, &setting).unwrap();
        let worst = dist
            .xs()
            .iter()
            .zip(dist.ps())
            .map(|(x, p)| (p - (-x * x).exp() / PI.sqrt()).abs())
            .fold(0.0, f64::max);
        assert!(worst < 1e-9);
    }

    #[test]
    fn lossy_pair_pdfs_match_closed_forms() {
        let gamma = 1.5;
        let dim = truncation_dim(gamma);
        let rho = even_pair(gamma, dim).to_density().unwrap();
        for eta in [0.4, 0.8, 1.0] {
            let s_in = HomodyneSetting::covering(0.0, eta, gamma).unwrap();
            let d_in = quadrature_pdf(&rho, 0, &s_in).unwrap();
            let worst_in = d_in
                .xs()
                .iter()
                .zip(d_in.ps())
                .map(|(x, p)| (p - analytic_pdf_in_phase(gamma, eta, *x).unwrap()).abs())
                .fold(0.0, f64::max);
            assert!(worst_in < 1e-7, "in-phase eta={eta}: {worst_in:.3e}");
            let s_out = HomodyneSetting::covering(PI / 2.0, eta, gamma).unwrap();
            let d_out = quadrature_pdf(&rho, 0, &s_out).unwrap();
            let worst_out = d_out
                .xs()
                .iter()
                .zip(d_out.ps())
                .map(|(x, p)| (p - analytic_pdf_out_phase(gamma, eta, *x).unwrap()).abs())
                .fold(0.0, f64::max);
            assert!(worst_out < 1e-7, "out-phase eta={eta}: {worst_out:.3e}");
            assert!((d_in.integral() - 1.0).abs() < PDF_NORMALIZATION_TOL);
            assert!((d_out.integral() - 1.0).abs() < PDF_NORMALIZATION_TOL);
        }
    }

    #[test]
    fn narrow_grid_is_rejected() {
        let gamma = 2.0;
        let rho = even_pair(gamma, truncation_dim(gamma)).to_density().unwrap();
        let setting = HomodyneSetting::new(0.0, 1.0, -2.0, 2.0, 401).unwrap();
        assert!(matches!(
            quadrature_pdf(&rho, 0, &setting),
            Err(MeasureError::GridCoverage { .. })
        ));
    }

    #[test]
    fn pdf_acts_on_the_chosen_mode_of_a_pair() {
        let dim = truncation_dim(1.0);
        let joint = coh(re(1.0), dim)
            .tensor(&coh(Complex64::new(0.0, -0.6), dim))
            .unwrap()
            .to_density()
            .unwrap();
        let setting = HomodyneSetting::covering(0.0, 1.0, 1.0).unwrap();
        let d0 = quadrature_pdf(&joint, 0, &setting).unwrap();
        assert!((d0.mean() - SQRT_2).abs() < 1e-9);
        let d1 = quadrature_pdf(&joint, 1, &setting).unwrap();
        assert!(d1.mean().abs() < 1e-9);
        let s_p = HomodyneSetting::covering(PI / 2.0, 1.0, 1.0).unwrap();
        let d1p = quadrature_pdf(&joint, 1, &s_p).unwrap();
        assert!((d1p.mean() + 0.6 * SQRT_2).abs() < 1e-9);
    }

    #[test]
    fn closed_form_pdf_spot_values() {
        assert!((analytic_pdf_in_phase(1.5, 0.8, 1.0).unwrap() - 1.270456628466e-1).abs() < 1e-12);
        assert!(
            (analytic_pdf_in_phase(2.0, 1.0, 2.0 * SQRT_2).unwrap() - 2.820002547185e-1).abs()
                < 1e-12
        );
        assert!((analytic_pdf_out_phase(2.0, 0.9, 0.5).unwrap() - 2.622467860169e-1).abs() < 1e-12);
        assert!((analytic_pdf_out_phase(1.0, 0.4, 0.0).unwrap() - 6.466109451304e-1).abs() < 1e-12);
        let g2: f64 = 4.0;
        let peak = analytic_pdf_out_phase(2.0, 0.9, 0.0).unwrap();
        let contrast = peak * PI.sqrt() * (1.0 + (-2.0 * g2).exp()) - 1.0;
        assert!((contrast - (-0.8f64).exp()).abs() < 1e-12);
    }

    #[test]
    fn duan_saturates_on_product_coherent_states() {
        let dim = 20;
        let pair = coh(Complex64::new(0.7, 0.3), dim)
            .tensor(&coh(Complex64::new(-0.2, 0.5), dim))
            .unwrap()
            .to_density()
            .unwrap();
        for q in [0.5, 1.0, 2.0] {
            let cfg = DuanConfig::new(q).unwrap();
            let score = duan_s(&pair, &cfg).unwrap();
            assert!((score.s - score.bound).abs() < 1e-8, "q={q}: {}", score.s);
            assert!(!score.below_bound());
        }
    }

    #[test]
    fn duan_matches_closed_form_on_entangled_pairs() {
        let cfg = DuanConfig::default();
        for gamma in [0.8, 1.5, 2.0, 2.5] {
            let dim = truncation_dim(gamma / SQRT_2);
            let rho = entangled_pair(gamma, dim).to_density().unwrap();
            let score = duan_s(&rho, &cfg).unwrap();
            let want = s_perfect_analytic(gamma);
            assert!(
                (score.s - want).abs() < 1e-6,
                "gamma={gamma}: {} vs {want}",
                score.s
            );
        }
        assert!((s_perfect_analytic(2.0) - 1.994634397913).abs() < 1e-9);
        assert!((s_perfect_analytic(0.8) - 1.443071427643).abs() < 1e-9);
        let dev = (2.0 - s_perfect_analytic(0.8)) / 2.0;
        assert!((dev - 0.27846429).abs() < 1e-6);
    }

    #[test]
    fn duan_on_mixtures_relaxes_toward_the_bound() {
        let cfg = DuanConfig::default();
        let dim = truncation_dim(0.8 / SQRT_2);
        let full = duan_s(&pair_mixture(0.8, 1.0, dim), &cfg).unwrap();
        assert!((full.s - s_perfect_analytic(0.8)).abs() < 1e-8);
        let half = duan_s(&pair_mixture(0.8, 0.5, dim), &cfg).unwrap();
        assert!((half.s - 1.687548799566).abs() < 1e-8);
        let none = duan_s(&pair_mixture(0.8, 0.0, dim), &cfg).unwrap();
        assert!((none.s - 2.0).abs() < 1e-9);
        let dim15 = truncation_dim(1.5 / SQRT_2);
        let half15 = duan_s(&pair_mixture(1.5, 0.5, dim15), &cfg).unwrap();
        assert!((half15.s - 1.950285653828).abs() < 1e-8);
        for q in [0.5, 1.0, 2.0] {
            let cfg_q = DuanConfig::new(q).unwrap();
            let score = duan_s(&pair_mixture(1.5, 0.0, dim15), &cfg_q).unwrap();
            assert!(score.s >= score.bound - 1e-8, "q={q}: {}", score.s);
        }
    }

    #[test]
    fn lossy_duan_follows_the_affine_law() {
        let gamma = 1.5;
        let dim = truncation_dim(gamma / SQRT_2);
        let rho = entangled_pair(gamma, dim).to_density().unwrap();
        let cfg = DuanConfig::default();
        let s0 = duan_s(&rho, &cfg).unwrap().s;
        for eta in [0.3, 0.8] {
            let s = duan_s_with_loss(&rho, &cfg, eta).unwrap().s;
            assert!(
                (s - (eta * s0 + 2.0 * (1.0 - eta))).abs() < 1e-6,
                "eta={eta}: {s}"
            );
        }
        let s_full = duan_s_with_loss(&rho, &cfg, 1.0).unwrap().s;
        assert!((s_full - s0).abs() < 1e-12);
        let s_none = duan_s_with_loss(&rho, &cfg, 0.0).unwrap().s;
        assert!((s_none - 2.0).abs() < 1e-9);
    }

    #[test]
    fn onoff_povm_structure() {
        let space = SpaceSpec::new(vec![6, 5]).unwrap();
        let (nc, click) = onoff_povm(0.3, 1, &space).unwrap();
        let total = nc.add(&click).unwrap();
        let id = ModeOperator::identity(space.clone());
        assert!((total.matrix() - id.matrix()).norm() == 0.0);
        let occ3 = space.flat_index(&[0, 3]).unwrap();
        assert!((nc.matrix()[(occ3, occ3)].re - 0.7f64.powi(6)).abs() < TAU);
        let occ_other = space.flat_index(&[4, 3]).unwrap();
        assert!((nc.matrix()[(occ_other, occ_other)].re - 0.7f64.powi(6)).abs() < TAU);
        let (dark, _) = onoff_povm(1.0, 0, &space).unwrap();
        for flat in 0..space.total_dim() {
            let n = space.occupations(flat)[0];
            let want = if n == 0 { 1.0 } else { 0.0 };
            assert!((dark.matrix()[(flat, flat)].re - want).abs() < TAU);
        }
        let (blind, no_click_all) = onoff_povm(0.0, 0, &space).unwrap();
        assert!((blind.matrix() - id.matrix()).norm() == 0.0);
        assert!(no_click_all.matrix().norm() == 0.0);
    }

    #[test]
    fn povm_coherent_no_click_expectation() {
        let beta = 1.2;
        let dim = truncation_dim(beta);
        let space = SpaceSpec::single(dim).unwrap();
        let (nc, _) = onoff_povm(0.3, 0, &space).unwrap();
        let psi = coh(re(beta), dim);
        let got = nc.expectation_pure(&psi).unwrap().re;
        assert!((got - 4.797932485785e-1).abs() < 1e-9);
    }

    #[test]
    fn two_clicks_matches_closed_form() {
        let gamma = 1.0;
        let dim = truncation_dim(gamma / SQRT_2);
        for (alpha, want) in [
            (0.0, 1.245670184778e-1),
            (PI / 2.0, 9.573284090678e-2),
            (PI, 6.689866333575e-2),
        ] {
            let phi = rotated_pair(gamma, alpha, dim);
            let got = p_two_clicks(&phi, 0.8).unwrap();
            assert!((got - want).abs() < 1e-8, "alpha={alpha}: {got}");
            let analytic = p_two_clicks_analytic(gamma, 0.8, alpha).unwrap();
            assert!((got - analytic).abs() < 1e-8);
        }
        let big = rotated_pair(2.5, PI / 2.0, truncation_dim(2.5 / SQRT_2));
        let got = p_two_clicks(&big, 0.6).unwrap();
        let analytic = p_two_clicks_analytic(2.5, 0.6, PI / 2.0).unwrap();
        assert!((got - analytic).abs() < 1e-8);
    }

    #[test]
    fn two_clicks_limits() {
        let dim = truncation_dim(1.0 / SQRT_2);
        let phi = rotated_pair(1.0, 0.7, dim);
        assert_eq!(p_two_clicks(&phi, 0.0).unwrap(), 0.0);
        let got = p_two_clicks(&phi, 1.0).unwrap();
        let analytic = p_two_clicks_analytic(1.0, 1.0, 0.7).unwrap();
        assert!((got - analytic).abs() < 1e-8);
    }

    #[test]
    fn visibility_is_the_fringe_coefficient_ratio() {
        let vis = two_clicks_visibility(2.0, 0.75).unwrap();
        assert!((vis - 6.737946999085e-3).abs() < 1e-9);
        let p0 = p_two_clicks_analytic(2.0, 0.75, 0.0).unwrap();
        let ppi = p_two_clicks_analytic(2.0, 0.75, PI).unwrap();
        assert!(((p0 - ppi) / (p0 + ppi) - vis).abs() < 1e-12);
        let g2: f64 = 4.0;
        let n_sq = 1.0 / (2.0 * (1.0 + (-2.0 * g2).exp()));
        let c = 2.0 * (-g2).exp() * n_sq;
        let dark = (-g2 / 2.0).exp() - (-(0.25 * g2) / 2.0).exp();
        assert!((p0 - ppi - 2.0 * c * dark * dark).abs() < 1e-12);
    }

    #[test]
    fn measurement_surfaces_reject_bad_input() {
        let single = coh(re(0.5), 20).to_density().unwrap();
        let cfg = DuanConfig::default();
        assert!(matches!(
            duan_s(&single, &cfg),
            Err(MeasureError::NotTwoMode { .. })
        ));
        assert!(matches!(DuanConfig::new(0.0), Err(MeasureError::BadWeight { .. })));
        assert!(matches!(
            DuanConfig::new(f64::INFINITY),
            Err(MeasureError::BadWeight { .. })
        ));
        let pair = coh(re(0.5), 8).tensor(&coh(re(0.0), 8)).unwrap();
        assert!(matches!(
            p_two_clicks(&pair, 1.5),
            Err(MeasureError::BadEfficiency { .. })
        ));
        let triple = pair.tensor(&coh(re(0.0), 4)).unwrap();
        assert!(matches!(
            p_two_clicks(&triple, 0.5),
            Err(MeasureError::NotTwoMode { .. })
        ));
        assert!(matches!(
            analytic_pdf_in_phase(f64::NAN, 0.5, 0.0),
            Err(MeasureError::NonFiniteAmplitude { .. })
        ));
        assert!(matches!(
            duan_s_with_loss(&single, &cfg, 0.5),
            Err(MeasureError::NotTwoMode { .. })
        ));
    }

    #[test]
    fn duan_bound_tracks_q() {
        for q in [0.5, 1.0, 2.0, -1.5] {
            let cfg = DuanConfig::new(q).unwrap();
            assert!((cfg.bound() - (q * q + 1.0 / (q * q))).abs() < TAU);
        }
        assert!((DuanConfig::default().q() - 1.0).abs() < TAU);
    }
}
