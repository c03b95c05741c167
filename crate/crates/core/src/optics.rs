//! Optical transformations on truncated Fock spaces: ladder and number
//! operators, displacement, beam splitters, the cross-Kerr unitary, photon
//! loss, and the beam-splitter rotation device.
//!
//! Beam splitters are assembled sector by sector: the generator theta(a'c -
//! ac') conserves total photon number, so its exponential is block-diagonal
//! over sectors of fixed n+m. Restricting each antisymmetric block to the
//! truncation keeps the whole operator exactly unitary, and lets the unitary
//! act on large joint states without ever being materialized.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use thiserror::Error;

use crate::fock::{
    self, coherent_state, coherent_state_lossy, partial_trace, reduced_density, truncation_dim,
    DensityOperator, FockError, ModeOperator, PureState, SpaceSpec, COHERENT_LEAKAGE_MAX,
    DENSE_DIM_CAP,
};
use crate::linalg::expm;

/// Smallest transmittivity the rotation device accepts.
pub const ROTATION_MIN_T: f64 = 0.9;
/// Validity cut for the rotation device: theta over the mode's coherent
/// amplitude estimate must stay below this for the displaced-state picture.
pub const ROTATION_VALIDITY_RATIO: f64 = 0.2;

#[derive(Debug, Error)]
pub enum OpticsError {
    #[error(transparent)]
    Fock(#[from] FockError),
    #[error("transmittivity {t} outside [0, 1]")]
    BadTransmittivity { t: f64 },
    #[error("beam splitter modes must differ")]
    IdenticalModes,
    #[error("Kerr phase must be finite, got {phi}")]
    NonFinitePhase { phi: f64 },
    #[error("efficiency {eta} outside [0, 1]")]
    BadEfficiency { eta: f64 },
    #[error("rotation transmittivity {t} below {min}")]
    LowTransmittivity { t: f64, min: f64 },
    #[error("nonzero rotation angle needs transmittivity below 1")]
    RotationNeedsReflectivity,
    #[error("mode index {mode} out of range for {n_modes} modes")]
    InvalidMode { mode: usize, n_modes: usize },
}

/// Cross-Kerr phase phi accumulated over the interaction time.
///
/// Kept as given, never reduced modulo 2 pi: the truncated evolution operator
/// depends on the raw value through every n*m product.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KerrPhase {
    phi: f64,
}

impl KerrPhase {
    pub fn new(phi: f64) -> Result<Self, OpticsError> {
        if !phi.is_finite() {
            return Err(OpticsError::NonFinitePhase { phi });
        }
        Ok(Self { phi })
    }

    pub fn radians(&self) -> f64 {
        self.phi
    }
}

/// Beam splitter acting on an ordered pair of modes.
///
/// The pair order fixes the sign convention: |alpha, beta> maps to
/// |sqrt(T) alpha + sqrt(1-T) beta, sqrt(T) beta - sqrt(1-T) alpha>.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BeamSplitterSpec {
    transmittivity: f64,
    mode_pair: (usize, usize),
}

impl BeamSplitterSpec {
    pub fn new(transmittivity: f64, mode_pair: (usize, usize)) -> Result<Self, OpticsError> {
        if !(0.0..=1.0).contains(&transmittivity) || !transmittivity.is_finite() {
            return Err(OpticsError::BadTransmittivity { t: transmittivity });
        }
        if mode_pair.0 == mode_pair.1 {
            return Err(OpticsError::IdenticalModes);
        }
        Ok(Self {
            transmittivity,
            mode_pair,
        })
    }

    pub fn transmittivity(&self) -> f64 {
        self.transmittivity
    }

    pub fn mode_pair(&self) -> (usize, usize) {
        self.mode_pair
    }

    /// Mixing angle arccos(sqrt(T)) of the generator.
    pub fn mixing_angle(&self) -> f64 {
        self.transmittivity.sqrt().acos()
    }
}

fn check_mode(space: &SpaceSpec, mode: usize) -> Result<(), OpticsError> {
    if mode >= space.n_modes() {
        return Err(OpticsError::InvalidMode {
            mode,
            n_modes: space.n_modes(),
        });
    }
    Ok(())
}

fn check_dense_cap(space: &SpaceSpec) -> Result<(), OpticsError> {
    let dim = space.total_dim();
    if dim > DENSE_DIM_CAP {
        return Err(FockError::DimensionCap {
            dim,
            cap: DENSE_DIM_CAP,
        }
        .into());
    }
    Ok(())
}

/// Annihilation operator on one mode of the space.
pub fn ladder(mode: usize, space: &SpaceSpec) -> Result<ModeOperator, OpticsError> {
    check_mode(space, mode)?;
    check_dense_cap(space)?;
    let d = space.mode_dim(mode);
    let mut local = DMatrix::zeros(d, d);
    for n in 1..d {
        local[(n - 1, n)] = Complex64::new((n as f64).sqrt(), 0.0);
    }
    Ok(ModeOperator::new(
        space.clone(),
        embed_single(space, mode, &local),
    )?)
}

/// Photon-number operator a'a on one mode of the space.
pub fn number(mode: usize, space: &SpaceSpec) -> Result<ModeOperator, OpticsError> {
    check_mode(space, mode)?;
    check_dense_cap(space)?;
    let dim = space.total_dim();
    let stride = space.strides()[mode];
    let d = space.mode_dim(mode);
    let mut m = DMatrix::zeros(dim, dim);
    for flat in 0..dim {
        let n = (flat / stride) % d;
        m[(flat, flat)] = Complex64::new(n as f64, 0.0);
    }
    Ok(ModeOperator::new(space.clone(), m)?)
}

/// Unitary displacement exp(alpha a' - conj(alpha) a) on one mode.
///
/// Rejects amplitudes whose coherent image would leak more than the strict
/// truncation budget at this mode's dimension.
pub fn displacement(
    alpha: Complex64,
    mode: usize,
    space: &SpaceSpec,
) -> Result<ModeOperator, OpticsError> {
    check_mode(space, mode)?;
    check_dense_cap(space)?;
    let d = space.mode_dim(mode);
    let (_, leakage) = coherent_state_lossy(Complex64::new(alpha.norm(), 0.0), d)?;
    if leakage > COHERENT_LEAKAGE_MAX {
        return Err(FockError::TruncationLeakage {
            leakage,
            dim: d,
            max: COHERENT_LEAKAGE_MAX,
        }
        .into());
    }
    let mut g = DMatrix::zeros(d, d);
    for n in 0..d - 1 {
        let root = Complex64::new(((n + 1) as f64).sqrt(), 0.0);
        g[(n + 1, n)] = alpha * root;
        g[(n, n + 1)] = -alpha.conj() * root;
    }
    let local = expm(&g);
    Ok(ModeOperator::new(
        space.clone(),
        embed_single(space, mode, &local),
    )?)
}

/// Materialized beam-splitter unitary. For large joint spaces use
/// [`apply_beam_splitter`], which never builds the full matrix.
pub fn beam_splitter(
    spec: &BeamSplitterSpec,
    space: &SpaceSpec,
) -> Result<ModeOperator, OpticsError> {
    let (p, q) = spec.mode_pair();
    check_mode(space, p)?;
    check_mode(space, q)?;
    check_dense_cap(space)?;
    let (dp, dq) = (space.mode_dim(p), space.mode_dim(q));
    let pair = bs_pair_matrix(dp, dq, spec.mixing_angle());
    Ok(ModeOperator::new(
        space.clone(),
        embed_pair(space, (p, q), &pair),
    )?)
}

/// Applies a beam splitter to a pure state through its photon-number-sector
/// blocks. Cost scales with the state dimension, not its square.
pub fn apply_beam_splitter(
    spec: &BeamSplitterSpec,
    psi: &PureState,
) -> Result<PureState, OpticsError> {
    let space = psi.space();
    let (p, q) = spec.mode_pair();
    check_mode(space, p)?;
    check_mode(space, q)?;
    let (dp, dq) = (space.mode_dim(p), space.mode_dim(q));
    let strides = space.strides();
    let (sp, sq) = (strides[p], strides[q]);
    let blocks = bs_sector_blocks(dp, dq, spec.mixing_angle());
    let others: Vec<usize> = (0..space.n_modes()).filter(|&m| m != p && m != q).collect();
    let offs = fock::subspace_offsets(space, &others);
    let amps = psi.amplitudes();
    let mut out = amps.clone();
    for &o in &offs {
        for (total, block) in blocks.iter().enumerate() {
            let n_min = total.saturating_sub(dq - 1);
            let sz = block.nrows();
            if sz == 0 {
                continue;
            }
            let mut v = DVector::<Complex64>::zeros(sz);
            for i in 0..sz {
                let n = n_min + i;
                v[i] = amps[o + n * sp + (total - n) * sq];
            }
            let w = block * v;
            for i in 0..sz {
                let n = n_min + i;
                out[o + n * sp + (total - n) * sq] = w[i];
            }
        }
    }
    Ok(PureState::new(space.clone(), out)?)
}

/// Diagonal cross-Kerr unitary exp(-i phi n_p n_q).
pub fn cross_kerr(
    phi: KerrPhase,
    mode_pair: (usize, usize),
    space: &SpaceSpec,
) -> Result<ModeOperator, OpticsError> {
    let (p, q) = mode_pair;
    if p == q {
        return Err(OpticsError::IdenticalModes);
    }
    check_mode(space, p)?;
    check_mode(space, q)?;
    check_dense_cap(space)?;
    let dim = space.total_dim();
    let strides = space.strides();
    let mut m = DMatrix::zeros(dim, dim);
    for flat in 0..dim {
        let np = (flat / strides[p]) % space.mode_dim(p);
        let nq = (flat / strides[q]) % space.mode_dim(q);
        let phase = -phi.radians() * (np as f64) * (nq as f64);
        m[(flat, flat)] = Complex64::new(0.0, phase).exp();
    }
    Ok(ModeOperator::new(space.clone(), m)?)
}

/// Photon loss on one mode: mixes the mode with a vacuum ancilla on a
/// transmittivity-eta beam splitter and traces the ancilla out.
pub fn loss_channel(
    eta: f64,
    mode: usize,
    rho: &DensityOperator,
) -> Result<DensityOperator, OpticsError> {
    check_loss_args(eta, mode, rho.space())?;
    if eta >= 1.0 {
        return Ok(rho.clone());
    }
    let n = rho.space().n_modes();
    let d_anc = rho.space().mode_dim(mode);
    let joint_dim = rho.space().total_dim() * d_anc;
    let keep: Vec<usize> = (0..n).collect();
    if joint_dim <= DENSE_DIM_CAP {
        let vac = vacuum_state(d_anc)?.to_density()?;
        let joint = rho.tensor(&vac)?;
        let spec = BeamSplitterSpec::new(eta, (mode, n))?;
        let u = beam_splitter(&spec, joint.space())?;
        let mixed = u.conjugate_density(&joint)?;
        Ok(partial_trace(&mixed, &keep)?)
    } else {
        // dilation applied branch by branch through the spectral decomposition
        let (vals, vecs) = crate::fock::hermitian_eigen(rho.matrix())?;
        let dim = rho.space().total_dim();
        let mut acc = DMatrix::<Complex64>::zeros(dim, dim);
        for (k, &lambda) in vals.iter().enumerate() {
            if lambda <= 1e-14 {
                continue;
            }
            let branch = PureState::new(rho.space().clone(), vecs.column(k).into())?;
            let lost = loss_channels_pure(&[(mode, eta)], &branch)?;
            acc += lost.matrix().map(|x| Complex64::new(lambda, 0.0) * x);
        }
        let (out, _) = DensityOperator::from_unnormalized(rho.space().clone(), acc)?;
        Ok(out)
    }
}

/// Loss on several modes of a pure state: one vacuum ancilla and one beam
/// splitter per listed mode, then a single trace over all ancillas.
pub fn loss_channels_pure(
    losses: &[(usize, f64)],
    psi: &PureState,
) -> Result<DensityOperator, OpticsError> {
    let n = psi.space().n_modes();
    for &(mode, eta) in losses {
        check_loss_args(eta, mode, psi.space())?;
    }
    let active: Vec<(usize, f64)> = losses
        .iter()
        .copied()
        .filter(|&(_, eta)| eta < 1.0)
        .collect();
    if active.is_empty() {
        return Ok(psi.to_density()?);
    }
    let mut state = psi.clone();
    for &(mode, _) in &active {
        let vac = vacuum_state(psi.space().mode_dim(mode))?;
        state = state.tensor(&vac)?;
    }
    for (k, &(mode, eta)) in active.iter().enumerate() {
        let spec = BeamSplitterSpec::new(eta, (mode, n + k))?;
        state = apply_beam_splitter(&spec, &state)?;
    }
    let keep: Vec<usize> = (0..n).collect();
    Ok(reduced_density(&state, &keep)?)
}

/// Single-mode pure-state loss; see [`loss_channels_pure`].
pub fn loss_channel_pure(
    eta: f64,
    mode: usize,
    psi: &PureState,
) -> Result<DensityOperator, OpticsError> {
    loss_channels_pure(&[(mode, eta)], psi)
}

fn check_loss_args(eta: f64, mode: usize, space: &SpaceSpec) -> Result<(), OpticsError> {
    if !(0.0..=1.0).contains(&eta) || !eta.is_finite() {
        return Err(OpticsError::BadEfficiency { eta });
    }
    check_mode(space, mode)
}

fn vacuum_state(dim: usize) -> Result<PureState, OpticsError> {
    Ok(coherent_state(Complex64::new(0.0, 0.0), dim)?)
}

/// Diagnostics of one rotation-device application.
#[derive(Debug, Clone, Copy)]
pub struct RotationReport {
    pub theta: f64,
    pub transmittivity: f64,
    /// Amplitude E of the ancillary coherent state, theta / sqrt(1-T).
    pub ancilla_amplitude: f64,
    /// theta over the mode's estimated coherent amplitude sqrt(<n>).
    pub validity_ratio: f64,
    /// validity_ratio below [`ROTATION_VALIDITY_RATIO`].
    pub within_validity: bool,
}

/// Rotation device: mixes one mode with an ancillary coherent state i*E on a
/// high-transmittivity beam splitter and traces the ancilla. Converges to the
/// displacement by i*theta as T tends to 1 at fixed theta = E sqrt(1-T).
pub fn rotate_cat(
    theta: f64,
    t: f64,
    mode: usize,
    psi: &PureState,
) -> Result<(DensityOperator, RotationReport), OpticsError> {
    if !(ROTATION_MIN_T..=1.0).contains(&t) {
        return Err(OpticsError::LowTransmittivity {
            t,
            min: ROTATION_MIN_T,
        });
    }
    check_mode(psi.space(), mode)?;
    let n = psi.space().n_modes();
    let refl = 1.0 - t;
    let exact_limit = refl < 1e-12;
    if exact_limit && theta != 0.0 {
        return Err(OpticsError::RotationNeedsReflectivity);
    }
    let e_amp = if exact_limit { 0.0 } else { theta / refl.sqrt() };
    let u_est = mode_mean_photon(psi, mode)?.max(0.0).sqrt();
    let validity_ratio = if theta == 0.0 {
        0.0
    } else if u_est > 0.0 {
        theta.abs() / u_est
    } else {
        f64::INFINITY
    };
    let report = RotationReport {
        theta,
        transmittivity: t,
        ancilla_amplitude: e_amp,
        validity_ratio,
        within_validity: validity_ratio < ROTATION_VALIDITY_RATIO,
    };
    if exact_limit {
        return Ok((psi.to_density()?, report));
    }
    let d_anc = truncation_dim(e_amp.abs() + refl.sqrt() * u_est);
    let anc = coherent_state(Complex64::new(0.0, e_amp), d_anc)?;
    let joint = psi.tensor(&anc)?;
    let spec = BeamSplitterSpec::new(t, (mode, n))?;
    let mixed = apply_beam_splitter(&spec, &joint)?;
    let keep: Vec<usize> = (0..n).collect();
    let rho = reduced_density(&mixed, &keep)?;
    Ok((rho, report))
}

/// Mean photon number of one mode of a pure state.
pub fn mode_mean_photon(psi: &PureState, mode: usize) -> Result<f64, OpticsError> {
    check_mode(psi.space(), mode)?;
    let stride = psi.space().strides()[mode];
    let d = psi.space().mode_dim(mode);
    let mut mean = 0.0;
    for (flat, a) in psi.amplitudes().iter().enumerate() {
        let occ = (flat / stride) % d;
        mean += occ as f64 * a.norm_sqr();
    }
    Ok(mean)
}

/// Unitary sector blocks of exp(theta (a'c - ac')) over total photon number.
fn bs_sector_blocks(dp: usize, dq: usize, theta: f64) -> Vec<DMatrix<Complex64>> {
    let mut blocks = Vec::with_capacity(dp + dq - 1);
    for total in 0..=(dp + dq - 2) {
        let n_min = total.saturating_sub(dq - 1);
        let n_max = total.min(dp - 1);
        let sz = n_max + 1 - n_min;
        let mut g = DMatrix::<Complex64>::zeros(sz, sz);
        for i in 0..sz.saturating_sub(1) {
            let n = n_min + i;
            let m = total - n;
            let w = theta * (((n + 1) * m) as f64).sqrt();
            g[(i + 1, i)] = Complex64::new(w, 0.0);
            g[(i, i + 1)] = Complex64::new(-w, 0.0);
        }
        blocks.push(expm(&g));
    }
    blocks
}

fn bs_pair_matrix(dp: usize, dq: usize, theta: f64) -> DMatrix<Complex64> {
    let blocks = bs_sector_blocks(dp, dq, theta);
    let mut m = DMatrix::zeros(dp * dq, dp * dq);
    for (total, block) in blocks.iter().enumerate() {
        let n_min = total.saturating_sub(dq - 1);
        for i in 0..block.nrows() {
            let nr = n_min + i;
            for j in 0..block.ncols() {
                let nc = n_min + j;
                m[(nr * dq + (total - nr), nc * dq + (total - nc))] = block[(i, j)];
            }
        }
    }
    m
}

fn embed_single(space: &SpaceSpec, mode: usize, local: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    let d = space.mode_dim(mode);
    let stride = space.strides()[mode];
    let others: Vec<usize> = (0..space.n_modes()).filter(|&m| m != mode).collect();
    let offs = fock::subspace_offsets(space, &others);
    let dim = space.total_dim();
    let mut out = DMatrix::zeros(dim, dim);
    for &o in &offs {
        for r in 0..d {
            for c in 0..d {
                let v = local[(r, c)];
                if v != Complex64::new(0.0, 0.0) {
                    out[(o + r * stride, o + c * stride)] = v;
                }
            }
        }
    }
    out
}

fn embed_pair(
    space: &SpaceSpec,
    (p, q): (usize, usize),
    pair: &DMatrix<Complex64>,
) -> DMatrix<Complex64> {
    let (dp, dq) = (space.mode_dim(p), space.mode_dim(q));
    let strides = space.strides();
    let pair_offs: Vec<usize> = (0..dp * dq)
        .map(|k| (k / dq) * strides[p] + (k % dq) * strides[q])
        .collect();
    let others: Vec<usize> = (0..space.n_modes()).filter(|&m| m != p && m != q).collect();
    let offs = fock::subspace_offsets(space, &others);
    let dim = space.total_dim();
    let mut out = DMatrix::zeros(dim, dim);
    for &o in &offs {
        for (r, &pr) in pair_offs.iter().enumerate() {
            for (c, &pc) in pair_offs.iter().enumerate() {
                let v = pair[(r, c)];
                if v != Complex64::new(0.0, 0.0) {
                    out[(o + pr, o + pc)] = v;
                }
            }
        }
    }
    out
}
