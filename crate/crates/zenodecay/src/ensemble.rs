//! Stochastic sequences of undecayed subspaces: Haar and drifting projector
//! ensembles, Monte Carlo trajectories, ensemble survival curves, and the
//! exponential fit.
//!
//! Trajectory seeds are split from the ensemble seed by a counter-based
//! SplitMix64 avalanche, so any trajectory is reproducible in isolation and
//! the aggregate is bitwise independent of worker scheduling.

use crate::curve::{CurvePoint, SurvivalCurve};
use crate::error::{Error, Result};
use crate::measurement::SequencePlan;
use crate::operator::{
    commutator, orthonormalize, spectral_decompose, trace_prob, CMat, CVec, DensityOperator,
    Operator, Projector,
};
use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

/// SplitMix64-style avalanche of (seed, counter): the per-trajectory seed.
pub fn split_seed(seed: u64, index: u64) -> u64 {
    let mut z = seed.wrapping_add(index.wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// How the undecayed subspace moves between interactions.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EnsembleMode {
    /// A fresh Haar-random subspace at every step. Constant per-step loss:
    /// kept as the documented counterexample with no continuous limit.
    Iid,
    /// The subspace diffuses: rotation by exp(−iθG) with θ = sqrt(γδ),
    /// which leaves a finite limiting rate as δ → 0.
    Drift,
}

/// How the state is updated after a surviving interaction.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UpdatePolicy {
    /// ρ → ΛρΛ / Tr(Λρ).
    Luders,
    /// A fresh random pure state inside the new undecayed subspace.
    Resample,
}

/// Full description of a stochastic interior ensemble.
#[derive(Debug, Clone)]
pub struct InteriorEnsembleConfig {
    pub dim: usize,
    pub undecayed_rank: usize,
    pub mode: EnsembleMode,
    /// Subspace diffusion rate γ ≥ 0 (drift mode only).
    pub drift_strength: f64,
    pub update_policy: UpdatePolicy,
    pub hamiltonian: Operator,
    pub seed: u64,
}

impl InteriorEnsembleConfig {
    pub fn new(
        dim: usize,
        undecayed_rank: usize,
        mode: EnsembleMode,
        drift_strength: f64,
        update_policy: UpdatePolicy,
        hamiltonian: Operator,
        seed: u64,
    ) -> Result<Self> {
        if undecayed_rank == 0 || undecayed_rank >= dim {
            return Err(Error::InvalidInput(format!(
                "undecayed_rank must satisfy 0 < rank < dim, got rank {undecayed_rank} at dim {dim}"
            )));
        }
        if !(drift_strength >= 0.0) || !drift_strength.is_finite() {
            return Err(Error::InvalidInput(format!(
                "drift_strength must be finite and >= 0, got {drift_strength}"
            )));
        }
        if mode == EnsembleMode::Iid && drift_strength != 0.0 {
            return Err(Error::InvalidInput(
                "drift_strength only applies to drift mode".into(),
            ));
        }
        if hamiltonian.dim() != dim {
            return Err(Error::DimensionMismatch {
                left: dim,
                right: hamiltonian.dim(),
            });
        }
        let dev = hamiltonian.hermitian_deviation();
        if dev > crate::tol::TOL_HERMITIAN {
            return Err(Error::NotHermitian { deviation: dev });
        }
        Ok(Self {
            dim,
            undecayed_rank,
            mode,
            drift_strength,
            update_policy,
            hamiltonian,
            seed,
        })
    }
}

/// Haar-distributed unitary: a matrix of standard complex Gaussians is
/// orthonormalized column by column; the implicit triangular factor has a
/// real positive diagonal, which is exactly the phase convention that makes
/// the result Haar.
pub fn sample_random_unitary<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Operator {
    let cols = sample_haar_frame(dim, dim, rng);
    let mut mat = CMat::zeros(dim, dim);
    for (j, c) in cols.iter().enumerate() {
        mat.set_column(j, c);
    }
    Operator::new(mat).expect("orthonormalized Gaussians are finite")
}

/// First `rank` columns of a Haar unitary: an orthonormal frame whose span
/// is a Haar-random rank-`rank` subspace.
fn sample_haar_frame<R: Rng + ?Sized>(dim: usize, rank: usize, rng: &mut R) -> Vec<CVec> {
    let vectors: Vec<CVec> = (0..rank).map(|_| sample_gaussian_ket(dim, rng)).collect();
    orthonormalize(&vectors).expect("Gaussian vectors are independent almost surely")
}

fn sample_gaussian_ket<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> CVec {
    CVec::from_fn(dim, |_, _| {
        C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
    })
}

/// Standard Gaussian-ensemble Hermitian matrix: E[G_ab G_cd] = δ_ad δ_bc.
pub fn gaussian_hermitian<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Operator {
    let mut mat = CMat::zeros(dim, dim);
    let s = 1.0 / 2f64.sqrt();
    for i in 0..dim {
        mat[(i, i)] = C64::new(rng.sample(StandardNormal), 0.0);
        for j in (i + 1)..dim {
            let re: f64 = rng.sample::<f64, _>(StandardNormal) * s;
            let im: f64 = rng.sample::<f64, _>(StandardNormal) * s;
            mat[(i, j)] = C64::new(re, im);
            mat[(j, i)] = C64::new(re, -im);
        }
    }
    Operator::new(mat).expect("Gaussian entries are finite")
}

/// Drift generator: Gaussian-ensemble Hermitian rescaled by 1/sqrt(dim−1),
/// so the ensemble-averaged state variance ⟨u|G²|u⟩ − ⟨u|G|u⟩² equals 1 for
/// every unit vector u. With that normalization the per-step survival loss
/// is θ²·Var = γδ on average, making γ the limiting rate at H = 0.
fn drift_generator<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Operator {
    debug_assert!(dim >= 2);
    let g = gaussian_hermitian(dim, rng);
    let scale = 1.0 / ((dim - 1) as f64).sqrt();
    let mat = g.into_matrix() * C64::new(scale, 0.0);
    Operator::new(mat).expect("scaled Gaussian entries are finite")
}

/// The walking state of one trajectory: the current density operator, the
/// current undecayed projector, and an orthonormal frame spanning its range.
#[derive(Debug, Clone)]
pub struct StepState {
    rho: DensityOperator,
    lam: Projector,
    frame: CMat,
}

impl StepState {
    /// Preparation: the undecayed subspace is spanned by the first `rank`
    /// basis vectors and the component sits in the first of them.
    pub fn initial(config: &InteriorEnsembleConfig) -> Self {
        let dim = config.dim;
        let rank = config.undecayed_rank;
        let frame = CMat::identity(dim, rank);
        let lam = projector_from_frame(&frame);
        let ket = CVec::from_fn(dim, |i, _| {
            if i == 0 {
                C64::new(1.0, 0.0)
            } else {
                C64::new(0.0, 0.0)
            }
        });
        let rho = DensityOperator::from_ket(&ket).expect("basis ket is nonzero");
        Self { rho, lam, frame }
    }

    pub fn rho(&self) -> &DensityOperator {
        &self.rho
    }

    pub fn lam(&self) -> &Projector {
        &self.lam
    }
}

fn projector_from_frame(frame: &CMat) -> Projector {
    let mat = frame * frame.adjoint();
    Projector::from_valid_parts(mat, frame.ncols())
}

/// Everything produced by one interaction of the sequence.
#[derive(Debug, Clone)]
pub struct StepOutcome {
    /// Post-interaction state; `None` when the trajectory terminated.
    pub next: Option<StepState>,
    /// Tr(Λⁿ⁺¹ ρⁿ) for the evolved ρⁿ.
    pub survival: f64,
    /// Frobenius norm ‖[ρⁿ, Λⁿ⁺¹]‖ of the pre-update noncommutativity.
    pub commutator_norm: f64,
}

/// Advance one interaction: evolve, draw the next undecayed subspace,
/// measure, update.
///
/// Under the Lüders policy a vanishing survival terminates the trajectory
/// (the component has decayed with certainty); this is a signal, not an
/// error.
pub fn sample_step<R: Rng + ?Sized>(
    config: &InteriorEnsembleConfig,
    previous: &StepState,
    delta: f64,
    rng: &mut R,
) -> Result<StepOutcome> {
    if delta < 0.0 {
        return Err(Error::NonPositiveDelta(delta));
    }
    let evolved = evolve_cached(&config.hamiltonian, &previous.rho, delta)?;
    let frame_next = draw_frame(config, &previous.frame, delta, rng)?;
    finish_step(config, &evolved, frame_next, rng)
}

/// Next undecayed subspace: a fresh Haar frame in iid mode, a diffusive
/// rotation of the previous frame in drift mode.
fn draw_frame<R: Rng + ?Sized>(
    config: &InteriorEnsembleConfig,
    previous_frame: &CMat,
    delta: f64,
    rng: &mut R,
) -> Result<CMat> {
    match config.mode {
        EnsembleMode::Iid => {
            let cols = sample_haar_frame(config.dim, config.undecayed_rank, rng);
            let mut f = CMat::zeros(config.dim, config.undecayed_rank);
            for (j, c) in cols.iter().enumerate() {
                f.set_column(j, c);
            }
            Ok(f)
        }
        EnsembleMode::Drift => rotate_frame(previous_frame, config.drift_strength, delta, rng),
    }
}

fn finish_step<R: Rng + ?Sized>(
    config: &InteriorEnsembleConfig,
    evolved: &DensityOperator,
    frame_next: CMat,
    rng: &mut R,
) -> Result<StepOutcome> {
    let lam_next = projector_from_frame(&frame_next);
    let survival = trace_prob(&lam_next, evolved)?;
    let comm = commutator(evolved.op(), lam_next.op())?;
    let commutator_norm = comm.frobenius_norm();

    let rho_next = match config.update_policy {
        UpdatePolicy::Luders => {
            if survival == 0.0 {
                return Ok(StepOutcome {
                    next: None,
                    survival,
                    commutator_norm,
                });
            }
            // ρ' = B (B†ρB) B† / Tr(Λρ), positive with unit trace by construction.
            let compressed = frame_next.adjoint() * evolved.matrix() * &frame_next;
            let mat = &frame_next * compressed * frame_next.adjoint() / C64::new(survival, 0.0);
            DensityOperator::from_valid_parts(mat)
        }
        UpdatePolicy::Resample => {
            let coeff = sample_gaussian_ket(config.undecayed_rank, rng);
            let norm = coeff.norm();
            let ket = &frame_next * (coeff / C64::new(norm, 0.0));
            DensityOperator::from_ket(&ket)?
        }
    };
    Ok(StepOutcome {
        next: Some(StepState {
            rho: rho_next,
            lam: lam_next,
            frame: frame_next,
        }),
        survival,
        commutator_norm,
    })
}

fn rotate_frame<R: Rng + ?Sized>(
    frame: &CMat,
    drift_strength: f64,
    delta: f64,
    rng: &mut R,
) -> Result<CMat> {
    let theta = (drift_strength * delta).sqrt();
    if theta == 0.0 {
        return Ok(frame.clone());
    }
    let g = drift_generator(frame.nrows(), rng);
    let spec = spectral_decompose(&g, false)?;
    let u = spec.evolution_operator(theta, 1.0);
    let rotated = u * frame;
    // Re-orthonormalize so frame drift cannot accumulate over long runs.
    let cols: Vec<CVec> = (0..rotated.ncols())
        .map(|j| rotated.column(j).into_owned())
        .collect();
    let basis = orthonormalize(&cols)?;
    let mut f = CMat::zeros(frame.nrows(), frame.ncols());
    for (j, c) in basis.iter().enumerate() {
        f.set_column(j, c);
    }
    Ok(f)
}

/// Cached per-step evolution: H is constant along a trajectory, so the
/// propagator is diagonalized once.
struct Propagator {
    u: Option<CMat>,
}

impl Propagator {
    fn new(h: &Operator, delta: f64) -> Result<Self> {
        if h.max_abs() == 0.0 || delta == 0.0 {
            return Ok(Self { u: None });
        }
        let spec = spectral_decompose(h, true)?;
        Ok(Self {
            u: Some(spec.evolution_operator(delta, crate::tol::DEFAULT_HBAR)),
        })
    }

    fn apply(&self, rho: &DensityOperator) -> DensityOperator {
        match &self.u {
            None => rho.clone(),
            Some(u) => DensityOperator::from_valid_parts(u * rho.matrix() * u.adjoint()),
        }
    }
}

fn evolve_cached(h: &Operator, rho: &DensityOperator, delta: f64) -> Result<DensityOperator> {
    Ok(Propagator::new(h, delta)?.apply(rho))
}

/// One realization of a measurement sequence.
#[derive(Debug, Clone)]
pub struct TrajectoryRecord {
    /// Tr(Λⁿ⁺¹ρⁿ) per step; zero-padded past termination.
    pub step_survivals: Vec<f64>,
    /// Running product of the step survivals (log-space accumulation).
    pub running_product: Vec<f64>,
    /// ‖[ρⁿ, Λⁿ⁺¹]‖_F per step; zero-padded past termination.
    pub projector_commutator_norms: Vec<f64>,
    pub seed_used: u64,
    /// Set when a Lüders update hit survival 0 and the trajectory stopped.
    pub terminated: bool,
}

/// Run one trajectory of `plan.steps()` interactions from its own seed.
pub fn run_trajectory(
    config: &InteriorEnsembleConfig,
    plan: &SequencePlan,
    seed: u64,
) -> Result<TrajectoryRecord> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = plan.steps();
    let delta = plan.delta();
    let propagator = Propagator::new(&config.hamiltonian, delta)?;

    let mut state = StepState::initial(config);
    let mut step_survivals = Vec::with_capacity(n);
    let mut running_product = Vec::with_capacity(n);
    let mut projector_commutator_norms = Vec::with_capacity(n);
    let mut log_product = 0.0f64;
    let mut terminated = false;

    for _ in 0..n {
        let evolved = propagator.apply(&state.rho);
        let frame_next = draw_frame(config, &state.frame, delta, &mut rng)?;
        let outcome = finish_step(config, &evolved, frame_next, &mut rng)?;
        log_product += if outcome.survival > 0.0 {
            outcome.survival.ln()
        } else {
            f64::NEG_INFINITY
        };
        step_survivals.push(outcome.survival);
        running_product.push(log_product.exp());
        projector_commutator_norms.push(outcome.commutator_norm);
        match outcome.next {
            Some(next) => state = next,
            None => {
                terminated = true;
                break;
            }
        }
    }
    // Zero-pad terminated trajectories so every record spans the full plan.
    while step_survivals.len() < n {
        step_survivals.push(0.0);
        running_product.push(0.0);
        projector_commutator_norms.push(0.0);
    }
    Ok(TrajectoryRecord {
        step_survivals,
        running_product,
        projector_commutator_norms,
        seed_used: seed,
        terminated,
    })
}

/// Mean survival and its standard error at every step of the plan.
///
/// Trajectory i runs from seed `split_seed(config.seed, i)`. Trajectories
/// are evaluated in parallel chunks but folded in index order, so the
/// output is bitwise identical for identical inputs regardless of worker
/// count.
pub fn ensemble_survival(
    config: &InteriorEnsembleConfig,
    plan: &SequencePlan,
    n_traj: usize,
) -> Result<SurvivalCurve> {
    if n_traj < 2 {
        return Err(Error::InvalidInput(format!(
            "need at least 2 trajectories, got {n_traj}"
        )));
    }
    let n = plan.steps();
    let delta = plan.delta();
    let mut sum = vec![0.0f64; n + 1];
    let mut sumsq = vec![0.0f64; n + 1];

    const CHUNK: usize = 64;
    let mut start = 0usize;
    while start < n_traj {
        let end = (start + CHUNK).min(n_traj);
        let records: Vec<Result<TrajectoryRecord>> = (start..end)
            .into_par_iter()
            .map(|i| run_trajectory(config, plan, split_seed(config.seed, i as u64)))
            .collect();
        for rec in records {
            let rec = rec?;
            sum[0] += 1.0;
            sumsq[0] += 1.0;
            for (k, &p) in rec.running_product.iter().enumerate() {
                sum[k + 1] += p;
                sumsq[k + 1] += p * p;
            }
        }
        start = end;
    }

    let nf = n_traj as f64;
    let points = (0..=n)
        .map(|k| {
            let mean = sum[k] / nf;
            let var = ((sumsq[k] - sum[k] * sum[k] / nf) / (nf - 1.0)).max(0.0);
            CurvePoint {
                t: k as f64 * delta,
                mean,
                stderr: (var / nf).sqrt(),
            }
        })
        .collect();
    Ok(SurvivalCurve::new(points))
}

/// Result of a log-linear exponential fit over a time window.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExponentialFit {
    /// Decay time 1/rate; infinite for a flat curve.
    pub tau: f64,
    pub rate: f64,
    pub rms_log_residual: f64,
    pub window: (f64, f64),
    /// exp(intercept) − 1 measures a pure offset of the fitted curve.
    pub intercept: f64,
}

/// Unweighted least squares of log(mean) against t over the window.
pub fn fit_exponential(curve: &SurvivalCurve, window: (f64, f64)) -> Result<ExponentialFit> {
    let pts = curve.window(window.0, window.1);
    if pts.len() < 3 {
        return Err(Error::InvalidInput(format!(
            "fit window [{}, {}] holds {} points, need at least 3",
            window.0,
            window.1,
            pts.len()
        )));
    }
    if let Some(bad) = pts.iter().find(|p| p.mean <= 0.0) {
        return Err(Error::InvalidInput(format!(
            "non-positive survival {} at t = {} inside the fit window",
            bad.mean, bad.t
        )));
    }
    let n = pts.len() as f64;
    let mean_t: f64 = pts.iter().map(|p| p.t).sum::<f64>() / n;
    let mean_l: f64 = pts.iter().map(|p| p.mean.ln()).sum::<f64>() / n;
    let mut stt = 0.0;
    let mut stl = 0.0;
    for p in &pts {
        let dt = p.t - mean_t;
        stt += dt * dt;
        stl += dt * (p.mean.ln() - mean_l);
    }
    if stt == 0.0 {
        return Err(Error::InvalidInput(
            "degenerate fit window: all points share one t".into(),
        ));
    }
    let slope = stl / stt;
    let intercept = mean_l - slope * mean_t;
    let mut rss = 0.0;
    for p in &pts {
        let r = p.mean.ln() - (slope * p.t + intercept);
        rss += r * r;
    }
    let rate = if slope == 0.0 { 0.0 } else { -slope };
    let tau = if rate == 0.0 { f64::INFINITY } else { 1.0 / rate };
    Ok(ExponentialFit {
        tau,
        rate,
        rms_log_residual: (rss / n).sqrt(),
        window,
        intercept,
    })
}
