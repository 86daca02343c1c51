//! Per-step survival, the instantaneous decay rate, and the compound
//! product of a sequence of equally spaced projective interactions,
//! including its continuous limit and the quantum Zeno special case.

use crate::error::{Error, Result};
use crate::operator::{commutator, evolve_with_hbar, trace_prob, DensityOperator, Operator, Projector};
use crate::tol::{DEFAULT_HBAR, TOL_IMAG_RESIDUE};

/// N equally spaced interactions spanning a fixed total time.
///
/// The step δ = t/N is always derived, never stored, so N·δ = t holds by
/// construction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SequencePlan {
    total_time: f64,
    steps: usize,
}

impl SequencePlan {
    pub fn new(total_time: f64, steps: usize) -> Result<Self> {
        if !(total_time > 0.0) || !total_time.is_finite() {
            return Err(Error::InvalidInput(format!(
                "total_time must be positive and finite, got {total_time}"
            )));
        }
        if steps == 0 {
            return Err(Error::InvalidInput("steps must be positive".into()));
        }
        Ok(Self { total_time, steps })
    }

    pub fn total_time(&self) -> f64 {
        self.total_time
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn delta(&self) -> f64 {
        self.total_time / self.steps as f64
    }
}

/// How a [`RateEstimate`] was produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RateMethod {
    /// Commutator formula (i/ħ)·Tr(ρ[Λ,H]).
    Formula,
    /// Central finite difference of the survival probability.
    FiniteDifference,
    /// Least-squares fit of a survival curve.
    Fit,
}

/// Diagnostics attached to a rate estimate.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RateDiagnostics {
    /// |imaginary part| discarded by the formula route.
    pub imag_residue: Option<f64>,
    /// Step size used by the finite-difference route.
    pub step: Option<f64>,
    /// RMS residual of the log fit, for fitted rates.
    pub rms_log_residual: Option<f64>,
    /// Number of levels averaged in a golden-rule resonance window.
    pub resonance_levels: Option<usize>,
    /// Spread (max−min) of |v|² inside the resonance window.
    pub coupling_spread: Option<f64>,
    /// Set when a channel does not cover the resonance energy.
    pub below_resonance: bool,
}

/// A decay rate with provenance.
#[derive(Debug, Clone, PartialEq)]
pub struct RateEstimate {
    pub rate: f64,
    pub method: RateMethod,
    pub diagnostics: RateDiagnostics,
}

/// Instantaneous decay rate τ⁻¹ = (i/ħ)·Tr(ρ·(ΛH − HΛ)) in natural units.
///
/// The trace is real up to rounding whenever all three inputs are valid;
/// the imaginary residue is recorded and rejected above 1e-10 as a sign of
/// numerical corruption.
pub fn instantaneous_rate(
    lam: &Projector,
    rho: &DensityOperator,
    h: &Operator,
) -> Result<RateEstimate> {
    instantaneous_rate_with_hbar(lam, rho, h, DEFAULT_HBAR)
}

pub fn instantaneous_rate_with_hbar(
    lam: &Projector,
    rho: &DensityOperator,
    h: &Operator,
    hbar: f64,
) -> Result<RateEstimate> {
    if lam.dim() != rho.dim() || rho.dim() != h.dim() {
        return Err(Error::DimensionMismatch {
            left: lam.dim().max(rho.dim()),
            right: h.dim(),
        });
    }
    let dev = h.hermitian_deviation();
    if dev > crate::tol::TOL_HERMITIAN {
        return Err(Error::NotHermitian { deviation: dev });
    }
    let comm = commutator(lam.op(), h)?;
    // Tr(ρ [Λ, H])
    let mut tr = num_complex::Complex64::new(0.0, 0.0);
    let n = rho.dim();
    for i in 0..n {
        for j in 0..n {
            tr += rho.matrix()[(i, j)] * comm.matrix()[(j, i)];
        }
    }
    let z = num_complex::Complex64::new(0.0, 1.0 / hbar) * tr;
    let residue = z.im.abs();
    if residue > TOL_IMAG_RESIDUE {
        return Err(Error::ImaginaryResidue(residue));
    }
    Ok(RateEstimate {
        rate: z.re,
        method: RateMethod::Formula,
        diagnostics: RateDiagnostics {
            imag_residue: Some(residue),
            ..Default::default()
        },
    })
}

/// Central-difference estimate −[s(δ) − s(−δ)]/(2δ) of the decay rate,
/// with s(x) = Tr(Λ ρ(x)).
pub fn rate_finite_difference(
    lam: &Projector,
    rho: &DensityOperator,
    h: &Operator,
    delta: f64,
) -> Result<RateEstimate> {
    rate_finite_difference_with_hbar(lam, rho, h, delta, DEFAULT_HBAR)
}

pub fn rate_finite_difference_with_hbar(
    lam: &Projector,
    rho: &DensityOperator,
    h: &Operator,
    delta: f64,
    hbar: f64,
) -> Result<RateEstimate> {
    if !(delta > 0.0) {
        return Err(Error::NonPositiveDelta(delta));
    }
    let forward = trace_prob(lam, &evolve_with_hbar(rho, h, delta, hbar)?)?;
    let backward = trace_prob(lam, &evolve_with_hbar(rho, h, -delta, hbar)?)?;
    Ok(RateEstimate {
        rate: -(forward - backward) / (2.0 * delta),
        method: RateMethod::FiniteDifference,
        diagnostics: RateDiagnostics {
            step: Some(delta),
            ..Default::default()
        },
    })
}

/// Probability that one interaction a time δ after the previous finds the
/// state still inside the projector's range.
pub fn per_step_survival(
    lam: &Projector,
    rho: &DensityOperator,
    h: &Operator,
    delta: f64,
) -> Result<f64> {
    per_step_survival_with_hbar(lam, rho, h, delta, DEFAULT_HBAR)
}

pub fn per_step_survival_with_hbar(
    lam: &Projector,
    rho: &DensityOperator,
    h: &Operator,
    delta: f64,
    hbar: f64,
) -> Result<f64> {
    if delta < 0.0 {
        return Err(Error::NonPositiveDelta(delta));
    }
    trace_prob(lam, &evolve_with_hbar(rho, h, delta, hbar)?)
}

/// s^N computed in log space; exact 0 when s = 0.
///
/// Stable for N up to ~1e8: exp(N·ln s) avoids the underflow and rounding
/// accumulation of a literal N-fold product.
pub fn compound_from_step_survival(survival: f64, steps: usize) -> f64 {
    if survival <= 0.0 {
        return if steps == 0 { 1.0 } else { 0.0 };
    }
    (steps as f64 * survival.ln()).exp()
}

/// Literal compound survival: s(δ)^N with s from [`per_step_survival`]
/// and δ = t/N.
pub fn compound_survival(
    lam: &Projector,
    rho: &DensityOperator,
    h: &Operator,
    plan: &SequencePlan,
) -> Result<f64> {
    let s = per_step_survival(lam, rho, h, plan.delta())?;
    Ok(compound_from_step_survival(s, plan.steps()))
}

/// One row of a convergence sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepRow {
    pub steps: usize,
    pub survival: f64,
    /// |survival − e^{−t·rate}|.
    pub error: f64,
}

/// Compound survival of the homogeneous idealization s(δ) := 1 − δ·rate
/// against its exponential limit, across a ladder of N.
///
/// The rate comes from [`instantaneous_rate`]. A state entirely inside the
/// projector's range is the trivial Zeno column: the rate vanishes and every
/// row is 1. For a genuinely noncommuting state a non-positive rate means
/// the sequence does not decay, which is reported as an error rather than
/// compounded. The literal (non-idealized) product is available separately
/// through [`compound_survival`].
pub fn convergence_sweep(
    lam: &Projector,
    rho: &DensityOperator,
    h: &Operator,
    total_time: f64,
    n_values: &[usize],
) -> Result<Vec<SweepRow>> {
    if n_values.is_empty() {
        return Err(Error::InvalidInput("n_values must be non-empty".into()));
    }
    if n_values.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidInput("n_values must be strictly ascending".into()));
    }
    let rate = instantaneous_rate(lam, rho, h)?.rate;
    if rate <= 0.0 && !state_inside_range(lam, rho) {
        return Err(Error::NonDecaying(rate));
    }
    let target = (-total_time * rate).exp();
    let rows = n_values
        .iter()
        .map(|&n| {
            let s = 1.0 - total_time * rate / n as f64;
            let survival = compound_from_step_survival(s, n);
            SweepRow {
                steps: n,
                survival,
                error: (survival - target).abs(),
            }
        })
        .collect();
    Ok(rows)
}

/// Λρ = ρ within tolerance: the state lies entirely inside the undecayed
/// subspace, so the sequence is the controlled Zeno setup.
pub fn state_inside_range(lam: &Projector, rho: &DensityOperator) -> bool {
    if lam.dim() != rho.dim() {
        return false;
    }
    let prod = lam.matrix() * rho.matrix();
    (prod - rho.matrix())
        .iter()
        .map(|z| z.norm())
        .fold(0.0, f64::max)
        <= 1e-12
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operator::{CMat, CVec};
    use approx::assert_relative_eq;
    use num_complex::Complex64 as C64;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn plus_x() -> DensityOperator {
        DensityOperator::from_ket(&CVec::from_vec(vec![c(1., 0.), c(1., 0.)])).unwrap()
    }

    fn proj_up() -> Projector {
        Projector::from_span(&[CVec::from_vec(vec![c(1., 0.), c(0., 0.)])]).unwrap()
    }

    fn g_sigma_y(g: f64) -> Operator {
        Operator::from_rows(2, &[c(0., 0.), c(0., -g), c(0., g), c(0., 0.)]).unwrap()
    }

    #[test]
    fn rate_vanishes_for_commuting_pair() {
        let mut m = CMat::zeros(2, 2);
        m[(0, 0)] = c(0.3, 0.);
        m[(1, 1)] = c(0.7, 0.);
        let rho = DensityOperator::new(Operator::new(m).unwrap()).unwrap();
        let lam = proj_up();
        let est = instantaneous_rate(&lam, &rho, &g_sigma_y(0.8)).unwrap();
        assert!(est.rate.abs() < 1e-12, "rate {}", est.rate);
    }

    #[test]
    fn rate_two_level_oracle() {
        // ρ = |+x⟩⟨+x|, Λ = |+z⟩⟨+z|, H = g σ_y with g = 0.25 → rate = g.
        let est = instantaneous_rate(&proj_up(), &plus_x(), &g_sigma_y(0.25)).unwrap();
        assert_relative_eq!(est.rate, 0.25, epsilon = 1e-14);
        assert!(est.diagnostics.imag_residue.unwrap() < 1e-12);
    }

    #[test]
    fn rate_finite_difference_agrees_with_formula() {
        let lam = proj_up();
        let rho = plus_x();
        let h = g_sigma_y(0.25);
        let fd = rate_finite_difference(&lam, &rho, &h, 1e-4).unwrap();
        assert_relative_eq!(fd.rate, 0.25, epsilon = 1e-7);
        // Richardson check: halving δ shrinks the O(δ²) error ~4x.
        let fd2 = rate_finite_difference(&lam, &rho, &h, 5e-5).unwrap();
        let e1 = (fd.rate - 0.25).abs();
        let e2 = (fd2.rate - 0.25).abs();
        assert!(e2 < e1, "e1={e1:.3e} e2={e2:.3e}");
        if e2 > 1e-12 {
            let ratio = e1 / e2;
            assert!((2.0..8.0).contains(&ratio), "ratio {ratio}");
        }
        assert_eq!(fd.diagnostics.step, Some(1e-4));
    }

    #[test]
    fn finite_difference_zero_hamiltonian() {
        let fd = rate_finite_difference(&proj_up(), &plus_x(), &Operator::zeros(2), 0.3).unwrap();
        assert_eq!(fd.rate, 0.0);
    }

    #[test]
    fn finite_difference_commuting_pair_zero() {
        let mut m = CMat::zeros(2, 2);
        m[(0, 0)] = c(1.0, 0.);
        let rho = DensityOperator::new(Operator::new(m).unwrap()).unwrap();
        let mut hm = CMat::zeros(2, 2);
        hm[(0, 0)] = c(0.4, 0.);
        hm[(1, 1)] = c(-0.9, 0.);
        let h = Operator::new(hm).unwrap();
        let fd = rate_finite_difference(&proj_up(), &rho, &h, 1e-3).unwrap();
        assert!(fd.rate.abs() < 1e-12);
    }

    #[test]
    fn finite_difference_rejects_bad_delta() {
        assert!(matches!(
            rate_finite_difference(&proj_up(), &plus_x(), &Operator::zeros(2), 0.0),
            Err(Error::NonPositiveDelta(_))
        ));
    }

    #[test]
    fn per_step_survival_at_zero_delta() {
        let up = DensityOperator::from_ket(&CVec::from_vec(vec![c(1., 0.), c(0., 0.)])).unwrap();
        let s = per_step_survival(&proj_up(), &up, &g_sigma_y(1.0), 0.0).unwrap();
        assert_relative_eq!(s, 1.0, epsilon = 1e-14);
        let s = per_step_survival(&proj_up(), &plus_x(), &g_sigma_y(1.0), 0.0).unwrap();
        assert_relative_eq!(s, 0.5, epsilon = 1e-14);
    }

    #[test]
    fn per_step_survival_rabi_curve() {
        let up = DensityOperator::from_ket(&CVec::from_vec(vec![c(1., 0.), c(0., 0.)])).unwrap();
        let g = 0.9;
        let h = Operator::from_rows(2, &[c(0., 0.), c(g, 0.), c(g, 0.), c(0., 0.)]).unwrap();
        for &delta in &[0.0, 0.1, 0.5, 1.3] {
            let s = per_step_survival(&proj_up(), &up, &h, delta).unwrap();
            assert_relative_eq!(s, (g * delta).cos().powi(2), epsilon = 1e-12);
        }
    }

    #[test]
    fn compound_toy_product() {
        // s(δ) = 1 − t/(Nτ) with t/τ = 1, N = 10 → 0.9^10
        let s = 1.0 - 1.0 / 10.0;
        assert_relative_eq!(
            compound_from_step_survival(s, 10),
            0.34867844010000004,
            epsilon = 1e-15
        );
    }

    #[test]
    fn compound_reaches_exponential_limit() {
        let n = 1_000_000;
        let s = 1.0 - 1.0 / n as f64;
        let p = compound_from_step_survival(s, n);
        assert!((p - (-1.0f64).exp()).abs() < 1e-6, "p = {p}");
    }

    #[test]
    fn compound_zero_survival() {
        assert_eq!(compound_from_step_survival(0.0, 5), 0.0);
    }

    #[test]
    fn compound_qze_case_is_unity() {
        let up = DensityOperator::from_ket(&CVec::from_vec(vec![c(1., 0.), c(0., 0.)])).unwrap();
        let lam = proj_up();
        let mut hm = CMat::zeros(2, 2);
        hm[(0, 0)] = c(0.6, 0.);
        hm[(1, 1)] = c(-0.2, 0.);
        let h = Operator::new(hm).unwrap(); // [H, Λ] = 0
        for &n in &[1usize, 100, 1_000_000] {
            let plan = SequencePlan::new(10.0, n).unwrap();
            let p = compound_survival(&lam, &up, &h, &plan).unwrap();
            assert!((p - 1.0).abs() < 1e-9, "N={n}: p={p}");
        }
    }

    #[test]
    fn sweep_zero_rate_is_all_ones() {
        let up = DensityOperator::from_ket(&CVec::from_vec(vec![c(1., 0.), c(0., 0.)])).unwrap();
        let rows =
            convergence_sweep(&proj_up(), &up, &g_sigma_y(0.7), 5.0, &[10, 100, 1000]).unwrap();
        for row in rows {
            assert!((row.survival - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn sweep_error_shrinks_like_one_over_n() {
        // rate·t = 1 via the two-level triple with g = 0.25, t = 4.
        let rows = convergence_sweep(
            &proj_up(),
            &plus_x(),
            &g_sigma_y(0.25),
            4.0,
            &[100, 10_000, 1_000_000],
        )
        .unwrap();
        assert!(rows[2].error < rows[0].error);
        // (1−x/N)^N − e^{−x} ≈ −e^{−x}x²/(2N): each 100x in N shrinks the error 100x.
        let r01 = rows[0].error / rows[1].error;
        let r12 = rows[1].error / rows[2].error;
        assert!((r01 / 100.0 - 1.0).abs() < 0.2, "ratio {r01}");
        assert!((r12 / 100.0 - 1.0).abs() < 0.2, "ratio {r12}");
    }

    #[test]
    fn sweep_matches_exponential_at_large_n() {
        // rate·t = 2 via g = 0.25, t = 8, N = 1e6.
        let rows = convergence_sweep(
            &proj_up(),
            &plus_x(),
            &g_sigma_y(0.25),
            8.0,
            &[1_000_000],
        )
        .unwrap();
        assert!((rows[0].survival - (-2.0f64).exp()).abs() < 2e-6);
    }

    #[test]
    fn sweep_reports_non_decaying() {
        // Flip the Hamiltonian sign: the formula rate goes negative.
        let res = convergence_sweep(&proj_up(), &plus_x(), &g_sigma_y(-0.25), 4.0, &[10, 100]);
        assert!(matches!(res, Err(Error::NonDecaying(r)) if r < 0.0));
    }

    #[test]
    fn plan_delta_is_derived() {
        let plan = SequencePlan::new(10.0, 4).unwrap();
        assert_eq!(plan.delta(), 2.5);
        assert_eq!(plan.steps() as f64 * plan.delta(), plan.total_time());
        assert!(SequencePlan::new(0.0, 4).is_err());
        assert!(SequencePlan::new(1.0, 0).is_err());
    }
}
