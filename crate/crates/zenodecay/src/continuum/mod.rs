//! Discretized-continuum models: golden-rule rates, Lippmann–Schwinger
//! solves, decay channels, exact unitary dynamics, and line shapes.
//!
//! A model is one bound level coupled to M continuum levels spread
//! uniformly over a band of width W centered on the bound energy. The
//! density of final states is the level count per unit energy, M/W.

mod lorentzian;
mod model_file;

pub use lorentzian::{fit_lorentzian, LorentzianFit};
pub use model_file::{format_model_file, parse_model_file};

use crate::curve::{CurvePoint, SurvivalCurve};
use crate::error::{Error, Result};
use crate::measurement::{RateDiagnostics, RateEstimate, RateMethod};
use crate::operator::{spectral_decompose, CMat, CVec, Operator, SpectralDecomposition};
use num_complex::Complex64 as C64;
use std::collections::BTreeMap;

/// One bound level over a uniformly discretized continuum band, with one
/// complex coupling and one channel label per continuum level.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscretizedContinuumModel {
    bound_energy: f64,
    band_width: f64,
    hbar: f64,
    couplings: Vec<C64>,
    channel_labels: Vec<String>,
}

impl DiscretizedContinuumModel {
    pub fn new(
        bound_energy: f64,
        band_width: f64,
        couplings: Vec<C64>,
        channel_labels: Vec<String>,
        hbar: f64,
    ) -> Result<Self> {
        if couplings.is_empty() {
            return Err(Error::InvalidInput("need at least one continuum level".into()));
        }
        if channel_labels.len() != couplings.len() {
            return Err(Error::InvalidInput(format!(
                "{} channel labels for {} levels",
                channel_labels.len(),
                couplings.len()
            )));
        }
        if !(band_width > 0.0) || !band_width.is_finite() {
            return Err(Error::InvalidInput(format!(
                "band width must be positive, got {band_width}"
            )));
        }
        if !(hbar > 0.0) || !hbar.is_finite() {
            return Err(Error::InvalidInput(format!("hbar must be positive, got {hbar}")));
        }
        if !bound_energy.is_finite() {
            return Err(Error::InvalidInput("bound energy must be finite".into()));
        }
        if couplings
            .iter()
            .any(|v| !v.re.is_finite() || !v.im.is_finite())
        {
            return Err(Error::InvalidInput("couplings must be finite".into()));
        }
        Ok(Self {
            bound_energy,
            band_width,
            hbar,
            couplings,
            channel_labels,
        })
    }

    /// All levels share one coupling and one channel.
    pub fn uniform(
        bound_energy: f64,
        band_width: f64,
        levels: usize,
        coupling: f64,
        hbar: f64,
    ) -> Result<Self> {
        Self::new(
            bound_energy,
            band_width,
            vec![C64::new(coupling, 0.0); levels],
            vec!["0".to_string(); levels],
            hbar,
        )
    }

    pub fn levels(&self) -> usize {
        self.couplings.len()
    }

    /// Total Hilbert-space dimension: bound level plus continuum.
    pub fn dim(&self) -> usize {
        self.levels() + 1
    }

    pub fn bound_energy(&self) -> f64 {
        self.bound_energy
    }

    pub fn band_width(&self) -> f64 {
        self.band_width
    }

    pub fn hbar(&self) -> f64 {
        self.hbar
    }

    pub fn couplings(&self) -> &[C64] {
        &self.couplings
    }

    pub fn channel_labels(&self) -> &[String] {
        &self.channel_labels
    }

    /// E_m = E_i − W/2 + (m + ½)·W/M.
    pub fn level_energy(&self, m: usize) -> f64 {
        self.bound_energy - self.band_width / 2.0
            + (m as f64 + 0.5) * self.band_width / self.levels() as f64
    }

    /// Free Hamiltonian: diag(E_i, E_0, …, E_{M−1}).
    pub fn h0(&self) -> Operator {
        let d = self.dim();
        let mut mat = CMat::zeros(d, d);
        mat[(0, 0)] = C64::new(self.bound_energy, 0.0);
        for m in 0..self.levels() {
            mat[(m + 1, m + 1)] = C64::new(self.level_energy(m), 0.0);
        }
        Operator::new(mat).expect("finite by validation")
    }

    /// Interaction: bound↔continuum couplings only, zero diagonal.
    pub fn v(&self) -> Operator {
        let d = self.dim();
        let mut mat = CMat::zeros(d, d);
        for (m, &vm) in self.couplings.iter().enumerate() {
            mat[(0, m + 1)] = vm;
            mat[(m + 1, 0)] = vm.conj();
        }
        Operator::new(mat).expect("finite by validation")
    }

    /// H = H₀ + V; Hermitian by construction.
    pub fn hamiltonian(&self) -> Operator {
        &self.h0() + &self.v()
    }

    /// Whole-band density of final states.
    pub fn density(&self) -> FinalStateDensity {
        FinalStateDensity {
            value: self.levels() as f64 / self.band_width,
        }
    }
}

/// Density of decayed states per unit energy: λ = M/W on a uniform grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FinalStateDensity {
    pub value: f64,
}

/// Assignment of every continuum level to exactly one channel label.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelPartition {
    groups: BTreeMap<String, Vec<usize>>,
    levels: usize,
}

impl ChannelPartition {
    /// Group levels by explicit lists; must be disjoint and exhaustive.
    pub fn new(groups: BTreeMap<String, Vec<usize>>, levels: usize) -> Result<Self> {
        let mut seen = vec![false; levels];
        for (label, ms) in &groups {
            if ms.is_empty() {
                return Err(Error::EmptyChannel(label.clone()));
            }
            for &m in ms {
                if m >= levels {
                    return Err(Error::InvalidPartition(format!(
                        "level {m} out of range for {levels} levels"
                    )));
                }
                if seen[m] {
                    return Err(Error::InvalidPartition(format!(
                        "level {m} assigned to more than one channel"
                    )));
                }
                seen[m] = true;
            }
        }
        if let Some(m) = seen.iter().position(|&s| !s) {
            return Err(Error::InvalidPartition(format!(
                "level {m} not assigned to any channel"
            )));
        }
        Ok(Self { groups, levels })
    }

    /// The partition induced by the model's per-level channel labels.
    pub fn from_model(model: &DiscretizedContinuumModel) -> Self {
        let mut groups: BTreeMap<String, Vec<usize>> = BTreeMap::new();
        for (m, label) in model.channel_labels().iter().enumerate() {
            groups.entry(label.clone()).or_default().push(m);
        }
        Self {
            groups,
            levels: model.levels(),
        }
    }

    pub fn groups(&self) -> &BTreeMap<String, Vec<usize>> {
        &self.groups
    }
}

/// Fermi's-golden-rule rate (2π/ħ)·|V|²·λ with the bare-state reading of
/// the prepared ket.
///
/// |V|² is the mean of |v_m|² over the max(1, round(M/20)) levels nearest
/// the bound energy, which stabilizes the rate when couplings vary across
/// the band; the window size and coupling spread are reported in the
/// diagnostics. With `channel` given, only that channel's levels and its
/// own density enter.
pub fn fgr_rate(model: &DiscretizedContinuumModel, channel: Option<&str>) -> Result<RateEstimate> {
    let level_set: Vec<usize> = match channel {
        None => (0..model.levels()).collect(),
        Some(label) => {
            let ms: Vec<usize> = model
                .channel_labels()
                .iter()
                .enumerate()
                .filter(|(_, l)| l.as_str() == label)
                .map(|(m, _)| m)
                .collect();
            if ms.is_empty() {
                return Err(Error::EmptyChannel(label.to_string()));
            }
            ms
        }
    };
    fgr_rate_for_levels(model, &level_set)
}

fn fgr_rate_for_levels(model: &DiscretizedContinuumModel, level_set: &[usize]) -> Result<RateEstimate> {
    let m_total = model.levels();
    let m_count = level_set.len();

    // Channel density: level count over energy span, where the span counts
    // one mean level spacing per level. Index arithmetic keeps the
    // degenerate whole-band channel bitwise identical to the plain M/W.
    let lambda = if m_count == m_total {
        model.density().value
    } else if m_count == 1 {
        // a single level occupies one grid cell
        m_total as f64 / model.band_width
    } else {
        let m_min = *level_set.iter().min().expect("non-empty");
        let m_max = *level_set.iter().max().expect("non-empty");
        let cells = m_count as f64 * (m_max - m_min) as f64 / (m_count - 1) as f64;
        (m_count as f64 * m_total as f64) / (cells * model.band_width)
    };

    // The channel must cover the resonance energy for energy-conserving
    // final states to exist.
    let cell = model.band_width / m_total as f64;
    let e_lo = level_set
        .iter()
        .map(|&m| model.level_energy(m))
        .fold(f64::INFINITY, f64::min);
    let e_hi = level_set
        .iter()
        .map(|&m| model.level_energy(m))
        .fold(f64::NEG_INFINITY, f64::max);
    if model.bound_energy < e_lo - cell / 2.0 || model.bound_energy > e_hi + cell / 2.0 {
        return Ok(RateEstimate {
            rate: 0.0,
            method: RateMethod::Formula,
            diagnostics: RateDiagnostics {
                below_resonance: true,
                resonance_levels: Some(0),
                ..Default::default()
            },
        });
    }

    let n_res = ((m_count as f64 / 20.0).round() as usize).max(1);
    let mut by_distance: Vec<usize> = level_set.to_vec();
    by_distance.sort_by(|&a, &b| {
        let da = (model.level_energy(a) - model.bound_energy).abs();
        let db = (model.level_energy(b) - model.bound_energy).abs();
        da.total_cmp(&db).then(a.cmp(&b))
    });
    let window = &by_distance[..n_res.min(by_distance.len())];
    let mags: Vec<f64> = window
        .iter()
        .map(|&m| model.couplings[m].norm_sqr())
        .collect();
    let mean_sq = mags.iter().sum::<f64>() / mags.len() as f64;
    let spread = mags.iter().fold(f64::NEG_INFINITY, |a, &b| a.max(b))
        - mags.iter().fold(f64::INFINITY, |a, &b| a.min(b));

    Ok(RateEstimate {
        rate: 2.0 * std::f64::consts::PI / model.hbar * mean_sq * lambda,
        method: RateMethod::Formula,
        diagnostics: RateDiagnostics {
            resonance_levels: Some(window.len()),
            coupling_spread: Some(spread),
            ..Default::default()
        },
    })
}

/// Per-channel golden-rule rates for a disjoint, exhaustive partition.
///
/// Splitting V by final states makes each part annihilate the other
/// channels' levels by construction; that separation is re-verified here
/// before the rates are computed.
pub fn channel_rates(
    model: &DiscretizedContinuumModel,
    partition: &ChannelPartition,
) -> Result<Vec<(String, RateEstimate)>> {
    if partition.levels != model.levels() {
        return Err(Error::InvalidPartition(format!(
            "partition covers {} levels, model has {}",
            partition.levels,
            model.levels()
        )));
    }
    // V_k e_m = 0 for every level m outside channel k.
    for (label, ms) in partition.groups() {
        let vk = restricted_coupling(model, ms);
        for m in 0..model.levels() {
            if !ms.contains(&m) {
                let col_max = (0..model.dim())
                    .map(|i| vk.matrix()[(i, m + 1)].norm())
                    .fold(0.0, f64::max);
                if col_max != 0.0 {
                    return Err(Error::InvalidPartition(format!(
                        "channel {label:?} couples to foreign level {m}"
                    )));
                }
            }
        }
    }
    partition
        .groups()
        .iter()
        .map(|(label, ms)| Ok((label.clone(), fgr_rate_for_levels(model, ms)?)))
        .collect()
}

/// V restricted to one channel's levels: the V_k of a partitioned
/// interaction.
fn restricted_coupling(model: &DiscretizedContinuumModel, levels: &[usize]) -> Operator {
    let d = model.dim();
    let mut mat = CMat::zeros(d, d);
    for &m in levels {
        mat[(0, m + 1)] = model.couplings[m];
        mat[(m + 1, 0)] = model.couplings[m].conj();
    }
    Operator::new(mat).expect("finite couplings")
}

/// Survival under several independent decay channels:
/// Π_c e^{−t·Γ_c}, the product of per-channel exponentials.
pub fn multi_channel_survival(rates: &[f64], t: f64) -> Result<f64> {
    if let Some(&bad) = rates.iter().find(|&&r| !(r >= 0.0)) {
        return Err(Error::InvalidInput(format!(
            "channel rates must be non-negative, got {bad}"
        )));
    }
    Ok(rates.iter().map(|&r| (-t * r).exp()).product())
}

/// Scattering eigenket by complex-shifted linear solve:
/// (I − G₀(E_m + iε)V)·x = |E_m⟩ with G₀ diagonal in the free basis.
///
/// The defining-equation residual must come out below 1e-10 and the system
/// condition estimate below 1e12, else the solve is rejected.
pub fn lippmann_schwinger_solve(
    model: &DiscretizedContinuumModel,
    level: usize,
    epsilon: f64,
) -> Result<CVec> {
    if level >= model.levels() {
        return Err(Error::InvalidInput(format!(
            "level {level} out of range for {} levels",
            model.levels()
        )));
    }
    if !(epsilon > 0.0) {
        return Err(Error::InvalidInput(format!(
            "epsilon must be positive, got {epsilon}"
        )));
    }
    let d = model.dim();
    let z = C64::new(model.level_energy(level), epsilon);
    let h0 = model.h0();
    let v = model.v();
    let g0: Vec<C64> = (0..d)
        .map(|j| C64::new(1.0, 0.0) / (z - h0.matrix()[(j, j)]))
        .collect();
    let mut a = CMat::identity(d, d);
    for i in 0..d {
        for j in 0..d {
            a[(i, j)] -= g0[i] * v.matrix()[(i, j)];
        }
    }
    let mut rhs = CVec::zeros(d);
    rhs[level + 1] = C64::new(1.0, 0.0);

    let lu = a.clone().lu();
    let x = lu
        .solve(&rhs)
        .ok_or(Error::IllConditioned(f64::INFINITY))?;
    let inv = a
        .clone()
        .lu()
        .try_inverse()
        .ok_or(Error::IllConditioned(f64::INFINITY))?;
    let cond = one_norm(&a) * one_norm(&inv);
    if cond > crate::tol::MAX_CONDITION {
        return Err(Error::IllConditioned(cond));
    }
    // residual of the defining equation x = e + G0 V x
    let vx = v.matrix() * &x;
    let mut res = &x - &rhs;
    for i in 0..d {
        res[i] -= g0[i] * vx[i];
    }
    let rel = res.norm() / x.norm();
    if rel > crate::tol::TOL_LS_RESIDUAL {
        return Err(Error::IllConditioned(cond));
    }
    Ok(x)
}

fn one_norm(a: &CMat) -> f64 {
    (0..a.ncols())
        .map(|j| (0..a.nrows()).map(|i| a[(i, j)].norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// The model diagonalized once; survival and line-shape evaluations at any
/// time reuse the cached spectrum and are safe to share across threads.
#[derive(Debug, Clone)]
pub struct SolvedModel {
    model: DiscretizedContinuumModel,
    spectrum: SpectralDecomposition,
    /// |⟨φ|α⟩|² per eigenstate.
    bound_weights: Vec<f64>,
}

impl SolvedModel {
    pub fn new(model: DiscretizedContinuumModel) -> Result<Self> {
        let spectrum = spectral_decompose(&model.hamiltonian(), true)?;
        let bound_weights = (0..model.dim())
            .map(|a| spectrum.eigenvectors()[(0, a)].norm_sqr())
            .collect();
        Ok(Self {
            model,
            spectrum,
            bound_weights,
        })
    }

    pub fn model(&self) -> &DiscretizedContinuumModel {
        &self.model
    }

    pub fn spectrum(&self) -> &SpectralDecomposition {
        &self.spectrum
    }

    /// Unitary survival |⟨φ|e^{−iHt/ħ}|φ⟩|², exact to eigensolver precision.
    pub fn survival(&self, t: f64) -> f64 {
        let mut z = C64::new(0.0, 0.0);
        for (w, &e) in self.bound_weights.iter().zip(self.spectrum.eigenvalues()) {
            z += C64::new(0.0, -e * t / self.model.hbar).exp() * C64::new(*w, 0.0);
        }
        z.norm_sqr()
    }

    pub fn survival_curve(&self, times: &[f64]) -> SurvivalCurve {
        SurvivalCurve::new(
            times
                .iter()
                .map(|&t| CurvePoint {
                    t,
                    mean: self.survival(t),
                    stderr: 0.0,
                })
                .collect(),
        )
    }

    /// Continuum populations |⟨m|e^{−iHt/ħ}|φ⟩|² as (E_m, population).
    pub fn lineshape(&self, t: f64) -> Result<Vec<(f64, f64)>> {
        if !(t >= 0.0) {
            return Err(Error::NonFiniteTime(t));
        }
        let d = self.model.dim();
        let phases: Vec<C64> = self
            .spectrum
            .eigenvalues()
            .iter()
            .map(|&e| C64::new(0.0, -e * t / self.model.hbar).exp())
            .collect();
        let u = self.spectrum.eigenvectors();
        let mut out = Vec::with_capacity(self.model.levels());
        for m in 0..self.model.levels() {
            let mut z = C64::new(0.0, 0.0);
            for a in 0..d {
                z += u[(m + 1, a)] * u[(0, a)].conj() * phases[a];
            }
            out.push((self.model.level_energy(m), z.norm_sqr()));
        }
        Ok(out)
    }
}

/// Exact unitary survival on a time grid; the independent oracle for the
/// golden-rule rate.
pub fn exact_survival(model: &DiscretizedContinuumModel, times: &[f64]) -> Result<SurvivalCurve> {
    Ok(SolvedModel::new(model.clone())?.survival_curve(times))
}

/// Continuum populations at one time.
pub fn lineshape(model: &DiscretizedContinuumModel, t: f64) -> Result<Vec<(f64, f64)>> {
    SolvedModel::new(model.clone())?.lineshape(t)
}

/// Mean energy ⟨φ|H|φ⟩ and variance ⟨φ|H²|φ⟩ − ⟨φ|H|φ⟩² of the prepared
/// state. The variance fixes the short-time quadratic region
/// P(t) ≈ 1 − (ΔH)²t²/ħ².
pub fn short_time_coefficients(model: &DiscretizedContinuumModel) -> (f64, f64) {
    let mean = model.bound_energy;
    let variance = model.couplings.iter().map(|v| v.norm_sqr()).sum();
    (mean, variance)
}
