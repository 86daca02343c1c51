//! Reproducible experiment runner: dispatches named experiments across the
//! other modules and emits CSV data, fit summaries, and static SVG plots.
//!
//! Artifacts are computed fully in memory and written only after every
//! validation has passed, so a failing run leaves no partial output. For a
//! fixed config and seed the artifact bytes (and so their digests) are
//! identical run to run.

mod config;

pub use config::{
    parse_config, ChannelsParams, CompoundParams, ContrastParams, EnsembleParams,
    ExperimentConfig, ExperimentKind, ExperimentParams, FgrParams, LineshapeParams, ModelSpec,
    QzeParams,
};

use crate::continuum::{
    channel_rates, fgr_rate, fit_lorentzian, short_time_coefficients, ChannelPartition,
    SolvedModel,
};
use crate::curve::{format_sig17, format_table, CurvePoint, SurvivalCurve};
use crate::ensemble::{
    ensemble_survival, fit_exponential, gaussian_hermitian, split_seed, InteriorEnsembleConfig,
};
use crate::error::Result;
use crate::measurement::{
    compound_survival, convergence_sweep, instantaneous_rate, SequencePlan,
};
use crate::operator::{CMat, DensityOperator, Operator, Projector};
use crate::svg::{render_plot, PlotOptions, Series};
use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use sha2::{Digest, Sha256};
use std::collections::BTreeMap;
use std::path::Path;

// Re-export the measurement type used in runner signatures.
use crate::measurement as measurement_types;
pub use measurement_types::RateEstimate;

/// Seed tag for the optional random ensemble Hamiltonian, so it never
/// collides with a trajectory seed.
const HAMILTONIAN_SEED_TAG: u64 = 0x4841_4d49_4c54_0001;

/// One emitted file with the digest of its final bytes.
#[derive(Debug, Clone, Serialize, PartialEq, Eq)]
pub struct ArtifactRecord {
    pub file: String,
    pub sha256: String,
}

/// Everything a run leaves behind besides the artifacts themselves.
#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub tool_version: String,
    pub experiment: String,
    pub seed: u64,
    pub config: BTreeMap<String, String>,
    pub artifacts: Vec<ArtifactRecord>,
    pub duration_seconds: f64,
}

struct Artifact {
    name: &'static str,
    bytes: Vec<u8>,
}

impl Artifact {
    fn text(name: &'static str, text: String) -> Self {
        Self {
            name,
            bytes: text.into_bytes(),
        }
    }
}

fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes)
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

/// Run the experiment and write its artifacts plus `manifest.json` into
/// `out_dir`. All numerics happen before the first byte is written.
pub fn run_experiment(config: &ExperimentConfig, out_dir: &Path) -> Result<RunManifest> {
    let started = std::time::Instant::now();
    let artifacts = match &config.params {
        ExperimentParams::Qze(p) => run_qze(config.seed, p)?,
        ExperimentParams::Compound(p) => run_compound(p)?,
        ExperimentParams::Ensemble(p) => run_ensemble(config.seed, p)?,
        ExperimentParams::Fgr(p) => run_fgr(p)?,
        ExperimentParams::Channels(p) => run_channels(p)?,
        ExperimentParams::Lineshape(p) => run_lineshape(p)?,
        ExperimentParams::Contrast(p) => run_contrast(p)?,
    };

    std::fs::create_dir_all(out_dir)?;
    let mut records = Vec::with_capacity(artifacts.len());
    for artifact in &artifacts {
        std::fs::write(out_dir.join(artifact.name), &artifact.bytes)?;
        records.push(ArtifactRecord {
            file: artifact.name.to_string(),
            sha256: sha256_hex(&artifact.bytes),
        });
    }
    let manifest = RunManifest {
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        experiment: config.experiment.name().to_string(),
        seed: config.seed,
        config: config.echo.clone(),
        artifacts: records,
        duration_seconds: started.elapsed().as_secs_f64(),
    };
    let manifest_json =
        serde_json::to_string_pretty(&manifest).expect("manifest serializes") + "\n";
    std::fs::write(out_dir.join("manifest.json"), manifest_json)?;
    Ok(manifest)
}

/// A random commuting triple (ρ, Λ, H) built in a shared eigenbasis.
///
/// Diagonal construction keeps every compound-survival evaluation exact to
/// a few ulp, which the N = 1e6 amplification in the Zeno experiment
/// requires; a dense commuting pair would add ~1e-15 of conjugation noise
/// per step evaluation and wash out the 1e-9 contract.
pub fn commuting_zeno_instance(
    dim: usize,
    rank: usize,
    rng: &mut impl Rng,
) -> (Projector, DensityOperator, Operator) {
    assert!(rank >= 1 && rank < dim);
    let mut probs: Vec<f64> = (0..rank).map(|_| rng.random::<f64>() + 1e-3).collect();
    let total: f64 = probs.iter().sum();
    for p in probs.iter_mut() {
        *p /= total;
    }
    // pin the sum to 1 within one ulp
    let head: f64 = probs[..rank - 1].iter().sum();
    probs[rank - 1] = 1.0 - head;

    let mut rho = CMat::zeros(dim, dim);
    let mut lam = CMat::zeros(dim, dim);
    let mut h = CMat::zeros(dim, dim);
    for i in 0..dim {
        if i < rank {
            rho[(i, i)] = C64::new(probs[i], 0.0);
            lam[(i, i)] = C64::new(1.0, 0.0);
        }
        h[(i, i)] = C64::new(2.0 * rng.random::<f64>() - 1.0, 0.0);
    }
    (
        Projector::new(Operator::new(lam).expect("finite"), rank).expect("projector"),
        DensityOperator::new(Operator::new(rho).expect("finite")).expect("density"),
        Operator::new(h).expect("finite"),
    )
}

fn run_qze(seed: u64, p: &QzeParams) -> Result<Vec<Artifact>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (lam, rho, h) = commuting_zeno_instance(p.dim, p.rank, &mut rng);
    let rate = instantaneous_rate(&lam, &rho, &h)?.rate;

    let mut points = vec![CurvePoint {
        t: 0.0,
        mean: 1.0,
        stderr: 0.0,
    }];
    for k in 1..=p.points {
        let t = p.total_time * k as f64 / p.points as f64;
        let plan = SequencePlan::new(t, p.steps)?;
        points.push(CurvePoint {
            t,
            mean: compound_survival(&lam, &rho, &h, &plan)?,
            stderr: 0.0,
        });
    }
    let curve = SurvivalCurve::new(points);

    let summary = format!(
        "commuting pair: dim = {}, rank = {}\ninstantaneous_rate = {}\nsteps = {}\nmin_survival = {}\n",
        p.dim,
        p.rank,
        format_sig17(rate),
        p.steps,
        format_sig17(
            curve
                .points()
                .iter()
                .map(|q| q.mean)
                .fold(f64::INFINITY, f64::min)
        ),
    );
    let svg = render_plot(
        &[Series::new(
            "compound survival",
            curve.points().iter().map(|q| (q.t, q.mean)).collect(),
        )],
        &PlotOptions {
            title: "Zeno branch: commuting state and observable".into(),
            ..Default::default()
        },
    )?;
    Ok(vec![
        Artifact::text("survival.csv", curve.to_csv()),
        Artifact::text("summary.txt", summary),
        Artifact::text("survival.svg", svg),
    ])
}

fn two_level_instance(g: f64) -> (Projector, DensityOperator, Operator) {
    let lam = Projector::from_span(&[crate::operator::CVec::from_vec(vec![
        C64::new(1.0, 0.0),
        C64::new(0.0, 0.0),
    ])])
    .expect("independent");
    let rho = DensityOperator::from_ket(&crate::operator::CVec::from_vec(vec![
        C64::new(1.0, 0.0),
        C64::new(1.0, 0.0),
    ]))
    .expect("nonzero");
    let h = Operator::from_rows(
        2,
        &[
            C64::new(0.0, 0.0),
            C64::new(0.0, -g),
            C64::new(0.0, g),
            C64::new(0.0, 0.0),
        ],
    )
    .expect("finite");
    (lam, rho, h)
}

fn run_compound(p: &CompoundParams) -> Result<Vec<Artifact>> {
    let (lam, rho, h) = two_level_instance(p.g);
    let rate = instantaneous_rate(&lam, &rho, &h)?.rate;
    let target = (-p.total_time * rate).exp();
    let sweep = convergence_sweep(&lam, &rho, &h, p.total_time, &p.n_values)?;

    let mut rows = Vec::with_capacity(sweep.len());
    for row in &sweep {
        let plan = SequencePlan::new(p.total_time, row.steps)?;
        let literal = compound_survival(&lam, &rho, &h, &plan)?;
        rows.push(vec![
            row.steps as f64,
            row.survival,
            row.error,
            literal,
            (literal - target).abs(),
        ]);
    }
    let csv = format_table(
        &[
            "n",
            "survival_idealized",
            "error_idealized",
            "survival_literal",
            "error_literal",
        ],
        &rows,
    );
    let summary = format!(
        "instantaneous_rate = {}\nrate_times_t = {}\nexponential_target = {}\n\
         branch `idealized`: compound of s = 1 - delta*rate\n\
         branch `literal`: compound of the measured per-step survival\n",
        format_sig17(rate),
        format_sig17(rate * p.total_time),
        format_sig17(target),
    );
    let svg = render_plot(
        &[
            Series::new(
                "idealized |survival - target|",
                rows.iter().map(|r| (r[0], r[2])).collect(),
            ),
            Series::new(
                "literal |survival - target|",
                rows.iter().map(|r| (r[0], r[4])).collect(),
            ),
        ],
        &PlotOptions {
            title: "Convergence to the exponential limit".into(),
            x_label: "N".into(),
            y_label: "absolute error".into(),
            log_x: true,
            log_y: true,
            ..Default::default()
        },
    )?;
    Ok(vec![
        Artifact::text("sweep.csv", csv),
        Artifact::text("summary.txt", summary),
        Artifact::text("sweep.svg", svg),
    ])
}

fn run_ensemble(seed: u64, p: &EnsembleParams) -> Result<Vec<Artifact>> {
    let hamiltonian = if p.h_scale == 0.0 {
        Operator::zeros(p.dim)
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(split_seed(seed, HAMILTONIAN_SEED_TAG));
        let g = gaussian_hermitian(p.dim, &mut rng);
        Operator::new(g.into_matrix() * C64::new(p.h_scale, 0.0)).expect("finite")
    };
    let config = InteriorEnsembleConfig::new(
        p.dim,
        p.rank,
        p.mode,
        p.gamma,
        p.update,
        hamiltonian,
        seed,
    )?;
    let plan = SequencePlan::new(p.total_time, p.steps)?;
    let curve = ensemble_survival(&config, &plan, p.trajectories)?;
    let fit = fit_exponential(&curve, (p.fit_t_min, p.fit_t_max))?;

    // Per-step loss estimate from the first recorded step, reported next to
    // the windowed sequence-average fit.
    let first = curve.points()[1];
    let first_step_rate = (1.0 - first.mean) / plan.delta();

    let summary = format!(
        "fitted_rate = {}\ntau = {}\nrms_log_residual = {}\nwindow = [{}, {}]\nintercept = {}\nfirst_step_rate = {}\ntrajectories = {}\nsteps = {}\n",
        format_sig17(fit.rate),
        format_sig17(fit.tau),
        format_sig17(fit.rms_log_residual),
        format_sig17(fit.window.0),
        format_sig17(fit.window.1),
        format_sig17(fit.intercept),
        format_sig17(first_step_rate),
        p.trajectories,
        p.steps,
    );
    let fitted_series: Vec<(f64, f64)> = curve
        .points()
        .iter()
        .map(|q| (q.t, (fit.intercept - fit.rate * q.t).exp()))
        .collect();
    let svg = render_plot(
        &[
            Series::new(
                "ensemble mean",
                curve.points().iter().map(|q| (q.t, q.mean)).collect(),
            ),
            Series::new("log-linear fit", fitted_series),
        ],
        &PlotOptions {
            title: "Stochastic interior ensemble survival".into(),
            log_y: true,
            ..Default::default()
        },
    )?;
    Ok(vec![
        Artifact::text("ensemble.csv", curve.to_csv()),
        Artifact::text("fit.txt", summary),
        Artifact::text("ensemble.svg", svg),
    ])
}

fn time_grid(t_max: f64, points: usize) -> Vec<f64> {
    (0..points)
        .map(|k| t_max * k as f64 / (points - 1) as f64)
        .collect()
}

fn run_fgr(p: &FgrParams) -> Result<Vec<Artifact>> {
    let model = p.model.load()?;
    let formula = fgr_rate(&model, None)?;
    let solved = SolvedModel::new(model)?;
    let times = time_grid(p.t_max, p.curve_points);
    let curve = solved.survival_curve(&times);
    let fit = fit_exponential(&curve, (p.fit_t_min, p.fit_t_max))?;
    let rel = (fit.rate - formula.rate).abs() / formula.rate;

    let rows: Vec<Vec<f64>> = curve
        .points()
        .iter()
        .map(|q| vec![q.t, q.mean, (-formula.rate * q.t).exp()])
        .collect();
    let csv = format_table(&["t", "exact", "golden_rule"], &rows);
    let summary = format!(
        "formula_rate = {}\nresonance_levels = {}\ncoupling_spread = {}\nfitted_rate = {}\nrelative_difference = {}\nwindow = [{}, {}]\nrms_log_residual = {}\n",
        format_sig17(formula.rate),
        formula.diagnostics.resonance_levels.unwrap_or(0),
        format_sig17(formula.diagnostics.coupling_spread.unwrap_or(0.0)),
        format_sig17(fit.rate),
        format_sig17(rel),
        format_sig17(p.fit_t_min),
        format_sig17(p.fit_t_max),
        format_sig17(fit.rms_log_residual),
    );
    let svg = render_plot(
        &[
            Series::new("exact dynamics", rows.iter().map(|r| (r[0], r[1])).collect()),
            Series::new("golden-rule exponential", rows.iter().map(|r| (r[0], r[2])).collect()),
        ],
        &PlotOptions {
            title: "Exact survival against the golden-rule exponential".into(),
            log_y: true,
            ..Default::default()
        },
    )?;
    Ok(vec![
        Artifact::text("survival_compare.csv", csv),
        Artifact::text("summary.txt", summary),
        Artifact::text("survival_compare.svg", svg),
    ])
}

fn run_channels(p: &ChannelsParams) -> Result<Vec<Artifact>> {
    let partition = ChannelPartition::from_model(&p.model);
    let rates = channel_rates(&p.model, &partition)?;
    let total = fgr_rate(&p.model, None)?;
    let sum: f64 = rates.iter().map(|(_, e)| e.rate).sum();
    let additivity_residual = (sum - total.rate).abs();

    let rate_values: Vec<f64> = rates.iter().map(|(_, e)| e.rate).collect();
    let times = time_grid(p.t_max, p.curve_points);
    let mut rows = Vec::with_capacity(times.len());
    let mut eq20_max_dev = 0.0f64;
    for &t in &times {
        let product = crate::continuum::multi_channel_survival(&rate_values, t)?;
        let summed = (-t * sum).exp();
        eq20_max_dev = eq20_max_dev.max((product - summed).abs());
        rows.push(vec![t, product, summed]);
    }
    let csv = format_table(&["t", "product_survival", "summed_rate_survival"], &rows);
    let mut summary = String::new();
    for (label, est) in &rates {
        summary.push_str(&format!("rate[{label}] = {}\n", format_sig17(est.rate)));
    }
    summary.push_str(&format!("rate_total = {}\n", format_sig17(total.rate)));
    summary.push_str(&format!("rate_sum = {}\n", format_sig17(sum)));
    summary.push_str(&format!(
        "additivity_residual = {}\n",
        format_sig17(additivity_residual)
    ));
    summary.push_str(&format!(
        "product_vs_sum_max_deviation = {}\n",
        format_sig17(eq20_max_dev)
    ));
    let svg = render_plot(
        &[
            Series::new("product of channel exponentials", rows.iter().map(|r| (r[0], r[1])).collect()),
            Series::new("summed-rate exponential", rows.iter().map(|r| (r[0], r[2])).collect()),
        ],
        &PlotOptions {
            title: "Two-channel survival".into(),
            log_y: true,
            ..Default::default()
        },
    )?;
    Ok(vec![
        Artifact::text("channels.csv", csv),
        Artifact::text("rates.txt", summary),
        Artifact::text("channels.svg", svg),
    ])
}

fn run_lineshape(p: &LineshapeParams) -> Result<Vec<Artifact>> {
    let model = p.model.load()?;
    let formula = fgr_rate(&model, None)?;
    let hbar_gamma = model.hbar() * formula.rate;
    let solved = SolvedModel::new(model)?;
    let populations = solved.lineshape(p.time)?;
    let fit = fit_lorentzian(&populations)?;

    let rows: Vec<Vec<f64>> = populations
        .iter()
        .map(|&(e, pop)| {
            let de = e - fit.center;
            let hw = fit.fwhm / 2.0;
            vec![e, pop, fit.amplitude * hw * hw / (de * de + hw * hw)]
        })
        .collect();
    let csv = format_table(&["E", "population", "lorentzian_fit"], &rows);
    let summary = format!(
        "time = {}\ncenter = {}\nfwhm = {}\namplitude = {}\nrms_residual = {}\niterations = {}\nhbar_gamma_fgr = {}\nfwhm_over_hbar_gamma = {}\n",
        format_sig17(p.time),
        format_sig17(fit.center),
        format_sig17(fit.fwhm),
        format_sig17(fit.amplitude),
        format_sig17(fit.rms_residual),
        fit.iterations,
        format_sig17(hbar_gamma),
        format_sig17(fit.fwhm / hbar_gamma),
    );
    let svg = render_plot(
        &[
            Series::new("population", rows.iter().map(|r| (r[0], r[1])).collect()),
            Series::new("lorentzian fit", rows.iter().map(|r| (r[0], r[2])).collect()),
        ],
        &PlotOptions {
            title: "Continuum line shape".into(),
            x_label: "E".into(),
            y_label: "population".into(),
            ..Default::default()
        },
    )?;
    Ok(vec![
        Artifact::text("lineshape.csv", csv),
        Artifact::text("fit.txt", summary),
        Artifact::text("lineshape.svg", svg),
    ])
}

fn run_contrast(p: &ContrastParams) -> Result<Vec<Artifact>> {
    let model = p.model.load()?;
    let formula = fgr_rate(&model, None)?;
    let (_, variance) = short_time_coefficients(&model);
    let hbar = model.hbar();
    let solved = SolvedModel::new(model)?;
    let times = time_grid(p.t_max, p.curve_points);
    let rows: Vec<Vec<f64>> = times
        .iter()
        .map(|&t| {
            vec![
                t,
                solved.survival(t),
                (-formula.rate * t).exp(),
                1.0 - variance * t * t / (hbar * hbar),
            ]
        })
        .collect();
    let csv = format_table(&["t", "exact", "exponential", "quadratic"], &rows);
    let svg = render_plot(
        &[
            Series::new("exact dynamics", rows.iter().map(|r| (r[0], r[1])).collect()),
            Series::new("golden-rule exponential", rows.iter().map(|r| (r[0], r[2])).collect()),
            Series::new("short-time quadratic", rows.iter().map(|r| (r[0], r[3])).collect()),
        ],
        &PlotOptions {
            title: "Unitary short-time region against the exponential law".into(),
            ..Default::default()
        },
    )?;
    Ok(vec![
        Artifact::text("contrast.csv", csv),
        Artifact::text("contrast.svg", svg),
    ])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run_in_temp(config: &ExperimentConfig) -> (RunManifest, std::path::PathBuf) {
        let dir = std::env::temp_dir().join(format!(
            "zenodecay-test-{}-{}",
            std::process::id(),
            rand::random::<u64>()
        ));
        let manifest = run_experiment(config, &dir).unwrap();
        (manifest, dir)
    }

    #[test]
    fn qze_experiment_emits_constant_one_survival() {
        let config = parse_config(
            "[experiment]\nexperiment = qze\nseed = 5\nsteps = 100000\npoints = 10\n",
        )
        .unwrap();
        let (manifest, dir) = run_in_temp(&config);
        assert_eq!(manifest.artifacts.len(), 3);
        let csv = std::fs::read_to_string(dir.join("survival.csv")).unwrap();
        let curve = SurvivalCurve::from_csv(&csv).unwrap();
        for p in curve.points() {
            assert!((p.mean - 1.0).abs() < 1e-9, "t={}: {}", p.t, p.mean);
        }
        std::fs::remove_dir_all(dir).ok();
    }

    #[test]
    fn fgr_experiment_reports_rates_within_contract() {
        let config =
            parse_config("[experiment]\nexperiment = fgr\ncurve_points = 200\n").unwrap();
        let (_, dir) = run_in_temp(&config);
        let summary = std::fs::read_to_string(dir.join("summary.txt")).unwrap();
        let get = |key: &str| -> f64 {
            summary
                .lines()
                .find(|l| l.starts_with(key))
                .and_then(|l| l.split('=').nth(1))
                .unwrap()
                .trim()
                .parse()
                .unwrap()
        };
        assert!((get("formula_rate") - 0.063146).abs() < 1e-6);
        assert!(get("relative_difference") < 0.05);
        std::fs::remove_dir_all(dir).ok();
    }

    #[test]
    fn reruns_produce_identical_digests() {
        let config = parse_config(
            "[experiment]\nexperiment = compound\nseed = 3\nn_values = 10,100,1000\n",
        )
        .unwrap();
        let (a, dir_a) = run_in_temp(&config);
        let (b, dir_b) = run_in_temp(&config);
        assert_eq!(a.artifacts, b.artifacts);
        std::fs::remove_dir_all(dir_a).ok();
        std::fs::remove_dir_all(dir_b).ok();
    }

    #[test]
    fn failed_validation_writes_nothing() {
        let dir = std::env::temp_dir().join(format!(
            "zenodecay-test-novalid-{}",
            std::process::id()
        ));
        std::fs::remove_dir_all(&dir).ok();
        // fit window outside the survival support: fit_exponential fails
        let config = parse_config(
            "[experiment]\nexperiment = ensemble\nsteps = 10\ntrajectories = 4\nmode = iid\ngamma = 0\nfit_t_min = 0.9999\nfit_t_max = 1.0\n",
        )
        .unwrap();
        assert!(run_experiment(&config, &dir).is_err());
        assert!(!dir.exists());
    }

    #[test]
    fn channels_experiment_reports_additivity() {
        let config = parse_config(
            "[experiment]\nexperiment = channels\nM = 42\ncurve_points = 20\n",
        )
        .unwrap();
        let (_, dir) = run_in_temp(&config);
        let summary = std::fs::read_to_string(dir.join("rates.txt")).unwrap();
        let residual: f64 = summary
            .lines()
            .find(|l| l.starts_with("additivity_residual"))
            .and_then(|l| l.split('=').nth(1))
            .unwrap()
            .trim()
            .parse()
            .unwrap();
        assert!(residual < 1e-12);
        std::fs::remove_dir_all(dir).ok();
    }

    #[test]
    fn manifest_lists_every_artifact_with_digest() {
        let config = parse_config(
            "[experiment]\nexperiment = contrast\nM = 51\ncurve_points = 30\nt_max = 10\n",
        )
        .unwrap();
        let (manifest, dir) = run_in_temp(&config);
        for record in &manifest.artifacts {
            let bytes = std::fs::read(dir.join(&record.file)).unwrap();
            assert_eq!(sha256_hex(&bytes), record.sha256);
        }
        assert!(dir.join("manifest.json").exists());
        std::fs::remove_dir_all(dir).ok();
    }
}
