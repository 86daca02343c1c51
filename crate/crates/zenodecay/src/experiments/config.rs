//! Experiment configuration files: the key-value syntax of model files with
//! an `[experiment]` header line. Parsing is strict — unknown keys, bad
//! numbers, and precondition violations are all collected with line numbers
//! and no partial config is ever returned.

use crate::continuum::DiscretizedContinuumModel;
use crate::ensemble::{EnsembleMode, UpdatePolicy};
use crate::error::{Error, ParseIssue, Result};
use num_complex::Complex64 as C64;
use std::collections::{BTreeMap, BTreeSet};
use std::path::PathBuf;

/// The experiments the runner knows how to dispatch.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExperimentKind {
    Qze,
    Compound,
    Ensemble,
    Fgr,
    Channels,
    Lineshape,
    Contrast,
}

impl ExperimentKind {
    pub fn name(&self) -> &'static str {
        match self {
            ExperimentKind::Qze => "qze",
            ExperimentKind::Compound => "compound",
            ExperimentKind::Ensemble => "ensemble",
            ExperimentKind::Fgr => "fgr",
            ExperimentKind::Channels => "channels",
            ExperimentKind::Lineshape => "lineshape",
            ExperimentKind::Contrast => "contrast",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Some(match name {
            "qze" => ExperimentKind::Qze,
            "compound" => ExperimentKind::Compound,
            "ensemble" => ExperimentKind::Ensemble,
            "fgr" => ExperimentKind::Fgr,
            "channels" => ExperimentKind::Channels,
            "lineshape" => ExperimentKind::Lineshape,
            "contrast" => ExperimentKind::Contrast,
            _ => return None,
        })
    }
}

/// A continuum model given inline (already validated) or by file reference
/// (loaded by the runner, so parsing itself never touches the filesystem).
#[derive(Debug, Clone, PartialEq)]
pub enum ModelSpec {
    Inline(DiscretizedContinuumModel),
    File(PathBuf),
}

impl ModelSpec {
    pub fn load(&self) -> Result<DiscretizedContinuumModel> {
        match self {
            ModelSpec::Inline(model) => Ok(model.clone()),
            ModelSpec::File(path) => {
                let text = std::fs::read_to_string(path)?;
                crate::continuum::parse_model_file(&text)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct QzeParams {
    pub dim: usize,
    pub rank: usize,
    pub steps: usize,
    pub total_time: f64,
    pub points: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompoundParams {
    pub g: f64,
    pub total_time: f64,
    pub n_values: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleParams {
    pub dim: usize,
    pub rank: usize,
    pub mode: EnsembleMode,
    pub gamma: f64,
    pub update: UpdatePolicy,
    pub steps: usize,
    pub total_time: f64,
    pub trajectories: usize,
    pub fit_t_min: f64,
    pub fit_t_max: f64,
    /// Scale of a seeded random Hermitian Hamiltonian; 0 means H = 0.
    pub h_scale: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FgrParams {
    pub model: ModelSpec,
    pub t_max: f64,
    pub curve_points: usize,
    pub fit_t_min: f64,
    pub fit_t_max: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChannelsParams {
    pub model: DiscretizedContinuumModel,
    pub v_k: f64,
    pub v_l: f64,
    pub t_max: f64,
    pub curve_points: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LineshapeParams {
    pub model: ModelSpec,
    pub time: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ContrastParams {
    pub model: ModelSpec,
    pub t_max: f64,
    pub curve_points: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ExperimentParams {
    Qze(QzeParams),
    Compound(CompoundParams),
    Ensemble(EnsembleParams),
    Fgr(FgrParams),
    Channels(ChannelsParams),
    Lineshape(LineshapeParams),
    Contrast(ContrastParams),
}

/// A fully validated experiment description.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    pub seed: u64,
    pub output_dir: Option<PathBuf>,
    pub params: ExperimentParams,
    /// Every effective key=value pair, defaults included.
    pub echo: BTreeMap<String, String>,
}

impl ExperimentConfig {
    /// Apply CLI overrides and refresh the echoed key set.
    pub fn with_overrides(mut self, seed: Option<u64>, output_dir: Option<PathBuf>) -> Self {
        if let Some(s) = seed {
            self.seed = s;
        }
        if let Some(d) = output_dir {
            self.output_dir = Some(d);
        }
        self.echo = build_echo(&self);
        self
    }
}

/// Raw `key = value` pairs with line attribution and strict consumption.
struct KeyBag {
    entries: BTreeMap<String, (usize, String)>,
    consumed: BTreeSet<String>,
    issues: Vec<ParseIssue>,
}

impl KeyBag {
    fn issue(&mut self, line: usize, message: impl Into<String>) {
        self.issues.push(ParseIssue {
            line,
            message: message.into(),
        });
    }

    fn line_of(&self, key: &str) -> usize {
        self.entries.get(key).map(|(l, _)| *l).unwrap_or(1)
    }

    fn raw(&mut self, key: &str) -> Option<(usize, String)> {
        self.consumed.insert(key.to_string());
        self.entries.get(key).cloned()
    }

    fn get_string(&mut self, key: &str, default: &str) -> String {
        match self.raw(key) {
            Some((_, v)) => v,
            None => default.to_string(),
        }
    }

    fn get_f64(&mut self, key: &str, default: f64) -> f64 {
        match self.raw(key) {
            None => default,
            Some((line, v)) => match v.parse::<f64>() {
                Ok(x) if x.is_finite() => x,
                Ok(x) => {
                    self.issue(line, format!("{key} must be finite, got {x}"));
                    default
                }
                Err(e) => {
                    self.issue(line, format!("bad number for {key}: {v:?} ({e})"));
                    default
                }
            },
        }
    }

    fn get_usize(&mut self, key: &str, default: usize) -> usize {
        match self.raw(key) {
            None => default,
            Some((line, v)) => match v.parse::<usize>() {
                Ok(x) => x,
                Err(e) => {
                    self.issue(line, format!("bad value for {key}: {v:?} ({e})"));
                    default
                }
            },
        }
    }

    fn get_u64(&mut self, key: &str, default: u64) -> u64 {
        match self.raw(key) {
            None => default,
            Some((line, v)) => match v.parse::<u64>() {
                Ok(x) => x,
                Err(e) => {
                    self.issue(line, format!("bad value for {key}: {v:?} ({e})"));
                    default
                }
            },
        }
    }

    fn get_usize_list(&mut self, key: &str, default: &[usize]) -> Vec<usize> {
        match self.raw(key) {
            None => default.to_vec(),
            Some((line, v)) => {
                let mut out = Vec::new();
                for part in v.split(',') {
                    match part.trim().parse::<usize>() {
                        Ok(x) => out.push(x),
                        Err(e) => {
                            self.issue(line, format!("bad entry in {key}: {part:?} ({e})"));
                            return default.to_vec();
                        }
                    }
                }
                out
            }
        }
    }

    fn check_unknown(&mut self) {
        let unknown: Vec<(usize, String)> = self
            .entries
            .iter()
            .filter(|(k, _)| !self.consumed.contains(*k))
            .map(|(k, (line, _))| (*line, k.clone()))
            .collect();
        for (line, key) in unknown {
            self.issue(line, format!("unknown key {key:?} for this experiment"));
        }
    }
}

/// Parse and fully validate a config. Returns either the config or every
/// problem found, each with its line number.
pub fn parse_config(text: &str) -> Result<ExperimentConfig> {
    let mut issues = Vec::new();
    let mut entries: BTreeMap<String, (usize, String)> = BTreeMap::new();
    let mut saw_header = false;
    for (idx, raw) in text.lines().enumerate() {
        let lineno = idx + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        if !saw_header {
            if line == "[experiment]" {
                saw_header = true;
                continue;
            }
            issues.push(ParseIssue {
                line: lineno,
                message: format!("expected `[experiment]` header, got {line:?}"),
            });
            saw_header = true; // keep collecting further issues
            // fall through to parse the line as a key anyway
        }
        if line == "[experiment]" {
            issues.push(ParseIssue {
                line: lineno,
                message: "duplicate `[experiment]` header".into(),
            });
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            issues.push(ParseIssue {
                line: lineno,
                message: format!("expected `key = value`, got {line:?}"),
            });
            continue;
        };
        let key = key.trim().to_string();
        let value = value.trim().to_string();
        if entries.contains_key(&key) {
            issues.push(ParseIssue {
                line: lineno,
                message: format!("duplicate key {key:?}"),
            });
            continue;
        }
        entries.insert(key, (lineno, value));
    }
    if text.lines().all(|l| l.split('#').next().unwrap_or("").trim().is_empty()) {
        issues.push(ParseIssue {
            line: 1,
            message: "empty config".into(),
        });
    }

    let mut bag = KeyBag {
        entries,
        consumed: BTreeSet::new(),
        issues,
    };

    let experiment_name = bag.get_string("experiment", "");
    let kind = match ExperimentKind::from_name(&experiment_name) {
        Some(k) => k,
        None => {
            let line = bag.line_of("experiment");
            if experiment_name.is_empty() {
                bag.issue(line, "missing required key `experiment`");
            } else {
                bag.issue(line, format!("unknown experiment {experiment_name:?}"));
            }
            bag.check_unknown();
            return Err(Error::Parse(bag.issues));
        }
    };
    let seed = bag.get_u64("seed", 0);
    let output_dir = bag.raw("output_dir").map(|(_, v)| PathBuf::from(v));

    let params = match kind {
        ExperimentKind::Qze => parse_qze(&mut bag),
        ExperimentKind::Compound => parse_compound(&mut bag),
        ExperimentKind::Ensemble => parse_ensemble(&mut bag),
        ExperimentKind::Fgr => parse_fgr(&mut bag),
        ExperimentKind::Channels => parse_channels(&mut bag),
        ExperimentKind::Lineshape => parse_lineshape(&mut bag),
        ExperimentKind::Contrast => parse_contrast(&mut bag),
    };
    bag.check_unknown();
    if !bag.issues.is_empty() {
        return Err(Error::Parse(bag.issues));
    }
    let params = params.expect("no issues implies params were built");
    let mut config = ExperimentConfig {
        experiment: kind,
        seed,
        output_dir,
        params,
        echo: BTreeMap::new(),
    };
    config.echo = build_echo(&config);
    Ok(config)
}

fn parse_qze(bag: &mut KeyBag) -> Option<ExperimentParams> {
    let dim = bag.get_usize("dim", 8);
    let rank = bag.get_usize("rank", (dim / 2).max(1));
    let steps = bag.get_usize("steps", 1_000_000);
    let total_time = bag.get_f64("total_time", 10.0);
    let points = bag.get_usize("points", 50);
    if dim < 2 {
        bag.issue(bag.line_of("dim"), format!("dim must be at least 2, got {dim}"));
    }
    if rank == 0 || rank >= dim {
        bag.issue(
            bag.line_of("rank"),
            format!("rank must satisfy 0 < rank < dim, got {rank} at dim {dim}"),
        );
    }
    if steps == 0 {
        bag.issue(bag.line_of("steps"), "steps must be positive");
    }
    if !(total_time > 0.0) {
        bag.issue(bag.line_of("total_time"), "total_time must be positive");
    }
    if points < 2 {
        bag.issue(bag.line_of("points"), "points must be at least 2");
    }
    if !bag.issues.is_empty() {
        return None;
    }
    Some(ExperimentParams::Qze(QzeParams {
        dim,
        rank,
        steps,
        total_time,
        points,
    }))
}

fn parse_compound(bag: &mut KeyBag) -> Option<ExperimentParams> {
    let g = bag.get_f64("g", 0.25);
    let total_time = bag.get_f64("total_time", 4.0);
    let n_values = bag.get_usize_list("n_values", &[100, 10_000, 1_000_000]);
    if !(g > 0.0) {
        bag.issue(bag.line_of("g"), format!("g must be positive, got {g}"));
    }
    if !(total_time > 0.0) {
        bag.issue(bag.line_of("total_time"), "total_time must be positive");
    }
    if n_values.is_empty() || n_values.iter().any(|&n| n == 0) {
        bag.issue(bag.line_of("n_values"), "n_values must be positive integers");
    } else if n_values.windows(2).any(|w| w[0] >= w[1]) {
        bag.issue(bag.line_of("n_values"), "n_values must be strictly ascending");
    }
    if !bag.issues.is_empty() {
        return None;
    }
    Some(ExperimentParams::Compound(CompoundParams {
        g,
        total_time,
        n_values,
    }))
}

fn parse_ensemble(bag: &mut KeyBag) -> Option<ExperimentParams> {
    let dim = bag.get_usize("dim", 2);
    let rank = bag.get_usize("rank", 1);
    let mode_name = bag.get_string("mode", "drift");
    let gamma = bag.get_f64("gamma", if mode_name == "iid" { 0.0 } else { 0.2 });
    let update_name = bag.get_string("update", "luders");
    let steps = bag.get_usize("steps", 10_000);
    let total_time = bag.get_f64("total_time", 1.0);
    let trajectories = bag.get_usize("trajectories", 2_000);
    let fit_t_min = bag.get_f64("fit_t_min", 0.05 * total_time);
    let fit_t_max = bag.get_f64("fit_t_max", total_time);
    let h_scale = bag.get_f64("h_scale", 0.0);

    let mode = match mode_name.as_str() {
        "iid" => Some(EnsembleMode::Iid),
        "drift" => Some(EnsembleMode::Drift),
        other => {
            bag.issue(
                bag.line_of("mode"),
                format!("mode must be `iid` or `drift`, got {other:?}"),
            );
            None
        }
    };
    let update = match update_name.as_str() {
        "luders" => Some(UpdatePolicy::Luders),
        "resample" => Some(UpdatePolicy::Resample),
        other => {
            bag.issue(
                bag.line_of("update"),
                format!("update must be `luders` or `resample`, got {other:?}"),
            );
            None
        }
    };
    if rank == 0 || rank >= dim {
        bag.issue(
            bag.line_of("rank"),
            format!("rank must satisfy 0 < rank < dim, got {rank} at dim {dim}"),
        );
    }
    if !(gamma >= 0.0) {
        bag.issue(bag.line_of("gamma"), "gamma must be non-negative");
    }
    if mode == Some(EnsembleMode::Iid) && gamma != 0.0 {
        bag.issue(bag.line_of("gamma"), "gamma only applies to drift mode");
    }
    if steps == 0 {
        bag.issue(bag.line_of("steps"), "steps must be positive");
    }
    if !(total_time > 0.0) {
        bag.issue(bag.line_of("total_time"), "total_time must be positive");
    }
    if trajectories < 2 {
        bag.issue(bag.line_of("trajectories"), "need at least 2 trajectories");
    }
    if !(fit_t_min >= 0.0) || fit_t_max <= fit_t_min {
        bag.issue(
            bag.line_of("fit_t_max"),
            "fit window must satisfy 0 <= fit_t_min < fit_t_max",
        );
    }
    if !(h_scale >= 0.0) {
        bag.issue(bag.line_of("h_scale"), "h_scale must be non-negative");
    }
    if !bag.issues.is_empty() {
        return None;
    }
    Some(ExperimentParams::Ensemble(EnsembleParams {
        dim,
        rank,
        mode: mode.expect("validated"),
        gamma,
        update: update.expect("validated"),
        steps,
        total_time,
        trajectories,
        fit_t_min,
        fit_t_max,
        h_scale,
    }))
}

/// Inline model keys shared by fgr/lineshape/contrast.
fn parse_model_spec(bag: &mut KeyBag, default_levels: usize, default_coupling: f64) -> Option<ModelSpec> {
    let has_inline = ["M", "W", "E_i", "hbar", "coupling"]
        .iter()
        .any(|k| bag.entries.contains_key(*k));
    let model_file = bag.raw("model_file");
    if let Some((line, path)) = model_file {
        if has_inline {
            bag.issue(
                line,
                "model_file replaces the inline model keys (M, W, E_i, hbar, coupling)",
            );
            // still consume them so they are not reported twice
        }
        for k in ["M", "W", "E_i", "hbar", "coupling"] {
            bag.raw(k);
        }
        return Some(ModelSpec::File(PathBuf::from(path)));
    }
    let levels = bag.get_usize("M", default_levels);
    let band_width = bag.get_f64("W", 2.0);
    let bound_energy = bag.get_f64("E_i", 0.0);
    let hbar = bag.get_f64("hbar", 1.0);
    let coupling = bag.get_f64("coupling", default_coupling);
    match DiscretizedContinuumModel::uniform(bound_energy, band_width, levels, coupling, hbar) {
        Ok(model) => Some(ModelSpec::Inline(model)),
        Err(e) => {
            let line = ["M", "W", "E_i", "hbar", "coupling"]
                .iter()
                .find(|k| bag.entries.contains_key(**k))
                .map(|k| bag.line_of(k))
                .unwrap_or(1);
            bag.issue(line, e.to_string());
            None
        }
    }
}

fn parse_fgr(bag: &mut KeyBag) -> Option<ExperimentParams> {
    let model = parse_model_spec(bag, 201, 0.01);
    let t_max = bag.get_f64("t_max", 40.0);
    let curve_points = bag.get_usize("curve_points", 400);
    let fit_t_min = bag.get_f64("fit_t_min", 5.0);
    let fit_t_max = bag.get_f64("fit_t_max", 40.0);
    if !(t_max > 0.0) {
        bag.issue(bag.line_of("t_max"), "t_max must be positive");
    }
    if curve_points < 4 {
        bag.issue(bag.line_of("curve_points"), "curve_points must be at least 4");
    }
    if !(fit_t_min >= 0.0) || fit_t_max <= fit_t_min || fit_t_max > t_max {
        bag.issue(
            bag.line_of("fit_t_max"),
            "fit window must satisfy 0 <= fit_t_min < fit_t_max <= t_max",
        );
    }
    if !bag.issues.is_empty() {
        return None;
    }
    Some(ExperimentParams::Fgr(FgrParams {
        model: model.expect("validated"),
        t_max,
        curve_points,
        fit_t_min,
        fit_t_max,
    }))
}

fn parse_channels(bag: &mut KeyBag) -> Option<ExperimentParams> {
    let levels = bag.get_usize("M", 402);
    let band_width = bag.get_f64("W", 2.0);
    let bound_energy = bag.get_f64("E_i", 0.0);
    let hbar = bag.get_f64("hbar", 1.0);
    let v_k = bag.get_f64("v_k", 0.01);
    let v_l = bag.get_f64("v_l", 0.02);
    let t_max = bag.get_f64("t_max", 40.0);
    let curve_points = bag.get_usize("curve_points", 200);
    if levels < 2 {
        bag.issue(bag.line_of("M"), "channels experiment needs at least 2 levels");
    }
    if !(t_max > 0.0) {
        bag.issue(bag.line_of("t_max"), "t_max must be positive");
    }
    if curve_points < 2 {
        bag.issue(bag.line_of("curve_points"), "curve_points must be at least 2");
    }
    if !bag.issues.is_empty() {
        return None;
    }
    // interleaved two-channel band: even levels couple through k, odd through l
    let couplings: Vec<C64> = (0..levels)
        .map(|m| {
            if m % 2 == 0 {
                C64::new(v_k, 0.0)
            } else {
                C64::new(v_l, 0.0)
            }
        })
        .collect();
    let labels: Vec<String> = (0..levels)
        .map(|m| if m % 2 == 0 { "k".into() } else { "l".into() })
        .collect();
    match DiscretizedContinuumModel::new(bound_energy, band_width, couplings, labels, hbar) {
        Ok(model) => Some(ExperimentParams::Channels(ChannelsParams {
            model,
            v_k,
            v_l,
            t_max,
            curve_points,
        })),
        Err(e) => {
            bag.issue(1, e.to_string());
            None
        }
    }
}

fn parse_lineshape(bag: &mut KeyBag) -> Option<ExperimentParams> {
    let model = parse_model_spec(bag, 201, 0.01);
    let time = bag.get_f64("time", 60.0);
    if !(time >= 0.0) {
        bag.issue(bag.line_of("time"), "time must be non-negative");
    }
    if !bag.issues.is_empty() {
        return None;
    }
    Some(ExperimentParams::Lineshape(LineshapeParams {
        model: model.expect("validated"),
        time,
    }))
}

fn parse_contrast(bag: &mut KeyBag) -> Option<ExperimentParams> {
    let model = parse_model_spec(bag, 201, 0.01);
    let t_max = bag.get_f64("t_max", 40.0);
    let curve_points = bag.get_usize("curve_points", 400);
    if !(t_max > 0.0) {
        bag.issue(bag.line_of("t_max"), "t_max must be positive");
    }
    if curve_points < 2 {
        bag.issue(bag.line_of("curve_points"), "curve_points must be at least 2");
    }
    if !bag.issues.is_empty() {
        return None;
    }
    Some(ExperimentParams::Contrast(ContrastParams {
        model: model.expect("validated"),
        t_max,
        curve_points,
    }))
}

fn model_echo(echo: &mut BTreeMap<String, String>, spec: &ModelSpec) {
    match spec {
        ModelSpec::File(path) => {
            echo.insert("model_file".into(), path.display().to_string());
        }
        ModelSpec::Inline(model) => {
            echo.insert("M".into(), model.levels().to_string());
            echo.insert("W".into(), format!("{}", model.band_width()));
            echo.insert("E_i".into(), format!("{}", model.bound_energy()));
            echo.insert("hbar".into(), format!("{}", model.hbar()));
            echo.insert("coupling".into(), format!("{}", model.couplings()[0].re));
        }
    }
}

fn build_echo(config: &ExperimentConfig) -> BTreeMap<String, String> {
    let mut echo = BTreeMap::new();
    echo.insert("experiment".into(), config.experiment.name().to_string());
    echo.insert("seed".into(), config.seed.to_string());
    if let Some(dir) = &config.output_dir {
        echo.insert("output_dir".into(), dir.display().to_string());
    }
    match &config.params {
        ExperimentParams::Qze(p) => {
            echo.insert("dim".into(), p.dim.to_string());
            echo.insert("rank".into(), p.rank.to_string());
            echo.insert("steps".into(), p.steps.to_string());
            echo.insert("total_time".into(), format!("{}", p.total_time));
            echo.insert("points".into(), p.points.to_string());
        }
        ExperimentParams::Compound(p) => {
            echo.insert("g".into(), format!("{}", p.g));
            echo.insert("total_time".into(), format!("{}", p.total_time));
            echo.insert(
                "n_values".into(),
                p.n_values
                    .iter()
                    .map(|n| n.to_string())
                    .collect::<Vec<_>>()
                    .join(","),
            );
        }
        ExperimentParams::Ensemble(p) => {
            echo.insert("dim".into(), p.dim.to_string());
            echo.insert("rank".into(), p.rank.to_string());
            echo.insert(
                "mode".into(),
                match p.mode {
                    EnsembleMode::Iid => "iid".into(),
                    EnsembleMode::Drift => "drift".into(),
                },
            );
            echo.insert("gamma".into(), format!("{}", p.gamma));
            echo.insert(
                "update".into(),
                match p.update {
                    UpdatePolicy::Luders => "luders".into(),
                    UpdatePolicy::Resample => "resample".into(),
                },
            );
            echo.insert("steps".into(), p.steps.to_string());
            echo.insert("total_time".into(), format!("{}", p.total_time));
            echo.insert("trajectories".into(), p.trajectories.to_string());
            echo.insert("fit_t_min".into(), format!("{}", p.fit_t_min));
            echo.insert("fit_t_max".into(), format!("{}", p.fit_t_max));
            echo.insert("h_scale".into(), format!("{}", p.h_scale));
        }
        ExperimentParams::Fgr(p) => {
            model_echo(&mut echo, &p.model);
            echo.insert("t_max".into(), format!("{}", p.t_max));
            echo.insert("curve_points".into(), p.curve_points.to_string());
            echo.insert("fit_t_min".into(), format!("{}", p.fit_t_min));
            echo.insert("fit_t_max".into(), format!("{}", p.fit_t_max));
        }
        ExperimentParams::Channels(p) => {
            echo.insert("M".into(), p.model.levels().to_string());
            echo.insert("W".into(), format!("{}", p.model.band_width()));
            echo.insert("E_i".into(), format!("{}", p.model.bound_energy()));
            echo.insert("hbar".into(), format!("{}", p.model.hbar()));
            echo.insert("v_k".into(), format!("{}", p.v_k));
            echo.insert("v_l".into(), format!("{}", p.v_l));
            echo.insert("t_max".into(), format!("{}", p.t_max));
            echo.insert("curve_points".into(), p.curve_points.to_string());
        }
        ExperimentParams::Lineshape(p) => {
            model_echo(&mut echo, &p.model);
            echo.insert("time".into(), format!("{}", p.time));
        }
        ExperimentParams::Contrast(p) => {
            model_echo(&mut echo, &p.model);
            echo.insert("t_max".into(), format!("{}", p.t_max));
            echo.insert("curve_points".into(), p.curve_points.to_string());
        }
    }
    echo
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_qze_config_gets_defaults() {
        let config = parse_config("[experiment]\nexperiment = qze\n").unwrap();
        assert_eq!(config.experiment, ExperimentKind::Qze);
        assert_eq!(config.seed, 0);
        match &config.params {
            ExperimentParams::Qze(p) => {
                assert_eq!(p.dim, 8);
                assert_eq!(p.rank, 4);
                assert_eq!(p.steps, 1_000_000);
                assert_eq!(p.total_time, 10.0);
            }
            other => panic!("unexpected params {other:?}"),
        }
        assert_eq!(config.echo["dim"], "8");
        assert_eq!(config.echo["experiment"], "qze");
    }

    #[test]
    fn misspelled_key_is_reported_with_line() {
        let text = "[experiment]\nexperiment = qze\nstepz = 10\n";
        match parse_config(text).unwrap_err() {
            Error::Parse(issues) => {
                assert_eq!(issues.len(), 1);
                assert_eq!(issues[0].line, 3);
                assert!(issues[0].message.contains("stepz"));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn negative_level_count_is_a_precondition_violation() {
        let text = "[experiment]\nexperiment = fgr\nM = -5\n";
        match parse_config(text).unwrap_err() {
            Error::Parse(issues) => {
                assert!(issues.iter().any(|i| i.line == 3 && i.message.contains("M")));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn unknown_experiment_is_rejected() {
        let text = "[experiment]\nexperiment = warp\n";
        match parse_config(text).unwrap_err() {
            Error::Parse(issues) => {
                assert!(issues[0].message.contains("warp"));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn missing_header_and_experiment_are_reported() {
        match parse_config("experiment = qze\n").unwrap_err() {
            Error::Parse(issues) => {
                assert!(issues.iter().any(|i| i.message.contains("header")));
            }
            other => panic!("unexpected {other:?}"),
        }
        match parse_config("[experiment]\nseed = 3\n").unwrap_err() {
            Error::Parse(issues) => {
                assert!(issues.iter().any(|i| i.message.contains("experiment")));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn multiple_issues_are_collected() {
        let text = "[experiment]\nexperiment = ensemble\nmode = warp\ngamma = -1\nwhat = 3\n";
        match parse_config(text).unwrap_err() {
            Error::Parse(issues) => {
                assert!(issues.len() >= 3, "issues: {issues:?}");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn duplicate_keys_are_rejected() {
        let text = "[experiment]\nexperiment = qze\ndim = 4\ndim = 6\n";
        match parse_config(text).unwrap_err() {
            Error::Parse(issues) => {
                assert!(issues.iter().any(|i| i.line == 4 && i.message.contains("duplicate")));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn ensemble_round_numbers_parse() {
        let text = "\
[experiment]
experiment = ensemble
seed = 11
dim = 2
rank = 1
mode = drift
gamma = 0.2
update = luders
steps = 1000
total_time = 1.0
trajectories = 500
";
        let config = parse_config(text).unwrap();
        match &config.params {
            ExperimentParams::Ensemble(p) => {
                assert_eq!(p.gamma, 0.2);
                assert_eq!(p.fit_t_min, 0.05);
                assert_eq!(p.fit_t_max, 1.0);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn model_file_conflicts_with_inline_keys() {
        let text = "[experiment]\nexperiment = fgr\nmodel_file = m.txt\nM = 10\n";
        assert!(parse_config(text).is_err());
        let ok = parse_config("[experiment]\nexperiment = fgr\nmodel_file = m.txt\n").unwrap();
        match &ok.params {
            ExperimentParams::Fgr(p) => {
                assert_eq!(p.model, ModelSpec::File(PathBuf::from("m.txt")));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn never_panics_on_junk() {
        for junk in [
            "",
            "[experiment]",
            "[experiment]\n= =\n",
            "[experiment]\nexperiment = compound\nn_values = 5,4\n",
            "[experiment]\nexperiment = compound\nn_values = a,b\n",
            "[experiment]\n[experiment]\nexperiment = qze\n",
            "\u{0}",
        ] {
            let _ = parse_config(junk);
        }
    }
}
