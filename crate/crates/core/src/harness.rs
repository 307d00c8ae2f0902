//! Configuration-driven experiment runner.
//!
//! Replicate `i` at radius index `r` uses seed `mix_seed(base_seed, r, i)`
//! (three chained SplitMix64 finalizers), so results do not depend on
//! scheduling. Per-radius statistics merge through exact integer
//! accumulators, which makes every CSV number independent of thread count.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ensembles::{enumerate_lattice_points, EnsembleKind, EnsembleSpec};
use crate::error::{Error, Result};
use crate::lemmas::{run_lemma_suite, LemmaSuiteReport};
use crate::nodal::{build_nesting_tree, label_domains};
use crate::rng::mix_seed;
use crate::sampler::{sample_field, GridSpec};
use crate::stats::{
    boundary_connectivity, fmt_real, write_mu_csv, write_psi_csv, write_stats_csv, Estimate, MonteCarloReport,
    RadiusAccumulator, ReplicateSummary,
};

/// Grid spacing: `"auto"` picks the sampler's resolution rule.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Spacing {
    Fixed(f64),
    Named(String),
}

impl Default for Spacing {
    fn default() -> Self {
        Spacing::Named("auto".into())
    }
}

fn default_dimension() -> usize {
    2
}

fn default_true() -> bool {
    true
}

fn default_lemma_cases() -> u64 {
    10_000
}

fn default_planar_radius() -> f64 {
    64.0
}

/// Flat experiment configuration, read from TOML. Unknown keys are rejected.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// `bargmann-fock`, `random-plane-wave`, `band-limited`,
    /// `arithmetic-random-wave` (or `bf`, `rpw`, `bl`, `arw`).
    pub ensemble: String,
    #[serde(default = "default_dimension")]
    pub dimension: usize,
    pub band_alpha: Option<f64>,
    pub arithmetic_n: Option<u64>,
    pub num_waves: Option<usize>,
    /// Cube half-widths, strictly increasing.
    #[serde(default)]
    pub radii: Vec<f64>,
    #[serde(default)]
    pub spacing: Spacing,
    pub replicates: u64,
    #[serde(default)]
    pub base_seed: u64,
    pub output_dir: Option<PathBuf>,
    #[serde(default = "default_true")]
    pub build_tree: bool,
    /// Only the labeling is computed (no nesting trees).
    #[serde(default)]
    pub percolation_only: bool,
    #[serde(default)]
    pub lemma_suite: bool,
    #[serde(default = "default_lemma_cases")]
    pub lemma_cases: u64,
    /// Worker threads, 0 for all cores.
    #[serde(default)]
    pub threads: usize,
    #[serde(default)]
    pub periodic: bool,
    #[serde(default)]
    pub allow_coarse_grid: bool,
    /// Eigenvalues `n` for the torus sweep.
    #[serde(default)]
    pub arithmetic_n_list: Vec<u64>,
    /// Half-width of the planar reference run in the torus sweep.
    #[serde(default = "default_planar_radius")]
    pub compare_planar_r: f64,
    /// Test hook: `(radius index, replicate)` that fails on purpose.
    #[serde(skip)]
    pub inject_failure: Option<(usize, u64)>,
}

impl ExperimentConfig {
    pub fn new(ensemble: &str, radii: Vec<f64>, replicates: u64) -> Self {
        ExperimentConfig {
            ensemble: ensemble.to_string(),
            dimension: 2,
            band_alpha: None,
            arithmetic_n: None,
            num_waves: None,
            radii,
            spacing: Spacing::default(),
            replicates,
            base_seed: 0,
            output_dir: None,
            build_tree: true,
            percolation_only: false,
            lemma_suite: false,
            lemma_cases: default_lemma_cases(),
            threads: 0,
            periodic: false,
            allow_coarse_grid: false,
            arithmetic_n_list: Vec::new(),
            compare_planar_r: default_planar_radius(),
            inject_failure: None,
        }
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        Self::from_toml_str(&fs::read_to_string(path)?)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    /// Ensemble built from the config; `arithmetic_n` defaults to the first
    /// entry of `arithmetic_n_list`.
    pub fn spec(&self) -> Result<EnsembleSpec> {
        let kind = EnsembleKind::parse(&self.ensemble)?;
        let d = self.dimension;
        let mut spec = match kind {
            EnsembleKind::BargmannFock => EnsembleSpec::bargmann_fock(d),
            EnsembleKind::RandomPlaneWave => EnsembleSpec::random_plane_wave(d),
            EnsembleKind::BandLimited => {
                let alpha = self
                    .band_alpha
                    .ok_or_else(|| Error::Config("band-limited ensemble needs band_alpha".into()))?;
                EnsembleSpec::band_limited(d, alpha)
            }
            EnsembleKind::ArithmeticRandomWave => {
                let n = self
                    .arithmetic_n
                    .or_else(|| self.arithmetic_n_list.first().copied())
                    .ok_or_else(|| Error::Config("arithmetic ensemble needs arithmetic_n".into()))?;
                EnsembleSpec::arithmetic(d, n)
            }
        };
        if let Some(m) = self.num_waves {
            spec = spec.with_num_waves(m);
        }
        spec.validate()?;
        Ok(spec)
    }

    fn fixed_spacing(&self) -> Result<Option<f64>> {
        match &self.spacing {
            Spacing::Fixed(h) => Ok(Some(*h)),
            Spacing::Named(s) if s == "auto" => Ok(None),
            Spacing::Named(s) => Err(Error::Config(format!("spacing must be a number or \"auto\", got {s:?}"))),
        }
    }

    /// Grid at half-width `radius`.
    pub fn grid(&self, spec: &EnsembleSpec, radius: f64) -> Result<GridSpec> {
        let grid = match self.fixed_spacing()? {
            Some(h) => GridSpec::new(spec.dimension, radius, h, self.periodic)?,
            None => GridSpec::auto(spec, radius, self.periodic)?,
        };
        Ok(grid.with_allow_coarse(self.allow_coarse_grid))
    }

    /// Checks everything `run_experiment` needs.
    pub fn validate(&self) -> Result<()> {
        let spec = self.spec()?;
        if self.replicates < 1 {
            return Err(Error::Config("replicates must be at least 1".into()));
        }
        if self.radii.is_empty() {
            return Err(Error::Config("radii must not be empty".into()));
        }
        if self.radii.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::Config("radii must be strictly increasing".into()));
        }
        for &r in &self.radii {
            self.grid(&spec, r)?.check_against(&spec)?;
        }
        Ok(())
    }

    fn tree_enabled(&self) -> bool {
        self.build_tree && !self.percolation_only && self.dimension == 2 && !self.periodic
    }

    fn pool(&self) -> Result<rayon::ThreadPool> {
        rayon::ThreadPoolBuilder::new()
            .num_threads(self.threads)
            .build()
            .map_err(|e| Error::Config(e.to_string()))
    }
}

/// Samples, labels and summarizes one replicate.
pub fn run_replicate(spec: &EnsembleSpec, grid: &GridSpec, seed: u64, build_tree: bool) -> Result<ReplicateSummary> {
    let sample = sample_field(spec, grid, seed)?;
    let labeling = label_domains(&sample);
    let tree = if build_tree {
        let tree = build_nesting_tree(&labeling)?;
        boundary_connectivity(&labeling, Some(&tree))?;
        Some(tree)
    } else {
        None
    };
    Ok(ReplicateSummary::from_labeling(
        &labeling,
        tree.as_ref(),
        sample.zero_perturbations as u64,
    ))
}

/// Runs all replicates on `grid` in the current rayon pool.
fn run_radius(
    spec: &EnsembleSpec,
    grid: &GridSpec,
    radius_index: usize,
    config: &ExperimentConfig,
    build_tree: bool,
) -> Result<RadiusAccumulator> {
    (0..config.replicates)
        .into_par_iter()
        .map(|i| {
            let seed = mix_seed(config.base_seed, radius_index as u64, i);
            let result = if config.inject_failure == Some((radius_index, i)) {
                Err(Error::UnsupportedParameter("injected failure".into()))
            } else {
                run_replicate(spec, grid, seed, build_tree)
            };
            result.map_err(|e| Error::Replicate {
                radius: grid.half_width,
                replicate: i as usize,
                seed,
                source: Box::new(e),
            })
        })
        .try_fold(RadiusAccumulator::default, |mut acc, s| {
            acc.push(&s?);
            Ok(acc)
        })
        .try_reduce(RadiusAccumulator::default, |mut a, b| {
            a.merge(&b);
            Ok(a)
        })
}

#[derive(Serialize)]
struct Manifest<'a> {
    artifact: &'static str,
    version: &'static str,
    started_unix_seconds: u64,
    wall_clock_seconds: f64,
    config: &'a ExperimentConfig,
    #[serde(skip_serializing_if = "Option::is_none")]
    lemma_suite: Option<&'a LemmaSuiteReport>,
}

fn unix_now() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0)
}

fn prepare_output_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    let probe = dir.join(".write-probe");
    fs::write(&probe, b"")?;
    fs::remove_file(&probe)?;
    Ok(())
}

fn write_manifest(
    dir: &Path,
    config: &ExperimentConfig,
    started: u64,
    elapsed: f64,
    lemma: Option<&LemmaSuiteReport>,
) -> Result<()> {
    let manifest = Manifest {
        artifact: env!("CARGO_PKG_NAME"),
        version: env!("CARGO_PKG_VERSION"),
        started_unix_seconds: started,
        wall_clock_seconds: elapsed,
        config,
        lemma_suite: lemma,
    };
    let text = toml::to_string(&manifest).map_err(|e| Error::Config(e.to_string()))?;
    fs::write(dir.join("manifest.toml"), text)?;
    Ok(())
}

/// Result of [`run_experiment`].
#[derive(Clone, Debug)]
pub struct ExperimentOutcome {
    pub report: MonteCarloReport,
    pub lemma_suite: Option<LemmaSuiteReport>,
    /// Directory holding the CSVs and manifest, if one was configured.
    pub output_dir: Option<PathBuf>,
}

/// Runs every radius of the config and writes `stats.csv`, `mu.csv`,
/// `psi.csv` and `manifest.toml`. A failing replicate aborts the run before
/// any file is written.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentOutcome> {
    config.validate()?;
    let spec = config.spec()?;
    if let Some(dir) = &config.output_dir {
        prepare_output_dir(dir)?;
    }
    let started = unix_now();
    let clock = Instant::now();
    let pool = config.pool()?;
    let build_tree = config.tree_enabled();

    let mut radii = Vec::with_capacity(config.radii.len());
    for (ri, &radius) in config.radii.iter().enumerate() {
        let grid = config.grid(&spec, radius)?;
        let acc = pool.install(|| run_radius(&spec, &grid, ri, config, build_tree))?;
        radii.push(acc.report(radius, grid.spacing, spec.dimension, config.base_seed));
    }
    let report = MonteCarloReport::new(spec, config.base_seed, config.periodic, radii);
    let lemma_suite = if config.lemma_suite {
        Some(run_lemma_suite(
            config.lemma_cases,
            config.base_seed,
            config.output_dir.as_ref().map(|d| d.join("reproducers")).as_deref(),
        )?)
    } else {
        None
    };

    if let Some(dir) = &config.output_dir {
        write_stats_csv(&report, &dir.join("stats.csv"))?;
        write_mu_csv(&report, &dir.join("mu.csv"))?;
        write_psi_csv(&report, &dir.join("psi.csv"))?;
        write_manifest(dir, config, started, clock.elapsed().as_secs_f64(), lemma_suite.as_ref())?;
    }
    Ok(ExperimentOutcome {
        report,
        lemma_suite,
        output_dir: config.output_dir.clone(),
    })
}

/// One eigenvalue of the torus sweep.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepEntry {
    pub n: u64,
    /// `r_d(n)`.
    pub multiplicity: usize,
    pub cells_per_axis: usize,
    pub replicates: u64,
    /// Mean nodal domain count on the unit torus.
    pub domains: Estimate,
    /// `N / n^{d/2}`.
    pub ratio: Estimate,
    /// `N / (2 pi sqrt n)^d`: domain density in units where the wavenumber is 1.
    pub scaled_density: Estimate,
    /// `scaled_density / planar c_NS - 1`.
    pub relative_to_planar: Option<f64>,
    /// Replicates per domain count.
    pub domain_histogram: BTreeMap<u64, u64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepReport {
    pub dimension: usize,
    pub entries: Vec<SweepEntry>,
    /// Eigenvalues without lattice representations.
    pub skipped: Vec<u64>,
    /// Planar random plane wave `c_NS` at `planar_radius`.
    pub planar_c_ns: Option<Estimate>,
    pub planar_radius: f64,
}

/// Header of `sweep.csv`.
pub const SWEEP_COLUMNS: &[&str] = &[
    "n",
    "multiplicity",
    "cells_per_axis",
    "replicates",
    "domains",
    "domains_se",
    "ratio",
    "ratio_se",
    "scaled_density",
    "scaled_density_se",
    "planar_c_ns",
    "planar_c_ns_se",
    "relative_to_planar",
];

fn write_sweep_csv(report: &SweepReport, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(SWEEP_COLUMNS)?;
    let (pc, pse) = match &report.planar_c_ns {
        Some(e) => (fmt_real(e.value), fmt_real(e.se)),
        None => (String::new(), String::new()),
    };
    for e in &report.entries {
        w.write_record([
            e.n.to_string(),
            e.multiplicity.to_string(),
            e.cells_per_axis.to_string(),
            e.replicates.to_string(),
            fmt_real(e.domains.value),
            fmt_real(e.domains.se),
            fmt_real(e.ratio.value),
            fmt_real(e.ratio.se),
            fmt_real(e.scaled_density.value),
            fmt_real(e.scaled_density.se),
            pc.clone(),
            pse.clone(),
            e.relative_to_planar.map(fmt_real).unwrap_or_default(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Arithmetic random waves on the unit torus for each `n` of
/// `arithmetic_n_list`, compared with a planar random plane wave run at
/// half-width `compare_planar_r` (skipped when it is 0).
pub fn sweep_manifold(config: &ExperimentConfig) -> Result<SweepReport> {
    let d = config.dimension;
    if d != 2 && d != 3 {
        return Err(Error::UnsupportedParameter(format!("dimension {d}")));
    }
    if config.arithmetic_n_list.is_empty() {
        return Err(Error::Config("arithmetic_n_list must not be empty".into()));
    }
    if config.replicates < 1 {
        return Err(Error::Config("replicates must be at least 1".into()));
    }
    if let Some(dir) = &config.output_dir {
        prepare_output_dir(dir)?;
    }
    let started = unix_now();
    let clock = Instant::now();
    let pool = config.pool()?;

    let planar_c_ns = if config.compare_planar_r > 0.0 {
        let mut planar = config.clone();
        planar.ensemble = "random-plane-wave".into();
        planar.periodic = false;
        planar.spacing = Spacing::default();
        planar.num_waves = None;
        let spec = planar.spec()?;
        let grid = planar.grid(&spec, config.compare_planar_r)?;
        let idx = config.arithmetic_n_list.len();
        let acc = pool.install(|| run_radius(&spec, &grid, idx, &planar, false))?;
        Some(acc.report(grid.half_width, grid.spacing, d, config.base_seed).c_ns)
    } else {
        None
    };

    let mut entries = Vec::new();
    let mut skipped = Vec::new();
    for (ni, &n) in config.arithmetic_n_list.iter().enumerate() {
        let set = match enumerate_lattice_points(n, d) {
            Ok(set) => set,
            Err(Error::NoRepresentation { .. }) => {
                eprintln!("warning: n = {n} is not a sum of {d} squares, skipped");
                skipped.push(n);
                continue;
            }
            Err(e) => return Err(e),
        };
        let mut torus = config.clone();
        torus.ensemble = "arithmetic-random-wave".into();
        torus.arithmetic_n = Some(n);
        torus.periodic = true;
        let spec = torus.spec()?;
        let grid = torus.grid(&spec, 0.5)?;
        let acc = pool.install(|| run_radius(&spec, &grid, ni, &torus, false))?;
        let domains = acc.moments.mean(crate::stats::Var::Total, 1.0);
        let nd = (n as f64).powf(d as f64 / 2.0);
        let kd = (2.0 * std::f64::consts::PI * (n as f64).sqrt()).powi(d as i32);
        let scaled_density = Estimate::new(domains.value / kd, domains.se / kd);
        entries.push(SweepEntry {
            n,
            multiplicity: set.multiplicity(),
            cells_per_axis: grid.cells_per_axis(),
            replicates: acc.replicates(),
            domains,
            ratio: Estimate::new(domains.value / nd, domains.se / nd),
            scaled_density,
            relative_to_planar: planar_c_ns.map(|p| scaled_density.value / p.value - 1.0),
            domain_histogram: acc.total_domain_counts.clone(),
        });
    }
    let report = SweepReport {
        dimension: d,
        entries,
        skipped,
        planar_c_ns,
        planar_radius: config.compare_planar_r,
    };
    if let Some(dir) = &config.output_dir {
        write_sweep_csv(&report, &dir.join("sweep.csv"))?;
        write_manifest(dir, config, started, clock.elapsed().as_secs_f64(), None)?;
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_flat_config() {
        let text = r#"
            ensemble = "bf"
            radii = [4.0, 8.0]
            spacing = 0.25
            replicates = 3
            base_seed = 9
        "#;
        let c = ExperimentConfig::from_toml_str(text).unwrap();
        assert_eq!(c.spacing, Spacing::Fixed(0.25));
        assert_eq!(c.dimension, 2);
        c.validate().unwrap();
        let auto = ExperimentConfig::from_toml_str("ensemble = \"rpw\"\nradii = [8.0]\nreplicates = 1\nspacing = \"auto\"").unwrap();
        assert_eq!(auto.spacing, Spacing::default());
        auto.validate().unwrap();
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let err = ExperimentConfig::from_toml_str("ensemble = \"bf\"\nreplicates = 1\nradii=[1.0]\ncolour = 3").unwrap_err();
        assert!(matches!(err, Error::Config(_)));
    }

    #[test]
    fn invalid_configs() {
        let mut c = ExperimentConfig::new("bf", vec![8.0, 4.0], 2);
        assert!(c.validate().is_err());
        c.radii = vec![4.0];
        c.replicates = 0;
        assert!(c.validate().is_err());
        c.replicates = 1;
        c.spacing = Spacing::Named("fine".into());
        assert!(c.validate().is_err());
        c.spacing = Spacing::Fixed(0.25);
        c.validate().unwrap();
        c.ensemble = "band-limited".into();
        assert!(c.validate().is_err());
    }

    #[test]
    fn config_round_trips() {
        let mut c = ExperimentConfig::new("arw", vec![0.5], 4);
        c.arithmetic_n = Some(5);
        c.periodic = true;
        c.spacing = Spacing::Fixed(1.0 / 64.0);
        let back = ExperimentConfig::from_toml_str(&c.to_toml_string().unwrap()).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn small_run_is_exact() {
        let mut c = ExperimentConfig::new("bf", vec![4.0, 8.0], 6);
        c.spacing = Spacing::Fixed(0.25);
        c.threads = 2;
        let out = run_experiment(&c).unwrap();
        assert!(out.report.identities_exact());
        assert_eq!(out.report.radii.len(), 2);
        assert_eq!(out.report.radii[1].replicates, 6);
    }
}
