use std::fs;
use std::path::Path;

use nodal_core::harness::{run_experiment, sweep_manifold, ExperimentConfig, Spacing};
use nodal_core::stats::{accumulate, MU_COLUMNS, PSI_COLUMNS, STATS_COLUMNS};
use nodal_core::Error;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn bf_config(radii: Vec<f64>, reps: u64) -> ExperimentConfig {
    let mut c = ExperimentConfig::new("bargmann-fock", radii, reps);
    c.spacing = Spacing::Fixed(0.25);
    c.base_seed = 42;
    c
}

fn read(dir: &Path, name: &str) -> String {
    fs::read_to_string(dir.join(name)).unwrap()
}

#[test]
fn reruns_and_thread_counts_give_identical_csvs() {
    let root = tempfile::tempdir().unwrap();
    let mut outputs = Vec::new();
    for (tag, threads) in [("a", 1), ("b", 1), ("c", 8)] {
        let mut c = bf_config(vec![4.0, 8.0], 30);
        c.threads = threads;
        c.output_dir = Some(root.path().join(tag));
        run_experiment(&c).unwrap();
        let dir = root.path().join(tag);
        outputs.push((read(&dir, "stats.csv"), read(&dir, "mu.csv"), read(&dir, "psi.csv")));
        assert!(dir.join("manifest.toml").exists());
    }
    assert_eq!(outputs[0], outputs[1]);
    assert_eq!(outputs[0], outputs[2]);
}

#[test]
fn csv_headers_are_fixed() {
    let dir = tempfile::tempdir().unwrap();
    let mut c = bf_config(vec![4.0], 5);
    c.output_dir = Some(dir.path().to_path_buf());
    run_experiment(&c).unwrap();
    let first = |name: &str| read(dir.path(), name).lines().next().unwrap().to_string();
    assert_eq!(first("stats.csv"), STATS_COLUMNS.join(","));
    assert_eq!(first("mu.csv"), MU_COLUMNS.join(","));
    assert_eq!(first("psi.csv"), PSI_COLUMNS.join(","));
    let stats = read(dir.path(), "stats.csv");
    let row: Vec<&str> = stats.lines().nth(1).unwrap().split(',').collect();
    assert_eq!(row.len(), STATS_COLUMNS.len());
    // 12 significant digits
    assert_eq!(row[4].split('e').next().unwrap().replace(['.', '-'], "").len(), 12);
    let manifest: toml::Value = toml::from_str(&read(dir.path(), "manifest.toml")).unwrap();
    assert_eq!(manifest["config"]["replicates"].as_integer(), Some(5));
    assert!(manifest["wall_clock_seconds"].as_float().is_some());
    assert!(manifest["version"].as_str().is_some());
}

#[test]
fn failing_replicate_aborts_without_csvs() {
    let dir = tempfile::tempdir().unwrap();
    let mut c = bf_config(vec![4.0, 8.0], 10);
    c.output_dir = Some(dir.path().join("out"));
    c.inject_failure = Some((1, 7));
    match run_experiment(&c) {
        Err(Error::Replicate { radius, replicate, seed, .. }) => {
            assert_eq!(radius, 8.0);
            assert_eq!(replicate, 7);
            assert_eq!(seed, nodal_core::rng::mix_seed(42, 1, 7));
        }
        other => panic!("expected replicate error, got {other:?}"),
    }
    for name in ["stats.csv", "mu.csv", "psi.csv", "manifest.toml"] {
        assert!(!dir.path().join("out").join(name).exists(), "{name} written");
    }
}

#[test]
fn aggregation_ignores_replicate_order() {
    use nodal_core::ensembles::EnsembleSpec;
    use nodal_core::harness::run_replicate;
    use nodal_core::sampler::GridSpec;
    let spec = EnsembleSpec::bargmann_fock(2);
    let grid = GridSpec::new(2, 6.0, 0.25, false).unwrap();
    let mut sums: Vec<_> = (0..40).map(|s| run_replicate(&spec, &grid, s, true).unwrap()).collect();
    let a = accumulate(&sums).unwrap().report(6.0, 0.25, 2, 0);
    sums.shuffle(&mut ChaCha8Rng::seed_from_u64(1));
    let b = accumulate(&sums).unwrap().report(6.0, 0.25, 2, 0);
    assert_eq!(a, b);
}

#[test]
fn standard_errors_shrink_like_root_replicates() {
    let small = run_experiment(&bf_config(vec![8.0], 200)).unwrap().report;
    let large = run_experiment(&bf_config(vec![8.0], 400)).unwrap().report;
    let (s, l) = (&small.radii[0], &large.radii[0]);
    for (name, a, b) in [
        ("c_ns", s.c_ns.se, l.c_ns.se),
        ("percolation", s.percolation.se, l.percolation.se),
        ("t", s.t_per_volume.se, l.t_per_volume.se),
        ("c", s.c_per_volume.se, l.c_per_volume.se),
        ("v", s.v_fraction.se, l.v_fraction.se),
        ("mean connectivity", s.mean_connectivity.se, l.mean_connectivity.se),
        ("mean volume", s.mean_interior_volume.se, l.mean_interior_volume.se),
    ] {
        assert!(a.is_finite() && b.is_finite() && b > 0.0, "{name}");
        let ratio = a / b;
        assert!((ratio / 2f64.sqrt() - 1.0).abs() < 0.2, "{name}: ratio {ratio}");
    }
}

#[test]
fn identities_hold_for_every_planar_ensemble() {
    for (ensemble, alpha, n, r) in [
        ("bargmann-fock", None, None, 12.0),
        ("random-plane-wave", None, None, 24.0),
        ("band-limited", Some(0.5), None, 24.0),
        ("arithmetic-random-wave", None, Some(5), 2.0),
    ] {
        let mut c = ExperimentConfig::new(ensemble, vec![r], 40);
        c.band_alpha = alpha;
        c.arithmetic_n = n;
        let report = run_experiment(&c).unwrap().report;
        assert!(report.identities_exact(), "{ensemble}");
        assert_eq!(report.radii[0].identity.exact_residual, 0);
        assert!(report.radii[0].identity.delta < 1e-9, "{ensemble}");
    }
}

#[test]
fn arithmetic_n1_torus_has_two_domains() {
    let mut c = ExperimentConfig::new("arw", vec![0.5], 1000);
    c.arithmetic_n = Some(1);
    c.periodic = true;
    c.spacing = Spacing::Fixed(1.0 / 128.0);
    let r = &run_experiment(&c).unwrap().report.radii[0];
    let two = r.total_domain_histogram.get(&2).copied().unwrap_or(0);
    assert!(two as f64 >= 0.99 * 1000.0, "{:?}", r.total_domain_histogram);
}

#[test]
fn sweep_reports_ratios_and_skips_missing_representations() {
    let mut c = ExperimentConfig::new("arw", vec![], 20);
    c.arithmetic_n_list = vec![1, 2, 3, 5, 10, 13];
    c.compare_planar_r = 0.0;
    let report = sweep_manifold(&c).unwrap();
    assert_eq!(report.skipped, vec![3]);
    assert_eq!(report.entries.len(), 5);
    for e in &report.entries {
        assert!(e.ratio.value > 0.0, "n = {}", e.n);
    }
}

#[test]
fn generic_eigenvalue_matches_planar_density() {
    let mut c = ExperimentConfig::new("arw", vec![], 200);
    c.arithmetic_n_list = vec![1105];
    c.compare_planar_r = 64.0;
    c.base_seed = 3;
    let report = sweep_manifold(&c).unwrap();
    let e = &report.entries[0];
    let rel = e.relative_to_planar.unwrap();
    assert!(rel.abs() < 0.15, "torus {:?} planar {:?} rel {rel}", e.scaled_density, report.planar_c_ns);
}

#[test]
fn config_files_reject_unknown_keys() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("c.toml");
    fs::write(&p, "ensemble = \"bf\"\nradii = [4.0]\nreplicates = 2\nspeed = 1\n").unwrap();
    assert!(matches!(ExperimentConfig::from_file(&p), Err(Error::Config(_))));
}
