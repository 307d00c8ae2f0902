//! CSV writers. Reals use [`fmt_real`]; counts are plain integers; missing
//! values are empty fields.

use std::path::Path;

use super::{fmt_real, Estimate, MonteCarloReport};
use crate::error::Result;

/// Header of `stats.csv`, one row per radius.
pub const STATS_COLUMNS: &[&str] = &[
    "R",
    "spacing",
    "replicates",
    "base_seed",
    "c_ns",
    "c_ns_se",
    "percolation",
    "percolation_se",
    "t_per_volume",
    "t_per_volume_se",
    "c_per_volume",
    "c_per_volume_se",
    "v_fraction",
    "v_fraction_se",
    "two_t_over_n",
    "two_t_over_n_se",
    "mean_connectivity",
    "mean_connectivity_se",
    "mean_interior_volume",
    "mean_interior_volume_se",
    "psi_mean",
    "delta",
    "delta_se",
    "v_minus_p",
    "v_minus_p_se",
    "alpha",
    "alpha_se",
    "tail_k_min",
    "tail_k_max",
    "tail_curvature_t",
    "tail_curved",
    "tv_from_previous",
    "excluded_empty",
    "zero_perturbations",
    "residual_tree",
    "residual_forest",
    "residual_volume",
    "bound_violations",
];

/// Header of `mu.csv`.
pub const MU_COLUMNS: &[&str] = &["R", "k", "count", "mu_hat", "se"];

/// Header of `psi.csv`.
pub const PSI_COLUMNS: &[&str] = &["R", "t", "psi_hat"];

fn push_estimate(row: &mut Vec<String>, e: &Estimate) {
    row.push(fmt_real(e.value));
    row.push(fmt_real(e.se));
}

fn opt_real(x: Option<f64>) -> String {
    x.map(fmt_real).unwrap_or_default()
}

pub fn write_stats_csv(report: &MonteCarloReport, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(STATS_COLUMNS)?;
    for r in &report.radii {
        let mut row = vec![
            fmt_real(r.radius),
            fmt_real(r.spacing),
            r.replicates.to_string(),
            r.base_seed.to_string(),
        ];
        for e in [
            &r.c_ns,
            &r.percolation,
            &r.t_per_volume,
            &r.c_per_volume,
            &r.v_fraction,
            &r.two_t_over_n,
            &r.mean_connectivity,
            &r.mean_interior_volume,
        ] {
            push_estimate(&mut row, e);
        }
        row.push(fmt_real(r.identity.psi_mean));
        row.push(fmt_real(r.identity.delta));
        row.push(fmt_real(r.identity.delta_se));
        push_estimate(&mut row, &r.identity.boundary_minus_percolation);
        match &r.tail {
            Some(t) => {
                row.push(fmt_real(t.alpha));
                row.push(fmt_real(t.se));
                row.push(t.k_min.to_string());
                row.push(t.k_max.to_string());
                row.push(fmt_real(t.curvature_t));
                row.push(t.curved.to_string());
            }
            None => row.extend(std::iter::repeat_n(String::new(), 6)),
        }
        row.push(opt_real(r.tv_from_previous));
        row.push(r.excluded_empty.to_string());
        row.push(r.zero_perturbations.to_string());
        row.push(r.residual_abs_sum.tree.to_string());
        row.push(r.residual_abs_sum.forest.to_string());
        row.push(r.residual_abs_sum.volume.to_string());
        row.push(r.bound_violations.to_string());
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_mu_csv(report: &MonteCarloReport, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(MU_COLUMNS)?;
    for r in &report.radii {
        if let Some(mu) = &r.mu {
            for k in 0..mu.counts.len() {
                w.write_record([
                    fmt_real(r.radius),
                    k.to_string(),
                    mu.counts[k].to_string(),
                    fmt_real(mu.mu[k]),
                    fmt_real(mu.se[k]),
                ])?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

pub fn write_psi_csv(report: &MonteCarloReport, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(PSI_COLUMNS)?;
    for r in &report.radii {
        if let Some(psi) = &r.psi {
            for (t, p) in psi.t.iter().zip(&psi.psi) {
                w.write_record([fmt_real(r.radius), fmt_real(*t), fmt_real(*p)])?;
            }
        }
    }
    w.flush()?;
    Ok(())
}
