//! Summaries of a finished experiment directory: per-posterior moments and
//! the pairwise total-variation matrix, as a table or JSON.

use std::path::Path;

use serde::Serialize;

use crate::cli::runner::Manifest;
use crate::error::{Error, Result};
use crate::grid::{distance, DistanceMetric, PosteriorGrid};

#[derive(Debug, Serialize)]
pub struct PosteriorReport {
    pub name: String,
    pub file: String,
    pub mean: Vec<f64>,
    pub sd: Vec<f64>,
    pub mode: Vec<f64>,
}

#[derive(Debug, Serialize)]
pub struct Report {
    pub output_dir: String,
    pub seed: u64,
    pub posteriors: Vec<PosteriorReport>,
    /// Names indexing the rows/columns of the distance matrices.
    pub compared: Vec<String>,
    pub tv_matrix: Vec<Vec<f64>>,
    pub hellinger_matrix: Vec<Vec<f64>>,
    pub warnings: Vec<String>,
}

/// Build the report for an output directory written by the runner.
pub fn build_report(dir: &Path) -> Result<Report> {
    let manifest = Manifest::read(dir)?;
    for artifact in &manifest.artifacts {
        if !dir.join(&artifact.file).exists() {
            return Err(Error::Config(format!(
                "manifest lists missing artifact {}",
                artifact.file
            )));
        }
    }

    let mut posteriors = Vec::new();
    let mut grids = Vec::new();
    for artifact in manifest.artifacts.iter().filter(|a| a.kind == "posterior") {
        let meta = artifact.grid.as_ref().ok_or_else(|| {
            Error::Config(format!("posterior artifact {} lacks grid metadata", artifact.file))
        })?;
        let spec = meta.to_spec()?;
        let grid = PosteriorGrid::read_csv_file(&dir.join(&artifact.file), &spec)?;
        let summary = grid.summarize()?;
        let name = artifact.run.clone().unwrap_or_else(|| artifact.file.clone());
        posteriors.push(PosteriorReport {
            name: name.clone(),
            file: artifact.file.clone(),
            mean: summary.mean,
            sd: summary.sd,
            mode: summary.mode.values().to_vec(),
        });
        grids.push((name, grid, meta.clone()));
    }

    // distance matrices over the posteriors sharing the first grid
    let mut compared = Vec::new();
    let mut comparable = Vec::new();
    if let Some(reference) = grids.first().map(|(_, _, m)| m.clone()) {
        for (name, grid, meta) in &grids {
            if *meta == reference {
                compared.push(name.clone());
                comparable.push(grid);
            }
        }
    }
    let n = comparable.len();
    let mut tv_matrix = vec![vec![0.0; n]; n];
    let mut hellinger_matrix = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in (i + 1)..n {
            let tv = distance(comparable[i], comparable[j], DistanceMetric::TotalVariation)?;
            let hell = distance(comparable[i], comparable[j], DistanceMetric::Hellinger)?;
            tv_matrix[i][j] = tv;
            tv_matrix[j][i] = tv;
            hellinger_matrix[i][j] = hell;
            hellinger_matrix[j][i] = hell;
        }
    }

    Ok(Report {
        output_dir: dir.display().to_string(),
        seed: manifest.seed,
        posteriors,
        compared,
        tv_matrix,
        hellinger_matrix,
        warnings: manifest.warnings,
    })
}

/// Render the report for stdout: a summary table plus the TV matrix.
pub fn render_text(report: &Report) -> String {
    let mut out = String::new();
    out.push_str(&format!(
        "experiment: {} (seed {})\n\n",
        report.output_dir, report.seed
    ));
    if report.posteriors.is_empty() {
        out.push_str("no posterior artifacts\n");
    } else {
        out.push_str(&format!(
            "{:<28} {:>12} {:>12} {:>12}\n",
            "posterior", "mean", "sd", "mode"
        ));
        for p in &report.posteriors {
            out.push_str(&format!(
                "{:<28} {:>12} {:>12} {:>12}\n",
                p.name,
                join_fixed(&p.mean),
                join_fixed(&p.sd),
                join_fixed(&p.mode),
            ));
        }
    }
    if report.compared.len() >= 2 {
        out.push_str("\npairwise total variation:\n");
        out.push_str(&format!("{:<28}", ""));
        for name in &report.compared {
            out.push_str(&format!(" {:>12}", truncate(name, 12)));
        }
        out.push('\n');
        for (i, name) in report.compared.iter().enumerate() {
            out.push_str(&format!("{:<28}", truncate(name, 28)));
            for v in &report.tv_matrix[i] {
                out.push_str(&format!(" {:>12.6}", v));
            }
            out.push('\n');
        }
    }
    for warning in &report.warnings {
        out.push_str(&format!("\nwarning: {warning}\n"));
    }
    out
}

fn join_fixed(values: &[f64]) -> String {
    values
        .iter()
        .map(|v| format!("{v:.4}"))
        .collect::<Vec<_>>()
        .join(",")
}

fn truncate(s: &str, n: usize) -> &str {
    if s.len() <= n {
        s
    } else {
        &s[..n]
    }
}
