//! Posterior evaluation on parameter grids: the exact-up-to-quadrature
//! backbone used to cross-validate every sampler and closed form.
//!
//! Grids are tensor products over a [`ParameterBox`] (dimension <= 3).
//! Vertex grids carry trapezoidal quadrature weights; cell grids (used to
//! compare against sample histograms) carry midpoint weights.

use std::io::Write;
use std::path::Path;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::field::GaussianDiscrepancyField;
use crate::loss::{evaluate_scaled_loss, LossSpec};
use crate::math::logsumexp;
use crate::model::{ParameterBox, ParameterPoint, SimulatorModel};
use crate::rng::RngStream;

const MAX_GRID_DIM: usize = 3;

/// Layout of grid points inside the box.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GridLayout {
    /// Points on the box boundary included; trapezoid rule.
    Vertices,
    /// Points at cell midpoints; midpoint rule. Matches histogram bins.
    Cells,
}

/// A tensor-product grid specification.
#[derive(Debug, Clone, PartialEq)]
pub struct GridSpec {
    pub bounds: ParameterBox,
    pub resolution: Vec<usize>,
    pub layout: GridLayout,
}

impl GridSpec {
    pub fn vertices(bounds: ParameterBox, resolution: Vec<usize>) -> Result<Self> {
        Self::new(bounds, resolution, GridLayout::Vertices)
    }

    pub fn cells(bounds: ParameterBox, resolution: Vec<usize>) -> Result<Self> {
        Self::new(bounds, resolution, GridLayout::Cells)
    }

    fn new(bounds: ParameterBox, resolution: Vec<usize>, layout: GridLayout) -> Result<Self> {
        if bounds.dim() > MAX_GRID_DIM {
            return Err(Error::InvalidArgument(format!(
                "grids support at most {MAX_GRID_DIM} dimensions, got {}; use a sampler instead",
                bounds.dim()
            )));
        }
        if resolution.len() != bounds.dim() {
            return Err(Error::InvalidArgument(
                "grid resolution must give one entry per dimension".into(),
            ));
        }
        let min_res = match layout {
            GridLayout::Vertices => 2,
            GridLayout::Cells => 1,
        };
        if resolution.iter().any(|&r| r < min_res) {
            return Err(Error::InvalidArgument(format!(
                "grid resolution must be >= {min_res} per dimension"
            )));
        }
        Ok(Self {
            bounds,
            resolution,
            layout,
        })
    }

    pub fn dim(&self) -> usize {
        self.bounds.dim()
    }

    fn axis(&self, d: usize) -> (Vec<f64>, Vec<f64>) {
        let (lo, hi) = (self.bounds.lower[d], self.bounds.upper[d]);
        let n = self.resolution[d];
        match self.layout {
            GridLayout::Vertices => {
                let step = (hi - lo) / (n - 1) as f64;
                let points: Vec<f64> = (0..n).map(|i| lo + i as f64 * step).collect();
                let mut weights = vec![step; n];
                weights[0] = step / 2.0;
                weights[n - 1] = step / 2.0;
                (points, weights)
            }
            GridLayout::Cells => {
                let step = (hi - lo) / n as f64;
                let points: Vec<f64> = (0..n).map(|i| lo + (i as f64 + 0.5) * step).collect();
                (points, vec![step; n])
            }
        }
    }

    /// All grid points in row-major order with their quadrature weights.
    pub fn points_and_weights(&self) -> (Vec<ParameterPoint>, Vec<f64>) {
        let axes: Vec<(Vec<f64>, Vec<f64>)> = (0..self.dim()).map(|d| self.axis(d)).collect();
        let total: usize = axes.iter().map(|(p, _)| p.len()).product();
        let mut points = Vec::with_capacity(total);
        let mut weights = Vec::with_capacity(total);
        for flat in 0..total {
            let mut idx = flat;
            let mut coord = Vec::with_capacity(self.dim());
            let mut w = 1.0;
            for (pts, ws) in axes.iter().rev() {
                let i = idx % pts.len();
                idx /= pts.len();
                coord.push(pts[i]);
                w *= ws[i];
            }
            coord.reverse();
            points.push(ParameterPoint(coord));
            weights.push(w);
        }
        (points, weights)
    }
}

/// A posterior tabulated on a grid: unnormalized log-densities and, after
/// [`PosteriorGrid::normalize`], densities integrating to one under the
/// grid's quadrature weights.
#[derive(Debug, Clone)]
pub struct PosteriorGrid {
    points: Vec<ParameterPoint>,
    log_unnormalized: Vec<f64>,
    density: Vec<f64>,
    quadrature_weights: Vec<f64>,
    normalized: bool,
}

impl PosteriorGrid {
    pub fn from_log_unnormalized(
        points: Vec<ParameterPoint>,
        log_unnormalized: Vec<f64>,
        quadrature_weights: Vec<f64>,
    ) -> Result<Self> {
        if points.len() != log_unnormalized.len() || points.len() != quadrature_weights.len() {
            return Err(Error::InvalidArgument(
                "grid points, log-densities and weights must have equal length".into(),
            ));
        }
        if points.is_empty() {
            return Err(Error::InvalidArgument("empty posterior grid".into()));
        }
        Ok(Self {
            points,
            log_unnormalized,
            density: Vec::new(),
            quadrature_weights,
            normalized: false,
        })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.points[0].dim()
    }

    pub fn points(&self) -> &[ParameterPoint] {
        &self.points
    }

    pub fn log_unnormalized(&self) -> &[f64] {
        &self.log_unnormalized
    }

    pub fn density(&self) -> &[f64] {
        &self.density
    }

    pub fn quadrature_weights(&self) -> &[f64] {
        &self.quadrature_weights
    }

    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    /// Normalize via log-sum-exp so that `sum_i density_i * weight_i = 1`.
    /// Errors if every entry carries zero mass.
    pub fn normalize(mut self) -> Result<Self> {
        let log_terms: Vec<f64> = self
            .log_unnormalized
            .iter()
            .zip(&self.quadrature_weights)
            .map(|(lp, w)| lp + w.ln())
            .collect();
        let log_z = logsumexp(&log_terms);
        if log_z == f64::NEG_INFINITY {
            return Err(Error::ImproperPosterior);
        }
        if !log_z.is_finite() {
            return Err(Error::Numerical(format!(
                "posterior normalizer is not finite: {log_z}"
            )));
        }
        self.density = self
            .log_unnormalized
            .iter()
            .map(|lp| {
                if *lp == f64::NEG_INFINITY {
                    0.0
                } else {
                    (lp - log_z).exp()
                }
            })
            .collect();
        self.normalized = true;
        Ok(self)
    }

    fn same_support(&self, other: &Self) -> bool {
        self.points == other.points && self.quadrature_weights == other.quadrature_weights
    }

    /// Quadrature mean, standard deviation (per dimension) and mode.
    pub fn summarize(&self) -> Result<GridSummary> {
        if !self.normalized {
            return Err(Error::InvalidArgument(
                "summarize requires a normalized grid".into(),
            ));
        }
        let dim = self.dim();
        let mut mean = vec![0.0; dim];
        for ((p, d), w) in self
            .points
            .iter()
            .zip(&self.density)
            .zip(&self.quadrature_weights)
        {
            for (m, x) in mean.iter_mut().zip(p.values()) {
                *m += x * d * w;
            }
        }
        let mut var = vec![0.0; dim];
        for ((p, d), w) in self
            .points
            .iter()
            .zip(&self.density)
            .zip(&self.quadrature_weights)
        {
            for ((v, x), m) in var.iter_mut().zip(p.values()).zip(&mean) {
                *v += (x - m) * (x - m) * d * w;
            }
        }
        let sd = var.iter().map(|v| v.max(0.0).sqrt()).collect();
        let mode_idx = self
            .density
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .map(|(i, _)| i)
            .unwrap_or(0);
        Ok(GridSummary {
            mean,
            sd,
            mode: self.points[mode_idx].clone(),
        })
    }

    /// Serialize as CSV with header `theta_1..theta_p,log_unnormalized,density`.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let dim = self.dim();
        let mut header: Vec<String> = (1..=dim).map(|d| format!("theta_{d}")).collect();
        header.push("log_unnormalized".into());
        header.push("density".into());
        w.write_record(&header)?;
        for (i, p) in self.points.iter().enumerate() {
            let mut record: Vec<String> = p.values().iter().map(|v| format!("{v}")).collect();
            record.push(format!("{}", self.log_unnormalized[i]));
            record.push(format!(
                "{}",
                self.density.get(i).copied().unwrap_or(f64::NAN)
            ));
            w.write_record(&record)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn write_csv_file(&self, path: &Path) -> Result<()> {
        self.write_csv(std::fs::File::create(path)?)
    }

    /// Read a grid back from CSV. Quadrature weights are not stored in the
    /// file; the caller supplies the grid spec they were produced with.
    pub fn read_csv_file(path: &Path, spec: &GridSpec) -> Result<Self> {
        let mut reader = csv::Reader::from_path(path)?;
        let dim = spec.dim();
        let mut points = Vec::new();
        let mut log_unnorm = Vec::new();
        let mut density = Vec::new();
        for record in reader.records() {
            let record = record?;
            if record.len() != dim + 2 {
                return Err(Error::Config(format!(
                    "posterior CSV row has {} fields, expected {}",
                    record.len(),
                    dim + 2
                )));
            }
            let parse = |s: &str| -> Result<f64> {
                s.parse::<f64>()
                    .map_err(|e| Error::Config(format!("bad float {s:?} in posterior CSV: {e}")))
            };
            let coords: Result<Vec<f64>> = (0..dim).map(|d| parse(&record[d])).collect();
            points.push(ParameterPoint(coords?));
            log_unnorm.push(parse(&record[dim])?);
            density.push(parse(&record[dim + 1])?);
        }
        let (expected_points, weights) = spec.points_and_weights();
        if points.len() != expected_points.len() {
            return Err(Error::GridMismatch(format!(
                "CSV has {} rows but grid spec describes {} points",
                points.len(),
                expected_points.len()
            )));
        }
        let mut grid = Self::from_log_unnormalized(points, log_unnorm, weights)?;
        grid.density = density;
        grid.normalized = true;
        Ok(grid)
    }
}

/// Posterior summary statistics under the quadrature measure.
#[derive(Debug, Clone, PartialEq)]
pub struct GridSummary {
    pub mean: Vec<f64>,
    pub sd: Vec<f64>,
    pub mode: ParameterPoint,
}

/// Distance metrics between normalized grids on identical supports.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DistanceMetric {
    TotalVariation,
    Hellinger,
}

/// Distance in `[0, 1]` between two normalized posteriors tabulated on the
/// same grid.
pub fn distance(a: &PosteriorGrid, b: &PosteriorGrid, metric: DistanceMetric) -> Result<f64> {
    if !a.normalized || !b.normalized {
        return Err(Error::InvalidArgument(
            "distance requires normalized grids".into(),
        ));
    }
    if !a.same_support(b) {
        return Err(Error::GridMismatch(
            "posterior grids have different points or quadrature weights".into(),
        ));
    }
    let value = match metric {
        DistanceMetric::TotalVariation => {
            0.5 * a
                .density
                .iter()
                .zip(&b.density)
                .zip(&a.quadrature_weights)
                .map(|((x, y), w)| (x - y).abs() * w)
                .sum::<f64>()
        }
        DistanceMetric::Hellinger => {
            let sq: f64 = a
                .density
                .iter()
                .zip(&b.density)
                .zip(&a.quadrature_weights)
                .map(|((x, y), w)| {
                    let d = x.sqrt() - y.sqrt();
                    d * d * w
                })
                .sum();
            (0.5 * sq).sqrt()
        }
    };
    Ok(value.clamp(0.0, 1.0))
}

/// Evaluate `prior * exp(-w loss)` (or `prior * p_ABC`) pointwise on a
/// grid. Point `i` draws from `stream.offset(i)`, so Monte Carlo kinds
/// reuse one simulation batch per point across loss kinds evaluated with
/// the same base stream; this makes the per-batch equivalence tests sharp.
/// Evaluation parallelizes over points and assembly is order-independent.
pub fn evaluate_on_grid(
    model: &SimulatorModel,
    spec: &LossSpec,
    field: Option<&GaussianDiscrepancyField>,
    grid: &GridSpec,
    stream: RngStream,
) -> Result<PosteriorGrid> {
    spec.validate()?;
    if spec.kind.needs_field() && field.is_none() {
        return Err(Error::Config(format!(
            "loss kind {} requires a discrepancy field on grid evaluations",
            spec.kind.name()
        )));
    }
    let (points, weights) = grid.points_and_weights();
    let log_unnorm: Result<Vec<f64>> = points
        .par_iter()
        .enumerate()
        .map(|(i, theta)| {
            let prior = model.prior_log_density(theta);
            if prior == f64::NEG_INFINITY {
                return Ok(f64::NEG_INFINITY);
            }
            let scaled = evaluate_scaled_loss(model, spec, field, theta, stream.offset(i as u64))?;
            Ok(prior - scaled)
        })
        .collect();
    PosteriorGrid::from_log_unnormalized(points, log_unnorm?, weights)
}

/// Normalized histogram of samples as a cell-grid posterior, comparable
/// with grid-evaluated posteriors on the same cell spec.
pub fn histogram_grid(samples: &[ParameterPoint], spec: &GridSpec) -> Result<PosteriorGrid> {
    if spec.layout != GridLayout::Cells {
        return Err(Error::InvalidArgument(
            "histograms require a cell-layout grid".into(),
        ));
    }
    if samples.is_empty() {
        return Err(Error::InvalidArgument("histogram of zero samples".into()));
    }
    let (points, weights) = spec.points_and_weights();
    let dim = spec.dim();
    let mut counts = vec![0u64; points.len()];
    let mut kept = 0u64;
    'sample: for s in samples {
        let mut flat = 0usize;
        for d in 0..dim {
            let (lo, hi) = (spec.bounds.lower[d], spec.bounds.upper[d]);
            let n = spec.resolution[d];
            let x = s.values()[d];
            if x < lo || x > hi {
                continue 'sample;
            }
            let step = (hi - lo) / n as f64;
            let i = (((x - lo) / step) as usize).min(n - 1);
            flat = flat * n + i;
        }
        counts[flat] += 1;
        kept += 1;
    }
    if kept == 0 {
        return Err(Error::InvalidArgument(
            "no samples fall inside the histogram bounds".into(),
        ));
    }
    let log_unnorm: Vec<f64> = counts
        .iter()
        .map(|&c| {
            if c == 0 {
                f64::NEG_INFINITY
            } else {
                (c as f64).ln()
            }
        })
        .collect();
    PosteriorGrid::from_log_unnormalized(points, log_unnorm, weights)?.normalize()
}

/// Freedman-Diaconis bin count for 1-D sampler output (fallback 50 when
/// the IQR degenerates), capped to keep reports readable.
pub fn freedman_diaconis_bins(samples: &[f64], lo: f64, hi: f64) -> usize {
    let n = samples.len();
    if n < 2 {
        return 1;
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let q = |p: f64| -> f64 {
        let idx = p * (n - 1) as f64;
        let i = idx.floor() as usize;
        let frac = idx - i as f64;
        if i + 1 < n {
            sorted[i] * (1.0 - frac) + sorted[i + 1] * frac
        } else {
            sorted[i]
        }
    };
    let iqr = q(0.75) - q(0.25);
    if iqr <= 0.0 {
        return 50;
    }
    let width = 2.0 * iqr / (n as f64).cbrt();
    (((hi - lo) / width).ceil() as usize).clamp(1, 2000)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{example1_analytic_field, FieldSource};
    use crate::loss::LossKind;
    use crate::model::make_example1_model;
    use crate::weights::WeightFunction;
    use approx::assert_abs_diff_eq;

    fn unit_box() -> ParameterBox {
        ParameterBox::new(vec![0.0], vec![10.0]).unwrap()
    }

    #[test]
    fn trapezoid_weights_sum_to_volume() {
        let spec = GridSpec::vertices(unit_box(), vec![11]).unwrap();
        let (_, w) = spec.points_and_weights();
        assert_abs_diff_eq!(w.iter().sum::<f64>(), 10.0, epsilon = 1e-12);
        let cells = GridSpec::cells(unit_box(), vec![20]).unwrap();
        let (p, w) = cells.points_and_weights();
        assert_abs_diff_eq!(w.iter().sum::<f64>(), 10.0, epsilon = 1e-12);
        assert_abs_diff_eq!(p[0].values()[0], 0.25, epsilon = 1e-15);
    }

    #[test]
    fn two_dimensional_grid_weights() {
        let b = ParameterBox::new(vec![0.0, 0.0], vec![1.0, 2.0]).unwrap();
        let spec = GridSpec::vertices(b, vec![3, 5]).unwrap();
        let (p, w) = spec.points_and_weights();
        assert_eq!(p.len(), 15);
        assert_abs_diff_eq!(w.iter().sum::<f64>(), 2.0, epsilon = 1e-12);
        // row-major: second coordinate varies fastest
        assert_eq!(p[1].values(), &[0.0, 0.5]);
        assert_eq!(p[5].values(), &[0.5, 0.0]);
    }

    #[test]
    fn normalize_basics() {
        let points = vec![ParameterPoint::scalar(0.0), ParameterPoint::scalar(1.0)];
        let g = PosteriorGrid::from_log_unnormalized(points.clone(), vec![2.0, 2.0], vec![0.5, 0.5])
            .unwrap()
            .normalize()
            .unwrap();
        assert_eq!(g.density()[0], g.density()[1]);
        assert_abs_diff_eq!(
            g.density().iter().zip(g.quadrature_weights()).map(|(d, w)| d * w).sum::<f64>(),
            1.0,
            epsilon = 1e-12
        );

        let g = PosteriorGrid::from_log_unnormalized(
            points.clone(),
            vec![0.0, f64::NEG_INFINITY],
            vec![0.5, 0.5],
        )
        .unwrap()
        .normalize()
        .unwrap();
        assert_abs_diff_eq!(g.density()[0], 2.0, epsilon = 1e-12);
        assert_eq!(g.density()[1], 0.0);

        let improper = PosteriorGrid::from_log_unnormalized(
            points,
            vec![f64::NEG_INFINITY, f64::NEG_INFINITY],
            vec![0.5, 0.5],
        )
        .unwrap()
        .normalize();
        assert!(matches!(improper, Err(Error::ImproperPosterior)));
    }

    #[test]
    fn normalization_is_shift_invariant() {
        let points: Vec<ParameterPoint> = (0..50).map(|i| ParameterPoint::scalar(i as f64)).collect();
        let logs: Vec<f64> = (0..50).map(|i| -0.1 * (i as f64 - 20.0).powi(2)).collect();
        let shifted: Vec<f64> = logs.iter().map(|l| l + 123.456).collect();
        let w = vec![1.0; 50];
        let a = PosteriorGrid::from_log_unnormalized(points.clone(), logs, w.clone())
            .unwrap()
            .normalize()
            .unwrap();
        let b = PosteriorGrid::from_log_unnormalized(points, shifted, w)
            .unwrap()
            .normalize()
            .unwrap();
        for (x, y) in a.density().iter().zip(b.density()) {
            assert_abs_diff_eq!(x, y, epsilon = 1e-12);
        }
    }

    #[test]
    fn distance_basics() {
        let points: Vec<ParameterPoint> = (0..4).map(|i| ParameterPoint::scalar(i as f64)).collect();
        let w = vec![1.0; 4];
        let a = PosteriorGrid::from_log_unnormalized(
            points.clone(),
            vec![0.0, 0.0, f64::NEG_INFINITY, f64::NEG_INFINITY],
            w.clone(),
        )
        .unwrap()
        .normalize()
        .unwrap();
        let b = PosteriorGrid::from_log_unnormalized(
            points.clone(),
            vec![f64::NEG_INFINITY, f64::NEG_INFINITY, 0.0, 0.0],
            w.clone(),
        )
        .unwrap()
        .normalize()
        .unwrap();
        assert_eq!(distance(&a, &a, DistanceMetric::TotalVariation).unwrap(), 0.0);
        assert_eq!(distance(&a, &a, DistanceMetric::Hellinger).unwrap(), 0.0);
        assert_abs_diff_eq!(
            distance(&a, &b, DistanceMetric::TotalVariation).unwrap(),
            1.0,
            epsilon = 1e-12
        );
        assert_abs_diff_eq!(
            distance(&a, &b, DistanceMetric::Hellinger).unwrap(),
            1.0,
            epsilon = 1e-12
        );

        let other_points: Vec<ParameterPoint> =
            (0..4).map(|i| ParameterPoint::scalar(i as f64 + 0.5)).collect();
        let c = PosteriorGrid::from_log_unnormalized(other_points, vec![0.0; 4], w)
            .unwrap()
            .normalize()
            .unwrap();
        assert!(matches!(
            distance(&a, &c, DistanceMetric::TotalVariation),
            Err(Error::GridMismatch(_))
        ));
    }

    #[test]
    fn summary_of_prior_only_grid() {
        let model = make_example1_model();
        let spec = GridSpec::vertices(unit_box(), vec![2001]).unwrap();
        // constant loss: posterior equals the prior
        let loss = LossSpec::new(LossKind::ExpectedDiscrepancy).with_w_scale(1e-12);
        let field = GaussianDiscrepancyField::from_functions(|_| 1.0, |_| 1.0, FieldSource::Analytic);
        let g = evaluate_on_grid(&model, &loss, Some(&field), &spec, RngStream::from_seed(0))
            .unwrap()
            .normalize()
            .unwrap();
        let s = g.summarize().unwrap();
        assert_abs_diff_eq!(s.mean[0], 5.0, epsilon = 1e-9);
        assert_abs_diff_eq!(s.sd[0], 10.0 / 12.0_f64.sqrt(), epsilon = 1e-3);
    }

    #[test]
    fn point_mass_summary() {
        let points: Vec<ParameterPoint> = (0..5).map(|i| ParameterPoint::scalar(i as f64)).collect();
        let mut logs = vec![f64::NEG_INFINITY; 5];
        logs[2] = 0.0;
        let g = PosteriorGrid::from_log_unnormalized(points, logs, vec![1.0; 5])
            .unwrap()
            .normalize()
            .unwrap();
        let s = g.summarize().unwrap();
        assert_abs_diff_eq!(s.mean[0], 2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(s.sd[0], 0.0, epsilon = 1e-12);
        assert_eq!(s.mode.values(), &[2.0]);
    }

    #[test]
    fn cf_exponential_grid_mode_matches_brute_force_scan() {
        let model = make_example1_model();
        let field = example1_analytic_field(Default::default());
        let h = 0.2;
        let spec = GridSpec::vertices(unit_box(), vec![2001]).unwrap();
        let loss = LossSpec::new(LossKind::CfExponential)
            .with_weight(WeightFunction::exponential_onesided(h).unwrap());
        let g = evaluate_on_grid(&model, &loss, Some(&field), &spec, RngStream::from_seed(0))
            .unwrap()
            .normalize()
            .unwrap();
        let mode = g.summarize().unwrap().mode.values()[0];

        // brute-force scan of the loss at 10x resolution
        let mut best = (f64::INFINITY, f64::NAN);
        for i in 0..20_001 {
            let t = 10.0 * i as f64 / 20_000.0;
            let theta = ParameterPoint::scalar(t);
            let l = crate::loss::cf_loss_exponential(&field, h, &theta, false).unwrap();
            if l < best.0 {
                best = (l, t);
            }
        }
        assert!((mode - best.1).abs() < 0.01, "mode {mode} vs scan {}", best.1);
    }

    #[test]
    fn flat_loss_yields_uniform_posterior() {
        let model = make_example1_model();
        let field = GaussianDiscrepancyField::from_functions(|_| 2.5, |_| 0.4, FieldSource::Analytic);
        let spec = GridSpec::vertices(unit_box(), vec![101]).unwrap();
        let loss = LossSpec::new(LossKind::ExpectedDiscrepancy).with_w_scale(3.0);
        let g = evaluate_on_grid(&model, &loss, Some(&field), &spec, RngStream::from_seed(0))
            .unwrap()
            .normalize()
            .unwrap();
        for d in g.density() {
            assert_abs_diff_eq!(*d, 0.1, epsilon = 1e-12);
        }
    }

    #[test]
    fn grid_refinement_changes_little() {
        let model = make_example1_model();
        let field = example1_analytic_field(Default::default());
        let loss = LossSpec::new(LossKind::CfExponential)
            .with_weight(WeightFunction::exponential_onesided(0.2).unwrap());
        let coarse_spec = GridSpec::vertices(unit_box(), vec![1001]).unwrap();
        let fine_spec = GridSpec::vertices(unit_box(), vec![2001]).unwrap();
        let coarse = evaluate_on_grid(&model, &loss, Some(&field), &coarse_spec, RngStream::from_seed(0))
            .unwrap()
            .normalize()
            .unwrap();
        let fine = evaluate_on_grid(&model, &loss, Some(&field), &fine_spec, RngStream::from_seed(0))
            .unwrap()
            .normalize()
            .unwrap();
        // the fine grid contains the coarse points at even indices
        let mut acc = 0.0;
        for (i, w) in coarse.quadrature_weights().iter().enumerate() {
            acc += (coarse.density()[i] - fine.density()[2 * i]).abs() * w;
        }
        assert!(acc / 2.0 < 1e-3, "refinement TV {}", acc / 2.0);
    }

    #[test]
    fn histogram_matches_known_density() {
        let spec = GridSpec::cells(unit_box(), vec![10]).unwrap();
        let samples: Vec<ParameterPoint> = (0..10_000)
            .map(|i| ParameterPoint::scalar(10.0 * (i as f64 + 0.5) / 10_000.0))
            .collect();
        let g = histogram_grid(&samples, &spec).unwrap();
        for d in g.density() {
            assert_abs_diff_eq!(*d, 0.1, epsilon = 1e-12);
        }
    }

    #[test]
    fn csv_round_trip_preserves_grid() {
        let model = make_example1_model();
        let field = example1_analytic_field(Default::default());
        let spec = GridSpec::vertices(unit_box(), vec![51]).unwrap();
        let loss = LossSpec::new(LossKind::CfUniform)
            .with_weight(WeightFunction::uniform_onesided(0.2).unwrap());
        let g = evaluate_on_grid(&model, &loss, Some(&field), &spec, RngStream::from_seed(0))
            .unwrap()
            .normalize()
            .unwrap();
        let dir = std::env::temp_dir().join("abc_gbi_grid_io_test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("posterior.csv");
        g.write_csv_file(&path).unwrap();
        let loaded = PosteriorGrid::read_csv_file(&path, &spec).unwrap();
        assert_eq!(loaded.len(), g.len());
        assert_eq!(
            distance(&g, &loaded, DistanceMetric::TotalVariation).unwrap(),
            0.0
        );
        std::fs::remove_dir_all(&dir).ok();
    }
}
