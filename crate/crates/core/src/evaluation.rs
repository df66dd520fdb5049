//! Scoring estimated sources against references: unit-norm scaling, Pearson
//! correlation, greedy source/estimate pairing and seeded Monte-Carlo RMS error.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::numerics::{self, Matrix};
use crate::separation::{self, MethodSpec, SeparationResult};
use crate::signals::{self, MixingMatrix, MultichannelSignal, NoiseSpec, PulseTrainSpec};

/// Scales a series to unit sample norm.
pub fn normalize_unit(series: &[f64]) -> Result<Vec<f64>> {
    let r = numerics::norm(series);
    if r == 0.0 {
        return Err(Error::ZeroSeries);
    }
    Ok(series.iter().map(|x| x / r).collect())
}

/// Mean-removed (Pearson) correlation coefficient.
pub fn pearson(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch(format!(
            "series lengths {} and {}",
            x.len(),
            y.len()
        )));
    }
    let m = x.len() as f64;
    let mx = x.iter().sum::<f64>() / m;
    let my = y.iter().sum::<f64>() / m;
    let dx: Vec<f64> = x.iter().map(|v| v - mx).collect();
    let dy: Vec<f64> = y.iter().map(|v| v - my).collect();
    let nx = numerics::norm(&dx);
    let ny = numerics::norm(&dy);
    if nx == 0.0 || ny == 0.0 {
        return Err(Error::ZeroVariance);
    }
    let r = numerics::dot(&dx, &dy) / (nx * ny);
    Ok(r.clamp(-1.0, 1.0))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pairing {
    pub source: usize,
    pub estimate: usize,
    pub correlation: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AssociationReport {
    /// Sorted by source index.
    pub pairs: Vec<Pairing>,
    /// `[source][estimate]` signed correlations.
    pub correlation_matrix: Matrix,
}

impl AssociationReport {
    pub fn estimate_for(&self, source: usize) -> Option<&Pairing> {
        self.pairs.iter().find(|p| p.source == source)
    }
}

/// Greedy pairing: repeatedly take the unmatched (source, estimate) pair with
/// the largest |ρ|; exact ties go to the lowest (source, estimate) indices.
pub fn associate(
    truth: &MultichannelSignal,
    estimates: &MultichannelSignal,
) -> Result<AssociationReport> {
    let n = truth.n_channels();
    if estimates.n_channels() != n {
        return Err(Error::DimensionMismatch(format!(
            "{n} sources but {} estimates",
            estimates.n_channels()
        )));
    }
    if estimates.n_samples() != truth.n_samples() {
        return Err(Error::DimensionMismatch(format!(
            "{} source samples but {} estimate samples",
            truth.n_samples(),
            estimates.n_samples()
        )));
    }
    let mut corr = Matrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            corr[(i, j)] = pearson(truth.channel(i), estimates.channel(j))?;
        }
    }
    Ok(AssociationReport {
        pairs: greedy_pairs(&corr),
        correlation_matrix: corr,
    })
}

fn greedy_pairs(corr: &Matrix) -> Vec<Pairing> {
    let n = corr.rows();
    let mut candidates: Vec<(usize, usize)> =
        (0..n).flat_map(|i| (0..n).map(move |j| (i, j))).collect();
    // stable sort keeps row-major order among exact ties
    candidates.sort_by(|a, b| corr[*b].abs().total_cmp(&corr[*a].abs()));
    let mut src_used = vec![false; n];
    let mut est_used = vec![false; n];
    let mut pairs = Vec::with_capacity(n);
    for (i, j) in candidates {
        if src_used[i] || est_used[j] {
            continue;
        }
        src_used[i] = true;
        est_used[j] = true;
        pairs.push(Pairing {
            source: i,
            estimate: j,
            correlation: corr[(i, j)],
        });
    }
    pairs.sort_by_key(|p| p.source);
    pairs
}

/// Associates the estimates of two separations with each other.
pub fn cross_method_correlations(
    a: &SeparationResult,
    b: &SeparationResult,
) -> Result<AssociationReport> {
    if a.estimates.len() != b.estimates.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} estimates vs {}",
            a.estimates.len(),
            b.estimates.len()
        )));
    }
    associate(&a.estimate_signal()?, &b.estimate_signal()?)
}

#[derive(Debug, Clone)]
pub struct MonteCarloConfig {
    pub sources: PulseTrainSpec,
    pub mixing: MixingMatrix,
    pub noise_sds: Vec<f64>,
    pub n_runs: usize,
    /// Run `r` uses noise seed `base_seed + r`.
    pub base_seed: u64,
    pub methods: Vec<MethodSpec>,
}

impl MonteCarloConfig {
    pub fn validate(&self) -> Result<()> {
        self.sources.validate()?;
        if self.n_runs == 0 {
            return Err(Error::Config("n_runs must be >= 1".into()));
        }
        if self.methods.is_empty() {
            return Err(Error::Config("at least one method is required".into()));
        }
        if self.noise_sds.is_empty() {
            return Err(Error::Config("at least one noise level is required".into()));
        }
        if let Some(sd) = self
            .noise_sds
            .iter()
            .find(|sd| !(**sd >= 0.0 && sd.is_finite()))
        {
            return Err(Error::Config(format!("noise sd {sd} must be >= 0")));
        }
        if self.mixing.dim() != self.sources.sources.len() {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} mixing matrix for {} sources",
                self.mixing.dim(),
                self.mixing.dim(),
                self.sources.sources.len()
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct RmsReport {
    pub method: MethodSpec,
    pub noise_sd: f64,
    pub n_runs: usize,
    /// `rms_series[source][n]`, in units of the unit-norm source.
    pub rms_series: Vec<Vec<f64>>,
}

/// Per-run squared error against the unit-norm truth, after pairing and sign
/// alignment. Indexed `[source][n]`.
pub fn squared_errors(
    truth_unit: &MultichannelSignal,
    result: &SeparationResult,
) -> Result<Vec<Vec<f64>>> {
    let est = result.estimate_signal()?;
    let est_unit = MultichannelSignal::new(
        est.channels()
            .iter()
            .map(|c| normalize_unit(c))
            .collect::<Result<Vec<_>>>()?,
    )?;
    let report = associate(truth_unit, &est_unit)?;
    Ok(report
        .pairs
        .iter()
        .map(|p| {
            let sign = if p.correlation < 0.0 { -1.0 } else { 1.0 };
            truth_unit
                .channel(p.source)
                .iter()
                .zip(est_unit.channel(p.estimate))
                .map(|(t, e)| (sign * e - t).powi(2))
                .collect()
        })
        .collect())
}

pub fn unit_truth(sources: &MultichannelSignal) -> Result<MultichannelSignal> {
    MultichannelSignal::new(
        sources
            .channels()
            .iter()
            .map(|c| normalize_unit(c))
            .collect::<Result<Vec<_>>>()?,
    )
}

/// RMS estimation error per sample over seeded noisy runs, one report per
/// (noise level, method) in that nesting order.
///
/// Runs execute in parallel, but per-run errors are summed in run order so the
/// output is bitwise reproducible.
pub fn monte_carlo_rms(cfg: &MonteCarloConfig) -> Result<Vec<RmsReport>> {
    cfg.validate()?;
    let sources = signals::generate_sources(&cfg.sources)?;
    let clean = signals::mix(&sources, &cfg.mixing)?;
    let truth = unit_truth(&sources)?;
    let n_src = sources.n_channels();
    let m = sources.n_samples();

    let mut reports = Vec::with_capacity(cfg.noise_sds.len() * cfg.methods.len());
    for &sd in &cfg.noise_sds {
        let per_run: Vec<Vec<Vec<Vec<f64>>>> = (0..cfg.n_runs)
            .into_par_iter()
            .map(|r| {
                let noise = NoiseSpec {
                    sd,
                    seed: cfg.base_seed.wrapping_add(r as u64),
                };
                let noisy = signals::add_noise(&clean, noise)?;
                cfg.methods
                    .iter()
                    .map(|spec| squared_errors(&truth, &separation::separate(&noisy, spec)?))
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;

        for (k, spec) in cfg.methods.iter().enumerate() {
            let mut acc = vec![vec![0.0; m]; n_src];
            for run in &per_run {
                for (a, e) in acc.iter_mut().zip(&run[k]) {
                    for (x, y) in a.iter_mut().zip(e) {
                        *x += y;
                    }
                }
            }
            let runs = cfg.n_runs as f64;
            let rms_series = acc
                .into_iter()
                .map(|a| a.into_iter().map(|v| (v / runs).sqrt()).collect())
                .collect();
            reports.push(RmsReport {
                method: spec.clone(),
                noise_sd: sd,
                n_runs: cfg.n_runs,
                rms_series,
            });
        }
    }
    Ok(reports)
}
