//! Python bindings. Signals cross the boundary as lists of channels
//! (`list[list[float]]`, one inner list per channel).

use pyo3::exceptions::{PyNotImplementedError, PyOSError, PyValueError};
use pyo3::prelude::*;

use phasemax::evaluation;
use phasemax::ingest::{self, ChannelSelection, EdfOptions, TextOptions};
use phasemax::separation::{self, MethodSpec, SeparationMethod};
use phasemax::signals::{
    self, fixtures, MixingMatrix, MultichannelSignal, NoiseSpec, Pulse, PulseTrainSpec,
};
use phasemax::whitening::{self, WhiteningMethod};
use phasemax::{pca, Error, RunConfig};

type Channels = Vec<Vec<f64>>;

fn to_py(err: Error) -> PyErr {
    match err {
        Error::Io { .. } => PyOSError::new_err(err.to_string()),
        Error::UnsupportedFeature(_) => PyNotImplementedError::new_err(err.to_string()),
        _ => PyValueError::new_err(err.to_string()),
    }
}

fn signal(channels: Channels) -> PyResult<MultichannelSignal> {
    MultichannelSignal::new(channels).map_err(to_py)
}

fn parse<T: std::str::FromStr<Err = Error>>(s: &str) -> PyResult<T> {
    s.parse().map_err(to_py)
}

/// Outcome of a separation: one estimated source per entry, in extraction order.
#[pyclass(module = "phasemax_py", get_all, frozen)]
struct Separation {
    method: String,
    whitening: String,
    centered: bool,
    estimates: Channels,
    directions: Channels,
    /// Sample of the phase-space maximum (maximum method only).
    argmax_indices: Vec<Option<usize>>,
    /// Eigenvalues (PCA only).
    eigenvalues: Vec<Option<f64>>,
    residual_energy: Vec<f64>,
    /// Rows of the whitening transform applied to the channels.
    whitening_matrix: Channels,
}

#[pymethods]
impl Separation {
    fn __len__(&self) -> usize {
        self.estimates.len()
    }

    fn __repr__(&self) -> String {
        format!(
            "Separation(method={:?}, whitening={:?}, centered={}, n_estimates={})",
            self.method,
            self.whitening,
            self.centered,
            self.estimates.len()
        )
    }
}

impl From<separation::SeparationResult> for Separation {
    fn from(r: separation::SeparationResult) -> Self {
        Separation {
            method: r.method.to_string(),
            whitening: r.whitening.method.to_string(),
            centered: r.centered,
            directions: r.estimates.iter().map(|e| e.direction.clone()).collect(),
            argmax_indices: r.estimates.iter().map(|e| e.argmax_index).collect(),
            eigenvalues: r.estimates.iter().map(|e| e.eigenvalue).collect(),
            estimates: r.estimates.into_iter().map(|e| e.series).collect(),
            residual_energy: r.residual_energy,
            whitening_matrix: r.whitening.forward.to_rows(),
        }
    }
}

/// Sum-of-Gaussian-pulse sources; `sources[j]` is a list of
/// `(center, width, amplitude)` tuples.
#[pyfunction]
fn generate_sources(n_samples: usize, sources: Vec<Vec<(usize, f64, f64)>>) -> PyResult<Channels> {
    let spec = PulseTrainSpec {
        n_samples,
        sources: sources
            .into_iter()
            .map(|ps| {
                ps.into_iter()
                    .map(|(center, width, amplitude)| Pulse {
                        center,
                        width,
                        amplitude,
                    })
                    .collect()
            })
            .collect(),
    };
    Ok(signals::generate_sources(&spec)
        .map_err(to_py)?
        .into_channels())
}

/// Built-in source sets: "uncorrelated", "correlated", "coincident-peaks".
#[pyfunction]
fn fixture(name: &str) -> PyResult<Channels> {
    let spec = match name {
        "uncorrelated" => fixtures::uncorrelated(),
        "correlated" => fixtures::correlated(),
        "coincident-peaks" => fixtures::coincident_peaks(),
        other => return Err(PyValueError::new_err(format!("unknown fixture {other:?}"))),
    };
    Ok(signals::generate_sources(&spec)
        .map_err(to_py)?
        .into_channels())
}

#[pyfunction]
fn mix(sources: Channels, matrix: Channels) -> PyResult<Channels> {
    let a = MixingMatrix::from_rows(&matrix).map_err(to_py)?;
    Ok(signals::mix(&signal(sources)?, &a)
        .map_err(to_py)?
        .into_channels())
}

#[pyfunction]
#[pyo3(signature = (channels, sd, seed = 0))]
fn add_noise(channels: Channels, sd: f64, seed: u64) -> PyResult<Channels> {
    Ok(
        signals::add_noise(&signal(channels)?, NoiseSpec { sd, seed })
            .map_err(to_py)?
            .into_channels(),
    )
}

#[pyfunction]
fn center(channels: Channels) -> PyResult<Channels> {
    Ok(signals::center(&signal(channels)?).into_channels())
}

/// Returns `(whitened_channels, transform_rows)`. `order` is 0-based.
#[pyfunction]
#[pyo3(signature = (channels, method = "gram-schmidt", order = None))]
fn whiten(
    channels: Channels,
    method: &str,
    order: Option<Vec<usize>>,
) -> PyResult<(Channels, Channels)> {
    let (e, t) =
        whitening::whiten(&signal(channels)?, parse(method)?, order.as_deref()).map_err(to_py)?;
    Ok((e.into_channels(), t.forward.to_rows()))
}

/// Maximum method (`method="max"`) or PCA (`method="pca"`).
#[pyfunction]
#[pyo3(signature = (channels, method = "max", whiten = "gram-schmidt", order = None, center = false, max_sources = None))]
fn separate(
    channels: Channels,
    method: &str,
    whiten: &str,
    order: Option<Vec<usize>>,
    center: bool,
    max_sources: Option<usize>,
) -> PyResult<Separation> {
    let z = signal(channels)?;
    let method: SeparationMethod = parse(method)?;
    let whitening: WhiteningMethod = parse(whiten)?;
    let result = match method {
        SeparationMethod::Pca => pca::pca_separate(&z, center),
        SeparationMethod::Max => {
            let input = if center { signals::center(&z) } else { z };
            let opts = separation::SeparationOptions {
                whitening,
                order,
                max_sources,
                ..Default::default()
            };
            separation::separate_maximum(&input, &opts).map(|mut r| {
                r.centered = center;
                r
            })
        }
    };
    let mut result = result.map_err(to_py)?;
    if let Some(k) = max_sources {
        result.estimates.truncate(k);
    }
    Ok(result.into())
}

#[pyfunction]
#[pyo3(signature = (channels, centered = false))]
fn pca_separate(channels: Channels, centered: bool) -> PyResult<Separation> {
    Ok(pca::pca_separate(&signal(channels)?, centered)
        .map_err(to_py)?
        .into())
}

#[pyfunction]
fn pearson(x: Vec<f64>, y: Vec<f64>) -> PyResult<f64> {
    evaluation::pearson(&x, &y).map_err(to_py)
}

/// Greedy pairing by |correlation|: list of `(source, estimate, correlation)`, 0-based.
#[pyfunction]
fn associate(truth: Channels, estimates: Channels) -> PyResult<Vec<(usize, usize, f64)>> {
    let rep = evaluation::associate(&signal(truth)?, &signal(estimates)?).map_err(to_py)?;
    Ok(rep
        .pairs
        .iter()
        .map(|p| (p.source, p.estimate, p.correlation))
        .collect())
}

/// Returns `(channels, labels, sample_rate)`; `channels` is 1-based.
#[pyfunction]
#[pyo3(signature = (path, channels = None, max_samples = None))]
fn read_edf(
    path: std::path::PathBuf,
    channels: Option<Vec<usize>>,
    max_samples: Option<usize>,
) -> PyResult<(Channels, Vec<String>, Option<f64>)> {
    let opts = EdfOptions {
        channels: channels.map_or(ChannelSelection::All, ChannelSelection::Indices),
        max_samples,
    };
    let rec = ingest::read_edf(path, &opts).map_err(to_py)?;
    Ok((rec.signal.into_channels(), rec.labels, rec.sample_rate))
}

/// Returns `(channels, labels)`.
#[pyfunction]
#[pyo3(signature = (path, skip_columns = 0, max_samples = None, delimiter = None))]
fn read_matrix_text(
    path: std::path::PathBuf,
    skip_columns: usize,
    max_samples: Option<usize>,
    delimiter: Option<char>,
) -> PyResult<(Channels, Vec<String>)> {
    let opts = TextOptions {
        delimiter,
        skip_columns,
        max_samples,
    };
    let rec = ingest::read_matrix_text(path, &opts).map_err(to_py)?;
    Ok((rec.signal.into_channels(), rec.labels))
}

/// Runs the `[montecarlo]` section of a TOML run config. Returns one
/// `(method_label, noise_sd, rms_series)` tuple per noise level and method.
#[pyfunction]
fn monte_carlo(py: Python<'_>, config_toml: &str) -> PyResult<Vec<(String, f64, Channels)>> {
    let cfg = RunConfig::from_toml(config_toml).map_err(to_py)?;
    let mc = cfg.monte_carlo().map_err(to_py)?;
    let reports = py
        .detach(|| evaluation::monte_carlo_rms(&mc))
        .map_err(to_py)?;
    Ok(reports
        .into_iter()
        .map(|r| (r.method.label(), r.noise_sd, r.rms_series))
        .collect())
}

#[pyfunction]
fn method_label(method: &str, whiten: &str, centered: bool) -> PyResult<String> {
    let method: SeparationMethod = parse(method)?;
    let spec = match method {
        SeparationMethod::Pca => MethodSpec::pca(),
        SeparationMethod::Max => MethodSpec::maximum(parse(whiten)?),
    };
    Ok(MethodSpec { centered, ..spec }.label())
}

#[pymodule]
fn phasemax_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Separation>()?;
    m.add_function(wrap_pyfunction!(generate_sources, m)?)?;
    m.add_function(wrap_pyfunction!(fixture, m)?)?;
    m.add_function(wrap_pyfunction!(mix, m)?)?;
    m.add_function(wrap_pyfunction!(add_noise, m)?)?;
    m.add_function(wrap_pyfunction!(center, m)?)?;
    m.add_function(wrap_pyfunction!(whiten, m)?)?;
    m.add_function(wrap_pyfunction!(separate, m)?)?;
    m.add_function(wrap_pyfunction!(pca_separate, m)?)?;
    m.add_function(wrap_pyfunction!(pearson, m)?)?;
    m.add_function(wrap_pyfunction!(associate, m)?)?;
    m.add_function(wrap_pyfunction!(read_edf, m)?)?;
    m.add_function(wrap_pyfunction!(read_matrix_text, m)?)?;
    m.add_function(wrap_pyfunction!(monte_carlo, m)?)?;
    m.add_function(wrap_pyfunction!(method_label, m)?)?;
    Ok(())
}
