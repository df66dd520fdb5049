//! Multichannel signal container, sparse pulse-train generation, linear mixing,
//! seeded Gaussian noise and centering.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{self, Matrix};

/// `n_channels × n_samples` real data. Row `i` is channel `i`; column `n` is the
/// phase-space point `z[n]`.
#[derive(Debug, Clone, PartialEq)]
pub struct MultichannelSignal {
    channels: Vec<Vec<f64>>,
}

impl MultichannelSignal {
    pub fn new(channels: Vec<Vec<f64>>) -> Result<Self> {
        let first = channels
            .first()
            .ok_or_else(|| Error::DimensionMismatch("signal needs at least one channel".into()))?;
        let m = first.len();
        if m == 0 {
            return Err(Error::DimensionMismatch(
                "signal needs at least one sample".into(),
            ));
        }
        if let Some((i, c)) = channels.iter().enumerate().find(|(_, c)| c.len() != m) {
            return Err(Error::DimensionMismatch(format!(
                "channel {i} has {} samples, expected {m}",
                c.len()
            )));
        }
        if channels.iter().flatten().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("signal"));
        }
        Ok(MultichannelSignal { channels })
    }

    /// Builds a signal from phase-space points (one `Vec` per sample).
    pub fn from_points(points: &[Vec<f64>]) -> Result<Self> {
        let n = points.first().map_or(0, Vec::len);
        let channels = (0..n)
            .map(|i| {
                points
                    .iter()
                    .map(|p| p.get(i).copied().unwrap_or(f64::NAN))
                    .collect()
            })
            .collect();
        Self::new(channels)
    }

    pub fn n_channels(&self) -> usize {
        self.channels.len()
    }

    pub fn n_samples(&self) -> usize {
        self.channels[0].len()
    }

    pub fn channel(&self, i: usize) -> &[f64] {
        &self.channels[i]
    }

    pub fn channels(&self) -> &[Vec<f64>] {
        &self.channels
    }

    pub fn into_channels(self) -> Vec<Vec<f64>> {
        self.channels
    }

    /// The phase-space point at sample `n`.
    pub fn point(&self, n: usize) -> Vec<f64> {
        self.channels.iter().map(|c| c[n]).collect()
    }

    /// Σ over channels and samples of x².
    pub fn energy(&self) -> f64 {
        self.channels.iter().flatten().map(|x| x * x).sum()
    }

    pub fn max_abs(&self) -> f64 {
        self.channels
            .iter()
            .flatten()
            .fold(0.0, |m, x| m.max(x.abs()))
    }

    pub fn scaled(&self, c: f64) -> MultichannelSignal {
        MultichannelSignal {
            channels: self
                .channels
                .iter()
                .map(|ch| ch.iter().map(|x| c * x).collect())
                .collect(),
        }
    }

    /// Applies `out = T · z[n]` to every sample.
    pub fn transform(&self, t: &Matrix) -> Result<MultichannelSignal> {
        if t.cols() != self.n_channels() {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} transform applied to {} channels",
                t.rows(),
                t.cols(),
                self.n_channels()
            )));
        }
        let m = self.n_samples();
        let channels = t
            .row_iter()
            .map(|row| {
                let mut out = vec![0.0; m];
                for (coef, ch) in row.iter().zip(&self.channels) {
                    if *coef != 0.0 {
                        numerics::axpy(*coef, ch, &mut out);
                    }
                }
                out
            })
            .collect();
        Ok(MultichannelSignal { channels })
    }
}

/// Square mixing matrix `A` with `z = A s`.
#[derive(Debug, Clone, PartialEq)]
pub struct MixingMatrix(Matrix);

impl MixingMatrix {
    pub fn new(m: Matrix) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::DimensionMismatch(format!(
                "mixing matrix must be square, got {}x{}",
                m.rows(),
                m.cols()
            )));
        }
        Ok(MixingMatrix(m))
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        Self::new(Matrix::from_rows(rows)?)
    }

    pub fn identity(n: usize) -> Self {
        MixingMatrix(Matrix::identity(n))
    }

    /// Parses the inline form `"1.3,2;1,3"` (rows separated by `;`).
    pub fn parse_inline(s: &str) -> Result<Self> {
        let rows = s
            .split(';')
            .map(|row| {
                row.split(',')
                    .map(|tok| {
                        tok.trim().parse::<f64>().map_err(|_| {
                            Error::Config(format!("bad mixing matrix entry {:?}", tok.trim()))
                        })
                    })
                    .collect::<Result<Vec<f64>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        Self::from_rows(&rows)
    }

    pub fn matrix(&self) -> &Matrix {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.rows()
    }

    pub fn inverse(&self) -> Result<MixingMatrix> {
        Ok(MixingMatrix(self.0.inverse()?))
    }

    /// Column `j`: the phase-space vector of source `j`.
    pub fn source_vector(&self, j: usize) -> Vec<f64> {
        self.0.column(j)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Pulse {
    pub center: usize,
    pub width: f64,
    pub amplitude: f64,
}

/// Per-source lists of Gaussian pulses over `n_samples` samples.
#[derive(Debug, Clone, PartialEq)]
pub struct PulseTrainSpec {
    pub n_samples: usize,
    pub sources: Vec<Vec<Pulse>>,
}

impl PulseTrainSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n_samples == 0 {
            return Err(Error::InvalidSpec("n_samples must be positive".into()));
        }
        if self.sources.is_empty() {
            return Err(Error::InvalidSpec("at least one source is required".into()));
        }
        for (j, pulses) in self.sources.iter().enumerate() {
            for (k, p) in pulses.iter().enumerate() {
                let at = format!("sources[{j}].pulses[{k}]");
                if p.center >= self.n_samples {
                    return Err(Error::InvalidSpec(format!(
                        "{at}.center {} outside [0, {})",
                        p.center, self.n_samples
                    )));
                }
                if !(p.width > 0.0 && p.width.is_finite()) {
                    return Err(Error::InvalidSpec(format!("{at}.width must be > 0")));
                }
                if !p.amplitude.is_finite() {
                    return Err(Error::InvalidSpec(format!("{at}.amplitude must be finite")));
                }
            }
        }
        Ok(())
    }
}

/// Noise standard deviation plus the seed of its deterministic stream.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseSpec {
    pub sd: f64,
    pub seed: u64,
}

/// Sums `a·exp(−(n−c)²/(2w²))` per pulse for each source channel.
pub fn generate_sources(spec: &PulseTrainSpec) -> Result<MultichannelSignal> {
    spec.validate()?;
    let channels = spec
        .sources
        .iter()
        .map(|pulses| {
            let mut ch = vec![0.0; spec.n_samples];
            for p in pulses {
                let c = p.center as f64;
                for (n, x) in ch.iter_mut().enumerate() {
                    let d = (n as f64 - c) / p.width;
                    *x += p.amplitude * (-0.5 * d * d).exp();
                }
            }
            ch
        })
        .collect();
    MultichannelSignal::new(channels)
}

/// `out[i][n] = Σ_j a[i][j] · sources[j][n]`.
pub fn mix(sources: &MultichannelSignal, a: &MixingMatrix) -> Result<MultichannelSignal> {
    if a.dim() != sources.n_channels() {
        return Err(Error::DimensionMismatch(format!(
            "{}x{} mixing matrix for {} sources",
            a.dim(),
            a.dim(),
            sources.n_channels()
        )));
    }
    sources.transform(a.matrix())
}

/// Adds i.i.d. `N(0, sd²)` to every sample, channel by channel, from a ChaCha8
/// stream seeded with `noise.seed`.
pub fn add_noise(signal: &MultichannelSignal, noise: NoiseSpec) -> Result<MultichannelSignal> {
    if !(noise.sd >= 0.0 && noise.sd.is_finite()) {
        return Err(Error::InvalidSpec(format!(
            "noise sd {} must be >= 0",
            noise.sd
        )));
    }
    if noise.sd == 0.0 {
        return Ok(signal.clone());
    }
    let normal = Normal::new(0.0, noise.sd).map_err(|e| Error::InvalidSpec(e.to_string()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(noise.seed);
    let channels = signal
        .channels
        .iter()
        .map(|ch| ch.iter().map(|x| x + normal.sample(&mut rng)).collect())
        .collect();
    Ok(MultichannelSignal { channels })
}

pub fn channel_means(signal: &MultichannelSignal) -> Vec<f64> {
    let m = signal.n_samples() as f64;
    signal
        .channels
        .iter()
        .map(|c| c.iter().sum::<f64>() / m)
        .collect()
}

/// Subtracts each channel's mean.
pub fn center(signal: &MultichannelSignal) -> MultichannelSignal {
    let channels = signal
        .channels
        .iter()
        .map(|ch| {
            let mean = ch.iter().sum::<f64>() / ch.len() as f64;
            let mut out: Vec<f64> = ch.iter().map(|x| x - mean).collect();
            // second pass removes the rounding left by the first
            let resid = out.iter().sum::<f64>() / out.len() as f64;
            out.iter_mut().for_each(|x| *x -= resid);
            out
        })
        .collect();
    MultichannelSignal { channels }
}

/// Reference source sets used by the examples, the CLI presets and the test suites.
///
/// Pulse positions and widths are fixed here; only the 1.0 : 0.1 amplitude
/// ratio of the two-source fixture has an external reference.
pub mod fixtures {
    use super::*;

    pub const N_SAMPLES: usize = 1000;

    /// The mixing matrix for the introductory two-source example.
    pub fn intro_mixing() -> MixingMatrix {
        MixingMatrix::from_rows(&[[1.3, 2.0], [1.0, 3.0]]).expect("constant matrix")
    }

    /// The mixing matrix for the correlated and coincident-peak examples.
    pub fn correlated_mixing() -> MixingMatrix {
        MixingMatrix::from_rows(&[[6.5, 1.0], [3.0, 1.0]]).expect("constant matrix")
    }

    fn pulse(center: usize, width: f64, amplitude: f64) -> Pulse {
        Pulse {
            center,
            width,
            amplitude,
        }
    }

    /// Two uncorrelated sources with disjoint supports: source 1 peaks at 1.0,
    /// source 2 at 0.1.
    pub fn uncorrelated() -> PulseTrainSpec {
        PulseTrainSpec {
            n_samples: N_SAMPLES,
            sources: vec![
                vec![pulse(120, 4.0, 1.0), pulse(620, 4.0, 1.0)],
                vec![pulse(370, 20.0, 0.1), pulse(870, 20.0, 0.1)],
            ],
        }
    }

    /// Two sparse sources whose main peaks are isolated but which overlap
    /// elsewhere, so their sample cross-product is nonzero.
    pub fn correlated() -> PulseTrainSpec {
        PulseTrainSpec {
            n_samples: N_SAMPLES,
            sources: vec![
                vec![
                    pulse(150, 6.0, 1.0),
                    pulse(500, 10.0, 0.5),
                    pulse(800, 8.0, 0.6),
                ],
                vec![
                    pulse(350, 6.0, 1.0),
                    pulse(505, 10.0, 0.6),
                    pulse(650, 8.0, 0.7),
                ],
            ],
        }
    }

    /// Correlated sources with one shared pulse center.
    pub fn coincident_peaks() -> PulseTrainSpec {
        PulseTrainSpec {
            n_samples: N_SAMPLES,
            sources: vec![
                vec![
                    pulse(150, 6.0, 0.8),
                    pulse(500, 6.0, 1.0),
                    pulse(820, 6.0, 0.8),
                ],
                vec![
                    pulse(320, 6.0, 0.8),
                    pulse(500, 6.0, 1.0),
                    pulse(680, 6.0, 0.8),
                ],
            ],
        }
    }
}
