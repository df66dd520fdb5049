//! TOML run configuration shared by `gen` and `montecarlo`.
//!
//! ```toml
//! preset = "uncorrelated"          # or explicit [[sources]] tables
//!
//! [mixing]
//! matrix = [[1.0, 0.0], [0.0, 1.0]] # or inline = "1,0;0,1"
//!
//! [noise]
//! sd = 0.001
//! seed = 7
//!
//! [montecarlo]
//! runs = 200
//! seed = 1000
//! noise_sd = [0.001, 0.005, 0.0075, 0.01]
//! [[montecarlo.methods]]
//! method = "max"
//! whiten = "gram-schmidt"
//! order = [1, 2]
//! [[montecarlo.methods]]
//! method = "pca"
//! ```
//!
//! Channel orders are 1-based here, as everywhere a user types them.

use std::path::Path;

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::evaluation::MonteCarloConfig;
use crate::separation::{MethodSpec, SeparationMethod};
use crate::signals::{fixtures, MixingMatrix, NoiseSpec, Pulse, PulseTrainSpec};
use crate::whitening::WhiteningMethod;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Preset {
    Uncorrelated,
    Correlated,
    CoincidentPeaks,
}

impl Preset {
    pub fn spec(self) -> PulseTrainSpec {
        match self {
            Preset::Uncorrelated => fixtures::uncorrelated(),
            Preset::Correlated => fixtures::correlated(),
            Preset::CoincidentPeaks => fixtures::coincident_peaks(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SourceConfig {
    pub pulses: Vec<Pulse>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MixingConfig {
    pub matrix: Option<Vec<Vec<f64>>>,
    pub inline: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseConfig {
    pub sd: f64,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MethodConfig {
    pub method: SeparationMethod,
    #[serde(default = "default_whiten")]
    pub whiten: WhiteningMethod,
    pub order: Option<Vec<usize>>,
    #[serde(default)]
    pub center: bool,
}

fn default_whiten() -> WhiteningMethod {
    WhiteningMethod::GramSchmidt
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MonteCarloSection {
    pub runs: usize,
    #[serde(default)]
    pub seed: u64,
    pub noise_sd: Vec<f64>,
    pub methods: Vec<MethodConfig>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub preset: Option<Preset>,
    pub n_samples: Option<usize>,
    pub sources: Option<Vec<SourceConfig>>,
    pub mixing: Option<MixingConfig>,
    pub noise: Option<NoiseConfig>,
    pub montecarlo: Option<MonteCarloSection>,
}

/// Converts 1-based user channel numbers to 0-based indices.
pub fn zero_based(order: &[usize]) -> Result<Vec<usize>> {
    order
        .iter()
        .map(|&k| {
            k.checked_sub(1)
                .ok_or_else(|| Error::Config("channel numbers start at 1".into()))
        })
        .collect()
}

impl MethodConfig {
    pub fn to_spec(&self) -> Result<MethodSpec> {
        Ok(MethodSpec {
            method: self.method,
            whitening: if self.method == SeparationMethod::Pca {
                WhiteningMethod::None
            } else {
                self.whiten
            },
            order: self.order.as_deref().map(zero_based).transpose()?,
            centered: self.center,
        })
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text)
    }

    /// Checks everything that can be checked without running anything.
    pub fn validate(&self) -> Result<()> {
        let spec = self.pulse_spec()?;
        spec.validate()?;
        let n = spec.sources.len();
        let a = self.mixing_matrix(n)?;
        if a.dim() != n {
            return Err(Error::Config(format!(
                "mixing: {}x{} matrix for {n} sources",
                a.dim(),
                a.dim()
            )));
        }
        if let Some(noise) = &self.noise {
            if !(noise.sd >= 0.0 && noise.sd.is_finite()) {
                return Err(Error::Config("noise.sd must be >= 0".into()));
            }
        }
        if let Some(mc) = &self.montecarlo {
            if mc.runs == 0 {
                return Err(Error::Config("montecarlo.runs must be >= 1".into()));
            }
            if mc.noise_sd.is_empty() || mc.noise_sd.iter().any(|s| !(*s >= 0.0 && s.is_finite())) {
                return Err(Error::Config(
                    "montecarlo.noise_sd must be a non-empty list of values >= 0".into(),
                ));
            }
            if mc.methods.is_empty() {
                return Err(Error::Config("montecarlo.methods must not be empty".into()));
            }
            for (k, m) in mc.methods.iter().enumerate() {
                let spec = m.to_spec()?;
                if let Some(order) = &spec.order {
                    let mut sorted = order.clone();
                    sorted.sort_unstable();
                    if sorted != (0..n).collect::<Vec<_>>() {
                        return Err(Error::Config(format!(
                            "montecarlo.methods[{k}].order must be a permutation of 1..={n}"
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    pub fn pulse_spec(&self) -> Result<PulseTrainSpec> {
        match (&self.preset, &self.sources) {
            (Some(_), Some(_)) => Err(Error::Config(
                "give either `preset` or `sources`, not both".into(),
            )),
            (None, None) => Err(Error::Config("missing `preset` or `sources`".into())),
            (Some(p), None) => {
                let mut spec = p.spec();
                if let Some(m) = self.n_samples {
                    spec.n_samples = m;
                }
                Ok(spec)
            }
            (None, Some(src)) => Ok(PulseTrainSpec {
                n_samples: self.n_samples.ok_or_else(|| {
                    Error::Config("`n_samples` is required with `sources`".into())
                })?,
                sources: src.iter().map(|s| s.pulses.clone()).collect(),
            }),
        }
    }

    /// The configured mixing matrix, or the identity when none is given.
    pub fn mixing_matrix(&self, n: usize) -> Result<MixingMatrix> {
        match &self.mixing {
            None => Ok(MixingMatrix::identity(n)),
            Some(MixingConfig {
                matrix: Some(m),
                inline: None,
            }) => {
                MixingMatrix::from_rows(m).map_err(|e| Error::Config(format!("mixing.matrix: {e}")))
            }
            Some(MixingConfig {
                matrix: None,
                inline: Some(s),
            }) => MixingMatrix::parse_inline(s),
            Some(_) => Err(Error::Config(
                "mixing needs exactly one of `matrix` or `inline`".into(),
            )),
        }
    }

    pub fn noise_spec(&self) -> Option<NoiseSpec> {
        self.noise.as_ref().map(|n| NoiseSpec {
            sd: n.sd,
            seed: n.seed,
        })
    }

    pub fn monte_carlo(&self) -> Result<MonteCarloConfig> {
        let mc = self
            .montecarlo
            .as_ref()
            .ok_or_else(|| Error::Config("missing [montecarlo] section".into()))?;
        let sources = self.pulse_spec()?;
        let mixing = self.mixing_matrix(sources.sources.len())?;
        Ok(MonteCarloConfig {
            sources,
            mixing,
            noise_sds: mc.noise_sd.clone(),
            n_runs: mc.runs,
            base_seed: mc.seed,
            methods: mc
                .methods
                .iter()
                .map(MethodConfig::to_spec)
                .collect::<Result<_>>()?,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const EXAMPLE: &str = r#"
preset = "uncorrelated"

[mixing]
inline = "1,0;0,1"

[noise]
sd = 0.001
seed = 7

[montecarlo]
runs = 10
seed = 1000
noise_sd = [0.001, 0.01]

[[montecarlo.methods]]
method = "max"
whiten = "gram-schmidt"
order = [1, 2]

[[montecarlo.methods]]
method = "pca"
"#;

    #[test]
    fn example_parses() {
        let cfg = RunConfig::from_toml(EXAMPLE).unwrap();
        let mc = cfg.monte_carlo().unwrap();
        assert_eq!(mc.n_runs, 10);
        assert_eq!(mc.methods[0].order, Some(vec![0, 1]));
        assert_eq!(mc.methods[1].method, SeparationMethod::Pca);
        assert_eq!(mc.mixing, MixingMatrix::identity(2));
        assert_eq!(cfg.noise_spec(), Some(NoiseSpec { sd: 0.001, seed: 7 }));
    }

    #[test]
    fn shipped_noise_sweep_config_is_valid() {
        let cfg = RunConfig::from_toml(include_str!("../../../docs/montecarlo.toml")).unwrap();
        let mc = cfg.monte_carlo().unwrap();
        assert_eq!(mc.noise_sds, vec![0.001, 0.005, 0.0075, 0.01]);
        assert_eq!(mc.methods.len(), 2);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let text = EXAMPLE.replace("seed = 7", "seed = 7\ncolour = 3");
        assert!(
            matches!(RunConfig::from_toml(&text), Err(Error::Config(m)) if m.contains("colour"))
        );
    }

    #[test]
    fn explicit_sources_validate_fields() {
        let text = r#"
n_samples = 100
[[sources]]
pulses = [{ center = 50, width = 0.0, amplitude = 1.0 }]
"#;
        assert!(
            matches!(RunConfig::from_toml(text), Err(Error::InvalidSpec(m)) if m.contains("width"))
        );
        let text = text.replace("width = 0.0", "width = 5.0");
        let cfg = RunConfig::from_toml(&text).unwrap();
        assert_eq!(cfg.pulse_spec().unwrap().n_samples, 100);
    }

    #[test]
    fn bad_combinations() {
        assert!(RunConfig::from_toml("").is_err());
        let both = "preset = \"correlated\"\nn_samples = 10\n[[sources]]\npulses = []\n";
        assert!(RunConfig::from_toml(both).is_err());
        let wrong_dim = "preset = \"correlated\"\n[mixing]\ninline = \"1\"\n";
        assert!(RunConfig::from_toml(wrong_dim).is_err());
        let bad_order = EXAMPLE.replace("order = [1, 2]", "order = [1, 1]");
        assert!(RunConfig::from_toml(&bad_order).is_err());
    }
}
