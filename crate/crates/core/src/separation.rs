//! The maximum method.
//!
//! The multichannel signal is read as a trajectory `z[n]` in `N`-space. The
//! sample farthest from the origin gives the direction of the most prominent
//! source; projecting every sample onto that direction estimates the source,
//! and subtracting the projected component (deflation) leaves a trajectory in
//! the orthogonal complement, on which the step repeats.
//!
//! Without whitening the first estimate of a pair of sources whose directions
//! are not orthogonal carries a leak term `s_2·|R_2|·(R̂_1·R̂_2)`; after
//! whitening, uncorrelated sources lie on orthogonal directions and every
//! estimate is a scaled copy of one source.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics;
use crate::pca;
use crate::signals::{self, MultichannelSignal};
use crate::whitening::{self, WhiteningMethod, WhiteningTransform};

/// Default stop: residual energy below this fraction of the whitened input energy.
pub const DEFAULT_ENERGY_FLOOR: f64 = 1e-12;

// Below this every sample counts as zero.
const ZERO_RADIUS: f64 = 1e-300;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SeparationMethod {
    #[serde(alias = "maximum")]
    Max,
    Pca,
}

impl SeparationMethod {
    pub fn as_str(self) -> &'static str {
        match self {
            SeparationMethod::Max => "max",
            SeparationMethod::Pca => "pca",
        }
    }
}

impl fmt::Display for SeparationMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SeparationMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "max" | "maximum" => Ok(SeparationMethod::Max),
            "pca" => Ok(SeparationMethod::Pca),
            other => Err(Error::Config(format!(
                "unknown separation method {other:?}"
            ))),
        }
    }
}

/// Direction of the trajectory point farthest from the origin.
#[derive(Debug, Clone, PartialEq)]
pub struct DirectionEstimate {
    /// Unit vector `z[n_max] / r[n_max]`.
    pub direction: Vec<f64>,
    pub argmax_index: usize,
    pub radius: f64,
}

/// One separated component.
#[derive(Debug, Clone, PartialEq)]
pub struct Estimate {
    /// Unit direction in the coordinates the method worked in (whitened for
    /// the maximum method, raw for PCA).
    pub direction: Vec<f64>,
    pub series: Vec<f64>,
    pub argmax_index: Option<usize>,
    pub radius: Option<f64>,
    pub eigenvalue: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct SeparationResult {
    pub estimates: Vec<Estimate>,
    /// Total sum of squares before the first and after each extraction.
    pub residual_energy: Vec<f64>,
    pub method: SeparationMethod,
    pub whitening: WhiteningTransform,
    pub centered: bool,
}

impl SeparationResult {
    /// Estimates as channels of a signal.
    pub fn estimate_signal(&self) -> Result<MultichannelSignal> {
        MultichannelSignal::new(self.estimates.iter().map(|e| e.series.clone()).collect())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SeparationOptions {
    pub whitening: WhiteningMethod,
    /// 0-based Gram-Schmidt channel order; natural order when `None`.
    pub order: Option<Vec<usize>>,
    /// Defaults to the channel count.
    pub max_sources: Option<usize>,
    pub energy_floor: f64,
}

impl Default for SeparationOptions {
    fn default() -> Self {
        SeparationOptions {
            whitening: WhiteningMethod::GramSchmidt,
            order: None,
            max_sources: None,
            energy_floor: DEFAULT_ENERGY_FLOOR,
        }
    }
}

/// `r[n] = ‖z[n]‖`.
pub fn radius_series(signal: &MultichannelSignal) -> Vec<f64> {
    (0..signal.n_samples())
        .map(|n| numerics::norm(&signal.point(n)))
        .collect()
}

/// Earliest sample with the largest radius.
pub fn find_maximum_direction(signal: &MultichannelSignal) -> Result<DirectionEstimate> {
    let r = radius_series(signal);
    let mut best = 0;
    for (n, &v) in r.iter().enumerate() {
        if v > r[best] {
            best = n;
        }
    }
    let radius = r[best];
    if radius <= ZERO_RADIUS {
        return Err(Error::ZeroSignal);
    }
    let direction = signal.point(best).into_iter().map(|x| x / radius).collect();
    Ok(DirectionEstimate {
        direction,
        argmax_index: best,
        radius,
    })
}

/// `s̃[n] = d · z[n]`.
pub fn project_source(signal: &MultichannelSignal, d: &DirectionEstimate) -> Result<Vec<f64>> {
    check_direction(signal, &d.direction)?;
    let m = signal.n_samples();
    let mut out = vec![0.0; m];
    for (w, ch) in d.direction.iter().zip(signal.channels()) {
        numerics::axpy(*w, ch, &mut out);
    }
    Ok(out)
}

/// `z′[n] = z[n] − series[n]·d`.
pub fn deflate(
    signal: &MultichannelSignal,
    d: &DirectionEstimate,
    series: &[f64],
) -> Result<MultichannelSignal> {
    check_direction(signal, &d.direction)?;
    if series.len() != signal.n_samples() {
        return Err(Error::DimensionMismatch(format!(
            "series has {} samples, signal has {}",
            series.len(),
            signal.n_samples()
        )));
    }
    let channels = signal
        .channels()
        .iter()
        .zip(&d.direction)
        .map(|(ch, w)| ch.iter().zip(series).map(|(x, s)| x - s * w).collect())
        .collect();
    MultichannelSignal::new(channels)
}

fn check_direction(signal: &MultichannelSignal, direction: &[f64]) -> Result<()> {
    if direction.len() != signal.n_channels() {
        return Err(Error::DimensionMismatch(format!(
            "direction has {} entries, signal has {} channels",
            direction.len(),
            signal.n_channels()
        )));
    }
    Ok(())
}

/// Whitens once, then alternates maximum search, projection and deflation
/// until `max_sources` estimates exist or the residual energy falls below
/// `energy_floor` times the starting energy.
pub fn separate_maximum(
    signal: &MultichannelSignal,
    opts: &SeparationOptions,
) -> Result<SeparationResult> {
    let n = signal.n_channels();
    let max_sources = opts.max_sources.unwrap_or(n);
    if max_sources > n {
        return Err(Error::Config(format!(
            "max_sources {max_sources} exceeds channel count {n}"
        )));
    }
    if signal.max_abs() <= ZERO_RADIUS {
        return Err(Error::ZeroSignal);
    }
    let (mut z, whitening) = whitening::whiten(signal, opts.whitening, opts.order.as_deref())?;
    let initial = z.energy();
    let mut residual_energy = vec![initial];
    let mut estimates = Vec::with_capacity(max_sources);
    for _ in 0..max_sources {
        let current = *residual_energy.last().expect("non-empty");
        if current == 0.0 || current < opts.energy_floor * initial {
            break;
        }
        let d = find_maximum_direction(&z)?;
        let series = project_source(&z, &d)?;
        z = deflate(&z, &d, &series)?;
        residual_energy.push(z.energy());
        estimates.push(Estimate {
            direction: d.direction,
            series,
            argmax_index: Some(d.argmax_index),
            radius: Some(d.radius),
            eigenvalue: None,
        });
    }
    Ok(SeparationResult {
        estimates,
        residual_energy,
        method: SeparationMethod::Max,
        whitening,
        centered: false,
    })
}

/// Full description of one separation pipeline.
#[derive(Debug, Clone, PartialEq)]
pub struct MethodSpec {
    pub method: SeparationMethod,
    /// Ignored by PCA.
    pub whitening: WhiteningMethod,
    pub order: Option<Vec<usize>>,
    pub centered: bool,
}

impl MethodSpec {
    pub fn maximum(whitening: WhiteningMethod) -> Self {
        MethodSpec {
            method: SeparationMethod::Max,
            whitening,
            order: None,
            centered: false,
        }
    }

    pub fn pca() -> Self {
        MethodSpec {
            method: SeparationMethod::Pca,
            whitening: WhiteningMethod::None,
            order: None,
            centered: false,
        }
    }

    pub fn label(&self) -> String {
        let mut s = match self.method {
            SeparationMethod::Max => format!("max-{}", self.whitening),
            SeparationMethod::Pca => "pca".to_string(),
        };
        if self.centered {
            s.push_str("-centered");
        }
        s
    }
}

pub fn separate(signal: &MultichannelSignal, spec: &MethodSpec) -> Result<SeparationResult> {
    match spec.method {
        SeparationMethod::Pca => pca::pca_separate(signal, spec.centered),
        SeparationMethod::Max => {
            let opts = SeparationOptions {
                whitening: spec.whitening,
                order: spec.order.clone(),
                ..Default::default()
            };
            if spec.centered {
                let mut r = separate_maximum(&signals::center(signal), &opts)?;
                r.centered = true;
                Ok(r)
            } else {
                separate_maximum(signal, &opts)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evaluation::pearson;
    use crate::signals::{fixtures, MixingMatrix};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn sig(ch: Vec<Vec<f64>>) -> MultichannelSignal {
        MultichannelSignal::new(ch).unwrap()
    }

    #[test]
    fn radius_examples() {
        let s = sig(vec![vec![0.0, 3.0], vec![0.0, 4.0]]);
        assert_eq!(radius_series(&s), vec![0.0, 5.0]);
        let z = sig(vec![vec![0.0; 4], vec![0.0; 4]]);
        assert_eq!(radius_series(&z), vec![0.0; 4]);
    }

    #[test]
    fn radius_matches_elementwise_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let ch: Vec<Vec<f64>> = (0..3)
            .map(|_| (0..50).map(|_| rng.random_range(-2.0..2.0)).collect())
            .collect();
        let r = radius_series(&sig(ch.clone()));
        for n in 0..50 {
            let o = (ch[0][n].powi(2) + ch[1][n].powi(2) + ch[2][n].powi(2)).sqrt();
            assert!((r[n] - o).abs() <= 1e-12);
        }
    }

    #[test]
    fn maximum_of_single_spike() {
        let mut a = vec![0.0; 10];
        let mut b = vec![0.0; 10];
        a[7] = 0.0;
        b[7] = 5.0;
        let d = find_maximum_direction(&sig(vec![a, b])).unwrap();
        assert_eq!(d.direction, vec![0.0, 1.0]);
        assert_eq!(d.argmax_index, 7);
        assert_eq!(d.radius, 5.0);
    }

    #[test]
    fn maximum_tie_takes_earliest() {
        let mut a = vec![0.0; 12];
        let mut b = vec![0.0; 12];
        a[3] = 3.0;
        b[3] = 4.0;
        a[9] = 5.0;
        let d = find_maximum_direction(&sig(vec![a, b])).unwrap();
        assert_eq!(d.argmax_index, 3);
    }

    #[test]
    fn zero_signal_is_an_error() {
        let z = sig(vec![vec![0.0; 5]; 2]);
        assert!(matches!(find_maximum_direction(&z), Err(Error::ZeroSignal)));
        assert!(matches!(
            separate_maximum(&z, &SeparationOptions::default()),
            Err(Error::ZeroSignal)
        ));
    }

    #[test]
    fn projection_examples() {
        let s = vec![1.0, -2.0, 0.5];
        let dir = vec![0.6, 0.8];
        let z = sig(vec![
            s.iter().map(|x| 0.6 * x).collect(),
            s.iter().map(|x| 0.8 * x).collect(),
        ]);
        let d = DirectionEstimate {
            direction: dir,
            argmax_index: 1,
            radius: 2.0,
        };
        let p = project_source(&z, &d).unwrap();
        for (a, b) in p.iter().zip(&s) {
            assert!((a - b).abs() <= 1e-15);
        }
        let orth = DirectionEstimate {
            direction: vec![0.8, -0.6],
            argmax_index: 0,
            radius: 1.0,
        };
        assert!(project_source(&z, &orth)
            .unwrap()
            .iter()
            .all(|x| x.abs() <= 1e-12));
    }

    #[test]
    fn deflation_examples() {
        let z = sig(vec![vec![0.6, 1.2, -0.3], vec![0.8, 1.6, -0.4]]);
        let d = find_maximum_direction(&z).unwrap();
        let series = project_source(&z, &d).unwrap();
        let r = deflate(&z, &d, &series).unwrap();
        assert!(r.channels().iter().flatten().all(|x| x.abs() <= 1e-12));

        let orth = sig(vec![vec![0.8, 1.6], vec![-0.6, -1.2]]);
        let d = DirectionEstimate {
            direction: vec![0.6, 0.8],
            argmax_index: 0,
            radius: 1.0,
        };
        let series = project_source(&orth, &d).unwrap();
        let r = deflate(&orth, &d, &series).unwrap();
        for (a, b) in r
            .channels()
            .iter()
            .flatten()
            .zip(orth.channels().iter().flatten())
        {
            assert!((a - b).abs() <= 1e-12);
        }
        assert!(matches!(
            deflate(&orth, &d, &[1.0]),
            Err(Error::DimensionMismatch(_))
        ));
    }

    // Forward model: whitened direction of source j is W·A·e_j.
    fn whitened_source_dirs(a: &MixingMatrix, w: &WhiteningTransform) -> Vec<Vec<f64>> {
        (0..a.dim())
            .map(|j| {
                let v = w.map_direction(&a.source_vector(j)).unwrap();
                let r = numerics::norm(&v);
                v.into_iter().map(|x| x / r).collect()
            })
            .collect()
    }

    #[test]
    fn maximum_direction_matches_forward_model() {
        let a = fixtures::intro_mixing();
        let s = signals::generate_sources(&fixtures::uncorrelated()).unwrap();
        let z = signals::mix(&s, &a).unwrap();
        let (e, w) = whitening::whiten_gram_schmidt(&z, None).unwrap();
        let dirs = whitened_source_dirs(&a, &w);
        // peak whitened radius of source j is max|s_j|·‖W a_j‖
        let peak = |j: usize| {
            let g = numerics::norm(&w.map_direction(&a.source_vector(j)).unwrap());
            s.channel(j).iter().fold(0.0_f64, |m, x| m.max(x.abs())) * g
        };
        let expected = if peak(0) >= peak(1) {
            &dirs[0]
        } else {
            &dirs[1]
        };
        let d = find_maximum_direction(&e).unwrap();
        let cos = numerics::dot(&d.direction, expected).clamp(-1.0, 1.0);
        assert!(cos.acos() <= 1e-6, "angle {}", cos.acos());
    }

    #[test]
    #[allow(clippy::needless_range_loop)]
    fn deflated_residual_is_remaining_source() {
        let a = fixtures::intro_mixing();
        let s = signals::generate_sources(&fixtures::uncorrelated()).unwrap();
        let z = signals::mix(&s, &a).unwrap();
        let (e, w) = whitening::whiten_gram_schmidt(&z, None).unwrap();
        let dirs = whitened_source_dirs(&a, &w);
        let d = find_maximum_direction(&e).unwrap();
        let p = if numerics::dot(&d.direction, &dirs[0]).abs() > 0.5 {
            0
        } else {
            1
        };
        let q = 1 - p;
        let series = project_source(&e, &d).unwrap();
        let resid = deflate(&e, &d, &series).unwrap();
        // z' = s_q · R'_q with R'_q = |R_q|(R̂_q − R̂_p(R̂_p·R̂_q))
        let rq = w.map_direction(&a.source_vector(q)).unwrap();
        let rp = &d.direction;
        let proj = numerics::dot(rp, &rq);
        let rq_prime: Vec<f64> = rq.iter().zip(rp).map(|(x, y)| x - y * proj).collect();
        let scale = resid.max_abs();
        for n in 0..e.n_samples() {
            for i in 0..2 {
                let expect = s.channel(q)[n] * rq_prime[i];
                assert!((resid.channel(i)[n] - expect).abs() <= 1e-9 * scale);
            }
        }
    }

    #[test]
    fn pure_sources_whitened_are_recovered() {
        let s = signals::generate_sources(&fixtures::uncorrelated()).unwrap();
        let r = separate_maximum(&s, &SeparationOptions::default()).unwrap();
        assert_eq!(r.estimates.len(), 2);
        for est in &r.estimates {
            let best = (0..2)
                .map(|j| pearson(&est.series, s.channel(j)).unwrap().abs())
                .fold(0.0, f64::max);
            assert!(best >= 0.999, "{best}");
        }
    }

    #[test]
    fn unwhitened_intro_mixture_contaminates_first_estimate() {
        let s = signals::generate_sources(&fixtures::uncorrelated()).unwrap();
        let z = signals::mix(&s, &fixtures::intro_mixing()).unwrap();
        let opts = SeparationOptions {
            whitening: WhiteningMethod::None,
            ..Default::default()
        };
        let r = separate_maximum(&z, &opts).unwrap();
        let rho = |k: usize, j: usize| pearson(&r.estimates[k].series, s.channel(j)).unwrap().abs();
        assert!(
            rho(0, 0) > 0.1 && rho(0, 1) > 0.1,
            "{} {}",
            rho(0, 0),
            rho(0, 1)
        );
        assert!(rho(1, 0).max(rho(1, 1)) >= 0.999);

        let r = separate_maximum(&z, &SeparationOptions::default()).unwrap();
        for k in 0..2 {
            let rho = |j: usize| pearson(&r.estimates[k].series, s.channel(j)).unwrap().abs();
            assert!(rho(0).max(rho(1)) >= 0.999);
        }
    }

    #[test]
    fn energy_floor_stops_early() {
        // rank-one data: the second pass finds nothing left
        let x = vec![0.0, 1.0, 3.0, 1.0, 0.0];
        let s = sig(vec![x.clone(), x.iter().map(|v| 2.0 * v).collect()]);
        let opts = SeparationOptions {
            whitening: WhiteningMethod::None,
            ..Default::default()
        };
        let r = separate_maximum(&s, &opts).unwrap();
        assert_eq!(r.estimates.len(), 1);
        assert_eq!(r.residual_energy.len(), 2);
        let opts = SeparationOptions {
            max_sources: Some(3),
            ..opts
        };
        assert!(separate_maximum(&s, &opts).is_err());
    }

    fn random_signal() -> impl Strategy<Value = MultichannelSignal> {
        (2usize..7).prop_flat_map(|n| {
            prop::collection::vec(prop::collection::vec(-5.0f64..5.0, 30), n)
                .prop_map(|c| MultichannelSignal::new(c).unwrap())
        })
    }

    proptest! {
        #[test]
        fn deflation_is_orthogonal_and_energy_decreases(s in random_signal()) {
            let opts = SeparationOptions { whitening: WhiteningMethod::None, ..Default::default() };
            let mut z = s.clone();
            let mut prev = z.energy();
            for _ in 0..s.n_channels() {
                let Ok(d) = find_maximum_direction(&z) else { break };
                let series = project_source(&z, &d).unwrap();
                let next = deflate(&z, &d, &series).unwrap();
                let zmax = radius_series(&z).into_iter().fold(0.0, f64::max);
                for n in 0..z.n_samples() {
                    let p = numerics::dot(&d.direction, &next.point(n));
                    prop_assert!(p.abs() <= 1e-10 * zmax);
                }
                prop_assert!(next.energy() < prev);
                prev = next.energy();
                z = next;
            }
            let r = separate_maximum(&s, &opts).unwrap();
            prop_assert!(r.residual_energy.windows(2).all(|w| w[1] <= w[0]));
        }

        #[test]
        fn whitened_directions_are_orthogonal(s in random_signal()) {
            let Ok(r) = separate_maximum(&s, &SeparationOptions::default()) else { return Ok(()) };
            for i in 0..r.estimates.len() {
                for j in 0..i {
                    let c = numerics::dot(&r.estimates[i].direction, &r.estimates[j].direction);
                    prop_assert!(c.abs() <= 1e-8);
                }
            }
        }

        #[test]
        fn scaling_equivariance(s in random_signal(), c in 0.01f64..100.0) {
            for whitening in [WhiteningMethod::None, WhiteningMethod::GramSchmidt] {
                let opts = SeparationOptions { whitening, ..Default::default() };
                let Ok(a) = separate_maximum(&s, &opts) else { continue };
                let b = separate_maximum(&s.scaled(c), &opts).unwrap();
                prop_assert_eq!(a.estimates.len(), b.estimates.len());
                // whitening absorbs the scale; raw separation passes it through
                let k = if whitening == WhiteningMethod::None { c } else { 1.0 };
                for (x, y) in a.estimates.iter().zip(&b.estimates) {
                    prop_assert_eq!(x.argmax_index, y.argmax_index);
                    for (p, q) in x.direction.iter().zip(&y.direction) {
                        prop_assert!((p - q).abs() <= 1e-9);
                    }
                    let peak = x.series.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
                    for (p, q) in x.series.iter().zip(&y.series) {
                        prop_assert!((k * p - q).abs() <= 1e-9 * k * peak);
                    }
                }
            }
        }
    }
}
