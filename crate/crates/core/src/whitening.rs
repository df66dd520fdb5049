//! Whitening: linear maps that turn the channels into an orthonormal set under
//! the raw sample inner product `⟨x, y⟩ = Σ_n x[n]·y[n]`.
//!
//! Once the data are whitened, uncorrelated sources (zero sample cross-product)
//! sit along mutually orthogonal phase-space directions, which is what lets the
//! maximum method separate them without cross-contamination.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{self, Matrix};
use crate::pca;
use crate::signals::MultichannelSignal;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WhiteningMethod {
    None,
    GramSchmidt,
    Pca,
}

impl WhiteningMethod {
    pub fn as_str(self) -> &'static str {
        match self {
            WhiteningMethod::None => "none",
            WhiteningMethod::GramSchmidt => "gram-schmidt",
            WhiteningMethod::Pca => "pca",
        }
    }
}

impl fmt::Display for WhiteningMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for WhiteningMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "none" => Ok(WhiteningMethod::None),
            "gram-schmidt" | "gram_schmidt" | "gs" => Ok(WhiteningMethod::GramSchmidt),
            "pca" => Ok(WhiteningMethod::Pca),
            other => Err(Error::Config(format!("unknown whitening method {other:?}"))),
        }
    }
}

/// An invertible `N×N` map `e[n] = forward · z[n]`.
#[derive(Debug, Clone, PartialEq)]
pub struct WhiteningTransform {
    pub method: WhiteningMethod,
    pub forward: Matrix,
    /// 0-based channel order fed to Gram-Schmidt; natural order otherwise.
    pub channel_order: Vec<usize>,
}

impl WhiteningTransform {
    pub fn identity(n: usize) -> Self {
        WhiteningTransform {
            method: WhiteningMethod::None,
            forward: Matrix::identity(n),
            channel_order: (0..n).collect(),
        }
    }

    pub fn apply(&self, signal: &MultichannelSignal) -> Result<MultichannelSignal> {
        signal.transform(&self.forward)
    }

    /// Maps a phase-space direction from the input coordinates into whitened ones.
    pub fn map_direction(&self, v: &[f64]) -> Result<Vec<f64>> {
        self.forward.mul_vec(v)
    }
}

fn check_order(order: &[usize], n: usize) -> Result<()> {
    let mut seen = vec![false; n];
    if order.len() != n {
        return Err(Error::Config(format!(
            "channel order has {} entries for {n} channels",
            order.len()
        )));
    }
    for &k in order {
        if k >= n || seen[k] {
            return Err(Error::Config(format!(
                "channel order {order:?} is not a permutation"
            )));
        }
        seen[k] = true;
    }
    Ok(())
}

/// Gram-Schmidt orthonormalization of the channels taken in `order` (0-based;
/// `None` means natural order). `e_1` is the normalized channel `order[0]`.
pub fn whiten_gram_schmidt(
    signal: &MultichannelSignal,
    order: Option<&[usize]>,
) -> Result<(MultichannelSignal, WhiteningTransform)> {
    let n = signal.n_channels();
    let order: Vec<usize> = match order {
        Some(o) => {
            check_order(o, n)?;
            o.to_vec()
        }
        None => (0..n).collect(),
    };
    let rows: Vec<&[f64]> = order.iter().map(|&k| signal.channel(k)).collect();
    let (basis, coeffs) = numerics::gram_schmidt_orthonormal(&rows).map_err(|e| match e {
        Error::DegenerateInput(_) => {
            Error::DegenerateInput("channels are linearly dependent (rank-deficient data)".into())
        }
        other => other,
    })?;
    // rows = C · basis, so basis = C⁻¹ · P · z
    let c_inv = coeffs.inverse()?;
    let mut forward = Matrix::zeros(n, n);
    for i in 0..n {
        for (slot, &ch) in order.iter().enumerate() {
            forward[(i, ch)] = c_inv[(i, slot)];
        }
    }
    let whitened = MultichannelSignal::new(basis)?;
    Ok((
        whitened,
        WhiteningTransform {
            method: WhiteningMethod::GramSchmidt,
            forward,
            channel_order: order,
        },
    ))
}

/// PCA components of the uncentered data, each scaled to unit sample norm.
pub fn whiten_pca(signal: &MultichannelSignal) -> Result<(MultichannelSignal, WhiteningTransform)> {
    let n = signal.n_channels();
    let m = signal.n_samples() as f64;
    let c = pca::second_moment(signal, false);
    let eig = numerics::symmetric_eig(&c)?;
    let top = eig.eigenvalues[0];
    if top <= 0.0 || eig.eigenvalues.iter().any(|&l| l <= pca::RANK_TOL * top) {
        return Err(Error::DegenerateInput(
            "second-moment matrix is rank deficient".into(),
        ));
    }
    let mut forward = eig.eigenvectors.transpose();
    for k in 0..n {
        let s = 1.0 / (m * eig.eigenvalues[k]).sqrt();
        for j in 0..n {
            forward[(k, j)] *= s;
        }
    }
    let mut whitened = signal.transform(&forward)?.into_channels();
    // rescale by the realized norm so rounding in λ does not leak into the result
    for (k, ch) in whitened.iter_mut().enumerate() {
        let r = numerics::norm(ch);
        ch.iter_mut().for_each(|x| *x /= r);
        for j in 0..n {
            forward[(k, j)] /= r;
        }
    }
    let whitened = MultichannelSignal::new(whitened)?;
    Ok((
        whitened,
        WhiteningTransform {
            method: WhiteningMethod::Pca,
            forward,
            channel_order: (0..n).collect(),
        },
    ))
}

/// Dispatches on `method`; `None` returns the input and an identity transform.
pub fn whiten(
    signal: &MultichannelSignal,
    method: WhiteningMethod,
    order: Option<&[usize]>,
) -> Result<(MultichannelSignal, WhiteningTransform)> {
    match method {
        WhiteningMethod::None => Ok((
            signal.clone(),
            WhiteningTransform::identity(signal.n_channels()),
        )),
        WhiteningMethod::GramSchmidt => whiten_gram_schmidt(signal, order),
        WhiteningMethod::Pca => whiten_pca(signal),
    }
}

/// Gram matrix of the channels under the raw sample inner product.
pub fn gram_matrix(signal: &MultichannelSignal) -> Matrix {
    let n = signal.n_channels();
    let mut g = Matrix::zeros(n, n);
    for i in 0..n {
        for j in 0..=i {
            let v = numerics::dot(signal.channel(i), signal.channel(j));
            g[(i, j)] = v;
            g[(j, i)] = v;
        }
    }
    g
}
