//! PCA baseline separator. Inputs are never rescaled per channel; centering is opt-in.

use crate::error::{Error, Result};
use crate::numerics::{self, EigenDecomposition, Matrix};
use crate::separation::{Estimate, SeparationMethod, SeparationResult};
use crate::signals::{self, MultichannelSignal};
use crate::whitening::WhiteningTransform;

/// Eigenvalues at or below this fraction of the largest count as zero.
pub const RANK_TOL: f64 = 1e-12;

/// `C[i][j] = Σ_n x_i[n]·x_j[n] / M`, with `x` optionally mean-subtracted.
pub fn second_moment(signal: &MultichannelSignal, centered: bool) -> Matrix {
    let owned;
    let x = if centered {
        owned = signals::center(signal);
        &owned
    } else {
        signal
    };
    let n = x.n_channels();
    let m = x.n_samples() as f64;
    let mut c = Matrix::zeros(n, n);
    for i in 0..n {
        for j in 0..=i {
            let v = numerics::dot(x.channel(i), x.channel(j)) / m;
            c[(i, j)] = v;
            c[(j, i)] = v;
        }
    }
    c
}

#[derive(Debug, Clone)]
pub struct PcaModel {
    pub eig: EigenDecomposition,
    pub centered: bool,
    /// Zero when `centered` is false.
    pub channel_means: Vec<f64>,
}

impl PcaModel {
    pub fn fit(signal: &MultichannelSignal, centered: bool) -> Result<Self> {
        let eig = numerics::symmetric_eig(&second_moment(signal, centered))?;
        let channel_means = if centered {
            signals::channel_means(signal)
        } else {
            vec![0.0; signal.n_channels()]
        };
        Ok(PcaModel {
            eig,
            centered,
            channel_means,
        })
    }

    /// Number of eigenvalues above `RANK_TOL × λ_max`.
    pub fn rank(&self) -> usize {
        let top = self.eig.eigenvalues[0];
        if top <= 0.0 {
            return 0;
        }
        self.eig
            .eigenvalues
            .iter()
            .take_while(|&&l| l > RANK_TOL * top)
            .count()
    }
}

/// Projects the data onto the eigenvectors of its second-moment matrix, in
/// descending eigenvalue order. Rank-deficient data yield one estimate per
/// nonzero eigenvalue.
pub fn pca_separate(signal: &MultichannelSignal, centered: bool) -> Result<SeparationResult> {
    let model = PcaModel::fit(signal, centered)?;
    let rank = model.rank();
    if rank == 0 {
        return Err(Error::DegenerateInput(
            "second-moment matrix is zero".into(),
        ));
    }
    let data = if centered {
        signals::center(signal)
    } else {
        signal.clone()
    };
    let mut residual = data.energy();
    let mut residual_energy = vec![residual];
    let mut estimates = Vec::with_capacity(rank);
    for k in 0..rank {
        let direction = model.eig.eigenvector(k);
        let series: Vec<f64> = (0..data.n_samples())
            .map(|n| {
                direction
                    .iter()
                    .zip(data.channels())
                    .map(|(d, ch)| d * ch[n])
                    .sum()
            })
            .collect();
        let e: f64 = series.iter().map(|x| x * x).sum();
        residual = (residual - e).max(0.0);
        residual_energy.push(residual);
        estimates.push(Estimate {
            direction,
            series,
            argmax_index: None,
            radius: None,
            eigenvalue: Some(model.eig.eigenvalues[k]),
        });
    }
    Ok(SeparationResult {
        estimates,
        residual_energy,
        method: SeparationMethod::Pca,
        whitening: WhiteningTransform::identity(signal.n_channels()),
        centered,
    })
}
