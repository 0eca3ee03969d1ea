//! Spatial covariance of a uniform linear array under one-ring scattering.
//!
//! A user group sitting at azimuth θ with angular half-spread Δ sees the
//! M-antenna array through a Toeplitz Hermitian covariance whose (m,p)
//! entry is the average steering-vector correlation over the arrival cone,
//!
//! ```text
//! [R]_{m,p} = (1/2Δ) ∫_{θ-Δ}^{θ+Δ} exp(-j 2π D (m-p) sin t) dt .
//! ```
//!
//! The covariance is rank-deficient for narrow cones; everything downstream
//! works in the retained eigenspace (basis U, eigenvalues Λ), so we truncate
//! at a relative eigenvalue threshold and keep the low-rank factorization.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex;
use rand::Rng;

use crate::error::{Error, Result};
use crate::numerics::adaptive_gauss_kronrod;
use crate::params::GroupGeometry;
use crate::rng::complex_gaussian_vector;

/// Eigenvalues below this fraction of the largest are treated as zero.
pub const RANK_THRESHOLD_REL: f64 = 1e-6;

const QUAD_TOL: f64 = 1e-12;

/// Covariance matrix together with its truncated eigendecomposition.
#[derive(Debug, Clone)]
pub struct CovarianceModel {
    /// Full M×M covariance.
    pub matrix: DMatrix<Complex<f64>>,
    /// M×r orthonormal eigenbasis, columns ordered by descending eigenvalue.
    pub basis: DMatrix<Complex<f64>>,
    /// The r retained eigenvalues, descending, all positive.
    pub eigenvalues: DVector<f64>,
}

impl CovarianceModel {
    /// Effective rank r after truncation.
    pub fn rank(&self) -> usize {
        self.eigenvalues.len()
    }

    /// Λ^{1/2} U^H b for one array-domain vector b: the coordinates through
    /// which a channel drawn in this eigenspace sees b.
    pub fn eigen_projection(&self, b: &DVector<Complex<f64>>) -> DVector<Complex<f64>> {
        let mut v = self.basis.adjoint() * b;
        for i in 0..v.len() {
            v[i] *= self.eigenvalues[i].sqrt();
        }
        v
    }

    /// Draw h = U Λ^{1/2} w with w iid unit-variance complex Gaussian.
    pub fn sample_channel<R: Rng + ?Sized>(&self, rng: &mut R) -> DVector<Complex<f64>> {
        let w = complex_gaussian_vector(self.rank(), rng);
        let mut scaled = w;
        for i in 0..scaled.len() {
            scaled[i] *= self.eigenvalues[i].sqrt();
        }
        &self.basis * scaled
    }
}

/// Correlation of antenna pair at lag k for a cone [θ-Δ, θ+Δ]:
/// (1/2Δ) ∫ exp(-j 2π D k sin t) dt.
pub fn lag_correlation(spacing: f64, lag: i64, group: &GroupGeometry) -> Result<Complex<f64>> {
    let a = group.aoa_rad - group.spread_rad;
    let b = group.aoa_rad + group.spread_rad;
    let omega = 2.0 * std::f64::consts::PI * spacing * lag as f64;
    let re = adaptive_gauss_kronrod(|t| (omega * t.sin()).cos(), a, b, QUAD_TOL)?;
    let im = adaptive_gauss_kronrod(|t| -(omega * t.sin()).sin(), a, b, QUAD_TOL)?;
    let norm = 2.0 * group.spread_rad;
    Ok(Complex::new(re / norm, im / norm))
}

/// Build the covariance and its truncated eigendecomposition.
pub fn build_covariance(
    num_antennas: usize,
    spacing: f64,
    group: &GroupGeometry,
) -> Result<CovarianceModel> {
    let m = num_antennas;
    if m == 0 {
        return Err(Error::InvalidParameter("need at least one antenna".into()));
    }
    let mut lags = Vec::with_capacity(m);
    for k in 0..m {
        lags.push(lag_correlation(spacing, k as i64, group)?);
    }
    let matrix = DMatrix::from_fn(m, m, |row, col| {
        if row >= col {
            lags[row - col]
        } else {
            lags[col - row].conj()
        }
    });

    let eig = matrix.clone().symmetric_eigen();
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[j].partial_cmp(&eig.eigenvalues[i]).unwrap());

    let lambda_max = eig.eigenvalues[order[0]];
    if !(lambda_max > 0.0) {
        return Err(Error::SpectrumStructure(
            "covariance has no positive eigenvalue".into(),
        ));
    }
    if eig.eigenvalues[order[m - 1]] < -1e-8 * lambda_max {
        return Err(Error::SpectrumStructure(format!(
            "covariance not positive semidefinite: min eigenvalue {}",
            eig.eigenvalues[order[m - 1]]
        )));
    }
    let trace: f64 = eig.eigenvalues.iter().sum();
    if (trace - m as f64).abs() > 1e-6 * m as f64 {
        return Err(Error::SpectrumStructure(format!(
            "covariance trace {trace} deviates from antenna count {m}"
        )));
    }

    let kept: Vec<usize> = order
        .iter()
        .copied()
        .take_while(|&i| eig.eigenvalues[i] > RANK_THRESHOLD_REL * lambda_max)
        .collect();
    let eigenvalues = DVector::from_iterator(kept.len(), kept.iter().map(|&i| eig.eigenvalues[i]));
    let basis = DMatrix::from_fn(m, kept.len(), |row, col| eig.eigenvectors[(row, kept[col])]);

    Ok(CovarianceModel {
        matrix,
        basis,
        eigenvalues,
    })
}
