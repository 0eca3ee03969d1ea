//! Tail probability of an indefinite Hermitian quadratic form in i.i.d.
//! complex Gaussians whose spectrum has exactly one positive eigenvalue.
//!
//! If w_i are i.i.d. CN(0,1) and μ_1 > 0 ≥ μ_2 ≥ … ≥ μ_n, then
//! Pr(Σ μ_i |w_i|² > c) = e^{−c/μ_1} · Π_{i≥2} (1 − μ_i/μ_1)^{−1} for c ≥ 0.
//! Every coverage expression in this crate reduces to this form.

use crate::error::{Error, Result};

/// Relative threshold below which eigenvalues are treated as exact zeros.
const NEGLIGIBLE_REL: f64 = 1e-12;

/// Eigenvalue spectrum with exactly one strictly positive entry, sorted
/// descending; entries tiny relative to the positive one are dropped at
/// construction. The complementary degenerate state — no positive entry at
/// all, built with [`EigenSpectrum::certain_failure`] — represents a form
/// that is almost surely nonpositive, whose tail is identically zero.
#[derive(Debug, Clone)]
pub struct EigenSpectrum {
    values: Vec<f64>,
}

impl EigenSpectrum {
    /// Validate and normalize a raw eigenvalue list.
    ///
    /// Errors if no eigenvalue is strictly positive or if a second
    /// eigenvalue exceeds `1e-12` of the largest (the analysis is only
    /// valid for rank-one numerators).
    pub fn new(mut values: Vec<f64>) -> Result<Self> {
        values.sort_by(|a, b| b.total_cmp(a));
        let mu1 = *values.first().ok_or_else(|| {
            Error::SpectrumStructure("empty eigenvalue list".into())
        })?;
        if !(mu1 > 0.0) || !mu1.is_finite() {
            return Err(Error::SpectrumStructure(format!(
                "largest eigenvalue must be strictly positive, got {mu1}"
            )));
        }
        let tol = NEGLIGIBLE_REL * mu1;
        if values.len() > 1 && values[1] > tol {
            return Err(Error::SpectrumStructure(format!(
                "second positive eigenvalue {} (largest {})",
                values[1], mu1
            )));
        }
        // Keep μ1 plus the non-negligible non-positive tail; clamp the
        // sub-tolerance stragglers (positive rounding noise included) to zero
        // by dropping them.
        let mut kept = vec![mu1];
        kept.extend(values.iter().skip(1).filter(|&&v| v < -tol));
        Ok(Self { values: kept })
    }

    /// Spectrum of a form that is nonpositive almost surely: the useful
    /// rank-one direction is dominated everywhere, so coverage is exactly
    /// zero at every positive threshold. Arises past the spectral
    /// breakpoint, where the scaled interference swallows the last
    /// positive eigenvalue.
    pub fn certain_failure() -> Self {
        Self { values: Vec::new() }
    }

    /// Whether this is the no-positive-eigenvalue state ([`Self::tail`]
    /// identically zero, [`Self::mu1`] reported as 0).
    pub fn is_certain_failure(&self) -> bool {
        self.values.is_empty()
    }

    /// Eigenvalues, descending; first entry is the single positive one.
    /// Empty in the [`Self::certain_failure`] state.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn mu1(&self) -> f64 {
        self.values.first().copied().unwrap_or(0.0)
    }

    /// ln Π_{i≥2}(1 − μ_i/μ_1): the threshold-independent part of the tail.
    pub fn ln_denominator(&self) -> f64 {
        if self.values.len() < 2 {
            return 0.0;
        }
        self.values[1..]
            .iter()
            .map(|&mu| (-mu / self.mu1()).ln_1p())
            .sum()
    }

    /// ln Pr(Σ μ_i |w_i|² > c) for c ≥ 0.
    pub fn ln_tail(&self, c: f64) -> Result<f64> {
        if !(c >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "quadratic-form threshold must be non-negative, got {c}"
            )));
        }
        if self.is_certain_failure() {
            return Ok(f64::NEG_INFINITY);
        }
        Ok(-c / self.mu1() - self.ln_denominator())
    }

    /// Pr(Σ μ_i |w_i|² > c) for c ≥ 0.
    pub fn tail(&self, c: f64) -> Result<f64> {
        Ok(self.ln_tail(c)?.exp())
    }
}

/// One-shot convenience: validate `mu` and return Pr(Σ μ_i |w_i|² > c).
pub fn qform_tail(mu: &[f64], c: f64) -> Result<f64> {
    EigenSpectrum::new(mu.to_vec())?.tail(c)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Exp1};

    #[test]
    fn test_tail_closed_form_example() {
        // μ = {2, −1, −1}, c = 0.6: e^{−0.3} / (1.5)² = 0.3292525425252079.
        let s = EigenSpectrum::new(vec![2.0, -1.0, -1.0]).unwrap();
        let p = s.tail(0.6).unwrap();
        assert!((p - 0.329_252_542_525_207_9).abs() < 1e-15);
    }

    #[test]
    fn test_tail_no_negatives_is_exponential() {
        let s = EigenSpectrum::new(vec![3.0]).unwrap();
        assert!((s.tail(1.5).unwrap() - (-0.5_f64).exp()).abs() < 1e-15);
        assert!((s.tail(0.0).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn test_certain_failure_tail_is_zero() {
        let s = EigenSpectrum::certain_failure();
        assert!(s.is_certain_failure());
        assert_eq!(s.mu1(), 0.0);
        assert_eq!(s.tail(0.0).unwrap(), 0.0);
        assert_eq!(s.tail(0.7).unwrap(), 0.0);
        assert_eq!(s.ln_tail(0.7).unwrap(), f64::NEG_INFINITY);
        assert!(s.values().is_empty());
        // The validating constructor still rejects such lists: callers must
        // opt into the degenerate state explicitly.
        assert!(EigenSpectrum::new(vec![-1.0, -2.0]).is_err());
    }

    #[test]
    fn test_negligible_values_are_dropped() {
        let s = EigenSpectrum::new(vec![1.0, 1e-20, -1e-20, 0.0]).unwrap();
        assert_eq!(s.values().len(), 1);
    }

    #[test]
    fn test_second_positive_eigenvalue_rejected() {
        match EigenSpectrum::new(vec![1.0, 0.5]) {
            Err(Error::SpectrumStructure(_)) => {}
            other => panic!("expected structure error, got {other:?}"),
        }
    }

    #[test]
    fn test_no_positive_eigenvalue_rejected() {
        assert!(EigenSpectrum::new(vec![-1.0, -2.0]).is_err());
        assert!(EigenSpectrum::new(vec![]).is_err());
    }

    #[test]
    fn test_repeated_eigenvalues_supported() {
        let s = EigenSpectrum::new(vec![1.0, -0.25, -0.25, -0.25, -0.25]).unwrap();
        let p = s.tail(0.5).unwrap();
        let expected = (-0.5_f64).exp() / 1.25_f64.powi(4);
        assert!((p - expected).abs() < 1e-15);
    }

    #[test]
    fn test_tail_against_monte_carlo() {
        // Independent oracle: sample the quadratic form directly.
        let spectra: [&[f64]; 3] = [
            &[2.0, -1.0, -1.0],
            &[1.0, -0.1, -0.4, -3.0, -3.0],
            &[0.7, -2.0],
        ];
        let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0001);
        for (si, vals) in spectra.iter().enumerate() {
            let s = EigenSpectrum::new(vals.to_vec()).unwrap();
            for &c in &[0.0, 0.3, 1.2] {
                let n = 300_000usize;
                let mut hits = 0u64;
                for _ in 0..n {
                    let q: f64 = vals
                        .iter()
                        .map(|&mu| mu * <Exp1 as Distribution<f64>>::sample(&Exp1, &mut rng))
                        .sum();
                    if q > c {
                        hits += 1;
                    }
                }
                let est = hits as f64 / n as f64;
                let p = s.tail(c).unwrap();
                let sigma = (p * (1.0 - p) / n as f64).sqrt().max(1e-9);
                assert!(
                    (est - p).abs() < 3.0 * sigma + 1e-4,
                    "spectrum {si}, c={c}: mc {est} vs analytic {p}"
                );
            }
        }
    }

    #[test]
    fn test_negative_threshold_rejected() {
        let s = EigenSpectrum::new(vec![1.0]).unwrap();
        assert!(s.tail(-0.1).is_err());
    }
}
