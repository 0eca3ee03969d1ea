//! First-stage block-diagonalizing beamforming across user groups.
//!
//! Per-group processing: each group g gets S_g orthonormal beams confined to
//! the orthogonal complement of every other group's eigenspace, so
//! inter-group interference is nulled exactly at the covariance level.
//! Within that complement the beams pick the S_g strongest directions of the
//! group's own covariance (largest singular values of N_g^H U_g Λ_g^{1/2}),
//! ordered strongest first. Inside a group the second-stage separation is
//! left to the per-beam structure, so intra-group cross-talk remains and is
//! what the outage analysis integrates over.
//!
//! When the pico relay belongs to a group, its backhaul stream occupies
//! column 0 (the strongest beam) and the group's users take the rest.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex;

use crate::channel::CovarianceModel;
use crate::error::{Error, Result};

/// Default bound on residual inter-group leakage |u^H b|.
pub const LEAKAGE_TOL: f64 = 1e-8;

/// One set of first-stage precoders, one M×S_g block per group.
#[derive(Debug, Clone)]
pub struct PrecoderSet {
    /// Per-group beam matrices; columns are orthonormal beams.
    pub beams: Vec<DMatrix<Complex<f64>>>,
    /// Streams per group (columns of each block).
    pub streams: Vec<usize>,
}

impl PrecoderSet {
    pub fn total_streams(&self) -> usize {
        self.streams.iter().sum()
    }

    /// Beam column `j` of group `g`.
    pub fn beam(&self, g: usize, j: usize) -> DVector<Complex<f64>> {
        self.beams[g].column(j).into_owned()
    }

    /// All beams of all groups stacked into one M×S matrix, group order.
    pub fn stacked(&self) -> DMatrix<Complex<f64>> {
        let m = self.beams.iter().map(|b| b.nrows()).max().unwrap_or(0);
        let s = self.total_streams();
        let mut out = DMatrix::zeros(m, s);
        let mut col = 0;
        for b in &self.beams {
            for j in 0..b.ncols() {
                out.set_column(col, &b.column(j));
                col += 1;
            }
        }
        out
    }

    /// Column offset of group `g` inside [`Self::stacked`].
    pub fn group_offset(&self, g: usize) -> usize {
        self.streams[..g].iter().sum()
    }
}

/// Orthonormal basis of the orthogonal complement of the span of the other
/// groups' eigenbases, via the eigengap of Σ U_{g'} U_{g'}^H.
fn complement_basis(
    models: &[CovarianceModel],
    skip: usize,
    m: usize,
) -> Result<DMatrix<Complex<f64>>> {
    let mut gram = DMatrix::<Complex<f64>>::zeros(m, m);
    let mut span_dim = 0usize;
    for (g, model) in models.iter().enumerate() {
        if g == skip {
            continue;
        }
        gram += &model.basis * model.basis.adjoint();
        span_dim += model.rank();
    }
    if span_dim == 0 {
        return Ok(DMatrix::identity(m, m));
    }
    let eig = gram.symmetric_eigen();
    // Eigenvalues cluster near 0 (complement) and ≥ ~1 (occupied span);
    // everything below 1e-8 is free space.
    let mut free: Vec<usize> = (0..m).filter(|&i| eig.eigenvalues[i] < 1e-8).collect();
    free.sort_unstable();
    let basis = DMatrix::from_fn(m, free.len(), |row, col| eig.eigenvectors[(row, free[col])]);
    Ok(basis)
}

/// Design the per-group beams: `streams[g]` columns for group g, exactly
/// nulled towards every other group's eigenspace.
pub fn design_bd_precoders(
    models: &[CovarianceModel],
    streams: &[usize],
    leakage_tol: f64,
) -> Result<PrecoderSet> {
    if models.is_empty() || models.len() != streams.len() {
        return Err(Error::InvalidParameter(
            "need one stream count per covariance model".into(),
        ));
    }
    let m = models[0].matrix.nrows();
    let mut beams = Vec::with_capacity(models.len());
    for (g, (model, &s_g)) in models.iter().zip(streams).enumerate() {
        if s_g == 0 {
            beams.push(DMatrix::zeros(m, 0));
            continue;
        }
        let null = complement_basis(models, g, m)?;
        if null.ncols() < s_g {
            return Err(Error::InfeasiblePartition(format!(
                "group {g} needs {s_g} streams but only {} interference-free \
                 dimensions remain",
                null.ncols()
            )));
        }
        if s_g > model.rank() {
            return Err(Error::InfeasiblePartition(format!(
                "group {g} needs {s_g} streams but its covariance rank is only {}",
                model.rank()
            )));
        }
        // Strongest directions of the group covariance inside the complement.
        let mut proj = null.adjoint() * &model.basis; // n×r
        for c in 0..proj.ncols() {
            let scale = Complex::new(model.eigenvalues[c].sqrt(), 0.0);
            for r in 0..proj.nrows() {
                proj[(r, c)] *= scale;
            }
        }
        let svd = proj.svd(true, false);
        let u = svd.u.as_ref().expect("left singular vectors requested");
        if svd.singular_values[s_g - 1] <= 1e-12 * svd.singular_values[0] {
            return Err(Error::InfeasiblePartition(format!(
                "group {g}: only {} of {s_g} requested beams carry energy",
                svd.singular_values.iter().filter(|&&s| s > 1e-12).count()
            )));
        }
        let picked = DMatrix::from_fn(null.ncols(), s_g, |row, col| u[(row, col)]);
        let block = &null * picked;
        beams.push(block);
    }

    let set = PrecoderSet {
        beams,
        streams: streams.to_vec(),
    };

    // Exact-nulling audit: no beam may leak into another group's eigenspace.
    for (g, model) in models.iter().enumerate() {
        for (g2, block) in set.beams.iter().enumerate() {
            if g == g2 || block.ncols() == 0 {
                continue;
            }
            let leak = (model.basis.adjoint() * block).norm();
            if leak > leakage_tol {
                return Err(Error::SpectrumStructure(format!(
                    "beams of group {g2} leak {leak:.2e} into group {g}'s eigenspace"
                )));
            }
        }
    }
    Ok(set)
}

/// Map users (listed with their group ids) to beam columns. Group `g`'s
/// users take consecutive columns of block g; in the pico's group, column 0
/// is reserved for the relay backhaul and users start at column 1.
pub fn assign_user_beams(
    streams: &[usize],
    pico_group: Option<usize>,
    memberships: &[usize],
) -> Result<Vec<(usize, usize)>> {
    let mut next: Vec<usize> = (0..streams.len())
        .map(|g| usize::from(pico_group == Some(g)))
        .collect();
    let mut map = Vec::with_capacity(memberships.len());
    for &g in memberships {
        if g >= streams.len() {
            return Err(Error::InvalidParameter(format!("unknown group id {g}")));
        }
        if next[g] >= streams[g] {
            return Err(Error::InvalidParameter(format!(
                "group {g} has {} streams but more users were assigned",
                streams[g]
            )));
        }
        map.push((g, next[g]));
        next[g] += 1;
    }
    Ok(map)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::build_covariance;
    use crate::params::GroupGeometry;
    use crate::rng::{complex_gaussian_vector, rng_for};

    fn two_group_models(m: usize) -> Vec<CovarianceModel> {
        let g1 = GroupGeometry::from_degrees(-20.0, 20.0).unwrap();
        let g2 = GroupGeometry::from_degrees(10.0, 10.0).unwrap();
        vec![
            build_covariance(m, 0.5, &g1).unwrap(),
            build_covariance(m, 0.5, &g2).unwrap(),
        ]
    }

    #[test]
    fn test_exact_inter_group_nulling() {
        let models = two_group_models(32);
        let set = design_bd_precoders(&models, &[8, 4], LEAKAGE_TOL).unwrap();
        for (g, other) in [(0usize, 1usize), (1, 0)] {
            let leak = models[g].basis.adjoint() * &set.beams[other];
            assert!(leak.norm() < 1e-10, "leakage {}", leak.norm());
        }
    }

    #[test]
    fn test_orthonormal_beams_and_counts() {
        let models = two_group_models(32);
        let set = design_bd_precoders(&models, &[8, 4], LEAKAGE_TOL).unwrap();
        assert_eq!(set.beams[0].ncols(), 8);
        assert_eq!(set.beams[1].ncols(), 4);
        assert_eq!(set.total_streams(), 12);
        assert_eq!(set.group_offset(1), 8);
        for b in &set.beams {
            let gram = b.adjoint() * b;
            for i in 0..gram.nrows() {
                for j in 0..gram.ncols() {
                    let want = if i == j { 1.0 } else { 0.0 };
                    assert!((gram[(i, j)] - Complex::new(want, 0.0)).norm() < 1e-10);
                }
            }
        }
        let stacked = set.stacked();
        assert_eq!(stacked.ncols(), 12);
        assert_eq!(stacked.column(8), set.beams[1].column(0));
    }

    #[test]
    fn test_beam_gains_sorted_and_dominant() {
        let models = two_group_models(32);
        let set = design_bd_precoders(&models, &[8, 4], LEAKAGE_TOL).unwrap();
        // Effective per-beam gains b^H R b decrease along the columns.
        let mut prev = f64::INFINITY;
        for j in 0..8 {
            let b = set.beam(0, j);
            let gain = (b.adjoint() * &models[0].matrix * &b)[(0, 0)].re;
            assert!(gain <= prev + 1e-9, "column {j} gain {gain} > {prev}");
            assert!(gain > 0.0);
            prev = gain;
        }
        // The leading beam beats random directions by a wide margin.
        let b0 = set.beam(0, 0);
        let top = (b0.adjoint() * &models[0].matrix * &b0)[(0, 0)].re;
        let mut rng = rng_for(0x5eed_000a, 0);
        for _ in 0..100 {
            let v = complex_gaussian_vector(32, &mut rng);
            let v = &v / Complex::new(v.norm(), 0.0);
            let gain = (v.adjoint() * &models[0].matrix * &v)[(0, 0)].re;
            assert!(gain < top);
        }
    }

    #[test]
    fn test_infeasible_requests_are_rejected() {
        let models = two_group_models(16);
        // Far more streams than the array can null.
        let too_many = design_bd_precoders(&models, &[14, 6], LEAKAGE_TOL);
        assert!(matches!(too_many, Err(Error::InfeasiblePartition(_))));
        // More streams than the group covariance rank supports.
        let r0 = models[0].rank();
        let over_rank = design_bd_precoders(&models, &[r0 + 1, 1], LEAKAGE_TOL);
        assert!(matches!(over_rank, Err(Error::InfeasiblePartition(_))));
        // Mismatched inputs.
        assert!(design_bd_precoders(&models, &[4], LEAKAGE_TOL).is_err());
    }

    #[test]
    fn test_zero_stream_group() {
        let models = two_group_models(32);
        let set = design_bd_precoders(&models, &[11, 0], LEAKAGE_TOL).unwrap();
        assert_eq!(set.beams[1].ncols(), 0);
        assert_eq!(set.total_streams(), 11);
    }

    #[test]
    fn test_single_group_uses_full_space() {
        let g1 = GroupGeometry::from_degrees(0.0, 25.0).unwrap();
        let model = build_covariance(16, 0.5, &g1).unwrap();
        let r = model.rank();
        let set = design_bd_precoders(std::slice::from_ref(&model), &[r.min(6)], LEAKAGE_TOL)
            .unwrap();
        assert_eq!(set.beams[0].ncols(), r.min(6));
    }

    #[test]
    fn test_user_beam_assignment() {
        let map = assign_user_beams(&[8, 3], Some(0), &[0, 0, 1, 0, 1]).unwrap();
        assert_eq!(map, vec![(0, 1), (0, 2), (1, 0), (0, 3), (1, 1)]);
        // Without a pico, group 0 users start at column 0.
        let map = assign_user_beams(&[2, 1], None, &[0, 1]).unwrap();
        assert_eq!(map, vec![(0, 0), (1, 0)]);
        // Overflow and bad ids rejected.
        assert!(assign_user_beams(&[1, 1], Some(0), &[0]).is_err());
        assert!(assign_user_beams(&[1, 1], None, &[2]).is_err());
    }
}
