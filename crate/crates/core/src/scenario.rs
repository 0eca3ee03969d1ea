//! A fully-built evaluation scenario: geometry, covariances, beams, and the
//! effective matrices both the analysis and the simulator work from.
//!
//! The macro radiates S = Σ_g S_g streams, where group g carries one beam
//! per user plus one backhaul beam if the relay lives in that group. All
//! channel interaction happens through the per-group effective matrix
//!
//! ```text
//! E_g = Λ_g^{1/2} U_g^H [B_1 … B_G]   (r_g × S),
//! ```
//!
//! whose column j is how a group-g channel realization sees beam j: for
//! h = U_g Λ_g^{1/2} w one has h^H b_j = w^H E_g(:,j). Quadratic forms in w
//! with matrices built from columns of E_g express every SINR event, so the
//! heavy M-dimensional objects never appear past this module.

use nalgebra::DMatrix;
use num_complex::Complex;

use crate::channel::{build_covariance, CovarianceModel};
use crate::error::{Error, Result};
use crate::geometry::CellLayout;
use crate::params::{GroupGeometry, SystemParams};
use crate::precoding::{design_bd_precoders, PrecoderSet, LEAKAGE_TOL};
use crate::qform::EigenSpectrum;

/// Everything needed to evaluate outage for one configuration.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub params: SystemParams,
    pub layout: CellLayout,
    pub groups: Vec<GroupGeometry>,
    /// Users per group (K_g).
    pub user_counts: Vec<usize>,
    /// Group hosting the pico relay; `None` runs the relay-free system.
    pub pico_group: Option<usize>,
    pub models: Vec<CovarianceModel>,
    pub precoders: PrecoderSet,
    /// Per-group effective matrices E_g (r_g × S).
    pub eff: Vec<DMatrix<Complex<f64>>>,
    /// Positive eigenvalues of E_g E_g^H per group, descending: the gains
    /// through which total macro downlink power reaches a group-g channel.
    pub nu: Vec<Vec<f64>>,
}

/// Spectra of the per-beam quadratic forms at one SINR threshold.
#[derive(Debug, Clone)]
pub struct SpectraAtX {
    pub x: f64,
    /// `[group][local beam]` spectrum of A'_k − x A''_k in the group's
    /// eigenspace (position-independent; scale by the path gain at use).
    pub beams: Vec<Vec<EigenSpectrum>>,
}

impl SpectraAtX {
    /// Spectrum of the relay backhaul beam (column 0 of the pico group).
    pub fn hop1(&self, pico_group: usize) -> &EigenSpectrum {
        &self.beams[pico_group][0]
    }
}

impl Scenario {
    pub fn build(
        params: SystemParams,
        layout: CellLayout,
        groups: Vec<GroupGeometry>,
        user_counts: Vec<usize>,
        pico_group: Option<usize>,
    ) -> Result<Self> {
        if groups.is_empty() || groups.len() != user_counts.len() {
            return Err(Error::InvalidParameter(
                "need one user count per group".into(),
            ));
        }
        match pico_group {
            Some(g) => {
                if g >= groups.len() {
                    return Err(Error::InvalidParameter(format!("no group {g} for the pico")));
                }
                if !layout.has_pico() {
                    return Err(Error::InvalidParameter(
                        "pico group given but the layout has no relay disk".into(),
                    ));
                }
                if (layout.pico_aoa - groups[g].aoa_rad).abs() > 1e-12 {
                    return Err(Error::InvalidParameter(
                        "the relay must sit on its group's bisector".into(),
                    ));
                }
            }
            None => {
                if layout.has_pico() {
                    return Err(Error::InvalidParameter(
                        "layout has a relay disk but no pico group was named".into(),
                    ));
                }
            }
        }
        let mut models = Vec::with_capacity(groups.len());
        for g in &groups {
            models.push(build_covariance(params.num_antennas, params.antenna_spacing, g)?);
        }
        Self::assemble(params, layout, groups, user_counts, pico_group, models)
    }

    /// The same system with the relay removed: the backhaul beam disappears
    /// (one stream fewer) and every user is macro-served.
    pub fn without_relay(&self) -> Result<Self> {
        let layout = CellLayout::new(
            self.layout.cell_radius,
            0.0,
            self.layout.pico_dist,
            self.layout.pico_aoa,
        )?;
        Self::assemble(
            self.params.clone(),
            layout,
            self.groups.clone(),
            self.user_counts.clone(),
            None,
            self.models.clone(),
        )
    }

    /// Rebuild for a different user partition, reusing the covariances.
    pub fn with_user_counts(&self, user_counts: Vec<usize>) -> Result<Self> {
        Self::assemble(
            self.params.clone(),
            self.layout,
            self.groups.clone(),
            user_counts,
            self.pico_group,
            self.models.clone(),
        )
    }

    fn assemble(
        params: SystemParams,
        layout: CellLayout,
        groups: Vec<GroupGeometry>,
        user_counts: Vec<usize>,
        pico_group: Option<usize>,
        models: Vec<CovarianceModel>,
    ) -> Result<Self> {
        let streams: Vec<usize> = user_counts
            .iter()
            .enumerate()
            .map(|(g, &k)| k + usize::from(pico_group == Some(g)))
            .collect();
        if streams.iter().sum::<usize>() == 0 {
            return Err(Error::InvalidParameter("no streams at all".into()));
        }
        let precoders = design_bd_precoders(&models, &streams, LEAKAGE_TOL)?;
        let stacked = precoders.stacked();
        let mut eff = Vec::with_capacity(models.len());
        let mut nu = Vec::with_capacity(models.len());
        for model in &models {
            let mut e = model.basis.adjoint() * &stacked;
            for r in 0..e.nrows() {
                let scale = Complex::new(model.eigenvalues[r].sqrt(), 0.0);
                for c in 0..e.ncols() {
                    e[(r, c)] *= scale;
                }
            }
            let gram = &e * e.adjoint();
            let eigs = gram.symmetric_eigen();
            let mut vals: Vec<f64> = eigs
                .eigenvalues
                .iter()
                .copied()
                .filter(|&v| v > 1e-12)
                .collect();
            vals.sort_by(|a, b| b.total_cmp(a));
            eff.push(e);
            nu.push(vals);
        }
        Ok(Self {
            params,
            layout,
            groups,
            user_counts,
            pico_group,
            models,
            precoders,
            eff,
            nu,
        })
    }

    pub fn num_groups(&self) -> usize {
        self.groups.len()
    }

    pub fn total_streams(&self) -> usize {
        self.precoders.total_streams()
    }

    /// Per-stream SNR for this scenario's stream count.
    pub fn rho(&self) -> f64 {
        self.params.rho(self.total_streams())
    }

    /// Relay-link coefficient τ for this scenario's stream count.
    pub fn tau(&self) -> f64 {
        self.params.tau(self.total_streams())
    }

    /// Coefficient on the relay's interference into macro-served users.
    pub fn pico_interference_coeff(&self) -> f64 {
        self.params.pico_interference_coeff(self.total_streams())
    }

    pub fn sum_delta(&self) -> f64 {
        self.groups.iter().map(|g| g.spread_rad).sum()
    }

    /// Local beam indices carrying users of group g (the relay backhaul
    /// beam, column 0 of its group, is excluded).
    pub fn user_beams(&self, g: usize) -> std::ops::Range<usize> {
        let lo = usize::from(self.pico_group == Some(g));
        lo..self.precoders.streams[g]
    }

    /// Spectrum of A'_{g,k} − x A''_{g,k} for local beam k of group g: the
    /// rank-one useful column against every other active beam.
    pub fn beam_spectrum(&self, g: usize, local_beam: usize, x: f64) -> Result<EigenSpectrum> {
        let e = &self.eff[g];
        let col = self.precoders.group_offset(g) + local_beam;
        let r = e.nrows();
        let mut m = DMatrix::<Complex<f64>>::zeros(r, r);
        // A' = e e^H plus A'' columns scaled by −x, assembled in one pass.
        for j in 0..e.ncols() {
            let w = if j == col {
                Complex::new(1.0, 0.0)
            } else {
                Complex::new(-x, 0.0)
            };
            let cj = e.column(j);
            for a in 0..r {
                for b in 0..r {
                    m[(a, b)] += w * cj[a] * cj[b].conj();
                }
            }
        }
        let eig = m.symmetric_eigen();
        // Eigen-solver noise scales with ‖A' − x A''‖, so exact zeros come
        // back as ±O(x·ε) and must be scrubbed at matrix scale before the
        // single-positive-eigenvalue structure check.
        let scale = eig.eigenvalues.iter().fold(0.0f64, |a, &v| a.max(v.abs()));
        let kept: Vec<f64> = eig
            .eigenvalues
            .iter()
            .copied()
            .filter(|v| v.abs() > 1e-9 * scale)
            .collect();
        // Past the spectral breakpoint the scaled interference dominates
        // the rank-one useful direction everywhere: no positive eigenvalue
        // survives and the beam fails with probability one — exactly what
        // the degenerate spectrum encodes.
        if kept.iter().all(|v| *v <= 0.0) {
            return Ok(EigenSpectrum::certain_failure());
        }
        EigenSpectrum::new(kept)
    }

    /// All beam spectra at one threshold.
    pub fn spectra_at(&self, x: f64) -> Result<SpectraAtX> {
        let mut beams = Vec::with_capacity(self.num_groups());
        for g in 0..self.num_groups() {
            let mut list = Vec::with_capacity(self.precoders.streams[g]);
            for k in 0..self.precoders.streams[g] {
                list.push(self.beam_spectrum(g, k, x)?);
            }
            beams.push(list);
        }
        Ok(SpectraAtX { x, beams })
    }

    /// Spectrum of the relay-to-user second hop for a user of the pico
    /// group at macro distance `path_gain_l` and relay distance
    /// `path_gain_dsk` (both already through the path-loss map): one
    /// positive entry from the relay link, negatives from the full macro
    /// downlink bleeding through the user's own-group channel.
    pub fn hop2_spectrum(&self, path_gain_l: f64, path_gain_dsk: f64, x: f64) -> Result<EigenSpectrum> {
        let g = self.pico_group.ok_or_else(|| {
            Error::InvalidParameter("second hop undefined without a relay".into())
        })?;
        let tau = self.tau();
        let mut vals = Vec::with_capacity(1 + self.nu[g].len());
        vals.push(tau * path_gain_dsk);
        vals.extend(self.nu[g].iter().map(|&v| -x * path_gain_l * v));
        EigenSpectrum::new(vals)
    }
}
