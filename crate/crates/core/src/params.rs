//! System-level parameters and unit conversions.
//!
//! Unit conventions, applied once at this boundary:
//! * angles enter in degrees and are stored in radians;
//! * powers enter in dBm, SNR-like quantities in dB, both stored linear;
//! * distances stay in meters; path loss is evaluated against a 1 km
//!   reference distance, `(d/1000)^{-α}`, the scale at which the curves of
//!   interest live in the −10..20 dB threshold range.
//!
//! The per-stream SNR ρ divides the macro power budget by the number of
//! data streams S, and S varies between scenarios (a relay adds a stream,
//! removing the pico removes one). We therefore store the budget ρ·S and
//! derive ρ per scenario, so comparisons hold total radiated power fixed.

use crate::error::{Error, Result};

/// Speed of light (m/s).
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Reference distance for path loss (meters).
pub const PATH_LOSS_REF_M: f64 = 1000.0;

pub fn db_to_linear(db: f64) -> f64 {
    10.0_f64.powf(db / 10.0)
}

pub fn linear_to_db(x: f64) -> f64 {
    10.0 * x.log10()
}

pub fn dbm_to_watts(dbm: f64) -> f64 {
    10.0_f64.powf((dbm - 30.0) / 10.0)
}

/// Thermal noise power in dBm for a given bandwidth and noise figure.
pub fn noise_power_dbm(bandwidth_hz: f64, noise_figure_db: f64) -> f64 {
    -174.0 + 10.0 * bandwidth_hz.log10() + noise_figure_db
}

/// Free-space pre-factor κ = λ_c / 4π (meters).
pub fn kappa(carrier_hz: f64) -> f64 {
    SPEED_OF_LIGHT / carrier_hz / (4.0 * std::f64::consts::PI)
}

/// Path gain (d / 1 km)^{-α}.
pub fn path_gain(dist_m: f64, alpha: f64) -> f64 {
    (dist_m / PATH_LOSS_REF_M).powf(-alpha)
}

/// Angular sector of one user group: center angle-of-arrival and half-width
/// angular spread, radians.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GroupGeometry {
    pub aoa_rad: f64,
    pub spread_rad: f64,
}

impl GroupGeometry {
    pub fn from_degrees(aoa_deg: f64, spread_deg: f64) -> Result<Self> {
        if !(spread_deg > 0.0 && spread_deg < 90.0) {
            return Err(Error::InvalidParameter(format!(
                "angular spread must be in (0, 90) degrees, got {spread_deg}"
            )));
        }
        if !aoa_deg.is_finite() {
            return Err(Error::InvalidParameter("AoA must be finite".into()));
        }
        Ok(Self {
            aoa_rad: aoa_deg.to_radians(),
            spread_rad: spread_deg.to_radians(),
        })
    }
}

/// Radio-level parameters shared by analysis and simulation.
#[derive(Debug, Clone)]
pub struct SystemParams {
    /// Number of macro antennas M.
    pub num_antennas: usize,
    /// Antenna spacing in carrier wavelengths.
    pub antenna_spacing: f64,
    /// Path-loss exponent α (> 2 so the geometric integrals converge).
    pub path_loss_exponent: f64,
    /// Per-stream SNR times stream count: the macro power budget over noise.
    pub rho_times_s: f64,
    /// Pico-to-macro transmit power ratio P_s/P_m (linear).
    pub pico_power_ratio: f64,
    /// κ² = (λ_c/4π)², used only by the diagnostic flag below.
    pub kappa_sq: f64,
    /// Whether the pico-interference term seen by macro-served users carries
    /// the same κ² free-space factor as every other term (the consistent
    /// choice, default). Disabling reproduces a published-formula variant
    /// that omits it and is kept for diagnostics only.
    pub kappa_sq_in_pico_interference: bool,
}

impl SystemParams {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        num_antennas: usize,
        antenna_spacing: f64,
        path_loss_exponent: f64,
        rho_times_s: f64,
        pico_power_ratio: f64,
        kappa_sq: f64,
        kappa_sq_in_pico_interference: bool,
    ) -> Result<Self> {
        if num_antennas == 0 {
            return Err(Error::InvalidParameter("need at least one antenna".into()));
        }
        if !(antenna_spacing > 0.0) {
            return Err(Error::InvalidParameter("antenna spacing must be positive".into()));
        }
        if !(path_loss_exponent > 2.0) {
            return Err(Error::InvalidParameter(format!(
                "path-loss exponent must exceed 2, got {path_loss_exponent}"
            )));
        }
        if !(rho_times_s > 0.0) || !(pico_power_ratio > 0.0) || !(kappa_sq > 0.0) {
            return Err(Error::InvalidParameter(
                "power quantities must be positive".into(),
            ));
        }
        Ok(Self {
            num_antennas,
            antenna_spacing,
            path_loss_exponent,
            rho_times_s,
            pico_power_ratio,
            kappa_sq,
            kappa_sq_in_pico_interference,
        })
    }

    /// Per-stream SNR ρ when the macro radiates `streams` data streams.
    pub fn rho(&self, streams: usize) -> f64 {
        self.rho_times_s / streams as f64
    }

    /// Coefficient of the pico link terms: κ²P_s/(ρN₀) = S·(P_s/P_m).
    /// Multiplies d_sk^{-α}|h_sk|² in both the relay's second hop and the
    /// pico interference seen by macro users (κ² cancels against ρ).
    pub fn tau(&self, streams: usize) -> f64 {
        streams as f64 * self.pico_power_ratio
    }

    /// Coefficient of the pico interference term in the macro-user SINR.
    /// Equals [`Self::tau`] unless the diagnostic κ²-free variant is chosen.
    pub fn pico_interference_coeff(&self, streams: usize) -> f64 {
        if self.kappa_sq_in_pico_interference {
            self.tau(streams)
        } else {
            self.tau(streams) / self.kappa_sq
        }
    }

    pub fn path_gain(&self, dist_m: f64) -> f64 {
        path_gain(dist_m, self.path_loss_exponent)
    }
}

/// ρ·S from physical quantities: P_m κ² / N₀ with κ from the carrier.
pub fn rho_times_s_from_powers(
    p_m_dbm: f64,
    carrier_hz: f64,
    bandwidth_hz: f64,
    noise_figure_db: f64,
) -> f64 {
    let p_m = dbm_to_watts(p_m_dbm);
    let n0 = dbm_to_watts(noise_power_dbm(bandwidth_hz, noise_figure_db));
    let k = kappa(carrier_hz);
    p_m * k * k / n0
}
