//! Cell geometry: macro disk, group wedges, the pico relay disk, the
//! association rule, and the pico-served region in polar coordinates.
//!
//! The macro BS sits at the origin and serves a disk of radius R. Each user
//! group occupies a wedge of half-width Δ_g around its AoA θ_g; users are
//! uniform in area over the wedges. The pico relay sits on the bisector of
//! one group at distance d_ms and picks up every user that is farther from
//! the macro than the relay is (l ≥ d_ms) and inside the relay disk of
//! radius r. In polar coordinates that region is exactly
//!
//! ```text
//! { (l, β) : |β − θ_g| ≤ θ0,  d_ms ≤ l ≤ ℓ1(β) },   θ0 = 2 arcsin(r/2d_ms),
//! ℓ1(β) = d_ms cos(β−θ_g) + sqrt(r² − d_ms² sin²(β−θ_g)) .
//! ```
//!
//! Closed-form association probabilities assume the relay disk stays inside
//! both the cell and the wedge; `effective_pico_prob` integrates the region
//! directly and stays valid when the disk is clipped by either boundary.

use rand::Rng;

use crate::error::{Error, Result};
use crate::numerics::adaptive_gauss_kronrod;
use crate::params::GroupGeometry;

/// User position: distance from the macro BS and absolute azimuth.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolarPoint {
    pub radius: f64,
    pub angle: f64,
}

/// Macro cell with an optional pico relay (`pico_radius = 0` disables it).
#[derive(Debug, Clone, Copy)]
pub struct CellLayout {
    /// Macro cell radius R (meters).
    pub cell_radius: f64,
    /// Pico disk radius r (meters); 0 means no relay deployed.
    pub pico_radius: f64,
    /// Macro-to-pico distance d_ms (meters).
    pub pico_dist: f64,
    /// Absolute azimuth of the pico relay (= AoA of its group).
    pub pico_aoa: f64,
}

impl CellLayout {
    pub fn new(cell_radius: f64, pico_radius: f64, pico_dist: f64, pico_aoa: f64) -> Result<Self> {
        if !(cell_radius > 0.0) {
            return Err(Error::InvalidParameter("cell radius must be positive".into()));
        }
        if pico_radius < 0.0 {
            return Err(Error::InvalidParameter("pico radius cannot be negative".into()));
        }
        if pico_radius > 0.0 {
            if !(pico_dist > 0.0 && pico_dist <= cell_radius) {
                return Err(Error::InvalidParameter(format!(
                    "pico distance must lie in (0, R], got {pico_dist}"
                )));
            }
            if pico_radius >= pico_dist {
                return Err(Error::InvalidParameter(format!(
                    "pico disk (r={pico_radius}) must not contain the macro BS (d_ms={pico_dist})"
                )));
            }
        }
        Ok(Self {
            cell_radius,
            pico_radius,
            pico_dist,
            pico_aoa,
        })
    }

    pub fn has_pico(&self) -> bool {
        self.pico_radius > 0.0
    }

    /// Half-opening θ of the chord construction, arcsin(r / 2 d_ms).
    pub fn theta(&self) -> f64 {
        if !self.has_pico() {
            return 0.0;
        }
        (self.pico_radius / (2.0 * self.pico_dist)).asin()
    }

    /// Angular half-width θ0 = 2 arcsin(r / 2 d_ms) of the pico-served region.
    pub fn theta0(&self) -> f64 {
        2.0 * self.theta()
    }

    /// Distance from a user to the pico relay (law of cosines).
    pub fn dist_user_pico(&self, point: &PolarPoint) -> f64 {
        let db = point.angle - self.pico_aoa;
        let l = point.radius;
        let d = self.pico_dist;
        (l * l + d * d - 2.0 * l * d * db.cos()).max(0.0).sqrt()
    }

    /// Relay-aware association rule: the user prefers the pico iff it is
    /// farther from the macro than the relay is and inside the relay disk.
    pub fn is_pico_associated(&self, point: &PolarPoint) -> bool {
        self.has_pico()
            && point.radius >= self.pico_dist
            && self.dist_user_pico(point) <= self.pico_radius
    }

    /// Path-loss-based association: the pico wins when its (power-weighted)
    /// path loss beats the macro's, P_s d_su^{-α} ≥ P_m d_mu^{-α}, and the
    /// user is beyond the relay. Alternative rule used for strategy sweeps.
    pub fn is_pico_associated_pathloss(
        &self,
        point: &PolarPoint,
        power_ratio: f64,
        alpha: f64,
    ) -> bool {
        if !self.has_pico() || point.radius < self.pico_dist {
            return false;
        }
        let d_su = self.dist_user_pico(point);
        power_ratio.powf(1.0 / alpha) * point.radius >= d_su
    }

    /// Outer radial boundary ℓ1(β) of the pico-served region.
    pub fn pico_region_upper(&self, angle: f64) -> Result<f64> {
        let db = angle - self.pico_aoa;
        if db.abs() > self.theta0() + 1e-12 {
            return Err(Error::InvalidParameter(format!(
                "angle offset {db} outside the pico sector ±{}",
                self.theta0()
            )));
        }
        let d = self.pico_dist;
        let r = self.pico_radius;
        let s = d * db.sin();
        Ok(d * db.cos() + (r * r - s * s).max(0.0).sqrt())
    }

    /// Relative angle beyond which ℓ1(β) drops back inside the cell. Zero
    /// when the relay disk never pokes out of the cell (d_ms + r ≤ R).
    pub fn clip_angle(&self) -> f64 {
        let (big_r, d, r) = (self.cell_radius, self.pico_dist, self.pico_radius);
        if d + r <= big_r {
            return 0.0;
        }
        let c = (big_r * big_r + d * d - r * r) / (2.0 * big_r * d);
        c.clamp(-1.0, 1.0).acos()
    }
}

/// Association probabilities of one group, conditioned on membership.
#[derive(Debug, Clone, Copy)]
pub struct AssociationSplit {
    /// Probability of macro service given membership in the pico's group.
    pub p_gm: f64,
    /// Probability of pico service given membership in the pico's group.
    pub p_gs: f64,
    /// Chord half-angle θ = arcsin(r/2d_ms).
    pub theta: f64,
    /// Pico sector half-width θ0 = 2θ.
    pub theta0: f64,
    /// Unconditional macro-served mass of the pico group: fraction of the
    /// whole cell occupied by "in pico group, macro-served" users.
    pub upsilon: f64,
}

/// Closed-form association split for the pico's group.
///
/// Valid when the relay disk lies inside both the cell (d_ms + r ≤ R) and
/// the group wedge (θ0 ≤ Δ_g); both computed forms of the lens area are
/// asserted equal, and Υ comes from the explicit antiderivative.
pub fn association_probability(
    layout: &CellLayout,
    delta_g: f64,
    sum_delta: f64,
) -> Result<AssociationSplit> {
    if !(delta_g > 0.0 && sum_delta >= delta_g) {
        return Err(Error::InvalidParameter("invalid wedge widths".into()));
    }
    let group_mass = delta_g / sum_delta;
    if !layout.has_pico() {
        return Ok(AssociationSplit {
            p_gm: 1.0,
            p_gs: 0.0,
            theta: 0.0,
            theta0: 0.0,
            upsilon: group_mass,
        });
    }
    let (big_r, d, r) = (layout.cell_radius, layout.pico_dist, layout.pico_radius);
    if r > 2.0 * d {
        return Err(Error::InfeasibleGeometry(format!(
            "relay disk radius {r} exceeds twice the relay distance {d}"
        )));
    }
    let theta = layout.theta();
    let theta0 = layout.theta0();

    // Served area, direct form: the relay disk minus the part closer to the
    // macro, written through the chord angle θ.
    let area_direct = r * r * (std::f64::consts::FRAC_PI_2 + theta + 0.5 * (2.0 * theta).sin())
        - d * d * (2.0 * theta - 0.5 * (4.0 * theta).sin());

    // Same area assembled from the circular-segment pieces S1 (disk side)
    // and S2 (arc side): served = πr² − S1 − S2.
    let phi = std::f64::consts::FRAC_PI_2 - theta;
    let s1 = r * r * phi - 0.5 * r * r * (2.0 * phi).sin();
    let s2 = 2.0 * theta * d * d - 0.5 * d * d * (4.0 * theta).sin();
    let area_segments = std::f64::consts::PI * r * r - s1 - s2;
    assert!(
        (area_direct - area_segments).abs() <= 1e-12 * area_segments.abs().max(1.0),
        "lens-area forms disagree: {area_direct} vs {area_segments}"
    );

    let p_gs = area_segments / (delta_g * big_r * big_r);
    if !(0.0..=1.0 + 1e-12).contains(&p_gs) {
        return Err(Error::InfeasibleGeometry(format!(
            "association probability {p_gs} outside [0,1]; relay disk too large for the wedge"
        )));
    }
    let p_gs = p_gs.min(1.0);

    // Macro-served mass of the pico group over the whole cell, explicit
    // antiderivative form.
    let norm = big_r * big_r * sum_delta;
    let sin_t0 = theta0.sin();
    let root = (r * r - d * d * sin_t0 * sin_t0).max(0.0).sqrt();
    let upsilon = group_mass + d * d * theta0 / norm
        - (d * d * (2.0 * theta0).sin()
            + 2.0 * r * r * theta0
            + 2.0 * d * sin_t0 * root
            + 2.0 * r * r * ((d / r) * sin_t0).clamp(-1.0, 1.0).asin())
            / (2.0 * norm);

    Ok(AssociationSplit {
        p_gm: 1.0 - p_gs,
        p_gs,
        theta,
        theta0,
        upsilon,
    })
}

/// Pico-service probability (conditional on pico-group membership) by direct
/// integration of the served region, valid even when the relay disk is
/// clipped by the cell border or the wedge border.
pub fn effective_pico_prob(layout: &CellLayout, delta_g: f64) -> Result<f64> {
    if !layout.has_pico() {
        return Ok(0.0);
    }
    let (big_r, d) = (layout.cell_radius, layout.pico_dist);
    let lim = layout.theta0().min(delta_g);
    let clip = layout.clip_angle().min(lim);
    // Inside |β̃| < clip the outer boundary is the cell border R.
    let clipped_mass = clip * (big_r * big_r - d * d) / 2.0;
    // Beyond it the boundary is ℓ1(β̃).
    let free_mass = if clip < lim {
        adaptive_gauss_kronrod(
            |db| {
                let outer = layout
                    .pico_region_upper(layout.pico_aoa + db)
                    .unwrap_or(d)
                    .min(big_r);
                (outer * outer - d * d).max(0.0) / 2.0
            },
            clip,
            lim,
            1e-10 * big_r * big_r,
        )?
    } else {
        0.0
    };
    Ok(2.0 * (clipped_mass + free_mass) / (delta_g * big_r * big_r))
}

/// Region masses actually used by the averaged-outage assembly; they fall
/// back to boundary-aware quadrature so sweeps that push the relay disk
/// against the cell border stay exact.
#[derive(Debug, Clone, Copy)]
pub struct RegionMasses {
    /// Fraction of the cell in the pico's group and macro-served.
    pub macro_in_pico_group: f64,
    /// Fraction of the cell that is pico-served.
    pub pico_served: f64,
    /// Conditional pico-service probability within the pico group.
    pub p_gs: f64,
}

pub fn region_masses(layout: &CellLayout, delta_g: f64, sum_delta: f64) -> Result<RegionMasses> {
    let p_gs = effective_pico_prob(layout, delta_g)?;
    let group_mass = delta_g / sum_delta;
    Ok(RegionMasses {
        macro_in_pico_group: group_mass * (1.0 - p_gs),
        pico_served: group_mass * p_gs,
        p_gs,
    })
}

/// Draw `count` users uniform in area over the union of the group wedges;
/// returns positions with the index of the wedge containing each.
pub fn drop_users<R: Rng + ?Sized>(
    count: usize,
    groups: &[GroupGeometry],
    cell_radius: f64,
    rng: &mut R,
) -> Vec<(PolarPoint, usize)> {
    let total: f64 = groups.iter().map(|g| g.spread_rad).sum();
    let mut users = Vec::with_capacity(count);
    for _ in 0..count {
        let mut pick = rng.random::<f64>() * total;
        let mut gid = groups.len() - 1;
        for (i, g) in groups.iter().enumerate() {
            if pick < g.spread_rad {
                gid = i;
                break;
            }
            pick -= g.spread_rad;
        }
        users.push((sample_in_wedge(&groups[gid], cell_radius, rng), gid));
    }
    users
}

/// Draw exactly `counts[g]` users uniform in area inside each wedge.
pub fn drop_users_partitioned<R: Rng + ?Sized>(
    counts: &[usize],
    groups: &[GroupGeometry],
    cell_radius: f64,
    rng: &mut R,
) -> Vec<(PolarPoint, usize)> {
    let mut users = Vec::with_capacity(counts.iter().sum());
    for (gid, (&n, g)) in counts.iter().zip(groups).enumerate() {
        for _ in 0..n {
            users.push((sample_in_wedge(g, cell_radius, rng), gid));
        }
    }
    users
}

fn sample_in_wedge<R: Rng + ?Sized>(
    group: &GroupGeometry,
    cell_radius: f64,
    rng: &mut R,
) -> PolarPoint {
    let beta = group.aoa_rad + (2.0 * rng.random::<f64>() - 1.0) * group.spread_rad;
    let radius = cell_radius * rng.random::<f64>().sqrt();
    PolarPoint { radius, angle: beta }
}
