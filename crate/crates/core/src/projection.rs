//! Active-set projection toward `{laplacian >= 0}` and its alternation with
//! reinitialization.
//!
//! The constraint is imposed on interior nodes only. The outermost ring of
//! nodes is never modified: with replicated ghosts the discrete Laplacian
//! sums to zero over the grid, so requiring it to be non-negative on the
//! boundary as well would leave only constant fields.

use std::fmt;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::field::{hessian_determinant, laplacian, ScalarField};
use crate::sdf::reinitialize;

/// Nodes nearer than this to the grid edge are excluded from the
/// `laplacian >= -LAP_TOL` guarantee.
pub const BOUNDARY_BAND: usize = 2;
/// Verification tolerance on the discrete Laplacian of converged outputs.
pub const LAP_TOL: f64 = 0.05;
/// Minimum number of negative nodes for a region to be considered alive.
pub const MIN_REGION_PIXELS: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SweepOrder {
    /// Every active node is replaced by the average of its neighbours from
    /// the previous sweep.
    #[default]
    Jacobi,
    /// Lexicographic in-place update (Gauss-Seidel).
    InPlace,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProjectionConfig {
    pub m_max: usize,
    pub active_tol: f64,
    pub sweep: SweepOrder,
}

impl Default for ProjectionConfig {
    fn default() -> Self {
        Self {
            m_max: 30,
            active_tol: 1e-12,
            sweep: SweepOrder::Jacobi,
        }
    }
}

impl ProjectionConfig {
    pub fn validate(&self) -> Result<()> {
        if self.m_max == 0 {
            return Err(Error::InvalidParameter("m_max must be >= 1".into()));
        }
        if !(self.active_tol >= 0.0) || !self.active_tol.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "active_tol must be finite and >= 0, got {}",
                self.active_tol
            )));
        }
        Ok(())
    }
}

/// Inactive-set indicator: `true` where the node is left untouched by a
/// sweep. Boundary-ring nodes are unconstrained and always inactive.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ActiveSetMask {
    width: usize,
    height: usize,
    inactive: Vec<bool>,
}

impl ActiveSetMask {
    fn compute(psi: &ScalarField, tol: f64) -> (Self, f64) {
        let (w, h) = psi.dims();
        let v = psi.values();
        let mut inactive = vec![true; w * h];
        let min_lap = inactive
            .par_chunks_mut(w)
            .enumerate()
            .map(|(r, line)| {
                let mut min_lap = f64::INFINITY;
                if r > 0 && r + 1 < h {
                    let k0 = r * w;
                    for c in 1..w - 1 {
                        let k = k0 + c;
                        let lap = v[k - 1] + v[k + 1] + v[k - w] + v[k + w] - 4.0 * v[k];
                        line[c] = lap > tol;
                        min_lap = min_lap.min(lap);
                    }
                }
                min_lap
            })
            .reduce(|| f64::INFINITY, f64::min);
        (
            Self {
                width: w,
                height: h,
                inactive,
            },
            min_lap,
        )
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn is_inactive(&self, row: usize, col: usize) -> bool {
        self.inactive[row * self.width + col]
    }

    pub fn active_count(&self) -> usize {
        self.inactive.iter().filter(|&&b| !b).count()
    }

    pub fn as_slice(&self) -> &[bool] {
        &self.inactive
    }
}

#[derive(Debug, Clone)]
pub struct Projection {
    pub field: ScalarField,
    pub inactive: ActiveSetMask,
    pub iterations: usize,
    /// The inactive set stopped changing and every constrained node satisfies
    /// `laplacian >= -active_tol`.
    pub converged: bool,
    /// Largest absolute change made by the final sweep.
    pub last_update: f64,
}

/// One active-set sweep; returns the new field and the largest change.
fn sweep(psi: &ScalarField, inactive: &ActiveSetMask, order: SweepOrder) -> (ScalarField, f64) {
    let (w, h) = psi.dims();
    let free = inactive.as_slice();
    match order {
        SweepOrder::Jacobi => {
            let old = psi.values();
            let mut next = old.to_vec();
            let delta = next
                .par_chunks_mut(w)
                .enumerate()
                .map(|(r, line)| {
                    let mut delta: f64 = 0.0;
                    if r == 0 || r + 1 == h {
                        return delta;
                    }
                    let k0 = r * w;
                    for c in 1..w - 1 {
                        let k = k0 + c;
                        if !free[k] {
                            let v = 0.25 * (old[k - 1] + old[k + 1] + old[k - w] + old[k + w]);
                            delta = delta.max((v - line[c]).abs());
                            line[c] = v;
                        }
                    }
                    delta
                })
                .reduce(|| 0.0, f64::max);
            (ScalarField::from_raw(w, h, next), delta)
        }
        SweepOrder::InPlace => {
            let mut next = psi.values().to_vec();
            let mut delta: f64 = 0.0;
            for r in 1..h - 1 {
                for c in 1..w - 1 {
                    let k = r * w + c;
                    if !free[k] {
                        let v = 0.25 * (next[k - 1] + next[k + 1] + next[k - w] + next[k + w]);
                        delta = delta.max((v - next[k]).abs());
                        next[k] = v;
                    }
                }
            }
            (ScalarField::from_raw(w, h, next), delta)
        }
    }
}

/// Active-set iteration toward `{laplacian >= 0}`.
///
/// Inactive nodes (`laplacian > active_tol`) keep their value; active nodes
/// are replaced by their 4-neighbour average. The loop stops once the inactive
/// set repeats and the field is feasible, or after `m_max` sweeps.
pub fn project_convex(phi: &ScalarField, config: &ProjectionConfig) -> Result<Projection> {
    config.validate()?;
    let tol = config.active_tol;
    let mut psi = phi.clone();
    let (mut inactive, _) = ActiveSetMask::compute(&psi, tol);
    let mut last_update = 0.0;
    for m in 1..=config.m_max {
        let (next, delta) = sweep(&psi, &inactive, config.sweep);
        psi = next;
        last_update = delta;
        let (next_inactive, min_lap) = ActiveSetMask::compute(&psi, tol);
        let settled = next_inactive == inactive && min_lap >= -tol;
        inactive = next_inactive;
        if settled {
            return Ok(Projection {
                field: psi,
                inactive,
                iterations: m,
                converged: true,
                last_update,
            });
        }
    }
    Ok(Projection {
        field: psi,
        inactive,
        iterations: config.m_max,
        converged: false,
        last_update,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PriorConfig {
    /// Relative L2 change below which the alternation stops.
    pub eps: f64,
    pub n_max: usize,
    pub projection: ProjectionConfig,
}

impl Default for PriorConfig {
    fn default() -> Self {
        Self {
            eps: 1e-4,
            n_max: 300,
            projection: ProjectionConfig::default(),
        }
    }
}

impl PriorConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.eps > 0.0) {
            return Err(Error::InvalidParameter(format!("eps must be > 0, got {}", self.eps)));
        }
        if self.n_max == 0 {
            return Err(Error::InvalidParameter("n_max must be >= 1".into()));
        }
        self.projection.validate()
    }
}

/// One outer iteration of the reinitialize/project alternation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OuterRecord {
    pub outer: usize,
    pub inner_iterations: usize,
    pub inner_converged: bool,
    pub relative_change: f64,
    pub min_laplacian: f64,
    pub negative_pixels: usize,
}

impl fmt::Display for OuterRecord {
    /// Single-line `key=value` record.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "outer={} inner={} inner_converged={} rel_change={:.6e} min_laplacian={:.6e} negative_pixels={}",
            self.outer,
            self.inner_iterations,
            self.inner_converged,
            self.relative_change,
            self.min_laplacian,
            self.negative_pixels
        )
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ProjectionDiagnostics {
    pub outer_iterations: usize,
    pub inner_iterations_per_outer: Vec<usize>,
    pub final_min_laplacian: f64,
    pub final_relative_change: f64,
    pub converged: bool,
    pub records: Vec<OuterRecord>,
}

impl ProjectionDiagnostics {
    pub fn trace_lines(&self) -> impl Iterator<Item = String> + '_ {
        self.records.iter().map(|r| r.to_string())
    }
}

fn count_negative(phi: &ScalarField) -> usize {
    phi.values().iter().filter(|&&v| v < 0.0).count()
}

/// Alternate reinitialization and projection until the relative change
/// `||phi_n - phi_{n-1}|| / ||phi_n||` drops to `eps` or `n_max` is reached.
/// Also stops when the projection step itself moves the field by at most
/// `eps` relative.
pub fn enforce_convex_prior(phi: &ScalarField, config: &PriorConfig) -> Result<(ScalarField, ProjectionDiagnostics)> {
    enforce_convex_prior_observed(phi, config, |_, _| {})
}

/// As [`enforce_convex_prior`], calling `observe(record, field)` after every
/// outer iteration.
pub fn enforce_convex_prior_observed(
    phi: &ScalarField,
    config: &PriorConfig,
    mut observe: impl FnMut(&OuterRecord, &ScalarField),
) -> Result<(ScalarField, ProjectionDiagnostics)> {
    config.validate()?;
    let mut diag = ProjectionDiagnostics::default();
    let mut prev = phi.clone();
    for n in 1..=config.n_max {
        let negative = count_negative(&prev);
        if negative < MIN_REGION_PIXELS {
            return Err(Error::collapse(
                Some(n),
                format!("only {negative} negative pixels remain"),
            ));
        }
        let sdf = reinitialize(&prev).map_err(|e| e.at_iteration(n))?;
        let proj = project_convex(&sdf, &config.projection)?;
        let norm = proj.field.l2_norm();
        let (change, displacement) = if norm > 0.0 {
            (
                proj.field.l2_distance(&prev) / norm,
                proj.field.l2_distance(&sdf) / norm,
            )
        } else {
            (0.0, 0.0)
        };
        let record = OuterRecord {
            outer: n,
            inner_iterations: proj.iterations,
            inner_converged: proj.converged,
            relative_change: change,
            min_laplacian: laplacian(&proj.field).min_over_inner(BOUNDARY_BAND),
            negative_pixels: count_negative(&proj.field),
        };
        observe(&record, &proj.field);
        diag.outer_iterations = n;
        diag.inner_iterations_per_outer.push(proj.iterations);
        diag.final_min_laplacian = record.min_laplacian;
        diag.final_relative_change = change;
        diag.records.push(record);
        prev = proj.field;
        // Reinitialization alone keeps moving the field by roughly 1e-4
        // relative; once the projection no longer acts, the field is a
        // feasible distance function and further alternations only drift.
        if change <= config.eps || displacement <= config.eps {
            diag.converged = true;
            break;
        }
    }
    Ok((prev, diag))
}

/// Largest `|det Hessian|` over nodes at least `band` nodes from the grid edge
/// and more than `contour_band` away from the zero level set. Reported only;
/// the discrete field does not satisfy the continuum identity exactly.
pub fn max_hessian_determinant(phi: &ScalarField, band: usize, contour_band: f64) -> f64 {
    let det = hessian_determinant(phi);
    phi.inner_nodes(band.max(1))
        .filter(|&ix| phi[ix].abs() > contour_band)
        .map(|ix| det[ix].abs())
        .fold(0.0, f64::max)
}
