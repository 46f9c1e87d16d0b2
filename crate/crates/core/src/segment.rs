//! Alternating minimization for Chan-Vese and edge-based segmentation with an
//! optional convexity prior.
//!
//! Each outer iteration takes `inner_steps` explicit descent steps, then
//! either enforces the prior (reinitialize/project alternation) or simply
//! reinitializes, and finally refreshes the region means (Chan-Vese only).

use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use crate::convexity::{convexity_defects, is_convex_region, DEFAULT_SLACK};
use crate::energy::{edge_indicator_with, evolution_step, region_means, total_energy, EnergyParams, RegionStats};
use crate::error::{Error, Result};
use crate::field::{laplacian, RegionMask, ScalarField};
use crate::projection::{enforce_convex_prior, PriorConfig, ProjectionDiagnostics, SweepOrder, BOUNDARY_BAND};
use crate::sdf::reinitialize;

/// Margin (pixels) an initial region must keep from the image border.
pub const INIT_MARGIN: f64 = 2.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Model {
    ChanVese,
    /// Length term weighted by the edge indicator; no data terms.
    EdgeOnly,
}

impl FromStr for Model {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "cv" | "chan_vese" | "chan-vese" | "chanvese" => Ok(Model::ChanVese),
            "edge" | "edge_only" | "edge-only" => Ok(Model::EdgeOnly),
            other => Err(Error::Parse(format!("unknown model {other:?} (expected cv or edge)"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum InitSpec {
    /// Centre `(cx, cy)` = (column, row) and radius, in pixels.
    Circle {
        cx: f64,
        cy: f64,
        r: f64,
    },
    /// Corners `(x0, y0)` and `(x1, y1)` as (column, row), inclusive.
    Rectangle {
        x0: f64,
        y0: f64,
        x1: f64,
        y1: f64,
    },
    Mask(RegionMask),
}

fn parse_numbers(s: &str, n: usize, what: &str) -> Result<Vec<f64>> {
    let vals = s
        .split(',')
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .map_err(|e| Error::Parse(format!("{what}: {e}")))
        })
        .collect::<Result<Vec<_>>>()?;
    if vals.len() != n {
        return Err(Error::Parse(format!(
            "{what}: expected {n} numbers, got {}",
            vals.len()
        )));
    }
    Ok(vals)
}

impl InitSpec {
    /// `circle:cx,cy,r`, `rect:x0,y0,x1,y1` or `mask:<path>`.
    pub fn parse(s: &str) -> Result<Self> {
        let (kind, rest) = s
            .split_once(':')
            .ok_or_else(|| Error::Parse(format!("init {s:?}: expected kind:args")))?;
        match kind.trim() {
            "circle" => {
                let v = parse_numbers(rest, 3, "circle")?;
                Ok(InitSpec::Circle {
                    cx: v[0],
                    cy: v[1],
                    r: v[2],
                })
            }
            "rect" | "rectangle" => {
                let v = parse_numbers(rest, 4, "rect")?;
                Ok(InitSpec::Rectangle {
                    x0: v[0],
                    y0: v[1],
                    x1: v[2],
                    y1: v[3],
                })
            }
            "mask" => Ok(InitSpec::Mask(crate::imageio::load_mask(Path::new(rest.trim()))?)),
            other => Err(Error::Parse(format!("unknown init kind {other:?}"))),
        }
    }

    /// Initial region as a mask (for drawing).
    pub fn region(&self, width: usize, height: usize) -> Result<RegionMask> {
        init_levelset(self, width, height).map(|phi| RegionMask::from_sublevel(&phi))
    }
}

/// Exact signed distance function of the initial shape, negative inside.
pub fn init_levelset(spec: &InitSpec, width: usize, height: usize) -> Result<ScalarField> {
    let (wf, hf) = (width as f64, height as f64);
    let fits = |xmin: f64, ymin: f64, xmax: f64, ymax: f64| {
        xmin >= INIT_MARGIN && ymin >= INIT_MARGIN && xmax <= wf - 1.0 - INIT_MARGIN && ymax <= hf - 1.0 - INIT_MARGIN
    };
    match spec {
        &InitSpec::Circle { cx, cy, r } => {
            if !(r > 0.0) || !fits(cx - r, cy - r, cx + r, cy + r) {
                return Err(Error::invalid(format!(
                    "circle ({cx}, {cy}, r={r}) does not fit in {width}x{height} with a {INIT_MARGIN} px margin"
                )));
            }
            ScalarField::from_fn(width, height, |row, col| (col as f64 - cx).hypot(row as f64 - cy) - r)
        }
        &InitSpec::Rectangle { x0, y0, x1, y1 } => {
            if !(x1 > x0 && y1 > y0) || !fits(x0, y0, x1, y1) {
                return Err(Error::invalid(format!(
                    "rectangle ({x0}, {y0})-({x1}, {y1}) does not fit in {width}x{height} with a {INIT_MARGIN} px margin"
                )));
            }
            ScalarField::from_fn(width, height, |row, col| {
                let (x, y) = (col as f64, row as f64);
                let dx = (x0 - x).max(x - x1);
                let dy = (y0 - y).max(y - y1);
                dx.max(0.0).hypot(dy.max(0.0)) + dx.max(dy).min(0.0)
            })
        }
        InitSpec::Mask(mask) => {
            if mask.dims() != (width, height) {
                return Err(Error::invalid(format!(
                    "mask is {}x{}, image is {width}x{height}",
                    mask.width(),
                    mask.height()
                )));
            }
            if mask.is_empty() {
                return Err(Error::invalid("initial mask is empty"));
            }
            let m = INIT_MARGIN as usize;
            if mask
                .iter_inside()
                .any(|ix| ix.row < m || ix.col < m || ix.row + m >= height || ix.col + m >= width)
            {
                return Err(Error::invalid(format!(
                    "initial mask comes within {m} px of the border"
                )));
            }
            let raw = ScalarField::from_fn(width, height, |r, c| if mask.get(r, c) { -1.0 } else { 1.0 })?;
            reinitialize(&raw)
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SegmentationConfig {
    pub model: Model,
    pub energy: EnergyParams,
    pub dt: f64,
    pub outer_max: usize,
    pub inner_steps: usize,
    pub prior: PriorConfig,
    pub convex_prior: bool,
    pub init: InitSpec,
    /// Relative L2 change of phi regarded as "no change".
    pub stop_tol: f64,
    /// Consecutive small-change iterations needed to stop.
    pub stop_patience: usize,
}

impl SegmentationConfig {
    pub fn new(model: Model, init: InitSpec) -> Self {
        let (lambda, dt) = match model {
            Model::ChanVese => (1.0, 0.5),
            Model::EdgeOnly => (0.0, 1.0),
        };
        Self {
            model,
            energy: EnergyParams {
                lambda1: lambda,
                lambda2: lambda,
                ..EnergyParams::default()
            },
            dt,
            outer_max: 500,
            inner_steps: 1,
            prior: PriorConfig::default(),
            convex_prior: false,
            init,
            stop_tol: 1e-4,
            stop_patience: 3,
        }
    }

    pub fn chan_vese(init: InitSpec) -> Self {
        Self::new(Model::ChanVese, init)
    }

    pub fn edge_only(init: InitSpec) -> Self {
        Self::new(Model::EdgeOnly, init)
    }

    pub fn with_prior(mut self, on: bool) -> Self {
        self.convex_prior = on;
        self
    }

    pub fn validate(&self) -> Result<()> {
        self.energy.validate()?;
        if self.model == Model::EdgeOnly && (self.energy.lambda1 != 0.0 || self.energy.lambda2 != 0.0) {
            return Err(Error::InvalidParameter(
                "edge-only model requires lambda1 = lambda2 = 0".into(),
            ));
        }
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            return Err(Error::InvalidParameter(format!("dt must be > 0, got {}", self.dt)));
        }
        if self.outer_max == 0 || self.inner_steps == 0 || self.stop_patience == 0 {
            return Err(Error::InvalidParameter(
                "outer_max, inner_steps and stop_patience must be >= 1".into(),
            ));
        }
        if !(self.stop_tol >= 0.0) {
            return Err(Error::InvalidParameter("stop_tol must be >= 0".into()));
        }
        self.prior.validate()
    }

    /// Build from `key=value` pairs applied in order over the defaults of the
    /// selected model. Later pairs win.
    pub fn from_pairs<K: AsRef<str>, V: AsRef<str>>(pairs: &[(K, V)]) -> Result<Self> {
        let model = pairs
            .iter()
            .rev()
            .find(|(k, _)| normalize_key(k.as_ref()) == "model")
            .map(|(_, v)| v.as_ref().parse::<Model>())
            .transpose()?
            .unwrap_or(Model::ChanVese);
        let mut cfg = Self::new(
            model,
            InitSpec::Circle {
                cx: 0.0,
                cy: 0.0,
                r: 0.0,
            },
        );
        let mut has_init = false;
        for (k, v) in pairs {
            let key = normalize_key(k.as_ref());
            if key == "init" {
                has_init = true;
            }
            cfg.apply(&key, v.as_ref().trim())?;
        }
        if !has_init {
            return Err(Error::Parse("missing init".into()));
        }
        Ok(cfg)
    }

    fn apply(&mut self, key: &str, value: &str) -> Result<()> {
        fn num<T: FromStr>(key: &str, v: &str) -> Result<T>
        where
            T::Err: std::fmt::Display,
        {
            v.parse::<T>().map_err(|e| Error::Parse(format!("{key}={v}: {e}")))
        }
        match key {
            "model" => self.model = value.parse()?,
            "convex_prior" => {
                self.convex_prior = match value.to_ascii_lowercase().as_str() {
                    "on" | "true" | "1" | "yes" => true,
                    "off" | "false" | "0" | "no" => false,
                    other => return Err(Error::Parse(format!("convex_prior={other}: expected on/off"))),
                }
            }
            "mu" => self.energy.mu = num(key, value)?,
            "lambda1" => self.energy.lambda1 = num(key, value)?,
            "lambda2" => self.energy.lambda2 = num(key, value)?,
            "heaviside_eps" => self.energy.heaviside_eps = num(key, value)?,
            "grad_floor" => self.energy.grad_floor = num(key, value)?,
            "edge_scale" => self.energy.edge_scale = num(key, value)?,
            "dt" => self.dt = num(key, value)?,
            "outer_max" => self.outer_max = num(key, value)?,
            "inner_steps" => self.inner_steps = num(key, value)?,
            "stop_tol" => self.stop_tol = num(key, value)?,
            "stop_patience" => self.stop_patience = num(key, value)?,
            "eps" => self.prior.eps = num(key, value)?,
            "n_max" => self.prior.n_max = num(key, value)?,
            "m_max" => self.prior.projection.m_max = num(key, value)?,
            "active_tol" => self.prior.projection.active_tol = num(key, value)?,
            "sweep" => {
                self.prior.projection.sweep = match value.to_ascii_lowercase().as_str() {
                    "jacobi" => SweepOrder::Jacobi,
                    "inplace" | "in_place" | "gauss_seidel" => SweepOrder::InPlace,
                    other => return Err(Error::Parse(format!("sweep={other}: expected jacobi or inplace"))),
                }
            }
            "init" => self.init = InitSpec::parse(value)?,
            other => return Err(Error::Parse(format!("unknown config key {other:?}"))),
        }
        Ok(())
    }
}

fn normalize_key(k: &str) -> String {
    k.trim().to_ascii_lowercase().replace('-', "_")
}

/// Parse a `key=value` text file; `#` starts a comment.
pub fn parse_config_text(text: &str) -> Result<Vec<(String, String)>> {
    let mut pairs = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::Parse(format!("line {}: expected key=value", lineno + 1)))?;
        pairs.push((k.trim().to_string(), v.trim().to_string()));
    }
    Ok(pairs)
}

/// One row of the per-iteration trace.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRow {
    pub iter: usize,
    pub energy: f64,
    pub c1: Option<f64>,
    pub c2: Option<f64>,
    pub min_laplacian: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvexityCertificate {
    pub convex: bool,
    pub slack: f64,
}

#[derive(Debug, Clone)]
pub struct SegmentationResult {
    pub phi_final: ScalarField,
    pub region: RegionMask,
    /// `(c1, c2)` = (background, object) means; absent for the edge model.
    pub means: Option<(f64, f64)>,
    pub trace: Vec<TraceRow>,
    pub outer_iterations: usize,
    /// Explicit substeps taken per descent step of size `dt`.
    pub substeps: usize,
    /// Stopped by the change criterion rather than `outer_max`.
    pub converged: bool,
    pub convexity: Option<ConvexityCertificate>,
    pub projection_diagnostics: Vec<ProjectionDiagnostics>,
}

impl SegmentationResult {
    pub fn energy_trace(&self) -> Vec<f64> {
        self.trace.iter().map(|r| r.energy).collect()
    }

    /// CSV with header `iter,energy,c1,c2,min_laplacian`.
    pub fn trace_csv(&self) -> String {
        let mut out = String::from("iter,energy,c1,c2,min_laplacian\n");
        let opt = |v: Option<f64>| v.map(|x| format!("{x:.17e}")).unwrap_or_default();
        for r in &self.trace {
            let _ = writeln!(
                out,
                "{},{:.17e},{},{},{:.17e}",
                r.iter,
                r.energy,
                opt(r.c1),
                opt(r.c2),
                r.min_laplacian
            );
        }
        out
    }
}

/// Segment `image` (values in `[0, 1]`) starting from `config.init`.
pub fn segment(image: &ScalarField, config: &SegmentationConfig) -> Result<SegmentationResult> {
    config.validate()?;
    let phi0 = init_levelset(&config.init, image.width(), image.height())?;
    segment_from(image, phi0, config)
}

/// Segment starting from an explicit level-set function (object = `{phi < 0}`).
pub fn segment_from(image: &ScalarField, phi0: ScalarField, config: &SegmentationConfig) -> Result<SegmentationResult> {
    config.validate()?;
    image.ensure_same_dims(&phi0, "segment")?;
    let params = &config.energy;
    let eps = params.heaviside_eps;
    let edge = match config.model {
        Model::EdgeOnly => Some(edge_indicator_with(image, params.edge_scale)),
        Model::ChanVese => None,
    };
    let g = edge.as_ref();
    // Subcycle each descent step so the explicit length term stays stable.
    let substeps = (config.dt / params.stable_step(g)?).ceil().max(1.0) as usize;
    let h = config.dt / substeps as f64;
    let mut phi = phi0;
    let mut stats = match config.model {
        Model::ChanVese => region_means(image, &phi, eps).map_err(|e| e.at_iteration(0))?,
        Model::EdgeOnly => RegionStats {
            c1: 0.0,
            c2: 0.0,
            n1: 0.0,
            n2: 0.0,
        },
    };

    let mut trace = Vec::new();
    let mut diagnostics = Vec::new();
    let mut quiet = 0;
    let mut converged = false;
    let mut outer = 0;
    for l in 1..=config.outer_max {
        outer = l;
        let mut half = phi.clone();
        for _ in 0..config.inner_steps * substeps {
            half = evolution_step(&half, image, &stats, g, params, h)?;
        }
        let next = if config.convex_prior {
            let (out, diag) = enforce_convex_prior(&half, &config.prior).map_err(|e| match e {
                Error::RegionCollapse {
                    iteration: Some(n),
                    detail,
                } => Error::RegionCollapse {
                    iteration: Some(l),
                    detail: format!("{detail} (prior alternation {n})"),
                },
                other => other.at_iteration(l),
            })?;
            diagnostics.push(diag);
            out
        } else {
            reinitialize(&half).map_err(|e| e.at_iteration(l))?
        };
        if config.model == Model::ChanVese {
            stats = region_means(image, &next, eps).map_err(|e| e.at_iteration(l))?;
        }
        let energy = total_energy(image, &next, &stats, g, params)?;
        let (c1, c2) = match config.model {
            Model::ChanVese => (Some(stats.c1), Some(stats.c2)),
            Model::EdgeOnly => (None, None),
        };
        trace.push(TraceRow {
            iter: l,
            energy,
            c1,
            c2,
            min_laplacian: laplacian(&next).min_over_inner(BOUNDARY_BAND),
        });
        let norm = next.l2_norm();
        let change = if norm > 0.0 { next.l2_distance(&phi) / norm } else { 0.0 };
        phi = next;
        if change <= config.stop_tol {
            quiet += 1;
            if quiet >= config.stop_patience {
                converged = true;
                break;
            }
        } else {
            quiet = 0;
        }
    }

    let region = RegionMask::from_sublevel(&phi);
    let convexity = if config.convex_prior {
        let convex = !region.is_empty() && is_convex_region(&region, DEFAULT_SLACK)?;
        if !convex {
            let defects = convexity_defects(&region, DEFAULT_SLACK).len();
            return Err(Error::ConvexityViolation {
                detail: format!(
                    "region of {} px has {defects} hull pixels deeper than {DEFAULT_SLACK} px outside it after {outer} iterations",
                    region.count()
                ),
            });
        }
        Some(ConvexityCertificate {
            convex,
            slack: DEFAULT_SLACK,
        })
    } else {
        None
    };
    Ok(SegmentationResult {
        phi_final: phi,
        region,
        means: match config.model {
            Model::ChanVese => Some((stats.c1, stats.c2)),
            Model::EdgeOnly => None,
        },
        trace,
        outer_iterations: outer,
        substeps,
        converged,
        convexity,
        projection_diagnostics: diagnostics,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn circle_init_is_analytic() {
        let phi = init_levelset(
            &InitSpec::Circle {
                cx: 100.0,
                cy: 100.0,
                r: 40.0,
            },
            200,
            200,
        )
        .unwrap();
        assert_eq!(phi.get(100, 100), -40.0);
        assert_eq!(phi.get(100, 140), 0.0);
    }

    #[test]
    fn rectangle_init_is_zero_on_boundary() {
        let spec = InitSpec::Rectangle {
            x0: 10.0,
            y0: 12.0,
            x1: 30.0,
            y1: 25.0,
        };
        let phi = init_levelset(&spec, 50, 40).unwrap();
        for c in 10..=30 {
            assert!(phi.get(12, c).abs() <= 0.51);
            assert!(phi.get(25, c).abs() <= 0.51);
        }
        assert_eq!(phi.get(18, 20), -6.0);
        assert_eq!(phi.get(0, 0), 10f64.hypot(12.0));
    }

    #[test]
    fn init_out_of_bounds_is_rejected() {
        assert!(init_levelset(
            &InitSpec::Circle {
                cx: 10.0,
                cy: 10.0,
                r: 9.0
            },
            40,
            40
        )
        .is_err());
        assert!(init_levelset(
            &InitSpec::Rectangle {
                x0: 1.0,
                y0: 5.0,
                x1: 10.0,
                y1: 10.0
            },
            40,
            40
        )
        .is_err());
        let mut m = RegionMask::empty(20, 20);
        m.set(1, 5, true);
        assert!(init_levelset(&InitSpec::Mask(m), 20, 20).is_err());
        assert!(init_levelset(&InitSpec::Mask(RegionMask::empty(20, 20)), 20, 20).is_err());
    }

    #[test]
    fn parses_init_specs() {
        assert_eq!(
            InitSpec::parse("circle:64,60.5,20").unwrap(),
            InitSpec::Circle {
                cx: 64.0,
                cy: 60.5,
                r: 20.0
            }
        );
        assert_eq!(
            InitSpec::parse("rect:1,2,3,4").unwrap(),
            InitSpec::Rectangle {
                x0: 1.0,
                y0: 2.0,
                x1: 3.0,
                y1: 4.0
            }
        );
        assert!(InitSpec::parse("circle:1,2").is_err());
        assert!(InitSpec::parse("blob:1").is_err());
    }

    #[test]
    fn config_pairs_follow_model_defaults() {
        let text = "# run\nmodel = edge\ninit=circle:50,50,20\nmu=3 # weight\nconvex-prior=on\n";
        let pairs = parse_config_text(text).unwrap();
        let cfg = SegmentationConfig::from_pairs(&pairs).unwrap();
        assert_eq!(cfg.model, Model::EdgeOnly);
        assert_eq!(cfg.energy.lambda1, 0.0);
        assert_eq!(cfg.dt, 1.0);
        assert_eq!(cfg.energy.mu, 3.0);
        assert!(cfg.convex_prior);
        cfg.validate().unwrap();
        assert!(SegmentationConfig::from_pairs(&[("init", "circle:5,5,2"), ("bogus", "1")]).is_err());
        assert!(SegmentationConfig::from_pairs(&[("mu", "1")]).is_err());
    }

    #[test]
    fn edge_model_rejects_data_weights() {
        let mut cfg = SegmentationConfig::edge_only(InitSpec::Circle {
            cx: 10.0,
            cy: 10.0,
            r: 5.0,
        });
        cfg.energy.lambda1 = 1.0;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn trace_csv_header() {
        let r = SegmentationResult {
            phi_final: ScalarField::filled(3, 3, 1.0).unwrap(),
            region: RegionMask::empty(3, 3),
            means: None,
            trace: vec![TraceRow {
                iter: 1,
                energy: 2.0,
                c1: None,
                c2: Some(0.5),
                min_laplacian: -0.1,
            }],
            outer_iterations: 1,
            substeps: 1,
            converged: false,
            convexity: None,
            projection_diagnostics: vec![],
        };
        let csv = r.trace_csv();
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some("iter,energy,c1,c2,min_laplacian"));
        let row: Vec<&str> = lines.next().unwrap().split(',').collect();
        assert_eq!(row.len(), 5);
        assert_eq!(row[2], "");
    }
}
