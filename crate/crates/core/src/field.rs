//! Grid containers and finite-difference stencils.
//!
//! All grids are row-major with unit spacing. Stencils treat out-of-range
//! neighbours as replicated copies of the nearest edge node, which gives a
//! zero normal derivative on the grid boundary.

use std::fmt::Write as _;
use std::ops::{Index, IndexMut};

use rayon::prelude::*;

use crate::error::{Error, Result};

/// Smallest admissible grid edge; stencils need at least one interior node.
pub const MIN_DIM: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct GridIndex {
    pub row: usize,
    pub col: usize,
}

impl GridIndex {
    pub fn new(row: usize, col: usize) -> Self {
        Self { row, col }
    }
}

fn check_dims(width: usize, height: usize) -> Result<()> {
    if width < MIN_DIM || height < MIN_DIM {
        return Err(Error::invalid(format!(
            "grid must be at least {MIN_DIM}x{MIN_DIM}, got {width}x{height}"
        )));
    }
    Ok(())
}

/// Real-valued function sampled on a 2D pixel grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    width: usize,
    height: usize,
    values: Vec<f64>,
}

impl ScalarField {
    pub fn new(width: usize, height: usize, values: Vec<f64>) -> Result<Self> {
        check_dims(width, height)?;
        if values.len() != width * height {
            return Err(Error::invalid(format!(
                "expected {} values for a {width}x{height} grid, got {}",
                width * height,
                values.len()
            )));
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::invalid(format!(
                "non-finite value at row {}, col {}",
                pos / width,
                pos % width
            )));
        }
        Ok(Self { width, height, values })
    }

    pub fn filled(width: usize, height: usize, value: f64) -> Result<Self> {
        Self::new(width, height, vec![value; width * height])
    }

    /// Sample `f(row, col)` at every node.
    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> f64) -> Result<Self> {
        let mut values = Vec::with_capacity(width * height);
        for row in 0..height {
            for col in 0..width {
                values.push(f(row, col));
            }
        }
        Self::new(width, height, values)
    }

    /// Build from values that are finite by construction (internal stencil outputs).
    pub(crate) fn from_raw(width: usize, height: usize, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), width * height);
        debug_assert!(values.iter().all(|v| v.is_finite()));
        Self { width, height, values }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub(crate) fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.values[row * self.width + col]
    }

    /// Value at `(row, col)` with replicate extension outside the grid.
    #[inline]
    pub fn get_clamped(&self, row: isize, col: isize) -> f64 {
        let r = row.clamp(0, self.height as isize - 1) as usize;
        let c = col.clamp(0, self.width as isize - 1) as usize;
        self.values[r * self.width + c]
    }

    /// Set a value; non-finite values are rejected.
    pub fn set(&mut self, row: usize, col: usize, value: f64) -> Result<()> {
        if !value.is_finite() {
            return Err(Error::invalid("non-finite value"));
        }
        self.values[row * self.width + col] = value;
        Ok(())
    }

    pub fn same_dims(&self, other: &ScalarField) -> bool {
        self.width == other.width && self.height == other.height
    }

    pub(crate) fn ensure_same_dims(&self, other: &ScalarField, what: &str) -> Result<()> {
        if self.same_dims(other) {
            Ok(())
        } else {
            Err(Error::invalid(format!(
                "{what}: dimension mismatch {}x{} vs {}x{}",
                self.width, self.height, other.width, other.height
            )))
        }
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<ScalarField> {
        ScalarField::new(self.width, self.height, self.values.iter().map(|&v| f(v)).collect())
    }

    /// `a * self + b * other`.
    pub fn linear_combination(&self, a: f64, other: &ScalarField, b: f64) -> Result<ScalarField> {
        self.ensure_same_dims(other, "linear combination")?;
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(&x, &y)| a * x + b * y)
            .collect();
        ScalarField::new(self.width, self.height, values)
    }

    pub fn l2_norm(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn l2_distance(&self, other: &ScalarField) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    }

    pub fn max_abs_difference(&self, other: &ScalarField) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    pub fn min_value(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max_value(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Nodes at least `band` nodes away from every grid edge.
    pub fn inner_nodes(&self, band: usize) -> impl Iterator<Item = GridIndex> + '_ {
        let (w, h) = (self.width, self.height);
        (band..h.saturating_sub(band))
            .flat_map(move |row| (band..w.saturating_sub(band)).map(move |col| GridIndex { row, col }))
    }

    /// Minimum over nodes at least `band` nodes from the grid edge.
    pub fn min_over_inner(&self, band: usize) -> f64 {
        self.inner_nodes(band).map(|ix| self[ix]).fold(f64::INFINITY, f64::min)
    }

    /// Plain-text matrix: first line `rows cols`, then one row per line with
    /// 17 significant digits.
    pub fn to_text(&self) -> String {
        let mut out = String::with_capacity(self.values.len() * 25 + 16);
        let _ = writeln!(out, "{} {}", self.height, self.width);
        for row in self.values.chunks(self.width) {
            let mut first = true;
            for v in row {
                if !first {
                    out.push(' ');
                }
                first = false;
                let _ = write!(out, "{v:.16e}");
            }
            out.push('\n');
        }
        out
    }

    pub fn from_text(text: &str) -> Result<ScalarField> {
        let mut tokens = text.split_ascii_whitespace();
        let mut next_usize = |what: &str| -> Result<usize> {
            tokens
                .next()
                .ok_or_else(|| Error::Parse(format!("missing {what}")))?
                .parse::<usize>()
                .map_err(|e| Error::Parse(format!("bad {what}: {e}")))
        };
        let rows = next_usize("row count")?;
        let cols = next_usize("column count")?;
        let values = tokens
            .map(|t| {
                t.parse::<f64>()
                    .map_err(|e| Error::Parse(format!("bad value {t:?}: {e}")))
            })
            .collect::<Result<Vec<_>>>()?;
        if values.len() != rows * cols {
            return Err(Error::Parse(format!(
                "expected {} values, found {}",
                rows * cols,
                values.len()
            )));
        }
        ScalarField::new(cols, rows, values)
    }
}

impl Index<GridIndex> for ScalarField {
    type Output = f64;
    fn index(&self, ix: GridIndex) -> &f64 {
        &self.values[ix.row * self.width + ix.col]
    }
}

impl IndexMut<GridIndex> for ScalarField {
    fn index_mut(&mut self, ix: GridIndex) -> &mut f64 {
        &mut self.values[ix.row * self.width + ix.col]
    }
}

/// Binary grid marking a region; `true` means inside the object.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct RegionMask {
    width: usize,
    height: usize,
    inside: Vec<bool>,
}

impl RegionMask {
    pub fn new(width: usize, height: usize, inside: Vec<bool>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::invalid("mask must have positive dimensions"));
        }
        if inside.len() != width * height {
            return Err(Error::invalid(format!(
                "expected {} mask entries, got {}",
                width * height,
                inside.len()
            )));
        }
        Ok(Self { width, height, inside })
    }

    pub fn empty(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            inside: vec![false; width * height],
        }
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> bool) -> Self {
        let mut inside = Vec::with_capacity(width * height);
        for row in 0..height {
            for col in 0..width {
                inside.push(f(row, col));
            }
        }
        Self { width, height, inside }
    }

    /// The strict sublevel set `{phi < 0}`.
    pub fn from_sublevel(phi: &ScalarField) -> Self {
        Self {
            width: phi.width(),
            height: phi.height(),
            inside: phi.values().iter().map(|&v| v < 0.0).collect(),
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> bool {
        self.inside[row * self.width + col]
    }

    pub fn set(&mut self, row: usize, col: usize, value: bool) {
        self.inside[row * self.width + col] = value;
    }

    pub fn as_slice(&self) -> &[bool] {
        &self.inside
    }

    pub fn count(&self) -> usize {
        self.inside.iter().filter(|&&b| b).count()
    }

    pub fn is_empty(&self) -> bool {
        !self.inside.iter().any(|&b| b)
    }

    pub fn iter_inside(&self) -> impl Iterator<Item = GridIndex> + '_ {
        self.inside
            .iter()
            .enumerate()
            .filter(|(_, &b)| b)
            .map(move |(i, _)| GridIndex {
                row: i / self.width,
                col: i % self.width,
            })
    }

    pub fn complement(&self) -> RegionMask {
        Self {
            width: self.width,
            height: self.height,
            inside: self.inside.iter().map(|b| !b).collect(),
        }
    }

    /// Number of nodes where the two masks disagree.
    pub fn difference_count(&self, other: &RegionMask) -> usize {
        self.inside.iter().zip(&other.inside).filter(|(a, b)| a != b).count()
    }

    pub fn intersection_count(&self, other: &RegionMask) -> usize {
        self.inside.iter().zip(&other.inside).filter(|(&a, &b)| a && b).count()
    }

    pub fn union_count(&self, other: &RegionMask) -> usize {
        self.inside.iter().zip(&other.inside).filter(|(&a, &b)| a || b).count()
    }

    /// True if every inside node of `self` is inside `other`.
    pub fn is_subset_of(&self, other: &RegionMask) -> bool {
        self.inside.iter().zip(&other.inside).all(|(&a, &b)| !a || b)
    }

    /// Inside nodes with at least one 4-neighbour outside the region or off the grid.
    pub fn outline(&self) -> RegionMask {
        let (w, h) = (self.width, self.height);
        RegionMask::from_fn(w, h, |r, c| {
            if !self.get(r, c) {
                return false;
            }
            r == 0
                || c == 0
                || r + 1 == h
                || c + 1 == w
                || !self.get(r - 1, c)
                || !self.get(r + 1, c)
                || !self.get(r, c - 1)
                || !self.get(r, c + 1)
        })
    }
}

/// Discrete 5-point Laplacian with replicated ghost nodes.
pub fn laplacian(f: &ScalarField) -> ScalarField {
    let (w, h) = f.dims();
    let mut out = vec![0.0; w * h];
    out.par_chunks_mut(w).enumerate().for_each(|(r, line)| {
        let ri = r as isize;
        for (c, slot) in line.iter_mut().enumerate() {
            let ci = c as isize;
            let centre = f.get(r, c);
            *slot = f.get_clamped(ri - 1, ci)
                + f.get_clamped(ri + 1, ci)
                + f.get_clamped(ri, ci - 1)
                + f.get_clamped(ri, ci + 1)
                - 4.0 * centre;
        }
    });
    ScalarField::from_raw(w, h, out)
}

/// Partial derivatives along columns (x) and rows (y): central differences in
/// the interior, one-sided on the boundary.
pub fn gradient(f: &ScalarField) -> (ScalarField, ScalarField) {
    let (w, h) = f.dims();
    let mut gx = vec![0.0; w * h];
    let mut gy = vec![0.0; w * h];
    for r in 0..h {
        for c in 0..w {
            let dx = if c == 0 {
                f.get(r, 1) - f.get(r, 0)
            } else if c == w - 1 {
                f.get(r, c) - f.get(r, c - 1)
            } else {
                0.5 * (f.get(r, c + 1) - f.get(r, c - 1))
            };
            let dy = if r == 0 {
                f.get(1, c) - f.get(0, c)
            } else if r == h - 1 {
                f.get(r, c) - f.get(r - 1, c)
            } else {
                0.5 * (f.get(r + 1, c) - f.get(r - 1, c))
            };
            gx[r * w + c] = dx;
            gy[r * w + c] = dy;
        }
    }
    (ScalarField::from_raw(w, h, gx), ScalarField::from_raw(w, h, gy))
}

pub fn gradient_magnitude(f: &ScalarField) -> ScalarField {
    let (gx, gy) = gradient(f);
    let values = gx.values().iter().zip(gy.values()).map(|(a, b)| a.hypot(*b)).collect();
    ScalarField::from_raw(f.width(), f.height(), values)
}

/// Determinant of the Hessian from central second differences; boundary
/// nodes report 0.
pub fn hessian_determinant(f: &ScalarField) -> ScalarField {
    let (w, h) = f.dims();
    let mut out = vec![0.0; w * h];
    for r in 1..h - 1 {
        for c in 1..w - 1 {
            let fxx = f.get(r, c + 1) - 2.0 * f.get(r, c) + f.get(r, c - 1);
            let fyy = f.get(r + 1, c) - 2.0 * f.get(r, c) + f.get(r - 1, c);
            let fxy = 0.25 * (f.get(r + 1, c + 1) - f.get(r + 1, c - 1) - f.get(r - 1, c + 1) + f.get(r - 1, c - 1));
            out[r * w + c] = fxx * fyy - fxy * fxy;
        }
    }
    ScalarField::from_raw(w, h, out)
}
