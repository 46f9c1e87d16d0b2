//! Reinitialization of a level-set function into a signed distance function.
//!
//! The zero level set is located at subpixel precision by linear
//! interpolation along every grid edge whose endpoints change sign. Each
//! crossing lies on a grid line, so the exact Euclidean distance to the
//! crossing set decomposes into a 1D nearest-point pass along that line
//! followed by a lower envelope of parabolas across lines. Crossings on
//! horizontal and vertical edges are transformed separately and combined
//! with a pointwise minimum.
//!
//! Point samples of a curve are a slightly jagged target: their distance
//! field has small ridges between neighbouring crossings. [`reinitialize`]
//! therefore refines each node against the interface segments (marching
//! squares through the same crossings) in the cells around its nearest
//! crossing, which keeps straight and convex interfaces exactly in place.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::field::{gradient_magnitude, GridIndex, ScalarField};

/// A point where the level-set function crosses zero.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Crossing {
    /// On the horizontal grid line `row`, at real-valued column `col`.
    OnRow { row: usize, col: f64 },
    /// On the vertical grid line `col`, at real-valued row `row`.
    OnCol { col: usize, row: f64 },
}

impl Crossing {
    /// `(row, col)` coordinates.
    pub fn position(&self) -> (f64, f64) {
        match *self {
            Crossing::OnRow { row, col } => (row as f64, col),
            Crossing::OnCol { col, row } => (row, col as f64),
        }
    }

    pub fn distance_to(&self, row: f64, col: f64) -> f64 {
        let (r, c) = self.position();
        (row - r).hypot(col - c)
    }
}

/// Zero level set of a field: the nodes next to a sign change and the
/// interpolated crossing points.
#[derive(Debug, Clone)]
pub struct ZeroContour {
    width: usize,
    height: usize,
    boundary_pixels: Vec<GridIndex>,
    points: Vec<Crossing>,
}

impl ZeroContour {
    /// Build a contour from explicit crossings (each must lie on a grid line
    /// inside the `width` x `height` grid).
    pub fn from_crossings(width: usize, height: usize, points: Vec<Crossing>) -> Result<Self> {
        for p in &points {
            let ok = match *p {
                Crossing::OnRow { row, col } => row < height && (0.0..=(width - 1) as f64).contains(&col),
                Crossing::OnCol { col, row } => col < width && (0.0..=(height - 1) as f64).contains(&row),
            };
            if !ok {
                return Err(Error::invalid(format!("crossing {p:?} is outside the grid")));
            }
        }
        Ok(Self {
            width,
            height,
            boundary_pixels: Vec::new(),
            points,
        })
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn points(&self) -> &[Crossing] {
        &self.points
    }

    pub fn boundary_pixels(&self) -> &[GridIndex] {
        &self.boundary_pixels
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// How the zero level set is located before measuring distances.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ContourMode {
    /// Linear-interpolation crossings on sign-changing grid edges.
    #[default]
    Subpixel,
    /// Centres of negative pixels with a non-negative 4-neighbour, as a
    /// binary distance transform would see them. Kept for comparison.
    PixelCentres,
}

fn has_interface(phi: &ScalarField) -> bool {
    let neg = phi.values().iter().any(|&v| v < 0.0);
    let nonneg = phi.values().iter().any(|&v| v >= 0.0);
    neg && nonneg
}

/// Locate the zero crossings of `phi`.
///
/// A node is negative when `phi < 0`; zero counts as non-negative. Nodes with
/// `phi == 0` exactly are crossing points themselves.
pub fn extract_zero_contour(phi: &ScalarField) -> Result<ZeroContour> {
    extract_with_mode(phi, ContourMode::Subpixel)
}

fn extract_with_mode(phi: &ScalarField, mode: ContourMode) -> Result<ZeroContour> {
    if !has_interface(phi) {
        return Err(Error::NoInterface);
    }
    let (w, h) = phi.dims();
    let neg = |r: usize, c: usize| phi.get(r, c) < 0.0;
    let mut points = Vec::new();
    let mut on_boundary = vec![false; w * h];

    match mode {
        ContourMode::Subpixel => {
            for r in 0..h {
                for c in 0..w {
                    let a = phi.get(r, c);
                    if a == 0.0 {
                        points.push(Crossing::OnRow { row: r, col: c as f64 });
                        on_boundary[r * w + c] = true;
                    }
                    if c + 1 < w && neg(r, c) != neg(r, c + 1) {
                        let b = phi.get(r, c + 1);
                        let t = a / (a - b);
                        points.push(Crossing::OnRow {
                            row: r,
                            col: c as f64 + t,
                        });
                        on_boundary[r * w + c] = true;
                        on_boundary[r * w + c + 1] = true;
                    }
                    if r + 1 < h && neg(r, c) != neg(r + 1, c) {
                        let b = phi.get(r + 1, c);
                        let t = a / (a - b);
                        points.push(Crossing::OnCol {
                            col: c,
                            row: r as f64 + t,
                        });
                        on_boundary[r * w + c] = true;
                        on_boundary[(r + 1) * w + c] = true;
                    }
                }
            }
        }
        ContourMode::PixelCentres => {
            for r in 0..h {
                for c in 0..w {
                    if !neg(r, c) {
                        continue;
                    }
                    let edge = (r > 0 && !neg(r - 1, c))
                        || (r + 1 < h && !neg(r + 1, c))
                        || (c > 0 && !neg(r, c - 1))
                        || (c + 1 < w && !neg(r, c + 1));
                    if edge {
                        points.push(Crossing::OnRow { row: r, col: c as f64 });
                        on_boundary[r * w + c] = true;
                    }
                }
            }
        }
    }

    let boundary_pixels = on_boundary
        .iter()
        .enumerate()
        .filter(|(_, &b)| b)
        .map(|(i, _)| GridIndex::new(i / w, i % w))
        .collect();
    Ok(ZeroContour {
        width: w,
        height: h,
        boundary_pixels,
        points,
    })
}

/// Squared distance and index of the nearest crossing for each node, for
/// crossings that all lie on lines of one orientation.
///
/// `lines` grid lines of length `len`; `per_line[l]` holds `(position, id)`
/// pairs on line `l`. Output is indexed `[l * len + p]`.
fn line_transform(lines: usize, len: usize, per_line: &[Vec<(f64, usize)>]) -> (Vec<f64>, Vec<usize>) {
    // nearest crossing on the same line
    let mut f = vec![f64::INFINITY; lines * len];
    let mut arg = vec![usize::MAX; lines * len];
    f.par_chunks_mut(len)
        .zip(arg.par_chunks_mut(len))
        .zip(per_line.par_iter())
        .for_each(|((fl, al), pts)| {
            if pts.is_empty() {
                return;
            }
            let mut k = 0;
            for p in 0..len {
                let x = p as f64;
                while k + 1 < pts.len() && pts[k + 1].0 <= x {
                    k += 1;
                }
                let mut best = (x - pts[k].0).powi(2);
                let mut best_id = pts[k].1;
                if k + 1 < pts.len() {
                    let d = (x - pts[k + 1].0).powi(2);
                    if d < best {
                        best = d;
                        best_id = pts[k + 1].1;
                    }
                }
                fl[p] = best;
                al[p] = best_id;
            }
        });

    // lower envelope of parabolas across lines, one pass per position
    let columns: Vec<(Vec<f64>, Vec<usize>)> = (0..len)
        .into_par_iter()
        .map(|p| {
            let col_f: Vec<f64> = (0..lines).map(|l| f[l * len + p]).collect();
            let (d, which) = envelope(&col_f);
            let ids = which
                .iter()
                .map(|&l| if l == usize::MAX { usize::MAX } else { arg[l * len + p] })
                .collect();
            (d, ids)
        })
        .collect();

    let mut d2 = vec![f64::INFINITY; lines * len];
    let mut ids = vec![usize::MAX; lines * len];
    for (p, (d, id)) in columns.into_iter().enumerate() {
        for l in 0..lines {
            d2[l * len + p] = d[l];
            ids[l * len + p] = id[l];
        }
    }
    (d2, ids)
}

/// `out[q] = min_l (q - l)^2 + f[l]` over finite `f[l]`, with the minimizing `l`.
fn envelope(f: &[f64]) -> (Vec<f64>, Vec<usize>) {
    let n = f.len();
    let mut out = vec![f64::INFINITY; n];
    let mut which = vec![usize::MAX; n];
    let mut v: Vec<usize> = Vec::with_capacity(n);
    let mut z: Vec<f64> = Vec::with_capacity(n + 1);
    for q in 0..n {
        if !f[q].is_finite() {
            continue;
        }
        let fq = f[q] + (q * q) as f64;
        if v.is_empty() {
            v.push(q);
            z.push(f64::NEG_INFINITY);
            continue;
        }
        loop {
            let vk = *v.last().unwrap();
            let s = (fq - (f[vk] + (vk * vk) as f64)) / (2.0 * (q as f64 - vk as f64));
            if s <= *z.last().unwrap() {
                v.pop();
                z.pop();
                if v.is_empty() {
                    break;
                }
            } else {
                v.push(q);
                z.push(s);
                break;
            }
        }
        if v.is_empty() {
            v.push(q);
            z.push(f64::NEG_INFINITY);
        }
    }
    if v.is_empty() {
        return (out, which);
    }
    let mut k = 0;
    for q in 0..n {
        let x = q as f64;
        while k + 1 < v.len() && z[k + 1] < x {
            k += 1;
        }
        let l = v[k];
        out[q] = (x - l as f64).powi(2) + f[l];
        which[q] = l;
    }
    (out, which)
}

/// Exact Euclidean distance from every node to the nearest crossing, and the
/// index of that crossing in `contour.points()`.
pub fn distance_with_nearest(contour: &ZeroContour) -> Result<(ScalarField, Vec<usize>)> {
    if contour.is_empty() {
        return Err(Error::invalid("distance to an empty contour"));
    }
    let (w, h) = contour.dims();
    let mut on_rows: Vec<Vec<(f64, usize)>> = vec![Vec::new(); h];
    let mut on_cols: Vec<Vec<(f64, usize)>> = vec![Vec::new(); w];
    for (id, p) in contour.points().iter().enumerate() {
        match *p {
            Crossing::OnRow { row, col } => on_rows[row].push((col, id)),
            Crossing::OnCol { col, row } => on_cols[col].push((row, id)),
        }
    }
    for line in on_rows.iter_mut().chain(on_cols.iter_mut()) {
        line.sort_by(|a, b| a.0.total_cmp(&b.0));
    }

    // rows as lines: index [row * w + col]
    let (d_rows, id_rows) = line_transform(h, w, &on_rows);
    // columns as lines: index [col * h + row]
    let (d_cols, id_cols) = line_transform(w, h, &on_cols);

    let mut values = vec![0.0; w * h];
    let mut nearest = vec![usize::MAX; w * h];
    for r in 0..h {
        for c in 0..w {
            let a = d_rows[r * w + c];
            let b = d_cols[c * h + r];
            let (d2, id) = if a <= b {
                (a, id_rows[r * w + c])
            } else {
                (b, id_cols[c * h + r])
            };
            values[r * w + c] = d2.sqrt();
            nearest[r * w + c] = id;
        }
    }
    Ok((ScalarField::from_raw(w, h, values), nearest))
}

/// Exact Euclidean distance from every node to the nearest crossing.
pub fn distance_to_contour(contour: &ZeroContour) -> Result<ScalarField> {
    distance_with_nearest(contour).map(|(d, _)| d)
}

/// Result of reinitialization, with the contour and nearest-crossing map kept
/// for diagnostics.
#[derive(Debug, Clone)]
pub struct Reinitialized {
    pub field: ScalarField,
    pub contour: ZeroContour,
    pub nearest: Vec<usize>,
}

impl Reinitialized {
    /// Median of `| |grad| - 1 |` over interior nodes, skipping nodes within
    /// 1.5 px of the contour and nodes next to a jump in the nearest crossing
    /// (the medial axis). `None` if every node was excluded.
    pub fn eikonal_residual_median(&self) -> Option<f64> {
        const CONTOUR_BAND: f64 = 1.5;
        const FEATURE_JUMP: f64 = 3.0;
        let f = &self.field;
        let (w, h) = f.dims();
        let grad = gradient_magnitude(f);
        let pts = self.contour.points();
        let mut residuals = Vec::new();
        for r in 1..h - 1 {
            for c in 1..w - 1 {
                if f.get(r, c).abs() <= CONTOUR_BAND {
                    continue;
                }
                let (pr, pc) = pts[self.nearest[r * w + c]].position();
                let mut medial = false;
                'scan: for dr in -1isize..=1 {
                    for dc in -1isize..=1 {
                        let rr = (r as isize + dr) as usize;
                        let cc = (c as isize + dc) as usize;
                        let (qr, qc) = pts[self.nearest[rr * w + cc]].position();
                        if (pr - qr).hypot(pc - qc) > FEATURE_JUMP {
                            medial = true;
                            break 'scan;
                        }
                    }
                }
                if !medial {
                    residuals.push((grad.get(r, c) - 1.0).abs());
                }
            }
        }
        if residuals.is_empty() {
            return None;
        }
        residuals.sort_by(f64::total_cmp);
        Some(residuals[residuals.len() / 2])
    }
}

/// Replace `phi` by the signed distance function of `{phi < 0}`.
pub fn reinitialize(phi: &ScalarField) -> Result<ScalarField> {
    reinitialize_with(phi, ContourMode::Subpixel).map(|r| r.field)
}

pub fn reinitialize_detailed(phi: &ScalarField) -> Result<Reinitialized> {
    reinitialize_with(phi, ContourMode::Subpixel)
}

pub fn reinitialize_with(phi: &ScalarField, mode: ContourMode) -> Result<Reinitialized> {
    let contour = extract_with_mode(phi, mode)?;
    let (mut dist, nearest) = distance_with_nearest(&contour)?;
    if mode == ContourMode::Subpixel {
        refine_with_segments(phi, &contour, &nearest, &mut dist);
    }
    let (w, h) = phi.dims();
    let values = phi
        .values()
        .iter()
        .zip(dist.values())
        .map(|(&p, &d)| {
            if p < 0.0 {
                // keep the sign even when a crossing sits on the node
                -d.max(f64::MIN_POSITIVE)
            } else {
                d
            }
        })
        .collect();
    Ok(Reinitialized {
        field: ScalarField::from_raw(w, h, values),
        contour,
        nearest,
    })
}

type Point = (f64, f64);

/// Interface segments of each grid cell `(r, c)`-`(r + 1, c + 1)`.
///
/// Crossings are interpolated exactly as in [`extract_zero_contour`]. Saddle
/// cells are split by the sign of the cell-centre average.
pub fn cell_segments(phi: &ScalarField, r: usize, c: usize) -> Vec<(Point, Point)> {
    let v00 = phi.get(r, c);
    let v01 = phi.get(r, c + 1);
    let v10 = phi.get(r + 1, c);
    let v11 = phi.get(r + 1, c + 1);
    let cut = |a: f64, b: f64| ((a < 0.0) != (b < 0.0)).then(|| a / (a - b));
    let (rf, cf) = (r as f64, c as f64);
    let top = cut(v00, v01).map(|t| (rf, cf + t));
    let right = cut(v01, v11).map(|t| (rf + t, cf + 1.0));
    let bottom = cut(v10, v11).map(|t| (rf + 1.0, cf + t));
    let left = cut(v00, v10).map(|t| (rf + t, cf));
    let found: Vec<Point> = [top, right, bottom, left].into_iter().flatten().collect();
    match found.len() {
        2 => vec![(found[0], found[1])],
        4 => {
            let centre_neg = (v00 + v01 + v10 + v11) < 0.0;
            let (t, rt, b, l) = (found[0], found[1], found[2], found[3]);
            if (v00 < 0.0) != centre_neg {
                // corners 00 and 11 are cut off
                vec![(l, t), (rt, b)]
            } else {
                vec![(t, rt), (b, l)]
            }
        }
        _ => Vec::new(),
    }
}

fn point_segment_distance(p: Point, a: Point, b: Point) -> f64 {
    let (dr, dc) = (b.0 - a.0, b.1 - a.1);
    let len2 = dr * dr + dc * dc;
    let t = if len2 > 0.0 {
        (((p.0 - a.0) * dr + (p.1 - a.1) * dc) / len2).clamp(0.0, 1.0)
    } else {
        0.0
    };
    (p.0 - a.0 - t * dr).hypot(p.1 - a.1 - t * dc)
}

/// Lower each distance to the nearest interface segment found in the 3x3
/// block of cells around the node's nearest crossing.
fn refine_with_segments(phi: &ScalarField, contour: &ZeroContour, nearest: &[usize], dist: &mut ScalarField) {
    let (w, h) = phi.dims();
    let (cw, ch) = (w - 1, h - 1);
    let mut start = Vec::with_capacity(cw * ch + 1);
    let mut segs = Vec::new();
    let v = phi.values();
    for r in 0..ch {
        for c in 0..cw {
            start.push(segs.len());
            let k = r * w + c;
            let neg = v[k] < 0.0;
            if (v[k + 1] < 0.0) != neg || (v[k + w] < 0.0) != neg || (v[k + w + 1] < 0.0) != neg {
                segs.extend(cell_segments(phi, r, c));
            }
        }
    }
    start.push(segs.len());
    let pts = contour.points();
    dist.values_mut().par_chunks_mut(w).enumerate().for_each(|(r, line)| {
        for (c, d) in line.iter_mut().enumerate() {
            let (qr, qc) = pts[nearest[r * w + c]].position();
            let r0 = (qr.floor() as usize).saturating_sub(1);
            let c0 = (qc.floor() as usize).saturating_sub(1);
            let node = (r as f64, c as f64);
            for cr in r0..(r0 + 3).min(ch) {
                for cc in c0..(c0 + 3).min(cw) {
                    let k = cr * cw + cc;
                    for &(a, b) in &segs[start[k]..start[k + 1]] {
                        *d = d.min(point_segment_distance(node, a, b));
                    }
                }
            }
        }
    });
}

/// Brute-force distance to every crossing; O(nodes x crossings).
pub fn brute_force_distance(contour: &ZeroContour) -> ScalarField {
    let (w, h) = contour.dims();
    let values = (0..h * w)
        .map(|i| {
            let (r, c) = ((i / w) as f64, (i % w) as f64);
            contour
                .points()
                .iter()
                .map(|p| p.distance_to(r, c))
                .fold(f64::INFINITY, f64::min)
        })
        .collect();
    ScalarField::from_raw(w, h, values)
}
