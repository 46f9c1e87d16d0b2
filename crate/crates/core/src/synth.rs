//! Synthetic test images with known ground truth.
//!
//! Shapes are sampled at pixel centres; pixel `(row, col)` sits at
//! `(x, y) = (col, row)`.

use std::f64::consts::{FRAC_1_SQRT_2, PI};
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Normal;

use crate::error::{Error, Result};
use crate::field::{RegionMask, ScalarField};
use crate::imageio::{Channel, LoadedImage};

/// Minimum distance (pixels) between a shape and the image border.
pub const SHAPE_MARGIN: usize = 4;

#[derive(Debug, Clone, PartialEq)]
pub enum ShapeKind {
    Disk {
        r: f64,
    },
    Square {
        side: f64,
    },
    /// Regular polygon with a flat edge facing +x.
    Polygon {
        sides: usize,
        radius: f64,
    },
    /// `points`-pointed star with the first tip pointing up.
    Star {
        points: usize,
        inner_r: f64,
        outer_r: f64,
    },
    /// Disk with a wedge of `wedge_deg` degrees removed around +x.
    Pacman {
        r: f64,
        wedge_deg: f64,
    },
    /// Square of side `size` with its upper-right quadrant-like block removed,
    /// leaving arms `thickness` wide.
    LShape {
        size: f64,
        thickness: f64,
    },
    /// Disk of radius `r` minus a disk of radius `cut_r` shifted by `offset` along +x.
    Crescent {
        r: f64,
        cut_r: f64,
        offset: f64,
    },
    /// Regular polygon with a slot of `notch_width` cut from the +x edge
    /// towards the centre, `notch_depth` deep.
    NotchedPolygon {
        sides: usize,
        radius: f64,
        notch_width: f64,
        notch_depth: f64,
    },
    /// Star-shaped blob with radius modulated by seeded low harmonics.
    Blob {
        r: f64,
        seed: u64,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Shape {
    pub kind: ShapeKind,
    pub cx: f64,
    pub cy: f64,
}

fn point_in_polygon(poly: &[(f64, f64)], x: f64, y: f64) -> bool {
    let mut inside = false;
    let mut j = poly.len() - 1;
    for i in 0..poly.len() {
        let (xi, yi) = poly[i];
        let (xj, yj) = poly[j];
        if (yi > y) != (yj > y) && x < (xj - xi) * (y - yi) / (yj - yi) + xi {
            inside = !inside;
        }
        j = i;
    }
    inside
}

fn regular_polygon(sides: usize, radius: f64) -> Vec<(f64, f64)> {
    let start = PI / sides as f64;
    (0..sides)
        .map(|k| {
            let a = start + 2.0 * PI * k as f64 / sides as f64;
            (radius * a.cos(), radius * a.sin())
        })
        .collect()
}

fn star_polygon(points: usize, inner_r: f64, outer_r: f64) -> Vec<(f64, f64)> {
    (0..2 * points)
        .map(|k| {
            let a = -PI / 2.0 + PI * k as f64 / points as f64;
            let r = if k % 2 == 0 { outer_r } else { inner_r };
            (r * a.cos(), r * a.sin())
        })
        .collect()
}

fn blob_harmonics(seed: u64) -> [(f64, f64, f64); 3] {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut h = [(0.0, 0.0, 0.0); 3];
    for (i, (k, amp, phase)) in h.iter_mut().enumerate() {
        *k = (2 + i) as f64;
        *amp = rng.random_range(0.08..0.18);
        *phase = rng.random_range(0.0..2.0 * PI);
    }
    h
}

impl ShapeKind {
    fn validate(&self) -> Result<()> {
        let pos = |v: f64, what: &str| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::invalid(format!("{what} must be > 0, got {v}")))
            }
        };
        match *self {
            ShapeKind::Disk { r } => pos(r, "radius"),
            ShapeKind::Square { side } => pos(side, "side"),
            ShapeKind::Polygon { sides, radius } => {
                if sides < 3 {
                    return Err(Error::invalid("polygon needs at least 3 sides"));
                }
                pos(radius, "radius")
            }
            ShapeKind::Star {
                points,
                inner_r,
                outer_r,
            } => {
                if points < 3 || !(inner_r < outer_r) {
                    return Err(Error::invalid("star needs >= 3 points and inner_r < outer_r"));
                }
                pos(inner_r, "inner_r")
            }
            ShapeKind::Pacman { r, wedge_deg } => {
                if !(wedge_deg > 0.0 && wedge_deg < 360.0) {
                    return Err(Error::invalid(format!("wedge must be in (0, 360), got {wedge_deg}")));
                }
                pos(r, "radius")
            }
            ShapeKind::LShape { size, thickness } => {
                if !(thickness < size) {
                    return Err(Error::invalid("L thickness must be below its size"));
                }
                pos(thickness, "thickness")
            }
            ShapeKind::Crescent { r, cut_r, .. } => {
                pos(r, "radius")?;
                pos(cut_r, "cut radius")
            }
            ShapeKind::NotchedPolygon {
                sides,
                radius,
                notch_width,
                notch_depth,
            } => {
                if sides < 3 || notch_width < 0.0 || notch_depth < 0.0 {
                    return Err(Error::invalid(
                        "notched polygon needs >= 3 sides and non-negative notch",
                    ));
                }
                pos(radius, "radius")
            }
            ShapeKind::Blob { r, .. } => pos(r, "radius"),
        }
    }

    /// Whether the offset `(dx, dy)` from the shape centre is inside.
    fn contains(&self, dx: f64, dy: f64) -> bool {
        match *self {
            ShapeKind::Disk { r } => dx.hypot(dy) <= r,
            ShapeKind::Square { side } => dx.abs() <= side / 2.0 && dy.abs() <= side / 2.0,
            ShapeKind::Polygon { sides, radius } => point_in_polygon(&regular_polygon(sides, radius), dx, dy),
            ShapeKind::Star {
                points,
                inner_r,
                outer_r,
            } => point_in_polygon(&star_polygon(points, inner_r, outer_r), dx, dy),
            ShapeKind::Pacman { r, wedge_deg } => {
                dx.hypot(dy) <= r && dy.atan2(dx).abs() * 2.0 >= wedge_deg.to_radians()
            }
            ShapeKind::LShape { size, thickness } => {
                let h = size / 2.0;
                let in_box = dx.abs() <= h && dy.abs() <= h;
                in_box && (dx <= -h + thickness || dy >= h - thickness)
            }
            ShapeKind::Crescent { r, cut_r, offset } => dx.hypot(dy) <= r && (dx - offset).hypot(dy) > cut_r,
            ShapeKind::NotchedPolygon {
                sides,
                radius,
                notch_width,
                notch_depth,
            } => {
                let apothem = radius * (PI / sides as f64).cos();
                point_in_polygon(&regular_polygon(sides, radius), dx, dy)
                    && !(dy.abs() <= notch_width / 2.0 && dx > apothem - notch_depth)
            }
            ShapeKind::Blob { r, seed } => {
                let t = dy.atan2(dx);
                let rho = blob_harmonics(seed)
                    .iter()
                    .fold(1.0, |acc, &(k, a, p)| acc + a * (k * t + p).cos());
                dx.hypot(dy) <= r * rho
            }
        }
    }

    /// Whether the continuous shape is convex (used for labelling only).
    pub fn is_convex(&self) -> bool {
        match *self {
            ShapeKind::Disk { .. } | ShapeKind::Square { .. } | ShapeKind::Polygon { .. } => true,
            ShapeKind::NotchedPolygon {
                notch_width,
                notch_depth,
                ..
            } => notch_width == 0.0 || notch_depth == 0.0,
            _ => false,
        }
    }
}

impl Shape {
    pub fn new(kind: ShapeKind, cx: f64, cy: f64) -> Self {
        Self { kind, cx, cy }
    }

    pub fn contains(&self, x: f64, y: f64) -> bool {
        self.kind.contains(x - self.cx, y - self.cy)
    }

    /// Rasterized mask; errors if the shape is empty or comes within
    /// [`SHAPE_MARGIN`] pixels of the border.
    pub fn mask(&self, width: usize, height: usize) -> Result<RegionMask> {
        self.kind.validate()?;
        if width < 2 * SHAPE_MARGIN + 1 || height < 2 * SHAPE_MARGIN + 1 {
            return Err(Error::invalid(format!("image {width}x{height} is too small")));
        }
        // Sample a frame SHAPE_MARGIN wide outside the image too, so shapes
        // that spill past the border are caught.
        let m = SHAPE_MARGIN as isize;
        for row in -m..height as isize + m {
            for col in -m..width as isize + m {
                let inner = row >= m && col >= m && row < height as isize - m && col < width as isize - m;
                if !inner && self.contains(col as f64, row as f64) {
                    return Err(Error::invalid(format!(
                        "shape does not fit in {width}x{height} with a {SHAPE_MARGIN} px margin"
                    )));
                }
            }
        }
        let mask = RegionMask::from_fn(width, height, |r, c| self.contains(c as f64, r as f64));
        if mask.is_empty() {
            return Err(Error::invalid("shape covers no pixel centre"));
        }
        Ok(mask)
    }
}

/// Filled bar between two points, used to occlude objects.
#[derive(Debug, Clone, PartialEq)]
pub struct Bar {
    pub from: (f64, f64),
    pub to: (f64, f64),
    pub half_width: f64,
    pub intensity: f64,
}

impl Bar {
    fn contains(&self, x: f64, y: f64) -> bool {
        let (ax, ay) = self.from;
        let (dx, dy) = (self.to.0 - ax, self.to.1 - ay);
        let len2 = dx * dx + dy * dy;
        let t = if len2 > 0.0 {
            (((x - ax) * dx + (y - ay) * dy) / len2).clamp(0.0, 1.0)
        } else {
            0.0
        };
        (x - ax - t * dx).hypot(y - ay - t * dy) <= self.half_width
    }
}

/// A scene of objects over a flat background, optionally occluded, plus
/// Gaussian noise. Ground truth is the union of the objects, ignoring
/// occluders.
#[derive(Debug, Clone, PartialEq)]
pub struct Scene {
    pub width: usize,
    pub height: usize,
    pub background: f64,
    pub objects: Vec<(Shape, f64)>,
    pub occluders: Vec<Bar>,
    pub sigma: f64,
}

impl Scene {
    pub fn new(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            background: 0.0,
            objects: Vec::new(),
            occluders: Vec::new(),
            sigma: 0.0,
        }
    }

    pub fn with_object(mut self, shape: Shape, intensity: f64) -> Self {
        self.objects.push((shape, intensity));
        self
    }

    pub fn with_occluder(mut self, bar: Bar) -> Self {
        self.occluders.push(bar);
        self
    }

    pub fn with_noise(mut self, sigma: f64) -> Self {
        self.sigma = sigma;
        self
    }

    /// Render intensities clamped to `[0, 1]`, with ground truth.
    pub fn render(&self, seed: u64) -> Result<(LoadedImage, RegionMask)> {
        if !(self.sigma >= 0.0) || !self.sigma.is_finite() {
            return Err(Error::invalid(format!("noise sigma must be >= 0, got {}", self.sigma)));
        }
        if self.objects.is_empty() {
            return Err(Error::invalid("scene has no objects"));
        }
        let (w, h) = (self.width, self.height);
        let mut values = vec![self.background; w * h];
        let mut truth = RegionMask::empty(w, h);
        for (shape, intensity) in &self.objects {
            let m = shape.mask(w, h)?;
            for ix in m.iter_inside() {
                values[ix.row * w + ix.col] = *intensity;
                truth.set(ix.row, ix.col, true);
            }
        }
        for bar in &self.occluders {
            for row in 0..h {
                for col in 0..w {
                    if bar.contains(col as f64, row as f64) {
                        values[row * w + col] = bar.intensity;
                    }
                }
            }
        }
        if self.sigma > 0.0 {
            let normal = Normal::new(0.0, self.sigma).map_err(|e| Error::invalid(e.to_string()))?;
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            for v in &mut values {
                *v += rng.sample(normal);
            }
        }
        for v in &mut values {
            *v = v.clamp(0.0, 1.0);
        }
        let image = LoadedImage {
            intensity: ScalarField::new(w, h, values)?,
            source_channels: 1,
            chosen_channel: Channel::Gray,
        };
        Ok((image, truth))
    }
}

/// Single shape on a flat background.
#[derive(Debug, Clone, PartialEq)]
pub struct ShapeSpec {
    pub shape: Shape,
    pub foreground: f64,
    pub background: f64,
    pub sigma: f64,
}

impl ShapeSpec {
    /// `kind` centred in a `width` x `height` image, white on black, no noise.
    pub fn centered(kind: ShapeKind, width: usize, height: usize) -> Self {
        Self {
            shape: Shape::new(kind, (width as f64 - 1.0) / 2.0, (height as f64 - 1.0) / 2.0),
            foreground: 1.0,
            background: 0.0,
            sigma: 0.0,
        }
    }
}

pub fn synth(spec: &ShapeSpec, width: usize, height: usize, seed: u64) -> Result<(LoadedImage, RegionMask)> {
    Scene {
        width,
        height,
        background: spec.background,
        objects: vec![(spec.shape.clone(), spec.foreground)],
        occluders: Vec::new(),
        sigma: spec.sigma,
    }
    .render(seed)
}

/// Named shapes sized relative to the image, as used by the CLI.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NamedShape {
    Disk,
    Square,
    Octagon,
    Star,
    Pacman,
    LShape,
    Crescent,
    NotchThin,
    NotchWide,
    Blob,
}

impl FromStr for NamedShape {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Ok(match s.trim().to_ascii_lowercase().as_str() {
            "disk" => NamedShape::Disk,
            "square" => NamedShape::Square,
            "octagon" => NamedShape::Octagon,
            "star" => NamedShape::Star,
            "pacman" => NamedShape::Pacman,
            "l" | "l_shape" | "l-shape" | "lshape" => NamedShape::LShape,
            "crescent" => NamedShape::Crescent,
            "notch_thin" | "notch-thin" | "notched_polygon" => NamedShape::NotchThin,
            "notch_wide" | "notch-wide" => NamedShape::NotchWide,
            "blob" => NamedShape::Blob,
            other => return Err(Error::Parse(format!("unknown shape kind {other:?}"))),
        })
    }
}

impl NamedShape {
    pub const ALL: [NamedShape; 10] = [
        NamedShape::Disk,
        NamedShape::Square,
        NamedShape::Octagon,
        NamedShape::Star,
        NamedShape::Pacman,
        NamedShape::LShape,
        NamedShape::Crescent,
        NamedShape::NotchThin,
        NamedShape::NotchWide,
        NamedShape::Blob,
    ];

    /// Geometry scaled to `s` = the smaller image side.
    pub fn kind(self, s: f64, seed: u64) -> ShapeKind {
        match self {
            NamedShape::Disk => ShapeKind::Disk { r: 0.3 * s },
            NamedShape::Square => ShapeKind::Square { side: 0.5 * s },
            NamedShape::Octagon => ShapeKind::Polygon {
                sides: 8,
                radius: 0.32 * s,
            },
            NamedShape::Star => ShapeKind::Star {
                points: 5,
                inner_r: 0.14 * s,
                outer_r: 0.34 * s,
            },
            NamedShape::Pacman => ShapeKind::Pacman {
                r: 0.3 * s,
                wedge_deg: 90.0,
            },
            NamedShape::LShape => ShapeKind::LShape {
                size: 0.5 * s,
                thickness: 0.25 * s,
            },
            NamedShape::Crescent => ShapeKind::Crescent {
                r: 0.3 * s,
                cut_r: 0.25 * s,
                offset: 0.15 * s,
            },
            NamedShape::NotchThin | NamedShape::NotchWide => {
                let radius = 0.3 * s * std::f64::consts::SQRT_2;
                let frac = if self == NamedShape::NotchThin { 0.02 } else { 0.1 };
                ShapeKind::NotchedPolygon {
                    sides: 4,
                    radius,
                    notch_width: frac * s,
                    notch_depth: 0.3 * s,
                }
            }
            NamedShape::Blob => ShapeKind::Blob { r: 0.28 * s, seed },
        }
    }

    pub fn spec(self, width: usize, height: usize, seed: u64) -> ShapeSpec {
        ShapeSpec::centered(self.kind(width.min(height) as f64, seed), width, height)
    }
}

/// Octagon of radius `0.32 * size` with a background-coloured bar laid
/// across its upper-right side. Ground truth is the whole octagon.
pub fn occluded_octagon(size: usize) -> Scene {
    let s = size as f64;
    let c = (s - 1.0) / 2.0;
    let radius = 0.32 * s;
    let (ux, uy) = (FRAC_1_SQRT_2, -FRAC_1_SQRT_2);
    let (bx, by) = (c + 0.6 * radius * ux, c + 0.6 * radius * uy);
    let reach = 0.32 * s;
    let bar = Bar {
        from: (bx + reach * uy, by - reach * ux),
        to: (bx - reach * uy, by + reach * ux),
        half_width: 0.05 * s,
        intensity: 0.0,
    };
    Scene::new(size, size)
        .with_object(Shape::new(ShapeKind::Polygon { sides: 8, radius }, c, c), 1.0)
        .with_occluder(bar)
}

/// A square on the left and a disk on the right, both of radius about
/// `0.15 * size`, centred on the middle row.
pub fn two_objects(size: usize) -> Scene {
    let s = size as f64;
    let c = (s - 1.0) / 2.0;
    Scene::new(size, size)
        .with_object(Shape::new(ShapeKind::Square { side: 0.3 * s }, 0.27 * s, c), 1.0)
        .with_object(Shape::new(ShapeKind::Disk { r: 0.15 * s }, 0.73 * s, c), 1.0)
}
