//! Planar domains built as intersections of half-planes, disks and disk
//! exteriors.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// One constraint of a [`Domain2D`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Piece {
    /// `⟨normal, x⟩ > offset`, with `normal` the unit inner normal.
    HalfPlane { normal: [f64; 2], offset: f64 },
    /// `|x − center| < radius`.
    Disk { center: [f64; 2], radius: f64 },
    /// `|x − center| > radius`.
    DiskExterior { center: [f64; 2], radius: f64 },
}

impl Piece {
    /// Signed distance to the boundary of this piece, positive inside.
    pub fn signed_distance(&self, x: [f64; 2]) -> f64 {
        match *self {
            Piece::HalfPlane { normal, offset } => normal[0] * x[0] + normal[1] * x[1] - offset,
            Piece::Disk { center, radius } => radius - norm(sub(x, center)),
            Piece::DiskExterior { center, radius } => norm(sub(x, center)) - radius,
        }
    }

    /// Smallest `t > 0` where `x + t·dir` leaves the piece, for `x` inside.
    fn exit(&self, x: [f64; 2], dir: [f64; 2]) -> Option<f64> {
        match *self {
            Piece::HalfPlane { normal, offset } => {
                let s = normal[0] * dir[0] + normal[1] * dir[1];
                (s < 0.0).then(|| (normal[0] * x[0] + normal[1] * x[1] - offset) / -s)
            }
            Piece::Disk { center, radius } | Piece::DiskExterior { center, radius } => {
                // |y + t dir|² = r² with y = x − center
                let y = sub(x, center);
                let b = y[0] * dir[0] + y[1] * dir[1];
                let c = y[0] * y[0] + y[1] * y[1] - radius * radius;
                let a = dir[0] * dir[0] + dir[1] * dir[1];
                let disc = b * b - a * c;
                if disc < 0.0 {
                    return None;
                }
                let sq = disc.sqrt();
                if matches!(self, Piece::Disk { .. }) {
                    // larger root; written to avoid cancellation
                    let t = if b <= 0.0 { (-b + sq) / a } else { -c / (b + sq) };
                    Some(t.max(0.0))
                } else if b >= 0.0 {
                    None
                } else {
                    // smaller root
                    Some((c / (-b + sq)).max(0.0))
                }
            }
        }
    }
}

fn sub(a: [f64; 2], b: [f64; 2]) -> [f64; 2] {
    [a[0] - b[0], a[1] - b[1]]
}

fn norm(a: [f64; 2]) -> f64 {
    a[0].hypot(a[1])
}

/// Intersection of [`Piece`]s inside an axis-aligned bounding box
/// `[x_lo, x_hi] × [y_lo, y_hi]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Domain2D {
    pub pieces: Vec<Piece>,
    pub bbox: [f64; 4],
}

impl Domain2D {
    /// Checks the pieces and the box; half-planes must have unit normals.
    pub fn new(pieces: Vec<Piece>, bbox: [f64; 4]) -> Result<Self> {
        if pieces.is_empty() {
            return Err(Error::invalid("domain needs at least one piece"));
        }
        for p in &pieces {
            match *p {
                Piece::HalfPlane { normal, .. } if (norm(normal) - 1.0).abs() > 1e-12 => {
                    return Err(Error::invalid(format!("half-plane normal {normal:?} is not a unit vector")));
                }
                Piece::Disk { radius, .. } | Piece::DiskExterior { radius, .. } if !(radius > 0.0) => {
                    return Err(Error::invalid(format!("radius {radius} must be positive")));
                }
                _ => {}
            }
        }
        if !(bbox[1] > bbox[0] && bbox[3] > bbox[2]) {
            return Err(Error::invalid(format!("empty bounding box {bbox:?}")));
        }
        Ok(Self { pieces, bbox })
    }

    /// Open disk.
    pub fn disk(center: [f64; 2], radius: f64) -> Result<Self> {
        let bbox = [center[0] - radius, center[0] + radius, center[1] - radius, center[1] + radius];
        Self::new(vec![Piece::Disk { center, radius }], bbox)
    }

    /// Open rectangle `(x_lo, x_hi) × (y_lo, y_hi)`.
    pub fn rectangle(bbox: [f64; 4]) -> Result<Self> {
        let pieces = vec![
            Piece::HalfPlane { normal: [1.0, 0.0], offset: bbox[0] },
            Piece::HalfPlane { normal: [-1.0, 0.0], offset: -bbox[1] },
            Piece::HalfPlane { normal: [0.0, 1.0], offset: bbox[2] },
            Piece::HalfPlane { normal: [0.0, -1.0], offset: -bbox[3] },
        ];
        Self::new(pieces, bbox)
    }

    /// Circular sector `{0 < arg x < opening, |x| < radius}` for
    /// `opening ≤ π`.
    pub fn sector(opening: f64, radius: f64) -> Result<Self> {
        if !(opening > 0.0 && opening <= std::f64::consts::PI) {
            return Err(Error::BadAngle(opening));
        }
        let (s, c) = opening.sin_cos();
        let pieces = vec![
            Piece::HalfPlane { normal: [0.0, 1.0], offset: 0.0 },
            Piece::HalfPlane { normal: [s, -c], offset: 0.0 },
            Piece::Disk { center: [0.0, 0.0], radius },
        ];
        let x_lo = if c < 0.0 { c * radius } else { 0.0 };
        Self::new(pieces, [x_lo, radius, 0.0, radius])
    }

    /// Region above the line through the origin with slope `1/√3` and
    /// inside the unit circle centred at `(1/2, √3/2)`: the line+arc corner
    /// fixture continued to its second corner at `(3/2, √3/2)`.
    pub fn line_arc_lune() -> Result<Self> {
        let r3 = 3f64.sqrt();
        let pieces = vec![
            Piece::HalfPlane { normal: [-0.5, r3 / 2.0], offset: 0.0 },
            Piece::Disk { center: [0.5, r3 / 2.0], radius: 1.0 },
        ];
        Self::new(pieces, [-0.5, 1.5, 0.0, r3 / 2.0 + 1.0])
    }

    pub fn contains(&self, x: [f64; 2]) -> bool {
        self.signed_distance(x) > 0.0
    }

    /// Signed distance to `∂Ω`, positive inside. For an intersection the
    /// distance to the complement is the minimum over the pieces.
    pub fn signed_distance(&self, x: [f64; 2]) -> f64 {
        self.pieces.iter().map(|p| p.signed_distance(x)).fold(f64::INFINITY, f64::min)
    }

    /// Distance from the interior point `x` to `∂Ω` along the unit
    /// direction `dir`.
    pub fn exit_distance(&self, x: [f64; 2], dir: [f64; 2]) -> Option<f64> {
        self.pieces.iter().filter_map(|p| p.exit(x, dir)).min_by(f64::total_cmp)
    }

    /// Compares the sign of the distance with [`Piece`] membership on a
    /// uniform sample of the bounding box; returns the number of
    /// disagreements.
    pub fn consistency_violations(&self, per_axis: usize) -> usize {
        let [x0, x1, y0, y1] = self.bbox;
        let mut bad = 0;
        for i in 0..per_axis {
            for j in 0..per_axis {
                let x = [
                    x0 + (x1 - x0) * (i as f64 + 0.5) / per_axis as f64,
                    y0 + (y1 - y0) * (j as f64 + 0.5) / per_axis as f64,
                ];
                let member = self.pieces.iter().all(|p| match *p {
                    Piece::HalfPlane { normal, offset } => normal[0] * x[0] + normal[1] * x[1] > offset,
                    Piece::Disk { center, radius } => norm(sub(x, center)) < radius,
                    Piece::DiskExterior { center, radius } => norm(sub(x, center)) > radius,
                });
                if member != self.contains(x) {
                    bad += 1;
                }
            }
        }
        bad
    }
}
