//! Norm geometry: ρ-lengths, the Wulff construction, Hausdorff
//! distances and roundness metrics.
//!
//! A [`DirectionalNorm`] holds sampled values β(θ_k) on a uniform
//! angular grid.  [`wulff_construct`] intersects the sampled
//! half-planes into the Wulff crystal W and its unit-area
//! normalization Ŵ; [`phi_from_norm`] evaluates the isoperimetric
//! minimum φ on the minimizing curve; [`hausdorff`] measures shape
//! convergence in the ℓ∞ Hausdorff metric.

use serde::{Deserialize, Serialize};

use crate::lattice::Vec2;
use crate::{Error, Result};

/// Default angular resolution for norm tables and constructions.
pub const DEFAULT_K: usize = 720;

// ---------------------------------------------------------------------------
// Directional norms
// ---------------------------------------------------------------------------

/// A norm sampled on the uniform angular grid θ_k = 2πk/K.
///
/// Evaluation is exact at grid points and piecewise linear in the
/// angle in between; the Wulff construction uses only the sampled
/// half-planes, so no interpolated values are invented there.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DirectionalNorm {
    values: Vec<f64>,
}

impl DirectionalNorm {
    /// A norm table from explicit positive values on the uniform grid.
    pub fn from_values(values: Vec<f64>) -> Result<Self> {
        if values.len() < 3 {
            return Err(Error::InvalidArgument(
                "a norm table needs at least 3 directions".into(),
            ));
        }
        if !values.iter().all(|v| v.is_finite() && *v > 0.0) {
            return Err(Error::InvalidArgument(
                "norm values must be finite and positive".into(),
            ));
        }
        Ok(DirectionalNorm { values })
    }

    /// The constant norm β ≡ ν (Euclidean geometry scaled by ν).
    pub fn constant(nu: f64, k: usize) -> Result<Self> {
        Self::from_values(vec![nu; k])
    }

    /// The Euclidean norm table.
    pub fn euclidean(k: usize) -> Result<Self> {
        Self::constant(1.0, k)
    }

    /// The hexagonal norm: the gauge of the regular hexagon with unit
    /// circumradius and vertices in the six lattice directions.  This
    /// is the p = 1 graph-metric norm of the triangular lattice.
    pub fn hexagonal(k: usize) -> Result<Self> {
        let values = (0..k)
            .map(|i| {
                let th = std::f64::consts::TAU * i as f64 / k as f64;
                hexagonal_gauge(th)
            })
            .collect();
        Self::from_values(values)
    }

    pub fn k(&self) -> usize {
        self.values.len()
    }

    pub fn theta(&self, i: usize) -> f64 {
        std::f64::consts::TAU * i as f64 / self.k() as f64
    }

    pub fn value(&self, i: usize) -> f64 {
        self.values[i]
    }

    /// Scale the norm by a positive constant.
    pub fn scaled(&self, c: f64) -> Result<Self> {
        Self::from_values(self.values.iter().map(|v| c * v).collect())
    }

    /// β(u): homogeneous evaluation, linear in the angle between grid
    /// points.  The zero vector maps to 0.
    pub fn eval(&self, u: Vec2) -> f64 {
        let r = u.norm();
        if r == 0.0 {
            return 0.0;
        }
        let k = self.k() as f64;
        let mut t = u.angle().rem_euclid(std::f64::consts::TAU) / std::f64::consts::TAU * k;
        if t >= k {
            t -= k;
        }
        let i = t.floor() as usize % self.k();
        let frac = t - t.floor();
        let a = self.values[i];
        let b = self.values[(i + 1) % self.k()];
        r * (a + (b - a) * frac)
    }
}

/// Gauge of the unit-circumradius hexagon with vertices at angles kπ/3:
/// the supporting edges have inradius √3/2 with normals at odd
/// multiples of π/6.
fn hexagonal_gauge(theta: f64) -> f64 {
    let step = std::f64::consts::FRAC_PI_3;
    (0..6)
        .map(|k| {
            let normal = step / 2.0 + k as f64 * step;
            (theta - normal).cos() / (3f64.sqrt() / 2.0)
        })
        .fold(f64::MIN, f64::max)
}

// ---------------------------------------------------------------------------
// Convex bodies
// ---------------------------------------------------------------------------

/// A compact convex body given by its counterclockwise vertex polygon.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConvexBody {
    vertices: Vec<Vec2>,
}

impl ConvexBody {
    /// Build from a point set: the convex hull is taken, collinear
    /// runs collapsed; the area must be positive.
    pub fn from_points(points: &[Vec2]) -> Result<Self> {
        let hull = convex_hull(points);
        let body = ConvexBody { vertices: hull };
        if body.vertices.len() < 3 || body.area() <= 0.0 {
            return Err(Error::InvalidArgument(
                "degenerate convex body (zero area)".into(),
            ));
        }
        Ok(body)
    }

    pub fn vertices(&self) -> &[Vec2] {
        &self.vertices
    }

    /// Signed (positive) area by the shoelace formula.
    pub fn area(&self) -> f64 {
        let n = self.vertices.len();
        let mut s = 0.0;
        for i in 0..n {
            let a = self.vertices[i];
            let b = self.vertices[(i + 1) % n];
            s += a.x * b.y - b.x * a.y;
        }
        s / 2.0
    }

    /// Support function h(u) = max_{x ∈ body} u·x (u need not be unit).
    pub fn support(&self, u: Vec2) -> f64 {
        self.vertices
            .iter()
            .map(|v| v.x * u.x + v.y * u.y)
            .fold(f64::MIN, f64::max)
    }

    pub fn centroid(&self) -> Vec2 {
        let n = self.vertices.len();
        let (mut cx, mut cy, mut a) = (0.0, 0.0, 0.0);
        for i in 0..n {
            let p = self.vertices[i];
            let q = self.vertices[(i + 1) % n];
            let w = p.x * q.y - q.x * p.y;
            cx += (p.x + q.x) * w;
            cy += (p.y + q.y) * w;
            a += w;
        }
        Vec2::new(cx / (3.0 * a), cy / (3.0 * a))
    }

    pub fn scaled(&self, c: f64) -> ConvexBody {
        ConvexBody {
            vertices: self.vertices.iter().map(|v| v.scale(c)).collect(),
        }
    }

    pub fn translated(&self, d: Vec2) -> ConvexBody {
        ConvexBody {
            vertices: self.vertices.iter().map(|v| *v + d).collect(),
        }
    }

    pub fn rotated(&self, theta: f64) -> ConvexBody {
        ConvexBody {
            vertices: self.vertices.iter().map(|v| v.rotate(theta)).collect(),
        }
    }

    /// The closed boundary polyline (first vertex repeated at the end).
    pub fn boundary(&self) -> Vec<Vec2> {
        let mut b = self.vertices.clone();
        b.push(self.vertices[0]);
        b
    }

    /// True when `x` lies in the body (boundary included).
    pub fn contains(&self, x: Vec2) -> bool {
        let n = self.vertices.len();
        for i in 0..n {
            let a = self.vertices[i];
            let b = self.vertices[(i + 1) % n];
            let cross = (b.x - a.x) * (x.y - a.y) - (b.y - a.y) * (x.x - a.x);
            if cross < -1e-12 * (1.0 + a.norm() + b.norm()) {
                return false;
            }
        }
        true
    }
}

/// Andrew's monotone chain; strictly convex output (collinear points
/// dropped).
fn convex_hull(points: &[Vec2]) -> Vec<Vec2> {
    let scale: f64 = points.iter().map(|p| p.norm()).fold(1.0, f64::max);
    // Collapse clusters of near-coincident points against a list of
    // representatives.  Adjacent-pair dedup after sorting is not
    // enough: two distinct vertices sharing an x-coordinate (a
    // vertical edge) interleave in sorted order at the jitter level,
    // and the epsilon-popping below would then sweep a true vertex
    // out together with the noise.
    let tol = 1e-9 * scale;
    let mut pts: Vec<Vec2> = Vec::new();
    for &p in points {
        if !pts
            .iter()
            .any(|r| (r.x - p.x).abs() <= tol && (r.y - p.y).abs() <= tol)
        {
            pts.push(p);
        }
    }
    pts.sort_by(|a, b| (a.x, a.y).partial_cmp(&(b.x, b.y)).unwrap());
    if pts.len() < 3 {
        return pts;
    }
    let cross = |o: Vec2, a: Vec2, b: Vec2| (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x);
    let eps = 1e-12 * scale * scale;
    let build = |it: &mut dyn Iterator<Item = Vec2>| {
        let mut h: Vec<Vec2> = Vec::new();
        for p in it {
            while h.len() >= 2 && cross(h[h.len() - 2], h[h.len() - 1], p) <= eps {
                h.pop();
            }
            h.push(p);
        }
        h
    };
    let mut lower = build(&mut pts.iter().copied());
    let mut upper = build(&mut pts.iter().rev().copied());
    lower.pop();
    upper.pop();
    lower.append(&mut upper);
    lower
}

// ---------------------------------------------------------------------------
// ρ-length and the Wulff construction
// ---------------------------------------------------------------------------

/// Σ_i ρ(x_{i+1} − x_i) over the polyline's segments.  For polygonal
/// curves the partition supremum in the ρ-length definition is
/// attained at the vertex partition, so this is the exact ρ-length.
/// Zero-length segments are skipped.
pub fn rho_length(polyline: &[Vec2], norm: &DirectionalNorm) -> f64 {
    polyline
        .windows(2)
        .map(|w| norm.eval(w[1] - w[0]))
        .sum()
}

/// The Wulff crystal of a sampled norm and its unit-area
/// normalization: W = ∩_k {x : u_k·x ≤ β(θ_k)}, Ŵ = W/√area(W).
pub fn wulff_construct(norm: &DirectionalNorm) -> Result<(ConvexBody, ConvexBody)> {
    if norm.k() < 8 {
        return Err(Error::InvalidArgument(
            "wulff_construct needs at least 8 directions".into(),
        ));
    }
    let bound = 4.0 * (0..norm.k()).map(|i| norm.value(i)).fold(0.0, f64::max);
    let mut poly = vec![
        Vec2::new(-bound, -bound),
        Vec2::new(bound, -bound),
        Vec2::new(bound, bound),
        Vec2::new(-bound, bound),
    ];
    for i in 0..norm.k() {
        let th = norm.theta(i);
        let u = Vec2::new(th.cos(), th.sin());
        poly = clip_halfplane(&poly, u, norm.value(i));
        if poly.len() < 3 {
            return Err(Error::Unbounded);
        }
    }
    // If any side of the initial bounding square survived, the sampled
    // directions failed to bound the intersection.
    if poly.iter().any(|v| v.norm_inf() >= bound - 1e-9) {
        return Err(Error::Unbounded);
    }
    let w = ConvexBody::from_points(&poly)?;
    let w_hat = w.scaled(1.0 / w.area().sqrt());
    debug_assert!((w_hat.area() - 1.0).abs() < 1e-9);
    Ok((w, w_hat))
}

/// Sutherland–Hodgman clip of a convex polygon by {x : u·x ≤ c}.
fn clip_halfplane(poly: &[Vec2], u: Vec2, c: f64) -> Vec<Vec2> {
    let side = |p: Vec2| u.x * p.x + u.y * p.y - c;
    let mut out = Vec::with_capacity(poly.len() + 1);
    let n = poly.len();
    for i in 0..n {
        let a = poly[i];
        let b = poly[(i + 1) % n];
        let (sa, sb) = (side(a), side(b));
        if sa <= 0.0 {
            out.push(a);
        }
        if (sa < 0.0 && sb > 0.0) || (sa > 0.0 && sb < 0.0) {
            let t = sa / (sa - sb);
            out.push(Vec2::new(a.x + t * (b.x - a.x), a.y + t * (b.y - a.y)));
        }
    }
    out
}

// ---------------------------------------------------------------------------
// Hausdorff distance
// ---------------------------------------------------------------------------

/// A compact shape for Hausdorff comparisons: a convex polygon or a
/// closed Euclidean disk.
#[derive(Debug, Clone)]
pub enum Shape {
    Body(ConvexBody),
    Disk { center: Vec2, r: f64 },
}

impl From<ConvexBody> for Shape {
    fn from(b: ConvexBody) -> Shape {
        Shape::Body(b)
    }
}

/// ℓ∞ distance from a point to a segment (convex in the parameter, so
/// ternary search converges).
fn point_segment_inf(x: Vec2, a: Vec2, b: Vec2) -> f64 {
    let f = |t: f64| {
        let p = Vec2::new(a.x + t * (b.x - a.x), a.y + t * (b.y - a.y));
        (x - p).norm_inf()
    };
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    for _ in 0..80 {
        let m1 = lo + (hi - lo) / 3.0;
        let m2 = hi - (hi - lo) / 3.0;
        if f(m1) <= f(m2) {
            hi = m2;
        } else {
            lo = m1;
        }
    }
    f((lo + hi) / 2.0)
}

/// ℓ∞ distance from a point to a shape (0 inside).
pub fn point_shape_inf(x: Vec2, s: &Shape) -> f64 {
    match s {
        Shape::Body(b) => {
            if b.contains(x) {
                return 0.0;
            }
            let vs = b.vertices();
            let n = vs.len();
            (0..n)
                .map(|i| point_segment_inf(x, vs[i], vs[(i + 1) % n]))
                .fold(f64::MAX, f64::min)
        }
        Shape::Disk { center, r } => {
            let d = x - *center;
            if d.norm() <= *r {
                return 0.0;
            }
            // Coarse scan over the circle, then ternary refinement
            // around the best arc.
            let f = |phi: f64| {
                let y = *center + Vec2::new(r * phi.cos(), r * phi.sin());
                (x - y).norm_inf()
            };
            let m = 256;
            let mut best_i = 0;
            let mut best = f64::MAX;
            for i in 0..m {
                let v = f(std::f64::consts::TAU * i as f64 / m as f64);
                if v < best {
                    best = v;
                    best_i = i;
                }
            }
            let step = std::f64::consts::TAU / m as f64;
            let (mut lo, mut hi) = (
                (best_i as f64 - 1.0) * step,
                (best_i as f64 + 1.0) * step,
            );
            for _ in 0..80 {
                let m1 = lo + (hi - lo) / 3.0;
                let m2 = hi - (hi - lo) / 3.0;
                if f(m1) <= f(m2) {
                    hi = m2;
                } else {
                    lo = m1;
                }
            }
            f((lo + hi) / 2.0)
        }
    }
}

/// Directed Hausdorff distance sup_{x ∈ a} dist_∞(x, b).
///
/// x ↦ dist_∞(x, b) is convex (b is convex), so over a polygon the
/// supremum is attained at a vertex and is computed exactly; over a
/// disk the boundary is sampled with doubling refinement.
fn directed_hausdorff(a: &Shape, b: &Shape) -> f64 {
    match a {
        Shape::Body(body) => body
            .vertices()
            .iter()
            .map(|v| point_shape_inf(*v, b))
            .fold(0.0, f64::max),
        Shape::Disk { center, r } => {
            let eval = |m: usize| -> f64 {
                (0..m)
                    .map(|i| {
                        let phi = std::f64::consts::TAU * i as f64 / m as f64;
                        let x = *center + Vec2::new(r * phi.cos(), r * phi.sin());
                        point_shape_inf(x, b)
                    })
                    .fold(0.0, f64::max)
            };
            let mut m = 256;
            let mut prev = eval(m);
            loop {
                m *= 2;
                let cur = eval(m);
                if (cur - prev).abs() < 5e-7 || m >= 1 << 16 {
                    return cur;
                }
                prev = cur;
            }
        }
    }
}

/// Hausdorff distance between two compact shapes under the ℓ∞ point
/// metric, to about 1e−6.
pub fn hausdorff(a: &Shape, b: &Shape) -> f64 {
    directed_hausdorff(a, b).max(directed_hausdorff(b, a))
}

// ---------------------------------------------------------------------------
// φ and roundness
// ---------------------------------------------------------------------------

/// φ̂: the minimal ρ-length of a Jordan curve enclosing unit area.
///
/// The ρ-length weighs the tangent direction of the curve while the
/// Wulff body constrains support in the normal direction, so the
/// variational minimizer is the unit-area normalization of the Wulff
/// crystal rotated by π/2 (for the symmetric norms produced here a
/// rotation acts on the same body family; for the Euclidean norm it is
/// a no-op).  φ̂ is evaluated on that curve, not searched.
pub fn phi_from_norm(norm: &DirectionalNorm) -> Result<f64> {
    let (_, w_hat) = wulff_construct(norm)?;
    let minimizer = w_hat.rotated(std::f64::consts::FRAC_PI_2);
    Ok(rho_length(&minimizer.boundary(), norm))
}

/// Roundness metrics of a convex body.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct Roundness {
    /// Max over min support radius about the centroid; 1 iff a disk.
    pub ratio: f64,
    /// ℓ∞ Hausdorff distance to the equal-area disk at the centroid.
    pub dh_disk: f64,
}

/// Roundness of a body: support-radius ratio and distance to the
/// equal-area disk, both measured about the centroid.
pub fn roundness(body: &ConvexBody) -> Roundness {
    let c = body.centroid();
    let centered = body.translated(Vec2::new(-c.x, -c.y));
    // The support function about an interior point attains its maximum
    // at a vertex direction and its minimum at an edge-normal
    // direction (the lower envelope of vertex cosines switches there),
    // so both extremes are exact.
    let rmax = centered
        .vertices()
        .iter()
        .map(|v| v.norm())
        .fold(0.0, f64::max);
    let vs = centered.vertices();
    let n = vs.len();
    let rmin = (0..n)
        .map(|i| {
            let a = vs[i];
            let b = vs[(i + 1) % n];
            let e = b - a;
            (a.x * e.y - a.y * e.x).abs() / e.norm()
        })
        .fold(f64::MAX, f64::min);
    let r = (centered.area() / std::f64::consts::PI).sqrt();
    let dh = hausdorff(
        &Shape::Body(centered),
        &Shape::Disk {
            center: Vec2::ZERO,
            r,
        },
    );
    Roundness {
        ratio: rmax / rmin,
        dh_disk: dh,
    }
}
