//! Triangular-lattice geometry.
//!
//! Vertices live at `x + y·e^{iπ/3}` with integer axial coordinates
//! `(x, y)`; all combinatorics run on the integers and the planar
//! embedding is derived.  The hexagonal dual is represented through its
//! corners (triangle centers) and through dual edges keyed by their
//! primal oriented edge, so interfaces stay integer data end to end.

use std::fmt;

use serde::{Deserialize, Serialize};


/// √3/2, the height of a unit equilateral triangle.
pub const SQRT3_2: f64 = 0.8660254037844386;

// ---------------------------------------------------------------------------
// Planar points
// ---------------------------------------------------------------------------

/// A point of the plane (ℝ² ≅ ℂ).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Vec2 {
    pub x: f64,
    pub y: f64,
}

impl Vec2 {
    pub const ZERO: Vec2 = Vec2 { x: 0.0, y: 0.0 };

    pub fn new(x: f64, y: f64) -> Self {
        Vec2 { x, y }
    }

    /// Unit vector at the given angle (radians).
    pub fn unit(theta: f64) -> Self {
        Vec2::new(theta.cos(), theta.sin())
    }

    pub fn dot(self, o: Vec2) -> f64 {
        self.x * o.x + self.y * o.y
    }

    /// z-component of the cross product.
    pub fn cross(self, o: Vec2) -> f64 {
        self.x * o.y - self.y * o.x
    }

    pub fn norm(self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn norm_inf(self) -> f64 {
        self.x.abs().max(self.y.abs())
    }

    pub fn scale(self, c: f64) -> Vec2 {
        Vec2::new(c * self.x, c * self.y)
    }

    /// Rotation by `theta` about the origin.
    pub fn rotate(self, theta: f64) -> Vec2 {
        let (s, c) = theta.sin_cos();
        Vec2::new(c * self.x - s * self.y, s * self.x + c * self.y)
    }

    pub fn angle(self) -> f64 {
        self.y.atan2(self.x)
    }
}

impl std::ops::Add for Vec2 {
    type Output = Vec2;
    fn add(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x + o.x, self.y + o.y)
    }
}

impl std::ops::Sub for Vec2 {
    type Output = Vec2;
    fn sub(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x - o.x, self.y - o.y)
    }
}

impl std::ops::Neg for Vec2 {
    type Output = Vec2;
    fn neg(self) -> Vec2 {
        Vec2::new(-self.x, -self.y)
    }
}

// ---------------------------------------------------------------------------
// Axial coordinates and directions
// ---------------------------------------------------------------------------

/// A lattice vertex in axial coordinates; embeds as `x + y·e^{iπ/3}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Axial {
    pub x: i32,
    pub y: i32,
}

impl Axial {
    pub const ORIGIN: Axial = Axial { x: 0, y: 0 };

    pub fn new(x: i32, y: i32) -> Self {
        Axial { x, y }
    }

    /// Planar embedding `(x + y/2, y·√3/2)`.
    pub fn embed(self) -> Vec2 {
        Vec2::new(self.x as f64 + self.y as f64 * 0.5, self.y as f64 * SQRT3_2)
    }

    /// The six neighbors, indexed by [`Direction`].
    pub fn neighbors(self) -> [Axial; 6] {
        let mut out = [self; 6];
        for (i, d) in Direction::ALL.iter().enumerate() {
            out[i] = self.step(*d);
        }
        out
    }

    pub fn step(self, d: Direction) -> Axial {
        let (dx, dy) = d.offset();
        Axial::new(self.x + dx, self.y + dy)
    }

    /// Direction from `self` to an adjacent vertex, if adjacent.
    pub fn direction_to(self, o: Axial) -> Option<Direction> {
        let (dx, dy) = (o.x - self.x, o.y - self.y);
        Direction::ALL.into_iter().find(|d| d.offset() == (dx, dy))
    }

    pub fn is_adjacent(self, o: Axial) -> bool {
        self != o && self.direction_to(o).is_some()
    }
}

impl fmt::Display for Axial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.x, self.y)
    }
}

/// Snap a planar point to the nearest lattice vertex (Euclidean metric),
/// breaking ties by the lexicographic (x, y) order on axial coordinates.
pub fn snap_planar(p: Vec2) -> Axial {
    // Invert the embedding, then check the 3x3 axial neighborhood.
    let y0 = (p.y / SQRT3_2).round() as i32;
    let x0 = (p.x - y0 as f64 * 0.5).round() as i32;
    let mut best = Axial::new(x0, y0);
    let mut best_d = (best.embed() - p).norm();
    for dy in -1..=1 {
        for dx in -1..=1 {
            let v = Axial::new(x0 + dx, y0 + dy);
            let d = (v.embed() - p).norm();
            if d + 1e-12 < best_d || ((d - best_d).abs() <= 1e-12 && (v.x, v.y) < (best.x, best.y))
            {
                best = v;
                best_d = d;
            }
        }
    }
    best
}

/// One of the six lattice directions; direction `k` has angle `kπ/3`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Direction(u8);

impl Direction {
    pub const ALL: [Direction; 6] = [
        Direction(0),
        Direction(1),
        Direction(2),
        Direction(3),
        Direction(4),
        Direction(5),
    ];

    /// Axial offsets in counterclockwise order, k = 0..5.
    const OFFSETS: [(i32, i32); 6] = [(1, 0), (0, 1), (-1, 1), (-1, 0), (0, -1), (1, -1)];

    pub fn new(k: u8) -> Self {
        assert!(k < 6, "direction index out of range: {k}");
        Direction(k)
    }

    pub fn index(self) -> u8 {
        self.0
    }

    pub fn offset(self) -> (i32, i32) {
        Self::OFFSETS[self.0 as usize]
    }

    pub fn opposite(self) -> Direction {
        self.rotate(3)
    }

    /// Rotate counterclockwise by `steps` sixths of a turn.
    pub fn rotate(self, steps: i32) -> Direction {
        Direction(((self.0 as i32 + steps).rem_euclid(6)) as u8)
    }

    /// Unit vector at angle `kπ/3`.
    pub fn unit(self) -> Vec2 {
        let (dx, dy) = self.offset();
        Axial::new(dx, dy).embed()
    }
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// The counterclockwise run of directions strictly between `d_in` and
/// `d_out`.
///
/// `d_in` points from a path vertex toward its predecessor and `d_out`
/// toward its successor; the heads of the returned directions are the
/// right-boundary vertices there.  Empty when `d_out = d_in + 1 (mod 6)`.
/// When `d_in = d_out` the path backtracks along the edge it arrived by
/// (a distinct oriented edge) and the fan is the full run of the other
/// five directions — this is how a boundary circuit rounds a spur.
pub fn right_boundary_dirs(d_in: Direction, d_out: Direction) -> Vec<Direction> {
    let len = if d_in == d_out {
        5
    } else {
        (d_out.0 as i32 - d_in.0 as i32 - 1).rem_euclid(6)
    };
    (1..=len).map(|s| d_in.rotate(s)).collect()
}

// ---------------------------------------------------------------------------
// Oriented edges and the hexagonal dual
// ---------------------------------------------------------------------------

/// An oriented edge of the lattice, keyed by its tail and direction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct OrientedEdge {
    pub tail: Axial,
    pub dir: Direction,
}

impl OrientedEdge {
    pub fn new(tail: Axial, dir: Direction) -> Self {
        OrientedEdge { tail, dir }
    }

    pub fn between(tail: Axial, head: Axial) -> Option<Self> {
        tail.direction_to(head).map(|dir| OrientedEdge { tail, dir })
    }

    pub fn head(self) -> Axial {
        self.tail.step(self.dir)
    }

    pub fn reversed(self) -> Self {
        OrientedEdge {
            tail: self.head(),
            dir: self.dir.opposite(),
        }
    }

    /// The dual edge on the hexagonal lattice.
    pub fn dual(self) -> DualEdge {
        DualEdge { primal: self }
    }
}

/// A corner of the hexagonal dual (equivalently a triangular face),
/// identified by the coordinate sum of its three vertices.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Corner {
    pub sx: i32,
    pub sy: i32,
}

impl Corner {
    pub fn of_triangle(a: Axial, b: Axial, c: Axial) -> Self {
        Corner {
            sx: a.x + b.x + c.x,
            sy: a.y + b.y + c.y,
        }
    }

    /// Center of the triangle, i.e. the dual-lattice corner position.
    pub fn embed(self) -> Vec2 {
        Vec2::new(
            (self.sx as f64 + self.sy as f64 * 0.5) / 3.0,
            self.sy as f64 * SQRT3_2 / 3.0,
        )
    }
}

/// An oriented edge of the hexagonal dual, stored via its primal edge.
///
/// The orientation contract: the hexagon of the primal head is strictly
/// on the right of the direction of travel, the tail hexagon on the left.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct DualEdge {
    pub primal: OrientedEdge,
}

impl DualEdge {
    /// The hexagon on the left of the direction of travel.
    pub fn left_hex(self) -> Axial {
        self.primal.tail
    }

    /// The hexagon on the right of the direction of travel.
    pub fn right_hex(self) -> Axial {
        self.primal.head()
    }

    /// Corner the dual edge starts from: the center of the triangle
    /// spanned by the primal edge and the clockwise-adjacent vertex.
    pub fn tail_corner(self) -> Corner {
        let t = self.primal.tail;
        Corner::of_triangle(t, self.primal.head(), t.step(self.primal.dir.rotate(-1)))
    }

    /// Corner the dual edge points to.
    pub fn head_corner(self) -> Corner {
        let t = self.primal.tail;
        Corner::of_triangle(t, self.primal.head(), t.step(self.primal.dir.rotate(1)))
    }

    pub fn reversed(self) -> DualEdge {
        DualEdge {
            primal: self.primal.reversed(),
        }
    }

    pub fn endpoints(self) -> (Vec2, Vec2) {
        (self.tail_corner().embed(), self.head_corner().embed())
    }
}

// ---------------------------------------------------------------------------
// Boxes
// ---------------------------------------------------------------------------

/// A closed tilted box `e^{iθ}·([0,w]×[−h,h]) + anchor`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TiltedBox {
    pub anchor: Vec2,
    pub width: f64,
    pub half_height: f64,
    pub angle: f64,
}

/// Membership slack for rotated coordinates; combinatorial data never
/// depends on it at axis-aligned integer boxes.
const BOX_EPS: f64 = 1e-9;

impl TiltedBox {
    pub fn new(anchor: Vec2, width: f64, half_height: f64, angle: f64) -> Self {
        assert!(width >= 0.0 && half_height >= 0.0);
        TiltedBox {
            anchor,
            width,
            half_height,
            angle,
        }
    }

    /// Axis-aligned box `[x0,x1]×[y0,y1]`.
    pub fn axis_aligned(x0: f64, x1: f64, y0: f64, y1: f64) -> Self {
        assert!(x1 >= x0 && y1 >= y0);
        TiltedBox {
            anchor: Vec2::new(x0, 0.5 * (y0 + y1)),
            width: x1 - x0,
            half_height: 0.5 * (y1 - y0),
            angle: 0.0,
        }
    }

    /// The square `[-r, r]²` housing `B_r`.
    pub fn centered_square(r: f64) -> Self {
        TiltedBox::axis_aligned(-r, r, -r, r)
    }

    /// Local coordinates: rotate by −θ and translate so the box is
    /// `[0,w]×[−h,h]`.
    pub fn to_local(&self, p: Vec2) -> Vec2 {
        (p - self.anchor).rotate(-self.angle)
    }

    pub fn from_local(&self, q: Vec2) -> Vec2 {
        q.rotate(self.angle) + self.anchor
    }

    pub fn contains(&self, p: Vec2) -> bool {
        let q = self.to_local(p);
        q.x >= -BOX_EPS
            && q.x <= self.width + BOX_EPS
            && q.y.abs() <= self.half_height + BOX_EPS
    }

    /// One of the four sides as a planar segment.
    pub fn side(&self, which: BoxSide) -> (Vec2, Vec2) {
        let (w, h) = (self.width, self.half_height);
        let (a, b) = match which {
            BoxSide::Left => (Vec2::new(0.0, -h), Vec2::new(0.0, h)),
            BoxSide::Right => (Vec2::new(w, -h), Vec2::new(w, h)),
            BoxSide::Top => (Vec2::new(0.0, h), Vec2::new(w, h)),
            BoxSide::Bottom => (Vec2::new(0.0, -h), Vec2::new(w, -h)),
        };
        (self.from_local(a), self.from_local(b))
    }

    /// Does the segment `pq` meet the given side (closed, touching
    /// counts)?
    pub fn segment_crosses_side(&self, p: Vec2, q: Vec2, which: BoxSide) -> bool {
        let (a, b) = self.side(which);
        segments_intersect(p, q, a, b)
    }

    /// Smallest axial rectangle whose vertex set covers the box inflated
    /// by `margin` in every planar direction.
    pub fn bounding_rect(&self, margin: f64) -> AxialRect {
        let (w, h) = (self.width, self.half_height);
        let corners = [
            Vec2::new(-margin, -h - margin),
            Vec2::new(w + margin, -h - margin),
            Vec2::new(w + margin, h + margin),
            Vec2::new(-margin, h + margin),
        ];
        let mut ymin = f64::INFINITY;
        let mut ymax = f64::NEG_INFINITY;
        let mut xmin = f64::INFINITY;
        let mut xmax = f64::NEG_INFINITY;
        for c in corners {
            let p = self.from_local(c);
            // axial y from planar y; axial x depends on y, so bound both.
            ymin = ymin.min(p.y / SQRT3_2);
            ymax = ymax.max(p.y / SQRT3_2);
            xmin = xmin.min(p.x);
            xmax = xmax.max(p.x);
        }
        let y0 = ymin.floor() as i32 - 1;
        let y1 = ymax.ceil() as i32 + 1;
        let x0 = (xmin - 0.5 * ymax.abs().max(ymin.abs())).floor() as i32 - 1;
        let x1 = (xmax + 0.5 * ymax.abs().max(ymin.abs())).ceil() as i32 + 1;
        AxialRect::new(x0, y0, (x1 - x0 + 1) as usize, (y1 - y0 + 1) as usize)
    }
}

/// Side selector for [`TiltedBox`] crossings.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BoxSide {
    Left,
    Right,
    Top,
    Bottom,
}

/// Exactly the lattice vertices whose embedding lies in the closed box.
pub fn box_vertices(b: &TiltedBox) -> Vec<Axial> {
    b.bounding_rect(0.0)
        .iter()
        .filter(|v| b.contains(v.embed()))
        .collect()
}

/// Closed segment intersection, including touching and collinear overlap.
pub fn segments_intersect(p1: Vec2, p2: Vec2, q1: Vec2, q2: Vec2) -> bool {
    const EPS: f64 = 1e-12;
    let d1 = (q2 - q1).cross(p1 - q1);
    let d2 = (q2 - q1).cross(p2 - q1);
    let d3 = (p2 - p1).cross(q1 - p1);
    let d4 = (p2 - p1).cross(q2 - p1);
    if ((d1 > EPS && d2 < -EPS) || (d1 < -EPS && d2 > EPS))
        && ((d3 > EPS && d4 < -EPS) || (d3 < -EPS && d4 > EPS))
    {
        return true;
    }
    let on = |a: Vec2, b: Vec2, c: Vec2, d: f64| -> bool {
        d.abs() <= EPS
            && c.x >= a.x.min(b.x) - EPS
            && c.x <= a.x.max(b.x) + EPS
            && c.y >= a.y.min(b.y) - EPS
            && c.y <= a.y.max(b.y) + EPS
    };
    on(q1, q2, p1, d1) || on(q1, q2, p2, d2) || on(p1, p2, q1, d3) || on(p1, p2, q2, d4)
}

// ---------------------------------------------------------------------------
// Axial rectangles (dense storage windows)
// ---------------------------------------------------------------------------

/// A rectangle in axial coordinates: `x ∈ [x0, x0+nx)`, `y ∈ [y0, y0+ny)`.
///
/// This is the dense storage shape for configurations; geometric windows
/// are realized as axial rectangles covering them.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AxialRect {
    pub x0: i32,
    pub y0: i32,
    pub nx: usize,
    pub ny: usize,
}

impl AxialRect {
    pub fn new(x0: i32, y0: i32, nx: usize, ny: usize) -> Self {
        AxialRect { x0, y0, nx, ny }
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn contains(&self, v: Axial) -> bool {
        v.x >= self.x0
            && v.x < self.x0 + self.nx as i32
            && v.y >= self.y0
            && v.y < self.y0 + self.ny as i32
    }

    /// Row-major index (y outer, x inner).
    pub fn index(&self, v: Axial) -> Option<usize> {
        if self.contains(v) {
            Some((v.y - self.y0) as usize * self.nx + (v.x - self.x0) as usize)
        } else {
            None
        }
    }

    pub fn vertex_at(&self, idx: usize) -> Axial {
        debug_assert!(idx < self.len());
        Axial::new(
            self.x0 + (idx % self.nx) as i32,
            self.y0 + (idx / self.nx) as i32,
        )
    }

    pub fn iter(&self) -> impl Iterator<Item = Axial> + '_ {
        let r = *self;
        (0..r.len()).map(move |i| r.vertex_at(i))
    }

    /// Shrink by `m` cells on every side (saturating).
    pub fn shrunk(&self, m: usize) -> AxialRect {
        AxialRect::new(
            self.x0 + m as i32,
            self.y0 + m as i32,
            self.nx.saturating_sub(2 * m),
            self.ny.saturating_sub(2 * m),
        )
    }
}
