//! The right-boundary distance b(x, y) and the boundary norm β_p.
//!
//! b(x, y) is the minimum, over open right-most paths γ from x to y, of
//! the number of open vertices in the right boundary ∂⁺γ.  The module
//! provides an exact branch-and-bound solver, a constructive upper
//! bound built from a box-crossing geodesic (the bypass construction),
//! sound two-sided brackets, and the Monte Carlo estimator β̂_p used to
//! compare the boundary norm with the time constant μ_p.

use std::cmp::Reverse;
use std::collections::{BinaryHeap, HashSet, VecDeque};

use serde::{Deserialize, Serialize};

use crate::fpp::{first_passage, min_crossing_path, open_crossing_path, NormSample};
use crate::lattice::{
    right_boundary_dirs, Axial, AxialRect, BoxSide, Direction, OrientedEdge, TiltedBox, Vec2,
};
use crate::percolation::{
    derive_seed, infinite_cluster_proxy, label_clusters, nearest_in_cluster, Color,
    Configuration, Estimate, DEFAULT_PAD_FACTOR,
};
use crate::pool;
use crate::rightmost::{
    outer_interface, path_of_interface, star_concat, Orientation, RightMostPath, Subgraph,
};
use crate::{Error, Result};

/// Default node budget for [`b_exact`].
pub const DEFAULT_B_BUDGET: usize = 300_000;

/// Replica-level cap on the lattice length of the open connector paths
/// in the bypass construction, as a multiple of √n.  Connectors longer
/// than this fail the chemical-distance event and trigger a resample.
pub const BYPASS_DIST_FACTOR: f64 = 20.0;

// ---------------------------------------------------------------------------
// Extended passage-time map
// ---------------------------------------------------------------------------

/// First-passage distances from `from` on the window extended by a
/// virtual open sea (weight 1 beyond the window).  `map[i]` includes
/// the weights of both endpoints of the minimizing path, so
/// `T(v, from) = map[v]` with the true vertex states, and the
/// both-endpoints-closed time is `map[v] − ω(v) − ω(from)`.
fn ext_time_map(config: &Configuration, from: Axial) -> (AxialRect, Vec<u32>) {
    let win = config.window;
    let margin = (win.nx + win.ny) as i32;
    let w = AxialRect::new(
        win.x0 - margin,
        win.y0 - margin,
        win.nx + 2 * margin as usize,
        win.ny + 2 * margin as usize,
    );
    let weight = |v: Axial| -> u32 {
        if win.contains(v) {
            config.weight(v).unwrap()
        } else {
            1
        }
    };
    let mut dist = vec![u32::MAX; w.len()];
    let fi = w.index(from).expect("window inside extension");
    dist[fi] = weight(from);
    let mut q = VecDeque::from([fi]);
    let mut settled = vec![false; w.len()];
    while let Some(ui) = q.pop_front() {
        if settled[ui] {
            continue;
        }
        settled[ui] = true;
        let u = w.vertex_at(ui);
        for v in u.neighbors() {
            let Some(vi) = w.index(v) else { continue };
            if settled[vi] {
                continue;
            }
            let nd = dist[ui] + weight(v);
            if nd < dist[vi] {
                dist[vi] = nd;
                if weight(v) == 0 {
                    q.push_front(vi);
                } else {
                    q.push_back(vi);
                }
            }
        }
    }
    (w, dist)
}

// ---------------------------------------------------------------------------
// Step rule shared by the exact searches
// ---------------------------------------------------------------------------

/// Admissible continuations of an open right-most path at `cur`, whose
/// previous vertex lies in direction `back`.
///
/// A step to `w = cur + d_out` is admissible when the oriented edge is
/// unused, `w` is open and in the window, `w` is not in the accumulated
/// right boundary, and the fan of right-boundary vertices generated at
/// `cur` stays inside the window and off the path.  Steps whose fan
/// would leave the window are rejected because b is undefined there.
fn rightmost_steps(
    config: &Configuration,
    cur: Axial,
    back: Direction,
    used: &HashSet<OrientedEdge>,
    vset: &HashSet<Axial>,
    bset: &HashSet<Axial>,
) -> Vec<(Axial, Direction, Vec<Axial>)> {
    let mut out = Vec::new();
    // s = 1 is the empty fan, which right-mostness forbids at interior
    // vertices.
    'step: for s in [0, 2, 3, 4, 5] {
        let d_out = back.rotate(s);
        let w = cur.step(d_out);
        if used.contains(&OrientedEdge::new(cur, d_out)) {
            continue;
        }
        if !matches!(config.is_open(w), Ok(true)) {
            continue;
        }
        if bset.contains(&w) {
            continue;
        }
        let mut heads = Vec::new();
        for d in right_boundary_dirs(back, d_out) {
            let h = cur.step(d);
            if !config.window.contains(h) {
                continue 'step;
            }
            if vset.contains(&h) || h == w {
                continue 'step;
            }
            heads.push(h);
        }
        out.push((w, d_out.rotate(3), heads));
    }
    out
}

// ---------------------------------------------------------------------------
// Exact search
// ---------------------------------------------------------------------------

struct SearchState {
    f: u32,
    tick: u64,
    count: u32,
    path: Vec<Axial>,
    back: Direction,
    vset: HashSet<Axial>,
    eset: HashSet<OrientedEdge>,
    bset: HashSet<Axial>,
}

impl SearchState {
    /// Heap key: best bound first, then deepest path (goal-directed on
    /// plateaus of equal bound), then insertion order.
    fn key(&self) -> (u32, Reverse<usize>, u64) {
        (self.f, Reverse(self.path.len()), self.tick)
    }
}

impl PartialEq for SearchState {
    fn eq(&self, o: &Self) -> bool {
        self.key() == o.key()
    }
}
impl Eq for SearchState {}
impl PartialOrd for SearchState {
    fn partial_cmp(&self, o: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(o))
    }
}
impl Ord for SearchState {
    fn cmp(&self, o: &Self) -> std::cmp::Ordering {
        self.key().cmp(&o.key())
    }
}

/// b(x, y): minimum over open right-most paths from x to y of the open
/// right-boundary count, by best-first branch and bound.
///
/// The admissible bound on any completion from v is the forced-closed
/// passage time T(v, y) − 2 (each of that many separating circuits
/// contributes a distinct open boundary vertex), so the first goal
/// taken off the queue is exact.  `budget` caps expansions.
pub fn b_exact(
    config: &Configuration,
    x: Axial,
    y: Axial,
    budget: usize,
) -> Result<(u32, RightMostPath)> {
    for v in [x, y] {
        if !config.is_open(v)? {
            return Err(Error::InvalidArgument(
                "b(x, y) requires open endpoints".into(),
            ));
        }
    }
    if x == y {
        let p = RightMostPath::new(vec![x], false)?;
        return Ok((0, p));
    }
    if !open_connected(config, x, y)? {
        return Err(Error::Disconnected);
    }
    let (ew, dmap) = ext_time_map(config, y);
    let h = |v: Axial| -> u32 { dmap[ew.index(v).unwrap()].saturating_sub(2) };
    // A constructive upper bound for pruning: the shortest open path is
    // right-most.
    let ub = shortest_open_path(config, x, y)
        .ok()
        .and_then(|p| RightMostPath::new(p, false).ok())
        .and_then(|p| p.b_count(config).ok());

    let mut heap: BinaryHeap<Reverse<SearchState>> = BinaryHeap::new();
    let mut tick = 0u64;
    for d in Direction::ALL {
        let w = x.step(d);
        if !matches!(config.is_open(w), Ok(true)) {
            continue;
        }
        tick += 1;
        heap.push(Reverse(SearchState {
            f: h(w),
            tick,
            count: 0,
            path: vec![x, w],
            back: d.rotate(3),
            vset: HashSet::from([x, w]),
            eset: HashSet::from([OrientedEdge::new(x, d)]),
            bset: HashSet::new(),
        }));
    }
    let mut expansions = 0usize;
    while let Some(Reverse(st)) = heap.pop() {
        let cur = *st.path.last().unwrap();
        if cur == y {
            let p = RightMostPath::new(st.path, false)?;
            debug_assert_eq!(p.b_count(config)?, st.count);
            return Ok((st.count, p));
        }
        expansions += 1;
        if expansions > budget {
            return Err(Error::BudgetExceeded);
        }
        for (w, back, heads) in
            rightmost_steps(config, cur, st.back, &st.eset, &st.vset, &st.bset)
        {
            let mut bset = st.bset.clone();
            let mut count = st.count;
            for hd in &heads {
                if bset.insert(*hd) && config.is_open(*hd)? {
                    count += 1;
                }
            }
            let f = count.max(h(w));
            if let Some(ub) = ub {
                if f > ub {
                    continue;
                }
            }
            let mut vset = st.vset.clone();
            vset.insert(w);
            let mut eset = st.eset.clone();
            eset.insert(OrientedEdge::new(cur, back.rotate(3)));
            let mut path = st.path.clone();
            path.push(w);
            tick += 1;
            heap.push(Reverse(SearchState {
                f,
                tick,
                count,
                path,
                back,
                vset,
                eset,
                bset,
            }));
        }
    }
    Err(Error::EventFailure(
        "no open right-most path with in-window boundary exists",
    ))
}

fn open_connected(config: &Configuration, x: Axial, y: Axial) -> Result<bool> {
    Ok(crate::percolation::chemical_distance(config, x, y)?.is_some())
}

/// Shortest open lattice path from x to y (BFS); such paths are always
/// right-most.
pub fn shortest_open_path(config: &Configuration, x: Axial, y: Axial) -> Result<Vec<Axial>> {
    for v in [x, y] {
        if !config.is_open(v)? {
            return Err(Error::InvalidArgument("endpoints must be open".into()));
        }
    }
    let w = config.window;
    let xi = w.index(x).ok_or(Error::OutOfWindow(x))?;
    let yi = w.index(y).ok_or(Error::OutOfWindow(y))?;
    let mut parent = vec![usize::MAX; w.len()];
    let mut seen = vec![false; w.len()];
    seen[xi] = true;
    let mut q = VecDeque::from([xi]);
    while let Some(ui) = q.pop_front() {
        if ui == yi {
            break;
        }
        let u = w.vertex_at(ui);
        for v in u.neighbors() {
            let Some(vi) = w.index(v) else { continue };
            if !seen[vi] && config.is_open(v)? {
                seen[vi] = true;
                parent[vi] = ui;
                q.push_back(vi);
            }
        }
    }
    if !seen[yi] {
        return Err(Error::Disconnected);
    }
    let mut path = vec![y];
    let mut cur = yi;
    while cur != xi {
        cur = parent[cur];
        path.push(w.vertex_at(cur));
    }
    path.reverse();
    Ok(path)
}

// ---------------------------------------------------------------------------
// Brackets
// ---------------------------------------------------------------------------

/// Two-sided bracket for b(x, y).
#[derive(Debug, Clone)]
pub struct BoundaryBracket {
    /// max(0, T(x, y) − 2): every open right-most path crosses that
    /// many disjoint separating circuits.
    pub lower: u32,
    /// b-count of a constructive witness path.
    pub upper: u32,
    /// Filled when the exact search finished within budget.
    pub exact: Option<u32>,
    /// The best witness found.
    pub witness: Option<RightMostPath>,
}

/// Bracket b(x, y) between the circuit lower bound and a constructive
/// witness, refining to the exact value when the search budget allows.
pub fn b_bracket(config: &Configuration, x: Axial, y: Axial) -> Result<BoundaryBracket> {
    let (ew, dmap) = ext_time_map(config, y);
    let t = dmap[ew.index(x).ok_or(Error::OutOfWindow(x))?];
    let lower = t.saturating_sub(2);
    let sp = RightMostPath::new(shortest_open_path(config, x, y)?, false)?;
    let sp_b = sp.b_count(config)?;
    match b_exact(config, x, y, DEFAULT_B_BUDGET) {
        Ok((b, witness)) => Ok(BoundaryBracket {
            lower,
            upper: b.min(sp_b),
            exact: Some(b),
            witness: Some(witness),
        }),
        Err(Error::BudgetExceeded) => Ok(BoundaryBracket {
            lower,
            upper: sp_b,
            exact: None,
            witness: Some(sp),
        }),
        Err(e) => Err(e),
    }
}

// ---------------------------------------------------------------------------
// Bypass upper bound
// ---------------------------------------------------------------------------

/// Constructive upper bound for b(x̃, ñ) from a box-crossing geodesic.
///
/// Three open crossings (left riser, top lid, right riser) are joined
/// into an open detour γ′ over a minimum-time left-right crossing γ_G
/// of the flat box between the endpoints.  Redeclaring the interior of
/// the used geodesic piece closed, the boundary circuit of its closed
/// cluster inside the enclosed region yields an open right-most path γ̂
/// whose open right boundary lies on the geodesic piece, so
/// b(γ̂) ≤ T(γ_G) − 2 up to the endpoints.  Star-concatenation with
/// shortest open connectors gives the witness from x̃ to ñ.
///
/// Errors name the failed event: crossing existence/connectivity
/// (event A) or connector length (event F); callers resample on those.
pub fn b_upper_bypass(
    config: &Configuration,
    x_t: Axial,
    n_t: Axial,
) -> Result<(u32, RightMostPath)> {
    for v in [x_t, n_t] {
        if !config.is_open(v)? {
            return Err(Error::InvalidArgument("endpoints must be open".into()));
        }
    }
    let a = x_t.embed();
    let b = n_t.embed();
    let d = b - a;
    let w = d.norm();
    if w < 10.0 {
        return Err(Error::InvalidArgument(
            "bypass construction needs endpoint distance >= 10".into(),
        ));
    }
    let th = d.angle();
    let s = w.sqrt();
    let boxed = |x1: f64, x2: f64, y1: f64, y2: f64| {
        TiltedBox::new(
            a + Vec2::new(x1, (y1 + y2) / 2.0).rotate(th),
            x2 - x1,
            (y2 - y1) / 2.0,
            th,
        )
    };
    let event_a = |e: Error| match e {
        Error::EventFailure(_) => Error::EventFailure("open crossing missing (event A)"),
        other => other,
    };
    // Open riser / lid / riser crossings and the flat-box geodesic.
    let b1 = boxed(0.0, s, -s, 3.0 * s);
    let b2 = boxed(0.0, w, 2.0 * s, 3.0 * s);
    let b3 = boxed(w - s, w, -s, 3.0 * s);
    let bg = boxed(0.0, w, -s, s);
    let g1 = open_crossing_path(config, &b1, BoxSide::Bottom, BoxSide::Top).map_err(event_a)?;
    let g2 = open_crossing_path(config, &b2, BoxSide::Left, BoxSide::Right).map_err(event_a)?;
    let g3 = open_crossing_path(config, &b3, BoxSide::Top, BoxSide::Bottom).map_err(event_a)?;
    let (_tg, gg) = min_crossing_path(config, &bg, BoxSide::Left, BoxSide::Right)?;

    // Junctions: last geodesic hit and first lid hit along the left
    // riser; last lid hit and first geodesic hit along the right riser.
    let gg_set: HashSet<Axial> = gg.iter().copied().collect();
    let g2_set: HashSet<Axial> = g2.iter().copied().collect();
    let cross_fail = || Error::EventFailure("crossings do not intersect (event A)");
    let i1 = g1.iter().rposition(|v| gg_set.contains(v)).ok_or_else(cross_fail)?;
    let i2 = (i1..g1.len())
        .find(|&i| g2_set.contains(&g1[i]))
        .ok_or_else(cross_fail)?;
    let j3 = g3.iter().rposition(|v| g2_set.contains(v)).ok_or_else(cross_fail)?;
    let j4 = (j3..g3.len())
        .find(|&j| gg_set.contains(&g3[j]))
        .ok_or_else(cross_fail)?;
    let (a1, a2, a3, a4) = (g1[i1], g1[i2], g3[j3], g3[j4]);
    let k2 = g2.iter().position(|v| *v == a2).unwrap();
    let k3 = g2.iter().position(|v| *v == a3).unwrap();
    let g1i = gg.iter().position(|v| *v == a1).unwrap();
    let g4i = gg.iter().position(|v| *v == a4).unwrap();
    if a1 == a4 || g1i >= g4i {
        return Err(Error::EventFailure("degenerate crossing order (event A)"));
    }

    // The open detour γ′ from a1 to a4: riser piece, lid piece, riser
    // piece, loop-erased to a self-avoiding path.
    let mut walk: Vec<Axial> = g1[i1..=i2].to_vec();
    if k2 <= k3 {
        walk.extend_from_slice(&g2[k2 + 1..=k3]);
    } else {
        walk.extend(g2[k3..k2].iter().rev());
    }
    walk.extend_from_slice(&g3[j3 + 1..=j4]);
    let gp = loop_erase(&walk);
    debug_assert_eq!(gp[0], a1);
    debug_assert_eq!(*gp.last().unwrap(), a4);
    if gp[1..gp.len() - 1].iter().any(|v| gg_set.contains(v)) {
        return Err(Error::EventFailure("detour touches the geodesic (event A)"));
    }

    // Region enclosed by γ″ (the geodesic piece) and γ′.
    let gpp = &gg[g1i..=g4i];
    let interior: Vec<Axial> = gpp[1..gpp.len() - 1].to_vec();
    let gamma_hat = if interior.is_empty() {
        RightMostPath::new(vec![a1, a4], false)?
    } else {
        boundary_arc(config, gpp, &gp, &interior, a1, a4)?
    };

    // Shortest open connectors, then star-concatenation.
    let connector = |from: Axial, to: Axial| -> Result<Vec<Axial>> {
        let p = shortest_open_path(config, from, to)
            .map_err(|_| Error::EventFailure("endpoint cut off from the crossings (event A)"))?;
        if p.len() as f64 > BYPASS_DIST_FACTOR * s + 2.0 {
            return Err(Error::EventFailure("connector too long (event F)"));
        }
        Ok(p)
    };
    let gl = connector(x_t, a1)?;
    let gr = connector(a4, n_t)?;
    let mut gamma = gamma_hat;
    if gl.len() >= 2 {
        gamma = star_concat(&RightMostPath::new(gl, false)?, &gamma)?;
    }
    if gr.len() >= 2 {
        gamma = star_concat(&gamma, &RightMostPath::new(gr, false)?)?;
    }
    debug_assert_eq!(gamma.start(), x_t);
    debug_assert_eq!(gamma.end(), n_t);
    let count = gamma.b_count(config)?;
    Ok((count, gamma))
}

/// Remove loops from a lattice walk, keeping endpoints.
fn loop_erase(walk: &[Axial]) -> Vec<Axial> {
    let mut out: Vec<Axial> = Vec::new();
    let mut pos: std::collections::HashMap<Axial, usize> = std::collections::HashMap::new();
    for &v in walk {
        if let Some(&i) = pos.get(&v) {
            for u in out.drain(i + 1..) {
                pos.remove(&u);
            }
        } else {
            pos.insert(v, out.len());
            out.push(v);
        }
    }
    out
}

/// The open right-most arc from a1 to a4 that hugs the closed cluster
/// of the redeclared geodesic interior on the detour side.
fn boundary_arc(
    config: &Configuration,
    gpp: &[Axial],
    gp: &[Axial],
    interior: &[Axial],
    a1: Axial,
    a4: Axial,
) -> Result<RightMostPath> {
    // The enclosed region D of the circuit γ″ + reverse(γ′): flood the
    // complement of the circuit vertices from outside its bounding box.
    let circuit: HashSet<Axial> = gpp.iter().chain(gp.iter()).copied().collect();
    let (mut x0, mut x1, mut y0, mut y1) = (i32::MAX, i32::MIN, i32::MAX, i32::MIN);
    for v in &circuit {
        x0 = x0.min(v.x);
        x1 = x1.max(v.x);
        y0 = y0.min(v.y);
        y1 = y1.max(v.y);
    }
    let rect = AxialRect::new(x0 - 2, y0 - 2, (x1 - x0 + 5) as usize, (y1 - y0 + 5) as usize);
    let mut outside = vec![false; rect.len()];
    let mut q = VecDeque::new();
    for v in rect.iter() {
        let on_rim = v.x == rect.x0
            || v.x == rect.x0 + rect.nx as i32 - 1
            || v.y == rect.y0
            || v.y == rect.y0 + rect.ny as i32 - 1;
        if on_rim && !circuit.contains(&v) {
            outside[rect.index(v).unwrap()] = true;
            q.push_back(v);
        }
    }
    while let Some(u) = q.pop_front() {
        for v in u.neighbors() {
            let Some(vi) = rect.index(v) else { continue };
            if !outside[vi] && !circuit.contains(&v) {
                outside[vi] = true;
                q.push_back(v);
            }
        }
    }
    let in_d =
        |v: Axial| rect.index(v).map(|i| !outside[i]).unwrap_or(false);

    // K: the closed cluster of the redeclared geodesic interior, inside
    // D, in the modified configuration.
    let int_set: HashSet<Axial> = interior.iter().copied().collect();
    let closed_mod = |v: Axial| int_set.contains(&v) || matches!(config.is_open(v), Ok(false));
    let mut k: HashSet<Axial> = int_set.clone();
    let mut q: VecDeque<Axial> = interior.iter().copied().collect();
    while let Some(u) = q.pop_front() {
        for v in u.neighbors() {
            if in_d(v) && closed_mod(v) && !k.contains(&v) && k.insert(v) {
                q.push_back(v);
            }
        }
    }

    // The clockwise boundary circuit of K walks on its open surround;
    // pick the arc from a1 to a4 that stays in D and is open.
    let circ = path_of_interface(&outer_interface(&Subgraph::new(k.iter().copied()), Orientation::Clockwise)?)?;
    let vs = circ.vertices();
    let m = vs.len() - 1; // drop the duplicate closing vertex
    for i in 0..m {
        if vs[i] != a1 {
            continue;
        }
        for l in 1..=m {
            if vs[(i + l) % m] != a4 {
                continue;
            }
            let arc: Vec<Axial> = (0..=l).map(|t| vs[(i + t) % m]).collect();
            if !arc.iter().all(|v| in_d(*v) && matches!(config.is_open(*v), Ok(true))) {
                continue;
            }
            if let Ok(p) = RightMostPath::new(arc, false) {
                return Ok(p);
            }
        }
    }
    Err(Error::EventFailure("no open boundary arc (event A)"))
}

// ---------------------------------------------------------------------------
// Estimator
// ---------------------------------------------------------------------------

/// A β̂ estimate: the directional sample plus bracket accounting.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BetaSample {
    #[serde(flatten)]
    pub sample: NormSample,
    /// Mean of the per-replica lower bounds, divided by n.
    pub lower_mean: f64,
    /// Mean of the per-replica upper bounds, divided by n.
    pub upper_mean: f64,
    /// Mean bracket width divided by n.
    pub width_mean: f64,
    /// Replicas redrawn after proxy or event failures.
    pub resamples: u32,
}

/// β̂_p(z): mean over replicas of the bracket midpoint of b(0̃, ñz)/n.
///
/// Each replica samples a window around the segment 0 → nz, resolves
/// both endpoints into the spanning open cluster, brackets b between
/// the circuit bound T − 2 and the bypass construction, and reports the
/// midpoint.  Replicas whose proxy or crossing events fail are redrawn
/// from a derived seed (bounded retries).
pub fn beta_estimate(p: f64, z: Vec2, n: u32, reps: u32, seed: u64) -> Result<BetaSample> {
    if !(p > 0.5 && p <= 1.0) {
        return Err(Error::OutOfRange(format!("p = {p} (need 0.5 < p <= 1)")));
    }
    if n < 64 {
        return Err(Error::InvalidArgument("n must be at least 64".into()));
    }
    if reps == 0 {
        return Err(Error::InvalidArgument("reps must be positive".into()));
    }
    let z = z.scale(1.0 / z.norm());
    let pad = DEFAULT_PAD_FACTOR * n as f64;
    let window = TiltedBox::new(Vec2::ZERO, n as f64, 1.0, z.angle()).bounding_rect(pad);
    let target = z.scale(n as f64);
    const MAX_ATTEMPTS: u64 = 16;
    let runs: Vec<Result<(u32, u32, u32)>> = pool::parallel_map(reps, |r| {
        for attempt in 0..MAX_ATTEMPTS {
            let seed_r = if attempt == 0 {
                derive_seed(seed, r as u64)
            } else {
                derive_seed(derive_seed(seed, r as u64), attempt)
            };
            let config = Configuration::sample(window, p, seed_r)?;
            let labels = label_clusters(&config, Color::Open);
            let proxy = match infinite_cluster_proxy(&labels) {
                Ok(l) => l,
                Err(Error::ProxyUndefined(_)) => continue,
                Err(e) => return Err(e),
            };
            let cluster = labels.vertices_of(proxy);
            let x_t = nearest_in_cluster(&cluster, Vec2::ZERO)?;
            let n_t = nearest_in_cluster(&cluster, target)?;
            match b_upper_bypass(&config, x_t, n_t) {
                Ok((upper, _)) => {
                    let lower = first_passage(&config, x_t, n_t)?.time.saturating_sub(2);
                    return Ok((lower, upper, attempt as u32));
                }
                Err(Error::EventFailure(_)) => continue,
                Err(e) => return Err(e),
            }
        }
        Err(Error::ConditioningFailed)
    });
    let mut mids = Vec::with_capacity(reps as usize);
    let (mut lo_sum, mut up_sum, mut resamples) = (0.0, 0.0, 0u32);
    for r in runs {
        let (lower, upper, attempts) = r?;
        mids.push((lower as f64 + upper as f64) / 2.0 / n as f64);
        lo_sum += lower as f64;
        up_sum += upper as f64;
        resamples += attempts;
    }
    let est = Estimate::from_samples(&mids);
    let scale = 1.0 / (reps as f64 * n as f64);
    Ok(BetaSample {
        sample: NormSample {
            theta: z.angle(),
            z,
            n,
            reps,
            mean: est.mean,
            stderr: est.stderr,
            seed,
        },
        lower_mean: lo_sum * scale,
        upper_mean: up_sum * scale,
        width_mean: (up_sum - lo_sum) * scale,
        resamples,
    })
}
