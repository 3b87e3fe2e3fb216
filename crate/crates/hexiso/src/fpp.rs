//! Bernoulli first-passage percolation.
//!
//! Vertex weights ω(v) ∈ {0, 1} (open vertices cost 1), passage times
//! T(γ) = Σ_{v∈γ} ω(v) with endpoints included, first-passage times,
//! growth balls B(t), box-crossing times, the disjoint-crossing count τ
//! (a max flow by Menger's theorem), separating-circuit counts N, and
//! Monte Carlo estimation of the time constant μ_p.

use std::collections::{BTreeSet, VecDeque};

use serde::{Deserialize, Serialize};

use crate::lattice::{snap_planar, Axial, AxialRect, BoxSide, TiltedBox, Vec2};
use crate::maxflow::Dinic;
use crate::percolation::{derive_seed, Color, Configuration, DEFAULT_PAD_FACTOR};
use crate::pool;
use crate::{Error, Result};

// ---------------------------------------------------------------------------
// Passage time of a given path
// ---------------------------------------------------------------------------

/// Reading of Σ_{v∈γ} ω(v) when a path repeats a vertex.
///
/// Geodesics never repeat vertices, so the minimum is the same either
/// way; the set reading (count each visited vertex once) is the default.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SumMode {
    #[default]
    Set,
    Multiset,
}

/// T(γ) for an explicit vertex sequence.
pub fn passage_time(path: &[Axial], config: &Configuration, mode: SumMode) -> Result<u32> {
    match mode {
        SumMode::Multiset => {
            let mut t = 0;
            for v in path {
                t += config.weight(*v)?;
            }
            Ok(t)
        }
        SumMode::Set => {
            let distinct: BTreeSet<Axial> = path.iter().copied().collect();
            let mut t = 0;
            for v in distinct {
                t += config.weight(v)?;
            }
            Ok(t)
        }
    }
}

// ---------------------------------------------------------------------------
// First-passage search
// ---------------------------------------------------------------------------

/// An optimal passage between two vertices.
#[derive(Debug, Clone)]
pub struct PassageResult {
    /// T(x, y).
    pub time: u32,
    /// A path realizing the minimum, from x to y.
    pub geodesic: Vec<Axial>,
    /// Vertices settled by the search (performance regression metric).
    pub explored: usize,
}

/// T(x, y) with a geodesic, by 0/1 shortest path over the window.
///
/// The deque discipline: zero-weight relaxations go to the front,
/// unit-weight ones to the back, so the queue stays monotone.
pub fn first_passage(config: &Configuration, x: Axial, y: Axial) -> Result<PassageResult> {
    let w = config.window;
    let xi = w.index(x).ok_or(Error::OutOfWindow(x))?;
    let yi = w.index(y).ok_or(Error::OutOfWindow(y))?;
    let mut dist = vec![u32::MAX; w.len()];
    let mut parent = vec![usize::MAX; w.len()];
    let mut settled = vec![false; w.len()];
    let mut q: VecDeque<usize> = VecDeque::new();
    dist[xi] = config.weight(x)?;
    q.push_back(xi);
    let mut explored = 0;
    while let Some(ui) = q.pop_front() {
        if settled[ui] {
            continue;
        }
        settled[ui] = true;
        explored += 1;
        if ui == yi {
            break;
        }
        let u = w.vertex_at(ui);
        for v in u.neighbors() {
            let Some(vi) = w.index(v) else { continue };
            if settled[vi] {
                continue;
            }
            let step = config.weight(v)?;
            let nd = dist[ui] + step;
            if nd < dist[vi] {
                dist[vi] = nd;
                parent[vi] = ui;
                if step == 0 {
                    q.push_front(vi);
                } else {
                    q.push_back(vi);
                }
            }
        }
    }
    debug_assert!(settled[yi], "window is connected");
    let mut geodesic = vec![y];
    let mut cur = yi;
    while cur != xi {
        cur = parent[cur];
        geodesic.push(w.vertex_at(cur));
    }
    geodesic.reverse();
    Ok(PassageResult {
        time: dist[yi],
        geodesic,
        explored,
    })
}

/// The growth ball B(t) ∩ window around an origin vertex.
#[derive(Debug, Clone)]
pub struct Ball {
    pub vertices: BTreeSet<Axial>,
    /// True when the ball reaches the window rim, i.e. the window clips
    /// the true ball.
    pub truncated: bool,
}

/// All vertices with T(origin, ·) ≤ t.
pub fn fpp_ball(config: &Configuration, origin: Axial, t: u32) -> Result<Ball> {
    let w = config.window;
    let oi = w.index(origin).ok_or(Error::OutOfWindow(origin))?;
    let mut dist = vec![u32::MAX; w.len()];
    let mut q: VecDeque<usize> = VecDeque::new();
    dist[oi] = config.weight(origin)?;
    if dist[oi] <= t {
        q.push_back(oi);
    }
    let mut ball = BTreeSet::new();
    let mut truncated = false;
    let rim = |v: Axial| {
        v.x == w.x0
            || v.x == w.x0 + w.nx as i32 - 1
            || v.y == w.y0
            || v.y == w.y0 + w.ny as i32 - 1
    };
    let mut settled = vec![false; w.len()];
    while let Some(ui) = q.pop_front() {
        if settled[ui] {
            continue;
        }
        settled[ui] = true;
        let u = w.vertex_at(ui);
        ball.insert(u);
        truncated |= rim(u);
        for v in u.neighbors() {
            let Some(vi) = w.index(v) else { continue };
            if settled[vi] {
                continue;
            }
            let step = config.weight(v)?;
            let nd = dist[ui] + step;
            if nd < dist[vi] && nd <= t {
                dist[vi] = nd;
                if step == 0 {
                    q.push_front(vi);
                } else {
                    q.push_back(vi);
                }
            }
        }
    }
    Ok(Ball {
        vertices: ball,
        truncated,
    })
}

// ---------------------------------------------------------------------------
// Box-crossing time and disjoint crossings
// ---------------------------------------------------------------------------

fn crossing_collar(config: &Configuration, bx: &TiltedBox) -> Result<AxialRect> {
    let collar = bx.bounding_rect(1.5);
    for v in [
        Axial::new(collar.x0, collar.y0),
        Axial::new(collar.x0 + collar.nx as i32 - 1, collar.y0 + collar.ny as i32 - 1),
    ] {
        if !config.window.contains(v) {
            return Err(Error::InsufficientMargin);
        }
    }
    Ok(collar)
}

/// The box Λ^{arg x}_{‖x‖₂, h}: `e^{i·arg x}([0,‖x‖]×[−h,h])`.
pub fn cylinder_box(x: Vec2, h: f64) -> TiltedBox {
    TiltedBox::new(Vec2::ZERO, x.norm(), h, x.angle())
}

/// T(0, x; h): the minimum passage time over left-right crossings of
/// the tilted box Λ^{arg x}_{‖x‖₂, h}.
pub fn box_crossing_time(config: &Configuration, x: Vec2, h: f64) -> Result<u32> {
    min_crossing_time(config, &cylinder_box(x, h), BoxSide::Left, BoxSide::Right)
}

/// Minimum passage time over side-a → side-b crossings of a box.
pub fn min_crossing_time(
    config: &Configuration,
    bx: &TiltedBox,
    side_a: BoxSide,
    side_b: BoxSide,
) -> Result<u32> {
    crossing_search(config, bx, side_a, side_b, None).map(|r| r.0)
}

/// Minimum passage time with a witness crossing path (endpoints
/// included, self-avoiding).
pub fn min_crossing_path(
    config: &Configuration,
    bx: &TiltedBox,
    side_a: BoxSide,
    side_b: BoxSide,
) -> Result<(u32, Vec<Axial>)> {
    crossing_search(config, bx, side_a, side_b, None)
}

/// A crossing whose vertices are all open, or an event failure when
/// none exists.  The choice is deterministic (a shortest one).
pub fn open_crossing_path(
    config: &Configuration,
    bx: &TiltedBox,
    side_a: BoxSide,
    side_b: BoxSide,
) -> Result<Vec<Axial>> {
    crossing_search(config, bx, side_a, side_b, Some(Color::Open))
        .map(|r| r.1)
        .map_err(|e| match e {
            Error::EventFailure(_) => Error::EventFailure("no open crossing of the box exists"),
            other => other,
        })
}

/// Whether a crossing of the box by vertices all closed exists.
pub fn closed_crossing_exists(
    config: &Configuration,
    bx: &TiltedBox,
    side_a: BoxSide,
    side_b: BoxSide,
) -> Result<bool> {
    match crossing_search(config, bx, side_a, side_b, Some(Color::Closed)) {
        Ok(_) => Ok(true),
        Err(Error::EventFailure(_)) => Ok(false),
        Err(e) => Err(e),
    }
}

fn crossing_search(
    config: &Configuration,
    bx: &TiltedBox,
    side_a: BoxSide,
    side_b: BoxSide,
    require: Option<Color>,
) -> Result<(u32, Vec<Axial>)> {
    let collar = crossing_collar(config, bx)?;
    let inside = |v: Axial| bx.contains(v.embed());
    let crosses =
        |u: Axial, v: Axial, s: BoxSide| bx.segment_crosses_side(u.embed(), v.embed(), s);
    let usable = |v: Axial| -> Result<bool> {
        Ok(match require {
            None => true,
            Some(Color::Open) => config.is_open(v)?,
            Some(Color::Closed) => !config.is_open(v)?,
        })
    };
    let mut best = u32::MAX;
    let mut best_single: Option<(Axial, Axial)> = None;

    // Single-edge crossings (no interior vertex).
    for u in collar.iter() {
        for d in crate::lattice::Direction::ALL {
            let v = u.step(d);
            if collar.contains(v)
                && usable(u)?
                && usable(v)?
                && crosses(u, v, side_a)
                && crosses(u, v, side_b)
            {
                let c = config.weight(u)? + config.weight(v)?;
                if c < best {
                    best = c;
                    best_single = Some((u, v));
                }
            }
        }
    }

    // Dijkstra over in-box vertices; sources are entry pairs, sinks exit
    // pairs.  Weights are 0/1 but the multi-source initialization is not
    // monotone, so a heap is used rather than the deque.
    let mut dist = vec![u32::MAX; collar.len()];
    let mut parent = vec![usize::MAX; collar.len()];
    let mut entry = vec![Axial::ORIGIN; collar.len()];
    let mut heap: std::collections::BinaryHeap<std::cmp::Reverse<(u32, usize)>> =
        std::collections::BinaryHeap::new();
    for v in collar.iter() {
        if !inside(v) || !usable(v)? {
            continue;
        }
        let mut init = u32::MAX;
        let mut part = None;
        for u in v.neighbors() {
            if collar.contains(u) && usable(u)? && crosses(u, v, side_a) {
                let c = config.weight(u)? + config.weight(v)?;
                if c < init {
                    init = c;
                    part = Some(u);
                }
            }
        }
        if let Some(u) = part {
            let i = collar.index(v).unwrap();
            dist[i] = init;
            entry[i] = u;
            heap.push(std::cmp::Reverse((init, i)));
        }
    }
    let mut best_exit: Option<(usize, Axial)> = None;
    while let Some(std::cmp::Reverse((d, ui))) = heap.pop() {
        if d > dist[ui] {
            continue;
        }
        let u = collar.vertex_at(ui);
        for v in u.neighbors() {
            if !collar.contains(v) || !usable(v)? {
                continue;
            }
            if crosses(u, v, side_b) && d + config.weight(v)? < best {
                best = d + config.weight(v)?;
                best_exit = Some((ui, v));
                best_single = None;
            }
            if inside(v) {
                let vi = collar.index(v).unwrap();
                let nd = d + config.weight(v)?;
                if nd < dist[vi] {
                    dist[vi] = nd;
                    parent[vi] = ui;
                    entry[vi] = entry[ui];
                    heap.push(std::cmp::Reverse((nd, vi)));
                }
            }
        }
    }

    if let Some((u, v)) = best_single {
        return Ok((best, vec![u, v]));
    }
    let Some((last, exit_v)) = best_exit else {
        return Err(Error::EventFailure("no crossing of the box exists"));
    };
    // Chain from the last interior vertex back to the entry source.
    let mut chain = vec![collar.vertex_at(last)];
    let mut cur = last;
    while parent[cur] != usize::MAX {
        cur = parent[cur];
        chain.push(collar.vertex_at(cur));
    }
    chain.reverse();
    let src = cur;
    // Attach the outer endpoints, keeping the path self-avoiding.  The
    // recorded partner almost always works; otherwise any partner of
    // equal weight off the chain does.
    let on_chain: std::collections::HashSet<Axial> = chain.iter().copied().collect();
    let pick = |recorded: Axial, anchor: Axial, side: BoxSide, avoid: Option<Axial>| -> Result<Axial> {
        if !on_chain.contains(&recorded) && avoid != Some(recorded) {
            return Ok(recorded);
        }
        for u in anchor.neighbors() {
            if collar.contains(u)
                && usable(u)?
                && !on_chain.contains(&u)
                && avoid != Some(u)
                && crosses(u, anchor, side)
                && config.weight(u)? == config.weight(recorded)?
            {
                return Ok(u);
            }
        }
        Err(Error::EventFailure("crossing witness is not self-avoiding"))
    };
    let v0 = pick(entry[src], chain[0], side_a, None)?;
    let vk = pick(exit_v, *chain.last().unwrap(), side_b, Some(v0))?;
    let mut path = vec![v0];
    path.extend(chain);
    path.push(vk);
    Ok((best, path))
}

/// τ: the maximum number of vertex-disjoint open top-bottom crossings
/// of the box, as a unit-vertex-capacity max flow (Menger).
pub fn disjoint_crossings(config: &Configuration, bx: &TiltedBox) -> Result<u32> {
    let collar = crossing_collar(config, bx)?;
    let inside = |v: Axial| bx.contains(v.embed());
    let crosses =
        |u: Axial, v: Axial, s: BoxSide| bx.segment_crosses_side(u.embed(), v.embed(), s);
    let (side_a, side_b) = (BoxSide::Top, BoxSide::Bottom);

    // Split every open collar vertex into in/out nodes of capacity 1.
    let mut net = Dinic::new();
    let s = net.add_node();
    let t = net.add_node();
    let mut node_in = vec![usize::MAX; collar.len()];
    let mut node_out = vec![usize::MAX; collar.len()];
    for v in collar.iter() {
        if config.is_open(v)? {
            let i = collar.index(v).unwrap();
            node_in[i] = net.add_node();
            node_out[i] = net.add_node();
            net.add_edge(node_in[i], node_out[i], 1);
        }
    }
    let idx = |v: Axial| collar.index(v);
    for v in collar.iter() {
        let Some(vi) = idx(v) else { continue };
        if node_in[vi] == usize::MAX {
            continue;
        }
        for u in v.neighbors() {
            let Some(ui) = idx(u) else { continue };
            if node_in[ui] == usize::MAX {
                continue;
            }
            // Generic path step: both interior vertices inside the box.
            if inside(v) && inside(u) {
                net.add_edge(node_out[vi], node_in[ui], 1);
            }
            // Entry: v plays v₀ with first segment through side a; u is
            // the first interior vertex.
            if inside(u) && crosses(v, u, side_a) {
                net.add_edge(s, node_in[vi], 1);
                net.add_edge(node_out[vi], node_in[ui], 1);
            }
            // Exit: v is the last interior vertex, u the endpoint past
            // side b.
            if inside(v) && crosses(v, u, side_b) {
                net.add_edge(node_out[vi], node_in[ui], 1);
                net.add_edge(node_out[ui], t, 1);
            }
            // Single-edge crossing: v₀ = v, v₁ = u, no interior.
            if crosses(v, u, side_a) && crosses(v, u, side_b) {
                net.add_edge(s, node_in[vi], 1);
                net.add_edge(node_out[vi], node_in[ui], 1);
                net.add_edge(node_out[ui], t, 1);
            }
        }
    }
    Ok(net.max_flow(s, t))
}

// ---------------------------------------------------------------------------
// Separating circuits
// ---------------------------------------------------------------------------

/// N(u, v): the maximal number of disjoint open Jordan circuits
/// separating u from v.
///
/// Computed as the first-passage time T(u, v) on the configuration with
/// u and v forced closed: separating circuits avoid both endpoints, and
/// with closed endpoints the circuit count and the passage time agree.
pub fn separating_circuits(config: &Configuration, u: Axial, v: Axial) -> Result<u32> {
    if u == v {
        return Err(Error::InvalidArgument("endpoints must differ".into()));
    }
    let forced = config.with_state(u, false)?.with_state(v, false)?;
    Ok(first_passage(&forced, u, v)?.time)
}

/// Independent peeling oracle for N(u, v).
///
/// Repeatedly takes the closed cluster of u (endpoints forced closed),
/// checks that it is surrounded and that v stays outside the open layer
/// around it, then counts one circuit and closes the whole layer.
///
/// Boundary convention: vertices beyond the configuration window count
/// as open, so layers that leave the window close up through the open
/// sea outside.  This is the convention under which the circuit count
/// matches the forced-closed passage time exactly on finite windows.
pub fn separating_circuits_peeled(config: &Configuration, u: Axial, v: Axial) -> Result<u32> {
    if u == v {
        return Err(Error::InvalidArgument("endpoints must differ".into()));
    }
    let win = config.window;
    if !win.contains(u) {
        return Err(Error::OutOfWindow(u));
    }
    if !win.contains(v) {
        return Err(Error::OutOfWindow(v));
    }
    // Extended frame: the sea of virtual open vertices must be wide
    // enough for every peeled layer to close up outside the window.
    let margin = (win.nx + win.ny) as i32;
    let w = AxialRect::new(
        win.x0 - margin,
        win.y0 - margin,
        win.nx + 2 * margin as usize,
        win.ny + 2 * margin as usize,
    );
    let mut open: Vec<bool> = w
        .iter()
        .map(|x| {
            if win.contains(x) {
                config.is_open(x).unwrap()
            } else {
                true
            }
        })
        .collect();
    open[w.index(u).unwrap()] = false;
    open[w.index(v).unwrap()] = false;
    let rim = |x: Axial| {
        x.x == w.x0
            || x.x == w.x0 + w.nx as i32 - 1
            || x.y == w.y0
            || x.y == w.y0 + w.ny as i32 - 1
    };
    let mut count = 0;
    loop {
        // Closed cluster of u (bounded: the sea outside is open).
        let mut in_a = vec![false; w.len()];
        let ui = w.index(u).unwrap();
        in_a[ui] = true;
        let mut q = VecDeque::from([u]);
        while let Some(x) = q.pop_front() {
            for y in x.neighbors() {
                let Some(yi) = w.index(y) else { continue };
                if !open[yi] && !in_a[yi] {
                    in_a[yi] = true;
                    q.push_back(y);
                }
            }
        }
        // Fill the holes of A: flood the complement from the rim.  If v
        // lands in A or one of its holes, every remaining open circuit
        // around the cluster would keep u and v on the same side (and
        // circuits around v are ruled out the same way), so peeling
        // stops.
        let mut reach = vec![false; w.len()];
        let mut q = VecDeque::new();
        for x in w.iter() {
            let xi = w.index(x).unwrap();
            if rim(x) && !in_a[xi] {
                reach[xi] = true;
                q.push_back(x);
            }
        }
        while let Some(x) = q.pop_front() {
            for y in x.neighbors() {
                let Some(yi) = w.index(y) else { continue };
                if !reach[yi] && !in_a[yi] {
                    reach[yi] = true;
                    q.push_back(y);
                }
            }
        }
        if !reach[w.index(v).unwrap()] {
            return Ok(count);
        }
        // One separating circuit lives in the open layer around the
        // filled cluster (possibly rerouted around pockets or around v's
        // lobe); peel the whole layer.
        count += 1;
        let mut peeled = 0;
        for x in w.iter() {
            let xi = w.index(x).unwrap();
            if in_a[xi] {
                for y in x.neighbors() {
                    let Some(yi) = w.index(y) else { continue };
                    if !in_a[yi] && reach[yi] && open[yi] {
                        open[yi] = false;
                        peeled += 1;
                    }
                }
            }
        }
        debug_assert!(peeled > 0, "a bounded closed cluster has open neighbors");
    }
}

// ---------------------------------------------------------------------------
// Time-constant estimation
// ---------------------------------------------------------------------------

/// A Monte Carlo estimate of a directional norm value.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NormSample {
    pub theta: f64,
    pub z: Vec2,
    pub n: u32,
    pub reps: u32,
    pub mean: f64,
    pub stderr: f64,
    pub seed: u64,
}

/// μ̂_p(z): mean of T(0, nz)/n over independent replicas.
pub fn mu_estimate(p: f64, z: Vec2, n: u32, reps: u32, seed: u64) -> Result<NormSample> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::OutOfRange(format!("p = {p}")));
    }
    if n == 0 || reps == 0 {
        return Err(Error::InvalidArgument("n and reps must be positive".into()));
    }
    let z = z.scale(1.0 / z.norm());
    let target_planar = z.scale(n as f64);
    let pad = DEFAULT_PAD_FACTOR * n as f64;
    let window = TiltedBox::new(Vec2::ZERO, n as f64, 1.0, z.angle())
        .bounding_rect(pad);
    let origin = Axial::ORIGIN;
    let target = snap_planar(target_planar);
    debug_assert!(window.contains(origin) && window.contains(target));
    let times: Vec<Result<u32>> = pool::parallel_map(reps, |r| {
        let c = Configuration::sample(window, p, derive_seed(seed, r as u64))?;
        Ok(first_passage(&c, origin, target)?.time)
    });
    let mut samples = Vec::with_capacity(reps as usize);
    for t in times {
        samples.push(t? as f64 / n as f64);
    }
    let est = crate::percolation::Estimate::from_samples(&samples);
    Ok(NormSample {
        theta: z.angle(),
        z,
        n,
        reps,
        mean: est.mean,
        stderr: est.stderr,
        seed,
    })
}
