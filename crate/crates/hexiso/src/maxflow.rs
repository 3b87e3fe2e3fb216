//! Dinic max-flow on small unit-capacity networks.
//!
//! Used for counting vertex-disjoint crossings (Menger): vertices are
//! split into in/out nodes with unit capacity by the caller.

#[derive(Debug, Clone)]
struct Edge {
    to: usize,
    cap: u32,
}

/// A flow network under construction; capacities are consumed by
/// [`Dinic::max_flow`].
#[derive(Debug, Default)]
pub struct Dinic {
    adj: Vec<Vec<usize>>,
    edges: Vec<Edge>,
}

impl Dinic {
    pub fn new() -> Self {
        Dinic::default()
    }

    pub fn add_node(&mut self) -> usize {
        self.adj.push(Vec::new());
        self.adj.len() - 1
    }

    /// Directed edge with the implicit zero-capacity reverse edge.
    pub fn add_edge(&mut self, from: usize, to: usize, cap: u32) {
        self.adj[from].push(self.edges.len());
        self.edges.push(Edge { to, cap });
        self.adj[to].push(self.edges.len());
        self.edges.push(Edge { to: from, cap: 0 });
    }

    pub fn max_flow(&mut self, s: usize, t: usize) -> u32 {
        let mut flow = 0;
        loop {
            let level = self.bfs_levels(s);
            if level[t] == usize::MAX {
                return flow;
            }
            let mut iter = vec![0usize; self.adj.len()];
            loop {
                let pushed = self.dfs(s, t, u32::MAX, &level, &mut iter);
                if pushed == 0 {
                    break;
                }
                flow += pushed;
            }
        }
    }

    fn bfs_levels(&self, s: usize) -> Vec<usize> {
        let mut level = vec![usize::MAX; self.adj.len()];
        level[s] = 0;
        let mut q = std::collections::VecDeque::from([s]);
        while let Some(u) = q.pop_front() {
            for &ei in &self.adj[u] {
                let e = &self.edges[ei];
                if e.cap > 0 && level[e.to] == usize::MAX {
                    level[e.to] = level[u] + 1;
                    q.push_back(e.to);
                }
            }
        }
        level
    }

    fn dfs(
        &mut self,
        u: usize,
        t: usize,
        limit: u32,
        level: &[usize],
        iter: &mut [usize],
    ) -> u32 {
        if u == t {
            return limit;
        }
        while iter[u] < self.adj[u].len() {
            let ei = self.adj[u][iter[u]];
            let (to, cap) = (self.edges[ei].to, self.edges[ei].cap);
            if cap > 0 && level[to] == level[u] + 1 {
                let pushed = self.dfs(to, t, limit.min(cap), level, iter);
                if pushed > 0 {
                    self.edges[ei].cap -= pushed;
                    self.edges[ei ^ 1].cap += pushed;
                    return pushed;
                }
            }
            iter[u] += 1;
        }
        0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_diamond() {
        // s -> a,b -> t: two disjoint unit paths.
        let mut d = Dinic::new();
        let nodes: Vec<usize> = (0..4).map(|_| d.add_node()).collect();
        let (s, a, b, t) = (nodes[0], nodes[1], nodes[2], nodes[3]);
        d.add_edge(s, a, 1);
        d.add_edge(s, b, 1);
        d.add_edge(a, t, 1);
        d.add_edge(b, t, 1);
        assert_eq!(d.max_flow(s, t), 2);
    }

    #[test]
    fn bottleneck() {
        // Everything funnels through one unit edge.
        let mut d = Dinic::new();
        let n: Vec<usize> = (0..5).map(|_| d.add_node()).collect();
        d.add_edge(n[0], n[1], 3);
        d.add_edge(n[0], n[2], 3);
        d.add_edge(n[1], n[3], 1);
        d.add_edge(n[2], n[3], 1);
        d.add_edge(n[3], n[4], 1);
        assert_eq!(d.max_flow(n[0], n[4]), 1);
    }

    #[test]
    fn disconnected_is_zero() {
        let mut d = Dinic::new();
        let s = d.add_node();
        let t = d.add_node();
        assert_eq!(d.max_flow(s, t), 0);
    }
}
