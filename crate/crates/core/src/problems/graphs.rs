//! Graph instances for the bisection problem and their generators.

use super::ProblemError;

/// An undirected graph on an even number of nodes. Instances are immutable
/// once constructed and validated: no self-loops, no duplicate edges,
/// connected.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GraphInstance {
    node_count: usize,
    edges: Vec<(u32, u32)>,
}

impl GraphInstance {
    pub fn new(node_count: usize, edges: Vec<(u32, u32)>) -> Result<Self, ProblemError> {
        if node_count == 0 || node_count % 2 != 0 {
            return Err(ProblemError::Config(format!(
                "bisection graph needs an even, positive node count, got {node_count}"
            )));
        }
        let mut normalized = Vec::with_capacity(edges.len());
        let mut seen = std::collections::BTreeSet::new();
        for &(u, v) in &edges {
            if u as usize >= node_count || v as usize >= node_count {
                return Err(ProblemError::Config(format!(
                    "edge ({u}, {v}) references a node outside 0..{node_count}"
                )));
            }
            if u == v {
                return Err(ProblemError::Config(format!("self-loop at node {u}")));
            }
            let key = (u.min(v), u.max(v));
            if !seen.insert(key) {
                return Err(ProblemError::Config(format!("duplicate edge ({u}, {v})")));
            }
            normalized.push(key);
        }
        let g = GraphInstance {
            node_count,
            edges: normalized,
        };
        if !g.is_connected() {
            return Err(ProblemError::Config("graph is not connected".into()));
        }
        Ok(g)
    }

    pub fn node_count(&self) -> usize {
        self.node_count
    }

    pub fn edges(&self) -> &[(u32, u32)] {
        &self.edges
    }

    fn is_connected(&self) -> bool {
        if self.node_count == 0 {
            return false;
        }
        let mut adj = vec![Vec::new(); self.node_count];
        for &(u, v) in &self.edges {
            adj[u as usize].push(v as usize);
            adj[v as usize].push(u as usize);
        }
        let mut seen = vec![false; self.node_count];
        let mut stack = vec![0usize];
        seen[0] = true;
        let mut count = 1;
        while let Some(u) = stack.pop() {
            for &v in &adj[u] {
                if !seen[v] {
                    seen[v] = true;
                    count += 1;
                    stack.push(v);
                }
            }
        }
        count == self.node_count
    }

    /// Serializes to the edge-list text format: a `nodes N` header followed
    /// by one `u v` pair per line.
    pub fn to_edge_list(&self) -> String {
        let mut out = format!("nodes {}\n", self.node_count);
        for &(u, v) in &self.edges {
            out.push_str(&format!("{u} {v}\n"));
        }
        out
    }

    pub fn from_edge_list(text: &str) -> Result<Self, ProblemError> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header = lines
            .next()
            .ok_or_else(|| ProblemError::Config("empty edge list".into()))?;
        let node_count = header
            .strip_prefix("nodes ")
            .and_then(|s| s.trim().parse::<usize>().ok())
            .ok_or_else(|| ProblemError::Config(format!("bad header line {header:?}")))?;
        let mut edges = Vec::new();
        for line in lines {
            let mut parts = line.split_whitespace();
            let u = parts.next().and_then(|s| s.parse::<u32>().ok());
            let v = parts.next().and_then(|s| s.parse::<u32>().ok());
            match (u, v) {
                (Some(u), Some(v)) if parts.next().is_none() => edges.push((u, v)),
                _ => return Err(ProblemError::Config(format!("bad edge line {line:?}"))),
            }
        }
        GraphInstance::new(node_count, edges)
    }
}

/// A `width` x `height` four-neighbour lattice, nodes indexed row-major.
pub fn make_rect_grid_graph(width: usize, height: usize) -> Result<GraphInstance, ProblemError> {
    let nodes = width * height;
    if width == 0 || height == 0 || nodes % 2 != 0 {
        return Err(ProblemError::Config(format!(
            "grid {width}x{height} must be non-empty with an even node count"
        )));
    }
    let idx = |r: usize, c: usize| (r * width + c) as u32;
    let mut edges = Vec::new();
    for r in 0..height {
        for c in 0..width {
            if c + 1 < width {
                edges.push((idx(r, c), idx(r, c + 1)));
            }
            if r + 1 < height {
                edges.push((idx(r, c), idx(r + 1, c)));
            }
        }
    }
    GraphInstance::new(nodes, edges)
}

/// A square `side` x `side` lattice.
pub fn make_grid_graph(side: usize) -> Result<GraphInstance, ProblemError> {
    if side < 2 {
        return Err(ProblemError::Config(format!("grid side {side} must be >= 2")));
    }
    make_rect_grid_graph(side, side)
}

/// A caterpillar of `group_count` star-shaped groups: each group is one
/// spine node with `group_size - 1` leaves, and the spine nodes form a path
/// (`ring = false`) or a cycle (`ring = true`). Node `g * group_size` is
/// group `g`'s spine.
pub fn make_caterpillar_graph(
    group_count: usize,
    group_size: usize,
    ring: bool,
) -> Result<GraphInstance, ProblemError> {
    if group_count < 2 || group_size < 1 {
        return Err(ProblemError::Config(format!(
            "caterpillar needs group_count >= 2 and group_size >= 1, got {group_count}, {group_size}"
        )));
    }
    let nodes = group_count * group_size;
    if nodes % 2 != 0 {
        return Err(ProblemError::Config(format!(
            "caterpillar with {nodes} nodes cannot be bisected evenly"
        )));
    }
    let spine = |g: usize| (g * group_size) as u32;
    let mut edges = Vec::new();
    for g in 0..group_count {
        for leaf in 1..group_size {
            edges.push((spine(g), (g * group_size + leaf) as u32));
        }
    }
    for g in 0..group_count - 1 {
        edges.push((spine(g), spine(g + 1)));
    }
    // group_count == 2 would duplicate the single spine edge
    if ring && group_count > 2 {
        edges.push((spine(group_count - 1), spine(0)));
    }
    GraphInstance::new(nodes, edges)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn square_grid_node_and_edge_counts() {
        for (side, nodes, edges) in [(2, 4, 4), (4, 16, 24), (6, 36, 60)] {
            let g = make_grid_graph(side).unwrap();
            assert_eq!(g.node_count(), nodes);
            assert_eq!(g.edges().len(), edges);
        }
    }

    #[test]
    fn odd_square_grid_rejected() {
        assert!(make_grid_graph(3).is_err());
        assert!(make_grid_graph(1).is_err());
    }

    #[test]
    fn rect_grid_edge_count() {
        // w*h nodes, (w-1)*h + w*(h-1) edges
        let g = make_rect_grid_graph(8, 2).unwrap();
        assert_eq!(g.node_count(), 16);
        assert_eq!(g.edges().len(), 7 * 2 + 8);
    }

    #[test]
    fn caterpillar_counts() {
        let path = make_caterpillar_graph(4, 7, false).unwrap();
        assert_eq!(path.node_count(), 28);
        assert_eq!(path.edges().len(), 27);

        let ring = make_caterpillar_graph(4, 7, true).unwrap();
        assert_eq!(ring.node_count(), 28);
        assert_eq!(ring.edges().len(), 28);

        let tiny = make_caterpillar_graph(2, 1, false).unwrap();
        assert_eq!(tiny.node_count(), 2);
        assert_eq!(tiny.edges().len(), 1);
    }

    #[test]
    fn rejects_duplicate_and_self_edges() {
        assert!(GraphInstance::new(4, vec![(0, 1), (1, 0), (1, 2), (2, 3)]).is_err());
        assert!(GraphInstance::new(4, vec![(0, 0), (0, 1), (1, 2), (2, 3)]).is_err());
        assert!(GraphInstance::new(4, vec![(0, 1), (2, 3)]).is_err()); // disconnected
        assert!(GraphInstance::new(5, vec![(0, 1), (1, 2), (2, 3), (3, 4)]).is_err()); // odd
    }

    #[test]
    fn edge_list_roundtrip() {
        let g = make_caterpillar_graph(4, 7, true).unwrap();
        let text = g.to_edge_list();
        assert!(text.starts_with("nodes 28\n"));
        let back = GraphInstance::from_edge_list(&text).unwrap();
        assert_eq!(back, g);
    }
}
