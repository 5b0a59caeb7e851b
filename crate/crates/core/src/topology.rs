//! Random geometric graphs in the unit square and greedy geographic routing.

use std::collections::VecDeque;
use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{self, Purpose};

pub type NodeId = usize;

/// A location in the unit square.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }

    pub fn dist2(&self, other: &Point) -> f64 {
        let dx = self.x - other.x;
        let dy = self.y - other.y;
        dx * dx + dy * dy
    }

    pub fn dist(&self, other: &Point) -> f64 {
        self.dist2(other).sqrt()
    }

    pub fn in_unit_square(&self) -> bool {
        (0.0..=1.0).contains(&self.x) && (0.0..=1.0).contains(&self.y)
    }

    pub fn random<R: Rng + ?Sized>(rng: &mut R) -> Self {
        Point::new(rng.random::<f64>(), rng.random::<f64>())
    }
}

/// Connectivity radius `sqrt(c ln n / n)`, capped at the diagonal of the
/// unit square.
pub fn radius_for(n: usize, c: f64) -> f64 {
    if n < 2 {
        return 0.0;
    }
    let n = n as f64;
    (c * n.ln() / n).sqrt().min(std::f64::consts::SQRT_2)
}

/// Greedy route: the ordered list of nodes a message visits.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RoutePath {
    pub hops: Vec<NodeId>,
    /// True when greedy forwarding got stuck and the tail was completed with
    /// a shortest-hop detour (only used when addressing a specific node).
    #[serde(default)]
    pub recovered: bool,
}

impl RoutePath {
    pub fn hop_count(&self) -> usize {
        self.hops.len().saturating_sub(1)
    }

    pub fn source(&self) -> NodeId {
        self.hops[0]
    }

    pub fn destination(&self) -> NodeId {
        *self.hops.last().expect("route has at least the source")
    }

    pub fn reversed(&self) -> RoutePath {
        RoutePath {
            hops: self.hops.iter().rev().copied().collect(),
            recovered: self.recovered,
        }
    }
}

/// Nodes placed in the unit square, connected when within `radius`.
#[derive(Debug, Clone, PartialEq)]
pub struct GeoGraph {
    pub n: usize,
    pub c: f64,
    pub radius: f64,
    pub seed: u64,
    pub coords: Vec<Point>,
    pub adjacency: Vec<Vec<NodeId>>,
}

#[derive(Debug, Serialize, Deserialize)]
struct GraphFile {
    n: usize,
    c: f64,
    radius: f64,
    seed: u64,
    coords: Vec<[f64; 2]>,
}

impl GeoGraph {
    /// Places `n` nodes uniformly at random and connects them at radius
    /// `sqrt(c ln n / n)`. Identical arguments give identical graphs.
    pub fn generate(n: usize, c: f64, seed: u64) -> Result<Self> {
        if n == 0 {
            return Err(Error::invalid("n must be positive"));
        }
        if !(c > 0.0 && c.is_finite()) {
            return Err(Error::invalid(format!("radius constant must be > 0, got {c}")));
        }
        let mut rng = rng::stream(seed, Purpose::Placement, &[]);
        let coords: Vec<Point> = (0..n).map(|_| Point::random(&mut rng)).collect();
        let radius = radius_for(n, c);
        Ok(Self::assemble(c, radius, seed, coords))
    }

    /// Like [`GeoGraph::generate`] but retries with `seed + 1, seed + 2, ...`
    /// until the graph is connected, giving up after `max_attempts` draws.
    pub fn generate_connected(n: usize, c: f64, seed: u64, max_attempts: usize) -> Result<Self> {
        for attempt in 0..max_attempts.max(1) as u64 {
            let g = Self::generate(n, c, seed.wrapping_add(attempt))?;
            if g.is_connected() {
                return Ok(g);
            }
        }
        Err(Error::invalid(format!(
            "no connected graph with n={n}, c={c} within {max_attempts} attempts from seed {seed}"
        )))
    }

    /// Builds a graph over explicit coordinates with an explicit radius.
    pub fn from_coords(coords: Vec<Point>, radius: f64) -> Result<Self> {
        if coords.is_empty() {
            return Err(Error::invalid("graph needs at least one node"));
        }
        if let Some(p) = coords.iter().find(|p| !p.in_unit_square()) {
            return Err(Error::invalid(format!("coordinate {p:?} outside the unit square")));
        }
        if !(radius >= 0.0 && radius.is_finite()) {
            return Err(Error::invalid(format!("bad radius {radius}")));
        }
        let n = coords.len();
        let c = if n >= 2 {
            radius * radius * n as f64 / (n as f64).ln()
        } else {
            0.0
        };
        Ok(Self::assemble(c, radius, 0, coords))
    }

    fn assemble(c: f64, radius: f64, seed: u64, coords: Vec<Point>) -> Self {
        let adjacency = build_adjacency(&coords, radius);
        GeoGraph {
            n: coords.len(),
            c,
            radius,
            seed,
            coords,
            adjacency,
        }
    }

    pub fn neighbors(&self, v: NodeId) -> &[NodeId] {
        &self.adjacency[v]
    }

    pub fn degree(&self, v: NodeId) -> usize {
        self.adjacency[v].len()
    }

    pub fn mean_degree(&self) -> f64 {
        self.adjacency.iter().map(Vec::len).sum::<usize>() as f64 / self.n as f64
    }

    pub fn edge_count(&self) -> usize {
        self.adjacency.iter().map(Vec::len).sum::<usize>() / 2
    }

    /// Node closest to `target`; ties go to the lowest id.
    pub fn closest_node(&self, target: Point) -> NodeId {
        let mut best = 0;
        let mut best_d = f64::INFINITY;
        for (i, p) in self.coords.iter().enumerate() {
            let d = p.dist2(&target);
            if d < best_d {
                best_d = d;
                best = i;
            }
        }
        best
    }

    /// Forwards from `source` to the neighbour strictly closest to `target`
    /// until no neighbour is closer than the current node.
    pub fn greedy_route(&self, source: NodeId, target: Point) -> RoutePath {
        let mut hops = vec![source];
        let mut cur = source;
        let mut cur_d = self.coords[cur].dist2(&target);
        loop {
            let mut next = None;
            let mut next_d = cur_d;
            // Adjacency is sorted, so strict `<` keeps the lowest id on ties.
            for &v in &self.adjacency[cur] {
                let d = self.coords[v].dist2(&target);
                if d < next_d {
                    next_d = d;
                    next = Some(v);
                }
            }
            match next {
                Some(v) => {
                    hops.push(v);
                    cur = v;
                    cur_d = next_d;
                }
                None => break,
            }
        }
        RoutePath { hops, recovered: false }
    }

    /// Greedy route addressed to the coordinates of `dst`. If forwarding stalls
    /// at a local minimum the remainder follows a shortest-hop path, and the
    /// route is marked as recovered. Unreachable destinations yield the
    /// stalled greedy prefix.
    pub fn route_to_node(&self, src: NodeId, dst: NodeId) -> RoutePath {
        let mut route = self.greedy_route(src, self.coords[dst]);
        let stuck = route.destination();
        if stuck != dst {
            if let Some(tail) = self.shortest_path(stuck, dst) {
                route.hops.extend_from_slice(&tail[1..]);
                route.recovered = true;
            }
        }
        route
    }

    /// Breadth-first shortest-hop path, lowest ids explored first.
    pub fn shortest_path(&self, src: NodeId, dst: NodeId) -> Option<Vec<NodeId>> {
        if src == dst {
            return Some(vec![src]);
        }
        let mut parent = vec![usize::MAX; self.n];
        parent[src] = src;
        let mut queue = VecDeque::from([src]);
        while let Some(u) = queue.pop_front() {
            for &v in &self.adjacency[u] {
                if parent[v] == usize::MAX {
                    parent[v] = u;
                    if v == dst {
                        let mut path = vec![dst];
                        let mut w = dst;
                        while w != src {
                            w = parent[w];
                            path.push(w);
                        }
                        path.reverse();
                        return Some(path);
                    }
                    queue.push_back(v);
                }
            }
        }
        None
    }

    /// Connected-component label for every node, labels in order of lowest
    /// member id.
    pub fn components(&self) -> Vec<usize> {
        components_of(self.n, |u| &self.adjacency[u])
    }

    pub fn is_connected(&self) -> bool {
        self.components().iter().all(|&c| c == 0)
    }

    pub fn to_json(&self) -> Result<String> {
        let file = GraphFile {
            n: self.n,
            c: self.c,
            radius: self.radius,
            seed: self.seed,
            coords: self.coords.iter().map(|p| [p.x, p.y]).collect(),
        };
        Ok(serde_json::to_string_pretty(&file)?)
    }

    /// Parses the JSON fixture format; adjacency is rebuilt from the
    /// coordinates and the stored radius is checked against `n` and `c`.
    pub fn from_json(s: &str) -> Result<Self> {
        let file: GraphFile = serde_json::from_str(s)?;
        if file.coords.len() != file.n {
            return Err(Error::GraphFormat(format!(
                "n = {} but {} coordinates given",
                file.n,
                file.coords.len()
            )));
        }
        if file.n == 0 {
            return Err(Error::GraphFormat("empty graph".into()));
        }
        let coords: Vec<Point> = file.coords.iter().map(|&[x, y]| Point::new(x, y)).collect();
        if let Some(p) = coords.iter().find(|p| !p.in_unit_square()) {
            return Err(Error::GraphFormat(format!("coordinate {p:?} outside the unit square")));
        }
        let expected = radius_for(file.n, file.c);
        if (expected - file.radius).abs() > 1e-9 * expected.max(1e-12) {
            return Err(Error::GraphFormat(format!(
                "radius {} does not match sqrt(c ln n / n) = {expected} for n={}, c={}",
                file.radius, file.n, file.c
            )));
        }
        Ok(Self::assemble(file.c, file.radius, file.seed, coords))
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

/// Component labels for an abstract graph given by a neighbour function.
pub(crate) fn components_of<'a, F>(n: usize, neighbors: F) -> Vec<usize>
where
    F: Fn(usize) -> &'a [usize],
{
    let mut label = vec![usize::MAX; n];
    let mut next = 0;
    let mut queue = VecDeque::new();
    for s in 0..n {
        if label[s] != usize::MAX {
            continue;
        }
        label[s] = next;
        queue.push_back(s);
        while let Some(u) = queue.pop_front() {
            for &v in neighbors(u) {
                if label[v] == usize::MAX {
                    label[v] = next;
                    queue.push_back(v);
                }
            }
        }
        next += 1;
    }
    label
}

/// Bucketed neighbour search; cells are at least `radius` wide so only the
/// 3x3 block around a node needs to be scanned.
fn build_adjacency(coords: &[Point], radius: f64) -> Vec<Vec<NodeId>> {
    let n = coords.len();
    let mut adjacency = vec![Vec::new(); n];
    if n < 2 || radius <= 0.0 {
        return adjacency;
    }
    let r2 = radius * radius;
    let cells = ((1.0 / radius).floor() as usize).clamp(1, 2048);
    let bucket = |p: &Point| {
        let bx = ((p.x * cells as f64) as usize).min(cells - 1);
        let by = ((p.y * cells as f64) as usize).min(cells - 1);
        (bx, by)
    };
    let mut buckets: Vec<Vec<NodeId>> = vec![Vec::new(); cells * cells];
    for (i, p) in coords.iter().enumerate() {
        let (bx, by) = bucket(p);
        buckets[by * cells + bx].push(i);
    }
    for (i, p) in coords.iter().enumerate() {
        let (bx, by) = bucket(p);
        let x0 = bx.saturating_sub(1);
        let y0 = by.saturating_sub(1);
        for yy in y0..=(by + 1).min(cells - 1) {
            for xx in x0..=(bx + 1).min(cells - 1) {
                for &j in &buckets[yy * cells + xx] {
                    if j != i && p.dist2(&coords[j]) <= r2 {
                        adjacency[i].push(j);
                    }
                }
            }
        }
        adjacency[i].sort_unstable();
    }
    adjacency
}
