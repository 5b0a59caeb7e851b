//! Recursive cell hierarchy over the unit square.
//!
//! Level 1 is the whole square. A level-`j` cell is split into
//! `side_{j+1} x side_{j+1}` equal subcells, so level `j` is an
//! `S_j x S_j` grid with `S_j = side_2 * ... * side_j`. Cells are addressed
//! by their global `(row, col)` on that grid (row follows `y`).

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gossip::ExchangeGraph;
use crate::topology::{GeoGraph, NodeId, Point, RoutePath};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Hierarchy {
    pub n: usize,
    pub k: usize,
    pub a: f64,
    /// `per_level_side[j - 1]` splits a level-`(j-1)` cell at level `j`;
    /// entry 0 (level 1) is always 1.
    pub per_level_side: Vec<usize>,
}

impl Hierarchy {
    pub fn build(n: usize, k: usize, a: f64) -> Result<Self> {
        if !(a > 0.0 && a < 1.0) {
            return Err(Error::invalid(format!(
                "subdivision parameter must be in (0, 1), got {a}"
            )));
        }
        if k == 0 {
            return Err(Error::invalid("hierarchy needs at least one level"));
        }
        let mut sides = vec![1usize];
        let mut expected = n as f64;
        for _ in 2..=k {
            let side = (expected.powf((1.0 - a) / 2.0).round() as usize).max(1);
            expected /= (side * side) as f64;
            sides.push(side);
        }
        Ok(Hierarchy {
            n,
            k,
            a,
            per_level_side: sides,
        })
    }

    pub fn side(&self, level: usize) -> usize {
        self.per_level_side[level - 1]
    }

    /// Cells per side of the whole square at `level`.
    pub fn cells_per_side(&self, level: usize) -> usize {
        self.per_level_side[..level].iter().product()
    }

    /// Expected node count of one level-`level` cell.
    pub fn expected_population(&self, level: usize) -> f64 {
        let s = self.cells_per_side(level) as f64;
        self.n as f64 / (s * s)
    }

    /// Drops levels that would not split their parent (side 1). Such levels
    /// repeat the parent's cells and would only re-run the same gossip.
    pub fn collapsed(&self) -> Hierarchy {
        let mut sides = vec![1usize];
        sides.extend(self.per_level_side.iter().skip(1).copied().filter(|&s| s > 1));
        Hierarchy {
            n: self.n,
            k: sides.len(),
            a: self.a,
            per_level_side: sides,
        }
    }
}

/// Level count from the cell-size window: the smallest `k` whose finest
/// cells hold at most `max_size` nodes in expectation. The flag is false
/// when that expectation also falls below `min_size`.
pub fn auto_levels(n: usize, a: f64, min_size: f64, max_size: f64) -> (usize, bool) {
    let n = n.max(1) as f64;
    let mut k = 1usize;
    loop {
        let size = n.powf(a.powi(k as i32 - 1));
        if size <= max_size || k >= 64 {
            return (k, size >= min_size);
        }
        k += 1;
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bounds {
    pub x0: f64,
    pub y0: f64,
    pub x1: f64,
    pub y1: f64,
}

impl Bounds {
    pub fn center(&self) -> Point {
        Point::new(0.5 * (self.x0 + self.x1), 0.5 * (self.y0 + self.y1))
    }

    /// Half-open containment, closed on the square's outer edge.
    pub fn contains(&self, p: Point) -> bool {
        let inx = p.x >= self.x0 && (p.x < self.x1 || (self.x1 >= 1.0 && p.x <= 1.0));
        let iny = p.y >= self.y0 && (p.y < self.y1 || (self.y1 >= 1.0 && p.y <= 1.0));
        inx && iny
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Cell {
    pub level: usize,
    pub row: usize,
    pub col: usize,
    pub bounds: Bounds,
    pub members: Vec<NodeId>,
    /// Index of the parent cell at `level - 1`.
    pub parent: Option<usize>,
    /// Indices of the child cells at `level + 1`, row-major within the parent.
    pub children: Vec<usize>,
    /// Centre-closest member; `None` for empty cells.
    pub representative: Option<NodeId>,
}

#[derive(Debug, Clone)]
pub struct Level {
    pub cells_per_side: usize,
    /// Row-major: index `row * cells_per_side + col`.
    pub cells: Vec<Cell>,
}

/// A hierarchy populated with the nodes of one graph.
#[derive(Debug, Clone)]
pub struct CellTree {
    pub hierarchy: Hierarchy,
    /// `levels[j - 1]` is level `j`.
    pub levels: Vec<Level>,
}

fn grid_index(v: f64, s: usize) -> usize {
    let mut i = ((v * s as f64) as usize).min(s - 1);
    while i > 0 && v < i as f64 / s as f64 {
        i -= 1;
    }
    while i + 1 < s && v >= (i + 1) as f64 / s as f64 {
        i += 1;
    }
    i
}

fn bounds_of(row: usize, col: usize, s: usize) -> Bounds {
    let s = s as f64;
    Bounds {
        x0: col as f64 / s,
        y0: row as f64 / s,
        x1: (col + 1) as f64 / s,
        y1: (row + 1) as f64 / s,
    }
}

/// Places every node in one cell per level.
pub fn assign_cells(graph: &GeoGraph, hierarchy: &Hierarchy) -> Result<CellTree> {
    if hierarchy.n != graph.n {
        return Err(Error::invalid(format!(
            "hierarchy built for {} nodes, graph has {}",
            hierarchy.n, graph.n
        )));
    }
    let mut levels: Vec<Level> = Vec::with_capacity(hierarchy.k);
    for level in 1..=hierarchy.k {
        let s = hierarchy.cells_per_side(level);
        let side = hierarchy.side(level);
        let mut cells: Vec<Cell> = (0..s * s)
            .map(|idx| {
                let (row, col) = (idx / s, idx % s);
                Cell {
                    level,
                    row,
                    col,
                    bounds: bounds_of(row, col, s),
                    members: Vec::new(),
                    parent: (level > 1).then(|| (row / side) * (s / side) + col / side),
                    children: Vec::new(),
                    representative: None,
                }
            })
            .collect();
        for (v, p) in graph.coords.iter().enumerate() {
            let idx = grid_index(p.y, s) * s + grid_index(p.x, s);
            cells[idx].members.push(v);
        }
        for cell in &mut cells {
            cell.representative = elect_center(&cell.members, cell.bounds.center(), graph);
        }
        if level > 1 {
            let parent_level = &mut levels[level - 2];
            let ps = parent_level.cells_per_side;
            for pr in 0..ps {
                for pc in 0..ps {
                    let kids = &mut parent_level.cells[pr * ps + pc].children;
                    for r in 0..side {
                        for c in 0..side {
                            kids.push((pr * side + r) * s + pc * side + c);
                        }
                    }
                }
            }
        }
        levels.push(Level {
            cells_per_side: s,
            cells,
        });
    }
    Ok(CellTree {
        hierarchy: hierarchy.clone(),
        levels,
    })
}

impl CellTree {
    pub fn k(&self) -> usize {
        self.hierarchy.k
    }

    pub fn level(&self, j: usize) -> &Level {
        &self.levels[j - 1]
    }

    pub fn cell(&self, j: usize, idx: usize) -> &Cell {
        &self.levels[j - 1].cells[idx]
    }

    /// Indices of nonempty cells at level `j`.
    pub fn nonempty(&self, j: usize) -> Vec<usize> {
        self.level(j)
            .cells
            .iter()
            .enumerate()
            .filter(|(_, c)| !c.members.is_empty())
            .map(|(i, _)| i)
            .collect()
    }

    /// Number of nonempty cells summed over all levels.
    pub fn nonempty_count(&self) -> usize {
        (1..=self.k()).map(|j| self.nonempty(j).len()).sum()
    }

    /// Nonempty children of level-`j` cell `idx`.
    pub fn nonempty_children(&self, j: usize, idx: usize) -> Vec<usize> {
        self.cell(j, idx)
            .children
            .iter()
            .copied()
            .filter(|&c| !self.cell(j + 1, c).members.is_empty())
            .collect()
    }

    /// Debug dump of the tree, one nested record per cell.
    pub fn dump(&self) -> CellDump {
        self.dump_cell(1, 0)
    }

    fn dump_cell(&self, j: usize, idx: usize) -> CellDump {
        let c = self.cell(j, idx);
        CellDump {
            level: j,
            bounds: c.bounds,
            member_count: c.members.len(),
            representative: c.representative,
            children: c.children.iter().map(|&ch| self.dump_cell(j + 1, ch)).collect(),
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&self.dump())?)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellDump {
    pub level: usize,
    pub bounds: Bounds,
    pub member_count: usize,
    pub representative: Option<NodeId>,
    pub children: Vec<CellDump>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RepPolicy {
    #[default]
    CenterClosest,
    Random,
}

fn elect_center(members: &[NodeId], center: Point, graph: &GeoGraph) -> Option<NodeId> {
    let mut best: Option<(f64, NodeId)> = None;
    for &m in members {
        let d = graph.coords[m].dist2(&center);
        if best.is_none_or(|(bd, bm)| d < bd || (d == bd && m < bm)) {
            best = Some((d, m));
        }
    }
    best.map(|(_, m)| m)
}

/// Picks a representative among `members`; `None` for an empty cell.
pub fn elect_representative<R: Rng + ?Sized>(
    members: &[NodeId],
    center: Point,
    graph: &GeoGraph,
    policy: RepPolicy,
    rng: &mut R,
) -> Option<NodeId> {
    match policy {
        RepPolicy::CenterClosest => elect_center(members, center, graph),
        RepPolicy::Random if members.is_empty() => None,
        RepPolicy::Random => Some(members[rng.random_range(0..members.len())]),
    }
}

/// Logical grid among the representatives of one parent's nonempty children.
#[derive(Debug, Clone)]
pub struct OverlayGrid {
    /// Level of the parent cell (the level at which this overlay gossips).
    pub level: usize,
    pub parent_cell: usize,
    pub vertices: Vec<NodeId>,
    /// Child-cell index (at `level + 1`) of each vertex.
    pub child_cells: Vec<usize>,
    pub edges: Vec<(usize, usize)>,
    /// `(a -> b, b -> a)` routes for each edge `(a, b)`.
    pub edge_routes: Vec<(RoutePath, RoutePath)>,
}

impl OverlayGrid {
    pub fn exchange_graph(&self) -> ExchangeGraph {
        ExchangeGraph::overlay(self.vertices.clone(), &self.edges, &self.edge_routes)
    }

    pub fn is_connected(&self) -> bool {
        let adj = adjacency(self.vertices.len(), &self.edges);
        crate::topology::components_of(self.vertices.len(), |u| &adj[u])
            .iter()
            .all(|&c| c == 0)
    }

    /// Vertex nearest to `p` (Euclidean, lowest id on ties).
    pub fn nearest_vertex(&self, graph: &GeoGraph, p: Point) -> usize {
        let mut best = 0;
        for i in 1..self.vertices.len() {
            let (d, bd) = (
                graph.coords[self.vertices[i]].dist2(&p),
                graph.coords[self.vertices[best]].dist2(&p),
            );
            if d < bd || (d == bd && self.vertices[i] < self.vertices[best]) {
                best = i;
            }
        }
        best
    }
}

fn adjacency(p: usize, edges: &[(usize, usize)]) -> Vec<Vec<usize>> {
    let mut adj = vec![Vec::new(); p];
    for &(a, b) in edges {
        adj[a].push(b);
        adj[b].push(a);
    }
    adj
}

/// Grid edges among the occupied slots of a `side x side` block: each slot
/// links to the nearest occupied slot east of it and south of it, skipping
/// over empty slots. Returns slot-index pairs.
pub fn bridged_grid_edges(side: usize, occupied: &[bool]) -> Vec<(usize, usize)> {
    let mut edges = Vec::new();
    for r in 0..side {
        for c in 0..side {
            let here = r * side + c;
            if !occupied[here] {
                continue;
            }
            if let Some(cc) = (c + 1..side).find(|&cc| occupied[r * side + cc]) {
                edges.push((here, r * side + cc));
            }
            if let Some(rr) = (r + 1..side).find(|&rr| occupied[rr * side + c]) {
                edges.push((here, rr * side + c));
            }
        }
    }
    edges
}

/// Builds the overlay of level-`level` cell `parent` given the current
/// representative of each child (indexed by child-cell index at
/// `level + 1`). Children without a representative are left out.
pub fn build_overlay(
    tree: &CellTree,
    level: usize,
    parent: usize,
    graph: &GeoGraph,
    rep_of_child: impl Fn(usize) -> Option<NodeId>,
) -> OverlayGrid {
    let side = tree.hierarchy.side(level + 1);
    let children = &tree.cell(level, parent).children;
    let reps: Vec<Option<NodeId>> = children.iter().map(|&c| rep_of_child(c)).collect();
    let occupied: Vec<bool> = reps.iter().map(Option::is_some).collect();
    let mut slot_to_vertex = vec![usize::MAX; children.len()];
    let mut vertices = Vec::new();
    let mut child_cells = Vec::new();
    for (slot, rep) in reps.iter().enumerate() {
        if let Some(r) = rep {
            slot_to_vertex[slot] = vertices.len();
            vertices.push(*r);
            child_cells.push(children[slot]);
        }
    }
    let mut edges: Vec<(usize, usize)> = bridged_grid_edges(side, &occupied)
        .into_iter()
        .map(|(a, b)| (slot_to_vertex[a], slot_to_vertex[b]))
        .collect();
    link_components(&vertices, graph, &mut edges);
    let edge_routes = edges
        .iter()
        .map(|&(a, b)| {
            (
                graph.route_to_node(vertices[a], vertices[b]),
                graph.route_to_node(vertices[b], vertices[a]),
            )
        })
        .collect();
    OverlayGrid {
        level,
        parent_cell: parent,
        vertices,
        child_cells,
        edges,
        edge_routes,
    }
}

/// Joins disconnected pieces of a bridged grid by their closest vertex pair.
fn link_components(vertices: &[NodeId], graph: &GeoGraph, edges: &mut Vec<(usize, usize)>) {
    let p = vertices.len();
    loop {
        let adj = adjacency(p, edges);
        let labels = crate::topology::components_of(p, |u| &adj[u]);
        if labels.iter().all(|&l| l == 0) {
            return;
        }
        let mut best: Option<(f64, usize, usize)> = None;
        for a in 0..p {
            for b in 0..p {
                if labels[a] == 0 && labels[b] != 0 {
                    let d = graph.coords[vertices[a]].dist2(&graph.coords[vertices[b]]);
                    if best.is_none_or(|(bd, _, _)| d < bd) {
                        best = Some((d, a, b));
                    }
                }
            }
        }
        let (_, a, b) = best.expect("two components exist");
        edges.push((a.min(b), a.max(b)));
    }
}

/// Scaling that turns a cell mean into its population-weighted share of the
/// parent mean: `subgraph_size * sibling_count / parent_size`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReweightFactor {
    pub subgraph_size: usize,
    pub sibling_count: usize,
    pub parent_size: usize,
    pub factor: f64,
}

impl ReweightFactor {
    pub fn new(subgraph_size: usize, sibling_count: usize, parent_size: usize) -> Result<Self> {
        if subgraph_size == 0 || sibling_count == 0 || parent_size == 0 {
            return Err(Error::invalid("reweight factor needs nonzero sizes"));
        }
        Ok(ReweightFactor {
            subgraph_size,
            sibling_count,
            parent_size,
            factor: subgraph_size as f64 * sibling_count as f64 / parent_size as f64,
        })
    }
}

pub fn reweight(value: f64, f: &ReweightFactor) -> f64 {
    value * f.factor
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sides_follow_the_rounding_rule() {
        let h = Hierarchy::build(262_144, 3, 2.0 / 3.0).unwrap();
        assert_eq!(h.per_level_side, vec![1, 8, 4]);
        assert_eq!(h.cells_per_side(3), 32);
        let h = Hierarchy::build(5000, 2, 2.0 / 3.0).unwrap();
        assert_eq!(h.per_level_side, vec![1, 4]);
        let h = Hierarchy::build(777, 1, 0.5).unwrap();
        assert_eq!(h.per_level_side, vec![1]);
        let h = Hierarchy::build(4096, 2, 0.5).unwrap();
        assert_eq!(h.per_level_side, vec![1, 8]);
        assert!(Hierarchy::build(10, 2, 1.0).is_err());
        assert!(Hierarchy::build(10, 2, 0.0).is_err());
    }

    #[test]
    fn collapse_drops_unit_splits() {
        let h = Hierarchy::build(2000, 6, 2.0 / 3.0).unwrap();
        assert_eq!(h.per_level_side, vec![1, 4, 2, 2, 1, 1]);
        let c = h.collapsed();
        assert_eq!(c.k, 4);
        assert_eq!(c.per_level_side, vec![1, 4, 2, 2]);
        assert_eq!(c.cells_per_side(4), h.cells_per_side(6));
    }

    #[test]
    fn auto_levels_examples() {
        assert_eq!(auto_levels(5000, 2.0 / 3.0, 2.0, 12.0), (5, true));
        assert_eq!(auto_levels(16, 2.0 / 3.0, 2.0, 16.0), (1, true));
        let (k, ok) = auto_levels(8000, 2.0 / 3.0, 2.0, 12.0);
        assert!(ok);
        let size = 8000f64.powf((2.0f64 / 3.0).powi(k as i32 - 1));
        assert!((2.0..=12.0).contains(&size));
        let prev = 8000f64.powf((2.0f64 / 3.0).powi(k as i32 - 2));
        assert!(prev > 12.0);
    }

    fn containment_path(p: Point, h: &Hierarchy) -> Vec<(usize, usize)> {
        (1..=h.k)
            .map(|j| {
                let s = h.cells_per_side(j);
                let mut hit = None;
                for row in 0..s {
                    for col in 0..s {
                        if bounds_of(row, col, s).contains(p) {
                            assert!(hit.is_none(), "point in two cells");
                            hit = Some((row, col));
                        }
                    }
                }
                hit.expect("point in no cell")
            })
            .collect()
    }

    #[test]
    fn membership_matches_containment_scan() {
        let g = GeoGraph::generate(1000, 3.0, 4).unwrap();
        let h = Hierarchy::build(1000, 3, 2.0 / 3.0).unwrap();
        let tree = assign_cells(&g, &h).unwrap();
        for j in 1..=h.k {
            let total: usize = tree.level(j).cells.iter().map(|c| c.members.len()).sum();
            assert_eq!(total, 1000);
        }
        for v in 0..1000 {
            let path = containment_path(g.coords[v], &h);
            for (j, &(row, col)) in path.iter().enumerate() {
                let s = h.cells_per_side(j + 1);
                assert!(tree.cell(j + 1, row * s + col).members.contains(&v));
            }
        }
    }

    #[test]
    fn boundary_points_go_to_low_edge_cells() {
        let coords = vec![
            Point::new(0.0, 0.0),
            Point::new(0.5, 0.25),
            Point::new(1.0, 1.0),
            Point::new(0.75, 0.999_999),
        ];
        let g = GeoGraph::from_coords(coords, 0.1).unwrap();
        let h = Hierarchy {
            n: 4,
            k: 3,
            a: 0.5,
            per_level_side: vec![1, 2, 2],
        };
        let tree = assign_cells(&g, &h).unwrap();
        assert!(tree.cell(3, 0).members.contains(&0));
        assert!(tree.cell(2, 0).members.contains(&0));
        // (0.5, 0.25): column 2 of 4, row 1 of 4.
        assert!(tree.cell(3, 4 + 2).members.contains(&1));
        assert!(tree.cell(3, 15).members.contains(&2));
        for v in 0..4 {
            let path = containment_path(g.coords[v], &h);
            let (row, col) = path[2];
            assert!(tree.cell(3, row * 4 + col).members.contains(&v));
        }
    }

    #[test]
    fn children_tile_their_parent() {
        let g = GeoGraph::generate(300, 3.0, 1).unwrap();
        let h = Hierarchy::build(300, 3, 2.0 / 3.0).unwrap();
        let tree = assign_cells(&g, &h).unwrap();
        for j in 1..h.k {
            for (idx, cell) in tree.level(j).cells.iter().enumerate() {
                let area: f64 = cell
                    .children
                    .iter()
                    .map(|&c| {
                        let b = tree.cell(j + 1, c).bounds;
                        assert!(b.x0 >= cell.bounds.x0 && b.x1 <= cell.bounds.x1 + 1e-15);
                        assert!(b.y0 >= cell.bounds.y0 && b.y1 <= cell.bounds.y1 + 1e-15);
                        assert_eq!(tree.cell(j + 1, c).parent, Some(idx));
                        (b.x1 - b.x0) * (b.y1 - b.y0)
                    })
                    .sum();
                let own = (cell.bounds.x1 - cell.bounds.x0) * (cell.bounds.y1 - cell.bounds.y0);
                assert!((area - own).abs() < 1e-12);
                let kids: usize = cell.children.iter().map(|&c| tree.cell(j + 1, c).members.len()).sum();
                assert_eq!(kids, cell.members.len());
            }
        }
    }

    #[test]
    fn center_election_matches_scan() {
        let g = GeoGraph::generate(200, 3.0, 9).unwrap();
        let members = vec![3, 17, 40, 41, 99];
        let center = Point::new(0.3, 0.6);
        let mut rng = crate::rng::stream(0, crate::rng::Purpose::Election, &[]);
        let got = elect_representative(&members, center, &g, RepPolicy::CenterClosest, &mut rng).unwrap();
        let want = *members
            .iter()
            .min_by(|&&a, &&b| {
                g.coords[a]
                    .dist(&center)
                    .total_cmp(&g.coords[b].dist(&center))
                    .then(a.cmp(&b))
            })
            .unwrap();
        assert_eq!(got, want);
        assert_eq!(
            elect_representative(&[7], center, &g, RepPolicy::Random, &mut rng),
            Some(7)
        );
        assert_eq!(elect_representative(&[], center, &g, RepPolicy::Random, &mut rng), None);
        let pick = |seed| {
            let mut r = crate::rng::stream(seed, crate::rng::Purpose::Election, &[2, 5]);
            elect_representative(&members, center, &g, RepPolicy::Random, &mut r)
        };
        assert_eq!(pick(11), pick(11));
    }

    #[test]
    fn bridged_grid_examples() {
        let full = bridged_grid_edges(2, &[true; 4]);
        assert_eq!(full.len(), 4);
        let mut holed = [true; 9];
        holed[4] = false;
        let edges = bridged_grid_edges(3, &holed);
        assert_eq!(edges.len(), 10);
        assert!(edges.contains(&(3, 5)));
        assert!(edges.contains(&(1, 7)));
        let adj = adjacency(9, &edges);
        let labels = crate::topology::components_of(9, |u| &adj[u]);
        let occupied: Vec<usize> = (0..9).filter(|&i| holed[i]).collect();
        assert!(occupied.iter().all(|&i| labels[i] == labels[0]));
    }

    #[test]
    fn overlay_routes_match_rerouting() {
        let g = GeoGraph::generate_connected(2000, 3.0, 3, 100).unwrap();
        let h = Hierarchy::build(2000, 3, 2.0 / 3.0).unwrap();
        let tree = assign_cells(&g, &h).unwrap();
        for parent in tree.nonempty(2) {
            let ov = build_overlay(&tree, 2, parent, &g, |c| tree.cell(3, c).representative);
            assert!(ov.is_connected());
            assert_eq!(ov.vertices.len(), tree.nonempty_children(2, parent).len());
            for (&(a, b), (ab, ba)) in ov.edges.iter().zip(&ov.edge_routes) {
                assert_eq!(
                    ab.hop_count(),
                    g.route_to_node(ov.vertices[a], ov.vertices[b]).hop_count()
                );
                assert_eq!(ab.destination(), ov.vertices[b]);
                assert_eq!(ba.destination(), ov.vertices[a]);
            }
        }
    }

    #[test]
    fn disconnected_blocks_get_linked() {
        // Opposite corners share no row or column.
        let occupied = [true, false, false, false, false, false, false, false, true];
        let edges = bridged_grid_edges(3, &occupied);
        assert!(edges.is_empty());
        let coords = vec![Point::new(0.1, 0.1), Point::new(0.9, 0.9)];
        let g = GeoGraph::from_coords(coords, 1.2).unwrap();
        let mut e = Vec::new();
        link_components(&[0, 1], &g, &mut e);
        assert_eq!(e, vec![(0, 1)]);
    }

    #[test]
    fn reweight_examples() {
        let f = ReweightFactor::new(10, 4, 40).unwrap();
        assert_eq!(reweight(0.3, &f), 0.3);
        let f = ReweightFactor::new(10, 4, 50).unwrap();
        assert!((f.factor - 0.8).abs() < 1e-15);
        assert!(ReweightFactor::new(0, 4, 50).is_err());
    }

    #[test]
    fn hierarchy_dump_round_trips() {
        let g = GeoGraph::generate(50, 3.0, 2).unwrap();
        let h = Hierarchy::build(50, 2, 0.5).unwrap();
        let tree = assign_cells(&g, &h).unwrap();
        let dump: CellDump = serde_json::from_str(&tree.to_json().unwrap()).unwrap();
        assert_eq!(dump.member_count, 50);
        assert_eq!(dump.children.len(), h.side(2) * h.side(2));
        assert_eq!(dump.children.iter().map(|c| c.member_count).sum::<usize>(), 50);
    }
}
