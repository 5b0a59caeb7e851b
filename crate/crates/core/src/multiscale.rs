//! Hierarchical gossip: average within the finest cells, then repeatedly
//! average the cell representatives over overlay grids one level up, and
//! finally push the result back down to every node.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gossip::{
    self, charge_one_way, gossip_on, Channel, ExchangeGraph, FailureModel, GossipSpec, StoppingRule, ValueVector,
    DEFAULT_TRANSMISSION_CAP,
};
use crate::ledger::{SparseTally, TransmissionLedger};
use crate::par;
use crate::partition::{
    assign_cells, auto_levels, build_overlay, elect_representative, reweight, CellTree, Hierarchy, OverlayGrid,
    RepPolicy, ReweightFactor,
};
use crate::rng::{self, Purpose};
use crate::topology::{GeoGraph, NodeId};

/// Fixed-iteration constant, calibrated so that overlay grids of 16
/// representatives reach the per-call accuracy in at least 95% of runs.
pub const DEFAULT_C_FI: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LevelSpec {
    Fixed {
        k: usize,
    },
    /// Levels from the expected finest-cell size window.
    Auto {
        min_size: f64,
        max_size: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum StoppingMode {
    Oracle,
    /// `ceil(c_fi * p^2 * ln(1/eps))` iterations per invocation, with `p` the
    /// nominal participant count at that level.
    FixedIterations {
        c_fi: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReweightMode {
    #[default]
    LevelKOnly,
    EveryLevel,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MultiscaleConfig {
    pub levels: LevelSpec,
    pub a: f64,
    pub per_call_epsilon: f64,
    pub stopping: StoppingMode,
    pub rep_policy: RepPolicy,
    pub reweight_mode: ReweightMode,
    pub transport: FailureModel,
    /// Transmission budget for the whole run.
    pub budget: u64,
}

impl Default for MultiscaleConfig {
    fn default() -> Self {
        MultiscaleConfig {
            levels: LevelSpec::Auto {
                min_size: 2.0,
                max_size: 12.0,
            },
            a: 2.0 / 3.0,
            per_call_epsilon: 1e-4,
            stopping: StoppingMode::Oracle,
            rep_policy: RepPolicy::CenterClosest,
            reweight_mode: ReweightMode::LevelKOnly,
            transport: FailureModel::Reliable,
            budget: DEFAULT_TRANSMISSION_CAP,
        }
    }
}

impl MultiscaleConfig {
    pub fn with_levels(k: usize) -> Self {
        MultiscaleConfig {
            levels: LevelSpec::Fixed { k },
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.a > 0.0 && self.a < 1.0) {
            return Err(Error::invalid(format!("a must be in (0, 1), got {}", self.a)));
        }
        if !(self.per_call_epsilon > 0.0) {
            return Err(Error::invalid("per-call epsilon must be > 0"));
        }
        match self.levels {
            LevelSpec::Fixed { k: 0 } => return Err(Error::invalid("k must be >= 1")),
            LevelSpec::Auto { min_size, max_size } if !(min_size <= max_size && max_size > 1.0) => {
                return Err(Error::invalid("auto levels need 1 < max_size and min_size <= max_size"));
            }
            _ => {}
        }
        if let StoppingMode::FixedIterations { c_fi } = self.stopping {
            if !(c_fi > 0.0) {
                return Err(Error::invalid("c_fi must be > 0"));
            }
        }
        self.transport.validate()
    }

    /// Requested level count for a network of `n` nodes.
    pub fn resolve_k(&self, n: usize) -> usize {
        match self.levels {
            LevelSpec::Fixed { k } => k,
            LevelSpec::Auto { min_size, max_size } => auto_levels(n, self.a, min_size, max_size).0,
        }
    }
}

pub fn fixed_iterations_for(p: usize, epsilon: f64, c_fi: f64) -> u64 {
    if p <= 1 {
        return 0;
    }
    let p = p as f64;
    (c_fi * p * p * (1.0 / epsilon).ln()).ceil() as u64
}

#[derive(Debug, Clone)]
pub struct MultiscaleOutcome {
    pub final_values: ValueVector,
    pub ledger: TransmissionLedger,
    pub k_requested: usize,
    /// Levels actually run once non-splitting levels are dropped.
    pub k_effective: usize,
    pub hierarchy: Hierarchy,
    pub per_level_transmissions: BTreeMap<usize, u64>,
    pub dissemination_transmissions: u64,
    pub g_used: usize,
    pub final_rel_error: f64,
    pub iterations: u64,
    /// Sum over levels of the longest invocation at that level, in
    /// iterations; levels run one after another, cells within a level side
    /// by side.
    pub duration: u64,
    /// Finest cells whose induced subgraph was disconnected.
    pub disconnected_cells: usize,
    /// How many times each node served as a representative.
    pub representative_roles: Vec<u32>,
    /// Hop ceiling per level for this graph and hierarchy.
    pub hop_ceilings: BTreeMap<usize, usize>,
    pub max_mass_drift: f64,
    /// Invocations that stopped at a lossy consensus away from their mean.
    pub distorted_invocations: usize,
}

impl MultiscaleOutcome {
    pub fn max_hops_seen(&self) -> usize {
        self.ledger.max_hops_seen
    }

    /// `(level, hops, ceiling)` for every level whose longest message
    /// exceeded its ceiling.
    pub fn hop_ceiling_violations(&self) -> Vec<(usize, usize, usize)> {
        self.ledger
            .max_hops_by_level
            .iter()
            .filter_map(|(&level, &hops)| {
                let ceiling = self.hop_ceilings.get(&level).copied().unwrap_or(0);
                (hops > ceiling).then_some((level, hops, ceiling))
            })
            .collect()
    }

    pub fn record(&self, config: &MultiscaleConfig, seed: u64) -> RunRecord {
        RunRecord {
            config: *config,
            seed,
            per_level_transmissions: self.per_level_transmissions.clone(),
            g_used: self.g_used,
            final_rel_error: self.final_rel_error,
            max_hops_seen: self.max_hops_seen(),
            total: self.ledger.total,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub config: MultiscaleConfig,
    pub seed: u64,
    pub per_level_transmissions: BTreeMap<usize, u64>,
    pub g_used: usize,
    pub final_rel_error: f64,
    pub max_hops_seen: usize,
    pub total: u64,
}

/// `ceil(sqrt(5) / (S r))` where `S` is the cells-per-side of the cells a
/// level's messages travel between: the children for overlay levels, the
/// cells themselves at the finest level.
pub fn hop_ceilings(hierarchy: &Hierarchy, radius: f64) -> BTreeMap<usize, usize> {
    (1..=hierarchy.k)
        .map(|j| {
            let s = hierarchy.cells_per_side((j + 1).min(hierarchy.k)) as f64;
            (j, (5f64.sqrt() / (s * radius)).ceil() as usize)
        })
        .collect()
}

fn phase_label(level: usize) -> String {
    format!("level{level}")
}

const DISSEMINATION: &str = "dissemination";

/// Work item result for one independent gossip invocation.
struct CellRun {
    updates: Vec<(NodeId, f64)>,
    tally: SparseTally,
    iterations: u64,
    disconnected: bool,
    drift: f64,
    distorted: usize,
    overlay: Option<OverlayGrid>,
}

struct Run<'a> {
    graph: &'a GeoGraph,
    tree: &'a CellTree,
    config: &'a MultiscaleConfig,
    seed: u64,
    x: Vec<f64>,
    ledger: TransmissionLedger,
    /// `reps[j][cell]`: current representative of a level-`j` cell.
    reps: Vec<Vec<Option<NodeId>>>,
    overlays: Vec<Vec<Option<OverlayGrid>>>,
    roles: Vec<u32>,
    g_used: usize,
    iterations: u64,
    duration: u64,
    disconnected: usize,
    drift: f64,
    distorted: usize,
}

impl<'a> Run<'a> {
    fn new(graph: &'a GeoGraph, tree: &'a CellTree, config: &'a MultiscaleConfig, seed: u64, x: Vec<f64>) -> Self {
        let k = tree.k();
        let per_level = |j: usize| if j == 0 { 0 } else { tree.level(j).cells.len() };
        Run {
            graph,
            tree,
            config,
            seed,
            x,
            ledger: TransmissionLedger::new(graph.n),
            reps: (0..=k).map(|j| vec![None; per_level(j)]).collect(),
            overlays: (0..=k).map(|j| vec![None; per_level(j)]).collect(),
            roles: vec![0; graph.n],
            g_used: 0,
            iterations: 0,
            duration: 0,
            disconnected: 0,
            drift: 0.0,
            distorted: 0,
        }
    }

    fn stop_for(&self, nominal_participants: usize) -> StoppingRule {
        let eps = self.config.per_call_epsilon;
        match self.config.stopping {
            StoppingMode::Oracle => StoppingRule::oracle(eps),
            StoppingMode::FixedIterations { c_fi } => {
                StoppingRule::fixed(fixed_iterations_for(nominal_participants, eps, c_fi))
            }
        }
    }

    fn remaining_budget(&self) -> u64 {
        self.config.budget.saturating_sub(self.ledger.total)
    }

    fn merge(&mut self, runs: Vec<CellRun>) -> Vec<Option<OverlayGrid>> {
        let mut longest = 0;
        let mut overlays = Vec::with_capacity(runs.len());
        for run in runs {
            for (node, v) in run.updates {
                self.x[node] = v;
            }
            self.ledger.absorb(&run.tally);
            self.iterations += run.iterations;
            longest = longest.max(run.iterations);
            self.disconnected += usize::from(run.disconnected);
            self.drift = self.drift.max(run.drift);
            self.distorted += run.distorted;
            self.g_used += 1;
            overlays.push(run.overlay);
        }
        self.duration += longest;
        overlays
    }

    fn channel(&self, purpose: Purpose, parts: &[u64]) -> Channel {
        Channel::new(self.config.transport, rng::stream(self.seed, purpose, parts))
    }

    /// Level-k gossip inside every nonempty finest cell.
    fn finest_level(&mut self) -> Result<()> {
        let k = self.tree.k();
        self.ledger.begin_phase(phase_label(k));
        let cells = self.tree.nonempty(k);
        let nominal = self.tree.hierarchy.expected_population(k).ceil() as usize;
        let spec = GossipSpec {
            stop: self.stop_for(nominal),
            cap: self.remaining_budget(),
            level: k,
        };
        let oracle = matches!(self.config.stopping, StoppingMode::Oracle);
        let (graph, tree, x, seed, transport) = (self.graph, self.tree, &self.x, self.seed, self.config.transport);
        let runs = par::map(&cells, |&c| -> Result<CellRun> {
            let members = &tree.cell(k, c).members;
            let view = ExchangeGraph::induced(graph, members);
            let parts = if oracle {
                view.split_components()
            } else {
                vec![(view, (0..members.len()).collect())]
            };
            let mut vals: Vec<f64> = members.iter().map(|&m| x[m]).collect();
            let mut run = CellRun {
                updates: Vec::new(),
                tally: SparseTally::default(),
                iterations: 0,
                disconnected: parts.len() > 1,
                drift: 0.0,
                distorted: 0,
                overlay: None,
            };
            let mut longest = 0;
            for (ci, (comp, idx)) in parts.iter().enumerate() {
                let mut cv: Vec<f64> = idx.iter().map(|&i| vals[i]).collect();
                let key = [k as u64, c as u64, ci as u64];
                let mut protocol = rng::stream(seed, Purpose::CellGossip, &key);
                let mut channel = Channel::new(transport, rng::stream(seed, Purpose::CellChannel, &key));
                let report = gossip_on(comp, &mut cv, &spec, &mut protocol, &mut channel, &mut run.tally)?;
                for (&i, v) in idx.iter().zip(cv) {
                    vals[i] = v;
                }
                longest = longest.max(report.iterations);
                run.drift = run.drift.max(report.max_mass_drift);
                run.distorted += usize::from(report.distorted_consensus);
            }
            run.iterations = longest;
            run.updates = members.iter().copied().zip(vals).collect();
            Ok(run)
        });
        let runs = runs.into_iter().collect::<Result<Vec<_>>>()?;
        self.merge(runs);
        for &c in &cells {
            let rep = self.elect(k, c);
            self.reps[k][c] = Some(rep);
            self.apply_reweight(k, c, rep)?;
        }
        Ok(())
    }

    fn elect(&mut self, j: usize, c: usize) -> NodeId {
        let cell = self.tree.cell(j, c);
        let mut rng = rng::stream(self.seed, Purpose::Election, &[j as u64, c as u64]);
        let rep = elect_representative(
            &cell.members,
            cell.bounds.center(),
            self.graph,
            self.config.rep_policy,
            &mut rng,
        )
        .expect("nonempty cell");
        self.roles[rep] += 1;
        rep
    }

    fn apply_reweight(&mut self, j: usize, c: usize, rep: NodeId) -> Result<()> {
        let cell = self.tree.cell(j, c);
        let Some(parent) = cell.parent else {
            return Ok(());
        };
        let siblings = self.tree.nonempty_children(j - 1, parent).len();
        let parent_size = self.tree.cell(j - 1, parent).members.len();
        let f = ReweightFactor::new(cell.members.len(), siblings, parent_size)?;
        self.x[rep] = reweight(self.x[rep], &f);
        Ok(())
    }

    /// Overlay gossip among the child representatives of every nonempty
    /// level-`j` cell, followed by re-election for `j >= 2`.
    fn overlay_level(&mut self, j: usize) -> Result<()> {
        self.ledger.begin_phase(phase_label(j));
        let cells = self.tree.nonempty(j);
        let side = self.tree.hierarchy.side(j + 1);
        let spec = GossipSpec {
            stop: self.stop_for(side * side),
            cap: self.remaining_budget(),
            level: j,
        };
        let (graph, tree, x, seed, transport) = (self.graph, self.tree, &self.x, self.seed, self.config.transport);
        let child_reps = &self.reps[j + 1];
        let runs = par::map(&cells, |&c| -> Result<CellRun> {
            let overlay = build_overlay(tree, j, c, graph, |child| child_reps[child]);
            let view = overlay.exchange_graph();
            let mut vals: Vec<f64> = overlay.vertices.iter().map(|&v| x[v]).collect();
            let key = [j as u64, c as u64, 0];
            let mut protocol = rng::stream(seed, Purpose::CellGossip, &key);
            let mut channel = Channel::new(transport, rng::stream(seed, Purpose::CellChannel, &key));
            let mut tally = SparseTally::default();
            let report = gossip_on(&view, &mut vals, &spec, &mut protocol, &mut channel, &mut tally)?;
            Ok(CellRun {
                updates: overlay.vertices.iter().copied().zip(vals).collect(),
                tally,
                iterations: report.iterations,
                disconnected: false,
                drift: report.max_mass_drift,
                distorted: usize::from(report.distorted_consensus),
                overlay: Some(overlay),
            })
        });
        let runs = runs.into_iter().collect::<Result<Vec<_>>>()?;
        for (&c, ov) in cells.iter().zip(self.merge(runs)) {
            self.overlays[j][c] = ov;
        }
        if j >= 2 {
            for &c in &cells {
                let rep = self.elect(j, c);
                self.handoff(j, c, rep);
                self.reps[j][c] = Some(rep);
                if self.config.reweight_mode == ReweightMode::EveryLevel {
                    self.apply_reweight(j, c, rep)?;
                }
            }
        }
        Ok(())
    }

    /// Moves the cell's value from the nearest overlay vertex to `rep`.
    fn handoff(&mut self, j: usize, c: usize, rep: NodeId) {
        let overlay = self.overlays[j][c].as_ref().expect("overlay built for nonempty cell");
        let v = overlay.vertices[overlay.nearest_vertex(self.graph, self.graph.coords[rep])];
        if v == rep {
            return;
        }
        let route = self.graph.route_to_node(v, rep);
        let mut channel = self.channel(Purpose::Handoff, &[j as u64, c as u64]);
        let (delivered, _) = charge_one_way(&route.hops, &mut channel, &mut self.ledger, j);
        if delivered {
            self.x[rep] = self.x[v];
        }
    }

    fn disseminate(&mut self) {
        self.ledger.begin_phase(DISSEMINATION);
        let spreader = Spreader {
            graph: self.graph,
            tree: self.tree,
            reps: &self.reps,
            overlays: &self.overlays,
        };
        let results = spreader.run(&self.x, self.config.transport, self.seed);
        for (updates, tally) in results {
            for (node, v) in updates {
                self.x[node] = v;
            }
            self.ledger.absorb(&tally);
        }
    }
}

/// Pushes values down the cell tree: routed messages along overlay spanning
/// trees at coarse levels, a flood over a spanning tree of the induced
/// subgraph at the finest level.
struct Spreader<'a> {
    graph: &'a GeoGraph,
    tree: &'a CellTree,
    reps: &'a [Vec<Option<NodeId>>],
    overlays: &'a [Vec<Option<OverlayGrid>>],
}

impl Spreader<'_> {
    /// Level at which spreading starts: each level-2 cell holds its own
    /// value (level 1 when there is no hierarchy).
    fn top(&self) -> usize {
        self.tree.k().min(2)
    }

    fn run(&self, x: &[f64], transport: FailureModel, seed: u64) -> Vec<(Vec<(NodeId, f64)>, SparseTally)> {
        let top = self.top();
        let starts: Vec<(usize, NodeId)> = self
            .tree
            .nonempty(top)
            .into_iter()
            .filter_map(|c| self.reps[top][c].map(|r| (c, r)))
            .collect();
        par::map(&starts, |&(c, holder)| {
            let mut channel = Channel::new(transport, rng::stream(seed, Purpose::Dissemination, &[c as u64]));
            let mut tally = SparseTally::default();
            let mut updates = Vec::new();
            self.spread(top, c, holder, x[holder], &mut channel, &mut tally, &mut updates);
            (updates, tally)
        })
    }

    #[allow(clippy::too_many_arguments)]
    fn spread(
        &self,
        j: usize,
        c: usize,
        holder: NodeId,
        value: f64,
        channel: &mut Channel,
        sink: &mut SparseTally,
        updates: &mut Vec<(NodeId, f64)>,
    ) {
        if j == self.tree.k() {
            self.flood(c, holder, value, channel, sink, updates);
            return;
        }
        let overlay = self.overlays[j][c].as_ref().expect("overlay for nonempty cell");
        let start = overlay.nearest_vertex(self.graph, self.graph.coords[holder]);
        let first = self.graph.route_to_node(holder, overlay.vertices[start]);
        if !charge_one_way(&first.hops, channel, sink, j).0 {
            return;
        }
        let p = overlay.vertices.len();
        let mut adj: Vec<Vec<(usize, usize, bool)>> = vec![Vec::new(); p];
        for (e, &(a, b)) in overlay.edges.iter().enumerate() {
            adj[a].push((b, e, true));
            adj[b].push((a, e, false));
        }
        let mut seen = vec![false; p];
        let mut reached = vec![start];
        seen[start] = true;
        let mut head = 0;
        while head < reached.len() {
            let u = reached[head];
            head += 1;
            for &(w, e, forward) in &adj[u] {
                if seen[w] {
                    continue;
                }
                seen[w] = true;
                let (ab, ba) = &overlay.edge_routes[e];
                let route = if forward { ab } else { ba };
                if charge_one_way(&route.hops, channel, sink, j).0 {
                    reached.push(w);
                }
            }
        }
        for i in reached {
            self.spread(
                j + 1,
                overlay.child_cells[i],
                overlay.vertices[i],
                value,
                channel,
                sink,
                updates,
            );
        }
    }

    fn flood(
        &self,
        c: usize,
        holder: NodeId,
        value: f64,
        channel: &mut Channel,
        sink: &mut SparseTally,
        updates: &mut Vec<(NodeId, f64)>,
    ) {
        let k = self.tree.k();
        let members = &self.tree.cell(k, c).members;
        let view = ExchangeGraph::induced(self.graph, members);
        let local = |node: NodeId| members.iter().position(|&m| m == node).expect("holder is a member");
        let mut reached = vec![false; members.len()];
        let mut frontier = vec![local(holder)];
        reached[frontier[0]] = true;
        loop {
            while let Some(u) = frontier.pop() {
                updates.push((members[u], value));
                for &w in &view.adj[u] {
                    if reached[w] {
                        continue;
                    }
                    reached[w] = true;
                    if charge_one_way(&[members[u], members[w]], channel, sink, k).0 {
                        frontier.push(w);
                    }
                }
            }
            // Members the tree could not reach get a routed copy from the
            // holder at the closest of them.
            let holder_at = self.graph.coords[holder];
            let next = (0..members.len()).filter(|&i| !reached[i]).min_by(|&a, &b| {
                let da = self.graph.coords[members[a]].dist2(&holder_at);
                let db = self.graph.coords[members[b]].dist2(&holder_at);
                da.total_cmp(&db).then(members[a].cmp(&members[b]))
            });
            let Some(target) = next else {
                break;
            };
            reached[target] = true;
            let route = self.graph.route_to_node(holder, members[target]);
            if charge_one_way(&route.hops, channel, sink, k).0 {
                frontier.push(target);
            }
        }
    }
}

/// Multiscale gossip on `graph` starting from `values`.
pub fn multiscale_gossip(
    graph: &GeoGraph,
    values: &ValueVector,
    config: &MultiscaleConfig,
    seed: u64,
) -> Result<MultiscaleOutcome> {
    config.validate()?;
    if values.len() != graph.n {
        return Err(Error::invalid("value vector length differs from node count"));
    }
    let k_requested = config.resolve_k(graph.n);
    let hierarchy = Hierarchy::build(graph.n, k_requested, config.a)?.collapsed();
    let tree = assign_cells(graph, &hierarchy)?;
    let k = tree.k();
    let mut run = Run::new(graph, &tree, config, seed, values.current.clone());
    if k == 1 {
        run.ledger.begin_phase(phase_label(1));
        let view = ExchangeGraph::whole(graph);
        let spec = GossipSpec {
            stop: run.stop_for(graph.n),
            cap: config.budget,
            level: 1,
        };
        let mut protocol = rng::stream(seed, Purpose::CellGossip, &[1, 0, 0]);
        let mut channel = run.channel(Purpose::CellChannel, &[1, 0, 0]);
        let report = gossip_on(&view, &mut run.x, &spec, &mut protocol, &mut channel, &mut run.ledger)?;
        run.iterations = report.iterations;
        run.duration = report.iterations;
        run.drift = report.max_mass_drift;
        run.distorted = usize::from(report.distorted_consensus);
        run.g_used = 1;
    } else {
        run.finest_level()?;
        for j in (1..k).rev() {
            run.overlay_level(j)?;
        }
        run.disseminate();
    }
    let final_rel_error = gossip::relative_error(&run.x, &values.initial);
    let per_level_transmissions = (1..=k).map(|j| (j, run.ledger.phase_total(&phase_label(j)))).collect();
    let dissemination_transmissions = run.ledger.phase_total(DISSEMINATION);
    Ok(MultiscaleOutcome {
        final_values: ValueVector {
            current: run.x,
            initial: values.initial.clone(),
        },
        k_requested,
        k_effective: k,
        hop_ceilings: hop_ceilings(&tree.hierarchy, graph.radius),
        hierarchy: tree.hierarchy.clone(),
        per_level_transmissions,
        dissemination_transmissions,
        g_used: run.g_used,
        final_rel_error,
        iterations: run.iterations,
        duration: run.duration,
        disconnected_cells: run.disconnected,
        representative_roles: run.roles,
        max_mass_drift: run.drift,
        distorted_invocations: run.distorted,
        ledger: run.ledger,
    })
}

/// Two levels with `a = 1/2`, which keeps every message within
/// `O(n^{1/4})` hops.
pub fn two_level_gossip(
    graph: &GeoGraph,
    values: &ValueVector,
    epsilon: f64,
    transport: FailureModel,
    seed: u64,
) -> Result<MultiscaleOutcome> {
    let config = MultiscaleConfig {
        levels: LevelSpec::Fixed { k: 2 },
        a: 0.5,
        per_call_epsilon: epsilon,
        transport,
        ..Default::default()
    };
    multiscale_gossip(graph, values, &config, seed)
}

/// Spreads one value per top-level cell (level 2, or the whole square for a
/// single-level tree) to every node below it, using centre-closest
/// representatives. Returns the per-node values (NaN where nothing arrived)
/// and the charges.
pub fn disseminate(
    tree: &CellTree,
    graph: &GeoGraph,
    top_values: &[f64],
    transport: FailureModel,
    seed: u64,
) -> Result<(Vec<f64>, TransmissionLedger)> {
    transport.validate()?;
    let k = tree.k();
    let top = k.min(2);
    if top_values.len() != tree.level(top).cells.len() {
        return Err(Error::invalid("one value per top-level cell is required"));
    }
    let mut reps: Vec<Vec<Option<NodeId>>> = vec![Vec::new()];
    reps.extend((1..=k).map(|j| tree.level(j).cells.iter().map(|c| c.representative).collect::<Vec<_>>()));
    let mut overlays: Vec<Vec<Option<OverlayGrid>>> = (0..=k)
        .map(|j| {
            if j == 0 {
                Vec::new()
            } else {
                vec![None; tree.level(j).cells.len()]
            }
        })
        .collect();
    for j in top..k {
        for c in tree.nonempty(j) {
            let child_reps = &reps[j + 1];
            overlays[j][c] = Some(build_overlay(tree, j, c, graph, |ch| child_reps[ch]));
        }
    }
    let spreader = Spreader {
        graph,
        tree,
        reps: &reps,
        overlays: &overlays,
    };
    let mut x = vec![f64::NAN; graph.n];
    for c in tree.nonempty(top) {
        if let Some(r) = reps[top][c] {
            x[r] = top_values[c];
        }
    }
    let mut ledger = TransmissionLedger::new(graph.n);
    ledger.begin_phase(DISSEMINATION);
    let mut out = vec![f64::NAN; graph.n];
    for (updates, tally) in spreader.run(&x, transport, seed) {
        for (node, v) in updates {
            out[node] = v;
        }
        ledger.absorb(&tally);
    }
    Ok((out, ledger))
}
