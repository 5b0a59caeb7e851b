//! Asynchronous randomized pairwise gossip on physical or overlay graphs.
//!
//! One iteration activates a uniformly random participant, which picks a
//! uniformly random neighbour and exchanges values with it over the edge's
//! route. Both replace their values with the pairwise average. The exchange
//! is charged to a [`TransmissionSink`] according to the [`FailureModel`].

use rand::Rng;
use rand_distr::{Distribution, Geometric};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ledger::{TransmissionLedger, TransmissionSink};
use crate::rng::{self, Purpose, SimRng};
use crate::topology::{GeoGraph, NodeId, RoutePath};

/// Default budget guarding non-converging runs.
pub const DEFAULT_TRANSMISSION_CAP: u64 = 1_000_000_000;

/// Current estimates together with the snapshot they started from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValueVector {
    pub current: Vec<f64>,
    pub initial: Vec<f64>,
}

impl ValueVector {
    pub fn new(initial: Vec<f64>) -> Result<Self> {
        if let Some(v) = initial.iter().find(|v| !v.is_finite()) {
            return Err(Error::invalid(format!("non-finite initial value {v}")));
        }
        Ok(ValueVector {
            current: initial.clone(),
            initial,
        })
    }

    pub fn len(&self) -> usize {
        self.current.len()
    }

    pub fn is_empty(&self) -> bool {
        self.current.is_empty()
    }

    pub fn initial_mean(&self) -> f64 {
        mean(&self.initial)
    }

    /// `||x - mean(x0) 1|| / ||x0||`, the oracle error of the current state.
    pub fn rel_error(&self) -> f64 {
        relative_error(&self.current, &self.initial)
    }
}

pub fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        0.0
    } else {
        xs.iter().sum::<f64>() / xs.len() as f64
    }
}

fn norm(xs: &[f64]) -> f64 {
    xs.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Euclidean error of `current` against the mean of `initial`, relative to
/// `||initial||`. A zero initial vector has error 0 iff `current` is zero.
pub fn relative_error(current: &[f64], initial: &[f64]) -> f64 {
    let target = mean(initial);
    let dev = current.iter().map(|x| (x - target) * (x - target)).sum::<f64>().sqrt();
    let n0 = norm(initial);
    if n0 == 0.0 {
        if dev == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    } else {
        dev / n0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum StoppingRule {
    /// Stop at the first iteration whose oracle error is at most `epsilon`.
    OracleEpsilon { epsilon: f64 },
    /// Run exactly this many iterations.
    FixedIterations { iterations: u64 },
}

impl StoppingRule {
    pub fn oracle(epsilon: f64) -> Self {
        StoppingRule::OracleEpsilon { epsilon }
    }

    pub fn fixed(iterations: u64) -> Self {
        StoppingRule::FixedIterations { iterations }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            StoppingRule::OracleEpsilon { epsilon } if !(epsilon > 0.0) => {
                Err(Error::invalid(format!("epsilon must be > 0, got {epsilon}")))
            }
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FailureModel {
    #[default]
    Reliable,
    /// Every hop is retried until it gets through; each attempt succeeds
    /// with probability `p`.
    Handshake { p: f64 },
    /// Every hop gets through with probability `p`; otherwise the message is
    /// gone.
    Lossy { p: f64 },
}

impl FailureModel {
    pub fn validate(&self) -> Result<()> {
        match *self {
            FailureModel::Reliable => Ok(()),
            FailureModel::Handshake { p } | FailureModel::Lossy { p } => {
                if p > 0.0 && p <= 1.0 {
                    Ok(())
                } else {
                    Err(Error::invalid(format!(
                        "success probability must be in (0, 1], got {p}"
                    )))
                }
            }
        }
    }

    pub fn success_probability(&self) -> f64 {
        match *self {
            FailureModel::Reliable => 1.0,
            FailureModel::Handshake { p } | FailureModel::Lossy { p } => p,
        }
    }

    pub fn is_lossy(&self) -> bool {
        matches!(self, FailureModel::Lossy { p } if *p < 1.0)
    }
}

/// A transport bound to its own random stream, so channel randomness never
/// perturbs protocol decisions.
pub struct Channel {
    model: FailureModel,
    geometric: Option<Geometric>,
    rng: SimRng,
}

impl Channel {
    pub fn new(model: FailureModel, rng: SimRng) -> Self {
        let geometric = match model {
            FailureModel::Handshake { p } if p < 1.0 => Geometric::new(p).ok(),
            _ => None,
        };
        Channel { model, geometric, rng }
    }

    pub fn model(&self) -> FailureModel {
        self.model
    }

    /// Cost of pushing one message over one edge, and whether it arrived.
    pub(crate) fn hop(&mut self) -> (u64, bool) {
        match self.model {
            FailureModel::Reliable => (1, true),
            FailureModel::Handshake { .. } => match &self.geometric {
                // Geometric counts failures before the first success.
                Some(g) => (1 + g.sample(&mut self.rng), true),
                None => (1, true),
            },
            FailureModel::Lossy { p } => (1, p >= 1.0 || self.rng.random::<f64>() < p),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ExchangeOutcome {
    pub delivered_forward: bool,
    pub delivered_back: bool,
    pub transmissions: u64,
}

fn push_leg<S, I>(hops: I, channel: &mut Channel, sink: &mut S) -> (bool, u64)
where
    S: TransmissionSink,
    I: Iterator<Item = NodeId>,
{
    let mut tx = 0;
    for sender in hops {
        let (cost, ok) = channel.hop();
        sink.send(sender, cost);
        tx += cost;
        if !ok {
            return (false, tx);
        }
    }
    (true, tx)
}

/// Charges a request/reply exchange over `route` (reply retraces the route).
///
/// A lost request means neither end updates; a lost reply means only the
/// responder updated.
pub fn charge_exchange<S: TransmissionSink>(
    route: &[NodeId],
    channel: &mut Channel,
    sink: &mut S,
    level: usize,
) -> ExchangeOutcome {
    let h = route.len().saturating_sub(1);
    if h == 0 {
        return ExchangeOutcome {
            delivered_forward: true,
            delivered_back: true,
            transmissions: 0,
        };
    }
    sink.message(level, h);
    let (fwd, tx_out) = push_leg(route[..h].iter().copied(), channel, sink);
    if !fwd {
        return ExchangeOutcome {
            delivered_forward: false,
            delivered_back: false,
            transmissions: tx_out,
        };
    }
    sink.message(level, h);
    let (back, tx_back) = push_leg(route[1..].iter().rev().copied(), channel, sink);
    ExchangeOutcome {
        delivered_forward: true,
        delivered_back: back,
        transmissions: tx_out + tx_back,
    }
}

/// Charges a one-way message over `route`; returns (delivered, transmissions).
pub fn charge_one_way<S: TransmissionSink>(
    route: &[NodeId],
    channel: &mut Channel,
    sink: &mut S,
    level: usize,
) -> (bool, u64) {
    let h = route.len().saturating_sub(1);
    if h == 0 {
        return (true, 0);
    }
    sink.message(level, h);
    push_leg(route[..h].iter().copied(), channel, sink)
}

/// Seeded convenience wrapper around [`charge_exchange`] for a whole route.
pub fn charge_route_exchange(route: &RoutePath, transport: FailureModel, seed: u64) -> ExchangeOutcome {
    let mut channel = Channel::new(transport, rng::stream(seed, Purpose::Channel, &[]));
    let mut sink = crate::ledger::NullSink::default();
    charge_exchange(&route.hops, &mut channel, &mut sink, 1)
}

/// Per-call accuracy so that the whole multiscale run reaches `delta`.
pub fn calibrate_epsilon(delta: f64, n: usize, k: usize) -> f64 {
    delta / (k as f64 * n as f64)
}

/// The set of participants a gossip invocation runs over: either an induced
/// subgraph of the physical graph (single-hop edges) or an overlay whose
/// logical edges carry multi-hop routes.
#[derive(Debug, Clone)]
pub struct ExchangeGraph {
    pub members: Vec<NodeId>,
    pub adj: Vec<Vec<usize>>,
    /// `routes[i][t]` realizes the edge from `i` to `adj[i][t]`; `None`
    /// means every edge is a single physical hop.
    routes: Option<Vec<Vec<RoutePath>>>,
}

impl ExchangeGraph {
    /// Subgraph of `graph` induced by `members` (any order, no duplicates).
    pub fn induced(graph: &GeoGraph, members: &[NodeId]) -> Self {
        let mut pos = std::collections::HashMap::with_capacity(members.len());
        for (i, &m) in members.iter().enumerate() {
            pos.insert(m, i);
        }
        let adj = members
            .iter()
            .map(|&m| graph.neighbors(m).iter().filter_map(|v| pos.get(v).copied()).collect())
            .collect();
        ExchangeGraph {
            members: members.to_vec(),
            adj,
            routes: None,
        }
    }

    pub fn whole(graph: &GeoGraph) -> Self {
        ExchangeGraph {
            members: (0..graph.n).collect(),
            adj: graph.adjacency.clone(),
            routes: None,
        }
    }

    /// Overlay over `members` with undirected logical `edges`; `routes[e]`
    /// holds the (a -> b, b -> a) physical routes for edge `e = (a, b)`.
    pub fn overlay(members: Vec<NodeId>, edges: &[(usize, usize)], routes: &[(RoutePath, RoutePath)]) -> Self {
        let p = members.len();
        let mut adj: Vec<Vec<usize>> = vec![Vec::new(); p];
        let mut r: Vec<Vec<RoutePath>> = vec![Vec::new(); p];
        for (&(a, b), (ab, ba)) in edges.iter().zip(routes) {
            adj[a].push(b);
            r[a].push(ab.clone());
            adj[b].push(a);
            r[b].push(ba.clone());
        }
        ExchangeGraph {
            members,
            adj,
            routes: Some(r),
        }
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn is_overlay(&self) -> bool {
        self.routes.is_some()
    }

    /// Physical hops realizing edge `t` out of participant `i`.
    pub fn route<'a>(&'a self, i: usize, t: usize, scratch: &'a mut [NodeId; 2]) -> &'a [NodeId] {
        match &self.routes {
            Some(r) => &r[i][t].hops,
            None => {
                *scratch = [self.members[i], self.members[self.adj[i][t]]];
                &scratch[..]
            }
        }
    }

    pub fn max_route_hops(&self) -> usize {
        match &self.routes {
            Some(r) => r.iter().flatten().map(RoutePath::hop_count).max().unwrap_or(0),
            None => usize::from(self.adj.iter().any(|a| !a.is_empty())),
        }
    }

    pub fn component_labels(&self) -> Vec<usize> {
        crate::topology::components_of(self.len(), |u| &self.adj[u])
    }

    /// Splits into connected components; each comes with the local indices
    /// (into `self`) of its participants.
    pub fn split_components(&self) -> Vec<(ExchangeGraph, Vec<usize>)> {
        let labels = self.component_labels();
        let count = labels.iter().copied().max().map_or(0, |m| m + 1);
        if count <= 1 {
            return vec![(self.clone(), (0..self.len()).collect())];
        }
        let mut local = vec![0usize; self.len()];
        let mut groups: Vec<Vec<usize>> = vec![Vec::new(); count];
        for (i, &l) in labels.iter().enumerate() {
            local[i] = groups[l].len();
            groups[l].push(i);
        }
        groups
            .into_iter()
            .map(|idx| {
                let members = idx.iter().map(|&i| self.members[i]).collect();
                let adj = idx
                    .iter()
                    .map(|&i| self.adj[i].iter().map(|&j| local[j]).collect())
                    .collect();
                let routes = self
                    .routes
                    .as_ref()
                    .map(|r| idx.iter().map(|&i| r[i].clone()).collect());
                (ExchangeGraph { members, adj, routes }, idx)
            })
            .collect()
    }
}

/// Parameters of one gossip invocation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GossipSpec {
    pub stop: StoppingRule,
    /// Abort once this many transmissions (or iterations) have been spent.
    pub cap: u64,
    /// Hierarchy level reported with every message (1 for flat runs).
    pub level: usize,
}

impl GossipSpec {
    pub fn new(stop: StoppingRule) -> Self {
        GossipSpec {
            stop,
            cap: DEFAULT_TRANSMISSION_CAP,
            level: 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GossipReport {
    pub iterations: u64,
    pub transmissions: u64,
    /// Oracle error at return.
    pub rel_error: f64,
    /// Smallest oracle error observed during the run.
    pub best_rel_error: f64,
    /// Stopped because a lossy channel had driven everyone to a common
    /// value that is not the true mean.
    pub distorted_consensus: bool,
    /// Largest `|sum x(t) - sum x(0)| / |sum x(0)|` seen after any iteration
    /// (absolute when the initial sum is zero).
    pub max_mass_drift: f64,
}

/// Running `sum (x - target)^2` and `sum (x - target)` with periodic exact
/// resynchronisation, so the oracle costs O(1) per iteration.
pub(crate) struct ErrorMonitor {
    target: f64,
    norm0: f64,
    sq: f64,
    sum: f64,
    p: f64,
}

impl ErrorMonitor {
    pub(crate) fn new(values: &[f64]) -> Self {
        let mut m = ErrorMonitor {
            target: mean(values),
            norm0: norm(values),
            sq: 0.0,
            sum: 0.0,
            p: values.len() as f64,
        };
        m.resync(values);
        m
    }

    pub(crate) fn resync(&mut self, values: &[f64]) {
        self.sq = values.iter().map(|x| (x - self.target) * (x - self.target)).sum();
        self.sum = values.iter().map(|x| x - self.target).sum();
    }

    #[inline]
    fn update(&mut self, old: f64, new: f64) {
        let (o, n) = (old - self.target, new - self.target);
        self.sq += n * n - o * o;
        self.sum += n - o;
    }

    fn ratio(&self, sq: f64) -> f64 {
        if self.norm0 == 0.0 {
            if sq <= 0.0 {
                0.0
            } else {
                f64::INFINITY
            }
        } else {
            sq.max(0.0).sqrt() / self.norm0
        }
    }

    pub(crate) fn rel(&self) -> f64 {
        self.ratio(self.sq)
    }

    /// Spread around the current (not the initial) mean.
    pub(crate) fn consensus_rel(&self) -> f64 {
        self.ratio(self.sq - self.sum * self.sum / self.p)
    }

    /// Exact check against the full vector; resyncs as a side effect.
    /// `Some(distorted)` means the run may stop.
    fn confirm(&mut self, values: &[f64], epsilon: f64, lossy: bool) -> Option<bool> {
        self.resync(values);
        if self.rel() <= epsilon {
            Some(false)
        } else if lossy && self.consensus_rel() <= epsilon {
            Some(true)
        } else {
            None
        }
    }
}

/// Neumaier-compensated running sum.
#[derive(Debug, Default, Clone, Copy)]
struct Compensated {
    sum: f64,
    c: f64,
}

impl Compensated {
    fn add(&mut self, v: f64) {
        let t = self.sum + v;
        if self.sum.abs() >= v.abs() {
            self.c += (self.sum - t) + v;
        } else {
            self.c += (v - t) + self.sum;
        }
        self.sum = t;
    }

    fn value(&self) -> f64 {
        self.sum + self.c
    }
}

/// Write access to the participant values for one iteration; keeps the
/// error monitor and the mass-drift account in step with every write.
pub(crate) struct Tracker<'a> {
    values: &'a mut [f64],
    monitor: &'a mut ErrorMonitor,
    drift: &'a mut Compensated,
}

/// Indexed read/write access to participant values.
pub(crate) trait Slots {
    fn get(&self, i: usize) -> f64;
    fn set(&mut self, i: usize, v: f64);
}

impl Slots for [f64] {
    #[inline]
    fn get(&self, i: usize) -> f64 {
        self[i]
    }

    #[inline]
    fn set(&mut self, i: usize, v: f64) {
        self[i] = v;
    }
}

impl Slots for Tracker<'_> {
    #[inline]
    fn get(&self, i: usize) -> f64 {
        self.values[i]
    }

    #[inline]
    fn set(&mut self, i: usize, new: f64) {
        let old = self.values[i];
        self.values[i] = new;
        self.monitor.update(old, new);
        self.drift.add(new - old);
    }
}

/// The iteration loop shared by every flat protocol. `step` performs one
/// iteration and returns the transmissions it charged.
pub(crate) fn drive<F>(
    values: &mut [f64],
    stop: StoppingRule,
    cap: u64,
    lossy: bool,
    mut step: F,
) -> Result<GossipReport>
where
    F: FnMut(&mut Tracker<'_>) -> u64,
{
    let p = values.len();
    let mut monitor = ErrorMonitor::new(values);
    let mut drift = Compensated::default();
    let sum0: f64 = values.iter().sum();
    let scale = if sum0 == 0.0 { 1.0 } else { sum0.abs() };
    let mut report = GossipReport {
        iterations: 0,
        transmissions: 0,
        rel_error: monitor.rel(),
        best_rel_error: monitor.rel(),
        distorted_consensus: false,
        max_mass_drift: 0.0,
    };
    let (epsilon, fixed) = match stop {
        StoppingRule::OracleEpsilon { epsilon } => (epsilon, None),
        StoppingRule::FixedIterations { iterations } => (f64::NAN, Some(iterations)),
    };
    if p == 0 {
        return Ok(report);
    }
    if fixed.is_none() {
        if let Some(d) = monitor.confirm(values, epsilon, lossy) {
            report.distorted_consensus = d;
            return Ok(report);
        }
    }
    let resync_every = (p as u64).max(64);
    loop {
        if let Some(t) = fixed {
            if report.iterations >= t {
                break;
            }
        } else if report.transmissions >= cap || report.iterations >= cap {
            monitor.resync(values);
            return Err(Error::BudgetExhausted {
                transmissions: report.transmissions,
                iterations: report.iterations,
                rel_error: monitor.rel(),
            });
        }
        report.iterations += 1;
        let mut tracker = Tracker {
            values,
            monitor: &mut monitor,
            drift: &mut drift,
        };
        report.transmissions += step(&mut tracker);
        report.max_mass_drift = report.max_mass_drift.max(drift.value().abs() / scale);
        if fixed.is_some() {
            continue;
        }
        if report.iterations.is_multiple_of(resync_every) {
            monitor.resync(values);
        }
        let rel = monitor.rel();
        report.best_rel_error = report.best_rel_error.min(rel);
        if rel <= epsilon || (lossy && monitor.consensus_rel() <= epsilon) {
            if let Some(d) = monitor.confirm(values, epsilon, lossy) {
                report.distorted_consensus = d;
                break;
            }
        }
    }
    monitor.resync(values);
    report.rel_error = monitor.rel();
    report.best_rel_error = report.best_rel_error.min(report.rel_error);
    Ok(report)
}

/// Runs randomized gossip over `view` on `values` (indexed like
/// `view.members`).
///
/// Under oracle stopping the run ends at the first iteration whose error
/// against the mean of the starting values is at most `epsilon`. On a lossy
/// channel it also ends once every participant agrees to within `epsilon`,
/// since lost mass can make the true mean unreachable.
pub fn gossip_on<S: TransmissionSink>(
    view: &ExchangeGraph,
    values: &mut [f64],
    spec: &GossipSpec,
    protocol: &mut SimRng,
    channel: &mut Channel,
    sink: &mut S,
) -> Result<GossipReport> {
    debug_assert_eq!(values.len(), view.len());
    let p = view.len();
    let lossy = channel.model().is_lossy();
    let mut scratch = [0usize; 2];
    drive(values, spec.stop, spec.cap, lossy, |x| {
        let i = protocol.random_range(0..p);
        let deg = view.adj[i].len();
        if deg == 0 {
            return 0;
        }
        let t = protocol.random_range(0..deg);
        let j = view.adj[i][t];
        let route = view.route(i, t, &mut scratch);
        let out = charge_exchange(route, channel, sink, spec.level);
        if out.delivered_forward {
            let avg = 0.5 * (x.get(i) + x.get(j));
            x.set(j, avg);
            if out.delivered_back {
                x.set(i, avg);
            }
        }
        out.transmissions
    })
}

/// Outcome of a flat (single-graph) gossip run.
#[derive(Debug, Clone)]
pub struct GossipOutcome {
    pub values: ValueVector,
    pub ledger: TransmissionLedger,
    pub report: GossipReport,
}

pub(crate) fn check_flat_inputs(
    graph: &GeoGraph,
    values: &ValueVector,
    stop: StoppingRule,
    transport: FailureModel,
) -> Result<()> {
    stop.validate()?;
    transport.validate()?;
    if values.len() != graph.n {
        return Err(Error::invalid("value vector length differs from node count"));
    }
    Ok(())
}

/// Plain randomized gossip over the whole physical graph.
pub fn randomized_gossip(
    graph: &GeoGraph,
    values: &ValueVector,
    stop: StoppingRule,
    transport: FailureModel,
    seed: u64,
) -> Result<GossipOutcome> {
    randomized_gossip_capped(graph, values, stop, transport, seed, DEFAULT_TRANSMISSION_CAP)
}

pub fn randomized_gossip_capped(
    graph: &GeoGraph,
    values: &ValueVector,
    stop: StoppingRule,
    transport: FailureModel,
    seed: u64,
    cap: u64,
) -> Result<GossipOutcome> {
    check_flat_inputs(graph, values, stop, transport)?;
    let view = ExchangeGraph::whole(graph);
    let mut protocol = rng::stream(seed, Purpose::Protocol, &[]);
    let mut channel = Channel::new(transport, rng::stream(seed, Purpose::Channel, &[]));
    let mut ledger = TransmissionLedger::new(graph.n);
    let mut out = values.clone();
    let spec = GossipSpec {
        cap,
        ..GossipSpec::new(stop)
    };
    let report = gossip_on(&view, &mut out.current, &spec, &mut protocol, &mut channel, &mut ledger)?;
    Ok(GossipOutcome {
        values: out,
        ledger,
        report,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ledger::NullSink;
    use crate::topology::Point;

    fn path_graph(values: usize) -> GeoGraph {
        let coords = (0..values).map(|i| Point::new(0.1 * i as f64, 0.5)).collect();
        GeoGraph::from_coords(coords, 0.11).unwrap()
    }

    #[test]
    fn constant_vector_needs_no_work() {
        let g = GeoGraph::generate(30, 3.0, 1).unwrap();
        let v = ValueVector::new(vec![0.7; 30]).unwrap();
        let out = randomized_gossip(&g, &v, StoppingRule::oracle(1e-4), FailureModel::Reliable, 3).unwrap();
        assert_eq!(out.report.iterations, 0);
        assert_eq!(out.ledger.total, 0);
    }

    #[test]
    fn two_nodes_average_in_one_exchange() {
        let g = path_graph(2);
        let v = ValueVector::new(vec![0.0, 2.0]).unwrap();
        let out = randomized_gossip(&g, &v, StoppingRule::fixed(1), FailureModel::Reliable, 0).unwrap();
        assert_eq!(out.values.current, vec![1.0, 1.0]);
        assert_eq!(out.ledger.total, 2);
        assert_eq!(out.ledger.per_node_sends, vec![1, 1]);
    }

    #[test]
    fn charge_exchange_reliable_and_handshake_one() {
        let route = RoutePath {
            hops: vec![4],
            recovered: false,
        };
        assert_eq!(
            charge_route_exchange(&route, FailureModel::Reliable, 0).transmissions,
            0
        );
        let route = RoutePath {
            hops: vec![4, 9],
            recovered: false,
        };
        assert_eq!(
            charge_route_exchange(&route, FailureModel::Reliable, 0).transmissions,
            2
        );
        for hops in 1..6 {
            let route = RoutePath {
                hops: (0..=hops).collect(),
                recovered: false,
            };
            for seed in 0..5 {
                let a = charge_route_exchange(&route, FailureModel::Reliable, seed);
                let b = charge_route_exchange(&route, FailureModel::Handshake { p: 1.0 }, seed);
                assert_eq!(a, b);
            }
        }
    }

    #[test]
    fn handshake_mean_cost_matches_geometric_expectation() {
        // E[cost] = 2 * hops / p.
        let route: Vec<NodeId> = vec![0, 1, 2, 3];
        let mut channel = Channel::new(
            FailureModel::Handshake { p: 0.5 },
            rng::stream(99, Purpose::Channel, &[]),
        );
        let mut sink = NullSink::default();
        let draws = 100_000;
        let total: u64 = (0..draws)
            .map(|_| charge_exchange(&route, &mut channel, &mut sink, 1).transmissions)
            .sum();
        let mean = total as f64 / draws as f64;
        assert!((mean - 12.0).abs() / 12.0 < 0.02, "mean {mean}");
    }

    #[test]
    fn lossy_legs() {
        let route: Vec<NodeId> = vec![0, 1, 2];
        let mut channel = Channel::new(FailureModel::Lossy { p: 0.5 }, rng::stream(5, Purpose::Channel, &[]));
        let mut sink = NullSink::default();
        let mut seen = [false; 3];
        for _ in 0..500 {
            let o = charge_exchange(&route, &mut channel, &mut sink, 1);
            match (o.delivered_forward, o.delivered_back) {
                (false, false) => {
                    seen[0] = true;
                    assert!(o.transmissions <= 2);
                }
                (true, false) => {
                    seen[1] = true;
                    assert!(o.transmissions >= 3);
                }
                (true, true) => {
                    seen[2] = true;
                    assert_eq!(o.transmissions, 4);
                }
                (false, true) => unreachable!(),
            }
        }
        assert!(seen.iter().all(|&s| s));
    }

    #[test]
    fn lossy_with_p_one_is_reliable() {
        let g = GeoGraph::generate_connected(60, 3.0, 2, 100).unwrap();
        let mut rng = rng::stream(1, Purpose::InitialValues, &[]);
        let v = ValueVector::new((0..60).map(|_| rng.random::<f64>()).collect()).unwrap();
        let a = randomized_gossip(&g, &v, StoppingRule::oracle(1e-3), FailureModel::Reliable, 8).unwrap();
        let b = randomized_gossip(&g, &v, StoppingRule::oracle(1e-3), FailureModel::Lossy { p: 1.0 }, 8).unwrap();
        assert_eq!(a.values, b.values);
        assert_eq!(a.ledger, b.ledger);
    }

    #[test]
    fn oracle_stop_is_exact_and_mass_is_conserved() {
        let g = GeoGraph::generate_connected(80, 3.0, 3, 100).unwrap();
        let mut rng = rng::stream(2, Purpose::InitialValues, &[]);
        let v = ValueVector::new((0..80).map(|_| rng.random::<f64>()).collect()).unwrap();
        let out = randomized_gossip(&g, &v, StoppingRule::oracle(1e-4), FailureModel::Reliable, 4).unwrap();
        assert!(out.values.rel_error() <= 1e-4);
        let s0: f64 = v.initial.iter().sum();
        let s1: f64 = out.values.current.iter().sum();
        assert!((s1 - s0).abs() / s0.abs() < 1e-12);
        assert_eq!(out.ledger.total, out.report.transmissions);
        assert_eq!(out.ledger.per_node_sends.iter().sum::<u64>(), out.ledger.total);
    }

    #[test]
    fn disconnected_oracle_run_hits_the_cap() {
        let g = GeoGraph::from_coords(vec![Point::new(0.1, 0.1), Point::new(0.9, 0.9)], 0.1).unwrap();
        let view = ExchangeGraph::whole(&g);
        let mut values = vec![0.0, 1.0];
        let mut spec = GossipSpec::new(StoppingRule::oracle(1e-3));
        spec.cap = 1000;
        let mut protocol = rng::stream(0, Purpose::Protocol, &[]);
        let mut channel = Channel::new(FailureModel::Reliable, rng::stream(0, Purpose::Channel, &[]));
        let r = gossip_on(
            &view,
            &mut values,
            &spec,
            &mut protocol,
            &mut channel,
            &mut NullSink::default(),
        );
        assert!(matches!(r, Err(Error::BudgetExhausted { .. })));
    }

    #[test]
    fn calibrated_epsilon() {
        assert!((calibrate_epsilon(0.01, 1000, 4) - 2.5e-6).abs() < 1e-18);
        assert_eq!(calibrate_epsilon(4000.0, 1000, 4), 1.0);
    }

    /// Independent re-simulation of the 3-node path chain: a plain loop over
    /// the update rule with its own random source.
    fn chain_oracle_iterations(trials: u64) -> f64 {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha20Rng::seed_from_u64(1234);
        let norm0 = 3.0f64;
        let mut total = 0u64;
        for _ in 0..trials {
            let mut x = [0.0f64, 0.0, 3.0];
            let mut it = 0u64;
            loop {
                let dev = x.iter().map(|v| (v - 1.0) * (v - 1.0)).sum::<f64>().sqrt();
                if dev / norm0 <= 1e-2 {
                    break;
                }
                it += 1;
                let i = rng.random_range(0..3usize);
                let j = match i {
                    0 => 1,
                    2 => 1,
                    _ => {
                        if rng.random::<bool>() {
                            0
                        } else {
                            2
                        }
                    }
                };
                let a = 0.5 * (x[i] + x[j]);
                x[i] = a;
                x[j] = a;
            }
            total += it;
        }
        total as f64 / trials as f64
    }

    #[test]
    fn path_chain_iterations_match_monte_carlo_oracle() {
        let g = path_graph(3);
        let v = ValueVector::new(vec![0.0, 0.0, 3.0]).unwrap();
        let trials = 10_000u64;
        let engine: u64 = (0..trials)
            .map(|s| {
                randomized_gossip(&g, &v, StoppingRule::oracle(1e-2), FailureModel::Reliable, s)
                    .unwrap()
                    .report
                    .iterations
            })
            .sum();
        let engine_mean = engine as f64 / trials as f64;
        let oracle_mean = chain_oracle_iterations(trials);
        assert!(
            (engine_mean - oracle_mean).abs() / oracle_mean < 0.05,
            "engine {engine_mean} vs oracle {oracle_mean}"
        );
    }

    #[test]
    fn split_components_covers_all_participants() {
        let coords = vec![
            Point::new(0.1, 0.1),
            Point::new(0.15, 0.1),
            Point::new(0.8, 0.8),
            Point::new(0.85, 0.8),
            Point::new(0.5, 0.1),
        ];
        let g = GeoGraph::from_coords(coords, 0.1).unwrap();
        let view = ExchangeGraph::induced(&g, &[0, 1, 2, 3, 4]);
        let parts = view.split_components();
        assert_eq!(parts.len(), 3);
        let mut seen: Vec<usize> = parts.iter().flat_map(|(_, idx)| idx.clone()).collect();
        seen.sort();
        assert_eq!(seen, vec![0, 1, 2, 3, 4]);
    }
}
