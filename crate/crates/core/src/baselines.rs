//! Flat comparison protocols that route to random points of the square.
//!
//! Both pick a uniformly random activating node and a uniformly random
//! target point per iteration, then greedily route towards the target.
//! Geographic gossip averages the two endpoints; path averaging averages
//! every node on the route.

use rand::Rng;

use crate::error::Result;
use crate::gossip::{
    charge_exchange, check_flat_inputs, drive, Channel, FailureModel, GossipOutcome, Slots, StoppingRule, ValueVector,
    DEFAULT_TRANSMISSION_CAP,
};
use crate::ledger::{TransmissionLedger, TransmissionSink};
use crate::rng::{self, Purpose, SimRng};
use crate::topology::{GeoGraph, NodeId, Point, RoutePath};

/// One path-averaging iteration as seen from outside.
#[derive(Debug, Clone, PartialEq)]
pub struct PathIterationRecord {
    pub source: NodeId,
    pub target_point: Point,
    pub path: RoutePath,
    pub updated_nodes: Vec<NodeId>,
    pub transmissions_charged: u64,
}

/// Accumulates along `route`, averages at its end and carries the average
/// back; each node adopts it as the reply passes. Returns the updated nodes
/// (destination first) and the transmissions charged.
pub fn path_average_step<S: TransmissionSink>(
    route: &[NodeId],
    values: &mut [f64],
    channel: &mut Channel,
    sink: &mut S,
) -> (Vec<NodeId>, u64) {
    let mut updated = Vec::new();
    let tx = path_average_on(route, values, channel, sink, Some(&mut updated));
    (updated, tx)
}

fn path_average_on<S, V>(
    route: &[NodeId],
    values: &mut V,
    channel: &mut Channel,
    sink: &mut S,
    mut updated: Option<&mut Vec<NodeId>>,
) -> u64
where
    S: TransmissionSink,
    V: Slots + ?Sized,
{
    let h = route.len().saturating_sub(1);
    if h == 0 {
        return 0;
    }
    let mut tx = 0;
    sink.message(1, h);
    for &sender in &route[..h] {
        let (cost, ok) = channel.hop();
        sink.send(sender, cost);
        tx += cost;
        if !ok {
            return tx;
        }
    }
    let avg = route.iter().map(|&v| values.get(v)).sum::<f64>() / route.len() as f64;
    let mut adopt = |node: NodeId, values: &mut V| {
        values.set(node, avg);
        if let Some(u) = updated.as_deref_mut() {
            u.push(node);
        }
    };
    adopt(route[h], values);
    sink.message(1, h);
    for t in (1..=h).rev() {
        let (cost, ok) = channel.hop();
        sink.send(route[t], cost);
        tx += cost;
        if !ok {
            return tx;
        }
        adopt(route[t - 1], values);
    }
    tx
}

fn random_target(rng: &mut SimRng) -> Point {
    Point::new(rng.random::<f64>(), rng.random::<f64>())
}

pub fn path_averaging(
    graph: &GeoGraph,
    values: &ValueVector,
    stop: StoppingRule,
    transport: FailureModel,
    seed: u64,
) -> Result<GossipOutcome> {
    path_averaging_capped(graph, values, stop, transport, seed, DEFAULT_TRANSMISSION_CAP)
}

pub fn path_averaging_capped(
    graph: &GeoGraph,
    values: &ValueVector,
    stop: StoppingRule,
    transport: FailureModel,
    seed: u64,
    cap: u64,
) -> Result<GossipOutcome> {
    check_flat_inputs(graph, values, stop, transport)?;
    let mut protocol = rng::stream(seed, Purpose::Protocol, &[]);
    let mut channel = Channel::new(transport, rng::stream(seed, Purpose::Channel, &[]));
    let mut ledger = TransmissionLedger::new(graph.n);
    let mut out = values.clone();
    let n = graph.n;
    let report = drive(&mut out.current, stop, cap, transport.is_lossy(), |x| {
        let source = protocol.random_range(0..n);
        let target = random_target(&mut protocol);
        let route = graph.greedy_route(source, target);
        path_average_on(&route.hops, x, &mut channel, &mut ledger, None)
    })?;
    Ok(GossipOutcome {
        values: out,
        ledger,
        report,
    })
}

/// Runs `iterations` path-averaging iterations and returns what each did.
pub fn path_averaging_trace(
    graph: &GeoGraph,
    values: &mut ValueVector,
    iterations: usize,
    transport: FailureModel,
    seed: u64,
) -> Vec<PathIterationRecord> {
    let mut protocol = rng::stream(seed, Purpose::Protocol, &[]);
    let mut channel = Channel::new(transport, rng::stream(seed, Purpose::Channel, &[]));
    let mut sink = crate::ledger::NullSink::default();
    (0..iterations)
        .map(|_| {
            let source = protocol.random_range(0..graph.n);
            let target_point = random_target(&mut protocol);
            let path = graph.greedy_route(source, target_point);
            let (updated_nodes, transmissions_charged) =
                path_average_step(&path.hops, &mut values.current, &mut channel, &mut sink);
            PathIterationRecord {
                source,
                target_point,
                path,
                updated_nodes,
                transmissions_charged,
            }
        })
        .collect()
}

pub fn geographic_gossip(
    graph: &GeoGraph,
    values: &ValueVector,
    stop: StoppingRule,
    transport: FailureModel,
    seed: u64,
) -> Result<GossipOutcome> {
    geographic_gossip_capped(graph, values, stop, transport, seed, DEFAULT_TRANSMISSION_CAP)
}

pub fn geographic_gossip_capped(
    graph: &GeoGraph,
    values: &ValueVector,
    stop: StoppingRule,
    transport: FailureModel,
    seed: u64,
    cap: u64,
) -> Result<GossipOutcome> {
    check_flat_inputs(graph, values, stop, transport)?;
    let mut protocol = rng::stream(seed, Purpose::Protocol, &[]);
    let mut channel = Channel::new(transport, rng::stream(seed, Purpose::Channel, &[]));
    let mut ledger = TransmissionLedger::new(graph.n);
    let mut out = values.clone();
    let n = graph.n;
    let report = drive(&mut out.current, stop, cap, transport.is_lossy(), |x| {
        let source = protocol.random_range(0..n);
        let target = random_target(&mut protocol);
        let route = graph.greedy_route(source, target);
        let o = charge_exchange(&route.hops, &mut channel, &mut ledger, 1);
        let dest = route.destination();
        if dest != source && o.delivered_forward {
            let avg = 0.5 * (x.get(source) + x.get(dest));
            x.set(dest, avg);
            if o.delivered_back {
                x.set(source, avg);
            }
        }
        o.transmissions
    })?;
    Ok(GossipOutcome {
        values: out,
        ledger,
        report,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn uniform(n: usize, seed: u64) -> ValueVector {
        let mut rng = rng::stream(seed, Purpose::InitialValues, &[]);
        ValueVector::new((0..n).map(|_| rng.random::<f64>()).collect()).unwrap()
    }

    #[test]
    fn constant_values_need_no_iterations() {
        let g = GeoGraph::generate_connected(100, 3.0, 1, 100).unwrap();
        let v = ValueVector::new(vec![2.0; 100]).unwrap();
        for out in [
            path_averaging(&g, &v, StoppingRule::oracle(1e-4), FailureModel::Reliable, 0).unwrap(),
            geographic_gossip(&g, &v, StoppingRule::oracle(1e-4), FailureModel::Reliable, 0).unwrap(),
        ] {
            assert_eq!(out.report.iterations, 0);
            assert_eq!(out.ledger.total, 0);
        }
    }

    #[test]
    fn hand_traced_path_average() {
        let coords = vec![Point::new(0.0, 0.5), Point::new(0.05, 0.5), Point::new(0.10, 0.5)];
        let g = GeoGraph::from_coords(coords, 0.06).unwrap();
        let route = g.greedy_route(0, Point::new(0.10, 0.5));
        assert_eq!(route.hops, vec![0, 1, 2]);
        let mut x = vec![0.0, 3.0, 6.0];
        let mut channel = Channel::new(FailureModel::Reliable, rng::stream(0, Purpose::Channel, &[]));
        let mut ledger = TransmissionLedger::new(3);
        let (updated, tx) = path_average_step(&route.hops, &mut x, &mut channel, &mut ledger);
        assert_eq!(x, vec![3.0, 3.0, 3.0]);
        assert_eq!(tx, 4);
        assert_eq!(updated, vec![2, 1, 0]);
        assert_eq!(ledger.per_node_sends, vec![1, 2, 1]);
    }

    #[test]
    fn lossy_return_updates_a_suffix() {
        let route: Vec<NodeId> = (0..6).collect();
        let mut channel = Channel::new(FailureModel::Lossy { p: 0.8 }, rng::stream(4, Purpose::Channel, &[]));
        let mut sink = crate::ledger::NullSink::default();
        for _ in 0..300 {
            let mut x: Vec<f64> = (0..6).map(f64::from).collect();
            let (updated, _) = path_average_step(&route, &mut x, &mut channel, &mut sink);
            // Updates run from the destination back towards the source.
            let expect: Vec<NodeId> = (0..6).rev().take(updated.len()).collect();
            assert_eq!(updated, expect);
        }
    }

    #[test]
    fn update_sets_and_mass() {
        let g = GeoGraph::generate_connected(150, 3.0, 2, 100).unwrap();
        let mut v = uniform(150, 1);
        let s0: f64 = v.current.iter().sum();
        for rec in path_averaging_trace(&g, &mut v, 200, FailureModel::Reliable, 3) {
            let mut got = rec.updated_nodes.clone();
            got.sort();
            let mut want = if rec.path.hop_count() == 0 {
                vec![]
            } else {
                rec.path.hops.clone()
            };
            want.sort();
            assert_eq!(got, want);
            assert_eq!(rec.transmissions_charged, 2 * rec.path.hop_count() as u64);
        }
        let s1: f64 = v.current.iter().sum();
        assert!((s1 - s0).abs() / s0 < 1e-12);
    }

    #[test]
    fn both_baselines_converge_and_conserve_mass() {
        let g = GeoGraph::generate_connected(120, 3.0, 5, 100).unwrap();
        let v = uniform(120, 5);
        for out in [
            path_averaging(&g, &v, StoppingRule::oracle(1e-4), FailureModel::Reliable, 1).unwrap(),
            geographic_gossip(&g, &v, StoppingRule::oracle(1e-4), FailureModel::Reliable, 1).unwrap(),
        ] {
            assert!(out.values.rel_error() <= 1e-4);
            assert!(out.report.max_mass_drift <= 1e-10);
            assert_eq!(out.ledger.per_node_sends.iter().sum::<u64>(), out.ledger.total);
        }
    }

    #[test]
    fn two_node_geographic_exchange() {
        let coords = vec![Point::new(0.25, 0.5), Point::new(0.75, 0.5)];
        let g = GeoGraph::from_coords(coords, 0.6).unwrap();
        let v = ValueVector::new(vec![0.0, 2.0]).unwrap();
        for seed in 0..20 {
            let out = geographic_gossip(&g, &v, StoppingRule::fixed(1), FailureModel::Reliable, seed).unwrap();
            let x = &out.values.current;
            assert!(x == &vec![1.0, 1.0] || x == &vec![0.0, 2.0]);
            assert_eq!(out.ledger.total == 2, x == &vec![1.0, 1.0]);
        }
    }
}
