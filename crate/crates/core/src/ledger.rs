//! Single-hop transmission accounting.
//!
//! A logical message routed over `h` hops costs at least `h` single-hop
//! transmissions, each charged to the node that transmits it (relays
//! included). The ledger is the primary performance measurement of every
//! algorithm in the crate.

use std::collections::BTreeMap;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::topology::{NodeId, Point};

/// Anything that can absorb transmission charges.
pub trait TransmissionSink {
    /// `count` single-hop transmissions sent by `node`.
    fn send(&mut self, node: NodeId, count: u64);
    /// A logical message of `hops` hops was put on the air at hierarchy
    /// `level` (baselines use level 1).
    fn message(&mut self, level: usize, hops: usize);
}

/// Per-phase accounting; phases are appended in execution order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Phase {
    pub label: String,
    pub transmissions: u64,
    pub messages: u64,
    pub max_hops: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TransmissionLedger {
    pub total: u64,
    pub per_node_sends: Vec<u64>,
    pub max_hops_seen: usize,
    /// Largest hop count of any logical message, keyed by hierarchy level.
    pub max_hops_by_level: BTreeMap<usize, usize>,
    pub messages: u64,
    pub phases: Vec<Phase>,
}

impl TransmissionLedger {
    pub fn new(n: usize) -> Self {
        TransmissionLedger {
            total: 0,
            per_node_sends: vec![0; n],
            max_hops_seen: 0,
            max_hops_by_level: BTreeMap::new(),
            messages: 0,
            phases: Vec::new(),
        }
    }

    /// Opens a new accounting phase; charges go to the most recent phase.
    pub fn begin_phase(&mut self, label: impl Into<String>) {
        self.phases.push(Phase {
            label: label.into(),
            transmissions: 0,
            messages: 0,
            max_hops: 0,
        });
    }

    pub fn phase_total(&self, label: &str) -> u64 {
        self.phases
            .iter()
            .filter(|p| p.label == label)
            .map(|p| p.transmissions)
            .sum()
    }

    /// Folds a sparse tally produced by an independent task into the ledger.
    pub fn absorb(&mut self, tally: &SparseTally) {
        for &(node, count) in &tally.sends {
            self.send(node, count);
        }
        for (&level, &hops) in &tally.max_hops_by_level {
            self.record_hops(level, hops);
        }
        self.messages += tally.messages;
        if let Some(p) = self.phases.last_mut() {
            p.messages += tally.messages;
        }
    }

    fn record_hops(&mut self, level: usize, hops: usize) {
        self.max_hops_seen = self.max_hops_seen.max(hops);
        let e = self.max_hops_by_level.entry(level).or_insert(0);
        *e = (*e).max(hops);
        if let Some(p) = self.phases.last_mut() {
            p.max_hops = p.max_hops.max(hops);
        }
    }

    pub fn is_consistent(&self) -> bool {
        let phases_ok =
            self.phases.is_empty() || self.phases.iter().map(|p| p.transmissions).sum::<u64>() == self.total;
        phases_ok && self.per_node_sends.iter().sum::<u64>() == self.total
    }

    /// Transmission counts binned on a `bins x bins` grid over the unit
    /// square, by the location of the transmitting node.
    pub fn per_location(&self, coords: &[Point], bins: usize) -> Vec<Vec<u64>> {
        let mut grid = vec![vec![0u64; bins]; bins];
        for (node, &sends) in self.per_node_sends.iter().enumerate() {
            let (row, col) = spatial_bin(coords[node], bins);
            grid[row][col] += sends;
        }
        grid
    }

    /// `node_id,sends` rows.
    pub fn write_node_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["node_id", "sends"])?;
        for (i, s) in self.per_node_sends.iter().enumerate() {
            out.write_record([i.to_string(), s.to_string()])?;
        }
        out.flush()?;
        Ok(())
    }
}

impl TransmissionSink for TransmissionLedger {
    fn send(&mut self, node: NodeId, count: u64) {
        self.per_node_sends[node] += count;
        self.total += count;
        if let Some(p) = self.phases.last_mut() {
            p.transmissions += count;
        }
    }

    fn message(&mut self, level: usize, hops: usize) {
        self.messages += 1;
        if let Some(p) = self.phases.last_mut() {
            p.messages += 1;
        }
        self.record_hops(level, hops);
    }
}

/// Append-only charge log for work items that run independently of the main
/// ledger (e.g. one cell's gossip). Merging is order-independent.
#[derive(Debug, Clone, Default)]
pub struct SparseTally {
    pub sends: Vec<(NodeId, u64)>,
    pub total: u64,
    pub messages: u64,
    pub max_hops_by_level: BTreeMap<usize, usize>,
}

impl TransmissionSink for SparseTally {
    fn send(&mut self, node: NodeId, count: u64) {
        if count == 0 {
            return;
        }
        match self.sends.last_mut() {
            Some((last, c)) if *last == node => *c += count,
            _ => self.sends.push((node, count)),
        }
        self.total += count;
    }

    fn message(&mut self, level: usize, hops: usize) {
        self.messages += 1;
        let e = self.max_hops_by_level.entry(level).or_insert(0);
        *e = (*e).max(hops);
    }
}

/// Discards charges; handy for probing algorithm dynamics in tests.
#[derive(Debug, Default, Clone, Copy)]
pub struct NullSink {
    pub total: u64,
}

impl TransmissionSink for NullSink {
    fn send(&mut self, _node: NodeId, count: u64) {
        self.total += count;
    }
    fn message(&mut self, _level: usize, _hops: usize) {}
}

/// Row-major bin of `p` on a `bins x bins` grid (row = y).
pub fn spatial_bin(p: Point, bins: usize) -> (usize, usize) {
    let col = ((p.x * bins as f64) as usize).min(bins - 1);
    let row = ((p.y * bins as f64) as usize).min(bins - 1);
    (row, col)
}

/// Normalizes a count grid so its entries sum to one (all-zero stays zero).
pub fn normalize_grid(grid: &[Vec<u64>]) -> Vec<Vec<f64>> {
    let total: u64 = grid.iter().flatten().sum();
    grid.iter()
        .map(|row| {
            row.iter()
                .map(|&c| if total == 0 { 0.0 } else { c as f64 / total as f64 })
                .collect()
        })
        .collect()
}

/// Writes a row-major grid as CSV without a header.
pub fn write_grid_csv<W: Write>(grid: &[Vec<f64>], w: W) -> Result<()> {
    let mut out = csv::WriterBuilder::new().has_headers(false).from_writer(w);
    for row in grid {
        out.write_record(row.iter().map(|v| format!("{v:.9e}")))?;
    }
    out.flush()?;
    Ok(())
}

/// Mass in the central square covering `area_fraction` of the unit square,
/// divided by the mass that region would hold under a uniform spread.
pub fn central_excess(grid: &[Vec<f64>], area_fraction: f64) -> f64 {
    let bins = grid.len();
    let total: f64 = grid.iter().flatten().sum();
    if total == 0.0 {
        return 0.0;
    }
    let half = area_fraction.sqrt() / 2.0;
    let (lo, hi) = (0.5 - half, 0.5 + half);
    let mut mass = 0.0;
    let mut count = 0usize;
    for (r, row) in grid.iter().enumerate() {
        let cy = (r as f64 + 0.5) / bins as f64;
        for (c, &v) in row.iter().enumerate() {
            let cx = (c as f64 + 0.5) / bins as f64;
            if (lo..hi).contains(&cx) && (lo..hi).contains(&cy) {
                mass += v;
                count += 1;
            }
        }
    }
    if count == 0 {
        return 0.0;
    }
    let mean_bin = total / (bins * bins) as f64;
    (mass / count as f64) / mean_bin
}
