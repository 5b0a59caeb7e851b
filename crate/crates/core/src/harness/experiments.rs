//! Experiment runners. Each experiment expands its config into independent
//! runs, executes them on the worker pool and folds the results into a
//! report. A failing run becomes a [`RunFailure`]; the rest of the sweep
//! carries on.

use std::collections::BTreeMap;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::config::{Algorithm, ExperimentConfig, ExperimentId, InitMode, RUN_STRIDE};
use crate::baselines::{geographic_gossip_capped, path_averaging_capped};
use crate::error::{Error, Result};
use crate::gossip::DEFAULT_TRANSMISSION_CAP;
use crate::gossip::{randomized_gossip_capped, FailureModel, GossipOutcome, StoppingRule, ValueVector};
use crate::ledger::{central_excess, normalize_grid, TransmissionLedger};
use crate::multiscale::{multiscale_gossip, LevelSpec, MultiscaleConfig, StoppingMode};
use crate::partition::Hierarchy;
use crate::rng::{self, Purpose};
use crate::topology::GeoGraph;
use crate::{par, theory};

/// Area fraction of the central region used for the heatmap excess.
pub const CENTRAL_AREA: f64 = 0.2;

/// One run. Flat algorithms report `k = 1` and `a = 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRow {
    pub experiment: String,
    pub algorithm: String,
    pub n: usize,
    pub k: usize,
    pub a: f64,
    pub epsilon: f64,
    pub p: f64,
    pub seed: u64,
    pub total_transmissions: u64,
    pub final_rel_error: f64,
    pub max_hops: usize,
    pub iterations: u64,
    pub duration: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunFailure {
    pub algorithm: String,
    pub n: usize,
    pub p: f64,
    pub seed: u64,
    pub message: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Stats {
    pub mean: f64,
    /// Sample standard deviation; zero for a single value.
    pub std: f64,
    pub min: f64,
    pub max: f64,
}

impl Stats {
    pub fn of(xs: &[f64]) -> Option<Stats> {
        if xs.is_empty() {
            return None;
        }
        let m = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / m;
        let var = if xs.len() > 1 {
            xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (m - 1.0)
        } else {
            0.0
        };
        Some(Stats {
            mean,
            std: var.sqrt(),
            min: xs.iter().copied().fold(f64::INFINITY, f64::min),
            max: xs.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        })
    }
}

/// Seed aggregate for one `(algorithm, n, k, p)` point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateRow {
    pub algorithm: String,
    pub n: usize,
    pub k: usize,
    pub p: f64,
    pub runs: usize,
    pub total_mean: f64,
    pub total_std: f64,
    pub total_min: f64,
    pub total_max: f64,
    pub error_mean: f64,
    pub error_std: f64,
    pub error_min: f64,
    pub error_max: f64,
    pub max_hops: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeRow {
    pub algorithm: String,
    pub n: usize,
    pub seed: u64,
    pub node_id: usize,
    pub sends: u64,
    pub representative_roles: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CdfSeed {
    pub n: usize,
    pub seed: u64,
    pub multiscale_max: u64,
    /// Fraction of path-averaging nodes sending at most `multiscale_max`.
    pub path_fraction_at_or_below: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CdfPoint {
    pub algorithm: String,
    pub n: usize,
    pub sends: u64,
    pub fraction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CdfDetail {
    pub per_seed: Vec<CdfSeed>,
    pub mean_fraction: f64,
    /// Empirical CDF of per-node sends, pooled over seeds.
    pub curve: Vec<CdfPoint>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeatGrid {
    pub algorithm: String,
    pub n: usize,
    pub runs: usize,
    pub central_excess: f64,
    /// Row-major, row = y bin; averaged per-run normalized mass.
    pub grid: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassRow {
    pub class: String,
    /// Times a node served as representative; empty for the all-nodes row.
    pub representative_roles: Option<u32>,
    pub nodes: usize,
    pub mean: f64,
    pub std: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitPoint {
    pub algorithm: String,
    pub p: f64,
    pub n: usize,
    pub k: usize,
    pub total_mean: f64,
    /// Largest per-level cost exponent predicted for this hierarchy.
    pub predicted_exponent: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlopeRow {
    pub algorithm: String,
    pub p: f64,
    pub slope: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitDetail {
    pub points: Vec<FitPoint>,
    pub slopes: Vec<SlopeRow>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct HopCheck {
    pub runs_checked: usize,
    pub violations: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub experiment: ExperimentId,
    pub init: InitMode,
    pub config: ExperimentConfig,
    pub rows: Vec<RunRow>,
    pub failures: Vec<RunFailure>,
    /// Runs that stopped on their transmission budget (loss experiment).
    pub budget_exhausted: Vec<String>,
    pub summary: Vec<AggregateRow>,
    pub hop_check: HopCheck,
    pub nodes: Vec<NodeRow>,
    pub cdf: Option<CdfDetail>,
    pub heatmaps: Vec<HeatGrid>,
    pub classes: Vec<ClassRow>,
    pub fit: Option<FitDetail>,
}

impl ExperimentReport {
    pub fn summary_for(&self, algorithm: Algorithm, n: usize, p: f64) -> Vec<&AggregateRow> {
        self.summary
            .iter()
            .filter(|s| s.algorithm == algorithm.name() && s.n == n && s.p == p)
            .collect()
    }

    pub fn heatmap(&self, algorithm: Algorithm, n: usize) -> Option<&HeatGrid> {
        self.heatmaps
            .iter()
            .find(|h| h.algorithm == algorithm.name() && h.n == n)
    }

    pub fn slope(&self, algorithm: Algorithm, p: f64) -> Option<f64> {
        self.fit
            .as_ref()?
            .slopes
            .iter()
            .find(|s| s.algorithm == algorithm.name() && s.p == p)?
            .slope
    }
}

/// Initial field for `n` nodes, drawn from the run seed's own stream.
pub fn initial_values(n: usize, seed: u64, mode: InitMode) -> ValueVector {
    let mut r = rng::stream(seed, Purpose::InitialValues, &[n as u64]);
    let x = match mode {
        InitMode::Uniform => (0..n).map(|_| r.random::<f64>()).collect(),
        InitMode::Spike => {
            let hot = r.random_range(0..n);
            (0..n).map(|i| if i == hot { 1.0 } else { 0.0 }).collect()
        }
    };
    ValueVector::new(x).expect("finite initial values")
}

#[derive(Debug, Clone, Copy)]
struct Task {
    n: usize,
    graph_seed: u64,
    run_seed: u64,
    algorithm: Algorithm,
    k: Option<usize>,
    p: f64,
    transport: FailureModel,
    budget: u64,
}

impl Task {
    fn new(n: usize, seed: u64, algorithm: Algorithm, k: Option<usize>) -> Task {
        Task {
            n,
            graph_seed: seed,
            run_seed: seed,
            algorithm,
            k,
            p: 1.0,
            transport: FailureModel::Reliable,
            budget: DEFAULT_TRANSMISSION_CAP,
        }
    }

    fn failure(&self, message: String) -> RunFailure {
        RunFailure {
            algorithm: self.algorithm.name().to_string(),
            n: self.n,
            p: self.p,
            seed: self.run_seed,
            message,
        }
    }
}

struct Execution {
    task: Task,
    row: RunRow,
    sends: Vec<u64>,
    roles: Vec<u32>,
    grid: Option<Vec<Vec<f64>>>,
    violations: Vec<(usize, usize, usize)>,
    exhausted: bool,
}

fn multiscale_config(cfg: &ExperimentConfig, task: &Task) -> MultiscaleConfig {
    let levels = match (task.algorithm, task.k) {
        (Algorithm::TwoLevel, _) => LevelSpec::Fixed { k: 2 },
        (_, Some(k)) => LevelSpec::Fixed { k },
        (_, None) => LevelSpec::Auto {
            min_size: cfg.auto_levels.min_size,
            max_size: cfg.auto_levels.max_size,
        },
    };
    MultiscaleConfig {
        levels,
        a: if task.algorithm == Algorithm::TwoLevel {
            0.5
        } else {
            cfg.a
        },
        per_call_epsilon: cfg.epsilon,
        stopping: if task.algorithm == Algorithm::MultiscaleFi {
            StoppingMode::FixedIterations { c_fi: cfg.c_fi }
        } else {
            StoppingMode::Oracle
        },
        rep_policy: cfg.rep_policy,
        transport: task.transport,
        budget: task.budget,
        ..Default::default()
    }
}

fn execute(cfg: &ExperimentConfig, graph: &GeoGraph, task: &Task) -> Result<Execution> {
    let values = initial_values(task.n, task.run_seed, cfg.init);
    let row = |k: usize, a: f64, total: u64, err: f64, hops: usize, iterations: u64, duration: u64| RunRow {
        experiment: cfg.experiment.name().to_string(),
        algorithm: task.algorithm.name().to_string(),
        n: task.n,
        k,
        a,
        epsilon: cfg.epsilon,
        p: task.p,
        seed: task.run_seed,
        total_transmissions: total,
        final_rel_error: err,
        max_hops: hops,
        iterations,
        duration,
    };
    let keep_sends = matches!(cfg.experiment, ExperimentId::Cdf | ExperimentId::NodeUtil);
    let finish = |ledger: &TransmissionLedger, row: RunRow, roles: Vec<u32>, violations| Execution {
        task: *task,
        row,
        sends: if keep_sends {
            ledger.per_node_sends.clone()
        } else {
            Vec::new()
        },
        roles,
        grid: (cfg.experiment == ExperimentId::Heatmap)
            .then(|| normalize_grid(&ledger.per_location(&graph.coords, cfg.bins))),
        violations,
        exhausted: false,
    };
    let exhausted = |k: usize, a: f64, e: &Error| match *e {
        Error::BudgetExhausted {
            transmissions,
            iterations,
            rel_error,
        } if task.budget < DEFAULT_TRANSMISSION_CAP => Some(Execution {
            task: *task,
            row: row(k, a, transmissions, rel_error, 0, iterations, iterations),
            sends: Vec::new(),
            roles: Vec::new(),
            grid: None,
            violations: Vec::new(),
            exhausted: true,
        }),
        _ => None,
    };

    if task.algorithm.is_hierarchical() {
        let mc = multiscale_config(cfg, task);
        return match multiscale_gossip(graph, &values, &mc, task.run_seed) {
            Ok(out) => {
                let r = row(
                    out.k_effective,
                    mc.a,
                    out.ledger.total,
                    out.final_rel_error,
                    out.max_hops_seen(),
                    out.iterations,
                    out.duration,
                );
                let roles = if cfg.experiment == ExperimentId::NodeUtil {
                    out.representative_roles.clone()
                } else {
                    Vec::new()
                };
                Ok(finish(&out.ledger, r, roles, out.hop_ceiling_violations()))
            }
            Err(e) => {
                let k = Hierarchy::build(task.n, mc.resolve_k(task.n), mc.a).map_or(0, |h| h.collapsed().k);
                exhausted(k, mc.a, &e).ok_or(e)
            }
        };
    }

    let stop = StoppingRule::oracle(cfg.epsilon);
    let result: Result<GossipOutcome> = match task.algorithm {
        Algorithm::PathAveraging => {
            path_averaging_capped(graph, &values, stop, task.transport, task.run_seed, task.budget)
        }
        Algorithm::GeographicGossip => {
            geographic_gossip_capped(graph, &values, stop, task.transport, task.run_seed, task.budget)
        }
        _ => randomized_gossip_capped(graph, &values, stop, task.transport, task.run_seed, task.budget),
    };
    match result {
        Ok(out) => {
            let it = out.report.iterations;
            let r = row(
                1,
                0.0,
                out.ledger.total,
                out.values.rel_error(),
                out.ledger.max_hops_seen,
                it,
                it,
            );
            Ok(finish(&out.ledger, r, Vec::new(), Vec::new()))
        }
        Err(e) => exhausted(1, 0.0, &e).ok_or(e),
    }
}

/// Builds each distinct graph once, then runs every task against it.
fn run_tasks(cfg: &ExperimentConfig, tasks: &[Task]) -> Vec<std::result::Result<Execution, RunFailure>> {
    let mut keys: Vec<(usize, u64)> = tasks.iter().map(|t| (t.n, t.graph_seed)).collect();
    keys.sort_unstable();
    keys.dedup();
    let graphs = par::map(&keys, |&(n, seed)| {
        GeoGraph::generate_connected(n, cfg.c, seed, 100).map_err(|e| e.to_string())
    });
    let lookup: BTreeMap<(usize, u64), std::result::Result<GeoGraph, String>> = keys.into_iter().zip(graphs).collect();
    par::map(tasks, |t| {
        let graph = lookup[&(t.n, t.graph_seed)]
            .as_ref()
            .map_err(|m| t.failure(m.clone()))?;
        execute(cfg, graph, t).map_err(|e| t.failure(e.to_string()))
    })
}

fn summarize(rows: &[RunRow]) -> Vec<AggregateRow> {
    let mut groups: BTreeMap<(String, usize, usize, u64), Vec<&RunRow>> = BTreeMap::new();
    for r in rows {
        groups
            .entry((r.algorithm.clone(), r.n, r.k, r.p.to_bits()))
            .or_default()
            .push(r);
    }
    groups
        .into_iter()
        .map(|((algorithm, n, k, p), rs)| {
            let totals: Vec<f64> = rs.iter().map(|r| r.total_transmissions as f64).collect();
            let errors: Vec<f64> = rs.iter().map(|r| r.final_rel_error).collect();
            let t = Stats::of(&totals).expect("group is nonempty");
            let e = Stats::of(&errors).expect("group is nonempty");
            AggregateRow {
                algorithm,
                n,
                k,
                p: f64::from_bits(p),
                runs: rs.len(),
                total_mean: t.mean,
                total_std: t.std,
                total_min: t.min,
                total_max: t.max,
                error_mean: e.mean,
                error_std: e.std,
                error_min: e.min,
                error_max: e.max,
                max_hops: rs.iter().map(|r| r.max_hops).max().unwrap_or(0),
            }
        })
        .collect()
}

fn fit(cfg: &ExperimentConfig, summary: &[AggregateRow]) -> FitDetail {
    let points: Vec<FitPoint> = summary
        .iter()
        .map(|s| {
            let hierarchical = s.algorithm.parse::<Algorithm>().is_ok_and(Algorithm::is_hierarchical);
            let a = if s.algorithm == Algorithm::TwoLevel.name() {
                0.5
            } else {
                cfg.a
            };
            FitPoint {
                algorithm: s.algorithm.clone(),
                p: s.p,
                n: s.n,
                k: s.k,
                total_mean: s.total_mean,
                predicted_exponent: hierarchical
                    .then(|| theory::predicted_cost(s.n, s.k, cfg.epsilon, a).ok())
                    .flatten()
                    .map(|c| c.dominant_exponent),
            }
        })
        .collect();
    let mut series: BTreeMap<(String, u64), (Vec<f64>, Vec<f64>)> = BTreeMap::new();
    for pt in &points {
        let e = series.entry((pt.algorithm.clone(), pt.p.to_bits())).or_default();
        e.0.push(pt.n as f64);
        e.1.push(pt.total_mean);
    }
    let slopes = series
        .into_iter()
        .map(|((algorithm, p), (xs, ys))| SlopeRow {
            algorithm,
            p: f64::from_bits(p),
            slope: theory::loglog_slope(&xs, &ys),
        })
        .collect();
    FitDetail { points, slopes }
}

fn cdf_detail(execs: &[&Execution]) -> CdfDetail {
    let pick = |alg: Algorithm, n: usize, seed: u64| {
        execs
            .iter()
            .find(|e| e.task.algorithm == alg && e.task.n == n && e.task.run_seed == seed)
    };
    let mut per_seed = Vec::new();
    for e in execs.iter().filter(|e| e.task.algorithm == Algorithm::Multiscale) {
        let Some(pa) = pick(Algorithm::PathAveraging, e.task.n, e.task.run_seed) else {
            continue;
        };
        let max = e.sends.iter().copied().max().unwrap_or(0);
        let below = pa.sends.iter().filter(|&&s| s <= max).count();
        per_seed.push(CdfSeed {
            n: e.task.n,
            seed: e.task.run_seed,
            multiscale_max: max,
            path_fraction_at_or_below: below as f64 / pa.sends.len().max(1) as f64,
        });
    }
    let fractions: Vec<f64> = per_seed.iter().map(|s| s.path_fraction_at_or_below).collect();
    let mut pooled: BTreeMap<(Algorithm, usize), Vec<u64>> = BTreeMap::new();
    for e in execs {
        pooled.entry((e.task.algorithm, e.task.n)).or_default().extend(&e.sends);
    }
    let mut curve = Vec::new();
    for ((alg, n), mut sends) in pooled {
        sends.sort_unstable();
        let total = sends.len() as f64;
        for (i, &s) in sends.iter().enumerate() {
            if sends.get(i + 1) != Some(&s) {
                curve.push(CdfPoint {
                    algorithm: alg.name().to_string(),
                    n,
                    sends: s,
                    fraction: (i + 1) as f64 / total,
                });
            }
        }
    }
    CdfDetail {
        mean_fraction: Stats::of(&fractions).map_or(f64::NAN, |s| s.mean),
        per_seed,
        curve,
    }
}

fn class_rows(execs: &[&Execution]) -> Vec<ClassRow> {
    let mut classes: BTreeMap<u32, Vec<f64>> = BTreeMap::new();
    let mut all = Vec::new();
    for e in execs {
        for (&s, &r) in e.sends.iter().zip(&e.roles) {
            classes.entry(r).or_default().push(s as f64);
            all.push(s as f64);
        }
    }
    let row = |class: String, roles: Option<u32>, xs: &[f64]| {
        let st = Stats::of(xs).expect("class is nonempty");
        ClassRow {
            class,
            representative_roles: roles,
            nodes: xs.len(),
            mean: st.mean,
            std: st.std,
        }
    };
    let mut out: Vec<ClassRow> = classes
        .iter()
        .map(|(&r, xs)| {
            let label = if r == 0 { "never".to_string() } else { format!("{r}x") };
            row(label, Some(r), xs)
        })
        .collect();
    if !all.is_empty() {
        out.push(row("all".to_string(), None, &all));
    }
    out
}

/// Running grid sum and run count.
type GridSum = (Vec<Vec<f64>>, usize);

fn heatmaps(cfg: &ExperimentConfig, execs: &[&Execution]) -> Vec<HeatGrid> {
    let mut sums: BTreeMap<(Algorithm, usize), GridSum> = BTreeMap::new();
    for e in execs {
        let Some(g) = &e.grid else { continue };
        let (acc, runs) = sums
            .entry((e.task.algorithm, e.task.n))
            .or_insert_with(|| (vec![vec![0.0; cfg.bins]; cfg.bins], 0));
        for (a, b) in acc.iter_mut().flatten().zip(g.iter().flatten()) {
            *a += b;
        }
        *runs += 1;
    }
    sums.into_iter()
        .map(|((alg, n), (mut grid, runs))| {
            grid.iter_mut().flatten().for_each(|v| *v /= runs as f64);
            HeatGrid {
                algorithm: alg.name().to_string(),
                n,
                runs,
                central_excess: central_excess(&grid, CENTRAL_AREA),
                grid,
            }
        })
        .collect()
}

fn expand(cfg: &ExperimentConfig) -> Vec<Task> {
    let algos = cfg.algorithms();
    let k_default = cfg.k.first().copied();
    let mut tasks = Vec::new();
    for &n in &cfg.n {
        match cfg.experiment {
            ExperimentId::LevelsSweep => {
                let ks: Vec<usize> = if cfg.k.is_empty() {
                    (1..=6).collect()
                } else {
                    cfg.k.clone()
                };
                for &k in &ks {
                    for &alg in &algos {
                        tasks.extend(cfg.seeds.iter().map(|&s| Task::new(n, s, alg, Some(k))));
                    }
                }
            }
            ExperimentId::HandshakeSweep => {
                for &p in &cfg.p {
                    for &alg in &algos {
                        tasks.extend(cfg.seeds.iter().map(|&s| Task {
                            p,
                            transport: FailureModel::Handshake { p },
                            ..Task::new(n, s, alg, k_default)
                        }));
                    }
                }
            }
            ExperimentId::Heatmap => {
                for &g in &cfg.seeds {
                    for r in 0..cfg.runs_per_graph as u64 {
                        for &alg in &algos {
                            tasks.push(Task {
                                run_seed: g.wrapping_mul(RUN_STRIDE).wrapping_add(r),
                                ..Task::new(n, g, alg, k_default)
                            });
                        }
                    }
                }
            }
            _ => {
                for &alg in &algos {
                    tasks.extend(cfg.seeds.iter().map(|&s| Task::new(n, s, alg, k_default)));
                }
            }
        }
    }
    tasks
}

/// Lossy follow-ups, each budgeted at a multiple of its reliable run.
fn loss_tasks(cfg: &ExperimentConfig, reliable: &[std::result::Result<Execution, RunFailure>]) -> Vec<Task> {
    let mut tasks = Vec::new();
    for &p in cfg.p.iter().filter(|&&p| p < 1.0) {
        for done in reliable.iter().flatten() {
            let budget = (cfg.loss_budget_factor * done.row.total_transmissions as f64)
                .ceil()
                .max(1.0);
            tasks.push(Task {
                p,
                transport: FailureModel::Lossy { p },
                budget: (budget as u64).min(DEFAULT_TRANSMISSION_CAP - 1),
                ..done.task
            });
        }
    }
    tasks
}

/// Runs one experiment end to end on `cfg.workers` threads.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    cfg.validate()?;
    par::with_workers(cfg.workers, || {
        let mut results = run_tasks(cfg, &expand(cfg));
        if cfg.experiment == ExperimentId::Loss {
            let lossy = loss_tasks(cfg, &results);
            results.extend(run_tasks(cfg, &lossy));
        }
        Ok(assemble(cfg, results))
    })
}

fn assemble(cfg: &ExperimentConfig, results: Vec<std::result::Result<Execution, RunFailure>>) -> ExperimentReport {
    let mut execs = Vec::new();
    let mut failures = Vec::new();
    for r in results {
        match r {
            Ok(e) => execs.push(e),
            Err(f) => failures.push(f),
        }
    }
    let rows: Vec<RunRow> = execs.iter().map(|e| e.row.clone()).collect();
    let summary = summarize(&rows);
    let mut hop_check = HopCheck::default();
    let mut budget_exhausted = Vec::new();
    for e in &execs {
        let t = &e.task;
        if e.exhausted {
            budget_exhausted.push(format!("{} n={} p={} seed={}", t.algorithm, t.n, t.p, t.run_seed));
        } else if t.algorithm.is_hierarchical() {
            hop_check.runs_checked += 1;
        }
        for &(level, hops, ceiling) in &e.violations {
            hop_check.violations.push(format!(
                "{} n={} seed={} level {level}: {hops} hops > ceiling {ceiling}",
                t.algorithm, t.n, t.run_seed
            ));
        }
    }
    let ok: Vec<&Execution> = execs.iter().filter(|e| !e.exhausted).collect();
    let nodes = ok
        .iter()
        .filter(|e| !e.sends.is_empty())
        .flat_map(|e| {
            e.sends.iter().enumerate().map(move |(i, &sends)| NodeRow {
                algorithm: e.task.algorithm.name().to_string(),
                n: e.task.n,
                seed: e.task.run_seed,
                node_id: i,
                sends,
                representative_roles: e.roles.get(i).copied().unwrap_or(0),
            })
        })
        .collect();
    let fit_detail = matches!(
        cfg.experiment,
        ExperimentId::ScalingFit | ExperimentId::Loss | ExperimentId::VsBaselines
    )
    .then(|| fit(cfg, &summary));
    ExperimentReport {
        experiment: cfg.experiment,
        init: cfg.init,
        config: cfg.clone(),
        cdf: (cfg.experiment == ExperimentId::Cdf).then(|| cdf_detail(&ok)),
        heatmaps: heatmaps(cfg, &ok),
        classes: if cfg.experiment == ExperimentId::NodeUtil {
            class_rows(&ok)
        } else {
            Vec::new()
        },
        fit: fit_detail,
        rows,
        failures,
        budget_exhausted,
        summary,
        hop_check,
        nodes,
    }
}
