use std::fs;

use msgossip::harness::{run_experiment, write_report, Algorithm, ExperimentConfig, ExperimentId, InitMode};
use msgossip::par;

fn small(id: ExperimentId) -> ExperimentConfig {
    let mut c = ExperimentConfig::new(id, vec![120], vec![3, 4]);
    c.bins = 8;
    c.runs_per_graph = 2;
    c
}

#[test]
fn reruns_write_identical_csv() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = small(ExperimentId::LevelsSweep);
    cfg.k = vec![1, 2, 3];
    let a = run_experiment(&cfg).unwrap();
    let b = run_experiment(&cfg).unwrap();
    write_report(&a, &dir.path().join("a")).unwrap();
    write_report(&b, &dir.path().join("b")).unwrap();
    for f in ["levels_sweep.csv", "levels_sweep_summary.csv", "levels_sweep.json"] {
        let x = fs::read(dir.path().join("a").join(f)).unwrap();
        let y = fs::read(dir.path().join("b").join(f)).unwrap();
        assert_eq!(x, y, "{f}");
    }
}

#[test]
fn worker_count_does_not_change_results() {
    let cfg = small(ExperimentId::VsBaselines);
    let one = par::with_workers(Some(1), || run_experiment(&cfg).unwrap());
    let many = par::with_workers(Some(3), || run_experiment(&cfg).unwrap());
    assert_eq!(one.rows, many.rows);
}

#[test]
fn run_table_has_the_documented_columns() {
    let dir = tempfile::tempdir().unwrap();
    let rep = run_experiment(&small(ExperimentId::VsBaselines)).unwrap();
    let written = write_report(&rep, dir.path()).unwrap();
    let csv = fs::read_to_string(dir.path().join("vs_baselines.csv")).unwrap();
    assert_eq!(
        csv.lines().next().unwrap(),
        "experiment,algorithm,n,k,a,epsilon,p,seed,total_transmissions,final_rel_error,max_hops,iterations,duration"
    );
    assert_eq!(csv.lines().count(), 1 + rep.rows.len());
    assert!(written.iter().all(|p| p.exists()));
    assert!(!fs::read_dir(dir.path())
        .unwrap()
        .any(|e| e.unwrap().path().to_string_lossy().ends_with(".tmp")));
}

#[test]
fn single_node_costs_nothing() {
    let mut cfg = ExperimentConfig::new(ExperimentId::VsBaselines, vec![1], vec![0]);
    cfg.algorithms = Algorithm::ALL.to_vec();
    let rep = run_experiment(&cfg).unwrap();
    assert!(rep.failures.is_empty(), "{:?}", rep.failures);
    assert_eq!(rep.rows.len(), Algorithm::ALL.len());
    assert!(rep
        .rows
        .iter()
        .all(|r| r.total_transmissions == 0 && r.final_rel_error == 0.0));
}

#[test]
fn handshake_at_one_matches_reliable() {
    let mut hs = small(ExperimentId::HandshakeSweep);
    hs.p = vec![1.0];
    let hs = run_experiment(&hs).unwrap();
    let rel = run_experiment(&small(ExperimentId::VsBaselines)).unwrap();
    for r in &hs.rows {
        let twin = rel
            .rows
            .iter()
            .find(|x| x.algorithm == r.algorithm && x.seed == r.seed)
            .unwrap();
        assert_eq!(r.total_transmissions, twin.total_transmissions);
        assert_eq!(r.final_rel_error, twin.final_rel_error);
    }
}

#[test]
fn cdf_is_monotone_and_ends_at_one() {
    let rep = run_experiment(&small(ExperimentId::Cdf)).unwrap();
    let cdf = rep.cdf.unwrap();
    for alg in ["multiscale", "path_averaging"] {
        let pts: Vec<_> = cdf.curve.iter().filter(|p| p.algorithm == alg).collect();
        assert!(pts
            .windows(2)
            .all(|w| w[0].sends < w[1].sends && w[0].fraction <= w[1].fraction));
        assert_eq!(pts.last().unwrap().fraction, 1.0);
    }
    assert_eq!(cdf.per_seed.len(), 2);
    assert_eq!(rep.nodes.len(), 2 * 2 * 120);
}

#[test]
fn heatmap_grids_are_normalized() {
    let dir = tempfile::tempdir().unwrap();
    let rep = run_experiment(&small(ExperimentId::Heatmap)).unwrap();
    assert_eq!(rep.rows.len(), 2 * 2 * 2);
    for h in &rep.heatmaps {
        assert_eq!(h.grid.len(), 8);
        assert!((h.grid.iter().flatten().sum::<f64>() - 1.0).abs() < 1e-9);
    }
    write_report(&rep, dir.path()).unwrap();
    let grid = fs::read_to_string(dir.path().join("heatmap_path_averaging_n120_grid.csv")).unwrap();
    assert_eq!(grid.lines().count(), 8);
    assert!(grid.lines().all(|l| l.split(',').count() == 8));
}

#[test]
fn loss_runs_are_budgeted_and_recorded() {
    let mut cfg = small(ExperimentId::Loss);
    cfg.p = vec![0.8];
    cfg.loss_budget_factor = 2.0;
    let rep = run_experiment(&cfg).unwrap();
    assert!(rep.failures.is_empty(), "{:?}", rep.failures);
    assert_eq!(rep.rows.len(), 2 * 2 * 2);
    for r in rep.rows.iter().filter(|r| r.p < 1.0) {
        let reliable = rep
            .rows
            .iter()
            .find(|x| x.p == 1.0 && x.algorithm == r.algorithm && x.seed == r.seed)
            .unwrap();
        // A run may overshoot by at most one iteration's worth of hops.
        assert!(r.total_transmissions <= 2 * reliable.total_transmissions + 2 * r.n as u64);
    }
}

#[test]
fn spike_init_is_recorded() {
    let mut cfg = small(ExperimentId::VsBaselines);
    cfg.init = InitMode::Spike;
    cfg.algorithms = vec![Algorithm::Multiscale];
    let rep = run_experiment(&cfg).unwrap();
    assert_eq!(rep.init, InitMode::Spike);
    let json = serde_json::to_string(&rep).unwrap();
    assert!(json.contains("\"init\":\"spike\""));
}

#[test]
fn node_util_sends_add_up() {
    let mut cfg = small(ExperimentId::NodeUtil);
    cfg.n = vec![400];
    cfg.k = vec![3];
    let rep = run_experiment(&cfg).unwrap();
    for r in &rep.rows {
        let s: u64 = rep.nodes.iter().filter(|x| x.seed == r.seed).map(|x| x.sends).sum();
        assert_eq!(s, r.total_transmissions);
    }
    let all = rep.classes.iter().find(|c| c.class == "all").unwrap();
    assert_eq!(all.nodes, 800);
    assert_eq!(
        rep.classes
            .iter()
            .filter(|c| c.class != "all")
            .map(|c| c.nodes)
            .sum::<usize>(),
        800
    );
}
