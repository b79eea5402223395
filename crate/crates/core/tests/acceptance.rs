//! Acceptance gate. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.
//!
//! Run: `cargo test --release -p megan --test acceptance`

mod common;

use std::fs;
use std::process::Command;
use std::time::Instant;

use megan::discriminator::DiscriminatorParams;
use megan::eval::metrics::{accuracy, auc, average_precision, macro_f1, micro_f1};
use megan::eval::{self, logistic, FitOptions};
use megan::generator::{select_negative, GenItem, GeneratorParams, SelectMode, EPS};
use megan::graph::{ConnectivityPattern, MultiViewGraph};
use megan::numkernel::{grad_check, Activation, DenseMatrix, MlpParams};
use megan::par::Exec;
use megan::rng::{derive, seeded};
use megan::synth::{complementary_preset, generate, SbmSpec};
use megan::trainer::{train, Side, TrainConfig, TrainState};
use rand::Rng;

const FD_TOL: f64 = 1e-4;
const NORM_TOL: f64 = 1e-9;
const NC_MARGIN: f64 = 0.30;
const LP_MIN: f64 = 0.75;
const MULTIVIEW_MARGIN: f64 = 0.05;
const SEEDS: [u64; 5] = [0, 1, 2, 3, 4];

struct Gate {
    failed: Vec<&'static str>,
}

impl Gate {
    fn report(&mut self, name: &'static str, pass: bool, detail: String) {
        println!("{} {name}: {detail}", if pass { "PASS" } else { "FAIL" });
        if !pass {
            self.failed.push(name);
        }
    }
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

fn sbm(seed: u64) -> MultiViewGraph {
    generate(&SbmSpec::uniform(300, 3, 2, 0.15, 0.02, 0.5, 100 + seed)).unwrap()
}

fn cfg(seed: u64) -> TrainConfig {
    TrainConfig { d: 16, seed, ..TrainConfig::default() }
}

fn random_params(seed: u64, n: usize, d: usize, k: usize, act: Activation) -> GeneratorParams {
    let mut rng = seeded(seed);
    let mut p = GeneratorParams::init(n, d, k, d, d, 0.5, act, &mut rng);
    for t in p.tensors_mut() {
        if t.cols() == 1 {
            for v in t.as_mut_slice() {
                *v = rng.random_range(-0.3..0.3);
            }
        }
    }
    p
}

fn flatten(p: &GeneratorParams) -> Vec<f64> {
    p.named_tensors().iter().flat_map(|(_, t)| t.as_slice().to_vec()).collect()
}

fn unflatten(p: &mut GeneratorParams, theta: &[f64]) {
    let mut off = 0;
    for t in p.tensors_mut() {
        let len = t.as_slice().len();
        t.as_mut_slice().copy_from_slice(&theta[off..off + len]);
        off += len;
    }
}

fn random_pattern<R: Rng>(k: usize, rng: &mut R) -> ConnectivityPattern {
    loop {
        let bits: Vec<bool> = (0..k).map(|_| rng.random()).collect();
        if bits.iter().any(|&b| b) {
            return ConnectivityPattern::new(bits);
        }
    }
}

fn gradient_fidelity() -> (f64, usize) {
    let (n, d, k) = (20, 8, 3);
    let mut worst = 0.0f64;
    let mut instances = 0;
    for seed in 0..100u64 {
        for act in [Activation::Relu, Activation::Tanh] {
            let base = random_params(seed, n, d, k, act);
            let mut rng = derive(seed, "acc-fd", 0);
            let i = rng.random_range(0..n);
            let c = (i + rng.random_range(1..n)) % n;
            let pattern = random_pattern(k, &mut rng);
            let item = GenItem { i, c, pattern: pattern.clone(), reward: 1.0 };
            let build = |th: &[f64]| {
                let mut p = base.clone();
                unflatten(&mut p, th);
                p
            };
            let err = grad_check(
                |th| build(th).log_joint_prob(i, c, &pattern).unwrap(),
                |th| {
                    let g = build(th).generator_gradient(std::slice::from_ref(&item)).unwrap();
                    g.dense_tensors(n, d).iter().flat_map(|t| t.as_slice().to_vec()).collect()
                },
                &flatten(&base),
            )
            .unwrap();
            worst = worst.max(err);
            instances += 1;
        }

        let disc = DiscriminatorParams::init(n, d, 0.5, &mut seeded(seed));
        let mut rng = derive(seed, "acc-fd", 1);
        let mut pair = || loop {
            let (a, b) = (rng.random_range(0..n), rng.random_range(0..n));
            if a != b {
                return (a, b);
            }
        };
        let pos: Vec<_> = (0..6).map(|_| pair()).collect();
        let neg: Vec<_> = (0..6).map(|_| pair()).collect();
        let build = |th: &[f64]| DiscriminatorParams::new(DenseMatrix::from_vec(n, d, th.to_vec()).unwrap());
        let err = grad_check(
            |th| build(th).objective(&pos, &neg).unwrap(),
            |th| build(th).discriminator_gradient(&pos, &neg).unwrap().dense(n, d).into_vec(),
            disc.table.as_slice(),
        )
        .unwrap();
        worst = worst.max(err);
        instances += 1;

        let mut rng = derive(seed, "acc-fd", 2);
        let x = DenseMatrix::gaussian(n, d, 1.0, &mut rng);
        let y: Vec<bool> = (0..n).map(|r| x.get(r, 0) + rng.random_range(-0.5..0.5) > 0.0).collect();
        let theta: Vec<f64> = (0..=d).map(|_| rng.random_range(-1.0..1.0)).collect();
        let err = grad_check(
            |t| logistic::objective(&x, &y, 1.0, t),
            |t| logistic::gradient(&x, &y, 1.0, t),
            &theta,
        )
        .unwrap();
        worst = worst.max(err);
        instances += 1;
    }
    (worst, instances)
}

/// Independent forward pass of one perceptron.
fn mlp_forward(m: &MlpParams, v: &[f64]) -> Vec<f64> {
    let act = |z: f64| match m.act {
        Activation::Tanh => z.tanh(),
        Activation::Relu => z.max(0.0),
        Activation::Identity => z,
    };
    let h: Vec<f64> = (0..m.w1.rows())
        .map(|r| act(m.b1.get(r, 0) + (0..v.len()).map(|c| m.w1.get(r, c) * v[c]).sum::<f64>()))
        .collect();
    (0..m.w2.rows())
        .map(|r| m.b2.get(r, 0) + (0..h.len()).map(|c| m.w2.get(r, c) * h[c]).sum::<f64>())
        .collect()
}

fn oracle_joint(p: &GeneratorParams, i: usize, c: usize, pattern: &ConnectivityPattern) -> f64 {
    let mut input = p.x.row(i).to_vec();
    input.extend_from_slice(p.x.row(c));
    let fused = mlp_forward(&p.fuse, &input);
    p.heads
        .iter()
        .zip(&pattern.bits)
        .map(|(h, &bit)| {
            let z = mlp_forward(h, &fused)[0];
            let q = (1.0 / (1.0 + (-z).exp())).clamp(EPS, 1.0 - EPS);
            if bit { q } else { 1.0 - q }
        })
        .product()
}

fn random_graph(seed: u64) -> MultiViewGraph {
    let mut rng = derive(seed, "acc-graph", 0);
    let n = rng.random_range(3..=50);
    let k = rng.random_range(1..=3);
    let density = rng.random_range(0.05..0.5);
    let mut views: Vec<Vec<(usize, usize)>> = (0..k)
        .map(|_| {
            let mut e = Vec::new();
            for i in 0..n {
                for j in i + 1..n {
                    if rng.random::<f64>() < density {
                        e.push((i, j));
                    }
                }
            }
            e
        })
        .collect();
    if views.iter().all(|v| v.is_empty()) {
        views[0].push((0, 1));
    }
    MultiViewGraph::new(n, views, None).unwrap()
}

/// Returns (checked pairs, mismatches, pairs that involved a tie).
fn sampling_oracle() -> (usize, usize, usize) {
    let (mut checked, mut mismatches, mut tied) = (0, 0, 0);
    for seed in 0..100u64 {
        let g = random_graph(seed);
        let mut p = random_params(seed, g.n(), 4, g.k(), Activation::Relu);
        if seed % 4 == 0 {
            // duplicate embedding rows so equal scores actually occur
            let row = p.x.row(0).to_vec();
            for r in (0..g.n()).step_by(2) {
                p.x.row_mut(r).copy_from_slice(&row);
            }
        }
        let idx = g.neighbor_union();
        for &(a, b) in g.union_edges() {
            for (i, j) in [(a, b), (b, a)] {
                let cands: Vec<usize> = idx.neighbors(i).iter().copied().filter(|&c| c != i && c != j).collect();
                if cands.is_empty() {
                    continue;
                }
                let pattern = g.connectivity(i, j).unwrap();
                let scores: Vec<f64> = cands.iter().map(|&c| oracle_joint(&p, i, c, &pattern)).collect();
                let best = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                let expected = cands.iter().zip(&scores).filter(|(_, &s)| s == best).map(|(&c, _)| c).min().unwrap();
                if scores.iter().filter(|&&s| s == best).count() > 1 {
                    tied += 1;
                }
                let got = select_negative(&p, &g, &idx, i, j, SelectMode::Greedy, &mut seeded(0)).unwrap();
                checked += 1;
                if got != expected {
                    mismatches += 1;
                }
            }
        }
    }
    (checked, mismatches, tied)
}

fn pattern_normalization() -> f64 {
    let mut worst = 0.0f64;
    for k in 1..=6usize {
        for draw in 0..50u64 {
            let seed = 1000 * k as u64 + draw;
            let p = random_params(seed, 6, 4, k, Activation::Relu);
            let mut rng = seeded(seed);
            let i = rng.random_range(0..6);
            let j = (i + rng.random_range(1..6)) % 6;
            let total: f64 = (0..1u64 << k)
                .map(|code| p.joint_prob(i, j, &ConnectivityPattern::from_code(code, k)).unwrap())
                .sum();
            worst = worst.max((total - 1.0).abs());
        }
    }
    worst
}

fn cli_determinism() -> bool {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    let run = |args: &[&str]| {
        let out = Command::new(env!("CARGO_BIN_EXE_megan")).current_dir(p).args(args).output().unwrap();
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    };
    run(&["synth", "--n", "300", "--seed", "100", "--out", "g"]);
    for out in ["a", "b"] {
        run(&["train", "--edges", "g.edges", "--d", "16", "--epochs", "20", "--seed", "3", "--out", out]);
    }
    fs::read(p.join("a.emb")).unwrap() == fs::read(p.join("b.emb")).unwrap()
}

fn micro_at_half(x: &DenseMatrix, labels: &[Option<u32>], seed: u64) -> f64 {
    eval::node_classification(x, labels, 0.5, &[seed], &FitOptions::default(), Exec::default())
        .unwrap()
        .micro_f1
        .0
}

struct LpOutcome {
    auc: f64,
    ap: f64,
    pos_joint: f64,
    neg_joint: f64,
    held_out_d: f64,
    non_edge_d: f64,
}

fn link_prediction_seed(seed: u64) -> LpOutcome {
    let g = sbm(seed);
    let split = eval::link_split(&g, 0, 0.5, &mut derive(seed, "lp-split", 0)).unwrap();
    let reduced = split.reduced_graph(&g).unwrap();
    let state = train(&reduced, &cfg(seed)).unwrap();
    let run = eval::link_prediction_run(
        state.embedding(Side::Generator),
        &g,
        &split,
        seed,
        &FitOptions::default(),
    )
    .unwrap();
    let (pos_joint, neg_joint) = joint_separation(&state, &reduced, seed);
    let d_mean = |pairs: &[(usize, usize)]| mean(&pairs.iter().map(|&(i, j)| state.disc.score(i, j).unwrap()).collect::<Vec<_>>());
    LpOutcome {
        auc: run.auc,
        ap: run.ap,
        pos_joint,
        neg_joint,
        held_out_d: d_mean(&split.removed),
        non_edge_d: d_mean(&split.negatives),
    }
}

fn joint_separation(state: &TrainState, g: &MultiViewGraph, seed: u64) -> (f64, f64) {
    let edges = g.union_edges();
    let mut rng = derive(seed, "acc-separation", 0);
    let mut pos = Vec::with_capacity(edges.len());
    let mut neg = Vec::with_capacity(edges.len());
    for &(i, j) in edges {
        pos.push(state.gen.joint_prob(i, j, &g.connectivity(i, j).unwrap()).unwrap());
        let (a, b) = g.sample_non_edge(&mut rng).unwrap();
        let (pi, pj) = edges[rng.random_range(0..edges.len())];
        neg.push(state.gen.joint_prob(a, b, &g.connectivity(pi, pj).unwrap()).unwrap());
    }
    (mean(&pos), mean(&neg))
}

fn metric_values() -> Result<(), String> {
    let close = |name: &str, got: f64, want: f64| {
        if (got - want).abs() <= 1e-12 { Ok(()) } else { Err(format!("{name}: {got} != {want}")) }
    };
    let s = [0.9, 0.8, 0.7, 0.6];
    let l = [true, false, true, false];
    close("auc", auc(&s, &l).unwrap(), 0.75)?;
    close("ap", average_precision(&s, &l).unwrap(), (1.0 + 2.0 / 3.0) / 2.0)?;
    let tied = [0.5; 4];
    close("auc ties", auc(&tied, &l).unwrap(), 0.5)?;
    close("ap ties", average_precision(&tied, &l).unwrap(), 0.5)?;
    let part = [0.9, 0.5, 0.5, 0.1];
    let l2 = [true, true, false, false];
    close("auc partial tie", auc(&part, &l2).unwrap(), 0.875)?;
    close("ap partial tie", average_precision(&part, &l2).unwrap(), 0.5 * 1.0 + 0.5 * (2.0 / 3.0))?;

    let truth = [0, 0, 1, 1, 2];
    let pred = [0, 1, 1, 1, 2];
    close("accuracy", accuracy(&truth, &pred), 0.8)?;
    close("micro f1", micro_f1(&truth, &pred), 0.8)?;
    close("macro f1", macro_f1(&truth, &pred), (2.0 / 3.0 + 0.8 + 1.0) / 3.0)?;

    for seed in 0..200u64 {
        let n = 2 + (seed as usize % 40);
        let scores = common::random_scores(n, seed);
        let mut labels: Vec<bool> = (0..n).map(|i| (seed >> (i % 16)) & 1 == 1 || i % 3 == 0).collect();
        labels[1] = false;
        close("auc brute force", auc(&scores, &labels).unwrap(), common::auc_pairs(&scores, &labels))?;
        close(
            "ap brute force",
            average_precision(&scores, &labels).unwrap(),
            common::ap_thresholds(&scores, &labels),
        )?;
    }
    Ok(())
}

fn main() {
    let mut gate = Gate { failed: Vec::new() };

    let t = Instant::now();
    let (worst, instances) = gradient_fidelity();
    let secs = t.elapsed().as_secs_f64();
    gate.report(
        "1 gradient fidelity",
        worst <= FD_TOL && instances >= 100 && secs < 60.0,
        format!("max rel err {worst:.2e} over {instances} instances (tol {FD_TOL:e}), {secs:.1}s"),
    );

    let (checked, mismatches, tied) = sampling_oracle();
    gate.report(
        "2 greedy sampling oracle",
        mismatches == 0 && checked > 0,
        format!("{mismatches} mismatches in {checked} selections ({tied} with ties), 100 graphs"),
    );

    let worst = pattern_normalization();
    gate.report(
        "3 pattern normalization",
        worst <= NORM_TOL,
        format!("max |sum - 1| = {worst:.2e} for k = 1..6, 50 draws each (tol {NORM_TOL:e})"),
    );

    gate.report("4 determinism", cli_determinism(), "two `train` runs, byte-compared embedding files".into());

    let t = Instant::now();
    let (mut trained, mut baseline) = (Vec::new(), Vec::new());
    for s in SEEDS {
        let g = sbm(s);
        let labels = g.labels().unwrap().to_vec();
        let state = train(&g, &cfg(s)).unwrap();
        trained.push(micro_at_half(state.embedding(Side::Generator), &labels, s));
        let rnd = DenseMatrix::gaussian(g.n(), 16, 1.0, &mut derive(s, "acc-baseline", 0));
        baseline.push(micro_at_half(&rnd, &labels, s));
    }
    let (m, b) = (mean(&trained), mean(&baseline));
    let secs = t.elapsed().as_secs_f64();
    gate.report(
        "5 node classification",
        m >= b + NC_MARGIN && secs <= 600.0,
        format!("micro-F1 {m:.3} vs random baseline {b:.3} (need +{NC_MARGIN}), {secs:.0}s"),
    );

    let outcomes: Vec<LpOutcome> = SEEDS.iter().map(|&s| link_prediction_seed(s)).collect();
    let pick = |f: fn(&LpOutcome) -> f64| mean(&outcomes.iter().map(f).collect::<Vec<_>>());
    let (auc_m, ap_m) = (pick(|o| o.auc), pick(|o| o.ap));
    gate.report(
        "6 link prediction",
        auc_m >= LP_MIN && ap_m >= LP_MIN,
        format!("AUC {auc_m:.3}, AP {ap_m:.3} (need >= {LP_MIN} each)"),
    );

    let (mut full, mut v0, mut v1) = (Vec::new(), Vec::new(), Vec::new());
    for s in SEEDS {
        let g = complementary_preset(240, 200 + s).unwrap();
        let labels = g.labels().unwrap().to_vec();
        let score = |g: &MultiViewGraph| micro_at_half(train(g, &cfg(s)).unwrap().embedding(Side::Generator), &labels, s);
        full.push(score(&g));
        v0.push(score(&g.single_view(0).unwrap()));
        v1.push(score(&g.single_view(1).unwrap()));
    }
    let (f, a, b) = (mean(&full), mean(&v0), mean(&v1));
    gate.report(
        "7 multi-view benefit",
        f >= a.max(b) + MULTIVIEW_MARGIN,
        format!("2-view {f:.3} vs single views {a:.3} / {b:.3} (need +{MULTIVIEW_MARGIN})"),
    );

    let (pj, nj) = (pick(|o| o.pos_joint), pick(|o| o.neg_joint));
    let (hd, nd) = (pick(|o| o.held_out_d), pick(|o| o.non_edge_d));
    gate.report(
        "8 adversarial separation",
        pj > nj && hd > nd,
        format!("joint_prob positives {pj:.4} vs non-edges {nj:.4}; D held-out {hd:.4} vs non-edges {nd:.4}"),
    );

    match metric_values() {
        Ok(()) => gate.report("9 metric values", true, "hand and brute-force AUC/AP/F1 cases match".into()),
        Err(e) => gate.report("9 metric values", false, e),
    }

    if !gate.failed.is_empty() {
        println!("{} of 9 criteria failed: {}", gate.failed.len(), gate.failed.join(", "));
        std::process::exit(1);
    }
}
