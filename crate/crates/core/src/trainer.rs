//! Adversarial training loop.
//!
//! After maximum-likelihood pretraining of both players, every epoch runs
//! `g_steps` generator updates followed by `d_steps` discriminator updates.
//! Generator steps use the policy-gradient estimate
//! `reward · ∇ log G(K_ij | i, c)` with `reward = log(1 − D(i, c))`, where
//! `c` is the negative chosen for the positive pair `(i, j)`. Discriminator
//! steps ascend `log D(pos) + log(1 − D(neg))` with negatives drawn from the
//! current generator.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::discriminator::{DiscGrad, DiscriminatorParams};
use crate::embedding::write_embedding;
use crate::error::{Error, Result};
use crate::generator::{select_negatives, GenItem, GeneratorGrad, GeneratorParams, SelectMode};
use crate::graph::{ConnectivityPattern, MultiViewGraph, NeighborIndex};
use crate::numkernel::{checkpoint, Activation, DenseMatrix, Optimizer, OptimizerKind};
use crate::par::Exec;
use crate::rng::{derive, derive_seed};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    /// Embedding dimension.
    pub d: usize,
    /// Positive (and generated negative) pairs per node in a D-step.
    pub t: usize,
    /// Generated negatives per positive pair in a G-step.
    pub s: usize,
    pub g_steps: usize,
    pub d_steps: usize,
    pub epochs: usize,
    pub lr_g: f64,
    pub lr_d: f64,
    pub mode: SelectMode,
    pub seed: u64,
    pub pretrain_epochs: usize,
    /// Log progress every this many epochs (0 disables).
    pub eval_every: usize,
    /// Items per optimizer update.
    pub batch_size: usize,
    /// Hidden width of every perceptron; `None` means `d`.
    pub hidden: Option<usize>,
    /// Fused representation width; `None` means `d`.
    pub fused: Option<usize>,
    pub optimizer: OptimizerKind,
    /// Hidden activation of the generator perceptrons.
    pub activation: Activation,
    pub x_init_std: f64,
    pub d_init_std: f64,
    /// Stop once the probe log-likelihood changes by less than `1e-5` for
    /// five consecutive epochs.
    pub early_stop: bool,
    /// Subtract the mini-batch mean reward.
    pub reward_baseline: bool,
    /// D-step iterates union edges instead of nodes.
    pub d_step_per_edge: bool,
    /// Fixed positive pairs used for the per-epoch value estimates.
    pub probe_pairs: usize,
    #[serde(skip)]
    pub exec: Exec,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            d: 128,
            t: 5,
            s: 5,
            g_steps: 1,
            d_steps: 1,
            epochs: 100,
            lr_g: 3e-3,
            lr_d: 3e-3,
            mode: SelectMode::Greedy,
            seed: 0,
            pretrain_epochs: 80,
            eval_every: 10,
            batch_size: 64,
            hidden: None,
            fused: None,
            optimizer: OptimizerKind::adam(),
            activation: Activation::Relu,
            x_init_std: 0.1,
            d_init_std: 0.1,
            early_stop: false,
            reward_baseline: false,
            d_step_per_edge: false,
            probe_pairs: 512,
            exec: Exec::default(),
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [("d", self.d), ("t", self.t), ("s", self.s), ("batch_size", self.batch_size)];
        for (name, v) in positive {
            if v == 0 {
                return Err(Error::Argument(format!("{name} must be at least 1")));
            }
        }
        for (name, v) in [("lr_g", self.lr_g), ("lr_d", self.lr_d)] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::Argument(format!("{name} must be a finite non-negative number, got {v}")));
            }
        }
        if self.hidden == Some(0) || self.fused == Some(0) {
            return Err(Error::Argument("layer widths must be positive".into()));
        }
        Ok(())
    }

    pub fn hidden_width(&self) -> usize {
        self.hidden.unwrap_or(self.d)
    }

    pub fn fused_width(&self) -> usize {
        self.fused.unwrap_or(self.d)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochStats {
    pub epoch: usize,
    /// Value-function estimate on the probe set.
    pub v_d: f64,
    /// Mean `log(1 − D)` over generated probe negatives.
    pub v_g: f64,
    /// Mean `log G(K_ij | i, j)` over probe positives.
    pub gen_ll: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainState {
    pub gen: GeneratorParams,
    pub disc: DiscriminatorParams,
    pub opt_g: Optimizer,
    pub opt_d: Optimizer,
    pub epoch: usize,
    pub history: Vec<EpochStats>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Generator,
    Discriminator,
}

impl std::str::FromStr for Side {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "generator" | "gen" => Ok(Side::Generator),
            "discriminator" | "disc" => Ok(Side::Discriminator),
            _ => Err(Error::Argument(format!("unknown embedding side {s:?}"))),
        }
    }
}

impl TrainState {
    /// Freshly initialized parameters for `g` under `cfg`.
    pub fn init(g: &MultiViewGraph, cfg: &TrainConfig) -> Result<Self> {
        cfg.validate()?;
        let mut rng = derive(cfg.seed, "init", 0);
        let gen = GeneratorParams::init(
            g.n(),
            cfg.d,
            g.k(),
            cfg.hidden_width(),
            cfg.fused_width(),
            cfg.x_init_std,
            cfg.activation,
            &mut rng,
        );
        let disc = DiscriminatorParams::init(g.n(), cfg.d, cfg.d_init_std, &mut rng);
        Ok(TrainState {
            gen,
            disc,
            opt_g: Optimizer::new(cfg.lr_g, cfg.optimizer),
            opt_d: Optimizer::new(cfg.lr_d, cfg.optimizer),
            epoch: 0,
            history: Vec::new(),
        })
    }

    pub fn embedding(&self, side: Side) -> &DenseMatrix {
        match side {
            Side::Generator => &self.gen.x,
            Side::Discriminator => &self.disc.table,
        }
    }

    pub fn export_embedding(&self, side: Side, path: &Path) -> Result<()> {
        write_embedding(self.embedding(side), path)
    }

    pub fn named_tensors(&self) -> Vec<(String, &DenseMatrix)> {
        let mut t = self.gen.named_tensors();
        t.push(("disc.table".to_string(), &self.disc.table));
        t
    }

    pub fn save_checkpoint(&self, path: &Path) -> Result<()> {
        let act = DenseMatrix::from_vec(1, 1, vec![activation_code(self.gen.fuse.act)])?;
        let mut t = self.named_tensors();
        t.push((ACT_TENSOR.to_string(), &act));
        checkpoint::save(path, &t)
    }

    pub fn write_history(&self, path: &Path) -> Result<()> {
        fs::write(path, history_csv(&self.history)).map_err(|e| Error::io(path, e))
    }

    fn apply_gen(&mut self, grad: &GeneratorGrad) -> Result<()> {
        let (n, d) = (self.gen.n(), self.gen.d());
        let dense = grad.dense_tensors(n, d);
        let refs: Vec<&DenseMatrix> = dense.iter().collect();
        self.opt_g.step(&mut self.gen.tensors_mut(), &refs)
    }

    /// Ascent step on the discriminator objective.
    fn apply_disc(&mut self, grad: &DiscGrad) -> Result<()> {
        let mut dense = grad.dense(self.disc.n(), self.disc.d());
        dense.scale(-1.0);
        self.opt_d.step(&mut [&mut self.disc.table], &[&dense])
    }
}

/// 1×1 tensor holding the generator activation code.
const ACT_TENSOR: &str = "meta.activation";

fn activation_code(a: Activation) -> f64 {
    match a {
        Activation::Tanh => 0.0,
        Activation::Relu => 1.0,
        Activation::Identity => 2.0,
    }
}

/// Generator and discriminator parameters read back from a checkpoint.
pub fn load_checkpoint(path: &Path) -> Result<(GeneratorParams, DiscriminatorParams)> {
    let mut tensors: BTreeMap<String, DenseMatrix> = checkpoint::load(path)?.into_iter().collect();
    let act = match tensors.remove(ACT_TENSOR).map(|m| m.get(0, 0)) {
        None | Some(0.0) => Activation::Tanh,
        Some(1.0) => Activation::Relu,
        Some(2.0) => Activation::Identity,
        Some(v) => return Err(Error::Checkpoint(format!("unknown activation code {v}"))),
    };
    let gen = GeneratorParams::from_named(&tensors, act)?;
    let table = tensors
        .get("disc.table")
        .cloned()
        .ok_or_else(|| Error::Checkpoint("missing tensor disc.table".into()))?;
    Ok((gen, DiscriminatorParams::new(table)))
}

pub fn history_csv(history: &[EpochStats]) -> String {
    let mut out = String::from("epoch,v_d,v_g\n");
    for h in history {
        writeln!(out, "{},{:.17e},{:.17e}", h.epoch, h.v_d, h.v_g).unwrap();
    }
    out
}

fn batch_ranges(len: usize, batch: usize) -> impl Iterator<Item = std::ops::Range<usize>> {
    (0..len).step_by(batch.max(1)).map(move |s| s..(s + batch).min(len))
}

struct Context<'a> {
    g: &'a MultiViewGraph,
    idx: NeighborIndex,
    cfg: &'a TrainConfig,
    probe: Vec<(usize, usize)>,
    probe_patterns: Vec<ConnectivityPattern>,
}

impl<'a> Context<'a> {
    fn new(g: &'a MultiViewGraph, cfg: &'a TrainConfig) -> Result<Self> {
        cfg.validate()?;
        if g.n() < 3 {
            return Err(Error::CannotSample(format!("graph has only {} nodes", g.n())));
        }
        let mut rng = derive(cfg.seed, "probe", 0);
        let probe = g.sample_positive_pairs(cfg.probe_pairs.max(1), &mut rng)?;
        let probe_patterns = probe
            .iter()
            .map(|&(i, j)| g.connectivity(i, j))
            .collect::<Result<_>>()?;
        Ok(Context {
            g,
            idx: g.neighbor_union(),
            cfg,
            probe,
            probe_patterns,
        })
    }

    fn stats(&self, state: &TrainState, epoch: usize) -> Result<EpochStats> {
        let seed = derive_seed(self.cfg.seed, "probe-neg", 0);
        let negs = select_negatives(&state.gen, self.g, &self.idx, &self.probe, self.cfg.mode, seed, self.cfg.exec)?;
        let neg_pairs: Vec<(usize, usize)> = self.probe.iter().zip(&negs).map(|(&(i, _), &c)| (i, c)).collect();
        let v_d = state.disc.objective(&self.probe, &neg_pairs)?;
        let mut v_g = 0.0;
        for &(i, c) in &neg_pairs {
            v_g += state.disc.reward(i, c)?;
        }
        v_g /= neg_pairs.len() as f64;
        let mut ll = 0.0;
        for (&(i, j), pat) in self.probe.iter().zip(&self.probe_patterns) {
            ll += state.gen.log_joint_prob(i, j, pat)?;
        }
        let gen_ll = ll / self.probe.len() as f64;
        let s = EpochStats {
            epoch,
            v_d,
            v_g,
            gen_ll,
        };
        if ![v_d, v_g, gen_ll].iter().all(|v| v.is_finite()) {
            return Err(Error::Numeric(format!("epoch {epoch}: non-finite value estimate {s:?}")));
        }
        Ok(s)
    }

    fn pretrain_epoch(&self, state: &mut TrainState, epoch: usize) -> Result<()> {
        let g = self.g;
        let m = g.union_edges().len();
        let mut rng = derive(self.cfg.seed, "pretrain-g", epoch as u64);
        let pos = g.sample_positive_pairs(m, &mut rng)?;
        let mut items = Vec::with_capacity(2 * m);
        for &(i, j) in &pos {
            items.push(GenItem {
                i,
                c: j,
                pattern: g.connectivity(i, j)?,
                reward: -1.0,
            });
        }
        for _ in 0..m {
            let (i, j) = g.sample_non_edge(&mut rng)?;
            items.push(GenItem {
                i,
                c: j,
                pattern: ConnectivityPattern::zeros(g.k()),
                reward: -1.0,
            });
        }
        items.shuffle(&mut rng);
        for r in batch_ranges(items.len(), self.cfg.batch_size) {
            let grad = state.gen.generator_gradient_with(&items[r], self.cfg.exec)?;
            state.apply_gen(&grad)?;
        }

        let mut rng = derive(self.cfg.seed, "pretrain-d", epoch as u64);
        let pos = g.sample_positive_pairs(m, &mut rng)?;
        let neg = (0..m).map(|_| g.sample_non_edge(&mut rng)).collect::<Result<Vec<_>>>()?;
        let half = (self.cfg.batch_size / 2).max(1);
        for r in batch_ranges(m, half) {
            let grad = state
                .disc
                .discriminator_gradient_with(&pos[r.clone()], &neg[r], self.cfg.exec)?;
            state.apply_disc(&grad)?;
        }
        Ok(())
    }

    /// One positive pair `(i, j)` per node that has union neighbors.
    fn node_positives<R: Rng>(&self, per_node: usize, rng: &mut R) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for i in 0..self.g.n() {
            let nb = self.idx.neighbors(i);
            if nb.is_empty() {
                continue;
            }
            for _ in 0..per_node {
                out.push((i, nb[rng.random_range(0..nb.len())]));
            }
        }
        out
    }

    fn g_step(&self, state: &mut TrainState, epoch: usize, step: usize) -> Result<()> {
        let tag = (epoch as u64) << 20 | step as u64;
        let mut rng = derive(self.cfg.seed, "g-step", tag);
        let mut positives = self.node_positives(1, &mut rng);
        positives.shuffle(&mut rng);
        let s = self.cfg.s;
        let pairs_per_batch = (self.cfg.batch_size / s).max(1);
        for (b, r) in batch_ranges(positives.len(), pairs_per_batch).enumerate() {
            let requests: Vec<(usize, usize)> = positives[r]
                .iter()
                .flat_map(|&p| std::iter::repeat_n(p, s))
                .collect();
            let seed = derive_seed(self.cfg.seed, "g-select", tag << 24 | b as u64);
            let negs = select_negatives(&state.gen, self.g, &self.idx, &requests, self.cfg.mode, seed, self.cfg.exec)?;
            let mut items = Vec::with_capacity(requests.len());
            for (&(i, j), &c) in requests.iter().zip(&negs) {
                items.push(GenItem {
                    i,
                    c,
                    pattern: self.g.connectivity(i, j)?,
                    reward: state.disc.reward(i, c)?,
                });
            }
            if self.cfg.reward_baseline {
                let mean = items.iter().map(|it| it.reward).sum::<f64>() / items.len() as f64;
                items.iter_mut().for_each(|it| it.reward -= mean);
            }
            let grad = state.gen.generator_gradient_with(&items, self.cfg.exec)?;
            state.apply_gen(&grad)?;
        }
        Ok(())
    }

    fn d_step(&self, state: &mut TrainState, epoch: usize, step: usize) -> Result<()> {
        let tag = (epoch as u64) << 20 | step as u64;
        let mut rng = derive(self.cfg.seed, "d-step", tag);
        let mut positives = if self.cfg.d_step_per_edge {
            self.g
                .union_edges()
                .iter()
                .map(|&(a, b)| if rng.random_bool(0.5) { (a, b) } else { (b, a) })
                .collect()
        } else {
            self.node_positives(self.cfg.t, &mut rng)
        };
        positives.shuffle(&mut rng);
        let half = (self.cfg.batch_size / 2).max(1);
        for (b, r) in batch_ranges(positives.len(), half).enumerate() {
            let pos = &positives[r];
            let seed = derive_seed(self.cfg.seed, "d-select", tag << 24 | b as u64);
            let negs = select_negatives(&state.gen, self.g, &self.idx, pos, self.cfg.mode, seed, self.cfg.exec)?;
            let neg: Vec<(usize, usize)> = pos.iter().zip(&negs).map(|(&(i, _), &c)| (i, c)).collect();
            let grad = state.disc.discriminator_gradient_with(pos, &neg, self.cfg.exec)?;
            state.apply_disc(&grad)?;
        }
        Ok(())
    }
}

/// Initialize and pretrain both players by maximum likelihood.
///
/// The generator maximizes `log G(K_ij | i, j)` on sampled edges and
/// `log G(0 | i, j)` on as many random non-adjacent pairs; the discriminator
/// separates sampled edges from random non-adjacent pairs.
pub fn pretrain(g: &MultiViewGraph, cfg: &TrainConfig) -> Result<TrainState> {
    let ctx = Context::new(g, cfg)?;
    let mut state = TrainState::init(g, cfg)?;
    for e in 0..cfg.pretrain_epochs {
        ctx.pretrain_epoch(&mut state, e)
            .map_err(|err| err.context(format!("pretrain epoch {e}")))?;
    }
    state.history.push(ctx.stats(&state, 0)?);
    Ok(state)
}

/// Pretrain, then run the adversarial epochs.
pub fn train(g: &MultiViewGraph, cfg: &TrainConfig) -> Result<TrainState> {
    let state = pretrain(g, cfg)?;
    train_from(g, cfg, state)
}

/// Run `cfg.epochs` adversarial epochs starting from `state`.
pub fn train_from(g: &MultiViewGraph, cfg: &TrainConfig, mut state: TrainState) -> Result<TrainState> {
    let ctx = Context::new(g, cfg)?;
    let mut still = 0;
    for _ in 0..cfg.epochs {
        let e = state.epoch + 1;
        for s in 0..cfg.g_steps {
            ctx.g_step(&mut state, e, s)
                .map_err(|err| err.context(format!("epoch {e} G-step {s}")))?;
        }
        for s in 0..cfg.d_steps {
            ctx.d_step(&mut state, e, s)
                .map_err(|err| err.context(format!("epoch {e} D-step {s}")))?;
        }
        state.epoch = e;
        let stats = ctx.stats(&state, e)?;
        if cfg.eval_every > 0 && e.is_multiple_of(cfg.eval_every) {
            log::info!(
                "epoch {e}: v_d {:.5} v_g {:.5} log G {:.5}",
                stats.v_d,
                stats.v_g,
                stats.gen_ll
            );
        }
        let prev = state.history.last().map(|h| h.gen_ll);
        state.history.push(stats);
        if cfg.early_stop {
            if prev.is_some_and(|p| (stats.gen_ll - p).abs() < 1e-5) {
                still += 1;
            } else {
                still = 0;
            }
            if still >= 5 {
                log::info!("early stop at epoch {e}");
                break;
            }
        }
    }
    Ok(state)
}
