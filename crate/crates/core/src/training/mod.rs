//! Alternating three-part optimization.
//!
//! Steps cycle through three phases, switching every `alternation_period`
//! steps:
//!
//! * `KGE`: entity and relation embeddings on KG triples.
//! * `REG`: regression blocks and type embeddings on entity-type pairs,
//!   with the KG embeddings frozen.
//! * `TPE`: type and type-space relation embeddings on type triples.
//!
//! Each step samples a batch from its phase's source, draws negatives,
//! fans the per-example gradient computation out over rayon and applies the
//! merged gradient with lazy sparse Adam. Example gradients are merged in
//! batch order, so results do not depend on the thread count.

mod config;
mod optim;

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

pub use config::TrainConfig;
pub use optim::{AdamParams, AdamState};

use crate::dataset::{
    sample_negative_entities, sample_negative_type_triples, sample_negative_types, BatchIter,
    CorruptMode, KgTriple, TripleStore, TypePair, TypeTriple,
};
use crate::embedding::{
    accumulate_gradients, phase_gradient, score_views, ComplexVector, EmbeddingTable, ModelKind,
    Parameterization, TripleGradient,
};
use crate::error::{Error, Result};
use crate::evaluation::{evaluate, RankingReport};
use crate::losses::{ns_loss_gradients, LossConfig};
use crate::model::{write_checkpoint, CheckpointMeta, CoreModel, ModelShape, VocabHashes};
use crate::regression::{accumulate_projected_grad, projected_score};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Phase {
    #[serde(rename = "KGE")]
    Kge,
    #[serde(rename = "REG")]
    Reg,
    #[serde(rename = "TPE")]
    Tpe,
}

impl Phase {
    pub fn name(self) -> &'static str {
        match self {
            Phase::Kge => "KGE",
            Phase::Reg => "REG",
            Phase::Tpe => "TPE",
        }
    }
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// `[KGE, REG, TPE][(step / period) mod 3]`.
pub fn schedule(step: u64, period: u64) -> Phase {
    match (step / period.max(1)) % 3 {
        0 => Phase::Kge,
        1 => Phase::Reg,
        _ => Phase::Tpe,
    }
}

/// Phase for `step` under `cfg`, KGE throughout the warm-up.
pub fn phase_at(step: u64, cfg: &TrainConfig) -> Phase {
    if step < cfg.warmup_steps {
        Phase::Kge
    } else {
        schedule(step - cfg.warmup_steps, cfg.alternation_period)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Batch {
    Kge(Vec<KgTriple>),
    Reg(Vec<TypePair>),
    Tpe(Vec<TypeTriple>),
}

impl Batch {
    pub fn phase(&self) -> Phase {
        match self {
            Batch::Kge(_) => Phase::Kge,
            Batch::Reg(_) => Phase::Reg,
            Batch::Tpe(_) => Phase::Tpe,
        }
    }

    pub fn len(&self) -> usize {
        match self {
            Batch::Kge(b) => b.len(),
            Batch::Reg(b) => b.len(),
            Batch::Tpe(b) => b.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepOutcome {
    /// Index of the step just taken.
    pub step: u64,
    pub phase: Phase,
    pub loss: f64,
}

#[derive(Debug, Clone)]
struct Optimizers {
    entities: AdamState,
    relations: AdamState,
    types: AdamState,
    type_relations: AdamState,
    regression: [AdamState; 4],
}

impl Optimizers {
    fn for_model(m: &CoreModel) -> Self {
        let n = m.regression.k() * m.regression.l();
        Optimizers {
            entities: AdamState::new(m.entities.parameter_count()),
            relations: AdamState::new(m.relations.parameter_count()),
            types: AdamState::new(m.types.parameter_count()),
            type_relations: AdamState::new(m.type_relations.parameter_count()),
            regression: std::array::from_fn(|_| AdamState::new(n)),
        }
    }
}

pub struct Trainer<'a> {
    cfg: TrainConfig,
    store: &'a TripleStore,
    model: CoreModel,
    opt: Optimizers,
    adam: AdamParams,
    rng: ChaCha8Rng,
    kg_batches: BatchIter,
    tp_batches: BatchIter,
    tt_batches: BatchIter,
    kg_known: HashSet<KgTriple>,
    tp_known: HashSet<TypePair>,
    tt_known: HashSet<TypeTriple>,
    step: u64,
}

impl<'a> Trainer<'a> {
    pub fn new(cfg: &TrainConfig, store: &'a TripleStore) -> Result<Self> {
        cfg.validate()?;
        let mut init_rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let model = CoreModel::init(
            ModelShape {
                kind: cfg.model,
                k: cfg.k,
                l: cfg.l,
                n_entities: store.n_entities,
                n_relations: store.n_relations,
                n_types: store.n_types,
            },
            cfg.kge_loss().gamma,
            cfg.tpe_loss().gamma,
            &mut init_rng,
        );
        Self::with_model(cfg, store, model)
    }

    /// Starts from an existing parameter set (fresh optimizer state).
    pub fn with_model(cfg: &TrainConfig, store: &'a TripleStore, model: CoreModel) -> Result<Self> {
        cfg.validate()?;
        let seed = cfg.seed;
        Ok(Trainer {
            opt: Optimizers::for_model(&model),
            adam: AdamParams::default(),
            rng: ChaCha8Rng::seed_from_u64(seed.wrapping_add(4)),
            kg_batches: BatchIter::new(store.kg_train.len(), seed.wrapping_add(1)),
            tp_batches: BatchIter::new(store.tp_train.len(), seed.wrapping_add(2)),
            tt_batches: BatchIter::new(store.tt_train.len(), seed.wrapping_add(3)),
            kg_known: store.kg_train.iter().copied().collect(),
            tp_known: store.tp_train.iter().copied().collect(),
            tt_known: store.tt_train.iter().copied().collect(),
            cfg: cfg.clone(),
            store,
            model,
            step: 0,
        })
    }

    pub fn model(&self) -> &CoreModel {
        &self.model
    }

    pub fn into_model(self) -> CoreModel {
        self.model
    }

    pub fn config(&self) -> &TrainConfig {
        &self.cfg
    }

    pub fn steps_done(&self) -> u64 {
        self.step
    }

    pub fn current_phase(&self) -> Phase {
        phase_at(self.step, &self.cfg)
    }

    /// Draws the next batch for the current phase.
    pub fn next_batch(&mut self) -> Batch {
        match self.current_phase() {
            Phase::Kge => Batch::Kge(
                self.kg_batches
                    .next_batch(self.cfg.entity_batch)
                    .into_iter()
                    .map(|i| self.store.kg_train[i])
                    .collect(),
            ),
            Phase::Reg => Batch::Reg(
                self.tp_batches
                    .next_batch(self.cfg.type_batch)
                    .into_iter()
                    .map(|i| self.store.tp_train[i])
                    .collect(),
            ),
            Phase::Tpe => Batch::Tpe(
                self.tt_batches
                    .next_batch(self.cfg.type_batch)
                    .into_iter()
                    .map(|i| self.store.tt_train[i])
                    .collect(),
            ),
        }
    }

    /// Samples a batch for the current phase and trains on it.
    pub fn step(&mut self) -> Result<StepOutcome> {
        let batch = self.next_batch();
        let phase = batch.phase();
        let step = self.step;
        let loss = self.train_step(&batch)?;
        Ok(StepOutcome { step, phase, loss })
    }

    /// One update on `batch`, which must match the current phase. Only the
    /// phase's parameter tables are written, and only rows in the batch or
    /// its negatives. An empty batch leaves everything untouched.
    pub fn train_step(&mut self, batch: &Batch) -> Result<f64> {
        let phase = self.current_phase();
        if batch.phase() != phase {
            return Err(Error::Config(format!(
                "{} batch supplied during {} phase",
                batch.phase(),
                phase
            )));
        }
        let lr = self.cfg.learning_rate(self.step);
        let loss = match batch {
            Batch::Kge(b) => self.kge_step(b, lr),
            Batch::Reg(b) => self.reg_step(b, lr),
            Batch::Tpe(b) => self.tpe_step(b, lr),
        };
        if !loss.is_finite() {
            return Err(Error::NonFiniteLoss {
                step: self.step,
                phase: phase.name(),
                loss,
            });
        }
        self.step += 1;
        Ok(loss)
    }

    fn kge_step(&mut self, batch: &[KgTriple], lr: f64) -> f64 {
        if batch.is_empty() {
            return 0.0;
        }
        let nsz = self.cfg.neg_size;
        let n_subj = nsz / 2;
        let examples: Vec<TripleExample> = batch
            .iter()
            .map(|&t| {
                let mut negs: Vec<(usize, usize)> = Vec::with_capacity(nsz);
                for (mode, n) in [(CorruptMode::Subject, n_subj), (CorruptMode::Object, nsz - n_subj)] {
                    let drawn = sample_negative_entities(
                        t,
                        n,
                        mode,
                        self.store.n_entities,
                        &self.kg_known,
                        &mut self.rng,
                    );
                    negs.extend(drawn.iter().map(|c| (c.subject.index(), c.object.index())));
                }
                TripleExample {
                    relation: t.relation.index(),
                    pos: (t.subject.index(), t.object.index()),
                    negs,
                }
            })
            .collect();
        let cfg = self.cfg.kge_loss();
        let m = &mut self.model;
        triple_space_update(
            m.kind,
            &mut m.entities,
            &mut m.relations,
            &mut self.opt.entities,
            &mut self.opt.relations,
            &examples,
            &cfg,
            lr,
            &self.adam,
        )
    }

    fn tpe_step(&mut self, batch: &[TypeTriple], lr: f64) -> f64 {
        if batch.is_empty() {
            return 0.0;
        }
        let nsz = self.cfg.neg_size;
        let n_subj = nsz / 2;
        let examples: Vec<TripleExample> = batch
            .iter()
            .map(|&t| {
                let mut negs: Vec<(usize, usize)> = Vec::with_capacity(nsz);
                for (mode, n) in [(CorruptMode::Subject, n_subj), (CorruptMode::Object, nsz - n_subj)] {
                    let drawn = sample_negative_type_triples(
                        t,
                        n,
                        mode,
                        self.store.n_types,
                        &self.tt_known,
                        &mut self.rng,
                    );
                    negs.extend(drawn.iter().map(|c| (c.subject_type.index(), c.object_type.index())));
                }
                TripleExample {
                    relation: t.relation.index(),
                    pos: (t.subject_type.index(), t.object_type.index()),
                    negs,
                }
            })
            .collect();
        let cfg = self.cfg.tpe_loss();
        let m = &mut self.model;
        triple_space_update(
            m.kind,
            &mut m.types,
            &mut m.type_relations,
            &mut self.opt.types,
            &mut self.opt.type_relations,
            &examples,
            &cfg,
            lr,
            &self.adam,
        )
    }

    fn reg_step(&mut self, batch: &[TypePair], lr: f64) -> f64 {
        if batch.is_empty() {
            return 0.0;
        }
        let nsz = self.cfg.neg_size;
        let examples: Vec<(usize, usize, Vec<usize>)> = batch
            .iter()
            .map(|&p| {
                let negs = sample_negative_types(p, nsz, self.store.n_types, &self.tp_known, &mut self.rng)
                    .into_iter()
                    .map(|n| n.ty.index())
                    .collect();
                (p.entity.index(), p.ty.index(), negs)
            })
            .collect();
        let cfg = self.cfg.reg_loss();
        let scale = 1.0 / batch.len() as f64;
        let model = &self.model;
        let l = model.l();

        let grads: Vec<RegExampleGrad> = examples
            .par_iter()
            .map(|(e, t, negs)| reg_example(model, *e, *t, negs, &cfg))
            .collect();

        let mut type_grads: BTreeMap<usize, Vec<f64>> = BTreeMap::new();
        let mut loss = 0.0;
        for g in &grads {
            loss += g.loss;
            for (row, gv) in &g.types {
                add_free_row(&mut type_grads, *row, gv, scale);
            }
        }

        let k = model.k();
        let ents = &model.entities;
        let mut block_grads: [Vec<f64>; 4] = std::array::from_fn(|_| vec![0.0; k * l]);
        // Block order matches RegressionMap::blocks: rr, ir, ri, ii.
        for (bi, block) in block_grads.iter_mut().enumerate() {
            block.par_chunks_mut(l).enumerate().for_each(|(i, row)| {
                for ((e, _, _), g) in examples.iter().zip(&grads) {
                    let x = ents.view(*e);
                    let xin = if bi % 2 == 0 { x.re[i] } else { x.im[i] };
                    let gout = if bi < 2 { &g.g_out.re } else { &g.g_out.im };
                    let c = xin * scale;
                    for (r, go) in row.iter_mut().zip(gout) {
                        *r += c * go;
                    }
                }
            });
        }

        let width = self.model.types.row_width();
        self.opt
            .types
            .update_rows(self.model.types.raw_mut(), width, &type_grads, lr, &self.adam);
        for ((block, grad), st) in self
            .model
            .regression
            .blocks_mut()
            .into_iter()
            .zip(&block_grads)
            .zip(self.opt.regression.iter_mut())
        {
            st.update_dense(block, grad, lr, &self.adam);
        }
        loss * scale
    }
}

struct TripleExample {
    relation: usize,
    pos: (usize, usize),
    negs: Vec<(usize, usize)>,
}

struct TripleExampleGrad {
    loss: f64,
    relation: usize,
    relation_grad: ComplexVector,
    rows: Vec<(usize, ComplexVector)>,
}

fn triple_example(
    kind: ModelKind,
    nodes: &EmbeddingTable,
    w: &ComplexVector,
    ex: &TripleExample,
    cfg: &LossConfig,
) -> TripleExampleGrad {
    let wv = w.view();
    let score = |(s, o): (usize, usize)| score_views(kind, wv, nodes.view(s), nodes.view(o));
    let pos = score(ex.pos);
    let negs: Vec<f64> = ex.negs.iter().map(|&p| score(p)).collect();
    let lg = ns_loss_gradients(pos, &negs, cfg);

    let d = nodes.dim();
    let mut g = TripleGradient::zeros(d);
    let mut rows: BTreeMap<usize, ComplexVector> = BTreeMap::new();
    let terms = std::iter::once((ex.pos, lg.d_pos)).chain(ex.negs.iter().copied().zip(lg.d_neg.iter().copied()));
    for ((s, o), coef) in terms {
        if coef == 0.0 {
            continue;
        }
        g.subject.fill_zero();
        g.object.fill_zero();
        accumulate_gradients(kind, wv, nodes.view(s), nodes.view(o), coef, &mut g);
        for (row, part) in [(s, &g.subject), (o, &g.object)] {
            let acc = rows.entry(row).or_insert_with(|| ComplexVector::zeros(d));
            for j in 0..d {
                acc.re[j] += part.re[j];
                acc.im[j] += part.im[j];
            }
        }
    }
    TripleExampleGrad {
        loss: lg.loss,
        relation: ex.relation,
        relation_grad: g.relation,
        rows: rows.into_iter().collect(),
    }
}

fn add_free_row(acc: &mut BTreeMap<usize, Vec<f64>>, row: usize, g: &ComplexVector, scale: f64) {
    let d = g.dim();
    let slot = acc.entry(row).or_insert_with(|| vec![0.0; 2 * d]);
    for j in 0..d {
        slot[j] += scale * g.re[j];
        slot[d + j] += scale * g.im[j];
    }
}

#[allow(clippy::too_many_arguments)]
fn triple_space_update(
    kind: ModelKind,
    nodes: &mut EmbeddingTable,
    relations: &mut EmbeddingTable,
    node_opt: &mut AdamState,
    rel_opt: &mut AdamState,
    examples: &[TripleExample],
    cfg: &LossConfig,
    lr: f64,
    hp: &AdamParams,
) -> f64 {
    let rel_rows: BTreeMap<usize, ComplexVector> = examples
        .iter()
        .map(|e| e.relation)
        .collect::<std::collections::BTreeSet<_>>()
        .into_iter()
        .map(|r| (r, relations.row(r)))
        .collect();
    let nodes_ro: &EmbeddingTable = nodes;
    let grads: Vec<TripleExampleGrad> = examples
        .par_iter()
        .map(|ex| triple_example(kind, nodes_ro, &rel_rows[&ex.relation], ex, cfg))
        .collect();

    let scale = 1.0 / examples.len() as f64;
    let mut node_grads: BTreeMap<usize, Vec<f64>> = BTreeMap::new();
    let mut rel_grads: BTreeMap<usize, ComplexVector> = BTreeMap::new();
    let mut loss = 0.0;
    for g in &grads {
        loss += g.loss;
        for (row, gv) in &g.rows {
            add_free_row(&mut node_grads, *row, gv, scale);
        }
        let d = g.relation_grad.dim();
        let acc = rel_grads
            .entry(g.relation)
            .or_insert_with(|| ComplexVector::zeros(d));
        for j in 0..d {
            acc.re[j] += scale * g.relation_grad.re[j];
            acc.im[j] += scale * g.relation_grad.im[j];
        }
    }

    let rel_raw: BTreeMap<usize, Vec<f64>> = rel_grads
        .into_iter()
        .map(|(r, g)| {
            let raw = match relations.parameterization() {
                Parameterization::UnitPhase => phase_gradient(relations.row_raw(r), &g),
                Parameterization::FreeComplex => g.re.iter().chain(&g.im).copied().collect(),
            };
            (r, raw)
        })
        .collect();

    let nw = nodes.row_width();
    node_opt.update_rows(nodes.raw_mut(), nw, &node_grads, lr, hp);
    let rw = relations.row_width();
    rel_opt.update_rows(relations.raw_mut(), rw, &rel_raw, lr, hp);
    loss * scale
}

struct RegExampleGrad {
    loss: f64,
    g_out: ComplexVector,
    types: Vec<(usize, ComplexVector)>,
}

fn reg_example(model: &CoreModel, e: usize, t: usize, negs: &[usize], cfg: &LossConfig) -> RegExampleGrad {
    let p = model.regression.project_view(model.entities.view(e));
    let types = &model.types;
    let pos = projected_score(p.view(), types.view(t));
    let neg_scores: Vec<f64> = negs.iter().map(|&n| projected_score(p.view(), types.view(n))).collect();
    let lg = ns_loss_gradients(pos, &neg_scores, cfg);

    let l = model.l();
    let mut g_out = ComplexVector::zeros(l);
    let mut rows: BTreeMap<usize, ComplexVector> = BTreeMap::new();
    let terms = std::iter::once((t, lg.d_pos)).chain(negs.iter().copied().zip(lg.d_neg.iter().copied()));
    for (ty, coef) in terms {
        if coef == 0.0 {
            continue;
        }
        let gt = rows.entry(ty).or_insert_with(|| ComplexVector::zeros(l));
        accumulate_projected_grad(p.view(), types.view(ty), coef, &mut g_out, gt);
    }
    RegExampleGrad {
        loss: lg.loss,
        g_out,
        types: rows.into_iter().collect(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LogRecord {
    pub step: u64,
    pub phase: Phase,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub loss: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub valid_mrr: Option<f64>,
}

/// Where `run_training` writes its log and checkpoints.
#[derive(Debug, Clone, Default)]
pub struct RunOutput {
    pub dir: PathBuf,
    pub vocab_hashes: Option<VocabHashes>,
    pub data_dir: Option<PathBuf>,
    pub manifest: Option<String>,
}

pub const LOG_FILE: &str = "train_log.jsonl";
pub const FINAL_CHECKPOINT: &str = "final.bin";

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub model: CoreModel,
    /// Loss of every step, in order.
    pub losses: Vec<f64>,
    pub log: Vec<LogRecord>,
    pub initial_valid_mrr: Option<f64>,
    pub final_valid_mrr: Option<f64>,
    pub final_checkpoint: Option<PathBuf>,
}

/// Evenly spaced subset of at most `cap` pairs, in file order.
pub fn validation_sample(pairs: &[TypePair], cap: usize) -> Vec<TypePair> {
    if pairs.len() <= cap {
        return pairs.to_vec();
    }
    (0..cap).map(|i| pairs[i * pairs.len() / cap]).collect()
}

fn validation_mrr(model: &CoreModel, store: &TripleStore, sample: &[TypePair]) -> Result<Option<f64>> {
    if sample.is_empty() {
        return Ok(None);
    }
    let report: RankingReport = evaluate(sample, model, store)?;
    Ok(Some(report.mrr))
}

fn checkpoint_meta(cfg: &TrainConfig, model: &CoreModel, step: u64, out: &RunOutput) -> Result<CheckpointMeta> {
    let mut meta = CheckpointMeta::for_model(model, step);
    meta.hyperparameters = serde_json::to_value(cfg)?;
    meta.vocab_hashes = out.vocab_hashes.clone();
    meta.data_dir = out.data_dir.clone();
    meta.manifest = out.manifest.clone();
    Ok(meta)
}

fn write_dump(dir: &Path, trainer: &Trainer<'_>, err: &Error) -> Result<()> {
    let m = trainer.model();
    let dump = serde_json::json!({
        "error": err.to_string(),
        "step": trainer.steps_done(),
        "phase": trainer.current_phase().name(),
        "learning_rate": trainer.config().learning_rate(trainer.steps_done()),
        "finite": {
            "entities": m.entities.raw().iter().all(|x| x.is_finite()),
            "relations": m.relations.raw().iter().all(|x| x.is_finite()),
            "types": m.types.raw().iter().all(|x| x.is_finite()),
            "type_relations": m.type_relations.raw().iter().all(|x| x.is_finite()),
            "regression": m.regression.is_finite(),
        },
    });
    let path = dir.join("nonfinite_dump.json");
    fs::write(&path, serde_json::to_string_pretty(&dump)?).map_err(|e| Error::io(&path, e))
}

/// Runs `cfg.total_steps` steps, validating on `tp_valid` every
/// alternation period and at the end.
pub fn run_training(cfg: &TrainConfig, store: &TripleStore, out: Option<&RunOutput>) -> Result<TrainOutcome> {
    let mut trainer = Trainer::new(cfg, store)?;
    let sample = validation_sample(&store.tp_valid, cfg.valid_cap);

    let mut log_file = match out {
        Some(o) => {
            fs::create_dir_all(&o.dir).map_err(|e| Error::io(&o.dir, e))?;
            let path = o.dir.join(LOG_FILE);
            Some((BufWriter::new(fs::File::create(&path).map_err(|e| Error::io(&path, e))?), path))
        }
        None => None,
    };
    let mut log = Vec::new();
    let mut emit = |rec: LogRecord, log: &mut Vec<LogRecord>| -> Result<()> {
        if let Some((w, path)) = log_file.as_mut() {
            let line = serde_json::to_string(&rec)?;
            writeln!(w, "{line}").map_err(|e| Error::io(&*path, e))?;
        }
        log.push(rec);
        Ok(())
    };

    let initial_valid_mrr = validation_mrr(trainer.model(), store, &sample)?;
    emit(
        LogRecord {
            step: 0,
            phase: trainer.current_phase(),
            loss: None,
            valid_mrr: initial_valid_mrr,
        },
        &mut log,
    )?;

    let mut losses = Vec::with_capacity(cfg.total_steps as usize);
    let mut last_valid = initial_valid_mrr;
    for _ in 0..cfg.total_steps {
        let outcome = match trainer.step() {
            Ok(o) => o,
            Err(err) => {
                if let Some(o) = out {
                    write_dump(&o.dir, &trainer, &err)?;
                }
                log::error!("aborting: {err}");
                return Err(err);
            }
        };
        losses.push(outcome.loss);
        let done = outcome.step + 1;
        let validate = done % cfg.alternation_period == 0 || done == cfg.total_steps;
        let valid_mrr = if validate {
            let v = validation_mrr(trainer.model(), store, &sample)?;
            last_valid = v;
            if let Some(v) = v {
                log::info!("step {done} ({}) loss {:.5} valid MRR {:.4}", outcome.phase, outcome.loss, v);
            }
            v
        } else {
            None
        };
        if validate || done % cfg.log_interval == 0 {
            emit(
                LogRecord {
                    step: done,
                    phase: outcome.phase,
                    loss: Some(outcome.loss),
                    valid_mrr,
                },
                &mut log,
            )?;
        }
        if let Some(o) = out {
            if cfg.checkpoint_interval > 0 && done % cfg.checkpoint_interval == 0 && done != cfg.total_steps {
                let path = o.dir.join(format!("ckpt_{done:08}.bin"));
                write_checkpoint(&path, trainer.model(), &checkpoint_meta(cfg, trainer.model(), done, o)?)?;
            }
        }
    }

    if let Some((w, path)) = log_file.as_mut() {
        w.flush().map_err(|e| Error::io(&*path, e))?;
    }
    let mut final_checkpoint = None;
    if let Some(o) = out {
        let path = o.dir.join(FINAL_CHECKPOINT);
        let model = trainer.model();
        write_checkpoint(&path, model, &checkpoint_meta(cfg, model, trainer.steps_done(), o)?)?;
        final_checkpoint = Some(path);
    }
    Ok(TrainOutcome {
        model: trainer.into_model(),
        losses,
        log,
        initial_valid_mrr,
        final_valid_mrr: last_valid,
        final_checkpoint,
    })
}
