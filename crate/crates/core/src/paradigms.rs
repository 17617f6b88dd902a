//! The four training regimes: specialized, joint, sequential, and rehearsal.
//!
//! All regimes share one inner loop (`train_epochs`) and one initialization
//! per seed, emit immutable checkpoints, and derive every random stream from
//! `(seed, tag)` so identical inputs give bit-identical checkpoints. The
//! per-domain batch shuffle is keyed by domain id (not step position), which
//! makes a single-domain stream coincide exactly with specialized training
//! and makes rehearsal with replay_ratio 0 coincide exactly with sequential.

use std::cell::RefCell;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::data::{DomainDataset, Sample, Vocabulary};
use crate::error::{Error, Result};
use crate::model::{adam_step, backward, init_params, AdamHyper, ModelParams, OptState};
use crate::replay::ReplayBuffer;
use crate::seeding::derived_rng;

/// Shared training configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub epochs_per_step: usize,
    pub batch_size: usize,
    /// Fraction of each rehearsal batch drawn from the replay buffer.
    pub replay_ratio: f64,
    pub buffer_capacity: usize,
    pub embed_dim: usize,
    #[serde(flatten)]
    pub hyper: AdamHyper,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs_per_step: 30,
            batch_size: 8,
            replay_ratio: 0.25,
            buffer_capacity: 100,
            embed_dim: 8,
            hyper: AdamHyper::default(),
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs_per_step == 0 {
            return Err(Error::InvalidSpec("epochs_per_step must be >= 1".into()));
        }
        if self.batch_size == 0 {
            return Err(Error::InvalidSpec("batch_size must be >= 1".into()));
        }
        if !(0.0..=1.0).contains(&self.replay_ratio) {
            return Err(Error::InvalidSpec(format!(
                "replay_ratio {} outside [0, 1]",
                self.replay_ratio
            )));
        }
        if self.buffer_capacity == 0 {
            return Err(Error::InvalidCapacity(0));
        }
        if self.embed_dim == 0 {
            return Err(Error::InvalidDims("embed_dim must be >= 1".into()));
        }
        if !(self.hyper.base_lr > 0.0) || !(self.hyper.text_lr > 0.0) {
            return Err(Error::InvalidSpec("learning rates must be > 0".into()));
        }
        if !(0.0..1.0).contains(&self.hyper.beta1) || !(0.0..1.0).contains(&self.hyper.beta2) {
            return Err(Error::InvalidSpec("betas must lie in [0, 1)".into()));
        }
        if !(self.hyper.epsilon > 0.0) || self.hyper.weight_decay < 0.0 {
            return Err(Error::InvalidSpec("bad epsilon or weight_decay".into()));
        }
        Ok(())
    }
}

/// Hex SHA-256 of the canonical config serialization.
pub fn config_hash(cfg: &TrainConfig) -> String {
    let json = serde_json::to_string(cfg).expect("config serializes");
    let digest = Sha256::digest(json.as_bytes());
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub config_hash: String,
    pub seed: u64,
}

/// Immutable snapshot of the model after one training step.
#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub step: usize,
    pub domain_id: String,
    pub params: ModelParams,
    pub opt: OptState,
    pub provenance: Provenance,
}

/// Ordered list of domain ids for a continual run; no duplicates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<String>", into = "Vec<String>")]
pub struct StreamOrder(Vec<String>);

impl StreamOrder {
    pub fn new(ids: Vec<String>) -> Result<Self> {
        if ids.is_empty() {
            return Err(Error::NoDomains);
        }
        let mut seen = ids.clone();
        seen.sort_unstable();
        seen.dedup();
        if seen.len() != ids.len() {
            return Err(Error::InvalidSpec("stream order has duplicate ids".into()));
        }
        Ok(StreamOrder(ids))
    }

    pub fn ids(&self) -> &[String] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl TryFrom<Vec<String>> for StreamOrder {
    type Error = Error;

    fn try_from(ids: Vec<String>) -> Result<Self> {
        StreamOrder::new(ids)
    }
}

impl From<StreamOrder> for Vec<String> {
    fn from(order: StreamOrder) -> Vec<String> {
        order.0
    }
}

/// Source of per-domain datasets for the continual regimes. `fetch` is the
/// only way a regime can touch raw samples, so wrapping a store is enough to
/// audit data access.
pub trait DatasetStore {
    fn fetch(&self, domain_id: &str) -> Result<&DomainDataset>;
    fn contains(&self, domain_id: &str) -> bool;
}

impl DatasetStore for [DomainDataset] {
    fn fetch(&self, domain_id: &str) -> Result<&DomainDataset> {
        self.iter()
            .find(|ds| ds.domain_id == domain_id)
            .ok_or_else(|| Error::UnknownDomain(domain_id.to_string()))
    }

    fn contains(&self, domain_id: &str) -> bool {
        self.iter().any(|ds| ds.domain_id == domain_id)
    }
}

/// Records the order of raw-data fetches made through it.
pub struct LoggingStore<'a, S: DatasetStore + ?Sized> {
    inner: &'a S,
    accesses: RefCell<Vec<String>>,
}

impl<'a, S: DatasetStore + ?Sized> LoggingStore<'a, S> {
    pub fn new(inner: &'a S) -> Self {
        LoggingStore {
            inner,
            accesses: RefCell::new(Vec::new()),
        }
    }

    pub fn accesses(&self) -> Vec<String> {
        self.accesses.borrow().clone()
    }
}

impl<S: DatasetStore + ?Sized> DatasetStore for LoggingStore<'_, S> {
    fn fetch(&self, domain_id: &str) -> Result<&DomainDataset> {
        self.accesses.borrow_mut().push(domain_id.to_string());
        self.inner.fetch(domain_id)
    }

    fn contains(&self, domain_id: &str) -> bool {
        self.inner.contains(domain_id)
    }
}

pub struct TrainOutcome {
    pub params: ModelParams,
    pub opt: OptState,
    /// Mean batch loss per epoch that had batches.
    pub epoch_losses: Vec<f64>,
}

/// The shared inner loop: for each epoch, apply backward + Adam over the
/// provider's batches in order.
pub fn train_epochs<F>(
    mut params: ModelParams,
    mut opt: OptState,
    mut batches_for_epoch: F,
    cfg: &TrainConfig,
) -> Result<TrainOutcome>
where
    F: FnMut(usize) -> Result<Vec<Vec<Sample>>>,
{
    let mut epoch_losses = Vec::new();
    for epoch in 0..cfg.epochs_per_step {
        let batches = batches_for_epoch(epoch)?;
        if batches.is_empty() {
            continue;
        }
        let mut loss_sum = 0.0;
        for batch in &batches {
            let refs: Vec<&Sample> = batch.iter().collect();
            let (loss, grads) = backward(&params, &refs)?;
            let (next_params, next_opt) = adam_step(&params, &grads, &opt)?;
            params = next_params;
            opt = next_opt;
            loss_sum += loss;
        }
        epoch_losses.push(loss_sum / batches.len() as f64);
    }
    Ok(TrainOutcome {
        params,
        opt,
        epoch_losses,
    })
}

fn shuffle_rng(seed: u64, domain_id: &str, epoch: usize) -> ChaCha8Rng {
    derived_rng(seed, &format!("shuffle/{domain_id}/epoch/{epoch}"))
}

fn shuffled_batches(train: &[Sample], batch_size: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<Sample>> {
    let mut indices: Vec<usize> = (0..train.len()).collect();
    indices.shuffle(rng);
    indices
        .chunks(batch_size)
        .map(|chunk| chunk.iter().map(|&i| train[i].clone()).collect())
        .collect()
}

fn check_stream_dims(
    ds: &DomainDataset,
    feature_dim: usize,
    vocab: &Vocabulary,
) -> Result<()> {
    if ds.feature_dim != feature_dim {
        return Err(Error::Dimension(format!(
            "domain {} has feature_dim {}, stream has {feature_dim}",
            ds.domain_id, ds.feature_dim
        )));
    }
    if ds.vocab != *vocab {
        return Err(Error::Dimension(format!(
            "domain {} uses a different vocabulary",
            ds.domain_id
        )));
    }
    Ok(())
}

fn validated_dims(datasets: &[DomainDataset]) -> Result<(usize, Vocabulary)> {
    let first = datasets.first().ok_or(Error::NoDomains)?;
    for ds in datasets {
        ds.validate()?;
        check_stream_dims(ds, first.feature_dim, &first.vocab)?;
    }
    Ok((first.feature_dim, first.vocab.clone()))
}

/// One independent model per domain, each trained from the same seed
/// initialization on its own train split only.
pub fn train_specialized(
    datasets: &[DomainDataset],
    cfg: &TrainConfig,
) -> Result<Vec<Checkpoint>> {
    cfg.validate()?;
    let (feature_dim, vocab) = validated_dims(datasets)?;
    let init = init_params(feature_dim, vocab.len(), cfg.embed_dim, cfg.seed)?;
    let provenance = Provenance {
        config_hash: config_hash(cfg),
        seed: cfg.seed,
    };
    let mut checkpoints = Vec::with_capacity(datasets.len());
    for ds in datasets {
        let opt = OptState::new(&init, cfg.hyper);
        let outcome = train_epochs(
            init.clone(),
            opt,
            |epoch| {
                let mut rng = shuffle_rng(cfg.seed, &ds.domain_id, epoch);
                Ok(shuffled_batches(&ds.train, cfg.batch_size, &mut rng))
            },
            cfg,
        )?;
        checkpoints.push(Checkpoint {
            step: 1,
            domain_id: ds.domain_id.clone(),
            params: outcome.params,
            opt: outcome.opt,
            provenance: provenance.clone(),
        });
    }
    Ok(checkpoints)
}

fn joint_batch(datasets: &[DomainDataset], batch_size: usize, rng: &mut ChaCha8Rng) -> Vec<Sample> {
    (0..batch_size)
        .map(|_| {
            let d = rng.random_range(0..datasets.len());
            let i = rng.random_range(0..datasets[d].train.len());
            datasets[d].train[i].clone()
        })
        .collect()
}

/// One model over the equal-weight mixture of all datasets: every example in
/// every batch picks a dataset uniformly, then an example uniformly within
/// it. Runs `epochs_per_step * n` epoch-equivalents, each of
/// `ceil(mean_train_size / batch_size)` batches.
pub fn train_joint(datasets: &[DomainDataset], cfg: &TrainConfig) -> Result<Checkpoint> {
    cfg.validate()?;
    let (feature_dim, vocab) = validated_dims(datasets)?;
    let init = init_params(feature_dim, vocab.len(), cfg.embed_dim, cfg.seed)?;
    let opt = OptState::new(&init, cfg.hyper);

    let total: usize = datasets.iter().map(|d| d.train.len()).sum();
    let mean_size = total.div_ceil(datasets.len());
    let batches_per_epoch = mean_size.div_ceil(cfg.batch_size);
    let mut joint_cfg = cfg.clone();
    joint_cfg.epochs_per_step = cfg.epochs_per_step * datasets.len();

    let outcome = train_epochs(
        init,
        opt,
        |epoch| {
            let mut rng = derived_rng(cfg.seed, &format!("joint/epoch/{epoch}"));
            Ok((0..batches_per_epoch)
                .map(|_| joint_batch(datasets, cfg.batch_size, &mut rng))
                .collect())
        },
        &joint_cfg,
    )?;
    Ok(Checkpoint {
        step: 1,
        domain_id: "joint".to_string(),
        params: outcome.params,
        opt: outcome.opt,
        provenance: Provenance {
            config_hash: config_hash(cfg),
            seed: cfg.seed,
        },
    })
}

/// One model trained over the stream in order, step t reading only domain
/// t's train split; a checkpoint after every step. Optimizer state carries
/// across steps.
pub fn train_sequential(
    order: &StreamOrder,
    store: &(impl DatasetStore + ?Sized),
    cfg: &TrainConfig,
) -> Result<Vec<Checkpoint>> {
    continual_run(order, store, cfg, Replay::Off).map(|run| run.checkpoints)
}

/// Sequential training with a replay buffer: after each domain finishes, its
/// samples stream through the buffer, and later steps mix
/// `ceil(replay_ratio * batch_size)` buffer samples into every batch.
pub fn train_rehearsal(
    order: &StreamOrder,
    store: &(impl DatasetStore + ?Sized),
    cfg: &TrainConfig,
) -> Result<RehearsalRun> {
    continual_run(order, store, cfg, Replay::On)
}

pub struct RehearsalRun {
    pub checkpoints: Vec<Checkpoint>,
    /// Buffer state captured after each step's observe phase (empty for
    /// sequential runs).
    pub buffer_snapshots: Vec<ReplayBuffer>,
}

#[derive(PartialEq, Clone, Copy)]
enum Replay {
    Off,
    On,
}

fn continual_run(
    order: &StreamOrder,
    store: &(impl DatasetStore + ?Sized),
    cfg: &TrainConfig,
    replay: Replay,
) -> Result<RehearsalRun> {
    cfg.validate()?;
    for id in order.ids() {
        if !store.contains(id) {
            return Err(Error::UnknownDomain(id.clone()));
        }
    }
    let provenance = Provenance {
        config_hash: config_hash(cfg),
        seed: cfg.seed,
    };
    let replay_per_batch = if replay == Replay::On {
        (cfg.replay_ratio * cfg.batch_size as f64).ceil() as usize
    } else {
        0
    };

    let mut buffer = ReplayBuffer::new(cfg.buffer_capacity)?;
    let mut buffer_rng = derived_rng(cfg.seed, "buffer");
    let mut checkpoints = Vec::with_capacity(order.len());
    let mut buffer_snapshots = Vec::new();
    let mut state: Option<(ModelParams, OptState, usize, Vocabulary)> = None;

    for (step0, id) in order.ids().iter().enumerate() {
        let step = step0 + 1;
        let ds = store.fetch(id)?;
        ds.validate()?;
        let (params, opt) = match state.take() {
            None => {
                let params =
                    init_params(ds.feature_dim, ds.vocab.len(), cfg.embed_dim, cfg.seed)?;
                let opt = OptState::new(&params, cfg.hyper);
                state = Some((params, opt, ds.feature_dim, ds.vocab.clone()));
                let (p, o, _, _) = state.as_ref().unwrap();
                (p.clone(), o.clone())
            }
            Some((params, opt, feature_dim, vocab)) => {
                check_stream_dims(ds, feature_dim, &vocab)?;
                state = Some((params, opt, feature_dim, vocab));
                let (p, o, _, _) = state.as_ref().unwrap();
                (p.clone(), o.clone())
            }
        };

        let mix_replay = replay_per_batch > 0 && step > 1;
        let outcome = train_epochs(
            params,
            opt,
            |epoch| {
                let mut rng = shuffle_rng(cfg.seed, id, epoch);
                if !mix_replay {
                    return Ok(shuffled_batches(&ds.train, cfg.batch_size, &mut rng));
                }
                let mut replay_rng =
                    derived_rng(cfg.seed, &format!("replay/{id}/epoch/{epoch}"));
                rehearsal_batches(
                    &ds.train,
                    &buffer,
                    cfg.batch_size,
                    replay_per_batch,
                    &mut rng,
                    &mut replay_rng,
                )
            },
            cfg,
        )?;

        checkpoints.push(Checkpoint {
            step,
            domain_id: id.clone(),
            params: outcome.params.clone(),
            opt: outcome.opt.clone(),
            provenance: provenance.clone(),
        });
        if let Some(entry) = state.as_mut() {
            entry.0 = outcome.params;
            entry.1 = outcome.opt;
        }

        if replay == Replay::On {
            buffer.rebalance(&order.ids()[..step], &mut buffer_rng)?;
            for sample in &ds.train {
                buffer.observe(id, sample, &mut buffer_rng);
            }
            buffer_snapshots.push(buffer.clone());
        }
    }
    Ok(RehearsalRun {
        checkpoints,
        buffer_snapshots,
    })
}

fn rehearsal_batches(
    train: &[Sample],
    buffer: &ReplayBuffer,
    batch_size: usize,
    replay_per_batch: usize,
    shuffle_rng: &mut ChaCha8Rng,
    replay_rng: &mut ChaCha8Rng,
) -> Result<Vec<Vec<Sample>>> {
    let current_per_batch = batch_size.saturating_sub(replay_per_batch);
    if current_per_batch == 0 {
        // replay_ratio 1: pure-replay batches, the current split only sets
        // how many of them one epoch contains
        let n_batches = train.len().div_ceil(batch_size);
        return (0..n_batches)
            .map(|_| buffer.sample(replay_per_batch, replay_rng))
            .collect();
    }
    let mut indices: Vec<usize> = (0..train.len()).collect();
    indices.shuffle(shuffle_rng);
    indices
        .chunks(current_per_batch)
        .map(|chunk| {
            let mut batch: Vec<Sample> = chunk.iter().map(|&i| train[i].clone()).collect();
            batch.extend(buffer.sample(replay_per_batch, replay_rng)?);
            Ok(batch)
        })
        .collect()
}
