//! Optimization of the network on one point cloud.

pub mod adam;
pub mod log;

use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub use adam::{adam_step, AdamState, ADAM_EPS};
pub use log::{LogEntry, TrainLog};

use crate::autodiff::grad_params_of_loss;
use crate::error::{Error, Result};
use crate::filter::{FilterConfig, FilterLoss};
use crate::geom::{sample_queries, PointCloud, QueryBatch, SamplingConfig};
use crate::net::{MlpField, NetConfig};
use crate::scalar::Real;

/// Queries whose gradient norm falls below this count as degenerate.
pub const COLLAPSE_NORM: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub iterations: usize,
    pub learning_rate: f64,
    pub adam_betas: (f64, f64),
    /// Linear learning rate warmup length.
    pub warmup: usize,
    pub batch_queries: usize,
    pub checkpoint_every: usize,
    pub seed: u64,
    /// Single worker thread.
    pub deterministic: bool,
    pub net: NetConfig,
    pub sampling: SamplingConfig,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            iterations: 10_000,
            learning_rate: 1e-3,
            adam_betas: (0.9, 0.999),
            warmup: 0,
            batch_queries: 2000,
            checkpoint_every: 1000,
            seed: 0,
            deterministic: false,
            net: NetConfig::default(),
            sampling: SamplingConfig::default(),
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::input("learning_rate must be positive"));
        }
        let (b1, b2) = self.adam_betas;
        if !((0.0..1.0).contains(&b1) && (0.0..1.0).contains(&b2)) {
            return Err(Error::input("adam betas must lie in [0, 1)"));
        }
        if self.batch_queries == 0 {
            return Err(Error::input("batch_queries must be at least 1"));
        }
        self.net.validate()
    }
}

/// Training stopped early. `field` holds the parameters before the failing
/// step.
#[derive(Debug)]
pub struct TrainAbort<T> {
    pub error: Error,
    pub field: MlpField<T>,
    pub log: TrainLog,
}

pub type TrainResult<T> = std::result::Result<(MlpField<T>, TrainLog), Box<TrainAbort<T>>>;

/// Geometrically initialized network and the fixed query set for `cloud`.
/// `cfg.seed` drives both; `cfg.sampling.seed` is not used.
pub fn prepare<T: Real, const D: usize>(
    cloud: &PointCloud<T, D>,
    filter_cfg: &FilterConfig,
    cfg: &TrainConfig,
) -> Result<(MlpField<T>, QueryBatch<T, D>)> {
    let field = MlpField::geometric_init(D, &cfg.net, cfg.seed)?;
    let sampling = SamplingConfig {
        k_neighbors: cfg.sampling.k_neighbors.max(filter_cfg.k_filter),
        seed: cfg.seed,
        ..cfg.sampling
    };
    Ok((field, sample_queries(cloud, &sampling)?))
}

/// Geometric initialization, query sampling and optimization.
pub fn train<T: Real, const D: usize>(
    cloud: &PointCloud<T, D>,
    filter_cfg: &FilterConfig,
    cfg: &TrainConfig,
) -> TrainResult<T> {
    match prepare(cloud, filter_cfg, cfg) {
        Ok((field, queries)) => train_from(field, cloud, &queries, filter_cfg, cfg, |_, _| Ok(())),
        Err(error) => Err(Box::new(TrainAbort {
            error,
            field: MlpField::zeros(D, &NetConfig::default()).expect("default architecture"),
            log: TrainLog::default(),
        })),
    }
}

/// Optimizes `field` on a fixed query set. `on_checkpoint` runs every
/// `checkpoint_every` completed iterations and after the last one.
pub fn train_from<T: Real, const D: usize>(
    field: MlpField<T>,
    cloud: &PointCloud<T, D>,
    queries: &QueryBatch<T, D>,
    filter_cfg: &FilterConfig,
    cfg: &TrainConfig,
    on_checkpoint: impl FnMut(usize, &MlpField<T>) -> Result<()> + Send,
) -> TrainResult<T> {
    if cfg.deterministic {
        match rayon::ThreadPoolBuilder::new().num_threads(1).build() {
            Ok(pool) => pool.install(|| run(field, cloud, queries, filter_cfg, cfg, on_checkpoint)),
            Err(e) => Err(Box::new(TrainAbort {
                error: Error::Training {
                    iteration: 0,
                    reason: format!("thread pool: {e}"),
                },
                field,
                log: TrainLog::default(),
            })),
        }
    } else {
        run(field, cloud, queries, filter_cfg, cfg, on_checkpoint)
    }
}

fn run<T: Real, const D: usize>(
    mut field: MlpField<T>,
    cloud: &PointCloud<T, D>,
    queries: &QueryBatch<T, D>,
    filter_cfg: &FilterConfig,
    cfg: &TrainConfig,
    mut on_checkpoint: impl FnMut(usize, &MlpField<T>) -> Result<()> + Send,
) -> TrainResult<T> {
    let mut log = TrainLog::default();
    macro_rules! abort {
        ($err:expr) => {
            return Err(Box::new(TrainAbort {
                error: $err,
                field,
                log,
            }))
        };
    }
    if let Err(e) = cfg.validate() {
        abort!(e);
    }
    let loss = match FilterLoss::new(filter_cfg.clone()) {
        Ok(l) => l,
        Err(e) => abort!(e),
    };
    if cfg.iterations > 0 && queries.is_empty() {
        abort!(Error::input("no queries to train on"));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x5eed_0f_ba7c4);
    let mut adam = AdamState::new(field.param_count());
    let mut params = field.flat_params();
    let start = Instant::now();
    let mut batch_storage;

    for it in 0..cfg.iterations {
        let batch = if queries.len() <= cfg.batch_queries {
            queries
        } else {
            let mut rows = rand::seq::index::sample(&mut rng, queries.len(), cfg.batch_queries).into_vec();
            rows.sort_unstable();
            batch_storage = queries.select(&rows);
            &batch_storage
        };
        let lg = match grad_params_of_loss(&loss, &field, cloud, batch) {
            Ok(lg) => lg,
            Err(e) => abort!(as_training(it, e)),
        };
        let degenerate = lg.state.queries.degenerate_count(T::lit(COLLAPSE_NORM));
        if 2 * degenerate > batch.len() {
            abort!(Error::Training {
                iteration: it,
                reason: format!("field collapse: {degenerate} of {} queries have a vanishing gradient", batch.len()),
            });
        }
        let breakdown = lg.output;
        let lr = if cfg.warmup > 0 && it < cfg.warmup {
            cfg.learning_rate * (it + 1) as f64 / cfg.warmup as f64
        } else {
            cfg.learning_rate
        };
        let mut next = params.clone();
        if let Err(e) = adam_step(&mut next, &lg.grad.flat(), &mut adam, lr, cfg.adam_betas) {
            abort!(as_training(it, e));
        }
        if next.iter().any(|p| !p.is_finite()) {
            abort!(Error::Training {
                iteration: it,
                reason: "non-finite parameters after update".into(),
            });
        }
        params = next;
        field.set_flat_params(&params);
        log.push(LogEntry {
            iteration: it,
            breakdown,
            seconds: start.elapsed().as_secs_f64(),
        });
        let done = it + 1;
        if (cfg.checkpoint_every > 0 && done % cfg.checkpoint_every == 0) || done == cfg.iterations {
            if let Err(e) = on_checkpoint(done, &field) {
                abort!(e);
            }
        }
        if done % 1000 == 0 {
            ::log::info!("iteration {done}: total {:.6e}", breakdown.total);
        }
    }
    Ok((field, log))
}

fn as_training(iteration: usize, e: Error) -> Error {
    match e {
        Error::NonFinite { term, index } => Error::Training {
            iteration,
            reason: format!("non-finite value in `{term}` at index {index}"),
        },
        Error::Input(_) => e,
        other => Error::Training {
            iteration,
            reason: other.to_string(),
        },
    }
}
