//! Simulated multi-client training: partitioning, local training, weighted
//! parameter averaging and pointwise averaging of shape curves.

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::control::{Decision, EarlyStopConfig, EarlyStopState, PlateauConfig, PlateauSchedule, StopReason};
use crate::data::{group_by_label, train_test_split, Samples, SplitSpec};
use crate::interpret::{Owner, ShapeCurve};
use crate::model::{evaluate, Classifier};
use crate::nn::{Gradients, Optimizer, OptimizerKind};
use crate::seed::{self, tag};
use crate::{parallel, Error, Result};

/// Which global artifacts a run produces. Training always continues from
/// the parameter average; shape averaging only feeds reports.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Aggregation {
    WeightAverage,
    ShapeAverage,
    Both,
}

impl Aggregation {
    pub fn weight_average(self) -> bool {
        matches!(self, Self::WeightAverage | Self::Both)
    }

    pub fn shape_average(self) -> bool {
        matches!(self, Self::ShapeAverage | Self::Both)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FederationConfig {
    pub num_clients: usize,
    pub rounds: usize,
    pub local_epochs: usize,
    pub aggregation: Aggregation,
    /// Label-stratified client partition.
    pub stratified: bool,
    /// Set from the run seed rather than read from config files.
    #[serde(skip)]
    pub seed: u64,
}

impl Default for FederationConfig {
    fn default() -> Self {
        Self {
            num_clients: 3,
            rounds: 50,
            local_epochs: 5,
            aggregation: Aggregation::Both,
            stratified: true,
            seed: 0,
        }
    }
}

impl FederationConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("num_clients", self.num_clients),
            ("rounds", self.rounds),
            ("local_epochs", self.local_epochs),
        ] {
            if v == 0 {
                return Err(Error::InvalidConfig(format!("{name} must be at least 1")));
            }
        }
        Ok(())
    }
}

/// Settings for each client's local optimization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainConfig {
    pub optimizer: OptimizerKind,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub early_stop: EarlyStopConfig,
    pub lr_schedule: PlateauConfig,
    /// Binary decision threshold on the positive-class probability.
    pub threshold: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            optimizer: OptimizerKind::Adam,
            learning_rate: 1e-3,
            batch_size: 32,
            early_stop: EarlyStopConfig::default(),
            lr_schedule: PlateauConfig::default(),
            threshold: 0.5,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 {
            return Err(Error::InvalidConfig("batch_size must be at least 1".into()));
        }
        if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "learning_rate must be non-negative, got {}",
                self.learning_rate
            )));
        }
        let s = &self.lr_schedule;
        if !(s.factor > 0.0 && s.factor < 1.0) || s.min_lr.is_nan() || s.min_lr < 0.0 {
            return Err(Error::InvalidConfig(
                "lr_schedule needs factor in (0, 1) and min_lr >= 0".into(),
            ));
        }
        if !(0.0..=1.0).contains(&self.threshold) {
            return Err(Error::InvalidConfig(format!(
                "threshold must be in [0, 1], got {}",
                self.threshold
            )));
        }
        Ok(())
    }
}

/// Splits `labels` into `num_clients` disjoint index shards whose sizes
/// differ by at most one (the first `n % num_clients` shards get the extra
/// row). Each shard is returned sorted.
///
/// Stratified partitions give shard `s` either the floor or the ceiling of
/// `size_s * class_total / n` rows of each class, so every shard's class
/// counts are within one row of the global class ratio.
pub fn partition_clients(labels: &[usize], num_clients: usize, stratified: bool, seed: u64) -> Result<Vec<Vec<usize>>> {
    if num_clients == 0 {
        return Err(Error::InvalidConfig("num_clients must be at least 1".into()));
    }
    let n = labels.len();
    if n < num_clients {
        return Err(Error::InvalidConfig(format!(
            "{n} training rows cannot be split across {num_clients} clients"
        )));
    }
    let sizes: Vec<usize> = (0..num_clients)
        .map(|s| n / num_clients + usize::from(s < n % num_clients))
        .collect();
    let mut rng = seed::rng(seed::derive(seed, &[tag::PARTITION]));
    let mut shards: Vec<Vec<usize>> = sizes.iter().map(|&s| Vec::with_capacity(s)).collect();
    if stratified {
        let groups: Vec<Vec<usize>> = group_by_label(labels).into_values().collect();
        let quotas = class_quotas(&sizes, &groups.iter().map(Vec::len).collect::<Vec<_>>());
        for (c, mut rows) in groups.into_iter().enumerate() {
            rows.shuffle(&mut rng);
            let mut rest = rows.as_slice();
            for (shard, q) in shards.iter_mut().zip(&quotas) {
                let (take, tail) = rest.split_at(q[c]);
                shard.extend_from_slice(take);
                rest = tail;
            }
        }
    } else {
        let mut all: Vec<usize> = (0..n).collect();
        all.shuffle(&mut rng);
        let mut rest = all.as_slice();
        for (shard, &size) in shards.iter_mut().zip(&sizes) {
            let (take, tail) = rest.split_at(size);
            shard.extend_from_slice(take);
            rest = tail;
        }
    }
    for s in &mut shards {
        s.sort_unstable();
    }
    Ok(shards)
}

/// Integer table `q[shard][class]` with the given margins and every entry
/// equal to the floor or ceiling of `sizes[s] * totals[c] / n`. Floors first,
/// then each class hands its leftover rows to the shards with the largest
/// remaining shortfall.
fn class_quotas(sizes: &[usize], totals: &[usize]) -> Vec<Vec<usize>> {
    let n: usize = totals.iter().sum();
    let mut q: Vec<Vec<usize>> = sizes
        .iter()
        .map(|&s| totals.iter().map(|&t| s * t / n).collect())
        .collect();
    let mut short: Vec<usize> = sizes
        .iter()
        .zip(&q)
        .map(|(&s, row)| s - row.iter().sum::<usize>())
        .collect();
    for (c, &t) in totals.iter().enumerate() {
        let left = t - q.iter().map(|row| row[c]).sum::<usize>();
        let mut order: Vec<usize> = (0..sizes.len()).collect();
        order.sort_by(|&a, &b| short[b].cmp(&short[a]).then(a.cmp(&b)));
        for &s in order.iter().take(left) {
            q[s][c] += 1;
            short[s] -= 1;
        }
    }
    debug_assert!(short.iter().all(|&v| v == 0));
    q
}

/// One simulated client: its private data, local model and optimizer, and
/// the early-stopping and scheduler state that persists across rounds.
#[derive(Debug, Clone)]
pub struct ClientState<M> {
    pub client_id: usize,
    /// Rows used for gradient steps.
    pub shard: Samples,
    /// Held-out rows for early stopping; may be empty for tiny shards.
    pub val: Samples,
    pub model: M,
    pub optimizer: Optimizer,
    early_stop: EarlyStopState<M>,
    schedule: PlateauSchedule,
    epochs: usize,
    stopped: bool,
}

impl<M: Classifier> ClientState<M> {
    /// Splits `rows` into training and validation parts and wraps them with
    /// fresh training state.
    pub fn new(
        client_id: usize,
        rows: Samples,
        model: M,
        split: &SplitSpec,
        train: &TrainConfig,
        seed: u64,
    ) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::Empty("client shard"));
        }
        let (shard, val) = if rows.len() >= 2 {
            let s = seed::derive(seed, &[tag::VALIDATION, client_id as u64]);
            let (tr, va) = train_test_split(rows.labels(), split.val_fraction, split.stratified, s)?;
            (rows.subset(&tr), rows.subset(&va))
        } else {
            log::warn!("client {client_id} has a single row; early stopping will monitor training loss");
            (rows.clone(), Samples::empty(rows.n_features()))
        };
        Ok(Self {
            client_id,
            shard,
            val,
            model,
            optimizer: Optimizer::new(train.optimizer, train.learning_rate)?,
            early_stop: EarlyStopState::new(train.early_stop.clone()),
            schedule: PlateauSchedule::new(train.lr_schedule.clone()),
            epochs: 0,
            stopped: false,
        })
    }

    /// Number of training rows; the aggregation weight.
    pub fn n(&self) -> usize {
        self.shard.len()
    }

    pub fn is_stopped(&self) -> bool {
        self.stopped
    }

    pub fn epochs(&self) -> usize {
        self.epochs
    }

    pub fn best_val_loss(&self) -> f64 {
        self.early_stop.best_loss()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochLog {
    pub client_id: usize,
    /// 1-based epoch count for this client.
    pub epoch: usize,
    pub train_loss: f64,
    pub val_loss: f64,
    pub val_acc: f64,
    pub learning_rate: f64,
}

/// Runs up to `epochs` epochs of mini-batch training on one client.
///
/// Each epoch visits the shard in an order shuffled by (seed, client,
/// epoch), applies one optimizer step per batch on the mean gradient, then
/// evaluates on the validation rows and feeds the early-stopping and
/// learning-rate hooks. A client that hits its patience limit reverts to its
/// best snapshot and trains no further.
pub fn local_train<M: Classifier>(
    client: &mut ClientState<M>,
    epochs: usize,
    config: &TrainConfig,
    seed: u64,
) -> Result<Vec<EpochLog>> {
    let fail = |id: usize, e: Error| match e {
        Error::Training { .. } => e,
        other => Error::Training {
            client: id,
            message: other.to_string(),
        },
    };
    let id = client.client_id;
    let mut logs = Vec::with_capacity(epochs);
    for _ in 0..epochs {
        if client.stopped {
            break;
        }
        let epoch = client.epochs as u64;
        client.epochs += 1;
        let train_loss = run_epoch(client, config, seed, epoch).map_err(|e| fail(id, e))?;
        let (val_loss, val_acc) = if client.val.is_empty() {
            (train_loss, f64::NAN)
        } else {
            let eval = evaluate(&client.model, &client.val, config.threshold).map_err(|e| fail(id, e))?;
            (eval.loss, eval.metrics.accuracy)
        };
        let lr = client.optimizer.learning_rate();
        logs.push(EpochLog {
            client_id: id,
            epoch: client.epochs,
            train_loss,
            val_loss,
            val_acc,
            learning_rate: lr,
        });
        let model = &client.model;
        match client.early_stop.update(val_loss, || model.clone()) {
            Decision::Continue => {}
            Decision::Stop(StopReason::NonFiniteLoss) => {
                return Err(Error::Training {
                    client: id,
                    message: format!("non-finite validation loss at epoch {}", client.epochs),
                });
            }
            Decision::Stop(StopReason::Patience) => {
                log::info!("client {id}: early stop after epoch {}", client.epochs);
                if let Some(best) = client.early_stop.best() {
                    client.model = best.clone();
                }
                client.stopped = true;
                continue;
            }
        }
        let next = client.schedule.update(lr, val_loss);
        client.optimizer.set_learning_rate(next).map_err(|e| fail(id, e))?;
    }
    Ok(logs)
}

fn run_epoch<M: Classifier>(client: &mut ClientState<M>, config: &TrainConfig, seed: u64, epoch: u64) -> Result<f64> {
    let id = client.client_id as u64;
    let n = client.shard.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut seed::rng(seed::derive(seed, &[tag::SHUFFLE, id, epoch])));
    let mut total = 0.0;
    for batch in order.chunks(config.batch_size) {
        let mut grads = Gradients::zeros_like(&client.model);
        let mut batch_loss = 0.0;
        for &i in batch {
            let s = seed::derive(seed, &[tag::DROPOUT, id, epoch, i as u64]);
            batch_loss += client
                .model
                .accumulate(client.shard.row(i), client.shard.label(i), s, &mut grads)?;
        }
        if !batch_loss.is_finite() {
            return Err(Error::Training {
                client: client.client_id,
                message: format!("non-finite training loss in epoch {}", epoch + 1),
            });
        }
        grads.scale(1.0 / batch.len() as f64);
        client.optimizer.step(&mut client.model, &grads)?;
        total += batch_loss;
    }
    Ok(total / n as f64)
}

/// Sample-weighted parameter mean `sum_i (n_i / n) w_i`.
///
/// Each coordinate is clamped to the range spanned by the clients, which
/// only ever removes rounding error and makes identical clients average to
/// a bit-identical model.
pub fn fed_avg<M: Classifier>(models: &[(&M, usize)]) -> Result<M> {
    let (first, _) = *models.first().ok_or(Error::Empty("client models"))?;
    let shapes = first.tensor_shapes();
    if let Some((i, _)) = models
        .iter()
        .enumerate()
        .find(|(_, (m, _))| m.tensor_shapes() != shapes)
    {
        return Err(Error::ArchitectureMismatch(format!(
            "client {i} parameter shapes differ from client 0"
        )));
    }
    let n: usize = models.iter().map(|&(_, n)| n).sum();
    if n == 0 {
        return Err(Error::Empty("client samples"));
    }
    let coeffs: Vec<f64> = models.iter().map(|&(_, ni)| ni as f64 / n as f64).collect();
    let client_tensors: Vec<Vec<&[f64]>> = models.iter().map(|(m, _)| m.tensors()).collect();
    let mut global = first.clone();
    for (t, out) in global.tensors_mut().into_iter().enumerate() {
        for (j, w) in out.iter_mut().enumerate() {
            let mut sum = 0.0;
            let mut lo = f64::INFINITY;
            let mut hi = f64::NEG_INFINITY;
            for (c, tensors) in coeffs.iter().zip(&client_tensors) {
                let v = tensors[t][j];
                sum += c * v;
                lo = lo.min(v);
                hi = hi.max(v);
            }
            *w = sum.clamp(lo, hi);
        }
    }
    Ok(global)
}

/// Pointwise arithmetic mean of client curves for one (feature, class).
pub fn average_shape_functions(curves: &[&ShapeCurve]) -> Result<ShapeCurve> {
    let first = *curves.first().ok_or(Error::Empty("client curves"))?;
    for c in curves {
        if c.grid != first.grid || c.feature_index != first.feature_index || c.class_index != first.class_index {
            return Err(Error::GridMismatch(format!(
                "curve for feature {} class {} does not share the grid of feature {} class {}",
                c.feature_index, c.class_index, first.feature_index, first.class_index
            )));
        }
    }
    let m = curves.len() as f64;
    // Clamped to the client range like `fed_avg`, so identical curves
    // average to themselves exactly.
    let mean = |f: &dyn Fn(&ShapeCurve) -> f64| {
        let (lo, hi) = curves
            .iter()
            .map(|c| f(c))
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), v| (l.min(v), h.max(v)));
        (curves.iter().map(|c| f(c)).sum::<f64>() / m).clamp(lo, hi)
    };
    let values = (0..first.grid.len()).map(|i| mean(&|c| c.values[i])).collect();
    Ok(ShapeCurve {
        feature_index: first.feature_index,
        class_index: first.class_index,
        owner: Owner::Global,
        grid: first.grid.clone(),
        values,
        offset: mean(&|c| c.offset),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClientRoundLog {
    pub client_id: usize,
    pub train_loss: f64,
    pub val_loss: f64,
    pub val_acc: f64,
    pub stopped: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundLog {
    /// 1-based.
    pub round: usize,
    pub clients: Vec<ClientRoundLog>,
    pub global_val_acc: f64,
    pub global_val_auc: f64,
}

pub const ROUND_LOG_HEADER: &str = "round,client_id,train_loss,val_loss,val_acc,global_val_acc,global_val_auc";

/// Round logs as CSV, one line per (round, client).
pub fn round_logs_csv(logs: &[RoundLog]) -> String {
    let mut out = String::from(ROUND_LOG_HEADER);
    out.push('\n');
    for r in logs {
        for c in &r.clients {
            out.push_str(&format!(
                "{},{},{:?},{:?},{:?},{:?},{:?}\n",
                r.round, c.client_id, c.train_loss, c.val_loss, c.val_acc, r.global_val_acc, r.global_val_auc
            ));
        }
    }
    out
}

#[derive(Debug, Clone)]
pub struct FederationRun<M> {
    pub global: M,
    pub clients: Vec<ClientState<M>>,
    pub logs: Vec<RoundLog>,
}

/// A failed run together with the logs of every completed round.
#[derive(Debug)]
pub struct FederationFailure {
    pub error: Error,
    pub logs: Vec<RoundLog>,
}

impl From<FederationFailure> for Error {
    fn from(f: FederationFailure) -> Self {
        f.error
    }
}

/// Builds one client per partition shard, all starting from `init`.
pub fn make_clients<M: Classifier>(
    init: &M,
    train: &Samples,
    federation: &FederationConfig,
    split: &SplitSpec,
    config: &TrainConfig,
) -> Result<Vec<ClientState<M>>> {
    let shards = partition_clients(
        train.labels(),
        federation.num_clients,
        federation.stratified,
        federation.seed,
    )?;
    shards
        .iter()
        .enumerate()
        .map(|(id, rows)| ClientState::new(id, train.subset(rows), init.clone(), split, config, federation.seed))
        .collect()
}

/// Synchronous federated training: every round broadcasts the global model
/// to the clients still training, trains each locally, and replaces the
/// global model with the weighted parameter average. Clients that stopped
/// early keep contributing their best snapshot. The run ends after
/// `rounds` rounds or once every client has stopped.
pub fn run_federation<M: Classifier>(
    init: &M,
    train: &Samples,
    federation: &FederationConfig,
    split: &SplitSpec,
    config: &TrainConfig,
    jobs: usize,
) -> std::result::Result<FederationRun<M>, FederationFailure> {
    let mut logs = Vec::new();
    let fail = |error: Error, logs: Vec<RoundLog>| FederationFailure { error, logs };
    let setup = || -> Result<_> {
        federation.validate()?;
        config.validate()?;
        make_clients(init, train, federation, split, config)
    };
    let mut clients = setup().map_err(|e| fail(e, Vec::new()))?;
    let global_val = {
        let vals: Vec<&Samples> = clients.iter().map(|c| &c.val).collect();
        let v = Samples::concat(vals).map_err(|e| fail(e, Vec::new()))?;
        if v.is_empty() {
            train.clone()
        } else {
            v
        }
    };
    let mut global = init.clone();
    let mut last: Vec<Option<EpochLog>> = vec![None; clients.len()];

    for round in 1..=federation.rounds {
        for c in clients.iter_mut().filter(|c| !c.stopped) {
            c.model = global.clone();
        }
        let results = parallel::map(clients, jobs, |mut c| {
            let r = local_train(&mut c, federation.local_epochs, config, federation.seed);
            (c, r)
        });
        let mut next = Vec::with_capacity(results.len());
        let mut error = None;
        for (c, r) in results {
            match r {
                Ok(epoch_logs) => {
                    if let Some(l) = epoch_logs.last() {
                        last[c.client_id] = Some(*l);
                    }
                }
                Err(e) => {
                    error.get_or_insert(e);
                }
            }
            next.push(c);
        }
        clients = next;
        if let Some(e) = error {
            return Err(fail(e, logs));
        }
        let contributions: Vec<(&M, usize)> = clients.iter().map(|c| (&c.model, c.n())).collect();
        global = fed_avg(&contributions).map_err(|e| fail(e, logs.clone()))?;

        let eval = evaluate(&global, &global_val, config.threshold).map_err(|e| fail(e, logs.clone()))?;
        let client_logs = clients
            .iter()
            .map(|c| {
                let l = last[c.client_id];
                ClientRoundLog {
                    client_id: c.client_id,
                    train_loss: l.map_or(f64::NAN, |l| l.train_loss),
                    val_loss: l.map_or(f64::NAN, |l| l.val_loss),
                    val_acc: l.map_or(f64::NAN, |l| l.val_acc),
                    stopped: c.stopped,
                }
            })
            .collect();
        log::debug!(
            "round {round}: global val acc {:.4} auc {:.4}",
            eval.metrics.accuracy,
            eval.metrics.auc
        );
        logs.push(RoundLog {
            round,
            clients: client_logs,
            global_val_acc: eval.metrics.accuracy,
            global_val_auc: eval.metrics.auc,
        });
        if clients.iter().all(|c| c.stopped) {
            log::info!("all clients stopped early after round {round}");
            break;
        }
    }
    Ok(FederationRun { global, clients, logs })
}

/// Trains one model on the whole training set for `rounds * local_epochs`
/// epochs, with the same validation holdout, seeds and hooks a single
/// federated client would use.
pub fn train_centralized<M: Classifier>(
    init: &M,
    train: &Samples,
    federation: &FederationConfig,
    split: &SplitSpec,
    config: &TrainConfig,
) -> Result<M> {
    federation.validate()?;
    config.validate()?;
    let mut client = ClientState::new(0, train.clone(), init.clone(), split, config, federation.seed)?;
    local_train(
        &mut client,
        federation.rounds * federation.local_epochs,
        config,
        federation.seed,
    )?;
    Ok(client.model)
}

/// Per-client validation accuracy of each client's own final model.
pub fn client_val_accuracies<M: Classifier>(clients: &[ClientState<M>], threshold: f64) -> Result<Vec<f64>> {
    clients
        .iter()
        .map(|c| {
            if c.val.is_empty() {
                Ok(f64::NAN)
            } else {
                Ok(evaluate(&c.model, &c.val, threshold)?.metrics.accuracy)
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nam::{NamConfig, NamModel};
    use crate::nn::{flatten_params, Parameters};
    use crate::task::Task;

    fn scalar_model(w: f64) -> NamModel {
        let mut m = NamModel::new(vec!["a".into()], Task::Binary, &NamConfig::default(), 0).unwrap();
        for t in m.tensors_mut() {
            t.fill(w);
        }
        m
    }

    #[test]
    fn partition_sizes() {
        let shards = partition_clients(&[0; 900], 3, true, 1).unwrap();
        assert!(shards.iter().all(|s| s.len() == 300));
        let labels = [0, 1, 0, 1, 0, 1, 0, 1, 0, 1];
        let mut sizes: Vec<usize> = partition_clients(&labels, 3, true, 1)
            .unwrap()
            .iter()
            .map(Vec::len)
            .collect();
        sizes.sort_unstable();
        assert_eq!(sizes, vec![3, 3, 4]);
    }

    #[test]
    fn partition_is_disjoint_and_exhaustive() {
        let labels: Vec<usize> = (0..101).map(|i| i % 3).collect();
        let shards = partition_clients(&labels, 4, true, 9).unwrap();
        let mut all: Vec<usize> = shards.concat();
        all.sort_unstable();
        assert_eq!(all, (0..101).collect::<Vec<_>>());
        assert_eq!(shards, partition_clients(&labels, 4, true, 9).unwrap());
    }

    #[test]
    fn partition_rejects_too_few_rows() {
        assert!(partition_clients(&[0, 1], 3, true, 0).is_err());
    }

    #[test]
    fn fed_avg_scalar_example() {
        let a = scalar_model(2.0);
        let b = scalar_model(4.0);
        let g = fed_avg(&[(&a, 100), (&b, 300)]).unwrap();
        assert!(flatten_params(&g).iter().all(|&v| v == 3.5));
    }

    #[test]
    fn fed_avg_identical_clients_is_bit_exact() {
        let m = NamModel::new(vec!["a".into(), "b".into()], Task::Binary, &NamConfig::default(), 3).unwrap();
        let g = fed_avg(&[(&m, 5), (&m, 7), (&m, 11)]).unwrap();
        assert_eq!(flatten_params(&g), flatten_params(&m));
    }

    #[test]
    fn fed_avg_rejects_mismatch() {
        let a = NamModel::new(vec!["a".into()], Task::Binary, &NamConfig::default(), 0).unwrap();
        let b = NamModel::new(vec!["a".into(), "b".into()], Task::Binary, &NamConfig::default(), 0).unwrap();
        assert!(matches!(
            fed_avg(&[(&a, 1), (&b, 1)]),
            Err(Error::ArchitectureMismatch(_))
        ));
    }

    #[test]
    fn shape_average_example() {
        let curve = |slope: f64| ShapeCurve {
            feature_index: 0,
            class_index: 0,
            owner: Owner::Client(0),
            grid: vec![2.0],
            values: vec![slope * 2.0],
            offset: 0.0,
        };
        let (a, b) = (curve(1.0), curve(3.0));
        assert_eq!(average_shape_functions(&[&a, &b]).unwrap().values, vec![4.0]);
        let mut c = curve(1.0);
        c.grid = vec![1.0];
        assert!(matches!(
            average_shape_functions(&[&a, &c]),
            Err(Error::GridMismatch(_))
        ));
    }

    #[test]
    fn config_rejects_zero_epochs() {
        let cfg = FederationConfig {
            local_epochs: 0,
            ..FederationConfig::default()
        };
        assert!(cfg.validate().is_err());
    }

    fn toy() -> Samples {
        let mut x = Vec::new();
        let mut y = Vec::new();
        // Separable with margin: rows too close to the boundary are skipped.
        for i in 0..60 {
            let a = (i as f64 / 60.0) * 2.0 - 1.0;
            let b = ((i * 7 % 60) as f64 / 60.0) * 2.0 - 1.0;
            if (a + 0.5 * b).abs() < 0.1 {
                continue;
            }
            x.extend([a, b]);
            y.push(usize::from(a + 0.5 * b > 0.0));
        }
        Samples::new(2, x, y).unwrap()
    }

    #[test]
    fn zero_learning_rate_leaves_model_unchanged() {
        let data = toy();
        let init = NamModel::new(vec!["a".into(), "b".into()], Task::Binary, &NamConfig::default(), 1).unwrap();
        let cfg = TrainConfig {
            learning_rate: 0.0,
            ..TrainConfig::default()
        };
        let mut c = ClientState::new(0, data, init.clone(), &SplitSpec::default(), &cfg, 0).unwrap();
        local_train(&mut c, 3, &cfg, 0).unwrap();
        assert_eq!(flatten_params(&c.model), flatten_params(&init));
    }

    #[test]
    fn separable_toy_reaches_full_training_accuracy() {
        let data = toy();
        let init = NamModel::new(vec!["a".into(), "b".into()], Task::Binary, &NamConfig::default(), 1).unwrap();
        let cfg = TrainConfig {
            early_stop: EarlyStopConfig {
                enabled: false,
                ..EarlyStopConfig::default()
            },
            batch_size: 8,
            ..TrainConfig::default()
        };
        let mut c = ClientState::new(0, data, init, &SplitSpec::default(), &cfg, 0).unwrap();
        let mut reached = false;
        for _ in 0..200 {
            local_train(&mut c, 1, &cfg, 0).unwrap();
            if evaluate(&c.model, &c.shard, 0.5).unwrap().metrics.accuracy == 1.0 {
                reached = true;
                break;
            }
        }
        assert!(reached);
    }

    #[test]
    fn single_client_matches_centralized() {
        let data = toy();
        let init = NamModel::new(vec!["a".into(), "b".into()], Task::Binary, &NamConfig::default(), 4).unwrap();
        let fed = FederationConfig {
            num_clients: 1,
            rounds: 3,
            local_epochs: 2,
            ..FederationConfig::default()
        };
        let (split, cfg) = (SplitSpec::default(), TrainConfig::default());
        let run = run_federation(&init, &data, &fed, &split, &cfg, 1).unwrap();
        let central = train_centralized(&init, &data, &fed, &split, &cfg).unwrap();
        assert_eq!(flatten_params(&run.global), flatten_params(&central));
        assert_eq!(run.logs.len(), 3);
    }

    #[test]
    fn round_log_csv_layout() {
        let logs = vec![RoundLog {
            round: 1,
            clients: vec![ClientRoundLog {
                client_id: 0,
                train_loss: 0.5,
                val_loss: 0.25,
                val_acc: 1.0,
                stopped: false,
            }],
            global_val_acc: 0.75,
            global_val_auc: 0.8,
        }];
        assert_eq!(
            round_logs_csv(&logs),
            format!("{ROUND_LOG_HEADER}\n1,0,0.5,0.25,1.0,0.75,0.8\n")
        );
    }
}
