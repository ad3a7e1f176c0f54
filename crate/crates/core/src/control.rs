//! Early stopping, learning-rate scheduling and hyperparameter grid search.

use serde::{Deserialize, Serialize};

use crate::{parallel, Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EarlyStopConfig {
    pub enabled: bool,
    pub patience: usize,
    pub min_delta: f64,
}

impl Default for EarlyStopConfig {
    fn default() -> Self {
        Self {
            enabled: true,
            patience: 20,
            min_delta: 1e-4,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    Patience,
    NonFiniteLoss,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Decision {
    Continue,
    Stop(StopReason),
}

/// Tracks the best validation loss and a snapshot of whatever produced it.
#[derive(Debug, Clone)]
pub struct EarlyStopState<S> {
    config: EarlyStopConfig,
    best_loss: f64,
    best: Option<S>,
    best_epoch: usize,
    epochs: usize,
    since_improvement: usize,
}

impl<S: Clone> EarlyStopState<S> {
    pub fn new(config: EarlyStopConfig) -> Self {
        Self {
            config,
            best_loss: f64::INFINITY,
            best: None,
            best_epoch: 0,
            epochs: 0,
            since_improvement: 0,
        }
    }

    /// Records one epoch. `snapshot` is only called on improvement.
    ///
    /// An improvement is `best - loss > min_delta`. `Stop` is issued once
    /// `patience` consecutive epochs fail to improve, or immediately on a
    /// non-finite loss.
    pub fn update(&mut self, val_loss: f64, snapshot: impl FnOnce() -> S) -> Decision {
        self.epochs += 1;
        if !val_loss.is_finite() {
            return Decision::Stop(StopReason::NonFiniteLoss);
        }
        if self.best_loss - val_loss > self.config.min_delta {
            self.best_loss = val_loss;
            self.best = Some(snapshot());
            self.best_epoch = self.epochs;
            self.since_improvement = 0;
            return Decision::Continue;
        }
        self.since_improvement += 1;
        if self.config.enabled && self.since_improvement >= self.config.patience {
            Decision::Stop(StopReason::Patience)
        } else {
            Decision::Continue
        }
    }

    pub fn best_loss(&self) -> f64 {
        self.best_loss
    }

    pub fn best(&self) -> Option<&S> {
        self.best.as_ref()
    }

    /// 1-based epoch of the best snapshot, 0 if none yet.
    pub fn best_epoch(&self) -> usize {
        self.best_epoch
    }

    pub fn epochs(&self) -> usize {
        self.epochs
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PlateauConfig {
    pub enabled: bool,
    pub factor: f64,
    pub patience: usize,
    pub min_lr: f64,
    pub min_delta: f64,
}

impl Default for PlateauConfig {
    fn default() -> Self {
        Self {
            enabled: true,
            factor: 0.5,
            patience: 10,
            min_lr: 1e-5,
            min_delta: 1e-4,
        }
    }
}

/// Reduce-on-plateau learning-rate schedule.
#[derive(Debug, Clone, PartialEq)]
pub struct PlateauSchedule {
    config: PlateauConfig,
    best_loss: f64,
    since_improvement: usize,
}

impl PlateauSchedule {
    pub fn new(config: PlateauConfig) -> Self {
        Self {
            config,
            best_loss: f64::INFINITY,
            since_improvement: 0,
        }
    }

    /// Returns the learning rate for the next epoch. After `patience`
    /// non-improving epochs the rate becomes `max(lr * factor, min_lr)` and
    /// the counter restarts. The result never exceeds `lr`.
    pub fn update(&mut self, lr: f64, val_loss: f64) -> f64 {
        if !self.config.enabled {
            return lr;
        }
        if val_loss.is_finite() && self.best_loss - val_loss > self.config.min_delta {
            self.best_loss = val_loss;
            self.since_improvement = 0;
            return lr;
        }
        self.since_improvement += 1;
        if self.since_improvement >= self.config.patience {
            self.since_improvement = 0;
            (lr * self.config.factor).max(self.config.min_lr).min(lr)
        } else {
            lr
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct HyperGrid {
    pub dropout: Vec<f64>,
    pub learning_rate: Vec<f64>,
    pub hidden_layers: Vec<usize>,
    pub batch_size: Vec<usize>,
}

impl Default for HyperGrid {
    fn default() -> Self {
        Self {
            dropout: vec![0.0, 0.1, 0.3],
            learning_rate: vec![1e-2, 1e-3],
            hidden_layers: vec![2, 3],
            batch_size: vec![16, 32],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HyperParams {
    pub dropout: f64,
    pub learning_rate: f64,
    pub hidden_layers: usize,
    pub batch_size: usize,
}

impl HyperGrid {
    /// Full Cartesian product, dropout outermost and batch size innermost.
    pub fn points(&self) -> Vec<HyperParams> {
        let mut out = Vec::new();
        for &dropout in &self.dropout {
            for &learning_rate in &self.learning_rate {
                for &hidden_layers in &self.hidden_layers {
                    for &batch_size in &self.batch_size {
                        out.push(HyperParams {
                            dropout,
                            learning_rate,
                            hidden_layers,
                            batch_size,
                        });
                    }
                }
            }
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        if self.points().is_empty() {
            return Err(Error::InvalidConfig("hyperparameter grid is empty".into()));
        }
        Ok(())
    }
}

/// What one grid trial reports back.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialOutcome {
    pub client_val_acc: Vec<f64>,
    pub global_val_auc: f64,
    pub global_test_acc: f64,
    pub global_test_auc: f64,
}

impl TrialOutcome {
    pub fn mean_val_acc(&self) -> f64 {
        self.client_val_acc.iter().sum::<f64>() / self.client_val_acc.len().max(1) as f64
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialResult {
    pub trial_id: usize,
    pub params: HyperParams,
    /// `Err` holds the failure message; failed trials never win.
    pub outcome: std::result::Result<TrialOutcome, String>,
}

impl TrialResult {
    pub fn mean_val_acc(&self) -> Option<f64> {
        self.outcome.as_ref().ok().map(TrialOutcome::mean_val_acc)
    }
}

/// Runs `run_trial` on every grid point and picks the winner by mean
/// per-client validation accuracy, breaking ties by higher global validation
/// AUC, then lower learning rate, then lower dropout, then trial order.
pub fn grid_search<F>(grid: &HyperGrid, jobs: usize, run_trial: F) -> Result<(HyperParams, Vec<TrialResult>)>
where
    F: Fn(usize, &HyperParams) -> Result<TrialOutcome> + Sync + Send,
{
    grid.validate()?;
    let points: Vec<(usize, HyperParams)> = grid.points().into_iter().enumerate().collect();
    let trials: Vec<TrialResult> = parallel::map(points, jobs, |(trial_id, params)| TrialResult {
        trial_id,
        params,
        outcome: run_trial(trial_id, &params).map_err(|e| {
            log::warn!("trial {trial_id} failed: {e}");
            e.to_string()
        }),
    });
    let best = select_best(&trials).ok_or(Error::AllTrialsFailed(trials.len()))?;
    Ok((best.params, trials))
}

fn select_best(trials: &[TrialResult]) -> Option<&TrialResult> {
    let key = |t: &TrialResult| {
        let o = t.outcome.as_ref().ok()?;
        let auc = if o.global_val_auc.is_nan() {
            f64::NEG_INFINITY
        } else {
            o.global_val_auc
        };
        Some((o.mean_val_acc(), auc))
    };
    trials.iter().filter(|t| t.outcome.is_ok()).min_by(|a, b| {
        let (acc_a, auc_a) = key(a).unwrap_or_default();
        let (acc_b, auc_b) = key(b).unwrap_or_default();
        acc_b
            .total_cmp(&acc_a)
            .then(auc_b.total_cmp(&auc_a))
            .then(a.params.learning_rate.total_cmp(&b.params.learning_rate))
            .then(a.params.dropout.total_cmp(&b.params.dropout))
            .then(a.trial_id.cmp(&b.trial_id))
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn stopper(patience: usize) -> EarlyStopState<usize> {
        EarlyStopState::new(EarlyStopConfig {
            patience,
            ..EarlyStopConfig::default()
        })
    }

    #[test]
    fn decreasing_losses_never_stop() {
        let mut s = stopper(3);
        for epoch in 0..200 {
            let loss = 10.0 - epoch as f64 * 0.01;
            assert_eq!(s.update(loss, || epoch), Decision::Continue);
        }
    }

    #[test]
    fn constant_loss_stops_at_epoch_21() {
        let mut s = stopper(20);
        for epoch in 1..=20 {
            assert_eq!(s.update(0.7, || epoch), Decision::Continue, "epoch {epoch}");
        }
        assert_eq!(s.update(0.7, || 21), Decision::Stop(StopReason::Patience));
        assert_eq!(s.epochs(), 21);
    }

    #[test]
    fn best_snapshot_tracks_minimum() {
        let mut s = stopper(20);
        let losses = [1.0, 0.5, 0.6, 0.6, 0.6];
        for (i, &l) in losses.iter().enumerate() {
            s.update(l, || i + 1);
        }
        assert_eq!(s.best(), Some(&2));
        assert_eq!(s.best_epoch(), 2);
        assert_eq!(s.best_loss(), 0.5);
    }

    #[test]
    fn nan_loss_stops_with_error() {
        let mut s = stopper(20);
        assert_eq!(s.update(f64::NAN, || 0), Decision::Stop(StopReason::NonFiniteLoss));
    }

    #[test]
    fn min_delta_guards_tiny_improvements() {
        let mut s = stopper(2);
        s.update(1.0, || 1);
        assert_eq!(s.update(1.0 - 5e-5, || 2), Decision::Continue);
        assert_eq!(s.update(1.0 - 9e-5, || 3), Decision::Stop(StopReason::Patience));
        assert_eq!(s.best(), Some(&1));
    }

    #[test]
    fn plateau_halves_after_ten_flat_epochs() {
        let mut sched = PlateauSchedule::new(PlateauConfig::default());
        let mut lr = 0.01;
        lr = sched.update(lr, 0.5); // reference epoch
        for _ in 0..9 {
            lr = sched.update(lr, 0.5);
            assert_eq!(lr, 0.01);
        }
        lr = sched.update(lr, 0.5);
        assert_eq!(lr, 0.005);
    }

    #[test]
    fn plateau_respects_min_lr() {
        let mut sched = PlateauSchedule::new(PlateauConfig::default());
        let mut lr = 1e-5;
        for _ in 0..100 {
            lr = sched.update(lr, 1.0);
            assert_eq!(lr, 1e-5);
        }
    }

    #[test]
    fn plateau_keeps_lr_while_improving() {
        let mut sched = PlateauSchedule::new(PlateauConfig::default());
        for i in 0..100 {
            assert_eq!(sched.update(0.01, 1.0 - i as f64 * 0.001), 0.01);
        }
    }

    #[test]
    fn default_grid_has_24_points() {
        let points = HyperGrid::default().points();
        assert_eq!(points.len(), 24);
        let mut seen = points.clone();
        seen.dedup();
        assert_eq!(seen.len(), 24);
    }

    fn outcome(acc: f64, auc: f64) -> TrialOutcome {
        TrialOutcome {
            client_val_acc: vec![acc; 3],
            global_val_auc: auc,
            global_test_acc: acc,
            global_test_auc: auc,
        }
    }

    #[test]
    fn single_point_grid_wins() {
        let grid = HyperGrid {
            dropout: vec![0.1],
            learning_rate: vec![1e-3],
            hidden_layers: vec![2],
            batch_size: vec![16],
        };
        let (best, trials) = grid_search(&grid, 1, |_, _| Ok(outcome(0.5, 0.5))).unwrap();
        assert_eq!(trials.len(), 1);
        assert_eq!(best, grid.points()[0]);
    }

    #[test]
    fn tie_breaks_are_deterministic() {
        let grid = HyperGrid::default();
        // Everything ties on accuracy; AUC favors batch 32.
        let (best, _) = grid_search(&grid, 1, |_, p| {
            Ok(outcome(0.9, if p.batch_size == 32 { 0.8 } else { 0.7 }))
        })
        .unwrap();
        assert_eq!(best.batch_size, 32);
        assert_eq!(best.learning_rate, 1e-3);
        assert_eq!(best.dropout, 0.0);
        assert_eq!(best.hidden_layers, 2);
    }

    #[test]
    fn failed_trials_are_excluded() {
        let grid = HyperGrid::default();
        let (best, trials) = grid_search(&grid, 1, |id, _| {
            if id == 5 {
                Ok(outcome(0.4, 0.5))
            } else if id % 2 == 0 {
                Err(Error::Training {
                    client: 0,
                    message: "boom".into(),
                })
            } else {
                Ok(outcome(0.3, 0.9))
            }
        })
        .unwrap();
        assert_eq!(best, grid.points()[5]);
        assert!(trials[0].outcome.is_err());

        let all_fail = grid_search(&grid, 1, |_, _| Err(Error::Empty("x")));
        assert!(matches!(all_fail, Err(Error::AllTrialsFailed(24))));
    }
}
