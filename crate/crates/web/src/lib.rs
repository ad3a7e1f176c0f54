//! wasm-bindgen bindings for the static demo page in `www/`.

use fednam::data::Dataset;
use fednam::interpret::{sample_shape_curve, Owner, ShapeCurve};
use fednam::nam::NamModel;
use fednam::pipeline::{dataset_from_text, train_nam, RunConfig, TrainOutcome};
use serde_json::{json, Value};
use wasm_bindgen::prelude::*;

const IRIS: &str = include_str!("../../../data/iris.csv");

/// One trained federation plus what the page needs to draw it.
#[wasm_bindgen]
pub struct Lab {
    ds: Dataset,
    out: TrainOutcome,
}

fn js(e: impl std::fmt::Display) -> JsError {
    JsError::new(&e.to_string())
}

#[wasm_bindgen]
impl Lab {
    /// Trains a federated NAM on the bundled Iris data.
    #[wasm_bindgen(constructor)]
    pub fn new(seed: u32, num_clients: usize, rounds: usize) -> Result<Lab, JsError> {
        Lab::train(seed.into(), num_clients, rounds).map_err(js)
    }

    /// Summary: feature names, class names, test metrics, round count and
    /// global contribution ranking.
    pub fn summary(&self) -> String {
        let g = &self.out.report.global_contributions;
        json!({
            "features": self.ds.feature_names,
            "classes": self.ds.class_names,
            "ranges": self.raw_ranges(),
            "accuracy": self.out.test.accuracy,
            "auc": self.out.test.auc,
            "rounds": self.out.run.logs.last().map_or(0, |l| l.round),
            "ranking": g.scores.iter().map(|s| json!({"feature": s.name, "score": s.score})).collect::<Vec<_>>(),
        })
        .to_string()
    }

    /// Client curves, their pointwise average and the weight-averaged
    /// model's curve for one (feature, class), on the raw feature scale.
    pub fn curves(&self, feature: usize, class: usize) -> Result<String, JsError> {
        let report = &self.out.report;
        let pick = |c: &&ShapeCurve| c.feature_index == feature && c.class_index == class;
        let clients: Vec<Value> = report
            .client_curves
            .iter()
            .filter(pick)
            .map(|c| self.curve_json(c))
            .collect();
        let averaged = report
            .global_curves
            .iter()
            .find(pick)
            .ok_or_else(|| js("no such feature or class"))?;
        let range = (averaged.grid[0], *averaged.grid.last().unwrap_or(&averaged.grid[0]));
        let fedavg = sample_shape_curve(&self.out.run.global, feature, class, range, Owner::Global).map_err(js)?;
        Ok(json!({
            "clients": clients,
            "averaged": self.curve_json(averaged),
            "fedavg": self.curve_json(&fedavg),
        })
        .to_string())
    }

    /// Per-feature logit terms, bias and class probabilities for one raw
    /// input row.
    pub fn decompose(&self, raw: &[f64]) -> Result<String, JsError> {
        let model: &NamModel = &self.out.run.global;
        if raw.len() != model.num_features() {
            return Err(js(format!(
                "expected {} values, got {}",
                model.num_features(),
                raw.len()
            )));
        }
        let x: Vec<f64> = raw
            .iter()
            .enumerate()
            .map(|(k, v)| (v - self.ds.scaler.means[k]) / self.ds.scaler.stds[k])
            .collect();
        let d = model.decompose(&x).map_err(js)?;
        Ok(json!({
            "bias": d.bias,
            "terms": d.terms.iter().map(|t| &t.values).collect::<Vec<_>>(),
            "logits": d.logits,
            "probabilities": model.predict_proba(&x).map_err(js)?,
        })
        .to_string())
    }
}

impl Lab {
    pub fn train(seed: u64, num_clients: usize, rounds: usize) -> fednam::Result<Lab> {
        let mut cfg = RunConfig::new(fednam::data::DatasetKind::Iris);
        cfg.seed = seed;
        cfg.federation.num_clients = num_clients;
        cfg.federation.rounds = rounds;
        cfg.validate()?;
        let ds = dataset_from_text(&cfg, "iris.csv", IRIS)?;
        let out = train_nam(&cfg, &ds, 1)?;
        Ok(Lab { ds, out })
    }

    fn raw_ranges(&self) -> Vec<(f64, f64)> {
        self.ds
            .train
            .ranges()
            .iter()
            .enumerate()
            .map(|(k, &(lo, hi))| (self.ds.scaler.inverse(k, lo), self.ds.scaler.inverse(k, hi)))
            .collect()
    }

    fn curve_json(&self, c: &ShapeCurve) -> Value {
        let k = c.feature_index;
        json!({
            "owner": c.owner.to_string(),
            "x": c.grid.iter().map(|&z| self.ds.scaler.inverse(k, z)).collect::<Vec<_>>(),
            "y": c.values,
        })
    }
}
