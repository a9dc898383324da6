use std::collections::BTreeMap;

use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};

use super::model::CpGcnModel;
use super::train::TrainConfig;
use crate::error::{Error, Result};

pub const CHECKPOINT_FORMAT: &str = "cpgraph-gcn/1";

/// Flat tensor with its shape.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tensor {
    pub shape: Vec<usize>,
    pub data: Vec<f64>,
}

/// JSON checkpoint: shapes, weights and the config that produced them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub format: String,
    pub seed: u64,
    pub config: TrainConfig,
    pub input_dim: usize,
    pub hidden_dim: usize,
    pub num_classes: usize,
    pub tensors: BTreeMap<String, Tensor>,
}

impl Checkpoint {
    pub fn from_model(model: &CpGcnModel, config: &TrainConfig) -> Self {
        let mut tensors = BTreeMap::new();
        let mut put = |name: &str, shape: Vec<usize>, data: &[f64]| {
            tensors.insert(
                name.to_string(),
                Tensor {
                    shape,
                    data: data.to_vec(),
                },
            );
        };
        for (name, data) in model.tensors() {
            let shape = match name {
                "w1" => model.w1.shape().to_vec(),
                "b1" => model.b1.shape().to_vec(),
                "w2" => model.w2.shape().to_vec(),
                "b2" => model.b2.shape().to_vec(),
                _ => model.token_table.as_ref().expect("listed").shape().to_vec(),
            };
            put(name, shape, data);
        }
        Checkpoint {
            format: CHECKPOINT_FORMAT.to_string(),
            seed: config.seed,
            config: *config,
            input_dim: model.input_dim(),
            hidden_dim: model.hidden_dim(),
            num_classes: model.num_classes(),
            tensors,
        }
    }

    pub fn to_model(&self) -> Result<CpGcnModel> {
        if self.format != CHECKPOINT_FORMAT {
            return Err(Error::InvalidConfig(format!(
                "unsupported checkpoint format {:?}",
                self.format
            )));
        }
        let tensor = |name: &str, shape: &[usize]| -> Result<Vec<f64>> {
            let t = self
                .tensors
                .get(name)
                .ok_or_else(|| Error::ShapeMismatch(format!("checkpoint lacks tensor {name}")))?;
            if t.shape != shape || t.data.len() != shape.iter().product::<usize>() {
                return Err(Error::ShapeMismatch(format!(
                    "{name}: shape {:?} with {} values, expected {shape:?}",
                    t.shape,
                    t.data.len()
                )));
            }
            Ok(t.data.clone())
        };
        let matrix = |name: &str, rows: usize, cols: usize| -> Result<Array2<f64>> {
            Ok(Array2::from_shape_vec((rows, cols), tensor(name, &[rows, cols])?).expect("sized"))
        };
        let vector = |name: &str, len: usize| -> Result<Array1<f64>> {
            Ok(Array1::from_vec(tensor(name, &[len])?))
        };
        let (d1, d, c) = (self.input_dim, self.hidden_dim, self.num_classes);
        let model = CpGcnModel {
            w1: matrix("w1", d1, d)?,
            b1: vector("b1", d)?,
            w2: matrix("w2", d, c)?,
            b2: vector("b2", c)?,
            token_table: if self.config.use_cp {
                Some(matrix("token_table", c + 1, d)?)
            } else {
                None
            },
        };
        if !model.is_finite() {
            return Err(Error::NonFinite {
                what: "checkpoint weights".into(),
            });
        }
        Ok(model)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn json_round_trip_is_exact() {
        for use_cp in [false, true] {
            let model = CpGcnModel::init(3, 5, 2, use_cp, &mut ChaCha8Rng::seed_from_u64(1));
            let cfg = TrainConfig { use_cp, seed: 9, ..Default::default() };
            let ck = Checkpoint::from_model(&model, &cfg);
            let text = serde_json::to_string(&ck).unwrap();
            let back: Checkpoint = serde_json::from_str(&text).unwrap();
            assert_eq!(back, ck);
            assert_eq!(back.to_model().unwrap(), model);
        }
    }

    #[test]
    fn rejects_bad_shapes() {
        let model = CpGcnModel::zeros(3, 4, 2, true);
        let mut ck = Checkpoint::from_model(&model, &TrainConfig::default());
        ck.tensors.get_mut("w2").unwrap().shape = vec![2, 4];
        assert!(ck.to_model().is_err());
        let mut ck = Checkpoint::from_model(&model, &TrainConfig::default());
        ck.format = "other".into();
        assert!(ck.to_model().is_err());
    }
}
