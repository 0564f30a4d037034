//! Versioned JSON files for trained models.
//!
//! A model file is an envelope naming the format, its version, the model kind
//! and the ordered feature names the model expects, wrapping the model itself.
//! Floats are written in shortest round-trip form, so a loaded model
//! reproduces the saved model's outputs exactly.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mlp::{MlpModel, Network};
use crate::svm::SvmModel;

pub const FORMAT: &str = "proprio-model";
pub const VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "model", rename_all = "lowercase")]
pub enum Model {
    Svm(SvmModel),
    Mlp(MlpModel),
}

impl Model {
    pub fn kind(&self) -> &'static str {
        match self {
            Model::Svm(_) => "svm",
            Model::Mlp(_) => "mlp",
        }
    }

    pub fn input_dim(&self) -> usize {
        match self {
            Model::Svm(m) => m.scaler.dim(),
            Model::Mlp(m) => m.scaler.dim(),
        }
    }

    pub fn predict_all(&self, rows: &[Vec<f64>]) -> Result<Vec<usize>> {
        match self {
            Model::Svm(m) => m.predict_all(rows),
            Model::Mlp(m) => m.predict_all(rows),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub format: String,
    pub version: u32,
    pub feature_names: Vec<String>,
    #[serde(flatten)]
    pub model: Model,
}

impl ModelFile {
    pub fn new(model: Model, feature_names: Vec<String>) -> ModelFile {
        ModelFile {
            format: FORMAT.to_string(),
            version: VERSION,
            feature_names,
            model,
        }
    }

    /// Checks the envelope and the internal consistency of the model.
    pub fn validate(&self) -> Result<()> {
        if self.format != FORMAT {
            return Err(Error::Serialization(format!("not a model file (format '{}')", self.format)));
        }
        if self.version != VERSION {
            return Err(Error::Serialization(format!(
                "unsupported model file version {} (expected {VERSION})",
                self.version
            )));
        }
        let dim = self.model.input_dim();
        if self.feature_names.len() != dim {
            return Err(Error::Shape {
                expected: dim,
                actual: self.feature_names.len(),
            });
        }
        match &self.model {
            Model::Svm(m) => {
                if m.scaler.std.len() != dim {
                    return Err(Error::Shape {
                        expected: dim,
                        actual: m.scaler.std.len(),
                    });
                }
                for tm in &m.machines {
                    let bm = &tm.machine;
                    if bm.coefficients.len() != bm.support_vectors.len() {
                        return Err(Error::Shape {
                            expected: bm.support_vectors.len(),
                            actual: bm.coefficients.len(),
                        });
                    }
                    if let Some(sv) = bm.support_vectors.iter().find(|sv| sv.len() != dim) {
                        return Err(Error::Shape {
                            expected: dim,
                            actual: sv.len(),
                        });
                    }
                }
            }
            Model::Mlp(m) => {
                Network::from_layers(m.network.layers.clone())?;
                if m.network.input_dim() != dim {
                    return Err(Error::Shape {
                        expected: dim,
                        actual: m.network.input_dim(),
                    });
                }
            }
        }
        Ok(())
    }

    pub fn to_writer<W: Write>(&self, w: W) -> Result<()> {
        serde_json::to_writer_pretty(w, self).map_err(|e| Error::Serialization(e.to_string()))
    }

    pub fn from_json_str(text: &str) -> Result<ModelFile> {
        let file: ModelFile = serde_json::from_str(text).map_err(|e| Error::Serialization(e.to_string()))?;
        file.validate()?;
        Ok(file)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let f = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = BufWriter::new(f);
        self.to_writer(&mut w)?;
        w.write_all(b"\n").and_then(|_| w.flush()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<ModelFile> {
        let path = path.as_ref();
        let f = File::open(path).map_err(|e| Error::io(path, e))?;
        let file: ModelFile =
            serde_json::from_reader(BufReader::new(f)).map_err(|e| Error::Serialization(format!("{}: {e}", path.display())))?;
        file.validate()?;
        Ok(file)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evaluation::Dataset;
    use crate::mlp::{self, MlpConfig};
    use crate::svm::{train_multiclass, KernelConfig, KernelKind, Reduction, SvmConfig};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn data(seed: u64) -> Dataset {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut x = Vec::new();
        let mut y = Vec::new();
        for i in 0..80 {
            let c = i % 4;
            x.push((0..3).map(|d| c as f64 * (d as f64 + 1.0) + rng.random_range(-0.8..0.8)).collect());
            y.push(c);
        }
        Dataset::new(x, y).unwrap()
    }

    fn names(n: usize) -> Vec<String> {
        (0..n).map(|i| format!("f{i}")).collect()
    }

    #[test]
    fn svm_round_trip_is_exact() {
        let d = data(1);
        for kind in KernelKind::ALL {
            for reduction in [Reduction::OneVsOne, Reduction::OneVsRest] {
                let cfg = SvmConfig {
                    kernel: KernelConfig::new(kind, 0.1),
                    reduction,
                    ..SvmConfig::default()
                };
                let model = train_multiclass(&d, &cfg).unwrap();
                let file = ModelFile::new(Model::Svm(model.clone()), names(3));
                let mut buf = Vec::new();
                file.to_writer(&mut buf).unwrap();
                let back = ModelFile::from_json_str(std::str::from_utf8(&buf).unwrap()).unwrap();
                let Model::Svm(loaded) = &back.model else { panic!("wrong kind") };
                for x in &d.x {
                    let a = model.decision_values(x).unwrap();
                    let b = loaded.decision_values(x).unwrap();
                    for (u, v) in a.iter().zip(&b) {
                        assert!((u - v).abs() < 1e-12);
                    }
                }
                assert_eq!(back, file);
            }
        }
    }

    #[test]
    fn mlp_round_trip_is_exact() {
        let d = data(2);
        let cfg = MlpConfig { epochs: 3, ..MlpConfig::new(3) };
        let (model, _) = mlp::train(&d, &d, &cfg).unwrap();
        let file = ModelFile::new(Model::Mlp(model.clone()), names(3));
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.json");
        file.save(&path).unwrap();
        let back = ModelFile::load(&path).unwrap();
        assert_eq!(back.model.kind(), "mlp");
        let Model::Mlp(loaded) = &back.model else { panic!("wrong kind") };
        for x in &d.x {
            assert_eq!(model.forward(x, mlp::Mode::Eval).unwrap(), loaded.forward(x, mlp::Mode::Eval).unwrap());
        }
    }

    #[test]
    fn envelope_checks() {
        let model = train_multiclass(&data(3), &SvmConfig::default()).unwrap();
        let file = ModelFile::new(Model::Svm(model), names(3));
        let json = serde_json::to_string(&file).unwrap();
        assert!(json.contains("\"format\":\"proprio-model\""));
        assert!(json.contains("\"kind\":\"svm\""));

        let bad_version = json.replace("\"version\":1", "\"version\":99");
        assert!(matches!(ModelFile::from_json_str(&bad_version), Err(Error::Serialization(_))));
        let bad_format = json.replace("proprio-model", "other");
        assert!(ModelFile::from_json_str(&bad_format).is_err());
        let bad_names = json.replace("[\"f0\",\"f1\",\"f2\"]", "[\"f0\"]");
        assert!(matches!(ModelFile::from_json_str(&bad_names), Err(Error::Shape { .. })));
        assert!(ModelFile::from_json_str("{").is_err());
        assert!(ModelFile::load("/nonexistent/model.json").is_err());
    }
}
