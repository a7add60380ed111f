//! File formats: JSON Lines datasets and JSON model files.
//!
//! A dataset file starts with a header line
//! `{"format":"massart-margin/v1","dim":d,"gamma":γ,"eta":η,"noise_model":{..},"w_star":[..]}`
//! (`w_star` and `marginal` optional) followed by one `{"x":[..],"y":±1}`
//! object per line. Floats are written in shortest round-trip form.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::synth::{Dataset, LabeledExample, Marginal, MassartInstance, NoiseModel};
use crate::vector::UnitVector;

pub const DATASET_FORMAT: &str = "massart-margin/v1";
pub const MODEL_FORMAT: &str = "massart-model/v1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetHeader {
    pub format: String,
    pub dim: usize,
    pub gamma: f64,
    pub eta: f64,
    pub noise_model: NoiseModel,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub w_star: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub marginal: Option<Marginal>,
}

impl DatasetHeader {
    pub fn for_instance(instance: &MassartInstance) -> Self {
        DatasetHeader {
            format: DATASET_FORMAT.to_string(),
            dim: instance.dim(),
            gamma: instance.gamma(),
            eta: instance.eta(),
            noise_model: instance.noise().clone(),
            w_star: Some(instance.w_star().to_vec()),
            marginal: match instance.marginal() {
                Marginal::Uniform => None,
                m => Some(m),
            },
        }
    }

    /// Generating instance, when the header names `w_star`.
    pub fn instance(&self) -> Result<Option<MassartInstance>> {
        let Some(w) = &self.w_star else {
            return Ok(None);
        };
        let inst = MassartInstance::new(
            UnitVector::on_sphere(w.clone())?,
            self.gamma,
            self.eta,
            self.noise_model.clone(),
        )?;
        Ok(Some(inst.with_marginal(self.marginal.unwrap_or_default())?))
    }
}

/// Dataset read from disk together with its header.
#[derive(Debug, Clone)]
pub struct DatasetFile {
    pub header: DatasetHeader,
    pub dataset: Dataset,
}

pub fn write_dataset(path: &Path, header: &DatasetHeader, examples: &[LabeledExample]) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    let line_err = |e: serde_json::Error| Error::io(path, std::io::Error::other(e));
    serde_json::to_writer(&mut out, header).map_err(line_err)?;
    out.write_all(b"\n").map_err(|e| Error::io(path, e))?;
    for e in examples {
        serde_json::to_writer(&mut out, e).map_err(line_err)?;
        out.write_all(b"\n").map_err(|e| Error::io(path, e))?;
    }
    out.flush().map_err(|e| Error::io(path, e))
}

/// Writes a generated dataset with a header describing its instance.
pub fn save_dataset(path: &Path, dataset: &Dataset) -> Result<()> {
    let instance = dataset
        .instance()
        .ok_or(Error::MissingInstance("saving a dataset"))?;
    write_dataset(path, &DatasetHeader::for_instance(instance), dataset.examples())
}

pub fn read_dataset(path: &Path) -> Result<DatasetFile> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut lines = BufReader::new(file).lines().enumerate();
    let header: DatasetHeader = match lines.next() {
        Some((_, line)) => {
            let line = line.map_err(|e| Error::io(path, e))?;
            serde_json::from_str(&line).map_err(|e| Error::format(path, 1, e))?
        }
        None => return Err(Error::format(path, 1, "missing header line")),
    };
    if header.format != DATASET_FORMAT {
        return Err(Error::format(
            path,
            1,
            format!("unsupported format `{}`, expected `{DATASET_FORMAT}`", header.format),
        ));
    }
    let instance = header.instance().map_err(|e| Error::format(path, 1, e))?;
    let mut examples = Vec::new();
    for (k, line) in lines {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let e: LabeledExample = serde_json::from_str(&line).map_err(|e| Error::format(path, k + 1, e))?;
        if e.x.dim() != header.dim {
            return Err(Error::format(
                path,
                k + 1,
                format!("point has dimension {}, header says {}", e.x.dim(), header.dim),
            ));
        }
        examples.push(e);
    }
    if examples.is_empty() {
        return Err(Error::format(path, 2, "no examples"));
    }
    let dataset = Dataset::new(examples, instance).map_err(|e| Error::format(path, 0, e))?;
    Ok(DatasetFile { header, dataset })
}

/// Learned weight vector with the parameters that produced it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub format: String,
    pub dim: usize,
    pub w: Vec<f64>,
    pub params: serde_json::Value,
    pub draws_used: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub method: Option<String>,
}

impl ModelFile {
    pub fn new(w: &[f64], params: serde_json::Value, draws_used: usize) -> Self {
        ModelFile {
            format: MODEL_FORMAT.to_string(),
            dim: w.len(),
            w: w.to_vec(),
            params,
            draws_used,
            method: None,
        }
    }

    pub fn with_method(mut self, method: &str) -> Self {
        self.method = Some(method.to_string());
        self
    }
}

pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    serde_json::to_writer_pretty(&mut out, value)
        .map_err(|e| Error::io(path, std::io::Error::other(e)))?;
    out.write_all(b"\n")
        .and_then(|_| out.flush())
        .map_err(|e| Error::io(path, e))
}

pub fn write_model(path: &Path, model: &ModelFile) -> Result<()> {
    write_json(path, model)
}

pub fn read_model(path: &Path) -> Result<ModelFile> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let model: ModelFile = serde_json::from_str(&text).map_err(|e| Error::format(path, e.line(), e))?;
    if model.format != MODEL_FORMAT {
        return Err(Error::format(
            path,
            1,
            format!("unsupported format `{}`, expected `{MODEL_FORMAT}`", model.format),
        ));
    }
    if model.w.len() != model.dim {
        return Err(Error::format(path, 1, "length of `w` differs from `dim`"));
    }
    if model.w.iter().any(|c| !c.is_finite()) {
        return Err(Error::format(path, 1, "non-finite weight"));
    }
    Ok(model)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::generate_dataset;

    #[test]
    fn dataset_round_trip_is_exact() {
        let inst = MassartInstance::random(
            6,
            0.15,
            0.25,
            NoiseModel::HashField { rate_bound: 0.25, salt: 77 },
            3,
        )
        .unwrap();
        let ds = generate_dataset(&inst, 40, 8).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("d.jsonl");
        save_dataset(&path, &ds).unwrap();
        let back = read_dataset(&path).unwrap();
        assert_eq!(back.dataset.examples(), ds.examples());
        assert_eq!(back.dataset.instance(), Some(&inst));
        let first = std::fs::read_to_string(&path).unwrap();
        assert!(first.starts_with("{\"format\":\"massart-margin/v1\",\"dim\":6,"));
    }

    #[test]
    fn malformed_lines_name_their_position() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.jsonl");
        std::fs::write(
            &path,
            "{\"format\":\"massart-margin/v1\",\"dim\":2,\"gamma\":0.1,\"eta\":0.1,\"noise_model\":{\"kind\":\"constant\",\"rate\":0.1}}\n{\"x\":[1.0,0.0],\"y\":1}\n{\"x\":[1.0],\"y\":1}\n",
        )
        .unwrap();
        match read_dataset(&path) {
            Err(Error::Format { line, .. }) => assert_eq!(line, 3),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn model_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.json");
        let m = ModelFile::new(&[0.1, -0.2, 1.0 / 3.0], serde_json::json!({"eps": 0.1}), 42).with_method("cutting-planes");
        write_model(&path, &m).unwrap();
        assert_eq!(read_model(&path).unwrap(), m);
    }
}
