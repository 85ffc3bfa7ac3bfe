use std::collections::{BTreeMap, HashMap};
use std::path::{Path, PathBuf};
use std::sync::{Arc, RwLock};

use qeclab::hld::{HighLevelDecoder, NoiseKind};
use qeclab::nn::{read_manifest_file, ModelFile, ModelManifest};
use serde::{Deserialize, Serialize};

use crate::api::ApiError;

pub const MODEL_EXTENSION: &str = "model";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelEntry {
    pub model_id: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub d: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub noise_kind: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub channels: Option<usize>,
    pub architecture: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub param_count: Option<usize>,
    pub metadata: BTreeMap<String, String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub warning: Option<String>,
}

impl ModelEntry {
    fn from_manifest(model_id: String, m: &ModelManifest) -> Self {
        let [channels, g, _] = m.spec.input;
        let noise_kind = m.metadata.get("noise").cloned().unwrap_or_else(|| {
            let kind = if channels == 1 { NoiseKind::Depolarizing } else { NoiseKind::Phenomenological };
            kind.name().to_string()
        });
        ModelEntry {
            model_id,
            d: (g % 2 == 1).then_some(g.div_ceil(2)),
            noise_kind: Some(noise_kind),
            channels: Some(channels),
            architecture: m.spec.layers.iter().map(|l| l.to_string()).collect(),
            param_count: m.spec.param_count().ok(),
            metadata: m.metadata.clone(),
            warning: None,
        }
    }

    fn broken(model_id: String, warning: String) -> Self {
        ModelEntry {
            model_id,
            d: None,
            noise_kind: None,
            channels: None,
            architecture: Vec::new(),
            param_count: None,
            metadata: BTreeMap::new(),
            warning: Some(warning),
        }
    }
}

/// Models on disk, named by file stem, loaded on first use and kept
/// read-only afterwards.
#[derive(Debug, Default)]
pub struct ModelStore {
    dir: Option<PathBuf>,
    cache: RwLock<HashMap<String, Arc<HighLevelDecoder>>>,
}

fn valid_id(id: &str) -> bool {
    !id.is_empty() && !id.starts_with('.') && id.chars().all(|c| c.is_ascii_alphanumeric() || "-_.".contains(c))
}

impl ModelStore {
    pub fn new(dir: Option<PathBuf>) -> Self {
        ModelStore { dir, cache: RwLock::default() }
    }

    pub fn dir(&self) -> Option<&Path> {
        self.dir.as_deref()
    }

    /// Registers an in-memory model; it shadows any file of the same name.
    pub fn insert(&self, id: &str, model: HighLevelDecoder) {
        self.cache.write().expect("model cache lock").insert(id.to_string(), Arc::new(model));
    }

    pub fn get(&self, id: &str) -> Result<Arc<HighLevelDecoder>, ApiError> {
        if let Some(m) = self.cache.read().expect("model cache lock").get(id) {
            return Ok(m.clone());
        }
        let unknown = || ApiError::not_found("unknown-model", format!("no model named {id:?}"));
        if !valid_id(id) {
            return Err(unknown());
        }
        let Some(dir) = &self.dir else { return Err(unknown()) };
        let path = dir.join(format!("{id}.{MODEL_EXTENSION}"));
        if !path.is_file() {
            return Err(unknown());
        }
        let model = ModelFile::load(&path)
            .and_then(|f| HighLevelDecoder::from_model(&f))
            .map_err(|e| ApiError::internal(format!("model {id:?} could not be loaded: {e}")))?;
        let model = Arc::new(model);
        self.cache.write().expect("model cache lock").entry(id.to_string()).or_insert(model.clone());
        Ok(model)
    }

    /// Manifest listing of the models directory plus in-memory models,
    /// sorted by id. Unreadable files are listed with a warning.
    pub fn list(&self) -> Result<Vec<ModelEntry>, ApiError> {
        let mut entries = BTreeMap::new();
        if let Some(dir) = &self.dir {
            let read = std::fs::read_dir(dir)
                .map_err(|e| ApiError::internal(format!("models directory {} is unreadable: {e}", dir.display())))?;
            for item in read {
                let path = item.map_err(|e| ApiError::internal(e.to_string()))?.path();
                if path.extension().and_then(|e| e.to_str()) != Some(MODEL_EXTENSION) {
                    continue;
                }
                let Some(id) = path.file_stem().and_then(|s| s.to_str()).map(str::to_string) else { continue };
                let entry = match read_manifest_file(&path) {
                    Ok(m) => ModelEntry::from_manifest(id.clone(), &m),
                    Err(e) => ModelEntry::broken(id.clone(), e.to_string()),
                };
                entries.insert(id, entry);
            }
        }
        for (id, model) in self.cache.read().expect("model cache lock").iter() {
            if !entries.contains_key(id) {
                let m = ModelManifest { spec: model.spec().clone(), seed: 0, metadata: BTreeMap::new(), weight_count: 0 };
                entries.insert(id.clone(), ModelEntry::from_manifest(id.clone(), &m));
            }
        }
        Ok(entries.into_values().collect())
    }
}
