//! Model-set directories: one weight checkpoint per network plus
//! `manifest.json` holding the config, seeds and training histories.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use csgi_nn::checkpoint;

use crate::config::TaciConfig;
use crate::error::{Result, TaciError};
use crate::model::TaciNet;
use crate::train::{NetworkRole, PairSeeds, TaciModelSet, TrainingHistory};

pub const MANIFEST_FILE: &str = "manifest.json";
pub const MANIFEST_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkEntry {
    pub role: NetworkRole,
    pub file: String,
    pub parameter_count: usize,
    pub history: TrainingHistory,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelManifest {
    pub format_version: u32,
    pub crate_version: String,
    pub config: TaciConfig,
    pub seeds: PairSeeds,
    pub networks: Vec<NetworkEntry>,
}

pub fn save_model_set(models: &TaciModelSet, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    let mut entries = Vec::new();
    for role in NetworkRole::ALL {
        let file = format!("{}.ckpt", role.name());
        let net = models.network(role);
        checkpoint::save(net.params(), &dir.join(&file))?;
        entries.push(NetworkEntry {
            role,
            file,
            parameter_count: net.parameter_count(),
            history: models.history(role).clone(),
        });
    }
    let manifest = ModelManifest {
        format_version: MANIFEST_VERSION,
        crate_version: env!("CARGO_PKG_VERSION").into(),
        config: models.config.clone(),
        seeds: models.seeds,
        networks: entries,
    };
    let text = serde_json::to_string_pretty(&manifest).map_err(|e| TaciError::Manifest(e.to_string()))?;
    fs::write(dir.join(MANIFEST_FILE), text)?;
    Ok(())
}

pub fn load_model_set(dir: &Path) -> Result<TaciModelSet> {
    let text = fs::read_to_string(dir.join(MANIFEST_FILE))?;
    let manifest: ModelManifest = serde_json::from_str(&text).map_err(|e| TaciError::Manifest(e.to_string()))?;
    if manifest.format_version != MANIFEST_VERSION {
        return Err(TaciError::Manifest(format!(
            "unsupported manifest version {}",
            manifest.format_version
        )));
    }
    let mut networks = Vec::new();
    let mut histories = Vec::new();
    for role in NetworkRole::ALL {
        let entry = manifest
            .networks
            .iter()
            .find(|e| e.role == role)
            .ok_or_else(|| TaciError::Manifest(format!("missing network {}", role.name())))?;
        let mut net = TaciNet::new(&manifest.config, manifest.seeds.init(role))?;
        checkpoint::load_into(net.params_mut(), &dir.join(&entry.file))?;
        networks.push((role, net));
        histories.push((role, entry.history.clone()));
    }
    Ok(TaciModelSet {
        config: manifest.config,
        seeds: manifest.seeds,
        networks,
        histories,
    })
}
