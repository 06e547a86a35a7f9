//! Manifest CSV (`speaker_id,utterance_id,role,path`) and a clip source
//! reading WAV files relative to the manifest's directory.

use std::borrow::Cow;
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use sbsid_core::corpus::{AudioClip, ClipSource, Manifest, ManifestEntry, Role, UtteranceKey};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::wav::load_wav;

#[derive(Debug, Serialize, Deserialize)]
struct Row {
    speaker_id: u32,
    utterance_id: u32,
    role: String,
    path: String,
}

pub fn read_manifest(path: &Path) -> Result<Manifest> {
    let csv_err = |detail: String| Error::Csv {
        path: path.to_path_buf(),
        detail,
    };
    let file = std::fs::File::open(path).map_err(Error::io(path))?;
    let mut reader = csv::Reader::from_reader(file);
    let mut entries = Vec::new();
    let mut roles: BTreeMap<u32, Role> = BTreeMap::new();
    for (i, row) in reader.deserialize::<Row>().enumerate() {
        let row = row.map_err(|e| csv_err(e.to_string()))?;
        let role = Role::parse(&row.role)
            .ok_or_else(|| csv_err(format!("row {}: unknown role {:?}", i + 1, row.role)))?;
        if let Some(prev) = roles.insert(row.speaker_id, role) {
            if prev != role {
                return Err(csv_err(format!(
                    "speaker {} is listed as both {} and {}",
                    row.speaker_id,
                    prev.as_str(),
                    role.as_str()
                )));
            }
        }
        entries.push(ManifestEntry {
            speaker_id: row.speaker_id,
            utterance_id: row.utterance_id,
            path: row.path,
        });
    }
    Manifest::new(entries, roles).map_err(|e| csv_err(e.to_string()))
}

pub fn write_manifest(path: &Path, manifest: &Manifest) -> Result<()> {
    let csv_err = |e: csv::Error| Error::Csv {
        path: path.to_path_buf(),
        detail: e.to_string(),
    };
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    for e in manifest.entries() {
        let role = manifest.role(e.speaker_id).unwrap_or(Role::Impostor);
        w.serialize(Row {
            speaker_id: e.speaker_id,
            utterance_id: e.utterance_id,
            role: role.as_str().to_string(),
            path: e.path.clone(),
        })
        .map_err(csv_err)?;
    }
    w.flush().map_err(Error::io(path))
}

/// Clips on disk, listed by a manifest. Relative paths resolve against the
/// manifest file's directory.
#[derive(Clone, Debug)]
pub struct DiskCorpus {
    pub manifest: Manifest,
    root: PathBuf,
}

impl DiskCorpus {
    pub fn open(manifest_path: &Path) -> Result<Self> {
        let manifest = read_manifest(manifest_path)?;
        let root = manifest_path
            .parent()
            .map(Path::to_path_buf)
            .unwrap_or_default();
        Ok(DiskCorpus { manifest, root })
    }

    pub fn path_of(&self, key: UtteranceKey) -> Option<PathBuf> {
        self.manifest.entry(key).map(|e| self.root.join(&e.path))
    }
}

impl ClipSource for DiskCorpus {
    fn clip(&self, key: UtteranceKey) -> sbsid_core::Result<Cow<'_, AudioClip>> {
        let path = self.path_of(key).ok_or_else(|| {
            sbsid_core::Error::Source(format!("no manifest entry for speaker {} utterance {}", key.0, key.1))
        })?;
        load_wav(&path)
            .map(Cow::Owned)
            .map_err(|e| sbsid_core::Error::Source(e.to_string()))
    }
}
