//! Corpus manifest and sealed-metadata files.
//!
//! The manifest is tab-separated UTF-8, one entry per line (`id`, relative
//! image path, label or empty, domain) with `#`-prefixed header lines
//! carrying the schema version, generation seed, charset digest and per-domain
//! counts. The sealed file maps target ids to their hidden generation
//! severity and ground-truth label; it exists for evaluation only and is
//! never read by a training code path.

use crate::corpus::charset::Charset;
use crate::error::{Error, Result};
use crate::image::Image;
use crate::par;
use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::io::Write;
use std::path::{Path, PathBuf};

pub const MANIFEST_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Domain {
    Source,
    Target,
}

impl fmt::Display for Domain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Domain::Source => write!(f, "source"),
            Domain::Target => write!(f, "target"),
        }
    }
}

impl std::str::FromStr for Domain {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "source" => Ok(Domain::Source),
            "target" => Ok(Domain::Target),
            other => Err(Error::invalid(format!("unknown domain {other:?}"))),
        }
    }
}

/// A generated sample in memory. `label` is present iff the sample belongs
/// to the source domain (or to an evaluation split, where labels are kept).
/// `severity` is generation metadata; it is written to the sealed file only.
#[derive(Debug, Clone)]
pub struct TextSample {
    pub id: String,
    pub image: Image,
    pub label: Option<String>,
    pub domain: Domain,
    pub severity: f32,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ManifestEntry {
    pub id: String,
    pub path: String,
    pub label: String,
    pub domain: Domain,
}

#[derive(Debug, Clone)]
pub struct CorpusManifest {
    pub version: u32,
    pub seed: u64,
    pub charset_hash: String,
    pub entries: Vec<ManifestEntry>,
}

impl CorpusManifest {
    pub fn new(seed: u64, entries: Vec<ManifestEntry>) -> Result<Self> {
        let m = CorpusManifest {
            version: MANIFEST_VERSION,
            seed,
            charset_hash: Charset::standard().hash_hex(),
            entries,
        };
        m.validate()?;
        Ok(m)
    }

    pub fn count(&self, domain: Domain) -> usize {
        self.entries.iter().filter(|e| e.domain == domain).count()
    }

    pub fn validate(&self) -> Result<()> {
        let mut seen = HashSet::new();
        for e in &self.entries {
            if !seen.insert(e.id.as_str()) {
                return Err(Error::invalid(format!("duplicate manifest id {}", e.id)));
            }
            if e.id.contains('\t') || e.label.contains('\t') || e.path.contains('\t') {
                return Err(Error::invalid("manifest fields must not contain tabs"));
            }
        }
        Ok(())
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let mut f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = String::new();
        w.push_str(&format!("#corpus-manifest\tv{}\n", self.version));
        w.push_str(&format!("#seed\t{}\n", self.seed));
        w.push_str(&format!("#charset\t{}\n", self.charset_hash));
        w.push_str(&format!(
            "#counts\tsource={}\ttarget={}\n",
            self.count(Domain::Source),
            self.count(Domain::Target)
        ));
        w.push_str("id\tpath\tlabel\tdomain\n");
        for e in &self.entries {
            w.push_str(&format!(
                "{}\t{}\t{}\t{}\n",
                e.id, e.path, e.label, e.domain
            ));
        }
        f.write_all(w.as_bytes()).map_err(|e| Error::io(path, e))
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut version = None;
        let mut seed = 0u64;
        let mut charset_hash = String::new();
        let mut declared_source = None;
        let mut declared_target = None;
        let mut entries = Vec::new();
        let mut saw_columns = false;
        for line in text.lines() {
            if let Some(rest) = line.strip_prefix('#') {
                let parts: Vec<&str> = rest.split('\t').collect();
                match parts.first().copied() {
                    Some("corpus-manifest") => {
                        let v = parts
                            .get(1)
                            .and_then(|s| s.strip_prefix('v'))
                            .and_then(|s| s.parse::<u32>().ok())
                            .ok_or_else(|| Error::artifact(path, "bad version header"))?;
                        version = Some(v);
                    }
                    Some("seed") => {
                        seed = parts
                            .get(1)
                            .and_then(|s| s.parse().ok())
                            .ok_or_else(|| Error::artifact(path, "bad seed header"))?;
                    }
                    Some("charset") => {
                        charset_hash = parts.get(1).unwrap_or(&"").to_string();
                    }
                    Some("counts") => {
                        for p in &parts[1..] {
                            if let Some(v) = p.strip_prefix("source=") {
                                declared_source = v.parse::<usize>().ok();
                            } else if let Some(v) = p.strip_prefix("target=") {
                                declared_target = v.parse::<usize>().ok();
                            }
                        }
                    }
                    _ => {}
                }
                continue;
            }
            if !saw_columns {
                saw_columns = true; // column header line
                continue;
            }
            if line.is_empty() {
                continue;
            }
            let cols: Vec<&str> = line.split('\t').collect();
            if cols.len() != 4 {
                return Err(Error::artifact(path, format!("bad entry line: {line:?}")));
            }
            entries.push(ManifestEntry {
                id: cols[0].to_string(),
                path: cols[1].to_string(),
                label: cols[2].to_string(),
                domain: cols[3].parse()?,
            });
        }
        let version =
            version.ok_or_else(|| Error::artifact(path, "missing manifest version header"))?;
        if version != MANIFEST_VERSION {
            return Err(Error::artifact(
                path,
                format!("unsupported manifest version {version}"),
            ));
        }
        let m = CorpusManifest {
            version,
            seed,
            charset_hash,
            entries,
        };
        m.validate()
            .map_err(|e| Error::artifact(path, e.to_string()))?;
        let (ns, nt) = (m.count(Domain::Source), m.count(Domain::Target));
        if declared_source.is_some_and(|d| d != ns) || declared_target.is_some_and(|d| d != nt) {
            return Err(Error::artifact(path, "declared counts do not match entries"));
        }
        Ok(m)
    }

    /// Load all images, checking every referenced file exists. Returns
    /// entries paired with pixels, in manifest order.
    pub fn load_images(&self, base_dir: &Path) -> Result<Vec<(ManifestEntry, Image)>> {
        for e in &self.entries {
            let p = base_dir.join(&e.path);
            if !p.is_file() {
                return Err(Error::artifact(p, "referenced image missing"));
            }
        }
        let loaded = par::map(&self.entries, |e| {
            Image::load_png(&base_dir.join(&e.path)).map(|img| (e.clone(), img))
        });
        loaded.into_iter().collect()
    }
}

/// Hidden per-target generation metadata (severity and true label).
#[derive(Debug, Clone, PartialEq)]
pub struct SealedRecord {
    pub severity: f32,
    pub label: String,
}

pub fn write_sealed(path: &Path, records: &BTreeMap<String, SealedRecord>) -> Result<()> {
    let mut w = String::from("#sealed-metadata\tv1\nid\tseverity\tlabel\n");
    for (id, r) in records {
        w.push_str(&format!("{}\t{}\t{}\n", id, r.severity, r.label));
    }
    std::fs::write(path, w).map_err(|e| Error::io(path, e))
}

pub fn read_sealed(path: &Path) -> Result<BTreeMap<String, SealedRecord>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut out = BTreeMap::new();
    for line in text.lines().skip(2) {
        if line.is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() != 3 {
            return Err(Error::artifact(path, format!("bad sealed line: {line:?}")));
        }
        let severity: f32 = cols[1]
            .parse()
            .map_err(|_| Error::artifact(path, "bad severity"))?;
        out.insert(
            cols[0].to_string(),
            SealedRecord {
                severity,
                label: cols[2].to_string(),
            },
        );
    }
    Ok(out)
}

/// Convenience holder for a loaded training corpus, with the type separation
/// the estimators rely on: target samples carry no label here.
#[derive(Debug, Clone)]
pub struct LoadedCorpus {
    pub source: Vec<(String, Image, String)>,
    pub target: Vec<(String, Image)>,
}

pub fn load_corpus(manifest_path: &Path) -> Result<LoadedCorpus> {
    let dir = manifest_path
        .parent()
        .map(PathBuf::from)
        .unwrap_or_default();
    let manifest = CorpusManifest::read(manifest_path)?;
    let loaded = manifest.load_images(&dir)?;
    let mut source = Vec::new();
    let mut target = Vec::new();
    for (e, img) in loaded {
        match e.domain {
            Domain::Source => source.push((e.id, img, e.label)),
            Domain::Target => target.push((e.id, img)),
        }
    }
    Ok(LoadedCorpus { source, target })
}

/// Loaded evaluation split: labeled samples from both domains.
#[derive(Debug, Clone)]
pub struct LoadedEval {
    pub source: Vec<(String, Image, String)>,
    pub target: Vec<(String, Image, String)>,
}

pub fn load_eval(manifest_path: &Path) -> Result<LoadedEval> {
    let dir = manifest_path
        .parent()
        .map(PathBuf::from)
        .unwrap_or_default();
    let manifest = CorpusManifest::read(manifest_path)?;
    let loaded = manifest.load_images(&dir)?;
    let mut source = Vec::new();
    let mut target = Vec::new();
    for (e, img) in loaded {
        match e.domain {
            Domain::Source => source.push((e.id, img, e.label)),
            Domain::Target => target.push((e.id, img, e.label)),
        }
    }
    Ok(LoadedEval { source, target })
}
