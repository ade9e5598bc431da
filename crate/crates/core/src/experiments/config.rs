//! Flat `key = value` configuration with `[section]` headers.
//!
//! ```text
//! # comment
//! [experiment]
//! id = toy-bma
//! seeds = 0, 1, 2
//!
//! [train]
//! epochs = 200
//! ```
//!
//! Keys before the first header belong to the `experiment` section. Keys
//! ending in `_path` are resolved relative to the config file and must exist.

use std::cell::RefCell;
use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Default)]
pub struct Config {
    sections: BTreeMap<String, BTreeMap<String, String>>,
    read: RefCell<BTreeSet<(String, String)>>,
}

impl PartialEq for Config {
    fn eq(&self, other: &Self) -> bool {
        self.sections == other.sections
    }
}

impl Config {
    pub fn parse(text: &str) -> Result<Self> {
        let mut sections: BTreeMap<String, BTreeMap<String, String>> = BTreeMap::new();
        let mut current = "experiment".to_string();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix('[') {
                let name = rest
                    .strip_suffix(']')
                    .ok_or_else(|| Error::config(format!("line {}: unterminated section header", lineno + 1)))?
                    .trim();
                if name.is_empty() {
                    return Err(Error::config(format!("line {}: empty section name", lineno + 1)));
                }
                current = name.to_string();
                sections.entry(current.clone()).or_default();
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::config(format!("line {}: expected key = value", lineno + 1)))?;
            let key = key.trim();
            if key.is_empty() {
                return Err(Error::config(format!("line {}: empty key", lineno + 1)));
            }
            if sections.entry(current.clone()).or_default().insert(key.to_string(), value.trim().to_string()).is_some() {
                return Err(Error::config(format!("line {}: duplicate key {current}.{key}", lineno + 1)));
            }
        }
        Ok(Config {
            sections,
            read: RefCell::default(),
        })
    }

    pub fn set(&mut self, section: &str, key: &str, value: impl ToString) {
        self.sections.entry(section.to_string()).or_default().insert(key.to_string(), value.to_string());
    }

    pub fn raw(&self, section: &str, key: &str) -> Option<&str> {
        self.read.borrow_mut().insert((section.to_string(), key.to_string()));
        self.sections.get(section)?.get(key).map(String::as_str)
    }

    /// Errors on any key that no lookup has asked for, which catches typos.
    pub fn reject_unread(&self) -> Result<()> {
        let read = self.read.borrow();
        let unread: Vec<String> = self
            .sections
            .iter()
            .flat_map(|(s, e)| e.keys().map(move |k| (s.clone(), k.clone())))
            .filter(|key| !read.contains(key))
            .map(|(s, k)| format!("{s}.{k}"))
            .collect();
        if unread.is_empty() {
            Ok(())
        } else {
            Err(Error::config(format!("unknown keys: {}", unread.join(", "))))
        }
    }

    pub fn has_section(&self, section: &str) -> bool {
        self.sections.contains_key(section)
    }

    pub fn get<T: FromStr>(&self, section: &str, key: &str) -> Result<Option<T>> {
        match self.raw(section, key) {
            None => Ok(None),
            Some(v) => v
                .parse()
                .map(Some)
                .map_err(|_| Error::config(format!("{section}.{key}: cannot parse {v:?}"))),
        }
    }

    pub fn get_or<T: FromStr>(&self, section: &str, key: &str, default: T) -> Result<T> {
        Ok(self.get(section, key)?.unwrap_or(default))
    }

    pub fn require<T: FromStr>(&self, section: &str, key: &str) -> Result<T> {
        self.get(section, key)?.ok_or_else(|| Error::config(format!("missing {section}.{key}")))
    }

    /// Comma-separated list.
    pub fn list<T: FromStr>(&self, section: &str, key: &str) -> Result<Option<Vec<T>>> {
        match self.raw(section, key) {
            None => Ok(None),
            Some(v) => v
                .split(',')
                .map(str::trim)
                .filter(|s| !s.is_empty())
                .map(|s| s.parse().map_err(|_| Error::config(format!("{section}.{key}: cannot parse {s:?}"))))
                .collect::<Result<Vec<T>>>()
                .map(Some),
        }
    }

    pub fn list_or<T: FromStr>(&self, section: &str, key: &str, default: Vec<T>) -> Result<Vec<T>> {
        Ok(self.list(section, key)?.unwrap_or(default))
    }

    /// Canonical text: sections and keys sorted, one `key = value` per line.
    pub fn canonical(&self) -> String {
        let mut out = String::new();
        for (name, entries) in &self.sections {
            out.push_str(&format!("[{name}]\n"));
            for (k, v) in entries {
                out.push_str(&format!("{k} = {v}\n"));
            }
        }
        out
    }

    /// First 16 hex digits of the SHA-256 of [`canonical`](Self::canonical).
    pub fn hash(&self) -> String {
        let digest = Sha256::digest(self.canonical().as_bytes());
        digest.iter().take(8).map(|b| format!("{b:02x}")).collect()
    }

    fn path_keys(&self) -> Vec<(String, String)> {
        self.sections
            .iter()
            .flat_map(|(s, e)| e.keys().filter(|k| k.ends_with("_path")).map(move |k| (s.clone(), k.clone())))
            .collect()
    }
}

/// A parsed experiment: id, seeds, output directory and all settings.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub id: String,
    pub seeds: Vec<u64>,
    pub out_dir: PathBuf,
    pub settings: Config,
}

impl ExperimentConfig {
    /// `base_dir` anchors relative `_path` keys and the output directory.
    pub fn from_config(mut settings: Config, base_dir: &Path) -> Result<Self> {
        let id: String = settings.require("experiment", "id")?;
        let seeds: Vec<u64> = settings.list("experiment", "seeds")?.unwrap_or_default();
        if seeds.is_empty() {
            return Err(Error::config("experiment.seeds must list at least one seed"));
        }
        let out: String = settings.get_or("experiment", "out", format!("results/{id}"))?;
        let out_dir = base_dir.join(out);
        for (section, key) in settings.path_keys() {
            let rel = settings.raw(&section, &key).expect("listed key").to_string();
            let path = base_dir.join(&rel);
            if !path.exists() {
                return Err(Error::config(format!("{section}.{key}: {} does not exist", path.display())));
            }
            settings.set(&section, &key, path.display());
        }
        Ok(ExperimentConfig {
            id,
            seeds,
            out_dir,
            settings,
        })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::from_config(Config::parse(&text)?, base)
    }

    /// Replaces the seed list with a single seed.
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seeds = vec![seed];
        self.settings.set("experiment", "seeds", seed);
        self
    }

    pub fn with_out_dir(mut self, out: PathBuf) -> Self {
        self.out_dir = out;
        self
    }

    /// Hash of the effective settings (after overrides, excluding the output location).
    pub fn hash(&self) -> String {
        let mut s = self.settings.clone();
        if let Some(e) = s.sections.get_mut("experiment") {
            e.remove("out");
        }
        s.hash()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_sections_and_lists() {
        let c = Config::parse("id = x # trailing\nseeds = 1, 2,3\n[train]\nlr=0.1\n").unwrap();
        assert_eq!(c.raw("experiment", "id"), Some("x"));
        assert_eq!(c.list::<u64>("experiment", "seeds").unwrap().unwrap(), vec![1, 2, 3]);
        assert_eq!(c.require::<f64>("train", "lr").unwrap(), 0.1);
        assert_eq!(c.get_or("train", "epochs", 7usize).unwrap(), 7);
    }

    #[test]
    fn unread_keys_are_reported() {
        let c = Config::parse("id = x\n[train]\nlr = 0.1\nepohcs = 3\n").unwrap();
        let _: Option<String> = c.get("experiment", "id").unwrap();
        let _: f64 = c.get_or("train", "lr", 0.0).unwrap();
        let err = c.reject_unread().unwrap_err().to_string();
        assert!(err.contains("train.epohcs") && !err.contains("lr"));
        let _: usize = c.get_or("train", "epohcs", 0).unwrap();
        c.reject_unread().unwrap();
    }

    #[test]
    fn rejects_garbage() {
        assert!(Config::parse("[train\n").is_err());
        assert!(Config::parse("novalue\n").is_err());
        assert!(Config::parse("a = 1\na = 2\n").is_err());
        let c = Config::parse("[t]\nlr = fast\n").unwrap();
        assert!(matches!(c.get::<f64>("t", "lr"), Err(Error::Config(_))));
    }

    #[test]
    fn hash_ignores_layout_and_out() {
        let a = Config::parse("id = x\nseeds = 1\nout = a\n[t]\nb = 2\nc = 3\n").unwrap();
        let b = Config::parse("[t]\nc = 3\nb=2\n[experiment]\nseeds = 1\nid = x\nout = b\n").unwrap();
        let ea = ExperimentConfig::from_config(a, Path::new(".")).unwrap();
        let eb = ExperimentConfig::from_config(b, Path::new(".")).unwrap();
        assert_eq!(ea.hash(), eb.hash());
        assert_ne!(ea.hash(), eb.clone().with_seed(5).hash());
    }

    #[test]
    fn missing_referenced_file() {
        let c = Config::parse("id = x\nseeds = 0\n[data]\nimages_path = nope.idx\n").unwrap();
        assert!(ExperimentConfig::from_config(c, Path::new("/nonexistent")).is_err());
    }
}
