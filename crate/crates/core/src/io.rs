//! Edge-list datasets, run configuration files and ground-truth sidecars.
//!
//! Edge lists hold one record per line, `t i j [w]`, separated by
//! whitespace or commas. Lines starting with `#` are comments; an optional
//! header comment of the form
//!
//! ```text
//! # fcmmsb-edgelist n_entities=100 n_slices=2 directed=true
//! ```
//!
//! supplies the network shape.

use std::collections::HashMap;
use std::fs;
use std::path::Path;

use log::warn;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::eval::{EvalConfig, ModelKind, Neighborhood};
use crate::gibbs::{Mode, RunConfig, DEFAULT_THIN};
use crate::linalg::Mat2;
use crate::model::{Hyperparams, TemporalNetwork};
use crate::partition::Partition;

const HEADER_TAG: &str = "fcmmsb-edgelist";

/// Options for [`load_temporal_edgelist`]; unset fields fall back to the
/// file header, then to what the records imply.
#[derive(Debug, Clone, PartialEq)]
pub struct LoadOptions {
    pub directed: Option<bool>,
    pub n_slices: Option<usize>,
    pub n_entities: Option<usize>,
    /// Weights at or above this value become links.
    pub binarize_threshold: f64,
}

impl Default for LoadOptions {
    fn default() -> Self {
        LoadOptions {
            directed: None,
            n_slices: None,
            n_entities: None,
            binarize_threshold: 1.0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct LoadedNetwork {
    pub network: TemporalNetwork,
    /// Original identifier of each dense entity index.
    pub entity_ids: Vec<String>,
    pub warnings: Vec<String>,
}

#[derive(Default)]
struct Header {
    n_entities: Option<usize>,
    n_slices: Option<usize>,
    directed: Option<bool>,
}

fn parse_header(line: &str, path: &Path, lineno: usize) -> Result<Option<Header>> {
    let mut words = line.trim_start_matches('#').split_whitespace();
    if words.next() != Some(HEADER_TAG) {
        return Ok(None);
    }
    let mut h = Header::default();
    let perr = |message: String| Error::Parse {
        path: path.to_path_buf(),
        line: lineno,
        message,
    };
    for w in words {
        let (key, value) = w
            .split_once('=')
            .ok_or_else(|| perr(format!("header field {w:?} is not key=value")))?;
        match key {
            "n_entities" => {
                h.n_entities = Some(value.parse().map_err(|e| perr(format!("n_entities: {e}")))?)
            }
            "n_slices" => {
                h.n_slices = Some(value.parse().map_err(|e| perr(format!("n_slices: {e}")))?)
            }
            "directed" => {
                h.directed = Some(value.parse().map_err(|e| perr(format!("directed: {e}")))?)
            }
            other => return Err(perr(format!("unknown header field {other:?}"))),
        }
    }
    Ok(Some(h))
}

struct Record {
    line: usize,
    t: usize,
    i: String,
    j: String,
    w: f64,
}

/// Reads a temporal edge list into a fully observed network.
pub fn load_temporal_edgelist(path: &Path, options: &LoadOptions) -> Result<LoadedNetwork> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_temporal_edgelist(&text, path, options)
}

/// As [`load_temporal_edgelist`], from text; `path` only labels errors.
pub fn parse_temporal_edgelist(text: &str, path: &Path, options: &LoadOptions) -> Result<LoadedNetwork> {
    let mut header = Header::default();
    let mut records = Vec::new();
    for (k, raw) in text.lines().enumerate() {
        let lineno = k + 1;
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        if line.starts_with('#') {
            if let Some(h) = parse_header(line, path, lineno)? {
                header = h;
            }
            continue;
        }
        let fields: Vec<&str> = line
            .split(|c: char| c.is_whitespace() || c == ',')
            .filter(|f| !f.is_empty())
            .collect();
        let perr = |message: String| Error::Parse {
            path: path.to_path_buf(),
            line: lineno,
            message,
        };
        if !(3..=4).contains(&fields.len()) {
            return Err(perr(format!("expected `t i j [w]`, found {} fields", fields.len())));
        }
        let t: usize = fields[0]
            .parse()
            .map_err(|_| perr(format!("slice {:?} is not a non-negative integer", fields[0])))?;
        let w: f64 = match fields.get(3) {
            Some(w) => w.parse().map_err(|_| perr(format!("weight {w:?} is not a number")))?,
            None => 1.0,
        };
        if !w.is_finite() {
            return Err(perr(format!("weight {w} is not finite")));
        }
        records.push(Record {
            line: lineno,
            t,
            i: fields[1].to_string(),
            j: fields[2].to_string(),
            w,
        });
    }

    let directed = options.directed.or(header.directed).unwrap_or(true);
    let declared_slices = options.n_slices.or(header.n_slices);
    let declared_entities = options.n_entities.or(header.n_entities);
    let n_slices = match declared_slices {
        Some(t) => t,
        None => records.iter().map(|r| r.t + 1).max().unwrap_or(0),
    };
    if let Some(r) = records.iter().find(|r| r.t >= n_slices) {
        return Err(Error::Parse {
            path: path.to_path_buf(),
            line: r.line,
            message: format!("slice {} outside [0, {n_slices})", r.t),
        });
    }

    // integer ids keep their value; anything else is numbered by first appearance
    let numeric = records
        .iter()
        .all(|r| r.i.parse::<usize>().is_ok() && r.j.parse::<usize>().is_ok());
    let mut index_of: HashMap<String, usize> = HashMap::new();
    let mut entity_ids: Vec<String> = Vec::new();
    if numeric {
        let max_id = records
            .iter()
            .flat_map(|r| [r.i.parse::<usize>().unwrap(), r.j.parse::<usize>().unwrap()])
            .max();
        let n = declared_entities.unwrap_or(0).max(max_id.map_or(0, |m| m + 1));
        entity_ids = (0..n).map(|k| k.to_string()).collect();
        for (k, id) in entity_ids.iter().enumerate() {
            index_of.insert(id.clone(), k);
        }
        // ids such as "007" parse as numbers but are not the canonical string
        for r in &records {
            for id in [&r.i, &r.j] {
                let v: usize = id.parse().unwrap();
                index_of.entry(id.clone()).or_insert(v);
            }
        }
    } else {
        for r in &records {
            for id in [&r.i, &r.j] {
                if !index_of.contains_key(id) {
                    index_of.insert(id.clone(), entity_ids.len());
                    entity_ids.push(id.clone());
                }
            }
        }
        if let Some(n) = declared_entities {
            if n < entity_ids.len() {
                return Err(Error::Data(format!(
                    "{} distinct entities but n_entities = {n}",
                    entity_ids.len()
                )));
            }
            entity_ids.extend((entity_ids.len()..n).map(|k| format!("_unnamed{k}")));
        }
    }
    let n = entity_ids.len();
    if let Some(declared) = declared_entities {
        if n > declared {
            return Err(Error::Data(format!(
                "entity ids reach {} but n_entities = {declared}",
                n - 1
            )));
        }
    }
    if n == 0 || n_slices == 0 {
        return Err(Error::Data(
            "empty edge list needs n_entities and n_slices declared".into(),
        ));
    }

    let mut network = TemporalNetwork::new(n, n_slices, directed, false)?;
    let mut warnings = Vec::new();
    let mut seen: HashMap<(usize, usize, usize), f64> = HashMap::new();
    for r in &records {
        let (i, j) = (index_of[&r.i], index_of[&r.j]);
        if i == j {
            let msg = format!("line {}: self loop on {} dropped", r.line, r.i);
            warn!("{msg}");
            warnings.push(msg);
            continue;
        }
        let key = if directed { (r.t, i, j) } else { (r.t, i.min(j), i.max(j)) };
        let w = match seen.get(&key) {
            Some(&prev) => {
                let msg = format!(
                    "line {}: duplicate record for ({}, {}, {}); keeping the larger weight",
                    r.line, r.t, r.i, r.j
                );
                warn!("{msg}");
                warnings.push(msg);
                prev.max(r.w)
            }
            None => r.w,
        };
        seen.insert(key, w);
        network.set_edge(r.t, i, j, w >= options.binarize_threshold)?;
    }
    Ok(LoadedNetwork {
        network,
        entity_ids,
        warnings,
    })
}

/// Edge-list text for the links of `network` (with a shape header).
/// Undirected networks list each pair once.
pub fn format_temporal_edgelist(network: &TemporalNetwork) -> String {
    let mut out = format!(
        "# {HEADER_TAG} n_entities={} n_slices={} directed={}\n",
        network.n_entities(),
        network.n_slices(),
        network.directed()
    );
    let n = network.n_entities();
    for t in 0..network.n_slices() {
        for i in 0..n {
            for j in 0..n {
                if (network.directed() || i <= j) && network.edge(t, i, j) == 1 {
                    out.push_str(&format!("{t} {i} {j}\n"));
                }
            }
        }
    }
    out
}

pub fn save_temporal_edgelist(network: &TemporalNetwork, path: &Path) -> Result<()> {
    fs::write(path, format_temporal_edgelist(network)).map_err(|e| Error::io(path, e))
}

/// Ground-truth communities per slice and dominant groups per entity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub communities: Vec<Partition>,
    pub groups: Vec<usize>,
}

pub fn save_ground_truth(truth: &GroundTruth, path: &Path) -> Result<()> {
    let s = serde_json::to_string_pretty(truth)?;
    fs::write(path, s).map_err(|e| Error::io(path, e))
}

pub fn load_ground_truth(path: &Path) -> Result<GroundTruth> {
    let s = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(serde_json::from_str(&s)?)
}

/// Dirichlet concentration: one value for every group, or one per group.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum AlphaSpec {
    Symmetric(f64),
    PerGroup(Vec<f64>),
}

/// Flat run configuration (TOML). Every field has a default.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Config {
    pub n_groups: usize,
    pub alpha: AlphaSpec,
    pub zeta: f64,
    pub eta: f64,
    pub mu_b: f64,
    pub sigma_b: f64,
    pub mu_q: f64,
    pub sigma_q: f64,
    pub mu_kl: [f64; 2],
    pub iw_dof: f64,
    pub iw_scale: [[f64; 2]; 2],
    pub epsilon: f64,

    pub n_iters: u64,
    pub burn_in: Option<u64>,
    pub thin: u64,
    pub seed: u64,
    pub mode: Mode,
    pub pg_gaussian_above: Option<u64>,

    pub test_fraction: f64,
    pub seeds: Vec<u64>,
    pub models: Vec<ModelKind>,
    pub neighborhood: Neighborhood,
}

impl Default for Config {
    fn default() -> Self {
        let h = Hyperparams::default();
        Config {
            n_groups: h.n_groups,
            alpha: AlphaSpec::Symmetric(h.alpha[0]),
            zeta: h.zeta,
            eta: h.eta,
            mu_b: h.mu_b,
            sigma_b: h.sigma_b,
            mu_q: h.mu_q,
            sigma_q: h.sigma_q,
            mu_kl: h.mu_kl,
            iw_dof: h.iw_dof,
            iw_scale: h.iw_scale.0,
            epsilon: h.epsilon,
            n_iters: 400,
            burn_in: None,
            thin: DEFAULT_THIN,
            seed: 0,
            mode: Mode::Fc,
            pg_gaussian_above: None,
            test_fraction: 0.2,
            seeds: (0..5).collect(),
            models: vec![ModelKind::Fcmmsb, ModelKind::Vanilla, ModelKind::CommonNeighbors],
            neighborhood: Neighborhood::Union,
        }
    }
}

impl Config {
    pub fn from_toml_str(s: &str) -> Result<Self> {
        let c: Config = toml::from_str(s).map_err(|e| Error::Config(e.to_string()))?;
        c.hyperparams()?;
        c.run_config().validate()?;
        Ok(c)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let s = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Config::from_toml_str(&s)
    }

    /// The effective configuration as TOML.
    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn hyperparams(&self) -> Result<Hyperparams> {
        let alpha = match &self.alpha {
            AlphaSpec::Symmetric(a) => vec![*a; self.n_groups],
            AlphaSpec::PerGroup(v) => v.clone(),
        };
        let h = Hyperparams {
            n_groups: self.n_groups,
            alpha,
            zeta: self.zeta,
            eta: self.eta,
            mu_b: self.mu_b,
            sigma_b: self.sigma_b,
            mu_q: self.mu_q,
            sigma_q: self.sigma_q,
            mu_kl: self.mu_kl,
            iw_dof: self.iw_dof,
            iw_scale: Mat2(self.iw_scale),
            epsilon: self.epsilon,
        };
        h.validate().map_err(|e| Error::Config(e.to_string()))?;
        Ok(h)
    }

    pub fn run_config(&self) -> RunConfig {
        RunConfig {
            n_iters: self.n_iters,
            burn_in: self.burn_in,
            thin: self.thin,
            seed: self.seed,
            mode: self.mode,
            pg_gaussian_above: self.pg_gaussian_above,
            check_counts: false,
        }
    }

    pub fn eval_config(&self) -> EvalConfig {
        EvalConfig {
            seeds: self.seeds.clone(),
            test_fraction: self.test_fraction,
            run: self.run_config(),
            models: self.models.clone(),
            neighborhood: self.neighborhood,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::path::PathBuf;

    fn parse(text: &str, opts: &LoadOptions) -> Result<LoadedNetwork> {
        parse_temporal_edgelist(text, &PathBuf::from("mem"), opts)
    }

    #[test]
    fn empty_file_with_declared_shape() {
        let opts = LoadOptions {
            n_entities: Some(3),
            n_slices: Some(1),
            ..Default::default()
        };
        let l = parse("", &opts).unwrap();
        assert_eq!(l.network.n_entities(), 3);
        assert!(l.network.adjacency().iter().all(|&x| x == 0));
    }

    #[test]
    fn single_record_and_threshold() {
        let l = parse("0 1 2\n", &LoadOptions::default()).unwrap();
        assert_eq!(l.network.adjacency().iter().filter(|&&x| x == 1).count(), 1);
        assert_eq!(l.network.edge(0, 1, 2), 1);
        let l = parse("0 1 2 0.5\n", &LoadOptions::default()).unwrap();
        assert_eq!(l.network.edge(0, 1, 2), 0);
    }

    #[test]
    fn malformed_line_reports_its_number() {
        let err = parse("0 1 2\n0 x\n", &LoadOptions::default()).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }), "{err}");
        let err = parse("# fcmmsb-edgelist n_slices=1\n1 0 1\n", &LoadOptions::default()).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }), "{err}");
    }

    #[test]
    fn duplicates_keep_max_and_names_map_densely() {
        let l = parse("0,a,b,0.2\n0,a,b,3\n0 b c\n", &LoadOptions::default()).unwrap();
        assert_eq!(l.entity_ids, vec!["a", "b", "c"]);
        assert_eq!(l.network.edge(0, 0, 1), 1);
        assert_eq!(l.warnings.len(), 1);
    }

    #[test]
    fn config_defaults_and_unknown_keys() {
        let c = Config::from_toml_str("n_groups = 3\nalpha = [0.1, 0.2, 0.3]\n").unwrap();
        assert_eq!(c.hyperparams().unwrap().alpha, vec![0.1, 0.2, 0.3]);
        assert!(matches!(Config::from_toml_str("nope = 1\n"), Err(Error::Config(_))));
        let echoed = Config::default().to_toml_string().unwrap();
        assert_eq!(Config::from_toml_str(&echoed).unwrap(), Config::default());
    }
}
