//! Command-line front end: subcommands, key=value config files, seed
//! management, fixture I/O and figure/report emission.
//!
//! The central object is the [`RunSpec`]: the fully resolved parameter
//! set of a run, with every default made explicit.  It is serialized
//! into every output record, and two runs with equal specs produce
//! byte-identical output (the only exception is a timestamp field that
//! is excluded from the spec hash).
//!
//! Exit codes: `0` success, `2` assertion/verification failure, `3`
//! event- or proxy-failure that survived the retry budget.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

use crate::boundary_norm::beta_estimate;
use crate::cheeger::{bn_box, bn_count, cheeger_anneal, cheeger_exact, AnnealSchedule};
use crate::fpp::{
    box_crossing_time, cylinder_box, disjoint_crossings, first_passage, mu_estimate,
    separating_circuits,
};
use crate::lattice::{Axial, AxialRect, Vec2};
use crate::nearcrit::{correlation_length, roundness_report, Verdict};
use crate::percolation::{derive_seed, label_clusters, Color, Configuration, Rng};
use crate::rightmost::{
    interface_of, outer_interface, path_of_interface, random_connected_subgraph,
    random_rightmost, star_concat, Orientation, vertex_boundaries,
};
use crate::svg;
use crate::wulff::{hausdorff, phi_from_norm, wulff_construct, ConvexBody, DirectionalNorm, Shape};
use crate::{Error, Result};

pub const EXIT_OK: i32 = 0;
/// An assertion or verification failed (trends, verdicts, fixtures).
pub const EXIT_ASSERT: i32 = 2;
/// An event or proxy failed after the retry budget.
pub const EXIT_EVENT: i32 = 3;

// ---------------------------------------------------------------------------
// RunSpec
// ---------------------------------------------------------------------------

/// Output format of a run.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum, Default,
)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    #[default]
    Jsonl,
    Svg,
}

impl fmt::Display for Format {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Format::Csv => "csv",
            Format::Jsonl => "jsonl",
            Format::Svg => "svg",
        })
    }
}

impl std::str::FromStr for Format {
    type Err = Error;
    fn from_str(s: &str) -> Result<Format> {
        match s {
            "csv" => Ok(Format::Csv),
            "jsonl" => Ok(Format::Jsonl),
            "svg" => Ok(Format::Svg),
            other => Err(Error::InvalidArgument(format!(
                "unknown format {other:?} (expected csv, jsonl or svg)"
            ))),
        }
    }
}

/// The fully resolved specification of a run.
///
/// `params` holds every subcommand parameter as its canonical string,
/// defaults included, so the spec alone reproduces the run.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunSpec {
    pub subcommand: String,
    pub params: BTreeMap<String, String>,
    pub seed: u64,
    pub format: Format,
}

/// 64-bit FNV-1a.
fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf29ce484222325;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x100000001b3);
    }
    h
}

impl RunSpec {
    /// Hash of the canonical serialization (`params` is a `BTreeMap`,
    /// so the serialization is key-sorted and stable).
    pub fn hash(&self) -> u64 {
        fnv1a(
            serde_json::to_string(self)
                .expect("RunSpec serializes")
                .as_bytes(),
        )
    }

    pub fn hash_hex(&self) -> String {
        format!("{:016x}", self.hash())
    }

    fn get(&self, key: &str) -> Result<&str> {
        self.params
            .get(key)
            .map(|s| s.as_str())
            .ok_or_else(|| Error::InvalidArgument(format!("missing parameter {key}")))
    }

    fn get_f64(&self, key: &str) -> Result<f64> {
        self.get(key)?
            .parse()
            .map_err(|_| Error::InvalidArgument(format!("{key} is not a number")))
    }

    fn get_u32(&self, key: &str) -> Result<u32> {
        self.get(key)?
            .parse()
            .map_err(|_| Error::InvalidArgument(format!("{key} is not a non-negative integer")))
    }

    fn get_u64(&self, key: &str) -> Result<u64> {
        self.get(key)?
            .parse()
            .map_err(|_| Error::InvalidArgument(format!("{key} is not a non-negative integer")))
    }

    fn get_f64_list(&self, key: &str) -> Result<Vec<f64>> {
        self.get(key)?
            .split(',')
            .map(|s| {
                s.trim()
                    .parse()
                    .map_err(|_| Error::InvalidArgument(format!("{key}: bad entry {s:?}")))
            })
            .collect()
    }
}

// ---------------------------------------------------------------------------
// Parameter tables
// ---------------------------------------------------------------------------

const SUBCOMMANDS: &[&str] = &[
    "sample",
    "mu",
    "beta",
    "norm-compare",
    "wulff",
    "cheeger",
    "corrlen",
    "roundness",
    "verify",
    "fig",
];

/// Keys understood everywhere (config global section or any section).
const COMMON_KEYS: &[&str] = &["seed", "format", "out"];

fn allowed_keys(sub: &str) -> &'static [&'static str] {
    match sub {
        "sample" => &["p", "n", "dump"],
        "mu" | "beta" => &["p", "n", "reps", "theta"],
        "norm-compare" => &["p", "n", "reps"],
        "wulff" => &["norm", "k"],
        "cheeger" => &["p", "n", "budget", "restarts"],
        "corrlen" => &["p", "eps0", "reps"],
        "roundness" => &["p", "k", "n", "reps"],
        "verify" => &["suite", "cases"],
        "fig" => &["file"],
        _ => &[],
    }
}

fn defaults(sub: &str) -> &'static [(&'static str, &'static str)] {
    match sub {
        "sample" => &[("p", "0.6"), ("n", "16")],
        "mu" | "beta" => &[("p", "0.7"), ("n", "128"), ("reps", "20"), ("theta", "0")],
        "norm-compare" => &[("p", "0.7"), ("n", "128"), ("reps", "20")],
        "wulff" => &[("norm", "euclid"), ("k", "720")],
        "cheeger" => &[("p", "0.9"), ("n", "6"), ("budget", "0"), ("restarts", "8")],
        "corrlen" => &[("p", "0.6"), ("eps0", "0.25"), ("reps", "200")],
        "roundness" => &[("p", "0.6,0.55"), ("k", "12"), ("n", "128"), ("reps", "8")],
        "verify" => &[("suite", "all"), ("cases", "1000")],
        "fig" => &[],
        _ => &[],
    }
}

// ---------------------------------------------------------------------------
// Config files
// ---------------------------------------------------------------------------

/// A parsed config file: a global section plus `[subcommand]` sections.
#[derive(Debug, Clone, Default)]
pub struct ConfigFile {
    pub global: BTreeMap<String, String>,
    pub sections: BTreeMap<String, BTreeMap<String, String>>,
}

/// Parse a flat key=value config file with optional `[subcommand]`
/// sections.  Unknown sections and unknown keys are rejected; there are
/// no silent defaults for misspellings.
pub fn parse_config(text: &str) -> Result<ConfigFile> {
    let mut cfg = ConfigFile::default();
    let mut section: Option<String> = None;
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        let lineno = i + 1;
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if let Some(name) = line.strip_prefix('[').and_then(|s| s.strip_suffix(']')) {
            let name = name.trim();
            if !SUBCOMMANDS.contains(&name) {
                return Err(Error::Parse {
                    line: lineno,
                    msg: format!("unknown section [{name}]"),
                });
            }
            section = Some(name.to_string());
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(Error::Parse {
                line: lineno,
                msg: format!("expected key=value, got {line:?}"),
            });
        };
        let (key, value) = (key.trim().to_string(), value.trim().to_string());
        let valid = |sub: &str| allowed_keys(sub).contains(&key.as_str());
        match &section {
            Some(sub) => {
                if !valid(sub) && !COMMON_KEYS.contains(&key.as_str()) {
                    return Err(Error::Parse {
                        line: lineno,
                        msg: format!("unknown key {key:?} in section [{sub}]"),
                    });
                }
                cfg.sections.entry(sub.clone()).or_default().insert(key, value);
            }
            None => {
                if !COMMON_KEYS.contains(&key.as_str())
                    && !SUBCOMMANDS.iter().any(|s| valid(s))
                {
                    return Err(Error::Parse {
                        line: lineno,
                        msg: format!("unknown key {key:?}"),
                    });
                }
                cfg.global.insert(key, value);
            }
        }
    }
    Ok(cfg)
}

impl ConfigFile {
    /// The value of `key` for `sub`: section entries override globals.
    fn lookup(&self, sub: &str, key: &str) -> Option<&str> {
        self.sections
            .get(sub)
            .and_then(|s| s.get(key))
            .or_else(|| self.global.get(key))
            .map(|s| s.as_str())
    }
}

// ---------------------------------------------------------------------------
// clap surface
// ---------------------------------------------------------------------------

#[derive(Debug, Parser)]
#[command(
    name = "hexiso",
    version,
    about = "Percolation geometry on the triangular lattice: norms, Wulff shapes, Cheeger constants"
)]
pub struct Cli {
    /// Flat key=value config file with optional [subcommand] sections;
    /// command-line flags override file values.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Master seed; every replica derives its own stream from it.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output file (stdout when omitted).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Output format.
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    #[command(subcommand)]
    pub cmd: Cmd,
}

#[derive(Debug, Subcommand)]
pub enum Cmd {
    /// Sample a configuration window and report summary statistics.
    Sample {
        /// Open probability (decimal string, kept exactly).
        #[arg(long)]
        p: Option<String>,
        /// Window half-width: the window is the (2n+1)x(2n+1) axial box.
        #[arg(long)]
        n: Option<u32>,
        /// Also write the configuration as a TRIPERC1 dump to this path.
        #[arg(long)]
        dump: Option<PathBuf>,
    },
    /// Estimate the time-constant norm mu_p in one direction.
    Mu {
        #[arg(long)]
        p: Option<String>,
        #[arg(long)]
        n: Option<u32>,
        #[arg(long)]
        reps: Option<u32>,
        /// Direction angle in radians.
        #[arg(long)]
        theta: Option<f64>,
    },
    /// Estimate the boundary norm beta_p in one direction.
    Beta {
        #[arg(long)]
        p: Option<String>,
        #[arg(long)]
        n: Option<u32>,
        #[arg(long)]
        reps: Option<u32>,
        #[arg(long)]
        theta: Option<f64>,
    },
    /// Paired mu-hat / beta-hat estimates with an overlap verdict.
    NormCompare {
        #[arg(long)]
        p: Option<String>,
        #[arg(long)]
        n: Option<u32>,
        #[arg(long)]
        reps: Option<u32>,
    },
    /// Wulff construction for a named norm; reports disk distance and
    /// the isoperimetric value phi.
    Wulff {
        /// One of: euclid, hexagonal, constant.
        #[arg(long)]
        norm: Option<String>,
        /// Number of direction samples.
        #[arg(long)]
        k: Option<usize>,
    },
    /// Isoperimetric minimum of the sampled cluster in B_n.
    Cheeger {
        #[arg(long)]
        p: Option<String>,
        #[arg(long)]
        n: Option<u32>,
        /// Annealing move budget (0 = automatic).
        #[arg(long)]
        budget: Option<u64>,
        #[arg(long)]
        restarts: Option<u32>,
    },
    /// Correlation length L_eps(p).
    Corrlen {
        #[arg(long)]
        p: Option<String>,
        #[arg(long)]
        eps0: Option<f64>,
        #[arg(long)]
        reps: Option<u32>,
    },
    /// Near-critical roundness report over a p grid.
    Roundness {
        /// Comma-separated p grid, largest first.
        #[arg(long)]
        p: Option<String>,
        /// Directions per norm table.
        #[arg(long)]
        k: Option<usize>,
        /// Norm scale n per grid cell.
        #[arg(long)]
        n: Option<u32>,
        #[arg(long)]
        reps: Option<u32>,
    },
    /// Run a module invariant suite (the CI entry point).
    Verify {
        /// One of: rightmost, duality, concat, fpp, dump, wulff,
        /// cheeger, all.
        #[arg(long)]
        suite: Option<String>,
        #[arg(long)]
        cases: Option<u64>,
    },
    /// Reproduce the two-walls crossing fixture (T(0,9) = 2).
    Fig {
        /// TRIPERC1 dump to load instead of the built-in fixture.
        #[arg(long)]
        file: Option<PathBuf>,
    },
}

impl Cmd {
    /// Subcommand name and explicitly given key/value pairs.
    fn parts(&self) -> (&'static str, Vec<(&'static str, Option<String>)>) {
        fn s<T: ToString>(v: &Option<T>) -> Option<String> {
            v.as_ref().map(|x| x.to_string())
        }
        fn path(v: &Option<PathBuf>) -> Option<String> {
            v.as_ref().map(|p| p.display().to_string())
        }
        match self {
            Cmd::Sample { p, n, dump } => (
                "sample",
                vec![("p", p.clone()), ("n", s(n)), ("dump", path(dump))],
            ),
            Cmd::Mu { p, n, reps, theta } => (
                "mu",
                vec![
                    ("p", p.clone()),
                    ("n", s(n)),
                    ("reps", s(reps)),
                    ("theta", s(theta)),
                ],
            ),
            Cmd::Beta { p, n, reps, theta } => (
                "beta",
                vec![
                    ("p", p.clone()),
                    ("n", s(n)),
                    ("reps", s(reps)),
                    ("theta", s(theta)),
                ],
            ),
            Cmd::NormCompare { p, n, reps } => (
                "norm-compare",
                vec![("p", p.clone()), ("n", s(n)), ("reps", s(reps))],
            ),
            Cmd::Wulff { norm, k } => ("wulff", vec![("norm", norm.clone()), ("k", s(k))]),
            Cmd::Cheeger {
                p,
                n,
                budget,
                restarts,
            } => (
                "cheeger",
                vec![
                    ("p", p.clone()),
                    ("n", s(n)),
                    ("budget", s(budget)),
                    ("restarts", s(restarts)),
                ],
            ),
            Cmd::Corrlen { p, eps0, reps } => (
                "corrlen",
                vec![("p", p.clone()), ("eps0", s(eps0)), ("reps", s(reps))],
            ),
            Cmd::Roundness { p, k, n, reps } => (
                "roundness",
                vec![
                    ("p", p.clone()),
                    ("k", s(k)),
                    ("n", s(n)),
                    ("reps", s(reps)),
                ],
            ),
            Cmd::Verify { suite, cases } => (
                "verify",
                vec![("suite", suite.clone()), ("cases", s(cases))],
            ),
            Cmd::Fig { file } => ("fig", vec![("file", path(file))]),
        }
    }
}

/// Resolve a parsed command line (plus optional config file) into a
/// fully explicit [`RunSpec`] and the output path.
///
/// Precedence per key: command line, then the config `[subcommand]`
/// section, then config globals, then the built-in default.
pub fn resolve(cli: &Cli) -> Result<(RunSpec, Option<PathBuf>)> {
    let cfg = match &cli.config {
        Some(path) => parse_config(&fs::read_to_string(path)?)?,
        None => ConfigFile::default(),
    };
    let (sub, given) = cli.cmd.parts();
    let mut params = BTreeMap::new();
    for (key, value) in given {
        let resolved = value
            .or_else(|| cfg.lookup(sub, key).map(str::to_string))
            .or_else(|| {
                defaults(sub)
                    .iter()
                    .find(|(k, _)| *k == key)
                    .map(|(_, v)| v.to_string())
            });
        if let Some(v) = resolved {
            params.insert(key.to_string(), v);
        }
    }
    let seed = match (cli.seed, cfg.lookup(sub, "seed")) {
        (Some(s), _) => s,
        (None, Some(s)) => s
            .parse()
            .map_err(|_| Error::InvalidArgument("seed is not a non-negative integer".into()))?,
        (None, None) => 0,
    };
    let format = match (cli.format, cfg.lookup(sub, "format")) {
        (Some(f), _) => f,
        (None, Some(f)) => f.parse()?,
        (None, None) => Format::default(),
    };
    let out = cli
        .out
        .clone()
        .or_else(|| cfg.lookup(sub, "out").map(PathBuf::from));
    Ok((
        RunSpec {
            subcommand: sub.to_string(),
            params,
            seed,
            format,
        },
        out,
    ))
}

// ---------------------------------------------------------------------------
// Dump I/O
// ---------------------------------------------------------------------------

/// Load a TRIPERC1 configuration dump from a file.
pub fn load_config_dump(path: &Path) -> Result<Configuration> {
    Configuration::load_dump(BufReader::new(fs::File::open(path)?))
}

/// Save a configuration as a TRIPERC1 dump.
pub fn save_config_dump(config: &Configuration, path: &Path) -> Result<()> {
    let mut w = BufWriter::new(fs::File::create(path)?);
    config.save_dump(&mut w)?;
    w.flush()?;
    Ok(())
}

// ---------------------------------------------------------------------------
// Running
// ---------------------------------------------------------------------------

/// The products of a run, before any file is touched.
#[derive(Debug, Clone)]
pub struct RunOutput {
    /// Data records, in emission order (`record` field names the type).
    pub records: Vec<Value>,
    /// The figure, when the subcommand produces one.
    pub svg: Option<String>,
    /// Side artifacts to write verbatim (path, bytes).
    pub artifacts: Vec<(PathBuf, Vec<u8>)>,
    /// Process exit code.
    pub exit: i32,
}

impl RunOutput {
    fn new() -> RunOutput {
        RunOutput {
            records: Vec::new(),
            svg: None,
            artifacts: Vec::new(),
            exit: EXIT_OK,
        }
    }
}

fn obj(v: Value) -> Map<String, Value> {
    match v {
        Value::Object(m) => m,
        _ => unreachable!("records are objects"),
    }
}

/// Serialize `x` and tag it as a `record` of the given type.
fn record_of<T: Serialize>(kind: &str, x: &T) -> Value {
    let mut m = obj(serde_json::to_value(x).expect("record serializes"));
    m.insert("record".to_string(), json!(kind));
    Value::Object(m)
}

fn provenance_comment(spec: &RunSpec) -> svg::Element {
    svg::Element::Comment(format!(
        "hexiso {} hash={} seed={}",
        spec.subcommand,
        spec.hash_hex(),
        spec.seed
    ))
}

fn parse_p(spec: &RunSpec) -> Result<(f64, String)> {
    let s = spec.get("p")?.to_string();
    let p: f64 = s
        .parse()
        .map_err(|_| Error::InvalidArgument(format!("p = {s:?} is not a number")))?;
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::OutOfRange(format!("p = {p}")));
    }
    Ok((p, s))
}

/// Execute a spec.  Pure: the only effects are in the returned
/// [`RunOutput`], so equal specs yield identical bytes.
pub fn run(spec: &RunSpec) -> Result<RunOutput> {
    let mut out = RunOutput::new();
    let needs_figure = spec.format == Format::Svg;
    match spec.subcommand.as_str() {
        "sample" => run_sample(spec, &mut out)?,
        "mu" => run_mu(spec, &mut out)?,
        "beta" => run_beta(spec, &mut out)?,
        "norm-compare" => run_norm_compare(spec, &mut out)?,
        "wulff" => run_wulff(spec, &mut out)?,
        "cheeger" => run_cheeger(spec, &mut out)?,
        "corrlen" => run_corrlen(spec, &mut out)?,
        "roundness" => run_roundness(spec, &mut out)?,
        "verify" => run_verify(spec, &mut out)?,
        "fig" => run_fig(spec, &mut out)?,
        other => {
            return Err(Error::InvalidArgument(format!(
                "unknown subcommand {other:?}"
            )))
        }
    }
    if needs_figure && out.svg.is_none() {
        return Err(Error::InvalidArgument(format!(
            "--format svg is not available for {}",
            spec.subcommand
        )));
    }
    Ok(out)
}

fn run_sample(spec: &RunSpec, out: &mut RunOutput) -> Result<()> {
    let (p, p_str) = parse_p(spec)?;
    let n = spec.get_u32("n")? as i32;
    let side = (2 * n + 1).max(1) as usize;
    let window = AxialRect::new(-n, -n, side, side);
    let config = Configuration::sample_decimal(window, p, &p_str, spec.seed)?;
    let labels = label_clusters(&config, Color::Open);
    let spanning = crate::percolation::infinite_cluster_proxy(&labels).is_ok();
    out.records.push(json!({
        "record": "sample",
        "p": p,
        "n": n,
        "vertices": window.len(),
        "open_count": config.open_count(),
        "open_fraction": config.open_count() as f64 / window.len() as f64,
        "open_clusters": labels.n_clusters(),
        "spanning_cluster": spanning,
    }));
    if let Some(path) = spec.params.get("dump") {
        let mut bytes = Vec::new();
        config.save_dump(&mut bytes)?;
        out.artifacts.push((PathBuf::from(path), bytes));
    }
    let mut els = vec![provenance_comment(spec)];
    els.extend(svg::config_elements(&config));
    out.svg = Some(svg::document(&els, 1.0, 640));
    Ok(())
}

fn run_mu(spec: &RunSpec, out: &mut RunOutput) -> Result<()> {
    let (p, _) = parse_p(spec)?;
    let (n, reps) = (spec.get_u32("n")?, spec.get_u32("reps")?);
    let theta = spec.get_f64("theta")?;
    let s = mu_estimate(p, Vec2::unit(theta), n, reps, spec.seed)?;
    let mut m = obj(record_of("mu", &s));
    m.insert("p".to_string(), json!(p));
    out.records.push(Value::Object(m));
    Ok(())
}

fn run_beta(spec: &RunSpec, out: &mut RunOutput) -> Result<()> {
    let (p, _) = parse_p(spec)?;
    let (n, reps) = (spec.get_u32("n")?, spec.get_u32("reps")?);
    let theta = spec.get_f64("theta")?;
    let s = beta_estimate(p, Vec2::unit(theta), n, reps, spec.seed)?;
    let mut m = obj(record_of("beta", &s));
    m.insert("p".to_string(), json!(p));
    out.records.push(Value::Object(m));
    Ok(())
}

fn run_norm_compare(spec: &RunSpec, out: &mut RunOutput) -> Result<()> {
    let (p, _) = parse_p(spec)?;
    let (n, reps) = (spec.get_u32("n")?, spec.get_u32("reps")?);
    let z = Vec2::new(1.0, 0.0);
    let mu = mu_estimate(p, z, n, reps, spec.seed)?;
    let beta = beta_estimate(p, z, n, reps, spec.seed)?;
    let diff = (mu.mean - beta.sample.mean).abs();
    let tol = 3.0 * (mu.stderr.powi(2) + beta.sample.stderr.powi(2)).sqrt();
    let pass = diff <= tol;
    out.records.push(json!({
        "record": "norm-compare",
        "p": p,
        "n": n,
        "reps": reps,
        "mu_mean": mu.mean,
        "mu_stderr": mu.stderr,
        "beta_mean": beta.sample.mean,
        "beta_stderr": beta.sample.stderr,
        "beta_lower": beta.lower_mean,
        "beta_upper": beta.upper_mean,
        "abs_diff": diff,
        "tolerance": tol,
        "verdict": if pass { "pass" } else { "fail" },
    }));
    if !pass {
        out.exit = EXIT_ASSERT;
    }
    Ok(())
}

fn named_norm(name: &str, k: usize) -> Result<DirectionalNorm> {
    match name {
        "euclid" => DirectionalNorm::euclidean(k),
        "hexagonal" => DirectionalNorm::hexagonal(k),
        "constant" => DirectionalNorm::constant(1.0, k),
        other => Err(Error::InvalidArgument(format!(
            "unknown norm {other:?} (expected euclid, hexagonal or constant)"
        ))),
    }
}

fn run_wulff(spec: &RunSpec, out: &mut RunOutput) -> Result<()> {
    let name = spec.get("norm")?.to_string();
    let k: usize = spec
        .get("k")?
        .parse()
        .map_err(|_| Error::InvalidArgument("k is not a non-negative integer".into()))?;
    let norm = named_norm(&name, k)?;
    let (_, w_hat) = wulff_construct(&norm)?;
    let r_disk = 1.0 / std::f64::consts::PI.sqrt();
    let dh = hausdorff(
        &Shape::Body(w_hat.clone()),
        &Shape::Disk {
            center: Vec2::ZERO,
            r: r_disk,
        },
    );
    let phi = phi_from_norm(&norm)?;
    let two_sqrt_pi = 2.0 * std::f64::consts::PI.sqrt();
    out.records.push(json!({
        "record": "wulff",
        "norm": name,
        "k": k,
        "area": w_hat.area(),
        "dh_disk": dh,
        "phi": phi,
        "phi_over_2sqrtpi": phi / two_sqrt_pi,
    }));
    let mut els = vec![provenance_comment(spec)];
    els.extend(svg::wulff_overlay(&w_hat, r_disk));
    out.svg = Some(svg::document(&els, 0.05, 560));
    Ok(())
}

fn run_cheeger(spec: &RunSpec, out: &mut RunOutput) -> Result<()> {
    let (p, p_str) = parse_p(spec)?;
    let n = spec.get_u32("n")?;
    let schedule = AnnealSchedule {
        restarts: spec.get_u32("restarts")?,
        moves: spec.get_u64("budget")?,
        ..AnnealSchedule::default()
    };
    let window = bn_box(n).bounding_rect(2.0);
    let config = Configuration::sample_decimal(window, p, &p_str, spec.seed)?;
    // Small clusters are enumerated exactly; otherwise anneal.
    let result = match cheeger_exact(&config, n) {
        Ok(r) => r,
        Err(Error::ExactLimit(_)) => cheeger_anneal(&config, n, &schedule, spec.seed)?,
        Err(e) => return Err(e),
    };
    out.records.push(json!({
        "record": "cheeger",
        "p": p,
        "n": n,
        "boundary": result.boundary,
        "size": result.size,
        "value": result.value(),
        "value_times_n": result.value() * n as f64,
        "bn_vertices": bn_count(n),
        "method": result.method,
        "examined": result.stats.examined,
        "restarts": result.stats.restarts,
        "minimizer_count": result.minimizers.len(),
    }));
    let mut els = vec![provenance_comment(spec)];
    let bx = bn_box(n);
    let corners: Vec<Vec2> = [
        Vec2::new(0.0, -(n as f64)),
        Vec2::new(2.0 * n as f64, -(n as f64)),
        Vec2::new(2.0 * n as f64, n as f64),
        Vec2::new(0.0, n as f64),
    ]
    .iter()
    .map(|&q| bx.from_local(q))
    .collect();
    els.push(svg::Element::Polygon {
        points: corners,
        style: svg::Style::stroke("#9099a6", 0.05),
    });
    if let Some(h) = result.minimizers.first() {
        els.extend(svg::vertex_cloud(h, "#b4533a"));
    }
    out.svg = Some(svg::document(&els, 1.0, 560));
    Ok(())
}

fn run_corrlen(spec: &RunSpec, out: &mut RunOutput) -> Result<()> {
    let (p, _) = parse_p(spec)?;
    let eps0 = spec.get_f64("eps0")?;
    let reps = spec.get_u32("reps")?;
    let cl = correlation_length(p, eps0, reps, spec.seed)?;
    out.records.push(record_of("corrlen", &cl));
    Ok(())
}

fn run_roundness(spec: &RunSpec, out: &mut RunOutput) -> Result<()> {
    let p_grid = spec.get_f64_list("p")?;
    let k: usize = spec
        .get("k")?
        .parse()
        .map_err(|_| Error::InvalidArgument("k is not a non-negative integer".into()))?;
    let (n, reps) = (spec.get_u32("n")?, spec.get_u32("reps")?);
    let (report, tables) = roundness_report(&p_grid, k, n, reps, spec.seed)?;
    for row in &report.rows {
        out.records.push(record_of("roundness-row", row));
    }
    out.records.push(json!({
        "record": "roundness-verdicts",
        "nu_hat": report.nu_hat,
        "dh": report.dh_verdicts,
        "ratio": report.ratio_verdicts,
    }));
    let failed = report
        .dh_verdicts
        .iter()
        .chain(report.ratio_verdicts.iter())
        .any(|v| *v == Verdict::Fail);
    if failed {
        out.exit = EXIT_ASSERT;
    }
    let r_disk = 1.0 / std::f64::consts::PI.sqrt();
    let palette = ["#355e8d", "#6b8fb3", "#9db4cc", "#c5d2e0"];
    let mut els = vec![
        provenance_comment(spec),
        svg::Element::Circle {
            center: Vec2::ZERO,
            r: r_disk,
            style: svg::Style::stroke("#b4533a", 0.01),
        },
    ];
    for (i, table) in tables.iter().enumerate() {
        let (_, w_hat) = wulff_construct(&table.norm)?;
        els.push(svg::body_outline(
            &w_hat,
            palette[i % palette.len()],
            0.01,
        ));
    }
    out.svg = Some(svg::document(&els, 0.05, 560));
    Ok(())
}

fn run_fig(spec: &RunSpec, out: &mut RunOutput) -> Result<()> {
    let config = match spec.params.get("file") {
        Some(path) => load_config_dump(Path::new(path))?,
        None => Configuration::load_dump(
            include_str!("../fixtures/crossing_walls.dump").as_bytes(),
        )?,
    };
    let (x, y) = (Axial::new(0, 0), Axial::new(9, 0));
    let r = first_passage(&config, x, y)?;
    let pass = r.time == 2;
    out.records.push(json!({
        "record": "fig",
        "time": r.time,
        "expected": 2,
        "geodesic_len": r.geodesic.len(),
        "verdict": if pass { "pass" } else { "fail" },
    }));
    if !pass {
        out.exit = EXIT_ASSERT;
    }
    let mut els = vec![provenance_comment(spec)];
    els.extend(svg::config_elements(&config));
    els.extend(svg::path_elements(&r.geodesic, "#b4533a"));
    out.svg = Some(svg::document(&els, 1.0, 640));
    Ok(())
}

// ---------------------------------------------------------------------------
// Verify suites
// ---------------------------------------------------------------------------

/// Result of one invariant suite.
#[derive(Debug, Clone, Serialize)]
pub struct SuiteResult {
    pub suite: String,
    pub cases: u64,
    pub violations: u64,
}

/// Right-most path length/boundary inequalities:
/// (|gamma| - 1)/6 <= |right boundary| <= 5 |gamma|.
pub fn suite_rightmost(cases: u64, seed: u64) -> SuiteResult {
    let mut violations = 0;
    for i in 0..cases {
        let mut rng = Rng::new(derive_seed(seed, i));
        let len = 1 + rng.below(40);
        let p = random_rightmost(&mut rng, Axial::ORIGIN, len);
        let g = p.len_edges();
        let b = p.boundary_set().len();
        if b * 6 + 1 < g || b > 5 * g.max(1) {
            violations += 1;
        }
    }
    SuiteResult {
        suite: "rightmost".into(),
        cases,
        violations,
    }
}

/// Path/interface round trips plus subgraph boundary-circuit
/// identities (one subgraph check per five path checks).
pub fn suite_duality(cases: u64, seed: u64) -> SuiteResult {
    let mut violations = 0;
    let mut total = 0;
    for i in 0..cases {
        total += 1;
        let mut rng = Rng::new(derive_seed(seed ^ 0xd0a1, i));
        let len = 2 + rng.below(25);
        let p = random_rightmost(&mut rng, Axial::ORIGIN, len);
        let ok = (|| -> Result<bool> {
            let interface = interface_of(&p)?;
            let back = path_of_interface(&interface)?;
            Ok(back.vertices() == p.vertices()
                && interface.boundary_heads() == *p.boundary_set())
        })();
        if !matches!(ok, Ok(true)) {
            violations += 1;
        }
    }
    for i in 0..cases / 5 {
        total += 1;
        let mut rng = Rng::new(derive_seed(seed ^ 0xd0a2, i));
        let size = 3 + rng.below(38);
        let g = random_connected_subgraph(&mut rng, Axial::ORIGIN, size);
        let ok = (|| -> Result<bool> {
            let (mut lo, mut hi) = (Axial::new(i32::MAX, i32::MAX), Axial::new(i32::MIN, i32::MIN));
            for v in g.vertices() {
                lo = Axial::new(lo.x.min(v.x), lo.y.min(v.y));
                hi = Axial::new(hi.x.max(v.x), hi.y.max(v.y));
            }
            let window = AxialRect::new(
                lo.x - 3,
                lo.y - 3,
                (hi.x - lo.x + 7) as usize,
                (hi.y - lo.y + 7) as usize,
            );
            let vb = vertex_boundaries(&g, window)?;
            let interface = outer_interface(&g, Orientation::Counterclockwise)?;
            let circuit = path_of_interface(&interface)?;
            Ok(*circuit.boundary_set() == vb.outer
                && circuit.vertex_set() == vb.inner)
        })();
        if !matches!(ok, Ok(true)) {
            violations += 1;
        }
    }
    SuiteResult {
        suite: "duality".into(),
        cases: total,
        violations,
    }
}

/// Star-concatenation: valid result, extra boundary at most 8.
pub fn suite_concat(cases: u64, seed: u64) -> SuiteResult {
    let mut violations = 0;
    for i in 0..cases {
        let mut rng = Rng::new(derive_seed(seed ^ 0xc0c0, i));
        let len1 = 2 + rng.below(20);
        let len2 = 2 + rng.below(20);
        let g1 = random_rightmost(&mut rng, Axial::ORIGIN, len1);
        let g2 = random_rightmost(&mut rng, g1.end(), len2);
        match star_concat(&g1, &g2) {
            Ok(joined) => {
                let extra = joined
                    .boundary_set()
                    .iter()
                    .filter(|v| !g1.boundary_set().contains(v) && !g2.boundary_set().contains(v))
                    .count();
                if extra > 8 {
                    violations += 1;
                }
            }
            Err(_) => violations += 1,
        }
    }
    SuiteResult {
        suite: "concat".into(),
        cases,
        violations,
    }
}

/// Passage-time invariants: the tau/T sandwich on cylinder boxes and
/// the separating-circuit bracket T - 2 <= N <= T (with equality under
/// forced-closed endpoints).
pub fn suite_fpp(cases: u64, seed: u64) -> SuiteResult {
    let cases = cases.min(500);
    let mut violations = 0;
    let sandwich_w = AxialRect::new(-14, -14, 33, 33);
    let bracket_w = AxialRect::new(0, 0, 11, 11);
    let (u, v) = (Axial::new(2, 5), Axial::new(8, 5));
    for i in 0..cases {
        let mut rng = Rng::new(derive_seed(seed ^ 0xf1f1, i));
        let p = 0.35 + 0.4 * rng.f64();
        let ok = (|| -> Result<bool> {
            let c = Configuration::sample(sandwich_w, p, rng.next_u64())?;
            let x = Vec2::new(6.0, 0.0);
            let tau_h = disjoint_crossings(&c, &cylinder_box(x, 3.0))?;
            let t_h = box_crossing_time(&c, x, 3.0)?;
            let tau_hm1 = disjoint_crossings(&c, &cylinder_box(x, 2.0))?;
            if !(tau_h <= t_h && t_h <= tau_hm1 + 2) {
                return Ok(false);
            }
            let c2 = Configuration::sample(bracket_w, p, rng.next_u64())?;
            let t = first_passage(&c2, u, v)?.time;
            let n = separating_circuits(&c2, u, v)?;
            if !(n <= t && t <= n + 2) {
                return Ok(false);
            }
            let forced = c2.with_states(&[(u, false), (v, false)])?;
            let n_forced = separating_circuits(&forced, u, v)?;
            let t_forced = first_passage(&forced, u, v)?.time;
            Ok(n_forced == t_forced)
        })();
        if !matches!(ok, Ok(true)) {
            violations += 1;
        }
    }
    SuiteResult {
        suite: "fpp".into(),
        cases,
        violations,
    }
}

/// TRIPERC1 round trips: save, load, save again; bytes and bits equal.
pub fn suite_dump(cases: u64, seed: u64) -> SuiteResult {
    let cases = cases.min(200);
    let mut violations = 0;
    let p_strings = ["0.5", "0.37", "0.625", "0.99"];
    for i in 0..cases {
        let mut rng = Rng::new(derive_seed(seed ^ 0xdade, i));
        let window = AxialRect::new(
            rng.below(41) as i32 - 20,
            rng.below(41) as i32 - 20,
            1 + rng.below(12),
            1 + rng.below(12),
        );
        let p_str = p_strings[rng.below(p_strings.len())];
        let ok = (|| -> Result<bool> {
            let c = Configuration::sample_decimal(
                window,
                p_str.parse().unwrap(),
                p_str,
                rng.next_u64(),
            )?;
            let mut bytes = Vec::new();
            c.save_dump(&mut bytes)?;
            let back = Configuration::load_dump(bytes.as_slice())?;
            let mut bytes2 = Vec::new();
            back.save_dump(&mut bytes2)?;
            Ok(bytes == bytes2
                && back.window == c.window
                && window.iter().all(|v| back.is_open(v).unwrap() == c.is_open(v).unwrap()))
        })();
        if !matches!(ok, Ok(true)) {
            violations += 1;
        }
    }
    SuiteResult {
        suite: "dump".into(),
        cases,
        violations,
    }
}

/// Wulff identities: the constant norm gives the disk and phi =
/// 2 sqrt(pi); the hexagonal norm gives the analytic hexagon.
pub fn suite_wulff() -> SuiteResult {
    let mut violations = 0;
    let mut cases = 0;
    let r_disk = 1.0 / std::f64::consts::PI.sqrt();
    let two_sqrt_pi = 2.0 * std::f64::consts::PI.sqrt();
    let check = |cond: bool, cases: &mut u64, violations: &mut u64| {
        *cases += 1;
        if !cond {
            *violations += 1;
        }
    };
    let run = |violations: &mut u64, cases: &mut u64| -> Result<()> {
        let norm = DirectionalNorm::constant(1.0, 720)?;
        let (_, w_hat) = wulff_construct(&norm)?;
        let dh = hausdorff(
            &Shape::Body(w_hat),
            &Shape::Disk {
                center: Vec2::ZERO,
                r: r_disk,
            },
        );
        check(dh <= 1e-4, cases, violations);
        check(
            (phi_from_norm(&norm)? - two_sqrt_pi).abs() <= 1e-4,
            cases,
            violations,
        );
        let hex = DirectionalNorm::hexagonal(720)?;
        let (_, w_hex) = wulff_construct(&hex)?;
        // Analytic target: the regular hexagon with inradius 1 toward
        // the lattice directions, normalized to unit area.
        let circ = 2.0 / 3f64.sqrt();
        let pts: Vec<Vec2> = (0..6)
            .map(|j| {
                let th = std::f64::consts::FRAC_PI_6 + std::f64::consts::FRAC_PI_3 * j as f64;
                Vec2::new(circ * th.cos(), circ * th.sin())
            })
            .collect();
        let target = ConvexBody::from_points(&pts)?;
        let target = target.scaled(1.0 / target.area().sqrt());
        let dh_hex = hausdorff(&Shape::Body(w_hex), &Shape::Body(target));
        check(dh_hex <= 1e-4, cases, violations);
        Ok(())
    };
    if run(&mut violations, &mut cases).is_err() {
        violations += 1;
    }
    SuiteResult {
        suite: "wulff".into(),
        cases,
        violations,
    }
}

/// Annealed Cheeger search matches exact enumeration on small clusters.
pub fn suite_cheeger(cases: u64, seed: u64) -> SuiteResult {
    let cases = cases.min(40);
    let mut violations = 0;
    let mut compared = 0;
    let window = bn_box(2).bounding_rect(2.0);
    for i in 0..cases {
        let mut rng = Rng::new(derive_seed(seed ^ 0xcafe, i));
        let p = 0.7 + 0.25 * rng.f64();
        let s = rng.next_u64();
        let Ok(config) = Configuration::sample(window, p, s) else {
            continue;
        };
        let exact = match cheeger_exact(&config, 2) {
            Ok(r) => r,
            // Too large for enumeration or no spanning cluster:
            // nothing to compare on this draw.
            Err(_) => continue,
        };
        compared += 1;
        match cheeger_anneal(&config, 2, &AnnealSchedule::default(), s) {
            Ok(heur) => {
                if heur.boundary * exact.size != exact.boundary * heur.size {
                    violations += 1;
                }
            }
            Err(_) => violations += 1,
        }
    }
    SuiteResult {
        suite: "cheeger".into(),
        cases: compared,
        violations,
    }
}

fn run_verify(spec: &RunSpec, out: &mut RunOutput) -> Result<()> {
    let suite = spec.get("suite")?.to_string();
    let cases = spec.get_u64("cases")?;
    let seed = spec.seed;
    let names: Vec<&str> = match suite.as_str() {
        "all" => vec![
            "rightmost", "duality", "concat", "fpp", "dump", "wulff", "cheeger",
        ],
        s if [
            "rightmost", "duality", "concat", "fpp", "dump", "wulff", "cheeger",
        ]
        .contains(&s) =>
        {
            vec![s]
        }
        other => {
            return Err(Error::InvalidArgument(format!(
                "unknown suite {other:?}"
            )))
        }
    };
    let mut total_violations = 0;
    for name in names {
        let r = match name {
            "rightmost" => suite_rightmost(cases, seed),
            "duality" => suite_duality(cases, seed),
            "concat" => suite_concat(cases, seed),
            "fpp" => suite_fpp(cases, seed),
            "dump" => suite_dump(cases, seed),
            "wulff" => suite_wulff(),
            "cheeger" => suite_cheeger(cases, seed),
            _ => unreachable!(),
        };
        total_violations += r.violations;
        out.records.push(record_of("verify", &r));
    }
    if total_violations > 0 {
        out.exit = EXIT_ASSERT;
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Writers
// ---------------------------------------------------------------------------

fn csv_cell(v: &Value) -> String {
    let raw = match v {
        Value::String(s) => s.clone(),
        Value::Null => String::new(),
        other => other.to_string(),
    };
    if raw.contains(',') || raw.contains('"') || raw.contains('\n') {
        format!("\"{}\"", raw.replace('"', "\"\""))
    } else {
        raw
    }
}

/// Serialize a run's products.
///
/// Every record embeds the spec hash and the master seed.  `timestamp`
/// appears only in the run header (JSONL) or the leading comment (CSV)
/// and is excluded from the hash; SVG output carries no timestamp at
/// all, so it is fully deterministic.
pub fn write_output(
    spec: &RunSpec,
    output: &RunOutput,
    timestamp: u64,
    w: &mut dyn Write,
) -> Result<()> {
    let hash = spec.hash_hex();
    match spec.format {
        Format::Jsonl => {
            let header = json!({
                "record": "run",
                "hash": hash,
                "spec": spec,
                "ts": timestamp,
            });
            writeln!(w, "{header}")?;
            for r in &output.records {
                let mut m = obj(r.clone());
                m.insert("hash".to_string(), json!(hash));
                m.insert("seed".to_string(), json!(spec.seed));
                writeln!(w, "{}", Value::Object(m))?;
            }
        }
        Format::Csv => {
            writeln!(
                w,
                "# hexiso {} hash={} seed={} ts={}",
                spec.subcommand, hash, spec.seed, timestamp
            )?;
            let mut columns: Vec<String> = vec!["hash".into(), "seed".into()];
            let mut seen: std::collections::BTreeSet<String> =
                columns.iter().cloned().collect();
            for r in &output.records {
                for key in obj(r.clone()).keys() {
                    if seen.insert(key.clone()) {
                        columns.push(key.clone());
                    }
                }
            }
            writeln!(w, "{}", columns.join(","))?;
            for r in &output.records {
                let m = obj(r.clone());
                let row: Vec<String> = columns
                    .iter()
                    .map(|c| match c.as_str() {
                        "hash" => hash.clone(),
                        "seed" => spec.seed.to_string(),
                        _ => m.get(c).map(csv_cell).unwrap_or_default(),
                    })
                    .collect();
                writeln!(w, "{}", row.join(","))?;
            }
        }
        Format::Svg => {
            let svg = output
                .svg
                .as_ref()
                .expect("run() rejects svg-less subcommands under --format svg");
            w.write_all(svg.as_bytes())?;
        }
    }
    Ok(())
}

/// The exit code a failed run maps to.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::EventFailure(_) | Error::ProxyUndefined(_) | Error::ConditioningFailed => {
            EXIT_EVENT
        }
        _ => EXIT_ASSERT,
    }
}

/// Resolve, run and write; returns the process exit code.
pub fn execute(cli: &Cli) -> Result<i32> {
    let (spec, out_path) = resolve(cli)?;
    let output = run(&spec)?;
    for (path, bytes) in &output.artifacts {
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            fs::create_dir_all(dir)?;
        }
        fs::write(path, bytes)?;
    }
    let timestamp = std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    match &out_path {
        Some(path) => {
            if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
                fs::create_dir_all(dir)?;
            }
            let mut f = BufWriter::new(fs::File::create(path)?);
            write_output(&spec, &output, timestamp, &mut f)?;
            f.flush()?;
        }
        None => {
            let stdout = std::io::stdout();
            let mut lock = stdout.lock();
            write_output(&spec, &output, timestamp, &mut lock)?;
        }
    }
    Ok(output.exit)
}

/// Entry point for the binary.
pub fn cli_main() -> i32 {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("hexiso: {e}");
            exit_code(&e)
        }
    }
}
