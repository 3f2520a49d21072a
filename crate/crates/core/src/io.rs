//! CSV curve files and JSON run manifests.
//!
//! Curves use one long-format table, `t,n_total,series,value,stderr`, preceded by
//! `#` comment lines carrying metadata. Bound files add `kind` and `term` columns.

use std::collections::BTreeMap;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::bounds::{BoundCurve, BoundPoint, BoundQuantity};
use crate::error::{Error, Result};
use crate::harness::{ExperimentConfig, Series, Stat, Trajectory, TrajectoryMeta};

/// `git describe` of the source tree at build time.
pub fn git_describe() -> &'static str {
    option_env!("STREAMOPT_GIT_DESCRIBE").unwrap_or("unknown")
}

const MAGIC: &str = "# streamopt";
const TOTAL: &str = "total";
const KIND_BOUND: &str = "bound";

#[derive(Debug, Serialize, Deserialize)]
struct Row {
    t: u64,
    n_total: u64,
    series: String,
    value: f64,
    stderr: Option<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
struct BoundRow {
    t: u64,
    n_total: u64,
    series: String,
    value: f64,
    stderr: Option<f64>,
    kind: String,
    term: String,
}

fn csv_err(e: csv::Error) -> Error {
    Error::Parse(e.to_string())
}

fn parse_kv(line: &str) -> BTreeMap<String, String> {
    line.split_whitespace()
        .filter_map(|w| w.split_once('='))
        .map(|(k, v)| (k.to_string(), v.to_string()))
        .collect()
}

fn field<T: std::str::FromStr>(kv: &BTreeMap<String, String>, key: &str) -> Result<T> {
    kv.get(key)
        .and_then(|v| v.parse().ok())
        .ok_or_else(|| Error::Parse(format!("header is missing a valid {key}")))
}

/// Splits leading `#` lines from the table body.
fn split_comments(text: &str) -> (Vec<&str>, &str) {
    let mut comments = Vec::new();
    let mut rest = text;
    while rest.starts_with('#') {
        let end = rest.find('\n').map_or(rest.len(), |i| i + 1);
        comments.push(rest[..end].trim_end());
        rest = &rest[end..];
    }
    (comments, rest)
}

fn header_line(comments: &[&str]) -> Result<BTreeMap<String, String>> {
    comments
        .iter()
        .find(|l| l.starts_with(MAGIC))
        .map(|l| parse_kv(l))
        .ok_or_else(|| Error::Parse("missing streamopt header comment".into()))
}

pub fn write_trajectory_csv<W: Write>(mut w: W, traj: &Trajectory) -> Result<()> {
    writeln!(
        w,
        "{MAGIC} config_hash={} git={} seed_start={} replications={}",
        traj.meta.config_hash,
        git_describe(),
        traj.meta.seed_start,
        traj.meta.replications
    )?;
    let mut out = csv::Writer::from_writer(w);
    for (s, stats) in &traj.series {
        for (i, st) in stats.iter().enumerate() {
            out.serialize(Row {
                t: traj.t[i],
                n_total: traj.n_total[i],
                series: s.name().to_string(),
                value: st.mean,
                stderr: Some(st.stderr),
            })
            .map_err(csv_err)?;
        }
    }
    out.flush()?;
    Ok(())
}

pub fn read_trajectory_csv<R: Read>(mut r: R) -> Result<Trajectory> {
    let mut text = String::new();
    r.read_to_string(&mut text)?;
    let (comments, body) = split_comments(&text);
    let kv = header_line(&comments)?;
    let mut traj = Trajectory {
        meta: TrajectoryMeta {
            config_hash: field(&kv, "config_hash")?,
            seed_start: field(&kv, "seed_start")?,
            replications: field(&kv, "replications")?,
        },
        ..Default::default()
    };
    let mut grids: BTreeMap<Series, Vec<(u64, u64)>> = BTreeMap::new();
    for row in csv::Reader::from_reader(body.as_bytes()).deserialize() {
        let row: Row = row.map_err(csv_err)?;
        let s: Series = row.series.parse()?;
        grids.entry(s).or_default().push((row.t, row.n_total));
        traj.series.entry(s).or_default().push(Stat {
            mean: row.value,
            stderr: row.stderr.unwrap_or(0.0),
        });
    }
    let mut it = grids.into_values();
    if let Some(first) = it.next() {
        if it.any(|g| g != first) {
            return Err(Error::Parse("series are on different checkpoint grids".into()));
        }
        (traj.t, traj.n_total) = first.into_iter().unzip();
    }
    Ok(traj)
}

fn quantity_name(q: BoundQuantity) -> String {
    serde_json::to_value(q)
        .ok()
        .and_then(|v| v.as_str().map(str::to_string))
        .expect("quantity serializes to a string")
}

pub fn write_bound_csv<W: Write>(mut w: W, config_hash: &str, curves: &[BoundCurve]) -> Result<()> {
    writeln!(w, "{MAGIC} config_hash={config_hash} git={}", git_describe())?;
    for c in curves {
        writeln!(
            w,
            "# curve name={} quantity={} valid={}",
            c.name,
            quantity_name(c.quantity),
            c.valid
        )?;
    }
    let mut out = csv::Writer::from_writer(w);
    for c in curves {
        for p in &c.points {
            let row = |term: &str, value: f64| BoundRow {
                t: p.t,
                n_total: p.n_total,
                series: c.name.clone(),
                value,
                stderr: None,
                kind: KIND_BOUND.to_string(),
                term: term.to_string(),
            };
            out.serialize(row(TOTAL, p.total)).map_err(csv_err)?;
            for (name, v) in &p.terms {
                out.serialize(row(name, *v)).map_err(csv_err)?;
            }
        }
    }
    out.flush()?;
    Ok(())
}

/// Parsed bound file: config hash and curves in file order.
pub fn read_bound_csv<R: Read>(mut r: R) -> Result<(String, Vec<BoundCurve>)> {
    let mut text = String::new();
    r.read_to_string(&mut text)?;
    let (comments, body) = split_comments(&text);
    let hash: String = field(&header_line(&comments)?, "config_hash")?;
    let mut curves = Vec::new();
    for l in comments.iter().filter(|l| l.starts_with("# curve ")) {
        let kv = parse_kv(l);
        let q: String = field(&kv, "quantity")?;
        let quantity = serde_json::from_value(serde_json::Value::String(q.clone()))
            .map_err(|_| Error::Parse(format!("unknown quantity {q}")))?;
        let mut c = BoundCurve::new(field::<String>(&kv, "name")?, quantity);
        c.valid = field(&kv, "valid")?;
        curves.push(c);
    }
    for row in csv::Reader::from_reader(body.as_bytes()).deserialize() {
        let row: BoundRow = row.map_err(csv_err)?;
        if row.kind != KIND_BOUND {
            return Err(Error::Parse(format!("unexpected kind {:?}", row.kind)));
        }
        let c = curves
            .iter_mut()
            .find(|c| c.name == row.series)
            .ok_or_else(|| Error::Parse(format!("undeclared curve {}", row.series)))?;
        if row.term == TOTAL {
            c.points.push(BoundPoint {
                t: row.t,
                n_total: row.n_total,
                total: row.value,
                terms: Vec::new(),
            });
        } else {
            let p = c
                .points
                .last_mut()
                .filter(|p| p.t == row.t)
                .ok_or_else(|| Error::Parse(format!("term row before total at t={}", row.t)))?;
            p.terms.push((row.term, row.value));
        }
    }
    Ok((hash, curves))
}

/// One configuration in a manifest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub label: String,
    pub config_hash: String,
    pub config: ExperimentConfig,
    /// Seeds `seed_start..seed_end`.
    pub seed_start: u64,
    pub seed_end: u64,
    /// Series or curve name to file name.
    pub files: BTreeMap<String, String>,
}

/// Index of the files written by one command.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub git: String,
    pub command: String,
    pub preset: Option<String>,
    pub entries: Vec<ManifestEntry>,
}

impl Manifest {
    pub fn new(command: &str, preset: Option<String>) -> Self {
        Self {
            tool: env!("CARGO_PKG_NAME").to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            git: git_describe().to_string(),
            command: command.to_string(),
            preset,
            entries: Vec::new(),
        }
    }
}
