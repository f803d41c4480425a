//! File formats: dataset and label CSVs, feature matrices, Gram matrices,
//! manifests and dataset fingerprints.

use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use sigdr_core::sigkernel::{GramKind, GramMatrix};
use sigdr_core::{Dataset, EmpiricalMeasure, TimeSeries};

use crate::{Error, Result};

fn csv_err(path: &Path, e: csv::Error) -> Error {
    Error::format(path, e.to_string())
}

fn create_parent(path: &Path) -> Result<()> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        }
    }
    Ok(())
}

/// Write `text` to `path`, creating parent directories.
pub fn write_text(path: &Path, text: &str) -> Result<()> {
    create_parent(path)?;
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

/// Hex SHA-256 of `bytes`.
pub fn fingerprint(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

pub fn fingerprint_file(path: &Path) -> Result<String> {
    Ok(fingerprint(&fs::read(path).map_err(|e| Error::io(path, e))?))
}

/// Dataset CSV text: `group_id,series_id,time,dim_0,...`, one row per sample.
pub fn dataset_csv(dataset: &Dataset) -> String {
    let dim = dataset.groups().first().map_or(0, EmpiricalMeasure::dim);
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["group_id".to_string(), "series_id".into(), "time".into()];
    header.extend((0..dim).map(|c| format!("dim_{c}")));
    w.write_record(&header).expect("in-memory write");
    for (id, group) in dataset.ids().iter().zip(dataset.groups()) {
        for (s, ts) in group.series().iter().enumerate() {
            for (t, p) in ts.times().iter().zip(ts.points()) {
                let mut row = vec![id.clone(), s.to_string(), t.to_string()];
                row.extend(p.iter().map(f64::to_string));
                w.write_record(&row).expect("in-memory write");
            }
        }
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 csv")
}

/// Labels CSV text: `group_id,label`.
pub fn labels_csv(dataset: &Dataset) -> String {
    let mut out = String::from("group_id,label\n");
    for (id, y) in dataset.ids().iter().zip(dataset.labels()) {
        out.push_str(&format!("{id},{y}\n"));
    }
    out
}

pub fn write_dataset(dataset: &Dataset, data_path: &Path, labels_path: &Path) -> Result<()> {
    write_text(data_path, &dataset_csv(dataset))?;
    write_text(labels_path, &labels_csv(dataset))
}

fn parse_f64(path: &Path, line: u64, field: &str) -> Result<f64> {
    field
        .trim()
        .parse::<f64>()
        .map_err(|_| Error::format(path, format!("line {line}: '{field}' is not a number")))
}

/// Timestamped samples per series id.
type SeriesPoints = HashMap<String, Vec<(f64, Vec<f64>)>>;

/// Load a dataset. Groups keep the order of their first row; samples are
/// sorted by time within each series.
pub fn read_dataset(data_path: &Path, labels_path: &Path) -> Result<Dataset> {
    let mut reader = csv::Reader::from_path(data_path).map_err(|e| csv_err(data_path, e))?;
    let header = reader.headers().map_err(|e| csv_err(data_path, e))?.clone();
    let expected = ["group_id", "series_id", "time"];
    if header.len() < 4 || header.iter().take(3).ne(expected) {
        return Err(Error::format(data_path, "header must be group_id,series_id,time,dim_0,..."));
    }
    let dim = header.len() - 3;
    let mut group_order: Vec<String> = Vec::new();
    let mut groups: HashMap<String, (Vec<String>, SeriesPoints)> = HashMap::new();
    for (i, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| csv_err(data_path, e))?;
        let line = i as u64 + 2;
        let gid = rec[0].to_string();
        let sid = rec[1].to_string();
        let t = parse_f64(data_path, line, &rec[2])?;
        let vals = (3..3 + dim)
            .map(|c| parse_f64(data_path, line, &rec[c]))
            .collect::<Result<Vec<_>>>()?;
        let entry = groups.entry(gid.clone()).or_insert_with(|| {
            group_order.push(gid.clone());
            (Vec::new(), HashMap::new())
        });
        let series = entry.1.entry(sid.clone()).or_insert_with(|| {
            entry.0.push(sid.clone());
            Vec::new()
        });
        series.push((t, vals));
    }
    if group_order.is_empty() {
        return Err(Error::format(data_path, "no samples"));
    }
    let labels = read_labels(labels_path)?;
    let mut out_groups = Vec::with_capacity(group_order.len());
    let mut out_labels = Vec::with_capacity(group_order.len());
    for gid in &group_order {
        let (order, mut series) = groups.remove(gid).expect("group recorded");
        let mut members = Vec::with_capacity(order.len());
        for sid in order {
            let mut rows = series.remove(&sid).expect("series recorded");
            rows.sort_by(|a, b| a.0.total_cmp(&b.0));
            if let Some(w) = rows.windows(2).find(|w| w[0].0 == w[1].0) {
                return Err(Error::format(
                    data_path,
                    format!("group {gid} series {sid} has duplicate timestamp {}", w[0].0),
                ));
            }
            let times = rows.iter().map(|r| r.0).collect();
            let values = rows.into_iter().flat_map(|r| r.1).collect();
            let ts = TimeSeries::new(times, values, dim)
                .map_err(|e| Error::format(data_path, format!("group {gid} series {sid}: {e}")))?;
            members.push(ts);
        }
        let label = *labels
            .get(gid)
            .ok_or_else(|| Error::format(labels_path, format!("no label for group {gid}")))?;
        out_groups.push(EmpiricalMeasure::new(members)?);
        out_labels.push(label);
    }
    if labels.len() != group_order.len() {
        let extra = labels.keys().find(|k| !group_order.contains(k)).cloned().unwrap_or_default();
        return Err(Error::format(labels_path, format!("label for unknown group {extra}")));
    }
    Ok(Dataset::with_ids(group_order, out_groups, out_labels)?)
}

fn read_labels(path: &Path) -> Result<HashMap<String, f64>> {
    let mut reader = csv::Reader::from_path(path).map_err(|e| csv_err(path, e))?;
    let header = reader.headers().map_err(|e| csv_err(path, e))?.clone();
    if header.iter().ne(["group_id", "label"]) {
        return Err(Error::format(path, "header must be group_id,label"));
    }
    let mut out = HashMap::new();
    for (i, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| csv_err(path, e))?;
        let y = parse_f64(path, i as u64 + 2, &rec[1])?;
        if out.insert(rec[0].to_string(), y).is_some() {
            return Err(Error::format(path, format!("duplicate label for group {}", &rec[0])));
        }
    }
    Ok(out)
}

/// Feature matrix CSV: `group_id,f_0,...`, one row per group.
pub fn write_features(path: &Path, ids: &[String], rows: &[f64], width: usize) -> Result<()> {
    let mut out = String::from("group_id");
    for j in 0..width {
        out.push_str(&format!(",f_{j}"));
    }
    out.push('\n');
    for (id, row) in ids.iter().zip(rows.chunks_exact(width.max(1))) {
        out.push_str(id);
        for v in row {
            out.push_str(&format!(",{v}"));
        }
        out.push('\n');
    }
    write_text(path, &out)
}

/// Feature matrix back from [`write_features`]: ids and row-major values.
pub fn read_features(path: &Path) -> Result<(Vec<String>, Vec<f64>, usize)> {
    let mut reader = csv::Reader::from_path(path).map_err(|e| csv_err(path, e))?;
    let width = reader.headers().map_err(|e| csv_err(path, e))?.len().saturating_sub(1);
    let mut ids = Vec::new();
    let mut values = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| csv_err(path, e))?;
        ids.push(rec[0].to_string());
        for f in rec.iter().skip(1) {
            values.push(parse_f64(path, i as u64 + 2, f)?);
        }
    }
    Ok((ids, values, width))
}

/// Parameters recorded in the first line of a Gram CSV.
#[derive(Debug, Clone, PartialEq)]
pub struct GramHeader {
    pub kind: GramKind,
    pub sigma: Option<f64>,
    pub refinement: Option<u32>,
}

fn kind_name(kind: GramKind) -> &'static str {
    match kind {
        GramKind::MmdSq => "mmd_sq",
        GramKind::Kernel => "kernel",
    }
}

/// Gram CSV: a header line `kind=...,sigma=...,refinement=...` followed by
/// `M` rows of `M` values.
pub fn write_gram(path: &Path, gram: &GramMatrix, header: &GramHeader) -> Result<()> {
    let opt = |v: Option<String>| v.unwrap_or_else(|| "none".into());
    let mut out = format!(
        "kind={},sigma={},refinement={}\n",
        kind_name(header.kind),
        opt(header.sigma.map(|s| s.to_string())),
        opt(header.refinement.map(|r| r.to_string()))
    );
    for i in 0..gram.size() {
        let row: Vec<String> = gram.row(i).iter().map(f64::to_string).collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    write_text(path, &out)
}

pub fn read_gram(path: &Path) -> Result<(GramMatrix, GramHeader)> {
    let text = read_text(path)?;
    let mut lines = text.lines();
    let first = lines.next().ok_or_else(|| Error::format(path, "empty gram file"))?;
    let mut kind = None;
    let mut sigma = None;
    let mut refinement = None;
    for part in first.split(',') {
        let (key, value) = part
            .split_once('=')
            .ok_or_else(|| Error::format(path, format!("bad header field '{part}'")))?;
        match (key.trim(), value.trim()) {
            ("kind", "mmd_sq") => kind = Some(GramKind::MmdSq),
            ("kind", "kernel") => kind = Some(GramKind::Kernel),
            ("sigma", "none") | ("refinement", "none") => {}
            ("sigma", v) => sigma = Some(parse_f64(path, 1, v)?),
            ("refinement", v) => {
                refinement = Some(v.parse().map_err(|_| Error::format(path, format!("bad refinement '{v}'")))?)
            }
            (k, v) => return Err(Error::format(path, format!("unknown header field {k}={v}"))),
        }
    }
    let kind = kind.ok_or_else(|| Error::format(path, "header lacks kind"))?;
    let mut entries = Vec::new();
    let mut rows = 0;
    for (i, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        for f in line.split(',') {
            entries.push(parse_f64(path, i as u64 + 2, f)?);
        }
        rows += 1;
    }
    let gram = GramMatrix::new(rows, entries, kind).map_err(|e| Error::format(path, e.to_string()))?;
    Ok((gram, GramHeader { kind, sigma, refinement }))
}

/// Record of a generated dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub config: crate::synth::GeneratorConfig,
    pub seed: u64,
    pub groups: usize,
    pub series: usize,
    pub data: PathBuf,
    pub labels: PathBuf,
    pub data_sha256: String,
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value).expect("serializable value");
    write_text(path, &(text + "\n"))
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = read_text(path)?;
    serde_json::from_str(&text).map_err(|e| Error::format(path, e.to_string()))
}
