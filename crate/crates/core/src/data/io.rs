//! Dataset file formats.
//!
//! JSON: `{"V": int, "subjects": [{"y": 0|1, "visits": [{"age": f64, "W": [[f64; V]; V]}]}]}`.
//!
//! CSV bundle: a manifest CSV with columns `subject_id,y,visit_index,age,matrix_file`
//! and one headerless `V x V` CSV per visit, with `matrix_file` resolved
//! relative to the manifest's directory.

use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use super::{symmetrize, Dataset, LongitudinalSubject, Visit};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Json,
    CsvBundle,
}

impl Format {
    /// `.csv` selects the bundle manifest, anything else JSON.
    pub fn from_path(path: &Path) -> Format {
        match path.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("csv") => Format::CsvBundle,
            _ => Format::Json,
        }
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct LoadOptions {
    /// Replace each network by `(W + W^T) / 2` before validation.
    pub symmetrize: bool,
}

#[derive(Serialize, Deserialize)]
struct JsonDataset {
    #[serde(rename = "V")]
    nodes: usize,
    subjects: Vec<JsonSubject>,
}

#[derive(Serialize, Deserialize)]
struct JsonSubject {
    y: i64,
    visits: Vec<JsonVisit>,
}

#[derive(Serialize, Deserialize)]
struct JsonVisit {
    age: f64,
    #[serde(rename = "W")]
    w: Vec<Vec<f64>>,
}

pub fn load_dataset(path: &Path, format: Format, options: LoadOptions) -> Result<Dataset> {
    match format {
        Format::Json => load_json(path, options),
        Format::CsvBundle => load_csv_bundle(path, options),
    }
}

pub fn save_dataset(dataset: &Dataset, path: &Path, format: Format) -> Result<()> {
    match format {
        Format::Json => save_json(dataset, path),
        Format::CsvBundle => save_csv_bundle(dataset, path),
    }
}

pub fn load_json(path: &Path, options: LoadOptions) -> Result<Dataset> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let raw: JsonDataset = serde_json::from_reader(BufReader::new(file))
        .map_err(|e| Error::Malformed(format!("{}: {e}", path.display())))?;
    let mut subjects = Vec::with_capacity(raw.subjects.len());
    for (i, s) in raw.subjects.into_iter().enumerate() {
        let label = parse_label(i, s.y)?;
        let mut visits = Vec::with_capacity(s.visits.len());
        for (t, visit) in s.visits.into_iter().enumerate() {
            let mut network = rows_to_matrix(i, t, raw.nodes, visit.w)?;
            if options.symmetrize {
                symmetrize(&mut network);
            }
            visits.push(Visit { age: visit.age, network });
        }
        subjects.push(LongitudinalSubject { label, visits });
    }
    Dataset::with_nodes(raw.nodes, subjects)
}

pub fn save_json(dataset: &Dataset, path: &Path) -> Result<()> {
    let raw = JsonDataset {
        nodes: dataset.nodes(),
        subjects: dataset
            .subjects()
            .iter()
            .map(|s| JsonSubject {
                y: i64::from(s.label),
                visits: s
                    .visits
                    .iter()
                    .map(|v| JsonVisit {
                        age: v.age,
                        w: v.network.outer_iter().map(|r| r.to_vec()).collect(),
                    })
                    .collect(),
            })
            .collect(),
    };
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    serde_json::to_writer(&mut out, &raw)?;
    out.flush().map_err(|e| Error::io(path, e))
}

fn parse_label(subject: usize, y: i64) -> Result<u8> {
    match y {
        0 | 1 => Ok(y as u8),
        other => Err(Error::InvalidLabel {
            subject,
            value: other.to_string(),
        }),
    }
}

fn rows_to_matrix(subject: usize, visit: usize, nodes: usize, rows: Vec<Vec<f64>>) -> Result<Array2<f64>> {
    let cols = rows.first().map_or(0, Vec::len);
    if rows.len() != nodes || rows.iter().any(|r| r.len() != nodes) {
        return Err(Error::NodeCount {
            subject,
            visit,
            expected: nodes,
            rows: rows.len(),
            cols,
        });
    }
    let flat: Vec<f64> = rows.into_iter().flatten().collect();
    Ok(Array2::from_shape_vec((nodes, nodes), flat).expect("shape checked above"))
}

#[derive(Debug, Deserialize, Serialize)]
struct ManifestRow {
    subject_id: String,
    y: i64,
    visit_index: usize,
    age: f64,
    matrix_file: String,
}

pub fn load_csv_bundle(manifest: &Path, options: LoadOptions) -> Result<Dataset> {
    let base = manifest.parent().map(Path::to_path_buf).unwrap_or_default();
    let mut reader = csv::Reader::from_path(manifest).map_err(|e| match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(manifest, io),
        other => Error::Malformed(format!("{}: {other:?}", manifest.display())),
    })?;

    // subject ids keep first-appearance order
    let mut order: Vec<String> = Vec::new();
    let mut groups: BTreeMap<String, (i64, Vec<ManifestRow>)> = BTreeMap::new();
    for row in reader.deserialize() {
        let row: ManifestRow =
            row.map_err(|e| Error::Malformed(format!("{}: {e}", manifest.display())))?;
        let entry = groups.entry(row.subject_id.clone()).or_insert_with(|| {
            order.push(row.subject_id.clone());
            (row.y, Vec::new())
        });
        if entry.0 != row.y {
            return Err(Error::Malformed(format!(
                "subject {} has conflicting labels",
                row.subject_id
            )));
        }
        entry.1.push(row);
    }

    let mut nodes = None;
    let mut subjects = Vec::with_capacity(order.len());
    for (i, id) in order.iter().enumerate() {
        let (y, mut rows) = groups.remove(id).expect("grouped above");
        rows.sort_by_key(|r| r.visit_index);
        let label = parse_label(i, y)?;
        let mut visits = Vec::with_capacity(rows.len());
        for (t, row) in rows.iter().enumerate() {
            let path = base.join(&row.matrix_file);
            let matrix = read_matrix_csv(&path)?;
            let expected = *nodes.get_or_insert(matrix.len());
            let mut network = rows_to_matrix(i, t, expected, matrix)?;
            if options.symmetrize {
                symmetrize(&mut network);
            }
            visits.push(Visit { age: row.age, network });
        }
        subjects.push(LongitudinalSubject { label, visits });
    }
    Dataset::new(subjects)
}

fn read_matrix_csv(path: &Path) -> Result<Vec<Vec<f64>>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| match e.into_kind() {
            csv::ErrorKind::Io(io) => Error::io(path, io),
            other => Error::Malformed(format!("{}: {other:?}", path.display())),
        })?;
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| Error::Malformed(format!("{}: {e}", path.display())))?;
        let row = record
            .iter()
            .map(|field| {
                field.parse::<f64>().map_err(|_| {
                    Error::Malformed(format!("{}: `{field}` is not a number", path.display()))
                })
            })
            .collect::<Result<Vec<f64>>>()?;
        rows.push(row);
    }
    Ok(rows)
}

/// Writes the manifest at `manifest` and the per-visit matrices into a sibling
/// directory named `<stem>_matrices`.
pub fn save_csv_bundle(dataset: &Dataset, manifest: &Path) -> Result<()> {
    let base = manifest.parent().map(Path::to_path_buf).unwrap_or_default();
    let stem = manifest
        .file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or("dataset");
    let dir_name = format!("{stem}_matrices");
    let dir = base.join(&dir_name);
    fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;

    let mut writer = csv::Writer::from_path(manifest).map_err(|e| match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(manifest, io),
        other => Error::Malformed(format!("{other:?}")),
    })?;
    writer.write_record(["subject_id", "y", "visit_index", "age", "matrix_file"])?;
    for (i, subject) in dataset.subjects().iter().enumerate() {
        for (t, visit) in subject.visits.iter().enumerate() {
            let rel: PathBuf = [dir_name.as_str(), &format!("s{i}_v{t}.csv")].iter().collect();
            write_matrix_csv(&base.join(&rel), &visit.network)?;
            writer.write_record([
                format!("s{i}"),
                subject.label.to_string(),
                t.to_string(),
                visit.age.to_string(),
                rel.to_string_lossy().into_owned(),
            ])?;
        }
    }
    writer.flush().map_err(|e| Error::io(manifest, e))
}

fn write_matrix_csv(path: &Path, w: &Array2<f64>) -> Result<()> {
    let mut writer = csv::WriterBuilder::new()
        .has_headers(false)
        .from_path(path)
        .map_err(|e| match e.into_kind() {
            csv::ErrorKind::Io(io) => Error::io(path, io),
            other => Error::Malformed(format!("{other:?}")),
        })?;
    for row in w.outer_iter() {
        writer.write_record(row.iter().map(|x| x.to_string()))?;
    }
    writer.flush().map_err(|e| Error::io(path, e))
}
