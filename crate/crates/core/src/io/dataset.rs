//! Datasets as JSON lines: a header line with the root instance and its
//! digest, then one record per line.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::instance::Instance;
use crate::schedule::{is_feasible_int, makespan_int};

use super::jsplib::format_jsplib;

pub const DATASET_FORMAT: &str = "jobshop-dataset";
pub const DATASET_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverStatus {
    ProvedOptimal,
    TimeLimited,
}

/// How a sample's durations were derived from the root.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Slowdown {
    pub machine: usize,
    pub factor: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetRecord {
    /// Flat per-task durations.
    pub durations: Vec<u32>,
    /// Flat per-task label start times.
    pub label_starts: Vec<u64>,
    pub label_makespan: u64,
    pub solver_status: SolverStatus,
    pub solve_seconds: f64,
    pub slowdown: Option<Slowdown>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub root: Instance,
    /// Free-form description of how the data was produced.
    pub provenance: serde_json::Value,
    pub records: Vec<DatasetRecord>,
}

impl Dataset {
    pub fn new(root: Instance) -> Self {
        Self {
            root,
            provenance: serde_json::Value::Null,
            records: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// The instance of record `i` (root machines, record durations).
    pub fn instance(&self, i: usize) -> Result<Instance> {
        self.root.with_durations(&self.records[i].durations)
    }

    pub fn validate_record(&self, i: usize) -> Result<()> {
        let rec = &self.records[i];
        let bad = |reason: String| Error::InvalidRecord { record: i, reason };
        let n = self.root.num_tasks();
        if rec.durations.len() != n || rec.label_starts.len() != n {
            return Err(bad(format!(
                "expected {n} tasks, got {} durations and {} starts",
                rec.durations.len(),
                rec.label_starts.len()
            )));
        }
        let inst = self.root.with_durations(&rec.durations).map_err(|e| bad(e.to_string()))?;
        if !is_feasible_int(&inst, &rec.label_starts) {
            return Err(bad("label schedule violates a constraint".into()));
        }
        let mk = makespan_int(&inst, &rec.label_starts);
        if mk != rec.label_makespan {
            return Err(bad(format!("label makespan {} but schedule ends at {mk}", rec.label_makespan)));
        }
        if !(rec.solve_seconds >= 0.0) {
            return Err(bad(format!("solve time {}", rec.solve_seconds)));
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        (0..self.records.len()).try_for_each(|i| self.validate_record(i))
    }
}

pub fn instance_digest(inst: &Instance) -> String {
    hex::encode(Sha256::digest(format_jsplib(inst).as_bytes()))
}

#[derive(Serialize, Deserialize)]
struct Header {
    format: String,
    version: u32,
    root: Instance,
    root_sha256: String,
    #[serde(default)]
    provenance: serde_json::Value,
}

#[derive(Serialize, Deserialize)]
struct RecordRepr {
    durations: Vec<Vec<u32>>,
    label_starts: Vec<Vec<u64>>,
    label_makespan: u64,
    solver_status: SolverStatus,
    solve_seconds: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    slowdown: Option<Slowdown>,
}

fn rows<T: Copy>(flat: &[T], width: usize) -> Vec<Vec<T>> {
    flat.chunks(width.max(1)).map(<[T]>::to_vec).collect()
}

pub fn write_dataset_to(data: &Dataset, out: &mut impl Write) -> Result<()> {
    data.validate()?;
    let header = Header {
        format: DATASET_FORMAT.into(),
        version: DATASET_VERSION,
        root: data.root.clone(),
        root_sha256: instance_digest(&data.root),
        provenance: data.provenance.clone(),
    };
    serde_json::to_writer(&mut *out, &header)?;
    out.write_all(b"\n")?;
    let t = data.root.tasks_per_job();
    for rec in &data.records {
        let repr = RecordRepr {
            durations: rows(&rec.durations, t),
            label_starts: rows(&rec.label_starts, t),
            label_makespan: rec.label_makespan,
            solver_status: rec.solver_status,
            solve_seconds: rec.solve_seconds,
            slowdown: rec.slowdown,
        };
        serde_json::to_writer(&mut *out, &repr)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

/// Validates every record, then writes the file.
pub fn write_dataset(path: impl AsRef<Path>, data: &Dataset) -> Result<()> {
    data.validate()?;
    let mut w = BufWriter::new(File::create(path)?);
    write_dataset_to(data, &mut w)?;
    w.flush()?;
    Ok(())
}

pub fn read_dataset_from(input: impl BufRead) -> Result<Dataset> {
    let mut lines = input.lines().enumerate();
    let header: Header = loop {
        match lines.next() {
            None => return Err(Error::Format("dataset has no header line".into())),
            Some((_, line)) => {
                let line = line?;
                if !line.trim().is_empty() {
                    break serde_json::from_str(&line)?;
                }
            }
        }
    };
    if header.format != DATASET_FORMAT {
        return Err(Error::Format(format!("not a dataset file (format `{}`)", header.format)));
    }
    if header.version != DATASET_VERSION {
        return Err(Error::Version {
            expected: DATASET_VERSION,
            found: header.version,
        });
    }
    if instance_digest(&header.root) != header.root_sha256 {
        return Err(Error::Format("root instance checksum mismatch".into()));
    }
    let mut data = Dataset {
        root: header.root,
        provenance: header.provenance,
        records: Vec::new(),
    };
    for (lineno, line) in lines {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let repr: RecordRepr = serde_json::from_str(&line).map_err(|e| Error::Parse {
            line: lineno + 1,
            column: e.column(),
            message: e.to_string(),
        })?;
        let index = data.records.len();
        let (j, t) = (data.root.num_jobs(), data.root.tasks_per_job());
        let shape_ok = |lens: Vec<usize>| lens.len() == j && lens.iter().all(|&l| l == t);
        if !shape_ok(repr.durations.iter().map(Vec::len).collect())
            || !shape_ok(repr.label_starts.iter().map(Vec::len).collect())
        {
            return Err(Error::InvalidRecord {
                record: index,
                reason: "matrix shape does not match the root instance".into(),
            });
        }
        data.records.push(DatasetRecord {
            durations: repr.durations.concat(),
            label_starts: repr.label_starts.concat(),
            label_makespan: repr.label_makespan,
            solver_status: repr.solver_status,
            solve_seconds: repr.solve_seconds,
            slowdown: repr.slowdown,
        });
        data.validate_record(index)?;
    }
    Ok(data)
}

pub fn read_dataset(path: impl AsRef<Path>) -> Result<Dataset> {
    read_dataset_from(BufReader::new(File::open(path)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::tests::two_by_two;

    fn sample() -> Dataset {
        let mut data = Dataset::new(two_by_two());
        for (d, s, mk) in [
            (vec![3, 2, 2, 4], vec![0, 3, 0, 3], 7),
            (vec![3, 3, 2, 4], vec![0, 3, 0, 3], 7),
            (vec![4, 2, 2, 4], vec![0, 4, 0, 4], 8),
        ] {
            data.records.push(DatasetRecord {
                durations: d,
                label_starts: s,
                label_makespan: mk,
                solver_status: SolverStatus::ProvedOptimal,
                solve_seconds: 0.001,
                slowdown: Some(Slowdown { machine: 1, factor: 1.25 }),
            });
        }
        data
    }

    #[test]
    fn round_trip() {
        let data = sample();
        let mut buf = Vec::new();
        write_dataset_to(&data, &mut buf).unwrap();
        let back = read_dataset_from(buf.as_slice()).unwrap();
        assert_eq!(back, data);
    }

    #[test]
    fn empty_dataset() {
        let data = Dataset::new(two_by_two());
        let mut buf = Vec::new();
        write_dataset_to(&data, &mut buf).unwrap();
        assert_eq!(buf.iter().filter(|&&b| b == b'\n').count(), 1);
        assert!(read_dataset_from(buf.as_slice()).unwrap().is_empty());
    }

    #[test]
    fn infeasible_label_rejected_on_write() {
        let mut data = sample();
        data.records[1].label_starts = vec![0, 2, 0, 3];
        let mut buf = Vec::new();
        assert!(matches!(
            write_dataset_to(&data, &mut buf),
            Err(Error::InvalidRecord { record: 1, .. })
        ));
        assert!(buf.is_empty());
    }

    #[test]
    fn version_and_checksum_checked() {
        let data = sample();
        let mut buf = Vec::new();
        write_dataset_to(&data, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let bumped = text.replacen("\"version\":1", "\"version\":2", 1);
        assert!(matches!(
            read_dataset_from(bumped.as_bytes()),
            Err(Error::Version { found: 2, .. })
        ));
        let digest = instance_digest(&data.root);
        let tampered = text.replacen(&digest, &"0".repeat(64), 1);
        assert!(read_dataset_from(tampered.as_bytes()).is_err());
    }
}
