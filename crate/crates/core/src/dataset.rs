//! JSON-lines dataset files.
//!
//! Line 1 is a header:
//!
//! ```text
//! {"format":"tdl-gnss-dataset","version":1,"generator":{...ScenarioConfig...}}
//! ```
//!
//! Every following line is one epoch:
//!
//! ```text
//! {"t":0.0,"truth":[x,y,z],"observations":[{"id":"G07","system":"GPS",
//!   "position":[x,y,z],"pseudorange":2.1e7,"cn0":47.2,"elevation":0.81,
//!   "los":true,"bias":0.0}, ...]}
//! ```
//!
//! `truth`, `los` and `bias` may be `null`. Floats are written in shortest
//! round-trip form, so reading a file back reproduces every value exactly.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geodesy::EcefPosition;
use crate::model::{Epoch, GnssSystem, SatelliteObservation};
use crate::synth::ScenarioConfig;

pub const DATASET_FORMAT: &str = "tdl-gnss-dataset";
pub const DATASET_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetHeader {
    pub format: String,
    pub version: u32,
    pub generator: Option<ScenarioConfig>,
}

impl DatasetHeader {
    pub fn new(generator: Option<ScenarioConfig>) -> Self {
        Self {
            format: DATASET_FORMAT.to_string(),
            version: DATASET_VERSION,
            generator,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub header: DatasetHeader,
    pub epochs: Vec<Epoch>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ObservationRecord {
    id: String,
    system: GnssSystem,
    position: [f64; 3],
    pseudorange: f64,
    cn0: f64,
    elevation: f64,
    los: Option<bool>,
    bias: Option<f64>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct EpochRecord {
    t: f64,
    truth: Option<[f64; 3]>,
    observations: Vec<ObservationRecord>,
}

impl From<&Epoch> for EpochRecord {
    fn from(e: &Epoch) -> Self {
        Self {
            t: e.t,
            truth: e.truth_pos.map(EcefPosition::to_array),
            observations: e
                .observations
                .iter()
                .map(|o| ObservationRecord {
                    id: o.sat_id.clone(),
                    system: o.system,
                    position: o.sat_pos.to_array(),
                    pseudorange: o.pseudorange,
                    cn0: o.cn0,
                    elevation: o.elevation,
                    los: o.los_truth,
                    bias: o.bias_truth,
                })
                .collect(),
        }
    }
}

impl From<EpochRecord> for Epoch {
    fn from(r: EpochRecord) -> Self {
        Epoch {
            t: r.t,
            truth_pos: r.truth.map(EcefPosition::from),
            observations: r
                .observations
                .into_iter()
                .map(|o| SatelliteObservation {
                    sat_id: o.id,
                    system: o.system,
                    sat_pos: o.position.into(),
                    pseudorange: o.pseudorange,
                    cn0: o.cn0,
                    elevation: o.elevation,
                    los_truth: o.los,
                    bias_truth: o.bias,
                })
                .collect(),
        }
    }
}

pub fn write_dataset<W: Write>(
    mut out: W,
    header: &DatasetHeader,
    epochs: &[Epoch],
) -> std::io::Result<()> {
    serde_json::to_writer(&mut out, header)?;
    out.write_all(b"\n")?;
    for e in epochs {
        serde_json::to_writer(&mut out, &EpochRecord::from(e))?;
        out.write_all(b"\n")?;
    }
    out.flush()
}

pub fn save_dataset(
    path: impl AsRef<Path>,
    header: &DatasetHeader,
    epochs: &[Epoch],
) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    write_dataset(BufWriter::new(file), header, epochs).map_err(|e| Error::io(path, e))
}

pub fn read_dataset<R: BufRead>(input: R) -> Result<Dataset> {
    let mut lines = input.lines().enumerate();
    let malformed = |line: usize, reason: String| Error::MalformedDataset { line, reason };

    let header_line = match lines.next() {
        Some((_, Ok(l))) => l,
        Some((_, Err(e))) => return Err(malformed(1, e.to_string())),
        None => return Err(malformed(1, "empty file".into())),
    };
    let raw: serde_json::Value =
        serde_json::from_str(&header_line).map_err(|e| malformed(1, e.to_string()))?;
    if raw.get("format").and_then(|f| f.as_str()) != Some(DATASET_FORMAT) {
        return Err(malformed(1, format!("expected format {DATASET_FORMAT:?}")));
    }
    match raw.get("version").and_then(|v| v.as_u64()) {
        Some(v) if v == DATASET_VERSION as u64 => {}
        Some(v) => return Err(Error::UnsupportedVersion(v.min(u32::MAX as u64) as u32)),
        None => return Err(malformed(1, "missing version".into())),
    }
    let header: DatasetHeader =
        serde_json::from_value(raw).map_err(|e| malformed(1, e.to_string()))?;

    let mut epochs = Vec::new();
    for (idx, line) in lines {
        let line_no = idx + 1;
        let line = line.map_err(|e| malformed(line_no, e.to_string()))?;
        if line.trim().is_empty() {
            continue;
        }
        let record: EpochRecord =
            serde_json::from_str(&line).map_err(|e| malformed(line_no, e.to_string()))?;
        let epoch = Epoch::from(record);
        if !epoch.has_unique_ids() {
            return Err(malformed(line_no, "duplicate satellite id".into()));
        }
        epochs.push(epoch);
    }
    Ok(Dataset { header, epochs })
}

pub fn load_dataset(path: impl AsRef<Path>) -> Result<Dataset> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_dataset(BufReader::new(file))
}
