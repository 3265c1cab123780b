//! JSON-lines persistence: one trace file per run and an append-only
//! `records.jsonl` per output directory.

use std::fs::{self, File, OpenOptions};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use super::{ExperimentConfig, RunRecord};
use crate::error::{Error, Result};
use crate::optimizers::{IterationRecord, OptimizerConfig, OptimizerTrace, Termination};

/// First line of a trace file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceHeader {
    pub config: ExperimentConfig,
    pub config_hash: String,
    pub run: usize,
    pub seed: u64,
    /// Optimiser with every default resolved for this problem.
    pub optimizer: OptimizerConfig,
    /// How the logged per-FE variances were computed.
    pub variance_convention: String,
    pub e0: f64,
    pub n_params: usize,
    pub x0: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct TraceEnd {
    n_evaluations: u64,
    termination: Termination,
    best_theta: Vec<f64>,
    best_value: f64,
    final_theta: Vec<f64>,
    fes_to_target: Option<u64>,
    wall_clock_s: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
enum Line {
    Header(Box<TraceHeader>),
    Iteration(IterationRecord),
    End(TraceEnd),
}

fn with_tmp_extension(path: &Path) -> PathBuf {
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    PathBuf::from(tmp)
}

/// Writes header, one line per iteration and a closing line. The file is
/// written under a temporary name and renamed, so a trace either exists
/// completely or not at all.
pub fn write_trace(path: &Path, header: &TraceHeader, trace: &OptimizerTrace) -> Result<()> {
    let tmp = with_tmp_extension(path);
    let file = File::create(&tmp).map_err(|e| Error::file(&tmp, e))?;
    let mut w = BufWriter::new(file);
    let mut line = |l: &Line| -> Result<()> {
        serde_json::to_writer(&mut w, l)?;
        w.write_all(b"\n").map_err(|e| Error::file(&tmp, e))
    };
    line(&Line::Header(Box::new(header.clone())))?;
    for it in &trace.iterations {
        line(&Line::Iteration(it.clone()))?;
    }
    line(&Line::End(TraceEnd {
        n_evaluations: trace.n_evaluations,
        termination: trace.termination.clone(),
        best_theta: trace.best_theta.clone(),
        best_value: trace.best_value,
        final_theta: trace.final_theta.clone(),
        fes_to_target: trace.fes_to_target,
        wall_clock_s: trace.wall_clock_s,
    }))?;
    let file = w.into_inner().map_err(|e| Error::file(&tmp, e.into_error()))?;
    file.sync_all().map_err(|e| Error::file(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| Error::file(path, e))
}

pub fn read_trace(path: &Path) -> Result<(TraceHeader, OptimizerTrace)> {
    let file = File::open(path).map_err(|e| Error::file(path, e))?;
    let mut header = None;
    let mut iterations = Vec::new();
    let mut end = None;
    for (k, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::file(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        match serde_json::from_str(&line)? {
            Line::Header(h) if k == 0 => header = Some(*h),
            Line::Iteration(it) => iterations.push(it),
            Line::End(e) => end = Some(e),
            Line::Header(_) => {
                return Err(Error::Config(format!("{}: header on line {}", path.display(), k + 1)))
            }
        }
    }
    let (Some(header), Some(end)) = (header, end) else {
        return Err(Error::Config(format!("{}: incomplete trace", path.display())));
    };
    Ok((
        header,
        OptimizerTrace {
            iterations,
            n_evaluations: end.n_evaluations,
            termination: end.termination,
            best_theta: end.best_theta,
            best_value: end.best_value,
            final_theta: end.final_theta,
            fes_to_target: end.fes_to_target,
            wall_clock_s: end.wall_clock_s,
        },
    ))
}

/// Serialised, append-only writer for `records.jsonl`. Each record is
/// flushed and synced before `append` returns.
pub struct RecordWriter {
    path: PathBuf,
    file: Mutex<File>,
}

impl RecordWriter {
    pub fn open(path: impl Into<PathBuf>) -> Result<Self> {
        let path = path.into();
        let file = OpenOptions::new()
            .create(true)
            .append(true)
            .open(&path)
            .map_err(|e| Error::file(&path, e))?;
        Ok(Self {
            path,
            file: Mutex::new(file),
        })
    }

    pub fn append(&self, record: &RunRecord) -> Result<()> {
        let mut line = serde_json::to_vec(record)?;
        line.push(b'\n');
        let mut file = self.file.lock().unwrap_or_else(|p| p.into_inner());
        file.write_all(&line)
            .and_then(|_| file.sync_data())
            .map_err(|e| Error::file(&self.path, e))
    }
}

/// Reads every complete record. A final line cut short by a crash is
/// ignored; a malformed line anywhere else is an error.
pub fn load_records(path: &Path) -> Result<Vec<RunRecord>> {
    let text = match fs::read_to_string(path) {
        Ok(t) => t,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(Vec::new()),
        Err(e) => return Err(Error::file(path, e)),
    };
    let complete = text.ends_with('\n');
    let lines: Vec<&str> = text.lines().filter(|l| !l.trim().is_empty()).collect();
    let mut out = Vec::with_capacity(lines.len());
    for (k, line) in lines.iter().enumerate() {
        match serde_json::from_str(line) {
            Ok(r) => out.push(r),
            Err(_) if k + 1 == lines.len() && !complete => break,
            Err(e) => return Err(e.into()),
        }
    }
    Ok(out)
}
