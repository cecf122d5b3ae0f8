//! On-disk layout of an experiment directory:
//!
//! * `run_<i>.jsonl`: a header line, then one line per completion event;
//! * `curve_<i>.csv`: best-so-far value against simulated time;
//! * `summary.json` and `summary.csv`.

use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{ExperimentSummary, RunSummary};
use crate::error::{Error, Result};
use crate::scheduler::{Regime, RunEvent, RunRecord};

#[derive(Debug, Serialize, Deserialize)]
struct RunHeader {
    seed: u64,
    regime: Regime,
    batch_size: usize,
    total_sim_time: f64,
}

pub fn run_path(dir: &Path, index: usize) -> PathBuf {
    dir.join(format!("run_{index}.jsonl"))
}

pub fn curve_path(dir: &Path, index: usize) -> PathBuf {
    dir.join(format!("curve_{index}.csv"))
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Error::io(path, e))
}

pub fn write_run(path: &Path, record: &RunRecord) -> Result<()> {
    let mut w = create(path)?;
    let header = RunHeader {
        seed: record.seed,
        regime: record.regime,
        batch_size: record.batch_size,
        total_sim_time: record.total_sim_time,
    };
    let mut write_line = |line: String| writeln!(w, "{line}").map_err(|e| Error::io(path, e));
    write_line(serde_json::to_string(&header)?)?;
    for e in &record.events {
        write_line(serde_json::to_string(e)?)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Reads a run written by [`write_run`]; the best-so-far curve is rebuilt
/// from the events.
pub fn read_run(path: &Path) -> Result<RunRecord> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut lines = BufReader::new(file).lines();
    let header: RunHeader = match lines.next() {
        Some(line) => serde_json::from_str(&line.map_err(|e| Error::io(path, e))?)?,
        None => return Err(Error::invalid(format!("{} is empty", path.display()))),
    };
    let mut events = Vec::new();
    for line in lines {
        let line = line.map_err(|e| Error::io(path, e))?;
        if !line.trim().is_empty() {
            events.push(serde_json::from_str::<RunEvent>(&line)?);
        }
    }
    Ok(RunRecord::new(
        header.seed,
        header.regime,
        header.batch_size,
        events,
        header.total_sim_time,
    ))
}

pub fn write_curve(path: &Path, record: &RunRecord) -> Result<()> {
    let mut w = create(path)?;
    let io = |e| Error::io(path, e);
    writeln!(w, "time,value").map_err(io)?;
    for c in &record.best_curve {
        writeln!(w, "{},{}", c.time, c.value).map_err(io)?;
    }
    w.flush().map_err(io)
}

pub fn write_summary(dir: &Path, summary: &ExperimentSummary) -> Result<()> {
    let json_path = dir.join("summary.json");
    let mut w = create(&json_path)?;
    serde_json::to_writer_pretty(&mut w, summary)?;
    writeln!(w).map_err(|e| Error::io(&json_path, e))?;
    w.flush().map_err(|e| Error::io(&json_path, e))?;

    let csv_path = dir.join("summary.csv");
    let mut w = create(&csv_path)?;
    let io = |e| Error::io(&csv_path, e);
    writeln!(
        w,
        "problem,variant,regime,B,budget,n_init,repeats,succeeded,failed,best,worst,mean,std,mean_time,total_time"
    )
    .map_err(io)?;
    let c = &summary.config;
    let failed = summary.runs.iter().filter(|r| r.error.is_some()).count();
    let stats = match &summary.stats {
        Some(s) => format!(
            "{},{},{},{},{},{}",
            s.best, s.worst, s.mean, s.std, s.mean_time, s.total_time
        ),
        None => ",,,,,".into(),
    };
    writeln!(
        w,
        "{},{},{},{},{},{},{},{},{},{}",
        c.problem,
        c.variant,
        c.regime,
        c.workers(),
        c.budget,
        c.n_init,
        c.repeats,
        summary.runs.len() - failed,
        failed,
        stats
    )
    .map_err(io)?;
    w.flush().map_err(io)
}

pub fn read_summary(dir: &Path) -> Result<ExperimentSummary> {
    let path = dir.join("summary.json");
    let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    Ok(serde_json::from_str(&text)?)
}

/// Reloads the records of the successful runs listed in a summary.
pub fn read_runs(dir: &Path, runs: &[RunSummary]) -> Result<Vec<RunRecord>> {
    runs.iter()
        .filter(|r| r.error.is_none())
        .map(|r| read_run(&run_path(dir, r.index)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn event(i: usize, t: f64, y: f64) -> RunEvent {
        RunEvent {
            issue_index: i,
            worker: 0,
            issue_time: t - 1.0,
            completion_time: t,
            point: vec![0.1 * i as f64, 1.0 / 3.0],
            unit_point: vec![0.1 * i as f64, 1.0 / 3.0],
            observation: y,
            regime: Regime::Sequential,
            weight: (i > 0).then_some(0.123_456_789_012_345_67),
            initial: i == 0,
            issued_after: i,
        }
    }

    #[test]
    fn run_round_trips_exactly() {
        let dir = tempfile::tempdir().unwrap();
        let rec = RunRecord::new(
            42,
            Regime::Sequential,
            1,
            vec![
                event(0, 1.0, 0.1 + 0.2),
                event(1, 2.0, -1e-300),
                event(2, 3.5, 7.0 / 3.0),
            ],
            3.5,
        );
        let path = run_path(dir.path(), 0);
        write_run(&path, &rec).unwrap();
        assert_eq!(read_run(&path).unwrap(), rec);
    }

    #[test]
    fn curve_file_layout() {
        let dir = tempfile::tempdir().unwrap();
        let rec = RunRecord::new(
            0,
            Regime::Sequential,
            1,
            vec![event(0, 1.0, 2.0), event(1, 2.0, 1.0)],
            2.0,
        );
        let path = curve_path(dir.path(), 3);
        write_curve(&path, &rec).unwrap();
        let text = fs::read_to_string(path).unwrap();
        assert_eq!(text, "time,value\n1,2\n2,2\n");
    }

    #[test]
    fn missing_file_reports_path() {
        let err = read_run(Path::new("/nonexistent/run_0.jsonl")).unwrap_err();
        assert!(err.to_string().contains("/nonexistent/run_0.jsonl"));
    }
}
