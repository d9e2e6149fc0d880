use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::ctbn::{CtbnModel, CtbnObservations, CtbnTraceRow};
use crate::error::{Error, Result};
use crate::process::{MjpPath, ObservationSet, PiecewiseConstant};
use crate::sampler::TraceRow;

#[derive(Debug, Serialize, Deserialize)]
struct PathRow {
    time: f64,
    state: usize,
}

/// Writes `time,state` rows: the initial state at `t_start`, one row per
/// jump, and a closing row at `t_end` repeating the final state.
pub fn write_path_csv(path: &Path, p: &MjpPath<f64>) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for (a, _, s) in p.segments() {
        w.serialize(PathRow { time: a, state: s })?;
    }
    w.serialize(PathRow {
        time: p.t_end(),
        state: p.final_state(),
    })?;
    w.flush()?;
    Ok(())
}

/// Reads the format of [`write_path_csv`].
pub fn read_path_csv(path: &Path) -> Result<MjpPath<f64>> {
    let mut r = csv::Reader::from_path(path)?;
    let rows: Vec<PathRow> = r.deserialize().collect::<std::result::Result<_, _>>()?;
    if rows.len() < 2 {
        return Err(Error::InvalidPath(
            "a path file needs a start row and a closing t_end row".into(),
        ));
    }
    let (last, body) = rows.split_last().expect("nonempty");
    if body.last().map(|r| r.state) != Some(last.state) {
        return Err(Error::InvalidPath("closing row must repeat the final state".into()));
    }
    let times = body[1..].iter().map(|r| r.time).collect();
    let states = body.iter().map(|r| r.state).collect();
    MjpPath::new(body[0].time, last.time, times, states)
}

/// Parses an observation payload: a single integer is a noiseless
/// observation of that state; `;`-separated numbers are a likelihood vector
/// over all states.
pub fn parse_payload(payload: &str, n: usize) -> Result<Vec<f64>> {
    let payload = payload.trim();
    if !payload.contains(';') {
        if let Ok(s) = payload.parse::<usize>() {
            if s >= n {
                return Err(Error::InvalidObservations(format!(
                    "observed state {s} out of range for {n} states"
                )));
            }
            let mut v = vec![0.0; n];
            v[s] = 1.0;
            return Ok(v);
        }
    }
    let v = payload
        .split(';')
        .map(|x| {
            x.trim()
                .parse::<f64>()
                .map_err(|_| Error::InvalidObservations(format!("bad payload entry '{x}'")))
        })
        .collect::<Result<Vec<f64>>>()?;
    if v.len() != n {
        return Err(Error::InvalidObservations(format!(
            "likelihood payload has {} entries for {n} states",
            v.len()
        )));
    }
    Ok(v)
}

fn format_payload(lik: &[f64]) -> String {
    let ones: Vec<usize> = (0..lik.len()).filter(|&i| lik[i] != 0.0).collect();
    if ones.len() == 1 && lik[ones[0]] == 1.0 {
        return ones[0].to_string();
    }
    lik.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(";")
}

#[derive(Debug, Serialize, Deserialize)]
struct ObservationRow {
    time: f64,
    payload: String,
}

/// Reads `time,payload` rows (see [`parse_payload`]).
pub fn read_observations_csv(path: &Path, n: usize) -> Result<ObservationSet<f64>> {
    let mut r = csv::Reader::from_path(path)?;
    let mut items = Vec::new();
    for row in r.deserialize() {
        let row: ObservationRow = row?;
        items.push((row.time, parse_payload(&row.payload, n)?));
    }
    ObservationSet::new(n, items)
}

pub fn write_observations_csv(path: &Path, obs: &ObservationSet<f64>) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for o in obs.iter() {
        w.serialize(ObservationRow {
            time: o.time,
            payload: format_payload(o.likelihood()),
        })?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Serialize, Deserialize)]
struct NodeObservationRow {
    node: usize,
    time: f64,
    payload: String,
}

/// Reads `node,time,payload` rows.
pub fn read_ctbn_observations_csv(path: &Path, model: &CtbnModel<f64>) -> Result<CtbnObservations<f64>> {
    let mut r = csv::Reader::from_path(path)?;
    let mut items = Vec::new();
    for row in r.deserialize() {
        let row: NodeObservationRow = row?;
        if row.node >= model.m() {
            return Err(Error::InvalidObservations(format!("unknown node {}", row.node)));
        }
        items.push((row.node, row.time, parse_payload(&row.payload, model.states(row.node))?));
    }
    CtbnObservations::new(model, items)
}

pub fn write_ctbn_observations_csv(path: &Path, obs: &CtbnObservations<f64>, m: usize) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for node in 0..m {
        for o in obs.node(node).iter() {
            w.serialize(NodeObservationRow {
                node,
                time: o.time,
                payload: format_payload(o.likelihood()),
            })?;
        }
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Serialize)]
struct SampleRow {
    sample: usize,
    node: usize,
    time: f64,
    state: usize,
}

/// Streams sampled paths as long-format `sample,node,time,state` rows: one
/// row per constant piece start (node is 0 for single-process samples).
pub struct SampleWriter {
    inner: csv::Writer<fs::File>,
}

impl SampleWriter {
    pub fn create(path: &Path) -> Result<Self> {
        Ok(Self {
            inner: csv::Writer::from_path(path)?,
        })
    }

    pub fn write(&mut self, sample: usize, node: usize, p: &MjpPath<f64>) -> Result<()> {
        for (a, _, state) in p.segments() {
            self.inner.serialize(SampleRow {
                sample,
                node,
                time: a,
                state,
            })?;
        }
        Ok(())
    }

    pub fn finish(mut self) -> Result<()> {
        self.inner.flush()?;
        Ok(())
    }
}

/// Streams per-sample statistic vectors as `sample,<name>...` rows.
pub struct StatsWriter {
    inner: csv::Writer<fs::File>,
    width: usize,
}

impl StatsWriter {
    pub fn create(path: &Path, names: &[String]) -> Result<Self> {
        let mut inner = csv::Writer::from_path(path)?;
        inner.write_record(std::iter::once("sample").chain(names.iter().map(String::as_str)))?;
        Ok(Self {
            inner,
            width: names.len(),
        })
    }

    pub fn write(&mut self, sample: usize, values: &[f64]) -> Result<()> {
        if values.len() != self.width {
            return Err(Error::InvalidArgument(format!(
                "{} statistics for {} columns",
                values.len(),
                self.width
            )));
        }
        self.inner.write_record(
            std::iter::once(sample.to_string()).chain(values.iter().map(|v| v.to_string())),
        )?;
        Ok(())
    }

    pub fn finish(mut self) -> Result<()> {
        self.inner.flush()?;
        Ok(())
    }
}

#[derive(Debug, Serialize)]
struct TraceCsvRow {
    iteration: usize,
    grid_size: usize,
    log_evidence: f64,
    elapsed_secs: f64,
}

/// `iteration,grid_size,log_evidence,elapsed_secs`.
pub fn write_trace_csv(path: &Path, trace: &[TraceRow]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for r in trace {
        w.serialize(TraceCsvRow {
            iteration: r.iteration,
            grid_size: r.grid_size,
            log_evidence: r.log_evidence,
            elapsed_secs: r.elapsed_secs,
        })?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Serialize)]
struct CtbnTraceCsvRow {
    sweep: usize,
    grid_size: usize,
    elapsed_secs: f64,
}

/// `sweep,grid_size,elapsed_secs`.
pub fn write_ctbn_trace_csv(path: &Path, trace: &[CtbnTraceRow]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for r in trace {
        w.serialize(CtbnTraceCsvRow {
            sweep: r.sweep,
            grid_size: r.grid_size,
            elapsed_secs: r.elapsed_secs,
        })?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_json<V: Serialize + ?Sized>(path: &Path, value: &V) -> Result<()> {
    fs::write(path, serde_json::to_string_pretty(value)?)?;
    Ok(())
}
