//! CSV files: per-replication traces, aggregates and audit reports.
//!
//! Numbers carry 9 significant digits, rows end in `\n`, and rounds are
//! numbered from 1.

use std::collections::BTreeMap;
use std::fs::File;
use std::path::Path;

use crate::audit::AuditRow;
use crate::error::{Error, Result};
use crate::harness::{AggregateTrace, LearnerAggregate, LearnerTrace, RegretTrace};

pub const TRACE_HEADER: [&str; 5] = ["scenario", "learner", "replication", "t", "cum_regret"];
pub const AGGREGATE_HEADER: [&str; 6] = ["scenario", "learner", "t", "mean", "p10", "p90"];
pub const AUDIT_HEADER: [&str; 5] = ["scenario", "learner", "empirical", "bound", "pass"];

/// Formats `x` with 9 significant digits, plain for moderate magnitudes and
/// in scientific notation otherwise. Trailing zeros are dropped.
pub fn format_number(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let mag = x.abs();
    if (1e-4..1e15).contains(&mag) {
        let decimals = (8 - mag.log10().floor() as i32).max(0) as usize;
        let s = format!("{x:.decimals$}");
        if s.contains('.') {
            s.trim_end_matches('0').trim_end_matches('.').to_string()
        } else {
            s
        }
    } else {
        let s = format!("{x:.8e}");
        let (mantissa, exp) = s.split_once('e').expect("scientific format");
        let mantissa =
            if mantissa.contains('.') { mantissa.trim_end_matches('0').trim_end_matches('.') } else { mantissa };
        format!("{mantissa}e{exp}")
    }
}

fn writer(path: &Path) -> Result<csv::Writer<File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    Ok(csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(file))
}

fn finish(mut w: csv::Writer<File>, path: &Path) -> Result<()> {
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn write_traces(path: &Path, traces: &[RegretTrace]) -> Result<()> {
    if traces.is_empty() {
        return Err(Error::config("no traces to write"));
    }
    let mut w = writer(path)?;
    let err = |e| Error::csv(path, e);
    w.write_record(TRACE_HEADER).map_err(err)?;
    for trace in traces {
        for l in &trace.learners {
            let rep = trace.replication.to_string();
            for (t, r) in l.cum_regret.iter().enumerate() {
                let t = (t + 1).to_string();
                w.write_record([trace.scenario.as_str(), &l.learner, &rep, &t, &format_number(*r)]).map_err(err)?;
            }
        }
    }
    finish(w, path)
}

pub fn write_aggregate(path: &Path, agg: &AggregateTrace) -> Result<()> {
    let mut w = writer(path)?;
    let err = |e| Error::csv(path, e);
    w.write_record(AGGREGATE_HEADER).map_err(err)?;
    for l in &agg.learners {
        for t in 0..l.mean.len() {
            w.write_record([
                agg.scenario.as_str(),
                &l.learner,
                &(t + 1).to_string(),
                &format_number(l.mean[t]),
                &format_number(l.p10[t]),
                &format_number(l.p90[t]),
            ])
            .map_err(err)?;
        }
    }
    finish(w, path)
}

pub fn write_audit(path: &Path, rows: &[AuditRow]) -> Result<()> {
    let mut w = writer(path)?;
    let err = |e| Error::csv(path, e);
    w.write_record(AUDIT_HEADER).map_err(err)?;
    for r in rows {
        w.write_record([
            r.scenario.as_str(),
            &r.learner,
            &format_number(r.empirical),
            &format_number(r.bound),
            if r.pass { "true" } else { "false" },
        ])
        .map_err(err)?;
    }
    finish(w, path)
}

fn reader(path: &Path, header: &[&str]) -> Result<csv::Reader<File>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut r = csv::Reader::from_reader(file);
    let found = r.headers().map_err(|e| Error::csv(path, e))?;
    if found.iter().ne(header.iter().copied()) {
        return Err(Error::Format {
            path: path.to_path_buf(),
            msg: format!("expected header {}, found {}", header.join(","), found.iter().collect::<Vec<_>>().join(",")),
        });
    }
    Ok(r)
}

fn field<T: std::str::FromStr>(path: &Path, record: &csv::StringRecord, i: usize, line: u64) -> Result<T> {
    record
        .get(i)
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| Error::Format { path: path.to_path_buf(), msg: format!("line {line}: bad field {}", i + 1) })
}

/// Reads a trace file back. Rounds must appear in order within each
/// (learner, replication) series.
pub fn read_traces(path: &Path) -> Result<Vec<RegretTrace>> {
    let mut r = reader(path, &TRACE_HEADER)?;
    let mut series: BTreeMap<usize, (String, Vec<LearnerTrace>)> = BTreeMap::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec.map_err(|e| Error::csv(path, e))?;
        let line = i as u64 + 2;
        let scenario = rec[0].to_string();
        let learner = rec[1].to_string();
        let rep: usize = field(path, &rec, 2, line)?;
        let t: usize = field(path, &rec, 3, line)?;
        let value: f64 = field(path, &rec, 4, line)?;
        let entry = series.entry(rep).or_insert_with(|| (scenario, Vec::new()));
        let trace = match entry.1.iter_mut().position(|l| l.learner == learner) {
            Some(p) => &mut entry.1[p],
            None => {
                entry.1.push(LearnerTrace { learner, cum_regret: Vec::new(), skipped: 0, audit: None });
                entry.1.last_mut().expect("just pushed")
            }
        };
        if t != trace.cum_regret.len() + 1 {
            return Err(Error::Format {
                path: path.to_path_buf(),
                msg: format!("line {line}: round {t} out of order"),
            });
        }
        trace.cum_regret.push(value);
    }
    Ok(series
        .into_iter()
        .map(|(replication, (scenario, learners))| RegretTrace { scenario, replication, learners })
        .collect())
}

pub fn read_aggregate(path: &Path) -> Result<AggregateTrace> {
    let mut r = reader(path, &AGGREGATE_HEADER)?;
    let mut agg = AggregateTrace { scenario: String::new(), learners: Vec::new() };
    for (i, rec) in r.records().enumerate() {
        let rec = rec.map_err(|e| Error::csv(path, e))?;
        let line = i as u64 + 2;
        agg.scenario = rec[0].to_string();
        let learner = &rec[1];
        let pos = match agg.learners.iter().position(|l| l.learner == learner) {
            Some(p) => p,
            None => {
                agg.learners.push(LearnerAggregate {
                    learner: learner.to_string(),
                    mean: Vec::new(),
                    p10: Vec::new(),
                    p90: Vec::new(),
                });
                agg.learners.len() - 1
            }
        };
        let l = &mut agg.learners[pos];
        let t: usize = field(path, &rec, 2, line)?;
        if t != l.mean.len() + 1 {
            return Err(Error::Format {
                path: path.to_path_buf(),
                msg: format!("line {line}: round {t} out of order"),
            });
        }
        l.mean.push(field(path, &rec, 3, line)?);
        l.p10.push(field(path, &rec, 4, line)?);
        l.p90.push(field(path, &rec, 5, line)?);
    }
    Ok(agg)
}

pub fn read_audit(path: &Path) -> Result<Vec<AuditRow>> {
    let mut r = reader(path, &AUDIT_HEADER)?;
    let mut rows = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec.map_err(|e| Error::csv(path, e))?;
        let line = i as u64 + 2;
        rows.push(AuditRow {
            scenario: rec[0].to_string(),
            learner: rec[1].to_string(),
            empirical: field(path, &rec, 2, line)?,
            bound: field(path, &rec, 3, line)?,
            pass: field(path, &rec, 4, line)?,
        });
    }
    Ok(rows)
}
