//! Text serializations: sweep tables as CSV, allocations as a line-oriented
//! report, and episodes as JSON lines.
//!
//! Sweep CSV columns: `sep_m,evaders,epochs,success_rate,mean_neutralized`.
//!
//! Allocation report:
//! ```text
//! converged: true
//! rounds: 2
//! agent 0: 3 5
//! agent 1: -
//! task 3: 0
//! task 4: unassigned
//! unassigned: 4
//! ```
//!
//! Episode stream: one JSON object per event with keys `time`, `kind`, `ids`,
//! `payload` in that order, then a final `{"kind":"metrics",...}` record.

use std::fmt::Write as _;
use std::str::FromStr;

use serde::Serialize;
use thiserror::Error;

use crate::cbba::AllocationResult;
use crate::harness::{SweepCell, SweepResult};
use crate::simulator::{EpochMetrics, SimEvent};

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("unknown report format `{0}` (expected csv, report or events)")]
    UnknownFormat(String),
    #[error("{what} cannot be written as {format:?}")]
    Unsupported {
        what: &'static str,
        format: ReportFormat,
    },
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Csv,
    Report,
    Events,
}

impl FromStr for ReportFormat {
    type Err = ReportError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "csv" => Ok(Self::Csv),
            "report" => Ok(Self::Report),
            "events" => Ok(Self::Events),
            other => Err(ReportError::UnknownFormat(other.to_string())),
        }
    }
}

pub enum Report<'a> {
    Sweep(&'a SweepResult),
    Allocation(&'a AllocationResult),
    Episode {
        metrics: &'a EpochMetrics,
        events: &'a [SimEvent],
    },
}

pub fn emit_report(report: Report<'_>, format: ReportFormat) -> Result<String, ReportError> {
    match (report, format) {
        (Report::Sweep(s), ReportFormat::Csv) => sweep_csv(s),
        (Report::Allocation(a), ReportFormat::Report) => Ok(allocation_text(a)),
        (Report::Allocation(a), ReportFormat::Events) => Ok(serde_json::to_string(a)? + "\n"),
        (Report::Episode { metrics, events }, ReportFormat::Events) => event_lines(events, metrics),
        (Report::Sweep(_), format) => Err(ReportError::Unsupported {
            what: "sweep result",
            format,
        }),
        (Report::Allocation(_), format) => Err(ReportError::Unsupported {
            what: "allocation",
            format,
        }),
        (Report::Episode { .. }, format) => Err(ReportError::Unsupported {
            what: "episode",
            format,
        }),
    }
}

fn sweep_csv(sweep: &SweepResult) -> Result<String, ReportError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for cell in &sweep.cells {
        w.serialize(cell)?;
    }
    let bytes = w
        .into_inner()
        .map_err(|e| csv::Error::from(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv writer emits utf-8"))
}

pub fn parse_sweep_csv(text: &str) -> Result<SweepResult, ReportError> {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    let cells = r.deserialize::<SweepCell>().collect::<Result<_, _>>()?;
    Ok(SweepResult { cells })
}

fn allocation_text(a: &AllocationResult) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "converged: {}", a.converged);
    let _ = writeln!(out, "rounds: {}", a.rounds_used);
    for p in &a.paths {
        let tasks = if p.tasks.is_empty() {
            "-".to_string()
        } else {
            p.tasks
                .iter()
                .map(u64::to_string)
                .collect::<Vec<_>>()
                .join(" ")
        };
        let _ = writeln!(out, "agent {}: {tasks}", p.agent_id);
    }
    for (task, winner) in &a.assignment {
        match winner {
            Some(agent) => writeln!(out, "task {task}: {agent}"),
            None => writeln!(out, "task {task}: unassigned"),
        }
        .expect("writing to a String");
    }
    let unassigned = a.unassigned();
    let list = if unassigned.is_empty() {
        "-".to_string()
    } else {
        unassigned
            .iter()
            .map(u64::to_string)
            .collect::<Vec<_>>()
            .join(" ")
    };
    let _ = writeln!(out, "unassigned: {list}");
    out
}

#[derive(Serialize)]
struct MetricsLine<'a> {
    kind: &'static str,
    #[serde(flatten)]
    metrics: &'a EpochMetrics,
}

fn event_lines(events: &[SimEvent], metrics: &EpochMetrics) -> Result<String, ReportError> {
    let mut out = String::new();
    for e in events {
        out.push_str(&serde_json::to_string(e)?);
        out.push('\n');
    }
    out.push_str(&serde_json::to_string(&MetricsLine {
        kind: "metrics",
        metrics,
    })?);
    out.push('\n');
    Ok(out)
}
