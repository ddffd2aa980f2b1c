//! CSV and JSON artifacts: two-block traces, regularization traces, the
//! noise-level table and run summaries. Missing values are empty cells.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::diagnostics::{check_monotonicity_suite, CheckReport, SuiteReport, TraceColumns};
use crate::error::{Error, Result};
use crate::gravity::Table1Row;
use crate::illposed::{check_ip_bounds_raw, RegTrace};
use crate::padmm::IterationTrace;
use crate::scalar::Scalar;

pub const PADMM_TRACE_HEADER: [&str; 6] = [
    "k",
    "du_G2",
    "objective",
    "feasibility",
    "kkt_norm2",
    "dy_Q2",
];
/// Present only when the run had a reference point; sits before `dy_Q2`.
pub const DIST_REF_COLUMN: &str = "dist_ref_G2";
pub const REG_TRACE_HEADER: [&str; 7] = ["k", "E", "Phi", "err_x", "err_y", "err_z", "feas_Az"];
pub const TABLE1_HEADER: [&str; 5] = [
    "delta",
    "err_min",
    "iter_min",
    "ratio_half",
    "ratio_quarter",
];

fn cell<T: Scalar>(v: Option<T>) -> String {
    v.map_or_else(String::new, |v| v.to_f64_lossy().to_string())
}

pub fn write_padmm_trace<T: Scalar, W: Write>(trace: &IterationTrace<T>, out: W) -> Result<()> {
    let with_dist = trace.records.iter().all(|r| r.dist_ref_g2.is_some());
    let mut w = csv::Writer::from_writer(out);
    let mut header: Vec<&str> = PADMM_TRACE_HEADER[..5].to_vec();
    if with_dist {
        header.push(DIST_REF_COLUMN);
    }
    header.push("dy_Q2");
    w.write_record(&header)?;
    for r in &trace.records {
        let mut row = vec![
            r.k.to_string(),
            cell(Some(r.du_g2)),
            cell(Some(r.objective)),
            cell(Some(r.feasibility)),
            cell(r.kkt_norm2),
        ];
        if with_dist {
            row.push(cell(r.dist_ref_g2));
        }
        row.push(cell(Some(r.dy_q2)));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_reg_trace<T: Scalar, W: Write>(trace: &RegTrace<T>, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(REG_TRACE_HEADER)?;
    for r in &trace.records {
        w.write_record([
            r.k.to_string(),
            cell(r.energy),
            cell(r.phi),
            cell(r.err_x),
            cell(r.err_y),
            cell(r.err_z),
            cell(Some(r.feas_az)),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_table1<W: Write>(rows: &[Table1Row], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    if rows.is_empty() {
        w.write_record(TABLE1_HEADER)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_table1<R: Read>(input: R) -> Result<Vec<Table1Row>> {
    let mut r = csv::Reader::from_reader(input);
    check_header(r.headers()?, &TABLE1_HEADER)?;
    r.deserialize()
        .map(|row| row.map_err(Error::from))
        .collect()
}

/// Columns of a regularization trace; `NaN` marks missing cells.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RegColumns {
    pub k: Vec<usize>,
    pub energy: Vec<f64>,
    pub phi: Vec<f64>,
    pub err_x: Vec<f64>,
    pub err_y: Vec<f64>,
    pub err_z: Vec<f64>,
    pub feas_az: Vec<f64>,
}

impl RegColumns {
    pub fn has_phi(&self) -> bool {
        !self.phi.is_empty() && self.phi.iter().all(|v| v.is_finite())
    }
}

/// A trace read back from CSV, identified by its header.
#[derive(Debug, Clone, PartialEq)]
pub enum TraceFile {
    Padmm(TraceColumns),
    Regularized(RegColumns),
}

fn check_header(found: &csv::StringRecord, expected: &[&str]) -> Result<()> {
    if found.iter().eq(expected.iter().copied()) {
        Ok(())
    } else {
        Err(Error::Schema(format!(
            "expected columns {expected:?}, found {:?}",
            found.iter().collect::<Vec<_>>()
        )))
    }
}

fn parse_cell(v: &str, line: usize, column: &str) -> Result<f64> {
    if v.is_empty() {
        return Ok(f64::NAN);
    }
    v.parse().map_err(|_| {
        Error::Schema(format!(
            "line {line}, column {column}: `{v}` is not a number"
        ))
    })
}

fn parse_k(v: &str, line: usize) -> Result<usize> {
    v.parse().map_err(|_| {
        Error::Schema(format!(
            "line {line}, column k: `{v}` is not an iteration index"
        ))
    })
}

pub fn read_trace<R: Read>(input: R) -> Result<TraceFile> {
    let mut r = csv::Reader::from_reader(input);
    let header = r.headers()?.clone();
    if header.is_empty() {
        return Err(Error::Schema("empty trace file".into()));
    }
    let names: Vec<&str> = header.iter().collect();
    let mut rows = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec?;
        let line = i + 2;
        let k = parse_k(&rec[0], line)?;
        let vals = names[1..]
            .iter()
            .zip(rec.iter().skip(1))
            .map(|(name, v)| parse_cell(v, line, name))
            .collect::<Result<Vec<_>>>()?;
        if k != i {
            return Err(Error::Schema(format!(
                "line {line}: expected k = {i}, found {k}"
            )));
        }
        rows.push(vals);
    }
    if rows.is_empty() {
        return Err(Error::Schema("trace has a header but no rows".into()));
    }
    let col = |j: usize| rows.iter().map(|r| r[j]).collect::<Vec<f64>>();
    let k: Vec<usize> = (0..rows.len()).collect();
    if names == REG_TRACE_HEADER {
        return Ok(TraceFile::Regularized(RegColumns {
            k,
            energy: col(0),
            phi: col(1),
            err_x: col(2),
            err_y: col(3),
            err_z: col(4),
            feas_az: col(5),
        }));
    }
    let with_dist = names.len() == 7 && names[5] == DIST_REF_COLUMN;
    let expected: Vec<&str> = if with_dist {
        let mut h = PADMM_TRACE_HEADER[..5].to_vec();
        h.extend([DIST_REF_COLUMN, "dy_Q2"]);
        h
    } else {
        PADMM_TRACE_HEADER.to_vec()
    };
    check_header(&header, &expected)?;
    let last = expected.len() - 2;
    Ok(TraceFile::Padmm(TraceColumns {
        k,
        du_g2: col(0),
        objective: col(1),
        feasibility: col(2),
        kkt_norm2: col(3),
        dist_ref_g2: with_dist.then(|| col(4)),
        dy_q2: col(last),
        gamma: f64::NAN,
        ..Default::default()
    }))
}

/// Stopping metadata of a regularization run. Errors are relative to
/// `||x†||` when the truth is known.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub delta: f64,
    pub k_stop: usize,
    pub err_at_stop: Option<f64>,
    pub err_min: Option<f64>,
    pub iter_min: Option<usize>,
    pub rho1: f64,
    pub x_true_norm: Option<f64>,
}

impl RunSummary {
    pub fn from_trace<T: Scalar>(trace: &RegTrace<T>, x_true_norm: Option<f64>) -> Self {
        let scale = x_true_norm.filter(|n| *n > 0.0).unwrap_or(1.0);
        let min = trace.error_minimum();
        RunSummary {
            delta: trace.delta.to_f64_lossy(),
            k_stop: trace.k_stop,
            err_at_stop: trace.err_at_stop().map(|e| e.to_f64_lossy() / scale),
            err_min: min.map(|(_, e)| e.to_f64_lossy() / scale),
            iter_min: min.map(|(k, _)| k),
            rho1: trace.rho1.to_f64_lossy(),
            x_true_norm,
        }
    }
}

/// Run constants a verifier needs beyond the trace itself. Every field is
/// optional so a diagnostics report or a run summary can serve directly.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct VerifyReference {
    pub gamma: Option<f64>,
    pub h_star: Option<f64>,
    pub delta: Option<f64>,
    pub rho1: Option<f64>,
}

pub fn read_verify_reference<R: Read>(input: R) -> Result<VerifyReference> {
    Ok(serde_json::from_reader(input)?)
}

/// Every inequality the trace and reference together make checkable. A
/// regularization trace without `Phi`, `δ` and `ρ₁` is checked for energy
/// monotonicity only.
pub fn verify_trace(
    trace: &TraceFile,
    reference: &VerifyReference,
    slack: f64,
) -> Result<SuiteReport> {
    match trace {
        TraceFile::Padmm(cols) => {
            let mut cols = cols.clone();
            cols.gamma = reference.gamma.unwrap_or(f64::NAN);
            cols.h_star = reference.h_star;
            check_monotonicity_suite(&cols, slack)
        }
        TraceFile::Regularized(cols) => match (cols.has_phi(), reference.delta, reference.rho1) {
            (true, Some(delta), Some(rho1)) => {
                check_ip_bounds_raw(&cols.energy, &cols.phi, delta, rho1, slack)
            }
            _ => {
                let n = cols.energy.len();
                if n < 3 {
                    return Err(Error::InsufficientData(format!(
                        "trace has {n} records, need at least 3"
                    )));
                }
                let mut mono = CheckReport::new("energy_monotone");
                for k in 1..n - 1 {
                    mono.le(k + 1, cols.energy[k + 1], cols.energy[k], &[], slack);
                }
                Ok(SuiteReport { checks: vec![mono] })
            }
        },
    }
}
