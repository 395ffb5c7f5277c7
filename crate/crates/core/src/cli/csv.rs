//! Bit-stable CSV for traces and sweep summaries.

use std::fmt::Write as _;

use thiserror::Error;

use crate::algorithms::Kernel;
use crate::harness::experiment::{Envelope, SummaryRow};
use crate::harness::{Trace, TraceRow};

pub const TRACE_HEADER: &str = "t,m,f_bar,grad_norm_sq,consensus_err,track_err,eta_t,u_t";

#[derive(Debug, Error, PartialEq)]
pub enum CsvError {
    #[error("missing or wrong header")]
    Header,
    #[error("line {line}: {message}")]
    Row { line: usize, message: String },
}

/// Shortest decimal that parses back to the same `f64`. Plain notation in
/// `[1e-5, 1e16)`, scientific elsewhere.
pub fn format_float(x: f64) -> String {
    let a = x.abs();
    if x == 0.0 || !x.is_finite() || (1e-5..1e16).contains(&a) {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}

fn push_opt(out: &mut String, v: Option<f64>) {
    if let Some(v) = v {
        out.push_str(&format_float(v));
    }
}

pub fn write_trace(trace: &Trace) -> String {
    let mut out = String::with_capacity(64 * (trace.rows.len() + 1));
    out.push_str(TRACE_HEADER);
    out.push('\n');
    for r in &trace.rows {
        let _ = write!(
            out,
            "{},{},{},{},{},",
            r.t,
            r.m,
            format_float(r.f_bar),
            format_float(r.grad_norm_sq),
            format_float(r.consensus_err)
        );
        push_opt(&mut out, r.track_err);
        out.push(',');
        push_opt(&mut out, r.eta_t);
        out.push(',');
        push_opt(&mut out, r.u_t);
        out.push('\n');
    }
    out
}

/// Parses CSV produced by [`write_trace`]. The kernel is not stored in the
/// file and must be supplied.
pub fn parse_trace(text: &str, kernel: Kernel) -> Result<Trace, CsvError> {
    let mut lines = text.lines();
    if lines.next() != Some(TRACE_HEADER) {
        return Err(CsvError::Header);
    }
    let mut trace = Trace::new(kernel);
    for (k, line) in lines.enumerate() {
        let line_no = k + 2;
        let err = |message: String| CsvError::Row { line: line_no, message };
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 8 {
            return Err(err(format!("expected 8 fields, got {}", fields.len())));
        }
        let int = |s: &str| s.parse::<u64>().map_err(|e| err(format!("{s:?}: {e}")));
        let float = |s: &str| s.parse::<f64>().map_err(|e| err(format!("{s:?}: {e}")));
        let opt = |s: &str| if s.is_empty() { Ok(None) } else { float(s).map(Some) };
        let row = TraceRow {
            t: int(fields[0])?,
            m: int(fields[1])?,
            f_bar: float(fields[2])?,
            grad_norm_sq: float(fields[3])?,
            consensus_err: float(fields[4])?,
            track_err: opt(fields[5])?,
            eta_t: opt(fields[6])?,
            u_t: opt(fields[7])?,
        };
        if trace.last().is_some_and(|last| last.t >= row.t) {
            return Err(err("t is not strictly increasing".into()));
        }
        trace.push(row);
    }
    Ok(trace)
}

const METRICS: [&str; 4] = ["f_bar", "grad_norm_sq", "consensus_err", "track_err"];

pub fn write_summary(rows: &[SummaryRow]) -> String {
    let mut out = String::from("t,m");
    for m in METRICS {
        let _ = write!(out, ",{m}_mean,{m}_min,{m}_max");
    }
    out.push('\n');
    let push_env = |out: &mut String, e: Option<Envelope>| match e {
        Some(e) => {
            let _ = write!(
                out,
                ",{},{},{}",
                format_float(e.mean),
                format_float(e.min),
                format_float(e.max)
            );
        }
        None => out.push_str(",,,"),
    };
    for r in rows {
        let _ = write!(out, "{},{}", r.t, r.m);
        push_env(&mut out, Some(r.f_bar));
        push_env(&mut out, Some(r.grad_norm_sq));
        push_env(&mut out, Some(r.consensus_err));
        push_env(&mut out, r.track_err);
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn float_format_round_trips() {
        for x in [0.0, -0.0, 1.0, 0.1, 1.0 / 3.0, 1e-300, 5e-324, 1.7976931348623157e308, 1e16, 9.999e15, 1e-5, 9.9e-6] {
            let s = format_float(x);
            assert_eq!(s.parse::<f64>().unwrap().to_bits(), x.to_bits(), "{s}");
        }
        assert_eq!(format_float(0.02), "0.02");
        assert_eq!(format_float(1e-7), "1e-7");
        assert_eq!(format_float(3.0), "3");
    }

    #[test]
    fn alg1_track_column_is_empty() {
        let mut trace = Trace::new(Kernel::Alg1);
        trace.push(TraceRow {
            t: 0,
            m: 0,
            f_bar: 1.5,
            grad_norm_sq: 0.25,
            consensus_err: 0.0,
            track_err: None,
            eta_t: None,
            u_t: None,
        });
        trace.push(TraceRow {
            t: 1,
            m: 2,
            f_bar: 1.25,
            grad_norm_sq: 0.125,
            consensus_err: 1e-9,
            track_err: None,
            eta_t: Some(0.02),
            u_t: Some(4.0),
        });
        let text = write_trace(&trace);
        assert_eq!(text, format!("{TRACE_HEADER}\n0,0,1.5,0.25,0,,,\n1,2,1.25,0.125,1e-9,,0.02,4\n"));
        assert_eq!(parse_trace(&text, Kernel::Alg1).unwrap(), trace);
    }

    #[test]
    fn rejects_bad_header() {
        assert_eq!(parse_trace("t,m\n", Kernel::Alg1), Err(CsvError::Header));
    }
}
