use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::balance::Wrench;
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    /// Learning script, parameters adapting.
    Learn,
    /// Learning script, parameters frozen early.
    Frozen,
    /// Held-out script, parameters frozen.
    Eval,
}

impl Phase {
    pub fn label(self) -> &'static str {
        match self {
            Phase::Learn => "learn",
            Phase::Frozen => "frozen",
            Phase::Eval => "eval",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "learn" => Ok(Phase::Learn),
            "frozen" => Ok(Phase::Frozen),
            "eval" => Ok(Phase::Eval),
            other => Err(Error::Config(format!("unknown phase {other:?}"))),
        }
    }
}

/// One measurement tick.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TraceRow {
    pub t_ms: u64,
    pub wrench: Wrench,
    pub p: [f64; 3],
    /// Network outputs driving the servos at this tick.
    pub out: [f64; 3],
    pub cost: f64,
    pub phase: Phase,
}

pub const TRACE_HEADER: [&str; 15] = [
    "t_ms", "Fx", "Fy", "Fz", "Mx", "My", "Mz", "px", "py", "pz", "out_x", "out_y", "out_z", "cost", "phase",
];

/// Writes rows with shortest round-trip float formatting, so reading the file
/// back gives the same values bit for bit.
pub fn write_trace<W: Write>(w: W, rows: &[TraceRow]) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(TRACE_HEADER)?;
    for r in rows {
        let w = &r.wrench;
        let nums = [w.fx, w.fy, w.fz, w.mx, w.my, w.mz, r.p[0], r.p[1], r.p[2], r.out[0], r.out[1], r.out[2], r.cost];
        let mut rec = Vec::with_capacity(15);
        rec.push(r.t_ms.to_string());
        rec.extend(nums.iter().map(|v| v.to_string()));
        rec.push(r.phase.label().to_string());
        out.write_record(&rec)?;
    }
    out.flush().map_err(|e| Error::io("trace", e))?;
    Ok(())
}

pub fn read_trace<R: Read>(r: R) -> Result<Vec<TraceRow>> {
    let mut rdr = csv::Reader::from_reader(r);
    let header: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    if header != TRACE_HEADER {
        return Err(Error::Config(format!("unexpected trace header {header:?}")));
    }
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let num = |i: usize| -> Result<f64> {
            rec[i]
                .parse()
                .map_err(|_| Error::Config(format!("bad number {:?} in column {}", &rec[i], TRACE_HEADER[i])))
        };
        let t_ms = rec[0]
            .parse()
            .map_err(|_| Error::Config(format!("bad time {:?}", &rec[0])))?;
        rows.push(TraceRow {
            t_ms,
            wrench: Wrench::from_parts([num(1)?, num(2)?, num(3)?], [num(4)?, num(5)?, num(6)?]),
            p: [num(7)?, num(8)?, num(9)?],
            out: [num(10)?, num(11)?, num(12)?],
            cost: num(13)?,
            phase: Phase::parse(&rec[14])?,
        });
    }
    Ok(rows)
}

/// One parameter write by the learner.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParamChange {
    pub iteration: u64,
    /// Time the new parameters took effect.
    pub t_ms: u64,
    /// Euclidean distance between the old and new parameter vectors.
    pub delta_norm: f64,
    pub gradient_norm: f64,
}

pub fn write_param_log<W: Write>(w: W, log: &[ParamChange]) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    for row in log {
        out.serialize(row)?;
    }
    if log.is_empty() {
        out.write_record(["iteration", "t_ms", "delta_norm", "gradient_norm"])?;
    }
    out.flush().map_err(|e| Error::io("parameter log", e))?;
    Ok(())
}

pub fn read_param_log<R: Read>(r: R) -> Result<Vec<ParamChange>> {
    let mut rdr = csv::Reader::from_reader(r);
    Ok(rdr.deserialize().collect::<std::result::Result<_, _>>()?)
}
