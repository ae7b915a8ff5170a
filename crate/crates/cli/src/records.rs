//! Line-delimited JSON sample files: one header record, then one record per
//! point.

use std::io::{BufRead, Write};

use anyhow::{bail, Context, Result};
use padicslice::padic::ScalarRecord;
use padicslice::{Ambient, PadicContext, SampleBatch, VarietySpec};
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Header {
    pub variety: String,
    pub ambient: Ambient,
    pub variables: Vec<String>,
    pub prime: u64,
    pub precision: u32,
    pub seed: u64,
    pub workers: u32,
    pub count: u64,
    pub support_radius: u32,
    pub bound: f64,
    pub slices_tried: u64,
    pub slices_accepted: u64,
    pub resamples: u64,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PointRecord {
    pub worker: u32,
    pub slice: u64,
    pub coords: Vec<ScalarRecord>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum Record {
    Header(Header),
    Point(PointRecord),
}

pub fn write_batch(
    out: &mut dyn Write,
    ctx: &PadicContext,
    spec: &VarietySpec,
    batch: &SampleBatch,
    support_radius: u32,
) -> Result<()> {
    let header = Header {
        variety: spec.name().to_string(),
        ambient: spec.ambient(),
        variables: spec.system().variables().to_vec(),
        prime: ctx.prime(),
        precision: ctx.precision(),
        seed: batch.seed,
        workers: batch.workers,
        count: batch.points.len() as u64,
        support_radius,
        bound: batch.bound,
        slices_tried: batch.slices_tried,
        slices_accepted: batch.slices_accepted,
        resamples: batch.resamples,
    };
    serde_json::to_writer(&mut *out, &Record::Header(header))?;
    writeln!(out)?;
    for pt in &batch.points {
        let rec = PointRecord {
            worker: pt.worker,
            slice: pt.slice,
            coords: pt.coords.iter().map(|c| ctx.encode(c)).collect(),
        };
        serde_json::to_writer(&mut *out, &Record::Point(rec))?;
        writeln!(out)?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_batch(input: impl BufRead) -> Result<(Header, Vec<PointRecord>)> {
    let mut header = None;
    let mut points = Vec::new();
    for (i, line) in input.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: Record = serde_json::from_str(&line).with_context(|| format!("line {}: malformed record", i + 1))?;
        match rec {
            Record::Header(h) if header.is_none() => header = Some(h),
            Record::Header(_) => bail!("line {}: second header record", i + 1),
            Record::Point(p) => points.push(p),
        }
    }
    let header = header.context("sample file has no header record")?;
    Ok((header, points))
}
