//! CSV and JSON emission of sweep records.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::config::ExperimentConfig;
use super::pipeline::SweepRecord;
use crate::error::{Error, Result};

pub const TOOL_NAME: &str = "wiretap";
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

/// The JSON document: records plus the config that produced them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepDocument {
    pub tool: String,
    pub version: String,
    pub config: Option<ExperimentConfig>,
    pub records: Vec<SweepRecord>,
}

impl SweepDocument {
    pub fn new(config: Option<ExperimentConfig>, records: Vec<SweepRecord>) -> Self {
        Self {
            tool: TOOL_NAME.to_string(),
            version: TOOL_VERSION.to_string(),
            config,
            records,
        }
    }
}

/// `%.12g`-style formatting.
pub fn format_sig(x: f64) -> String {
    const DIGITS: i32 = 12;
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return if x.is_nan() {
            "nan".into()
        } else if x > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        };
    }
    let sci = format!("{:.*e}", (DIGITS - 1) as usize, x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent format");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-4..DIGITS).contains(&exp) {
        let decimals = (DIGITS - 1 - exp).max(0) as usize;
        trim_zeros(format!("{:.*}", decimals, x))
    } else {
        let m = trim_zeros(mantissa.to_string());
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{m}e{sign}{:02}", exp.abs())
    }
}

fn trim_zeros(s: String) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

fn opt(x: Option<f64>) -> String {
    x.map(format_sig).unwrap_or_default()
}

/// Writes the CSV table: `P0, rs_gaussian, rs_finite_no_pc, rs_finite_pc`, then
/// `q_g_i` and `q_pc_i` columns.
pub fn write_csv<W: Write>(records: &[SweepRecord], mut out: W) -> std::io::Result<()> {
    let l = records.first().map_or(0, |r| r.q_gaussian.len());
    let has_pc = records.first().is_some_and(|r| r.q_finite_pc.is_some());
    let mut header = vec![
        "P0".to_string(),
        "rs_gaussian".into(),
        "rs_finite_no_pc".into(),
        "rs_finite_pc".into(),
    ];
    header.extend((1..=l).map(|i| format!("q_g_{i}")));
    if has_pc {
        header.extend((1..=l).map(|i| format!("q_pc_{i}")));
    }
    writeln!(out, "{}", header.join(","))?;
    for r in records {
        let mut row = vec![
            format_sig(r.p0),
            opt(r.rs_gaussian),
            opt(r.rs_finite_no_pc),
            opt(r.rs_finite_pc),
        ];
        row.extend(r.q_gaussian.iter().map(|&q| format_sig(q)));
        if has_pc {
            match &r.q_finite_pc {
                Some(q) => row.extend(q.iter().map(|&q| format_sig(q))),
                None => row.extend(std::iter::repeat_n(String::new(), l)),
            }
        }
        writeln!(out, "{}", row.join(","))?;
    }
    Ok(())
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })
}

fn io_at(path: &Path) -> impl Fn(std::io::Error) -> Error + '_ {
    move |source| Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

pub fn emit_csv(records: &[SweepRecord], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut w = create(path)?;
    write_csv(records, &mut w).map_err(io_at(path))?;
    w.flush().map_err(io_at(path))
}

pub fn write_json<W: Write>(doc: &SweepDocument, mut out: W) -> Result<()> {
    serde_json::to_writer_pretty(&mut out, doc)?;
    writeln!(out).map_err(|source| Error::Io {
        path: "<stream>".into(),
        source,
    })
}

pub fn emit_json(
    records: &[SweepRecord],
    config: Option<&ExperimentConfig>,
    path: impl AsRef<Path>,
) -> Result<()> {
    let path = path.as_ref();
    let doc = SweepDocument::new(config.cloned(), records.to_vec());
    let mut w = create(path)?;
    write_json(&doc, &mut w)?;
    w.flush().map_err(io_at(path))
}

pub fn read_json(path: impl AsRef<Path>) -> Result<SweepDocument> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(io_at(path))?;
    Ok(serde_json::from_str(&text)?)
}
