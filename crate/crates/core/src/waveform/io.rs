//! CSV forms of waveforms. Numbers use shortest round-trip formatting so a
//! write/read cycle reproduces every value bit for bit.

use std::fs;
use std::io::{BufRead, BufReader};
use std::path::Path;

use super::builder::Waveform;
use super::timing::TimedWaveform;
use crate::error::{Error, Result};
use crate::potential::Vec3;

fn fmt(v: f64) -> String {
    format!("{v:e}")
}

fn voltage_headers(n: usize) -> impl Iterator<Item = String> {
    (1..=n).map(|i| format!("V_{i}"))
}

fn parse(path: &Path, line: usize, tok: &str) -> Result<f64> {
    tok.trim().parse::<f64>().map_err(|e| Error::Parse {
        path: path.to_path_buf(),
        line,
        msg: format!("{tok:?}: {e}"),
    })
}

/// Columns `position_x,position_y,position_z,V_1..V_N`.
pub fn write_waveform(w: &Waveform, path: impl AsRef<Path>) -> Result<()> {
    let mut out = csv::Writer::from_path(path.as_ref())?;
    let mut header = vec![
        "position_x".to_string(),
        "position_y".to_string(),
        "position_z".to_string(),
    ];
    header.extend(voltage_headers(w.n_electrodes()));
    out.write_record(&header)?;
    for (p, row) in w.positions.iter().zip(&w.steps) {
        let rec = [p.x, p.y, p.z].into_iter().chain(row.iter().copied()).map(fmt);
        out.write_record(rec)?;
    }
    out.flush().map_err(|e| Error::io(path.as_ref(), e))
}

pub fn read_waveform(path: impl AsRef<Path>) -> Result<Waveform> {
    let path = path.as_ref();
    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_path(path)?;
    let header = rdr.headers()?.clone();
    if header.len() < 4 || &header[0] != "position_x" {
        return Err(Error::Parse {
            path: path.to_path_buf(),
            line: 1,
            msg: "expected position_x,position_y,position_z,V_1.. header".into(),
        });
    }
    let names: Vec<String> = header.iter().skip(3).map(str::to_string).collect();
    let mut positions = Vec::new();
    let mut steps = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let vals = rec
            .iter()
            .map(|t| parse(path, i + 2, t))
            .collect::<Result<Vec<_>>>()?;
        positions.push(Vec3::new(vals[0], vals[1], vals[2]));
        steps.push(vals[3..].to_vec());
    }
    Waveform::from_rows(names, positions, steps)
}

/// `# R_DAC = <Hz>` comment, then columns `t,V_1..V_N`.
pub fn write_timed(tw: &TimedWaveform, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut text = format!("# R_DAC = {}\n", fmt(tw.rate));
    let mut out = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["t".to_string()];
    header.extend(voltage_headers(tw.n_electrodes()));
    out.write_record(&header)?;
    for (m, row) in tw.samples.iter().enumerate() {
        let rec = std::iter::once(tw.time(m)).chain(row.iter().copied()).map(fmt);
        out.write_record(rec)?;
    }
    let bytes = out.into_inner().map_err(|e| Error::invalid(e.to_string()))?;
    text.push_str(&String::from_utf8_lossy(&bytes));
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn read_timed(path: impl AsRef<Path>) -> Result<TimedWaveform> {
    let path = path.as_ref();
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut first = String::new();
    BufReader::new(file)
        .read_line(&mut first)
        .map_err(|e| Error::io(path, e))?;
    let rate = first
        .trim()
        .strip_prefix('#')
        .and_then(|s| s.trim().strip_prefix("R_DAC"))
        .and_then(|s| s.trim().strip_prefix('='))
        .ok_or_else(|| Error::Parse {
            path: path.to_path_buf(),
            line: 1,
            msg: "expected `# R_DAC = <Hz>`".into(),
        })?;
    let rate = parse(path, 1, rate)?;
    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_path(path)?;
    let names: Vec<String> = rdr.headers()?.iter().skip(1).map(str::to_string).collect();
    let mut samples = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let row = rec
            .iter()
            .skip(1)
            .map(|t| parse(path, i + 3, t))
            .collect::<Result<Vec<_>>>()?;
        samples.push(row);
    }
    TimedWaveform::new(names, samples, rate)
}
