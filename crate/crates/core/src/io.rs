//! File formats: JSON documents carrying a units header, and CSV tables
//! with numbers written as `{:.12e}`.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::{de::DeserializeOwned, Deserialize, Serialize};

use crate::dynamics::PulseSequence;
use crate::error::Result;
use crate::optimizer::{LogEntry, PhaseWaveform, ScanPoint};

/// Every physical quantity is in units of the interaction, `V = 1`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Units {
    pub energy: String,
    pub time: String,
    /// `V/2π` in MHz, when a lab scale was requested for display.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub v_over_2pi_mhz: Option<f64>,
}

impl Default for Units {
    fn default() -> Self {
        Self { energy: "V".into(), time: "1/V".into(), v_over_2pi_mhz: None }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SequenceFile {
    #[serde(default)]
    pub units: Units,
    pub segments: PulseSequence,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum SequenceRepr {
    File(SequenceFile),
    Bare(PulseSequence),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WaveformFile {
    #[serde(default)]
    pub units: Units,
    #[serde(flatten)]
    pub waveform: PhaseWaveform,
}

pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut out, value)?;
    out.write_all(b"\n")?;
    out.flush()?;
    Ok(())
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    Ok(serde_json::from_reader(std::io::BufReader::new(File::open(path)?))?)
}

pub fn write_sequence(path: &Path, seq: &PulseSequence) -> Result<()> {
    write_json(path, &SequenceFile { units: Units::default(), segments: seq.clone() })
}

/// Accepts `{"units": .., "segments": [..]}` or a bare step array.
pub fn read_sequence(path: &Path) -> Result<PulseSequence> {
    Ok(match read_json::<SequenceRepr>(path)? {
        SequenceRepr::File(f) => f.segments,
        SequenceRepr::Bare(s) => s,
    })
}

pub fn write_waveform(path: &Path, w: &PhaseWaveform) -> Result<()> {
    write_json(path, &WaveformFile { units: Units::default(), waveform: w.clone() })
}

pub fn read_waveform(path: &Path) -> Result<PhaseWaveform> {
    let w = read_json::<WaveformFile>(path)?.waveform;
    w.validate()?;
    Ok(w)
}

pub fn format_number(x: f64) -> String {
    format!("{x:.12e}")
}

/// CSV with a header row; `None` cells are left empty.
pub fn write_table<I>(path: &Path, header: &[&str], rows: I) -> Result<()>
where
    I: IntoIterator<Item = Vec<Option<f64>>>,
{
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(header)?;
    for row in rows {
        w.write_record(row.iter().map(|c| c.map(format_number).unwrap_or_default()))?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_scan(path: &Path, scan: &[ScanPoint]) -> Result<()> {
    write_table(
        path,
        &["param_frac_error", "infidelity"],
        scan.iter().map(|p| vec![Some(p.param_frac_error), Some(p.infidelity)]),
    )
}

/// `iter,objective,grad_norm`
pub fn write_log(path: &Path, log: &[LogEntry]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["iter", "objective", "grad_norm"])?;
    for e in log {
        w.write_record([e.iter.to_string(), format_number(e.objective), format_number(e.grad_norm)])?;
    }
    w.flush()?;
    Ok(())
}
