//! Recordings on disk: a CSV of samples plus a JSON sidecar.
//!
//! CSV columns are `time,sensor_<id>...,event_id,label`. Floats use Rust's
//! shortest round-trip formatting, so a write/read cycle is lossless.

use std::fmt::Write as _;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::schedule::InputSchedule;
use super::sensors::{HealthLabel, SensorRecordings};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecordingSidecar {
    pub format: String,
    pub seed: u64,
    pub config_hash: String,
    pub label: HealthLabel,
    pub sample_rate: f64,
    pub sensor_ids: Vec<u32>,
    pub n_samples: usize,
    pub noise_sigma: f64,
    pub noise_seed: Option<u64>,
    pub schedule: InputSchedule,
}

pub const SIDECAR_FORMAT: &str = "aseshm-recordings/1";

pub fn sidecar_path(csv: &Path) -> PathBuf {
    csv.with_extension("json")
}

pub fn write_recordings(
    csv: &Path,
    rec: &SensorRecordings,
    schedule: &InputSchedule,
    seed: u64,
    config_hash: &str,
) -> Result<()> {
    rec.validate()?;
    let mut out = String::with_capacity(rec.n_samples() * 16 * (rec.n_sensors() + 3));
    out.push_str("time");
    for id in &rec.sensor_ids {
        let _ = write!(out, ",sensor_{id}");
    }
    out.push_str(",event_id,label\n");
    let label = rec.label.as_str();
    for k in 0..rec.n_samples() {
        let _ = write!(out, "{}", k as f64 / rec.sample_rate);
        for c in &rec.channels {
            let _ = write!(out, ",{}", c[k]);
        }
        let _ = writeln!(out, ",{},{label}", rec.event[k]);
    }
    std::fs::write(csv, out)?;

    let sidecar = RecordingSidecar {
        format: SIDECAR_FORMAT.into(),
        seed,
        config_hash: config_hash.into(),
        label: rec.label,
        sample_rate: rec.sample_rate,
        sensor_ids: rec.sensor_ids.clone(),
        n_samples: rec.n_samples(),
        noise_sigma: rec.noise_sigma,
        noise_seed: rec.noise_seed,
        schedule: schedule.clone(),
    };
    let mut f = std::fs::File::create(sidecar_path(csv))?;
    serde_json::to_writer_pretty(&mut f, &sidecar)?;
    f.write_all(b"\n")?;
    Ok(())
}

pub fn read_sidecar(csv: &Path) -> Result<RecordingSidecar> {
    let text = std::fs::read_to_string(sidecar_path(csv))?;
    let sidecar: RecordingSidecar = serde_json::from_str(&text)
        .map_err(|e| Error::Integrity(format!("recording sidecar: {e}")))?;
    if sidecar.format != SIDECAR_FORMAT {
        return Err(Error::Integrity(format!(
            "unexpected sidecar format `{}`",
            sidecar.format
        )));
    }
    Ok(sidecar)
}

pub fn read_recordings(csv: &Path) -> Result<(SensorRecordings, RecordingSidecar)> {
    let sidecar = read_sidecar(csv)?;
    let reader = BufReader::new(std::fs::File::open(csv)?);
    let mut lines = reader.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::Integrity("empty recordings file".into()))??;
    let cols: Vec<&str> = header.split(',').collect();
    let n_sensors = cols.len().saturating_sub(3);
    if cols.len() < 4 || cols[0] != "time" || cols[cols.len() - 2] != "event_id" {
        return Err(Error::Integrity(format!("malformed recordings header `{header}`")));
    }
    if n_sensors != sidecar.sensor_ids.len() {
        return Err(Error::Integrity("sidecar sensor count differs from CSV".into()));
    }
    let mut channels = vec![Vec::with_capacity(sidecar.n_samples); n_sensors];
    let mut event = Vec::with_capacity(sidecar.n_samples);
    for (ln, line) in lines.enumerate() {
        let line = line?;
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != cols.len() {
            return Err(Error::Integrity(format!("row {} has {} fields", ln + 2, fields.len())));
        }
        let bad = |what: &str| Error::Integrity(format!("row {}: bad {what}", ln + 2));
        for (s, ch) in channels.iter_mut().enumerate() {
            ch.push(fields[1 + s].parse::<f64>().map_err(|_| bad("sample"))?);
        }
        event.push(fields[n_sensors + 1].parse::<usize>().map_err(|_| bad("event id"))?);
        if HealthLabel::parse(fields[n_sensors + 2])? != sidecar.label {
            return Err(bad("label"));
        }
    }
    if event.len() != sidecar.n_samples {
        return Err(Error::Integrity(format!(
            "expected {} samples, found {}",
            sidecar.n_samples,
            event.len()
        )));
    }
    let rec = SensorRecordings {
        sample_rate: sidecar.sample_rate,
        sensor_ids: sidecar.sensor_ids.clone(),
        channels,
        event,
        label: sidecar.label,
        noise_seed: sidecar.noise_seed,
        noise_sigma: sidecar.noise_sigma,
    };
    rec.validate()?;
    Ok((rec, sidecar))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simulator::schedule::make_grid_schedule;

    #[test]
    fn csv_round_trip_is_lossless() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("rec.csv");
        let rec = SensorRecordings {
            sample_rate: 1000.0,
            sensor_ids: vec![1, 3],
            channels: vec![vec![0.1, -2.5e-7, 1.0 / 3.0], vec![4.0, 5.5, f64::EPSILON]],
            event: vec![0, 0, 1],
            label: HealthLabel::Damaged,
            noise_seed: Some(5),
            noise_sigma: 0.01,
        };
        let sched = make_grid_schedule(8.0, 2, 2, 1.0).unwrap();
        write_recordings(&path, &rec, &sched, 11, "abc").unwrap();
        let (back, side) = read_recordings(&path).unwrap();
        assert_eq!(back, rec);
        assert_eq!(side.seed, 11);
        assert_eq!(side.schedule, sched);
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("time,sensor_1,sensor_3,event_id,label\n"));
    }

    #[test]
    fn truncated_csv_is_an_integrity_error() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("rec.csv");
        let rec = SensorRecordings {
            sample_rate: 10.0,
            sensor_ids: vec![1],
            channels: vec![vec![1.0, 2.0]],
            event: vec![0, 0],
            label: HealthLabel::Healthy,
            noise_seed: None,
            noise_sigma: 0.0,
        };
        let sched = make_grid_schedule(8.0, 1, 1, 1.0).unwrap();
        write_recordings(&path, &rec, &sched, 0, "h").unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let cut: String = text.lines().take(2).map(|l| format!("{l}\n")).collect();
        std::fs::write(&path, cut).unwrap();
        assert!(matches!(read_recordings(&path), Err(Error::Integrity(_))));
    }
}
