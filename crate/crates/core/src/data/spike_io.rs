//! Spike trains as `t,channel` event CSVs.

use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};
use crate::spikes::SpikeTensor;

pub fn write_spikes_csv(path: impl AsRef<Path>, spikes: &SpikeTensor) -> Result<()> {
    let path = path.as_ref();
    let mut out = String::from("t,channel\n");
    for (t, n) in spikes.events() {
        out.push_str(&format!("{t},{n}\n"));
    }
    std::fs::File::create(path)
        .and_then(|mut f| f.write_all(out.as_bytes()))
        .map_err(|e| Error::io(path, e))
}

pub fn read_spikes_csv(path: impl AsRef<Path>, horizon: usize, channels: usize) -> Result<SpikeTensor> {
    let path = path.as_ref();
    let csv_err = |reason: String| Error::Csv {
        path: path.to_path_buf(),
        reason,
    };
    let mut reader = csv::Reader::from_path(path).map_err(|e| csv_err(e.to_string()))?;
    let mut events = Vec::new();
    for (row, record) in reader.deserialize::<(usize, usize)>().enumerate() {
        events.push(record.map_err(|e| csv_err(format!("line {}: {e}", row + 2)))?);
    }
    SpikeTensor::from_events(horizon, channels, events)
}
