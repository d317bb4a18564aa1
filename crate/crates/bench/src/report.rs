use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::config::ExperimentConfig;
use crate::error::{BenchError, Result};
use crate::pipeline::InstanceRow;

pub const CODE_VERSION: &str = concat!(env!("CARGO_PKG_NAME"), " ", env!("CARGO_PKG_VERSION"));

/// Sample mean and population standard deviation.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Stat {
    pub mean: f64,
    pub std: f64,
}

impl Stat {
    pub fn of(values: impl IntoIterator<Item = f64>) -> Self {
        let values: Vec<f64> = values.into_iter().collect();
        if values.is_empty() {
            return Self::default();
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
        Self { mean, std: var.sqrt() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoiseLevelSummary {
    pub noise_sigma: f64,
    pub instances: usize,
    pub accuracy: Stat,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Aggregates {
    pub instances: usize,
    pub accuracy: Stat,
    pub objective: Stat,
    pub binary_score: Stat,
    pub iterations: Stat,
    /// In order of first appearance in the rows.
    pub per_noise: Vec<NoiseLevelSummary>,
}

impl Aggregates {
    pub fn from_rows(rows: &[InstanceRow]) -> Self {
        let mut levels: Vec<f64> = Vec::new();
        for r in rows {
            if !levels.contains(&r.noise_sigma) {
                levels.push(r.noise_sigma);
            }
        }
        let per_noise = levels
            .into_iter()
            .map(|sigma| {
                let acc: Vec<f64> = rows
                    .iter()
                    .filter(|r| r.noise_sigma == sigma)
                    .map(|r| r.accuracy)
                    .collect();
                NoiseLevelSummary {
                    noise_sigma: sigma,
                    instances: acc.len(),
                    accuracy: Stat::of(acc),
                }
            })
            .collect();
        Self {
            instances: rows.len(),
            accuracy: Stat::of(rows.iter().map(|r| r.accuracy)),
            objective: Stat::of(rows.iter().map(|r| r.objective)),
            binary_score: Stat::of(rows.iter().map(|r| r.binary_score)),
            iterations: Stat::of(rows.iter().map(|r| r.iterations as f64)),
            per_noise,
        }
    }
}

/// Timing varies between runs and is kept apart from the reproducible parts.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub wall_time_s: Stat,
    pub total_s: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub version: String,
    pub config: ExperimentConfig,
    pub aggregates: Aggregates,
    pub timing: Timing,
    #[serde(skip)]
    pub rows: Vec<InstanceRow>,
}

impl RunReport {
    pub fn new(config: ExperimentConfig, rows: Vec<InstanceRow>) -> Self {
        let times: Vec<f64> = rows.iter().map(|r| r.wall_time_s).collect();
        Self {
            version: CODE_VERSION.to_string(),
            config,
            aggregates: Aggregates::from_rows(&rows),
            timing: Timing {
                wall_time_s: Stat::of(times.iter().copied()),
                total_s: times.iter().sum(),
            },
            rows,
        }
    }

    pub fn mean_accuracy(&self) -> f64 {
        self.aggregates.accuracy.mean
    }

    pub fn write_rows<W: Write>(&self, out: W) -> Result<()> {
        write_rows(&self.rows, out)
    }

    pub fn rows_csv(&self) -> Result<String> {
        let mut buf = Vec::new();
        self.write_rows(&mut buf)?;
        Ok(String::from_utf8(buf).expect("csv output is utf-8"))
    }

    pub fn summary_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Writes rows and summary to the configured paths; rows go to `stdout`
    /// when no path is set.
    pub fn emit<W: Write>(&self, stdout: W) -> Result<()> {
        match &self.config.output.rows {
            Some(path) => write_file(path, self.rows_csv()?.as_bytes())?,
            None => self.write_rows(stdout)?,
        }
        if let Some(path) = &self.config.output.summary {
            write_file(path, self.summary_json()?.as_bytes())?;
        }
        Ok(())
    }
}

pub fn write_rows<W: Write>(rows: &[InstanceRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush().map_err(|e| BenchError::Io {
        path: "<rows>".into(),
        source: e,
    })?;
    Ok(())
}

pub fn read_rows(text: &str) -> Result<Vec<InstanceRow>> {
    let mut rdr = csv::Reader::from_reader(text.as_bytes());
    rdr.deserialize().map(|r| r.map_err(Into::into)).collect()
}

pub(crate) fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| BenchError::io(dir, e))?;
    }
    std::fs::write(path, bytes).map_err(|e| BenchError::io(path, e))
}
