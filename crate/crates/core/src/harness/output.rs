//! CSV output.
//!
//! Metric files have the columns
//! `label,config_hash,seed,t,episodes_completed,cum_mean_reward,cum_mean_river_steps,cum_mean_path_length`,
//! one row per trial and sampled step. Floats are written with Rust's
//! shortest round-trip formatting; undefined means are `NaN`.

use std::fs::File;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::harness::sweep::BestChoice;
use crate::harness::trial::{StepEvent, TrialResult};

pub const METRIC_COLUMNS: [&str; 8] = [
    "label",
    "config_hash",
    "seed",
    "t",
    "episodes_completed",
    "cum_mean_reward",
    "cum_mean_river_steps",
    "cum_mean_path_length",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CsvRow {
    pub label: String,
    pub config_hash: String,
    pub seed: u64,
    pub t: u64,
    pub episodes_completed: u64,
    pub cum_mean_reward: f64,
    pub cum_mean_river_steps: f64,
    pub cum_mean_path_length: f64,
}

fn csv_err(path: &Path) -> impl FnOnce(csv::Error) -> Error + '_ {
    move |source| Error::Csv {
        path: path.to_path_buf(),
        source,
    }
}

fn create(path: &Path) -> Result<File> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    File::create(path).map_err(|e| Error::io(path, e))
}

pub fn write_csv(results: &[TrialResult], path: &Path) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .from_writer(create(path)?);
    w.write_record(METRIC_COLUMNS).map_err(csv_err(path))?;
    for r in results {
        for row in &r.rows {
            w.serialize(CsvRow {
                label: r.label.clone(),
                config_hash: r.config_hash.clone(),
                seed: r.seed,
                t: row.t,
                episodes_completed: row.episodes_completed,
                cum_mean_reward: row.cum_mean_reward,
                cum_mean_river_steps: row.cum_mean_river_steps,
                cum_mean_path_length: row.cum_mean_path_length,
            })
            .map_err(csv_err(path))?;
        }
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_csv(path: &Path) -> Result<Vec<CsvRow>> {
    let mut r = csv::Reader::from_path(path).map_err(csv_err(path))?;
    let headers = r.headers().map_err(csv_err(path))?.clone();
    if headers.iter().ne(METRIC_COLUMNS) {
        return Err(Error::Parse {
            path: path.to_path_buf(),
            message: format!("unexpected header {headers:?}"),
        });
    }
    r.deserialize()
        .map(|row| row.map_err(csv_err(path)))
        .collect()
}

/// Best-per-method table of a sweep.
pub fn write_best_csv(best: &[BestChoice], labels: &[String], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_writer(create(path)?);
    w.write_record([
        "method",
        "label",
        "config_hash",
        "seeds",
        "mean_reward",
        "se_reward",
        "mean_river_steps",
        "mean_path_length",
    ])
    .map_err(csv_err(path))?;
    for b in best {
        w.write_record([
            b.method.clone(),
            labels.get(b.config_index).cloned().unwrap_or_default(),
            b.config_hash.clone(),
            b.seeds.to_string(),
            b.mean_reward.to_string(),
            b.se_reward.to_string(),
            b.mean_river_steps.to_string(),
            b.mean_path_length.to_string(),
        ])
        .map_err(csv_err(path))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Per-step trace: `t,obs,mask,pathways_hash,action,reward`. Missing
/// components print as `?`; the mask is `x y color` as 0/1 digits.
pub struct TraceWriter<W: Write> {
    out: W,
}

impl<W: Write> TraceWriter<W> {
    pub fn new(mut out: W) -> std::io::Result<Self> {
        writeln!(out, "t,obs,mask,pathways_hash,action,reward")?;
        Ok(TraceWriter { out })
    }

    pub fn record(&mut self, ev: &StepEvent<'_>) -> std::io::Result<()> {
        let o = ev.observation;
        let show = |v: Option<String>| v.unwrap_or_else(|| "?".into());
        let obs = format!(
            "{}:{}:{}",
            show(o.x.map(|x| x.to_string())),
            show(o.y.map(|y| y.to_string())),
            show(o.color.map(|c| format!("{c:?}").to_lowercase()))
        );
        let m = o.mask();
        let mask = format!("{}{}{}", m.x as u8, m.y as u8, m.color as u8);
        let mut h = Sha256::new();
        for s in ev.agent.ensemble().states() {
            h.update([s.x as u8, s.y as u8, s.color.index() as u8]);
        }
        let digest = hex::encode(&h.finalize()[..8]);
        writeln!(
            self.out,
            "{},{obs},{mask},{digest},{},{}",
            ev.t, ev.action, ev.outcome.reward
        )
    }

    pub fn into_inner(self) -> W {
        self.out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::metrics::{MetricRow, Summary};

    fn fake(seed: u64, n: u64) -> TrialResult {
        TrialResult {
            label: "m".into(),
            method: "m".into(),
            config_hash: "abc".into(),
            seed,
            steps: n * 10,
            rows: (1..=n)
                .map(|i| MetricRow {
                    t: i * 10,
                    episodes_completed: i - 1,
                    cum_mean_reward: if i == 1 {
                        f64::NAN
                    } else {
                        0.1 * i as f64 - 1.0 / 3.0
                    },
                    cum_mean_river_steps: 1e-17 * i as f64,
                    cum_mean_path_length: 12.5,
                })
                .collect(),
            summary: Summary {
                episodes: n - 1,
                mean_reward: 0.0,
                mean_river_steps: 0.0,
                mean_path_length: 0.0,
            },
            fallbacks: 0,
            wall_clock: Default::default(),
        }
    }

    #[test]
    fn header_only_for_empty_results() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("m.csv");
        write_csv(&[], &p).unwrap();
        assert_eq!(
            std::fs::read_to_string(&p).unwrap(),
            METRIC_COLUMNS.join(",") + "\n"
        );
        assert!(read_csv(&p).unwrap().is_empty());
    }

    #[test]
    fn row_count_and_exact_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("nested/m.csv");
        let results = vec![fake(1, 3), fake(2, 3)];
        write_csv(&results, &p).unwrap();
        let rows = read_csv(&p).unwrap();
        assert_eq!(rows.len(), 6);
        for (row, want) in rows.iter().zip(results.iter().flat_map(|r| r.rows.iter())) {
            assert_eq!(row.t, want.t);
            assert_eq!(
                row.cum_mean_reward.to_bits(),
                want.cum_mean_reward.to_bits()
            );
            assert_eq!(
                row.cum_mean_river_steps.to_bits(),
                want.cum_mean_river_steps.to_bits()
            );
        }
    }

    #[test]
    fn unwritable_path_names_the_path() {
        let dir = tempfile::tempdir().unwrap();
        let blocker = dir.path().join("file");
        std::fs::write(&blocker, "x").unwrap();
        let err = write_csv(&[], &blocker.join("m.csv")).unwrap_err();
        assert!(err.to_string().contains("file"), "{err}");
    }
}
