//! On-disk reuse of coefficient and tau tables.

use std::path::{Path, PathBuf};

use riesz_lab::coeffs::{
    load_exact_table, load_table, multiplicative_sieve, save_exact_table, save_table, CoeffTable,
    ExactTable, LSeriesSpec,
};
use riesz_lab::testbeds::tau_table;
use riesz_lab::Result;
use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Hit,
    Miss,
    Regenerated,
}

#[derive(Debug, Clone, Serialize)]
pub struct Event {
    pub path: PathBuf,
    pub status: Status,
    /// Why a present file was not used.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reason: Option<String>,
}

pub struct Cache {
    dir: PathBuf,
    pub events: Vec<Event>,
}

fn file_stem(label: &str) -> String {
    label
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '.' { c } else { '_' })
        .collect()
}

impl Cache {
    pub fn new(dir: PathBuf) -> Self {
        Self {
            dir,
            events: Vec::new(),
        }
    }

    fn path(&self, label: &str, cutoff: usize) -> PathBuf {
        self.dir.join(format!("{}-{cutoff}.rzc", file_stem(label)))
    }

    fn record(&mut self, path: &Path, existed: bool, reason: Option<String>) {
        let status = match (existed, &reason) {
            (false, _) => Status::Miss,
            (true, None) => Status::Hit,
            (true, Some(_)) => Status::Regenerated,
        };
        if status == Status::Regenerated {
            eprintln!(
                "riesz-lab: cache {} rejected ({}); regenerating",
                path.display(),
                reason.as_deref().unwrap_or("")
            );
        }
        self.events.push(Event {
            path: path.to_path_buf(),
            status,
            reason,
        });
    }

    fn store<T>(&self, path: &Path, value: &T, save: impl Fn(&T, &Path) -> Result<()>) -> Result<()> {
        std::fs::create_dir_all(&self.dir)?;
        save(value, path)
    }

    /// Table for `spec` up to `cutoff`, from disk when label and cutoff
    /// match and the checksum verifies.
    pub fn table(&mut self, spec: &LSeriesSpec, cutoff: usize) -> Result<CoeffTable> {
        let path = self.path(&spec.label, cutoff);
        let existed = path.exists();
        let mut reason = None;
        if existed {
            match load_table(&path) {
                Ok(t) if t.source_label == spec.label && t.cutoff() == cutoff => {
                    self.record(&path, true, None);
                    return Ok(t);
                }
                Ok(t) => reason = Some(format!("holds {} to {}", t.source_label, t.cutoff())),
                Err(e) => reason = Some(e.code().to_string()),
            }
        }
        let t = multiplicative_sieve(spec, cutoff)?;
        self.record(&path, existed, reason);
        self.store(&path, &t, |t, p| save_table(t, p))?;
        Ok(t)
    }

    pub fn tau(&mut self, n: usize, cap: usize) -> Result<Vec<i128>> {
        let path = self.path("tau", n);
        let existed = path.exists();
        let mut reason = None;
        if existed {
            match load_exact_table(&path) {
                Ok(t) if t.label == "tau" && t.values.len() == n => {
                    self.record(&path, true, None);
                    return Ok(t.values);
                }
                Ok(_) => reason = Some("wrong contents".to_string()),
                Err(e) => reason = Some(e.code().to_string()),
            }
        }
        let values = tau_table(n, cap)?;
        self.record(&path, existed, reason);
        let t = ExactTable {
            label: "tau".into(),
            values,
        };
        self.store(&path, &t, |t, p| save_exact_table(t, p))?;
        Ok(t.values)
    }
}
