//! On-disk layout:
//!
//! ```text
//! <root>/index.json            names and files of all matrices
//! <root>/matrices/<name>.json  one MatrixRecord each
//! <root>/jobs/<id>/job.json    JobRecord
//! <root>/jobs/<id>/trace.json  verified trace
//! <root>/jobs/<id>/frames/     rendered frames and plan.json
//! ```
//!
//! Every write goes to a temporary file, is synced, then renamed over the
//! target, so a record is either the old or the new version.

use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use log::warn;
use matrixlens_core::calctrace::{OpKind, TraceResult};
use matrixlens_core::MatrixValue;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Source {
    Drawn,
    Photo,
    #[default]
    Edited,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MatrixRecord {
    pub name: String,
    pub value: MatrixValue,
    /// Seconds since the Unix epoch.
    pub created_at: u64,
    pub source: Source,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum JobState {
    Queued,
    Rendering,
    Done,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct JobRecord {
    pub id: u64,
    pub mode: OpKind,
    pub operands: Vec<String>,
    pub state: JobState,
    pub result: Option<TraceResult>,
    pub frame_count: Option<usize>,
    /// Paths relative to the workspace root.
    pub artifacts: BTreeMap<String, String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub message: Option<String>,
    pub created_at: u64,
}

#[derive(Debug, Serialize, Deserialize)]
struct IndexEntry {
    name: String,
    file: String,
    rows: usize,
    cols: usize,
}

pub fn now() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs())
}

/// Letters, digits, `_` and `-`; 1 to 64 characters.
pub fn valid_name(name: &str) -> bool {
    (1..=64).contains(&name.len()) && name.bytes().all(|b| b.is_ascii_alphanumeric() || b == b'_' || b == b'-')
}

/// Replace `path` with `bytes` via a synced temporary file.
pub fn write_durable(path: &Path, bytes: &[u8]) -> io::Result<()> {
    let dir = path.parent().unwrap_or(Path::new("."));
    fs::create_dir_all(dir)?;
    let tmp = path.with_extension("tmp");
    {
        let mut f = File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)?;
    #[cfg(unix)]
    File::open(dir)?.sync_all()?;
    Ok(())
}

#[derive(Debug, Default)]
pub struct Loaded {
    pub matrices: BTreeMap<String, MatrixRecord>,
    pub jobs: BTreeMap<u64, JobRecord>,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone)]
pub struct Workspace {
    root: PathBuf,
}

impl Workspace {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        Self { root: root.into() }
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn matrix_path(&self, name: &str) -> PathBuf {
        self.root.join("matrices").join(format!("{name}.json"))
    }

    pub fn job_dir(&self, id: u64) -> PathBuf {
        self.root.join("jobs").join(id.to_string())
    }

    pub fn save_matrix(&self, rec: &MatrixRecord) -> io::Result<()> {
        write_durable(&self.matrix_path(&rec.name), &serde_json::to_vec_pretty(rec).expect("record serializes"))
    }

    pub fn save_index<'a>(&self, records: impl Iterator<Item = &'a MatrixRecord>) -> io::Result<()> {
        let entries: Vec<IndexEntry> = records
            .map(|r| IndexEntry {
                name: r.name.clone(),
                file: format!("matrices/{}.json", r.name),
                rows: r.value.rows(),
                cols: r.value.cols(),
            })
            .collect();
        write_durable(&self.root.join("index.json"), &serde_json::to_vec_pretty(&entries).expect("index serializes"))
    }

    pub fn save_job(&self, job: &JobRecord) -> io::Result<()> {
        write_durable(&self.job_dir(job.id).join("job.json"), &serde_json::to_vec_pretty(job).expect("job serializes"))
    }

    /// Read everything back. Unreadable records are skipped with a warning.
    pub fn load(&self) -> io::Result<Loaded> {
        fs::create_dir_all(self.root.join("matrices"))?;
        fs::create_dir_all(self.root.join("jobs"))?;
        let mut out = Loaded::default();
        let warn_skip = |out: &mut Loaded, msg: String| {
            warn!("{msg}");
            out.warnings.push(msg);
        };

        let mut files: Vec<PathBuf> = fs::read_dir(self.root.join("matrices"))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "json"))
            .collect();
        files.sort();
        for path in files {
            let parsed = fs::read(&path)
                .map_err(|e| e.to_string())
                .and_then(|b| serde_json::from_slice::<MatrixRecord>(&b).map_err(|e| e.to_string()));
            match parsed {
                Ok(rec) if path.file_stem().is_some_and(|s| *s == *rec.name) && valid_name(&rec.name) => {
                    out.matrices.insert(rec.name.clone(), rec);
                }
                Ok(rec) => warn_skip(&mut out, format!("skipping {}: name '{}' does not match file", path.display(), rec.name)),
                Err(e) => warn_skip(&mut out, format!("skipping corrupt record {}: {e}", path.display())),
            }
        }

        if let Ok(bytes) = fs::read(self.root.join("index.json")) {
            match serde_json::from_slice::<Vec<IndexEntry>>(&bytes) {
                Ok(index) => {
                    let missing: Vec<String> = index.into_iter().map(|e| e.name).filter(|n| !out.matrices.contains_key(n)).collect();
                    for name in missing {
                        warn_skip(&mut out, format!("matrix '{name}' is in the index but its record is missing or unreadable"));
                    }
                }
                Err(e) => warn_skip(&mut out, format!("ignoring unreadable index.json: {e}")),
            }
        }

        let mut dirs: Vec<PathBuf> = fs::read_dir(self.root.join("jobs"))?.filter_map(|e| e.ok().map(|e| e.path())).collect();
        dirs.sort();
        for dir in dirs {
            let path = dir.join("job.json");
            let parsed = fs::read(&path)
                .map_err(|e| e.to_string())
                .and_then(|b| serde_json::from_slice::<JobRecord>(&b).map_err(|e| e.to_string()));
            match parsed {
                Ok(job) => {
                    out.jobs.insert(job.id, job);
                }
                Err(e) => warn_skip(&mut out, format!("skipping job {}: {e}", dir.display())),
            }
        }
        self.save_index(out.matrices.values())?;
        Ok(out)
    }
}
