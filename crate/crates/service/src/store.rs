//! Experiment registry: in-memory state, background workers and the on-disk
//! layout that lets a restarted service keep serving finished runs.

use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::{Arc, Mutex, RwLock};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

use resilab_core::runner::{log_to_string, write_log, DecisionRecord, ExperimentConfig, ExperimentResult, Runner};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Created,
    Running,
    Stopped,
    Finished,
    Failed,
}

impl Status {
    pub fn is_terminal(self) -> bool {
        matches!(self, Status::Stopped | Status::Finished | Status::Failed)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Handle {
    pub id: String,
    pub status: Status,
    pub progress: usize,
    pub total: usize,
    /// Milliseconds since the Unix epoch.
    pub created_at: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub config: ExperimentConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventBatch {
    pub since: usize,
    pub records: Vec<DecisionRecord>,
    pub next_since: usize,
    pub done: bool,
}

#[derive(Debug, thiserror::Error)]
pub enum StoreError {
    #[error("experiment '{0}' not found")]
    NotFound(String),
    #[error("experiment '{id}' is {status:?}: {action} not allowed")]
    Conflict {
        id: String,
        status: Status,
        action: &'static str,
    },
    #[error(transparent)]
    Core(#[from] resilab_core::Error),
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> StoreError + '_ {
    move |source| StoreError::Io {
        path: path.to_path_buf(),
        source,
    }
}

struct State {
    handle: Handle,
    records: Vec<DecisionRecord>,
    result: Option<Arc<ExperimentResult>>,
}

struct Experiment {
    state: Mutex<State>,
    stop: AtomicBool,
    dir: PathBuf,
}

impl Experiment {
    fn lock(&self) -> std::sync::MutexGuard<'_, State> {
        self.state.lock().unwrap_or_else(|p| p.into_inner())
    }

    fn persist_handle(&self, handle: &Handle) -> Result<(), StoreError> {
        write_json(&self.dir.join("handle.json"), handle)
    }
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), StoreError> {
    let text = serde_json::to_string_pretty(value).expect("plain data serializes");
    fs::write(path, text).map_err(io_err(path))
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Option<T> {
    let text = fs::read_to_string(path).ok()?;
    serde_json::from_str(&text).ok()
}

fn now_ms() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map_or(0, |d| d.as_millis() as u64)
}

/// All experiments known to one service process.
#[derive(Clone)]
pub struct Store {
    data_dir: PathBuf,
    experiments: Arc<RwLock<HashMap<String, Arc<Experiment>>>>,
}

impl Store {
    /// Opens `data_dir`, picking up experiments left by an earlier process.
    /// Runs that were in flight when it died are marked failed.
    pub fn open(data_dir: impl Into<PathBuf>) -> Result<Self, StoreError> {
        let data_dir = data_dir.into();
        fs::create_dir_all(&data_dir).map_err(io_err(&data_dir))?;
        let mut map = HashMap::new();
        for entry in fs::read_dir(&data_dir).map_err(io_err(&data_dir))? {
            let dir = entry.map_err(io_err(&data_dir))?.path();
            let Some(mut handle) = read_json::<Handle>(&dir.join("handle.json")) else {
                continue;
            };
            let result: Option<ExperimentResult> = read_json(&dir.join("result.json"));
            if handle.status == Status::Running {
                handle.status = Status::Failed;
                handle.error = Some("service restarted during the run".into());
            }
            let records = result.as_ref().map(|r| r.records.clone()).unwrap_or_default();
            let exp = Experiment {
                state: Mutex::new(State {
                    handle: handle.clone(),
                    records,
                    result: result.map(Arc::new),
                }),
                stop: AtomicBool::new(false),
                dir,
            };
            exp.persist_handle(&handle)?;
            map.insert(handle.id.clone(), Arc::new(exp));
        }
        Ok(Self {
            data_dir,
            experiments: Arc::new(RwLock::new(map)),
        })
    }

    pub fn data_dir(&self) -> &Path {
        &self.data_dir
    }

    fn get(&self, id: &str) -> Result<Arc<Experiment>, StoreError> {
        self.experiments
            .read()
            .unwrap_or_else(|p| p.into_inner())
            .get(id)
            .cloned()
            .ok_or_else(|| StoreError::NotFound(id.to_string()))
    }

    /// Registers a validated config. Building the runner up front catches
    /// problems validation cannot see, such as a missing dataset file.
    pub fn create(&self, config: ExperimentConfig) -> Result<Handle, StoreError> {
        let total = Runner::new(config.clone())?.total();
        let id = uuid::Uuid::new_v4().simple().to_string();
        let dir = self.data_dir.join(&id);
        fs::create_dir_all(&dir).map_err(io_err(&dir))?;
        write_json(&dir.join("config.json"), &config)?;
        let handle = Handle {
            id: id.clone(),
            status: Status::Created,
            progress: 0,
            total,
            created_at: now_ms(),
            error: None,
            config,
        };
        let exp = Experiment {
            state: Mutex::new(State {
                handle: handle.clone(),
                records: Vec::new(),
                result: None,
            }),
            stop: AtomicBool::new(false),
            dir,
        };
        exp.persist_handle(&handle)?;
        self.experiments
            .write()
            .unwrap_or_else(|p| p.into_inner())
            .insert(id, Arc::new(exp));
        Ok(handle)
    }

    pub fn handle(&self, id: &str) -> Result<Handle, StoreError> {
        Ok(self.get(id)?.lock().handle.clone())
    }

    pub fn list(&self) -> Vec<Handle> {
        let map = self.experiments.read().unwrap_or_else(|p| p.into_inner());
        let mut all: Vec<Handle> = map.values().map(|e| e.lock().handle.clone()).collect();
        all.sort_by(|a, b| a.created_at.cmp(&b.created_at).then_with(|| a.id.cmp(&b.id)));
        all
    }

    /// Moves a created experiment to running and hands the loop to a
    /// blocking worker. Returns as soon as the worker is scheduled.
    pub fn start(&self, id: &str) -> Result<Handle, StoreError> {
        let exp = self.get(id)?;
        let (config, handle) = {
            let mut st = exp.lock();
            if st.handle.status != Status::Created {
                return Err(StoreError::Conflict {
                    id: id.to_string(),
                    status: st.handle.status,
                    action: "start",
                });
            }
            st.handle.status = Status::Running;
            exp.persist_handle(&st.handle)?;
            (st.handle.config.clone(), st.handle.clone())
        };
        let worker = Arc::clone(&exp);
        tokio::task::spawn_blocking(move || run_worker(&worker, config));
        Ok(handle)
    }

    /// Asks a running experiment to halt before its next iteration.
    pub fn stop(&self, id: &str) -> Result<Handle, StoreError> {
        let exp = self.get(id)?;
        let st = exp.lock();
        if st.handle.status != Status::Running {
            return Err(StoreError::Conflict {
                id: id.to_string(),
                status: st.handle.status,
                action: "stop",
            });
        }
        exp.stop.store(true, Ordering::SeqCst);
        Ok(st.handle.clone())
    }

    /// Records from `since` on, as far as the run has got.
    pub fn events(&self, id: &str, since: usize) -> Result<EventBatch, StoreError> {
        let exp = self.get(id)?;
        let st = exp.lock();
        let from = since.min(st.records.len());
        let records = st.records[from..].to_vec();
        // every remaining record is in this batch, so a finished run is done
        Ok(EventBatch {
            since,
            done: st.handle.status.is_terminal(),
            next_since: since + records.len(),
            records,
        })
    }

    pub fn result(&self, id: &str) -> Result<Arc<ExperimentResult>, StoreError> {
        let exp = self.get(id)?;
        let st = exp.lock();
        match (&st.result, st.handle.status.is_terminal()) {
            (Some(r), true) => Ok(Arc::clone(r)),
            _ => Err(StoreError::Conflict {
                id: id.to_string(),
                status: st.handle.status,
                action: "results",
            }),
        }
    }

    /// The decision log over the records produced so far.
    pub fn log_csv(&self, id: &str) -> Result<String, StoreError> {
        let exp = self.get(id)?;
        let st = exp.lock();
        Ok(log_to_string(&st.records))
    }
}

fn run_worker(exp: &Experiment, config: ExperimentConfig) {
    let outcome = drive(exp, config);
    let mut st = exp.lock();
    match outcome {
        Ok((result, stopped)) => {
            st.handle.status = if stopped { Status::Stopped } else { Status::Finished };
            st.handle.progress = result.records.len();
            st.result = Some(Arc::new(result));
        }
        Err((e, partial)) => {
            tracing::warn!(id = %st.handle.id, error = %e, "experiment failed");
            st.handle.status = Status::Failed;
            st.handle.error = Some(e.to_string());
            st.result = partial.map(|r| Arc::new(*r));
        }
    }
    if let Err(e) = exp.persist_handle(&st.handle) {
        tracing::error!(error = %e, "could not save experiment status");
    }
}

type WorkerFailure = (StoreError, Option<Box<ExperimentResult>>);

fn drive(exp: &Experiment, config: ExperimentConfig) -> Result<(ExperimentResult, bool), WorkerFailure> {
    let mut runner = Runner::new(config).map_err(|e| (e.into(), None))?;
    let mut stopped = false;
    loop {
        if exp.stop.load(Ordering::SeqCst) {
            stopped = true;
            break;
        }
        match runner.step() {
            Ok(Some(rec)) => {
                let rec = rec.clone();
                let mut st = exp.lock();
                st.records.push(rec);
                st.handle.progress = st.records.len();
            }
            Ok(None) => break,
            Err(e) => {
                let partial = runner.finish().ok().map(Box::new);
                return Err((e.into(), partial));
            }
        }
    }
    let result = runner.finish().map_err(|e| (e.into(), None))?;
    let log = exp.dir.join("log.csv");
    write_log(&result.records, &log).map_err(|e| (e.into(), None))?;
    write_json(&exp.dir.join("result.json"), &result).map_err(|e| (e, None))?;
    Ok((result, stopped))
}
