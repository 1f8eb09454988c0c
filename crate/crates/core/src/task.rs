//! Timed known-item search tasks: hint release, submission checks, scoring.

use std::collections::{BTreeMap, HashMap};
use std::path::Path;
use std::sync::Mutex;
use std::time::{Duration, Instant};

use serde::Serialize;

use crate::ingest::synthetic::TaskHintRow;

pub const DEFAULT_DURATION_S: u32 = 180;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum TaskError {
    #[error("unknown task `{0}`")]
    UnknownTask(String),
    #[error("task `{0}` has not been started")]
    UnknownSession(String),
    #[error("task `{0}` has expired")]
    SessionExpired(String),
    #[error("task `{0}` is already solved")]
    AlreadySolved(String),
    #[error("invalid task definition `{task}`: {reason}")]
    InvalidTask { task: String, reason: String },
    #[error("cannot read tasks: {0}")]
    Read(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Hint {
    pub t: u32,
    pub text: String,
}

/// Inclusive frame range on one day.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Truth {
    pub day_id: String,
    pub start: u32,
    pub end: u32,
}

impl Truth {
    pub fn accepts(&self, day_id: &str, frame_index: u32) -> bool {
        self.day_id == day_id && (self.start..=self.end).contains(&frame_index)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TaskDef {
    pub task_id: String,
    pub hints: Vec<Hint>,
    pub truth: Truth,
    pub duration_s: u32,
}

impl TaskDef {
    pub fn validate(&self) -> Result<(), TaskError> {
        let bad = |reason: &str| Err(TaskError::InvalidTask { task: self.task_id.clone(), reason: reason.into() });
        if self.hints.is_empty() {
            return bad("no hints");
        }
        if self.duration_s == 0 {
            return bad("duration is zero");
        }
        if !self.hints.windows(2).all(|w| w[0].t <= w[1].t) {
            return bad("hint times decrease");
        }
        if self.hints.iter().any(|h| h.t >= self.duration_s) {
            return bad("hint released after the task ends");
        }
        if self.truth.start > self.truth.end {
            return bad("truth range is empty");
        }
        Ok(())
    }

    /// Hint texts released by `elapsed_s`.
    pub fn hints_at(&self, elapsed_s: f64) -> Vec<&str> {
        self.hints.iter().filter(|h| f64::from(h.t) <= elapsed_s).map(|h| h.text.as_str()).collect()
    }
}

/// Groups `tasks.csv` rows by task id. Rows of one task must agree on the
/// truth and duration.
pub fn tasks_from_rows(rows: &[TaskHintRow]) -> Result<Vec<TaskDef>, TaskError> {
    let mut tasks: BTreeMap<&str, TaskDef> = BTreeMap::new();
    for r in rows {
        let truth = Truth { day_id: r.truth_day_id.clone(), start: r.truth_start, end: r.truth_end };
        let def = tasks.entry(&r.task_id).or_insert_with(|| TaskDef {
            task_id: r.task_id.clone(),
            hints: Vec::new(),
            truth: truth.clone(),
            duration_s: r.duration_s,
        });
        if def.truth != truth || def.duration_s != r.duration_s {
            return Err(TaskError::InvalidTask { task: r.task_id.clone(), reason: "rows disagree on truth or duration".into() });
        }
        def.hints.push(Hint { t: r.hint_t, text: r.hint_text.clone() });
    }
    let tasks: Vec<TaskDef> = tasks
        .into_values()
        .map(|mut t| {
            t.hints.sort_by_key(|h| h.t);
            t
        })
        .collect();
    tasks.iter().try_for_each(TaskDef::validate)?;
    Ok(tasks)
}

/// Reads `tasks.csv`; a missing file means no tasks.
pub fn load_tasks(path: &Path) -> Result<Vec<TaskDef>, TaskError> {
    if !path.exists() {
        return Ok(Vec::new());
    }
    let mut rdr = csv::Reader::from_path(path).map_err(|e| TaskError::Read(e.to_string()))?;
    let rows: Vec<TaskHintRow> = rdr
        .deserialize()
        .collect::<Result<_, _>>()
        .map_err(|e| TaskError::Read(e.to_string()))?;
    tasks_from_rows(&rows)
}

/// `max(0, 100 - 50 * elapsed / duration - 10 * wrong)`.
pub fn score(elapsed_s: f64, duration_s: f64, wrong_count: u32) -> f64 {
    (100.0 - 50.0 * elapsed_s / duration_s - 10.0 * f64::from(wrong_count)).max(0.0)
}

/// Monotonic time source.
pub trait Clock: Send + Sync {
    fn now(&self) -> Duration;
}

#[derive(Debug)]
pub struct SystemClock(Instant);

impl Default for SystemClock {
    fn default() -> Self {
        Self(Instant::now())
    }
}

impl Clock for SystemClock {
    fn now(&self) -> Duration {
        self.0.elapsed()
    }
}

/// A clock that only moves when told to.
#[derive(Debug, Default)]
pub struct ManualClock(Mutex<Duration>);

impl ManualClock {
    pub fn advance(&self, by: Duration) {
        *self.0.lock().unwrap() += by;
    }

    pub fn set(&self, to: Duration) {
        *self.0.lock().unwrap() = to;
    }
}

impl Clock for ManualClock {
    fn now(&self) -> Duration {
        *self.0.lock().unwrap()
    }
}

impl<C: Clock + ?Sized> Clock for std::sync::Arc<C> {
    fn now(&self) -> Duration {
        (**self).now()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TaskSession {
    pub task_id: String,
    pub started_at: Duration,
    pub wrong_count: u32,
    pub solved: bool,
    /// Set once, on solve or expiry.
    pub score: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SessionStatus {
    pub task_id: String,
    pub elapsed_s: f64,
    pub duration_s: u32,
    pub hints: Vec<String>,
    pub wrong_count: u32,
    pub solved: bool,
    pub expired: bool,
    pub score: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SubmissionResult {
    pub correct: bool,
    pub elapsed_s: f64,
    pub wrong_count: u32,
    pub score: Option<f64>,
}

/// Task definitions plus one live session per task. Starting a task again
/// replaces its session.
pub struct TaskHarness<C: Clock = SystemClock> {
    tasks: BTreeMap<String, TaskDef>,
    sessions: Mutex<HashMap<String, TaskSession>>,
    clock: C,
}

impl<C: Clock> TaskHarness<C> {
    pub fn new(tasks: Vec<TaskDef>, clock: C) -> Self {
        Self {
            tasks: tasks.into_iter().map(|t| (t.task_id.clone(), t)).collect(),
            sessions: Mutex::new(HashMap::new()),
            clock,
        }
    }

    pub fn tasks(&self) -> impl Iterator<Item = &TaskDef> {
        self.tasks.values()
    }

    pub fn task(&self, task_id: &str) -> Result<&TaskDef, TaskError> {
        self.tasks.get(task_id).ok_or_else(|| TaskError::UnknownTask(task_id.into()))
    }

    fn status(def: &TaskDef, s: &TaskSession, elapsed_s: f64) -> SessionStatus {
        SessionStatus {
            task_id: def.task_id.clone(),
            elapsed_s,
            duration_s: def.duration_s,
            hints: def.hints_at(elapsed_s).into_iter().map(str::to_string).collect(),
            wrong_count: s.wrong_count,
            solved: s.solved,
            expired: !s.solved && elapsed_s >= f64::from(def.duration_s),
            score: s.score,
        }
    }

    /// Expires an unsolved session whose time ran out; returns elapsed seconds.
    fn tick(&self, def: &TaskDef, s: &mut TaskSession) -> f64 {
        let elapsed_s = self.clock.now().saturating_sub(s.started_at).as_secs_f64();
        if !s.solved && s.score.is_none() && elapsed_s >= f64::from(def.duration_s) {
            s.score = Some(0.0);
        }
        elapsed_s
    }

    pub fn start(&self, task_id: &str) -> Result<SessionStatus, TaskError> {
        let def = self.task(task_id)?;
        let session = TaskSession {
            task_id: task_id.into(),
            started_at: self.clock.now(),
            wrong_count: 0,
            solved: false,
            score: None,
        };
        let status = Self::status(def, &session, 0.0);
        self.sessions.lock().unwrap().insert(task_id.into(), session);
        Ok(status)
    }

    pub fn hints(&self, task_id: &str) -> Result<SessionStatus, TaskError> {
        let def = self.task(task_id)?;
        let mut sessions = self.sessions.lock().unwrap();
        let s = sessions.get_mut(task_id).ok_or_else(|| TaskError::UnknownSession(task_id.into()))?;
        let elapsed_s = self.tick(def, s);
        Ok(Self::status(def, s, elapsed_s))
    }

    pub fn submit(&self, task_id: &str, day_id: &str, frame_index: u32) -> Result<SubmissionResult, TaskError> {
        let def = self.task(task_id)?;
        let mut sessions = self.sessions.lock().unwrap();
        let s = sessions.get_mut(task_id).ok_or_else(|| TaskError::UnknownSession(task_id.into()))?;
        let elapsed_s = self.tick(def, s);
        if s.solved {
            return Err(TaskError::AlreadySolved(task_id.into()));
        }
        if s.score.is_some() {
            return Err(TaskError::SessionExpired(task_id.into()));
        }
        let correct = def.truth.accepts(day_id, frame_index);
        if correct {
            s.solved = true;
            s.score = Some(score(elapsed_s, f64::from(def.duration_s), s.wrong_count));
        } else {
            s.wrong_count += 1;
        }
        Ok(SubmissionResult { correct, elapsed_s, wrong_count: s.wrong_count, score: s.score })
    }

    pub fn session(&self, task_id: &str) -> Option<TaskSession> {
        self.sessions.lock().unwrap().get(task_id).cloned()
    }
}
