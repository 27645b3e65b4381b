//! External solver subprocess with timeout and cooperative cancellation.

use std::io::{ErrorKind, Read, Write};
use std::process::{Command, Stdio};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;
use std::thread;
use std::time::{Duration, Instant};

use super::{parse_output, Query, SmtError, SolverVerdict};

/// Environment variable naming the solver binary.
pub const SOLVER_ENV: &str = "STARSYNTH_SOLVER";

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SolverConfig {
    pub path: String,
    pub args: Vec<String>,
    pub timeout: Option<Duration>,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            path: std::env::var(SOLVER_ENV).unwrap_or_else(|_| "z3".to_string()),
            args: vec!["-in".into(), "-smt2".into()],
            timeout: None,
        }
    }
}

impl SolverConfig {
    pub fn with_timeout(mut self, t: Duration) -> Self {
        self.timeout = Some(t);
        self
    }
}

/// Shared flag; setting it kills every solve that watches it.
#[derive(Clone, Debug, Default)]
pub struct CancelToken(Arc<AtomicBool>);

impl CancelToken {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn cancel(&self) {
        self.0.store(true, Ordering::SeqCst);
    }

    pub fn is_cancelled(&self) -> bool {
        self.0.load(Ordering::SeqCst)
    }
}

pub fn solve(q: &Query, cfg: &SolverConfig) -> Result<SolverVerdict, SmtError> {
    solve_cancellable(q, cfg, &CancelToken::new())
}

/// Runs the solver; timeouts and cancellations come back as `Unknown`.
pub fn solve_cancellable(q: &Query, cfg: &SolverConfig, cancel: &CancelToken) -> Result<SolverVerdict, SmtError> {
    q.check()?;
    let script = q.serialize();
    let mut child = Command::new(&cfg.path)
        .args(&cfg.args)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::null())
        .spawn()
        .map_err(|e| match e.kind() {
            ErrorKind::NotFound | ErrorKind::PermissionDenied => SmtError::SolverNotFound(cfg.path.clone()),
            _ => SmtError::Io(e.to_string()),
        })?;
    let mut stdin = child.stdin.take().unwrap();
    let writer = thread::spawn(move || {
        // a killed solver closes the pipe early; that error is irrelevant
        let _ = stdin.write_all(script.as_bytes());
    });
    let mut stdout = child.stdout.take().unwrap();
    let reader = thread::spawn(move || {
        let mut s = String::new();
        let _ = stdout.read_to_string(&mut s);
        s
    });
    let start = Instant::now();
    let mut stopped = None;
    loop {
        if cancel.is_cancelled() {
            stopped = Some("cancelled");
        } else if cfg.timeout.is_some_and(|t| start.elapsed() >= t) {
            stopped = Some("timeout");
        }
        if stopped.is_some() {
            let _ = child.kill();
            let _ = child.wait();
            break;
        }
        if child.try_wait().map_err(|e| SmtError::Io(e.to_string()))?.is_some() {
            break;
        }
        thread::sleep(Duration::from_millis(2));
    }
    let _ = writer.join();
    let raw = reader.join().unwrap_or_default();
    if let Some(why) = stopped {
        return Ok(SolverVerdict::Unknown(why.to_string()));
    }
    parse_output(&raw, &q.decls)
}
