//! Running external solver processes with a wall-clock limit.

use std::io::Read;
use std::path::{Path, PathBuf};
use std::process::{Command, Stdio};
use std::thread;
use std::time::{Duration, Instant};

use sha2::{Digest, Sha256};

/// How an ILP solver reports its solution.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum SolutionFormat {
    /// First line is a status word (`optimal`, `infeasible`, ...), then one
    /// `name value` pair per line.
    #[default]
    NameValue,
    /// CBC's `solu` file: a status line such as `Optimal - objective value 0`,
    /// then rows of `index name value reduced-cost`.
    Cbc,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SolverConfig {
    pub path: PathBuf,
    /// Extra arguments. `{input}` and `{solution}` are replaced by the model
    /// and solution file paths; without placeholders the model path (and,
    /// for ILP solvers, the solution path) is appended.
    pub args: Vec<String>,
    pub timeout: Duration,
    pub solution_format: SolutionFormat,
}

impl SolverConfig {
    pub fn new(path: impl Into<PathBuf>) -> Self {
        SolverConfig {
            path: path.into(),
            args: Vec::new(),
            timeout: Duration::from_secs(300),
            solution_format: SolutionFormat::NameValue,
        }
    }

    pub fn with_timeout(mut self, timeout: Duration) -> Self {
        self.timeout = timeout;
        self
    }

    pub fn with_args<I: IntoIterator<Item = S>, S: Into<String>>(mut self, args: I) -> Self {
        self.args = args.into_iter().map(Into::into).collect();
        self
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ProcessError {
    #[error("solver timeout must be positive")]
    ZeroTimeout,
    #[error("failed to start solver `{path}`: {source}")]
    Spawn { path: String, source: std::io::Error },
    #[error("i/o error while running solver: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Clone, Debug)]
pub struct ProcessOutput {
    pub stdout: String,
    pub stderr: String,
    pub exit_code: Option<i32>,
    pub timed_out: bool,
    pub elapsed: Duration,
}

impl ProcessOutput {
    /// Hex SHA-256 of stdout followed by stderr.
    pub fn digest(&self) -> String {
        let mut h = Sha256::new();
        h.update(self.stdout.as_bytes());
        h.update(self.stderr.as_bytes());
        hex::encode(h.finalize())
    }
}

/// Run `cfg.path` on `input` (and optionally a solution file path), killing
/// it once `cfg.timeout` elapses.
pub fn run_solver(cfg: &SolverConfig, input: &Path, solution: Option<&Path>) -> Result<ProcessOutput, ProcessError> {
    if cfg.timeout.is_zero() {
        return Err(ProcessError::ZeroTimeout);
    }
    let input_s = input.display().to_string();
    let solution_s = solution.map(|s| s.display().to_string()).unwrap_or_default();
    let templated = cfg.args.iter().any(|a| a.contains("{input}") || a.contains("{solution}"));
    let mut args: Vec<String> =
        cfg.args.iter().map(|a| a.replace("{input}", &input_s).replace("{solution}", &solution_s)).collect();
    if !templated {
        args.push(input_s);
        if solution.is_some() {
            args.push(solution_s);
        }
    }

    let start = Instant::now();
    let mut cmd = Command::new(&cfg.path);
    cmd.args(&args).stdin(Stdio::null()).stdout(Stdio::piped()).stderr(Stdio::piped());
    // Wrapper scripts spawn the real solver as a child; a group of its own
    // lets a timeout take the whole tree down.
    #[cfg(unix)]
    std::os::unix::process::CommandExt::process_group(&mut cmd, 0);
    let mut child = cmd
        .spawn()
        .map_err(|source| ProcessError::Spawn { path: cfg.path.display().to_string(), source })?;

    let mut out_pipe = child.stdout.take().expect("piped stdout");
    let mut err_pipe = child.stderr.take().expect("piped stderr");
    let out_reader = thread::spawn(move || {
        let mut s = String::new();
        let _ = out_pipe.read_to_string(&mut s);
        s
    });
    let err_reader = thread::spawn(move || {
        let mut s = String::new();
        let _ = err_pipe.read_to_string(&mut s);
        s
    });

    let mut timed_out = false;
    let status = loop {
        if let Some(status) = child.try_wait()? {
            break Some(status);
        }
        if start.elapsed() >= cfg.timeout {
            timed_out = true;
            kill_tree(&mut child);
            break child.wait().ok();
        }
        thread::sleep(Duration::from_millis(5));
    };
    // After a timeout a grandchild that escaped the kill may still hold the
    // pipes open; don't wait for it.
    let (stdout, stderr) = if timed_out {
        (String::new(), String::new())
    } else {
        (out_reader.join().unwrap_or_default(), err_reader.join().unwrap_or_default())
    };
    Ok(ProcessOutput {
        stdout,
        stderr,
        exit_code: if timed_out { None } else { status.and_then(|s| s.code()) },
        timed_out,
        elapsed: start.elapsed(),
    })
}

#[cfg(unix)]
fn kill_tree(child: &mut std::process::Child) {
    // SAFETY: plain syscall; the child leads its own process group.
    unsafe {
        libc::kill(-(child.id() as libc::pid_t), libc::SIGKILL);
    }
    let _ = child.kill();
}

#[cfg(not(unix))]
fn kill_tree(child: &mut std::process::Child) {
    let _ = child.kill();
}
