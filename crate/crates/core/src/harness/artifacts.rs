use std::fmt::Write as _;
use std::fs::OpenOptions;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use crate::completion::TraceRow;
use crate::error::{Error, Result};
use crate::reweight::{RunLog, INITIAL_L, INITIAL_U};

pub const CONFIG: &str = "config.json";
pub const GROUND_TRUTH: &str = "ground_truth";
pub const OBSERVATIONS_BASE: &str = "observations_base.csv";
pub const OBSERVATIONS: &str = "observations.csv";
pub const WEIGHTS: &str = "weights.csv";
pub const REWEIGHT_LOG: &str = "reweight_log.json";
pub const POTENTIAL_CURVE: &str = "potential.csv";
pub const FACTORS: &str = "factors";
pub const SOLVER_TRACE: &str = "solver_trace.json";
pub const ERROR_CURVE: &str = "pgd_trace.csv";
pub const REPORT: &str = "report.json";

/// Files `GroundTruth::save` and friends produce for a stem.
pub fn factor_files(stem: &str) -> [String; 2] {
    [format!("{stem}_u.csv"), format!("{stem}_v.csv")]
}

/// Creates `run-<hash prefix>` under `root`, or `run-<hash prefix>-k` for the first free k.
pub fn create_run_dir(root: &Path, hash: &str) -> Result<PathBuf> {
    std::fs::create_dir_all(root)?;
    let base = format!("run-{}", &hash[..hash.len().min(16)]);
    for k in 0.. {
        let name = if k == 0 { base.clone() } else { format!("{base}-{k}") };
        let dir = root.join(name);
        match std::fs::create_dir(&dir) {
            Ok(()) => return Ok(dir),
            Err(e) if e.kind() == std::io::ErrorKind::AlreadyExists => continue,
            Err(e) => return Err(e.into()),
        }
    }
    unreachable!()
}

/// Writes a file that must not exist yet.
pub fn write_new(path: &Path, contents: &str) -> Result<()> {
    let mut f = OpenOptions::new().write(true).create_new(true).open(path).map_err(|e| {
        if e.kind() == std::io::ErrorKind::AlreadyExists {
            Error::State(format!("refusing to overwrite {}", path.display()))
        } else {
            e.into()
        }
    })?;
    f.write_all(contents.as_bytes())?;
    Ok(())
}

/// Numeric CSV with a header row.
#[derive(Clone, Debug, PartialEq)]
pub struct Curve {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Curve {
    pub fn to_csv(&self) -> String {
        let mut s = self.columns.join(",");
        s.push('\n');
        for r in &self.rows {
            let cells: Vec<String> = r.iter().map(|v| format!("{v:e}")).collect();
            let _ = writeln!(s, "{}", cells.join(","));
        }
        s
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header = lines.next().ok_or_else(|| Error::Parse("empty curve file".into()))?;
        let columns: Vec<String> = header.split(',').map(|c| c.trim().to_string()).collect();
        let mut rows = Vec::new();
        for line in lines {
            let r: Vec<f64> = line
                .split(',')
                .map(|t| t.trim().parse().map_err(|_| Error::Parse(format!("bad curve line: {line}"))))
                .collect::<Result<_>>()?;
            if r.len() != columns.len() {
                return Err(Error::Parse(format!("bad curve line: {line}")));
            }
            rows.push(r);
        }
        Ok(Self { columns, rows })
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let k = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| r[k]).collect())
    }
}

fn curve(columns: &[&str], rows: Vec<Vec<f64>>) -> Curve {
    Curve { columns: columns.iter().map(|c| c.to_string()).collect(), rows }
}

/// Per-iteration barrier state; row 0 is the initial potential.
pub fn potential_curve(log: &RunLog) -> Curve {
    let mut rows = vec![vec![0.0, INITIAL_U, INITIAL_L, f64::NAN, log.initial_phi, 0.0, 0.0]];
    rows.extend(log.records.iter().map(|r| {
        vec![(r.iteration + 1) as f64, r.u, r.l, r.rho, r.phi, r.delta_u, r.delta_l]
    }));
    curve(&["iteration", "u", "l", "rho", "phi", "delta_u", "delta_l"], rows)
}

pub fn error_curve(trace: &[TraceRow]) -> Curve {
    let rows = trace.iter().map(|t| vec![t.iteration as f64, t.objective, t.grad_norm, t.max_row_norm]).collect();
    curve(&["iteration", "objective", "grad_norm", "max_row_norm"], rows)
}
