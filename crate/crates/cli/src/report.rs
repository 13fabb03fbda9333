//! Report assembly and rendering.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::Value;

use crate::scene::{matrix_to_json, MatrixJson};
use crate::tasks::{Outcome, Verdict};
use crate::CliError;

/// Witness matrices with more rows or columns than this go to sidecar files.
pub const INLINE_LIMIT: usize = 64;

#[derive(Debug, Clone, Serialize)]
pub struct Witness {
    pub name: String,
    pub rows: usize,
    pub cols: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub data: Option<MatrixJson>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub file: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct TaskReport {
    pub index: usize,
    pub command: &'static str,
    pub label: String,
    pub seed: u64,
    pub verdict: Verdict,
    pub residuals: BTreeMap<String, f64>,
    pub details: BTreeMap<String, Value>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub witnesses: Vec<Witness>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: String,
    pub scene: String,
    pub seed: u64,
    pub tol_rel: f64,
    pub tol_abs: f64,
    pub tasks: Vec<TaskReport>,
    pub passed: usize,
    pub failed: usize,
    /// Seconds per task, in task order.
    pub timings: Vec<f64>,
}

impl Report {
    pub fn all_pass(&self) -> bool {
        self.failed == 0
    }
}

/// Where sidecar files go: next to the report, or the working directory.
pub struct Sidecars {
    pub dir: PathBuf,
    pub prefix: String,
}

impl Sidecars {
    pub fn for_report(report: Option<&Path>, scene: &Path) -> Sidecars {
        let stem = |p: &Path| p.file_stem().map_or("report".into(), |s| s.to_string_lossy().into_owned());
        match report {
            Some(r) => Sidecars {
                dir: r.parent().map(Path::to_path_buf).unwrap_or_default(),
                prefix: stem(r),
            },
            None => Sidecars { dir: PathBuf::new(), prefix: stem(scene) },
        }
    }
}

pub fn task_report(
    index: usize,
    command: &'static str,
    label: String,
    seed: u64,
    outcome: Outcome,
    sidecars: &Sidecars,
) -> Result<TaskReport, CliError> {
    let mut witnesses = Vec::new();
    for (name, m) in outcome.matrices {
        let (rows, cols) = m.shape();
        let mut w = Witness { name: name.clone(), rows, cols, data: None, file: None };
        if rows > INLINE_LIMIT || cols > INLINE_LIMIT {
            let safe: String = name.chars().map(|c| if c.is_ascii_alphanumeric() { c } else { '_' }).collect();
            let file = format!("{}.task{index}.{safe}.json", sidecars.prefix);
            let path = sidecars.dir.join(&file);
            let text = serde_json::to_string(&matrix_to_json(&m)).expect("matrices serialize");
            std::fs::write(&path, text).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
            w.file = Some(file);
        } else {
            w.data = Some(matrix_to_json(&m));
        }
        witnesses.push(w);
    }
    Ok(TaskReport {
        index,
        command,
        label,
        seed,
        verdict: outcome.verdict,
        residuals: outcome.residuals,
        details: outcome.details,
        witnesses,
        error: outcome.error,
    })
}

pub fn render_json(r: &Report) -> String {
    let mut s = serde_json::to_string_pretty(r).expect("reports serialize");
    s.push('\n');
    s
}

fn verdict_word(v: Verdict) -> &'static str {
    match v {
        Verdict::Pass => "PASS",
        Verdict::Fail => "FAIL",
        Verdict::Error => "ERROR",
    }
}

pub fn render_text(r: &Report) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        "{} {}  command {}  scene {}  seed {}  tol rel {:e} abs {:e}",
        r.tool, r.version, r.command, r.scene, r.seed, r.tol_rel, r.tol_abs
    );
    for (t, secs) in r.tasks.iter().zip(&r.timings) {
        let _ = writeln!(s, "\n[{}] {:<9} {:<5}  {}  ({secs:.3}s)", t.index, t.command, verdict_word(t.verdict), t.label);
        let width = t
            .residuals
            .keys()
            .chain(t.details.keys())
            .map(String::len)
            .chain(t.witnesses.iter().map(|w| w.name.len() + 8))
            .max()
            .unwrap_or(0);
        for (k, v) in &t.residuals {
            let _ = writeln!(s, "    {k:<width$}  {v:.3e}");
        }
        for (k, v) in &t.details {
            let text = match v {
                Value::String(x) => x.clone(),
                other => other.to_string(),
            };
            let _ = writeln!(s, "    {k:<width$}  {text}");
        }
        for w in &t.witnesses {
            let key = format!("witness {}", w.name);
            let place = w.file.as_deref().map_or("inline".to_string(), |f| format!("-> {f}"));
            let _ = writeln!(s, "    {key:<width$}  {}x{} {place}", w.rows, w.cols);
        }
        if let Some(e) = &t.error {
            let _ = writeln!(s, "    error  {e}");
        }
    }
    let _ = writeln!(s, "\nsummary  {} passed  {} failed", r.passed, r.failed);
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use moritakit::numerics::CMatrix;

    fn outcome(m: CMatrix) -> Outcome {
        Outcome {
            verdict: Verdict::Pass,
            residuals: BTreeMap::new(),
            details: BTreeMap::new(),
            matrices: vec![("V".into(), m)],
            error: None,
        }
    }

    #[test]
    fn large_witnesses_go_to_sidecars() {
        let dir = tempfile::tempdir().unwrap();
        let report = dir.path().join("run.json");
        let sidecars = Sidecars::for_report(Some(&report), Path::new("scene.json"));
        let big = task_report(3, "dilate", "phi".into(), 0, outcome(CMatrix::zeros(65, 2)), &sidecars).unwrap();
        assert_eq!(big.witnesses[0].file.as_deref(), Some("run.task3.V.json"));
        assert!(big.witnesses[0].data.is_none());
        let text = std::fs::read_to_string(dir.path().join("run.task3.V.json")).unwrap();
        let back: MatrixJson = serde_json::from_str(&text).unwrap();
        assert_eq!((back.len(), back[0].len()), (65, 2));

        let small = task_report(0, "dilate", "phi".into(), 0, outcome(CMatrix::zeros(64, 64)), &sidecars).unwrap();
        assert!(small.witnesses[0].file.is_none());
        assert!(render_text(&Report {
            tool: "moritakit",
            version: "0",
            command: "dilate".into(),
            scene: "scene.json".into(),
            seed: 0,
            tol_rel: 1e-9,
            tol_abs: 1e-12,
            tasks: vec![big],
            passed: 1,
            failed: 0,
            timings: vec![0.0],
        })
        .contains("-> run.task3.V.json"));
    }
}
