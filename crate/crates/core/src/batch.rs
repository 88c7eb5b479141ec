//! Curve jobs, batch execution and the summary table.

use std::collections::HashSet;
use std::fs;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};

use log::{info, warn};
use num_rational::BigRational;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::curve::{parse_rational, HyperellipticCurve, PointSpec, RationalPoint};
use crate::error::{Error, Result};
use crate::pipeline::{choose_base_point, run, RunOptions, RunStatus, ZeroPoint, ZeroSetReport, MIN_PRIME};

pub const DEFAULT_HEIGHT: u64 = 1000;

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct JobOverrides {
    #[serde(rename = "N", default, skip_serializing_if = "Option::is_none")]
    pub n: Option<i64>,
    #[serde(rename = "M", default, skip_serializing_if = "Option::is_none")]
    pub m: Option<usize>,
    #[serde(rename = "H", default, skip_serializing_if = "Option::is_none")]
    pub height: Option<u64>,
}

/// One line of a job file.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CurveJob {
    pub id: String,
    /// Coefficients of the degree 7 input polynomial, constant term first, as "a" or "a/b".
    pub coeffs: Vec<String>,
    /// Optional (u, v) with x_in = u·x, y_in = v·y giving the monic model.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scaling: Option<[String; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p: Option<u64>,
    #[serde(rename = "P0", default, skip_serializing_if = "Option::is_none")]
    pub p0: Option<PointSpec>,
    #[serde(default)]
    pub known_points: Vec<PointSpec>,
    #[serde(default)]
    pub overrides: JobOverrides,
}

impl CurveJob {
    pub fn curve(&self) -> Result<HyperellipticCurve> {
        build_curve(&self.coeffs, self.scaling.as_ref())
    }
}

/// A curve file: the coefficient part of a job. Job files are accepted as curve files.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CurveSpec {
    pub coeffs: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scaling: Option<[String; 2]>,
}

impl CurveSpec {
    pub fn curve(&self) -> Result<HyperellipticCurve> {
        build_curve(&self.coeffs, self.scaling.as_ref())
    }
}

fn build_curve(coeffs: &[String], scaling: Option<&[String; 2]>) -> Result<HyperellipticCurve> {
    let g: Vec<BigRational> = coeffs.iter().map(|c| parse_rational(c)).collect::<Result<_>>()?;
    let scaling = match scaling {
        Some([u, v]) => Some((parse_rational(u)?, parse_rational(v)?)),
        None => None,
    };
    HyperellipticCurve::normalize_to_monic_odd(&g, scaling)
}

/// Process exit codes shared by the CLI and the batch summary.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum JobStatus {
    Ok,
    Failed,
    BadInput,
    BadReduction,
    SimplicityFailure,
    RecognitionIncomplete,
}

impl JobStatus {
    pub fn exit_code(self) -> i32 {
        match self {
            JobStatus::Ok => 0,
            JobStatus::Failed => 1,
            JobStatus::BadInput => 2,
            JobStatus::BadReduction => 3,
            JobStatus::SimplicityFailure => 4,
            JobStatus::RecognitionIncomplete => 5,
        }
    }

    pub fn from_error(e: &Error) -> Self {
        match e {
            Error::BadInput(_) | Error::NotOnCurve(_) | Error::Truncation(_) | Error::Annihilator(_) => JobStatus::BadInput,
            Error::BadReduction { .. } => JobStatus::BadReduction,
            Error::Simplicity(_) => JobStatus::SimplicityFailure,
            _ => JobStatus::Failed,
        }
    }

    pub fn from_report(r: &ZeroSetReport) -> Self {
        match r.status {
            RunStatus::Complete => JobStatus::Ok,
            RunStatus::RecognitionIncomplete => JobStatus::RecognitionIncomplete,
            RunStatus::SimplicityFailure => JobStatus::SimplicityFailure,
            RunStatus::DiskFailure => JobStatus::Failed,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            JobStatus::Ok => "ok",
            JobStatus::Failed => "failed",
            JobStatus::BadInput => "bad_input",
            JobStatus::BadReduction => "bad_reduction",
            JobStatus::SimplicityFailure => "simplicity_failure",
            JobStatus::RecognitionIncomplete => "recognition_incomplete",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct JobError {
    pub class: JobStatus,
    pub message: String,
}

/// Everything written for one job.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct JobOutcome {
    pub id: String,
    pub status: JobStatus,
    pub exit_code: i32,
    /// Base point actually used, input coordinates.
    pub base_point: Option<PointSpec>,
    pub report: Option<ZeroSetReport>,
    pub error: Option<JobError>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub id: String,
    pub p: Option<u64>,
    #[serde(rename = "#known")]
    pub known: Option<usize>,
    #[serde(rename = "#Z")]
    pub z: Option<usize>,
    #[serde(rename = "#new_rational")]
    pub new_rational: Option<usize>,
    #[serde(rename = "#torsion")]
    pub torsion: Option<usize>,
    #[serde(rename = "#other")]
    pub other: Option<usize>,
    pub status: String,
}

/// Number of points of C(Q_p) a listed point stands for: two unless it is fixed by the involution.
fn multiplicity(z: &ZeroPoint) -> usize {
    match &z.model_point {
        crate::curve::CurvePoint::Affine { y, .. } if !y.is_zero() => 2,
        _ => 1,
    }
}

fn count(pts: &[ZeroPoint]) -> usize {
    pts.iter().map(multiplicity).sum()
}

impl SummaryRow {
    pub fn from_outcome(o: &JobOutcome) -> Self {
        let r = o.report.as_ref();
        SummaryRow {
            id: o.id.clone(),
            p: r.map(|r| r.parameters.p),
            known: r.map(|r| count(&r.known)),
            z: r.map(|r| r.all_points().map(multiplicity).sum()),
            new_rational: r.map(|r| count(&r.new_rational)),
            torsion: r.map(|r| count(&r.torsion)),
            other: r.map(|r| count(&r.other_algebraic)),
            status: o.status.as_str().into(),
        }
    }
}

/// Parses a JSON-lines job file; blank lines and lines starting with '#' are skipped.
pub fn parse_jobs(text: &str) -> Result<Vec<CurveJob>> {
    let mut jobs = Vec::new();
    let mut seen = HashSet::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let job: CurveJob = serde_json::from_str(line).map_err(|e| Error::BadInput(format!("line {}: {e}", i + 1)))?;
        validate_id(&job.id)?;
        if !seen.insert(job.id.clone()) {
            return Err(Error::BadInput(format!("duplicate job id {:?}", job.id)));
        }
        jobs.push(job);
    }
    Ok(jobs)
}

/// Ids become file names.
fn validate_id(id: &str) -> Result<()> {
    let ok = !id.is_empty() && !id.starts_with('.') && id.chars().all(|c| c.is_ascii_alphanumeric() || "._-".contains(c));
    if ok {
        Ok(())
    } else {
        Err(Error::BadInput(format!("job id {id:?} must be nonempty and use only letters, digits, '.', '_' or '-'")))
    }
}

/// Known points plus a base point, searching for points when either is missing.
fn resolve_points(job: &CurveJob, curve: &HyperellipticCurve, p: u64) -> Result<(RationalPoint, Vec<RationalPoint>)> {
    let mut known: Vec<RationalPoint> = job.known_points.iter().map(RationalPoint::from_spec).collect::<Result<_>>()?;
    if job.p0.is_none() || known.is_empty() {
        let h = job.overrides.height.unwrap_or(DEFAULT_HEIGHT);
        info!("{}: searching rational points up to height {h}", job.id);
        known.extend(curve.search_rational_points(h));
    }
    known.sort();
    known.dedup();
    let base = match &job.p0 {
        Some(s) => RationalPoint::from_spec(s)?,
        None => choose_base_point(curve, p, &known)?,
    };
    Ok((base, known))
}

fn run_job_inner(job: &CurveJob, base_used: &mut Option<PointSpec>) -> Result<ZeroSetReport> {
    let curve = job.curve()?;
    let p = job.p.unwrap_or_else(|| curve.choose_prime(MIN_PRIME));
    curve.check_good_reduction(p)?;
    let (base, known) = resolve_points(job, &curve, p)?;
    *base_used = Some(base.to_strings());
    let opts = RunOptions { p: Some(p), n: job.overrides.n, m: job.overrides.m };
    run(&curve, &base, &known, &opts)
}

/// Runs one job; errors and panics become a failed outcome.
pub fn run_job(job: &CurveJob) -> JobOutcome {
    let mut base = None;
    let res = catch_unwind(AssertUnwindSafe(|| run_job_inner(job, &mut base)));
    let (status, report, error) = match res {
        Ok(Ok(r)) => (JobStatus::from_report(&r), Some(r), None),
        Ok(Err(e)) => {
            let class = JobStatus::from_error(&e);
            warn!("{}: {e}", job.id);
            (class, None, Some(JobError { class, message: e.to_string() }))
        }
        Err(panic) => {
            let message = panic
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| panic.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panic".into());
            (JobStatus::Failed, None, Some(JobError { class: JobStatus::Failed, message }))
        }
    };
    JobOutcome { id: job.id.clone(), status, exit_code: status.exit_code(), base_point: base, report, error }
}

pub fn outcome_path(dir: &Path, id: &str) -> PathBuf {
    dir.join(format!("{id}.json"))
}

pub fn write_outcome(dir: &Path, o: &JobOutcome) -> std::io::Result<()> {
    let json = serde_json::to_string_pretty(o).map_err(std::io::Error::other)?;
    fs::write(outcome_path(dir, &o.id), json + "\n")?;
    if let Some(r) = &o.report {
        fs::write(dir.join(format!("{}.txt", o.id)), r.summary())?;
    }
    Ok(())
}

pub fn write_summary(path: &Path, rows: &[SummaryRow]) -> std::io::Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    if rows.is_empty() {
        w.write_record(["id", "p", "#known", "#Z", "#new_rational", "#torsion", "#other", "status"])?;
    }
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()
}

/// Runs all jobs on `parallel` workers and writes one report per job plus summary.csv, rows sorted by id.
pub fn run_batch(jobs: &[CurveJob], parallel: usize, out: &Path) -> Result<Vec<JobOutcome>> {
    let io = |e: std::io::Error| Error::BadInput(format!("{}: {e}", out.display()));
    fs::create_dir_all(out).map_err(io)?;
    let pool = rayon::ThreadPoolBuilder::new().num_threads(parallel.max(1)).build().map_err(|e| Error::BadInput(e.to_string()))?;
    let mut outcomes: Vec<JobOutcome> = pool.install(|| jobs.par_iter().map(run_job).collect());
    outcomes.sort_by(|a, b| a.id.cmp(&b.id));
    for o in &outcomes {
        write_outcome(out, o).map_err(io)?;
    }
    let rows: Vec<SummaryRow> = outcomes.iter().map(SummaryRow::from_outcome).collect();
    write_summary(&out.join("summary.csv"), &rows).map_err(io)?;
    Ok(outcomes)
}
