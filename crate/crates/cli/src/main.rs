use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use serde_json::json;

use chabauty_core::batch::{parse_jobs, run_batch, run_job, write_outcome, CurveJob, CurveSpec, JobStatus};
use chabauty_core::coleman::IntegrationContext;
use chabauty_core::curve::{HyperellipticCurve, RationalPoint};
use chabauty_core::frobenius::{brute_force_l_polynomial, zeta};
use chabauty_core::local::DifferentialForm;

#[derive(Parser)]
#[command(name = "chabauty", version, about = "Chabauty-Coleman zero sets of genus 3 hyperelliptic curves")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compute and classify the zero set for one job.
    Analyze {
        #[arg(long)]
        job: PathBuf,
        #[arg(long)]
        p: Option<u64>,
        #[arg(long = "N")]
        n: Option<i64>,
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// Run a JSON-lines job file and write reports plus summary.csv.
    Batch {
        #[arg(long)]
        jobs: PathBuf,
        #[arg(long, default_value_t = 1)]
        parallel: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Zeta numerator, point counts and the Coleman bound.
    Zeta {
        #[arg(long)]
        curve: PathBuf,
        #[arg(long)]
        p: u64,
        /// Recount points over F_p, F_p², F_p³ and compare.
        #[arg(long)]
        brute_check: bool,
    },
    /// Rational points of naive height at most H on the input model.
    SearchPoints {
        #[arg(long)]
        curve: PathBuf,
        #[arg(long)]
        height: u64,
    },
    /// Coleman integral of ω_i = x^i dx/2y on the monic model between two rational points.
    Integrate {
        #[arg(long)]
        curve: PathBuf,
        #[arg(long)]
        p: u64,
        #[arg(long)]
        form: usize,
        /// "x,y" in input coordinates or "infinity".
        #[arg(long, allow_hyphen_values = true)]
        from: String,
        #[arg(long, allow_hyphen_values = true)]
        to: String,
        #[arg(long, default_value_t = 10)]
        prec: i64,
    },
}

fn read_job(path: &Path) -> Result<CurveJob> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    if let Ok(job) = serde_json::from_str::<CurveJob>(&text) {
        return Ok(job);
    }
    let mut jobs = parse_jobs(&text)?;
    if jobs.len() != 1 {
        bail!("{} holds {} jobs; use batch", path.display(), jobs.len());
    }
    Ok(jobs.remove(0))
}

fn read_curve(path: &Path) -> Result<HyperellipticCurve> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let spec: CurveSpec = serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
    Ok(spec.curve()?)
}

fn print_json(v: &serde_json::Value) -> Result<()> {
    println!("{}", serde_json::to_string_pretty(v)?);
    Ok(())
}

fn analyze(job: &Path, p: Option<u64>, n: Option<i64>, out: &Path) -> Result<i32> {
    let mut job = read_job(job)?;
    job.p = p.or(job.p);
    job.overrides.n = n.or(job.overrides.n);
    fs::create_dir_all(out)?;
    let outcome = run_job(&job);
    write_outcome(out, &outcome)?;
    match (&outcome.report, &outcome.error) {
        (Some(r), _) => print!("{}", r.summary()),
        (None, Some(e)) => eprintln!("{}: {}", e.class.as_str(), e.message),
        _ => {}
    }
    Ok(outcome.exit_code)
}

fn batch(jobs: &Path, parallel: usize, out: &Path) -> Result<i32> {
    let text = fs::read_to_string(jobs).with_context(|| format!("reading {}", jobs.display()))?;
    let jobs = match parse_jobs(&text) {
        Ok(j) => j,
        Err(e) => {
            eprintln!("{e}");
            return Ok(JobStatus::BadInput.exit_code());
        }
    };
    let outcomes = run_batch(&jobs, parallel, out)?;
    for o in &outcomes {
        eprintln!("{}: {}", o.id, o.status.as_str());
    }
    Ok(0)
}

fn zeta_cmd(curve: &Path, p: u64, brute_check: bool) -> Result<i32> {
    let curve = read_curve(curve)?;
    let z = zeta(&curve, p)?;
    let mut out = json!({
        "prime": z.prime,
        "l_poly": z.l_poly,
        "trace": z.trace,
        "points_fp": z.points_fp,
        "jacobian_order": z.jacobian_order,
        "coleman_bound": z.points_fp + 4,
        "functional_equation": z.functional_equation_holds(),
        "max_weil_deviation": z.max_weil_deviation(),
    });
    if brute_check {
        let b = brute_force_l_polynomial(&curve, p)?;
        out["brute_check"] = json!(b == z);
        print_json(&out)?;
        if b != z {
            bail!("brute-force L-polynomial {:?} differs from {:?}", b.l_poly, z.l_poly);
        }
        return Ok(0);
    }
    print_json(&out)?;
    Ok(0)
}

fn search_points(curve: &Path, height: u64) -> Result<i32> {
    let curve = read_curve(curve)?;
    let pts: Vec<_> = curve.search_rational_points(height).iter().map(RationalPoint::to_strings).collect();
    print_json(&serde_json::to_value(pts)?)?;
    Ok(0)
}

fn integrate(curve: &Path, p: u64, form: usize, from: &str, to: &str, prec: i64) -> Result<i32> {
    let curve = read_curve(curve)?;
    if form > 2 {
        bail!("form index must be 0, 1 or 2");
    }
    curve.check_good_reduction(p)?;
    let lift = |s: &str| -> Result<_> {
        let pt = curve.from_original(&RationalPoint::parse(s)?);
        if !curve.is_on_curve(&pt) {
            bail!("{s} is not on the curve");
        }
        Ok(curve.rational_to_padic(&pt, p, prec + 6))
    };
    let (a, b) = (lift(from)?, lift(to)?);
    let ctx = IntegrationContext::new(&curve, p, prec)?;
    let v = ctx.coleman_integral(&DifferentialForm::basis(form, p, prec + 6), &a, &b)?;
    print_json(&json!({
        "prime": p,
        "form": form,
        "from": from,
        "to": to,
        "value": v.to_string(),
        "valuation": if v.is_zero() { None } else { Some(v.valuation()) },
        "absprec": v.absprec(),
    }))?;
    Ok(0)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let res = match &cli.command {
        Command::Analyze { job, p, n, out } => analyze(job, *p, *n, out),
        Command::Batch { jobs, parallel, out } => batch(jobs, *parallel, out),
        Command::Zeta { curve, p, brute_check } => zeta_cmd(curve, *p, *brute_check),
        Command::SearchPoints { curve, height } => search_points(curve, *height),
        Command::Integrate { curve, p, form, from, to, prec } => integrate(curve, *p, *form, from, to, *prec),
    };
    match res {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e:#}");
            let code = match e.downcast_ref::<chabauty_core::Error>() {
                Some(ce) => JobStatus::from_error(ce).exit_code(),
                None => JobStatus::Failed.exit_code(),
            };
            ExitCode::from(code as u8)
        }
    }
}
