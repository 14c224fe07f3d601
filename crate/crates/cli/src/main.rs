#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod args;

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use expq_core::analysis::{certify_coefficients, max_error, max_error_at, profile_point, ABS_RANGE_END};
use expq_core::baselines::quadrature_coeffs;
use expq_core::coeffile::{CoefficientFile, Provenance};
use expq_core::fading::{average_exact, qam4_target, sep_average_closed, NakagamiChannel};
use expq_core::minimax::{solve, sweep};
use expq_core::{Error, ErrorMeasure, MinimaxSolution, SolveSpec, TargetPoly, VariantKind};

/// Minimax exponential-sum approximations and bounds of the Gaussian Q-function.
#[derive(Debug, Parser)]
#[command(name = "expq", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Solve one problem and write its coefficient file.
    Solve {
        #[command(flatten)]
        problem: Problem,
        /// Coefficient file to write; standard output when absent.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        no_provenance: bool,
    },
    /// Solve a family over a range of N, one file per solution.
    Sweep {
        #[command(flatten)]
        problem: Problem,
        /// Directory receiving the coefficient files.
        #[arg(long)]
        out: PathBuf,
        /// Relative measure over N = 1..25 and x_end = 1, 1.1, ..., 10. Takes hours.
        #[arg(long)]
        full_grid: bool,
        #[arg(long)]
        no_provenance: bool,
    },
    /// Check a coefficient file against the problem it records.
    Certify {
        #[arg(long)]
        coeffs: PathBuf,
    },
    /// Tabulate target, approximation and errors as TSV.
    Scan {
        #[arg(long)]
        coeffs: PathBuf,
        /// Overrides the target recorded in the file.
        #[arg(long, value_parser = args::target)]
        target: Option<TargetPoly>,
        #[arg(long, value_parser = args::range, default_value = "0:15")]
        range: (f64, f64),
        #[arg(long, default_value_t = 1001)]
        points: usize,
        /// Space the points logarithmically; needs a positive range start.
        #[arg(long)]
        log: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Coefficients from a quadrature rule applied to Craig's integral.
    Baseline {
        #[arg(long, value_parser = args::rule)]
        rule: args::Rule,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        no_provenance: bool,
    },
    /// Average 4-QAM symbol error probability over Nakagami-m fading.
    Sep {
        /// Coefficients approximating the conditional error 2Q - Q².
        #[arg(long)]
        coeffs: PathBuf,
        /// Fading parameters, comma separated.
        #[arg(long, value_parser = args::fading, default_value = "1")]
        m: args::Reals,
        #[arg(long, value_parser = args::snr_grid, allow_hyphen_values = true, default_value = "-5:10:5")]
        snr_db: args::Reals,
        /// Decimals printed.
        #[arg(long, default_value_t = 6)]
        digits: usize,
    },
}

#[derive(Debug, Args)]
struct Problem {
    #[arg(long, value_parser = args::target, default_value = "q")]
    target: TargetPoly,
    #[arg(long = "error", value_parser = args::measure, default_value = "abs")]
    measure: ErrorMeasure,
    #[arg(long, value_parser = args::variant, default_value = "approxw")]
    variant: VariantKind,
    /// Term count; for sweep `hi` or `lo:hi`.
    #[arg(long, default_value = "2")]
    n: String,
    /// Relative-measure range end; sweep takes a comma-separated list.
    #[arg(long, value_parser = args::xends)]
    xend: Option<args::Reals>,
    /// w0, w1, ..., wK (and w_{K+1} for the relative measure).
    #[arg(long, value_parser = args::weights)]
    weights: Option<args::Reals>,
}

enum Failure {
    Core(Error),
    Certification,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Core(e)
    }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::SolverFailure { .. } | Error::Numeric(_) => 3,
        _ => 2,
    }
}

type Outcome = Result<(), Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Core(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
        Err(Failure::Certification) => ExitCode::from(4),
    }
}

fn run(cmd: Command) -> Outcome {
    match cmd {
        Command::Solve { problem, out, no_provenance } => run_solve(&problem, out.as_deref(), no_provenance),
        Command::Sweep { problem, out, full_grid, no_provenance } => run_sweep(&problem, &out, full_grid, no_provenance),
        Command::Certify { coeffs } => run_certify(&coeffs),
        Command::Scan { coeffs, target, range, points, log, out } => {
            run_scan(&coeffs, target, range, points, log, out.as_deref())
        }
        Command::Baseline { rule, n, out, no_provenance } => {
            let rule = rule.with_n(n)?;
            let s = quadrature_coeffs(&rule)?;
            let (x, d) = max_error_at(&s, &TargetPoly::identity(), ErrorMeasure::Absolute, 0.0, ABS_RANGE_END)?;
            eprintln!("{:?} N={n}: max |d| on [0, {ABS_RANGE_END}] = {d:.6e} at x = {x:.6}", rule.kind);
            let file = CoefficientFile::from_expsum(s, None, provenance(no_provenance));
            emit(&file.to_json(), out.as_deref())
        }
        Command::Sep { coeffs, m, snr_db, digits } => run_sep(&coeffs, &m.0, &snr_db.0, digits),
    }
}

fn provenance(off: bool) -> Option<Provenance> {
    (!off).then(Provenance::now)
}

fn emit(text: &str, out: Option<&Path>) -> Outcome {
    match out {
        Some(path) => std::fs::write(path, text).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?,
        None => std::io::stdout()
            .write_all(text.as_bytes())
            .map_err(|e| Error::Io(format!("stdout: {e}")))?,
    }
    Ok(())
}

impl Problem {
    fn spec(&self, n: usize, x_end: Option<f64>) -> Result<SolveSpec, Error> {
        let x_end = match self.measure {
            ErrorMeasure::Absolute => None,
            ErrorMeasure::Relative => {
                Some(x_end.ok_or_else(|| Error::Validation("the relative measure needs --xend".into()))?)
            }
        };
        let spec = SolveSpec::new(self.target.clone(), self.measure, self.variant, n, x_end)?;
        match &self.weights {
            Some(w) => spec.with_weights(w.0.clone()),
            None => Ok(spec),
        }
    }

    fn xends(&self) -> Result<Vec<Option<f64>>, Error> {
        match (&self.xend, self.measure) {
            (Some(_), ErrorMeasure::Absolute) => {
                Err(Error::Validation("--xend only applies to the relative measure".into()))
            }
            (Some(list), ErrorMeasure::Relative) => Ok(list.0.iter().map(|&x| Some(x)).collect()),
            (None, ErrorMeasure::Relative) => Err(Error::Validation("the relative measure needs --xend".into())),
            (None, ErrorMeasure::Absolute) => Ok(vec![None]),
        }
    }
}

fn summary(sol: &MinimaxSolution) -> String {
    format!(
        "N={:<2} e_max={:.9e} residual={:.2e}",
        sol.spec.n, sol.e_max, sol.diagnostics.residual_norm
    )
}

fn run_solve(problem: &Problem, out: Option<&Path>, no_provenance: bool) -> Outcome {
    let n: usize = problem
        .n
        .parse()
        .map_err(|_| Error::Validation(format!("--n '{}' is not a term count", problem.n)))?;
    let xends = problem.xends()?;
    if xends.len() != 1 {
        return Err(Error::Validation("solve takes a single --xend".into()).into());
    }
    let spec = problem.spec(n, xends[0])?;
    let sol = solve(&spec, None)?;
    eprintln!("{}", summary(&sol));
    emit(&CoefficientFile::from_solution(&sol, provenance(no_provenance)).to_json(), out)
}

fn target_tag(t: &TargetPoly) -> String {
    let c = t.coeffs();
    if c.iter().rev().skip(1).all(|&v| v == 0.0) && c.last() == Some(&1.0) {
        match c.len() - 1 {
            1 => "q".into(),
            p => format!("q{p}"),
        }
    } else {
        let mut tag = String::from("poly");
        for v in c {
            let _ = write!(tag, "_{v}");
        }
        tag
    }
}

fn file_name(spec: &SolveSpec) -> String {
    let measure = match spec.measure {
        ErrorMeasure::Absolute => "abs",
        ErrorMeasure::Relative => "rel",
    };
    let mut name = format!("{}-{measure}-{}", target_tag(&spec.target), spec.variant.name());
    if let Some(x) = spec.x_end {
        let _ = write!(name, "-x{x}");
    }
    let _ = write!(name, "-n{:02}.json", spec.n);
    name
}

fn run_sweep(problem: &Problem, out: &Path, full_grid: bool, no_provenance: bool) -> Outcome {
    let (ns, xends) = if full_grid {
        if problem.measure != ErrorMeasure::Relative {
            return Err(Error::Validation("--full-grid sweeps the relative measure; pass --error rel".into()).into());
        }
        (1..=expq_core::minimax::MAX_N, (10..=100).map(|i| Some(i as f64 / 10.0)).collect())
    } else {
        (args::n_range(&problem.n).map_err(Error::Validation)?, problem.xends()?)
    };
    let families = xends
        .iter()
        .map(|&x| ns.clone().map(|n| problem.spec(n, x)).collect::<Result<Vec<_>, _>>())
        .collect::<Result<Vec<_>, _>>()?;
    std::fs::create_dir_all(out).map_err(|e| Error::Io(format!("{}: {e}", out.display())))?;

    // each x_end is an independent continuation chain
    let results: Vec<Vec<Result<MinimaxSolution, Error>>> = std::thread::scope(|scope| {
        let handles: Vec<_> = families.iter().map(|f| scope.spawn(move || sweep(f))).collect();
        handles.into_iter().map(|h| h.join().expect("sweep thread panicked")).collect()
    });

    let mut failed = 0;
    for (family, results) in families.iter().zip(results) {
        for (spec, res) in family.iter().zip(results) {
            let name = file_name(spec);
            match res {
                Ok(sol) => {
                    let path = out.join(&name);
                    CoefficientFile::from_solution(&sol, provenance(no_provenance)).save(&path)?;
                    println!("{name}\t{}", summary(&sol));
                }
                Err(e) => {
                    failed += 1;
                    println!("{name}\tfailed: {e}");
                }
            }
        }
    }
    if failed > 0 {
        return Err(Error::SolverFailure { best_residual: f64::NAN }.into());
    }
    Ok(())
}

fn run_certify(path: &Path) -> Outcome {
    let file = CoefficientFile::load(path)?;
    let Some(spec) = &file.spec else {
        return Err(Error::Validation(format!("{} records no problem to certify against", path.display())).into());
    };
    // without a recorded e_max the measured maximum stands in for it
    let e_max = match &file.achieved {
        Some(a) => a.e_max,
        None => {
            let hi = spec.x_end.unwrap_or(ABS_RANGE_END);
            max_error(&file.expsum, &spec.target, spec.measure, 0.0, hi)?
        }
    };
    let cert = certify_coefficients(&file.expsum, spec, e_max);
    println!("{cert}");
    if cert.passed() {
        Ok(())
    } else {
        Err(Failure::Certification)
    }
}

fn run_scan(
    path: &Path,
    target: Option<TargetPoly>,
    (lo, hi): (f64, f64),
    points: usize,
    log: bool,
    out: Option<&Path>,
) -> Outcome {
    if points == 0 {
        return Err(Error::Validation("--points must be at least 1".into()).into());
    }
    if log && lo <= 0.0 {
        return Err(Error::Validation("--log needs a positive range start".into()).into());
    }
    let file = CoefficientFile::load(path)?;
    let t = target
        .or_else(|| file.spec.as_ref().map(|s| s.target.clone()))
        .unwrap_or_else(TargetPoly::identity);
    let count = if hi == lo { 1 } else { points };
    let at = |i: usize| {
        if count == 1 {
            return lo;
        }
        let f = i as f64 / (count - 1) as f64;
        if log {
            (lo.ln() + f * (hi.ln() - lo.ln())).exp()
        } else {
            lo + f * (hi - lo)
        }
    };
    let mut text = String::from("x\ttarget\tapprox\td\tr\n");
    for i in 0..count {
        let p = profile_point(&file.expsum, &t, at(i));
        let _ = writeln!(text, "{:e}\t{:e}\t{:e}\t{:e}\t{:e}", p.x, p.target, p.approx, p.d, p.r);
    }
    emit(&text, out)
}

fn run_sep(path: &Path, ms: &[f64], snr_db: &[f64], digits: usize) -> Outcome {
    let file = CoefficientFile::load(path)?;
    let t = file.spec.as_ref().map_or_else(qam4_target, |s| s.target.clone());
    if t != qam4_target() {
        return Err(Error::Validation(format!("{} does not approximate 2Q - Q²", path.display())).into());
    }
    let mut text = String::from("m\tsnr_db\texact\tclosed\n");
    for &m in ms {
        for &db in snr_db {
            let ch = NakagamiChannel::new(m, 10f64.powf(db / 10.0))?;
            let exact = average_exact(&t, &ch, 1.0)?;
            let closed = sep_average_closed(&file.expsum, &ch)?.value();
            let _ = writeln!(text, "{m}\t{db}\t{exact:.digits$}\t{closed:.digits$}");
        }
    }
    emit(&text, None)
}
