//! Argument parsing and dispatch for the `pleb` binary.

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use pleb_core::coefficient_lab::{CoefficientSet, InnerProductSet};
use pleb_core::QSqrt2;

use crate::solve::{self, parse_list};
use crate::{load_triple, run_suite, Options, Suite};

type Q = QSqrt2;

/// Exit code for passing runs.
pub const EXIT_PASS: i32 = 0;
/// Exit code for failed checks and solver preconditions.
pub const EXIT_FAIL: i32 = 1;
/// Exit code for unusable arguments.
pub const EXIT_USAGE: i32 = 2;

#[derive(Parser, Debug)]
#[command(
    name = "pleb",
    version,
    about = "Verification suites for the Plebanski elliptic complex"
)]
struct Cli {
    /// Worker threads for parallel sections (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run a verification suite.
    Verify(VerifyArgs),
    /// Solve for coefficients in exact arithmetic.
    #[command(subcommand)]
    Solve(SolveCommand),
}

fn parse_suite(s: &str) -> Result<Suite, String> {
    Suite::parse(s).ok_or_else(|| {
        let names: Vec<&str> = Suite::EACH
            .iter()
            .map(|x| x.name())
            .chain(["all"])
            .collect();
        format!("unknown suite {s:?}; expected one of {}", names.join(", "))
    })
}

#[derive(Args, Debug)]
struct VerifyArgs {
    /// algebra, decompose, ellipticity, complex, einstein, coefficients, twisted, split or all.
    #[arg(value_parser = parse_suite)]
    suite: Suite,
    /// Lattice points per axis.
    #[arg(long, default_value_t = 8)]
    n: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Override every default floating-point tolerance.
    #[arg(long)]
    tol: Option<f64>,
    /// Write the JSON report here.
    #[arg(long)]
    out: Option<PathBuf>,
    /// PerfectTriple JSON fixture (default: the standard triple).
    #[arg(long)]
    triple: Option<PathBuf>,
    /// Random covectors in symbol sweeps.
    #[arg(long, default_value_t = 1000)]
    samples: usize,
    /// Random field pairs per lattice adjoint check.
    #[arg(long, default_value_t = 50)]
    trials: usize,
    /// Print the JSON report instead of the text report.
    #[arg(long)]
    json: bool,
}

fn list3(s: &str) -> Result<[Q; 3], String> {
    parse_list(s, 3).map(|v| v.try_into().expect("length checked"))
}

fn list2(s: &str) -> Result<[Q; 2], String> {
    parse_list(s, 2).map(|v| v.try_into().expect("length checked"))
}

fn list5(s: &str) -> Result<[Q; 5], String> {
    parse_list(s, 5).map(|v| v.try_into().expect("length checked"))
}

fn scalar(s: &str) -> Result<Q, String> {
    Q::parse(s).map_err(|e| e.to_string())
}

/// Operator coefficients; unset lists fall back to the Plebański values.
#[derive(Args, Debug)]
struct OperatorArgs {
    #[arg(long, value_parser = list3, allow_hyphen_values = true)]
    a: Option<[Q; 3]>,
    #[arg(long, value_parser = list5, allow_hyphen_values = true)]
    b: Option<[Q; 5]>,
    #[arg(long, value_parser = list2, allow_hyphen_values = true)]
    c: Option<[Q; 2]>,
    #[arg(long, value_parser = scalar, allow_hyphen_values = true)]
    f: Option<Q>,
    /// Use the Plebański operator coefficients (the default for unset lists).
    #[arg(long)]
    pleb: bool,
}

impl OperatorArgs {
    fn set(&self) -> CoefficientSet {
        let mut c = CoefficientSet::plebanski();
        if !self.pleb {
            if let Some(a) = &self.a {
                c.a = a.clone();
            }
            if let Some(b) = &self.b {
                c.b = b.clone();
            }
            if let Some(x) = &self.c {
                c.c = x.clone();
            }
            if let Some(f) = &self.f {
                c.f = f.clone();
            }
        }
        c
    }
}

#[derive(Subcommand, Debug)]
enum SolveCommand {
    /// b₂..b₅ from a, c and b₁ so that both compositions vanish.
    BCoeffs {
        #[arg(long, value_parser = list3, allow_hyphen_values = true, default_value = "1,1/4,1/2")]
        a: [Q; 3],
        #[arg(long, value_parser = list2, allow_hyphen_values = true, default_value = "0,1")]
        c: [Q; 2],
        #[arg(long, value_parser = scalar, allow_hyphen_values = true, default_value = "1/4")]
        b1: Q,
    },
    /// Inner products under which D*D is a Laplacian multiple.
    InnerProducts {
        #[command(flatten)]
        ops: OperatorArgs,
        #[arg(long, value_parser = scalar, allow_hyphen_values = true, default_value = "1")]
        beta3: Q,
        #[arg(long, value_parser = scalar, allow_hyphen_values = true, default_value = "0")]
        gamma2: Q,
    },
    /// Adjoint coefficients for given operator coefficients and inner products.
    Adjoints {
        #[command(flatten)]
        ops: OperatorArgs,
        /// β₁, β₂, β₃.
        #[arg(long, value_parser = list3, allow_hyphen_values = true, default_value = "1/4,8,1")]
        beta: [Q; 3],
        /// γ₁, γ₂.
        #[arg(long, value_parser = list2, allow_hyphen_values = true, default_value = "0,1")]
        gamma: [Q; 2],
        #[arg(long, default_value_t = 8)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

/// Parses `args` (including the program name), runs the command and returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() {
                EXIT_USAGE
            } else {
                EXIT_PASS
            };
            let _ = e.print();
            return code;
        }
    };
    if let Some(t) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
        {
            eprintln!("error: cannot configure {t} threads: {e}");
            return EXIT_USAGE;
        }
    }
    match cli.command {
        Command::Verify(v) => verify(v),
        Command::Solve(s) => solve_cmd(s),
    }
}

fn verify(v: VerifyArgs) -> i32 {
    if v.n < 2 {
        eprintln!("error: --n must be at least 2");
        return EXIT_USAGE;
    }
    let mut opts = Options {
        n: v.n,
        seed: v.seed,
        tol: v.tol,
        samples: v.samples,
        trials: v.trials,
        ..Options::default()
    };
    if let Some(path) = &v.triple {
        match load_triple(path) {
            Ok(t) => opts.triple = t,
            Err(e) => {
                eprintln!("error: cannot load triple {}: {e}", path.display());
                return EXIT_USAGE;
            }
        }
    }
    let report = run_suite(v.suite, &opts);
    if v.json {
        println!("{}", report.to_json());
    } else {
        println!("{report}");
    }
    if let Some(path) = &v.out {
        if let Err(e) = std::fs::write(path, report.to_json()) {
            eprintln!("error: cannot write {}: {e}", path.display());
            return EXIT_FAIL;
        }
    }
    let mut code = EXIT_PASS;
    for c in report.failures() {
        eprintln!(
            "FAILED {} [{}] residual {:e} tolerance {:e}",
            c.check_id, c.paper_ref, c.residual, c.tolerance
        );
        code = EXIT_FAIL;
    }
    code
}

fn solve_cmd(s: SolveCommand) -> i32 {
    let result = match s {
        SolveCommand::BCoeffs { a, c, b1 } => {
            solve::b_coeffs(&a, &c, &b1).map(|set| solve::format_b(&set))
        }
        SolveCommand::InnerProducts { ops, beta3, gamma2 } => {
            solve::inner_products(&ops.set(), &beta3, &gamma2)
                .map(|(ip, m)| solve::format_inner_products(&ip, &m))
        }
        SolveCommand::Adjoints {
            ops,
            beta,
            gamma,
            n,
            seed,
        } => {
            let [beta1, beta2, beta3] = beta;
            let [gamma1, gamma2] = gamma;
            let ip = InnerProductSet {
                beta1,
                beta2,
                beta3,
                gamma1,
                gamma2,
            };
            solve::adjoints(&ops.set(), &ip, n, seed).map(|(cp, r)| solve::format_adjoints(&cp, r))
        }
    };
    match result {
        Ok(text) => {
            println!("{text}");
            EXIT_PASS
        }
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_FAIL
        }
    }
}
