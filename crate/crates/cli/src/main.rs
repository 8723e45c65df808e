use bmkit::block::{block_norm_infimum, block_norm_lower, block_norm_upper, finite_decomposition, pairing, slice_decomposition, SearchConfig, SolverConfig};
use bmkit::corpus::{generate_corpus, Family, FunctionCorpus};
use bmkit::lebesgue::{mixed_norm, ExponentVector};
use bmkit::morrey::{bm_norm, bm_norm_shifted};
use bmkit::operators::OperatorSpec;
use bmkit::spectral::{band_project, besov_norm, cz_model, fractional_laplacian, heat, lp_square_function, CzModel, Partition, TLParams};
use bmkit::verify::{estimate_operator_norm, run_suite, thread_cap, with_threads, AscentConfig, NormSpec, SuiteConfig, TestOperator, SUITES};
use bmkit::wavelet::{wavelet_coefficients, wavelet_square_function, Family as Wavelet, ScaleWindow, WaveletSystem};
use bmkit::{Error, GridFunction, SpaceParams};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::de::DeserializeOwned;
use serde::Serialize;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "bmkit", version, about = "Mixed Bourgain-Morrey norms, block norms and inequality checks")]
struct Cli {
    /// Seed for every random choice.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Corpus resolution J.
    #[arg(long, global = true, default_value_t = 4)]
    resolution: i32,
    /// Also write the JSON artifact to this file.
    #[arg(long, global = true)]
    report: Option<PathBuf>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Evaluate a norm of a grid function.
    Norm {
        #[arg(value_enum)]
        kind: NormKind,
        #[command(flatten)]
        input: Input,
        /// Space parameters, e.g. '{"p":[2],"t":3,"r":6}'.
        #[arg(long)]
        params: Option<String>,
        /// Exponent vector for `lebesgue`, e.g. '[2,4]'.
        #[arg(long)]
        p: Option<String>,
        #[arg(long, value_enum, default_value_t = BlockMode::Upper)]
        mode: BlockMode,
        /// Grid shift in {0,1,2}^n for `bm`, e.g. '0,1'.
        #[arg(long)]
        shift: Option<String>,
        #[arg(long)]
        s: Option<f64>,
        #[arg(long)]
        q: Option<String>,
        /// Band window `lo,hi` for `tl` and `besov`.
        #[arg(long, allow_hyphen_values = true)]
        window: Option<String>,
    },
    /// Apply an operator and print (or write) the output grid.
    Apply {
        #[arg(value_enum)]
        op: ApplyKind,
        #[command(flatten)]
        input: Input,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        alpha: Option<f64>,
        #[arg(long)]
        j: Option<i32>,
        #[arg(long)]
        s: Option<f64>,
        #[arg(long, default_value_t = 0)]
        axis: usize,
        #[arg(long, default_value = "db4")]
        family: String,
        /// Dump coefficients instead of the square function (`wavelet-sq`).
        #[arg(long)]
        coefficients: bool,
        #[arg(long, allow_hyphen_values = true)]
        window: Option<String>,
    },
    /// Block decompositions.
    Decompose {
        #[arg(value_enum)]
        kind: DecomposeKind,
        #[command(flatten)]
        input: Input,
        #[arg(long)]
        params: String,
        /// Single scale; the smallest finite decomposition when omitted.
        #[arg(long)]
        scale: Option<i32>,
    },
    /// The pairing ∫ f g.
    Pair {
        #[arg(long)]
        f: PathBuf,
        #[arg(long)]
        g: PathBuf,
    },
    /// Lower bound on an operator norm by randomized ascent.
    EstimateNorm {
        /// Operator, e.g. '{"kind":"riesz","axis":0}'.
        #[arg(long)]
        op: String,
        /// Norm spec, e.g. '{"kind":"morrey","params":{...}}'.
        #[arg(long)]
        norm_in: String,
        /// Defaults to the input norm.
        #[arg(long)]
        norm_out: Option<String>,
        /// Starting functions; a random-cells corpus when omitted.
        #[arg(long = "in")]
        inputs: Vec<PathBuf>,
        #[arg(long, default_value_t = 5000)]
        budget: usize,
        #[arg(long, default_value_t = 8)]
        count: usize,
        #[arg(long, default_value_t = 1)]
        dim: usize,
        #[arg(long)]
        perturb_resolution: Option<i32>,
    },
    /// Run a verification suite (or `all`).
    Verify {
        suite: String,
        /// Override every corpus size.
        #[arg(long)]
        count: Option<usize>,
        #[arg(long, default_value_t = SuiteConfig::default().budget)]
        budget: usize,
    },
    /// Generate a seeded corpus as a JSON list of grids.
    Corpus {
        #[arg(long, default_value = "random-cells")]
        family: String,
        #[arg(long, default_value_t = 8)]
        count: usize,
        #[arg(long, default_value_t = 1)]
        dim: usize,
        #[arg(long)]
        base_resolution: Option<i32>,
        #[arg(long)]
        params: Option<String>,
    },
}

#[derive(Args)]
struct Input {
    #[arg(long = "in")]
    input: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum NormKind {
    Bm,
    Block,
    Lebesgue,
    Tl,
    Besov,
}

#[derive(Clone, Copy, PartialEq, ValueEnum)]
enum BlockMode {
    Upper,
    Inf,
    Lower,
}

#[derive(Clone, Copy, ValueEnum)]
enum ApplyKind {
    Maximal,
    Itmax,
    Martmax,
    Shifted,
    Frac,
    Heat,
    LpBand,
    LpSquare,
    Flap,
    Riesz,
    WaveletSq,
}

#[derive(Clone, Copy, ValueEnum)]
enum DecomposeKind {
    Blocks,
}

enum Failure {
    Usage(String),
    Precondition(String),
    Checks,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::UnknownSuite(_) | Error::UnknownFamily(_) | Error::InvalidGrid(_) => Failure::Usage(e.to_string()),
            _ => Failure::Precondition(e.to_string()),
        }
    }
}

type Out = Result<(), Failure>;

fn parse_json<T: DeserializeOwned>(what: &str, text: &str) -> Result<T, Failure> {
    serde_json::from_str(text).map_err(|e| Failure::Usage(format!("{what}: {e}")))
}

fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T, Failure> {
    let text = std::fs::read_to_string(path).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
    parse_json(&path.display().to_string(), &text)
}

fn list(what: &str, text: &str) -> Result<Vec<i64>, Failure> {
    text.split(',').map(|s| s.trim().parse().map_err(|_| Failure::Usage(format!("{what}: expected comma-separated integers")))).collect()
}

fn window(text: Option<&str>, f: &GridFunction) -> Result<Partition, Failure> {
    match text {
        None => Ok(Partition::for_grid(f)),
        Some(w) => match list("--window", w)?.as_slice() {
            [lo, hi] => Ok(Partition::new(*lo as i32, *hi as i32)?),
            _ => Err(Failure::Usage("--window: expected lo,hi".into())),
        },
    }
}

fn required<T>(v: Option<T>, flag: &str) -> Result<T, Failure> {
    v.ok_or_else(|| Failure::Usage(format!("missing {flag}")))
}

fn emit<T: Serialize>(cli: &Cli, value: &T) -> Out {
    let text = serde_json::to_string_pretty(value).expect("serializable");
    println!("{text}");
    if let Some(p) = &cli.report {
        std::fs::write(p, format!("{text}\n")).map_err(|e| Failure::Usage(format!("{}: {e}", p.display())))?;
    }
    Ok(())
}

fn norm_cmd(cli: &Cli, kind: NormKind, f: &GridFunction, params: Option<&str>, p: Option<&str>, mode: BlockMode, shift: Option<&str>, s: Option<f64>, q: Option<&str>, win: Option<&str>) -> Out {
    let sp = || -> Result<SpaceParams, Failure> { parse_json("--params", required(params, "--params")?) };
    match kind {
        NormKind::Bm => {
            let b = match shift {
                Some(sh) => {
                    let v: Vec<u8> = list("--shift", sh)?.into_iter().map(|x| x as u8).collect();
                    bm_norm_shifted(f, &sp()?, &v)?
                }
                None => bm_norm(f, &sp()?)?,
            };
            emit(cli, &b)
        }
        NormKind::Block => {
            let sp = sp()?;
            match mode {
                BlockMode::Upper => emit(cli, &block_norm_upper(f, &sp)?),
                BlockMode::Inf => emit(cli, &block_norm_infimum(f, &sp, &SolverConfig::default())?),
                BlockMode::Lower => emit(cli, &block_norm_lower(f, &sp, &SearchConfig { seed: cli.seed, ..SearchConfig::default() })?),
            }
        }
        NormKind::Lebesgue => {
            let p: ExponentVector = parse_json("--p", required(p, "--p")?)?;
            if p.dim() != f.dim {
                return Err(Failure::Precondition(format!("exponent vector has {} entries for a {}-dimensional grid", p.dim(), f.dim)));
            }
            emit(cli, &serde_json::json!({ "value": mixed_norm(f, &p) }))
        }
        NormKind::Tl | NormKind::Besov => {
            let q = match q {
                Some("inf") | None => f64::INFINITY,
                Some(v) => v.parse().map_err(|_| Failure::Usage("--q: expected a number or inf".into()))?,
            };
            let params = TLParams { sp: sp()?, s: required(s, "--s")?, q };
            let part = window(win, f)?;
            let value = if matches!(kind, NormKind::Tl) {
                bmkit::spectral::tl_norm(f, &params, &part)?
            } else {
                besov_norm(f, &params, &part)?
            };
            emit(cli, &serde_json::json!({ "value": value, "window": part }))
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn apply_cmd(cli: &Cli, op: ApplyKind, f: &GridFunction, out: Option<&Path>, win: Option<&str>, alpha: Option<f64>, j: Option<i32>, s: Option<f64>, axis: usize, family: &str, coefficients: bool) -> Out {
    let g = match op {
        ApplyKind::Maximal => OperatorSpec::DyadicMaximal { shift: vec![0; f.dim] }.apply(f)?,
        ApplyKind::Itmax => OperatorSpec::IteratedMaximal.apply(f)?,
        ApplyKind::Martmax => OperatorSpec::MartingaleMaximal.apply(f)?,
        ApplyKind::Shifted => OperatorSpec::ShiftedMaximalSum.apply(f)?,
        ApplyKind::Frac => OperatorSpec::FractionalIntegral { alpha: required(alpha, "--alpha")? }.apply(f)?,
        ApplyKind::Heat => heat(f, required(alpha, "--alpha")?)?,
        ApplyKind::LpBand => band_project(f, required(j, "--j")?)?,
        ApplyKind::LpSquare => lp_square_function(f, &window(win, f)?)?,
        ApplyKind::Flap => fractional_laplacian(f, required(s, "--s")?)?,
        ApplyKind::Riesz => cz_model(f, &CzModel::Riesz { axis })?,
        ApplyKind::WaveletSq => {
            let fam: Wavelet = family.parse().map_err(|e: Error| Failure::Usage(e.to_string()))?;
            let sys = WaveletSystem::new(fam, f.dim)?;
            let win = ScaleWindow::for_grid(f);
            if coefficients {
                return emit(cli, &wavelet_coefficients(f, &sys, &win)?);
            }
            wavelet_square_function(f, &sys, &win)?
        }
    };
    match out {
        Some(p) => {
            let text = serde_json::to_string(&g).expect("serializable");
            std::fs::write(p, text).map_err(|e| Failure::Usage(format!("{}: {e}", p.display())))?;
            eprintln!("wrote {}", p.display());
            Ok(())
        }
        None => emit(cli, &g),
    }
}

fn verify_cmd(cli: &Cli, suite: &str, count: Option<usize>, budget: usize) -> Out {
    let cfg = SuiteConfig { seed: cli.seed, resolution: cli.resolution, count, budget };
    let names: Vec<&str> = if suite == "all" { SUITES.to_vec() } else { vec![suite] };
    let mut reports = Vec::new();
    for name in names {
        eprintln!("suite {name}");
        let rep = run_suite(name, &cfg)?;
        for c in &rep.checks {
            eprintln!("  {} {}", if c.pass { "ok  " } else { "FAIL" }, c.id);
        }
        if rep.vacuous {
            eprintln!("  (vacuous: no checks)");
        }
        reports.push(rep);
    }
    if reports.len() == 1 {
        emit(cli, &reports[0])?;
    } else {
        emit(cli, &reports)?;
    }
    if reports.iter().all(|r| r.pass) { Ok(()) } else { Err(Failure::Checks) }
}

fn run(cli: &Cli) -> Out {
    match &cli.cmd {
        Cmd::Norm { kind, input, params, p, mode, shift, s, q, window } => {
            let f: GridFunction = read_json(&input.input)?;
            norm_cmd(cli, *kind, &f, params.as_deref(), p.as_deref(), *mode, shift.as_deref(), *s, q.as_deref(), window.as_deref())
        }
        Cmd::Apply { op, input, out, alpha, j, s, axis, family, coefficients, window } => {
            let f: GridFunction = read_json(&input.input)?;
            apply_cmd(cli, *op, &f, out.as_deref(), window.as_deref(), *alpha, *j, *s, *axis, family, *coefficients)
        }
        Cmd::Decompose { kind: DecomposeKind::Blocks, input, params, scale } => {
            let f: GridFunction = read_json(&input.input)?;
            let sp: SpaceParams = parse_json("--params", params)?;
            match scale {
                Some(j) => emit(cli, &slice_decomposition(&f, &sp, *j)?),
                None => emit(cli, &finite_decomposition(&f, &sp)?),
            }
        }
        Cmd::Pair { f, g } => {
            let f: GridFunction = read_json(f)?;
            let g: GridFunction = read_json(g)?;
            let z = pairing(&f, &g)?;
            emit(cli, &serde_json::json!({ "re": z.re, "im": z.im, "abs": z.norm() }))
        }
        Cmd::EstimateNorm { op, norm_in, norm_out, inputs, budget, count, dim, perturb_resolution } => {
            let op: TestOperator = parse_json("--op", op)?;
            let a: NormSpec = parse_json("--norm-in", norm_in)?;
            let b: NormSpec = match norm_out {
                Some(t) => parse_json("--norm-out", t)?,
                None => a.clone(),
            };
            let start: Vec<GridFunction> = if inputs.is_empty() {
                let spec = FunctionCorpus::new(Family::RandomCells, cli.seed, *count, *dim, cli.resolution);
                generate_corpus(&spec)?
            } else {
                inputs.iter().map(|p| read_json(p)).collect::<Result<_, _>>()?
            };
            let cfg = AscentConfig { budget: *budget, seed: cli.seed, perturb_resolution: *perturb_resolution };
            let est = estimate_operator_norm(&op, &a, &b, &start, &cfg)?;
            eprintln!("ratio {:.6} after {} evaluations", est.ratio, est.evaluations);
            emit(cli, &est)
        }
        Cmd::Verify { suite, count, budget } => verify_cmd(cli, suite, *count, *budget),
        Cmd::Corpus { family, count, dim, base_resolution, params } => {
            let family: Family = family.parse()?;
            let mut spec = FunctionCorpus::new(family, cli.seed, *count, *dim, cli.resolution);
            if let Some(b) = base_resolution {
                spec.base_resolution = *b;
            }
            if let Some(p) = params {
                spec.params = Some(parse_json("--params", p)?);
            }
            emit(cli, &generate_corpus(&spec)?)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = with_threads(thread_cap(), || run(&cli));
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Checks) => ExitCode::from(1),
        Err(Failure::Usage(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
        Err(Failure::Precondition(m)) => {
            eprintln!("precondition violated: {m}");
            ExitCode::from(3)
        }
    }
}
