//! `levinson-ab`: classification, Levinson checks, spectra, scattering
//! matrices and the higher-degree pairings from the command line.

mod input;

use std::fs::File;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use levinson_ab::chern::{
    chern_boundary, chern_curvature, chern_lattice_with, trace3_degree_with, ChernResult, ManifoldSpec,
    Orientation, Trace3Grid, Trace3Options, Traversal, DEFAULT_EPSILONS,
};
use levinson_ab::extensions::{
    classify, from_unitary, negative_count_cdstar, random_pair, table_fixtures, ExtensionPoint,
};
use levinson_ab::scalar::cis;
use levinson_ab::scattering::{gamma_edges, s_matrix};
use levinson_ab::weyl_spectrum::bound_states;
use levinson_ab::winding::{levinson_check, total_winding_with, SamplingOptions};
use levinson_ab::{Alpha, Error, ErrorClass, Mat2, Pair};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

const SCHEMA: u32 = 1;

const FORMATS: &str = "\
Output formats.

JSON (default): one pretty-printed object with \"schema\": 1 and \"command\".
Complex numbers are [re, im]; 2x2 matrices are four [re, im] entries in
row-major order. Output is deterministic for a given command line.

CSV files:

  --emit-edges (levinson)
    edge_id      1..4 for B1..B4, in loop order
    parameter    x on B1/B3, kappa on B2/B4 (inf, -inf, 0 at the ends)
    g11_re, g11_im, g12_re, g12_im, g21_re, g21_im, g22_re, g22_im
                 entries of Gamma_j at the sample
    det_phase    unwrapped arg det Gamma_j, continuous along each edge

  --kappa-grid (smatrix, with --format csv)
    kappa, s11_re, s11_im, s12_re, s12_im, s21_re, s21_im, s22_re, s22_im,
    unitarity_residual

  --emit-curvature (chern, lattice method)
    rho, phi     plaquette centre
    flux         oriented plaquette flux in (-pi, pi]; their sum is 2*pi*ch(E)

  --table-suite / --random (levinson, with --format csv)
    label, alpha, wind, bound_count, phi1, phi2, phi3, phi4, holds

Matrix arguments: I, -I, 0, or 8 comma-separated reals (re,im per entry,
row-major), e.g. --C \"1,0,0,0,0,0,1,0\".
Complex arguments: i, -i, a real, re,im, or a+bi.

Exit codes: 0 success; 1 input error; 2 degenerate case or failed check;
3 numerical non-convergence.";

#[derive(Parser, Debug)]
#[command(name = "levinson-ab", version, about = "Levinson's theorem for Aharonov-Bohm self-adjoint extensions")]
#[command(after_help = "CSV column layouts: `levinson-ab help emit-formats`.")]
struct Cli {
    /// Worker threads (0 = all cores).
    #[arg(long, global = true, env = "LEVINSON_AB_JOBS", default_value_t = 0)]
    jobs: usize,
    /// Write the report here instead of stdout.
    #[arg(long, short, global = true)]
    output: Option<PathBuf>,
    /// Report format; csv applies to tabular outputs only.
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
    #[command(subcommand)]
    command: Command,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Case label and predicted edge phases of a boundary condition.
    Classify(ExtArgs),
    /// Boundary winding versus bound-state count.
    Levinson(LevinsonArgs),
    /// Negative eigenvalues with multiplicities.
    Spectrum(ExtArgs),
    /// Scattering matrix at one kappa or on a log grid.
    Smatrix(SmatrixArgs),
    /// Chern number of the bound-state bundle over the sphere of extensions.
    Chern(ChernArgs),
    /// Degree-3 trace pairing over X x square.
    Trace3(Trace3Args),
    /// Describe the JSON and CSV output formats.
    #[command(long_about = FORMATS)]
    EmitFormats,
}

/// A boundary condition, either `(C, D)` or `U`, and the flux.
#[derive(Args, Debug, Clone)]
struct ExtArgs {
    #[arg(long = "C", allow_hyphen_values = true, requires = "d", conflicts_with = "u")]
    c: Option<String>,
    #[arg(long = "D", allow_hyphen_values = true, requires = "c")]
    d: Option<String>,
    /// Unitary parameter; uses C = (1 - U)/2, D = i(1 + U)/2.
    #[arg(long = "U", allow_hyphen_values = true)]
    u: Option<String>,
    /// Flux in (0, 1).
    #[arg(long, default_value_t = 0.5)]
    alpha: f64,
}

#[derive(Args, Debug)]
struct LevinsonArgs {
    #[command(flatten)]
    ext: ExtArgs,
    /// Run every table fixture and print a pass/fail matrix.
    #[arg(long, conflicts_with_all = ["random", "c", "u"])]
    table_suite: bool,
    /// Check this many seeded random pairs; a pair passes when the identity holds at every one of --alphas.
    #[arg(long, conflicts_with_all = ["c", "u"])]
    random: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Fluxes for --random.
    #[arg(long, value_delimiter = ',', default_value = "0.1,0.25,0.5,0.75,0.9")]
    alphas: Vec<f64>,
    /// Write the sampled boundary loop as CSV.
    #[arg(long)]
    emit_edges: Option<PathBuf>,
    /// Tighten the loop sampling (halve the step bound) this many times.
    #[arg(long, default_value_t = 0)]
    refine: u32,
}

#[derive(Args, Debug)]
struct SmatrixArgs {
    #[command(flatten)]
    ext: ExtArgs,
    /// Single kappa > 0 (0 and inf give the limits).
    #[arg(long, conflicts_with = "kappa_grid")]
    kappa: Option<f64>,
    /// lo:hi:n, log-spaced.
    #[arg(long)]
    kappa_grid: Option<String>,
}

#[derive(Args, Debug, Clone)]
struct SpecArgs {
    /// Eigenvalue with Im < 0.
    #[arg(long, allow_hyphen_values = true, default_value = "-i")]
    l1: String,
    /// Eigenvalue with Im > 0.
    #[arg(long, allow_hyphen_values = true, default_value = "i")]
    l2: String,
    #[arg(long, default_value_t = 0.5)]
    alpha: f64,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum Method {
    Boundary,
    Lattice,
    Curvature,
    /// Boundary and lattice.
    Both,
    All,
}

#[derive(Args, Debug)]
struct ChernArgs {
    #[command(flatten)]
    spec: SpecArgs,
    #[arg(long, value_enum, default_value_t = Method::Both)]
    method: Method,
    /// Lattice / curvature grid NrhoxNphi.
    #[arg(long, default_value = "64x64")]
    grid: String,
    /// Radii for the boundary integral, decreasing, in (0, 0.2].
    #[arg(long, value_delimiter = ',')]
    eps: Option<Vec<f64>>,
    /// Reverse the phi orientation.
    #[arg(long)]
    reverse: bool,
    /// Write lattice plaquette fluxes as CSV.
    #[arg(long)]
    emit_curvature: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct Trace3Args {
    #[command(flatten)]
    spec: SpecArgs,
    /// NrhoxNphix4xNt (intervals; 4 edges).
    #[arg(long, default_value = "48x48x4x96")]
    grid: String,
    /// Traverse the square backwards.
    #[arg(long)]
    reverse: bool,
    /// Skip the grid-doubling convergence check.
    #[arg(long)]
    no_doubling_check: bool,
}

/// Failure with its exit code.
struct Failure {
    code: u8,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e.class() {
            ErrorClass::Input => 1,
            ErrorClass::Degenerate => 2,
            ErrorClass::Numerical => 3,
        };
        Self {
            code,
            message: e.to_string(),
        }
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        // A closed downstream pipe (`| head`) is not an error.
        if e.kind() == io::ErrorKind::BrokenPipe {
            return Self {
                code: 0,
                message: String::new(),
            };
        }
        input_error(e.to_string())
    }
}

impl From<csv::Error> for Failure {
    fn from(e: csv::Error) -> Self {
        input_error(e.to_string())
    }
}

fn input_error(message: impl Into<String>) -> Failure {
    Failure {
        code: 1,
        message: message.into(),
    }
}

type Outcome = Result<(), Failure>;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    if cli.jobs > 0 {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(cli.jobs).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    }
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) if f.code == 0 => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn run(cli: &Cli) -> Outcome {
    let out = Output {
        path: cli.output.clone(),
        format: cli.format,
    };
    match &cli.command {
        Command::Classify(a) => cmd_classify(a, &out),
        Command::Levinson(a) => cmd_levinson(a, &out),
        Command::Spectrum(a) => cmd_spectrum(a, &out),
        Command::Smatrix(a) => cmd_smatrix(a, &out),
        Command::Chern(a) => cmd_chern(a, &out),
        Command::Trace3(a) => cmd_trace3(a, &out),
        Command::EmitFormats => {
            println!("{FORMATS}");
            Ok(())
        }
    }
}

struct Output {
    path: Option<PathBuf>,
    format: Format,
}

impl Output {
    fn sink(&self) -> io::Result<Box<dyn Write>> {
        Ok(match &self.path {
            Some(p) => Box::new(File::create(p)?),
            None => Box::new(io::stdout().lock()),
        })
    }

    fn json(&self, command: &str, body: Value) -> Outcome {
        let mut obj = json!({ "schema": SCHEMA, "command": command });
        if let (Value::Object(o), Value::Object(b)) = (&mut obj, body) {
            o.extend(b);
        }
        let mut w = self.sink()?;
        serde_json::to_writer_pretty(&mut w, &obj).map_err(|e| match e.io_error_kind() {
            Some(kind) => Failure::from(io::Error::from(kind)),
            None => input_error(e.to_string()),
        })?;
        writeln!(w)?;
        Ok(())
    }

    fn json_only(&self, command: &str) -> Outcome {
        if self.format == Format::Csv {
            return Err(input_error(format!("{command} has no CSV output")));
        }
        Ok(())
    }

    fn csv<R: Serialize>(&self, rows: &[R]) -> Outcome {
        write_csv(self.sink()?, rows)
    }
}

fn write_csv<R: Serialize>(w: impl Write, rows: &[R]) -> Outcome {
    let mut wr = csv::Writer::from_writer(w);
    for r in rows {
        wr.serialize(r)?;
    }
    wr.flush()?;
    Ok(())
}

fn to_value<S: Serialize>(s: &S) -> Value {
    serde_json::to_value(s).expect("serializable report")
}

fn flux(a: f64) -> Result<Alpha, Failure> {
    Ok(Alpha::new(a)?)
}

/// Validated `(pair, α)`.
fn resolve(a: &ExtArgs) -> Result<(Pair, Alpha), Failure> {
    let alpha = flux(a.alpha)?;
    let pair = match (&a.c, &a.d, &a.u) {
        (Some(c), Some(d), None) => {
            let c = input::parse_matrix(c).map_err(input_error)?;
            let d = input::parse_matrix(d).map_err(input_error)?;
            Pair::new(c, d)?
        }
        (None, None, Some(u)) => {
            let u = input::parse_matrix(u).map_err(input_error)?;
            from_unitary(&ExtensionPoint::new(u)?)
        }
        _ => return Err(input_error("give either --C and --D, or --U")),
    };
    Ok((pair, alpha))
}

fn pair_json(pair: &Pair, alpha: Alpha) -> Value {
    json!({ "C": to_value(&pair.c), "D": to_value(&pair.d), "alpha": alpha.value() })
}

fn cmd_classify(a: &ExtArgs, out: &Output) -> Outcome {
    out.json_only("classify")?;
    let (pair, alpha) = resolve(a)?;
    let c = classify(&pair, alpha)?;
    out.json(
        "classify",
        json!({ "input": pair_json(&pair, alpha), "case": c.case().name(), "classification": to_value(&c) }),
    )
}

#[derive(Serialize)]
struct SuiteRow {
    label: String,
    alpha: f64,
    wind: i64,
    bound_count: usize,
    phi1: f64,
    phi2: f64,
    phi3: f64,
    phi4: f64,
    holds: bool,
}

#[derive(Serialize)]
struct EdgeRow {
    edge_id: usize,
    parameter: f64,
    g11_re: f64,
    g11_im: f64,
    g12_re: f64,
    g12_im: f64,
    g21_re: f64,
    g21_im: f64,
    g22_re: f64,
    g22_im: f64,
    det_phase: f64,
}

fn suite_row(label: String, alpha: f64, r: Result<(bool, levinson_ab::winding::LevinsonReport<f64>), Error>) -> SuiteRow {
    match r {
        Ok((holds, r)) => SuiteRow {
            label,
            alpha,
            wind: r.wind,
            bound_count: r.bound_count,
            phi1: r.phi[0],
            phi2: r.phi[1],
            phi3: r.phi[2],
            phi4: r.phi[3],
            holds,
        },
        Err(_) => SuiteRow {
            label,
            alpha,
            wind: 0,
            bound_count: 0,
            phi1: f64::NAN,
            phi2: f64::NAN,
            phi3: f64::NAN,
            phi4: f64::NAN,
            holds: false,
        },
    }
}

/// Consecutive runs of `group` rows form one case; a case passes when all its rows hold.
fn finish_suite(out: &Output, mode: &str, extra: Value, rows: Vec<SuiteRow>, group: usize) -> Outcome {
    let passed = rows.chunks(group).filter(|c| c.iter().all(|r| r.holds)).count();
    let total = rows.len().div_ceil(group);
    if out.format == Format::Csv {
        out.csv(&rows)?;
    } else {
        let checks_passed = rows.iter().filter(|r| r.holds).count();
        let mut body = json!({
            "mode": mode,
            "passed": passed,
            "total": total,
            "checks_passed": checks_passed,
            "checks": rows.len(),
            "rows": to_value(&rows),
        });
        if let (Value::Object(b), Value::Object(e)) = (&mut body, extra) {
            b.extend(e);
        }
        out.json("levinson", body)?;
    }
    eprintln!("{passed}/{total} pass");
    if passed == total {
        Ok(())
    } else {
        Err(Failure {
            code: 2,
            message: format!("{} of {total} cases fail", total - passed),
        })
    }
}

fn cmd_levinson(a: &LevinsonArgs, out: &Output) -> Outcome {
    if a.table_suite {
        let rows: Vec<SuiteRow> = table_fixtures::<f64>()
            .into_par_iter()
            .map(|f| suite_row(f.case.name().to_string(), f.alpha.value(), levinson_check(&f.pair, f.alpha)))
            .collect();
        return finish_suite(out, "table_suite", json!({}), rows, 1);
    }
    if let Some(n) = a.random {
        let alphas = a.alphas.iter().map(|&x| flux(x)).collect::<Result<Vec<_>, _>>()?;
        if alphas.is_empty() || n == 0 {
            return Err(input_error("--random needs at least one pair and one flux"));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(a.seed);
        let seeds: Vec<u64> = (0..n).map(|_| rng.random()).collect();
        let rows: Vec<SuiteRow> = seeds
            .par_iter()
            .flat_map_iter(|&s| {
                let pair = random_pair::<f64>(s);
                alphas
                    .iter()
                    .map(move |&al| suite_row(format!("pair:{s}"), al.value(), levinson_check(&pair, al)))
            })
            .collect();
        let extra = json!({ "seed": a.seed, "pairs": n, "alphas": a.alphas });
        return finish_suite(out, "random", extra, rows, alphas.len());
    }
    out.json_only("levinson")?;
    let (pair, alpha) = resolve(&a.ext)?;
    let mut opts = SamplingOptions::default();
    for _ in 0..a.refine {
        opts = opts.doubled();
    }
    let (report, lp) = total_winding_with(&pair, alpha, opts)?;
    let holds = report.holds();
    if let Some(path) = &a.emit_edges {
        emit_edges(path, &lp)?;
    }
    out.json(
        "levinson",
        json!({ "input": pair_json(&pair, alpha), "holds": holds, "report": to_value(&report) }),
    )?;
    if holds {
        Ok(())
    } else {
        Err(Failure {
            code: 2,
            message: format!("winding {} does not match {} bound states", report.wind, report.bound_count),
        })
    }
}

fn emit_edges(path: &Path, lp: &levinson_ab::winding::BoundaryLoop<f64>) -> Outcome {
    let mut rows = Vec::new();
    for e in &lp.edges {
        for ((&p, g), &ph) in e.params.iter().zip(&e.values).zip(e.det_phases()) {
            let r = g.to_reals();
            rows.push(EdgeRow {
                edge_id: e.edge.index(),
                parameter: p,
                g11_re: r[0],
                g11_im: r[1],
                g12_re: r[2],
                g12_im: r[3],
                g21_re: r[4],
                g21_im: r[5],
                g22_re: r[6],
                g22_im: r[7],
                det_phase: ph,
            });
        }
    }
    write_csv(File::create(path)?, &rows)
}

fn cmd_spectrum(a: &ExtArgs, out: &Output) -> Outcome {
    out.json_only("spectrum")?;
    let (pair, alpha) = resolve(a)?;
    let pts = bound_states(&pair, alpha)?;
    out.json(
        "spectrum",
        json!({
            "input": pair_json(&pair, alpha),
            "expected_count": negative_count_cdstar(&pair),
            "bound_states": to_value(&pts),
        }),
    )
}

#[derive(Serialize)]
struct KappaRow {
    kappa: f64,
    s11_re: f64,
    s11_im: f64,
    s12_re: f64,
    s12_im: f64,
    s21_re: f64,
    s21_im: f64,
    s22_re: f64,
    s22_im: f64,
    unitarity_residual: f64,
}

fn kappa_row(kappa: f64, s: &Mat2) -> KappaRow {
    let r = s.to_reals();
    KappaRow {
        kappa,
        s11_re: r[0],
        s11_im: r[1],
        s12_re: r[2],
        s12_im: r[3],
        s21_re: r[4],
        s21_im: r[5],
        s22_re: r[6],
        s22_im: r[7],
        unitarity_residual: s.unitarity_residual(),
    }
}

fn cmd_smatrix(a: &SmatrixArgs, out: &Output) -> Outcome {
    let (pair, alpha) = resolve(&a.ext)?;
    let edges = gamma_edges(&pair, alpha)?;
    let (s0, sinf) = edges.endpoints();
    if let Some(g) = &a.kappa_grid {
        let grid = input::parse_kappa_grid(g).map_err(input_error)?;
        let rows: Vec<KappaRow> = grid.iter().map(|&k| kappa_row(k, &edges.gamma2(k))).collect();
        return match out.format {
            Format::Csv => out.csv(&rows),
            Format::Json => out.json(
                "smatrix",
                json!({ "input": pair_json(&pair, alpha), "grid": g, "rows": to_value(&rows) }),
            ),
        };
    }
    out.json_only("smatrix")?;
    let mut body = json!({
        "input": pair_json(&pair, alpha),
        "limits": { "zero": to_value(&s0), "infinity": to_value(&sinf) },
    });
    if let Some(k) = a.kappa {
        if !(k >= 0.0) {
            return Err(input_error(format!("kappa must be nonnegative, got {k}")));
        }
        let s = s_matrix(&pair, alpha, k)?;
        body["kappa"] = json!(k);
        body["S"] = to_value(&s);
        body["unitarity_residual"] = json!(s.unitarity_residual());
    }
    out.json("smatrix", body)
}

fn resolve_spec(a: &SpecArgs) -> Result<ManifoldSpec<f64>, Failure> {
    let l1 = input::parse_complex(&a.l1).map_err(input_error)?;
    let l2 = input::parse_complex(&a.l2).map_err(input_error)?;
    // Accept eigenvalues typed with a few digits, e.g. 0.5-0.866i.
    let unit = |z: levinson_ab::Complex64| if (z.norm() - 1.0).abs() < 1e-3 { cis(z.arg()) } else { z };
    Ok(ManifoldSpec::new(unit(l1), unit(l2), flux(a.alpha)?)?)
}

fn spec_json(s: &ManifoldSpec<f64>) -> Value {
    let (l1, l2) = s.lambdas();
    let (r1, r2) = s.r();
    json!({
        "lambda1": [l1.re, l1.im],
        "lambda2": [l2.re, l2.im],
        "alpha": s.alpha().value(),
        "r1": r1,
        "r2": r2,
    })
}

fn cmd_chern(a: &ChernArgs, out: &Output) -> Outcome {
    out.json_only("chern")?;
    let spec = resolve_spec(&a.spec)?;
    let (n_rho, n_phi) = input::parse_grid2(&a.grid).map_err(input_error)?;
    let (boundary, lattice, curvature) = match a.method {
        Method::Boundary => (true, false, false),
        Method::Lattice => (false, true, false),
        Method::Curvature => (false, false, true),
        Method::Both => (true, true, false),
        Method::All => (true, true, true),
    };
    if a.emit_curvature.is_some() && !lattice {
        return Err(input_error("--emit-curvature needs the lattice method"));
    }
    let orientation = if a.reverse { Orientation::Reversed } else { Orientation::Standard };
    let sign = if a.reverse { -1.0 } else { 1.0 };
    let mut results: Vec<ChernResult<f64>> = Vec::new();
    if boundary {
        let eps = a.eps.clone().unwrap_or_else(|| DEFAULT_EPSILONS.to_vec());
        let mut r = chern_boundary(&spec, &eps)?;
        // The boundary circle carries the orientation through the sign only.
        r.value *= sign;
        results.push(r);
    }
    if lattice {
        let (r, fluxes) = chern_lattice_with(&spec, n_rho, n_phi, orientation)?;
        if let Some(p) = &a.emit_curvature {
            write_csv(File::create(p)?, &fluxes)?;
        }
        results.push(r);
    }
    if curvature {
        let mut r = chern_curvature(&spec, n_rho, n_phi)?;
        r.value *= sign;
        results.push(r);
    }
    let rounded: Vec<i64> = results.iter().map(|r| r.rounded()).collect();
    let agree = rounded.windows(2).all(|w| w[0] == w[1]);
    out.json(
        "chern",
        json!({
            "spec": spec_json(&spec),
            "orientation": if a.reverse { "reversed" } else { "standard" },
            "value": if agree { json!(rounded[0]) } else { Value::Null },
            "methods_agree": agree,
            "results": to_value(&results),
        }),
    )?;
    if agree {
        Ok(())
    } else {
        Err(Failure {
            code: 2,
            message: format!("methods disagree: {rounded:?}"),
        })
    }
}

fn cmd_trace3(a: &Trace3Args, out: &Output) -> Outcome {
    out.json_only("trace3")?;
    let spec = resolve_spec(&a.spec)?;
    let grid: Trace3Grid = a.grid.parse()?;
    let report = trace3_degree_with(
        &spec,
        Trace3Options {
            grid,
            traversal: if a.reverse { Traversal::Reversed } else { Traversal::Forward },
            check_doubling: !a.no_doubling_check,
        },
    )?;
    out.json(
        "trace3",
        json!({ "spec": spec_json(&spec), "value": report.value, "report": to_value(&report) }),
    )
}
