use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use privregion::closed_form::{gaussian_region, hamming_waterfill, GaussianModel};
use privregion::dp::{self, Mechanism, QuerySpec};
use privregion::oracle::{oracle_region, OracleConfig, RegionQuery};
use privregion::pipeline::{self, CsvRecord, SanitizationRun, Schema};
use privregion::prob::{Alphabet, Axis, Channel, DistJson, DistortionSpec, JointPmf, Pmf, Role};
use privregion::rd::{rd_at_distortion, rd_curve, BaConfig};
use privregion::region::{self, PrivacyProblem, ProblemJson, SolverConfig};
use privregion::{Error, Result};

#[derive(Parser)]
#[command(
    name = "privregion",
    version,
    about = "Rate, distortion and equivocation tradeoffs for categorical databases"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Sweep R(D), the frontier Gamma(D), or the full region on a grid.
    Curve(CurveArgs),
    /// Closed-form Hamming solution for a single source.
    Waterfill(WaterfillArgs),
    /// Frontier of the jointly Gaussian model.
    Gaussian(GaussianArgs),
    /// Release a sanitized copy of a CSV table.
    Sanitize(SanitizeArgs),
    /// Laplace-mechanism baseline.
    Dp(DpArgs),
    /// Compare the solver against exhaustive search on a small problem.
    OracleCheck(OracleArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Args)]
struct Output {
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
    /// Write here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum CurveKind {
    Rd,
    Gamma,
    Region,
}

#[derive(Args)]
struct CurveArgs {
    #[arg(value_enum)]
    kind: CurveKind,
    /// Distribution JSON: `{"axes": [...], "probs": [...]}`.
    #[arg(long)]
    pmf: PathBuf,
    /// `hamming` or a distortion JSON file.
    #[arg(long, default_value = "hamming")]
    distortion: String,
    /// `start:stop:step`, inclusive.
    #[arg(long, allow_hyphen_values = true)]
    d_grid: Option<String>,
    /// Equivocation grid for `region`, `start:stop:step`.
    #[arg(long, allow_hyphen_values = true)]
    e_grid: Option<String>,
    /// Keep side-information axes; otherwise they are marginalized out.
    #[arg(long)]
    side_info: bool,
    #[arg(long)]
    u_card: Option<usize>,
    /// Search only encoders that see the public attributes.
    #[arg(long)]
    markov: bool,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    multistarts: Option<usize>,
    #[command(flatten)]
    output: Output,
}

#[derive(Args)]
struct WaterfillArgs {
    #[arg(long)]
    pmf: PathBuf,
    #[arg(long, allow_hyphen_values = true)]
    d: f64,
    #[command(flatten)]
    output: Output,
}

#[derive(Args)]
struct GaussianArgs {
    #[arg(long)]
    sx2: f64,
    #[arg(long)]
    sy2: f64,
    #[arg(long, allow_hyphen_values = true)]
    rho: f64,
    #[arg(long, allow_hyphen_values = true)]
    d_grid: String,
    #[command(flatten)]
    output: Output,
}

#[derive(Args)]
struct SanitizeArgs {
    #[arg(long = "in")]
    input: PathBuf,
    /// Schema JSON: `{"attributes": [{"name", "role", "labels"}, ...]}`.
    #[arg(long)]
    schema: PathBuf,
    /// Target Hamming distortion on the public attributes.
    #[arg(long, allow_hyphen_values = true)]
    d: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Sanitized CSV.
    #[arg(long)]
    out: PathBuf,
    /// Also write the run metrics as JSON.
    #[arg(long)]
    metrics: Option<PathBuf>,
    /// Channel JSON to use instead of solving for one.
    #[arg(long)]
    channel: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum QueryKind {
    Count,
    Sum,
}

#[derive(Args)]
struct DpArgs {
    /// One value, or a comma-separated grid for the accuracy curve.
    #[arg(
        long,
        value_delimiter = ',',
        required = true,
        allow_hyphen_values = true
    )]
    epsilon: Vec<f64>,
    #[arg(long, value_enum, default_value = "count")]
    query: QueryKind,
    /// Clipping bounds `lo,hi` for sums.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    clip: Option<Vec<f64>>,
    /// Override the sensitivity derived from the query.
    #[arg(long)]
    sensitivity: Option<f64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// True answers to perturb, comma-separated; without it the accuracy
    /// curve is printed.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    values: Option<Vec<f64>>,
    /// Print the density-ratio check instead.
    #[arg(long)]
    check: bool,
    #[command(flatten)]
    output: Output,
}

#[derive(Args)]
struct OracleArgs {
    /// Problem JSON: `{"joint": ..., "distortion": "hamming" | {...}, "u_cardinality": n}`.
    #[arg(long)]
    problem: PathBuf,
    #[arg(long, default_value_t = 0.05)]
    q: f64,
    #[arg(long, default_value_t = 10_000_000)]
    budget: u64,
    /// Distortion levels, comma-separated.
    #[arg(
        long,
        value_delimiter = ',',
        required = true,
        allow_hyphen_values = true
    )]
    d: Vec<f64>,
    /// Equivocation levels for rate queries, comma-separated.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    e: Vec<f64>,
    #[arg(long)]
    markov: bool,
    #[command(flatten)]
    output: Output,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            // usage errors are validation errors, not infeasibility
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let r = match cli.cmd {
        Cmd::Curve(a) => curve(a),
        Cmd::Waterfill(a) => waterfill(a),
        Cmd::Gaussian(a) => gaussian(a),
        Cmd::Sanitize(a) => sanitize(a),
        Cmd::Dp(a) => dp_cmd(a),
        Cmd::OracleCheck(a) => oracle_check(a),
    };
    match r {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn parse_grid(s: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = s.split(':').collect();
    let num = |t: &str| {
        t.trim()
            .parse::<f64>()
            .map_err(|_| Error::invalid(format!("bad number {t:?} in grid {s:?}")))
    };
    match parts.as_slice() {
        [v] => Ok(vec![num(v)?]),
        [a, b, step] => {
            let (a, b, step) = (num(a)?, num(b)?, num(step)?);
            if !(step > 0.0) || b < a {
                return Err(Error::invalid(format!(
                    "grid {s:?} needs start <= stop and step > 0"
                )));
            }
            let n = ((b - a) / step + 1e-9).floor() as usize;
            Ok((0..=n).map(|i| a + step * i as f64).collect())
        }
        _ => Err(Error::invalid(format!("grid {s:?} is not start:stop:step"))),
    }
}

fn open_out(out: &Option<PathBuf>) -> Result<Box<dyn Write>> {
    Ok(match out {
        Some(p) => Box::new(BufWriter::new(File::create(p).map_err(|e| io_err(p, e))?)),
        None => Box::new(io::stdout().lock()),
    })
}

fn io_err(p: &Path, e: io::Error) -> Error {
    Error::io(p, e)
}

fn emit<T: CsvRecord + Serialize>(o: &Output, items: &[T]) -> Result<()> {
    let mut w = open_out(&o.out)?;
    match o.format {
        Format::Csv => pipeline::write_csv(&mut w, items)?,
        Format::Json => {
            serde_json::to_writer_pretty(&mut w, items)?;
            writeln!(w).map_err(|e| io_err(Path::new("<stdout>"), e))?;
        }
    }
    w.flush().map_err(|e| io_err(Path::new("<stdout>"), e))
}

fn read_joint(path: &Path) -> Result<JointPmf> {
    pipeline::import_json::<JointPmf>(path)
}

/// Single-axis source: the file's only axis, or the product of its public axes.
fn read_source(path: &Path) -> Result<Pmf> {
    let j = read_joint(path)?;
    if j.axes().len() == 1 {
        return Pmf::try_from(DistJson::from(j));
    }
    let public = j.axes_where(Role::is_public);
    let labels: Vec<&Alphabet> = public.iter().map(|&i| &j.axis(i).alphabet).collect();
    Pmf::new(Alphabet::product(&labels)?, j.marginal(&public)?)
}

fn read_distortion(spec: &str, n: usize) -> Result<DistortionSpec> {
    if spec == "hamming" {
        Ok(DistortionSpec::hamming(n))
    } else {
        pipeline::import_json(Path::new(spec))
    }
}

fn solver_cfg(seed: u64, multistarts: Option<usize>) -> SolverConfig {
    let mut cfg = SolverConfig {
        rng_seed: seed,
        ..SolverConfig::default()
    };
    if let Some(m) = multistarts {
        cfg.multistarts = m;
    }
    cfg
}

fn curve(a: CurveArgs) -> Result<()> {
    let d_grid = a.d_grid.as_deref().map(parse_grid).transpose()?;
    match a.kind {
        CurveKind::Rd => {
            let p = read_source(&a.pmf)?;
            let d = read_distortion(&a.distortion, p.len())?;
            let cfg = BaConfig::default();
            let pts = match d_grid {
                Some(g) => g
                    .iter()
                    .map(|&t| rd_at_distortion(&p, &d, t, &cfg))
                    .collect::<Result<Vec<_>>>()?,
                None => rd_curve(&p, &d, &cfg)?,
            };
            emit(&a.output, &pts)
        }
        CurveKind::Gamma | CurveKind::Region => {
            let d_grid = d_grid.ok_or_else(|| Error::invalid("--d-grid is required"))?;
            let joint = read_joint(&a.pmf)?;
            let nr = joint.product_size(&joint.axes_where(Role::is_public));
            let d = read_distortion(&a.distortion, nr)?;
            let mut prob = PrivacyProblem::new(joint, d, a.u_card)?;
            if !a.side_info && prob.has_side_info() {
                prob = prob.without_side_info()?;
            }
            let cfg = solver_cfg(a.seed, a.multistarts);
            if matches!(a.kind, CurveKind::Gamma) {
                let f = if a.markov {
                    region::markov_gamma_of_d
                } else {
                    region::gamma_of_d
                };
                let pts = d_grid
                    .iter()
                    .map(|&t| f(&prob, t, &cfg))
                    .collect::<Result<Vec<_>>>()?;
                return emit(&a.output, &pts);
            }
            let e_grid = match &a.e_grid {
                Some(s) => parse_grid(s)?,
                None => Vec::new(),
            };
            let c = region::region_curve(&prob, &d_grid, &e_grid, &cfg)?;
            let mut w = open_out(&a.output.out)?;
            match a.output.format {
                Format::Json => {
                    serde_json::to_writer_pretty(&mut w, &c)?;
                    writeln!(w).map_err(|e| io_err(Path::new("<stdout>"), e))?;
                }
                Format::Csv => {
                    let all: Vec<_> = c.boundary.into_iter().chain(c.surface).collect();
                    pipeline::write_csv(&mut w, &all)?;
                }
            }
            w.flush().map_err(|e| io_err(Path::new("<stdout>"), e))
        }
    }
}

fn waterfill(a: WaterfillArgs) -> Result<()> {
    let p = read_source(&a.pmf)?;
    let sol = hamming_waterfill(&p, a.d)?;
    match a.output.format {
        Format::Csv => emit(&a.output, std::slice::from_ref(&sol)),
        Format::Json => {
            let mut w = open_out(&a.output.out)?;
            serde_json::to_writer_pretty(&mut w, &sol)?;
            writeln!(w).map_err(|e| io_err(Path::new("<stdout>"), e))
        }
    }
}

fn gaussian(a: GaussianArgs) -> Result<()> {
    let m = GaussianModel::new(a.sx2, a.sy2, a.rho)?;
    let pts = gaussian_region(&m, &parse_grid(&a.d_grid)?)?;
    emit(&a.output, &pts)
}

fn sanitize(a: SanitizeArgs) -> Result<()> {
    let schema = Schema::from_json_file(&a.schema)?;
    let table = pipeline::ingest_csv(&a.input, &schema)?;
    let joint = pipeline::empirical_joint(&table)?;
    let public = schema.columns_where(Role::is_public);
    let nr = schema.product_size(&public);
    let hamming = DistortionSpec::hamming(nr);

    let run = if let Some(path) = &a.channel {
        let c: Channel = pipeline::import_json(path)?;
        SanitizationRun::new(&table, c, a.seed)?
    } else if schema.encoder_columns().len() == 1 && schema.attributes[public[0]].role == Role::Both
    {
        // single census column: closed form on the empirical law
        let col = public[0];
        let p = Pmf::new(
            schema.attributes[col].alphabet.clone(),
            joint.marginal(&[col])?,
        )?;
        let sol = hamming_waterfill(&p, a.d)?;
        SanitizationRun::new(&table, sol.forward_channel, a.seed)?
    } else {
        let prob = PrivacyProblem::new(joint, hamming.clone(), None)?;
        let pt = region::gamma_of_d(&prob, a.d, &SolverConfig::default())?;
        if prob.has_side_info() {
            // release U; the reader decodes with its own side information
            SanitizationRun::new(&table, pt.channel, a.seed)?.with_decoder(pt.decoder)?
        } else {
            let c = compose_decoder(&pt.channel, &pt.decoder, &schema, &public)?;
            SanitizationRun::new(&table, c, a.seed)?
        }
    };
    run.output.write_csv_file(&a.out)?;
    let m = pipeline::measure(&run, &hamming)?;
    if let Some(p) = &a.metrics {
        pipeline::export_json(p, &m)?;
    }
    eprintln!(
        "n={} distortion={} equivocation={} (expected {} / {})",
        m.n,
        pipeline::fmt_sig(m.empirical_distortion),
        pipeline::fmt_sig(m.plug_in_equivocation),
        pipeline::fmt_sig(m.theoretical_distortion),
        pipeline::fmt_sig(m.theoretical_equivocation)
    );
    Ok(())
}

/// `p(x_hat | x) = sum_u c(u | x) [g(u) = x_hat]`.
fn compose_decoder(c: &Channel, g: &[usize], schema: &Schema, public: &[usize]) -> Result<Channel> {
    let parts: Vec<&Alphabet> = public
        .iter()
        .map(|&i| &schema.attributes[i].alphabet)
        .collect();
    let out = Alphabet::product(&parts)?;
    let name = public
        .iter()
        .map(|&i| schema.attributes[i].name.as_str())
        .collect::<Vec<_>>()
        .join("_");
    let k = out.size();
    let mut m = vec![0.0; c.n_in() * k];
    for x in 0..c.n_in() {
        for (u, &p) in c.row(x).iter().enumerate() {
            m[x * k + g[u]] += p;
        }
    }
    Channel::normalized(
        c.inputs().to_vec(),
        Axis::new(name, Role::Reconstruction, out),
        m,
    )
}

fn dp_cmd(a: DpArgs) -> Result<()> {
    let q = match (a.query, &a.clip) {
        (QueryKind::Count, _) => QuerySpec::Count,
        (QueryKind::Sum, Some(c)) => match c[..] {
            [lo, hi] => QuerySpec::clipped_sum(lo, hi)?,
            _ => return Err(Error::invalid("--clip takes lo,hi")),
        },
        (QueryKind::Sum, None) => QuerySpec::Sum,
    };
    let delta_f = match a.sensitivity {
        Some(s) => s,
        None => dp::sensitivity(&q)?,
    };
    if a.check {
        let reports = a
            .epsilon
            .iter()
            .map(|&eps| {
                let m = Mechanism::new(eps, delta_f)?;
                dp::dp_ratio_check_with(m.scale(), eps, delta_f, 200_000, a.seed)
            })
            .collect::<Result<Vec<_>>>()?;
        let mut w = open_out(&a.output.out)?;
        serde_json::to_writer_pretty(&mut w, &reports)?;
        return writeln!(w).map_err(|e| io_err(Path::new("<stdout>"), e));
    }
    if let Some(values) = &a.values {
        let [eps] = a.epsilon[..] else {
            return Err(Error::invalid("perturbing values takes a single --epsilon"));
        };
        let noisy = Mechanism::new(eps, delta_f)?.apply(values, a.seed);
        let mut w = open_out(&a.output.out)?;
        match a.output.format {
            Format::Json => serde_json::to_writer(&mut w, &noisy)?,
            Format::Csv => {
                let mut cw = csv::Writer::from_writer(&mut w);
                cw.write_record(["value", "noisy"])?;
                for (v, n) in values.iter().zip(&noisy) {
                    cw.write_record([pipeline::fmt_sig(*v), pipeline::fmt_sig(*n)])?;
                }
                cw.flush().map_err(|e| io_err(Path::new("<stdout>"), e))?;
            }
        }
        if matches!(a.output.format, Format::Json) {
            writeln!(w).map_err(|e| io_err(Path::new("<stdout>"), e))?;
        }
        return w.flush().map_err(|e| io_err(Path::new("<stdout>"), e));
    }
    let pts = a
        .epsilon
        .iter()
        .map(|&eps| {
            Mechanism::new(eps, delta_f).map(|m| dp::AccuracyPoint {
                epsilon: eps,
                expected_abs_error: m.scale(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    emit(&a.output, &pts)
}

#[derive(Serialize)]
struct CheckRow {
    query: &'static str,
    distortion: f64,
    equivocation: Option<f64>,
    solver: Option<f64>,
    oracle: Option<f64>,
    lower_bound: Option<f64>,
    upper_bound: Option<f64>,
    consistent: bool,
    note: String,
}

impl CsvRecord for CheckRow {
    const HEADER: &'static [&'static str] = &[
        "query",
        "distortion",
        "equivocation",
        "solver",
        "oracle",
        "lower_bound",
        "upper_bound",
        "consistent",
        "note",
    ];
    fn fields(&self) -> Vec<String> {
        let o = |v: Option<f64>| v.map(pipeline::fmt_sig).unwrap_or_default();
        vec![
            self.query.into(),
            pipeline::fmt_sig(self.distortion),
            o(self.equivocation),
            o(self.solver),
            o(self.oracle),
            o(self.lower_bound),
            o(self.upper_bound),
            self.consistent.to_string(),
            self.note.clone(),
        ]
    }
}

fn oracle_check(a: OracleArgs) -> Result<()> {
    let pj: ProblemJson = pipeline::import_json(&a.problem)?;
    let prob = pj.into_problem()?;
    let cfg = OracleConfig::new(a.q, a.budget)?;
    let mut queries: Vec<RegionQuery> = a.d.iter().map(|&d| RegionQuery::Gamma { d }).collect();
    for &d in &a.d {
        for &e in &a.e {
            queries.push(RegionQuery::Rate { d, e });
        }
    }
    let reports = oracle_region(&prob, &queries, a.markov, &cfg)?;
    let scfg = SolverConfig::default();
    let tol = 1e-9;
    let mut rows = Vec::new();
    for (q, rep) in queries.iter().zip(reports) {
        let (query, d, e, solved) = match *q {
            RegionQuery::Gamma { d } => {
                let s = if a.markov {
                    region::markov_gamma_of_d(&prob, d, &scfg)
                } else {
                    region::gamma_of_d(&prob, d, &scfg)
                };
                ("gamma", d, None, s.map(|p| p.equivocation))
            }
            RegionQuery::Rate { d, e } => {
                let s = if a.markov {
                    region::markov_restricted_solver(&prob, d, e, &scfg)
                } else {
                    region::r_of_de(&prob, d, e, &scfg)
                };
                ("rate", d, Some(e), s.map(|p| p.rate))
            }
        };
        let row = match (solved, rep) {
            (Ok(v), Ok(r)) => {
                let consistent = match q {
                    RegionQuery::Gamma { .. } => v >= r.value - tol && v <= r.upper_bound + tol,
                    RegionQuery::Rate { .. } => v <= r.value + tol && v >= r.lower_bound - tol,
                };
                CheckRow {
                    query,
                    distortion: d,
                    equivocation: e,
                    solver: Some(v),
                    oracle: Some(r.value),
                    lower_bound: Some(r.lower_bound),
                    upper_bound: Some(r.upper_bound),
                    consistent,
                    note: String::new(),
                }
            }
            (s, r) => {
                // both infeasible is agreement
                let consistent = s.is_err() && r.is_err();
                let note = [s.err(), r.err()]
                    .into_iter()
                    .flatten()
                    .map(|e| e.to_string())
                    .collect::<Vec<_>>()
                    .join("; ");
                CheckRow {
                    query,
                    distortion: d,
                    equivocation: e,
                    solver: None,
                    oracle: None,
                    lower_bound: None,
                    upper_bound: None,
                    consistent,
                    note,
                }
            }
        };
        rows.push(row);
    }
    emit(&a.output, &rows)?;
    let bad = rows.iter().filter(|r| !r.consistent).count();
    if bad > 0 {
        return Err(Error::invalid(format!(
            "{bad} solver values fall outside the oracle bracket"
        )));
    }
    Ok(())
}
