//! Command-line front end.
//!
//! Every command produces a JSON value; `text` output is a flat rendering of
//! that value, and `csv`/`newick` are available where a table or a tree makes
//! sense. Exit codes: 0 success, 1 input or configuration error, 2 a certified
//! bound or certificate that does not hold, 3 an undecided extraction.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::builder::{build_embedding, plan_blocks, plan_singletons, EmbeddingPlan, EmbeddingReport, Mode, PairRecord};
use crate::certificate::{Certificate, Disagreement};
use crate::error::{Error, Result};
use crate::extractor::generators::GeneratorConfig;
use crate::extractor::{classify, cluster_blocks, extract, Case, Classification, ExtractionResult, PointStream};
use crate::hilbert::{coordinates_about, CoordinateEmbedding};
use crate::metric::{
    is_ultrametric, matrix_to_csv, parse_matrix, subdominant_ultrametric, Metric, UltraSpace,
    DEFAULT_RELATIVE_TOLERANCE,
};
use crate::oracle::{best_equilateral_subset, best_subset_under_distortion, SubsetSearchResult, DEFAULT_CAP};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 1;
pub const EXIT_BOUND: i32 = 2;
pub const EXIT_UNDECIDED: i32 = 3;

/// Points drawn from a named generator when `--horizon` is not given.
pub const DEFAULT_GENERATOR_POINTS: usize = 500;

#[derive(Parser, Debug)]
#[command(name = "ultraembed", version, about = "Extract structured subsequences and embed them into ultrametrics")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[arg(long, value_enum, default_value_t = Format::Json, global = true)]
    pub format: Format,
    /// Write the report to this file instead of stdout.
    #[arg(long, global = true)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
    Newick,
    Text,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Singleton,
    Block,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Objective {
    /// Largest subset embeddable into an ultrametric with the given distortion.
    Distortion,
    /// Largest subset with all distances within a factor `1+ε`.
    Equilateral,
}

#[derive(Args, Debug, Clone)]
pub struct SourceArgs {
    /// Distance matrix: CSV rows, or JSON `{"n": .., "d": [upper triangle]}`.
    #[arg(long, conflicts_with = "generator")]
    pub input: Option<PathBuf>,
    /// Generator name (powers, harmonic, sphere, grid, two_clusters) or a
    /// JSON generator config.
    #[arg(long)]
    pub generator: Option<String>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Number of points to use.
    #[arg(long)]
    pub horizon: Option<usize>,
    /// Additive slack in the triangle inequality when reading a matrix.
    #[arg(long)]
    pub tolerance: Option<f64>,
}

#[derive(Args, Debug, Clone)]
pub struct RunArgs {
    #[arg(long, default_value_t = 1.0)]
    pub epsilon: f64,
    #[arg(long, default_value_t = 8)]
    pub target: usize,
}

#[derive(Args, Debug, Clone)]
pub struct EmbedArgs {
    #[arg(long, value_enum, default_value_t = ModeArg::Singleton)]
    pub mode: ModeArg,
    /// Number of clusters to cut the input into in block mode.
    #[arg(long)]
    pub blocks: Option<usize>,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Check the metric axioms and report whether the input is ultrametric.
    Validate {
        #[command(flatten)]
        source: SourceArgs,
    },
    /// Report how many points each extractor certifies.
    Classify {
        #[command(flatten)]
        source: SourceArgs,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Extract a certified subsequence.
    Extract {
        #[command(flatten)]
        source: SourceArgs,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Extract and embed into a sup-product ultrametric.
    Embed {
        #[command(flatten)]
        source: SourceArgs,
        #[command(flatten)]
        run: RunArgs,
        #[command(flatten)]
        embed: EmbedArgs,
    },
    /// Exhaustive largest-subset search (small inputs only).
    Oracle {
        #[command(flatten)]
        source: SourceArgs,
        #[arg(long, value_enum, default_value_t = Objective::Distortion)]
        objective: Objective,
        /// Distortion bound; defaults to `1+ε`.
        #[arg(long)]
        distortion: Option<f64>,
        #[arg(long)]
        epsilon: Option<f64>,
        #[arg(long, default_value_t = DEFAULT_CAP)]
        cap: usize,
    },
    /// Euclidean coordinates for an ultrametric input.
    Hilbert {
        #[command(flatten)]
        source: SourceArgs,
        #[arg(long, default_value_t = 0)]
        basepoint: usize,
    },
    /// Extract, embed, re-verify and optionally compute coordinates.
    Pipeline {
        #[command(flatten)]
        source: SourceArgs,
        #[command(flatten)]
        run: RunArgs,
        #[command(flatten)]
        embed: EmbedArgs,
        /// Also realize the product ultrametric in Euclidean space.
        #[arg(long)]
        hilbert: bool,
    },
    /// Re-check a report against its input.
    Verify {
        #[command(flatten)]
        source: SourceArgs,
        #[arg(long)]
        report: PathBuf,
    },
}

/// What a command produced before formatting.
struct Outcome {
    value: Value,
    csv: Option<String>,
    newick: Option<String>,
    code: i32,
}

impl Outcome {
    fn json<T: Serialize>(v: &T, code: i32) -> Result<Self> {
        Ok(Outcome { value: serde_json::to_value(v)?, csv: None, newick: None, code })
    }
}

/// Parses `args` (including the program name) and runs the command, writing
/// the report to `out` (or `--output`) and diagnostics to `err`.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let text = e.render().to_string();
            return if e.use_stderr() {
                let _ = write!(err, "{text}");
                EXIT_INPUT
            } else {
                let _ = write!(out, "{text}");
                EXIT_OK
            };
        }
    };
    let outcome = match execute(&cli.command) {
        Ok(o) => o,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            return exit_code_for(&e);
        }
    };
    let rendered = match render(&outcome, cli.format) {
        Ok(s) => s,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            return EXIT_INPUT;
        }
    };
    let written = match &cli.output {
        Some(path) => std::fs::write(path, rendered.as_bytes()),
        None => out.write_all(rendered.as_bytes()),
    };
    if let Err(e) = written {
        let _ = writeln!(err, "error: {e}");
        return EXIT_INPUT;
    }
    outcome.code
}

pub fn exit_code_for(e: &Error) -> i32 {
    match e {
        Error::BoundViolation { .. }
        | Error::MissingCertificate(_)
        | Error::DiameterExceedsRadius { .. }
        | Error::NotPsd { .. }
        | Error::Reconstruction { .. } => EXIT_BOUND,
        _ => EXIT_INPUT,
    }
}

fn render(o: &Outcome, format: Format) -> Result<String> {
    let unavailable = |what: &str| Error::InvalidParameter(format!("{what} output is not available for this command"));
    Ok(match format {
        Format::Json => serde_json::to_string_pretty(&o.value)? + "\n",
        Format::Text => render_text(&o.value),
        Format::Csv => o.csv.clone().ok_or_else(|| unavailable("csv"))?,
        Format::Newick => o.newick.clone().ok_or_else(|| unavailable("newick"))? + "\n",
    })
}

/// One `key: value` line per top-level field; nested values stay compact JSON.
pub fn render_text(v: &Value) -> String {
    let mut s = String::new();
    match v {
        Value::Object(map) => {
            for (k, v) in map {
                let shown = match v {
                    Value::String(t) => t.clone(),
                    other => other.to_string(),
                };
                s.push_str(&format!("{k}: {shown}\n"));
            }
        }
        other => {
            s.push_str(&other.to_string());
            s.push('\n');
        }
    }
    s
}

/// Resolves a generator name or JSON config. Names draw `horizon` points
/// (default 500) and take `seed` where the generator is random.
pub fn generator_config(generator: &str, seed: u64, horizon: Option<usize>) -> Result<GeneratorConfig> {
    let generator = generator.trim();
    if generator.starts_with('{') {
        let mut v: Value = serde_json::from_str(generator)?;
        let seeded = matches!(v.get("kind").and_then(Value::as_str), Some("sphere" | "two_clusters"));
        if let Some(map) = v.as_object_mut() {
            if seeded && !map.contains_key("seed") {
                map.insert("seed".into(), Value::from(seed));
            }
        }
        return Ok(serde_json::from_value(v)?);
    }
    let n = horizon.unwrap_or(DEFAULT_GENERATOR_POINTS);
    Ok(match generator {
        "powers" => GeneratorConfig::Powers { n, base: 10.0 },
        "harmonic" => GeneratorConfig::Harmonic { n, exponent: 1.0, with_limit: true },
        "sphere" => GeneratorConfig::Sphere { n, dim: 20, seed },
        "grid" => GeneratorConfig::Grid { n, spacing: 1.0 },
        "two_clusters" => GeneratorConfig::TwoClusters {
            clusters: 2,
            per_cluster: n.div_ceil(2).max(1),
            separation: 1.0,
            spread: 0.01,
            seed,
        },
        other => {
            return Err(Error::InvalidParameter(format!(
                "unknown generator {other:?}; expected powers, harmonic, sphere, grid, two_clusters or a JSON config"
            )))
        }
    })
}

/// The input stream named by `--input` or `--generator`, cut to `--horizon`.
pub fn load_stream(src: &SourceArgs) -> Result<PointStream> {
    let (stream, named) = match (&src.input, &src.generator) {
        (Some(path), _) => {
            let text = std::fs::read_to_string(path)?;
            (PointStream::from_matrix(parse_matrix(&text, src.tolerance)?), false)
        }
        (None, Some(generator)) => {
            let config = generator_config(generator, src.seed, src.horizon)?;
            (config.stream()?, !generator.trim().starts_with('{'))
        }
        (None, None) => return Err(Error::InvalidParameter("one of --input or --generator is required".into())),
    };
    match src.horizon {
        Some(h) if !named && h < stream.horizon() => stream.with_horizon(h),
        _ => Ok(stream),
    }
}

fn source_name(src: &SourceArgs) -> String {
    match (&src.input, &src.generator) {
        (Some(p), _) => p.display().to_string(),
        (None, Some(g)) => g.trim().to_string(),
        _ => String::new(),
    }
}

fn labels_of(stream: &PointStream, indices: &[usize]) -> Vec<String> {
    indices.iter().map(|&i| stream.label(i)).collect()
}

fn labelled_newick(u: &UltraSpace, labels: Vec<String>) -> Result<String> {
    Ok(u.clone().with_labels(labels)?.to_newick())
}

fn csv_table(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)?;
    for r in rows {
        w.write_record(&r)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Parse(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

fn pairs_csv(pairs: &[PairRecord]) -> Result<String> {
    csv_table(
        &["i", "j", "d", "rho", "ratio"],
        pairs.iter().map(|p| {
            vec![p.i.to_string(), p.j.to_string(), format!("{:?}", p.d), format!("{:?}", p.rho), format!("{:?}", p.ratio)]
        }),
    )
}

fn execute(cmd: &Command) -> Result<Outcome> {
    match cmd {
        Command::Validate { source } => validate(source),
        Command::Classify { source, run } => {
            let stream = load_stream(source)?;
            let c = classify(&stream, run.epsilon, run.target)?;
            let code = if c.winner == Case::Undecided { EXIT_UNDECIDED } else { EXIT_OK };
            Outcome::json(
                &ClassifyOutput { epsilon: run.epsilon, target: run.target, horizon: stream.horizon(), classification: c },
                code,
            )
        }
        Command::Extract { source, run } => {
            let stream = load_stream(source)?;
            let r = extract(&stream, run.epsilon, run.target)?;
            let code = if r.is_decided() { EXIT_OK } else { EXIT_UNDECIDED };
            let mut o = Outcome::json(&r, code)?;
            o.csv = Some(csv_table(
                &["index", "label", "radius"],
                r.indices.iter().enumerate().map(|(k, &i)| {
                    let radius = r.params.radii.get(k).map(|v| format!("{v:?}")).unwrap_or_default();
                    vec![i.to_string(), stream.label(i), radius]
                }),
            )?);
            Ok(o)
        }
        Command::Embed { source, run, embed } => {
            let stream = load_stream(source)?;
            let e = embedding(&stream, run, embed)?;
            match (&e.report, &e.tree) {
                (Some(report), Some(tree)) => {
                    let mut o = Outcome::json(report, e.code)?;
                    o.csv = Some(pairs_csv(&report.pairs)?);
                    o.newick = Some(tree.clone());
                    Ok(o)
                }
                _ => Outcome::json(&UndecidedOutput::from(&e), e.code),
            }
        }
        Command::Oracle { source, objective, distortion, epsilon, cap } => {
            let stream = load_stream(source)?;
            let space = stream.prefix_space()?;
            let started = Instant::now();
            let r = match objective {
                Objective::Distortion => {
                    let bound = distortion.or(epsilon.map(|e| 1.0 + e)).ok_or_else(|| {
                        Error::InvalidParameter("oracle needs --distortion or --epsilon".into())
                    })?;
                    best_subset_under_distortion(&space, bound, *cap)?
                }
                Objective::Equilateral => {
                    let eps = epsilon.ok_or_else(|| Error::InvalidParameter("equilateral oracle needs --epsilon".into()))?;
                    best_equilateral_subset(&space, eps, *cap)?
                }
            };
            let seconds = started.elapsed().as_secs_f64();
            let mut o = Outcome::json(&OracleOutput { result: r.clone(), seconds }, EXIT_OK)?;
            o.csv = Some(csv_table(&["index", "label"], r.subset.iter().map(|&i| vec![i.to_string(), stream.label(i)]))?);
            Ok(o)
        }
        Command::Hilbert { source, basepoint } => {
            let stream = load_stream(source)?;
            let space = stream.prefix_space()?;
            let check = is_ultrametric(&space, 0.0);
            if let (false, Some(((i, j, k), slack))) = (check.holds, check.worst) {
                return Err(Error::NotUltrametric { i, j, k, slack });
            }
            let e = coordinates_about(&UltraSpace::new(space)?, *basepoint)?;
            let mut o = Outcome::json(&e, EXIT_OK)?;
            o.csv = Some(e.to_csv()?);
            Ok(o)
        }
        Command::Pipeline { source, run, embed, hilbert } => {
            let stream = load_stream(source)?;
            pipeline(&stream, &source_name(source), run, embed, *hilbert)
        }
        Command::Verify { source, report } => {
            let stream = load_stream(source)?;
            let text = std::fs::read_to_string(report)?;
            let v = verify_report(&stream, &serde_json::from_str(&text)?)?;
            let code = if v.agrees { EXIT_OK } else { EXIT_BOUND };
            Outcome::json(&v, code)
        }
    }
}

#[derive(Serialize)]
struct ValidateOutput {
    n: usize,
    diameter: f64,
    ultrametric: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    worst_triple: Option<(usize, usize, usize)>,
    #[serde(skip_serializing_if = "Option::is_none")]
    slack: Option<f64>,
}

fn validate(source: &SourceArgs) -> Result<Outcome> {
    let stream = load_stream(source)?;
    let space = stream.prefix_space()?;
    let check = is_ultrametric(&space, 0.0);
    let out = ValidateOutput {
        n: space.len(),
        diameter: space.diameter(),
        ultrametric: check.holds,
        worst_triple: check.worst.map(|w| w.0),
        slack: check.worst.map(|w| w.1),
    };
    let mut o = Outcome::json(&out, EXIT_OK)?;
    o.csv = Some(matrix_to_csv(&space));
    let labels = labels_of(&stream, &(0..space.len()).collect::<Vec<_>>());
    o.newick = Some(labelled_newick(&subdominant_ultrametric(&space), labels)?);
    Ok(o)
}

#[derive(Serialize)]
struct ClassifyOutput {
    epsilon: f64,
    target: usize,
    horizon: usize,
    classification: Classification,
}

#[derive(Serialize)]
struct OracleOutput {
    #[serde(flatten)]
    result: SubsetSearchResult,
    seconds: f64,
}

struct Embedding {
    extraction: Option<ExtractionResult>,
    plan: Option<EmbeddingPlan>,
    report: Option<EmbeddingReport>,
    tree: Option<String>,
    product: Option<UltraSpace>,
    code: i32,
}

#[derive(Serialize)]
struct UndecidedOutput {
    case: Case,
    #[serde(skip_serializing_if = "Option::is_none")]
    extraction: Option<ExtractionResult>,
    #[serde(skip_serializing_if = "Option::is_none")]
    skipped: Option<Vec<Vec<usize>>>,
}

impl From<&Embedding> for UndecidedOutput {
    fn from(e: &Embedding) -> Self {
        UndecidedOutput {
            case: Case::Undecided,
            extraction: e.extraction.clone(),
            skipped: e.plan.as_ref().map(|p| p.skipped.clone()),
        }
    }
}

fn embedding(stream: &PointStream, run: &RunArgs, args: &EmbedArgs) -> Result<Embedding> {
    let mut e = Embedding { extraction: None, plan: None, report: None, tree: None, product: None, code: EXIT_OK };
    let plan = match args.mode {
        ModeArg::Singleton => {
            let r = extract(stream, run.epsilon, run.target)?;
            if !r.is_decided() {
                e.extraction = Some(r);
                e.code = EXIT_UNDECIDED;
                return Ok(e);
            }
            let plan = plan_singletons(stream, &r)?;
            e.extraction = Some(r);
            plan
        }
        ModeArg::Block => {
            let k = args.blocks.ok_or_else(|| Error::InvalidParameter("block mode needs --blocks".into()))?;
            let space = stream.prefix_space()?;
            let family = cluster_blocks(&space, k)?;
            let plan = plan_blocks(&space, &family, run.epsilon, None, stream.limit())?;
            if plan.case == Case::Undecided {
                e.plan = Some(plan);
                e.code = EXIT_UNDECIDED;
                return Ok(e);
            }
            plan
        }
    };
    let (report, product) = build_embedding(stream, &plan)?;
    if !report.within_bound || !report.certificate.all_hold() {
        e.code = EXIT_BOUND;
    }
    let labels = labels_of(stream, &report.image);
    e.tree = Some(labelled_newick(product.space(), labels)?);
    e.product = Some(product.space().clone());
    e.report = Some(report);
    e.plan = Some(plan);
    Ok(e)
}

/// Consolidated `pipeline` output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineReport {
    pub source: String,
    pub horizon: usize,
    pub epsilon: f64,
    pub target: usize,
    pub mode: Mode,
    pub case: Case,
    /// Points selected, including the consumed basepoint block.
    pub subset_size: usize,
    pub selected: Vec<usize>,
    pub consumed: Vec<usize>,
    pub image: Vec<usize>,
    pub image_labels: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub distortion: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub scale: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bound: Option<f64>,
    pub within_bound: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub worst_lower: Option<PairRecord>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub worst_upper: Option<PairRecord>,
    /// Every certificate entry re-verified bit for bit and holds.
    pub verified: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tree: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub extraction: Option<ExtractionResult>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub report: Option<EmbeddingReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub hilbert: Option<CoordinateEmbedding>,
}

/// Runs extract, embed, re-verification and optionally coordinates; returns
/// the report with the exit code it warrants.
pub fn pipeline_report(
    stream: &PointStream,
    source: &str,
    run: &RunArgs,
    args: &EmbedArgs,
    hilbert: bool,
) -> Result<(PipelineReport, i32)> {
    let e = embedding(stream, run, args)?;
    let mode = match args.mode {
        ModeArg::Singleton => Mode::Singleton,
        ModeArg::Block => Mode::Block,
    };
    let mut selected: Vec<usize> = match (&e.extraction, &e.plan) {
        (Some(x), _) => x.indices.clone(),
        (None, Some(p)) => p.consumed.iter().copied().chain(p.image()).collect(),
        _ => vec![],
    };
    if mode == Mode::Block {
        selected.sort_unstable();
    }
    let consumed = e.plan.as_ref().map(|p| p.consumed.clone()).unwrap_or_default();
    let image = e.report.as_ref().map(|r| r.image.clone()).unwrap_or_default();
    let mut verified = false;
    let mut code = e.code;
    if let Some(r) = &e.report {
        verified = r.certificate.reverify(stream).is_empty() && r.certificate.all_hold();
        if let Some(x) = &e.extraction {
            verified &= x.certificate.reverify(stream).is_empty() && x.certificate.all_hold();
        }
        if !verified {
            code = EXIT_BOUND;
        }
    }
    let coords = match (&e.product, hilbert) {
        (Some(u), true) => Some(coordinates_about(u, 0)?),
        _ => None,
    };
    let report = PipelineReport {
        source: source.to_string(),
        horizon: stream.horizon(),
        epsilon: run.epsilon,
        target: run.target,
        mode,
        case: e.report.as_ref().map_or(Case::Undecided, |r| r.case),
        subset_size: selected.len(),
        selected,
        consumed,
        image_labels: labels_of(stream, &image),
        image,
        distortion: e.report.as_ref().map(|r| r.distortion),
        scale: e.report.as_ref().map(|r| r.scale),
        bound: e.report.as_ref().map(|r| r.bound),
        within_bound: e.report.as_ref().is_some_and(|r| r.within_bound),
        worst_lower: e.report.as_ref().and_then(|r| r.worst_lower),
        worst_upper: e.report.as_ref().and_then(|r| r.worst_upper),
        verified,
        tree: e.tree.clone(),
        extraction: e.extraction.clone(),
        report: e.report.clone(),
        hilbert: coords,
    };
    Ok((report, code))
}

fn pipeline(stream: &PointStream, source: &str, run: &RunArgs, args: &EmbedArgs, hilbert: bool) -> Result<Outcome> {
    let (report, code) = pipeline_report(stream, source, run, args, hilbert)?;
    let mut o = Outcome::json(&report, code)?;
    o.newick = report.tree.clone();
    o.csv = match (&report.hilbert, &report.report) {
        (Some(c), _) => Some(c.to_csv()?),
        (None, Some(r)) => Some(pairs_csv(&r.pairs)?),
        _ => None,
    };
    Ok(o)
}

/// Result of re-checking a stored report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyOutput {
    pub entries_checked: usize,
    pub pairs_checked: usize,
    /// Pass/fail of the stored report (all entries hold, bound met).
    pub stored_pass: bool,
    pub recomputed_pass: bool,
    /// No entry, pair or verdict differs from its recomputation.
    pub agrees: bool,
    pub disagreements: Vec<Disagreement>,
}

/// Recomputes every certificate entry and pair record of an extraction,
/// embedding or pipeline report against `metric`, bit for bit.
pub fn verify_report(metric: &impl Metric, report: &Value) -> Result<VerifyOutput> {
    // a pipeline report also repeats the distortion and verdict at top level
    let mut summary: Option<(Option<f64>, bool)> = None;
    let (extraction, embedding): (Option<ExtractionResult>, Option<EmbeddingReport>) = if report.get("source").is_some()
        && report.get("mode").is_some()
    {
        let p: PipelineReport = serde_json::from_value(report.clone())?;
        if p.report.is_none() && p.extraction.is_none() {
            return Err(Error::InvalidParameter("pipeline report has nothing to verify".into()));
        }
        summary = Some((p.distortion, p.within_bound));
        (p.extraction, p.report)
    } else if report.get("pairs").is_some() {
        (None, Some(serde_json::from_value(report.clone())?))
    } else if report.get("indices").is_some() {
        (Some(serde_json::from_value(report.clone())?), None)
    } else {
        return Err(Error::Parse("unrecognized report: expected an extraction, embedding or pipeline report".into()));
    };

    let mut out = VerifyOutput {
        entries_checked: 0,
        pairs_checked: 0,
        stored_pass: true,
        recomputed_pass: true,
        agrees: true,
        disagreements: vec![],
    };
    let check_cert = |cert: &Certificate, out: &mut VerifyOutput, offset: usize| {
        out.entries_checked += cert.len();
        for mut d in cert.reverify(metric) {
            d.entry += offset;
            out.disagreements.push(d);
        }
        out.stored_pass &= cert.all_hold();
        out.recomputed_pass &= cert.entries.iter().all(|e| {
            let (l, r) = e.claim.evaluate(metric);
            l <= r
        });
    };
    let mut offset = 0;
    if let Some(x) = &extraction {
        check_cert(&x.certificate, &mut out, 0);
        offset = x.certificate.len();
    }
    if let Some(r) = &embedding {
        check_cert(&r.certificate, &mut out, offset);
        let base = offset + r.certificate.len();
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for (k, p) in r.pairs.iter().enumerate() {
            if p.i.max(p.j) >= metric.len() {
                return Err(Error::IndexOutOfRange { index: p.i.max(p.j), len: metric.len() });
            }
            let d = metric.dist(p.i, p.j);
            let ratio = p.rho / d;
            lo = lo.min(ratio);
            hi = hi.max(ratio);
            if d.to_bits() != p.d.to_bits() || ratio.to_bits() != p.ratio.to_bits() {
                out.disagreements.push(Disagreement {
                    entry: base + k,
                    label: format!("pair ({}, {})", p.i, p.j),
                    stored: (p.d, p.ratio, true),
                    recomputed: (d, ratio, true),
                });
            }
        }
        out.pairs_checked = r.pairs.len();
        let distortion = if r.pairs.is_empty() { 1.0 } else { hi / lo };
        let within = distortion <= r.bound * (1.0 + DEFAULT_RELATIVE_TOLERANCE);
        if distortion.to_bits() != r.distortion.to_bits() || within != r.within_bound {
            out.disagreements.push(Disagreement {
                entry: base + r.pairs.len(),
                label: "distortion".into(),
                stored: (r.distortion, r.bound, r.within_bound),
                recomputed: (distortion, r.bound, within),
            });
        }
        if let Some((stored, stored_within)) = summary {
            let stored = stored.unwrap_or(f64::NAN);
            if stored.to_bits() != distortion.to_bits() || stored_within != within {
                out.disagreements.push(Disagreement {
                    entry: base + r.pairs.len() + 1,
                    label: "summary distortion".into(),
                    stored: (stored, r.bound, stored_within),
                    recomputed: (distortion, r.bound, within),
                });
            }
        }
        out.stored_pass &= r.within_bound;
        out.recomputed_pass &= within;
    }
    out.agrees = out.disagreements.is_empty() && out.stored_pass == out.recomputed_pass;
    Ok(out)
}
