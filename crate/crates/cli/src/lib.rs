//! Subcommands of the `meshsep` tool. Each returns an exit code and a JSON
//! report; `main` only parses arguments and prints.

use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

use meshsep::geom::{format_rational, parse_rational, rat_approx, Rational};
use meshsep::io::{annotate_close_features, read_mesh, write_mesh, IoError, MeshFormat, WriteOptions};
use meshsep::mesh::{find_intersections, topology_signature, Mesh};
use meshsep::proximity::{build_octree, close_pairs, FeaturePair, DEFAULT_MAX_DEPTH, DEFAULT_MAX_LEAF};
use meshsep::report::{emit_report, ReportFormat};
use meshsep::round::{geometric_round, separate_mesh, PipelineConfig, PipelineError, PipelineReport};
use meshsep::synth::{generate_synthetic, SynthKind, SynthSpec};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_VIOLATIONS: i32 = 2;
pub const EXIT_USAGE: i32 = 64;

#[derive(Parser, Debug)]
#[command(name = "meshsep", version, about = "Separate close mesh features and round to binary64")]
pub struct Cli {
    /// Worker threads for parallel stages.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Modify, expand and optionally optimize; writes the exact result.
    Separate(PipelineArgs),
    /// Full pipeline followed by rounding to binary64.
    Round(PipelineArgs),
    /// Lists close pairs, intersections and the topology signature.
    Check(CheckArgs),
    /// Writes a synthetic mesh and its ground truth.
    Gen(GenArgs),
}

#[derive(Args, Debug, Clone)]
pub struct PipelineArgs {
    pub input: PathBuf,
    pub output: PathBuf,
    /// Required separation.
    #[arg(short = 'd', default_value = "1e-6", value_parser = parse_d)]
    pub d: Rational,
    #[arg(long)]
    pub no_modify: bool,
    #[arg(long, overrides_with = "no_optimize")]
    pub optimize: bool,
    #[arg(long)]
    pub no_optimize: bool,
    #[arg(long, default_value_t = 64)]
    pub max_iter: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output format; by default taken from the output extension.
    #[arg(long, value_parser = parse_format)]
    pub format: Option<MeshFormat>,
    #[arg(long, overrides_with = "no_certify")]
    pub certify: bool,
    #[arg(long)]
    pub no_certify: bool,
    /// Allow rounding rational coordinates when writing binary64 formats.
    #[arg(long)]
    pub lossy: bool,
    /// JSON report destination.
    #[arg(long)]
    pub report: Option<PathBuf>,
    /// Copy of the input with triangles of close features flagged.
    #[arg(long)]
    pub annotate: Option<PathBuf>,
    /// Directory receiving every LP in LP format.
    #[arg(long)]
    pub dump_lp: Option<PathBuf>,
}

#[derive(Args, Debug, Clone)]
pub struct CheckArgs {
    pub input: PathBuf,
    #[arg(short = 'd', default_value = "1e-6", value_parser = parse_d)]
    pub d: Rational,
    #[arg(long)]
    pub report: Option<PathBuf>,
    #[arg(long)]
    pub annotate: Option<PathBuf>,
}

#[derive(Args, Debug, Clone)]
pub struct GenArgs {
    #[arg(value_parser = |s: &str| s.parse::<SynthKind>())]
    pub kind: SynthKind,
    pub output: PathBuf,
    /// Approximate triangle count.
    #[arg(long, default_value_t = 1000)]
    pub size: usize,
    #[arg(short = 'k', default_value_t = 10)]
    pub k: usize,
    #[arg(short = 'd', default_value = "1e-6", value_parser = parse_d)]
    pub d: Rational,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Sheet gap in units of d (parallel-sheets).
    #[arg(long, default_value = "1/2", value_parser = parse_d)]
    pub gap: Rational,
    #[arg(long, default_value_t = 600)]
    pub bits: u64,
    #[arg(long, value_parser = parse_format)]
    pub format: Option<MeshFormat>,
    #[arg(long)]
    pub lossy: bool,
}

fn parse_d(s: &str) -> Result<Rational, String> {
    let d = parse_rational(s).ok_or_else(|| format!("`{s}` is not a number"))?;
    if d <= Rational::from_integer(0.into()) {
        return Err("must be positive".into());
    }
    Ok(d)
}

fn parse_format(s: &str) -> Result<MeshFormat, String> {
    MeshFormat::from_name(s).ok_or_else(|| format!("unknown format `{s}`"))
}

pub struct Outcome {
    pub code: i32,
    pub report: Value,
    /// Human-readable summary for stdout.
    pub summary: String,
}

fn failure(kind: &str, msg: impl ToString) -> Outcome {
    Outcome {
        code: EXIT_FAILURE,
        report: json!({ "error": kind, "message": msg.to_string() }),
        summary: String::new(),
    }
}

fn io_failure(e: IoError) -> Outcome {
    let kind = match &e {
        IoError::Io(_) => "IoError",
        IoError::Parse { .. } => "ParseError",
        IoError::UnsupportedFormat(_) => "UnsupportedFormat",
        IoError::PrecisionLoss { .. } => "PrecisionLoss",
        IoError::Mesh(_) => "MeshError",
    };
    failure(kind, e)
}

fn pipeline_failure(e: PipelineError) -> Outcome {
    let kind = match &e {
        PipelineError::ConfigError { .. } => "ConfigError",
        PipelineError::Separate(_) => "SeparateError",
        PipelineError::Round(_) => "RoundError",
    };
    failure(kind, e)
}

fn index(m: &Mesh) -> meshsep::proximity::Octree {
    build_octree(m, DEFAULT_MAX_LEAF, DEFAULT_MAX_DEPTH)
}

/// Disjoint pairs at distance ≤ d, found through the index with a
/// certified filter.
pub fn pairs_at_most(m: &Mesh, d: &Rational) -> Vec<FeaturePair> {
    let d2 = d * d;
    let thr = Rational::from_integer(4.into()) * &d2;
    close_pairs(m, &index(m), &thr).into_iter().filter(|p| p.dist2 <= d2).collect()
}

fn pair_json(p: &FeaturePair) -> Value {
    json!({
        "a": p.a,
        "b": p.b,
        "dist2": format_rational(&p.dist2),
        "dist": rat_approx(&p.dist2).sqrt(),
    })
}

fn annotate(m: &Mesh, pairs: &[FeaturePair], path: &Path) -> Result<(), IoError> {
    let flags = annotate_close_features(m, pairs);
    let opts = WriteOptions { lossy: true, flags: Some(flags) };
    write_mesh(m, path, None, &opts)
}

fn write_report(path: &Option<PathBuf>, v: &Value) {
    if let Some(p) = path {
        if let Err(e) = std::fs::write(p, serde_json::to_string_pretty(v).unwrap()) {
            log::error!("cannot write report {}: {e}", p.display());
        }
    }
}

fn config(a: &PipelineArgs) -> PipelineConfig {
    let mut c = PipelineConfig::new(a.d.clone());
    c.modify = !a.no_modify;
    c.optimize = a.optimize && !a.no_optimize;
    c.max_iterations = a.max_iter;
    c.dump_lp = a.dump_lp.clone();
    if let Some(dir) = &a.dump_lp {
        if let Err(e) = std::fs::create_dir_all(dir) {
            log::warn!("cannot create {}: {e}", dir.display());
        }
    }
    c
}

fn pipeline_json(r: &PipelineReport) -> Value {
    json!({
        "row": r.row,
        "stages": r.stages,
        "expand_iterations": r.expand.as_ref().map(|e| &e.iterations),
        "halvings": r.expand.as_ref().map_or(0, |e| e.halvings),
        "optimize_totals": r.optimize.as_ref().map(|o| o.totals.iter().map(format_rational).collect::<Vec<_>>()),
        "optimize_round_min_dist2": r.optimize.as_ref().map(|o| {
            o.round_min_dist2.iter().map(|x| x.as_ref().map(format_rational)).collect::<Vec<_>>()
        }),
        "snap": r.snap.as_ref().map(|s| json!({
            "e": s.budget.e,
            "moved_vertices": s.moved_vertices,
            "max_move_over_e": s.max_move_over_e,
        })),
    })
}

/// Whether the mesh is intersection-free, has no pair at distance ≤ d and
/// keeps the per-component (χ, boundary) multiset `intrinsic`.
fn certify(m: &Mesh, d: &Rational, intrinsic: &[(i64, usize)]) -> (bool, Value) {
    let below = pairs_at_most(m, d).len();
    let crossings = find_intersections(m, &index(m)).len();
    let same = topology_signature(m).intrinsic() == intrinsic;
    (
        below == 0 && crossings == 0 && same,
        json!({ "pairs_at_most_d": below, "intersections": crossings, "topology_unchanged": same }),
    )
}

pub fn cmd_separate(a: &PipelineArgs) -> Outcome {
    let start = Instant::now();
    let file = match read_mesh(&a.input, None) {
        Ok(f) => f,
        Err(e) => return io_failure(e),
    };
    let mut m = file.mesh;
    if let Some(p) = &a.annotate {
        if let Err(e) = annotate(&m, &pairs_at_most(&m, &a.d), p) {
            return io_failure(e);
        }
    }
    let intrinsic = topology_signature(&m).intrinsic();
    let big = m.num_triangles() > 100_000;
    let certify_on = if a.no_certify { false } else { a.certify || !big };
    let report = match separate_mesh(&mut m, &config(a)) {
        Ok(r) => r,
        Err(e) => {
            let o = pipeline_failure(e);
            write_report(&a.report, &o.report);
            return o;
        }
    };
    let opts = WriteOptions { lossy: a.lossy, flags: None };
    if let Err(e) = write_mesh(&m, &a.output, a.format, &opts) {
        return io_failure(e);
    }
    let d2 = &a.d * &a.d;
    let separated = report.min_dist2.as_ref().is_none_or(|x| *x > d2);
    let mut v = pipeline_json(&report);
    let mut ok = separated;
    if certify_on {
        let (c, detail) = certify(&m, &a.d, &intrinsic);
        ok &= c;
        v["certification"] = detail;
    }
    v["command"] = json!("separate");
    v["seed"] = json!(a.seed);
    v["d"] = json!(format_rational(&a.d));
    v["final_close_pairs"] = json!(pairs_at_most(&m, &a.d).len());
    v["min_dist2"] = json!(report.min_dist2.as_ref().map(format_rational));
    v["separated"] = json!(ok);
    v["seconds"] = json!(start.elapsed().as_secs_f64());
    let code = if ok { EXIT_OK } else { EXIT_FAILURE };
    v["exit_code"] = json!(code);
    write_report(&a.report, &v);
    Outcome { code, report: v, summary: emit_report(&[report.row], ReportFormat::Table) }
}

pub fn cmd_round(a: &PipelineArgs) -> Outcome {
    let start = Instant::now();
    let file = match read_mesh(&a.input, None) {
        Ok(f) => f,
        Err(e) => return io_failure(e),
    };
    let m = file.mesh;
    if let Some(p) = &a.annotate {
        if let Err(e) = annotate(&m, &pairs_at_most(&m, &a.d), p) {
            return io_failure(e);
        }
    }
    let intrinsic = topology_signature(&m).intrinsic();
    let (out, report) = match geometric_round(&m, &config(a)) {
        Ok(x) => x,
        Err(e) => {
            let o = pipeline_failure(e);
            write_report(&a.report, &o.report);
            return o;
        }
    };
    let opts = WriteOptions { lossy: a.lossy, flags: None };
    if let Err(e) = write_mesh(&out, &a.output, a.format, &opts) {
        return io_failure(e);
    }
    let mut v = pipeline_json(&report);
    let mut ok = true;
    if !a.no_certify {
        // Independent of the snap's own checks: re-read what was written.
        let back = match read_mesh(&a.output, a.format) {
            Ok(f) => f.mesh,
            Err(e) => return io_failure(e),
        };
        let written = out.compact().0;
        let same = back.points() == written.points();
        let binary64 = back
            .points()
            .iter()
            .all(|p| [&p.x, &p.y, &p.z].iter().all(|c| meshsep::geom::is_f64_exact(c)));
        let crossings = find_intersections(&back, &index(&back)).len();
        let topo = topology_signature(&back) == topology_signature(&written)
            && topology_signature(&back).intrinsic() == intrinsic;
        ok = same && binary64 && crossings == 0 && topo;
        v["certification"] = json!({
            "file_matches": same,
            "binary64": binary64,
            "intersections": crossings,
            "topology_unchanged": topo,
        });
    }
    v["command"] = json!("round");
    v["seed"] = json!(a.seed);
    v["d"] = json!(format_rational(&a.d));
    v["certified"] = json!(ok);
    v["seconds"] = json!(start.elapsed().as_secs_f64());
    let code = if ok { EXIT_OK } else { EXIT_FAILURE };
    v["exit_code"] = json!(code);
    write_report(&a.report, &v);
    Outcome { code, report: v, summary: emit_report(&[report.row], ReportFormat::Table) }
}

pub fn cmd_check(a: &CheckArgs) -> Outcome {
    let file = match read_mesh(&a.input, None) {
        Ok(f) => f,
        Err(e) => return io_failure(e),
    };
    let m = file.mesh;
    let pairs = pairs_at_most(&m, &a.d);
    let crossings = find_intersections(&m, &index(&m));
    if let Some(p) = &a.annotate {
        if let Err(e) = annotate(&m, &pairs, p) {
            return io_failure(e);
        }
    }
    let clean = pairs.is_empty() && crossings.is_empty();
    let code = if clean { EXIT_OK } else { EXIT_VIOLATIONS };
    let v = json!({
        "command": "check",
        "d": format_rational(&a.d),
        "close_pairs": pairs.iter().map(pair_json).collect::<Vec<_>>(),
        "intersections": crossings,
        "topology": topology_signature(&m),
        "exit_code": code,
    });
    write_report(&a.report, &v);
    let summary = format!("{} close pairs, {} intersecting triangle pairs", pairs.len(), crossings.len());
    Outcome { code, report: v, summary }
}

/// `out.ext` gets its ground truth in `out.truth.json`.
pub fn sidecar_path(out: &Path) -> PathBuf {
    out.with_extension("truth.json")
}

pub fn cmd_gen(a: &GenArgs) -> Outcome {
    let spec = SynthSpec {
        kind: a.kind,
        size: a.size,
        d: a.d.clone(),
        seed: a.seed,
        k: a.k,
        gap: a.gap.clone(),
        bits: a.bits,
    };
    let (m, gt) = generate_synthetic(&spec);
    let opts = WriteOptions { lossy: a.lossy, flags: None };
    if let Err(e) = write_mesh(&m, &a.output, a.format, &opts) {
        return io_failure(e);
    }
    let truth = serde_json::to_value(&gt).unwrap();
    if let Err(e) = std::fs::write(sidecar_path(&a.output), serde_json::to_string_pretty(&truth).unwrap()) {
        return failure("IoError", e);
    }
    let summary = format!("{} vertices, {} triangles", m.num_vertices(), m.num_triangles());
    Outcome { code: EXIT_OK, report: truth, summary }
}

pub fn run(cli: &Cli) -> Outcome {
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            log::warn!("thread pool already configured: {e}");
        }
    }
    match &cli.command {
        Command::Separate(a) => cmd_separate(a),
        Command::Round(a) => cmd_round(a),
        Command::Check(a) => cmd_check(a),
        Command::Gen(a) => cmd_gen(a),
    }
}
