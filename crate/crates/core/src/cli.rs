//! The `thdkit` command line.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::complex::{cech_nerve_with_mode, cover_clustering, rips_nerve, NerveMode};
use crate::error::{Error, Result};
use crate::fixtures;
use crate::hierarchy::{dbs_clustering, linkage_thd, LinkageMode};
use crate::io::{read_distances_csv, read_json, read_points_csv, read_values_csv, to_json_string, write_text};
use crate::mapper::{interval_cover, mapper_graph_intervals, FilterAssignment};
use crate::metric::{offset_components, PointCloud, TriangleCheck};
use crate::multiscale::{multiscale_thd, Refinement, TowerConfig};
use crate::suite::run_suite;

#[derive(Debug, Parser)]
#[command(name = "thdkit", version, about = "Topological clustering, mapper graphs and THDs")]
pub struct Cli {
    /// Seed recorded in every artifact and used by randomized checks.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Čech nerve of the closed eps-balls.
    Cech(NerveArgs),
    /// Vietoris-Rips complex at scale eps.
    Rips(NerveArgs),
    /// Connected components of the eps-offset.
    Cluster(ClusterArgs),
    /// Density-based clustering.
    Dbs(DbsArgs),
    /// Single or complete linkage dendrogram.
    Linkage(LinkageArgs),
    /// Mapper graph over an interval cover of a filter.
    Mapper(MapperArgs),
    /// Multiscale mapper THD over a tower of interval covers.
    Multiscale(MultiscaleArgs),
    /// Runs the verification suite.
    Verify(VerifyArgs),
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct InputArgs {
    /// Points as CSV, one row per point, or `fixture:NAME`.
    #[arg(long, conflicts_with = "distances", required_unless_present = "distances")]
    pub input: Option<String>,

    /// Square distance matrix as CSV.
    #[arg(long)]
    pub distances: Option<PathBuf>,

    /// Skip the triangle inequality check on distance matrices.
    #[arg(long)]
    pub no_triangle_check: bool,

    /// Output path; `.json`, `.dot` or `.newick` where supported, `-` for stdout.
    #[arg(long, default_value = "-")]
    #[serde(skip)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum NerveModeArg {
    Geometric,
    Witness,
}

#[derive(Debug, Args, Serialize)]
pub struct NerveArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[arg(long)]
    pub eps: f64,
    /// Highest simplex dimension.
    #[arg(long, default_value_t = 2)]
    pub dim_cap: usize,
    /// Simplex test for Čech nerves; distance matrices always use witnesses.
    #[arg(long, value_enum)]
    pub mode: Option<NerveModeArg>,
}

#[derive(Debug, Args, Serialize)]
pub struct ClusterArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[arg(long)]
    pub eps: f64,
}

#[derive(Debug, Args, Serialize)]
pub struct DbsArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[arg(long)]
    pub k: usize,
    #[arg(long)]
    pub delta: f64,
    #[arg(long)]
    pub eps: f64,
}

#[derive(Debug, Args, Serialize)]
pub struct LinkageArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[arg(long, default_value = "single")]
    pub mode: LinkageMode,
}

#[derive(Debug, Args, Serialize)]
pub struct MapperArgs {
    #[command(flatten)]
    pub input: InputArgs,
    /// `col:K` for coordinate K, `x`, `y`, or a CSV file of values.
    #[arg(long)]
    pub filter: String,
    #[arg(long)]
    pub intervals: usize,
    #[arg(long, default_value_t = 0.25)]
    pub overlap: f64,
    #[arg(long)]
    pub eps: f64,
    #[arg(long, default_value_t = 1)]
    pub max_dim: usize,
}

#[derive(Debug, Args, Serialize)]
pub struct MultiscaleArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[arg(long)]
    pub filter: String,
    /// Tower configuration JSON.
    #[arg(long)]
    pub tower: PathBuf,
    #[arg(long)]
    pub eps: f64,
}

#[derive(Debug, Args, Serialize)]
pub struct VerifyArgs {
    #[arg(long, default_value_t = 100)]
    pub trials: usize,
    #[arg(long, default_value = "-")]
    #[serde(skip)]
    pub out: PathBuf,
}

/// Every JSON artifact: the command, its seed and parameters, and the result.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Artifact {
    pub command: String,
    pub seed: u64,
    pub parameters: Value,
    pub result: Value,
}

pub fn read_artifact(path: &Path) -> Result<Artifact> {
    Ok(serde_json::from_value(read_json(path)?)?)
}

enum Format {
    Json,
    Dot,
    Newick,
}

fn format_of(path: &Path) -> Result<Format> {
    if path.as_os_str() == "-" {
        return Ok(Format::Json);
    }
    match path.extension().and_then(|e| e.to_str()) {
        Some("json") => Ok(Format::Json),
        Some("dot") | Some("gv") => Ok(Format::Dot),
        Some("newick") | Some("nwk") => Ok(Format::Newick),
        other => Err(Error::InvalidParameter(format!(
            "unsupported output extension {}",
            other.unwrap_or("(none)")
        ))),
    }
}

fn load_cloud(input: &InputArgs) -> Result<PointCloud> {
    match (&input.input, &input.distances) {
        (Some(spec), _) => match spec.strip_prefix("fixture:") {
            Some(name) => fixtures::by_name(name),
            None => read_points_csv(Path::new(spec)),
        },
        (None, Some(path)) => {
            let check = if input.no_triangle_check {
                TriangleCheck::Never
            } else {
                TriangleCheck::Auto
            };
            read_distances_csv(path, check)
        }
        (None, None) => Err(Error::InvalidParameter("one of --input and --distances is required".into())),
    }
}

fn load_filter(spec: &str, cloud: &PointCloud) -> Result<FilterAssignment> {
    let filter = match spec {
        "x" => FilterAssignment::coordinate(cloud, 0)?,
        "y" => FilterAssignment::y(cloud)?,
        _ => match spec.strip_prefix("col:") {
            Some(k) => {
                let axis = k
                    .parse()
                    .map_err(|_| Error::InvalidParameter(format!("bad filter column {k}")))?;
                FilterAssignment::coordinate(cloud, axis)?
            }
            None => FilterAssignment::new(read_values_csv(Path::new(spec))?)?,
        },
    };
    filter.check_total(cloud)?;
    Ok(filter)
}

struct Output {
    json: Value,
    dot: Option<String>,
    newick: Option<Result<String>>,
}

impl Output {
    fn json(json: Value) -> Self {
        Output {
            json,
            dot: None,
            newick: None,
        }
    }
}

fn emit<P: Serialize>(command: &str, seed: u64, params: &P, out: &Path, output: Output) -> Result<()> {
    let text = match format_of(out)? {
        Format::Json => to_json_string(&Artifact {
            command: command.into(),
            seed,
            parameters: serde_json::to_value(params)?,
            result: output.json,
        })?,
        Format::Dot => output
            .dot
            .ok_or_else(|| Error::InvalidParameter(format!("{command} has no DOT output")))?,
        Format::Newick => {
            let mut t = output
                .newick
                .ok_or_else(|| Error::InvalidParameter(format!("{command} has no Newick output")))??;
            t.push('\n');
            t
        }
    };
    write_text(out, &text)
}

fn nerve_command(name: &str, seed: u64, args: &NerveArgs, rips: bool) -> Result<()> {
    let cloud = load_cloud(&args.input)?;
    let (cover, nerve) = if rips {
        rips_nerve(&cloud, args.eps, args.dim_cap)?
    } else {
        let mode = match args.mode {
            Some(NerveModeArg::Witness) => NerveMode::Witness,
            Some(NerveModeArg::Geometric) => NerveMode::Geometric,
            None if cloud.points().is_some() => NerveMode::Geometric,
            None => NerveMode::Witness,
        };
        cech_nerve_with_mode(&cloud, args.eps, args.dim_cap, mode)?
    };
    let clusters = cover_clustering(&cover, &nerve);
    let json = serde_json::json!({ "nerve": nerve.to_json_value(), "clusters": clusters });
    let output = Output {
        json,
        dot: Some(nerve.to_dot()),
        newick: None,
    };
    emit(name, seed, args, &args.input.out, output)
}

fn dispatch(cli: &Cli) -> Result<bool> {
    let seed = cli.seed;
    match &cli.command {
        Command::Cech(args) => nerve_command("cech", seed, args, false)?,
        Command::Rips(args) => nerve_command("rips", seed, args, true)?,
        Command::Cluster(args) => {
            let cloud = load_cloud(&args.input)?;
            let partition = offset_components(&cloud, &cloud.all(), args.eps)?;
            emit("cluster", seed, args, &args.input.out, Output::json(serde_json::to_value(partition)?))?;
        }
        Command::Dbs(args) => {
            let cloud = load_cloud(&args.input)?;
            let result = dbs_clustering(&cloud, args.k, args.delta, args.eps)?;
            emit("dbs", seed, args, &args.input.out, Output::json(serde_json::to_value(result)?))?;
        }
        Command::Linkage(args) => {
            let cloud = load_cloud(&args.input)?;
            let tree = linkage_thd(&cloud, args.mode)?;
            let json = serde_json::json!({
                "mode": tree.mode,
                "heights": tree.heights,
                "thd": tree.thd.to_json_value(),
            });
            let output = Output {
                json,
                dot: Some(tree.thd.to_dot()),
                newick: Some(tree.thd.to_newick(|i| cloud.label(i))),
            };
            emit("linkage", seed, args, &args.input.out, output)?;
        }
        Command::Mapper(args) => {
            let cloud = load_cloud(&args.input)?;
            let filter = load_filter(&args.filter, &cloud)?;
            let (lo, hi) = filter
                .range()
                .ok_or_else(|| Error::InvalidParameter("empty filter".into()))?;
            let intervals = interval_cover(lo, hi, args.intervals, args.overlap)?;
            let mut graph = mapper_graph_intervals(&cloud, &filter, &intervals, args.eps, args.max_dim)?;
            graph.provenance.filter = Some(args.filter.clone());
            let output = Output {
                json: graph.to_json_value(),
                dot: Some(graph.to_dot()),
                newick: None,
            };
            emit("mapper", seed, args, &args.input.out, output)?;
        }
        Command::Multiscale(args) => {
            let cloud = load_cloud(&args.input)?;
            let filter = load_filter(&args.filter, &cloud)?;
            let config: TowerConfig = serde_json::from_value(read_json(&args.tower)?)
                .map_err(|e| Error::Parse(format!("tower config: {e}")))?;
            let tower = Refinement::from_interval_tower(&filter, &config)?;
            let thd = multiscale_thd(&cloud, &tower, args.eps)?;
            let output = Output {
                json: serde_json::json!({ "tower": tower.to_json_value(), "thd": thd.to_json_value() }),
                dot: Some(thd.to_dot()),
                newick: Some(thd.to_newick(|i| cloud.label(i))),
            };
            emit("multiscale", seed, args, &args.input.out, output)?;
        }
        Command::Verify(args) => {
            let report = run_suite(seed, args.trials)?;
            let passed = report.passed;
            emit("verify", seed, args, &args.out, Output::json(serde_json::to_value(report)?))?;
            return Ok(passed);
        }
    }
    Ok(true)
}

fn configure_threads() -> Result<()> {
    if let Ok(value) = std::env::var("THDKIT_THREADS") {
        let n: usize = value
            .trim()
            .parse()
            .map_err(|_| Error::InvalidParameter(format!("THDKIT_THREADS={value} is not a count")))?;
        // a global pool may already exist when called twice in one process
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    Ok(())
}

/// Runs the command line and returns the exit code: 0 on success, 1 when
/// verification fails and 2 on configuration or input errors.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    if let Err(e) = configure_threads() {
        eprintln!("thdkit: {e}");
        return 2;
    }
    match dispatch(&cli) {
        Ok(true) => 0,
        Ok(false) => 1,
        Err(e) => {
            eprintln!("thdkit: {e}");
            2
        }
    }
}
