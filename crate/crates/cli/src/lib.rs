//! Command-line front end: verify, construct, search, bounds and equiv3.

pub mod cache;
pub mod pointfile;
pub mod report;

use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};

use capsearch::constructions::{ConstructParams, ConstructionRegistry};
use capsearch::error::CapError;
use capsearch::search::{
    bounds_table, dim3_classification_with, dim3_maps, resume_search, run_search_with, Checkpoint,
    SearchConfig, SearchControl, SearchReport, StopReason,
};
use capsearch::sidon::{find_violation, is_sidon, sidon_collision, MAX_ENUMERATED_SET};
use capsearch::space::{CapSet, Point};

use cache::{Lookup, ResultCache};
use report::ReportDocument;

pub const EXIT_OK: i32 = 0;
pub const EXIT_NEGATIVE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_INTERRUPTED: i32 = 3;

/// Where an interrupted search saves itself when no path was given.
pub const DEFAULT_CHECKPOINT: &str = "capsearch-checkpoint.json";

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Format(String),
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Io(String),
    #[error(transparent)]
    Core(#[from] CapError),
}

#[derive(Debug, Parser)]
#[command(
    name = "capsearch",
    version,
    about = "Construct, verify and search d-caps in F_3^n"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check that a point file is a d-cap.
    Verify(VerifyArgs),
    /// Write a construction as a point file.
    Construct(ConstructArgs),
    /// Search for the largest d-caps.
    Search(SearchArgs),
    /// Print lower and upper bounds on the largest 2-cap per dimension.
    Bounds(BoundsArgs),
    /// Check the maps relating the maximal 2-caps of F_3^3.
    Equiv3(Equiv3Args),
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    pub file: PathBuf,
    #[arg(long, default_value_t = 2)]
    pub d: u32,
}

#[derive(Debug, Args)]
pub struct ConstructArgs {
    /// parabola, partition, oddlb, extend4, embed or witness
    pub kind: String,
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long)]
    pub n: Option<usize>,
    /// Parabola shift as a ternary word of length k.
    #[arg(long)]
    pub shift: Option<String>,
    /// Reference set name for `witness`.
    #[arg(long)]
    pub name: Option<String>,
    /// Input point file for `extend4` and `embed`.
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Output file; a partition writes one file per part, suffixed `_a{index}`.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SearchArgs {
    #[arg(long, required_unless_present = "resume")]
    pub n: Option<usize>,
    #[arg(long, default_value_t = 2)]
    pub d: u32,
    /// full, prefix_reduced (or prefix), completion
    #[arg(long, default_value = "full")]
    pub mode: String,
    /// Seed point file for completion.
    #[arg(long)]
    pub seed: Option<PathBuf>,
    #[arg(long, default_value_t = 1)]
    pub threads: usize,
    /// Where to save the frontier if the search stops early.
    #[arg(long)]
    pub checkpoint: Option<PathBuf>,
    /// Continue a saved search.
    #[arg(long, conflicts_with_all = ["seed", "target"])]
    pub resume: Option<PathBuf>,
    #[arg(long)]
    pub node_limit: Option<u64>,
    /// Only report caps larger than this.
    #[arg(long)]
    pub target: Option<usize>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub no_cache: bool,
    /// Suspend after this many nodes, as if interrupted.
    #[arg(long, hide = true)]
    pub pause_after: Option<u64>,
}

#[derive(Debug, Args)]
pub struct BoundsArgs {
    #[arg(long, default_value_t = 8)]
    pub n_max: usize,
    /// Write the report document here.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Use constructions and counting only, with no searches.
    #[arg(long)]
    pub no_search: bool,
    #[arg(long)]
    pub no_cache: bool,
    #[arg(long, default_value_t = 1)]
    pub threads: usize,
}

#[derive(Debug, Args)]
pub struct Equiv3Args {
    /// Perturb the built-in map with this index before checking.
    #[arg(long, hide = true)]
    pub corrupt: Option<usize>,
}

/// Runs one command, writing results to `out` and diagnostics to `err`, and
/// returns the process exit code.
pub fn run(cli: Cli, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let result = match cli.command {
        Command::Verify(a) => verify(&a, out),
        Command::Construct(a) => construct(&a, out),
        Command::Search(a) => search(&a, out, err),
        Command::Bounds(a) => bounds(&a, out, err),
        Command::Equiv3(a) => equiv3(&a, out),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            EXIT_USAGE
        }
    }
}

fn io_err(e: std::io::Error) -> CliError {
    CliError::Io(e.to_string())
}

fn words(points: &[Point]) -> String {
    points
        .iter()
        .map(|p| p.to_string())
        .collect::<Vec<_>>()
        .join(" ")
}

fn verify(a: &VerifyArgs, out: &mut dyn Write) -> Result<i32, CliError> {
    let set = pointfile::read(&a.file)?;
    if a.d == 0 {
        return Err(CliError::Usage("d must be at least 1".into()));
    }
    let violation = if a.d == 2 && set.len() > MAX_ENUMERATED_SET {
        sidon_collision(&set)
    } else {
        find_violation(&set, a.d)?
    };
    let label = format!("{}-cap", a.d);
    match violation {
        None => {
            writeln!(out, "{label}: true").map_err(io_err)?;
            if a.d == 2 {
                let sidon = is_sidon(&set);
                writeln!(out, "sidon: {sidon}").map_err(io_err)?;
                if !sidon {
                    return Err(CapError::Inconsistent(
                        "Sidon check disagrees with the cap check".into(),
                    )
                    .into());
                }
            }
            writeln!(out, "points: {}, dimension: {}", set.len(), set.dim()).map_err(io_err)?;
            Ok(EXIT_OK)
        }
        Some(v) => {
            writeln!(out, "{label}: false").map_err(io_err)?;
            writeln!(out, "violation: {}", words(&v)).map_err(io_err)?;
            Ok(EXIT_NEGATIVE)
        }
    }
}

/// `dir/stem_a{index}.ext` for a partition part.
pub fn part_path(base: &Path, index: usize) -> PathBuf {
    let stem = base
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    let name = match base.extension() {
        Some(ext) => format!("{stem}_a{index}.{}", ext.to_string_lossy()),
        None => format!("{stem}_a{index}"),
    };
    base.with_file_name(name)
}

fn write_file(path: &Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

fn construct(a: &ConstructArgs, out: &mut dyn Write) -> Result<i32, CliError> {
    let registry = ConstructionRegistry::default();
    let kind = registry.get(&a.kind)?;
    let params = ConstructParams {
        k: a.k,
        n: a.n,
        shift: a.shift.clone(),
        name: a.name.clone(),
        input: a.input.as_deref().map(pointfile::read).transpose()?,
    };
    let sets = kind.build(&params)?;
    match (&a.out, sets.as_slice()) {
        (Some(path), [single]) if kind.name() != "partition" => {
            write_file(path, &pointfile::render(single))?;
        }
        (Some(base), parts) => {
            for (i, part) in parts.iter().enumerate() {
                let path = part_path(base, i);
                write_file(&path, &pointfile::render(part))?;
                writeln!(out, "{}", path.display()).map_err(io_err)?;
            }
        }
        (None, [single]) => out
            .write_all(pointfile::render(single).as_bytes())
            .map_err(io_err)?,
        (None, parts) => {
            for (i, part) in parts.iter().enumerate() {
                writeln!(out, "# part a{i}").map_err(io_err)?;
                out.write_all(pointfile::render(part).as_bytes())
                    .map_err(io_err)?;
            }
        }
    }
    Ok(EXIT_OK)
}

fn emit(doc: &ReportDocument, path: Option<&Path>, out: &mut dyn Write) -> Result<(), CliError> {
    match path {
        Some(p) => write_file(p, &doc.to_json()),
        None => out.write_all(doc.to_json().as_bytes()).map_err(io_err),
    }
}

fn open_cache(disabled: bool, err: &mut dyn Write) -> Option<ResultCache> {
    if disabled {
        return None;
    }
    match ResultCache::open(cache::default_dir()) {
        Ok(c) => Some(c),
        Err(e) => {
            let _ = writeln!(err, "warning: result cache unavailable: {e}");
            None
        }
    }
}

fn cached(
    cache: Option<&ResultCache>,
    config: &SearchConfig,
    err: &mut dyn Write,
) -> Result<Option<ReportDocument>, CliError> {
    let Some(cache) = cache else { return Ok(None) };
    match cache.lookup(config)? {
        Lookup::Hit(doc) => {
            let _ = writeln!(err, "cache hit in {}", cache.dir().display());
            Ok(Some(doc))
        }
        Lookup::Miss => Ok(None),
        Lookup::Invalid(why) => {
            let _ = writeln!(err, "ignoring cache entry: {why}");
            Ok(None)
        }
    }
}

fn store(
    cache: Option<&ResultCache>,
    config: &SearchConfig,
    doc: &ReportDocument,
    err: &mut dyn Write,
) {
    if let Some(cache) = cache {
        if let Err(e) = cache.store(config, doc) {
            let _ = writeln!(err, "warning: could not cache result: {e}");
        }
    }
}

fn control_for(node_limit: Option<u64>, pause_after: Option<u64>) -> Arc<SearchControl> {
    let control = Arc::new(SearchControl::new(node_limit, pause_after));
    let handle = Arc::clone(&control);
    // Only the first handler of a process is installed; later runs in the
    // same process simply go without one.
    let _ = ctrlc::try_set_handler(move || handle.interrupt());
    control
}

fn search(a: &SearchArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32, CliError> {
    let control = control_for(a.node_limit, a.pause_after);
    let cache = open_cache(a.no_cache, err);
    let (config, report) = match &a.resume {
        Some(path) => {
            let cp = Checkpoint::load(path)?;
            let config = cp.config.to_config()?;
            let save_to = a.checkpoint.clone().unwrap_or_else(|| path.clone());
            let report = if save_to == *path {
                resume_search(path, a.threads, &control)?
            } else {
                let run = config
                    .clone()
                    .with_threads(a.threads)
                    .with_checkpoint(&save_to);
                run_search_with(&run, &control, Some(cp))?
            };
            (config, report)
        }
        None => {
            let mut config = SearchConfig::new(a.n.expect("required by clap"), a.d, &a.mode);
            config.seed = a.seed.as_deref().map(pointfile::read).transpose()?;
            config.target = a.target;
            if let Some(doc) = cached(cache.as_ref(), &config, err)? {
                emit(&doc, a.out.as_deref(), out)?;
                return Ok(EXIT_OK);
            }
            let run = SearchConfig {
                threads: a.threads,
                node_limit: a.node_limit,
                checkpoint_path: Some(
                    a.checkpoint
                        .clone()
                        .unwrap_or_else(|| DEFAULT_CHECKPOINT.into()),
                ),
                ..config.clone()
            };
            (config, run_search_with(&run, &control, None)?)
        }
    };
    finish_search(a, &config, &report, cache.as_ref(), out, err)
}

fn finish_search(
    a: &SearchArgs,
    config: &SearchConfig,
    report: &SearchReport,
    cache: Option<&ResultCache>,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> Result<i32, CliError> {
    let doc = ReportDocument::from_search(report);
    emit(&doc, a.out.as_deref(), out)?;
    if report.exhausted {
        store(cache, config, &doc, err);
        return Ok(EXIT_OK);
    }
    let saved = a
        .checkpoint
        .clone()
        .or_else(|| a.resume.clone())
        .unwrap_or_else(|| DEFAULT_CHECKPOINT.into());
    match report.stopped {
        Some(StopReason::NodeLimit) => {
            let _ = writeln!(
                err,
                "node limit reached before the search space was exhausted; frontier saved to {}",
                saved.display()
            );
            Ok(EXIT_OK)
        }
        _ => {
            let _ = writeln!(
                err,
                "search interrupted; resume with --resume {}",
                saved.display()
            );
            Ok(EXIT_INTERRUPTED)
        }
    }
}

fn bounds(a: &BoundsArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32, CliError> {
    if a.n_max > 8 {
        return Err(CliError::Usage("bounds are tabulated for n <= 8".into()));
    }
    let cache = open_cache(a.no_cache, err);
    let mut reports = Vec::new();
    if !a.no_search {
        let mut plans: Vec<SearchConfig> = (1..=a.n_max.min(4))
            .map(|n| SearchConfig::new(n, 2, "full"))
            .collect();
        if a.n_max >= 5 {
            plans.push(SearchConfig::new(5, 2, "prefix_reduced"));
        }
        for config in plans {
            if let Some(doc) = cached(cache.as_ref(), &config, err)? {
                reports.push(report_from_doc(&doc)?);
                continue;
            }
            let _ = writeln!(err, "searching n = {} ({})", config.n, config.mode);
            let control = SearchControl::default();
            let report = run_search_with(&config.clone().with_threads(a.threads), &control, None)?;
            store(
                cache.as_ref(),
                &config,
                &ReportDocument::from_search(&report),
                err,
            );
            reports.push(report);
        }
    }
    let records = bounds_table(a.n_max, &reports)?;
    writeln!(out, "{:>2}  {:>5}  {:>5}  source", "n", "lower", "upper").map_err(io_err)?;
    for r in &records {
        writeln!(
            out,
            "{:>2}  {:>5}  {:>5}  lower: {}; upper: {}",
            r.n, r.lower, r.upper, r.lower_source, r.upper_source
        )
        .map_err(io_err)?;
    }
    if let Some(path) = &a.out {
        write_file(
            path,
            &ReportDocument::from_bounds(a.n_max, records).to_json(),
        )?;
    }
    Ok(EXIT_OK)
}

/// Rebuilds the parts of a search report the bounds table reads.
fn report_from_doc(doc: &ReportDocument) -> Result<SearchReport, CliError> {
    let config = doc
        .search_config()
        .ok_or_else(|| CliError::Format("cached report has no search config".into()))?;
    let witness = doc
        .witness_set(config.n)
        .ok_or_else(|| CliError::Format("cached report witness does not parse".into()))?;
    let counts = doc.counts.clone().unwrap_or(report::Counts {
        nodes_expanded: 0,
        complete_caps_visited: 0,
    });
    Ok(SearchReport {
        config,
        max_size: witness.len(),
        witness,
        complete_caps_visited: counts.complete_caps_visited,
        nodes_expanded: counts.nodes_expanded,
        exhausted: doc.exhausted == Some(true),
        stopped: None,
        wall_time: std::time::Duration::ZERO,
    })
}

fn matrix_words(m: &[[u8; 3]; 3]) -> String {
    m.iter()
        .map(|row| row.iter().map(|d| d.to_string()).collect::<String>())
        .collect::<Vec<_>>()
        .join(" ")
}

fn set_words(s: &CapSet) -> String {
    words(s.points())
}

fn equiv3(a: &Equiv3Args, out: &mut dyn Write) -> Result<i32, CliError> {
    let mut maps = dim3_maps();
    if let Some(i) = a.corrupt {
        let m = maps
            .iter_mut()
            .find(|m| m.index == i)
            .ok_or_else(|| CliError::Usage(format!("no map with index {i}")))?;
        m.translation[0] = (m.translation[0] + 1) % 3;
    }
    let record = dim3_classification_with(&maps)?;
    for (i, cap) in record.caps.iter().enumerate() {
        writeln!(out, "C_{} = {}", i + 1, set_words(cap)).map_err(io_err)?;
    }
    let mut failing = Vec::new();
    for (check, map) in record.checks.iter().zip(&maps) {
        let i = check.index;
        let b: String = map.translation.iter().map(|d| d.to_string()).collect();
        let image = check
            .image
            .as_ref()
            .map_or_else(|| "undefined".into(), set_words);
        let verdict = if check.passed { "verified" } else { "FAILED" };
        writeln!(
            out,
            "T_{i}: A_{i} = {}, rank {}, b_{i} = {b}; T_{i}(C_1) = {image}: {verdict}",
            matrix_words(&map.matrix),
            check.rank,
        )
        .map_err(io_err)?;
        if !check.passed {
            failing.push(i);
        }
    }
    if failing.is_empty() {
        writeln!(out, "all {} maps verified", record.checks.len()).map_err(io_err)?;
        Ok(EXIT_OK)
    } else {
        let list: Vec<String> = failing.iter().map(usize::to_string).collect();
        writeln!(out, "failing index: {}", list.join(", ")).map_err(io_err)?;
        Ok(EXIT_NEGATIVE)
    }
}
