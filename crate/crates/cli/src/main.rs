use std::fs::File;
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use tickjoin::engine::{min_bandwidth, Engine, Method, MethodConfig, QosParams, Rebuild, SplitFactor, TickStats};
use tickjoin::quadtree::RebuildPolicy;
use tickjoin::scheduler::Policy;
use tickjoin::workload::{generate, read_dataset, write_dataset, Distribution, QuerySide, WorkloadConfig, WorkloadRun};
use tickjoin::{brute_force_join, TickBatch};

#[derive(Parser)]
#[command(name = "tickjoin", version, about = "Tick-batched spatial joins over moving objects")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Generate a synthetic workload and write it as a dataset file.
    Generate(GenerateArgs),
    /// Process datasets tick by tick and write per-tick metrics as CSV.
    Run(RunArgs),
    /// Dump brute-force results for every tick of a dataset.
    Oracle(OracleArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Dist {
    Uniform,
    Gaussian,
    Network,
}

#[derive(Args)]
struct GenerateArgs {
    #[arg(long, value_enum, default_value = "uniform")]
    dist: Dist,
    #[arg(long)]
    objects: u32,
    #[arg(long, default_value_t = 30)]
    ticks: u32,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 22500.0)]
    region: f64,
    #[arg(long, default_value_t = 200.0)]
    max_speed: f64,
    #[arg(long, default_value_t = 1.0)]
    query_rate: f64,
    /// Query side, fixed (`300`) or a uniform range (`200:800`).
    #[arg(long, default_value = "200:800", value_parser = parse_side)]
    query_side: QuerySide,
    #[arg(long, default_value_t = 25)]
    hotspots: u32,
    /// Gaussian spread; defaults to a hundredth of the region side.
    #[arg(long)]
    sigma: Option<f64>,
    #[arg(long, default_value_t = 10)]
    grid_degree: u32,
    #[arg(short, long)]
    output: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    Ug,
    UgBaseline,
    Quad,
}

#[derive(Clone, Copy, ValueEnum)]
enum OnOff {
    On,
    Off,
}

#[derive(Clone, Copy, ValueEnum)]
enum Schedule {
    Unordered,
    Heaviest,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Study {
    S1,
    S2,
    S3,
    S4,
    S5,
    S6,
    S7,
    S8,
}

#[derive(Args)]
struct RunArgs {
    /// Dataset files; several datasets run one after the other.
    #[arg(required = true)]
    datasets: Vec<PathBuf>,
    #[arg(long, value_enum, default_value = "quad")]
    method: MethodArg,
    #[arg(long, default_value_t = 64)]
    split_factor: u32,
    /// Pick the split factor on the first tick among `lo:hi:step`.
    #[arg(long, value_parser = parse_sweep)]
    sweep: Option<Sweep>,
    #[arg(long, default_value_t = 384)]
    th_quad: usize,
    #[arg(long, default_value_t = 12)]
    l_max: u8,
    /// Keep the quadtree across ticks until it degrades.
    #[arg(long)]
    reuse_tree: bool,
    #[arg(long, value_enum, default_value = "on")]
    covering: OnOff,
    #[arg(long, value_enum, default_value = "heaviest")]
    schedule: Schedule,
    #[arg(long, env = "TICKJOIN_WORKERS")]
    workers: Option<usize>,
    #[arg(long, default_value_t = 64)]
    chunk: usize,
    /// Compare every tick against the brute-force join.
    #[arg(long)]
    verify: bool,
    #[arg(long, value_enum)]
    study: Option<Study>,
    /// Tick length and latency threshold, in seconds: `dt,lambda`.
    #[arg(long, value_parser = parse_qos)]
    qos: Option<(f64, f64)>,
    /// Write CSV here instead of standard output.
    #[arg(long)]
    csv: Option<PathBuf>,
    /// Recorded in the manifest; datasets carry their own seed.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct OracleArgs {
    dataset: PathBuf,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

fn parse_side(s: &str) -> Result<QuerySide, String> {
    let num = |v: &str| v.trim().parse::<f64>().map_err(|e| format!("`{v}`: {e}"));
    match s.split_once(':') {
        Some((lo, hi)) => Ok(QuerySide::Range(num(lo)?, num(hi)?)),
        None => Ok(QuerySide::Fixed(num(s)?)),
    }
}

/// Candidate split factors.
#[derive(Clone, Debug, PartialEq)]
struct Sweep(Vec<u32>);

fn parse_sweep(s: &str) -> Result<Sweep, String> {
    let parts: Vec<&str> = s.split(':').collect();
    let [lo, hi, step] = parts[..] else {
        return Err("expected lo:hi:step".into());
    };
    let num = |v: &str| v.parse::<u32>().map_err(|e| format!("`{v}`: {e}"));
    let (lo, hi, step) = (num(lo)?, num(hi)?, num(step)?);
    if lo == 0 || step == 0 || hi < lo {
        return Err("need 0 < lo <= hi and step > 0".into());
    }
    Ok(Sweep((lo..=hi).step_by(step as usize).collect()))
}

fn parse_qos(s: &str) -> Result<(f64, f64), String> {
    let (dt, lambda) = s.split_once(',').ok_or("expected dt,lambda")?;
    let num = |v: &str| v.trim().parse::<f64>().map_err(|e| format!("`{v}`: {e}"));
    Ok((num(dt)?, num(lambda)?))
}

/// Failure classes, mapped to exit codes.
enum Failure {
    Verify(String),
    Usage(anyhow::Error),
    Io(anyhow::Error),
    Other(anyhow::Error),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Verify(_) | Failure::Other(_) => 1,
            Failure::Usage(_) => 2,
            Failure::Io(_) => 3,
        }
    }
}

fn io_err(e: impl Into<anyhow::Error>) -> Failure {
    Failure::Io(e.into())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let out = match cli.cmd {
        Cmd::Generate(a) => cmd_generate(a),
        Cmd::Run(a) => cmd_run(a),
        Cmd::Oracle(a) => cmd_oracle(a),
    };
    match out {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            match &f {
                Failure::Verify(m) => eprintln!("verification failed: {m}"),
                Failure::Usage(e) | Failure::Io(e) | Failure::Other(e) => eprintln!("error: {e:#}"),
            }
            ExitCode::from(f.code())
        }
    }
}

fn cmd_generate(a: GenerateArgs) -> Result<(), Failure> {
    let distribution = match a.dist {
        Dist::Uniform => Distribution::Uniform,
        Dist::Gaussian => Distribution::Gaussian {
            n_hotspots: a.hotspots,
            sigma: a.sigma,
        },
        Dist::Network => Distribution::Network {
            grid_degree: a.grid_degree,
        },
    };
    let cfg = WorkloadConfig {
        region_side: a.region,
        n_objects: a.objects,
        n_ticks: a.ticks,
        max_speed: a.max_speed,
        query_rate: a.query_rate,
        query_side: a.query_side,
        distribution,
        seed: a.seed,
    };
    let run = generate(&cfg).map_err(|e| Failure::Usage(e.into()))?;
    let file = File::create(&a.output)
        .with_context(|| format!("cannot create {}", a.output.display()))
        .map_err(io_err)?;
    write_dataset(&run, BufWriter::new(file))
        .with_context(|| format!("cannot write {}", a.output.display()))
        .map_err(io_err)?;
    let queries: usize = run.ticks.iter().map(|t| t.queries.len()).sum();
    println!(
        "wrote {}: {} objects, {} ticks, {} queries",
        a.output.display(),
        run.n_objects,
        run.ticks.len(),
        queries
    );
    Ok(())
}

fn load(path: &Path) -> Result<WorkloadRun, Failure> {
    let file = File::open(path)
        .with_context(|| format!("cannot open {}", path.display()))
        .map_err(io_err)?;
    read_dataset(BufReader::new(file))
        .with_context(|| format!("cannot read {}", path.display()))
        .map_err(io_err)
}

/// A method configuration with the label it appears under in the CSV.
struct Variant {
    label: String,
    cfg: MethodConfig,
}

fn base_config(a: &RunArgs) -> MethodConfig {
    MethodConfig {
        method: match a.method {
            MethodArg::Ug => Method::Ug,
            MethodArg::UgBaseline => Method::UgBaseline,
            MethodArg::Quad => Method::Quad,
        },
        split_factor: match &a.sweep {
            Some(c) => SplitFactor::Sweep(c.0.clone()),
            None => SplitFactor::Fixed(a.split_factor),
        },
        th_quad: a.th_quad,
        l_max: a.l_max,
        covering: matches!(a.covering, OnOff::On),
        policy: match a.schedule {
            Schedule::Unordered => Policy::Unordered,
            Schedule::Heaviest => Policy::HeaviestFirst,
        },
        n_workers: a
            .workers
            .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get())),
        chunk_size: a.chunk,
        rebuild: if a.reuse_tree {
            Rebuild::Reuse(RebuildPolicy::default())
        } else {
            Rebuild::EveryTick
        },
        ..MethodConfig::default()
    }
}

fn default_sweep() -> Vec<u32> {
    (16..=256).step_by(16).collect()
}

/// Expands a study preset into variants. Returns the flag expansion too.
fn expand(study: Option<Study>, base: &MethodConfig) -> (Vec<Variant>, String) {
    let with = |label: &str, f: &dyn Fn(&mut MethodConfig)| {
        let mut cfg = base.clone();
        f(&mut cfg);
        Variant {
            label: label.to_string(),
            cfg,
        }
    };
    let sweep_or_default = || match &base.split_factor {
        SplitFactor::Sweep(c) => c.clone(),
        SplitFactor::Fixed(_) => default_sweep(),
    };
    let Some(study) = study else {
        return (vec![with("default", &|_| {})], String::new());
    };
    let (variants, flags): (Vec<Variant>, &str) = match study {
        Study::S1 => (
            vec![
                with("ug", &|c| c.method = Method::Ug),
                with("ug-baseline", &|c| c.method = Method::UgBaseline),
            ],
            "--method ug ; --method ug-baseline",
        ),
        Study::S2 => (
            vec![
                with("covering-on", &|c| c.covering = true),
                with("covering-off", &|c| c.covering = false),
            ],
            "--covering on ; --covering off",
        ),
        Study::S3 => (
            vec![
                with("unordered", &|c| c.policy = Policy::Unordered),
                with("heaviest", &|c| c.policy = Policy::HeaviestFirst),
            ],
            "--schedule unordered ; --schedule heaviest",
        ),
        Study::S4 => (
            sweep_or_default()
                .into_iter()
                .map(|sf| {
                    with(&format!("sf={sf}"), &|c| {
                        c.method = Method::Ug;
                        c.split_factor = SplitFactor::Fixed(sf);
                    })
                })
                .collect(),
            "--method ug --split-factor N for every N of the sweep (default 16:256:16)",
        ),
        Study::S5 => (
            [32, 64, 128, 256, 384, 512, 1024]
                .into_iter()
                .map(|th| {
                    with(&format!("th={th}"), &|c| {
                        c.method = Method::Quad;
                        c.th_quad = th;
                    })
                })
                .collect(),
            "--method quad --th-quad N for N in 32,64,128,256,384,512,1024",
        ),
        Study::S6 | Study::S7 => (
            vec![
                with("ug-swept", &|c| {
                    c.method = Method::Ug;
                    c.split_factor = SplitFactor::Sweep(sweep_or_default());
                }),
                with("quad", &|c| c.method = Method::Quad),
            ],
            "--method ug --sweep 16:256:16 ; --method quad, on every dataset given",
        ),
        Study::S8 => (
            [Method::Ug, Method::UgBaseline, Method::Quad]
                .into_iter()
                .flat_map(|m| {
                    [1usize, 2, 4, 8].map(|w| {
                        with(&format!("{}-w{w}", m.name()), &|c| {
                            c.method = m;
                            c.n_workers = w;
                        })
                    })
                })
                .collect(),
            "--method {ug,ug-baseline,quad} x --workers {1,2,4,8}",
        ),
    };
    let flags = format!("{study:?} expands to: {flags}").to_lowercase();
    (variants, flags)
}

const CSV_HEADER: [&str; 22] = [
    "tick",
    "method",
    "variant",
    "containment_tests",
    "subq_intersecting",
    "subq_covering",
    "covering_result_fraction",
    "occupancy_mean",
    "dispersion",
    "imbalance",
    "sync_ops",
    "results_total",
    "t_index_ms",
    "t_map_split_ms",
    "t_sort_ms",
    "t_filter_ms",
    "t_linearize_ms",
    "t_decode_ms",
    "t_covering_ms",
    "t_merge_ms",
    "t_total_ms",
    "qos_pass",
];

fn csv_row(method: Method, variant: &str, s: &TickStats, qos_pass: Option<bool>) -> Vec<String> {
    let ms = |d: std::time::Duration| format!("{:.3}", d.as_secs_f64() * 1e3);
    let t = &s.times;
    vec![
        s.tick.to_string(),
        method.name().to_string(),
        variant.to_string(),
        s.containment_tests.to_string(),
        s.subq_intersecting.to_string(),
        s.subq_covering.to_string(),
        s.covering_result_fraction.to_string(),
        s.occupancy_mean.to_string(),
        s.dispersion.to_string(),
        s.imbalance.imbalance.to_string(),
        s.sync_ops.to_string(),
        s.results_total.to_string(),
        ms(t.index),
        ms(t.map_split),
        ms(t.sort),
        ms(t.filter),
        ms(t.linearize),
        ms(t.decode),
        ms(t.covering),
        ms(t.merge),
        ms(t.total),
        qos_pass.map_or(String::new(), |p| p.to_string()),
    ]
}

fn cmd_run(a: RunArgs) -> Result<(), Failure> {
    let base = base_config(&a);
    let (variants, flags) = expand(a.study, &base);
    for v in &variants {
        v.cfg.validate().map_err(|e| Failure::Usage(e.into()))?;
    }
    if !flags.is_empty() {
        eprintln!("{flags}");
    }
    eprintln!(
        "manifest: datasets={:?} method={} covering={} schedule={:?} workers={} chunk={} verify={} seed={}",
        a.datasets,
        base.method.name(),
        base.covering,
        base.policy,
        base.n_workers,
        base.chunk_size,
        a.verify,
        a.seed.map_or("-".into(), |s| s.to_string()),
    );

    let sink: Box<dyn Write> = match &a.csv {
        Some(p) => Box::new(
            File::create(p)
                .with_context(|| format!("cannot create {}", p.display()))
                .map_err(io_err)?,
        ),
        None => Box::new(io::stdout().lock()),
    };
    let mut csv = csv::Writer::from_writer(sink);
    csv.write_record(CSV_HEADER).map_err(io_err)?;

    let mut mismatches = Vec::new();
    for path in &a.datasets {
        let run = load(path)?;
        let q_max = run.ticks.iter().map(|t| t.queries.len()).max().unwrap_or(0) as f64;
        let qos = a.qos.map(|(delta_t, lambda)| QosParams { delta_t, lambda, q_max });
        if let Some(q) = &qos {
            let beta = min_bandwidth(q).map_err(|e| Failure::Usage(e.into()))?;
            eprintln!("{}: minimum bandwidth {beta} queries/s for q_max {q_max}", path.display());
        }
        let stem = path.file_stem().map_or_else(String::new, |s| s.to_string_lossy().into_owned());
        for v in &variants {
            let label = if a.datasets.len() > 1 {
                format!("{stem}:{}", v.label)
            } else {
                v.label.clone()
            };
            let mut engine = Engine::new(v.cfg.clone()).map_err(|e| Failure::Usage(e.into()))?;
            let (mut queries, mut busy) = (0usize, 0.0f64);
            for batch in &run.ticks {
                let (results, stats) = engine.process_tick(batch).map_err(|e| Failure::Other(e.into()))?;
                if engine.swept_split_factor().is_some() && batch.tick_index == run.ticks[0].tick_index {
                    eprintln!("{label}: split factor {}", stats.split_factor.unwrap_or(0));
                }
                let secs = stats.times.total.as_secs_f64();
                queries += stats.n_queries;
                busy += secs;
                if a.verify && brute_force_join(batch) != results {
                    mismatches.push(format!("{} {label} tick {}", path.display(), batch.tick_index));
                }
                let pass = qos.as_ref().map(|q| tickjoin::engine::check_latency(secs, q));
                csv.write_record(csv_row(v.cfg.method, &label, &stats, pass)).map_err(io_err)?;
            }
            if busy > 0.0 {
                eprintln!("{label}: measured bandwidth {:.0} queries/s", queries as f64 / busy);
            }
        }
    }
    csv.flush().map_err(io_err)?;
    if mismatches.is_empty() {
        Ok(())
    } else {
        Err(Failure::Verify(mismatches.join("; ")))
    }
}

/// `tick <k>` followed by one `issuer: ids` line per query.
fn oracle_dump(batch: &TickBatch, out: &mut impl Write) -> io::Result<()> {
    writeln!(out, "tick {}", batch.tick_index)?;
    write!(out, "{}", brute_force_join(batch))
}

fn cmd_oracle(a: OracleArgs) -> Result<(), Failure> {
    let run = load(&a.dataset)?;
    let sink: Box<dyn Write> = match &a.output {
        Some(p) => Box::new(
            File::create(p)
                .with_context(|| format!("cannot create {}", p.display()))
                .map_err(io_err)?,
        ),
        None => Box::new(io::stdout().lock()),
    };
    let mut out = BufWriter::new(sink);
    for batch in &run.ticks {
        oracle_dump(batch, &mut out).map_err(io_err)?;
    }
    out.flush().map_err(|e| io_err(anyhow!(e)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parsers() {
        assert_eq!(parse_side("300").unwrap(), QuerySide::Fixed(300.0));
        assert_eq!(parse_side("200:800").unwrap(), QuerySide::Range(200.0, 800.0));
        assert!(parse_side("a:b").is_err());
        assert_eq!(parse_sweep("16:64:16").unwrap(), Sweep(vec![16, 32, 48, 64]));
        assert!(parse_sweep("0:4:1").is_err());
        assert!(parse_sweep("4:8").is_err());
        assert_eq!(parse_qos("1,2.5").unwrap(), (1.0, 2.5));
    }

    #[test]
    fn study_expansions() {
        let base = MethodConfig::default();
        let (v, flags) = expand(Some(Study::S1), &base);
        assert_eq!(v.iter().map(|v| v.cfg.method).collect::<Vec<_>>(), vec![Method::Ug, Method::UgBaseline]);
        assert!(flags.starts_with("s1 expands to"));
        let (v, _) = expand(Some(Study::S4), &base);
        assert_eq!(v.len(), 16);
        let (v, _) = expand(Some(Study::S8), &base);
        assert_eq!(v.len(), 12);
        let (v, flags) = expand(None, &base);
        assert_eq!((v.len(), flags.as_str()), (1, ""));
    }

    #[test]
    fn cli_shape() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }
}
