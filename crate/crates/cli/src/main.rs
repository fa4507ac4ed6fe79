use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use dfvo_core::correspondence::flow_consistency;
use dfvo_core::eval::{evaluate, trajectory_svg, Alignment, EvalOptions};
use dfvo_core::io::{self, Dataset};
use dfvo_core::pipeline::Odometry;
use dfvo_core::simulator::{scenario, NoiseConfig, Scenario};
use dfvo_core::PipelineConfig;

#[derive(Parser)]
#[command(name = "dfvo", version, about = "Monocular visual odometry from depth and optical flow rasters")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Estimate a trajectory from depth and flow rasters.
    Run(RunArgs),
    /// Render a synthetic dataset with ground truth.
    Simulate(SimulateArgs),
    /// Score an estimated trajectory against ground truth.
    Eval(EvalArgs),
    /// Forward-backward consistency statistics of a flow pair.
    FlowCheck(FlowCheckArgs),
    /// Print the default configuration file.
    Config,
}

#[derive(Args)]
struct RunArgs {
    #[arg(long, required_unless_present = "manifest")]
    depth_dir: Option<PathBuf>,
    #[arg(long, required_unless_present = "manifest")]
    flow_fwd_dir: Option<PathBuf>,
    #[arg(long, required_unless_present = "manifest")]
    flow_bwd_dir: Option<PathBuf>,
    #[arg(long, required_unless_present = "manifest")]
    intrinsics: Option<PathBuf>,
    /// JSON manifest listing all rasters; replaces the directory options.
    #[arg(long, conflicts_with_all = ["depth_dir", "flow_fwd_dir", "flow_bwd_dir", "intrinsics"])]
    manifest: Option<PathBuf>,
    /// key = value configuration; defaults apply when absent.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output KITTI pose file.
    #[arg(long)]
    out: PathBuf,
    /// Per-frame diagnostics as JSON lines.
    #[arg(long)]
    diagnostics: Option<PathBuf>,
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long, default_value = "general")]
    scenario: String,
    #[arg(long, default_value_t = 50)]
    frames: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
    /// Gaussian flow noise, pixels.
    #[arg(long, default_value_t = 0.0)]
    flow_noise: f64,
    /// Multiplicative Gaussian depth noise, fraction of depth.
    #[arg(long, default_value_t = 0.0)]
    depth_noise: f64,
    /// Fraction of flow pixels replaced by outliers.
    #[arg(long, default_value_t = 0.0)]
    outliers: f64,
    /// Outlier displacement, pixels.
    #[arg(long, default_value_t = 10.0)]
    outlier_magnitude: f64,
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long)]
    est: PathBuf,
    #[arg(long)]
    gt: PathBuf,
    /// 6dof, 7dof or none.
    #[arg(long, default_value = "7dof")]
    align: String,
    /// Print the metric report as JSON.
    #[arg(long)]
    json: bool,
    /// Drop this many frames from the start of both trajectories.
    #[arg(long, default_value_t = 0)]
    skip: usize,
    /// Write a top-down SVG plot here.
    #[arg(long)]
    plot: Option<PathBuf>,
}

#[derive(Args)]
struct FlowCheckArgs {
    #[arg(long)]
    fwd: PathBuf,
    #[arg(long)]
    bwd: PathBuf,
    /// Print a histogram of the inconsistency.
    #[arg(long)]
    hist: bool,
}

fn main() -> Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match Cli::parse().command {
        Command::Run(a) => run(a),
        Command::Simulate(a) => simulate(a),
        Command::Eval(a) => eval(a),
        Command::FlowCheck(a) => flow_check(a),
        Command::Config => {
            print!("{}", io::format_config(&PipelineConfig::default()));
            Ok(())
        }
    }
}

fn run(a: RunArgs) -> Result<()> {
    let config = match &a.config {
        Some(p) => io::read_config(p).with_context(|| format!("reading config {}", p.display()))?,
        None => PipelineConfig::default(),
    };
    let dataset = match &a.manifest {
        Some(m) => Dataset::from_manifest(m).with_context(|| format!("reading manifest {}", m.display()))?,
        None => {
            let k_path = a.intrinsics.as_deref().expect("required by clap");
            let k = io::read_intrinsics(k_path).with_context(|| format!("reading intrinsics {}", k_path.display()))?;
            Dataset::from_dirs(
                a.depth_dir.as_deref().expect("required by clap"),
                a.flow_fwd_dir.as_deref().expect("required by clap"),
                a.flow_bwd_dir.as_deref().expect("required by clap"),
                k,
            )?
        }
    };
    let start = Instant::now();
    let mut odo = Odometry::new(config)?;
    for k in 0..dataset.len() {
        let frame = dataset.frame(k).with_context(|| format!("loading frame {k}"))?;
        odo.push(&frame)?;
    }
    let out = odo.finish()?;
    io::write_poses(&out.trajectory, &a.out).with_context(|| format!("writing {}", a.out.display()))?;
    if let Some(p) = &a.diagnostics {
        let mut f = fs::File::create(p).with_context(|| format!("creating {}", p.display()))?;
        for d in &out.diagnostics {
            writeln!(f, "{}", serde_json::to_string(d)?)?;
        }
    }
    let fallbacks = out.diagnostics.iter().filter(|d| d.fallback.is_some()).count();
    eprintln!(
        "{} frames in {:.2} s, {} fallbacks; poses written to {}",
        out.trajectory.len(),
        start.elapsed().as_secs_f64(),
        fallbacks,
        a.out.display()
    );
    Ok(())
}

fn simulate(a: SimulateArgs) -> Result<()> {
    let kind: Scenario = a.scenario.parse()?;
    let mut seq = scenario(kind, a.frames, a.seed)?;
    let noise = NoiseConfig {
        flow_noise_std: a.flow_noise,
        depth_noise_rel: a.depth_noise,
        outlier_fraction: a.outliers,
        outlier_magnitude: a.outlier_magnitude,
        randomize_occluded: false,
        seed: a.seed,
    };
    if !noise.is_zero() {
        seq = seq.with_noise(Some(noise))?;
    }
    let id = format!("{kind}-{}", a.seed);
    io::write_dataset(&a.out, &seq, &id).with_context(|| format!("writing dataset to {}", a.out.display()))?;
    eprintln!("{} frames of '{kind}' written to {}", seq.len(), a.out.display());
    Ok(())
}

fn eval(a: EvalArgs) -> Result<()> {
    let alignment: Alignment = a.align.parse()?;
    let est = io::read_poses(&a.est).with_context(|| format!("reading {}", a.est.display()))?;
    let gt = io::read_poses(&a.gt).with_context(|| format!("reading {}", a.gt.display()))?;
    if a.skip + 2 > gt.len() {
        bail!("--skip {} leaves fewer than two frames", a.skip);
    }
    let ev = evaluate(&est, &gt, &EvalOptions { alignment, skip: a.skip })?;
    if let Some(p) = &a.plot {
        write_plot(p, &ev.alignment.aligned, &gt.skip(a.skip))?;
    }
    let r = &ev.report;
    if a.json {
        println!("{}", serde_json::to_string_pretty(r)?);
        return Ok(());
    }
    let opt = |v: Option<f64>| v.map_or("n/a (path too short)".to_string(), |v| format!("{v:.4}"));
    println!("alignment  {}", r.alignment);
    if alignment == Alignment::Similarity {
        println!("scale      {:.6}", ev.alignment.transform.scale);
    }
    println!("ate        {:.6}", r.ate);
    println!("rpe_trans  {:.6}", r.rpe_trans);
    println!("rpe_rot    {:.6} deg", r.rpe_rot);
    println!("t_err      {} %", opt(r.t_err));
    println!("r_err      {} deg/100", opt(r.r_err));
    Ok(())
}

fn write_plot(path: &Path, est: &dfvo_core::Trajectory, gt: &dfvo_core::Trajectory) -> Result<()> {
    fs::write(path, trajectory_svg(est, gt)).with_context(|| format!("writing {}", path.display()))
}

const HIST_EDGES: [f64; 8] = [0.0, 0.25, 0.5, 1.0, 2.0, 4.0, 8.0, 16.0];

fn flow_check(a: FlowCheckArgs) -> Result<()> {
    let fwd = io::read_flow(&a.fwd).with_context(|| format!("reading {}", a.fwd.display()))?;
    let bwd = io::read_flow(&a.bwd).with_context(|| format!("reading {}", a.bwd.display()))?;
    let map = flow_consistency(&fwd, &bwd)?;
    let mut values: Vec<f64> = map.valid_values().collect();
    let total = map.width * map.height;
    println!("pixels     {total}");
    println!("valid      {} ({:.2}%)", values.len(), 100.0 * values.len() as f64 / total as f64);
    if values.is_empty() {
        return Ok(());
    }
    values.sort_by(f64::total_cmp);
    let q = |p: f64| values[((values.len() - 1) as f64 * p).round() as usize];
    println!("mean       {:.4} px", values.iter().sum::<f64>() / values.len() as f64);
    println!("median     {:.4} px", q(0.5));
    println!("p90        {:.4} px", q(0.9));
    println!("max        {:.4} px", q(1.0));
    if a.hist {
        for (i, lo) in HIST_EDGES.iter().enumerate() {
            let hi = HIST_EDGES.get(i + 1).copied().unwrap_or(f64::INFINITY);
            let n = values.iter().filter(|v| **v >= *lo && **v < hi).count();
            let bar = "#".repeat((60.0 * n as f64 / values.len() as f64).round() as usize);
            println!("[{lo:>5}, {hi:>5})  {n:>8}  {bar}");
        }
    }
    Ok(())
}
