//! Experiment CLI wiring the library into the suites described in the
//! README: dataset generation, noise, curvature tables, Ricci-flow runs,
//! diffusion runs, training, and the three batch suites.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};

use rfhnd::curvature::{curvature, CurvatureConfig, CurvatureKind};
use rfhnd::diffusion::{diffuse, DiffusionConfig, KprimeProvider};
use rfhnd::flow::{
    convergence_monitor, energy_bounds, simulate_weight_flow, WeightRuleConfig,
};
use rfhnd::hypergraph::{Dataset, EdgeWeights};
use rfhnd::neural::{
    save_params, train, Ablation, ModelKind, ScatterComposition, TrainConfig,
};
use rfhnd::suites::{
    dataset_or_generated, require_features, run_complexity, run_oversmooth, run_robustness,
    summarize_robustness, write_csv, write_metadata, ComplexityConfig, OversmoothConfig,
    RobustnessConfig,
};
use rfhnd::synthgen::{
    apply_feature_noise, apply_structure_noise, generate_sbm, NoiseConfig, NoiseKind, SbmConfig,
};

#[derive(Parser)]
#[command(name = "rfhnd", about = "Curvature-guided hypergraph diffusion experiments")]
struct Cli {
    /// Base seed for anything stochastic.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Output directory for result files.
    #[arg(long, global = true, default_value = "out")]
    out_dir: PathBuf,
    /// Rayon worker threads (0 = library default).
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,
    /// Emit progress lines as JSON objects.
    #[arg(long, global = true, default_value_t = false)]
    json_logs: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a contextual SBM dataset file.
    Gen(GenArgs),
    /// Apply a noise protocol to a dataset file.
    Noise(NoiseArgs),
    /// Curvature table of a dataset: edge_id, size, weight, kappa.
    Curvature(CurvatureArgs),
    /// Ricci flow on hyperedge weights with energy/convergence reports.
    Flow(FlowArgs),
    /// Curvature-guided feature diffusion.
    Diffuse(DiffuseArgs),
    /// Train the classifier (or the mean-aggregation control).
    Train(TrainArgs),
    /// Depth sweep: accuracy and Dirichlet energy per depth for both models.
    Oversmooth(OversmoothArgs),
    /// Noise sweep: accuracy under the four noise protocols.
    Robustness(RobustnessArgs),
    /// Wall-time scaling of one diffusion step against the edge count.
    Complexity(ComplexityArgs),
}

#[derive(Args)]
struct GenArgs {
    #[arg(long, default_value_t = 1)]
    alpha: usize,
    #[arg(long, default_value_t = 2500)]
    n_per_class: usize,
    #[arg(long, default_value_t = 1000)]
    edges: usize,
    #[arg(long, default_value_t = 15)]
    edge_size: usize,
    #[arg(long, default_value_t = 1.0)]
    std: f64,
    #[arg(long, default_value_t = 16)]
    feature_dim: usize,
    #[arg(long, default_value_t = 1.0)]
    separation: f64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct NoiseArgs {
    #[arg(long)]
    kind: NoiseKind,
    #[arg(long)]
    rate: f64,
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct CurvatureArgs {
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long, default_value = "forman")]
    kind: CurvatureKind,
    /// Weight the edges by the attribute rule instead of stored/unit weights.
    #[arg(long, default_value_t = false)]
    attribute_weights: bool,
    #[arg(long, default_value_t = 0.1)]
    epsilon: f64,
}

#[derive(Args)]
struct FlowArgs {
    /// Dataset file; generated at desk scale when omitted.
    #[arg(long = "in")]
    input: Option<PathBuf>,
    #[arg(long, default_value = "forman")]
    curvature: CurvatureKind,
    #[arg(long, default_value_t = 0.01)]
    dt: f64,
    #[arg(long, default_value_t = 200)]
    steps: usize,
    #[arg(long, default_value_t = 0.01)]
    delta: f64,
    #[arg(long, default_value_t = 0.1)]
    epsilon: f64,
    /// attribute: features drive the weights; weight: pure weight flow.
    #[arg(long, default_value = "attribute")]
    mode: String,
    #[arg(long, default_value_t = 1)]
    alpha: usize,
}

#[derive(Args)]
struct DiffuseArgs {
    #[arg(long = "in")]
    input: Option<PathBuf>,
    /// analytic or learned.
    #[arg(long, default_value = "analytic")]
    mode: String,
    #[arg(long, default_value = "forman")]
    curvature: CurvatureKind,
    /// Step size; defaults to the step-0 stability bound when omitted.
    #[arg(long)]
    tau: Option<f64>,
    #[arg(long, default_value_t = 40)]
    steps: usize,
    #[arg(long, default_value_t = false)]
    no_cosine: bool,
    #[arg(long, default_value_t = false)]
    force: bool,
    /// Comma-separated steps at which to dump feature snapshots.
    #[arg(long, value_delimiter = ',')]
    snapshots: Vec<usize>,
    #[arg(long, default_value_t = 0.1)]
    epsilon: f64,
    #[arg(long, default_value_t = 1)]
    alpha: usize,
}

#[derive(Args)]
struct TrainArgs {
    #[arg(long)]
    dataset: Option<PathBuf>,
    #[arg(long, default_value_t = 1)]
    alpha: usize,
    #[arg(long, default_value_t = 150)]
    epochs: usize,
    #[arg(long, default_value_t = 1.0)]
    lr: f64,
    #[arg(long, default_value_t = 5e-4)]
    wd: f64,
    #[arg(long, default_value_t = 16)]
    hidden: usize,
    #[arg(long, default_value_t = 0.5)]
    tau: f64,
    #[arg(long, default_value_t = 2)]
    steps: usize,
    #[arg(long, default_value_t = 0.0)]
    dropout: f64,
    #[arg(long, default_value = "none")]
    ablation: Ablation,
    #[arg(long, default_value = "rfhnd")]
    model: ModelKind,
}

#[derive(Args)]
struct OversmoothArgs {
    #[arg(long, default_value_t = 2)]
    alpha: usize,
    #[arg(long, value_delimiter = ',', default_value = "2,4,10,20,30,40")]
    depths: Vec<usize>,
    #[arg(long, default_value_t = 3)]
    seeds: usize,
    #[arg(long, default_value_t = 500)]
    n_per_class: usize,
    #[arg(long, default_value_t = 200)]
    edges: usize,
    #[arg(long, default_value_t = 150)]
    epochs: usize,
}

#[derive(Args)]
struct RobustnessArgs {
    #[arg(long, default_value_t = 2)]
    alpha: usize,
    #[arg(long, value_delimiter = ',', default_value = "0.1,0.2,0.3,0.4")]
    rates: Vec<f64>,
    /// Subset of gaussian,uniform,mask,structure.
    #[arg(long, value_delimiter = ',', default_value = "gaussian,uniform,mask,structure")]
    kinds: Vec<NoiseKind>,
    #[arg(long, default_value_t = 5)]
    seeds: usize,
    #[arg(long, default_value_t = 500)]
    n_per_class: usize,
    #[arg(long, default_value_t = 200)]
    edges: usize,
    #[arg(long, default_value_t = 150)]
    epochs: usize,
}

#[derive(Args)]
struct ComplexityArgs {
    #[arg(long, value_delimiter = ',', default_value = "250,500,1000,2000,4000")]
    sizes: Vec<usize>,
    #[arg(long, default_value_t = 15)]
    edge_size: usize,
    #[arg(long, default_value_t = 16)]
    feature_dim: usize,
    #[arg(long, default_value_t = 500)]
    n_per_class: usize,
}

fn main() {
    let cli = Cli::parse();
    if cli.threads > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(cli.threads)
            .build_global()
            .expect("rayon pool already initialized");
    }
    if let Err(err) = run(cli) {
        eprintln!("error: {err}");
        std::process::exit(1);
    }
}

struct Logger {
    json: bool,
}

impl Logger {
    fn event(&self, name: &str, detail: &str) {
        if self.json {
            println!(
                "{}",
                serde_json::json!({ "event": name, "detail": detail })
            );
        } else {
            println!("[{name}] {detail}");
        }
    }
}

fn run(cli: Cli) -> rfhnd::Result<()> {
    std::fs::create_dir_all(&cli.out_dir)
        .map_err(|e| rfhnd::Error::Io { path: cli.out_dir.display().to_string(), source: e })?;
    let log = Logger { json: cli.json_logs };
    match cli.command {
        Command::Gen(args) => {
            let cfg = SbmConfig {
                nodes_per_class: args.n_per_class,
                classes: 2,
                num_edges: args.edges,
                edge_size: args.edge_size,
                alpha: args.alpha,
                feature_std: args.std,
                feature_dim: args.feature_dim,
                mean_separation: args.separation,
                seed: cli.seed,
            };
            let ds = generate_sbm(&cfg)?;
            ds.save(&args.out)?;
            log.event("gen", &format!("wrote {}", args.out.display()));
        }
        Command::Noise(args) => {
            let ds = Dataset::load(&args.input)?;
            let cfg = NoiseConfig::new(args.kind, args.rate, cli.seed);
            let out = match args.kind {
                NoiseKind::Structure => Dataset {
                    hypergraph: Arc::new(apply_structure_noise(&ds.hypergraph, &cfg)?),
                    ..ds
                },
                _ => {
                    let features = require_features(&ds)?;
                    Dataset { features: Some(apply_feature_noise(features, &cfg)?), ..ds }
                }
            };
            out.save(&args.out)?;
            log.event("noise", &format!("wrote {}", args.out.display()));
        }
        Command::Curvature(args) => {
            let ds = Dataset::load(&args.input)?;
            let h = &ds.hypergraph;
            let w = if args.attribute_weights {
                let x = require_features(&ds)?.clone().into_unit()?;
                rfhnd::flow::attribute_weight(h, &x, &WeightRuleConfig::with_epsilon(args.epsilon))?
            } else {
                ds.weights.clone().unwrap_or_else(|| EdgeWeights::uniform(h.num_edges()))
            };
            let kap = curvature(h, &w, args.kind, &CurvatureConfig::default())?;
            let mut lines = Vec::with_capacity(h.num_edges());
            for e in 0..h.num_edges() {
                lines.push(format!("{e},{},{},{}", h.edge_size(e), w[e], kap.kappa[e]));
            }
            let path = cli.out_dir.join("curvature.csv");
            write_csv(&path, "edge_id,size,weight,kappa", &lines)?;
            write_metadata(
                cli.out_dir.join("curvature.meta.json"),
                serde_json::json!({ "input": args.input.display().to_string(), "kind": args.kind }),
                cli.seed,
            )?;
            log.event("curvature", &format!("wrote {}", path.display()));
        }
        Command::Flow(args) => run_flow(&cli.out_dir, cli.seed, &log, args)?,
        Command::Diffuse(args) => run_diffuse(&cli.out_dir, cli.seed, &log, args)?,
        Command::Train(args) => {
            let ds = dataset_or_generated(args.dataset.as_deref(), args.alpha, cli.seed)?;
            let features = require_features(&ds)?;
            let labels = ds.labels.as_ref().ok_or(rfhnd::Error::InvalidConfig {
                message: "training needs labels".to_string(),
            })?;
            let cfg = TrainConfig {
                lr: args.lr,
                weight_decay: args.wd,
                dropout: args.dropout,
                hidden: args.hidden,
                epochs: args.epochs,
                seed: cli.seed,
                tau: args.tau,
                steps: args.steps,
                ablation: args.ablation,
                kind: args.model,
                scatter: ScatterComposition::PoolTransformRepool,
                ..Default::default()
            };
            let (params, metrics) = train(&ds.hypergraph, features, labels, &cfg)?;
            let metrics_path = cli.out_dir.join("train_metrics.json");
            let text = serde_json::to_string_pretty(&metrics).expect("metrics serialize");
            std::fs::write(&metrics_path, text + "\n")
                .map_err(|e| rfhnd::Error::Io { path: metrics_path.display().to_string(), source: e })?;
            let params_path = cli.out_dir.join("params.rfnp");
            save_params(&params_path, &params)?;
            write_metadata(
                cli.out_dir.join("train.meta.json"),
                serde_json::json!({
                    "alpha": args.alpha, "epochs": args.epochs, "lr": args.lr, "wd": args.wd,
                    "hidden": args.hidden, "tau": args.tau, "steps": args.steps,
                    "ablation": format!("{:?}", args.ablation), "model": format!("{:?}", args.model),
                }),
                cli.seed,
            )?;
            log.event(
                "train",
                &format!(
                    "val {:.4} test {:.4} at epoch {}; params -> {}",
                    metrics.val_accuracy,
                    metrics.test_accuracy,
                    metrics.best_epoch,
                    params_path.display()
                ),
            );
        }
        Command::Oversmooth(args) => {
            let mut cfg = OversmoothConfig::default();
            cfg.sbm.alpha = args.alpha;
            cfg.sbm.nodes_per_class = args.n_per_class;
            cfg.sbm.num_edges = args.edges;
            cfg.depths = args.depths.clone();
            cfg.seeds = (0..args.seeds as u64).map(|s| s + cli.seed).collect();
            cfg.train.epochs = args.epochs;
            let rows = run_oversmooth(&cfg)?;
            let lines: Vec<String> = rows
                .iter()
                .map(|r| format!("{},{},{},{},{}", r.model, r.depth, r.seed, r.accuracy, r.energy))
                .collect();
            let path = cli.out_dir.join("oversmooth.csv");
            write_csv(&path, "model,depth,seed,accuracy,dirichlet_energy", &lines)?;
            write_metadata(
                cli.out_dir.join("oversmooth.meta.json"),
                serde_json::json!({
                    "alpha": args.alpha, "depths": args.depths, "seeds": args.seeds,
                    "n_per_class": args.n_per_class, "edges": args.edges, "epochs": args.epochs,
                }),
                cli.seed,
            )?;
            log.event("oversmooth", &format!("wrote {}", path.display()));
        }
        Command::Robustness(args) => {
            let mut cfg = RobustnessConfig::default();
            cfg.sbm.alpha = args.alpha;
            cfg.sbm.nodes_per_class = args.n_per_class;
            cfg.sbm.num_edges = args.edges;
            cfg.kinds = args.kinds.clone();
            cfg.rates = args.rates.clone();
            cfg.seeds = (0..args.seeds as u64).map(|s| s + cli.seed).collect();
            cfg.train.epochs = args.epochs;
            let rows = run_robustness(&cfg)?;
            let lines: Vec<String> = rows
                .iter()
                .map(|r| format!("{},{},{},{},{}", r.model, r.kind, r.rate, r.seed, r.accuracy))
                .collect();
            let path = cli.out_dir.join("robustness.csv");
            write_csv(&path, "model,noise_kind,rate,seed,accuracy", &lines)?;
            let summary = summarize_robustness(&rows);
            let lines: Vec<String> = summary
                .iter()
                .map(|(m, k, r, mean, std)| format!("{m},{k},{r},{mean},{std}"))
                .collect();
            write_csv(
                cli.out_dir.join("robustness_summary.csv"),
                "model,noise_kind,rate,accuracy_mean,accuracy_std",
                &lines,
            )?;
            write_metadata(
                cli.out_dir.join("robustness.meta.json"),
                serde_json::json!({
                    "alpha": args.alpha, "rates": args.rates, "seeds": args.seeds,
                    "kinds": args.kinds, "epochs": args.epochs,
                }),
                cli.seed,
            )?;
            log.event("robustness", &format!("wrote {}", path.display()));
        }
        Command::Complexity(args) => {
            let cfg = ComplexityConfig {
                edge_counts: args.sizes.clone(),
                edge_size: args.edge_size,
                feature_dim: args.feature_dim,
                nodes_per_class: args.n_per_class,
                seed: cli.seed,
            };
            let (rows, slope) = run_complexity(&cfg)?;
            let lines: Vec<String> = rows
                .iter()
                .map(|r| format!("{},{},{}", r.m, r.seconds_per_step, r.repeats))
                .collect();
            let path = cli.out_dir.join("complexity.csv");
            write_csv(&path, "m,seconds_per_step,repeats", &lines)?;
            write_metadata(
                cli.out_dir.join("complexity.meta.json"),
                serde_json::json!({ "sizes": args.sizes, "slope": slope }),
                cli.seed,
            )?;
            log.event("complexity", &format!("slope {slope:.3}; wrote {}", path.display()));
        }
    }
    Ok(())
}

fn run_flow(out_dir: &Path, seed: u64, log: &Logger, args: FlowArgs) -> rfhnd::Result<()> {
    let ds = dataset_or_flow_toy(args.input.as_deref(), args.alpha, seed)?;
    let h = &ds.hypergraph;
    let ccfg = CurvatureConfig::default();
    let (times, weights, kappas, energies) = match args.mode.as_str() {
        "weight" => {
            let w0 = ds.weights.clone().unwrap_or_else(|| EdgeWeights::uniform(h.num_edges()));
            let trace = simulate_weight_flow(h, &w0, args.curvature, &ccfg, args.dt, args.steps)?;
            if let Some(reason) = &trace.aborted {
                log.event("flow", &format!("weight flow stopped early: {reason}"));
            }
            (trace.times, trace.weights, trace.kappas, None)
        }
        "attribute" => {
            let x0 = require_features(&ds)?.clone().into_unit()?;
            let cfg = DiffusionConfig {
                tau: args.dt,
                steps: args.steps,
                force: true,
                ..Default::default()
            };
            let provider = KprimeProvider::Analytic {
                kind: args.curvature,
                curv: ccfg,
                weight: WeightRuleConfig::with_epsilon(args.epsilon),
            };
            let trace = diffuse(h, &x0, &cfg, provider, &[])?;
            (
                trace.times.clone(),
                trace.weight_traj.expect("analytic mode records weights"),
                trace.kappa_traj.expect("analytic mode records curvature"),
                Some(trace.energies),
            )
        }
        other => {
            return Err(rfhnd::Error::InvalidConfig {
                message: format!("unknown flow mode {other:?}"),
            })
        }
    };

    let mut lines = Vec::new();
    for (k, t) in times.iter().enumerate() {
        for e in 0..h.num_edges() {
            lines.push(format!("{t},{e},{},{}", weights[k][e], kappas[k][e]));
        }
    }
    write_csv(out_dir.join("flow_trajectory.csv"), "t,edge_id,w,kappa", &lines)?;

    let report = convergence_monitor(&times, &kappas, &weights, args.delta, args.epsilon, None)?;
    let text = serde_json::to_string_pretty(&report).expect("report serialize");
    let conv_path = out_dir.join("convergence_report.json");
    std::fs::write(&conv_path, text + "\n")
        .map_err(|e| rfhnd::Error::Io { path: conv_path.display().to_string(), source: e })?;

    if let Some(energy) = energies {
        let report = energy_bounds(h, &times, &weights, &energy, args.epsilon)?;
        let text = serde_json::to_string_pretty(&report).expect("report serialize");
        let path = out_dir.join("energy_report.json");
        std::fs::write(&path, text + "\n")
            .map_err(|e| rfhnd::Error::Io { path: path.display().to_string(), source: e })?;
        log.event(
            "flow",
            &format!(
                "mean energy {:.4} in [{:.4}, {:.4}] ({:?})",
                report.mean_energy, report.b2, report.b1, report.form
            ),
        );
    }
    write_metadata(
        out_dir.join("flow.meta.json"),
        serde_json::json!({
            "mode": args.mode, "curvature": args.curvature, "dt": args.dt,
            "steps": args.steps, "delta": args.delta, "epsilon": args.epsilon,
        }),
        seed,
    )?;
    Ok(())
}

/// Flow runs get a small dense toy when no dataset file is given; the full
/// SBM default is wasteful for pure weight flows.
fn dataset_or_flow_toy(input: Option<&Path>, alpha: usize, seed: u64) -> rfhnd::Result<Dataset> {
    match input {
        Some(path) => Dataset::load(path),
        None => generate_sbm(&SbmConfig {
            nodes_per_class: 30,
            num_edges: 20,
            edge_size: 6,
            alpha: alpha.min(3),
            feature_dim: 8,
            seed,
            ..Default::default()
        }),
    }
}

fn run_diffuse(out_dir: &Path, seed: u64, log: &Logger, args: DiffuseArgs) -> rfhnd::Result<()> {
    let ds = dataset_or_generated(args.input.as_deref(), args.alpha, seed)?;
    let h = &ds.hypergraph;
    let x0 = require_features(&ds)?.clone().into_unit()?;
    let wcfg = WeightRuleConfig::with_epsilon(args.epsilon);
    let ccfg = CurvatureConfig::default();

    // The learned mode runs the trained-free hypernet forward; analytic mode
    // recomputes the closed form each step.
    let tau = match args.tau {
        Some(t) => t,
        None => {
            // Step-0 certificate at the analytic weights.
            let w = rfhnd::flow::attribute_weight(h, &x0, &wcfg)?;
            let kap = curvature(h, &w, args.curvature, &ccfg)?;
            let dcfg = DiffusionConfig::default();
            let kw = rfhnd::diffusion::analytic_kprime(h, &x0, &kap, &w, &dcfg);
            let cert = rfhnd::diffusion::stability_bound(h, &kw, 0.0);
            cert.tau_bound.unwrap_or(0.1)
        }
    };
    let cfg = DiffusionConfig {
        tau,
        steps: args.steps,
        use_cosine: !args.no_cosine,
        force: args.force,
        ..Default::default()
    };

    let trace = match args.mode.as_str() {
        "analytic" => {
            let provider = KprimeProvider::Analytic {
                kind: args.curvature,
                curv: ccfg,
                weight: wcfg,
            };
            diffuse(h, &x0, &cfg, provider, &args.snapshots)?
        }
        "learned" => {
            let structure = Arc::new(rfhnd::neural::Structure::new(Arc::clone(h)));
            let params = rfhnd::neural::ModelParams::init(
                seed,
                x0.d(),
                x0.d().max(8),
                2,
                h.num_edges(),
            );
            let mcfg = rfhnd::neural::ModelConfig {
                steps: 1,
                tau,
                ..Default::default()
            };
            let mut provider = move |_step: usize, x: &rfhnd::hypergraph::FeatureMatrix| {
                let feat = rfhnd::neural::Mat::from_vec(x.n(), x.d(), x.data().to_vec());
                let mut tape = rfhnd::neural::Tape::new(Arc::clone(&structure));
                let f = tape.leaf(feat);
                let (out, _) = rfhnd::neural::model_forward(
                    &mut tape,
                    f,
                    &params,
                    &mcfg,
                    rfhnd::neural::KprimeMode::Model,
                );
                let k = tape.value(out.kprime_nodes[0]).data.clone();
                Ok(rfhnd::diffusion::AggregationWeights {
                    kprime: k,
                    source: rfhnd::diffusion::KprimeSource::Learned,
                })
            };
            diffuse(h, &x0, &cfg, KprimeProvider::Callback(&mut provider), &args.snapshots)?
        }
        other => {
            return Err(rfhnd::Error::InvalidConfig {
                message: format!("unknown diffuse mode {other:?}"),
            })
        }
    };

    let minmax = trace.weight_min_max();
    let mut lines = Vec::new();
    for (step, energy) in trace.energies.iter().enumerate() {
        let row_sum = if step < trace.max_row_sums.len() {
            trace.max_row_sums[step]
        } else {
            f64::NAN
        };
        let (lo, hi) = minmax
            .as_ref()
            .and_then(|v| v.get(step).copied())
            .unwrap_or((f64::NAN, f64::NAN));
        lines.push(format!("{step},{energy},{row_sum},{lo},{hi}"));
    }
    let path = out_dir.join("diffuse.csv");
    write_csv(&path, "step,energy,max_row_sum,min_w,max_w", &lines)?;
    for (step, snap) in &trace.snapshots {
        let mut text = String::new();
        for i in 0..snap.n() {
            for (k, v) in snap.row(i).iter().enumerate() {
                if k > 0 {
                    text.push(',');
                }
                let _ = write!(text, "{v}");
            }
            text.push('\n');
        }
        let snap_path = out_dir.join(format!("snapshot_{step:04}.csv"));
        std::fs::write(&snap_path, text)
            .map_err(|e| rfhnd::Error::Io { path: snap_path.display().to_string(), source: e })?;
    }
    write_metadata(
        out_dir.join("diffuse.meta.json"),
        serde_json::json!({
            "mode": args.mode, "curvature": args.curvature, "tau": tau,
            "steps": args.steps, "no_cosine": args.no_cosine,
            "certificate": trace.certificate,
        }),
        seed,
    )?;
    log.event(
        "diffuse",
        &format!(
            "{} steps, tau {:.4}, terminal energy {:.6}; wrote {}",
            args.steps,
            tau,
            trace.energies.last().unwrap(),
            path.display()
        ),
    );
    Ok(())
}
