use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use fusecluster::dataset::{generate, load_csv, save_csv, standardize, Dataset, GeneratorKind, GeneratorSpec};
use fusecluster::fuzzy::{caf_objective, fcm_fit, kmeans_fit, CentroidSet, FcmParams};
use fusecluster::hierarchy::{
    dot_from_parts, fit_path, hard_assignment, solve_fixed_gamma, MergeEvent, PathParams,
    SolveParams,
};
use fusecluster::metrics::{adjusted_rand_index, normalized_mutual_info, rand_index};
use fusecluster::{fmt_f64, Error};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

const EXIT_USAGE: u8 = 2;
const EXIT_INCONCLUSIVE: u8 = 3;
const EXIT_INTERNAL: u8 = 1;

#[derive(Parser)]
#[command(name = "fusecluster", version, about = "Fusion-penalized fuzzy clustering", disable_help_subcommand = true)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic dataset and write it as CSV.
    Gen(GenArgs),
    /// Fit a single clustering (fcm, kmeans, or caf-fixed) to a CSV dataset.
    Fit(FitArgs),
    /// Trace the full gamma path and write the hierarchy as JSON.
    Path(PathArgs),
    /// Reproduce the benchmark table over a dataset suite.
    Bench(BenchArgs),
    /// Derive a DOT or CSV view from a previously written hierarchy JSON.
    Export(ExportArgs),
}

#[derive(Args)]
struct GenArgs {
    /// gaussian-mixture-2d | gaussian-mixture-20d | gaussian-grid | uniform-blocks-noisy
    #[arg(long)]
    kind: String,
    /// Sample count (default depends on --kind).
    #[arg(long)]
    n: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(short, long)]
    output: PathBuf,
}

#[derive(Args)]
struct FitArgs {
    /// Input CSV; last column is the ground-truth label unless --no-labels.
    data: PathBuf,
    /// fcm | kmeans | caf-fixed
    #[arg(long)]
    alg: String,
    /// Cluster count (fcm, kmeans).
    #[arg(long)]
    k: Option<usize>,
    /// Fusion weight (caf-fixed).
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    max_iter: Option<usize>,
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long)]
    merge_tol: Option<f64>,
    #[arg(long)]
    standardize: bool,
    #[arg(long)]
    no_labels: bool,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct PathArgs {
    data: PathBuf,
    #[arg(long)]
    gamma_start: Option<f64>,
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long)]
    max_levels: Option<usize>,
    /// Initialization factor in [1, 3]: K0 = floor(a * sqrt(n)).
    #[arg(long)]
    a: Option<f64>,
    #[arg(long)]
    stop_at_c: Option<usize>,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    merge_tol: Option<f64>,
    #[arg(long)]
    beta: Option<f64>,
    /// Inner ADMM iteration cap.
    #[arg(long)]
    max_iter: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    standardize: bool,
    #[arg(long)]
    no_labels: bool,
    /// Also write a dendrogram-style DOT digraph here.
    #[arg(long)]
    dot: Option<PathBuf>,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct BenchArgs {
    /// synthetic | uci
    #[arg(long)]
    suite: String,
    #[arg(long, default_value_t = 20)]
    repeats: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Directory holding iris.csv / seeds.csv / breast.csv (uci suite).
    #[arg(long)]
    data_dir: Option<PathBuf>,
    /// markdown | csv
    #[arg(long, default_value = "markdown")]
    format: String,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct ExportArgs {
    /// Hierarchy JSON produced by `path`.
    input: PathBuf,
    /// dot | csv
    #[arg(long)]
    format: String,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Gen(args) => cmd_gen(&args),
        Command::Fit(args) => cmd_fit(&args),
        Command::Path(args) => cmd_path(&args),
        Command::Bench(args) => cmd_bench(&args),
        Command::Export(args) => cmd_export(&args),
    };
    match outcome {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(classify(&e))
        }
    }
}

fn classify(e: &Error) -> u8 {
    match e {
        Error::UnknownKind(_) | Error::InvalidParam(_) => EXIT_USAGE,
        Error::NoPlateau => EXIT_INCONCLUSIVE,
        _ => EXIT_INTERNAL,
    }
}

fn cmd_gen(args: &GenArgs) -> Result<u8, Error> {
    let kind = GeneratorKind::parse(&args.kind)
        .map_err(|_| Error::UnknownKind(format!("--kind {}", args.kind)))?;
    let n = args.n.unwrap_or_else(|| kind.default_n());
    let ds = generate(&GeneratorSpec::new(kind, n, args.seed))?;
    save_csv(&ds, &args.output, ',')?;
    println!("wrote {} ({} samples, {} features)", args.output.display(), ds.len(), ds.dims());
    Ok(0)
}

fn load_input(path: &Path, has_labels: bool, std: bool) -> Result<Dataset, Error> {
    let ds = load_csv(path, has_labels, ',')?;
    if std {
        standardize(&ds)
    } else {
        Ok(ds)
    }
}

fn metrics_line(assignment: &[usize], labels: &[i64]) -> Result<String, Error> {
    let pred: Vec<i64> = assignment.iter().map(|&a| a as i64).collect();
    let ri = rand_index(&pred, labels)?;
    let ari = adjusted_rand_index(&pred, labels)?;
    let nmi = normalized_mutual_info(&pred, labels)?;
    Ok(format!("RI={ri:.4} ARI={ari:.4} NMI={nmi:.4}"))
}

fn fit_json(
    alg: &str,
    ds: &Dataset,
    assignment: &[usize],
    centroids: &CentroidSet,
    objective: f64,
    iterations: usize,
) -> String {
    let mut out = String::new();
    out.push('{');
    out.push_str(&format!("\"algorithm\":{alg:?},\"dataset\":{:?},", ds.name));
    out.push_str(&format!("\"c\":{},\"objective\":{},\"iterations\":{},", centroids.k(), fmt_f64(objective), iterations));
    out.push_str("\"assignment\":[");
    out.push_str(&assignment.iter().map(|a| a.to_string()).collect::<Vec<_>>().join(","));
    let u = centroids.u();
    out.push_str(&format!("],\"centroids\":{{\"rows\":{},\"cols\":{},\"data\":[", u.nrows(), u.ncols()));
    let mut first = true;
    for r in 0..u.nrows() {
        for c in 0..u.ncols() {
            if !first {
                out.push(',');
            }
            first = false;
            out.push_str(&fmt_f64(u[(r, c)]));
        }
    }
    out.push_str("]}}");
    out
}

fn cmd_fit(args: &FitArgs) -> Result<u8, Error> {
    let ds = load_input(&args.data, !args.no_labels, args.standardize)?;
    let mut fcm_params = FcmParams {
        seed: args.seed,
        ..Default::default()
    };
    if let Some(t) = args.tol {
        fcm_params.tol = t;
    }
    if let Some(m) = args.max_iter {
        fcm_params.max_iter = m;
    }
    let need_k = || {
        args.k
            .ok_or_else(|| Error::InvalidParam(format!("--k is required for --alg {}", args.alg)))
    };
    let (assignment, centroids, objective, iterations, alg) = match args.alg.as_str() {
        "fcm" => {
            let fit = fcm_fit(&ds, need_k()?, &fcm_params)?;
            let assignment = hard_assignment(&fit.memberships);
            // halved quadratic form so gamma=0 fused runs are comparable
            let objective = caf_objective(&ds, &fit.memberships, &fit.centroids, 0.0)?;
            (assignment, fit.centroids, objective, fit.iterations, "fcm")
        }
        "kmeans" => {
            let fit = kmeans_fit(&ds, need_k()?, &fcm_params)?;
            let mut sse = 0.0;
            for (i, &a) in fit.assignment.iter().enumerate() {
                let diff = &ds.points.column(i) - &fit.centroids.u().column(a);
                sse += diff.iter().map(|v| v * v).sum::<f64>();
            }
            (fit.assignment.clone(), fit.centroids, sse, fit.iterations, "kmeans")
        }
        "caf-fixed" => {
            let gamma = args.gamma.ok_or_else(|| {
                Error::InvalidParam("--gamma is required for --alg caf-fixed".into())
            })?;
            let k = need_k()?;
            let mut rng = ChaCha8Rng::seed_from_u64(args.seed);
            let u0 = fusecluster::fuzzy::CentroidSet::init_from_samples(&ds, k, &mut rng)?;
            let mut solve_params = SolveParams::default();
            if let Some(t) = args.tol {
                solve_params.tol = t;
            }
            if let Some(b) = args.beta {
                solve_params.admm.beta = b;
            }
            if let Some(m) = args.max_iter {
                solve_params.admm.max_iter = m;
            }
            solve_params.merge_tol = args
                .merge_tol
                .unwrap_or(1e-4 * ds.rms_pairwise_distance());
            let solve = solve_fixed_gamma(&ds, &u0, gamma, &solve_params)?;
            let level = solve.level;
            (level.assignment, level.centroids, level.objective, solve.cycles, "caf-fixed")
        }
        other => {
            return Err(Error::InvalidParam(format!(
                "--alg {other} (expected fcm, kmeans, or caf-fixed)"
            )))
        }
    };
    if let Some(labels) = &ds.labels {
        println!("{} c={} {}", alg, centroids.k(), metrics_line(&assignment, labels)?);
    } else {
        println!("{} c={} objective={:.6}", alg, centroids.k(), objective);
    }
    if let Some(path) = &args.output {
        let json = fit_json(alg, &ds, &assignment, &centroids, objective, iterations);
        write_text(path, &json)?;
    }
    Ok(0)
}

fn cmd_path(args: &PathArgs) -> Result<u8, Error> {
    let ds = load_input(&args.data, !args.no_labels, args.standardize)?;
    let mut params = PathParams {
        gamma_start: args.gamma_start,
        epsilon: args.epsilon,
        merge_tol: args.merge_tol,
        seed: args.seed,
        ..Default::default()
    };
    if let Some(m) = args.max_levels {
        params.max_levels = m;
    }
    if let Some(a) = args.a {
        params.a = a;
    }
    if let Some(s) = args.stop_at_c {
        params.stop_at_c = s;
    }
    if let Some(t) = args.tol {
        params.tol = t;
    }
    if let Some(b) = args.beta {
        params.admm.beta = b;
    }
    if let Some(m) = args.max_iter {
        params.admm.max_iter = m;
    }
    let path = fit_path(&ds, &params)?;
    let json = path.to_json();
    match &args.output {
        Some(p) => write_text(p, &json)?,
        None => println!("{json}"),
    }
    if let Some(p) = &args.dot {
        write_text(p, &path.to_dot())?;
    }
    match path.optimal {
        Some(choice) => {
            eprintln!(
                "optimal c = {} over gamma in [{:.6}, {:.6}] ({} levels)",
                choice.c, choice.gamma_range.0, choice.gamma_range.1, path.levels.len()
            );
            if let (Some(level), Some(labels)) = (path.optimal_level(), &ds.labels) {
                eprintln!("{}", metrics_line(&level.assignment, labels)?);
            }
            Ok(0)
        }
        None => {
            eprintln!("no candidate plateau found; shrink --epsilon or raise --max-levels");
            Ok(EXIT_INCONCLUSIVE)
        }
    }
}

/// Published reference scores for RL-FCM; that method is not implemented here.
const RLFCM_REFERENCE: &[(&str, [f64; 3])] = &[
    ("gaussian-mixture-2d", [0.9934, 0.9760, 0.9726]),
    ("gaussian-mixture-20d", [1.0, 1.0, 1.0]),
    ("gaussian-grid", [1.0, 1.0, 1.0]),
    ("iris", [0.8859, 0.7445, 0.7777]),
    ("breast", [0.9099, 0.8179, 0.7096]),
    ("seeds", [0.8744, 0.7166, 0.6949]),
];

struct BenchRow {
    dataset: String,
    alg: String,
    mean: [f64; 3],
    std: [f64; 3],
    note: String,
}

fn mean_std(values: &[[f64; 3]]) -> ([f64; 3], [f64; 3]) {
    let n = values.len() as f64;
    let mut mean = [0.0; 3];
    let mut std = [0.0; 3];
    for v in values {
        for i in 0..3 {
            mean[i] += v[i] / n;
        }
    }
    if values.len() > 1 {
        for v in values {
            for i in 0..3 {
                std[i] += (v[i] - mean[i]).powi(2) / (n - 1.0);
            }
        }
        for s in std.iter_mut() {
            *s = s.sqrt();
        }
    }
    (mean, std)
}

fn bench_dataset(
    ds: &Dataset,
    true_c: usize,
    repeats: usize,
    base_seed: u64,
) -> Result<Vec<BenchRow>, Error> {
    let labels = ds
        .labels
        .as_ref()
        .ok_or_else(|| Error::InvalidParam(format!("{}: bench needs labels", ds.name)))?;
    let scores = |assignment: &[usize]| -> Result<[f64; 3], Error> {
        let pred: Vec<i64> = assignment.iter().map(|&a| a as i64).collect();
        Ok([
            rand_index(&pred, labels)?,
            adjusted_rand_index(&pred, labels)?,
            normalized_mutual_info(&pred, labels)?,
        ])
    };
    let caf: Vec<Result<[f64; 3], Error>> = (0..repeats)
        .into_par_iter()
        .map(|r| {
            let params = PathParams {
                seed: base_seed + r as u64,
                stop_at_c: 2,
                ..Default::default()
            };
            let path = fit_path(ds, &params)?;
            let level = path
                .optimal_level()
                .or_else(|| path.levels.iter().find(|l| l.c == true_c))
                .or_else(|| path.levels.last())
                .ok_or(Error::NoPlateau)?;
            scores(&level.assignment)
        })
        .collect();
    let caf: Vec<[f64; 3]> = caf.into_iter().collect::<Result<_, _>>()?;
    let fcm: Vec<Result<[f64; 3], Error>> = (0..repeats)
        .into_par_iter()
        .map(|r| {
            let params = FcmParams {
                seed: base_seed + r as u64,
                ..Default::default()
            };
            let fit = fcm_fit(ds, true_c, &params)?;
            scores(&hard_assignment(&fit.memberships))
        })
        .collect();
    let fcm: Vec<[f64; 3]> = fcm.into_iter().collect::<Result<_, _>>()?;
    let mut rows = Vec::new();
    let (mean, std) = mean_std(&caf);
    rows.push(BenchRow {
        dataset: ds.name.clone(),
        alg: "caf-hfcm".into(),
        mean,
        std,
        note: String::new(),
    });
    let (mean, std) = mean_std(&fcm);
    rows.push(BenchRow {
        dataset: ds.name.clone(),
        alg: format!("fcm (k={true_c})"),
        mean,
        std,
        note: String::new(),
    });
    if let Some((_, v)) = RLFCM_REFERENCE.iter().find(|(n, _)| *n == ds.name) {
        rows.push(BenchRow {
            dataset: ds.name.clone(),
            alg: "rl-fcm".into(),
            mean: *v,
            std: [0.0; 3],
            note: "reference (not reimplemented)".into(),
        });
    }
    Ok(rows)
}

fn render_table(rows: &[BenchRow], format: &str) -> Result<String, Error> {
    let mut out = String::new();
    match format {
        "markdown" => {
            out.push_str("| dataset | algorithm | RI | ARI | NMI | note |\n");
            out.push_str("|---|---|---|---|---|---|\n");
            for r in rows {
                out.push_str(&format!(
                    "| {} | {} | {:.4}±{:.4} | {:.4}±{:.4} | {:.4}±{:.4} | {} |\n",
                    r.dataset, r.alg, r.mean[0], r.std[0], r.mean[1], r.std[1], r.mean[2], r.std[2], r.note
                ));
            }
        }
        "csv" => {
            out.push_str("dataset,algorithm,ri_mean,ri_std,ari_mean,ari_std,nmi_mean,nmi_std,note\n");
            for r in rows {
                out.push_str(&format!(
                    "{},{},{},{},{},{},{},{},{}\n",
                    r.dataset,
                    r.alg,
                    fmt_f64(r.mean[0]),
                    fmt_f64(r.std[0]),
                    fmt_f64(r.mean[1]),
                    fmt_f64(r.std[1]),
                    fmt_f64(r.mean[2]),
                    fmt_f64(r.std[2]),
                    r.note
                ));
            }
        }
        other => {
            return Err(Error::InvalidParam(format!(
                "--format {other} (expected markdown or csv)"
            )))
        }
    }
    Ok(out)
}

fn cmd_bench(args: &BenchArgs) -> Result<u8, Error> {
    if let Ok(threads) = std::env::var("FUSECLUSTER_THREADS") {
        let threads: usize = threads
            .parse()
            .map_err(|_| Error::InvalidParam(format!("FUSECLUSTER_THREADS={threads}")))?;
        let _ = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global();
    }
    let mut rows = Vec::new();
    let mut skipped = Vec::new();
    match args.suite.as_str() {
        "synthetic" => {
            let cases = [
                (GeneratorKind::GaussianMixture2d, 6),
                (GeneratorKind::GaussianMixture20d, 6),
                (GeneratorKind::GaussianGrid, 25),
                (GeneratorKind::UniformBlocksNoisy, 13),
            ];
            for (kind, true_c) in cases {
                let ds = generate(&GeneratorSpec::new(kind, kind.default_n(), args.seed))?;
                rows.extend(bench_dataset(&ds, true_c, args.repeats, args.seed)?);
            }
        }
        "uci" => {
            let dir = args
                .data_dir
                .clone()
                .ok_or_else(|| Error::InvalidParam("--data-dir is required for --suite uci".into()))?;
            for (file, true_c) in [("iris.csv", 3), ("breast.csv", 2), ("seeds.csv", 3)] {
                let path = dir.join(file);
                if !path.exists() {
                    eprintln!("skip: {} not found", path.display());
                    skipped.push(file.to_string());
                    continue;
                }
                let ds = load_csv(&path, true, ',')?;
                rows.extend(bench_dataset(&ds, true_c, args.repeats, args.seed)?);
            }
        }
        other => {
            return Err(Error::InvalidParam(format!(
                "--suite {other} (expected synthetic or uci)"
            )))
        }
    }
    let table = render_table(&rows, &args.format)?;
    match &args.output {
        Some(p) => write_text(p, &table)?,
        None => print!("{table}"),
    }
    if skipped.is_empty() {
        Ok(0)
    } else {
        eprintln!("skipped datasets: {}", skipped.join(", "));
        Ok(EXIT_INCONCLUSIVE)
    }
}

fn cmd_export(args: &ExportArgs) -> Result<u8, Error> {
    let text = std::fs::read_to_string(&args.input).map_err(|source| Error::Io {
        path: args.input.clone(),
        source,
    })?;
    let json: serde_json::Value = serde_json::from_str(&text)
        .map_err(|e| Error::InvalidParam(format!("{}: {e}", args.input.display())))?;
    let dataset = json["dataset"].as_str().unwrap_or("hierarchy").to_string();
    let levels: Vec<(f64, usize)> = json["levels"]
        .as_array()
        .ok_or_else(|| Error::InvalidParam("missing levels array".into()))?
        .iter()
        .map(|l| {
            (
                l["gamma"].as_f64().unwrap_or(f64::NAN),
                l["c"].as_u64().unwrap_or(0) as usize,
            )
        })
        .collect();
    let objectives: Vec<f64> = json["levels"]
        .as_array()
        .unwrap()
        .iter()
        .map(|l| l["objective"].as_f64().unwrap_or(f64::NAN))
        .collect();
    let merges: Vec<MergeEvent> = json["merges"]
        .as_array()
        .map(|a| {
            a.iter()
                .map(|m| MergeEvent {
                    gamma: m["gamma"].as_f64().unwrap_or(f64::NAN),
                    absorbed: m["absorbed"]
                        .as_array()
                        .map(|v| v.iter().filter_map(|x| x.as_u64()).map(|x| x as usize).collect())
                        .unwrap_or_default(),
                    survivor: m["survivor"].as_u64().unwrap_or(0) as usize,
                    level: m["level"].as_u64().unwrap_or(0) as usize,
                })
                .collect()
        })
        .unwrap_or_default();
    let initial_k = json["params"]["initial_k"]
        .as_u64()
        .map(|k| k as usize)
        .unwrap_or_else(|| levels.first().map(|&(_, c)| c).unwrap_or(0));
    let rendered = match args.format.as_str() {
        "dot" => dot_from_parts(&dataset, initial_k, &levels, &merges),
        "csv" => {
            let mut out = String::from("level,gamma,c,objective\n");
            for (i, (&(gamma, c), &obj)) in levels.iter().zip(objectives.iter()).enumerate() {
                out.push_str(&format!("{i},{},{c},{}\n", fmt_f64(gamma), fmt_f64(obj)));
            }
            out
        }
        other => {
            return Err(Error::InvalidParam(format!(
                "--format {other} (expected dot or csv)"
            )))
        }
    };
    match &args.output {
        Some(p) => write_text(p, &rendered)?,
        None => print!("{rendered}"),
    }
    Ok(0)
}

fn write_text(path: &Path, text: &str) -> Result<(), Error> {
    let io = |source: std::io::Error| Error::Io {
        path: path.to_path_buf(),
        source,
    };
    let mut f = std::fs::File::create(path).map_err(io)?;
    f.write_all(text.as_bytes()).map_err(io)?;
    if !text.ends_with('\n') {
        f.write_all(b"\n").map_err(io)?;
    }
    Ok(())
}
