//! Command-line front end: run experiments, dump raw samples and density
//! tables for plotting, manage seeds and configs.
//!
//! Exit codes: 0 when every pass-semantics test passes, 2 on test failure,
//! 1 on usage errors.

use clap::{Parser, Subcommand};
use cmlab::dist;
use cmlab::experiments::{self, ExperimentSpec, RunOutput};
use cmlab::poisson;
use cmlab::rng::RngStream;
use cmlab::stats::TestReport;
use serde::Deserialize;
use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

#[derive(Parser)]
#[command(
    name = "cmlab",
    version,
    about = "Concave-majorant simulation laboratory",
    long_about = "Runs registered distributional experiments, dumps raw samples, and \
tabulates density oracles. The default seed comes from --seed, then the \
config file, then the CMLAB_SEED environment variable, then 42. A config \
file (JSON) may set seed, workers, out_dir, format and per-experiment \
params; command-line flags override it."
)]
struct Cli {
    /// Optional JSON config file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Base RNG seed (overrides config and CMLAB_SEED).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (affects wall time only, never results).
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Output directory for reports and sample sidecars.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Output format for report files: csv or json.
    #[arg(long, global = true)]
    format: Option<String>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a registered experiment (or `all`).
    Experiment {
        /// Registry name, or `all`.
        name: String,
        /// Sample-size override (the experiment's `n` parameter).
        #[arg(long)]
        n: Option<f64>,
        /// Extra parameter overrides, `key=value`.
        #[arg(long = "param", value_name = "KEY=VALUE")]
        params: Vec<String>,
    },
    /// Dump raw samples from a named target.
    Sample {
        /// Target: chi5 | straddle1 | zenith A B | meander MU | chain M |
        /// tau-window LO HI.
        target: Vec<String>,
        #[arg(long, default_value_t = 10_000)]
        n: usize,
    },
    /// Tabulate a density oracle over a grid.
    Density {
        /// Oracle: f3 | chi5 | kprime-z | gap-z | h-ab | ig | ig-star |
        /// meander-rn | meander-tilde1.
        oracle: String,
        #[arg(long, default_value_t = 64)]
        grid: usize,
        #[arg(long, default_value_t = 2.0)]
        a: f64,
        #[arg(long, default_value_t = 1.0)]
        b: f64,
        #[arg(long, default_value_t = 2.0)]
        mu: f64,
        #[arg(long, default_value_t = 1.0)]
        y: f64,
        /// Upper edge of the tabulation box.
        #[arg(long, default_value_t = 5.0)]
        hi: f64,
    },
    /// List the experiment registry with one-line claims.
    List,
}

#[derive(Deserialize, Default)]
struct FileConfig {
    seed: Option<u64>,
    workers: Option<usize>,
    out_dir: Option<PathBuf>,
    format: Option<String>,
    #[serde(default)]
    params: BTreeMap<String, BTreeMap<String, f64>>,
}

fn main() {
    let cli = Cli::parse();
    std::process::exit(match run_cli(cli) {
        Ok(all_pass) => {
            if all_pass {
                0
            } else {
                2
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    });
}

fn fmt17(x: f64) -> String {
    format!("{x:.16e}")
}

fn run_cli(cli: Cli) -> Result<bool, String> {
    let file_cfg: FileConfig = match &cli.config {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| format!("config {path:?}: {e}"))?;
            serde_json::from_str(&text).map_err(|e| format!("config {path:?}: {e}"))?
        }
        None => FileConfig::default(),
    };
    let seed = cli
        .seed
        .or(file_cfg.seed)
        .or_else(|| std::env::var("CMLAB_SEED").ok().and_then(|s| s.parse().ok()))
        .unwrap_or(42);
    let workers = cli.workers.or(file_cfg.workers);
    let out_dir = cli.out.clone().or(file_cfg.out_dir.clone());
    let format = cli
        .format
        .clone()
        .or(file_cfg.format.clone())
        .unwrap_or_else(|| "json".to_string());
    if format != "json" && format != "csv" {
        return Err(format!("unknown format `{format}` (expected csv or json)"));
    }

    let body = || -> Result<bool, String> {
        match &cli.command {
            Command::Experiment { name, n, params } => {
                let mut overrides: BTreeMap<String, f64> = BTreeMap::new();
                for kv in params {
                    let (k, v) = kv
                        .split_once('=')
                        .ok_or_else(|| format!("bad --param `{kv}`, expected key=value"))?;
                    let v: f64 = v.parse().map_err(|e| format!("bad --param `{kv}`: {e}"))?;
                    overrides.insert(k.to_string(), v);
                }
                if let Some(n) = n {
                    overrides.insert("n".into(), *n);
                }
                let names: Vec<String> = if name == "all" {
                    experiments::registry().iter().map(|d| d.name.to_string()).collect()
                } else {
                    vec![name.clone()]
                };
                let mut all_pass = true;
                for exp_name in names {
                    let mut params = file_cfg.params.get(&exp_name).cloned().unwrap_or_default();
                    params.extend(overrides.clone());
                    let spec = ExperimentSpec { name: exp_name.clone(), params, seed };
                    let started = Instant::now();
                    let output = experiments::run(&spec).map_err(|e| e.to_string())?;
                    let wall = started.elapsed().as_secs_f64();
                    for r in &output.reports {
                        println!("{}", report_line(r));
                        all_pass &= r.pass;
                    }
                    if let Some(dir) = &out_dir {
                        write_reports(dir, &exp_name, &spec, &output, wall, &format)
                            .map_err(|e| e.to_string())?;
                    }
                }
                Ok(all_pass)
            }
            Command::Sample { target, n } => {
                let table = sample_target(target, *n, seed).map_err(|e| e.to_string())?;
                emit_table(&table, out_dir.as_deref())?;
                Ok(true)
            }
            Command::Density { oracle, grid, a, b, mu, y, hi } => {
                let table =
                    density_table(oracle, *grid, *a, *b, *mu, *y, *hi).map_err(|e| e.to_string())?;
                emit_table(&table, out_dir.as_deref())?;
                Ok(true)
            }
            Command::List => {
                for d in experiments::registry() {
                    println!("{:28} {}", d.name, d.claim);
                }
                Ok(true)
            }
        }
    };

    match workers {
        Some(w) => rayon::ThreadPoolBuilder::new()
            .num_threads(w)
            .build()
            .map_err(|e| e.to_string())?
            .install(body),
        None => body(),
    }
}

fn report_line(r: &TestReport) -> String {
    format!(
        "{}\tn={:?}\tseed={}\tstat={}\tp_or_d={}\tthreshold={}\t{}",
        r.experiment,
        r.n,
        r.seed,
        fmt17(r.statistic),
        fmt17(r.p_value_or_distance),
        fmt17(r.threshold),
        if r.pass { "PASS" } else { "FAIL" }
    )
}

fn write_reports(
    dir: &Path,
    name: &str,
    spec: &ExperimentSpec,
    output: &RunOutput,
    wall: f64,
    format: &str,
) -> std::io::Result<()> {
    fs::create_dir_all(dir)?;
    if format == "json" {
        let records: Vec<serde_json::Value> = output
            .reports
            .iter()
            .map(|r| {
                serde_json::json!({
                    "name": r.experiment,
                    "params": spec.params,
                    "seed": r.seed,
                    "version": env!("CARGO_PKG_VERSION"),
                    "n": r.n,
                    "statistic": r.statistic,
                    "p_value_or_distance": r.p_value_or_distance,
                    "threshold": r.threshold,
                    "pass": r.pass,
                    "retries": r.retries,
                    "wall_time_s": wall,
                })
            })
            .collect();
        let mut f = fs::File::create(dir.join(format!("{name}_report.json")))?;
        writeln!(f, "{}", serde_json::to_string_pretty(&records)?)?;
    } else {
        let mut f = fs::File::create(dir.join(format!("{name}_report.csv")))?;
        writeln!(f, "name,seed,statistic,p_value_or_distance,threshold,pass,retries")?;
        for r in &output.reports {
            writeln!(
                f,
                "{},{},{},{},{},{},{}",
                r.experiment,
                r.seed,
                fmt17(r.statistic),
                fmt17(r.p_value_or_distance),
                fmt17(r.threshold),
                r.pass,
                r.retries
            )?;
        }
    }
    for table in &output.samples {
        write_csv(&dir.join(format!("{name}_{}.csv", table.name)), table)?;
    }
    Ok(())
}

fn write_csv(path: &Path, table: &experiments::SampleTable) -> std::io::Result<()> {
    let mut f = fs::File::create(path)?;
    writeln!(f, "{}", table.columns.join(","))?;
    for row in &table.rows {
        let line: Vec<String> = row.iter().map(|&x| fmt17(x)).collect();
        writeln!(f, "{}", line.join(","))?;
    }
    Ok(())
}

fn emit_table(
    table: &experiments::SampleTable,
    out_dir: Option<&Path>,
) -> Result<(), String> {
    match out_dir {
        Some(dir) => {
            fs::create_dir_all(dir).map_err(|e| e.to_string())?;
            let path = dir.join(format!("{}.csv", table.name));
            write_csv(&path, table).map_err(|e| e.to_string())?;
            println!("wrote {} rows to {}", table.rows.len(), path.display());
        }
        None => {
            println!("{}", table.columns.join(","));
            for row in &table.rows {
                let line: Vec<String> = row.iter().map(|&x| fmt17(x)).collect();
                println!("{line}", line = line.join(","));
            }
        }
    }
    Ok(())
}

fn sample_target(
    target: &[String],
    n: usize,
    seed: u64,
) -> cmlab::Result<experiments::SampleTable> {
    use cmlab::Error;
    let base = RngStream::new(seed, 0);
    let mut rng = base.rng();
    let name = target.first().map(String::as_str).unwrap_or("");
    match name {
        "chi5" => {
            let rows: Vec<Vec<f64>> = (0..n)
                .map(|_| {
                    let s = poisson::straddle_time_one(&mut rng)?;
                    Ok(vec![s.state.k + s.state.y])
                })
                .collect::<cmlab::Result<_>>()?;
            Ok(experiments::SampleTable {
                name: "chi5".into(),
                columns: vec!["two_k_minus_b".into()],
                rows,
            })
        }
        "straddle1" => {
            let rows: Vec<Vec<f64>> = (0..n)
                .map(|_| {
                    let s = poisson::straddle_time_one(&mut rng)?;
                    Ok(vec![s.state.a, s.state.k, s.intercept, s.state.y, s.g1, s.d1])
                })
                .collect::<cmlab::Result<_>>()?;
            Ok(experiments::SampleTable {
                name: "straddle1".into(),
                columns: ["kprime", "k", "intercept", "gap", "g1", "d1"]
                    .iter()
                    .map(|s| s.to_string())
                    .collect(),
                rows,
            })
        }
        "zenith" => {
            let a: f64 = parse_arg(target, 1, "a")?;
            let b: f64 = parse_arg(target, 2, "b")?;
            let rows: Vec<Vec<f64>> = (0..n)
                .map(|_| {
                    let (ds, dz) = poisson::zenith_increment(a, b, &mut rng)?;
                    Ok(vec![ds, dz])
                })
                .collect::<cmlab::Result<_>>()?;
            Ok(experiments::SampleTable {
                name: "zenith".into(),
                columns: vec!["ds".into(), "dz".into()],
                rows,
            })
        }
        "meander" => {
            let mu: f64 = parse_arg(target, 1, "mu")?;
            if !(mu > 0.0) {
                return Err(Error::InvalidParameter("meander needs mu > 0".into()));
            }
            let rows: Vec<Vec<f64>> = (0..n)
                .map(|_| {
                    // scaled vertex draw + bridge endpoint identities
                    let (sigma, value) = poisson::williams_vertex(mu, &mut rng)?;
                    let tilde1 = (value - mu * sigma) / sigma.sqrt();
                    let hat1 = value / sigma.sqrt();
                    Ok(vec![tilde1, hat1])
                })
                .collect::<cmlab::Result<_>>()?;
            Ok(experiments::SampleTable {
                name: "meander".into(),
                columns: vec!["tilde1".into(), "hat1".into()],
                rows,
            })
        }
        "chain" => {
            let m: usize = parse_arg(target, 1, "m")? as usize;
            let mut rows = Vec::with_capacity(n * (m + 1));
            for draw in 0..n {
                let (chain, _) = cmlab::chains::sample_chain(m, &mut rng)?;
                for (k, s) in chain.iter().enumerate() {
                    rows.push(vec![draw as f64, k as f64, s.tau, s.kappa, s.rho]);
                }
            }
            Ok(experiments::SampleTable {
                name: "chain".into(),
                columns: ["draw", "n", "tau", "kappa", "rho"]
                    .iter()
                    .map(|s| s.to_string())
                    .collect(),
                rows,
            })
        }
        "tau-window" => {
            let lo: f64 = parse_arg(target, 1, "lo")?;
            let hi: f64 = parse_arg(target, 2, "hi")?;
            let mut rows = Vec::new();
            for draw in 0..n {
                let w = poisson::sample_tau_window(lo, hi, &mut rng)?;
                for (r, dt) in w.jumps {
                    rows.push(vec![draw as f64, r, dt]);
                }
            }
            Ok(experiments::SampleTable {
                name: "tau_window".into(),
                columns: vec!["draw".into(), "r".into(), "dtau".into()],
                rows,
            })
        }
        other => Err(Error::InvalidParameter(format!(
            "unknown sample target `{other}`; expected chi5 | straddle1 | zenith A B | \
             meander MU | chain M | tau-window LO HI"
        ))),
    }
}

fn parse_arg(target: &[String], idx: usize, name: &str) -> cmlab::Result<f64> {
    target
        .get(idx)
        .ok_or_else(|| cmlab::Error::InvalidParameter(format!("missing argument `{name}`")))?
        .parse()
        .map_err(|e| cmlab::Error::InvalidParameter(format!("argument `{name}`: {e}")))
}

fn density_table(
    oracle: &str,
    grid: usize,
    a: f64,
    b: f64,
    mu: f64,
    y: f64,
    hi: f64,
) -> cmlab::Result<experiments::SampleTable> {
    use cmlab::Error;
    if grid < 2 {
        return Err(Error::InvalidParameter("grid must be at least 2".into()));
    }
    let axis = |upper: f64| -> Vec<f64> {
        (1..=grid).map(|i| upper * i as f64 / grid as f64).collect()
    };
    let (columns, rows): (Vec<String>, Vec<Vec<f64>>) = match oracle {
        "f3" => {
            let xs = axis(hi);
            let mut rows = Vec::with_capacity(grid * grid * grid);
            for &aa in &xs {
                for &bb in &xs {
                    for &yy in &xs {
                        rows.push(vec![aa, bb, yy, dist::f3_density(aa, bb, yy)]);
                    }
                }
            }
            (vec!["a".into(), "b".into(), "y".into(), "f3".into()], rows)
        }
        "chi5" => {
            let rows = axis(hi).iter().map(|&z| vec![z, dist::chi5_density(z)]).collect();
            (vec!["z".into(), "density".into()], rows)
        }
        "kprime-z" => {
            let xs = axis(hi);
            let mut rows = Vec::new();
            for &av in &xs {
                for &z in &xs {
                    rows.push(vec![av, z, dist::kprime_z_joint(av, z)]);
                }
            }
            (vec!["a".into(), "z".into(), "density".into()], rows)
        }
        "gap-z" => {
            let xs = axis(hi);
            let mut rows = Vec::new();
            for &yv in &xs {
                for &z in &xs {
                    rows.push(vec![yv, z, dist::gap_z_joint(yv, z)]);
                }
            }
            (vec!["y".into(), "z".into(), "density".into()], rows)
        }
        "h-ab" => {
            if !(b > 0.0 && a > b) {
                return Err(Error::InvalidParameter("h-ab needs 0 < b < a".into()));
            }
            let ss = axis(hi);
            let zs = axis(a * hi);
            let mut rows = Vec::new();
            for &s in &ss {
                for &z in &zs {
                    rows.push(vec![s, z, dist::zenith_density(a, b, s, z)?]);
                }
            }
            (vec!["s".into(), "z".into(), "h".into()], rows)
        }
        "ig" | "ig-star" => {
            let star = oracle == "ig-star";
            let rows = axis(hi)
                .iter()
                .map(|&t| Ok(vec![t, dist::ig_density(mu, y, t, star)?]))
                .collect::<cmlab::Result<_>>()?;
            (vec!["t".into(), "density".into()], rows)
        }
        "meander-rn" => {
            let rows = axis(hi).iter().map(|&t| vec![t, dist::meander_rn(t)]).collect();
            (vec!["t".into(), "rn".into()], rows)
        }
        "meander-tilde1" => {
            let rows = axis(hi)
                .iter()
                .map(|&t| vec![t, dist::meander_tilde1_density(t), dist::meander_tilde1_cdf(t)])
                .collect();
            (vec!["t".into(), "density".into(), "cdf".into()], rows)
        }
        other => {
            return Err(Error::InvalidParameter(format!(
                "unknown density oracle `{other}`; expected f3 | chi5 | kprime-z | gap-z | \
                 h-ab | ig | ig-star | meander-rn | meander-tilde1"
            )))
        }
    };
    Ok(experiments::SampleTable { name: format!("density_{}", oracle.replace('-', "_")), columns, rows })
}
