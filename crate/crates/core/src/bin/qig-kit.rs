use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use qig_kit::curvature::{CurvatureConfig, SliceChart};
use qig_kit::hea::THETA_STAR;
use qig_kit::noise::{Channel, Qubit};
use qig_kit::pipeline::{
    ablation_suite, counterexample_suite, default_noise_channels, field_for, noise_sweep, point_report, slice_grid,
    slice_scan, write_gnuplot_grid, write_rows_csv, AblationConfig, FieldOptions, ScanConfig,
};
use qig_kit::vqe::{metrics, run, RunConfig};
use qig_kit::{QigError, Result};

#[derive(Parser)]
#[command(name = "qig-kit", version, about = "Petz-metric geometry and natural-gradient VQE on two-qubit circuits")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Subcommand)]
enum Cmd {
    /// Full JSON report at one parameter point.
    Point {
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        theta: Vec<f64>,
        #[arg(long, default_value = "sld")]
        metric: String,
        /// Curvature configuration (JSON).
        #[arg(long)]
        curvature: Option<PathBuf>,
    },
    /// Guarded slice scan; rows as CSV on stdout.
    Scan {
        #[arg(long)]
        config: Option<PathBuf>,
        /// Write the summary JSON here instead of stderr.
        #[arg(long)]
        summary: Option<PathBuf>,
        /// Write rejected points (JSON) here.
        #[arg(long)]
        rejected: Option<PathBuf>,
        /// Directory for gnuplot grids of K around theta*, one file per pair.
        #[arg(long)]
        plot_data: Option<PathBuf>,
    },
    /// Entropy-curvature counterexample table.
    Counterexamples {
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long, default_value_t = 8)]
        n_random: usize,
        #[arg(long, value_enum, default_value = "csv")]
        format: Format,
    },
    /// Scalar curvature under noise channels.
    Noise {
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        theta: Option<Vec<f64>>,
        /// Channels as `dep:P`, `damp:ETA` (qubit B) or `damp:ETA:a`.
        #[arg(long, value_delimiter = ',')]
        levels: Option<Vec<String>>,
        #[arg(long, default_value = "sld")]
        metric: String,
        #[arg(long, value_enum, default_value = "csv")]
        format: Format,
    },
    /// Bootstrap ablations A1 to A4.
    Ablations {
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        theta: Option<Vec<f64>>,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "csv")]
        format: Format,
    },
    /// Run one VQE experiment; trace CSV on stdout, summary JSON on stderr.
    Vqe {
        #[arg(long)]
        config: PathBuf,
    },
}

fn read_json<T: serde::de::DeserializeOwned>(p: &Path) -> Result<T> {
    let text = fs::read_to_string(p)?;
    Ok(serde_json::from_str(&text)?)
}

fn read_or_default<T: serde::de::DeserializeOwned + Default>(p: Option<&PathBuf>) -> Result<T> {
    p.map_or_else(|| Ok(T::default()), |p| read_json(p))
}

fn parse_channel(s: &str) -> Result<Channel> {
    let parts: Vec<&str> = s.split(':').collect();
    let level = |v: &str| v.parse::<f64>().map_err(|_| QigError::Config(format!("bad level in '{s}'")));
    let c = match parts.as_slice() {
        ["dep", p] => Channel::Depolarizing { p: level(p)? },
        ["damp", e] => Channel::AmplitudeDamping { eta: level(e)?, qubit: Qubit::B },
        ["damp", e, q] => {
            let qubit = match q.to_ascii_lowercase().as_str() {
                "a" => Qubit::A,
                "b" => Qubit::B,
                _ => return Err(QigError::Config(format!("bad qubit in '{s}'"))),
            };
            Channel::AmplitudeDamping { eta: level(e)?, qubit }
        }
        _ => return Err(QigError::Config(format!("cannot parse channel '{s}'"))),
    };
    c.validate()?;
    Ok(c)
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(String::new, |x| format!("{x:.10}"))
}

fn opt_plain(v: Option<f64>) -> String {
    v.map_or_else(String::new, |x| x.to_string())
}

fn write_table(header: &[&str], rows: impl Iterator<Item = Vec<String>>) -> Result<()> {
    let mut w = csv::Writer::from_writer(stdout());
    w.write_record(header)?;
    for r in rows {
        w.write_record(&r)?;
    }
    w.flush()?;
    Ok(())
}

fn stdout() -> BufWriter<io::StdoutLock<'static>> {
    BufWriter::new(io::stdout().lock())
}

fn json_out<T: serde::Serialize>(v: &T) -> Result<()> {
    let mut out = stdout();
    serde_json::to_writer_pretty(&mut out, v)?;
    writeln!(out)?;
    Ok(())
}

fn theta_or_star(t: Option<Vec<f64>>) -> Vec<f64> {
    t.unwrap_or_else(|| THETA_STAR.to_vec())
}

fn exec(cmd: Cmd) -> Result<()> {
    match cmd {
        Cmd::Point { theta, metric, curvature } => {
            let cfg: CurvatureConfig = read_or_default(curvature.as_ref())?;
            let field = field_for(&metric, &FieldOptions::default())?;
            json_out(&point_report(&theta, &field, &cfg)?)
        }
        Cmd::Scan {
            config,
            summary,
            rejected,
            plot_data,
        } => {
            let cfg: ScanConfig = read_or_default(config.as_ref())?;
            let (rows, rej, sum) = slice_scan(&cfg, &FieldOptions::default())?;
            write_rows_csv(&rows, stdout())?;
            let text = serde_json::to_string_pretty(&sum)?;
            match summary {
                Some(p) => fs::write(p, text)?,
                None => eprintln!("{text}"),
            }
            if let Some(p) = rejected {
                fs::write(p, serde_json::to_string_pretty(&rej)?)?;
            }
            if let Some(dir) = plot_data {
                fs::create_dir_all(&dir)?;
                let field = field_for(&cfg.metric, &FieldOptions::default())?;
                for &(i, j) in &cfg.pairs {
                    let chart = SliceChart::diagonal(THETA_STAR.to_vec(), i, j)?;
                    let grid = slice_grid(&field, &chart, cfg.grid, cfg.span, &cfg.curvature());
                    let f = File::create(dir.join(format!("k_surface_t{i}-t{j}.dat")))?;
                    write_gnuplot_grid(&grid, BufWriter::new(f))?;
                }
            }
            Ok(())
        }
        Cmd::Counterexamples { seed, n_random, format } => {
            let t = counterexample_suite(seed, n_random, &CurvatureConfig::default())?;
            match format {
                Format::Json => json_out(&t),
                Format::Csv => {
                    let rows = t.rows.iter().map(|r| {
                        vec![
                            r.case.clone(),
                            r.theta[0].to_string(),
                            r.theta[1].to_string(),
                            r.theta[2].to_string(),
                            r.theta[3].to_string(),
                            opt(r.r),
                            opt_plain(r.h_star),
                            format!("{:.10}", r.s_bits),
                            format!("{:.10}", r.s_closed),
                            format!("{:.10}", r.purity_b),
                            r.error.clone().unwrap_or_default(),
                        ]
                    });
                    write_table(&["case", "t0", "t1", "t2", "t3", "R", "h_star", "S_bits", "S_closed", "purity_B", "error"], rows)?;
                    eprintln!(
                        "S(theta_1) > S(theta_2): {}; R(theta_1) > R(theta_2): {}; non-monotone: {}",
                        t.entropy_ordered, t.curvature_ordered, t.non_monotone
                    );
                    Ok(())
                }
            }
        }
        Cmd::Noise {
            theta,
            levels,
            metric,
            format,
        } => {
            let channels = match levels {
                Some(l) => l.iter().map(|s| parse_channel(s)).collect::<Result<Vec<_>>>()?,
                None => default_noise_channels(),
            };
            let rows = noise_sweep(&theta_or_star(theta), &metric, &channels, &CurvatureConfig::default())?;
            match format {
                Format::Json => json_out(&rows),
                Format::Csv => {
                    let rows = rows.iter().map(|r| {
                        vec![
                            r.label.clone(),
                            r.level.to_string(),
                            opt(r.r),
                            opt_plain(r.h_star),
                            r.rank.map_or_else(String::new, |k| k.to_string()),
                            r.gap.map_or_else(String::new, |g| format!("{g:e}")),
                            r.error.clone().unwrap_or_default(),
                        ]
                    });
                    write_table(&["label", "level", "R", "h_star", "rank", "gap", "error"], rows)
                }
            }
        }
        Cmd::Ablations { theta, config, format } => {
            let acfg: AblationConfig = read_or_default(config.as_ref())?;
            let rows = ablation_suite(&theta_or_star(theta), &CurvatureConfig::default(), &acfg)?;
            match format {
                Format::Json => json_out(&rows),
                Format::Csv => {
                    let rows = rows.iter().map(|r| {
                        vec![
                            r.id.clone(),
                            r.label.clone(),
                            opt(r.ci.map(|c| c.mean)),
                            opt(r.ci.map(|c| c.lo)),
                            opt(r.ci.map(|c| c.hi)),
                            r.n_valid.to_string(),
                            r.n_failed.to_string(),
                            r.unstable.to_string(),
                            r.first_error.clone().unwrap_or_default(),
                        ]
                    });
                    write_table(&["id", "label", "mean", "lo", "hi", "n_valid", "n_failed", "unstable", "error"], rows)
                }
            }
        }
        Cmd::Vqe { config } => {
            let rc: RunConfig = read_json(&config)?;
            let trace = run(&rc)?;
            trace.write_csv(stdout())?;
            let m = metrics(&trace.energies(), trace.e_star)?;
            let summary = serde_json::json!({
                "e_star": trace.e_star,
                "final_energy": trace.final_energy,
                "final_error": trace.final_error(),
                "auc": m.auc,
                "hit95": m.hit95,
                "warnings": trace.warnings,
            });
            eprintln!("{}", serde_json::to_string_pretty(&summary)?);
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    match exec(Cli::parse().cmd) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
