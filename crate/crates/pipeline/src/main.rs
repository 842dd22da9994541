use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use csgi_core::ccm::CcmResult;
use csgi_core::CsgiTimecourse;
use csgi_pipeline::config::{ExperimentConfig, SystemConfig};
use csgi_pipeline::error::{PipelineError, Result};
use csgi_pipeline::ingest::{ingest_csv, IngestOptions, SentinelPolicy};
use csgi_pipeline::svg::{line_plot, PlotSeries};
use csgi_pipeline::sweep::{read_manifest, read_summary_csv, run_sweep, simulate_system, write_atomic};

/// Time-varying causal coupling between pairs of time series.
///
/// Worker-pool size for sweeps is read from CSGI_WORKERS (default: one
/// worker per core). Exit codes: 0 success, 2 config error, 3 data error,
/// 4 numerical divergence.
#[derive(Parser)]
#[command(name = "csgi", version)]
struct Cli {
    /// Log progress to stderr (repeat for more detail).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum System {
    RosslerLorenz,
    TwoSpecies,
    CoupledAr,
    Henon,
    HenonNonstationary,
}

#[derive(Clone, Copy, ValueEnum)]
enum Policy {
    Drop,
    Clip,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate a benchmark system and write all components to CSV.
    Simulate {
        #[arg(long, value_enum)]
        system: System,
        /// Coupling strength (the ON value for henon-nonstationary).
        #[arg(long)]
        coupling: f64,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 1000)]
        burn_in: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Sampling interval (rossler-lorenz only).
        #[arg(long, default_value_t = 0.1)]
        dt: f64,
        /// Toggle period (henon-nonstationary only).
        #[arg(long, default_value_t = 10_000)]
        segment_len: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Analyze one pair of columns from a CSV file.
    Analyze {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        x: String,
        #[arg(long)]
        y: String,
        /// taci, slgc, ccm or te.
        #[arg(long)]
        method: String,
        /// Method parameter as key=value (TOML value syntax); repeatable.
        /// TACI hyperparameters go under params, e.g. params.epochs=20.
        #[arg(long = "param")]
        params: Vec<String>,
        #[arg(long)]
        datetime_column: Option<String>,
        #[arg(long, default_value_t = 1000)]
        window_len: usize,
        #[arg(long)]
        stride: Option<usize>,
        #[arg(long, default_value_t = 100)]
        n_bootstrap: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Use the small TACI preset.
        #[arg(long)]
        desk: bool,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the coupling sweep described by an experiment config.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        /// Overrides output_dir from the config.
        #[arg(long)]
        output_dir: Option<PathBuf>,
    },
    /// Clean a recorded CSV (timestamps, sentinels) and write numeric columns.
    Ingest {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        datetime_column: Option<String>,
        /// chrono format, e.g. "%d.%m.%Y %H:%M:%S".
        #[arg(long)]
        datetime_format: Option<String>,
        /// Value marking a bad reading; repeatable.
        #[arg(long = "sentinel", allow_hyphen_values = true)]
        sentinels: Vec<f64>,
        #[arg(long, value_enum, default_value = "drop")]
        policy: Policy,
        /// Allowed |step - median step| in seconds (default: one median step).
        #[arg(long)]
        gap_tolerance: Option<f64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Render a summary, timecourse or cross-map CSV as an SVG line plot.
    Plot {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value = "")]
        title: String,
    },
    /// Print a Markdown table of a sweep's results.
    Report {
        /// Sweep output directory.
        #[arg(long)]
        dir: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn run(cmd: Command) -> Result<()> {
    match cmd {
        Command::Simulate { system, coupling, n, burn_in, seed, dt, segment_len, out } => {
            let system = match system {
                System::RosslerLorenz => SystemConfig::RosslerLorenz { n, burn_in, dt, pair: None },
                System::TwoSpecies => SystemConfig::TwoSpecies { n, burn_in, pair: None },
                System::CoupledAr => SystemConfig::CoupledAr { n, burn_in, noise_variance: 1.0, pair: None },
                System::Henon => SystemConfig::Henon { n, burn_in, pair: None },
                System::HenonNonstationary => SystemConfig::HenonNonstationary {
                    n,
                    burn_in,
                    segment_len,
                    off_value: 0.0,
                    cyx: 0.0,
                    pair: None,
                },
            };
            let sim = simulate_system(&system, coupling, seed)?;
            let mut buf = Vec::new();
            sim.write_csv(&mut buf)?;
            write_atomic(&out, &buf)?;
            eprintln!("wrote {} samples of {} components to {}", sim.len(), sim.series.len(), out.display());
            Ok(())
        }
        Command::Analyze {
            input,
            x,
            y,
            method,
            params,
            datetime_column,
            window_len,
            stride,
            n_bootstrap,
            seed,
            desk,
            out,
        } => {
            let text = analyze_config(&input, &x, &y, &method, &params, datetime_column.as_deref(), window_len, stride, n_bootstrap, seed, desk, &out)?;
            let cfg = ExperimentConfig::from_toml_str(&text, "analyze arguments")?;
            let outcome = run_sweep(&cfg, &text)?;
            let p = &outcome.points[0];
            println!("x -> y: {} (std {})", p.xy.value, p.xy.std);
            println!("y -> x: {} (std {})", p.yx.value, p.yx.std);
            Ok(())
        }
        Command::Sweep { config, output_dir } => {
            let (mut cfg, text) = ExperimentConfig::load(&config)?;
            if let Some(d) = output_dir {
                cfg.output_dir = d;
            }
            let outcome = run_sweep(&cfg, &text)?;
            eprintln!("{} points written to {}", outcome.points.len(), outcome.output_dir.display());
            Ok(())
        }
        Command::Ingest { input, datetime_column, datetime_format, sentinels, policy, gap_tolerance, out } => {
            let opts = IngestOptions {
                datetime_column,
                datetime_format,
                sentinel_values: sentinels,
                sentinel_policy: match policy {
                    Policy::Drop => SentinelPolicy::Drop,
                    Policy::Clip => SentinelPolicy::Clip,
                },
                gap_tolerance,
            };
            let data = ingest_csv(&input, &opts)?;
            let mut buf = Vec::new();
            data.write_csv(&mut buf)?;
            write_atomic(&out, &buf)?;
            eprintln!(
                "{} series, {} samples, dt = {} s, {} rows dropped, {} values clipped",
                data.series.len(),
                data.series[0].len(),
                data.dt,
                data.rows_dropped,
                data.values_clipped
            );
            Ok(())
        }
        Command::Plot { input, out, title } => {
            let svg = plot_file(&input, &title)?;
            write_atomic(&out, svg.as_bytes())
        }
        Command::Report { dir } => {
            print!("{}", report(&dir)?);
            Ok(())
        }
    }
}

fn toml_string(s: &str) -> String {
    toml::Value::String(s.to_string()).to_string()
}

/// Build the TOML text of a one-point experiment on recorded data, so that
/// `analyze` goes through the same validation as `sweep`.
#[allow(clippy::too_many_arguments)]
fn analyze_config(
    input: &Path,
    x: &str,
    y: &str,
    method: &str,
    params: &[String],
    datetime_column: Option<&str>,
    window_len: usize,
    stride: Option<usize>,
    n_bootstrap: usize,
    seed: u64,
    desk: bool,
    out: &Path,
) -> Result<String> {
    let mut method_table = toml::Table::new();
    method_table.insert("kind".into(), toml::Value::String(method.into()));
    for p in params {
        let (key, value) = p
            .split_once('=')
            .ok_or_else(|| PipelineError::config(format!("--param {p}"), "expected key=value"))?;
        let value: toml::Value = toml::from_str::<toml::Table>(&format!("v = {value}"))
            .map(|mut t| t.remove("v").expect("key present"))
            .unwrap_or_else(|_| toml::Value::String(value.to_string()));
        let mut path: Vec<&str> = key.trim().split('.').collect();
        let last = path.pop().expect("split yields one item");
        let mut table = &mut method_table;
        for part in path {
            table = table
                .entry(part.to_string())
                .or_insert_with(|| toml::Value::Table(toml::Table::new()))
                .as_table_mut()
                .ok_or_else(|| PipelineError::config(format!("--param {p}"), format!("{part} is not a table")))?;
        }
        table.insert(last.to_string(), value);
    }
    let mut text = format!(
        "schema_version = 1\nseed = {seed}\ndesk_scale = {desk}\noutput_dir = {}\n\n[system]\nkind = \"csv\"\npath = {}\nx = {}\ny = {}\n",
        toml_string(&out.display().to_string()),
        toml_string(&input.display().to_string()),
        toml_string(x),
        toml_string(y),
    );
    if let Some(dc) = datetime_column {
        text += &format!("datetime_column = {}\n", toml_string(dc));
    }
    text += &format!("\n[windowing]\nwindow_len = {window_len}\nn_bootstrap = {n_bootstrap}\n");
    if let Some(s) = stride {
        text += &format!("stride = {s}\n");
    }
    let mut root = toml::Table::new();
    root.insert("method".into(), toml::Value::Table(method_table));
    text += "\n";
    text += &toml::to_string(&root).map_err(|e| PipelineError::config("--param", e.to_string()))?;
    Ok(text)
}

fn plot_file(input: &Path, title: &str) -> Result<String> {
    let text = std::fs::read_to_string(input).map_err(|e| PipelineError::io(input, e))?;
    let header = text.lines().next().unwrap_or("");
    let title = if title.is_empty() { input.display().to_string() } else { title.to_string() };
    if header.starts_with("window_start") {
        let tc = CsgiTimecourse::read_csv(text.as_bytes(), 0)?;
        let x: Vec<f64> = tc.window_starts.iter().map(|&s| s as f64).collect();
        let series = vec![
            PlotSeries { label: "x → y".into(), x: x.clone(), y: tc.chi_xy, std: tc.std_xy },
            PlotSeries { label: "y → x".into(), x, y: tc.chi_yx, std: tc.std_yx },
        ];
        Ok(line_plot(&series, &title, "window start", "CSGI"))
    } else if header.starts_with("lib_size") {
        let mut rdr = csv::Reader::from_reader(text.as_bytes());
        let mut cols: [Vec<f64>; 5] = Default::default();
        for rec in rdr.records() {
            let rec = rec?;
            for (k, col) in cols.iter_mut().enumerate() {
                let cell = rec.get(k).unwrap_or("");
                col.push(cell.parse().map_err(|_| PipelineError::Data(format!("bad number {cell:?}")))?);
            }
        }
        let [lib, sxy, dxy, syx, dyx] = cols;
        let r = CcmResult {
            lib_sizes: lib.iter().map(|&l| l as usize).collect(),
            skill_xy: sxy,
            std_xy: dxy,
            skill_yx: syx,
            std_yx: dyx,
        };
        let series = vec![
            PlotSeries { label: "x → y".into(), x: lib.clone(), y: r.skill_xy, std: r.std_xy },
            PlotSeries { label: "y → x".into(), x: lib, y: r.skill_yx, std: r.std_yx },
        ];
        Ok(line_plot(&series, &title, "library size", "cross-map skill"))
    } else {
        let rows = read_summary_csv(text.as_bytes())?;
        let s = PlotSeries {
            label: "value".into(),
            x: rows.iter().map(|r| r.c.unwrap_or(r.index as f64)).collect(),
            y: rows.iter().map(|r| r.value).collect(),
            std: rows.iter().map(|r| r.std).collect(),
        };
        Ok(line_plot(&[s], &title, "coupling C", "value"))
    }
}

fn report(dir: &Path) -> Result<String> {
    let manifest = read_manifest(dir)?;
    let cfg = &manifest.config;
    let mut out = format!(
        "# {} on {}\n\nseed {}, config sha256 {}, tool {}\n\n| C | x→y | std | y→x | std |\n|---|---|---|---|---|\n",
        cfg.method.kind(),
        cfg.system.kind(),
        cfg.seed,
        &manifest.config_sha256[..12],
        manifest.tool_version
    );
    let xy = read_summary_csv(open(&dir.join("summary_xy.csv"))?)?;
    let yx = read_summary_csv(open(&dir.join("summary_yx.csv"))?)?;
    for (a, b) in xy.iter().zip(&yx) {
        let c = a.c.map(|c| format!("{c}")).unwrap_or_else(|| "-".into());
        out += &format!("| {c} | {:.4} | {:.4} | {:.4} | {:.4} |\n", a.value, a.std, b.value, b.std);
    }
    Ok(out)
}

fn open(path: &Path) -> Result<std::fs::File> {
    std::fs::File::open(path).map_err(|e| PipelineError::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn analyze_config_round_trips_through_schema() {
        let text = analyze_config(
            Path::new("in put.csv"),
            "a",
            "b\"",
            "ccm",
            &["embedding_dim=3".into(), "lib_sizes=[10, 20]".into()],
            Some("time"),
            50,
            None,
            10,
            4,
            false,
            Path::new("out"),
        )
        .unwrap();
        let cfg = ExperimentConfig::from_toml_str(&text, "t").unwrap();
        assert_eq!(cfg.system.pair(), ("a".to_string(), "b\"".to_string()));
        assert_eq!(cfg.method.kind(), "ccm");
        let text = analyze_config(
            Path::new("i.csv"),
            "a",
            "b",
            "taci",
            &["params.epochs=2".into(), "params.surrogate=fourier_phase".into()],
            None,
            50,
            Some(10),
            10,
            4,
            true,
            Path::new("out"),
        )
        .unwrap();
        let cfg = ExperimentConfig::from_toml_str(&text, "t").unwrap();
        assert_eq!(cfg.taci_config().unwrap().epochs, 2);
        assert_eq!(cfg.windowing.stride(), 10);
    }

    #[test]
    fn bad_param_is_a_config_error() {
        let r = analyze_config(Path::new("i"), "a", "b", "te", &["oops".into()], None, 5, None, 5, 0, false, Path::new("o"));
        assert_eq!(r.unwrap_err().exit_code(), 2);
    }
}
