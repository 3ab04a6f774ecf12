use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use tracing_subscriber::EnvFilter;

use resilab::report::{table, Row};
use resilab::{router, Store};
use resilab_core::runner::{run_experiment, write_log, ExperimentConfig};
use resilab_core::simulator::{generate_cube_dataset, palette, write_dataset_csv, GeneratorParams};

#[derive(Parser)]
#[command(name = "resilab", version, about = "Resilience/greenness experiment lab")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment and write its config, log and result.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value = "resilab-out")]
        out: PathBuf,
        /// Overrides the master seed in the config.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Write a synthetic cube dataset as CSV.
    GenerateDataset {
        #[arg(long, default_value_t = 300)]
        n: usize,
        #[arg(long, default_value_t = 3)]
        classes: usize,
        #[arg(long, default_value_t = 0.05)]
        noise: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Start the HTTP control service.
    Serve {
        #[arg(long, default_value_t = 8080)]
        port: u16,
        #[arg(long, default_value = "resilab-data")]
        data_dir: PathBuf,
    },
    /// Run several configs and print recovery and CO2 side by side.
    Compare {
        #[arg(long, value_delimiter = ',', required = true)]
        configs: Vec<PathBuf>,
    },
}

type CliResult = Result<(), Box<dyn std::error::Error>>;

fn load_config(path: &Path) -> Result<ExperimentConfig, Box<dyn std::error::Error>> {
    let text = fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    let config = ExperimentConfig::from_json(&text).map_err(|e| format!("{}: {e}", path.display()))?;
    config.check().map_err(|e| format!("{}: {e}", path.display()))?;
    Ok(config)
}

fn run(config: &Path, out: &Path, seed: Option<u64>) -> CliResult {
    let mut config = load_config(config)?;
    if let Some(s) = seed {
        config.seed = s;
    }
    let result = run_experiment(config)?;
    fs::create_dir_all(out).map_err(|e| format!("{}: {e}", out.display()))?;
    fs::write(out.join("config.json"), result.config.to_json_pretty())?;
    write_log(&result.records, &out.join("log.csv"))?;
    fs::write(out.join("result.json"), serde_json::to_string_pretty(&result)?)?;
    print!("{}", table(&[Row::from_result("run", &result)]));
    println!("wrote {}", out.display());
    Ok(())
}

fn generate(n: usize, classes: usize, noise: f64, seed: u64, out: &Path) -> CliResult {
    let params = GeneratorParams {
        n,
        classes: palette(classes),
        noise_sigma: noise,
        ..Default::default()
    };
    let data = generate_cube_dataset(&params, seed)?;
    let file = fs::File::create(out).map_err(|e| format!("{}: {e}", out.display()))?;
    write_dataset_csv(&data, std::io::BufWriter::new(file))?;
    println!("wrote {} records to {}", data.len(), out.display());
    Ok(())
}

fn compare(paths: &[PathBuf]) -> CliResult {
    let mut rows = Vec::new();
    for p in paths {
        let config = load_config(p)?;
        let name = config
            .name
            .clone()
            .unwrap_or_else(|| p.file_stem().map_or("run".into(), |s| s.to_string_lossy().into_owned()));
        rows.push(Row::from_result(&name, &run_experiment(config)?));
    }
    print!("{}", table(&rows));
    Ok(())
}

async fn serve(port: u16, data_dir: PathBuf) -> CliResult {
    let store = Store::open(&data_dir)?;
    let listener = tokio::net::TcpListener::bind(("0.0.0.0", port)).await?;
    tracing::info!(addr = %listener.local_addr()?, data_dir = %data_dir.display(), "listening");
    axum::serve(listener, router(store))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await?;
    Ok(())
}

fn main() -> ExitCode {
    tracing_subscriber::fmt()
        .with_env_filter(EnvFilter::try_from_default_env().unwrap_or_else(|_| EnvFilter::new("info")))
        .with_writer(std::io::stderr)
        .init();
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Run { config, out, seed } => run(&config, &out, seed),
        Command::GenerateDataset {
            n,
            classes,
            noise,
            seed,
            out,
        } => generate(n, classes, noise, seed, &out),
        Command::Serve { port, data_dir } => tokio::runtime::Runtime::new()
            .map_err(Into::into)
            .and_then(|rt| rt.block_on(serve(port, data_dir))),
        Command::Compare { configs } => compare(&configs),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
