use std::fs::{self, OpenOptions};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use tokio::net::TcpListener;

use skelforge_service::batch::{csv_row, expand_inputs, generate_corpus, process, read_input, render_svg, BatchError, CSV_HEADER};
use skelforge_service::protocol::ConfigPatch;
use skelforge_service::server::{serve_http, serve_sessions};
use skelforge_service::store::{SceneStore, DATA_DIR_ENV};

#[derive(Parser)]
#[command(name = "skelforge", version, about = "Sketch-to-skeleton engine: session server and batch tools")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the session protocol server and the scene document endpoint.
    Serve {
        #[arg(long, default_value = "127.0.0.1")]
        host: String,
        /// Port of the newline-delimited JSON session protocol.
        #[arg(long, default_value_t = 7878)]
        port: u16,
        /// Port of the HTTP `/scenes/{id}` endpoint.
        #[arg(long, default_value_t = 7879)]
        http_port: u16,
        #[arg(long, env = DATA_DIR_ENV, default_value = "skelforge-data")]
        data_dir: PathBuf,
    },
    /// Skeletonize polygon files and scene documents.
    Skeletonize(SkeletonizeArgs),
    /// Write the seeded fixture corpus.
    Fixtures {
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value = "fixtures")]
        out: PathBuf,
    },
}

#[derive(Args)]
struct SkeletonizeArgs {
    /// Input files or directories of `.json` files.
    #[arg(long = "in", required = true, num_args = 1..)]
    inputs: Vec<PathBuf>,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Also write an SVG per input.
    #[arg(long)]
    svg: bool,
    /// Append one timing row per input to this CSV file.
    #[arg(long)]
    csv: Option<PathBuf>,
    #[arg(long)]
    step: Option<f64>,
    #[arg(long)]
    eps_poly: Option<f64>,
    #[arg(long)]
    alpha_s: Option<f64>,
    #[arg(long)]
    eps_s: Option<f64>,
    #[arg(long)]
    eps_m: Option<f64>,
    #[arg(long)]
    eps_t: Option<f64>,
    #[arg(long)]
    eps_c: Option<f64>,
    /// Repeat each input N times and report median timings.
    #[arg(long, value_name = "N", default_value_t = 1)]
    bench: usize,
}

impl SkeletonizeArgs {
    fn patch(&self) -> ConfigPatch {
        ConfigPatch {
            step: self.step,
            eps_poly: self.eps_poly,
            alpha_s: self.alpha_s,
            eps_s: self.eps_s,
            eps_m: self.eps_m,
            eps_t: self.eps_t,
            eps_c: self.eps_c,
            ..ConfigPatch::default()
        }
    }
}

fn stem(path: &Path) -> String {
    path.file_stem().map_or_else(|| "input".into(), |s| s.to_string_lossy().into_owned())
}

fn skeletonize(args: &SkeletonizeArgs) -> Result<bool, Box<dyn std::error::Error>> {
    let files = expand_inputs(&args.inputs)?;
    fs::create_dir_all(&args.out)?;
    let mut csv = match &args.csv {
        Some(path) => {
            let fresh = fs::metadata(path).map_or(true, |m| m.len() == 0);
            let mut w = csv::Writer::from_writer(OpenOptions::new().create(true).append(true).open(path)?);
            if fresh {
                w.write_record(CSV_HEADER)?;
            }
            Some(w)
        }
        None => None,
    };
    let patch = args.patch();
    let mut ok = true;
    for file in &files {
        let name = stem(file);
        let outcome = read_input(file).and_then(|input| process(&input, &patch, args.bench).map_err(|e| BatchError::Scene(file.clone(), e)));
        let outcome = match outcome {
            Ok(o) => o,
            Err(e) => {
                eprintln!("error: {e}");
                ok = false;
                continue;
            }
        };
        let mut json = serde_json::to_vec_pretty(&outcome.skeleton)?;
        json.push(b'\n');
        fs::write(args.out.join(format!("{name}.skeleton.json")), json)?;
        if args.svg {
            fs::write(args.out.join(format!("{name}.svg")), render_svg(&outcome))?;
        }
        if let Some(w) = csv.as_mut() {
            w.write_record(csv_row(&name, &outcome))?;
        }
        log::info!("{name}: {} joints in {:.3} ms", outcome.skeleton.joints.len(), outcome.total / 1000.0);
    }
    if let Some(mut w) = csv {
        w.flush()?;
    }
    Ok(ok)
}

async fn serve(host: &str, port: u16, http_port: u16, data_dir: PathBuf) -> std::io::Result<()> {
    let store = SceneStore::new(data_dir);
    let sessions = TcpListener::bind((host, port)).await?;
    let http = TcpListener::bind((host, http_port)).await?;
    log::info!("sessions on {}, scenes over HTTP on {}, data in {}", sessions.local_addr()?, http.local_addr()?, store.dir().display());
    tokio::try_join!(serve_sessions(sessions, store.clone()), serve_http(http, store))?;
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let result: Result<bool, Box<dyn std::error::Error>> = match cli.command {
        Command::Serve { host, port, http_port, data_dir } => tokio::runtime::Runtime::new()
            .map_err(Into::into)
            .and_then(|rt| rt.block_on(serve(&host, port, http_port, data_dir)).map(|()| true).map_err(Into::into)),
        Command::Skeletonize(args) => skeletonize(&args),
        Command::Fixtures { seed, out } => generate_corpus(seed, &out).map(|n| {
            log::info!("wrote {n} fixture files to {}", out.display());
            true
        }).map_err(Into::into),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
