use std::net::SocketAddr;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use forge::{router, AppState};
use forge_core::fabrication::MotorSpec;
use forge_core::fixtures::write_fixture;
use forge_core::pipeline::{run_pipeline, DesignFile, PipelineOptions};

#[derive(Debug, Parser)]
#[command(name = "forge", version, about = "Turn part of a 3D object into a printable robotic arm")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run every step and write the fabrication bundle.
    Generate {
        #[arg(long)]
        design: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Samples per joint range; overrides the design file.
        #[arg(long)]
        resolution: Option<usize>,
        /// Fail instead of moving unreachable motion points onto the workspace.
        #[arg(long)]
        no_snap: bool,
    },
    /// Check a design file without running it.
    Validate {
        #[arg(long)]
        design: PathBuf,
    },
    /// Write a synthetic demo object and its design file.
    Demo {
        /// `spatula` or `piggybank`.
        #[arg(long)]
        name: String,
        #[arg(long)]
        out: PathBuf,
    },
    /// Serve the HTTP session API on localhost.
    Serve {
        #[arg(long, default_value_t = 8080)]
        port: u16,
    },
}

fn motor() -> Result<MotorSpec, String> {
    MotorSpec::from_env().map_err(|e| format!("motor spec: {e}"))
}

fn generate(design: PathBuf, out: PathBuf, resolution: Option<usize>, no_snap: bool) -> Result<(), String> {
    let design = DesignFile::load(&design).map_err(|e| e.to_string())?;
    let problems = design.problems();
    if !problems.is_empty() {
        return Err(format!("invalid design:\n  {}", problems.join("\n  ")));
    }
    let options = PipelineOptions {
        resolution,
        snap: !no_snap,
        motor: motor()?,
    };
    let report = run_pipeline(&design, &out, &options).map_err(|e| e.to_string())?;
    println!("{}", serde_json::to_string_pretty(&report).expect("report serializes"));
    Ok(())
}

fn validate(design: PathBuf) -> Result<(), String> {
    let design = DesignFile::load(&design).map_err(|e| e.to_string())?;
    let problems = design.problems();
    if problems.is_empty() {
        println!("ok");
        Ok(())
    } else {
        Err(format!("invalid design:\n  {}", problems.join("\n  ")))
    }
}

fn serve(port: u16) -> Result<(), String> {
    let state = AppState::new(motor()?);
    let rt = tokio::runtime::Runtime::new().map_err(|e| e.to_string())?;
    rt.block_on(async move {
        let addr = SocketAddr::from(([127, 0, 0, 1], port));
        let listener = tokio::net::TcpListener::bind(addr).await.map_err(|e| e.to_string())?;
        log::info!("listening on http://{addr}");
        axum::serve(listener, router(state))
            .with_graceful_shutdown(async {
                let _ = tokio::signal::ctrl_c().await;
            })
            .await
            .map_err(|e| e.to_string())
    })
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Generate {
            design,
            out,
            resolution,
            no_snap,
        } => generate(design, out, resolution, no_snap),
        Command::Validate { design } => validate(design),
        Command::Demo { name, out } => write_fixture(&name, &out)
            .map(|p| println!("{}", p.display()))
            .map_err(|e| e.to_string()),
        Command::Serve { port } => serve(port),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
