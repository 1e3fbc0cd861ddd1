//! `partscale`: run pipeline stages on files, locally or through a service.
//!
//! Errors are printed to stderr as one JSON line `{code, message, ...}`.
//! Usage errors exit with 2, processing errors with 1.

use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use partscale::io::encode_atlas;
use partscale::mesh::io::load_mesh;
use partscale_api::ops::{self, InputKind};
use partscale_api::wire::DecomposeRequest;
use partscale_api::{ErrorBody, Operation, PipelineConfig, CONFIG_ENV, DATA_DIR_ENV};
use partscale_client::{AtlasResolution, Client, ClientError};
use serde_json::Value;

#[derive(Parser)]
#[command(name = "partscale", version, about = "Part-aware scaling of colored signed distance fields")]
struct Cli {
    /// Run through the service at this URL instead of locally.
    #[arg(long, global = true, value_name = "URL")]
    server: Option<String>,
    /// Pipeline config file (TOML); defaults to $PARTSCALE_CONFIG.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Convert a closed OBJ or STL mesh into a CSDF grid.
    Voxelize {
        mesh: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
        /// Voxels per axis; overrides the config.
        #[arg(long)]
        resolution: Option<usize>,
    },
    /// Segment a grid into near-convex parts and print the part report.
    Decompose {
        csdf: PathBuf,
        #[arg(long)]
        threshold: Option<f64>,
        #[arg(long)]
        beam: Option<usize>,
        #[arg(long)]
        max_depth: Option<usize>,
        /// Write the grid carrying the new part indices.
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Apply a zone edit (stretch unless the zone says otherwise).
    Scale {
        csdf: PathBuf,
        #[command(flatten)]
        zone: ZoneArg,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Fill a lengthened zone with rescaled copies of its content.
    Tile {
        csdf: PathBuf,
        #[command(flatten)]
        zone: ZoneArg,
        #[arg(long)]
        repeats: Option<u32>,
        #[arg(long)]
        blend_width: Option<usize>,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Sphere-trace the grid to a PNG.
    Render {
        csdf: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
        /// False-color part indices instead of surface color.
        #[arg(long)]
        parts: bool,
        #[arg(long, default_value_t = 512)]
        width: u32,
        #[arg(long, default_value_t = 512)]
        height: u32,
    },
    /// Write the 8-bit slice atlas as PNG plus a JSON sidecar.
    ExportAtlas {
        csdf: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
        /// Sidecar path; defaults to the output with a `.json` extension.
        #[arg(long)]
        sidecar: Option<PathBuf>,
    },
    /// Resample to one of the configured output sizes along the longest axis.
    Resample {
        csdf: PathBuf,
        #[arg(long)]
        size: usize,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Print dimensions, voxel size, parts and band statistics.
    Info { csdf: PathBuf },
    /// Run the HTTP service.
    Serve {
        #[arg(long, default_value_t = 8080)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        host: std::net::IpAddr,
        /// Object store directory; defaults to $PARTSCALE_DATA_DIR, then
        /// `./partscale-data`.
        #[arg(long)]
        data_dir: Option<PathBuf>,
    },
}

#[derive(Args)]
struct ZoneArg {
    /// Zone JSON, inline or `@file`.
    #[arg(long)]
    zone: String,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let text = e.to_string();
            let first = text.lines().next().unwrap_or("").trim_start_matches("error: ");
            eprintln!("{}", ErrorBody::new("usage", first).to_line());
            return ExitCode::from(2);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.to_line());
            ExitCode::FAILURE
        }
    }
}

type Result<T> = std::result::Result<T, ErrorBody>;

fn read(path: &Path) -> Result<Vec<u8>> {
    std::fs::read(path).map_err(|e| ErrorBody::new("io", format!("{}: {e}", path.display())))
}

fn write(path: &Path, bytes: &[u8]) -> Result<()> {
    std::fs::write(path, bytes).map_err(|e| ErrorBody::new("io", format!("{}: {e}", path.display())))
}

fn print_json(value: &impl serde::Serialize) {
    println!("{}", serde_json::to_string_pretty(value).expect("reports serialize"));
}

fn load_config(path: Option<&Path>) -> Result<PipelineConfig> {
    let env = std::env::var_os(CONFIG_ENV).map(PathBuf::from);
    match path.map(Path::to_path_buf).or(env) {
        Some(p) => PipelineConfig::load(&p).map_err(|e| ErrorBody::new("config", e.to_string())),
        None => Ok(PipelineConfig::default()),
    }
}

fn zone_text(arg: &str) -> Result<Vec<u8>> {
    match arg.strip_prefix('@') {
        Some(path) => read(Path::new(path)),
        None => Ok(arg.as_bytes().to_vec()),
    }
}

/// Zone JSON with the tile overrides merged in.
fn tile_body(zone: &[u8], repeats: Option<u32>, blend_width: Option<usize>) -> Result<Vec<u8>> {
    let mut value: Value =
        serde_json::from_slice(zone).map_err(|e| ErrorBody::new("malformed_json", e.to_string()))?;
    let Value::Object(map) = &mut value else {
        return Err(ErrorBody::new("invalid_zone", "zone must be a JSON object"));
    };
    map.insert("mode".into(), "tile".into());
    if let Some(r) = repeats {
        map.insert("repeats".into(), r.into());
    }
    if let Some(b) = blend_width {
        map.insert("blend_width".into(), b.into());
    }
    Ok(serde_json::to_vec(&value).expect("json values serialize"))
}

fn local_grid(path: &Path) -> Result<partscale::CsdfGrid> {
    Ok(ops::decode_grid(&read(path)?)?)
}

fn run(cli: Cli) -> Result<()> {
    let mut cfg = load_config(cli.config.as_deref())?;
    if let Command::Serve { port, host, data_dir } = cli.command {
        return serve(cfg, SocketAddr::new(host, port), data_dir);
    }
    if let Command::Voxelize {
        resolution: Some(r), ..
    } = cli.command
    {
        cfg.resolution = r;
        cfg.validate().map_err(|e| ErrorBody::new("config", e.to_string()))?;
    }
    match cli.server {
        Some(url) => remote(Client::new(url), cli.command, &cfg),
        None => local(cli.command, &cfg),
    }
}

fn local(command: Command, cfg: &PipelineConfig) -> Result<()> {
    match command {
        Command::Voxelize { mesh, output, .. } => {
            let grid = ops::voxelize_mesh(&load_mesh(&mesh)?, cfg)?;
            write(&output, &ops::encode_grid(&grid))
        }
        Command::Decompose {
            csdf,
            threshold,
            beam,
            max_depth,
            output,
        } => {
            let req = DecomposeRequest {
                threshold,
                beam,
                max_depth,
            };
            let opts = ops::parse_decompose(&serde_json::to_vec(&req).unwrap(), cfg)?;
            let applied = ops::apply(&local_grid(&csdf)?, &Operation::Decompose(opts), cfg)?;
            if let Some(out) = output {
                write(&out, &ops::encode_grid(&applied.grid))?;
            }
            print_json(&applied.report);
            Ok(())
        }
        Command::Scale { csdf, zone, output } => {
            let edit = ops::parse_edit(&zone_text(&zone.zone)?, cfg)?;
            let grid = ops::apply(&local_grid(&csdf)?, &Operation::Scale(edit), cfg)?.grid;
            write(&output, &ops::encode_grid(&grid))
        }
        Command::Tile {
            csdf,
            zone,
            repeats,
            blend_width,
            output,
        } => {
            let body = tile_body(&zone_text(&zone.zone)?, repeats, blend_width)?;
            let edit = ops::parse_edit(&body, cfg)?;
            let grid = ops::apply(&local_grid(&csdf)?, &Operation::Scale(edit), cfg)?.grid;
            write(&output, &ops::encode_grid(&grid))
        }
        Command::Render {
            csdf,
            output,
            parts,
            width,
            height,
        } => write(&output, &ops::render_png(&local_grid(&csdf)?, width, height, parts)?),
        Command::ExportAtlas { csdf, output, sidecar } => {
            let grid = local_grid(&csdf)?;
            let atlas = encode_atlas(&grid, ops::band_of(&grid, cfg)?);
            write(&output, &atlas.to_png()?)?;
            let sidecar = sidecar.unwrap_or_else(|| output.with_extension("json"));
            write(&sidecar, serde_json::to_string_pretty(&atlas.meta).unwrap().as_bytes())
        }
        Command::Resample { csdf, size, output } => {
            if !cfg.output_dims.contains(&size) {
                return Err(ErrorBody::new(
                    "invalid_dims",
                    format!("size {size} is not one of the configured output sizes {:?}", cfg.output_dims),
                )
                .with_field("size"));
            }
            let grid = local_grid(&csdf)?;
            let longest = grid.dims().into_iter().max().unwrap_or(1);
            let dims = grid.dims().map(|n| ((n * size) as f64 / longest as f64).round().max(2.0) as usize);
            let out = ops::apply(&grid, &Operation::Resample { dims }, cfg)?.grid;
            write(&output, &ops::encode_grid(&out))
        }
        Command::Info { csdf } => {
            print_json(&ops::grid_info(&local_grid(&csdf)?, cfg)?);
            Ok(())
        }
        Command::Serve { .. } => unreachable!("handled by run"),
    }
}

fn remote(client: Client, command: Command, cfg: &PipelineConfig) -> Result<()> {
    let runtime = tokio::runtime::Builder::new_current_thread()
        .enable_all()
        .build()
        .map_err(|e| ErrorBody::new("io", e.to_string()))?;
    runtime
        .block_on(remote_async(&client, command, cfg))
        .map_err(|e| e.body())
}

enum RemoteError {
    Client(ClientError),
    Local(ErrorBody),
}

impl RemoteError {
    fn body(self) -> ErrorBody {
        match self {
            RemoteError::Client(e) => e.body(),
            RemoteError::Local(b) => b,
        }
    }
}

impl From<ClientError> for RemoteError {
    fn from(e: ClientError) -> Self {
        RemoteError::Client(e)
    }
}

impl From<ErrorBody> for RemoteError {
    fn from(e: ErrorBody) -> Self {
        RemoteError::Local(e)
    }
}

async fn upload(client: &Client, path: &Path, format: &str) -> std::result::Result<String, RemoteError> {
    Ok(client.upload(read(path)?, Some(format)).await?.id)
}

async fn remote_async(client: &Client, command: Command, cfg: &PipelineConfig) -> std::result::Result<(), RemoteError> {
    match command {
        Command::Voxelize { mesh, output, .. } => {
            let ext = mesh.extension().and_then(|e| e.to_str()).unwrap_or("obj");
            let format = match InputKind::from_name(ext) {
                Some(InputKind::Stl) => "stl",
                _ => "obj",
            };
            let id = upload(client, &mesh, format).await?;
            write(&output, &client.csdf(&id, None).await?)?;
        }
        Command::Decompose {
            csdf,
            threshold,
            beam,
            max_depth,
            output,
        } => {
            let id = upload(client, &csdf, "csdf").await?;
            let req = DecomposeRequest {
                threshold,
                beam,
                max_depth,
            };
            let resp = client.decompose(&id, &req, Some(0)).await?;
            if let Some(out) = output {
                write(&out, &client.csdf(&id, None).await?)?;
            }
            print_json(&Some(resp.report));
        }
        Command::Scale { csdf, zone, output } => {
            let id = upload(client, &csdf, "csdf").await?;
            client
                .post_raw(&format!("/objects/{id}/commit"), zone_text(&zone.zone)?)
                .await?;
            write(&output, &client.csdf(&id, None).await?)?;
        }
        Command::Tile {
            csdf,
            zone,
            repeats,
            blend_width,
            output,
        } => {
            let body = tile_body(&zone_text(&zone.zone)?, repeats, blend_width)?;
            let id = upload(client, &csdf, "csdf").await?;
            client.post_raw(&format!("/objects/{id}/commit"), body).await?;
            write(&output, &client.csdf(&id, None).await?)?;
        }
        Command::Render {
            csdf,
            output,
            parts,
            width,
            height,
        } => {
            let id = upload(client, &csdf, "csdf").await?;
            write(&output, &client.render(&id, width, height, parts).await?)?;
        }
        Command::ExportAtlas { csdf, output, sidecar } => {
            let id = upload(client, &csdf, "csdf").await?;
            let bundle = client.atlas(&id, AtlasResolution::Full).await?;
            write(&output, &ops::atlas_png(&bundle)?)?;
            let sidecar = sidecar.unwrap_or_else(|| output.with_extension("json"));
            write(&sidecar, serde_json::to_string_pretty(&bundle.meta).unwrap().as_bytes())?;
        }
        Command::Info { csdf } => {
            let id = upload(client, &csdf, "csdf").await?;
            print_json(&client.info(&id).await?.grid);
        }
        cmd @ Command::Resample { .. } => local(cmd, cfg)?,
        Command::Serve { .. } => unreachable!("handled by run"),
    }
    Ok(())
}

fn serve(cfg: PipelineConfig, addr: SocketAddr, data_dir: Option<PathBuf>) -> Result<()> {
    let dir = data_dir
        .or_else(|| std::env::var_os(DATA_DIR_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("partscale-data"));
    tracing_subscriber::fmt().with_writer(std::io::stderr).init();
    let runtime = tokio::runtime::Runtime::new().map_err(|e| ErrorBody::new("io", e.to_string()))?;
    runtime
        .block_on(partscale_service::serve(dir, cfg, addr, |bound| {
            println!("listening on http://{bound}");
        }))
        .map_err(|e| e.body)
}
