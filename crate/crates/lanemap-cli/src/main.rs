//! Command-line frontend: run the vectorization pipeline over a mask tile,
//! score generated maps against references, generate synthetic scenes and
//! render inspection overlays.
//!
//! Exit codes: 0 success, 1 usage error, 2 input error, 3 internal
//! invariant violation.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use lanemap::config::PipelineConfig;
use lanemap::eval::evaluate_maps;
use lanemap::georef::GeoReference;
use lanemap::lanelet2::{export_osm, parse_osm};
use lanemap::pipeline::run_pipeline;
use lanemap::raster::{load_mask_png, save_mask_png, save_rgb_png};
use lanemap::render::render_overlay;
use lanemap::symbols::TemplateClassifier;
use lanemap::synth::{perturb_boundaries, render_scene, SceneSpec};

#[derive(Parser)]
#[command(
    name = "lanemap",
    about = "HD-map vectorization of semantically segmented aerial tiles",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build a Lanelet2/OSM map from a class-id mask tile.
    Map(MapArgs),
    /// Score a generated map against a reference map.
    Eval(EvalArgs),
    /// Render a synthetic scene: mask, georeference and ground-truth map.
    Synth(SynthArgs),
    /// Render map polylines over the class-colored mask.
    Overlay(OverlayArgs),
    /// Print the effective pipeline configuration.
    PrintConfig(PrintConfigArgs),
}

#[derive(Args)]
struct MapArgs {
    /// Class-id mask PNG.
    #[arg(long)]
    mask: PathBuf,
    /// Georeference sidecar (key = value).
    #[arg(long)]
    georef: PathBuf,
    /// Pipeline config file; defaults apply when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output .osm path; a run summary lands next to it as <out>.summary.json.
    #[arg(long)]
    out: PathBuf,
    /// Optional template directory overriding the built-in arrow archetypes.
    #[arg(long)]
    templates: Option<PathBuf>,
}

#[derive(Args)]
struct EvalArgs {
    /// Generated .osm map.
    #[arg(long)]
    generated: PathBuf,
    /// Reference .osm map.
    #[arg(long)]
    reference: PathBuf,
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct SynthArgs {
    /// Scene spec file (key = value); defaults describe a two-lane straight
    /// road when omitted.
    #[arg(long)]
    scene: Option<PathBuf>,
    /// Output directory for mask.png, georef.txt, truth.osm and scene.txt.
    #[arg(long)]
    out: PathBuf,
    /// Overrides the spec's seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Boundary-noise flip probability applied to the emitted mask (the
    /// ground truth stays clean).
    #[arg(long)]
    noise: Option<f64>,
}

#[derive(Args)]
struct OverlayArgs {
    #[arg(long)]
    mask: PathBuf,
    #[arg(long)]
    georef: PathBuf,
    /// Map to draw; omit for a plain class-color rendering.
    #[arg(long)]
    map: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct PrintConfigArgs {
    /// Load this config first and print the merged result.
    #[arg(long)]
    config: Option<PathBuf>,
}

/// Error carrying the process exit code.
struct CliError {
    code: u8,
    message: String,
}

impl CliError {
    fn input(message: impl Into<String>) -> Self {
        Self {
            code: 2,
            message: message.into(),
        }
    }

    fn internal(message: impl Into<String>) -> Self {
        Self {
            code: 3,
            message: message.into(),
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            // Help and version requests are not usage errors.
            use clap::error::ErrorKind;
            let _ = err.print();
            return match err.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(1),
            };
        }
    };
    let result = match cli.command {
        Command::Map(args) => cmd_map(args),
        Command::Eval(args) => cmd_eval(args),
        Command::Synth(args) => cmd_synth(args),
        Command::Overlay(args) => cmd_overlay(args),
        Command::PrintConfig(args) => cmd_print_config(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {}", err.message);
            ExitCode::from(err.code)
        }
    }
}

fn load_config(path: &Option<PathBuf>) -> Result<PipelineConfig, CliError> {
    match path {
        None => Ok(PipelineConfig::default()),
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .map_err(|e| CliError::input(format!("cannot read config {}: {e}", p.display())))?;
            PipelineConfig::from_text(&text).map_err(|e| CliError::input(e.to_string()))
        }
    }
}

/// Writes through a temp file in the target directory and renames, so a
/// failed run never leaves partial output behind.
fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    let dir = path
        .parent()
        .filter(|p| !p.as_os_str().is_empty())
        .unwrap_or(Path::new("."));
    std::fs::create_dir_all(dir)
        .map_err(|e| CliError::input(format!("cannot create {}: {e}", dir.display())))?;
    let tmp = dir.join(format!(
        ".{}.tmp-{}",
        path.file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_default(),
        std::process::id()
    ));
    std::fs::write(&tmp, bytes)
        .map_err(|e| CliError::input(format!("cannot write {}: {e}", tmp.display())))?;
    std::fs::rename(&tmp, path).map_err(|e| {
        let _ = std::fs::remove_file(&tmp);
        CliError::input(format!(
            "cannot move output into place at {}: {e}",
            path.display()
        ))
    })
}

fn cmd_map(args: MapArgs) -> Result<(), CliError> {
    let mask = load_mask_png(&args.mask)
        .map_err(|e| CliError::input(format!("mask {}: {e}", args.mask.display())))?;
    let georef = GeoReference::load(&args.georef)
        .map_err(|e| CliError::input(format!("georef {}: {e}", args.georef.display())))?;
    let config = load_config(&args.config)?;
    let classifier = match &args.templates {
        Some(dir) => TemplateClassifier::from_template_dir(dir, config.symbol_score_floor)
            .map_err(|e| CliError::input(e.to_string()))?,
        None => TemplateClassifier::from_config(&config),
    };
    let out = run_pipeline(&mask, &georef, &config, &classifier)
        .map_err(|e| CliError::internal(e.to_string()))?;
    let bytes = export_osm(&out.map).map_err(|e| CliError::internal(e.to_string()))?;
    write_atomic(&args.out, &bytes)?;
    let summary = serde_json::to_vec_pretty(&out.stats)
        .map_err(|e| CliError::internal(format!("summary: {e}")))?;
    let summary_path = args.out.with_extension("summary.json");
    write_atomic(&summary_path, &summary)?;
    println!("{}", String::from_utf8_lossy(&summary));
    Ok(())
}

fn cmd_eval(args: EvalArgs) -> Result<(), CliError> {
    let config = load_config(&args.config)?;
    let mut maps = Vec::new();
    for path in [&args.generated, &args.reference] {
        let bytes = std::fs::read(path)
            .map_err(|e| CliError::input(format!("cannot read {}: {e}", path.display())))?;
        maps.push(
            parse_osm(&bytes).map_err(|e| CliError::input(format!("{}: {e}", path.display())))?,
        );
    }
    let report = evaluate_maps(&maps[0], &maps[1], &config);
    let json = serde_json::to_string_pretty(&report)
        .map_err(|e| CliError::internal(format!("report: {e}")))?;
    println!("{json}");
    Ok(())
}

fn cmd_synth(args: SynthArgs) -> Result<(), CliError> {
    let mut spec = match &args.scene {
        None => SceneSpec::default(),
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::input(format!("cannot read {}: {e}", path.display())))?;
            SceneSpec::from_text(&text).map_err(|e| CliError::input(e.to_string()))?
        }
    };
    if let Some(seed) = args.seed {
        spec.seed = seed;
    }
    let scene = render_scene(&spec).map_err(|e| CliError::input(e.to_string()))?;
    let mask = match args.noise {
        Some(p) if p > 0.0 => perturb_boundaries(&scene.mask, p, spec.seed ^ 0x9e3779b9),
        _ => scene.mask.clone(),
    };

    std::fs::create_dir_all(&args.out)
        .map_err(|e| CliError::input(format!("cannot create {}: {e}", args.out.display())))?;
    // The png writer streams to a file, so write to a temp name and rename.
    let mask_path = args.out.join("mask.png");
    let tmp = args
        .out
        .join(format!(".mask.png.tmp-{}", std::process::id()));
    save_mask_png(&mask, &tmp).map_err(|e| CliError::input(e.to_string()))?;
    std::fs::rename(&tmp, &mask_path)
        .map_err(|e| CliError::input(format!("cannot finalize mask.png: {e}")))?;
    write_atomic(
        &args.out.join("georef.txt"),
        scene.georef.to_sidecar().as_bytes(),
    )?;
    let truth = export_osm(&scene.truth).map_err(|e| CliError::internal(e.to_string()))?;
    write_atomic(&args.out.join("truth.osm"), &truth)?;
    write_atomic(&args.out.join("scene.txt"), spec.to_text().as_bytes())?;
    Ok(())
}

fn cmd_overlay(args: OverlayArgs) -> Result<(), CliError> {
    let mask = load_mask_png(&args.mask)
        .map_err(|e| CliError::input(format!("mask {}: {e}", args.mask.display())))?;
    let georef = GeoReference::load(&args.georef)
        .map_err(|e| CliError::input(format!("georef {}: {e}", args.georef.display())))?;
    let map = match &args.map {
        None => lanemap::lanelet2::HdMap::default(),
        Some(path) => {
            let bytes = std::fs::read(path)
                .map_err(|e| CliError::input(format!("cannot read {}: {e}", path.display())))?;
            parse_osm(&bytes).map_err(|e| CliError::input(format!("{}: {e}", path.display())))?
        }
    };
    let (rgb, clipped) = render_overlay(&mask, &map, &georef);
    if clipped {
        eprintln!("warning: some map elements lie outside the tile; rendering clipped");
    }
    if let Some(parent) = args.out.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent)
            .map_err(|e| CliError::input(format!("cannot create {}: {e}", parent.display())))?;
    }
    let tmp = args
        .out
        .parent()
        .filter(|p| !p.as_os_str().is_empty())
        .unwrap_or(Path::new("."))
        .join(format!(".overlay.tmp-{}.png", std::process::id()));
    save_rgb_png(mask.width(), mask.height(), &rgb, &tmp)
        .map_err(|e| CliError::input(e.to_string()))?;
    std::fs::rename(&tmp, &args.out)
        .map_err(|e| CliError::input(format!("cannot finalize {}: {e}", args.out.display())))?;
    Ok(())
}

fn cmd_print_config(args: PrintConfigArgs) -> Result<(), CliError> {
    let config = load_config(&args.config)?;
    print!("{}", config.to_text());
    Ok(())
}
