//! Argument parsing and the batch subcommands. Exit codes: 0 success, 1 usage
//! or I/O/parse failure, 2 validation failure.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::atomic::AtomicBool;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};
use livewire_core::cost::{static_cost, train_mapping, CostWeights, TrainedMapping};
use livewire_core::eval::{MetricsReport, RunResult};
use livewire_core::image_ops::{apply_filter, FilterSpec};
use livewire_core::lw3d::{
    segment_volume_with, CutsFile, SegmentOptions, StripParams, SweepHooks, DEFAULT_WIGGLE_RADIUS,
};
use livewire_core::mesh::{default_arc_window_frac, reconstruct, DEFAULT_SAMPLES};
use livewire_core::volume::{load_contours, load_pgm, load_volume, save_contours, save_lwv1};
use livewire_core::{Error, Mask, Volume};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] Error),
    #[error("{0}")]
    Usage(String),
    #[error("cannot write {path}: {source}")]
    Write {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("server error: {0}")]
    Serve(std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Core(e) if e.is_validation() => 2,
            _ => 1,
        }
    }
}

type CliResult<T = ()> = std::result::Result<T, CliError>;

#[derive(Debug, Parser)]
#[command(
    name = "livewire",
    version,
    about = "Live-wire boundary tracing on image volumes"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Segment a volume headlessly from cut definitions and write contours.
    Segment(SegmentArgs),
    /// Build a triangle mesh from a contour stack.
    Mesh(MeshArgs),
    /// Compare two or more segmentation runs of the same volume.
    Eval(EvalArgs),
    /// Apply an image filter to every slice of a volume.
    Filter(FilterArgs),
    /// Run the interactive WebSocket session service.
    Serve(ServeArgs),
    /// Replay a recorded client message log and print the server events.
    Replay(ReplayArgs),
}

#[derive(Debug, Args)]
pub struct SegmentArgs {
    /// Volume file: LWV1 or a PGM slice manifest.
    #[arg(long)]
    pub volume: PathBuf,
    /// Cut definitions with boundaries (JSON).
    #[arg(long)]
    pub cuts: PathBuf,
    /// Output contour file (JSON).
    #[arg(long)]
    pub out: PathBuf,
    /// Strip width safety factor in [1.1, 2.0].
    #[arg(long, default_value_t = 1.5)]
    pub safety: f64,
    /// PGM mask of boundary pixels on the first slice of the first segment;
    /// nonzero pixels train the gradient mapping.
    #[arg(long, conflicts_with = "mapping")]
    pub train: Option<PathBuf>,
    /// Previously trained gradient mapping (text).
    #[arg(long)]
    pub mapping: Option<PathBuf>,
    /// Write the mapping learned from --train here.
    #[arg(long, requires = "train")]
    pub save_mapping: Option<PathBuf>,
    /// Cost weights wG,wL,wD,wS.
    #[arg(long, value_delimiter = ',', num_args = 4, default_values_t = [0.5, 0.5, 0.0, 0.0])]
    pub weights: Vec<f64>,
    /// Slice spacing written to the contour file.
    #[arg(long)]
    pub spacing: Option<f64>,
    /// Radius within which cut boundary crossings of a row merge.
    #[arg(long, default_value_t = DEFAULT_WIGGLE_RADIUS)]
    pub wiggle: usize,
    /// Search every slice over the whole image instead of a strip.
    #[arg(long)]
    pub full_search: bool,
}

#[derive(Debug, Args)]
pub struct MeshArgs {
    #[arg(long)]
    pub contours: PathBuf,
    /// Output OBJ file.
    #[arg(long)]
    pub out: PathBuf,
    /// Samples per contour.
    #[arg(long, default_value_t = DEFAULT_SAMPLES)]
    pub samples: usize,
    /// Correspondence search window as a fraction of the circumference;
    /// defaults to min(2 / samples, 0.5).
    #[arg(long)]
    pub arc_window: Option<f64>,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Contour files of the runs to compare.
    #[arg(long, num_args = 1.., required = true)]
    pub runs: Vec<PathBuf>,
    /// Output CSV of pairwise per-slice errors.
    #[arg(long)]
    pub report: PathBuf,
    /// Optional per-slice mean and standard deviation (JSON).
    #[arg(long)]
    pub summary: Option<PathBuf>,
    /// Image width; defaults to the contour bounding box.
    #[arg(long)]
    pub width: Option<usize>,
    /// Image height; defaults to the contour bounding box.
    #[arg(long)]
    pub height: Option<usize>,
}

#[derive(Debug, Args)]
pub struct FilterArgs {
    #[arg(long)]
    pub volume: PathBuf,
    /// anisotropic_diffusion, contrast, histogram_eq or unsharp_mask.
    #[arg(long)]
    pub kind: String,
    /// Comma-separated name=value pairs.
    #[arg(long, default_value = "")]
    pub params: String,
    /// Output LWV1 volume.
    #[arg(long)]
    pub out: PathBuf,
    /// PGM mask limiting the filter to nonzero pixels.
    #[arg(long)]
    pub region: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    #[arg(long, default_value = "127.0.0.1")]
    pub host: String,
    #[arg(long, default_value_t = 8765)]
    pub port: u16,
}

#[derive(Debug, Args)]
pub struct ReplayArgs {
    /// Client messages, one JSON object per line.
    #[arg(long)]
    pub log: PathBuf,
    /// Event output (JSON lines); standard output when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Parses `args` (including the program name), runs the command and
/// returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
        }
    };
    match execute(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

pub fn execute(command: Command) -> CliResult {
    match command {
        Command::Segment(a) => segment(&a),
        Command::Mesh(a) => mesh(&a),
        Command::Eval(a) => eval(&a),
        Command::Filter(a) => filter(&a),
        Command::Serve(a) => serve(&a),
        Command::Replay(a) => replay(&a),
    }
}

fn write_file(path: &Path, contents: impl AsRef<[u8]>) -> CliResult {
    fs::write(path, contents).map_err(|source| CliError::Write {
        path: path.to_owned(),
        source,
    })
}

fn nonzero_mask(path: &Path) -> CliResult<Mask> {
    let img = load_pgm(path)?;
    Ok(Mask::from_bits(
        img.width(),
        img.height(),
        img.pixels().iter().map(|&v| v != 0).collect(),
    ))
}

fn train_from_mask(
    v: &Volume,
    slice: usize,
    mask_path: &Path,
    weights: &CostWeights,
) -> CliResult<TrainedMapping> {
    let img = v.slice_of(slice)?;
    let mask = nonzero_mask(mask_path)?;
    if (mask.width(), mask.height()) != (img.width(), img.height()) {
        return Err(Error::InvalidArgument(format!(
            "training mask is {}x{}, slice is {}x{}",
            mask.width(),
            mask.height(),
            img.width(),
            img.height()
        ))
        .into());
    }
    let field = static_cost(&img, weights, None)?;
    Ok(train_mapping(&field.training_samples(&mask))?)
}

fn segment(a: &SegmentArgs) -> CliResult {
    let mut volume = load_volume(&a.volume)?;
    if let Some(s) = a.spacing {
        if !(s.is_finite() && s > 0.0) {
            return Err(
                Error::InvalidArgument(format!("spacing must be positive, got {s}")).into(),
            );
        }
        volume.spacing = s;
    }
    let segments = CutsFile::load(&a.cuts)?.to_segments()?;
    let [wg, wl, wd, ws] = a.weights[..] else {
        return Err(CliError::Usage("--weights needs four values".into()));
    };
    let mut weights = CostWeights::new(wg, wl, wd, ws)?;
    let mapping = match (&a.train, &a.mapping) {
        (Some(mask), _) => {
            let first = segments
                .first()
                .ok_or_else(|| Error::InvalidArgument("cuts file has no segments".into()))?;
            let m = train_from_mask(&volume, first.first_slice, mask, &weights)?;
            if let Some(path) = &a.save_mapping {
                write_file(path, m.to_text())?;
            }
            Some(m)
        }
        (None, Some(path)) => {
            let text = fs::read_to_string(path).map_err(|e| Error::Io {
                path: path.clone(),
                source: e,
            })?;
            Some(TrainedMapping::from_text(&text)?)
        }
        (None, None) => None,
    };
    weights.use_training = mapping.is_some();
    let opts = SegmentOptions {
        strip: StripParams::new(a.safety)?,
        wiggle_radius: a.wiggle,
        use_strip: !a.full_search,
        exhaustive: false,
    };
    let mut progress = |done: usize, total: usize, r: &livewire_core::lw3d::SliceReport| {
        eprintln!(
            "slice {} ({done}/{total}): {} nodes finalized, search area {}",
            r.slice, r.finalized_nodes, r.search_area
        );
    };
    let never = AtomicBool::new(false);
    let hooks = SweepHooks {
        progress: Some(&mut progress),
        cancel: Some(&never),
    };
    let result = segment_volume_with(&volume, &segments, &weights, mapping.as_ref(), &opts, hooks)?;
    save_contours(&result.contours, &a.out)?;
    Ok(())
}

fn mesh(a: &MeshArgs) -> CliResult {
    let contours = load_contours(&a.contours)?;
    let frac = a
        .arc_window
        .unwrap_or_else(|| default_arc_window_frac(a.samples));
    let mesh = reconstruct(&contours, a.samples, frac)?;
    mesh.save_obj(&a.out)?;
    eprintln!(
        "{} vertices, {} triangles",
        mesh.vertices.len(),
        mesh.triangles.len()
    );
    Ok(())
}

fn eval(a: &EvalArgs) -> CliResult {
    if a.runs.len() < 2 {
        return Err(Error::InvalidArgument(format!(
            "eval needs at least 2 runs, got {}",
            a.runs.len()
        ))
        .into());
    }
    let mut runs = Vec::with_capacity(a.runs.len());
    for path in &a.runs {
        runs.push(RunResult {
            id: path.display().to_string(),
            contours: load_contours(path)?,
            slice_times_ms: Vec::new(),
            seed_count: 0,
            auto_corrections: 0,
        });
    }
    let (mut w, mut h) = (0usize, 0usize);
    for p in runs
        .iter()
        .flat_map(|r| r.contours.slices.iter())
        .flat_map(|s| s.contour.iter())
    {
        if p.x < 0 || p.y < 0 {
            return Err(Error::PixelOutside {
                pixel: *p,
                context: "image",
            }
            .into());
        }
        w = w.max(p.x as usize + 1);
        h = h.max(p.y as usize + 1);
    }
    let report = MetricsReport::from_runs(&runs, a.width.unwrap_or(w), a.height.unwrap_or(h))?;
    write_file(&a.report, report.to_csv())?;
    if let Some(path) = &a.summary {
        write_file(path, report.summary_json())?;
    }
    Ok(())
}

fn parse_params(text: &str) -> CliResult<Vec<(String, f64)>> {
    text.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|pair| {
            let (name, value) = pair
                .split_once('=')
                .ok_or_else(|| CliError::Usage(format!("parameter `{pair}` is not name=value")))?;
            let value: f64 = value.trim().parse().map_err(|_| {
                CliError::Usage(format!("parameter `{name}` has a non-numeric value"))
            })?;
            Ok((name.trim().to_owned(), value))
        })
        .collect()
}

fn filter(a: &FilterArgs) -> CliResult {
    let volume = load_volume(&a.volume)?;
    let spec = FilterSpec::from_params(&a.kind, &parse_params(&a.params)?)?;
    let region = a.region.as_deref().map(nonzero_mask).transpose()?;
    let mut slices = Vec::with_capacity(volume.depth());
    for slice in volume.slices() {
        slices.push(apply_filter(&slice, &spec, region.as_ref())?);
    }
    let mut out = Volume::from_slices(&slices)?;
    out.spacing = volume.spacing;
    save_lwv1(&out, &a.out)?;
    Ok(())
}

fn serve(a: &ServeArgs) -> CliResult {
    let rt = tokio::runtime::Builder::new_multi_thread()
        .enable_all()
        .build()
        .map_err(CliError::Serve)?;
    rt.block_on(async {
        let listener = tokio::net::TcpListener::bind((a.host.as_str(), a.port))
            .await
            .map_err(CliError::Serve)?;
        let addr = listener.local_addr().map_err(CliError::Serve)?;
        eprintln!("listening on ws://{addr}/ws");
        crate::server::serve(listener)
            .await
            .map_err(CliError::Serve)
    })
}

fn replay(a: &ReplayArgs) -> CliResult {
    let log = fs::read_to_string(&a.log).map_err(|e| Error::Io {
        path: a.log.clone(),
        source: e,
    })?;
    let mut text = String::new();
    for ev in crate::session::replay(&log) {
        text.push_str(&ev.to_json());
        text.push('\n');
    }
    match &a.out {
        Some(path) => write_file(path, text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}
