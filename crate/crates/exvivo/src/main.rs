use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use exvivo_core::phantom::{PhantomKind, LABEL_GM};

use exvivo::config::StudyConfig;
use exvivo::pipeline::{self, RunSummary};
use exvivo::{AppError, Result};

/// Volumetric morphometry and statistics for ex vivo brain MRI.
#[derive(Parser)]
#[command(name = "exvivo", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct CommonOpts {
    /// Study configuration file (TOML; see the config module docs).
    #[arg(long)]
    config: PathBuf,
    /// Worker threads for per-subject processing.
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    /// Output directory for reports.
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Landmark cortical thickness per subject (thickness.csv).
    Thickness(CommonOpts),
    /// Regional volumes, ICV adjustment, normalized WMH (volumes.csv).
    Volumes(CommonOpts),
    /// Dice/HD95 between candidate and reference segmentation directories.
    Evaluate {
        /// Directory of candidate label maps (.nii / .nii.gz).
        #[arg(long)]
        candidate_dir: PathBuf,
        /// Directory of reference label maps with matching filenames.
        #[arg(long)]
        reference_dir: PathBuf,
        /// Comma-separated label ids; defaults to every label found.
        #[arg(long, value_delimiter = ',')]
        labels: Option<Vec<u32>>,
        #[arg(long, default_value_t = 1)]
        jobs: usize,
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// Correlation, agreement, and group-comparison tables from measurement CSVs.
    Correlate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value_t = 1)]
        jobs: usize,
        #[arg(long, default_value = ".")]
        out: PathBuf,
        /// Override the config's BH false-discovery level.
        #[arg(long)]
        q: Option<f64>,
        /// Override the config's test tail.
        #[arg(long)]
        alternative: Option<AlternativeArg>,
        /// Subject-list file restricting the cohort.
        #[arg(long)]
        subset: Option<PathBuf>,
    },
    /// Generate a synthetic phantom with a ground-truth sidecar.
    Phantom {
        #[arg(long)]
        kind: PhantomKindArg,
        /// Primary size parameter: slab thickness, shell inner radius, or cube side (voxels).
        #[arg(long, default_value_t = 5)]
        a: usize,
        /// Secondary parameter: shell outer radius or two-cubes gap (voxels).
        #[arg(long, default_value_t = 8)]
        b: usize,
        /// Label id for the cube phantom.
        #[arg(long, default_value_t = LABEL_GM)]
        label: u32,
        /// Isotropic voxel spacing in mm.
        #[arg(long, default_value_t = 0.3)]
        spacing: f64,
        #[arg(long, default_value_t = 7)]
        seed: u64,
        /// Basename for the generated files.
        #[arg(long, default_value = "phantom")]
        name: String,
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum AlternativeArg {
    Less,
    Greater,
    #[value(name = "two-sided")]
    TwoSided,
}

impl AlternativeArg {
    fn as_str(self) -> &'static str {
        match self {
            AlternativeArg::Less => "less",
            AlternativeArg::Greater => "greater",
            AlternativeArg::TwoSided => "two-sided",
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum PhantomKindArg {
    Slab,
    Shell,
    Cube,
    TwoCubes,
    Toy,
}

fn run() -> Result<RunSummary> {
    let cli = Cli::parse();
    match cli.command {
        Command::Thickness(opts) => {
            let cfg = StudyConfig::load(&opts.config)?;
            pipeline::cmd_thickness(&cfg, opts.jobs, &opts.out)
        }
        Command::Volumes(opts) => {
            let cfg = StudyConfig::load(&opts.config)?;
            pipeline::cmd_volumes(&cfg, opts.jobs, &opts.out)
        }
        Command::Evaluate { candidate_dir, reference_dir, labels, jobs, out } => {
            pipeline::cmd_evaluate(&candidate_dir, &reference_dir, labels, jobs, &out)
        }
        Command::Correlate { config, jobs: _, out, q, alternative, subset } => {
            let mut cfg = StudyConfig::load(&config)?;
            if let Some(q) = q {
                cfg.study.q = q;
            }
            if let Some(alt) = alternative {
                cfg.study.alternative = alt.as_str().into();
            }
            if let Some(subset) = subset {
                cfg.inputs.subset = Some(subset);
            }
            cfg.validate()?;
            pipeline::cmd_correlate(&cfg, &out)
        }
        Command::Phantom { kind, a, b, label, spacing, seed, name, out } => {
            let kind = match kind {
                PhantomKindArg::Slab => PhantomKind::Slab { thickness_vox: a },
                PhantomKindArg::Shell => PhantomKind::SphericalShell { r_in_vox: a, r_out_vox: b },
                PhantomKindArg::Cube => PhantomKind::Cube { side_vox: a, label },
                PhantomKindArg::TwoCubes => PhantomKind::TwoCubes { side_vox: a, gap_vox: b },
                PhantomKindArg::Toy => PhantomKind::MultilabelHemisphereToy,
            };
            pipeline::cmd_phantom(kind, spacing, seed, &name, &out)
        }
    }
}

fn main() -> ExitCode {
    match run() {
        Ok(summary) => {
            if summary.failed_rows > 0 {
                eprintln!("{} of {} rows failed", summary.failed_rows, summary.rows);
            }
            ExitCode::from(summary.exit_code())
        }
        Err(e) => {
            eprintln!("error: {e}");
            // invalid config or unreadable inputs
            let _ = matches!(e, AppError::Config(_));
            ExitCode::from(2)
        }
    }
}
