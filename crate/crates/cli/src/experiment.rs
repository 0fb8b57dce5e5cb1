use std::io::Write;
use std::path::PathBuf;

use clap::{Args, ValueEnum};
use serde_json::json;

use lpcoreset::experiments::{
    aggregate, render_svg, run_unstructured_sweep, run_vander_sweep, write_summary_csv,
    write_trials_csv, Axis, Scale, UnstructuredSweep, VanderSweep,
};
use lpcoreset::{Error, Result};

use crate::io;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Name {
    VanderP,
    VanderM,
    Unstructured,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ScaleArg {
    Desk,
    Paper,
}

/// How to read the paper-scale noise level `1e10`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum NoiseReading {
    Variance,
    Sd,
}

#[derive(Debug, Args)]
pub struct ExperimentArgs {
    #[arg(value_enum)]
    name: Name,
    #[arg(long, value_enum, default_value = "desk")]
    scale: ScaleArg,
    /// Trials per grid point; the preset's count when omitted.
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output directory.
    #[arg(long, default_value = ".")]
    out: PathBuf,
    /// Also render an SVG plot of the summary.
    #[arg(long)]
    svg: bool,
    /// Run the rounding and grouping stage as well.
    #[arg(long)]
    round: bool,
    /// Record wall-clock times (makes the trial CSV non-reproducible).
    #[arg(long)]
    timing: bool,
    /// Interpretation of the paper-scale Vandermonde noise level.
    #[arg(long, value_enum, default_value = "variance")]
    paper_noise: NoiseReading,
    /// Override the Vandermonde noise standard deviation.
    #[arg(long)]
    noise_sd: Option<f64>,
}

enum Sweep {
    Vander(VanderSweep),
    Unstructured(UnstructuredSweep),
}

fn build(args: &ExperimentArgs) -> Result<Sweep> {
    let scale = match args.scale {
        ScaleArg::Desk => Scale::Desk,
        ScaleArg::Paper => Scale::Paper,
    };
    if args.trials == Some(0) {
        return Err(Error::InvalidParameter("--trials must be at least 1".into()));
    }
    Ok(match args.name {
        Name::VanderP | Name::VanderM => {
            let mut s = if args.name == Name::VanderP {
                VanderSweep::vander_p(scale)
            } else {
                VanderSweep::vander_m(scale)
            };
            if scale == Scale::Paper && args.paper_noise == NoiseReading::Sd {
                s.data.noise_sd = 1e10;
            }
            if let Some(sd) = args.noise_sd {
                s.data.noise_sd = sd;
            }
            s.trials = args.trials.unwrap_or(s.trials);
            s.seed = args.seed;
            s.rounding = args.round;
            s.timing = args.timing;
            Sweep::Vander(s)
        }
        Name::Unstructured => {
            let mut s = UnstructuredSweep::preset(scale);
            s.trials = args.trials.unwrap_or(s.trials);
            s.seed = args.seed;
            s.rounding = args.round;
            s.timing = args.timing;
            Sweep::Unstructured(s)
        }
    })
}

pub fn run(args: &ExperimentArgs) -> Result<()> {
    let sweep = build(args)?;
    let (id, axis, records, config) = match &sweep {
        Sweep::Vander(s) => (
            s.experiment.clone(),
            s.axis,
            run_vander_sweep(s)?,
            serde_json::to_value(s),
        ),
        Sweep::Unstructured(s) => (
            s.experiment.clone(),
            Axis::M,
            run_unstructured_sweep(s)?,
            serde_json::to_value(s),
        ),
    };
    let mut config = config.map_err(|e| Error::Io(e.to_string()))?;
    config["command"] = json!("experiment");
    config["scale"] = json!(format!("{:?}", args.scale).to_lowercase());

    let report = aggregate(&records, axis);
    for f in &report.failures {
        eprintln!(
            "warning: {} {} at {} had {} failed trials",
            f.experiment, f.method, f.key, f.failed
        );
    }

    let trials_path = args.out.join(format!("{id}.trials.csv"));
    let summary_path = args.out.join(format!("{id}.summary.csv"));
    write_trials_csv(io::create(&trials_path)?, Some(&config), &records)?;
    write_summary_csv(io::create(&summary_path)?, Some(&config), &report.summaries)?;
    let mut written = vec![trials_path, summary_path];
    if args.svg {
        let x_label = match axis {
            Axis::P => "p",
            Axis::M => "m",
        };
        let path = args.out.join(format!("{id}.svg"));
        let mut f = io::create(&path)?;
        f.write_all(render_svg(&report.summaries, &format!("{id}: relative error"), x_label).as_bytes())?;
        f.flush()?;
        written.push(path);
    }
    for s in &report.summaries {
        println!(
            "{:<8} {:>8} median {:.3e} [{:.3e}, {:.3e}] n={}",
            s.method, s.key, s.median, s.q25, s.q75, s.count
        );
    }
    for p in written {
        println!("wrote {}", p.display());
    }
    Ok(())
}
