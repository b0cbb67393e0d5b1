use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use std::path::{Path, PathBuf};

use tlsm::scenario::{
    compare, generate_to, read_map_csv, run, verify_manifest, IndicatorChoice, RunReport,
    Scenario,
};

/// Synthetic crack imaging with the time-domain linear sampling method.
#[derive(Parser)]
#[command(name = "tlsm", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate the scattered waveforms of a scenario and write the dataset.
    Generate(Common),
    /// Invert an existing dataset over the scenario's study cells.
    Invert {
        #[command(flatten)]
        common: Common,
        /// Dataset stem (`<stem>.toml` + `<stem>.bin`); defaults to `<out>/dataset`.
        #[arg(long)]
        dataset: Option<PathBuf>,
    },
    /// Generate, invert and emit in one go.
    Run(Common),
    /// Metrics of two map CSVs on the scenario grid against its cracks.
    Compare {
        #[arg(long, short)]
        config: PathBuf,
        a: PathBuf,
        b: PathBuf,
        #[arg(long)]
        tau: Option<f64>,
    },
    /// Re-hash every artifact listed in `<dir>/manifest.toml`.
    VerifyManifest { dir: PathBuf },
}

#[derive(Clone, Copy, ValueEnum)]
enum Indicator {
    Tlsm,
    Flsm,
    Both,
}

#[derive(Args)]
struct Common {
    /// Scenario file (TOML).
    #[arg(long, short)]
    config: PathBuf,
    /// Output directory; overrides `output_dir` in the scenario.
    #[arg(long, short)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads; 1 runs sequentially. Results do not depend on it.
    #[arg(long, default_value_t = 1)]
    workers: usize,
    #[arg(long, value_enum)]
    indicator: Option<Indicator>,
    /// Mask threshold relative to the map maximum.
    #[arg(long)]
    tau: Option<f64>,
}

impl Common {
    fn scenario(&self) -> Result<(Scenario, PathBuf)> {
        let mut s = Scenario::load(&self.config)
            .with_context(|| format!("reading {}", self.config.display()))?;
        if let Some(seed) = self.seed {
            s.seed = seed;
        }
        if let Some(i) = self.indicator {
            s.indicator = match i {
                Indicator::Tlsm => IndicatorChoice::Tlsm,
                Indicator::Flsm => IndicatorChoice::Flsm,
                Indicator::Both => IndicatorChoice::Both,
            };
        }
        if let Some(tau) = self.tau {
            s.tau = tau;
        }
        let out = self
            .out
            .clone()
            .or_else(|| s.output_dir.clone())
            .unwrap_or_else(|| PathBuf::from("out"));
        s.validate()?;
        Ok((s, out))
    }
}

fn summarize(r: &RunReport) -> Result<()> {
    for cell in &r.metrics.cells {
        for m in &cell.maps {
            match (&m.metrics, &m.error) {
                (_, Some(e)) => println!("{:<18} {:<5} failed: {e}", cell.name, m.kind),
                (Some(x), None) => println!(
                    "{:<18} {:<5} argmax ({:+.4}, {:+.4})  error {:.2} cells  hausdorff {:.4}  components {} ({} spurious)  {:.1} s",
                    cell.name,
                    m.kind,
                    x.argmax[0],
                    x.argmax[1],
                    x.localization_cells,
                    x.hausdorff,
                    x.components,
                    x.spurious_components,
                    m.runtime_s
                ),
                (None, None) => println!("{:<18} {:<5} done in {:.1} s", cell.name, m.kind, m.runtime_s),
            }
        }
    }
    println!("artifacts in {}", r.out_dir.display());
    if !r.complete() {
        bail!("run incomplete: {}", r.manifest.failures.join("; "));
    }
    Ok(())
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    match cli.command {
        Command::Generate(c) => {
            let (s, out) = c.scenario()?;
            let m = generate_to(&s, &out, c.workers)?;
            if let Some(h) = &m.dataset {
                println!("dataset {:?} sha256 {}", h.shape, h.sha256);
            }
            println!("artifacts in {}", out.display());
        }
        Command::Invert { common, dataset } => {
            let (mut s, out) = common.scenario()?;
            let stem = dataset
                .or_else(|| s.dataset.clone())
                .unwrap_or_else(|| out.join("dataset"));
            if !stem.with_extension("toml").is_file() {
                bail!("no dataset at {}", stem.display());
            }
            s.dataset = Some(stem);
            summarize(&run(&s, &out, common.workers)?)?;
        }
        Command::Run(c) => {
            let (s, out) = c.scenario()?;
            summarize(&run(&s, &out, c.workers)?)?;
        }
        Command::Compare { config, a, b, tau } => {
            let s = Scenario::load(&config)?;
            let tau = tau.unwrap_or(s.tau);
            let va = read_map_csv(&a, &s.grid)?;
            let vb = read_map_csv(&b, &s.grid)?;
            let c = compare(&va, &vb, &s.grid, &s.scene, tau)?;
            print!("{}", toml::to_string(&c)?);
        }
        Command::VerifyManifest { dir } => verify(&dir)?,
    }
    Ok(())
}

fn verify(dir: &Path) -> Result<()> {
    let bad = verify_manifest(dir)?;
    if bad.is_empty() {
        println!("all artifacts match {}", dir.join("manifest.toml").display());
        return Ok(());
    }
    for p in &bad {
        println!("changed or missing: {p}");
    }
    bail!("{} artifact(s) differ from the manifest", bad.len())
}
