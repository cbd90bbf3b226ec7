use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use qpn_core::imaging::{count_region, fit_thomas_fermi, CountingRegion, PixelImage};
use qpn_core::io::{self, fmt_num, CsvTable};
use qpn_core::noise::{allan_deviation, crossover_atom_number, octave_taus, relative_intensity, sweep_sigma_p};
use qpn_core::ramsey::{fringe_scan, SequenceMode};
use qpn_core::scenario::{linspace, Scenario};
use qpn_core::sideband::{beat_curve, BeatCurve};
use qpn_core::{Error, Result};

#[derive(Parser)]
#[command(name = "qpn", version, about = "Atom-interferometer measurement-chain simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// Scenario file (TOML).
    #[arg(long)]
    scenario: PathBuf,
    /// Overrides the scenario's base_seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory; defaults to the scenario's output_dir or `.`.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Sideband beat amplitudes versus modulation depth.
    BeatCurve {
        #[command(flatten)]
        common: Common,
        /// Overrides the largest modulation depth, rad.
        #[arg(long)]
        phi_max: Option<f64>,
    },
    /// Ramsey fringe over the scenario's detuning grid.
    Fringes {
        #[command(flatten)]
        common: Common,
        /// `ideal` or `transit`; overrides the scenario.
        #[arg(long)]
        mode: Option<String>,
        /// Emit the detuning grid in reverse order.
        #[arg(long)]
        reverse: bool,
    },
    /// Spread of the measured transition probability versus atom number.
    NoiseSweep {
        #[command(flatten)]
        common: Common,
        /// Skip imaging; measured populations equal the true ones.
        #[arg(long)]
        no_imaging: bool,
        /// Also write every simulated shot to shots.csv.
        #[arg(long)]
        shot_log: bool,
    },
    /// Allan deviation of a one-column series.
    Allan {
        /// Series file, one sample per line.
        #[arg(long)]
        input: PathBuf,
        /// Sample interval, s.
        #[arg(long)]
        interval: f64,
        /// Averaging times in seconds, comma separated; octaves by default.
        #[arg(long, value_delimiter = ',')]
        taus: Option<Vec<f64>>,
        /// Divide the series by its mean first.
        #[arg(long)]
        relative: bool,
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// Renders, fits and counts a two-state absorption image.
    ImagePipeline {
        #[command(flatten)]
        common: Common,
        /// Write atom.pgm, ref.pgm and imaging.toml next to the CSV.
        #[arg(long)]
        write_frames: bool,
        /// Read atom.pgm, ref.pgm and imaging.toml from this directory
        /// instead of rendering.
        #[arg(long)]
        frames: Option<PathBuf>,
    },
}

struct Context {
    scenario: Scenario,
    seed: u64,
    out: PathBuf,
}

fn load(common: &Common) -> Result<Context> {
    let scenario = Scenario::load(&common.scenario)?;
    let seed = common.seed.unwrap_or(scenario.base_seed);
    let out = common
        .out
        .clone()
        .or_else(|| scenario.output_dir.as_ref().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("."));
    Ok(Context { scenario, seed, out })
}

fn beat_tables(curve: &BeatCurve, harmonics: &[u32]) -> (CsvTable, CsvTable) {
    let mut header = vec!["phi".to_string(), "drive_voltage".into(), "dc_intensity".into()];
    header.extend(harmonics.iter().map(|m| format!("beat_m{m}")));
    let mut table = CsvTable {
        header,
        rows: Vec::new(),
    };
    for row in &curve.rows {
        let mut cells = vec![row.phi, row.drive_voltage, row.dc_intensity];
        cells.extend(harmonics.iter().map(|m| row.beat(*m).unwrap_or(0.0)));
        table.push_numbers(&cells);
    }
    let mut cal = CsvTable::new(&["dc_intensity", "beat_m2"]);
    for row in curve.monotonic_branch() {
        cal.push_numbers(&[row.dc_intensity, row.beat(2).unwrap_or(0.0)]);
    }
    (table, cal)
}

fn cmd_beat_curve(common: &Common, phi_max: Option<f64>) -> Result<()> {
    let ctx = load(common)?;
    let cfg = ctx.scenario.sagnac_config()?;
    let section = ctx.scenario.modulation.as_ref().expect("checked by sagnac_config");
    let phi_max = phi_max.unwrap_or(section.phi_max);
    if !(phi_max >= 0.0) || !phi_max.is_finite() {
        return Err(Error::Config(format!("--phi-max must be finite and non-negative, got {phi_max}")));
    }
    let phis = if phi_max == 0.0 {
        vec![0.0]
    } else {
        linspace(0.0, phi_max, section.phi_steps)
    };
    let mut computed = section.harmonics.clone();
    if !computed.contains(&2) {
        computed.push(2);
    }
    let curve = beat_curve(&cfg, &phis, &computed)?;
    let (table, cal) = beat_tables(&curve, &section.harmonics);
    table.write(&ctx.out.join("beat_curve.csv"))?;
    cal.write(&ctx.out.join("calibration.csv"))?;
    println!("wrote {} beat rows and {} calibration rows", curve.rows.len(), cal.rows.len());
    Ok(())
}

fn cmd_fringes(common: &Common, mode: Option<&str>, reverse: bool) -> Result<()> {
    let ctx = load(common)?;
    let mut seq = ctx.scenario.sequence_config()?;
    if let Some(m) = mode {
        seq.mode = m.parse::<SequenceMode>().map_err(|e| Error::Config(e.to_string()))?;
        seq.validate().map_err(|e| Error::Config(e.to_string()))?;
    }
    let mut grid_hz = ctx.scenario.detuning_grid_hz()?;
    if reverse {
        grid_hz.reverse();
    }
    let grid: Vec<f64> = grid_hz.iter().map(|f| 2.0 * std::f64::consts::PI * f).collect();
    let scan = fringe_scan(&seq, &grid)?;
    let mut table = CsvTable::new(&["detuning_hz", "p"]);
    for (f, (_, p)) in grid_hz.iter().zip(&scan) {
        table.push_numbers(&[*f, *p]);
    }
    table.write(&ctx.out.join("fringes.csv"))?;
    println!("wrote {} fringe points", scan.len());
    Ok(())
}

fn cmd_noise_sweep(common: &Common, no_imaging: bool, shot_log: bool) -> Result<()> {
    let ctx = load(common)?;
    let (n_values, mut opts, imaging) = ctx.scenario.sweep_options()?;
    opts.base_seed = ctx.seed;
    let scene = if imaging && !no_imaging {
        Some(ctx.scenario.imaging_scene()?)
    } else {
        None
    };
    if opts.shots_per_n < 10 {
        log::warn!(
            "only {} shots per atom number; the measured spread has a very wide confidence interval",
            opts.shots_per_n
        );
    }
    let res = sweep_sigma_p(&n_values, &opts, scene.as_ref())?;
    let mut table = CsvTable::new(&["N", "shots", "sigma_measured", "sigma_qpn", "sigma_photon", "sigma_combined"]);
    for r in &res.rows {
        table.push_numbers(&[
            r.n as f64,
            r.shots as f64,
            r.sigma_measured,
            r.sigma_qpn,
            r.sigma_photon,
            r.sigma_combined,
        ]);
    }
    table.write(&ctx.out.join("noise_sweep.csv"))?;
    if shot_log {
        let mut log_table = CsvTable::new(&["N", "shot", "n_total_true", "n2_true", "n1_measured", "n2_measured", "p_hat"]);
        for (row, shots) in res.rows.iter().zip(&res.shots) {
            for (i, s) in shots.iter().enumerate() {
                log_table.push_numbers(&[
                    row.n as f64,
                    i as f64,
                    s.n_total_true as f64,
                    s.n2_true as f64,
                    s.n1_measured,
                    s.n2_measured,
                    s.p_hat,
                ]);
            }
        }
        log_table.write(&ctx.out.join("shots.csv"))?;
    }
    match &scene {
        Some(s) => {
            let lo = *n_values.iter().min().expect("non-empty") as f64;
            let hi = *n_values.iter().max().expect("non-empty") as f64;
            match crossover_atom_number(s, opts.p, lo, hi.max(lo + 1.0))? {
                Some(n) => println!("crossover N = {} (photon and projection noise equal)", fmt_num(n.round())),
                None => println!("crossover N = none within [{}, {}]", fmt_num(lo), fmt_num(hi)),
            }
        }
        None => println!("crossover N = none (imaging disabled)"),
    }
    Ok(())
}

fn cmd_allan(input: &Path, interval: f64, taus: Option<&[f64]>, relative: bool, out: &Path) -> Result<()> {
    if !(interval > 0.0) || !interval.is_finite() {
        return Err(Error::Config(format!("--interval must be positive, got {interval}")));
    }
    let text = std::fs::read_to_string(input)
        .map_err(|e| Error::Config(format!("cannot read {}: {e}", input.display())))?;
    let mut series = io::parse_series(&text)?;
    if relative {
        series = relative_intensity(&series)?;
    }
    let taus = match taus {
        Some(t) => t.to_vec(),
        None => octave_taus(series.len(), interval),
    };
    let a = allan_deviation(&series, interval, &taus).map_err(|e| match e {
        Error::InvalidParameter { .. } => Error::Config(e.to_string()),
        other => other,
    })?;
    let mut table = CsvTable::new(&["tau_s", "adev"]);
    for (t, d) in a.taus.iter().zip(&a.adev) {
        table.push_numbers(&[*t, *d]);
    }
    table.write(&out.join("allan.csv"))?;
    println!("wrote {} averaging times, omitted {}", a.taus.len(), a.omitted.len());
    Ok(())
}

fn cmd_image_pipeline(common: &Common, write_frames: bool, frames: Option<&Path>) -> Result<()> {
    let ctx = load(common)?;
    let scene = ctx.scenario.imaging_scene()?;
    let section = ctx.scenario.imaging.as_ref().expect("checked by imaging_scene");
    let img = match frames {
        Some(dir) => {
            let params = io::parse_sidecar(&std::fs::read_to_string(dir.join("imaging.toml"))?)?;
            PixelImage::new(io::read_pgm(&dir.join("atom.pgm"))?, io::read_pgm(&dir.join("ref.pgm"))?, params)?
        }
        None => {
            let seed = if section.noise { Some(ctx.seed) } else { None };
            scene.render(section.atoms[0], section.atoms[1], seed)?
        }
    };
    if write_frames {
        io::write_pgm(&ctx.out.join("atom.pgm"), &img.atom_frame)?;
        io::write_pgm(&ctx.out.join("ref.pgm"), &img.ref_frame)?;
        io::write_atomic(&ctx.out.join("imaging.toml"), io::encode_sidecar(&img.params)?.as_bytes())?;
    }
    let mut table = CsvTable::new(&["state", "center_x", "center_y", "radius_x", "radius_y", "atoms", "sigma_photon"]);
    let mut atoms = [0.0; 2];
    for (i, nominal) in scene.nominal_regions().iter().enumerate() {
        let search = CountingRegion {
            half_width: (1.3 * nominal.half_width).min(nominal.center.0).min(img.width() as f64 - nominal.center.0),
            half_height: (1.3 * nominal.half_height).min(nominal.center.1).min(img.height() as f64 - nominal.center.1),
            ..*nominal
        };
        let fit = fit_thomas_fermi(&img, &search)?;
        let count = count_region(&img, &fit.region)?;
        if !count.invalid.is_empty() {
            log::warn!("state {}: {} clamped pixels excluded", i + 1, count.invalid.len());
        }
        atoms[i] = count.atoms;
        let mut cells = vec![(i + 1).to_string()];
        cells.extend(
            [fit.center.0, fit.center.1, fit.radius.0, fit.radius.1, count.atoms, count.predicted_sigma]
                .iter()
                .map(|v| fmt_num(*v)),
        );
        table.push(cells);
    }
    table.write(&ctx.out.join("fits.csv"))?;
    println!("p_hat = {}", fmt_num(atoms[1] / (atoms[0] + atoms[1])));
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match &cli.command {
        Command::BeatCurve { common, phi_max } => cmd_beat_curve(common, *phi_max),
        Command::Fringes { common, mode, reverse } => cmd_fringes(common, mode.as_deref(), *reverse),
        Command::NoiseSweep {
            common,
            no_imaging,
            shot_log,
        } => cmd_noise_sweep(common, *no_imaging, *shot_log),
        Command::Allan {
            input,
            interval,
            taus,
            relative,
            out,
        } => cmd_allan(input, *interval, taus.as_deref(), *relative, out),
        Command::ImagePipeline {
            common,
            write_frames,
            frames,
        } => cmd_image_pipeline(common, *write_frames, frames.as_deref()),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_configuration() {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}
