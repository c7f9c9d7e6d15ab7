//! Command-line front end. Exit status: 0 on success, 1 on a model or I/O
//! error (or a failed reproduction), 2 on a usage error.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};

use crate::coincidence::{
    calibrate_source, car_vs_length, effective_window, fit_inverse_length, CalibrationTargets, CoincidenceHistogram,
    InverseLengthFit, PreparedSource, SweepRow,
};
use crate::config::{parse_config, parse_str, ExperimentConfig, CONFIG_ENV, MAX_SEED, PAPER_CONFIG};
use crate::dispersion::{walkoff_length, DispersionRow};
use crate::error::Result;
use crate::jsa::{apply_filters, compute_jsa_at, marginal_spectra, schmidt_decompose, GridSpec};
use crate::output::svg::{heatmap, Plot, Series};
use crate::output::{ensure_dir, fmt_f64, fmt_opt, write_csv, write_numeric_csv, write_text};
use crate::phasematch::{solve_at, tuning_curve, PhasematchPoint, TuningEntry};
use crate::reproduce::{reproduce, FIT_MIN_LENGTH_M, SWEEP_LENGTHS_M, SWEEP_POWERS_MW};
use crate::stats::{pair_distribution, rep_rate_tradeoff, squeeze_parameter_for, TradeoffMode};

#[derive(Debug, Parser)]
#[command(name = "pcf-fwm", version, about = "Photon-pair source simulator for four-wave mixing in PCF")]
pub struct Cli {
    /// Experiment config; the bundled reference config is used when absent.
    #[arg(long, global = true, env = CONFIG_ENV)]
    pub config: Option<PathBuf>,
    /// Directory receiving all output files.
    #[arg(long, global = true, default_value = "out")]
    pub out: PathBuf,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    ConstantAveragePower,
    ConstantPairProbability,
}

impl From<ModeArg> for TradeoffMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::ConstantAveragePower => TradeoffMode::ConstantAveragePower,
            ModeArg::ConstantPairProbability => TradeoffMode::ConstantPairProbability,
        }
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Dispersion curve, ZDW and walk-off lengths.
    Dispersion {
        #[arg(long, default_value_t = 201)]
        points: usize,
    },
    /// Phasematched signal and idler, optionally over a pump tuning range.
    Phasematch {
        #[arg(long)]
        pump_nm: Option<f64>,
        /// Tune the pump from START to STOP nm.
        #[arg(long, num_args = 2, value_names = ["START", "STOP"])]
        tuning: Option<Vec<f64>>,
        #[arg(long, default_value_t = 19)]
        points: usize,
    },
    /// Joint spectral intensity and Schmidt decomposition.
    Jsa {
        #[arg(long)]
        length_m: Option<f64>,
        /// Grid points per axis.
        #[arg(long)]
        grid: Option<usize>,
        /// Apply the collection filters before the decomposition.
        #[arg(long)]
        filtered: bool,
    },
    /// Pair-number distribution and repetition-rate trade-off.
    Stats {
        /// Squeeze parameter; derived from the calibrated config when absent.
        #[arg(long)]
        lam: Option<f64>,
        #[arg(long, default_value_t = 10)]
        n_max: usize,
        #[arg(long, default_value_t = 18.75)]
        multiplier: f64,
        #[arg(long, value_enum, default_value_t = ModeArg::ConstantAveragePower)]
        mode: ModeArg,
    },
    /// Coincidence histogram at one operating point.
    Simulate {
        #[arg(long, value_parser = clap::value_parser!(u64).range(..=MAX_SEED))]
        seed: u64,
        /// Pump pulses; chosen from the expected trigger rate when absent.
        #[arg(long)]
        pulses: Option<u64>,
        #[arg(long)]
        length_m: Option<f64>,
        #[arg(long)]
        power_mw: Option<f64>,
    },
    /// CAR against fibre length at several powers.
    Sweep {
        #[arg(long, value_parser = clap::value_parser!(u64).range(..=MAX_SEED))]
        seed: u64,
        #[arg(long, value_delimiter = ',')]
        lengths: Option<Vec<f64>>,
        #[arg(long, value_delimiter = ',')]
        powers: Option<Vec<f64>>,
    },
    /// Fit kappa and the Raman coefficient to observed rates.
    Calibrate {
        #[arg(long, value_parser = clap::value_parser!(u64).range(..=MAX_SEED))]
        seed: u64,
        #[arg(long)]
        fix_raman_zero: bool,
        #[arg(long, default_value_t = 9600.0)]
        coincidence_rate: f64,
        #[arg(long, default_value_t = 480.0)]
        accidental_rate: f64,
        #[arg(long, default_value_t = 1.15)]
        length_m: f64,
        #[arg(long, default_value_t = 150.0)]
        power_mw: f64,
    },
    /// Full pipeline with a pass/fail report per acceptance criterion.
    Reproduce {
        #[arg(long, value_parser = clap::value_parser!(u64).range(..=MAX_SEED))]
        seed: u64,
    },
}

/// Parse `args` (including the program name), run, and return the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match execute(&cli) {
        Ok(true) => 0,
        Ok(false) => 1,
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

fn load_config(path: Option<&Path>) -> Result<ExperimentConfig> {
    Ok(match path {
        Some(p) => parse_config(p)?,
        None => parse_str(PAPER_CONFIG)?,
    })
}

/// Run a parsed command. `Ok(false)` means the command completed but its
/// checks failed.
pub fn execute(cli: &Cli) -> Result<bool> {
    let config = load_config(cli.config.as_deref())?;
    ensure_dir(&cli.out)?;
    let out = cli.out.as_path();
    match &cli.command {
        Command::Dispersion { points } => dispersion(&config, out, *points),
        Command::Phasematch { pump_nm, tuning, points } => phasematch(&config, out, *pump_nm, tuning.as_deref(), *points),
        Command::Jsa { length_m, grid, filtered } => jsa(&config, out, *length_m, *grid, *filtered),
        Command::Stats {
            lam,
            n_max,
            multiplier,
            mode,
        } => stats(&config, out, *lam, *n_max, *multiplier, (*mode).into()),
        Command::Simulate {
            seed,
            pulses,
            length_m,
            power_mw,
        } => {
            let p = PreparedSource::new(&config)?;
            let l = length_m.unwrap_or(config.fibre.length_m);
            let pw = power_mw.unwrap_or(config.pump.average_power_mw);
            let h = p.simulate_at(l, pw / 1e3, *seed, *pulses)?;
            write_histogram(out, &h, &format!("{l} m, {pw} mW"))?;
            println!(
                "pulses {}  triggers {}  coincidences {:.1}/s  accidentals {:.2}/s  CAR {:.2}  peak {:.3} ns",
                h.n_pulses,
                h.total_trigger_count,
                h.coincidence_rate,
                h.accidental_rate,
                h.car,
                h.peak_delay * 1e9
            );
            match effective_window(&h) {
                Ok(w) => println!("window FWHM {:.3} ns over {} pump periods", w.width * 1e9, w.pump_periods),
                Err(e) => println!("window: {e}"),
            }
            Ok(true)
        }
        Command::Sweep { seed, lengths, powers } => {
            let lengths = lengths.clone().unwrap_or_else(|| SWEEP_LENGTHS_M.to_vec());
            let powers = powers.clone().unwrap_or_else(|| SWEEP_POWERS_MW.to_vec());
            let rows = car_vs_length(&config, &lengths, &powers, *seed)?;
            let fits: Vec<(f64, Option<InverseLengthFit>)> = powers
                .iter()
                .map(|&pw| {
                    let pts: Vec<(f64, f64)> = rows
                        .iter()
                        .filter(|r| r.avg_power_mw == pw && r.length_m >= FIT_MIN_LENGTH_M)
                        .filter_map(|r| r.car.map(|c| (r.length_m, c)))
                        .collect();
                    (pw, fit_inverse_length(&pts).ok())
                })
                .collect();
            write_sweep(out, &rows, &fits)?;
            for r in &rows {
                match &r.error {
                    None => println!("{} m  {} mW  CAR {:.2}", r.length_m, r.avg_power_mw, r.car.unwrap_or(f64::NAN)),
                    Some(e) => println!("{} m  {} mW  gap: {e}", r.length_m, r.avg_power_mw),
                }
            }
            Ok(true)
        }
        Command::Calibrate {
            seed,
            fix_raman_zero,
            coincidence_rate,
            accidental_rate,
            length_m,
            power_mw,
        } => {
            let targets = CalibrationTargets {
                length_m: *length_m,
                average_power_w: power_mw / 1e3,
                coincidence_rate: *coincidence_rate,
                accidental_rate: *accidental_rate,
            };
            let c = calibrate_source(&config, &targets, *seed, *fix_raman_zero)?;
            write_text(out.join("calibrated.cfg"), &c.apply(&config, *seed).to_toml())?;
            println!(
                "kappa {}  raman_coefficient {}  coincidences {:.1}/s  accidentals {:.1}/s  residual {:.2e}  iterations {}",
                fmt_f64(c.kappa),
                fmt_f64(c.raman_coefficient),
                c.coincidence_rate,
                c.accidental_rate,
                c.residual,
                c.iterations
            );
            Ok(true)
        }
        Command::Reproduce { seed } => {
            let r = reproduce(&config, *seed)?;
            let report = r.report();
            write_text(out.join("report.txt"), &report)?;
            write_text(out.join("calibrated.cfg"), &r.calibrated_config.to_toml())?;
            write_histogram(out, &r.histogram, "150 mW, 1.15 m")?;
            write_sweep(out, &r.sweep, &r.fits)?;
            write_tuning(out, &r.tuning)?;
            print!("{report}");
            Ok(r.all_pass())
        }
    }
}

fn dispersion(config: &ExperimentConfig, out: &Path, points: usize) -> Result<bool> {
    let p = PreparedSource::new(config)?;
    let rows = p.model.curve(points);
    write_numeric_csv(out.join("dispersion.csv"), &DispersionRow::HEADER, rows.iter().map(|r| r.values()))?;
    let plot = Plot::new("Dispersion", "wavelength (nm)", "D (ps/(nm km))").with(Series::line(
        "D",
        rows.iter().map(|r| (r.wavelength_nm, r.d_ps_per_nm_km)).collect(),
    ));
    write_text(out.join("dispersion.svg"), &plot.render())?;
    println!("pitch_um {}", fmt_f64(p.geometry.pitch_um));
    match p.model.zdw() {
        Some(z) => println!("zdw_nm {}", fmt_f64(z)),
        None => println!("zdw_nm none in window"),
    }
    let tau = p.pump.duration_fwhm_s;
    let pt = p.point;
    println!(
        "walkoff_signal_m {}  walkoff_idler_m {}",
        fmt_f64(walkoff_length(tau, pt.pump_nm, pt.signal_nm, &p.model)?),
        fmt_f64(walkoff_length(tau, pt.pump_nm, pt.idler_nm, &p.model)?)
    );
    Ok(true)
}

fn point_row(q: &PhasematchPoint) -> Vec<String> {
    q.values().iter().map(|v| fmt_f64(*v)).collect()
}

fn phasematch(config: &ExperimentConfig, out: &Path, pump_nm: Option<f64>, tuning: Option<&[f64]>, points: usize) -> Result<bool> {
    let p = PreparedSource::new(config)?;
    if let Some(t) = tuning {
        let entries = tuning_curve((t[0], t[1]), points, &p.pump, &p.geometry, &p.model);
        write_tuning(out, &entries)?;
        for e in &entries {
            match e.point {
                Some(q) => println!("{}", point_row(&q).join(",")),
                None => println!("{},,,", fmt_f64(e.pump_nm)),
            }
        }
        return Ok(true);
    }
    let pump = pump_nm.unwrap_or(p.pump.center_wavelength_nm);
    let q = solve_at(pump, &p.model, p.geometry.gamma * p.pump.peak_power(), &config.solver)?;
    write_csv(out.join("phasematch.csv"), &PhasematchPoint::HEADER, [point_row(&q)])?;
    println!("{}", PhasematchPoint::HEADER.join(","));
    println!("{}", point_row(&q).join(","));
    Ok(true)
}

fn jsa(config: &ExperimentConfig, out: &Path, length_m: Option<f64>, grid: Option<usize>, filtered: bool) -> Result<bool> {
    let p = PreparedSource::new(config)?;
    let geometry = p.geometry.with_length(length_m.unwrap_or(p.geometry.length_m));
    let spec = match grid {
        Some(n) => GridSpec {
            n_signal: n,
            n_idler: n,
            ..config.grid()
        },
        None => config.grid(),
    };
    let mut j = compute_jsa_at(&p.pump, &geometry, &p.model, &p.point, &spec)?;
    if filtered {
        let (fs, fi) = config.filters(&p.point);
        j = apply_filters(&j, Some(&fs), Some(&fi))?;
    }
    let rows = j.density_rows();
    write_numeric_csv(out.join("jsa.csv"), &["signal_nm", "idler_nm", "density"], rows.iter().copied())?;
    let s = schmidt_decompose(&j);
    write_csv(
        out.join("schmidt.csv"),
        &["coefficients", "purity", "schmidt_number"],
        s.coefficients
            .iter()
            .take_while(|c| **c > 1e-6)
            .map(|c| [fmt_f64(*c), fmt_f64(s.purity), fmt_f64(s.schmidt_number)]),
    )?;
    // heat map on at most 128 x 128 cells
    let (ns, ni) = j.amplitude.shape();
    let (ks, ki) = (ns.div_ceil(128), ni.div_ceil(128));
    let xs: Vec<f64> = (0..ns).step_by(ks).map(|r| crate::units::nm_from_omega(j.signal_axis[r])).collect();
    let ys: Vec<f64> = (0..ni).step_by(ki).map(|c| crate::units::nm_from_omega(j.idler_axis[c])).collect();
    let values: Vec<Vec<f64>> = (0..ns)
        .step_by(ks)
        .map(|r| (0..ni).step_by(ki).map(|c| j.density(r, c)).collect())
        .collect();
    // wavelength axes run opposite to frequency
    let rev = |v: &[f64]| v.iter().rev().copied().collect::<Vec<f64>>();
    let values: Vec<Vec<f64>> = values.iter().rev().map(|row| rev(row)).collect();
    write_text(
        out.join("jsa.svg"),
        &heatmap("Joint spectral intensity", "signal (nm)", "idler (nm)", &rev(&xs), &rev(&ys), &values),
    )?;
    let (ms, mi) = marginal_spectra(&j);
    println!(
        "purity {}  schmidt_number {}  signal_fwhm_nm {}  idler_fwhm_nm {}",
        fmt_f64(s.purity),
        fmt_f64(s.schmidt_number),
        fmt_f64(ms.fwhm_nm),
        fmt_f64(mi.fwhm_nm)
    );
    Ok(true)
}

fn stats(config: &ExperimentConfig, out: &Path, lam: Option<f64>, n_max: usize, m: f64, mode: TradeoffMode) -> Result<bool> {
    let lam = match lam {
        Some(l) => l,
        None => {
            let p = PreparedSource::new(config)?;
            let (kappa, _) = p.calibration()?;
            let l_eff = p.effective_length(config.fibre.length_m, p.pump.average_power_w)?;
            squeeze_parameter_for(kappa, p.geometry.gamma, p.pump.peak_power(), l_eff)?
        }
    };
    let d = pair_distribution(lam, n_max)?;
    let rows: Vec<[String; 2]> = d
        .probabilities
        .iter()
        .enumerate()
        .map(|(n, p)| [n.to_string(), fmt_f64(*p)])
        .collect();
    write_csv(out.join("stats.csv"), &["n", "probability"], rows.clone())?;
    let t = rep_rate_tradeoff(&config.pump(), m, mode)?;
    let mode_name = match mode {
        TradeoffMode::ConstantAveragePower => "constant_average_power",
        TradeoffMode::ConstantPairProbability => "constant_pair_probability",
    };
    let header = [
        "multiplier",
        "mode",
        "lam_factor",
        "single_pair_rate_factor",
        "multipair_ratio_factor",
    ];
    let trow = [
        fmt_f64(t.multiplier),
        mode_name.to_string(),
        fmt_f64(t.lam_factor),
        fmt_f64(t.single_pair_rate_factor),
        fmt_f64(t.multipair_ratio_factor),
    ];
    write_csv(out.join("tradeoff.csv"), &header, [trow.clone()])?;
    println!("n,probability");
    for r in &rows {
        println!("{}", r.join(","));
    }
    println!("{}", header.join(","));
    println!("{}", trow.join(","));
    Ok(true)
}

fn write_histogram(out: &Path, h: &CoincidenceHistogram, label: &str) -> Result<()> {
    let rows = h.rows();
    write_csv(
        out.join("histogram.csv"),
        &["delay_ns", "counts", "rate_hz"],
        rows.iter().map(|(d, c, r)| [fmt_f64(*d), c.to_string(), fmt_f64(*r)]),
    )?;
    let plot = Plot::new("Coincidences against trigger delay", "delay (ns)", "rate (1/s)").with(Series {
        label: label.to_string(),
        points: rows.iter().map(|(d, _, r)| (*d, *r)).collect(),
        markers: true,
        line: true,
    });
    write_text(out.join("histogram.svg"), &plot.render())
}

fn write_sweep(out: &Path, rows: &[SweepRow], fits: &[(f64, Option<InverseLengthFit>)]) -> Result<()> {
    write_csv(
        out.join("sweep.csv"),
        &SweepRow::HEADER,
        rows.iter().map(|r| {
            [
                fmt_f64(r.length_m),
                fmt_f64(r.avg_power_mw),
                fmt_opt(r.coincidence_rate_hz),
                fmt_opt(r.accidental_rate_hz),
                fmt_opt(r.car),
            ]
        }),
    )?;
    write_csv(
        out.join("fits.csv"),
        &["avg_power_mw", "coefficient_m", "relative_rms", "points"],
        fits.iter().map(|(pw, f)| {
            [
                fmt_f64(*pw),
                fmt_opt(f.map(|f| f.coefficient)),
                fmt_opt(f.map(|f| f.relative_rms)),
                f.map(|f| f.points.to_string()).unwrap_or_default(),
            ]
        }),
    )?;
    let mut plot = Plot::new("CAR against fibre length", "length (m)", "CAR");
    plot.log_y = true;
    for (pw, f) in fits {
        plot.series.push(Series::markers(
            format!("{pw} mW"),
            rows.iter()
                .filter(|r| r.avg_power_mw == *pw)
                .filter_map(|r| r.car.map(|c| (r.length_m, c)))
                .collect(),
        ));
        if let Some(f) = f {
            let mut ls: Vec<f64> = rows.iter().filter(|r| r.avg_power_mw == *pw).map(|r| r.length_m).collect();
            ls.sort_by(f64::total_cmp);
            plot.series.push(Series::line(
                format!("{} m / L", fmt_f64((f.coefficient * 100.0).round() / 100.0)),
                ls.iter().map(|l| (*l, f.coefficient / l)).collect(),
            ));
        }
    }
    write_text(out.join("sweep.svg"), &plot.render())
}

fn write_tuning(out: &Path, entries: &[TuningEntry]) -> Result<()> {
    write_csv(
        out.join("tuning.csv"),
        &PhasematchPoint::HEADER,
        entries.iter().map(|e| match e.point {
            Some(q) => point_row(&q),
            None => vec![fmt_f64(e.pump_nm), String::new(), String::new(), String::new()],
        }),
    )?;
    let pts = |f: fn(&PhasematchPoint) -> f64| -> Vec<(f64, f64)> {
        entries.iter().filter_map(|e| e.point.map(|q| (e.pump_nm, f(&q)))).collect()
    };
    let plot = Plot::new("Phasematched wavelengths", "pump (nm)", "wavelength (nm)")
        .with(Series::line("signal", pts(|q| q.signal_nm)))
        .with(Series::line("idler", pts(|q| q.idler_nm)));
    write_text(out.join("tuning.svg"), &plot.render())
}

