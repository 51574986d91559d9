//! Command-line interface: fingerprints, comparisons, zone geometry, the
//! brute-force coverage oracle, perturbation stability, and a selftest on
//! bundled fixtures.
//!
//! Exit codes: 0 success, 2 parse or validation error, 3 numerical
//! degeneracy, 4 comparison precondition failure.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use crystalfp::compare::{compare_sets, stability_trial, Metric};
use crystalfp::fingerprint::{fingerprint, FingerprintConfig, Method};
use crystalfp::io::{
    export_zone_geometry, parse_pps, write_density_csv, write_stability_csv,
};
use crystalfp::volumes::{oracle_psi, OracleMode};
use crystalfp::zones::{build_zones, zone_volume};
use crystalfp::{Error, ErrorClass, PeriodicSet};

#[derive(Parser)]
#[command(name = "crystalfp", version, about = "Density fingerprints of periodic point sets")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    Zones,
    Oracle,
}

#[derive(Clone, Copy, ValueEnum)]
enum MetricArg {
    Fingerprint,
    Bottleneck,
    Both,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Grid,
    Mc,
}

#[derive(Subcommand)]
enum Command {
    /// Compute a density fingerprint table and write it as CSV.
    Fingerprint {
        file: PathBuf,
        #[arg(long)]
        kmax: usize,
        /// Number of radius grid points.
        #[arg(long)]
        steps: usize,
        /// Upper end of the radius grid (default: where all densities vanish).
        #[arg(long)]
        tmax: Option<f64>,
        #[arg(long, value_enum, default_value = "zones")]
        method: MethodArg,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Monte Carlo sample budget per volume estimate.
        #[arg(long)]
        mc_samples: Option<u64>,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Compare two structures by fingerprint and/or bottleneck distance.
    Compare {
        a: PathBuf,
        b: PathBuf,
        #[arg(long)]
        kmax: usize,
        #[arg(long)]
        steps: usize,
        #[arg(long, value_enum, default_value = "both")]
        metric: MetricArg,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Also write the report as key,value CSV.
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Export the zone geometry around one motif point.
    Zones {
        file: PathBuf,
        /// Motif point index.
        #[arg(long)]
        point: usize,
        #[arg(long)]
        kmax: usize,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Brute-force coverage fractions psi_0..psi_kmax at one radius.
    Oracle {
        file: PathBuf,
        #[arg(long)]
        kmax: usize,
        /// Ball radius.
        #[arg(long)]
        t: f64,
        #[arg(long, value_enum, default_value = "grid")]
        mode: ModeArg,
        /// Sample budget (grid points or Monte Carlo draws).
        #[arg(long)]
        n: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Perturbation trials: bottleneck vs fingerprint distance per trial.
    Stability {
        file: PathBuf,
        /// Perturbation radius (Cartesian).
        #[arg(long)]
        delta: f64,
        #[arg(long)]
        trials: usize,
        #[arg(long)]
        kmax: usize,
        #[arg(long)]
        steps: usize,
        #[arg(long)]
        seed: u64,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Run supercell-invariance and zone-tiling checks on bundled fixtures.
    Selftest,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            match err.class() {
                ErrorClass::Validation => ExitCode::from(2),
                ErrorClass::Numerical => ExitCode::from(3),
                ErrorClass::Comparison => ExitCode::from(4),
            }
        }
    }
}

fn load(path: &Path) -> Result<PeriodicSet, Error> {
    let text = fs::read_to_string(path).map_err(|e| Error::Parse {
        line: 0,
        message: format!("{}: {e}", path.display()),
    })?;
    parse_pps(&text)
}

fn save(path: &Path, text: &str) -> Result<(), Error> {
    fs::write(path, text).map_err(|e| Error::Parse {
        line: 0,
        message: format!("{}: {e}", path.display()),
    })
}

fn run(command: Command) -> Result<(), Error> {
    match command {
        Command::Fingerprint { file, kmax, steps, tmax, method, seed, mc_samples, output } => {
            let set = load(&file)?;
            let mut cfg = FingerprintConfig::new(kmax, steps);
            cfg.t_max = tmax;
            cfg.method = match method {
                MethodArg::Zones => Method::Zones,
                MethodArg::Oracle => Method::Oracle,
            };
            cfg.seed = seed;
            if let Some(m) = mc_samples {
                cfg.mc_samples = m;
                cfg.oracle_samples = m;
            }
            let table = fingerprint(&set, &cfg)?;
            save(&output, &write_density_csv(&table))?;
            println!(
                "wrote {} ({} radii, k up to {})",
                output.display(),
                table.tgrid.len(),
                table.kmax
            );
            Ok(())
        }
        Command::Compare { a, b, kmax, steps, metric, seed, output } => {
            let sa = load(&a)?;
            let sb = load(&b)?;
            let mut cfg = FingerprintConfig::new(kmax, steps);
            cfg.seed = seed;
            let metric = match metric {
                MetricArg::Fingerprint => Metric::Fingerprint,
                MetricArg::Bottleneck => Metric::Bottleneck,
                MetricArg::Both => Metric::Both,
            };
            let (report, _tables) = compare_sets(&sa, &sb, &cfg, metric)?;
            let mut rows: Vec<(&str, String)> = Vec::new();
            if let Some(v) = report.d_b {
                rows.push(("bottleneck_distance", format!("{v}")));
            }
            if let Some(v) = report.d_f {
                rows.push(("fingerprint_distance", format!("{v}")));
            }
            rows.push(("packing_radius", format!("{}", report.packing)));
            rows.push(("covering_radius", format!("{}", report.covering)));
            if let Some(c) = report.lipschitz_c {
                rows.push(("lipschitz_constant", format!("{c}")));
            }
            if let Some(ok) = report.bound_satisfied {
                rows.push(("bound_satisfied", format!("{ok}")));
            }
            for (key, value) in &rows {
                println!("{key}: {value}");
            }
            if let Some(path) = output {
                let mut csv = String::from("key,value\n");
                for (key, value) in &rows {
                    csv.push_str(&format!("{key},{value}\n"));
                }
                save(&path, &csv)?;
            }
            Ok(())
        }
        Command::Zones { file, point, kmax, output } => {
            let set = load(&file)?;
            if point >= set.motif_len() {
                return Err(Error::InvalidConfig(format!(
                    "point index {point} out of range (motif has {} points)",
                    set.motif_len()
                )));
            }
            let zc = build_zones(&set, point, kmax)?;
            save(&output, &export_zone_geometry(&zc, set.dim()))?;
            println!("wrote {} ({} cells)", output.display(), zc.cells.len());
            Ok(())
        }
        Command::Oracle { file, kmax, t, mode, n, seed } => {
            let set = load(&file)?;
            let mode = match mode {
                ModeArg::Grid => OracleMode::Grid,
                ModeArg::Mc => OracleMode::MonteCarlo,
            };
            let psi = oracle_psi(&set, kmax, t, mode, n, seed);
            println!("k,psi");
            for (k, v) in psi.iter().enumerate() {
                println!("{k},{v}");
            }
            Ok(())
        }
        Command::Stability { file, delta, trials, kmax, steps, seed, output } => {
            let set = load(&file)?;
            let cfg = FingerprintConfig::new(kmax, steps);
            let report = stability_trial(&set, delta, trials, &cfg, seed)?;
            save(&output, &write_stability_csv(&report))?;
            println!("delta: {}", report.delta);
            println!("packing_radius: {}", report.packing);
            println!("covering_radius: {}", report.covering);
            if let Some(c) = report.lipschitz_c {
                println!("lipschitz_constant: {c}");
            }
            println!("max_ratio: {}", report.max_ratio);
            if let Some(ok) = report.all_bounds_hold {
                println!("all_bounds_hold: {ok}");
            }
            println!("wrote {} ({} trials)", output.display(), report.trials.len());
            Ok(())
        }
        Command::Selftest => selftest(),
    }
}

/// Bundled fixtures: a primitive square lattice, the same set as a 2x2
/// supercell, and a generic oblique two-point structure.
const SQUARE_PPS: &str = include_str!("../fixtures/square.pps");
const SUPERCELL_PPS: &str = include_str!("../fixtures/supercell.pps");
const OBLIQUE_PPS: &str = include_str!("../fixtures/oblique.pps");

fn selftest() -> Result<(), Error> {
    let square = parse_pps(SQUARE_PPS)?;
    let supercell = parse_pps(SUPERCELL_PPS)?;
    let oblique = parse_pps(OBLIQUE_PPS)?;

    // Supercell invariance: both representations of the square lattice
    // produce the same coverage table on a shared radius grid.
    let mut cfg = FingerprintConfig::new(4, 20);
    cfg.t_max = Some(crystalfp::fingerprint::default_tgrid(&square, 4, 2)[1]);
    let tp = fingerprint(&square, &cfg)?;
    let ts = fingerprint(&supercell, &cfg)?;
    let mut worst = 0.0f64;
    for k in 0..tp.psi.len() {
        for ti in 0..tp.tgrid.len() {
            worst = worst.max((tp.psi[k][ti] - ts.psi[k][ti]).abs());
        }
    }
    if worst > 1e-9 {
        return Err(Error::Consistency(format!(
            "supercell coverage tables disagree by {worst}"
        )));
    }
    println!("PASS supercell invariance (max deviation {worst:.2e})");

    // Zone tiling: per-zone volumes over the motif sum to the cell volume.
    // The canonical motif lists each orbit exactly once, so the sum is
    // plain even for points sitting on lattice-domain boundaries.
    for (name, set) in [("square", &square), ("supercell", &supercell), ("oblique", &oblique)] {
        let volu = set.unit_cell_volume();
        let zones: Vec<_> = (0..set.motif_len())
            .map(|p| build_zones(set, p, 4))
            .collect::<Result<_, _>>()?;
        for k in 1..=4 {
            let total: f64 = zones.iter().map(|zc| zone_volume(zc, k)).sum();
            if (total - volu).abs() > 1e-6 * volu.max(1.0) {
                return Err(Error::Consistency(format!(
                    "{name}: zone {k} volumes sum to {total}, cell volume {volu}"
                )));
            }
        }
        println!("PASS zone tiling on {name} fixture");
    }
    println!("selftest ok");
    Ok(())
}
