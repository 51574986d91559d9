//! Density tables and the fingerprint distance.
//!
//! psi_k(t) is the fraction of space covered by at least k balls of radius
//! t centered at the points of the set, computed per motif point as the
//! volume of (zone k) ∩ B(center, t) and normalized by the unit cell
//! volume. rho_k = psi_k - psi_{k+1} is the fraction covered by exactly k
//! balls; the family rho_0..rho_kmax on a shared t-grid is the fingerprint.
//! Tables carry one psi row more than kmax so rho_kmax needs no flag.
//!
//! Beyond t = R(k^{1/d} + 1), where R bounds the covering radius, every
//! ball of radius t contains at least k set points, so psi_k = 1 exactly;
//! the table writes that value directly, which makes the vanishing of
//! rho_k beyond its support bound exact rather than approximate.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::PeriodicSet;
use crate::linalg::Point;
use crate::rng::{stream_rng, stream_seed};
use crate::volumes::{self, OracleMode};
use crate::zones::{self, ZoneComplex};

/// How a density table is computed.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Method {
    /// Zone decomposition with exact (1D/2D) or Monte Carlo (3D) volumes.
    Zones,
    /// Brute-force sampling of k-th nearest distances over the unit cell.
    Oracle,
}

#[derive(Clone, Debug)]
pub struct FingerprintConfig {
    pub kmax: usize,
    pub t_steps: usize,
    /// Upper end of the t-grid; None picks the vanishing bound for kmax.
    pub t_max: Option<f64>,
    pub method: Method,
    /// Monte Carlo budget per cell for 3D zone volumes.
    pub mc_samples: u64,
    /// Sampling scheme used when `method` is Oracle.
    pub oracle_mode: OracleMode,
    /// Total sample budget for the oracle method.
    pub oracle_samples: u64,
    pub seed: u64,
}

impl FingerprintConfig {
    pub fn new(kmax: usize, t_steps: usize) -> Self {
        FingerprintConfig {
            kmax,
            t_steps,
            t_max: None,
            method: Method::Zones,
            mc_samples: volumes::DEFAULT_MC_SAMPLES,
            oracle_mode: OracleMode::MonteCarlo,
            oracle_samples: 200_000,
            seed: 0,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.kmax < 1 {
            return Err(Error::InvalidConfig("kmax must be at least 1".into()));
        }
        if self.t_steps < 2 {
            return Err(Error::InvalidConfig("t_steps must be at least 2".into()));
        }
        if let Some(t) = self.t_max {
            if !(t > 0.0 && t.is_finite()) {
                return Err(Error::InvalidConfig("t_max must be positive".into()));
            }
        }
        if self.mc_samples < 1 || self.oracle_samples < 1 {
            return Err(Error::InvalidConfig("sample budgets must be positive".into()));
        }
        Ok(())
    }
}

/// Provenance of a density table.
#[derive(Clone, Debug)]
pub struct TableMeta {
    pub set_hash: u64,
    pub method: Method,
    pub seed: u64,
    pub mc_samples: u64,
    pub packing: f64,
    /// Covering radius upper bound used for cutoffs and exactness overrides.
    pub covering_safe: f64,
    /// Motif points whose zone build needed the jitter fallback.
    pub jittered: Vec<usize>,
}

/// psi/rho values on a shared t-grid. psi row k (0-based index k) is the
/// coverage fraction by at least k balls, so row 0 is identically 1 and
/// rows run 0..=kmax+1; rho rows run 0..=kmax.
#[derive(Clone, Debug)]
pub struct DensityTable {
    pub dim: usize,
    pub kmax: usize,
    pub tgrid: Vec<f64>,
    pub psi: Vec<Vec<f64>>,
    pub psi_stderr: Vec<Vec<f64>>,
    /// Empty until `rho_from_psi` fills it.
    pub rho: Vec<Vec<f64>>,
    pub meta: TableMeta,
}

/// Radius beyond which a ball of that radius around any point of space
/// contains at least k points of the set (k >= 1): R (k^{1/d} + 1).
fn psi_one_threshold(covering: f64, k: usize, dim: usize) -> f64 {
    covering * ((k as f64).powf(1.0 / dim as f64) + 1.0)
}

/// Uniform grid [0, T] with T = R ((kmax+1)^{1/d} + 1), the radius past
/// which every rho_k with k <= kmax vanishes. Endpoints included.
pub fn default_tgrid(set: &PeriodicSet, kmax: usize, steps: usize) -> Vec<f64> {
    assert!(steps >= 2);
    let t_max = psi_one_threshold(set.covering_radius_safe(), kmax + 1, set.dim());
    linspace(t_max, steps)
}

fn linspace(t_max: f64, steps: usize) -> Vec<f64> {
    (0..steps)
        .map(|i| t_max * i as f64 / (steps - 1) as f64)
        .collect()
}

/// Computes the psi rows of a density table (rho left empty).
pub fn psi_table(set: &PeriodicSet, cfg: &FingerprintConfig) -> Result<DensityTable> {
    psi_table_impl(set, cfg, true)
}

/// As `psi_table` but without the large-t exactness override; the raw
/// accumulated volumes are reported even where psi = 1 is known exactly.
/// Used to validate that the override only ever replaces values already at
/// 1 up to the numerical error of the volume path.
pub fn psi_table_raw(set: &PeriodicSet, cfg: &FingerprintConfig) -> Result<DensityTable> {
    psi_table_impl(set, cfg, false)
}

fn psi_table_impl(
    set: &PeriodicSet,
    cfg: &FingerprintConfig,
    exact_override: bool,
) -> Result<DensityTable> {
    cfg.validate()?;
    let dim = set.dim();
    let kmax = cfg.kmax;
    let covering_safe = set.covering_radius_safe();
    let tgrid = match cfg.t_max {
        Some(t) => linspace(t, cfg.t_steps),
        None => linspace(
            psi_one_threshold(covering_safe, kmax + 1, dim),
            cfg.t_steps,
        ),
    };
    let nt = tgrid.len();

    let mut psi = vec![vec![0.0; nt]; kmax + 2];
    let mut var = vec![vec![0.0; nt]; kmax + 2];
    psi[0].fill(1.0);
    let mut jittered = Vec::new();

    match cfg.method {
        Method::Zones => {
            let volu = set.unit_cell_volume();
            for mi in 0..set.motif_len() {
                let (zc, jit) = zones::build_zones_with_fallback_covering(
                    set,
                    mi,
                    kmax + 1,
                    covering_safe,
                    stream_seed(cfg.seed, &[JITTER_TAG, mi as u64]),
                )?;
                if jit {
                    jittered.push(mi);
                }
                accumulate_complex(&zc, dim, &tgrid, cfg, mi, volu, &mut psi, &mut var);
            }
        }
        Method::Oracle => {
            let (rows, total) = volumes::oracle_level_distances(
                set,
                kmax + 1,
                cfg.oracle_mode,
                cfg.oracle_samples,
                cfg.seed,
            );
            for (j, row) in rows.iter().enumerate() {
                for (ti, &t) in tgrid.iter().enumerate() {
                    let p = row.partition_point(|&d| d <= t) as f64 / total as f64;
                    psi[j + 1][ti] = p;
                    if cfg.oracle_mode == OracleMode::MonteCarlo {
                        var[j + 1][ti] = p * (1.0 - p) / total as f64;
                    }
                }
            }
        }
    }

    for k in 1..=kmax + 1 {
        for ti in 0..nt {
            psi[k][ti] = psi[k][ti].clamp(0.0, 1.0);
        }
        if exact_override {
            let thr = psi_one_threshold(covering_safe, k, dim);
            for ti in 0..nt {
                if tgrid[ti] >= thr {
                    psi[k][ti] = 1.0;
                    var[k][ti] = 0.0;
                }
            }
        }
    }

    let psi_stderr = var
        .into_iter()
        .map(|row| row.into_iter().map(f64::sqrt).collect())
        .collect();
    Ok(DensityTable {
        dim,
        kmax,
        tgrid,
        psi,
        psi_stderr,
        rho: Vec::new(),
        meta: TableMeta {
            set_hash: set.content_hash(),
            method: cfg.method,
            seed: cfg.seed,
            mc_samples: match cfg.method {
                Method::Zones => cfg.mc_samples,
                Method::Oracle => cfg.oracle_samples,
            },
            packing: set.packing_radius(),
            covering_safe,
            jittered,
        },
    })
}

const JITTER_TAG: u64 = 0x6a69_7474;

fn accumulate_complex(
    zc: &ZoneComplex,
    dim: usize,
    tgrid: &[f64],
    cfg: &FingerprintConfig,
    motif_index: usize,
    volu: f64,
    psi: &mut [Vec<f64>],
    var: &mut [Vec<f64>],
) {
    let center: Point = zc.center;
    // Cells are processed in parallel with one RNG stream per (motif,
    // cell) pair; the accumulation below runs in cell order, so tables are
    // bitwise independent of thread scheduling.
    let profiles: Vec<(usize, Vec<volumes::VolumeEstimate>)> = zc
        .cells
        .par_iter()
        .enumerate()
        .map(|(ci, cell)| {
            let mut rng = stream_rng(cfg.seed, &[motif_index as u64, ci as u64]);
            (
                cell.depth,
                volumes::ball_cell_profile(dim, cell, center, tgrid, cfg.mc_samples, &mut rng),
            )
        })
        .collect();
    for (depth, profile) in profiles {
        for (ti, est) in profile.iter().enumerate() {
            psi[depth + 1][ti] += est.value / volu;
            let se = est.stderr / volu;
            var[depth + 1][ti] += se * se;
        }
    }
}

/// Fills the rho rows: rho_k = psi_k - psi_{k+1}, clamped to [0, 1].
/// Differences more negative than the numerical tolerance (1e-6 plus six
/// combined standard errors on Monte Carlo paths) mean the psi rows are
/// inconsistent and raise an error instead of being clamped away.
pub fn rho_from_psi(mut table: DensityTable) -> Result<DensityTable> {
    let kmax = table.kmax;
    if table.psi.len() != kmax + 2 {
        return Err(Error::Consistency(format!(
            "psi table has {} rows, expected {}",
            table.psi.len(),
            kmax + 2
        )));
    }
    let mut rho = Vec::with_capacity(kmax + 1);
    for k in 0..=kmax {
        let mut row = Vec::with_capacity(table.tgrid.len());
        for ti in 0..table.tgrid.len() {
            let diff = table.psi[k][ti] - table.psi[k + 1][ti];
            let se_a = table.psi_stderr[k][ti];
            let se_b = table.psi_stderr[k + 1][ti];
            let tol = 1e-6 + 6.0 * (se_a * se_a + se_b * se_b).sqrt();
            if diff < -tol {
                return Err(Error::Consistency(format!(
                    "psi_{k} < psi_{} by {:.3e} at t = {} (tolerance {:.3e})",
                    k + 1,
                    -diff,
                    table.tgrid[ti],
                    tol
                )));
            }
            row.push(diff.clamp(0.0, 1.0));
        }
        rho.push(row);
    }
    table.rho = rho;
    Ok(table)
}

/// Computes a complete density table: psi rows by the configured method,
/// then rho rows.
pub fn fingerprint(set: &PeriodicSet, cfg: &FingerprintConfig) -> Result<DensityTable> {
    rho_from_psi(psi_table(set, cfg)?)
}

/// Damped sup distance between two fingerprints on the same grid:
/// max over k of (k+1)^{-(d-1)/d} max over t of |rho_a - rho_b|.
pub fn fingerprint_distance(fa: &DensityTable, fb: &DensityTable) -> Result<f64> {
    if fa.dim != fb.dim {
        return Err(Error::GridMismatch(format!(
            "dimension {} vs {}",
            fa.dim, fb.dim
        )));
    }
    if fa.kmax != fb.kmax {
        return Err(Error::GridMismatch(format!(
            "kmax {} vs {}",
            fa.kmax, fb.kmax
        )));
    }
    if fa.tgrid.len() != fb.tgrid.len() {
        return Err(Error::GridMismatch(format!(
            "grid length {} vs {}",
            fa.tgrid.len(),
            fb.tgrid.len()
        )));
    }
    let scale = fa.tgrid.last().copied().unwrap_or(1.0).max(1e-300);
    for (a, b) in fa.tgrid.iter().zip(&fb.tgrid) {
        if (a - b).abs() > 1e-9 * scale {
            return Err(Error::GridMismatch(format!("grid values differ: {a} vs {b}")));
        }
    }
    if fa.rho.is_empty() || fb.rho.is_empty() {
        return Err(Error::Consistency("fingerprint distance needs rho rows".into()));
    }
    let d = fa.dim as f64;
    let mut best = 0.0f64;
    for k in 0..=fa.kmax {
        let weight = ((k + 1) as f64).powf(-(d - 1.0) / d);
        let mut linf = 0.0f64;
        for (a, b) in fa.rho[k].iter().zip(&fb.rho[k]) {
            linf = linf.max((a - b).abs());
        }
        best = best.max(weight * linf);
    }
    Ok(best)
}
