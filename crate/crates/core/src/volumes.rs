//! Volumes of ball-cell intersections.
//!
//! The density profile needs Vol(cell ∩ B(center, t)) for every cell of a
//! zone complex over a whole grid of radii. In one dimension this is an
//! interval overlap and in two it is an exact circle-polygon area, so those
//! paths carry zero error. In three dimensions the volume is estimated by
//! stratified Monte Carlo: one sample set is drawn per cell, distances to
//! the center are sorted once, and every radius reads its count from the
//! resulting empirical distribution. Sharing samples across radii makes the
//! profile monotone in t by construction and costs one pass per cell.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::geometry::PeriodicSet;
use crate::linalg::{self, Point};
use crate::rng::stream_rng;
use crate::zones::ConvexCell;

/// Default Monte Carlo budget per cell.
pub const DEFAULT_MC_SAMPLES: u64 = 200_000;

/// Strata per axis for the 3D estimator (so 512 boxes per cell).
const STRATA_PER_AXIS: u64 = 8;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum VolumeMethod {
    Exact1d,
    Exact2d,
    MonteCarlo,
}

/// One volume value with its uncertainty. Exact paths report stderr 0.
#[derive(Clone, Copy, Debug)]
pub struct VolumeEstimate {
    pub value: f64,
    pub stderr: f64,
    pub method: VolumeMethod,
    /// Total points drawn for Monte Carlo estimates, 0 for exact ones.
    pub samples: u64,
}

impl VolumeEstimate {
    fn exact(value: f64, method: VolumeMethod) -> Self {
        VolumeEstimate { value, stderr: 0.0, method, samples: 0 }
    }
}

/// Volume of `cell ∩ B(center, t)` for every radius in `ts`.
///
/// Radii may be in any order; Monte Carlo estimates for all of them share
/// one sample set. The RNG is only consumed on the 3D path.
pub fn ball_cell_profile(
    dim: usize,
    cell: &ConvexCell,
    center: Point,
    ts: &[f64],
    mc_samples: u64,
    rng: &mut ChaCha8Rng,
) -> Vec<VolumeEstimate> {
    match dim {
        1 => ts.iter().map(|&t| interval_overlap(cell, center, t)).collect(),
        2 => ts
            .iter()
            .map(|&t| {
                VolumeEstimate::exact(
                    circle_polygon_area(&cell.vertices, center, t.max(0.0)),
                    VolumeMethod::Exact2d,
                )
            })
            .collect(),
        3 => profile_3d(cell, center, ts, mc_samples, rng),
        _ => panic!("unsupported dimension {dim}"),
    }
}

/// Single-radius convenience wrapper over `ball_cell_profile`.
pub fn ball_cell_volume(
    dim: usize,
    cell: &ConvexCell,
    center: Point,
    t: f64,
    mc_samples: u64,
    rng: &mut ChaCha8Rng,
) -> VolumeEstimate {
    ball_cell_profile(dim, cell, center, &[t], mc_samples, rng)[0]
}

fn interval_overlap(cell: &ConvexCell, center: Point, t: f64) -> VolumeEstimate {
    let lo = cell.vertices[0][0];
    let hi = cell.vertices[cell.vertices.len() - 1][0];
    let len = (hi.min(center[0] + t) - lo.max(center[0] - t)).max(0.0);
    VolumeEstimate::exact(len, VolumeMethod::Exact1d)
}

/// Exact area of `polygon ∩ B(c, r)` for a convex polygon with CCW
/// vertices. Each directed edge contributes the signed area swept from the
/// circle center: straight subsegments inside the disk contribute a
/// triangle, subsegments outside contribute the arc sector between their
/// endpoints. The sum telescopes to the intersection area for any position
/// of the center.
pub fn circle_polygon_area(vertices: &[Point], c: Point, r: f64) -> f64 {
    if r <= 0.0 || vertices.len() < 3 {
        return 0.0;
    }
    let r2 = r * r;
    let cross2 = |a: [f64; 2], b: [f64; 2]| a[0] * b[1] - a[1] * b[0];
    let dot2 = |a: [f64; 2], b: [f64; 2]| a[0] * b[0] + a[1] * b[1];
    let mut area = 0.0;
    for i in 0..vertices.len() {
        let vp = vertices[i];
        let vq = vertices[(i + 1) % vertices.len()];
        let p = [vp[0] - c[0], vp[1] - c[1]];
        let d = [vq[0] - vp[0], vq[1] - vp[1]];

        // Segment-circle crossing parameters in (0, 1).
        let mut cuts = [0.0f64; 2];
        let mut ncuts = 0;
        let a2 = dot2(d, d);
        if a2 > 0.0 {
            let b = dot2(p, d);
            let disc = b * b - a2 * (dot2(p, p) - r2);
            if disc > 0.0 {
                let sq = disc.sqrt();
                for u in [(-b - sq) / a2, (-b + sq) / a2] {
                    if u > 0.0 && u < 1.0 {
                        cuts[ncuts] = u;
                        ncuts += 1;
                    }
                }
            }
        }

        let mut u_prev = 0.0;
        for j in 0..=ncuts {
            let u_next = if j < ncuts { cuts[j] } else { 1.0 };
            if u_next > u_prev {
                let va = [p[0] + u_prev * d[0], p[1] + u_prev * d[1]];
                let vb = [p[0] + u_next * d[0], p[1] + u_next * d[1]];
                let um = 0.5 * (u_prev + u_next);
                let mid = [p[0] + um * d[0], p[1] + um * d[1]];
                if dot2(mid, mid) < r2 {
                    area += 0.5 * cross2(va, vb);
                } else {
                    // Sector between the endpoint directions; tangent
                    // touches land here, which is correct in measure.
                    let ang = cross2(va, vb).atan2(dot2(va, vb));
                    area += 0.5 * r2 * ang;
                }
            }
            u_prev = u_next;
        }
    }
    area.max(0.0)
}

fn dist_to_bbox(p: Point, lo: Point, hi: Point) -> f64 {
    let mut d2 = 0.0;
    for ax in 0..3 {
        let g = (lo[ax] - p[ax]).max(0.0).max(p[ax] - hi[ax]);
        d2 += g * g;
    }
    d2.sqrt()
}

fn profile_3d(
    cell: &ConvexCell,
    center: Point,
    ts: &[f64],
    mc_samples: u64,
    rng: &mut ChaCha8Rng,
) -> Vec<VolumeEstimate> {
    let reach = cell
        .vertices
        .iter()
        .map(|v| linalg::dist(*v, center))
        .fold(0.0, f64::max);
    let gap = dist_to_bbox(center, cell.bbox_lo, cell.bbox_hi);
    let needs_mc = ts.iter().any(|&t| t > gap && t < reach);

    let mut dists: Vec<f64> = Vec::new();
    let mut total = 0u64;
    if needs_mc {
        // Stratified sampling over the bbox; only in-cell points are kept
        // and the exact cell volume scales the empirical distribution.
        let per_stratum = mc_samples.div_ceil(STRATA_PER_AXIS.pow(3)).max(1);
        let lo = cell.bbox_lo;
        let mut ext = [0.0; 3];
        for ax in 0..3 {
            ext[ax] = (cell.bbox_hi[ax] - cell.bbox_lo[ax]) / STRATA_PER_AXIS as f64;
        }
        for s0 in 0..STRATA_PER_AXIS {
            for s1 in 0..STRATA_PER_AXIS {
                for s2 in 0..STRATA_PER_AXIS {
                    for _ in 0..per_stratum {
                        let p = [
                            lo[0] + (s0 as f64 + rng.random::<f64>()) * ext[0],
                            lo[1] + (s1 as f64 + rng.random::<f64>()) * ext[1],
                            lo[2] + (s2 as f64 + rng.random::<f64>()) * ext[2],
                        ];
                        total += 1;
                        if cell.contains(p, 0.0) {
                            dists.push(linalg::dist(p, center));
                        }
                    }
                }
            }
        }
        dists.sort_unstable_by(f64::total_cmp);
    }

    ts.iter()
        .map(|&t| {
            if t <= gap {
                return VolumeEstimate::exact(0.0, VolumeMethod::MonteCarlo);
            }
            if t >= reach {
                return VolumeEstimate::exact(cell.volume, VolumeMethod::MonteCarlo);
            }
            let n = dists.len();
            if n == 0 {
                // No interior sample landed; the cell volume bounds the
                // value and serves as the uncertainty.
                return VolumeEstimate {
                    value: 0.5 * cell.volume,
                    stderr: 0.5 * cell.volume,
                    method: VolumeMethod::MonteCarlo,
                    samples: total,
                };
            }
            let cnt = dists.partition_point(|&d| d <= t);
            let p = cnt as f64 / n as f64;
            let se = (p * (1.0 - p) / n as f64).sqrt().max(0.5 / n as f64);
            VolumeEstimate {
                value: cell.volume * p,
                stderr: cell.volume * se,
                method: VolumeMethod::MonteCarlo,
                samples: total,
            }
        })
        .collect()
}

/// Sampling scheme for the brute-force density oracle.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OracleMode {
    /// Cell-centered regular grid (total budget rounded to a grid).
    Grid,
    /// Uniform random points in the unit cell, seeded.
    MonteCarlo,
}

/// Distances from sample points of the unit cell to their j-th nearest set
/// point, for j = 1..=levels. Row j-1 holds the sorted distances, so the
/// fraction with d_j <= t reads off by binary search. Returns the rows and
/// the actual sample count (the grid mode rounds the budget to a product of
/// per-axis counts).
pub fn oracle_level_distances(
    set: &PeriodicSet,
    levels: usize,
    mode: OracleMode,
    n: u64,
    seed: u64,
) -> (Vec<Vec<f64>>, u64) {
    assert!(levels >= 1 && n >= 1);
    let dim = set.dim();
    let mut positions: Vec<Point> = Vec::new();
    match mode {
        OracleMode::Grid => {
            let per_axis = ((n as f64).powf(1.0 / dim as f64).round() as u64).max(2);
            let mut counts = [1u64; 3];
            counts[..dim].fill(per_axis);
            for i0 in 0..counts[0] {
                for i1 in 0..counts[1] {
                    for i2 in 0..counts[2] {
                        let mut f = [0.0; 3];
                        for (ax, &i) in [i0, i1, i2].iter().enumerate().take(dim) {
                            f[ax] = (i as f64 + 0.5) / counts[ax] as f64;
                        }
                        positions.push(set.lattice().cartesian(f));
                    }
                }
            }
        }
        OracleMode::MonteCarlo => {
            let mut rng = stream_rng(seed, &[levels as u64]);
            for _ in 0..n {
                let mut f = [0.0; 3];
                for item in f.iter_mut().take(dim) {
                    *item = rng.random::<f64>();
                }
                positions.push(set.lattice().cartesian(f));
            }
        }
    }
    let total = positions.len() as u64;
    let per_sample: Vec<Vec<f64>> = positions
        .par_iter()
        .map(|&x| {
            set.nearest_neighbors(x, levels)
                .iter()
                .map(|cp| cp.distance)
                .collect()
        })
        .collect();
    let mut rows = vec![Vec::with_capacity(positions.len()); levels];
    for sample in &per_sample {
        for (j, &d) in sample.iter().enumerate() {
            rows[j].push(d);
        }
    }
    for row in &mut rows {
        row.sort_unstable_by(f64::total_cmp);
    }
    (rows, total)
}

/// Brute-force coverage fractions psi_0..psi_kmax at radius t: entry k is
/// the fraction of unit-cell samples whose k-th nearest set point lies
/// within t (entry 0 is identically 1).
pub fn oracle_psi(
    set: &PeriodicSet,
    kmax: usize,
    t: f64,
    mode: OracleMode,
    n: u64,
    seed: u64,
) -> Vec<f64> {
    let (rows, total) = oracle_level_distances(set, kmax, mode, n, seed);
    std::iter::once(1.0)
        .chain(
            rows.iter()
                .map(|row| row.partition_point(|&d| d <= t) as f64 / total as f64),
        )
        .collect()
}
