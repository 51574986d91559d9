//! Comparison of periodic sets: bottleneck distance over a common lattice,
//! fingerprint distance, and the perturbation-stability harness.
//!
//! With a shared lattice, the bottleneck distance between two infinite
//! periodic sets reduces to a minimax matching of the motifs under torus
//! distance: the optimum is the smallest cost c such that the bipartite
//! graph of pairs with cost <= c has a perfect matching, found by binary
//! search over the sorted cost multiset.

use crate::error::{Error, Result};
use crate::fingerprint::{self, DensityTable, FingerprintConfig};
use crate::geometry::{Lattice, PeriodicSet};
use crate::linalg::{self, Point};
use crate::rng::{sample_in_ball, stream_rng, stream_seed};

/// Which distances a comparison computes.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Metric {
    Fingerprint,
    Bottleneck,
    Both,
}

/// Result of comparing two periodic sets.
#[derive(Clone, Debug)]
pub struct ComparisonReport {
    pub d_b: Option<f64>,
    pub d_f: Option<f64>,
    /// 13 R^2 / r^3, present only in dimension 3 where it is meaningful.
    pub lipschitz_c: Option<f64>,
    /// Whether d_f <= C d_b + 1e-9; present when all three are.
    pub bound_satisfied: Option<bool>,
    /// Packing and covering radii of the first set.
    pub packing: f64,
    pub covering: f64,
}

/// Normalizes a reduced basis deterministically: each column is replaced
/// by the lexicographically larger of itself and its negation, then
/// columns are sorted by (norm, lexicographic order). Input order and
/// harmless sign flips no longer matter after this.
fn normalized_columns(lat: &Lattice) -> Vec<Point> {
    let dim = lat.dim();
    let mut cols: Vec<Point> = (0..dim).map(|c| lat.column(c)).collect();
    for col in &mut cols {
        // Flip so the first nonzero component is positive, and scrub
        // negative zeros so lexicographic ordering cannot see them.
        let flip = col.iter().find(|&&x| x != 0.0).is_some_and(|&x| x < 0.0);
        for x in col.iter_mut() {
            if flip {
                *x = -*x;
            }
            *x += 0.0;
        }
    }
    cols.sort_by(|a, b| {
        linalg::norm(*a)
            .total_cmp(&linalg::norm(*b))
            .then_with(|| lex_cmp(a, b))
    });
    cols
}

fn lex_cmp(a: &Point, b: &Point) -> std::cmp::Ordering {
    a[0].total_cmp(&b[0])
        .then(a[1].total_cmp(&b[1]))
        .then(a[2].total_cmp(&b[2]))
}

/// Default basis-agreement tolerance for `common_lattice_check`.
pub fn default_lattice_tol(a: &PeriodicSet) -> f64 {
    1e-9 * a.reduced_lattice().max_column_norm()
}

/// Verifies that two sets live on the same lattice and have motifs of the
/// same size. Both bases are reduced and normalized; entrywise agreement
/// within `tol` is required. Returns the shared (reduced) lattice.
pub fn common_lattice_check(
    a: &PeriodicSet,
    b: &PeriodicSet,
    tol: f64,
) -> Result<Lattice> {
    if a.dim() != b.dim() {
        return Err(Error::NoCommonLattice { deviation: f64::INFINITY });
    }
    let ca = normalized_columns(a.reduced_lattice());
    let cb = normalized_columns(b.reduced_lattice());
    let mut deviation = 0.0f64;
    for (x, y) in ca.iter().zip(&cb) {
        for ax in 0..3 {
            deviation = deviation.max((x[ax] - y[ax]).abs());
        }
    }
    if deviation > tol {
        return Err(Error::NoCommonLattice { deviation });
    }
    if a.motif_len() != b.motif_len() {
        return Err(Error::MotifCardinalityMismatch {
            a: a.motif_len(),
            b: b.motif_len(),
        });
    }
    Lattice::new(
        a.dim(),
        &(0..a.dim()).map(|c| a.reduced_lattice().column(c)).collect::<Vec<_>>(),
    )
}

/// Tries to grow an augmenting path from left vertex `i` among edges with
/// cost at most `limit`.
fn augment(
    i: usize,
    cost: &[Vec<f64>],
    limit: f64,
    visited: &mut [bool],
    matched_to: &mut [usize],
) -> bool {
    let m = cost.len();
    for j in 0..m {
        if cost[i][j] <= limit && !visited[j] {
            visited[j] = true;
            if matched_to[j] == usize::MAX
                || augment(matched_to[j], cost, limit, visited, matched_to)
            {
                matched_to[j] = i;
                return true;
            }
        }
    }
    false
}

fn has_perfect_matching(cost: &[Vec<f64>], limit: f64) -> bool {
    let m = cost.len();
    let mut matched_to = vec![usize::MAX; m];
    for i in 0..m {
        let mut visited = vec![false; m];
        if !augment(i, cost, limit, &mut visited, &mut matched_to) {
            return false;
        }
    }
    true
}

/// Bottleneck distance between two periodic sets over a verified common
/// lattice: the minimax torus-distance matching of the motifs. Exact to
/// the precision of the cost matrix (the result is one of its entries, or
/// zero for empty-cost corner cases).
pub fn bottleneck_distance(a: &PeriodicSet, b: &PeriodicSet) -> Result<f64> {
    common_lattice_check(a, b, default_lattice_tol(a))?;
    let m = a.motif_len();
    let mut cost = vec![vec![0.0; m]; m];
    let mut values = Vec::with_capacity(m * m);
    for i in 0..m {
        for j in 0..m {
            let c = a.torus_distance_cart(a.position(i), b.position(j));
            cost[i][j] = c;
            values.push(c);
        }
    }
    values.sort_unstable_by(f64::total_cmp);
    values.dedup();
    // Smallest threshold admitting a perfect matching; costs are the only
    // candidate optima.
    let mut lo = 0usize;
    let mut hi = values.len() - 1;
    debug_assert!(has_perfect_matching(&cost, values[hi]));
    while lo < hi {
        let mid = lo + (hi - lo) / 2;
        if has_perfect_matching(&cost, values[mid]) {
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    Ok(values[lo])
}

/// Displaces every motif point by an independent uniform vector in the
/// closed ball of radius `delta`, deterministically per seed. The lattice
/// is unchanged, so the result stays comparable to the input.
pub fn perturb(set: &PeriodicSet, delta: f64, seed: u64) -> Result<PeriodicSet> {
    if !(delta >= 0.0 && delta.is_finite()) {
        return Err(Error::InvalidConfig("delta must be finite and nonnegative".into()));
    }
    let r = set.packing_radius();
    if delta >= r {
        return Err(Error::DeltaTooLarge { delta, packing: r });
    }
    let mut rng = stream_rng(seed, &[set.motif_len() as u64]);
    let dim = set.dim();
    let positions: Vec<Point> = (0..set.motif_len())
        .map(|i| linalg::add(set.position(i), sample_in_ball(&mut rng, dim, delta)))
        .collect();
    PeriodicSet::from_cartesian(
        set.lattice().clone(),
        &positions,
        set.labels().map(|l| l.to_vec()),
    )
}

/// One perturbation trial of the stability harness.
#[derive(Clone, Debug)]
pub struct StabilityTrial {
    pub trial: usize,
    pub d_b: f64,
    pub d_f: f64,
    /// d_f / d_b; 0 when both vanish, infinite when only d_b does.
    pub ratio: f64,
    /// d_f <= C d_b + 1e-9; absent outside dimension 3.
    pub bound_ok: Option<bool>,
}

/// Outcome of `stability_trial`: per-trial distances plus the Lipschitz
/// verdict where the constant is meaningful.
#[derive(Clone, Debug)]
pub struct StabilityReport {
    pub delta: f64,
    pub packing: f64,
    pub covering: f64,
    /// 13 R^2 / r^3 in dimension 3, absent otherwise (constant not
    /// established elsewhere; ratios are still reported).
    pub lipschitz_c: Option<f64>,
    pub trials: Vec<StabilityTrial>,
    pub max_ratio: f64,
    pub all_bounds_hold: Option<bool>,
}

/// Slack added to Lipschitz bound checks so exact-zero cases compare
/// cleanly.
pub const BOUND_SLACK: f64 = 1e-9;

/// Computes the Lipschitz constant 13 R^2 / r^3 for a 3-dimensional set.
pub fn lipschitz_constant(packing: f64, covering: f64) -> f64 {
    13.0 * covering * covering / (packing * packing * packing)
}

/// Runs `trials` perturbation rounds at amplitude `delta`: each round
/// perturbs the set, measures the bottleneck and fingerprint distances to
/// the original, and in dimension 3 checks d_f <= 13 R^2/r^3 d_b.
pub fn stability_trial(
    set: &PeriodicSet,
    delta: f64,
    trials: usize,
    cfg: &FingerprintConfig,
    seed: u64,
) -> Result<StabilityReport> {
    let radii = set.radii(set.default_covering_tol());
    if delta >= 0.5 * radii.packing {
        return Err(Error::DeltaTooLarge { delta, packing: radii.packing });
    }
    let lipschitz_c = if set.dim() == 3 {
        Some(lipschitz_constant(radii.packing, radii.covering))
    } else {
        None
    };
    // Pin the grid to the unperturbed set so every trial's table lives on
    // the same radii.
    let mut cfg = cfg.clone();
    if cfg.t_max.is_none() {
        cfg.t_max = Some(fingerprint::default_tgrid(set, cfg.kmax, 2)[1]);
    }
    let cfg = &cfg;
    let base = fingerprint::fingerprint(set, cfg)?;
    let mut out = Vec::with_capacity(trials);
    let mut max_ratio = 0.0f64;
    let mut all_ok = true;
    for trial in 0..trials {
        let q = perturb(set, delta, stream_seed(seed, &[TRIAL_TAG, trial as u64]))?;
        let d_b = bottleneck_distance(set, &q)?;
        let table = fingerprint::fingerprint(&q, cfg)?;
        let d_f = fingerprint::fingerprint_distance(&base, &table)?;
        let ratio = if d_b > 0.0 {
            d_f / d_b
        } else if d_f == 0.0 {
            0.0
        } else {
            f64::INFINITY
        };
        max_ratio = max_ratio.max(ratio);
        let bound_ok = lipschitz_c.map(|c| d_f <= c * d_b + BOUND_SLACK);
        if bound_ok == Some(false) {
            all_ok = false;
        }
        out.push(StabilityTrial { trial, d_b, d_f, ratio, bound_ok });
    }
    Ok(StabilityReport {
        delta,
        packing: radii.packing,
        covering: radii.covering,
        lipschitz_c,
        trials: out,
        max_ratio,
        all_bounds_hold: lipschitz_c.map(|_| all_ok),
    })
}

const TRIAL_TAG: u64 = 0x7472_6961;

/// Compares two sets by the requested metrics. The bottleneck distance
/// requires a common lattice; the fingerprint distance requires both
/// tables on the same grid, which this function arranges by sharing `cfg`.
pub fn compare_sets(
    a: &PeriodicSet,
    b: &PeriodicSet,
    cfg: &FingerprintConfig,
    metric: Metric,
) -> Result<(ComparisonReport, Option<(DensityTable, DensityTable)>)> {
    let radii = a.radii(a.default_covering_tol());
    let mut report = ComparisonReport {
        d_b: None,
        d_f: None,
        lipschitz_c: (a.dim() == 3)
            .then(|| lipschitz_constant(radii.packing, radii.covering)),
        bound_satisfied: None,
        packing: radii.packing,
        covering: radii.covering,
    };
    if metric != Metric::Fingerprint {
        report.d_b = Some(bottleneck_distance(a, b)?);
    }
    let mut tables = None;
    if metric != Metric::Bottleneck {
        if a.dim() != b.dim() {
            return Err(Error::GridMismatch(format!(
                "dimension {} vs {}",
                a.dim(),
                b.dim()
            )));
        }
        // A shared explicit grid: the default upper end depends on each
        // set's covering radius, so pin t_max to the larger one.
        let mut shared = cfg.clone();
        if shared.t_max.is_none() {
            let ta = fingerprint::default_tgrid(a, cfg.kmax, 2)[1];
            let tb = fingerprint::default_tgrid(b, cfg.kmax, 2)[1];
            shared.t_max = Some(ta.max(tb));
        }
        let fa = fingerprint::fingerprint(a, &shared)?;
        let fb = fingerprint::fingerprint(b, &shared)?;
        report.d_f = Some(fingerprint::fingerprint_distance(&fa, &fb)?);
        tables = Some((fa, fb));
    }
    if let (Some(db), Some(df), Some(c)) = (report.d_b, report.d_f, report.lipschitz_c) {
        report.bound_satisfied = Some(df <= c * db + BOUND_SLACK);
    }
    Ok((report, tables))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fingerprint::Method;
    use crate::volumes::OracleMode;
    use rand::Rng;

    fn z3(motif: Vec<Point>) -> PeriodicSet {
        PeriodicSet::new(
            Lattice::new(3, &[[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]).unwrap(),
            motif,
            None,
        )
        .unwrap()
    }

    fn z2(motif: Vec<Point>) -> PeriodicSet {
        PeriodicSet::new(
            Lattice::new(2, &[[1.0, 0.0, 0.0], [0.0, 1.0, 0.0]]).unwrap(),
            motif,
            None,
        )
        .unwrap()
    }

    #[test]
    fn common_lattice_accepts_sign_and_order_changes() {
        let a = z2(vec![[0.0; 3]]);
        let b = PeriodicSet::new(
            Lattice::new(2, &[[0.0, -1.0, 0.0], [-1.0, 0.0, 0.0]]).unwrap(),
            vec![[0.0; 3]],
            None,
        )
        .unwrap();
        assert!(common_lattice_check(&a, &b, default_lattice_tol(&a)).is_ok());
    }

    #[test]
    fn common_lattice_rejects_distinct_lattices_and_motif_sizes() {
        let a = z2(vec![[0.0; 3]]);
        let hex = PeriodicSet::new(
            Lattice::new(2, &[[1.0, 0.0, 0.0], [0.5, 3f64.sqrt() / 2.0, 0.0]]).unwrap(),
            vec![[0.0; 3]],
            None,
        )
        .unwrap();
        assert!(matches!(
            common_lattice_check(&a, &hex, default_lattice_tol(&a)),
            Err(Error::NoCommonLattice { .. })
        ));
        let two = z2(vec![[0.0; 3], [0.5, 0.5, 0.0]]);
        assert!(matches!(
            common_lattice_check(&a, &two, default_lattice_tol(&a)),
            Err(Error::MotifCardinalityMismatch { a: 1, b: 2 })
        ));
    }

    #[test]
    fn bottleneck_matches_hand_computed_cases() {
        let a = z2(vec![[0.0; 3]]);
        let b = z2(vec![[0.1, 0.0, 0.0]]);
        assert_eq!(bottleneck_distance(&a, &b).unwrap(), 0.1);

        let c = z2(vec![[0.0; 3], [0.5, 0.5, 0.0]]);
        let d = z2(vec![[0.05, 0.0, 0.0], [0.5, 0.55, 0.0]]);
        let db = bottleneck_distance(&c, &d).unwrap();
        assert!((db - 0.05).abs() < 1e-12, "d_B = {db}");

        assert_eq!(bottleneck_distance(&a, &a).unwrap(), 0.0);
    }

    #[test]
    fn bottleneck_is_symmetric_and_triangular() {
        let mut rng = stream_rng(21, &[0]);
        for _ in 0..8 {
            let mut motifs: Vec<Vec<Point>> = Vec::new();
            for _ in 0..3 {
                motifs.push(
                    (0..3)
                        .map(|_| [rng.random::<f64>(), rng.random::<f64>(), 0.0])
                        .collect(),
                );
            }
            let sets: Vec<PeriodicSet> =
                motifs.into_iter().map(z2).collect();
            let dab = bottleneck_distance(&sets[0], &sets[1]).unwrap();
            let dba = bottleneck_distance(&sets[1], &sets[0]).unwrap();
            assert_eq!(dab.to_bits(), dba.to_bits());
            let dbc = bottleneck_distance(&sets[1], &sets[2]).unwrap();
            let dac = bottleneck_distance(&sets[0], &sets[2]).unwrap();
            assert!(dac <= dab + dbc + 1e-12);
        }
    }

    #[test]
    fn perturbation_is_bounded_by_delta() {
        let set = z2(vec![[0.0; 3], [0.31, 0.62, 0.0]]);
        let same = perturb(&set, 0.0, 5).unwrap();
        assert_eq!(set.content_hash(), same.content_hash());
        for seed in 0..10u64 {
            let q = perturb(&set, 0.05, seed).unwrap();
            let db = bottleneck_distance(&set, &q).unwrap();
            assert!(db <= 0.05 + 1e-12, "seed {seed}: {db}");
        }
        assert!(matches!(
            perturb(&set, 1.0, 0),
            Err(Error::DeltaTooLarge { .. })
        ));
    }

    #[test]
    fn stability_reports_ratios_without_a_constant_in_2d() {
        let set = z2(vec![[0.0; 3]]);
        let mut cfg = FingerprintConfig::new(2, 16);
        cfg.seed = 3;
        let report = stability_trial(&set, 0.02, 3, &cfg, 9).unwrap();
        assert!(report.lipschitz_c.is_none());
        assert!(report.all_bounds_hold.is_none());
        assert_eq!(report.trials.len(), 3);
        for t in &report.trials {
            assert!(t.d_b <= 0.02 + 1e-12);
            assert!(t.d_f.is_finite());
            assert!(t.bound_ok.is_none());
        }
    }

    #[test]
    fn stability_confirms_the_lipschitz_bound_on_the_cubic_lattice() {
        let set = z3(vec![[0.0; 3]]);
        let mut cfg = FingerprintConfig::new(2, 12);
        cfg.mc_samples = 4_000;
        cfg.seed = 1;
        let report = stability_trial(&set, 0.02, 2, &cfg, 4).unwrap();
        let c = report.lipschitz_c.unwrap();
        // r = 1/2 and R = sqrt(3)/2 give 13 R^2 / r^3 = 78.
        assert!((c - 78.0).abs() < 1.0, "C = {c}");
        assert_eq!(report.all_bounds_hold, Some(true));
    }

    #[test]
    fn compare_reports_both_metrics() {
        let a = z2(vec![[0.0; 3]]);
        let b = z2(vec![[0.1, 0.0, 0.0]]);
        let mut cfg = FingerprintConfig::new(2, 24);
        cfg.method = Method::Oracle;
        cfg.oracle_mode = OracleMode::Grid;
        cfg.oracle_samples = 40_000;
        let (report, tables) = compare_sets(&a, &b, &cfg, Metric::Both).unwrap();
        assert_eq!(report.d_b, Some(0.1));
        // Translates have identical fingerprints; grid sampling sees a
        // shifted but equal measure, so d_f stays at the sampling noise.
        assert!(report.d_f.unwrap() < 0.02);
        assert!(tables.is_some());
        assert!(report.lipschitz_c.is_none());
    }
}
