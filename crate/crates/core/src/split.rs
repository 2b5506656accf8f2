//! Beam splitting: grouping MA elements into sub-beams with a prescribed
//! power ratio, and composing multi-region OPA target fields.
//!
//! A partition assigns each element to a group `1..=m` or to `0` (idle).
//! Partitions are ranked lexicographically: one whose ratio deviation is within
//! `ε` beats any that is not; among feasible ones the larger total wins; among
//! infeasible ones the smaller deviation wins.

use std::cmp::Ordering;

use ndarray::Array2;
use num_complex::Complex64;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::geom::Vec3;
use crate::grid::FieldGrid;
use crate::ma::{aim_array, element_incident_power, reflected_power, GaussianBeam, MaError, MirrorArray};

#[derive(Error, Debug, Clone, PartialEq)]
pub enum SplitError {
    #[error("invalid split spec: {0}")]
    InvalidSpec(&'static str),
    #[error("invalid solver config: {0}")]
    InvalidConfig(&'static str),
    #[error("target {target}: {source}")]
    Geometry {
        target: usize,
        #[source]
        source: MaError,
    },
    #[error("no partition within the ratio tolerance (best deviation {best_deviation:.6})")]
    InfeasibleRatio { best_deviation: f64, best: Box<Partition> },
    #[error("exhaustive search over {states:.3e} states exceeds the cap of {cap:.0e}")]
    TooLarge { states: f64, cap: f64 },
    #[error("regions {0} and {1} overlap")]
    OverlappingRegions(usize, usize),
    #[error("region {0} extends outside the grid window")]
    RegionOutOfWindow(usize),
}

/// One sub-beam. For MA splitting `center` is the 3-D receiver point; for OPA
/// target fields only its `x`, `y` (focal-plane position) are used, together
/// with `radius`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitTarget {
    pub center: Vec3,
    pub weight: f64,
    pub radius: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SplitSpec {
    targets: Vec<SplitTarget>,
}

impl SplitSpec {
    pub fn new(targets: Vec<SplitTarget>) -> Result<Self, SplitError> {
        if targets.is_empty() {
            return Err(SplitError::InvalidSpec("at least one target is required"));
        }
        for t in &targets {
            if !(t.weight > 0.0 && t.weight.is_finite()) {
                return Err(SplitError::InvalidSpec("weights must be positive and finite"));
            }
            if !(t.radius >= 0.0 && t.radius.is_finite()) || !t.center.is_finite() {
                return Err(SplitError::InvalidSpec("centres and radii must be finite, radii non-negative"));
            }
        }
        Ok(Self { targets })
    }

    pub fn targets(&self) -> &[SplitTarget] {
        &self.targets
    }

    pub fn len(&self) -> usize {
        self.targets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.targets.is_empty()
    }

    pub fn weights(&self) -> Vec<f64> {
        self.targets.iter().map(|t| t.weight).collect()
    }

    pub fn centers(&self) -> Vec<Vec3> {
        self.targets.iter().map(|t| t.center).collect()
    }

    /// Fails if two focal-plane disks intersect (touching is allowed).
    pub fn check_disjoint(&self) -> Result<(), SplitError> {
        for (a, ta) in self.targets.iter().enumerate() {
            for (b, tb) in self.targets.iter().enumerate().skip(a + 1) {
                let d = (ta.center.x - tb.center.x).hypot(ta.center.y - tb.center.y);
                if d < ta.radius + tb.radius {
                    return Err(SplitError::OverlappingRegions(a, b));
                }
            }
        }
        Ok(())
    }
}

/// Deliverable power `p_ij·cosθ_ij` of every element toward one target, in W.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerMatrix {
    values: Array2<f64>,
}

impl PowerMatrix {
    pub fn new(values: Array2<f64>) -> Result<Self, SplitError> {
        if values.is_empty() {
            return Err(SplitError::InvalidSpec("power matrix is empty"));
        }
        if values.iter().any(|v| !(*v >= 0.0 && v.is_finite())) {
            return Err(SplitError::InvalidSpec("power matrix entries must be finite and non-negative"));
        }
        Ok(Self { values })
    }

    pub fn values(&self) -> &Array2<f64> {
        &self.values
    }

    pub fn rows(&self) -> usize {
        self.values.nrows()
    }

    pub fn cols(&self) -> usize {
        self.values.ncols()
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Entry by row-major element index.
    pub fn get(&self, index: usize) -> f64 {
        self.values[[index / self.cols(), index % self.cols()]]
    }
}

/// One matrix per target; entry `(i, j)` of matrix `k` is the element's
/// incident power times the cosine of its deflection toward target `k`.
pub fn power_matrices(
    array: &MirrorArray,
    beam: &GaussianBeam,
    spec: &SplitSpec,
) -> Result<Vec<PowerMatrix>, SplitError> {
    let incident: Vec<f64> = array.elements().par_iter().map(|e| element_incident_power(beam, e)).collect();
    spec.targets
        .iter()
        .enumerate()
        .map(|(k, t)| {
            let aim = aim_array(array, beam, t.center).map_err(|source| SplitError::Geometry { target: k, source })?;
            let values = Array2::from_shape_fn((array.rows(), array.cols()), |(i, j)| {
                let idx = array.index(i, j);
                let theta = aim.entries()[idx].expect("aim_array aims every element").theta;
                reflected_power(incident[idx], theta)
            });
            PowerMatrix::new(values)
        })
        .collect()
}

/// Element-to-group assignment with per-group delivered power.
#[derive(Debug, Clone, PartialEq)]
pub struct Partition {
    rows: usize,
    cols: usize,
    /// Row-major; `0` is idle, `k ≥ 1` is group `k`.
    assignment: Vec<usize>,
    group_power: Vec<f64>,
}

impl Partition {
    /// Builds a partition and computes its group powers from `matrices`.
    pub fn from_assignment(matrices: &[PowerMatrix], assignment: Vec<usize>) -> Result<Self, SplitError> {
        let (rows, cols) = check_matrices(matrices)?;
        if assignment.len() != rows * cols {
            return Err(SplitError::InvalidSpec("assignment length does not match the array"));
        }
        if assignment.iter().any(|&g| g > matrices.len()) {
            return Err(SplitError::InvalidSpec("assignment refers to a missing group"));
        }
        let group_power = recompute(matrices, &assignment);
        Ok(Self { rows, cols, assignment, group_power })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn assignment(&self) -> &[usize] {
        &self.assignment
    }

    pub fn group(&self, row: usize, col: usize) -> usize {
        self.assignment[row * self.cols + col]
    }

    /// `P_k` for `k = 1..=m`, stored at index `k - 1`.
    pub fn group_power(&self) -> &[f64] {
        &self.group_power
    }

    pub fn total_power(&self) -> f64 {
        self.group_power.iter().sum()
    }

    pub fn group_size(&self, group: usize) -> usize {
        self.assignment.iter().filter(|&&g| g == group).count()
    }

    /// `P_k / ΣP`; all zeros when nothing is delivered.
    pub fn achieved_shares(&self) -> Vec<f64> {
        let total = self.total_power();
        self.group_power.iter().map(|p| if total > 0.0 { p / total } else { 0.0 }).collect()
    }

    pub fn deviation(&self, weights: &[f64]) -> f64 {
        ratio_deviation(&self.group_power, weights)
    }
}

/// `max_k |P_k/ΣP - w_k/Σw|`; with `ΣP = 0` this is `max_k w_k/Σw`.
pub fn ratio_deviation(powers: &[f64], weights: &[f64]) -> f64 {
    let total: f64 = powers.iter().sum();
    let wsum: f64 = weights.iter().sum();
    powers
        .iter()
        .zip(weights)
        .map(|(p, w)| {
            let share = if total > 0.0 { p / total } else { 0.0 };
            (share - w / wsum).abs()
        })
        .fold(0.0, f64::max)
}

fn recompute(matrices: &[PowerMatrix], assignment: &[usize]) -> Vec<f64> {
    let mut p = vec![0.0; matrices.len()];
    for (idx, &g) in assignment.iter().enumerate() {
        if g > 0 {
            p[g - 1] += matrices[g - 1].get(idx);
        }
    }
    p
}

fn check_matrices(matrices: &[PowerMatrix]) -> Result<(usize, usize), SplitError> {
    let first = matrices.first().ok_or(SplitError::InvalidSpec("at least one target is required"))?;
    let shape = (first.rows(), first.cols());
    if matrices.iter().any(|m| (m.rows(), m.cols()) != shape) {
        return Err(SplitError::InvalidSpec("power matrices differ in shape"));
    }
    Ok(shape)
}

fn check_weights(matrices: &[PowerMatrix], weights: &[f64]) -> Result<(), SplitError> {
    if weights.len() != matrices.len() {
        return Err(SplitError::InvalidSpec("one weight per power matrix is required"));
    }
    if weights.iter().any(|w| !(*w > 0.0 && w.is_finite())) {
        return Err(SplitError::InvalidSpec("weights must be positive and finite"));
    }
    Ok(())
}

fn check_tol(ratio_tol: f64) -> Result<(), SplitError> {
    if !(ratio_tol > 0.0 && ratio_tol < 0.5) {
        return Err(SplitError::InvalidConfig("ratio tolerance must lie in (0, 0.5)"));
    }
    Ok(())
}

/// Lexicographic score of a partition; larger is better.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Score {
    feasible: bool,
    total: f64,
    deviation: f64,
}

impl Score {
    fn of(powers: &[f64], weights: &[f64], tol: f64) -> Self {
        let deviation = ratio_deviation(powers, weights);
        Self { feasible: deviation <= tol, total: powers.iter().sum(), deviation }
    }

    fn cmp(&self, other: &Score) -> Ordering {
        match (self.feasible, other.feasible) {
            (true, false) => Ordering::Greater,
            (false, true) => Ordering::Less,
            (true, true) => self.total.total_cmp(&other.total),
            (false, false) => {
                other.deviation.total_cmp(&self.deviation).then(self.total.total_cmp(&other.total))
            }
        }
    }

    fn beats(&self, other: &Score) -> bool {
        self.cmp(other) == Ordering::Greater
    }
}

/// Relative margin a move must gain to count as an improvement; stops the
/// search cycling on round-off.
const IMPROVEMENT_EPS: f64 = 1e-12;

impl Score {
    fn improves_on(&self, other: &Score) -> bool {
        match (self.feasible, other.feasible) {
            (true, true) => self.total > other.total * (1.0 + IMPROVEMENT_EPS),
            (false, false) => {
                self.deviation < other.deviation - IMPROVEMENT_EPS
                    || ((self.deviation - other.deviation).abs() <= IMPROVEMENT_EPS
                        && self.total > other.total * (1.0 + IMPROVEMENT_EPS))
            }
            _ => self.beats(other),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitConfig {
    /// Admissible ratio deviation `ε`, in `(0, 0.5)`.
    pub ratio_tol: f64,
    pub restarts: usize,
    pub seed: u64,
}

impl Default for SplitConfig {
    fn default() -> Self {
        Self { ratio_tol: 0.05, restarts: 32, seed: 0 }
    }
}

fn finish(partition: Partition, weights: &[f64], tol: f64) -> Result<Partition, SplitError> {
    let deviation = partition.deviation(weights);
    if deviation <= tol {
        Ok(partition)
    } else {
        Err(SplitError::InfeasibleRatio { best_deviation: deviation, best: Box::new(partition) })
    }
}

/// Greedy assignment: each element, in `order`, joins the group with the
/// largest weighted deficit `w_k/Σw·(ΣP + p_k) - P_k`.
fn greedy(matrices: &[PowerMatrix], weights: &[f64], order: &[usize]) -> Vec<usize> {
    let m = matrices.len();
    let wsum: f64 = weights.iter().sum();
    let mut assignment = vec![0; matrices[0].len()];
    let mut powers = vec![0.0; m];
    for &idx in order {
        let total: f64 = powers.iter().sum();
        let mut best = (f64::NEG_INFINITY, 0);
        for k in 0..m {
            let p = matrices[k].get(idx);
            let deficit = weights[k] / wsum * (total + p) - powers[k];
            if deficit > best.0 {
                best = (deficit, k);
            }
        }
        assignment[idx] = best.1 + 1;
        powers[best.1] += matrices[best.1].get(idx);
    }
    assignment
}

/// First-improvement descent over single moves (including to idle) and
/// pairwise swaps, scanning elements in `order`.
fn local_search(matrices: &[PowerMatrix], weights: &[f64], tol: f64, order: &[usize], assignment: &mut [usize]) {
    let m = matrices.len();
    let mut powers = recompute(matrices, assignment);
    let mut score = Score::of(&powers, weights, tol);
    let power = |g: usize, idx: usize| if g == 0 { 0.0 } else { matrices[g - 1].get(idx) };
    let mut trial = powers.clone();
    loop {
        let mut improved = false;
        'moves: for &i in order {
            let from = assignment[i];
            for to in 0..=m {
                if to == from {
                    continue;
                }
                trial.copy_from_slice(&powers);
                if from > 0 {
                    trial[from - 1] -= power(from, i);
                }
                if to > 0 {
                    trial[to - 1] += power(to, i);
                }
                let s = Score::of(&trial, weights, tol);
                if s.improves_on(&score) {
                    assignment[i] = to;
                    // Recompute from scratch so drift never accumulates.
                    powers = recompute(matrices, assignment);
                    score = Score::of(&powers, weights, tol);
                    improved = true;
                    break 'moves;
                }
            }
        }
        if !improved {
            'swaps: for (a, &i) in order.iter().enumerate() {
                for &j in &order[a + 1..] {
                    let (gi, gj) = (assignment[i], assignment[j]);
                    if gi == gj {
                        continue;
                    }
                    trial.copy_from_slice(&powers);
                    if gi > 0 {
                        trial[gi - 1] += power(gi, j) - power(gi, i);
                    }
                    if gj > 0 {
                        trial[gj - 1] += power(gj, i) - power(gj, j);
                    }
                    let s = Score::of(&trial, weights, tol);
                    if s.improves_on(&score) {
                        assignment.swap(i, j);
                        powers = recompute(matrices, assignment);
                        score = Score::of(&powers, weights, tol);
                        improved = true;
                        break 'swaps;
                    }
                }
            }
        }
        if !improved {
            return;
        }
    }
}

/// Heuristic solution of the grouping problem.
///
/// Restart 0 seeds the greedy pass with elements in descending order of their
/// best deliverable power; restart `r > 0` uses a shuffle drawn from stream `r`
/// of the configured seed. Each seed is refined by local search; the best
/// result wins, ties going to the lowest restart index.
pub fn optimize_grouping(
    matrices: &[PowerMatrix],
    weights: &[f64],
    config: &SplitConfig,
) -> Result<Partition, SplitError> {
    check_matrices(matrices)?;
    check_weights(matrices, weights)?;
    check_tol(config.ratio_tol)?;
    let n = matrices[0].len();
    let best_power = |idx: usize| matrices.iter().map(|m| m.get(idx)).fold(0.0, f64::max);
    let mut sorted: Vec<usize> = (0..n).collect();
    sorted.sort_by(|&a, &b| best_power(b).total_cmp(&best_power(a)).then(a.cmp(&b)));

    let results: Vec<(Score, Vec<usize>)> = (0..config.restarts.max(1))
        .into_par_iter()
        .map(|r| {
            let mut order = sorted.clone();
            if r > 0 {
                let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
                rng.set_stream(r as u64);
                order.shuffle(&mut rng);
            }
            let mut assignment = greedy(matrices, weights, &order);
            local_search(matrices, weights, config.ratio_tol, &order, &mut assignment);
            let powers = recompute(matrices, &assignment);
            (Score::of(&powers, weights, config.ratio_tol), assignment)
        })
        .collect();

    let mut best = &results[0];
    for r in &results[1..] {
        if r.0.beats(&best.0) {
            best = r;
        }
    }
    finish(Partition::from_assignment(matrices, best.1.clone())?, weights, config.ratio_tol)
}

/// Largest number of assignments [`brute_force_grouping`] will enumerate.
pub const BRUTE_FORCE_CAP: f64 = 1e7;

/// Global optimum by enumerating all `(m+1)^n` assignments. Ties keep the
/// first assignment in odometer order (element 0 varies fastest).
pub fn brute_force_grouping(matrices: &[PowerMatrix], weights: &[f64], ratio_tol: f64) -> Result<Partition, SplitError> {
    check_matrices(matrices)?;
    check_weights(matrices, weights)?;
    check_tol(ratio_tol)?;
    let m = matrices.len();
    let n = matrices[0].len();
    let states = ((m + 1) as f64).powi(n as i32);
    if states > BRUTE_FORCE_CAP {
        return Err(SplitError::TooLarge { states, cap: BRUTE_FORCE_CAP });
    }
    let mut assignment = vec![0usize; n];
    let mut powers = vec![0.0; m];
    let mut best = (Score::of(&powers, weights, ratio_tol), assignment.clone());
    loop {
        // Odometer increment with incremental power updates.
        let mut pos = 0;
        loop {
            if pos == n {
                let partition = Partition::from_assignment(matrices, best.1)?;
                return finish(partition, weights, ratio_tol);
            }
            let g = assignment[pos];
            if g > 0 {
                powers[g - 1] -= matrices[g - 1].get(pos);
            }
            if g < m {
                assignment[pos] = g + 1;
                powers[g] += matrices[g].get(pos);
                break;
            }
            assignment[pos] = 0;
            pos += 1;
        }
        let s = Score::of(&powers, weights, ratio_tol);
        if s.beats(&best.0) {
            best = (s, assignment.clone());
        }
    }
}

/// Relative slack on `r²` so that samples lying exactly on a disk boundary
/// are not lost to round-off in the centre coordinates.
pub const INCLUSION_SLACK: f64 = 1e-9;

fn region_cells(grid: &FieldGrid, target: SplitTarget) -> impl Iterator<Item = (usize, usize)> + '_ {
    let (cx, cy) = (target.center.x, target.center.y);
    let r2 = target.radius * target.radius * (1.0 + INCLUSION_SLACK);
    let rows = 0..grid.ny();
    rows.flat_map(move |i| (0..grid.nx()).map(move |j| (i, j)))
        .filter(move |&(i, j)| (grid.x(j) - cx).powi(2) + (grid.y(i) - cy).powi(2) <= r2)
}

/// Multi-region target `E = Σ √k_i·E_i` on `grid`'s geometry, where `E_i` is
/// the indicator of disk `i` (samples whose position lies in the disk).
pub fn compose_target_field(spec: &SplitSpec, grid: &FieldGrid) -> Result<FieldGrid, SplitError> {
    spec.check_disjoint()?;
    let (xmin, xmax) = (grid.x(0), grid.x(grid.nx() - 1));
    let (ymin, ymax) = (grid.y(0), grid.y(grid.ny() - 1));
    for (k, t) in spec.targets.iter().enumerate() {
        let (cx, cy, r) = (t.center.x, t.center.y, t.radius);
        if cx - r < xmin || cx + r > xmax || cy - r < ymin || cy + r > ymax {
            return Err(SplitError::RegionOutOfWindow(k));
        }
    }
    let mut out = FieldGrid::new(Array2::zeros(grid.data().dim()), grid.dx(), grid.dy())
        .expect("geometry copied from a valid grid");
    for t in &spec.targets {
        let a = Complex64::new(t.weight.sqrt(), 0.0);
        let cells: Vec<_> = region_cells(grid, *t).collect();
        for (i, j) in cells {
            out.data_mut()[[i, j]] = a;
        }
    }
    Ok(out)
}

/// Energy of `field` inside each target disk (sample-position inclusion).
pub fn region_powers(field: &FieldGrid, spec: &SplitSpec) -> Vec<f64> {
    spec.targets
        .iter()
        .map(|t| region_cells(field, *t).map(|(i, j)| field.data()[[i, j]].norm_sqr()).sum::<f64>() * field.cell_area())
        .collect()
}

/// Number of samples inside each target disk.
pub fn region_sizes(grid: &FieldGrid, spec: &SplitSpec) -> Vec<usize> {
    spec.targets.iter().map(|t| region_cells(grid, *t).count()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn uniform(rows: usize, cols: usize, m: usize, v: f64) -> Vec<PowerMatrix> {
        (0..m).map(|_| PowerMatrix::new(Array2::from_elem((rows, cols), v)).unwrap()).collect()
    }

    #[test]
    fn single_group_takes_everything() {
        let mats = vec![PowerMatrix::new(Array2::from_shape_fn((3, 3), |(i, j)| (i * 3 + j + 1) as f64)).unwrap()];
        let p = optimize_grouping(&mats, &[1.0], &SplitConfig::default()).unwrap();
        assert!(p.assignment().iter().all(|&g| g == 1));
        assert_eq!(p.total_power(), 45.0);
    }

    #[test]
    fn equal_split_of_equal_elements() {
        let mats = uniform(2, 2, 2, 1.5);
        let p = optimize_grouping(&mats, &[1.0, 1.0], &SplitConfig::default()).unwrap();
        assert_eq!(p.group_power(), &[3.0, 3.0]);
        let b = brute_force_grouping(&mats, &[1.0, 1.0], 0.05).unwrap();
        assert_eq!(b.total_power(), p.total_power());
    }

    #[test]
    fn one_element_two_groups_is_infeasible() {
        let mats = uniform(1, 1, 2, 1.0);
        match brute_force_grouping(&mats, &[1.0, 1.0], 0.3) {
            Err(SplitError::InfeasibleRatio { best_deviation, best }) => {
                assert!((best_deviation - 0.5).abs() < 1e-15);
                assert_eq!(best.group_size(0) + best.group_size(1) + best.group_size(2), 1);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn deviation_of_empty_partition() {
        assert_eq!(ratio_deviation(&[0.0, 0.0], &[1.0, 3.0]), 0.75);
        assert!((ratio_deviation(&[1.0, 2.0], &[1.0, 2.0])).abs() < 1e-15);
    }

    #[test]
    fn brute_force_cap() {
        let mats = uniform(4, 4, 3, 1.0);
        assert!(matches!(brute_force_grouping(&mats, &[1.0; 3], 0.05), Err(SplitError::TooLarge { .. })));
    }

    #[test]
    fn rejects_bad_inputs() {
        let mats = uniform(2, 2, 2, 1.0);
        assert!(optimize_grouping(&mats, &[1.0], &SplitConfig::default()).is_err());
        assert!(optimize_grouping(&mats, &[1.0, -1.0], &SplitConfig::default()).is_err());
        let cfg = SplitConfig { ratio_tol: 0.5, ..Default::default() };
        assert!(matches!(optimize_grouping(&mats, &[1.0, 1.0], &cfg), Err(SplitError::InvalidConfig(_))));
        assert!(SplitSpec::new(vec![]).is_err());
    }

    fn disk(x: f64, y: f64, r: f64, w: f64) -> SplitTarget {
        SplitTarget { center: Vec3::new(x, y, 0.0), weight: w, radius: r }
    }

    #[test]
    fn target_field_amplitudes_follow_root_weights() {
        let grid = FieldGrid::zeros(64, 64, 1.0, 1.0).unwrap();
        let spec = SplitSpec::new(vec![disk(-10.0, 0.0, 5.0, 1.0), disk(10.0, 0.0, 5.0, 4.0)]).unwrap();
        let e = compose_target_field(&spec, &grid).unwrap();
        assert_eq!(e.data()[[32, 22]].re, 1.0);
        assert_eq!(e.data()[[32, 42]].re, 2.0);
        assert_eq!(e.data()[[32, 32]].re, 0.0);
        let p = region_powers(&e, &spec);
        assert!((p[1] / p[0] - 4.0).abs() < 1e-12);
    }

    #[test]
    fn target_field_errors() {
        let grid = FieldGrid::zeros(32, 32, 1.0, 1.0).unwrap();
        let overlap = SplitSpec::new(vec![disk(0.0, 0.0, 3.0, 1.0), disk(5.0, 0.0, 3.0, 1.0)]).unwrap();
        assert_eq!(compose_target_field(&overlap, &grid), Err(SplitError::OverlappingRegions(0, 1)));
        let outside = SplitSpec::new(vec![disk(14.0, 0.0, 3.0, 1.0)]).unwrap();
        assert_eq!(compose_target_field(&outside, &grid), Err(SplitError::RegionOutOfWindow(0)));
    }
}
