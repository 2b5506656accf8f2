//! Receiver-side power, pointing-error sweeps and Monte-Carlo fading samples.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use thiserror::Error;

use crate::grid::PowerDensityMap;

#[derive(Error, Debug, Clone, Copy, PartialEq)]
pub enum AnalysisError {
    #[error("receiver radius must be positive and finite")]
    InvalidReceiver,
    #[error("receiver aperture lies wholly outside the map")]
    OutOfWindow,
    #[error("jitter sigma must be finite and non-negative")]
    InvalidSigma,
    #[error("sample count must be at least 1")]
    NoSamples,
}

/// Circular receiver aperture on the observation plane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Receiver {
    pub center: (f64, f64),
    pub radius: f64,
}

impl Receiver {
    pub fn new(center: (f64, f64), radius: f64) -> Result<Self, AnalysisError> {
        if !(radius > 0.0 && radius.is_finite()) || !(center.0.is_finite() && center.1.is_finite()) {
            return Err(AnalysisError::InvalidReceiver);
        }
        Ok(Self { center, radius })
    }

    pub fn shifted(&self, dx: f64, dy: f64) -> Receiver {
        Receiver { center: (self.center.0 + dx, self.center.1 + dy), radius: self.radius }
    }

    pub fn area(&self) -> f64 {
        std::f64::consts::PI * self.radius * self.radius
    }
}

/// Density summed over cells whose centres fall inside the aperture, times
/// the cell area.
pub fn received_power(map: &PowerDensityMap, rx: &Receiver) -> Result<f64, AnalysisError> {
    let (x0, x1, y0, y1) = map.extent();
    let (cx, cy) = rx.center;
    let nearest_x = cx.clamp(x0, x1);
    let nearest_y = cy.clamp(y0, y1);
    if (nearest_x - cx).hypot(nearest_y - cy) >= rx.radius {
        return Err(AnalysisError::OutOfWindow);
    }
    let r = rx.radius;
    let col_range = index_range(cx - r, cx + r, map.x(0), map.dx(), map.nx());
    let row_range = index_range(cy - r, cy + r, map.y(0), map.dy(), map.ny());
    let r2 = r * r * (1.0 + crate::split::INCLUSION_SLACK);
    let values = map.values();
    let mut sum = 0.0;
    for i in row_range {
        let dy = map.y(i) - cy;
        for j in col_range.clone() {
            let dx = map.x(j) - cx;
            if dx * dx + dy * dy <= r2 {
                sum += values[[i, j]];
            }
        }
    }
    Ok(sum * map.cell_area())
}

/// Indices whose centres `start + k·step` may fall in `[lo, hi]`.
fn index_range(lo: f64, hi: f64, start: f64, step: f64, n: usize) -> std::ops::Range<usize> {
    let a = ((lo - start) / step).floor().max(0.0) as usize;
    let b = (((hi - start) / step).ceil() + 1.0).clamp(0.0, n as f64) as usize;
    a.min(n)..b
}

/// One entry of an offset sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepPoint {
    pub dx: f64,
    pub dy: f64,
    /// `Err(OutOfWindow)` when the displaced aperture misses the map.
    pub power: Result<f64, AnalysisError>,
}

/// Received power with the aperture displaced by each offset in turn.
pub fn offset_sweep(map: &PowerDensityMap, rx: &Receiver, offsets: &[(f64, f64)]) -> Vec<SweepPoint> {
    offsets
        .iter()
        .map(|&(dx, dy)| SweepPoint { dx, dy, power: received_power(map, &rx.shifted(dx, dy)) })
        .collect()
}

/// Samples drawn from one seeded substream.
pub const FADING_CHUNK: usize = 1024;

/// Received powers under random pointing error.
#[derive(Debug, Clone, PartialEq)]
pub struct FadingSampleSet {
    pub powers: Vec<f64>,
    pub sigma: f64,
    pub seed: u64,
}

/// Mean, variance and lower tail of a sample set.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FadingSummary {
    pub count: usize,
    pub mean: f64,
    pub variance: f64,
    pub p05: f64,
}

impl FadingSampleSet {
    pub fn len(&self) -> usize {
        self.powers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.powers.is_empty()
    }

    // Sums are taken relative to the first sample, so a constant set has
    // exactly its value as mean and exactly zero variance.
    fn shifted_moments(&self) -> (f64, f64, f64) {
        let p0 = self.powers[0];
        let n = self.powers.len() as f64;
        let m1 = self.powers.iter().map(|p| p - p0).sum::<f64>() / n;
        let m2 = self.powers.iter().map(|p| (p - p0 - m1).powi(2)).sum::<f64>() / n;
        (p0, m1, m2)
    }

    pub fn mean(&self) -> f64 {
        let (p0, m1, _) = self.shifted_moments();
        p0 + m1
    }

    /// Population variance (divides by `n`).
    pub fn variance(&self) -> f64 {
        self.shifted_moments().2
    }

    /// Nearest-rank percentile, `q` in `[0, 100]`.
    pub fn percentile(&self, q: f64) -> f64 {
        let mut sorted = self.powers.clone();
        sorted.sort_by(f64::total_cmp);
        let rank = ((q / 100.0) * sorted.len() as f64).ceil() as usize;
        sorted[rank.clamp(1, sorted.len()) - 1]
    }

    pub fn summary(&self) -> FadingSummary {
        FadingSummary { count: self.len(), mean: self.mean(), variance: self.variance(), p05: self.percentile(5.0) }
    }
}

/// `n` received powers with the aperture centre displaced by i.i.d. isotropic
/// Gaussian offsets of standard deviation `sigma` per axis.
///
/// Sample `s` comes from chunk `s / FADING_CHUNK`, which draws from
/// `ChaCha8Rng::seed_from_u64(seed)` on stream `chunk`; the x offset is drawn
/// before the y offset. Results do not depend on the thread count. A sample
/// whose aperture leaves the map receives zero power.
pub fn fading_samples(
    map: &PowerDensityMap,
    rx: &Receiver,
    sigma: f64,
    n: usize,
    seed: u64,
) -> Result<FadingSampleSet, AnalysisError> {
    if !(sigma >= 0.0 && sigma.is_finite()) {
        return Err(AnalysisError::InvalidSigma);
    }
    if n == 0 {
        return Err(AnalysisError::NoSamples);
    }
    let normal = Normal::new(0.0, sigma).map_err(|_| AnalysisError::InvalidSigma)?;
    let chunks = n.div_ceil(FADING_CHUNK);
    let powers: Vec<f64> = (0..chunks)
        .into_par_iter()
        .flat_map_iter(|c| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(c as u64);
            let len = FADING_CHUNK.min(n - c * FADING_CHUNK);
            (0..len)
                .map(|_| {
                    let dx = normal.sample(&mut rng);
                    let dy = normal.sample(&mut rng);
                    received_power(map, &rx.shifted(dx, dy)).unwrap_or(0.0)
                })
                .collect::<Vec<_>>()
        })
        .collect();
    Ok(FadingSampleSet { powers, sigma, seed })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Window;

    fn flat(level: f64) -> PowerDensityMap {
        PowerDensityMap::from_window(Window::square(0.05), 400, 400, |_, _| level).unwrap()
    }

    #[test]
    fn uniform_density_times_area() {
        let rx = Receiver::new((0.003, -0.002), 0.01).unwrap();
        let p = received_power(&flat(2.0), &rx).unwrap();
        assert!((p / (2.0 * rx.area()) - 1.0).abs() < 0.01);
    }

    #[test]
    fn outside_support_and_window() {
        let m = PowerDensityMap::from_window(Window::square(0.05), 100, 100, |x, _| if x < 0.0 { 1.0 } else { 0.0 })
            .unwrap();
        assert_eq!(received_power(&m, &Receiver::new((0.03, 0.0), 0.01).unwrap()).unwrap(), 0.0);
        assert_eq!(received_power(&m, &Receiver::new((0.2, 0.0), 0.01).unwrap()), Err(AnalysisError::OutOfWindow));
    }

    #[test]
    fn sweep_marks_out_of_window() {
        let rx = Receiver::new((0.0, 0.0), 0.005).unwrap();
        let s = offset_sweep(&flat(1.0), &rx, &[(0.0, 0.0), (1.0, 0.0)]);
        assert_eq!(s[0].power, received_power(&flat(1.0), &rx));
        assert_eq!(s[1].power, Err(AnalysisError::OutOfWindow));
    }

    #[test]
    fn zero_sigma_has_zero_variance() {
        let rx = Receiver::new((0.0, 0.0), 0.005).unwrap();
        let m = PowerDensityMap::from_window(Window::square(0.05), 100, 100, |x, y| 1.0 + x + y).unwrap();
        let s = fading_samples(&m, &rx, 0.0, 3000, 7).unwrap();
        assert_eq!(s.len(), 3000);
        assert_eq!(s.variance(), 0.0);
        assert_eq!(s.mean(), received_power(&m, &rx).unwrap());
    }

    #[test]
    fn fading_is_seeded() {
        let rx = Receiver::new((0.0, 0.0), 0.005).unwrap();
        let m = PowerDensityMap::from_window(Window::square(0.05), 100, 100, |x, _| 1.0 + 10.0 * x).unwrap();
        let a = fading_samples(&m, &rx, 0.01, 2500, 3).unwrap();
        assert_eq!(a, fading_samples(&m, &rx, 0.01, 2500, 3).unwrap());
        assert_ne!(a.powers, fading_samples(&m, &rx, 0.01, 2500, 4).unwrap().powers);
        // A prefix of a longer run is the shorter run.
        assert_eq!(&fading_samples(&m, &rx, 0.01, 3000, 3).unwrap().powers[..2500], &a.powers[..]);
    }

    #[test]
    fn percentile_nearest_rank() {
        let s = FadingSampleSet { powers: (1..=20).map(f64::from).collect(), sigma: 0.0, seed: 0 };
        assert_eq!(s.percentile(5.0), 1.0);
        assert_eq!(s.percentile(50.0), 10.0);
        assert_eq!(s.percentile(100.0), 20.0);
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(Receiver::new((0.0, 0.0), 0.0).is_err());
        let rx = Receiver::new((0.0, 0.0), 0.005).unwrap();
        assert_eq!(fading_samples(&flat(1.0), &rx, -1.0, 10, 0), Err(AnalysisError::InvalidSigma));
        assert_eq!(fading_samples(&flat(1.0), &rx, 0.0, 0, 0), Err(AnalysisError::NoSamples));
    }
}
