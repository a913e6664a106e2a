//! Coincidence experiments: mode-combination matrices, hologram scans,
//! shot-noise sampling, visibility and dip extraction, noise calibration.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::optics::{displaced_projector, DetectionProjector, HologramSpec};
use crate::spectrum::ModeSpectrum;
use crate::states::{check_same_spectrum, BipartitePureState, DensityOperator, TwoPhotonState};

/// `(<a| (x) <b|) rho (|a> (x) |b>)`, clamped to `[0, 1]`.
pub fn coincidence_prob<S: TwoPhotonState + ?Sized>(
    state: &S,
    signal: &DetectionProjector,
    idler: &DetectionProjector,
) -> Result<f64> {
    let spectrum = state.spectrum();
    for p in [signal, idler] {
        if p.spectrum() != spectrum {
            return Err(Error::DimensionMismatch { expected: spectrum.dim(), got: p.spectrum().dim() });
        }
    }
    let p = state.projection_probability(signal.amplitudes(), idler.amplitudes());
    Ok(p.clamp(0.0, 1.0))
}

/// Joint detection probabilities for pure-mode projectors `|l1>` (signal) and `|l2>` (idler).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoincidenceMatrix {
    pub modes: Vec<i32>,
    /// `values[i][j]` for signal mode `modes[i]` and idler mode `modes[j]`.
    pub values: Vec<Vec<f64>>,
}

impl CoincidenceMatrix {
    pub fn get(&self, l_signal: i32, l_idler: i32) -> Option<f64> {
        let i = self.modes.iter().position(|&l| l == l_signal)?;
        let j = self.modes.iter().position(|&l| l == l_idler)?;
        Some(self.values[i][j])
    }

    /// Largest entry with `l1 + l2 != 0`.
    pub fn max_non_conserving(&self) -> f64 {
        let mut worst = 0.0f64;
        for (i, &l1) in self.modes.iter().enumerate() {
            for (j, &l2) in self.modes.iter().enumerate() {
                if l1 + l2 != 0 {
                    worst = worst.max(self.values[i][j]);
                }
            }
        }
        worst
    }

    pub fn total(&self) -> f64 {
        self.values.iter().flatten().sum()
    }

    /// Entries multiplied by `factor`, e.g. a pair rate to get counts per second.
    pub fn scaled(&self, factor: f64) -> CoincidenceMatrix {
        CoincidenceMatrix {
            modes: self.modes.clone(),
            values: self.values.iter().map(|row| row.iter().map(|v| v * factor).collect()).collect(),
        }
    }
}

pub fn mode_matrix<S: TwoPhotonState + ?Sized>(state: &S) -> Result<CoincidenceMatrix> {
    let spectrum = state.spectrum();
    let projectors = spectrum
        .modes()
        .map(|l| DetectionProjector::pure(spectrum, l))
        .collect::<Result<Vec<_>>>()?;
    let values = projectors
        .iter()
        .map(|a| projectors.iter().map(|b| coincidence_prob(state, a, b)).collect::<Result<Vec<_>>>())
        .collect::<Result<Vec<_>>>()?;
    Ok(CoincidenceMatrix { modes: spectrum.modes().collect(), values })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScanPoint {
    pub displacement: f64,
    pub expected: f64,
}

/// Coincidences versus idler-hologram displacement.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScanCurve {
    /// Beam-waist units.
    pub displacements: Vec<f64>,
    pub expected: Vec<f64>,
    pub sampled: Option<Vec<u64>>,
    /// Continuous minimum of the expected curve located between grid points.
    pub refined_min: Option<ScanPoint>,
    pub meta: String,
}

impl ScanCurve {
    pub fn new(displacements: Vec<f64>, expected: Vec<f64>, meta: impl Into<String>) -> Result<Self> {
        if displacements.len() != expected.len() {
            return Err(Error::DimensionMismatch { expected: displacements.len(), got: expected.len() });
        }
        if expected.iter().any(|v| !(*v >= 0.0)) {
            return Err(Error::domain("expected coincidences must be nonnegative"));
        }
        Ok(ScanCurve { displacements, expected, sampled: None, refined_min: None, meta: meta.into() })
    }

    pub fn len(&self) -> usize {
        self.displacements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.displacements.is_empty()
    }

    /// Sampled counts when present, expected values otherwise.
    fn data(&self) -> Vec<f64> {
        match &self.sampled {
            Some(s) => s.iter().map(|&c| c as f64).collect(),
            None => self.expected.clone(),
        }
    }
}

/// Fixed signal detector plus a scanned idler fork.
#[derive(Debug, Clone, PartialEq)]
pub struct ScanSetup {
    pub signal: DetectionProjector,
    /// Charge of the scanned idler fork, +-1.
    pub idler_fork: i32,
    pub fiber_waist_ratio: f64,
    pub d_min: f64,
    pub d_max: f64,
    pub n_points: usize,
}

impl ScanSetup {
    /// `n_points` evenly spaced displacements with exact endpoints.
    pub fn displacements(&self) -> Vec<f64> {
        let n = self.n_points;
        let step = (self.d_max - self.d_min) / (n - 1) as f64;
        (0..n)
            .map(|i| if i == n - 1 { self.d_max } else { self.d_min + step * i as f64 })
            .collect()
    }

    fn validate(&self) -> Result<()> {
        if self.n_points < 3 {
            return Err(Error::domain(format!("scan needs at least 3 points, got {}", self.n_points)));
        }
        if !(self.d_max > self.d_min) || !self.d_min.is_finite() || !self.d_max.is_finite() {
            return Err(Error::domain(format!("bad scan range [{}, {}]", self.d_min, self.d_max)));
        }
        if self.idler_fork.abs() != 1 {
            return Err(Error::domain(format!("idler fork must be +-1, got {}", self.idler_fork)));
        }
        Ok(())
    }

    fn idler_projector(&self, d: f64) -> Result<DetectionProjector> {
        let holo = HologramSpec::first_order(self.idler_fork, d)?;
        displaced_projector(self.signal.spectrum(), &holo, self.fiber_waist_ratio)
    }
}

/// A scan with its idler detection modes precomputed, so several input
/// states can be scanned against the same grid.
#[derive(Debug, Clone)]
pub struct Scanner {
    setup: ScanSetup,
    displacements: Vec<f64>,
    idler: Vec<DetectionProjector>,
}

impl Scanner {
    pub fn new(setup: ScanSetup) -> Result<Self> {
        setup.validate()?;
        let displacements = setup.displacements();
        let idler = displacements
            .par_iter()
            .map(|&d| setup.idler_projector(d))
            .collect::<Result<Vec<_>>>()?;
        Ok(Scanner { setup, displacements, idler })
    }

    pub fn setup(&self) -> &ScanSetup {
        &self.setup
    }

    pub fn spectrum(&self) -> ModeSpectrum {
        self.setup.signal.spectrum()
    }

    fn prob_at<S: TwoPhotonState + Sync + ?Sized>(&self, state: &S, d: f64) -> Result<f64> {
        coincidence_prob(state, &self.setup.signal, &self.setup.idler_projector(d)?)
    }

    pub fn scan<S: TwoPhotonState + Sync + ?Sized>(&self, state: &S) -> Result<ScanCurve> {
        check_same_spectrum(state.spectrum(), self.spectrum())?;
        let expected = self
            .idler
            .iter()
            .map(|b| coincidence_prob(state, &self.setup.signal, b))
            .collect::<Result<Vec<_>>>()?;
        let meta = format!(
            "signal {}; idler fork {:+} scanned over [{}, {}] w",
            self.setup.signal.label(),
            self.setup.idler_fork,
            self.setup.d_min,
            self.setup.d_max
        );
        let mut curve = ScanCurve::new(self.displacements.clone(), expected, meta)?;
        curve.refined_min = Some(self.refine_minimum(state, &curve)?);
        Ok(curve)
    }

    /// Golden-section search for the minimum between the neighbours of the
    /// smallest grid sample.
    fn refine_minimum<S: TwoPhotonState + Sync + ?Sized>(&self, state: &S, curve: &ScanCurve) -> Result<ScanPoint> {
        let i = argmin_prefer_center(&curve.displacements, &curve.expected);
        let n = curve.len();
        let mut lo = curve.displacements[i.saturating_sub(1)];
        let mut hi = curve.displacements[(i + 1).min(n - 1)];
        let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
        let mut x1 = hi - inv_phi * (hi - lo);
        let mut x2 = lo + inv_phi * (hi - lo);
        let mut f1 = self.prob_at(state, x1)?;
        let mut f2 = self.prob_at(state, x2)?;
        while hi - lo > 1e-11 {
            if f1 <= f2 {
                hi = x2;
                x2 = x1;
                f2 = f1;
                x1 = hi - inv_phi * (hi - lo);
                f1 = self.prob_at(state, x1)?;
            } else {
                lo = x1;
                x1 = x2;
                f1 = f2;
                x2 = lo + inv_phi * (hi - lo);
                f2 = self.prob_at(state, x2)?;
            }
        }
        let (displacement, expected) = if f1 <= f2 { (x1, f1) } else { (x2, f2) };
        let grid = ScanPoint { displacement: curve.displacements[i], expected: curve.expected[i] };
        Ok(if expected <= grid.expected { ScanPoint { displacement, expected } } else { grid })
    }
}

/// One-shot scan: builds the idler modes and evaluates `state` on them.
pub fn scan_dip<S: TwoPhotonState + Sync + ?Sized>(state: &S, setup: &ScanSetup) -> Result<ScanCurve> {
    Scanner::new(setup.clone())?.scan(state)
}

/// Counting parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    /// Detected pairs per second before mode filtering.
    pub pair_rate: f64,
    /// Seconds per scan point.
    pub integration_time: f64,
    pub rng_seed: u64,
    pub epsilon_noise: f64,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig { pair_rate: 2000.0, integration_time: 1.0, rng_seed: 0x5eed, epsilon_noise: 0.0 }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.pair_rate > 0.0) || !self.pair_rate.is_finite() {
            return Err(Error::domain(format!("pair rate must be positive, got {}", self.pair_rate)));
        }
        if !(self.integration_time > 0.0) || !self.integration_time.is_finite() {
            return Err(Error::domain(format!("integration time must be positive, got {}", self.integration_time)));
        }
        if !(0.0..=1.0).contains(&self.epsilon_noise) {
            return Err(Error::domain(format!("noise fraction {} outside [0, 1]", self.epsilon_noise)));
        }
        Ok(())
    }

    /// Mean counts for a coincidence probability.
    pub fn mean_counts(&self, prob: f64) -> f64 {
        prob * self.pair_rate * self.integration_time
    }
}

/// Poisson counts around the expected curve. Point `i` draws from its own
/// ChaCha stream `i` under `rng_seed`, so results do not depend on evaluation
/// order.
pub fn sample_counts(curve: &ScanCurve, cfg: &RunConfig) -> Result<ScanCurve> {
    cfg.validate()?;
    let sampled = curve
        .expected
        .par_iter()
        .enumerate()
        .map(|(i, &p)| draw_poisson(cfg.mean_counts(p), cfg.rng_seed, i as u64))
        .collect::<Result<Vec<_>>>()?;
    Ok(ScanCurve { sampled: Some(sampled), ..curve.clone() })
}

pub(crate) fn draw_poisson(lambda: f64, seed: u64, stream: u64) -> Result<u64> {
    if lambda <= 0.0 {
        return Ok(0);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    let dist = Poisson::new(lambda).map_err(|e| Error::domain(format!("poisson mean {lambda}: {e}")))?;
    Ok(dist.sample(&mut rng) as u64)
}

/// `(C_max - C_min) / (C_max + C_min)` over sampled counts when present,
/// otherwise over the expected values and the refined minimum.
pub fn visibility(curve: &ScanCurve) -> Result<f64> {
    if curve.is_empty() {
        return Err(Error::DegenerateCurve);
    }
    let mut data = curve.data();
    if curve.sampled.is_none() {
        if let Some(p) = curve.refined_min {
            data.push(p.expected);
        }
    }
    let max = data.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = data.iter().copied().fold(f64::INFINITY, f64::min);
    if !(max > 0.0) {
        return Err(Error::DegenerateCurve);
    }
    Ok(((max - min) / (max + min)).clamp(0.0, 1.0))
}

/// White-noise fraction that brings the visibility of `state`'s scan down to
/// `target_v`, by bisection.
///
/// Coincidence probabilities are linear in the density operator, so the
/// pure-state and white-noise scans are computed once and mixed per step.
pub fn calibrate_noise(target_v: f64, scanner: &Scanner, state: &BipartitePureState) -> Result<f64> {
    if !(target_v > 0.0 && target_v <= 1.0) {
        return Err(Error::domain(format!("visibility target {target_v} outside (0, 1]")));
    }
    let pure = scanner.scan(state)?;
    let white = DensityOperator::maximally_mixed(state.spectrum());
    let noise = scanner.scan(&white)?;
    let dip = pure.refined_min.expect("scanner refines the minimum");
    let noise_at_dip = scanner.prob_at(&white, dip.displacement)?;
    let v_at = |eps: f64| -> Result<f64> {
        let expected = pure
            .expected
            .iter()
            .zip(&noise.expected)
            .map(|(p, n)| (1.0 - eps) * p + eps * n)
            .collect();
        let mut mixed = ScanCurve::new(pure.displacements.clone(), expected, "")?;
        mixed.refined_min = Some(ScanPoint {
            displacement: dip.displacement,
            expected: (1.0 - eps) * dip.expected + eps * noise_at_dip,
        });
        visibility(&mixed)
    };
    let ideal = v_at(0.0)?;
    if target_v > ideal + 1e-12 {
        return Err(Error::Unreachable { target: target_v, ideal });
    }
    if target_v >= ideal {
        return Ok(0.0);
    }
    let (mut lo, mut hi) = (0.0, 1.0);
    while hi - lo > 1e-12 {
        let mid = 0.5 * (lo + hi);
        if v_at(mid)? > target_v {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Dip position by three-point parabolic interpolation around the smallest
/// grid sample (sampled counts when present).
pub fn find_dip(curve: &ScanCurve) -> Result<f64> {
    if curve.len() < 3 {
        return Err(Error::domain("dip finding needs at least 3 points"));
    }
    let y = curve.data();
    let x = &curve.displacements;
    let i = argmin_prefer_center(x, &y);
    if i == 0 || i == y.len() - 1 {
        return Err(Error::BoundaryMinimum(i));
    }
    let (x0, x1, x2) = (x[i - 1], x[i], x[i + 1]);
    let (y0, y1, y2) = (y[i - 1], y[i], y[i + 1]);
    let num = (x1 - x0).powi(2) * (y1 - y2) - (x1 - x2).powi(2) * (y1 - y0);
    let den = (x1 - x0) * (y1 - y2) - (x1 - x2) * (y1 - y0);
    if den == 0.0 {
        return Ok(x1);
    }
    Ok(x1 - 0.5 * num / den)
}

/// Index of the smallest value; ties go to the smaller `|x|`.
fn argmin_prefer_center(x: &[f64], y: &[f64]) -> usize {
    let mut best = 0;
    for i in 1..y.len() {
        if y[i] < y[best] || (y[i] == y[best] && x[i].abs() < x[best].abs()) {
            best = i;
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::optics::projector_from_coefficients;
    use crate::states::{make_paper_state, PaperVariant};

    fn s() -> ModeSpectrum {
        ModeSpectrum::QUTRIT
    }

    #[test]
    fn dip_partner_gives_zero() {
        let psi = BipartitePureState::maximally_entangled(s());
        let a = projector_from_coefficients(s(), 1.0, 1.0, 1).unwrap();
        let b = projector_from_coefficients(s(), 1.0, -1.0, -1).unwrap();
        assert!(coincidence_prob(&psi, &a, &b).unwrap() < 1e-30);
    }

    #[test]
    fn pure_mode_probabilities() {
        let p0 = DetectionProjector::pure(s(), 0).unwrap();
        let prod = BipartitePureState::product(s(), 0, 0).unwrap();
        assert!((coincidence_prob(&prod, &p0, &p0).unwrap() - 1.0).abs() < 1e-15);
        let psi = make_paper_state(PaperVariant::BeforePlate);
        let p = coincidence_prob(
            &psi,
            &DetectionProjector::pure(s(), 1).unwrap(),
            &DetectionProjector::pure(s(), -1).unwrap(),
        )
        .unwrap();
        assert!((p - (0.486f64 / 1.229).powi(2)).abs() < 1e-4);
    }

    #[test]
    fn dimension_mismatch() {
        let psi = make_paper_state(PaperVariant::BeforePlate);
        let big = ModeSpectrum::new(2).unwrap();
        let p = DetectionProjector::pure(big, 0).unwrap();
        assert!(matches!(coincidence_prob(&psi, &p, &p), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn maximally_mixed_matrix_is_flat() {
        let m = mode_matrix(&DensityOperator::maximally_mixed(s())).unwrap();
        for row in &m.values {
            for v in row {
                assert!((v - 1.0 / 9.0).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn visibility_edge_cases() {
        let flat = ScanCurve::new(vec![0.0, 1.0, 2.0], vec![0.2; 3], "").unwrap();
        assert_eq!(visibility(&flat).unwrap(), 0.0);
        let zero = ScanCurve::new(vec![0.0, 1.0], vec![0.0; 2], "").unwrap();
        assert_eq!(visibility(&zero), Err(Error::DegenerateCurve));
        let dip = ScanCurve::new(vec![0.0, 1.0, 2.0], vec![0.3, 0.0, 0.3], "").unwrap();
        assert_eq!(visibility(&dip).unwrap(), 1.0);
    }

    #[test]
    fn parabola_vertex_is_exact() {
        let xs: Vec<f64> = (0..11).map(|i| -1.0 + 0.2 * i as f64).collect();
        let ys: Vec<f64> = xs.iter().map(|x| 3.0 * (x - 0.137).powi(2) + 0.5).collect();
        let c = ScanCurve::new(xs, ys, "").unwrap();
        assert!((find_dip(&c).unwrap() - 0.137).abs() < 1e-12);
    }

    #[test]
    fn boundary_minimum_is_an_error() {
        let c = ScanCurve::new(vec![0.0, 1.0, 2.0], vec![0.0, 0.1, 0.2], "").unwrap();
        assert_eq!(find_dip(&c), Err(Error::BoundaryMinimum(0)));
    }

    #[test]
    fn ties_prefer_smaller_displacement() {
        let x = [-2.0, -1.0, 0.5, 1.0];
        let y = [1.0, 0.0, 0.0, 1.0];
        assert_eq!(argmin_prefer_center(&x, &y), 2);
    }

    #[test]
    fn zero_mean_samples_zero() {
        for seed in 0..20 {
            assert_eq!(draw_poisson(0.0, seed, 3).unwrap(), 0);
        }
    }

    #[test]
    fn sampling_is_seeded_and_keeps_expected() {
        let c = ScanCurve::new(vec![0.0, 1.0, 2.0], vec![0.1, 0.0, 0.3], "").unwrap();
        let cfg = RunConfig::default();
        let a = sample_counts(&c, &cfg).unwrap();
        let b = sample_counts(&c, &cfg).unwrap();
        assert_eq!(a.sampled, b.sampled);
        assert_eq!(a.expected, c.expected);
        assert_eq!(a.sampled.as_ref().unwrap()[1], 0);
        let other = sample_counts(&c, &RunConfig { rng_seed: 7, ..cfg }).unwrap();
        assert_ne!(a.sampled, other.sampled);
    }

    #[test]
    fn run_config_validation() {
        assert!(RunConfig { pair_rate: 0.0, ..RunConfig::default() }.validate().is_err());
        assert!(RunConfig { integration_time: -1.0, ..RunConfig::default() }.validate().is_err());
        assert!(RunConfig { epsilon_noise: 2.0, ..RunConfig::default() }.validate().is_err());
    }

    #[test]
    fn scan_setup_rejects_short_scans() {
        let setup = ScanSetup {
            signal: DetectionProjector::pure(s(), 0).unwrap(),
            idler_fork: -1,
            fiber_waist_ratio: 1.0,
            d_min: -1.0,
            d_max: 1.0,
            n_points: 2,
        };
        assert!(Scanner::new(setup.clone()).is_err());
        assert!(Scanner::new(ScanSetup { n_points: 3, idler_fork: 2, ..setup }).is_err());
    }
}
