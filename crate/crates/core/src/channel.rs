//! Mode-dependent lossy transmission of one photon, Procrustean filter design
//! and the classical small-aperture transmission estimate.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectrum::ModeSpectrum;
use crate::states::{check_same_spectrum, BipartitePureState, DensityOperator, C64};

/// Measured idler transmissions for `l = -1, 0, +1`.
pub const PAPER_ETA: [f64; 3] = [0.0151, 0.0325, 0.0182];

/// Amplitudes below this cannot be equalized by filtering.
pub const MIN_CONCENTRATABLE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Photon {
    Signal,
    #[default]
    Idler,
}

/// Per-mode intensity transmissions applied to one photon.
#[derive(Debug, Clone, PartialEq)]
pub struct LossChannel {
    spectrum: ModeSpectrum,
    eta: Vec<f64>,
    acts_on: Photon,
}

impl LossChannel {
    pub fn new(spectrum: ModeSpectrum, eta: Vec<f64>, acts_on: Photon) -> Result<Self> {
        if eta.len() != spectrum.dim() {
            return Err(Error::DimensionMismatch { expected: spectrum.dim(), got: eta.len() });
        }
        for (l, &e) in spectrum.modes().zip(&eta) {
            if !(e > 0.0 && e <= 1.0) {
                return Err(Error::domain(format!("transmission for l = {l} is {e}, outside (0, 1]")));
            }
        }
        Ok(LossChannel { spectrum, eta, acts_on })
    }

    /// The measured plate transmissions on the idler photon. Modes beyond the
    /// qutrit block get the l = +-1 value of their sign.
    pub fn paper(spectrum: ModeSpectrum) -> Self {
        let eta = spectrum
            .modes()
            .map(|l| match l.signum() {
                -1 => PAPER_ETA[0],
                0 => PAPER_ETA[1],
                _ => PAPER_ETA[2],
            })
            .collect();
        LossChannel { spectrum, eta, acts_on: Photon::Idler }
    }

    pub fn uniform(spectrum: ModeSpectrum, t: f64, acts_on: Photon) -> Result<Self> {
        Self::new(spectrum, vec![t; spectrum.dim()], acts_on)
    }

    pub fn spectrum(&self) -> ModeSpectrum {
        self.spectrum
    }

    pub fn eta(&self) -> &[f64] {
        &self.eta
    }

    pub fn eta_for(&self, l: i32) -> Option<f64> {
        self.spectrum.index(l).map(|i| self.eta[i])
    }

    pub fn acts_on(&self) -> Photon {
        self.acts_on
    }

    /// Sequential application `self` then `other`, as one channel.
    pub fn compose(&self, other: &LossChannel) -> Result<LossChannel> {
        check_same_spectrum(self.spectrum, other.spectrum)?;
        if self.acts_on != other.acts_on {
            return Err(Error::domain("cannot merge channels acting on different photons"));
        }
        let eta = self.eta.iter().zip(&other.eta).map(|(a, b)| a * b).collect();
        LossChannel::new(self.spectrum, eta, self.acts_on)
    }

    /// `sqrt(eta)` at composite index `signal * d + idler`.
    fn kraus_diagonal(&self) -> Vec<f64> {
        let d = self.spectrum.dim();
        (0..d * d)
            .map(|k| {
                let mode = match self.acts_on {
                    Photon::Signal => k / d,
                    Photon::Idler => k % d,
                };
                self.eta[mode].sqrt()
            })
            .collect()
    }
}

/// Transmitted state and the probability that both photons survive.
#[derive(Debug, Clone, PartialEq)]
pub struct Transmitted<T> {
    pub state: T,
    pub success_prob: f64,
}

/// Scales each amplitude by `sqrt(eta)` of the acted-on photon's mode and
/// renormalizes (post-selection on transmission).
pub fn apply_channel(state: &BipartitePureState, ch: &LossChannel) -> Result<Transmitted<BipartitePureState>> {
    check_same_spectrum(state.spectrum(), ch.spectrum)?;
    let scaled = DMatrix::from_fn(ch.spectrum.dim(), ch.spectrum.dim(), |i, j| {
        let mode = match ch.acts_on {
            Photon::Signal => i,
            Photon::Idler => j,
        };
        state.amplitudes()[(i, j)] * ch.eta[mode].sqrt()
    });
    let raw = BipartitePureState::from_amplitudes(ch.spectrum, scaled)?;
    let success_prob = raw.norm().powi(2);
    let state = crate::states::normalize(&raw)?;
    Ok(Transmitted { state, success_prob })
}

/// `rho -> K rho K^H / tr(K rho K^H)` with `K` diagonal.
pub fn apply_channel_mixed(rho: &DensityOperator, ch: &LossChannel) -> Result<Transmitted<DensityOperator>> {
    check_same_spectrum(rho.spectrum(), ch.spectrum)?;
    let k = ch.kraus_diagonal();
    let n = k.len();
    let m = rho.matrix();
    let unnorm = DMatrix::from_fn(n, n, |r, c| m[(r, c)] * (k[r] * k[c]));
    let success_prob: f64 = unnorm.diagonal().iter().map(|c| c.re).sum();
    if !(success_prob > 0.0) {
        return Err(Error::ZeroNorm);
    }
    let state = DensityOperator::from_raw(ch.spectrum, unnorm.map(|c: C64| c / success_prob));
    Ok(Transmitted { state, success_prob })
}

/// Idler-side filter that equalizes the Schmidt coefficients of an
/// OAM-conserving state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FilterDesign {
    /// Idler transmissions in spectrum order.
    pub eta: Vec<f64>,
    /// Post-selection success probability on the design input.
    #[serde(rename = "yield")]
    pub yield_: f64,
    pub eta_cap: f64,
}

impl FilterDesign {
    pub fn channel(&self, spectrum: ModeSpectrum) -> Result<LossChannel> {
        LossChannel::new(spectrum, self.eta.clone(), Photon::Idler)
    }
}

/// Procrustean design: `sqrt(eta[-l])` proportional to `1 / |c[l, -l]|`,
/// scaled so the largest transmission equals `eta_cap`.
pub fn design_concentration_filter(state: &BipartitePureState, eta_cap: f64) -> Result<FilterDesign> {
    if !(eta_cap > 0.0 && eta_cap <= 1.0) {
        return Err(Error::domain(format!("efficiency cap {eta_cap} outside (0, 1]")));
    }
    let spectrum = state.spectrum();
    let d = spectrum.dim();
    if state.off_anti_diagonal_weight() > 1e-12 {
        return Err(Error::domain(
            "state has weight off the l_s + l_i = 0 anti-diagonal; a local diagonal filter cannot concentrate it",
        ));
    }
    // the idler of |l, -l> sits at idler index d - 1 - signal index
    let mut inv_sq = vec![0.0; d];
    for (i, c) in state.anti_diagonal_amplitudes().iter().enumerate() {
        let mag = c.norm();
        if mag < MIN_CONCENTRATABLE {
            return Err(Error::domain(format!(
                "amplitude on |{}, {}> is {mag:e}; mode cannot be concentrated",
                spectrum.l_at(i),
                -spectrum.l_at(i)
            )));
        }
        inv_sq[d - 1 - i] = 1.0 / (mag * mag);
    }
    let max = inv_sq.iter().copied().fold(0.0, f64::max);
    let eta: Vec<f64> = inv_sq.iter().map(|v| (v / max * eta_cap).min(eta_cap)).collect();
    let ch = LossChannel::new(spectrum, eta.clone(), Photon::Idler)?;
    let out = apply_channel(state, &ch)?;
    Ok(FilterDesign { eta, yield_: out.success_prob, eta_cap })
}

/// Classical estimate for a hole array: Bethe's single-aperture efficiency
/// `64 (k a)^4 / (27 pi^2)` (a = hole radius) times the open-area fraction
/// `pi a^2 / period^2`. This convention gives about 1.35 % for 200 nm holes on
/// a 600 nm square lattice at 702 nm. The 0.55 % classical figure quoted with
/// the measured 3.2 % plate transmission uses a convention that is not
/// stated alongside it, and this function does not try to reproduce it.
pub fn bethe_baseline(hole_diameter: f64, period: f64, wavelength: f64) -> Result<f64> {
    for (name, v) in [("hole diameter", hole_diameter), ("period", period), ("wavelength", wavelength)] {
        if !(v > 0.0) || !v.is_finite() {
            return Err(Error::domain(format!("{name} must be positive, got {v}")));
        }
    }
    if hole_diameter >= wavelength {
        return Err(Error::domain("small-aperture estimate needs hole diameter below the wavelength"));
    }
    let a = hole_diameter / 2.0;
    let ka = 2.0 * PI / wavelength * a;
    let per_hole = 64.0 / (27.0 * PI * PI) * ka.powi(4);
    let fill = PI * a * a / (period * period);
    Ok(per_hole * fill)
}
