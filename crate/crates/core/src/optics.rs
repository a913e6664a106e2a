//! Laguerre-Gaussian fields, fork holograms and fiber-coupled detection modes.
//!
//! Lengths are in units of the LG basis waist unless a mode carries its own
//! waist. A fork hologram of charge `q` used in diffraction order `m` shifts
//! the winding number by `m q`; followed by a single-mode fiber it detects the
//! mode `G(x, y) exp(i m q arg(x - d + i y))`, where `G` is the fiber's
//! Gaussian mode and `d` the lateral displacement of the fork.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::quadrature::gauss_legendre_on;
use crate::spectrum::ModeSpectrum;
use crate::states::C64;

/// p = 0 Laguerre-Gaussian mode.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LGMode {
    pub l: i32,
    pub w: f64,
}

impl LGMode {
    pub fn new(l: i32, w: f64) -> Result<Self> {
        if !(w > 0.0) || !w.is_finite() {
            return Err(Error::domain(format!("beam waist must be positive, got {w}")));
        }
        Ok(LGMode { l, w })
    }

    fn prefactor(&self) -> f64 {
        let order = self.l.unsigned_abs();
        let fact: f64 = (1..=order).map(f64::from).product();
        (2.0 / (PI * fact)).sqrt() / self.w * (2f64.sqrt() / self.w).powi(order as i32)
    }

    /// Field value, using `r^|l| e^{i l phi} = (x + i sgn(l) y)^|l|`.
    fn eval(&self, x: f64, y: f64) -> C64 {
        let s = if self.l < 0 { -1.0 } else { 1.0 };
        let gauss = (-(x * x + y * y) / (self.w * self.w)).exp();
        C64::new(x, s * y).powu(self.l.unsigned_abs()) * (self.prefactor() * gauss)
    }
}

/// Normalized LG field `LG_0^l(x, y)`.
pub fn lg_field(mode: LGMode, x: f64, y: f64) -> Result<C64> {
    if !(mode.w > 0.0) {
        return Err(Error::domain(format!("beam waist must be positive, got {}", mode.w)));
    }
    Ok(mode.eval(x, y))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HologramSpec {
    pub fork_charge: i32,
    pub diffraction_order: i32,
    /// Signed lateral offset along x, in beam waists.
    pub displacement: f64,
    pub efficiency: f64,
}

impl HologramSpec {
    pub fn new(fork_charge: i32, diffraction_order: i32, displacement: f64, efficiency: f64) -> Result<Self> {
        if !(-1..=1).contains(&diffraction_order) {
            return Err(Error::domain(format!(
                "diffraction order {diffraction_order} unsupported; only 0 and +-1"
            )));
        }
        if !(efficiency > 0.0 && efficiency <= 1.0) {
            return Err(Error::domain(format!("hologram efficiency {efficiency} outside (0, 1]")));
        }
        if !displacement.is_finite() {
            return Err(Error::domain("hologram displacement must be finite"));
        }
        Ok(HologramSpec { fork_charge, diffraction_order, displacement, efficiency })
    }

    /// First-order, lossless fork of charge `fork_charge` displaced by `displacement`.
    pub fn first_order(fork_charge: i32, displacement: f64) -> Result<Self> {
        Self::new(fork_charge, 1, displacement, 1.0)
    }

    /// Winding-number shift `m * l`.
    pub fn winding_shift(&self) -> i32 {
        self.diffraction_order * self.fork_charge
    }
}

/// Result of passing single-photon amplitudes through a hologram.
#[derive(Debug, Clone, PartialEq)]
pub struct ShiftedAmplitudes {
    pub amplitudes: Vec<C64>,
    /// Norm lost to modes outside the spectrum.
    pub leakage: f64,
}

pub fn hologram_shift(spectrum: ModeSpectrum, amplitudes: &[C64], holo: &HologramSpec) -> Result<ShiftedAmplitudes> {
    if amplitudes.len() != spectrum.dim() {
        return Err(Error::DimensionMismatch { expected: spectrum.dim(), got: amplitudes.len() });
    }
    let shift = holo.winding_shift();
    let scale = holo.efficiency.sqrt();
    let mut out = vec![C64::new(0.0, 0.0); spectrum.dim()];
    let mut leakage = 0.0;
    for (l, &a) in spectrum.modes().zip(amplitudes) {
        let moved = a * scale;
        match spectrum.index(l + shift) {
            Some(j) => out[j] = moved,
            None => leakage += moved.norm_sqr(),
        }
    }
    Ok(ShiftedAmplitudes { amplitudes: out, leakage })
}

/// Unit-norm single-photon detection mode, as ket amplitudes over the spectrum.
#[derive(Debug, Clone, PartialEq)]
pub struct DetectionProjector {
    spectrum: ModeSpectrum,
    amplitudes: Vec<C64>,
    label: String,
}

impl DetectionProjector {
    /// Normalizes `amplitudes`; fails on the zero vector.
    pub fn new(spectrum: ModeSpectrum, amplitudes: Vec<C64>, label: impl Into<String>) -> Result<Self> {
        if amplitudes.len() != spectrum.dim() {
            return Err(Error::DimensionMismatch { expected: spectrum.dim(), got: amplitudes.len() });
        }
        let norm = amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if !(norm > 1e-300) || !norm.is_finite() {
            return Err(Error::domain("detection mode has zero norm"));
        }
        Ok(DetectionProjector {
            spectrum,
            amplitudes: amplitudes.into_iter().map(|a| a / norm).collect(),
            label: label.into(),
        })
    }

    /// Pure OAM eigenmode `|l>`.
    pub fn pure(spectrum: ModeSpectrum, l: i32) -> Result<Self> {
        let i = spectrum
            .index(l)
            .ok_or_else(|| Error::domain(format!("mode {l} outside spectrum")))?;
        let mut amps = vec![C64::new(0.0, 0.0); spectrum.dim()];
        amps[i] = C64::new(1.0, 0.0);
        Ok(DetectionProjector { spectrum, amplitudes: amps, label: format!("|{l}>") })
    }

    pub fn spectrum(&self) -> ModeSpectrum {
        self.spectrum
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amplitudes
    }

    pub fn amplitude(&self, l: i32) -> C64 {
        self.spectrum.index(l).map_or(C64::new(0.0, 0.0), |i| self.amplitudes[i])
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }
}

/// `(a|0> + b|l>) / sqrt(a^2 + b^2)` for `l = +-1`.
pub fn projector_from_coefficients(spectrum: ModeSpectrum, a: f64, b: f64, l: i32) -> Result<DetectionProjector> {
    if l != 1 && l != -1 {
        return Err(Error::domain(format!("superposition partner must be +-1, got {l}")));
    }
    if a == 0.0 && b == 0.0 {
        return Err(Error::domain("superposition coefficients are both zero"));
    }
    let mut amps = vec![C64::new(0.0, 0.0); spectrum.dim()];
    amps[spectrum.index(0).expect("spectrum contains 0")] = C64::new(a, 0.0);
    amps[spectrum.index(l).expect("spectrum contains +-1")] = C64::new(b, 0.0);
    DetectionProjector::new(spectrum, amps, format!("({a}|0> + {b}|{l:+}>)"))
}

/// Field of the mode detected by a displaced fork plus single-mode fiber,
/// evaluated in the hologram plane. `fiber_waist_ratio` is the fiber mode
/// waist in units of the LG basis waist.
pub fn detection_mode_field(holo: &HologramSpec, fiber_waist_ratio: f64, x: f64, y: f64) -> C64 {
    let q = holo.winding_shift();
    let wf = fiber_waist_ratio;
    let gauss = (2.0 / PI).sqrt() / wf * (-(x * x + y * y) / (wf * wf)).exp();
    let dx = x - holo.displacement;
    let r = dx.hypot(y);
    if r == 0.0 {
        return C64::new(0.0, 0.0);
    }
    let unit = C64::new(dx / r, y / r);
    unit.powi(q) * gauss
}

/// Detection mode of a displaced `+-1` fork followed by a single-mode fiber,
/// decomposed on the LG basis through overlap integrals `<LG_l | V_d>`. The
/// amplitudes are renormalized over the spectrum; the weight coupled into
/// modes outside it is dropped.
pub fn displaced_projector(
    spectrum: ModeSpectrum,
    holo: &HologramSpec,
    fiber_waist_ratio: f64,
) -> Result<DetectionProjector> {
    if holo.fork_charge.abs() != 1 {
        return Err(Error::domain(format!(
            "displaced detection needs a +-1 fork, got {}",
            holo.fork_charge
        )));
    }
    if holo.diffraction_order == 0 {
        return Err(Error::domain("zeroth order carries no fork; use a first-order hologram"));
    }
    if !(fiber_waist_ratio > 0.0) || !fiber_waist_ratio.is_finite() {
        return Err(Error::domain(format!("fiber waist ratio must be positive, got {fiber_waist_ratio}")));
    }
    let raw = vortex_overlaps(spectrum, holo, fiber_waist_ratio);
    let q = holo.winding_shift();
    DetectionProjector::new(
        spectrum,
        raw,
        format!("fork {q:+} displaced {} w", holo.displacement),
    )
}

/// Unnormalized overlaps `<LG_l | V_d>` for every mode in the spectrum.
///
/// Integrates in polar coordinates centred on the fork singularity, where the
/// vortex factor is `e^{i q psi}` and the remaining integrand is an entire
/// Gaussian-polynomial. Gauss-Legendre in radius and the periodic trapezoid
/// rule in angle then both converge spectrally.
pub fn vortex_overlaps(spectrum: ModeSpectrum, holo: &HologramSpec, fiber_waist_ratio: f64) -> Vec<C64> {
    let q = holo.winding_shift();
    let d = holo.displacement;
    let wf = fiber_waist_ratio;
    let alpha = 1.0 + 1.0 / (wf * wf);
    let extent = d.abs() + (7.0 + spectrum.l_max() as f64) / alpha.sqrt();
    let reach = d.abs().ceil() as usize;
    let n_radial = 96 + 16 * reach + 8 * spectrum.l_max() as usize;
    let n_angle = 128 + 64 * reach;

    let (rho, w_rho) = gauss_legendre_on(n_radial, 0.0, extent);
    let dpsi = 2.0 * PI / n_angle as f64;
    let angles: Vec<(f64, f64, C64)> = (0..n_angle)
        .map(|k| {
            let psi = k as f64 * dpsi;
            let (s, c) = psi.sin_cos();
            (c, s, C64::new(c, s).powi(q))
        })
        .collect();

    let modes: Vec<LGMode> = spectrum.modes().map(|l| LGMode { l, w: 1.0 }).collect();
    let prefactors: Vec<f64> = modes.iter().map(LGMode::prefactor).collect();
    let fiber_norm = (2.0 / PI).sqrt() / wf;

    let mut acc = vec![C64::new(0.0, 0.0); modes.len()];
    for (&r, &wr) in rho.iter().zip(&w_rho) {
        let radial_weight = wr * r * dpsi * fiber_norm;
        for &(c, s, vortex) in &angles {
            let x = d + r * c;
            let y = r * s;
            let common = vortex * ((-alpha * (x * x + y * y)).exp() * radial_weight);
            let conj_z = C64::new(x, -y);
            for ((a, mode), pref) in acc.iter_mut().zip(&modes).zip(&prefactors) {
                // conj((x + i sgn(l) y)^|l|)
                let poly = if mode.l >= 0 { conj_z.powu(mode.l as u32) } else { conj_z.conj().powu((-mode.l) as u32) };
                *a += poly * common * *pref;
            }
        }
    }
    acc
}
