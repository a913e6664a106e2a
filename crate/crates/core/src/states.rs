//! Bipartite two-photon OAM states.
//!
//! Amplitude tables are indexed `c[signal, idler]` in [`ModeSpectrum`] order, so
//! `|m, n>` is the signal photon in mode `m` and the idler photon in mode `n`.
//! Density operators act on the `d^2`-dimensional space with composite index
//! `signal * d + idler`.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::spectrum::ModeSpectrum;

pub type C64 = Complex64;

/// Norms at or below this are treated as zero.
pub const ZERO_NORM: f64 = 1e-300;
/// Absolute tolerance for Hermiticity and positivity checks.
pub const OPERATOR_TOL: f64 = 1e-10;

/// Anti-diagonal coefficients of the down-converted state before the plate,
/// keyed by the signal mode: `(|0,0>, |-1,+1>, |+1,-1>)`.
pub const BEFORE_PLATE_COEFFS: [f64; 3] = [1.0, 0.523, 0.486];
/// Same, after plasmon-assisted transmission of the idler photon.
pub const AFTER_PLATE_COEFFS: [f64; 3] = [1.0, 0.392, 0.332];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PaperVariant {
    BeforePlate,
    AfterPlate,
}

impl PaperVariant {
    pub fn coefficients(self) -> [f64; 3] {
        match self {
            PaperVariant::BeforePlate => BEFORE_PLATE_COEFFS,
            PaperVariant::AfterPlate => AFTER_PLATE_COEFFS,
        }
    }
}

/// Anything that assigns a joint detection probability to a pair of
/// single-photon detection modes.
pub trait TwoPhotonState {
    fn spectrum(&self) -> ModeSpectrum;

    /// `<a, b| rho |a, b>` for signal mode `a` and idler mode `b`, given as
    /// ket amplitudes over the spectrum.
    fn projection_probability(&self, signal: &[C64], idler: &[C64]) -> f64;
}

#[derive(Debug, Clone, PartialEq)]
pub struct BipartitePureState {
    spectrum: ModeSpectrum,
    amplitudes: DMatrix<C64>,
}

impl BipartitePureState {
    /// Wraps an amplitude table without normalizing it.
    pub fn from_amplitudes(spectrum: ModeSpectrum, amplitudes: DMatrix<C64>) -> Result<Self> {
        let d = spectrum.dim();
        if amplitudes.nrows() != d || amplitudes.ncols() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: amplitudes.nrows().max(amplitudes.ncols()),
            });
        }
        if amplitudes.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
            return Err(Error::domain("amplitudes must be finite"));
        }
        Ok(BipartitePureState { spectrum, amplitudes })
    }

    /// Normalized state `sum_l c_l |l, -l>` with `coeffs` keyed by signal mode in
    /// basis order.
    pub fn anti_diagonal(spectrum: ModeSpectrum, coeffs: &[C64]) -> Result<Self> {
        let d = spectrum.dim();
        if coeffs.len() != d {
            return Err(Error::DimensionMismatch { expected: d, got: coeffs.len() });
        }
        let mut amps = DMatrix::zeros(d, d);
        for (i, &c) in coeffs.iter().enumerate() {
            amps[(i, d - 1 - i)] = c;
        }
        normalize(&Self::from_amplitudes(spectrum, amps)?)
    }

    /// Normalized product state `|m> (x) |n>`.
    pub fn product(spectrum: ModeSpectrum, signal: i32, idler: i32) -> Result<Self> {
        let (i, j) = match (spectrum.index(signal), spectrum.index(idler)) {
            (Some(i), Some(j)) => (i, j),
            _ => return Err(Error::domain(format!("mode ({signal}, {idler}) outside spectrum"))),
        };
        let d = spectrum.dim();
        let mut amps = DMatrix::zeros(d, d);
        amps[(i, j)] = C64::new(1.0, 0.0);
        Self::from_amplitudes(spectrum, amps)
    }

    /// `sum_l |l, -l> / sqrt(d)`.
    pub fn maximally_entangled(spectrum: ModeSpectrum) -> Self {
        let d = spectrum.dim();
        let c = C64::new(1.0 / (d as f64).sqrt(), 0.0);
        let mut amps = DMatrix::zeros(d, d);
        for i in 0..d {
            amps[(i, d - 1 - i)] = c;
        }
        BipartitePureState { spectrum, amplitudes: amps }
    }

    pub fn spectrum(&self) -> ModeSpectrum {
        self.spectrum
    }

    pub fn amplitudes(&self) -> &DMatrix<C64> {
        &self.amplitudes
    }

    /// Amplitude `c[l_signal, l_idler]`; zero outside the spectrum.
    pub fn amplitude(&self, l_signal: i32, l_idler: i32) -> C64 {
        match (self.spectrum.index(l_signal), self.spectrum.index(l_idler)) {
            (Some(i), Some(j)) => self.amplitudes[(i, j)],
            _ => C64::new(0.0, 0.0),
        }
    }

    /// Amplitudes on `|l, -l>` in signal-mode basis order.
    pub fn anti_diagonal_amplitudes(&self) -> Vec<C64> {
        let d = self.spectrum.dim();
        (0..d).map(|i| self.amplitudes[(i, d - 1 - i)]).collect()
    }

    /// Total weight off the OAM-conserving anti-diagonal.
    pub fn off_anti_diagonal_weight(&self) -> f64 {
        let d = self.spectrum.dim();
        let mut w = 0.0;
        for i in 0..d {
            for j in 0..d {
                if i + j != d - 1 {
                    w += self.amplitudes[(i, j)].norm_sqr();
                }
            }
        }
        w
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn inner(&self, other: &Self) -> Result<C64> {
        check_same_spectrum(self.spectrum, other.spectrum)?;
        Ok(self.amplitudes.iter().zip(other.amplitudes.iter()).map(|(a, b)| a.conj() * b).sum())
    }

    /// `|<self|other>|^2`.
    pub fn fidelity(&self, other: &Self) -> Result<f64> {
        Ok(self.inner(other)?.norm_sqr())
    }

    /// Column vector over the composite index `signal * d + idler`.
    pub fn to_vector(&self) -> Vec<C64> {
        let d = self.spectrum.dim();
        let mut v = Vec::with_capacity(d * d);
        for i in 0..d {
            for j in 0..d {
                v.push(self.amplitudes[(i, j)]);
            }
        }
        v
    }

    /// `|psi><psi|`.
    pub fn to_density(&self) -> DensityOperator {
        let v = self.to_vector();
        let n = v.len();
        let m = DMatrix::from_fn(n, n, |r, c| v[r] * v[c].conj());
        DensityOperator { spectrum: self.spectrum, matrix: m }
    }

    /// Reduced density matrix of the signal photon.
    pub fn reduced_signal(&self) -> DMatrix<C64> {
        &self.amplitudes * self.amplitudes.adjoint()
    }

    /// Reduced density matrix of the idler photon.
    pub fn reduced_idler(&self) -> DMatrix<C64> {
        (self.amplitudes.adjoint() * &self.amplitudes).transpose()
    }
}

impl TwoPhotonState for BipartitePureState {
    fn spectrum(&self) -> ModeSpectrum {
        self.spectrum
    }

    fn projection_probability(&self, signal: &[C64], idler: &[C64]) -> f64 {
        let d = self.spectrum.dim();
        let mut amp = C64::new(0.0, 0.0);
        for (i, s) in signal.iter().enumerate().take(d) {
            let a = s.conj();
            if a == C64::new(0.0, 0.0) {
                continue;
            }
            for (j, b) in idler.iter().enumerate().take(d) {
                amp += a * b.conj() * self.amplitudes[(i, j)];
            }
        }
        amp.norm_sqr()
    }
}

/// Measured state before or after the plate: `(1, a, b)` on `|0,0>, |-1,+1>, |+1,-1>`,
/// real and nonnegative, normalized, embedded in `spectrum`.
pub fn make_paper_state_in(spectrum: ModeSpectrum, variant: PaperVariant) -> BipartitePureState {
    let [c0, c_minus, c_plus] = variant.coefficients();
    let d = spectrum.dim();
    let mut amps = DMatrix::zeros(d, d);
    let at = |l: i32| spectrum.index(l).expect("spectrum covers the qutrit modes");
    amps[(at(0), at(0))] = C64::new(c0, 0.0);
    amps[(at(-1), at(1))] = C64::new(c_minus, 0.0);
    amps[(at(1), at(-1))] = C64::new(c_plus, 0.0);
    let raw = BipartitePureState { spectrum, amplitudes: amps };
    normalize(&raw).expect("measured coefficients have nonzero norm")
}

pub fn make_paper_state(variant: PaperVariant) -> BipartitePureState {
    make_paper_state_in(ModeSpectrum::QUTRIT, variant)
}

/// Euclidean norm of the raw coefficient triple, e.g. 1.229 before the plate.
pub fn raw_normalizer(variant: PaperVariant) -> f64 {
    variant.coefficients().iter().map(|c| c * c).sum::<f64>().sqrt()
}

pub fn normalize(state: &BipartitePureState) -> Result<BipartitePureState> {
    let n = state.norm();
    if !(n > ZERO_NORM) {
        return Err(Error::ZeroNorm);
    }
    Ok(BipartitePureState {
        spectrum: state.spectrum,
        amplitudes: state.amplitudes.map(|c| c / n),
    })
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct EntanglementReport {
    /// Descending singular values of the amplitude table.
    pub schmidt_coeffs: Vec<f64>,
    pub entropy_nats: f64,
    /// `|<Phi_max|psi>|^2` with `Phi_max = sum_l |l,-l> / sqrt(d)`.
    pub fidelity_max_ent: f64,
}

impl EntanglementReport {
    /// Spread between the largest and smallest Schmidt coefficient.
    pub fn coefficient_spread(&self) -> f64 {
        let max = self.schmidt_coeffs.first().copied().unwrap_or(0.0);
        let min = self.schmidt_coeffs.last().copied().unwrap_or(0.0);
        max - min
    }
}

/// Singular value decomposition `c = U diag(s) V^H` with `s` descending.
#[derive(Debug, Clone)]
pub struct SchmidtFactors {
    pub u: DMatrix<C64>,
    pub s: Vec<f64>,
    pub v_t: DMatrix<C64>,
}

impl SchmidtFactors {
    pub fn reconstruct(&self) -> DMatrix<C64> {
        let k = self.s.len();
        let sigma = DMatrix::from_fn(k, k, |i, j| if i == j { C64::new(self.s[i], 0.0) } else { C64::new(0.0, 0.0) });
        &self.u * sigma * &self.v_t
    }
}

pub fn schmidt_factors(state: &BipartitePureState) -> SchmidtFactors {
    let svd = state.amplitudes.clone().svd(true, true);
    let u = svd.u.expect("requested U");
    let v_t = svd.v_t.expect("requested V^T");
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
    let s = order.iter().map(|&i| svd.singular_values[i]).collect();
    let u = DMatrix::from_fn(u.nrows(), order.len(), |r, c| u[(r, order[c])]);
    let v_t = DMatrix::from_fn(order.len(), v_t.ncols(), |r, c| v_t[(order[r], c)]);
    SchmidtFactors { u, s, v_t }
}

pub fn schmidt_decompose(state: &BipartitePureState) -> EntanglementReport {
    let schmidt_coeffs = schmidt_factors(state).s;
    let entropy_nats = schmidt_coeffs
        .iter()
        .map(|s| s * s)
        .filter(|&p| p > 0.0)
        .map(|p| -p * p.ln())
        .sum::<f64>()
        .max(0.0);
    let target = BipartitePureState::maximally_entangled(state.spectrum);
    let fidelity_max_ent = target.fidelity(state).expect("same spectrum").clamp(0.0, 1.0);
    EntanglementReport { schmidt_coeffs, entropy_nats, fidelity_max_ent }
}

/// Hermitian operator on the bipartite space.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityOperator {
    spectrum: ModeSpectrum,
    matrix: DMatrix<C64>,
}

impl DensityOperator {
    /// Validates Hermiticity, unit trace and positivity.
    pub fn new(spectrum: ModeSpectrum, matrix: DMatrix<C64>) -> Result<Self> {
        let n = spectrum.dim() * spectrum.dim();
        if matrix.nrows() != n || matrix.ncols() != n {
            return Err(Error::DimensionMismatch { expected: n, got: matrix.nrows().max(matrix.ncols()) });
        }
        let rho = DensityOperator { spectrum, matrix };
        if rho.hermiticity_defect() > OPERATOR_TOL {
            return Err(Error::domain("density operator is not Hermitian"));
        }
        if (rho.trace() - 1.0).abs() > OPERATOR_TOL {
            return Err(Error::domain("density operator trace differs from 1"));
        }
        if rho.min_eigenvalue() < -OPERATOR_TOL {
            return Err(Error::domain("density operator has a negative eigenvalue"));
        }
        Ok(rho)
    }

    /// `I / d^2`.
    pub fn maximally_mixed(spectrum: ModeSpectrum) -> Self {
        let n = spectrum.dim() * spectrum.dim();
        let m = DMatrix::from_fn(n, n, |r, c| if r == c { C64::new(1.0 / n as f64, 0.0) } else { C64::new(0.0, 0.0) });
        DensityOperator { spectrum, matrix: m }
    }

    pub(crate) fn from_raw(spectrum: ModeSpectrum, matrix: DMatrix<C64>) -> Self {
        DensityOperator { spectrum, matrix }
    }

    pub fn spectrum(&self) -> ModeSpectrum {
        self.spectrum
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.matrix
    }

    pub fn trace(&self) -> f64 {
        self.matrix.diagonal().iter().map(|c| c.re).sum()
    }

    /// Largest entrywise deviation from the conjugate transpose.
    pub fn hermiticity_defect(&self) -> f64 {
        let n = self.matrix.nrows();
        let mut worst = 0.0f64;
        for r in 0..n {
            for c in r..n {
                worst = worst.max((self.matrix[(r, c)] - self.matrix[(c, r)].conj()).norm());
            }
        }
        worst
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        let herm = (&self.matrix + self.matrix.adjoint()).map(|c| c * 0.5);
        let mut ev: Vec<f64> = herm.symmetric_eigenvalues().iter().copied().collect();
        ev.sort_by(|a, b| b.total_cmp(a));
        ev
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues().last().copied().unwrap_or(0.0)
    }

    pub fn purity(&self) -> f64 {
        (&self.matrix * &self.matrix).diagonal().iter().map(|c| c.re).sum()
    }

    /// `<psi| rho |psi>`.
    pub fn fidelity_with(&self, psi: &BipartitePureState) -> Result<f64> {
        check_same_spectrum(self.spectrum, psi.spectrum)?;
        let v = psi.to_vector();
        let n = v.len();
        let mut acc = C64::new(0.0, 0.0);
        for r in 0..n {
            for c in 0..n {
                acc += v[r].conj() * self.matrix[(r, c)] * v[c];
            }
        }
        Ok(acc.re)
    }

    /// Reduced state of the signal photon (trace over the idler).
    pub fn reduced_signal(&self) -> DMatrix<C64> {
        let d = self.spectrum.dim();
        DMatrix::from_fn(d, d, |a, b| (0..d).map(|j| self.matrix[(a * d + j, b * d + j)]).sum())
    }

    /// Reduced state of the idler photon (trace over the signal).
    pub fn reduced_idler(&self) -> DMatrix<C64> {
        let d = self.spectrum.dim();
        DMatrix::from_fn(d, d, |a, b| (0..d).map(|i| self.matrix[(i * d + a, i * d + b)]).sum())
    }
}

impl TwoPhotonState for DensityOperator {
    fn spectrum(&self) -> ModeSpectrum {
        self.spectrum
    }

    fn projection_probability(&self, signal: &[C64], idler: &[C64]) -> f64 {
        let d = self.spectrum.dim();
        let v: Vec<C64> = (0..d * d).map(|k| signal[k / d] * idler[k % d]).collect();
        let mut acc = C64::new(0.0, 0.0);
        for r in 0..v.len() {
            if v[r] == C64::new(0.0, 0.0) {
                continue;
            }
            let row: C64 = (0..v.len()).map(|c| self.matrix[(r, c)] * v[c]).sum();
            acc += v[r].conj() * row;
        }
        acc.re
    }
}

/// `(1 - eps) |psi><psi| + eps I / d^2`.
pub fn mix_with_white_noise(state: &BipartitePureState, epsilon: f64) -> Result<DensityOperator> {
    if !(0.0..=1.0).contains(&epsilon) {
        return Err(Error::domain(format!("noise fraction {epsilon} outside [0, 1]")));
    }
    let pure = state.to_density();
    let n = pure.matrix.nrows();
    let iso = epsilon / n as f64;
    let m = DMatrix::from_fn(n, n, |r, c| {
        let p = pure.matrix[(r, c)] * (1.0 - epsilon);
        if r == c {
            p + iso
        } else {
            p
        }
    });
    Ok(DensityOperator { spectrum: state.spectrum, matrix: m })
}

pub(crate) fn check_same_spectrum(a: ModeSpectrum, b: ModeSpectrum) -> Result<()> {
    if a != b {
        return Err(Error::DimensionMismatch { expected: a.dim(), got: b.dim() });
    }
    Ok(())
}
