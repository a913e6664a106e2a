//! Simulator for orbital-angular-momentum entangled photon pairs sent through
//! a plasmonic hole array.
//!
//! * [`states`]: bipartite qutrit states, density operators and Schmidt analysis.
//! * [`optics`]: Laguerre-Gaussian fields, fork holograms, displaced-hologram detection modes.
//! * [`channel`]: the mode-dependent lossy channel, concentration filters, classical baseline.
//! * [`experiment`]: coincidence matrices, hologram scans, counting noise, visibility.
//! * [`config`] and [`pipeline`]: configuration, result bundles and CSV/JSON output.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod channel;
pub mod config;
pub mod error;
pub mod experiment;
pub mod optics;
pub mod pipeline;
pub mod quadrature;
pub mod spectrum;
pub mod states;

pub use channel::{
    apply_channel, apply_channel_mixed, bethe_baseline, design_concentration_filter, FilterDesign, LossChannel,
    Photon,
};
pub use config::Config;
pub use error::{Error, Result};
pub use experiment::{
    calibrate_noise, coincidence_prob, find_dip, mode_matrix, sample_counts, scan_dip, visibility,
    CoincidenceMatrix, RunConfig, ScanCurve, ScanSetup, Scanner,
};
pub use optics::{
    displaced_projector, hologram_shift, lg_field, projector_from_coefficients, DetectionProjector, HologramSpec,
    LGMode,
};
pub use spectrum::ModeSpectrum;
pub use states::{
    make_paper_state, mix_with_white_noise, normalize, schmidt_decompose, BipartitePureState, DensityOperator,
    EntanglementReport, PaperVariant, TwoPhotonState, C64,
};
