//! Diagnostics over orbits.

mod cwt;
mod detect;
mod lyapunov;
mod minima;

pub use cwt::{
    morlet_cwt, morlet_cwt_with, period_scales, scale_for_frequency, CwtOptions, Scalogram,
    DEFAULT_OMEGA0,
};
pub use detect::{
    concentration_profile, detect_collapse, detect_synchronization, run_until_sync, CollapseOptions,
    SyncDetector,
    SyncVerdict, DEFAULT_SYNC_HOLD, DEFAULT_SYNC_THRESHOLD,
};
pub use lyapunov::{
    benettin, coupled_tangent, free_run_spectrum, is_hyperchaotic, lyapunov_spectrum, lyapunov_spectrum_with,
    LyapunovOptions, LyapunovSpectrum,
};
pub use minima::{detect_local_minima, throughput, MinimaScanner};
