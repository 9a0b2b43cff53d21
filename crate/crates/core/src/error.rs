use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("PRBS seed must be non-zero within {degree} bits")]
    ZeroSeed { degree: u32 },

    #[error("unsupported PRBS degree {0}")]
    UnsupportedPrbsDegree(u32),

    #[error("bit count {0} is not a multiple of 4")]
    BitCountNotMultipleOfFour(usize),

    #[error("band of {band_hz:.4e} Hz at offset {offset_hz:.4e} Hz does not fit in a {sample_rate:.4e} S/s grid")]
    Aliasing {
        band_hz: f64,
        offset_hz: f64,
        sample_rate: f64,
    },

    #[error("frequency offset {0:.6e} Hz is not on the FFT bin grid")]
    OffGridFrequency(f64),

    #[error("length mismatch: {0}")]
    LengthMismatch(String),

    #[error("non-finite samples after {0}")]
    NonFinite(String),

    #[error("LMS equalizer diverged at symbol {symbol}: window error {window_mse:.3e} vs best {best_mse:.3e}")]
    Divergence {
        symbol: usize,
        window_mse: f64,
        best_mse: f64,
    },

    #[error("GN integration did not converge: last refinement changed result by {delta_db:.3} dB")]
    NoConvergence { delta_db: f64 },

    #[error("empty input: {0}")]
    Empty(String),

    #[error("segment is not periodic: {0}")]
    NotPeriodic(String),

    #[error("span index order violated: need j <= i within 1..={n}, got i={i}, j={j}")]
    IndexOrder { i: usize, j: usize, n: usize },

    #[error("asymptote tail window {window} exceeds trace length {len}")]
    TraceTooShort { window: usize, len: usize },

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Failures of the numerics as opposed to bad inputs.
    pub fn is_numeric(&self) -> bool {
        matches!(
            self,
            Error::NonFinite(_) | Error::Divergence { .. } | Error::NoConvergence { .. }
        )
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
