//! Unit conversions shared across modules. Internally everything is SI
//! (W, Hz, s, m); configuration uses the engineering units of the field.

/// Speed of light in vacuum, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Default reference (CUT) frequency, Hz.
pub const CUT_FREQ_HZ: f64 = 193.9e12;

pub fn dbm_to_watt(dbm: f64) -> f64 {
    1e-3 * 10f64.powf(dbm / 10.0)
}

pub fn watt_to_dbm(w: f64) -> f64 {
    10.0 * (w / 1e-3).log10()
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(x: f64) -> f64 {
    10.0 * x.log10()
}

pub fn wavelength(freq_hz: f64) -> f64 {
    SPEED_OF_LIGHT / freq_hz
}

/// ps/nm → s/m.
pub fn ps_per_nm_to_si(d: f64) -> f64 {
    d * 1e-3
}

/// ps/(nm·km) → s/m².
pub fn ps_per_nm_km_to_si(d: f64) -> f64 {
    d * 1e-6
}

/// dB/km → power attenuation coefficient in 1/m.
pub fn db_per_km_to_neper_per_m(alpha_db_km: f64) -> f64 {
    alpha_db_km * std::f64::consts::LN_10 / 10.0 / 1e3
}

/// Accumulated dispersion (ps/nm) expressed as a length-integrated β₂ in s².
pub fn accumulated_beta2_s2(d_ps_nm: f64, ref_freq_hz: f64) -> f64 {
    let lambda = wavelength(ref_freq_hz);
    -ps_per_nm_to_si(d_ps_nm) * lambda * lambda / (2.0 * std::f64::consts::PI * SPEED_OF_LIGHT)
}

/// Spectral phase coefficient of an accumulated dispersion: the all-pass
/// response is `exp(i·k·f²)` with `k = π·λ²·D_acc/c` for baseband offset `f`.
pub fn dispersion_phase_coeff(d_ps_nm: f64, ref_freq_hz: f64) -> f64 {
    let lambda = wavelength(ref_freq_hz);
    std::f64::consts::PI * lambda * lambda * ps_per_nm_to_si(d_ps_nm) / SPEED_OF_LIGHT
}
