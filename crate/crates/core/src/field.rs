//! Dual-polarization sampled optical field and the spectral operations on it.

use std::sync::Arc;

use num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::scalar::{cast_complex, Real};
use crate::units;

/// Complex baseband field of both polarizations on a uniform, periodic
/// time grid. Amplitudes are in √W so that `|x|²+|y|²` is power.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledField<T: Real> {
    pub x: Vec<Complex<T>>,
    pub y: Vec<Complex<T>>,
    /// Samples per second.
    pub sample_rate: f64,
    /// Absolute optical frequency of baseband DC, Hz.
    pub center_freq: f64,
    /// Frequency at which dispersion coefficients are converted, Hz.
    pub ref_freq: f64,
}

impl<T: Real> SampledField<T> {
    pub fn zeros(len: usize, sample_rate: f64, center_freq: f64, ref_freq: f64) -> Self {
        Self {
            x: vec![Complex::default(); len],
            y: vec![Complex::default(); len],
            sample_rate,
            center_freq,
            ref_freq,
        }
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    /// Mean of |x|²+|y|², W.
    pub fn power(&self) -> f64 {
        if self.is_empty() {
            return 0.0;
        }
        self.energy() / self.len() as f64
    }

    /// Σ |x|²+|y|² in sample units.
    pub fn energy(&self) -> f64 {
        self.x
            .iter()
            .chain(self.y.iter())
            .map(|z| z.norm_sqr().as_f64())
            .sum()
    }

    pub fn peak_amplitude(&self) -> f64 {
        self.x
            .iter()
            .chain(self.y.iter())
            .map(|z| z.norm().as_f64())
            .fold(0.0, f64::max)
    }

    pub fn is_finite(&self) -> bool {
        self.x
            .iter()
            .chain(self.y.iter())
            .all(|z| z.re.is_finite() && z.im.is_finite())
    }

    pub fn scale(&mut self, amplitude: f64) {
        let a = T::of(amplitude);
        for z in self.x.iter_mut().chain(self.y.iter_mut()) {
            *z = *z * a;
        }
    }

    /// Adds `other` sample-wise; grids must match.
    pub fn accumulate(&mut self, other: &Self) -> Result<()> {
        if other.len() != self.len() || other.sample_rate != self.sample_rate {
            return Err(Error::LengthMismatch(format!(
                "cannot add fields of {} and {} samples",
                self.len(),
                other.len()
            )));
        }
        for (a, b) in self.x.iter_mut().zip(&other.x) {
            *a += *b;
        }
        for (a, b) in self.y.iter_mut().zip(&other.y) {
            *a += *b;
        }
        Ok(())
    }

    pub fn swap_polarizations(&mut self) {
        std::mem::swap(&mut self.x, &mut self.y);
    }

    pub fn cast<U: Real>(&self) -> SampledField<U> {
        SampledField {
            x: self.x.iter().map(|&z| cast_complex(z)).collect(),
            y: self.y.iter().map(|&z| cast_complex(z)).collect(),
            sample_rate: self.sample_rate,
            center_freq: self.center_freq,
            ref_freq: self.ref_freq,
        }
    }

    /// Frequency resolution of the periodic grid, Hz.
    pub fn bin_spacing(&self) -> f64 {
        self.sample_rate / self.len() as f64
    }
}

/// Signed baseband frequency of FFT bin `k` on an `n`-point grid.
#[inline]
pub fn bin_frequency(k: usize, n: usize, sample_rate: f64) -> f64 {
    let signed = if k < n.div_ceil(2) { k as f64 } else { k as f64 - n as f64 };
    signed * sample_rate / n as f64
}

/// Signed baseband frequencies of all FFT bins.
pub fn frequency_grid(n: usize, sample_rate: f64) -> Vec<f64> {
    (0..n).map(|k| bin_frequency(k, n, sample_rate)).collect()
}

/// Forward/inverse FFT plans with shared scratch for one transform size.
/// The inverse is normalized by 1/n.
pub struct FftPair<T: Real> {
    forward: Arc<dyn Fft<T>>,
    inverse: Arc<dyn Fft<T>>,
    scratch: Vec<Complex<T>>,
    norm: T,
}

impl<T: Real> FftPair<T> {
    pub fn new(n: usize) -> Self {
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(n);
        let inverse = planner.plan_fft_inverse(n);
        let scratch_len = forward
            .get_inplace_scratch_len()
            .max(inverse.get_inplace_scratch_len());
        Self {
            forward,
            inverse,
            scratch: vec![Complex::default(); scratch_len],
            norm: T::one() / T::of(n as f64),
        }
    }

    pub fn len(&self) -> usize {
        self.forward.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn forward(&mut self, buf: &mut [Complex<T>]) {
        self.forward.process_with_scratch(buf, &mut self.scratch);
    }

    pub fn inverse(&mut self, buf: &mut [Complex<T>]) {
        self.inverse.process_with_scratch(buf, &mut self.scratch);
        let norm = self.norm;
        for z in buf.iter_mut() {
            *z = *z * norm;
        }
    }

    /// Transforms, multiplies the spectrum by `response`, transforms back.
    pub fn filter(&mut self, buf: &mut [Complex<T>], response: &[Complex<T>]) {
        self.forward(buf);
        for (z, h) in buf.iter_mut().zip(response) {
            *z *= *h;
        }
        self.inverse(buf);
    }
}

/// All-pass chromatic dispersion response `exp(i·π·λ²·D_acc·f²/c)` sampled on
/// the FFT grid. Applying `d` then `−d` is the identity.
pub fn dispersion_response<T: Real>(
    n: usize,
    sample_rate: f64,
    acc_dispersion_ps_nm: f64,
    ref_freq: f64,
) -> Vec<Complex<T>> {
    let k = units::dispersion_phase_coeff(acc_dispersion_ps_nm, ref_freq);
    (0..n)
        .map(|i| {
            let f = bin_frequency(i, n, sample_rate);
            let (s, c) = (k * f * f).sin_cos();
            Complex::new(T::of(c), T::of(s))
        })
        .collect()
}

/// Applies accumulated dispersion (ps/nm) to both polarizations.
pub fn apply_dispersion<T: Real>(field: &SampledField<T>, acc_dispersion_ps_nm: f64) -> Result<SampledField<T>> {
    let mut out = field.clone();
    apply_dispersion_in_place(&mut out, acc_dispersion_ps_nm, None)?;
    Ok(out)
}

/// In-place variant; reuses `fft` when given.
pub fn apply_dispersion_in_place<T: Real>(
    field: &mut SampledField<T>,
    acc_dispersion_ps_nm: f64,
    fft: Option<&mut FftPair<T>>,
) -> Result<()> {
    let n = field.len();
    if n < 2 {
        return Err(Error::InvalidParameter(format!(
            "dispersion needs at least 2 samples, got {n}"
        )));
    }
    if acc_dispersion_ps_nm == 0.0 {
        return Ok(());
    }
    let h = dispersion_response::<T>(n, field.sample_rate, acc_dispersion_ps_nm, field.ref_freq);
    let mut local;
    let fft = match fft {
        Some(f) if f.len() == n => f,
        _ => {
            local = FftPair::new(n);
            &mut local
        }
    };
    fft.filter(&mut field.x, &h);
    fft.filter(&mut field.y, &h);
    Ok(())
}

/// Number of FFT bins corresponding to `offset_hz`, if it lies on the grid.
pub fn offset_in_bins(offset_hz: f64, n: usize, sample_rate: f64) -> Result<isize> {
    let bins = offset_hz * n as f64 / sample_rate;
    let rounded = bins.round();
    if (bins - rounded).abs() > 1e-6 {
        return Err(Error::OffGridFrequency(offset_hz));
    }
    Ok(rounded as isize)
}

/// Circularly rotates a spectrum by `bins` (positive moves content up).
pub fn rotate_spectrum<T: Copy>(spectrum: &mut [T], bins: isize) {
    let n = spectrum.len() as isize;
    if n == 0 {
        return;
    }
    let r = bins.rem_euclid(n) as usize;
    spectrum.rotate_right(r);
}

/// Moves the field content by `offset_hz` (must be a whole number of bins).
pub fn shift_frequency<T: Real>(field: &mut SampledField<T>, offset_hz: f64) -> Result<()> {
    let n = field.len();
    let bins = offset_in_bins(offset_hz, n, field.sample_rate)?;
    if bins == 0 {
        return Ok(());
    }
    // time-domain mixing with an exactly periodic tone; the index product is
    // reduced mod n so the phase stays accurate for long grids
    for (i, (a, b)) in field.x.iter_mut().zip(field.y.iter_mut()).enumerate() {
        let m = ((i as i64 * bins as i64).rem_euclid(n as i64)) as f64;
        let (sn, cs) = (2.0 * std::f64::consts::PI * m / n as f64).sin_cos();
        let rot = Complex::new(T::of(cs), T::of(sn));
        *a *= rot;
        *b *= rot;
    }
    Ok(())
}
