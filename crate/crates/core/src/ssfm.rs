//! Split-step Fourier propagation of a dual-polarization field through a
//! dispersion-managed segment.
//!
//! Each span integrates the Manakov equation
//!
//! ```text
//! ∂A/∂z = −(α/2)·A + i·(β₂/2)·∂²A/∂t² − i·γ·(8/9)·(|Ax|²+|Ay|²)·A
//! ```
//!
//! written for fields that carry `exp(+i·2π·f·t)` for a positive baseband
//! offset `f`. With that convention the linear part of a span is exactly
//! [`crate::field::apply_dispersion`] with `D·L_s`, scaled by the span loss.
//! EDFAs and DCUs are lumped, noiseless and linear.

use std::io::{Read, Write};
use std::ops::ControlFlow;

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{bin_frequency, FftPair, SampledField};
use crate::scalar::{cis, Real};
use crate::topology::{LinkSegment, SpanParams, SpanStage};
use crate::units;

const MANAKOV: f64 = 8.0 / 9.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StepScheme {
    /// D(h/2)·N(h)·D(h/2), second order.
    Symmetric,
    /// N(h_eff)·D(h), first order.
    Simple,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind", deny_unknown_fields)]
pub enum StepPolicy {
    Uniform { step_km: f64, scheme: StepScheme },
    /// Step chosen so the peak nonlinear phase per step stays below the bound.
    NonlinearPhase { max_phase_rad: f64, scheme: StepScheme },
}

impl Default for StepPolicy {
    fn default() -> Self {
        StepPolicy::Uniform {
            step_km: 0.1,
            scheme: StepScheme::Symmetric,
        }
    }
}

impl StepPolicy {
    pub fn uniform(step_km: f64) -> Self {
        StepPolicy::Uniform {
            step_km,
            scheme: StepScheme::Symmetric,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            StepPolicy::Uniform { step_km, .. } if !(step_km > 0.0 && step_km.is_finite()) => Err(
                Error::InvalidParameter(format!("step must be positive, got {step_km} km")),
            ),
            StepPolicy::NonlinearPhase { max_phase_rad, .. } if !(max_phase_rad > 0.0 && max_phase_rad.is_finite()) => {
                Err(Error::InvalidParameter(format!(
                    "nonlinear phase bound must be positive, got {max_phase_rad} rad"
                )))
            }
            _ => Ok(()),
        }
    }

    /// Same policy with half the step (or half the phase bound).
    pub fn halved(&self) -> Self {
        match *self {
            StepPolicy::Uniform { step_km, scheme } => StepPolicy::Uniform {
                step_km: step_km / 2.0,
                scheme,
            },
            StepPolicy::NonlinearPhase { max_phase_rad, scheme } => StepPolicy::NonlinearPhase {
                max_phase_rad: max_phase_rad / 2.0,
                scheme,
            },
        }
    }
}

/// Which spans have the Kerr effect enabled.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct KerrMask(pub Vec<bool>);

impl KerrMask {
    pub fn all(n: usize) -> Self {
        Self(vec![true; n])
    }

    pub fn none(n: usize) -> Self {
        Self(vec![false; n])
    }

    /// Kerr on only at 0-based stage `index`.
    pub fn single(n: usize, index: usize) -> Self {
        let mut m = vec![false; n];
        if index < n {
            m[index] = true;
        }
        Self(m)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn is_on(&self, index: usize) -> bool {
        self.0.get(index).copied().unwrap_or(false)
    }

    pub fn last_active(&self) -> Option<usize> {
        self.0.iter().rposition(|&b| b)
    }
}

/// Per-stage post-DCU snapshots of a propagation.
#[derive(Debug, Clone)]
pub struct PropagationRecord<T: Real> {
    pub snapshots: Vec<SampledField<T>>,
    /// Accumulated line dispersion at each snapshot, ps/nm.
    pub line_dispersion_ps_nm: Vec<f64>,
}

/// Reusable propagation workspace for one grid size.
pub struct Propagator<T: Real> {
    n: usize,
    sample_rate: f64,
    ref_freq: f64,
    fft: FftPair<T>,
    freq_sq: Vec<f64>,
}

impl<T: Real> Propagator<T> {
    pub fn new(n: usize, sample_rate: f64, ref_freq: f64) -> Self {
        Self {
            n,
            sample_rate,
            ref_freq,
            fft: FftPair::new(n),
            freq_sq: (0..n)
                .map(|k| {
                    let f = bin_frequency(k, n, sample_rate);
                    f * f
                })
                .collect(),
        }
    }

    pub fn for_field(field: &SampledField<T>) -> Self {
        Self::new(field.len(), field.sample_rate, field.ref_freq)
    }

    fn check_grid(&self, field: &SampledField<T>) -> Result<()> {
        if field.len() != self.n || field.sample_rate != self.sample_rate || field.ref_freq != self.ref_freq {
            return Err(Error::LengthMismatch(format!(
                "propagator built for {} samples at {:.4e} S/s, field has {} at {:.4e}",
                self.n,
                self.sample_rate,
                field.len(),
                field.sample_rate
            )));
        }
        Ok(())
    }

    /// `exp(i·k·D·h·f²)·amplitude` on the FFT grid.
    fn linear_response(&self, acc_dispersion_ps_nm: f64, amplitude: f64) -> Vec<Complex<T>> {
        let k = units::dispersion_phase_coeff(acc_dispersion_ps_nm, self.ref_freq);
        self.freq_sq
            .iter()
            .map(|&f2| {
                let (s, c) = (k * f2).sin_cos();
                Complex::new(T::of(c * amplitude), T::of(s * amplitude))
            })
            .collect()
    }

    fn filter_both(&mut self, field: &mut SampledField<T>, response: &[Complex<T>]) {
        self.fft.filter(&mut field.x, response);
        self.fft.filter(&mut field.y, response);
    }

    fn nonlinear_step(field: &mut SampledField<T>, coeff: T) {
        for (x, y) in field.x.iter_mut().zip(field.y.iter_mut()) {
            let p = x.norm_sqr() + y.norm_sqr();
            let rot = cis(-coeff * p);
            *x *= rot;
            *y *= rot;
        }
    }

    fn spectral_multiply(field: &mut SampledField<T>, response: &[Complex<T>]) {
        for (z, h) in field.x.iter_mut().zip(response) {
            *z *= *h;
        }
        for (z, h) in field.y.iter_mut().zip(response) {
            *z *= *h;
        }
    }

    fn to_freq(&mut self, field: &mut SampledField<T>) {
        self.fft.forward(&mut field.x);
        self.fft.forward(&mut field.y);
    }

    fn to_time(&mut self, field: &mut SampledField<T>) {
        self.fft.inverse(&mut field.x);
        self.fft.inverse(&mut field.y);
    }

    /// Propagates through one fiber span (no amplifier, no DCU).
    pub fn propagate_span(
        &mut self,
        field: &mut SampledField<T>,
        span: &SpanParams,
        kerr_on: bool,
        policy: &StepPolicy,
    ) -> Result<()> {
        self.check_grid(field)?;
        span.validate()?;
        policy.validate()?;
        let alpha = span.alpha_lin_per_km();
        let d = span.dispersion_ps_nm_km;
        let gamma = span.gamma_per_w_km;

        if !kerr_on || gamma == 0.0 {
            let h = self.linear_response(d * span.length_km, (-alpha * span.length_km / 2.0).exp());
            self.filter_both(field, &h);
        } else {
            match *policy {
                StepPolicy::Uniform { step_km, scheme } => {
                    let steps = ((span.length_km / step_km) - 1e-9).ceil().max(1.0) as usize;
                    let h = span.length_km / steps as f64;
                    self.uniform_steps(field, d, alpha, gamma, h, steps, scheme);
                }
                StepPolicy::NonlinearPhase { max_phase_rad, scheme } => {
                    self.adaptive_steps(field, span, max_phase_rad, scheme);
                }
            }
        }
        if !field.is_finite() {
            return Err(Error::NonFinite(format!(
                "span of {} km (D = {} ps/(nm km))",
                span.length_km, span.dispersion_ps_nm_km
            )));
        }
        Ok(())
    }

    #[allow(clippy::too_many_arguments)]
    fn uniform_steps(
        &mut self,
        field: &mut SampledField<T>,
        d: f64,
        alpha: f64,
        gamma: f64,
        h: f64,
        steps: usize,
        scheme: StepScheme,
    ) {
        let full = self.linear_response(d * h, (-alpha * h / 2.0).exp());
        match scheme {
            StepScheme::Symmetric => {
                let half = self.linear_response(d * h / 2.0, (-alpha * h / 4.0).exp());
                let coeff = T::of(gamma * MANAKOV * h);
                // half steps of neighbouring slices are merged into one full step
                self.to_freq(field);
                Self::spectral_multiply(field, &half);
                for s in 0..steps {
                    self.to_time(field);
                    Self::nonlinear_step(field, coeff);
                    self.to_freq(field);
                    Self::spectral_multiply(field, if s + 1 == steps { &half } else { &full });
                }
                self.to_time(field);
            }
            StepScheme::Simple => {
                let h_eff = if alpha > 0.0 { -(-alpha * h).exp_m1() / alpha } else { h };
                let coeff = T::of(gamma * MANAKOV * h_eff);
                for _ in 0..steps {
                    Self::nonlinear_step(field, coeff);
                    self.filter_both(field, &full);
                }
            }
        }
    }

    fn adaptive_steps(&mut self, field: &mut SampledField<T>, span: &SpanParams, max_phase: f64, scheme: StepScheme) {
        let alpha = span.alpha_lin_per_km();
        let d = span.dispersion_ps_nm_km;
        let gamma = span.gamma_per_w_km;
        let mut z = 0.0;
        while z < span.length_km * (1.0 - 1e-12) {
            let peak = field
                .x
                .iter()
                .zip(&field.y)
                .map(|(a, b)| (a.norm_sqr() + b.norm_sqr()).as_f64())
                .fold(0.0, f64::max);
            let limit = if peak > 0.0 { max_phase / (gamma * MANAKOV * peak) } else { f64::INFINITY };
            let h = limit.min(span.length_km - z);
            match scheme {
                StepScheme::Symmetric => {
                    let half = self.linear_response(d * h / 2.0, (-alpha * h / 4.0).exp());
                    self.filter_both(field, &half);
                    Self::nonlinear_step(field, T::of(gamma * MANAKOV * h));
                    self.filter_both(field, &half);
                }
                StepScheme::Simple => {
                    let h_eff = if alpha > 0.0 { -(-alpha * h).exp_m1() / alpha } else { h };
                    Self::nonlinear_step(field, T::of(gamma * MANAKOV * h_eff));
                    let full = self.linear_response(d * h, (-alpha * h / 2.0).exp());
                    self.filter_both(field, &full);
                }
            }
            z += h;
        }
    }

    /// Fiber span, EDFA and DCU of one stage.
    pub fn propagate_stage(
        &mut self,
        field: &mut SampledField<T>,
        stage: &SpanStage,
        kerr_on: bool,
        policy: &StepPolicy,
    ) -> Result<()> {
        let gain = 10f64.powf(stage.edfa_gain_db / 20.0);
        if !kerr_on || stage.span.gamma_per_w_km == 0.0 {
            // fiber, amplifier and DCU collapse into one linear filter
            self.check_grid(field)?;
            stage.span.validate()?;
            let loss = (-stage.span.alpha_lin_per_km() * stage.span.length_km / 2.0).exp();
            let h = self.linear_response(stage.residual_dispersion_ps_nm(), loss * gain);
            self.filter_both(field, &h);
            return Ok(());
        }
        self.propagate_span(field, &stage.span, true, policy)?;
        let h = self.linear_response(stage.dcu.dcu_dispersion_ps_nm, gain);
        self.filter_both(field, &h);
        Ok(())
    }

    /// Runs the whole segment, handing the post-DCU field of every stage to
    /// `on_tap(stage_index, accumulated_line_dispersion, field)`. Returning
    /// `ControlFlow::Break` stops the propagation after that stage.
    pub fn run_link<F>(
        &mut self,
        field: &mut SampledField<T>,
        segment: &LinkSegment,
        mask: &KerrMask,
        policy: &StepPolicy,
        mut on_tap: F,
    ) -> Result<()>
    where
        F: FnMut(usize, f64, &SampledField<T>) -> Result<ControlFlow<()>>,
    {
        if mask.len() != segment.span_count() {
            return Err(Error::LengthMismatch(format!(
                "Kerr mask has {} entries for {} spans",
                mask.len(),
                segment.span_count()
            )));
        }
        let mut acc = 0.0;
        for (i, stage) in segment.stages().enumerate() {
            self.propagate_stage(field, stage, mask.is_on(i), policy)?;
            acc += stage.residual_dispersion_ps_nm();
            log::trace!("stage {} done, line dispersion {acc} ps/nm", i + 1);
            if on_tap(i, acc, field)?.is_break() {
                break;
            }
        }
        Ok(())
    }
}

/// Propagates `field` through `segment`, keeping every post-DCU snapshot.
pub fn run_link<T: Real>(
    field: &SampledField<T>,
    segment: &LinkSegment,
    mask: &KerrMask,
    policy: &StepPolicy,
) -> Result<PropagationRecord<T>> {
    let mut prop = Propagator::for_field(field);
    let mut work = field.clone();
    let mut record = PropagationRecord {
        snapshots: Vec::with_capacity(segment.span_count()),
        line_dispersion_ps_nm: Vec::with_capacity(segment.span_count()),
    };
    prop.run_link(&mut work, segment, mask, policy, |_, acc, f| {
        record.snapshots.push(f.clone());
        record.line_dispersion_ps_nm.push(acc);
        Ok(ControlFlow::Continue(()))
    })?;
    Ok(record)
}

/// One span in isolation.
pub fn propagate_span<T: Real>(
    field: &SampledField<T>,
    span: &SpanParams,
    kerr_on: bool,
    policy: &StepPolicy,
) -> Result<SampledField<T>> {
    let mut out = field.clone();
    Propagator::for_field(field).propagate_span(&mut out, span, kerr_on, policy)?;
    Ok(out)
}

const SNAPSHOT_MAGIC: &[u8; 4] = b"XCIF";
const SNAPSHOT_VERSION: u32 = 1;

/// Writes a field snapshot: little-endian header
/// `"XCIF", u32 version, f64 sample_rate, f64 center_freq, f64 ref_freq,
/// u64 length`, then `length` records of `f32 x.re, f32 x.im, f32 y.re,
/// f32 y.im`.
pub fn write_snapshot<T: Real, W: Write>(field: &SampledField<T>, mut out: W) -> Result<()> {
    out.write_all(SNAPSHOT_MAGIC)?;
    out.write_all(&SNAPSHOT_VERSION.to_le_bytes())?;
    out.write_all(&field.sample_rate.to_le_bytes())?;
    out.write_all(&field.center_freq.to_le_bytes())?;
    out.write_all(&field.ref_freq.to_le_bytes())?;
    out.write_all(&(field.len() as u64).to_le_bytes())?;
    let mut buf = Vec::with_capacity(field.len() * 16);
    for (x, y) in field.x.iter().zip(&field.y) {
        for v in [x.re, x.im, y.re, y.im] {
            buf.extend_from_slice(&(v.as_f64() as f32).to_le_bytes());
        }
    }
    out.write_all(&buf)?;
    Ok(())
}

pub fn read_snapshot<R: Read>(mut input: R) -> Result<SampledField<f32>> {
    let mut magic = [0u8; 4];
    input.read_exact(&mut magic)?;
    if &magic != SNAPSHOT_MAGIC {
        return Err(Error::InvalidParameter("not a field snapshot".into()));
    }
    let mut b4 = [0u8; 4];
    let mut b8 = [0u8; 8];
    input.read_exact(&mut b4)?;
    let version = u32::from_le_bytes(b4);
    if version != SNAPSHOT_VERSION {
        return Err(Error::InvalidParameter(format!("unsupported snapshot version {version}")));
    }
    let mut next_f64 = |r: &mut R| -> Result<f64> {
        r.read_exact(&mut b8)?;
        Ok(f64::from_le_bytes(b8))
    };
    let sample_rate = next_f64(&mut input)?;
    let center_freq = next_f64(&mut input)?;
    let ref_freq = next_f64(&mut input)?;
    input.read_exact(&mut b8)?;
    let len = u64::from_le_bytes(b8) as usize;
    let mut raw = vec![0u8; len * 16];
    input.read_exact(&mut raw)?;
    let mut field = SampledField::zeros(len, sample_rate, center_freq, ref_freq);
    for (i, rec) in raw.chunks_exact(16).enumerate() {
        let v: Vec<f32> = rec
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
            .collect();
        field.x[i] = Complex::new(v[0], v[1]);
        field.y[i] = Complex::new(v[2], v[3]);
    }
    Ok(field)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::apply_dispersion;
    use crate::topology::{Ols, SpanStage};
    use crate::units::CUT_FREQ_HZ;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn noise_field(n: usize, power: f64, seed: u64) -> SampledField<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut f = SampledField::zeros(n, 256e9, CUT_FREQ_HZ, CUT_FREQ_HZ);
        for z in f.x.iter_mut().chain(f.y.iter_mut()) {
            *z = Complex::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        }
        let p = f.power();
        f.scale((power / p).sqrt());
        f
    }

    fn max_err(a: &SampledField<f64>, b: &SampledField<f64>) -> f64 {
        a.x.iter()
            .zip(&b.x)
            .chain(a.y.iter().zip(&b.y))
            .map(|(p, q)| (p - q).norm())
            .fold(0.0, f64::max)
    }

    #[test]
    fn kerr_off_lossless_span_conserves_energy() {
        let f = noise_field(4096, 1e-3, 1);
        let span = SpanParams::new(80.0, 0.0, 16.0, 1.27).unwrap();
        let g = propagate_span(&f, &span, false, &StepPolicy::default()).unwrap();
        assert!((g.energy() / f.energy() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn kerr_off_matches_linear_oracle() {
        let f = noise_field(4096, 1e-3, 2);
        let span = SpanParams::standard(80.0, 16.0);
        let g = propagate_span(&f, &span, false, &StepPolicy::default()).unwrap();
        let mut oracle = apply_dispersion(&f, 16.0 * 80.0).unwrap();
        oracle.scale(10f64.powf(-16.0 / 20.0));
        assert!(max_err(&g, &oracle) < 1e-8 * f.peak_amplitude());
    }

    #[test]
    fn zero_gamma_uses_linear_path_even_when_kerr_on() {
        let f = noise_field(1024, 1e-3, 3);
        let span = SpanParams::new(50.0, 0.2, 4.0, 0.0).unwrap();
        let a = propagate_span(&f, &span, true, &StepPolicy::default()).unwrap();
        let b = propagate_span(&f, &span, false, &StepPolicy::default()).unwrap();
        assert!(max_err(&a, &b) < 1e-12);
    }

    #[test]
    fn pure_spm_phase_without_dispersion() {
        // D = 0, α = 0: each sample picks up −γ(8/9)P·L of phase
        let f = noise_field(256, 1e-2, 4);
        let span = SpanParams::new(10.0, 0.0, 0.0, 1.3).unwrap();
        let g = propagate_span(&f, &span, true, &StepPolicy::uniform(1.0)).unwrap();
        for k in 0..f.len() {
            let p = f.x[k].norm_sqr() + f.y[k].norm_sqr();
            let expect = f.x[k] * Complex::from_polar(1.0, -1.3 * MANAKOV * p * 10.0);
            assert!((g.x[k] - expect).norm() < 1e-12);
        }
    }

    #[test]
    fn polarization_swap_commutes_with_propagation() {
        let f = noise_field(2048, 2e-3, 5);
        let span = SpanParams::standard(20.0, 4.0);
        let policy = StepPolicy::uniform(0.5);
        let g = propagate_span(&f, &span, true, &policy).unwrap();
        let mut fs = f.clone();
        fs.swap_polarizations();
        let mut gs = propagate_span(&fs, &span, true, &policy).unwrap();
        gs.swap_polarizations();
        assert_eq!(g, gs);
    }

    #[test]
    fn schemes_agree_on_a_short_span() {
        let f = noise_field(2048, 5e-3, 6);
        let span = SpanParams::standard(10.0, 16.0);
        let sym = propagate_span(&f, &span, true, &StepPolicy::uniform(0.01)).unwrap();
        let simple = propagate_span(
            &f,
            &span,
            true,
            &StepPolicy::Uniform {
                step_km: 0.01,
                scheme: StepScheme::Simple,
            },
        )
        .unwrap();
        let adaptive = propagate_span(
            &f,
            &span,
            true,
            &StepPolicy::NonlinearPhase {
                max_phase_rad: 1e-4,
                scheme: StepScheme::Symmetric,
            },
        )
        .unwrap();
        let scale = sym.peak_amplitude();
        assert!(max_err(&sym, &simple) < 1e-3 * scale);
        assert!(max_err(&sym, &adaptive) < 1e-3 * scale);
    }

    #[test]
    fn invalid_policy_and_mask_rejected() {
        let f = noise_field(64, 1e-3, 7);
        let span = SpanParams::standard(1.0, 4.0);
        assert!(propagate_span(&f, &span, true, &StepPolicy::uniform(0.0)).is_err());
        let seg = LinkSegment::new(vec![Ols::periodic("a", span, 10.0, 3)]).unwrap();
        assert!(run_link(&f, &seg, &KerrMask::all(2), &StepPolicy::default()).is_err());
    }

    #[test]
    fn overflow_is_reported() {
        let mut f = noise_field(64, 1e-3, 8);
        f.x[3] = Complex::new(f64::INFINITY, 0.0);
        let span = SpanParams::standard(1.0, 4.0);
        assert!(matches!(
            propagate_span(&f, &span, true, &StepPolicy::uniform(0.5)),
            Err(Error::NonFinite(_))
        ));
    }

    #[test]
    fn linear_link_telescopes_to_residual_dispersion() {
        let f = noise_field(4096, 1e-3, 9);
        let seg = LinkSegment::new(vec![
            Ols::periodic("a", SpanParams::standard(80.0, 4.0), 40.0, 3),
            Ols::periodic("b", SpanParams::standard(50.0, 16.0), 80.0, 2),
        ])
        .unwrap();
        let rec = run_link(&f, &seg, &KerrMask::none(5), &StepPolicy::default()).unwrap();
        assert_eq!(rec.snapshots.len(), 5);
        assert_eq!(rec.line_dispersion_ps_nm.len(), 5);
        let total = rec.line_dispersion_ps_nm[4];
        assert!((total - 280.0).abs() < 1e-9);
        let oracle = apply_dispersion(&f, total).unwrap();
        assert!(max_err(&rec.snapshots[4], &oracle) < 1e-9 * f.peak_amplitude());
    }

    #[test]
    fn tap_callback_can_stop_early() {
        let f = noise_field(256, 1e-3, 10);
        let seg = LinkSegment::new(vec![Ols::periodic("a", SpanParams::standard(80.0, 4.0), 40.0, 6)]).unwrap();
        let mut prop = Propagator::for_field(&f);
        let mut seen = Vec::new();
        let mut work = f.clone();
        prop.run_link(&mut work, &seg, &KerrMask::single(6, 1), &StepPolicy::uniform(1.0), |i, _, _| {
            seen.push(i);
            Ok(if i == 2 { ControlFlow::Break(()) } else { ControlFlow::Continue(()) })
        })
        .unwrap();
        assert_eq!(seen, vec![0, 1, 2]);
    }

    #[test]
    fn snapshot_round_trip() {
        let f = noise_field(128, 1e-3, 11);
        let mut bytes = Vec::new();
        write_snapshot(&f, &mut bytes).unwrap();
        assert_eq!(bytes.len(), 40 + 128 * 16);
        let g = read_snapshot(bytes.as_slice()).unwrap();
        assert_eq!(g.sample_rate, f.sample_rate);
        assert_eq!(g.center_freq, f.center_freq);
        for (a, b) in f.x.iter().zip(&g.x) {
            assert!((a.re as f32 - b.re).abs() <= f32::EPSILON * a.norm() as f32);
        }
        assert!(read_snapshot(&b"nope"[..]).is_err());
    }

    #[test]
    fn kerr_mask_helpers() {
        let m = KerrMask::single(10, 3);
        assert_eq!(m.len(), 10);
        assert!(m.is_on(3) && !m.is_on(2));
        assert_eq!(m.last_active(), Some(3));
        assert_eq!(KerrMask::none(4).last_active(), None);
        let stage = SpanStage::with_residual(SpanParams::standard(80.0, 4.0), 40.0);
        assert!((stage.residual_dispersion_ps_nm() - 40.0).abs() < 1e-12);
    }
}
