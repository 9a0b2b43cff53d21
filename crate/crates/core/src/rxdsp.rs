//! Coherent receiver used as a measurement instrument for the CUT.
//!
//! The chain is: band selection with matched filtering and resampling to the
//! equalizer rate, exact dispersion compensation, a data-aided 2×2 LMS
//! equalizer, data-aided block phase recovery and an EVM-based SNR estimate.
//! Everything runs in `f64` regardless of the propagation precision.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{apply_dispersion_in_place, bin_frequency, offset_in_bins, FftPair, SampledField};
use crate::scalar::Real;
use crate::txsignal::{rrc_response, ChannelPlan, ChannelSymbols};
use crate::units;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LmsInit {
    /// Unit center tap on the direct paths.
    Identity,
    /// Center taps from a 2×2 least-squares fit against the known symbols.
    DataAided,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RxConfig {
    pub lms_taps: usize,
    pub lms_mu: f64,
    pub samples_per_symbol: usize,
    pub lms_init: LmsInit,
    /// Symbols per data-aided phase estimate.
    pub cpe_block: usize,
    /// Symbols dropped while the equalizer settles.
    pub discard: usize,
    /// Symbols entering the EVM; `None` is one full period of the sequence.
    /// The sequence is reused cyclically when this exceeds what is left
    /// after `discard`.
    pub measured_symbols: Option<usize>,
    pub snr_cap_db: f64,
}

impl Default for RxConfig {
    fn default() -> Self {
        Self {
            lms_taps: 42,
            lms_mu: 1e-4,
            samples_per_symbol: 2,
            lms_init: LmsInit::DataAided,
            cpe_block: 64,
            discard: 4096,
            measured_symbols: None,
            snr_cap_db: 60.0,
        }
    }
}

impl RxConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParameter(m));
        if self.lms_taps == 0 {
            return bad("equalizer needs at least one tap".into());
        }
        if !(self.lms_mu >= 0.0 && self.lms_mu.is_finite()) {
            return bad(format!("LMS step must be non-negative, got {}", self.lms_mu));
        }
        if self.samples_per_symbol == 0 {
            return bad("equalizer rate must be at least 1 sample/symbol".into());
        }
        if self.cpe_block == 0 {
            return bad("CPE block must be at least one symbol".into());
        }
        if self.measured_symbols == Some(0) {
            return bad("at least one symbol must be measured".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RxResult {
    pub evm: f64,
    pub snr_db: f64,
    /// Total dispersion removed by the CDC, ps/nm.
    pub compensated_dispersion_ps_nm: f64,
    pub symbols: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct XciMeasurement {
    pub rx: RxResult,
    pub snr_xci_db: f64,
    pub p_xci_dbm: f64,
}

/// Equalized symbols with the transmitted symbols they estimate.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SymbolStream {
    pub x: Vec<Complex64>,
    pub y: Vec<Complex64>,
    pub ref_x: Vec<Complex64>,
    pub ref_y: Vec<Complex64>,
}

impl SymbolStream {
    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }
}

/// Selects the band of width `(1+ρ)·R_s` centered `offset_hz` from the field
/// center, moves it to DC and resamples to `sps_out` samples per symbol.
/// With `matched_filter` the RRC receive filter is applied as well.
pub fn isolate_band<T: Real>(
    field: &SampledField<T>,
    offset_hz: f64,
    baud_rate: f64,
    rolloff: f64,
    sps_out: usize,
    matched_filter: bool,
) -> Result<SampledField<f64>> {
    let n = field.len();
    let fs = field.sample_rate;
    let half_band = (1.0 + rolloff) * baud_rate / 2.0;
    if offset_hz.abs() + half_band > fs / 2.0 {
        return Err(Error::Aliasing {
            band_hz: 2.0 * half_band,
            offset_hz,
            sample_rate: fs,
        });
    }
    let sps_in = fs / baud_rate;
    let n_sym = n as f64 / sps_in;
    if (sps_in - sps_in.round()).abs() > 1e-9 || (n_sym - n_sym.round()).abs() > 1e-9 {
        return Err(Error::InvalidParameter(format!(
            "field of {n} samples at {fs:.4e} S/s does not hold whole symbols at {baud_rate:.4e} Bd"
        )));
    }
    let m = n_sym.round() as usize * sps_out;
    let fs_out = sps_out as f64 * baud_rate;
    if m > n || half_band > fs_out / 2.0 {
        return Err(Error::InvalidParameter(format!(
            "{sps_out} samples/symbol cannot carry the {:.3e} Hz band",
            2.0 * half_band
        )));
    }
    let k0 = offset_in_bins(offset_hz, n, fs)?;

    let response: Vec<f64> = (0..m)
        .map(|j| {
            let f = bin_frequency(j, m, fs_out);
            if f.abs() > half_band {
                0.0
            } else if matched_filter {
                rrc_response(f, baud_rate, rolloff)
            } else {
                1.0
            }
        })
        .collect();
    let scale = m as f64 / n as f64;
    let mut fft_in = FftPair::<f64>::new(n);
    let mut fft_out = FftPair::<f64>::new(m);
    let mut out = SampledField::zeros(m, fs_out, field.center_freq + offset_hz, field.ref_freq);
    let mut buf = vec![Complex64::new(0.0, 0.0); n];
    for (src, dst) in [(&field.x, &mut out.x), (&field.y, &mut out.y)] {
        for (b, s) in buf.iter_mut().zip(src) {
            *b = Complex64::new(s.re.as_f64(), s.im.as_f64());
        }
        fft_in.forward(&mut buf);
        for (j, d) in dst.iter_mut().enumerate() {
            let h = response[j];
            if h != 0.0 {
                let signed = if j < m.div_ceil(2) { j as isize } else { j as isize - m as isize };
                let k = (k0 + signed).rem_euclid(n as isize) as usize;
                *d = buf[k] * (h * scale);
            }
        }
        fft_out.inverse(dst);
    }
    Ok(out)
}

/// CUT isolation with the matched RRC filter.
pub fn isolate_cut<T: Real>(
    field: &SampledField<T>,
    cut_offset_hz: f64,
    baud_rate: f64,
    rolloff: f64,
    sps_out: usize,
) -> Result<SampledField<f64>> {
    isolate_band(field, cut_offset_hz, baud_rate, rolloff, sps_out, true)
}

/// Removes `total_acc_dispersion_ps_nm` about the signal's own carrier.
pub fn cdc(signal: &SampledField<f64>, total_acc_dispersion_ps_nm: f64) -> Result<SampledField<f64>> {
    let mut out = signal.clone();
    apply_dispersion_in_place(&mut out, -total_acc_dispersion_ps_nm, None)?;
    Ok(out)
}

/// Line dispersion acts about the field center, so a channel sitting
/// `carrier_offset_hz` away also picks up a group delay (linear spectral
/// phase) that CDC about its own carrier leaves in place. This removes it.
pub fn remove_line_delay(signal: &mut SampledField<f64>, line_dispersion_ps_nm: f64, carrier_offset_hz: f64) {
    if line_dispersion_ps_nm == 0.0 || carrier_offset_hz == 0.0 {
        return;
    }
    let n = signal.len();
    let k = units::dispersion_phase_coeff(line_dispersion_ps_nm, signal.ref_freq);
    let response: Vec<Complex64> = (0..n)
        .map(|j| {
            let f = bin_frequency(j, n, signal.sample_rate);
            Complex64::from_polar(1.0, -2.0 * k * carrier_offset_hz * f)
        })
        .collect();
    let mut fft = FftPair::<f64>::new(n);
    fft.filter(&mut signal.x, &response);
    fft.filter(&mut signal.y, &response);
}

/// Scales both polarizations so the mean power at the symbol instants is one
/// per polarization.
pub fn normalize_power(signal: &mut SampledField<f64>, sps: usize) -> Result<()> {
    let p: f64 = signal
        .x
        .iter()
        .step_by(sps)
        .chain(signal.y.iter().step_by(sps))
        .map(|z| z.norm_sqr())
        .sum::<f64>()
        / (2.0 * signal.len().div_ceil(sps) as f64);
    if !(p > 0.0 && p.is_finite()) {
        return Err(Error::NonFinite(format!("received power {p}")));
    }
    signal.scale(1.0 / p.sqrt());
    Ok(())
}

/// 2×2 center-tap matrix minimizing |s − W·r|² over the symbol instants.
fn least_squares_center(signal: &SampledField<f64>, reference: &ChannelSymbols, sps: usize) -> [[Complex64; 2]; 2] {
    let zero = Complex64::new(0.0, 0.0);
    // R = Σ r r^H, C = Σ s r^H
    let (mut r00, mut r01, mut r11) = (zero, zero, zero);
    let mut c = [[zero; 2]; 2];
    for (m, (sx, sy)) in reference.x.iter().zip(&reference.y).enumerate() {
        let idx = m * sps;
        if idx >= signal.len() {
            break;
        }
        let (rx, ry) = (signal.x[idx], signal.y[idx]);
        r00 += rx * rx.conj();
        r01 += rx * ry.conj();
        r11 += ry * ry.conj();
        c[0][0] += sx * rx.conj();
        c[0][1] += sx * ry.conj();
        c[1][0] += sy * rx.conj();
        c[1][1] += sy * ry.conj();
    }
    let r10 = r01.conj();
    let det = r00 * r11 - r01 * r10;
    if det.norm() == 0.0 || !det.is_finite() {
        let one = Complex64::new(1.0, 0.0);
        return [[one, zero], [zero, one]];
    }
    let inv = [[r11 / det, -r01 / det], [-r10 / det, r00 / det]];
    let mut w = [[zero; 2]; 2];
    for (i, row) in w.iter_mut().enumerate() {
        for (j, v) in row.iter_mut().enumerate() {
            *v = c[i][0] * inv[0][j] + c[i][1] * inv[1][j];
        }
    }
    w
}

/// Data-aided 2×2 butterfly LMS equalizer at `cfg.samples_per_symbol`.
///
/// The input and reference are treated as cyclic. Symbols
/// `0..cfg.discard` only train the filter; the following measured symbols
/// are returned together with their reference.
pub fn lms_equalize(signal: &SampledField<f64>, reference: &ChannelSymbols, cfg: &RxConfig) -> Result<SymbolStream> {
    cfg.validate()?;
    let sps = cfg.samples_per_symbol;
    let n_sym = reference.len();
    if n_sym == 0 || reference.y.len() != n_sym {
        return Err(Error::Empty("reference symbols".into()));
    }
    if signal.len() != n_sym * sps {
        return Err(Error::LengthMismatch(format!(
            "{} samples for {n_sym} symbols at {sps} samples/symbol",
            signal.len()
        )));
    }
    let taps = cfg.lms_taps;
    let center = taps / 2;
    let len = signal.len();
    let zero = Complex64::new(0.0, 0.0);
    // w[out][in][k]
    let mut w = vec![vec![vec![zero; taps]; 2]; 2];
    let w0 = match cfg.lms_init {
        LmsInit::Identity => [[Complex64::new(1.0, 0.0), zero], [zero, Complex64::new(1.0, 0.0)]],
        LmsInit::DataAided => least_squares_center(signal, reference, sps),
    };
    for o in 0..2 {
        for i in 0..2 {
            w[o][i][center] = w0[o][i];
        }
    }

    let measured = cfg.measured_symbols.unwrap_or(n_sym);
    let total = cfg.discard + measured;
    let mut out = SymbolStream {
        x: Vec::with_capacity(measured),
        y: Vec::with_capacity(measured),
        ref_x: Vec::with_capacity(measured),
        ref_y: Vec::with_capacity(measured),
    };
    let mu = cfg.lms_mu;
    let window = 1024.min(total).max(1);
    let mut window_err = 0.0;
    let mut best = f64::INFINITY;
    let mut u = [vec![zero; taps], vec![zero; taps]];
    let inputs = [&signal.x, &signal.y];

    for m in 0..total {
        let base = (m % n_sym) * sps + center;
        for k in 0..taps {
            let idx = (base + len - k % len) % len;
            u[0][k] = inputs[0][idx];
            u[1][k] = inputs[1][idx];
        }
        let refs = [reference.x[m % n_sym], reference.y[m % n_sym]];
        let mut ys = [zero; 2];
        for o in 0..2 {
            let mut acc = zero;
            for i in 0..2 {
                for (wk, uk) in w[o][i].iter().zip(&u[i]) {
                    acc += wk * uk;
                }
            }
            ys[o] = acc;
        }
        let errs = [refs[0] - ys[0], refs[1] - ys[1]];
        if mu > 0.0 {
            for o in 0..2 {
                let g = errs[o] * mu;
                for i in 0..2 {
                    for (wk, uk) in w[o][i].iter_mut().zip(&u[i]) {
                        *wk += g * uk.conj();
                    }
                }
            }
        }
        window_err += errs[0].norm_sqr() + errs[1].norm_sqr();
        if (m + 1) % window == 0 {
            let mse = window_err / (2.0 * window as f64);
            window_err = 0.0;
            if !mse.is_finite() {
                return Err(Error::NonFinite(format!("equalizer error at symbol {m}")));
            }
            if mse > 10.0 * best && mse > 1e-8 {
                return Err(Error::Divergence {
                    symbol: m,
                    window_mse: mse,
                    best_mse: best,
                });
            }
            best = best.min(mse);
        }
        if m >= cfg.discard {
            out.x.push(ys[0]);
            out.y.push(ys[1]);
            out.ref_x.push(refs[0]);
            out.ref_y.push(refs[1]);
        }
    }
    Ok(out)
}

fn cpe_one(symbols: &mut [Complex64], reference: &[Complex64], block: usize) {
    for (r, s) in symbols.chunks_mut(block).zip(reference.chunks(block)) {
        let corr: Complex64 = r.iter().zip(s).map(|(a, b)| a * b.conj()).sum();
        if corr.norm() > 0.0 {
            let rot = (corr / corr.norm()).conj();
            r.iter_mut().for_each(|z| *z *= rot);
        }
    }
}

/// Data-aided per-block phase removal on each polarization.
pub fn cpe(stream: &mut SymbolStream, block: usize) -> Result<()> {
    if stream.x.len() != stream.ref_x.len() || stream.y.len() != stream.ref_y.len() {
        return Err(Error::LengthMismatch("symbols and reference differ in length".into()));
    }
    let block = block.max(1);
    cpe_one(&mut stream.x, &stream.ref_x, block);
    cpe_one(&mut stream.y, &stream.ref_y, block);
    Ok(())
}

/// EVM over both polarizations and the SNR it implies, capped at
/// `snr_cap_db`.
pub fn evm_snr(stream: &SymbolStream, snr_cap_db: f64) -> Result<RxResult> {
    if stream.is_empty() {
        return Err(Error::Empty("no symbols to measure".into()));
    }
    let pairs = stream
        .x
        .iter()
        .zip(&stream.ref_x)
        .chain(stream.y.iter().zip(&stream.ref_y));
    let (mut err, mut sig) = (0.0, 0.0);
    for (r, s) in pairs {
        err += (r - s).norm_sqr();
        sig += s.norm_sqr();
    }
    if !(sig > 0.0) {
        return Err(Error::Empty("reference has no energy".into()));
    }
    let evm = (err / sig).sqrt();
    if !evm.is_finite() {
        return Err(Error::NonFinite("EVM".into()));
    }
    let snr_db = if evm > 0.0 { (-20.0 * evm.log10()).min(snr_cap_db) } else { snr_cap_db };
    Ok(RxResult {
        evm,
        snr_db,
        compensated_dispersion_ps_nm: 0.0,
        symbols: stream.len(),
    })
}

/// Full receiver on the CUT of a post-DCU snapshot carrying
/// `line_dispersion_ps_nm` of accumulated line dispersion.
pub fn receive_cut<T: Real>(
    snapshot: &SampledField<T>,
    plan: &ChannelPlan,
    reference: &ChannelSymbols,
    line_dispersion_ps_nm: f64,
    cfg: &RxConfig,
) -> Result<RxResult> {
    cfg.validate()?;
    let sps = cfg.samples_per_symbol;
    let offset = plan.cut_freq_hz() - snapshot.center_freq;
    let mut bb = isolate_cut(snapshot, offset, plan.baud_rate(), plan.rolloff, sps)?;
    let total = plan.predistortion_ps_nm + line_dispersion_ps_nm;
    apply_dispersion_in_place(&mut bb, -total, None)?;
    remove_line_delay(&mut bb, line_dispersion_ps_nm, offset);
    normalize_power(&mut bb, sps)?;
    let mut stream = lms_equalize(&bb, reference, cfg)?;
    cpe(&mut stream, cfg.cpe_block)?;
    let mut res = evm_snr(&stream, cfg.snr_cap_db)?;
    res.compensated_dispersion_ps_nm = total;
    Ok(res)
}

/// SNR of the XCI on the CUT and the equivalent interference power
/// `P_XCI = P_cut / SNR`.
pub fn measure_xci<T: Real>(
    snapshot: &SampledField<T>,
    plan: &ChannelPlan,
    reference: &ChannelSymbols,
    line_dispersion_ps_nm: f64,
    cfg: &RxConfig,
) -> Result<XciMeasurement> {
    let rx = receive_cut(snapshot, plan, reference, line_dispersion_ps_nm, cfg)?;
    Ok(XciMeasurement {
        rx,
        snr_xci_db: rx.snr_db,
        p_xci_dbm: plan.cut_power_dbm - rx.snr_db,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::txsignal::{build_wdm, PrbsSeeds};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal};

    fn plan(pump: bool) -> ChannelPlan {
        ChannelPlan {
            pump_power_dbm: if pump { Some(1.0) } else { None },
            ..ChannelPlan::default()
        }
    }

    fn tx(plan: &ChannelPlan, n_sym: usize) -> (SampledField<f64>, crate::txsignal::SymbolReference) {
        let seeds = PrbsSeeds::from_master(11, plan.prbs_degree).unwrap();
        build_wdm(plan, n_sym, plan.sample_rate(), &seeds).unwrap()
    }

    fn stream_from(reference: &ChannelSymbols) -> SymbolStream {
        SymbolStream {
            x: reference.x.clone(),
            y: reference.y.clone(),
            ref_x: reference.x.clone(),
            ref_y: reference.y.clone(),
        }
    }

    fn short_cfg() -> RxConfig {
        RxConfig {
            discard: 1024,
            ..RxConfig::default()
        }
    }

    #[test]
    fn band_selection_preserves_cut_power() {
        let p = ChannelPlan {
            predistortion_ps_nm: 0.0,
            ..plan(false)
        };
        let (f, _) = tx(&p, 1024);
        let bb = isolate_band(&f, 0.0, p.baud_rate(), p.rolloff, 2, false).unwrap();
        assert!((bb.power() / f.power() - 1.0).abs() < 1e-6);
    }

    #[test]
    fn pump_is_rejected_by_the_cut_filter() {
        let p = plan(true);
        let seeds = PrbsSeeds::from_master(3, p.prbs_degree).unwrap();
        // CUT pushed far below the pump
        let quiet = ChannelPlan {
            cut_power_dbm: -200.0,
            ..p.clone()
        };
        let (f, _) = build_wdm(&quiet, 1024, p.sample_rate(), &seeds).unwrap();
        let offset = p.cut_freq_hz() - f.center_freq;
        let bb = isolate_cut(&f, offset, p.baud_rate(), p.rolloff, 2).unwrap();
        assert!(bb.power() <= 1e-6 * f.power());
    }

    #[test]
    fn clipped_band_is_an_error() {
        let p = plan(false);
        let (f, _) = tx(&p, 256);
        assert!(matches!(
            isolate_cut(&f, 0.9 * f.sample_rate / 2.0, p.baud_rate(), p.rolloff, 2),
            Err(Error::Aliasing { .. })
        ));
    }

    #[test]
    fn cdc_round_trip_and_zero() {
        let p = plan(false);
        let (f, _) = tx(&p, 512);
        let bb = isolate_cut(&f, 0.0, p.baud_rate(), p.rolloff, 2).unwrap();
        let mut d = bb.clone();
        apply_dispersion_in_place(&mut d, 1234.0, None).unwrap();
        let back = cdc(&d, 1234.0).unwrap();
        let peak = bb.peak_amplitude();
        for (a, b) in back.x.iter().zip(&bb.x) {
            assert!((a - b).norm() < 1e-10 * peak);
        }
        assert_eq!(cdc(&bb, 0.0).unwrap(), bb);
    }

    #[test]
    fn back_to_back_two_channels() {
        let p = plan(true);
        let (f, r) = tx(&p, 4096);
        let res = measure_xci(&f, &p, &r.cut, 0.0, &short_cfg()).unwrap();
        assert!(res.snr_xci_db >= 40.0, "{res:?}");
        assert!(res.p_xci_dbm <= -60.0);
        assert!((res.rx.compensated_dispersion_ps_nm - p.predistortion_ps_nm).abs() < 1e-9);
    }

    #[test]
    fn offset_cut_survives_line_dispersion() {
        let p = plan(true);
        let (f, r) = tx(&p, 4096);
        let line = 1234.0;
        let g = crate::field::apply_dispersion(&f, line).unwrap();
        let res = receive_cut(&g, &p, &r.cut, line, &short_cfg()).unwrap();
        assert!(res.snr_db >= 40.0, "{res:?}");
    }

    #[test]
    fn swapped_polarizations_reach_same_snr() {
        let p = plan(false);
        let (f, r) = tx(&p, 4096);
        let direct = receive_cut(&f, &p, &r.cut, 0.0, &short_cfg()).unwrap();
        let mut s = f.clone();
        s.swap_polarizations();
        let swapped = receive_cut(&s, &p, &r.cut, 0.0, &short_cfg()).unwrap();
        assert!((direct.snr_db - swapped.snr_db).abs() < 0.1, "{direct:?} {swapped:?}");
    }

    #[test]
    fn frozen_equalizer_outputs_resampled_input() {
        let p = ChannelPlan {
            predistortion_ps_nm: 0.0,
            ..plan(false)
        };
        let (f, r) = tx(&p, 256);
        let bb = isolate_cut(&f, 0.0, p.baud_rate(), p.rolloff, 2).unwrap();
        let cfg = RxConfig {
            lms_mu: 0.0,
            lms_init: LmsInit::Identity,
            discard: 0,
            ..RxConfig::default()
        };
        let out = lms_equalize(&bb, &r.cut, &cfg).unwrap();
        assert_eq!(out.len(), 256);
        for m in 0..256 {
            assert_eq!(out.x[m], bb.x[2 * m]);
            assert_eq!(out.y[m], bb.y[2 * m]);
        }
    }

    #[test]
    fn rotated_constellation_is_restored() {
        let r = ChannelSymbols::from_prbs(15, [5, 9], 1024).unwrap();
        let clean = stream_from(&r);
        let mut s = clean.clone();
        let rot = Complex64::from_polar(1.0, std::f64::consts::PI / 7.0);
        s.x.iter_mut().chain(s.y.iter_mut()).for_each(|z| *z *= rot);
        cpe(&mut s, 64).unwrap();
        for (a, b) in s.x.iter().zip(&clean.x) {
            assert!((a - b).norm() < 1e-12);
        }
        let mut same = clean.clone();
        cpe(&mut same, 64).unwrap();
        for (a, b) in same.y.iter().zip(&clean.y) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn per_block_phases_are_removed() {
        let r = ChannelSymbols::from_prbs(15, [2, 3], 1024).unwrap();
        let mut s = stream_from(&r);
        for (b, chunk) in s.x.chunks_mut(64).enumerate() {
            let rot = Complex64::from_polar(1.0, 0.3 * b as f64 - 1.0);
            chunk.iter_mut().for_each(|z| *z *= rot);
        }
        cpe(&mut s, 64).unwrap();
        let res = evm_snr(&s, 60.0).unwrap();
        assert!(res.evm < 1e-12);
    }

    #[test]
    fn evm_definitions() {
        let r = ChannelSymbols::from_prbs(15, [1, 2], 512).unwrap();
        let s = stream_from(&r);
        let res = evm_snr(&s, 60.0).unwrap();
        assert_eq!(res.evm, 0.0);
        assert_eq!(res.snr_db, 60.0);

        // 10 % error vector on every symbol
        let mut t = s.clone();
        t.x.iter_mut().chain(t.y.iter_mut()).for_each(|z| *z *= 1.1);
        let res = evm_snr(&t, 60.0).unwrap();
        assert!((res.evm - 0.1).abs() < 1e-12);
        assert!((res.snr_db - 20.0).abs() < 1e-9);
        assert!(evm_snr(&SymbolStream::default(), 60.0).is_err());
    }

    #[test]
    fn evm_snr_matches_injected_awgn() {
        let n = 1 << 13;
        let r = ChannelSymbols::from_prbs(17, [77, 78], n).unwrap();
        let mut s = stream_from(&r);
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        // variance 1e-3 split over I and Q
        let g = Normal::new(0.0, (0.5e-3f64).sqrt()).unwrap();
        s.x.iter_mut()
            .chain(s.y.iter_mut())
            .for_each(|z| *z += Complex64::new(g.sample(&mut rng), g.sample(&mut rng)));
        let res = evm_snr(&s, 60.0).unwrap();
        assert!((res.snr_db - 30.0).abs() < 0.1, "{}", res.snr_db);
    }

    #[test]
    fn config_validation() {
        assert!(RxConfig::default().validate().is_ok());
        let bad = RxConfig {
            lms_mu: -1.0,
            ..RxConfig::default()
        };
        assert!(bad.validate().is_err());
        let json = serde_json::to_string(&RxConfig::default()).unwrap();
        let back: RxConfig = serde_json::from_str(&json).unwrap();
        assert_eq!(back, RxConfig::default());
        assert!(serde_json::from_str::<RxConfig>(r#"{"lms_tap": 3}"#).is_err());
    }
}
