//! Pump-and-probe WDM transmitter: PRBS data, Gray-mapped 16-QAM,
//! root-raised-cosine shaping, per-channel predistortion and multiplexing.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{apply_dispersion_in_place, bin_frequency, shift_frequency, FftPair, SampledField};
use crate::units;

/// Fibonacci LFSR producing a maximal-length pseudo-random binary sequence
/// for the polynomial `x^degree + x^tap + 1`.
#[derive(Debug, Clone)]
pub struct Prbs {
    degree: u32,
    tap: u32,
    state: u64,
}

fn feedback_tap(degree: u32) -> Result<u32> {
    Ok(match degree {
        7 => 6,
        9 => 5,
        11 => 9,
        15 => 14,
        17 => 14,
        20 => 3,
        23 => 18,
        31 => 28,
        _ => return Err(Error::UnsupportedPrbsDegree(degree)),
    })
}

impl Prbs {
    pub fn new(degree: u32, seed: u64) -> Result<Self> {
        let tap = feedback_tap(degree)?;
        let state = seed & Self::mask_for(degree);
        if state == 0 {
            return Err(Error::ZeroSeed { degree });
        }
        Ok(Self { degree, tap, state })
    }

    fn mask_for(degree: u32) -> u64 {
        (1u64 << degree) - 1
    }

    pub fn period(&self) -> u64 {
        Self::mask_for(self.degree)
    }

    pub fn state(&self) -> u64 {
        self.state
    }

    pub fn next_bit(&mut self) -> u8 {
        let bit = ((self.state >> (self.degree - 1)) ^ (self.state >> (self.tap - 1))) & 1;
        self.state = ((self.state << 1) | bit) & Self::mask_for(self.degree);
        bit as u8
    }

    pub fn advance(&mut self, steps: u64) {
        for _ in 0..steps {
            self.next_bit();
        }
    }
}

impl Iterator for Prbs {
    type Item = u8;

    fn next(&mut self) -> Option<u8> {
        Some(self.next_bit())
    }
}

/// First `len` bits of the PRBS of `degree` started from `seed`.
pub fn prbs(degree: u32, seed: u64, len: usize) -> Result<Vec<u8>> {
    Ok(Prbs::new(degree, seed)?.take(len).collect())
}

/// LFSR start states for the four independent bit streams.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PrbsSeeds {
    pub cut: [u64; 2],
    pub pump: [u64; 2],
}

impl PrbsSeeds {
    /// Expands a master seed into four states spaced a quarter period apart
    /// on the LFSR orbit, so the streams never overlap for runs shorter than
    /// a quarter period.
    pub fn from_master(master: u64, degree: u32) -> Result<Self> {
        let mask = Prbs::mask_for(degree);
        let mut rng = ChaCha8Rng::seed_from_u64(master);
        let start = rng.gen_range(1..=mask);
        let mut lfsr = Prbs::new(degree, start)?;
        let quarter = lfsr.period() / 4;
        let mut states = [0u64; 4];
        for (k, s) in states.iter_mut().enumerate() {
            if k > 0 {
                lfsr.advance(quarter);
            }
            *s = lfsr.state();
        }
        Ok(Self {
            cut: [states[0], states[1]],
            pump: [states[2], states[3]],
        })
    }
}

const QAM16_NORM: f64 = 0.316_227_766_016_837_94; // 1/√10

fn gray_level(b0: u8, b1: u8) -> f64 {
    match (b0, b1) {
        (0, 0) => -3.0,
        (0, 1) => -1.0,
        (1, 1) => 1.0,
        _ => 3.0,
    }
}

/// Gray-mapped 16-QAM with unit average energy. Bits `b0 b1` select the
/// in-phase level and `b2 b3` the quadrature level using
/// `00 → −3, 01 → −1, 11 → +1, 10 → +3`, all scaled by 1/√10.
pub fn map_qam16(bits: &[u8]) -> Result<Vec<Complex64>> {
    if bits.len() % 4 != 0 {
        return Err(Error::BitCountNotMultipleOfFour(bits.len()));
    }
    Ok(bits
        .chunks_exact(4)
        .map(|b| {
            Complex64::new(
                gray_level(b[0] & 1, b[1] & 1) * QAM16_NORM,
                gray_level(b[2] & 1, b[3] & 1) * QAM16_NORM,
            )
        })
        .collect())
}

/// Transmitted symbols of one channel, both polarizations.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ChannelSymbols {
    pub x: Vec<Complex64>,
    pub y: Vec<Complex64>,
}

impl ChannelSymbols {
    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    /// Unit-energy 16-QAM symbols from two PRBS states.
    pub fn from_prbs(degree: u32, seeds: [u64; 2], n_symbols: usize) -> Result<Self> {
        Ok(Self {
            x: map_qam16(&prbs(degree, seeds[0], 4 * n_symbols)?)?,
            y: map_qam16(&prbs(degree, seeds[1], 4 * n_symbols)?)?,
        })
    }

    pub fn swapped(&self) -> Self {
        Self {
            x: self.y.clone(),
            y: self.x.clone(),
        }
    }
}

/// Reference symbols retained for data-aided reception.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SymbolReference {
    pub cut: ChannelSymbols,
    pub pump: Option<ChannelSymbols>,
}

/// Root-raised-cosine amplitude response with unit passband gain.
pub fn rrc_response(f: f64, baud_rate: f64, rolloff: f64) -> f64 {
    let af = f.abs();
    let f1 = (1.0 - rolloff) * baud_rate / 2.0;
    let f2 = (1.0 + rolloff) * baud_rate / 2.0;
    if af <= f1 {
        1.0
    } else if af > f2 {
        0.0
    } else {
        let x = std::f64::consts::PI / (rolloff * baud_rate) * (af - f1);
        (0.5 * (1.0 + x.cos())).sqrt()
    }
}

/// Sampling grid of a synthesized field.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub sample_rate: f64,
    pub center_freq: f64,
    pub ref_freq: f64,
}

fn samples_per_symbol(sample_rate: f64, baud_rate: f64) -> Result<usize> {
    let sps = sample_rate / baud_rate;
    if sps < 1.0 || (sps - sps.round()).abs() > 1e-9 {
        return Err(Error::InvalidParameter(format!(
            "sample rate {sample_rate:.4e} is not an integer multiple of baud rate {baud_rate:.4e}"
        )));
    }
    Ok(sps.round() as usize)
}

/// RRC-shaped baseband waveform at DC, scaled to `power_w`.
fn shape_baseband(symbols: &ChannelSymbols, baud_rate: f64, rolloff: f64, power_w: f64, grid: GridSpec) -> Result<SampledField<f64>> {
    if symbols.is_empty() || symbols.x.len() != symbols.y.len() {
        return Err(Error::LengthMismatch("channel symbols must be non-empty and equal per polarization".into()));
    }
    let sps = samples_per_symbol(grid.sample_rate, baud_rate)?;
    let n_sym = symbols.len();
    let n = n_sym * sps;
    let mut sym_fft = FftPair::<f64>::new(n_sym);
    let mut fft = FftPair::<f64>::new(n);
    let response: Vec<f64> = (0..n)
        .map(|k| rrc_response(bin_frequency(k, n, grid.sample_rate), baud_rate, rolloff))
        .collect();

    let mut field = SampledField::zeros(n, grid.sample_rate, grid.center_freq, grid.ref_freq);
    for (src, dst) in [(&symbols.x, &mut field.x), (&symbols.y, &mut field.y)] {
        let mut spec = src.clone();
        sym_fft.forward(&mut spec);
        // zero-stuffing to sps samples/symbol replicates the symbol spectrum
        for (k, out) in dst.iter_mut().enumerate() {
            let h = response[k];
            if h != 0.0 {
                *out = spec[k % n_sym] * h;
            }
        }
        fft.inverse(dst);
    }
    let p = field.power();
    if p > 0.0 {
        field.scale((power_w / p).sqrt());
    }
    Ok(field)
}

/// One RRC-shaped channel at `offset_hz` from the field center, with average
/// power `power_dbm` over both polarizations.
pub fn shape_channel(
    symbols: &ChannelSymbols,
    baud_rate: f64,
    rolloff: f64,
    offset_hz: f64,
    power_dbm: f64,
    grid: GridSpec,
) -> Result<SampledField<f64>> {
    check_band(baud_rate, rolloff, offset_hz, grid.sample_rate)?;
    let mut field = shape_baseband(symbols, baud_rate, rolloff, units::dbm_to_watt(power_dbm), grid)?;
    shift_frequency(&mut field, offset_hz)?;
    Ok(field)
}

fn check_band(baud_rate: f64, rolloff: f64, offset_hz: f64, sample_rate: f64) -> Result<()> {
    let band = (1.0 + rolloff) * baud_rate;
    if band + 2.0 * offset_hz.abs() >= sample_rate {
        return Err(Error::Aliasing {
            band_hz: band,
            offset_hz,
            sample_rate,
        });
    }
    Ok(())
}

/// CUT and pump definition of a pump-and-probe run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ChannelPlan {
    pub cut_freq_thz: f64,
    /// Pump frequency minus CUT frequency.
    pub pump_offset_ghz: f64,
    pub grid_spacing_ghz: f64,
    pub baud_rate_gbd: f64,
    pub cut_power_dbm: f64,
    /// `None` transmits the CUT alone.
    pub pump_power_dbm: Option<f64>,
    /// Applied to both channels, each about its own carrier.
    pub predistortion_ps_nm: f64,
    pub prbs_degree: u32,
    pub rolloff: f64,
}

impl Default for ChannelPlan {
    fn default() -> Self {
        Self {
            cut_freq_thz: 193.9,
            pump_offset_ghz: 75.0,
            grid_spacing_ghz: 37.5,
            baud_rate_gbd: 32.0,
            cut_power_dbm: -20.0,
            pump_power_dbm: Some(1.0),
            predistortion_ps_nm: 102_400.0,
            prbs_degree: 17,
            rolloff: 0.1,
        }
    }
}

impl ChannelPlan {
    /// Default plan with the pump `multiple` grid slots above the CUT.
    pub fn with_pump_multiple(multiple: f64) -> Self {
        let mut plan = Self::default();
        plan.pump_offset_ghz = multiple * plan.grid_spacing_ghz;
        plan
    }

    pub fn cut_freq_hz(&self) -> f64 {
        self.cut_freq_thz * 1e12
    }

    pub fn pump_offset_hz(&self) -> f64 {
        self.pump_offset_ghz * 1e9
    }

    pub fn baud_rate(&self) -> f64 {
        self.baud_rate_gbd * 1e9
    }

    pub fn cut_power_w(&self) -> f64 {
        units::dbm_to_watt(self.cut_power_dbm)
    }

    pub fn pump_power_w(&self) -> f64 {
        self.pump_power_dbm.map_or(0.0, units::dbm_to_watt)
    }

    pub fn has_pump(&self) -> bool {
        self.pump_power_dbm.is_some_and(|p| p.is_finite())
    }

    pub fn pump_multiple(&self) -> f64 {
        self.pump_offset_ghz / self.grid_spacing_ghz
    }

    /// Midpoint between CUT and pump (the CUT itself when alone).
    pub fn field_center_hz(&self) -> f64 {
        if self.has_pump() {
            self.cut_freq_hz() + self.pump_offset_hz() / 2.0
        } else {
            self.cut_freq_hz()
        }
    }

    /// Occupied width of one channel, (1+ρ)·R_s.
    pub fn channel_bandwidth(&self) -> f64 {
        (1.0 + self.rolloff) * self.baud_rate()
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParameter(m));
        if !(self.cut_freq_thz > 0.0) || !(self.baud_rate_gbd > 0.0) {
            return bad("CUT frequency and baud rate must be positive".into());
        }
        if !(0.0..=1.0).contains(&self.rolloff) {
            return bad(format!("roll-off {} outside [0, 1]", self.rolloff));
        }
        if !self.cut_power_dbm.is_finite() || !self.predistortion_ps_nm.is_finite() {
            return bad("CUT power and predistortion must be finite".into());
        }
        if self.baud_rate_gbd >= self.grid_spacing_ghz {
            return bad(format!(
                "baud rate {} GBd does not fit the {} GHz grid",
                self.baud_rate_gbd, self.grid_spacing_ghz
            ));
        }
        if self.has_pump() && self.pump_offset_hz().abs() < self.channel_bandwidth() {
            return bad(format!(
                "pump offset {} GHz overlaps the CUT band",
                self.pump_offset_ghz
            ));
        }
        feedback_tap(self.prbs_degree)?;
        Ok(())
    }

    /// Smallest power-of-two multiple of R_s covering
    /// 2·(|pump offset| + (1+ρ)·R_s).
    pub fn sample_rate(&self) -> f64 {
        let offset = if self.has_pump() { self.pump_offset_hz().abs() } else { 0.0 };
        let needed = 2.0 * (offset + self.channel_bandwidth());
        let mut sps = 1u32;
        while (sps as f64) * self.baud_rate() < needed {
            sps *= 2;
        }
        sps as f64 * self.baud_rate()
    }
}

/// Synthesizes the CUT + pump field and returns the transmitted symbols.
pub fn build_wdm(
    plan: &ChannelPlan,
    n_symbols: usize,
    sample_rate: f64,
    seeds: &PrbsSeeds,
) -> Result<(SampledField<f64>, SymbolReference)> {
    plan.validate()?;
    if n_symbols == 0 || !n_symbols.is_power_of_two() {
        return Err(Error::InvalidParameter(format!(
            "symbol count must be a power of two, got {n_symbols}"
        )));
    }
    let grid = GridSpec {
        sample_rate,
        center_freq: plan.field_center_hz(),
        ref_freq: plan.cut_freq_hz(),
    };
    let rs = plan.baud_rate();

    let mut channels = vec![(
        ChannelSymbols::from_prbs(plan.prbs_degree, seeds.cut, n_symbols)?,
        plan.cut_freq_hz() - grid.center_freq,
        plan.cut_power_w(),
    )];
    if plan.has_pump() {
        channels.push((
            ChannelSymbols::from_prbs(plan.prbs_degree, seeds.pump, n_symbols)?,
            plan.cut_freq_hz() + plan.pump_offset_hz() - grid.center_freq,
            plan.pump_power_w(),
        ));
    }

    let n = n_symbols * samples_per_symbol(sample_rate, rs)?;
    let mut fft = FftPair::<f64>::new(n);
    let mut total = SampledField::zeros(n, sample_rate, grid.center_freq, grid.ref_freq);
    let mut symbols = Vec::with_capacity(channels.len());
    for (syms, offset, power) in channels {
        check_band(rs, plan.rolloff, offset, sample_rate)?;
        let mut ch = shape_baseband(&syms, rs, plan.rolloff, power, grid)?;
        apply_dispersion_in_place(&mut ch, plan.predistortion_ps_nm, Some(&mut fft))?;
        shift_frequency(&mut ch, offset)?;
        total.accumulate(&ch)?;
        symbols.push(syms);
    }
    let mut symbols = symbols.into_iter();
    let reference = SymbolReference {
        cut: symbols.next().unwrap_or_default(),
        pump: symbols.next(),
    };
    Ok((total, reference))
}
