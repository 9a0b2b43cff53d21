//! Incoherent GN-model estimate of the XCI a single pump imposes on the CUT.
//!
//! The GN reference integral is evaluated at the CUT center over the two
//! spectral islands where two of the three interacting components sit in the
//! pump band, with rectangular channel spectra. Spans are summed
//! incoherently.

use serde::{Deserialize, Serialize};

use crate::analysis::{TraceMode, XciTrace};
use crate::error::{Error, Result};
use crate::topology::{LinkSegment, SpanParams};
use crate::txsignal::ChannelPlan;
use crate::units;

/// A channel with a rectangular power spectrum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GnChannel {
    /// Center frequency relative to the CUT, Hz.
    pub offset_hz: f64,
    pub baud_rate: f64,
    pub power_w: f64,
}

impl GnChannel {
    pub fn psd(&self) -> f64 {
        self.power_w / self.baud_rate
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GnIntegration {
    /// Points per axis of the first grid.
    pub initial_points: usize,
    pub tolerance_db: f64,
    pub max_refinements: u32,
}

impl Default for GnIntegration {
    fn default() -> Self {
        Self {
            initial_points: 32,
            tolerance_db: 0.05,
            max_refinements: 7,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GnScenario {
    pub span: SpanParams,
    /// Absolute CUT frequency, used for β₂.
    pub cut_freq_hz: f64,
    pub cut: GnChannel,
    pub pump: GnChannel,
    pub integration: GnIntegration,
}

impl GnScenario {
    /// Scenario for one span of `span` under `plan`.
    pub fn from_plan(span: SpanParams, plan: &ChannelPlan, integration: GnIntegration) -> Result<Self> {
        if !plan.has_pump() {
            return Err(Error::InvalidParameter("GN estimate needs a pump".into()));
        }
        Ok(Self {
            span,
            cut_freq_hz: plan.cut_freq_hz(),
            cut: GnChannel {
                offset_hz: 0.0,
                baud_rate: plan.baud_rate(),
                power_w: plan.cut_power_w(),
            },
            pump: GnChannel {
                offset_hz: plan.pump_offset_hz(),
                baud_rate: plan.baud_rate(),
                power_w: plan.pump_power_w(),
            },
            integration,
        })
    }

    fn validate(&self) -> Result<()> {
        self.span.validate()?;
        for ch in [&self.cut, &self.pump] {
            if !(ch.baud_rate > 0.0 && ch.power_w >= 0.0 && ch.power_w.is_finite()) {
                return Err(Error::InvalidParameter(format!("invalid GN channel {ch:?}")));
            }
        }
        let gap = (self.pump.offset_hz - self.cut.offset_hz).abs();
        if gap < (self.cut.baud_rate + self.pump.baud_rate) / 2.0 {
            return Err(Error::InvalidParameter(format!(
                "pump at {gap:.3e} Hz overlaps the CUT band"
            )));
        }
        if self.integration.initial_points < 2 {
            return Err(Error::InvalidParameter("GN grid needs at least 2 points".into()));
        }
        Ok(())
    }
}

/// ∫∫ |η(u, v)|² over one XCI island, midpoint rule with `n` points per axis.
/// u runs over the CUT band, v over the pump band with u + v also inside it.
fn island_integral(scn: &GnScenario, n: usize) -> f64 {
    let alpha = scn.span.alpha_lin_per_km();
    let l = scn.span.length_km;
    // β₂ in s²/km
    let beta2 = units::accumulated_beta2_s2(scn.span.dispersion_ps_nm_km, scn.cut_freq_hz);
    let c = 4.0 * std::f64::consts::PI * std::f64::consts::PI * beta2;
    let decay = (-alpha * l).exp();

    let (cb, pb) = (scn.cut.baud_rate, scn.pump.baud_rate);
    let p0 = scn.pump.offset_hz - scn.cut.offset_hz;
    let (plo, phi) = (p0 - pb / 2.0, p0 + pb / 2.0);
    let du = cb / n as f64;
    let mut total = 0.0;
    for a in 0..n {
        let u = -cb / 2.0 + (a as f64 + 0.5) * du;
        let lo = plo.max(plo - u);
        let hi = phi.min(phi - u);
        if hi <= lo {
            continue;
        }
        let dv = (hi - lo) / n as f64;
        let mut row = 0.0;
        for b in 0..n {
            let v = lo + (b as f64 + 0.5) * dv;
            let phase = c * u * v;
            // |1 − e^{−αL}e^{iφL}|² / (α² + φ²)
            let num = 1.0 - 2.0 * decay * (phase * l).cos() + decay * decay;
            let den = alpha * alpha + phase * phase;
            row += if den > 0.0 { num / den } else { l * l };
        }
        total += row * dv;
    }
    total * du
}

fn xci_watts(scn: &GnScenario, integral_km2_hz2: f64) -> f64 {
    let gamma = scn.span.gamma_per_w_km;
    let gp = scn.pump.psd();
    let gc = scn.cut.psd();
    // two mirror-image islands
    let g_nli = 16.0 / 27.0 * gamma * gamma * 2.0 * gp * gp * gc * integral_km2_hz2;
    g_nli * scn.cut.baud_rate
}

/// Single-span XCI power on the CUT in watts, refined by grid doubling until
/// successive estimates agree within the tolerance.
pub fn xci_single_span_w(scn: &GnScenario) -> Result<f64> {
    scn.validate()?;
    if scn.pump.power_w == 0.0 || scn.cut.power_w == 0.0 || scn.span.gamma_per_w_km == 0.0 {
        return Ok(0.0);
    }
    let mut n = scn.integration.initial_points;
    let mut prev = island_integral(scn, n);
    let mut delta_db = f64::INFINITY;
    for _ in 0..scn.integration.max_refinements {
        n *= 2;
        let next = island_integral(scn, n);
        delta_db = units::linear_to_db(next / prev).abs();
        prev = next;
        if delta_db < scn.integration.tolerance_db {
            return Ok(xci_watts(scn, next));
        }
    }
    Err(Error::NoConvergence { delta_db })
}

/// Single-span XCI power on the CUT, dBm.
pub fn xci_single_span(scn: &GnScenario) -> Result<f64> {
    Ok(units::watt_to_dbm(xci_single_span_w(scn)?))
}

/// Per-span IGN trace of `segment`: each span contributes its single-span
/// XCI, independent of DCUs and of every other span.
pub fn xci_incoherent_trace(
    scenario_id: impl Into<String>,
    segment: &LinkSegment,
    plan: &ChannelPlan,
    integration: GnIntegration,
) -> Result<XciTrace> {
    let mut cache: Vec<(SpanParams, f64)> = Vec::new();
    let mut per_span = Vec::with_capacity(segment.span_count());
    for stage in segment.stages() {
        let p = match cache.iter().find(|(s, _)| *s == stage.span) {
            Some(&(_, p)) => p,
            None => {
                let p = xci_single_span_w(&GnScenario::from_plan(stage.span, plan, integration)?)?;
                cache.push((stage.span, p));
                p
            }
        };
        per_span.push(p);
    }
    Ok(XciTrace::from_increments(
        scenario_id,
        TraceMode::Ign,
        plan.cut_power_w(),
        &per_span,
        None,
    ))
}
