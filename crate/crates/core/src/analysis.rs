//! Per-span XCI traces and the quantities derived from them: power
//! gradients, coherency coefficients between spans, the residual-dispersion
//! normalization θ and asymptote estimates.
//!
//! Powers are stored in watts. Gradients and coherency extraction work on
//! linear powers; dB is only used for reporting and asymptote levels.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::topology::{effective_length, LinkSegment, SpanParams};
use crate::units;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TraceMode {
    /// Kerr on in every span, receiver after each span.
    Cumulative,
    /// Kerr on in one span at a time; point i is that span's own XCI.
    Intrinsic,
    /// Incoherent GN reference.
    Ign,
}

impl TraceMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            TraceMode::Cumulative => "cumulative",
            TraceMode::Intrinsic => "intrinsic",
            TraceMode::Ign => "ign",
        }
    }
}

impl fmt::Display for TraceMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for TraceMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "cumulative" => Ok(TraceMode::Cumulative),
            "intrinsic" => Ok(TraceMode::Intrinsic),
            "ign" => Ok(TraceMode::Ign),
            other => Err(Error::InvalidParameter(format!("unknown trace mode '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TracePoint {
    /// 1-based span index.
    pub span_index: usize,
    pub snr_xci_db: f64,
    /// Accumulated XCI power (intrinsic traces: the span's own power), W.
    pub p_xci_w: f64,
    /// Increment over the previous span, W.
    pub delta_p_w: f64,
    /// Linear-only SNR at the same tap, when measured.
    pub floor_snr_db: Option<f64>,
}

impl TracePoint {
    pub fn p_xci_dbm(&self) -> f64 {
        units::watt_to_dbm(self.p_xci_w)
    }

    /// Gradient in dB relative to 1 mW; NaN when the increment is not
    /// positive.
    pub fn delta_p_db(&self) -> f64 {
        if self.delta_p_w > 0.0 {
            units::watt_to_dbm(self.delta_p_w)
        } else {
            f64::NAN
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct XciTrace {
    pub scenario_id: String,
    pub mode: TraceMode,
    pub points: Vec<TracePoint>,
}

impl XciTrace {
    /// Trace from accumulated XCI powers measured after spans 1..=N.
    pub fn from_cumulative(
        scenario_id: impl Into<String>,
        mode: TraceMode,
        cut_power_w: f64,
        cumulative_w: &[f64],
        floors_db: Option<&[f64]>,
    ) -> Self {
        let deltas = gradient(cumulative_w);
        let points = cumulative_w
            .iter()
            .zip(&deltas)
            .enumerate()
            .map(|(i, (&p, &d))| TracePoint {
                span_index: i + 1,
                snr_xci_db: units::linear_to_db(cut_power_w / p),
                p_xci_w: p,
                delta_p_w: d,
                floor_snr_db: floors_db.and_then(|f| f.get(i).copied()),
            })
            .collect();
        Self {
            scenario_id: scenario_id.into(),
            mode,
            points,
        }
    }

    /// Trace from per-span increments; the accumulated power is their running
    /// sum, so increments are kept exactly.
    pub fn from_increments(
        scenario_id: impl Into<String>,
        mode: TraceMode,
        cut_power_w: f64,
        delta_w: &[f64],
        floors_db: Option<&[f64]>,
    ) -> Self {
        let mut acc = 0.0;
        let points = delta_w
            .iter()
            .enumerate()
            .map(|(i, &d)| {
                acc += d;
                TracePoint {
                    span_index: i + 1,
                    snr_xci_db: units::linear_to_db(cut_power_w / acc),
                    p_xci_w: acc,
                    delta_p_w: d,
                    floor_snr_db: floors_db.and_then(|f| f.get(i).copied()),
                }
            })
            .collect();
        Self {
            scenario_id: scenario_id.into(),
            mode,
            points,
        }
    }

    /// Trace of per-span intrinsic powers σ_i².
    pub fn from_intrinsic(
        scenario_id: impl Into<String>,
        cut_power_w: f64,
        sigma2_w: &[f64],
        floors_db: Option<&[f64]>,
    ) -> Self {
        let points = sigma2_w
            .iter()
            .enumerate()
            .map(|(i, &p)| TracePoint {
                span_index: i + 1,
                snr_xci_db: units::linear_to_db(cut_power_w / p),
                p_xci_w: p,
                delta_p_w: p,
                floor_snr_db: floors_db.and_then(|f| f.get(i).copied()),
            })
            .collect();
        Self {
            scenario_id: scenario_id.into(),
            mode: TraceMode::Intrinsic,
            points,
        }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn powers_w(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.p_xci_w).collect()
    }

    pub fn deltas_w(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.delta_p_w).collect()
    }

    pub fn deltas_db(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.delta_p_db()).collect()
    }
}

/// ΔP_i = P_i − P_{i−1} with P_0 = 0, in linear units.
pub fn gradient(cumulative_w: &[f64]) -> Vec<f64> {
    let mut prev = 0.0;
    cumulative_w
        .iter()
        .enumerate()
        .map(|(i, &p)| {
            let d = p - prev;
            if d < 0.0 {
                log::warn!("accumulated XCI drops at span {} ({p:.3e} W after {prev:.3e} W)", i + 1);
            }
            prev = p;
            d
        })
        .collect()
}

/// True when every σ_i² lies within `tol_db` of their mean.
pub fn is_periodic(sigma2_w: &[f64], tol_db: f64) -> bool {
    if sigma2_w.is_empty() {
        return false;
    }
    let mean = sigma2_w.iter().sum::<f64>() / sigma2_w.len() as f64;
    mean > 0.0
        && sigma2_w
            .iter()
            .all(|&s| s > 0.0 && units::linear_to_db(s / mean).abs() <= tol_db)
}

/// Coherency coefficients c_1..c_{N−1} of a periodic line, assuming
/// C_ij = c_{i−j}: c_{i−1} = (ΔP_i − ΔP_{i−1}) / (2σ²), with σ² the mean
/// intrinsic power.
pub fn extract_c_lags(delta_p_w: &[f64], sigma2_w: &[f64]) -> Result<Vec<f64>> {
    if delta_p_w.len() != sigma2_w.len() {
        return Err(Error::LengthMismatch(format!(
            "{} gradients for {} intrinsic powers",
            delta_p_w.len(),
            sigma2_w.len()
        )));
    }
    if sigma2_w.is_empty() {
        return Err(Error::Empty("no spans".into()));
    }
    if sigma2_w.iter().any(|&s| !(s > 0.0)) {
        return Err(Error::InvalidParameter("intrinsic XCI power must be positive".into()));
    }
    if !is_periodic(sigma2_w, 0.5) {
        let lo = sigma2_w.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = sigma2_w.iter().cloned().fold(0.0, f64::max);
        return Err(Error::NotPeriodic(format!(
            "intrinsic powers spread over {:.2} dB",
            units::linear_to_db(hi / lo)
        )));
    }
    let sigma2 = sigma2_w.iter().sum::<f64>() / sigma2_w.len() as f64;
    Ok(delta_p_w.windows(2).map(|w| (w[1] - w[0]) / (2.0 * sigma2)).collect())
}

/// Gradients implied by intrinsic powers and lag coefficients:
/// ΔP_i = σ_i² + 2·Σ_{j<i} c_{i−j}·σ_i·σ_j.
pub fn synthesize_gradient(sigma2_w: &[f64], c_lags: &[f64]) -> Result<Vec<f64>> {
    if c_lags.len() + 1 < sigma2_w.len() {
        return Err(Error::LengthMismatch(format!(
            "{} spans need {} lag coefficients, got {}",
            sigma2_w.len(),
            sigma2_w.len().saturating_sub(1),
            c_lags.len()
        )));
    }
    let sigma: Vec<f64> = sigma2_w.iter().map(|s| s.sqrt()).collect();
    Ok((0..sigma.len())
        .map(|i| sigma2_w[i] + 2.0 * (0..i).map(|j| c_lags[i - j - 1] * sigma[i] * sigma[j]).sum::<f64>())
        .collect())
}

/// π·R_s²·|Σ_{k=j}^{i−1} β_res,k| over the post-DCU residuals of stages
/// j..i−1 (1-based).
pub fn theta_span(segment: &LinkSegment, i: usize, j: usize, baud_rate: f64, ref_freq: f64) -> Result<f64> {
    let n = segment.span_count();
    if j == 0 || j > i || i > n {
        return Err(Error::IndexOrder { i, j, n });
    }
    let beta: f64 = segment
        .stages()
        .skip(j - 1)
        .take(i - j)
        .map(|s| units::accumulated_beta2_s2(s.residual_dispersion_ps_nm(), ref_freq))
        .sum();
    Ok(std::f64::consts::PI * baud_rate * baud_rate * beta.abs())
}

/// π·R_s²·|β₂|·L_eff.
pub fn theta_eff(span: &SpanParams, baud_rate: f64, ref_freq: f64) -> f64 {
    let beta2_s2_per_km = units::accumulated_beta2_s2(span.dispersion_ps_nm_km, ref_freq);
    std::f64::consts::PI * baud_rate * baud_rate * beta2_s2_per_km.abs() * effective_length(span)
}

/// Coherency coefficients of one periodic window with their θ ratios.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationSet {
    pub scenario_id: String,
    pub d_res_ps_nm: f64,
    pub dispersion_ps_nm_km: f64,
    pub pump_offset_ghz: f64,
    pub sigma2_w: Vec<f64>,
    /// c_1..c_{N−1}.
    pub c_lags: Vec<f64>,
    /// θ_span(lag)/θ_eff for each lag.
    pub theta_ratio: Vec<f64>,
}

/// Metadata attached to a correlation extraction.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationTags {
    pub scenario_id: String,
    pub d_res_ps_nm: f64,
    pub pump_offset_ghz: f64,
}

impl CorrelationSet {
    /// Extracts the set from the cumulative gradients and intrinsic powers of
    /// the spans of `window` (a periodic run of identical stages).
    pub fn extract(
        tags: CorrelationTags,
        delta_p_w: &[f64],
        sigma2_w: &[f64],
        window: &LinkSegment,
        baud_rate: f64,
        ref_freq: f64,
    ) -> Result<Self> {
        if window.span_count() != delta_p_w.len() {
            return Err(Error::LengthMismatch(format!(
                "window has {} spans, trace has {}",
                window.span_count(),
                delta_p_w.len()
            )));
        }
        let c_lags = extract_c_lags(delta_p_w, sigma2_w)?;
        let first = window.stage(0).ok_or_else(|| Error::Empty("window".into()))?;
        let eff = theta_eff(&first.span, baud_rate, ref_freq);
        let theta_ratio = (1..=c_lags.len())
            .map(|lag| theta_span(window, 1 + lag, 1, baud_rate, ref_freq).map(|t| t / eff))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            scenario_id: tags.scenario_id,
            d_res_ps_nm: tags.d_res_ps_nm,
            dispersion_ps_nm_km: first.span.dispersion_ps_nm_km,
            pump_offset_ghz: tags.pump_offset_ghz,
            sigma2_w: sigma2_w.to_vec(),
            c_lags,
            theta_ratio,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScatterPoint {
    pub scenario_id: String,
    pub lag: usize,
    pub theta_ratio: f64,
    pub c: f64,
    pub d_res_ps_nm: f64,
    pub dispersion_ps_nm_km: f64,
    pub pump_offset_ghz: f64,
}

pub fn scatter_points(set: &CorrelationSet) -> Vec<ScatterPoint> {
    set.c_lags
        .iter()
        .zip(&set.theta_ratio)
        .enumerate()
        .map(|(k, (&c, &t))| ScatterPoint {
            scenario_id: set.scenario_id.clone(),
            lag: k + 1,
            theta_ratio: t,
            c,
            d_res_ps_nm: set.d_res_ps_nm,
            dispersion_ps_nm_km: set.dispersion_ps_nm_km,
            pump_offset_ghz: set.pump_offset_ghz,
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Asymptote {
    /// Mean of the tail gradients, dB re 1 mW.
    pub level_db: f64,
    /// First 1-based span from which every gradient stays within 0.5 dB of
    /// the level.
    pub settling_index: Option<usize>,
}

pub fn asymptote(delta_p_w: &[f64], tail_window: usize) -> Result<Asymptote> {
    if tail_window == 0 || delta_p_w.len() < tail_window {
        return Err(Error::TraceTooShort {
            window: tail_window,
            len: delta_p_w.len(),
        });
    }
    let db: Vec<f64> = delta_p_w
        .iter()
        .map(|&d| if d > 0.0 { units::watt_to_dbm(d) } else { f64::NAN })
        .collect();
    let tail = &db[db.len() - tail_window..];
    let level_db = tail.iter().sum::<f64>() / tail_window as f64;
    let mut settling_index = None;
    for i in (0..db.len()).rev() {
        if (db[i] - level_db).abs() <= 0.5 {
            settling_index = Some(i + 1);
        } else {
            break;
        }
    }
    Ok(Asymptote {
        level_db,
        settling_index,
    })
}

/// Least-squares slope of `ys` against `xs`.
pub fn ls_slope(xs: &[f64], ys: &[f64]) -> Option<f64> {
    let n = xs.len().min(ys.len());
    if n < 2 {
        return None;
    }
    let mx = xs[..n].iter().sum::<f64>() / n as f64;
    let my = ys[..n].iter().sum::<f64>() / n as f64;
    let sxy: f64 = xs[..n].iter().zip(&ys[..n]).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs[..n].iter().map(|x| (x - mx) * (x - mx)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

/// Pearson correlation coefficient.
pub fn pearson(xs: &[f64], ys: &[f64]) -> Option<f64> {
    let n = xs.len().min(ys.len());
    if n < 2 {
        return None;
    }
    let mx = xs[..n].iter().sum::<f64>() / n as f64;
    let my = ys[..n].iter().sum::<f64>() / n as f64;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in xs[..n].iter().zip(&ys[..n]) {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx) * (x - mx);
        syy += (y - my) * (y - my);
    }
    (sxx > 0.0 && syy > 0.0).then(|| sxy / (sxx * syy).sqrt())
}
