//! Dispersion-managed line description: fiber spans, EDFAs, DCUs and the
//! optical line systems (OLSs) they are grouped into.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::units::{self, SPEED_OF_LIGHT};

/// Fiber parameters of one span, in engineering units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpanParams {
    pub length_km: f64,
    pub loss_db_per_km: f64,
    /// Any sign; positive is anomalous dispersion.
    pub dispersion_ps_nm_km: f64,
    pub gamma_per_w_km: f64,
}

impl SpanParams {
    pub fn new(
        length_km: f64,
        loss_db_per_km: f64,
        dispersion_ps_nm_km: f64,
        gamma_per_w_km: f64,
    ) -> Result<Self> {
        let span = Self {
            length_km,
            loss_db_per_km,
            dispersion_ps_nm_km,
            gamma_per_w_km,
        };
        span.validate()?;
        Ok(span)
    }

    /// Standard single-mode fiber as used throughout the campaign:
    /// 0.2 dB/km and γ = 1.27 1/(W·km).
    pub fn standard(length_km: f64, dispersion_ps_nm_km: f64) -> Self {
        Self {
            length_km,
            loss_db_per_km: 0.2,
            dispersion_ps_nm_km,
            gamma_per_w_km: 1.27,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let finite = self.length_km.is_finite()
            && self.loss_db_per_km.is_finite()
            && self.dispersion_ps_nm_km.is_finite()
            && self.gamma_per_w_km.is_finite();
        if !finite {
            return Err(Error::InvalidParameter("span parameters must be finite".into()));
        }
        if self.length_km <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "span length must be positive, got {} km",
                self.length_km
            )));
        }
        if self.loss_db_per_km < 0.0 {
            return Err(Error::InvalidParameter(format!(
                "fiber loss must be non-negative, got {} dB/km",
                self.loss_db_per_km
            )));
        }
        if self.gamma_per_w_km < 0.0 {
            return Err(Error::InvalidParameter(format!(
                "nonlinear coefficient must be non-negative, got {} 1/(W km)",
                self.gamma_per_w_km
            )));
        }
        Ok(())
    }

    /// Power attenuation coefficient, 1/km.
    pub fn alpha_lin_per_km(&self) -> f64 {
        self.loss_db_per_km * std::f64::consts::LN_10 / 10.0
    }

    /// Accumulated fiber dispersion D·L_s, ps/nm.
    pub fn accumulated_dispersion_ps_nm(&self) -> f64 {
        self.dispersion_ps_nm_km * self.length_km
    }

    pub fn effective_length_km(&self) -> f64 {
        effective_length(self)
    }

    pub fn transparency_gain_db(&self) -> f64 {
        transparency_gain(self)
    }
}

/// Lumped, purely linear dispersion compensation unit.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DcuParams {
    pub dcu_dispersion_ps_nm: f64,
}

/// Fiber span followed by its EDFA and DCU.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpanStage {
    pub span: SpanParams,
    pub edfa_gain_db: f64,
    pub dcu: DcuParams,
}

impl SpanStage {
    /// Stage whose EDFA exactly recovers the span loss.
    pub fn transparent(span: SpanParams, dcu: DcuParams) -> Self {
        Self {
            span,
            edfa_gain_db: transparency_gain(&span),
            dcu,
        }
    }

    /// Transparent stage with a DCU sized for the requested residual.
    pub fn with_residual(span: SpanParams, d_res_ps_nm: f64) -> Self {
        Self::transparent(span, dcu_for_residual(&span, d_res_ps_nm))
    }

    /// D·L_s + D_DCU, ps/nm.
    pub fn residual_dispersion_ps_nm(&self) -> f64 {
        self.span.accumulated_dispersion_ps_nm() + self.dcu.dcu_dispersion_ps_nm
    }
}

/// One optical line system: an ordered run of stages between ROADMs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Ols {
    pub name: String,
    pub stages: Vec<SpanStage>,
}

impl Ols {
    /// `count` identical transparent stages, each leaving `d_res_ps_nm`.
    pub fn periodic(name: impl Into<String>, span: SpanParams, d_res_ps_nm: f64, count: usize) -> Self {
        Self {
            name: name.into(),
            stages: vec![SpanStage::with_residual(span, d_res_ps_nm); count],
        }
    }

    /// `count` transparent stages without dispersion compensation.
    pub fn uncompensated(name: impl Into<String>, span: SpanParams, count: usize) -> Self {
        Self {
            name: name.into(),
            stages: vec![SpanStage::transparent(span, DcuParams::default()); count],
        }
    }
}

/// Ordered cascade of OLSs, in propagation order.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinkSegment {
    pub systems: Vec<Ols>,
}

impl LinkSegment {
    pub fn new(systems: Vec<Ols>) -> Result<Self> {
        let seg = Self { systems };
        seg.validate()?;
        Ok(seg)
    }

    pub fn validate(&self) -> Result<()> {
        for stage in self.stages() {
            stage.span.validate()?;
            if !stage.edfa_gain_db.is_finite() || !stage.dcu.dcu_dispersion_ps_nm.is_finite() {
                return Err(Error::InvalidParameter("stage gain and DCU must be finite".into()));
            }
        }
        Ok(())
    }

    /// N_s.
    pub fn span_count(&self) -> usize {
        self.systems.iter().map(|o| o.stages.len()).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.span_count() == 0
    }

    pub fn stages(&self) -> impl Iterator<Item = &SpanStage> + '_ {
        self.systems.iter().flat_map(|o| o.stages.iter())
    }

    /// Stage by 0-based propagation index.
    pub fn stage(&self, index: usize) -> Option<&SpanStage> {
        self.stages().nth(index)
    }

    /// Half-open 0-based stage ranges of each OLS.
    pub fn ols_ranges(&self) -> Vec<std::ops::Range<usize>> {
        let mut start = 0;
        self.systems
            .iter()
            .map(|o| {
                let r = start..start + o.stages.len();
                start = r.end;
                r
            })
            .collect()
    }

    /// Segment made of the OLSs from `first` onwards.
    pub fn tail_from_ols(&self, first: usize) -> Self {
        Self {
            systems: self.systems.iter().skip(first).cloned().collect(),
        }
    }

    /// Accumulated line dispersion (post-DCU) after each stage, ps/nm.
    pub fn post_dcu_dispersion(&self) -> Vec<f64> {
        dispersion_map(self).post_dcu
    }
}

/// Accumulated dispersion sampled after each fiber and after each DCU.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct DispersionMap {
    pub pre_dcu: Vec<f64>,
    pub post_dcu: Vec<f64>,
}

/// DCU leaving `d_res_ps_nm` after `span`: D_DCU = D_RES − D·L_s.
pub fn dcu_for_residual(span: &SpanParams, d_res_ps_nm: f64) -> DcuParams {
    DcuParams {
        dcu_dispersion_ps_nm: d_res_ps_nm - span.accumulated_dispersion_ps_nm(),
    }
}

/// β₂ in ps²/km for dispersion `d_ps_nm_km` at `f_ref_hz`; positive D gives
/// negative β₂.
pub fn beta2_from_dispersion(d_ps_nm_km: f64, f_ref_hz: f64) -> f64 {
    let lambda = SPEED_OF_LIGHT / f_ref_hz;
    let beta2_si = -units::ps_per_nm_km_to_si(d_ps_nm_km) * lambda * lambda
        / (2.0 * std::f64::consts::PI * SPEED_OF_LIGHT);
    // s²/m → ps²/km
    beta2_si * 1e27
}

/// Inverse of [`beta2_from_dispersion`].
pub fn dispersion_from_beta2(beta2_ps2_km: f64, f_ref_hz: f64) -> f64 {
    let lambda = SPEED_OF_LIGHT / f_ref_hz;
    -beta2_ps2_km * 1e-27 * 2.0 * std::f64::consts::PI * SPEED_OF_LIGHT / (lambda * lambda) * 1e6
}

/// Effective nonlinear length, km.
pub fn effective_length(span: &SpanParams) -> f64 {
    let a = span.alpha_lin_per_km();
    let al = a * span.length_km;
    if al < 1e-12 {
        span.length_km
    } else {
        // exp_m1 keeps the small-loss limit accurate
        -(-al).exp_m1() / a
    }
}

/// EDFA gain that recovers the span loss, dB.
pub fn transparency_gain(span: &SpanParams) -> f64 {
    span.loss_db_per_km * span.length_km
}

pub fn dispersion_map(segment: &LinkSegment) -> DispersionMap {
    let n = segment.span_count();
    let mut map = DispersionMap {
        pre_dcu: Vec::with_capacity(n),
        post_dcu: Vec::with_capacity(n),
    };
    let mut acc = 0.0;
    for stage in segment.stages() {
        acc += stage.span.accumulated_dispersion_ps_nm();
        map.pre_dcu.push(acc);
        acc += stage.dcu.dcu_dispersion_ps_nm;
        map.post_dcu.push(acc);
    }
    map
}
