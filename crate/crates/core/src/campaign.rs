//! Scenario catalog and execution.
//!
//! A [`Scenario`] is a two-OLS segment, a channel plan, a measurement mode and
//! the numerical settings. [`run_experiment_matrix`] runs the full experiment:
//! six D₁/D_RES panels at pump spacing 2×grid in every mode, plus 10-span
//! periodic lines at 4×grid for the correlation study.

use std::ops::ControlFlow;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analysis::{CorrelationSet, CorrelationTags, TraceMode, XciTrace};
use crate::error::{Error, Result};
use crate::gnmodel::{xci_incoherent_trace, GnIntegration};
use crate::rxdsp::{measure_xci, RxConfig};
use crate::scalar::Real;
use crate::ssfm::{KerrMask, Propagator, StepPolicy};
use crate::topology::{LinkSegment, Ols, SpanParams};
use crate::txsignal::{build_wdm, ChannelPlan, PrbsSeeds, SymbolReference};
use crate::units;

/// Environment variable holding the worker-pool size.
pub const WORKERS_ENV: &str = "XCISIM_WORKERS";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scale {
    /// 2^13 symbols, 0.1 km steps.
    #[default]
    Desk,
    /// 2^16 symbols, 0.05 km steps.
    Full,
}

impl Scale {
    pub fn symbols(self) -> usize {
        match self {
            Scale::Desk => 1 << 13,
            Scale::Full => 1 << 16,
        }
    }

    pub fn step_km(self) -> f64 {
        match self {
            Scale::Desk => 0.1,
            Scale::Full => 0.05,
        }
    }
}

impl std::str::FromStr for Scale {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "desk" => Ok(Scale::Desk),
            "full" => Ok(Scale::Full),
            other => Err(Error::InvalidParameter(format!("unknown scale '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Precision {
    #[default]
    F32,
    F64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    /// Kerr on everywhere, receiver after every span.
    Cumulative,
    /// Cumulative over the second OLS alone.
    Ols2Cumulative,
    /// Kerr on in one span per propagation.
    Intrinsic,
    /// Incoherent GN reference.
    Ign,
    /// Kerr off everywhere; the receiver floor.
    Linear,
}

impl Mode {
    pub fn trace_mode(self) -> TraceMode {
        match self {
            Mode::Cumulative | Mode::Ols2Cumulative | Mode::Linear => TraceMode::Cumulative,
            Mode::Intrinsic => TraceMode::Intrinsic,
            Mode::Ign => TraceMode::Ign,
        }
    }
}

/// Two periodic OLSs in cascade.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SegmentSpec {
    pub d1_ps_nm_km: f64,
    pub d2_ps_nm_km: f64,
    pub spans1: usize,
    pub spans2: usize,
    pub span_length_km: f64,
    pub d_res_ps_nm: f64,
    pub loss_db_per_km: f64,
    pub gamma_per_w_km: f64,
}

impl Default for SegmentSpec {
    fn default() -> Self {
        Self {
            d1_ps_nm_km: 4.0,
            d2_ps_nm_km: 16.0,
            spans1: 10,
            spans2: 20,
            span_length_km: 80.0,
            d_res_ps_nm: 40.0,
            loss_db_per_km: 0.2,
            gamma_per_w_km: 1.27,
        }
    }
}

impl SegmentSpec {
    pub fn span(&self, d: f64) -> Result<SpanParams> {
        SpanParams::new(self.span_length_km, self.loss_db_per_km, d, self.gamma_per_w_km)
    }

    pub fn build(&self) -> Result<LinkSegment> {
        let mut systems = vec![Ols::periodic("OLS1", self.span(self.d1_ps_nm_km)?, self.d_res_ps_nm, self.spans1)];
        if self.spans2 > 0 {
            systems.push(Ols::periodic("OLS2", self.span(self.d2_ps_nm_km)?, self.d_res_ps_nm, self.spans2));
        }
        LinkSegment::new(systems)
    }

    /// The first OLS alone.
    pub fn first_ols(&self) -> Result<LinkSegment> {
        LinkSegment::new(vec![Ols::periodic("OLS1", self.span(self.d1_ps_nm_km)?, self.d_res_ps_nm, self.spans1)])
    }
}

/// Numerical settings shared by the scenarios of a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimSettings {
    pub scale: Scale,
    pub precision: Precision,
    /// Overrides the symbol count of the scale.
    pub symbols: Option<usize>,
    /// Overrides the uniform step of the scale.
    pub step: Option<StepPolicy>,
    pub rx: RxConfig,
    pub gn: GnIntegration,
    /// Also run the Kerr-off line and report its SNR at every tap.
    pub measure_floor: bool,
}

impl Default for SimSettings {
    fn default() -> Self {
        Self {
            scale: Scale::Desk,
            precision: Precision::F32,
            symbols: None,
            step: None,
            rx: RxConfig::default(),
            gn: GnIntegration::default(),
            measure_floor: true,
        }
    }
}

impl SimSettings {
    pub fn symbols(&self) -> usize {
        self.symbols.unwrap_or_else(|| self.scale.symbols())
    }

    pub fn step_policy(&self) -> StepPolicy {
        self.step.unwrap_or_else(|| StepPolicy::uniform(self.scale.step_km()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub id: String,
    pub segment: SegmentSpec,
    pub plan: ChannelPlan,
    pub mode: Mode,
    pub seed: u64,
    pub settings: SimSettings,
}

impl Scenario {
    pub fn validate(&self) -> Result<()> {
        self.plan.validate()?;
        self.settings.rx.validate()?;
        self.settings.step_policy().validate()?;
        let n = self.settings.symbols();
        if n == 0 || !n.is_power_of_two() {
            return Err(Error::InvalidParameter(format!("symbol count {n} is not a power of two")));
        }
        if self.mode == Mode::Ols2Cumulative && self.segment.spans2 == 0 {
            return Err(Error::InvalidParameter(format!("scenario {} has no second OLS", self.id)));
        }
        self.segment.build()?.validate()
    }

    /// The spans actually propagated.
    pub fn link(&self) -> Result<LinkSegment> {
        let seg = self.segment.build()?;
        Ok(match self.mode {
            Mode::Ols2Cumulative => seg.tail_from_ols(1),
            _ => seg,
        })
    }
}

/// Result of one scenario; on failure `trace` holds the spans finished
/// before the error.
#[derive(Debug)]
pub struct ScenarioOutcome {
    pub trace: XciTrace,
    pub error: Option<Error>,
}

/// Runs one scenario to completion.
pub fn run_scenario(s: &Scenario) -> Result<XciTrace> {
    let out = execute(s);
    match out.error {
        Some(e) => Err(e),
        None => Ok(out.trace),
    }
}

/// Runs one scenario, keeping partial results on failure.
pub fn execute(s: &Scenario) -> ScenarioOutcome {
    let empty = XciTrace {
        scenario_id: s.id.clone(),
        mode: s.mode.trace_mode(),
        points: Vec::new(),
    };
    if let Err(e) = s.validate() {
        return ScenarioOutcome {
            trace: empty,
            error: Some(e),
        };
    }
    log::info!("scenario {} ({:?}) started", s.id, s.mode);
    let out = match s.mode {
        Mode::Ign => match s
            .link()
            .and_then(|seg| xci_incoherent_trace(s.id.clone(), &seg, &s.plan, s.settings.gn))
        {
            Ok(trace) => ScenarioOutcome { trace, error: None },
            Err(e) => ScenarioOutcome {
                trace: empty,
                error: Some(e),
            },
        },
        _ => match s.settings.precision {
            Precision::F32 => run_ssfm::<f32>(s),
            Precision::F64 => run_ssfm::<f64>(s),
        },
    };
    match &out.error {
        None => log::info!("scenario {} finished", s.id),
        Some(e) => log::warn!("scenario {} failed after {} spans: {e}", s.id, out.trace.len()),
    }
    out
}

struct Prepared<T: Real> {
    field: crate::field::SampledField<T>,
    reference: SymbolReference,
    link: LinkSegment,
}

fn prepare<T: Real>(s: &Scenario) -> Result<Prepared<T>> {
    let seeds = PrbsSeeds::from_master(s.seed, s.plan.prbs_degree)?;
    let (field, reference) = build_wdm(&s.plan, s.settings.symbols(), s.plan.sample_rate(), &seeds)?;
    Ok(Prepared {
        field: field.cast(),
        reference,
        link: s.link()?,
    })
}

/// SNR at every tap of the Kerr-off line.
fn floors<T: Real>(s: &Scenario, p: &Prepared<T>) -> Result<Vec<f64>> {
    let n = p.link.span_count();
    let mut field = p.field.clone();
    let mut prop = Propagator::for_field(&field);
    let mut out = Vec::with_capacity(n);
    prop.run_link(&mut field, &p.link, &KerrMask::none(n), &s.settings.step_policy(), |_, acc, f| {
        out.push(measure_xci(f, &s.plan, &p.reference.cut, acc, &s.settings.rx)?.snr_xci_db);
        Ok(ControlFlow::Continue(()))
    })?;
    Ok(out)
}

fn run_ssfm<T: Real>(s: &Scenario) -> ScenarioOutcome {
    let trace_mode = s.mode.trace_mode();
    let mut powers: Vec<f64> = Vec::new();
    let mut floor_db: Option<Vec<f64>> = None;
    let result = (|| -> Result<()> {
        let p = prepare::<T>(s)?;
        if s.settings.measure_floor {
            floor_db = Some(floors(s, &p)?);
        }
        let n = p.link.span_count();
        let policy = s.settings.step_policy();
        let mut prop = Propagator::for_field(&p.field);
        match s.mode {
            Mode::Intrinsic => {
                // spans before the active one are linear, so their common
                // prefix is propagated once and reused
                let mut linear = p.field.clone();
                for (i, stage) in p.link.stages().enumerate() {
                    let mut field = linear.clone();
                    prop.propagate_stage(&mut field, stage, true, &policy)?;
                    let acc: f64 = p.link.stages().take(i + 1).map(|st| st.residual_dispersion_ps_nm()).sum();
                    let m = measure_xci(&field, &s.plan, &p.reference.cut, acc, &s.settings.rx)?;
                    powers.push(units::dbm_to_watt(m.p_xci_dbm));
                    if i + 1 < n {
                        prop.propagate_stage(&mut linear, stage, false, &policy)?;
                    }
                }
            }
            _ => {
                let mask = if s.mode == Mode::Linear { KerrMask::none(n) } else { KerrMask::all(n) };
                let mut field = p.field.clone();
                prop.run_link(&mut field, &p.link, &mask, &policy, |_, acc, f| {
                    let m = measure_xci(f, &s.plan, &p.reference.cut, acc, &s.settings.rx)?;
                    powers.push(units::dbm_to_watt(m.p_xci_dbm));
                    Ok(ControlFlow::Continue(()))
                })?;
            }
        }
        Ok(())
    })();
    let cut = s.plan.cut_power_w();
    let floors = floor_db.as_deref();
    let trace = match trace_mode {
        TraceMode::Intrinsic => XciTrace::from_intrinsic(s.id.clone(), cut, &powers, floors),
        _ => XciTrace::from_cumulative(s.id.clone(), trace_mode, cut, &powers, floors),
    };
    ScenarioOutcome {
        trace,
        error: result.err(),
    }
}

/// Worker count from the environment, else the available parallelism.
pub fn worker_count() -> usize {
    std::env::var(WORKERS_ENV)
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&n| n > 0)
        .unwrap_or_else(|| std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1))
}

/// Runs scenarios on a bounded pool; outcomes keep the input order.
pub fn run_all(scenarios: &[Scenario], workers: usize) -> Vec<ScenarioOutcome> {
    let pool = rayon::ThreadPoolBuilder::new().num_threads(workers.max(1)).build();
    match pool {
        Ok(pool) => pool.install(|| scenarios.par_iter().map(execute).collect()),
        Err(e) => {
            log::warn!("worker pool unavailable ({e}); running sequentially");
            scenarios.iter().map(execute).collect()
        }
    }
}

/// A periodic window from which coherency coefficients are extracted.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationJob {
    pub cumulative_id: String,
    pub intrinsic_id: String,
    /// Number of leading spans forming the periodic window.
    pub window: usize,
    pub segment: SegmentSpec,
    pub plan: ChannelPlan,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct Provenance {
    pub schema_version: u32,
    pub code_version: String,
    pub config_hash: String,
    pub master_seed: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScenarioFailure {
    pub scenario_id: String,
    pub error: String,
    pub numeric: bool,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct CampaignResult {
    pub provenance: Provenance,
    /// Complete traces, in catalog order.
    pub traces: Vec<XciTrace>,
    /// Partial traces of failed scenarios.
    pub partial: Vec<XciTrace>,
    pub failures: Vec<ScenarioFailure>,
    pub correlations: Vec<CorrelationSet>,
}

impl CampaignResult {
    pub fn trace(&self, id: &str, mode: TraceMode) -> Option<&XciTrace> {
        self.traces.iter().find(|t| t.scenario_id == id && t.mode == mode)
    }

    pub fn correlation(&self, id: &str) -> Option<&CorrelationSet> {
        self.correlations.iter().find(|c| c.scenario_id == id)
    }
}

/// Scenario identifier encoding the physical parameters.
pub fn scenario_id(seg: &SegmentSpec, plan: &ChannelPlan) -> String {
    let mut id = format!("d{}", seg.d1_ps_nm_km);
    if seg.spans2 > 0 {
        id.push_str(&format!("-{}", seg.d2_ps_nm_km));
    }
    format!(
        "{id}_res{}_L{}_rs{}_pm{}",
        seg.d_res_ps_nm,
        seg.span_length_km,
        plan.baud_rate_gbd,
        plan.pump_multiple()
    )
}

pub const OLS2_SUFFIX: &str = "/ols2";

/// Inverse of [`scenario_id`]: fills the encoded parameters into copies of
/// `base_segment` and `base_plan`. IDs without a second dispersion describe a
/// single-OLS line.
pub fn parse_scenario_id(id: &str, base_segment: &SegmentSpec, base_plan: &ChannelPlan) -> Option<(SegmentSpec, ChannelPlan)> {
    let id = id.strip_suffix(OLS2_SUFFIX).unwrap_or(id);
    let mut seg = base_segment.clone();
    let mut plan = base_plan.clone();
    let mut parts = id.split('_');
    let ds = parts.next()?.strip_prefix('d')?;
    match ds.split_once('-') {
        Some((a, b)) => {
            seg.d1_ps_nm_km = a.parse().ok()?;
            seg.d2_ps_nm_km = b.parse().ok()?;
        }
        None => {
            seg.d1_ps_nm_km = ds.parse().ok()?;
            seg.d2_ps_nm_km = seg.d1_ps_nm_km;
            seg.spans2 = 0;
        }
    }
    seg.d_res_ps_nm = parts.next()?.strip_prefix("res")?.parse().ok()?;
    seg.span_length_km = parts.next()?.strip_prefix('L')?.parse().ok()?;
    plan.baud_rate_gbd = parts.next()?.strip_prefix("rs")?.parse().ok()?;
    let pm: f64 = parts.next()?.strip_prefix("pm")?.parse().ok()?;
    plan.pump_offset_ghz = pm * plan.grid_spacing_ghz;
    if parts.next().is_some() {
        return None;
    }
    Some((seg, plan))
}

pub const D_VALUES: [f64; 2] = [4.0, 16.0];
pub const D_RES_VALUES: [f64; 3] = [40.0, 80.0, 160.0];

/// One panel: the four trace kinds of a 10+20-span segment.
pub fn panel_scenarios(seg: &SegmentSpec, plan: &ChannelPlan, seed: u64, settings: &SimSettings) -> Vec<Scenario> {
    let id = scenario_id(seg, plan);
    [Mode::Cumulative, Mode::Ols2Cumulative, Mode::Intrinsic, Mode::Ign]
        .into_iter()
        .map(|mode| Scenario {
            id: if mode == Mode::Ols2Cumulative { format!("{id}{OLS2_SUFFIX}") } else { id.clone() },
            segment: seg.clone(),
            plan: plan.clone(),
            mode,
            seed,
            settings: settings.clone(),
        })
        .collect()
}

/// The experiment catalog and its correlation windows.
pub fn experiment_matrix(seed: u64, settings: &SimSettings) -> (Vec<Scenario>, Vec<CorrelationJob>) {
    let mut scenarios = Vec::new();
    let mut jobs = Vec::new();
    let base = SegmentSpec::default();
    let pm2 = ChannelPlan::with_pump_multiple(2.0);
    for &d1 in &D_VALUES {
        let d2 = if d1 == 4.0 { 16.0 } else { 4.0 };
        for &d_res in &D_RES_VALUES {
            let seg = SegmentSpec {
                d1_ps_nm_km: d1,
                d2_ps_nm_km: d2,
                d_res_ps_nm: d_res,
                ..base.clone()
            };
            let id = scenario_id(&seg, &pm2);
            scenarios.extend(panel_scenarios(&seg, &pm2, seed, settings));
            jobs.push(CorrelationJob {
                cumulative_id: id.clone(),
                intrinsic_id: id,
                window: seg.spans1,
                segment: seg,
                plan: pm2.clone(),
            });
        }
    }
    let pm4 = ChannelPlan::with_pump_multiple(4.0);
    for &d in &D_VALUES {
        for &d_res in &D_RES_VALUES {
            let seg = SegmentSpec {
                d1_ps_nm_km: d,
                d2_ps_nm_km: d,
                spans2: 0,
                d_res_ps_nm: d_res,
                ..base.clone()
            };
            let id = scenario_id(&seg, &pm4);
            for mode in [Mode::Cumulative, Mode::Intrinsic] {
                scenarios.push(Scenario {
                    id: id.clone(),
                    segment: seg.clone(),
                    plan: pm4.clone(),
                    mode,
                    seed,
                    settings: settings.clone(),
                });
            }
            jobs.push(CorrelationJob {
                cumulative_id: id.clone(),
                intrinsic_id: id,
                window: seg.spans1,
                segment: seg,
                plan: pm4.clone(),
            });
        }
    }
    (scenarios, jobs)
}

/// Extracts the correlation set of one job from finished traces.
pub fn correlate(job: &CorrelationJob, traces: &[XciTrace]) -> Result<CorrelationSet> {
    let find = |id: &str, mode| {
        traces
            .iter()
            .find(|t| t.scenario_id == id && t.mode == mode)
            .ok_or_else(|| Error::Empty(format!("{mode} trace of {id}")))
    };
    let cum = find(&job.cumulative_id, TraceMode::Cumulative)?;
    let intr = find(&job.intrinsic_id, TraceMode::Intrinsic)?;
    if cum.len() < job.window || intr.len() < job.window {
        return Err(Error::TraceTooShort {
            window: job.window,
            len: cum.len().min(intr.len()),
        });
    }
    let dp: Vec<f64> = cum.deltas_w()[..job.window].to_vec();
    let s2: Vec<f64> = intr.powers_w()[..job.window].to_vec();
    let window = job.segment.first_ols()?;
    CorrelationSet::extract(
        CorrelationTags {
            scenario_id: job.cumulative_id.clone(),
            d_res_ps_nm: job.segment.d_res_ps_nm,
            pump_offset_ghz: job.plan.pump_offset_ghz,
        },
        &dp,
        &s2,
        &window,
        job.plan.baud_rate(),
        job.plan.cut_freq_hz(),
    )
}

/// Runs a catalog and the correlation extraction that follows it.
pub fn run_catalog(scenarios: &[Scenario], jobs: &[CorrelationJob], seed: u64, workers: usize) -> CampaignResult {
    let outcomes = run_all(scenarios, workers);
    let mut result = CampaignResult {
        provenance: Provenance {
            schema_version: 1,
            code_version: env!("CARGO_PKG_VERSION").to_string(),
            config_hash: String::new(),
            master_seed: seed,
        },
        ..Default::default()
    };
    for out in outcomes {
        match out.error {
            None => result.traces.push(out.trace),
            Some(e) => {
                result.failures.push(ScenarioFailure {
                    scenario_id: out.trace.scenario_id.clone(),
                    error: e.to_string(),
                    numeric: e.is_numeric(),
                });
                result.partial.push(out.trace);
            }
        }
    }
    for job in jobs {
        match correlate(job, &result.traces) {
            Ok(set) => result.correlations.push(set),
            Err(e) => log::warn!("no correlation set for {}: {e}", job.cumulative_id),
        }
    }
    result
}

/// The full experiment matrix.
pub fn run_experiment_matrix(seed: u64, settings: &SimSettings, workers: usize) -> CampaignResult {
    let (scenarios, jobs) = experiment_matrix(seed, settings);
    run_catalog(&scenarios, &jobs, seed, workers)
}
