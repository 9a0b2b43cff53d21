use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use xcisim::analysis::{scatter_points, TraceMode, XciTrace};
use xcisim::campaign::{
    correlate, experiment_matrix, parse_scenario_id, run_catalog, scenario_id, worker_count, CampaignResult, CorrelationJob,
    Mode, Scenario, OLS2_SUFFIX,
};
use xcisim::gnmodel::xci_incoherent_trace;
use xcisim::topology::dispersion_map;

use crate::config::Config;
use crate::output::{self, Provenance};
use crate::RunFailed;

pub const TRACES_FILE: &str = "traces.csv";
pub const SUMMARY_FILE: &str = "summary.json";
pub const SCATTER_FILE: &str = "scatter.csv";
pub const DISPERSION_FILE: &str = "dispersion.csv";
pub const CONFIG_FILE: &str = "config.json";

fn prepare_dir(cfg: &Config) -> anyhow::Result<PathBuf> {
    let dir = cfg.output.dir.clone();
    std::fs::create_dir_all(&dir).with_context(|| format!("cannot create output directory {}", dir.display()))?;
    output::write_json(&dir.join(CONFIG_FILE), cfg)?;
    Ok(dir)
}

fn provenance(cfg: &Config) -> Provenance {
    Provenance::new(cfg.hash(), cfg.campaign.seed)
}

fn check_failures(result: &CampaignResult) -> anyhow::Result<()> {
    if result.failures.is_empty() {
        return Ok(());
    }
    let list: Vec<String> = result
        .failures
        .iter()
        .map(|f| format!("{}: {}", f.scenario_id, f.error))
        .collect();
    Err(RunFailed {
        numeric: result.failures.iter().any(|f| f.numeric),
        message: format!("{} scenario(s) failed\n  {}", list.len(), list.join("\n  ")),
    }
    .into())
}

fn write_campaign(cfg: &Config, dir: &Path, result: &CampaignResult, with_scatter: bool) -> anyhow::Result<()> {
    let prov = provenance(cfg);
    let mut traces = result.traces.clone();
    traces.extend(result.partial.iter().cloned());
    output::write_traces(output::create(&dir.join(TRACES_FILE))?, &prov, &traces)?;
    let summary = output::summarize(
        prov.clone(),
        &traces,
        result.correlations.clone(),
        result.failures.clone(),
        cfg.campaign.tail_window,
    );
    output::write_json(&dir.join(SUMMARY_FILE), &summary)?;
    if with_scatter {
        let points: Vec<_> = result.correlations.iter().flat_map(scatter_points).collect();
        output::write_scatter(output::create(&dir.join(SCATTER_FILE))?, &prov, &points)?;
    }
    Ok(())
}

/// Scenarios of `xcisim run`: the configured segment in each configured mode.
pub fn run_scenarios(cfg: &Config) -> (Vec<Scenario>, Vec<CorrelationJob>) {
    let id = scenario_id(&cfg.segment, &cfg.channels);
    let scenarios: Vec<Scenario> = cfg
        .campaign
        .modes
        .iter()
        .map(|&mode| Scenario {
            id: if mode == Mode::Ols2Cumulative { format!("{id}{OLS2_SUFFIX}") } else { id.clone() },
            segment: cfg.segment.clone(),
            plan: cfg.channels.clone(),
            mode,
            seed: cfg.campaign.seed,
            settings: cfg.settings(),
        })
        .collect();
    let has = |m| cfg.campaign.modes.contains(&m);
    let jobs = if has(Mode::Cumulative) && has(Mode::Intrinsic) && cfg.segment.spans1 > 1 {
        vec![CorrelationJob {
            cumulative_id: id.clone(),
            intrinsic_id: id,
            window: cfg.segment.spans1,
            segment: cfg.segment.clone(),
            plan: cfg.channels.clone(),
        }]
    } else {
        Vec::new()
    };
    (scenarios, jobs)
}

pub fn cmd_run(cfg: &Config) -> anyhow::Result<PathBuf> {
    cfg.validate()?;
    let dir = prepare_dir(cfg)?;
    let (scenarios, jobs) = run_scenarios(cfg);
    let result = run_catalog(&scenarios, &jobs, cfg.campaign.seed, worker_count());
    write_campaign(cfg, &dir, &result, !jobs.is_empty())?;
    check_failures(&result)?;
    Ok(dir)
}

/// The full experiment matrix. Segment and channel sections are ignored; the
/// catalog fixes them.
pub fn cmd_matrix(cfg: &Config) -> anyhow::Result<PathBuf> {
    cfg.rx.validate()?;
    cfg.settings().step_policy().validate()?;
    let dir = prepare_dir(cfg)?;
    let (scenarios, jobs) = experiment_matrix(cfg.campaign.seed, &cfg.settings());
    let result = run_catalog(&scenarios, &jobs, cfg.campaign.seed, worker_count());
    write_campaign(cfg, &dir, &result, true)?;
    check_failures(&result)?;
    Ok(dir)
}

pub fn cmd_gn(cfg: &Config) -> anyhow::Result<PathBuf> {
    cfg.validate()?;
    let dir = prepare_dir(cfg)?;
    let id = scenario_id(&cfg.segment, &cfg.channels);
    let trace = xci_incoherent_trace(id, &cfg.segment.build()?, &cfg.channels, cfg.gn)?;
    output::write_traces(output::create(&dir.join(TRACES_FILE))?, &provenance(cfg), &[trace])?;
    Ok(dir)
}

pub fn cmd_dispersion_map(cfg: &Config) -> anyhow::Result<PathBuf> {
    let dir = prepare_dir(cfg)?;
    let map = dispersion_map(&cfg.segment.build()?);
    output::write_dispersion_map(output::create(&dir.join(DISPERSION_FILE))?, &provenance(cfg), &map)?;
    Ok(dir)
}

fn load_traces(inputs: &[PathBuf]) -> anyhow::Result<Vec<XciTrace>> {
    let mut all = Vec::new();
    for path in inputs {
        let f = std::fs::File::open(path).with_context(|| format!("cannot read traces {}", path.display()))?;
        all.extend(output::read_traces(f).with_context(|| format!("in {}", path.display()))?);
    }
    Ok(all)
}

/// Correlation jobs for every cumulative trace (other than OLS2-only runs)
/// found in `traces`.
fn jobs_from_traces(cfg: &Config, traces: &[XciTrace], require_intrinsic: bool) -> anyhow::Result<Vec<CorrelationJob>> {
    let mut jobs = Vec::new();
    for t in traces {
        if t.mode != TraceMode::Cumulative || t.scenario_id.ends_with(OLS2_SUFFIX) {
            continue;
        }
        let has_intrinsic = traces
            .iter()
            .any(|u| u.mode == TraceMode::Intrinsic && u.scenario_id == t.scenario_id);
        if !has_intrinsic {
            if require_intrinsic {
                bail!("scenario {} has no intrinsic trace", t.scenario_id);
            }
            continue;
        }
        let Some((segment, plan)) = parse_scenario_id(&t.scenario_id, &cfg.segment, &cfg.channels) else {
            bail!("cannot read the parameters of scenario {}", t.scenario_id);
        };
        jobs.push(CorrelationJob {
            cumulative_id: t.scenario_id.clone(),
            intrinsic_id: t.scenario_id.clone(),
            window: segment.spans1.min(t.len()),
            segment,
            plan,
        });
    }
    Ok(jobs)
}

pub fn cmd_scatter(cfg: &Config, inputs: &[PathBuf]) -> anyhow::Result<PathBuf> {
    let traces = load_traces(inputs)?;
    let jobs = jobs_from_traces(cfg, &traces, true)?;
    if jobs.is_empty() {
        bail!("no cumulative trace with a matching intrinsic trace");
    }
    let mut points = Vec::new();
    for job in &jobs {
        let set = correlate(job, &traces).with_context(|| format!("scenario {}", job.cumulative_id))?;
        points.extend(scatter_points(&set));
    }
    let dir = prepare_dir(cfg)?;
    output::write_scatter(output::create(&dir.join(SCATTER_FILE))?, &provenance(cfg), &points)?;
    Ok(dir)
}

pub fn cmd_analyze(cfg: &Config, inputs: &[PathBuf]) -> anyhow::Result<PathBuf> {
    let traces = load_traces(inputs)?;
    let jobs = jobs_from_traces(cfg, &traces, false)?;
    let mut correlations = Vec::new();
    for job in &jobs {
        match correlate(job, &traces) {
            Ok(set) => correlations.push(set),
            Err(e) => log::warn!("no correlation set for {}: {e}", job.cumulative_id),
        }
    }
    let dir = prepare_dir(cfg)?;
    let summary = output::summarize(provenance(cfg), &traces, correlations, Vec::new(), cfg.campaign.tail_window);
    output::write_json(&dir.join(SUMMARY_FILE), &summary)?;
    Ok(dir)
}
