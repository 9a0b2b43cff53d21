//! Desk-scale acceptance run. Prints one PASS/FAIL line per criterion and
//! exits non-zero if any fails. The experiment matrix runs twice (once more
//! for the determinism check), so expect close to an hour on one core.

use std::path::Path;
use std::time::Instant;

use num_complex::Complex64;
use proptest::prelude::*;
use proptest::test_runner::{Config as PropConfig, TestRunner};
use rustfft::FftPlanner;
use xcisim::analysis::{extract_c_lags, ls_slope, synthesize_gradient, TraceMode, XciTrace};
use xcisim::campaign::{run_scenario, Mode, Scenario, SegmentSpec, SimSettings};
use xcisim::field::apply_dispersion;
use xcisim::gnmodel::{xci_single_span, GnIntegration, GnScenario};
use xcisim::ssfm::{propagate_span, StepPolicy};
use xcisim::topology::SpanParams;
use xcisim::txsignal::{build_wdm, ChannelPlan, PrbsSeeds};
use xcisim_cli::commands::{cmd_matrix, SCATTER_FILE, SUMMARY_FILE, TRACES_FILE};
use xcisim_cli::config::Config;
use xcisim_cli::output::{read_traces, Summary};

const SEED: u64 = 1;
const C: f64 = 299_792_458.0;

type Check = anyhow::Result<(bool, String)>;

struct Matrix {
    traces: Vec<XciTrace>,
    summary: Summary,
}

impl Matrix {
    fn trace(&self, id: &str, mode: TraceMode) -> anyhow::Result<&XciTrace> {
        self.traces
            .iter()
            .find(|t| t.scenario_id == id && t.mode == mode)
            .ok_or_else(|| anyhow::anyhow!("missing {mode} trace {id}"))
    }

    /// Per-span ΔP of the cumulative trace and the IGN increment, dBm.
    fn delta_and_ign(&self, id: &str) -> anyhow::Result<(Vec<f64>, Vec<f64>)> {
        Ok((
            self.trace(id, TraceMode::Cumulative)?.deltas_db(),
            self.trace(id, TraceMode::Ign)?.deltas_db(),
        ))
    }
}

fn panel(d1: u32, d2: u32, d_res: u32) -> String {
    format!("d{d1}-{d2}_res{d_res}_L80_rs32_pm2")
}

fn settings() -> SimSettings {
    SimSettings {
        measure_floor: false,
        ..SimSettings::default()
    }
}

fn single_span(d: f64, length_km: f64) -> SegmentSpec {
    SegmentSpec {
        d1_ps_nm_km: d,
        d2_ps_nm_km: d,
        spans1: 1,
        spans2: 0,
        span_length_km: length_km,
        ..SegmentSpec::default()
    }
}

fn scenario(segment: SegmentSpec, plan: ChannelPlan, mode: Mode, settings: SimSettings) -> Scenario {
    Scenario {
        id: "acceptance".into(),
        segment,
        plan,
        mode,
        seed: SEED,
        settings,
    }
}

/// Intrinsic (Kerr in the only span) XCI power, dBm.
fn ssfm_single_span(d: f64, length_km: f64, plan: &ChannelPlan) -> anyhow::Result<f64> {
    let t = run_scenario(&scenario(single_span(d, length_km), plan.clone(), Mode::Intrinsic, settings()))?;
    Ok(t.points[0].p_xci_dbm())
}

fn gn_single_span(d: f64, plan: &ChannelPlan) -> anyhow::Result<f64> {
    let span = SpanParams::new(80.0, 0.2, d, 1.27)?;
    Ok(xci_single_span(&GnScenario::from_plan(span, plan, GnIntegration::default())?)?)
}

fn criterion_1() -> Check {
    let start = Instant::now();
    let seg = SegmentSpec::default();
    let t = run_scenario(&scenario(seg, ChannelPlan::default(), Mode::Linear, settings()))?;
    let secs = start.elapsed().as_secs_f64();
    let worst = t.points.iter().map(|p| p.snr_xci_db).fold(f64::INFINITY, f64::min);
    Ok((
        t.len() == 30 && worst >= 40.0 && secs <= 300.0,
        format!("{} taps, min SNR {worst:.2} dB, {secs:.1} s", t.len()),
    ))
}

fn criterion_2() -> Check {
    let plan = ChannelPlan::default();
    let mut ok = true;
    let mut detail = Vec::new();
    for d in [4.0, 16.0] {
        let ssfm = ssfm_single_span(d, 80.0, &plan)?;
        let gn = gn_single_span(d, &plan)?;
        let diff = gn - ssfm;
        ok &= diff.abs() <= 2.0 && diff >= -0.5;
        detail.push(format!("D={d}: SSFM {ssfm:.2} dBm, GN {gn:.2} dBm (GN-SSFM {diff:+.2} dB)"));
    }
    Ok((ok, detail.join("; ")))
}

fn criterion_3(m: &Matrix) -> Check {
    let (dp, ign) = m.delta_and_ign(&panel(4, 16, 40))?;
    let excess: Vec<f64> = (4..10).map(|i| dp[i] - ign[i]).collect();
    let min = excess.iter().cloned().fold(f64::INFINITY, f64::min);
    Ok((min >= 2.0, format!("min excess over spans 5-10 {min:.2} dB")))
}

fn criterion_4(m: &Matrix) -> Check {
    let (dp, ign) = m.delta_and_ign(&panel(4, 16, 160))?;
    let worst = (2..10).map(|i| (dp[i] - ign[i]).abs()).fold(0.0, f64::max);
    Ok((worst <= 1.5, format!("max |dP - IGN| over spans 3-10 {worst:.2} dB")))
}

fn criterion_5(m: &Matrix) -> Check {
    let mut means = Vec::new();
    for d_res in [40, 80, 160] {
        let (dp, ign) = m.delta_and_ign(&panel(4, 16, d_res))?;
        means.push((0..10).map(|i| dp[i] - ign[i]).sum::<f64>() / 10.0);
    }
    Ok((
        means[0] > means[1] && means[1] > means[2],
        format!(
            "mean excess spans 1-10: {:.2} / {:.2} / {:.2} dB at 40 / 80 / 160 ps/nm",
            means[0], means[1], means[2]
        ),
    ))
}

fn criterion_6(m: &Matrix) -> Check {
    let mut ok = true;
    let mut detail = Vec::new();
    for d_res in [40, 80, 160] {
        let dp = m.trace(&panel(16, 4, d_res), TraceMode::Cumulative)?.deltas_db();
        let asym = dp[5..10].iter().sum::<f64>() / 5.0;
        let jump = dp[10] - dp[9];
        let end = dp[25..30].iter().sum::<f64>() / 5.0;
        let approaches = end < dp[10] && (end - asym).abs() < (dp[10] - asym).abs();
        ok &= jump > 0.0 && approaches;
        detail.push(format!(
            "{d_res}: jump {jump:+.2} dB, span 11 {:.2}, tail {end:.2}, OLS1 level {asym:.2} dBm",
            dp[10]
        ));
    }
    Ok((ok, detail.join("; ")))
}

fn effective_length_km(length_km: f64) -> f64 {
    let alpha = 0.2 / (10.0 * std::f64::consts::LOG10_E);
    (1.0 - (-alpha * length_km).exp()) / alpha
}

fn criterion_7() -> Check {
    let plan = ChannelPlan::default();
    let expected = 20.0 * (effective_length_km(50.0) / effective_length_km(80.0)).log10();
    let mut ok = true;
    let mut detail = vec![format!("expected {expected:.2} dB")];
    for d in [4.0, 16.0] {
        let diff = ssfm_single_span(d, 50.0, &plan)? - ssfm_single_span(d, 80.0, &plan)?;
        ok &= (diff - expected).abs() <= 0.75;
        detail.push(format!("D={d}: {diff:+.2} dB"));
    }
    Ok((ok, detail.join("; ")))
}

fn criterion_8() -> Check {
    let mut runner = TestRunner::new(PropConfig {
        cases: 512,
        failure_persistence: None,
        ..PropConfig::default()
    });
    let strategy = (1e-12f64..1e-3, prop::collection::vec(-1.0f64..1.0, 1..40));
    let worst = std::cell::Cell::new(0.0f64);
    let result = runner.run(&strategy, |(sigma2, c)| {
        let s2 = vec![sigma2; c.len() + 1];
        let dp = synthesize_gradient(&s2, &c).unwrap();
        let back = extract_c_lags(&dp, &s2).unwrap();
        let err = back.iter().zip(&c).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        worst.set(worst.get().max(err));
        prop_assert!(err <= 1e-12, "error {err:e}");
        Ok(())
    });
    Ok(match result {
        Ok(()) => (true, format!("512 cases, max error {:.1e}", worst.get())),
        Err(e) => (false, e.to_string()),
    })
}

fn criterion_9(m: &Matrix) -> Check {
    let find = |id: &str| {
        m.summary
            .correlations
            .iter()
            .find(|c| c.scenario_id == id)
            .ok_or_else(|| anyhow::anyhow!("no correlation set for {id}"))
    };
    let low = find(&panel(4, 16, 40))?;
    let high = find(&panel(4, 16, 160))?;
    let c1 = low.c_lags[0];
    let slope = ls_slope(&low.theta_ratio, &low.c_lags).unwrap_or(f64::NAN);
    let negatives = high.c_lags.iter().filter(|&&c| c < 0.0).count();
    Ok((
        c1 > 0.0 && slope < 0.0 && negatives > 0,
        format!("c1 {c1:.3}, slope {slope:.3e} at 40 ps/nm; {negatives} negative lags at 160 ps/nm"),
    ))
}

fn criterion_10() -> Check {
    let p1 = ChannelPlan::default();
    let mut p2 = p1.clone();
    p2.pump_power_dbm = p1.pump_power_dbm.map(|p| p + 1.0);
    let ssfm = ssfm_single_span(4.0, 80.0, &p2)? - ssfm_single_span(4.0, 80.0, &p1)?;
    let gn = gn_single_span(4.0, &p2)? - gn_single_span(4.0, &p1)?;
    Ok((
        (ssfm - 2.0).abs() <= 0.3 && (gn - 2.0).abs() <= 1e-9,
        format!("SSFM {ssfm:+.3} dB, GN {gn:+.12} dB"),
    ))
}

/// Max |a - b| over both polarizations, relative to the peak of `b`.
fn max_rel_error(a: &xcisim::Field, b: &xcisim::Field) -> f64 {
    let peak = b.peak_amplitude();
    a.x.iter()
        .zip(&b.x)
        .chain(a.y.iter().zip(&b.y))
        .map(|(p, q)| (p - q).norm())
        .fold(0.0, f64::max)
        / peak
}

/// Kerr-free span computed directly: loss and exp(iπλ²DLf²/c) in the
/// frequency domain.
fn analytic_linear_span(field: &xcisim::Field, span: &SpanParams) -> xcisim::Field {
    let n = field.len();
    let mut planner = FftPlanner::<f64>::new();
    let fwd = planner.plan_fft_forward(n);
    let inv = planner.plan_fft_inverse(n);
    let lambda = C / field.ref_freq;
    let d_si = span.dispersion_ps_nm_km * span.length_km * 1e-3;
    let alpha = span.loss_db_per_km / (10.0 * std::f64::consts::LOG10_E);
    let amp = (-alpha * span.length_km / 2.0).exp();
    let mut out = field.clone();
    for pol in [&mut out.x, &mut out.y] {
        fwd.process(pol);
        for (k, z) in pol.iter_mut().enumerate() {
            let s = if k < n / 2 { k as f64 } else { k as f64 - n as f64 };
            let f = s * field.sample_rate / n as f64;
            let phase = std::f64::consts::PI * lambda * lambda * d_si * f * f / C;
            *z *= Complex64::from_polar(amp / n as f64, phase);
        }
        inv.process(pol);
    }
    out
}

fn criterion_11() -> Check {
    // step halving on the first three spans of the memory-effect panel
    let seg = SegmentSpec {
        spans1: 3,
        spans2: 0,
        ..SegmentSpec::default()
    };
    let coarse = run_scenario(&scenario(seg.clone(), ChannelPlan::default(), Mode::Cumulative, settings()))?;
    let fine_settings = SimSettings {
        step: Some(StepPolicy::uniform(0.05)),
        ..settings()
    };
    let fine = run_scenario(&scenario(seg, ChannelPlan::default(), Mode::Cumulative, fine_settings))?;
    let step_diff = coarse
        .points
        .iter()
        .zip(&fine.points)
        .map(|(a, b)| (a.snr_xci_db - b.snr_xci_db).abs())
        .fold(0.0, f64::max);

    let plan = ChannelPlan::default();
    let seeds = PrbsSeeds::from_master(SEED, plan.prbs_degree)?;
    let (field, _) = build_wdm(&plan, 1 << 11, plan.sample_rate(), &seeds)?;
    let span = SpanParams::new(80.0, 0.2, 16.0, 1.27)?;
    let ssfm = propagate_span(&field, &span, false, &StepPolicy::uniform(0.1))?;
    let linear_err = max_rel_error(&ssfm, &analytic_linear_span(&field, &span));

    let round = apply_dispersion(&apply_dispersion(&field, plan.predistortion_ps_nm)?, -plan.predistortion_ps_nm)?;
    let round_err = max_rel_error(&round, &field);

    Ok((
        step_diff < 0.1 && linear_err < 1e-8 && round_err < 1e-10,
        format!(
            "step halving {step_diff:.4} dB, Kerr-off vs analytic {linear_err:.1e}, dispersion round trip {round_err:.1e}"
        ),
    ))
}

fn run_matrix(dir: &Path) -> anyhow::Result<Matrix> {
    let mut cfg = Config::default();
    cfg.campaign.seed = SEED;
    cfg.output.dir = dir.to_path_buf();
    cmd_matrix(&cfg)?;
    let traces = read_traces(std::fs::File::open(dir.join(TRACES_FILE))?)?;
    let summary: Summary = serde_json::from_str(&std::fs::read_to_string(dir.join(SUMMARY_FILE))?)?;
    Ok(Matrix { traces, summary })
}

fn criterion_12(first: &Path) -> Check {
    let second = tempfile::tempdir()?;
    run_matrix(second.path())?;
    let mut same = true;
    let mut detail = Vec::new();
    for name in [TRACES_FILE, SCATTER_FILE] {
        let a = std::fs::read(first.join(name))?;
        let b = std::fs::read(second.path().join(name))?;
        same &= a == b;
        detail.push(format!("{name} {} bytes {}", a.len(), if a == b { "identical" } else { "differ" }));
    }
    Ok((same, detail.join(", ")))
}

fn report(n: u32, name: &str, check: Check, failed: &mut Vec<u32>) {
    let (ok, detail) = match check {
        Ok(r) => r,
        Err(e) => (false, format!("error: {e:#}")),
    };
    if !ok {
        failed.push(n);
    }
    println!("criterion {n:>2} {} {name}: {detail}", if ok { "PASS" } else { "FAIL" });
}

fn main() {
    let mut failed = Vec::new();
    report(8, "correlation round trip", criterion_8(), &mut failed);
    report(11, "SSFM numeric hygiene", criterion_11(), &mut failed);
    report(10, "pump power scaling", criterion_10(), &mut failed);
    report(7, "effective-length shift", criterion_7(), &mut failed);
    report(2, "IGN vs intrinsic", criterion_2(), &mut failed);
    report(1, "measurement floor", criterion_1(), &mut failed);

    let dir = tempfile::tempdir().expect("temp dir");
    let start = Instant::now();
    match run_matrix(dir.path()) {
        Ok(m) => {
            println!("matrix finished in {:.0} s", start.elapsed().as_secs_f64());
            report(3, "memory effect", criterion_3(&m), &mut failed);
            report(4, "fast settling at high residual", criterion_4(&m), &mut failed);
            report(5, "monotonic in residual dispersion", criterion_5(&m), &mut failed);
            report(6, "direction reversal", criterion_6(&m), &mut failed);
            report(9, "coherency coefficients", criterion_9(&m), &mut failed);
            report(12, "determinism", criterion_12(dir.path()), &mut failed);
        }
        Err(e) => {
            for (n, name) in [
                (3, "memory effect"),
                (4, "fast settling at high residual"),
                (5, "monotonic in residual dispersion"),
                (6, "direction reversal"),
                (9, "coherency coefficients"),
                (12, "determinism"),
            ] {
                report(n, name, Err(anyhow::anyhow!("matrix failed: {e:#}")), &mut failed);
            }
        }
    }

    if failed.is_empty() {
        println!("acceptance: all 12 criteria passed");
    } else {
        failed.sort();
        println!("acceptance: failed criteria {failed:?}");
        std::process::exit(1);
    }
}
