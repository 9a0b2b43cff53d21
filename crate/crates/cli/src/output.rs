//! Result files: trace, scatter and dispersion-map CSVs plus JSON summaries.
//!
//! Every CSV starts with `#` comment lines carrying the schema version, the
//! config hash and the master seed. Column order is fixed.

use std::collections::BTreeMap;
use std::io::{Read, Write};
use std::path::Path;

use anyhow::{bail, Context};
use serde::{Deserialize, Serialize};
use xcisim::analysis::{asymptote, gradient, Asymptote, CorrelationSet, ScatterPoint, TraceMode, TracePoint, XciTrace};
use xcisim::campaign::ScenarioFailure;
use xcisim::topology::DispersionMap;
use xcisim::units;

pub const SCHEMA_VERSION: u32 = 1;

pub const TRACE_COLUMNS: [&str; 7] = [
    "scenario_id",
    "mode",
    "span_index",
    "snr_xci_db",
    "p_xci_dbm",
    "delta_p_xci_db",
    "floor_snr_db",
];

pub const SCATTER_COLUMNS: [&str; 7] = [
    "scenario_id",
    "lag",
    "theta_ratio",
    "c_lag",
    "d_res_ps_nm",
    "dispersion_ps_nm_km",
    "pump_offset_ghz",
];

pub const DISPERSION_COLUMNS: [&str; 3] = ["stage", "pre_dcu_ps_nm", "post_dcu_ps_nm"];

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub schema_version: u32,
    pub config_sha256: String,
    pub master_seed: u64,
    pub code_version: String,
}

impl Provenance {
    pub fn new(config_sha256: String, master_seed: u64) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            config_sha256,
            master_seed,
            code_version: env!("CARGO_PKG_VERSION").to_string(),
        }
    }

    fn write_header<W: Write>(&self, w: &mut W, kind: &str) -> std::io::Result<()> {
        writeln!(w, "# xcisim {kind} schema {}", self.schema_version)?;
        writeln!(w, "# config_sha256 {}", self.config_sha256)?;
        writeln!(w, "# master_seed {}", self.master_seed)?;
        writeln!(w, "# code_version {}", self.code_version)
    }
}

fn num(v: f64) -> String {
    format!("{v}")
}

fn opt(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}

fn csv_writer<W: Write>(w: W) -> csv::Writer<W> {
    csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(w)
}

pub fn write_traces<W: Write>(mut w: W, prov: &Provenance, traces: &[XciTrace]) -> anyhow::Result<()> {
    prov.write_header(&mut w, "trace")?;
    let mut out = csv_writer(w);
    out.write_record(TRACE_COLUMNS)?;
    for t in traces {
        for p in &t.points {
            out.write_record([
                t.scenario_id.clone(),
                t.mode.to_string(),
                p.span_index.to_string(),
                num(p.snr_xci_db),
                num(p.p_xci_dbm()),
                num(p.delta_p_db()),
                opt(p.floor_snr_db),
            ])?;
        }
    }
    out.flush()?;
    Ok(())
}

fn parse_f64(s: &str, what: &str, line: u64) -> anyhow::Result<f64> {
    s.trim()
        .parse::<f64>()
        .with_context(|| format!("line {line}: bad {what} '{s}'"))
}

/// Reads a trace CSV back; rows are grouped by (scenario, mode) in first-seen
/// order and gradients are recomputed from the accumulated powers.
pub fn read_traces<R: Read>(r: R) -> anyhow::Result<Vec<XciTrace>> {
    let mut rdr = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(r);
    let headers = rdr.headers()?.clone();
    if headers.iter().collect::<Vec<_>>() != TRACE_COLUMNS {
        bail!("unexpected trace columns: {:?}", headers.iter().collect::<Vec<_>>());
    }
    let mut order: Vec<(String, TraceMode)> = Vec::new();
    let mut rows: BTreeMap<(String, TraceMode), Vec<TracePoint>> = BTreeMap::new();
    for rec in rdr.records() {
        let rec = rec?;
        let line = rec.position().map(|p| p.line()).unwrap_or(0);
        let id = rec[0].to_string();
        let mode: TraceMode = rec[1].parse().map_err(|e| anyhow::anyhow!("line {line}: {e}"))?;
        let span_index: usize = rec[2].parse().with_context(|| format!("line {line}: bad span index"))?;
        let floor = if rec[6].trim().is_empty() { None } else { Some(parse_f64(&rec[6], "floor", line)?) };
        let point = TracePoint {
            span_index,
            snr_xci_db: parse_f64(&rec[3], "SNR", line)?,
            p_xci_w: units::dbm_to_watt(parse_f64(&rec[4], "power", line)?),
            delta_p_w: 0.0,
            floor_snr_db: floor,
        };
        let key = (id, mode);
        if !rows.contains_key(&key) {
            order.push(key.clone());
        }
        rows.entry(key).or_default().push(point);
    }
    Ok(order
        .into_iter()
        .map(|key| {
            let mut points = rows.remove(&key).unwrap_or_default();
            let p: Vec<f64> = points.iter().map(|x| x.p_xci_w).collect();
            let d = if key.1 == TraceMode::Intrinsic { p.clone() } else { gradient(&p) };
            for (pt, d) in points.iter_mut().zip(d) {
                pt.delta_p_w = d;
            }
            XciTrace {
                scenario_id: key.0,
                mode: key.1,
                points,
            }
        })
        .collect())
}

pub fn write_scatter<W: Write>(mut w: W, prov: &Provenance, points: &[ScatterPoint]) -> anyhow::Result<()> {
    prov.write_header(&mut w, "scatter")?;
    let mut out = csv_writer(w);
    out.write_record(SCATTER_COLUMNS)?;
    for p in points {
        out.write_record([
            p.scenario_id.clone(),
            p.lag.to_string(),
            num(p.theta_ratio),
            num(p.c),
            num(p.d_res_ps_nm),
            num(p.dispersion_ps_nm_km),
            num(p.pump_offset_ghz),
        ])?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_dispersion_map<W: Write>(mut w: W, prov: &Provenance, map: &DispersionMap) -> anyhow::Result<()> {
    prov.write_header(&mut w, "dispersion-map")?;
    let mut out = csv_writer(w);
    out.write_record(DISPERSION_COLUMNS)?;
    for (k, (pre, post)) in map.pre_dcu.iter().zip(&map.post_dcu).enumerate() {
        out.write_record([(k + 1).to_string(), num(*pre), num(*post)])?;
    }
    out.flush()?;
    Ok(())
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TraceSummary {
    pub scenario_id: String,
    pub mode: TraceMode,
    pub spans: usize,
    pub asymptote: Option<Asymptote>,
    pub min_floor_snr_db: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Summary {
    pub provenance: Provenance,
    pub traces: Vec<TraceSummary>,
    pub correlations: Vec<CorrelationSet>,
    pub failures: Vec<ScenarioFailure>,
}

pub fn summarize(
    prov: Provenance,
    traces: &[XciTrace],
    correlations: Vec<CorrelationSet>,
    failures: Vec<ScenarioFailure>,
    tail_window: usize,
) -> Summary {
    let traces = traces
        .iter()
        .map(|t| TraceSummary {
            scenario_id: t.scenario_id.clone(),
            mode: t.mode,
            spans: t.len(),
            asymptote: (t.mode != TraceMode::Intrinsic)
                .then(|| asymptote(&t.deltas_w(), tail_window.min(t.len())).ok())
                .flatten(),
            min_floor_snr_db: t.points.iter().filter_map(|p| p.floor_snr_db).reduce(f64::min),
        })
        .collect();
    Summary {
        provenance: prov,
        traces,
        correlations,
        failures,
    }
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> anyhow::Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text).with_context(|| format!("cannot write {}", path.display()))
}

pub fn create(path: &Path) -> anyhow::Result<std::io::BufWriter<std::fs::File>> {
    let f = std::fs::File::create(path).with_context(|| format!("cannot create {}", path.display()))?;
    Ok(std::io::BufWriter::new(f))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn prov() -> Provenance {
        Provenance {
            schema_version: SCHEMA_VERSION,
            config_sha256: "abc".into(),
            master_seed: 9,
            code_version: "0.0.0".into(),
        }
    }

    #[test]
    fn traces_round_trip() {
        let c = XciTrace::from_cumulative("s", TraceMode::Cumulative, 1e-5, &[1e-8, 2.5e-8, 3e-8], Some(&[60.0, 59.5, 60.0]));
        let i = XciTrace::from_intrinsic("s", 1e-5, &[1e-8, 1.1e-8, 0.9e-8], None);
        let mut buf = Vec::new();
        write_traces(&mut buf, &prov(), &[c.clone(), i.clone()]).unwrap();
        let back = read_traces(buf.as_slice()).unwrap();
        assert_eq!(back.len(), 2);
        for (a, b) in back.iter().zip([&c, &i]) {
            assert_eq!(a.scenario_id, b.scenario_id);
            assert_eq!(a.mode, b.mode);
            for (p, q) in a.points.iter().zip(&b.points) {
                assert!((p.p_xci_w / q.p_xci_w - 1.0).abs() < 1e-12);
                assert!((p.delta_p_w / q.delta_p_w - 1.0).abs() < 1e-9);
                assert_eq!(p.floor_snr_db, q.floor_snr_db);
            }
        }
    }

    #[test]
    fn wrong_columns_rejected() {
        assert!(read_traces("a,b\n1,2\n".as_bytes()).is_err());
    }

    #[test]
    fn header_carries_provenance() {
        let mut buf = Vec::new();
        write_dispersion_map(&mut buf, &prov(), &DispersionMap::default()).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.contains("# config_sha256 abc\n"));
        assert!(text.contains("# master_seed 9\n"));
        assert!(text.ends_with("stage,pre_dcu_ps_nm,post_dcu_ps_nm\n"));
    }
}
