//! JSON run configuration.
//!
//! Every section and field is optional and falls back to the documented
//! default; unknown keys are rejected.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use xcisim::campaign::{Mode, Precision, Scale, SegmentSpec, SimSettings};
use xcisim::gnmodel::GnIntegration;
use xcisim::rxdsp::RxConfig;
use xcisim::ssfm::StepPolicy;
use xcisim::txsignal::ChannelPlan;

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SsfmSection {
    pub scale: Scale,
    pub precision: Precision,
    /// Symbols per channel; defaults to the scale's count.
    pub symbols: Option<usize>,
    /// Defaults to uniform steps of the scale's size.
    pub step: Option<StepPolicy>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CampaignSection {
    pub seed: u64,
    /// Modes run by `xcisim run`.
    pub modes: Vec<Mode>,
    pub measure_floor: bool,
    /// Gradients averaged for the asymptote level.
    pub tail_window: usize,
}

impl Default for CampaignSection {
    fn default() -> Self {
        Self {
            seed: 1,
            modes: vec![Mode::Cumulative, Mode::Intrinsic, Mode::Ign],
            measure_floor: true,
            tail_window: 5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSection {
    pub dir: PathBuf,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self { dir: PathBuf::from("xcisim-out") }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub segment: SegmentSpec,
    pub channels: ChannelPlan,
    pub rx: RxConfig,
    pub ssfm: SsfmSection,
    pub gn: GnIntegration,
    pub campaign: CampaignSection,
    pub output: OutputSection,
}

/// Command-line overrides applied on top of the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub scale: Option<Scale>,
    pub out: Option<PathBuf>,
}

impl Config {
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| anyhow::anyhow!("cannot read config {}: {e}", path.display()))?;
        Self::parse(&text).map_err(|e| anyhow::anyhow!("invalid config {}: {e}", path.display()))
    }

    pub fn parse(text: &str) -> serde_json::Result<Self> {
        serde_json::from_str(text)
    }

    pub fn apply(&mut self, o: &Overrides) {
        if let Some(seed) = o.seed {
            self.campaign.seed = seed;
        }
        if let Some(scale) = o.scale {
            self.ssfm.scale = scale;
        }
        if let Some(out) = &o.out {
            self.output.dir = out.clone();
        }
    }

    pub fn validate(&self) -> xcisim::Result<()> {
        self.channels.validate()?;
        self.rx.validate()?;
        self.settings().step_policy().validate()?;
        self.segment.build()?;
        Ok(())
    }

    pub fn settings(&self) -> SimSettings {
        SimSettings {
            scale: self.ssfm.scale,
            precision: self.ssfm.precision,
            symbols: self.ssfm.symbols,
            step: self.ssfm.step,
            rx: self.rx.clone(),
            gn: self.gn,
            measure_floor: self.campaign.measure_floor,
        }
    }

    /// SHA-256 of the canonical JSON form, output directory excluded so the
    /// same physics hashes the same wherever it is written.
    pub fn hash(&self) -> String {
        let mut canonical = self.clone();
        canonical.output = OutputSection::default();
        let json = serde_json::to_string(&canonical).expect("config serializes");
        hex::encode(Sha256::digest(json.as_bytes()))
    }

    pub fn to_pretty_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }
}
