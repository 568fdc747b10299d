//! TOML run configuration. Every physical quantity carries its unit in the
//! key name; values are converted to SI on load.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use atompair::calibration::CalibrationTable;
use atompair::emission::{EmissionConfig, HeraldModel};
use atompair::gradiometry::GradiometerConfig;
use atompair::montecarlo::{EfficiencyBudget, SequenceConfig};
use serde::Deserialize;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub seed: Option<u64>,
    pub sequence: SequenceSection,
    pub herald: HeraldSection,
    pub emission: EmissionSection,
    pub efficiency: Option<EfficiencySection>,
    pub gradiometer: GradiometerSection,
    pub calibration: CalibrationSection,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SequenceSection {
    pub p_e: f64,
    pub p_w: f64,
    pub eta: f64,
    pub attempts_per_sequence: u32,
    pub sequence_rate_per_s: f64,
    pub cooling_time_us: f64,
    pub pump_time_us: f64,
    pub excitation_pulse_ns: f64,
    pub witness_window_us: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HeraldSection {
    /// γ, the reduction of the single-excitation coherence.
    pub coherence_factor: Option<f64>,
    /// |ρ₀₁| directly; exclusive with `coherence_factor`.
    pub coherence_magnitude: Option<f64>,
    #[serde(default)]
    pub phase_rad: f64,
    pub single_excitation_fraction: f64,
    /// Defaults to half of the non-single fraction, as does `double_fraction`.
    pub zero_fraction: Option<f64>,
    pub double_fraction: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EmissionSection {
    pub kappa: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EfficiencySection {
    pub collection_fraction: f64,
    pub optics_transmission: f64,
    pub detector_quantum_efficiency: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GradiometerSection {
    #[serde(rename = "bias_field_mT")]
    pub bias_field_mt: f64,
    #[serde(rename = "gradient_mT_per_m")]
    pub gradient_mt_per_m: f64,
    pub separation_um: f64,
    #[serde(default = "default_g_factor")]
    pub g_factor: f64,
}

fn default_g_factor() -> f64 {
    atompair::gradiometry::DEFAULT_G_FACTOR
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CalibrationSection {
    pub wavelength_nm: f64,
    /// CSV with `tau_us,delta_phi_rad`, relative to the config file.
    pub table_path: Option<PathBuf>,
}

/// A configuration with every section converted and validated.
#[derive(Debug)]
pub struct Resolved {
    pub seed: Option<u64>,
    pub sequence: SequenceConfig,
    pub herald: HeraldModel,
    pub emission: EmissionConfig,
    pub efficiency: Option<EfficiencyBudget>,
    pub gradiometer: GradiometerConfig,
    pub wavelength: f64,
    pub table: CalibrationTable,
}

pub fn load(path: &Path) -> Result<Resolved> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading config {}", path.display()))?;
    let raw: RunConfig =
        toml::from_str(&text).with_context(|| format!("parsing config {}", path.display()))?;
    raw.resolve(path.parent().unwrap_or(Path::new(".")))
        .with_context(|| format!("invalid config {}", path.display()))
}

impl RunConfig {
    pub fn resolve(self, base_dir: &Path) -> Result<Resolved> {
        let s = &self.sequence;
        let sequence = SequenceConfig {
            p_e: s.p_e,
            p_w: s.p_w,
            eta: s.eta,
            attempts_per_sequence: s.attempts_per_sequence,
            sequence_rate: s.sequence_rate_per_s,
            cooling_time: s.cooling_time_us / 1e6,
            pump_time: s.pump_time_us / 1e6,
            excitation_pulse: s.excitation_pulse_ns / 1e9,
            witness_window: s.witness_window_us / 1e6,
        };
        sequence.validate().context("[sequence]")?;

        let herald = self.herald.model().context("[herald]")?;
        let emission = EmissionConfig::new(self.emission.kappa, sequence.p_w, sequence.eta)
            .context("[emission]")?;

        let efficiency = self
            .efficiency
            .map(|e| {
                let budget = EfficiencyBudget {
                    collection_fraction: e.collection_fraction,
                    optics_transmission: e.optics_transmission,
                    detector_quantum_efficiency: e.detector_quantum_efficiency,
                };
                budget.validate().map(|_| budget)
            })
            .transpose()
            .context("[efficiency]")?;

        let g = &self.gradiometer;
        let gradiometer = GradiometerConfig::new(
            g.bias_field_mt / 1e3,
            g.gradient_mt_per_m / 1e3,
            g.separation_um / 1e6,
            g.g_factor,
        )
        .context("[gradiometer]")?;

        let c = &self.calibration;
        if !(c.wavelength_nm > 0.0 && c.wavelength_nm.is_finite()) {
            bail!("[calibration] wavelength_nm must be positive, got {}", c.wavelength_nm);
        }
        let table = match &c.table_path {
            Some(p) => {
                let path = base_dir.join(p);
                let file = std::fs::File::open(&path)
                    .with_context(|| format!("opening calibration table {}", path.display()))?;
                CalibrationTable::from_csv(file)
                    .with_context(|| format!("reading calibration table {}", path.display()))?
            }
            None => CalibrationTable::published(),
        };

        Ok(Resolved {
            seed: self.seed,
            sequence,
            herald,
            emission,
            efficiency,
            gradiometer,
            wavelength: c.wavelength_nm / 1e9,
            table,
        })
    }
}

impl HeraldSection {
    fn model(&self) -> Result<HeraldModel> {
        let single = self.single_excitation_fraction;
        let gamma = match (self.coherence_factor, self.coherence_magnitude) {
            (Some(g), None) => g,
            (None, Some(m)) => {
                if single <= 0.0 {
                    bail!("coherence_magnitude needs a positive single_excitation_fraction");
                }
                2.0 * m / single
            }
            _ => bail!("set exactly one of coherence_factor and coherence_magnitude"),
        };
        let rest = 1.0 - single;
        let (zero, double) = match (self.zero_fraction, self.double_fraction) {
            (None, None) => (rest / 2.0, rest / 2.0),
            (Some(z), None) => (z, rest - z),
            (None, Some(d)) => (rest - d, d),
            (Some(z), Some(d)) => (z, d),
        };
        Ok(HeraldModel::new(gamma, self.phase_rad, single, zero, double)?)
    }
}
