//! Experiment configuration: a sectioned TOML file, validated at load time.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use nlslab_core::imethod::IMultiplier;
use nlslab_core::scattering::AdmissiblePair;
use nlslab_core::{GridSpec, NlsParams, StepperConfig};

use crate::error::{CliError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub grid: GridSection,
    pub params: ParamsSection,
    #[serde(default)]
    pub stepper: StepperSection,
    #[serde(default)]
    pub imethod: ImethodSection,
    #[serde(default)]
    pub initial_data: InitialData,
    #[serde(default)]
    pub diagnostics: DiagnosticsSection,
    #[serde(default)]
    pub checks: ChecksSection,
    #[serde(default)]
    pub output: OutputSection,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    #[serde(default = "default_dim")]
    pub dim: usize,
    pub n: usize,
    #[serde(rename = "L")]
    pub length: f64,
}

fn default_dim() -> usize {
    3
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamsSection {
    #[serde(default = "one")]
    pub alpha: f64,
    #[serde(default = "one")]
    pub mu: f64,
    #[serde(default = "three")]
    pub p: f64,
}

fn one() -> f64 {
    1.0
}

fn three() -> f64 {
    3.0
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct StepperSection {
    pub dt: f64,
    #[serde(rename = "T")]
    pub t_final: f64,
    pub record_every: f64,
    pub snapshot_every: f64,
    pub dealias: bool,
    pub blowup_ceiling: f64,
    pub spillover_tolerance: f64,
}

impl Default for StepperSection {
    fn default() -> Self {
        let c = StepperConfig::default();
        StepperSection {
            dt: c.dt,
            t_final: c.t_final,
            record_every: c.record_every,
            snapshot_every: c.snapshot_every,
            dealias: c.dealias,
            blowup_ceiling: c.blowup_ceiling,
            spillover_tolerance: c.spillover_tolerance,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ImethodSection {
    pub s: f64,
    /// Single cutoff for the `modified_energy` column in `run` mode.
    #[serde(rename = "N", skip_serializing_if = "Option::is_none")]
    pub cutoff: Option<f64>,
    #[serde(rename = "N_list")]
    pub cutoffs: Vec<f64>,
    pub lambda_constant: f64,
}

impl Default for ImethodSection {
    fn default() -> Self {
        ImethodSection {
            s: 0.85,
            cutoff: None,
            cutoffs: vec![4.0, 8.0, 16.0, 32.0],
            lambda_constant: 1.0,
        }
    }
}

/// Built-in initial data. Gaussians are `A·exp(−|x−c|²/w²)·exp(iβ|x−c|²)·exp(ik₀·x)`
/// summed over `images` periodic copies in each direction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum InitialData {
    Gaussian {
        #[serde(default = "one")]
        amplitude: f64,
        #[serde(default = "one")]
        width: f64,
        #[serde(default)]
        center: [f64; 3],
        #[serde(default)]
        wavevector: [f64; 3],
        #[serde(default = "default_images")]
        images: i32,
    },
    ChirpedGaussian {
        #[serde(default = "one")]
        amplitude: f64,
        #[serde(default = "one")]
        width: f64,
        chirp: f64,
        #[serde(default)]
        center: [f64; 3],
        #[serde(default)]
        wavevector: [f64; 3],
        #[serde(default = "default_images")]
        images: i32,
    },
    TwoBump {
        #[serde(default = "one")]
        amplitude: f64,
        #[serde(default = "one")]
        width: f64,
        separation: f64,
        #[serde(default)]
        chirp: f64,
        #[serde(default = "default_images")]
        images: i32,
    },
    PlaneWave {
        #[serde(default = "one")]
        amplitude: f64,
        #[serde(default)]
        phase: f64,
        modes: [i64; 3],
    },
    /// Seeded random band-limited field under a Gaussian envelope.
    RandomBandLimited {
        kmax: f64,
        #[serde(default = "one")]
        envelope_width: f64,
        #[serde(default = "one")]
        amplitude: f64,
        #[serde(default)]
        seed: u64,
    },
    /// A snapshot previously written by this tool.
    File { path: PathBuf },
}

fn default_images() -> i32 {
    1
}

impl Default for InitialData {
    fn default() -> Self {
        InitialData::Gaussian {
            amplitude: 1.0,
            width: 1.0,
            center: [0.0; 3],
            wavevector: [0.0; 3],
            images: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DiagnosticsSection {
    /// Centres `y` for the Morawetz actions; must be grid nodes.
    pub centers: Vec<[f64; 3]>,
    /// Strichartz exponents `(q, r)`; `q` may be `inf`.
    pub pairs: Vec<[f64; 2]>,
    /// Smallness threshold for subdividing the spacetime L⁴ integral.
    pub epsilon: f64,
    /// Regularity used for Strichartz monitors and scattering pullbacks.
    pub regularity: f64,
    /// Record the interaction potential (costs a padded convolution per record).
    pub interaction: bool,
}

impl Default for DiagnosticsSection {
    fn default() -> Self {
        DiagnosticsSection {
            centers: vec![[0.0; 3]],
            pairs: AdmissiblePair::defaults().iter().map(|p| [p.q(), p.r()]).collect(),
            epsilon: 0.5,
            regularity: 1.0,
            interaction: true,
        }
    }
}

/// Thresholds for the checks written to `summary.json`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ChecksSection {
    pub mass_drift: f64,
    pub selftest_l2: f64,
    pub identity_residual: f64,
    pub term_sign: f64,
    pub sweep_slope: f64,
    pub pullback_unitarity: f64,
}

impl Default for ChecksSection {
    fn default() -> Self {
        ChecksSection {
            mass_drift: 1e-11,
            selftest_l2: 1e-6,
            identity_residual: 0.05,
            term_sign: 1e-9,
            sweep_slope: -0.8,
            pullback_unitarity: 1e-12,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Csv,
    Json,
    Snapshots,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Precision {
    F32,
    F64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSection {
    pub directory: PathBuf,
    pub formats: Vec<OutputFormat>,
    pub snapshot_precision: Precision,
}

impl Default for OutputSection {
    fn default() -> Self {
        OutputSection {
            directory: PathBuf::from("nlslab-out"),
            formats: vec![OutputFormat::Csv, OutputFormat::Json],
            snapshot_precision: Precision::F64,
        }
    }
}

impl OutputSection {
    pub fn wants(&self, f: OutputFormat) -> bool {
        self.formats.contains(&f)
    }
}

impl ExperimentConfig {
    /// Parses and validates TOML text. `origin` only labels error messages and
    /// anchors relative snapshot paths.
    pub fn from_toml(text: &str, origin: &Path) -> Result<Self> {
        let mut cfg: ExperimentConfig = toml::from_str(text).map_err(|e| CliError::Parse {
            path: origin.to_path_buf(),
            message: e.to_string(),
        })?;
        if let InitialData::File { path } = &mut cfg.initial_data {
            if path.is_relative() {
                if let Some(dir) = origin.parent() {
                    *path = dir.join(&*path);
                }
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        fn field(name: &'static str) -> impl Fn(nlslab_core::Error) -> CliError {
            move |e| CliError::invalid(name, e.to_string())
        }
        self.grid_spec().validate().map_err(field("grid"))?;
        self.nls_params().validate().map_err(field("params"))?;
        self.stepper_config().steps().map_err(field("stepper"))?;

        let s = self.imethod.s;
        if !(s > 0.5) {
            return Err(CliError::invalid("imethod.s", format!("s must exceed 1/2 (got {s})")));
        }
        if s > 1.0 {
            return Err(CliError::invalid("imethod.s", format!("s must not exceed 1 (got {s})")));
        }
        if let Some(n) = self.imethod.cutoff {
            IMultiplier::new(s, n).map_err(field("imethod.N"))?;
        }
        for &n in &self.imethod.cutoffs {
            IMultiplier::new(s, n).map_err(field("imethod.N_list"))?;
        }
        if !(self.imethod.lambda_constant > 0.0) {
            return Err(CliError::invalid("imethod.lambda_constant", "must be positive"));
        }

        self.admissible_pairs()?;
        if !(self.diagnostics.epsilon > 0.0) {
            return Err(CliError::invalid("diagnostics.epsilon", "must be positive"));
        }
        let grid = nlslab_core::Grid::new(self.grid_spec()).map_err(field("grid"))?;
        if self.grid.dim == 3 {
            for y in &self.diagnostics.centers {
                if grid.node_at(*y).is_none() {
                    return Err(CliError::invalid(
                        "diagnostics.centers",
                        format!("{y:?} is not a grid node"),
                    ));
                }
            }
        }

        match &self.initial_data {
            InitialData::Gaussian { width, images, .. }
            | InitialData::ChirpedGaussian { width, images, .. }
            | InitialData::TwoBump { width, images, .. } => {
                if !(*width > 0.0) {
                    return Err(CliError::invalid("initial_data.width", "must be positive"));
                }
                if *images < 0 {
                    return Err(CliError::invalid("initial_data.images", "must be nonnegative"));
                }
            }
            InitialData::RandomBandLimited {
                kmax, envelope_width, ..
            } => {
                if !(*kmax > 0.0) || !(*envelope_width > 0.0) {
                    return Err(CliError::invalid(
                        "initial_data",
                        "kmax and envelope_width must be positive",
                    ));
                }
            }
            InitialData::PlaneWave { .. } | InitialData::File { .. } => {}
        }
        Ok(())
    }

    pub fn grid_spec(&self) -> GridSpec {
        GridSpec::new(self.grid.dim, self.grid.n, self.grid.length)
    }

    pub fn nls_params(&self) -> NlsParams {
        NlsParams::new(self.params.alpha, self.params.mu, self.params.p)
    }

    pub fn stepper_config(&self) -> StepperConfig {
        let s = &self.stepper;
        StepperConfig {
            dt: s.dt,
            t_final: s.t_final,
            record_every: s.record_every,
            snapshot_every: s.snapshot_every,
            dealias: s.dealias,
            blowup_ceiling: s.blowup_ceiling,
            spillover_tolerance: s.spillover_tolerance,
        }
    }

    pub fn admissible_pairs(&self) -> Result<Vec<AdmissiblePair>> {
        self.diagnostics
            .pairs
            .iter()
            .map(|[q, r]| {
                AdmissiblePair::new(*q, *r).map_err(|e| CliError::invalid("diagnostics.pairs", e.to_string()))
            })
            .collect()
    }

    /// Overrides the seed of random initial data (no effect on other kinds).
    pub fn with_seed(mut self, new_seed: u64) -> Self {
        if let InitialData::RandomBandLimited { seed, .. } = &mut self.initial_data {
            *seed = new_seed;
        }
        self
    }

    /// SHA-256 over the canonical TOML rendering of everything except the
    /// output section, so the hash names the experiment rather than where it is written.
    pub fn hash(&self) -> String {
        #[derive(Serialize)]
        struct Canonical<'a> {
            grid: &'a GridSection,
            params: &'a ParamsSection,
            stepper: &'a StepperSection,
            imethod: &'a ImethodSection,
            initial_data: &'a InitialData,
            diagnostics: &'a DiagnosticsSection,
            checks: &'a ChecksSection,
        }
        let canonical = toml::to_string(&Canonical {
            grid: &self.grid,
            params: &self.params,
            stepper: &self.stepper,
            imethod: &self.imethod,
            initial_data: &self.initial_data,
            diagnostics: &self.diagnostics,
            checks: &self.checks,
        })
        .expect("configuration always renders as TOML");
        let digest = Sha256::digest(canonical.as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}

pub fn load_config(path: &Path) -> Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    ExperimentConfig::from_toml(&text, path)
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "[grid]\nn = 16\nL = 8.0\n\n[params]\n";

    fn parse(text: &str) -> Result<ExperimentConfig> {
        ExperimentConfig::from_toml(text, Path::new("test.toml"))
    }

    #[test]
    fn minimal_config_gets_defaults() {
        let cfg = parse(MINIMAL).unwrap();
        assert_eq!(cfg.grid.dim, 3);
        assert_eq!(cfg.params, ParamsSection { alpha: 1.0, mu: 1.0, p: 3.0 });
        assert_eq!(cfg.stepper, StepperSection::default());
        assert_eq!(cfg.imethod.cutoffs, vec![4.0, 8.0, 16.0, 32.0]);
        assert_eq!(cfg.diagnostics.pairs.len(), 3);
        assert!(cfg.diagnostics.pairs[0][0].is_infinite());
    }

    #[test]
    fn small_s_rejected() {
        let err = parse(&format!("{MINIMAL}\n[imethod]\ns = 0.4\n")).unwrap_err();
        assert!(err.to_string().contains("s must exceed 1/2"), "{err}");
    }

    #[test]
    fn unknown_keys_rejected_with_location() {
        let err = parse("[grid]\nn = 16\nL = 8.0\nwidth = 3\n[params]\n").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("line 4"), "{msg}");
        let err = parse(&format!("{MINIMAL}[initial_data]\nkind = \"gaussian\"\nchirp = 1.0\n")).unwrap_err();
        assert!(err.to_string().contains("chirp"), "{err}");
    }

    #[test]
    fn invariant_violations_name_the_field() {
        let err = parse("[grid]\nn = 15\nL = 8.0\n[params]\n").unwrap_err();
        assert!(err.to_string().contains("grid"), "{err}");
        let err = parse(&format!("{MINIMAL}[stepper]\ndt = 0.003\nT = 0.01\nrecord_every = 0.004\n")).unwrap_err();
        assert!(err.to_string().contains("stepper"), "{err}");
        let err = parse(&format!("{MINIMAL}[diagnostics]\npairs = [[2.0, 4.0]]\n")).unwrap_err();
        assert!(err.to_string().contains("diagnostics.pairs"), "{err}");
        let err = parse(&format!("{MINIMAL}[diagnostics]\ncenters = [[0.1, 0.0, 0.0]]\n")).unwrap_err();
        assert!(err.to_string().contains("diagnostics.centers"), "{err}");
    }

    #[test]
    fn initial_data_kinds_parse() {
        for body in [
            "kind = \"chirped-gaussian\"\nchirp = 0.5\nwidth = 1.5",
            "kind = \"two-bump\"\nseparation = 3.0",
            "kind = \"plane-wave\"\nmodes = [1, 0, -2]",
            "kind = \"random-band-limited\"\nkmax = 3.0\nseed = 7",
            "kind = \"file\"\npath = \"snap.bin\"",
        ] {
            parse(&format!("{MINIMAL}[initial_data]\n{body}\n")).unwrap();
        }
    }

    #[test]
    fn hash_is_stable_and_ignores_output() {
        let a = parse(MINIMAL).unwrap();
        let b = parse(MINIMAL).unwrap();
        assert_eq!(a.hash(), b.hash());
        assert_eq!(a.hash().len(), 64);
        let c = parse(&format!("{MINIMAL}[output]\ndirectory = \"elsewhere\"\n")).unwrap();
        assert_eq!(a.hash(), c.hash());
        let d = parse(&format!("{MINIMAL}[stepper]\ndt = 0.002\n")).unwrap();
        assert_ne!(a.hash(), d.hash());
    }

    #[test]
    fn seed_override_only_touches_random_data() {
        let cfg = parse(&format!("{MINIMAL}[initial_data]\nkind = \"random-band-limited\"\nkmax = 2.0\n")).unwrap();
        let seeded = cfg.clone().with_seed(9);
        assert_ne!(cfg.hash(), seeded.hash());
        let plain = parse(MINIMAL).unwrap();
        assert_eq!(plain.clone().with_seed(9), plain);
    }
}
