//! Run configuration parsed from a TOML file.

use std::path::PathBuf;

use circle_chaos::domain::{CurveShape, Domain, DomainKind};
use circle_chaos::measures::{lebesgue_atoms, AtomList, IfsSpec};
use circle_chaos::{Error, Result};
use serde::Deserialize;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Used when `--seed` is absent; one of the two is required.
    pub seed: Option<u64>,
    #[serde(default = "default_out")]
    pub out: PathBuf,
    #[serde(default = "default_reps")]
    pub reps: usize,
    pub gamma: f64,
    /// Level range `[n0, n1]`.
    #[serde(default = "default_levels")]
    pub levels: [u32; 2],
    /// Circle quadrature order for the exact backend.
    #[serde(default = "default_quadrature")]
    pub quadrature: usize,
    pub domain: DomainConfig,
    pub measure: Option<MeasureConfig>,
    #[serde(default)]
    pub backend: BackendConfig,
    #[serde(default)]
    pub tolerances: Tolerances,
    pub thresholds: Option<ThresholdConfig>,
    pub dimension: Option<DimensionConfig>,
    pub project: Option<ProjectConfig>,
    pub fourier: Option<FourierConfig>,
    pub holder: Option<HolderConfig>,
    pub quantum_length: Option<QuantumLengthConfig>,
    pub calibrate: Option<CalibrateConfig>,
}

fn default_out() -> PathBuf {
    PathBuf::from("out")
}

fn default_reps() -> usize {
    100
}

fn default_levels() -> [u32; 2] {
    [3, 8]
}

fn default_quadrature() -> usize {
    64
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainConfig {
    pub kind: DomainKind,
    #[serde(default)]
    pub offset: [f64; 2],
    #[serde(default = "one")]
    pub scale: f64,
}

fn one() -> f64 {
    1.0
}

impl DomainConfig {
    pub fn build(&self) -> Result<Domain> {
        Domain::new(self.kind, self.offset, self.scale)
    }
}

/// Base measure of `simulate`, `dimension` and `fourier`.
#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum MeasureConfig {
    Lebesgue {
        h: f64,
        /// Keep only atoms inside `[x0, x1] x [y0, y1]`.
        window: Option<[[f64; 2]; 2]>,
    },
    Ifs(IfsSpec),
}

impl MeasureConfig {
    pub fn atoms(&self, domain: &Domain) -> Result<AtomList> {
        match self {
            MeasureConfig::Lebesgue { h, window } => {
                let atoms = lebesgue_atoms(domain, *h)?;
                Ok(match window {
                    Some([[x0, x1], [y0, y1]]) => {
                        atoms.filter(|p| p.re >= *x0 && p.re <= *x1 && p.im >= *y0 && p.im <= *y1)
                    }
                    None => atoms,
                })
            }
            MeasureConfig::Ifs(spec) => circle_chaos::measures::ifs_atoms(domain, spec),
        }
    }

    /// Growth exponent of the base measure.
    pub fn alpha1(&self) -> Option<f64> {
        match self {
            MeasureConfig::Lebesgue { .. } => Some(2.0),
            MeasureConfig::Ifs(spec) => Some(circle_chaos::measures::growth_exponent(spec)),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BackendKind {
    #[default]
    Exact,
    Grid,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BackendConfig {
    #[serde(default)]
    pub kind: BackendKind,
    /// Grid size `N` of the grid backend.
    #[serde(default = "default_grid")]
    pub grid_size: usize,
    /// Amplitude factor; calibrated on the fly when absent.
    pub calibration: Option<f64>,
}

fn default_grid() -> usize {
    512
}

impl Default for BackendConfig {
    fn default() -> Self {
        Self { kind: BackendKind::Exact, grid_size: default_grid(), calibration: None }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    pub slack: f64,
    pub p: f64,
    /// Overrides the growth exponent used by `simulate`.
    pub alpha1: Option<f64>,
    pub dimension: f64,
    pub chord_length: f64,
    pub fubini: f64,
    pub fourier_min_beta: f64,
    /// Fraction of Hölder replicates that must have a positive exponent.
    pub holder_positive_fraction: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            slack: circle_chaos::gmc::DEFAULT_SLACK,
            p: 1.5,
            alpha1: None,
            dimension: 0.15,
            chord_length: 1e-12,
            fubini: 0.02,
            fourier_min_beta: 0.1,
            holder_positive_fraction: 0.95,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ThresholdConfig {
    pub alpha1: f64,
    pub alpha2: f64,
    pub alpha2prime: f64,
    pub k: u32,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DimensionConfig {
    /// Ball radii `2^{-n}` for `n` in this range.
    pub radius_levels: [u32; 2],
    #[serde(default = "default_sample_points")]
    pub sample_points: usize,
    /// Centres are drawn inside `[x0, x1] x [y0, y1]` when given.
    pub centre_window: Option<[[f64; 2]; 2]>,
}

fn default_sample_points() -> usize {
    200
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProjectConfig {
    pub thetas: usize,
    pub us: usize,
    pub h_chord: f64,
    pub h_planar: f64,
    pub level: u32,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FourierConfig {
    pub directions: usize,
    pub freq_range: [f64; 2],
    #[serde(default = "default_freqs")]
    pub n_freqs: usize,
    pub level: u32,
}

fn default_freqs() -> usize {
    12
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HolderConfig {
    pub thetas: usize,
    pub us: usize,
    pub h: f64,
    pub level: u32,
    /// Pair-distance scales `2^{-k}` for `k` in this range.
    pub scale_exponents: [u32; 2],
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuantumLengthConfig {
    pub curve: CurveShape,
    #[serde(default)]
    pub start: f64,
    pub h: f64,
    pub level: u32,
    #[serde(default = "default_t_points")]
    pub t_points: usize,
}

fn default_t_points() -> usize {
    65
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CalibrateConfig {
    pub grid_size: usize,
    pub eps: f64,
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| Error::InvalidInput(format!("config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<()> {
        if !(0.0..2.0).contains(&self.gamma) {
            return Err(Error::ParameterOutOfRange(format!("gamma = {} outside [0, 2)", self.gamma)));
        }
        if self.reps < 1 {
            return Err(Error::InvalidInput("reps must be at least 1".into()));
        }
        let [n0, n1] = self.levels;
        if !(n0 >= 1 && n1 >= n0) {
            return Err(Error::InvalidInput(format!("levels must satisfy 1 <= n0 <= n1, got [{n0}, {n1}]")));
        }
        if self.quadrature < 4 {
            return Err(Error::InvalidInput("quadrature must be at least 4".into()));
        }
        self.domain.build()?;
        Ok(())
    }

    pub fn section<'a, T>(&self, value: &'a Option<T>, name: &str) -> Result<&'a T> {
        value.as_ref().ok_or_else(|| Error::InvalidInput(format!("config: missing section [{name}]")))
    }
}
