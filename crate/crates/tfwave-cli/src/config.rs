//! Experiment configuration read from TOML.

use std::path::{Path, PathBuf};

use serde::Deserialize;
use tfwave::gabor::{GaborSystem, Lattice};
use tfwave::nsgt::{NSGSystemFreq, NSGSystemTime, Steps};
use tfwave::perturb::{make_perturbed_family, PerturbedFamily};
use tfwave::signals::{CoefficientOracle, Family, GridSpec, SampledSignal, Window};
use tfwave::wavefront::{ConePartition, ShellSpec, WavefrontParams};
use tfwave::weights::WeightFunction;

use crate::error::CliError;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: Option<u64>,
    #[serde(default = "default_weight")]
    pub weight: String,
    #[serde(default)]
    pub signal: SignalSection,
    #[serde(default)]
    pub frame: FrameSection,
    /// second frame for `stability`; defaults to the stationary Gaussian frame
    pub reference: Option<FrameSection>,
    #[serde(default)]
    pub wavefront: WavefrontSection,
    #[serde(default)]
    pub probe: ProbeSection,
    #[serde(default)]
    pub analysis: AnalysisSection,
    #[serde(default)]
    pub perturb: PerturbSection,
    #[serde(default)]
    pub render: RenderSection,
    #[serde(default)]
    pub output: OutputSection,
}

fn default_weight() -> String {
    "log".into()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum OracleMode {
    #[default]
    ClosedForm,
    Sampled,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SignalSection {
    pub family: String,
    /// CSV `t,re,im`; overrides `family`
    pub file: Option<PathBuf>,
    pub mode: OracleMode,
    pub half_width: f64,
    pub n: usize,
}

impl Default for SignalSection {
    fn default() -> Self {
        Self { family: "delta".into(), file: None, mode: OracleMode::ClosedForm, half_width: 40.0, n: 4096 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum FrameKind {
    #[default]
    Stationary,
    Perturbed,
    NsgtTime,
    NsgtFreq,
    Stft,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FrameSection {
    pub kind: FrameKind,
    pub window: String,
    pub alpha: f64,
    pub beta: f64,
    pub index_radius: i64,
    /// step sequence for the nonstationary systems
    pub steps: String,
    pub eps0: f64,
    pub decay: f64,
    /// dense STFT spacing
    pub step: f64,
}

impl Default for FrameSection {
    fn default() -> Self {
        Self {
            kind: FrameKind::Stationary,
            window: "gauss:1".into(),
            alpha: 0.5,
            beta: 0.5,
            index_radius: 200,
            steps: "sine:0.4,0.3".into(),
            eps0: 0.05,
            decay: 4.0,
            step: 0.25,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WavefrontSection {
    pub k: usize,
    pub offset: Option<f64>,
    pub r0: f64,
    pub rho: f64,
    pub j: usize,
    pub lambda_reg: f64,
    pub floor_rel: f64,
}

impl Default for WavefrontSection {
    fn default() -> Self {
        let p = WavefrontParams::<f64>::standard();
        Self {
            k: p.partition.k,
            offset: None,
            r0: p.shells.r0,
            rho: p.shells.rho,
            j: p.shells.j,
            lambda_reg: p.lambda_reg,
            floor_rel: p.floor_rel,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProbeSection {
    pub half_width: f64,
    pub n: usize,
}

impl Default for ProbeSection {
    fn default() -> Self {
        Self { half_width: 8.0 * std::f64::consts::PI.sqrt(), n: 256 }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnalysisSection {
    pub radius: f64,
}

impl Default for AnalysisSection {
    fn default() -> Self {
        Self { radius: 20.0 }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PerturbSection {
    pub lambdas: Vec<f64>,
    pub mus: Vec<f64>,
    pub radius: f64,
}

impl Default for PerturbSection {
    fn default() -> Self {
        Self { lambdas: vec![0.5, 1.0, 2.0], mus: vec![0.0, 1.0], radius: 20.0 }
    }
}

#[derive(Debug, Clone, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct RenderSection {
    /// CSV `m,n,x,xi,re,im,abs`; defaults to `coefficients.csv` in the output directory
    pub coefficients: Option<PathBuf>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSection {
    pub dir: PathBuf,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self { dir: PathBuf::from(".") }
    }
}

/// A parsed configuration together with the file it came from.
#[derive(Debug, Clone)]
pub struct Loaded {
    pub path: PathBuf,
    pub config: ExperimentConfig,
}

/// A frame ready for pairing.
pub enum Frame {
    Stationary(GaborSystem<f64>),
    Perturbed(Box<PerturbedFamily<f64>>),
    NsgtTime(NSGSystemTime<f64>),
    NsgtFreq(NSGSystemFreq<f64>),
    Stft { window: Window<f64>, step: f64 },
}

impl Loaded {
    pub fn read(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Io { path: path.to_path_buf(), message: e.to_string() })?;
        let config: ExperimentConfig =
            toml::from_str(&text).map_err(|e| CliError::Syntax { path: path.to_path_buf(), message: e.to_string() })?;
        let loaded = Self { path: path.to_path_buf(), config };
        loaded.validate()?;
        Ok(loaded)
    }

    fn base_dir(&self) -> PathBuf {
        self.path.parent().map(Path::to_path_buf).unwrap_or_default()
    }

    /// Resolves a path relative to the directory of the config file.
    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir().join(p)
        }
    }

    /// Rewrites `custom:<path>` and `csv:<path>` specs to resolved paths.
    fn resolve_spec(&self, spec: &str) -> String {
        for prefix in ["custom:", "csv:"] {
            if let Some(rest) = spec.trim().strip_prefix(prefix) {
                return format!("{prefix}{}", self.resolve(Path::new(rest.trim())).display());
            }
        }
        spec.to_string()
    }

    pub fn invalid(&self, key: &str, message: impl Into<String>) -> CliError {
        CliError::Invalid { path: self.path.clone(), key: key.to_string(), message: message.into() }
    }

    pub fn module(&self, key: &str, source: tfwave::Error) -> CliError {
        CliError::Module { path: self.path.clone(), key: key.to_string(), source }
    }

    fn require_file(&self, key: &str, p: &Path) -> Result<(), CliError> {
        let full = self.resolve(p);
        if !full.is_file() {
            return Err(self.invalid(key, format!("file `{}` does not exist", full.display())));
        }
        Ok(())
    }

    fn validate(&self) -> Result<(), CliError> {
        let c = &self.config;
        if let Some(f) = &c.signal.file {
            self.require_file("signal.file", f)?;
        }
        if let Some(f) = &c.render.coefficients {
            self.require_file("render.coefficients", f)?;
        }
        for (key, spec) in [("weight", c.weight.as_str()), ("frame.steps", c.frame.steps.as_str())] {
            for prefix in ["custom:", "csv:"] {
                if let Some(rest) = spec.trim().strip_prefix(prefix) {
                    self.require_file(key, Path::new(rest.trim()))?;
                }
            }
        }
        let positive = |key: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(self.invalid(key, format!("must be a positive finite number, got {v}")))
            }
        };
        positive("signal.half_width", c.signal.half_width)?;
        if c.signal.n < 2 || !c.signal.n.is_power_of_two() {
            return Err(self.invalid("signal.n", format!("must be a power of two >= 2, got {}", c.signal.n)));
        }
        positive("probe.half_width", c.probe.half_width)?;
        if c.probe.n < 2 || c.probe.n > 512 {
            return Err(self.invalid("probe.n", format!("must lie in 2..=512, got {}", c.probe.n)));
        }
        positive("analysis.radius", c.analysis.radius)?;
        positive("perturb.radius", c.perturb.radius)?;
        for (key, frame) in [("frame", Some(&c.frame)), ("reference", c.reference.as_ref())] {
            let Some(f) = frame else { continue };
            positive(&format!("{key}.alpha"), f.alpha)?;
            positive(&format!("{key}.beta"), f.beta)?;
            positive(&format!("{key}.step"), f.step)?;
            if f.index_radius < 1 {
                return Err(self.invalid(&format!("{key}.index_radius"), "must be >= 1"));
            }
            if !(f.eps0 >= 0.0 && f.eps0.is_finite()) {
                return Err(self.invalid(&format!("{key}.eps0"), "must be >= 0"));
            }
            if !(f.decay >= 0.0 && f.decay.is_finite()) {
                return Err(self.invalid(&format!("{key}.decay"), "must be >= 0"));
            }
        }
        let w = &c.wavefront;
        positive("wavefront.r0", w.r0)?;
        if w.rho.is_nan() || w.rho <= 1.0 {
            return Err(self.invalid("wavefront.rho", format!("must exceed 1, got {}", w.rho)));
        }
        positive("wavefront.lambda_reg", w.lambda_reg)?;
        positive("wavefront.floor_rel", w.floor_rel)?;
        for (key, v) in c.perturb.lambdas.iter().map(|v| ("perturb.lambdas", v)).chain(c.perturb.mus.iter().map(|v| ("perturb.mus", v))) {
            if !(*v >= 0.0 && v.is_finite()) {
                return Err(self.invalid(key, format!("entries must be >= 0, got {v}")));
            }
        }
        Ok(())
    }

    pub fn seed(&self, cli: Option<u64>) -> u64 {
        cli.or(self.config.seed).unwrap_or(0)
    }

    pub fn weight(&self) -> Result<WeightFunction<f64>, CliError> {
        WeightFunction::from_spec(&self.resolve_spec(&self.config.weight)).map_err(|e| self.module("weight", e))
    }

    pub fn window(&self, key: &str, spec: &str) -> Result<Window<f64>, CliError> {
        Window::from_spec(spec).map_err(|e| self.module(key, e))
    }

    pub fn signal_grid(&self) -> Result<GridSpec<f64>, CliError> {
        GridSpec::new(self.config.signal.half_width, self.config.signal.n).map_err(|e| self.module("signal", e))
    }

    pub fn probe_grid(&self) -> Result<GridSpec<f64>, CliError> {
        GridSpec::new(self.config.probe.half_width, self.config.probe.n).map_err(|e| self.module("probe", e))
    }

    pub fn family(&self) -> Result<Family<f64>, CliError> {
        Family::from_spec(&self.config.signal.family).map_err(|e| self.module("signal.family", e))
    }

    /// Sampled signal from `signal.file` or the family on the signal grid.
    pub fn sampled_signal(&self) -> Result<SampledSignal<f64>, CliError> {
        match &self.config.signal.file {
            Some(f) => {
                let full = self.resolve(f);
                let text = std::fs::read_to_string(&full)
                    .map_err(|e| CliError::Io { path: full.clone(), message: e.to_string() })?;
                SampledSignal::from_csv_str(&text).map_err(|e| self.module("signal.file", e))
            }
            None => {
                let fam = self.family()?;
                Ok(SampledSignal::from_fn(self.signal_grid()?, |t| fam.eval(t)))
            }
        }
    }

    pub fn oracle(&self, window: Window<f64>) -> Result<CoefficientOracle<f64>, CliError> {
        if self.config.signal.file.is_some() {
            return Ok(CoefficientOracle::from_signal(self.sampled_signal()?, window));
        }
        let fam = self.family()?;
        Ok(match self.config.signal.mode {
            OracleMode::ClosedForm => CoefficientOracle::closed_form(fam, window),
            OracleMode::Sampled => CoefficientOracle::generate(fam, self.signal_grid()?, window),
        })
    }

    pub fn params(&self) -> Result<WavefrontParams<f64>, CliError> {
        let w = &self.config.wavefront;
        let partition = match w.offset {
            Some(o) => ConePartition::new(w.k, o),
            None => ConePartition::centered(w.k),
        }
        .map_err(|e| self.module("wavefront.k", e))?;
        let shells = ShellSpec::new(w.r0, w.rho, w.j).map_err(|e| self.module("wavefront.j", e))?;
        Ok(WavefrontParams { partition, shells, lambda_reg: w.lambda_reg, floor_rel: w.floor_rel })
    }

    /// Builds the frame of `section` (key `frame` or `reference`).
    pub fn frame(&self, key: &str, f: &FrameSection, seed: u64, radius: f64) -> Result<Frame, CliError> {
        let window = self.window(&format!("{key}.window"), &f.window)?;
        let lattice = || Lattice::new(f.alpha, f.beta, f.index_radius).map_err(|e| self.module(key, e));
        let steps = || Steps::from_spec(&self.resolve_spec(&f.steps)).map_err(|e| self.module(&format!("{key}.steps"), e));
        Ok(match f.kind {
            FrameKind::Stationary => Frame::Stationary(GaborSystem::new(window, lattice()?)),
            FrameKind::Perturbed => {
                let base = GaborSystem::new(window, lattice()?);
                let fam = make_perturbed_family(&base, f.eps0, f.decay, &self.weight()?, seed, radius)
                    .map_err(|e| self.module(&format!("{key}.eps0"), e))?;
                Frame::Perturbed(Box::new(fam))
            }
            FrameKind::NsgtTime => Frame::NsgtTime(
                NSGSystemTime::new(window, f.alpha, steps()?, f.index_radius).map_err(|e| self.module(key, e))?,
            ),
            FrameKind::NsgtFreq => Frame::NsgtFreq(
                NSGSystemFreq::new(window, f.beta, steps()?, f.index_radius).map_err(|e| self.module(key, e))?,
            ),
            FrameKind::Stft => Frame::Stft { window, step: f.step },
        })
    }
}
