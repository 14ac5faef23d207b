//! Experiment pipelines behind each subcommand.

use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::json;
use tfwave::gabor::{coefficients, frame_bounds_numeric, CoefficientGrid, DenseOperator, GaborSystem, Lattice, TruncationReport};
use tfwave::nsgt::{painless_check_freq, painless_check_time, PainlessCertificate};
use tfwave::perturb::{
    christensen_bounds, perturbation_energy, probe_atoms_perturbed, probe_perturbation_energy, truncation_stability,
    PerturbationReport,
};
use tfwave::wavefront::{stability_compare, wavefront_report, wavefront_stft, WavefrontReport};

use crate::config::{Frame, FrameSection, Loaded};
use crate::error::CliError;
use crate::heatmap::render_heatmap;

pub struct Context {
    pub cfg: Loaded,
    pub out: PathBuf,
    pub seed: u64,
}

impl Context {
    fn write(&self, name: &str, text: &str) -> Result<PathBuf, CliError> {
        std::fs::create_dir_all(&self.out).map_err(|e| CliError::Io { path: self.out.clone(), message: e.to_string() })?;
        let path = self.out.join(name);
        std::fs::write(&path, text).map_err(|e| CliError::Io { path: path.clone(), message: e.to_string() })?;
        Ok(path)
    }

    fn write_json<S: Serialize>(&self, name: &str, value: &S) -> Result<PathBuf, CliError> {
        let text = serde_json::to_string_pretty(value).expect("reports serialize to JSON");
        self.write(name, &(text + "\n"))
    }

    fn frame(&self, key: &str, section: &FrameSection, radius: f64) -> Result<Frame, CliError> {
        self.cfg.frame(key, section, self.seed, radius)
    }
}

fn coefficient_grid(ctx: &Context, frame: &Frame, key: &str, radius: f64) -> Result<(CoefficientGrid<f64>, TruncationReport), CliError> {
    let cfg = &ctx.cfg;
    let m = |e| cfg.module(key, e);
    match frame {
        Frame::Stationary(sys) => coefficients(&cfg.oracle(sys.window)?, sys, radius).map_err(m),
        Frame::Perturbed(fam) => coefficients(&cfg.oracle(fam.base.window)?, fam.as_ref(), radius).map_err(m),
        Frame::NsgtTime(sys) => coefficients(&cfg.oracle(sys.window)?, sys, radius).map_err(m),
        Frame::NsgtFreq(sys) => coefficients(&cfg.oracle(sys.window)?, sys, radius).map_err(m),
        Frame::Stft { window, step } => {
            let r = (radius / step).ceil() as i64;
            let dense = GaborSystem::new(*window, Lattice::new(*step, *step, r).map_err(m)?);
            coefficients(&cfg.oracle(*window)?, &dense, radius).map_err(m)
        }
    }
}

fn report(ctx: &Context, frame: &Frame, key: &str) -> Result<WavefrontReport<f64>, CliError> {
    let cfg = &ctx.cfg;
    let w = cfg.weight()?;
    let p = cfg.params()?;
    let m = |e| cfg.module(key, e);
    match frame {
        Frame::Stationary(sys) => wavefront_report(&cfg.oracle(sys.window)?, sys, &w, &p).map_err(m),
        Frame::Perturbed(fam) => wavefront_report(&cfg.oracle(fam.base.window)?, fam.as_ref(), &w, &p).map_err(m),
        Frame::NsgtTime(sys) => wavefront_report(&cfg.oracle(sys.window)?, sys, &w, &p).map_err(m),
        Frame::NsgtFreq(sys) => wavefront_report(&cfg.oracle(sys.window)?, sys, &w, &p).map_err(m),
        Frame::Stft { window, step } => wavefront_stft(&cfg.oracle(*window)?, *window, *step, &w, &p).map_err(m),
    }
}

pub fn analyze(ctx: &Context) -> Result<String, CliError> {
    let radius = ctx.cfg.config.analysis.radius;
    let frame = ctx.frame("frame", &ctx.cfg.config.frame, radius)?;
    let (grid, trunc) = coefficient_grid(ctx, &frame, "frame", radius)?;
    let csv = ctx.write("coefficients.csv", &grid.to_csv())?;
    ctx.write_json("truncation.json", &trunc)?;
    Ok(format!("{} coefficients ({} omitted) -> {}", grid.entries.len(), trunc.omitted, csv.display()))
}

pub fn frame_bounds(ctx: &Context) -> Result<String, CliError> {
    let cfg = &ctx.cfg;
    let probe = cfg.probe_grid()?;
    let frame = ctx.frame("frame", &cfg.config.frame, cfg.config.perturb.radius)?;
    let m = |e| cfg.module("frame", e);
    match frame {
        Frame::Stationary(sys) => {
            let r = frame_bounds_numeric(&sys, probe).map_err(m)?;
            let path = ctx.write_json("frame_bounds.json", &r)?;
            Ok(format!("A_est = {}, B_est = {} -> {}", r.a_est, r.b_est, path.display()))
        }
        Frame::Perturbed(fam) => {
            let base = frame_bounds_numeric(&fam.base, probe).map_err(m)?;
            let eps = probe_perturbation_energy(&fam, probe).map_err(m)?;
            let atoms = probe_atoms_perturbed(&fam, probe).map_err(m)?;
            let (lo, hi) =
                DenseOperator::from_atoms(probe, atoms.iter()).and_then(|op| op.extreme_eigenvalues(ctx.seed)).map_err(m)?;
            let bounds = christensen_bounds(base.a_est, base.b_est, eps).map_err(m)?;
            let value = json!({
                "base": base,
                "epsilon": eps,
                "christensen": bounds,
                "perturbed": { "A_est": lo, "B_est": hi, "probeN": probe.n },
            });
            let path = ctx.write_json("frame_bounds.json", &value)?;
            Ok(format!("perturbed A_est = {lo}, B_est = {hi}, epsilon = {eps} -> {}", path.display()))
        }
        _ => Err(cfg.invalid("frame.kind", "frame-bounds needs a stationary or perturbed frame; use nsgt-check for nonstationary systems")),
    }
}

fn certificate(ctx: &Context) -> Result<PainlessCertificate<f64>, CliError> {
    let cfg = &ctx.cfg;
    let radius = cfg.config.analysis.radius;
    match ctx.frame("frame", &cfg.config.frame, radius)? {
        Frame::NsgtTime(sys) => painless_check_time(&sys).map_err(|e| cfg.module("frame", e)),
        Frame::NsgtFreq(sys) => painless_check_freq(&sys).map_err(|e| cfg.module("frame", e)),
        _ => Err(cfg.invalid("frame.kind", "nsgt-check needs kind = \"nsgt-time\" or \"nsgt-freq\"")),
    }
}

pub fn nsgt_check(ctx: &Context) -> Result<String, CliError> {
    let cert = certificate(ctx)?;
    let path = ctx.write_json("certificate.json", &cert)?;
    Ok(format!("A = {}, B = {}, status {:?} -> {}", cert.a, cert.b, cert.status, path.display()))
}

pub fn perturb(ctx: &Context) -> Result<String, CliError> {
    let cfg = &ctx.cfg;
    let section = &cfg.config.perturb;
    let Frame::Perturbed(fam) = ctx.frame("frame", &cfg.config.frame, 1.5 * section.radius)? else {
        return Err(cfg.invalid("frame.kind", "perturb needs kind = \"perturbed\""));
    };
    let w = cfg.weight()?;
    let m = |e| cfg.module("perturb", e);
    let probe = cfg.probe_grid()?;
    let base = frame_bounds_numeric(&fam.base, probe).map_err(m)?;
    let eps = probe_perturbation_energy(&fam, probe).map_err(m)?;
    let bounds = christensen_bounds(base.a_est, base.b_est, eps).map_err(m)?;
    let mut weighted_sums = Vec::new();
    for &lambda in &section.lambdas {
        for &mu in &section.mus {
            weighted_sums.push(truncation_stability(&fam, &w, lambda, mu, section.radius).map_err(m)?);
        }
    }
    let report = PerturbationReport { epsilon: eps, weighted_sums, christensen: bounds.frame, bessel: bounds.bessel };
    let energy = perturbation_energy(&fam, section.radius);
    let path = ctx.write_json("perturbation.json", &json!({ "report": report, "base": base, "latticeEnergy": energy }))?;
    Ok(format!("epsilon = {eps} (A_est = {}) -> {}", base.a_est, path.display()))
}

pub fn wavefront(ctx: &Context) -> Result<String, CliError> {
    let radius = ctx.cfg.params()?.shells.r_max() + 1.0;
    let frame = ctx.frame("frame", &ctx.cfg.config.frame, radius)?;
    let r = report(ctx, &frame, "frame")?;
    let path = ctx.write_json("wavefront.json", &r)?;
    Ok(format!("singular sectors {:?}, indeterminate {:?} -> {}", r.singular(), r.indeterminate(), path.display()))
}

pub fn stability(ctx: &Context) -> Result<String, CliError> {
    let cfg = &ctx.cfg;
    let radius = cfg.params()?.shells.r_max() + 1.0;
    let reference = cfg.config.reference.clone().unwrap_or_default();
    let a = report(ctx, &ctx.frame("reference", &reference, radius)?, "reference")?;
    let b = report(ctx, &ctx.frame("frame", &cfg.config.frame, radius)?, "frame")?;
    let cmp = stability_compare(&a, &b).map_err(|e| cfg.module("reference", e))?;
    let path = ctx.write_json("comparison.json", &json!({ "result": cmp, "reference": a, "frame": b }))?;
    Ok(format!("{} ({:?} vs {:?}) -> {}", if cmp.pass { "PASS" } else { "FAIL" }, cmp.singular_a, cmp.singular_b, path.display()))
}

pub fn render(ctx: &Context) -> Result<String, CliError> {
    let cfg = &ctx.cfg;
    let source = match &cfg.config.render.coefficients {
        Some(p) => cfg.resolve(p),
        None => ctx.out.join("coefficients.csv"),
    };
    let text = std::fs::read_to_string(&source).map_err(|e| CliError::Io { path: source.clone(), message: e.to_string() })?;
    let grid = CoefficientGrid::from_csv(&text).map_err(|e| cfg.module("render.coefficients", e))?;
    let title = Path::new(&source).file_name().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let svg = render_heatmap(&grid, &title).ok_or_else(|| {
        cfg.module("render.coefficients", tfwave::Error::Refused("cannot render an empty coefficient grid".into()))
    })?;
    let path = ctx.write("heatmap.svg", &svg)?;
    Ok(format!("{} points -> {}", grid.entries.len(), path.display()))
}
