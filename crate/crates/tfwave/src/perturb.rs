//! ε-perturbations of Gabor frames, Christensen bounds and the Gaussian
//! nonstationary distance.

use std::collections::BTreeMap;

use num_complex::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gabor::{torus_nodes, GaborSystem, Node, PairingFamily};
use crate::scalar::Real;
use crate::signals::{stft_plane, Atom, CoefficientOracle, GridSpec, PhaseGrid, SampledSignal, Window};
use crate::weights::WeightFunction;

/// Random parameters of one perturbation bump.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Perturbation<T> {
    /// ‖x_σ − y_σ‖
    pub amplitude: T,
    /// time offset of the bump from the atom center
    pub offset: T,
    pub phase: T,
}

/// y_σ = x_σ + a_σ·b_σ with b_σ(t) = e^{iθ_σ} e^{iξ_σ t} b(t − x_σ − δ_σ)/‖b‖.
#[derive(Debug, Clone, PartialEq)]
pub struct PerturbedFamily<T> {
    pub base: GaborSystem<T>,
    pub bump: Window<T>,
    bump_norm: T,
    pub perturbations: BTreeMap<(i64, i64), Perturbation<T>>,
    pub decay_rate: T,
    pub amplitude: T,
    pub seed: u64,
    pub radius: T,
}

impl<T: Real> PerturbedFamily<T> {
    /// Default bump profile: compact on [−3, 3], Gaussian taper of width 0.5.
    pub fn default_bump() -> Window<T> {
        Window::Bump { half_width: T::lit(3.0), taper: Some(T::lit(0.5)) }
    }

    /// A family with no perturbations.
    pub fn unperturbed(base: GaborSystem<T>) -> Self {
        let bump = Self::default_bump();
        Self {
            base,
            bump,
            bump_norm: window_norm(&bump),
            perturbations: BTreeMap::new(),
            decay_rate: T::zero(),
            amplitude: T::zero(),
            seed: 0,
            radius: T::zero(),
        }
    }

    /// Sets one perturbation explicitly.
    pub fn set(&mut self, m: i64, n: i64, p: Perturbation<T>) {
        self.perturbations.insert((m, n), p);
    }

    /// The bump part a_σ b_σ as an atom, if perturbed.
    pub fn bump_atom(&self, m: i64, n: i64) -> Option<Atom<T>> {
        let p = self.perturbations.get(&(m, n))?;
        let x = self.base.atom(m, n);
        Some(Atom {
            window: self.bump,
            x: x.x + p.offset,
            xi: x.xi,
            coeff: Complex::from_polar(p.amplitude / self.bump_norm, p.phase),
        })
    }

    /// y_σ sampled on a grid.
    pub fn render(&self, m: i64, n: i64, grid: GridSpec<T>) -> SampledSignal<T> {
        let mut s = self.base.atom(m, n).render(grid);
        if let Some(b) = self.bump_atom(m, n) {
            b.add_to(&mut s.values, grid, Complex::new(T::one(), T::zero()));
        }
        s
    }

    /// y_σ periodized on the torus of a probe grid.
    pub fn render_periodic(&self, m: i64, n: i64, grid: GridSpec<T>) -> SampledSignal<T> {
        let mut s = self.base.atom(m, n).render_periodic(grid);
        if let Some(b) = self.bump_atom(m, n) {
            let bp = b.render_periodic(grid);
            s.values.iter_mut().zip(&bp.values).for_each(|(a, v)| *a += v);
        }
        s
    }
}

fn window_norm<T: Real>(w: &Window<T>) -> T {
    let r = w.time_radius();
    let n = 20_000usize;
    let h = r * T::lit(2.0) / T::from_usize(n).unwrap();
    let s: T = (0..=n).map(|k| w.eval(-r + h * T::from_usize(k).unwrap()).powi(2)).sum();
    (s * h).sqrt()
}

/// Stream index of node (m, n) for the counter-based generator.
fn node_stream(m: i64, n: i64) -> u64 {
    ((m as u32 as u64) << 32) | (n as u32 as u64)
}

/// y_σ = x_σ + eps0·e^{−cω(|σ|)}·b_σ for every lattice node with |σ| ≤ radius.
pub fn make_perturbed_family<T: Real>(
    base: &GaborSystem<T>,
    eps0: T,
    c: T,
    w: &WeightFunction<T>,
    seed: u64,
    radius: T,
) -> Result<PerturbedFamily<T>> {
    if !(eps0 >= T::zero()) || !(c >= T::zero()) {
        return Err(Error::Domain(format!("eps0 and c must be >= 0, got ({eps0}, {c})")));
    }
    let mut fam = PerturbedFamily::unperturbed(base.clone());
    fam.decay_rate = c;
    fam.amplitude = eps0;
    fam.seed = seed;
    fam.radius = radius;
    if eps0 == T::zero() {
        return Ok(fam);
    }
    for nd in base.nodes(radius) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(node_stream(nd.m, nd.n));
        let offset = T::lit(rng.gen_range(-0.25..0.25));
        let phase = T::lit(rng.gen_range(0.0..std::f64::consts::TAU));
        let amplitude = eps0 * (-c * w.omega(nd.x.hypot(nd.xi))).exp();
        fam.set(nd.m, nd.n, Perturbation { amplitude, offset, phase });
    }
    Ok(fam)
}

impl<T: Real> PairingFamily<T> for PerturbedFamily<T> {
    fn nodes(&self, radius: T) -> Vec<Node<T>> {
        self.base.nodes(radius)
    }

    /// ⟨u, y_σ⟩ = ⟨u, x_σ⟩ + ⟨u, a_σ b_σ⟩
    fn pair(&self, oracle: &CoefficientOracle<T>, node: &Node<T>) -> Result<Complex<T>> {
        let mut v = oracle.pair(&self.base.atom(node.m, node.n))?;
        if let Some(b) = self.bump_atom(node.m, node.n) {
            v += oracle.pair(&b)?;
        }
        Ok(v)
    }

    fn label(&self) -> String {
        format!("perturbed(eps0={}, c={}, seed={}) of {}", self.amplitude, self.decay_rate, self.seed, PairingFamily::label(&self.base))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Energy<T> {
    pub value: T,
    pub coverage_note: Option<String>,
}

/// Σ_{|σ| ≤ radius} ‖x_σ − y_σ‖².
pub fn perturbation_energy<T: Real>(fam: &PerturbedFamily<T>, radius: T) -> Energy<T> {
    let mut value = T::zero();
    for nd in fam.base.nodes(radius) {
        if let Some(p) = fam.perturbations.get(&(nd.m, nd.n)) {
            value += p.amplitude * p.amplitude;
        }
    }
    let coverage_note = (radius > fam.radius && fam.amplitude > T::zero()).then(|| {
        format!("nodes with radius in ({}, {radius}] carry no perturbation and count as y = x", fam.radius)
    });
    Energy { value, coverage_note }
}

/// Σ ‖x_σ − y_σ‖² over the torus nodes of a probe, with discrete norms.
pub fn probe_perturbation_energy<T: Real>(fam: &PerturbedFamily<T>, probe: GridSpec<T>) -> Result<T> {
    let mut total = T::zero();
    for (m, n) in torus_nodes(&fam.base.lattice, probe)? {
        if let Some(b) = fam.bump_atom(m, n) {
            total += b.render_periodic(probe).norm_sqr();
        }
    }
    Ok(total)
}

/// Periodized y_σ for every torus node of the probe.
pub fn probe_atoms_perturbed<T: Real>(fam: &PerturbedFamily<T>, probe: GridSpec<T>) -> Result<Vec<SampledSignal<T>>> {
    if probe.n > 512 {
        return Err(Error::Domain(format!("probe size {} exceeds the dense limit 512", probe.n)));
    }
    Ok(torus_nodes(&fam.base.lattice, probe)?.into_iter().map(|(m, n)| fam.render_periodic(m, n, probe)).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChristensenBounds<T> {
    /// (A(1 − √(ε/A))², B(1 + √(ε/B))²) when ε < A
    pub frame: Option<(T, T)>,
    /// 2(B + ε)
    pub bessel: T,
}

pub fn christensen_bounds<T: Real>(a: T, b: T, eps: T) -> Result<ChristensenBounds<T>> {
    if !(a > T::zero()) || !(b >= a) || !(eps >= T::zero()) {
        return Err(Error::Domain(format!("need 0 < A <= B and eps >= 0, got ({a}, {b}, {eps})")));
    }
    let bessel = T::lit(2.0) * (b + eps);
    let frame = (eps < a).then(|| {
        let lo = a * (T::one() - (eps / a).sqrt()).powi(2);
        let hi = b * (T::one() + (eps / b).sqrt()).powi(2);
        (lo, hi)
    });
    Ok(ChristensenBounds { frame, bessel })
}

/// ‖φ_{m,n} − g_{m,n}‖² for φ_{m,n} = M_{βm}T_{αn}g, g_{m,n} = e^{iβ_n m t}g(t − αn), g = e^{−t²/2}.
pub fn gaussian_nonstationary_distance<T: Real>(beta: T, beta_n: T, m: i64, n: i64, alpha: T) -> T {
    let d = beta_n - beta;
    let (mf, nf) = (T::from_int(m), T::from_int(n));
    let two_sqrt_pi = T::lit(2.0) * T::PI().sqrt();
    two_sqrt_pi * (T::one() - (d * mf * alpha * nf).cos() * (-(d * d * mf * mf) / T::lit(4.0)).exp())
}

/// Σ_{|m| ≤ m_max} Σ_{n ∈ ns} ‖φ_{m,n} − g_{m,n}‖².
pub fn nonstationary_partial_sum<T: Real>(
    beta: T,
    betas: impl Fn(i64) -> T,
    alpha: T,
    m_max: i64,
    ns: std::ops::RangeInclusive<i64>,
) -> T {
    let mut total = T::zero();
    for n in ns {
        let bn = betas(n);
        for m in -m_max..=m_max {
            total += gaussian_nonstationary_distance(beta, bn, m, n, alpha);
        }
    }
    total
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeightedSum<T> {
    pub value: T,
    /// first node at which a term overflowed
    pub overflow_at: Option<(i64, i64)>,
}

/// |V_φ b|² of the normalized bump on a local phase grid, reused for every node by covariance.
struct BumpSpectrogram<T> {
    points: Vec<(T, T, T)>,
    cell: T,
}

fn bump_spectrogram<T: Real>(fam: &PerturbedFamily<T>) -> Result<BumpSpectrogram<T>> {
    let reach = fam.bump.time_radius() + fam.base.window.time_radius();
    let grid = GridSpec::new(T::lit(2.0) * reach, 2048)?;
    let b = Atom { window: fam.bump, x: T::zero(), xi: T::zero(), coeff: Complex::new(fam.bump_norm.recip(), T::zero()) }
        .render(grid);
    let phi = fam.base.window.sample(grid);
    let pg = PhaseGrid { x_max: reach, x_stride: 2, xi_max: grid.xi_max() * T::lit(0.9) };
    let plane = stft_plane(&b, &phi, &pg)?;
    let peak = plane.values.iter().map(|v| v.norm_sqr()).fold(T::zero(), T::max);
    let cut = peak * T::lit(1e-20);
    let points = plane
        .points()
        .filter_map(|(x, xi, v)| {
            let e = v.norm_sqr();
            (e > cut).then_some((x, xi, e))
        })
        .collect();
    Ok(BumpSpectrogram { points, cell: plane.dx * plane.dxi })
}

/// Σ_{|σ| ≤ radius} e^{λω(|σ|)} ‖x_σ − y_σ‖²_{M²_{m_μ}}.
pub fn weighted_perturbation_sum<T: Real>(
    fam: &PerturbedFamily<T>,
    w: &WeightFunction<T>,
    lambda: T,
    mu: T,
    radius: T,
) -> Result<WeightedSum<T>> {
    if !(lambda >= T::zero() && mu >= T::zero()) {
        return Err(Error::Domain(format!("lambda and mu must be >= 0, got ({lambda}, {mu})")));
    }
    let nodes: Vec<Node<T>> =
        fam.base.nodes(radius).into_iter().filter(|nd| fam.perturbations.contains_key(&(nd.m, nd.n))).collect();
    if nodes.is_empty() {
        return Ok(WeightedSum { value: T::zero(), overflow_at: None });
    }
    let spec = bump_spectrogram(fam)?;
    let two = T::lit(2.0);
    let terms: Vec<T> = nodes
        .par_iter()
        .map(|nd| {
            let p = fam.perturbations[&(nd.m, nd.n)];
            let (cx, cxi) = (nd.x + p.offset, nd.xi);
            let norm_sqr: T = if mu == T::zero() {
                spec.points.iter().map(|q| q.2).sum::<T>() * spec.cell
            } else {
                spec.points.iter().map(|&(x, xi, e)| e * (two * mu * w.omega((x + cx).hypot(xi + cxi))).exp()).sum::<T>()
                    * spec.cell
            };
            (lambda * w.omega(nd.x.hypot(nd.xi))).exp() * p.amplitude * p.amplitude * norm_sqr
        })
        .collect();
    let mut value = T::zero();
    for (nd, t) in nodes.iter().zip(terms) {
        if !t.is_finite() {
            return Ok(WeightedSum { value: T::infinity(), overflow_at: Some((nd.m, nd.n)) });
        }
        value += t;
    }
    if !value.is_finite() {
        return Ok(WeightedSum { value: T::infinity(), overflow_at: nodes.last().map(|nd| (nd.m, nd.n)) });
    }
    Ok(WeightedSum { value, overflow_at: None })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeightedSumEntry<T> {
    pub lambda: T,
    pub mu: T,
    pub radius: T,
    pub value: T,
    /// value at 1.5·radius within 1% of the value at radius
    pub stable: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerturbationReport<T> {
    pub epsilon: T,
    #[serde(rename = "weightedSums")]
    pub weighted_sums: Vec<WeightedSumEntry<T>>,
    pub christensen: Option<(T, T)>,
    pub bessel: T,
}

/// Weighted sums at radius R and 1.5R for each (λ, μ) pair.
pub fn truncation_stability<T: Real>(
    fam: &PerturbedFamily<T>,
    w: &WeightFunction<T>,
    lambda: T,
    mu: T,
    radius: T,
) -> Result<WeightedSumEntry<T>> {
    let a = weighted_perturbation_sum(fam, w, lambda, mu, radius)?.value;
    let b = weighted_perturbation_sum(fam, w, lambda, mu, radius * T::lit(1.5))?.value;
    let stable = a.is_finite() && b.is_finite() && (b - a).abs() <= T::lit(0.01) * a.abs().max(T::min_positive_value());
    Ok(WeightedSumEntry { lambda, mu, radius, value: a, stable })
}
