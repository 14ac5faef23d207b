//! Stationary Gabor systems on αZ × βZ, coefficient grids and torus frame bounds.

use std::collections::HashMap;

use num_complex::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::signals::{Atom, CoefficientOracle, GridSpec, SampledSignal, Window};

pub use crate::signals::modulation_norm;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Lattice<T> {
    pub alpha: T,
    pub beta: T,
    pub index_radius: i64,
}

impl<T: Real> Lattice<T> {
    pub fn new(alpha: T, beta: T, index_radius: i64) -> Result<Self> {
        if !(alpha > T::zero() && beta > T::zero()) || !alpha.is_finite() || !beta.is_finite() {
            return Err(Error::Domain(format!("lattice steps must be positive, got ({alpha}, {beta})")));
        }
        if index_radius < 0 {
            return Err(Error::Domain("index radius must be nonnegative".into()));
        }
        Ok(Self { alpha, beta, index_radius })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GaborSystem<T> {
    pub window: Window<T>,
    pub lattice: Lattice<T>,
    pub frame_bounds: Option<(T, T)>,
}

impl<T: Real> GaborSystem<T> {
    pub fn new(window: Window<T>, lattice: Lattice<T>) -> Self {
        Self { window, lattice, frame_bounds: None }
    }

    /// x_σ = Π(αn, βm)φ
    pub fn atom(&self, m: i64, n: i64) -> Atom<T> {
        Atom::shifted(self.window, self.lattice.alpha * T::from_int(n), self.lattice.beta * T::from_int(m))
    }
}

/// Phase-space node of a system: indices and position (x, ξ).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Node<T> {
    pub m: i64,
    pub n: i64,
    pub x: T,
    pub xi: T,
}

/// Nodes with |m| ≤ m_max, |n| ≤ n_max and |pos(m, n)| ≤ radius, lexicographic in (m, n).
pub fn nodes_in_disc<T: Real>(radius: T, m_max: i64, n_max: i64, pos: impl Fn(i64, i64) -> (T, T)) -> Vec<Node<T>> {
    let mut out = Vec::new();
    for m in -m_max..=m_max {
        for n in -n_max..=n_max {
            let (x, xi) = pos(m, n);
            if x.hypot(xi) <= radius {
                out.push(Node { m, n, x, xi });
            }
        }
    }
    out
}

/// A node family together with its pairing ⟨u, ψ_node⟩.
pub trait PairingFamily<T: Real>: Sync {
    fn nodes(&self, radius: T) -> Vec<Node<T>>;
    fn pair(&self, oracle: &CoefficientOracle<T>, node: &Node<T>) -> Result<Complex<T>>;
    fn label(&self) -> String;
}

impl<T: Real> PairingFamily<T> for GaborSystem<T> {
    fn nodes(&self, radius: T) -> Vec<Node<T>> {
        let (a, b) = (self.lattice.alpha, self.lattice.beta);
        let n_max = (radius / a).floor().to_i64().unwrap_or(0);
        let m_top = (radius / b).floor().to_i64().unwrap_or(0);
        nodes_in_disc(radius, m_top, n_max, |m, n| (a * T::from_int(n), b * T::from_int(m)))
    }

    fn pair(&self, oracle: &CoefficientOracle<T>, node: &Node<T>) -> Result<Complex<T>> {
        oracle.pair(&self.atom(node.m, node.n))
    }

    fn label(&self) -> String {
        format!("gabor(alpha={}, beta={}, window={})", self.lattice.alpha, self.lattice.beta, self.window.label())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoefficientEntry<T> {
    pub m: i64,
    pub n: i64,
    pub x: T,
    pub xi: T,
    pub value: Complex<T>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct CoefficientGrid<T> {
    pub entries: Vec<CoefficientEntry<T>>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct TruncationReport {
    /// nodes dropped because the oracle cannot pair them reliably
    pub omitted: usize,
    pub notes: Vec<String>,
}

/// Pairings of all nodes within `radius`, in node order.
pub fn coefficients<T: Real, F: PairingFamily<T> + ?Sized>(
    oracle: &CoefficientOracle<T>,
    family: &F,
    radius: T,
) -> Result<(CoefficientGrid<T>, TruncationReport)> {
    let nodes = family.nodes(radius);
    let values: Vec<Result<Complex<T>>> = nodes.par_iter().map(|nd| family.pair(oracle, nd)).collect();
    let mut grid = CoefficientGrid::default();
    let mut report = TruncationReport::default();
    for (nd, v) in nodes.iter().zip(values) {
        match v {
            Ok(value) => {
                if !value.re.is_finite() || !value.im.is_finite() {
                    return Err(Error::Numeric(format!("non-finite coefficient at (m={}, n={})", nd.m, nd.n)));
                }
                grid.entries.push(CoefficientEntry { m: nd.m, n: nd.n, x: nd.x, xi: nd.xi, value });
            }
            Err(Error::Range(msg)) => {
                if report.omitted == 0 {
                    report.notes.push(format!("first omitted node (m={}, n={}): {msg}", nd.m, nd.n));
                }
                report.omitted += 1;
            }
            Err(e) => return Err(e),
        }
    }
    Ok((grid, report))
}

/// c_{m,n} = V_φu(αn, βm) for |(αn, βm)| ≤ radius.
pub fn gabor_coeffs<T: Real>(
    oracle: &CoefficientOracle<T>,
    sys: &GaborSystem<T>,
    radius: T,
) -> Result<(CoefficientGrid<T>, TruncationReport)> {
    if !(radius > T::zero()) {
        return Err(Error::Domain(format!("radius must be positive, got {radius}")));
    }
    coefficients(oracle, sys, radius)
}

impl<T: Real> CoefficientGrid<T> {
    pub fn max_abs(&self) -> T {
        self.entries.iter().map(|e| e.value.norm()).fold(T::zero(), T::max)
    }

    pub fn get(&self, m: i64, n: i64) -> Option<&CoefficientEntry<T>> {
        self.entries.iter().find(|e| e.m == m && e.n == n)
    }

    /// CSV with header `m,n,x,xi,re,im,abs`; shortest round-trip decimal forms.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("m,n,x,xi,re,im,abs\n");
        for e in &self.entries {
            out.push_str(&format!("{},{},{},{},{},{},{}\n", e.m, e.n, e.x, e.xi, e.value.re, e.value.im, e.value.norm()));
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header = lines.next().ok_or_else(|| Error::Parse("empty coefficient file".into()))?;
        if header.trim() != "m,n,x,xi,re,im,abs" {
            return Err(Error::Parse(format!("expected header `m,n,x,xi,re,im,abs`, got `{header}`")));
        }
        let mut entries = Vec::new();
        for (row, line) in lines.enumerate() {
            let f: Vec<&str> = line.split(',').map(str::trim).collect();
            let bad = || Error::Parse(format!("coefficient row {}: `{line}`", row + 2));
            if f.len() != 7 {
                return Err(bad());
            }
            let int = |s: &str| s.parse::<i64>().map_err(|_| bad());
            let real = |s: &str| s.parse::<T>().map_err(|_| bad());
            entries.push(CoefficientEntry {
                m: int(f[0])?,
                n: int(f[1])?,
                x: real(f[2])?,
                xi: real(f[3])?,
                value: Complex::new(real(f[4])?, real(f[5])?),
            });
        }
        Ok(Self { entries })
    }
}

/// Frame bounds report: `{alpha, beta, A_est, B_est, probeN}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrameReport<T> {
    pub alpha: T,
    pub beta: T,
    #[serde(rename = "A_est")]
    pub a_est: T,
    #[serde(rename = "B_est")]
    pub b_est: T,
    #[serde(rename = "probeN")]
    pub probe_n: usize,
}

/// Lattice indices whose atoms are distinct on the torus of the probe grid.
pub fn torus_nodes<T: Real>(lattice: &Lattice<T>, probe: GridSpec<T>) -> Result<Vec<(i64, i64)>> {
    let period = probe.half_width * T::lit(2.0);
    let p = period / lattice.alpha;
    let q = T::from_usize(probe.n).unwrap() * probe.dual_step() / lattice.beta;
    let tol = T::lit(1e-9);
    if (p - p.round()).abs() > tol * p || (q - q.round()).abs() > tol * q {
        return Err(Error::Domain(format!(
            "lattice ({}, {}) is not commensurate with the probe torus (2T/alpha = {p}, N pi/(T beta) = {q})",
            lattice.alpha, lattice.beta
        )));
    }
    let (p, q) = (p.round().to_i64().unwrap(), q.round().to_i64().unwrap());
    let r = lattice.index_radius;
    let ns: Vec<i64> = (-(p / 2)..p - p / 2).filter(|n| n.abs() <= r).collect();
    let ms: Vec<i64> = (-(q / 2)..q - q / 2).filter(|m| m.abs() <= r).collect();
    Ok(ms.iter().flat_map(|&m| ns.iter().map(move |&n| (m, n))).collect())
}

/// Torus-periodized atoms of a system on the probe grid.
/// Atoms tagged with their lattice index (m, n).
pub type IndexedAtoms<T> = Vec<((i64, i64), SampledSignal<T>)>;

pub fn probe_atoms<T: Real>(sys: &GaborSystem<T>, probe: GridSpec<T>) -> Result<IndexedAtoms<T>> {
    if probe.n > 512 {
        return Err(Error::Domain(format!("probe size {} exceeds the dense limit 512", probe.n)));
    }
    let idx = torus_nodes(&sys.lattice, probe)?;
    Ok(idx.into_iter().map(|(m, n)| ((m, n), sys.atom(m, n).render_periodic(probe))).collect())
}

/// Dense Hermitian matrix M = h Σ x xᴴ of the discretized frame operator.
#[derive(Debug, Clone)]
pub struct DenseOperator<T> {
    pub n: usize,
    /// row-major
    pub data: Vec<Complex<T>>,
}

impl<T: Real> DenseOperator<T> {
    pub fn from_atoms<'a, I>(grid: GridSpec<T>, atoms: I) -> Result<Self>
    where
        I: IntoIterator<Item = &'a SampledSignal<T>>,
        T: 'a,
    {
        let n = grid.n;
        let h = grid.step();
        let mut data = vec![Complex::new(T::zero(), T::zero()); n * n];
        for a in atoms {
            if a.grid != grid {
                return Err(Error::Shape("atom grid differs from probe grid".into()));
            }
            for i in 0..n {
                let ai = a.values[i] * h;
                if ai == Complex::new(T::zero(), T::zero()) {
                    continue;
                }
                let row = &mut data[i * n..(i + 1) * n];
                for (r, aj) in row.iter_mut().zip(&a.values) {
                    *r += ai * aj.conj();
                }
            }
        }
        Ok(Self { n, data })
    }

    pub fn apply(&self, v: &[Complex<T>], out: &mut [Complex<T>]) {
        for (i, o) in out.iter_mut().enumerate() {
            let row = &self.data[i * self.n..(i + 1) * self.n];
            let mut acc = Complex::new(T::zero(), T::zero());
            for (a, b) in row.iter().zip(v) {
                acc += a * b;
            }
            *o = acc;
        }
    }

    /// (λ_min, λ_max) as extreme Ritz values of a fully reorthogonalized Lanczos run.
    pub fn extreme_eigenvalues(&self, seed: u64) -> Result<(T, T)> {
        let n = self.n;
        let zero = Complex::new(T::zero(), T::zero());
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut q: Vec<Complex<T>> =
            (0..n).map(|_| Complex::new(T::lit(rng.gen_range(-1.0..1.0)), T::lit(rng.gen_range(-1.0..1.0)))).collect();
        normalize(&mut q);
        let scale = self.data.iter().map(|c| c.norm()).fold(T::zero(), T::max).max(T::min_positive_value());
        let mut basis: Vec<Vec<Complex<T>>> = Vec::new();
        let (mut diag, mut off) = (Vec::new(), Vec::new());
        let mut w = vec![zero; n];
        let mut last: Option<(T, T)> = None;
        for j in 0..n {
            self.apply(&q, &mut w);
            let a: T = q.iter().zip(&w).map(|(x, y)| (x.conj() * y).re).sum();
            diag.push(a);
            basis.push(q.clone());
            for _ in 0..2 {
                for b in &basis {
                    let c: Complex<T> = b.iter().zip(&w).map(|(x, y)| x.conj() * y).sum();
                    w.iter_mut().zip(b).for_each(|(y, x)| *y -= c * x);
                }
            }
            let beta = w.iter().map(|c| c.norm_sqr()).sum::<T>().sqrt();
            let done = beta <= T::lit(1e-13) * scale || j + 1 == n;
            if done || j % 8 == 7 {
                let ext = tridiagonal_extremes(&diag, &off);
                if done {
                    return Ok(ext);
                }
                if let Some(prev) = last {
                    let tol = T::lit(1e-14) * ext.1.abs().max(T::min_positive_value());
                    if (ext.0 - prev.0).abs() <= tol && (ext.1 - prev.1).abs() <= tol {
                        return Ok(ext);
                    }
                }
                last = Some(ext);
            }
            off.push(beta);
            q.iter_mut().zip(&w).for_each(|(x, y)| *x = *y / beta);
        }
        Err(Error::Numeric("Lanczos iteration produced no Ritz values".into()))
    }
}

/// Smallest and largest eigenvalue of the symmetric tridiagonal matrix (diag, off) by Sturm bisection.
fn tridiagonal_extremes<T: Real>(diag: &[T], off: &[T]) -> (T, T) {
    let n = diag.len();
    let mut lo = T::infinity();
    let mut hi = T::neg_infinity();
    for i in 0..n {
        let r = if i > 0 { off[i - 1].abs() } else { T::zero() } + if i < off.len() { off[i].abs() } else { T::zero() };
        lo = lo.min(diag[i] - r);
        hi = hi.max(diag[i] + r);
    }
    // number of eigenvalues below x
    let below = |x: T| {
        let mut count = 0;
        let mut d = T::one();
        for i in 0..n {
            let b2 = if i > 0 { off[i - 1] * off[i - 1] } else { T::zero() };
            d = diag[i] - x - if i > 0 { b2 / d } else { T::zero() };
            if d == T::zero() {
                d = T::epsilon() * (x.abs() + T::one());
            }
            if d < T::zero() {
                count += 1;
            }
        }
        count
    };
    let bisect = |k: usize| {
        let (mut a, mut b) = (lo, hi);
        for _ in 0..200 {
            let m = (a + b) / T::lit(2.0);
            if m <= a || m >= b {
                break;
            }
            if below(m) > k {
                b = m;
            } else {
                a = m;
            }
        }
        (a + b) / T::lit(2.0)
    };
    (bisect(0), bisect(n - 1))
}

fn normalize<T: Real>(v: &mut [Complex<T>]) {
    let norm = v.iter().map(|c| c.norm_sqr()).sum::<T>().sqrt();
    v.iter_mut().for_each(|c| *c /= norm);
}

/// Extreme Rayleigh quotients of Σ_σ ⟨·, x_σ⟩x_σ on the probe torus.
pub fn frame_bounds_numeric<T: Real>(sys: &GaborSystem<T>, probe: GridSpec<T>) -> Result<FrameReport<T>> {
    let atoms = probe_atoms(sys, probe)?;
    let op = DenseOperator::from_atoms(probe, atoms.iter().map(|(_, a)| a))?;
    let (a, b) = op.extreme_eigenvalues(0x5eed)?;
    Ok(FrameReport { alpha: sys.lattice.alpha, beta: sys.lattice.beta, a_est: a, b_est: b, probe_n: probe.n })
}

/// Σ_σ |⟨f, x_σ⟩|² for atoms on a common grid.
pub fn frame_energy<T: Real>(f: &SampledSignal<T>, atoms: &[SampledSignal<T>]) -> Result<T> {
    let mut total = T::zero();
    for a in atoms {
        total += crate::signals::inner(f, a)?.norm_sqr();
    }
    Ok(total)
}

/// Atoms addressable by lattice indices, added into a buffer on a fixed grid.
pub trait AtomSource<T: Real>: Sync {
    fn grid(&self) -> GridSpec<T>;
    fn add_atom(&self, m: i64, n: i64, c: Complex<T>, out: &mut [Complex<T>]) -> Result<()>;

    /// Σ c_{m,n}·atom_{m,n}
    fn synthesize(&self, coeffs: &CoefficientGrid<T>) -> Result<SampledSignal<T>> {
        let mut out = SampledSignal::zeros(self.grid());
        for e in &coeffs.entries {
            self.add_atom(e.m, e.n, e.value, &mut out.values)?;
        }
        Ok(out)
    }
}

/// Explicit sampled atoms keyed by (m, n).
#[derive(Debug, Clone)]
pub struct SampledAtoms<T> {
    grid: GridSpec<T>,
    atoms: HashMap<(i64, i64), SampledSignal<T>>,
}

impl<T: Real> SampledAtoms<T> {
    pub fn new(grid: GridSpec<T>) -> Self {
        Self { grid, atoms: HashMap::new() }
    }

    pub fn insert(&mut self, m: i64, n: i64, atom: SampledSignal<T>) -> Result<()> {
        if atom.grid != self.grid {
            return Err(Error::Shape(format!("atom (m={m}, n={n}) is on a different grid")));
        }
        self.atoms.insert((m, n), atom);
        Ok(())
    }
}

impl<T: Real> AtomSource<T> for SampledAtoms<T> {
    fn grid(&self) -> GridSpec<T> {
        self.grid
    }

    fn add_atom(&self, m: i64, n: i64, c: Complex<T>, out: &mut [Complex<T>]) -> Result<()> {
        let a = self.atoms.get(&(m, n)).ok_or_else(|| Error::Shape(format!("no atom for (m={m}, n={n})")))?;
        for (o, v) in out.iter_mut().zip(&a.values) {
            *o += c * v;
        }
        Ok(())
    }
}

/// Atoms Π(αn, βm)φ of a Gabor system sampled on a grid.
pub struct GaborAtoms<'a, T> {
    pub system: &'a GaborSystem<T>,
    pub grid: GridSpec<T>,
}

impl<T: Real> AtomSource<T> for GaborAtoms<'_, T> {
    fn grid(&self) -> GridSpec<T> {
        self.grid
    }

    fn add_atom(&self, m: i64, n: i64, c: Complex<T>, out: &mut [Complex<T>]) -> Result<()> {
        self.system.atom(m, n).add_to(out, self.grid, c);
        Ok(())
    }
}

/// Σ c_{m,n}·atom_{m,n}
pub fn synthesize<T: Real, S: AtomSource<T> + ?Sized>(coeffs: &CoefficientGrid<T>, atoms: &S) -> Result<SampledSignal<T>> {
    atoms.synthesize(coeffs)
}
