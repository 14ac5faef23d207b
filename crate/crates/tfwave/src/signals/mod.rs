//! Sampled signals on symmetric uniform grids, the Fourier transform
//! f̂(ξ) = ∫ f(t) e^{−itξ} dt, analytic windows and coefficient oracles.

mod atom;
mod oracle;
mod phase;
mod window;

use std::sync::Arc;

use num_complex::Complex;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;

pub use atom::Atom;
pub use oracle::{CoefficientOracle, Family, OracleKind};
pub use phase::{modulation_norm, seminorm_r, stft_plane, ModulationNorm, PhaseGrid, PhasePlane};
pub use window::Window;

/// Grid t_j = −T + 2Tj/N, j = 0..N, with dual grid ξ_k = π(k − N/2)/T.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec<T> {
    pub half_width: T,
    pub n: usize,
}

impl<T: Real> GridSpec<T> {
    pub fn new(half_width: T, n: usize) -> Result<Self> {
        if !(half_width > T::zero()) || !half_width.is_finite() {
            return Err(Error::Domain(format!("grid half-width must be positive, got {half_width}")));
        }
        if n < 64 || !n.is_power_of_two() {
            return Err(Error::Domain(format!("grid size must be a power of two >= 64, got {n}")));
        }
        Ok(Self { half_width, n })
    }

    #[inline]
    pub fn step(&self) -> T {
        self.half_width * T::lit(2.0) / T::from_usize(self.n).unwrap()
    }

    #[inline]
    pub fn t(&self, j: usize) -> T {
        -self.half_width + self.step() * T::from_usize(j).unwrap()
    }

    pub fn times(&self) -> Vec<T> {
        (0..self.n).map(|j| self.t(j)).collect()
    }

    /// Spacing π/T of the dual grid.
    #[inline]
    pub fn dual_step(&self) -> T {
        T::PI() / self.half_width
    }

    #[inline]
    pub fn xi(&self, k: usize) -> T {
        self.dual_step() * (T::from_usize(k).unwrap() - T::from_usize(self.n / 2).unwrap())
    }

    /// Nyquist frequency πN/(2T).
    pub fn xi_max(&self) -> T {
        self.dual_step() * T::from_usize(self.n / 2).unwrap()
    }

    /// Index range of grid points inside [a, b].
    pub fn index_range(&self, a: T, b: T) -> std::ops::Range<usize> {
        let h = self.step();
        let lo = ((a + self.half_width) / h).ceil().max(T::zero());
        let hi = ((b + self.half_width) / h).floor() + T::one();
        let lo = lo.to_usize().unwrap_or(0).min(self.n);
        let hi = hi.max(T::zero()).to_usize().unwrap_or(0).min(self.n);
        lo..hi.max(lo)
    }

    /// Index range of dual grid points inside [a, b].
    pub fn dual_index_range(&self, a: T, b: T) -> std::ops::Range<usize> {
        let d = self.dual_step();
        let off = T::from_usize(self.n / 2).unwrap();
        let lo = (a / d + off).ceil().max(T::zero());
        let hi = (b / d + off).floor() + T::one();
        let lo = lo.to_usize().unwrap_or(0).min(self.n);
        let hi = hi.max(T::zero()).to_usize().unwrap_or(0).min(self.n);
        lo..hi.max(lo)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SampledSignal<T> {
    pub grid: GridSpec<T>,
    pub values: Vec<Complex<T>>,
}

/// Samples of f̂ at the dual grid of `grid`.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum<T> {
    pub grid: GridSpec<T>,
    pub values: Vec<Complex<T>>,
}

impl<T: Real> SampledSignal<T> {
    pub fn new(grid: GridSpec<T>, values: Vec<Complex<T>>) -> Result<Self> {
        if values.len() != grid.n {
            return Err(Error::Shape(format!("{} samples for a grid of size {}", values.len(), grid.n)));
        }
        if values.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
            return Err(Error::Numeric("signal has non-finite samples".into()));
        }
        Ok(Self { grid, values })
    }

    pub fn zeros(grid: GridSpec<T>) -> Self {
        Self { grid, values: vec![Complex::new(T::zero(), T::zero()); grid.n] }
    }

    pub fn from_fn(grid: GridSpec<T>, f: impl Fn(T) -> Complex<T>) -> Self {
        Self { grid, values: (0..grid.n).map(|j| f(grid.t(j))).collect() }
    }

    pub fn from_real_fn(grid: GridSpec<T>, f: impl Fn(T) -> T) -> Self {
        Self::from_fn(grid, |t| Complex::new(f(t), T::zero()))
    }

    pub fn check_same_grid(&self, other: &Self) -> Result<()> {
        if self.grid != other.grid {
            return Err(Error::Shape(format!(
                "grid mismatch: (T={}, N={}) vs (T={}, N={})",
                self.grid.half_width, self.grid.n, other.grid.half_width, other.grid.n
            )));
        }
        Ok(())
    }

    /// Squared L² norm by the trapezoid rule.
    pub fn norm_sqr(&self) -> T {
        self.grid.step() * self.values.iter().map(|v| v.norm_sqr()).sum::<T>()
    }

    pub fn norm(&self) -> T {
        self.norm_sqr().sqrt()
    }

    pub fn scale(&self, a: Complex<T>) -> Self {
        Self { grid: self.grid, values: self.values.iter().map(|v| *v * a).collect() }
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.check_same_grid(other)?;
        Ok(Self { grid: self.grid, values: self.values.iter().zip(&other.values).map(|(a, b)| a - b).collect() })
    }

    /// Relative L² distance ‖self − reference‖/‖reference‖.
    pub fn relative_error(&self, reference: &Self) -> Result<T> {
        let d = self.sub(reference)?;
        Ok(d.norm() / reference.norm())
    }

    /// Reads CSV with header `t,re,im` on a uniform symmetric grid.
    pub fn from_csv_str(text: &str) -> Result<Self> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header = lines.next().ok_or_else(|| Error::Parse("empty signal file".into()))?;
        let cols: Vec<&str> = header.split(',').map(str::trim).collect();
        if cols != ["t", "re", "im"] {
            return Err(Error::Parse(format!("expected header `t,re,im`, got `{header}`")));
        }
        let mut ts = Vec::new();
        let mut values = Vec::new();
        for (row, line) in lines.enumerate() {
            let fields: Vec<&str> = line.split(',').map(str::trim).collect();
            let bad = || Error::Parse(format!("signal row {}: `{line}`", row + 2));
            if fields.len() != 3 {
                return Err(bad());
            }
            let p = |s: &str| s.parse::<T>().map_err(|_| bad());
            ts.push(p(fields[0])?);
            values.push(Complex::new(p(fields[1])?, p(fields[2])?));
        }
        let n = ts.len();
        if n < 2 {
            return Err(Error::Parse("signal needs at least two samples".into()));
        }
        let h = ts[1] - ts[0];
        let half = -ts[0];
        let grid = GridSpec::new(half, n)?;
        let tol = T::lit(1e-9) * h.abs();
        if (grid.step() - h).abs() > tol {
            return Err(Error::Parse("signal grid must be t_j = -T + 2Tj/N".into()));
        }
        for (j, &t) in ts.iter().enumerate() {
            if (t - grid.t(j)).abs() > tol.max(T::lit(1e-12) * half) {
                return Err(Error::Parse(format!("non-uniform sample time at row {}", j + 2)));
            }
        }
        Self::new(grid, values)
    }

    pub fn to_csv_string(&self) -> String {
        let mut out = String::from("t,re,im\n");
        for (j, v) in self.values.iter().enumerate() {
            out.push_str(&format!("{},{},{}\n", self.grid.t(j), v.re, v.im));
        }
        out
    }
}

/// Trapezoid approximation of ∫ f conj(g).
pub fn inner<T: Real>(f: &SampledSignal<T>, g: &SampledSignal<T>) -> Result<Complex<T>> {
    f.check_same_grid(g)?;
    let mut acc = Complex::new(T::zero(), T::zero());
    for (a, b) in f.values.iter().zip(&g.values) {
        acc += a * b.conj();
    }
    Ok(acc * f.grid.step())
}

/// FFT plans for one grid; reuse across many transforms of the same size.
#[derive(Clone)]
pub struct FourierPlan<T: Real> {
    grid: GridSpec<T>,
    forward: Arc<dyn Fft<T>>,
    inverse: Arc<dyn Fft<T>>,
}

impl<T: Real> FourierPlan<T> {
    pub fn new(grid: GridSpec<T>) -> Self {
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(grid.n);
        let inverse = planner.plan_fft_inverse(grid.n);
        Self { grid, forward, inverse }
    }

    /// In-place f_j ↦ f̂_k = h(−1)^k Σ_j (−1)^j f_j e^{−2πijk/N}.
    pub fn forward_in_place(&self, buf: &mut [Complex<T>]) {
        alternate(buf);
        self.forward.process(buf);
        alternate(buf);
        let h = self.grid.step();
        buf.iter_mut().for_each(|v| *v *= h);
    }

    pub fn inverse_in_place(&self, buf: &mut [Complex<T>]) {
        alternate(buf);
        self.inverse.process(buf);
        alternate(buf);
        let s = (T::lit(2.0) * self.grid.half_width).recip();
        buf.iter_mut().for_each(|v| *v *= s);
    }
}

fn alternate<T: Real>(buf: &mut [Complex<T>]) {
    for v in buf.iter_mut().skip(1).step_by(2) {
        *v = -*v;
    }
}

pub fn fourier<T: Real>(f: &SampledSignal<T>) -> Result<Spectrum<T>> {
    fourier_with(&FourierPlan::new(f.grid), f)
}

pub fn fourier_with<T: Real>(plan: &FourierPlan<T>, f: &SampledSignal<T>) -> Result<Spectrum<T>> {
    if f.grid != plan.grid {
        return Err(Error::Shape("Fourier plan built for another grid".into()));
    }
    let mut buf = f.values.clone();
    plan.forward_in_place(&mut buf);
    if buf.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
        return Err(Error::Numeric("non-finite Fourier samples".into()));
    }
    Ok(Spectrum { grid: f.grid, values: buf })
}

pub fn inverse_fourier<T: Real>(s: &Spectrum<T>) -> Result<SampledSignal<T>> {
    let plan = FourierPlan::new(s.grid);
    let mut buf = s.values.clone();
    plan.inverse_in_place(&mut buf);
    SampledSignal::new(s.grid, buf)
}

impl<T: Real> Spectrum<T> {
    pub fn from_fn(grid: GridSpec<T>, f: impl Fn(T) -> Complex<T>) -> Self {
        Self { grid, values: (0..grid.n).map(|k| f(grid.xi(k))).collect() }
    }
}
