use num_complex::Complex;

use super::{GridSpec, SampledSignal, Window};
use crate::scalar::Real;

/// ψ(t) = a·e^{iξt}·w(t − x).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Atom<T> {
    pub window: Window<T>,
    pub x: T,
    pub xi: T,
    pub coeff: Complex<T>,
}

impl<T: Real> Atom<T> {
    /// Π(x, ξ)w
    pub fn shifted(window: Window<T>, x: T, xi: T) -> Self {
        Self { window, x, xi, coeff: Complex::new(T::one(), T::zero()) }
    }

    pub fn eval(&self, t: T) -> Complex<T> {
        self.coeff * Complex::from_polar(self.window.eval(t - self.x), self.xi * t)
    }

    /// ψ̂(η) = a·e^{−ix(η−ξ)}·ŵ(η − ξ)
    pub fn eval_hat(&self, eta: T) -> Complex<T> {
        let d = eta - self.xi;
        self.coeff * Complex::from_polar(self.window.eval_hat(d), -self.x * d)
    }

    /// Samples on `grid` restricted to the window's effective support.
    pub fn render(&self, grid: GridSpec<T>) -> SampledSignal<T> {
        let mut out = SampledSignal::zeros(grid);
        self.add_to(&mut out.values, grid, Complex::new(T::one(), T::zero()));
        out
    }

    /// out += c·ψ on the grid points within the effective support.
    pub fn add_to(&self, out: &mut [Complex<T>], grid: GridSpec<T>, c: Complex<T>) {
        let r = self.window.time_radius();
        let range = grid.index_range(self.x - r, self.x + r);
        let a = c * self.coeff;
        for j in range {
            let t = grid.t(j);
            out[j] += a * Complex::from_polar(self.window.eval(t - self.x), self.xi * t);
        }
    }

    /// Samples of the 2T-periodization Σ_l ψ(t + 2Tl).
    pub fn render_periodic(&self, grid: GridSpec<T>) -> SampledSignal<T> {
        let period = grid.half_width * T::lit(2.0);
        let r = self.window.time_radius();
        let wraps = (r / period).ceil().to_i64().unwrap_or(0) + 1;
        let mut out = SampledSignal::zeros(grid);
        for j in 0..grid.n {
            let t = grid.t(j);
            let mut acc = Complex::new(T::zero(), T::zero());
            for l in -wraps..=wraps {
                let s = t + period * T::from_int(l);
                if (s - self.x).abs() <= r {
                    acc += self.eval(s);
                }
            }
            out.values[j] = acc;
        }
        out
    }
}
