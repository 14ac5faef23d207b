use num_complex::Complex;
use serde::{Deserialize, Serialize};

use super::{GridSpec, SampledSignal};
use crate::error::{Error, Result};
use crate::scalar::Real;

/// Real even windows with a closed form on at least one side of the Fourier transform.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Window<T> {
    /// e^{−t²/(2σ²)}
    Gaussian { sigma: T },
    /// exp(1 − 1/(1 − (t/L)²)) on (−L, L), optionally times e^{−t²/(2σ²)}.
    Bump { half_width: T, taper: Option<T> },
    /// The same profile placed on the frequency side: ĥ(ξ) = bump(ξ).
    SpectralBump { half_width: T, taper: Option<T> },
}

#[inline]
fn bump_profile<T: Real>(s: T, half_width: T, taper: Option<T>) -> T {
    let u = s / half_width;
    let u2 = u * u;
    if u2 >= T::one() {
        return T::zero();
    }
    let mut v = (T::one() - (T::one() - u2).recip()).exp();
    if let Some(sig) = taper {
        v *= (-(s * s) / (T::lit(2.0) * sig * sig)).exp();
    }
    v
}

/// ∫_{−L}^{L} b(s) cos(ωs) ds for an even profile vanishing at ±L.
fn even_cosine_integral<T: Real>(half_width: T, taper: Option<T>, omega: T) -> T {
    let w = omega.abs();
    let n = match taper {
        Some(sig) => {
            let h = (sig / T::lit(8.0)).min(T::TAU() / (w + T::lit(16.0) / sig));
            (half_width / h).ceil().to_usize().unwrap_or(1).max(64)
        }
        None => {
            let m = (w * half_width * T::lit(2.0)).ceil().to_usize().unwrap_or(0);
            m.max(1536)
        }
    };
    let h = half_width / T::from_usize(n).unwrap();
    let rot = Complex::from_polar(T::one(), w * h);
    let mut z = rot;
    let mut acc = T::zero();
    for k in 1..n {
        let s = h * T::from_usize(k).unwrap();
        acc += bump_profile(s, half_width, taper) * z.re;
        z *= rot;
        if k % 64 == 0 {
            // keep the rotation on the unit circle
            z = Complex::from_polar(T::one(), w * h * T::from_usize(k + 1).unwrap());
        }
    }
    h * (T::one() + acc * T::lit(2.0))
}

impl<T: Real> Window<T> {
    pub fn gaussian(sigma: T) -> Result<Self> {
        check_positive(sigma, "window sigma")?;
        Ok(Window::Gaussian { sigma })
    }

    pub fn bump(half_width: T, taper: Option<T>) -> Result<Self> {
        check_positive(half_width, "bump half-width")?;
        if let Some(s) = taper {
            check_positive(s, "bump taper")?;
        }
        Ok(Window::Bump { half_width, taper })
    }

    pub fn spectral_bump(half_width: T, taper: Option<T>) -> Result<Self> {
        check_positive(half_width, "spectral bump half-width")?;
        if let Some(s) = taper {
            check_positive(s, "spectral bump taper")?;
        }
        Ok(Window::SpectralBump { half_width, taper })
    }

    /// Parses `gauss:<sigma>`, `bump:<L>[,<taper>]` or `specbump:<L>[,<taper>]`.
    pub fn from_spec(spec: &str) -> Result<Self> {
        let spec = spec.trim();
        let (head, rest) = spec.split_once(':').ok_or_else(|| Error::Config(format!("unknown window `{spec}`")))?;
        let nums: Vec<T> = rest
            .split(',')
            .map(|s| s.trim().parse::<T>().map_err(|_| Error::Config(format!("bad number in window `{spec}`"))))
            .collect::<Result<_>>()?;
        let taper = nums.get(1).copied();
        match (head, nums.len()) {
            ("gauss", 1) => Self::gaussian(nums[0]),
            ("bump", 1 | 2) => Self::bump(nums[0], taper),
            ("specbump", 1 | 2) => Self::spectral_bump(nums[0], taper),
            _ => Err(Error::Config(format!("unknown window `{spec}`"))),
        }
    }

    /// φ(t)
    pub fn eval(&self, t: T) -> T {
        match *self {
            Window::Gaussian { sigma } => (-(t * t) / (T::lit(2.0) * sigma * sigma)).exp(),
            Window::Bump { half_width, taper } => bump_profile(t, half_width, taper),
            Window::SpectralBump { half_width, taper } => even_cosine_integral(half_width, taper, t) / T::TAU(),
        }
    }

    /// φ̂(ξ); real because every window is real and even.
    pub fn eval_hat(&self, xi: T) -> T {
        match *self {
            Window::Gaussian { sigma } => sigma * T::TAU().sqrt() * (-(sigma * sigma * xi * xi) / T::lit(2.0)).exp(),
            Window::Bump { half_width, taper } => even_cosine_integral(half_width, taper, xi),
            Window::SpectralBump { half_width, taper } => bump_profile(xi, half_width, taper),
        }
    }

    /// Half-width beyond which |φ| is negligible (exact for compact windows).
    pub fn time_radius(&self) -> T {
        match *self {
            Window::Gaussian { sigma } => T::lit(9.0) * sigma,
            Window::Bump { half_width, .. } => half_width,
            Window::SpectralBump { half_width, taper } => match taper {
                Some(s) => (T::lit(9.0) / s).min(T::lit(600.0) / half_width),
                None => T::lit(600.0) / half_width,
            },
        }
    }

    /// Half-width beyond which |φ̂| is negligible (exact for spectral bumps).
    pub fn freq_radius(&self) -> T {
        match *self {
            Window::Gaussian { sigma } => T::lit(9.0) / sigma,
            Window::Bump { half_width, taper } => match taper {
                Some(s) => (T::lit(9.0) / s).min(T::lit(600.0) / half_width),
                None => T::lit(600.0) / half_width,
            },
            Window::SpectralBump { half_width, .. } => half_width,
        }
    }

    /// Smallest scale on which the window varies, used to pick quadrature steps.
    pub fn time_scale(&self) -> T {
        match *self {
            Window::Gaussian { sigma } => sigma,
            Window::Bump { half_width, taper } => {
                let b = half_width / T::lit(12.0);
                taper.map_or(b, |s| s.min(half_width / T::lit(4.0)))
            }
            Window::SpectralBump { .. } => self.freq_radius().recip(),
        }
    }

    pub fn is_time_compact(&self) -> bool {
        !matches!(self, Window::SpectralBump { .. })
    }

    pub fn sample(&self, grid: GridSpec<T>) -> SampledSignal<T> {
        SampledSignal::from_fn(grid, |t| Complex::new(self.eval(t), T::zero()))
    }

    pub fn label(&self) -> String {
        let tap = |t: Option<T>| t.map(|s| format!(",{s}")).unwrap_or_default();
        match *self {
            Window::Gaussian { sigma } => format!("gauss:{sigma}"),
            Window::Bump { half_width, taper } => format!("bump:{half_width}{}", tap(taper)),
            Window::SpectralBump { half_width, taper } => format!("specbump:{half_width}{}", tap(taper)),
        }
    }
}

fn check_positive<T: Real>(v: T, what: &str) -> Result<()> {
    if !(v > T::zero()) || !v.is_finite() {
        return Err(Error::Domain(format!("{what} must be positive and finite, got {v}")));
    }
    Ok(())
}
