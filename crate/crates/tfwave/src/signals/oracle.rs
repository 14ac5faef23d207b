use std::sync::OnceLock;

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use super::{fourier, Atom, GridSpec, SampledSignal, Spectrum, Window};
use crate::error::{Error, Result};
use crate::scalar::Real;

/// Test distributions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Family<T> {
    Delta,
    Constant,
    /// e^{ict²/2}
    Chirp { c: T },
    /// e^{−t²/(2σ²)}
    Gaussian { sigma: T },
    /// normalized Hermite function h_k
    Hermite { k: u32 },
}

impl<T: Real> Family<T> {
    /// Parses `delta`, `const`, `chirp:<c>`, `gauss:<sigma>` or `hermite:<k>`.
    pub fn from_spec(spec: &str) -> Result<Self> {
        let spec = spec.trim();
        let bad = || Error::Config(format!("unknown signal family `{spec}`"));
        match spec {
            "delta" => return Ok(Family::Delta),
            "const" => return Ok(Family::Constant),
            _ => {}
        }
        let (head, arg) = spec.split_once(':').ok_or_else(bad)?;
        match head {
            "chirp" => {
                let c: T = arg.trim().parse().map_err(|_| bad())?;
                if c == T::zero() || !c.is_finite() {
                    return Err(Error::Config("chirp rate must be finite and nonzero".into()));
                }
                Ok(Family::Chirp { c })
            }
            "gauss" => {
                let sigma: T = arg.trim().parse().map_err(|_| bad())?;
                if !(sigma > T::zero()) || !sigma.is_finite() {
                    return Err(Error::Config("gaussian width must be positive".into()));
                }
                Ok(Family::Gaussian { sigma })
            }
            "hermite" => Ok(Family::Hermite { k: arg.trim().parse().map_err(|_| bad())? }),
            _ => Err(bad()),
        }
    }

    pub fn label(&self) -> String {
        match self {
            Family::Delta => "delta".into(),
            Family::Constant => "const".into(),
            Family::Chirp { c } => format!("chirp:{c}"),
            Family::Gaussian { sigma } => format!("gauss:{sigma}"),
            Family::Hermite { k } => format!("hermite:{k}"),
        }
    }

    pub fn is_l2(&self) -> bool {
        matches!(self, Family::Gaussian { .. } | Family::Hermite { .. })
    }

    /// Pointwise value; not defined for Delta.
    pub fn eval(&self, t: T) -> Complex<T> {
        match *self {
            Family::Delta => Complex::new(T::zero(), T::zero()),
            Family::Constant => Complex::new(T::one(), T::zero()),
            Family::Chirp { c } => Complex::from_polar(T::one(), c * t * t / T::lit(2.0)),
            Family::Gaussian { sigma } => Complex::new((-(t * t) / (T::lit(2.0) * sigma * sigma)).exp(), T::zero()),
            Family::Hermite { k } => Complex::new(hermite_function(k, t), T::zero()),
        }
    }

    /// Fourier transform where it is a function.
    pub fn eval_hat(&self, xi: T) -> Complex<T> {
        match *self {
            Family::Delta => Complex::new(T::one(), T::zero()),
            Family::Constant => Complex::new(T::zero(), T::zero()),
            Family::Chirp { c } => {
                let amp = (T::TAU() / c.abs()).sqrt();
                let phase = T::FRAC_PI_4() * c.signum() - xi * xi / (T::lit(2.0) * c);
                Complex::from_polar(amp, phase)
            }
            Family::Gaussian { sigma } => {
                Complex::new(sigma * T::TAU().sqrt() * (-(sigma * sigma * xi * xi) / T::lit(2.0)).exp(), T::zero())
            }
            Family::Hermite { k } => {
                // ĥ_k = √(2π) (−i)^k h_k
                let unit = match k % 4 {
                    0 => Complex::new(T::one(), T::zero()),
                    1 => Complex::new(T::zero(), -T::one()),
                    2 => Complex::new(-T::one(), T::zero()),
                    _ => Complex::new(T::zero(), T::one()),
                };
                unit * (T::TAU().sqrt() * hermite_function(k, xi))
            }
        }
    }

    /// Bound on the local frequency of f over |t| ≤ reach, for quadrature step choice.
    fn local_frequency(&self, reach: T) -> T {
        match *self {
            Family::Chirp { c } => c.abs() * reach,
            Family::Hermite { k } => (T::from_u32(2 * k + 1).unwrap()).sqrt(),
            _ => T::zero(),
        }
    }

    fn local_scale(&self) -> T {
        match *self {
            Family::Gaussian { sigma } => sigma,
            Family::Hermite { k } => (T::from_u32(2 * k + 1).unwrap()).sqrt().recip(),
            _ => T::infinity(),
        }
    }

    /// Fourier-side local frequency bound over |η| ≤ reach.
    fn local_frequency_hat(&self, reach: T) -> T {
        match *self {
            Family::Chirp { c } => reach / c.abs(),
            Family::Hermite { k } => (T::from_u32(2 * k + 1).unwrap()).sqrt(),
            _ => T::zero(),
        }
    }

    fn local_scale_hat(&self) -> T {
        match *self {
            Family::Gaussian { sigma } => sigma.recip(),
            Family::Hermite { k } => (T::from_u32(2 * k + 1).unwrap()).sqrt().recip(),
            _ => T::infinity(),
        }
    }
}

/// Normalized Hermite function by the three-term recurrence.
pub(crate) fn hermite_function<T: Real>(k: u32, t: T) -> T {
    let mut h0 = T::PI().powf(T::lit(-0.25)) * (-(t * t) / T::lit(2.0)).exp();
    if k == 0 {
        return h0;
    }
    let mut h1 = T::lit(2.0).sqrt() * t * h0;
    for j in 1..k {
        let jf = T::from_u32(j).unwrap();
        let h2 = (T::lit(2.0) / (jf + T::one())).sqrt() * t * h1 - (jf / (jf + T::one())).sqrt() * h0;
        h0 = h1;
        h1 = h2;
    }
    h1
}

#[derive(Debug, Clone)]
pub enum OracleKind<T> {
    Quadrature { signal: SampledSignal<T>, family: Option<Family<T>> },
    ClosedForm(Family<T>),
}

/// Source of coefficients ⟨u, ψ⟩ for atoms ψ, conjugate linear in ψ.
#[derive(Debug, Clone)]
pub struct CoefficientOracle<T> {
    pub kind: OracleKind<T>,
    pub window: Window<T>,
    spectrum: OnceLock<Spectrum<T>>,
}

impl<T: Real> CoefficientOracle<T> {
    /// Quadrature oracle for L² families (and chirps), closed form for Delta and Constant.
    pub fn generate(family: Family<T>, grid: GridSpec<T>, window: Window<T>) -> Self {
        match family {
            Family::Delta | Family::Constant => Self::closed_form(family, window),
            _ => {
                let signal = SampledSignal::from_fn(grid, |t| family.eval(t));
                Self { kind: OracleKind::Quadrature { signal, family: Some(family) }, window, spectrum: OnceLock::new() }
            }
        }
    }

    pub fn closed_form(family: Family<T>, window: Window<T>) -> Self {
        Self { kind: OracleKind::ClosedForm(family), window, spectrum: OnceLock::new() }
    }

    pub fn from_signal(signal: SampledSignal<T>, window: Window<T>) -> Self {
        Self { kind: OracleKind::Quadrature { signal, family: None }, window, spectrum: OnceLock::new() }
    }

    pub fn label(&self) -> String {
        match &self.kind {
            OracleKind::ClosedForm(f) => f.label(),
            OracleKind::Quadrature { family: Some(f), .. } => f.label(),
            OracleKind::Quadrature { family: None, .. } => "sampled".into(),
        }
    }

    pub fn signal(&self) -> Option<&SampledSignal<T>> {
        match &self.kind {
            OracleKind::Quadrature { signal, .. } => Some(signal),
            OracleKind::ClosedForm(_) => None,
        }
    }

    /// Largest |x| at which atoms of `window` can be paired without truncation bias.
    pub fn reliable_x(&self, window: &Window<T>) -> T {
        match &self.kind {
            OracleKind::ClosedForm(_) => T::infinity(),
            OracleKind::Quadrature { signal, .. } => signal.grid.half_width - window.time_radius(),
        }
    }

    /// V_φu(x, ξ) = ⟨u, M_ξT_xφ⟩ with the oracle's window.
    pub fn stft(&self, x: T, xi: T) -> Result<Complex<T>> {
        self.pair(&Atom::shifted(self.window, x, xi))
    }

    /// ⟨u, ψ⟩
    pub fn pair(&self, atom: &Atom<T>) -> Result<Complex<T>> {
        if !atom.x.is_finite() || !atom.xi.is_finite() {
            return Err(Error::Domain("phase-space point must be finite".into()));
        }
        match &self.kind {
            OracleKind::ClosedForm(family) => Ok(pair_closed(family, atom)),
            OracleKind::Quadrature { signal, .. } => self.pair_sampled(signal, atom),
        }
    }

    fn pair_sampled(&self, signal: &SampledSignal<T>, atom: &Atom<T>) -> Result<Complex<T>> {
        let grid = signal.grid;
        let r = atom.window.time_radius();
        if atom.x.abs() > grid.half_width - r {
            return Err(Error::Range(format!(
                "x = {} outside the reliable range |x| <= {}",
                atom.x,
                grid.half_width - r
            )));
        }
        if atom.window.is_time_compact() {
            let range = grid.index_range(atom.x - r, atom.x + r);
            if range.is_empty() {
                return Ok(Complex::new(T::zero(), T::zero()));
            }
            let h = grid.step();
            let t0 = grid.t(range.start);
            let rot = Complex::from_polar(T::one(), -atom.xi * h);
            let mut z = Complex::from_polar(T::one(), -atom.xi * t0);
            let mut acc = Complex::new(T::zero(), T::zero());
            for (i, j) in range.clone().enumerate() {
                let t = grid.t(j);
                acc += signal.values[j] * z * atom.window.eval(t - atom.x);
                z *= rot;
                if i % 128 == 127 {
                    z = Complex::from_polar(T::one(), -atom.xi * grid.t(j + 1));
                }
            }
            Ok(acc * h * atom.coeff.conj())
        } else {
            let spec = self.spectrum.get_or_init(|| fourier(signal).expect("finite signal has a finite spectrum"));
            let l = atom.window.freq_radius();
            if atom.xi.abs() + l > grid.xi_max() {
                return Err(Error::Range(format!("xi = {} beyond the dual grid", atom.xi)));
            }
            let range = grid.dual_index_range(atom.xi - l, atom.xi + l);
            let mut acc = Complex::new(T::zero(), T::zero());
            for k in range {
                acc += spec.values[k] * atom.eval_hat(grid.xi(k)).conj();
            }
            Ok(acc * grid.dual_step() / T::TAU())
        }
    }
}

fn pair_closed<T: Real>(family: &Family<T>, atom: &Atom<T>) -> Complex<T> {
    let two = T::lit(2.0);
    let (x, xi) = (atom.x, atom.xi);
    let ac = atom.coeff.conj();
    match *family {
        Family::Delta => return atom.eval(T::zero()).conj(),
        Family::Constant => return atom.eval_hat(T::zero()).conj(),
        _ => {}
    }
    if let Window::Gaussian { sigma: sw } = atom.window {
        let s2 = sw * sw;
        // ∫ exp(−a t² + b t − x²/(2σ_w²)) dt = √(π/a) exp(b²/(4a) − x²/(2σ_w²))
        let gauss_integral = |a: Complex<T>| {
            let b = Complex::new(x / s2, -xi);
            let e = b * b / (a * T::lit(4.0)) - Complex::new(x * x / (two * s2), T::zero());
            (Complex::new(T::PI(), T::zero()) / a).sqrt() * e.exp()
        };
        match *family {
            Family::Gaussian { sigma } => {
                let a = Complex::new((two * sigma * sigma).recip() + (two * s2).recip(), T::zero());
                return ac * gauss_integral(a);
            }
            Family::Chirp { c } => {
                let a = Complex::new((two * s2).recip(), -c / two);
                return ac * gauss_integral(a);
            }
            Family::Hermite { k } if sw == T::one() => {
                // V h_k(x, ξ) = (x − iξ)^k/√(2^k k!) · π^{1/4} e^{−(x²+ξ²)/4 − ixξ/2}
                let w = Complex::new(x, -xi) / two.sqrt();
                let mut wk = Complex::new(T::one(), T::zero());
                for j in 1..=k {
                    wk = wk * w / T::from_u32(j).unwrap().sqrt();
                }
                let env = Complex::from_polar((-(x * x + xi * xi) / T::lit(4.0)).exp(), -x * xi / two);
                return ac * wk * env * T::PI().powf(T::lit(0.25));
            }
            _ => {}
        }
    }
    if atom.window.is_time_compact() {
        let r = atom.window.time_radius();
        let reach = x.abs() + r;
        let scale = atom.window.time_scale().min(family.local_scale());
        let freq = xi.abs() + family.local_frequency(reach);
        trapezoid(x - r, x + r, scale, freq, |t| family.eval(t) * atom.eval(t).conj())
    } else {
        let l = atom.window.freq_radius();
        let reach = xi.abs() + l;
        let scale = (T::lit(0.25) * l).min(family.local_scale_hat());
        let freq = x.abs() + family.local_frequency_hat(reach);
        trapezoid(xi - l, xi + l, scale, freq, |eta| family.eval_hat(eta) * atom.eval_hat(eta).conj()) / T::TAU()
    }
}

/// Trapezoid rule on [a, b] with a step resolving `scale` and oscillation `freq`.
fn trapezoid<T: Real>(a: T, b: T, scale: T, freq: T, f: impl Fn(T) -> Complex<T>) -> Complex<T> {
    let h = (scale / T::lit(10.0)).min(T::TAU() / (freq + T::lit(18.0) / scale.min(T::lit(1e6))));
    let n = ((b - a) / h).ceil().to_usize().unwrap_or(1).max(256);
    let h = (b - a) / T::from_usize(n).unwrap();
    let mut acc = (f(a) + f(b)) / T::lit(2.0);
    for k in 1..n {
        acc += f(a + h * T::from_usize(k).unwrap());
    }
    acc * h
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn gauss_window() -> Window<f64> {
        Window::gaussian(1.0).unwrap()
    }

    #[test]
    fn family_specs() {
        assert_eq!(Family::<f64>::from_spec("delta").unwrap(), Family::Delta);
        assert_eq!(Family::<f64>::from_spec("chirp:1.5").unwrap(), Family::Chirp { c: 1.5 });
        assert_eq!(Family::<f64>::from_spec("hermite:3").unwrap(), Family::Hermite { k: 3 });
        assert!(Family::<f64>::from_spec("chirp:0").is_err());
        assert!(Family::<f64>::from_spec("sawtooth").is_err());
    }

    #[test]
    fn stft_examples() {
        let grid = GridSpec::<f64>::new(40.0, 4096).unwrap();
        let g = CoefficientOracle::generate(Family::Gaussian { sigma: 1.0 }, grid, gauss_window());
        assert!((g.stft(0.0, 0.0).unwrap() - Complex::new(PI.sqrt(), 0.0)).norm() < 1e-12);
        let d = CoefficientOracle::generate(Family::Delta, grid, gauss_window());
        assert_eq!(d.stft(0.0, 17.3).unwrap(), Complex::new(1.0, 0.0));
        assert!(g.stft(35.0, 0.0).is_err());
    }

    #[test]
    fn constant_closed_form_vs_wide_quadrature() {
        let grid = GridSpec::<f64>::new(60.0, 8192).unwrap();
        let sampled = CoefficientOracle::from_signal(SampledSignal::from_real_fn(grid, |_| 1.0), gauss_window());
        let closed = CoefficientOracle::closed_form(Family::Constant, gauss_window());
        for k in 0..20 {
            let (x, xi) = (-20.0 + 2.1 * k as f64, 3.0 - 0.31 * k as f64);
            let a = closed.stft(x, xi).unwrap();
            let b = sampled.stft(x, xi).unwrap();
            assert!((a - b).norm() < 1e-12, "{a} {b}");
            assert!((a.norm() - (2.0 * PI).sqrt() * (-xi * xi / 2.0).exp()).abs() < 1e-13);
        }
    }

    #[test]
    fn chirp_magnitude_and_modes() {
        let grid = GridSpec::<f64>::new(40.0, 4096).unwrap();
        let closed = CoefficientOracle::closed_form(Family::Chirp { c: 1.0 }, gauss_window());
        let quad = CoefficientOracle::generate(Family::Chirp { c: 1.0 }, grid, gauss_window());
        for k in 0..100 {
            let x = -25.0 + 0.5 * k as f64;
            let xi = x + ((k * 7) % 11) as f64 * 0.4 - 2.0;
            let a = closed.stft(x, xi).unwrap();
            let want = 2.0 * PI / 2f64.sqrt() * (-(xi - x) * (xi - x) / 2.0).exp();
            assert!((a.norm_sqr() - want).abs() <= 1e-8 * want);
            let b = quad.stft(x, xi).unwrap();
            assert!((a - b).norm() <= 1e-7 * a.norm(), "x={x} xi={xi}");
        }
    }

    #[test]
    fn hermite_closed_form_vs_quadrature() {
        let grid = GridSpec::<f64>::new(40.0, 4096).unwrap();
        for k in 0..6 {
            let fam = Family::Hermite { k };
            let closed = CoefficientOracle::closed_form(fam, gauss_window());
            let quad = CoefficientOracle::generate(fam, grid, gauss_window());
            for p in 0..15 {
                let (x, xi) = (-3.0 + 0.45 * p as f64, 2.5 - 0.37 * p as f64);
                let a = closed.stft(x, xi).unwrap();
                let b = quad.stft(x, xi).unwrap();
                assert!((a - b).norm() < 1e-12, "k={k} {a} {b}");
            }
        }
    }

    #[test]
    fn gaussian_other_widths() {
        let grid = GridSpec::<f64>::new(40.0, 4096).unwrap();
        let w = Window::gaussian(0.7).unwrap();
        let fam = Family::Gaussian { sigma: 1.6 };
        let closed = CoefficientOracle::closed_form(fam, w);
        let quad = CoefficientOracle::generate(fam, grid, w);
        for p in 0..10 {
            let (x, xi) = (-4.0 + 0.9 * p as f64, 1.0 - 0.2 * p as f64);
            assert!((closed.stft(x, xi).unwrap() - quad.stft(x, xi).unwrap()).norm() < 1e-12);
        }
    }

    #[test]
    fn compact_windows_match_grid_quadrature() {
        let grid = GridSpec::<f64>::new(40.0, 8192).unwrap();
        let windows = [Window::bump(8.0, Some(1.0)).unwrap(), Window::bump(1.5, None).unwrap()];
        for w in windows {
            for fam in [Family::Gaussian { sigma: 1.0 }, Family::Chirp { c: 1.0 }, Family::Hermite { k: 3 }] {
                let closed = CoefficientOracle::closed_form(fam, w);
                let quad = CoefficientOracle::generate(fam, grid, w);
                for p in 0..8 {
                    let atom = Atom::shifted(w, -6.0 + 1.7 * p as f64, 4.0 - 1.1 * p as f64);
                    let a = closed.pair(&atom).unwrap();
                    let b = quad.pair(&atom).unwrap();
                    assert!((a - b).norm() < 1e-9, "{w:?} {fam:?}: {a} {b}");
                }
            }
        }
    }

    #[test]
    fn spectral_windows_match_grid_quadrature() {
        let grid = GridSpec::<f64>::new(40.0, 4096).unwrap();
        let w = Window::spectral_bump(8.0, Some(1.0)).unwrap();
        for fam in [Family::Gaussian { sigma: 1.0 }, Family::Chirp { c: 1.0 }] {
            let closed = CoefficientOracle::closed_form(fam, w);
            let quad = CoefficientOracle::generate(fam, grid, w);
            for p in 0..8 {
                let atom = Atom { window: w, x: -7.0 + 2.0 * p as f64, xi: 3.0 - p as f64, coeff: Complex::new(0.6, 0.8) };
                let a = closed.pair(&atom).unwrap();
                let b = quad.pair(&atom).unwrap();
                assert!((a - b).norm() < 1e-9, "{fam:?}: {a} {b}");
            }
        }
    }
}
