//! Dense phase-space samples of the STFT: FFT along ξ for grid-aligned shifts x.

use num_complex::Complex;
use rayon::prelude::*;

use super::{FourierPlan, SampledSignal};
use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::weights::WeightFunction;

/// Rectangle |x| ≤ x_max (shifts every `x_stride` grid steps), |ξ| ≤ xi_max on the dual grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseGrid<T> {
    pub x_max: T,
    pub x_stride: usize,
    pub xi_max: T,
}

#[derive(Debug, Clone)]
pub struct PhasePlane<T> {
    pub xs: Vec<T>,
    pub xis: Vec<T>,
    /// row-major, one row per x
    pub values: Vec<Complex<T>>,
    pub dx: T,
    pub dxi: T,
}

impl<T: Real> PhasePlane<T> {
    #[inline]
    pub fn at(&self, i: usize, k: usize) -> Complex<T> {
        self.values[i * self.xis.len() + k]
    }

    pub fn points(&self) -> impl Iterator<Item = (T, T, Complex<T>)> + '_ {
        let nk = self.xis.len();
        self.values.iter().enumerate().map(move |(p, v)| (self.xs[p / nk], self.xis[p % nk], *v))
    }

    fn on_boundary(&self, p: usize) -> bool {
        let nk = self.xis.len();
        let (i, k) = (p / nk, p % nk);
        i == 0 || i + 1 == self.xs.len() || k == 0 || k + 1 == nk
    }
}

/// V_φf(x, ξ) = ∫ f(t) conj(φ(t − x)) e^{−itξ} dt on a phase grid.
pub fn stft_plane<T: Real>(f: &SampledSignal<T>, window: &SampledSignal<T>, pg: &PhaseGrid<T>) -> Result<PhasePlane<T>> {
    f.check_same_grid(window)?;
    if pg.x_stride == 0 {
        return Err(Error::Domain("phase grid stride must be positive".into()));
    }
    let grid = f.grid;
    let h = grid.step();
    let n = grid.n as i64;
    let stride = pg.x_stride as i64;
    let smax = (pg.x_max / (h * T::from_int(stride))).floor().to_i64().unwrap_or(0).min(n / (2 * stride));
    let shifts: Vec<i64> = (-smax..=smax).map(|s| s * stride).collect();
    let krange = grid.dual_index_range(-pg.xi_max, pg.xi_max);
    let plan = FourierPlan::new(grid);
    let rows: Vec<Vec<Complex<T>>> = shifts
        .par_iter()
        .map(|&s| {
            let mut buf = vec![Complex::new(T::zero(), T::zero()); grid.n];
            for (j, b) in buf.iter_mut().enumerate() {
                let k = j as i64 - s;
                if (0..n).contains(&k) {
                    *b = f.values[j] * window.values[k as usize].conj();
                }
            }
            plan.forward_in_place(&mut buf);
            buf[krange.clone()].to_vec()
        })
        .collect();
    Ok(PhasePlane {
        xs: shifts.iter().map(|&s| h * T::from_int(s)).collect(),
        xis: krange.map(|k| grid.xi(k)).collect(),
        values: rows.into_iter().flatten().collect(),
        dx: h * T::from_int(stride),
        dxi: grid.dual_step(),
    })
}

/// sup_z |V_ψf(z)| e^{λω(|z|)} over the phase grid; +∞ when the supremum sits on the
/// outer ring of the grid (no decay inside the sampled region) or overflows.
pub fn seminorm_r<T: Real>(
    f: &SampledSignal<T>,
    window: &SampledSignal<T>,
    lambda: T,
    w: &WeightFunction<T>,
    pg: &PhaseGrid<T>,
) -> Result<T> {
    if !(lambda >= T::zero()) {
        return Err(Error::Domain(format!("lambda must be >= 0, got {lambda}")));
    }
    let plane = stft_plane(f, window, pg)?;
    let rmax = pg.x_max.min(pg.xi_max);
    let ring = T::lit(0.9) * rmax;
    let (mut inner, mut outer) = (T::zero(), T::zero());
    for (x, xi, v) in plane.points() {
        let r = x.hypot(xi);
        let val = v.norm() * (lambda * w.omega(r)).exp();
        if !val.is_finite() {
            return Ok(T::infinity());
        }
        if r >= ring {
            outer = outer.max(val);
        } else {
            inner = inner.max(val);
        }
    }
    if lambda > T::zero() && outer >= inner && outer > T::zero() {
        return Ok(T::infinity());
    }
    Ok(inner.max(outer))
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModulationNorm<T> {
    pub value: T,
    /// Largest weighted integrand on the grid boundary relative to its peak.
    pub boundary_ratio: T,
    pub warning: Option<String>,
}

/// (∬ |V_φf|² e^{2μω(|z|)} dx dξ)^{1/2} by the trapezoid rule on the phase grid.
pub fn modulation_norm<T: Real>(
    f: &SampledSignal<T>,
    mu: T,
    w: &WeightFunction<T>,
    window: &SampledSignal<T>,
    pg: &PhaseGrid<T>,
) -> Result<ModulationNorm<T>> {
    let plane = stft_plane(f, window, pg)?;
    let two = T::lit(2.0);
    let mut total = T::zero();
    let (mut peak, mut edge) = (T::zero(), T::zero());
    for (p, (x, xi, v)) in plane.points().enumerate() {
        let val = v.norm_sqr() * (two * mu * w.omega(x.hypot(xi))).exp();
        total += val;
        peak = peak.max(val);
        if plane.on_boundary(p) {
            edge = edge.max(val);
        }
    }
    let value = (total * plane.dx * plane.dxi).sqrt();
    let boundary_ratio = if peak > T::zero() { edge / peak } else { T::zero() };
    let warning = (boundary_ratio > T::lit(1e-14))
        .then(|| format!("weighted integrand at the phase-grid boundary is {boundary_ratio} of its peak"));
    Ok(ModulationNorm { value, boundary_ratio, warning })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signals::{Family, GridSpec, Window};
    use std::f64::consts::PI;

    fn setup() -> (SampledSignal<f64>, SampledSignal<f64>) {
        let grid = GridSpec::<f64>::new(20.0, 1024).unwrap();
        (SampledSignal::from_fn(grid, |t| Family::Gaussian { sigma: 1.0 }.eval(t)), Window::gaussian(1.0).unwrap().sample(grid))
    }

    #[test]
    fn moyal_constant() {
        let (f, w) = setup();
        let pg = PhaseGrid { x_max: 12.0, x_stride: 2, xi_max: 12.0 };
        let m = modulation_norm(&f, 0.0, &WeightFunction::log(), &w, &pg).unwrap();
        let want = (2.0 * PI).sqrt() * PI.sqrt();
        assert!((m.value - want).abs() < 1e-9 * want);
        assert!(m.warning.is_none());
    }

    #[test]
    fn modulation_norm_monotone_in_mu() {
        let (f, w) = setup();
        let pg = PhaseGrid { x_max: 14.0, x_stride: 2, xi_max: 14.0 };
        let log = WeightFunction::log();
        let vals: Vec<f64> = [0.0, 0.5, 1.0].iter().map(|&mu| modulation_norm(&f, mu, &log, &w, &pg).unwrap().value).collect();
        assert!(vals[0] < vals[1] && vals[1] < vals[2]);
        let zero = SampledSignal::zeros(f.grid);
        assert_eq!(modulation_norm(&zero, 1.0, &log, &w, &pg).unwrap().value, 0.0);
    }

    #[test]
    fn warning_when_grid_too_small() {
        let (f, w) = setup();
        let pg = PhaseGrid { x_max: 2.0, x_stride: 1, xi_max: 2.0 };
        assert!(modulation_norm(&f, 0.0, &WeightFunction::log(), &w, &pg).unwrap().warning.is_some());
    }

    #[test]
    fn seminorm_examples() {
        let (f, w) = setup();
        let log = WeightFunction::log();
        let pg = PhaseGrid { x_max: 10.0, x_stride: 1, xi_max: 10.0 };
        let r0 = seminorm_r(&f, &w, 0.0, &log, &pg).unwrap();
        assert!((r0 - PI.sqrt()).abs() < 1e-12);
        let r1 = seminorm_r(&f, &w, 1.0, &log, &pg).unwrap();
        assert!(r1.is_finite() && r1 > r0);
        let one = SampledSignal::from_real_fn(f.grid, |_| 1.0);
        assert!(seminorm_r(&one, &w, 3.0, &log, &pg).unwrap().is_infinite());
    }

    #[test]
    fn plane_matches_pointwise_stft() {
        use crate::signals::CoefficientOracle;
        let (f, w) = setup();
        let pg = PhaseGrid { x_max: 5.0, x_stride: 8, xi_max: 6.0 };
        let plane = stft_plane(&f, &w, &pg).unwrap();
        let oracle = CoefficientOracle::from_signal(f.clone(), Window::gaussian(1.0).unwrap());
        for (x, xi, v) in plane.points().step_by(97) {
            assert!((oracle.stft(x, xi).unwrap() - v).norm() < 1e-12);
        }
    }
}
