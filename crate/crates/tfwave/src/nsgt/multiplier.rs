//! Derivatives of 1/G by Faà di Bruno and the empirical multiplier constant.

use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::signals::SampledSignal;
use crate::weights::WeightFunction;

use super::combinatorics::multisets;

/// Grid steps per finite-difference step.
const STRIDE: usize = 4;
const MAX_ORDER: usize = 4;

/// Seven-point central stencils for orders 0..=4 at spacing s, fourth-order accurate.
fn stencil<T: Real>(f: [T; 7], order: usize, s: T) -> T {
    let [m3, m2, m1, z, p1, p2, p3] = f;
    let c = T::lit;
    match order {
        0 => z,
        1 => (p3 - c(9.0) * p2 + c(45.0) * p1 - c(45.0) * m1 + c(9.0) * m2 - m3) / (c(60.0) * s),
        2 => (c(2.0) * p3 - c(27.0) * p2 + c(270.0) * p1 - c(490.0) * z + c(270.0) * m1 - c(27.0) * m2 + c(2.0) * m3)
            / (c(180.0) * s * s),
        3 => (-p3 + c(8.0) * p2 - c(13.0) * p1 + c(13.0) * m1 - c(8.0) * m2 + m3) / (c(8.0) * s * s * s),
        _ => (-p3 + c(12.0) * p2 - c(39.0) * p1 + c(56.0) * z - c(39.0) * m1 + c(12.0) * m2 - m3) / (c(6.0) * s * s * s * s),
    }
}

fn locate<T: Real>(g: &SampledSignal<T>, order: usize, t: T) -> Result<(usize, T)> {
    if order > MAX_ORDER {
        return Err(Error::Domain(format!("derivative order {order} exceeds {MAX_ORDER}")));
    }
    let grid = g.grid;
    let h = grid.step();
    let j = ((t - grid.t(0)) / h).round().to_i64().unwrap_or(-1);
    let reach = (3 * STRIDE) as i64;
    if j < reach || j + reach >= grid.n as i64 {
        return Err(Error::Range(format!("t = {t} is too close to the edge of the sample grid")));
    }
    Ok((j as usize, h * T::from_usize(STRIDE).unwrap()))
}

fn samples<T: Real>(g: &SampledSignal<T>, j: usize, map: impl Fn(T) -> T) -> [T; 7] {
    let at = |o: i64| map(g.values[(j as i64 + o * STRIDE as i64) as usize].re);
    [at(-3), at(-2), at(-1), at(0), at(1), at(2), at(3)]
}

fn guard<T: Real>(v: &[T; 7], t: T) -> Result<()> {
    if v.iter().any(|&x| !(x > T::lit(1e-10))) {
        return Err(Error::Refused(format!("G is too close to zero near t = {t}")));
    }
    Ok(())
}

/// Finite-difference derivatives G, G′, …, G^{(order)} at the grid point nearest t.
pub fn symbol_derivatives<T: Real>(g: &SampledSignal<T>, order: usize, t: T) -> Result<Vec<T>> {
    let (j, s) = locate(g, order, t)?;
    let v = samples(g, j, |x| x);
    Ok((0..=order).map(|k| stencil(v, k, s)).collect())
}

/// D^k(1/G) = Σ_ℓ (−1)^ℓ ℓ!/G^{ℓ+1} · k! Σ Π (1/c_γ!)(G^{(γ)}/γ!)^{c_γ}
pub fn reciprocal_derivatives_faa<T: Real>(g: &SampledSignal<T>, order: usize, t: T) -> Result<T> {
    let (j, _) = locate(g, order, t)?;
    guard(&samples(g, j, |x| x), t)?;
    let d = symbol_derivatives(g, order, t)?;
    Ok(faa_from_derivatives(&d, order))
}

fn fact<T: Real>(n: u32) -> T {
    (1..=n).fold(T::one(), |acc, k| acc * T::from_int(i64::from(k)))
}

fn faa_from_derivatives<T: Real>(d: &[T], order: usize) -> T {
    let g0 = d[0];
    if order == 0 {
        return g0.recip();
    }
    let k = order as u32;
    let mut total = T::zero();
    for ell in 1..=k {
        let mut inner = T::zero();
        for ms in multisets(&[k], ell) {
            let mut term = T::one();
            for (gamma, c) in ms {
                let q = gamma[0];
                term = term * (d[q as usize] / fact::<T>(q)).powi(c as i32) / fact::<T>(c);
            }
            inner += term;
        }
        let sign = if ell % 2 == 0 { T::one() } else { -T::one() };
        total += sign * fact::<T>(ell) / g0.powi(ell as i32 + 1) * inner;
    }
    total * fact::<T>(k)
}

/// D^k(1/G) by differencing the samples of 1/G directly.
pub fn reciprocal_derivatives_direct<T: Real>(g: &SampledSignal<T>, order: usize, t: T) -> Result<T> {
    let (j, s) = locate(g, order, t)?;
    guard(&samples(g, j, |x| x), t)?;
    Ok(stencil(samples(g, j, T::recip), order, s))
}

/// Smallest C with |D^k(1/G)(t)| ≤ C e^{λφ*(k/λ)} for every admissible sample t and k ≤ max_order.
pub fn multiplier_bound_check<T: Real>(g: &SampledSignal<T>, w: &WeightFunction<T>, lambda: T, max_order: usize) -> Result<T> {
    if !(lambda > T::zero()) {
        return Err(Error::Domain(format!("lambda must be positive, got {lambda}")));
    }
    if max_order > MAX_ORDER {
        return Err(Error::Domain(format!("derivative order {max_order} exceeds {MAX_ORDER}")));
    }
    let scales: Vec<T> = (0..=max_order)
        .map(|k| Ok((lambda * w.young_conjugate(T::from_usize(k).unwrap() / lambda)?).exp()))
        .collect::<Result<_>>()?;
    let reach = 3 * STRIDE;
    let mut c = T::zero();
    for j in reach..g.grid.n - reach {
        let v = samples(g, j, |x| x);
        if guard(&v, T::zero()).is_err() {
            continue;
        }
        let s = g.grid.step() * T::from_usize(STRIDE).unwrap();
        let d: Vec<T> = (0..=max_order).map(|k| stencil(v, k, s)).collect();
        for (k, scale) in scales.iter().enumerate() {
            if scale.is_infinite() {
                continue;
            }
            c = c.max(faa_from_derivatives(&d, k).abs() / *scale);
        }
    }
    Ok(c)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nsgt::{painless_check_time, NSGSystemTime, Steps};
    use crate::signals::{GridSpec, Window};

    fn smooth() -> SampledSignal<f64> {
        let grid = GridSpec::new(4.0, 4096).unwrap();
        SampledSignal::from_real_fn(grid, |t| 2.0 + (1.3 * t).sin() + 0.3 * (0.7 * t).cos())
    }

    #[test]
    fn low_orders() {
        let g = smooth();
        let t = 0.41015625;
        let exact = |t: f64| 2.0 + (1.3 * t).sin() + 0.3 * (0.7 * t).cos();
        let tj = g.grid.t(((t - g.grid.t(0)) / g.grid.step()).round() as usize);
        assert!((reciprocal_derivatives_faa(&g, 0, t).unwrap() - 1.0 / exact(tj)).abs() < 1e-15);
        let d1 = 1.3 * (1.3 * tj).cos() - 0.21 * (0.7 * tj).sin();
        let want = -d1 / exact(tj).powi(2);
        assert!((reciprocal_derivatives_faa(&g, 1, t).unwrap() - want).abs() < 1e-6 * want.abs());
        assert!((reciprocal_derivatives_direct(&g, 1, t).unwrap() - want).abs() < 1e-6 * want.abs());
        for k in 2..=3 {
            let a = reciprocal_derivatives_faa(&g, k, t).unwrap();
            let b = reciprocal_derivatives_direct(&g, k, t).unwrap();
            assert!((a - b).abs() < 1e-4 * a.abs().max(1e-3), "order {k}: {a} vs {b}");
        }
        assert!(reciprocal_derivatives_faa(&g, 5, t).is_err());
        let zero = SampledSignal::from_real_fn(g.grid, |t| t * t);
        assert!(matches!(reciprocal_derivatives_faa(&zero, 1, 0.0), Err(Error::Refused(_))));
    }

    #[test]
    fn multiplier_constants() {
        let log = WeightFunction::log();
        let grid = GridSpec::new(4.0, 1024).unwrap();
        let flat = SampledSignal::from_real_fn(grid, |_| 4.0);
        for lambda in [0.5, 1.0, 2.0] {
            let c = multiplier_bound_check(&flat, &log, lambda, 4).unwrap();
            // φ*(0) = −ω(1) for the logarithmic weight
            let want = (lambda * 2f64.ln()).exp() / 4.0;
            assert!((c - want).abs() < 1e-12 * want, "lambda={lambda}: {c}");
        }
        let sys = NSGSystemTime::new(Window::bump(0.9, None).unwrap(), 0.5, Steps::sine(0.4, 0.3), 14).unwrap();
        let cert = painless_check_time(&sys).unwrap();
        let g = SampledSignal::from_real_fn(grid, |t| cert.symbol.eval(t));
        let cs: Vec<f64> = [0.5, 1.0, 2.0, 4.0].iter().map(|&l| multiplier_bound_check(&g, &log, l, 4).unwrap()).collect();
        assert!(cs.iter().all(|c| c.is_finite() && *c > 0.0));
        assert!(cs.windows(2).all(|p| p[0] <= p[1]));
    }
}
