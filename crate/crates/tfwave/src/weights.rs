//! Weight functions ω, their convexification φ(t) = ω(eᵗ) and Young conjugates.

use std::path::Path;

use crate::error::{Error, Result};
use crate::scalar::Real;

#[derive(Debug, Clone, PartialEq)]
pub enum WeightKind<T> {
    /// ω(t) = log(1 + t)
    Log,
    /// ω(t) = t^{1/s}
    Gevrey(T),
    Custom(Tabulated<T>),
}

/// Piecewise linear ω on a table, extended as a power law past the last node.
#[derive(Debug, Clone, PartialEq)]
pub struct Tabulated<T> {
    t: Vec<T>,
    omega: Vec<T>,
}

impl<T: Real> Tabulated<T> {
    pub fn new(t: Vec<T>, omega: Vec<T>) -> Result<Self> {
        if t.len() != omega.len() || t.len() < 2 {
            return Err(Error::Shape("weight table needs at least two (t, omega) rows".into()));
        }
        if t[0] != T::zero() {
            return Err(Error::Domain("weight table must start at t = 0".into()));
        }
        for k in 1..t.len() {
            if !(t[k] > t[k - 1]) {
                return Err(Error::Domain(format!("weight table not strictly increasing at row {k}")));
            }
        }
        if omega.iter().any(|w| !w.is_finite() || *w < T::zero()) {
            return Err(Error::Domain("weight table has negative or non-finite omega".into()));
        }
        Ok(Self { t, omega })
    }

    fn eval(&self, x: T) -> T {
        let n = self.t.len();
        let last = n - 1;
        if x >= self.t[last] {
            let (t0, t1) = (self.t[last - 1], self.t[last]);
            let (w0, w1) = (self.omega[last - 1], self.omega[last]);
            if w0 > T::zero() && w1 > T::zero() && t0 > T::zero() {
                let p = (w1 / w0).ln() / (t1 / t0).ln();
                return w1 * (x / t1).powf(p);
            }
            return w1 + (w1 - w0) / (t1 - t0) * (x - t1);
        }
        // binary search for the bracketing interval
        let k = match self.t.binary_search_by(|v| v.partial_cmp(&x).unwrap()) {
            Ok(k) => return self.omega[k],
            Err(k) => k,
        };
        let (t0, t1) = (self.t[k - 1], self.t[k]);
        let (w0, w1) = (self.omega[k - 1], self.omega[k]);
        w0 + (w1 - w0) * (x - t0) / (t1 - t0)
    }

    /// Reads a CSV with header `t,omega`.
    pub fn from_csv_str(text: &str) -> Result<Self> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header = lines.next().ok_or_else(|| Error::Parse("empty weight table".into()))?;
        let cols: Vec<&str> = header.split(',').map(str::trim).collect();
        if cols != ["t", "omega"] {
            return Err(Error::Parse(format!("expected header `t,omega`, got `{header}`")));
        }
        let (mut t, mut omega) = (Vec::new(), Vec::new());
        for (row, line) in lines.enumerate() {
            let mut it = line.split(',').map(str::trim);
            let parse = |s: Option<&str>| -> Result<T> {
                s.and_then(|v| v.parse::<T>().ok())
                    .ok_or_else(|| Error::Parse(format!("weight table row {}: `{line}`", row + 2)))
            };
            t.push(parse(it.next())?);
            omega.push(parse(it.next())?);
        }
        Self::new(t, omega)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WeightFunction<T> {
    pub kind: WeightKind<T>,
}

const GOLDEN_MAX_ITER: usize = 2000;

impl<T: Real> WeightFunction<T> {
    pub fn log() -> Self {
        Self { kind: WeightKind::Log }
    }

    pub fn gevrey(s: T) -> Result<Self> {
        if !(s > T::one()) || !s.is_finite() {
            return Err(Error::Domain(format!("Gevrey order must be a finite real > 1, got {s}")));
        }
        Ok(Self { kind: WeightKind::Gevrey(s) })
    }

    pub fn custom(table: Tabulated<T>) -> Self {
        Self { kind: WeightKind::Custom(table) }
    }

    /// Parses `log`, `gevrey:<s>` or `custom:<csv-path>`.
    pub fn from_spec(spec: &str) -> Result<Self> {
        let spec = spec.trim();
        if spec == "log" {
            return Ok(Self::log());
        }
        if let Some(s) = spec.strip_prefix("gevrey:") {
            let s: T = s
                .trim()
                .parse()
                .map_err(|_| Error::Config(format!("bad Gevrey order in `{spec}`")))?;
            return Self::gevrey(s);
        }
        if let Some(path) = spec.strip_prefix("custom:") {
            let text = std::fs::read_to_string(Path::new(path.trim()))
                .map_err(|e| Error::Config(format!("cannot read weight table `{path}`: {e}")))?;
            return Ok(Self::custom(Tabulated::from_csv_str(&text)?));
        }
        Err(Error::Config(format!("unknown weight `{spec}`")))
    }

    pub fn label(&self) -> String {
        match &self.kind {
            WeightKind::Log => "log".into(),
            WeightKind::Gevrey(s) => format!("gevrey:{s}"),
            WeightKind::Custom(_) => "custom".into(),
        }
    }

    /// ω(t) with argument checking.
    pub fn omega_eval(&self, t: T) -> Result<T> {
        if !t.is_finite() || t < T::zero() {
            return Err(Error::Domain(format!("omega needs a finite t >= 0, got {t}")));
        }
        Ok(self.omega(t))
    }

    /// ω(t) for t ≥ 0, unchecked.
    #[inline]
    pub fn omega(&self, t: T) -> T {
        match &self.kind {
            WeightKind::Log => t.ln_1p(),
            WeightKind::Gevrey(s) => t.powf(s.recip()),
            WeightKind::Custom(tab) => tab.eval(t),
        }
    }

    /// ω(|(x, ξ)|)
    #[inline]
    pub fn omega_phase(&self, x: T, xi: T) -> T {
        self.omega(x.hypot(xi))
    }

    /// φ(t) = ω(eᵗ)
    #[inline]
    pub fn phi(&self, t: T) -> T {
        match &self.kind {
            WeightKind::Log => {
                // log(1 + e^t) without overflow
                if t > T::zero() {
                    t + (-t).exp().ln_1p()
                } else {
                    t.exp().ln_1p()
                }
            }
            WeightKind::Gevrey(s) => (t / *s).exp(),
            WeightKind::Custom(tab) => tab.eval(t.exp()),
        }
    }

    /// φ*(s) = sup_{t ≥ 0} (st − φ(t)); may be +∞.
    pub fn young_conjugate(&self, s: T) -> Result<T> {
        if !s.is_finite() {
            return Err(Error::Domain(format!("young conjugate needs finite s, got {s}")));
        }
        if s < T::zero() {
            return Err(Error::Domain(format!("young conjugate needs s >= 0, got {s}")));
        }
        match &self.kind {
            WeightKind::Gevrey(s0) => {
                let sy = *s0 * s;
                if sy >= T::one() {
                    Ok(sy * sy.ln() - sy)
                } else {
                    Ok(-T::one())
                }
            }
            _ => self.young_conjugate_numeric(s),
        }
    }

    /// Golden-section evaluation of φ*, used for every kind as an independent path.
    pub fn young_conjugate_numeric(&self, s: T) -> Result<T> {
        if !s.is_finite() || s < T::zero() {
            return Err(Error::Domain(format!("young conjugate needs a finite s >= 0, got {s}")));
        }
        let g = |t: T| s * t - self.phi(t);
        let fd = |t: T| {
            let h = T::lit(1e-6) * t.max(T::one());
            let d = g(t + h) - g(t);
            if d.is_nan() {
                -T::one()
            } else {
                d
            }
        };
        let mut hi = T::one();
        let cap = T::lit(2f64.powi(60));
        while fd(hi) >= T::zero() {
            hi = hi + hi;
            if hi > cap {
                // objective still rising: unbounded, or approaching a plateau
                let slope = (g(hi + hi) - g(hi)) / hi;
                let tiny = T::lit(1e-9) * (T::one() + s);
                return if slope > tiny { Ok(T::infinity()) } else { Ok(g(hi).max(g(hi + hi))) };
            }
        }
        let (mut a, mut b) = (T::zero(), hi);
        let r = (T::lit(5.0).sqrt() - T::one()) / T::lit(2.0);
        let mut c = b - r * (b - a);
        let mut d = a + r * (b - a);
        let (mut gc, mut gd) = (g(c), g(d));
        let tol = T::lit(1e-12).max(T::epsilon() * T::lit(16.0));
        let mut iter = 0;
        while (b - a) > tol * T::one().max(a.abs()) {
            iter += 1;
            if iter > GOLDEN_MAX_ITER {
                return Err(Error::Numeric(format!("golden-section search for phi*({s}) did not converge")));
            }
            if gc >= gd {
                b = d;
                d = c;
                gd = gc;
                c = b - r * (b - a);
                gc = g(c);
            } else {
                a = c;
                c = d;
                gc = gd;
                d = a + r * (b - a);
                gd = g(d);
            }
        }
        let mid = (a + b) / T::lit(2.0);
        Ok(g(mid).max(g(a)).max(g(b)).max(g(T::zero())))
    }

    /// Samples conditions (α)–(δ) of a weight function.
    pub fn check_conditions(&self, grid: &WeightGrid<T>) -> Result<ConditionReport<T>> {
        if grid.points < 100 {
            return Err(Error::Domain("weight grid needs at least 100 points".into()));
        }
        if !(grid.t_max > T::one()) {
            return Err(Error::Domain("weight grid must extend beyond t = 1".into()));
        }
        let ts: Vec<T> = (0..grid.points)
            .map(|k| grid.t_max * T::from_usize(k).unwrap() / T::from_usize(grid.points - 1).unwrap())
            .collect();
        let om: Vec<T> = ts.iter().map(|&t| self.omega(t)).collect();

        let monotone_ok = om[0] >= T::zero() && om.windows(2).all(|w| w[1] >= w[0]);

        let slack = T::lit(1e-12);
        let mut subadditive_ok = true;
        'outer: for (i, &t1) in ts.iter().enumerate() {
            for (j, &t2) in ts.iter().enumerate().skip(i) {
                if self.omega(t1 + t2) > om[i] + om[j] + slack {
                    subadditive_ok = false;
                    break 'outer;
                }
            }
        }

        // convexity of φ on u ∈ [−5, log t_max]
        let (u0, u1) = (T::lit(-5.0), grid.t_max.ln());
        let nu = grid.points;
        let du = (u1 - u0) / T::from_usize(nu - 1).unwrap();
        let phis: Vec<T> = (0..nu).map(|k| self.phi(u0 + du * T::from_usize(k).unwrap())).collect();
        let convex_ok = phis.windows(3).all(|w| (w[2] - w[1] - w[1] + w[0]) / (du * du) >= T::lit(-1e-10));

        let (beta_estimate, beta_ok) = self.beta_integral();

        // γ: ω(t) ≥ a + b log(1 + t)
        let mut b = T::infinity();
        for (&t, &w) in ts.iter().zip(&om) {
            if t >= T::one() {
                b = b.min(w / t.ln_1p());
            }
        }
        let a = ts
            .iter()
            .zip(&om)
            .map(|(&t, &w)| w - b * t.ln_1p())
            .fold(T::infinity(), T::min);
        let gamma_ok = b > T::zero() && b.is_finite();

        Ok(ConditionReport {
            subadditive_ok,
            monotone_ok,
            integral_beta_estimate: beta_estimate,
            beta_ok,
            gamma_fit: (a, b),
            gamma_ok,
            convex_ok,
        })
    }

    /// ∫₁^∞ ω(t)/t² dt in the variable u = log t, summed over doublings of t.
    fn beta_integral(&self) -> (T, bool) {
        let ln2 = T::LN_2();
        let f = |u: T| self.omega(u.exp()) * (-u).exp();
        // composite Simpson on [k ln2, (k+1) ln2]
        let simpson = |k: usize| {
            let n = 64usize;
            let a = ln2 * T::from_usize(k).unwrap();
            let h = ln2 / T::from_usize(n).unwrap();
            let mut acc = f(a) + f(a + ln2);
            for i in 1..n {
                let w = if i % 2 == 1 { T::lit(4.0) } else { T::lit(2.0) };
                acc += w * f(a + h * T::from_usize(i).unwrap());
            }
            acc * h / T::lit(3.0)
        };
        let doublings = 60;
        let incs: Vec<T> = (0..doublings).map(simpson).collect();
        let partial: T = incs.iter().copied().sum();
        let last = incs[doublings - 1];
        let prev = incs[doublings - 2];
        if last == T::zero() {
            return (partial, true);
        }
        let q = last / prev;
        if q < T::lit(0.999) {
            (partial + last * q / (T::one() - q), true)
        } else {
            (T::infinity(), false)
        }
    }
}

/// Uniform sampling of [0, t_max] used by the condition checks.
#[derive(Debug, Clone, Copy)]
pub struct WeightGrid<T> {
    pub t_max: T,
    pub points: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConditionReport<T> {
    pub subadditive_ok: bool,
    pub monotone_ok: bool,
    pub integral_beta_estimate: T,
    pub beta_ok: bool,
    /// (a, b) in ω(t) ≥ a + b log(1 + t)
    pub gamma_fit: (T, T),
    pub gamma_ok: bool,
    pub convex_ok: bool,
}

impl<T> ConditionReport<T> {
    pub fn all_ok(&self) -> bool {
        self.subadditive_ok && self.monotone_ok && self.beta_ok && self.gamma_ok && self.convex_ok
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::E;

    #[test]
    fn omega_examples() {
        let log = WeightFunction::<f64>::log();
        assert_eq!(log.omega_eval(0.0).unwrap(), 0.0);
        assert!((log.omega_eval(E - 1.0).unwrap() - 1.0).abs() < 1e-15);
        let g2 = WeightFunction::gevrey(2.0).unwrap();
        assert_eq!(g2.omega_eval(4.0).unwrap(), 2.0);
        assert!(log.omega_eval(-1.0).is_err());
        assert!(log.omega_eval(f64::NAN).is_err());
    }

    #[test]
    fn young_examples() {
        let g1 = WeightFunction { kind: WeightKind::Gevrey(1.0) };
        assert_eq!(g1.young_conjugate(0.0).unwrap(), -1.0);
        assert!(g1.young_conjugate(E).unwrap().abs() < 1e-15);
        assert!(g1.young_conjugate_numeric(E).unwrap().abs() < 1e-9);
        assert!(g1.young_conjugate(f64::INFINITY).is_err());
    }

    // closed form of φ* for log(1 + e^t)
    fn log_conjugate(s: f64) -> f64 {
        if s <= 0.5 {
            -(2f64.ln())
        } else if s < 1.0 {
            s * s.ln() + (1.0 - s) * (1.0 - s).ln()
        } else if s == 1.0 {
            0.0
        } else {
            f64::INFINITY
        }
    }

    #[test]
    fn log_conjugate_matches_closed_form() {
        let w = WeightFunction::<f64>::log();
        for k in 0..=40 {
            let s = k as f64 / 40.0 * 1.2;
            let got = w.young_conjugate(s).unwrap();
            let want = log_conjugate(s);
            if want.is_infinite() {
                assert!(got.is_infinite(), "s={s} got {got}");
            } else {
                assert!((got - want).abs() < 1e-9, "s={s} got {got} want {want}");
            }
        }
        assert!(w.young_conjugate(2.0).unwrap().is_infinite());
    }

    #[test]
    fn gevrey_closed_form_vs_golden() {
        for &s0 in &[1.5, 2.0, 3.0] {
            let w = WeightFunction::gevrey(s0).unwrap();
            for k in 0..50 {
                let y = 0.05 + k as f64 * 0.7;
                let a = w.young_conjugate(y).unwrap();
                let b = w.young_conjugate_numeric(y).unwrap();
                assert!((a - b).abs() <= 1e-8 * a.abs().max(1.0), "s0={s0} y={y}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn condition_reports() {
        let grid = WeightGrid { t_max: 50.0, points: 120 };
        let log = WeightFunction::<f64>::log().check_conditions(&grid).unwrap();
        assert!(log.all_ok(), "{log:?}");
        // ∫₁^∞ log(1+t)/t² dt = 2 log 2
        assert!((log.integral_beta_estimate - 2.0 * 2f64.ln()).abs() < 1e-6, "{}", log.integral_beta_estimate);
        assert!((log.gamma_fit.1 - 1.0).abs() < 1e-12);

        let g2 = WeightFunction::gevrey(2.0).unwrap().check_conditions(&grid).unwrap();
        assert!(g2.all_ok(), "{g2:?}");
        // ∫₁^∞ t^{-3/2} dt = 2
        assert!((g2.integral_beta_estimate - 2.0).abs() < 1e-6);

        let lin = Tabulated::new(vec![0.0, 1.0, 2.0], vec![0.0, 1.0, 2.0]).unwrap();
        let r = WeightFunction::custom(lin).check_conditions(&grid).unwrap();
        assert!(!r.beta_ok);
        assert!(r.integral_beta_estimate.is_infinite());
    }

    #[test]
    fn tabulated_interpolation_and_csv() {
        let tab = Tabulated::<f64>::from_csv_str("t,omega\n0,0\n1,0.5\n3,1.5\n").unwrap();
        let w = WeightFunction::custom(tab);
        assert_eq!(w.omega(2.0), 1.0);
        assert!((w.omega(6.0) - 3.0).abs() < 1e-12);
        assert!(Tabulated::<f64>::from_csv_str("x,y\n0,0\n1,1\n").is_err());
    }

    #[test]
    fn spec_strings() {
        assert_eq!(WeightFunction::<f64>::from_spec("log").unwrap().label(), "log");
        assert_eq!(WeightFunction::<f64>::from_spec("gevrey:2").unwrap().label(), "gevrey:2");
        assert!(WeightFunction::<f64>::from_spec("gevrey:0.5").is_err());
        assert!(WeightFunction::<f64>::from_spec("banana").is_err());
    }

    #[test]
    fn works_in_single_precision() {
        let w = WeightFunction::<f32>::gevrey(2.0).unwrap();
        assert_eq!(w.omega(9.0), 3.0);
        let v = w.young_conjugate_numeric(2.0).unwrap();
        assert!((v - (4.0f32 * 4f32.ln() - 4.0)).abs() < 1e-4);
    }
}
