//! Painless nonstationary Gabor systems on the time side
//! (g_{m,n}(t) = e^{iβ_n m t} g(t − αn)) and on the frequency side
//! (h_{m,n}(t) = h_m(t − α_m n), h_m = M_{βm}h).

pub mod combinatorics;
pub mod multiplier;

use std::collections::BTreeMap;

use num_complex::Complex;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gabor::{nodes_in_disc, AtomSource, CoefficientEntry, CoefficientGrid, Node, PairingFamily, TruncationReport};
use crate::scalar::Real;
use crate::signals::{fourier, inverse_fourier, Atom, CoefficientOracle, GridSpec, SampledSignal, Spectrum, Window};

pub use combinatorics::{composition_count, CompositionCount};
pub use multiplier::{multiplier_bound_check, reciprocal_derivatives_direct, reciprocal_derivatives_faa};

/// Per-index modulation steps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Steps<T> {
    Const { value: T },
    /// base·(1 + amp·sin n)
    Sine { base: T, amp: T },
    Table { values: BTreeMap<i64, T> },
}

impl<T: Real> Steps<T> {
    pub fn constant(value: T) -> Self {
        Steps::Const { value }
    }

    pub fn sine(base: T, amp: T) -> Self {
        Steps::Sine { base, amp }
    }

    /// Parses `const:<v>`, `sine:<base>,<amp>` or `csv:<path>` (header `n,value`).
    pub fn from_spec(spec: &str) -> Result<Self> {
        let spec = spec.trim();
        let (head, rest) = spec.split_once(':').ok_or_else(|| Error::Config(format!("unknown steps `{spec}`")))?;
        let num = |s: &str| s.trim().parse::<T>().map_err(|_| Error::Config(format!("bad number in steps `{spec}`")));
        match head {
            "const" => Ok(Steps::Const { value: num(rest)? }),
            "sine" => {
                let (b, a) = rest.split_once(',').ok_or_else(|| Error::Config(format!("`{spec}` needs base,amp")))?;
                Ok(Steps::Sine { base: num(b)?, amp: num(a)? })
            }
            "csv" => {
                let text = std::fs::read_to_string(rest.trim())
                    .map_err(|e| Error::Config(format!("cannot read steps file `{}`: {e}", rest.trim())))?;
                Self::from_csv_str(&text)
            }
            _ => Err(Error::Config(format!("unknown steps `{spec}`"))),
        }
    }

    pub fn from_csv_str(text: &str) -> Result<Self> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        if lines.next().map(str::trim) != Some("n,value") {
            return Err(Error::Parse("steps table must start with header `n,value`".into()));
        }
        let mut values = BTreeMap::new();
        for (i, line) in lines.enumerate() {
            let (a, b) = line.split_once(',').ok_or_else(|| Error::Parse(format!("line {}: expected `n,value`", i + 2)))?;
            let n = a.trim().parse::<i64>().map_err(|_| Error::Parse(format!("line {}: bad index", i + 2)))?;
            let v = b.trim().parse::<T>().map_err(|_| Error::Parse(format!("line {}: bad value", i + 2)))?;
            values.insert(n, v);
        }
        Ok(Steps::Table { values })
    }

    pub fn at(&self, n: i64) -> Result<T> {
        match self {
            Steps::Const { value } => Ok(*value),
            Steps::Sine { base, amp } => Ok(*base * (T::one() + *amp * T::from_int(n).sin())),
            Steps::Table { values } => {
                values.get(&n).copied().ok_or_else(|| Error::Range(format!("no step stored for index {n}")))
            }
        }
    }

    pub fn label(&self) -> String {
        match self {
            Steps::Const { value } => format!("const:{value}"),
            Steps::Sine { base, amp } => format!("sine:{base},{amp}"),
            Steps::Table { values } => format!("table({} entries)", values.len()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    Time,
    Freq,
}

/// Time side: compactly supported g, uniform shift α, steps β_n for |n| ≤ index_radius.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NSGSystemTime<T> {
    pub window: Window<T>,
    pub alpha: T,
    pub betas: Steps<T>,
    pub index_radius: i64,
}

/// Frequency side: band-limited h, uniform shift β, steps α_m for |m| ≤ index_radius.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NSGSystemFreq<T> {
    pub window: Window<T>,
    pub beta: T,
    pub alphas: Steps<T>,
    pub index_radius: i64,
}

fn check_setup<T: Real>(shift: T, steps: &Steps<T>, radius: i64) -> Result<()> {
    if !(shift > T::zero()) || !shift.is_finite() {
        return Err(Error::Domain(format!("shift must be positive, got {shift}")));
    }
    if radius < 1 {
        return Err(Error::Domain(format!("index radius must be >= 1, got {radius}")));
    }
    for n in -radius..=radius {
        let s = steps.at(n)?;
        if !(s > T::zero()) || !s.is_finite() {
            return Err(Error::Domain(format!("step at index {n} must be positive, got {s}")));
        }
    }
    Ok(())
}

impl<T: Real> NSGSystemTime<T> {
    pub fn new(window: Window<T>, alpha: T, betas: Steps<T>, index_radius: i64) -> Result<Self> {
        if !matches!(window, Window::Bump { .. }) {
            return Err(Error::Domain(format!("time-side window must be compactly supported, got {}", window.label())));
        }
        check_setup(alpha, &betas, index_radius)?;
        Ok(Self { window, alpha, betas, index_radius })
    }

    pub fn beta(&self, n: i64) -> T {
        self.betas.at(n).expect("steps validated for the index range")
    }

    /// g_{m,n} as an analytic atom.
    pub fn atom(&self, m: i64, n: i64) -> Atom<T> {
        Atom::shifted(self.window, self.alpha * T::from_int(n), self.beta(n) * T::from_int(m))
    }

    pub fn symbol(&self) -> PainlessSymbol<T> {
        PainlessSymbol {
            side: Side::Time,
            window: self.window,
            shift: self.alpha,
            first: -self.index_radius,
            steps: (-self.index_radius..=self.index_radius).map(|n| self.beta(n)).collect(),
            factor: T::TAU(),
        }
    }
}

impl<T: Real> NSGSystemFreq<T> {
    pub fn new(window: Window<T>, beta: T, alphas: Steps<T>, index_radius: i64) -> Result<Self> {
        if !matches!(window, Window::SpectralBump { .. }) {
            return Err(Error::Domain(format!("frequency-side window must be band-limited, got {}", window.label())));
        }
        check_setup(beta, &alphas, index_radius)?;
        Ok(Self { window, beta, alphas, index_radius })
    }

    pub fn alpha(&self, m: i64) -> T {
        self.alphas.at(m).expect("steps validated for the index range")
    }

    /// h_{m,n} = e^{−iβα_m mn} Π(α_m n, βm)h
    pub fn atom(&self, m: i64, n: i64) -> Atom<T> {
        let am = self.alpha(m);
        let (mf, nf) = (T::from_int(m), T::from_int(n));
        Atom {
            window: self.window,
            x: am * nf,
            xi: self.beta * mf,
            coeff: Complex::from_polar(T::one(), -self.beta * am * mf * nf),
        }
    }

    pub fn symbol(&self) -> PainlessSymbol<T> {
        PainlessSymbol {
            side: Side::Freq,
            window: self.window,
            shift: self.beta,
            first: -self.index_radius,
            steps: (-self.index_radius..=self.index_radius).map(|m| self.alpha(m)).collect(),
            factor: T::one(),
        }
    }
}

/// Σ_r (factor/s_r)·p(u − shift·r)² where p is g (time) or ĥ (frequency).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PainlessSymbol<T> {
    pub side: Side,
    pub window: Window<T>,
    pub shift: T,
    pub first: i64,
    pub steps: Vec<T>,
    pub factor: T,
}

impl<T: Real> PainlessSymbol<T> {
    pub fn profile(&self, u: T) -> T {
        match self.side {
            Side::Time => self.window.eval(u),
            Side::Freq => self.window.eval_hat(u),
        }
    }

    pub fn half_width(&self) -> T {
        match self.side {
            Side::Time => self.window.time_radius(),
            Side::Freq => self.window.freq_radius(),
        }
    }

    pub fn last(&self) -> i64 {
        self.first + self.steps.len() as i64 - 1
    }

    pub fn step(&self, r: i64) -> T {
        self.steps[(r - self.first) as usize]
    }

    pub fn center(&self, r: i64) -> T {
        self.shift * T::from_int(r)
    }

    fn overlapping(&self, u: T) -> std::ops::RangeInclusive<i64> {
        let l = self.half_width();
        let lo = ((u - l) / self.shift).ceil().to_i64().unwrap_or(i64::MIN).max(self.first);
        let hi = ((u + l) / self.shift).floor().to_i64().unwrap_or(i64::MAX).min(self.last());
        lo..=hi
    }

    /// G(t) on the time side, H(ξ) on the frequency side; rows summed in increasing order.
    pub fn eval(&self, u: T) -> T {
        let mut acc = T::zero();
        for r in self.overlapping(u) {
            let p = self.profile(u - self.center(r));
            acc += self.factor / self.step(r) * p * p;
        }
        acc
    }

    /// Region where every contributing row is stored.
    pub fn interior(&self) -> (T, T) {
        let l = self.half_width();
        (self.center(self.first) + l, self.center(self.last()) - l)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FrameStatus {
    Frame,
    NotAFrame,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SymbolTable<T> {
    pub start: T,
    pub step: T,
    pub values: Vec<T>,
}

/// Sampled inf/sup of the diagonal symbol over the interior region.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PainlessCertificate<T> {
    #[serde(rename = "A")]
    pub a: T,
    #[serde(rename = "B")]
    pub b: T,
    pub status: FrameStatus,
    /// factor·sup|p|²/B; every stored step exceeds it
    pub step_lower_bound: T,
    pub table: SymbolTable<T>,
    pub symbol: PainlessSymbol<T>,
}

impl<T: Real> PainlessCertificate<T> {
    pub fn is_frame(&self) -> bool {
        self.status == FrameStatus::Frame
    }

    fn require_frame(&self) -> Result<()> {
        if !self.is_frame() {
            return Err(Error::Refused(format!("not a frame (A = {}); the inverse symbol is undefined", self.a)));
        }
        Ok(())
    }
}

/// Samples per shift used for the symbol table.
const TABLE_DENSITY: usize = 512;

fn painless_check<T: Real>(symbol: PainlessSymbol<T>) -> Result<PainlessCertificate<T>> {
    let width = symbol.half_width() * T::lit(2.0);
    for r in symbol.first..=symbol.last() {
        let s = symbol.step(r);
        if s.recip() < width {
            return Err(Error::Refused(format!(
                "painless condition 1/step >= {width} violated at index {r}: 1/{s} = {}",
                s.recip()
            )));
        }
    }
    let (lo, hi) = symbol.interior();
    if !(hi > lo) {
        return Err(Error::Domain(format!("index radius too small: interior region [{lo}, {hi}] is empty")));
    }
    let step = symbol.shift / T::from_usize(TABLE_DENSITY).unwrap();
    let count = ((hi - lo) / step).floor().to_usize().unwrap_or(0) + 1;
    let values: Vec<T> = (0..count).into_par_iter().map(|i| symbol.eval(lo + step * T::from_usize(i).unwrap())).collect();
    let a = values.iter().copied().fold(T::infinity(), T::min);
    let b = values.iter().copied().fold(T::zero(), T::max);
    let status = if a < T::lit(1e-10) { FrameStatus::NotAFrame } else { FrameStatus::Frame };
    let peak = symbol.profile(T::zero());
    let step_lower_bound = if b > T::zero() { symbol.factor * peak * peak / b } else { T::infinity() };
    Ok(PainlessCertificate { a, b, status, step_lower_bound, table: SymbolTable { start: lo, step, values }, symbol })
}

/// Checks 1/β_n ≥ |supp g| and samples G(t) = Σ_n (2π/β_n)|g(t − αn)|².
pub fn painless_check_time<T: Real>(sys: &NSGSystemTime<T>) -> Result<PainlessCertificate<T>> {
    painless_check(sys.symbol())
}

/// Checks 1/α_m ≥ |supp ĥ| and samples H(ξ) = Σ_m (1/α_m)|ĥ(ξ − βm)|².
pub fn painless_check_freq<T: Real>(sys: &NSGSystemFreq<T>) -> Result<PainlessCertificate<T>> {
    painless_check(sys.symbol())
}

/// S f: multiplication by G on the time side, by H on the Fourier side.
pub fn diagonal_frame_operator<T: Real>(cert: &PainlessCertificate<T>, f: &SampledSignal<T>) -> Result<SampledSignal<T>> {
    let sym = &cert.symbol;
    match sym.side {
        Side::Time => {
            let values = f.values.iter().enumerate().map(|(j, v)| *v * sym.eval(f.grid.t(j))).collect();
            SampledSignal::new(f.grid, values)
        }
        Side::Freq => {
            let mut spec = fourier(f)?;
            for (k, v) in spec.values.iter_mut().enumerate() {
                *v *= sym.eval(spec.grid.xi(k));
            }
            inverse_fourier(&spec)
        }
    }
}

/// One row of the discretized system: profile samples on a contiguous index block of the domain grid.
struct Row<T> {
    r: i64,
    start: usize,
    profile: Vec<T>,
    step: T,
    k_max: i64,
}

/// Rows of a painless system on the sample grid of its side (t_j or ξ_k).
struct RowSet<T> {
    side: Side,
    grid: GridSpec<T>,
    rows: Vec<Row<T>>,
}

impl<T: Real> RowSet<T> {
    /// Rows fully inside the sampled domain, modulation indices |s_r k| ≤ extent.
    fn build(sym: &PainlessSymbol<T>, grid: GridSpec<T>, extent: T) -> Result<Self> {
        let (coord, lim, nyquist) = match sym.side {
            Side::Time => (grid.t(0), grid.half_width, T::PI() / grid.step()),
            Side::Freq => (grid.xi(0), grid.xi_max(), grid.half_width),
        };
        let l = sym.half_width();
        let mut rows = Vec::new();
        for r in sym.first..=sym.last() {
            let c = sym.center(r);
            if c - l < coord || c + l > lim {
                continue;
            }
            let s = sym.step(r);
            let k_max = (extent / s).floor().to_i64().unwrap_or(0);
            if s * T::from_int(k_max) > nyquist {
                return Err(Error::Refused(format!(
                    "modulation extent {} at index {r} exceeds the sampling limit {nyquist}",
                    s * T::from_int(k_max)
                )));
            }
            let range = match sym.side {
                Side::Time => grid.index_range(c - l, c + l),
                Side::Freq => grid.dual_index_range(c - l, c + l),
            };
            let profile = range.clone().map(|j| sym.profile(self::coord(sym.side, grid, j) - c)).collect();
            rows.push(Row { r, start: range.start, profile, step: s, k_max });
        }
        if rows.is_empty() {
            return Err(Error::Domain("no row of the system fits inside the sampled domain".into()));
        }
        Ok(Self { side: sym.side, grid, rows })
    }

    fn coord(&self, j: usize) -> T {
        coord(self.side, self.grid, j)
    }

    /// e^{sign·i·s·u}: analysis uses e^{−iβ_n m t} on the time side and e^{+iα_m n ξ} on the Fourier side.
    fn sign(&self) -> T {
        match self.side {
            Side::Time => -T::one(),
            Side::Freq => T::one(),
        }
    }

    fn weight(&self) -> T {
        match self.side {
            Side::Time => self.grid.step(),
            Side::Freq => self.grid.dual_step() / T::TAU(),
        }
    }

    /// c_{r,k} = weight·Σ_j data_j p_r(u_j) e^{sign·i s_r k u_j}, k = −k_max..=k_max.
    fn analyze(&self, data: &[Complex<T>]) -> Vec<Vec<Complex<T>>> {
        let sign = self.sign();
        let wt = self.weight();
        self.rows
            .par_iter()
            .map(|row| {
                let len = row.profile.len();
                let us: Vec<T> = (0..len).map(|i| self.coord(row.start + i)).collect();
                let fw: Vec<Complex<T>> = (0..len).map(|i| data[row.start + i] * row.profile[i]).collect();
                let rot: Vec<Complex<T>> = us.iter().map(|&u| Complex::from_polar(T::one(), sign * row.step * u)).collect();
                let k0 = -row.k_max;
                let mut z: Vec<Complex<T>> =
                    us.iter().map(|&u| Complex::from_polar(T::one(), sign * row.step * T::from_int(k0) * u)).collect();
                let mut out = Vec::with_capacity((2 * row.k_max + 1) as usize);
                for k in k0..=row.k_max {
                    let mut acc = Complex::new(T::zero(), T::zero());
                    for (a, b) in fw.iter().zip(&z) {
                        acc += *a * *b;
                    }
                    out.push(acc * wt);
                    if (k - k0) % 128 == 127 {
                        let kn = T::from_int(k + 1);
                        for (zi, &u) in z.iter_mut().zip(&us) {
                            *zi = Complex::from_polar(T::one(), sign * row.step * kn * u);
                        }
                    } else {
                        for (zi, ri) in z.iter_mut().zip(&rot) {
                            *zi *= *ri;
                        }
                    }
                }
                out
            })
            .collect()
    }

    /// out_j += Σ_r q_r(u_j) Σ_k c_{r,k} e^{−sign·i s_r k u_j}, q_r = p_r or p_r/symbol.
    /// Dual profiles vanish outside the interior region, where the stored rows no longer cover.
    fn synthesize(&self, coeffs: &BTreeMap<i64, BTreeMap<i64, Complex<T>>>, divide: Option<&PainlessSymbol<T>>) -> Vec<Complex<T>> {
        let sign = self.sign();
        let n = self.grid.n;
        let parts: Vec<(usize, Vec<Complex<T>>)> = self
            .rows
            .par_iter()
            .filter_map(|row| {
                let cs = coeffs.get(&row.r)?;
                let (k_lo, k_hi) = (*cs.keys().next()?, *cs.keys().next_back()?);
                let dense: Vec<Complex<T>> =
                    (k_lo..=k_hi).map(|k| cs.get(&k).copied().unwrap_or_else(|| Complex::new(T::zero(), T::zero()))).collect();
                let vals = (0..row.profile.len())
                    .map(|i| {
                        let u = self.coord(row.start + i);
                        let z = Complex::from_polar(T::one(), -sign * row.step * u);
                        let mut acc = Complex::new(T::zero(), T::zero());
                        for c in dense.iter().rev() {
                            acc = acc * z + *c;
                        }
                        let lead = Complex::from_polar(T::one(), -sign * row.step * T::from_int(k_lo) * u);
                        let mut q = row.profile[i];
                        if let Some(sym) = divide {
                            let (lo, hi) = sym.interior();
                            let g = sym.eval(u);
                            q = if q == T::zero() || g == T::zero() || u < lo || u > hi { T::zero() } else { q / g };
                        }
                        acc * lead * q
                    })
                    .collect();
                Some((row.start, vals))
            })
            .collect();
        let mut out = vec![Complex::new(T::zero(), T::zero()); n];
        for (start, vals) in parts {
            for (i, v) in vals.into_iter().enumerate() {
                out[start + i] += v;
            }
        }
        out
    }

    /// (m, n) labelling and phase-space node of row r, modulation index k.
    fn entry(&self, sym: &PainlessSymbol<T>, row: &Row<T>, k: i64, value: Complex<T>) -> CoefficientEntry<T> {
        let (a, b) = (sym.center(row.r), row.step * T::from_int(k));
        match self.side {
            Side::Time => CoefficientEntry { m: k, n: row.r, x: a, xi: b, value },
            Side::Freq => CoefficientEntry { m: row.r, n: k, x: b, xi: a, value },
        }
    }
}

fn coord<T: Real>(side: Side, grid: GridSpec<T>, j: usize) -> T {
    match side {
        Side::Time => grid.t(j),
        Side::Freq => grid.xi(j),
    }
}

fn side_data<T: Real>(side: Side, f: &SampledSignal<T>) -> Result<Vec<Complex<T>>> {
    Ok(match side {
        Side::Time => f.values.clone(),
        Side::Freq => fourier(f)?.values,
    })
}

fn from_side<T: Real>(side: Side, grid: GridSpec<T>, values: Vec<Complex<T>>) -> Result<SampledSignal<T>> {
    match side {
        Side::Time => SampledSignal::new(grid, values),
        Side::Freq => inverse_fourier(&Spectrum { grid, values }),
    }
}

fn row_key<T>(side: Side, e: &CoefficientEntry<T>) -> (i64, i64) {
    match side {
        Side::Time => (e.n, e.m),
        Side::Freq => (e.m, e.n),
    }
}

fn group<T: Real>(side: Side, coeffs: &CoefficientGrid<T>) -> BTreeMap<i64, BTreeMap<i64, Complex<T>>> {
    let mut g: BTreeMap<i64, BTreeMap<i64, Complex<T>>> = BTreeMap::new();
    for e in &coeffs.entries {
        let (r, k) = row_key(side, e);
        g.entry(r).or_default().insert(k, e.value);
    }
    g
}

/// Modulation extent of an expansion: |β_n m| ≤ extent on the time side, |α_m n| ≤ extent on the Fourier side.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Truncation<T> {
    pub extent: T,
    /// boundary coefficients must stay below tol·max|c|
    pub tol: T,
}

impl<T: Real> Truncation<T> {
    pub fn new(extent: T) -> Self {
        Self { extent, tol: T::lit(1e-12) }
    }
}

/// Coefficients of a sampled signal against every row that fits in the grid, with the
/// largest boundary coefficient relative to max|c|.
#[derive(Debug, Clone, PartialEq)]
pub struct Analysis<T> {
    pub coeffs: CoefficientGrid<T>,
    pub boundary_ratio: T,
}

pub fn analyze_sampled<T: Real>(sym: &PainlessSymbol<T>, f: &SampledSignal<T>, trunc: Truncation<T>) -> Result<Analysis<T>> {
    let rows = RowSet::build(sym, f.grid, trunc.extent)?;
    let data = side_data(sym.side, f)?;
    let values = rows.analyze(&data);
    let mut coeffs = CoefficientGrid::default();
    let mut peak = T::zero();
    let mut edge = T::zero();
    let (r_lo, r_hi) = (rows.rows[0].r, rows.rows[rows.rows.len() - 1].r);
    for (row, vals) in rows.rows.iter().zip(values) {
        for (i, v) in vals.into_iter().enumerate() {
            let k = i as i64 - row.k_max;
            let a = v.norm();
            peak = peak.max(a);
            if k.abs() == row.k_max || row.r == r_lo || row.r == r_hi {
                edge = edge.max(a);
            }
            coeffs.entries.push(rows.entry(sym, row, k, v));
        }
    }
    let boundary_ratio = if peak > T::zero() { edge / peak } else { T::zero() };
    Ok(Analysis { coeffs, boundary_ratio })
}

fn certified<T: Real>(an: &Analysis<T>, trunc: Truncation<T>) -> Result<()> {
    if an.boundary_ratio >= trunc.tol {
        return Err(Error::Refused(format!(
            "truncation not certified: largest boundary coefficient is {} of max|c| (limit {})",
            an.boundary_ratio, trunc.tol
        )));
    }
    Ok(())
}

/// Σ_{m,n} ⟨f, g_{m,n}⟩ g_{m,n} over a certified truncation.
pub fn frame_operator_via_expansion<T: Real>(
    sym: &PainlessSymbol<T>,
    f: &SampledSignal<T>,
    trunc: Truncation<T>,
) -> Result<SampledSignal<T>> {
    let an = analyze_sampled(sym, f, trunc)?;
    certified(&an, trunc)?;
    NsgAtoms { symbol: sym, grid: f.grid }.synthesize(&an.coeffs)
}

/// Primal atoms g_{m,n} (or h_{m,n}) on a grid.
pub struct NsgAtoms<'a, T> {
    pub symbol: &'a PainlessSymbol<T>,
    pub grid: GridSpec<T>,
}

/// Canonical duals S⁻¹g_{m,n} on a grid.
pub struct DualAtoms<'a, T> {
    pub cert: &'a PainlessCertificate<T>,
    pub grid: GridSpec<T>,
}

impl<'a, T: Real> DualAtoms<'a, T> {
    pub fn new(cert: &'a PainlessCertificate<T>, grid: GridSpec<T>) -> Result<Self> {
        cert.require_frame()?;
        Ok(Self { cert, grid })
    }
}

fn single_row<T: Real>(
    sym: &PainlessSymbol<T>,
    grid: GridSpec<T>,
    m: i64,
    n: i64,
    c: Complex<T>,
    divide: bool,
) -> Result<SampledSignal<T>> {
    let (r, k) = match sym.side {
        Side::Time => (n, m),
        Side::Freq => (m, n),
    };
    if r < sym.first || r > sym.last() {
        return Err(Error::Range(format!("index {r} outside the stored range [{}, {}]", sym.first, sym.last())));
    }
    let extent = sym.step(r) * T::from_int(k.abs());
    let rows = RowSet::build(sym, grid, extent)?;
    if !rows.rows.iter().any(|row| row.r == r) {
        return Err(Error::Range(format!("row {r} does not fit inside the grid")));
    }
    let mut map = BTreeMap::new();
    map.entry(r).or_insert_with(BTreeMap::new).insert(k, c);
    let vals = rows.synthesize(&map, divide.then_some(sym));
    from_side(sym.side, grid, vals)
}

impl<T: Real> AtomSource<T> for NsgAtoms<'_, T> {
    fn grid(&self) -> GridSpec<T> {
        self.grid
    }

    fn add_atom(&self, m: i64, n: i64, c: Complex<T>, out: &mut [Complex<T>]) -> Result<()> {
        let s = single_row(self.symbol, self.grid, m, n, c, false)?;
        out.iter_mut().zip(&s.values).for_each(|(o, v)| *o += v);
        Ok(())
    }

    fn synthesize(&self, coeffs: &CoefficientGrid<T>) -> Result<SampledSignal<T>> {
        synthesize_rows(self.symbol, self.grid, coeffs, false)
    }
}

impl<T: Real> AtomSource<T> for DualAtoms<'_, T> {
    fn grid(&self) -> GridSpec<T> {
        self.grid
    }

    fn add_atom(&self, m: i64, n: i64, c: Complex<T>, out: &mut [Complex<T>]) -> Result<()> {
        let s = single_row(&self.cert.symbol, self.grid, m, n, c, true)?;
        out.iter_mut().zip(&s.values).for_each(|(o, v)| *o += v);
        Ok(())
    }

    fn synthesize(&self, coeffs: &CoefficientGrid<T>) -> Result<SampledSignal<T>> {
        synthesize_rows(&self.cert.symbol, self.grid, coeffs, true)
    }
}

fn synthesize_rows<T: Real>(
    sym: &PainlessSymbol<T>,
    grid: GridSpec<T>,
    coeffs: &CoefficientGrid<T>,
    divide: bool,
) -> Result<SampledSignal<T>> {
    let grouped = group(sym.side, coeffs);
    let extent = grouped
        .iter()
        .filter(|(r, _)| **r >= sym.first && **r <= sym.last())
        .flat_map(|(r, ks)| ks.keys().map(move |k| sym.step(*r) * T::from_int(k.abs())))
        .fold(T::zero(), T::max);
    let rows = RowSet::build(sym, grid, extent)?;
    let known: std::collections::BTreeSet<i64> = rows.rows.iter().map(|r| r.r).collect();
    if let Some(r) = grouped.keys().find(|r| !known.contains(r)) {
        return Err(Error::Range(format!("coefficients for row {r}, which does not fit inside the grid")));
    }
    let vals = rows.synthesize(&grouped, divide.then_some(sym));
    from_side(sym.side, grid, vals)
}

/// g̃_{m,n}(t) = g_n(t)/G(t)·e^{iβ_n m t}
pub fn canonical_dual_time<T: Real>(
    sys: &NSGSystemTime<T>,
    cert: &PainlessCertificate<T>,
    m: i64,
    n: i64,
    grid: GridSpec<T>,
) -> Result<SampledSignal<T>> {
    cert.require_frame()?;
    if cert.symbol != sys.symbol() {
        return Err(Error::Shape("certificate belongs to a different system".into()));
    }
    single_row(&cert.symbol, grid, m, n, Complex::new(T::one(), T::zero()), true)
}

/// Inverse transform of e^{−iα_m nξ}ĥ(ξ − βm)/H(ξ).
pub fn canonical_dual_freq<T: Real>(
    sys: &NSGSystemFreq<T>,
    cert: &PainlessCertificate<T>,
    m: i64,
    n: i64,
    grid: GridSpec<T>,
) -> Result<SampledSignal<T>> {
    cert.require_frame()?;
    if cert.symbol != sys.symbol() {
        return Err(Error::Shape("certificate belongs to a different system".into()));
    }
    single_row(&cert.symbol, grid, m, n, Complex::new(T::one(), T::zero()), true)
}

/// Σ c_{m,n} g̃_{m,n}, with a warning when the coefficients were not certified.
pub fn reconstruct<T: Real, S: AtomSource<T> + ?Sized>(
    coeffs: &CoefficientGrid<T>,
    duals: &S,
    certified: bool,
) -> Result<(SampledSignal<T>, Option<String>)> {
    let out = duals.synthesize(coeffs)?;
    let warning = (!certified).then(|| "coefficient truncation was not certified".to_string());
    Ok((out, warning))
}

impl<T: Real> PairingFamily<T> for NSGSystemTime<T> {
    /// Nodes (αn, β_n m) with |n| ≤ index_radius.
    fn nodes(&self, radius: T) -> Vec<Node<T>> {
        let n_max = (radius / self.alpha).floor().to_i64().unwrap_or(0).min(self.index_radius);
        let b_min = (-n_max..=n_max).map(|n| self.beta(n)).fold(T::infinity(), T::min);
        let m_max = (radius / b_min).floor().to_i64().unwrap_or(0);
        nodes_in_disc(radius, m_max, n_max, |m, n| (self.alpha * T::from_int(n), self.beta(n) * T::from_int(m)))
    }

    fn pair(&self, oracle: &CoefficientOracle<T>, node: &Node<T>) -> Result<Complex<T>> {
        oracle.pair(&self.atom(node.m, node.n))
    }

    fn label(&self) -> String {
        format!("nsgt-time(alpha={}, betas={}, window={})", self.alpha, self.betas.label(), self.window.label())
    }
}

impl<T: Real> PairingFamily<T> for NSGSystemFreq<T> {
    /// Nodes (α_m n, βm) with |m| ≤ index_radius.
    fn nodes(&self, radius: T) -> Vec<Node<T>> {
        let m_max = (radius / self.beta).floor().to_i64().unwrap_or(0).min(self.index_radius);
        let a_min = (-m_max..=m_max).map(|m| self.alpha(m)).fold(T::infinity(), T::min);
        let n_max = (radius / a_min).floor().to_i64().unwrap_or(0);
        nodes_in_disc(radius, m_max, n_max, |m, n| (self.alpha(m) * T::from_int(n), self.beta * T::from_int(m)))
    }

    fn pair(&self, oracle: &CoefficientOracle<T>, node: &Node<T>) -> Result<Complex<T>> {
        oracle.pair(&self.atom(node.m, node.n))
    }

    fn label(&self) -> String {
        format!("nsgt-freq(beta={}, alphas={}, window={})", self.beta, self.alphas.label(), self.window.label())
    }
}

/// ⟨u, g_{m,n}⟩ = V_g u(αn, β_n m) for all nodes within `radius`.
pub fn nsg_coeffs<T: Real>(
    oracle: &CoefficientOracle<T>,
    sys: &NSGSystemTime<T>,
    radius: T,
) -> Result<(CoefficientGrid<T>, TruncationReport)> {
    if !(radius > T::zero()) {
        return Err(Error::Domain(format!("radius must be positive, got {radius}")));
    }
    crate::gabor::coefficients(oracle, sys, radius)
}
