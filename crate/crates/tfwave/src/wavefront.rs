//! Sector-wise decay classification of time-frequency coefficients: a numerical
//! stand-in for the Gabor ω-wave front set.

use serde::{Deserialize, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::gabor::{coefficients, CoefficientGrid, GaborSystem, Lattice, PairingFamily};
use crate::scalar::Real;
use crate::signals::{CoefficientOracle, Window};
use crate::weights::WeightFunction;

/// K half-open sectors [offset + 2πk/K, offset + 2π(k+1)/K).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConePartition<T> {
    pub k: usize,
    pub offset: T,
}

impl<T: Real> ConePartition<T> {
    pub fn new(k: usize, offset: T) -> Result<Self> {
        if k < 8 {
            return Err(Error::Domain(format!("need at least 8 sectors, got {k}")));
        }
        if !offset.is_finite() {
            return Err(Error::Domain("partition offset must be finite".into()));
        }
        Ok(Self { k, offset })
    }

    /// K sectors centred on the coordinate axes (offset −π/K).
    pub fn centered(k: usize) -> Result<Self> {
        Self::new(k, -T::PI() / T::from_usize(k).unwrap())
    }

    pub fn width(&self) -> T {
        T::TAU() / T::from_usize(self.k).unwrap()
    }

    pub fn bounds(&self, s: usize) -> (T, T) {
        let lo = self.offset + self.width() * T::from_usize(s).unwrap();
        (lo, lo + self.width())
    }

    /// Sector of a nonzero point; None at the origin.
    pub fn sector(&self, x: T, xi: T) -> Option<usize> {
        if x == T::zero() && xi == T::zero() {
            return None;
        }
        let mut theta = (xi.atan2(x) - self.offset) % T::TAU();
        if theta < T::zero() {
            theta += T::TAU();
        }
        let s = (theta / self.width()).floor().to_usize().unwrap_or(0);
        Some(s.min(self.k - 1))
    }

    /// Sector containing the direction (x, ξ).
    pub fn sector_of_direction(&self, x: T, xi: T) -> usize {
        self.sector(x, xi).expect("nonzero direction")
    }
}

/// Geometric shells [r0ρ^j, r0ρ^{j+1}), j = 0..J.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShellSpec<T> {
    pub r0: T,
    pub rho: T,
    pub j: usize,
}

impl<T: Real> ShellSpec<T> {
    pub fn new(r0: T, rho: T, j: usize) -> Result<Self> {
        if !(r0 > T::zero()) || !(rho > T::one()) || j < 6 {
            return Err(Error::Domain(format!("shells need r0 > 0, rho > 1, J >= 6; got ({r0}, {rho}, {j})")));
        }
        Ok(Self { r0, rho, j })
    }

    pub fn edge(&self, j: usize) -> T {
        self.r0 * self.rho.powi(j as i32)
    }

    pub fn mid(&self, j: usize) -> T {
        self.r0 * self.rho.powf(T::from_usize(j).unwrap() + T::lit(0.5))
    }

    pub fn r_max(&self) -> T {
        self.edge(self.j)
    }

    pub fn shell(&self, r: T) -> Option<usize> {
        if r < self.r0 || r >= self.r_max() {
            return None;
        }
        let j = ((r / self.r0).ln() / self.rho.ln()).floor().to_usize().unwrap_or(0).min(self.j - 1);
        // guard against rounding at the shell edges
        if r < self.edge(j) {
            Some(j.saturating_sub(1))
        } else if r >= self.edge(j + 1) {
            Some((j + 1).min(self.j - 1))
        } else {
            Some(j)
        }
    }
}

/// M[k][j] = max |c_σ| over nodes of sector k in shell j; None for empty cells.
pub fn shell_maxima<T: Real>(coeffs: &CoefficientGrid<T>, part: &ConePartition<T>, shells: &ShellSpec<T>) -> Vec<Vec<Option<T>>> {
    let mut m = vec![vec![None; shells.j]; part.k];
    for e in &coeffs.entries {
        let (Some(s), Some(j)) = (part.sector(e.x, e.xi), shells.shell(e.x.hypot(e.xi))) else {
            continue;
        };
        let a = e.value.norm();
        let cell: &mut Option<T> = &mut m[s][j];
        *cell = Some(cell.map_or(a, |v: T| v.max(a)));
    }
    m
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecayFit<T> {
    /// None when fewer than two shells carry information
    pub lambda_hat: Option<T>,
    /// retained shells plus shells censored by the noise floor
    pub shells_used: usize,
}

/// Retained shells used in the least-squares tail fit.
const TAIL: usize = 5;

/// Fits log M(r_j) ≈ a − λ ω(r_mid,j) over the last retained shells; shells that fell below
/// the floor give the censored lower bound (ln M_last − ln floor)/(ω(r_c) − ω(r_last)).
pub fn decay_rate_fit<T: Real>(row: &[Option<T>], w: &WeightFunction<T>, shells: &ShellSpec<T>, floor: T) -> Result<DecayFit<T>> {
    if !(floor > T::zero()) {
        return Err(Error::Domain(format!("noise floor must be positive, got {floor}")));
    }
    let present: Vec<(usize, T)> = row.iter().enumerate().filter_map(|(j, v)| v.map(|v| (j, v))).collect();
    let retained: Vec<(usize, T)> = present.iter().copied().filter(|&(_, v)| v > floor).collect();
    let last = retained.last().map(|&(j, _)| j);
    let censored: Vec<usize> =
        present.iter().filter(|&&(j, v)| v <= floor && last.is_none_or(|l| j > l)).map(|&(j, _)| j).collect();
    let shells_used = retained.len() + censored.len();
    if retained.is_empty() {
        let lambda_hat = (!censored.is_empty()).then(T::infinity);
        return Ok(DecayFit { lambda_hat, shells_used });
    }
    let tail = &retained[retained.len().saturating_sub(TAIL)..];
    let ls = (tail.len() >= 2).then(|| {
        let pts: Vec<(T, T)> = tail.iter().map(|&(j, v)| (-w.omega(shells.mid(j)), v.ln())).collect();
        let n = T::from_usize(pts.len()).unwrap();
        let mx = pts.iter().map(|p| p.0).sum::<T>() / n;
        let my = pts.iter().map(|p| p.1).sum::<T>() / n;
        let sxy: T = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        let sxx: T = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
        sxy / sxx
    });
    let bound = censored.first().map(|&c| {
        let (jl, ml) = *retained.last().unwrap();
        (ml.ln() - floor.ln()) / (w.omega(shells.mid(c)) - w.omega(shells.mid(jl)))
    });
    let lambda_hat = match (ls, bound) {
        (Some(a), Some(b)) => Some(a.max(b)),
        (a, b) => a.or(b),
    };
    Ok(DecayFit { lambda_hat, shells_used })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Status {
    Regular,
    Singular,
    Indeterminate,
}

fn ser_real<S: Serializer, T: Real>(v: &Option<T>, s: S) -> std::result::Result<S::Ok, S::Error> {
    match v {
        None => s.serialize_none(),
        Some(x) if x.is_finite() => s.serialize_f64(x.as_f64()),
        Some(x) if *x > T::zero() => s.serialize_str("inf"),
        Some(_) => s.serialize_str("-inf"),
    }
}

fn de_real<'de, D: serde::Deserializer<'de>, T: Real>(d: D) -> std::result::Result<Option<T>, D::Error> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Raw {
        Num(f64),
        Text(String),
    }
    Ok(match Option::<Raw>::deserialize(d)? {
        None => None,
        Some(Raw::Num(v)) => Some(T::lit(v)),
        Some(Raw::Text(t)) if t == "inf" => Some(T::infinity()),
        Some(Raw::Text(t)) if t == "-inf" => Some(T::neg_infinity()),
        Some(Raw::Text(t)) => return Err(serde::de::Error::custom(format!("bad rate `{t}`"))),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", bound = "")]
pub struct SectorReport<T: Real> {
    pub k: usize,
    pub angle_lo: T,
    pub angle_hi: T,
    #[serde(serialize_with = "ser_real", deserialize_with = "de_real")]
    pub lambda_hat: Option<T>,
    pub status: Status,
    pub shells_used: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct WavefrontReport<T: Real> {
    pub weight: String,
    #[serde(rename = "K")]
    pub k: usize,
    pub offset: T,
    pub r0: T,
    pub rho: T,
    #[serde(rename = "J")]
    pub j: usize,
    #[serde(rename = "lambdaReg")]
    pub lambda_reg: T,
    /// absolute noise floor used in the fits
    pub floor: T,
    pub family: String,
    pub sectors: Vec<SectorReport<T>>,
}

impl<T: Real> WavefrontReport<T> {
    pub fn with_status(&self, status: Status) -> Vec<usize> {
        self.sectors.iter().filter(|s| s.status == status).map(|s| s.k).collect()
    }

    pub fn singular(&self) -> Vec<usize> {
        self.with_status(Status::Singular)
    }

    pub fn indeterminate(&self) -> Vec<usize> {
        self.with_status(Status::Indeterminate)
    }
}

/// Classification parameters; `floor_rel` scales max|c| into the absolute noise floor.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WavefrontParams<T> {
    pub partition: ConePartition<T>,
    pub shells: ShellSpec<T>,
    pub lambda_reg: T,
    pub floor_rel: T,
}

impl<T: Real> WavefrontParams<T> {
    /// K = 16 centred sectors, shells (2, 1.3, 10), λ_reg = 4, floor 1e-13·max|c|.
    pub fn standard() -> Self {
        Self {
            partition: ConePartition::centered(16).expect("16 sectors"),
            shells: ShellSpec::new(T::lit(2.0), T::lit(1.3), 10).expect("valid shells"),
            lambda_reg: T::lit(4.0),
            floor_rel: T::lit(1e-13),
        }
    }
}

/// Minimum shells for a decision.
const MIN_SHELLS: usize = 4;

/// Classifies every sector of a precomputed coefficient grid.
pub fn classify<T: Real>(coeffs: &CoefficientGrid<T>, w: &WeightFunction<T>, p: &WavefrontParams<T>, family: &str) -> Result<WavefrontReport<T>> {
    let floor = (p.floor_rel * coeffs.max_abs()).max(T::min_positive_value());
    let m = shell_maxima(coeffs, &p.partition, &p.shells);
    let mut sectors = Vec::with_capacity(p.partition.k);
    for (k, row) in m.iter().enumerate() {
        let (angle_lo, angle_hi) = p.partition.bounds(k);
        let fit = decay_rate_fit(row, w, &p.shells, floor)?;
        let mut note = None;
        let status = if row.iter().all(Option::is_none) {
            note = Some("coverage gap: no nodes in any shell of this sector".to_string());
            Status::Indeterminate
        } else if fit.shells_used < MIN_SHELLS || fit.lambda_hat.is_none() {
            Status::Indeterminate
        } else if fit.lambda_hat.unwrap() >= p.lambda_reg {
            Status::Regular
        } else {
            Status::Singular
        };
        sectors.push(SectorReport { k, angle_lo, angle_hi, lambda_hat: fit.lambda_hat, status, shells_used: fit.shells_used, note });
    }
    Ok(WavefrontReport {
        weight: w.label(),
        k: p.partition.k,
        offset: p.partition.offset,
        r0: p.shells.r0,
        rho: p.shells.rho,
        j: p.shells.j,
        lambda_reg: p.lambda_reg,
        floor,
        family: family.to_string(),
        sectors,
    })
}

/// Computes pairings of `family` out to the outer shell and classifies them.
pub fn wavefront_report<T: Real, F: PairingFamily<T> + ?Sized>(
    oracle: &CoefficientOracle<T>,
    family: &F,
    w: &WeightFunction<T>,
    p: &WavefrontParams<T>,
) -> Result<WavefrontReport<T>> {
    let (coeffs, trunc) = coefficients(oracle, family, p.shells.r_max())?;
    let mut report = classify(&coeffs, w, p, &family.label())?;
    if trunc.omitted > 0 {
        for s in &mut report.sectors {
            let add = format!("{} nodes omitted by the oracle", trunc.omitted);
            s.note = Some(s.note.take().map_or(add.clone(), |n| format!("{n}; {add}")));
        }
    }
    Ok(report)
}

/// Same pipeline on a dense square grid of STFT samples with spacing `step`.
pub fn wavefront_stft<T: Real>(
    oracle: &CoefficientOracle<T>,
    window: Window<T>,
    step: T,
    w: &WeightFunction<T>,
    p: &WavefrontParams<T>,
) -> Result<WavefrontReport<T>> {
    if !(step > T::zero()) {
        return Err(Error::Domain(format!("dense step must be positive, got {step}")));
    }
    let radius = (p.shells.r_max() / step).ceil().to_i64().unwrap_or(0);
    let dense = GaborSystem::new(window, Lattice::new(step, step, radius)?);
    let mut r = wavefront_report(oracle, &dense, w, p)?;
    r.family = format!("dense stft(step={step}, window={})", window.label());
    Ok(r)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SupSumRow<T> {
    pub lambda: T,
    pub truncation: T,
    pub sup: T,
    pub sum: T,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SupSumVerdict<T> {
    pub lambda: T,
    pub sup_growing: bool,
    pub sum_growing: bool,
}

impl<T> SupSumVerdict<T> {
    pub fn agree(&self) -> bool {
        self.sup_growing == self.sum_growing
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SupSumTable<T> {
    pub sector: usize,
    pub rows: Vec<SupSumRow<T>>,
    pub verdicts: Vec<SupSumVerdict<T>>,
}

/// Relative increase between the last two truncations that counts as growth.
const GROWTH: f64 = 1.01;

/// sup e^{λω}|c| and Σ e^{λω}|c|² over in-sector nodes within each truncation radius.
pub fn sup_sum_equivalence<T: Real>(
    coeffs: &CoefficientGrid<T>,
    part: &ConePartition<T>,
    sector: usize,
    w: &WeightFunction<T>,
    lambdas: &[T],
    truncations: &[T],
) -> Result<SupSumTable<T>> {
    if sector >= part.k {
        return Err(Error::Domain(format!("sector {sector} out of range 0..{}", part.k)));
    }
    if lambdas.iter().any(|l| !(*l > T::zero())) {
        return Err(Error::Domain("lambda values must be positive".into()));
    }
    if truncations.len() < 2 || truncations.windows(2).any(|p| !(p[1] > p[0])) {
        return Err(Error::Domain("need at least two increasing truncation radii".into()));
    }
    let nodes: Vec<(T, T)> = coeffs
        .entries
        .iter()
        .filter(|e| part.sector(e.x, e.xi) == Some(sector))
        .map(|e| (e.x.hypot(e.xi), e.value.norm()))
        .collect();
    let mut rows = Vec::new();
    let mut verdicts = Vec::new();
    for &lambda in lambdas {
        let mut stats = Vec::new();
        for &r in truncations {
            let (mut sup, mut sum) = (T::zero(), T::zero());
            for &(rad, a) in nodes.iter().filter(|n| n.0 <= r) {
                let e = (lambda * w.omega(rad)).exp();
                let (s1, s2) = (e * a, e * a * a);
                sup = sup.max(if s1.is_finite() { s1 } else { T::infinity() });
                sum += if s2.is_finite() { s2 } else { T::infinity() };
            }
            rows.push(SupSumRow { lambda, truncation: r, sup, sum });
            stats.push((sup, sum));
        }
        let n = stats.len();
        let grows = |a: T, b: T| b > T::lit(GROWTH) * a || (b.is_infinite() && a.is_finite());
        verdicts.push(SupSumVerdict {
            lambda,
            sup_growing: grows(stats[n - 2].0, stats[n - 1].0),
            sum_growing: grows(stats[n - 2].1, stats[n - 1].1),
        });
    }
    Ok(SupSumTable { sector, rows, verdicts })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SectorDiff {
    pub k: usize,
    pub a: Status,
    pub b: Status,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonResult {
    pub pass: bool,
    #[serde(rename = "singularA")]
    pub singular_a: Vec<usize>,
    #[serde(rename = "singularB")]
    pub singular_b: Vec<usize>,
    #[serde(rename = "indeterminateA")]
    pub indeterminate_a: usize,
    #[serde(rename = "indeterminateB")]
    pub indeterminate_b: usize,
    pub diffs: Vec<SectorDiff>,
}

/// PASS iff no sector flips between Regular and Singular; Indeterminate sectors are excluded.
pub fn stability_compare<T: Real>(a: &WavefrontReport<T>, b: &WavefrontReport<T>) -> Result<ComparisonResult> {
    if a.k != b.k || a.offset != b.offset || a.weight != b.weight {
        return Err(Error::Refused(format!(
            "reports use different partitions or weights: (K={}, offset={}, {}) vs (K={}, offset={}, {})",
            a.k, a.offset, a.weight, b.k, b.offset, b.weight
        )));
    }
    let mut diffs = Vec::new();
    let mut pass = true;
    for (sa, sb) in a.sectors.iter().zip(&b.sectors) {
        if sa.status != sb.status {
            diffs.push(SectorDiff { k: sa.k, a: sa.status, b: sb.status });
            if sa.status != Status::Indeterminate && sb.status != Status::Indeterminate {
                pass = false;
            }
        }
    }
    Ok(ComparisonResult {
        pass,
        singular_a: a.singular(),
        singular_b: b.singular(),
        indeterminate_a: a.indeterminate().len(),
        indeterminate_b: b.indeterminate().len(),
        diffs,
    })
}
