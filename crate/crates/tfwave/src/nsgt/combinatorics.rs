//! Ordered decompositions of a multi-index into nonzero parts.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type MultiIndex = Vec<u32>;

/// A multiset of nonzero parts with multiplicities c_γ.
pub type Multiset = Vec<(MultiIndex, u32)>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CompositionCount {
    /// ordered ℓ-tuples of nonzero multi-indices summing to κ, by brute force
    pub enumeration: u128,
    /// ℓ!·Σ Π 1/c_γ! over multiplicity vectors
    pub factorial_form: u128,
    /// Π_j C(κ_j + ℓ − 1, ℓ − 1)
    pub binomial_product: u128,
    /// 2^{|κ| + dℓ − d}
    pub bound: u128,
}

const MAX_ORDER: u32 = 12;

fn check(kappa: &[u32], ell: u32) -> Result<()> {
    let order: u32 = kappa.iter().sum();
    if kappa.is_empty() || ell == 0 {
        return Err(Error::Domain("need a nonempty multi-index and ell >= 1".into()));
    }
    if order > MAX_ORDER || ell > order.max(MAX_ORDER * u32::from(order == 0)) {
        return Err(Error::Refused(format!("|kappa| = {order}, ell = {ell} outside |kappa| <= {MAX_ORDER}, ell <= |kappa|")));
    }
    Ok(())
}

fn binomial(n: u128, k: u128) -> u128 {
    let k = k.min(n - k);
    (0..k).fold(1u128, |acc, i| acc * (n - i) / (i + 1))
}

fn factorial(n: u32) -> u128 {
    (1..=n as u128).product()
}

/// All multi-indices 0 ≤ γ ≤ bound, in lexicographic order.
fn boxes(bound: &[u32]) -> Vec<MultiIndex> {
    let mut out = vec![Vec::new()];
    for &b in bound {
        out = out.into_iter().flat_map(|p| (0..=b).map(move |v| [p.clone(), vec![v]].concat())).collect();
    }
    out
}

fn count_ordered(rest: &[u32], parts: u32) -> u128 {
    if parts == 0 {
        return u128::from(rest.iter().all(|&v| v == 0));
    }
    boxes(rest)
        .into_iter()
        .filter(|g| g.iter().any(|&v| v > 0))
        .map(|g| {
            let next: Vec<u32> = rest.iter().zip(&g).map(|(a, b)| a - b).collect();
            count_ordered(&next, parts - 1)
        })
        .sum()
}

/// Multisets of exactly ℓ nonzero multi-indices summing to κ.
pub fn multisets(kappa: &[u32], ell: u32) -> Vec<Multiset> {
    let mut parts: Vec<MultiIndex> = boxes(kappa).into_iter().filter(|g| g.iter().any(|&v| v > 0)).collect();
    parts.reverse();
    let mut out = Vec::new();
    let mut current: Multiset = Vec::new();
    fn go(parts: &[MultiIndex], from: usize, rest: &[u32], left: u32, current: &mut Multiset, out: &mut Vec<Multiset>) {
        if left == 0 {
            if rest.iter().all(|&v| v == 0) {
                out.push(current.clone());
            }
            return;
        }
        for i in from..parts.len() {
            let g = &parts[i];
            let fits = |c: u32| g.iter().zip(rest).all(|(a, b)| a * c <= *b);
            let mut c = 1;
            while c <= left && fits(c) {
                let next: Vec<u32> = rest.iter().zip(g).map(|(b, a)| b - a * c).collect();
                current.push((g.clone(), c));
                go(parts, i + 1, &next, left - c, current, out);
                current.pop();
                c += 1;
            }
        }
    }
    go(&parts, 0, kappa, ell, &mut current, &mut out);
    out
}

/// Counts ordered decompositions of κ into ℓ nonzero parts three ways and checks their order.
pub fn composition_count(kappa: &[u32], ell: u32) -> Result<CompositionCount> {
    check(kappa, ell)?;
    let d = kappa.len() as u32;
    let order: u32 = kappa.iter().sum();
    let enumeration = count_ordered(kappa, ell);
    let factorial_form = multisets(kappa, ell)
        .iter()
        .map(|ms| factorial(ell) / ms.iter().map(|(_, c)| factorial(*c)).product::<u128>())
        .sum();
    let binomial_product =
        kappa.iter().map(|&k| binomial(u128::from(k + ell - 1), u128::from(ell - 1))).product();
    let bound = 1u128 << (order + d * ell - d);
    let out = CompositionCount { enumeration, factorial_form, binomial_product, bound };
    if factorial_form != enumeration || enumeration > binomial_product || binomial_product > bound {
        return Err(Error::Numeric(format!("composition counts out of order: {out:?}")));
    }
    Ok(out)
}
