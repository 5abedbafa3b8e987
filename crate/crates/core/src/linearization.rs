//! The linearization operator of an equation `F = 0`.

use std::collections::BTreeMap;
use std::fmt;

use crate::error::{Error, Result};
use crate::jet::total_derivative_multi;
use crate::kernel::{Expr, Poly};
use crate::symbol::{JetVar, MultiIndex, Symbol, Unknown};

/// `Σ_I c_I D^I`, one coefficient per multi-index (the empty index is the
/// zeroth-order term).
#[derive(Clone, Debug, PartialEq, Default)]
pub struct LinearDifferentialOperator {
    coeffs: BTreeMap<MultiIndex, Expr>,
}

impl LinearDifferentialOperator {
    pub fn identity() -> LinearDifferentialOperator {
        let mut coeffs = BTreeMap::new();
        coeffs.insert(MultiIndex::empty(), Expr::one());
        LinearDifferentialOperator { coeffs }
    }

    pub fn from_coefficients(
        items: impl IntoIterator<Item = (MultiIndex, Expr)>,
    ) -> LinearDifferentialOperator {
        let mut coeffs = BTreeMap::new();
        for (k, v) in items {
            if !v.is_zero() {
                coeffs.insert(k, v);
            }
        }
        LinearDifferentialOperator { coeffs }
    }

    pub fn coefficient(&self, index: MultiIndex) -> Expr {
        self.coeffs.get(&index).cloned().unwrap_or_else(Expr::zero)
    }

    pub fn coefficients(&self) -> impl Iterator<Item = (MultiIndex, &Expr)> {
        self.coeffs.iter().map(|(k, v)| (*k, v))
    }

    pub fn order(&self) -> u32 {
        self.coeffs.keys().map(|k| k.order()).max().unwrap_or(0)
    }

    /// `Σ_I c_I · target_I`.
    pub fn apply(&self, target: Unknown) -> Expr {
        self.coeffs
            .iter()
            .map(|(idx, c)| c * &Expr::symbol(JetVar::new(target, *idx).symbol()))
            .sum()
    }

    /// `Σ_I c_I · D^I(e)` for an arbitrary expression.
    pub fn apply_to(&self, e: &Expr) -> Result<Expr> {
        let mut out = Vec::with_capacity(self.coeffs.len());
        for (idx, c) in &self.coeffs {
            out.push(c * &total_derivative_multi(e, *idx)?);
        }
        Ok(out.into_iter().sum())
    }
}

impl fmt::Display for LinearDifferentialOperator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.coeffs.is_empty() {
            return f.write_str("0");
        }
        let parts: Vec<String> = self
            .coeffs
            .iter()
            .rev()
            .map(|(idx, c)| {
                if idx.is_empty() {
                    format!("({c})")
                } else {
                    let ds: Vec<String> = idx.vars().map(|v| format!("D_{v}")).collect();
                    format!("({c})*{}", ds.join("*"))
                }
            })
            .collect();
        f.write_str(&parts.join(" + "))
    }
}

/// `ℓ_F = Σ_I ∂F/∂u_I · D^I` over the `u`-jets of `F`.
pub fn linearize(f: &Expr) -> Result<LinearDifferentialOperator> {
    let mut coeffs = BTreeMap::new();
    for s in f.symbols() {
        let Some(j) = s.as_jet() else { continue };
        if j.unknown != Unknown::Field {
            return Err(Error::WrongUnknown(format!(
                "equation depends on {j}; only u-jets are allowed"
            )));
        }
        let c = f.partial_diff(s);
        if !c.is_zero() {
            coeffs.insert(j.index, c);
        }
    }
    Ok(LinearDifferentialOperator { coeffs })
}

/// `F[u ↦ u + εU] − F − ε·ℓ_F(U)` truncated at `ε²`. Zero exactly when the
/// first-variation identity holds.
pub fn first_variation_residual(f: &Expr) -> Result<Expr> {
    let lin = linearize(f)?;
    let eps = Expr::symbol(Symbol::epsilon());
    let shifted: Vec<(Symbol, Expr)> = f
        .symbols()
        .into_iter()
        .filter_map(|s| s.as_jet())
        .map(|j| {
            let seed = Expr::symbol(JetVar::new(Unknown::Seed, j.index).symbol());
            (j.symbol(), &Expr::symbol(j.symbol()) + &(&eps * &seed))
        })
        .collect();
    let binds: Vec<(Symbol, &Expr)> = shifted.iter().map(|(s, e)| (*s, e)).collect();
    let moved = f.substitute_unchecked(&binds)?;
    let diff = &(&moved - f) - &(&eps * &lin.apply(Unknown::Seed));
    let low: Vec<_> = diff
        .num()
        .terms()
        .iter()
        .filter(|(m, _)| m.degree(Symbol::epsilon()) < 2)
        .cloned()
        .collect();
    Expr::new(Poly::from_terms(low), diff.den().clone())
}
