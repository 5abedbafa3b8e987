//! Twist ansatz over a finite basis and the determining system it yields.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::error::{Error, Result};
use crate::kernel::gcd::gcd_many;
use crate::kernel::{Expr, Monomial, Poly};
use crate::lax::LaxPair;
use crate::symbol::{JetVar, MultiIndex, Symbol, SymbolKind, Unknown, Var};

use super::{check_twist_coefficient, residuals, slot_name, EquationContext, Orientation, TwistRelations};

#[derive(Clone, Debug, PartialEq)]
pub struct AnsatzBasis {
    /// `slots[i][s]` spans the candidates for `f_{i+1}^s`.
    pub slots: [[Vec<Expr>; 2]; 2],
    pub warnings: Vec<String>,
}

impl AnsatzBasis {
    pub fn uniform(terms: Vec<Expr>) -> AnsatzBasis {
        AnsatzBasis {
            slots: [
                [terms.clone(), terms.clone()],
                [terms.clone(), terms],
            ],
            warnings: Vec::new(),
        }
    }

    pub fn empty() -> AnsatzBasis {
        AnsatzBasis::uniform(Vec::new())
    }

    pub fn size(&self) -> usize {
        self.slots.iter().flatten().map(Vec::len).sum()
    }

    pub fn validate(&self) -> Result<()> {
        for (i, row) in self.slots.iter().enumerate() {
            for (s, terms) in row.iter().enumerate() {
                for t in terms {
                    check_twist_coefficient(t, &slot_name(i, s))?;
                    if t.contains_any(|x| x.kind() == SymbolKind::UnknownConstant) {
                        return Err(Error::InvalidBasis(format!(
                            "basis term {t} contains an unknown constant"
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    /// `f_{i+1}^s = Σ_k c_k·basis_k` with fresh constants `c1, c2, …`.
    pub fn twist(&self, orientation: Orientation) -> (TwistRelations, Vec<Symbol>) {
        let mut unknowns = Vec::new();
        let mut twist = TwistRelations::zero(orientation);
        for i in 0..2 {
            for s in 0..2 {
                let mut parts = Vec::new();
                for t in &self.slots[i][s] {
                    let c = Symbol::unknown_constant(unknowns.len() as u32 + 1);
                    unknowns.push(c);
                    parts.push(&Expr::symbol(c) * t);
                }
                twist.f[i][s] = parts.into_iter().sum();
            }
        }
        (twist, unknowns)
    }
}

fn first_jet(v: Var) -> JetVar {
    JetVar::new(Unknown::Field, MultiIndex::empty().with(v).expect("order one"))
}

/// All `u_pq/u_r` with `p ≤ q` over the variables of the equation and the
/// pair, and `u_r` over the first derivatives in the pair's denominators.
pub fn default_ansatz(equation: &Expr, pair: &LaxPair, vars: &[Var]) -> AnsatzBasis {
    let mut seen: BTreeSet<Var> = BTreeSet::new();
    let mut dens: BTreeSet<JetVar> = BTreeSet::new();
    let note = |s: Symbol, seen: &mut BTreeSet<Var>| {
        if let Some(j) = s.as_jet() {
            seen.extend(j.index.nonzero_vars());
        } else if let Some(v) = s.as_independent() {
            seen.insert(v);
        }
    };
    for s in equation.symbols() {
        note(s, &mut seen);
    }
    for op in pair.input.iter() {
        seen.extend(op.dir.keys().copied());
        for c in op.coefficients() {
            for s in c.symbols() {
                note(s, &mut seen);
            }
        }
    }
    for split in &pair.ops {
        for c in split.x1.coefficients().chain(split.x0.coefficients()) {
            for s in c.den().symbols() {
                if let Some(j) = s.as_jet() {
                    if j.unknown == Unknown::Field && j.order() == 1 {
                        dens.insert(j);
                    }
                }
            }
        }
    }
    let ordered: Vec<Var> = vars.iter().copied().filter(|v| seen.contains(v)).collect();
    let mut warnings = Vec::new();
    let denominators: Vec<JetVar> = if dens.is_empty() {
        warnings.push(
            "no first-derivative denominators in the Lax pair; using every first derivative".into(),
        );
        ordered.iter().map(|&v| first_jet(v)).collect()
    } else {
        vars.iter()
            .map(|&v| first_jet(v))
            .filter(|j| dens.contains(j))
            .collect()
    };
    let mut terms = Vec::new();
    for r in &denominators {
        let den = Expr::symbol(r.symbol());
        for (a, &p) in ordered.iter().enumerate() {
            for &q in &ordered[a..] {
                let idx = MultiIndex::from_vars(&[p, q]).expect("order two");
                let num = Expr::symbol(JetVar::new(Unknown::Field, idx).symbol());
                terms.push(num.try_div(&den).expect("nonzero denominator"));
            }
        }
    }
    let mut basis = AnsatzBasis::uniform(terms);
    basis.warnings = warnings;
    basis
}

#[derive(Clone, Debug, PartialEq, Default)]
pub struct DeterminingSystem {
    /// Each equation is `p = 0` with `p` polynomial in the unknowns and
    /// the parameters.
    pub equations: Vec<Poly>,
    pub unknowns: Vec<Symbol>,
}

impl fmt::Display for DeterminingSystem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for e in &self.equations {
            writeln!(f, "{e} = 0")?;
        }
        Ok(())
    }
}

pub(crate) fn is_coefficient_symbol(s: Symbol) -> bool {
    matches!(s.kind(), SymbolKind::UnknownConstant | SymbolKind::Parameter)
}

pub(crate) fn is_unknown(s: Symbol) -> bool {
    s.kind() == SymbolKind::UnknownConstant
}

fn partition(m: &Monomial, pred: impl Fn(Symbol) -> bool) -> (Monomial, Monomial) {
    let (yes, no): (Vec<_>, Vec<_>) = m.factors().iter().copied().partition(|(s, _)| pred(*s));
    (Monomial::from_factors(yes), Monomial::from_factors(no))
}

/// Divides out the content with respect to the unknowns and makes monic.
/// An equation free of unknowns normalizes to `1` (inconsistent).
pub(crate) fn normalize_equation(p: &Poly) -> Option<Poly> {
    if p.is_zero() {
        return None;
    }
    let mut groups: BTreeMap<Monomial, Vec<(Monomial, crate::kernel::Q)>> = BTreeMap::new();
    for (m, c) in p.terms() {
        let (unknowns, rest) = partition(m, is_unknown);
        groups.entry(unknowns).or_default().push((rest, c.clone()));
    }
    if groups.len() == 1 && groups.keys().next().is_some_and(|m| m.is_one()) {
        return Some(Poly::one());
    }
    let coeffs: Vec<Poly> = groups.values().map(|t| Poly::from_terms(t.clone())).collect();
    let g = gcd_many(coeffs.iter());
    let out = if g.is_constant() {
        p.clone()
    } else {
        p.div_exact(&g).expect("content divides")
    };
    Some(out.monic())
}

/// One equation per monomial in the jets: the coefficient of that
/// monomial in the numerator of `residual`.
pub fn collect_equations(residual: &Expr, out: &mut Vec<Poly>) {
    let mut groups: BTreeMap<Monomial, Vec<(Monomial, crate::kernel::Q)>> = BTreeMap::new();
    for (m, c) in residual.num().terms() {
        let (coeff, jets) = partition(m, is_coefficient_symbol);
        groups.entry(jets).or_default().push((coeff, c.clone()));
    }
    for terms in groups.into_values() {
        if let Some(eq) = normalize_equation(&Poly::from_terms(terms)) {
            if !out.contains(&eq) {
                out.push(eq);
            }
        }
    }
}

/// Sets the twist to the ansatz, computes both residuals and collects the
/// coefficient equations. Returns the system and the symbolic twist.
pub fn derive_determining_system(
    ctx: &EquationContext,
    pair: &LaxPair,
    basis: &AnsatzBasis,
    orientation: Orientation,
) -> Result<(DeterminingSystem, TwistRelations)> {
    basis.validate()?;
    let (twist, unknowns) = basis.twist(orientation);
    let r = match residuals(ctx, pair, &twist) {
        Err(Error::OrderOverflow { .. }) => {
            residuals(&ctx.variant(ctx.max_order() + 1, false), pair, &twist)?
        }
        other => other?,
    };
    let mut equations = Vec::new();
    collect_equations(&r.compatibility, &mut equations);
    collect_equations(&r.symmetry, &mut equations);
    Ok((DeterminingSystem { equations, unknowns }, twist))
}

#[cfg(test)]
mod tests {
    use super::super::tests::{dfkn2, u};
    use super::*;

    #[test]
    fn default_basis_contains_the_known_terms() {
        let (ctx, pair) = dfkn2();
        let vars: Vec<Var> = ctx.ranking().vars().to_vec();
        let basis = default_ansatz(&ctx.equation, &pair, &vars);
        let terms = &basis.slots[0][1];
        assert_eq!(terms.len(), 10);
        assert!(terms.contains(&u("xz").try_div(&u("x")).unwrap()));
        assert!(terms.contains(&u("xx").try_div(&u("x")).unwrap()));
        assert!(basis.warnings.is_empty());
    }

    #[test]
    fn known_values_satisfy_the_system() {
        let (ctx, pair) = dfkn2();
        let mut basis = AnsatzBasis::empty();
        basis.slots[0][1] = vec![-&u("xz").try_div(&u("x")).unwrap()];
        basis.slots[1][1] = vec![-&u("xx").try_div(&u("x")).unwrap()];
        let (sys, _) = derive_determining_system(&ctx, &pair, &basis, Orientation::Forward).unwrap();
        // c1 = c2 = 1 must satisfy every equation.
        let one = crate::kernel::q(1);
        for eq in &sys.equations {
            assert!(eq.eval(|_| Some(one.clone())).unwrap() == crate::kernel::q(0), "{eq}");
        }
    }

    #[test]
    fn empty_basis_is_the_untwisted_test() {
        let (ctx, pair) = dfkn2();
        let (sys, _) = derive_determining_system(&ctx, &pair, &AnsatzBasis::empty(), Orientation::Forward).unwrap();
        assert!(sys.unknowns.is_empty());
        assert!(sys.equations.iter().any(|e| e.is_one()));
    }

    #[test]
    fn invalid_basis_rejected() {
        let (ctx, pair) = dfkn2();
        let mut basis = AnsatzBasis::empty();
        basis.slots[0][0] = vec![u("xxx")];
        assert!(matches!(
            derive_determining_system(&ctx, &pair, &basis, Orientation::Forward),
            Err(Error::InvalidBasis(_))
        ));
    }

    #[test]
    fn equation_content_removed() {
        let alpha = Poly::var(Symbol::parameter("alpha").unwrap());
        let c1 = Poly::var(Symbol::unknown_constant(1));
        let c2 = Poly::var(Symbol::unknown_constant(2));
        let p = &(&(&alpha + &Poly::int(1)) * &c1) - &(&(&alpha + &Poly::int(1)) * &c2);
        let n = normalize_equation(&p).unwrap();
        assert_eq!(n, (&c1 - &c2).monic());
        assert!(normalize_equation(&alpha).unwrap().is_one());
    }
}
