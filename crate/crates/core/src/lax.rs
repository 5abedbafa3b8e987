//! First-order scalar operators linear in the spectral parameter, and the
//! Lax-pair check.

use std::collections::BTreeMap;
use std::fmt;

use crate::error::{Error, Result};
use crate::jet::{total_derivative, Ranking, RewriteSystem};
use crate::kernel::Expr;
use crate::par;
use crate::symbol::{JetVar, MultiIndex, Symbol, Unknown, Var};

/// `free + Σ_j dir[j]·D_j`.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct FirstOrderOperator {
    pub free: Expr,
    pub dir: BTreeMap<Var, Expr>,
}

impl FirstOrderOperator {
    pub fn zero() -> FirstOrderOperator {
        FirstOrderOperator::default()
    }

    pub fn scalar(e: Expr) -> FirstOrderOperator {
        FirstOrderOperator { free: e, dir: BTreeMap::new() }
    }

    pub fn derivative(v: Var) -> FirstOrderOperator {
        let mut dir = BTreeMap::new();
        dir.insert(v, Expr::one());
        FirstOrderOperator { free: Expr::zero(), dir }
    }

    pub fn new(free: Expr, dir: impl IntoIterator<Item = (Var, Expr)>) -> FirstOrderOperator {
        let mut op = FirstOrderOperator { free, dir: BTreeMap::new() };
        for (v, c) in dir {
            op.add_dir(v, c);
        }
        op
    }

    fn add_dir(&mut self, v: Var, c: Expr) {
        let sum = match self.dir.remove(&v) {
            Some(old) => &old + &c,
            None => c,
        };
        if !sum.is_zero() {
            self.dir.insert(v, sum);
        }
    }

    pub fn coefficient(&self, v: Var) -> Expr {
        self.dir.get(&v).cloned().unwrap_or_else(Expr::zero)
    }

    pub fn is_zero(&self) -> bool {
        self.free.is_zero() && self.dir.is_empty()
    }

    pub fn is_scalar(&self) -> bool {
        self.dir.is_empty()
    }

    pub fn add(&self, other: &FirstOrderOperator) -> FirstOrderOperator {
        let mut out = self.clone();
        out.free = &out.free + &other.free;
        for (v, c) in &other.dir {
            out.add_dir(*v, c.clone());
        }
        out
    }

    pub fn neg(&self) -> FirstOrderOperator {
        self.scale(&Expr::int(-1))
    }

    pub fn sub(&self, other: &FirstOrderOperator) -> FirstOrderOperator {
        self.add(&other.neg())
    }

    pub fn scale(&self, s: &Expr) -> FirstOrderOperator {
        FirstOrderOperator::new(
            &self.free * s,
            self.dir.iter().map(|(v, c)| (*v, c * s)),
        )
    }

    /// The operator `ψ ↦ self(s·ψ)`.
    pub fn compose_scalar(&self, s: &Expr) -> Result<FirstOrderOperator> {
        let mut out = self.scale(s);
        out.free = &out.free + &self.derivation(s)?;
        Ok(out)
    }

    /// `Σ_j dir[j]·D_j(e)`, the operator without its free term.
    pub fn derivation(&self, e: &Expr) -> Result<Expr> {
        let mut parts = Vec::with_capacity(self.dir.len());
        for (v, c) in &self.dir {
            parts.push(c * &total_derivative(e, *v)?);
        }
        Ok(parts.into_iter().sum())
    }

    pub fn apply(&self, e: &Expr) -> Result<Expr> {
        Ok(&(&self.free * e) + &self.derivation(e)?)
    }

    /// The operator applied to the zeroth jet of `unknown`.
    pub fn apply_to_unknown(&self, unknown: Unknown) -> Expr {
        let base = Expr::symbol(JetVar::base(unknown).symbol());
        let mut out = &self.free * &base;
        for (v, c) in &self.dir {
            let idx = MultiIndex::empty().with(*v).expect("first order index");
            out = &out + &(c * &Expr::symbol(JetVar::new(unknown, idx).symbol()));
        }
        out
    }

    /// `[self, other]`, again a first-order operator.
    pub fn commutator(&self, other: &FirstOrderOperator) -> Result<FirstOrderOperator> {
        let free = &self.derivation(&other.free)? - &other.derivation(&self.free)?;
        let vars: Vec<Var> = self.dir.keys().chain(other.dir.keys()).copied().collect();
        let mut dir = Vec::new();
        for v in vars {
            if dir.iter().any(|(w, _)| *w == v) {
                continue;
            }
            let c = &self.derivation(&other.coefficient(v))? - &other.derivation(&self.coefficient(v))?;
            dir.push((v, c));
        }
        Ok(FirstOrderOperator::new(free, dir))
    }

    pub fn map_coefficients(&self, mut f: impl FnMut(&Expr) -> Result<Expr>) -> Result<FirstOrderOperator> {
        let free = f(&self.free)?;
        let mut dir = Vec::with_capacity(self.dir.len());
        for (v, c) in &self.dir {
            dir.push((*v, f(c)?));
        }
        Ok(FirstOrderOperator::new(free, dir))
    }

    pub fn symbols(&self) -> Vec<Symbol> {
        let mut out: Vec<Symbol> = self.free.symbols();
        for c in self.dir.values() {
            out.extend(c.symbols());
        }
        out.sort_unstable();
        out.dedup();
        out
    }

    pub fn coefficients(&self) -> impl Iterator<Item = &Expr> {
        std::iter::once(&self.free).chain(self.dir.values())
    }
}

fn paren_if_sum(c: &Expr) -> String {
    let s = c.to_string();
    if c.num().len() > 1 {
        format!("({s})")
    } else {
        s
    }
}

impl fmt::Display for FirstOrderOperator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut terms: Vec<(Expr, Option<Var>)> =
            self.dir.iter().rev().map(|(v, c)| (c.clone(), Some(*v))).collect();
        if !self.free.is_zero() || terms.is_empty() {
            terms.push((self.free.clone(), None));
        }
        for (k, (c, v)) in terms.iter().enumerate() {
            let negative = c.num().leading_is_negative();
            let c = if negative { -c } else { c.clone() };
            match (k, negative) {
                (0, true) => f.write_str("-")?,
                (0, false) => {}
                (_, true) => f.write_str(" - ")?,
                (_, false) => f.write_str(" + ")?,
            }
            match v {
                Some(v) if c.is_one() => write!(f, "D_{v}")?,
                Some(v) => write!(f, "{}*D_{v}", paren_if_sum(&c))?,
                None => f.write_str(&paren_if_sum(&c))?,
            }
        }
        Ok(())
    }
}

/// One side of a λ-split operator, `λ·x1 − x0`.
#[derive(Clone, Debug, PartialEq)]
pub struct SplitOperator {
    pub x1: FirstOrderOperator,
    pub x0: FirstOrderOperator,
    /// Both parts were negated to make the leading coefficient of `x1`
    /// positive; the original operator is `−(λ·x1 − x0)`.
    pub negated: bool,
}

impl SplitOperator {
    pub fn reconstruct(&self) -> FirstOrderOperator {
        let lam = Expr::symbol(Symbol::lambda());
        let op = self.x1.scale(&lam).sub(&self.x0);
        if self.negated {
            op.neg()
        } else {
            op
        }
    }
}

fn split_coefficient(c: &Expr) -> Result<(Expr, Expr)> {
    let lam = Symbol::lambda();
    if c.den().contains(lam) {
        return Err(Error::NotLambdaLinear(format!(
            "coefficient {c} has lam in a denominator; rewrite the operator so it is linear in lam"
        )));
    }
    if c.num().degree_in(lam) > 1 {
        return Err(Error::NotLambdaLinear(format!(
            "coefficient {c} has degree {} in lam; rewrite the operator so it is linear in lam",
            c.num().degree_in(lam)
        )));
    }
    let one = Expr::new(c.num().coefficient(lam, 1), c.den().clone())?;
    let zero = Expr::new(c.num().coefficient(lam, 0), c.den().clone())?;
    Ok((one, -&zero))
}

/// Splits `op = λ·X¹ − X⁰` and normalizes the sign so that the
/// coefficient of the ranking-greatest direction of `X¹` has a positive
/// leading numeric coefficient.
pub fn split_lambda(op: &FirstOrderOperator, ranking: &Ranking) -> Result<SplitOperator> {
    let (f1, f0) = split_coefficient(&op.free)?;
    let mut d1 = Vec::new();
    let mut d0 = Vec::new();
    for (v, c) in &op.dir {
        let (a, b) = split_coefficient(c)?;
        d1.push((*v, a));
        d0.push((*v, b));
    }
    let x1 = FirstOrderOperator::new(f1, d1);
    let x0 = FirstOrderOperator::new(f0, d0);
    if x1.is_zero() {
        return Err(Error::NotLambdaLinear(format!("operator {op} does not depend on lam")));
    }
    let negated = match ranking.greatest(x1.dir.keys().copied()) {
        Some(v) => x1.dir[&v].num().leading_is_negative(),
        None => x1.free.num().leading_is_negative(),
    };
    Ok(if negated {
        SplitOperator { x1: x1.neg(), x0: x0.neg(), negated }
    } else {
        SplitOperator { x1, x0, negated }
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct LaxPair {
    pub input: [FirstOrderOperator; 2],
    pub ops: [SplitOperator; 2],
}

fn is_jet_free_of_images(e: &Expr) -> bool {
    !e.contains_any(|s| s.as_jet().is_some_and(|j| j.unknown != Unknown::Field))
}

impl LaxPair {
    pub fn new(input: [FirstOrderOperator; 2], ranking: &Ranking) -> Result<LaxPair> {
        for op in &input {
            if !op.coefficients().all(is_jet_free_of_images) {
                return Err(Error::WrongUnknown(format!(
                    "Lax operator {op} depends on U or Ut jets"
                )));
            }
        }
        let ops = [split_lambda(&input[0], ranking)?, split_lambda(&input[1], ranking)?];
        let a = &ops[0].x1;
        let b = &ops[1].x1;
        let vars: Vec<Var> = a.dir.keys().chain(b.dir.keys()).copied().collect();
        let independent = vars.iter().enumerate().any(|(i, &p)| {
            vars[i + 1..].iter().any(|&q| {
                !(&(&a.coefficient(p) * &b.coefficient(q)) - &(&a.coefficient(q) * &b.coefficient(p)))
                    .is_zero()
            })
        });
        if !independent {
            return Err(Error::InvalidLaxPair(
                "the lam-parts of the two operators have proportional directions".into(),
            ));
        }
        Ok(LaxPair { input, ops })
    }

    /// `λ·X¹_i − X⁰_i` after sign normalization.
    pub fn operator(&self, i: usize) -> FirstOrderOperator {
        let lam = Expr::symbol(Symbol::lambda());
        self.ops[i].x1.scale(&lam).sub(&self.ops[i].x0)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LaxReport {
    pub pass: bool,
    /// `[X_1, X_2] = a·X_1 + b·X_2`, when a pair of directions determines them.
    pub multipliers: Option<(Expr, Expr)>,
    /// Labelled residuals; all zero on PASS.
    pub residuals: Vec<(String, Expr)>,
    pub assumptions: Vec<Expr>,
    pub negated: [bool; 2],
}

/// Checks that the commutator of the pair lies in its span modulo the
/// equation held in `sys` and its differential consequences.
pub fn check_lax(pair: &LaxPair, sys: &RewriteSystem) -> Result<LaxReport> {
    let a = pair.operator(0).map_coefficients(|c| sys.reduce(c))?;
    let b = pair.operator(1).map_coefficients(|c| sys.reduce(c))?;
    let comm = a.commutator(&b)?.map_coefficients(|c| sys.reduce(c))?;
    let vars: Vec<Var> = {
        let mut v: Vec<Var> = a.dir.keys().chain(b.dir.keys()).chain(comm.dir.keys()).copied().collect();
        v.sort();
        v.dedup();
        v
    };
    let mut best: Option<(usize, Var, Var, Expr)> = None;
    for (i, &p) in vars.iter().enumerate() {
        for &q in &vars[i + 1..] {
            let det = sys.reduce(
                &(&(&a.coefficient(p) * &b.coefficient(q)) - &(&a.coefficient(q) * &b.coefficient(p))),
            )?;
            if det.is_zero() {
                continue;
            }
            let size = det.size();
            if best.as_ref().is_none_or(|(s, ..)| size < *s) {
                best = Some((size, p, q, det));
            }
        }
    }
    let assumptions = sys.assumptions();
    let negated = [pair.ops[0].negated, pair.ops[1].negated];
    let Some((_, p, q, det)) = best else {
        return Ok(LaxReport {
            pass: false,
            multipliers: None,
            residuals: vec![("determinant".into(), Expr::zero())],
            assumptions,
            negated,
        });
    };
    let cp = comm.coefficient(p);
    let cq = comm.coefficient(q);
    let ma = sys.reduce(&(&(&cp * &b.coefficient(q)) - &(&cq * &b.coefficient(p))).try_div(&det)?)?;
    let mb = sys.reduce(&(&(&a.coefficient(p) * &cq) - &(&a.coefficient(q) * &cp)).try_div(&det)?)?;
    let mut slots: Vec<(String, Expr, Expr, Expr)> = vars
        .iter()
        .filter(|&&v| v != p && v != q)
        .map(|&v| (format!("D_{v}"), comm.coefficient(v), a.coefficient(v), b.coefficient(v)))
        .collect();
    slots.push(("free".into(), comm.free.clone(), a.free.clone(), b.free.clone()));
    let results = par::map(&slots, |(label, c, x, y)| {
        let r = &(c - &(&ma * x)) - &(&mb * y);
        sys.reduce(&r).map(|r| (label.clone(), r))
    });
    let mut residuals = Vec::with_capacity(results.len());
    for r in results {
        residuals.push(r?);
    }
    let pass = residuals.iter().all(|(_, r)| r.is_zero());
    Ok(LaxReport {
        pass,
        multipliers: Some((ma, mb)),
        residuals,
        assumptions,
        negated,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::jet::solve_for_leading;

    fn var(c: char) -> Var {
        Var::new(c).unwrap()
    }

    fn u(s: &str) -> Expr {
        let vars: Vec<Var> = s.chars().map(var).collect();
        Expr::symbol(JetVar::new(Unknown::Field, MultiIndex::from_vars(&vars).unwrap()).symbol())
    }

    fn d(c: char) -> FirstOrderOperator {
        FirstOrderOperator::derivative(var(c))
    }

    fn lam() -> Expr {
        Expr::symbol(Symbol::lambda())
    }

    fn ranking(s: &str) -> Ranking {
        Ranking::new(s.chars().map(var).collect()).unwrap()
    }

    fn dfkn2_pair(t_den: &str) -> [FirstOrderOperator; 2] {
        let x1 = d('t')
            .sub(&d('z').scale(&lam()))
            .sub(&d('x').scale(&u("t").try_div(&u(t_den)).unwrap()));
        let x2 = d('y').sub(&d('x').scale(&(&lam() + &u("y").try_div(&u("x")).unwrap())));
        [x1, x2]
    }

    fn dfkn2_system() -> RewriteSystem {
        let f = &(&(&(&u("x") * &u("yz")) - &(&u("y") * &u("xz"))) - &(&u("x") * &u("xt")))
            + &(&u("t") * &u("xx"));
        let rk = ranking("tzyx");
        let (rule, assumptions) = solve_for_leading(&f, Unknown::Field, &rk, None).unwrap();
        let mut sys = RewriteSystem::new(rk, 4);
        sys.add_rule(rule, assumptions).unwrap();
        sys
    }

    #[test]
    fn split_dfkn2_operators() {
        let rk = ranking("tzyx");
        let [a, b] = dfkn2_pair("x");
        let s = split_lambda(&a, &rk).unwrap();
        assert_eq!(s.x1, d('z'));
        assert_eq!(s.x0, d('t').sub(&d('x').scale(&u("t").try_div(&u("x")).unwrap())));
        assert!(s.negated);
        assert_eq!(s.reconstruct(), a);
        let s = split_lambda(&b, &rk).unwrap();
        assert_eq!(s.x1, d('x'));
        assert_eq!(s.x0, d('y').sub(&d('x').scale(&u("y").try_div(&u("x")).unwrap())));
        assert_eq!(s.reconstruct(), b);
    }

    #[test]
    fn split_dfkn3_operator() {
        let alpha = Expr::symbol(Symbol::parameter("alpha").unwrap());
        let m = (&u("y") - &u("z")).try_div(&u("x")).unwrap();
        let c = &(&Expr::one() + &alpha) - &(&lam() * &alpha);
        let op = d('y').sub(&d('z').scale(&lam())).sub(&d('x').scale(&(&c * &m)));
        let s = split_lambda(&op, &ranking("tzyx")).unwrap();
        assert_eq!(s.x1, d('z').sub(&d('x').scale(&(&alpha * &m))));
        assert_eq!(
            s.x0,
            d('y').sub(&d('x').scale(&(&(&Expr::one() + &alpha) * &m)))
        );
    }

    #[test]
    fn quadratic_lambda_rejected() {
        let op = d('y').sub(&d('x').scale(&lam().pow(2).unwrap()));
        assert!(matches!(split_lambda(&op, &ranking("yx")), Err(Error::NotLambdaLinear(_))));
    }

    #[test]
    fn dfkn2_pair_passes() {
        let pair = LaxPair::new(dfkn2_pair("x"), &ranking("tzyx")).unwrap();
        let report = check_lax(&pair, &dfkn2_system()).unwrap();
        assert!(report.pass, "{:?}", report.residuals);
    }

    #[test]
    fn perturbed_dfkn2_pair_fails() {
        let pair = LaxPair::new(dfkn2_pair("y"), &ranking("tzyx")).unwrap();
        let report = check_lax(&pair, &dfkn2_system()).unwrap();
        assert!(!report.pass);
        assert!(report.residuals.iter().any(|(_, r)| !r.is_zero()));
    }

    #[test]
    fn rescaled_operator_still_passes() {
        let [a, b] = dfkn2_pair("x");
        let pair = LaxPair::new([a.scale(&u("x")), b], &ranking("tzyx")).unwrap();
        assert!(check_lax(&pair, &dfkn2_system()).unwrap().pass);
    }

    #[test]
    fn proportional_directions_rejected() {
        let a = d('y').sub(&d('x').scale(&lam()));
        let b = d('z').sub(&d('x').scale(&(&lam() * &Expr::int(2))));
        assert!(matches!(
            LaxPair::new([a, b], &ranking("zyx")),
            Err(Error::InvalidLaxPair(_))
        ));
    }

    #[test]
    fn commutator_of_derivatives_vanishes() {
        let c = d('x').commutator(&d('y').scale(&u("x"))).unwrap();
        assert_eq!(c, d('y').scale(&u("xx")));
    }

    #[test]
    fn compose_with_scalar() {
        let op = d('x').compose_scalar(&u("")).unwrap();
        assert_eq!(op, FirstOrderOperator::new(u("x"), [(var('x'), u(""))]));
    }
}
