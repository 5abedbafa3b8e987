//! Twisted recursion relations built from a Lax pair, the compatibility
//! and symmetry residuals, and the search for twist coefficients.

pub mod ansatz;
pub mod solve;

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;
use std::time::{Duration, Instant};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::jet::{solve_for_leading, total_derivative_multi, Ranking, RewriteRule, RewriteSystem};
use crate::kernel::Expr;
use crate::lax::{FirstOrderOperator, LaxPair};
use crate::linearization::{linearize, LinearDifferentialOperator};
use crate::par;
use crate::symbol::{JetVar, Symbol, SymbolKind, Unknown};

pub use ansatz::{default_ansatz, derive_determining_system, AnsatzBasis, DeterminingSystem};
pub use solve::{solve_determining, SolveOutcome, Solution};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Orientation {
    /// `X¹_i(Ũ) + f_i^1 Ũ = f_i^0 U + X⁰_i(U)`.
    Forward,
    /// `X⁰_i(Ũ) + f_i^1 Ũ = f_i^0 U + X¹_i(U)`.
    Swapped,
}

impl Orientation {
    pub fn name(self) -> &'static str {
        match self {
            Orientation::Forward => "forward",
            Orientation::Swapped => "swapped",
        }
    }
}

impl fmt::Display for Orientation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Slot label `f{i}_{s}` with `i` one-based.
pub fn slot_name(i: usize, s: usize) -> String {
    format!("f{}_{}", i + 1, s)
}

/// Twist coefficients may depend on `x` and `u`-jets up to order two only.
pub fn check_twist_coefficient(e: &Expr, label: &str) -> Result<()> {
    for s in e.symbols() {
        let bad = match s.kind() {
            SymbolKind::Lambda | SymbolKind::Epsilon => true,
            SymbolKind::Jet => {
                let j = s.as_jet().expect("jet symbol");
                j.unknown != Unknown::Field || j.order() > 2
            }
            _ => false,
        };
        if bad {
            return Err(Error::InvalidBasis(format!(
                "{label} = {e} depends on {s}; only x and u-jets of order at most 2 are allowed"
            )));
        }
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq)]
pub struct TwistRelations {
    /// `f[i][s]` is `f_{i+1}^s`.
    pub f: [[Expr; 2]; 2],
    pub orientation: Orientation,
}

impl TwistRelations {
    pub fn zero(orientation: Orientation) -> TwistRelations {
        TwistRelations {
            f: [[Expr::zero(), Expr::zero()], [Expr::zero(), Expr::zero()]],
            orientation,
        }
    }

    pub fn with_orientation(&self, orientation: Orientation) -> TwistRelations {
        TwistRelations { f: self.f.clone(), orientation }
    }

    pub fn validate(&self) -> Result<()> {
        for i in 0..2 {
            for s in 0..2 {
                check_twist_coefficient(&self.f[i][s], &slot_name(i, s))?;
            }
        }
        Ok(())
    }

    pub fn unknown_constants(&self) -> Vec<Symbol> {
        let mut out: Vec<Symbol> = self
            .f
            .iter()
            .flatten()
            .flat_map(|e| e.symbols())
            .filter(|s| s.kind() == SymbolKind::UnknownConstant)
            .collect();
        out.sort_unstable();
        out.dedup();
        out
    }

    pub fn substitute(&self, values: &BTreeMap<Symbol, Expr>) -> Result<TwistRelations> {
        let mut f = self.f.clone();
        for row in f.iter_mut() {
            for e in row.iter_mut() {
                *e = e.substitute(values)?;
            }
        }
        Ok(TwistRelations { f, orientation: self.orientation })
    }
}

/// The equation with its solved form and the solved linearized equation
/// for `U`, shared by every relation set built over it.
pub struct EquationContext {
    pub equation: Expr,
    pub linearization: LinearDifferentialOperator,
    seed: Arc<RewriteSystem>,
}

impl EquationContext {
    pub fn new(
        equation: &Expr,
        ranking: Ranking,
        assumptions: Vec<Expr>,
        max_order: u32,
        timeout: Option<Duration>,
    ) -> Result<EquationContext> {
        let linearization = linearize(equation)?;
        let (rule, implied) = solve_for_leading(equation, Unknown::Field, &ranking, None)?;
        let mut field = RewriteSystem::new(ranking.clone(), max_order).with_timeout(timeout);
        field.add_assumptions(assumptions);
        field.add_rule(rule, implied)?;
        let field = Arc::new(field);
        let seed_relation = linearization.apply(Unknown::Seed);
        let (rule, implied) = solve_for_leading(&seed_relation, Unknown::Seed, &ranking, Some(&field))?;
        let mut seed = RewriteSystem::layered(field);
        seed.add_rule(rule, implied)?;
        Ok(EquationContext {
            equation: equation.clone(),
            linearization,
            seed: Arc::new(seed),
        })
    }

    pub fn ranking(&self) -> &Ranking {
        self.seed.ranking()
    }

    pub fn max_order(&self) -> u32 {
        self.seed.max_order()
    }

    /// The rewrite system of `F = 0` and its consequences.
    pub fn field(&self) -> &RewriteSystem {
        self.seed.parent().expect("seed layer sits on the field layer")
    }

    /// The field layer plus the solved `ℓ_F(U) = 0`.
    pub fn seed(&self) -> &Arc<RewriteSystem> {
        &self.seed
    }

    pub fn field_rule(&self) -> &RewriteRule {
        &self.field().rules()[0]
    }

    pub fn seed_rule(&self) -> &RewriteRule {
        &self.seed.rules()[0]
    }

    /// Fresh caches, a different order bound and rule preference.
    pub fn variant(&self, max_order: u32, prefer_last: bool) -> EquationContext {
        EquationContext {
            equation: self.equation.clone(),
            linearization: self.linearization.clone(),
            seed: Arc::new(self.seed.variant(max_order, prefer_last)),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RelationSet {
    /// `E_i`, each of the form `(Ũ part) − (U part)`.
    pub relations: [Expr; 2],
    /// `E_i` solved for their leading `Ũ`-jets.
    pub rules: [RewriteRule; 2],
    pub assumptions: Vec<Expr>,
    pub orientation: Orientation,
}

/// `image_op(Ũ) + f1·Ũ − f0·U − seed_op(U)`.
pub fn relation(image_op: &FirstOrderOperator, seed_op: &FirstOrderOperator, f1: &Expr, f0: &Expr) -> Expr {
    let image = Expr::symbol(JetVar::base(Unknown::Image).symbol());
    let seed = Expr::symbol(JetVar::base(Unknown::Seed).symbol());
    let lhs = &image_op.apply_to_unknown(Unknown::Image) + &(f1 * &image);
    let rhs = &(f0 * &seed) + &seed_op.apply_to_unknown(Unknown::Seed);
    &lhs - &rhs
}

/// The two relations for a twist, without solving them.
pub fn relation_exprs(pair: &LaxPair, twist: &TwistRelations) -> [Expr; 2] {
    [0, 1].map(|i| {
        let (image_op, seed_op) = match twist.orientation {
            Orientation::Forward => (&pair.ops[i].x1, &pair.ops[i].x0),
            Orientation::Swapped => (&pair.ops[i].x0, &pair.ops[i].x1),
        };
        relation(image_op, seed_op, &twist.f[i][1], &twist.f[i][0])
    })
}

pub fn build_relations(pair: &LaxPair, twist: &TwistRelations, ctx: &EquationContext) -> Result<RelationSet> {
    let relations = relation_exprs(pair, twist);
    let mut rules = Vec::with_capacity(2);
    let mut assumptions = Vec::new();
    for e in &relations {
        let (rule, implied) = solve_for_leading(e, Unknown::Image, ctx.ranking(), Some(ctx.seed()))?;
        crate::jet::push_unique(&mut assumptions, implied);
        rules.push(rule);
    }
    let [a, b]: [RewriteRule; 2] = rules.try_into().expect("two rules");
    if a.lhs.index.divides(b.lhs.index) || b.lhs.index.divides(a.lhs.index) {
        return Err(Error::DegeneratePair(format!(
            "leading jets {} and {} of the two relations coincide or are derivatives of one another",
            a.lhs, b.lhs
        )));
    }
    Ok(RelationSet {
        relations,
        rules: [a, b],
        assumptions,
        orientation: twist.orientation,
    })
}

/// The seed layer plus the two solved relations.
pub fn image_system(ctx: &EquationContext, rs: &RelationSet) -> Result<RewriteSystem> {
    let mut sys = RewriteSystem::layered(ctx.seed().clone());
    for rule in &rs.rules {
        sys.add_rule(rule.clone(), Vec::new())?;
    }
    sys.add_assumptions(rs.assumptions.iter().cloned());
    Ok(sys)
}

/// Cross-differentiates the two solved relations to their common leading
/// jet and reduces the difference.
pub fn compatibility_residual(rs: &RelationSet, sys: &RewriteSystem) -> Result<Expr> {
    let [a, b] = &rs.rules;
    let l = a.lhs.index.lcm(b.lhs.index);
    let da = total_derivative_multi(&a.rhs, a.lhs.index.quotient(l).expect("lcm"))?;
    let db = total_derivative_multi(&b.rhs, b.lhs.index.quotient(l).expect("lcm"))?;
    sys.reduce(&(&da - &db))
}

/// `ℓ_F(Ũ)` reduced modulo the whole system.
pub fn symmetry_residual(ctx: &EquationContext, sys: &RewriteSystem) -> Result<Expr> {
    sys.reduce(&ctx.linearization.apply(Unknown::Image))
}

#[derive(Clone, Debug)]
pub struct Residuals {
    pub relations: RelationSet,
    pub compatibility: Expr,
    pub symmetry: Expr,
}

impl Residuals {
    pub fn is_zero(&self) -> bool {
        self.compatibility.is_zero() && self.symmetry.is_zero()
    }
}

pub fn residuals(ctx: &EquationContext, pair: &LaxPair, twist: &TwistRelations) -> Result<Residuals> {
    let rs = build_relations(pair, twist, ctx)?;
    let sys = image_system(ctx, &rs)?;
    let (compatibility, symmetry) = par::join(
        || compatibility_residual(&rs, &sys),
        || symmetry_residual(ctx, &sys),
    );
    Ok(Residuals { relations: rs, compatibility: compatibility?, symmetry: symmetry? })
}

#[derive(Clone, Debug)]
pub struct VerifyReport {
    pub orientation: Orientation,
    pub pass: bool,
    pub relations: [Expr; 2],
    pub rules: [RewriteRule; 2],
    pub compatibility: Expr,
    pub symmetry: Expr,
    pub assumptions: Vec<Expr>,
    /// A second attempt with a raised order bound and reversed rule
    /// preference was made after a nonzero residual or an order overflow.
    pub retried: bool,
    pub elapsed: Duration,
}

fn report(ctx: &EquationContext, r: Residuals, retried: bool, start: Instant) -> VerifyReport {
    let mut assumptions = ctx.seed().assumptions();
    crate::jet::push_unique(&mut assumptions, r.relations.assumptions.iter().cloned());
    VerifyReport {
        orientation: r.relations.orientation,
        pass: r.is_zero(),
        relations: r.relations.relations.clone(),
        rules: r.relations.rules.clone(),
        compatibility: r.compatibility,
        symmetry: r.symmetry,
        assumptions,
        retried,
        elapsed: start.elapsed(),
    }
}

/// Both residuals for `twist`; PASS iff both are exactly zero. A nonzero
/// residual or an order overflow is retried once with the order bound
/// raised by one and the opposite preference among overlapping rules.
pub fn verify(ctx: &EquationContext, pair: &LaxPair, twist: &TwistRelations) -> Result<VerifyReport> {
    let start = Instant::now();
    twist.validate()?;
    let first = match residuals(ctx, pair, twist) {
        Ok(r) if r.is_zero() => return Ok(report(ctx, r, false, start)),
        Ok(r) => Some(r),
        Err(Error::OrderOverflow { .. }) => None,
        Err(e) => return Err(e),
    };
    let wider = ctx.variant(ctx.max_order() + 1, true);
    match (residuals(&wider, pair, twist), first) {
        (Ok(r), _) => Ok(report(&wider, r, true, start)),
        (Err(_), Some(r)) => Ok(report(ctx, r, true, start)),
        (Err(e), None) => Err(e),
    }
}

/// `k` levels of the untwisted chain `X¹_i(ψ_{j+1}) = X⁰_i(ψ_j)`, each
/// expressed with `ψ_j` in the seed role and `ψ_{j+1}` in the image role.
pub fn hierarchy_relations(pair: &LaxPair, k: usize) -> Result<Vec<[Expr; 2]>> {
    if k == 0 {
        return Err(Error::Usage("hierarchy needs k >= 1".into()));
    }
    let level = relation_exprs(pair, &TwistRelations::zero(Orientation::Forward));
    Ok(vec![level; k])
}

/// Renders `e` with the seed and image unknowns renamed, e.g. to `psi1`
/// and `psi2`.
pub fn rename_unknowns(e: &Expr, seed: &str, image: &str) -> String {
    let text = e.to_string();
    let mut out = String::with_capacity(text.len());
    let chars: Vec<char> = text.chars().collect();
    let mut i = 0;
    while i < chars.len() {
        let starts_word = i == 0 || !(chars[i - 1].is_alphanumeric() || chars[i - 1] == '_');
        if starts_word && chars[i] == 'U' {
            let is_image = chars.get(i + 1) == Some(&'t');
            let name_end = if is_image { i + 2 } else { i + 1 };
            let ends_word = chars
                .get(name_end)
                .is_none_or(|c| !(c.is_alphanumeric()) || *c == '_');
            if ends_word {
                out.push_str(if is_image { image } else { seed });
                i = name_end;
                continue;
            }
        }
        out.push(chars[i]);
        i += 1;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symbol::{JetVar, MultiIndex, Var};

    pub(crate) fn var(c: char) -> Var {
        Var::new(c).unwrap()
    }

    pub(crate) fn jet(unknown: Unknown, s: &str) -> Expr {
        let vars: Vec<Var> = s.chars().map(var).collect();
        Expr::symbol(JetVar::new(unknown, MultiIndex::from_vars(&vars).unwrap()).symbol())
    }

    pub(crate) fn u(s: &str) -> Expr {
        jet(Unknown::Field, s)
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

    fn ratio(a: &str, b: &str) -> Expr {
        u(a).try_div(&u(b)).unwrap()
    }

    pub(crate) fn dfkn2() -> (EquationContext, LaxPair) {
        let f = &(&(&(&u("x") * &u("yz")) - &(&u("y") * &u("xz"))) - &(&u("x") * &u("xt")))
            + &(&u("t") * &u("xx"));
        let rk = ranking("tzyx");
        let ctx = EquationContext::new(&f, rk.clone(), vec![], 4, None).unwrap();
        let x1 = d('t').sub(&d('z').scale(&lam())).sub(&d('x').scale(&ratio("t", "x")));
        let x2 = d('y').sub(&d('x').scale(&(&lam() + &ratio("y", "x"))));
        (ctx, LaxPair::new([x1, x2], &rk).unwrap())
    }

    pub(crate) fn dfkn2_twist() -> TwistRelations {
        let mut t = TwistRelations::zero(Orientation::Forward);
        t.f[0][1] = -&ratio("xz", "x");
        t.f[1][1] = -&ratio("xx", "x");
        t
    }

    #[test]
    fn dfkn2_relations_match_printed_form() {
        let (ctx, pair) = dfkn2();
        let rs = build_relations(&pair, &dfkn2_twist(), &ctx).unwrap();
        let image = |s: &str| jet(Unknown::Image, s);
        let seed = |s: &str| jet(Unknown::Seed, s);
        let e1 = &(&(&image("z") - &(&ratio("xz", "x") * &image(""))) - &seed("t")) + &(&ratio("t", "x") * &seed("x"));
        let e2 = &(&(&image("x") - &(&ratio("xx", "x") * &image(""))) - &seed("y")) + &(&ratio("y", "x") * &seed("x"));
        assert_eq!(rs.relations, [e1, e2]);
        assert_eq!(rs.rules[0].lhs.to_string(), "Ut_z");
        assert_eq!(rs.rules[1].lhs.to_string(), "Ut_x");
    }

    #[test]
    fn zero_twist_has_no_undifferentiated_terms() {
        let (_, pair) = dfkn2();
        for e in relation_exprs(&pair, &TwistRelations::zero(Orientation::Forward)) {
            assert!(!e.contains(Symbol::jet(Unknown::Image, MultiIndex::empty())));
            assert!(!e.contains(Symbol::jet(Unknown::Seed, MultiIndex::empty())));
        }
    }

    #[test]
    fn known_twist_verifies() {
        let (ctx, pair) = dfkn2();
        let r = verify(&ctx, &pair, &dfkn2_twist()).unwrap();
        assert!(r.compatibility.is_zero(), "{}", r.compatibility);
        assert!(r.symmetry.is_zero(), "{}", r.symmetry);
        assert!(r.pass && !r.retried);
        assert!(r.assumptions.contains(&u("x")));
    }

    #[test]
    fn dfkn2_zero_twist_fails() {
        let (ctx, pair) = dfkn2();
        let r = verify(&ctx, &pair, &TwistRelations::zero(Orientation::Forward)).unwrap();
        assert!(!r.pass);
        assert!(r.retried);
    }

    #[test]
    fn dfkn2_flipped_sign_fails() {
        let (ctx, pair) = dfkn2();
        let mut t = dfkn2_twist();
        t.f[0][1] = ratio("xz", "x");
        assert!(!verify(&ctx, &pair, &t).unwrap().pass);
    }

    #[test]
    fn residuals_are_linear_in_the_unknowns() {
        let (ctx, pair) = dfkn2();
        let r = residuals(&ctx, &pair, &TwistRelations::zero(Orientation::Forward)).unwrap();
        for e in [&r.compatibility, &r.symmetry] {
            for (m, _) in e.num().terms() {
                let degree: u32 = m
                    .factors()
                    .iter()
                    .filter(|(s, _)| s.as_jet().is_some_and(|j| j.unknown != Unknown::Field))
                    .map(|(_, k)| k)
                    .sum();
                assert_eq!(degree, 1);
            }
            assert!(!e.den().symbols().iter().any(|s| s.as_jet().is_some_and(|j| j.unknown != Unknown::Field)));
        }
    }

    #[test]
    fn linear_equation_trivial_pair() {
        let f = u("xy");
        let rk = ranking("zyx");
        let ctx = EquationContext::new(&f, rk.clone(), vec![], 4, None).unwrap();
        let shift = &lam() - &Expr::one();
        let a = d('x').scale(&shift);
        let b = d('y').scale(&shift);
        let pair = LaxPair::new([a, b], &rk).unwrap();
        let r = residuals(&ctx, &pair, &TwistRelations::zero(Orientation::Forward)).unwrap();
        assert!(r.symmetry.is_zero(), "{}", r.symmetry);
    }

    #[test]
    fn hierarchy_levels() {
        let (_, pair) = dfkn2();
        let levels = hierarchy_relations(&pair, 2).unwrap();
        assert_eq!(levels.len(), 2);
        assert_eq!(levels[0], relation_exprs(&pair, &TwistRelations::zero(Orientation::Forward)));
        assert!(hierarchy_relations(&pair, 0).is_err());
    }

    #[test]
    fn rename_seed_and_image() {
        let e = &jet(Unknown::Image, "z") - &(&u("t") * &jet(Unknown::Seed, "x"));
        assert_eq!(rename_unknowns(&e, "psi0", "psi1"), "psi1_z - u_t*psi0_x");
    }
}
