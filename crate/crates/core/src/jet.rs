//! Jet calculus: total derivatives, rankings, and normal forms modulo a
//! triangular system of solved relations and their prolongations.
//!
//! A [`RewriteSystem`] holds rules `jet ↦ rhs` whose right-hand sides are
//! strictly lower than their left-hand sides under a [`Ranking`]. Any jet
//! that is a derivative of a rule's left-hand side is reducible; its normal
//! form is obtained by prolonging the rule on demand. Normal forms are
//! memoized per system, and systems can be layered so that the rules for
//! `u` and `U` are shared between many systems for `Ũ`.

use std::cmp::Ordering;
use std::collections::HashMap;
use std::fmt;
use std::sync::{Arc, RwLock};
use std::time::{Duration, Instant};

use crate::error::{Error, Result};
use crate::kernel::{Expr, Poly};
use crate::par;
use crate::symbol::{JetVar, MultiIndex, Symbol, SymbolKind, Unknown, Var};

/// Total derivative `D_x` of a jet expression.
pub fn total_derivative(e: &Expr, x: Var) -> Result<Expr> {
    let xs = Symbol::independent(x);
    e.apply_derivation(|s| {
        if s == xs {
            return Ok(Some(Poly::one()));
        }
        match s.as_jet() {
            Some(j) => Ok(Some(Poly::var(j.derive(x)?.symbol()))),
            None => Ok(None),
        }
    })
}

/// Iterated total derivative `D^index`.
pub fn total_derivative_multi(e: &Expr, index: MultiIndex) -> Result<Expr> {
    index.vars().try_fold(e.clone(), |acc, v| total_derivative(&acc, v))
}

/// Total order on independent variables, extended to jets: first by
/// unknown (`Ũ > U > u`), then by derivative order, then lexicographically
/// on the variables of the multi-index sorted from greatest to least.
#[derive(Clone, PartialEq, Eq)]
pub struct Ranking {
    order: Vec<Var>,
    weight: [u8; 26],
}

impl Ranking {
    /// `order` lists the variables from greatest to least.
    pub fn new(order: Vec<Var>) -> Result<Ranking> {
        let mut weight = [0u8; 26];
        let n = order.len();
        for (i, v) in order.iter().enumerate() {
            if weight[v.slot()] != 0 {
                return Err(Error::Usage(format!("variable `{v}` ranked twice")));
            }
            weight[v.slot()] = (n - i) as u8;
        }
        Ok(Ranking { order, weight })
    }

    /// Declaration order, later variables ranking higher.
    pub fn from_declaration(vars: &[Var]) -> Result<Ranking> {
        Ranking::new(vars.iter().rev().copied().collect())
    }

    /// Variables from greatest to least.
    pub fn vars(&self) -> &[Var] {
        &self.order
    }

    pub fn contains(&self, v: Var) -> bool {
        self.weight[v.slot()] != 0
    }

    pub fn cmp_vars(&self, a: Var, b: Var) -> Ordering {
        self.weight[a.slot()].cmp(&self.weight[b.slot()])
    }

    fn sorted_weights(&self, m: MultiIndex) -> Vec<u8> {
        let mut w: Vec<u8> = m.vars().map(|v| self.weight[v.slot()]).collect();
        w.sort_unstable_by(|a, b| b.cmp(a));
        w
    }

    pub fn cmp_index(&self, a: MultiIndex, b: MultiIndex) -> Ordering {
        a.order()
            .cmp(&b.order())
            .then_with(|| self.sorted_weights(a).cmp(&self.sorted_weights(b)))
    }

    pub fn cmp_jets(&self, a: JetVar, b: JetVar) -> Ordering {
        a.unknown
            .cmp(&b.unknown)
            .then_with(|| self.cmp_index(a.index, b.index))
    }

    pub fn greatest<I: IntoIterator<Item = Var>>(&self, vars: I) -> Option<Var> {
        vars.into_iter().max_by(|a, b| self.cmp_vars(*a, *b))
    }

    pub fn least<I: IntoIterator<Item = Var>>(&self, vars: I) -> Option<Var> {
        vars.into_iter().min_by(|a, b| self.cmp_vars(*a, *b))
    }
}

impl fmt::Display for Ranking {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.order.iter().map(|v| v.to_string()).collect();
        f.write_str(&parts.join(" > "))
    }
}

impl fmt::Debug for Ranking {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RewriteRule {
    pub lhs: JetVar,
    pub rhs: Expr,
}

impl fmt::Display for RewriteRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} = {}", self.lhs, self.rhs)
    }
}

/// Nonzero factors implied by `p ≠ 0`: numeric content dropped, monomial
/// content split into its variables, the remaining factor made monic.
pub fn genericity_factors(p: &Poly) -> Vec<Expr> {
    if p.is_constant() {
        return Vec::new();
    }
    let m = p.monomial_content();
    let mut out: Vec<Expr> = m
        .factors()
        .iter()
        .rev()
        .map(|&(s, _)| Expr::symbol(s))
        .collect();
    let rest = p
        .div_exact(&Poly::term(m, num_traits::One::one()))
        .expect("content divides");
    if !rest.is_constant() {
        out.push(Expr::from_poly(rest.monic()));
    }
    out
}

pub(crate) fn push_unique(list: &mut Vec<Expr>, items: impl IntoIterator<Item = Expr>) {
    for e in items {
        if !list.contains(&e) {
            list.push(e);
        }
    }
}

/// Solves `relation = 0` for the ranking-greatest jet of `unknown` whose
/// coefficient does not vanish (modulo `lower`, when given). Returns the
/// rule and the nonzero factors it relies on.
pub fn solve_for_leading(
    relation: &Expr,
    unknown: Unknown,
    ranking: &Ranking,
    lower: Option<&RewriteSystem>,
) -> Result<(RewriteRule, Vec<Expr>)> {
    let relation = match lower {
        Some(sys) => sys.reduce(relation)?,
        None => relation.clone(),
    };
    if relation.den().symbols().iter().any(|s| s.is_jet_of(unknown)) {
        return Err(Error::NonlinearLeading(format!(
            "denominator of {relation} depends on {}-jets",
            unknown.name()
        )));
    }
    let num = relation.num();
    let mut candidates: Vec<JetVar> = num
        .symbols()
        .into_iter()
        .filter_map(|s| s.as_jet())
        .filter(|j| j.unknown == unknown)
        .collect();
    if candidates.is_empty() {
        return Err(Error::NoLeadingJet(format!(
            "{relation} has no {}-jets",
            unknown.name()
        )));
    }
    candidates.sort_by(|a, b| ranking.cmp_jets(*b, *a));
    for lead in candidates {
        let s = lead.symbol();
        if num.degree_in(s) > 1 {
            return Err(Error::NonlinearLeading(lead.to_string()));
        }
        let coeff = num.coefficient(s, 1);
        let coeff_expr = Expr::from_poly(coeff.clone());
        let reduced = match lower {
            Some(sys) => sys.reduce(&coeff_expr)?,
            None => coeff_expr,
        };
        if reduced.is_zero() {
            continue;
        }
        let rest = num.coefficient(s, 0);
        let rhs = Expr::new(-&rest, coeff.clone())?;
        let mut assumptions = genericity_factors(&coeff);
        push_unique(&mut assumptions, genericity_factors(relation.den()));
        return Ok((RewriteRule { lhs: lead, rhs }, assumptions));
    }
    Err(Error::NoLeadingJet(format!(
        "every {}-jet coefficient of {relation} vanishes",
        unknown.name()
    )))
}

/// A triangular system of solved relations with on-demand prolongation.
pub struct RewriteSystem {
    rules: Vec<RewriteRule>,
    parent: Option<Arc<RewriteSystem>>,
    ranking: Ranking,
    assumptions: Vec<Expr>,
    max_order: u32,
    prefer_last: bool,
    timeout: Option<Duration>,
    cache: RwLock<HashMap<JetVar, Expr>>,
}

impl fmt::Debug for RewriteSystem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("RewriteSystem")
            .field("rules", &self.rules)
            .field("ranking", &self.ranking)
            .field("max_order", &self.max_order)
            .field("parent", &self.parent)
            .finish()
    }
}

impl RewriteSystem {
    pub fn new(ranking: Ranking, max_order: u32) -> RewriteSystem {
        RewriteSystem {
            rules: Vec::new(),
            parent: None,
            ranking,
            assumptions: Vec::new(),
            max_order,
            prefer_last: false,
            timeout: None,
            cache: RwLock::new(HashMap::new()),
        }
    }

    /// An empty layer on top of `parent`, sharing its ranking and bounds.
    pub fn layered(parent: Arc<RewriteSystem>) -> RewriteSystem {
        let mut sys = RewriteSystem::new(parent.ranking.clone(), parent.max_order);
        sys.timeout = parent.timeout;
        sys.parent = Some(parent);
        sys
    }

    pub fn with_timeout(mut self, timeout: Option<Duration>) -> RewriteSystem {
        self.timeout = timeout;
        self
    }

    pub fn ranking(&self) -> &Ranking {
        &self.ranking
    }

    pub fn max_order(&self) -> u32 {
        self.max_order
    }

    pub fn rules(&self) -> &[RewriteRule] {
        &self.rules
    }

    pub fn parent(&self) -> Option<&Arc<RewriteSystem>> {
        self.parent.as_ref()
    }

    /// Genericity assumptions of this layer and all layers below.
    pub fn assumptions(&self) -> Vec<Expr> {
        let mut out = self
            .parent
            .as_ref()
            .map(|p| p.assumptions())
            .unwrap_or_default();
        push_unique(&mut out, self.assumptions.iter().cloned());
        out
    }

    pub fn add_assumptions(&mut self, items: impl IntoIterator<Item = Expr>) {
        push_unique(&mut self.assumptions, items);
    }

    /// Adds a solved rule after validating the ranking invariants.
    pub fn add_rule(&mut self, rule: RewriteRule, assumptions: Vec<Expr>) -> Result<()> {
        for s in rule.rhs.symbols() {
            if let Some(j) = s.as_jet() {
                if self.ranking.cmp_jets(j, rule.lhs) != Ordering::Less {
                    return Err(Error::DegeneratePair(format!(
                        "rule for {} has non-lower jet {} on the right",
                        rule.lhs, j
                    )));
                }
            }
        }
        for other in self.all_rules() {
            if other.lhs.unknown == rule.lhs.unknown
                && (other.lhs.index.divides(rule.lhs.index) || rule.lhs.index.divides(other.lhs.index))
            {
                return Err(Error::DegeneratePair(format!(
                    "leading jets {} and {} coincide or are derivatives of one another",
                    other.lhs, rule.lhs
                )));
            }
        }
        self.rules.push(rule);
        self.add_assumptions(assumptions);
        self.cache.write().unwrap().clear();
        Ok(())
    }

    fn all_rules(&self) -> Vec<&RewriteRule> {
        let mut out: Vec<&RewriteRule> = self.rules.iter().collect();
        let mut p = self.parent.as_deref();
        while let Some(sys) = p {
            out.extend(sys.rules.iter());
            p = sys.parent.as_deref();
        }
        out
    }

    /// A copy with a fresh cache, a different order bound and rule
    /// preference among overlapping left-hand sides.
    pub fn variant(&self, max_order: u32, prefer_last: bool) -> RewriteSystem {
        RewriteSystem {
            rules: self.rules.clone(),
            parent: self
                .parent
                .as_ref()
                .map(|p| Arc::new(p.variant(max_order, prefer_last))),
            ranking: self.ranking.clone(),
            assumptions: self.assumptions.clone(),
            max_order,
            prefer_last,
            timeout: self.timeout,
            cache: RwLock::new(HashMap::new()),
        }
    }

    fn own_rule_for(&self, jet: JetVar) -> Option<&RewriteRule> {
        let mut it = self
            .rules
            .iter()
            .filter(|r| r.lhs.unknown == jet.unknown && r.lhs.index.divides(jet.index));
        if self.prefer_last {
            it.next_back()
        } else {
            it.next()
        }
    }

    pub fn is_reducible(&self, jet: JetVar) -> bool {
        self.own_rule_for(jet).is_some()
            || self.parent.as_ref().is_some_and(|p| p.is_reducible(jet))
    }

    /// Normal form of a reducible jet, `None` for irreducible ones.
    pub fn normal_form(&self, jet: JetVar) -> Result<Option<Expr>> {
        self.nf(jet, self.deadline())
    }

    fn deadline(&self) -> Option<Instant> {
        self.timeout.map(|t| Instant::now() + t)
    }

    fn check_deadline(&self, deadline: Option<Instant>) -> Result<()> {
        match deadline {
            Some(d) if Instant::now() > d => Err(Error::Timeout(
                self.timeout.map_or(0, |t| t.as_secs()),
            )),
            _ => Ok(()),
        }
    }

    fn nf(&self, jet: JetVar, deadline: Option<Instant>) -> Result<Option<Expr>> {
        if let Some(e) = self.cache.read().unwrap().get(&jet) {
            return Ok(Some(e.clone()));
        }
        let Some(rule) = self.own_rule_for(jet) else {
            return match &self.parent {
                Some(p) => p.nf(jet, deadline),
                None => Ok(None),
            };
        };
        self.check_deadline(deadline)?;
        if jet.order() > self.max_order {
            return Err(Error::OrderOverflow {
                order: jet.order(),
                bound: self.max_order,
            });
        }
        let value = if jet == rule.lhs {
            self.reduce_inner(&rule.rhs, deadline)?
        } else {
            let extra = rule
                .lhs
                .index
                .quotient(jet.index)
                .expect("rule matches jet");
            let x = self
                .ranking
                .least(extra.nonzero_vars())
                .expect("proper derivative has a variable");
            let lower = JetVar::new(jet.unknown, jet.index.without(x).expect("x in index"));
            let base = self
                .nf(lower, deadline)?
                .expect("derivative of a rule lhs is reducible");
            self.reduce_inner(&total_derivative(&base, x)?, deadline)?
        };
        self.cache.write().unwrap().insert(jet, value.clone());
        Ok(Some(value))
    }

    fn reduce_inner(&self, e: &Expr, deadline: Option<Instant>) -> Result<Expr> {
        let targets: Vec<JetVar> = e
            .symbols()
            .into_iter()
            .filter(|s| s.kind() == SymbolKind::Jet)
            .filter_map(|s| s.as_jet())
            .filter(|&j| self.is_reducible(j))
            .collect();
        if targets.is_empty() {
            return Ok(e.clone());
        }
        let forms = par::map(&targets, |&j| self.nf(j, deadline));
        let mut values = Vec::with_capacity(forms.len());
        for f in forms {
            values.push(f?.expect("reducible jet has a normal form"));
        }
        let binds: Vec<(Symbol, &Expr)> = targets
            .iter()
            .zip(&values)
            .map(|(j, v)| (j.symbol(), v))
            .collect();
        e.substitute_unchecked(&binds)
    }

    /// Rewrites every reducible jet to its normal form. The result contains
    /// only irreducible jets.
    pub fn reduce(&self, e: &Expr) -> Result<Expr> {
        self.reduce_inner(e, self.deadline())
    }

    /// The differential consequence of `rule` obtained by applying `D_x`.
    pub fn prolong(&self, rule: &RewriteRule, x: Var) -> Result<RewriteRule> {
        let lhs = rule.lhs.derive(x)?;
        if lhs.order() > self.max_order {
            return Err(Error::OrderOverflow {
                order: lhs.order(),
                bound: self.max_order,
            });
        }
        let rhs = self.reduce(&total_derivative(&rule.rhs, x)?)?;
        Ok(RewriteRule { lhs, rhs })
    }
}
