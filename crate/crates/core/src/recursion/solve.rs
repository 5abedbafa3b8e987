//! Exact solution of determining systems: linear elimination over the
//! rational functions in the parameters, then bounded case splitting.

use std::collections::BTreeMap;

use crate::error::Result;
use crate::kernel::{Expr, Monomial, Poly};
use crate::symbol::Symbol;

use super::ansatz::{is_unknown, normalize_equation, DeterminingSystem};

#[derive(Clone, Debug, PartialEq)]
pub struct Solution {
    /// Solved unknowns; values may contain parameters and free unknowns.
    pub values: BTreeMap<Symbol, Expr>,
    /// Unknowns left undetermined.
    pub free: Vec<Symbol>,
}

#[derive(Clone, Debug, PartialEq, Default)]
pub struct SolveOutcome {
    pub solutions: Vec<Solution>,
    /// Branches examined, including the root.
    pub branches: usize,
    /// Branches abandoned, either at the bound or because no equation
    /// could be split further.
    pub unresolved: usize,
    pub truncated: bool,
}

#[derive(Clone, Debug)]
struct Branch {
    equations: Vec<Poly>,
    values: BTreeMap<Symbol, Expr>,
}

enum Step {
    Dead,
    Done,
    Assign(Symbol, Expr),
    Split(Vec<Branch>),
    Stuck,
}

fn unknowns_of(p: &Poly) -> Vec<Symbol> {
    p.symbols().into_iter().filter(|&s| is_unknown(s)).collect()
}

fn unknown_free(p: &Poly) -> bool {
    !p.symbols().into_iter().any(is_unknown)
}

impl Branch {
    fn assign(&mut self, c: Symbol, value: Expr) -> Result<()> {
        let binds = [(c, &value)];
        let mut eqs = Vec::with_capacity(self.equations.len());
        for e in &self.equations {
            let sub = Expr::from_poly(e.clone()).substitute_unchecked(&binds)?;
            if let Some(n) = normalize_equation(sub.num()) {
                if !eqs.contains(&n) {
                    eqs.push(n);
                }
            }
        }
        self.equations = eqs;
        for v in self.values.values_mut() {
            if v.contains(c) {
                *v = v.substitute_unchecked(&binds)?;
            }
        }
        self.values.insert(c, value);
        Ok(())
    }

    fn with_assignment(&self, c: Symbol, value: Expr) -> Result<Branch> {
        let mut b = self.clone();
        b.assign(c, value)?;
        Ok(b)
    }

    fn step(&self) -> Result<Step> {
        if self.equations.is_empty() {
            return Ok(Step::Done);
        }
        if self.equations.iter().any(unknown_free) {
            return Ok(Step::Dead);
        }
        // A variable entering linearly with a coefficient free of unknowns.
        let mut best: Option<(usize, Symbol, &Poly)> = None;
        for e in &self.equations {
            for c in unknowns_of(e) {
                if e.degree_in(c) != 1 {
                    continue;
                }
                let a = e.coefficient(c, 1);
                if !unknown_free(&a) {
                    continue;
                }
                let score = if a.is_constant() { 0 } else { 1_000_000 } + e.len() * 100 + a.len();
                if best.as_ref().is_none_or(|(s, ..)| score < *s) {
                    best = Some((score, c, e));
                }
            }
        }
        if let Some((_, c, e)) = best {
            let a = e.coefficient(c, 1);
            let b = e.coefficient(c, 0);
            return Ok(Step::Assign(c, Expr::new(-&b, a)?));
        }
        // A product of unknowns dividing an equation.
        for (k, e) in self.equations.iter().enumerate() {
            let content = e.monomial_content();
            let factors: Vec<Symbol> = content
                .factors()
                .iter()
                .map(|&(s, _)| s)
                .filter(|&s| is_unknown(s))
                .collect();
            if factors.is_empty() {
                continue;
            }
            let mut out = Vec::new();
            for &c in &factors {
                out.push(self.with_assignment(c, Expr::zero())?);
            }
            let m = Monomial::from_factors(
                content.factors().iter().copied().filter(|(s, _)| is_unknown(*s)).collect(),
            );
            let cofactor = e
                .div_exact(&Poly::term(m, num_traits::One::one()))
                .expect("content divides");
            let mut rest = self.clone();
            rest.equations[k] = cofactor;
            out.push(rest);
            return Ok(Step::Split(out));
        }
        // `a·c + b` with `a` involving other unknowns: `a = 0` or solve.
        let mut best: Option<(usize, Symbol, &Poly)> = None;
        for e in &self.equations {
            for c in unknowns_of(e) {
                if e.degree_in(c) == 1 {
                    let size = e.coefficient(c, 1).len() * 100 + e.len();
                    if best.as_ref().is_none_or(|(s, ..)| size < *s) {
                        best = Some((size, c, e));
                    }
                }
            }
        }
        let Some((_, c, e)) = best else {
            return Ok(Step::Stuck);
        };
        let a = e.coefficient(c, 1);
        let b = e.coefficient(c, 0);
        let mut vanishing = self.clone();
        if let Some(n) = normalize_equation(&a) {
            vanishing.equations.push(n);
        }
        let solved = self.with_assignment(c, Expr::new(-&b, a)?)?;
        Ok(Step::Split(vec![vanishing, solved]))
    }
}

/// All solution branches found within `bound` branches. Solutions are
/// valid for generic parameter values; callers re-verify them.
pub fn solve_determining(sys: &DeterminingSystem, bound: usize) -> Result<SolveOutcome> {
    let mut equations = Vec::new();
    for e in &sys.equations {
        if let Some(n) = normalize_equation(e) {
            if !equations.contains(&n) {
                equations.push(n);
            }
        }
    }
    let mut stack = vec![Branch { equations, values: BTreeMap::new() }];
    let mut out = SolveOutcome { branches: 1, ..Default::default() };
    while let Some(mut branch) = stack.pop() {
        loop {
            match branch.step()? {
                Step::Dead => break,
                Step::Stuck => {
                    out.unresolved += 1;
                    break;
                }
                Step::Done => {
                    let free = sys
                        .unknowns
                        .iter()
                        .copied()
                        .filter(|c| !branch.values.contains_key(c))
                        .collect();
                    let sol = Solution { values: branch.values.clone(), free };
                    if !out.solutions.contains(&sol) {
                        out.solutions.push(sol);
                    }
                    break;
                }
                Step::Assign(c, v) => branch.assign(c, v)?,
                Step::Split(children) => {
                    if out.branches + children.len() - 1 > bound {
                        out.truncated = true;
                        out.unresolved += children.len();
                        break;
                    }
                    out.branches += children.len() - 1;
                    let mut children = children;
                    branch = children.pop().expect("nonempty split");
                    stack.extend(children);
                }
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(n: u32) -> Poly {
        Poly::var(Symbol::unknown_constant(n))
    }

    fn system(equations: Vec<Poly>, n: u32) -> DeterminingSystem {
        DeterminingSystem { equations, unknowns: (1..=n).map(Symbol::unknown_constant).collect() }
    }

    #[test]
    fn inconsistent_system_has_no_solutions() {
        let sys = system(vec![c(1), &c(1) - &Poly::int(1)], 1);
        let out = solve_determining(&sys, 64).unwrap();
        assert!(out.solutions.is_empty());
        assert!(!out.truncated);
    }

    #[test]
    fn linear_system_with_free_unknown() {
        let sys = system(vec![&(&c(1) + &c(2)) - &Poly::int(3), &c(2) - &c(3)], 3);
        let out = solve_determining(&sys, 64).unwrap();
        assert_eq!(out.solutions.len(), 1);
        let s = &out.solutions[0];
        assert_eq!(s.free.len(), 1);
        let free = Expr::symbol(s.free[0]);
        let v1 = &s.values[&Symbol::unknown_constant(1)];
        assert_eq!(v1, &(&Expr::int(3) - &free));
    }

    #[test]
    fn parametric_coefficients() {
        let alpha = Poly::var(Symbol::parameter("alpha").unwrap());
        let sys = system(vec![&(&(&alpha + &Poly::int(1)) * &c(1)) - &alpha], 1);
        let out = solve_determining(&sys, 64).unwrap();
        let v = &out.solutions[0].values[&Symbol::unknown_constant(1)];
        assert_eq!(v, &Expr::new(alpha.clone(), &alpha + &Poly::int(1)).unwrap());
    }

    #[test]
    fn product_branches() {
        // c1*c2 = 0, c1 + c2 = 1
        let sys = system(vec![&c(1) * &c(2), &(&c(1) + &c(2)) - &Poly::int(1)], 2);
        let out = solve_determining(&sys, 64).unwrap();
        assert_eq!(out.solutions.len(), 2);
        for s in &out.solutions {
            assert!(s.free.is_empty());
        }
    }

    #[test]
    fn irreducible_quadratic_is_unresolved() {
        // leaves c1^2 = 2 after elimination
        let sys = system(vec![&(&c(1) * &c(2)) - &c(3), &c(3) - &Poly::int(2), &c(1) - &c(2)], 3);
        let out = solve_determining(&sys, 64).unwrap();
        assert!(out.solutions.is_empty());
        assert_eq!(out.unresolved, 1);
    }

    #[test]
    fn coefficient_split() {
        // c1*c2 + c2 = 0 with c1 + 1 either vanishing or not
        let sys = system(vec![&(&c(1) * &c(2)) + &c(2)], 2);
        let out = solve_determining(&sys, 64).unwrap();
        assert_eq!(out.solutions.len(), 2);
    }

    #[test]
    fn branch_bound_truncates() {
        let eqs: Vec<Poly> = (0..8).map(|k| &c(2 * k + 1) * &c(2 * k + 2)).collect();
        let out = solve_determining(&system(eqs, 16), 4).unwrap();
        assert!(out.truncated);
        assert!(out.unresolved > 0);
    }
}
