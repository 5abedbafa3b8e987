//! Canonical rational expressions.
//!
//! An [`Expr`] is a quotient of polynomials kept in canonical form:
//! numerator and denominator coprime, denominator monic under the global
//! monomial order, zero represented as `0/1`. Two expressions are equal as
//! rational functions exactly when they are structurally equal.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_traits::{One, Zero};
use smallvec::SmallVec;

use crate::error::{Error, Result};
use crate::kernel::gcd::gcd;
use crate::kernel::poly::{q, Monomial, Poly, Term, Q};
use crate::par;
use crate::symbol::Symbol;

#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Expr {
    num: Poly,
    den: Poly,
}

impl Default for Expr {
    fn default() -> Self {
        Expr::zero()
    }
}

impl Expr {
    /// Builds `num / den` in canonical form.
    pub fn new(num: Poly, den: Poly) -> Result<Expr> {
        if den.is_zero() {
            return Err(Error::DegenerateExpression(format!(
                "zero denominator under numerator {num}"
            )));
        }
        if num.is_zero() {
            return Ok(Expr::zero());
        }
        if den.is_constant() {
            let c = den.leading_coeff().recip();
            return Ok(Expr {
                num: num.scale(&c),
                den: Poly::one(),
            });
        }
        let g = gcd(&num, &den);
        let (num, den) = if g.is_one() {
            (num, den)
        } else {
            (
                num.div_exact(&g).expect("gcd divides numerator"),
                den.div_exact(&g).expect("gcd divides denominator"),
            )
        };
        Ok(Expr::monic_den(num, den))
    }

    fn monic_den(num: Poly, den: Poly) -> Expr {
        let lc = den.leading_coeff();
        if lc.is_one() {
            Expr { num, den }
        } else {
            let inv = lc.recip();
            Expr {
                num: num.scale(&inv),
                den: den.scale(&inv),
            }
        }
    }

    pub fn zero() -> Expr {
        Expr {
            num: Poly::zero(),
            den: Poly::one(),
        }
    }

    pub fn one() -> Expr {
        Expr::int(1)
    }

    pub fn int(n: i64) -> Expr {
        Expr::from_poly(Poly::int(n))
    }

    pub fn rational(c: Q) -> Expr {
        Expr::from_poly(Poly::constant(c))
    }

    pub fn symbol(s: Symbol) -> Expr {
        Expr::from_poly(Poly::var(s))
    }

    pub fn from_poly(p: Poly) -> Expr {
        Expr {
            num: p,
            den: Poly::one(),
        }
    }

    pub fn num(&self) -> &Poly {
        &self.num
    }

    pub fn den(&self) -> &Poly {
        &self.den
    }

    pub fn is_zero(&self) -> bool {
        self.num.is_zero()
    }

    pub fn is_one(&self) -> bool {
        self.num.is_one() && self.den.is_one()
    }

    pub fn is_polynomial(&self) -> bool {
        self.den.is_one()
    }

    pub fn constant_value(&self) -> Option<Q> {
        if self.den.is_one() {
            self.num.constant_value()
        } else {
            None
        }
    }

    /// Distinct symbols of numerator and denominator, ascending.
    pub fn symbols(&self) -> Vec<Symbol> {
        let mut s = self.num.symbols();
        s.extend(self.den.symbols());
        s.sort_unstable();
        s.dedup();
        s
    }

    pub fn contains(&self, s: Symbol) -> bool {
        self.num.contains(s) || self.den.contains(s)
    }

    pub fn contains_any(&self, pred: impl Fn(Symbol) -> bool) -> bool {
        self.symbols().into_iter().any(pred)
    }

    /// Idempotent re-canonicalization.
    pub fn normalize(&self) -> Result<Expr> {
        Expr::new(self.num.clone(), self.den.clone())
    }

    pub fn scale(&self, c: &Q) -> Expr {
        if c.is_zero() {
            return Expr::zero();
        }
        Expr {
            num: self.num.scale(c),
            den: self.den.clone(),
        }
    }

    pub fn mul_poly(&self, p: &Poly) -> Expr {
        let g = gcd(p, &self.den);
        let p = p.div_exact(&g).expect("gcd divides");
        let den = self.den.div_exact(&g).expect("gcd divides");
        Expr::monic_den(&self.num * &p, den)
    }

    pub fn recip(&self) -> Result<Expr> {
        if self.is_zero() {
            return Err(Error::DegenerateExpression("reciprocal of zero".into()));
        }
        Ok(Expr::monic_den(self.den.clone(), self.num.clone()))
    }

    pub fn try_div(&self, rhs: &Expr) -> Result<Expr> {
        Ok(self * &rhs.recip()?)
    }

    pub fn pow(&self, e: i32) -> Result<Expr> {
        if e >= 0 {
            Ok(Expr {
                num: self.num.pow(e as u32),
                den: self.den.pow(e as u32),
            })
        } else {
            self.recip()?.pow(-e)
        }
    }

    /// Formal partial derivative treating every other symbol as constant.
    pub fn partial_diff(&self, s: Symbol) -> Expr {
        self.apply_derivation(|t| Ok((t == s).then(Poly::one)))
            .expect("partial derivative is infallible")
    }

    /// Extends a derivation on symbols to the quotient.
    pub fn apply_derivation<F>(&self, delta: F) -> Result<Expr>
    where
        F: Fn(Symbol) -> Result<Option<Poly>>,
    {
        let dn = self.num.derivation(&delta)?;
        if self.den.is_one() {
            return Ok(Expr::from_poly(dn));
        }
        let dd = self.den.derivation(&delta)?;
        if dd.is_zero() {
            return Expr::new(dn, self.den.clone());
        }
        // (n/d)' = (n' (d/g) - n (d'/g)) / (d (d/g)) with g = gcd(d, d');
        // g is the bulk of what cancels, and is cheap when d is squarefree.
        let g = gcd(&self.den, &dd);
        let (dg, ddg) = if g.is_one() {
            (self.den.clone(), dd)
        } else {
            (self.den.div_exact(&g).expect("gcd divides"), dd.div_exact(&g).expect("gcd divides"))
        };
        let num = &(&dn * &dg) - &(&self.num * &ddg);
        Expr::new(num, &self.den * &dg)
    }

    /// Simultaneous substitution followed by canonicalization. Bindings must
    /// be acyclic: no bound symbol may be reachable from its own image.
    pub fn substitute(&self, bindings: &BTreeMap<Symbol, Expr>) -> Result<Expr> {
        check_acyclic(bindings)?;
        let binds: Vec<(Symbol, &Expr)> = bindings.iter().map(|(s, e)| (*s, e)).collect();
        self.substitute_unchecked(&binds)
    }

    /// Substitution without the cycle check. Symbols not present are skipped.
    pub fn substitute_unchecked(&self, binds: &[(Symbol, &Expr)]) -> Result<Expr> {
        let binds: Vec<(Symbol, &Expr)> =
            binds.iter().filter(|(s, _)| self.contains(*s)).copied().collect();
        if binds.is_empty() {
            return Ok(self.clone());
        }
        let (ns, dn) = subst_poly(&self.num, &binds);
        let (ds, dd) = subst_poly(&self.den, &binds);
        let mut num_extra = Poly::one();
        let mut den_extra = Poly::one();
        for (j, (_, e)) in binds.iter().enumerate() {
            if e.den.is_one() {
                continue;
            }
            match dd[j].cmp(&dn[j]) {
                std::cmp::Ordering::Greater => num_extra = &num_extra * &e.den.pow(dd[j] - dn[j]),
                std::cmp::Ordering::Less => den_extra = &den_extra * &e.den.pow(dn[j] - dd[j]),
                std::cmp::Ordering::Equal => {}
            }
        }
        let num = if num_extra.is_one() { ns } else { &ns * &num_extra };
        let den = if den_extra.is_one() { ds } else { &ds * &den_extra };
        if den.is_zero() {
            return Err(Error::DegenerateExpression(
                "substitution produced a zero denominator".into(),
            ));
        }
        Expr::new(num, den)
    }

    /// Exact evaluation; `Error::Pole` when the denominator vanishes.
    pub fn eval<F>(&self, value: F) -> Result<Q>
    where
        F: Fn(Symbol) -> Option<Q>,
    {
        let d = self.den.eval(&value)?;
        if d.is_zero() {
            return Err(Error::Pole);
        }
        Ok(self.num.eval(&value)? / d)
    }

    pub fn eval_map(&self, point: &HashMap<Symbol, Q>) -> Result<Q> {
        self.eval(|s| point.get(&s).cloned())
    }

    /// Number of terms in numerator plus denominator; a size measure.
    pub fn size(&self) -> usize {
        self.num.len() + self.den.len()
    }
}

fn check_acyclic(bindings: &BTreeMap<Symbol, Expr>) -> Result<()> {
    // 0 = unvisited, 1 = on stack, 2 = done
    fn visit(
        s: Symbol,
        bindings: &BTreeMap<Symbol, Expr>,
        state: &mut BTreeMap<Symbol, u8>,
    ) -> Result<()> {
        match state.get(&s) {
            Some(1) => return Err(Error::CyclicBindings(s.name())),
            Some(2) => return Ok(()),
            _ => {}
        }
        state.insert(s, 1);
        if let Some(e) = bindings.get(&s) {
            for t in e.symbols() {
                if bindings.contains_key(&t) {
                    visit(t, bindings, state)?;
                }
            }
        }
        state.insert(s, 2);
        Ok(())
    }
    let mut state = BTreeMap::new();
    for &s in bindings.keys() {
        visit(s, bindings, &mut state)?;
    }
    Ok(())
}

type ExpKey = SmallVec<[u32; 4]>;

/// Substitutes into a polynomial, returning the numerator and the exponent
/// of each binding's denominator that the result must be divided by.
fn subst_poly(p: &Poly, binds: &[(Symbol, &Expr)]) -> (Poly, Vec<u32>) {
    let degs: Vec<u32> = binds.iter().map(|(s, _)| p.degree_in(*s)).collect();
    if degs.iter().all(|&d| d == 0) {
        return (p.clone(), degs);
    }
    let mut groups: HashMap<ExpKey, Vec<Term>> = HashMap::new();
    for (m, c) in p.terms() {
        let mut key = ExpKey::with_capacity(binds.len());
        let mut rest = Vec::with_capacity(m.factors().len());
        for &(s, e) in m.factors() {
            if binds.iter().any(|(b, _)| *b == s) {
                continue;
            }
            rest.push((s, e));
        }
        for (s, _) in binds {
            key.push(m.degree(*s));
        }
        groups
            .entry(key)
            .or_default()
            .push((Monomial::from_factors(rest), c.clone()));
    }
    let num_pows: Vec<Vec<Poly>> = binds
        .iter()
        .zip(&degs)
        .map(|((_, e), &d)| powers(&e.num, d))
        .collect();
    let den_pows: Vec<Vec<Poly>> = binds
        .iter()
        .zip(&degs)
        .map(|((_, e), &d)| powers(&e.den, d))
        .collect();
    let groups: Vec<(ExpKey, Vec<Term>)> = groups.into_iter().collect();
    let parts = par::map(&groups, |(key, terms)| {
        let mut factor = Poly::from_terms(terms.clone());
        for (j, &e) in key.iter().enumerate() {
            if e > 0 {
                factor = &factor * &num_pows[j][e as usize];
            }
            let de = degs[j] - e;
            if de > 0 && !den_pows[j][1].is_one() {
                factor = &factor * &den_pows[j][de as usize];
            }
        }
        factor
    });
    (Poly::sum(parts), degs)
}

fn powers(p: &Poly, d: u32) -> Vec<Poly> {
    let mut out = Vec::with_capacity(d as usize + 1);
    out.push(Poly::one());
    for k in 1..=d as usize {
        let next = &out[k - 1] * p;
        out.push(next);
    }
    out
}

impl Add for &Expr {
    type Output = Expr;
    fn add(self, rhs: &Expr) -> Expr {
        if self.is_zero() {
            return rhs.clone();
        }
        if rhs.is_zero() {
            return self.clone();
        }
        if self.den == rhs.den {
            if self.den.is_one() {
                return Expr::from_poly(&self.num + &rhs.num);
            }
            return Expr::new(&self.num + &rhs.num, self.den.clone()).expect("nonzero denominator");
        }
        let g = gcd(&self.den, &rhs.den);
        let l1 = self.den.div_exact(&g).expect("gcd divides");
        let l2 = rhs.den.div_exact(&g).expect("gcd divides");
        let num = &(&self.num * &l2) + &(&rhs.num * &l1);
        let den = &self.den * &l2;
        if g.is_one() {
            return Expr::monic_den(num, den);
        }
        let h = gcd(&num, &g);
        if h.is_one() {
            Expr::monic_den(num, den)
        } else {
            Expr::monic_den(
                num.div_exact(&h).expect("gcd divides"),
                den.div_exact(&h).expect("gcd divides"),
            )
        }
    }
}

impl Sub for &Expr {
    type Output = Expr;
    fn sub(self, rhs: &Expr) -> Expr {
        self + &(-rhs)
    }
}

impl Neg for &Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        Expr {
            num: -&self.num,
            den: self.den.clone(),
        }
    }
}

impl Mul for &Expr {
    type Output = Expr;
    fn mul(self, rhs: &Expr) -> Expr {
        if self.is_zero() || rhs.is_zero() {
            return Expr::zero();
        }
        if self.den.is_one() && rhs.den.is_one() {
            return Expr::from_poly(&self.num * &rhs.num);
        }
        let g1 = gcd(&self.num, &rhs.den);
        let g2 = gcd(&rhs.num, &self.den);
        let n1 = self.num.div_exact(&g1).expect("gcd divides");
        let d2 = rhs.den.div_exact(&g1).expect("gcd divides");
        let n2 = rhs.num.div_exact(&g2).expect("gcd divides");
        let d1 = self.den.div_exact(&g2).expect("gcd divides");
        Expr::monic_den(&n1 * &n2, &d1 * &d2)
    }
}

macro_rules! forward_owned {
    ($tr:ident, $m:ident) => {
        impl $tr for Expr {
            type Output = Expr;
            fn $m(self, rhs: Expr) -> Expr {
                (&self).$m(&rhs)
            }
        }
    };
}
forward_owned!(Add, add);
forward_owned!(Sub, sub);
forward_owned!(Mul, mul);

impl Neg for Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        -&self
    }
}

impl std::iter::Sum for Expr {
    fn sum<I: Iterator<Item = Expr>>(iter: I) -> Expr {
        iter.fold(Expr::zero(), |a, b| &a + &b)
    }
}

impl From<Poly> for Expr {
    fn from(p: Poly) -> Expr {
        Expr::from_poly(p)
    }
}

impl From<Symbol> for Expr {
    fn from(s: Symbol) -> Expr {
        Expr::symbol(s)
    }
}

impl From<i64> for Expr {
    fn from(n: i64) -> Expr {
        Expr::int(n)
    }
}

fn needs_parens_num(p: &Poly) -> bool {
    p.len() > 1
}

fn needs_parens_den(p: &Poly) -> bool {
    match p.terms() {
        [(m, c)] => !c.is_one() || m.factors().len() > 1,
        _ => true,
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.den.is_one() {
            return write!(f, "{}", self.num);
        }
        if needs_parens_num(&self.num) {
            write!(f, "({})", self.num)?;
        } else {
            write!(f, "{}", self.num)?;
        }
        if needs_parens_den(&self.den) {
            write!(f, "/({})", self.den)
        } else {
            write!(f, "/{}", self.den)
        }
    }
}

impl fmt::Debug for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

/// Convenience: the integer `n` as a rational.
pub fn rational_int(n: i64) -> Q {
    q(n)
}
