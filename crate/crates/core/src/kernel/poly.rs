//! Sparse multivariate polynomials over the rationals.
//!
//! Terms are kept sorted in descending lexicographic order of their
//! monomials (see [`Monomial`]), with no zero coefficients, so structural
//! equality is mathematical equality.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use smallvec::SmallVec;

use crate::error::{Error, Result};
use crate::par;
use crate::symbol::Symbol;

/// Exact rational coefficient.
pub type Q = BigRational;

pub fn q(n: i64) -> Q {
    Q::from_integer(BigInt::from(n))
}

pub fn q_frac(n: i64, d: i64) -> Q {
    Q::new(BigInt::from(n), BigInt::from(d))
}

/// A power product. Factors are sorted by descending symbol and carry
/// positive exponents, which makes the derived `Ord` the lexicographic
/// monomial order with respect to the global symbol order.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Monomial(SmallVec<[(Symbol, u32); 4]>);

impl Monomial {
    pub fn one() -> Monomial {
        Monomial(SmallVec::new())
    }

    pub fn var(s: Symbol, exp: u32) -> Monomial {
        if exp == 0 {
            Monomial::one()
        } else {
            Monomial(smallvec::smallvec![(s, exp)])
        }
    }

    pub fn is_one(&self) -> bool {
        self.0.is_empty()
    }

    pub fn factors(&self) -> &[(Symbol, u32)] {
        &self.0
    }

    pub fn degree(&self, s: Symbol) -> u32 {
        self.0
            .iter()
            .find(|(t, _)| *t == s)
            .map_or(0, |&(_, e)| e)
    }

    pub fn total_degree(&self) -> u32 {
        self.0.iter().map(|&(_, e)| e).sum()
    }

    pub fn mul(&self, other: &Monomial) -> Monomial {
        let (a, b) = (&self.0, &other.0);
        let mut out = SmallVec::with_capacity(a.len() + b.len());
        let (mut i, mut j) = (0, 0);
        while i < a.len() && j < b.len() {
            match a[i].0.cmp(&b[j].0) {
                Ordering::Greater => {
                    out.push(a[i]);
                    i += 1;
                }
                Ordering::Less => {
                    out.push(b[j]);
                    j += 1;
                }
                Ordering::Equal => {
                    out.push((a[i].0, a[i].1 + b[j].1));
                    i += 1;
                    j += 1;
                }
            }
        }
        out.extend_from_slice(&a[i..]);
        out.extend_from_slice(&b[j..]);
        Monomial(out)
    }

    /// `self / other` when `other` divides `self`.
    pub fn div(&self, other: &Monomial) -> Option<Monomial> {
        let mut out = SmallVec::with_capacity(self.0.len());
        let mut j = 0;
        for &(s, e) in &self.0 {
            if j < other.0.len() && other.0[j].0 == s {
                let f = other.0[j].1;
                if f > e {
                    return None;
                }
                if e > f {
                    out.push((s, e - f));
                }
                j += 1;
            } else if j < other.0.len() && other.0[j].0 > s {
                return None;
            } else {
                out.push((s, e));
            }
        }
        (j == other.0.len()).then_some(Monomial(out))
    }

    pub fn gcd(&self, other: &Monomial) -> Monomial {
        Monomial(
            self.0
                .iter()
                .filter_map(|&(s, e)| {
                    let f = other.degree(s);
                    (f > 0).then_some((s, e.min(f)))
                })
                .collect(),
        )
    }

    /// Splits off the power of `s`.
    pub fn split(&self, s: Symbol) -> (Monomial, u32) {
        let mut e = 0;
        let rest = self
            .0
            .iter()
            .filter(|&&(t, d)| {
                if t == s {
                    e = d;
                    false
                } else {
                    true
                }
            })
            .copied()
            .collect();
        (Monomial(rest), e)
    }

    pub fn from_factors(mut factors: Vec<(Symbol, u32)>) -> Monomial {
        factors.retain(|&(_, e)| e > 0);
        factors.sort_by_key(|&(s, _)| std::cmp::Reverse(s));
        let mut out: SmallVec<[(Symbol, u32); 4]> = SmallVec::new();
        for (s, e) in factors {
            match out.last_mut() {
                Some(last) if last.0 == s => last.1 += e,
                _ => out.push((s, e)),
            }
        }
        Monomial(out)
    }
}

impl fmt::Debug for Monomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_one() {
            return f.write_str("1");
        }
        let parts: Vec<String> = self
            .0
            .iter()
            .rev()
            .map(|&(s, e)| if e == 1 { s.name() } else { format!("{}^{}", s.name(), e) })
            .collect();
        f.write_str(&parts.join("*"))
    }
}

pub type Term = (Monomial, Q);

#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct Poly {
    terms: Vec<Term>,
}

const PAR_MUL_THRESHOLD: usize = 40_000;

/// Sorts descending and merges equal monomials.
fn combine(mut terms: Vec<Term>) -> Vec<Term> {
    terms.sort_unstable_by(|a, b| b.0.cmp(&a.0));
    let mut out: Vec<Term> = Vec::with_capacity(terms.len());
    for (m, c) in terms {
        match out.last_mut() {
            Some(last) if last.0 == m => last.1 += c,
            _ => {
                if let Some(last) = out.last() {
                    if last.1.is_zero() {
                        out.pop();
                    }
                }
                out.push((m, c));
            }
        }
    }
    if out.last().is_some_and(|t| t.1.is_zero()) {
        out.pop();
    }
    out
}

fn merge_add(a: &[Term], b: &[Term]) -> Vec<Term> {
    let mut out = Vec::with_capacity(a.len() + b.len());
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        match a[i].0.cmp(&b[j].0) {
            Ordering::Greater => {
                out.push(a[i].clone());
                i += 1;
            }
            Ordering::Less => {
                out.push(b[j].clone());
                j += 1;
            }
            Ordering::Equal => {
                let c = &a[i].1 + &b[j].1;
                if !c.is_zero() {
                    out.push((a[i].0.clone(), c));
                }
                i += 1;
                j += 1;
            }
        }
    }
    out.extend_from_slice(&a[i..]);
    out.extend_from_slice(&b[j..]);
    out
}

impl Poly {
    pub fn zero() -> Poly {
        Poly { terms: Vec::new() }
    }

    pub fn one() -> Poly {
        Poly::constant(Q::one())
    }

    pub fn constant(c: Q) -> Poly {
        if c.is_zero() {
            Poly::zero()
        } else {
            Poly {
                terms: vec![(Monomial::one(), c)],
            }
        }
    }

    pub fn int(n: i64) -> Poly {
        Poly::constant(q(n))
    }

    pub fn var(s: Symbol) -> Poly {
        Poly::term(Monomial::var(s, 1), Q::one())
    }

    pub fn term(m: Monomial, c: Q) -> Poly {
        if c.is_zero() {
            Poly::zero()
        } else {
            Poly { terms: vec![(m, c)] }
        }
    }

    pub fn from_terms(terms: Vec<Term>) -> Poly {
        Poly {
            terms: combine(terms),
        }
    }

    pub fn terms(&self) -> &[Term] {
        &self.terms
    }

    pub fn into_terms(self) -> Vec<Term> {
        self.terms
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_one(&self) -> bool {
        self.terms.len() == 1 && self.terms[0].0.is_one() && self.terms[0].1.is_one()
    }

    pub fn is_constant(&self) -> bool {
        self.terms.is_empty() || (self.terms.len() == 1 && self.terms[0].0.is_one())
    }

    pub fn constant_value(&self) -> Option<Q> {
        match self.terms.as_slice() {
            [] => Some(Q::zero()),
            [(m, c)] if m.is_one() => Some(c.clone()),
            _ => None,
        }
    }

    pub fn leading(&self) -> Option<&Term> {
        self.terms.first()
    }

    pub fn leading_coeff(&self) -> Q {
        self.terms.first().map_or_else(Q::zero, |t| t.1.clone())
    }

    /// Distinct symbols, ascending.
    pub fn symbols(&self) -> Vec<Symbol> {
        let mut out: Vec<Symbol> = self
            .terms
            .iter()
            .flat_map(|(m, _)| m.factors().iter().map(|&(s, _)| s))
            .collect();
        out.sort_unstable();
        out.dedup();
        out
    }

    pub fn contains(&self, s: Symbol) -> bool {
        self.terms.iter().any(|(m, _)| m.degree(s) > 0)
    }

    pub fn degree_in(&self, s: Symbol) -> u32 {
        self.terms.iter().map(|(m, _)| m.degree(s)).max().unwrap_or(0)
    }

    pub fn total_degree(&self) -> u32 {
        self.terms.iter().map(|(m, _)| m.total_degree()).max().unwrap_or(0)
    }

    pub fn scale(&self, c: &Q) -> Poly {
        if c.is_zero() {
            return Poly::zero();
        }
        Poly {
            terms: self.terms.iter().map(|(m, d)| (m.clone(), d * c)).collect(),
        }
    }

    pub fn mul_term(&self, m: &Monomial, c: &Q) -> Poly {
        if c.is_zero() {
            return Poly::zero();
        }
        Poly {
            terms: self.terms.iter().map(|(n, d)| (n.mul(m), d * c)).collect(),
        }
    }

    /// Leading coefficient made 1.
    pub fn monic(&self) -> Poly {
        match self.terms.first() {
            None => Poly::zero(),
            Some((_, c)) if c.is_one() => self.clone(),
            Some((_, c)) => self.scale(&c.recip()),
        }
    }

    pub fn pow(&self, mut e: u32) -> Poly {
        let mut base = self.clone();
        let mut acc = Poly::one();
        while e > 0 {
            if e & 1 == 1 {
                acc = &acc * &base;
            }
            e >>= 1;
            if e > 0 {
                base = &base * &base;
            }
        }
        acc
    }

    /// Formal partial derivative.
    pub fn diff(&self, s: Symbol) -> Poly {
        let terms = self
            .terms
            .iter()
            .filter_map(|(m, c)| {
                let (rest, e) = m.split(s);
                (e > 0).then(|| (rest.mul(&Monomial::var(s, e - 1)), c * q(e as i64)))
            })
            .collect();
        Poly::from_terms(terms)
    }

    /// Applies the derivation that maps each symbol `s` to `delta(s)`
    /// (`None` meaning zero), extended by the Leibniz rule.
    pub fn derivation<F>(&self, delta: F) -> Result<Poly>
    where
        F: Fn(Symbol) -> Result<Option<Poly>>,
    {
        let mut cache: Vec<(Symbol, Option<Poly>)> = Vec::new();
        for s in self.symbols() {
            cache.push((s, delta(s)?));
        }
        let mut out = Vec::new();
        for (m, c) in &self.terms {
            for &(s, e) in m.factors() {
                let Some(ds) = cache.iter().find(|(t, _)| *t == s).and_then(|(_, d)| d.as_ref())
                else {
                    continue;
                };
                let (rest, _) = m.split(s);
                let rest = rest.mul(&Monomial::var(s, e - 1));
                let coeff = c * q(e as i64);
                for (dm, dc) in &ds.terms {
                    out.push((rest.mul(dm), &coeff * dc));
                }
            }
        }
        Ok(Poly::from_terms(out))
    }

    /// Exact quotient `self / d`, or `None` when `d` does not divide `self`.
    pub fn div_exact(&self, d: &Poly) -> Option<Poly> {
        if d.is_zero() {
            return None;
        }
        if self.is_zero() {
            return Some(Poly::zero());
        }
        if d.terms.len() == 1 {
            let (dm, dc) = &d.terms[0];
            let inv = dc.recip();
            let mut terms = Vec::with_capacity(self.terms.len());
            for (m, c) in &self.terms {
                terms.push((m.div(dm)?, c * &inv));
            }
            return Some(Poly { terms });
        }
        let (dm, dc) = &d.terms[0];
        let inv = dc.recip();
        let mut rem = self.clone();
        let mut quotient = Vec::new();
        while let Some((rm, rc)) = rem.terms.first() {
            let qm = rm.div(dm)?;
            let qc = rc * &inv;
            rem = &rem - &d.mul_term(&qm, &qc);
            quotient.push((qm, qc));
        }
        Some(Poly {
            terms: combine(quotient),
        })
    }

    /// Greatest monomial dividing every term.
    pub fn monomial_content(&self) -> Monomial {
        let mut it = self.terms.iter();
        let Some((first, _)) = it.next() else {
            return Monomial::one();
        };
        let mut g = first.clone();
        for (m, _) in it {
            if g.is_one() {
                break;
            }
            g = g.gcd(m);
        }
        g
    }

    /// Dense coefficient list in `s`: `self = Σ out[k]·s^k`.
    pub fn as_univariate(&self, s: Symbol) -> Vec<Poly> {
        let deg = self.degree_in(s) as usize;
        let mut buckets: Vec<Vec<Term>> = vec![Vec::new(); deg + 1];
        for (m, c) in &self.terms {
            let (rest, e) = m.split(s);
            buckets[e as usize].push((rest, c.clone()));
        }
        buckets.into_iter().map(Poly::from_terms).collect()
    }

    pub fn from_univariate(coeffs: &[Poly], s: Symbol) -> Poly {
        let mut terms = Vec::new();
        for (k, c) in coeffs.iter().enumerate() {
            let m = Monomial::var(s, k as u32);
            terms.extend(c.terms.iter().map(|(n, d)| (n.mul(&m), d.clone())));
        }
        Poly::from_terms(terms)
    }

    /// Coefficient of `s^k`.
    pub fn coefficient(&self, s: Symbol, k: u32) -> Poly {
        let terms = self
            .terms
            .iter()
            .filter_map(|(m, c)| {
                let (rest, e) = m.split(s);
                (e == k).then(|| (rest, c.clone()))
            })
            .collect();
        Poly::from_terms(terms)
    }

    pub fn eval<F>(&self, value: F) -> Result<Q>
    where
        F: Fn(Symbol) -> Option<Q>,
    {
        let mut cache: Vec<(Symbol, Q)> = Vec::new();
        for s in self.symbols() {
            let v = value(s).ok_or_else(|| Error::Unbound(s.name()))?;
            cache.push((s, v));
        }
        let lookup = |s: Symbol| &cache.iter().find(|(t, _)| *t == s).unwrap().1;
        let mut acc = Q::zero();
        for (m, c) in &self.terms {
            let mut t = c.clone();
            for &(s, e) in m.factors() {
                t *= num_traits::pow(lookup(s).clone(), e as usize);
            }
            acc += t;
        }
        Ok(acc)
    }

    /// Partial evaluation: replaces bound symbols by rational values.
    pub fn eval_partial<F>(&self, value: F) -> Poly
    where
        F: Fn(Symbol) -> Option<Q>,
    {
        let terms = self
            .terms
            .iter()
            .map(|(m, c)| {
                let mut coeff = c.clone();
                let mut rest = Vec::new();
                for &(s, e) in m.factors() {
                    match value(s) {
                        Some(v) => coeff *= num_traits::pow(v, e as usize),
                        None => rest.push((s, e)),
                    }
                }
                (Monomial::from_factors(rest), coeff)
            })
            .collect();
        Poly::from_terms(terms)
    }

    /// Sign of the leading coefficient.
    pub fn leading_is_negative(&self) -> bool {
        self.terms.first().is_some_and(|(_, c)| c.is_negative())
    }

    fn mul_impl(&self, other: &Poly) -> Poly {
        if self.is_zero() || other.is_zero() {
            return Poly::zero();
        }
        let (big, small) = if self.len() >= other.len() {
            (self, other)
        } else {
            (other, self)
        };
        if small.len() == 1 {
            let (m, c) = &small.terms[0];
            return big.mul_term(m, c);
        }
        // Multiplying by a monomial preserves the term order, so each
        // partial product is already sorted; merge them pairwise.
        let partial = |t: &Term| big.mul_term(&t.0, &t.1).terms;
        if big.len() * small.len() >= PAR_MUL_THRESHOLD && par::enabled() {
            let terms = par::map_reduce(
                &small.terms,
                Vec::new,
                partial,
                |a, b| merge_add(&a, &b),
            );
            return Poly { terms };
        }
        let mut layer: Vec<Vec<Term>> = small.terms.iter().map(partial).collect();
        while layer.len() > 1 {
            let mut next = Vec::with_capacity(layer.len().div_ceil(2));
            let mut it = layer.into_iter();
            while let Some(a) = it.next() {
                match it.next() {
                    Some(b) => next.push(merge_add(&a, &b)),
                    None => next.push(a),
                }
            }
            layer = next;
        }
        Poly {
            terms: layer.pop().unwrap_or_default(),
        }
    }

    /// Sum of many polynomials, merged as a balanced tree.
    pub fn sum(polys: Vec<Poly>) -> Poly {
        let mut layer: Vec<Vec<Term>> = polys.into_iter().map(|p| p.terms).collect();
        if layer.is_empty() {
            return Poly::zero();
        }
        while layer.len() > 1 {
            let mut next = Vec::with_capacity(layer.len().div_ceil(2));
            let mut it = layer.into_iter();
            while let Some(a) = it.next() {
                match it.next() {
                    Some(b) => next.push(merge_add(&a, &b)),
                    None => next.push(a),
                }
            }
            layer = next;
        }
        Poly {
            terms: layer.pop().unwrap(),
        }
    }
}

impl Add for &Poly {
    type Output = Poly;
    fn add(self, rhs: &Poly) -> Poly {
        Poly {
            terms: merge_add(&self.terms, &rhs.terms),
        }
    }
}

impl Sub for &Poly {
    type Output = Poly;
    fn sub(self, rhs: &Poly) -> Poly {
        self + &(-rhs)
    }
}

impl Neg for &Poly {
    type Output = Poly;
    fn neg(self) -> Poly {
        Poly {
            terms: self.terms.iter().map(|(m, c)| (m.clone(), -c)).collect(),
        }
    }
}

impl Mul for &Poly {
    type Output = Poly;
    fn mul(self, rhs: &Poly) -> Poly {
        self.mul_impl(rhs)
    }
}

fn fmt_coeff(c: &Q) -> String {
    if c.is_integer() {
        c.numer().to_string()
    } else {
        format!("{}/{}", c.numer(), c.denom())
    }
}

impl fmt::Display for Poly {
    /// Parseable text; factors print in ascending symbol order so that
    /// parameters and constants lead, e.g. `alpha*u_xy`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return f.write_str("0");
        }
        for (i, (m, c)) in self.terms.iter().enumerate() {
            let neg = c.is_negative();
            let abs = c.abs();
            if i == 0 {
                if neg {
                    f.write_str("-")?;
                }
            } else {
                f.write_str(if neg { " - " } else { " + " })?;
            }
            let factors: Vec<String> = m
                .factors()
                .iter()
                .rev()
                .map(|&(s, e)| if e == 1 { s.name() } else { format!("{}^{}", s.name(), e) })
                .collect();
            if factors.is_empty() {
                f.write_str(&fmt_coeff(&abs))?;
            } else if abs.is_one() {
                f.write_str(&factors.join("*"))?;
            } else {
                write!(f, "{}*{}", fmt_coeff(&abs), factors.join("*"))?;
            }
        }
        Ok(())
    }
}

impl fmt::Debug for Poly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}
