//! Multivariate polynomial gcd over the rationals.
//!
//! Recursive primitive remainder sequences, with the fast paths that
//! dominate jet-space work: monomial operands, monomial content, and
//! variables present in only one operand (which reduce the problem to the
//! content of the other operand with respect to that variable).

use crate::kernel::poly::{Monomial, Poly};
use crate::symbol::Symbol;

/// Monic gcd; `gcd(0, 0) = 0`.
pub fn gcd(a: &Poly, b: &Poly) -> Poly {
    if a.is_zero() {
        return b.monic();
    }
    if b.is_zero() {
        return a.monic();
    }
    if a.is_constant() || b.is_constant() {
        return Poly::one();
    }
    if a == b {
        return a.monic();
    }
    let ma = a.monomial_content();
    let mb = b.monomial_content();
    let gm = Poly::term(ma.gcd(&mb), num_traits::One::one());
    if a.len() == 1 || b.len() == 1 {
        return gm;
    }
    let a1 = strip(a, &ma);
    let b1 = strip(b, &mb);
    if a1.is_constant() || b1.is_constant() {
        return gm;
    }
    if certified_coprime(&a1, &b1) {
        return gm;
    }
    let g = gcd_primitive_free(&a1, &b1);
    (&g * &gm).monic()
}

/// Proves `gcd(a, b) = 1` by specialization modulo a prime `P`: for each
/// shared variable `x`, if the images in `F_P[x]` at a point where `lc_x(a)`
/// does not vanish are coprime, the true gcd has degree zero in `x`.
/// `false` means unproven.
fn certified_coprime(a: &Poly, b: &Poly) -> bool {
    let vb = b.symbols();
    let shared: Vec<Symbol> = a.symbols().into_iter().filter(|s| vb.binary_search(s).is_ok()).collect();
    if shared.is_empty() {
        return true;
    }
    let (Some(ma), Some(mb)) = (ModPoly::new(a), ModPoly::new(b)) else {
        return false;
    };
    shared.iter().all(|&x| {
        (0..3).any(|attempt| {
            let ua = ma.image(x, attempt);
            let ub = mb.image(x, attempt);
            ua.len() == a.degree_in(x) as usize + 1 && !ub.is_empty() && gcd_degree_mod(ua, ub) == 0
        })
    })
}

const P: u64 = (1 << 61) - 1;

fn mul_mod(a: u64, b: u64) -> u64 {
    ((a as u128 * b as u128) % P as u128) as u64
}

fn pow_mod(mut a: u64, mut e: u64) -> u64 {
    let mut r = 1;
    while e > 0 {
        if e & 1 == 1 {
            r = mul_mod(r, a);
        }
        a = mul_mod(a, a);
        e >>= 1;
    }
    r
}

fn inv_mod(a: u64) -> u64 {
    pow_mod(a, P - 2)
}

fn reduce_int(n: &num_bigint::BigInt) -> u64 {
    let r = n % num_bigint::BigInt::from(P);
    let r = if r.sign() == num_bigint::Sign::Minus { r + num_bigint::BigInt::from(P) } else { r };
    u64::try_from(r).expect("residue fits")
}

fn point_value(s: Symbol, attempt: u64) -> u64 {
    use std::hash::{Hash, Hasher};
    let mut h = std::collections::hash_map::DefaultHasher::new();
    (s, attempt).hash(&mut h);
    h.finish() % (P - 1) + 1
}

/// A polynomial with coefficients reduced modulo `P`.
struct ModPoly<'a> {
    poly: &'a Poly,
    coeffs: Vec<u64>,
}

impl<'a> ModPoly<'a> {
    /// `None` when some denominator is divisible by `P`.
    fn new(poly: &'a Poly) -> Option<ModPoly<'a>> {
        let mut coeffs = Vec::with_capacity(poly.len());
        for (_, c) in poly.terms() {
            let d = reduce_int(c.denom());
            if d == 0 {
                return None;
            }
            coeffs.push(mul_mod(reduce_int(c.numer()), inv_mod(d)));
        }
        Some(ModPoly { poly, coeffs })
    }

    /// Dense image in `F_P[x]`, every other symbol specialized.
    fn image(&self, x: Symbol, attempt: u64) -> Vec<u64> {
        let mut values: Vec<(Symbol, u64)> = Vec::new();
        let mut out: Vec<u64> = Vec::new();
        for ((m, _), &c) in self.poly.terms().iter().zip(&self.coeffs) {
            let mut t = c;
            let mut k = 0;
            for &(s, e) in m.factors() {
                if s == x {
                    k = e as usize;
                    continue;
                }
                let v = match values.iter().find(|(t, _)| *t == s) {
                    Some(&(_, v)) => v,
                    None => {
                        let v = point_value(s, attempt);
                        values.push((s, v));
                        v
                    }
                };
                t = mul_mod(t, pow_mod(v, e as u64));
            }
            if out.len() <= k {
                out.resize(k + 1, 0);
            }
            out[k] = (out[k] + t) % P;
        }
        while out.last() == Some(&0) {
            out.pop();
        }
        out
    }
}

/// Degree of the gcd of two nonzero dense polynomials over `F_P`.
fn gcd_degree_mod(mut a: Vec<u64>, mut b: Vec<u64>) -> usize {
    if a.len() < b.len() {
        std::mem::swap(&mut a, &mut b);
    }
    while !b.is_empty() {
        let inv = inv_mod(*b.last().expect("nonempty"));
        while a.len() >= b.len() {
            let f = mul_mod(*a.last().expect("nonempty"), inv);
            let shift = a.len() - b.len();
            for (k, &bk) in b.iter().enumerate() {
                a[k + shift] = (a[k + shift] + P - mul_mod(f, bk)) % P;
            }
            a.pop();
            while a.last() == Some(&0) {
                a.pop();
            }
        }
        std::mem::swap(&mut a, &mut b);
    }
    a.len() - 1
}

fn strip(p: &Poly, m: &Monomial) -> Poly {
    if m.is_one() {
        p.clone()
    } else {
        p.div_exact(&Poly::term(m.clone(), num_traits::One::one()))
            .expect("monomial content divides")
    }
}

/// gcd of a list, stopping early once it becomes constant.
pub fn gcd_many<'a, I>(polys: I) -> Poly
where
    I: IntoIterator<Item = &'a Poly>,
{
    let mut g = Poly::zero();
    for p in polys {
        g = gcd(&g, p);
        if g.is_one() {
            break;
        }
    }
    g
}

fn only_in(a: &[Symbol], b: &[Symbol]) -> Option<Symbol> {
    a.iter().copied().find(|s| b.binary_search(s).is_err())
}

/// Both operands non-constant with trivial monomial content.
fn gcd_primitive_free(a: &Poly, b: &Poly) -> Poly {
    if a.len() >= b.len() {
        if a.div_exact(b).is_some() {
            return b.monic();
        }
    } else if b.div_exact(a).is_some() {
        return a.monic();
    }
    let va = a.symbols();
    let vb = b.symbols();
    if let Some(x) = only_in(&va, &vb) {
        return content_gcd(a, x, b);
    }
    if let Some(x) = only_in(&vb, &va) {
        return content_gcd(b, x, a);
    }
    // Same variable set: pick the main variable of smallest degree.
    let x = *va
        .iter()
        .min_by_key(|&&s| a.degree_in(s).max(b.degree_in(s)))
        .expect("non-constant polynomial has a variable");
    let ca = a.as_univariate(x);
    let cb = b.as_univariate(x);
    let (conta, pa) = primitive(ca);
    let (contb, pb) = primitive(cb);
    let c = gcd(&conta, &contb);
    let g = prs(pa, pb);
    (&Poly::from_univariate(&g, x) * &c).monic()
}

/// gcd(a, b) where `x` occurs in `a` but not in `b`.
fn content_gcd(a: &Poly, x: Symbol, b: &Poly) -> Poly {
    let mut g = b.clone();
    for c in a.as_univariate(x).iter().filter(|c| !c.is_zero()) {
        g = gcd(&g, c);
        if g.is_one() {
            break;
        }
    }
    g.monic()
}

/// Splits a univariate representation into content and primitive part.
fn primitive(coeffs: Vec<Poly>) -> (Poly, Vec<Poly>) {
    let content = gcd_many(coeffs.iter().filter(|c| !c.is_zero()));
    if content.is_one() {
        return (content, coeffs);
    }
    let prim = coeffs
        .iter()
        .map(|c| c.div_exact(&content).expect("content divides coefficient"))
        .collect();
    (content, prim)
}

fn trim(v: &mut Vec<Poly>) {
    while v.last().is_some_and(|c| c.is_zero()) {
        v.pop();
    }
}

fn pseudo_rem(mut a: Vec<Poly>, b: &[Poly]) -> Vec<Poly> {
    let db = b.len() - 1;
    let lb = &b[db];
    trim(&mut a);
    while !a.is_empty() && a.len() > db {
        let da = a.len() - 1;
        let la = a[da].clone();
        let shift = da - db;
        let mut next: Vec<Poly> = a.iter().map(|c| c * lb).collect();
        for (k, bk) in b.iter().enumerate() {
            next[k + shift] = &next[k + shift] - &(bk * &la);
        }
        trim(&mut next);
        a = next;
    }
    a
}

/// Primitive PRS on primitive univariate operands; returns a primitive gcd.
fn prs(a: Vec<Poly>, b: Vec<Poly>) -> Vec<Poly> {
    let (mut a, mut b) = if a.len() >= b.len() { (a, b) } else { (b, a) };
    trim(&mut a);
    trim(&mut b);
    loop {
        if b.len() == 1 {
            return vec![Poly::one()];
        }
        let r = pseudo_rem(a, &b);
        if r.is_empty() {
            return b;
        }
        if r.len() == 1 {
            return vec![Poly::one()];
        }
        let (_, r) = primitive(r);
        a = b;
        b = r;
    }
}
