//! Symbols of the expression kernel.
//!
//! Every symbol is packed into a single `u128` whose numeric order is the
//! global variable order used for monomials. The encoding is a pure function
//! of the symbol's identity, so the order (and therefore every canonical
//! form) is the same in every process regardless of creation order.
//!
//! Layout (most significant first):
//!
//! ```text
//! bits 124..128  kind tag
//! bits 120..122  unknown (jets only: u, U, Ũ)
//! bits   0..120  payload (multi-index nibbles, packed name, letter, index)
//! ```

use std::fmt;

use crate::error::{Error, Result};

const KIND_SHIFT: u32 = 124;
const UNKNOWN_SHIFT: u32 = 120;
const PAYLOAD_MASK: u128 = (1u128 << UNKNOWN_SHIFT) - 1;

const MAX_NAME_LEN: usize = 20;

/// Kinds of symbols, listed in increasing global order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum SymbolKind {
    UnknownConstant = 1,
    Parameter = 2,
    Lambda = 3,
    Epsilon = 4,
    Independent = 5,
    Jet = 6,
}

impl SymbolKind {
    fn from_tag(tag: u8) -> SymbolKind {
        match tag {
            1 => SymbolKind::UnknownConstant,
            2 => SymbolKind::Parameter,
            3 => SymbolKind::Lambda,
            4 => SymbolKind::Epsilon,
            5 => SymbolKind::Independent,
            6 => SymbolKind::Jet,
            _ => unreachable!("corrupt symbol tag {tag}"),
        }
    }
}

/// An independent variable, identified by its lowercase letter.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Var(u8);

impl Var {
    pub fn new(letter: char) -> Result<Var> {
        if letter.is_ascii_lowercase() && letter != 'u' {
            Ok(Var(letter as u8 - b'a'))
        } else {
            Err(Error::InvalidSymbol(format!(
                "independent variable must be a lowercase letter other than `u`, got `{letter}`"
            )))
        }
    }

    pub fn letter(self) -> char {
        (b'a' + self.0) as char
    }

    pub(crate) fn slot(self) -> usize {
        self.0 as usize
    }

    pub(crate) fn from_slot(slot: usize) -> Var {
        Var(slot as u8)
    }
}

impl fmt::Debug for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.letter())
    }
}

impl fmt::Display for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.letter())
    }
}

/// Sorted multiset of independent variables: one 4-bit count per letter.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct MultiIndex(u128);

impl MultiIndex {
    pub const MAX_PER_VAR: u32 = 15;

    pub fn empty() -> MultiIndex {
        MultiIndex(0)
    }

    pub fn from_vars(vars: &[Var]) -> Result<MultiIndex> {
        vars.iter().try_fold(MultiIndex::empty(), |m, &v| m.with(v))
    }

    fn shift(v: Var) -> u32 {
        (25 - v.slot() as u32) * 4
    }

    pub fn count(self, v: Var) -> u32 {
        ((self.0 >> Self::shift(v)) & 0xf) as u32
    }

    pub fn order(self) -> u32 {
        (0..26).map(|s| self.count(Var::from_slot(s))).sum()
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    /// The multi-index with one more derivative in `v`.
    pub fn with(self, v: Var) -> Result<MultiIndex> {
        if self.count(v) >= Self::MAX_PER_VAR {
            return Err(Error::OrderOverflow {
                order: self.order() + 1,
                bound: Self::MAX_PER_VAR,
            });
        }
        Ok(MultiIndex(self.0 + (1u128 << Self::shift(v))))
    }

    pub fn without(self, v: Var) -> Option<MultiIndex> {
        (self.count(v) > 0).then(|| MultiIndex(self.0 - (1u128 << Self::shift(v))))
    }

    pub fn divides(self, other: MultiIndex) -> bool {
        self.nonzero_vars().all(|v| self.count(v) <= other.count(v))
    }

    /// `other - self`, if `self` divides `other`.
    pub fn quotient(self, other: MultiIndex) -> Option<MultiIndex> {
        if !self.divides(other) {
            return None;
        }
        Some(MultiIndex(other.0 - self.0))
    }

    pub fn lcm(self, other: MultiIndex) -> MultiIndex {
        let mut out = 0u128;
        for s in 0..26 {
            let v = Var::from_slot(s);
            let c = self.count(v).max(other.count(v)) as u128;
            out |= c << Self::shift(v);
        }
        MultiIndex(out)
    }

    pub fn merge(self, other: MultiIndex) -> Result<MultiIndex> {
        other.vars().try_fold(self, |m, v| m.with(v))
    }

    /// Distinct variables present, alphabetical.
    pub fn nonzero_vars(self) -> impl Iterator<Item = Var> {
        (0..26)
            .map(Var::from_slot)
            .filter(move |&v| self.count(v) > 0)
    }

    /// Variables with repetition, alphabetical.
    pub fn vars(self) -> impl Iterator<Item = Var> {
        (0..26).map(Var::from_slot).flat_map(move |v| {
            std::iter::repeat_n(v, self.count(v) as usize)
        })
    }

    pub fn letters(self) -> String {
        self.vars().map(Var::letter).collect()
    }
}

impl fmt::Debug for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}]", self.letters())
    }
}

/// The three dependent variables of the jet space.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Unknown {
    /// The solution `u` of the equation.
    Field = 0,
    /// The seed symmetry `U`.
    Seed = 1,
    /// The image symmetry `Ũ`.
    Image = 2,
}

impl Unknown {
    pub fn name(self) -> &'static str {
        match self {
            Unknown::Field => "u",
            Unknown::Seed => "U",
            Unknown::Image => "Ut",
        }
    }

    fn from_bits(bits: u8) -> Unknown {
        match bits {
            0 => Unknown::Field,
            1 => Unknown::Seed,
            2 => Unknown::Image,
            _ => unreachable!("corrupt unknown bits {bits}"),
        }
    }
}

/// A jet coordinate: an unknown together with a derivative multi-index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct JetVar {
    pub unknown: Unknown,
    pub index: MultiIndex,
}

impl JetVar {
    pub fn new(unknown: Unknown, index: MultiIndex) -> JetVar {
        JetVar { unknown, index }
    }

    pub fn base(unknown: Unknown) -> JetVar {
        JetVar::new(unknown, MultiIndex::empty())
    }

    pub fn order(self) -> u32 {
        self.index.order()
    }

    pub fn derive(self, v: Var) -> Result<JetVar> {
        Ok(JetVar::new(self.unknown, self.index.with(v)?))
    }

    pub fn symbol(self) -> Symbol {
        Symbol(
            ((SymbolKind::Jet as u128) << KIND_SHIFT)
                | ((self.unknown as u128) << UNKNOWN_SHIFT)
                | self.index.0,
        )
    }
}

impl fmt::Display for JetVar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.unknown.name())?;
        if !self.index.is_empty() {
            write!(f, "_{}", self.index.letters())?;
        }
        Ok(())
    }
}

/// A packed kernel symbol. See the module docs for the layout.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Symbol(u128);

fn name_char_code(c: char) -> Option<u128> {
    match c {
        'a'..='z' => Some(c as u128 - 'a' as u128 + 1),
        'A'..='Z' => Some(c as u128 - 'A' as u128 + 27),
        '0'..='9' => Some(c as u128 - '0' as u128 + 53),
        '_' => Some(63),
        _ => None,
    }
}

fn name_code_char(code: u128) -> char {
    match code {
        1..=26 => (b'a' + (code - 1) as u8) as char,
        27..=52 => (b'A' + (code - 27) as u8) as char,
        53..=62 => (b'0' + (code - 53) as u8) as char,
        63 => '_',
        _ => unreachable!("corrupt name code {code}"),
    }
}

impl Symbol {
    fn tagged(kind: SymbolKind, payload: u128) -> Symbol {
        Symbol(((kind as u128) << KIND_SHIFT) | payload)
    }

    pub fn independent(v: Var) -> Symbol {
        // Reversed so that alphabetical order is descending, as for jets.
        Symbol::tagged(SymbolKind::Independent, 25 - v.slot() as u128)
    }

    pub fn lambda() -> Symbol {
        Symbol::tagged(SymbolKind::Lambda, 0)
    }

    pub fn epsilon() -> Symbol {
        Symbol::tagged(SymbolKind::Epsilon, 0)
    }

    pub fn jet(unknown: Unknown, index: MultiIndex) -> Symbol {
        JetVar::new(unknown, index).symbol()
    }

    pub fn unknown_constant(index: u32) -> Symbol {
        Symbol::tagged(SymbolKind::UnknownConstant, index as u128)
    }

    /// A named parameter such as `alpha`. Names are at most 20 characters
    /// from `[A-Za-z0-9_]`, starting with a letter.
    pub fn parameter(name: &str) -> Result<Symbol> {
        let invalid = || Error::InvalidSymbol(format!("invalid parameter name `{name}`"));
        if name.is_empty()
            || name.len() > MAX_NAME_LEN
            || !name.chars().next().is_some_and(|c| c.is_ascii_alphabetic())
        {
            return Err(invalid());
        }
        let mut payload = 0u128;
        for (i, c) in name.chars().enumerate() {
            let code = name_char_code(c).ok_or_else(invalid)?;
            payload |= code << (6 * (MAX_NAME_LEN - 1 - i));
        }
        Ok(Symbol::tagged(SymbolKind::Parameter, payload))
    }

    pub fn kind(self) -> SymbolKind {
        SymbolKind::from_tag((self.0 >> KIND_SHIFT) as u8)
    }

    fn payload(self) -> u128 {
        self.0 & PAYLOAD_MASK
    }

    pub fn as_jet(self) -> Option<JetVar> {
        (self.kind() == SymbolKind::Jet).then(|| {
            JetVar::new(
                Unknown::from_bits(((self.0 >> UNKNOWN_SHIFT) & 0b11) as u8),
                MultiIndex(self.payload()),
            )
        })
    }

    pub fn as_independent(self) -> Option<Var> {
        (self.kind() == SymbolKind::Independent).then(|| Var::from_slot(25 - self.payload() as usize))
    }

    pub fn constant_index(self) -> Option<u32> {
        (self.kind() == SymbolKind::UnknownConstant).then(|| self.payload() as u32)
    }

    pub fn is_jet_of(self, unknown: Unknown) -> bool {
        self.as_jet().is_some_and(|j| j.unknown == unknown)
    }

    pub fn name(self) -> String {
        match self.kind() {
            SymbolKind::Jet => self.as_jet().unwrap().to_string(),
            SymbolKind::Independent => self.as_independent().unwrap().letter().to_string(),
            SymbolKind::Lambda => "lam".to_string(),
            SymbolKind::Epsilon => "eps".to_string(),
            SymbolKind::UnknownConstant => format!("c{}", self.payload()),
            SymbolKind::Parameter => {
                let p = self.payload();
                (0..MAX_NAME_LEN)
                    .map(|i| (p >> (6 * (MAX_NAME_LEN - 1 - i))) & 0x3f)
                    .take_while(|&code| code != 0)
                    .map(name_code_char)
                    .collect()
            }
        }
    }
}

impl fmt::Display for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name())
    }
}

impl fmt::Debug for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name())
    }
}
