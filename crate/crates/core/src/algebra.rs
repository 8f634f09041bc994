//! Exact sparse multivariate polynomials.
//!
//! A [`Poly`] maps monomials to nonzero rational coefficients. A monomial is a
//! power of the formal symbol `ħ²` times a product of symbol powers, so
//! coefficients are effectively polynomials in `ħ²` and the classical limit
//! is the filter `hbar2 == 0`.
//!
//! Rendering (`Display`) is stable: terms are sorted by decreasing weight
//! (sum of symbol weights, a moment weighing its order and a centroid one),
//! then by increasing number of factors, then by the `ħ²` power, then by the
//! factors themselves. Coefficients of ±1 are omitted except on constants, and
//! `ħ²` renders as `hb^2`:
//!
//! ```text
//! 9*d[2,2] - 9*d[2,0]*d[0,2] - 3/2*hb^2
//! ```

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::cmp::Reverse;
use core::fmt;
use core::ops::{Add, AddAssign, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::moment::{CentroidSymbol, MomentKey};
use crate::{Error, Result};

pub type Rational = BigRational;

pub fn rational(numer: i64, denom: i64) -> Rational {
    Rational::new(BigInt::from(numer), BigInt::from(denom))
}

pub fn integer(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

pub fn factorial(n: u32) -> BigInt {
    (2..=n).fold(BigInt::one(), |acc, k| acc * k)
}

pub fn binomial(n: u32, k: u32) -> BigInt {
    if k > n {
        return BigInt::zero();
    }
    let k = k.min(n - k);
    let mut acc = BigInt::one();
    for i in 0..k {
        acc = acc * (n - i) / (i + 1);
    }
    acc
}

pub fn to_f64(r: &Rational) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

/// Parses an exact rational from `7`, `-3/2`, `0.25` or `1.5e-3`.
pub fn parse_rational(s: &str) -> Result<Rational> {
    let t = s.trim();
    let err = |message: &str| Error::Parse { input: s.to_string(), position: 0, message: message.to_string() };
    if t.is_empty() {
        return Err(err("empty number"));
    }
    if let Some((n, d)) = t.split_once('/') {
        let n: BigInt = n.trim().parse().map_err(|_| err("invalid numerator"))?;
        let d: BigInt = d.trim().parse().map_err(|_| err("invalid denominator"))?;
        if d.is_zero() {
            return Err(err("zero denominator"));
        }
        return Ok(Rational::new(n, d));
    }
    let (mantissa, exp) = match t.find(['e', 'E']) {
        Some(i) => {
            let e: i32 = t[i + 1..].parse().map_err(|_| err("invalid exponent"))?;
            (&t[..i], e)
        }
        None => (t, 0),
    };
    let (neg, digits) = match mantissa.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, mantissa.strip_prefix('+').unwrap_or(mantissa)),
    };
    let (int_part, frac_part) = digits.split_once('.').unwrap_or((digits, ""));
    if int_part.is_empty() && frac_part.is_empty() {
        return Err(err("missing digits"));
    }
    if !int_part.chars().chain(frac_part.chars()).all(|c| c.is_ascii_digit()) {
        return Err(err("invalid digit"));
    }
    let mut all = String::from(int_part);
    all.push_str(frac_part);
    let mut value = Rational::from_integer(all.parse::<BigInt>().map_err(|_| err("invalid digits"))?);
    let scale = exp - frac_part.len() as i32;
    let ten = Rational::from_integer(BigInt::from(10));
    let pow = num_traits::pow(ten, scale.unsigned_abs() as usize);
    if scale >= 0 {
        value *= pow;
    } else {
        value /= pow;
    }
    Ok(if neg { -value } else { value })
}

/// Dimension-like weight used to order terms when rendering.
pub trait Weighted {
    fn weight(&self) -> u32;
}

/// `ħ^{2·hbar2}` times a product of symbol powers (sorted, powers ≥ 1).
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Monomial<S> {
    hbar2: u32,
    factors: Vec<(S, u32)>,
}

impl<S: Ord + Clone> Monomial<S> {
    pub fn one() -> Self {
        Self { hbar2: 0, factors: Vec::new() }
    }

    pub fn symbol(s: S) -> Self {
        Self { hbar2: 0, factors: alloc::vec![(s, 1)] }
    }

    pub fn hbar2_power(&self) -> u32 {
        self.hbar2
    }

    pub fn factors(&self) -> &[(S, u32)] {
        &self.factors
    }

    pub fn is_constant(&self) -> bool {
        self.factors.is_empty()
    }

    pub fn power_of(&self, s: &S) -> u32 {
        self.factors.binary_search_by(|(f, _)| f.cmp(s)).map(|i| self.factors[i].1).unwrap_or(0)
    }

    /// Total number of symbol factors counted with multiplicity.
    pub fn degree(&self) -> u32 {
        self.factors.iter().map(|(_, p)| p).sum()
    }

    fn mul(&self, other: &Self) -> Self {
        let mut factors = Vec::with_capacity(self.factors.len() + other.factors.len());
        let (mut i, mut j) = (0, 0);
        while i < self.factors.len() && j < other.factors.len() {
            let (a, pa) = &self.factors[i];
            let (b, pb) = &other.factors[j];
            match a.cmp(b) {
                core::cmp::Ordering::Less => {
                    factors.push((a.clone(), *pa));
                    i += 1;
                }
                core::cmp::Ordering::Greater => {
                    factors.push((b.clone(), *pb));
                    j += 1;
                }
                core::cmp::Ordering::Equal => {
                    factors.push((a.clone(), pa + pb));
                    i += 1;
                    j += 1;
                }
            }
        }
        factors.extend_from_slice(&self.factors[i..]);
        factors.extend_from_slice(&other.factors[j..]);
        Self { hbar2: self.hbar2 + other.hbar2, factors }
    }

    /// Lowers the power of `s` by one; returns the old power and the new monomial.
    fn lower(&self, s: &S) -> Option<(u32, Self)> {
        let i = self.factors.binary_search_by(|(f, _)| f.cmp(s)).ok()?;
        let mut factors = self.factors.clone();
        let p = factors[i].1;
        if p == 1 {
            factors.remove(i);
        } else {
            factors[i].1 -= 1;
        }
        Some((p, Self { hbar2: self.hbar2, factors }))
    }
}

/// Sparse polynomial with exact rational coefficients in symbols `S` and `ħ²`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Poly<S: Ord> {
    terms: BTreeMap<Monomial<S>, Rational>,
}

impl<S: Ord + Clone> Default for Poly<S> {
    fn default() -> Self {
        Self::zero()
    }
}

impl<S: Ord + Clone> Poly<S> {
    pub fn zero() -> Self {
        Self { terms: BTreeMap::new() }
    }

    pub fn one() -> Self {
        Self::constant(Rational::one())
    }

    pub fn constant(c: Rational) -> Self {
        Self::term(Monomial::one(), c)
    }

    pub fn symbol(s: S) -> Self {
        Self::term(Monomial::symbol(s), Rational::one())
    }

    /// `c · ħ^{2k}`.
    pub fn hbar2(k: u32, c: Rational) -> Self {
        Self::term(Monomial { hbar2: k, factors: Vec::new() }, c)
    }

    pub fn term(m: Monomial<S>, c: Rational) -> Self {
        let mut p = Self::zero();
        p.add_term(m, c);
        p
    }

    pub fn add_term(&mut self, m: Monomial<S>, c: Rational) {
        if c.is_zero() {
            return;
        }
        match self.terms.entry(m) {
            alloc::collections::btree_map::Entry::Vacant(v) => {
                v.insert(c);
            }
            alloc::collections::btree_map::Entry::Occupied(mut o) => {
                *o.get_mut() += c;
                if o.get().is_zero() {
                    o.remove();
                }
            }
        }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial<S>, &Rational)> {
        self.terms.iter()
    }

    pub fn coefficient(&self, m: &Monomial<S>) -> Rational {
        self.terms.get(m).cloned().unwrap_or_else(Rational::zero)
    }

    pub fn scale(&self, c: &Rational) -> Self {
        if c.is_zero() {
            return Self::zero();
        }
        Self { terms: self.terms.iter().map(|(m, v)| (m.clone(), v * c)).collect() }
    }

    pub fn symbols(&self) -> BTreeSet<S> {
        self.terms.keys().flat_map(|m| m.factors.iter().map(|(s, _)| s.clone())).collect()
    }

    pub fn max_hbar2_power(&self) -> u32 {
        self.terms.keys().map(|m| m.hbar2).max().unwrap_or(0)
    }

    pub fn retain(&mut self, mut keep: impl FnMut(&Monomial<S>) -> bool) {
        self.terms.retain(|m, _| keep(m));
    }

    /// Drops every term carrying a positive power of `ħ²`.
    pub fn classical_limit(&self) -> Self {
        let mut p = self.clone();
        p.retain(|m| m.hbar2 == 0);
        p
    }

    pub fn pow(&self, n: u32) -> Self {
        (0..n).fold(Self::one(), |acc, _| &acc * self)
    }

    /// Formal partial derivative; other symbols and `ħ²` are constants.
    pub fn derivative(&self, s: &S) -> Self {
        let mut out = Self::zero();
        for (m, c) in &self.terms {
            if let Some((p, lowered)) = m.lower(s) {
                out.add_term(lowered, c * Rational::from_integer(BigInt::from(p)));
            }
        }
        out
    }

    /// Replaces each symbol by a polynomial in another symbol set. `ħ²` powers are kept.
    pub fn substitute<T: Ord + Clone>(&self, mut f: impl FnMut(&S) -> Poly<T>) -> Poly<T> {
        let mut cache: BTreeMap<S, Poly<T>> = BTreeMap::new();
        let mut out = Poly::zero();
        for (m, c) in &self.terms {
            let mut acc = Poly::term(Monomial { hbar2: m.hbar2, factors: Vec::new() }, c.clone());
            for (s, p) in &m.factors {
                let image = cache.entry(s.clone()).or_insert_with(|| f(s));
                for _ in 0..*p {
                    acc = &acc * &*image;
                }
                if acc.is_zero() {
                    break;
                }
            }
            out += acc;
        }
        out
    }

    /// Extends a bracket on symbols to polynomials by bilinearity and the Leibniz rule:
    /// `{P, Q} = Σ_{s,t} ∂P/∂s · ∂Q/∂t · {s, t}`.
    pub fn bracket_with(&self, other: &Self, mut on_symbols: impl FnMut(&S, &S) -> Poly<S>) -> Self {
        let mut out = Self::zero();
        let right: Vec<(S, Self)> = other
            .symbols()
            .into_iter()
            .map(|t| {
                let d = other.derivative(&t);
                (t, d)
            })
            .collect();
        for s in self.symbols() {
            let ds = self.derivative(&s);
            for (t, dt) in &right {
                let b = on_symbols(&s, t);
                if b.is_zero() {
                    continue;
                }
                out += &(&ds * dt) * &b;
            }
        }
        out
    }

    /// Numeric value with `ħ²` replaced by `hbar * hbar`.
    pub fn eval(&self, mut value: impl FnMut(&S) -> Option<f64>, hbar: f64) -> Result<f64>
    where
        S: fmt::Display,
    {
        let h2 = hbar * hbar;
        let mut total = 0.0;
        for (m, c) in &self.terms {
            let mut t = to_f64(c) * libm::pow(h2, m.hbar2 as f64);
            for (s, p) in &m.factors {
                let v = value(s).ok_or_else(|| Error::MissingSymbol(s.to_string()))?;
                t *= libm::pow(v, *p as f64);
            }
            total += t;
        }
        Ok(total)
    }
}

impl<S: Ord + Clone> AddAssign for Poly<S> {
    fn add_assign(&mut self, rhs: Self) {
        for (m, c) in rhs.terms {
            self.add_term(m, c);
        }
    }
}

impl<S: Ord + Clone> AddAssign<&Poly<S>> for Poly<S> {
    fn add_assign(&mut self, rhs: &Poly<S>) {
        for (m, c) in &rhs.terms {
            self.add_term(m.clone(), c.clone());
        }
    }
}

impl<S: Ord + Clone> Add for Poly<S> {
    type Output = Poly<S>;
    fn add(mut self, rhs: Self) -> Self {
        self += rhs;
        self
    }
}

impl<S: Ord + Clone> Add for &Poly<S> {
    type Output = Poly<S>;
    fn add(self, rhs: Self) -> Poly<S> {
        let mut out = self.clone();
        out += rhs;
        out
    }
}

impl<S: Ord + Clone> Neg for Poly<S> {
    type Output = Poly<S>;
    fn neg(mut self) -> Self {
        for v in self.terms.values_mut() {
            *v = -v.clone();
        }
        self
    }
}

impl<S: Ord + Clone> Neg for &Poly<S> {
    type Output = Poly<S>;
    fn neg(self) -> Poly<S> {
        -self.clone()
    }
}

impl<S: Ord + Clone> Sub for Poly<S> {
    type Output = Poly<S>;
    fn sub(self, rhs: Self) -> Self {
        self + (-rhs)
    }
}

impl<S: Ord + Clone> Sub for &Poly<S> {
    type Output = Poly<S>;
    fn sub(self, rhs: Self) -> Poly<S> {
        self + &(-rhs)
    }
}

impl<S: Ord + Clone> Mul for &Poly<S> {
    type Output = Poly<S>;
    fn mul(self, rhs: Self) -> Poly<S> {
        let mut out = Poly::zero();
        for (ma, ca) in &self.terms {
            for (mb, cb) in &rhs.terms {
                out.add_term(ma.mul(mb), ca * cb);
            }
        }
        out
    }
}

impl<S: Ord + Clone> Mul for Poly<S> {
    type Output = Poly<S>;
    fn mul(self, rhs: Self) -> Self {
        &self * &rhs
    }
}

impl<S: Ord + Clone + fmt::Display + Weighted> fmt::Display for Poly<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return f.write_str("0");
        }
        let mut terms: Vec<_> = self.terms.iter().collect();
        let rank = |m: &Monomial<S>| {
            let weight: u32 = m.factors.iter().map(|(s, p)| s.weight() * p).sum();
            (Reverse(weight), m.degree(), m.hbar2)
        };
        terms.sort_by(|(a, _), (b, _)| rank(a).cmp(&rank(b)).then_with(|| a.cmp(b)));
        for (i, (m, c)) in terms.into_iter().enumerate() {
            let negative = c.is_negative();
            let magnitude = c.abs();
            match (i == 0, negative) {
                (true, true) => f.write_str("-")?,
                (true, false) => {}
                (false, true) => f.write_str(" - ")?,
                (false, false) => f.write_str(" + ")?,
            }
            let mut parts: Vec<String> = Vec::new();
            if !magnitude.is_one() {
                parts.push(magnitude.to_string());
            }
            for (s, p) in &m.factors {
                if *p == 1 {
                    parts.push(s.to_string());
                } else {
                    parts.push(alloc::format!("{s}^{p}"));
                }
            }
            if m.hbar2 > 0 {
                parts.push(alloc::format!("hb^{}", 2 * m.hbar2));
            }
            if parts.is_empty() {
                parts.push("1".into());
            }
            f.write_str(&parts.join("*"))?;
        }
        Ok(())
    }
}

/// A symbol of the moment algebra: a centroid or a central moment of order ≥ 2.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Symbol {
    Centroid(CentroidSymbol),
    Moment(MomentKey),
}

impl Weighted for Symbol {
    fn weight(&self) -> u32 {
        match self {
            Symbol::Centroid(_) => 1,
            Symbol::Moment(k) => k.order(),
        }
    }
}

impl fmt::Display for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Symbol::Centroid(c) => c.fmt(f),
            Symbol::Moment(k) => k.fmt(f),
        }
    }
}

/// Polynomial in centroids and central moments.
pub type MomentPolynomial = Poly<Symbol>;

impl Poly<Symbol> {
    /// The moment `Δ(key)`: the constant 1 at order 0, zero at order 1.
    pub fn moment(key: MomentKey) -> Self {
        match key.order() {
            0 => Self::one(),
            1 => Self::zero(),
            _ => Self::symbol(Symbol::Moment(key)),
        }
    }

    pub fn centroid(c: CentroidSymbol) -> Self {
        Self::symbol(Symbol::Centroid(c))
    }

    /// Largest moment order among the symbols (0 if none).
    pub fn max_moment_order(&self) -> u32 {
        self.symbols()
            .iter()
            .filter_map(|s| match s {
                Symbol::Moment(k) => Some(k.order()),
                _ => None,
            })
            .max()
            .unwrap_or(0)
    }
}

pub fn poly_add(a: &MomentPolynomial, b: &MomentPolynomial) -> MomentPolynomial {
    a + b
}

pub fn poly_mul(a: &MomentPolynomial, b: &MomentPolynomial) -> MomentPolynomial {
    a * b
}

pub fn poly_eval(p: &MomentPolynomial, assignment: &BTreeMap<Symbol, f64>, hbar: f64) -> Result<f64> {
    p.eval(|s| assignment.get(s).copied(), hbar)
}

/// Partial derivative by a centroid; moments are independent of the centroids.
pub fn poly_derivative(p: &MomentPolynomial, s: CentroidSymbol) -> MomentPolynomial {
    p.derivative(&Symbol::Centroid(s))
}
