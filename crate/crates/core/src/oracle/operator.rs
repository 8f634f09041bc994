//! Words in the canonical operators and their normal ordering.
//!
//! The only rewrite used anywhere in this module is `p q → q p − iħ` on
//! adjacent letters of the same degree of freedom. Letters of different
//! degrees of freedom commute and are kept sorted by degree of freedom.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt::{self, Write as _};

use num_bigint::BigInt;
use num_complex::Complex;
use num_traits::{One, Zero};

use crate::algebra::{binomial, Rational};
use crate::moment::CanonicalKind;

pub type Gaussian = Complex<Rational>;

/// Per degree of freedom `(a_j, b_j)` exponents of `q_j^{a_j} p_j^{b_j}`.
pub type Exponents = Vec<(u32, u32)>;

fn gaussian(re: Rational, im: Rational) -> Gaussian {
    Complex::new(re, im)
}

/// A polynomial in `ħ` with Gaussian rational coefficients.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct HbarSeries {
    terms: BTreeMap<u32, Gaussian>,
}

impl HbarSeries {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn one() -> Self {
        Self::real(Rational::one())
    }

    pub fn real(r: Rational) -> Self {
        Self::monomial(0, gaussian(r, Rational::zero()))
    }

    pub fn monomial(power: u32, c: Gaussian) -> Self {
        let mut s = Self::zero();
        s.add_monomial(power, c);
        s
    }

    /// `c · iħ`.
    pub fn i_hbar(c: Rational) -> Self {
        Self::monomial(1, gaussian(Rational::zero(), c))
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (u32, &Gaussian)> {
        self.terms.iter().map(|(k, v)| (*k, v))
    }

    pub fn add_monomial(&mut self, power: u32, c: Gaussian) {
        if c.is_zero() {
            return;
        }
        let slot = self.terms.entry(power).or_insert_with(Gaussian::zero);
        *slot = &*slot + &c;
        if slot.is_zero() {
            self.terms.remove(&power);
        }
    }

    pub fn add_assign(&mut self, other: &Self) {
        for (k, v) in &other.terms {
            self.add_monomial(*k, v.clone());
        }
    }

    pub fn mul(&self, other: &Self) -> Self {
        let mut out = Self::zero();
        for (k1, v1) in &self.terms {
            for (k2, v2) in &other.terms {
                out.add_monomial(k1 + k2, v1 * v2);
            }
        }
        out
    }

    pub fn scale(&self, c: &Gaussian) -> Self {
        let mut out = Self::zero();
        for (k, v) in &self.terms {
            out.add_monomial(*k, v * c);
        }
        out
    }

    pub fn scale_real(&self, c: &Rational) -> Self {
        self.scale(&gaussian(c.clone(), Rational::zero()))
    }

    pub fn neg(&self) -> Self {
        self.scale_real(&-Rational::one())
    }

    /// Division by `iħ`; fails when a term without `ħ` is present.
    pub fn div_i_hbar(&self) -> Option<Self> {
        let mut out = Self::zero();
        let minus_i = gaussian(Rational::zero(), -Rational::one());
        for (k, v) in &self.terms {
            if *k == 0 {
                return None;
            }
            out.add_monomial(k - 1, v * &minus_i);
        }
        Some(out)
    }

    /// Rewrites as `Σ c_k ħ^{2k}` with real `c_k`, or reports the offending term.
    pub fn to_real_even(&self) -> Result<BTreeMap<u32, Rational>, String> {
        let mut out = BTreeMap::new();
        for (k, v) in &self.terms {
            if !v.im.is_zero() {
                return Err(alloc::format!("imaginary coefficient {} at hb^{k}", render_gaussian(v)));
            }
            if k % 2 == 1 {
                return Err(alloc::format!("odd power hb^{k} with coefficient {}", v.re));
            }
            out.insert(k / 2, v.re.clone());
        }
        Ok(out)
    }
}

fn render_gaussian(c: &Gaussian) -> String {
    match (c.re.is_zero(), c.im.is_zero()) {
        (_, true) => alloc::format!("{}", c.re),
        (true, false) => alloc::format!("{}*i", c.im),
        (false, false) => alloc::format!("({} + {}*i)", c.re, c.im),
    }
}

impl fmt::Display for HbarSeries {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return f.write_str("0");
        }
        for (n, (k, v)) in self.terms.iter().enumerate() {
            if n > 0 {
                f.write_str(" + ")?;
            }
            f.write_str(&render_gaussian(v))?;
            match k {
                0 => {}
                1 => f.write_str("*hb")?,
                _ => write!(f, "*hb^{k}")?,
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Letter {
    pub dof: usize,
    pub kind: CanonicalKind,
}

impl Letter {
    pub fn q(dof: usize) -> Self {
        Self { dof, kind: CanonicalKind::Position }
    }

    pub fn p(dof: usize) -> Self {
        Self { dof, kind: CanonicalKind::Momentum }
    }
}

/// A finite linear combination of operator words.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct OperatorExpression {
    terms: BTreeMap<Vec<Letter>, HbarSeries>,
}

impl OperatorExpression {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn one() -> Self {
        Self::word(Vec::new())
    }

    /// A single word; letters are stably sorted by degree of freedom.
    pub fn word(mut letters: Vec<Letter>) -> Self {
        letters.sort_by_key(|l| l.dof);
        let mut terms = BTreeMap::new();
        terms.insert(letters, HbarSeries::one());
        Self { terms }
    }

    /// The normal-ordered word `Π_j q_j^{a_j} p_j^{b_j}`.
    pub fn normal_word(exps: &[(u32, u32)]) -> Self {
        Self::word(normal_letters(exps))
    }

    pub fn terms(&self) -> impl Iterator<Item = (&[Letter], &HbarSeries)> {
        self.terms.iter().map(|(w, c)| (w.as_slice(), c))
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn add_term(&mut self, word: Vec<Letter>, c: &HbarSeries) {
        let slot = self.terms.entry(word.clone()).or_default();
        slot.add_assign(c);
        if slot.is_zero() {
            self.terms.remove(&word);
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for (w, c) in &other.terms {
            out.add_term(w.clone(), c);
        }
        out
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scale(&HbarSeries::real(-Rational::one())))
    }

    pub fn scale(&self, c: &HbarSeries) -> Self {
        let mut out = Self::zero();
        for (w, v) in &self.terms {
            out.add_term(w.clone(), &v.mul(c));
        }
        out
    }

    /// Concatenation product (not normal ordered).
    pub fn mul(&self, other: &Self) -> Self {
        let mut out = Self::zero();
        for (w1, c1) in &self.terms {
            for (w2, c2) in &other.terms {
                let mut w = w1.clone();
                w.extend_from_slice(w2);
                w.sort_by_key(|l| l.dof);
                out.add_term(w, &c1.mul(c2));
            }
        }
        out
    }

    /// True when every word has, per degree of freedom, positions before momenta.
    pub fn is_normal(&self) -> bool {
        self.terms.keys().all(|w| {
            w.windows(2).all(|pair| {
                !(pair[0].dof == pair[1].dof
                    && pair[0].kind == CanonicalKind::Momentum
                    && pair[1].kind == CanonicalKind::Position)
            })
        })
    }

    /// Exponent vectors of a normal-ordered expression over `dofs` degrees of freedom.
    pub fn to_normal_map(&self, dofs: usize) -> BTreeMap<Exponents, HbarSeries> {
        let mut out: BTreeMap<Exponents, HbarSeries> = BTreeMap::new();
        for (w, c) in self.normal_order().terms {
            let mut e = vec![(0, 0); dofs];
            for l in &w {
                match l.kind {
                    CanonicalKind::Position => e[l.dof].0 += 1,
                    CanonicalKind::Momentum => e[l.dof].1 += 1,
                }
            }
            accumulate(&mut out, e, &c);
        }
        out
    }

    pub fn from_normal_map(map: &BTreeMap<Exponents, HbarSeries>) -> Self {
        let mut out = Self::zero();
        for (e, c) in map {
            out.add_term(normal_letters(e), c);
        }
        out
    }

    /// Normal ordering by right multiplication, one letter at a time.
    pub fn normal_order(&self) -> Self {
        let mut out = Self::zero();
        for (w, c) in &self.terms {
            let dofs = w.iter().map(|l| l.dof + 1).max().unwrap_or(0);
            let mut parts = Vec::with_capacity(dofs);
            for j in 0..dofs {
                let kinds: Vec<CanonicalKind> = w.iter().filter(|l| l.dof == j).map(|l| l.kind).collect();
                parts.push(normal_order_1d(&kinds));
            }
            for (e, v) in tensor(&parts) {
                out.add_term(normal_letters(&e), &v.mul(c));
            }
        }
        out
    }

    /// Normal ordering by repeatedly rewriting the leftmost `p_j q_j` pair.
    /// Slower than [`OperatorExpression::normal_order`]; used to check confluence.
    pub fn normal_order_by_rewriting(&self) -> Self {
        let mut pending = self.clone();
        let mut done = Self::zero();
        while let Some((w, c)) = pending.terms.pop_first() {
            let hit = w.windows(2).position(|pair| {
                pair[0].dof == pair[1].dof
                    && pair[0].kind == CanonicalKind::Momentum
                    && pair[1].kind == CanonicalKind::Position
            });
            match hit {
                None => done.add_term(w, &c),
                Some(i) => {
                    let mut swapped = w.clone();
                    swapped.swap(i, i + 1);
                    pending.add_term(swapped, &c);
                    let mut shorter = w.clone();
                    shorter.drain(i..i + 2);
                    pending.add_term(shorter, &c.mul(&HbarSeries::i_hbar(-Rational::one())));
                }
            }
        }
        done
    }
}

impl fmt::Display for OperatorExpression {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return f.write_str("0");
        }
        for (n, (w, c)) in self.terms.iter().enumerate() {
            if n > 0 {
                f.write_str(" + ")?;
            }
            let mut word = String::new();
            for l in w {
                let name = match l.kind {
                    CanonicalKind::Position => 'q',
                    CanonicalKind::Momentum => 'p',
                };
                if !word.is_empty() {
                    word.push(' ');
                }
                let _ = write!(word, "{name}{}", l.dof + 1);
            }
            if word.is_empty() {
                write!(f, "({c})")?;
            } else {
                write!(f, "({c})*{word}")?;
            }
        }
        Ok(())
    }
}

pub(crate) fn normal_letters(exps: &[(u32, u32)]) -> Vec<Letter> {
    let mut w = Vec::new();
    for (j, &(a, b)) in exps.iter().enumerate() {
        w.extend(core::iter::repeat_n(Letter::q(j), a as usize));
        w.extend(core::iter::repeat_n(Letter::p(j), b as usize));
    }
    w
}

pub(crate) fn accumulate<K: Ord>(map: &mut BTreeMap<K, HbarSeries>, key: K, c: &HbarSeries) {
    use alloc::collections::btree_map::Entry;
    if c.is_zero() {
        return;
    }
    match map.entry(key) {
        Entry::Vacant(v) => {
            v.insert(c.clone());
        }
        Entry::Occupied(mut o) => {
            o.get_mut().add_assign(c);
            if o.get().is_zero() {
                o.remove();
            }
        }
    }
}

/// One degree of freedom: right-multiplies `q^a p^b` by a letter. Moving a `q`
/// leftward through `b` momenta applies the rewrite `b` times.
fn append_1d(state: &BTreeMap<(u32, u32), HbarSeries>, kind: CanonicalKind) -> BTreeMap<(u32, u32), HbarSeries> {
    let mut out: BTreeMap<(u32, u32), HbarSeries> = BTreeMap::new();
    let minus_i_hbar = HbarSeries::i_hbar(-Rational::one());
    for (&(a, b), c) in state {
        match kind {
            CanonicalKind::Momentum => accumulate(&mut out, (a, b + 1), c),
            CanonicalKind::Position => {
                accumulate(&mut out, (a + 1, b), c);
                let shifted = c.mul(&minus_i_hbar);
                for _ in 0..b {
                    accumulate(&mut out, (a, b - 1), &shifted);
                }
            }
        }
    }
    out
}

pub(crate) fn normal_order_1d(word: &[CanonicalKind]) -> BTreeMap<(u32, u32), HbarSeries> {
    let mut state = BTreeMap::new();
    state.insert((0, 0), HbarSeries::one());
    for &k in word {
        state = append_1d(&state, k);
    }
    state
}

/// Product of commuting single-dof factors.
pub(crate) fn tensor(parts: &[BTreeMap<(u32, u32), HbarSeries>]) -> BTreeMap<Exponents, HbarSeries> {
    let mut acc: BTreeMap<Exponents, HbarSeries> = BTreeMap::new();
    acc.insert(Vec::new(), HbarSeries::one());
    for part in parts {
        let mut next = BTreeMap::new();
        for (e, c) in &acc {
            for (&ab, v) in part {
                let mut e2 = e.clone();
                e2.push(ab);
                accumulate(&mut next, e2, &c.mul(v));
            }
        }
        acc = next;
    }
    acc
}

/// Single-dof normal-ordered expansion keyed by `(m, n)` in `q^m p^n`.
type SingleDof = BTreeMap<(u32, u32), HbarSeries>;

/// Normal-ordered operator algebra on a fixed number of degrees of freedom,
/// with memoized single-dof products and Weyl monomials.
#[derive(Debug, Default)]
pub struct OperatorAlgebra {
    dofs: usize,
    products: BTreeMap<(u32, u32, u32, u32), SingleDof>,
    weyl: BTreeMap<(u32, u32), SingleDof>,
}

pub type NormalMap = BTreeMap<Exponents, HbarSeries>;

impl OperatorAlgebra {
    pub fn new(dofs: usize) -> Self {
        Self { dofs, ..Self::default() }
    }

    pub fn dofs(&self) -> usize {
        self.dofs
    }

    fn product_1d(&mut self, a: u32, b: u32, m: u32, n: u32) -> &BTreeMap<(u32, u32), HbarSeries> {
        self.products.entry((a, b, m, n)).or_insert_with(|| {
            let mut state = BTreeMap::new();
            state.insert((a, b), HbarSeries::one());
            for _ in 0..m {
                state = append_1d(&state, CanonicalKind::Position);
            }
            for _ in 0..n {
                state = append_1d(&state, CanonicalKind::Momentum);
            }
            state
        })
    }

    /// Normal-ordered product of two normal-ordered expressions.
    pub fn mul(&mut self, x: &NormalMap, y: &NormalMap) -> NormalMap {
        let mut out = NormalMap::new();
        for (e1, c1) in x {
            for (e2, c2) in y {
                let c = c1.mul(c2);
                let parts: Vec<_> = (0..self.dofs)
                    .map(|j| {
                        let (a, b) = e1[j];
                        let (m, n) = e2[j];
                        self.product_1d(a, b, m, n).clone()
                    })
                    .collect();
                for (e, v) in tensor(&parts) {
                    accumulate(&mut out, e, &v.mul(&c));
                }
            }
        }
        out
    }

    pub fn commutator(&mut self, x: &NormalMap, y: &NormalMap) -> NormalMap {
        let mut out = self.mul(x, y);
        for (e, c) in self.mul(y, x) {
            accumulate(&mut out, e, &c.neg());
        }
        out
    }

    fn weyl_1d(&mut self, a: u32, b: u32) -> BTreeMap<(u32, u32), HbarSeries> {
        if let Some(hit) = self.weyl.get(&(a, b)) {
            return hit.clone();
        }
        let len = (a + b) as usize;
        let mut sum: BTreeMap<(u32, u32), HbarSeries> = BTreeMap::new();
        let mut count = 0u64;
        for_each_arrangement(len, a as usize, &mut |positions| {
            let word: Vec<CanonicalKind> = positions
                .iter()
                .map(|&is_q| if is_q { CanonicalKind::Position } else { CanonicalKind::Momentum })
                .collect();
            for (k, v) in normal_order_1d(&word) {
                accumulate(&mut sum, k, &v);
            }
            count += 1;
        });
        debug_assert_eq!(BigInt::from(count), binomial(a + b, a));
        let inv = Rational::new(BigInt::one(), BigInt::from(count));
        let out: BTreeMap<_, _> = sum.into_iter().map(|(k, v)| (k, v.scale_real(&inv))).collect();
        self.weyl.insert((a, b), out.clone());
        out
    }

    /// `(Π_j q_j^{a_j} p_j^{b_j})_Weyl` in normal-ordered form.
    pub fn weyl(&mut self, exps: &[(u32, u32)]) -> NormalMap {
        let parts: Vec<_> = exps.iter().map(|&(a, b)| self.weyl_1d(a, b)).collect();
        tensor(&parts)
    }

    /// Expands a normal-ordered expression in the Weyl basis by eliminating
    /// the term of highest total degree until nothing is left.
    pub fn to_weyl_basis(&mut self, x: &NormalMap) -> NormalMap {
        let mut rest = x.clone();
        let mut out = NormalMap::new();
        while let Some(lead) =
            rest.keys().max_by_key(|e| (e.iter().map(|(a, b)| a + b).sum::<u32>(), (*e).clone())).cloned()
        {
            let c = rest[&lead].clone();
            for (e, v) in self.weyl(&lead) {
                accumulate(&mut rest, e, &v.mul(&c).neg());
            }
            accumulate(&mut out, lead, &c);
        }
        out
    }

    pub fn from_weyl_basis(&mut self, x: &NormalMap) -> NormalMap {
        let mut out = NormalMap::new();
        for (e, c) in x {
            for (k, v) in self.weyl(e) {
                accumulate(&mut out, k, &v.mul(c));
            }
        }
        out
    }
}

/// Calls `f` once for each arrangement of `ones` true values among `len` slots.
fn for_each_arrangement(len: usize, ones: usize, f: &mut impl FnMut(&[bool])) {
    fn rec(buf: &mut Vec<bool>, len: usize, ones: usize, f: &mut impl FnMut(&[bool])) {
        let placed = buf.iter().filter(|&&b| b).count();
        if buf.len() == len {
            if placed == ones {
                f(buf);
            }
            return;
        }
        let slots_left = len - buf.len();
        if placed < ones {
            buf.push(true);
            rec(buf, len, ones, f);
            buf.pop();
        }
        if ones - placed < slots_left {
            buf.push(false);
            rec(buf, len, ones, f);
            buf.pop();
        }
    }
    rec(&mut Vec::with_capacity(len), len, ones, f);
}

/// Normal ordering of an arbitrary expression.
pub fn normal_order(e: &OperatorExpression) -> OperatorExpression {
    e.normal_order()
}

/// `(Π_j q_j^{a_j} p_j^{b_j})_Weyl`, averaged over all distinct letter
/// arrangements per degree of freedom, in normal-ordered form.
pub fn weyl_monomial(exps: &[(u32, u32)]) -> OperatorExpression {
    let mut alg = OperatorAlgebra::new(exps.len());
    OperatorExpression::from_normal_map(&alg.weyl(exps))
}
