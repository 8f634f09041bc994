//! Moment brackets computed from the observable-level bracket.
//!
//! A central moment is expanded binomially into centroids and raw
//! expectations `E[e] = ⟨Π_j q_j^{a_j} p_j^{b_j}⟩` (Weyl ordered on quantum
//! degrees of freedom). Brackets act on raw expectations through
//! `{⟨A⟩, ⟨B⟩} = ⟨[[A, B]]⟩` and on products by the Leibniz rule; the result is
//! converted back to central moments.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use num_bigint::BigInt;
use num_traits::One;

use super::hybrid::HybridAlgebra;
use super::operator::Exponents;
use crate::algebra::{binomial, MomentPolynomial, Poly, Rational, Symbol, Weighted};
use crate::bracket::BracketKind;
use crate::moment::{CanonicalKind, CentroidSymbol, MomentKey, SystemSignature};
use crate::{Error, Result};

/// Largest moment order accepted by the oracle.
pub const ORACLE_MAX_ORDER: u32 = 5;

/// Raw expectation `E[e]`; the unit vectors are the centroids.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct RawMoment(pub Exponents);

impl Weighted for RawMoment {
    fn weight(&self) -> u32 {
        self.0.iter().map(|(a, b)| a + b).sum()
    }
}

impl fmt::Display for RawMoment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("E[")?;
        for (j, (a, b)) in self.0.iter().enumerate() {
            if j > 0 {
                f.write_str(";")?;
            }
            write!(f, "{a},{b}")?;
        }
        f.write_str("]")
    }
}

pub type RawPolynomial = Poly<RawMoment>;

fn raw(e: Exponents) -> RawPolynomial {
    if e.iter().all(|&(a, b)| a == 0 && b == 0) {
        RawPolynomial::one()
    } else {
        RawPolynomial::symbol(RawMoment(e))
    }
}

fn centroid_raw(dofs: usize, c: CentroidSymbol) -> RawPolynomial {
    let mut e = vec![(0, 0); dofs];
    match c.kind {
        CanonicalKind::Position => e[c.dof].0 = 1,
        CanonicalKind::Momentum => e[c.dof].1 = 1,
    }
    raw(e)
}

/// All exponent vectors componentwise below `e`.
fn below(e: &[(u32, u32)]) -> Vec<Exponents> {
    let mut out: Vec<Exponents> = vec![Vec::new()];
    for &(a, b) in e {
        let mut next = Vec::new();
        for prefix in &out {
            for i in 0..=a {
                for k in 0..=b {
                    let mut v = prefix.clone();
                    v.push((i, k));
                    next.push(v);
                }
            }
        }
        out = next;
    }
    out
}

fn binomial_product(e: &[(u32, u32)], sub: &[(u32, u32)]) -> BigInt {
    e.iter().zip(sub).fold(BigInt::one(), |acc, (&(a, b), &(i, k))| acc * binomial(a, i) * binomial(b, k))
}

/// `Δ(e) = Σ_{i ≤ e} Π C(a,i)C(b,k) (−q)^{a−i} (−p)^{b−k} E[i]`.
pub fn central_to_raw(key: &MomentKey) -> RawPolynomial {
    let e = key.exponents();
    let dofs = e.len();
    let mut out = RawPolynomial::zero();
    for sub in below(e) {
        let mut term = raw(sub.clone()).scale(&Rational::from_integer(binomial_product(e, &sub)));
        for (j, (&(a, b), &(i, k))) in e.iter().zip(&sub).enumerate() {
            let minus_q = -centroid_raw(dofs, CentroidSymbol::position(j));
            let minus_p = -centroid_raw(dofs, CentroidSymbol::momentum(j));
            term = &(&term * &minus_q.pow(a - i)) * &minus_p.pow(b - k);
        }
        out += term;
    }
    out
}

/// `E[e] = Σ_{i ≤ e} Π C(a,i)C(b,k) q^{a−i} p^{b−k} Δ(i)`.
pub fn raw_to_central(e: &[(u32, u32)]) -> MomentPolynomial {
    let mut out = MomentPolynomial::zero();
    for sub in below(e) {
        let mut term = MomentPolynomial::moment(MomentKey::new(sub.clone()))
            .scale(&Rational::from_integer(binomial_product(e, &sub)));
        for (j, (&(a, b), &(i, k))) in e.iter().zip(&sub).enumerate() {
            let q = MomentPolynomial::centroid(CentroidSymbol::position(j));
            let p = MomentPolynomial::centroid(CentroidSymbol::momentum(j));
            term = &(&term * &q.pow(a - i)) * &p.pow(b - k);
        }
        out += term;
    }
    out
}

/// Substitutes raw expectations by their central-moment expansions.
pub fn raw_poly_to_central(p: &RawPolynomial) -> MomentPolynomial {
    p.substitute(|s| raw_to_central(&s.0))
}

/// Converts a polynomial in centroids and central moments to raw expectations.
pub fn central_poly_to_raw(p: &MomentPolynomial, dofs: usize) -> RawPolynomial {
    p.substitute(|s: &Symbol| match s {
        Symbol::Centroid(c) => centroid_raw(dofs, *c),
        Symbol::Moment(k) => central_to_raw(k),
    })
}

/// First-principles bracket evaluator for one signature and bracket kind.
pub struct Oracle {
    dofs: usize,
    algebra: HybridAlgebra,
    cache: BTreeMap<(RawMoment, RawMoment), RawPolynomial>,
}

impl Oracle {
    pub fn new(sig: &SystemSignature, kind: BracketKind) -> Self {
        let n_classical = kind.classical_dofs(sig);
        Self { dofs: sig.dofs(), algebra: HybridAlgebra::new(n_classical, sig.dofs()), cache: BTreeMap::new() }
    }

    pub fn dofs(&self) -> usize {
        self.dofs
    }

    fn check(&self, key: &MomentKey) -> Result<()> {
        if key.dofs() != self.dofs {
            return Err(Error::DofMismatch { expected: self.dofs, found: key.dofs() });
        }
        if key.order() > ORACLE_MAX_ORDER {
            return Err(Error::CostGuard(format!("moment {key} has order above {ORACLE_MAX_ORDER}")));
        }
        Ok(())
    }

    /// `{E[e1], E[e2]} = ⟨[[basis(e1), basis(e2)]]⟩`.
    pub fn raw_bracket(&mut self, a: &RawMoment, b: &RawMoment) -> Result<RawPolynomial> {
        if let Some(hit) = self.cache.get(&(a.clone(), b.clone())) {
            return Ok(hit.clone());
        }
        let obs = self.algebra.basis_bracket(&a.0, &b.0)?;
        let mut out = RawPolynomial::zero();
        for ((e, hbar2), c) in obs.to_real()? {
            out += &RawPolynomial::hbar2(hbar2, c) * &raw(e);
        }
        self.cache.insert((a.clone(), b.clone()), out.clone());
        Ok(out)
    }

    /// Bracket of raw polynomials by the Leibniz rule.
    pub fn raw_poly_bracket(&mut self, x: &RawPolynomial, y: &RawPolynomial) -> Result<RawPolynomial> {
        let mut failure = None;
        let out = x.bracket_with(y, |s, t| match self.raw_bracket(s, t) {
            Ok(v) => v,
            Err(e) => {
                failure.get_or_insert(e);
                RawPolynomial::zero()
            }
        });
        match failure {
            Some(e) => Err(e),
            None => Ok(out),
        }
    }

    pub fn moment_bracket(&mut self, k1: &MomentKey, k2: &MomentKey) -> Result<MomentPolynomial> {
        self.check(k1)?;
        self.check(k2)?;
        let (x, y) = (central_to_raw(k1), central_to_raw(k2));
        Ok(raw_poly_to_central(&self.raw_poly_bracket(&x, &y)?))
    }

    /// `{c, Δ(key)}` for a centroid `c`.
    pub fn centroid_moment_bracket(&mut self, c: CentroidSymbol, key: &MomentKey) -> Result<MomentPolynomial> {
        self.check(key)?;
        let x = centroid_raw(self.dofs, c);
        Ok(raw_poly_to_central(&self.raw_poly_bracket(&x, &central_to_raw(key))?))
    }
}

/// First-principles `{Δ(key1), Δ(key2)}` under `kind`.
pub fn oracle_moment_bracket(
    key1: &MomentKey,
    key2: &MomentKey,
    sig: &SystemSignature,
    kind: BracketKind,
) -> Result<MomentPolynomial> {
    sig.check_key(key1)?;
    sig.check_key(key2)?;
    Oracle::new(sig, kind).moment_bracket(key1, key2)
}

/// True when converting `key` to raw expectations and back is the identity.
pub fn round_trips(key: &MomentKey) -> bool {
    raw_poly_to_central(&central_to_raw(key)) == MomentPolynomial::moment(key.clone())
}

/// True when `E[e]` survives the conversion to central moments and back.
pub fn raw_round_trips(e: &[(u32, u32)]) -> bool {
    central_poly_to_raw(&raw_to_central(e), e.len()) == raw(e.to_vec())
}
