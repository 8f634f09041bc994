//! Polynomial Hamiltonians, their expansion in moments and the truncated
//! equations of motion.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use num_bigint::BigInt;
use num_traits::{One, Zero};

use crate::algebra::{binomial, MomentPolynomial, Rational, Symbol};
use crate::bracket::{BracketEngine, BracketKind};
use crate::moment::{enumerate_range, CentroidSymbol, MomentKey, SystemSignature};
use crate::{Error, Result};

/// `Σ c_e Π_j q_j^{a_j} p_j^{b_j}`, read as Weyl ordered on quantum degrees of freedom.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PolyHamiltonian {
    dofs: usize,
    terms: BTreeMap<Vec<(u32, u32)>, Rational>,
}

impl PolyHamiltonian {
    pub fn new(dofs: usize) -> Self {
        Self { dofs, terms: BTreeMap::new() }
    }

    pub fn from_terms(dofs: usize, terms: impl IntoIterator<Item = (Vec<(u32, u32)>, Rational)>) -> Result<Self> {
        let mut h = Self::new(dofs);
        for (e, c) in terms {
            h.add_term(e, c)?;
        }
        Ok(h)
    }

    pub fn add_term(&mut self, exponents: Vec<(u32, u32)>, coefficient: Rational) -> Result<()> {
        if exponents.len() != self.dofs {
            return Err(Error::DofMismatch { expected: self.dofs, found: exponents.len() });
        }
        let slot = self.terms.entry(exponents.clone()).or_insert_with(Rational::zero);
        *slot += coefficient;
        if slot.is_zero() {
            self.terms.remove(&exponents);
        }
        Ok(())
    }

    pub fn dofs(&self) -> usize {
        self.dofs
    }

    pub fn terms(&self) -> impl Iterator<Item = (&[(u32, u32)], &Rational)> {
        self.terms.iter().map(|(e, c)| (e.as_slice(), c))
    }

    /// Total degree; 0 for the zero Hamiltonian.
    pub fn degree(&self) -> u32 {
        self.terms.keys().map(|e| e.iter().map(|(a, b)| a + b).sum()).max().unwrap_or(0)
    }

    /// At most quadratic in the basic variables.
    pub fn is_harmonic(&self) -> bool {
        self.degree() <= 2
    }

    /// The Hamiltonian as a polynomial in the centroids.
    pub fn at_centroids(&self) -> MomentPolynomial {
        let mut out = MomentPolynomial::zero();
        for (e, c) in &self.terms {
            out += centroid_monomial(e).scale(c);
        }
        out
    }
}

pub fn is_harmonic(h: &PolyHamiltonian) -> bool {
    h.is_harmonic()
}

fn centroid_monomial(e: &[(u32, u32)]) -> MomentPolynomial {
    let mut m = MomentPolynomial::one();
    for (j, &(a, b)) in e.iter().enumerate() {
        m = &m * &MomentPolynomial::centroid(CentroidSymbol::position(j)).pow(a);
        m = &m * &MomentPolynomial::centroid(CentroidSymbol::momentum(j)).pow(b);
    }
    m
}

/// `Σ_{μ ≤ e, |μ| ≠ 1, |μ| ≤ n_max} Π C(e, μ) · centroid^{e−μ} · Δ(μ)`, the
/// expectation of a monomial expanded around the centroid.
fn expand_monomial(e: &[(u32, u32)], n_max: u32) -> MomentPolynomial {
    let mut subs: Vec<Vec<(u32, u32)>> = vec![Vec::new()];
    for &(a, b) in e {
        let mut next = Vec::new();
        for s in &subs {
            for i in 0..=a {
                for k in 0..=b {
                    let mut v = s.clone();
                    v.push((i, k));
                    next.push(v);
                }
            }
        }
        subs = next;
    }
    let mut out = MomentPolynomial::zero();
    for mu in subs {
        let order: u32 = mu.iter().map(|(a, b)| a + b).sum();
        if order == 1 || order > n_max {
            continue;
        }
        let coeff =
            e.iter().zip(&mu).fold(BigInt::one(), |acc, (&(a, b), &(i, k))| acc * binomial(a, i) * binomial(b, k));
        let rest: Vec<(u32, u32)> = e.iter().zip(&mu).map(|(&(a, b), &(i, k))| (a - i, b - k)).collect();
        let term = &centroid_monomial(&rest) * &MomentPolynomial::moment(MomentKey::new(mu));
        out += term.scale(&Rational::from_integer(coeff));
    }
    out
}

/// Expectation value of `h` in terms of centroids and moments up to order `n_max`.
pub fn effective_hamiltonian(h: &PolyHamiltonian, sig: &SystemSignature, n_max: u32) -> Result<MomentPolynomial> {
    if n_max < 2 {
        return Err(Error::InvalidTruncation(n_max));
    }
    if h.dofs() != sig.dofs() {
        return Err(Error::DofMismatch { expected: sig.dofs(), found: h.dofs() });
    }
    let mut out = MomentPolynomial::zero();
    for (e, c) in h.terms() {
        out += expand_monomial(e, n_max).scale(c);
    }
    Ok(out)
}

/// Truncated equations of motion: one right-hand side per state symbol.
#[derive(Debug, Clone, PartialEq)]
pub struct EomSystem {
    signature: SystemSignature,
    kind: BracketKind,
    truncation: u32,
    hamiltonian: MomentPolynomial,
    layout: Vec<Symbol>,
    rhs: Vec<MomentPolynomial>,
}

impl EomSystem {
    pub fn signature(&self) -> &SystemSignature {
        &self.signature
    }

    pub fn kind(&self) -> BracketKind {
        self.kind
    }

    pub fn truncation_order(&self) -> u32 {
        self.truncation
    }

    /// The effective Hamiltonian the equations were generated from.
    pub fn effective_hamiltonian(&self) -> &MomentPolynomial {
        &self.hamiltonian
    }

    /// Centroids `q1, p1, q2, p2, …` followed by the retained moments in key order.
    pub fn state_layout(&self) -> &[Symbol] {
        &self.layout
    }

    pub fn rhs(&self) -> &[MomentPolynomial] {
        &self.rhs
    }

    pub fn index_of(&self, s: &Symbol) -> Option<usize> {
        self.layout.iter().position(|x| x == s)
    }

    pub fn rhs_of(&self, s: &Symbol) -> Option<&MomentPolynomial> {
        self.index_of(s).map(|i| &self.rhs[i])
    }

    pub fn equations(&self) -> impl Iterator<Item = (&Symbol, &MomentPolynomial)> {
        self.layout.iter().zip(&self.rhs)
    }

    /// Same layout and right-hand sides, irrespective of the bracket kind used.
    pub fn same_equations(&self, other: &Self) -> bool {
        self.layout == other.layout && self.rhs == other.rhs
    }
}

impl fmt::Display for EomSystem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (s, r) in self.equations() {
            writeln!(f, "d/dt {s} = {r}")?;
        }
        Ok(())
    }
}

fn exceeds_truncation(m: &crate::algebra::Monomial<Symbol>, n_max: u32) -> bool {
    m.factors().iter().any(|(s, _)| matches!(s, Symbol::Moment(k) if k.order() > n_max))
}

/// Centroid equations from the derivatives of the effective Hamiltonian and
/// moment equations `dΔ/dt = {Δ, H_eff}`, with moments above `n_max` set to zero.
pub fn generate_eom(h: &PolyHamiltonian, sig: &SystemSignature, kind: BracketKind, n_max: u32) -> Result<EomSystem> {
    let heff = effective_hamiltonian(h, sig, n_max)?;
    let mut layout = Vec::new();
    let mut rhs = Vec::new();
    for c in CentroidSymbol::all(sig.dofs()) {
        let conj = Symbol::Centroid(c.conjugate());
        let d = heff.derivative(&conj);
        layout.push(Symbol::Centroid(c));
        rhs.push(match c.kind {
            crate::moment::CanonicalKind::Position => d,
            crate::moment::CanonicalKind::Momentum => -d,
        });
    }
    let mut engine = BracketEngine::new(*sig, kind);
    for key in enumerate_range(sig.dofs(), 2, n_max) {
        let mut r = engine.polys(&MomentPolynomial::moment(key.clone()), &heff)?;
        r.retain(|m| !exceeds_truncation(m, n_max));
        layout.push(Symbol::Moment(key));
        rhs.push(r);
    }
    Ok(EomSystem { signature: *sig, kind, truncation: n_max, hamiltonian: heff, layout, rhs })
}

/// `½(p² + ω² q²) + ½(k² + ω² x²) + γ q x` on two degrees of freedom.
pub fn coupled_oscillators(omega_sq: Rational, gamma: Rational) -> PolyHamiltonian {
    let half = Rational::new(BigInt::one(), BigInt::from(2));
    let terms = [
        (vec![(0, 2), (0, 0)], half.clone()),
        (vec![(2, 0), (0, 0)], &half * &omega_sq),
        (vec![(0, 0), (0, 2)], half.clone()),
        (vec![(0, 0), (2, 0)], &half * &omega_sq),
        (vec![(1, 0), (1, 0)], gamma),
    ];
    PolyHamiltonian::from_terms(2, terms).expect("two degrees of freedom")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::rational;
    use alloc::string::ToString;

    fn q(j: usize) -> MomentPolynomial {
        MomentPolynomial::centroid(CentroidSymbol::position(j))
    }

    fn p(j: usize) -> MomentPolynomial {
        MomentPolynomial::centroid(CentroidSymbol::momentum(j))
    }

    fn d(e: &[(u32, u32)]) -> MomentPolynomial {
        MomentPolynomial::moment(MomentKey::new(e.to_vec()))
    }

    fn r(n: i64, m: i64) -> Rational {
        rational(n, m)
    }

    #[test]
    fn oscillator_effective_hamiltonian() {
        let (w2, g) = (r(13, 2), r(5, 2));
        let h = coupled_oscillators(w2.clone(), g.clone());
        let sig = SystemSignature::new(1, 1, 1.0).unwrap();
        let heff = effective_hamiltonian(&h, &sig, 4).unwrap();
        let half = r(1, 2);
        let mut expect = h.at_centroids();
        expect += (&d(&[(0, 2), (0, 0)]) + &d(&[(2, 0), (0, 0)]).scale(&w2)).scale(&half);
        expect += (&d(&[(0, 0), (0, 2)]) + &d(&[(0, 0), (2, 0)]).scale(&w2)).scale(&half);
        expect += d(&[(1, 0), (1, 0)]).scale(&g);
        assert_eq!(heff, expect);
    }

    #[test]
    fn quartic_expansion() {
        let h = PolyHamiltonian::from_terms(1, [(vec![(4, 0)], r(1, 1))]).unwrap();
        let sig = SystemSignature::quantum(1, 1.0).unwrap();
        let heff = effective_hamiltonian(&h, &sig, 4).unwrap();
        let expect = &(&(&q(0).pow(4) + &(&q(0).pow(2) * &d(&[(2, 0)])).scale(&r(6, 1)))
            + &(&q(0) * &d(&[(3, 0)])).scale(&r(4, 1)))
            + &d(&[(4, 0)]);
        assert_eq!(heff, expect);
        assert!(matches!(effective_hamiltonian(&h, &sig, 1), Err(Error::InvalidTruncation(1))));
    }

    #[test]
    fn linear_hamiltonian_has_no_corrections() {
        let h = PolyHamiltonian::from_terms(1, [(vec![(0, 1)], r(1, 1))]).unwrap();
        let sig = SystemSignature::quantum(1, 1.0).unwrap();
        for n in 2..6 {
            assert_eq!(effective_hamiltonian(&h, &sig, n).unwrap(), p(0));
        }
    }

    #[test]
    fn oscillator_equations() {
        let h = coupled_oscillators(r(13, 2), r(5, 2));
        let sig = SystemSignature::new(1, 1, 1.0).unwrap();
        let sys = generate_eom(&h, &sig, BracketKind::Hybrid, 2).unwrap();
        let dq2 = sys.rhs_of(&Symbol::Moment(MomentKey::new(vec![(2, 0), (0, 0)]))).unwrap();
        assert_eq!(dq2, &d(&[(1, 1), (0, 0)]).scale(&r(2, 1)));
        let dp = sys.rhs_of(&Symbol::Centroid(CentroidSymbol::momentum(0))).unwrap();
        assert_eq!(dp, &(&q(0).scale(&r(-13, 2)) + &q(1).scale(&r(-5, 2))));
        let dk = sys.rhs_of(&Symbol::Centroid(CentroidSymbol::momentum(1))).unwrap();
        assert_eq!(dk, &(&q(1).scale(&r(-13, 2)) + &q(0).scale(&r(-5, 2))));
        assert_eq!(sys.state_layout().len(), 4 + 10);
        assert!(sys.to_string().contains("d/dt d[2,0;0,0] = 2*d[1,1;0,0]"));
    }

    #[test]
    fn cubic_potential_backreaction() {
        let h = PolyHamiltonian::from_terms(1, [(vec![(0, 2)], r(1, 2)), (vec![(3, 0)], r(7, 3))]).unwrap();
        let sig = SystemSignature::quantum(1, 1.0).unwrap();
        let sys = generate_eom(&h, &sig, BracketKind::Quantum, 2).unwrap();
        let dp = sys.rhs_of(&Symbol::Centroid(CentroidSymbol::momentum(0))).unwrap();
        let expect = &q(0).pow(2).scale(&r(-7, 1)) + &d(&[(2, 0)]).scale(&r(-7, 1));
        assert_eq!(dp, &expect);
        for (s, rhs) in sys.equations() {
            if let Symbol::Moment(_) = s {
                assert!(rhs.max_moment_order() <= 2, "{s}: {rhs}");
            }
        }
    }

    #[test]
    fn harmonic_classification() {
        assert!(coupled_oscillators(r(1, 1), r(0, 1)).is_harmonic());
        assert!(!PolyHamiltonian::from_terms(1, [(vec![(4, 0)], r(1, 1))]).unwrap().is_harmonic());
        assert!(PolyHamiltonian::from_terms(1, [(vec![(0, 0)], r(3, 1))]).unwrap().is_harmonic());
        assert!(PolyHamiltonian::new(1).is_harmonic());
    }

    #[test]
    fn dof_mismatch() {
        let mut h = PolyHamiltonian::new(2);
        assert!(h.add_term(vec![(1, 0)], r(1, 1)).is_err());
        let h1 = PolyHamiltonian::from_terms(1, [(vec![(2, 0)], r(1, 1))]).unwrap();
        assert!(effective_hamiltonian(&h1, &SystemSignature::quantum(2, 1.0).unwrap(), 2).is_err());
    }
}
