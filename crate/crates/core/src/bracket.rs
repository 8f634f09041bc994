//! Closed-form Poisson brackets between central moments.
//!
//! For keys `A = (a_j, b_j)` and `B = (m_j, n_j)` the bracket is the sum of
//!
//! - a quadratic part, `Σ_j b_j m_j Δ(A − p_j) Δ(B − q_j) − a_j n_j Δ(A − q_j) Δ(B − p_j)`,
//! - a linear part, `Σ_α (−1)^L (ħ/2)^{2L} Π_j K^{α_j}_{a_j b_j m_j n_j} Δ(A + B − α)`
//!   over all `α` with `α_j ≤ min(a_j+m_j, b_j+n_j, a_j+b_j, m_j+n_j)` and odd
//!   total `Σ α_j = 2L + 1`.
//!
//! The classical bracket keeps only `L = 0`. The hybrid bracket keeps `L = 0`
//! and those `L ≥ 1` terms whose `α` vanishes on every classical degree of freedom.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use num_bigint::BigInt;
use num_traits::{One, Zero};

use crate::algebra::{binomial, factorial, MomentPolynomial, Rational, Symbol};
use crate::moment::{enumerate_range, CanonicalKind, CentroidSymbol, MomentKey, SystemSignature};
use crate::Result;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BracketKind {
    Quantum,
    Classical,
    Hybrid,
}

impl BracketKind {
    pub const ALL: [BracketKind; 3] = [BracketKind::Quantum, BracketKind::Classical, BracketKind::Hybrid];

    /// Number of leading degrees of freedom treated classically under this kind.
    pub fn classical_dofs(self, sig: &SystemSignature) -> usize {
        match self {
            BracketKind::Quantum => 0,
            BracketKind::Classical => sig.dofs(),
            BracketKind::Hybrid => sig.n_classical(),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            BracketKind::Quantum => "quantum",
            BracketKind::Classical => "classical",
            BracketKind::Hybrid => "hybrid",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "quantum" => Some(BracketKind::Quantum),
            "classical" => Some(BracketKind::Classical),
            "hybrid" => Some(BracketKind::Hybrid),
            _ => None,
        }
    }
}

impl core::fmt::Display for BracketKind {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.write_str(self.name())
    }
}

/// `K^α_{abmn} = Σ_{k=0}^{α} (−1)^k k! (α−k)! C(a, α−k) C(b, k) C(m, k) C(n, α−k)`.
pub fn k_coefficient(a: u32, b: u32, m: u32, n: u32, alpha: u32) -> Rational {
    let mut sum = BigInt::zero();
    for k in 0..=alpha {
        let j = alpha - k;
        let term = factorial(k) * factorial(j) * binomial(a, j) * binomial(b, k) * binomial(m, k) * binomial(n, j);
        if k % 2 == 0 {
            sum += term;
        } else {
            sum -= term;
        }
    }
    Rational::from_integer(sum)
}

fn int(n: u32) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

/// Every `α` with `α_j ≤ caps[j]` and odd total, with `α_j = 0` on the first
/// `frozen` entries unless the total is 1.
fn odd_alphas(caps: &[u32], frozen: usize, linear_only: bool) -> Vec<Vec<u32>> {
    fn rec(caps: &[u32], j: usize, cur: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if j == caps.len() {
            if cur.iter().sum::<u32>() % 2 == 1 {
                out.push(cur.clone());
            }
            return;
        }
        for v in 0..=caps[j] {
            cur.push(v);
            rec(caps, j + 1, cur, out);
            cur.pop();
        }
    }
    let mut all = Vec::new();
    rec(caps, 0, &mut Vec::new(), &mut all);
    all.retain(|alpha| {
        let total: u32 = alpha.iter().sum();
        if total == 1 {
            return true;
        }
        !linear_only && alpha[..frozen].iter().all(|&v| v == 0)
    });
    all
}

/// Closed-form bracket `{Δ(key1), Δ(key2)}` under `kind`.
pub fn moment_bracket(
    key1: &MomentKey,
    key2: &MomentKey,
    sig: &SystemSignature,
    kind: BracketKind,
) -> Result<MomentPolynomial> {
    sig.check_key(key1)?;
    sig.check_key(key2)?;
    let dofs = sig.dofs();
    let mut out = MomentPolynomial::zero();

    for j in 0..dofs {
        let (a, b) = key1.get(j);
        let (m, n) = key2.get(j);
        if b > 0 && m > 0 {
            let l = key1.lowered(j, CanonicalKind::Momentum).expect("b > 0");
            let r = key2.lowered(j, CanonicalKind::Position).expect("m > 0");
            out += (&MomentPolynomial::moment(l) * &MomentPolynomial::moment(r)).scale(&int(b * m));
        }
        if a > 0 && n > 0 {
            let l = key1.lowered(j, CanonicalKind::Position).expect("a > 0");
            let r = key2.lowered(j, CanonicalKind::Momentum).expect("n > 0");
            out += (&MomentPolynomial::moment(l) * &MomentPolynomial::moment(r)).scale(&-int(a * n));
        }
    }

    let caps: Vec<u32> = (0..dofs)
        .map(|j| {
            let (a, b) = key1.get(j);
            let (m, n) = key2.get(j);
            (a + m).min(b + n).min(a + b).min(m + n)
        })
        .collect();
    let frozen = kind.classical_dofs(sig);
    let linear_only = kind == BracketKind::Classical;
    let quarter = Rational::new(BigInt::one(), BigInt::from(4));
    for alpha in odd_alphas(&caps, frozen, linear_only) {
        let mut exps = Vec::with_capacity(dofs);
        let mut coeff = Rational::one();
        for (j, &al) in alpha.iter().enumerate() {
            let (a, b) = key1.get(j);
            let (m, n) = key2.get(j);
            if a + m < al || b + n < al {
                coeff = Rational::zero();
                break;
            }
            coeff *= k_coefficient(a, b, m, n, al);
            if coeff.is_zero() {
                break;
            }
            exps.push((a + m - al, b + n - al));
        }
        if coeff.is_zero() {
            continue;
        }
        let level = (alpha.iter().sum::<u32>() - 1) / 2;
        if level % 2 == 1 {
            coeff = -coeff;
        }
        coeff *= num_traits::pow(quarter.clone(), level as usize);
        let moment = MomentPolynomial::moment(MomentKey::new(exps));
        out += &MomentPolynomial::hbar2(level, coeff) * &moment;
    }
    Ok(out)
}

/// Canonical bracket between centroids; any bracket between a centroid and a moment vanishes.
pub fn centroid_bracket(s1: &Symbol, s2: &Symbol) -> MomentPolynomial {
    match (s1, s2) {
        (Symbol::Centroid(x), Symbol::Centroid(y)) if x.dof == y.dof => match (x.kind, y.kind) {
            (CanonicalKind::Position, CanonicalKind::Momentum) => MomentPolynomial::one(),
            (CanonicalKind::Momentum, CanonicalKind::Position) => -MomentPolynomial::one(),
            _ => MomentPolynomial::zero(),
        },
        _ => MomentPolynomial::zero(),
    }
}

/// Bracket between two symbols of the moment algebra.
pub fn symbol_bracket(s1: &Symbol, s2: &Symbol, sig: &SystemSignature, kind: BracketKind) -> Result<MomentPolynomial> {
    match (s1, s2) {
        (Symbol::Moment(a), Symbol::Moment(b)) => moment_bracket(a, b, sig, kind),
        _ => Ok(centroid_bracket(s1, s2)),
    }
}

/// Bracket machinery with memoized symbol brackets.
pub struct BracketEngine {
    sig: SystemSignature,
    kind: BracketKind,
    cache: BTreeMap<(Symbol, Symbol), MomentPolynomial>,
}

impl BracketEngine {
    pub fn new(sig: SystemSignature, kind: BracketKind) -> Self {
        Self { sig, kind, cache: BTreeMap::new() }
    }

    pub fn signature(&self) -> &SystemSignature {
        &self.sig
    }

    pub fn kind(&self) -> BracketKind {
        self.kind
    }

    pub fn symbols(&mut self, s1: &Symbol, s2: &Symbol) -> Result<MomentPolynomial> {
        if let Some(hit) = self.cache.get(&(s1.clone(), s2.clone())) {
            return Ok(hit.clone());
        }
        let value = symbol_bracket(s1, s2, &self.sig, self.kind)?;
        self.cache.insert((s1.clone(), s2.clone()), value.clone());
        Ok(value)
    }

    /// Bracket of two polynomials by bilinearity and the Leibniz rule.
    pub fn polys(&mut self, a: &MomentPolynomial, b: &MomentPolynomial) -> Result<MomentPolynomial> {
        for s in a.symbols() {
            if let Symbol::Moment(k) = &s {
                self.sig.check_key(k)?;
            }
        }
        for s in b.symbols() {
            if let Symbol::Moment(k) = &s {
                self.sig.check_key(k)?;
            }
        }
        // keys were checked above, so the symbol bracket cannot fail
        Ok(a.bracket_with(b, |s, t| self.symbols(s, t).expect("validated keys")))
    }

    pub fn jacobiator(
        &mut self,
        a: &MomentPolynomial,
        b: &MomentPolynomial,
        c: &MomentPolynomial,
    ) -> Result<MomentPolynomial> {
        let bc = self.polys(b, c)?;
        let ca = self.polys(c, a)?;
        let ab = self.polys(a, b)?;
        Ok(self.polys(a, &bc)? + self.polys(b, &ca)? + self.polys(c, &ab)?)
    }
}

/// `{Δ1,{Δ2,Δ3}} + {Δ2,{Δ3,Δ1}} + {Δ3,{Δ1,Δ2}}`, fully expanded.
pub fn jacobiator(
    k1: &MomentKey,
    k2: &MomentKey,
    k3: &MomentKey,
    sig: &SystemSignature,
    kind: BracketKind,
) -> Result<MomentPolynomial> {
    let mut engine = BracketEngine::new(*sig, kind);
    engine.jacobiator(
        &MomentPolynomial::moment(k1.clone()),
        &MomentPolynomial::moment(k2.clone()),
        &MomentPolynomial::moment(k3.clone()),
    )
}

#[derive(Debug, Clone)]
pub struct JacobiWitness {
    pub keys: [MomentKey; 3],
    pub jacobiator: MomentPolynomial,
}

/// Searches unordered triples of moments with orders in `2..=max_order` for a
/// nonzero Jacobiator. Returns the first witness found, in key order.
pub fn find_jacobi_witness(sig: &SystemSignature, kind: BracketKind, max_order: u32) -> Option<JacobiWitness> {
    let keys = enumerate_range(sig.dofs(), 2, max_order.max(2));
    let mut engine = BracketEngine::new(*sig, kind);
    for i in 0..keys.len() {
        for j in i..keys.len() {
            for l in j..keys.len() {
                let polys = [&keys[i], &keys[j], &keys[l]].map(|k| MomentPolynomial::moment(k.clone()));
                let jac = engine.jacobiator(&polys[0], &polys[1], &polys[2]).expect("enumerated keys match signature");
                if !jac.is_zero() {
                    return Some(JacobiWitness {
                        keys: [keys[i].clone(), keys[j].clone(), keys[l].clone()],
                        jacobiator: jac,
                    });
                }
            }
        }
    }
    None
}

/// Sum of the `L = 0` linear term coefficients, `a_j n_j − b_j m_j`, for one degree of freedom.
pub fn linear_coefficient(key1: &MomentKey, key2: &MomentKey, dof: usize) -> i64 {
    let (a, b) = key1.get(dof);
    let (m, n) = key2.get(dof);
    (a * n) as i64 - (b * m) as i64
}

/// Centroids of `sig` as symbols.
pub fn centroid_symbols(sig: &SystemSignature) -> Vec<Symbol> {
    CentroidSymbol::all(sig.dofs()).into_iter().map(Symbol::Centroid).collect()
}
