//! Observables on the product of a classical phase space and a quantum
//! operator algebra, with the hybrid bracket
//! `[[f F, g G]] = {f, g} R(F, G) + [F, G] f g / (iħ)`.
//!
//! A basis element is an exponent vector over all degrees of freedom: the
//! first `n_classical` entries give a phase-space monomial, the remaining ones
//! a Weyl-ordered operator monomial.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use num_traits::Zero;

use super::operator::{accumulate, Exponents, HbarSeries, NormalMap, OperatorAlgebra};
use crate::algebra::Rational;
use crate::{Error, Result};

type Pair = (u32, u32);

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HybridObservable {
    n_classical: usize,
    dofs: usize,
    terms: BTreeMap<Exponents, HbarSeries>,
}

impl HybridObservable {
    pub fn zero(n_classical: usize, dofs: usize) -> Self {
        Self { n_classical, dofs, terms: BTreeMap::new() }
    }

    /// `f(q̃, p̃) ⊗ (F)_Weyl` for the monomials encoded by `exps`.
    pub fn basis(n_classical: usize, exps: Exponents) -> Self {
        let mut out = Self::zero(n_classical, exps.len());
        out.terms.insert(exps, HbarSeries::one());
        out
    }

    pub fn n_classical(&self) -> usize {
        self.n_classical
    }

    pub fn dofs(&self) -> usize {
        self.dofs
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Exponents, &HbarSeries)> {
        self.terms.iter()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn add_term(&mut self, exps: Exponents, c: &HbarSeries) {
        accumulate(&mut self.terms, exps, c);
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for (e, c) in &other.terms {
            out.add_term(e.clone(), c);
        }
        out
    }

    pub fn scale(&self, c: &HbarSeries) -> Self {
        let mut out = Self::zero(self.n_classical, self.dofs);
        for (e, v) in &self.terms {
            out.add_term(e.clone(), &v.mul(c));
        }
        out
    }

    /// Real coefficients with even powers of `ħ`, keyed by `(exponents, k)` for `ħ^{2k}`.
    pub fn to_real(&self) -> Result<BTreeMap<(Exponents, u32), Rational>> {
        let mut out = BTreeMap::new();
        for (e, c) in &self.terms {
            let real = c.to_real_even().map_err(|msg| Error::ImaginaryResidue(format!("{} in term {:?}", msg, e)))?;
            for (k, v) in real {
                if !v.is_zero() {
                    out.insert((e.clone(), k), v);
                }
            }
        }
        Ok(out)
    }
}

/// Exponentwise sum of two monomial vectors.
fn add_exps(a: &[(u32, u32)], b: &[(u32, u32)]) -> Exponents {
    a.iter().zip(b).map(|(x, y)| (x.0 + y.0, x.1 + y.1)).collect()
}

/// Phase-space Poisson bracket of two monomials on the given slots, by
/// differentiating term by term.
pub fn classical_monomial_bracket(
    a: &[(u32, u32)],
    b: &[(u32, u32)],
    slots: core::ops::Range<usize>,
) -> Vec<(Exponents, Rational)> {
    let mut out: BTreeMap<Exponents, Rational> = BTreeMap::new();
    let mut push = |e: Exponents, c: i64| {
        let slot = out.entry(e).or_insert_with(Rational::zero);
        *slot += Rational::from_integer(c.into());
    };
    for j in slots {
        let (a1, b1) = a[j];
        let (m, n) = b[j];
        // ∂q f ∂p g
        if a1 > 0 && n > 0 {
            let mut e = add_exps(a, b);
            e[j] = (a1 + m - 1, b1 + n - 1);
            push(e, (a1 * n) as i64);
        }
        // − ∂p f ∂q g
        if b1 > 0 && m > 0 {
            let mut e = add_exps(a, b);
            e[j] = (a1 + m - 1, b1 + n - 1);
            push(e, -((b1 * m) as i64));
        }
    }
    out.into_iter().filter(|(_, c)| !c.is_zero()).collect()
}

/// Evaluates hybrid brackets and the R map, caching operator algebra work.
#[derive(Debug)]
pub struct HybridAlgebra {
    n_classical: usize,
    dofs: usize,
    ops: OperatorAlgebra,
}

impl HybridAlgebra {
    pub fn new(n_classical: usize, dofs: usize) -> Self {
        Self { n_classical, dofs, ops: OperatorAlgebra::new(dofs - n_classical) }
    }

    pub fn n_classical(&self) -> usize {
        self.n_classical
    }

    pub fn dofs(&self) -> usize {
        self.dofs
    }

    fn split<'a>(&self, e: &'a [Pair]) -> (&'a [Pair], &'a [Pair]) {
        e.split_at(self.n_classical)
    }

    /// `R((F)_W, (G)_W) = (F G)_W` with exponents added, extended bilinearly.
    /// Classical factors multiply as ordinary functions.
    pub fn r_map(&self, x: &HybridObservable, y: &HybridObservable) -> HybridObservable {
        let mut out = HybridObservable::zero(self.n_classical, self.dofs);
        for (e1, c1) in x.terms() {
            for (e2, c2) in y.terms() {
                out.add_term(add_exps(e1, e2), &c1.mul(c2));
            }
        }
        out
    }

    /// `[(F)_W, (G)_W] / (iħ)` expanded in the Weyl basis of the quantum slots.
    fn quantum_bracket(&mut self, f: &[(u32, u32)], g: &[(u32, u32)]) -> Result<NormalMap> {
        let wf = self.ops.weyl(f);
        let wg = self.ops.weyl(g);
        let comm = self.ops.commutator(&wf, &wg);
        let weyl = self.ops.to_weyl_basis(&comm);
        let mut out = NormalMap::new();
        for (e, c) in weyl {
            let d = c
                .div_i_hbar()
                .ok_or_else(|| Error::ImaginaryResidue(format!("commutator term {:?} without a factor of hbar", e)))?;
            accumulate(&mut out, e, &d);
        }
        Ok(out)
    }

    /// The hybrid bracket on basis elements.
    pub fn basis_bracket(&mut self, e1: &[(u32, u32)], e2: &[(u32, u32)]) -> Result<HybridObservable> {
        let nc = self.n_classical;
        let mut out = HybridObservable::zero(nc, self.dofs);
        let (f, big_f) = self.split(e1);
        let (g, big_g) = self.split(e2);

        // {f, g} R(F, G)
        let r: Exponents = add_exps(big_f, big_g);
        for (mut e, c) in classical_monomial_bracket(e1, e2, 0..nc) {
            e.truncate(nc);
            e.extend_from_slice(&r);
            out.add_term(e, &HbarSeries::real(c));
        }

        // [F, G] f g / (iħ)
        if self.dofs > nc {
            let fg = add_exps(f, g);
            let (big_f, big_g) = (big_f.to_vec(), big_g.to_vec());
            for (eq, c) in self.quantum_bracket(&big_f, &big_g)? {
                let mut e = fg.clone();
                e.extend_from_slice(&eq);
                out.add_term(e, &c);
            }
        }
        Ok(out)
    }

    pub fn bracket(&mut self, x: &HybridObservable, y: &HybridObservable) -> Result<HybridObservable> {
        let mut out = HybridObservable::zero(self.n_classical, self.dofs);
        for (e1, c1) in x.terms() {
            for (e2, c2) in y.terms() {
                let b = self.basis_bracket(e1, e2)?;
                out = out.add(&b.scale(&c1.mul(c2)));
            }
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PropertyCheck {
    pub name: String,
    pub passed: bool,
    pub detail: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RPropertyReport {
    pub checks: Vec<PropertyCheck>,
}

impl RPropertyReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    fn record(&mut self, name: &str, failure: Option<String>) {
        self.checks.push(PropertyCheck { name: name.into(), passed: failure.is_none(), detail: failure });
    }
}

fn weyl_exponents(max: u32, dofs: usize) -> Vec<Exponents> {
    let mut out: Vec<Exponents> = alloc::vec![Vec::new()];
    for _ in 0..dofs {
        let mut next = Vec::new();
        for e in &out {
            for a in 0..=max {
                for b in 0..=max - a {
                    let mut e2 = e.clone();
                    e2.push((a, b));
                    next.push(e2);
                }
            }
        }
        out = next;
    }
    out
}

/// Checks the R map and bracket axioms on Weyl monomials with total
/// exponent up to 3 (one classical and one quantum degree of freedom).
pub fn verify_r_properties() -> RPropertyReport {
    let mut report = RPropertyReport::default();
    let mut alg = HybridAlgebra::new(1, 2);
    let quantum: Vec<HybridObservable> = weyl_exponents(3, 1)
        .into_iter()
        .map(|e| HybridObservable::basis(1, [(0, 0)].into_iter().chain(e).collect()))
        .collect();
    let one = HybridObservable::basis(1, alloc::vec![(0, 0), (0, 0)]);
    let c = |n: i64, d: i64| HbarSeries::real(crate::algebra::rational(n, d));

    let mut first = None;
    'sym: for a in &quantum {
        for b in &quantum {
            if alg.r_map(a, b) != alg.r_map(b, a) {
                first = Some(format!("R not symmetric on {:?}, {:?}", a.terms, b.terms));
                break 'sym;
            }
        }
    }
    report.record("R symmetric", first);

    let mut first = None;
    'lin: for a in &quantum {
        for b in &quantum {
            for g in quantum.iter().step_by(3) {
                let combo = a.scale(&c(3, 2)).add(&b.scale(&c(-2, 5)));
                let lhs = alg.r_map(&combo, g);
                let rhs = alg.r_map(a, g).scale(&c(3, 2)).add(&alg.r_map(b, g).scale(&c(-2, 5)));
                if lhs != rhs {
                    first = Some(format!("R not bilinear on {:?}, {:?}", a.terms, b.terms));
                    break 'lin;
                }
            }
        }
    }
    report.record("R bilinear", first);

    let first = quantum.iter().find(|g| alg.r_map(&one, g) != **g).map(|g| format!("R(1, G) != G for {:?}", g.terms));
    report.record("R identity", first);

    let mut first = None;
    'nest: for a in quantum.iter().step_by(2) {
        for b in quantum.iter().step_by(2) {
            for g in quantum.iter().step_by(2) {
                let abc = alg.r_map(a, &alg.r_map(b, g));
                let bca = alg.r_map(b, &alg.r_map(g, a));
                let cab = alg.r_map(g, &alg.r_map(a, b));
                if abc != bca || bca != cab {
                    first = Some(format!("R nesting fails on {:?}, {:?}, {:?}", a.terms, b.terms, g.terms));
                    break 'nest;
                }
            }
        }
    }
    report.record("R nesting", first);

    // bracket axioms on sampled hybrid observables
    let samples: Vec<HybridObservable> = weyl_exponents(2, 2)
        .into_iter()
        .filter(|e| e.iter().map(|(a, b)| a + b).sum::<u32>() <= 3)
        .map(|e| HybridObservable::basis(1, e))
        .collect();
    let mut anti = None;
    let mut bilinear = None;
    for (i, a) in samples.iter().enumerate() {
        for b in samples.iter().skip(i) {
            let ab = alg.bracket(a, b);
            let ba = alg.bracket(b, a);
            match (ab, ba) {
                (Ok(ab), Ok(ba)) => {
                    if anti.is_none() && !ab.add(&ba).is_zero() {
                        anti = Some(format!("[[A,B]] + [[B,A]] != 0 for {:?}, {:?}", a.terms, b.terms));
                    }
                }
                (Err(e), _) | (_, Err(e)) => {
                    anti.get_or_insert(format!("bracket failed: {e}"));
                }
            }
            if bilinear.is_none() {
                let g = &samples[(i * 7 + 3) % samples.len()];
                let combo = a.scale(&c(5, 3)).add(&g.scale(&c(-1, 4)));
                let lhs = alg.bracket(&combo, b);
                let rhs = alg
                    .bracket(a, b)
                    .and_then(|x| alg.bracket(g, b).map(|y| x.scale(&c(5, 3)).add(&y.scale(&c(-1, 4)))));
                if lhs.ok() != rhs.ok() {
                    bilinear = Some(format!("bracket not bilinear at {:?}, {:?}", a.terms, b.terms));
                }
            }
        }
    }
    report.record("bracket antisymmetric", anti);
    report.record("bracket bilinear", bilinear);

    // a classical function and a quantum operator
    let f = HybridObservable::basis(1, alloc::vec![(2, 0), (0, 0)]);
    let g = HybridObservable::basis(1, alloc::vec![(0, 0), (1, 1)]);
    let mixed = alg.bracket(&f, &g).map(|b| b.is_zero()).unwrap_or(false);
    report.record("classical-quantum bracket vanishes", (!mixed).then(|| "[[q^2, (xk)_W]] != 0".into()));

    // two classical functions: the Poisson bracket
    let mut first = None;
    for a in samples.iter().filter(|s| s.terms.keys().all(|e| e[1] == (0, 0))) {
        for b in samples.iter().filter(|s| s.terms.keys().all(|e| e[1] == (0, 0))) {
            let (ea, eb) = (a.terms.keys().next().unwrap(), b.terms.keys().next().unwrap());
            let mut expect = HybridObservable::zero(1, 2);
            for (e, v) in classical_monomial_bracket(ea, eb, 0..1) {
                expect.add_term(e, &HbarSeries::real(v));
            }
            if alg.bracket(a, b).ok().as_ref() != Some(&expect) {
                first = Some(format!("classical reduction fails on {ea:?}, {eb:?}"));
            }
        }
    }
    report.record("classical sector reduces to the Poisson bracket", first);

    // two quantum operators: the commutator over iħ
    let mut first = None;
    let mut ops = OperatorAlgebra::new(1);
    for a in samples.iter().filter(|s| s.terms.keys().all(|e| e[0] == (0, 0))) {
        for b in samples.iter().filter(|s| s.terms.keys().all(|e| e[0] == (0, 0))) {
            let (ea, eb) = (a.terms.keys().next().unwrap(), b.terms.keys().next().unwrap());
            let wa = ops.weyl(&ea[1..]);
            let wb = ops.weyl(&eb[1..]);
            let comm = ops.commutator(&wa, &wb);
            let got = alg.bracket(a, b).ok().map(|x| {
                let mut normal = NormalMap::new();
                for (e, c) in x.terms() {
                    for (k, v) in ops.weyl(&e[1..]) {
                        accumulate(
                            &mut normal,
                            k,
                            &v.mul(c).mul(&HbarSeries::i_hbar(Rational::from_integer(1.into()))),
                        );
                    }
                }
                normal
            });
            if got.as_ref() != Some(&comm) {
                first = Some(format!("quantum reduction fails on {ea:?}, {eb:?}"));
            }
        }
    }
    report.record("quantum sector reduces to the commutator", first);
    report
}
