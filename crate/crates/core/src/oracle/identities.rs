//! Closed-form reordering identities for a single degree of freedom, checked
//! against normal ordering by the commutation rule.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use num_bigint::BigInt;
use num_complex::Complex;
use num_traits::{One, Zero};

use super::operator::{accumulate, HbarSeries, NormalMap, OperatorAlgebra, OperatorExpression};
use crate::algebra::{binomial, factorial, Rational};
use crate::bracket::k_coefficient;
use crate::moment::CanonicalKind;
use crate::{Error, Result};

pub const IDENTITY_MAX_EXPONENT: u32 = 6;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IdentityResult {
    pub name: &'static str,
    pub checked: usize,
    pub failure: Option<String>,
}

impl IdentityResult {
    pub fn passed(&self) -> bool {
        self.failure.is_none()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IdentityReport {
    pub max_exponent: u32,
    pub identities: Vec<IdentityResult>,
}

impl IdentityReport {
    pub fn passed(&self) -> bool {
        self.identities.iter().all(IdentityResult::passed)
    }
}

/// `c (iħ)^k`.
fn i_hbar_pow(k: u32, c: Rational) -> HbarSeries {
    let mut unit = Complex::new(Rational::one(), Rational::zero());
    let i = Complex::new(Rational::zero(), Rational::one());
    for _ in 0..k {
        unit = &unit * &i;
    }
    HbarSeries::monomial(k, &unit * &Complex::new(c, Rational::zero()))
}

/// `(±1)^k (iħ/2)^k k! C(n,k) C(m,k)` or, with `halved = false`, `(iħ)^k`.
fn reorder_coefficient(m: u32, n: u32, k: u32, alternate: bool, halved: bool) -> HbarSeries {
    let mut c = Rational::from_integer(factorial(k) * binomial(n, k) * binomial(m, k));
    if halved {
        c /= Rational::from_integer(BigInt::from(2u32).pow(k));
    }
    if alternate && k % 2 == 1 {
        c = -c;
    }
    i_hbar_pow(k, c)
}

fn word(m: u32, n: u32, momenta_first: bool) -> NormalMap {
    let (first, second) = if momenta_first {
        ((CanonicalKind::Momentum, n), (CanonicalKind::Position, m))
    } else {
        ((CanonicalKind::Position, m), (CanonicalKind::Momentum, n))
    };
    let mut letters = Vec::new();
    for (kind, count) in [first, second] {
        for _ in 0..count {
            letters.push(super::operator::Letter { dof: 0, kind });
        }
    }
    OperatorExpression::word(letters).to_normal_map(1)
}

fn add_scaled(acc: &mut NormalMap, x: &NormalMap, c: &HbarSeries) {
    for (e, v) in x {
        accumulate(acc, e.clone(), &v.mul(c));
    }
}

fn render(x: &NormalMap) -> String {
    format!("{}", OperatorExpression::from_normal_map(x))
}

struct Check {
    result: IdentityResult,
}

impl Check {
    fn new(name: &'static str) -> Self {
        Self { result: IdentityResult { name, checked: 0, failure: None } }
    }

    fn compare(&mut self, tuple: &[u32], lhs: &NormalMap, rhs: &NormalMap) {
        self.result.checked += 1;
        if self.result.failure.is_none() && lhs != rhs {
            self.result.failure = Some(format!("at {:?}: {} != {}", tuple, render(lhs), render(rhs)));
        }
    }
}

/// Checks the normal/Weyl conversions, `[q^m, p^n]`, and the closed forms of
/// products and commutators of Weyl monomials for all exponents up to
/// `max_exponent`.
pub fn verify_reordering_identities(max_exponent: u32) -> Result<IdentityReport> {
    if max_exponent > IDENTITY_MAX_EXPONENT {
        return Err(Error::CostGuard(format!(
            "identity suite limited to exponents up to {IDENTITY_MAX_EXPONENT}, got {max_exponent}"
        )));
    }
    let mut alg = OperatorAlgebra::new(1);
    let weyl = |alg: &mut OperatorAlgebra, m: u32, n: u32| alg.weyl(&[(m, n)]);

    let mut weyl_normal = Check::new("weyl_to_normal");
    let mut weyl_antinormal = Check::new("weyl_to_antinormal");
    let mut antinormal_weyl = Check::new("antinormal_to_weyl");
    let mut normal_weyl = Check::new("normal_to_weyl");
    let mut commutator = Check::new("power_commutator");
    for m in 0..=max_exponent {
        for n in 0..=max_exponent {
            let w = weyl(&mut alg, m, n);
            let (mut a, mut b, mut c, mut d) = (NormalMap::new(), NormalMap::new(), NormalMap::new(), NormalMap::new());
            let (mut comm_anti, mut comm_normal) = (NormalMap::new(), NormalMap::new());
            for k in 0..=m.min(n) {
                add_scaled(&mut a, &word(m - k, n - k, false), &reorder_coefficient(m, n, k, true, true));
                add_scaled(&mut b, &word(m - k, n - k, true), &reorder_coefficient(m, n, k, false, true));
                let wk = weyl(&mut alg, m - k, n - k);
                add_scaled(&mut c, &wk, &reorder_coefficient(m, n, k, true, true));
                add_scaled(&mut d, &wk, &reorder_coefficient(m, n, k, false, true));
                if k >= 1 {
                    add_scaled(&mut comm_anti, &word(m - k, n - k, true), &reorder_coefficient(m, n, k, false, false));
                    add_scaled(
                        &mut comm_normal,
                        &word(m - k, n - k, false),
                        &reorder_coefficient(m, n, k, true, false).neg(),
                    );
                }
            }
            weyl_normal.compare(&[m, n], &w, &a);
            weyl_antinormal.compare(&[m, n], &w, &b);
            antinormal_weyl.compare(&[m, n], &word(m, n, true), &c);
            normal_weyl.compare(&[m, n], &word(m, n, false), &d);
            let lhs = alg.commutator(&word(m, 0, false), &word(0, n, false));
            commutator.compare(&[m, n], &lhs, &comm_anti);
            commutator.compare(&[m, n], &lhs, &comm_normal);
        }
    }

    let mut product = Check::new("weyl_product");
    let mut weyl_commutator = Check::new("weyl_commutator");
    let half = Rational::new(BigInt::one(), BigInt::from(2));
    for m in 0..=max_exponent {
        for n in 0..=max_exponent {
            for s in 0..=max_exponent {
                for r in 0..=max_exponent {
                    let x = weyl(&mut alg, m, n);
                    let y = weyl(&mut alg, s, r);
                    let lhs = alg.mul(&x, &y);
                    let lhs_comm = alg.commutator(&x, &y);
                    let bound = (m + s).min(m + n).min(n + r).min(s + r);
                    let (mut rhs, mut rhs_comm) = (NormalMap::new(), NormalMap::new());
                    for alpha in 0..=bound {
                        if m + s < alpha || n + r < alpha {
                            continue;
                        }
                        let k = k_coefficient(m, n, s, r, alpha);
                        let scale = num_traits::pow(half.clone(), alpha as usize) * k;
                        let coeff = i_hbar_pow(alpha, scale);
                        let target = weyl(&mut alg, m + s - alpha, n + r - alpha);
                        add_scaled(&mut rhs, &target, &coeff);
                        if alpha % 2 == 1 {
                            add_scaled(&mut rhs_comm, &target, &coeff.scale_real(&Rational::from_integer(2.into())));
                        }
                    }
                    product.compare(&[m, n, s, r], &lhs, &rhs);
                    weyl_commutator.compare(&[m, n, s, r], &lhs_comm, &rhs_comm);
                }
            }
        }
    }

    Ok(IdentityReport {
        max_exponent,
        identities: vec![
            weyl_normal.result,
            weyl_antinormal.result,
            antinormal_weyl.result,
            normal_weyl.result,
            commutator.result,
            product.result,
            weyl_commutator.result,
        ],
    })
}
