//! Closed-form solution of a classical oscillator `(q, p)` coupled to a
//! quantum oscillator `(x, k)` through `γ q x`, both with frequency `ω`.
//!
//! In the weak-coupling regime `γ < ω²` the normal frequencies are
//! `ω₁ = √(ω² + γ)` and `ω₂ = √(ω² − γ)`.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use num_bigint::BigInt;
use num_traits::Zero;

use crate::algebra::{to_f64, Rational};
use crate::hamiltonian::{coupled_oscillators, PolyHamiltonian};
use crate::moment::MomentKey;
use crate::{Error, Result};

/// Frequencies of the coupled system, kept exactly as squares.
#[derive(Debug, Clone, PartialEq)]
pub struct OscillatorParams {
    omega1_sq: Rational,
    omega2_sq: Rational,
    omega1: f64,
    omega2: f64,
}

impl OscillatorParams {
    /// From the normal frequencies through their squares; requires `ω₁² ≥ ω₂² > 0`.
    pub fn from_squares(omega1_sq: Rational, omega2_sq: Rational) -> Result<Self> {
        if omega2_sq <= Rational::zero() {
            return Err(Error::InvalidConfig(format!("omega2^2 = {omega2_sq} must be positive")));
        }
        if omega1_sq < omega2_sq {
            return Err(Error::InvalidConfig(format!(
                "omega1^2 = {omega1_sq} must not be below omega2^2 = {omega2_sq}"
            )));
        }
        let (omega1, omega2) = (libm::sqrt(to_f64(&omega1_sq)), libm::sqrt(to_f64(&omega2_sq)));
        Ok(Self { omega1_sq, omega2_sq, omega1, omega2 })
    }

    /// From the common frequency squared and the coupling; requires `0 ≤ γ < ω²`.
    pub fn from_coupling(omega_sq: Rational, gamma: Rational) -> Result<Self> {
        if gamma < Rational::zero() || gamma >= omega_sq {
            return Err(Error::InvalidConfig(format!(
                "coupling {gamma} outside the weak-coupling range [0, {omega_sq})"
            )));
        }
        Self::from_squares(&omega_sq + &gamma, &omega_sq - &gamma)
    }

    pub fn omega1(&self) -> f64 {
        self.omega1
    }

    pub fn omega2(&self) -> f64 {
        self.omega2
    }

    /// `ω² = (ω₁² + ω₂²)/2`.
    pub fn omega_sq(&self) -> Rational {
        (&self.omega1_sq + &self.omega2_sq) / Rational::from_integer(BigInt::from(2))
    }

    /// `γ = (ω₁² − ω₂²)/2`.
    pub fn gamma(&self) -> Rational {
        (&self.omega1_sq - &self.omega2_sq) / Rational::from_integer(BigInt::from(2))
    }

    pub fn hamiltonian(&self) -> PolyHamiltonian {
        coupled_oscillators(self.omega_sq(), self.gamma())
    }

    /// Slow envelope period `2π/(ω₁ − ω₂)`, or `2π/ω₁` without coupling.
    pub fn beat_period(&self) -> f64 {
        let diff = self.omega1 - self.omega2;
        if diff > 0.0 {
            2.0 * PI / diff
        } else {
            2.0 * PI / self.omega1
        }
    }
}

/// Centroids `(q, p, x, k)` at time `t`.
pub fn analytic_centroid(t: f64, ics: [f64; 4], params: &OscillatorParams) -> [f64; 4] {
    let [q0, p0, x0, k0] = ics;
    let (w1, w2) = (params.omega1, params.omega2);
    let (c1, s1) = (libm::cos(w1 * t), libm::sin(w1 * t));
    let (c2, s2) = (libm::cos(w2 * t), libm::sin(w2 * t));
    let q = 0.5 * ((q0 + x0) * c1 + (q0 - x0) * c2 + (k0 + p0) / w1 * s1 + (p0 - k0) / w2 * s2);
    let p = 0.5 * ((p0 + k0) * c1 + (p0 - k0) * c2 - (q0 + x0) * w1 * s1 + (x0 - q0) * w2 * s2);
    let x = 0.5 * ((q0 + x0) * c1 + (x0 - q0) * c2 + (k0 + p0) / w1 * s1 + (k0 - p0) / w2 * s2);
    let k = 0.5 * ((p0 + k0) * c1 + (k0 - p0) * c2 - (q0 + x0) * w1 * s1 + (q0 - x0) * w2 * s2);
    [q, p, x, k]
}

/// Rows: `(q, p, x, k)`; columns: coefficients of `(q₀, p₀, x₀, k₀)`.
fn propagator(t: f64, params: &OscillatorParams) -> [[f64; 4]; 4] {
    let mut m = [[0.0; 4]; 4];
    for col in 0..4 {
        let mut e = [0.0; 4];
        e[col] = 1.0;
        let image = analytic_centroid(t, e, params);
        for row in 0..4 {
            m[row][col] = image[row];
        }
    }
    m
}

/// Initial moments `C_{j₁j₂j₃j₄}` keyed by `d[j₁,j₂;j₃,j₄]`; missing keys are zero.
pub type InitialMoments = BTreeMap<MomentKey, f64>;

/// Moment `key` at time `t`: the expectation of the product of the linear
/// forms `δq(t), δp(t), δx(t), δk(t)` in the initial deviations, i.e. the
/// monomial coefficients of that product contracted with the initial moments.
pub fn analytic_moment(t: f64, key: &MomentKey, initial: &InitialMoments, params: &OscillatorParams) -> Result<f64> {
    if key.dofs() != 2 {
        return Err(Error::DofMismatch { expected: 2, found: key.dofs() });
    }
    let m = propagator(t, params);
    let (m1, n1) = key.get(0);
    let (m2, n2) = key.get(1);
    let mut poly: BTreeMap<[u32; 4], f64> = BTreeMap::new();
    poly.insert([0; 4], 1.0);
    for (row, power) in [(0, m1), (1, n1), (2, m2), (3, n2)] {
        for _ in 0..power {
            let mut next = BTreeMap::new();
            for (e, c) in &poly {
                for (col, coeff) in m[row].iter().enumerate() {
                    let mut e2 = *e;
                    e2[col] += 1;
                    *next.entry(e2).or_insert(0.0) += c * coeff;
                }
            }
            poly = next;
        }
    }
    let mut sum = 0.0;
    for (e, c) in poly {
        let k = MomentKey::new(vec![(e[0], e[1]), (e[2], e[3])]);
        if let Some(v) = initial.get(&k) {
            sum += c * v;
        }
    }
    Ok(sum)
}

/// `g(t) = 2ω₁ω₂ cos(ω₁t) cos(ω₂t) + (ω₁² + ω₂²) sin(ω₁t) sin(ω₂t)`.
pub fn g_function(t: f64, params: &OscillatorParams) -> f64 {
    let (w1, w2) = (params.omega1, params.omega2);
    2.0 * w1 * w2 * libm::cos(w1 * t) * libm::cos(w2 * t) + (w1 * w1 + w2 * w2) * libm::sin(w1 * t) * libm::sin(w2 * t)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UncertaintyValues {
    pub u_c: f64,
    pub u_q: f64,
    pub g: f64,
}

/// Sector uncertainties when all classical moments vanish initially and the
/// quantum sector starts with uncertainty `u0`.
pub fn uncertainty_functions(t: f64, u0: f64, params: &OscillatorParams) -> UncertaintyValues {
    let (w1, w2) = (params.omega1, params.omega2);
    let g = g_function(t, params);
    let denom = 16.0 * w1 * w1 * w2 * w2;
    let a = 2.0 * w1 * w2;
    UncertaintyValues { u_c: u0 * (a - g) * (a - g) / denom, u_q: u0 * (a + g) * (a + g) / denom, g }
}

/// `(U_q − U_c − U₀)² − 4 U₀ U_c`, which vanishes along the exact evolution.
pub fn conservation_residual(u_c: f64, u_q: f64, u0: f64) -> f64 {
    let d = u_q - u_c - u0;
    d * d - 4.0 * u0 * u_c
}

pub const MIN_POINTS_PER_BEAT: f64 = 1e4;

#[derive(Debug, Clone, PartialEq)]
pub struct BoundReport {
    pub g_min: f64,
    pub g_max: f64,
    pub g_min_within: bool,
    pub g_max_within: bool,
    pub u_c_max: f64,
    pub u_q_max: f64,
    pub u_c_max_within: bool,
    pub u_q_max_within: bool,
    pub u_c_min: f64,
    pub u_q_min: f64,
    pub sum_min: f64,
    pub max_conservation_residual: f64,
    pub heisenberg_violated: bool,
    /// Allowance for extrema falling between grid points.
    pub grid_tolerance_g: f64,
    pub grid_tolerance_u: f64,
}

impl BoundReport {
    pub fn bounds_hold(&self) -> bool {
        self.g_min_within && self.g_max_within && self.u_c_max_within && self.u_q_max_within
    }
}

/// Scans `t_grid` for the extrema of `g`, `U_c` and `U_q` and checks them
/// against their analytic bounds.
pub fn bound_report(params: &OscillatorParams, u0: f64, t_grid: &[f64], hbar: f64) -> Result<BoundReport> {
    if t_grid.len() < 2 {
        return Err(Error::InvalidConfig("time grid needs at least two points".into()));
    }
    let span = t_grid[t_grid.len() - 1] - t_grid[0];
    let density = (t_grid.len() - 1) as f64 / span * params.beat_period();
    if density.is_nan() || density < MIN_POINTS_PER_BEAT {
        return Err(Error::InvalidConfig(format!(
            "time grid has {density:.0} points per beat period, need at least {MIN_POINTS_PER_BEAT:.0}"
        )));
    }
    let dt = t_grid.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max);
    let (w1, w2) = (params.omega1, params.omega2);
    let a = 2.0 * w1 * w2;
    let s = w1 * w1 + w2 * w2;
    // |g''| ≤ (ω₁² − ω₂²)²; an extremum is at most dt/2 from a grid point
    let diff = w1 * w1 - w2 * w2;
    let tol_g = 0.5 * diff * diff * (dt / 2.0) * (dt / 2.0) + 1e-12 * s;
    let denom = 16.0 * w1 * w1 * w2 * w2;
    let tol_u = u0 * 2.0 * (w1 + w2) * (w1 + w2) / denom * tol_g + 1e-12 * u0;

    let mut g_min = f64::INFINITY;
    let mut g_max = f64::NEG_INFINITY;
    let (mut uc_min, mut uc_max, mut uq_min, mut uq_max) =
        (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    let mut sum_min = f64::INFINITY;
    let mut residual = 0.0f64;
    for &t in t_grid {
        let v = uncertainty_functions(t, u0, params);
        g_min = g_min.min(v.g);
        g_max = g_max.max(v.g);
        uc_min = uc_min.min(v.u_c);
        uc_max = uc_max.max(v.u_c);
        uq_min = uq_min.min(v.u_q);
        uq_max = uq_max.max(v.u_q);
        sum_min = sum_min.min(v.u_c + v.u_q);
        residual = residual.max(conservation_residual(v.u_c, v.u_q, u0).abs());
    }
    let within = |x: f64, lo: f64, hi: f64, tol: f64| x >= lo - tol && x <= hi + tol;
    let u_hi = u0 * libm::pow(w1 + w2, 4.0) / denom;
    Ok(BoundReport {
        g_min,
        g_max,
        g_min_within: within(g_min, -s, -a, tol_g),
        g_max_within: within(g_max, a, s, tol_g),
        u_c_max: uc_max,
        u_q_max: uq_max,
        u_c_max_within: within(uc_max, u0, u_hi, tol_u),
        u_q_max_within: within(uq_max, u0, u_hi, tol_u),
        u_c_min: uc_min,
        u_q_min: uq_min,
        sum_min,
        max_conservation_residual: residual,
        heisenberg_violated: uq_min < hbar * hbar / 4.0,
        grid_tolerance_g: tol_g,
        grid_tolerance_u: tol_u,
    })
}

/// `n + 1` evenly spaced points on `[t0, t1]`.
pub fn uniform_grid(t0: f64, t1: f64, n: usize) -> Vec<f64> {
    (0..=n).map(|i| if i == n { t1 } else { t0 + (t1 - t0) * i as f64 / n as f64 }).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::rational;

    fn params(a: i64, b: i64) -> OscillatorParams {
        OscillatorParams::from_squares(rational(a, 1), rational(b, 1)).unwrap()
    }

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn parameter_conversion() {
        let p = params(9, 4);
        assert_eq!(p.omega_sq(), rational(13, 2));
        assert_eq!(p.gamma(), rational(5, 2));
        let p = params(9, 8);
        assert_eq!(p.omega_sq(), rational(17, 2));
        assert_eq!(p.gamma(), rational(1, 2));
        assert!(OscillatorParams::from_squares(rational(8, 1), rational(49, 1)).is_err());
        assert!(OscillatorParams::from_coupling(rational(2, 1), rational(3, 1)).is_err());
        assert_eq!(OscillatorParams::from_coupling(rational(13, 2), rational(5, 2)).unwrap(), params(9, 4));
    }

    #[test]
    fn centroid_examples() {
        let p = params(9, 8);
        let ics = [1.0, 0.3, 2.0, -0.7];
        let start = analytic_centroid(0.0, ics, &p);
        assert!((0..4).all(|j| close(start[j], ics[j], 1e-15)));
        for i in 0..50 {
            let t = 0.37 * i as f64;
            let sym = analytic_centroid(t, [0.4, 0.9, 0.4, 0.9], &p);
            let expect = 0.4 * libm::cos(3.0 * t) + 0.9 / 3.0 * libm::sin(3.0 * t);
            assert!(close(sym[0], expect, 1e-12) && close(sym[2], expect, 1e-12));
            let anti = analytic_centroid(t, [0.4, 0.9, -0.4, -0.9], &p);
            let w2 = p.omega2();
            let expect = 0.4 * libm::cos(w2 * t) + 0.9 / w2 * libm::sin(w2 * t);
            assert!(close(anti[0], expect, 1e-12) && close(anti[2], -expect, 1e-12));
        }
    }

    #[test]
    fn centroids_solve_the_equations() {
        let p = params(9, 8);
        let (w2, g) = (to_f64(&p.omega_sq()), to_f64(&p.gamma()));
        let ics = [1.0, -0.2, 2.0, 0.5];
        let h = 1e-5;
        for i in 1..40 {
            let t = 0.5 * i as f64;
            let [q, _, x, _] = analytic_centroid(t, ics, &p);
            let plus = analytic_centroid(t + h, ics, &p);
            let minus = analytic_centroid(t - h, ics, &p);
            let now = analytic_centroid(t, ics, &p);
            let d: Vec<f64> = (0..4).map(|j| (plus[j] - minus[j]) / (2.0 * h)).collect();
            assert!(close(d[0], now[1], 1e-8));
            assert!(close(d[1], -w2 * q - g * x, 1e-7));
            assert!(close(d[2], now[3], 1e-8));
            assert!(close(d[3], -w2 * x - g * q, 1e-7));
        }
    }

    fn quantum_data(c20: f64, c02: f64, c11: f64) -> InitialMoments {
        let mut m = InitialMoments::new();
        m.insert(MomentKey::new(vec![(0, 0), (2, 0)]), c20);
        m.insert(MomentKey::new(vec![(0, 0), (0, 2)]), c02);
        m.insert(MomentKey::new(vec![(0, 0), (1, 1)]), c11);
        m
    }

    #[test]
    fn second_order_closed_forms() {
        let p = params(9, 4);
        let (w1, w2) = (3.0, 2.0);
        let (c20, c02, c11) = (1.3, 0.7, 0.2);
        let data = quantum_data(c20, c02, c11);
        let key = |e: [(u32, u32); 2]| MomentKey::new(e.to_vec());
        for i in 0..60 {
            let t = 0.29 * i as f64;
            let (c1, s1, c2, s2) = (libm::cos(w1 * t), libm::sin(w1 * t), libm::cos(w2 * t), libm::sin(w2 * t));
            let a = c1 - c2;
            let b = s1 / w1 - s2 / w2;
            let c = w2 * s2 - w1 * s1;
            let q2 = 0.25 * a * a * c20 + 0.25 * b * b * c02 + 0.5 * a * b * c11;
            let p2 = 0.25 * c * c * c20 + 0.25 * a * a * c02 + 0.5 * a * c * c11;
            let qp = 0.25 * c * a * c20
                + 0.25 * a * b * c02
                + 0.25
                    * (libm::cos(2.0 * w1 * t) + libm::cos(2.0 * w2 * t) - 2.0 * c1 * c2
                        + (w1 * w1 + w2 * w2) / (w1 * w2) * s1 * s2)
                    * c11;
            assert!(close(analytic_moment(t, &key([(2, 0), (0, 0)]), &data, &p).unwrap(), q2, 1e-12));
            assert!(close(analytic_moment(t, &key([(0, 2), (0, 0)]), &data, &p).unwrap(), p2, 1e-12));
            assert!(close(analytic_moment(t, &key([(1, 1), (0, 0)]), &data, &p).unwrap(), qp, 1e-12), "t = {t}");
        }
        let at_pi = analytic_moment(PI, &key([(2, 0), (0, 0)]), &quantum_data(1.0, 5.0, 0.0), &p).unwrap();
        assert!(close(at_pi, 1.0, 1e-12));
    }

    #[test]
    fn moments_start_at_initial_data() {
        let p = params(9, 8);
        let mut data = InitialMoments::new();
        let keys = crate::moment::enumerate_range(2, 2, 3);
        for (i, k) in keys.iter().enumerate() {
            data.insert(k.clone(), 0.1 + i as f64);
        }
        for k in &keys {
            assert!(close(analytic_moment(0.0, k, &data, &p).unwrap(), data[k], 1e-12));
        }
    }

    #[test]
    fn uncertainty_examples() {
        let p = params(9, 4);
        let u0 = 0.25;
        let v = uncertainty_functions(0.0, u0, &p);
        assert_eq!((v.g, v.u_c, v.u_q), (12.0, 0.0, u0));
        for i in 0..200 {
            let t = 0.173 * i as f64;
            let v = uncertainty_functions(t, u0, &p);
            assert!(conservation_residual(v.u_c, v.u_q, u0).abs() < 1e-15);
            let sum = 0.5 * u0 * (1.0 + v.g * v.g / 144.0);
            assert!(close(v.u_c + v.u_q, sum, 1e-15));
            assert!(v.u_c + v.u_q >= u0 / 2.0 - 1e-15);
        }
    }

    #[test]
    fn bounds_for_reference_frequencies() {
        let p = params(9, 4);
        let grid = uniform_grid(0.0, 4.0 * p.beat_period(), 200_000);
        let r = bound_report(&p, 1.0, &grid, 2.0).unwrap();
        assert!(r.bounds_hold(), "{r:?}");
        assert!(r.heisenberg_violated);
        assert!(r.max_conservation_residual < 1e-12);
        assert!(r.u_c_min < 1e-6);
    }

    #[test]
    fn uncertainty_vanishes_within_one_period() {
        let p = params(9, 4);
        // ω₂/ω₁ = 2/3, period 2π·3/ω₁
        let period = 2.0 * PI * 3.0 / 3.0;
        let grid = uniform_grid(0.0, period, 400_000);
        let min_uc = grid.iter().map(|&t| uncertainty_functions(t, 1.0, &p).u_c).fold(f64::INFINITY, f64::min);
        assert!(min_uc < 1e-9, "{min_uc}");
        let a = uncertainty_functions(0.3, 1.0, &p);
        let b = uncertainty_functions(0.3 + period, 1.0, &p);
        assert!(close(a.u_c, b.u_c, 1e-12) && close(a.u_q, b.u_q, 1e-12));
    }

    #[test]
    fn decoupled_limit() {
        let p = params(4, 4);
        for i in 0..100 {
            let v = uncertainty_functions(0.11 * i as f64, 0.5, &p);
            assert!(close(v.g, 8.0, 1e-12) && close(v.u_c, 0.0, 1e-15) && close(v.u_q, 0.5, 1e-12));
        }
        let grid = uniform_grid(0.0, 10.0, 200_000);
        let r = bound_report(&p, 0.5, &grid, 1.0).unwrap();
        assert!(!r.g_min_within);
        assert!(!r.heisenberg_violated);
    }

    #[test]
    fn coarse_grid_is_rejected() {
        let p = params(9, 4);
        let grid = uniform_grid(0.0, 30.0, 1000);
        assert!(matches!(bound_report(&p, 1.0, &grid, 1.0), Err(Error::InvalidConfig(_))));
    }
}
