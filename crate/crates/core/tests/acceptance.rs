//! End-to-end acceptance checks. Prints one line per criterion and exits
//! with a nonzero status if any fails.

// comparisons are written so that a NaN fails the check
#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::collections::BTreeMap;
use std::process::ExitCode;
use std::time::Instant;

use hybrid_moments::algebra::rational;
use hybrid_moments::bracket::{find_jacobi_witness, jacobiator, moment_bracket};
use hybrid_moments::dynamics::{initial_state, integrate, sector_uncertainties, IntegratorConfig, SimState};
use hybrid_moments::hamiltonian::{generate_eom, EomSystem};
use hybrid_moments::moment::{enumerate_moments, is_pure_sector};
use hybrid_moments::oracle::{verify_reordering_identities, Oracle};
use hybrid_moments::oscillator::{analytic_centroid, analytic_moment, conservation_residual, OscillatorParams};
use hybrid_moments::{BracketKind, CentroidSymbol, MomentKey, MomentPolynomial, Sector, Symbol, SystemSignature};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const CENTROID_TOL: f64 = 1e-6;
const MOMENT_TOL: f64 = 1e-6;
const SUM_BOUND_TOL: f64 = 1e-9;
const CONSERVATION_TOL: f64 = 1e-9;
const EXTREMA_REL_TOL: f64 = 1e-4;
const CONVERGENCE_FACTOR: f64 = 2.0;
const RANDOM_TRIPLES: usize = 200;
const RNG_SEED: u64 = 0x5eed_0001;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn grid() -> Vec<(&'static str, SystemSignature, BracketKind, u32)> {
    vec![
        ("1q", SystemSignature::quantum(1, 1.0).unwrap(), BracketKind::Quantum, 4),
        ("1c", SystemSignature::classical(1).unwrap(), BracketKind::Classical, 4),
        ("0c2q", SystemSignature::quantum(2, 1.0).unwrap(), BracketKind::Quantum, 3),
        ("2c0q", SystemSignature::classical(2).unwrap(), BracketKind::Classical, 3),
        ("1c1q", SystemSignature::new(1, 1, 1.0).unwrap(), BracketKind::Hybrid, 3),
    ]
}

fn oracle_equivalence() -> Outcome {
    let mut pairs = 0;
    for (name, sig, kind, max) in grid() {
        let keys = enumerate_moments(&sig, 2, max).map_err(|e| e.to_string())?;
        let mut oracle = Oracle::new(&sig, kind);
        for a in &keys {
            for b in &keys {
                let engine = moment_bracket(a, b, &sig, kind).map_err(|e| e.to_string())?;
                let reference = oracle.moment_bracket(a, b).map_err(|e| e.to_string())?;
                if engine != reference {
                    return Err(format!("{name} {{{a}, {b}}}: engine {engine}, oracle {reference}"));
                }
                pairs += 1;
            }
        }
    }
    Ok(format!("{pairs} pairs agree"))
}

fn identity_suite() -> Outcome {
    let report = verify_reordering_identities(4).map_err(|e| e.to_string())?;
    let checked: usize = report.identities.iter().map(|i| i.checked).sum();
    match report.identities.iter().find(|i| !i.passed()) {
        Some(bad) => Err(format!("{}: {}", bad.name, bad.failure.as_deref().unwrap_or(""))),
        None => Ok(format!("{} identities, {checked} cases", report.identities.len())),
    }
}

fn centroid_lemma() -> Outcome {
    let sigs = [
        (SystemSignature::quantum(1, 1.0).unwrap(), BracketKind::Quantum),
        (SystemSignature::classical(1).unwrap(), BracketKind::Classical),
        (SystemSignature::quantum(2, 1.0).unwrap(), BracketKind::Quantum),
        (SystemSignature::classical(2).unwrap(), BracketKind::Classical),
        (SystemSignature::new(1, 1, 1.0).unwrap(), BracketKind::Hybrid),
    ];
    let mut count = 0;
    for (sig, kind) in sigs {
        let mut oracle = Oracle::new(&sig, kind);
        for key in enumerate_moments(&sig, 2, 4).map_err(|e| e.to_string())? {
            for c in CentroidSymbol::all(sig.dofs()) {
                let b = oracle.centroid_moment_bracket(c, &key).map_err(|e| e.to_string())?;
                if !b.is_zero() {
                    return Err(format!("{sig} {kind}: {{{c}, {key}}} = {b}"));
                }
                count += 1;
            }
        }
    }
    Ok(format!("{count} brackets vanish"))
}

fn jacobi() -> Outcome {
    let mut checked = 0;
    for (sig, kind) in [
        (SystemSignature::quantum(1, 1.0).unwrap(), BracketKind::Quantum),
        (SystemSignature::classical(1).unwrap(), BracketKind::Classical),
    ] {
        let keys = enumerate_moments(&sig, 2, 3).unwrap();
        for a in &keys {
            for b in &keys {
                for c in &keys {
                    let j = jacobiator(a, b, c, &sig, kind).map_err(|e| e.to_string())?;
                    if !j.is_zero() {
                        return Err(format!("{kind} ({a}, {b}, {c}): {j}"));
                    }
                    checked += 1;
                }
            }
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(RNG_SEED);
    for (sig, kind) in [
        (SystemSignature::quantum(2, 1.0).unwrap(), BracketKind::Quantum),
        (SystemSignature::classical(2).unwrap(), BracketKind::Classical),
    ] {
        let keys = enumerate_moments(&sig, 2, 3).unwrap();
        for _ in 0..RANDOM_TRIPLES {
            let t: Vec<&MomentKey> = (0..3).map(|_| keys.choose(&mut rng).unwrap()).collect();
            let j = jacobiator(t[0], t[1], t[2], &sig, kind).map_err(|e| e.to_string())?;
            if !j.is_zero() {
                return Err(format!("{kind} ({}, {}, {}): {j}", t[0], t[1], t[2]));
            }
            checked += 1;
        }
    }
    let sig = SystemSignature::new(1, 1, 1.0).unwrap();
    match find_jacobi_witness(&sig, BracketKind::Hybrid, 4) {
        Some(w) => Ok(format!(
            "{checked} triples vanish; hybrid witness ({}, {}, {}) -> {}",
            w.keys[0], w.keys[1], w.keys[2], w.jacobiator
        )),
        None => Err("no hybrid triple with nonzero Jacobiator up to order 4".into()),
    }
}

fn reductions() -> Outcome {
    let mut checked = 0;
    for (name, sig, kind, max) in grid() {
        let keys = enumerate_moments(&sig, 2, max).unwrap();
        if kind == BracketKind::Classical {
            continue;
        }
        let classical = SystemSignature::classical(sig.dofs()).unwrap();
        for a in &keys {
            for b in &keys {
                let full = moment_bracket(a, b, &sig, kind).map_err(|e| e.to_string())?;
                let cl = moment_bracket(a, b, &classical, BracketKind::Classical).map_err(|e| e.to_string())?;
                if full.classical_limit() != cl {
                    return Err(format!("{name} {{{a}, {b}}} at hbar=0: {} vs {cl}", full.classical_limit()));
                }
                checked += 1;
            }
        }
    }
    let sig = SystemSignature::new(1, 1, 1.0).unwrap();
    let quantum = SystemSignature::quantum(2, 1.0).unwrap();
    let classical = SystemSignature::classical(2).unwrap();
    let keys = enumerate_moments(&sig, 2, 3).unwrap();
    for a in &keys {
        for b in &keys {
            let h = moment_bracket(a, b, &sig, BracketKind::Hybrid).map_err(|e| e.to_string())?;
            let expected = match (is_pure_sector(a, &sig), is_pure_sector(b, &sig)) {
                (Sector::Classical, Sector::Quantum) | (Sector::Quantum, Sector::Classical) => MomentPolynomial::zero(),
                (Sector::Quantum, Sector::Quantum) => moment_bracket(a, b, &quantum, BracketKind::Quantum).unwrap(),
                (Sector::Classical, Sector::Classical) => {
                    moment_bracket(a, b, &classical, BracketKind::Classical).unwrap()
                }
                _ => continue,
            };
            if h != expected {
                return Err(format!("hybrid {{{a}, {b}}} = {h}, sector rule gives {expected}"));
            }
            checked += 1;
        }
    }
    Ok(format!("{checked} pairs reduce term by term"))
}

fn fig_params(w1_sq: i64, w2_sq: i64) -> OscillatorParams {
    OscillatorParams::from_squares(rational(w1_sq, 1), rational(w2_sq, 1)).unwrap()
}

fn symbol_order(s: &Symbol) -> u32 {
    match s {
        Symbol::Centroid(_) => 1,
        Symbol::Moment(k) => k.order(),
    }
}

fn harmonic_decoupling() -> Outcome {
    let h = fig_params(9, 8).hamiltonian();
    let systems: Vec<EomSystem> = [
        (SystemSignature::quantum(2, 1.0).unwrap(), BracketKind::Quantum),
        (SystemSignature::classical(2).unwrap(), BracketKind::Classical),
        (SystemSignature::new(1, 1, 1.0).unwrap(), BracketKind::Hybrid),
    ]
    .into_iter()
    .map(|(sig, kind)| generate_eom(&h, &sig, kind, 4).map_err(|e| e.to_string()))
    .collect::<Result<_, _>>()?;
    for sys in &systems {
        for (s, rhs) in sys.equations() {
            if rhs.max_hbar2_power() > 0 {
                return Err(format!("{}: d/dt {s} contains hbar^2", sys.kind()));
            }
            let own = symbol_order(s);
            for sym in rhs.symbols() {
                if symbol_order(&sym) != own {
                    return Err(format!("{}: d/dt {s} couples to {sym}", sys.kind()));
                }
            }
            if rhs.terms().any(|(m, _)| m.degree() != 1) {
                return Err(format!("{}: d/dt {s} = {rhs} is not linear", sys.kind()));
            }
        }
    }
    if !systems[0].same_equations(&systems[1]) || !systems[0].same_equations(&systems[2]) {
        return Err("equations differ between bracket kinds".into());
    }
    Ok(format!("{} equations identical across kinds", systems[0].state_layout().len()))
}

fn hybrid_sig(hbar: f64) -> SystemSignature {
    SystemSignature::new(1, 1, hbar).unwrap()
}

fn centroid_ics() -> [f64; 4] {
    [1.0, 0.0, 2.0, 0.0]
}

fn centroid_layout(sys: &EomSystem) -> [usize; 4] {
    [CentroidSymbol::position(0), CentroidSymbol::momentum(0), CentroidSymbol::position(1), CentroidSymbol::momentum(1)]
        .map(|c| sys.index_of(&Symbol::Centroid(c)).unwrap())
}

fn centroid_error(step: f64) -> Result<f64, String> {
    let params = fig_params(9, 8);
    let sys =
        generate_eom(&params.hamiltonian(), &hybrid_sig(1.0), BracketKind::Hybrid, 2).map_err(|e| e.to_string())?;
    let ics = centroid_ics();
    let idx = centroid_layout(&sys);
    let init = initial_state(
        &sys,
        &[
            (CentroidSymbol::position(0), ics[0]),
            (CentroidSymbol::momentum(0), ics[1]),
            (CentroidSymbol::position(1), ics[2]),
            (CentroidSymbol::momentum(1), ics[3]),
        ],
        &[],
    )
    .map_err(|e| e.to_string())?;
    let traj = integrate(&sys, &init, &IntegratorConfig::rk4(step, 30.0), 1.0).map_err(|e| e.to_string())?;
    let mut err = 0.0f64;
    for s in &traj {
        let exact = analytic_centroid(s.time, ics, &params);
        for j in 0..4 {
            err = err.max((s.values[idx[j]] - exact[j]).abs());
        }
    }
    Ok(err)
}

fn centroid_benchmark() -> Outcome {
    let err = centroid_error(1e-3)?;
    if err < CENTROID_TOL {
        Ok(format!("max error {err:.3e}"))
    } else {
        Err(format!("max error {err:.3e} >= {CENTROID_TOL:e}"))
    }
}

const U0_SIDE: f64 = 1e-5;

fn quantum_key(e: (u32, u32)) -> MomentKey {
    MomentKey::new(vec![(0, 0), e])
}

/// Fixed-step trajectory for the moment scenario with `ħ²/4 = U₀`.
fn moment_run() -> Result<(OscillatorParams, EomSystem, Vec<SimState>, f64), String> {
    let params = fig_params(9, 4);
    let u0 = U0_SIDE * U0_SIDE;
    let hbar = 2.0 * u0.sqrt();
    let sys =
        generate_eom(&params.hamiltonian(), &hybrid_sig(hbar), BracketKind::Hybrid, 2).map_err(|e| e.to_string())?;
    let moments = [(quantum_key((2, 0)), U0_SIDE), (quantum_key((0, 2)), U0_SIDE), (quantum_key((1, 1)), 0.0)];
    let init = initial_state(&sys, &[], &moments).map_err(|e| e.to_string())?;
    let traj = integrate(&sys, &init, &IntegratorConfig::rk4(1e-3, 30.0), hbar).map_err(|e| e.to_string())?;
    Ok((params, sys, traj, u0))
}

fn moment_benchmark() -> Outcome {
    let (params, sys, traj, _) = moment_run()?;
    let initial: BTreeMap<MomentKey, f64> =
        [(quantum_key((2, 0)), U0_SIDE), (quantum_key((0, 2)), U0_SIDE), (quantum_key((1, 1)), 0.0)]
            .into_iter()
            .collect();
    let keys = enumerate_moments(sys.signature(), 2, 2).unwrap();
    let mut err = 0.0f64;
    for s in &traj {
        for k in &keys {
            let i = sys.index_of(&Symbol::Moment(k.clone())).unwrap();
            let exact = analytic_moment(s.time, k, &initial, &params).map_err(|e| e.to_string())?;
            err = err.max((s.values[i] - exact).abs());
        }
    }
    if err < MOMENT_TOL {
        Ok(format!("{} second-order moments, max error {err:.3e}", keys.len()))
    } else {
        Err(format!("max error {err:.3e} >= {MOMENT_TOL:e}"))
    }
}

fn uncertainty_phenomenology() -> Outcome {
    let (params, sys, traj, u0) = moment_run()?;
    let hbar = sys.signature().hbar();
    let (mut uq_min, mut uc_max, mut uq_max) = (f64::INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY);
    let (mut sum_min, mut residual) = (f64::INFINITY, 0.0f64);
    for s in &traj {
        let (uc, uq) = sector_uncertainties(&sys, s).map_err(|e| e.to_string())?;
        uq_min = uq_min.min(uq);
        uc_max = uc_max.max(uc);
        uq_max = uq_max.max(uq);
        sum_min = sum_min.min(uc + uq);
        residual = residual.max(conservation_residual(uc, uq, u0).abs());
    }
    let mut failures = Vec::new();
    if !(uq_min < hbar * hbar / 4.0) {
        failures.push(format!("(a) min U_q = {uq_min:e} not below hbar^2/4 = {:e}", hbar * hbar / 4.0));
    }
    // absolute form as stated, and the same margin relative to U₀
    if !(sum_min >= u0 / 2.0 - SUM_BOUND_TOL) || !(sum_min >= u0 / 2.0 * (1.0 - SUM_BOUND_TOL)) {
        failures.push(format!("(b) min U_c + U_q = {sum_min:e} below U0/2 = {:e}", u0 / 2.0));
    }
    if !(residual < CONSERVATION_TOL * u0 * u0) {
        failures.push(format!("(c) conservation residual {residual:e}"));
    }
    let (w1, w2) = (params.omega1(), params.omega2());
    let lo = u0 * (1.0 - EXTREMA_REL_TOL);
    let hi = u0 * (w1 + w2).powi(4) / (16.0 * w1 * w1 * w2 * w2) * (1.0 + EXTREMA_REL_TOL);
    for (name, v) in [("U_c", uc_max), ("U_q", uq_max)] {
        if !(v >= lo && v <= hi) {
            failures.push(format!("(d) max {name} = {v:e} outside [{lo:e}, {hi:e}]"));
        }
    }
    if failures.is_empty() {
        Ok(format!(
            "min U_q/U0 = {:.3e}, min (U_c+U_q)/U0 = {:.6}, residual/U0^2 = {:.1e}, max U_c/U0 = {:.4}, max U_q/U0 = {:.4}",
            uq_min / u0,
            sum_min / u0,
            residual / (u0 * u0),
            uc_max / u0,
            uq_max / u0
        ))
    } else {
        Err(failures.join("; "))
    }
}

fn convergence() -> Outcome {
    let coarse = centroid_error(2e-3)?;
    let fine = centroid_error(1e-3)?;
    let ratio = coarse / fine;
    let detail = format!("errors {coarse:.3e} / {fine:.3e}, ratio {ratio:.2}");
    if (16.0 / CONVERGENCE_FACTOR..=16.0 * CONVERGENCE_FACTOR).contains(&ratio) {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn main() -> ExitCode {
    let criteria: [Criterion; 10] = [
        ("oracle equivalence", oracle_equivalence),
        ("reordering identities", identity_suite),
        ("centroid brackets vanish", centroid_lemma),
        ("jacobi properties", jacobi),
        ("hbar=0 and sector reductions", reductions),
        ("harmonic decoupling", harmonic_decoupling),
        ("oscillator centroids", centroid_benchmark),
        ("oscillator moments", moment_benchmark),
        ("uncertainty phenomenology", uncertainty_phenomenology),
        ("rk4 convergence", convergence),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = check();
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS {:>2} {name}: {detail} ({secs:.2}s)", i + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL {:>2} {name}: {detail} ({secs:.2}s)", i + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
