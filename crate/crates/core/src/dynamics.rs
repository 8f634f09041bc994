//! Numeric integration of an [`EomSystem`].

use alloc::format;
use alloc::string::ToString;
use alloc::vec;
use alloc::vec::Vec;

use crate::algebra::{to_f64, MomentPolynomial, Symbol};
use crate::hamiltonian::EomSystem;
use crate::moment::{CentroidSymbol, MomentKey, Sector};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct SimState {
    pub time: f64,
    /// Aligned with [`EomSystem::state_layout`].
    pub values: Vec<f64>,
}

impl SimState {
    pub fn new(time: f64, values: Vec<f64>) -> Self {
        Self { time, values }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Method {
    Rk4 {
        step: f64,
    },
    /// Dormand–Prince 5(4) with error control.
    Rk45 {
        rtol: f64,
        atol: f64,
        initial_step: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegratorConfig {
    pub method: Method,
    pub t_end: f64,
    pub output_stride: usize,
}

impl IntegratorConfig {
    pub fn rk4(step: f64, t_end: f64) -> Self {
        Self { method: Method::Rk4 { step }, t_end, output_stride: 1 }
    }

    pub fn rk45(t_end: f64) -> Self {
        Self { method: Method::Rk45 { rtol: 1e-9, atol: 1e-12, initial_step: 1e-3 }, t_end, output_stride: 1 }
    }

    pub fn with_stride(mut self, stride: usize) -> Self {
        self.output_stride = stride;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidConfig(msg.to_string()));
        if self.t_end.is_nan() || self.t_end < 0.0 || self.t_end.is_infinite() {
            return bad("t_end must be finite and non-negative");
        }
        if self.output_stride == 0 {
            return bad("output_stride must be positive");
        }
        match self.method {
            Method::Rk4 { step } if !positive_finite(step) => bad("step must be positive"),
            Method::Rk45 { rtol, atol, initial_step }
                if !positive_finite(rtol) || !positive_finite(atol) || !positive_finite(initial_step) =>
            {
                bad("tolerances and initial step must be positive")
            }
            _ => Ok(()),
        }
    }
}

fn positive_finite(x: f64) -> bool {
    x.is_finite() && x > 0.0
}

#[derive(Debug, Clone)]
struct Term {
    coeff: f64,
    factors: Vec<(usize, i32)>,
}

/// Right-hand sides flattened to term lists over state indices, with `ħ` folded in.
#[derive(Debug, Clone)]
pub struct CompiledRhs {
    components: Vec<Vec<Term>>,
}

impl CompiledRhs {
    pub fn new(sys: &EomSystem, hbar: f64) -> Result<Self> {
        let index = |s: &Symbol| sys.index_of(s).ok_or_else(|| Error::MissingSymbol(s.to_string()));
        let mut components = Vec::with_capacity(sys.rhs().len());
        for rhs in sys.rhs() {
            let mut terms = Vec::new();
            for (m, c) in rhs.terms() {
                let coeff = to_f64(c) * libm::pow(hbar, 2.0 * m.hbar2_power() as f64);
                let factors =
                    m.factors().iter().map(|(s, p)| Ok((index(s)?, *p as i32))).collect::<Result<Vec<_>>>()?;
                terms.push(Term { coeff, factors });
            }
            components.push(terms);
        }
        Ok(Self { components })
    }

    pub fn len(&self) -> usize {
        self.components.len()
    }

    pub fn is_empty(&self) -> bool {
        self.components.is_empty()
    }

    pub fn eval_into(&self, x: &[f64], out: &mut [f64]) {
        for (slot, terms) in out.iter_mut().zip(&self.components) {
            let mut acc = 0.0;
            for t in terms {
                let mut v = t.coeff;
                for &(i, p) in &t.factors {
                    v *= powi(x[i], p);
                }
                acc += v;
            }
            *slot = acc;
        }
    }
}

fn powi(x: f64, p: i32) -> f64 {
    match p {
        1 => x,
        2 => x * x,
        _ => {
            let mut r = 1.0;
            for _ in 0..p {
                r *= x;
            }
            r
        }
    }
}

fn check_state(state: &SimState, expected: usize) -> Result<()> {
    if state.values.len() != expected {
        return Err(Error::InvalidConfig(format!(
            "state has {} components, layout has {expected}",
            state.values.len()
        )));
    }
    Ok(())
}

fn check_finite(t: f64, x: &[f64]) -> Result<()> {
    match x.iter().position(|v| !v.is_finite()) {
        Some(index) => Err(Error::NonFinite { time: t, index }),
        None => Ok(()),
    }
}

/// Right-hand side at `state`.
pub fn evaluate_rhs(sys: &EomSystem, state: &SimState, hbar: f64) -> Result<Vec<f64>> {
    check_state(state, sys.state_layout().len())?;
    let rhs = CompiledRhs::new(sys, hbar)?;
    let mut out = vec![0.0; rhs.len()];
    rhs.eval_into(&state.values, &mut out);
    Ok(out)
}

struct Rk4Work {
    k: [Vec<f64>; 4],
    tmp: Vec<f64>,
}

fn rk4_step(f: &CompiledRhs, x: &mut [f64], h: f64, w: &mut Rk4Work) {
    let Rk4Work { k, tmp } = w;
    f.eval_into(x, &mut k[0]);
    for ((t, xi), ki) in tmp.iter_mut().zip(x.iter()).zip(&k[0]) {
        *t = xi + 0.5 * h * ki;
    }
    f.eval_into(tmp, &mut k[1]);
    for ((t, xi), ki) in tmp.iter_mut().zip(x.iter()).zip(&k[1]) {
        *t = xi + 0.5 * h * ki;
    }
    f.eval_into(tmp, &mut k[2]);
    for ((t, xi), ki) in tmp.iter_mut().zip(x.iter()).zip(&k[2]) {
        *t = xi + h * ki;
    }
    f.eval_into(tmp, &mut k[3]);
    for (i, xi) in x.iter_mut().enumerate() {
        *xi += h / 6.0 * (k[0][i] + 2.0 * k[1][i] + 2.0 * k[2][i] + k[3][i]);
    }
}

// Dormand–Prince tableau; the systems are autonomous, so the nodes are not needed
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const B5: [f64; 7] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
const B4: [f64; 7] =
    [5179.0 / 57600.0, 0.0, 7571.0 / 16695.0, 393.0 / 640.0, -92097.0 / 339200.0, 187.0 / 2100.0, 1.0 / 40.0];

/// Integrates from `initial` to `cfg.t_end`, returning every
/// `output_stride`-th accepted step together with the first and last states.
pub fn integrate(sys: &EomSystem, initial: &SimState, cfg: &IntegratorConfig, hbar: f64) -> Result<Vec<SimState>> {
    cfg.validate()?;
    check_state(initial, sys.state_layout().len())?;
    check_finite(initial.time, &initial.values)?;
    let f = CompiledRhs::new(sys, hbar)?;
    let t0 = initial.time;
    let t_end = cfg.t_end;
    if t_end < t0 {
        return Err(Error::InvalidConfig(format!("t_end {t_end} precedes the initial time {t0}")));
    }
    let mut out = vec![initial.clone()];
    if t_end == t0 {
        return Ok(out);
    }
    let n = initial.values.len();
    let mut x = initial.values.clone();
    match cfg.method {
        Method::Rk4 { step } => {
            let steps = libm::ceil((t_end - t0) / step - 1e-9).max(1.0) as u64;
            let mut w = Rk4Work { k: [vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n]], tmp: vec![0.0; n] };
            let mut t = t0;
            for i in 1..=steps {
                let t_next = if i == steps { t_end } else { t0 + i as f64 * step };
                rk4_step(&f, &mut x, t_next - t, &mut w);
                t = t_next;
                check_finite(t, &x)?;
                if i % cfg.output_stride as u64 == 0 || i == steps {
                    out.push(SimState::new(t, x.clone()));
                }
            }
        }
        Method::Rk45 { rtol, atol, initial_step } => {
            let mut k: Vec<Vec<f64>> = vec![vec![0.0; n]; 7];
            let mut tmp = vec![0.0; n];
            let mut x5 = vec![0.0; n];
            let mut t = t0;
            let mut h = initial_step.min(t_end - t0);
            let mut accepted = 0u64;
            f.eval_into(&x, &mut k[0]);
            while t < t_end {
                let min_step = 1e-14 * t.abs().max(1.0);
                if h < min_step {
                    return Err(Error::StepSizeUnderflow { time: t, step: h });
                }
                let last = t + h >= t_end;
                if last {
                    h = t_end - t;
                }
                for s in 1..7 {
                    for i in 0..n {
                        let mut acc = x[i];
                        for (j, kj) in k.iter().enumerate().take(s) {
                            acc += h * A[s][j] * kj[i];
                        }
                        tmp[i] = acc;
                    }
                    f.eval_into(&tmp, &mut k[s]);
                }
                let mut err = 0.0f64;
                for i in 0..n {
                    let mut y5 = x[i];
                    let mut y4 = x[i];
                    for s in 0..7 {
                        y5 += h * B5[s] * k[s][i];
                        y4 += h * B4[s] * k[s][i];
                    }
                    x5[i] = y5;
                    let scale = atol + rtol * x[i].abs().max(y5.abs());
                    let e = (y5 - y4) / scale;
                    err += e * e;
                }
                let err = libm::sqrt(err / n.max(1) as f64);
                if !err.is_finite() {
                    return Err(Error::NonFinite {
                        time: t + h,
                        index: x5.iter().position(|v| !v.is_finite()).unwrap_or(0),
                    });
                }
                if err <= 1.0 {
                    t = if last { t_end } else { t + h };
                    x.copy_from_slice(&x5);
                    check_finite(t, &x)?;
                    // first-same-as-last
                    k.swap(0, 6);
                    accepted += 1;
                    if accepted.is_multiple_of(cfg.output_stride as u64) || t >= t_end {
                        out.push(SimState::new(t, x.clone()));
                    }
                }
                let factor = if err == 0.0 { 5.0 } else { (0.9 * libm::pow(err, -0.2)).clamp(0.2, 5.0) };
                h *= factor;
            }
        }
    }
    Ok(out)
}

/// `Δ(q²)Δ(p²) − Δ(qp)²` for one degree of freedom.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Uncertainty {
    pub dof: usize,
    pub sector: Sector,
    pub value: f64,
}

/// Per-dof uncertainty determinants at `state`.
pub fn uncertainties(sys: &EomSystem, state: &SimState) -> Result<Vec<Uncertainty>> {
    let sig = sys.signature();
    let dofs = sig.dofs();
    let lookup = |e: Vec<(u32, u32)>| {
        let s = Symbol::Moment(MomentKey::new(e));
        sys.index_of(&s).map(|i| state.values[i]).ok_or_else(|| Error::MissingSymbol(s.to_string()))
    };
    let mut out = Vec::with_capacity(dofs);
    for j in 0..dofs {
        let unit = |pair: (u32, u32)| {
            let mut e = vec![(0, 0); dofs];
            e[j] = pair;
            e
        };
        let qq = lookup(unit((2, 0)))?;
        let pp = lookup(unit((0, 2)))?;
        let qp = lookup(unit((1, 1)))?;
        out.push(Uncertainty { dof: j, sector: sig.sector_of(j), value: qq * pp - qp * qp });
    }
    Ok(out)
}

/// Sums of the per-dof uncertainties over the classical and quantum sectors.
pub fn sector_uncertainties(sys: &EomSystem, state: &SimState) -> Result<(f64, f64)> {
    let mut uc = 0.0;
    let mut uq = 0.0;
    for u in uncertainties(sys, state)? {
        match u.sector {
            Sector::Classical => uc += u.value,
            _ => uq += u.value,
        }
    }
    Ok((uc, uq))
}

/// Initial state from sparse centroid and moment values; unlisted entries are zero.
pub fn initial_state(
    sys: &EomSystem,
    centroids: &[(CentroidSymbol, f64)],
    moments: &[(MomentKey, f64)],
) -> Result<SimState> {
    let mut values = vec![0.0; sys.state_layout().len()];
    for (c, v) in centroids {
        let s = Symbol::Centroid(*c);
        let i = sys.index_of(&s).ok_or_else(|| Error::InvalidConfig(format!("centroid {s} is not in the state")))?;
        values[i] = *v;
    }
    for (k, v) in moments {
        sys.signature().check_key(k)?;
        if k.order() < 2 {
            return Err(Error::InvalidConfig(format!("moment {k} has order below 2")));
        }
        let s = Symbol::Moment(k.clone());
        // moments above the truncation order are dropped from the state
        if let Some(i) = sys.index_of(&s) {
            values[i] = *v;
        }
    }
    Ok(SimState::new(0.0, values))
}

/// Effective Hamiltonian evaluated at `state`.
pub fn energy(sys: &EomSystem, state: &SimState) -> Result<f64> {
    eval_at(sys, sys.effective_hamiltonian(), state)
}

/// Any polynomial in the state symbols, evaluated at `state`.
pub fn eval_at(sys: &EomSystem, p: &MomentPolynomial, state: &SimState) -> Result<f64> {
    p.eval(|s| sys.index_of(s).map(|i| state.values[i]), sys.signature().hbar())
}
