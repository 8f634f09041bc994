//! Degrees of freedom, moment keys and moment bases.
//!
//! Degrees of freedom are indexed from zero in the API and rendered from one
//! (`q1`, `p1`, …). Classical degrees of freedom always come first.
//!
//! A [`MomentKey`] serializes as `d[a1,b1;a2,b2;…]`, one `a,b` pair of
//! position/momentum exponents per degree of freedom.

use alloc::format;
use alloc::string::ToString;
use alloc::vec::Vec;
use core::cmp::Ordering;
use core::fmt;

use crate::{Error, Result};

/// Split of the degrees of freedom into a classical and a quantum sector.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SystemSignature {
    n_classical: usize,
    n_quantum: usize,
    hbar: f64,
}

impl SystemSignature {
    pub fn new(n_classical: usize, n_quantum: usize, hbar: f64) -> Result<Self> {
        if n_classical + n_quantum == 0 {
            return Err(Error::InvalidSignature("at least one degree of freedom is required".into()));
        }
        if !hbar.is_finite() || hbar < 0.0 {
            return Err(Error::InvalidSignature(format!("hbar must be finite and nonnegative, got {hbar}")));
        }
        Ok(Self { n_classical, n_quantum, hbar })
    }

    pub fn quantum(n: usize, hbar: f64) -> Result<Self> {
        Self::new(0, n, hbar)
    }

    pub fn classical(n: usize) -> Result<Self> {
        Self::new(n, 0, 0.0)
    }

    pub fn n_classical(&self) -> usize {
        self.n_classical
    }

    pub fn n_quantum(&self) -> usize {
        self.n_quantum
    }

    pub fn dofs(&self) -> usize {
        self.n_classical + self.n_quantum
    }

    pub fn hbar(&self) -> f64 {
        self.hbar
    }

    pub fn sector_of(&self, dof: usize) -> Sector {
        if dof < self.n_classical {
            Sector::Classical
        } else {
            Sector::Quantum
        }
    }

    pub fn check_key(&self, key: &MomentKey) -> Result<()> {
        if key.dofs() != self.dofs() {
            return Err(Error::DofMismatch { expected: self.dofs(), found: key.dofs() });
        }
        Ok(())
    }

    /// Parses the compact `<Nc>c<Nq>q` form used on the command line, e.g. `1c1q`.
    pub fn parse_split(s: &str, hbar: f64) -> Result<Self> {
        let err = |position: usize, message: &str| Error::Parse {
            input: s.to_string(),
            position,
            message: message.to_string(),
        };
        let c = s.find('c').ok_or_else(|| err(0, "expected <Nc>c<Nq>q"))?;
        if !s.ends_with('q') {
            return Err(err(s.len(), "expected trailing 'q'"));
        }
        let nc: usize = s[..c].parse().map_err(|_| err(0, "invalid classical count"))?;
        let nq: usize = s[c + 1..s.len() - 1].parse().map_err(|_| err(c + 1, "invalid quantum count"))?;
        Self::new(nc, nq, hbar)
    }
}

impl fmt::Display for SystemSignature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}c{}q", self.n_classical, self.n_quantum)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Sector {
    Classical,
    Quantum,
    Mixed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum CanonicalKind {
    Position,
    Momentum,
}

/// An expectation value `q_i` or `p_i`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CentroidSymbol {
    pub dof: usize,
    pub kind: CanonicalKind,
}

impl CentroidSymbol {
    pub fn position(dof: usize) -> Self {
        Self { dof, kind: CanonicalKind::Position }
    }

    pub fn momentum(dof: usize) -> Self {
        Self { dof, kind: CanonicalKind::Momentum }
    }

    /// Position/momentum pairs for every degree of freedom, in state-vector order.
    pub fn all(dofs: usize) -> Vec<Self> {
        (0..dofs).flat_map(|j| [Self::position(j), Self::momentum(j)]).collect()
    }

    pub fn conjugate(&self) -> Self {
        match self.kind {
            CanonicalKind::Position => Self::momentum(self.dof),
            CanonicalKind::Momentum => Self::position(self.dof),
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        let err = |message: &str| Error::Parse { input: s.to_string(), position: 0, message: message.to_string() };
        let s_trim = s.trim();
        let kind = match s_trim.chars().next() {
            Some('q') => CanonicalKind::Position,
            Some('p') => CanonicalKind::Momentum,
            _ => return Err(err("expected q<i> or p<i>")),
        };
        let idx: usize = s_trim[1..].parse().map_err(|_| err("invalid index"))?;
        if idx == 0 {
            return Err(err("indices start at 1"));
        }
        Ok(Self { dof: idx - 1, kind })
    }
}

impl fmt::Display for CentroidSymbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let c = match self.kind {
            CanonicalKind::Position => 'q',
            CanonicalKind::Momentum => 'p',
        };
        write!(f, "{}{}", c, self.dof + 1)
    }
}

/// Multi-index identifying the central moment `Δ(q_1^{a_1} p_1^{b_1} … q_N^{a_N} p_N^{b_N})`.
///
/// Keys are totally ordered: first by number of degrees of freedom, then by
/// order, then colexicographically on the flattened sequence
/// `a_1, b_1, …, a_N, b_N` (the last exponent is the most significant).
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct MomentKey {
    exponents: Vec<(u32, u32)>,
}

impl MomentKey {
    pub fn new(exponents: Vec<(u32, u32)>) -> Self {
        Self { exponents }
    }

    /// The order-zero key (the constant 1) for `dofs` degrees of freedom.
    pub fn unit(dofs: usize) -> Self {
        Self { exponents: alloc::vec![(0, 0); dofs] }
    }

    pub fn exponents(&self) -> &[(u32, u32)] {
        &self.exponents
    }

    pub fn dofs(&self) -> usize {
        self.exponents.len()
    }

    pub fn order(&self) -> u32 {
        self.exponents.iter().map(|&(a, b)| a + b).sum()
    }

    pub fn get(&self, dof: usize) -> (u32, u32) {
        self.exponents[dof]
    }

    /// Key with one exponent lowered by one, or `None` when it is already zero.
    pub fn lowered(&self, dof: usize, kind: CanonicalKind) -> Option<Self> {
        let mut e = self.exponents.clone();
        let slot = match kind {
            CanonicalKind::Position => &mut e[dof].0,
            CanonicalKind::Momentum => &mut e[dof].1,
        };
        *slot = slot.checked_sub(1)?;
        Some(Self { exponents: e })
    }

    pub fn sector(&self, sig: &SystemSignature) -> Sector {
        let mut classical = false;
        let mut quantum = false;
        for (j, &(a, b)) in self.exponents.iter().enumerate() {
            if a + b == 0 {
                continue;
            }
            match sig.sector_of(j) {
                Sector::Classical => classical = true,
                _ => quantum = true,
            }
        }
        match (classical, quantum) {
            (_, false) => Sector::Classical,
            (false, true) => Sector::Quantum,
            (true, true) => Sector::Mixed,
        }
    }

    fn flattened(&self) -> impl DoubleEndedIterator<Item = u32> + '_ {
        self.exponents.iter().flat_map(|&(a, b)| [a, b])
    }

    pub fn parse(s: &str) -> Result<Self> {
        let err = |position: usize, message: &str| Error::Parse {
            input: s.to_string(),
            position,
            message: message.to_string(),
        };
        let t = s.trim();
        let offset = s.len() - s.trim_start().len();
        let body = t
            .strip_prefix("d[")
            .ok_or_else(|| err(offset, "expected 'd['"))?
            .strip_suffix(']')
            .ok_or_else(|| err(offset + t.len(), "expected closing ']'"))?;
        let mut pos = offset + 2;
        let mut exponents = Vec::new();
        for group in body.split(';') {
            let mut parts = group.split(',');
            let mut next = |what: &str| -> Result<u32> {
                let raw = parts.next().ok_or_else(|| err(pos, &format!("missing {what} exponent")))?;
                raw.trim().parse().map_err(|_| err(pos, &format!("invalid {what} exponent {:?}", raw.trim())))
            };
            let a = next("position")?;
            let b = next("momentum")?;
            if parts.next().is_some() {
                return Err(err(pos, "expected exactly two exponents per degree of freedom"));
            }
            exponents.push((a, b));
            pos += group.len() + 1;
        }
        Ok(Self { exponents })
    }
}

impl Ord for MomentKey {
    fn cmp(&self, other: &Self) -> Ordering {
        self.dofs()
            .cmp(&other.dofs())
            .then_with(|| self.order().cmp(&other.order()))
            .then_with(|| self.flattened().rev().cmp(other.flattened().rev()))
    }
}

impl PartialOrd for MomentKey {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for MomentKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("d[")?;
        for (j, (a, b)) in self.exponents.iter().enumerate() {
            if j > 0 {
                f.write_str(";")?;
            }
            write!(f, "{a},{b}")?;
        }
        f.write_str("]")
    }
}

pub fn moment_order(key: &MomentKey) -> u32 {
    key.order()
}

/// Every key with `min_order <= order <= max_order`, in key order.
pub fn enumerate_moments(sig: &SystemSignature, min_order: u32, max_order: u32) -> Result<Vec<MomentKey>> {
    if min_order < 2 || max_order < min_order {
        return Err(Error::InvalidOrderRange { min: min_order, max: max_order });
    }
    Ok(enumerate_range(sig.dofs(), min_order, max_order))
}

pub(crate) fn enumerate_range(dofs: usize, min_order: u32, max_order: u32) -> Vec<MomentKey> {
    let mut out = Vec::new();
    let mut buf = alloc::vec![0u32; 2 * dofs];
    for n in min_order..=max_order {
        compositions(&mut buf, 0, n, &mut |flat| {
            out.push(MomentKey::new(flat.chunks(2).map(|c| (c[0], c[1])).collect()));
        });
    }
    out.sort();
    out
}

/// Calls `f` with every weak composition of `remaining` into `buf[slot..]`.
fn compositions(buf: &mut [u32], slot: usize, remaining: u32, f: &mut impl FnMut(&[u32])) {
    if slot + 1 == buf.len() {
        buf[slot] = remaining;
        f(buf);
        return;
    }
    if buf.is_empty() {
        return;
    }
    for v in 0..=remaining {
        buf[slot] = v;
        compositions(buf, slot + 1, remaining - v, f);
    }
}

/// Sector of a key under `sig`. The order-zero key reports [`Sector::Classical`].
pub fn is_pure_sector(key: &MomentKey, sig: &SystemSignature) -> Sector {
    key.sector(sig)
}
