use std::fs::File;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use hybrid_moments::algebra::{parse_rational, Rational};
use hybrid_moments::bracket::{find_jacobi_witness, moment_bracket, symbol_bracket};
use hybrid_moments::dynamics::{energy, integrate, sector_uncertainties, SimState};
use hybrid_moments::moment::enumerate_moments;
use hybrid_moments::oracle::{verify_r_properties, verify_reordering_identities, Oracle, ORACLE_MAX_ORDER};
use hybrid_moments::oscillator::{
    analytic_centroid, bound_report, uncertainty_functions, uniform_grid, OscillatorParams,
};
use hybrid_moments::{BracketKind, CentroidSymbol, Error, MomentKey, Symbol, SystemSignature};
use serde_json::{json, Value};

use crate::config::RunConfig;

#[derive(Debug)]
pub enum CliError {
    Core(Error),
    Io(String),
    /// A verification report that did not pass; carries the report.
    Verification(Value),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Core(e)
    }
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Core(Error::NonFinite { .. } | Error::StepSizeUnderflow { .. }) => 3,
            CliError::Core(Error::ImaginaryResidue(_)) | CliError::Verification(_) => 4,
            CliError::Core(_) => 2,
            CliError::Io(_) => 5,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Core(e) => e.fmt(f),
            CliError::Io(msg) => f.write_str(msg),
            CliError::Verification(_) => f.write_str("verification failed"),
        }
    }
}

fn io_err(path: &Path) -> impl Fn(io::Error) -> CliError + '_ {
    move |e| CliError::Io(format!("{}: {e}", path.display()))
}

fn same_file(a: &Path, b: &Path) -> bool {
    match (a.canonicalize(), b.canonicalize()) {
        (Ok(x), Ok(y)) => x == y,
        _ => false,
    }
}

/// Reads a configuration; relative output paths are taken from the config's directory.
pub fn load_config(path: &Path) -> Result<RunConfig, CliError> {
    let text = std::fs::read_to_string(path).map_err(io_err(path))?;
    let mut cfg = RunConfig::from_json(&text)?;
    let base = path.parent().unwrap_or(Path::new(""));
    for out in [&mut cfg.output.csv, &mut cfg.output.summary].into_iter().flatten() {
        if out.is_relative() {
            *out = base.join(&*out);
        }
        if same_file(out, path) {
            return Err(
                Error::InvalidConfig(format!("output {} would overwrite the configuration", out.display())).into()
            );
        }
    }
    Ok(cfg)
}

fn parse_symbol(s: &str) -> Result<Symbol, Error> {
    if s.trim_start().starts_with('d') {
        MomentKey::parse(s).map(Symbol::Moment)
    } else {
        CentroidSymbol::parse(s).map(Symbol::Centroid)
    }
}

pub fn bracket(sig: &str, kind: BracketKind, a: &str, b: &str) -> Result<String, CliError> {
    let sig = SystemSignature::parse_split(sig, 1.0)?;
    let (a, b) = (parse_symbol(a)?, parse_symbol(b)?);
    let result = match (&a, &b) {
        (Symbol::Moment(x), Symbol::Moment(y)) => moment_bracket(x, y, &sig, kind)?,
        _ => {
            for s in [&a, &b] {
                if let Symbol::Moment(k) = s {
                    sig.check_key(k)?;
                }
                if let Symbol::Centroid(c) = s {
                    if c.dof >= sig.dofs() {
                        return Err(Error::InvalidConfig(format!("centroid {c} is outside {sig}")).into());
                    }
                }
            }
            symbol_bracket(&a, &b, &sig, kind)?
        }
    };
    Ok(result.to_string())
}

pub fn eom(cfg: &RunConfig, show_hamiltonian: bool) -> Result<String, CliError> {
    let sys = cfg.system()?;
    let mut out = String::new();
    if show_hamiltonian {
        out.push_str(&format!("H_eff = {}\n", sys.effective_hamiltonian()));
    }
    out.push_str(&sys.to_string());
    Ok(out)
}

fn f64_field(x: f64) -> String {
    format!("{x:?}")
}

fn write_csv<W: Write>(w: W, header: &[String], rows: impl Iterator<Item = Vec<f64>>) -> Result<(), CliError> {
    let mut wr = csv::Writer::from_writer(w);
    let io = |e: csv::Error| CliError::Io(e.to_string());
    wr.write_record(header).map_err(io)?;
    for row in rows {
        wr.write_record(row.into_iter().map(f64_field)).map_err(io)?;
    }
    wr.flush().map_err(|e| CliError::Io(e.to_string()))
}

fn open_output(path: &Option<PathBuf>) -> Result<Box<dyn Write>, CliError> {
    Ok(match path {
        Some(p) => Box::new(File::create(p).map_err(io_err(p))?),
        None => Box::new(io::stdout().lock()),
    })
}

fn state_json(layout: &[Symbol], s: &SimState) -> Value {
    let mut m = serde_json::Map::new();
    for (sym, v) in layout.iter().zip(&s.values) {
        m.insert(sym.to_string(), json!(v));
    }
    json!({ "time": s.time, "values": m })
}

/// Integrates the configured system; writes the CSV and returns the summary.
pub fn simulate(cfg: &RunConfig) -> Result<Value, CliError> {
    let prepared = cfg.prepare()?;
    let integrator = cfg.integrator()?;
    let sys = &prepared.system;
    let sig = *sys.signature();
    let traj = integrate(sys, &prepared.initial, &integrator, sig.hbar())?;

    let mut header = vec!["t".to_string()];
    header.extend(sys.state_layout().iter().map(|s| s.to_string()));
    let rows = traj.iter().map(|s| {
        let mut row = Vec::with_capacity(s.values.len() + 1);
        row.push(s.time);
        row.extend_from_slice(&s.values);
        row
    });
    write_csv(open_output(&cfg.output.csv)?, &header, rows)?;

    let last = traj.last().expect("trajectory has at least the initial state");
    let mut summary = json!({
        "signature": sig.to_string(),
        "kind": sys.kind().name(),
        "truncation": sys.truncation_order(),
        "rows": traj.len(),
        "final": state_json(sys.state_layout(), last),
        "energy": { "initial": energy(sys, &traj[0])?, "final": energy(sys, last)? },
    });
    if sig.n_classical() > 0 && sig.n_quantum() > 0 {
        let (mut uc_min, mut uc_max, mut uq_min, mut uq_max) =
            (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
        for s in &traj {
            let (uc, uq) = sector_uncertainties(sys, s)?;
            uc_min = uc_min.min(uc);
            uc_max = uc_max.max(uc);
            uq_min = uq_min.min(uq);
            uq_max = uq_max.max(uq);
        }
        summary["uncertainty"] = json!({
            "u_c": { "min": uc_min, "max": uc_max },
            "u_q": { "min": uq_min, "max": uq_max },
        });
    }
    Ok(summary)
}

/// Frequency given either as a rational `ω` or as `sqrt(r)` with `r = ω²`; returns `ω²`.
pub fn parse_frequency(s: &str) -> Result<Rational, Error> {
    let t = s.trim();
    match t.strip_prefix("sqrt(").and_then(|r| r.strip_suffix(')')) {
        Some(inner) => parse_rational(inner),
        None => {
            let w = parse_rational(t)?;
            if w < Rational::from_integer(0.into()) {
                return Err(Error::InvalidConfig(format!("frequency {t} is negative")));
            }
            Ok(&w * &w)
        }
    }
}

pub struct OscillatorArgs {
    pub omega1: String,
    pub omega2: String,
    pub ics: [f64; 4],
    pub u0: f64,
    pub hbar: Option<f64>,
    pub t_end: f64,
    pub samples: usize,
    pub csv: Option<PathBuf>,
    pub report: bool,
}

/// Tabulates the closed-form solution; returns the bound report if requested.
pub fn oscillator(args: &OscillatorArgs) -> Result<Option<Value>, CliError> {
    let params = OscillatorParams::from_squares(parse_frequency(&args.omega1)?, parse_frequency(&args.omega2)?)?;
    if !args.t_end.is_finite() || args.t_end < 0.0 || args.samples == 0 {
        return Err(Error::InvalidConfig("t_end must be non-negative and samples positive".into()).into());
    }
    if !args.u0.is_finite() || args.u0 < 0.0 {
        return Err(Error::InvalidConfig("u0 must be finite and non-negative".into()).into());
    }
    let grid = uniform_grid(0.0, args.t_end, args.samples);
    let header: Vec<String> = ["t", "q", "p", "x", "k", "g", "u_c", "u_q"].map(String::from).to_vec();
    let rows = grid.iter().map(|&t| {
        let c = analytic_centroid(t, args.ics, &params);
        let u = uncertainty_functions(t, args.u0, &params);
        vec![t, c[0], c[1], c[2], c[3], u.g, u.u_c, u.u_q]
    });
    write_csv(open_output(&args.csv)?, &header, rows)?;
    if !args.report {
        return Ok(None);
    }
    let hbar = args.hbar.unwrap_or(2.0 * args.u0.sqrt());
    let r = bound_report(&params, args.u0, &grid, hbar)?;
    Ok(Some(json!({
        "omega1": params.omega1(),
        "omega2": params.omega2(),
        "omega_sq": params.omega_sq().to_string(),
        "gamma": params.gamma().to_string(),
        "u0": args.u0,
        "hbar": hbar,
        "g": { "min": r.g_min, "max": r.g_max, "min_within_bounds": r.g_min_within, "max_within_bounds": r.g_max_within },
        "u_c": { "min": r.u_c_min, "max": r.u_c_max, "max_within_bounds": r.u_c_max_within },
        "u_q": { "min": r.u_q_min, "max": r.u_q_max, "max_within_bounds": r.u_q_max_within },
        "sum_min": r.sum_min,
        "max_conservation_residual": r.max_conservation_residual,
        "heisenberg_violated": r.heisenberg_violated,
        "grid_tolerance": { "g": r.grid_tolerance_g, "u": r.grid_tolerance_u },
        "bounds_hold": r.bounds_hold(),
    })))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scope {
    Identities,
    Brackets,
    Jacobi,
    All,
}

pub struct VerifyArgs {
    pub scope: Scope,
    pub max_exp: u32,
    pub kind: Option<BracketKind>,
    pub max_order: Option<u32>,
    pub sig: Option<String>,
}

fn section(passed: bool, body: Value) -> Value {
    let mut v = body;
    v["passed"] = json!(passed);
    v
}

fn verify_identities(max_exp: u32) -> Result<Value, CliError> {
    let report = verify_reordering_identities(max_exp)?;
    let ids: Vec<Value> = report
        .identities
        .iter()
        .map(|i| json!({ "name": i.name, "checked": i.checked, "passed": i.passed(), "failure": i.failure }))
        .collect();
    let r = verify_r_properties();
    let props: Vec<Value> =
        r.checks.iter().map(|c| json!({ "name": c.name, "passed": c.passed, "detail": c.detail })).collect();
    Ok(section(
        report.passed() && r.passed(),
        json!({ "max_exponent": max_exp, "identities": ids, "hybrid_product": props }),
    ))
}

fn bracket_grid(max_order: Option<u32>) -> Result<Vec<(SystemSignature, BracketKind, u32)>, Error> {
    let one = |n: u32| max_order.unwrap_or(n);
    Ok(vec![
        (SystemSignature::quantum(1, 1.0)?, BracketKind::Quantum, one(4)),
        (SystemSignature::classical(1)?, BracketKind::Classical, one(4)),
        (SystemSignature::quantum(2, 1.0)?, BracketKind::Quantum, one(3)),
        (SystemSignature::classical(2)?, BracketKind::Classical, one(3)),
        (SystemSignature::new(1, 1, 1.0)?, BracketKind::Hybrid, one(3)),
    ])
}

fn verify_brackets(max_order: Option<u32>) -> Result<Value, CliError> {
    if let Some(m) = max_order {
        if !(2..=ORACLE_MAX_ORDER).contains(&m) {
            return Err(
                Error::CostGuard(format!("bracket check supports orders 2..={ORACLE_MAX_ORDER}, got {m}")).into()
            );
        }
    }
    let mut entries = Vec::new();
    let mut all = true;
    for (sig, kind, max) in bracket_grid(max_order)? {
        let keys = enumerate_moments(&sig, 2, max)?;
        let mut oracle = Oracle::new(&sig, kind);
        let (mut pairs, mut mismatch, mut lemma) = (0usize, None, None);
        for a in &keys {
            for b in &keys {
                let engine = moment_bracket(a, b, &sig, kind)?;
                let reference = oracle.moment_bracket(a, b)?;
                pairs += 1;
                if mismatch.is_none() && engine != reference {
                    mismatch = Some(format!("{{{a}, {b}}}: engine {engine}, oracle {reference}"));
                }
            }
            for c in CentroidSymbol::all(sig.dofs()) {
                let z = oracle.centroid_moment_bracket(c, a)?;
                if lemma.is_none() && !z.is_zero() {
                    lemma = Some(format!("{{{c}, {a}}} = {z}"));
                }
            }
        }
        let passed = mismatch.is_none() && lemma.is_none();
        all &= passed;
        entries.push(section(
            passed,
            json!({
                "signature": sig.to_string(),
                "kind": kind.name(),
                "max_order": max,
                "pairs": pairs,
                "mismatch": mismatch,
                "centroid_bracket": lemma,
            }),
        ));
    }
    Ok(section(all, json!({ "grids": entries })))
}

fn default_jacobi_sig(kind: BracketKind) -> SystemSignature {
    match kind {
        BracketKind::Quantum => SystemSignature::quantum(1, 1.0),
        BracketKind::Classical => SystemSignature::classical(1),
        BracketKind::Hybrid => SystemSignature::new(1, 1, 1.0),
    }
    .expect("valid default signature")
}

fn verify_jacobi(kind: Option<BracketKind>, max_order: u32, sig: Option<&str>) -> Result<Value, CliError> {
    let kinds = kind.map(|k| vec![k]).unwrap_or_else(|| BracketKind::ALL.to_vec());
    let mut entries = Vec::new();
    let mut all = true;
    for kind in kinds {
        let sig = match sig {
            Some(s) => SystemSignature::parse_split(s, 1.0)?,
            None => default_jacobi_sig(kind),
        };
        // only the hybrid bracket with both sectors present is expected to fail Jacobi
        let expect_witness =
            kind == BracketKind::Hybrid && BracketKind::Hybrid.classical_dofs(&sig) > 0 && sig.n_quantum() > 0;
        let witness = find_jacobi_witness(&sig, kind, max_order);
        let passed = witness.is_some() == expect_witness;
        all &= passed;
        let w = witness.map(|w| {
            json!({
                "keys": w.keys.iter().map(|k| k.to_string()).collect::<Vec<_>>(),
                "jacobiator": w.jacobiator.to_string(),
            })
        });
        entries.push(section(
            passed,
            json!({
                "signature": sig.to_string(),
                "kind": kind.name(),
                "max_order": max_order,
                "expect_witness": expect_witness,
                "witness": w,
            }),
        ));
    }
    Ok(section(all, json!({ "checks": entries })))
}

/// Runs the requested verification scope; `Ok` carries a passing report.
pub fn verify(args: &VerifyArgs) -> Result<Value, CliError> {
    let mut report = serde_json::Map::new();
    let run = |s: Scope| args.scope == s || args.scope == Scope::All;
    if run(Scope::Identities) {
        report.insert("identities".into(), verify_identities(args.max_exp)?);
    }
    if run(Scope::Brackets) {
        report.insert("brackets".into(), verify_brackets(args.max_order)?);
    }
    if run(Scope::Jacobi) {
        report.insert("jacobi".into(), verify_jacobi(args.kind, args.max_order.unwrap_or(3), args.sig.as_deref())?);
    }
    let passed = report.values().all(|v| v["passed"] == json!(true));
    let report = section(passed, Value::Object(report));
    if passed {
        Ok(report)
    } else {
        Err(CliError::Verification(report))
    }
}

/// One text line per check, for stderr.
pub fn verify_text(report: &Value) -> String {
    let mut lines = Vec::new();
    let mark = |v: &Value| if v["passed"] == json!(true) { "PASS" } else { "FAIL" };
    if let Some(ids) = report.get("identities") {
        for i in ids["identities"]
            .as_array()
            .into_iter()
            .flatten()
            .chain(ids["hybrid_product"].as_array().into_iter().flatten())
        {
            lines.push(format!("{} identity {}", mark(i), i["name"].as_str().unwrap_or("")));
        }
    }
    if let Some(b) = report.get("brackets") {
        for g in b["grids"].as_array().into_iter().flatten() {
            lines.push(format!(
                "{} brackets {} {} up to order {} ({} pairs)",
                mark(g),
                g["signature"].as_str().unwrap_or(""),
                g["kind"].as_str().unwrap_or(""),
                g["max_order"],
                g["pairs"]
            ));
        }
    }
    if let Some(j) = report.get("jacobi") {
        for c in j["checks"].as_array().into_iter().flatten() {
            let found = match &c["witness"] {
                Value::Null => "no nonzero jacobiator".to_string(),
                w => format!("witness {} -> {}", w["keys"], w["jacobiator"].as_str().unwrap_or("")),
            };
            lines.push(format!(
                "{} jacobi {} {} up to order {}: {found}",
                mark(c),
                c["signature"].as_str().unwrap_or(""),
                c["kind"].as_str().unwrap_or(""),
                c["max_order"]
            ));
        }
    }
    lines.join("\n")
}
