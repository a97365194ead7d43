//! Subcommand dispatch and the JSON envelope.
//!
//! Every invocation prints one JSON document (sorted keys) on stdout, or to
//! `--out`, and a short human summary on stderr.  Exit status: 0 success,
//! 1 usage error, 2 verification failure or numerical breakdown.

use std::fmt;
use std::io::Write as _;
use std::path::PathBuf;
use std::str::FromStr;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};
use num_complex::Complex64;
use serde::{Serialize, Serializer};
use serde_json::{json, Value};

use super::expr::{parse_operator_with, Bindings, OperatorExpr, Symbol};
use crate::cm::{
    build_cm, cm_bethe_residual, cm_commutator, cm_eigen_check, cm_pair_check, cm_solve_bethe,
    solve_higher_integral, IntegralOptions, CM_RESIDUAL_TOL,
};
use crate::commutant::{algebraic_type_test, find_commuting, spectral_polynomial, GenericLamePair, Verdict};
use crate::elliptic::{wp_prime_series, wp_series, EllipticInvariants, Lattice};
use crate::lame::{bethe_residuals, build_lame, eigenfunction_check, solve_bethe, verify_point, BETHE_TOL};
use crate::monodromy::{commutativity_scan, irreducibility_probe, monodromy_group, CMatrix};
use crate::scalar::{parse_q, q_to_f64, Scalar, Q};
use crate::series::DEFAULT_TRUNC;

pub const SCHEMA: &str = "qcis-lab/1";

const PI_TOL: f64 = 1e-8;
const EIGEN_TOL: f64 = 1e-6;
const DET_TOL: f64 = 1e-8;
const RELATION_TOL: f64 = 1e-6;
const CROSS_TOL: f64 = 1e-9;

/// A rational given on the command line as `p/q` or `p`.
#[derive(Clone, Debug, PartialEq)]
pub struct Rat(pub Q);

impl FromStr for Rat {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        parse_q(s.trim()).map(Rat).ok_or_else(|| format!("`{s}` is not a rational p/q"))
    }
}

impl Serialize for Rat {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.0.to_string())
    }
}

/// A complex number given as `re,im`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Cx(pub Complex64);

impl FromStr for Cx {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        let bad = || format!("`{s}` is not a complex number re,im");
        let (re, im) = s.split_once(',').unwrap_or((s, "0"));
        let re: f64 = re.trim().parse().map_err(|_| bad())?;
        let im: f64 = im.trim().parse().map_err(|_| bad())?;
        if !re.is_finite() || !im.is_finite() {
            return Err(bad());
        }
        Ok(Cx(Complex64::new(re, im)))
    }
}

impl Serialize for Cx {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        [self.0.re, self.0.im].serialize(s)
    }
}

#[derive(Parser, Debug, Serialize)]
#[command(name = "qcis", version, about = "Commuting differential operators: exact algebra and numerical checks")]
pub struct Cli {
    #[command(flatten)]
    pub global: Global,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Serialize)]
pub struct Global {
    /// Coupling parameter, a rational p/q.
    #[arg(long, global = true)]
    pub m: Option<Rat>,
    /// Curve invariant g2 (rational).
    #[arg(long, global = true, default_value = "4")]
    pub g2: Rat,
    /// Curve invariant g3 (rational).
    #[arg(long, global = true, default_value = "1")]
    pub g3: Rat,
    /// Series truncation order.
    #[arg(long, global = true, env = "QCIS_TRUNC", default_value_t = DEFAULT_TRUNC)]
    pub trunc: i64,
    /// Seed for Bethe starting points and random samples.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Overrides the headline tolerance of the subcommand.
    #[arg(long, global = true)]
    pub tol: Option<f64>,
    /// Write the JSON document here instead of stdout.
    #[arg(long, global = true)]
    #[serde(skip)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug, Serialize)]
pub struct LatticeArgs {
    #[arg(long, default_value = "1,0")]
    pub omega1: Cx,
    #[arg(long, default_value = "0,1")]
    pub omega2: Cx,
}

#[derive(Subcommand, Debug, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    /// Laurent expansion of ℘ at the origin.
    WpSeries,
    /// g2, g3 of a period lattice.
    LatticeInvariants(LatticeArgs),
    /// Parse and normalize operator expressions.
    #[command(subcommand)]
    Op(OpCommand),
    /// Commuting operators of the Lamé operator by exact ansatz.
    #[command(subcommand)]
    Commutant(CommutantCommand),
    /// Burchnall–Chaundy polynomial of the Lamé operator.
    SpectralCurve,
    /// Bounded search for a commuting operator of odd order.
    AlgebraicType {
        #[arg(long, default_value_t = 7)]
        max_order: usize,
        #[arg(long, default_value_t = 8)]
        samples: usize,
    },
    /// Hermite–Bethe eigenfunctions of the Lamé operator.
    #[command(subcommand)]
    Lame(LameCommand),
    /// Elliptic Calogero–Moser operators for two and three particles.
    #[command(subcommand)]
    Cm(CmCommand),
    /// Numerical monodromy on the punctured torus.
    #[command(subcommand)]
    Monodromy(MonodromyCommand),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Ring {
    Auto,
    Elliptic,
    Series,
    Cm,
}

#[derive(Args, Debug, Serialize)]
pub struct RingArgs {
    #[arg(long, value_enum, default_value_t = Ring::Auto)]
    pub ring: Ring,
    /// Particle count for the Calogero–Moser ring (inferred when omitted).
    #[arg(long)]
    pub n: Option<usize>,
}

#[derive(Subcommand, Debug, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum OpCommand {
    /// Normalize one operator in the chosen ring.
    Eval {
        expr: String,
        #[command(flatten)]
        ring: RingArgs,
    },
    /// Commutator [A, B].
    Commutator {
        a: String,
        b: String,
        #[command(flatten)]
        ring: RingArgs,
    },
    /// Formal adjoint.
    Adjoint {
        expr: String,
        #[command(flatten)]
        ring: RingArgs,
    },
}

#[derive(Subcommand, Debug, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum CommutantCommand {
    /// Monic operator of the given odd order commuting with D² − m(m+1)℘.
    Find {
        #[arg(long)]
        order: usize,
        #[arg(long)]
        wbound: Option<u32>,
    },
}

#[derive(Subcommand, Debug, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum LameCommand {
    /// The commuting operator Q_m and P_m on the chosen curve.
    Qm,
    /// Solve the Bethe equations from a seeded start.
    Bethe {
        #[command(flatten)]
        lattice: LatticeArgs,
        #[arg(long, default_value_t = 15)]
        terms: usize,
    },
    /// Solve, then check π(f), the eigenfunction series and the σ-image.
    Verify {
        #[command(flatten)]
        lattice: LatticeArgs,
        #[arg(long, default_value_t = 15)]
        terms: usize,
    },
}

#[derive(Subcommand, Debug, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum CmCommand {
    /// Hamiltonians L¹ and L².
    Build {
        #[arg(long)]
        n: usize,
    },
    /// Integral of the given order by exact ansatz.
    Integral {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        order: u32,
    },
    /// Commutators of the family at random points.
    CommuteCheck {
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 200)]
        samples: usize,
    },
    /// Bethe state and, for two particles, the eigenfunction check.
    Bethe {
        #[arg(long)]
        n: usize,
        #[command(flatten)]
        lattice: LatticeArgs,
        /// Total momentum t of the eigenfunction check.
        #[arg(long, default_value = "0.3,0.1")]
        t: Cx,
        #[arg(long, default_value_t = 14)]
        degree: u32,
    },
}

#[derive(Subcommand, Debug, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum MonodromyCommand {
    /// Monodromy matrices, relation and commutator defects at one λ.
    Group {
        #[arg(long, allow_hyphen_values = true)]
        lambda: Cx,
        #[command(flatten)]
        lattice: LatticeArgs,
        #[arg(long, allow_hyphen_values = true)]
        basepoint: Option<Cx>,
    },
    /// Commutator defects over a list of λ.
    Scan {
        #[arg(long, num_args = 1.., required = true, allow_hyphen_values = true)]
        lambdas: Vec<Cx>,
        #[command(flatten)]
        lattice: LatticeArgs,
    },
}

/// Result of one invocation.
#[derive(Clone, Debug, PartialEq)]
pub struct Outcome {
    pub code: i32,
    pub json: String,
    pub summary: String,
}

enum Failure {
    Usage(String),
    Compute(String),
}

impl<E: fmt::Display> From<E> for Failure
where
    E: std::error::Error,
{
    fn from(e: E) -> Self {
        Failure::Compute(e.to_string())
    }
}

fn usage(msg: impl Into<String>) -> Failure {
    Failure::Usage(msg.into())
}

struct Report {
    result: Value,
    passed: bool,
    summary: String,
}

fn cx(z: Complex64) -> Value {
    json!([z.re, z.im])
}

fn qs(x: &Q) -> Value {
    Value::String(x.to_string())
}

fn matrix(m: &CMatrix) -> Value {
    json!([[cx(m[(0, 0)]), cx(m[(0, 1)])], [cx(m[(1, 0)]), cx(m[(1, 1)])]])
}

impl Cli {
    fn m(&self) -> Result<&Q, Failure> {
        self.global.m.as_ref().map(|r| &r.0).ok_or_else(|| usage("--m is required"))
    }

    fn m_nat(&self) -> Result<u32, Failure> {
        let m = self.m()?;
        if !m.is_integer() || m < &Q::zero() || m > &Q::from_i64(64) {
            return Err(usage(format!("--m must be a nonnegative integer here, got {m}")));
        }
        Ok(q_to_f64(m) as u32)
    }

    fn invariants(&self) -> Result<Arc<EllipticInvariants>, Failure> {
        EllipticInvariants::new(self.global.g2.0.clone(), self.global.g3.0.clone())
            .map(EllipticInvariants::into_arc)
            .map_err(|e| usage(e.to_string()))
    }

    fn tol(&self, default: f64) -> f64 {
        self.global.tol.unwrap_or(default)
    }
}

fn lattice(a: &LatticeArgs) -> Result<Lattice, Failure> {
    Lattice::new(a.omega1.0, a.omega2.0).map_err(|e| usage(e.to_string()))
}

/// Parses, validates and executes; never prints.
pub fn run(cli: &Cli) -> Outcome {
    let report = dispatch(cli);
    let config = serde_json::to_value(cli).expect("config serializes");
    let (code, status, result, summary) = match report {
        Ok(r) if r.passed => (0, "ok", r.result, r.summary),
        Ok(r) => (2, "verification_failed", r.result, r.summary),
        Err(Failure::Usage(msg)) => (1, "usage_error", json!({ "error": msg }), format!("usage error: {msg}")),
        Err(Failure::Compute(msg)) => (2, "error", json!({ "error": msg }), format!("error: {msg}")),
    };
    let command = cli.command.name();
    let doc = json!({
        "schema": SCHEMA,
        "command": command,
        "config": config,
        "result": result,
        "status": status,
    });
    let mut json = serde_json::to_string_pretty(&doc).expect("json");
    json.push('\n');
    Outcome { code, json, summary }
}

impl Command {
    /// Space-separated subcommand path, e.g. `lame bethe`.
    pub fn name(&self) -> String {
        let (head, tail) = match self {
            Command::WpSeries => ("wp-series", ""),
            Command::LatticeInvariants(_) => ("lattice-invariants", ""),
            Command::Op(OpCommand::Eval { .. }) => ("op", "eval"),
            Command::Op(OpCommand::Commutator { .. }) => ("op", "commutator"),
            Command::Op(OpCommand::Adjoint { .. }) => ("op", "adjoint"),
            Command::Commutant(CommutantCommand::Find { .. }) => ("commutant", "find"),
            Command::SpectralCurve => ("spectral-curve", ""),
            Command::AlgebraicType { .. } => ("algebraic-type", ""),
            Command::Lame(LameCommand::Qm) => ("lame", "qm"),
            Command::Lame(LameCommand::Bethe { .. }) => ("lame", "bethe"),
            Command::Lame(LameCommand::Verify { .. }) => ("lame", "verify"),
            Command::Cm(CmCommand::Build { .. }) => ("cm", "build"),
            Command::Cm(CmCommand::Integral { .. }) => ("cm", "integral"),
            Command::Cm(CmCommand::CommuteCheck { .. }) => ("cm", "commute-check"),
            Command::Cm(CmCommand::Bethe { .. }) => ("cm", "bethe"),
            Command::Monodromy(MonodromyCommand::Group { .. }) => ("monodromy", "group"),
            Command::Monodromy(MonodromyCommand::Scan { .. }) => ("monodromy", "scan"),
        };
        if tail.is_empty() {
            head.to_string()
        } else {
            format!("{head} {tail}")
        }
    }
}

/// Entry point used by the binary: returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
        }
    };
    let out = run(&cli);
    eprintln!("{}", out.summary);
    let written = match &cli.global.out {
        Some(path) => std::fs::write(path, &out.json),
        None => std::io::stdout().write_all(out.json.as_bytes()),
    };
    if let Err(e) = written {
        eprintln!("cannot write output: {e}");
        return 1;
    }
    out.code
}

fn dispatch(cli: &Cli) -> Result<Report, Failure> {
    match &cli.command {
        Command::WpSeries => wp_series_cmd(cli),
        Command::LatticeInvariants(l) => {
            let lat = lattice(l)?;
            Ok(Report {
                result: json!({ "g2": cx(lat.g2()), "g3": cx(lat.g3()) }),
                passed: true,
                summary: format!("g2 = {:.12}, g3 = {:.12}", lat.g2(), lat.g3()),
            })
        }
        Command::Op(op) => op_cmd(cli, op),
        Command::Commutant(CommutantCommand::Find { order, wbound }) => {
            let inv = cli.invariants()?;
            let l = build_lame(cli.m()?, &inv);
            match find_commuting(&l, *order, *wbound) {
                Ok(q) => Ok(Report {
                    summary: format!("found Q = {q}"),
                    result: json!({ "found": true, "operator": l.to_string(), "commutant": q.to_string(), "order": order }),
                    passed: true,
                }),
                Err(crate::commutant::CommutantError::NotFound { order, wbound }) => Ok(Report {
                    summary: format!("no commuting operator of order {order} (weight bound {wbound})"),
                    result: json!({ "found": false, "operator": l.to_string(), "order": order, "wbound": wbound }),
                    passed: true,
                }),
                Err(e) => Err(e.into()),
            }
        }
        Command::SpectralCurve => {
            let inv = cli.invariants()?;
            let m = cli.m_nat()?;
            let l = build_lame(&Q::from_i64(m as i64), &inv);
            let q = find_commuting(&l, 2 * m as usize + 1, None)?;
            let p = spectral_polynomial(&l, &q, None, cli.global.trunc)?;
            Ok(Report {
                summary: format!("P_{m} has degree {}, monic = {}", p.degree(), p.is_monic()),
                result: json!({
                    "operator": l.to_string(),
                    "commutant": q.to_string(),
                    "coefficients": p.coeffs.iter().map(qs).collect::<Vec<_>>(),
                    "degree": p.degree(),
                    "monic": p.is_monic(),
                    "discriminant": qs(&p.discriminant()),
                    "identity_checked": true,
                }),
                passed: p.is_monic() && p.degree() == 2 * m as usize + 1,
            })
        }
        Command::AlgebraicType { max_order, samples } => {
            let inv = cli.invariants()?;
            let l = build_lame(cli.m()?, &inv);
            let v = algebraic_type_test(&l, *max_order, None, *samples, cli.global.seed, cli.global.trunc)?;
            let (result, summary) = match v {
                Verdict::AlgebraicType {
                    order,
                    witness,
                    curve,
                    regular_samples,
                    samples,
                } => (
                    json!({
                        "verdict": "AlgebraicType",
                        "order": order,
                        "witness": witness.to_string(),
                        "curve": curve.coeffs.iter().map(qs).collect::<Vec<_>>(),
                        "regular_samples": regular_samples,
                        "samples": samples,
                    }),
                    format!("algebraic type, witness of order {order}"),
                ),
                Verdict::NoWitnessUpTo(k) => (
                    json!({ "verdict": format!("NoWitnessUpTo({k})"), "max_order": k }),
                    format!("no witness up to order {k}"),
                ),
            };
            Ok(Report {
                result,
                passed: true,
                summary,
            })
        }
        Command::Lame(c) => lame_cmd(cli, c),
        Command::Cm(c) => cm_cmd(cli, c),
        Command::Monodromy(c) => monodromy_cmd(cli, c),
    }
}

fn wp_series_cmd(cli: &Cli) -> Result<Report, Failure> {
    let inv = cli.invariants()?;
    let t = cli.global.trunc;
    if t < 1 {
        return Err(usage("--trunc must be positive"));
    }
    let p = wp_series(&inv, t);
    let dp = wp_prime_series(&inv, t);
    let g2 = inv.g2().clone();
    let g3 = inv.g3().clone();
    let residual = dp
        .mul(&dp)
        .sub(&p.pow(3).scale(&Q::from_i64(4)))
        .add(&p.scale(&g2))
        .add(&crate::series::LaurentSeries::constant(g3, t));
    Ok(Report {
        summary: format!("wp = {p}"),
        result: json!({
            "series": p.to_json(),
            "text": p.to_string(),
            "weierstrass_residual_zero": residual.is_zero(),
        }),
        passed: residual.is_zero(),
    })
}

fn op_ring(exprs: &[&OperatorExpr], args: &RingArgs) -> Result<(Ring, usize), Failure> {
    let syms: Vec<Symbol> = exprs.iter().flat_map(|e| e.symbols()).collect();
    let n_needed = syms
        .iter()
        .map(|s| match s {
            Symbol::Di(i) => *i as usize,
            Symbol::W { i, j, .. } => (*i).max(*j) as usize,
            _ => 0,
        })
        .max()
        .unwrap_or(0);
    let ring = match args.ring {
        Ring::Auto if n_needed > 0 || args.n.is_some() => Ring::Cm,
        Ring::Auto if syms.contains(&Symbol::U) => Ring::Series,
        Ring::Auto => Ring::Elliptic,
        r => r,
    };
    Ok((ring, args.n.unwrap_or(n_needed.max(1))))
}

fn op_cmd(cli: &Cli, op: &OpCommand) -> Result<Report, Failure> {
    let bind = Bindings {
        m: cli.global.m.as_ref().map(|r| r.0.clone()),
        ..Default::default()
    };
    let parse = |s: &str| parse_operator_with(s, &bind).map_err(|e| usage(e.to_string()));
    let (kind, srcs, ring) = match op {
        OpCommand::Eval { expr, ring } => ("eval", vec![expr.as_str()], ring),
        OpCommand::Commutator { a, b, ring } => ("commutator", vec![a.as_str(), b.as_str()], ring),
        OpCommand::Adjoint { expr, ring } => ("adjoint", vec![expr.as_str()], ring),
    };
    let trees = srcs.iter().map(|s| parse(s)).collect::<Result<Vec<_>, _>>()?;
    let (ring, n) = op_ring(&trees.iter().collect::<Vec<_>>(), ring)?;
    let inv = cli.invariants()?;
    let lower_err = |e: super::expr::LowerError| usage(e.to_string());
    let (text, order, zero) = match ring {
        Ring::Elliptic | Ring::Auto => {
            let ops = trees
                .iter()
                .map(|t| t.to_elliptic_op(&inv))
                .collect::<Result<Vec<_>, _>>()
                .map_err(lower_err)?;
            let r = match kind {
                "eval" => ops[0].clone(),
                "commutator" => ops[0].commutator(&ops[1])?,
                _ => ops[0].adjoint(),
            };
            (r.to_string(), r.order(), r.is_zero())
        }
        Ring::Series => {
            let t = cli.global.trunc;
            let ops = trees
                .iter()
                .map(|e| e.to_series_op(&inv, t))
                .collect::<Result<Vec<_>, _>>()
                .map_err(lower_err)?;
            let r = match kind {
                "eval" => ops[0].clone(),
                "commutator" => ops[0].commutator(&ops[1])?,
                _ => ops[0].adjoint(),
            };
            (r.to_string(), r.order(), r.is_zero())
        }
        Ring::Cm => {
            let m = bind.m.clone().unwrap_or_else(Q::zero);
            let ops = trees
                .iter()
                .map(|e| e.to_cm_op(n, &m))
                .collect::<Result<Vec<_>, _>>()
                .map_err(lower_err)?;
            let r = match kind {
                "eval" => ops[0].clone(),
                "commutator" => cm_commutator(&ops[0], &ops[1]),
                _ => return Err(usage("adjoint is not available for Calogero–Moser operators")),
            };
            (r.to_string(), r.order().map(|k| k as usize), r.is_zero())
        }
    };
    Ok(Report {
        summary: format!("{kind}: {text}"),
        result: json!({
            "parsed": trees.iter().map(|t| t.to_string()).collect::<Vec<_>>(),
            "ring": serde_json::to_value(ring).expect("ring"),
            "n": if ring == Ring::Cm { Some(n) } else { None },
            "operator": text,
            "order": order,
            "is_zero": zero,
        }),
        passed: true,
    })
}

fn lame_cmd(cli: &Cli, c: &LameCommand) -> Result<Report, Failure> {
    let m = cli.m_nat()?;
    match c {
        LameCommand::Qm => {
            let inv = cli.invariants()?;
            let pair = GenericLamePair::get(m)?;
            let l = build_lame(&Q::from_i64(m as i64), &inv);
            let q = pair.q_on(&inv);
            let p: Vec<Q> = pair.p_coeffs.iter().map(|c| c.eval(inv.g2(), inv.g3())).collect();
            let commutes = l.commutator(&q)?.is_zero();
            let identity = q.pow(2).sub(&l.poly(&p))?.is_zero();
            let skew = q.adjoint() == q.neg();
            Ok(Report {
                summary: format!("Q_{m} = {q}"),
                result: json!({
                    "operator": l.to_string(),
                    "q": q.to_string(),
                    "order": pair.order(),
                    "p_coefficients": p.iter().map(qs).collect::<Vec<_>>(),
                    "checks": { "commutes": commutes, "q_squared_is_p_of_l": identity, "skew_adjoint": skew },
                }),
                passed: commutes && identity && skew,
            })
        }
        LameCommand::Bethe { lattice: la, terms } => {
            let lat = lattice(la)?;
            let pt = solve_bethe(m, &lat, cli.global.seed)?;
            let eigen = eigenfunction_check(&pt.ansatz, &lat, pt.lambda, *terms)?;
            let tol = cli.tol(BETHE_TOL);
            let passed = pt.ansatz.residual < tol && pt.pi_residual < PI_TOL && eigen < EIGEN_TOL;
            Ok(Report {
                summary: format!(
                    "lambda = {:.12}, bethe {:.1e}, pi {:.1e}, eigen {:.1e}",
                    pt.lambda, pt.ansatz.residual, pt.pi_residual, eigen
                ),
                result: json!({
                    "lambda": cx(pt.lambda),
                    "poles": pt.ansatz.poles.iter().map(|&z| cx(z)).collect::<Vec<_>>(),
                    "c0": cx(pt.ansatz.c0),
                    "iterations": pt.iterations,
                    "terms": terms,
                    "residuals": { "bethe": pt.ansatz.residual, "pi": pt.pi_residual, "eigen": eigen },
                    "tolerances": { "bethe": tol, "pi": PI_TOL, "eigen": EIGEN_TOL },
                }),
                passed,
            })
        }
        LameCommand::Verify { lattice: la, terms } => {
            let lat = lattice(la)?;
            let pt = solve_bethe(m, &lat, cli.global.seed)?;
            let v = verify_point(&pt, &lat, *terms, true)?;
            let tol = cli.tol(BETHE_TOL);
            let spectral = v.spectral.unwrap_or(f64::INFINITY);
            let passed = v.bethe < tol
                && v.pi < PI_TOL
                && v.eigen < EIGEN_TOL
                && v.sigma_lambda_gap < PI_TOL
                && spectral < EIGEN_TOL;
            Ok(Report {
                summary: format!(
                    "lambda = {:.12}, sigma gap {:.1e}, spectral {:.1e}",
                    pt.lambda, v.sigma_lambda_gap, spectral
                ),
                result: json!({
                    "lambda": cx(pt.lambda),
                    "poles": pt.ansatz.poles.iter().map(|&z| cx(z)).collect::<Vec<_>>(),
                    "mu": v.mu.map(cx),
                    "wronskian": cx(v.wronskian),
                    "terms": terms,
                    "residuals": {
                        "bethe": v.bethe,
                        "pi": v.pi,
                        "eigen": v.eigen,
                        "sigma_lambda_gap": v.sigma_lambda_gap,
                        "spectral": v.spectral,
                    },
                    "tolerances": { "bethe": tol, "pi": PI_TOL, "eigen": EIGEN_TOL, "sigma_lambda_gap": PI_TOL, "spectral": EIGEN_TOL },
                }),
                passed,
            })
        }
    }
}

fn check_n(n: usize) -> Result<(), Failure> {
    if !(1..=3).contains(&n) {
        return Err(usage(format!("--n must be 1, 2 or 3, got {n}")));
    }
    Ok(())
}

fn cm_cmd(cli: &Cli, c: &CmCommand) -> Result<Report, Failure> {
    let opts = IntegralOptions {
        seed: cli.global.seed,
        ..Default::default()
    };
    match c {
        CmCommand::Build { n } => {
            check_n(*n)?;
            let m = cli.m()?;
            let (l1, l2) = build_cm(*n, m);
            let commute = cm_commutator(&l1, &l2).is_zero();
            Ok(Report {
                summary: format!("L2 = {l2}"),
                result: json!({
                    "l1": l1.to_string(),
                    "l2": l2.to_string(),
                    "symmetric": l2.is_symmetric(),
                    "exact_commutator_zero": commute,
                }),
                passed: commute,
            })
        }
        CmCommand::Integral { n, order } => {
            check_n(*n)?;
            let h = solve_higher_integral(*n, cli.m()?, *order, &opts)?;
            let tol = cli.tol(CM_RESIDUAL_TOL);
            Ok(Report {
                summary: format!("L{order} = {} (residual {:.1e})", h.operator, h.residual),
                result: json!({
                    "operator": h.operator.to_string(),
                    "unknowns": h.unknowns,
                    "reducible": h.reducible,
                    "residual": h.residual,
                    "tolerance": tol,
                    "lattices": opts.lattices,
                    "samples": opts.check_samples,
                }),
                passed: h.residual < tol,
            })
        }
        CmCommand::CommuteCheck { n, samples } => {
            if !(2..=3).contains(n) {
                return Err(usage("--n must be 2 or 3"));
            }
            let m = cli.m()?;
            let (l1, l2) = build_cm(*n, m);
            let exact = cm_commutator(&l1, &l2).is_zero();
            let opts = IntegralOptions {
                check_samples: *samples,
                ..opts
            };
            let h = solve_higher_integral(*n, m, 3, &opts)?;
            let tol = cli.tol(CM_RESIDUAL_TOL);
            Ok(Report {
                summary: format!("[L1,L2] exact zero: {exact}; [L2,L3] residual {:.1e}", h.residual),
                result: json!({
                    "exact_l1_l2": exact,
                    "l3": h.operator.to_string(),
                    "l3_reducible": h.reducible,
                    "residual_l2_l3": h.residual,
                    "tolerance": tol,
                    "lattices": opts.lattices,
                    "samples": samples,
                }),
                passed: exact && h.residual < tol,
            })
        }
        CmCommand::Bethe {
            n,
            lattice: la,
            t,
            degree,
        } => {
            if !(2..=3).contains(n) {
                return Err(usage("--n must be 2 or 3"));
            }
            let m = cli.m_nat()?;
            let lat = lattice(la)?;
            let st = cm_solve_bethe(*n, m, &lat, cli.global.seed)?;
            let tol = cli.tol(2.0 * BETHE_TOL);
            let mut passed = st.max_residual() < tol;
            let mut result = json!({
                "poles": st.poles.iter().map(|&z| cx(z)).collect::<Vec<_>>(),
                "residue_index": st.residue_index,
                "c": st.c.iter().map(|&z| cx(z)).collect::<Vec<_>>(),
                "residuals": { "bethe": st.max_residual() },
                "tolerances": { "bethe": tol },
            });
            if *n == 2 {
                let eig = cm_eigen_check(&st, t.0, &lat, *degree)?;
                let pair = cm_pair_check(&st, t.0, &lat, *degree)?;
                let scalar = st.to_lame(&lat)?;
                let g_cm = cm_bethe_residual(&st, &lat)?;
                let g_lame = bethe_residuals(&scalar, &lat)?;
                let cross = g_cm
                    .iter()
                    .zip(&g_lame)
                    .fold(0.0f64, |a, (x, y)| a.max((x * 0.5 - y).norm()));
                passed &= eig.residual < EIGEN_TOL && cross < CROSS_TOL && pair.independent == 2;
                result["pi"] = json!(eig.pi.iter().map(|&z| cx(z)).collect::<Vec<_>>());
                result["independent_solutions"] = json!(pair.independent);
                result["wronskian"] = cx(pair.wronskian);
                result["residuals"]["eigen"] = json!(eig.residual);
                result["residuals"]["cross_module"] = json!(cross);
                result["tolerances"]["eigen"] = json!(EIGEN_TOL);
                result["tolerances"]["cross_module"] = json!(CROSS_TOL);
                result["degree"] = json!(degree);
            }
            Ok(Report {
                summary: format!("{} poles, Bethe residual {:.1e}", st.poles.len(), st.max_residual()),
                result,
                passed,
            })
        }
    }
}

fn monodromy_cmd(cli: &Cli, c: &MonodromyCommand) -> Result<Report, Failure> {
    let m = q_to_f64(cli.m()?);
    let det_tol = cli.tol(DET_TOL);
    match c {
        MonodromyCommand::Group {
            lambda,
            lattice: la,
            basepoint,
        } => {
            let lat = lattice(la)?;
            let r = monodromy_group(m, lambda.0, &lat, basepoint.map(|b| b.0))?;
            let line = irreducibility_probe(&r);
            let passed = r.max_det_defect() < det_tol && r.relation_defect < RELATION_TOL;
            Ok(Report {
                summary: format!(
                    "commutator defect {:.2e}, line defect {:.2e}",
                    r.commutator_defect, line.defect
                ),
                result: json!({
                    "lambda": cx(r.lambda),
                    "basepoint": cx(r.basepoint),
                    "m_a": matrix(&r.m_a),
                    "m_b": matrix(&r.m_b),
                    "m_0": matrix(&r.m_0),
                    "det_defects": r.det_defects,
                    "relation_defect": r.relation_defect,
                    "relation_word": r.relation_word,
                    "commutator_defect": r.commutator_defect,
                    "common_line_defect": line.defect,
                    "line_note": line.note,
                    "tolerances": { "det": det_tol, "relation": RELATION_TOL },
                }),
                passed,
            })
        }
        MonodromyCommand::Scan { lambdas, lattice: la } => {
            let lat = lattice(la)?;
            let ls: Vec<Complex64> = lambdas.iter().map(|c| c.0).collect();
            let rows = commutativity_scan(m, &ls, &lat)?;
            let passed = rows
                .iter()
                .all(|r| r.det_defect < det_tol && r.relation_defect < RELATION_TOL);
            let max_comm = rows.iter().fold(0.0f64, |a, r| a.max(r.commutator_defect));
            let flagged = rows.iter().filter(|r| r.flagged).count();
            Ok(Report {
                summary: format!("{} rows, max commutator defect {max_comm:.2e}, {flagged} flagged", rows.len()),
                result: json!({
                    "rows": rows.iter().map(|r| json!({
                        "lambda": cx(r.lambda),
                        "commutator_defect": r.commutator_defect,
                        "det_defect": r.det_defect,
                        "relation_defect": r.relation_defect,
                        "trace_a": cx(r.trace_a),
                        "trace_b": cx(r.trace_b),
                        "flagged": r.flagged,
                        "reason": r.reason,
                    })).collect::<Vec<_>>(),
                    "max_commutator_defect": max_comm,
                    "tolerances": { "det": det_tol, "relation": RELATION_TOL },
                }),
                passed,
            })
        }
    }
}
