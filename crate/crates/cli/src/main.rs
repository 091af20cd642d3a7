//! `pfuchs`: batch front-end over the library. Every subcommand prints one JSON
//! document on stdout.

use std::fs;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use num_bigint::BigInt;
use serde_json::{json, Value};

use pfuchs::diffmod::{gamma_action_exact, verify_action_laws, ActionTower, Exactness};
use pfuchs::expcalc::{
    bracket, check_liouville_partition, classify_rational, fmt_residue, liouville_profile, liouville_witness,
    partition_cosets, strict_equiv, weak_equiv, PartitionCheck, PartitionMode, RationalClass, StrictEquiv, WeakEquiv,
    WitnessTree,
};
use pfuchs::fixtures;
use pfuchs::fuchs::{compute_s, constant_basis, decompose, descend_exponent, s_precision, FuchsConfig};
use pfuchs::json::{
    box_to_json, coord_to_json, cyc_series_to_json, lognorm_to_json, matrix_to_json, multiset_to_json, partition_to_json,
    rational_to_json, scalar_to_json, series_matrix_to_json, series_to_json, to_canonical_string, FixtureFile, Header,
    Payload,
};
use pfuchs::rat::{parse_q, Q};
use pfuchs::scalar::is_prime;
use pfuchs::weier::factor_monic_times_unit;
use pfuchs::{Coord, DiffModule, Error, ExponentEntry, ExponentMultiset, LaurentSeries, LogRadiusBox};

#[derive(Parser, Debug)]
#[command(name = "pfuchs", version, about = "Exponents and Fuchs decompositions of p-adic differential modules")]
struct Cli {
    #[command(flatten)]
    opts: Opts,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args, Debug, Clone)]
struct Opts {
    /// Prime, for commands that read no fixture file.
    #[arg(long, global = true)]
    p: Option<u64>,
    /// Relative precision in p-adic digits.
    #[arg(long, global = true, default_value_t = pfuchs::DEFAULT_PREC)]
    prec: u32,
    #[arg(long, global = true, default_value_t = 3)]
    kmax: u32,
    #[arg(long, global = true, default_value_t = 3)]
    hmax: u32,
    #[arg(long, global = true, default_value = "10")]
    cmax: String,
    /// Log-radius box `lo1,..:hi1,..`, or a single point `s1,..`.
    #[arg(long = "box", global = true)]
    bx: Option<String>,
    /// Per-direction log shrink `d1,..` of the box.
    #[arg(long, global = true)]
    shrink: Option<String>,
    #[arg(long, global = true, default_value_t = pfuchs::selftest::DEFAULT_SEED)]
    seed: u64,
    /// Worker count; computations are currently sequential.
    #[arg(long, global = true, default_value_t = 1)]
    jobs: usize,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Sup of the Gauss norm of a series over the box.
    Norm { file: String },
    /// Width vector of a series at a radius.
    Width { file: String },
    /// Unit test on the box, with a truncated inverse.
    Unit { file: String },
    /// Weierstrass factorisation `f = P u` at a radius.
    Factor { file: String },
    /// `p^m <x/p^m>`.
    Bracket {
        #[arg(long)]
        x: String,
        #[arg(long)]
        m: u32,
    },
    /// Prefix `(p^m/m)<x/p^m>` for `m = 1..=M`; without `--x`, a Liouville-type witness.
    Liouville {
        #[arg(long)]
        x: Option<String>,
        #[arg(long, default_value_t = 8)]
        m: u32,
    },
    /// Weak and strict equivalence of two exponent files.
    Weakequiv { a: String, b: String },
    /// Coset partition (or the given blocks) and its Liouville check.
    Partition {
        file: String,
        #[arg(long)]
        blocks: Option<String>,
        /// One-based direction; default is the recursive check.
        #[arg(long)]
        direction: Option<usize>,
    },
    /// Action table at level k and its group-law residuals.
    Action {
        file: String,
        #[arg(long)]
        k: u32,
        /// Tuple `a1,..` whose matrix to print.
        #[arg(long)]
        a: Option<String>,
    },
    /// `S_{k,A}`.
    #[command(name = "skA")]
    SkA {
        file: String,
        #[arg(long)]
        k: u32,
        /// Exponent entries `x1,..;y1,..`.
        #[arg(long = "A")]
        big_a: String,
    },
    /// Exponent by digit descent up to `--kmax`.
    Exponent { file: String },
    /// Fuchs decomposition along a Liouville partition.
    Decompose {
        file: String,
        #[arg(long = "A")]
        big_a: Option<String>,
        #[arg(long)]
        blocks: Option<String>,
    },
    /// Constant basis for a single exponent class.
    ConstantBasis {
        file: String,
        /// Exponent entry `x1,..`.
        #[arg(long = "A")]
        big_a: String,
    },
    /// Runs the bundled acceptance suite.
    Selftest,
    /// Emits a bundled fixture file.
    Fixture { name: String },
}

enum Failure {
    Usage(String),
    Domain(Error),
    Io(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Domain(e)
    }
}

type Out = Result<Value, Failure>;

fn usage(msg: impl Into<String>) -> Failure {
    Failure::Usage(msg.into())
}

fn parse_qs(s: &str) -> Result<Vec<Q>, Failure> {
    s.split(',').map(|x| parse_q(x).map_err(|e| usage(e.to_string()))).collect()
}

fn parse_box(s: &str) -> Result<LogRadiusBox, Failure> {
    let bx = match s.split_once(':') {
        Some((lo, hi)) => LogRadiusBox::new(parse_qs(lo)?, parse_qs(hi)?),
        None => Ok(LogRadiusBox::point(parse_qs(s)?)),
    };
    bx.map_err(|e| usage(format!("--box: {e}")))
}

fn parse_exponents(p: u64, s: &str) -> Result<ExponentMultiset, Failure> {
    let rows: Vec<Vec<Q>> = s.split(';').map(parse_qs).collect::<Result<_, _>>()?;
    Ok(ExponentMultiset::from_rationals(p, &rows)?)
}

fn read_fixture(path: &str) -> Result<FixtureFile, Failure> {
    let text = if path == "-" {
        std::io::read_to_string(std::io::stdin()).map_err(|e| Failure::Io(format!("stdin: {e}")))?
    } else {
        fs::read_to_string(path).map_err(|e| Failure::Io(format!("{path}: {e}")))?
    };
    Ok(FixtureFile::parse(&text)?)
}

fn wrong_kind(path: &str, want: &str, f: &FixtureFile) -> Failure {
    Failure::Domain(Error::Schema(format!("{path}: expected a {want} payload, found {}", f.payload.kind())))
}

fn read_series(path: &str) -> Result<LaurentSeries, Failure> {
    let f = read_fixture(path)?;
    match f.payload {
        Payload::Series(s) => Ok(s),
        _ => Err(wrong_kind(path, "series", &f)),
    }
}

fn read_module(path: &str) -> Result<DiffModule, Failure> {
    let f = read_fixture(path)?;
    match f.payload {
        Payload::Module(m) => Ok(m),
        _ => Err(wrong_kind(path, "module", &f)),
    }
}

fn read_exponents(path: &str) -> Result<ExponentMultiset, Failure> {
    let f = read_fixture(path)?;
    match f.payload {
        Payload::Exponents(a) => Ok(a),
        _ => Err(wrong_kind(path, "exponents", &f)),
    }
}

fn read_partition(path: &str) -> Result<Vec<Vec<usize>>, Failure> {
    let f = read_fixture(path)?;
    match f.payload {
        Payload::Partition(b) => Ok(b),
        _ => Err(wrong_kind(path, "partition", &f)),
    }
}

fn series_box(o: &Opts, f: &LaurentSeries) -> Result<LogRadiusBox, Failure> {
    let bx = match &o.bx {
        Some(s) => parse_box(s)?,
        None => LogRadiusBox::point(vec![Q::from_integer(BigInt::from(0)); f.nvars()]),
    };
    if bx.nvars() != f.nvars() {
        return Err(usage(format!("--box has {} directions, the series {}", bx.nvars(), f.nvars())));
    }
    Ok(bx)
}

fn point(o: &Opts, f: &LaurentSeries) -> Result<Vec<Q>, Failure> {
    let bx = series_box(o, f)?;
    if bx.lo != bx.hi {
        return Err(usage("this command needs a radius: pass --box as a single point"));
    }
    Ok(bx.lo)
}

fn prime(o: &Opts) -> Result<u64, Failure> {
    match o.p {
        Some(p) if is_prime(p) => Ok(p),
        Some(p) => Err(usage(format!("--p {p} is not prime"))),
        None => Err(usage("--p is required")),
    }
}

fn config(o: &Opts) -> Result<FuchsConfig, Failure> {
    let c_max = parse_q(&o.cmax).map_err(|e| usage(format!("--cmax: {e}")))?;
    let shrink = o.shrink.as_deref().map(parse_qs).transpose()?;
    Ok(FuchsConfig {
        k_max: o.kmax,
        h_max: o.hmax,
        c_max,
        shrink,
        ..FuchsConfig::default()
    })
}

/// Integral rationals as JSON numbers, the rest as strings.
fn q_num(x: &Q) -> Value {
    if x.is_integer() {
        if let Ok(i) = i64::try_from(x.numer()) {
            return json!(i);
        }
    }
    rational_to_json(x)
}

fn witness_json(t: &WitnessTree) -> Value {
    match t {
        WitnessTree::Leaf(b) => json!(b),
        WitnessTree::Split { direction, children } => json!({
            "direction": direction + 1,
            "children": children.iter().map(witness_json).collect::<Vec<_>>(),
        }),
    }
}

fn strict_json(s: &StrictEquiv) -> Value {
    match s {
        StrictEquiv::Equivalent(perm) => json!({"equivalent": perm}),
        StrictEquiv::NotEquivalent => json!("not-equivalent"),
        StrictEquiv::Inconclusive => json!("inconclusive"),
    }
}

fn weak_json(w: &WeakEquiv) -> Value {
    match w {
        WeakEquiv::Certified { c, matchings, costs } => json!({
            "certified": true,
            "c": rational_to_json(c),
            "costs": costs.iter().map(|x| x.to_string()).collect::<Vec<_>>(),
            "matchings": matchings,
        }),
        WeakEquiv::NotWithinBudget { c_observed, worst_h, costs } => json!({
            "certified": false,
            "c_observed": rational_to_json(c_observed),
            "worst_h": worst_h,
            "costs": costs.iter().map(|x| x.to_string()).collect::<Vec<_>>(),
        }),
    }
}

fn residues_json(res: &[Vec<u64>], p: u64, k: u32) -> Value {
    json!(res
        .iter()
        .map(|r| r.iter().map(|x| fmt_residue(&BigInt::from(*x), p, k)).collect::<Vec<_>>())
        .collect::<Vec<_>>())
}

fn decay_json(d: &[(u32, pfuchs::LogNorm)]) -> Value {
    json!(d.iter().map(|(k, v)| json!([k, lognorm_to_json(v)])).collect::<Vec<_>>())
}

fn cmd_norm(o: &Opts, file: &str) -> Out {
    let f = read_series(file)?;
    let bx = series_box(o, &f)?;
    Ok(json!({"lognorm": lognorm_to_json(&f.sup_lognorm(&bx)), "box": box_to_json(&bx)}))
}

fn cmd_width(o: &Opts, file: &str) -> Out {
    let f = read_series(file)?;
    let s = point(o, &f)?;
    Ok(json!({
        "width": f.width_vector(&s)?,
        "argmax": f.argmax(&s),
        "lognorm": lognorm_to_json(&f.gauss_lognorm(&s)),
    }))
}

fn cmd_unit(o: &Opts, file: &str) -> Out {
    let f = read_series(file)?;
    let bx = series_box(o, &f)?;
    let Some(dom) = f.is_unit_on_box(&bx)? else {
        return Ok(json!({"unit": false, "box": box_to_json(&bx)}));
    };
    let pad = FuchsConfig::default().pad;
    let window: Vec<(i64, i64)> = dom.iter().map(|d| (-d - pad, -d + pad)).collect();
    let (inv, tail) = f.invert_unit(&bx, &window)?;
    Ok(json!({
        "unit": true,
        "dominant": dom,
        "box": box_to_json(&bx),
        "inverse": series_to_json(&inv),
        "tail_lognorm": lognorm_to_json(&tail),
    }))
}

fn cmd_factor(o: &Opts, file: &str) -> Out {
    let f = read_series(file)?;
    let s = point(o, &f)?;
    let r = factor_monic_times_unit(&f, &s)?;
    Ok(json!({
        "P": series_to_json(&r.p_poly),
        "u": series_to_json(&r.unit),
        "residual_lognorm": lognorm_to_json(&r.residual),
        "relative_residual_lognorm": lognorm_to_json(&r.relative_residual(&f, &s)),
        "precision_floor": lognorm_to_json(&r.precision_floor),
        "degrees": [r.lower, r.upper],
        "method": r.method,
    }))
}

fn cmd_bracket(o: &Opts, x: &str, m: u32) -> Out {
    let p = prime(o)?;
    let x = parse_q(x).map_err(|e| usage(format!("--x: {e}")))?;
    Ok(json!({"value": q_num(&Q::from_integer(bracket(&Coord::Rat(x), p, m)?))}))
}

fn cmd_liouville(o: &Opts, x: Option<&str>, m: u32) -> Out {
    let p = prime(o)?;
    let (coord, extra) = match x {
        Some(x) => {
            let q = parse_q(x).map_err(|e| usage(format!("--x: {e}")))?;
            let class = match classify_rational(&q, p)? {
                RationalClass::Integer => "integer",
                RationalClass::NonLiouvilleNonInteger => "non-liouville-non-integer",
            };
            (Coord::Rat(q), json!({"class": class}))
        }
        None => {
            let (w, exps) = liouville_witness(p, o.prec);
            (Coord::Padic(w.clone()), json!({"witness": scalar_to_json(&w), "exponents": exps}))
        }
    };
    let prof = liouville_profile(&coord, p, m)?;
    let mut out = json!({
        "values": prof.values.iter().map(rational_to_json).collect::<Vec<_>>(),
        "min": prof.min_value.as_ref().map(rational_to_json),
        "nondecreasing": prof.nondecreasing,
    });
    if let (Some(o), Some(e)) = (out.as_object_mut(), extra.as_object()) {
        o.extend(e.clone());
    }
    Ok(out)
}

fn cmd_weakequiv(o: &Opts, a: &str, b: &str) -> Out {
    let (a, b) = (read_exponents(a)?, read_exponents(b)?);
    let cfg = config(o)?;
    let w = weak_equiv(&a, &b, cfg.h_max, &cfg.c_max)?;
    Ok(json!({"weak": weak_json(&w), "strict": strict_json(&strict_equiv(&a, &b)?)}))
}

fn cmd_partition(file: &str, blocks: Option<&str>, direction: Option<usize>) -> Out {
    let a = read_exponents(file)?;
    let blocks = match blocks {
        Some(b) => read_partition(b)?,
        None => partition_cosets(&a)?,
    };
    let mode = match direction {
        Some(0) => return Err(usage("--direction is one-based")),
        Some(r) => PartitionMode::Direction(r - 1),
        None => PartitionMode::Recursive,
    };
    let check = match check_liouville_partition(&a, &blocks, mode)? {
        PartitionCheck::Valid(t) => json!({"valid": witness_json(&t)}),
        PartitionCheck::Invalid(w) => json!({"invalid": w}),
        PartitionCheck::Inconclusive(w) => json!({"inconclusive": w}),
    };
    Ok(json!({"blocks": partition_to_json(&blocks), "check": check}))
}

fn cmd_action(file: &str, k: u32, a: Option<&str>) -> Out {
    let m = read_module(file)?;
    let e = gamma_action_exact(&m, k)?;
    let laws = verify_action_laws(&e);
    let mut out = json!({
        "level": k,
        "order": e.order(),
        "exact": matches!(e.exactness, Exactness::Exact),
        "laws": {
            "group_law_residual": lognorm_to_json(&laws.group_law_residual),
            "galois_residual": lognorm_to_json(&laws.galois_residual),
            "identity_residual": lognorm_to_json(&laws.identity_residual),
            "growth_l": laws.growth_l,
            "pairs_checked": laws.pairs_checked,
            "generators_only": laws.generators_only,
        },
    });
    if let Some(a) = a {
        let t: Vec<u64> = a
            .split(',')
            .map(|x| x.trim().parse::<u64>().map(|v| v % e.order()))
            .collect::<Result<_, _>>()
            .map_err(|_| usage("--a takes comma-separated non-negative integers"))?;
        if t.len() != m.nvars {
            return Err(usage(format!("--a needs {} entries", m.nvars)));
        }
        out["a"] = json!(t);
        out["E"] = matrix_to_json(e.get(&t), cyc_series_to_json);
    }
    Ok(out)
}

fn cmd_ska(file: &str, k: u32, big_a: &str) -> Out {
    let m = read_module(file)?;
    let a = parse_exponents(m.p, big_a)?;
    let e = gamma_action_exact(&m, k)?;
    let s = compute_s(&e, &a)?;
    Ok(json!({
        "S": series_matrix_to_json(&s),
        "precision": s_precision(&e),
        "det_constant_lognorm": lognorm_to_json(&s.det().constant_term().lognorm()),
    }))
}

fn cmd_exponent(o: &Opts, file: &str) -> Out {
    let m = read_module(file)?;
    let tower = ActionTower::exact(&m, o.kmax)?;
    let d = descend_exponent(&tower.levels, o.kmax)?;
    Ok(json!({
        "A": residues_json(&d.residues, m.p, o.kmax),
        "det_trace": d.det_trace().iter().map(q_num).collect::<Vec<_>>(),
    }))
}

fn cmd_decompose(o: &Opts, file: &str, big_a: Option<&str>, blocks: Option<&str>) -> Out {
    let m = read_module(file)?;
    let cfg = config(o)?;
    let a = big_a.map(|s| parse_exponents(m.p, s)).transpose()?;
    let blocks = blocks.map(read_partition).transpose()?;
    let d = decompose(&m, a.as_ref(), blocks.as_deref(), &cfg)?;
    let factors: Vec<Value> = d
        .factors
        .iter()
        .map(|f| {
            json!({
                "indices": f.indices,
                "exponent": multiset_to_json(&f.exponent),
                "basis": series_matrix_to_json(&f.basis),
                "theta": f.theta.iter().map(series_matrix_to_json).collect::<Vec<_>>(),
                "certificate": {
                    "passed": f.certificate.passed,
                    "growth_l": f.certificate.growth_l,
                    "failures": f.certificate.failures,
                    "det_constant_lognorms": f.certificate.records.iter()
                        .map(|r| lognorm_to_json(&r.det_constant_lognorm)).collect::<Vec<_>>(),
                },
                "descent": f.descent.as_ref().map(|x| residues_json(&x.residues, m.p, x.k_max)),
                "reconstructed": f.reconstructed.as_ref().map(multiset_to_json),
                "strict": f.strict.as_ref().map(strict_json),
                "weak": f.weak.as_ref().map(weak_json),
                "off_block_residual": lognorm_to_json(&f.off_block_residual),
            })
        })
        .collect();
    let projectors: Vec<Value> = d
        .projectors
        .iter()
        .map(|r| {
            json!({
                "block": r.block,
                "levels": r.levels,
                "limit": series_matrix_to_json(&r.limit),
                "decay": decay_json(&r.decay),
                "idempotency_residual": lognorm_to_json(&r.idempotency_residual),
                "horizontality_residual": lognorm_to_json(&r.horizontality_residual),
                "exact_inverses": r.exact_inverses,
            })
        })
        .collect();
    Ok(json!({
        "exponent": multiset_to_json(&d.exponent),
        "blocks": partition_to_json(&d.blocks),
        "witness": witness_json(&d.tree),
        "exact": d.exact,
        "factors": factors,
        "projectors": projectors,
    }))
}

fn cmd_constant_basis(o: &Opts, file: &str, big_a: &str) -> Out {
    let m = read_module(file)?;
    let cfg = config(o)?;
    let entry = ExponentEntry::rational(&parse_qs(big_a)?);
    if entry.dim() != m.nvars {
        return Err(usage(format!("--A needs {} coordinates", m.nvars)));
    }
    let tower = ActionTower::exact(&m, cfg.k_max)?;
    let cb = constant_basis(&m.theta, &tower.levels, &entry, &cfg)?;
    Ok(json!({
        "lambda": entry.coords.iter().map(coord_to_json).collect::<Vec<_>>(),
        "onset": cb.onset,
        "basis": series_matrix_to_json(&cb.basis),
        "constants": cb.constants.iter().map(|c| matrix_to_json(c, scalar_to_json)).collect::<Vec<_>>(),
        "charpoly": cb.charpoly.iter().map(|c| c.iter().map(scalar_to_json).collect::<Vec<_>>()).collect::<Vec<_>>(),
        "nilpotent": cb.nilpotent,
        "decay": decay_json(&cb.decay),
        "constancy_residual": lognorm_to_json(&cb.constancy_residual),
        "exact": cb.exact,
    }))
}

fn cmd_selftest(o: &Opts) -> (Value, bool) {
    let report = pfuchs::selftest::run_with(o.seed, |r| eprintln!("{r}"));
    let criteria: Vec<Value> = report
        .results
        .iter()
        .map(|r| {
            json!({
                "id": r.id,
                "name": r.name,
                "passed": r.passed,
                "detail": r.detail,
            })
        })
        .collect();
    let passed = report.passed();
    eprintln!("{} of {} criteria passed in {:.1}s", criteria.iter().filter(|c| c["passed"] == true).count(), criteria.len(), report.total.as_secs_f64());
    (json!({"seed": report.seed, "passed": passed, "criteria": criteria}), passed)
}

fn cmd_fixture(o: &Opts, name: &str) -> Out {
    let module = match name {
        "twisted_rank2" => fixtures::twisted_rank2(),
        "unipotent" => fixtures::unipotent(false),
        "unipotent_twisted" => fixtures::unipotent(true),
        "twisted_trivial" => fixtures::twisted_trivial(),
        "rank4_tensor" => fixtures::rank4_tensor(),
        "random" => fixtures::random_certified(o.seed).module,
        "identity" => pfuchs::diffmod::m_lambda(o.p.unwrap_or(3), o.prec, &[Q::from_integer(BigInt::from(0))])?,
        "m_half" => pfuchs::diffmod::m_lambda(3, o.prec, &[Q::new(BigInt::from(1), BigInt::from(2))])?,
        other => match fixtures::lambda_fixtures().into_iter().find(|f| f.name == other) {
            Some(f) => f.module()?,
            None => {
                let mut names: Vec<String> = ["twisted_rank2", "unipotent", "unipotent_twisted", "twisted_trivial", "rank4_tensor", "random", "identity", "m_half"]
                    .iter()
                    .map(|s| s.to_string())
                    .collect();
                names.extend(fixtures::lambda_fixtures().into_iter().map(|f| f.name));
                return Err(usage(format!("unknown fixture '{other}'; known: {}", names.join(", "))));
            }
        },
    };
    let h = Header {
        p: module.p,
        prec: module.prec,
        nvars: module.nvars,
    };
    Ok(FixtureFile::new(h, Payload::Module(module)).to_value())
}

fn error_json(code: &str, message: &str) -> String {
    to_canonical_string(&json!({"error": {"code": code, "message": message}}))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let o = &cli.opts;
    if o.jobs == 0 {
        print!("{}", error_json("usage", "--jobs must be at least 1"));
        return ExitCode::from(2);
    }
    let out = match &cli.cmd {
        Cmd::Norm { file } => cmd_norm(o, file),
        Cmd::Width { file } => cmd_width(o, file),
        Cmd::Unit { file } => cmd_unit(o, file),
        Cmd::Factor { file } => cmd_factor(o, file),
        Cmd::Bracket { x, m } => cmd_bracket(o, x, *m),
        Cmd::Liouville { x, m } => cmd_liouville(o, x.as_deref(), *m),
        Cmd::Weakequiv { a, b } => cmd_weakequiv(o, a, b),
        Cmd::Partition { file, blocks, direction } => cmd_partition(file, blocks.as_deref(), *direction),
        Cmd::Action { file, k, a } => cmd_action(file, *k, a.as_deref()),
        Cmd::SkA { file, k, big_a } => cmd_ska(file, *k, big_a),
        Cmd::Exponent { file } => cmd_exponent(o, file),
        Cmd::Decompose { file, big_a, blocks } => cmd_decompose(o, file, big_a.as_deref(), blocks.as_deref()),
        Cmd::ConstantBasis { file, big_a } => cmd_constant_basis(o, file, big_a),
        Cmd::Selftest => {
            let (v, ok) = cmd_selftest(o);
            print!("{}", to_canonical_string(&v));
            return if ok { ExitCode::SUCCESS } else { ExitCode::from(1) };
        }
        Cmd::Fixture { name } => cmd_fixture(o, name),
    };
    match out {
        Ok(v) => {
            print!("{}", to_canonical_string(&v));
            ExitCode::SUCCESS
        }
        Err(Failure::Domain(e)) => {
            print!("{}", error_json(e.code(), &e.to_string()));
            ExitCode::from(1)
        }
        Err(Failure::Io(m)) => {
            print!("{}", error_json("io", &m));
            ExitCode::from(1)
        }
        Err(Failure::Usage(m)) => {
            print!("{}", error_json("usage", &m));
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
    }
}
