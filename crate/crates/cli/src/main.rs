//! `greynoise`: command-line driver for the greynoise library.
//!
//! Exit codes: 0 all checks pass, 1 a check failed, 2 bad usage or input,
//! 3 a numerical accuracy failure (enlarge a truncation or window).

use clap::{Args, Parser, Subcommand};
use greynoise::fockspace::Scalar;
use greynoise::hermite::verify_hermite_bounds;
use greynoise::kondratiev::{random_element, vage_constant, verify_vage};
use greynoise::marginals::{density_1d, GridSpec};
use greynoise::mlfun::{exact_moment_weights, exact_taylor, rational_to_f64, DEFAULT_ORDER};
use greynoise::moments::{moment_factor_exact, moment_with_limit};
use greynoise::multiindex::enumerate_up_to;
use greynoise::orthopoly::{orthonormal_basis, recurrence_blocks};
use greynoise::process::{covariance_table, derivative_rate, wick_riemann_sequence};
use greynoise::spectral::{fbm_covariance_check, r_decomposition_residual, spectral_covariance};
use greynoise::verify::{render_report, run_checks, CHECKS};
use greynoise::{
    make_ml, moment_weights, BigRational, Complex64, Error, FockGeometry, GradedSeries, GramMatrix, MLFunction,
    MeasureKind, MultiIndex, PhiDescriptor, SpectralMeasure, WeightSystem,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::fmt::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "greynoise", version, about = "Non-Gaussian white noise calculus toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// exp | ml:<alpha> | bell | custom:[c0,c1,...] | mix(..) | file:<path>
    #[arg(long, default_value = "exp")]
    phi: String,
    /// Seed of every randomized sweep.
    #[arg(long, default_value_t = 7)]
    seed: u64,
    /// Pass/fail tolerance; each subcommand has its own default.
    #[arg(long)]
    tol: Option<f64>,
    /// Output file for the CSV or JSON artifact (stdout when omitted).
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    max_degree: Option<u32>,
    /// Kondratiev weights, e.g. a=2^j,b=2^n,d=2.
    #[arg(long, default_value = "a=2^j,b=2^n,d=2")]
    weights: String,
}

#[derive(Subcommand)]
enum Command {
    /// Mixed moments E[Q^γ]; prints the value, or a CSV table with --table.
    Moments {
        #[command(flatten)]
        common: Common,
        /// Comma-separated multi-index, e.g. 2,2.
        #[arg(long)]
        gamma: Option<String>,
        /// identity:<d> or a file of whitespace- or comma-separated rows.
        #[arg(long, default_value = "identity:1")]
        gram: String,
        /// Table of every γ up to --max-degree (default 8).
        #[arg(long)]
        table: bool,
        /// Also print the exact rational value when φ and the Gram matrix allow it.
        #[arg(long)]
        exact: bool,
    },
    /// One-dimensional marginal density as CSV (x, density).
    Density {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = -20.0, allow_hyphen_values = true)]
        x_min: f64,
        #[arg(long, default_value_t = 20.0)]
        x_max: f64,
        // fine enough for the cusp of heavy-tailed ML densities at 0
        #[arg(long, default_value_t = 20001)]
        points: usize,
    },
    /// Orthonormal chaos basis and recurrence blocks as JSON.
    Chaos {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 2)]
        dim: usize,
        #[arg(long, default_value = "identity:0")]
        gram: String,
    },
    /// Adjoint pairing, commutator and kernel eigen-relation report.
    Fock {
        #[command(flatten)]
        common: Common,
    },
    /// Våge constants and a randomized pass table (CSV).
    Vage {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 4)]
        p: i32,
        #[arg(long, default_value_t = 1)]
        q: i32,
        #[arg(long, default_value_t = 1000)]
        pairs: usize,
    },
    /// Truncated covariance table (CSV) and difference-quotient rates.
    Process {
        #[command(flatten)]
        common: Common,
        /// Comma-separated time grid; default 0, 0.75, ..., 3.
        #[arg(long)]
        grid: Option<String>,
        #[arg(long, default_value_t = 400)]
        jmax: usize,
        /// Times at which the derivative rate is checked (J = 100).
        #[arg(long, default_value = "0.5,1,2")]
        rate_at: String,
    },
    /// Wick–Riemann sums of ∫_0^1 N(t) dt at meshes 2^k.
    Integrate {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 60)]
        jmax: usize,
        #[arg(long, default_value_t = 8)]
        levels: u32,
    },
    /// Spectral covariance table (CSV) and the fBm ratio report.
    Spectral {
        #[command(flatten)]
        common: Common,
        /// lebesgue | fbm:<H> | atoms:<u>@<mass>;...
        #[arg(long, default_value = "lebesgue")]
        measure: String,
        #[arg(long, default_value = "0.5,1,1.5,2,2.5,3")]
        grid: String,
    },
    /// Runs the acceptance checks.
    Verify {
        /// all, or a comma-separated list of check ids or names.
        #[arg(long, default_value = "all")]
        suite: String,
        #[arg(long, default_value_t = 7)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

enum Failure {
    Usage(String),
    Numerical(String),
    Check,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        if e.is_numerical() {
            Failure::Numerical(e.to_string())
        } else {
            Failure::Usage(e.to_string())
        }
    }
}

type Outcome = Result<(), Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Moments { common, gamma, gram, table, exact } => moments(&common, gamma, &gram, table, exact),
        Command::Density { common, x_min, x_max, points } => density(&common, GridSpec { x_min, x_max, points }),
        Command::Chaos { common, dim, gram } => chaos(&common, dim, &gram),
        Command::Fock { common } => fock(&common),
        Command::Vage { common, p, q, pairs } => vage(&common, p, q, pairs),
        Command::Process { common, grid, jmax, rate_at } => process(&common, grid, jmax, &rate_at),
        Command::Integrate { common, jmax, levels } => integrate(&common, jmax, levels),
        Command::Spectral { common, measure, grid } => spectral(&common, &measure, &grid),
        Command::Verify { suite, seed, out } => verify(&suite, seed, out),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Check) => ExitCode::from(1),
        Err(Failure::Usage(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
        Err(Failure::Numerical(m)) => {
            eprintln!("numerical failure: {m}");
            ExitCode::from(3)
        }
    }
}

fn usage(m: impl Into<String>) -> Failure {
    Failure::Usage(m.into())
}

fn emit(out: &Option<PathBuf>, text: &str) -> Outcome {
    match out {
        Some(path) => std::fs::write(path, text).map_err(|e| usage(format!("cannot write {}: {e}", path.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn verdict(ok: bool) -> Outcome {
    if ok {
        Ok(())
    } else {
        Err(Failure::Check)
    }
}

fn descriptor(spec: &str) -> Result<PhiDescriptor, Failure> {
    if let Some(path) = spec.strip_prefix("file:") {
        let text = std::fs::read_to_string(path).map_err(|e| usage(format!("cannot read {path}: {e}")))?;
        return Ok(PhiDescriptor::parse_config(&text)?);
    }
    Ok(PhiDescriptor::parse(spec)?)
}

fn parse_list(s: &str) -> Result<Vec<f64>, Failure> {
    s.split(',')
        .map(|v| v.trim().parse::<f64>().map_err(|_| usage(format!("not a number: `{v}`"))))
        .collect()
}

fn parse_gram_rows(spec: &str) -> Result<Vec<Vec<f64>>, Failure> {
    if let Some(d) = spec.strip_prefix("identity:") {
        let d: usize = d.parse().map_err(|_| usage(format!("bad dimension in `{spec}`")))?;
        return Ok((0..d).map(|i| (0..d).map(|j| if i == j { 1.0 } else { 0.0 }).collect()).collect());
    }
    let text = std::fs::read_to_string(spec).map_err(|e| usage(format!("cannot read Gram file {spec}: {e}")))?;
    text.lines()
        .map(|l| l.split('#').next().unwrap_or("").trim())
        .filter(|l| !l.is_empty())
        .map(|l| {
            l.split(|c: char| c == ',' || c.is_whitespace())
                .filter(|v| !v.is_empty())
                .map(|v| v.parse::<f64>().map_err(|_| usage(format!("bad Gram entry `{v}`"))))
                .collect()
        })
        .collect()
}

/// Rational copy of the Gram rows when every entry is a short decimal.
fn rational_rows(rows: &[Vec<f64>]) -> Option<Vec<Vec<BigRational>>> {
    rows.iter()
        .map(|r| r.iter().map(|v| BigRational::from_float(*v).filter(|_| v.fract() == 0.0 || (v * 1024.0).fract() == 0.0)).collect())
        .collect()
}

fn moments(c: &Common, gamma: Option<String>, gram: &str, table: bool, exact: bool) -> Outcome {
    let desc = descriptor(&c.phi)?;
    let rows = parse_gram_rows(gram)?;
    let g = GramMatrix::from_rows(&rows)?;
    let max_degree = c.max_degree.unwrap_or(12);
    let phi = make_ml(&desc, DEFAULT_ORDER)?;
    let m = moment_weights(&phi);
    let exact_m = exact_taylor(&desc, max_degree as usize + 2).map(|t| exact_moment_weights(&t));
    let gammas: Vec<MultiIndex> = if table {
        enumerate_up_to(g.dim(), c.max_degree.unwrap_or(8))
    } else {
        let s = gamma.ok_or_else(|| usage("--gamma is required unless --table is given"))?;
        let entries = s
            .split(',')
            .map(|v| v.trim().parse::<u32>().map_err(|_| usage(format!("bad multi-index entry `{v}`"))))
            .collect::<Result<Vec<_>, _>>()?;
        vec![MultiIndex::new(entries)]
    };
    let mut text = String::new();
    if table {
        // m_n = c_n / 2^n is the divided convention used by the moment formula.
        text.push_str("gamma,degree,value,m_n_divided,c_n_taylor,exact\n");
    }
    for gm in &gammas {
        if gm.entries().len() > g.dim() {
            return Err(usage(format!("multi-index has {} entries but the Gram matrix is {}x{}", gm.entries().len(), g.dim(), g.dim())));
        }
        let r = moment_with_limit(gm, &g, &m, max_degree)?;
        let exact_value = match (&exact_m, rational_rows(&rows)) {
            (Some(me), Some(gr)) if exact || table => {
                let f = moment_factor_exact(gm, &gr)?;
                Some(if gm.degree() % 2 == 1 { f } else { f * me[r.n as usize].clone() })
            }
            _ => None,
        };
        if table {
            let n = r.n as usize;
            let mn = m.get(n)?;
            let idx: Vec<String> = gm.padded(g.dim()).iter().map(u32::to_string).collect();
            let _ = writeln!(
                text,
                "{},{},{:?},{:?},{:?},{}",
                idx.join(" "),
                gm.degree(),
                r.value,
                mn,
                mn * 2f64.powi(n as i32),
                exact_value.map(|v| v.to_string()).unwrap_or_default()
            );
        } else {
            let _ = writeln!(text, "{:?}", r.value);
            if exact {
                match exact_value {
                    Some(v) => {
                        let _ = writeln!(text, "exact {v}");
                    }
                    None => return Err(usage("no exact value: φ or the Gram matrix is not rational")),
                }
            }
        }
    }
    emit(&c.out, &text)
}

fn density(c: &Common, grid: GridSpec) -> Outcome {
    let phi = make_ml(&descriptor(&c.phi)?, DEFAULT_ORDER)?;
    let d = density_1d(&phi, grid)?;
    let mut text = String::from("x,density\n");
    for (i, v) in d.values.iter().enumerate() {
        let _ = writeln!(text, "{:?},{:?}", d.grid.node(i), v);
    }
    emit(&c.out, &text)?;
    let tol = c.tol.unwrap_or(1e-6);
    let ok = (d.total_mass - 1.0).abs() <= tol;
    eprintln!("mass {:.9} ({}), clipped {}", d.total_mass, if ok { "PASS" } else { "FAIL" }, d.clipped);
    verdict(ok)
}

fn chaos(c: &Common, dim: usize, gram: &str) -> Outcome {
    let n = c.max_degree.unwrap_or(4);
    let g = if gram == "identity:0" { GramMatrix::identity(dim) } else { GramMatrix::from_rows(&parse_gram_rows(gram)?)? };
    if g.dim() != dim {
        return Err(usage(format!("Gram matrix is {}x{} but --dim is {dim}", g.dim(), g.dim())));
    }
    let m = moment_weights(&make_ml(&descriptor(&c.phi)?, DEFAULT_ORDER)?);
    let basis = orthonormal_basis(dim, n, &g, &m)?;
    let mut blocks = Vec::new();
    let mut residual: f64 = 0.0;
    for j in 0..dim {
        for level in 0..n {
            let r = recurrence_blocks(&basis, j, level)?;
            residual = residual.max(r.residual);
            blocks.push(r.to_json());
        }
    }
    let err = basis.orthonormality_error();
    let json = serde_json::json!({
        "phi": c.phi,
        "basis": basis.to_json(),
        "orthonormality_error": err,
        "recurrence_residual": residual,
        "recurrence": blocks,
    });
    let text = serde_json::to_string_pretty(&json).map_err(|e| usage(e.to_string()))? + "\n";
    emit(&c.out, &text)?;
    let tol = c.tol.unwrap_or(1e-8);
    eprintln!("orthonormality error {err:.3e}, recurrence residual {residual:.3e}");
    verdict(err <= tol && residual <= tol)
}

/// Worst deviations of the three Fock-space identities up to degree k_max.
fn fock_identities<S: Scalar>(g: &FockGeometry<S>, k_max: usize, w: &[S], dist: impl Fn(S) -> f64) -> Result<[f64; 3], Failure> {
    let (mut pairing, mut commutator, mut kernel): (f64, f64, f64) = (0.0, 0.0, 0.0);
    for k in 0..=k_max {
        for l in 0..=k_max {
            let (lhs, rhs) = g.pairing(k, l)?;
            let want = if k >= 1 && l == k - 1 { S::one() / g.coeff(k)? } else { S::zero() };
            pairing = pairing.max(dist(lhs.clone() - rhs)).max(dist(lhs - want));
        }
        commutator = commutator.max(dist(g.commutator_eigenvalue(k)? - g.commutator_direct(k)?));
    }
    let k_series = g.kernel_series(w, k_max as u32)?;
    for (j, wj) in w.iter().enumerate() {
        let lhs = g.gl_partial(&k_series, j)?.truncate(k_max as u32 - 1);
        let rhs = k_series.scale(&wj.conj()).truncate(k_max as u32 - 1);
        let diff: GradedSeries<S> = lhs.sum(&rhs.scale(&(S::zero() - S::one())));
        for (_, v) in diff.iter() {
            kernel = kernel.max(dist(v.clone()));
        }
    }
    Ok([pairing, commutator, kernel])
}

fn fock(c: &Common) -> Outcome {
    let desc = descriptor(&c.phi)?;
    let k_max = c.max_degree.unwrap_or(12) as usize;
    let w = [0.5, -2.0 / 3.0, 3.0 / 7.0];
    let (mode, errs) = match exact_taylor(&desc, k_max + 2) {
        Some(t) => {
            let g = FockGeometry::new(t)?;
            let wr: Vec<BigRational> = [(1, 2), (-2, 3), (3, 7)]
                .iter()
                .map(|(a, b)| BigRational::new((*a).into(), (*b).into()))
                .collect();
            ("rational", fock_identities(&g, k_max, &wr, |d| rational_to_f64(&d).abs())?)
        }
        None => {
            let phi = make_ml(&desc, k_max + 2)?;
            let g = FockGeometry::from_ml(&phi);
            let wc: Vec<Complex64> = w.iter().map(|x| Complex64::new(*x, 0.0)).collect();
            ("floating", fock_identities(&g, k_max, &wc, |d| d.norm())?)
        }
    };
    let tol = c.tol.unwrap_or(if mode == "rational" { 0.0 } else { 1e-10 });
    let mut text = format!("phi {}, {mode} arithmetic, degrees up to {k_max}\n", desc);
    let mut ok = true;
    for (name, e) in ["adjoint-pairing", "commutator", "kernel-eigen-relation"].iter().zip(errs) {
        let pass = e <= tol;
        ok &= pass;
        let _ = writeln!(text, "{} {name} max deviation {e:.3e}", if pass { "PASS" } else { "FAIL" });
    }
    emit(&c.out, &text)?;
    verdict(ok)
}

fn vage(c: &Common, p: i32, q: i32, pairs: usize) -> Outcome {
    let w: WeightSystem = c.weights.parse()?;
    let k = vage_constant(p, q, &w, 200)?;
    let max_degree = c.max_degree.unwrap_or(8);
    let mut rng = ChaCha8Rng::seed_from_u64(c.seed);
    let mut text = String::from("pair,lhs,rhs,ratio,passed\n");
    let mut failures = 0usize;
    for i in 0..pairs {
        let f = random_element(&mut rng, 50, max_degree, 10);
        let g = random_element(&mut rng, 50, max_degree, 10);
        let r = verify_vage(&f, &g, p, q, &w, &k)?;
        failures += usize::from(!r.passed);
        let _ = writeln!(text, "{i},{:?},{:?},{:?},{}", r.lhs, r.rhs, r.ratio, if r.passed { "PASS" } else { "FAIL" });
    }
    emit(&c.out, &text)?;
    let ordered = k.tight <= k.product;
    eprintln!(
        "weights {w}, p={p}, q={q}: tight {:?}, product {:?} (a-factor {:?}, b-sum {:?}), truncation bound {:.3e}",
        k.tight, k.product, k.a_factor, k.b_sum, k.tail_bound
    );
    eprintln!("{failures} of {pairs} pairs failed");
    verdict(failures == 0 && ordered)
}

fn process(c: &Common, grid: Option<String>, jmax: usize, rate_at: &str) -> Outcome {
    let grid = match grid {
        Some(s) => parse_list(&s)?,
        None => (0..5).map(|i| 0.75 * i as f64).collect(),
    };
    let rows = covariance_table(&grid, jmax)?;
    let mut text = String::from("t,s,truncated,min_t_s,error\n");
    for r in &rows {
        let _ = writeln!(text, "{:?},{:?},{:?},{:?},{:?}", r.t, r.s, r.truncated, r.exact, r.error);
    }
    emit(&c.out, &text)?;
    let tol = c.tol.unwrap_or(1e-2);
    let worst = rows.iter().map(|r| r.error).fold(0.0, f64::max);
    let mut ok = worst <= tol;
    eprintln!("covariance at J={jmax}: worst error {worst:.4e} ({})", if ok { "PASS" } else { "FAIL" });
    let phi: MLFunction = make_ml(&descriptor(&c.phi)?, 32)?;
    let w: WeightSystem = c.weights.parse()?;
    let env = verify_hermite_bounds(100, 0.01)?.envelope;
    for t in parse_list(rate_at)? {
        let r = derivative_rate(t, 100, &phi, &w, 1, &env)?;
        ok &= r.passed;
        eprintln!(
            "derivative rate at t={t}: slope {:.4}, M {:.4e}, worst error/(M h) {:.3e} ({})",
            r.slope,
            r.m_bound,
            r.worst_ratio,
            if r.passed { "PASS" } else { "FAIL" }
        );
    }
    verdict(ok)
}

fn integrate(c: &Common, jmax: usize, levels: u32) -> Outcome {
    let phi = make_ml(&descriptor(&c.phi)?, 32)?;
    let w: WeightSystem = c.weights.parse()?;
    let one = |_t: f64| GradedSeries::one();
    let tol = c.tol.unwrap_or(1e-3);
    let r = wick_riemann_sequence(&one, 1..=levels, jmax, &phi, &w, 1, tol)?;
    let mut text = String::from("mesh,hp_difference\n");
    for (m, d) in r.meshes.iter().skip(1).zip(&r.differences) {
        let _ = writeln!(text, "{m},{d:?}");
    }
    emit(&c.out, &text)?;
    eprintln!("differences decreasing: {}", r.decreasing);
    verdict(r.decreasing)
}

fn measure(spec: &str) -> Result<SpectralMeasure, Failure> {
    if spec == "lebesgue" {
        return Ok(SpectralMeasure::lebesgue());
    }
    if let Some(h) = spec.strip_prefix("fbm:") {
        return Ok(SpectralMeasure::fbm(h.parse().map_err(|_| usage(format!("bad Hurst index `{h}`")))?)?);
    }
    if let Some(atoms) = spec.strip_prefix("atoms:") {
        let atoms = atoms
            .split(';')
            .map(|a| {
                let (u, m) = a.split_once('@').ok_or_else(|| usage(format!("atom must be <u>@<mass>: `{a}`")))?;
                let num = |v: &str| v.trim().parse::<f64>().map_err(|_| usage(format!("not a number: `{v}`")));
                Ok((num(u)?, num(m)?))
            })
            .collect::<Result<Vec<_>, Failure>>()?;
        return Ok(SpectralMeasure::new(MeasureKind::Atomic(atoms))?);
    }
    Err(usage(format!("unknown measure `{spec}`")))
}

fn spectral(c: &Common, spec: &str, grid: &str) -> Outcome {
    let mu = measure(spec)?;
    if !mu.admissible()? {
        return Err(usage(format!("measure `{spec}` fails the integrability condition")));
    }
    let grid = parse_list(grid)?;
    let mut text = String::from("t,s,re,im,r_residual\n");
    let mut resid: f64 = 0.0;
    for &t in &grid {
        for &s in &grid {
            let k = spectral_covariance(t, s, &mu)?;
            let r = r_decomposition_residual(t, s, &mu)?;
            resid = resid.max(r);
            let _ = writeln!(text, "{t:?},{s:?},{:?},{:?},{r:?}", k.re, k.im);
        }
    }
    emit(&c.out, &text)?;
    let mut ok = resid < 1e-8;
    eprintln!("r-decomposition residual max {resid:.3e}");
    if let MeasureKind::Fbm { hurst } = mu.kind {
        let r = fbm_covariance_check(hurst, &grid)?;
        let tol = c.tol.unwrap_or(1e-3);
        let pass = r.spread <= tol;
        ok &= pass;
        eprintln!("fbm H={hurst}: mean ratio {:?}, relative spread {:.3e} ({})", r.mean_ratio, r.spread, if pass { "PASS" } else { "FAIL" });
    }
    verdict(ok)
}

fn verify(suite: &str, seed: u64, out: Option<PathBuf>) -> Outcome {
    let ids: Vec<u32> = if suite == "all" {
        CHECKS.iter().map(|c| c.0).collect()
    } else {
        suite
            .split(',')
            .map(|s| {
                let s = s.trim();
                CHECKS
                    .iter()
                    .find(|c| c.1 == s || s.parse::<u32>() == Ok(c.0))
                    .map(|c| c.0)
                    .ok_or_else(|| usage(format!("unknown check `{s}`")))
            })
            .collect::<Result<_, _>>()?
    };
    let outcomes = run_checks(&ids, seed);
    let report = render_report(&outcomes, seed);
    if out.is_some() {
        print!("{report}");
    }
    emit(&out, &report)?;
    verdict(outcomes.iter().all(|o| o.passed))
}
