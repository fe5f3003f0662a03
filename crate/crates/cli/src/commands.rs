use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::path::Path;

use phaseint::algebra::{evaluate_word, reduce_to_canonical, Bindings, CanonicalSide, ConnectionMatrix, OperatorWord};
use phaseint::cplane::{Expr, PathSpec};
use phaseint::geometry::{EffectiveStokesDiagram, StokesDiagram, TraceOptions};
use phaseint::oracle::{exact_fmatrix_with, monodromy, OracleOptions};
use phaseint::phase::{epsilon_of, BranchSheet};
use phaseint::symmetry::{
    check_is_symmetry, derive_constant_relation, verify_fmatrix_relation, DomainPair, DomainRef, SymmetryTransform,
};
use phaseint::weber::{
    closed_form_constants, loop_product, oracle_constant, oracle_constants, p_function, s_three_halves,
    s_three_halves_on_sheet, scattering, verify_webtrad, weber_integrand, Domain, WeberInstance,
};
use phaseint::{c64, C64};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::problem::{read, ProblemFile};
use crate::{Cli, CliError, Command, Kind, Side, DEFAULT_TOL, EXIT_FAILED, EXIT_OK};

/// Default acceptance threshold for symmetry relations.
pub const RELATION_THRESHOLD: f64 = 1e-5;

pub struct Outcome {
    pub stdout: String,
    pub code: u8,
}

impl Outcome {
    fn ok(stdout: String) -> Self {
        Self { stdout, code: EXIT_OK }
    }

    fn checked(stdout: String, pass: bool) -> Self {
        Self { stdout, code: if pass { EXIT_OK } else { EXIT_FAILED } }
    }
}

pub fn run(cli: &Cli) -> Result<Outcome, CliError> {
    match &cli.command {
        Command::Diagram { problem, kind, radius, svg, json } => {
            diagram(&ProblemFile::load(problem)?, *kind, *radius, svg.as_deref(), *json)
        }
        Command::Fmatrix { problem, path, basepoint, json } => {
            let p = ProblemFile::load(problem)?;
            let tol = tolerance(cli, &p);
            fmatrix(&p, path, basepoint.as_deref(), tol, *json)
        }
        Command::Weber { delta, json, verify } => {
            let d = parse_complex(delta)?;
            let tol = cli.tol.unwrap_or(DEFAULT_TOL);
            if *verify {
                weber_verify(d, tol, *json)
            } else {
                weber(d, *json)
            }
        }
        Command::CheckSymmetry { problem, transform, gamma, homotopy, z0, domains, json } => {
            let p = ProblemFile::load(problem)?;
            let tol = tolerance(cli, &p);
            check_symmetry(&p, transform, gamma, homotopy.as_deref(), z0.as_deref(), domains, tol, *json)
        }
        Command::Reduce { word, side, json } => reduce(word, *side, *json),
        Command::Validate { problem, json } => {
            let p = ProblemFile::load(problem)?;
            let diags = validate(&p);
            let pass = !diags.iter().any(|d| d.severity == Severity::Error);
            let out = if *json {
                serde_json::to_string_pretty(&diags).expect("diagnostics serialize")
            } else {
                diags
                    .iter()
                    .map(|d| format!("{:?} {}: {}", d.severity, d.subject, d.message))
                    .collect::<Vec<_>>()
                    .join("\n")
            };
            Ok(Outcome::checked(out, pass))
        }
    }
}

fn tolerance(cli: &Cli, p: &ProblemFile) -> f64 {
    cli.tol.or(p.tolerances.ode).unwrap_or(DEFAULT_TOL)
}

fn oracle_options(p: &ProblemFile, tol: f64) -> OracleOptions {
    let mut o = OracleOptions::with_tol(tol);
    if let Some(m) = p.tolerances.match_threshold {
        o.match_threshold = m;
    }
    o
}

/// `re`, `re,im`, or an expression such as `1+0.5*i`.
pub fn parse_complex(src: &str) -> Result<C64, CliError> {
    if let Some((re, im)) = src.split_once(',') {
        let num = |s: &str| s.trim().parse::<f64>().map_err(|e| CliError::Input(format!("`{src}`: {e}")));
        return Ok(c64(num(re)?, num(im)?));
    }
    if let Ok(x) = src.trim().parse::<f64>() {
        return Ok(c64(x, 0.0));
    }
    Ok(Expr::parse(src)?.eval(&BTreeMap::new())?)
}

fn pair(z: C64) -> [f64; 2] {
    [z.re, z.im]
}

fn to_json(v: &impl Serialize) -> String {
    serde_json::to_string_pretty(v).expect("output serializes")
}

fn diagram(
    p: &ProblemFile,
    kind: Kind,
    radius: Option<f64>,
    svg: Option<&Path>,
    json: bool,
) -> Result<Outcome, CliError> {
    let l = p.integrand()?;
    let opts = TraceOptions { radius: radius.or(p.output.radius), ..TraceOptions::default() };
    let mut d = StokesDiagram::trace(&l, &opts)?;
    match kind {
        Kind::Stokes => d.antistokes.clear(),
        Kind::Antistokes => d.stokes.clear(),
        Kind::All | Kind::Effective => {}
    }
    let (text, picture) = if kind == Kind::Effective {
        let e = EffectiveStokesDiagram::with_default_lines(&l, d)?;
        e.check_non_crossing()?;
        (e.to_json()?, e.to_svg())
    } else {
        (d.to_json()?, d.to_svg())
    };
    if let Some(path) = svg.map(Path::to_path_buf).or(p.output.svg.as_ref().map(Into::into)) {
        std::fs::write(&path, picture).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    }
    if json {
        return Ok(Outcome::ok(text));
    }
    let s = &d_summary(&text);
    Ok(Outcome::ok(s.clone()))
}

fn d_summary(json: &str) -> String {
    let v: Value = serde_json::from_str(json).unwrap_or(Value::Null);
    let base = v.get("base").unwrap_or(&v);
    let count = |k: &str| base.get(k).and_then(Value::as_array).map_or(0, Vec::len);
    let sing = &base["singularities"];
    let n = |k: &str| sing.get(k).and_then(Value::as_array).map_or(0, Vec::len);
    format!(
        "zeros {}  poles {}  stokes lines {}  anti-Stokes lines {}  wedges {}",
        n("zeros"),
        n("poles"),
        count("stokes"),
        count("antistokes"),
        count("wedges")
    )
}

fn fmatrix(p: &ProblemFile, path: &str, basepoint: Option<&str>, tol: f64, json: bool) -> Result<Outcome, CliError> {
    let l = p.integrand()?;
    let path = p.resolve_path(path)?;
    let z0 = match basepoint {
        Some(b) => parse_complex(b)?,
        None => p.basepoint_value()?.unwrap_or(path.start()),
    };
    let sheet = BranchSheet::from_infinity(l, path.start())?;
    let f = exact_fmatrix_with(&sheet, &path, z0, &oracle_options(p, tol))?;
    let pass = f.det_residual < 10.0 * tol;
    let out = if json {
        to_json(&json!({
            "matrix": f.matrix,
            "det_residual": f.det_residual,
            "eps_start": f.eps_start,
            "eps_end": f.eps_end,
            "omega_start": pair(f.omega_start),
            "omega_end": pair(f.omega_end),
            "precision_bits": f.precision_bits,
            "digits_lost": f.digits_lost,
            "ode_tolerance": f.ode_tolerance,
            "path": f.path,
            "basepoint": pair(f.basepoint),
        }))
    } else {
        let rows: Vec<String> = f.matrix.rows().iter().map(|r| format!("{r:?}")).collect();
        format!("{}\n|det F - 1| = {:e}", rows.join("\n"), f.det_residual)
    };
    Ok(Outcome::checked(out, pass))
}

fn weber(delta: C64, json: bool) -> Result<Outcome, CliError> {
    let r = scattering(delta)?;
    let flux = r.flux_residual();
    // flux conservation only holds for real δ
    let pass = delta.im != 0.0 || flux < 1e-10;
    let out = if json {
        to_json(&json!({
            "s_3_2": pair(r.s_value),
            "R": pair(r.r_coeff),
            "T": pair(r.t_coeff),
            "flux_residual": flux,
        }))
    } else {
        format!("s_3/2 = {}\nR     = {}\nT     = {}\n|R|^2 + |T|^2 - 1 = {:e}", r.s_value, r.r_coeff, r.t_coeff, flux)
    };
    Ok(Outcome::checked(out, pass))
}

#[derive(Debug, Clone, Serialize)]
pub struct CheckRow {
    pub name: String,
    pub residual: f64,
    pub threshold: f64,
    pub pass: bool,
}

type Check = (&'static str, f64, Box<dyn Fn() -> Result<f64, CliError> + Send + Sync>);

fn rel(a: C64, b: C64) -> f64 {
    (a - b).norm() / b.norm().max(1.0)
}

/// The Weber checks at one `δ`; oracle checks run in parallel.
pub fn weber_suite(delta: C64, tol: f64) -> Vec<CheckRow> {
    let opts = OracleOptions::with_tol(tol);
    let real = delta.im == 0.0;
    let mut checks: Vec<Check> = vec![
        (
            "closed form at origin",
            1e-12,
            Box::new(|| Ok((s_three_halves(C64::new(0.0, 0.0))? - c64(0.0, 2f64.sqrt())).norm())),
        ),
        (
            "reflection formula of p",
            1e-10,
            Box::new(|| {
                let pts = [c64(0.25, 0.0), c64(-0.7, 0.0), c64(0.0, 0.5), c64(1.0, 0.3), c64(-0.4, -0.9)];
                pts.iter().try_fold(0.0f64, |m, &x| {
                    let r = p_function(x)? * p_function(-x)? - 2.0 * (PI * x / 2.0).cos();
                    Ok(m.max(r.norm()))
                })
            }),
        ),
        (
            "half-turn functional equation",
            1e-10,
            Box::new(move || {
                let want = s_three_halves(delta)? * (-PI * delta * delta).exp();
                Ok(rel(s_three_halves_on_sheet(delta, Some(1))?, want))
            }),
        ),
        (
            "closed-form loop relations",
            1e-10,
            Box::new(move || Ok(verify_webtrad(delta, &closed_form_constants(delta)?).into_iter().fold(0.0, f64::max))),
        ),
    ];
    if real {
        checks.push(("flux conservation", 1e-10, Box::new(move || Ok(scattering(delta)?.flux_residual()))));
        checks.push((
            "transmission ratio",
            1e-9,
            Box::new(move || {
                let r = scattering(delta)?;
                Ok((r.t_coeff.norm_sqr() / r.r_coeff.norm_sqr() - (-PI * delta.re * delta.re).exp()).abs())
            }),
        ));
        checks.push((
            "purely imaginary s_3/2",
            1e-10,
            Box::new(move || {
                let s = s_three_halves(delta)?;
                Ok(s.re.abs() / s.norm())
            }),
        ));
    }
    let o = opts.clone();
    checks.push((
        "oracle s_3/2 vs closed form",
        1e-3,
        Box::new(move || {
            let w = WeberInstance::new(delta)?;
            Ok((oracle_constant(&w, Domain::ThreeHalves, &o)?.0.s - s_three_halves(delta)?).norm())
        }),
    ));
    let o = opts.clone();
    checks.push((
        "oracle constants close the loop",
        1e-3,
        Box::new(move || {
            let s = oracle_constants(&WeberInstance::new(delta)?, &o)?;
            Ok(loop_product(delta, &s)?.max_abs_diff(&ConnectionMatrix::identity(2)))
        }),
    ));
    checks.push((
        "monodromy around |z| = 8",
        1e-6,
        Box::new(move || {
            let m = monodromy(&weber_integrand(delta)?, &PathSpec::circle(c64(0.0, 0.0), 8.0, 64)?, tol)?;
            Ok(m.max_abs_diff(&ConnectionMatrix::identity(2).scale(c64(-1.0, 0.0))))
        }),
    ));
    let o = opts;
    checks.push((
        "overlap s_1/2(i delta) = s_-1/2(delta)",
        1e-3,
        Box::new(move || {
            let a = oracle_constant(&WeberInstance::new(c64(0.0, 1.0) * delta)?, Domain::Half, &o)?.0.s;
            let b = oracle_constant(&WeberInstance::new(delta)?, Domain::MinusHalf, &o)?.0.s;
            Ok((a - b).norm())
        }),
    ));
    checks
        .par_iter()
        .map(|(name, threshold, f)| {
            let residual = f().unwrap_or(f64::INFINITY);
            CheckRow { name: name.to_string(), residual, threshold: *threshold, pass: residual < *threshold }
        })
        .collect()
}

fn weber_verify(delta: C64, tol: f64, json: bool) -> Result<Outcome, CliError> {
    let rows = weber_suite(delta, tol);
    let pass = rows.iter().all(|r| r.pass);
    let out = if json {
        to_json(&rows)
    } else {
        let width = rows.iter().map(|r| r.name.len()).max().unwrap_or(0);
        rows.iter()
            .map(|r| {
                let verdict = if r.pass { "PASS" } else { "FAIL" };
                format!("{verdict}  {:width$}  {:>10.3e}  < {:.0e}", r.name, r.residual, r.threshold)
            })
            .collect::<Vec<_>>()
            .join("\n")
    };
    Ok(Outcome::checked(out, pass))
}

#[allow(clippy::too_many_arguments)]
fn check_symmetry(
    p: &ProblemFile,
    transform: &str,
    gamma: &str,
    homotopy: Option<&str>,
    z0: Option<&str>,
    domains: &str,
    tol: f64,
    json: bool,
) -> Result<Outcome, CliError> {
    let l = p.integrand()?;
    let t = p.resolve_transform(transform)?;
    let gamma = p.resolve_path(gamma)?;
    let hom = homotopy.map(|h| p.resolve_path(h)).transpose()?;
    let z0_src = z0
        .map(str::to_string)
        .or_else(|| p.basepoint.clone())
        .ok_or_else(|| CliError::Input("no basepoint: pass --z0 or set `basepoint` in the problem".into()))?;
    let z0 = Expr::parse(&z0_src)?;
    let z0_tilde = z0.eval(l.params())?;
    let report = verify_fmatrix_relation(&l, &t, &gamma, &z0, z0_tilde, hom.as_ref(), &oracle_options(p, tol))?;
    let threshold = p.tolerances.relation.unwrap_or(RELATION_THRESHOLD);
    let pass = report.residual < threshold;
    let (lhs_name, rhs_name) =
        domains.split_once(',').ok_or_else(|| CliError::Input(format!("--domains `{domains}` must read LHS,RHS")))?;
    let relation = match report.forms() {
        (Some(ft), Some(fo)) => {
            let pair = DomainPair {
                transformed: DomainRef { name: lhs_name.trim().into(), form: ft },
                original: DomainRef { name: rhs_name.trim().into(), form: fo },
            };
            derive_constant_relation(&t, &pair, report.p_sigma, report.omega).ok()
        }
        _ => None,
    };
    let out = if json {
        to_json(&json!({
            "residual": report.residual,
            "threshold": threshold,
            "relation": relation.as_ref().map(ToString::to_string),
            "phase_factor": relation.as_ref().map(|r| pair(r.phase_factor)),
            "omega": pair(report.omega),
            "p_sigma": report.p_sigma,
            "lhs": report.lhs,
            "rhs": report.rhs,
        }))
    } else {
        let rel = relation.as_ref().map_or("(no limiting form)".to_string(), ToString::to_string);
        format!("residual {:e} (threshold {threshold:e})\n{rel}", report.residual)
    };
    Ok(Outcome::checked(out, pass))
}

#[derive(Deserialize)]
#[serde(untagged)]
enum WordFile {
    Bare(OperatorWord),
    Bound {
        word: OperatorWord,
        #[serde(default, with = "bindings")]
        bindings: Bindings,
    },
}

mod bindings {
    use super::*;
    use serde::Deserializer;

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Bindings, D::Error> {
        let pairs = BTreeMap::<String, [f64; 2]>::deserialize(d)?;
        Ok(pairs.into_iter().map(|(k, [re, im])| (k, C64::new(re, im))).collect())
    }
}

fn reduce(path: &Path, side: Side, json: bool) -> Result<Outcome, CliError> {
    let src = read(path)?;
    let (word, b) = match serde_json::from_str::<WordFile>(&src)
        .map_err(|e| CliError::Input(format!("{}: not an operator word: {e}", path.display())))?
    {
        WordFile::Bare(w) => (w, Bindings::new()),
        WordFile::Bound { word, bindings } => (word, bindings),
    };
    let side = match side {
        Side::StokesFirst => CanonicalSide::StokesFirst,
        Side::PhaseFirst => CanonicalSide::PhaseFirst,
    };
    let canon = reduce_to_canonical(&word, &b, side)?;
    let before = evaluate_word(&word, &b)?;
    let after = evaluate_word(&canon, &b)?;
    let scale = before.rows().iter().flatten().map(|z| z.norm()).fold(1.0, f64::max);
    let residual = after.max_abs_diff(&before) / scale;
    let out = if json {
        to_json(&json!({ "word": canon, "residual": residual }))
    } else {
        format!("{canon}\nresidual {residual:e}")
    };
    Ok(Outcome::checked(out, residual < 1e-12))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    Error,
    Warning,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Diagnostic {
    pub severity: Severity,
    pub subject: String,
    pub message: String,
}

fn diag(severity: Severity, subject: impl Into<String>, message: impl ToString) -> Diagnostic {
    Diagnostic { severity, subject: subject.into(), message: message.to_string() }
}

/// Problems the library would reject later, collected without stopping.
pub fn validate(p: &ProblemFile) -> Vec<Diagnostic> {
    use Severity::*;
    let mut out = Vec::new();
    let l = match p.integrand() {
        Ok(l) => l,
        Err(e) => return vec![diag(Error, "integrand", e)],
    };
    let singular = l.singular_points();
    let floor = 1e-6 * l.scale().max(1.0);
    let basepoint = match p.basepoint_value() {
        Ok(b) => b,
        Err(e) => {
            out.push(diag(Error, "basepoint", e));
            None
        }
    };
    for (name, path) in &p.paths {
        let subject = format!("path {name}");
        let clear = path.clearance().max(floor);
        for &s in &singular {
            let d = path.min_distance(s);
            if d < clear {
                out.push(diag(
                    Error,
                    &subject,
                    format!("passes within {d:e} of singular point {s} (clearance {clear:e})"),
                ));
            }
        }
        for end in [path.start(), path.end()] {
            if let Ok(e) = epsilon_of(&l, end) {
                if !e.norm().is_finite() {
                    out.push(diag(Error, &subject, format!("validity parameter is not finite at {end}")));
                }
            }
        }
    }
    for (name, t) in &p.transforms {
        let subject = format!("transform {name}");
        if let Err(e) = t.validate() {
            out.push(diag(Error, &subject, e));
            continue;
        }
        match check_is_symmetry(&l, t, 16) {
            Ok(true) => {}
            Ok(false) => out.push(diag(Error, &subject, "not a symmetry of the integrand")),
            Err(e) => out.push(diag(Error, &subject, e)),
        }
        if moves_basepoint(&l, t, p.basepoint.as_deref(), basepoint) && !has_homotopy(p, name) {
            out.push(diag(
                Warning,
                &subject,
                format!("basepoint moves; add a path `{name}_homotopy` or pass --homotopy"),
            ));
        }
    }
    out
}

fn moves_basepoint(
    l: &phaseint::cplane::RationalIntegrand,
    t: &SymmetryTransform,
    src: Option<&str>,
    z0: Option<C64>,
) -> bool {
    let (Some(src), Some(z0)) = (src, z0) else { return false };
    let moved = || -> Result<C64, CliError> {
        let params = t.map_params(l.params())?;
        Ok(t.inverse_point(Expr::parse(src)?.eval(&params)?)?)
    };
    match moved() {
        Ok(target) => (target - z0).norm() > 1e-9 * l.scale().max(1.0),
        Err(_) => false,
    }
}

fn has_homotopy(p: &ProblemFile, name: &str) -> bool {
    p.paths.contains_key(&format!("{name}_homotopy"))
}
