//! Exact F-matrices by direct integration of `y'' + R y = 0` along complex
//! paths, Stokes-constant extraction and monodromy.
//!
//! The solution pair seeded with the base solutions `y±` at the start is
//! carried along the path and decomposed in the base solutions at the end.
//! The default integrator is a power-series stepper whose working precision is
//! chosen from the exponential dynamic range `e^{2 |Δ Im ω|}` seen along the
//! path, so that loops through regions of strong dominance (such as the
//! `|z| = 8` Weber circle) keep their digits.

mod dopri;
mod field;
mod taylor;

use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::algebra::ConnectionMatrix;
use crate::cplane::{PathSpec, RationalIntegrand};
use crate::phase::{epsilon_of, integrate_track_range, BasisValues, BranchSheet, Track, DEFAULT_MATCH_THRESHOLD};
use crate::{Error, Result, C64};
use field::{Field, MpComplex};
use taylor::{SeriesStepper, State};

/// Series step in units of the local wavelength `1/|q|`.
const STEP_WAVES: f64 = 2.5;
/// Radial growth factor when searching for a valid matching point.
const ADVANCE_FACTOR: f64 = 1.1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Precision {
    /// Double precision when the estimated loss of digits allows it.
    Auto,
    Double,
    Bits(u32),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Taylor,
    DormandPrince,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleOptions {
    /// Local ODE tolerance.
    pub tol: f64,
    /// Endpoints are accepted only where `|ε|` is below this.
    pub match_threshold: f64,
    pub precision: Precision,
    pub method: Method,
    /// Push endpoints radially outward until `|ε|` is small enough.
    pub auto_advance: bool,
    /// Give up advancing beyond this multiple of the singularity scale.
    pub max_radius: f64,
    /// Path from the basepoint to the path start used for `ω` and for
    /// reaching the sheet anchor. Defaults to the straight segment.
    pub lead: Option<PathSpec>,
}

impl Default for OracleOptions {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            match_threshold: DEFAULT_MATCH_THRESHOLD,
            precision: Precision::Auto,
            method: Method::Taylor,
            auto_advance: true,
            max_radius: 1e4,
            lead: None,
        }
    }
}

impl OracleOptions {
    pub fn with_tol(tol: f64) -> Self {
        Self { tol, ..Self::default() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExactFResult {
    pub matrix: ConnectionMatrix,
    /// The integrated path, including any automatic extensions.
    pub path: PathSpec,
    #[serde(with = "crate::serde_c64")]
    pub basepoint: C64,
    pub eps_start: f64,
    pub eps_end: f64,
    pub ode_tolerance: f64,
    #[serde(with = "crate::serde_c64")]
    pub omega_start: C64,
    #[serde(with = "crate::serde_c64")]
    pub omega_end: C64,
    /// Working precision of the integration in bits (53 for double).
    pub precision_bits: u32,
    /// Estimated decimal digits lost to exponential dominance.
    pub digits_lost: f64,
    pub det_residual: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum StokesForm {
    /// `[[1, 0], [s, 1]]`
    #[serde(rename = "S")]
    S,
    /// `[[1, s], [0, 1]]`
    #[serde(rename = "ST", alias = "S^T")]
    ST,
}

impl std::fmt::Display for StokesForm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            StokesForm::S => "S",
            StokesForm::ST => "ST",
        })
    }
}

impl std::str::FromStr for StokesForm {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "S" => Ok(StokesForm::S),
            "ST" | "S^T" | "Sᵀ" => Ok(StokesForm::ST),
            _ => Err(Error::InvalidInput(format!("unknown form {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StokesExtraction {
    #[serde(with = "crate::serde_c64")]
    pub s: C64,
    pub residual: f64,
}

/// Residual above which an F-matrix is not accepted as a single `S`/`Sᵀ`.
pub const FORM_RESIDUAL_LIMIT: f64 = 1e-2;

/// Read the Stokes constant off an F-matrix across one Stokes domain.
pub fn extract_stokes_constant(f: &ConnectionMatrix, form: StokesForm) -> Result<StokesExtraction> {
    if f.dim() != 2 {
        return Err(Error::DimensionMismatch { expected: 2, got: f.dim() });
    }
    let one = C64::new(1.0, 0.0);
    let (a, b, c, d) = (f.get(0, 0), f.get(0, 1), f.get(1, 0), f.get(1, 1));
    let (s, off) = match form {
        StokesForm::S => (c / a, b),
        StokesForm::ST => (b / a, c),
    };
    let residual = (a - one).norm().max((d - one).norm()).max(off.norm());
    if !s.re.is_finite() || !s.im.is_finite() || residual > FORM_RESIDUAL_LIMIT {
        return Err(Error::WrongForm { form: if form == StokesForm::S { "S" } else { "ST" }, residual });
    }
    Ok(StokesExtraction { s, residual })
}

/// Exact F-matrix with default options and ODE tolerance `tol`.
pub fn exact_fmatrix(
    integrand: &RationalIntegrand,
    sheet: &BranchSheet,
    path: &PathSpec,
    basepoint: C64,
    tol: f64,
) -> Result<ExactFResult> {
    if integrand != sheet.integrand() {
        return Err(Error::InvalidInput("sheet belongs to a different integrand".into()));
    }
    exact_fmatrix_with(sheet, path, basepoint, &OracleOptions::with_tol(tol))
}

fn open_form(path: &PathSpec) -> Result<PathSpec> {
    if path.is_closed() {
        PathSpec::open(path.vertices()).map(|p| p.with_clearance(path.clearance()))
    } else {
        Ok(path.clone())
    }
}

fn eps_norm(integrand: &RationalIntegrand, z: C64) -> Result<f64> {
    Ok(epsilon_of(integrand, z)?.norm())
}

/// Radially advanced replacement for an endpoint whose `|ε|` is too large.
fn advance(integrand: &RationalIntegrand, z: C64, opts: &OracleOptions) -> Result<Option<C64>> {
    let eps = eps_norm(integrand, z)?;
    if eps < opts.match_threshold {
        return Ok(None);
    }
    let violation = Error::ValidityViolation { z, eps, threshold: opts.match_threshold };
    if !opts.auto_advance {
        return Err(violation);
    }
    let c = integrand.centroid();
    let dir = z - c;
    if dir.norm() == 0.0 {
        return Err(violation);
    }
    let limit = opts.max_radius * integrand.scale();
    let mut w = z;
    loop {
        w = c + (w - c) * ADVANCE_FACTOR;
        if (w - c).norm() > limit {
            return Err(violation);
        }
        if eps_norm(integrand, w)? < opts.match_threshold {
            return Ok(Some(w));
        }
    }
}

fn check_tol(tol: f64) -> Result<()> {
    if !(tol > 0.0 && tol < 1.0) {
        return Err(Error::InvalidInput(format!("ODE tolerance {tol} must lie in (0, 1)")));
    }
    Ok(())
}

/// Exact F-matrix along `path` with `ω` measured from `basepoint`.
pub fn exact_fmatrix_with(
    sheet: &BranchSheet,
    path: &PathSpec,
    basepoint: C64,
    opts: &OracleOptions,
) -> Result<ExactFResult> {
    check_tol(opts.tol)?;
    let integrand = sheet.integrand();
    let path = open_form(path)?;
    path.check_clearance(&integrand.singular_points())?;
    let (z0, z1) = (path.start(), path.end());

    let lead = match &opts.lead {
        Some(l) => {
            let scale = basepoint.norm().max(z0.norm()).max(1.0);
            if (l.start() - basepoint).norm() > 1e-12 * scale || (l.end() - z0).norm() > 1e-12 * scale {
                return Err(Error::InvalidInput("lead must run from the basepoint to the path start".into()));
            }
            Some(open_form(l)?)
        }
        None if basepoint == z0 => None,
        None => Some(PathSpec::segment(basepoint, z0)?),
    };

    let mut ode_points = path.waypoints().to_vec();
    let mut prefix_points: Vec<C64> = match &lead {
        Some(l) => l.waypoints().to_vec(),
        None => vec![z0],
    };
    if let Some(w) = advance(integrand, z0, opts)? {
        prefix_points.push(w);
        ode_points.insert(0, w);
    }
    if let Some(w) = advance(integrand, z1, opts)? {
        ode_points.push(w);
    }
    let ode_path = PathSpec::open(ode_points)?.with_clearance(path.clearance());
    let combined = if prefix_points.len() > 1 {
        PathSpec::open(prefix_points.clone())?.concat(&ode_path)?
    } else {
        ode_path.clone()
    };
    let offset = prefix_points.len() - 1;
    let n_ode = ode_path.segments().len();
    let track = sheet.track(&combined)?;
    let omega_start = integrate_track_range(&track, 0..offset, 0.01 * opts.tol)?;
    let omega_end = omega_start + integrate_track_range(&track, offset..offset + n_ode, 0.01 * opts.tol)?;

    let start = ode_path.start();
    let end = ode_path.end();
    let eps_start = eps_norm(integrand, start)?;
    let eps_end = eps_norm(integrand, end)?;
    let (matrix, bits, digits) = integrate(&track, offset..offset + n_ode, omega_start, omega_end, opts)?;
    let det_residual = (matrix.det() - 1.0).norm();
    Ok(ExactFResult {
        matrix,
        path: ode_path,
        basepoint,
        eps_start,
        eps_end,
        ode_tolerance: opts.tol,
        omega_start,
        omega_end,
        precision_bits: bits,
        digits_lost: digits,
        det_residual,
    })
}

/// Raw loop operator in the base solutions of the principal sheet at the
/// loop start, with `ω` measured from the start and reset at the end: the
/// `W[∮q]` factor is divided out, so for an entire `R` with `q ~ z^{n/2}`
/// this is the basis branch factor alone (`−I` for Weber).
pub fn monodromy(integrand: &RationalIntegrand, loop_path: &PathSpec, tol: f64) -> Result<ConnectionMatrix> {
    let sheet = BranchSheet::principal(integrand.clone(), loop_path.start())?;
    monodromy_with(&sheet, loop_path, &OracleOptions::with_tol(tol))
}

pub fn monodromy_with(sheet: &BranchSheet, loop_path: &PathSpec, opts: &OracleOptions) -> Result<ConnectionMatrix> {
    check_tol(opts.tol)?;
    if !loop_path.is_closed() {
        return Err(Error::InvalidInput("monodromy needs a closed loop".into()));
    }
    let integrand = sheet.integrand();
    loop_path.check_clearance(&integrand.singular_points())?;
    let open = open_form(loop_path)?;
    let track = sheet.track(&open)?;
    let n = open.segments().len();
    let zero = C64::new(0.0, 0.0);
    let (m, _, _) = integrate(&track, 0..n, zero, zero, opts)?;
    Ok(m)
}

fn kappa(integrand: &RationalIntegrand, z: C64) -> Result<f64> {
    let [r, r1, r2] = integrand.eval_d2(z).map_err(|_| Error::StiffnessFailure(z))?;
    Ok(r.norm().sqrt() + r1.norm().cbrt() + r2.norm().sqrt().sqrt())
}

/// Step nodes `(segment, t, z)` for the series integrator, including both
/// ends of every segment.
fn step_grid(integrand: &RationalIntegrand, segments: &[(C64, C64)]) -> Result<Vec<Vec<(f64, C64)>>> {
    let scale = integrand.scale();
    let mut grid = Vec::with_capacity(segments.len());
    for &(a, b) in segments {
        let len = (b - a).norm();
        let mut nodes = vec![(0.0, a)];
        let mut t = 0.0;
        while t < 1.0 {
            let z = a + (b - a) * t;
            let pd = integrand.distance_to_pole(z);
            let k = kappa(integrand, z)?;
            let remaining = (1.0 - t) * len;
            let h = remaining.min(0.5 * pd).min(STEP_WAVES / k.max(1e-300)).min(1e3 * scale);
            if h < 1e-12 * scale {
                return Err(Error::StiffnessFailure(z));
            }
            t = if h >= remaining { 1.0 } else { t + h / len };
            nodes.push((t, if t == 1.0 { b } else { a + (b - a) * t }));
        }
        grid.push(nodes);
    }
    Ok(grid)
}

/// Estimated decimal digits lost: spread of `2 Im ω` along the grid.
fn digits_lost(track: &Track, range: &Range<usize>, grid: &[Vec<(f64, C64)>], omega_start: C64) -> Result<f64> {
    // 3-point Gauss–Legendre per grid interval
    let x = (0.6f64).sqrt();
    let gauss = [(-x, 5.0 / 9.0), (0.0, 8.0 / 9.0), (x, 5.0 / 9.0)];
    let mut im = omega_start.im;
    let (mut lo, mut hi) = (im, im);
    let segments = track.path().segments();
    for (k, nodes) in grid.iter().enumerate() {
        let seg = range.start + k;
        let (a, b) = segments[seg];
        for w in nodes.windows(2) {
            let (t0, t1) = (w[0].0, w[1].0);
            let mut acc = C64::new(0.0, 0.0);
            for &(xi, wi) in &gauss {
                let t = 0.5 * (t0 + t1) + 0.5 * (t1 - t0) * xi;
                acc += track.q(seg, t, a + (b - a) * t)? * wi;
            }
            im += (acc * (b - a) * (0.5 * (t1 - t0))).im;
            lo = lo.min(im);
            hi = hi.max(im);
        }
    }
    Ok(2.0 * (hi - lo) / std::f64::consts::LN_10)
}

fn basis_matrix(track: &Track, seg: usize, t: f64, z: C64, omega: C64) -> Result<(BasisValues, [[C64; 2]; 2])> {
    let (q, sq) = track.q_sq(seg, t, z)?;
    let [_, r1, _] = track.integrand().eval_d2(z)?;
    let b = BasisValues::from_parts(q, sq, omega, r1);
    Ok((b, [[b.y_plus, b.y_minus], [b.y_plus_deriv, b.y_minus_deriv]]))
}

/// `B⁻¹` using the exact Wronskian `−2i`.
fn basis_inverse(b: &BasisValues) -> [[C64; 2]; 2] {
    let k = C64::new(0.0, 0.5); // 1 / (−2i)
    [[k * b.y_minus_deriv, -k * b.y_minus], [-k * b.y_plus_deriv, k * b.y_plus]]
}

fn integrate(
    track: &Track,
    range: Range<usize>,
    omega_start: C64,
    omega_end: C64,
    opts: &OracleOptions,
) -> Result<(ConnectionMatrix, u32, f64)> {
    let integrand = track.integrand();
    let segments = track.path().segments()[range.clone()].to_vec();
    let first = range.start;
    let last = range.end - 1;
    let (_, b1) = basis_matrix(track, first, 0.0, segments[0].0, omega_start)?;
    let (end_basis, _) = basis_matrix(track, last, 1.0, segments.last().unwrap().1, omega_end)?;
    let b2inv = basis_inverse(&end_basis);
    for v in b1.iter().chain(b2inv.iter()).flatten() {
        if !v.re.is_finite() || !v.im.is_finite() {
            return Err(Error::NonFinite(*v));
        }
    }

    let grid = step_grid(integrand, &segments)?;
    let digits = digits_lost(track, &range, &grid, omega_start)?;
    let needed = digits - opts.tol.log10();
    let bits = match (opts.method, opts.precision) {
        (Method::DormandPrince, _) | (_, Precision::Double) => 53,
        (_, Precision::Bits(b)) => b.max(53) as usize,
        (_, Precision::Auto) if needed <= 14.0 => 53,
        (_, Precision::Auto) => (((needed + 12.0) * 3.33 / 32.0).ceil() * 32.0) as usize,
    };

    let f = if opts.method == Method::DormandPrince {
        let end = dopri::propagate(integrand, &segments, b1, opts.tol)?;
        project(&b2inv, &end, 53)
    } else if bits <= 53 {
        run_series::<C64>(integrand, &grid, b1, &b2inv, 53)?
    } else {
        run_series::<MpComplex>(integrand, &grid, b1, &b2inv, bits)?
    };
    let m = ConnectionMatrix::from_rows(&[vec![f[0][0], f[0][1]], vec![f[1][0], f[1][1]]])?;
    for row in &f {
        for v in row {
            if !v.re.is_finite() || !v.im.is_finite() {
                return Err(Error::NonFinite(*v));
            }
        }
    }
    Ok((m, bits as u32, digits))
}

fn project<F: Field>(b2inv: &[[C64; 2]; 2], state: &State<F>, bits: usize) -> [[C64; 2]; 2] {
    let lift = |z: C64| F::from_c64(z, bits);
    let mut out = [[C64::new(0.0, 0.0); 2]; 2];
    for (i, row) in out.iter_mut().enumerate() {
        for (j, v) in row.iter_mut().enumerate() {
            let acc = lift(b2inv[i][0]).mul(&state[0][j]).add(&lift(b2inv[i][1]).mul(&state[1][j]));
            *v = acc.to_c64();
        }
    }
    out
}

fn run_series<F: Field>(
    integrand: &RationalIntegrand,
    grid: &[Vec<(f64, C64)>],
    b1: [[C64; 2]; 2],
    b2inv: &[[C64; 2]; 2],
    bits: usize,
) -> Result<[[C64; 2]; 2]> {
    let stepper = SeriesStepper::<F>::new(integrand.num().coeffs(), integrand.den().coeffs(), bits);
    let mut state: State<F> =
        [[stepper.lift(b1[0][0]), stepper.lift(b1[0][1])], [stepper.lift(b1[1][0]), stepper.lift(b1[1][1])]];
    let scale = integrand.scale();
    for nodes in grid {
        for w in nodes.windows(2) {
            state = step_split(&stepper, w[0].1, w[1].1, state, scale, 0)?;
        }
    }
    Ok(project(b2inv, &state, bits))
}

/// One series step, bisected when the series fails to converge.
fn step_split<F: Field>(
    stepper: &SeriesStepper<F>,
    a: C64,
    b: C64,
    state: State<F>,
    scale: f64,
    depth: u32,
) -> Result<State<F>> {
    if let Some(s) = stepper.step(a, b, &state) {
        return Ok(s);
    }
    if depth > 30 || (b - a).norm() < 1e-12 * scale {
        return Err(Error::StiffnessFailure(a));
    }
    let mid = a + (b - a) * 0.5;
    let s = step_split(stepper, a, mid, state, scale, depth + 1)?;
    step_split(stepper, mid, b, s, scale, depth + 1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::s_matrix;
    use crate::c64;

    #[test]
    fn plane_waves_give_identity() {
        let r = RationalIntegrand::polynomial(vec![c64(1.0, 0.0)]).unwrap();
        let sheet = BranchSheet::principal(r.clone(), c64(0.0, 0.0)).unwrap();
        for l in [1.0, 7.5, 40.0] {
            let path = PathSpec::segment(c64(0.0, 0.0), c64(l, 0.0)).unwrap();
            let f = exact_fmatrix(&r, &sheet, &path, c64(0.0, 0.0), 1e-10).unwrap();
            assert!(f.matrix.max_abs_diff(&ConnectionMatrix::identity(2)) < 1e-9, "{l}");
        }
    }

    #[test]
    fn extraction_pattern() {
        let e = extract_stokes_constant(&s_matrix(c64(0.0, 2.0)), StokesForm::S).unwrap();
        assert_eq!(e.s, c64(0.0, 2.0));
        assert_eq!(e.residual, 0.0);
        assert!(matches!(
            extract_stokes_constant(&s_matrix(c64(0.0, 2.0)), StokesForm::ST),
            Err(Error::WrongForm { .. })
        ));
    }

    #[test]
    fn weber_loop_is_minus_identity() {
        let r = RationalIntegrand::polynomial(vec![c64(-1.0, 0.0), c64(0.0, 0.0), c64(1.0, 0.0)]).unwrap();
        let lp = PathSpec::circle(c64(0.0, 0.0), 8.0, 64).unwrap();
        let m = monodromy(&r, &lp, 1e-10).unwrap();
        let minus = ConnectionMatrix::identity(2).scale(c64(-1.0, 0.0));
        assert!(m.max_abs_diff(&minus) < 1e-6, "{m:?}");
    }
}
