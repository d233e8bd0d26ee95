//! Catalog of nonlinearities and radial weights, their analytic metadata,
//! and the resolved problem configuration.
//!
//! Every nonlinearity is extended by f(s) = 0 for s <= 0. The oscillatory
//! family is fixed as f(s) = sqrt(s) (a + b sin(1/s)) with b > a > 0: its
//! antiderivative behaves like (2a/3) s^{3/2}, so F(s)/s^2 blows up at the
//! origin, while sin(1/s) <= -a/b on the bands [eta_j, theta_j] below makes
//! f nonpositive there. The bands
//!
//!   eta_j   = 1 / (2 pi j + 11 pi / 6)
//!   s_j     = 1 / (2 pi j + 3 pi / 2)
//!   theta_j = 1 / (2 pi j + 7 pi / 6)
//!
//! interlace as 0 < theta_{j+1} < eta_j < s_j < theta_j < 1 and drive the
//! truncation scheme of the oscillatory experiment.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::geometry::SpaceFormParams;
use crate::quad::adaptive_simpson;

// ---------------------------------------------------------------------------
// Oscillatory antiderivative
// ---------------------------------------------------------------------------

/// Evaluation of int_0^s sqrt(t) sin(1/t) dt via the substitution theta = 1/t:
///
///   int_0^s sqrt(t) sin(1/t) dt = int_{1/s}^inf theta^{-5/2} sin(theta) dtheta.
///
/// The tail integral is tabulated once on [1, 60] by backward cumulative
/// Simpson and interpolated with a Hermite cubic (the derivative is closed
/// form); beyond 60 an integration-by-parts asymptotic series converges to
/// machine precision. This keeps every F evaluation O(1).
mod osc_tail {
    use std::sync::OnceLock;

    const X_LO: f64 = 1.0;
    const X_SPLIT: f64 = 60.0;
    const STEP: f64 = 5e-4;

    fn integrand(x: f64) -> f64 {
        x.sin() / (x * x * x.sqrt())
    }

    /// d/dx of the tail integral: -theta^{-5/2} sin(theta).
    fn derivative(x: f64) -> f64 {
        -integrand(x)
    }

    /// int_x^inf theta^{-p} sin(theta) dtheta by repeated parts, valid for
    /// large x. Terms alternate; the loop stops once they fall below 1e-18
    /// or start growing (asymptotic divergence).
    fn tail_asymptotic(x: f64) -> f64 {
        let (sin_x, cos_x) = x.sin_cos();
        let mut acc = 0.0;
        let mut coeff = 1.0_f64;
        let mut p = 2.5_f64;
        let mut sign = 1.0_f64;
        let mut prev_mag = f64::INFINITY;
        for _ in 0..20 {
            let mag = coeff * x.powf(-p);
            if mag >= prev_mag {
                break;
            }
            acc += sign * (mag * cos_x + coeff * p * x.powf(-p - 1.0) * sin_x);
            if coeff * p * (p + 1.0) * x.powf(-p - 2.0) < 1e-18 {
                break;
            }
            prev_mag = mag;
            coeff *= p * (p + 1.0);
            p += 2.0;
            sign = -sign;
        }
        acc
    }

    struct Table {
        values: Vec<f64>,
    }

    fn table() -> &'static Table {
        static TABLE: OnceLock<Table> = OnceLock::new();
        TABLE.get_or_init(|| {
            let n = ((X_SPLIT - X_LO) / STEP).round() as usize;
            let mut values = vec![0.0; n + 1];
            values[n] = tail_asymptotic(X_SPLIT);
            for k in (0..n).rev() {
                let a = X_LO + k as f64 * STEP;
                let b = a + STEP;
                let panel =
                    STEP / 6.0 * (integrand(a) + 4.0 * integrand(0.5 * (a + b)) + integrand(b));
                values[k] = values[k + 1] + panel;
            }
            Table { values }
        })
    }

    /// int_x^inf theta^{-5/2} sin(theta) dtheta for x >= 1.
    pub fn eval(x: f64) -> f64 {
        debug_assert!(x >= X_LO);
        if x >= X_SPLIT {
            return tail_asymptotic(x);
        }
        let t = table();
        let pos = (x - X_LO) / STEP;
        let k = (pos.floor() as usize).min(t.values.len() - 2);
        let x0 = X_LO + k as f64 * STEP;
        let s = (x - x0) / STEP;
        let (v0, v1) = (t.values[k], t.values[k + 1]);
        let (d0, d1) = (derivative(x0), derivative(x0 + STEP));
        let s2 = s * s;
        let s3 = s2 * s;
        (2.0 * s3 - 3.0 * s2 + 1.0) * v0
            + (s3 - 2.0 * s2 + s) * STEP * d0
            + (-2.0 * s3 + 3.0 * s2) * v1
            + (s3 - s2) * STEP * d1
    }
}

// ---------------------------------------------------------------------------
// Nonlinearities
// ---------------------------------------------------------------------------

/// Hypotheses a custom table claims to satisfy; trusted, but spot-checked by
/// the witness suite.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct HypothesisClaims {
    /// f(s)/s -> 0 as s -> 0+.
    #[serde(default)]
    pub f1: bool,
    /// f(s)/s -> 0 as s -> infinity.
    #[serde(default)]
    pub f2: bool,
    /// F(s0) > 0 for some s0 > 0.
    #[serde(default)]
    pub f3: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Nonlinearity {
    /// f == 1 on (0, inf): the Poisson right-hand side.
    Poisson,
    /// f(s) = ln(1 + s^2), sublinear at infinity.
    SublinearLog,
    /// f(s) = sqrt(s) (a + b sin(1/s)) with b > a > 0.
    Oscillatory { a: f64, b: f64 },
    /// f_cap(s) = f(min(s, cap)): the truncation used by the box scheme.
    Truncated { inner: Box<Nonlinearity>, cap: f64 },
    /// Piecewise-linear table starting at (0, 0), constant beyond the last
    /// sample.
    CustomTable {
        s: Vec<f64>,
        f: Vec<f64>,
        #[serde(default)]
        claims: HypothesisClaims,
    },
}

impl Nonlinearity {
    pub fn oscillatory_default() -> Self {
        Nonlinearity::Oscillatory { a: 0.5, b: 1.0 }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Nonlinearity::Oscillatory { a, b } => {
                if !(0.0 < *a && a < b) {
                    return Err(Error::Config(format!(
                        "oscillatory kind requires b > a > 0, got a = {a}, b = {b}"
                    )));
                }
            }
            Nonlinearity::Truncated { inner, cap } => {
                if !(*cap > 0.0) {
                    return Err(Error::Config(format!("truncation cap must be > 0, got {cap}")));
                }
                inner.validate()?;
            }
            Nonlinearity::CustomTable { s, f, .. } => {
                if s.len() != f.len() || s.len() < 2 {
                    return Err(Error::Config(
                        "custom table needs matching s/f samples, at least two".into(),
                    ));
                }
                if s[0] != 0.0 || f[0] != 0.0 {
                    return Err(Error::Config("custom table must start at (0, 0)".into()));
                }
                if s.windows(2).any(|w| w[1] <= w[0]) {
                    return Err(Error::Config("custom table s values must increase".into()));
                }
                if f.iter().any(|v| !v.is_finite()) {
                    return Err(Error::Config("custom table f values must be finite".into()));
                }
            }
            _ => {}
        }
        Ok(())
    }

    /// f(s); zero for s <= 0 by the continuous extension.
    pub fn eval_f(&self, s: f64) -> f64 {
        if s <= 0.0 {
            return 0.0;
        }
        match self {
            Nonlinearity::Poisson => 1.0,
            Nonlinearity::SublinearLog => (1.0 + s * s).ln(),
            Nonlinearity::Oscillatory { a, b } => {
                if s < 1e-300 {
                    // sin(1/s) is not representable; the bounded oscillation
                    // is irrelevant at this magnitude
                    return a * s.sqrt();
                }
                s.sqrt() * (a + b * (1.0 / s).sin())
            }
            Nonlinearity::Truncated { inner, cap } => inner.eval_f(s.min(*cap)),
            Nonlinearity::CustomTable { s: xs, f: fs, .. } => {
                if s >= *xs.last().unwrap() {
                    return *fs.last().unwrap();
                }
                let k = xs.partition_point(|&x| x <= s) - 1;
                let t = (s - xs[k]) / (xs[k + 1] - xs[k]);
                fs[k] + t * (fs[k + 1] - fs[k])
            }
        }
    }

    /// F(s) = int_0^s f; zero for s <= 0.
    pub fn eval_big_f(&self, s: f64) -> f64 {
        if s <= 0.0 {
            return 0.0;
        }
        match self {
            Nonlinearity::Poisson => s,
            Nonlinearity::SublinearLog => s * (1.0 + s * s).ln() - 2.0 * s + 2.0 * s.atan(),
            Nonlinearity::Oscillatory { a, b } => {
                let leading = 2.0 * a / 3.0 * s * s.sqrt();
                if s < 1e-12 {
                    // |tail| <= 2 s^{5/2}, below round-off of the leading term
                    return leading;
                }
                if s <= 1.0 {
                    leading + b * osc_tail::eval(1.0 / s)
                } else {
                    let f1 = 2.0 * a / 3.0 + b * osc_tail::eval(1.0);
                    f1 + adaptive_simpson(&|t: f64| self.eval_f(t), 1.0, s, 1e-12)
                }
            }
            Nonlinearity::Truncated { inner, cap } => {
                if s <= *cap {
                    inner.eval_big_f(s)
                } else {
                    inner.eval_big_f(*cap) + inner.eval_f(*cap) * (s - *cap)
                }
            }
            Nonlinearity::CustomTable { s: xs, .. } => {
                // trapezoid on the polyline, exact for piecewise-linear f
                let mut acc = 0.0;
                let mut prev_x = 0.0;
                let mut prev_f = 0.0;
                for &x in xs.iter().skip(1) {
                    let x_hi = x.min(s);
                    if x_hi > prev_x {
                        let f_hi = self.eval_f(x_hi);
                        acc += 0.5 * (prev_f + f_hi) * (x_hi - prev_x);
                        prev_x = x_hi;
                        prev_f = f_hi;
                    }
                    if x >= s {
                        break;
                    }
                }
                if s > prev_x {
                    // constant extension beyond the last sample
                    acc += self.eval_f(s) * (s - prev_x);
                }
                acc
            }
        }
    }

    fn supports_cf(&self) -> bool {
        match self {
            Nonlinearity::SublinearLog => true,
            Nonlinearity::CustomTable { claims, .. } => claims.f1 && claims.f2,
            _ => false,
        }
    }
}

/// c_f = sup_{s > 0} f(s) / s for sublinear kinds.
///
/// Log-spaced scan over [1e-6, 1e6] followed by golden-section refinement of
/// the bracketing interval.
pub fn compute_cf(nl: &Nonlinearity) -> Result<f64> {
    if !nl.supports_cf() {
        return Err(Error::Unsupported(
            "c_f is defined only for kinds satisfying the sublinear hypotheses".into(),
        ));
    }
    let ratio = |s: f64| nl.eval_f(s) / s;
    let points = 600;
    let (lo, hi) = (1e-6_f64, 1e6_f64);
    let log_step = (hi / lo).ln() / (points - 1) as f64;
    let mut best_k = 0usize;
    let mut best = f64::NEG_INFINITY;
    for k in 0..points {
        let s = lo * ((k as f64) * log_step).exp();
        let v = ratio(s);
        if v > best {
            best = v;
            best_k = k;
        }
    }
    let mut a = lo * (((best_k.saturating_sub(1)) as f64) * log_step).exp();
    let mut b = lo * (((best_k + 1).min(points - 1) as f64) * log_step).exp();
    // golden-section maximization
    let inv_phi = 0.5 * (5.0_f64.sqrt() - 1.0);
    let mut x1 = b - inv_phi * (b - a);
    let mut x2 = a + inv_phi * (b - a);
    let mut f1 = ratio(x1);
    let mut f2 = ratio(x2);
    for _ in 0..120 {
        if f1 < f2 {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + inv_phi * (b - a);
            f2 = ratio(x2);
        } else {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - inv_phi * (b - a);
            f1 = ratio(x1);
        }
    }
    let cf = best.max(f1).max(f2);
    if !(cf > 0.0) {
        return Err(Error::Domain("c_f must be positive".into()));
    }
    Ok(cf)
}

// ---------------------------------------------------------------------------
// Radial weights
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RadialWeight {
    /// alpha(r) = A exp(-(r/sigma)^2), strictly radially decreasing.
    Gaussian { amplitude: f64, sigma: f64 },
    /// alpha(r) = A on [r_in, r_out], zero elsewhere.
    AnnulusBump { amplitude: f64, r_in: f64, r_out: f64 },
    /// Piecewise-linear samples; clamped on the left, zero beyond the last
    /// sample.
    Table { r: Vec<f64>, alpha: Vec<f64> },
}

impl RadialWeight {
    pub fn validate(&self) -> Result<()> {
        match self {
            RadialWeight::Gaussian { amplitude, sigma } => {
                if !(*amplitude >= 0.0 && *sigma > 0.0) {
                    return Err(Error::Config(format!(
                        "gaussian weight requires amplitude >= 0 and sigma > 0, got A = {amplitude}, sigma = {sigma}"
                    )));
                }
            }
            RadialWeight::AnnulusBump { amplitude, r_in, r_out } => {
                if !(*amplitude >= 0.0) || !(0.0 <= *r_in && r_in < r_out) {
                    return Err(Error::Config(format!(
                        "annulus weight requires A >= 0 and 0 <= r_in < r_out, got A = {amplitude}, [{r_in}, {r_out}]"
                    )));
                }
            }
            RadialWeight::Table { r, alpha } => {
                if r.len() != alpha.len() || r.len() < 2 {
                    return Err(Error::Config("weight table needs matching samples".into()));
                }
                if r.windows(2).any(|w| w[1] <= w[0]) {
                    return Err(Error::Config("weight table radii must increase".into()));
                }
                if alpha.iter().any(|&a| !(a >= 0.0) || !a.is_finite()) {
                    return Err(Error::Config("weight table values must be >= 0".into()));
                }
            }
        }
        Ok(())
    }

    pub fn eval(&self, r: f64) -> f64 {
        match self {
            RadialWeight::Gaussian { amplitude, sigma } => {
                let x = r / sigma;
                amplitude * (-x * x).exp()
            }
            RadialWeight::AnnulusBump { amplitude, r_in, r_out } => {
                if (*r_in..=*r_out).contains(&r) {
                    *amplitude
                } else {
                    0.0
                }
            }
            RadialWeight::Table { r: rs, alpha } => {
                if r <= rs[0] {
                    return alpha[0];
                }
                if r >= *rs.last().unwrap() {
                    return 0.0;
                }
                let k = rs.partition_point(|&x| x <= r) - 1;
                let t = (r - rs[k]) / (rs[k + 1] - rs[k]);
                alpha[k] + t * (alpha[k + 1] - alpha[k])
            }
        }
    }

    /// Exact essential supremum of the catalog entry.
    pub fn sup_norm(&self) -> f64 {
        match self {
            RadialWeight::Gaussian { amplitude, .. } => *amplitude,
            RadialWeight::AnnulusBump { amplitude, .. } => *amplitude,
            RadialWeight::Table { alpha, .. } => alpha.iter().fold(0.0_f64, |m, &v| m.max(v)),
        }
    }

    /// Essential infimum over the closed interval [lo, hi].
    pub fn essinf_on(&self, lo: f64, hi: f64) -> f64 {
        match self {
            RadialWeight::Gaussian { .. } => self.eval(hi.max(lo)),
            RadialWeight::AnnulusBump { amplitude, r_in, r_out } => {
                if lo >= *r_in && hi <= *r_out {
                    *amplitude
                } else {
                    0.0
                }
            }
            RadialWeight::Table { r, .. } => {
                let mut inf = self.eval(lo).min(self.eval(hi));
                for &x in r.iter().filter(|&&x| x > lo && x < hi) {
                    inf = inf.min(self.eval(x));
                }
                inf
            }
        }
    }

    /// Whether the weight is strictly radially decreasing, the
    /// nondegeneracy proviso of the rigidity scenario.
    pub fn is_strictly_decreasing(&self) -> bool {
        matches!(self, RadialWeight::Gaussian { .. })
    }

    pub fn scaled(&self, factor: f64) -> Self {
        match self {
            RadialWeight::Gaussian { amplitude, sigma } => RadialWeight::Gaussian {
                amplitude: amplitude * factor,
                sigma: *sigma,
            },
            RadialWeight::AnnulusBump { amplitude, r_in, r_out } => RadialWeight::AnnulusBump {
                amplitude: amplitude * factor,
                r_in: *r_in,
                r_out: *r_out,
            },
            RadialWeight::Table { r, alpha } => RadialWeight::Table {
                r: r.clone(),
                alpha: alpha.iter().map(|a| a * factor).collect(),
            },
        }
    }
}

/// The no-solution threshold lambda_tilde = 1 / (c_f ||alpha||_inf).
pub fn lambda_tilde(nl: &Nonlinearity, weight: &RadialWeight) -> Result<f64> {
    let sup = weight.sup_norm();
    if !(sup > 0.0) {
        return Err(Error::Domain("weight has zero supremum".into()));
    }
    Ok(1.0 / (compute_cf(nl)? * sup))
}

// ---------------------------------------------------------------------------
// Oscillation bookkeeping
// ---------------------------------------------------------------------------

/// Truncation and sign-band thresholds of oscillation level j >= 1.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct OscillationLevel {
    pub j: usize,
    /// Seed height: sin(1/s_j) = -1.
    pub s_j: f64,
    /// Lower band edge: sin(1/eta_j) = -1/2; solutions land in [0, eta_j].
    pub eta_j: f64,
    /// Truncation cap: sin(1/theta_j) = -1/2.
    pub theta_j: f64,
}

pub fn oscillation_level(j: usize) -> Result<OscillationLevel> {
    if j == 0 {
        return Err(Error::Domain("oscillation levels start at j = 1".into()));
    }
    let base = 2.0 * PI * j as f64;
    Ok(OscillationLevel {
        j,
        s_j: 1.0 / (base + 1.5 * PI),
        eta_j: 1.0 / (base + 11.0 * PI / 6.0),
        theta_j: 1.0 / (base + 7.0 * PI / 6.0),
    })
}

// ---------------------------------------------------------------------------
// Configuration
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scenario {
    Poisson,
    Rigidity,
    Sublinear,
    Oscillatory,
    Check,
}

impl Scenario {
    pub fn name(&self) -> &'static str {
        match self {
            Scenario::Poisson => "poisson",
            Scenario::Rigidity => "rigidity",
            Scenario::Sublinear => "sublinear",
            Scenario::Oscillatory => "oscillatory",
            Scenario::Check => "check",
        }
    }

    /// Dimension bound of the underlying statement.
    fn max_dimension(&self) -> u32 {
        match self {
            Scenario::Poisson | Scenario::Rigidity | Scenario::Check => 6,
            Scenario::Sublinear | Scenario::Oscillatory => 5,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpaceSpec {
    pub n: u32,
    pub c: f64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridSpec {
    pub r_max: Option<f64>,
    pub n_cells: Option<usize>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverSpec {
    pub tol: Option<f64>,
    pub max_iter: Option<usize>,
    pub path_nodes: Option<usize>,
}

/// Geometry of the seed annulus used by the oscillatory scenario.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnnulusSpec {
    pub rho: f64,
    pub half_width: f64,
}

/// On-disk configuration; everything optional, defaults filled per scenario.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RawConfig {
    pub scenario: Option<Scenario>,
    pub space: Option<SpaceSpec>,
    pub e: Option<f64>,
    pub q: Option<f64>,
    pub lambda: Option<f64>,
    pub nonlinearity: Option<Nonlinearity>,
    pub weight: Option<RadialWeight>,
    pub grid: GridSpec,
    pub solver: SolverSpec,
    pub seed: Option<u64>,
    /// Oscillatory: number of truncation levels.
    pub levels: Option<usize>,
    /// Sublinear: sweep values in units of lambda_tilde.
    pub lambda_sweep: Option<Vec<f64>>,
    /// Rigidity: curvatures of the residual matrix.
    pub rigidity_curvatures: Option<Vec<f64>>,
    /// Oscillatory: seed annulus geometry.
    pub annulus: Option<AnnulusSpec>,
}

/// Fully resolved configuration; serialized verbatim into reports.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProblemConfig {
    pub scenario: Scenario,
    pub space: SpaceFormParams,
    pub e: f64,
    pub q: f64,
    pub lambda: f64,
    pub nonlinearity: Nonlinearity,
    pub weight: RadialWeight,
    pub r_max: f64,
    pub n_cells: usize,
    pub tol: f64,
    pub max_iter: usize,
    pub path_nodes: usize,
    pub seed: u64,
    pub levels: usize,
    pub lambda_sweep: Option<Vec<f64>>,
    pub rigidity_curvatures: Vec<f64>,
    pub annulus: AnnulusSpec,
}

impl ProblemConfig {
    /// Resolve a raw config against the scenario selected on the command
    /// line, filling defaults and validating every bound.
    pub fn resolve(raw: &RawConfig, scenario: Scenario) -> Result<Self> {
        if let Some(s) = raw.scenario {
            if s != scenario {
                return Err(Error::Config(format!(
                    "config declares scenario '{}' but '{}' was requested",
                    s.name(),
                    scenario.name()
                )));
            }
        }
        let space_spec = raw.space.unwrap_or(SpaceSpec { n: 3, c: 0.0 });
        if space_spec.c > 0.0 {
            return Err(Error::Config(format!(
                "curvature c = {} violates the Hadamard requirement c <= 0",
                space_spec.c
            )));
        }
        let max_n = scenario.max_dimension();
        if !(3..=max_n).contains(&space_spec.n) {
            return Err(Error::Config(format!(
                "scenario '{}' requires 3 <= n <= {max_n}, got n = {}",
                scenario.name(),
                space_spec.n
            )));
        }
        let space = SpaceFormParams::new(space_spec.n, space_spec.c)?;

        let e = raw.e.unwrap_or(1.0);
        let q = raw.q.unwrap_or(1.0);
        let lambda = raw.lambda.unwrap_or(1.0);
        if !(e > 0.0) || !(q > 0.0) {
            return Err(Error::Config(format!(
                "couplings must be positive, got e = {e}, q = {q}"
            )));
        }
        if !(lambda >= 0.0) || !lambda.is_finite() {
            return Err(Error::Config(format!("lambda must be >= 0, got {lambda}")));
        }

        let hyperbolic = space.c < 0.0;
        let r_max = raw.grid.r_max.unwrap_or(if hyperbolic { 10.0 } else { 15.0 });
        let n_cells = raw.grid.n_cells.unwrap_or(match scenario {
            Scenario::Rigidity => 4000,
            _ => 2000,
        });
        if !(r_max > 0.0) {
            return Err(Error::Config(format!("R_max must be positive, got {r_max}")));
        }
        if n_cells < 16 {
            return Err(Error::Config(format!("grid needs at least 16 cells, got {n_cells}")));
        }

        let tol = raw.solver.tol.unwrap_or(1e-8);
        let max_iter = raw.solver.max_iter.unwrap_or(50_000);
        let path_nodes = raw.solver.path_nodes.unwrap_or(21);
        if !(tol > 0.0) {
            return Err(Error::Config(format!("tolerance must be positive, got {tol}")));
        }
        if path_nodes < 3 {
            return Err(Error::Config(format!(
                "mountain-pass path needs at least 3 nodes, got {path_nodes}"
            )));
        }

        let annulus = raw.annulus.unwrap_or(if hyperbolic {
            AnnulusSpec { rho: 2.0, half_width: 0.5 }
        } else {
            AnnulusSpec { rho: 3.0, half_width: 1.0 }
        });
        if !(annulus.half_width > 0.0 && annulus.half_width < annulus.rho) {
            return Err(Error::Config(format!(
                "annulus requires 0 < half_width < rho, got rho = {}, half_width = {}",
                annulus.rho, annulus.half_width
            )));
        }
        if annulus.rho + annulus.half_width >= r_max {
            return Err(Error::Config(format!(
                "annulus [{}, {}] must lie inside R_max = {r_max}",
                annulus.rho - annulus.half_width,
                annulus.rho + annulus.half_width
            )));
        }

        let nonlinearity = raw.nonlinearity.clone().unwrap_or(match scenario {
            Scenario::Sublinear => Nonlinearity::SublinearLog,
            Scenario::Oscillatory => Nonlinearity::oscillatory_default(),
            _ => Nonlinearity::Poisson,
        });
        nonlinearity.validate()?;
        match scenario {
            Scenario::Poisson | Scenario::Rigidity => {
                if !matches!(nonlinearity, Nonlinearity::Poisson) {
                    return Err(Error::Config(format!(
                        "scenario '{}' requires the poisson nonlinearity",
                        scenario.name()
                    )));
                }
            }
            Scenario::Sublinear => {
                if !nonlinearity.supports_cf() {
                    return Err(Error::Config(
                        "sublinear scenario requires a kind satisfying the sublinear hypotheses"
                            .into(),
                    ));
                }
            }
            Scenario::Oscillatory => {
                if !matches!(nonlinearity, Nonlinearity::Oscillatory { .. }) {
                    return Err(Error::Config(
                        "oscillatory scenario requires the oscillatory nonlinearity".into(),
                    ));
                }
            }
            Scenario::Check => {}
        }

        let weight = raw.weight.clone().unwrap_or(match scenario {
            Scenario::Rigidity => RadialWeight::Gaussian { amplitude: 4.0, sigma: 1.0 },
            Scenario::Oscillatory => RadialWeight::AnnulusBump {
                amplitude: 4.0,
                r_in: annulus.rho - annulus.half_width,
                r_out: annulus.rho + annulus.half_width,
            },
            _ => RadialWeight::Gaussian { amplitude: 1.0, sigma: 1.0 },
        });
        weight.validate()?;
        if scenario == Scenario::Oscillatory {
            let lo = annulus.rho - annulus.half_width;
            let hi = annulus.rho + annulus.half_width;
            if !(weight.essinf_on(lo, hi) > 0.0) {
                return Err(Error::Config(format!(
                    "oscillatory scenario requires essinf alpha > 0 on the annulus [{lo}, {hi}]"
                )));
            }
        }

        let levels = raw.levels.unwrap_or(3);
        let rigidity_curvatures = raw
            .rigidity_curvatures
            .clone()
            .unwrap_or_else(|| vec![0.0, -0.5, -1.0]);
        if rigidity_curvatures.iter().any(|&c| c > 0.0 || !c.is_finite()) {
            return Err(Error::Config("rigidity curvatures must all be <= 0".into()));
        }
        if let Some(sweep) = &raw.lambda_sweep {
            if sweep.is_empty() || sweep.iter().any(|&l| !(l >= 0.0) || !l.is_finite()) {
                return Err(Error::Config("lambda sweep values must be >= 0".into()));
            }
        }

        Ok(ProblemConfig {
            scenario,
            space,
            e,
            q,
            lambda,
            nonlinearity,
            weight,
            r_max,
            n_cells,
            tol,
            max_iter,
            path_nodes,
            seed: raw.seed.unwrap_or(42),
            levels,
            lambda_sweep: raw.lambda_sweep.clone(),
            rigidity_curvatures,
            annulus,
        })
    }
}
