//! Closed-form primitives of the constant-curvature model spaces.
//!
//! For curvature `c <= 0` the radial metric coefficient is
//!
//!   s_c(r) = r                    (c = 0)
//!          = sinh(sqrt(-c) r) / sqrt(-c)   (c < 0)
//!
//! and its logarithmic derivative is ct_c(r) = s_c'(r) / s_c(r), i.e. 1/r in
//! the Euclidean case and sqrt(-c) coth(sqrt(-c) r) in the hyperbolic one.
//! The ball volume of radius rho is V_{c,n}(rho) = n omega_n int_0^rho
//! s_c(t)^{n-1} dt, with omega_n the Euclidean unit-ball volume, and the
//! static comparison profile
//!
//!   w_c(r) = int_0^r s_c(s)^{1-n} int_0^s s_c(t)^{n-1} dt ds
//!
//! satisfies Delta w_c(d(x0, .)) = 1 on the model space. These four
//! quantities are everything the discrete radial operators need.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quad::simpson;

/// Dimension and sectional curvature of the model space.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpaceFormParams {
    /// Dimension, 3 <= n <= 6.
    pub n: u32,
    /// Sectional curvature (1/length^2), c <= 0.
    pub c: f64,
}

impl SpaceFormParams {
    pub fn new(n: u32, c: f64) -> Result<Self> {
        if !(3..=6).contains(&n) {
            return Err(Error::Config(format!(
                "dimension n = {n} outside the supported range 3 <= n <= 6"
            )));
        }
        if !c.is_finite() || c > 0.0 {
            return Err(Error::Config(format!(
                "curvature c = {c} must be finite and <= 0 (Hadamard setting)"
            )));
        }
        Ok(Self { n, c })
    }

    /// Volume of the Euclidean unit ball in dimension `n`.
    pub fn unit_ball_volume(&self) -> f64 {
        unit_ball_volume(self.n)
    }

    /// Surface factor `n * omega_n`, the area of the unit sphere S^{n-1}.
    pub fn sphere_factor(&self) -> f64 {
        self.n as f64 * self.unit_ball_volume()
    }

    /// `s_c(r)^{n-1}`, the radial weight of the volume element.
    pub fn radial_weight(&self, r: f64) -> f64 {
        let s = metric_coeff_unchecked(self.c, r);
        s.powi(self.n as i32 - 1)
    }
}

/// Euclidean unit-ball volume omega_n = pi^{n/2} / Gamma(n/2 + 1).
///
/// Only small dimensions occur, so the half-integer Gamma values are
/// tabulated rather than computed.
pub fn unit_ball_volume(n: u32) -> f64 {
    use std::f64::consts::PI;
    match n {
        1 => 2.0,
        2 => PI,
        3 => 4.0 * PI / 3.0,
        4 => PI * PI / 2.0,
        5 => 8.0 * PI * PI / 15.0,
        6 => PI * PI * PI / 6.0,
        _ => unreachable!("dimension validated at construction"),
    }
}

fn metric_coeff_unchecked(c: f64, r: f64) -> f64 {
    if c == 0.0 {
        r
    } else {
        let k = (-c).sqrt();
        (k * r).sinh() / k
    }
}

/// Metric coefficient `s_c(r)`.
pub fn metric_coeff(params: SpaceFormParams, r: f64) -> Result<f64> {
    if !r.is_finite() || r < 0.0 {
        return Err(Error::Domain(format!("metric_coeff requires r >= 0, got {r}")));
    }
    Ok(metric_coeff_unchecked(params.c, r))
}

/// Cotangent coefficient `ct_c(r) = s_c'(r) / s_c(r)`, defined for r > 0.
///
/// The discrete operators never call this at r = 0; they use the
/// conservative flux form with a vanishing weight at the origin instead.
pub fn cotangent_coeff(params: SpaceFormParams, r: f64) -> Result<f64> {
    if !r.is_finite() || r < 0.0 {
        return Err(Error::Domain(format!(
            "cotangent_coeff requires r > 0, got {r}"
        )));
    }
    if r == 0.0 {
        return Err(Error::Singular(
            "ct_c is singular at r = 0; use the conservative operator form".into(),
        ));
    }
    if params.c == 0.0 {
        Ok(1.0 / r)
    } else {
        let k = (-params.c).sqrt();
        Ok(k / (k * r).tanh())
    }
}

/// Simpson panel count giving step <= 1e-3 * length.
const VOLUME_PANELS: usize = 1000;

/// Volume of the ball of radius `rho` in the model space,
/// `V_{c,n}(rho) = n omega_n int_0^rho s_c(t)^{n-1} dt`.
pub fn model_volume(params: SpaceFormParams, rho: f64) -> Result<f64> {
    if !rho.is_finite() || rho < 0.0 {
        return Err(Error::Domain(format!(
            "model_volume requires rho >= 0, got {rho}"
        )));
    }
    if rho == 0.0 {
        return Ok(0.0);
    }
    let integral = simpson(|t| params.radial_weight(t), 0.0, rho, VOLUME_PANELS);
    Ok(params.sphere_factor() * integral)
}

/// Static comparison profile `w_c(r)`.
///
/// Evaluated by one cumulative pass over a fine uniform grid: the inner
/// integral I(s) = int_0^s s_c^{n-1} is accumulated with Simpson steps, the
/// outer integrand g(s) = s_c(s)^{1-n} I(s) (with g(0) = 0, its limit) is
/// then integrated with composite Simpson on the same nodes.
pub fn static_profile_w(params: SpaceFormParams, r: f64) -> Result<f64> {
    if !r.is_finite() || r < 0.0 {
        return Err(Error::Domain(format!(
            "static_profile_w requires r >= 0, got {r}"
        )));
    }
    if r == 0.0 {
        return Ok(0.0);
    }
    let panels = VOLUME_PANELS;
    let fine = 2 * panels;
    let delta = r / fine as f64;
    let weight: Vec<f64> = (0..=fine)
        .map(|k| params.radial_weight(k as f64 * delta))
        .collect();

    // Cumulative inner integral on every fine node: full Simpson steps on
    // even nodes, a quadratic half-step (5f0 + 8f1 - f2)/12 on odd ones.
    let mut inner = vec![0.0_f64; fine + 1];
    for j in 1..=fine {
        if j % 2 == 0 {
            inner[j] = inner[j - 2] + delta / 3.0 * (weight[j - 2] + 4.0 * weight[j - 1] + weight[j]);
        } else {
            inner[j] = inner[j - 1] + delta / 12.0 * (5.0 * weight[j - 1] + 8.0 * weight[j] - weight[j + 1]);
        }
    }

    let outer_integrand =
        |k: usize| if k == 0 { 0.0 } else { inner[k] / weight[k] };
    let mut w = 0.0;
    for j in 0..panels {
        let k = 2 * j;
        w += delta / 3.0 * (outer_integrand(k) + 4.0 * outer_integrand(k + 1) + outer_integrand(k + 2));
    }
    Ok(w)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn params(n: u32, c: f64) -> SpaceFormParams {
        SpaceFormParams::new(n, c).unwrap()
    }

    /// Series evaluation of sinh used as an oracle independent of `f64::sinh`.
    fn sinh_series(x: f64) -> f64 {
        let mut term = x;
        let mut acc = x;
        for k in 1..25 {
            term *= x * x / ((2 * k) as f64 * (2 * k + 1) as f64);
            acc += term;
        }
        acc
    }

    #[test]
    fn metric_coeff_euclidean_is_identity() {
        let v = metric_coeff(params(3, 0.0), 2.5).unwrap();
        assert_eq!(v, 2.5);
    }

    #[test]
    fn metric_coeff_vanishes_at_origin() {
        let v = metric_coeff(params(4, -1.0), 0.0).unwrap();
        assert_eq!(v, 0.0);
    }

    #[test]
    fn metric_coeff_matches_series_oracle() {
        // c = -4, r = 1 -> sinh(2) / 2
        let v = metric_coeff(params(3, -4.0), 1.0).unwrap();
        let oracle = sinh_series(2.0) / 2.0;
        assert!((v - oracle).abs() / oracle < 1e-14, "{v} vs {oracle}");
    }

    #[test]
    fn metric_coeff_rejects_negative_radius() {
        assert!(metric_coeff(params(3, -1.0), -0.1).is_err());
    }

    #[test]
    fn cotangent_euclidean_branch() {
        let v = cotangent_coeff(params(3, 0.0), 2.0).unwrap();
        assert_eq!(v, 0.5);
    }

    #[test]
    fn cotangent_asymptote() {
        let v = cotangent_coeff(params(3, -1.0), 50.0).unwrap();
        assert!((v - 1.0).abs() < 1e-10, "coth tail {v}");
    }

    #[test]
    fn cotangent_closed_form_oracle() {
        // coth(1) = (e^2 + 1)/(e^2 - 1)
        let v = cotangent_coeff(params(3, -1.0), 1.0).unwrap();
        let e2 = std::f64::consts::E * std::f64::consts::E;
        let oracle = (e2 + 1.0) / (e2 - 1.0);
        assert!((v - oracle).abs() < 1e-14);
    }

    #[test]
    fn cotangent_singular_at_origin() {
        assert!(matches!(
            cotangent_coeff(params(3, -1.0), 0.0),
            Err(Error::Singular(_))
        ));
    }

    #[test]
    fn euclidean_unit_ball_volume() {
        let v = model_volume(params(3, 0.0), 1.0).unwrap();
        assert!((v - 4.0 * PI / 3.0).abs() < 1e-12);
    }

    #[test]
    fn empty_ball_has_zero_volume() {
        for &c in &[0.0, -0.7] {
            assert_eq!(model_volume(params(5, c), 0.0).unwrap(), 0.0);
        }
    }

    #[test]
    fn hyperbolic_ball_volume_closed_form() {
        // 4 pi int_0^1 sinh^2 t dt = pi (sinh 2 - 2)
        let v = model_volume(params(3, -1.0), 1.0).unwrap();
        let oracle = PI * (2.0_f64.sinh() - 2.0);
        assert!((v - oracle).abs() / oracle < 1e-10, "{v} vs {oracle}");
    }

    #[test]
    fn volume_rejects_negative_radius() {
        assert!(model_volume(params(3, 0.0), -1.0).is_err());
    }

    #[test]
    fn volume_dominates_euclidean_and_is_monotone() {
        let p = params(4, -0.5);
        let mut prev = 0.0;
        for k in 1..=10 {
            let rho = 0.4 * k as f64;
            let v = model_volume(p, rho).unwrap();
            assert!(v >= unit_ball_volume(4) * rho.powi(4) - 1e-12);
            assert!(v > prev);
            prev = v;
        }
    }

    #[test]
    fn volume_nonincreasing_in_curvature() {
        for n in 3..=6 {
            let rho = 2.0;
            let curvatures = [0.0, -0.25, -0.5, -1.0, -2.0];
            let vols: Vec<f64> = curvatures
                .iter()
                .map(|&c| model_volume(params(n, c), rho).unwrap())
                .collect();
            // c decreasing through the list => volume increasing
            for w in vols.windows(2) {
                assert!(w[1] > w[0], "volume must grow as c decreases: {vols:?}");
            }
        }
    }

    #[test]
    fn static_profile_euclidean_closed_form() {
        // c = 0, n = 3: w(r) = r^2 / 6
        let p = params(3, 0.0);
        for &r in &[0.5, 1.0, 2.0, 7.5] {
            let v = static_profile_w(p, r).unwrap();
            let exact = r * r / 6.0;
            assert!((v - exact).abs() / exact < 1e-12, "w({r}) = {v} vs {exact}");
        }
        assert_eq!(static_profile_w(p, 0.0).unwrap(), 0.0);
    }

    #[test]
    fn static_profile_matches_nested_quadrature_oracle() {
        // Independent O(M^2) nested Simpson at c = -1, n = 3, r = 1.
        let p = params(3, -1.0);
        let inner = |s: f64| simpson(|t| t.sinh() * t.sinh(), 0.0, s, 400);
        let oracle = simpson(
            |s| {
                if s == 0.0 {
                    0.0
                } else {
                    inner(s) / (s.sinh() * s.sinh())
                }
            },
            0.0,
            1.0,
            400,
        );
        let v = static_profile_w(p, 1.0).unwrap();
        assert!((v - oracle).abs() < 1e-8, "{v} vs {oracle}");
    }

    #[test]
    fn hyperbolic_coefficients_dominate_euclidean() {
        let p = params(3, -1.3);
        for k in 1..40 {
            let r = 0.25 * k as f64;
            assert!(metric_coeff(p, r).unwrap() > r);
            assert!(cotangent_coeff(p, r).unwrap() > 1.0 / r);
        }
    }

    proptest! {
        // s_c'(r) = s_c(r) * ct_c(r), checked by central differences.
        #[test]
        fn derivative_identity(c in -4.0..0.0f64, r in 0.05..6.0f64) {
            let p = params(3, c);
            let d = 1e-5 * r.max(1.0);
            let fd = (metric_coeff(p, r + d).unwrap() - metric_coeff(p, r - d).unwrap()) / (2.0 * d);
            let exact = metric_coeff(p, r).unwrap() * cotangent_coeff(p, r).unwrap();
            prop_assert!((fd - exact).abs() / exact.abs() < 1e-6);
        }
    }
}
