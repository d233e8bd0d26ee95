//! The one-variable energy functional and its exact discrete gradient.
//!
//! E_lambda(u) = 1/2 ||u||_{H^1}^2 + (e/4) int phi_u u^2 - lambda int alpha F(u)
//!
//! Its derivative is E'(u)(v) = int (<grad u, grad v> + u v + e phi_u u v)
//! - lambda int alpha f(u) v: the phi-term enters with coefficient e, not
//! e/2, because phi_u itself depends on u and the Maxwell identity cancels
//! the bookkeeping. Discretely this cancellation is exact — the operator is
//! symmetric in the mass inner product — so the frozen-phi gradient below is
//! the exact derivative of the discrete energy, which the finite-difference
//! check confirms.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::{RadialField, RadialGrid};
use crate::maxwell::solve_phi_with;
use crate::model::{Nonlinearity, ProblemConfig, RadialWeight};
use crate::tridiag::TridiagonalFactor;

/// A ready-to-solve problem instance: grid, sampled weight, nonlinearity,
/// couplings, and the factored base operator.
#[derive(Debug, Clone)]
pub struct Problem {
    pub grid: RadialGrid,
    pub alpha: RadialField,
    pub nonlinearity: Nonlinearity,
    pub e: f64,
    pub q: f64,
    pub lambda: f64,
    base: TridiagonalFactor,
}

/// Everything the descent loops need at one point.
#[derive(Debug, Clone)]
pub struct GradientEval {
    /// phi_u, recomputed from scratch.
    pub phi: RadialField,
    /// Pointwise residual -Delta u + u + e phi u - lambda alpha f(u).
    pub strong: RadialField,
    /// Coefficient vector: E'(u)(v) = sum_i dual_i v_i.
    pub dual: RadialField,
    /// H^1 representative of E'(u).
    pub riesz: RadialField,
    /// ||riesz||_{H^1}.
    pub grad_norm: f64,
    /// sup_i |dual_i|.
    pub dual_sup: f64,
}

impl Problem {
    pub fn new(
        grid: RadialGrid,
        weight: &RadialWeight,
        nonlinearity: Nonlinearity,
        e: f64,
        q: f64,
        lambda: f64,
    ) -> Result<Self> {
        if !(e > 0.0) || !(q > 0.0) {
            return Err(Error::Domain(format!(
                "couplings must be positive, got e = {e}, q = {q}"
            )));
        }
        if !(lambda >= 0.0) {
            return Err(Error::Domain(format!("lambda must be >= 0, got {lambda}")));
        }
        let alpha = grid.sample(|r| weight.eval(r));
        let base = grid.base_factor()?;
        Ok(Self {
            grid,
            alpha,
            nonlinearity,
            e,
            q,
            lambda,
            base,
        })
    }

    pub fn from_config(cfg: &ProblemConfig) -> Result<Self> {
        let grid = RadialGrid::build(cfg.space, cfg.r_max, cfg.n_cells)?;
        Self::new(
            grid,
            &cfg.weight,
            cfg.nonlinearity.clone(),
            cfg.e,
            cfg.q,
            cfg.lambda,
        )
    }

    pub fn with_lambda(&self, lambda: f64) -> Self {
        let mut p = self.clone();
        p.lambda = lambda;
        p
    }

    pub fn with_nonlinearity(&self, nl: Nonlinearity) -> Self {
        let mut p = self.clone();
        p.nonlinearity = nl;
        p
    }

    pub fn solve_phi(&self, u: &RadialField) -> Result<RadialField> {
        solve_phi_with(&self.grid, &self.base, u, self.q)
    }

    /// Riesz lift: solve (-Delta + 1) g = rhs with zero Dirichlet value.
    pub fn riesz_lift(&self, rhs: &RadialField) -> Result<RadialField> {
        self.grid.solve_dirichlet(&self.base, rhs)
    }

    /// int alpha F(u) dv_g.
    pub fn big_f_integral(&self, u: &RadialField) -> Result<f64> {
        self.grid.check_field(u)?;
        let integrand = RadialField(
            u.as_slice()
                .iter()
                .zip(self.alpha.as_slice())
                .map(|(&s, &a)| a * self.nonlinearity.eval_big_f(s))
                .collect(),
        );
        self.grid.integrate(&integrand)
    }

    /// The quadratic part H(u) = 1/2 ||u||^2 + (e/4) int phi_u u^2.
    pub fn quadratic_part(&self, u: &RadialField) -> Result<f64> {
        let phi = self.solve_phi(u)?;
        self.quadratic_part_with(u, &phi)
    }

    fn quadratic_part_with(&self, u: &RadialField, phi: &RadialField) -> Result<f64> {
        let norm2 = self.grid.h1_inner(u, u)?;
        let interaction = self.grid.mass_inner(phi, &u.mul(u))?;
        Ok(0.5 * norm2 + 0.25 * self.e * interaction)
    }

    /// E_lambda(u) = H(u) - lambda * int alpha F(u).
    pub fn energy(&self, u: &RadialField) -> Result<f64> {
        let phi = self.solve_phi(u)?;
        Ok(self.quadratic_part_with(u, &phi)? - self.lambda * self.big_f_integral(u)?)
    }

    /// H(u) and F(u) such that E = H - lambda F identically.
    pub fn energy_parts(&self, u: &RadialField) -> Result<(f64, f64)> {
        Ok((self.quadratic_part(u)?, self.big_f_integral(u)?))
    }

    /// Exact discrete gradient at `u`; see the module docs.
    pub fn gradient(&self, u: &RadialField) -> Result<GradientEval> {
        self.grid.check_field(u)?;
        let phi = self.solve_phi(u)?;
        let applied = self.grid.apply_operator(u, None)?;
        let n = self.grid.n_cells;
        let mut strong = RadialField::zeros(self.grid.node_count());
        for i in 0..n {
            strong[i] = applied[i] + self.e * phi[i] * u[i]
                - self.lambda * self.alpha[i] * self.nonlinearity.eval_f(u[i]);
        }
        let dual = RadialField(
            (0..self.grid.node_count())
                .map(|i| self.grid.cell_mass(i) * strong[i])
                .collect(),
        );
        let riesz = self.riesz_lift(&strong)?;
        let grad_norm = self.grid.h1_norm(&riesz)?;
        let dual_sup = dual.sup_norm();
        Ok(GradientEval {
            phi,
            strong,
            dual,
            riesz,
            grad_norm,
            dual_sup,
        })
    }

    /// E'(u)(v) evaluated through the dual coefficient vector.
    pub fn directional_derivative(&self, grad: &GradientEval, v: &RadialField) -> f64 {
        grad.dual
            .as_slice()
            .iter()
            .zip(v.as_slice())
            .map(|(d, v)| d * v)
            .sum()
    }
}

/// Diagnostics attached to a solution pair (u, phi).
#[derive(Debug, Clone, Serialize)]
pub struct SolutionChecks {
    /// Relative residual of ||phi||^2_{H^1} = q int phi u^2.
    pub maxwell_identity_rel: f64,
    /// min_i phi_i.
    pub phi_min: f64,
    /// min_i u_i.
    pub u_min: f64,
    /// sup_i |dual_i| of the full energy gradient.
    pub dual_sup: f64,
    /// H^1 norm of the Riesz gradient.
    pub grad_norm: f64,
}

pub fn solution_checks(problem: &Problem, u: &RadialField) -> Result<SolutionChecks> {
    let grad = problem.gradient(u)?;
    let lhs = problem.grid.h1_inner(&grad.phi, &grad.phi)?;
    let rhs = problem.q * problem.grid.mass_inner(&grad.phi, &u.mul(u))?;
    let scale = lhs.abs().max(rhs.abs()).max(f64::MIN_POSITIVE);
    Ok(SolutionChecks {
        maxwell_identity_rel: (lhs - rhs).abs() / scale,
        phi_min: grad.phi.min_value(),
        u_min: u.min_value(),
        dual_sup: grad.dual_sup,
        grad_norm: grad.grad_norm,
    })
}

/// Upper bound for the two-solution threshold: H(w) / F(w) for a candidate
/// with F(w) > 0. Any lambda strictly above the bound admits a
/// negative-energy minimizer.
pub fn lambda0_upper(problem: &Problem, w: &RadialField) -> Result<f64> {
    let (h, f) = problem.energy_parts(w)?;
    if !(f > 0.0) {
        return Err(Error::CandidateRejected(format!(
            "candidate has int alpha F(w) = {f} <= 0"
        )));
    }
    Ok(h / f)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::SpaceFormParams;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn problem(c: f64, n: u32, r_max: f64, cells: usize, nl: Nonlinearity, lambda: f64) -> Problem {
        let grid = RadialGrid::build(SpaceFormParams::new(n, c).unwrap(), r_max, cells).unwrap();
        Problem::new(
            grid,
            &RadialWeight::Gaussian { amplitude: 1.0, sigma: 1.0 },
            nl,
            1.0,
            1.0,
            lambda,
        )
        .unwrap()
    }

    fn random_field(p: &Problem, rng: &mut ChaCha8Rng, signed: bool) -> RadialField {
        let r_max = p.grid.r_max;
        let bumps: Vec<(f64, f64, f64)> = (0..3)
            .map(|_| {
                let amp: f64 = rng.gen_range(0.2..1.0);
                (
                    if signed && rng.gen_bool(0.5) { -amp } else { amp },
                    rng.gen_range(0.1 * r_max..0.6 * r_max),
                    rng.gen_range(0.5..1.4),
                )
            })
            .collect();
        let mut f = p.grid.sample(|r| {
            let x = r / r_max;
            (1.0 - x * x).max(0.0).powi(2)
                * bumps
                    .iter()
                    .map(|(a, c0, w)| a * (-((r - c0) / w).powi(2)).exp())
                    .sum::<f64>()
        });
        f.zero_dirichlet();
        f
    }

    #[test]
    fn energy_vanishes_at_zero() {
        let p = problem(0.0, 3, 10.0, 500, Nonlinearity::SublinearLog, 1.0);
        let z = RadialField::zeros(p.grid.node_count());
        assert_eq!(p.energy(&z).unwrap(), 0.0);
        let (h, f) = p.energy_parts(&z).unwrap();
        assert_eq!(h, 0.0);
        assert_eq!(f, 0.0);
    }

    #[test]
    fn energy_nonnegative_without_forcing() {
        let p = problem(-1.0, 4, 8.0, 500, Nonlinearity::SublinearLog, 0.0);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..10 {
            let u = random_field(&p, &mut rng, true);
            assert!(p.energy(&u).unwrap() >= 0.0);
        }
    }

    #[test]
    fn decomposition_identity() {
        let p = problem(0.0, 3, 12.0, 800, Nonlinearity::SublinearLog, 0.7);
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for k in 0..20 {
            let lambda = 0.2 * k as f64;
            let pl = p.with_lambda(lambda);
            let u = random_field(&p, &mut rng, true);
            let e = pl.energy(&u).unwrap();
            let (h, f) = pl.energy_parts(&u).unwrap();
            assert!((e - (h - lambda * f)).abs() < 1e-12 * (1.0 + e.abs()));
        }
    }

    #[test]
    fn poisson_big_f_is_linear_functional_on_nonnegative_fields() {
        let p = problem(0.0, 3, 12.0, 800, Nonlinearity::Poisson, 1.0);
        let mut rng = ChaCha8Rng::seed_from_u64(29);
        let u = random_field(&p, &mut rng, false);
        let direct = p.grid.integrate(&u.mul(&p.alpha)).unwrap();
        let via_f = p.big_f_integral(&u).unwrap();
        assert!((direct - via_f).abs() < 1e-12 * direct.abs().max(1.0));
    }

    #[test]
    fn energy_matches_refined_recomputation() {
        // Same analytic profile evaluated on a doubled grid with a
        // different integration route for the norm and weight terms.
        let profile = |r: f64| 0.8 * (-(r - 1.2f64).powi(2) / 1.21).exp();
        let dprofile =
            |r: f64| 0.8 * (-(r - 1.2f64).powi(2) / 1.21).exp() * (-2.0 * (r - 1.2) / 1.21);
        let nl = Nonlinearity::SublinearLog;
        let lambda = 0.9;

        let p = problem(0.0, 3, 15.0, 24_000, nl.clone(), lambda);
        let u = p.grid.sample(profile);
        let ours = p.energy(&u).unwrap();

        let p2 = problem(0.0, 3, 15.0, 48_000, nl.clone(), lambda);
        let u2 = p2.grid.sample(profile);
        let phi2 = p2.solve_phi(&u2).unwrap();
        // Simpson over nodes instead of cell masses
        let sphere = 4.0 * std::f64::consts::PI;
        let norm2 = crate::quad::simpson(
            |r| sphere * r * r * (dprofile(r).powi(2) + profile(r).powi(2)),
            0.0,
            15.0,
            48_000,
        );
        let node_simpson = |f: &dyn Fn(usize) -> f64| {
            let h = p2.grid.h;
            let n = p2.grid.n_cells;
            let mut acc = 0.0;
            let mut k = 0;
            while k + 2 <= n {
                acc += h / 3.0 * (f(k) + 4.0 * f(k + 1) + f(k + 2));
                k += 2;
            }
            acc
        };
        let weight_at = |i: usize| {
            let r = p2.grid.radius(i);
            sphere * r * r
        };
        let interaction = node_simpson(&|i| weight_at(i) * phi2[i] * u2[i] * u2[i]);
        let forcing = node_simpson(&|i| {
            weight_at(i) * p2.alpha[i] * nl.eval_big_f(u2[i])
        });
        let oracle = 0.5 * norm2 + 0.25 * interaction - lambda * forcing;
        let rel = (ours - oracle).abs() / oracle.abs();
        assert!(rel < 1e-6, "ours {ours} vs oracle {oracle} (rel {rel:.2e})");
    }

    #[test]
    fn gradient_zero_at_zero() {
        let p = problem(0.0, 3, 10.0, 400, Nonlinearity::SublinearLog, 1.0);
        let z = RadialField::zeros(p.grid.node_count());
        let g = p.gradient(&z).unwrap();
        assert_eq!(g.grad_norm, 0.0);
        assert_eq!(g.dual_sup, 0.0);
    }

    #[test]
    fn gradient_matches_central_differences() {
        let kinds = [Nonlinearity::Poisson, Nonlinearity::SublinearLog];
        for nl in kinds {
            let signed = matches!(nl, Nonlinearity::SublinearLog);
            let p = problem(0.0, 3, 12.0, 1000, nl, 0.8);
            let mut rng = ChaCha8Rng::seed_from_u64(31);
            for _ in 0..20 {
                let u = random_field(&p, &mut rng, signed);
                let v = random_field(&p, &mut rng, signed);
                let g = p.gradient(&u).unwrap();
                let exact = p.directional_derivative(&g, &v);
                let t = 1e-5;
                let mut up = u.clone();
                up.axpy(t, &v);
                let mut dn = u.clone();
                dn.axpy(-t, &v);
                let fd = (p.energy(&up).unwrap() - p.energy(&dn).unwrap()) / (2.0 * t);
                let rel = (fd - exact).abs() / exact.abs().max(1e-10);
                assert!(rel < 1e-5, "fd {fd} vs exact {exact} (rel {rel:.2e})");
            }
        }
    }

    #[test]
    fn riesz_representative_reproduces_dual_pairing() {
        let p = problem(-1.0, 3, 8.0, 600, Nonlinearity::SublinearLog, 1.3);
        let mut rng = ChaCha8Rng::seed_from_u64(37);
        let u = random_field(&p, &mut rng, true);
        let g = p.gradient(&u).unwrap();
        for _ in 0..5 {
            let v = random_field(&p, &mut rng, true);
            let via_dual = p.directional_derivative(&g, &v);
            let via_riesz = p.grid.h1_inner(&g.riesz, &v).unwrap();
            assert!(
                (via_dual - via_riesz).abs() < 1e-9 * via_dual.abs().max(1.0),
                "{via_dual} vs {via_riesz}"
            );
        }
    }

    #[test]
    fn poisson_energy_convex_along_segments() {
        let p = problem(0.0, 3, 10.0, 600, Nonlinearity::Poisson, 1.0);
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        for _ in 0..20 {
            let u = random_field(&p, &mut rng, false);
            let v = random_field(&p, &mut rng, false);
            let at = |t: f64| {
                let mut w = u.scaled(t);
                w.axpy(1.0 - t, &v);
                p.energy(&w).unwrap()
            };
            let vals: Vec<f64> = [0.0, 0.25, 0.5, 0.75, 1.0].iter().map(|&t| at(t)).collect();
            for k in 1..4 {
                assert!(
                    vals[k] <= 0.5 * (vals[k - 1] + vals[k + 1]) + 1e-12,
                    "poisson energy not convex along segment"
                );
            }
        }
    }

    #[test]
    fn coercivity_witness_along_dyadic_scalings() {
        let p = problem(0.0, 3, 12.0, 800, Nonlinearity::SublinearLog, 2.0);
        let mut rng = ChaCha8Rng::seed_from_u64(43);
        let u = random_field(&p, &mut rng, false);
        let half_norm2 = 0.5 * p.grid.h1_inner(&u, &u).unwrap();
        let mut sublinear_defects = Vec::new();
        for k in 0..=8 {
            let t = 2.0_f64.powi(k);
            let tu = u.scaled(t);
            let e_scaled = p.energy(&tu).unwrap() / (t * t);
            let defect = p.lambda * p.big_f_integral(&tu).unwrap() / (t * t);
            // quadratic terms dominate: E(tu)/t^2 >= 1/2||u||^2 - defect
            assert!(e_scaled >= half_norm2 - defect - 1e-12);
            sublinear_defects.push(defect);
        }
        // the forcing defect decays, witnessing coercivity
        assert!(sublinear_defects[8] < 0.2 * sublinear_defects[2]);
        assert!(p.energy(&u.scaled(256.0)).unwrap() > 0.0);
    }

    #[test]
    fn lambda0_upper_rejects_nonpositive_candidates() {
        let p = problem(0.0, 3, 10.0, 400, Nonlinearity::SublinearLog, 1.0);
        let z = RadialField::zeros(p.grid.node_count());
        assert!(matches!(
            lambda0_upper(&p, &z),
            Err(Error::CandidateRejected(_))
        ));
    }

    #[test]
    fn lambda0_upper_family_scan_is_no_worse_than_members() {
        let p = problem(0.0, 3, 12.0, 800, Nonlinearity::SublinearLog, 1.0);
        let heights: Vec<f64> = (0..10).map(|k| 0.5 * 1.5_f64.powi(k)).collect();
        let ratios: Vec<f64> = heights
            .iter()
            .map(|&s| {
                let w = crate::experiments::make_annulus_profile(&p.grid, s, 0.7, 0.9).unwrap();
                lambda0_upper(&p, &w).unwrap()
            })
            .collect();
        let best = ratios.iter().cloned().fold(f64::INFINITY, f64::min);
        for r in &ratios {
            assert!(best <= *r + 1e-12);
        }
        assert!(best.is_finite() && best > 0.0);
    }
}
