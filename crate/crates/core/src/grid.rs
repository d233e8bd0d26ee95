//! Radial discretization of the weighted Sobolev space.
//!
//! A `RadialGrid` is a uniform mesh r_i = i h on [0, R] carrying the weight
//! s_c(r)^{n-1} in three precomputed forms:
//!
//! * `half_weight[i]`  = s_c(r_{i+1/2})^{n-1}, the flux weight between nodes
//!   i and i+1 (the flux weight "below" node 0 is identically zero, which
//!   closes the Neumann end without ever evaluating ct_c at the origin);
//! * `cell_mass[i]`    = n omega_n int_{cell i} s_c^{n-1} dr, the quadrature
//!   mass of the dual cell around node i (half cells at both ends);
//! * `node_weight[i]`  = cell_mass[i] / (n omega_n h), the divisor of the
//!   conservative operator row at node i.
//!
//! With node masses tied to operator rows by cell_mass = n omega_n h *
//! node_weight, the discrete operator is symmetric in the mass inner product
//! and `h1_inner(u, u) = <A0 u, u>_mass` holds to round-off for Dirichlet
//! fields; everything downstream (Maxwell identity, energy gradient) leans
//! on that identity.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{model_volume, SpaceFormParams};
use crate::tridiag::{TridiagonalFactor, TridiagonalSystem};

/// One radial scalar function sampled on the nodes of a grid.
///
/// Fields representing H^1 elements must vanish at the last node; sampled
/// coefficient functions (weights, comparison profiles) need not.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadialField(pub Vec<f64>);

impl RadialField {
    pub fn zeros(n_nodes: usize) -> Self {
        Self(vec![0.0; n_nodes])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    /// Force the Dirichlet value at the truncation radius.
    pub fn zero_dirichlet(&mut self) {
        if let Some(last) = self.0.last_mut() {
            *last = 0.0;
        }
    }

    pub fn scale(&mut self, a: f64) {
        for v in &mut self.0 {
            *v *= a;
        }
    }

    pub fn scaled(&self, a: f64) -> Self {
        Self(self.0.iter().map(|v| a * v).collect())
    }

    /// self += a * other
    pub fn axpy(&mut self, a: f64, other: &Self) {
        assert_eq!(self.len(), other.len());
        for (v, o) in self.0.iter_mut().zip(&other.0) {
            *v += a * o;
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut out = self.clone();
        out.axpy(1.0, other);
        out
    }

    pub fn sub(&self, other: &Self) -> Self {
        let mut out = self.clone();
        out.axpy(-1.0, other);
        out
    }

    /// Pointwise product.
    pub fn mul(&self, other: &Self) -> Self {
        assert_eq!(self.len(), other.len());
        Self(self.0.iter().zip(&other.0).map(|(a, b)| a * b).collect())
    }

    /// Pointwise clamp of every value into [-b, b].
    pub fn clamp_abs(&self, b: f64) -> Self {
        Self(self.0.iter().map(|v| v.clamp(-b, b)).collect())
    }

    pub fn sup_norm(&self) -> f64 {
        self.0.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    pub fn min_value(&self) -> f64 {
        self.0.iter().fold(f64::INFINITY, |m, &v| m.min(v))
    }

    pub fn max_value(&self) -> f64 {
        self.0.iter().fold(f64::NEG_INFINITY, |m, &v| m.max(v))
    }

    pub fn all_finite(&self) -> bool {
        self.0.iter().all(|v| v.is_finite())
    }
}

impl std::ops::Index<usize> for RadialField {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

impl std::ops::IndexMut<usize> for RadialField {
    fn index_mut(&mut self, i: usize) -> &mut f64 {
        &mut self.0[i]
    }
}

/// Truncated radial mesh with the volume weight baked into quadrature and
/// operators.
#[derive(Debug, Clone)]
pub struct RadialGrid {
    pub params: SpaceFormParams,
    pub r_max: f64,
    /// Number of cells N; nodes are 0..=N.
    pub n_cells: usize,
    pub h: f64,
    half_weight: Vec<f64>,
    node_weight: Vec<f64>,
    cell_mass: Vec<f64>,
    angular: f64,
}

/// Relative tolerance of the grid-mass vs model-volume consistency check.
const MASS_CONSISTENCY_RTOL: f64 = 1e-6;

impl RadialGrid {
    pub fn build(params: SpaceFormParams, r_max: f64, n_cells: usize) -> Result<Self> {
        if !r_max.is_finite() || r_max <= 0.0 {
            return Err(Error::Config(format!("R_max must be positive, got {r_max}")));
        }
        if n_cells < 16 {
            return Err(Error::Config(format!(
                "grid needs at least 16 cells, got {n_cells}"
            )));
        }
        let h = r_max / n_cells as f64;
        let angular = params.sphere_factor();

        let half_weight: Vec<f64> = (0..n_cells)
            .map(|i| params.radial_weight((i as f64 + 0.5) * h))
            .collect();

        // Exact dual-cell masses by per-cell Simpson; half cells at the ends.
        let cell_simpson = |a: f64, b: f64| {
            let mid = 0.5 * (a + b);
            (b - a) / 6.0
                * (params.radial_weight(a) + 4.0 * params.radial_weight(mid) + params.radial_weight(b))
        };
        let mut cell_mass = Vec::with_capacity(n_cells + 1);
        cell_mass.push(angular * cell_simpson(0.0, 0.5 * h));
        for i in 1..n_cells {
            let r = i as f64 * h;
            cell_mass.push(angular * cell_simpson(r - 0.5 * h, r + 0.5 * h));
        }
        cell_mass.push(angular * cell_simpson(r_max - 0.5 * h, r_max));

        let node_weight: Vec<f64> = cell_mass.iter().map(|m| m / (angular * h)).collect();

        let grid = Self {
            params,
            r_max,
            n_cells,
            h,
            half_weight,
            node_weight,
            cell_mass,
            angular,
        };

        let total: f64 = grid.cell_mass.iter().sum();
        let volume = model_volume(params, r_max)?;
        if (total - volume).abs() > MASS_CONSISTENCY_RTOL * volume {
            return Err(Error::Config(format!(
                "grid mass {total} disagrees with model volume {volume}"
            )));
        }
        Ok(grid)
    }

    pub fn node_count(&self) -> usize {
        self.n_cells + 1
    }

    pub fn radius(&self, i: usize) -> f64 {
        i as f64 * self.h
    }

    pub fn radii(&self) -> Vec<f64> {
        (0..self.node_count()).map(|i| self.radius(i)).collect()
    }

    /// Quadrature mass of node i, angular factor included.
    pub fn cell_mass(&self, i: usize) -> f64 {
        self.cell_mass[i]
    }

    pub fn total_mass(&self) -> f64 {
        self.cell_mass.iter().sum()
    }

    pub fn sample<F: Fn(f64) -> f64>(&self, f: F) -> RadialField {
        RadialField((0..self.node_count()).map(|i| f(self.radius(i))).collect())
    }

    pub fn check_field(&self, f: &RadialField) -> Result<()> {
        if f.len() != self.node_count() {
            return Err(Error::GridMismatch {
                expected: self.node_count(),
                found: f.len(),
            });
        }
        Ok(())
    }

    /// int_M f dv_g for the radial profile f.
    pub fn integrate(&self, f: &RadialField) -> Result<f64> {
        self.check_field(f)?;
        Ok(self
            .cell_mass
            .iter()
            .zip(&f.0)
            .map(|(m, v)| m * v)
            .sum())
    }

    /// Mass inner product <u, v> = int u v dv_g.
    pub fn mass_inner(&self, u: &RadialField, v: &RadialField) -> Result<f64> {
        self.check_field(u)?;
        self.check_field(v)?;
        Ok(self
            .cell_mass
            .iter()
            .zip(u.0.iter().zip(&v.0))
            .map(|(m, (a, b))| m * a * b)
            .sum())
    }

    /// H^1 inner product: gradient part on half nodes plus mass part on nodes.
    pub fn h1_inner(&self, u: &RadialField, v: &RadialField) -> Result<f64> {
        self.check_field(u)?;
        self.check_field(v)?;
        let mut grad = 0.0;
        for i in 0..self.n_cells {
            grad += self.half_weight[i] * (u[i + 1] - u[i]) * (v[i + 1] - v[i]);
        }
        grad *= self.angular / self.h;
        let mass: f64 = self
            .cell_mass
            .iter()
            .zip(u.0.iter().zip(&v.0))
            .map(|(m, (a, b))| m * a * b)
            .sum();
        Ok(grad + mass)
    }

    pub fn h1_norm(&self, u: &RadialField) -> Result<f64> {
        Ok(self.h1_inner(u, u)?.max(0.0).sqrt())
    }

    /// Residual of the conservative operator -Delta u + u + V u.
    ///
    /// Row 0 uses a zero flux weight below the origin; row N is the
    /// Dirichlet row and returns u_N itself.
    pub fn apply_operator(&self, u: &RadialField, potential: Option<&RadialField>) -> Result<RadialField> {
        self.check_field(u)?;
        if let Some(v) = potential {
            self.check_field(v)?;
            if v.min_value() < 0.0 {
                return Err(Error::Domain(
                    "operator potential must be nonnegative".into(),
                ));
            }
        }
        let n = self.n_cells;
        let inv_h2 = 1.0 / (self.h * self.h);
        let mut out = RadialField::zeros(self.node_count());
        for i in 0..n {
            let flux_hi = self.half_weight[i] * (u[i + 1] - u[i]);
            let flux_lo = if i == 0 {
                0.0
            } else {
                self.half_weight[i - 1] * (u[i] - u[i - 1])
            };
            let vpot = potential.map_or(0.0, |v| v[i]);
            out[i] = -(flux_hi - flux_lo) * inv_h2 / self.node_weight[i] + (1.0 + vpot) * u[i];
        }
        out[n] = u[n];
        Ok(out)
    }

    /// Matrix form of `apply_operator`: tridiagonal, M-matrix, symmetric in
    /// the mass inner product, identity Dirichlet row at the last node.
    pub fn assemble_system(&self, potential: Option<&RadialField>) -> Result<TridiagonalSystem> {
        if let Some(v) = potential {
            self.check_field(v)?;
            if v.min_value() < 0.0 {
                return Err(Error::Domain(
                    "operator potential must be nonnegative".into(),
                ));
            }
        }
        let n = self.n_cells;
        let inv_h2 = 1.0 / (self.h * self.h);
        let mut sub = vec![0.0; n + 1];
        let mut diag = vec![0.0; n + 1];
        let mut sup = vec![0.0; n + 1];
        for i in 0..n {
            let scale = inv_h2 / self.node_weight[i];
            let w_hi = self.half_weight[i];
            let w_lo = if i == 0 { 0.0 } else { self.half_weight[i - 1] };
            if i > 0 {
                sub[i] = -w_lo * scale;
            }
            sup[i] = -w_hi * scale;
            let vpot = potential.map_or(0.0, |v| v[i]);
            diag[i] = (w_hi + w_lo) * scale + 1.0 + vpot;
        }
        diag[n] = 1.0;
        Ok(TridiagonalSystem::new(sub, diag, sup))
    }

    /// Factorization of the base operator (V = 0), reusable across solves.
    pub fn base_factor(&self) -> Result<TridiagonalFactor> {
        self.assemble_system(None)?.factor()
    }

    /// Solve (-Delta + 1 + V) x = rhs with the Dirichlet value forced to 0.
    pub fn solve_dirichlet(&self, factor: &TridiagonalFactor, rhs: &RadialField) -> Result<RadialField> {
        self.check_field(rhs)?;
        let mut r = rhs.0.clone();
        *r.last_mut().unwrap() = 0.0;
        Ok(RadialField(factor.solve(&r)))
    }

    /// Restriction onto a grid with half the cells (every second node).
    pub fn restrict(&self, u: &RadialField) -> Result<RadialField> {
        self.check_field(u)?;
        if self.n_cells % 2 != 0 {
            return Err(Error::Config("restriction needs an even cell count".into()));
        }
        Ok(RadialField(
            (0..=self.n_cells / 2).map(|i| u[2 * i]).collect(),
        ))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::static_profile_w;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn params(n: u32, c: f64) -> SpaceFormParams {
        SpaceFormParams::new(n, c).unwrap()
    }

    fn random_dirichlet_field(grid: &RadialGrid, rng: &mut ChaCha8Rng) -> RadialField {
        let r_max = grid.r_max;
        let bumps: Vec<(f64, f64, f64)> = (0..3)
            .map(|_| {
                (
                    rng.gen_range(0.2..1.0),
                    rng.gen_range(0.1 * r_max..0.6 * r_max),
                    rng.gen_range(0.4..1.2),
                )
            })
            .collect();
        let mut f = grid.sample(|r| {
            let cutoff = {
                let x = r / r_max;
                (1.0 - x * x).max(0.0).powi(2)
            };
            cutoff
                * bumps
                    .iter()
                    .map(|(a, c0, w)| a * (-((r - c0) / w).powi(2)).exp())
                    .sum::<f64>()
        });
        f.zero_dirichlet();
        f
    }

    #[test]
    fn euclidean_mass_matches_ball_volume() {
        let g = RadialGrid::build(params(3, 0.0), 10.0, 1000).unwrap();
        let exact = 4.0 * PI / 3.0 * 1000.0;
        assert!((g.total_mass() - exact).abs() / exact < 1e-6);
    }

    #[test]
    fn hyperbolic_mass_matches_model_volume() {
        let p = params(3, -1.0);
        let g = RadialGrid::build(p, 10.0, 1000).unwrap();
        let v = model_volume(p, 10.0).unwrap();
        assert!((g.total_mass() - v).abs() / v < 1e-6);
    }

    #[test]
    fn too_few_cells_is_a_config_error() {
        assert!(RadialGrid::build(params(3, 0.0), 10.0, 4).is_err());
    }

    #[test]
    fn integrate_zero_and_ones() {
        let g = RadialGrid::build(params(4, -0.5), 8.0, 500).unwrap();
        assert_eq!(g.integrate(&RadialField::zeros(g.node_count())).unwrap(), 0.0);
        let ones = g.sample(|_| 1.0);
        let v = model_volume(g.params, g.r_max).unwrap();
        assert!((g.integrate(&ones).unwrap() - v).abs() / v < 1e-6);
    }

    #[test]
    fn integrate_gaussian_against_dense_simpson_oracle() {
        // int_{R^3} e^{-|x|^2} truncated to the ball of radius 15.
        let g = RadialGrid::build(params(3, 0.0), 15.0, 16000).unwrap();
        let f = g.sample(|r| (-r * r).exp());
        let ours = g.integrate(&f).unwrap();
        let oracle =
            4.0 * PI * crate::quad::simpson(|r| r * r * (-r * r).exp(), 0.0, 15.0, 30000);
        assert!((ours - oracle).abs() / oracle < 1e-6, "{ours} vs {oracle}");
        assert!((oracle - PI.powf(1.5)).abs() < 1e-9, "truncation sanity");
    }

    #[test]
    fn h1_inner_symmetric_and_zero_on_zero() {
        let g = RadialGrid::build(params(3, -1.0), 6.0, 400).unwrap();
        let z = RadialField::zeros(g.node_count());
        assert_eq!(g.h1_inner(&z, &z).unwrap(), 0.0);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..10 {
            let u = random_dirichlet_field(&g, &mut rng);
            let v = random_dirichlet_field(&g, &mut rng);
            let a = g.h1_inner(&u, &v).unwrap();
            let b = g.h1_inner(&v, &u).unwrap();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn h1_inner_hat_function_analytic_value() {
        // u = max(0, 1 - r) on c = 0, n = 3:
        // 4 pi int_0^1 (1 + (1-r)^2) r^2 dr = 4 pi (1/3 + 1/30).
        let g = RadialGrid::build(params(3, 0.0), 5.0, 2000).unwrap();
        let u = g.sample(|r| (1.0 - r).max(0.0));
        let ours = g.h1_inner(&u, &u).unwrap();
        let exact = 4.0 * PI * (1.0 / 3.0 + 1.0 / 30.0);
        assert!((ours - exact).abs() / exact < 1e-4, "{ours} vs {exact}");
    }

    #[test]
    fn operator_zero_field() {
        let g = RadialGrid::build(params(3, 0.0), 10.0, 200).unwrap();
        let z = RadialField::zeros(g.node_count());
        let out = g.apply_operator(&z, None).unwrap();
        assert_eq!(out.sup_norm(), 0.0);
    }

    #[test]
    fn operator_rejects_negative_potential() {
        let g = RadialGrid::build(params(3, 0.0), 10.0, 100).unwrap();
        let u = g.sample(|r| (-r).exp());
        let v = g.sample(|r| if r > 5.0 { -1.0 } else { 0.0 });
        assert!(g.apply_operator(&u, Some(&v)).is_err());
    }

    /// Discrete Laplacian applied to the static profile w_c recovers the
    /// rigidity identity Delta w_c = 1 in the interior.
    #[test]
    fn discrete_laplacian_of_static_profile_is_one() {
        let p = params(3, -1.0);
        let g = RadialGrid::build(p, 5.0, 4000).unwrap();
        let w = g.sample(|r| static_profile_w(p, r).unwrap());
        let applied = g.apply_operator(&w, None).unwrap();
        let mut max_dev = 0.0_f64;
        for i in 0..g.n_cells {
            // apply = -Delta w + w, so Delta w = w - apply
            let lap = w[i] - applied[i];
            max_dev = max_dev.max((lap - 1.0).abs());
        }
        assert!(max_dev < 1e-4, "max |Delta w_c - 1| = {max_dev}");
    }

    #[test]
    fn operator_matches_symbolic_form_on_smooth_field() {
        // u = (1 + r^2) e^{-r^2}; u' = -2 r^3 e^{-r^2};
        // u'' = (-6 r^2 + 4 r^4) e^{-r^2}.
        let p = params(3, -1.0);
        let g = RadialGrid::build(p, 8.0, 2000).unwrap();
        let u = g.sample(|r| (1.0 + r * r) * (-r * r).exp());
        let applied = g.apply_operator(&u, None).unwrap();
        for k in 1..=10 {
            let i = k * g.n_cells / 16;
            let r = g.radius(i);
            let e = (-r * r).exp();
            let du = -2.0 * r.powi(3) * e;
            let ddu = (-6.0 * r * r + 4.0 * r.powi(4)) * e;
            let ct = crate::geometry::cotangent_coeff(p, r).unwrap();
            let exact = -ddu - (p.n as f64 - 1.0) * ct * du + u[i];
            let rel = (applied[i] - exact).abs() / exact.abs().max(1e-12);
            assert!(rel < 2e-4, "node {i}: {} vs {exact}", applied[i]);
        }
    }

    #[test]
    fn operator_consistency_order_at_least_1_9() {
        for &c in &[0.0, -1.0] {
            let p = params(3, c);
            let sups: Vec<f64> = [500usize, 1000, 2000]
                .iter()
                .map(|&n| {
                    let g = RadialGrid::build(p, 8.0, n).unwrap();
                    let u = g.sample(|r| (1.0 + r * r) * (-r * r).exp());
                    let applied = g.apply_operator(&u, None).unwrap();
                    let mut sup = 0.0_f64;
                    for i in 1..g.n_cells {
                        let r = g.radius(i);
                        let e = (-r * r).exp();
                        let du = -2.0 * r.powi(3) * e;
                        let ddu = (-6.0 * r * r + 4.0 * r.powi(4)) * e;
                        let ct = crate::geometry::cotangent_coeff(p, r).unwrap();
                        let exact = -ddu - (p.n as f64 - 1.0) * ct * du + u[i];
                        sup = sup.max((applied[i] - exact).abs());
                    }
                    sup
                })
                .collect();
            let o1 = (sups[0] / sups[1]).log2();
            let o2 = (sups[1] / sups[2]).log2();
            assert!(o1 >= 1.9 && o2 >= 1.9, "orders {o1:.3}, {o2:.3} at c = {c}");
        }
    }

    #[test]
    fn assemble_inverse_consistency() {
        let g = RadialGrid::build(params(4, -0.7), 7.0, 800).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let u = random_dirichlet_field(&g, &mut rng);
        let rhs = g.apply_operator(&u, None).unwrap();
        let sys = g.assemble_system(None).unwrap();
        let x = RadialField(sys.solve(rhs.as_slice()).unwrap());
        let diff = x.sub(&u);
        assert!(diff.sup_norm() < 1e-10, "round trip error {}", diff.sup_norm());
    }

    #[test]
    fn assembled_system_is_m_matrix_and_monotone() {
        let g = RadialGrid::build(params(3, -1.0), 8.0, 300).unwrap();
        let sys = g.assemble_system(None).unwrap();
        assert!(sys.is_m_matrix_sign_pattern());
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..100 {
            let rhs: Vec<f64> = (0..g.node_count()).map(|_| rng.gen_range(0.0..1.0)).collect();
            let x = sys.solve(&rhs).unwrap();
            let min = x.iter().fold(f64::INFINITY, |m, &v| m.min(v));
            assert!(min >= -1e-12, "maximum principle violated: {min}");
        }
    }

    /// h1_inner(u, u) agrees with the operator energy <A0 u, u>_mass and
    /// with an independently written midpoint-differencing sum.
    #[test]
    fn norm_and_operator_are_energy_consistent() {
        let g = RadialGrid::build(params(3, -1.0), 8.0, 1200).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..5 {
            let u = random_dirichlet_field(&g, &mut rng);
            let norm2 = g.h1_inner(&u, &u).unwrap();

            let au = g.apply_operator(&u, None).unwrap();
            let op_energy = g.mass_inner(&au, &u).unwrap();
            assert!(
                (norm2 - op_energy).abs() <= 1e-10 * norm2,
                "{norm2} vs {op_energy}"
            );

            // Longhand midpoint-differenced |u'|^2 + u^2 with the same weights.
            let mut longhand = 0.0;
            for i in 0..g.n_cells {
                let slope = (u[i + 1] - u[i]) / g.h;
                longhand += g.angular * g.half_weight[i] * slope * slope * g.h;
            }
            for i in 0..g.node_count() {
                longhand += g.cell_mass(i) * u[i] * u[i];
            }
            assert!((norm2 - longhand).abs() <= 1e-10 * norm2);
        }
    }

    #[test]
    fn restriction_picks_even_nodes() {
        let g = RadialGrid::build(params(3, 0.0), 10.0, 100).unwrap();
        let u = g.sample(|r| r);
        let coarse = g.restrict(&u).unwrap();
        assert_eq!(coarse.len(), 51);
        assert!((coarse[1] - 0.2).abs() < 1e-14);
    }
}
