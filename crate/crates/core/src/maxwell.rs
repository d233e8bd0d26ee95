//! The reduction map u -> phi_u and the comparison principle.
//!
//! phi_u is the unique solution of the Maxwell equation
//! -Delta phi + phi = q u^2. On the discrete level it is one tridiagonal
//! solve against the base operator, and because the operator is an M-matrix
//! symmetric in the mass inner product, the identity
//! ||phi_u||_{H^1}^2 = q int phi_u u^2 and the order-preservation
//! properties hold essentially to round-off.

use crate::error::{Error, Result};
use crate::grid::{RadialField, RadialGrid};
use crate::tridiag::TridiagonalFactor;

/// Solve the Maxwell equation for a given source field.
pub fn solve_phi(grid: &RadialGrid, u: &RadialField, q: f64) -> Result<RadialField> {
    let factor = grid.base_factor()?;
    solve_phi_with(grid, &factor, u, q)
}

/// Same as [`solve_phi`] with a precomputed base factorization.
pub fn solve_phi_with(
    grid: &RadialGrid,
    base: &TridiagonalFactor,
    u: &RadialField,
    q: f64,
) -> Result<RadialField> {
    if !(q > 0.0) {
        return Err(Error::Domain(format!("coupling q must be positive, got {q}")));
    }
    grid.check_field(u)?;
    let rhs = RadialField(u.as_slice().iter().map(|v| q * v * v).collect());
    grid.solve_dirichlet(base, &rhs)
}

/// Residual field of the Schrödinger operator L(u) = -Delta u + u + e phi_u u.
pub fn schrodinger_apply(grid: &RadialGrid, u: &RadialField, e: f64, q: f64) -> Result<RadialField> {
    if !(e > 0.0) {
        return Err(Error::Domain(format!("coupling e must be positive, got {e}")));
    }
    let phi = solve_phi(grid, u, q)?;
    let potential = phi.scaled(e);
    grid.apply_operator(u, Some(&potential))
}

/// Outcome of the comparison-principle checks for one pair of fields.
#[derive(Debug, Clone)]
pub struct ComparisonReport {
    /// Whether L(u) <= L(v) held entrywise (the hypothesis of part (i)).
    pub operator_ordered: bool,
    /// max_i (u_i - v_i)_+ when the hypothesis held; None otherwise.
    pub order_violation: Option<f64>,
    /// Whether 0 <= u <= v held entrywise (the hypothesis of part (ii)).
    pub monotone_pair: bool,
    /// max_i (phi_u_i - phi_v_i)_+ when 0 <= u <= v; None otherwise.
    pub phi_violation: Option<f64>,
}

/// Report-only check of the two comparison statements.
pub fn check_comparison(
    grid: &RadialGrid,
    u: &RadialField,
    v: &RadialField,
    e: f64,
    q: f64,
) -> Result<ComparisonReport> {
    grid.check_field(u)?;
    grid.check_field(v)?;

    let lu = schrodinger_apply(grid, u, e, q)?;
    let lv = schrodinger_apply(grid, v, e, q)?;
    let operator_ordered = lu
        .as_slice()
        .iter()
        .zip(lv.as_slice())
        .all(|(a, b)| a <= b);
    let order_violation = operator_ordered.then(|| {
        u.as_slice()
            .iter()
            .zip(v.as_slice())
            .fold(0.0_f64, |m, (a, b)| m.max(a - b))
    });

    let monotone_pair = u
        .as_slice()
        .iter()
        .zip(v.as_slice())
        .all(|(a, b)| 0.0 <= *a && a <= b);
    let phi_violation = if monotone_pair {
        let pu = solve_phi(grid, u, q)?;
        let pv = solve_phi(grid, v, q)?;
        Some(
            pu.as_slice()
                .iter()
                .zip(pv.as_slice())
                .fold(0.0_f64, |m, (a, b)| m.max(a - b)),
        )
    } else {
        None
    };

    Ok(ComparisonReport {
        operator_ordered,
        order_violation,
        monotone_pair,
        phi_violation,
    })
}

/// Relative residual of the Maxwell energy identity
/// ||phi_u||_{H^1}^2 = q int phi_u u^2.
pub fn maxwell_identity_residual(grid: &RadialGrid, u: &RadialField, q: f64) -> Result<f64> {
    let phi = solve_phi(grid, u, q)?;
    let lhs = grid.h1_inner(&phi, &phi)?;
    let u2 = u.mul(u);
    let rhs = q * grid.mass_inner(&phi, &u2)?;
    let scale = lhs.abs().max(rhs.abs()).max(f64::MIN_POSITIVE);
    Ok((lhs - rhs).abs() / scale)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::SpaceFormParams;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn grid(c: f64, n: u32, r_max: f64, cells: usize) -> RadialGrid {
        RadialGrid::build(SpaceFormParams::new(n, c).unwrap(), r_max, cells).unwrap()
    }

    fn random_bump(g: &RadialGrid, rng: &mut ChaCha8Rng) -> RadialField {
        let r_max = g.r_max;
        let bumps: Vec<(f64, f64, f64)> = (0..3)
            .map(|_| {
                (
                    rng.gen_range(0.1..1.0),
                    rng.gen_range(0.1 * r_max..0.6 * r_max),
                    rng.gen_range(0.4..1.3),
                )
            })
            .collect();
        let mut f = g.sample(|r| {
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
    fn zero_source_gives_zero_potential() {
        let g = grid(-1.0, 3, 8.0, 300);
        let phi = solve_phi(&g, &RadialField::zeros(g.node_count()), 1.0).unwrap();
        assert_eq!(phi.sup_norm(), 0.0);
    }

    #[test]
    fn rejects_nonpositive_coupling() {
        let g = grid(0.0, 3, 8.0, 100);
        let u = g.sample(|r| (-r).exp());
        assert!(solve_phi(&g, &u, 0.0).is_err());
        assert!(solve_phi(&g, &u, -1.0).is_err());
    }

    #[test]
    fn quadratic_homogeneity_in_source() {
        let g = grid(0.0, 3, 10.0, 500);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let u = random_bump(&g, &mut rng);
        let u2 = u.scaled(2.0);
        let phi1 = solve_phi(&g, &u, 1.0).unwrap();
        let phi2 = solve_phi(&g, &u2, 1.0).unwrap();
        let diff = phi2.sub(&phi1.scaled(4.0));
        assert!(diff.sup_norm() < 1e-12 * phi2.sup_norm().max(1.0));
    }

    #[test]
    fn maxwell_identity_near_exact() {
        let g = grid(0.0, 3, 15.0, 2000);
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let u = random_bump(&g, &mut rng);
        let res = maxwell_identity_residual(&g, &u, 1.0).unwrap();
        assert!(res < 1e-10, "identity residual {res}");
    }

    #[test]
    fn potential_is_nonnegative() {
        let g = grid(-0.5, 4, 8.0, 600);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..20 {
            // arbitrary sign sources: phi depends on u^2 only
            let mut u = random_bump(&g, &mut rng);
            u.scale(if rng.gen_bool(0.5) { -1.0 } else { 1.0 });
            let phi = solve_phi(&g, &u, 2.0).unwrap();
            assert!(phi.min_value() >= -1e-14);
        }
    }

    #[test]
    fn charge_interaction_monotonicity() {
        // int (u phi_u - v phi_v)(u - v) >= 0
        let g = grid(0.0, 3, 10.0, 500);
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        for _ in 0..50 {
            let u = random_bump(&g, &mut rng);
            let v = random_bump(&g, &mut rng);
            let pu = solve_phi(&g, &u, 1.0).unwrap();
            let pv = solve_phi(&g, &v, 1.0).unwrap();
            let integrand = RadialField(
                (0..g.node_count())
                    .map(|i| (u[i] * pu[i] - v[i] * pv[i]) * (u[i] - v[i]))
                    .collect(),
            );
            let val = g.integrate(&integrand).unwrap();
            assert!(val >= -1e-12, "monotonicity violated: {val}");
        }
    }

    #[test]
    fn interaction_term_is_convex_along_segments() {
        // t -> int phi_{w_t} w_t^2 with w_t = t u + (1-t) v, midpoint test.
        let g = grid(0.0, 3, 10.0, 400);
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let interaction = |w: &RadialField| {
            let phi = solve_phi(&g, w, 1.0).unwrap();
            g.mass_inner(&phi, &w.mul(w)).unwrap()
        };
        for _ in 0..20 {
            let u = random_bump(&g, &mut rng);
            let v = random_bump(&g, &mut rng);
            let at = |t: f64| {
                let mut w = u.scaled(t);
                w.axpy(1.0 - t, &v);
                interaction(&w)
            };
            let vals: Vec<f64> = [0.0, 0.25, 0.5, 0.75, 1.0].iter().map(|&t| at(t)).collect();
            for k in 1..4 {
                let mid = vals[k];
                let avg = 0.5 * (vals[k - 1] + vals[k + 1]);
                assert!(mid <= avg + 1e-12 * avg.abs().max(1.0), "not convex at node {k}");
            }
        }
    }

    #[test]
    fn comparison_equal_fields() {
        let g = grid(0.0, 3, 8.0, 300);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let u = random_bump(&g, &mut rng);
        let rep = check_comparison(&g, &u, &u, 1.0, 1.0).unwrap();
        assert!(rep.operator_ordered);
        assert_eq!(rep.order_violation, Some(0.0));
        assert!(rep.monotone_pair);
        assert_eq!(rep.phi_violation, Some(0.0));
    }

    #[test]
    fn potential_monotone_in_source() {
        let g = grid(-1.0, 3, 8.0, 400);
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        for _ in 0..100 {
            let u = random_bump(&g, &mut rng);
            let v = u.add(&random_bump(&g, &mut rng));
            let rep = check_comparison(&g, &u, &v, 1.0, 1.0).unwrap();
            assert!(rep.monotone_pair);
            assert!(rep.phi_violation.unwrap() <= 1e-12);
        }
    }

    #[test]
    fn operator_ordering_implies_field_ordering() {
        // v = u + (-Delta + 1)^{-1}(bump) makes L(u) <= L(v) provable; the
        // check must then report no ordering violation.
        let g = grid(0.0, 3, 10.0, 500);
        let factor = g.base_factor().unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(37);
        for _ in 0..20 {
            let u = random_bump(&g, &mut rng);
            let bump = random_bump(&g, &mut rng);
            let lift = g.solve_dirichlet(&factor, &bump).unwrap();
            let v = u.add(&lift);
            let rep = check_comparison(&g, &u, &v, 1.0, 1.0).unwrap();
            assert!(rep.operator_ordered, "constructed hypothesis must hold");
            assert!(rep.order_violation.unwrap() <= 1e-12);
        }
    }
}
