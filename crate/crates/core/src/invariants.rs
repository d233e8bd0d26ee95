//! The `check` suite: one runnable item per module-level invariant.
//!
//! Each check returns a pass flag and a one-line detail; the CLI prints one
//! line per check and exits nonzero if any fails.

use serde::Serialize;

use crate::energy::Problem;
use crate::error::Result;
use crate::experiments::{self, tolerances};
use crate::geometry::{
    cotangent_coeff, metric_coeff, model_volume, static_profile_w, SpaceFormParams,
};
use crate::grid::{RadialField, RadialGrid};
use crate::maxwell::{check_comparison, maxwell_identity_residual, solve_phi};
use crate::model::{
    compute_cf, lambda_tilde, oscillation_level, Nonlinearity, ProblemConfig, RadialWeight,
    RawConfig, Scenario,
};
use crate::sampling::{random_bump_field, random_monotone_pair, stream_rng};
use crate::solvers::minimize;

#[derive(Debug, Clone, Serialize)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

fn check(name: &str, passed: bool, detail: String) -> CheckResult {
    CheckResult {
        name: name.to_string(),
        passed,
        detail,
    }
}

/// Run the full invariant suite. `seed` drives every random draw.
pub fn run_all(seed: u64) -> Result<Vec<CheckResult>> {
    let mut out = Vec::new();

    // -- geometry ----------------------------------------------------------
    {
        let mut rng = stream_rng(seed, 1);
        use rand::Rng;
        let mut worst = 0.0_f64;
        for _ in 0..20 {
            let c: f64 = -rng.gen_range(0.05..4.0);
            let r: f64 = rng.gen_range(0.05..6.0);
            let p = SpaceFormParams::new(3, c)?;
            let d = 1e-5 * r.max(1.0);
            let fd = (metric_coeff(p, r + d)? - metric_coeff(p, r - d)?) / (2.0 * d);
            let exact = metric_coeff(p, r)? * cotangent_coeff(p, r)?;
            worst = worst.max((fd - exact).abs() / exact.abs());
        }
        out.push(check(
            "geometry.derivative_identity",
            worst < 1e-6,
            format!("max rel err of s' = s ct over 20 draws: {worst:.3e}"),
        ));

        let mut strict = true;
        for k in 1..30 {
            let r = 0.2 * k as f64;
            let p = SpaceFormParams::new(4, -0.8)?;
            strict &= metric_coeff(p, r)? > r && cotangent_coeff(p, r)? > 1.0 / r;
        }
        out.push(check(
            "geometry.strict_euclidean_comparison",
            strict,
            "s_c(r) > r and ct_c(r) > 1/r for c < 0".into(),
        ));

        let mut monotone = true;
        for n in 3..=6 {
            let vols: Vec<f64> = [0.0, -0.5, -1.0, -2.0]
                .iter()
                .map(|&c| model_volume(SpaceFormParams::new(n, c).unwrap(), 2.0).unwrap())
                .collect();
            monotone &= vols.windows(2).all(|w| w[1] > w[0]);
        }
        out.push(check(
            "geometry.volume_monotone_in_curvature",
            monotone,
            "V_{c,n}(rho) non-increasing in c".into(),
        ));

        let p = SpaceFormParams::new(3, -1.0)?;
        let g = RadialGrid::build(p, 5.0, 4000)?;
        let w = g.sample(|r| static_profile_w(p, r).unwrap());
        let applied = g.apply_operator(&w, None)?;
        let mut dev = 0.0_f64;
        for i in 0..g.n_cells {
            dev = dev.max((w[i] - applied[i] - 1.0).abs());
        }
        out.push(check(
            "geometry.static_profile_laplacian",
            dev < 1e-4,
            format!("max |Delta w_c - 1| on the interior: {dev:.3e}"),
        ));
    }

    // -- grid ---------------------------------------------------------------
    {
        let p = SpaceFormParams::new(3, -1.0)?;
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
                    let ct = cotangent_coeff(p, r).unwrap();
                    let exact = -ddu - 2.0 * ct * du + u[i];
                    sup = sup.max((applied[i] - exact).abs());
                }
                sup
            })
            .collect();
        let order = f64::min((sups[0] / sups[1]).log2(), (sups[1] / sups[2]).log2());
        out.push(check(
            "grid.consistency_order",
            order >= 1.9,
            format!("observed order over N = 500/1000/2000: {order:.3}"),
        ));

        let g = RadialGrid::build(p, 8.0, 500)?;
        let sys = g.assemble_system(None)?;
        let mut rng = stream_rng(seed, 2);
        use rand::Rng;
        let mut monotone = true;
        for _ in 0..100 {
            let rhs: Vec<f64> = (0..g.node_count()).map(|_| rng.gen_range(0.0..1.0)).collect();
            let x = sys.solve(&rhs)?;
            monotone &= x.iter().all(|&v| v >= -1e-12);
        }
        out.push(check(
            "grid.discrete_maximum_principle",
            monotone && sys.is_m_matrix_sign_pattern(),
            "nonnegative rhs gives nonnegative solutions (100 draws)".into(),
        ));

        let mut rng = stream_rng(seed, 3);
        let mut worst = 0.0_f64;
        for _ in 0..5 {
            let u = random_bump_field(&g, &mut rng, true);
            let norm2 = g.h1_inner(&u, &u)?;
            let au = g.apply_operator(&u, None)?;
            let op = g.mass_inner(&au, &u)?;
            worst = worst.max((norm2 - op).abs() / norm2);
        }
        out.push(check(
            "grid.energy_consistency",
            worst < 1e-10,
            format!("max rel gap between ||u||^2 and <A0 u, u>: {worst:.3e}"),
        ));

        let raw: RawConfig = serde_json::from_str(
            r#"{"space": {"n": 3, "c": 0.0}, "grid": {"r_max": 15.0, "n_cells": 600}}"#,
        )?;
        let cfg = ProblemConfig::resolve(&raw, Scenario::Poisson)?;
        let change = experiments::truncation_diagnostic(&cfg)?;
        out.push(check(
            "grid.truncation_diagnostic",
            change < tolerances::TRUNCATION_H1,
            format!("H^1 change under R_max doubling: {change:.3e}"),
        ));
    }

    // -- maxwell -------------------------------------------------------------
    {
        let g = RadialGrid::build(SpaceFormParams::new(3, 0.0)?, 15.0, 1000)?;
        let mut rng = stream_rng(seed, 4);
        let mut worst = 0.0_f64;
        for _ in 0..50 {
            let u = random_bump_field(&g, &mut rng, true);
            worst = worst.max(maxwell_identity_residual(&g, &u, 1.0)?);
        }
        out.push(check(
            "maxwell.energy_identity",
            worst < 1e-10,
            format!("max rel residual over 50 fields: {worst:.3e}"),
        ));

        let mut phi_ok = true;
        let mut mono_worst = 0.0_f64;
        for _ in 0..50 {
            let u = random_bump_field(&g, &mut rng, true);
            let v = random_bump_field(&g, &mut rng, true);
            let pu = solve_phi(&g, &u, 1.0)?;
            let pv = solve_phi(&g, &v, 1.0)?;
            phi_ok &= pu.min_value() >= -1e-14 && pv.min_value() >= -1e-14;
            let integrand = RadialField(
                (0..g.node_count())
                    .map(|i| (u[i] * pu[i] - v[i] * pv[i]) * (u[i] - v[i]))
                    .collect(),
            );
            let val = g.integrate(&integrand)?;
            mono_worst = mono_worst.min(val);
        }
        out.push(check(
            "maxwell.nonnegative_potential",
            phi_ok,
            "phi_u >= 0 for 100 fields".into(),
        ));
        out.push(check(
            "maxwell.interaction_monotone",
            mono_worst >= -1e-12,
            format!("min of int (u phi_u - v phi_v)(u - v): {mono_worst:.3e}"),
        ));

        let mut convex = true;
        for _ in 0..20 {
            let u = random_bump_field(&g, &mut rng, true);
            let v = random_bump_field(&g, &mut rng, true);
            let at = |t: f64| -> Result<f64> {
                let mut w = u.scaled(t);
                w.axpy(1.0 - t, &v);
                let phi = solve_phi(&g, &w, 1.0)?;
                g.mass_inner(&phi, &w.mul(&w))
            };
            let vals = [at(0.0)?, at(0.25)?, at(0.5)?, at(0.75)?, at(1.0)?];
            for k in 1..4 {
                convex &= vals[k] <= 0.5 * (vals[k - 1] + vals[k + 1]) + 1e-12;
            }
        }
        out.push(check(
            "maxwell.interaction_convex",
            convex,
            "midpoint convexity of t -> int phi w^2 (20 segments)".into(),
        ));

        let mut order_ok = true;
        let mut phi_order_worst = 0.0_f64;
        for _ in 0..20 {
            let (u, v) = random_monotone_pair(&g, &mut rng);
            let rep = check_comparison(&g, &u, &v, 1.0, 1.0)?;
            order_ok &= rep.monotone_pair;
            if let Some(viol) = rep.phi_violation {
                phi_order_worst = phi_order_worst.max(viol);
            }
        }
        out.push(check(
            "maxwell.comparison_principle",
            order_ok && phi_order_worst <= 1e-12,
            format!("max phi-order violation: {phi_order_worst:.3e}"),
        ));
    }

    // -- model ----------------------------------------------------------------
    {
        let nl = Nonlinearity::SublinearLog;
        let small = nl.eval_f(1e-8) / 1e-8;
        let large = nl.eval_f(1e8) / 1e8;
        let f3 = nl.eval_big_f(1.0);
        out.push(check(
            "model.sublinear_hypotheses",
            small < 1e-6 && large < 1e-6 && f3 > 0.0,
            format!("f(s)/s at 1e-8: {small:.3e}, at 1e8: {large:.3e}, F(1) = {f3:.4}"),
        ));

        let osc = Nonlinearity::oscillatory_default();
        let mut growth_ok = true;
        let mut prev = 0.0;
        for j in 1..=8 {
            let s = 1.0 / (2.0 * std::f64::consts::PI * j as f64);
            let v = osc.eval_big_f(s) / (s * s);
            growth_ok &= v > prev;
            prev = v;
        }
        let mut troughs_ok = true;
        for j in 1..=10 {
            troughs_ok &= osc.eval_f(oscillation_level(j)?.s_j) < 0.0;
        }
        out.push(check(
            "model.oscillatory_hypotheses",
            growth_ok && troughs_ok,
            "F(s)/s^2 grows along 1/(2 pi j); f(s_j) < 0".into(),
        ));

        let mut interlace = true;
        for j in 1..=8 {
            let lv = oscillation_level(j)?;
            let nx = oscillation_level(j + 1)?;
            interlace &= 0.0 < nx.theta_j
                && nx.theta_j < lv.eta_j
                && lv.eta_j < lv.s_j
                && lv.s_j < lv.theta_j
                && lv.theta_j < 1.0;
        }
        out.push(check(
            "model.oscillation_interlacing",
            interlace,
            "theta_{j+1} < eta_j < s_j < theta_j for j = 1..8".into(),
        ));

        // weight integrability, stable under domain doubling
        let w = RadialWeight::Gaussian { amplitude: 1.0, sigma: 1.0 };
        let p = SpaceFormParams::new(3, 0.0)?;
        let g1 = RadialGrid::build(p, 15.0, 1500)?;
        let g2 = RadialGrid::build(p, 30.0, 3000)?;
        let int1 = g1.integrate(&g1.sample(|r| w.eval(r)))?;
        let int2 = g2.integrate(&g2.sample(|r| w.eval(r)))?;
        let sq1 = g1.integrate(&g1.sample(|r| w.eval(r).powi(2)))?;
        let sq2 = g2.integrate(&g2.sample(|r| w.eval(r).powi(2)))?;
        let stable = (int2 - int1).abs() < 1e-8 && (sq2 - sq1).abs() < 1e-8;
        out.push(check(
            "model.weight_integrability",
            stable && int1.is_finite() && sq1.is_finite(),
            format!("L1 change {:.3e}, L2 change {:.3e}", int2 - int1, sq2 - sq1),
        ));

        let cf = compute_cf(&Nonlinearity::SublinearLog)?;
        let lt = lambda_tilde(&Nonlinearity::SublinearLog, &w)?;
        out.push(check(
            "model.cf_and_lambda_tilde",
            cf >= 2.0_f64.ln() && (lt - 1.0 / cf).abs() < 1e-12,
            format!("c_f = {cf:.6}, lambda_tilde = {lt:.6}"),
        ));
    }

    // -- energy -----------------------------------------------------------------
    {
        let g = RadialGrid::build(SpaceFormParams::new(3, 0.0)?, 12.0, 1000)?;
        let w = RadialWeight::Gaussian { amplitude: 1.0, sigma: 1.0 };
        let mut worst = 0.0_f64;
        for nl in [Nonlinearity::Poisson, Nonlinearity::SublinearLog] {
            let signed = matches!(nl, Nonlinearity::SublinearLog);
            let p = Problem::new(g.clone(), &w, nl, 1.0, 1.0, 0.8)?;
            let mut rng = stream_rng(seed, 6);
            for _ in 0..20 {
                let u = random_bump_field(&g, &mut rng, signed);
                let v = random_bump_field(&g, &mut rng, signed);
                let grad = p.gradient(&u)?;
                let exact = p.directional_derivative(&grad, &v);
                let t = 1e-5;
                let mut up = u.clone();
                up.axpy(t, &v);
                let mut dn = u.clone();
                dn.axpy(-t, &v);
                let fd = (p.energy(&up)? - p.energy(&dn)?) / (2.0 * t);
                worst = worst.max((fd - exact).abs() / exact.abs().max(1e-10));
            }
        }
        out.push(check(
            "energy.gradient_vs_finite_difference",
            worst < 1e-5,
            format!("max rel err over 40 pairs: {worst:.3e}"),
        ));

        let p = Problem::new(g.clone(), &w, Nonlinearity::Poisson, 1.0, 1.0, 1.0)?;
        let mut rng = stream_rng(seed, 7);
        let mut convex = true;
        for _ in 0..20 {
            let u = random_bump_field(&g, &mut rng, false);
            let v = random_bump_field(&g, &mut rng, false);
            let at = |t: f64| -> Result<f64> {
                let mut x = u.scaled(t);
                x.axpy(1.0 - t, &v);
                p.energy(&x)
            };
            let vals = [at(0.0)?, at(0.25)?, at(0.5)?, at(0.75)?, at(1.0)?];
            for k in 1..4 {
                convex &= vals[k] <= 0.5 * (vals[k - 1] + vals[k + 1]) + 1e-12;
            }
        }
        out.push(check(
            "energy.poisson_convexity",
            convex,
            "segment midpoint convexity (20 pairs)".into(),
        ));

        let p = Problem::new(g.clone(), &w, Nonlinearity::SublinearLog, 1.0, 1.0, 2.0)?;
        let u = random_bump_field(&g, &mut stream_rng(seed, 8), false);
        let half_norm2 = 0.5 * g.h1_inner(&u, &u)?;
        let mut coercive = true;
        let mut last_defect = f64::INFINITY;
        for k in 0..=8 {
            let t = 2.0_f64.powi(k);
            let tu = u.scaled(t);
            let defect = p.lambda * p.big_f_integral(&tu)? / (t * t);
            coercive &= p.energy(&tu)? / (t * t) >= half_norm2 - defect - 1e-12;
            if k == 8 {
                last_defect = defect;
            }
        }
        out.push(check(
            "energy.coercivity_witness",
            coercive && last_defect < half_norm2,
            format!("sublinear defect at t = 2^8: {last_defect:.3e} vs {half_norm2:.3e}"),
        ));
    }

    // -- solvers ------------------------------------------------------------------
    {
        let g = RadialGrid::build(SpaceFormParams::new(3, 0.0)?, 12.0, 800)?;
        let w = RadialWeight::Gaussian { amplitude: 1.0, sigma: 1.0 };
        let p = Problem::new(g.clone(), &w, Nonlinearity::Poisson, 1.0, 1.0, 1.0)?;
        let start = random_bump_field(&g, &mut stream_rng(seed, 9), false);
        let rep = minimize(&p, &start, 1e-9, 30_000)?;
        let monotone = rep
            .trace
            .windows(2)
            .all(|t| t[1].energy <= t[0].energy + 1e-12 * t[0].energy.abs().max(1.0));
        out.push(check(
            "solvers.monotone_energy",
            rep.converged && monotone,
            format!("{} iterations, final E = {:.6e}", rep.iterations, rep.energy),
        ));
        out.push(check(
            "solvers.nonnegative_solution",
            rep.solution.min_value() >= -tolerances::NONNEGATIVITY,
            format!("min value {:.3e}", rep.solution.min_value()),
        ));
        out.push(check(
            "solvers.weak_residual_certificate",
            rep.invariant_residuals["dual_sup"] < 10.0 * 1e-9,
            format!("dual sup {:.3e}", rep.invariant_residuals["dual_sup"]),
        ));
    }

    // -- experiments ----------------------------------------------------------------
    {
        let raw: RawConfig = serde_json::from_str(
            r#"{"space": {"n": 3, "c": 0.0},
                "grid": {"r_max": 10.0, "n_cells": 1000},
                "rigidity_curvatures": [0.0, -1.0]}"#,
        )?;
        let cfg = ProblemConfig::resolve(&raw, Scenario::Rigidity)?;
        let out_rig = experiments::run_rigidity(&cfg)?;
        let crate::experiments::ExperimentReport::Rigidity(rep) = &out_rig.report else {
            unreachable!()
        };
        out.push(check(
            "experiments.rigidity_separation",
            rep.verdicts["match_on_diagonal"]
                && rep.verdicts["separation_off_diagonal"]
                && rep.verdicts["off_diagonal_dominates"],
            format!(
                "diag max {:.3e}, off-diag min {:.3e}",
                rep.max_diagonal, rep.min_separated_off_diagonal
            ),
        ));
        out.push(check(
            "experiments.volume_ratio_identity",
            rep.verdicts["volume_ratio_identity"],
            format!("max |ratio - 1| = {:.3e}", rep.volume_ratio_max_dev),
        ));
    }

    Ok(out)
}
