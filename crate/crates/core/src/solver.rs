//! Group SLOPE solver.
//!
//! The problem `min_b 0.5 ||y - X b||^2 + sigma J_lambda(W [[b]]_{X,I})` is
//! solved in standardized coordinates: with `X_{I_i} = U_i R_i`, `Xtilde =
//! [U_1 .. U_m]` and `M = blockdiag(I_{l_i} / w_i)`, the unknown
//! `eta = M^{-1} (R_i b_{I_i})_i` minimizes
//! `0.5 ||y - Xtilde M eta||^2 + sigma J_lambda([[eta]])`, a unit-weight
//! problem whose prox is the grouped sorted-L1 prox. FISTA with backtracking
//! and adaptive restart runs until both the duality gap and the dual
//! infeasibility of the residual fall below tolerance.
//!
//! When the design is orthogonal at group level the problem reduces to a
//! diagonal SLOPE problem in the group norms of `Xtilde^T y`
//! ([`solve_orthogonal`]).

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};
use crate::group_structure::{block_norms, prox_grouped, GroupEffects, GroupedDesign};
use crate::sorted_l1::{dual_norm, solve_diagonal_inner, sorted_l1_norm};

/// Relative threshold on group effects for counting a group as selected.
pub const SUPPORT_REL_TOL: f64 = 1e-10;

/// Cross inner products between groups above this make a design non-orthogonal.
pub const ORTHOGONALITY_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolveOptions {
    /// Duality-gap tolerance, relative to `1 + |objective|`.
    pub dual_gap_tol: f64,
    pub infeas_tol: f64,
    pub max_iter: usize,
    /// Noise level multiplying the penalty.
    pub sigma: f64,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            dual_gap_tol: 1e-6,
            infeas_tol: 1e-6,
            max_iter: 20_000,
            sigma: 1.0,
        }
    }
}

impl SolveOptions {
    pub fn with_sigma(mut self, sigma: f64) -> Self {
        self.sigma = sigma;
        self
    }

    pub fn with_tolerances(mut self, gap: f64, infeas: f64) -> Self {
        self.dual_gap_tol = gap;
        self.infeas_tol = infeas;
        self
    }

    fn validate(&self) -> Result<()> {
        if !(self.dual_gap_tol > 0.0 && self.infeas_tol > 0.0 && self.sigma > 0.0)
            || self.max_iter == 0
        {
            return Err(Error::Config(
                "solver tolerances, sigma and max_iter must be positive".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveResult {
    pub beta: Vec<f64>,
    pub effects: GroupEffects,
    pub selected: Vec<usize>,
    pub iterations: usize,
    pub final_gap: f64,
    pub final_infeas: f64,
    pub objective: f64,
    pub converged: bool,
    pub sigma: f64,
}

impl SolveResult {
    /// Indices of variables belonging to selected groups.
    pub fn selected_variables(&self, design: &GroupedDesign) -> Vec<usize> {
        let mut vars: Vec<usize> = self
            .selected
            .iter()
            .flat_map(|&i| design.partition().groups()[i].iter().copied())
            .collect();
        vars.sort_unstable();
        vars
    }
}

/// `Xtilde M`, the unit-weight standardized design.
fn weighted_tilde(design: &GroupedDesign) -> DMatrix<f64> {
    let mut a = design.xtilde().clone();
    let offsets = design.offsets();
    for (i, &w) in design.weights().iter().enumerate() {
        a.columns_mut(offsets[i], offsets[i + 1] - offsets[i])
            .scale_mut(1.0 / w);
    }
    a
}

fn scaled_lambda(lambda: &[f64], sigma: f64) -> Vec<f64> {
    lambda.iter().map(|l| l * sigma).collect()
}

/// Squared spectral norm of `Xtilde M` by power iteration.
pub fn lipschitz_estimate(design: &GroupedDesign) -> f64 {
    design.cached_lipschitz(|| power_iteration(&weighted_tilde(design)))
}

fn power_iteration(a: &DMatrix<f64>) -> f64 {
    let p = a.ncols();
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let mut v = DVector::from_fn(p, |_, _| rng.random_range(0.5..1.5));
    v.normalize_mut();
    let mut av = DVector::zeros(a.nrows());
    let mut w = DVector::zeros(p);
    let mut estimate: f64 = 0.0;
    for _ in 0..500 {
        av.gemv(1.0, a, &v, 0.0);
        w.gemv_tr(1.0, a, &av, 0.0);
        let next = w.norm();
        if next == 0.0 {
            return 0.0;
        }
        v.copy_from(&w);
        v /= next;
        let done = (next - estimate).abs() <= 1e-6 * next;
        estimate = next;
        if done {
            break;
        }
    }
    estimate
}

/// `rho(eta) = (A eta)^T (y - A eta) - sigma J_lambda([[eta]])` with `A = Xtilde M`.
pub fn duality_gap(
    eta: &[f64],
    y: &[f64],
    design: &GroupedDesign,
    lambda: &[f64],
    sigma: f64,
) -> Result<f64> {
    check_len("eta", design.p_tilde(), eta.len())?;
    check_len("response", design.n(), y.len())?;
    check_len("lambda", design.num_groups(), lambda.len())?;
    let a = weighted_tilde(design);
    let fit = &a * DVector::from_column_slice(eta);
    let resid = DVector::from_column_slice(y) - &fit;
    let pen = sorted_l1_norm(
        &scaled_lambda(lambda, sigma),
        &block_norms(design.ranks(), eta)?,
    )?;
    Ok(fit.dot(&resid) - pen)
}

/// `max(J^D_lambda([[M Xtilde^T mu]]) - 1, 0)`; pass `sigma * lambda` for a
/// problem with noise level `sigma`.
pub fn infeasibility(mu: &[f64], design: &GroupedDesign, lambda: &[f64]) -> Result<f64> {
    check_len("dual point", design.n(), mu.len())?;
    check_len("lambda", design.num_groups(), lambda.len())?;
    let a = weighted_tilde(design);
    let corr = a.tr_mul(&DVector::from_column_slice(mu));
    Ok((dual_norm(lambda, &block_norms(design.ranks(), corr.as_slice())?)? - 1.0).max(0.0))
}

fn check_inputs(
    design: &GroupedDesign,
    lambda: &[f64],
    y: &[f64],
    opts: &SolveOptions,
) -> Result<()> {
    check_len("lambda", design.num_groups(), lambda.len())?;
    check_len("response", design.n(), y.len())?;
    opts.validate()?;
    if lambda.windows(2).any(|w| w[1] > w[0])
        || lambda.iter().any(|&l| !(l >= 0.0))
        || lambda[0] <= 0.0
    {
        return Err(Error::domain(
            "lambda must be nonincreasing, nonnegative and not identically zero",
        ));
    }
    Ok(())
}

/// Converts a standardized solution back to the original coordinates.
fn finish(
    design: &GroupedDesign,
    eta: &[f64],
    iterations: usize,
    final_gap: f64,
    final_infeas: f64,
    objective: f64,
    converged: bool,
    sigma: f64,
) -> Result<SolveResult> {
    let offsets = design.offsets();
    let mut c = eta.to_vec();
    for (i, &w) in design.weights().iter().enumerate() {
        c[offsets[i]..offsets[i + 1]]
            .iter_mut()
            .for_each(|v| *v /= w);
    }
    let effects = GroupEffects::new(block_norms(design.ranks(), &c)?)?;
    let beta = design.coefficients_from_tilde(&c)?;
    let selected = effects.support(SUPPORT_REL_TOL);
    Ok(SolveResult {
        beta: beta.as_slice().to_vec(),
        effects,
        selected,
        iterations,
        final_gap,
        final_infeas,
        objective,
        converged,
        sigma,
    })
}

/// Solves group SLOPE by FISTA on the unit-weight standardized problem.
pub fn solve_gslope(
    design: &GroupedDesign,
    lambda: &[f64],
    y: &[f64],
    opts: &SolveOptions,
) -> Result<SolveResult> {
    check_inputs(design, lambda, y, opts)?;
    let a = weighted_tilde(design);
    let ranks = design.ranks();
    let lam = scaled_lambda(lambda, opts.sigma);
    let y = DVector::from_column_slice(y);
    let p = a.ncols();
    let n = a.nrows();

    let penalty = |eta: &DVector<f64>| -> f64 {
        sorted_l1_norm(
            &lam,
            &block_norms(ranks, eta.as_slice()).expect("sizes match"),
        )
        .expect("lengths match")
    };

    let mut lipschitz = design
        .cached_lipschitz(|| power_iteration(&a))
        .max(f64::MIN_POSITIVE);

    // current iterate x with A x and A^T (A x - y)
    let mut x = DVector::<f64>::zeros(p);
    let mut ax = DVector::<f64>::zeros(n);
    let mut grad_x = -a.tr_mul(&y);
    let mut f_x = 0.5 * y.norm_squared();

    // extrapolated point and its image/gradient
    let mut z = x.clone();
    let mut az = ax.clone();
    let mut grad_z = grad_x.clone();
    let mut theta = 1.0f64;
    let mut restarted = false;

    let mut ax_new = DVector::<f64>::zeros(n);
    let mut grad_new = DVector::<f64>::zeros(p);
    let mut last = (f64::INFINITY, f64::INFINITY, f_x);

    for iter in 1..=opts.max_iter {
        let resid_z = &az - &y;
        let g_z = 0.5 * resid_z.norm_squared();
        let x_new = loop {
            let t = 1.0 / lipschitz;
            let point = &z - &grad_z * t;
            let t_lam: Vec<f64> = lam.iter().map(|l| l * t).collect();
            let cand = DVector::from_vec(prox_grouped(&t_lam, ranks, point.as_slice())?);
            ax_new.gemv(1.0, &a, &cand, 0.0);
            let g_new = 0.5 * (&ax_new - &y).norm_squared();
            let step = &cand - &z;
            let model = g_z + grad_z.dot(&step) + 0.5 * lipschitz * step.norm_squared();
            if g_new <= model + 1e-12 * g_z.abs().max(1e-300) || lipschitz > 1e300 {
                break cand;
            }
            lipschitz *= 2.0;
        };

        // dual point mu = y - A x_new, and A^T (A x_new - y) = -A^T mu
        let mu = &y - &ax_new;
        grad_new.gemv_tr(-1.0, &a, &mu, 0.0);
        let pen = penalty(&x_new);
        let objective = 0.5 * mu.norm_squared() + pen;
        let gap = ax_new.dot(&mu) - pen;
        let dual = dual_norm(&lam, &block_norms(ranks, grad_new.as_slice())?)?;
        let infeas = (dual - 1.0).max(0.0);
        last = (gap, infeas, objective);

        if gap.abs() <= opts.dual_gap_tol * (1.0 + objective.abs()) && infeas <= opts.infeas_tol {
            return finish(
                design,
                x_new.as_slice(),
                iter,
                gap,
                infeas,
                objective,
                true,
                opts.sigma,
            );
        }

        if objective > f_x && !restarted {
            // adaptive restart from the last accepted iterate; the plain
            // proximal step that follows is always accepted, so rounding
            // noise near the optimum cannot stall the iteration
            restarted = true;
            theta = 1.0;
            z.copy_from(&x);
            az.copy_from(&ax);
            grad_z.copy_from(&grad_x);
            continue;
        }

        restarted = false;
        let theta_next = 0.5 * (1.0 + (1.0 + 4.0 * theta * theta).sqrt());
        let beta = (theta - 1.0) / theta_next;
        theta = theta_next;
        // z = x_new + beta (x_new - x); the image and gradient are affine in z
        z = &x_new * (1.0 + beta) - &x * beta;
        az = &ax_new * (1.0 + beta) - &ax * beta;
        grad_z = &grad_new * (1.0 + beta) - &grad_x * beta;
        x = x_new;
        ax.copy_from(&ax_new);
        grad_x.copy_from(&grad_new);
        f_x = objective;
    }

    log::warn!(
        "group SLOPE did not converge in {} iterations (gap {:.3e}, infeasibility {:.3e})",
        opts.max_iter,
        last.0,
        last.1
    );
    finish(
        design,
        x.as_slice(),
        opts.max_iter,
        last.0,
        last.1,
        f_x,
        false,
        opts.sigma,
    )
}

/// Exact reduction for designs orthogonal at group level: the group norms of
/// `Xtilde^T y` feed a diagonal SLOPE problem with `d_i = 1 / w_i`.
pub fn solve_orthogonal(
    design: &GroupedDesign,
    lambda: &[f64],
    y: &[f64],
    opts: &SolveOptions,
) -> Result<SolveResult> {
    check_inputs(design, lambda, y, opts)?;
    let cross = design.max_cross_inner_product();
    if cross > ORTHOGONALITY_TOL {
        return Err(Error::NotOrthogonal(cross));
    }
    let ranks = design.ranks();
    let offsets = design.offsets();
    let weights = design.weights();
    let y_vec = DVector::from_column_slice(y);
    let y_tilde = design.xtilde().tr_mul(&y_vec);
    let norms = block_norms(ranks, y_tilde.as_slice())?;
    let d: Vec<f64> = weights.iter().map(|w| 1.0 / w).collect();
    let lam = scaled_lambda(lambda, opts.sigma);
    let tol = opts.dual_gap_tol.min(opts.infeas_tol);
    let (sol, converged) = solve_diagonal_inner(&d, &lam, &norms, tol)?;

    // eta_i = w_i * c_i = c*_i * ytilde_i / ||ytilde_i||
    let mut eta = vec![0.0; design.p_tilde()];
    for i in 0..design.num_groups() {
        if norms[i] > 0.0 && sol.b[i] > 0.0 {
            let f = sol.b[i] / norms[i];
            for k in offsets[i]..offsets[i + 1] {
                eta[k] = f * y_tilde[k];
            }
        }
    }

    let a = weighted_tilde(design);
    let fit = &a * DVector::from_column_slice(&eta);
    let mu = &y_vec - &fit;
    let pen = sorted_l1_norm(&lam, &block_norms(ranks, &eta)?)?;
    let objective = 0.5 * mu.norm_squared() + pen;
    let gap = fit.dot(&mu) - pen;
    let corr = a.tr_mul(&mu);
    let infeas = (dual_norm(&lam, &block_norms(ranks, corr.as_slice())?)? - 1.0).max(0.0);
    finish(
        design,
        &eta,
        sol.iterations,
        gap,
        infeas,
        objective,
        converged,
        opts.sigma,
    )
}

/// Uses the orthogonal reduction when the design allows it.
pub fn solve_auto(
    design: &GroupedDesign,
    lambda: &[f64],
    y: &[f64],
    opts: &SolveOptions,
) -> Result<SolveResult> {
    if design.n() >= design.p_tilde() && design.max_cross_inner_product() <= ORTHOGONALITY_TOL {
        solve_orthogonal(design, lambda, y, opts)
    } else {
        solve_gslope(design, lambda, y, opts)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group_structure::{GroupPartition, WeightRule};
    use crate::sorted_l1::prox_sorted_l1;
    use rand_distr::StandardNormal;

    fn gaussian(rng: &mut ChaCha8Rng, n: usize, p: usize) -> DMatrix<f64> {
        DMatrix::from_fn(n, p, |_, _| rng.sample(StandardNormal))
    }

    fn tight() -> SolveOptions {
        SolveOptions::default().with_tolerances(1e-12, 1e-12)
    }

    #[test]
    fn zero_response() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let x = gaussian(&mut rng, 10, 6);
        let d = GroupedDesign::new(x, GroupPartition::contiguous(&[2, 2, 2]).unwrap()).unwrap();
        let res = solve_gslope(&d, &[1.0, 0.5, 0.2], &[0.0; 10], &SolveOptions::default()).unwrap();
        assert!(res.converged);
        assert_eq!(res.iterations, 1);
        assert!(res.beta.iter().all(|&b| b == 0.0));
        assert!(res.effects.values().iter().all(|&e| e == 0.0));
        assert!(res.selected.is_empty());
    }

    #[test]
    fn singleton_identity_reduces_to_slope_prox() {
        let x = DMatrix::<f64>::identity(6, 6);
        let d = GroupedDesign::new(x, GroupPartition::contiguous(&[1; 6]).unwrap()).unwrap();
        let y = [3.0, -0.2, 1.4, -2.5, 0.7, 0.0];
        let lambda = [2.0, 1.6, 1.2, 0.8, 0.4, 0.1];
        let res = solve_gslope(&d, &lambda, &y, &tight()).unwrap();
        let expect = prox_sorted_l1(&lambda, &y).unwrap();
        for (b, e) in res.beta.iter().zip(&expect) {
            assert!((b - e).abs() < 1e-9, "{b} vs {e}");
        }
        let orth = solve_orthogonal(&d, &lambda, &y, &tight()).unwrap();
        for (b, e) in orth.beta.iter().zip(&expect) {
            assert!((b - e).abs() < 1e-9);
        }
    }

    #[test]
    fn lipschitz_examples() {
        let x = DMatrix::<f64>::identity(8, 8);
        let d = GroupedDesign::new(x, GroupPartition::contiguous(&[2, 3, 3]).unwrap()).unwrap();
        assert!((lipschitz_estimate(&d) - 1.0).abs() < 1e-6);

        // diagonal design with singleton groups: U_i R_i = d_i e_i, and the
        // weights carry the scale
        let diag = [0.5, 2.0, 1.5];
        let x = DMatrix::from_diagonal(&DVector::from_column_slice(&diag));
        let d = GroupedDesign::new(x, GroupPartition::contiguous(&[1, 1, 1]).unwrap())
            .unwrap()
            .with_weights(diag.iter().map(|v| 1.0 / v).collect())
            .unwrap();
        assert!((lipschitz_estimate(&d) - 4.0).abs() < 1e-5);

        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..5 {
            let x = gaussian(&mut rng, 20, 30);
            let d = GroupedDesign::new(x, GroupPartition::contiguous(&[5; 6]).unwrap())
                .unwrap()
                .with_weight_rule(WeightRule::SqrtRank)
                .unwrap();
            let a = weighted_tilde(&d);
            let smax = a.clone().singular_values().max();
            let est = lipschitz_estimate(&d);
            assert!(
                (est - smax * smax).abs() <= 1e-5 * smax * smax,
                "{est} vs {}",
                smax * smax
            );
        }
    }

    #[test]
    fn duality_gap_toy_instance() {
        // two singleton groups on X = I_2, unit weights: eta = (1, 0.5),
        // y = (2, 1), lambda = (1, 0.5).
        // A eta = (1, 0.5), residual (1, 0.5): inner product 1.25,
        // penalty 1 * 1 + 0.5 * 0.5 = 1.25, so the gap is 0.
        let x = DMatrix::<f64>::identity(2, 2);
        let d = GroupedDesign::new(x, GroupPartition::contiguous(&[1, 1]).unwrap()).unwrap();
        let u00 = d.u_block(0)[(0, 0)];
        let u11 = d.u_block(1)[(1, 0)];
        let eta = [u00 * 1.0, u11 * 0.5];
        let g = duality_gap(&eta, &[2.0, 1.0], &d, &[1.0, 0.5], 1.0).unwrap();
        assert!(g.abs() < 1e-14);
        // y = (3, 0): residual (2, -0.5), inner 2 - 0.25 = 1.75, gap 0.5
        let g = duality_gap(&eta, &[3.0, 0.0], &d, &[1.0, 0.5], 1.0).unwrap();
        assert!((g - 0.5).abs() < 1e-14);
        // sigma = 2 doubles the penalty: 1.75 - 2.5
        let g = duality_gap(&eta, &[3.0, 0.0], &d, &[1.0, 0.5], 2.0).unwrap();
        assert!((g + 0.75).abs() < 1e-14);
        assert_eq!(
            duality_gap(&[0.0, 0.0], &[3.0, 0.0], &d, &[1.0, 0.5], 1.0).unwrap(),
            0.0
        );
    }

    #[test]
    fn infeasibility_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let x = gaussian(&mut rng, 12, 6);
        let d = GroupedDesign::new(x, GroupPartition::contiguous(&[3, 2, 1]).unwrap())
            .unwrap()
            .with_weights(vec![1.5, 1.0, 0.7])
            .unwrap();
        let lambda = [1.3, 0.9, 0.4];
        assert_eq!(infeasibility(&[0.0; 12], &d, &lambda).unwrap(), 0.0);
        let mu: Vec<f64> = (0..12).map(|_| rng.random_range(-1.0..1.0)).collect();
        let a = weighted_tilde(&d);
        let corr = a.tr_mul(&DVector::from_column_slice(&mu));
        let nrm = dual_norm(&lambda, &block_norms(d.ranks(), corr.as_slice()).unwrap()).unwrap();
        let boundary: Vec<f64> = mu.iter().map(|v| v / nrm).collect();
        assert!(infeasibility(&boundary, &d, &lambda).unwrap() < 1e-12);
        for s in [1.0, 1.5, 3.0] {
            let scaled: Vec<f64> = boundary.iter().map(|v| v * s).collect();
            assert!((infeasibility(&scaled, &d, &lambda).unwrap() - (s - 1.0)).abs() < 1e-12);
        }
    }

    #[test]
    fn sigma_scaling_law() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let x = gaussian(&mut rng, 40, 12);
        let d = GroupedDesign::new(
            x.clone(),
            GroupPartition::contiguous(&[3, 3, 2, 4]).unwrap(),
        )
        .unwrap()
        .with_weight_rule(WeightRule::SqrtRank)
        .unwrap();
        let beta: Vec<f64> = (0..12).map(|j| if j < 3 { 2.0 } else { 0.0 }).collect();
        let y: Vec<f64> = (&x * DVector::from_vec(beta))
            .iter()
            .map(|v| v + rng.sample::<f64, _>(StandardNormal))
            .collect();
        let lambda = [2.0, 1.7, 1.4, 1.0];
        let sigma = 1.7;
        let pre: Vec<f64> = lambda.iter().map(|l| l * sigma).collect();
        let a = solve_gslope(&d, &lambda, &y, &tight().with_sigma(sigma)).unwrap();
        let b = solve_gslope(&d, &pre, &y, &tight()).unwrap();
        for (u, v) in a.effects.values().iter().zip(b.effects.values()) {
            assert!((u - v).abs() <= 1e-10);
        }
    }

    #[test]
    fn converged_result_is_locally_and_globally_optimal() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let x = gaussian(&mut rng, 30, 15);
        let part = GroupPartition::contiguous(&[3, 4, 2, 3, 3]).unwrap();
        let d = GroupedDesign::new(x.clone(), part)
            .unwrap()
            .with_weight_rule(WeightRule::SqrtSize)
            .unwrap();
        let beta_true: Vec<f64> = (0..15).map(|j| if j < 7 { 1.5 } else { 0.0 }).collect();
        let y: Vec<f64> = (&x * DVector::from_vec(beta_true))
            .iter()
            .map(|v| v + rng.sample::<f64, _>(StandardNormal))
            .collect();
        let lambda = [3.0, 2.5, 2.0, 1.5, 1.0];
        let res = solve_gslope(&d, &lambda, &y, &tight()).unwrap();
        assert!(res.converged);
        assert!(res.final_gap.abs() <= 1e-12 * (1.0 + res.objective) && res.final_infeas <= 1e-12);
        let obj = |b: &[f64]| {
            let r = DVector::from_column_slice(&y) - &x * DVector::from_column_slice(b);
            0.5 * r.norm_squared() + crate::group_structure::grouped_norm(&lambda, &d, b).unwrap()
        };
        let f0 = obj(&res.beta);
        assert!((f0 - res.objective).abs() < 1e-8 * (1.0 + f0));
        for _ in 0..1000 {
            let b: Vec<f64> = res
                .beta
                .iter()
                .map(|v| v + rng.random_range(-1e-3..1e-3))
                .collect();
            assert!(obj(&b) >= f0 - 1e-9);
        }
    }

    #[test]
    fn group_lasso_objective_coincides() {
        // constant lambda and sqrt-size weights: the penalty is the group-LASSO one
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let x = gaussian(&mut rng, 25, 10);
        let d = GroupedDesign::new(x.clone(), GroupPartition::contiguous(&[2, 3, 5]).unwrap())
            .unwrap()
            .with_weight_rule(WeightRule::SqrtSize)
            .unwrap();
        let y: Vec<f64> = (0..25)
            .map(|_| rng.sample::<f64, _>(StandardNormal))
            .collect();
        let lam = 0.9;
        for _ in 0..50 {
            let b: Vec<f64> = (0..10).map(|_| rng.random_range(-1.0..1.0)).collect();
            let fit = &x * DVector::from_column_slice(&b);
            let resid = 0.5 * (DVector::from_column_slice(&y) - &fit).norm_squared();
            let gslope = resid + crate::group_structure::grouped_norm(&[lam; 3], &d, &b).unwrap();
            let glasso = resid
                + d.partition()
                    .groups()
                    .iter()
                    .map(|g| {
                        let mut acc = DVector::<f64>::zeros(25);
                        for &j in g {
                            acc.axpy(b[j], &x.column(j), 1.0);
                        }
                        lam * (g.len() as f64).sqrt() * acc.norm()
                    })
                    .sum::<f64>();
            assert!((gslope - glasso).abs() < 1e-10);
        }
        let res = solve_gslope(&d, &[lam; 3], &y, &tight()).unwrap();
        assert!(res.converged);
    }

    #[test]
    fn permuting_groups_permutes_effects() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let x = gaussian(&mut rng, 30, 9);
        let y: Vec<f64> = (0..30)
            .map(|i| x[(i, 0)] * 3.0 + x[(i, 5)] * 2.0 + rng.sample::<f64, _>(StandardNormal))
            .collect();
        let groups = vec![vec![0, 1], vec![2, 3, 4], vec![5, 6], vec![7, 8]];
        let lambda = [2.5, 2.0, 1.5, 1.0];
        let d1 = GroupedDesign::new(
            x.clone(),
            GroupPartition::new(groups.clone(), vec![1.0; 4]).unwrap(),
        )
        .unwrap()
        .with_weight_rule(WeightRule::SqrtRank)
        .unwrap();
        let perm = [2, 0, 3, 1];
        let pg: Vec<Vec<usize>> = perm.iter().map(|&i| groups[i].clone()).collect();
        let d2 = GroupedDesign::new(x, GroupPartition::new(pg, vec![1.0; 4]).unwrap())
            .unwrap()
            .with_weight_rule(WeightRule::SqrtRank)
            .unwrap();
        let r1 = solve_gslope(&d1, &lambda, &y, &tight()).unwrap();
        let r2 = solve_gslope(&d2, &lambda, &y, &tight()).unwrap();
        for (k, &i) in perm.iter().enumerate() {
            assert!((r2.effects.values()[k] - r1.effects.values()[i]).abs() < 1e-8);
        }
    }

    #[test]
    fn orthogonal_and_general_paths_agree() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for _ in 0..10 {
            let sizes = [2, 3, 1, 4, 2];
            let q = gaussian(&mut rng, 20, 12).qr().q();
            // mix columns within each block so groups stay mutually orthogonal
            let mut x = DMatrix::zeros(20, 12);
            let mut start = 0;
            for &l in &sizes {
                let mix = gaussian(&mut rng, l, l);
                x.columns_mut(start, l)
                    .copy_from(&(q.columns(start, l) * mix));
                start += l;
            }
            let d = GroupedDesign::new(x, GroupPartition::contiguous(&sizes).unwrap())
                .unwrap()
                .with_weight_rule(WeightRule::SqrtSize)
                .unwrap();
            let y: Vec<f64> = (0..20)
                .map(|_| 2.0 * rng.sample::<f64, _>(StandardNormal))
                .collect();
            let lambda = [1.8, 1.5, 1.2, 0.9, 0.5];
            let opts = SolveOptions::default()
                .with_tolerances(1e-10, 1e-10)
                .with_sigma(0.8);
            let a = solve_gslope(&d, &lambda, &y, &opts).unwrap();
            let b = solve_orthogonal(&d, &lambda, &y, &opts).unwrap();
            assert!(a.converged && b.converged);
            for (u, v) in a.effects.values().iter().zip(b.effects.values()) {
                assert!((u - v).abs() <= 1e-6 * u.abs().max(1.0), "{u} vs {v}");
            }
            assert_eq!(a.selected, b.selected);
        }
    }

    #[test]
    fn orthogonal_path_rejects_correlated_designs() {
        let mut rng = ChaCha8Rng::seed_from_u64(19);
        let x = gaussian(&mut rng, 20, 6);
        let d = GroupedDesign::new(x, GroupPartition::contiguous(&[3, 3]).unwrap()).unwrap();
        let err = solve_orthogonal(&d, &[1.0, 0.5], &[1.0; 20], &SolveOptions::default());
        assert!(matches!(err, Err(Error::NotOrthogonal(_))));
    }

    #[test]
    fn dimension_errors() {
        let x = DMatrix::<f64>::identity(4, 4);
        let d = GroupedDesign::new(x, GroupPartition::contiguous(&[2, 2]).unwrap()).unwrap();
        assert!(solve_gslope(&d, &[1.0], &[0.0; 4], &SolveOptions::default()).is_err());
        assert!(solve_gslope(&d, &[1.0, 0.5], &[0.0; 3], &SolveOptions::default()).is_err());
        assert!(solve_gslope(&d, &[0.5, 1.0], &[0.0; 4], &SolveOptions::default()).is_err());
    }
}
