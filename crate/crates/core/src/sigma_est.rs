//! Joint group selection and noise-level estimation.
//!
//! Starting from the empty support, the noise level is estimated from the
//! residual of a least-squares fit on the currently selected variables,
//! gSLOPE is re-solved with that level, and the loop repeats until the
//! selected variables stop changing.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};
use crate::group_structure::GroupedDesign;
use crate::solver::{solve_auto, SolveOptions, SolveResult};

pub const MAX_SIGMA_ITER: usize = 100;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SigmaEstimate {
    pub result: SolveResult,
    pub sigma_hat: f64,
    /// Variable supports in the order they were produced.
    pub trace: Vec<Vec<usize>>,
    /// True when the support reached a fixed point.
    pub converged: bool,
    /// True when the loop stopped on a repeated support.
    pub cycle: bool,
}

/// Residual sum of squares of `y` regressed on the given columns, no intercept.
pub fn residual_sum_of_squares(x: &DMatrix<f64>, columns: &[usize], y: &[f64]) -> Result<f64> {
    check_len("response", x.nrows(), y.len())?;
    let y = DVector::from_column_slice(y);
    let total = y.norm_squared();
    if columns.is_empty() {
        return Ok(total);
    }
    let sub = x.select_columns(columns);
    let svd = sub.svd(true, false);
    let u = svd.u.expect("requested U");
    let smax = svd.singular_values.max();
    let mut explained = 0.0;
    for (k, &s) in svd.singular_values.iter().enumerate() {
        if s > 1e-10 * smax {
            explained += u.column(k).dot(&y).powi(2);
        }
    }
    Ok((total - explained).max(0.0))
}

fn sigma_from_support(design: &GroupedDesign, support: &[usize], y: &[f64]) -> Result<f64> {
    let n = design.n();
    if support.len() + 1 >= n {
        return Err(Error::SupportTooLarge {
            support: support.len(),
            n,
        });
    }
    let rss = residual_sum_of_squares(design.x(), support, y)?;
    let sigma = (rss / (n - support.len() - 1) as f64).sqrt();
    if !(sigma > 0.0) {
        return Err(Error::domain(
            "estimated noise level is zero; the response is fitted exactly",
        ));
    }
    Ok(sigma)
}

/// Alternates noise-level estimation and gSLOPE until the support of selected
/// variables is a fixed point, a support repeats, or [`MAX_SIGMA_ITER`] solves
/// have run. On a cycle the iterate with the smallest noise level among the
/// cycle is returned.
pub fn solve_with_sigma_estimation(
    design: &GroupedDesign,
    lambda: &[f64],
    y: &[f64],
    opts: &SolveOptions,
) -> Result<SigmaEstimate> {
    if design.n() < 2 {
        return Err(Error::domain(
            "noise estimation needs at least two observations",
        ));
    }
    // supports[0] is the empty start; solve k uses sigmas[k - 1] and yields supports[k]
    let mut supports: Vec<Vec<usize>> = vec![Vec::new()];
    let mut sigmas = vec![sigma_from_support(design, &[], y)?];
    let mut results: Vec<SolveResult> = Vec::new();

    for k in 1..=MAX_SIGMA_ITER {
        let sigma = sigmas[k - 1];
        let res = solve_auto(design, lambda, y, &opts.with_sigma(sigma))?;
        let support = res.selected_variables(design);
        results.push(res);

        if support == supports[k - 1] {
            let result = results.pop().expect("just pushed");
            supports.push(support);
            return Ok(SigmaEstimate {
                result,
                sigma_hat: sigma,
                trace: supports.split_off(1),
                converged: true,
                cycle: false,
            });
        }
        if let Some(j) = supports[..k - 1].iter().position(|s| *s == support) {
            // solves j+1..=k repeat forever from here
            let best = (j + 1..=k)
                .min_by(|&a, &b| sigmas[a - 1].total_cmp(&sigmas[b - 1]))
                .expect("nonempty cycle");
            log::warn!(
                "noise estimation cycles with period {}; keeping the smallest estimate",
                k - j
            );
            supports.push(support);
            return Ok(SigmaEstimate {
                result: results.swap_remove(best - 1),
                sigma_hat: sigmas[best - 1],
                trace: supports.split_off(1),
                converged: false,
                cycle: true,
            });
        }
        sigmas.push(sigma_from_support(design, &support, y)?);
        supports.push(support);
    }

    log::warn!("noise estimation hit the iteration cap of {MAX_SIGMA_ITER}");
    let result = results.pop().expect("at least one solve");
    Ok(SigmaEstimate {
        result,
        sigma_hat: sigmas[MAX_SIGMA_ITER - 1],
        trace: supports.split_off(1),
        converged: false,
        cycle: false,
    })
}
