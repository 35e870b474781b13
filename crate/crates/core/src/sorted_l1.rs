//! The sorted-L1 norm `J_lambda(b) = sum_i lambda_i |b|_(i)`, its proximal
//! operator, its dual norm, and a FISTA solver for SLOPE with a diagonal design.

use std::cmp::Ordering;
use std::ops::Deref;

use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};

/// Where a regularization sequence came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LambdaKind {
    Max,
    Mean,
    Corrected,
    Custom,
}

/// A nonincreasing, nonnegative regularization sequence with at least one
/// positive entry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LambdaSequence {
    values: Vec<f64>,
    kind: LambdaKind,
}

impl LambdaSequence {
    pub fn new(values: Vec<f64>, kind: LambdaKind) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::domain("lambda sequence is empty"));
        }
        if values.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::domain(
                "lambda entries must be finite and nonnegative",
            ));
        }
        if values.windows(2).any(|w| w[1] > w[0]) {
            return Err(Error::domain("lambda sequence must be nonincreasing"));
        }
        if values[0] <= 0.0 {
            return Err(Error::domain("lambda sequence is identically zero"));
        }
        Ok(Self { values, kind })
    }

    pub fn custom(values: Vec<f64>) -> Result<Self> {
        Self::new(values, LambdaKind::Custom)
    }

    pub fn kind(&self) -> LambdaKind {
        self.kind
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// Same provenance, every entry multiplied by `factor > 0`.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        Self::new(self.values.iter().map(|v| v * factor).collect(), self.kind)
    }

    /// The first `len` entries.
    pub fn truncated(&self, len: usize) -> Result<Self> {
        if len == 0 || len > self.values.len() {
            return Err(Error::domain(format!(
                "cannot truncate lambda of length {} to {len}",
                self.values.len()
            )));
        }
        Self::new(self.values[..len].to_vec(), self.kind)
    }
}

impl Deref for LambdaSequence {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.values
    }
}

fn desc_abs(x: &[f64]) -> Vec<f64> {
    let mut a: Vec<f64> = x.iter().map(|v| v.abs()).collect();
    a.sort_by(|u, v| v.partial_cmp(u).unwrap_or(Ordering::Equal));
    a
}

/// `sum_i lambda_i |b|_(i)` with `|b|` sorted in decreasing order.
pub fn sorted_l1_norm(lambda: &[f64], b: &[f64]) -> Result<f64> {
    check_len("sorted-L1 argument", lambda.len(), b.len())?;
    Ok(desc_abs(b).iter().zip(lambda).map(|(x, l)| x * l).sum())
}

/// Indices ordering `|y|` decreasingly; stable, so ties keep input order.
fn abs_desc_order(y: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..y.len()).collect();
    order.sort_by(|&i, &j| {
        y[j].abs()
            .partial_cmp(&y[i].abs())
            .unwrap_or(Ordering::Equal)
    });
    order
}

/// Prox of the sorted-L1 norm on magnitudes already sorted decreasingly.
///
/// Pool-adjacent-violators on `|y|_(i) - lambda_i` with a block stack, then
/// clipping at zero.
pub(crate) fn prox_sorted_nonneg(sorted_abs: &[f64], lambda: &[f64]) -> Vec<f64> {
    struct Block {
        start: usize,
        end: usize,
        sum: f64,
    }
    impl Block {
        fn mean(&self) -> f64 {
            self.sum / (self.end - self.start) as f64
        }
    }

    let mut stack: Vec<Block> = Vec::with_capacity(sorted_abs.len());
    for (i, (y, l)) in sorted_abs.iter().zip(lambda).enumerate() {
        stack.push(Block {
            start: i,
            end: i + 1,
            sum: y - l,
        });
        while stack.len() > 1 {
            let top = stack.len() - 1;
            if stack[top - 1].mean() > stack[top].mean() {
                break;
            }
            let last = stack.pop().expect("nonempty");
            let prev = stack.last_mut().expect("nonempty");
            prev.end = last.end;
            prev.sum += last.sum;
        }
    }

    let mut out = vec![0.0; sorted_abs.len()];
    for block in &stack {
        let v = block.mean().max(0.0);
        out[block.start..block.end].fill(v);
    }
    out
}

/// Proximal operator of `J_lambda`: the minimizer of `0.5 ||y - b||^2 + J_lambda(b)`.
pub fn prox_sorted_l1(lambda: &[f64], y: &[f64]) -> Result<Vec<f64>> {
    check_len("prox argument", lambda.len(), y.len())?;
    let order = abs_desc_order(y);
    let sorted: Vec<f64> = order.iter().map(|&i| y[i].abs()).collect();
    let solved = prox_sorted_nonneg(&sorted, lambda);
    let mut out = vec![0.0; y.len()];
    for (rank, &i) in order.iter().enumerate() {
        out[i] = solved[rank].copysign(y[i]);
        if solved[rank] == 0.0 {
            out[i] = 0.0;
        }
    }
    Ok(out)
}

/// Dual norm of `J_lambda`: `max_k (sum_{i<=k} |x|_(i)) / (sum_{i<=k} lambda_i)`.
pub fn dual_norm(lambda: &[f64], x: &[f64]) -> Result<f64> {
    check_len("dual norm argument", lambda.len(), x.len())?;
    if lambda.first().map_or(true, |&l| l <= 0.0) {
        return Err(Error::domain("dual norm needs lambda_1 > 0"));
    }
    let sorted = desc_abs(x);
    let mut num = 0.0;
    let mut den = 0.0;
    let mut best: f64 = 0.0;
    for (xi, li) in sorted.iter().zip(lambda) {
        num += xi;
        den += li;
        best = best.max(num / den);
    }
    Ok(best)
}

/// Membership in the dual unit ball `C_lambda`, up to `tol`.
pub fn in_dual_ball(lambda: &[f64], x: &[f64], tol: f64) -> bool {
    dual_norm(lambda, x).map_or(false, |v| v <= 1.0 + tol)
}

/// Diagonal SLOPE solution together with its convergence record.
#[derive(Debug, Clone)]
pub struct DiagonalSolution {
    pub b: Vec<f64>,
    pub iterations: usize,
    pub gap: f64,
    pub infeas: f64,
}

pub const DIAGONAL_MAX_ITER: usize = 50_000;

/// Minimizes `0.5 ||y - D b||^2 + J_lambda(b)` with `D = diag(d)`, `d > 0`.
pub fn solve_diagonal_slope(d: &[f64], lambda: &[f64], y: &[f64], tol: f64) -> Result<Vec<f64>> {
    solve_diagonal_slope_detailed(d, lambda, y, tol).map(|s| s.b)
}

pub fn solve_diagonal_slope_detailed(
    d: &[f64],
    lambda: &[f64],
    y: &[f64],
    tol: f64,
) -> Result<DiagonalSolution> {
    match solve_diagonal_inner(d, lambda, y, tol)? {
        (sol, true) => Ok(sol),
        (sol, false) => Err(Error::NonConvergence {
            iterations: sol.iterations,
            gap: sol.gap,
            infeas: sol.infeas,
        }),
    }
}

/// Like [`solve_diagonal_slope_detailed`] but hands back the last iterate,
/// flagged, instead of failing when the iteration cap is hit.
pub(crate) fn solve_diagonal_inner(
    d: &[f64],
    lambda: &[f64],
    y: &[f64],
    tol: f64,
) -> Result<(DiagonalSolution, bool)> {
    let p = y.len();
    check_len("diagonal entries", p, d.len())?;
    check_len("lambda", p, lambda.len())?;
    if d.iter().any(|&v| !(v > 0.0) || !v.is_finite()) {
        return Err(Error::domain("diagonal entries must be positive"));
    }
    if !(tol > 0.0) {
        return Err(Error::domain("tolerance must be positive"));
    }
    if lambda.iter().all(|&l| l == 0.0) {
        let sol = DiagonalSolution {
            b: y.iter().zip(d).map(|(y, d)| y / d).collect(),
            iterations: 0,
            gap: 0.0,
            infeas: 0.0,
        };
        return Ok((sol, true));
    }

    let lipschitz = d.iter().fold(0.0f64, |m, v| m.max(v * v));
    let step = 1.0 / lipschitz;
    let scaled_lambda: Vec<f64> = lambda.iter().map(|l| l * step).collect();

    let objective = |b: &[f64]| -> f64 {
        let fit: f64 = b
            .iter()
            .zip(d)
            .zip(y)
            .map(|((b, d), y)| (y - d * b).powi(2))
            .sum();
        0.5 * fit + sorted_l1_norm(lambda, b).expect("lengths checked")
    };
    // gap analogue and dual infeasibility at b
    let certificate = |b: &[f64]| -> (f64, f64) {
        let resid: Vec<f64> = b
            .iter()
            .zip(d)
            .zip(y)
            .map(|((b, d), y)| y - d * b)
            .collect();
        let inner: f64 = b
            .iter()
            .zip(d)
            .zip(&resid)
            .map(|((b, d), r)| d * b * r)
            .sum();
        let gap = (inner - sorted_l1_norm(lambda, b).expect("lengths checked")).abs();
        let dual: Vec<f64> = resid.iter().zip(d).map(|(r, d)| r * d).collect();
        let infeas = (dual_norm(lambda, &dual).expect("lambda nonzero") - 1.0).max(0.0);
        (gap, infeas)
    };

    let mut x = vec![0.0; p];
    let mut z = x.clone();
    let mut theta = 1.0f64;
    let mut restarted = false;
    let mut f_x = objective(&x);
    let mut last = (f64::INFINITY, f64::INFINITY);

    for iter in 1..=DIAGONAL_MAX_ITER {
        let point: Vec<f64> = z
            .iter()
            .zip(d)
            .zip(y)
            .map(|((z, d), y)| z - step * d * (d * z - y))
            .collect();
        let x_new = prox_sorted_l1(&scaled_lambda, &point)?;
        let f_new = objective(&x_new);

        let (gap, infeas) = certificate(&x_new);
        last = (gap, infeas);
        if gap <= tol && infeas <= tol {
            return Ok((
                DiagonalSolution {
                    b: x_new,
                    iterations: iter,
                    gap,
                    infeas,
                },
                true,
            ));
        }

        if f_new > f_x && !restarted {
            // adaptive restart; the next plain proximal step is accepted
            restarted = true;
            theta = 1.0;
            z.clone_from(&x);
            continue;
        }
        restarted = false;
        let theta_next = 0.5 * (1.0 + (1.0 + 4.0 * theta * theta).sqrt());
        let momentum = (theta - 1.0) / theta_next;
        for i in 0..p {
            z[i] = x_new[i] + momentum * (x_new[i] - x[i]);
        }
        theta = theta_next;
        x = x_new;
        f_x = f_new;
    }
    Ok((
        DiagonalSolution {
            b: x,
            iterations: DIAGONAL_MAX_ITER,
            gap: last.0,
            infeas: last.1,
        },
        false,
    ))
}
