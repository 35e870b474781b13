//! Scalar special functions: incomplete gamma and beta, chi distributions,
//! equal-weight mixtures of scaled chi distributions and the F survival
//! function used by the genotype screen.

use std::f64::consts::PI;

use crate::error::{check_len, Error, Result};

const EPS: f64 = 1e-15;
const MAX_SERIES_ITER: usize = 10_000;
const TINY: f64 = 1e-300;

/// Probabilities handed to the quantile routines are capped to this distance
/// from 0 and 1; beyond it the brackets become meaningless in f64.
pub const PROB_CAP: f64 = 1e-15;

const QUANTILE_MAX_ITER: usize = 200;

const LANCZOS_G: f64 = 7.0;
const LANCZOS_COEF: [f64; 9] = [
    0.999_999_999_999_809_93,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_13,
    -176.615_029_162_140_59,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_571_6e-6,
    1.505_632_735_149_311_6e-7,
];

/// Natural log of the gamma function for positive arguments.
pub fn ln_gamma(x: f64) -> f64 {
    if x < 0.5 {
        // reflection
        (PI / (PI * x).sin()).ln() - ln_gamma(1.0 - x)
    } else {
        let x = x - 1.0;
        let mut acc = LANCZOS_COEF[0];
        for (i, c) in LANCZOS_COEF.iter().enumerate().skip(1) {
            acc += c / (x + i as f64);
        }
        let t = x + LANCZOS_G + 0.5;
        0.5 * (2.0 * PI).ln() + (x + 0.5) * t.ln() - t + acc.ln()
    }
}

/// Returns (P(a,x), Q(a,x)), each computed on the side where it is accurate.
fn gamma_pq(a: f64, x: f64) -> Result<(f64, f64)> {
    if !(a > 0.0) || !a.is_finite() {
        return Err(Error::domain(format!(
            "incomplete gamma needs a > 0, got {a}"
        )));
    }
    if !(x >= 0.0) {
        return Err(Error::domain(format!(
            "incomplete gamma needs x >= 0, got {x}"
        )));
    }
    if x == 0.0 {
        return Ok((0.0, 1.0));
    }
    if x.is_infinite() {
        return Ok((1.0, 0.0));
    }
    let log_prefactor = -x + a * x.ln() - ln_gamma(a);
    if x < a + 1.0 {
        let mut ap = a;
        let mut term = 1.0 / a;
        let mut sum = term;
        for _ in 0..MAX_SERIES_ITER {
            ap += 1.0;
            term *= x / ap;
            sum += term;
            if term.abs() < sum.abs() * EPS {
                break;
            }
        }
        let p = (sum.ln() + log_prefactor).exp().min(1.0);
        Ok((p, 1.0 - p))
    } else {
        // modified Lentz on the continued fraction for Q
        let mut b = x + 1.0 - a;
        let mut c = 1.0 / TINY;
        let mut d = 1.0 / b;
        let mut h = d;
        for i in 1..MAX_SERIES_ITER {
            let an = -(i as f64) * (i as f64 - a);
            b += 2.0;
            d = an * d + b;
            if d.abs() < TINY {
                d = TINY;
            }
            c = b + an / c;
            if c.abs() < TINY {
                c = TINY;
            }
            d = 1.0 / d;
            let delta = d * c;
            h *= delta;
            if (delta - 1.0).abs() < EPS {
                break;
            }
        }
        let q = (h.ln() + log_prefactor).exp().min(1.0);
        Ok((1.0 - q, q))
    }
}

/// Regularized lower incomplete gamma function P(a, x).
pub fn reg_lower_gamma(a: f64, x: f64) -> Result<f64> {
    gamma_pq(a, x).map(|(p, _)| p)
}

/// Regularized upper incomplete gamma function Q(a, x) = 1 - P(a, x).
pub fn reg_upper_gamma(a: f64, x: f64) -> Result<f64> {
    gamma_pq(a, x).map(|(_, q)| q)
}

fn check_dof(l: u32) -> Result<()> {
    if l == 0 {
        Err(Error::domain(
            "chi distribution needs at least one degree of freedom",
        ))
    } else {
        Ok(())
    }
}

/// CDF of the chi distribution with `l` degrees of freedom.
pub fn chi_cdf(l: u32, x: f64) -> Result<f64> {
    check_dof(l)?;
    if x <= 0.0 {
        return Ok(0.0);
    }
    reg_lower_gamma(0.5 * l as f64, 0.5 * x * x)
}

/// Survival function 1 - F of the chi distribution.
pub fn chi_sf(l: u32, x: f64) -> Result<f64> {
    check_dof(l)?;
    if x <= 0.0 {
        return Ok(1.0);
    }
    reg_upper_gamma(0.5 * l as f64, 0.5 * x * x)
}

pub fn chi_pdf(l: u32, x: f64) -> Result<f64> {
    check_dof(l)?;
    if x < 0.0 {
        return Ok(0.0);
    }
    let k = l as f64;
    if x == 0.0 {
        return Ok(if l == 1 { (2.0 / PI).sqrt() } else { 0.0 });
    }
    let log_pdf =
        (k - 1.0) * x.ln() - 0.5 * x * x - (0.5 * k - 1.0) * 2f64.ln() - ln_gamma(0.5 * k);
    Ok(log_pdf.exp())
}

fn check_prob(p: f64) -> Result<f64> {
    if p > 0.0 && p < 1.0 {
        Ok(p.clamp(PROB_CAP, 1.0 - PROB_CAP))
    } else {
        Err(Error::domain(format!(
            "probability must lie in (0, 1), got {p}"
        )))
    }
}

/// Inverts a continuous distribution on [0, inf) by bracketing, bisection and
/// a safeguarded Newton polish. Upper-half probabilities are matched through
/// the survival function so that tail quantiles keep full relative accuracy.
fn invert_nonneg(
    p: f64,
    initial_hi: f64,
    cdf: impl Fn(f64) -> f64,
    sf: impl Fn(f64) -> f64,
    pdf: impl Fn(f64) -> f64,
) -> Result<f64> {
    let upper = p > 0.5;
    let tail = 1.0 - p;
    // increasing residual, root at the quantile
    let residual = |x: f64| if upper { tail - sf(x) } else { cdf(x) - p };

    let mut lo = 0.0;
    let mut hi = initial_hi.max(1e-8);
    let mut iter = 0;
    while residual(hi) < 0.0 {
        lo = hi;
        hi *= 2.0;
        iter += 1;
        if iter > QUANTILE_MAX_ITER || !hi.is_finite() {
            return Err(Error::NonConvergence {
                iterations: iter,
                gap: f64::NAN,
                infeas: f64::NAN,
            });
        }
    }

    while hi - lo > 1e-6 * hi.max(1.0) {
        iter += 1;
        if iter > QUANTILE_MAX_ITER {
            return Err(Error::NonConvergence {
                iterations: iter,
                gap: hi - lo,
                infeas: f64::NAN,
            });
        }
        let mid = 0.5 * (lo + hi);
        if residual(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }

    let mut x = 0.5 * (lo + hi);
    loop {
        iter += 1;
        if iter > QUANTILE_MAX_ITER {
            return Err(Error::NonConvergence {
                iterations: iter,
                gap: residual(x),
                infeas: f64::NAN,
            });
        }
        let r = residual(x);
        if r == 0.0 {
            return Ok(x);
        }
        if r < 0.0 {
            lo = x;
        } else {
            hi = x;
        }
        let slope = pdf(x);
        let mut next = if slope > 0.0 { x - r / slope } else { f64::NAN };
        if !(next > lo && next < hi) {
            next = 0.5 * (lo + hi);
        }
        if (next - x).abs() <= 4.0 * f64::EPSILON * x.abs() || hi - lo <= 4.0 * f64::EPSILON * hi {
            return Ok(next);
        }
        x = next;
    }
}

/// Quantile of the chi distribution with `l` degrees of freedom.
pub fn chi_quantile(l: u32, p: f64) -> Result<f64> {
    check_dof(l)?;
    let p = check_prob(p)?;
    // mean of chi_l is close to sqrt(l)
    let guess = (l as f64).sqrt() + 2.0;
    invert_nonneg(
        p,
        guess,
        |x| chi_cdf(l, x).unwrap_or(f64::NAN),
        |x| chi_sf(l, x).unwrap_or(f64::NAN),
        |x| chi_pdf(l, x).unwrap_or(0.0),
    )
}

/// Equal-weight mixture of scaled chi distributions `scale_j * chi_{dof_j}`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChiMixture {
    dof: Vec<u32>,
    scales: Vec<f64>,
    // identical components merged: (dof, scale, share of the total weight)
    atoms: Vec<(u32, f64, f64)>,
}

impl ChiMixture {
    pub fn new(dof: Vec<u32>, scales: Vec<f64>) -> Result<Self> {
        if dof.is_empty() {
            return Err(Error::domain("chi mixture needs at least one component"));
        }
        check_len("mixture scales", dof.len(), scales.len())?;
        if dof.iter().any(|&l| l == 0) {
            return Err(Error::domain("chi mixture degrees of freedom must be >= 1"));
        }
        if scales.iter().any(|&s| !(s > 0.0) || !s.is_finite()) {
            return Err(Error::domain(
                "chi mixture scales must be positive and finite",
            ));
        }
        let mut pairs: Vec<(u32, f64)> = dof.iter().copied().zip(scales.iter().copied()).collect();
        pairs.sort_by(|a, b| a.0.cmp(&b.0).then(a.1.total_cmp(&b.1)));
        let share = 1.0 / pairs.len() as f64;
        let mut atoms: Vec<(u32, f64, f64)> = Vec::new();
        for (l, s) in pairs {
            match atoms.last_mut() {
                Some(last) if last.0 == l && last.1 == s => last.2 += share,
                _ => atoms.push((l, s, share)),
            }
        }
        Ok(Self { dof, scales, atoms })
    }

    pub fn dof(&self) -> &[u32] {
        &self.dof
    }

    pub fn scales(&self) -> &[f64] {
        &self.scales
    }

    pub fn len(&self) -> usize {
        self.dof.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dof.is_empty()
    }

    fn components(&self) -> impl Iterator<Item = (u32, f64)> + '_ {
        self.atoms.iter().map(|&(l, s, _)| (l, s))
    }

    fn mean_over(&self, f: impl Fn(u32, f64) -> f64) -> f64 {
        self.atoms
            .iter()
            .map(|&(l, s, share)| share * f(l, s))
            .sum()
    }

    pub fn cdf(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        self.mean_over(|l, s| chi_cdf(l, x / s).expect("valid component"))
    }

    pub fn sf(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 1.0;
        }
        self.mean_over(|l, s| chi_sf(l, x / s).expect("valid component"))
    }

    pub fn pdf(&self, x: f64) -> f64 {
        self.mean_over(|l, s| chi_pdf(l, x / s).expect("valid component") / s)
    }

    pub fn quantile(&self, p: f64) -> Result<f64> {
        let p = check_prob(p)?;
        // every component is past p here, hence so is the mixture
        let mut hi: f64 = 0.0;
        for (l, s) in self.components() {
            hi = hi.max(s * chi_quantile(l, p)?);
        }
        invert_nonneg(
            p,
            hi * (1.0 + 1e-9),
            |x| self.cdf(x),
            |x| self.sf(x),
            |x| self.pdf(x),
        )
    }
}

/// Equal-weight average of the component CDFs `chi_cdf(l_j, x / scale_j)`.
pub fn mixture_cdf(mix: &ChiMixture, x: f64) -> f64 {
    mix.cdf(x)
}

pub fn mixture_quantile(mix: &ChiMixture, p: f64) -> Result<f64> {
    mix.quantile(p)
}

/// Regularized incomplete beta function I_x(a, b).
pub fn reg_inc_beta(a: f64, b: f64, x: f64) -> Result<f64> {
    if !(a > 0.0 && b > 0.0) {
        return Err(Error::domain(format!(
            "incomplete beta needs a, b > 0, got ({a}, {b})"
        )));
    }
    if !(0.0..=1.0).contains(&x) {
        return Err(Error::domain(format!(
            "incomplete beta needs x in [0, 1], got {x}"
        )));
    }
    if x == 0.0 || x == 1.0 {
        return Ok(x);
    }
    let log_front = ln_gamma(a + b) - ln_gamma(a) - ln_gamma(b) + a * x.ln() + b * (1.0 - x).ln();
    if x < (a + 1.0) / (a + b + 2.0) {
        Ok((log_front.exp() * beta_cf(a, b, x) / a).clamp(0.0, 1.0))
    } else {
        Ok((1.0 - log_front.exp() * beta_cf(b, a, 1.0 - x) / b).clamp(0.0, 1.0))
    }
}

fn beta_cf(a: f64, b: f64, x: f64) -> f64 {
    let qab = a + b;
    let qap = a + 1.0;
    let qam = a - 1.0;
    let mut c = 1.0;
    let mut d = 1.0 - qab * x / qap;
    if d.abs() < TINY {
        d = TINY;
    }
    d = 1.0 / d;
    let mut h = d;
    for m in 1..MAX_SERIES_ITER {
        let m = m as f64;
        let m2 = 2.0 * m;
        let aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        h *= d * c;
        let aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let delta = d * c;
        h *= delta;
        if (delta - 1.0).abs() < EPS {
            break;
        }
    }
    h
}

/// Upper-tail probability of the F(d1, d2) distribution.
pub fn f_sf(d1: u32, d2: u32, x: f64) -> Result<f64> {
    if d1 == 0 || d2 == 0 {
        return Err(Error::domain(
            "F distribution degrees of freedom must be >= 1",
        ));
    }
    if x.is_nan() || x < 0.0 {
        return Err(Error::domain(format!(
            "F statistic must be nonnegative, got {x}"
        )));
    }
    if x == 0.0 {
        return Ok(1.0);
    }
    if x.is_infinite() {
        return Ok(0.0);
    }
    let (d1, d2) = (d1 as f64, d2 as f64);
    reg_inc_beta(0.5 * d2, 0.5 * d1, d2 / (d2 + d1 * x))
}
