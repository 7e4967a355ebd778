use serde::Serialize;

use super::wasserstein::{grid_distance, EmpiricalDistribution, QUANTILE_GRID};
use crate::{Error, Result};

/// Smallest admissible scale.
pub const MIN_SCALE: f64 = 1e-6;

/// Scale bracket width at which the golden-section search stops.
pub const SCALE_TOLERANCE: f64 = 1e-8;

/// The pushforward under `x ↦ scale·x + shift`; a density `f` becomes
/// `(1/a) f((x - b)/a)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AffineOperator {
    pub scale: f64,
    pub shift: f64,
}

impl AffineOperator {
    pub const IDENTITY: AffineOperator = AffineOperator { scale: 1.0, shift: 0.0 };

    pub fn new(scale: f64, shift: f64) -> Result<Self> {
        if !(scale.is_finite() && shift.is_finite()) || scale < MIN_SCALE {
            return Err(Error::Config(format!(
                "affine operator needs finite shift and scale >= {MIN_SCALE}, got ({scale}, {shift})"
            )));
        }
        Ok(Self { scale, shift })
    }

    pub fn apply_value(&self, x: f64) -> f64 {
        self.scale * x + self.shift
    }

    pub fn apply(&self, f: &EmpiricalDistribution) -> EmpiricalDistribution {
        EmpiricalDistribution::new(f.sample().iter().map(|&x| self.apply_value(x)).collect())
            .expect("affine image of a finite sample is finite")
    }
}

pub fn apply_operator(op: &AffineOperator, f: &EmpiricalDistribution) -> EmpiricalDistribution {
    op.apply(f)
}

/// Result of fitting `g ≈ T_{a,b} f`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OperatorFit {
    pub operator: AffineOperator,
    /// Distance between `g` and the transformed `f` at the optimum.
    pub residual: f64,
    /// False when `f` is a point mass, in which case the scale is pinned at
    /// [`MIN_SCALE`].
    pub scale_identified: bool,
}

fn median_sorted_copy(buf: &mut [f64]) -> f64 {
    buf.sort_unstable_by(f64::total_cmp);
    let n = buf.len();
    if n % 2 == 1 {
        buf[n / 2]
    } else {
        0.5 * (buf[n / 2 - 1] + buf[n / 2])
    }
}

/// Objective profiled over the shift: `(min_b φ(a, b), argmin b)`.
fn profile(qf: &[f64], qg: &[f64], scale: f64, buf: &mut Vec<f64>) -> (f64, f64) {
    buf.clear();
    buf.extend(qf.iter().zip(qg).map(|(x, y)| y - scale * x));
    let shift = median_sorted_copy(buf);
    let obj = buf.iter().map(|r| (r - shift).abs()).sum::<f64>() / buf.len() as f64;
    (obj, shift)
}

fn objective(qf: &[f64], qg: &[f64], scale: f64, shift: f64) -> f64 {
    qf.iter().zip(qg).map(|(x, y)| (scale * x + shift - y).abs()).sum::<f64>() / qf.len() as f64
}

/// Number of smallest-residual grid points whose pairwise lines are tried.
const POLISH_CANDIDATES: usize = 24;

/// Snaps a near-optimal `(a, b)` to an exact minimiser.
///
/// An optimum of the piecewise-linear objective lies on a line through two
/// of the points `(q_f(u_j), q_g(u_j))`; those with the smallest residuals
/// at the approximate solution are the candidates.
fn polish_vertex(qf: &[f64], qg: &[f64], scale: f64, shift: f64) -> (f64, f64) {
    let mut order: Vec<usize> = (0..qf.len()).collect();
    let resid = |j: usize| (scale * qf[j] + shift - qg[j]).abs();
    order.sort_by(|&i, &j| resid(i).total_cmp(&resid(j)).then(i.cmp(&j)));
    order.truncate(POLISH_CANDIDATES);
    let mut best = (objective(qf, qg, scale, shift), scale, shift);
    for (k, &i) in order.iter().enumerate() {
        for &j in &order[k + 1..] {
            let dx = qf[j] - qf[i];
            if dx == 0.0 {
                continue;
            }
            let a = (qg[j] - qg[i]) / dx;
            if !(a >= MIN_SCALE && a.is_finite()) {
                continue;
            }
            let b = qg[i] - a * qf[i];
            let v = objective(qf, qg, a, b);
            if v < best.0 {
                best = (v, a, b);
            }
        }
    }
    (best.1, best.2)
}

fn spread(d: &EmpiricalDistribution) -> f64 {
    let iqr = d.interquartile_range();
    if iqr > 0.0 {
        iqr
    } else {
        d.max() - d.min()
    }
}

/// Fits the affine operator minimising `W₁(g, T_{a,b} f)`.
///
/// The objective `φ(a, b) = mean_j |a q_f(u_j) + b - q_g(u_j)|` is jointly
/// convex, so its profile over `b` is convex in `a`. The profile is minimised
/// by golden-section search over `[MIN_SCALE, a_max]`; for each `a` the
/// optimal shift is the median of `q_g - a q_f`.
pub fn fit_operator(f: &EmpiricalDistribution, g: &EmpiricalDistribution) -> Result<OperatorFit> {
    let qf = f.quantile_grid(QUANTILE_GRID);
    let qg = g.quantile_grid(QUANTILE_GRID);
    let mut buf = Vec::with_capacity(QUANTILE_GRID);

    if f.is_point_mass() {
        if !g.is_point_mass() {
            log::warn!("operator fit: source distribution is a point mass; scale pinned at {MIN_SCALE}");
        }
        let (residual, shift) = profile(&qf, &qg, MIN_SCALE, &mut buf);
        return Ok(OperatorFit {
            operator: AffineOperator { scale: MIN_SCALE, shift },
            residual,
            scale_identified: false,
        });
    }

    let upper = (100.0 * spread(g) / spread(f)).max(2.0 * MIN_SCALE);
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut lo, mut hi) = (MIN_SCALE, upper);
    let mut x1 = hi - inv_phi * (hi - lo);
    let mut x2 = lo + inv_phi * (hi - lo);
    let mut f1 = profile(&qf, &qg, x1, &mut buf).0;
    let mut f2 = profile(&qf, &qg, x2, &mut buf).0;
    let mut best = if f1 <= f2 { (f1, x1) } else { (f2, x2) };
    while hi - lo >= SCALE_TOLERANCE {
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - inv_phi * (hi - lo);
            f1 = profile(&qf, &qg, x1, &mut buf).0;
            if f1 < best.0 {
                best = (f1, x1);
            }
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + inv_phi * (hi - lo);
            f2 = profile(&qf, &qg, x2, &mut buf).0;
            if f2 < best.0 {
                best = (f2, x2);
            }
        }
    }
    for a in [lo, hi, 0.5 * (lo + hi)] {
        let v = profile(&qf, &qg, a, &mut buf).0;
        if v < best.0 {
            best = (v, a);
        }
    }
    let shift = profile(&qf, &qg, best.1, &mut buf).1;
    let (scale, shift) = polish_vertex(&qf, &qg, best.1, shift);
    let operator = AffineOperator { scale, shift };
    let mapped: Vec<f64> = qf.iter().map(|&x| operator.apply_value(x)).collect();
    Ok(OperatorFit {
        operator,
        residual: grid_distance(&mapped, &qg),
        scale_identified: true,
    })
}

/// Closed-form least-squares fit minimising the order-2 distance.
pub fn fit_operator_w2(f: &EmpiricalDistribution, g: &EmpiricalDistribution) -> Result<OperatorFit> {
    let qf = f.quantile_grid(QUANTILE_GRID);
    let qg = g.quantile_grid(QUANTILE_GRID);
    let m = QUANTILE_GRID as f64;
    let mf = qf.iter().sum::<f64>() / m;
    let mg = qg.iter().sum::<f64>() / m;
    let var: f64 = qf.iter().map(|x| (x - mf) * (x - mf)).sum();
    let cov: f64 = qf.iter().zip(&qg).map(|(x, y)| (x - mf) * (y - mg)).sum();
    let identified = var > 0.0;
    let scale = if identified { (cov / var).max(MIN_SCALE) } else { MIN_SCALE };
    let shift = mg - scale * mf;
    let residual = (qf
        .iter()
        .zip(&qg)
        .map(|(x, y)| (scale * x + shift - y).powi(2))
        .sum::<f64>()
        / m)
        .sqrt();
    Ok(OperatorFit {
        operator: AffineOperator { scale, shift },
        residual,
        scale_identified: identified,
    })
}
