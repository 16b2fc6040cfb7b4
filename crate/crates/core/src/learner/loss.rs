use alloc::vec;
use alloc::vec::Vec;

use crate::math;
use crate::policy::midpoints;

/// Huber threshold.
pub const DEFAULT_KAPPA: f64 = 1.0;

/// `Huber_κ(u) / κ`: quadratic `u²/(2κ)` inside `|u| ≤ κ`, linear outside.
///
/// The `1/κ` scale leaves `κ = 1` untouched and keeps the slope outside
/// the quadratic zone at one for any `κ`.
pub fn huber(u: f64, kappa: f64) -> f64 {
    let a = math::abs(u);
    if a <= kappa {
        0.5 * u * u / kappa
    } else {
        a - 0.5 * kappa
    }
}

fn huber_slope(u: f64, kappa: f64) -> f64 {
    if math::abs(u) <= kappa {
        u / kappa
    } else if u > 0.0 {
        1.0
    } else {
        -1.0
    }
}

/// Quantile Huber loss of predictions `q` against target samples:
/// `(1/n) Σ_j Σ_m |ν_j − 𝕀{T_m < q_j}|·Huber_κ(T_m − q_j)`.
pub fn quantile_huber_loss(q: &[f64], targets: &[f64], kappa: f64) -> f64 {
    let n = q.len();
    let nu = midpoints(n);
    let mut total = 0.0;
    for (j, &qj) in q.iter().enumerate() {
        for &t in targets {
            let below = if t < qj { 1.0 } else { 0.0 };
            total += math::abs(nu[j] - below) * huber(t - qj, kappa);
        }
    }
    total / n as f64
}

/// Gradient of [`quantile_huber_loss`] with respect to `q`.
pub fn quantile_huber_gradient(q: &[f64], targets: &[f64], kappa: f64) -> Vec<f64> {
    let n = q.len();
    let nu = midpoints(n);
    let mut grad = vec![0.0; n];
    for (j, &qj) in q.iter().enumerate() {
        for &t in targets {
            let below = if t < qj { 1.0 } else { 0.0 };
            grad[j] -= math::abs(nu[j] - below) * huber_slope(t - qj, kappa);
        }
        grad[j] /= n as f64;
    }
    grad
}
