//! Closed-form bias, sample-count and cost calculators.

use serde::Serialize;

use crate::error::{Error, Result};

fn below_half(name: &str, p: f64) -> Result<()> {
    if !(0.0..0.5).contains(&p) {
        return Err(Error::Domain(format!("{name} = {p} must lie in [0, 1/2)")));
    }
    Ok(())
}

fn positive(name: &str, x: f64) -> Result<()> {
    if !(x > 0.0 && x.is_finite()) {
        return Err(Error::Domain(format!("{name} = {x} must be positive")));
    }
    Ok(())
}

fn nonnegative(name: &str, x: f64) -> Result<()> {
    if !(x >= 0.0 && x.is_finite()) {
        return Err(Error::Domain(format!("{name} = {x} must be nonnegative")));
    }
    Ok(())
}

fn probability(name: &str, f: f64) -> Result<()> {
    if !(f > 0.0 && f < 1.0) {
        return Err(Error::Domain(format!("{name} = {f} must lie in (0, 1)")));
    }
    Ok(())
}

/// `‖a‖∞ |1/(1-2P̂) - 1/(1-2P)|`.
pub fn bias_bound(p: f64, p_hat: f64, sup_norm: f64) -> Result<f64> {
    below_half("P", p)?;
    below_half("P̂", p_hat)?;
    nonnegative("‖a‖∞", sup_norm)?;
    Ok(sup_norm * (1.0 / (1.0 - 2.0 * p_hat) - 1.0 / (1.0 - 2.0 * p)).abs())
}

/// `t_P = min{δ(1-2P)²/(4+2δ(1-2P)), 1/2-P}`.
pub fn t_p(delta: f64, p: f64) -> Result<f64> {
    positive("δ", delta)?;
    below_half("P", p)?;
    let g = 1.0 - 2.0 * p;
    Ok((delta * g * g / (4.0 + 2.0 * delta * g)).min(0.5 - p))
}

/// `⌈ln(4/f) / (2 t_P²)⌉`.
pub fn min_m_p(delta: f64, f: f64, p: f64) -> Result<u64> {
    probability("f", f)?;
    let t = t_p(delta, p)?;
    Ok(((4.0 / f).ln() / (2.0 * t * t)).ceil() as u64)
}

/// `⌈8 ln(4/f) / (δ²(1-2P-2t_P)²)⌉`.
pub fn min_m(delta: f64, f: f64, p: f64) -> Result<u64> {
    probability("f", f)?;
    let t = t_p(delta, p)?;
    let g = 1.0 - 2.0 * p - 2.0 * t;
    if g <= 0.0 {
        return Err(Error::Domain(format!("1 - 2P - 2t_P = {g} is not positive")));
    }
    Ok((8.0 * (4.0 / f).ln() / (delta * delta * g * g)).ceil() as u64)
}

/// Mean and variance of the sampling cost `M_es`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CostMoments {
    pub mean: f64,
    pub variance: f64,
}

/// `E[M_es] = M_P + M P̂/(P(1-2P̂))`, `Var[M_es] = M P̂(2-P-3P̂+2PP̂)/(P²(1-2P̂)²)`.
pub fn cost_moments(m_p: u64, m: u64, p: f64, p_hat: f64) -> Result<CostMoments> {
    if !(p > 0.0 && p <= 1.0) {
        return Err(Error::Domain(format!("P = {p} must lie in (0, 1]; boost P when it vanishes")));
    }
    below_half("P̂", p_hat)?;
    let (m_p, m) = (m_p as f64, m as f64);
    let g = 1.0 - 2.0 * p_hat;
    Ok(CostMoments { mean: m_p + m * p_hat / (p * g), variance: m * p_hat * (2.0 - p - 3.0 * p_hat + 2.0 * p * p_hat) / (p * p * g * g) })
}

/// `M_es/M ≈ 1/(1-2P)² + 1/(1-2P)` when `M_P` scales as `M/(1-2P)²` and `P̂ = P`.
pub fn asymptotic_cost_ratio(p: f64) -> Result<f64> {
    below_half("P", p)?;
    let g = 1.0 - 2.0 * p;
    Ok(1.0 / (g * g) + 1.0 / g)
}

/// Error budgets of logical Pauli gates and super-qubit operations.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SuperQubitErrors {
    /// Non-Pauli operations `N` in the circuit.
    pub operations: f64,
    /// Pauli gates per sampler circuit.
    pub n_p: f64,
    /// Pauli gates per computational operation.
    pub chi_p: f64,
    /// Super-qubit operations per sampler circuit.
    pub n_s: f64,
    pub eps_p: f64,
    pub eps_s: f64,
}

impl SuperQubitErrors {
    /// The operation-set constants `n_P = 20`, `χ_P = 5`, `n_S = 15`.
    pub fn surface_code(operations: f64, eps_p: f64, eps_s: f64) -> Self {
        SuperQubitErrors { operations, n_p: 20.0, chi_p: 5.0, n_s: 15.0, eps_p, eps_s }
    }
}

/// Bias bounds from Pauli-gate and super-qubit errors: `(sampler, circuit)`.
///
/// The sampler bound is `‖a‖∞|1/(1-2P′) - 1/(1-2P)| + ‖a‖∞/(1-2P)² [2|P/P′ - 1| + N(n_P ε_P + n_S ε_S)]`,
/// the circuit bound `‖a‖∞ N(2n_P ε_P + 2n_S ε_S + χ_P ε_P)/(1-2P′)`.
pub fn pauli_superqubit_bias(e: &SuperQubitErrors, p: f64, p_prime: f64, sup_norm: f64) -> Result<(f64, f64)> {
    below_half("P", p)?;
    below_half("P′", p_prime)?;
    positive("P′", p_prime)?;
    for (name, x) in [("N", e.operations), ("n_P", e.n_p), ("χ_P", e.chi_p), ("n_S", e.n_s), ("ε_P", e.eps_p), ("ε_S", e.eps_s)] {
        nonnegative(name, x)?;
    }
    nonnegative("‖a‖∞", sup_norm)?;
    let g = 1.0 - 2.0 * p;
    let gp = 1.0 - 2.0 * p_prime;
    let per_sampler = e.n_p * e.eps_p + e.n_s * e.eps_s;
    let sampler =
        sup_norm * (1.0 / gp - 1.0 / g).abs() + sup_norm / (g * g) * (2.0 * (p / p_prime - 1.0).abs() + e.operations * per_sampler);
    let circuit = sup_norm * e.operations * (2.0 * per_sampler + e.chi_p * e.eps_p) / gp;
    Ok((sampler, circuit))
}

/// `2‖a‖∞ / Π(1-2P_j) · Σ δP_j/(1-2P_j)`, the first-order multi-segment bias estimate.
pub fn segmented_bias_bound(rates: &[f64], deviations: &[f64], sup_norm: f64) -> Result<f64> {
    if rates.is_empty() || rates.len() != deviations.len() {
        return Err(Error::Domain("segment rates and deviations must be nonempty and equally long".into()));
    }
    nonnegative("‖a‖∞", sup_norm)?;
    let mut product = 1.0;
    let mut sum = 0.0;
    for (&p, &dp) in rates.iter().zip(deviations) {
        below_half("P_j", p)?;
        nonnegative("δP_j", dp)?;
        product *= 1.0 - 2.0 * p;
        sum += dp / (1.0 - 2.0 * p);
    }
    Ok(2.0 * sup_norm / product * sum)
}

/// Benchmarking overhead `(80 d_S³ + 40 d_S² d)/(24 d³)`.
pub fn surface_overhead(d: f64, d_s: f64) -> Result<f64> {
    positive("d", d)?;
    positive("d_S", d_s)?;
    let r = d_s / d;
    Ok(10.0 * r.powi(3) / 3.0 + 5.0 * r * r / 3.0)
}
