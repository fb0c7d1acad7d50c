//! Mixture-Gamma (MG) distributions.
//!
//! An MG law is a finite convex mixture of Gamma densities,
//!
//! ```text
//! f(x) = sum_j w_j beta_j^alpha_j / Gamma(alpha_j) x^(alpha_j - 1) exp(-beta_j x),   x >= 0
//! ```
//!
//! It models the magnitude of small-scale fading. The product of two
//! independent MG variables is again (approximately) MG once the inner
//! integral is replaced by a Gauss–Laguerre rule; [`mg_product`] builds that
//! mixture and [`CascadedMgParams`] keeps the raw quadrature weights so the
//! normalization residual stays visible.

use rand::Rng;
use rand_distr::{Distribution, Gamma};
use statrs::function::gamma::{gamma_lr, ln_gamma};

use crate::error::{Error, Result};

/// Tolerance on the mixture weight sum.
pub const WEIGHT_SUM_TOL: f64 = 1e-12;

/// Default Gauss–Laguerre order for cascaded laws.
pub const DEFAULT_QUADRATURE_ORDER: usize = 30;

/// Largest supported Gauss–Laguerre order.
pub const MAX_QUADRATURE_ORDER: usize = 128;

/// One Gamma component of a mixture, in shape/rate form.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GammaComponent {
    pub weight: f64,
    pub shape: f64,
    pub rate: f64,
}

impl GammaComponent {
    /// `ln(w beta^alpha / Gamma(alpha))`, the log of the density prefactor.
    fn ln_epsilon(&self) -> f64 {
        self.weight.ln() + self.shape * self.rate.ln() - ln_gamma(self.shape)
    }

    /// Density prefactor `w beta^alpha / Gamma(alpha)`.
    pub fn epsilon(&self) -> f64 {
        self.ln_epsilon().exp()
    }
}

/// A validated Mixture-Gamma parameter set.
#[derive(Debug, Clone, PartialEq)]
pub struct MgParams {
    components: Vec<GammaComponent>,
}

impl MgParams {
    /// Builds a mixture from parallel weight/shape/rate arrays.
    pub fn new(weights: &[f64], shapes: &[f64], rates: &[f64]) -> Result<Self> {
        if weights.len() != shapes.len() || weights.len() != rates.len() {
            return Err(Error::DimensionMismatch(format!(
                "MG arrays have lengths w={}, alpha={}, beta={}",
                weights.len(),
                shapes.len(),
                rates.len()
            )));
        }
        let components = weights
            .iter()
            .zip(shapes)
            .zip(rates)
            .map(|((&weight, &shape), &rate)| GammaComponent {
                weight,
                shape,
                rate,
            })
            .collect();
        Self::from_components(components)
    }

    pub fn from_components(components: Vec<GammaComponent>) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::invalid("mg", "at least one Gamma component is required"));
        }
        for (j, c) in components.iter().enumerate() {
            if !(c.weight > 0.0) || !c.weight.is_finite() {
                return Err(Error::invalid(
                    format!("w[{j}]"),
                    format!("weights must be positive, got {}", c.weight),
                ));
            }
            if !(c.shape > 0.0) || !c.shape.is_finite() {
                return Err(Error::invalid(
                    format!("alpha[{j}]"),
                    format!("shape must be positive, got {}", c.shape),
                ));
            }
            if !(c.rate > 0.0) || !c.rate.is_finite() {
                return Err(Error::invalid(
                    format!("beta[{j}]"),
                    format!("rate must be positive, got {}", c.rate),
                ));
            }
        }
        let total: f64 = components.iter().map(|c| c.weight).sum();
        if (total - 1.0).abs() > WEIGHT_SUM_TOL {
            return Err(Error::invalid(
                "w",
                format!("weights must sum to 1 (got {total:.15})"),
            ));
        }
        Ok(Self { components })
    }

    /// Single Gamma law.
    pub fn gamma(shape: f64, rate: f64) -> Result<Self> {
        Self::new(&[1.0], &[shape], &[rate])
    }

    /// Unit-rate exponential law (`J = 1`, `alpha = beta = 1`).
    pub fn exponential() -> Self {
        Self {
            components: vec![GammaComponent {
                weight: 1.0,
                shape: 1.0,
                rate: 1.0,
            }],
        }
    }

    pub fn components(&self) -> &[GammaComponent] {
        &self.components
    }

    pub fn len(&self) -> usize {
        self.components.len()
    }

    pub fn is_empty(&self) -> bool {
        self.components.is_empty()
    }

    pub fn weights(&self) -> Vec<f64> {
        self.components.iter().map(|c| c.weight).collect()
    }

    pub fn shapes(&self) -> Vec<f64> {
        self.components.iter().map(|c| c.shape).collect()
    }

    pub fn rates(&self) -> Vec<f64> {
        self.components.iter().map(|c| c.rate).collect()
    }

    /// Density at `x`. Returns `+inf` at `x = 0` when any shape is below one.
    pub fn pdf(&self, x: f64) -> Result<f64> {
        if x < 0.0 || x.is_nan() {
            return Err(Error::Domain(format!("MG density requires x >= 0, got {x}")));
        }
        Ok(mixture_pdf(
            self.components
                .iter()
                .map(|c| (c.ln_epsilon(), c.shape, c.rate)),
            x,
        ))
    }

    /// Cumulative distribution function.
    pub fn cdf(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        self.components
            .iter()
            .map(|c| c.weight * gamma_lr(c.shape, c.rate * x))
            .sum()
    }

    /// Mean and variance.
    pub fn moments(&self) -> (f64, f64) {
        let mean: f64 = self
            .components
            .iter()
            .map(|c| c.weight * c.shape / c.rate)
            .sum();
        let variance = self
            .components
            .iter()
            .map(|c| {
                let m = c.shape / c.rate;
                c.weight * (c.shape / (c.rate * c.rate) + (m - mean).powi(2))
            })
            .sum();
        (mean, variance)
    }

    /// `E[X^2] = sum_j w_j alpha_j (alpha_j + 1) / beta_j^2`.
    pub fn second_moment(&self) -> f64 {
        self.components
            .iter()
            .map(|c| c.weight * c.shape * (c.shape + 1.0) / (c.rate * c.rate))
            .sum()
    }

    /// Draws one variate: component by weight, then a Gamma(shape, rate)
    /// variate. Never returns exactly zero.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let u: f64 = rng.random();
        let mut acc = 0.0;
        let mut chosen = self.components.len() - 1;
        for (j, c) in self.components.iter().enumerate() {
            acc += c.weight;
            if u < acc {
                chosen = j;
                break;
            }
        }
        let c = self.components[chosen];
        // parameters are validated positive and finite
        let gamma = Gamma::new(c.shape, 1.0 / c.rate).expect("validated gamma parameters");
        loop {
            let x = gamma.sample(rng);
            if x > 0.0 {
                return x;
            }
        }
    }
}

/// Free-function form of [`MgParams::pdf`].
pub fn mg_pdf(params: &MgParams, x: f64) -> Result<f64> {
    params.pdf(x)
}

/// Free-function form of [`MgParams::moments`].
pub fn mg_moments(params: &MgParams) -> (f64, f64) {
    params.moments()
}

/// Free-function form of [`MgParams::sample`].
pub fn mg_sample<R: Rng + ?Sized>(params: &MgParams, rng: &mut R) -> f64 {
    params.sample(rng)
}

fn mixture_pdf(terms: impl Iterator<Item = (f64, f64, f64)>, x: f64) -> f64 {
    let mut total = 0.0;
    for (ln_eps, shape, rate) in terms {
        if x == 0.0 {
            if shape < 1.0 {
                return f64::INFINITY;
            } else if shape == 1.0 {
                total += ln_eps.exp();
            }
        } else {
            total += (ln_eps + (shape - 1.0) * x.ln() - rate * x).exp();
        }
    }
    total
}

/// Gauss–Laguerre rule for `∫_0^∞ e^{-t} f(t) dt ≈ Σ ϖ_a f(t_a)`.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussLaguerreRule {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussLaguerreRule {
    /// Nodes are the roots of `L_A`, found by Newton iteration from the
    /// usual asymptotic initial guesses; weights are
    /// `t_a / ((A+1)^2 L_{A+1}(t_a)^2)`.
    pub fn new(order: usize) -> Result<Self> {
        if order == 0 || order > MAX_QUADRATURE_ORDER {
            return Err(Error::invalid(
                "order",
                format!("Gauss-Laguerre order must be in 1..={MAX_QUADRATURE_ORDER}, got {order}"),
            ));
        }
        let n = order;
        let nf = n as f64;
        let mut nodes: Vec<f64> = Vec::with_capacity(n);
        let mut weights = Vec::with_capacity(n);
        for i in 0..n {
            let mut z = match i {
                0 => 3.0 / (1.0 + 2.4 * nf),
                1 => nodes[0] + 15.0 / (1.0 + 2.5 * nf),
                _ => {
                    let ai = (i - 1) as f64;
                    let prev = nodes[i - 1];
                    prev + (1.0 + 2.55 * ai) / (1.9 * ai) * (prev - nodes[i - 2])
                }
            };
            let mut converged = false;
            for _ in 0..200 {
                let (ln, lnm1, _) = laguerre_scaled(n, z);
                let deriv = nf * (ln - lnm1) / z;
                let step = ln / deriv;
                z -= step;
                if step.abs() <= 1e-14 * z.abs().max(1.0) {
                    converged = true;
                    break;
                }
            }
            if !converged || !(z > 0.0) {
                return Err(Error::RootFinding(format!(
                    "Laguerre root {i} of order {n} did not converge (last iterate {z})"
                )));
            }
            if let Some(&prev) = nodes.last() {
                if z <= prev {
                    return Err(Error::RootFinding(format!(
                        "Laguerre roots of order {n} not strictly increasing at index {i}"
                    )));
                }
            }
            let (lnp1, _, log_scale) = laguerre_scaled(n + 1, z);
            let ln_weight = z.ln() - 2.0 * (nf + 1.0).ln() - 2.0 * (lnp1.abs().ln() + log_scale);
            nodes.push(z);
            weights.push(ln_weight.exp());
        }
        Ok(Self { nodes, weights })
    }

    pub fn order(&self) -> usize {
        self.nodes.len()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Applies the rule to `f`.
    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&t, &w)| w * f(t))
            .sum()
    }
}

/// Free-function form of [`GaussLaguerreRule::new`].
pub fn gauss_laguerre_rule(order: usize) -> Result<GaussLaguerreRule> {
    GaussLaguerreRule::new(order)
}

/// Returns `(L_n(t), L_{n-1}(t), log_scale)` with both polynomial values
/// divided by `exp(log_scale)`. Rescaling keeps high orders finite at large
/// nodes.
fn laguerre_scaled(n: usize, t: f64) -> (f64, f64, f64) {
    const BIG: f64 = 1e150;
    let mut prev = 1.0; // L_0
    if n == 0 {
        return (1.0, 0.0, 0.0);
    }
    let mut cur = 1.0 - t; // L_1
    let mut log_scale = 0.0;
    for j in 1..n {
        let jf = j as f64;
        let next = ((2.0 * jf + 1.0 - t) * cur - jf * prev) / (jf + 1.0);
        prev = cur;
        cur = next;
        if cur.abs() > BIG {
            cur /= BIG;
            prev /= BIG;
            log_scale += BIG.ln();
        }
    }
    (cur, prev, log_scale)
}

/// One component of a cascaded (product) mixture, indexed by the two
/// factor components `(u, b)` and the quadrature node `a`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CascadedComponent {
    pub u: usize,
    pub b: usize,
    pub a: usize,
    /// Raw quadrature weight `ŵ` (not renormalized).
    pub weight: f64,
    pub shape: f64,
    pub rate: f64,
    /// Density prefactor `ε̂`.
    pub epsilon: f64,
    /// Quadrature node `t_a` this component was built from.
    pub node: f64,
}

/// Mixture approximating the density of `X·Y` for independent MG `X`, `Y`.
#[derive(Debug, Clone, PartialEq)]
pub struct CascadedMgParams {
    components: Vec<CascadedComponent>,
    first_count: usize,
    second_count: usize,
    order: usize,
}

impl CascadedMgParams {
    pub fn components(&self) -> &[CascadedComponent] {
        &self.components
    }

    /// `(U, B, A)`.
    pub fn counts(&self) -> (usize, usize, usize) {
        (self.first_count, self.second_count, self.order)
    }

    /// `Σ ŵ`; equals one up to quadrature error.
    pub fn weight_sum(&self) -> f64 {
        self.components.iter().map(|c| c.weight).sum()
    }

    /// `|Σ ŵ − 1|`.
    pub fn normalization_residual(&self) -> f64 {
        (self.weight_sum() - 1.0).abs()
    }

    pub fn pdf(&self, x: f64) -> Result<f64> {
        if x < 0.0 || x.is_nan() {
            return Err(Error::Domain(format!("MG density requires x >= 0, got {x}")));
        }
        Ok(mixture_pdf(
            self.components
                .iter()
                .map(|c| (c.epsilon.ln(), c.shape, c.rate)),
            x,
        ))
    }

    pub fn cdf(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        self.components
            .iter()
            .map(|c| c.weight * gamma_lr(c.shape, c.rate * x))
            .sum()
    }

    /// Mean and variance from the triple sums over `(u, b, a)`.
    pub fn moments(&self) -> (f64, f64) {
        let mean: f64 = self
            .components
            .iter()
            .map(|c| c.weight * c.shape / c.rate)
            .sum();
        let variance = self
            .components
            .iter()
            .map(|c| {
                let m = c.shape / c.rate;
                c.weight * (c.shape / (c.rate * c.rate) + (m - mean).powi(2))
            })
            .sum();
        (mean, variance)
    }
}

/// Builds the MG approximation of the product of `first` (indexed by `u`)
/// and `second` (indexed by `b`) with the given Gauss–Laguerre rule.
///
/// Component `(u, b, a)` has shape `alpha_u`, rate `beta_u beta_b / t_a`,
/// prefactor
/// `ε̂ = (w_u beta_u^alpha_u / Γ(alpha_u)) (w_b beta_b^alpha_u / Γ(alpha_b)) ϖ_a t_a^(alpha_b − alpha_u − 1)`
/// and weight `ŵ = ε̂ Γ(alpha_u) t_a^alpha_u / (beta_u beta_b)^alpha_u`.
pub fn mg_product(
    first: &MgParams,
    second: &MgParams,
    rule: &GaussLaguerreRule,
) -> CascadedMgParams {
    let mut components =
        Vec::with_capacity(first.len() * second.len() * rule.order());
    for (u, cu) in first.components().iter().enumerate() {
        for (b, cb) in second.components().iter().enumerate() {
            for (a, (&t, &varpi)) in rule.nodes().iter().zip(rule.weights()).enumerate() {
                let ln_eps = cu.weight.ln() + cu.shape * cu.rate.ln() - ln_gamma(cu.shape)
                    + cb.weight.ln()
                    + cu.shape * cb.rate.ln()
                    - ln_gamma(cb.shape)
                    + varpi.ln()
                    + (cb.shape - cu.shape - 1.0) * t.ln();
                let ln_w = ln_eps + ln_gamma(cu.shape) + cu.shape * t.ln()
                    - cu.shape * (cu.rate.ln() + cb.rate.ln());
                components.push(CascadedComponent {
                    u,
                    b,
                    a,
                    weight: ln_w.exp(),
                    shape: cu.shape,
                    rate: cu.rate * cb.rate / t,
                    epsilon: ln_eps.exp(),
                    node: t,
                });
            }
        }
    }
    CascadedMgParams {
        components,
        first_count: first.len(),
        second_count: second.len(),
        order: rule.order(),
    }
}

/// Free-function form of [`CascadedMgParams::moments`].
pub fn mg_cascaded_moments(params: &CascadedMgParams) -> (f64, f64) {
    params.moments()
}
