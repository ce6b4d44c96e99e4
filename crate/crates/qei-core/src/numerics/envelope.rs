//! Pointwise decay envelopes for Fourier transforms of sampling weights,
//! with closed-form monomial-weighted tail integrals.
//!
//! An envelope is a claim `|f(u)| <= bound(u)` valid for `u >= valid_from`.
//! Tail integrals of the form `integral_a^infty u^m bound(u) du` are what the
//! semi-infinite quadrature uses to certify that a neglected tail is small.

use serde::{Deserialize, Serialize};

/// Decay envelope kinds. `coeff` is the overall constant, `valid_from` the
/// onset of validity.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DecayEnvelope {
    /// `coeff * exp(-alpha u^2)`
    Gaussian { coeff: f64, alpha: f64, valid_from: f64 },
    /// `coeff * exp(-alpha u)`
    Exponential { coeff: f64, alpha: f64, valid_from: f64 },
    /// `coeff * exp(-alpha sqrt(u))`, the Gevrey-type decay of bump transforms
    SqrtExponential { coeff: f64, alpha: f64, valid_from: f64 },
    /// `coeff * u^{-q}`, the floor declared for sampled weights and windows
    Polynomial { coeff: f64, q: f64, valid_from: f64 },
}

/// `integral_a^infty u^m e^{-alpha u} du` for integer m >= 0, alpha > 0,
/// a >= 0, via the factorial form of the incomplete gamma function.
fn exp_tail(a: f64, alpha: f64, m: u32) -> f64 {
    let x = alpha * a;
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 1..=m {
        term *= x / k as f64;
        sum += term;
    }
    let mut fact_over_alpha = 1.0 / alpha;
    for k in 1..=m {
        fact_over_alpha *= k as f64 / alpha;
    }
    fact_over_alpha * (-x).exp() * sum
}

/// `integral_a^infty u^m e^{-alpha u^2} du` for integer m >= 0, alpha > 0,
/// a >= 0, by the two-term downward recursion seeded with erfc.
pub(crate) fn gauss_tail(a: f64, alpha: f64, m: u32) -> f64 {
    let i0 = 0.5 * (std::f64::consts::PI / alpha).sqrt() * libm::erfc(alpha.sqrt() * a);
    let e = (-alpha * a * a).exp();
    let i1 = e / (2.0 * alpha);
    match m {
        0 => i0,
        1 => i1,
        _ => {
            let (mut prev, mut cur, mut k) = if m % 2 == 0 { (i0, i0, 0u32) } else { (i1, i1, 1u32) };
            while k < m {
                k += 2;
                cur = a.powi(k as i32 - 1) * e / (2.0 * alpha) + (k - 1) as f64 / (2.0 * alpha) * prev;
                prev = cur;
            }
            cur
        }
    }
}

impl DecayEnvelope {
    /// Envelope value at `u`. Only meaningful for `u >= valid_from`.
    pub fn bound(&self, u: f64) -> f64 {
        match *self {
            DecayEnvelope::Gaussian { coeff, alpha, .. } => coeff * (-alpha * u * u).exp(),
            DecayEnvelope::Exponential { coeff, alpha, .. } => coeff * (-alpha * u).exp(),
            DecayEnvelope::SqrtExponential { coeff, alpha, .. } => {
                coeff * (-alpha * u.max(0.0).sqrt()).exp()
            }
            DecayEnvelope::Polynomial { coeff, q, .. } => coeff * u.powf(-q),
        }
    }

    pub fn valid_from(&self) -> f64 {
        match *self {
            DecayEnvelope::Gaussian { valid_from, .. }
            | DecayEnvelope::Exponential { valid_from, .. }
            | DecayEnvelope::SqrtExponential { valid_from, .. }
            | DecayEnvelope::Polynomial { valid_from, .. } => valid_from,
        }
    }

    /// Whether `integral^infty u^monomial * bound(u) du` is finite.
    pub fn integrable_with_monomial(&self, monomial: f64) -> bool {
        match *self {
            DecayEnvelope::Polynomial { q, .. } => q - monomial > 1.0,
            _ => true,
        }
    }

    /// Upper bound on `integral_a^infty u^monomial * bound(u) du`.
    ///
    /// Returns infinity when the integral is not finite or when `a` lies
    /// below the envelope's range of validity (the caller must keep
    /// integrating numerically until past `valid_from`).
    pub fn tail_integral(&self, a: f64, monomial: u32) -> f64 {
        if a < self.valid_from() || a < 0.0 {
            return f64::INFINITY;
        }
        match *self {
            DecayEnvelope::Gaussian { coeff, alpha, .. } => coeff * gauss_tail(a, alpha, monomial),
            DecayEnvelope::Exponential { coeff, alpha, .. } => coeff * exp_tail(a, alpha, monomial),
            DecayEnvelope::SqrtExponential { coeff, alpha, .. } => {
                // substitute u = s^2: 2 integral_sqrt(a) s^{2m+1} e^{-alpha s} ds
                2.0 * coeff * exp_tail(a.sqrt(), alpha, 2 * monomial + 1)
            }
            DecayEnvelope::Polynomial { coeff, q, .. } => {
                let excess = q - monomial as f64 - 1.0;
                if excess <= 0.0 {
                    f64::INFINITY
                } else {
                    coeff * a.powf(-excess) / excess
                }
            }
        }
    }

    /// Envelope of `amp * f(scale * u)` given that `self` envelopes `f`.
    pub fn rescaled(&self, scale: f64, amp: f64) -> DecayEnvelope {
        match *self {
            DecayEnvelope::Gaussian { coeff, alpha, valid_from } => DecayEnvelope::Gaussian {
                coeff: amp * coeff,
                alpha: alpha * scale * scale,
                valid_from: valid_from / scale,
            },
            DecayEnvelope::Exponential { coeff, alpha, valid_from } => DecayEnvelope::Exponential {
                coeff: amp * coeff,
                alpha: alpha * scale,
                valid_from: valid_from / scale,
            },
            DecayEnvelope::SqrtExponential { coeff, alpha, valid_from } => {
                DecayEnvelope::SqrtExponential {
                    coeff: amp * coeff,
                    alpha: alpha * scale.sqrt(),
                    valid_from: valid_from / scale,
                }
            }
            DecayEnvelope::Polynomial { coeff, q, valid_from } => DecayEnvelope::Polynomial {
                coeff: amp * coeff * scale.powf(-q),
                q,
                valid_from: valid_from / scale,
            },
        }
    }

    /// Envelope of `f^2` given that `self` envelopes `f`.
    pub fn squared(&self) -> DecayEnvelope {
        match *self {
            DecayEnvelope::Gaussian { coeff, alpha, valid_from } => DecayEnvelope::Gaussian {
                coeff: coeff * coeff,
                alpha: 2.0 * alpha,
                valid_from,
            },
            DecayEnvelope::Exponential { coeff, alpha, valid_from } => DecayEnvelope::Exponential {
                coeff: coeff * coeff,
                alpha: 2.0 * alpha,
                valid_from,
            },
            DecayEnvelope::SqrtExponential { coeff, alpha, valid_from } => {
                DecayEnvelope::SqrtExponential {
                    coeff: coeff * coeff,
                    alpha: 2.0 * alpha,
                    valid_from,
                }
            }
            DecayEnvelope::Polynomial { coeff, q, valid_from } => DecayEnvelope::Polynomial {
                coeff: coeff * coeff,
                q: 2.0 * q,
                valid_from,
            },
        }
    }

    /// Same envelope with the constant multiplied by `k`.
    pub fn times(&self, k: f64) -> DecayEnvelope {
        self.rescaled(1.0, k)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exp_tail_matches_closed_forms() {
        // integral_a^infty e^{-u} du = e^{-a}
        assert!((exp_tail(2.0, 1.0, 0) - (-2.0f64).exp()).abs() < 1e-15);
        // integral_0^infty u^3 e^{-2u} du = 3!/2^4
        assert!((exp_tail(0.0, 2.0, 3) - 6.0 / 16.0).abs() < 1e-15);
        // integral_1^infty u e^{-u} du = 2 e^{-1}
        assert!((exp_tail(1.0, 1.0, 1) - 2.0 * (-1.0f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn gauss_tail_matches_closed_forms() {
        let sqrt_pi = std::f64::consts::PI.sqrt();
        // integral_0^infty u^4 e^{-u^2} du = 3 sqrt(pi)/8
        assert!((gauss_tail(0.0, 1.0, 4) - 3.0 * sqrt_pi / 8.0).abs() < 1e-15);
        // integral_0^infty e^{-u^2} du = sqrt(pi)/2
        assert!((gauss_tail(0.0, 1.0, 0) - sqrt_pi / 2.0).abs() < 1e-15);
        // integral_a^infty u e^{-u^2} du = e^{-a^2}/2
        assert!((gauss_tail(1.5, 1.0, 1) - 0.5 * (-2.25f64).exp()).abs() < 1e-16);
        // integral_a^infty u^2 e^{-u^2} du = a e^{-a^2}/2 + sqrt(pi) erfc(a)/4
        let a: f64 = 0.7;
        let expect = a * (-a * a).exp() / 2.0 + sqrt_pi * libm::erfc(a) / 4.0;
        assert!((gauss_tail(a, 1.0, 2) - expect).abs() < 1e-15);
    }

    #[test]
    fn tail_integral_is_monotone_in_a() {
        let envs = [
            DecayEnvelope::Gaussian { coeff: 2.0, alpha: 0.5, valid_from: 0.0 },
            DecayEnvelope::Exponential { coeff: 1.0, alpha: 1.3, valid_from: 0.0 },
            DecayEnvelope::SqrtExponential { coeff: 0.8, alpha: 1.15, valid_from: 0.0 },
            DecayEnvelope::Polynomial { coeff: 22.0, q: 6.0, valid_from: 1.0 },
        ];
        for env in &envs {
            let mut prev = f64::INFINITY;
            for i in 0..20 {
                let a = env.valid_from() + 0.5 * i as f64;
                let t = env.tail_integral(a, 4);
                assert!(t.is_finite());
                assert!(t <= prev);
                prev = t;
            }
        }
    }

    #[test]
    fn polynomial_divergence_flagged() {
        let env = DecayEnvelope::Polynomial { coeff: 1.0, q: 4.0, valid_from: 1.0 };
        assert!(env.integrable_with_monomial(2.0));
        assert!(!env.integrable_with_monomial(3.0));
        assert!(env.tail_integral(2.0, 4).is_infinite());
    }

    #[test]
    fn rescaled_envelope_still_dominates() {
        // if |f(u)| <= env(u) then |amp f(s u)| <= env.rescaled(s, amp)(u)
        let env = DecayEnvelope::SqrtExponential { coeff: 1.25, alpha: 0.8, valid_from: 0.0 };
        let f = |u: f64| 1.25 * (-0.8 * u.sqrt()).exp();
        let r = env.rescaled(3.0, 2.0);
        for i in 0..50 {
            let u = 0.1 + i as f64 * 0.7;
            assert!(2.0 * f(3.0 * u) <= r.bound(u) * (1.0 + 1e-12));
        }
    }

    #[test]
    fn squared_envelope_dominates_square() {
        let env = DecayEnvelope::Polynomial { coeff: 22.0, q: 3.0, valid_from: 3.0 };
        let sq = env.squared();
        for i in 0..40 {
            let u = 3.0 + i as f64;
            let b = env.bound(u);
            assert!((b * b - sq.bound(u)).abs() <= 1e-12 * b * b);
        }
    }
}
