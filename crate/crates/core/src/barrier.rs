//! Discrete-time barrier conditions.
//!
//! Comparisons are plain floating-point `>=` without slack; margins belong in
//! the parameters (`gamma`, `eps`, `delta`).

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, Copy, PartialEq)]
pub enum BarrierError {
    #[error("gamma must lie in (0, 1), got {0}")]
    Gamma(f64),
    #[error("rho must lie in (0, 1), got {0}")]
    Rho(f64),
    #[error("eps must be positive, got {0}")]
    Eps(f64),
    #[error("finite-time bound needs a start outside the set, got h0 = {0}")]
    InvalidStart(f64),
    #[error("cannot compose an empty list of barrier values")]
    EmptyComposition,
}

/// Class-K function used in the invariance condition.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AlphaFn {
    /// `α(r) = γ r`, `0 < γ < 1`.
    Linear { gamma: f64 },
}

impl AlphaFn {
    pub fn linear(gamma: f64) -> Result<Self, BarrierError> {
        if !(gamma > 0.0 && gamma < 1.0) {
            return Err(BarrierError::Gamma(gamma));
        }
        Ok(AlphaFn::Linear { gamma })
    }

    pub fn gamma(&self) -> f64 {
        match self {
            AlphaFn::Linear { gamma } => *gamma,
        }
    }

    pub fn apply(&self, r: f64) -> f64 {
        match self {
            AlphaFn::Linear { gamma } => gamma * r,
        }
    }
}

impl Default for AlphaFn {
    fn default() -> Self {
        AlphaFn::Linear { gamma: 0.5 }
    }
}

/// Finite-time constants `0 < rho < 1`, `eps > 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FtParams {
    rho: f64,
    eps: f64,
}

impl FtParams {
    pub fn new(rho: f64, eps: f64) -> Result<Self, BarrierError> {
        if !(rho > 0.0 && rho < 1.0) {
            return Err(BarrierError::Rho(rho));
        }
        if !(eps > 0.0 && eps.is_finite()) {
            return Err(BarrierError::Eps(eps));
        }
        Ok(FtParams { rho, eps })
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }
}

/// `h_next - h_prev >= -α(h_prev)`.
pub fn dtbf_check(h_prev: f64, h_next: f64, alpha: AlphaFn) -> bool {
    h_next - h_prev >= -alpha.apply(h_prev)
}

/// `h_next - ρ h_prev >= ε (1 - ρ)`.
pub fn ft_dtbf_check(h_prev: f64, h_next: f64, p: FtParams) -> bool {
    h_next - p.rho * h_prev >= p.eps * (1.0 - p.rho)
}

/// Real-valued reach-time bound `log((ε - h0) / ε) / log(1 / ρ)`.
pub fn ft_time_bound_real(h0: f64, p: FtParams) -> Result<f64, BarrierError> {
    if h0.is_nan() || h0 >= 0.0 {
        return Err(BarrierError::InvalidStart(h0));
    }
    Ok(((p.eps - h0) / p.eps).ln() / (1.0 / p.rho).ln())
}

/// Smallest step count by which a sequence satisfying [`ft_dtbf_check`] at
/// every step is guaranteed to have entered `h >= 0`: the ceiling of
/// [`ft_time_bound_real`]. From `h_t - ε >= ρ^t (h0 - ε)`, `h_t >= 0` holds
/// as soon as `t` reaches the real bound, and the first such integer is its
/// ceiling.
pub fn ft_time_bound(h0: f64, p: FtParams) -> Result<u64, BarrierError> {
    Ok(ft_time_bound_real(h0, p)?.ceil() as u64)
}

pub fn compose_min(values: &[f64]) -> Result<f64, BarrierError> {
    values.iter().copied().reduce(f64::min).ok_or(BarrierError::EmptyComposition)
}

pub fn compose_max(values: &[f64]) -> Result<f64, BarrierError> {
    values.iter().copied().reduce(f64::max).ok_or(BarrierError::EmptyComposition)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn half() -> AlphaFn {
        AlphaFn::linear(0.5).unwrap()
    }

    fn case_study() -> FtParams {
        FtParams::new(0.99, 0.1).unwrap()
    }

    #[test]
    fn dtbf_examples() {
        assert!(dtbf_check(0.4, 0.3, half()));
        assert!(!dtbf_check(0.4, 0.1, half()));
        assert!(dtbf_check(0.0, 0.0, half()));
        assert!(dtbf_check(0.0, 0.2, half()));
        assert!(!dtbf_check(0.0, -1e-12, half()));
        // below the set, α demands strict improvement
        assert!(!dtbf_check(-0.2, -0.2, half()));
        assert!(dtbf_check(-0.2, -0.1, half()));
    }

    #[test]
    fn ft_examples() {
        // -0.39 + 0.396 = 0.006 >= 0.001
        assert!(ft_dtbf_check(-0.4, -0.39, case_study()));
        // -0.004 < 0.001
        assert!(!ft_dtbf_check(-0.4, -0.4, case_study()));
        let p = FtParams::new(0.5, 0.25).unwrap();
        assert!(ft_dtbf_check(0.25, 0.25, p));
    }

    #[test]
    fn time_bound_examples() {
        // log(5) / log(1/0.99) = 160.13...
        let real = ft_time_bound_real(-0.4, case_study()).unwrap();
        assert!((real - 5f64.ln() / (1.0f64 / 0.99).ln()).abs() < 1e-12);
        assert!(real > 160.0 && real < 160.2);
        assert_eq!(ft_time_bound(-0.4, case_study()).unwrap(), 161);

        let p = FtParams::new(0.5, 0.1).unwrap();
        assert_eq!(ft_time_bound_real(-0.1, p).unwrap(), 1.0);
        assert_eq!(ft_time_bound(-0.1, p).unwrap(), 1);

        let tiny = ft_time_bound_real(-1e-12, case_study()).unwrap();
        assert!(tiny > 0.0 && tiny < 1e-8);
        assert_eq!(ft_time_bound(-1e-12, case_study()).unwrap(), 1);

        assert_eq!(ft_time_bound(0.0, case_study()), Err(BarrierError::InvalidStart(0.0)));
        assert!(ft_time_bound(0.3, case_study()).is_err());
    }

    #[test]
    fn tight_sequence_needs_the_ceiling() {
        // equality at every step from h0 = -0.4 is still below zero at t = 160
        let p = case_study();
        let mut h: f64 = -0.4;
        let mut first = None;
        for t in 1..=400u64 {
            h = p.rho() * h + p.eps() * (1.0 - p.rho());
            if h >= 0.0 {
                first = Some(t);
                break;
            }
        }
        assert_eq!(first, Some(161));
    }

    #[test]
    fn composition_examples() {
        assert_eq!(compose_min(&[0.3, -0.2]).unwrap(), -0.2);
        assert_eq!(compose_max(&[0.3, -0.2]).unwrap(), 0.3);
        assert_eq!(compose_min(&[0.7]).unwrap(), 0.7);
        assert_eq!(compose_max(&[0.7]).unwrap(), 0.7);
        assert_eq!(compose_min(&[]), Err(BarrierError::EmptyComposition));
        assert_eq!(compose_max(&[]), Err(BarrierError::EmptyComposition));
    }

    #[test]
    fn parameter_ranges() {
        assert!(AlphaFn::linear(0.0).is_err());
        assert!(AlphaFn::linear(1.0).is_err());
        assert!(FtParams::new(1.0, 0.1).is_err());
        assert!(FtParams::new(0.0, 0.1).is_err());
        assert!(FtParams::new(0.5, 0.0).is_err());
        assert!(FtParams::new(0.5, f64::NAN).is_err());
    }

    proptest! {
        #[test]
        fn composition_brackets_every_element(xs in prop::collection::vec(-10.0f64..10.0, 1..8)) {
            let lo = compose_min(&xs).unwrap();
            let hi = compose_max(&xs).unwrap();
            for x in &xs {
                prop_assert!(lo <= *x && *x <= hi);
            }
        }

        #[test]
        fn bound_is_non_increasing_in_eps(h0 in -5.0f64..-1e-6, rho in 0.5f64..0.999, e1 in 0.01f64..1.0, e2 in 0.01f64..1.0) {
            let (lo, hi) = if e1 <= e2 { (e1, e2) } else { (e2, e1) };
            let b_lo = ft_time_bound(h0, FtParams::new(rho, lo).unwrap()).unwrap();
            let b_hi = ft_time_bound(h0, FtParams::new(rho, hi).unwrap()).unwrap();
            prop_assert!(b_hi <= b_lo);
        }
    }
}
