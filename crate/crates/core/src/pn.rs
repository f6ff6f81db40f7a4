//! Learnable power normalization.
//!
//! The attention value for a frame difference `d` is a shifted sigmoid
//!
//! ```text
//! f(d) = 1 / (1 + exp(-a(m) * (d - b(n))))
//! a(m) = alpha / (beta * |tanh m| + epsilon)
//! b(n) = gamma * tanh n
//! ```
//!
//! where `m` and `n` are unconstrained learnable reals and `alpha`, `beta`,
//! `gamma`, `epsilon` are fixed. The tanh reparameterization keeps the slope
//! in `[alpha / (beta + epsilon), alpha / epsilon]` and the shift in
//! `(-gamma, gamma)` no matter where the optimizer takes `m` and `n`.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::framediff::Plane;

/// Output of the learnable PN, values in `[0, 1]`.
pub type AttentionMap = Plane;

/// Fixed hyper-parameters of the PN function.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PnHyper {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub epsilon: f64,
}

impl Default for PnHyper {
    fn default() -> Self {
        Self {
            alpha: 5.0,
            beta: 0.45,
            gamma: 0.6,
            epsilon: 0.1,
        }
    }
}

impl PnHyper {
    pub fn new(alpha: f64, beta: f64, gamma: f64, epsilon: f64) -> Result<Self> {
        let hyper = Self {
            alpha,
            beta,
            gamma,
            epsilon,
        };
        hyper.validate()?;
        Ok(hyper)
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::Domain(format!("{name} must be positive, got {v}")))
            }
        };
        positive("alpha", self.alpha)?;
        positive("beta", self.beta)?;
        positive("epsilon", self.epsilon)?;
        if !(self.gamma > 0.0 && self.gamma < 1.0) {
            return Err(Error::Domain(format!(
                "gamma must lie in (0, 1), got {}",
                self.gamma
            )));
        }
        Ok(())
    }
}

/// The two learnable parameters together with the fixed hyper-parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PnParams {
    pub m: f64,
    pub n: f64,
    pub hyper: PnHyper,
}

impl PnParams {
    pub fn new(m: f64, n: f64, hyper: PnHyper) -> Self {
        Self { m, n, hyper }
    }

    pub fn with_defaults(m: f64, n: f64) -> Self {
        Self::new(m, n, PnHyper::default())
    }

    /// Finds `(m, n)` that realize a target slope and shift. `m` is taken
    /// non-negative since the slope is even in `m`.
    pub fn from_slope_shift(a: f64, b: f64, hyper: PnHyper) -> Result<Self> {
        let t = invert_slope(a, &hyper)?;
        if t >= 1.0 {
            return Err(Error::Domain(format!(
                "slope {a} is the limiting value alpha/(beta+epsilon) and is not attained by any finite m"
            )));
        }
        let n = invert_shift(b, &hyper)?;
        Ok(Self::new(t.atanh(), n, hyper))
    }

    pub fn slope(&self) -> f64 {
        slope(self)
    }

    pub fn shift(&self) -> f64 {
        shift(self)
    }
}

/// `a(m) = alpha / (beta |tanh m| + epsilon)`.
pub fn slope(params: &PnParams) -> f64 {
    let h = &params.hyper;
    h.alpha / (h.beta * params.m.tanh().abs() + h.epsilon)
}

/// `b(n) = gamma tanh n`.
pub fn shift(params: &PnParams) -> f64 {
    params.hyper.gamma * params.n.tanh()
}

/// Logistic function, evaluated without overflow for large `|x|`.
#[inline]
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// `sigmoid(x) (1 - sigmoid(x))` as `sigmoid(x) sigmoid(-x)`, which keeps full
/// relative precision in both tails.
#[inline]
pub fn sigmoid_derivative(x: f64) -> f64 {
    sigmoid(x) * sigmoid(-x)
}

/// The sigmoid argument `a(m) (d - b(n))`.
#[inline]
pub fn pn_exponent(d: f64, params: &PnParams) -> f64 {
    slope(params) * (d - shift(params))
}

/// PN of a single difference value. No range check.
#[inline]
pub fn pn_value(d: f64, params: &PnParams) -> f64 {
    sigmoid(pn_exponent(d, params))
}

pub(crate) fn check_diff_range(diff: &[f64]) -> Result<()> {
    match diff.iter().find(|v| !(-1.0..=1.0).contains(*v)) {
        Some(&value) => Err(Error::OutOfRange {
            what: "frame difference",
            value,
            low: -1.0,
            high: 1.0,
        }),
        None => Ok(()),
    }
}

/// Applies the learnable PN element-wise to a slice of differences.
pub fn apply_pn_slice(diff: &[f64], params: &PnParams) -> Result<Vec<f64>> {
    check_diff_range(diff)?;
    let a = slope(params);
    let b = shift(params);
    Ok(diff.iter().map(|&d| sigmoid(a * (d - b))).collect())
}

/// Maps a difference map to an attention map.
pub fn apply_pn(diff: &Plane, params: &PnParams) -> Result<AttentionMap> {
    Ok(Plane {
        height: diff.height,
        width: diff.width,
        data: apply_pn_slice(&diff.data, params)?,
    })
}

/// The attainable slope interval `(alpha/(beta+epsilon), alpha/epsilon)`.
pub fn slope_bounds(hyper: &PnHyper) -> (f64, f64) {
    (
        hyper.alpha / (hyper.beta + hyper.epsilon),
        hyper.alpha / hyper.epsilon,
    )
}

/// Result of the saturation constraint check on the hyper-parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConstraintReport {
    /// Multiplier `k` in `alpha = k * max{(beta+eps)/(1-gamma), eps/(1-gamma)}`.
    pub k: f64,
    /// `false` when `k <= 1`: the PN no longer reaches both 0 and 1 over `[-1, 1]`
    /// in the worst case.
    pub satisfied: bool,
}

/// Computes how far `alpha` exceeds the smallest value for which `f(1) ~ 1`
/// and `f(-1) ~ 0` under the worst-case slope and shift.
pub fn constraint_check(hyper: &PnHyper) -> Result<ConstraintReport> {
    if hyper.gamma >= 1.0 {
        return Err(Error::Domain(format!(
            "gamma must be below 1, got {}",
            hyper.gamma
        )));
    }
    let span = 1.0 - hyper.gamma;
    let bound = ((hyper.beta + hyper.epsilon) / span).max(hyper.epsilon / span);
    let k = hyper.alpha / bound;
    Ok(ConstraintReport {
        k,
        satisfied: k > 1.0,
    })
}

/// Returns the `|tanh m|` that yields slope `a`.
pub fn invert_slope(a: f64, hyper: &PnHyper) -> Result<f64> {
    let (low, high) = slope_bounds(hyper);
    let tol = 1e-12 * high;
    if !(a >= low - tol && a <= high + tol) {
        return Err(Error::OutOfRange {
            what: "slope",
            value: a,
            low,
            high,
        });
    }
    Ok(((hyper.alpha / a - hyper.epsilon) / hyper.beta).clamp(0.0, 1.0))
}

/// Returns the `n` with `gamma tanh n = b`.
pub fn invert_shift(b: f64, hyper: &PnHyper) -> Result<f64> {
    let r = b / hyper.gamma;
    if !(r > -1.0 && r < 1.0) {
        return Err(Error::OutOfRange {
            what: "shift",
            value: b,
            low: -hyper.gamma,
            high: hyper.gamma,
        });
    }
    Ok(r.atanh())
}

/// Fixed power normalizations used for comparison with the learnable one.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PnKind {
    /// `sign(x) |x|^p`
    Gamma,
    /// `sign(x) (1 - (1 - |x|)^p)`
    MaxExp,
    /// `asinh(p x) / asinh(p)`
    AsinhE,
    /// `2 / (1 + exp(-p x)) - 1`
    SigmE,
}

impl PnKind {
    pub const ALL: [PnKind; 4] = [PnKind::Gamma, PnKind::MaxExp, PnKind::AsinhE, PnKind::SigmE];

    pub fn name(self) -> &'static str {
        match self {
            PnKind::Gamma => "gamma",
            PnKind::MaxExp => "maxexp",
            PnKind::AsinhE => "asinhe",
            PnKind::SigmE => "sigme",
        }
    }

    pub fn eval(self, x: f64, p: f64) -> f64 {
        let sign = if x < 0.0 { -1.0 } else { 1.0 };
        match self {
            PnKind::Gamma => sign * x.abs().powf(p),
            PnKind::MaxExp => sign * (1.0 - (1.0 - x.abs()).powf(p)),
            PnKind::AsinhE => (p * x).asinh() / p.asinh(),
            PnKind::SigmE => 2.0 * sigmoid(p * x) - 1.0,
        }
    }
}

impl fmt::Display for PnKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for PnKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "gamma" => Ok(PnKind::Gamma),
            "maxexp" | "max-exp" => Ok(PnKind::MaxExp),
            "asinhe" | "asinh-e" => Ok(PnKind::AsinhE),
            "sigme" | "sigm-e" => Ok(PnKind::SigmE),
            _ => Err(Error::Unknown {
                what: "PN kind",
                name: s.to_string(),
            }),
        }
    }
}

/// Applies one of the fixed PN baselines. Outputs stay in `[-1, 1]`.
pub fn classic_pn(kind: PnKind, diff: &Plane, param: f64) -> Result<Plane> {
    check_diff_range(&diff.data)?;
    if !(param > 0.0 && param.is_finite()) {
        return Err(Error::Domain(format!(
            "PN parameter must be positive, got {param}"
        )));
    }
    Ok(Plane {
        height: diff.height,
        width: diff.width,
        data: diff
            .data
            .iter()
            .map(|&x| kind.eval(x, param).clamp(-1.0, 1.0))
            .collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn defaults(m: f64, n: f64) -> PnParams {
        PnParams::with_defaults(m, n)
    }

    #[test]
    fn slope_extremes() {
        assert!((slope(&defaults(0.0, 0.0)) - 50.0).abs() < 1e-12);
        assert!((slope(&defaults(40.0, 0.0)) - 5.0 / 0.55).abs() < 1e-12);
        assert!((slope(&defaults(-40.0, 0.0)) - 9.0909).abs() < 1e-4);
        assert_eq!(slope(&defaults(1.3, 0.0)), slope(&defaults(-1.3, 0.0)));
    }

    #[test]
    fn shift_extremes() {
        assert_eq!(shift(&defaults(0.0, 0.0)), 0.0);
        assert!((shift(&defaults(0.0, 30.0)) - 0.6).abs() < 1e-12);
        assert_eq!(shift(&defaults(0.0, -0.7)), -shift(&defaults(0.0, 0.7)));
    }

    #[test]
    fn midpoint_is_half() {
        let p = defaults(0.4, 0.3);
        let b = shift(&p);
        let out = apply_pn(&Plane::filled(2, 2, b), &p).unwrap();
        assert!(out.data.iter().all(|&v| (v - 0.5).abs() < 1e-15));
    }

    #[test]
    fn worst_case_exponents_saturate() {
        // -5 (1 + 0.6) / (0.45 + 0.1) and 5 (1 + 0.6) / 0.1
        assert!(sigmoid(-5.0 * 1.6 / 0.55) < 1e-5);
        assert!(1.0 - sigmoid(80.0) < 1e-30);
        assert!(sigmoid(-800.0) >= 0.0 && sigmoid(800.0) <= 1.0);
        let lo = pn_value(-1.0, &defaults(0.0, 40.0));
        let hi = pn_value(1.0, &defaults(0.0, -40.0));
        assert!(lo < 1e-30 && hi == 1.0);
    }

    #[test]
    fn out_of_range_diff_rejected() {
        let p = defaults(0.0, 0.0);
        let err = apply_pn(&Plane::new(1, 2, vec![0.0, 1.5]).unwrap(), &p).unwrap_err();
        assert!(matches!(err, Error::OutOfRange { value, .. } if value == 1.5));
        assert!(apply_pn(&Plane::new(1, 1, vec![f64::NAN]).unwrap(), &p).is_err());
    }

    #[test]
    fn bounds_closed_forms() {
        let (lo, hi) = slope_bounds(&PnHyper::default());
        assert!((lo - 9.090_909_090_909_09).abs() < 1e-12);
        assert!((hi - 50.0).abs() < 1e-12);
        let (lo, hi) = slope_bounds(&PnHyper::new(2.0, 0.3, 0.5, 0.1).unwrap());
        assert!((lo - 5.0).abs() < 1e-12 && (hi - 20.0).abs() < 1e-12);
        let (lo, hi) = slope_bounds(&PnHyper::new(1.0, 1e-12, 0.5, 1.0).unwrap());
        assert!((lo - 1.0).abs() < 1e-11 && (hi - 1.0).abs() < 1e-11);
    }

    #[test]
    fn constraint_multiplier() {
        let r = constraint_check(&PnHyper::default()).unwrap();
        assert!((r.k - 5.0 / 1.375).abs() < 1e-12);
        assert!(r.satisfied);

        let edge = constraint_check(&PnHyper::new(1.375, 0.45, 0.6, 0.1).unwrap()).unwrap();
        assert!((edge.k - 1.0).abs() < 1e-12);

        // gamma -> 0 with beta == epsilon: k = alpha / (beta + epsilon)
        let h = PnHyper::new(3.0, 0.2, 1e-12, 0.2).unwrap();
        let r = constraint_check(&h).unwrap();
        assert!((r.k - 3.0 / 0.4).abs() < 1e-9);

        let bad = PnHyper {
            gamma: 1.0,
            ..PnHyper::default()
        };
        assert!(matches!(constraint_check(&bad), Err(Error::Domain(_))));
    }

    #[test]
    fn hyper_validation() {
        assert!(PnHyper::new(0.0, 0.45, 0.6, 0.1).is_err());
        assert!(PnHyper::new(5.0, -1.0, 0.6, 0.1).is_err());
        assert!(PnHyper::new(5.0, 0.45, 1.0, 0.1).is_err());
        assert!(PnHyper::new(5.0, 0.45, 0.6, 0.0).is_err());
    }

    #[test]
    fn slope_inversion() {
        let h = PnHyper::default();
        assert_eq!(invert_slope(50.0, &h).unwrap(), 0.0);
        assert!((invert_slope(5.0 / 0.55, &h).unwrap() - 1.0).abs() < 1e-12);
        // (5 / 11.04 - 0.1) / 0.45
        let t = invert_slope(11.04, &h).unwrap();
        assert!((t - 0.784_219_001_610_306).abs() < 1e-12);
        assert!(invert_slope(51.0, &h).is_err());
        assert!(invert_slope(9.0, &h).is_err());
    }

    #[test]
    fn slope_shift_round_trip() {
        let h = PnHyper::default();
        let p = PnParams::from_slope_shift(11.04, -0.59, h).unwrap();
        assert!((p.slope() - 11.04).abs() < 1e-9);
        assert!((p.shift() + 0.59).abs() < 1e-12);
        assert!(PnParams::from_slope_shift(11.04, 0.6, h).is_err());
        assert!(PnParams::from_slope_shift(5.0 / 0.55, 0.0, h).is_err());
    }

    #[test]
    fn classic_baselines() {
        let zero = Plane::filled(1, 1, 0.0);
        for kind in PnKind::ALL {
            assert_eq!(classic_pn(kind, &zero, 2.0).unwrap().data[0], 0.0);
        }
        let q = Plane::filled(1, 1, 0.25);
        assert!((classic_pn(PnKind::Gamma, &q, 0.5).unwrap().data[0] - 0.5).abs() < 1e-15);
        let one = Plane::filled(1, 1, 1.0);
        assert!(classic_pn(PnKind::SigmE, &one, 60.0).unwrap().data[0] > 1.0 - 1e-12);
        let neg = Plane::filled(1, 1, -0.25);
        assert!((classic_pn(PnKind::Gamma, &neg, 0.5).unwrap().data[0] + 0.5).abs() < 1e-15);
        assert!(classic_pn(PnKind::MaxExp, &q, 0.0).is_err());
        assert!("softmax".parse::<PnKind>().is_err());
        assert_eq!("MaxExp".parse::<PnKind>().unwrap(), PnKind::MaxExp);
    }

    proptest! {
        #[test]
        fn bounded_and_monotone(m in -20.0f64..20.0, n in -20.0f64..20.0,
                                d1 in -1.0f64..=1.0, d2 in -1.0f64..=1.0) {
            let p = defaults(m, n);
            let (lo, hi) = if d1 <= d2 { (d1, d2) } else { (d2, d1) };
            let (f_lo, f_hi) = (pn_value(lo, &p), pn_value(hi, &p));
            prop_assert!((0.0..=1.0).contains(&f_lo) && (0.0..=1.0).contains(&f_hi));
            prop_assert!(f_lo <= f_hi);
            if pn_exponent(lo, &p).abs() <= 30.0 {
                prop_assert!(f_lo > 0.0 && f_lo < 1.0);
            }
        }

        #[test]
        fn parameter_confinement(m in -50.0f64..50.0, n in -50.0f64..50.0) {
            let p = defaults(m, n);
            let (lo, hi) = slope_bounds(&p.hyper);
            prop_assert!(p.slope() >= lo - 1e-12 && p.slope() <= hi + 1e-12);
            prop_assert!(p.shift().abs() <= 0.6);
            if n.abs() < 18.0 {
                prop_assert!(p.shift().abs() < 0.6);
            }
            prop_assert_eq!(p.slope(), defaults(-m, n).slope());
            prop_assert_eq!(p.shift(), -defaults(m, -n).shift());
        }

        #[test]
        fn lipschitz_in_input(m in -5.0f64..5.0, n in -3.0f64..3.0,
                              d in -1.0f64..0.99, delta in 0.0f64..0.01) {
            let p = defaults(m, n);
            let d2 = (d + delta).min(1.0);
            let bound = (p.hyper.alpha / p.hyper.epsilon) * (d2 - d) / 4.0;
            prop_assert!(pn_value(d2, &p) - pn_value(d, &p) <= bound + 1e-15);
        }
    }

    #[test]
    fn saturated_attention_is_exactly_one() {
        // a = 50, b -> -0.6, d = 1: exponent 80
        let p = defaults(0.0, -40.0);
        assert!(pn_exponent(1.0, &p) >= 80.0 - 1e-9);
        assert_eq!(pn_value(1.0, &p), 1.0);
    }
}
