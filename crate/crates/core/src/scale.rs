//! Log-scale bookkeeping for contractions whose values over- or underflow.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::tensor::{Tensor, C64};

#[derive(Clone, Debug)]
pub struct Renormalized {
    /// Input divided by its largest absolute entry (unchanged when zero).
    pub tensor: Tensor,
    /// `ln` of the divisor; zero for a zero tensor.
    pub log_factor: f64,
    pub is_zero: bool,
}

/// Rescales `t` so that its largest absolute entry is 1.
pub fn renormalize(t: Tensor) -> Renormalized {
    let max = t.max_abs();
    if max == 0.0 {
        return Renormalized { tensor: t, log_factor: 0.0, is_zero: true };
    }
    if max == 1.0 {
        return Renormalized { tensor: t, log_factor: 0.0, is_zero: false };
    }
    let mut tensor = t;
    tensor.scale_real_in_place(1.0 / max);
    Renormalized { tensor, log_factor: max.ln(), is_zero: false }
}

/// A complex number stored as `mantissa · exp(log_scale)`.
///
/// The mantissa magnitude is kept at exactly one (up to rounding), which sits
/// inside the `(0.1, 10]` window required of every non-zero value.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AmplitudeValue {
    pub mantissa: C64,
    pub log_scale: f64,
    pub is_zero: bool,
}

impl AmplitudeValue {
    pub const ZERO: Self = Self { mantissa: C64::new(0.0, 0.0), log_scale: 0.0, is_zero: true };

    /// `value · exp(log_scale)`, normalized.
    pub fn from_parts(value: C64, log_scale: f64) -> Self {
        let mag = value.norm();
        if mag == 0.0 || !mag.is_finite() || !log_scale.is_finite() {
            return Self::ZERO;
        }
        Self { mantissa: value / mag, log_scale: log_scale + mag.ln(), is_zero: false }
    }

    pub fn from_complex(value: C64) -> Self {
        Self::from_parts(value, 0.0)
    }

    pub fn to_complex(&self) -> C64 {
        if self.is_zero {
            C64::new(0.0, 0.0)
        } else {
            self.mantissa * self.log_scale.exp()
        }
    }

    /// `ln |value|`; `-inf` for zero.
    pub fn ln_abs(&self) -> f64 {
        if self.is_zero {
            f64::NEG_INFINITY
        } else {
            self.log_scale + self.mantissa.norm().ln()
        }
    }

    /// `self / other`. Returns `None` when `other` is zero.
    pub fn ratio(&self, other: &Self) -> Option<C64> {
        if other.is_zero {
            return None;
        }
        if self.is_zero {
            return Some(C64::new(0.0, 0.0));
        }
        Some(self.mantissa / other.mantissa * (self.log_scale - other.log_scale).exp())
    }

    pub fn mul(&self, other: &Self) -> Self {
        if self.is_zero || other.is_zero {
            return Self::ZERO;
        }
        Self::from_parts(self.mantissa * other.mantissa, self.log_scale + other.log_scale)
    }

    /// Relative difference `|a - b| / max(|a|, |b|)`, computed in log space.
    pub fn relative_difference(&self, other: &Self) -> f64 {
        match (self.is_zero, other.is_zero) {
            (true, true) => 0.0,
            (true, false) | (false, true) => 1.0,
            (false, false) => {
                let (big, small) =
                    if self.ln_abs() >= other.ln_abs() { (self, other) } else { (other, self) };
                let r = small.ratio(big).expect("nonzero");
                (C64::new(1.0, 0.0) - r).norm()
            }
        }
    }
}

impl fmt::Display for AmplitudeValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero {
            write!(f, "0")
        } else {
            write!(f, "({} {:+}i)·e^{}", self.mantissa.re, self.mantissa.im, self.log_scale)
        }
    }
}
