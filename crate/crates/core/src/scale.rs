//! Balanced linguistic term sets and the conversion between terms and
//! numeric opinions in `[0, 1]`.
//!
//! A scale `H = {h_0, .., h_2Φ}` is parameterised by `Φ >= 1` and a base
//! `a > 1`. Term `h_ξ` maps to
//!
//! ```text
//!   θ_ξ = (a^Φ - a^(Φ-ξ)) / (2a^Φ - 2)        0 <= ξ <= Φ
//!   θ_ξ = (a^Φ + a^(ξ-Φ) - 2) / (2a^Φ - 2)    Φ <  ξ <= 2Φ
//! ```
//!
//! which is symmetric around `θ_Φ = 1/2`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default conversion base, inside the commonly recommended `[1.36, 1.4]`.
pub const DEFAULT_BASE: f64 = 1.37;

/// A term `h_ξ`, identified by its index on the owning scale.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct LinguisticTerm(usize);

impl LinguisticTerm {
    pub const fn new(index: usize) -> Self {
        LinguisticTerm(index)
    }

    pub const fn index(self) -> usize {
        self.0
    }
}

impl std::fmt::Display for LinguisticTerm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "h_{}", self.0)
    }
}

/// A numeric opinion, always inside `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NumericOpinion(f64);

impl NumericOpinion {
    /// Clamps `value` into `[0, 1]`.
    pub fn clamped(value: f64) -> Result<Self> {
        if !value.is_finite() {
            return Err(Error::NonFinite(value));
        }
        Ok(NumericOpinion(value.clamp(0.0, 1.0)))
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinguisticTermSet {
    phi: usize,
    base: f64,
    values: Vec<f64>,
}

impl LinguisticTermSet {
    pub fn new(phi: usize, base: f64) -> Result<Self> {
        if phi == 0 {
            return Err(Error::InvalidScale("phi must be at least 1".into()));
        }
        if !base.is_finite() || base <= 1.0 {
            return Err(Error::InvalidScale(format!(
                "base a must be finite and > 1, got {base}"
            )));
        }
        let phi_i =
            i32::try_from(phi).map_err(|_| Error::InvalidScale(format!("phi {phi} too large")))?;
        let top = base.powi(phi_i);
        let denom = 2.0 * top - 2.0;
        let values: Vec<f64> = (0..=2 * phi_i)
            .map(|xi| {
                if xi == 0 {
                    0.0
                } else if xi == phi_i {
                    0.5
                } else if xi == 2 * phi_i {
                    1.0
                } else if xi < phi_i {
                    (top - base.powi(phi_i - xi)) / denom
                } else {
                    (top + base.powi(xi - phi_i) - 2.0) / denom
                }
            })
            .collect();
        if !values.iter().all(|v| v.is_finite()) || values.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidScale(format!(
                "phi={phi}, a={base} does not give a strictly increasing scale"
            )));
        }
        Ok(LinguisticTermSet { phi, base, values })
    }

    pub fn phi(&self) -> usize {
        self.phi
    }

    pub fn base(&self) -> f64 {
        self.base
    }

    /// Number of terms, `2Φ + 1`.
    pub fn cardinality(&self) -> usize {
        self.values.len()
    }

    pub fn top(&self) -> LinguisticTerm {
        LinguisticTerm(2 * self.phi)
    }

    /// All numeric values `θ_0..θ_2Φ` in term order.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn terms(&self) -> impl Iterator<Item = LinguisticTerm> {
        (0..self.cardinality()).map(LinguisticTerm)
    }

    pub fn term(&self, index: usize) -> Result<LinguisticTerm> {
        self.check(LinguisticTerm(index))
    }

    pub fn check(&self, term: LinguisticTerm) -> Result<LinguisticTerm> {
        if term.0 < self.values.len() {
            Ok(term)
        } else {
            Err(Error::TermOutOfRange {
                index: term.0,
                max: 2 * self.phi,
            })
        }
    }

    pub fn to_numeric(&self, term: LinguisticTerm) -> Result<NumericOpinion> {
        self.check(term).map(|t| NumericOpinion(self.values[t.0]))
    }

    /// Numeric value of a term already known to belong to this scale.
    pub(crate) fn theta(&self, term: LinguisticTerm) -> f64 {
        self.values[term.0]
    }

    /// Nearest term to `y`, saturating outside `(0, 1)`. Exact midpoints
    /// resolve to the lower index.
    pub fn to_linguistic(&self, y: f64) -> Result<LinguisticTerm> {
        if !y.is_finite() {
            return Err(Error::NonFinite(y));
        }
        if y >= 1.0 {
            return Ok(self.top());
        }
        if y <= 0.0 {
            return Ok(LinguisticTerm(0));
        }
        let mut best = 0;
        let mut best_dist = f64::INFINITY;
        for (xi, theta) in self.values.iter().enumerate() {
            let dist = (y - theta).abs();
            if dist < best_dist {
                best = xi;
                best_dist = dist;
            }
        }
        Ok(LinguisticTerm(best))
    }

    /// `neg(h_i) = h_{2Φ - i}`.
    pub fn negation(&self, term: LinguisticTerm) -> Result<LinguisticTerm> {
        self.check(term).map(|t| LinguisticTerm(2 * self.phi - t.0))
    }
}
