//! Scalar fields on the ambient space.
//!
//! A [`Field`] is a real-valued function of a point, used for weights,
//! functions under test and gradient candidates. Fields are cheap to clone
//! and safe to share across threads.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};

type EvalFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

#[derive(Clone)]
pub struct Field {
    eval: EvalFn,
    label: String,
}

impl Field {
    pub fn from_fn<F>(label: impl Into<String>, f: F) -> Self
    where
        F: Fn(&[f64]) -> f64 + Send + Sync + 'static,
    {
        Field { eval: Arc::new(f), label: label.into() }
    }

    pub fn constant(c: f64) -> Self {
        Field::from_fn(format!("{c}"), move |_| c)
    }

    /// The i-th coordinate function.
    pub fn coordinate(i: usize) -> Self {
        Field::from_fn(format!("x{i}"), move |x| x.get(i).copied().unwrap_or(f64::NAN))
    }

    /// The radial power weight |x|^(-lambda) (Euclidean radius).
    pub fn radial_power(lambda: f64) -> Self {
        Field::from_fn(format!("|x|^-{lambda}"), move |x| {
            let r = x.iter().map(|v| v * v).sum::<f64>().sqrt();
            r.powf(-lambda)
        })
    }

    /// Pointwise rescaling `s * self`.
    pub fn scaled(&self, s: f64) -> Self {
        let inner = self.eval.clone();
        Field::from_fn(format!("{s}*{}", self.label), move |x| s * inner(x))
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        (self.eval)(x)
    }

    /// Evaluate and reject non-finite results.
    pub fn eval_checked(&self, x: &[f64]) -> Result<f64> {
        let v = self.eval(x);
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::Evaluation(format!(
                "field `{}` is not finite at {x:?}",
                self.label
            )))
        }
    }

    pub fn label(&self) -> &str {
        &self.label
    }
}

impl fmt::Debug for Field {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Field").field("label", &self.label).finish()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_and_coordinate() {
        let c = Field::constant(2.5);
        assert_eq!(c.eval(&[1.0, 2.0]), 2.5);
        let x1 = Field::coordinate(1);
        assert_eq!(x1.eval(&[3.0, 4.0]), 4.0);
    }

    #[test]
    fn checked_eval_rejects_nan() {
        let w = Field::radial_power(0.5);
        assert!(w.eval_checked(&[0.0, 0.0]).is_err());
        assert!((w.eval_checked(&[1.0, 0.0]).unwrap() - 1.0).abs() < 1e-15);
    }
}
