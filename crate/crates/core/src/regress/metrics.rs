//! Prediction error metrics.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Metrics {
    pub mse: f64,
    /// Mean absolute percentage error, in percent.
    pub mape: f64,
}

pub fn mse(y_true: &[f64], y_pred: &[f64]) -> Result<f64> {
    check(y_true, y_pred)?;
    Ok(y_true
        .iter()
        .zip(y_pred)
        .map(|(t, p)| (t - p) * (t - p))
        .sum::<f64>()
        / y_true.len() as f64)
}

pub fn mape(y_true: &[f64], y_pred: &[f64]) -> Result<f64> {
    check(y_true, y_pred)?;
    if let Some(k) = y_true.iter().position(|&t| t == 0.0) {
        return Err(Error::invalid(alloc::format!(
            "MAPE undefined: true value at index {k} is zero"
        )));
    }
    Ok(100.0
        * y_true
            .iter()
            .zip(y_pred)
            .map(|(t, p)| ((t - p) / t).abs())
            .sum::<f64>()
        / y_true.len() as f64)
}

pub fn metrics(y_true: &[f64], y_pred: &[f64]) -> Result<Metrics> {
    Ok(Metrics {
        mse: mse(y_true, y_pred)?,
        mape: mape(y_true, y_pred)?,
    })
}

fn check(y_true: &[f64], y_pred: &[f64]) -> Result<()> {
    if y_true.len() != y_pred.len() {
        return Err(Error::invalid(alloc::format!(
            "{} true values vs {} predictions",
            y_true.len(),
            y_pred.len()
        )));
    }
    if y_true.is_empty() {
        return Err(Error::invalid("metrics of an empty sample"));
    }
    Ok(())
}
