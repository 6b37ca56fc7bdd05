#![allow(dead_code)]

use screening_core::model::{Income, ModelConfig};
use screening_core::utility::UtilitySpec;

pub fn grid(n: usize, lo: f64, hi: f64) -> Vec<f64> {
    (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
}

/// Evenly spaced types, common uniform beliefs, square-root utility, `T = 3`.
pub fn uniform(n: usize, lo: f64, hi: f64, rate: f64, income: f64) -> ModelConfig<f64> {
    ModelConfig {
        horizon: 3,
        deltas: grid(n, lo, hi),
        p: vec![1.0 / n as f64; n],
        q: vec![1.0 / n as f64; n],
        rate,
        income: Income::TotalNpv(income),
        utility: UtilitySpec::Sqrt,
    }
}

/// The ten-type configuration behind the figures.
pub fn figure(n: usize) -> ModelConfig<f64> {
    uniform(n, 0.5, 1.0, 1.5, 3.0)
}

/// Two types 0.4 / 0.9, firm certain of the low type.
pub fn two_type(horizon: usize, q2: f64, rate: f64, income: Income<f64>) -> ModelConfig<f64> {
    ModelConfig {
        horizon,
        deltas: vec![0.4, 0.9],
        p: vec![1.0, 0.0],
        q: vec![1.0 - q2, q2],
        rate,
        income,
        utility: UtilitySpec::Sqrt,
    }
}
