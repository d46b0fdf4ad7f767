//! Chi-square goodness-of-fit against the uniform distribution.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::error::{LucidError, Result};

/// Outcome of testing observed category counts against uniformity.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct UniformityTest {
    pub feature: String,
    pub chi_square_statistic: f64,
    /// k - 1 for k categories.
    pub degrees_of_freedom: usize,
    pub p_value: f64,
    /// `p_value < significance_level`: the feature did not keep a uniform
    /// distribution.
    pub flagged: bool,
    /// One standard deviation of a per-category proportion under the uniform
    /// multinomial: `sqrt((1/k)(1 - 1/k) / N)`. This is the error bar drawn
    /// next to each category's share.
    pub expected_std_per_category: f64,
    /// Expected count per category fell below 5; the test has low power.
    pub low_power: bool,
    /// Most frequent category, filled in by the per-feature analysis.
    pub modal_category: Option<String>,
}

/// Survival function of the chi-square distribution with `dof` degrees of
/// freedom.
pub fn chi_square_sf(statistic: f64, dof: usize) -> f64 {
    if statistic <= 0.0 {
        return 1.0;
    }
    ChiSquared::new(dof as f64)
        .expect("dof >= 1")
        .sf(statistic)
}

/// Tests `counts` against the uniform distribution over its k cells:
/// statistic `sum((O_i - N/k)^2 / (N/k))`, p-value from the chi-square
/// survival function with k-1 degrees of freedom.
pub fn chi_square_uniformity(
    feature: &str,
    counts: &[u64],
    significance_level: f64,
) -> Result<UniformityTest> {
    let k = counts.len();
    if k < 2 {
        return Err(LucidError::InvalidConfig(format!(
            "uniformity test needs at least 2 categories, got {k}"
        )));
    }
    let n: u64 = counts.iter().sum();
    if n == 0 {
        return Err(LucidError::Empty {
            what: format!("counts for feature '{feature}'"),
        });
    }
    let expected = n as f64 / k as f64;
    let statistic: f64 = counts
        .iter()
        .map(|&o| {
            let d = o as f64 - expected;
            d * d / expected
        })
        .sum();
    let p_value = chi_square_sf(statistic, k - 1);
    let p_uniform = 1.0 / k as f64;
    Ok(UniformityTest {
        feature: feature.to_string(),
        chi_square_statistic: statistic,
        degrees_of_freedom: k - 1,
        p_value,
        flagged: p_value < significance_level,
        expected_std_per_category: (p_uniform * (1.0 - p_uniform) / n as f64).sqrt(),
        low_power: (n as f64) < 5.0 * k as f64,
        modal_category: None,
    })
}
