use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum FitError {
    #[error("need at least 3 points, got {0}")]
    TooFewPoints(usize),
    #[error("tally at n={n} is {tally}, must be positive")]
    NonPositive { n: f64, tally: f64 },
    #[error("all sizes are equal")]
    Degenerate,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerLawFit {
    pub exponent: f64,
    /// ln of the leading constant.
    pub intercept: f64,
    /// RMS of the log-space residuals.
    pub residual: f64,
}

/// Least-squares slope of `ln(tally)` against `ln(n)`.
pub fn fit_exponent(points: &[(f64, f64)]) -> Result<PowerLawFit, FitError> {
    if points.len() < 3 {
        return Err(FitError::TooFewPoints(points.len()));
    }
    for &(n, tally) in points {
        if n <= 0.0 || tally <= 0.0 {
            return Err(FitError::NonPositive { n, tally });
        }
    }
    let logs: Vec<(f64, f64)> = points.iter().map(|&(n, t)| (n.ln(), t.ln())).collect();
    let k = logs.len() as f64;
    let mx = logs.iter().map(|p| p.0).sum::<f64>() / k;
    let my = logs.iter().map(|p| p.1).sum::<f64>() / k;
    let sxx: f64 = logs.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(FitError::Degenerate);
    }
    let sxy: f64 = logs.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let exponent = sxy / sxx;
    let intercept = my - exponent * mx;
    let residual = (logs
        .iter()
        .map(|p| (p.1 - intercept - exponent * p.0).powi(2))
        .sum::<f64>()
        / k)
        .sqrt();
    Ok(PowerLawFit {
        exponent,
        intercept,
        residual,
    })
}
