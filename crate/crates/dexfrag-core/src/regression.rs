//! Ordinary least squares with heteroskedasticity-robust (sandwich)
//! standard errors, and the sweep regression linking winning probabilities
//! to inter-cluster delay and cluster asymmetry.
//!
//! The solver uses Householder QR for conditioning; coefficients are checked
//! against a plain normal-equations solve in the test suite.

use alloc::vec;
use alloc::vec::Vec;

use thiserror::Error;

use crate::monte_carlo::SweepRow;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RegressionError {
    #[error("standardize requires a nonconstant input")]
    DegenerateVariance,
    #[error("design matrix is rank deficient")]
    SingularDesign,
    #[error("dimension mismatch: {0}")]
    ShapeMismatch(&'static str),
    #[error("need more rows than regressors: {rows} rows for {cols} columns")]
    TooFewRows { rows: usize, cols: usize },
    #[error("design or outcome contains a non-finite value")]
    NonFiniteInput,
    #[error("sweep does not cover a complete delay x asymmetry grid")]
    IncompleteGrid,
}

/// Rescales to zero mean and unit sample standard deviation (n-1).
pub fn standardize(values: &[f64]) -> Result<Vec<f64>, RegressionError> {
    if values.len() < 2 {
        return Err(RegressionError::DegenerateVariance);
    }
    let m = crate::stats::mean(values);
    let sd = crate::stats::sample_std(values);
    if !(sd > 0.0) {
        return Err(RegressionError::DegenerateVariance);
    }
    Ok(values.iter().map(|x| (x - m) / sd).collect())
}

/// Dense row-major design matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignMatrix {
    n_rows: usize,
    n_cols: usize,
    data: Vec<f64>,
}

impl DesignMatrix {
    pub fn from_columns(columns: &[&[f64]]) -> Result<Self, RegressionError> {
        let n_cols = columns.len();
        if n_cols == 0 {
            return Err(RegressionError::ShapeMismatch("no columns"));
        }
        let n_rows = columns[0].len();
        if columns.iter().any(|c| c.len() != n_rows) {
            return Err(RegressionError::ShapeMismatch("ragged columns"));
        }
        let mut data = Vec::with_capacity(n_rows * n_cols);
        for r in 0..n_rows {
            for col in columns {
                data.push(col[r]);
            }
        }
        Ok(DesignMatrix {
            n_rows,
            n_cols,
            data,
        })
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[row * self.n_cols + col]
    }

    pub fn column(&self, col: usize) -> Vec<f64> {
        (0..self.n_rows).map(|r| self.get(r, col)).collect()
    }
}

/// Inputs of the sweep regression: one outcome vector plus the raw delay and
/// asymmetry regressors.
#[derive(Debug, Clone, PartialEq)]
pub struct RegressionData {
    pub outcomes: Vec<f64>,
    pub delay: Vec<f64>,
    pub asymmetry: Vec<f64>,
}

impl RegressionData {
    pub fn n_rows(&self) -> usize {
        self.outcomes.len()
    }
}

/// Builds the design `[1, z(delay), z(asymmetry), z(delay) * z(asymmetry)]`
/// where `z` standardizes to zero mean and unit standard deviation.
///
/// Standardizing both regressors puts the main effects at the grid mean of
/// the other variable, which is what the reported significance pattern
/// measures; the column space (and hence fit and R-squared) is unchanged by
/// the affine rescaling of either regressor alone.
pub fn build_design(data: &RegressionData) -> Result<DesignMatrix, RegressionError> {
    let n = data.n_rows();
    if data.delay.len() != n || data.asymmetry.len() != n {
        return Err(RegressionError::ShapeMismatch(
            "outcome and regressor lengths differ",
        ));
    }
    if n <= 4 {
        return Err(RegressionError::TooFewRows { rows: n, cols: 4 });
    }
    let z_delay = standardize(&data.delay)?;
    let z_asym = standardize(&data.asymmetry)?;
    let intercept = vec![1.0; n];
    let interaction: Vec<f64> = z_delay
        .iter()
        .zip(&z_asym)
        .map(|(d, z)| d * z)
        .collect();
    DesignMatrix::from_columns(&[&intercept, &z_delay, &z_asym, &interaction])
}

/// Robust-variance flavor: plain sandwich or the degrees-of-freedom scaled
/// variant common in econometrics reports.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum HcFlavor {
    Hc0,
    #[default]
    Hc1,
}

/// Fitted model with robust inference.
#[derive(Debug, Clone, PartialEq)]
pub struct RegressionFit {
    pub coefficients: Vec<f64>,
    pub robust_se: Vec<f64>,
    /// Asymptotic normal statistics, coefficient over robust SE.
    pub z_stats: Vec<f64>,
    /// Two-sided normal p-values.
    pub p_values: Vec<f64>,
    pub r_squared: f64,
    /// Robust covariance of the coefficients, row-major k x k.
    pub robust_covariance: Vec<f64>,
}

impl RegressionFit {
    pub fn n_terms(&self) -> usize {
        self.coefficients.len()
    }

    /// Conventional significance stars for the `idx`-th coefficient.
    pub fn stars(&self, idx: usize) -> &'static str {
        significance_stars(self.p_values[idx])
    }
}

/// `***`, `**`, `*` at the 1%, 5% and 10% two-sided levels.
pub fn significance_stars(p: f64) -> &'static str {
    if p < 0.01 {
        "***"
    } else if p < 0.05 {
        "**"
    } else if p < 0.1 {
        "*"
    } else {
        ""
    }
}

/// Least-squares fit of `y` on the columns of `x` with sandwich standard
/// errors. Requires full column rank and more rows than columns.
pub fn ols_fit(x: &DesignMatrix, y: &[f64], flavor: HcFlavor) -> Result<RegressionFit, RegressionError> {
    let n = x.n_rows();
    let k = x.n_cols();
    if y.len() != n {
        return Err(RegressionError::ShapeMismatch("y length != design rows"));
    }
    if n <= k {
        return Err(RegressionError::TooFewRows { rows: n, cols: k });
    }
    if y.iter().any(|v| !v.is_finite()) || x.data.iter().any(|v| !v.is_finite()) {
        return Err(RegressionError::NonFiniteInput);
    }

    // Householder QR on a working copy, accumulating Q^T y alongside
    let mut a = x.data.clone();
    let mut qty = y.to_vec();
    let idx = |r: usize, c: usize| r * k + c;

    for j in 0..k {
        let mut norm2 = 0.0;
        for i in j..n {
            let v = a[idx(i, j)];
            norm2 += v * v;
        }
        let norm = libm::sqrt(norm2);
        if norm == 0.0 {
            return Err(RegressionError::SingularDesign);
        }
        let pivot = a[idx(j, j)];
        let alpha = if pivot >= 0.0 { -norm } else { norm };

        // reflector v = (pivot - alpha, a[j+1.., j]); copied out so the
        // updates below cannot alias it
        let v0 = pivot - alpha;
        let tail: Vec<f64> = (j + 1..n).map(|i| a[idx(i, j)]).collect();
        let vtv = norm2 - pivot * pivot + v0 * v0;
        if vtv > 0.0 {
            for col in j + 1..k {
                let mut dot = v0 * a[idx(j, col)];
                for (t, i) in (j + 1..n).enumerate() {
                    dot += tail[t] * a[idx(i, col)];
                }
                let scale = 2.0 * dot / vtv;
                a[idx(j, col)] -= scale * v0;
                for (t, i) in (j + 1..n).enumerate() {
                    a[idx(i, col)] -= scale * tail[t];
                }
            }
            let mut dot = v0 * qty[j];
            for (t, i) in (j + 1..n).enumerate() {
                dot += tail[t] * qty[i];
            }
            let scale = 2.0 * dot / vtv;
            qty[j] -= scale * v0;
            for (t, i) in (j + 1..n).enumerate() {
                qty[i] -= scale * tail[t];
            }
        }
        a[idx(j, j)] = alpha;
        for i in j + 1..n {
            a[idx(i, j)] = 0.0;
        }
    }

    // rank check on the R diagonal
    let max_diag = (0..k).map(|j| libm::fabs(a[idx(j, j)])).fold(0.0, f64::max);
    if (0..k).any(|j| libm::fabs(a[idx(j, j)]) < 1e-10 * max_diag) {
        return Err(RegressionError::SingularDesign);
    }

    // back-substitution: R beta = (Q^T y)[..k]
    let mut beta = vec![0.0; k];
    for j in (0..k).rev() {
        let mut s = qty[j];
        for c in j + 1..k {
            s -= a[idx(j, c)] * beta[c];
        }
        beta[j] = s / a[idx(j, j)];
    }

    // residuals against the original design
    let mut residuals = Vec::with_capacity(n);
    for r in 0..n {
        let mut fitted = 0.0;
        for c in 0..k {
            fitted += x.get(r, c) * beta[c];
        }
        residuals.push(y[r] - fitted);
    }
    let ssr: f64 = residuals.iter().map(|u| u * u).sum();
    let y_mean = crate::stats::mean(y);
    let sst: f64 = y.iter().map(|v| (v - y_mean) * (v - y_mean)).sum();
    let r_squared = if sst > 0.0 {
        1.0 - ssr / sst
    } else if ssr > 0.0 {
        0.0
    } else {
        1.0
    };

    // bread: (X'X)^{-1} = R^{-1} R^{-T}, from the triangular inverse
    let mut rinv = vec![0.0; k * k];
    for col in 0..k {
        let mut e = vec![0.0; k];
        e[col] = 1.0;
        for j in (0..=col).rev() {
            let mut s = e[j];
            for c in j + 1..k {
                s -= a[idx(j, c)] * rinv[c * k + col];
            }
            rinv[j * k + col] = s / a[idx(j, j)];
        }
    }
    let mut bread = vec![0.0; k * k];
    for i in 0..k {
        for j in 0..k {
            let mut s = 0.0;
            for m in 0..k {
                s += rinv[i * k + m] * rinv[j * k + m];
            }
            bread[i * k + j] = s;
        }
    }

    // meat: sum of u_i^2 x_i x_i'
    let mut meat = vec![0.0; k * k];
    for r in 0..n {
        let w = residuals[r] * residuals[r];
        for i in 0..k {
            let xi = x.get(r, i);
            for j in 0..k {
                meat[i * k + j] += w * xi * x.get(r, j);
            }
        }
    }

    // sandwich, with the HC1 small-sample scale when requested
    let scale = match flavor {
        HcFlavor::Hc0 => 1.0,
        HcFlavor::Hc1 => n as f64 / (n - k) as f64,
    };
    let mut bm = vec![0.0; k * k];
    for i in 0..k {
        for j in 0..k {
            let mut s = 0.0;
            for m in 0..k {
                s += bread[i * k + m] * meat[m * k + j];
            }
            bm[i * k + j] = s;
        }
    }
    let mut cov = vec![0.0; k * k];
    for i in 0..k {
        for j in 0..k {
            let mut s = 0.0;
            for m in 0..k {
                s += bm[i * k + m] * bread[m * k + j];
            }
            cov[i * k + j] = scale * s;
        }
    }

    let robust_se: Vec<f64> = (0..k).map(|i| libm::sqrt(cov[i * k + i])).collect();
    let z_stats: Vec<f64> = beta
        .iter()
        .zip(&robust_se)
        .map(|(b, se)| b / se)
        .collect();
    let p_values: Vec<f64> = z_stats
        .iter()
        .map(|z| libm::erfc(libm::fabs(*z) / core::f64::consts::SQRT_2))
        .collect();

    Ok(RegressionFit {
        coefficients: beta,
        robust_se,
        z_stats,
        p_values,
        r_squared,
        robust_covariance: cov,
    })
}

/// The four dependent variables of the sweep regression.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepOutcome {
    PClusterA,
    PNodeA,
    PNodeB,
    Ratio,
}

impl SweepOutcome {
    pub const ALL: [SweepOutcome; 4] = [
        SweepOutcome::PClusterA,
        SweepOutcome::PNodeA,
        SweepOutcome::PNodeB,
        SweepOutcome::Ratio,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            SweepOutcome::PClusterA => "p_cluster_a",
            SweepOutcome::PNodeA => "p_node_a",
            SweepOutcome::PNodeB => "p_node_b",
            SweepOutcome::Ratio => "ratio_a_over_b",
        }
    }
}

/// Column-oriented view of a sweep, ready for regression. Probabilities are
/// scaled to percent; the advantage ratio stays raw.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepObservations {
    pub delay_ms: Vec<f64>,
    pub asymmetry: Vec<f64>,
    pub p_cluster_a_pct: Vec<f64>,
    pub p_node_a_pct: Vec<f64>,
    pub p_node_b_pct: Vec<f64>,
    pub ratio: Vec<f64>,
}

impl SweepObservations {
    pub fn from_sweep(rows: &[SweepRow]) -> Self {
        let mut obs = SweepObservations {
            delay_ms: Vec::with_capacity(rows.len()),
            asymmetry: Vec::with_capacity(rows.len()),
            p_cluster_a_pct: Vec::with_capacity(rows.len()),
            p_node_a_pct: Vec::with_capacity(rows.len()),
            p_node_b_pct: Vec::with_capacity(rows.len()),
            ratio: Vec::with_capacity(rows.len()),
        };
        for row in rows {
            obs.delay_ms.push(row.slow_mean_ms);
            obs.asymmetry.push(row.eta_a as f64 / row.eta_b as f64);
            obs.p_cluster_a_pct.push(row.estimate.p_cluster_a * 100.0);
            obs.p_node_a_pct.push(row.estimate.p_node_a * 100.0);
            obs.p_node_b_pct.push(row.estimate.p_node_b * 100.0);
            obs.ratio.push(row.estimate.likelihood_ratio());
        }
        obs
    }

    pub fn n_rows(&self) -> usize {
        self.delay_ms.len()
    }

    pub fn outcome(&self, which: SweepOutcome) -> &[f64] {
        match which {
            SweepOutcome::PClusterA => &self.p_cluster_a_pct,
            SweepOutcome::PNodeA => &self.p_node_a_pct,
            SweepOutcome::PNodeB => &self.p_node_b_pct,
            SweepOutcome::Ratio => &self.ratio,
        }
    }
}

/// One fitted column of the results table.
#[derive(Debug, Clone, PartialEq)]
pub struct OutcomeFit {
    pub outcome: SweepOutcome,
    pub fit: RegressionFit,
}

fn sorted_distinct(values: &[f64]) -> Vec<f64> {
    let mut v = values.to_vec();
    v.sort_unstable_by(|a, b| a.partial_cmp(b).expect("finite regressors"));
    v.dedup();
    v
}

/// Fits all four outcomes on the common design, after checking the sweep
/// covers a complete delay x asymmetry grid.
pub fn reproduce_table(
    obs: &SweepObservations,
    flavor: HcFlavor,
) -> Result<Vec<OutcomeFit>, RegressionError> {
    let delays = sorted_distinct(&obs.delay_ms);
    let asyms = sorted_distinct(&obs.asymmetry);
    if delays.len() < 2 || asyms.len() < 2 {
        return Err(RegressionError::IncompleteGrid);
    }
    if obs.n_rows() != delays.len() * asyms.len() {
        return Err(RegressionError::IncompleteGrid);
    }
    for &d in &delays {
        for &a in &asyms {
            let present = obs
                .delay_ms
                .iter()
                .zip(&obs.asymmetry)
                .any(|(dd, aa)| *dd == d && *aa == a);
            if !present {
                return Err(RegressionError::IncompleteGrid);
            }
        }
    }

    let design = build_design(&RegressionData {
        outcomes: obs.ratio.clone(),
        delay: obs.delay_ms.clone(),
        asymmetry: obs.asymmetry.clone(),
    })?;

    SweepOutcome::ALL
        .iter()
        .map(|&outcome| {
            ols_fit(&design, obs.outcome(outcome), flavor).map(|fit| OutcomeFit { outcome, fit })
        })
        .collect()
}
