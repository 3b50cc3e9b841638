//! Closed-form miner economics for a two-region distributed exchange.
//!
//! Each of the two regions hosts `n_miners` miners racing to be first to
//! process trades for a fee. Local processing runs at rate `lambda`,
//! long-distance processing at rate `pi * lambda` with `pi <= 1`, so `pi`
//! captures how competitive long-distance mining is (1 = no local
//! advantage). A fraction `beta >= 1/2` of traders sit in region A. The
//! functions here give per-miner win probabilities and expected profits
//! under one shared ledger versus separate per-region ledgers, and decide
//! when miners prefer the shared ledger given the per-miner cost savings
//! `delta` it brings.

use thiserror::Error;

use crate::topology::Cluster;

#[derive(Debug, Clone, Copy, PartialEq, Error)]
pub enum EconError {
    #[error("parameter out of domain: {0}")]
    ParamDomain(&'static str),
    #[error("cost function violates subadditivity: savings per miner = {savings}")]
    SubadditivityViolation { savings: f64 },
}

/// Model parameters. Currency and time units are whatever the caller uses,
/// consistently; probabilities and ratios are dimensionless.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EconParams {
    /// Fraction of traders located in region A, in `[1/2, 1]`.
    pub beta: f64,
    /// Miners per region, at least 2.
    pub n_miners: u32,
    /// Fee collected per won transaction.
    pub fee: f64,
    /// Long-distance to local processing-rate ratio, in `(0, 1]`.
    pub pi: f64,
    /// Per-miner cost savings from running a single shared ledger.
    pub delta: f64,
    /// Inter-region network latency.
    pub theta: f64,
    /// Local processing rate, positive.
    pub lambda: f64,
    /// Fixed consensus computation time.
    pub xi: f64,
    /// Admits the boundary value `pi = 0` (long-distance miners never win)
    /// so limit behaviour can be evaluated. The model domain proper excludes
    /// it; leave this `false` for ordinary use.
    pub allow_pi_zero: bool,
}

impl Default for EconParams {
    fn default() -> Self {
        EconParams {
            beta: 0.75,
            n_miners: 4,
            fee: 1.0,
            pi: 0.5,
            delta: 0.05,
            theta: 1.0,
            lambda: 1.0,
            xi: 2.0,
            allow_pi_zero: false,
        }
    }
}

/// The speed-ratio threshold below which region-A miners adopt a single
/// shared ledger.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AdoptionThreshold {
    /// Threshold inside the speed-ratio domain: A-miners adopt iff `pi` is
    /// strictly below this value.
    Binding(f64),
    /// The threshold formula exceeds 1, outside the domain `pi <= 1`; every
    /// feasible speed ratio adopts. Reported clamped to 1.
    SaturatedAtOne,
    /// Cost savings dominate outright (`2 beta - 1 <= n delta`); the
    /// comparison is vacuous and every speed ratio adopts.
    AlwaysAdopt,
}

impl AdoptionThreshold {
    /// The numeric threshold, clamped to the domain edge for the vacuous
    /// cases.
    pub fn pi_bar(&self) -> f64 {
        match self {
            AdoptionThreshold::Binding(v) => *v,
            _ => 1.0,
        }
    }

    /// True when the threshold does not actually constrain adoption.
    pub fn is_vacuous(&self) -> bool {
        !matches!(self, AdoptionThreshold::Binding(_))
    }

    /// Whether region-A miners with speed ratio `pi` adopt the shared ledger.
    pub fn adopts_at(&self, pi: f64) -> bool {
        match self {
            AdoptionThreshold::Binding(v) => pi < *v,
            _ => true,
        }
    }
}

impl EconParams {
    pub fn validate(&self) -> Result<(), EconError> {
        if !(self.beta >= 0.5 && self.beta <= 1.0) {
            return Err(EconError::ParamDomain("beta must lie in [1/2, 1]"));
        }
        if self.n_miners < 2 {
            return Err(EconError::ParamDomain("n_miners must be at least 2"));
        }
        if !(self.fee >= 0.0) {
            return Err(EconError::ParamDomain("fee must be nonnegative"));
        }
        let pi_low_ok = if self.allow_pi_zero {
            self.pi >= 0.0
        } else {
            self.pi > 0.0
        };
        if !(pi_low_ok && self.pi <= 1.0) {
            return Err(EconError::ParamDomain("pi must lie in (0, 1]"));
        }
        if !(self.delta >= 0.0) {
            return Err(EconError::ParamDomain("delta must be nonnegative"));
        }
        if !(self.theta >= 0.0) {
            return Err(EconError::ParamDomain("theta must be nonnegative"));
        }
        if !(self.lambda > 0.0) {
            return Err(EconError::ParamDomain("lambda must be positive"));
        }
        if !(self.xi >= 0.0) {
            return Err(EconError::ParamDomain("xi must be nonnegative"));
        }
        Ok(())
    }

    /// Probability that a given miner is first to process a trade from its
    /// own region, `1 / (N (1 + pi))`.
    pub fn win_prob_local(&self) -> Result<f64, EconError> {
        self.validate()?;
        Ok(1.0 / (f64::from(self.n_miners) * (1.0 + self.pi)))
    }

    /// Probability that a given miner is first to process a trade from the
    /// other region, `pi / (N (1 + pi))`.
    pub fn win_prob_long_distance(&self) -> Result<f64, EconError> {
        self.validate()?;
        Ok(self.pi / (f64::from(self.n_miners) * (1.0 + self.pi)))
    }

    /// Expected per-miner profit when both regions share one ledger and all
    /// miners compete for all trades.
    pub fn expected_profit_single(&self, region: Cluster) -> Result<f64, EconError> {
        let local = self.win_prob_local()?;
        let long = self.win_prob_long_distance()?;
        let (own_mass, other_mass) = match region {
            Cluster::A => (self.beta, 1.0 - self.beta),
            Cluster::B => (1.0 - self.beta, self.beta),
        };
        Ok((own_mass * local + other_mass * long) * self.fee)
    }

    /// Expected per-miner profit when each region runs its own ledger and
    /// miners only see local trades.
    pub fn expected_profit_fragmented(&self, region: Cluster) -> Result<f64, EconError> {
        self.validate()?;
        let mass = match region {
            Cluster::A => self.beta,
            Cluster::B => 1.0 - self.beta,
        };
        Ok(mass * self.fee / f64::from(self.n_miners))
    }

    /// How much more an A miner earns than a B miner on a shared ledger:
    /// `(1 - pi)(2 beta - 1) f / (N (1 + pi))`, nonnegative on the domain.
    pub fn profit_gap_single(&self) -> Result<f64, EconError> {
        self.validate()?;
        Ok(
            (1.0 - self.pi) * (2.0 * self.beta - 1.0) * self.fee
                / (f64::from(self.n_miners) * (1.0 + self.pi)),
        )
    }

    /// Whether miners in `region` prefer a single shared ledger.
    ///
    /// B miners always do: they gain both the trade-flow transfer and the
    /// cost savings. A miners accept only while the forgone local rents stay
    /// below the savings: `pi (2 beta - 1) / (N (1 + pi)) < delta`.
    pub fn adopts_single_dex(&self, region: Cluster) -> Result<bool, EconError> {
        self.validate()?;
        Ok(match region {
            Cluster::B => true,
            Cluster::A => {
                self.pi * (2.0 * self.beta - 1.0) / (f64::from(self.n_miners) * (1.0 + self.pi))
                    < self.delta
            }
        })
    }

    /// The largest speed ratio at which A miners still adopt, `pi_bar =
    /// N delta / ((2 beta - 1) - N delta)` while that is meaningful.
    pub fn adoption_threshold(&self) -> Result<AdoptionThreshold, EconError> {
        self.validate()?;
        let skew = 2.0 * self.beta - 1.0;
        let savings = f64::from(self.n_miners) * self.delta;
        Ok(if skew > savings {
            let raw = savings / (skew - savings);
            if raw > 1.0 {
                AdoptionThreshold::SaturatedAtOne
            } else {
                AdoptionThreshold::Binding(raw)
            }
        } else if savings > 0.0 {
            AdoptionThreshold::AlwaysAdopt
        } else {
            // skew == savings == 0: no savings and no trader skew, the
            // adoption inequality 0 < 0 never holds
            AdoptionThreshold::Binding(0.0)
        })
    }
}

/// Per-miner cost savings from consolidating two ledgers of volume `x` into
/// one of volume `2x`: `C(x)/N - C(2x)/(2N)`.
///
/// The caller supplies the evaluated cost points; a negative result means
/// the cost function is not subadditive and is reported as an error.
pub fn cost_savings(cost_at_x: f64, cost_at_2x: f64, n_miners: u32) -> Result<f64, EconError> {
    if !(cost_at_x >= 0.0 && cost_at_2x >= 0.0) {
        return Err(EconError::ParamDomain("cost values must be nonnegative"));
    }
    if n_miners < 1 {
        return Err(EconError::ParamDomain("n_miners must be at least 1"));
    }
    let n = f64::from(n_miners);
    let savings = cost_at_x / n - cost_at_2x / (2.0 * n);
    if savings < 0.0 {
        return Err(EconError::SubadditivityViolation { savings });
    }
    Ok(savings)
}

/// Reference subadditive cost family `C(x) = scale * x^exponent` with
/// `exponent` in `(0, 1)`; handy for demos and sweeps.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerCost {
    pub scale: f64,
    pub exponent: f64,
}

impl PowerCost {
    pub fn new(scale: f64, exponent: f64) -> Result<Self, EconError> {
        if !(scale >= 0.0) {
            return Err(EconError::ParamDomain("cost scale must be nonnegative"));
        }
        if !(exponent > 0.0 && exponent < 1.0) {
            return Err(EconError::ParamDomain("cost exponent must lie in (0, 1)"));
        }
        Ok(PowerCost { scale, exponent })
    }

    pub fn eval(&self, volume: f64) -> f64 {
        self.scale * libm::pow(volume, self.exponent)
    }
}

/// Speed ratio induced by a fixed network latency: solving
/// `1/lambda + theta = 1/(pi lambda)` gives `pi = 1 / (1 + theta lambda)`.
pub fn pi_from_latency(theta: f64, lambda: f64) -> Result<f64, EconError> {
    if !(theta >= 0.0) {
        return Err(EconError::ParamDomain("theta must be nonnegative"));
    }
    if !(lambda > 0.0) {
        return Err(EconError::ParamDomain("lambda must be positive"));
    }
    Ok(1.0 / (1.0 + theta * lambda))
}

/// Total processing time of one transaction: fixed computation `xi` plus
/// round-trip message delay `tau` (two half-trips).
pub fn total_processing_time(xi: f64, tau: f64) -> Result<f64, EconError> {
    if !(xi >= 0.0) {
        return Err(EconError::ParamDomain("xi must be nonnegative"));
    }
    if !(tau >= 0.0) {
        return Err(EconError::ParamDomain("tau must be nonnegative"));
    }
    Ok(xi + tau)
}
