//! Erlang B / Erlang C delay-system model for queued-call capacity.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Offered traffic described by its arrival rate and mean holding time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrafficLoad {
    arrival_rate: f64,
    mean_holding: f64,
}

impl TrafficLoad {
    pub fn new(arrival_rate: f64, mean_holding: f64) -> Result<Self> {
        if !(arrival_rate.is_finite() && arrival_rate > 0.0) {
            return Err(Error::Domain(format!("arrival rate must be positive, got {arrival_rate}")));
        }
        if !(mean_holding.is_finite() && mean_holding > 0.0) {
            return Err(Error::Domain(format!("mean holding time must be positive, got {mean_holding}")));
        }
        Ok(TrafficLoad {
            arrival_rate,
            mean_holding,
        })
    }

    /// Builds a load from offered Erlangs and holding time.
    pub fn from_offered(offered: f64, mean_holding: f64) -> Result<Self> {
        if !(offered.is_finite() && offered > 0.0) {
            return Err(Error::Domain(format!("offered traffic must be positive, got {offered}")));
        }
        Self::new(offered / mean_holding, mean_holding)
    }

    pub fn arrival_rate(&self) -> f64 {
        self.arrival_rate
    }

    pub fn mean_holding(&self) -> f64 {
        self.mean_holding
    }

    /// Offered traffic in Erlangs.
    pub fn offered(&self) -> f64 {
        self.arrival_rate * self.mean_holding
    }
}

fn check_inputs(n_channels: u32, offered: f64) -> Result<()> {
    if n_channels == 0 {
        return Err(Error::Domain("channel count must be at least 1".into()));
    }
    if !(offered.is_finite() && offered > 0.0) {
        return Err(Error::Domain(format!("offered traffic must be positive, got {offered}")));
    }
    Ok(())
}

/// Blocking probability of an Erlang loss system with `n_channels` servers.
///
/// Uses the recursion `B(k) = A·B(k−1) / (k + A·B(k−1))` from `B(0) = 1`,
/// which never forms a factorial.
pub fn erlang_b(n_channels: u32, offered: f64) -> Result<f64> {
    check_inputs(n_channels, offered)?;
    let mut b = 1.0;
    for k in 1..=n_channels {
        let ab = offered * b;
        b = ab / (k as f64 + ab);
    }
    Ok(b)
}

/// Probability that an arriving request has to wait (Erlang C).
pub fn erlang_c(n_channels: u32, offered: f64) -> Result<f64> {
    check_inputs(n_channels, offered)?;
    let n = n_channels as f64;
    if offered >= n {
        return Err(Error::UnstableLoad {
            channels: n_channels,
            offered,
        });
    }
    let b = erlang_b(n_channels, offered)?;
    Ok(n * b / (n - offered * (1.0 - b)))
}

/// Unconditional mean waiting time of an M/M/n FIFO queue, in seconds.
pub fn mean_wait(n_channels: u32, load: &TrafficLoad) -> Result<f64> {
    let a = load.offered();
    let c = erlang_c(n_channels, a)?;
    Ok(c * load.mean_holding() / (n_channels as f64 - a))
}

/// Mean wait of the requests that actually queue: `h / (n − A)`.
pub fn mean_wait_given_queued(n_channels: u32, load: &TrafficLoad) -> Result<f64> {
    let a = load.offered();
    erlang_c(n_channels, a)?;
    Ok(load.mean_holding() / (n_channels as f64 - a))
}

/// Smallest stable channel count whose waiting probability does not exceed
/// `max_wait_prob`.
pub fn dimension_channels(load: &TrafficLoad, max_wait_prob: f64) -> Result<u32> {
    Ok(dimension_table(load, max_wait_prob)?
        .last()
        .map(|row| row.channels)
        .expect("table is never empty"))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DimensionRow {
    pub channels: u32,
    pub wait_probability: f64,
    pub mean_wait: f64,
}

/// Every stable channel count from the first one up to the dimensioned
/// answer, with its waiting probability and mean wait.
pub fn dimension_table(load: &TrafficLoad, max_wait_prob: f64) -> Result<Vec<DimensionRow>> {
    if !(max_wait_prob > 0.0 && max_wait_prob < 1.0) {
        return Err(Error::Domain(format!(
            "target waiting probability must lie in (0, 1), got {max_wait_prob}"
        )));
    }
    let a = load.offered();
    let first = a.floor() as u32 + 1;
    let mut rows = Vec::new();
    for n in first.. {
        let c = erlang_c(n, a)?;
        rows.push(DimensionRow {
            channels: n,
            wait_probability: c,
            mean_wait: mean_wait(n, load)?,
        });
        if c <= max_wait_prob {
            break;
        }
    }
    Ok(rows)
}
