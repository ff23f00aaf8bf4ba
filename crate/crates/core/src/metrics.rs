//! Power@Size, Throughput@Size, QphH@Size and price per QphH.

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const QUERY_TIMINGS: usize = 22;
pub const REFRESH_TIMINGS: usize = 2;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MetricsError {
    #[error("expected {expected} timings, got {found}")]
    TimingCount { expected: usize, found: usize },
    #[error("timing #{index} is {value}; every timing must be a positive finite number of seconds")]
    NonPositiveTiming { index: usize, value: f64 },
    #[error("stream count must be at least 1")]
    NoStreams,
    #[error("throughput elapsed time must be positive, got {0}")]
    NonPositiveElapsed(f64),
    #[error("{what} must be non-negative and finite, got {value}")]
    Negative { what: &'static str, value: f64 },
    #[error("QphH must be positive to price it, got {0}")]
    NonPositiveQphh(f64),
    #[error("scale factor must be positive, got {0}")]
    ScaleFactor(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsInput {
    /// Power-test query intervals, seconds.
    pub qi: Vec<f64>,
    /// Power-test RF1 and RF2 intervals, seconds.
    pub ri: Vec<f64>,
    pub streams: u32,
    /// Throughput-test wall time, seconds.
    pub ts: f64,
    pub sf: f64,
    pub total_price: Option<f64>,
    /// Some power-test timing was stopped at the timeout.
    #[serde(default)]
    pub censored: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub power_at_size: f64,
    pub throughput_at_size: f64,
    pub qphh_at_size: f64,
    pub price_per_qphh: Option<f64>,
    /// Censored timings entered the product at their bound, so the metrics
    /// are lower bounds.
    pub lower_bound: bool,
}

fn check_sf(sf: f64) -> Result<(), MetricsError> {
    if sf.is_finite() && sf > 0.0 {
        Ok(())
    } else {
        Err(MetricsError::ScaleFactor(sf))
    }
}

/// Geometric mean of positive values, computed from exact binary exponents
/// plus sorted mantissa logarithms. Reordering the inputs cannot change the
/// result, and scaling every input by a power of two scales it exactly.
pub fn geometric_mean(values: &[f64]) -> Result<f64, MetricsError> {
    let mut exp_sum: i64 = 0;
    let mut mant_logs = Vec::with_capacity(values.len());
    for (index, &v) in values.iter().enumerate() {
        if !(v.is_finite() && v > 0.0) {
            return Err(MetricsError::NonPositiveTiming { index, value: v });
        }
        let (m, e) = frexp(v);
        exp_sum += e as i64;
        mant_logs.push(m.log2());
    }
    if values.is_empty() {
        return Err(MetricsError::TimingCount { expected: 1, found: 0 });
    }
    mant_logs.sort_by(f64::total_cmp);
    let n = values.len() as i64;
    let log_sum: f64 = mant_logs.iter().sum();
    let q = exp_sum.div_euclid(n);
    let r = exp_sum.rem_euclid(n);
    Ok(ldexp(((r as f64 + log_sum) / n as f64).exp2(), q))
}

/// `v = m · 2^e` with `m` in `[1, 2)`.
fn frexp(v: f64) -> (f64, i32) {
    let bits = v.to_bits();
    let raw_exp = ((bits >> 52) & 0x7ff) as i32;
    if raw_exp == 0 {
        // Subnormal: normalize first.
        let (m, e) = frexp(v * 2f64.powi(64));
        return (m, e - 64);
    }
    let m = f64::from_bits((bits & !(0x7ff << 52)) | (1023 << 52));
    (m, raw_exp - 1023)
}

fn ldexp(x: f64, e: i64) -> f64 {
    let mut x = x;
    let mut e = e;
    while e > 1000 {
        x *= 2f64.powi(1000);
        e -= 1000;
    }
    while e < -1000 {
        x *= 2f64.powi(-1000);
        e += 1000;
    }
    x * 2f64.powi(e as i32)
}

/// `3600 · SF / (∏ QI · ∏ RI)^(1/24)`.
pub fn power_at_size(qi: &[f64], ri: &[f64], sf: f64) -> Result<f64, MetricsError> {
    if qi.len() != QUERY_TIMINGS {
        return Err(MetricsError::TimingCount { expected: QUERY_TIMINGS, found: qi.len() });
    }
    if ri.len() != REFRESH_TIMINGS {
        return Err(MetricsError::TimingCount { expected: REFRESH_TIMINGS, found: ri.len() });
    }
    check_sf(sf)?;
    let all: Vec<f64> = qi.iter().chain(ri).copied().collect();
    Ok(3600.0 * sf / geometric_mean(&all)?)
}

/// `((S · 22 · 3600) / Ts) · SF`.
pub fn throughput_at_size(streams: u32, ts: f64, sf: f64) -> Result<f64, MetricsError> {
    if streams == 0 {
        return Err(MetricsError::NoStreams);
    }
    if !(ts.is_finite() && ts > 0.0) {
        return Err(MetricsError::NonPositiveElapsed(ts));
    }
    check_sf(sf)?;
    Ok(streams as f64 * 22.0 * 3600.0 / ts * sf)
}

/// Geometric mean of the two size metrics.
pub fn qphh_at_size(power: f64, throughput: f64) -> Result<f64, MetricsError> {
    for (what, value) in [("power", power), ("throughput", throughput)] {
        if !(value.is_finite() && value >= 0.0) {
            return Err(MetricsError::Negative { what, value });
        }
    }
    Ok((power * throughput).sqrt())
}

pub fn price_per_qphh(total_price: f64, qphh: f64) -> Result<f64, MetricsError> {
    if !(qphh.is_finite() && qphh > 0.0) {
        return Err(MetricsError::NonPositiveQphh(qphh));
    }
    if !(total_price.is_finite() && total_price >= 0.0) {
        return Err(MetricsError::Negative { what: "price", value: total_price });
    }
    Ok(total_price / qphh)
}

pub fn compute(input: &MetricsInput) -> Result<MetricsReport, MetricsError> {
    let power = power_at_size(&input.qi, &input.ri, input.sf)?;
    let throughput = throughput_at_size(input.streams, input.ts, input.sf)?;
    let qphh = qphh_at_size(power, throughput)?;
    let price = input.total_price.map(|p| price_per_qphh(p, qphh)).transpose()?;
    Ok(MetricsReport {
        power_at_size: power,
        throughput_at_size: throughput,
        qphh_at_size: qphh,
        price_per_qphh: price,
        lower_bound: input.censored,
    })
}
