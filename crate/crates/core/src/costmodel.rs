//! Analytic FLOP and energy model of the LCA stage.
//!
//! Multiplies and adds each count as one FLOP; threshold comparisons are not
//! counted. All counts are exact `u64` arithmetic with overflow checks.
//!
//! * training: `M(M+1)(2N-1)/2`, the upper triangle of the Gramian including
//!   the diagonal, `N` multiplies and `N-1` adds per entry.
//! * dense inference: `(2N-1)M + K(2M^2 + M)`. The excitatory projection is
//!   paid once per input, the neuron update `K` times.
//! * sparse inference: `(2N-1)M + K(2M*M_hat + M)` with `M_hat` the average
//!   number of active neurons.

use serde::Serialize;
use thiserror::Error;

use crate::lca::EncodeResult;

/// 11 TOPS/W for floating-point MACs on RRAM crossbars, rounded.
pub const DEFAULT_JOULES_PER_FLOP: f64 = 9.09e-14;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CostError {
    #[error("FLOP count overflows u64")]
    Overflow,
    #[error("`{0}` must be at least 1")]
    ZeroParameter(&'static str),
    #[error("active count {m_hat} exceeds dictionary size {m}")]
    MHatExceedsM { m_hat: u64, m: u64 },
    #[error("joules per FLOP must be finite and positive, got {0}")]
    InvalidJoulesPerFlop(f64),
    #[error("cannot average over zero encodings")]
    EmptyResults,
}

fn nonzero(v: u64, name: &'static str) -> Result<u64, CostError> {
    if v == 0 {
        Err(CostError::ZeroParameter(name))
    } else {
        Ok(v)
    }
}

fn mul(a: u64, b: u64) -> Result<u64, CostError> {
    a.checked_mul(b).ok_or(CostError::Overflow)
}

fn add(a: u64, b: u64) -> Result<u64, CostError> {
    a.checked_add(b).ok_or(CostError::Overflow)
}

/// One-off Gramian cost, `M(M+1)(2N-1)/2`.
pub fn training_flops(m: u64, n: u64) -> Result<u64, CostError> {
    nonzero(m, "M")?;
    nonzero(n, "N")?;
    // one of M, M+1 is even
    let pairs = if m.is_multiple_of(2) {
        mul(m / 2, add(m, 1)?)?
    } else {
        mul(m, add(m, 1)? / 2)?
    };
    mul(pairs, 2 * n - 1)
}

fn excitatory_flops(m: u64, n: u64) -> Result<u64, CostError> {
    mul(n.checked_mul(2).ok_or(CostError::Overflow)? - 1, m)
}

/// Per-input cost with every neuron active at every step.
pub fn inference_flops_dense(m: u64, n: u64, k: u64) -> Result<u64, CostError> {
    nonzero(m, "M")?;
    inference_flops_sparse(m, n, k, m)
}

/// Per-input cost with `m_hat` active neurons per step on average.
pub fn inference_flops_sparse(m: u64, n: u64, k: u64, m_hat: u64) -> Result<u64, CostError> {
    nonzero(m, "M")?;
    nonzero(n, "N")?;
    nonzero(k, "K")?;
    if m_hat > m {
        return Err(CostError::MHatExceedsM { m_hat, m });
    }
    let per_step = add(mul(mul(2, m)?, m_hat)?, m)?;
    add(excitatory_flops(m, n)?, mul(k, per_step)?)
}

/// The sparse formula with the actual active count of every step in place of
/// the average: `(2N-1)M + sum_k (2M*m_k + M)`.
pub fn inference_flops_per_step(m: u64, n: u64, active_per_step: &[usize]) -> Result<u64, CostError> {
    nonzero(m, "M")?;
    nonzero(n, "N")?;
    let mut total = excitatory_flops(m, n)?;
    for &mk in active_per_step {
        let mk = mk as u64;
        if mk > m {
            return Err(CostError::MHatExceedsM { m_hat: mk, m });
        }
        total = add(total, add(mul(mul(2, m)?, mk)?, m)?)?;
    }
    Ok(total)
}

/// Difference between an active-set kernel and the per-step formula.
///
/// The formula carries over the dense derivation, where each neuron's
/// inhibition sum has `M - 1` terms because its own index is excluded. With
/// `m_k` active neurons, only active neurons drop a term; an inactive neuron
/// gathers all `m_k`, one multiply and one add more. The kernel therefore
/// performs `2(M - m_k)` extra FLOPs at step `k`.
pub fn self_exclusion_correction(m: u64, active_per_step: &[usize]) -> u64 {
    active_per_step
        .iter()
        .map(|&mk| 2 * (m - mk as u64))
        .sum()
}

/// Largest gap between the per-step formula and the average formula when the
/// average is rounded to the nearest integer: `2M * K * 0.5 = M * K`.
pub fn averaging_error_bound(m: u64, k: u64) -> u64 {
    m * k
}

pub fn energy_estimate(flops: u64, joules_per_flop: f64) -> f64 {
    flops as f64 * joules_per_flop
}

/// Mean active count of a batch of encodings.
pub fn measure_m_hat(results: &[EncodeResult]) -> Result<f64, CostError> {
    mean_active_count(results.iter().map(|r| r.active_count))
}

pub fn mean_active_count<I: IntoIterator<Item = usize>>(counts: I) -> Result<f64, CostError> {
    let (n, sum) = counts
        .into_iter()
        .fold((0u64, 0u64), |(n, s), c| (n + 1, s + c as u64));
    if n == 0 {
        return Err(CostError::EmptyResults);
    }
    Ok(sum as f64 / n as f64)
}

/// Rounds a measured mean to the count used in the sparse formula
/// (nearest integer, halves away from zero).
pub fn round_m_hat(mean: f64) -> u64 {
    mean.round().max(0.0) as u64
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CostParams {
    pub m: u64,
    pub n: u64,
    pub k: u64,
    pub m_hat: u64,
    pub joules_per_flop: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CostReport {
    pub training_flops: u64,
    pub inference_flops_dense: u64,
    pub inference_flops_sparse: u64,
    pub energy_joules: f64,
    pub parameters: CostParams,
}

impl CostReport {
    pub fn new(params: CostParams) -> Result<Self, CostError> {
        let CostParams {
            m,
            n,
            k,
            m_hat,
            joules_per_flop,
        } = params;
        if !(joules_per_flop.is_finite() && joules_per_flop > 0.0) {
            return Err(CostError::InvalidJoulesPerFlop(joules_per_flop));
        }
        let sparse = inference_flops_sparse(m, n, k, m_hat)?;
        Ok(Self {
            training_flops: training_flops(m, n)?,
            inference_flops_dense: inference_flops_dense(m, n, k)?,
            inference_flops_sparse: sparse,
            energy_joules: energy_estimate(sparse, joules_per_flop),
            parameters: params,
        })
    }

    pub fn training_tflops(&self) -> f64 {
        self.training_flops as f64 / 1e12
    }

    pub fn inference_gflops(&self) -> f64 {
        self.inference_flops_sparse as f64 / 1e9
    }

    pub fn energy_millijoules(&self) -> f64 {
        self.energy_joules * 1e3
    }

    /// Flat `key=value` lines.
    pub fn to_kv_text(&self) -> String {
        let p = &self.parameters;
        format!(
            "m={}\nn={}\nk={}\nm_hat={}\njoules_per_flop={:e}\n\
             training_flops={}\ninference_flops_dense={}\ninference_flops_sparse={}\n\
             energy_joules={:e}\n",
            p.m,
            p.n,
            p.k,
            p.m_hat,
            p.joules_per_flop,
            self.training_flops,
            self.inference_flops_dense,
            self.inference_flops_sparse,
            self.energy_joules
        )
    }

    /// Headline figures to two decimals: TFLOPs, GFLOPs, mJ.
    pub fn summary(&self) -> String {
        format!(
            "training {:.2} TFLOPs | inference {:.2} GFLOPs | energy {:.2} mJ",
            self.training_tflops(),
            self.inference_gflops(),
            self.energy_millijoules()
        )
    }
}
