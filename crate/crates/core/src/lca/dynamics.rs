use serde::{Deserialize, Serialize};

use super::gramian::dot;
use super::{Dictionary, Gramian, LcaError, NoTally, OpCount, OpTally};

/// Solver hyperparameters. Defaults are threshold 2, tau 100, 100 steps, dt 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LcaParams {
    pub threshold: f64,
    pub tau: f64,
    pub n_steps: usize,
    pub dt: f64,
}

impl Default for LcaParams {
    fn default() -> Self {
        Self {
            threshold: 2.0,
            tau: 100.0,
            n_steps: 100,
            dt: 1.0,
        }
    }
}

impl LcaParams {
    pub fn new(threshold: f64, tau: f64, n_steps: usize, dt: f64) -> Result<Self, LcaError> {
        let p = Self {
            threshold,
            tau,
            n_steps,
            dt,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<(), LcaError> {
        let bad = |field, reason: &str| {
            Err(LcaError::InvalidParam {
                field,
                reason: reason.into(),
            })
        };
        if !(self.threshold.is_finite() && self.threshold >= 0.0) {
            return bad("threshold", "must be finite and >= 0");
        }
        if !(self.tau.is_finite() && self.tau > 0.0) {
            return bad("tau", "must be finite and > 0");
        }
        if self.n_steps == 0 {
            return bad("n_steps", "must be positive");
        }
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return bad("dt", "must be finite and > 0");
        }
        if self.dt > self.tau {
            return bad("dt", "dt/tau must not exceed 1");
        }
        Ok(())
    }

    /// Euler rate `dt / tau`.
    pub fn rate(&self) -> f64 {
        self.dt / self.tau
    }
}

/// Shrinks `u` toward zero by `lambda`; anything inside `[-lambda, lambda]`
/// maps to zero. `|u| == lambda` yields exactly zero.
#[inline]
pub fn soft_threshold(u: f64, lambda: f64) -> f64 {
    if u.abs() >= lambda {
        u - lambda * u.signum()
    } else {
        0.0
    }
}

/// Membrane potentials, their thresholded activations and the active set.
#[derive(Debug, Clone, PartialEq)]
pub struct NeuronState {
    u: Vec<f64>,
    a: Vec<f64>,
    active: Vec<usize>,
    steps: usize,
    scratch: Vec<f64>,
}

impl NeuronState {
    /// All potentials and activations at zero.
    pub fn zeros(m: usize) -> Self {
        Self {
            u: vec![0.0; m],
            a: vec![0.0; m],
            active: Vec::new(),
            steps: 0,
            scratch: vec![0.0; m],
        }
    }

    pub fn from_potentials(u: Vec<f64>, lambda: f64) -> Result<Self, LcaError> {
        if u.iter().any(|v| !v.is_finite()) {
            return Err(LcaError::NonFinite("initial potentials"));
        }
        let m = u.len();
        let mut s = Self {
            a: vec![0.0; m],
            u,
            active: Vec::new(),
            steps: 0,
            scratch: vec![0.0; m],
        };
        s.rethreshold(lambda);
        Ok(s)
    }

    fn rethreshold(&mut self, lambda: f64) {
        self.active.clear();
        for (i, (a, &u)) in self.a.iter_mut().zip(&self.u).enumerate() {
            *a = soft_threshold(u, lambda);
            if *a != 0.0 {
                self.active.push(i);
            }
        }
    }

    pub fn len(&self) -> usize {
        self.u.len()
    }

    pub fn is_empty(&self) -> bool {
        self.u.is_empty()
    }

    pub fn potentials(&self) -> &[f64] {
        &self.u
    }

    pub fn activations(&self) -> &[f64] {
        &self.a
    }

    /// Indices with nonzero activation, ascending.
    pub fn active(&self) -> &[usize] {
        &self.active
    }

    pub fn steps_taken(&self) -> usize {
        self.steps
    }

    /// One explicit Euler step of the neuron ODE; returns `max |du|`.
    ///
    /// For every neuron, `acc = b - u` is formed and each active neuron
    /// `m != i` subtracts `G[m][i] * a[m]` from it, scattering row `m` of the
    /// Gramian. Then `u += rate * acc` and `a = T(u)`.
    fn advance<T: OpTally>(
        &mut self,
        b: &[f64],
        gram: &Gramian,
        rate: f64,
        lambda: f64,
        tally: &mut T,
    ) -> Result<f64, LcaError> {
        let m_total = self.u.len();
        let acc = &mut self.scratch;
        for ((acc, &b), &u) in acc.iter_mut().zip(b).zip(&self.u) {
            *acc = b - u;
        }
        tally.combine(m_total as u64);

        for &m in &self.active {
            let am = self.a[m];
            let row = gram.row(m);
            for (acc, &g) in acc[..m].iter_mut().zip(&row[..m]) {
                *acc -= g * am;
            }
            for (acc, &g) in acc[m + 1..].iter_mut().zip(&row[m + 1..]) {
                *acc -= g * am;
            }
            let terms = (m_total - 1) as u64;
            tally.inhibition(terms, terms);
        }

        let mut max_du = 0.0f64;
        let mut finite = true;
        for (u, &acc) in self.u.iter_mut().zip(acc.iter()) {
            let du = rate * acc;
            *u += du;
            finite &= u.is_finite();
            max_du = max_du.max(du.abs());
        }
        tally.leak(m_total as u64);
        tally.combine(m_total as u64);

        self.steps += 1;
        if !finite {
            return Err(LcaError::Diverged { step: self.steps });
        }
        self.rethreshold(lambda);
        Ok(max_du)
    }
}

fn check_len(expected: usize, found: usize) -> Result<(), LcaError> {
    if expected != found {
        return Err(LcaError::DimensionMismatch { expected, found });
    }
    Ok(())
}

/// One Euler step: `u += (dt/tau) * (b - u - (G - I) a)`, then `a = T(u)`.
pub fn lca_step(
    state: &mut NeuronState,
    b: &[f64],
    gram: &Gramian,
    params: &LcaParams,
) -> Result<(), LcaError> {
    check_len(state.len(), b.len())?;
    check_len(state.len(), gram.len())?;
    state
        .advance(b, gram, params.rate(), params.threshold, &mut NoTally)
        .map(|_| ())
}

/// Projection of `input` onto every atom.
pub fn excitatory_input(input: &[f64], dict: &Dictionary) -> Result<Vec<f64>, LcaError> {
    excitatory_counted(input, dict, &mut NoTally)
}

fn excitatory_counted<T: OpTally>(
    input: &[f64],
    dict: &Dictionary,
    tally: &mut T,
) -> Result<Vec<f64>, LcaError> {
    check_len(dict.n_dim(), input.len())?;
    if input.iter().any(|v| !v.is_finite()) {
        return Err(LcaError::NonFinite("input"));
    }
    let n = input.len() as u64;
    let b = dict.atoms().map(|atom| dot(input, atom)).collect();
    tally.excitatory(n * dict.len() as u64, (n - 1) * dict.len() as u64);
    Ok(b)
}

/// `sum_i a_i * atom_i`.
pub fn reconstruct(a: &[f64], dict: &Dictionary) -> Result<Vec<f64>, LcaError> {
    check_len(dict.len(), a.len())?;
    let mut out = vec![0.0; dict.n_dim()];
    for (&ai, atom) in a.iter().zip(dict.atoms()) {
        if ai != 0.0 {
            for (o, &v) in out.iter_mut().zip(atom) {
                *o += ai * v;
            }
        }
    }
    Ok(out)
}

/// `0.5 * ||input - reconstruct(a)||^2 + lambda * ||a||_1`.
pub fn lasso_objective(
    input: &[f64],
    a: &[f64],
    dict: &Dictionary,
    lambda: f64,
) -> Result<f64, LcaError> {
    check_len(dict.n_dim(), input.len())?;
    let recon = reconstruct(a, dict)?;
    let residual: f64 = input
        .iter()
        .zip(&recon)
        .map(|(x, r)| (x - r) * (x - r))
        .sum();
    let l1: f64 = a.iter().map(|v| v.abs()).sum();
    Ok(0.5 * residual + lambda * l1)
}

/// Lateral inhibition `sum_{m != i} G[i][m] a[m]` for every neuron.
pub fn inhibition(a: &[f64], gram: &Gramian) -> Result<Vec<f64>, LcaError> {
    check_len(gram.len(), a.len())?;
    let mut out = vec![0.0; a.len()];
    for (m, &am) in a.iter().enumerate() {
        if am == 0.0 {
            continue;
        }
        for (i, (o, &g)) in out.iter_mut().zip(gram.row(m)).enumerate() {
            if i != m {
                *o += g * am;
            }
        }
    }
    Ok(out)
}

/// `max_i |a_i - T(b_i - sum_{m != i} G[i][m] a_m)|`; zero at an LCA fixed point.
pub fn fixed_point_residual(
    a: &[f64],
    b: &[f64],
    gram: &Gramian,
    lambda: f64,
) -> Result<f64, LcaError> {
    check_len(a.len(), b.len())?;
    let inh = inhibition(a, gram)?;
    Ok(a.iter()
        .zip(b)
        .zip(&inh)
        .map(|((&a, &b), &h)| (a - soft_threshold(b - h, lambda)).abs())
        .fold(0.0, f64::max))
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct EncodeOptions {
    /// Record the LASSO objective after every step.
    pub record_objective: bool,
    /// Diagnostic mode: stop once `max |du|` falls below this value, running
    /// at most `n_steps`. Not part of the costed path.
    pub early_stop: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EncodeResult {
    pub activations: Vec<f64>,
    pub active_count: usize,
    pub fixed_point_residual: f64,
    pub objective_trajectory: Option<Vec<f64>>,
    pub steps_run: usize,
    /// `max |du|` of the final step.
    pub last_change: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct InstrumentedEncode {
    pub result: EncodeResult,
    pub ops: OpCount,
    /// Active-set size entering each step (the `a[k]` that step `k` gathers).
    pub active_per_step: Vec<usize>,
}

/// Runs the LCA dynamics for one dictionary and Gramian.
#[derive(Debug, Clone, Copy)]
pub struct Encoder<'a> {
    dict: &'a Dictionary,
    gram: &'a Gramian,
    params: LcaParams,
}

impl<'a> Encoder<'a> {
    pub fn new(dict: &'a Dictionary, gram: &'a Gramian, params: LcaParams) -> Result<Self, LcaError> {
        params.validate()?;
        if gram.len() != dict.len() {
            return Err(LcaError::GramianMismatch {
                expected: dict.len() as u64,
                found: gram.len() as u64,
            });
        }
        Ok(Self { dict, gram, params })
    }

    pub fn params(&self) -> &LcaParams {
        &self.params
    }

    pub fn dictionary(&self) -> &Dictionary {
        self.dict
    }

    /// Exactly `n_steps` Euler steps from a zero state.
    pub fn encode(&self, input: &[f64]) -> Result<EncodeResult, LcaError> {
        self.encode_with(input, EncodeOptions::default())
    }

    pub fn encode_with(&self, input: &[f64], opts: EncodeOptions) -> Result<EncodeResult, LcaError> {
        self.run(input, opts, &mut NoTally, None)
    }

    /// Like [`encode`](Self::encode), but tallies every multiply and add.
    pub fn encode_instrumented(&self, input: &[f64]) -> Result<InstrumentedEncode, LcaError> {
        let mut ops = OpCount::default();
        let mut active_per_step = Vec::with_capacity(self.params.n_steps);
        let result = self.run(
            input,
            EncodeOptions::default(),
            &mut ops,
            Some(&mut active_per_step),
        )?;
        Ok(InstrumentedEncode {
            result,
            ops,
            active_per_step,
        })
    }

    fn run<T: OpTally>(
        &self,
        input: &[f64],
        opts: EncodeOptions,
        tally: &mut T,
        mut per_step: Option<&mut Vec<usize>>,
    ) -> Result<EncodeResult, LcaError> {
        let b = excitatory_counted(input, self.dict, tally)?;
        let lambda = self.params.threshold;
        let rate = self.params.rate();
        let mut state = NeuronState::zeros(self.dict.len());
        let mut trajectory = opts
            .record_objective
            .then(|| Vec::with_capacity(self.params.n_steps));
        let mut last_change = f64::INFINITY;

        for _ in 0..self.params.n_steps {
            if let Some(v) = per_step.as_deref_mut() {
                v.push(state.active.len());
            }
            last_change = state.advance(&b, self.gram, rate, lambda, tally)?;
            if let Some(t) = trajectory.as_mut() {
                t.push(lasso_objective(input, &state.a, self.dict, lambda)?);
            }
            if matches!(opts.early_stop, Some(tol) if last_change < tol) {
                break;
            }
        }

        let fixed_point_residual = fixed_point_residual(&state.a, &b, self.gram, lambda)?;
        Ok(EncodeResult {
            active_count: state.active.len(),
            steps_run: state.steps,
            activations: state.a,
            fixed_point_residual,
            objective_trajectory: trajectory,
            last_change,
        })
    }
}
