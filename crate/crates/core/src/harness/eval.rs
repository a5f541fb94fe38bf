use std::fmt::Write as _;
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use rayon::prelude::*;
use serde::Serialize;

use super::{DecoderSelection, Fallback, HarnessError, RunConfig};
use crate::costmodel::{mean_active_count, round_m_hat, CostParams, CostReport};
use crate::decoders::{decode_max_activation, decode_max_sum, majority_class, DecodeError, MaxMode};
use crate::embedset::{self, EmbeddingSet};
use crate::lca::{Dictionary, Encoder, Gramian, LcaError, LcaParams};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EvalOptions {
    pub params: LcaParams,
    pub decoders: DecoderSelection,
    pub max_mode: MaxMode,
    pub normalize_input: bool,
    pub fallback: Fallback,
    pub joules_per_flop: f64,
    pub workers: Option<usize>,
}

impl From<&RunConfig> for EvalOptions {
    fn from(c: &RunConfig) -> Self {
        Self {
            params: c.params,
            decoders: c.decoders,
            max_mode: c.max_mode,
            normalize_input: c.normalize_input,
            fallback: c.fallback,
            joules_per_flop: c.joules_per_flop,
            workers: c.workers,
        }
    }
}

impl Default for EvalOptions {
    fn default() -> Self {
        (&RunConfig::new("", "")).into()
    }
}

/// Tally for one decoder. `correct + incorrect + no_evidence` equals the
/// number of encoded (non-divergent) inputs; inputs resolved by the fallback
/// stay in `no_evidence` and add to `fallback_correct` when right.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct DecoderStats {
    pub correct: usize,
    pub incorrect: usize,
    pub no_evidence: usize,
    pub fallback_correct: usize,
    pub accuracy: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Divergence {
    pub index: usize,
    pub step: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalReport {
    pub test_size: usize,
    pub encoded: usize,
    pub top1_accuracy_max: Option<f64>,
    pub top1_accuracy_maxsum: Option<f64>,
    pub max_activation: Option<DecoderStats>,
    pub max_sum: Option<DecoderStats>,
    pub mean_active_count: f64,
    pub no_evidence_count: usize,
    pub divergent: Vec<Divergence>,
    pub cost: CostReport,
    pub config_echo: serde_json::Value,
}

/// Per-input result, one line of the record file.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RecordOutcome {
    pub index: usize,
    pub label: u32,
    pub active_count: Option<usize>,
    pub max_prediction: Option<u32>,
    pub max_sum_prediction: Option<u32>,
    pub diverged_at_step: Option<usize>,
}

/// Reads a dictionary file, or builds one from a `.vlca` embedding set.
pub fn load_dictionary(path: impl AsRef<Path>) -> Result<Dictionary, HarnessError> {
    let mut f = BufReader::new(File::open(path.as_ref())?);
    let mut magic = [0u8; 4];
    let got = embedset::read_up_to(&mut f, &mut magic)?;
    let rest = (&magic[..got]).chain(f);
    if got == 4 && &magic == embedset::MAGIC {
        let set = EmbeddingSet::read_from(rest)?;
        Ok(Dictionary::build(&set)?)
    } else {
        Ok(Dictionary::read_from(rest)?)
    }
}

fn as_input(v: &[f32], normalize: bool) -> Vec<f64> {
    let mut x: Vec<f64> = v.iter().map(|&x| x as f64).collect();
    if normalize {
        let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm > 0.0 {
            x.iter_mut().for_each(|v| *v /= norm);
        }
    }
    x
}

struct Decided {
    prediction: Option<u32>,
    no_evidence: bool,
}

fn resolve(r: Result<u32, DecodeError>, fallback: Option<u32>) -> Result<Decided, HarnessError> {
    match r {
        Ok(c) => Ok(Decided {
            prediction: Some(c),
            no_evidence: false,
        }),
        Err(DecodeError::NoEvidence) => Ok(Decided {
            prediction: fallback,
            no_evidence: true,
        }),
        Err(e) => Err(HarnessError::InvalidConfig {
            field: "dictionary",
            reason: e.to_string(),
        }),
    }
}

fn tally(stats: &mut DecoderStats, d: &Decided, label: u32) {
    let right = d.prediction == Some(label);
    if d.no_evidence {
        stats.no_evidence += 1;
        stats.fallback_correct += right as usize;
    } else if right {
        stats.correct += 1;
    } else {
        stats.incorrect += 1;
    }
}

/// Encodes every test record once and decodes it with the selected decoders.
///
/// Work is spread over a rayon pool; results are gathered by record index so
/// the report does not depend on the thread count.
pub fn evaluate_sets(
    dict: &Dictionary,
    gram: &Gramian,
    test: &EmbeddingSet,
    opts: &EvalOptions,
) -> Result<(EvalReport, Vec<RecordOutcome>), HarnessError> {
    if test.is_empty() {
        return Err(HarnessError::EmptyTestSet);
    }
    if test.n_dim() != dict.n_dim() {
        return Err(HarnessError::DimensionMismatch {
            dictionary: dict.n_dim(),
            test: test.n_dim(),
        });
    }
    if let Some(r) = test
        .records()
        .iter()
        .find(|r| r.label as usize >= dict.n_classes())
    {
        return Err(HarnessError::InvalidConfig {
            field: "test_path",
            reason: format!(
                "test label {} outside the dictionary's {} classes",
                r.label,
                dict.n_classes()
            ),
        });
    }
    let encoder = Encoder::new(dict, gram, opts.params)?;

    let encode_all = || {
        test.records()
            .par_iter()
            .map(|r| encoder.encode(&as_input(&r.vector, opts.normalize_input)))
            .collect::<Vec<_>>()
    };
    let encodings = match opts.workers {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| HarnessError::InvalidConfig {
                field: "workers",
                reason: e.to_string(),
            })?
            .install(encode_all),
        None => encode_all(),
    };

    let fallback = match opts.fallback {
        Fallback::None => None,
        Fallback::Majority => majority_class(dict.atom_labels(), dict.n_classes()),
    };
    let labels = dict.atom_labels();
    let c = dict.n_classes();

    let mut max_stats = DecoderStats::default();
    let mut sum_stats = DecoderStats::default();
    let mut outcomes = Vec::with_capacity(test.len());
    let mut divergent = Vec::new();
    let mut active_counts = Vec::with_capacity(test.len());
    let mut no_evidence_count = 0;

    for (index, (record, enc)) in test.records().iter().zip(encodings).enumerate() {
        let label = record.label;
        let result = match enc {
            Ok(r) => r,
            Err(LcaError::Diverged { step }) => {
                divergent.push(Divergence { index, step });
                outcomes.push(RecordOutcome {
                    index,
                    label,
                    active_count: None,
                    max_prediction: None,
                    max_sum_prediction: None,
                    diverged_at_step: Some(step),
                });
                continue;
            }
            Err(e) => return Err(e.into()),
        };
        active_counts.push(result.active_count);
        no_evidence_count += (result.active_count == 0) as usize;

        let a = &result.activations;
        let max_pred = if opts.decoders.max() {
            let d = resolve(
                decode_max_activation(a, labels, c, opts.max_mode).map(|p| p.predicted_class),
                fallback,
            )?;
            tally(&mut max_stats, &d, label);
            d.prediction
        } else {
            None
        };
        let sum_pred = if opts.decoders.max_sum() {
            let d = resolve(decode_max_sum(a, labels, c).map(|p| p.predicted_class), fallback)?;
            tally(&mut sum_stats, &d, label);
            d.prediction
        } else {
            None
        };
        outcomes.push(RecordOutcome {
            index,
            label,
            active_count: Some(result.active_count),
            max_prediction: max_pred,
            max_sum_prediction: sum_pred,
            diverged_at_step: None,
        });
    }

    let encoded = active_counts.len();
    let finish = |mut s: DecoderStats| {
        s.accuracy = if encoded == 0 {
            0.0
        } else {
            (s.correct + s.fallback_correct) as f64 / encoded as f64
        };
        s
    };
    let max_activation = opts.decoders.max().then(|| finish(max_stats));
    let max_sum = opts.decoders.max_sum().then(|| finish(sum_stats));

    let mean_active = if encoded == 0 {
        0.0
    } else {
        mean_active_count(active_counts)?
    };
    let cost = CostReport::new(CostParams {
        m: dict.len() as u64,
        n: dict.n_dim() as u64,
        k: opts.params.n_steps as u64,
        m_hat: round_m_hat(mean_active),
        joules_per_flop: opts.joules_per_flop,
    })?;

    let report = EvalReport {
        test_size: test.len(),
        encoded,
        top1_accuracy_max: max_activation.map(|s| s.accuracy),
        top1_accuracy_maxsum: max_sum.map(|s| s.accuracy),
        max_activation,
        max_sum,
        mean_active_count: mean_active,
        no_evidence_count,
        divergent,
        cost,
        config_echo: serde_json::to_value(opts)?,
    };
    Ok((report, outcomes))
}

/// Loads inputs named by `config`, evaluates, and writes the record file if
/// one was requested.
pub fn evaluate(config: &RunConfig) -> Result<(EvalReport, Vec<RecordOutcome>), HarnessError> {
    config.validate()?;
    let dict = load_dictionary(&config.dictionary_path)?;
    let test = EmbeddingSet::load(&config.test_path)?;
    let gram = match &config.gramian_path {
        Some(p) => Gramian::load_for(p, &dict)?,
        None => Gramian::compute(&dict)?,
    };
    let (mut report, outcomes) = evaluate_sets(&dict, &gram, &test, &config.into())?;
    report.config_echo = serde_json::to_value(config)?;
    if let Some(path) = &config.report_path {
        report.write_records(&outcomes, BufWriter::new(File::create(path)?))?;
    }
    Ok((report, outcomes))
}

fn pct(v: Option<f64>) -> String {
    v.map_or_else(|| "-".to_string(), |a| format!("{:.2}%", 100.0 * a))
}

impl EvalReport {
    /// Writes one JSON object per test record (`"kind": "record"`) followed
    /// by a single `"kind": "summary"` line holding this report.
    pub fn write_records<W: Write>(
        &self,
        outcomes: &[RecordOutcome],
        mut w: W,
    ) -> Result<(), HarnessError> {
        #[derive(Serialize)]
        struct Line<'a, T: Serialize> {
            kind: &'static str,
            #[serde(flatten)]
            body: &'a T,
        }
        for o in outcomes {
            serde_json::to_writer(&mut w, &Line { kind: "record", body: o })?;
            w.write_all(b"\n")?;
        }
        serde_json::to_writer(&mut w, &Line { kind: "summary", body: self })?;
        w.write_all(b"\n")?;
        w.flush()?;
        Ok(())
    }

    /// Human-readable summary table.
    pub fn to_table(&self) -> String {
        let mut s = String::new();
        let p = &self.cost.parameters;
        let _ = writeln!(s, "{:<28} {}", "test inputs", self.test_size);
        let _ = writeln!(s, "{:<28} {}", "encoded", self.encoded);
        let _ = writeln!(s, "{:<28} {}", "divergent", self.divergent.len());
        let _ = writeln!(s, "{:<28} {}", "no-evidence codes", self.no_evidence_count);
        let _ = writeln!(s, "{:<28} {:.3}", "mean active count", self.mean_active_count);
        let _ = writeln!(s, "{:<28} {}", "top-1 max activation", pct(self.top1_accuracy_max));
        let _ = writeln!(s, "{:<28} {}", "top-1 max sum", pct(self.top1_accuracy_maxsum));
        let _ = writeln!(s, "{:<28} M={} N={} K={} M_hat={}", "cost parameters", p.m, p.n, p.k, p.m_hat);
        let _ = writeln!(s, "{:<28} {}", "training FLOPs", self.cost.training_flops);
        let _ = writeln!(s, "{:<28} {}", "inference FLOPs (sparse)", self.cost.inference_flops_sparse);
        let _ = writeln!(s, "{:<28} {}", "inference FLOPs (dense)", self.cost.inference_flops_dense);
        let _ = writeln!(s, "{:<28} {:e} J", "energy", self.cost.energy_joules);
        s
    }
}
