//! Class decisions from sparse activation codes.
//!
//! Both decoders score each class from the activations of that class's
//! atoms and pick the highest score, lowest class index on ties. A code with
//! no usable activation yields [`DecodeError::NoEvidence`] instead of a guess.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum DecoderKind {
    /// Largest single activation per class.
    MaxActivation,
    /// Sum of absolute activations per class.
    MaxSumOfActivations,
}

/// How the max-activation decoder reads signs.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum MaxMode {
    /// Scores by `|a_i|`, consistent with the sum decoder.
    #[default]
    Absolute,
    /// Scores by the positive part of `a_i`; negative activations are ignored.
    Signed,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DecodeError {
    #[error("activation code carries no evidence for any class")]
    NoEvidence,
    #[error("{activations} activations but {labels} atom labels")]
    LengthMismatch { activations: usize, labels: usize },
    #[error("atom {atom} has label {label}, but only {n_classes} classes")]
    LabelOutOfRange {
        atom: usize,
        label: u32,
        n_classes: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Prediction {
    pub predicted_class: u32,
    pub per_class_scores: Vec<f64>,
    pub decoder_kind: DecoderKind,
}

fn check(a: &[f64], labels: &[u32], n_classes: usize) -> Result<(), DecodeError> {
    if a.len() != labels.len() {
        return Err(DecodeError::LengthMismatch {
            activations: a.len(),
            labels: labels.len(),
        });
    }
    if let Some(atom) = labels.iter().position(|&l| l as usize >= n_classes) {
        return Err(DecodeError::LabelOutOfRange {
            atom,
            label: labels[atom],
            n_classes,
        });
    }
    Ok(())
}

/// Index of the first maximum among strictly positive scores.
fn argmax(scores: &[f64]) -> Option<u32> {
    let mut best: Option<(usize, f64)> = None;
    for (c, &s) in scores.iter().enumerate() {
        if s > 0.0 && best.is_none_or(|(_, b)| s > b) {
            best = Some((c, s));
        }
    }
    best.map(|(c, _)| c as u32)
}

fn finish(scores: Vec<f64>, kind: DecoderKind) -> Result<Prediction, DecodeError> {
    let predicted_class = argmax(&scores).ok_or(DecodeError::NoEvidence)?;
    Ok(Prediction {
        predicted_class,
        per_class_scores: scores,
        decoder_kind: kind,
    })
}

pub fn decode_max_activation(
    a: &[f64],
    atom_labels: &[u32],
    n_classes: usize,
    mode: MaxMode,
) -> Result<Prediction, DecodeError> {
    check(a, atom_labels, n_classes)?;
    let mut scores = vec![0.0f64; n_classes];
    for (&ai, &label) in a.iter().zip(atom_labels) {
        let v = match mode {
            MaxMode::Absolute => ai.abs(),
            MaxMode::Signed => ai.max(0.0),
        };
        let s = &mut scores[label as usize];
        *s = s.max(v);
    }
    finish(scores, DecoderKind::MaxActivation)
}

pub fn decode_max_sum(
    a: &[f64],
    atom_labels: &[u32],
    n_classes: usize,
) -> Result<Prediction, DecodeError> {
    check(a, atom_labels, n_classes)?;
    let mut scores = vec![0.0f64; n_classes];
    for (&ai, &label) in a.iter().zip(atom_labels) {
        scores[label as usize] += ai.abs();
    }
    finish(scores, DecoderKind::MaxSumOfActivations)
}

/// Class with the most atoms, lowest index on ties. Fallback for codes
/// that carry no evidence.
pub fn majority_class(atom_labels: &[u32], n_classes: usize) -> Option<u32> {
    let mut counts = vec![0usize; n_classes];
    for &l in atom_labels {
        counts[l as usize] += 1;
    }
    let mut best: Option<(usize, usize)> = None;
    for (c, &n) in counts.iter().enumerate() {
        if n > 0 && best.is_none_or(|(_, b)| n > b) {
            best = Some((c, n));
        }
    }
    best.map(|(c, _)| c as u32)
}
