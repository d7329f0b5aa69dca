//! DSSS spreading sequences and the bit-to-chip mapping.

use crate::iq::{check_chips, BitVec, ChipVec};
use std::fmt;
use std::path::Path;
use thiserror::Error;

/// A +/-1 spreading sequence together with its orthogonality status: the
/// matched filters for symbols '1' and '0' are orthogonal exactly when
/// the alternating sum `sum_l (-1)^l d[l]` vanishes, which is what makes
/// the non-coherent receiver reach its best error rate.
#[derive(Debug, Clone, PartialEq)]
pub struct SpreadingSequence {
    chips: ChipVec,
    orthogonal: bool,
}

#[derive(Debug, Error, PartialEq)]
pub enum SeqError {
    #[error("{0}")]
    Chips(#[from] crate::iq::ChipError),
    #[error("unrecognized token '{0}' (expected +1 or -1)")]
    Token(String),
    #[error("io: {0}")]
    Io(String),
}

/// Alternating-sum criterion for matched-filter orthogonality.
pub fn alternating_sum(chips: &[i8]) -> i32 {
    chips
        .iter()
        .enumerate()
        .map(|(l, &d)| if l % 2 == 0 { d as i32 } else { -(d as i32) })
        .sum()
}

impl SpreadingSequence {
    pub fn new(chips: ChipVec) -> Result<Self, SeqError> {
        check_chips(&chips)?;
        let orthogonal = alternating_sum(&chips) == 0;
        Ok(SpreadingSequence { chips, orthogonal })
    }

    /// Loads a sequence from a text file with one +/-1 token per line;
    /// blank lines and `#` comments are skipped. Non-orthogonal sequences
    /// load fine (the caller decides whether to warn).
    pub fn from_file(path: &Path) -> Result<Self, SeqError> {
        let text = std::fs::read_to_string(path).map_err(|e| SeqError::Io(e.to_string()))?;
        Self::from_text(&text)
    }

    pub fn from_text(text: &str) -> Result<Self, SeqError> {
        let mut chips = Vec::new();
        for line in text.lines() {
            let tok = line.split('#').next().unwrap_or("").trim();
            if tok.is_empty() {
                continue;
            }
            match tok {
                "+1" | "1" => chips.push(1),
                "-1" => chips.push(-1),
                other => return Err(SeqError::Token(other.to_string())),
            }
        }
        Self::new(chips)
    }

    /// Built-in sequence for a supported spreading factor, each satisfying
    /// the orthogonality criterion.
    pub fn default_for(sf_p: u32) -> Option<Self> {
        let chips: ChipVec = match sf_p {
            4 => vec![1, 1, 1, 1],
            8 => vec![1, -1, -1, 1, -1, 1, 1, -1],
            16 => vec![1, -1, 1, 1, -1, 1, -1, -1, 1, 1, -1, -1, -1, -1, 1, 1],
            _ => return None,
        };
        Some(Self::new(chips).expect("built-in sequences are valid"))
    }

    pub fn chips(&self) -> &[i8] {
        &self.chips
    }

    pub fn len(&self) -> usize {
        self.chips.len()
    }

    pub fn is_empty(&self) -> bool {
        self.chips.is_empty()
    }

    pub fn is_orthogonal(&self) -> bool {
        self.orthogonal
    }
}

impl fmt::Display for SpreadingSequence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let toks: Vec<&str> = self.chips.iter().map(|&c| if c > 0 { "+1" } else { "-1" }).collect();
        write!(f, "[{}]", toks.join(", "))
    }
}

/// Maps each bit to one spread symbol: bit 1 sends the sequence, bit 0
/// its negation.
pub fn spread(bits: &BitVec, d: &SpreadingSequence) -> ChipVec {
    let mut out = Vec::with_capacity(bits.len() * d.len());
    for &b in bits {
        if b == 1 {
            out.extend_from_slice(d.chips());
        } else {
            out.extend(d.chips().iter().map(|&c| -c));
        }
    }
    out
}
