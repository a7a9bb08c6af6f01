//! Estimation of the queue model's finite determining lists from confirmed
//! block data: the head of the pool-size law P(N = n) and the full-block
//! transition row, measured as block-to-block frequencies.
//!
//! The input is a CSV of included transactions (`block_number,tx_index,
//! priority`). With a work-conserving priority scheduler, a block carrying n
//! < beta high-priority transactions had exactly n of them pooled, and a
//! completely full block witnesses {N >= beta}; mempool data is never
//! needed.

use std::io::Read;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::analytics::TransitionInputs;
use crate::error::{Error, Result};
use crate::stats::wilson_interval;

/// 95% normal quantile used for every Wilson interval.
const WILSON_Z: f64 = 1.959_963_984_540_054;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockDataRow {
    pub block_number: u64,
    pub tx_index: u32,
    pub priority: f64,
}

/// One estimated bin: count, point estimate and Wilson 95% interval.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimatedBin {
    pub count: u64,
    pub p_hat: f64,
    pub wilson_low: f64,
    pub wilson_high: f64,
}

impl EstimatedBin {
    fn from_counts(count: u64, trials: u64) -> Self {
        let p_hat = if trials == 0 {
            0.0
        } else {
            count as f64 / trials as f64
        };
        let (wilson_low, wilson_high) = wilson_interval(count, trials, WILSON_Z);
        Self {
            count,
            p_hat,
            wilson_low,
            wilson_high,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalEstimate {
    pub beta: usize,
    pub n_blocks_used: u64,
    /// P(N = n) estimates for n = 0 .. beta - 1.
    pub prob_n_hat: Vec<EstimatedBin>,
    /// P(N >= beta), estimated by the full-block frequency.
    pub full_block_hat: EstimatedBin,
    /// Transition row estimates over consecutive (full, next) pairs.
    pub trans_hat: Vec<EstimatedBin>,
    /// Number of (full block, successor) pairs observed.
    pub trans_pairs: u64,
}

impl EmpiricalEstimate {
    /// The point estimates in the form the analytics pipeline consumes.
    pub fn to_transition_inputs(&self) -> Result<TransitionInputs> {
        TransitionInputs::new(
            self.beta,
            self.prob_n_hat.iter().map(|b| b.p_hat).collect(),
            self.trans_hat.iter().map(|b| b.p_hat).collect(),
        )
    }
}

/// Reads a confirmed-block CSV and counts, per block, the included
/// transactions with priority above `threshold`. Blocks absent from the file
/// (gaps in the block number range) count zero. Block numbers must be
/// non-decreasing and (block, index) pairs unique; indices must stay below
/// `beta`.
pub fn load_blocks(path: &Path, beta: usize, threshold: f64) -> Result<Vec<u32>> {
    let file = std::fs::File::open(path)?;
    load_blocks_from_reader(file, beta, threshold)
}

pub fn load_blocks_from_reader<R: Read>(
    reader: R,
    beta: usize,
    threshold: f64,
) -> Result<Vec<u32>> {
    if beta == 0 {
        return Err(Error::InvalidParameter("beta must be at least 1".into()));
    }
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(reader);
    {
        let headers = rdr.headers()?;
        let expected = ["block_number", "tx_index", "priority"];
        if headers.len() != 3 || headers.iter().zip(expected).any(|(h, e)| h != e) {
            return Err(Error::Parse {
                row: 1,
                message: format!("expected header block_number,tx_index,priority, got {headers:?}"),
            });
        }
    }

    let mut counts: Vec<u32> = Vec::new();
    let mut current_block: Option<u64> = None;
    let mut first_block: Option<u64> = None;
    let mut seen_indices: std::collections::HashSet<u32> = std::collections::HashSet::new();
    let mut current_count = 0u32;

    for (i, record) in rdr.deserialize::<BlockDataRow>().enumerate() {
        let row_no = i + 2; // header is row 1
        let row: BlockDataRow = record.map_err(|e| Error::Parse {
            row: row_no,
            message: e.to_string(),
        })?;
        if row.tx_index as usize >= beta {
            return Err(Error::Parse {
                row: row_no,
                message: format!("tx_index {} out of range for beta {beta}", row.tx_index),
            });
        }
        match current_block {
            None => {
                current_block = Some(row.block_number);
                first_block = Some(row.block_number);
            }
            Some(cur) if row.block_number == cur => {}
            Some(cur) if row.block_number > cur => {
                counts.push(current_count);
                // blocks with no rows count zero
                let gap = (row.block_number - cur - 1) as usize;
                counts.resize(counts.len() + gap, 0);
                current_block = Some(row.block_number);
                current_count = 0;
                seen_indices.clear();
            }
            Some(cur) => {
                return Err(Error::Parse {
                    row: row_no,
                    message: format!("non-monotone block number {} after {cur}", row.block_number),
                });
            }
        }
        if !seen_indices.insert(row.tx_index) {
            return Err(Error::Parse {
                row: row_no,
                message: format!(
                    "duplicate (block {}, tx_index {})",
                    row.block_number, row.tx_index
                ),
            });
        }
        if row.priority > threshold {
            current_count += 1;
        }
    }
    if first_block.is_some() {
        counts.push(current_count);
    }
    debug_assert!(counts.iter().all(|c| (*c as usize) <= beta));
    Ok(counts)
}

/// Frequency estimate of the pool-size head: P(N = n) for n < beta is the
/// proportion of blocks containing exactly n high-priority messages, and
/// {N >= beta} is witnessed by completely full blocks.
pub fn estimate_n_distribution(
    counts: &[u32],
    beta: usize,
) -> Result<(Vec<EstimatedBin>, EstimatedBin)> {
    if counts.is_empty() {
        return Err(Error::InvalidParameter("no blocks to estimate from".into()));
    }
    let trials = counts.len() as u64;
    let mut bins = vec![0u64; beta];
    let mut full = 0u64;
    for &c in counts {
        let c = c as usize;
        if c >= beta {
            full += 1;
        } else {
            bins[c] += 1;
        }
    }
    let prob_n_hat = bins
        .into_iter()
        .map(|count| EstimatedBin::from_counts(count, trials))
        .collect();
    Ok((prob_n_hat, EstimatedBin::from_counts(full, trials)))
}

/// Conditional frequency estimate of the transition row: over consecutive
/// pairs (full block, next block with k < beta high-priority messages).
pub fn estimate_transitions(counts: &[u32], beta: usize) -> Result<(Vec<EstimatedBin>, u64)> {
    let mut pairs = 0u64;
    let mut bins = vec![0u64; beta];
    for w in counts.windows(2) {
        if (w[0] as usize) >= beta {
            pairs += 1;
            let next = w[1] as usize;
            if next < beta {
                bins[next] += 1;
            }
        }
    }
    if pairs == 0 {
        return Err(Error::ZeroMassConditioning(
            "conditioning event unobserved: no full block followed by another block".into(),
        ));
    }
    Ok((
        bins.into_iter()
            .map(|count| EstimatedBin::from_counts(count, pairs))
            .collect(),
        pairs,
    ))
}

/// Full estimate over one count sequence.
pub fn estimate(counts: &[u32], beta: usize) -> Result<EmpiricalEstimate> {
    let (prob_n_hat, full_block_hat) = estimate_n_distribution(counts, beta)?;
    let (trans_hat, trans_pairs) = estimate_transitions(counts, beta)?;
    Ok(EmpiricalEstimate {
        beta,
        n_blocks_used: counts.len() as u64,
        prob_n_hat,
        full_block_hat,
        trans_hat,
        trans_pairs,
    })
}
