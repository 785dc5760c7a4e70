//! Block aggregation of increment series and the dyadic scale ladder the
//! cumulant scan walks.

use crate::error::{Error, Result};
use crate::series::{SeriesKind, TraceSeries};

/// Strictly increasing block sizes for a multi-scale scan.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScaleLadder {
    pub block_sizes: Vec<usize>,
}

/// Non-overlapping block sums at the given block size. Block b covers
/// samples [b*block, (b+1)*block); a trailing partial block is discarded.
pub fn aggregate(series: &TraceSeries, block: usize) -> Result<TraceSeries> {
    if series.kind != SeriesKind::Increments {
        return Err(Error::Kind {
            expected: SeriesKind::Increments.name(),
            got: series.kind.name(),
        });
    }
    if block == 0 {
        return Err(Error::Domain("block size must be positive".into()));
    }
    let blocks = series.values.len() / block;
    if blocks == 0 {
        return Err(Error::Size(format!(
            "series of {} samples has no complete block of size {block}",
            series.values.len()
        )));
    }
    let values = (0..blocks)
        .map(|b| series.values[b * block..(b + 1) * block].iter().sum())
        .collect();
    let mut out = TraceSeries::new(values, SeriesKind::Increments)?;
    out.meta = series.meta.clone();
    out.meta.insert("aggregation_block".into(), block.to_string());
    Ok(out)
}

/// Powers of two 1, 2, 4, ... such that at least `min_blocks` complete
/// blocks remain at every returned size.
pub fn dyadic_ladder(length: usize, min_blocks: usize) -> ScaleLadder {
    let mut block_sizes = Vec::new();
    let mut block = 1usize;
    while min_blocks > 0 && length / block >= min_blocks {
        block_sizes.push(block);
        match block.checked_mul(2) {
            Some(next) => block = next,
            None => break,
        }
    }
    ScaleLadder { block_sizes }
}
