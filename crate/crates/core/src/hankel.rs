//! Hankel and mosaic-Hankel matrices, and the (collective) persistency of
//! excitation rank tests built on them.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg;

/// A finite vector-valued signal `f(start), …, f(start + T − 1)`.
#[derive(Clone, Debug, PartialEq)]
pub struct SignalSegment {
    samples: Vec<DVector<f64>>,
    dim: usize,
    start_time: i64,
}

impl SignalSegment {
    pub fn new(samples: Vec<DVector<f64>>, start_time: i64) -> Result<Self> {
        let dim = samples
            .first()
            .map(|s| s.len())
            .ok_or_else(|| Error::invalid("signal segment must contain at least one sample"))?;
        if dim == 0 {
            return Err(Error::invalid("signal samples must have positive dimension"));
        }
        if let Some(t) = samples.iter().position(|s| s.len() != dim) {
            return Err(Error::dim(format!(
                "sample {t} has dimension {}, expected {dim}",
                samples[t].len()
            )));
        }
        Ok(Self { samples, dim, start_time })
    }

    /// Scalar signal from a slice of values.
    pub fn from_scalars(values: &[f64], start_time: i64) -> Result<Self> {
        Self::new(values.iter().map(|&v| DVector::from_element(1, v)).collect(), start_time)
    }

    /// Builds a segment from rows of a `T×d` row-major table.
    pub fn from_rows(rows: &[Vec<f64>], start_time: i64) -> Result<Self> {
        Self::new(rows.iter().map(|r| DVector::from_column_slice(r)).collect(), start_time)
    }

    pub fn samples(&self) -> &[DVector<f64>] {
        &self.samples
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn start_time(&self) -> i64 {
        self.start_time
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Sub-segment `[offset, offset + len)`, keeping absolute time.
    pub fn window(&self, offset: usize, len: usize) -> Result<Self> {
        if len == 0 || offset + len > self.len() {
            return Err(Error::invalid(format!(
                "window [{offset}, {}) outside segment of length {}",
                offset + len,
                self.len()
            )));
        }
        Ok(Self {
            samples: self.samples[offset..offset + len].to_vec(),
            dim: self.dim,
            start_time: self.start_time + offset as i64,
        })
    }

    /// All samples stacked into one column.
    pub fn stacked(&self) -> DVector<f64> {
        linalg::stack_vectors(&self.samples)
    }
}

/// Horizontal concatenation of equal-depth Hankel blocks, one per segment.
#[derive(Clone, Debug, PartialEq)]
pub struct MosaicHankel {
    pub blocks: Vec<DMatrix<f64>>,
    pub depth: usize,
    pub assembled: DMatrix<f64>,
}

impl MosaicHankel {
    pub fn rank(&self, tol: f64) -> usize {
        linalg::numerical_rank(&self.assembled, tol)
    }

    /// Column range of block `i` inside the assembled matrix.
    pub fn block_columns(&self, i: usize) -> std::ops::Range<usize> {
        let start: usize = self.blocks[..i].iter().map(|b| b.ncols()).sum();
        start..start + self.blocks[i].ncols()
    }
}

/// Depth-`k` Hankel matrix: `kd × (T − k + 1)`, block `(r, c)` holds sample `r + c`.
pub fn hankel(seg: &SignalSegment, k: usize) -> Result<DMatrix<f64>> {
    hankel_indexed(seg, k, 0)
}

fn hankel_indexed(seg: &SignalSegment, k: usize, index: usize) -> Result<DMatrix<f64>> {
    if k == 0 {
        return Err(Error::invalid("Hankel depth must be at least 1"));
    }
    let t_len = seg.len();
    if k > t_len {
        return Err(Error::DepthExceedsLength { depth: k, len: t_len, index });
    }
    let d = seg.dim;
    let cols = t_len - k + 1;
    let mut h = DMatrix::zeros(k * d, cols);
    for c in 0..cols {
        for r in 0..k {
            h.view_mut((r * d, c), (d, 1)).copy_from(&seg.samples[r + c]);
        }
    }
    Ok(h)
}

pub fn mosaic_hankel(segs: &[SignalSegment], k: usize) -> Result<MosaicHankel> {
    let first = segs
        .first()
        .ok_or_else(|| Error::invalid("mosaic-Hankel matrix needs at least one segment"))?;
    let d = first.dim;
    if let Some(i) = segs.iter().position(|s| s.dim != d) {
        return Err(Error::dim(format!(
            "segment {i} has dimension {}, expected {d}",
            segs[i].dim
        )));
    }
    let blocks = segs
        .iter()
        .enumerate()
        .map(|(i, s)| hankel_indexed(s, k, i))
        .collect::<Result<Vec<_>>>()?;
    let assembled = linalg::hconcat(&blocks, k * d)?;
    Ok(MosaicHankel { blocks, depth: k, assembled })
}

pub fn is_persistently_exciting(seg: &SignalSegment, k: usize, tol: f64) -> Result<bool> {
    let h = hankel(seg, k)?;
    Ok(linalg::numerical_rank(&h, tol) == k * seg.dim)
}

pub fn is_collectively_pe(segs: &[SignalSegment], k: usize, tol: f64) -> Result<bool> {
    let mh = mosaic_hankel(segs, k)?;
    Ok(mh.rank(tol) == k * segs[0].dim)
}

/// Largest order `k ≤ T` for which the segment is persistently exciting (0 if none).
pub fn pe_order(seg: &SignalSegment, tol: f64) -> usize {
    (1..=seg.len())
        .take_while(|&k| is_persistently_exciting(seg, k, tol).unwrap_or(false))
        .last()
        .unwrap_or(0)
}

/// Largest order `k ≤ min T_i` for which the segments are collectively PE (0 if none).
pub fn collective_pe_order(segs: &[SignalSegment], tol: f64) -> usize {
    let max_k = segs.iter().map(|s| s.len()).min().unwrap_or(0);
    (1..=max_k)
        .take_while(|&k| is_collectively_pe(segs, k, tol).unwrap_or(false))
        .last()
        .unwrap_or(0)
}

/// Minimum total sample count `k(m + q) − q` for `q` segments of an `m`-dimensional
/// signal to be collectively persistently exciting of order `k`.
pub fn pe_length_bound(k: usize, m: usize, q: usize) -> usize {
    k * (m + q) - q
}
