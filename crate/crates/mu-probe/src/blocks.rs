//! Block-structure algebra for the uncertainty pattern and the blockwise
//! vector updates shared by both power-iteration engines.

use ndarray::{Array1, ArrayView1};
use num_complex::Complex64 as c64;
use serde::{Deserialize, Serialize};
use std::ops::Range;

use crate::error::{MuError, Result};

/// Default relative tolerance below which a block is considered degenerate.
pub const DEGENERACY_TOL: f64 = 1e-9;

/// Ordered block-diagonal uncertainty pattern: `s` repeated-scalar blocks of
/// sizes `r_1..r_s` followed by `f` full blocks of sizes `m_1..m_f`, with
/// sizes summing to `n`.
///
/// Serialized using the `r = [s, r_1, ..., r_s]`, `m = [f, m_1, ..., m_f]`
/// convention, e.g. `{"r": [2, 1, 1], "m": [1, 2]}` for two 1x1 scalar
/// blocks and one 2x2 full block (n = 4).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RmRepr", into = "RmRepr")]
pub struct BlockStructure {
    scalars: Vec<usize>,
    fulls: Vec<usize>,
    n: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RmRepr {
    r: Vec<usize>,
    m: Vec<usize>,
}

impl From<BlockStructure> for RmRepr {
    fn from(s: BlockStructure) -> Self {
        let (r, m) = s.to_rm();
        RmRepr { r, m }
    }
}

impl TryFrom<RmRepr> for BlockStructure {
    type Error = MuError;
    fn try_from(v: RmRepr) -> Result<Self> {
        BlockStructure::from_rm(&v.r, &v.m)
    }
}

/// One block of a partitioned vector: kind plus index range into the data.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Block {
    Scalar(Range<usize>),
    Full(Range<usize>),
}

impl Block {
    pub fn range(&self) -> Range<usize> {
        match self {
            Block::Scalar(r) | Block::Full(r) => r.clone(),
        }
    }
}

impl BlockStructure {
    pub fn new(scalars: Vec<usize>, fulls: Vec<usize>) -> Result<Self> {
        if scalars.is_empty() && fulls.is_empty() {
            return Err(MuError::InvalidArgument(
                "structure needs at least one block".into(),
            ));
        }
        if scalars.iter().chain(fulls.iter()).any(|&sz| sz == 0) {
            return Err(MuError::InvalidArgument("block sizes must be >= 1".into()));
        }
        let n = scalars.iter().chain(fulls.iter()).sum();
        Ok(BlockStructure { scalars, fulls, n })
    }

    /// Build from the `r = [s, r_1, ..]`, `m = [f, m_1, ..]` notation.
    /// `[0]` and `[0, 0]` both denote "no blocks of this kind".
    pub fn from_rm(r: &[usize], m: &[usize]) -> Result<Self> {
        let parse = |v: &[usize], name: &str| -> Result<Vec<usize>> {
            match v.split_first() {
                None | Some((0, _)) => {
                    // counted header says zero blocks; tolerate a single
                    // padding zero as in the paper's [0, 0] notation
                    if v.len() > 2 || (v.len() == 2 && v[1] != 0) {
                        return Err(MuError::Config(format!(
                            "{name}: count 0 but sizes given"
                        )));
                    }
                    Ok(vec![])
                }
                Some((&count, sizes)) => {
                    if sizes.len() != count {
                        return Err(MuError::Config(format!(
                            "{name}: count {count} but {} sizes",
                            sizes.len()
                        )));
                    }
                    Ok(sizes.to_vec())
                }
            }
        };
        BlockStructure::new(parse(r, "r")?, parse(m, "m")?)
    }

    pub fn to_rm(&self) -> (Vec<usize>, Vec<usize>) {
        let pack = |v: &[usize]| {
            if v.is_empty() {
                vec![0, 0]
            } else {
                let mut out = vec![v.len()];
                out.extend_from_slice(v);
                out
            }
        };
        (pack(&self.scalars), pack(&self.fulls))
    }

    /// Convenience: one full n x n block (unstructured uncertainty).
    pub fn single_full(n: usize) -> Self {
        BlockStructure::new(vec![], vec![n]).expect("n >= 1")
    }

    /// Convenience: one repeated-scalar block `delta I_n`.
    pub fn single_repeated_scalar(n: usize) -> Self {
        BlockStructure::new(vec![n], vec![]).expect("n >= 1")
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn scalar_sizes(&self) -> &[usize] {
        &self.scalars
    }

    pub fn full_sizes(&self) -> &[usize] {
        &self.fulls
    }

    pub fn num_scalars(&self) -> usize {
        self.scalars.len()
    }

    pub fn num_fulls(&self) -> usize {
        self.fulls.len()
    }

    /// Blocks in structure order: scalars first, then fulls.
    pub fn blocks(&self) -> Vec<Block> {
        let mut out = Vec::with_capacity(self.scalars.len() + self.fulls.len());
        let mut off = 0;
        for &sz in &self.scalars {
            out.push(Block::Scalar(off..off + sz));
            off += sz;
        }
        for &sz in &self.fulls {
            out.push(Block::Full(off..off + sz));
            off += sz;
        }
        out
    }
}

/// Complex n-vector partitioned according to a block structure.
#[derive(Debug, Clone)]
pub struct PartitionedVector {
    pub structure: BlockStructure,
    pub data: Array1<c64>,
}

impl PartitionedVector {
    pub fn new(structure: BlockStructure, data: Array1<c64>) -> Result<Self> {
        if data.len() != structure.n() {
            return Err(MuError::DimensionMismatch(format!(
                "vector length {} != structure dimension {}",
                data.len(),
                structure.n()
            )));
        }
        Ok(PartitionedVector { structure, data })
    }
}

fn block_norm(v: &ArrayView1<c64>, r: &Range<usize>) -> f64 {
    v.slice(ndarray::s![r.clone()])
        .iter()
        .map(|x| x.norm_sqr())
        .sum::<f64>()
        .sqrt()
}

fn block_inner(x: &ArrayView1<c64>, y: &ArrayView1<c64>, r: &Range<usize>) -> c64 {
    let mut acc = c64::new(0.0, 0.0);
    for i in r.clone() {
        acc += x[i].conj() * y[i];
    }
    acc
}

/// Blockwise z-update: `z_{r_j} = phase(w^H a) w` on scalar blocks,
/// `z_{m_k} = (|w| / |a|) a` on full blocks. Errors with `DegenerateBlock`
/// when a phase or norm ratio is numerically undefined, signalling the
/// caller to restart.
pub fn update_z(
    structure: &BlockStructure,
    w: &ArrayView1<c64>,
    a: &ArrayView1<c64>,
    tol: f64,
) -> Result<Array1<c64>> {
    let mut z = Array1::<c64>::zeros(structure.n());
    for (idx, blk) in structure.blocks().iter().enumerate() {
        let r = blk.range();
        match blk {
            Block::Scalar(_) => {
                let ip = block_inner(w, a, &r);
                let scale = block_norm(w, &r) * block_norm(a, &r);
                if ip.norm() < tol * scale || scale < tol {
                    return Err(MuError::DegenerateBlock {
                        index: idx,
                        reason: "vanishing w^H a on scalar block".into(),
                    });
                }
                let phase = ip / ip.norm();
                for i in r {
                    z[i] = phase * w[i];
                }
            }
            Block::Full(_) => {
                let na = block_norm(a, &r);
                let nw = block_norm(w, &r);
                if na < tol || nw < tol {
                    return Err(MuError::DegenerateBlock {
                        index: idx,
                        reason: "vanishing norm on full block".into(),
                    });
                }
                let ratio = nw / na;
                for i in r {
                    z[i] = ratio * a[i];
                }
            }
        }
    }
    Ok(z)
}

/// Blockwise b-update: mirror of [`update_z`] with the roles of `a` and `w`
/// exchanged: `b_{r_j} = phase(a^H w) a`, `b_{m_k} = (|a| / |w|) w`.
pub fn update_b(
    structure: &BlockStructure,
    a: &ArrayView1<c64>,
    w: &ArrayView1<c64>,
    tol: f64,
) -> Result<Array1<c64>> {
    let mut b = Array1::<c64>::zeros(structure.n());
    for (idx, blk) in structure.blocks().iter().enumerate() {
        let r = blk.range();
        match blk {
            Block::Scalar(_) => {
                let ip = block_inner(a, w, &r);
                let scale = block_norm(a, &r) * block_norm(w, &r);
                if ip.norm() < tol * scale || scale < tol {
                    return Err(MuError::DegenerateBlock {
                        index: idx,
                        reason: "vanishing a^H w on scalar block".into(),
                    });
                }
                let phase = ip / ip.norm();
                for i in r {
                    b[i] = phase * a[i];
                }
            }
            Block::Full(_) => {
                let na = block_norm(a, &r);
                let nw = block_norm(w, &r);
                if na < tol || nw < tol {
                    return Err(MuError::DegenerateBlock {
                        index: idx,
                        reason: "vanishing norm on full block".into(),
                    });
                }
                let ratio = na / nw;
                for i in r {
                    b[i] = ratio * w[i];
                }
            }
        }
    }
    Ok(b)
}

/// Indices of degenerate blocks: scalar blocks with `|w^H a|` below
/// `tol * |w| |a|` (or either norm below tol), full blocks with either norm
/// below tol. Pure predicate, never errors.
pub fn degeneracy_check(
    structure: &BlockStructure,
    w: &ArrayView1<c64>,
    a: &ArrayView1<c64>,
    tol: f64,
) -> Vec<usize> {
    let mut out = Vec::new();
    for (idx, blk) in structure.blocks().iter().enumerate() {
        let r = blk.range();
        let na = block_norm(a, &r);
        let nw = block_norm(w, &r);
        let degenerate = match blk {
            Block::Scalar(_) => {
                na < tol || nw < tol || block_inner(w, a, &r).norm() < tol * nw * na
            }
            Block::Full(_) => na < tol || nw < tol,
        };
        if degenerate {
            out.push(idx);
        }
    }
    out
}
