//! Additive visibility masks over a fused input.

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::encoder::input::{FusedInput, Segment};

/// Stand-in for negative infinity; `exp(-1e9)` underflows to exactly zero.
pub const MASK_LARGE: f64 = 1e9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum MaskMode {
    /// Query sees everything, each snippet sees only itself.
    Equation,
    /// Like `Equation`, but only the linked query position sees its snippet.
    ProseStrict,
    /// No restriction.
    Full,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VisibilityMask {
    matrix: Array2<f64>,
}

impl VisibilityMask {
    pub fn zeros(len: usize) -> Self {
        Self {
            matrix: Array2::zeros((len, len)),
        }
    }

    pub fn len(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.matrix.nrows() == 0
    }

    pub fn matrix(&self) -> &Array2<f64> {
        &self.matrix
    }

    /// Whether position `row` may attend to position `col`.
    pub fn allows(&self, row: usize, col: usize) -> bool {
        self.matrix[[row, col]] == 0.0
    }
}

pub fn build_visibility_mask(input: &FusedInput, mode: MaskMode) -> VisibilityMask {
    let n = input.len();
    let mut mask = VisibilityMask::zeros(n);
    if mode == MaskMode::Full {
        return mask;
    }
    let seg = input.segments();
    let links = input.link_starts();
    for j in 0..n {
        for k in 0..n {
            let visible = match (seg[j], seg[k]) {
                (Segment::Query, Segment::Query) => true,
                (Segment::Knowledge(a), Segment::Knowledge(b)) => a == b,
                (Segment::Query, Segment::Knowledge(_)) => match mode {
                    MaskMode::Equation => true,
                    _ => links.contains(&(j, seg[k])),
                },
                (Segment::Knowledge(_), Segment::Query) => false,
            };
            if !visible {
                mask.matrix[[j, k]] = -MASK_LARGE;
            }
        }
    }
    mask
}
