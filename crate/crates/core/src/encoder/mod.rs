//! Knowledge-fused input assembly, visibility masks and a small transformer
//! encoder with hand-written reverse mode.

mod attention;
mod checkpoint;
mod input;
mod mask;
mod model;
mod params;
mod vocab;

pub use attention::{attention, softmax_rows};
pub use checkpoint::{read_tensors, write_tensors, NamedTensor};
pub use input::{build_input, FusedInput, Segment};
pub use mask::{build_visibility_mask, MaskMode, VisibilityMask, MASK_LARGE};
pub use model::{encode, encode_unmasked, mlm_distribution, ForwardCache};
pub(crate) use model::{backward, forward};
pub use params::{EncoderConfig, EncoderParams, LayerParams};
pub use vocab::{Vocab, CLS, CLS_ID, MASK, MASK_ID, PAD, PAD_ID, SEP, SEP_ID, UNK, UNK_ID};
