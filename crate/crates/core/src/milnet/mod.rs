//! Attention-pooled multiple-instance network over conformer graphs.

mod check;
mod checkpoint;
mod encoder;
mod model;
mod params;

pub use check::{
    check_bag, check_model, jittered_params, synthetic_bag, synthetic_graph, ModelCheckConfig, CHECK_BAG_SIZES,
};
pub use checkpoint::{
    decode_checkpoint, encode_checkpoint, load_model, save_model, Checkpoint, CHECKPOINT_MAGIC, CHECKPOINT_VERSION,
};
pub use encoder::{encode_backward, encode_conformer, EncoderCache, EncoderGrads};
pub use model::{
    attend, backward_bag, bag_loss, featurize_bag, forward_bag, predict_bag, BagCache, BagOutput,
};
pub use params::{
    init_params, ModelDims, ModelView, ATTN_V, ATTN_W, EDGE_B, EDGE_W, EMBED, GRU, HEAD_B, HEAD_W, PARAM_COUNT,
};
