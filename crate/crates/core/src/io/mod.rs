//! On-disk encodings of [`CsdfGrid`](crate::CsdfGrid).

pub mod atlas;
pub mod binary;

pub use atlas::{decode_atlas, encode_atlas, Atlas, AtlasMeta};
pub use binary::{read_binary, write_binary, HEADER_LEN};
