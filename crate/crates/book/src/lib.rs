//! Compiles and runs the code listings of the guide in `book/src`.

#[doc = include_str!("../../../book/src/quickstart.md")]
pub mod quickstart {}

#[doc = include_str!("../../../book/src/indices.md")]
pub mod indices {}

#[doc = include_str!("../../../book/src/bitmaps.md")]
pub mod bitmaps {}

#[doc = include_str!("../../../book/src/pipeline.md")]
pub mod pipeline {}

#[doc = include_str!("../../../book/src/workloads.md")]
pub mod workloads {}

#[doc = include_str!("../../../book/src/cli.md")]
pub mod cli {}
