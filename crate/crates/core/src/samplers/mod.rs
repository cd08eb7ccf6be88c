//! Increment samplers for the model catalog.
//!
//! Every sampler draws from a caller-owned [`RngStream`](crate::rng::RngStream),
//! so a Monte Carlo path is a pure function of `(seed, stream_id)`.

mod batch;
mod decomposition;
mod subordinator;

pub use batch::{increments, read_batch, write_batch, BatchHeader, IncrementBatch, IncrementSampler};
pub use decomposition::{sample_jump_decomposition, EpsilonRule, JumpDecomposition, TruncationInfo};
pub use subordinator::{
    sample_lamperti_subordinator, sample_stable, sample_stable_subordinator, sample_subordinated_bm,
    sample_subordinator, sample_tempered_subordinator, sample_tempered_subordinator_counted, TiltStats,
};

#[cfg(test)]
mod tests;
