//! Shared inputs for the benchmarks in `benches/`.

use ddm_rfi::testing::{random_stream, StreamParams};
use ddm_rfi::EpochRecord;

/// A time-sorted stream of `bins` epochs over eight satellites.
pub fn stream(bins: usize) -> Vec<EpochRecord> {
    random_stream(
        7,
        &StreamParams {
            bins,
            sats: 8,
            ..StreamParams::default()
        },
    )
}
