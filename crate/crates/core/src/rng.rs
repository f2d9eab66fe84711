//! Seed derivation for reproducible, order-independent replications.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Generator for replication `index` under `master`. Each index gets its own
/// ChaCha stream, so parallel completion order never changes results.
pub fn replication_rng(master: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master);
    rng.set_stream(index);
    rng
}
