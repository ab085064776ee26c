//! Regenerates the files under `crates/core/fixtures/`.

use std::path::Path;

use ehg_balance::fixture::{self, FIXTURE_SEED, SIGNAL_CORPUS};
use ehg_balance::ingest;

fn main() -> ehg_balance::Result<()> {
    let root = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures");
    ingest::write_feature_table(
        &fixture::gaussian_table(FIXTURE_SEED),
        &root.join("gaussian_features.csv"),
    )?;
    for (id, seed, hz, weeks) in SIGNAL_CORPUS {
        let rec = fixture::synthetic_record(id, seed, hz, weeks, 120.0);
        ingest::write_signal(&rec, &root.join("signals").join(format!("{id}.csv")))?;
    }
    Ok(())
}
