use std::fs;
use std::path::PathBuf;

use ehg_balance::fixture::{self, FIXTURE_N_MINUS, FIXTURE_N_PLUS, FIXTURE_SEED, SIGNAL_CORPUS};
use ehg_balance::ingest::{self, SignalFormat};

fn root() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures")
}

#[test]
fn gaussian_fixture_matches_generator() {
    let on_disk = fs::read_to_string(root().join("gaussian_features.csv")).unwrap();
    let generated = ingest::format_feature_table(&fixture::gaussian_table(FIXTURE_SEED)).unwrap();
    assert_eq!(
        on_disk, generated,
        "regenerate with `cargo run --example make_fixtures`"
    );
    let t = ingest::load_feature_table(&root().join("gaussian_features.csv")).unwrap();
    assert_eq!((t.n_plus(), t.n_minus()), (FIXTURE_N_PLUS, FIXTURE_N_MINUS));
    assert_eq!(t.alpha(), 38.0 / 262.0);
}

#[test]
fn signal_fixtures_match_generator() {
    let tmp = tempfile::tempdir().unwrap();
    for (id, seed, hz, weeks) in SIGNAL_CORPUS {
        let name = format!("{id}.csv");
        let expected = tmp.path().join(&name);
        ingest::write_signal(
            &fixture::synthetic_record(id, seed, hz, weeks, 120.0),
            &expected,
        )
        .unwrap();
        assert_eq!(
            fs::read(root().join("signals").join(&name)).unwrap(),
            fs::read(&expected).unwrap(),
            "{id}"
        );
        let rec = ingest::load_signal(
            &root().join("signals").join(&name),
            &SignalFormat::default(),
        )
        .unwrap();
        assert_eq!(rec.record_id, id);
        assert_eq!(rec.len(), 2400);
    }
}
