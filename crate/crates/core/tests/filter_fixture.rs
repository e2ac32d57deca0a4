use std::path::Path;

use podselect_core::corpus::{load_episodes, InputFormat};
use podselect_core::preprocess::{filter_corpus, FilterConfig};

#[test]
fn twelve_episode_fixture_matches_expected_report() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures");
    let episodes: Vec<_> = load_episodes(&dir.join("filter_12.jsonl"), InputFormat::Jsonl)
        .unwrap()
        .collect::<Result<_, _>>()
        .unwrap();
    let (kept, report) = filter_corpus(episodes, &FilterConfig::default()).unwrap();

    let expected: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.join("filter_12.expected.json")).unwrap()).unwrap();
    assert_eq!(serde_json::to_value(&report).unwrap(), expected);

    let ids: Vec<&str> = kept.iter().map(|e| e.id.as_str()).collect();
    assert_eq!(ids, ["f01", "f08", "f09", "f10", "f11", "f12"]);
}
