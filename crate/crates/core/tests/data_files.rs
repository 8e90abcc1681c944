use std::path::PathBuf;

use probing::acceptance::fixtures::{tightness_fixture, TIGHTNESS_GADGETS};
use probing::eval::appendix_fixtures;
use probing::format::{emit_auction, emit_instance, parse_auction, parse_instance};

fn data(rel: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../data")
        .join(rel)
}

fn read(rel: &str) -> String {
    std::fs::read_to_string(data(rel)).unwrap_or_else(|e| panic!("{rel}: {e}"))
}

#[test]
fn appendix_files_match_generated_fixtures() {
    for f in appendix_fixtures(10).unwrap() {
        let text = read(&format!("appendix/{}.json", f.name));
        assert_eq!(
            parse_instance(&text, true).unwrap().value,
            f.instance,
            "{}",
            f.name
        );
    }
}

#[test]
fn tightness_file_matches_generator() {
    let parsed = parse_instance(&read("instances/tightness.json"), true)
        .unwrap()
        .value;
    assert_eq!(parsed, tightness_fixture(TIGHTNESS_GADGETS).unwrap());
}

#[test]
fn every_data_file_round_trips_byte_for_byte() {
    for dir in ["appendix", "instances", "auctions"] {
        for entry in std::fs::read_dir(data(dir)).unwrap() {
            let path = entry.unwrap().path();
            let text = std::fs::read_to_string(&path).unwrap();
            let again = if dir == "auctions" {
                emit_auction(&parse_auction(&text, true).unwrap().value)
            } else {
                emit_instance(&parse_instance(&text, true).unwrap().value)
            };
            assert_eq!(again, text, "{}", path.display());
        }
    }
}
