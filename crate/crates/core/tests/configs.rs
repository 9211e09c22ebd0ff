use std::path::PathBuf;

use rackdm::config::desk_profile;
use rackdm::RunConfig;

fn shipped(name: &str) -> RunConfig {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../configs")
        .join(name);
    RunConfig::load(&path).unwrap()
}

#[test]
fn desk_file_matches_profile() {
    assert_eq!(shipped("desk.conf"), desk_profile());
}

#[test]
fn full_file_matches_defaults() {
    let expected = RunConfig {
        out_dir: PathBuf::from("results/full"),
        ..RunConfig::default()
    };
    assert_eq!(shipped("full.conf"), expected);
}
