use std::path::PathBuf;

use da_harness::config::ExperimentConfig;
use da_harness::synth;

fn repo_file(rel: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../..").join(rel)
}

#[test]
fn bundled_csv_matches_the_generator() {
    let on_disk = std::fs::read(repo_file("data/acs_synthetic.csv")).unwrap();
    assert_eq!(on_disk, synth::synthetic_csv(synth::BUNDLED_ROWS, synth::BUNDLED_SEED).unwrap());
}

#[test]
fn example_config_loads_the_bundled_data() {
    let cfg = ExperimentConfig::load(repo_file("configs/acs_synthetic.toml")).unwrap();
    let from_csv = cfg.data.load().unwrap();
    let generated = synth::bundled_dataset().unwrap();
    assert_eq!(from_csv.schema(), generated.schema());
    assert_eq!(from_csv.rows(), generated.rows());
}
