use memcomm::frontend::Medium;
use memcomm::harness::{run, Experiment, ExperimentConfig};

fn cfg(experiment: Experiment) -> ExperimentConfig {
    let mut c = ExperimentConfig::new(experiment);
    c.programming_error = 0.05;
    c.snr_db = Some(20.0);
    c.trials = 3;
    c.sweep_errors = vec![0.0, 0.1];
    c
}

#[test]
fn runs_are_byte_identical() {
    for e in [Experiment::Demo480, Experiment::Mimo224, Experiment::BerSweep, Experiment::Constellation, Experiment::EnergyReport] {
        let a = run(&cfg(e)).unwrap();
        let b = run(&cfg(e)).unwrap();
        assert_eq!(a, b, "{e}");
    }
}

#[test]
fn seed_changes_noisy_outputs() {
    let a = run(&cfg(Experiment::Demo480)).unwrap();
    let mut c = cfg(Experiment::Demo480);
    c.seed = 2;
    let b = run(&c).unwrap();
    assert_ne!(a.files["constellation_rx.csv"], b.files["constellation_rx.csv"]);
}

#[test]
fn every_medium_runs_clean() {
    for m in Medium::ALL {
        let mut c = ExperimentConfig::new(Experiment::Demo480);
        c.medium = m;
        let out = run(&c).unwrap();
        assert!(out.report.contains("\"bits_wrong\": 0"), "{m}");
    }
}

#[test]
fn invalid_config_is_rejected() {
    let mut c = ExperimentConfig::new(Experiment::Demo480);
    c.trials = 0;
    assert!(run(&c).is_err());
    assert!(ExperimentConfig::from_toml("experiment = \"demo480\"\nbogus = 1\n").is_err());
}

#[test]
fn toml_round_trip() {
    let c = cfg(Experiment::Mimo224);
    let back = ExperimentConfig::from_toml(&c.to_toml().unwrap()).unwrap();
    assert_eq!(run(&c).unwrap(), run(&back).unwrap());
}
