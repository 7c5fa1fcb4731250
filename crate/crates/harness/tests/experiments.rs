use da_core::accounting::{delta_report, AccountingParams};
use da_core::mechanisms::{cell_suppression, MechanismKind};
use da_harness::classifier::train_weighted;
use da_harness::config::{DataSource, ExperimentConfig};
use da_harness::experiments::{
    run_accounting, run_classification, run_data_release, run_sweep, summarize, write_classify_csv,
    write_release_csv, SweepAxis, Workload,
};
use da_harness::synth;

fn small_config(mechanisms: &[&str]) -> ExperimentConfig {
    ExperimentConfig {
        data: DataSource::Synthetic { rows: 800, seed: 5 },
        epsilons: vec![1.0, 2.0],
        repetitions: 4,
        mechanisms: mechanisms.iter().map(|m| m.to_string()).collect(),
        ..ExperimentConfig::default()
    }
}

fn workload(cfg: &ExperimentConfig) -> Workload {
    Workload::load(cfg).unwrap()
}

#[test]
fn identity_release_has_no_bias() {
    let mut cfg = small_config(&["identity"]);
    cfg.repetitions = 1;
    let w = workload(&cfg);
    let r = run_data_release(&cfg, &w).unwrap();
    assert_eq!(r.rows.len(), 1);
    assert_eq!((r.rows[0].bias_l1, r.rows[0].alpha), (0.0, 0.0));
}

#[test]
fn delta_column_comes_from_accounting() {
    let cfg = small_config(&["laplace", "dp_cell_suppression", "dp_swapping", "dp_k_anonymity", "swapping"]);
    let w = workload(&cfg);
    let params = AccountingParams {
        b: w.hist.bound(),
        k: cfg.k,
        n_q: 9,
        beta: None,
    };
    for row in run_data_release(&cfg, &w).unwrap().rows {
        let want = delta_report(row.mechanism, row.epsilon.unwrap_or(1.0), &params).unwrap().delta;
        assert_eq!(row.delta, want, "{}", row.mechanism);
        if row.mechanism == MechanismKind::Laplace {
            assert_eq!(row.delta, Some(0.0));
        }
    }
    let acc = run_accounting(&cfg, &w).unwrap();
    assert_eq!(acc.len(), 4 * 2 + 1);
    assert!(acc.iter().all(|r| r.delta.is_some()));
}

#[test]
fn reports_are_reproducible() {
    let cfg = small_config(&["laplace", "discrete_gaussian", "dp_cell_suppression", "swapping", "dp_k_anonymity"]);
    let render = || {
        let w = workload(&cfg);
        let mut a = Vec::new();
        write_release_csv(&run_data_release(&cfg, &w).unwrap(), &mut a).unwrap();
        let mut b = Vec::new();
        write_classify_csv(&run_classification(&cfg, &w).unwrap(), &mut b).unwrap();
        (a, b)
    };
    assert_eq!(render(), render());
}

#[test]
fn results_do_not_depend_on_thread_count() {
    let cfg = small_config(&["dp_swapping"]);
    let w = workload(&cfg);
    let mc = cfg.mechanism_config(1.0);
    let run = |threads| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| summarize(MechanismKind::DpSwapping, &mc, &w, 16, 3).unwrap())
    };
    assert_eq!(run(1), run(3));
}

#[test]
fn sweep_edge_values() {
    let mut cfg = small_config(&[]);
    cfg.ks = vec![1];
    cfg.swap_fractions = vec![1.0];
    let w = workload(&cfg);
    let cs = run_sweep(&cfg, &w, SweepAxis::CsThreshold).unwrap();
    assert_eq!(cs.len(), 1 + cfg.epsilons.len());
    assert_eq!(cs[0].mechanism, MechanismKind::CellSuppression);
    assert_eq!(cs[0].mean_l1_error, 0.0);
    let sw = run_sweep(&cfg, &w, SweepAxis::SwapFraction).unwrap();
    assert_eq!(sw[0].mechanism, MechanismKind::Swapping);
    assert_eq!(sw[0].mean_l1_error, 0.0);
    let ka = run_sweep(&cfg, &w, SweepAxis::KanonK).unwrap();
    assert!(ka.iter().skip(1).all(|r| r.mechanism == MechanismKind::DpKAnonymity));
}

#[test]
fn classification_scores_on_the_original_data() {
    let cfg = small_config(&["identity", "cell_suppression"]);
    let w = workload(&cfg);
    let rows = run_classification(&cfg, &w).unwrap();
    let baseline = train_weighted(w.hist.schema(), &w.hist.as_f64(), &cfg.label, &cfg.features, &cfg.classifier)
        .unwrap()
        .accuracy(&w.hist);
    assert_eq!(rows[0].mechanism, "baseline");
    assert_eq!(rows[0].mean_accuracy, baseline);
    assert_eq!(rows[1].mechanism, "identity");
    assert_eq!(rows[1].mean_accuracy, baseline);

    // A model trained on the suppressed counts, scored against the true records.
    let released = cell_suppression(&w.hist, cfg.k);
    let model = train_weighted(w.hist.schema(), &released.as_f64(), &cfg.label, &cfg.features, &cfg.classifier).unwrap();
    assert_eq!(rows[2].mean_accuracy, model.accuracy(&w.hist));
}

#[test]
fn unknown_mechanism_is_rejected() {
    let cfg = small_config(&["laplace", "rounding"]);
    let w = Workload::new(synth::synthetic_dataset(50, 1).unwrap());
    assert_eq!(run_data_release(&cfg, &w).unwrap_err().exit_code(), 2);
}
