use beamcal::corpus::io::{read_parallel, read_references, reference_paths, write_parallel};
use beamcal::corpus::{generate_synthetic, inject_copy_noise, SyntheticTaskSpec};
use beamcal::experiments::{read_table, run_experiment, stored_hash, write_table, ExperimentConfig, ExperimentKind};
use beamcal::model::{ConditionalSequenceModel, MixtureModel, MixtureParams};
use beamcal::search::{decode_all, BeamConfig};

fn small(kind: ExperimentKind) -> ExperimentConfig {
    let mut c = ExperimentConfig::new(kind, 5);
    c.task.train_size = 500;
    c.task.test_size = 20;
    c.beam_widths = vec![1, 3];
    c
}

#[test]
fn corpus_and_model_survive_the_file_system() {
    let dir = tempfile::tempdir().unwrap();
    let spec = SyntheticTaskSpec::desk_scale(15, 15, (3, 6), 200, 2);
    let corpus = inject_copy_noise(&generate_synthetic(&spec).unwrap(), 0.1, 1)
        .unwrap()
        .corpus;
    let (src, tgt) = write_parallel(&corpus, dir.path()).unwrap();
    let back = read_parallel(&src, &tgt).unwrap();
    assert_eq!(back.len(), corpus.len());
    for i in 0..corpus.len() {
        assert_eq!(back.source_line(i), corpus.source_line(i));
        assert_eq!(back.target_line(i), corpus.target_line(i));
    }

    let model = MixtureModel::train(&back, MixtureParams::default()).unwrap();
    let path = dir.path().join("model.json");
    model.save(&path).unwrap();
    let loaded = MixtureModel::load(&path).unwrap();
    let pair = &back.pairs()[0];
    for k in 0..=pair.target.len() {
        assert_eq!(
            model.next_token_distribution(&pair.source, &pair.target[..k]),
            loaded.next_token_distribution(&pair.source, &pair.target[..k])
        );
    }
    let sources: Vec<Vec<_>> = back
        .pairs()
        .iter()
        .take(10)
        .map(|p| p.source.as_slice().to_vec())
        .collect();
    let a = decode_all(&model, &sources, &BeamConfig::with_width(4)).unwrap();
    let b = decode_all(&loaded, &sources, &BeamConfig::with_width(4)).unwrap();
    assert_eq!(a, b);

    let refs = reference_paths(dir.path(), 1);
    std::fs::copy(&tgt, &refs[0]).unwrap();
    let r = read_references(&refs).unwrap();
    assert_eq!(r.len(), back.len());
}

#[test]
fn experiment_tables_are_reproducible_and_hashed() {
    let dir = tempfile::tempdir().unwrap();
    for kind in ExperimentKind::ALL {
        let config = small(kind);
        let first = run_experiment(&config).unwrap();
        assert_eq!(first, run_experiment(&config).unwrap(), "{kind} not deterministic");
        let path = write_table(dir.path(), &config, &first).unwrap();
        assert_eq!(stored_hash(&path).unwrap().as_deref(), Some(config.hash().as_str()));
        let (hash, table) = read_table(&path).unwrap();
        assert_eq!(hash, Some(config.hash()));
        assert_eq!(table.columns, first.columns);
        assert_eq!(table.rows.len(), first.rows.len());
    }
}

#[test]
fn copy_noise_sweep_degrades_wide_beams() {
    let mut config = ExperimentConfig::new(ExperimentKind::CopyNoiseSweep, 2);
    config.noise_levels = vec![0.0, 0.2];
    config.beam_widths = vec![1, 20];
    let t = run_experiment(&config).unwrap();
    assert_eq!(t.value(0, "delta"), Some(0.0));
    assert!(t.value(1, "bleu_k20").unwrap() < t.value(1, "bleu_k1").unwrap());
}
