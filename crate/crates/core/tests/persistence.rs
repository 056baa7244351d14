use deepokan::config::{ortho_preset, poisson_preset, wave2_preset, Complexity, ModelFamily};
use deepokan::experiment::{evaluate, generate_dataset, train_model};
use deepokan::persist::{load_checkpoint, load_dataset, save_checkpoint, save_dataset};
use deepokan::ExperimentConfig;

fn small_configs() -> Vec<ExperimentConfig> {
    let mut out = Vec::new();
    for family in [ModelFamily::RbfKan, ModelFamily::Mlp] {
        let mut cfg = wave2_preset(family, 1e-2);
        cfg.data.samples = 64;
        out.push(cfg);
    }
    for family in [ModelFamily::Deepokan, ModelFamily::Deeponet] {
        let mut cfg = ortho_preset(family, Complexity::Low);
        cfg.data.samples = 20;
        cfg.data.mesh = 4;
        cfg.architecture.learnable_centers = family == ModelFamily::Deepokan;
        out.push(cfg);
        let mut cfg = poisson_preset(family, Complexity::Low);
        cfg.data.samples = 10;
        cfg.data.mesh = 3;
        cfg.architecture.bias = true;
        out.push(cfg);
    }
    for cfg in &mut out {
        cfg.training.epochs = 3;
        cfg.training.batch_size = 8;
    }
    out
}

#[test]
fn checkpoint_round_trip_reproduces_predictions_exactly() {
    let dir = tempfile::tempdir().unwrap();
    for (k, cfg) in small_configs().into_iter().enumerate() {
        let ds = generate_dataset(&cfg).unwrap();
        let (ck, _) = train_model(&cfg, &ds).unwrap();
        let path = dir.path().join(format!("ck{k}.dokn"));
        save_checkpoint(&ck, &path).unwrap();
        let back = load_checkpoint(&path).unwrap();
        assert_eq!(back, ck, "{:?}", cfg.family());
        let a = evaluate(&cfg, &ds, &ck).unwrap();
        let b = evaluate(&cfg, &ds, &back).unwrap();
        let bits = |v: &[f64]| v.iter().map(|x| x.to_bits()).collect::<Vec<_>>();
        assert_eq!(bits(&a.errors), bits(&b.errors));
    }
}

#[test]
fn dataset_round_trip_keeps_split_and_scaling() {
    let dir = tempfile::tempdir().unwrap();
    for cfg in small_configs().into_iter().skip(2) {
        let ds = generate_dataset(&cfg).unwrap();
        let path = dir.path().join("ds.dokn");
        save_dataset(&ds, &path).unwrap();
        let back = load_dataset(&path).unwrap();
        assert_eq!(back.train_indices(), ds.train_indices());
        assert_eq!(back.branch_norm, ds.branch_norm);
        assert_eq!(back.coord_norm, ds.coord_norm);
        assert_eq!(back.targets, ds.targets);
    }
}
