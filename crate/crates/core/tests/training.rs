use pretext_forge::corpus::{parse_tagged, ChartRecord, Level, TagVocabulary};
use pretext_forge::evaluation::SummaryGenerator;
use pretext_forge::models::{ChartModel, ModelConfig};
use pretext_forge::pretext::PermutationCodebook;
use pretext_forge::synth::synth_record;
use pretext_forge::trainer::{finetune, pretrain, OptimizerKind, TrainConfig};

fn desk(steps: usize) -> TrainConfig {
    TrainConfig {
        model: ModelConfig::desk(),
        max_steps: Some(steps),
        batch_size: 4,
        ..TrainConfig::default()
    }
}

#[test]
fn pretraining_is_deterministic_per_seed() {
    let records: Vec<ChartRecord> = (0..4).map(|i| synth_record(i, 2).unwrap()).collect();
    let refs: Vec<&ChartRecord> = records.iter().collect();
    let cb = PermutationCodebook::build(100, 9).unwrap();
    let config = desk(3);
    let a = pretrain::<f32>(&refs, &cb, &config).unwrap();
    let b = pretrain::<f32>(&refs, &cb, &config).unwrap();
    assert_eq!(a.state.history, b.state.history);
    assert_eq!(a.state.step, 3);
    let other = pretrain::<f32>(&refs, &cb, &TrainConfig { seed: 1, ..config }).unwrap();
    assert_ne!(a.state.history, other.state.history);
}

#[test]
fn one_pair_is_memorized() {
    let mut record = synth_record(1, 4).unwrap();
    record.summary = parse_tagged(
        "A <chart_type>bar chart</chart_type>. <trend>It rises.</trend>",
        &TagVocabulary::default(),
    )
    .unwrap();
    let refs = [&record];
    let config = TrainConfig {
        finetune_epochs: 150,
        optimizer: OptimizerKind::Adam,
        learning_rate: 5e-3,
        ..desk(1)
    };
    let base = ChartModel::<f32>::new(config.model.clone(), 0, None).unwrap();
    let out = finetune(&refs, &base, &config).unwrap();
    let losses = &out.state.history;
    assert!(
        losses.last().unwrap() < &0.05,
        "final loss {:?}",
        losses.last()
    );
    assert_eq!(
        out.model.generate(&record, Some(Level::L1)).unwrap(),
        "A bar chart."
    );
    assert_eq!(
        out.model.generate(&record, Some(Level::L2L3)).unwrap(),
        "It rises."
    );
}
