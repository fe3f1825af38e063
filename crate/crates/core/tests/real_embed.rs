use lace::ingest::{pseudo_embeddings, EmbeddingStream, DEFAULT_EMBED_PHASE, DEFAULT_HOLDOUT};
use lace::trainer::{run, Mode, TrainConfig};

fn embed_config(mode: Mode) -> TrainConfig {
    TrainConfig {
        d_base: 32,
        d_max: 128,
        mode,
        ..Default::default()
    }
}

#[test]
fn three_separated_domains_expand_at_both_boundaries() {
    let sets = pseudo_embeddings(3, 200, 768, 0.5, 7);
    let phases = [DEFAULT_EMBED_PHASE; 3];
    let stream = EmbeddingStream::from_domain_sets(&sets, &phases, DEFAULT_HOLDOUT, 7).unwrap();
    let r = run(&embed_config(Mode::Dynamic), &stream).unwrap().report;
    let steps: Vec<usize> = r.events.iter().map(|e| e.step).collect();
    println!("events {steps:?} acc {:.3}", r.final_accuracy);
    assert_eq!(steps.len(), 2);
    assert!(steps[0] >= 300 && steps[0] < 600 && steps[1] >= 600);
    assert_eq!(r.boundary_precision, 1.0);
    assert!(!r.precision_vacuous);
    assert_eq!(r.d_final, 34);
    assert!(r.final_accuracy > 0.95);
}

#[test]
fn single_domain_never_expands() {
    let sets = pseudo_embeddings(1, 200, 768, 0.5, 8);
    let stream = EmbeddingStream::from_domain_sets(&sets, &[DEFAULT_EMBED_PHASE], DEFAULT_HOLDOUT, 8).unwrap();
    let r = run(&embed_config(Mode::Dynamic), &stream).unwrap().report;
    assert!(r.events.is_empty());
    assert!(r.precision_vacuous);
    assert_eq!(r.d_final, 32);
}
