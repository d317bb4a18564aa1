use gmatch_core::graphs::synthesize_pair;
use gmatch_core::nn::{train, AdamConfig, MlpHidden, PredictorConfig, TrainConfig};

#[test]
fn loss_decreases_over_twenty_epochs_for_most_seeds() {
    let pairs: Vec<_> = (0..16).map(|s| synthesize_pair(4, 0.02, 0.3, s).unwrap()).collect();
    let predictor = PredictorConfig {
        d_v: 8,
        d_e: 8,
        layers: 2,
        mlp_hidden: MlpHidden::uniform(&[8]),
        ..Default::default()
    };
    let mut decreased = 0;
    for seed in 0..10 {
        let cfg = TrainConfig {
            epochs: 20,
            batch_size: 4,
            optimizer: AdamConfig {
                learning_rate: 5e-3,
                ..Default::default()
            },
            seed,
            ..Default::default()
        };
        let (_, _, curve) = train(&pairs, &predictor, &cfg, |_| {}).unwrap();
        let (first, last) = (curve[0].mean_loss, curve[19].mean_loss);
        if last < first {
            decreased += 1;
        }
    }
    assert!(decreased >= 9, "loss decreased for {decreased} of 10 seeds");
}
