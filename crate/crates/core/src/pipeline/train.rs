use rand::seq::SliceRandom;
use rand::Rng;

use super::{PipelineError, TrainingTriplet};
use crate::net::{data_loss, AdamConfig, AdamState, Gradients, LossBreakdown, NetworkParams};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TrainConfig {
    pub batch_size: usize,
    /// Passes over the buffer per training call.
    pub epochs: usize,
    pub adam: AdamConfig,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            batch_size: 32,
            epochs: 1,
            adam: AdamConfig::default(),
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct EpochStats {
    /// Per-example losses averaged over the epoch, each measured before its batch's update.
    pub mean: LossBreakdown,
    /// Mean loss of the final batch.
    pub last: LossBreakdown,
    pub batches: usize,
    pub examples: usize,
}

/// One shuffled pass over `buffer`: batch-mean gradients of the objective,
/// one Adam step per batch. On a non-finite loss or gradient the parameters
/// and optimiser state are restored to their values at the start of the epoch.
pub fn train_epoch<R: Rng + ?Sized>(
    buffer: &[TrainingTriplet],
    params: &mut NetworkParams,
    adam: &mut AdamState,
    batch_size: usize,
    rng: &mut R,
) -> Result<EpochStats, PipelineError> {
    if buffer.is_empty() {
        return Err(PipelineError::EmptyBuffer);
    }
    let batch_size = batch_size.max(1);
    let lambda = adam.config.l2;
    let saved = (params.clone(), adam.clone());
    let mut order: Vec<usize> = (0..buffer.len()).collect();
    order.shuffle(rng);

    let mut grads = Gradients::zeros_like(params);
    let mut sum = LossBreakdown::default();
    let mut stats = EpochStats::default();
    let result = (|| {
        for (b, batch) in order.chunks(batch_size).enumerate() {
            grads.clear();
            let scale = 1.0 / batch.len() as f64;
            let (mut mse, mut ce) = (0.0, 0.0);
            for &i in batch {
                let t = &buffer[i];
                let trace = params.forward_trace(&t.features, &t.mask)?;
                let (m, c) = data_loss(&trace, &t.policy, t.z)?;
                mse += m;
                ce += c;
                params.accumulate_gradients(&trace, &t.policy, t.z, scale, &mut grads)?;
            }
            let l2 = params.weight_norm_sq();
            let batch_loss = LossBreakdown::new(mse * scale, ce * scale, l2, lambda);
            if !batch_loss.total.is_finite() {
                return Err(PipelineError::NonFiniteLoss { batch: b });
            }
            grads.add_l2(params, lambda);
            adam.step(params, &grads)?;
            let n = batch.len() as f64;
            sum.mse += mse;
            sum.ce += ce;
            sum.l2 += l2 * n;
            stats.last = batch_loss;
            stats.batches += 1;
            stats.examples += batch.len();
        }
        Ok(())
    })();
    if let Err(e) = result {
        (*params, *adam) = saved;
        return Err(e);
    }
    let n = stats.examples as f64;
    stats.mean = LossBreakdown::new(sum.mse / n, sum.ce / n, sum.l2 / n, lambda);
    Ok(stats)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chess::Board;
    use crate::features::{extract_features, LegalMask};
    use crate::net::Architecture;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn triplet() -> TrainingTriplet {
        let b = Board::startpos();
        let mask = LegalMask::for_board(&b);
        let mut policy: Vec<_> = mask.iter().map(|i| (i, 0.0)).collect();
        policy[3].1 = 0.7;
        policy[11].1 = 0.3;
        TrainingTriplet {
            features: Box::new(extract_features(&b)),
            mask,
            policy,
            z: 0.5,
        }
    }

    #[test]
    fn overfitting_one_example_halves_the_loss() {
        let buffer = vec![triplet(); 200];
        let t = &buffer[0];
        let mut p = NetworkParams::init(Architecture::PolicyValParts, 3);
        let cfg = AdamConfig::default();
        let start = p.loss(&p.forward_trace(&t.features, &t.mask).unwrap(), &t.policy, t.z, cfg.l2).unwrap();
        let mut adam = AdamState::new(&p, cfg);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let stats = train_epoch(&buffer, &mut p, &mut adam, 1, &mut rng).unwrap();
        assert_eq!(stats.batches, 200);
        let end = p.loss(&p.forward_trace(&t.features, &t.mask).unwrap(), &t.policy, t.z, cfg.l2).unwrap();
        assert!(end.total <= 0.5 * start.total, "{} -> {}", start.total, end.total);
    }

    #[test]
    fn empty_buffer_is_an_error() {
        let mut p = NetworkParams::zeros(Architecture::PolicyValFull);
        let mut adam = AdamState::new(&p, AdamConfig::default());
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(matches!(
            train_epoch(&[], &mut p, &mut adam, 4, &mut rng),
            Err(PipelineError::EmptyBuffer)
        ));
    }

    #[test]
    fn non_finite_loss_rolls_back() {
        let mut bad = triplet();
        bad.z = f64::NAN;
        let buffer = vec![triplet(), bad];
        let mut p = NetworkParams::init(Architecture::PolicyValFull, 1);
        let before = p.clone();
        let mut adam = AdamState::new(&p, AdamConfig::default());
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let err = train_epoch(&buffer, &mut p, &mut adam, 1, &mut rng).unwrap_err();
        assert!(matches!(err, PipelineError::NonFiniteLoss { .. } | PipelineError::Net(_)), "{err}");
        assert!(p == before);
        assert_eq!(adam.step, 0);
    }

    #[test]
    fn same_seed_same_parameters() {
        let buffer = vec![triplet(), triplet(), triplet()];
        let run = || {
            let mut p = NetworkParams::init(Architecture::SeparateParts, 2);
            let mut adam = AdamState::new(&p, AdamConfig::default());
            let mut rng = ChaCha8Rng::seed_from_u64(9);
            train_epoch(&buffer, &mut p, &mut adam, 2, &mut rng).unwrap();
            p
        };
        assert!(run() == run());
    }
}
