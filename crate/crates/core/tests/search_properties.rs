use pepper_core::chess::Board;
use pepper_core::features::{LegalMask, MoveIndex};
use pepper_core::search::*;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[test]
fn uct_finds_the_best_bandit_arm() {
    let mut arms: Vec<Reward> = (1..=9).map(|i| Reward::Bernoulli(i as f64 / 10.0)).collect();
    arms.push(Reward::Bernoulli(0.95));
    let tree = ToyTree::bandit(arms);
    let hits = (0..30u64)
        .filter(|&s| {
            let mut rng = ChaCha8Rng::seed_from_u64(s);
            uct_reference(&tree, 10_000, 1.4, &mut rng).best_path == [9]
        })
        .count();
    assert!(hits >= 28, "{hits}/30");
}

#[test]
fn identical_arms_share_visits() {
    let tree = ToyTree::bandit(vec![Reward::Bernoulli(0.5); 10]);
    let runs = 40;
    let mut mean_share = [0.0; 10];
    let mut tight = 0;
    for s in 0..runs {
        let mut rng = ChaCha8Rng::seed_from_u64(s);
        let r = uct_reference(&tree, 10_000, 1.4, &mut rng);
        let shares: Vec<f64> = r.root_visits.iter().map(|&v| v as f64 / 10_000.0).collect();
        if shares.iter().all(|x| (x - 0.1).abs() <= 0.05) {
            tight += 1;
        }
        for (m, x) in mean_share.iter_mut().zip(&shares) {
            *m += x / runs as f64;
        }
    }
    assert!(mean_share.iter().all(|m| (m - 0.1).abs() <= 0.02), "{mean_share:?}");
    // Single runs drift: the slowest arm occasionally sits just outside the band.
    assert!(tight * 10 >= runs * 7, "{tight}/{runs}");
}

fn random_position(rng: &mut ChaCha8Rng, plies: usize) -> Board {
    loop {
        let mut b = Board::startpos();
        for _ in 0..plies {
            let moves = b.legal_moves();
            match moves.choose(rng) {
                Some(&m) => b = b.apply_move(m).unwrap(),
                None => break,
            }
        }
        if b.outcome().is_ongoing() {
            return b;
        }
    }
}

#[test]
fn root_conservation_on_random_positions() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let cfg = SearchConfig {
        simulations: 300,
        ..SearchConfig::default()
    };
    for _ in 0..10 {
        let b = random_position(&mut rng, 30);
        let (r, tree) = run_mcts(&b, &UniformEvaluator, &cfg, None, &mut rng).unwrap();
        assert_eq!(tree.visits(), tree.edge_visit_sum() + 1);
        assert_eq!(tree.edge_visit_sum(), 299);
        let total: f64 = r.policy.iter().map(|x| x.1).sum();
        assert!((total - 1.0).abs() < 1e-9);
        let mask = LegalMask::for_board(&b);
        assert!(r.policy.iter().all(|x| mask.contains(x.0)));
        assert_eq!(r.policy.len(), mask.count());
    }
}

#[test]
fn lower_temperature_never_lowers_the_top_move() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let counts: Vec<_> = (0..20)
        .map(|i| (MoveIndex::new(i * 7).unwrap(), rand::Rng::gen_range(&mut rng, 1..50u32)))
        .collect();
    let top = counts.iter().enumerate().max_by_key(|(i, c)| (c.1, std::cmp::Reverse(*i))).unwrap().0;
    let mut last = 0.0;
    for tau in [4.0, 2.0, 1.0, 0.5, 0.25, 0.1, 0.01] {
        let p = visit_policy(&counts, Temperature::Value(tau)).unwrap();
        assert!(p[top].1 >= last - 1e-15);
        last = p[top].1;
    }
    assert_eq!(visit_policy(&counts, Temperature::Argmax).unwrap()[top].1, 1.0);
}
