//! Classic single-agent UCT over an explicit tree with stochastic leaves.

use rand::Rng;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Reward {
    /// 1 with probability `p`, else 0.
    Bernoulli(f64),
    Fixed(f64),
}

impl Reward {
    fn sample<R: Rng + ?Sized>(self, rng: &mut R) -> f64 {
        match self {
            Reward::Bernoulli(p) => f64::from(u8::from(rng.gen_bool(p))),
            Reward::Fixed(r) => r,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum ToyTree {
    Leaf(Reward),
    Node(Vec<ToyTree>),
}

impl ToyTree {
    /// Depth-one tree with one arm per reward.
    pub fn bandit(arms: impl IntoIterator<Item = Reward>) -> ToyTree {
        ToyTree::Node(arms.into_iter().map(ToyTree::Leaf).collect())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct UctResult {
    /// Child indices from the root to the leaf with the best mean at each level.
    pub best_path: Vec<usize>,
    pub best_mean: f64,
    /// Visits of each root child.
    pub root_visits: Vec<u32>,
}

#[derive(Default)]
struct Stats {
    n: u32,
    sum: f64,
    children: Vec<Stats>,
}

impl Stats {
    fn mirror(tree: &ToyTree) -> Stats {
        let children = match tree {
            ToyTree::Leaf(_) => Vec::new(),
            ToyTree::Node(c) => c.iter().map(Stats::mirror).collect(),
        };
        Stats { children, ..Stats::default() }
    }

    fn mean(&self) -> f64 {
        self.sum / self.n as f64
    }

    /// Unvisited children first (lowest index), then `mean + c * sqrt(ln N / n)`.
    fn pick(&self, c: f64) -> usize {
        if let Some(i) = self.children.iter().position(|s| s.n == 0) {
            return i;
        }
        let ln_n = (self.n as f64).ln();
        let mut best = 0;
        let mut best_score = f64::NEG_INFINITY;
        for (i, s) in self.children.iter().enumerate() {
            let score = s.mean() + c * (ln_n / s.n as f64).sqrt();
            if score > best_score {
                best = i;
                best_score = score;
            }
        }
        best
    }
}

fn iterate<R: Rng + ?Sized>(tree: &ToyTree, stats: &mut Stats, c: f64, rng: &mut R) -> f64 {
    let r = match tree {
        ToyTree::Leaf(reward) => reward.sample(rng),
        ToyTree::Node(children) if children.is_empty() => 0.0,
        ToyTree::Node(children) => {
            let i = stats.pick(c);
            iterate(&children[i], &mut stats.children[i], c, rng)
        }
    };
    stats.n += 1;
    stats.sum += r;
    r
}

pub fn uct_reference<R: Rng + ?Sized>(tree: &ToyTree, iterations: u32, c: f64, rng: &mut R) -> UctResult {
    let mut root = Stats::mirror(tree);
    for _ in 0..iterations {
        iterate(tree, &mut root, c, rng);
    }
    let root_visits = root.children.iter().map(|s| s.n).collect();
    let mut best_path = Vec::new();
    let mut node = &root;
    let mut best_mean = if root.n > 0 { root.mean() } else { 0.0 };
    loop {
        let best = node
            .children
            .iter()
            .enumerate()
            .filter(|(_, s)| s.n > 0)
            .max_by(|a, b| a.1.mean().total_cmp(&b.1.mean()).then(b.0.cmp(&a.0)));
        match best {
            Some((i, s)) => {
                best_path.push(i);
                best_mean = s.mean();
                node = s;
            }
            None => break,
        }
    }
    UctResult {
        best_path,
        best_mean,
        root_visits,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn greedy_with_fixed_rewards_finds_the_max() {
        let tree = ToyTree::bandit([0.2, 0.9, 0.5, 0.1].map(Reward::Fixed));
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let r = uct_reference(&tree, 50, 0.0, &mut rng);
        assert_eq!(r.best_path, vec![1]);
        assert!((r.best_mean - 0.9).abs() < 1e-12);
        // One sweep, then every visit goes to the best arm.
        assert_eq!(r.root_visits, vec![1, 47, 1, 1]);
    }

    #[test]
    fn two_level_tree() {
        let tree = ToyTree::Node(vec![
            ToyTree::bandit([0.1, 0.2].map(Reward::Bernoulli)),
            ToyTree::bandit([0.3, 0.9].map(Reward::Bernoulli)),
        ]);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let r = uct_reference(&tree, 5_000, 1.4, &mut rng);
        assert_eq!(r.best_path, vec![1, 1]);
    }

    #[test]
    fn best_ties_go_to_lower_index() {
        let tree = ToyTree::bandit([Reward::Fixed(1.0), Reward::Fixed(1.0)]);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert_eq!(uct_reference(&tree, 10, 1.0, &mut rng).best_path, vec![0]);
    }
}
