use rand::Rng;
use rand_distr::{Distribution, Gamma};

use super::{SearchConfig, SearchError, Temperature};
use crate::chess::{Board, Move};
use crate::features::{encode_move, extract_features, LegalMask, MoveIndex};
use crate::net::{NetError, NetworkOutput, NetworkParams};

/// Supplies priors over the legal moves (ascending [`MoveIndex`]) and a
/// value from the side to move's perspective.
pub trait Evaluator {
    fn evaluate(&self, board: &Board) -> Result<NetworkOutput, NetError>;
}

impl Evaluator for NetworkParams {
    fn evaluate(&self, board: &Board) -> Result<NetworkOutput, NetError> {
        self.forward(&extract_features(board), &LegalMask::for_board(board))
    }
}

/// Uniform priors and a zero value; equivalent to an all-zero network.
#[derive(Clone, Copy, Debug, Default)]
pub struct UniformEvaluator;

impl Evaluator for UniformEvaluator {
    fn evaluate(&self, board: &Board) -> Result<NetworkOutput, NetError> {
        let mask = LegalMask::for_board(board);
        let p = 1.0 / mask.count() as f64;
        Ok(NetworkOutput {
            policy: mask.iter().map(|i| (i, p)).collect(),
            value: 0.0,
        })
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct EdgeStats {
    pub n: u32,
    pub w: f64,
    /// Prior in use for selection (noised at the root).
    pub p: f64,
}

impl EdgeStats {
    pub fn q(&self) -> f64 {
        if self.n == 0 {
            0.0
        } else {
            self.w / self.n as f64
        }
    }
}

#[derive(Clone, Debug)]
pub struct Edge {
    pub index: MoveIndex,
    pub mv: Move,
    pub stats: EdgeStats,
    /// Network prior before any root noise.
    pub raw_prior: f64,
    child: Option<Box<SearchNode>>,
}

impl Edge {
    pub fn child(&self) -> Option<&SearchNode> {
        self.child.as_deref()
    }
}

#[derive(Clone, Debug)]
pub struct SearchNode {
    board: Board,
    /// Side-to-move value of a finished position.
    terminal: Option<f64>,
    expanded: bool,
    visits: u32,
    net_value: f64,
    edges: Vec<Edge>,
}

impl SearchNode {
    pub fn new(board: Board) -> SearchNode {
        let outcome = board.outcome();
        let terminal = (!outcome.is_ongoing()).then(|| match outcome.winner() {
            Some(c) if c == board.side_to_move() => 1.0,
            Some(_) => -1.0,
            None => 0.0,
        });
        SearchNode {
            board,
            terminal,
            expanded: false,
            visits: 0,
            net_value: 0.0,
            edges: Vec::new(),
        }
    }

    pub fn board(&self) -> &Board {
        &self.board
    }

    pub fn terminal_value(&self) -> Option<f64> {
        self.terminal
    }

    pub fn is_expanded(&self) -> bool {
        self.expanded
    }

    /// Visits to this node, including the one that expanded it.
    pub fn visits(&self) -> u32 {
        self.visits
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn edge_visit_sum(&self) -> u32 {
        self.edges.iter().map(|e| e.stats.n).sum()
    }

    pub fn visit_counts(&self) -> Vec<(MoveIndex, u32)> {
        self.edges.iter().map(|e| (e.index, e.stats.n)).collect()
    }

    /// Mean backed-up value over the root edges, falling back to the network value.
    pub fn value_estimate(&self) -> f64 {
        let n = self.edge_visit_sum();
        if n == 0 {
            self.terminal.unwrap_or(self.net_value)
        } else {
            self.edges.iter().map(|e| e.stats.w).sum::<f64>() / n as f64
        }
    }

    fn expand<E: Evaluator + ?Sized>(&mut self, eval: &E) -> Result<f64, SearchError> {
        let out = eval.evaluate(&self.board)?;
        let moves = self.board.legal_moves();
        debug_assert_eq!(moves.len(), out.policy.len());
        self.edges = moves
            .into_iter()
            .zip(out.policy)
            .map(|(mv, (index, p))| {
                debug_assert_eq!(encode_move(&mv).ok(), Some(index));
                Edge {
                    index,
                    mv,
                    stats: EdgeStats { n: 0, w: 0.0, p },
                    raw_prior: p,
                    child: None,
                }
            })
            .collect();
        self.net_value = out.value;
        self.expanded = true;
        self.visits += 1;
        Ok(out.value)
    }

    /// One select/expand/backup pass; returns the value for this node's mover.
    fn simulate<E: Evaluator + ?Sized>(&mut self, eval: &E, c: f64) -> Result<f64, SearchError> {
        if let Some(t) = self.terminal {
            self.visits += 1;
            return Ok(t);
        }
        if !self.expanded {
            return self.expand(eval);
        }
        let i = self.select_edge(c)?;
        let edge = &mut self.edges[i];
        let child = match &mut edge.child {
            Some(child) => child,
            slot @ None => slot.insert(Box::new(SearchNode::new(self.board.apply_move_unchecked(edge.mv)))),
        };
        let v = -child.simulate(eval, c)?;
        edge.stats.n += 1;
        edge.stats.w += v;
        self.visits += 1;
        Ok(v)
    }

    fn select_edge(&self, c: f64) -> Result<usize, SearchError> {
        if self.terminal.is_some() || self.edges.is_empty() {
            return Err(SearchError::NoEdges);
        }
        let sum = self.edge_visit_sum();
        let mut best = 0;
        let mut best_key = (f64::NEG_INFINITY, f64::NEG_INFINITY);
        for (i, e) in self.edges.iter().enumerate() {
            let key = (puct_score(&e.stats, sum, c), e.stats.p);
            // Edges are in ascending index order, so only a strict improvement moves the choice.
            if key.0 > best_key.0 || (key.0 == best_key.0 && key.1 > best_key.1) {
                best = i;
                best_key = key;
            }
        }
        Ok(best)
    }

    fn apply_root_noise<R: Rng + ?Sized>(&mut self, alpha: f64, epsilon: f64, rng: &mut R) {
        for e in &mut self.edges {
            e.stats.p = e.raw_prior;
        }
        if epsilon <= 0.0 || self.edges.is_empty() {
            return;
        }
        let gamma = Gamma::new(alpha, 1.0).expect("dirichlet alpha must be positive");
        let mut eta: Vec<f64> = self.edges.iter().map(|_| gamma.sample(rng)).collect();
        let total: f64 = eta.iter().sum();
        if total > 0.0 && total.is_finite() {
            eta.iter_mut().for_each(|x| *x /= total);
        } else {
            let k = eta.len() as f64;
            eta.iter_mut().for_each(|x| *x = 1.0 / k);
        }
        for (e, n) in self.edges.iter_mut().zip(eta) {
            e.stats.p = (1.0 - epsilon) * e.raw_prior + epsilon * n;
        }
    }

    #[cfg(test)]
    pub(crate) fn edges_mut(&mut self) -> &mut Vec<Edge> {
        &mut self.edges
    }
}

/// `Q + c * P * sqrt(parent_visit_sum) / (1 + N)`, with `Q = 0` for unvisited edges.
pub fn puct_score(e: &EdgeStats, parent_visit_sum: u32, c: f64) -> f64 {
    e.q() + c * e.p * (parent_visit_sum as f64).sqrt() / (1.0 + e.n as f64)
}

/// PUCT argmax over an expanded node; ties go to higher prior, then lower index.
pub fn select_child(node: &SearchNode, c: f64) -> Result<MoveIndex, SearchError> {
    node.select_edge(c).map(|i| node.edges[i].index)
}

/// `N^(1/τ)` normalised over the given counts, or one-hot on the largest count.
pub fn visit_policy(counts: &[(MoveIndex, u32)], t: Temperature) -> Result<Vec<(MoveIndex, f64)>, SearchError> {
    let max = counts.iter().map(|&(_, n)| n).max().unwrap_or(0);
    if max == 0 {
        return Err(SearchError::ZeroCounts);
    }
    match t {
        Temperature::Argmax => {
            let best = counts
                .iter()
                .filter(|&&(_, n)| n == max)
                .map(|&(i, _)| i)
                .min()
                .unwrap();
            Ok(counts
                .iter()
                .map(|&(i, _)| (i, if i == best { 1.0 } else { 0.0 }))
                .collect())
        }
        Temperature::Value(tau) => {
            if !(tau > 0.0 && tau.is_finite()) {
                return Err(SearchError::BadTemperature(tau));
            }
            // Scaling by the max count first keeps small temperatures from overflowing.
            let lmax = (max as f64).ln();
            let weights: Vec<f64> = counts
                .iter()
                .map(|&(_, n)| if n == 0 { 0.0 } else { (((n as f64).ln() - lmax) / tau).exp() })
                .collect();
            let total: f64 = weights.iter().sum();
            Ok(counts.iter().zip(weights).map(|(&(i, _), w)| (i, w / total)).collect())
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SearchResult {
    /// Visit policy over the root's legal moves in ascending index order.
    pub policy: Vec<(MoveIndex, f64)>,
    pub chosen_move: Move,
    pub chosen_index: MoveIndex,
    /// Mean backed-up value at the root, from the mover's perspective.
    pub root_value: f64,
    pub visit_counts: Vec<(MoveIndex, u32)>,
    pub temperature: Temperature,
}

fn sample_policy<R: Rng + ?Sized>(policy: &[(MoveIndex, f64)], rng: &mut R) -> usize {
    let u: f64 = rng.gen();
    let mut acc = 0.0;
    let mut last = 0;
    for (i, &(_, p)) in policy.iter().enumerate() {
        if p <= 0.0 {
            continue;
        }
        acc += p;
        last = i;
        if u < acc {
            return i;
        }
    }
    last
}

/// Runs `cfg.simulations` simulations from `root`, reusing `reused` when it
/// holds the same position. Expanding a fresh root counts as the first
/// simulation. Returns the result and the tree for reuse.
pub fn run_mcts<E: Evaluator + ?Sized, R: Rng + ?Sized>(
    root: &Board,
    eval: &E,
    cfg: &SearchConfig,
    reused: Option<SearchNode>,
    rng: &mut R,
) -> Result<(SearchResult, SearchNode), SearchError> {
    if cfg.simulations == 0 {
        return Err(SearchError::NoSimulations);
    }
    let mut node = match reused {
        Some(n) if n.board.key() == root.key() => n,
        _ => SearchNode::new(root.clone()),
    };
    if node.terminal.is_some() {
        return Err(SearchError::TerminalRoot);
    }
    let mut remaining = cfg.simulations;
    if !node.expanded {
        node.expand(eval)?;
        remaining -= 1;
    }
    node.apply_root_noise(cfg.dirichlet_alpha, cfg.dirichlet_epsilon, rng);
    for _ in 0..remaining {
        node.simulate(eval, cfg.c_puct)?;
    }
    // A single simulation on a fresh root only expands it; one more visit gives a policy.
    if node.edge_visit_sum() == 0 {
        node.simulate(eval, cfg.c_puct)?;
    }

    let counts = node.visit_counts();
    let t = cfg.temperature.at_ply(root.ply());
    let policy = visit_policy(&counts, t)?;
    let pick = sample_policy(&policy, rng);
    let result = SearchResult {
        chosen_move: node.edges[pick].mv,
        chosen_index: node.edges[pick].index,
        policy,
        root_value: node.value_estimate(),
        visit_counts: counts,
        temperature: t,
    };
    Ok((result, node))
}

/// Fresh search seeded from `cfg.seed`.
pub fn search<E: Evaluator + ?Sized>(root: &Board, eval: &E, cfg: &SearchConfig) -> Result<SearchResult, SearchError> {
    let mut rng = <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(cfg.seed);
    run_mcts(root, eval, cfg, None, &mut rng).map(|(r, _)| r)
}

/// Subtree below `m`, or a fresh node when it was never expanded.
pub fn advance_root(tree: SearchNode, m: Move) -> Result<SearchNode, SearchError> {
    if tree.expanded {
        let edge = tree
            .edges
            .into_iter()
            .find(|e| e.mv == m)
            .ok_or(SearchError::IllegalMove(m))?;
        let mut child = match edge.child {
            Some(c) => *c,
            None => SearchNode::new(tree.board.apply_move_unchecked(m)),
        };
        for e in &mut child.edges {
            e.stats.p = e.raw_prior;
        }
        Ok(child)
    } else {
        let board = tree.board.apply_move(m).map_err(|_| SearchError::IllegalMove(m))?;
        Ok(SearchNode::new(board))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::search::TemperatureSchedule;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn idx(i: usize) -> MoveIndex {
        MoveIndex::new(i).unwrap()
    }

    fn cfg(sims: u32) -> SearchConfig {
        SearchConfig {
            simulations: sims,
            dirichlet_epsilon: 0.0,
            temperature: TemperatureSchedule::constant(Temperature::Value(1.0)),
            ..SearchConfig::default()
        }
    }

    #[test]
    fn puct_examples() {
        let e = EdgeStats { n: 9, w: 4.5, p: 0.2 };
        assert!((puct_score(&e, 100, 1.5) - 0.8).abs() < 1e-12);
        let fresh = EdgeStats { n: 0, w: 0.0, p: 0.7 };
        assert_eq!(puct_score(&fresh, 0, 1.5), 0.0);
        let many = EdgeStats { n: 1_000_000_000, w: 300_000_000.0, p: 0.5 };
        assert!((puct_score(&many, 1_000_000_000, 1.5) - 0.3).abs() < 1e-4);
    }

    #[test]
    fn visit_policy_examples() {
        let c = [(idx(3), 2), (idx(9), 8)];
        let p = visit_policy(&c, Temperature::Value(1.0)).unwrap();
        assert!((p[0].1 - 0.2).abs() < 1e-12 && (p[1].1 - 0.8).abs() < 1e-12);
        let a = visit_policy(&c, Temperature::Argmax).unwrap();
        assert_eq!((a[0].1, a[1].1), (0.0, 1.0));
        let even = visit_policy(&[(idx(3), 5), (idx(9), 5)], Temperature::Value(1.0)).unwrap();
        assert_eq!((even[0].1, even[1].1), (0.5, 0.5));
        let tie = visit_policy(&[(idx(9), 5), (idx(3), 5)], Temperature::Argmax).unwrap();
        assert_eq!(tie[1], (idx(3), 1.0));
        assert!(matches!(
            visit_policy(&[(idx(1), 0)], Temperature::Value(1.0)),
            Err(SearchError::ZeroCounts)
        ));
        let cold = visit_policy(&c, Temperature::Value(1e-3)).unwrap();
        assert!(cold[1].1 > 0.999_999 && cold.iter().all(|x| x.1.is_finite()));
    }

    fn expanded_start() -> SearchNode {
        let mut n = SearchNode::new(Board::startpos());
        n.expand(&UniformEvaluator).unwrap();
        n
    }

    #[test]
    fn fresh_node_picks_max_prior_then_lowest_index() {
        let mut n = expanded_start();
        assert_eq!(select_child(&n, 1.5).unwrap(), n.edges[0].index);
        n.edges_mut()[7].stats.p = 0.5;
        assert_eq!(select_child(&n, 1.5).unwrap(), n.edges[7].index);
    }

    #[test]
    fn select_compares_q_plus_u() {
        let mut n = expanded_start();
        let edges = n.edges_mut();
        for e in edges.iter_mut() {
            e.stats = EdgeStats { n: 0, w: 0.0, p: 0.0 };
        }
        // Sum of visits 16 gives sqrt = 4; with c = 1 and N = 1, U = 2P.
        edges[0].stats = EdgeStats { n: 1, w: 0.5, p: 0.05 };
        edges[1].stats = EdgeStats { n: 1, w: 0.3, p: 0.2 };
        edges[2].stats = EdgeStats { n: 14, w: -14.0, p: 0.0 };
        assert_eq!(select_child(&n, 1.0).unwrap(), n.edges[1].index);
    }

    #[test]
    fn exact_tie_goes_to_lower_index() {
        let mut n = expanded_start();
        for e in n.edges_mut().iter_mut() {
            e.stats = EdgeStats { n: 2, w: 1.0, p: 0.05 };
        }
        assert_eq!(select_child(&n, 1.5).unwrap(), n.edges[0].index);
    }

    #[test]
    fn terminal_root_is_rejected() {
        let mate = Board::from_fen("rnb1kbnr/pppp1ppp/8/4p3/6Pq/5P2/PPPPP2P/RNBQKBNR w KQkq - 1 3").unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let err = run_mcts(&mate, &UniformEvaluator, &cfg(10), None, &mut rng).unwrap_err();
        assert!(matches!(err, SearchError::TerminalRoot));
        assert!(select_child(&SearchNode::new(mate), 1.0).is_err());
    }

    fn check_conservation(n: &SearchNode) {
        if n.terminal.is_none() && n.expanded {
            assert_eq!(n.visits, n.edge_visit_sum() + 1);
        }
        for e in &n.edges {
            if let Some(c) = e.child() {
                assert_eq!(c.visits, e.stats.n);
                check_conservation(c);
            }
        }
    }

    #[test]
    fn conservation_and_reuse() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let board = Board::startpos();
        let (r, tree) = run_mcts(&board, &UniformEvaluator, &cfg(200), None, &mut rng).unwrap();
        assert_eq!(tree.edge_visit_sum(), 199);
        check_conservation(&tree);
        let s: f64 = r.policy.iter().map(|x| x.1).sum();
        assert!((s - 1.0).abs() < 1e-9);

        let mv = r.chosen_move;
        let child_stats: Vec<EdgeStats> = {
            let e = tree.edges.iter().find(|e| e.mv == mv).unwrap();
            e.child().unwrap().edges.iter().map(|e| e.stats).collect()
        };
        let next = advance_root(tree, mv).unwrap();
        assert_eq!(next.edges.iter().map(|e| e.stats).collect::<Vec<_>>(), child_stats);
        let before = next.edge_visit_sum();
        let b2 = board.apply_move(mv).unwrap();
        let (_, tree2) = run_mcts(&b2, &UniformEvaluator, &cfg(50), Some(next), &mut rng).unwrap();
        assert_eq!(tree2.edge_visit_sum(), before + 50);
        check_conservation(&tree2);
    }

    #[test]
    fn advance_along_unvisited_and_illegal_moves() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let board = Board::startpos();
        let (_, tree) = run_mcts(&board, &UniformEvaluator, &cfg(5), None, &mut rng).unwrap();
        let unvisited = tree.edges.iter().find(|e| e.child.is_none()).unwrap().mv;
        let fresh = advance_root(tree.clone(), unvisited).unwrap();
        assert!(!fresh.is_expanded() && fresh.visits() == 0);
        let bad = Move::from_uci("e2e5").unwrap();
        assert!(matches!(advance_root(tree, bad), Err(SearchError::IllegalMove(_))));
    }

    #[test]
    fn grandchild_statistics_survive_two_advances() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let (_, tree) = run_mcts(&Board::startpos(), &UniformEvaluator, &cfg(400), None, &mut rng).unwrap();
        let e1 = tree.edges.iter().max_by_key(|e| e.stats.n).unwrap();
        let c1 = e1.child().unwrap();
        let e2 = c1.edges.iter().max_by_key(|e| e.stats.n).unwrap();
        let (m1, m2) = (e1.mv, e2.mv);
        let expected: Vec<EdgeStats> = e2.child().unwrap().edges.iter().map(|e| e.stats).collect();
        let g = advance_root(advance_root(tree, m1).unwrap(), m2).unwrap();
        assert_eq!(g.edges.iter().map(|e| e.stats).collect::<Vec<_>>(), expected);
    }

    #[test]
    fn one_simulation_gives_a_one_hot_policy() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let (r, _) = run_mcts(&Board::startpos(), &UniformEvaluator, &cfg(1), None, &mut rng).unwrap();
        let nonzero: Vec<_> = r.policy.iter().filter(|x| x.1 > 0.0).collect();
        assert_eq!(nonzero.len(), 1);
        assert_eq!(nonzero[0].1, 1.0);
    }

    #[test]
    fn same_seed_same_result() {
        let c = SearchConfig {
            simulations: 64,
            ..SearchConfig::default()
        };
        let a = search(&Board::startpos(), &UniformEvaluator, &c).unwrap();
        let b = search(&Board::startpos(), &UniformEvaluator, &c).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn noise_touches_only_root_priors() {
        let c = SearchConfig {
            simulations: 100,
            dirichlet_epsilon: 0.25,
            ..SearchConfig::default()
        };
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let (_, tree) = run_mcts(&Board::startpos(), &UniformEvaluator, &c, None, &mut rng).unwrap();
        assert!(tree.edges.iter().any(|e| e.stats.p != e.raw_prior));
        let s: f64 = tree.edges.iter().map(|e| e.stats.p).sum();
        assert!((s - 1.0).abs() < 1e-12);
        for e in &tree.edges {
            if let Some(child) = e.child() {
                assert!(child.edges.iter().all(|ce| ce.stats.p == ce.raw_prior));
            }
        }
    }

    #[test]
    fn mate_in_one_dominates() {
        let b = Board::from_fen("6k1/5ppp/8/8/8/8/5PPP/R5K1 w - - 0 1").unwrap();
        let c = SearchConfig {
            simulations: 800,
            dirichlet_epsilon: 0.0,
            temperature: TemperatureSchedule::constant(Temperature::Argmax),
            ..SearchConfig::default()
        };
        let r = search(&b, &UniformEvaluator, &c).unwrap();
        assert_eq!(r.chosen_move.to_string(), "a1a8");
        assert!(r.root_value > 0.5);
    }

    #[test]
    fn mating_edge_q_is_plus_one_for_the_mover() {
        let b = Board::from_fen("6k1/5ppp/8/8/8/8/5PPP/R5K1 w - - 0 1").unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let (_, tree) = run_mcts(&b, &UniformEvaluator, &cfg(2000), None, &mut rng).unwrap();
        let mate = tree.edges.iter().find(|e| e.mv.to_string() == "a1a8").unwrap();
        assert_eq!(mate.stats.q(), 1.0);
    }
}
