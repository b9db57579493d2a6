//! Monte Carlo search over the proposal tree: UCB selection, expansion,
//! fitness-weighted roulette simulations and local-score backup.

use std::sync::Arc;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Plane, Vec3};
use crate::layout::floor_from_walls;
use crate::metrics::polygon_iou;
use crate::proposals::{Category, LayoutProposal, MemberSet, ProposalId, ProposalKind, ProposalPool};
use crate::render::{prerender, ProposalRender};
use crate::scoring::{Evaluation, ObservationSet, SceneSolution, ScoreWeights, Scorer};
use crate::tree::{child_group, NodeContent, NodeId, SearchMode, SearchTree};

/// Smallest polygon IoU at which a closed floor reuses a pool floor.
pub const FLOOR_MATCH_IOU: f64 = 0.9;

/// Value deposited into the nodes of the selected path.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Backup {
    /// Per-node local score.
    Local,
    /// The global score of the simulated solution, for every node.
    Whole,
}

/// How a simulation completes a partial solution.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Simulation {
    /// Random descent through the implicit tree, Skip included.
    Walk,
    /// Roulette draws until no compatible candidate is left.
    Exhaustive,
}

/// Exploitation term of the UCB rule.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Exploitation {
    Mean,
    Max,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct McssConfig {
    pub iterations: usize,
    pub object_simulations: usize,
    pub layout_simulations: usize,
    pub lambda1: f64,
    /// Fixed exploration weight; scaled from early deposits when absent.
    pub lambda2: Option<f64>,
    /// Iterations whose deposits set the automatic exploration weight.
    pub warmup: usize,
    pub backup: Backup,
    pub exploitation: Exploitation,
    pub simulation: Simulation,
    /// Roulette floor as a fraction of the fitness range.
    pub roulette_epsilon: f64,
    pub seed: u64,
}

impl Default for McssConfig {
    fn default() -> Self {
        Self {
            iterations: 20_000,
            object_simulations: 10,
            layout_simulations: 1,
            lambda1: 1.0,
            lambda2: None,
            warmup: 100,
            backup: Backup::Local,
            exploitation: Exploitation::Mean,
            simulation: Simulation::Walk,
            roulette_epsilon: 1e-6,
            seed: 0,
        }
    }
}

impl McssConfig {
    pub fn validate(&self) -> Result<()> {
        if self.iterations == 0 {
            return Err(Error::Config("iterations must be at least 1".into()));
        }
        if self.object_simulations == 0 || self.layout_simulations == 0 {
            return Err(Error::Config("simulation counts must be at least 1".into()));
        }
        if !(self.lambda1.is_finite() && self.lambda1 >= 0.0) {
            return Err(Error::Config("lambda1 must be nonnegative".into()));
        }
        if let Some(l) = self.lambda2 {
            if !(l.is_finite() && l >= 0.0) {
                return Err(Error::Config("lambda2 must be nonnegative".into()));
            }
        }
        if !(self.roulette_epsilon.is_finite() && self.roulette_epsilon > 0.0) {
            return Err(Error::Config("roulette_epsilon must be positive".into()));
        }
        Ok(())
    }

    pub fn simulations(&self, mode: SearchMode) -> usize {
        match mode {
            SearchMode::Object => self.object_simulations,
            SearchMode::Layout => self.layout_simulations,
        }
    }
}

/// Best solution seen so far. Ties prefer fewer members, then
/// lexicographically smaller ids.
#[derive(Clone, Debug, Default)]
pub struct BestTracker {
    best: Option<(Vec<ProposalId>, f64)>,
}

/// Whether `(a, sa)` ranks strictly above `(b, sb)`.
pub fn ranks_above(a: &[ProposalId], sa: f64, b: &[ProposalId], sb: f64) -> bool {
    sa > sb || (sa == sb && (a.len(), a) < (b.len(), b))
}

impl BestTracker {
    pub fn offer(&mut self, members: &MemberSet, score: f64) -> bool {
        let ids = members.to_vec();
        let better = match &self.best {
            None => true,
            Some((b, s)) => ranks_above(&ids, score, b, *s),
        };
        if better {
            self.best = Some((ids, score));
        }
        better
    }

    pub fn score(&self) -> f64 {
        self.best.as_ref().map_or(f64::NEG_INFINITY, |b| b.1)
    }

    pub fn members(&self) -> &[ProposalId] {
        self.best.as_ref().map_or(&[], |b| &b.0)
    }
}

/// Outcome of one search run.
#[derive(Clone, Debug)]
pub struct SearchResult {
    pub solution: SceneSolution,
    /// Best-so-far global score after each iteration.
    pub series: Vec<f64>,
    /// Elapsed milliseconds after each iteration; zeros unless timed.
    pub wall_ms: Vec<u64>,
    /// Every simulated solution as `(iteration, solution)` when traced.
    pub trace: Vec<(usize, SceneSolution)>,
}

impl SearchResult {
    /// `iteration,best_global_score,wall_ms` rows, iterations counted from 1.
    pub fn convergence_csv(&self) -> String {
        let mut out = String::from("iteration,best_global_score,wall_ms\n");
        for (i, s) in self.series.iter().enumerate() {
            out.push_str(&format!("{},{:?},{}\n", i + 1, s, self.wall_ms.get(i).copied().unwrap_or(0)));
        }
        out
    }
}

#[derive(Clone, Copy, Debug, Default)]
pub struct RunOptions {
    pub timing: bool,
    pub trace: bool,
}

/// Search variables: visible, outside the context and compatible with it.
pub fn search_candidates(scorer: &Scorer<'_>, allowed: &MemberSet) -> MemberSet {
    let pool = scorer.pool();
    let ctx = scorer.context();
    MemberSet::from_ids(
        pool.len(),
        allowed
            .iter()
            .filter(|&id| scorer.is_visible(id) && !ctx.contains(id) && !pool.incompatible_with(id).intersects(ctx)),
    )
}

/// Roulette-wheel weights: fitness shifted to a positive floor.
pub struct Roulette {
    f_min: f64,
    eps: f64,
}

impl Roulette {
    pub fn new(fitness: &[f64], candidates: &MemberSet, epsilon: f64) -> Self {
        let finite: Vec<f64> = candidates.iter().map(|i| fitness[i]).filter(|f| f.is_finite()).collect();
        let f_min = finite.iter().copied().fold(f64::INFINITY, f64::min);
        let f_max = finite.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let range = f_max - f_min;
        let eps = if range > 0.0 { epsilon * range } else { 1.0 };
        Self {
            f_min: if f_min.is_finite() { f_min } else { 0.0 },
            eps,
        }
    }

    pub fn weight(&self, f: f64) -> f64 {
        if f.is_finite() {
            (f - self.f_min).max(0.0) + self.eps
        } else {
            self.eps
        }
    }

    /// Draws from `set` with probability proportional to the weights.
    pub fn draw<R: Rng>(&self, fitness: &[f64], set: &MemberSet, rng: &mut R) -> Option<ProposalId> {
        let ids = set.to_vec();
        let weights: Vec<f64> = ids.iter().map(|&i| self.weight(fitness[i])).collect();
        pick_weighted(&ids, &weights, rng)
    }
}

/// Index-ordered cumulative draw.
pub fn pick_weighted<R: Rng>(ids: &[ProposalId], weights: &[f64], rng: &mut R) -> Option<ProposalId> {
    let total: f64 = weights.iter().sum();
    if ids.is_empty() || !(total > 0.0) {
        return ids.first().copied();
    }
    let u = rng.random::<f64>() * total;
    let mut acc = 0.0;
    for (&id, &w) in ids.iter().zip(weights) {
        acc += w;
        if u < acc {
            return Some(id);
        }
    }
    ids.last().copied()
}

/// Completes `members` by drawing from `remaining` until nothing compatible
/// is left. In layout mode each draw must share an edge with the previous.
#[allow(clippy::too_many_arguments)]
pub fn simulate<R: Rng>(
    pool: &ProposalPool,
    fitness: &[f64],
    roulette: Option<&Roulette>,
    mode: SearchMode,
    mut members: MemberSet,
    mut remaining: MemberSet,
    mut last: Option<ProposalId>,
    rng: &mut R,
) -> MemberSet {
    loop {
        let mut cand = remaining.clone();
        if mode == SearchMode::Layout {
            if let Some(p) = last {
                cand.intersect_with(pool.neighbors(p));
            }
        }
        let pick = match roulette {
            Some(r) => r.draw(fitness, &cand, rng),
            None => {
                let ids = cand.to_vec();
                if ids.is_empty() {
                    None
                } else {
                    Some(ids[rng.random_range(0..ids.len())])
                }
            }
        };
        let Some(p) = pick else { break };
        members.insert(p);
        remaining.remove(p);
        remaining.subtract(pool.incompatible_with(p));
        last = Some(p);
    }
    members
}

/// Random descent through the implicit tree below a node: at each level
/// one child is drawn among the child group and, in object mode, the Skip
/// child. Skip counts as fitness zero; weights are shifted by the smallest
/// value at that level.
#[allow(clippy::too_many_arguments)]
pub fn simulate_walk<R: Rng>(
    pool: &ProposalPool,
    fitness: &[f64],
    mode: SearchMode,
    epsilon: f64,
    mut members: MemberSet,
    mut remaining: MemberSet,
    mut anchor: Option<ProposalId>,
    mut last: Option<ProposalId>,
    rng: &mut R,
) -> MemberSet {
    loop {
        let group = child_group(pool, fitness, mode, &remaining, anchor, last);
        if group.is_empty() {
            break;
        }
        let mut values: Vec<f64> = group.iter().map(|&p| fitness[p]).collect();
        if mode == SearchMode::Object {
            values.push(0.0);
        }
        let finite = values.iter().copied().filter(|v| v.is_finite());
        let lo = finite.clone().fold(f64::INFINITY, f64::min);
        let hi = finite.fold(f64::NEG_INFINITY, f64::max);
        let eps = if hi > lo { epsilon * (hi - lo) } else { 1.0 };
        let weights: Vec<f64> = values
            .iter()
            .map(|&v| if v.is_finite() { v - lo + eps } else { eps })
            .collect();
        let slots: Vec<usize> = (0..values.len()).collect();
        let k = pick_weighted(&slots, &weights, rng).expect("nonempty");
        match group.get(k) {
            Some(&p) => {
                members.insert(p);
                remaining.remove(p);
                remaining.subtract(pool.incompatible_with(p));
                anchor = Some(p);
                last = Some(p);
            }
            None => {
                for &p in &group {
                    remaining.remove(p);
                }
            }
        }
    }
    members
}

fn ucb(q: f64, q_max: f64, n: u64, parent_n: u64, l1: f64, l2: f64, exploit: Exploitation) -> f64 {
    let n = n as f64;
    let value = match exploit {
        Exploitation::Mean => q / n,
        Exploitation::Max => q_max,
    };
    l1 * value + l2 * ((parent_n.max(1) as f64).ln() / n).sqrt()
}

struct Explorer {
    fixed: Option<f64>,
    warmup: usize,
    lo: f64,
    hi: f64,
}

impl Explorer {
    /// √2 times the spread of deposits seen during warmup, frozen after.
    fn lambda2(&self) -> f64 {
        self.fixed
            .unwrap_or_else(|| if self.hi >= self.lo { std::f64::consts::SQRT_2 * (self.hi - self.lo) } else { 0.0 })
    }

    fn observe(&mut self, iteration: usize, v: f64) {
        if self.fixed.is_none() && iteration < self.warmup && v.is_finite() {
            self.lo = self.lo.min(v);
            self.hi = self.hi.max(v);
        }
    }
}

fn deposit(
    tree: &SearchTree<'_>,
    scorer: &Scorer<'_>,
    node: NodeId,
    members: &MemberSet,
    eval: &Evaluation,
    backup: Backup,
) -> f64 {
    if backup == Backup::Whole {
        return eval.global;
    }
    match tree.node(node).content {
        NodeContent::Root => scorer.all_view_mean(eval),
        NodeContent::Proposal(p) => scorer
            .local_score(p, members, eval)
            .expect("tree holds only visible proposals"),
        NodeContent::Skip => match tree.skip_sibling(node) {
            Some(o) => scorer.view_mean(o, eval).expect("tree holds only visible proposals"),
            None => scorer.all_view_mean(eval),
        },
    }
}

/// Among fully visited children, the UCB maximizer; earlier children win ties.
fn best_child(tree: &SearchTree<'_>, parent: NodeId, kids: &[NodeId], l1: f64, l2: f64, exploit: Exploitation) -> NodeId {
    let parent_n = tree.node(parent).n;
    let mut best = kids[0];
    let mut best_v = f64::NEG_INFINITY;
    for &k in kids {
        let nd = tree.node(k);
        let v = ucb(nd.q, nd.q_max, nd.n, parent_n, l1, l2, exploit);
        if v > best_v {
            best_v = v;
            best = k;
        }
    }
    best
}

/// Search state between iterations.
pub struct Search<'s, 'p> {
    scorer: &'s Scorer<'p>,
    mode: SearchMode,
    config: McssConfig,
    roulette: Roulette,
    tree: SearchTree<'s>,
    rng: ChaCha8Rng,
    tracker: BestTracker,
    explorer: Explorer,
    iteration: usize,
}

/// One iteration's simulated solutions and the node that received them.
pub struct Step {
    pub node: NodeId,
    pub solutions: Vec<SceneSolution>,
    /// Index of the simulation that was backed up.
    pub chosen: usize,
}

impl<'s, 'p> Search<'s, 'p> {
    pub fn new(scorer: &'s Scorer<'p>, allowed: &MemberSet, mode: SearchMode, config: &McssConfig) -> Result<Self> {
        config.validate()?;
        let fitness = scorer.fitnesses();
        let candidates = search_candidates(scorer, allowed);
        Ok(Self {
            scorer,
            mode,
            config: config.clone(),
            roulette: Roulette::new(fitness, &candidates, config.roulette_epsilon),
            tree: SearchTree::new(scorer.pool(), fitness, candidates, mode),
            rng: ChaCha8Rng::seed_from_u64(config.seed),
            tracker: BestTracker::default(),
            explorer: Explorer {
                fixed: config.lambda2,
                warmup: config.warmup,
                lo: f64::INFINITY,
                hi: f64::NEG_INFINITY,
            },
            iteration: 0,
        })
    }

    pub fn tree(&self) -> &SearchTree<'s> {
        &self.tree
    }

    pub fn best(&self) -> &BestTracker {
        &self.tracker
    }

    /// Exploration weight used by the next selection.
    pub fn lambda2(&self) -> f64 {
        self.explorer.lambda2()
    }

    /// Select, expand, simulate and back up once.
    pub fn step(&mut self) -> Step {
        let config = &self.config;
        let pool = self.scorer.pool();
        let fitness = self.scorer.fitnesses();
        let lambda2 = self.explorer.lambda2();
        let mut cur = SearchTree::ROOT;
        loop {
            let kids = self.tree.expand(cur).to_vec();
            if kids.is_empty() {
                break;
            }
            let unvisited: Vec<NodeId> = kids.iter().copied().filter(|&k| self.tree.node(k).n == 0).collect();
            if !unvisited.is_empty() {
                cur = unvisited[self.rng.random_range(0..unvisited.len())];
                break;
            }
            cur = best_child(&self.tree, cur, &kids, config.lambda1, lambda2, config.exploitation);
        }

        let node = self.tree.node(cur);
        let (path, remaining, last, anchor) = (node.path.clone(), node.remaining.clone(), node.proposal(), node.anchor);
        let sims = config.simulations(self.mode);
        let seeds: Vec<u64> = (0..sims).map(|_| self.rng.random()).collect();
        let (mode, roulette, scorer) = (self.mode, &self.roulette, self.scorer);
        let run_one = |s: &u64| {
            let mut r = ChaCha8Rng::seed_from_u64(*s);
            let m = if config.simulation == Simulation::Walk {
                simulate_walk(pool, fitness, mode, config.roulette_epsilon, path.clone(), remaining.clone(), anchor, last, &mut r)
            } else {
                simulate(pool, fitness, Some(roulette), mode, path.clone(), remaining.clone(), last, &mut r)
            };
            let e = scorer.evaluate(&m);
            (m, e)
        };
        let results: Vec<(MemberSet, Arc<Evaluation>)> = if sims > 1 {
            seeds.par_iter().map(run_one).collect()
        } else {
            seeds.iter().map(run_one).collect()
        };

        let mut chosen = 0;
        for (k, (m, e)) in results.iter().enumerate() {
            debug_assert!(pool.is_feasible(m));
            self.tracker.offer(m, e.global);
            if e.global > results[chosen].1.global {
                chosen = k;
            }
        }
        let (m, e) = &results[chosen];
        for id in self.tree.path_to(cur) {
            let v = deposit(&self.tree, self.scorer, id, m, e, config.backup);
            self.explorer.observe(self.iteration, v);
            let nd = self.tree.node_mut(id);
            nd.q += v;
            nd.q_max = nd.q_max.max(v);
            nd.n += 1;
        }
        self.iteration += 1;
        Step {
            node: cur,
            solutions: results
                .iter()
                .map(|(m, e)| SceneSolution {
                    members: m.to_vec(),
                    global_score: e.global,
                    feasible: e.feasible,
                })
                .collect(),
            chosen,
        }
    }

    /// Best solution seen so far.
    pub fn solution(&self) -> SceneSolution {
        let pool = self.scorer.pool();
        let members = MemberSet::from_ids(pool.len(), self.tracker.members().iter().copied());
        SceneSolution {
            members: members.to_vec(),
            global_score: self.tracker.score(),
            feasible: pool.is_feasible(&members),
        }
    }
}

/// Runs the search over `allowed` (restricted to valid candidates).
pub fn run(
    scorer: &Scorer<'_>,
    allowed: &MemberSet,
    mode: SearchMode,
    config: &McssConfig,
    options: RunOptions,
) -> Result<SearchResult> {
    let mut search = Search::new(scorer, allowed, mode, config)?;
    let start = Instant::now();
    let mut series = Vec::with_capacity(config.iterations);
    let mut wall_ms = Vec::with_capacity(config.iterations);
    let mut trace = Vec::new();
    for it in 0..config.iterations {
        let step = search.step();
        if options.trace {
            trace.extend(step.solutions.into_iter().map(|s| (it, s)));
        }
        series.push(search.best().score());
        wall_ms.push(if options.timing { start.elapsed().as_millis() as u64 } else { 0 });
    }
    Ok(SearchResult {
        solution: search.solution(),
        series,
        wall_ms,
        trace,
    })
}

/// Layouts first, then objects against the chosen layout.
pub struct TwoPhaseResult {
    pub layout: SearchResult,
    pub objects: SearchResult,
    /// Floor used as object context, if any.
    pub floor: Option<ProposalId>,
    /// Extended pool and prerenders when the floor had to be added.
    pub extended: Option<(ProposalPool, Vec<ProposalRender>)>,
    /// Walls, floor and objects scored together.
    pub solution: SceneSolution,
}

/// Selected walls by layout search over the wall proposals, then a floor
/// closed from their base edges, then object search in that context.
pub fn run_two_phase(
    pool: &ProposalPool,
    renders: &[ProposalRender],
    obs: &ObservationSet,
    weights: &ScoreWeights,
    config: &McssConfig,
    options: RunOptions,
) -> Result<TwoPhaseResult> {
    let scorer = Scorer::new(pool, renders, obs, weights.clone())?;
    let walls = pool.layout_ids(Some(Category::Wall));
    let layout = run(&scorer, &walls, SearchMode::Layout, config, options)?;
    let chosen: Vec<&LayoutProposal> = layout
        .solution
        .members
        .iter()
        .filter_map(|&id| pool.get(id).as_layout())
        .collect();
    let floors = pool.layout_ids(Some(Category::Floor)).to_vec();
    let best_floor = floors
        .iter()
        .copied()
        .filter(|&f| scorer.is_visible(f))
        .max_by(|&a, &b| scorer.fitness(a).total_cmp(&scorer.fitness(b)).then(b.cmp(&a)));
    let plane = match best_floor {
        Some(f) => *pool.get(f).as_layout().expect("floor is a layout").plane(),
        None => {
            let z = chosen
                .iter()
                .flat_map(|w| w.polygon.vertices.iter().map(|v| v.z))
                .fold(f64::INFINITY, f64::min);
            Plane::new(Vec3::new(0.0, 0.0, 1.0), if z.is_finite() { -z } else { 0.0 })?
        }
    };
    let plane_id = best_floor
        .map(|f| pool.get(f).as_layout().expect("floor is a layout").plane_id)
        .unwrap_or_else(|| {
            pool.proposals()
                .iter()
                .filter_map(|p| p.as_layout().map(|l| l.plane_id + 1))
                .max()
                .unwrap_or(0)
        });
    let mut context = MemberSet::from_ids(pool.len(), layout.solution.members.iter().copied());
    let mut floor = None;
    let mut extended = None;
    match floor_from_walls(&chosen, &plane, plane_id) {
        Ok(closed) => {
            let matched = floors
                .iter()
                .copied()
                .map(|f| (f, polygon_iou(&closed.polygon, &pool.get(f).as_layout().expect("layout").polygon)))
                .filter(|(_, iou)| *iou >= FLOOR_MATCH_IOU)
                .max_by(|a, b| a.1.total_cmp(&b.1).then(b.0.cmp(&a.0)));
            match matched {
                Some((f, _)) => floor = Some(f),
                None => {
                    let mut kinds: Vec<ProposalKind> = pool.proposals().iter().map(|p| p.kind.clone()).collect();
                    kinds.push(ProposalKind::Layout(closed));
                    let grown = ProposalPool::new(kinds, pool.voxel_size(), pool.params().clone());
                    let id = grown.len() - 1;
                    let mut r = renders.to_vec();
                    r.push(prerender(grown.get(id), &obs.views));
                    floor = Some(id);
                    extended = Some((grown, r));
                }
            }
        }
        Err(_) => {
            if let Some(f) = best_floor {
                let mut with = context.clone();
                with.insert(f);
                if scorer.global_score(&with) > scorer.global_score(&context) {
                    floor = Some(f);
                }
            }
        }
    }
    let (pool, renders) = match &extended {
        Some((p, r)) => (p, r.as_slice()),
        None => (pool, renders),
    };
    context = MemberSet::from_ids(pool.len(), context.iter());
    if let Some(f) = floor {
        context.insert(f);
    }
    let scorer = Scorer::with_context(pool, renders, obs, weights.clone(), context.clone())?;
    let object_config = McssConfig {
        seed: config.seed.wrapping_add(1),
        ..config.clone()
    };
    let objects = run(&scorer, &pool.object_ids(), SearchMode::Object, &object_config, options)?;
    let mut all = context;
    all.union_with(&MemberSet::from_ids(pool.len(), objects.solution.members.iter().copied()));
    let solution = Scorer::new(pool, renders, obs, weights.clone())?.solution(&all);
    Ok(TwoPhaseResult {
        layout,
        objects,
        floor,
        extended,
        solution,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testutil::{canonical_view, cuboid, layout, pool, rect, room, side_view, Fixture};

    fn scorer(f: &Fixture) -> Scorer<'_> {
        Scorer::new(&f.pool, &f.renders, &f.obs, ScoreWeights::default()).unwrap()
    }

    fn quick(iterations: usize) -> McssConfig {
        McssConfig {
            iterations,
            object_simulations: 3,
            ..McssConfig::default()
        }
    }

    // 0 and 1 coincide, 2 is elsewhere.
    fn rivals() -> ProposalPool {
        let lo = Vec3::new(0.0125, 0.0125, 2.0125);
        let hi = Vec3::new(0.5125, 0.5125, 2.5125);
        let far = Vec3::new(3.0, 0.0, 0.0);
        pool(vec![
            cuboid(Category::Chair, lo, hi),
            cuboid(Category::Chair, lo, hi),
            cuboid(Category::Table, lo + far, hi + far),
        ])
    }

    #[test]
    fn ucb_prefers_exploitation_then_exploration() {
        let p = rivals();
        let fitness = [1.0, 1.0, 1.0];
        let mut tree = SearchTree::new(&p, &fitness, MemberSet::full(3), SearchMode::Object);
        let kids = tree.expand(SearchTree::ROOT).to_vec();
        let (a, b) = (kids[0], kids[1]);
        for (id, q, q_max, n) in [(a, 3.0, 3.0, 1), (b, 35.0, 4.0, 10)] {
            let nd = tree.node_mut(id);
            nd.q = q;
            nd.q_max = q_max;
            nd.n = n;
        }
        tree.node_mut(SearchTree::ROOT).n = 11;
        let pair = [a, b];
        // Means 3 and 3.5; bonus sqrt(ln 11 / n) is 1.55 against 0.49.
        assert_eq!(best_child(&tree, SearchTree::ROOT, &pair, 1.0, 0.0, Exploitation::Mean), b);
        assert_eq!(best_child(&tree, SearchTree::ROOT, &pair, 1.0, 1.0, Exploitation::Mean), a);
        assert_eq!(best_child(&tree, SearchTree::ROOT, &pair, 1.0, 0.0, Exploitation::Max), b);
        tree.node_mut(a).q_max = 4.0;
        assert_eq!(best_child(&tree, SearchTree::ROOT, &pair, 1.0, 0.0, Exploitation::Max), a);
        let v = ucb(3.0, 3.0, 1, 11, 2.0, 0.5, Exploitation::Mean);
        assert!((v - (6.0 + 0.5 * 11f64.ln().sqrt())).abs() < 1e-12);
    }

    #[test]
    fn simulation_without_candidates_keeps_the_partial_solution() {
        let p = rivals();
        let fitness = [1.0, 2.0, 3.0];
        let members = MemberSet::from_ids(3, [2]);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let out = simulate(&p, &fitness, None, SearchMode::Object, members.clone(), p.empty_set(), None, &mut rng);
        assert_eq!(out, members);
        let out = simulate_walk(&p, &fitness, SearchMode::Object, 1e-6, members.clone(), p.empty_set(), None, None, &mut rng);
        assert_eq!(out, members);
    }

    #[test]
    fn single_candidate_is_always_drawn() {
        let p = rivals();
        let fitness = [1.0, 2.0, -3.0];
        let roulette = Roulette::new(&fitness, &MemberSet::full(3), 1e-6);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..100 {
            let out = simulate(&p, &fitness, Some(&roulette), SearchMode::Object, p.empty_set(), MemberSet::from_ids(3, [2]), None, &mut rng);
            assert_eq!(out.to_vec(), vec![2]);
        }
    }

    #[test]
    fn roulette_draws_in_proportion_to_shifted_fitness() {
        let p = rivals();
        assert!(p.compat(0, 1).is_incompatible());
        let fitness = [4.0, 2.0, 1.0];
        let roulette = Roulette::new(&fitness, &MemberSet::full(3), 1e-6);
        // Shifted by the minimum over all candidates: weights 3 and 1.
        assert!((roulette.weight(4.0) - 3.0).abs() < 1e-5);
        assert!((roulette.weight(1.0)).abs() < 1e-5);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let trials = 10_000;
        let hits = (0..trials)
            .filter(|_| {
                simulate(&p, &fitness, Some(&roulette), SearchMode::Object, p.empty_set(), MemberSet::from_ids(3, [0, 1]), None, &mut rng)
                    .contains(0)
            })
            .count();
        let ratio = hits as f64 / trials as f64;
        assert!((ratio - 0.75).abs() < 0.03, "{ratio}");
        let uniform = (0..trials)
            .filter(|_| {
                simulate(&p, &fitness, None, SearchMode::Object, p.empty_set(), MemberSet::from_ids(3, [0, 1]), None, &mut rng)
                    .contains(0)
            })
            .count();
        assert!((uniform as f64 / trials as f64 - 0.5).abs() < 0.03);
    }

    #[test]
    fn roulette_handles_flat_and_infinite_fitness() {
        let fitness = [2.0, 2.0, f64::NEG_INFINITY];
        let r = Roulette::new(&fitness, &MemberSet::full(3), 1e-6);
        assert_eq!(r.weight(2.0), 1.0);
        assert_eq!(r.weight(f64::NEG_INFINITY), 1.0);
        assert_eq!(pick_weighted(&[], &[], &mut ChaCha8Rng::seed_from_u64(0)), None);
        assert_eq!(pick_weighted(&[7], &[0.0], &mut ChaCha8Rng::seed_from_u64(0)), Some(7));
    }

    #[test]
    fn walk_weighs_proposals_against_skip() {
        let p = rivals();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let only = MemberSet::from_ids(3, [2]);
        let mut draw = |f: f64| {
            let fitness = [0.0, 0.0, f];
            (0..1000)
                .filter(|_| simulate_walk(&p, &fitness, SearchMode::Object, 1e-6, p.empty_set(), only.clone(), None, None, &mut rng).contains(2))
                .count()
        };
        // Skip counts as fitness zero, so the loser keeps only the epsilon floor.
        assert!(draw(3.0) >= 999);
        assert!(draw(-3.0) <= 1);
    }

    #[test]
    fn simulations_stay_feasible() {
        let f = room(vec![canonical_view()]);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let fitness = [1.0, 0.5, 0.2, 0.7, 0.0];
        let all = MemberSet::full(5);
        let roulette = Roulette::new(&fitness, &all, 1e-6);
        for _ in 0..200 {
            let a = simulate_walk(&f.pool, &fitness, SearchMode::Object, 1e-6, f.pool.empty_set(), all.clone(), None, None, &mut rng);
            let b = simulate(&f.pool, &fitness, Some(&roulette), SearchMode::Object, f.pool.empty_set(), all.clone(), None, &mut rng);
            assert!(f.pool.is_feasible(&a) && f.pool.is_feasible(&b));
            // The exhaustive variant stops only when nothing compatible is left.
            for id in 0..5 {
                assert!(b.contains(id) || f.pool.incompatible_with(id).intersects(&b));
            }
        }
    }

    #[test]
    fn each_step_backs_up_local_scores_along_the_path() {
        let f = room(vec![canonical_view(), side_view()]);
        let s = scorer(&f);
        let config = quick(40);
        let mut search = Search::new(&s, &MemberSet::full(5), SearchMode::Object, &config).unwrap();
        for _ in 0..config.iterations {
            let before: Vec<(f64, u64)> = (0..search.tree().len()).map(|i| (search.tree().node(i).q, search.tree().node(i).n)).collect();
            let step = search.step();
            let sol = &step.solutions[step.chosen];
            assert!(step.solutions.iter().all(|x| x.global_score <= sol.global_score));
            let m = f.set(&sol.members);
            let e = s.evaluate(&m);
            let tree = search.tree();
            for id in tree.path_to(step.node) {
                let want = match tree.node(id).content {
                    NodeContent::Root => s.all_view_mean(&e),
                    NodeContent::Proposal(p) => s.local_score(p, &m, &e).unwrap(),
                    NodeContent::Skip => s.view_mean(tree.skip_sibling(id).unwrap(), &e).unwrap(),
                };
                let (q0, n0) = before.get(id).copied().unwrap_or((0.0, 0));
                assert_eq!(tree.node(id).n, n0 + 1);
                assert!((tree.node(id).q - q0 - want).abs() < 1e-9);
            }
        }
        let tree = search.tree();
        assert_eq!(tree.node(SearchTree::ROOT).n, config.iterations as u64);
        for id in 0..tree.len() {
            let nd = tree.node(id);
            if let Some(kids) = nd.children.as_ref().filter(|k| !k.is_empty()) {
                let below: u64 = kids.iter().map(|&k| tree.node(k).n).sum();
                assert_eq!(nd.n, below + u64::from(id != SearchTree::ROOT), "node {id}");
            }
        }
    }

    #[test]
    fn whole_backup_deposits_the_global_score() {
        let f = room(vec![canonical_view()]);
        let s = scorer(&f);
        let config = McssConfig {
            backup: Backup::Whole,
            ..quick(10)
        };
        let mut search = Search::new(&s, &MemberSet::full(5), SearchMode::Object, &config).unwrap();
        let step = search.step();
        let g = step.solutions[step.chosen].global_score;
        for id in search.tree().path_to(step.node) {
            assert_eq!(search.tree().node(id).q, g);
        }
    }

    #[test]
    fn one_iteration_returns_the_best_first_simulation() {
        let f = room(vec![canonical_view()]);
        let s = scorer(&f);
        let r = run(&s, &MemberSet::full(5), SearchMode::Object, &quick(1), RunOptions { timing: false, trace: true }).unwrap();
        assert_eq!(r.series.len(), 1);
        assert_eq!(r.trace.len(), 3);
        let best = r.trace.iter().map(|(_, t)| t.global_score).fold(f64::NEG_INFINITY, f64::max);
        assert_eq!(r.solution.global_score, best);
        assert_eq!(r.series[0], best);
    }

    #[test]
    fn best_so_far_replays_from_the_trace() {
        let f = room(vec![canonical_view(), side_view()]);
        let s = scorer(&f);
        let r = run(&s, &MemberSet::full(5), SearchMode::Object, &quick(60), RunOptions { timing: false, trace: true }).unwrap();
        let mut tracker = BestTracker::default();
        let mut k = 0;
        for (it, want) in r.series.iter().enumerate() {
            while k < r.trace.len() && r.trace[k].0 == it {
                tracker.offer(&f.set(&r.trace[k].1.members), r.trace[k].1.global_score);
                k += 1;
            }
            assert_eq!(tracker.score(), *want);
        }
        assert_eq!(tracker.members(), r.solution.members.as_slice());
        assert!(r.series.windows(2).all(|w| w[0] <= w[1]));
        assert_eq!(r.convergence_csv().lines().count(), 61);
    }

    #[test]
    fn truth_only_pool_is_recovered() {
        let f = room(vec![canonical_view(), side_view()]);
        let s = scorer(&f);
        let r = run(&s, &f.set(&[0, 1, 2]), SearchMode::Object, &quick(50), RunOptions::default()).unwrap();
        assert_eq!(r.solution.members, vec![0, 1, 2]);
        assert!(r.solution.feasible);
    }

    #[test]
    fn full_room_finds_the_truth() {
        let f = room(vec![canonical_view(), side_view()]);
        let s = scorer(&f);
        let r = run(&s, &MemberSet::full(5), SearchMode::Object, &quick(200), RunOptions::default()).unwrap();
        assert_eq!(r.solution.members, vec![0, 1, 2]);
    }

    #[test]
    fn same_seed_same_search() {
        let f = room(vec![canonical_view(), side_view()]);
        let s = scorer(&f);
        let go = |seed| {
            let c = McssConfig { seed, ..quick(80) };
            run(&s, &MemberSet::full(5), SearchMode::Object, &c, RunOptions { timing: false, trace: true }).unwrap()
        };
        let (a, b) = (go(7), go(7));
        assert_eq!(a.series, b.series);
        assert_eq!(a.solution, b.solution);
        assert_eq!(a.trace.len(), b.trace.len());
        assert!(a.trace.iter().zip(&b.trace).all(|(x, y)| x == y));
    }

    #[test]
    fn candidates_exclude_invisible_and_context_clashes() {
        let f = room(vec![canonical_view()]);
        let s = Scorer::with_context(&f.pool, &f.renders, &f.obs, ScoreWeights::default(), f.set(&[1])).unwrap();
        let c = search_candidates(&s, &MemberSet::full(5));
        assert!(!c.contains(1) && !c.contains(4));
        assert!(c.contains(0) && c.contains(2));
        assert_eq!(c.contains(3), !f.pool.compat(1, 3).is_incompatible());
    }

    #[test]
    fn ties_prefer_smaller_solutions() {
        assert!(ranks_above(&[1], 2.0, &[0, 1], 2.0));
        assert!(ranks_above(&[0, 2], 2.0, &[1, 2], 2.0));
        assert!(!ranks_above(&[0], 1.0, &[0, 1], 2.0));
        let mut t = BestTracker::default();
        assert_eq!(t.score(), f64::NEG_INFINITY);
        assert!(t.offer(&MemberSet::from_ids(4, [0, 1]), 1.0));
        assert!(t.offer(&MemberSet::from_ids(4, [3]), 1.0));
        assert!(!t.offer(&MemberSet::from_ids(4, [0, 2]), 1.0));
        assert_eq!(t.members(), &[3]);
    }

    #[test]
    fn invalid_configs_are_rejected() {
        let ok = McssConfig::default();
        assert!(ok.validate().is_ok());
        for bad in [
            McssConfig { iterations: 0, ..ok.clone() },
            McssConfig { object_simulations: 0, ..ok.clone() },
            McssConfig { lambda1: -1.0, ..ok.clone() },
            McssConfig { lambda2: Some(f64::INFINITY), ..ok.clone() },
            McssConfig { roulette_epsilon: 0.0, ..ok.clone() },
        ] {
            assert!(bad.validate().is_err());
        }
    }

    #[test]
    fn two_phase_without_objects() {
        let f = crate::testutil::fixture(
            vec![layout(Category::Wall, rect(4.0, -5.0, 5.0, -4.0, 4.0), 0, vec![])],
            vec![canonical_view()],
            &[0],
        );
        let r = run_two_phase(&f.pool, &f.renders, &f.obs, &ScoreWeights::default(), &quick(20), RunOptions::default()).unwrap();
        assert_eq!(r.layout.solution.members, vec![0]);
        assert!(r.objects.solution.members.is_empty());
        assert_eq!(r.solution.members, vec![0]);
        assert_eq!(r.solution.global_score, 768.0);
    }
}
