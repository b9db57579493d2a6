//! Greedy hill climbing and uniform random search.

use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mcss::{search_candidates, simulate, BestTracker, RunOptions, SearchResult};
use crate::proposals::{MemberSet, ProposalId};
use crate::scoring::{SceneSolution, Scorer};
use crate::tree::SearchMode;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum HillClimbVariant {
    /// Gain in global score of the grown set.
    GlobalScore,
    /// Solo fitness plus the weighted intersection term against the set.
    Fitness,
}

fn argmax(values: &[(ProposalId, f64)]) -> Option<(ProposalId, f64)> {
    let mut best: Option<(ProposalId, f64)> = None;
    for &(id, v) in values {
        if best.is_none_or(|(_, b)| v > b) {
            best = Some((id, v));
        }
    }
    best
}

/// Adds the proposal with the largest gain until no gain is positive.
/// Candidates are visited in id order, so ties go to the lower id.
pub fn hill_climb(scorer: &Scorer<'_>, allowed: &MemberSet, variant: HillClimbVariant) -> SceneSolution {
    let pool = scorer.pool();
    let mut remaining = search_candidates(scorer, allowed);
    let mut members = pool.empty_set();
    let mut current = scorer.global_score(&members);
    loop {
        let ids = remaining.to_vec();
        let gains: Vec<(ProposalId, f64)> = ids
            .par_iter()
            .map(|&p| {
                let mut next = members.clone();
                next.insert(p);
                let v = match variant {
                    HillClimbVariant::GlobalScore => scorer.global_score(&next) - current,
                    HillClimbVariant::Fitness => {
                        scorer.fitness(p) + scorer.weights().lambda_p * scorer.own_prior(p, &next)
                    }
                };
                (p, v)
            })
            .collect();
        let Some((p, gain)) = argmax(&gains) else { break };
        if !(gain > 0.0) {
            break;
        }
        members.insert(p);
        remaining.remove(p);
        remaining.subtract(pool.incompatible_with(p));
        current = scorer.global_score(&members);
    }
    scorer.solution(&members)
}

/// Repeated uniform simulations from the empty set.
pub fn random_search(
    scorer: &Scorer<'_>,
    allowed: &MemberSet,
    mode: SearchMode,
    iterations: usize,
    seed: u64,
    options: RunOptions,
) -> Result<SearchResult> {
    if iterations == 0 {
        return Err(Error::Config("iterations must be at least 1".into()));
    }
    let pool = scorer.pool();
    let candidates = search_candidates(scorer, allowed);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut tracker = BestTracker::default();
    let start = Instant::now();
    let mut series = Vec::with_capacity(iterations);
    let mut wall_ms = Vec::with_capacity(iterations);
    let mut trace = Vec::new();
    for it in 0..iterations {
        let m = simulate(
            pool,
            scorer.fitnesses(),
            None,
            mode,
            pool.empty_set(),
            candidates.clone(),
            None,
            &mut rng,
        );
        let e = scorer.evaluate(&m);
        tracker.offer(&m, e.global);
        if options.trace {
            trace.push((
                it,
                SceneSolution {
                    members: m.to_vec(),
                    global_score: e.global,
                    feasible: e.feasible,
                },
            ));
        }
        series.push(tracker.score());
        wall_ms.push(if options.timing { start.elapsed().as_millis() as u64 } else { 0 });
    }
    let members = MemberSet::from_ids(pool.len(), tracker.members().iter().copied());
    Ok(SearchResult {
        solution: scorer.solution(&members),
        series,
        wall_ms,
        trace,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Vec3;
    use crate::mcss::{run, McssConfig};
    use crate::proposals::Category;
    use crate::render::View;
    use crate::scoring::ScoreWeights;
    use crate::synth::brute_force;
    use crate::testutil::{canonical_view, cuboid, fixture, layout, rect, room, side_view, Fixture};

    fn scorer(f: &Fixture) -> Scorer<'_> {
        Scorer::new(&f.pool, &f.renders, &f.obs, ScoreWeights::default()).unwrap()
    }

    // Wall, chair, table, a chair decoy and a table decoy each clashing with
    // their true counterpart, and a bed behind the camera. Every feasible
    // set containing the truth is maximal, so uniform exhaustive
    // simulations can reach the optimum.
    fn six(views: Vec<View>) -> Fixture {
        fixture(
            vec![
                layout(Category::Wall, rect(4.0, -5.0, 5.0, -4.0, 4.0), 0, vec![]),
                cuboid(Category::Chair, Vec3::new(-0.6, -0.3, 2.0), Vec3::new(0.2, 0.5, 2.6)),
                cuboid(Category::Table, Vec3::new(0.3, -0.2, 2.5), Vec3::new(1.0, 0.4, 3.0)),
                cuboid(Category::Chair, Vec3::new(-0.5, -0.3, 2.1), Vec3::new(0.3, 0.5, 2.7)),
                cuboid(Category::Bed, Vec3::new(-0.5, -0.5, -3.0), Vec3::new(0.5, 0.5, -2.0)),
                cuboid(Category::Table, Vec3::new(0.4, -0.2, 2.4), Vec3::new(1.1, 0.4, 2.9)),
            ],
            views,
            &[0, 1, 2],
        )
    }

    #[test]
    fn truth_only_pool_is_taken_whole() {
        let f = room(vec![canonical_view(), side_view()]);
        let s = scorer(&f);
        for v in [HillClimbVariant::GlobalScore, HillClimbVariant::Fitness] {
            let sol = hill_climb(&s, &f.set(&[0, 1, 2]), v);
            assert_eq!(sol.members, vec![0, 1, 2], "{v:?}");
        }
    }

    #[test]
    fn empty_pool_gives_the_empty_solution() {
        let f = fixture(vec![], vec![canonical_view()], &[]);
        let s = scorer(&f);
        for v in [HillClimbVariant::GlobalScore, HillClimbVariant::Fitness] {
            let sol = hill_climb(&s, &f.pool.empty_set(), v);
            assert!(sol.members.is_empty());
            assert_eq!(sol.global_score, 0.0);
        }
        let r = random_search(&s, &f.pool.empty_set(), SearchMode::Object, 3, 0, RunOptions::default()).unwrap();
        assert!(r.solution.members.is_empty());
        assert_eq!(r.series, vec![0.0; 3]);
    }

    #[test]
    fn hill_climbing_is_feasible_and_repeatable() {
        let f = six(vec![canonical_view(), side_view()]);
        let s = scorer(&f);
        let all = MemberSet::full(6);
        for v in [HillClimbVariant::GlobalScore, HillClimbVariant::Fitness] {
            let a = hill_climb(&s, &all, v);
            assert!(a.feasible && f.pool.is_feasible(&f.set(&a.members)));
            assert_eq!(a, hill_climb(&s, &all, v));
        }
    }

    #[test]
    fn greedy_global_gain_stops_at_a_local_optimum() {
        let f = six(vec![canonical_view(), side_view()]);
        let s = scorer(&f);
        let sol = hill_climb(&s, &MemberSet::full(6), HillClimbVariant::GlobalScore);
        let m = f.set(&sol.members);
        for p in search_candidates(&s, &MemberSet::full(6)).iter() {
            if m.contains(p) || f.pool.incompatible_with(p).intersects(&m) {
                continue;
            }
            let mut next = m.clone();
            next.insert(p);
            assert!(s.global_score(&next) <= sol.global_score, "adding {p} still helps");
        }
    }

    #[test]
    fn one_random_iteration_is_one_uniform_simulation() {
        let f = six(vec![canonical_view()]);
        let s = scorer(&f);
        let all = MemberSet::full(6);
        for seed in 0..5 {
            let r = random_search(&s, &all, SearchMode::Object, 1, seed, RunOptions::default()).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let m = simulate(&f.pool, s.fitnesses(), None, SearchMode::Object, f.pool.empty_set(), search_candidates(&s, &all), None, &mut rng);
            assert_eq!(r.solution.members, m.to_vec());
            assert_eq!(r.series, vec![s.global_score(&m)]);
        }
    }

    #[test]
    fn random_search_converges_to_the_exhaustive_optimum() {
        let f = six(vec![canonical_view(), side_view()]);
        let s = scorer(&f);
        let all = MemberSet::full(6);
        let best = brute_force(&s, &all).unwrap();
        assert!(f.pool.compat(1, 3).is_incompatible() && f.pool.compat(2, 5).is_incompatible());
        assert_eq!(best.members, vec![0, 1, 2]);
        let r = random_search(&s, &all, SearchMode::Object, 400, 9, RunOptions::default()).unwrap();
        assert_eq!(r.solution.members, best.members);
        assert!(r.series.windows(2).all(|w| w[0] <= w[1]));
        assert!(random_search(&s, &all, SearchMode::Object, 0, 9, RunOptions::default()).is_err());
        // The tree search agrees.
        let m = run(&s, &all, SearchMode::Object, &McssConfig { iterations: 200, ..McssConfig::default() }, RunOptions::default()).unwrap();
        assert_eq!(m.solution.members, best.members);
    }

    #[test]
    fn random_search_only_returns_maximal_sets() {
        let f = room(vec![canonical_view(), side_view()]);
        let s = scorer(&f);
        let all = MemberSet::full(5);
        let cands = search_candidates(&s, &all);
        let r = random_search(&s, &all, SearchMode::Object, 50, 1, RunOptions { timing: false, trace: true }).unwrap();
        for (_, sol) in &r.trace {
            let m = f.set(&sol.members);
            for p in cands.iter() {
                assert!(m.contains(p) || f.pool.incompatible_with(p).intersects(&m));
            }
        }
    }

    #[test]
    fn fitness_variant_charges_the_overlap() {
        // A large wall plus two overlapping copies of one box: the copy that
        // overlaps pays λ_P·IoU on top of its solo fitness.
        let lo = Vec3::new(-0.5, -0.5, 2.0125);
        let f = fixture(
            vec![
                layout(Category::Wall, rect(4.0, -5.0, 5.0, -4.0, 4.0), 0, vec![]),
                cuboid(Category::Chair, lo, lo + Vec3::new(0.5, 1.0, 0.5)),
                cuboid(Category::Chair, lo + Vec3::new(0.4, 0.0, 0.0), lo + Vec3::new(0.9, 1.0, 0.5)),
            ],
            vec![canonical_view()],
            &[0, 1, 2],
        );
        let s = scorer(&f);
        let both = f.set(&[1, 2]);
        let own = s.own_prior(2, &both);
        assert!(own < 0.0 && !f.pool.compat(1, 2).is_incompatible());
        let sol = hill_climb(&s, &MemberSet::full(3), HillClimbVariant::Fitness);
        assert!(f.pool.is_feasible(&f.set(&sol.members)));
    }
}
