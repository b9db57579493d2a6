use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::mcss::{ranks_above, search_candidates};
use crate::proposals::{MemberSet, ProposalId};
use crate::scoring::{SceneSolution, Scorer};

/// Largest candidate count accepted by [`brute_force`].
pub const MAX_BRUTE_POOL: usize = 20;

fn feasible_subsets(scorer: &Scorer<'_>, ids: &[ProposalId]) -> Vec<MemberSet> {
    let pool = scorer.pool();
    let mut out = Vec::new();
    let mut stack = vec![(0usize, pool.empty_set())];
    while let Some((k, set)) = stack.pop() {
        if k == ids.len() {
            out.push(set);
            continue;
        }
        let p = ids[k];
        if !set.intersects(pool.incompatible_with(p)) {
            let mut with = set.clone();
            with.insert(p);
            stack.push((k + 1, with));
        }
        stack.push((k + 1, set));
    }
    out
}

/// Exact optimum over every feasible subset of the allowed candidates.
/// Ties prefer fewer members, then lexicographically smaller ids.
pub fn brute_force(scorer: &Scorer<'_>, allowed: &MemberSet) -> Result<SceneSolution> {
    let ids = search_candidates(scorer, allowed).to_vec();
    if ids.len() > MAX_BRUTE_POOL {
        return Err(Error::PoolTooLarge {
            size: ids.len(),
            max: MAX_BRUTE_POOL,
        });
    }
    let subsets = feasible_subsets(scorer, &ids);
    let best = subsets
        .par_iter()
        .map(|m| (m.to_vec(), scorer.evaluate(m).global))
        .reduce_with(|a, b| if ranks_above(&b.0, b.1, &a.0, a.1) { b } else { a })
        .expect("the empty set is always feasible");
    Ok(SceneSolution {
        members: best.0,
        global_score: best.1,
        feasible: true,
    })
}
