//! Render-and-compare objective: per-view likelihood terms, the
//! intersection prior, global and local scores, and proposal fitness.

mod observations;

use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use serde::{Deserialize, Serialize};

pub use observations::{
    confidence_code, confidence_from_code, depth_code, depth_from_code, ObservationSet, ViewObservation,
};

use crate::error::{Error, Result};
use crate::proposals::{Category, MemberSet, ProposalId, ProposalPool};
use crate::render::{composite, overlay_row, ProposalRender, NO_OWNER};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScoreWeights {
    pub lambda_i: f64,
    pub lambda_d: f64,
    pub lambda_p: f64,
    /// Cap on the per-pixel absolute depth residual, meters.
    pub depth_cap: f64,
    /// Solo-render pixels needed for a proposal to count as visible.
    pub min_visible_pixels: usize,
}

impl Default for ScoreWeights {
    fn default() -> Self {
        Self {
            lambda_i: 1.0,
            lambda_d: 1.0,
            lambda_p: 2.5,
            depth_cap: 1.0,
            min_visible_pixels: 16,
        }
    }
}

impl ScoreWeights {
    pub fn validate(&self) -> Result<()> {
        let ok = [self.lambda_i, self.lambda_d, self.lambda_p]
            .iter()
            .all(|l| l.is_finite() && *l >= 0.0)
            && self.depth_cap.is_finite()
            && self.depth_cap > 0.0;
        if ok {
            Ok(())
        } else {
            Err(Error::Config("score weights must be finite and nonnegative".into()))
        }
    }
}

/// Score of one member set.
#[derive(Clone, Debug, PartialEq)]
pub struct Evaluation {
    pub feasible: bool,
    /// `λ_I·seg − λ_D·depth` per view; empty when infeasible.
    pub view_scores: Vec<f64>,
    /// Unweighted segmentation agreement summed over views.
    pub segmentation: f64,
    /// Unweighted capped depth residual summed over views.
    pub depth_error: f64,
    /// `−λ_P·Σ IoU` over tolerated pairs.
    pub prior: f64,
    /// `−∞` when infeasible.
    pub global: f64,
}

/// A member set with its global score.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SceneSolution {
    pub members: Vec<ProposalId>,
    pub global_score: f64,
    pub feasible: bool,
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
struct RowTerms {
    seg: f64,
    dep: f64,
}

/// Composite of the fixed context members in one view.
struct ViewBase {
    depth: Vec<f32>,
    owner: Vec<u32>,
    rows: Vec<RowTerms>,
    total: RowTerms,
}

const MEMO_LIMIT: usize = 400_000;

/// Scores member sets against one observation set. Context members are
/// always composited and charged in the prior but are not passed by callers.
pub struct Scorer<'a> {
    pool: &'a ProposalPool,
    renders: &'a [ProposalRender],
    obs: &'a ObservationSet,
    weights: ScoreWeights,
    context: MemberSet,
    base: Vec<ViewBase>,
    visible_views: Vec<Vec<usize>>,
    fitness: Vec<f64>,
    memo: Mutex<HashMap<MemberSet, Arc<Evaluation>>>,
}

impl<'a> Scorer<'a> {
    pub fn new(
        pool: &'a ProposalPool,
        renders: &'a [ProposalRender],
        obs: &'a ObservationSet,
        weights: ScoreWeights,
    ) -> Result<Self> {
        Self::with_context(pool, renders, obs, weights, pool.empty_set())
    }

    pub fn with_context(
        pool: &'a ProposalPool,
        renders: &'a [ProposalRender],
        obs: &'a ObservationSet,
        weights: ScoreWeights,
        context: MemberSet,
    ) -> Result<Self> {
        weights.validate()?;
        if renders.len() != pool.len() {
            return Err(Error::Observation("one prerender per proposal required".into()));
        }
        if renders.iter().any(|r| r.views.len() != obs.views.len()) {
            return Err(Error::Observation("prerenders and observations disagree on views".into()));
        }
        if context.capacity() != pool.empty_set().capacity() || context.iter().any(|id| id >= pool.len()) {
            return Err(Error::Pool("context set sized for another pool".into()));
        }
        let mut scorer = Self {
            pool,
            renders,
            obs,
            weights,
            context,
            base: Vec::new(),
            visible_views: Vec::new(),
            fitness: Vec::new(),
            memo: Mutex::new(HashMap::new()),
        };
        scorer.base = (0..obs.views.len()).map(|k| scorer.build_base(k)).collect();
        scorer.visible_views = (0..pool.len())
            .map(|id| {
                (0..obs.views.len())
                    .filter(|&k| renders[id].visible(k, scorer.weights.min_visible_pixels))
                    .collect()
            })
            .collect();
        scorer.fitness = (0..pool.len()).map(|id| scorer.compute_fitness(id)).collect();
        Ok(scorer)
    }

    pub fn pool(&self) -> &ProposalPool {
        self.pool
    }

    pub fn weights(&self) -> &ScoreWeights {
        &self.weights
    }

    pub fn context(&self) -> &MemberSet {
        &self.context
    }

    pub fn view_count(&self) -> usize {
        self.obs.views.len()
    }

    /// Views in which `id`'s solo render is visible.
    pub fn visible_views(&self, id: ProposalId) -> &[usize] {
        &self.visible_views[id]
    }

    pub fn is_visible(&self, id: ProposalId) -> bool {
        !self.visible_views[id].is_empty()
    }

    /// Solo-render score summed over views; `−∞` when never visible.
    pub fn fitness(&self, id: ProposalId) -> f64 {
        self.fitness[id]
    }

    pub fn fitnesses(&self) -> &[f64] {
        &self.fitness
    }

    fn pixel_terms(&self, k: usize, i: usize, d: f32, owner: u32) -> RowTerms {
        if owner == NO_OWNER {
            return RowTerms::default();
        }
        let map = &self.obs.maps[k];
        let cat = self.renders[owner as usize].category;
        let seg = map.confidence[i * Category::COUNT + cat.index()] as f64;
        let od = map.depth[i];
        let dep = if od.is_finite() && d.is_finite() {
            (od as f64 - d as f64).abs().min(self.weights.depth_cap)
        } else {
            0.0
        };
        RowTerms { seg, dep }
    }

    fn row_terms(&self, k: usize, y: usize, depth: &[f32], owner: &[u32]) -> RowTerms {
        let w = self.obs.views[k].width;
        let mut t = RowTerms::default();
        for x in 0..w {
            let p = self.pixel_terms(k, y * w + x, depth[x], owner[x]);
            t.seg += p.seg;
            t.dep += p.dep;
        }
        t
    }

    fn sum_rows(rows: impl Iterator<Item = RowTerms>) -> RowTerms {
        rows.fold(RowTerms::default(), |a, r| RowTerms {
            seg: a.seg + r.seg,
            dep: a.dep + r.dep,
        })
    }

    fn build_base(&self, k: usize) -> ViewBase {
        let view = &self.obs.views[k];
        let c = composite(self.renders, &self.context, view, k);
        let w = view.width;
        let rows: Vec<RowTerms> = (0..view.height)
            .map(|y| self.row_terms(k, y, &c.depth[y * w..(y + 1) * w], &c.owner[y * w..(y + 1) * w]))
            .collect();
        let total = Self::sum_rows(rows.iter().copied());
        ViewBase {
            depth: c.depth,
            owner: c.owner,
            rows,
            total,
        }
    }

    fn compute_fitness(&self, id: ProposalId) -> f64 {
        if self.visible_views[id].is_empty() {
            return f64::NEG_INFINITY;
        }
        let mut total = 0.0;
        for (k, patch) in self.renders[id].views.iter().enumerate() {
            let Some(patch) = patch else { continue };
            let w = self.obs.views[k].width;
            let mut seg = 0.0;
            let mut dep = 0.0;
            for y in patch.rows() {
                for x in patch.x0..patch.x0 + patch.w {
                    let d = patch.at(x, y);
                    if d.is_finite() {
                        let p = self.pixel_terms(k, y * w + x, d, id as u32);
                        seg += p.seg;
                        dep += p.dep;
                    }
                }
            }
            total += self.weights.lambda_i * seg - self.weights.lambda_d * dep;
        }
        total
    }

    /// Unweighted terms of one view with `extra` composited over the context.
    fn view_terms(&self, k: usize, extra: &[ProposalId]) -> RowTerms {
        let base = &self.base[k];
        let view = &self.obs.views[k];
        let patches: Vec<_> = extra
            .iter()
            .filter_map(|&id| self.renders[id].views[k].as_ref().map(|p| (id, p)))
            .collect();
        if patches.is_empty() {
            return base.total;
        }
        let mut touched = vec![false; view.height];
        for (_, p) in &patches {
            for y in p.rows() {
                touched[y] = true;
            }
        }
        let w = view.width;
        let mut depth = vec![0.0f32; w];
        let mut owner = vec![0u32; w];
        Self::sum_rows((0..view.height).map(|y| {
            if !touched[y] {
                return base.rows[y];
            }
            depth.copy_from_slice(&base.depth[y * w..(y + 1) * w]);
            owner.copy_from_slice(&base.owner[y * w..(y + 1) * w]);
            for (id, p) in &patches {
                if p.rows().contains(&y) {
                    overlay_row(&mut depth, &mut owner, *id, p, y);
                }
            }
            self.row_terms(k, y, &depth, &owner)
        }))
    }

    fn full_set(&self, members: &MemberSet) -> MemberSet {
        let mut full = members.clone();
        full.union_with(&self.context);
        full
    }

    fn assemble(&self, full: &MemberSet, terms: Vec<RowTerms>) -> Evaluation {
        let w = &self.weights;
        let view_scores: Vec<f64> = terms.iter().map(|t| w.lambda_i * t.seg - w.lambda_d * t.dep).collect();
        let prior = -w.lambda_p * self.pool.pair_penalty(full);
        let global = view_scores.iter().sum::<f64>() + prior;
        Evaluation {
            feasible: true,
            segmentation: terms.iter().map(|t| t.seg).sum(),
            depth_error: terms.iter().map(|t| t.dep).sum(),
            view_scores,
            prior,
            global,
        }
    }

    fn infeasible() -> Evaluation {
        Evaluation {
            feasible: false,
            view_scores: Vec::new(),
            segmentation: 0.0,
            depth_error: 0.0,
            prior: f64::NEG_INFINITY,
            global: f64::NEG_INFINITY,
        }
    }

    /// Scores `members` together with the context, through the row cache
    /// and memo.
    pub fn evaluate(&self, members: &MemberSet) -> Arc<Evaluation> {
        let mut key = members.clone();
        key.subtract(&self.context);
        if let Some(e) = self.memo.lock().expect("memo lock").get(&key) {
            return e.clone();
        }
        let full = self.full_set(&key);
        let eval = if self.pool.is_feasible(&full) {
            let extra = key.to_vec();
            let terms = (0..self.view_count()).map(|k| self.view_terms(k, &extra)).collect();
            self.assemble(&full, terms)
        } else {
            Self::infeasible()
        };
        let eval = Arc::new(eval);
        let mut memo = self.memo.lock().expect("memo lock");
        if memo.len() >= MEMO_LIMIT {
            memo.clear();
        }
        memo.insert(key, eval.clone());
        eval
    }

    /// Same result as [`Scorer::evaluate`], recomputed from full composites
    /// without any cache.
    pub fn evaluate_uncached(&self, members: &MemberSet) -> Evaluation {
        let full = self.full_set(members);
        if !self.pool.is_feasible(&full) {
            return Self::infeasible();
        }
        let terms = (0..self.view_count())
            .map(|k| {
                let view = &self.obs.views[k];
                let c = composite(self.renders, &full, view, k);
                let w = view.width;
                Self::sum_rows((0..view.height).map(|y| {
                    self.row_terms(k, y, &c.depth[y * w..(y + 1) * w], &c.owner[y * w..(y + 1) * w])
                }))
            })
            .collect();
        self.assemble(&full, terms)
    }

    pub fn global_score(&self, members: &MemberSet) -> f64 {
        self.evaluate(members).global
    }

    pub fn solution(&self, members: &MemberSet) -> SceneSolution {
        let e = self.evaluate(members);
        SceneSolution {
            members: members.to_vec(),
            global_score: e.global,
            feasible: e.feasible,
        }
    }

    /// Mean view score over the views where `id` is visible.
    pub fn view_mean(&self, id: ProposalId, eval: &Evaluation) -> Result<f64> {
        let views = &self.visible_views[id];
        if views.is_empty() {
            return Err(Error::InvisibleProposal(id));
        }
        let sum: f64 = views.iter().map(|&k| eval.view_scores[k]).sum();
        Ok(sum / views.len() as f64)
    }

    /// `−Σ IoU(o, o')` over the other members and the context.
    pub fn own_prior(&self, id: ProposalId, members: &MemberSet) -> f64 {
        let full = self.full_set(members);
        -full
            .iter()
            .filter(|&j| j != id)
            .map(|j| self.pool.compat(id, j).penalty())
            .sum::<f64>()
    }

    /// Visible-view mean plus the proposal's own weighted intersection term.
    pub fn local_score(&self, id: ProposalId, members: &MemberSet, eval: &Evaluation) -> Result<f64> {
        if !eval.feasible {
            return Ok(f64::NEG_INFINITY);
        }
        Ok(self.view_mean(id, eval)? + self.weights.lambda_p * self.own_prior(id, members))
    }

    /// Mean over all views.
    pub fn all_view_mean(&self, eval: &Evaluation) -> f64 {
        if !eval.feasible {
            return f64::NEG_INFINITY;
        }
        if eval.view_scores.is_empty() {
            return 0.0;
        }
        eval.view_scores.iter().sum::<f64>() / eval.view_scores.len() as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Vec3;
    use crate::proposals::Compatibility;
    use crate::testutil::{canonical_view, cuboid, fixture, room, side_view, Fixture};

    fn set(f: &Fixture, ids: &[usize]) -> MemberSet {
        f.set(ids)
    }

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() <= 1e-9 * (1.0 + a.abs().max(b.abs()))
    }

    #[test]
    fn empty_set_scores_zero() {
        let f = room(vec![canonical_view()]);
        let s = Scorer::new(&f.pool, &f.renders, &f.obs, ScoreWeights::default()).unwrap();
        let e = s.evaluate(&f.pool.empty_set());
        assert!(e.feasible);
        assert_eq!(e.global, 0.0);
        assert_eq!(e.view_scores, vec![0.0]);
    }

    #[test]
    fn exact_truth_scores_one_per_covered_pixel() {
        let f = room(vec![canonical_view()]);
        let s = Scorer::new(&f.pool, &f.renders, &f.obs, ScoreWeights::default()).unwrap();
        let e = s.evaluate(&set(&f, &[0, 1, 2]));
        assert_eq!(e.global, (32 * 24) as f64);
        assert_eq!(e.depth_error, 0.0);
        assert_eq!(e.prior, 0.0);
    }

    #[test]
    fn global_is_linear_in_the_weights() {
        let f = room(vec![canonical_view(), side_view()]);
        let members = set(&f, &[0, 3]);
        let w1 = ScoreWeights::default();
        let w2 = ScoreWeights {
            lambda_d: 2.0,
            ..ScoreWeights::default()
        };
        let e1 = Scorer::new(&f.pool, &f.renders, &f.obs, w1.clone()).unwrap().evaluate_uncached(&members);
        let e2 = Scorer::new(&f.pool, &f.renders, &f.obs, w2).unwrap().evaluate_uncached(&members);
        assert!(e1.depth_error > 0.0);
        assert!(close(e2.global, e1.global - e1.depth_error));
        let expect = w1.lambda_i * e1.segmentation - w1.lambda_d * e1.depth_error + e1.prior;
        assert!(close(e1.global, expect));
    }

    #[test]
    fn depth_residual_is_capped() {
        let f = room(vec![canonical_view()]);
        let wide = ScoreWeights {
            depth_cap: 100.0,
            ..ScoreWeights::default()
        };
        let members = set(&f, &[3]);
        let capped = Scorer::new(&f.pool, &f.renders, &f.obs, ScoreWeights::default()).unwrap().evaluate(&members);
        let raw = Scorer::new(&f.pool, &f.renders, &f.obs, wide).unwrap().evaluate(&members);
        let px = f.renders[3].coverage(0) as f64;
        assert!(capped.depth_error <= px * 1.0);
        assert!(raw.depth_error >= capped.depth_error);
    }

    #[test]
    fn overlapping_cuboids_pay_their_iou() {
        // Voxel boundaries offset by a quarter voxel so centres never sit on a face.
        let lo = Vec3::new(0.0125, 0.0125, 2.0125);
        let hi = Vec3::new(1.5125, 0.5125, 2.5125);
        let shift = Vec3::new(1.0, 0.0, 0.0);
        let f = fixture(
            vec![
                cuboid(Category::Chair, lo, hi),
                cuboid(Category::Table, lo + shift, hi + shift),
            ],
            vec![canonical_view()],
            &[],
        );
        match f.pool.compat(0, 1) {
            Compatibility::Tolerated(iou) => assert!(close(iou, 0.2)),
            c => panic!("expected a tolerated pair, got {c:?}"),
        }
        let s = Scorer::new(&f.pool, &f.renders, &f.obs, ScoreWeights::default()).unwrap();
        let both = set(&f, &[0, 1]);
        let e = s.evaluate(&both);
        assert!(close(e.prior, -0.5));
        // Each member is charged the shared IoU once.
        let own: f64 = [0, 1].iter().map(|&i| s.own_prior(i, &both)).sum();
        assert!(close(own, -2.0 * f.pool.pair_penalty(&both)));
    }

    #[test]
    fn incompatible_sets_are_minus_infinity() {
        let lo = Vec3::new(-0.5, -0.5, 2.0);
        let hi = Vec3::new(0.5, 0.5, 3.0);
        let f = fixture(
            vec![cuboid(Category::Chair, lo, hi), cuboid(Category::Sofa, lo, hi)],
            vec![canonical_view()],
            &[0],
        );
        assert!(f.pool.compat(0, 1).is_incompatible());
        let s = Scorer::new(&f.pool, &f.renders, &f.obs, ScoreWeights::default()).unwrap();
        let both = set(&f, &[0, 1]);
        let e = s.evaluate(&both);
        assert!(!e.feasible);
        assert_eq!(e.global, f64::NEG_INFINITY);
        assert_eq!(s.local_score(0, &both, &e).unwrap(), f64::NEG_INFINITY);
        assert_eq!(s.all_view_mean(&e), f64::NEG_INFINITY);
        assert_eq!(s.evaluate_uncached(&both), *e);
    }

    #[test]
    fn view_order_does_not_matter() {
        let f = room(vec![canonical_view(), side_view()]);
        let g = room(vec![side_view(), canonical_view()]);
        let sf = Scorer::new(&f.pool, &f.renders, &f.obs, ScoreWeights::default()).unwrap();
        let sg = Scorer::new(&g.pool, &g.renders, &g.obs, ScoreWeights::default()).unwrap();
        for ids in [&[][..], &[0], &[1, 3], &[0, 2, 3], &[0, 1, 2]] {
            let a = sf.evaluate(&set(&f, ids));
            let b = sg.evaluate(&set(&g, ids));
            assert!(close(a.global, b.global), "{ids:?}");
            assert_eq!(a.view_scores[0], b.view_scores[1]);
        }
    }

    #[test]
    fn fitness_matches_a_per_pixel_loop() {
        let f = room(vec![canonical_view(), side_view()]);
        let w = ScoreWeights::default();
        let s = Scorer::new(&f.pool, &f.renders, &f.obs, w.clone()).unwrap();
        for id in 0..4 {
            let mut want = 0.0;
            for (k, view) in f.obs.views.iter().enumerate() {
                for y in 0..view.height {
                    for x in 0..view.width {
                        let Some(patch) = &f.renders[id].views[k] else { continue };
                        let d = patch.at(x, y);
                        if !d.is_finite() {
                            continue;
                        }
                        let i = y * view.width + x;
                        let seg = f.obs.maps[k].confidence_at(i, f.renders[id].category) as f64;
                        let od = f.obs.maps[k].depth[i] as f64;
                        let dep = if od.is_finite() { (od - d as f64).abs().min(w.depth_cap) } else { 0.0 };
                        want += w.lambda_i * seg - w.lambda_d * dep;
                    }
                }
            }
            assert!(close(s.fitness(id), want), "proposal {id}");
        }
        assert_eq!(s.fitness(4), f64::NEG_INFINITY);
        assert!(!s.is_visible(4));
    }

    #[test]
    fn fitness_scales_with_the_weights() {
        let f = room(vec![canonical_view()]);
        let w = ScoreWeights::default();
        let doubled = ScoreWeights {
            lambda_i: 2.0 * w.lambda_i,
            lambda_d: 2.0 * w.lambda_d,
            ..w.clone()
        };
        let a = Scorer::new(&f.pool, &f.renders, &f.obs, w).unwrap();
        let b = Scorer::new(&f.pool, &f.renders, &f.obs, doubled).unwrap();
        for id in 0..4 {
            assert!(close(b.fitness(id), 2.0 * a.fitness(id)));
        }
    }

    #[test]
    fn cached_and_uncached_agree_on_every_subset() {
        let f = room(vec![canonical_view(), side_view()]);
        for context in [vec![], vec![0]] {
            let s = Scorer::with_context(
                &f.pool,
                &f.renders,
                &f.obs,
                ScoreWeights::default(),
                set(&f, &context),
            )
            .unwrap();
            for mask in 0u32..32 {
                let ids: Vec<usize> = (0..5).filter(|i| mask & (1 << i) != 0).collect();
                let m = set(&f, &ids);
                // Twice: the second call is served by the memo.
                assert_eq!(*s.evaluate(&m), s.evaluate_uncached(&m), "{ids:?}");
                assert_eq!(*s.evaluate(&m), s.evaluate_uncached(&m));
            }
        }
    }

    #[test]
    fn context_members_are_always_scored() {
        let f = room(vec![canonical_view()]);
        let s = Scorer::with_context(&f.pool, &f.renders, &f.obs, ScoreWeights::default(), set(&f, &[0])).unwrap();
        let plain = Scorer::new(&f.pool, &f.renders, &f.obs, ScoreWeights::default()).unwrap();
        assert_eq!(s.global_score(&f.pool.empty_set()), plain.global_score(&set(&f, &[0])));
        assert_eq!(s.global_score(&set(&f, &[1, 2])), plain.global_score(&set(&f, &[0, 1, 2])));
    }

    #[test]
    fn unseen_proposal_leaves_the_score_unchanged() {
        let f = room(vec![canonical_view(), side_view()]);
        let s = Scorer::new(&f.pool, &f.renders, &f.obs, ScoreWeights::default()).unwrap();
        for ids in [&[][..], &[0], &[0, 1, 3]] {
            let mut with = set(&f, ids);
            with.insert(4);
            assert_eq!(s.global_score(&with), s.global_score(&set(&f, ids)));
        }
    }

    #[test]
    fn local_score_is_visible_view_mean_plus_own_prior() {
        let f = room(vec![canonical_view(), side_view()]);
        let w = ScoreWeights::default();
        let s = Scorer::new(&f.pool, &f.renders, &f.obs, w.clone()).unwrap();
        let members = set(&f, &[0, 1, 3]);
        let e = s.evaluate(&members);
        for id in [0, 1, 3] {
            let views = s.visible_views(id);
            assert!(!views.is_empty());
            let mean = views.iter().map(|&k| e.view_scores[k]).sum::<f64>() / views.len() as f64;
            let want = mean - w.lambda_p * f.pool.compat(1, 3).penalty() * f64::from(id != 0);
            assert!(close(s.local_score(id, &members, &e).unwrap(), want), "proposal {id}");
        }
        assert!(matches!(s.local_score(4, &members, &e), Err(Error::InvisibleProposal(4))));
        assert!(close(s.all_view_mean(&e), e.view_scores.iter().sum::<f64>() / 2.0));
    }

    #[test]
    fn construction_errors() {
        let f = room(vec![canonical_view()]);
        let w = ScoreWeights::default();
        assert!(Scorer::new(&f.pool, &f.renders[..4], &f.obs, w.clone()).is_err());
        let other = room(vec![canonical_view(), side_view()]);
        assert!(Scorer::new(&f.pool, &other.renders, &f.obs, w.clone()).is_err());
        assert!(Scorer::with_context(&f.pool, &f.renders, &f.obs, w.clone(), MemberSet::new(200)).is_err());
        assert!(Scorer::with_context(&f.pool, &f.renders, &f.obs, w.clone(), MemberSet::from_ids(5, [7])).is_err());
        for bad in [
            ScoreWeights { lambda_i: -1.0, ..w.clone() },
            ScoreWeights { lambda_p: f64::NAN, ..w.clone() },
            ScoreWeights { depth_cap: 0.0, ..w.clone() },
        ] {
            assert!(Scorer::new(&f.pool, &f.renders, &f.obs, bad).is_err());
        }
    }

    #[test]
    fn solution_reports_members_in_order() {
        let f = room(vec![canonical_view()]);
        let s = Scorer::new(&f.pool, &f.renders, &f.obs, ScoreWeights::default()).unwrap();
        let sol = s.solution(&set(&f, &[2, 0, 1]));
        assert_eq!(sol.members, vec![0, 1, 2]);
        assert!(sol.feasible);
        assert_eq!(sol.global_score, 768.0);
    }
}
