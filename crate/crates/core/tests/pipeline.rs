use mcss::layout::{layout_candidates, RansacParams};
use mcss::mcss::{run, run_two_phase, McssConfig, RunOptions};
use mcss::metrics::polygon_iou;
use mcss::proposals::{CompatParams, MemberSet};
use mcss::scoring::{ScoreWeights, Scorer};
use mcss::synth::{brute_force, generate, presets, RoomShape};
use mcss::tree::SearchMode;

#[test]
fn u_room_walls_come_back_from_the_cloud() {
    let s = generate(&presets::room(4, RoomShape::U, 0.005), &CompatParams::default()).unwrap();
    assert_eq!(s.gt.walls.len(), 8);
    let c = layout_candidates(&s.cloud, &RansacParams::default(), 4).unwrap();
    for w in &s.gt.walls {
        let best = c.walls.iter().map(|p| polygon_iou(&p.polygon, w)).fold(0.0, f64::max);
        assert!(best >= 0.9, "{best}");
    }
}

#[test]
fn search_reaches_the_exact_optimum() {
    let s = generate(&presets::oracle(8), &CompatParams::default()).unwrap();
    let scorer = Scorer::new(&s.pool, &s.renders, &s.obs, ScoreWeights::default()).unwrap();
    let all = MemberSet::full(s.pool.len());
    let exact = brute_force(&scorer, &all).unwrap();
    let config = McssConfig {
        iterations: 1500,
        seed: 8,
        ..McssConfig::default()
    };
    let r = run(&scorer, &all, SearchMode::Object, &config, RunOptions { timing: true, trace: false }).unwrap();
    assert_eq!(r.solution.members, exact.members);
    assert_eq!(r.series.len(), 1500);
    assert!(r.series.windows(2).all(|w| w[0] <= w[1]));
    assert_eq!(*r.series.last().unwrap(), r.solution.global_score);
    assert!(r.wall_ms.windows(2).all(|w| w[0] <= w[1]));
    assert_eq!(r.convergence_csv().lines().count(), 1501);

    let staged = run_two_phase(&s.pool, &s.renders, &s.obs, &ScoreWeights::default(), &config, RunOptions::default()).unwrap();
    assert!(staged.solution.feasible);
    assert!(staged.solution.global_score <= exact.global_score);
}
