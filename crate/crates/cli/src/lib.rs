//! Command-line driver: scene generation, search, baselines, RANSAC layout
//! extraction, evaluation and ablation studies.

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use mcss::baselines::{hill_climb, random_search, HillClimbVariant};
use mcss::config::Config;
use mcss::geometry::{OrientedBox, Polygon3D, RigidPoseScale, Vec3};
use mcss::io::{parse_obj, parse_ply};
use mcss::layout::{layout_candidates, layout_corners};
use mcss::mcss::{run, run_two_phase, Backup, RunOptions, SearchResult};
use mcss::metrics::{bbox_pr, chamfer_table, corner_pr, BoxReport, ChamferTable, EvalObject, PrecisionRecall, CORNER_RADIUS};
use mcss::proposals::{Category, LayoutProposal, MemberSet, ProposalKind, ProposalPool};
use mcss::scoring::{SceneSolution, Scorer};
use mcss::synth::{brute_force, generate, presets, trap_scene, GroundTruth, SceneBundle};
use mcss::tree::SearchMode;
use mcss::{Error, Result};

#[derive(Parser, Debug)]
#[command(name = "mcss", version, about = "Monte Carlo scene search")]
pub struct Cli {
    /// TOML file with weights, search, RANSAC, compatibility and synthesis settings.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Overrides every seed in the configuration.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    /// Record wall-clock milliseconds in convergence CSVs (breaks byte-identical output).
    #[arg(long, global = true)]
    pub timing: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Generate a synthetic scene bundle.
    Synth {
        #[arg(long)]
        out: PathBuf,
        /// Write the hill-climbing trap instance instead.
        #[arg(long)]
        trap: bool,
    },
    /// Search a scene bundle.
    Search {
        #[arg(long)]
        scene: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Search this pool instead of the bundle's `pool.json`.
        #[arg(long)]
        pool: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = SearchKind::TwoPhase)]
        mode: SearchKind,
        #[arg(long)]
        iterations: Option<usize>,
        #[arg(long, value_enum)]
        backup: Option<BackupArg>,
    },
    /// Run a baseline optimizer on a scene bundle.
    Baseline {
        #[arg(long)]
        scene: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        pool: Option<PathBuf>,
        #[arg(long, value_enum)]
        method: BaselineKind,
        #[arg(long)]
        iterations: Option<usize>,
    },
    /// Detect planes and wall polygons in a point cloud and write them as a pool.
    Ransac {
        #[arg(long)]
        cloud: PathBuf,
        /// Output pool file; model paths resolve relative to its directory.
        #[arg(long)]
        out: PathBuf,
        /// Keep the object proposals of this pool.
        #[arg(long)]
        objects: Option<PathBuf>,
    },
    /// Score a solution against the bundle's ground truth.
    Eval {
        #[arg(long)]
        scene: PathBuf,
        #[arg(long)]
        solution: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run an ablation study over generated scenes and write CSV tables.
    Ablate {
        #[arg(long, value_enum)]
        study: Study,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 12)]
        scenes: u64,
        #[arg(long)]
        iterations: Option<usize>,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum SearchKind {
    TwoPhase,
    Objects,
    Layout,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum BackupArg {
    Local,
    Whole,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum BaselineKind {
    HillClimbGlobal,
    HillClimbFitness,
    Random,
    Brute,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Study {
    /// Local-score versus whole-score backup versus random search.
    LocalVsWhole,
    /// Object search with and without the layout phase.
    Layout,
}

/// A layout member of a written solution.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LayoutRecord {
    pub id: usize,
    pub category: Category,
    pub polygon: Polygon3D,
}

/// An object member of a written solution.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ObjectRecord {
    pub id: usize,
    pub category: Category,
    pub model: String,
    pub pose: [f64; 16],
    pub scale: [f64; 3],
    pub bbox: OrientedBox,
}

/// Solution file: ids plus the geometry needed to evaluate it without the pool.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolutionReport {
    pub global_score: f64,
    pub feasible: bool,
    pub members: Vec<usize>,
    pub layouts: Vec<LayoutRecord>,
    pub objects: Vec<ObjectRecord>,
}

impl SolutionReport {
    pub fn new(pool: &ProposalPool, solution: &SceneSolution) -> Self {
        let mut layouts = Vec::new();
        let mut objects = Vec::new();
        for &id in &solution.members {
            match &pool.get(id).kind {
                ProposalKind::Layout(l) => layouts.push(LayoutRecord {
                    id,
                    category: l.category,
                    polygon: l.polygon.clone(),
                }),
                ProposalKind::Object(o) => objects.push(ObjectRecord {
                    id,
                    category: o.category,
                    model: o.model.clone(),
                    pose: o.pose.to_row_major(),
                    scale: o.pose.scale.into(),
                    bbox: o.bbox.clone(),
                }),
            }
        }
        Self {
            global_score: solution.global_score,
            feasible: solution.feasible,
            members: solution.members.clone(),
            layouts,
            objects,
        }
    }
}

/// Metrics written by `eval`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub corners: PrecisionRecall,
    pub boxes: Vec<BoxReport>,
    pub chamfer: ChamferTable,
}

fn load_config(cli: &Cli) -> Result<Config> {
    let mut config = match &cli.config {
        Some(p) => Config::load(p)?,
        None => Config::default(),
    };
    if let Some(s) = cli.seed {
        config.mcss.seed = s;
        config.synth.seed = s;
    }
    Ok(config)
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            fs::create_dir_all(dir)?;
        }
    }
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

fn options(cli: &Cli) -> RunOptions {
    RunOptions {
        timing: cli.timing,
        trace: false,
    }
}

fn write_search(out: &Path, name: &str, result: &SearchResult) -> Result<()> {
    fs::write(out.join(name), result.convergence_csv())?;
    Ok(())
}

/// Runs one parsed invocation.
pub fn execute(cli: &Cli) -> Result<()> {
    let config = load_config(cli)?;
    match &cli.command {
        Command::Synth { out, trap } => {
            let scene = if *trap {
                trap_scene(config.synth.voxel_size)?
            } else {
                generate(&config.synth, &config.compat)?
            };
            scene.save(out)
        }
        Command::Search {
            scene,
            out,
            pool,
            mode,
            iterations,
            backup,
        } => {
            let bundle = load_bundle(scene, pool.as_deref())?;
            let renders = mcss::render::prerender_pool(&bundle.pool, &bundle.obs.views);
            let mut mc = config.mcss.clone();
            if let Some(n) = iterations {
                mc.iterations = *n;
            }
            if let Some(b) = backup {
                mc.backup = match b {
                    BackupArg::Local => Backup::Local,
                    BackupArg::Whole => Backup::Whole,
                };
            }
            fs::create_dir_all(out)?;
            let report = match mode {
                SearchKind::TwoPhase => {
                    let r = run_two_phase(&bundle.pool, &renders, &bundle.obs, &config.weights, &mc, options(cli))?;
                    write_search(out, "convergence_layout.csv", &r.layout)?;
                    write_search(out, "convergence.csv", &r.objects)?;
                    let pool = r.extended.as_ref().map(|(p, _)| p).unwrap_or(&bundle.pool);
                    SolutionReport::new(pool, &r.solution)
                }
                SearchKind::Objects | SearchKind::Layout => {
                    let scorer = Scorer::new(&bundle.pool, &renders, &bundle.obs, config.weights.clone())?;
                    let (allowed, smode) = if *mode == SearchKind::Objects {
                        (bundle.pool.object_ids(), SearchMode::Object)
                    } else {
                        (bundle.pool.layout_ids(Some(Category::Wall)), SearchMode::Layout)
                    };
                    let r = run(&scorer, &allowed, smode, &mc, options(cli))?;
                    write_search(out, "convergence.csv", &r)?;
                    SolutionReport::new(&bundle.pool, &r.solution)
                }
            };
            write_solution(out, &pool_dir(scene, pool.as_deref()), report)
        }
        Command::Baseline {
            scene,
            out,
            pool,
            method,
            iterations,
        } => {
            let bundle = load_bundle(scene, pool.as_deref())?;
            let renders = mcss::render::prerender_pool(&bundle.pool, &bundle.obs.views);
            let scorer = Scorer::new(&bundle.pool, &renders, &bundle.obs, config.weights.clone())?;
            let all = MemberSet::full(bundle.pool.len());
            fs::create_dir_all(out)?;
            let solution = match method {
                BaselineKind::HillClimbGlobal => hill_climb(&scorer, &all, HillClimbVariant::GlobalScore),
                BaselineKind::HillClimbFitness => hill_climb(&scorer, &all, HillClimbVariant::Fitness),
                BaselineKind::Brute => brute_force(&scorer, &all)?,
                BaselineKind::Random => {
                    let n = iterations.unwrap_or(config.mcss.iterations);
                    let r = random_search(&scorer, &all, SearchMode::Object, n, config.mcss.seed, options(cli))?;
                    write_search(out, "convergence.csv", &r)?;
                    r.solution
                }
            };
            write_solution(out, &pool_dir(scene, pool.as_deref()), SolutionReport::new(&bundle.pool, &solution))
        }
        Command::Ransac { cloud, out, objects } => {
            let points = parse_ply(&fs::read_to_string(cloud)?)?;
            let found = layout_candidates(&points, &config.ransac, config.mcss.seed)?;
            let (mut kinds, voxel, compat) = match objects {
                Some(p) => {
                    let pool = ProposalPool::load(p)?;
                    let from = dir_of(p).canonicalize()?;
                    let to = dir_of(out);
                    fs::create_dir_all(to)?;
                    let to = to.canonicalize()?;
                    let mut kinds = Vec::new();
                    for q in pool.proposals().iter().filter(|q| !q.is_layout()) {
                        let mut kind = q.kind.clone();
                        if let ProposalKind::Object(o) = &mut kind {
                            o.model = rebase(&o.model, &from, &to);
                        }
                        kinds.push(kind);
                    }
                    (kinds, pool.voxel_size(), pool.params().clone())
                }
                None => (Vec::new(), config.synth.voxel_size, config.compat.clone()),
            };
            kinds.extend(found.walls.into_iter().map(ProposalKind::Layout));
            let pool = ProposalPool::new(kinds, voxel, compat);
            if let Some(dir) = out.parent() {
                if !dir.as_os_str().is_empty() {
                    fs::create_dir_all(dir)?;
                }
            }
            fs::write(out, pool.to_json())?;
            Ok(())
        }
        Command::Eval { scene, solution, out } => {
            let report = evaluate_files(scene, solution)?;
            match out {
                Some(p) => write_json(p, &report),
                None => {
                    use std::io::Write;
                    let text = serde_json::to_string_pretty(&report)?;
                    match writeln!(std::io::stdout().lock(), "{text}") {
                        Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => Ok(()),
                        r => Ok(r?),
                    }
                }
            }
        }
        Command::Ablate {
            study,
            out,
            scenes,
            iterations,
        } => {
            fs::create_dir_all(out)?;
            match study {
                Study::LocalVsWhole => {
                    let rows = ablation::local_vs_whole(&config, *scenes, iterations.unwrap_or(500), cli.timing)?;
                    ablation::write_local_vs_whole(out, &rows)
                }
                Study::Layout => {
                    let rows = ablation::layout_benefit(&config, *scenes, iterations.unwrap_or(300))?;
                    ablation::write_layout(out, &rows)
                }
            }
        }
    }
}

fn dir_of(path: &Path) -> &Path {
    match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    }
}

/// Rewrites a model path relative to `from` so it resolves from `to`.
fn rebase(model: &str, from: &Path, to: &Path) -> String {
    if from == to {
        return model.to_string();
    }
    let target = from.join(model);
    let target = target.canonicalize().unwrap_or(target);
    pathdiff::diff_paths(&target, to)
        .unwrap_or(target)
        .to_string_lossy()
        .replace('\\', "/")
}

fn pool_dir(scene: &Path, pool: Option<&Path>) -> PathBuf {
    pool.map(|p| dir_of(p).to_path_buf()).unwrap_or_else(|| scene.to_path_buf())
}

/// Writes `solution.json` with model paths relative to `out`.
fn write_solution(out: &Path, pool_dir: &Path, mut report: SolutionReport) -> Result<()> {
    fs::create_dir_all(out)?;
    let (from, to) = (pool_dir.canonicalize()?, out.canonicalize()?);
    for o in &mut report.objects {
        o.model = rebase(&o.model, &from, &to);
    }
    write_json(&out.join("solution.json"), &report)
}

fn load_bundle(scene: &Path, pool: Option<&Path>) -> Result<SceneBundle> {
    let mut bundle = SceneBundle::load(scene)?;
    if let Some(p) = pool {
        bundle.pool = ProposalPool::load(p)?;
    }
    Ok(bundle)
}

fn load_mesh(scene: &Path, model: &str) -> Result<mcss::geometry::TriangleMesh> {
    parse_obj(&fs::read_to_string(scene.join(model))?)
}

fn eval_object(base: &Path, category: Category, model: &str, pose: &[f64; 16], scale: [f64; 3], bbox: &OrientedBox) -> Result<EvalObject> {
    let pose = RigidPoseScale::from_row_major(pose, Vec3::from(scale))?;
    Ok(EvalObject {
        category,
        mesh: load_mesh(base, model)?.transformed(&pose),
        bbox: bbox.clone(),
    })
}

/// Corner, box and Chamfer metrics of a solution file against `gt.json`.
pub fn evaluate_files(scene: &Path, solution: &Path) -> Result<EvalReport> {
    let gt: GroundTruth = serde_json::from_str(&fs::read_to_string(scene.join("gt.json"))?)?;
    let sol: SolutionReport = serde_json::from_str(&fs::read_to_string(solution)?)?;
    evaluate(scene, &gt, dir_of(solution), &sol)
}

/// Ground-truth models resolve from `scene`, solution models from `solution_dir`.
pub fn evaluate(scene: &Path, gt: &GroundTruth, solution_dir: &Path, sol: &SolutionReport) -> Result<EvalReport> {
    let walls: Vec<LayoutProposal> = sol
        .layouts
        .iter()
        .filter(|l| l.category == Category::Wall)
        .map(|l| LayoutProposal {
            category: l.category,
            polygon: l.polygon.clone(),
            plane_id: 0,
            edge_ids: Vec::new(),
        })
        .collect();
    let refs: Vec<&LayoutProposal> = walls.iter().collect();
    let corners = corner_pr(&layout_corners(&refs), &gt.corners(), CORNER_RADIUS);
    let pred_boxes: Vec<_> = sol.objects.iter().map(|o| (o.bbox.clone(), o.category)).collect();
    let gt_boxes = gt.boxes();
    let boxes = [0.5, 0.75]
        .into_iter()
        .map(|t| bbox_pr(&pred_boxes, &gt_boxes, t))
        .collect::<Result<Vec<_>>>()?;
    let pred: Vec<EvalObject> = sol
        .objects
        .iter()
        .map(|o| eval_object(solution_dir, o.category, &o.model, &o.pose, o.scale, &o.bbox))
        .collect::<Result<_>>()?;
    let gts: Vec<EvalObject> = gt
        .objects
        .iter()
        .map(|o| eval_object(scene, o.category, &o.model, &o.pose, o.scale, &o.bbox))
        .collect::<Result<_>>()?;
    let chamfer = chamfer_table(&pred, &gts, 0.5, 2000, 0)?;
    Ok(EvalReport {
        corners,
        boxes,
        chamfer,
    })
}

pub mod ablation {
    //! Ablation studies over generated scenes.

    use super::*;

    /// One scene of the backup ablation.
    #[derive(Clone, Debug, Serialize)]
    pub struct BackupRow {
        pub scene: u64,
        pub proposals: usize,
        pub local: f64,
        pub whole: f64,
        pub random: f64,
        pub hill_climb: f64,
        pub ground_truth: f64,
        #[serde(skip)]
        pub curves: Vec<(&'static str, SearchResult)>,
    }

    /// Local versus whole backup versus random search on crowded scenes.
    /// Random search gets the same number of simulations as MCSS.
    pub fn local_vs_whole(config: &Config, scenes: u64, iterations: usize, timing: bool) -> Result<Vec<BackupRow>> {
        let opts = RunOptions { timing, trace: false };
        let mut rows = Vec::new();
        for k in 0..scenes {
            let seed = config.synth.seed.wrapping_add(k);
            let scene = generate(&presets::crowded(seed), &config.compat)?;
            let ctx = MemberSet::from_ids(
                scene.pool.len(),
                scene.gt.pool_ids.iter().copied().filter(|&i| scene.pool.get(i).is_layout()),
            );
            let scorer = Scorer::with_context(&scene.pool, &scene.renders, &scene.obs, config.weights.clone(), ctx)?;
            let objects = scene.pool.object_ids();
            let mut mc = config.mcss.clone();
            mc.iterations = iterations;
            mc.seed = config.mcss.seed.wrapping_add(k);
            mc.backup = Backup::Local;
            let local = run(&scorer, &objects, SearchMode::Object, &mc, opts)?;
            mc.backup = Backup::Whole;
            let whole = run(&scorer, &objects, SearchMode::Object, &mc, opts)?;
            let random = random_search(
                &scorer,
                &objects,
                SearchMode::Object,
                iterations * mc.object_simulations,
                mc.seed,
                opts,
            )?;
            let hc = hill_climb(&scorer, &objects, HillClimbVariant::GlobalScore);
            let gt = MemberSet::from_ids(scene.pool.len(), scene.gt.pool_ids.iter().copied());
            rows.push(BackupRow {
                scene: seed,
                proposals: scene.pool.len(),
                local: local.solution.global_score,
                whole: whole.solution.global_score,
                random: random.solution.global_score,
                hill_climb: hc.global_score,
                ground_truth: scorer.global_score(&gt),
                curves: vec![("local", local), ("whole", whole), ("random", random)],
            });
        }
        Ok(rows)
    }

    pub fn write_local_vs_whole(out: &Path, rows: &[BackupRow]) -> Result<()> {
        let mut summary = csv::Writer::from_path(out.join("summary.csv")).map_err(csv_error)?;
        for r in rows {
            summary.serialize(r).map_err(csv_error)?;
        }
        summary.flush()?;
        let mut curves = csv::Writer::from_path(out.join("curves.csv")).map_err(csv_error)?;
        curves
            .write_record(["scene", "variant", "iteration", "best_global_score", "wall_ms"])
            .map_err(csv_error)?;
        for r in rows {
            for (name, res) in &r.curves {
                for (i, (s, ms)) in res.series.iter().zip(&res.wall_ms).enumerate() {
                    curves
                        .write_record([
                            r.scene.to_string(),
                            name.to_string(),
                            (i + 1).to_string(),
                            format!("{s:?}"),
                            ms.to_string(),
                        ])
                        .map_err(csv_error)?;
                }
            }
        }
        curves.flush()?;
        Ok(())
    }

    /// One scene of the layout ablation.
    #[derive(Clone, Debug, PartialEq, Serialize)]
    pub struct LayoutRow {
        pub scene: u64,
        pub precision_with: Option<f64>,
        pub precision_without: Option<f64>,
        pub recall_with: Option<f64>,
        pub recall_without: Option<f64>,
    }

    /// Box precision at IoU 0.5 of two-phase search versus object search
    /// without layout context, on scenes with wall-embedded decoys.
    pub fn layout_benefit(config: &Config, scenes: u64, iterations: usize) -> Result<Vec<LayoutRow>> {
        let mut rows = Vec::new();
        for k in 0..scenes {
            let seed = config.synth.seed.wrapping_add(k);
            let scene = generate(&presets::wall_decoys(seed), &config.compat)?;
            let mut mc = config.mcss.clone();
            mc.iterations = iterations;
            mc.seed = config.mcss.seed.wrapping_add(k);
            let two = run_two_phase(&scene.pool, &scene.renders, &scene.obs, &config.weights, &mc, RunOptions::default())?;
            let scorer = Scorer::new(&scene.pool, &scene.renders, &scene.obs, config.weights.clone())?;
            let one = run(&scorer, &scene.pool.object_ids(), SearchMode::Object, &mc, RunOptions::default())?;
            let boxes = |pool: &ProposalPool, members: &[usize]| -> Vec<(OrientedBox, Category)> {
                members
                    .iter()
                    .filter_map(|&i| pool.get(i).as_object())
                    .map(|o| (o.bbox.clone(), o.category))
                    .collect()
            };
            let gt = scene.gt.boxes();
            let two_pool = two.extended.as_ref().map(|(p, _)| p).unwrap_or(&scene.pool);
            let with = bbox_pr(&boxes(two_pool, &two.solution.members), &gt, 0.5)?.overall;
            let without = bbox_pr(&boxes(&scene.pool, &one.solution.members), &gt, 0.5)?.overall;
            rows.push(LayoutRow {
                scene: seed,
                precision_with: with.precision,
                precision_without: without.precision,
                recall_with: with.recall,
                recall_without: without.recall,
            });
        }
        Ok(rows)
    }

    pub fn write_layout(out: &Path, rows: &[LayoutRow]) -> Result<()> {
        let mut w = csv::Writer::from_path(out.join("summary.csv")).map_err(csv_error)?;
        for r in rows {
            w.serialize(r).map_err(csv_error)?;
        }
        w.flush()?;
        Ok(())
    }

    fn csv_error(e: csv::Error) -> Error {
        match e.into_kind() {
            csv::ErrorKind::Io(io) => Error::Io(io),
            other => Error::Io(std::io::Error::other(format!("{other:?}"))),
        }
    }
}

/// Sizes the global rayon pool. A pool that already exists is kept.
pub fn configure_threads(jobs: Option<usize>) -> Result<()> {
    if let Some(j) = jobs {
        if j == 0 {
            return Err(Error::Config("--jobs must be at least 1".into()));
        }
        let _ = rayon::ThreadPoolBuilder::new().num_threads(j).build_global();
    }
    Ok(())
}
