use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use eigenoptions::env::{maps, parse_map, FeatureMap, GridWorld, MapError};
use eigenoptions::io::fmt17;
use eigenoptions::learn::{multitask_eval, paired_difference, paired_wins, q_learning_with_options, LearnConfig, LearnError, LearningCurve};
use eigenoptions::linalg::max_principal_angle;
use eigenoptions::metrics::{diffusion_sweep, diffusion_time, diffusion_time_mc, mean_option_duration, sweep_to_csv, Arrival, DiffusionSpec, McSettings, MetricsError, SweepRow};
use eigenoptions::options::{
    bottleneck_options, default_cap, discover as discover_options, eigenoption, option_trajectory, random_subgoal_option, random_subgoal_orderings, MarkovOption,
    OptionsError, RolloutEnd,
};
use eigenoptions::sampled::{collect_exhaustive, collect_transitions, greedy_option_action, svd_eigenpurposes, verify_incidence_gram, IncidenceMatrix, SampledError, SingularOrder};
use eigenoptions::spectral::{build_graph, eig_sym, laplacian, purposes_to_json, pvf_sequence, LaplacianKind, SpectralError, EIG_TOL};
use eigenoptions::Eigenpurpose;
use serde_json::json;
use thiserror::Error;

use crate::manifest::{sha256_hex, Manifest, MapRecord};
use crate::spec::{Cell, OptionSpec, Task};
use crate::{ArrivalArg, FeaturesArg, LearnArgs, MapArg, OutArg, SpectralArgs};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("verification failed: {0}")]
    Verification(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Verification(_) => 2,
            CliError::Numerical(_) => 3,
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Usage(e.to_string())
    }
}

impl From<MapError> for CliError {
    fn from(e: MapError) -> Self {
        CliError::Usage(format!("map: {e}"))
    }
}

impl From<SpectralError> for CliError {
    fn from(e: SpectralError) -> Self {
        match e {
            SpectralError::CountOutOfRange { .. } | SpectralError::ZeroDegree(_) => CliError::Usage(e.to_string()),
            _ => CliError::Numerical(e.to_string()),
        }
    }
}

impl From<OptionsError> for CliError {
    fn from(e: OptionsError) -> Self {
        match e {
            OptionsError::Spectral(s) => s.into(),
            OptionsError::NotFourRoom(_) | OptionsError::InvalidGamma(_) | OptionsError::NotInitiable(_) => CliError::Usage(e.to_string()),
            _ => CliError::Numerical(e.to_string()),
        }
    }
}

impl From<MetricsError> for CliError {
    fn from(e: MetricsError) -> Self {
        match e {
            MetricsError::Options(o) => o.into(),
            MetricsError::TooSmall => CliError::Usage(e.to_string()),
            _ => CliError::Numerical(e.to_string()),
        }
    }
}

impl From<LearnError> for CliError {
    fn from(e: LearnError) -> Self {
        match e {
            LearnError::Options(o) => o.into(),
            _ => CliError::Usage(e.to_string()),
        }
    }
}

impl From<SampledError> for CliError {
    fn from(e: SampledError) -> Self {
        match e {
            SampledError::Spectral(s) => s.into(),
            _ => CliError::Usage(e.to_string()),
        }
    }
}

type Result<T> = std::result::Result<T, CliError>;

struct LoadedMap {
    source: String,
    text: String,
    world: GridWorld,
}

impl LoadedMap {
    fn record(&self) -> MapRecord {
        MapRecord {
            source: self.source.clone(),
            sha256: sha256_hex(&self.text),
            states: self.world.num_states(),
        }
    }
}

fn load_map(arg: &str) -> Result<LoadedMap> {
    let wanted = arg.replace('-', "_");
    if let Some((name, text)) = maps::all().into_iter().find(|(n, _)| *n == wanted) {
        return Ok(LoadedMap {
            source: name.into(),
            text: text.into(),
            world: parse_map(text)?,
        });
    }
    let text = std::fs::read_to_string(arg).map_err(|e| CliError::Usage(format!("cannot read map {arg:?}: {e}")))?;
    let world = parse_map(&text).map_err(|e| CliError::Usage(format!("{arg}: {e}")))?;
    Ok(LoadedMap {
        source: arg.into(),
        text,
        world,
    })
}

/// Collects files under the output directory and records them in the manifest.
struct Output {
    dir: PathBuf,
    manifest: Manifest,
}

impl Output {
    fn new(out: &OutArg, manifest: Manifest) -> Result<Self> {
        std::fs::create_dir_all(&out.out_dir)?;
        Ok(Self {
            dir: out.out_dir.clone(),
            manifest,
        })
    }

    fn write(&mut self, name: &str, contents: &str) -> Result<()> {
        let path = self.dir.join(name);
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent)?;
        }
        std::fs::write(&path, contents)?;
        self.manifest.outputs.push(name.into());
        Ok(())
    }

    fn finish(self) -> Result<()> {
        std::fs::write(self.dir.join("manifest.json"), self.manifest.finish())?;
        Ok(())
    }
}

fn state_of(world: &GridWorld, cell: Cell, what: &str) -> Result<usize> {
    world
        .state_at(cell.row, cell.col)
        .ok_or_else(|| CliError::Usage(format!("{what} {cell} is not a free cell")))
}

fn cell_list(world: &GridWorld, states: &[usize]) -> String {
    states
        .iter()
        .map(|&s| {
            let (r, c) = world.cell(s);
            format!("({r},{c})")
        })
        .collect::<Vec<_>>()
        .join(" ")
}

fn build_options(world: &GridWorld, spectral: &SpectralArgs, spec: OptionSpec, seed: u64) -> Result<Vec<MarkovOption>> {
    let n = world.num_states();
    match spec {
        OptionSpec::None => Ok(vec![]),
        OptionSpec::Eigen(count) => {
            if count / 2 > n {
                return Err(CliError::Usage(format!("{count} eigenoptions need {} eigenvectors; the map has {n} states", count / 2)));
            }
            let eo = discover_options(world, spectral.laplacian, count / 2, spectral.gamma)?;
            Ok(eo.into_iter().map(|e| e.option).collect())
        }
        OptionSpec::Random(count) => {
            if count > n {
                return Err(CliError::Usage(format!("{count} random subgoals requested; the map has {n} states")));
            }
            let order = random_subgoal_orderings(world, 1, seed).remove(0);
            Ok(order[..count].iter().map(|&s| random_subgoal_option(world, s)).collect())
        }
        OptionSpec::Bottleneck => bottleneck_options(world).map_err(Into::into),
    }
}

fn option_file_stem(e: &Eigenpurpose) -> String {
    let sign = if e.sign == eigenoptions::Sign::Positive { "pos" } else { "neg" };
    format!("rank{:03}_{sign}", e.rank)
}

pub fn discover(map: &MapArg, spectral: &SpectralArgs, k: usize, out: &OutArg) -> Result<()> {
    let m = load_map(&map.map)?;
    let g = &m.world;
    let mut manifest = Manifest::new(
        "discover",
        json!({"laplacian": spectral.laplacian, "gamma": spectral.gamma, "k": k, "features": "tabular-one-hot"}),
    );
    manifest.maps.push(m.record());
    let mut o = Output::new(out, manifest)?;

    let eo = discover_options(g, spectral.laplacian, k, spectral.gamma)?;
    let purposes: Vec<Eigenpurpose> = eo.iter().map(|e| e.purpose.clone()).collect();
    o.write("purposes.json", &purposes_to_json(&purposes))?;

    let doors = g.doorways();
    let mut summary = String::from("option\tinitiation\ttermination\tdoorway\tmean_duration\ttermination_cells\n");
    for e in &eo {
        let stem = option_file_stem(&e.purpose);
        o.write(&format!("options/{stem}.json"), &e.to_json())?;
        o.write(&format!("options/{stem}.txt"), &e.option.render(g))?;
        let term = e.option.termination_states();
        let in_door = term.iter().any(|s| doors.contains(s));
        let duration = if e.option.initiation_states().is_empty() {
            "-".to_string()
        } else {
            format!("{:.3}", mean_option_duration(g, &e.option)?)
        };
        writeln!(
            summary,
            "{}\t{}\t{}\t{}\t{duration}\t{}",
            e.purpose.label(),
            e.option.initiation_states().len(),
            term.len(),
            if in_door { "yes" } else { "no" },
            cell_list(g, &term)
        )
        .expect("write to string");
    }
    let first_door = eo
        .iter()
        .filter(|e| !e.option.initiation_states().is_empty())
        .find(|e| e.option.termination_states().iter().any(|s| doors.contains(s)))
        .map_or("none".to_string(), |e| e.purpose.label());
    writeln!(summary, "# doorways: {}; first non-vacuous doorway-terminating option: {first_door}", cell_list(g, &doors)).expect("write to string");
    o.write("summary.tsv", &summary)?;

    for e in &eo {
        println!("option {} (eigenvalue {:.6})", e.purpose.label(), e.purpose.eigenvalue);
        print!("{}", e.option.render(g));
    }
    print!("{summary}");
    o.finish()
}

#[allow(clippy::too_many_arguments)]
pub fn diffusion(map: &MapArg, spectral: &SpectralArgs, spec: &OptionSpec, mc_walks: usize, mc_cap: usize, seed: u64, arrival: ArrivalArg, out: &OutArg) -> Result<()> {
    if !matches!(spec, OptionSpec::Eigen(_) | OptionSpec::Random(_)) {
        return Err(CliError::Usage("diffusion sweeps need --options eigen:N or random:N".into()));
    }
    let m = load_map(&map.map)?;
    let g = &m.world;
    let arrival = match arrival {
        ArrivalArg::FirstVisit => Arrival::FirstVisit,
        ArrivalArg::DecisionPoints => Arrival::DecisionPointsOnly,
    };
    let mut manifest = Manifest::new(
        "diffusion",
        json!({
            "laplacian": spectral.laplacian, "gamma": spectral.gamma, "options": spec.to_string(),
            "mc_walks": mc_walks, "mc_cap": mc_cap,
            "arrival": if arrival == Arrival::FirstVisit { "first-visit" } else { "decision-points" },
        }),
    );
    manifest.maps.push(m.record());
    manifest.seeds.push(seed);
    let mut o = Output::new(out, manifest)?;

    let options = build_options(g, spectral, *spec, seed)?;
    let mc = (mc_walks > 0).then_some(McSettings {
        walks: mc_walks,
        cap: mc_cap,
        seed,
    });
    let rows = diffusion_sweep(g, &options, options.len(), arrival, mc)?;
    o.write("diffusion.csv", &sweep_to_csv(&rows))?;
    print!("{}", sweep_to_csv(&rows));

    if let Ok(b) = bottleneck_options(g) {
        let mut bspec = DiffusionSpec::new(g, &b)?;
        bspec.arrival = arrival;
        let row = SweepRow {
            option_count: b.len(),
            diffusion_time: diffusion_time(&bspec)?,
            mc: mc.map(|m| diffusion_time_mc(&bspec, m.walks, m.cap, m.seed)),
        };
        let csv = sweep_to_csv(&[row]);
        o.write("diffusion_bottleneck.csv", &csv)?;
        print!("# bottleneck options only\n{}", csv.lines().nth(1).unwrap_or_default());
        println!();
    }
    if let Some(capped) = rows.iter().filter_map(|r| r.mc).map(|m| m.capped).max().filter(|&c| c > 0) {
        o.manifest.notes.push(format!("up to {capped} Monte Carlo walks per row hit the step cap"));
    }
    o.finish()
}

fn task_states(g: &GridWorld, start: Option<Cell>, goal: Option<Cell>) -> Result<(usize, usize)> {
    let start = match start {
        Some(c) => state_of(g, c, "start")?,
        None => g.start().ok_or_else(|| CliError::Usage("map has no S cell; pass --start".into()))?,
    };
    let goal = match goal {
        Some(c) => state_of(g, c, "goal")?,
        None => g.goal().ok_or_else(|| CliError::Usage("map has no G cell; pass --goal".into()))?,
    };
    Ok((start, goal))
}

fn learn_config(spectral: &SpectralArgs, learn: &LearnArgs, episodes: usize, start: usize, goal: usize) -> LearnConfig {
    LearnConfig {
        alpha: learn.alpha,
        gamma: spectral.gamma,
        episodes: learn.episodes.unwrap_or(episodes),
        episode_len: learn.episode_len,
        trials: learn.trials,
        start,
        goal,
    }
}

const METRIC_NOTE: &str = "per-episode value: discounted return gamma^(steps-1) of the greedy policy rolled out from the start for at most episode_len steps, 0 if the goal is not reached";

fn curve_summary_row(label: &str, c: &LearningCurve, baseline: Option<&LearningCurve>) -> String {
    format!(
        "{label},{},{},{},{}\n",
        fmt17(c.area()),
        fmt17(c.final_value()),
        c.episodes_to_fraction(0.9).map_or(String::new(), |e| e.to_string()),
        baseline.map_or(String::new(), |b| paired_wins(c, b).to_string())
    )
}

#[allow(clippy::too_many_arguments)]
pub fn learn(map: &MapArg, spectral: &SpectralArgs, specs: &[OptionSpec], start: Option<Cell>, goal: Option<Cell>, learn: &LearnArgs, out: &OutArg) -> Result<()> {
    let m = load_map(&map.map)?;
    let g = &m.world;
    let (s, goal) = task_states(g, start, goal)?;
    let cfg = learn_config(spectral, learn, 500, s, goal);
    cfg.validate(g)?;
    let mut manifest = Manifest::new(
        "learn",
        json!({"config": cfg, "laplacian": spectral.laplacian, "options": specs.iter().map(|s| s.to_string()).collect::<Vec<_>>()}),
    );
    manifest.maps.push(m.record());
    manifest.notes.push(METRIC_NOTE.into());
    let mut o = Output::new(out, manifest)?;

    let mut curves = vec![];
    for &spec in specs {
        let options = build_options(g, spectral, spec, learn.seed)?;
        let curve = q_learning_with_options(g, &options, &cfg, learn.seed)?;
        o.write(&format!("curve_{}.csv", spec.label()), &curve.to_csv())?;
        curves.push((spec, curve));
    }
    if let Some((_, c)) = curves.first() {
        o.manifest.seeds = c.seeds.clone();
    }
    let baseline = curves.iter().find(|(s, _)| *s == OptionSpec::None).map(|(_, c)| c.clone());
    let mut summary = String::from("options,area,final_value,episodes_to_90pct,area_wins_vs_none\n");
    for (spec, c) in &curves {
        let against = baseline.as_ref().filter(|_| *spec != OptionSpec::None);
        summary += &curve_summary_row(&spec.to_string(), c, against);
    }
    o.write("summary.csv", &summary)?;
    print!("{summary}");
    o.finish()
}

pub fn multitask(map: &MapArg, spectral: &SpectralArgs, spec: &OptionSpec, tasks: &[Task], learn: &LearnArgs, out: &OutArg) -> Result<()> {
    let m = load_map(&map.map)?;
    let g = &m.world;
    let pairs = tasks
        .iter()
        .map(|t| Ok((state_of(g, t.start, "start")?, state_of(g, t.goal, "goal")?)))
        .collect::<Result<Vec<_>>>()?;
    let first = pairs.first().copied().ok_or_else(|| CliError::Usage("no tasks".into()))?;
    let cfg = learn_config(spectral, learn, 250, first.0, first.1);
    let mut manifest = Manifest::new(
        "multitask",
        json!({
            "config": cfg, "laplacian": spectral.laplacian, "options": spec.to_string(),
            "tasks": tasks.iter().map(|t| format!("{}:{}", t.start, t.goal)).collect::<Vec<_>>(),
        }),
    );
    manifest.maps.push(m.record());
    manifest.notes.push(METRIC_NOTE.into());
    manifest.notes.push("start and goal fields of config are per task; swapped tasks are added automatically".into());
    let mut o = Output::new(out, manifest)?;

    let options = build_options(g, spectral, *spec, learn.seed)?;
    let results = multitask_eval(g, &options, &pairs, &cfg, learn.seed)?;
    o.manifest.seeds = results[0].options.seeds.clone();

    let mut summary = String::from("start,goal,agent,area,final_value,episodes_to_90pct,area_wins_vs_primitives\n");
    for r in &results {
        let (sr, sc) = g.cell(r.start);
        let (gr, gc) = g.cell(r.goal);
        let tag = format!("{sr}_{sc}-{gr}_{gc}");
        let mut agents = vec![(spec.label(), &r.options), ("none".to_string(), &r.primitives)];
        if let Some(b) = &r.bottleneck {
            agents.push(("bottleneck".into(), b));
        }
        for (name, c) in agents {
            o.write(&format!("task_{tag}_{name}.csv"), &c.to_csv())?;
            summary += &format!("\"{sr},{sc}\",\"{gr},{gc}\",") ;
            let against = (name != "none").then_some(&r.primitives);
            summary += &curve_summary_row(&name, c, against);
        }
    }
    let mut swaps = String::from("task,swapped,area_difference,paired_stderr\n");
    for (i, a) in results.iter().enumerate() {
        if let Some(b) = results[i + 1..].iter().find(|b| b.start == a.goal && b.goal == a.start) {
            let (d, se) = paired_difference(&a.options, &b.options);
            let fmt = |s: usize| {
                let (r, c) = g.cell(s);
                format!("{r},{c}")
            };
            swaps += &format!("\"{}:{}\",\"{}:{}\",{},{}\n", fmt(a.start), fmt(a.goal), fmt(b.start), fmt(b.goal), fmt17(d), fmt17(se));
        }
    }
    o.write("summary.csv", &summary)?;
    o.write("swaps.csv", &swaps)?;
    print!("{summary}{swaps}");
    o.finish()
}

#[allow(clippy::too_many_arguments)]
pub fn sampled(map: &MapArg, features: FeaturesArg, budget: usize, incidence: Option<&Path>, k: usize, seed: u64, out: &OutArg) -> Result<()> {
    let m = load_map(&map.map)?;
    let g = &m.world;
    let f = match features {
        FeaturesArg::Tabular => FeatureMap::TabularOneHot,
        FeaturesArg::Coordinates => FeatureMap::CoordinateSynthetic,
    };
    let mut manifest = Manifest::new(
        "sampled",
        json!({"features": f, "budget": budget, "k": k, "incidence": incidence.map(|p| p.display().to_string())}),
    );
    manifest.maps.push(m.record());
    manifest.seeds.push(seed);
    let mut o = Output::new(out, manifest)?;

    let t = match incidence {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))?;
            let t = IncidenceMatrix::from_csv(&text)?;
            if t.feature_dim() != f.dim(g) {
                return Err(SampledError::DimensionMismatch {
                    expected: f.dim(g),
                    found: t.feature_dim(),
                }
                .into());
            }
            t
        }
        None if budget == 0 => collect_exhaustive(g, f),
        None => collect_transitions(g, f, budget, seed),
    };
    o.write("incidence.csv", &t.to_csv())?;
    let purposes = svd_eigenpurposes(&t, k, SingularOrder::Ascending)?;
    o.write("purposes.json", &purposes_to_json(&purposes))?;

    println!("incidence matrix: {} distinct rows, {} columns", t.len(), t.feature_dim());
    for p in &purposes {
        let mut grid = String::new();
        for row in 0..g.height() {
            for col in 0..g.width() {
                grid.push(g.state_at(row, col).map_or('#', |s| greedy_option_action(g, f, p, s).glyph()));
            }
            grid.push('\n');
        }
        let sign = if p.sign == eigenoptions::Sign::Positive { "pos" } else { "neg" };
        o.write(&format!("greedy/rank{:03}_{sign}.txt", p.rank), &grid)?;
        println!("purpose {} (singular value {:.6}), one-step greedy actions:", p.label(), p.eigenvalue);
        print!("{grid}");
    }
    if f == FeatureMap::TabularOneHot {
        let l = laplacian(&build_graph(g), LaplacianKind::Combinatorial)?;
        let complete = collect_exhaustive(g, f).len();
        println!(
            "max |TᵀT − 2L| = {:e} ({} of {complete} transitions present; zero only when all are)",
            verify_incidence_gram(&t, &l)?,
            t.len()
        );
    }
    o.finish()
}

/// Largest principal angle between each Laplacian eigenspace and the matching
/// right-singular subspace of the incidence matrix.
fn svd_laplacian_angle(g: &GridWorld, t: &IncidenceMatrix) -> Result<f64> {
    let n = g.num_states();
    let l = laplacian(&build_graph(g), LaplacianKind::Combinatorial)?;
    let eig = eig_sym(&l, EIG_TOL)?;
    let svd: Vec<Vec<f64>> = svd_eigenpurposes(t, n, SingularOrder::Ascending)?
        .into_iter()
        .filter(|p| p.sign == eigenoptions::Sign::Positive)
        .map(|p| p.vector)
        .collect();
    Ok(eig.groups().into_iter().map(|r| max_principal_angle(&eig.vectors[r.clone()], &svd[r])).fold(0.0, f64::max))
}

pub fn verify(map_args: &[String], kind: LaplacianKind, gammas: &[f64], incidence: Option<&Path>, out: &OutArg) -> Result<()> {
    let names: Vec<String> = if map_args.is_empty() {
        maps::all().iter().map(|(n, _)| n.to_string()).collect()
    } else {
        map_args.to_vec()
    };
    if incidence.is_some() && names.len() != 1 {
        return Err(CliError::Usage("--incidence needs exactly one --map".into()));
    }
    let mut manifest = Manifest::new(
        "verify",
        json!({"laplacian": kind, "gammas": gammas, "incidence": incidence.map(|p| p.display().to_string())}),
    );
    let loaded = names.iter().map(|n| load_map(n)).collect::<Result<Vec<_>>>()?;
    manifest.maps = loaded.iter().map(LoadedMap::record).collect();
    let mut o = Output::new(out, manifest)?;

    let mut report = String::new();
    let mut failed = vec![];
    let line = |report: &mut String, failed: &mut Vec<String>, name: &str, check: &str, ok: bool, detail: String| {
        writeln!(report, "{} {name} {check}: {detail}", if ok { "PASS" } else { "FAIL" }).expect("write to string");
        if !ok {
            failed.push(format!("{name} {check}"));
        }
    };
    for m in &loaded {
        let g = &m.world;
        let purposes = pvf_sequence(g, kind, g.num_states())?;
        let mut bad = vec![];
        for &gamma in gammas {
            for p in &purposes {
                let e = match eigenoption(g, p, FeatureMap::TabularOneHot, gamma) {
                    Ok(e) => e,
                    Err(OptionsError::EmptyTermination(_)) => {
                        bad.push(format!("{}@{gamma}", p.label()));
                        continue;
                    }
                    Err(e) => return Err(e.into()),
                };
                let reaches = e.option.initiation_states().into_iter().all(|s| {
                    option_trajectory(g, &e.option, s, None, default_cap(g)).is_ok_and(|t| t.outcome == RolloutEnd::Terminated)
                });
                if !reaches {
                    bad.push(format!("{}@{gamma}", p.label()));
                }
            }
        }
        let count = purposes.len() * gammas.len();
        line(&mut report, &mut failed, &m.source, "termination", bad.is_empty(), format!("{count} eigenoptions, failing: {bad:?}"));

        let t = collect_exhaustive(g, FeatureMap::TabularOneHot);
        let l = laplacian(&build_graph(g), LaplacianKind::Combinatorial)?;
        let residual = verify_incidence_gram(&t, &l)?;
        line(&mut report, &mut failed, &m.source, "incidence-gram", residual <= 1e-9, format!("max |TᵀT − 2L| = {residual:e}"));
        let angle = svd_laplacian_angle(g, &t)?;
        line(&mut report, &mut failed, &m.source, "svd-subspaces", angle <= 1e-6, format!("max principal angle {angle:e} rad"));

        if let Some(path) = incidence {
            let text = std::fs::read_to_string(path).map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))?;
            let loaded = IncidenceMatrix::from_csv(&text)?;
            let residual = verify_incidence_gram(&loaded, &l)?;
            line(
                &mut report,
                &mut failed,
                &m.source,
                "incidence-file",
                residual <= 1e-9,
                format!("{}: {} rows, max |TᵀT − 2L| = {residual:e}", path.display(), loaded.len()),
            );
        }
    }
    o.write("report.txt", &report)?;
    print!("{report}");
    o.finish()?;
    if failed.is_empty() {
        Ok(())
    } else {
        Err(CliError::Verification(failed.join(", ")))
    }
}
