use std::fmt::{self, Display};
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::{anyhow, Context};
use bayesloc::estimators::{
    fing_estimate, map_estimate, mede_estimate, mmse_estimate, mpd_estimate, Estimate,
};
use bayesloc::eval::{
    curve_costs, default_d_grid, fstar, witness_costs, Algorithm, DominanceVerdict, MetricMode,
};
use bayesloc::models::{
    fingerprint_train, load_traces, FingerprintDb, FingerprintModel, PathLossModel, PathLossParams,
    TransmitterSet,
};
use bayesloc::sim::{
    build_desk_scenario, build_paper_scenario, build_symmetric_demo, learning_curve, office_traces,
    random_transmitters, run_experiment, skewed_line_posterior, ExperimentConfig, ExperimentOutput,
    NoiseProfile, OfficeLayout, Scenario, ScenarioMode,
};
use bayesloc::{posterior, uniform_prior, DensityGrid, Location, ObservationVector, Space};

use crate::args::{
    EvaluateArgs, FstarArgs, LearningArgs, LocalizeArgs, MetricModeArg, ProfileArg, RunArgs, ScenarioArgs,
    SimulateArgs, TrainArgs,
};

/// Grids above this many points are refused before any allocation.
const MAX_GRID_POINTS: usize = 4_000_000;
const SKEWED_DEMO_RESOLUTION: f64 = 0.001;
const SKEWED_DEMO_WIDTHS: [f64; 3] = [0.3, 0.6, 0.9];

#[derive(Debug)]
pub enum Failure {
    /// Bad flag values or flag combinations; reported with usage text.
    Usage(String),
    Runtime(anyhow::Error),
}

impl Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Usage(m) => write!(f, "{m}"),
            Failure::Runtime(e) => write!(f, "{e:#}"),
        }
    }
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Runtime(e)
    }
}

impl From<bayesloc::Error> for Failure {
    fn from(e: bayesloc::Error) -> Self {
        Failure::Runtime(e.into())
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Runtime(e.into())
    }
}

fn usage(e: impl Display) -> Failure {
    Failure::Usage(e.to_string())
}

type Outcome = Result<(), Failure>;

fn load_db(path: &Path) -> Result<FingerprintDb, Failure> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(FingerprintDb::from_json(&text).with_context(|| format!("loading {}", path.display()))?)
}

fn load_trace_file(path: &Path) -> Result<bayesloc::models::TraceDataset, Failure> {
    Ok(load_traces(path).with_context(|| format!("reading {}", path.display()))?)
}

/// Smallest space holding every location, padded by one resolution step.
fn bounding_space(locs: &[Location], resolution: f64) -> bayesloc::Result<Space> {
    let (mut x0, mut x1, mut y0, mut y1) = (f64::MAX, f64::MIN, f64::MAX, f64::MIN);
    for l in locs {
        x0 = x0.min(l.x);
        x1 = x1.max(l.x);
        y0 = y0.min(l.y);
        y1 = y1.max(l.y);
    }
    Space::new(x0 - resolution, x1 + resolution, y0 - resolution, y1 + resolution, resolution)
}

fn read_tx_file(path: &Path) -> Result<TransmitterSet, Failure> {
    let mut rdr = csv::Reader::from_path(path).with_context(|| format!("reading {}", path.display()))?;
    let header = rdr.headers().with_context(|| format!("reading {}", path.display()))?.clone();
    let names: Vec<&str> = header.iter().map(str::trim).collect();
    if names != ["tx_id", "x", "y"] {
        return Err(Failure::Runtime(anyhow!("{}: line 1: expected header `tx_id,x,y`", path.display())));
    }
    let mut txs = Vec::new();
    for row in rdr.records() {
        let row = row.with_context(|| format!("reading {}", path.display()))?;
        let line = row.position().map(|p| p.line()).unwrap_or(0);
        let bad =
            || anyhow!("{}: line {line}: expected `tx_id,x,y` with numeric coordinates", path.display());
        if row.len() != 3 {
            return Err(Failure::Runtime(bad()));
        }
        let x: f64 = row[1].trim().parse().map_err(|_| bad())?;
        let y: f64 = row[2].trim().parse().map_err(|_| bad())?;
        txs.push((row[0].trim().to_string(), Location::new(x, y)));
    }
    Ok(TransmitterSet::new(txs)?)
}

fn transmitters(spec: &str, space: &Space, seed: u64) -> Result<TransmitterSet, Failure> {
    match spec.strip_prefix("random:") {
        Some(n) => {
            let n: usize = n.parse().map_err(|_| usage(format!("--txs: `{spec}` is not random:N")))?;
            random_transmitters(space, n, seed).map_err(usage)
        }
        None => read_tx_file(Path::new(spec)),
    }
}

fn check_size(space: &Space) -> Result<(), Failure> {
    if space.point_count() > MAX_GRID_POINTS {
        return Err(usage(format!(
            "grid would have {} points (limit {MAX_GRID_POINTS}); raise --resolution",
            space.point_count()
        )));
    }
    Ok(())
}

fn build_scenario(a: &ScenarioArgs, seed: u64) -> Result<Scenario, Failure> {
    let check = |res: f64, w: f64, h: f64| check_size(&Space::rect(w, h, res).map_err(usage)?);
    if a.paper_scenario {
        let res = a.resolution.unwrap_or(0.5);
        check(res, 50.0, 70.0)?;
        return build_paper_scenario(seed, res).map_err(usage);
    }
    if a.desk_scenario {
        let res = a.resolution.unwrap_or(0.5);
        check(res, 16.0, 16.0)?;
        return build_desk_scenario(seed, res).map_err(usage);
    }
    if a.symmetric_demo {
        let res = a.resolution.unwrap_or(0.5);
        check(res, 10.0, 10.0)?;
        return build_symmetric_demo(res).map_err(usage);
    }
    if let Some(db_path) = &a.db {
        let replay = a.replay.as_ref().ok_or_else(|| usage("--db needs --replay to draw observations"))?;
        let db = load_db(db_path)?;
        let scans = load_trace_file(replay)?.scans();
        let space = bounding_space(&db.locations(), a.resolution.unwrap_or(1.0)).map_err(usage)?;
        return Ok(Scenario::fingerprint("fingerprint", space, db, scans)?);
    }
    let (w, h) = a.space;
    let space = Space::rect(w, h, a.resolution.unwrap_or(0.5)).map_err(usage)?;
    check_size(&space)?;
    let txs = transmitters(&a.txs, &space, seed)?;
    let params = PathLossParams::new(a.k_db, a.eta, a.sigma, a.d0, a.pt).map_err(usage)?;
    let model = PathLossModel::new(params, txs).map_err(usage)?;
    Scenario::path_loss("custom", space, model, None).map_err(usage)
}

fn suite(scenario: &Scenario, epsilon: f64, d: f64) -> Vec<Algorithm> {
    let mut algs =
        vec![Algorithm::Map, Algorithm::Mpd(epsilon), Algorithm::Mpd(d), Algorithm::Mmse, Algorithm::Mede];
    if matches!(scenario.mode, ScenarioMode::Fingerprint { .. }) {
        algs.push(Algorithm::Fing);
    }
    algs
}

fn experiment(scenario: Scenario, run: &RunArgs, tol: f64, out: Option<PathBuf>) -> ExperimentConfig {
    let d_grid = default_d_grid(scenario.d_star(), run.d_points);
    ExperimentConfig {
        algorithms: suite(&scenario, run.epsilon, run.d),
        scenario,
        trials: run.trials,
        seed: run.seed,
        d_grid,
        epsilon: run.epsilon,
        d: run.d,
        metric_mode: match run.metrics {
            MetricModeArg::Expected => MetricMode::Expected,
            MetricModeArg::Realized => MetricMode::Realized,
        },
        attainability_tol: tol,
        out_dir: out,
    }
}

fn print_written(out: &ExperimentOutput) {
    for p in &out.written {
        println!("wrote {}", p.display());
    }
}

pub fn simulate(a: SimulateArgs) -> Outcome {
    let scenario = build_scenario(&a.scenario, a.run.seed)?;
    let cfg = experiment(scenario, &a.run, 1e-9, Some(a.out));
    let out = run_experiment(&cfg)?;
    println!(
        "{} scenario, {} grid points, {} trials ({} failed), seed {}",
        cfg.scenario.name,
        cfg.scenario.grid().len(),
        cfg.trials,
        out.run.failures,
        cfg.seed
    );
    println!("normalized performance:");
    print!("{}", out.table.to_text());
    print_written(&out);
    Ok(())
}

fn verdict_symbol(v: DominanceVerdict) -> &'static str {
    match v {
        DominanceVerdict::StrictlyDominates => ">>",
        DominanceVerdict::Dominates => ">",
        DominanceVerdict::Equal => "=",
        DominanceVerdict::DominatedBy => "<",
        DominanceVerdict::StrictlyDominatedBy => "<<",
        DominanceVerdict::Incomparable => "x",
    }
}

pub fn evaluate(a: EvaluateArgs) -> Outcome {
    let scenario = build_scenario(&a.scenario, a.run.seed)?;
    let cfg = experiment(scenario, &a.run, a.attainability_tol, a.out);
    let out = run_experiment(&cfg)?;
    let names: Vec<String> = cfg.algorithms.iter().map(Algorithm::name).collect();
    let w = names.iter().map(String::len).max().unwrap_or(4).max(4);

    println!("{} trials ({} failed), seed {}", cfg.trials, out.run.failures, cfg.seed);
    println!("dominance (row vs column; >> strict, > weak, = equal, x incomparable):");
    print!("{:w$}", "");
    for n in &names {
        print!("  {n:>w$}");
    }
    println!();
    for (i, n) in names.iter().enumerate() {
        print!("{n:w$}");
        for j in 0..names.len() {
            let cell = if i == j { "-" } else { verdict_symbol(out.dominance[i][j].verdict) };
            print!("  {cell:>w$}");
        }
        println!();
    }

    println!("theta (area between F* and the curve) [m]:");
    for t in &out.theta {
        match t.gap_to_mede {
            Some((g, se)) => {
                println!("  {:w$}  {:.4}  minus MEDE {:+.4} (se {:.4})", t.algorithm, t.theta, g, se)
            }
            None => println!("  {:w$}  {:.4}", t.algorithm, t.theta),
        }
    }

    let r = &out.attainability;
    let sizes: Vec<String> = r.set_sizes.iter().map(usize::to_string).collect();
    println!(
        "attainability: {} of {} posteriors have an estimate attaining F*; set sizes {}",
        r.attained,
        r.posteriors,
        sizes.join(" ")
    );

    let mut any = false;
    for i in 0..names.len() {
        for j in i + 1..names.len() {
            if out.dominance[i][j].verdict != DominanceVerdict::Incomparable {
                continue;
            }
            if !any {
                println!("witness costs for incomparable pairs (expected cost, lower wins):");
                any = true;
            }
            let (gi, gj) = witness_costs(&out.curves[i], &out.curves[j])?;
            for (g, winner) in [(gi, &names[i]), (gj, &names[j])] {
                let (ci, cj) = curve_costs(&out.curves[i], &out.curves[j], &g);
                println!(
                    "  {} vs {}: {} favors {}  ({:.4} vs {:.4})",
                    names[i],
                    names[j],
                    g.name(),
                    winner,
                    ci,
                    cj
                );
            }
        }
    }
    print_written(&out);
    Ok(())
}

pub fn fstar_cmd(a: FstarArgs) -> Outcome {
    let scenario = build_scenario(&a.scenario, a.seed)?;
    let d_grid = default_d_grid(scenario.d_star(), a.d_points);
    let curve = fstar(&scenario, &d_grid, a.trials, a.seed)?;
    match a.out {
        Some(dir) => {
            fs::create_dir_all(&dir)?;
            let path = dir.join("fstar.csv");
            let mut buf = Vec::new();
            curve.write_csv(&mut buf)?;
            fs::write(&path, buf)?;
            println!("wrote {}", path.display());
        }
        None => {
            let stdout = std::io::stdout();
            curve.write_csv(stdout.lock())?;
        }
    }
    Ok(())
}

pub fn train(a: TrainArgs) -> Outcome {
    let data = load_trace_file(&a.traces)?;
    let db = fingerprint_train(&data, a.bin_width, a.smoothing)?;
    if let Some(dir) = a.out.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    fs::write(&a.out, db.to_json()?)?;
    let scans: u64 = db.entries().iter().map(|e| e.scans()).sum();
    println!(
        "{} locations, {} transmitters, {} readings, {} scans",
        db.entries().len(),
        db.transmitters().len(),
        data.len(),
        scans
    );
    for e in db.entries() {
        println!("  {}  {} transmitters  {} scans", e.location, e.per_tx.len(), e.scans());
    }
    println!("wrote {}", a.out.display());
    Ok(())
}

fn parse_pairs<'a>(items: impl IntoIterator<Item = &'a str>) -> Result<Vec<(String, f64)>, Failure> {
    let mut pairs = Vec::new();
    for item in items {
        let item = item.trim();
        if item.is_empty() {
            continue;
        }
        let (tx, v) = item.split_once('=').ok_or_else(|| usage(format!("`{item}` is not tx=rssi")))?;
        let v: f64 = v.trim().parse().map_err(|_| usage(format!("`{item}`: rssi is not a number")))?;
        pairs.push((tx.trim().to_string(), v));
    }
    Ok(pairs)
}

fn observation(a: &LocalizeArgs) -> Result<ObservationVector, Failure> {
    let mut pairs = parse_pairs(a.obs.iter().map(String::as_str))?;
    if let Some(path) = &a.obs_file {
        let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        pairs.extend(parse_pairs(text.split([',', '\n']))?);
    }
    if pairs.is_empty() {
        return Err(usage("empty observation: pass --obs tx=rssi pairs or --obs-file"));
    }
    ObservationVector::from_pairs(pairs).map_err(usage)
}

fn print_estimate(label: &str, e: &Estimate, cost: &str) {
    println!("{label:<8} {}  {cost} {:.4}  ties {}", e.location, e.expected_cost, e.ties());
}

fn dump_posterior(post: &DensityGrid, path: &Path) -> Outcome {
    let mut f = std::io::BufWriter::new(fs::File::create(path)?);
    writeln!(f, "x,y,p")?;
    for (p, m) in post.grid().points().iter().zip(post.mass()) {
        writeln!(f, "{},{},{:e}", p.x, p.y, m)?;
    }
    f.flush()?;
    println!("wrote {}", path.display());
    Ok(())
}

fn skewed_demo(a: &LocalizeArgs) -> Outcome {
    let post = skewed_line_posterior(SKEWED_DEMO_RESOLUTION)?;
    println!("skewed 1-D density on [-1, 1] m, spacing {SKEWED_DEMO_RESOLUTION} m");
    println!("MAP  {:.4}", map_estimate(&post).location.x);
    for w in SKEWED_DEMO_WIDTHS {
        let e = mpd_estimate(&post, w / 2.0)?;
        println!("MP(d={w}, radius {}) {:.4}", w / 2.0, e.location.x);
    }
    println!("MMSE {:.4}", mmse_estimate(&post).location.x);
    println!("MEDE {:.4}", mede_estimate(&post).location.x);
    if let Some(p) = &a.dump_posterior {
        dump_posterior(&post, p)?;
    }
    Ok(())
}

pub fn localize(a: LocalizeArgs) -> Outcome {
    if a.skewed_demo {
        return skewed_demo(&a);
    }
    let obs = observation(&a)?;
    let (post, db) = match &a.scenario.db {
        Some(path) => {
            let db = load_db(path)?;
            let prior = uniform_prior(Arc::new(db.grid()?));
            let post = posterior(&prior, &FingerprintModel { db: &db }, &obs)?;
            (post, Some(db))
        }
        None => {
            let scenario = build_scenario(&a.scenario, a.seed)?;
            (scenario.posterior(Some(&obs))?, None)
        }
    };
    println!("posterior over {} grid points", post.len());
    print_estimate("MAP", &map_estimate(&post), "P(miss)");
    print_estimate("MMSE", &mmse_estimate(&post), "E[d^2]");
    print_estimate("MEDE", &mede_estimate(&post), "E[d]");
    for r in [a.epsilon, a.d] {
        print_estimate(&format!("MP({r})"), &mpd_estimate(&post, r)?, "P(d>r)");
    }
    if let Some(db) = &db {
        print_estimate("FING", &fing_estimate(db, &obs)?, "dist");
    }
    if let Some(p) = &a.dump_posterior {
        dump_posterior(&post, p)?;
    }
    Ok(())
}

pub fn learning(a: LearningArgs) -> Outcome {
    let (data, space) = match (&a.traces, a.synthetic) {
        (Some(path), _) => {
            let data = load_trace_file(path)?;
            let space = bounding_space(&data.locations(), 1.0)?;
            (data, space)
        }
        (None, Some(p)) => {
            let layout = OfficeLayout::default();
            let profile = match p {
                ProfileArg::Low => NoiseProfile::low(),
                ProfileArg::High => NoiseProfile::high(),
            };
            (office_traces(&layout, profile, a.seed)?, layout.space()?)
        }
        (None, None) => return Err(usage("pass --traces FILE or --synthetic low|high")),
    };
    let algs = [Algorithm::Map, Algorithm::Mmse, Algorithm::Mede, Algorithm::Fing];
    let lc = learning_curve(&data, space, &a.fractions, a.repeats, &algs, a.seed)?;
    let csv = lc.to_csv();
    print!("{csv}");
    for (name, s) in lc.algorithms.iter().zip(&lc.slope) {
        println!("slope {name} {s:.4} m per unit fraction");
    }
    if let Some(dir) = a.out {
        fs::create_dir_all(&dir)?;
        let path = dir.join("learning_curve.csv");
        fs::write(&path, csv)?;
        println!("wrote {}", path.display());
    }
    Ok(())
}
