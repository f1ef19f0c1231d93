//! One seeded experiment from scenario to written artifacts.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use super::scenario::{Scenario, ScenarioMode};
use crate::error::{Error, Result};
use crate::eval::{
    attainability_test, dominance, draw_trial, run_suite, theta_area, witness_costs, Algorithm, Dominance,
    DominanceVerdict, ErrorCdfCurve, MetricMode, MetricParams, PerformanceTable, SuiteConfig, SuiteRun,
    Tolerance,
};

/// Posteriors examined by the attainability report.
pub const ATTAINABILITY_SAMPLES: usize = 20;

#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub scenario: Scenario,
    pub algorithms: Vec<Algorithm>,
    pub trials: usize,
    pub seed: u64,
    pub d_grid: Vec<f64>,
    pub epsilon: f64,
    pub d: f64,
    pub metric_mode: MetricMode,
    pub attainability_tol: f64,
    /// Directory receiving the artifacts; nothing is written when `None`.
    pub out_dir: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::InvalidParameter("trials must be at least 1".into()));
        }
        if !(self.epsilon > 0.0) || !(self.d > 0.0) {
            return Err(Error::InvalidParameter("epsilon and d must be positive".into()));
        }
        if self.algorithms.is_empty() {
            return Err(Error::InvalidParameter("no algorithms selected".into()));
        }
        self.algorithms.iter().try_for_each(Algorithm::validate)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ThetaEntry {
    pub algorithm: String,
    pub theta: f64,
    /// `Θ_A - Θ_MEDE` with its paired standard error, when MEDE ran.
    pub gap_to_mede: Option<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AttainabilityReport {
    pub posteriors: usize,
    pub attained: usize,
    pub set_sizes: Vec<usize>,
}

#[derive(Debug, Clone)]
pub struct ExperimentOutput {
    pub run: SuiteRun,
    pub curves: Vec<ErrorCdfCurve>,
    pub fstar: ErrorCdfCurve,
    pub table: PerformanceTable,
    pub theta: Vec<ThetaEntry>,
    /// `dominance[i][j]` compares algorithm `i` against `j`.
    pub dominance: Vec<Vec<Dominance>>,
    pub attainability: AttainabilityReport,
    pub written: Vec<PathBuf>,
}

/// Artifact file names inside the output directory.
pub struct ExperimentPaths;

impl ExperimentPaths {
    pub const TABLE_CSV: &'static str = "table.csv";
    pub const TABLE_TXT: &'static str = "table.txt";
    pub const FSTAR: &'static str = "fstar.csv";
    pub const THETA: &'static str = "theta.csv";
    pub const DOMINANCE: &'static str = "dominance.csv";
    pub const ATTAINABILITY: &'static str = "attainability.txt";
    pub const MANIFEST: &'static str = "manifest.txt";

    /// `curve_<name>.csv` with the name reduced to filename-safe characters.
    pub fn curve(name: &str) -> String {
        let mut s = String::from("curve_");
        for c in name.chars() {
            match c {
                'a'..='z' | 'A'..='Z' | '0'..='9' | '.' | '-' => s.push(c),
                _ => {
                    if !s.ends_with('_') {
                        s.push('_')
                    }
                }
            }
        }
        let trimmed = s.trim_end_matches('_').len();
        s.truncate(trimmed);
        s + ".csv"
    }
}

pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentOutput> {
    cfg.validate()?;
    let suite = SuiteConfig {
        trials: cfg.trials,
        seed: cfg.seed,
        d_grid: cfg.d_grid.clone(),
        fstar: true,
        metrics: Some(MetricParams { epsilon: cfg.epsilon, d: cfg.d, mode: cfg.metric_mode }),
    };
    let run = run_suite(&cfg.scenario, &cfg.algorithms, &suite)?;
    let curves = run.curves()?;
    let fstar = run.fstar().expect("requested")?;
    let table = run.table().expect("requested");
    let mede = cfg.algorithms.iter().position(|a| *a == Algorithm::Mede);
    let theta = curves
        .iter()
        .enumerate()
        .map(|(a, c)| {
            Ok(ThetaEntry {
                algorithm: cfg.algorithms[a].name(),
                theta: theta_area(c, &fstar)?,
                gap_to_mede: mede.map(|m| run.theta_gap(a, m)),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let dominance = curves
        .iter()
        .map(|a| curves.iter().map(|b| dominance(a, b, Tolerance::default())).collect::<Result<Vec<_>>>())
        .collect::<Result<Vec<_>>>()?;
    let attainability = attainability_report(cfg)?;
    let mut out =
        ExperimentOutput { run, curves, fstar, table, theta, dominance, attainability, written: Vec::new() };
    if let Some(dir) = &cfg.out_dir {
        out.written = write_artifacts(cfg, &out, dir)?;
    }
    Ok(out)
}

fn attainability_report(cfg: &ExperimentConfig) -> Result<AttainabilityReport> {
    let n = cfg.trials.min(ATTAINABILITY_SAMPLES);
    let mut set_sizes = Vec::with_capacity(n);
    for k in 0..n {
        match draw_trial(&cfg.scenario, cfg.seed, k) {
            Ok(t) => set_sizes.push(attainability_test(&t.post, &cfg.d_grid, cfg.attainability_tol).len()),
            Err(Error::AllZeroLikelihood | Error::SingularDistance { .. }) => {}
            Err(e) => return Err(e),
        }
    }
    Ok(AttainabilityReport {
        posteriors: set_sizes.len(),
        attained: set_sizes.iter().filter(|&&s| s > 0).count(),
        set_sizes,
    })
}

fn write_artifacts(cfg: &ExperimentConfig, out: &ExperimentOutput, dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    let mut put = |name: &str, bytes: Vec<u8>| -> Result<()> {
        let p = dir.join(name);
        fs::write(&p, bytes)?;
        written.push(p);
        Ok(())
    };
    let names: Vec<String> = cfg.algorithms.iter().map(Algorithm::name).collect();
    for (name, c) in names.iter().zip(&out.curves) {
        let mut buf = Vec::new();
        c.write_csv(&mut buf)?;
        put(&ExperimentPaths::curve(name), buf)?;
    }
    let mut buf = Vec::new();
    out.fstar.write_csv(&mut buf)?;
    put(ExperimentPaths::FSTAR, buf)?;

    let mut buf = Vec::new();
    out.table.write_csv(&mut buf)?;
    put(ExperimentPaths::TABLE_CSV, buf)?;
    put(ExperimentPaths::TABLE_TXT, out.table.to_text().into_bytes())?;

    let mut s = String::from("algorithm,theta,gap_to_mede,gap_se\n");
    for t in &out.theta {
        match t.gap_to_mede {
            Some((g, se)) => writeln!(s, "{},{:.6},{:.6},{:.6}", t.algorithm, t.theta, g, se),
            None => writeln!(s, "{},{:.6},,", t.algorithm, t.theta),
        }
        .expect("string write");
    }
    put(ExperimentPaths::THETA, s.into_bytes())?;
    put(ExperimentPaths::DOMINANCE, dominance_csv(&names, &out.curves, &out.dominance)?.into_bytes())?;

    let a = &out.attainability;
    let s = format!(
        "posteriors {}\nattained {}\nset_sizes {}\n",
        a.posteriors,
        a.attained,
        a.set_sizes.iter().map(usize::to_string).collect::<Vec<_>>().join(" ")
    );
    put(ExperimentPaths::ATTAINABILITY, s.into_bytes())?;
    put(ExperimentPaths::MANIFEST, manifest(cfg, out).into_bytes())?;
    Ok(written)
}

fn dominance_csv(names: &[String], curves: &[ErrorCdfCurve], dom: &[Vec<Dominance>]) -> Result<String> {
    let mut s = String::from("a,b,verdict,witness_a,witness_b\n");
    for i in 0..names.len() {
        for j in 0..names.len() {
            if i == j {
                continue;
            }
            let v = dom[i][j].verdict;
            let (wa, wb) = if v == DominanceVerdict::Incomparable {
                let (g1, g2) = witness_costs(&curves[i], &curves[j])?;
                (g1.name(), g2.name())
            } else {
                (String::new(), String::new())
            };
            writeln!(s, "{},{},{},{},{}", names[i], names[j], v.label(), wa, wb).expect("string write");
        }
    }
    Ok(s)
}

fn manifest(cfg: &ExperimentConfig, out: &ExperimentOutput) -> String {
    let sc = &cfg.scenario;
    let sp = &sc.space;
    let mut s = String::new();
    let mut line = |k: &str, v: String| writeln!(s, "{k} = {v}").expect("string write");
    line("scenario", sc.name.clone());
    line("space", format!("[{}, {}] x [{}, {}] m", sp.x_min(), sp.x_max(), sp.y_min(), sp.y_max()));
    line("resolution_m", sp.resolution().to_string());
    line("grid_points", sc.grid().len().to_string());
    match &sc.mode {
        ScenarioMode::PathLoss(m) => {
            let p = &m.params;
            line("mode", "path-loss".into());
            line(
                "params",
                format!(
                    "K={} dB eta={} sigma={} dB d0={} m Pt={} dBm d_min={} m",
                    p.k_db, p.eta, p.sigma_db, p.d0, p.pt_dbm, p.d_min
                ),
            );
            for (id, l) in m.txs.iter() {
                line(&format!("tx {id}"), format!("{} {}", l.x, l.y));
            }
        }
        ScenarioMode::Fingerprint { db, scans } => {
            line("mode", "fingerprint".into());
            line("survey_locations", db.entries().len().to_string());
            line("replay_scans", scans.len().to_string());
        }
        ScenarioMode::PriorOnly => line("mode", "prior-only".into()),
    }
    line("algorithms", cfg.algorithms.iter().map(Algorithm::name).collect::<Vec<_>>().join(" "));
    line("trials", cfg.trials.to_string());
    line("failed_trials", out.run.failures.to_string());
    line("seed", cfg.seed.to_string());
    line("trial_seeding", "ChaCha8(seed), stream = trial index".into());
    line("epsilon_m", cfg.epsilon.to_string());
    line("d_m", cfg.d.to_string());
    line("metric_mode", format!("{:?}", cfg.metric_mode).to_lowercase());
    line(
        "d_grid",
        format!("{} points on [{}, {}] m", cfg.d_grid.len(), cfg.d_grid[0], cfg.d_grid[cfg.d_grid.len() - 1]),
    );
    line("dominance_tolerance", "2 pooled binomial standard errors".into());
    line("attainability_tol", cfg.attainability_tol.to_string());
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval::default_d_grid;
    use crate::sim::build_desk_scenario;

    fn config(trials: usize, dir: Option<PathBuf>) -> ExperimentConfig {
        let scenario = build_desk_scenario(4, 1.0).unwrap();
        let d_grid = default_d_grid(scenario.d_star(), 16);
        ExperimentConfig {
            scenario,
            algorithms: vec![
                Algorithm::Map,
                Algorithm::Mpd(0.5),
                Algorithm::Mpd(3.0),
                Algorithm::Mmse,
                Algorithm::Mede,
            ],
            trials,
            seed: 5,
            d_grid,
            epsilon: 0.5,
            d: 3.0,
            metric_mode: MetricMode::Expected,
            attainability_tol: 1e-9,
            out_dir: dir,
        }
    }

    #[test]
    fn single_trial_outputs_steps() {
        let dir = tempfile::tempdir().unwrap();
        let out = run_experiment(&config(1, Some(dir.path().to_path_buf()))).unwrap();
        for c in &out.curves {
            assert!(c.values.iter().all(|&v| v == 0.0 || v == 1.0));
            assert_eq!(c.trials, 1);
        }
        assert!(dir.path().join(ExperimentPaths::MANIFEST).exists());
        assert!(dir.path().join("curve_MP_0.5.csv").exists());
    }

    #[test]
    fn rerun_is_byte_identical() {
        let a = tempfile::tempdir().unwrap();
        let b = tempfile::tempdir().unwrap();
        run_experiment(&config(30, Some(a.path().to_path_buf()))).unwrap();
        run_experiment(&config(30, Some(b.path().to_path_buf()))).unwrap();
        let mut names: Vec<_> = fs::read_dir(a.path()).unwrap().map(|e| e.unwrap().file_name()).collect();
        names.sort();
        assert_eq!(names.len(), 5 + 7);
        for n in names {
            assert_eq!(fs::read(a.path().join(&n)).unwrap(), fs::read(b.path().join(&n)).unwrap(), "{n:?}");
        }
    }

    #[test]
    fn curve_file_names() {
        assert_eq!(ExperimentPaths::curve("MP(0.5)"), "curve_MP_0.5.csv");
        assert_eq!(ExperimentPaths::curve("MAP"), "curve_MAP.csv");
    }
}
