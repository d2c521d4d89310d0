//! Seeded Monte Carlo estimation of equilibrium shares.
//!
//! Replicate `r` of a cell analyses the game with `game_index = r`, so every
//! cell of one shape sees the same games and results do not depend on the
//! number of worker threads.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::thread;

use serde::{Deserialize, Serialize};

use crate::dist::DistributionSpec;
use crate::eq::{analyze, exists, EquilibriumReport, Target};
use crate::game::{Game, GameShape};
use crate::generate::{CorrelationMatrix, Generator, SeedSpec};
use crate::graph::InteractionGraph;
use crate::stats::{binomial_se, wilson_interval};
use crate::theory::{poisson_tail, theory_report};
use crate::{Error, Result};

pub const DEFAULT_REPLICATIONS: u64 = 10_000;
pub const FIG1_EPSILON: f64 = 0.05;
/// Plotted grid: (actions per agent, agent counts).
pub const FIG1_GRID: [(usize, std::ops::RangeInclusive<usize>); 4] =
    [(2, 2..=13), (3, 2..=10), (4, 2..=7), (5, 2..=6)];

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Measure {
    #[default]
    Iid,
    /// Gaussian copula: either a full matrix or one common correlation.
    Copula {
        #[serde(default)]
        delta: Option<Vec<Vec<f64>>>,
        #[serde(default)]
        rho: Option<f64>,
    },
    /// Network game: a named family (`complete`, `cycle`, `empty`), an edge
    /// list, or a graph file.
    Network {
        #[serde(default)]
        family: Option<String>,
        #[serde(default)]
        edges: Option<Vec<(usize, usize)>>,
        #[serde(default)]
        file: Option<PathBuf>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Sweep: every combination of `agents` × `actions` (equal actions per
    /// agent). Ignored when `shapes` is given.
    #[serde(default)]
    pub agents: Vec<usize>,
    #[serde(default)]
    pub actions: Vec<usize>,
    #[serde(default)]
    pub shapes: Vec<Vec<usize>>,
    #[serde(default = "default_dist")]
    pub dist: DistributionSpec,
    #[serde(default = "default_epsilons")]
    pub epsilons: Vec<f64>,
    #[serde(default = "default_targets")]
    pub targets: Vec<Target>,
    #[serde(default = "default_replications")]
    pub replications: u64,
    #[serde(default)]
    pub master_seed: u64,
    #[serde(default)]
    pub measure: Measure,
    /// Run the full count per game instead of an early-exit check, and
    /// report mean counts and tail frequencies.
    #[serde(default)]
    pub full_counts: bool,
}

fn default_dist() -> DistributionSpec {
    DistributionSpec::uniform(0.0, 1.0).expect("valid")
}

fn default_epsilons() -> Vec<f64> {
    vec![0.0]
}

fn default_targets() -> Vec<Target> {
    Target::ALL.to_vec()
}

fn default_replications() -> u64 {
    DEFAULT_REPLICATIONS
}

impl ExperimentConfig {
    /// A single-shape i.i.d. experiment with defaults elsewhere.
    pub fn single(shape: Vec<usize>, dist: DistributionSpec, epsilons: Vec<f64>, targets: Vec<Target>) -> Self {
        Self {
            agents: Vec::new(),
            actions: Vec::new(),
            shapes: vec![shape],
            dist,
            epsilons,
            targets,
            replications: DEFAULT_REPLICATIONS,
            master_seed: 0,
            measure: Measure::Iid,
            full_counts: false,
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let config: Self = serde_json::from_str(text)?;
        config.validate()?;
        Ok(config)
    }

    /// Read a config file; relative graph file paths resolve against the
    /// config's directory.
    pub fn from_file(path: &Path) -> Result<Self> {
        let mut config = Self::from_json(&std::fs::read_to_string(path)?)?;
        if let Measure::Network { file: Some(f), .. } = &mut config.measure {
            if f.is_relative() {
                if let Some(dir) = path.parent() {
                    *f = dir.join(&*f);
                }
            }
        }
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        if self.replications == 0 {
            return Err(Error::InvalidConfig("replications must be at least 1".into()));
        }
        if self.targets.is_empty() {
            return Err(Error::InvalidConfig("no targets given".into()));
        }
        if let Some(&e) = self.epsilons.iter().find(|e| !(**e >= 0.0 && e.is_finite())) {
            return Err(Error::NegativeEpsilon(e));
        }
        if self.epsilons.is_empty() && self.targets.iter().any(|&t| t != Target::Nash) {
            return Err(Error::InvalidConfig("no epsilons given".into()));
        }
        if self.shape_list().is_empty() {
            return Err(Error::InvalidConfig("no shapes given: set `shapes` or both `agents` and `actions`".into()));
        }
        Ok(())
    }

    /// Shapes in output order: explicit list, or actions-major sweep.
    pub fn shape_list(&self) -> Vec<Vec<usize>> {
        if !self.shapes.is_empty() {
            return self.shapes.clone();
        }
        let mut out = Vec::new();
        for &k in &self.actions {
            for &n in &self.agents {
                out.push(vec![k; n]);
            }
        }
        out
    }

    /// (target, ε) checks for one shape. Nash appears once, at ε = 0.
    fn checks(&self) -> Vec<(Target, f64)> {
        let mut out = Vec::new();
        for &t in &self.targets {
            if t == Target::Nash {
                if !out.contains(&(t, 0.0)) {
                    out.push((t, 0.0));
                }
                continue;
            }
            for &e in &self.epsilons {
                if !out.contains(&(t, e)) {
                    out.push((t, e));
                }
            }
        }
        out
    }

    fn generator(&self, shape: GameShape) -> Result<Generator> {
        let n = shape.num_agents();
        let seed = SeedSpec::new(self.master_seed);
        match &self.measure {
            Measure::Iid => Ok(Generator::iid(shape, self.dist, seed)),
            Measure::Copula { delta, rho } => {
                let matrix = match (delta, rho) {
                    (Some(d), None) => CorrelationMatrix::new(d.clone())?,
                    (None, Some(r)) => CorrelationMatrix::equicorrelated(n, *r)?,
                    _ => {
                        return Err(Error::InvalidConfig(
                            "copula measure needs exactly one of `delta` and `rho`".into(),
                        ))
                    }
                };
                Generator::copula(shape, self.dist, seed, matrix)
            }
            Measure::Network { family, edges, file } => {
                let graph = match (family.as_deref(), edges, file) {
                    (Some(f), None, None) => match f.to_ascii_lowercase().as_str() {
                        "complete" => InteractionGraph::complete(n),
                        "cycle" => InteractionGraph::cycle(n)?,
                        "empty" => InteractionGraph::empty(n),
                        other => return Err(Error::InvalidConfig(format!("unknown graph family `{other}`"))),
                    },
                    (None, Some(e), None) => InteractionGraph::from_edges(n, e)?,
                    (None, None, Some(path)) => InteractionGraph::parse(&std::fs::read_to_string(path)?)?,
                    _ => {
                        return Err(Error::InvalidConfig(
                            "network measure needs exactly one of `family`, `edges` and `file`".into(),
                        ))
                    }
                };
                Generator::network(shape, self.dist, seed, &graph)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ShareEstimate {
    pub shape: Vec<usize>,
    pub epsilon: f64,
    pub target: Target,
    pub successes: u64,
    pub replications: u64,
    pub share: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    /// Mean number of qualifying profiles per game (full counts only).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mean_count: Option<f64>,
    /// Games with at least 1, 2 and 3 qualifying profiles (full counts only).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub at_least: Option<[u64; 3]>,
}

impl ShareEstimate {
    fn new(shape: Vec<usize>, target: Target, epsilon: f64, tally: &Tally, replications: u64, full: bool) -> Self {
        let share = tally.successes as f64 / replications as f64;
        let (ci_low, ci_high) = wilson_interval(tally.successes, replications);
        Self {
            shape,
            epsilon,
            target,
            successes: tally.successes,
            replications,
            share,
            ci_low,
            ci_high,
            mean_count: full.then(|| tally.total as f64 / replications as f64),
            at_least: full.then_some(tally.at_least),
        }
    }

    pub fn agents(&self) -> usize {
        self.shape.len()
    }

    pub fn standard_error(&self) -> f64 {
        binomial_se(self.share, self.replications)
    }
}

#[derive(Debug, Clone, Copy, Default)]
struct Tally {
    successes: u64,
    total: u64,
    at_least: [u64; 3],
}

impl Tally {
    fn add(&mut self, other: &Tally) {
        self.successes += other.successes;
        self.total += other.total;
        for (a, b) in self.at_least.iter_mut().zip(other.at_least) {
            *a += b;
        }
    }
}

/// Worker count: `0` means all available cores.
pub fn resolve_threads(threads: usize) -> usize {
    if threads > 0 {
        threads
    } else {
        thread::available_parallelism().map(|n| n.get()).unwrap_or(1)
    }
}

fn run_replicates(
    gen: &Generator,
    checks: &[(Target, f64)],
    range: std::ops::Range<u64>,
    full: bool,
) -> Result<Vec<Tally>> {
    let mut tallies = vec![Tally::default(); checks.len()];
    let mut game = Game::zeros(gen.shape().clone());
    let mut reports: Vec<EquilibriumReport> = Vec::new();
    for r in range {
        gen.fill(r, &mut game);
        reports.clear();
        for (tally, &(target, eps)) in tallies.iter_mut().zip(checks) {
            if full {
                let report = match reports.iter().position(|rep| rep.epsilon == eps) {
                    Some(i) => &reports[i],
                    None => {
                        reports.push(analyze(&game, eps)?);
                        reports.last().expect("just pushed")
                    }
                };
                let count = report.count(target);
                tally.total += count;
                for (j, slot) in tally.at_least.iter_mut().enumerate() {
                    *slot += (count > j as u64) as u64;
                }
                tally.successes += (count >= 1) as u64;
            } else {
                tally.successes += exists(&game, eps, target)? as u64;
            }
        }
    }
    Ok(tallies)
}

fn run_shape(gen: &Generator, checks: &[(Target, f64)], replications: u64, threads: usize, full: bool) -> Result<Vec<Tally>> {
    let workers = (resolve_threads(threads) as u64).min(replications).max(1);
    let bounds: Vec<_> = (0..workers)
        .map(|w| (w * replications / workers)..((w + 1) * replications / workers))
        .collect();
    let parts: Vec<Result<Vec<Tally>>> = if workers == 1 {
        vec![run_replicates(gen, checks, 0..replications, full)]
    } else {
        thread::scope(|s| {
            let handles: Vec<_> = bounds
                .into_iter()
                .map(|range| s.spawn(move || run_replicates(gen, checks, range, full)))
                .collect();
            handles.into_iter().map(|h| h.join().expect("worker panicked")).collect()
        })
    };
    let mut total = vec![Tally::default(); checks.len()];
    for part in parts {
        for (t, p) in total.iter_mut().zip(part?) {
            t.add(&p);
        }
    }
    Ok(total)
}

/// One estimate per (shape, target, ε) cell, in shape order then check
/// order. `threads = 0` uses every available core.
pub fn estimate_share(config: &ExperimentConfig, threads: usize) -> Result<Vec<ShareEstimate>> {
    config.validate()?;
    let checks = config.checks();
    let mut out = Vec::new();
    for counts in config.shape_list() {
        let shape = GameShape::new(counts.clone())?;
        let gen = config.generator(shape)?;
        let tallies = run_shape(&gen, &checks, config.replications, threads, config.full_counts)?;
        for (&(target, eps), tally) in checks.iter().zip(&tallies) {
            out.push(ShareEstimate::new(counts.clone(), target, eps, tally, config.replications, config.full_counts));
        }
    }
    Ok(out)
}

fn join_shape(shape: &[usize]) -> String {
    shape.iter().map(|k| k.to_string()).collect::<Vec<_>>().join("x")
}

pub fn shares_csv(estimates: &[ShareEstimate]) -> String {
    let full = estimates.iter().any(|e| e.mean_count.is_some());
    let mut out = String::from("shape,agents,epsilon,target,successes,replications,share,ci_low,ci_high");
    if full {
        out.push_str(",mean_count,at_least_1,at_least_2,at_least_3");
    }
    out.push('\n');
    for e in estimates {
        write!(
            out,
            "{},{},{},{},{},{},{},{:.6},{:.6}",
            join_shape(&e.shape),
            e.agents(),
            e.epsilon,
            e.target.name(),
            e.successes,
            e.replications,
            e.share,
            e.ci_low,
            e.ci_high
        )
        .unwrap();
        if let (Some(mean), Some([a, b, c])) = (e.mean_count, e.at_least) {
            write!(out, ",{mean},{a},{b},{c}").unwrap();
        }
        out.push('\n');
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Fig1Row {
    pub panel: char,
    pub actions: usize,
    pub agents: usize,
    pub successes: u64,
    pub replications: u64,
    pub share: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

/// Both panels of the reference figure at the default replication count.
pub fn fig1_suite(master_seed: u64, threads: usize) -> Result<Vec<Fig1Row>> {
    fig1_suite_with(master_seed, DEFAULT_REPLICATIONS, threads)
}

/// Panel `a`: pure Nash share; panel `b`: pure ε-equilibrium share at
/// ε = 0.05. Both panels use the same games.
pub fn fig1_suite_with(master_seed: u64, replications: u64, threads: usize) -> Result<Vec<Fig1Row>> {
    let mut panel_a = Vec::new();
    let mut panel_b = Vec::new();
    for (actions, agents) in FIG1_GRID {
        let config = ExperimentConfig {
            agents: agents.collect(),
            actions: vec![actions],
            shapes: Vec::new(),
            dist: default_dist(),
            epsilons: vec![FIG1_EPSILON],
            targets: vec![Target::Nash, Target::Eps],
            replications,
            master_seed,
            measure: Measure::Iid,
            full_counts: false,
        };
        for e in estimate_share(&config, threads)? {
            let row = Fig1Row {
                panel: if e.target == Target::Nash { 'a' } else { 'b' },
                actions,
                agents: e.agents(),
                successes: e.successes,
                replications: e.replications,
                share: e.share,
                ci_low: e.ci_low,
                ci_high: e.ci_high,
            };
            if row.panel == 'a' {
                panel_a.push(row);
            } else {
                panel_b.push(row);
            }
        }
    }
    panel_a.extend(panel_b);
    Ok(panel_a)
}

pub fn fig1_csv(rows: &[Fig1Row]) -> String {
    let mut out = String::from("panel,actions,agents,share,ci_low,ci_high\n");
    for r in rows {
        writeln!(out, "{},{},{},{},{:.6},{:.6}", r.panel, r.actions, r.agents, r.share, r.ci_low, r.ci_high).unwrap();
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TailCheck {
    pub k: u64,
    pub observed: f64,
    pub predicted: f64,
    pub allowed: f64,
    pub ok: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ThmVerdict {
    pub shape: Vec<usize>,
    pub epsilon: f64,
    pub eps_star_share: f64,
    pub thm1_lower: f64,
    pub lambda_t: f64,
    pub bound_t: f64,
    /// The observed ε*-share is below the lower bound by more than 4 SE.
    pub bound_violated: bool,
    /// Poisson tail comparisons, present only where `bound_t < 0.3`.
    pub tails: Vec<TailCheck>,
}

impl ThmVerdict {
    pub fn violation(&self) -> bool {
        self.bound_violated || self.tails.iter().any(|t| !t.ok)
    }
}

/// Compare Monte Carlo shares against the theoretical lower bound and
/// Poisson tails for every (shape, ε) cell. I.i.d. measure only.
pub fn thm_check(config: &ExperimentConfig, threads: usize) -> Result<Vec<ThmVerdict>> {
    if config.measure != Measure::Iid {
        return Err(Error::InvalidConfig("theory checks apply to the i.i.d. measure only".into()));
    }
    let mut cfg = config.clone();
    let mut seen = Vec::new();
    cfg.epsilons.retain(|e| {
        let fresh = !seen.contains(e);
        seen.push(*e);
        fresh
    });
    cfg.targets = vec![Target::Eps, Target::EpsStar];
    cfg.full_counts = true;
    let estimates = estimate_share(&cfg, threads)?;
    let r = cfg.replications;
    let mut out = Vec::new();
    for pair in estimates.chunks(2 * cfg.epsilons.len()) {
        let (eps_rows, star_rows) = pair.split_at(cfg.epsilons.len());
        for (eps_row, star_row) in eps_rows.iter().zip(star_rows) {
            let theory = theory_report(&eps_row.shape, &cfg.dist, eps_row.epsilon)?;
            let bound_violated = star_row.share < theory.thm1_lower - 4.0 * star_row.standard_error();
            let mut tails = Vec::new();
            if theory.bound_t < 0.3 {
                let at_least = eps_row.at_least.expect("full counts");
                for (j, &count) in at_least.iter().enumerate() {
                    let k = j as u64 + 1;
                    let observed = count as f64 / r as f64;
                    let predicted = poisson_tail(theory.lambda_t, k);
                    let se = binomial_se(observed, r).max(binomial_se(predicted, r));
                    let allowed = theory.bound_t + 4.0 * se;
                    tails.push(TailCheck {
                        k,
                        observed,
                        predicted,
                        allowed,
                        ok: (observed - predicted).abs() <= allowed,
                    });
                }
            }
            out.push(ThmVerdict {
                shape: eps_row.shape.clone(),
                epsilon: eps_row.epsilon,
                eps_star_share: star_row.share,
                thm1_lower: theory.thm1_lower,
                lambda_t: theory.lambda_t,
                bound_t: theory.bound_t,
                bound_violated,
                tails,
            });
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config(shape: Vec<usize>, targets: Vec<Target>, epsilons: Vec<f64>, r: u64) -> ExperimentConfig {
        let mut c = ExperimentConfig::single(shape, default_dist(), epsilons, targets);
        c.replications = r;
        c.master_seed = 3;
        c
    }

    #[test]
    fn single_replication_is_well_formed() {
        let est = estimate_share(&config(vec![2, 2, 2], Target::ALL.to_vec(), vec![0.1], 1), 1).unwrap();
        assert_eq!(est.len(), 3);
        for e in est {
            assert!(e.share == 0.0 || e.share == 1.0);
            assert!(0.0 <= e.ci_low && e.ci_low <= e.share && e.share <= e.ci_high && e.ci_high <= 1.0);
        }
    }

    #[test]
    fn thread_count_does_not_matter() {
        let mut c = config(vec![3, 3, 3], Target::ALL.to_vec(), vec![0.02, 0.1], 300);
        let one = shares_csv(&estimate_share(&c, 1).unwrap());
        assert_eq!(one, shares_csv(&estimate_share(&c, 3).unwrap()));
        assert_eq!(one, shares_csv(&estimate_share(&c, 16).unwrap()));
        c.full_counts = true;
        let full = estimate_share(&c, 2).unwrap();
        assert_eq!(shares_csv(&full), shares_csv(&estimate_share(&c, 5).unwrap()));
        // Early exit and full counting agree on successes.
        for (a, b) in full.iter().zip(estimate_share(&config(vec![3, 3, 3], Target::ALL.to_vec(), vec![0.02, 0.1], 300), 1).unwrap()) {
            assert_eq!(a.successes, b.successes);
        }
    }

    #[test]
    fn refinement_and_monotonicity_across_cells() {
        let c = config(vec![2; 6], Target::ALL.to_vec(), vec![0.01, 0.05, 0.2], 400);
        let est = estimate_share(&c, 2).unwrap();
        let find = |t: Target, e: f64| est.iter().find(|x| x.target == t && x.epsilon == e).unwrap().successes;
        let nash = find(Target::Nash, 0.0);
        let mut prev = (nash, nash);
        for e in [0.01, 0.05, 0.2] {
            let (s, t) = (find(Target::EpsStar, e), find(Target::Eps, e));
            assert!(nash <= s && s <= t);
            assert!(s >= prev.0 && t >= prev.1);
            prev = (s, t);
        }
    }

    #[test]
    fn config_parsing() {
        let c = ExperimentConfig::from_json(
            r#"{"agents":[2,3],"actions":[2,3],"epsilons":[0.05],"targets":["nash","eps_star"],
                "replications":50,"master_seed":1,"measure":{"kind":"copula","rho":0.3}}"#,
        )
        .unwrap();
        assert_eq!(c.shape_list(), vec![vec![2, 2], vec![2, 2, 2], vec![3, 3], vec![3, 3, 3]]);
        assert_eq!(c.checks(), vec![(Target::Nash, 0.0), (Target::EpsStar, 0.05)]);
        assert_eq!(estimate_share(&c, 1).unwrap().len(), 8);
        assert!(ExperimentConfig::from_json(r#"{"shapes":[[2,2]],"replications":0}"#).is_err());
        assert!(ExperimentConfig::from_json(r#"{"shapes":[[2,2]],"bogus":1}"#).is_err());
        assert!(ExperimentConfig::from_json(r#"{"shapes":[[2,2]],"epsilons":[-1]}"#).is_err());
        assert!(ExperimentConfig::from_json(r#"{"agents":[2]}"#).is_err());
        let net = ExperimentConfig::from_json(
            r#"{"shapes":[[2,2,2,2]],"replications":20,"measure":{"kind":"network","family":"cycle"}}"#,
        )
        .unwrap();
        assert_eq!(estimate_share(&net, 1).unwrap().len(), 3);
        let too_big = ExperimentConfig::from_json(r#"{"shapes":[[2,2,2]],"measure":{"kind":"copula","delta":[[1,0],[0,1]]}}"#).unwrap();
        assert!(estimate_share(&too_big, 1).is_err());
    }

    #[test]
    fn complete_network_and_identity_copula_match_iid() {
        let base = config(vec![2, 3, 2], Target::ALL.to_vec(), vec![0.1], 200);
        let iid = estimate_share(&base, 1).unwrap();
        let mut net = base.clone();
        net.measure = Measure::Network { family: Some("complete".into()), edges: None, file: None };
        assert_eq!(iid, estimate_share(&net, 1).unwrap());
        let mut cop = base.clone();
        cop.measure = Measure::Copula { delta: None, rho: Some(0.0) };
        assert_eq!(iid, estimate_share(&cop, 1).unwrap());
    }

    #[test]
    fn fig1_small_run_shape() {
        let rows = fig1_suite_with(1, 20, 2).unwrap();
        let points: usize = FIG1_GRID.iter().map(|(_, a)| a.clone().count()).sum();
        assert_eq!(rows.len(), 2 * points);
        let csv = fig1_csv(&rows);
        assert!(csv.starts_with("panel,actions,agents,share,ci_low,ci_high\na,2,2,"));
        assert_eq!(csv.lines().count(), 2 * points + 1);
    }

    #[test]
    fn thm_check_small_cells() {
        let mut c = config(vec![2; 8], vec![Target::EpsStar], vec![0.0, 0.1], 2000);
        c.master_seed = 11;
        let verdicts = thm_check(&c, 1).unwrap();
        assert_eq!(verdicts.len(), 2);
        for v in &verdicts {
            assert!(!v.violation(), "{v:?}");
        }
        // ε = 0: λ_S = 1.
        assert!(verdicts[0].thm1_lower <= 1.0 - (-1.0f64).exp());
        c.measure = Measure::Copula { delta: None, rho: Some(0.5) };
        assert!(thm_check(&c, 1).is_err());
    }
}
