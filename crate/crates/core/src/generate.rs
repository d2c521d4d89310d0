//! Random game generators.
//!
//! All three measures share one seeding convention: the utilities of agent
//! `i` in game `g` come from the stream `(master_seed, g, i)`, drawn in
//! flat-profile order (or, for network games, in the order of the agent's
//! closed-neighbourhood profiles). Consequences that the tests pin down:
//!
//! - a copula game with identity correlation is bit-identical to the
//!   i.i.d. game with the same seed and index;
//! - a network game on the complete graph is bit-identical as well.

use serde::{Deserialize, Serialize};

use crate::dist::{std_normal_cdf, std_normal_quantile, DistributionSpec};
use crate::game::{Game, GameShape};
use crate::graph::InteractionGraph;
use crate::rng::RandomStream;
use crate::{Error, Result};

/// Pivots at or below this magnitude are treated as exact zeros.
const PIVOT_TOLERANCE: f64 = 1e-12;
/// Residual allowed in a column whose pivot was clamped to zero.
const DEGENERATE_RESIDUAL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeedSpec {
    pub master_seed: u64,
}

impl SeedSpec {
    pub fn new(master_seed: u64) -> Self {
        Self { master_seed }
    }

    pub fn stream(&self, game_index: u64, agent: usize) -> RandomStream {
        RandomStream::new(self.master_seed, game_index, agent as u64)
    }
}

/// Symmetric correlation matrix with unit diagonal, validated as positive
/// semidefinite through a pivot-clamped Cholesky factorisation.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationMatrix {
    entries: Vec<Vec<f64>>,
    lower: Vec<Vec<f64>>,
}

impl CorrelationMatrix {
    pub fn new(entries: Vec<Vec<f64>>) -> Result<Self> {
        let n = entries.len();
        if n == 0 {
            return Err(Error::InvalidCorrelation("matrix is empty".into()));
        }
        for (i, row) in entries.iter().enumerate() {
            if row.len() != n {
                return Err(Error::InvalidCorrelation(format!(
                    "row {i} has {} entries, expected {n}",
                    row.len()
                )));
            }
            if row[i] != 1.0 {
                return Err(Error::InvalidCorrelation(format!("diagonal entry {i} is not 1")));
            }
            for (j, &v) in row.iter().enumerate() {
                if !(-1.0..=1.0).contains(&v) {
                    return Err(Error::InvalidCorrelation(format!(
                        "entry ({i}, {j}) = {v} is outside [-1, 1]"
                    )));
                }
                if v != entries[j][i] {
                    return Err(Error::InvalidCorrelation(format!(
                        "entries ({i}, {j}) and ({j}, {i}) differ"
                    )));
                }
            }
        }
        let lower = cholesky(&entries)?;
        Ok(Self { entries, lower })
    }

    pub fn identity(n: usize) -> Self {
        let entries: Vec<Vec<f64>> = (0..n)
            .map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
            .collect();
        Self {
            lower: entries.clone(),
            entries,
        }
    }

    /// Every off-diagonal entry equal to `rho`.
    pub fn equicorrelated(n: usize, rho: f64) -> Result<Self> {
        let entries = (0..n)
            .map(|i| (0..n).map(|j| if i == j { 1.0 } else { rho }).collect())
            .collect();
        Self::new(entries)
    }

    pub fn size(&self) -> usize {
        self.entries.len()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i][j]
    }

    pub fn entries(&self) -> &[Vec<f64>] {
        &self.entries
    }

    /// Lower-triangular factor `L` with `L Lᵀ = δ`.
    pub fn factor(&self) -> &[Vec<f64>] {
        &self.lower
    }

    /// Agent `i` is uncorrelated with every other agent.
    fn is_isolated(&self, i: usize) -> bool {
        self.entries[i]
            .iter()
            .enumerate()
            .all(|(j, &v)| j == i || v == 0.0)
    }
}

fn cholesky(a: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
    let n = a.len();
    let mut l = vec![vec![0.0; n]; n];
    for j in 0..n {
        let pivot = a[j][j] - (0..j).map(|k| l[j][k] * l[j][k]).sum::<f64>();
        if pivot < -PIVOT_TOLERANCE {
            return Err(Error::NotPositiveSemidefinite { row: j, pivot });
        }
        if pivot <= PIVOT_TOLERANCE {
            // Rank-deficient direction: the rest of the column must vanish.
            for i in j + 1..n {
                let residual = a[i][j] - (0..j).map(|k| l[i][k] * l[j][k]).sum::<f64>();
                if residual.abs() > DEGENERATE_RESIDUAL {
                    return Err(Error::NotPositiveSemidefinite { row: j, pivot });
                }
            }
            continue;
        }
        let d = pivot.sqrt();
        l[j][j] = d;
        for i in j + 1..n {
            let residual = a[i][j] - (0..j).map(|k| l[i][k] * l[j][k]).sum::<f64>();
            l[i][j] = residual / d;
        }
    }
    Ok(l)
}

/// A prepared generator for one measure and one shape, reusable across
/// game indices.
#[derive(Debug, Clone)]
pub enum Generator {
    Iid {
        shape: GameShape,
        dist: DistributionSpec,
        seed: SeedSpec,
    },
    Copula {
        shape: GameShape,
        dist: DistributionSpec,
        seed: SeedSpec,
        delta: CorrelationMatrix,
    },
    Network {
        shape: GameShape,
        dist: DistributionSpec,
        seed: SeedSpec,
        blocks: Vec<NeighborhoodBlock>,
    },
}

/// Closed neighbourhood of one agent and the strides of its local profile
/// index (first member fastest).
#[derive(Debug, Clone)]
pub struct NeighborhoodBlock {
    members: Vec<usize>,
    local_strides: Vec<usize>,
    local_profiles: usize,
}

impl Generator {
    pub fn iid(shape: GameShape, dist: DistributionSpec, seed: SeedSpec) -> Self {
        Self::Iid { shape, dist, seed }
    }

    pub fn copula(
        shape: GameShape,
        dist: DistributionSpec,
        seed: SeedSpec,
        delta: CorrelationMatrix,
    ) -> Result<Self> {
        if delta.size() != shape.num_agents() {
            return Err(Error::InvalidCorrelation(format!(
                "matrix is {0}x{0} but the game has {1} agents",
                delta.size(),
                shape.num_agents()
            )));
        }
        Ok(Self::Copula {
            shape,
            dist,
            seed,
            delta,
        })
    }

    pub fn network(
        shape: GameShape,
        dist: DistributionSpec,
        seed: SeedSpec,
        graph: &InteractionGraph,
    ) -> Result<Self> {
        if graph.num_vertices() != shape.num_agents() {
            return Err(Error::InvalidGraph(format!(
                "graph has {} vertices but the game has {} agents",
                graph.num_vertices(),
                shape.num_agents()
            )));
        }
        let blocks = (0..shape.num_agents())
            .map(|i| {
                let members = graph.closed_neighborhood(i);
                let mut local_strides = Vec::with_capacity(members.len());
                let mut local_profiles = 1;
                for &m in &members {
                    local_strides.push(local_profiles);
                    local_profiles *= shape.actions(m);
                }
                NeighborhoodBlock {
                    members,
                    local_strides,
                    local_profiles,
                }
            })
            .collect();
        Ok(Self::Network {
            shape,
            dist,
            seed,
            blocks,
        })
    }

    pub fn shape(&self) -> &GameShape {
        match self {
            Self::Iid { shape, .. } | Self::Copula { shape, .. } | Self::Network { shape, .. } => {
                shape
            }
        }
    }

    pub fn generate(&self, game_index: u64) -> Game {
        let mut game = Game::zeros(self.shape().clone());
        self.fill(game_index, &mut game);
        game
    }

    /// Overwrite `game` (which must have this generator's shape).
    pub fn fill(&self, game_index: u64, game: &mut Game) {
        assert_eq!(game.shape(), self.shape(), "game buffer has the wrong shape");
        match self {
            Self::Iid { shape, dist, seed } => fill_iid(shape, dist, seed, game_index, game),
            Self::Copula {
                shape,
                dist,
                seed,
                delta,
            } => fill_copula(shape, dist, seed, delta, game_index, game),
            Self::Network {
                shape,
                dist,
                seed,
                blocks,
            } => fill_network(shape, dist, seed, blocks, game_index, game),
        }
    }
}

fn fill_iid(shape: &GameShape, dist: &DistributionSpec, seed: &SeedSpec, game_index: u64, game: &mut Game) {
    let p = shape.num_profiles();
    let utilities = game.utilities_mut();
    for agent in 0..shape.num_agents() {
        let mut stream = seed.stream(game_index, agent);
        for u in &mut utilities[agent * p..(agent + 1) * p] {
            *u = dist.sample(&mut stream);
        }
    }
}

fn fill_copula(
    shape: &GameShape,
    dist: &DistributionSpec,
    seed: &SeedSpec,
    delta: &CorrelationMatrix,
    game_index: u64,
    game: &mut Game,
) {
    let n = shape.num_agents();
    let p = shape.num_profiles();
    let utilities = game.utilities_mut();
    // Raw uniforms, laid out exactly like the i.i.d. generator's draws.
    for agent in 0..n {
        seed.stream(game_index, agent)
            .fill_open01(&mut utilities[agent * p..(agent + 1) * p]);
    }
    let isolated: Vec<bool> = (0..n).map(|i| delta.is_isolated(i)).collect();
    let lower = delta.factor();
    let mut normals = vec![0.0; n];
    for profile in 0..p {
        for (i, g) in normals.iter_mut().enumerate() {
            *g = std_normal_quantile(utilities[i * p + profile]);
        }
        for i in 0..n {
            let slot = &mut utilities[i * p + profile];
            if isolated[i] {
                // Independent marginal: invert the raw uniform directly.
                *slot = dist.quantile_unchecked(*slot);
                continue;
            }
            let z: f64 = (0..=i).map(|j| lower[i][j] * normals[j]).sum();
            // Invert through whichever tail keeps precision.
            *slot = if z < 0.0 {
                dist.quantile_unchecked(std_normal_cdf(z).max(f64::MIN_POSITIVE))
            } else {
                dist.quantile_upper_unchecked(std_normal_cdf(-z).max(f64::MIN_POSITIVE))
            };
        }
    }
}

fn fill_network(
    shape: &GameShape,
    dist: &DistributionSpec,
    seed: &SeedSpec,
    blocks: &[NeighborhoodBlock],
    game_index: u64,
    game: &mut Game,
) {
    let n = shape.num_agents();
    let p = shape.num_profiles();
    let utilities = game.utilities_mut();
    let mut local_values = Vec::new();
    let mut actions = vec![0usize; n];
    for (agent, block) in blocks.iter().enumerate() {
        let mut stream = seed.stream(game_index, agent);
        local_values.clear();
        local_values.extend((0..block.local_profiles).map(|_| dist.sample(&mut stream)));
        actions.iter_mut().for_each(|a| *a = 0);
        let out = &mut utilities[agent * p..(agent + 1) * p];
        for slot in out.iter_mut() {
            let local: usize = block
                .members
                .iter()
                .zip(&block.local_strides)
                .map(|(&m, &s)| actions[m] * s)
                .sum();
            *slot = local_values[local];
            // Odometer increment, agent 0 fastest.
            for (a, &k) in actions.iter_mut().zip(shape.action_counts()) {
                *a += 1;
                if *a < k {
                    break;
                }
                *a = 0;
            }
        }
    }
}

pub fn gen_iid(shape: &GameShape, dist: &DistributionSpec, seed: SeedSpec, game_index: u64) -> Game {
    Generator::iid(shape.clone(), *dist, seed).generate(game_index)
}

pub fn gen_copula(
    shape: &GameShape,
    dist: &DistributionSpec,
    delta: &CorrelationMatrix,
    seed: SeedSpec,
    game_index: u64,
) -> Result<Game> {
    Ok(Generator::copula(shape.clone(), *dist, seed, delta.clone())?.generate(game_index))
}

pub fn gen_network(
    shape: &GameShape,
    graph: &InteractionGraph,
    dist: &DistributionSpec,
    seed: SeedSpec,
    game_index: u64,
) -> Result<Game> {
    Ok(Generator::network(shape.clone(), *dist, seed, graph)?.generate(game_index))
}
