//! Pure equilibrium analysis.
//!
//! `Δ_i(a)` is the best alternative utility on agent `i`'s line through `a`
//! minus `u_i(a)`. A profile is
//!
//! - a Nash equilibrium iff every `Δ_i ≤ 0`;
//! - an ε-equilibrium iff every `Δ_i ≤ ε`;
//! - an ε*-equilibrium iff it is Nash, or exactly one agent has
//!   `0 < Δ_i ≤ ε` and all others are best-responding.
//!
//! Comparisons are exact: no tolerance is applied anywhere.

use serde::Serialize;

use crate::game::{Game, GameShape};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Target {
    Nash,
    Eps,
    EpsStar,
}

impl Target {
    pub const ALL: [Target; 3] = [Target::Nash, Target::Eps, Target::EpsStar];

    pub fn name(self) -> &'static str {
        match self {
            Target::Nash => "nash",
            Target::Eps => "eps",
            Target::EpsStar => "eps_star",
        }
    }
}

impl std::str::FromStr for Target {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "nash" => Ok(Target::Nash),
            "eps" => Ok(Target::Eps),
            "eps_star" | "eps*" => Ok(Target::EpsStar),
            other => Err(Error::Parse(format!("unknown target `{other}`"))),
        }
    }
}

impl<'de> serde::Deserialize<'de> for Target {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EquilibriumReport {
    pub epsilon: f64,
    pub count_nash: u64,
    pub count_eps: u64,
    pub count_eps_star: u64,
    /// Flat profile indices, ascending. Filled only when requested.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub nash_profiles: Option<Vec<usize>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eps_profiles: Option<Vec<usize>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eps_star_profiles: Option<Vec<usize>>,
}

impl EquilibriumReport {
    pub fn count(&self, target: Target) -> u64 {
        match target {
            Target::Nash => self.count_nash,
            Target::Eps => self.count_eps,
            Target::EpsStar => self.count_eps_star,
        }
    }

    fn empty(epsilon: f64, with_profiles: bool) -> Self {
        let list = || with_profiles.then(Vec::new);
        Self {
            epsilon,
            count_nash: 0,
            count_eps: 0,
            count_eps_star: 0,
            nash_profiles: list(),
            eps_profiles: list(),
            eps_star_profiles: list(),
        }
    }

    fn record(&mut self, flat: usize, max_gain: f64, positive: u32) {
        if max_gain > self.epsilon {
            return;
        }
        self.count_eps += 1;
        if let Some(v) = &mut self.eps_profiles {
            v.push(flat);
        }
        if positive <= 1 {
            self.count_eps_star += 1;
            if let Some(v) = &mut self.eps_star_profiles {
                v.push(flat);
            }
        }
        if positive == 0 {
            self.count_nash += 1;
            if let Some(v) = &mut self.nash_profiles {
                v.push(flat);
            }
        }
    }
}

/// Per-line (max, runner-up, argmax) for one agent. Lines are indexed by
/// the flat profile with the agent's own action set to zero, compacted.
#[derive(Debug, Clone)]
pub struct LineStats {
    agent: usize,
    stride: usize,
    actions: usize,
    max: Vec<f64>,
    second: Vec<f64>,
    argmax: Vec<usize>,
}

impl LineStats {
    pub fn compute(game: &Game, agent: usize) -> Result<Self> {
        game.shape().check_agent(agent)?;
        let shape = game.shape();
        let stride = shape.stride(agent);
        let actions = shape.actions(agent);
        let lines = shape.num_profiles() / actions;
        let u = game.agent_utilities(agent);
        let mut max = Vec::with_capacity(lines);
        let mut second = Vec::with_capacity(lines);
        let mut argmax = Vec::with_capacity(lines);
        for line in 0..lines {
            let base = line_base(line, stride, actions);
            let (m, s, arg) = top_two(u, base, stride, actions);
            max.push(m);
            second.push(s);
            argmax.push(arg);
        }
        Ok(Self {
            agent,
            stride,
            actions,
            max,
            second,
            argmax,
        })
    }

    pub fn agent(&self) -> usize {
        self.agent
    }

    pub fn num_lines(&self) -> usize {
        self.max.len()
    }

    /// Index of the line through `flat`.
    pub fn line_of(&self, flat: usize) -> usize {
        let inner = flat % self.stride;
        let outer = flat / (self.stride * self.actions);
        outer * self.stride + inner
    }

    pub fn max(&self, line: usize) -> f64 {
        self.max[line]
    }

    pub fn second(&self, line: usize) -> f64 {
        self.second[line]
    }

    pub fn argmax(&self, line: usize) -> usize {
        self.argmax[line]
    }

    /// Best utility on the line excluding action `own`.
    pub fn best_excluding(&self, line: usize, own: usize) -> f64 {
        if self.argmax[line] == own {
            self.second[line]
        } else {
            self.max[line]
        }
    }
}

#[inline]
fn line_base(line: usize, stride: usize, actions: usize) -> usize {
    let inner = line % stride;
    let outer = line / stride;
    outer * stride * actions + inner
}

#[inline]
fn top_two(u: &[f64], base: usize, stride: usize, actions: usize) -> (f64, f64, usize) {
    let (mut m, mut s, mut arg) = (f64::NEG_INFINITY, f64::NEG_INFINITY, 0);
    for x in 0..actions {
        let v = u[base + x * stride];
        if v > m {
            s = m;
            m = v;
            arg = x;
        } else if v > s {
            s = v;
        }
    }
    (m, s, arg)
}

/// `Δ_i(a)`, computed directly from the line.
pub fn deviation_gain(game: &Game, agent: usize, flat: usize) -> Result<f64> {
    let shape = game.shape();
    shape.check_agent(agent)?;
    shape.check_profile(flat)?;
    Ok(gain_direct(game, shape, agent, flat))
}

#[inline]
fn gain_direct(game: &Game, shape: &GameShape, agent: usize, flat: usize) -> f64 {
    let stride = shape.stride(agent);
    let k = shape.actions(agent);
    let own = (flat / stride) % k;
    let base = flat - own * stride;
    let u = game.agent_utilities(agent);
    let best = (0..k)
        .filter(|&x| x != own)
        .map(|x| u[base + x * stride])
        .fold(f64::NEG_INFINITY, f64::max);
    best - u[flat]
}

fn check_epsilon(epsilon: f64) -> Result<()> {
    if epsilon.is_nan() || epsilon < 0.0 {
        return Err(Error::NegativeEpsilon(epsilon));
    }
    Ok(())
}

/// Count all three equilibrium notions in one sweep.
pub fn analyze(game: &Game, epsilon: f64) -> Result<EquilibriumReport> {
    analyze_impl(game, epsilon, false)
}

/// As [`analyze`], also listing the qualifying profiles.
pub fn analyze_with_profiles(game: &Game, epsilon: f64) -> Result<EquilibriumReport> {
    analyze_impl(game, epsilon, true)
}

fn analyze_impl(game: &Game, epsilon: f64, with_profiles: bool) -> Result<EquilibriumReport> {
    check_epsilon(epsilon)?;
    let shape = game.shape();
    let p = shape.num_profiles();
    let mut max_gain = vec![f64::NEG_INFINITY; p];
    let mut positive = vec![0u8; p];
    for agent in 0..shape.num_agents() {
        let stride = shape.stride(agent);
        let k = shape.actions(agent);
        let u = game.agent_utilities(agent);
        for line in 0..p / k {
            let base = line_base(line, stride, k);
            let (m, s, arg) = top_two(u, base, stride, k);
            for x in 0..k {
                let flat = base + x * stride;
                let best = if x == arg { s } else { m };
                let gain = best - u[flat];
                if gain > max_gain[flat] {
                    max_gain[flat] = gain;
                }
                if gain > 0.0 {
                    positive[flat] = positive[flat].saturating_add(1);
                }
            }
        }
    }
    let mut report = EquilibriumReport::empty(epsilon, with_profiles);
    for flat in 0..p {
        report.record(flat, max_gain[flat], positive[flat] as u32);
    }
    Ok(report)
}

/// Literal definition, one gain at a time. Used as a test oracle.
pub fn naive_analyze(game: &Game, epsilon: f64) -> Result<EquilibriumReport> {
    check_epsilon(epsilon)?;
    let shape = game.shape();
    let mut report = EquilibriumReport::empty(epsilon, true);
    for flat in 0..shape.num_profiles() {
        let gains: Vec<f64> = (0..shape.num_agents())
            .map(|i| deviation_gain(game, i, flat))
            .collect::<Result<_>>()?;
        let best_responding = gains.iter().filter(|&&g| g <= 0.0).count();
        let near = gains.iter().filter(|&&g| g > 0.0 && g <= epsilon).count();
        let n = gains.len();
        let nash = best_responding == n;
        let eps = gains.iter().all(|&g| g <= epsilon);
        let eps_star = nash || (near == 1 && best_responding == n - 1);
        if nash {
            report.count_nash += 1;
            report.nash_profiles.as_mut().unwrap().push(flat);
        }
        if eps {
            report.count_eps += 1;
            report.eps_profiles.as_mut().unwrap().push(flat);
        }
        if eps_star {
            report.count_eps_star += 1;
            report.eps_star_profiles.as_mut().unwrap().push(flat);
        }
    }
    Ok(report)
}

/// Whether at least one profile qualifies for `target`. Profiles are
/// checked one at a time and agent by agent, returning on the first
/// witness.
pub fn exists(game: &Game, epsilon: f64, target: Target) -> Result<bool> {
    check_epsilon(epsilon)?;
    let shape = game.shape();
    let n = shape.num_agents();
    let strides = shape.strides();
    let counts = shape.action_counts();
    let tables: Vec<&[f64]> = (0..n).map(|i| game.agent_utilities(i)).collect();
    let slack = if target == Target::Nash { 0.0 } else { epsilon };
    let mut actions = vec![0usize; n];
    'profiles: for flat in 0..shape.num_profiles() {
        let mut positive = 0u32;
        for i in 0..n {
            let u = tables[i];
            let own_value = u[flat];
            let stride = strides[i];
            let base = flat - actions[i] * stride;
            let mut best = f64::NEG_INFINITY;
            let mut rejected = false;
            for x in 0..counts[i] {
                if x == actions[i] {
                    continue;
                }
                let v = u[base + x * stride];
                // Compare gains, not raw utilities, to match the counting path.
                if v - own_value > slack {
                    rejected = true;
                    break;
                }
                best = best.max(v);
            }
            if !rejected && best - own_value > 0.0 {
                positive += 1;
                rejected = target == Target::EpsStar && positive > 1;
            }
            if rejected {
                advance(&mut actions, counts);
                continue 'profiles;
            }
        }
        return Ok(true);
    }
    Ok(false)
}

pub fn exists_eps_star(game: &Game, epsilon: f64) -> Result<bool> {
    exists(game, epsilon, Target::EpsStar)
}

#[inline]
fn advance(actions: &mut [usize], counts: &[usize]) {
    for (a, &k) in actions.iter_mut().zip(counts) {
        *a += 1;
        if *a < k {
            return;
        }
        *a = 0;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dist::DistributionSpec;
    use crate::generate::{gen_iid, SeedSpec};

    fn matching_pennies() -> Game {
        // Profiles (row, col) in flat order: HH, TH, HT, TT.
        Game::from_tables(
            vec![2, 2],
            vec![vec![1.0, -1.0, -1.0, 1.0], vec![-1.0, 1.0, 1.0, -1.0]],
        )
        .unwrap()
    }

    fn counts(r: &EquilibriumReport) -> (u64, u64, u64) {
        (r.count_nash, r.count_eps, r.count_eps_star)
    }

    #[test]
    fn matching_pennies_gains() {
        let g = matching_pennies();
        assert_eq!(deviation_gain(&g, 1, 0).unwrap(), 2.0);
        assert_eq!(deviation_gain(&g, 0, 0).unwrap(), -2.0);
        assert!(deviation_gain(&g, 2, 0).is_err());
        assert!(deviation_gain(&g, 0, 4).is_err());
    }

    #[test]
    fn matching_pennies_counts() {
        let g = matching_pennies();
        assert_eq!(counts(&analyze(&g, 1.9).unwrap()), (0, 0, 0));
        // Each profile has one agent at +2 and the other at -2.
        assert_eq!(counts(&analyze(&g, 2.0).unwrap()), (0, 4, 4));
        assert_eq!(counts(&analyze(&g, 3.0).unwrap()), (0, 4, 4));
        for eps in [0.0, 1.9, 2.0, 3.0] {
            assert_eq!(analyze_with_profiles(&g, eps).unwrap(), naive_analyze(&g, eps).unwrap());
        }
        assert!(exists_eps_star(&g, 3.0).unwrap());
        assert!(!exists_eps_star(&g, 1.0).unwrap());
        assert!(!exists(&g, 0.0, Target::Nash).unwrap());
        assert!(analyze(&g, -0.1).is_err());
        assert!(exists(&g, f64::NAN, Target::Eps).is_err());
    }

    #[test]
    fn dominant_profile_and_total_ties() {
        let g = Game::from_tables(vec![2, 2], vec![vec![0.0, 0.2, 0.1, 1.0], vec![0.0, 0.2, 0.1, 1.0]]).unwrap();
        let r = analyze_with_profiles(&g, 0.0).unwrap();
        assert_eq!(counts(&r), (1, 1, 1));
        assert_eq!(r.nash_profiles, Some(vec![3]));

        let flat = Game::from_tables(vec![2, 3, 2], vec![vec![0.5; 12]; 3]).unwrap();
        assert_eq!(counts(&analyze(&flat, 0.0).unwrap()), (12, 12, 12));
        assert_eq!(counts(&naive_analyze(&flat, 0.0).unwrap()), (12, 12, 12));
    }

    #[test]
    fn two_by_two_best_response_enumeration() {
        // A 2x2 game is determined, for pure NE purposes, by each agent's
        // best response to each opposing action: 2^4 patterns. Build one
        // game per pattern and count those with a pure NE.
        let mut with_ne = 0;
        for pattern in 0u32..16 {
            let bit = |b: u32| (pattern >> b) & 1 == 1;
            let mut row = vec![0.0; 4];
            let mut col = vec![0.0; 4];
            for opp in 0..2 {
                // Row agent (agent 0) best response against column action `opp`.
                let br = bit(opp as u32) as usize;
                row[br + 2 * opp] = 1.0;
                row[(1 - br) + 2 * opp] = 0.25 * (opp as f64 + 1.0) / 4.0;
                let br = bit(2 + opp as u32) as usize;
                col[opp + 2 * br] = 1.0;
                col[opp + 2 * (1 - br)] = 0.1 * (opp as f64 + 1.0);
            }
            let g = Game::from_tables(vec![2, 2], vec![row, col]).unwrap();
            let r = analyze(&g, 0.0).unwrap();
            assert_eq!(r, naive_analyze(&g, 0.0).unwrap().without_profiles());
            assert_eq!(r.count_nash >= 1, exists(&g, 0.0, Target::Nash).unwrap());
            with_ne += (r.count_nash >= 1) as u32;
        }
        assert_eq!(with_ne, 14);
        assert_eq!(with_ne as f64 / 16.0, 0.875);
    }

    impl EquilibriumReport {
        fn without_profiles(mut self) -> Self {
            self.nash_profiles = None;
            self.eps_profiles = None;
            self.eps_star_profiles = None;
            self
        }
    }

    fn splitmix(state: &mut u64) -> u64 {
        *state = state.wrapping_add(0x9e37_79b9_7f4a_7c15);
        let mut z = *state;
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        z ^ (z >> 31)
    }

    #[test]
    fn fast_scan_matches_oracle() {
        let dist = DistributionSpec::uniform(0.0, 1.0).unwrap();
        let mut state = 11u64;
        for idx in 0..1000 {
            let n = 2 + (splitmix(&mut state) % 2) as usize;
            let counts: Vec<usize> = (0..n).map(|_| 2 + (splitmix(&mut state) % 2) as usize).collect();
            let shape = GameShape::new(counts).unwrap();
            let mut g = gen_iid(&shape, &dist, SeedSpec::new(99), idx);
            if idx % 5 == 0 {
                // Coarsen utilities to create ties.
                let tables: Vec<Vec<f64>> = (0..n)
                    .map(|i| g.agent_utilities(i).iter().map(|u| (u * 4.0).floor() / 4.0).collect())
                    .collect();
                g = Game::from_tables(shape.action_counts().to_vec(), tables).unwrap();
            }
            let eps = (splitmix(&mut state) % 1000) as f64 / 500.0;
            let fast = analyze_with_profiles(&g, eps).unwrap();
            assert_eq!(fast, naive_analyze(&g, eps).unwrap());
            for t in Target::ALL {
                assert_eq!(exists(&g, eps, t).unwrap(), fast.count(t) >= 1, "{t:?}");
            }
        }
    }

    #[test]
    fn line_stats_match_brute_force() {
        let shape = GameShape::new(vec![3, 2, 4]).unwrap();
        let g = gen_iid(&shape, &"gaussian(0,1)".parse().unwrap(), SeedSpec::new(1), 0);
        for agent in 0..3 {
            let stats = LineStats::compute(&g, agent).unwrap();
            assert_eq!(stats.num_lines(), shape.num_profiles() / shape.actions(agent));
            for flat in 0..shape.num_profiles() {
                let line = shape.line(flat, agent).unwrap();
                let values: Vec<f64> = line.iter().map(|&a| g.utility(agent, a).unwrap()).collect();
                let id = stats.line_of(flat);
                let m = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                assert_eq!(stats.max(id), m);
                assert_eq!(values[stats.argmax(id)], m);
                let own = shape.action_of(flat, agent);
                assert_eq!(
                    stats.best_excluding(id, own) - values[own],
                    deviation_gain(&g, agent, flat).unwrap()
                );
            }
        }
    }

    #[test]
    fn refinement_and_monotonicity() {
        let dist = DistributionSpec::uniform(0.0, 1.0).unwrap();
        let shape = GameShape::uniform(4, 3).unwrap();
        for idx in 0..50 {
            let g = gen_iid(&shape, &dist, SeedSpec::new(5), idx);
            let zero = analyze(&g, 0.0).unwrap();
            assert_eq!(zero.count_nash, zero.count_eps);
            assert_eq!(zero.count_nash, zero.count_eps_star);
            let mut prev = zero;
            for eps in [0.01, 0.05, 0.1, 0.3, 1.0] {
                let r = analyze(&g, eps).unwrap();
                assert!(r.count_nash <= r.count_eps_star && r.count_eps_star <= r.count_eps);
                assert_eq!(r.count_nash, prev.count_nash);
                assert!(r.count_eps >= prev.count_eps);
                assert!(r.count_eps_star >= prev.count_eps_star);
                prev = r;
            }
            assert_eq!(prev.count_eps, shape.num_profiles() as u64);
        }
    }

    #[test]
    fn translation_and_scale_invariance() {
        let dist = DistributionSpec::uniform(0.0, 1.0).unwrap();
        let shape = GameShape::new(vec![2, 3, 2]).unwrap();
        for idx in 0..50 {
            // Dyadic utilities with 20 bits keep every shift and scale exact.
            let raw = gen_iid(&shape, &dist, SeedSpec::new(8), idx);
            let coarse: Vec<Vec<f64>> = (0..3)
                .map(|i| raw.agent_utilities(i).iter().map(|u| (u * 1048576.0).floor() / 1048576.0).collect())
                .collect();
            let g = Game::from_tables(vec![2, 3, 2], coarse).unwrap();
            let shifted: Vec<Vec<f64>> = (0..3)
                .map(|i| {
                    let c = if i == 1 { 8.0 } else { 0.0 };
                    g.agent_utilities(i).iter().map(|u| u + c).collect()
                })
                .collect();
            let scaled: Vec<Vec<f64>> =
                (0..3).map(|i| g.agent_utilities(i).iter().map(|u| u * 4.0).collect()).collect();
            let shifted = Game::from_tables(vec![2, 3, 2], shifted).unwrap();
            let scaled = Game::from_tables(vec![2, 3, 2], scaled).unwrap();
            for eps in [0.0, 0.125, 0.25] {
                let base = counts(&analyze(&g, eps).unwrap());
                assert_eq!(base, counts(&analyze(&scaled, 4.0 * eps).unwrap()));
                assert_eq!(base, counts(&analyze(&shifted, eps).unwrap()));
            }
        }
    }
}
