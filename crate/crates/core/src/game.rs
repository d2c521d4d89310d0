//! Normal-form games over a flat, mixed-radix profile index.
//!
//! A profile `(a_0, ..., a_{n-1})` maps to `Σ a_i · stride_i` with
//! `stride_0 = 1` and `stride_{i+1} = stride_i · |A_i|`, so agent 0 varies
//! fastest. Utilities are stored agent-major: the `num_profiles` entries of
//! agent 0 first, then agent 1, and so on.

use std::fmt::Write as _;

use serde::Deserialize;

use crate::{Error, Result};

/// Upper bound on `|N| · Π|A_i|`, the number of stored utilities.
pub const MAX_ENTRIES: u64 = 1 << 31;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GameShape {
    action_counts: Vec<usize>,
    strides: Vec<usize>,
    num_profiles: usize,
}

impl GameShape {
    pub fn new(action_counts: Vec<usize>) -> Result<Self> {
        if action_counts.is_empty() {
            return Err(Error::InvalidShape("a game needs at least one agent".into()));
        }
        if let Some(&bad) = action_counts.iter().find(|&&k| k < 2) {
            return Err(Error::InvalidShape(format!(
                "every agent needs at least two actions, got {bad}"
            )));
        }
        let mut profiles: u128 = 1;
        let mut strides = Vec::with_capacity(action_counts.len());
        for &k in &action_counts {
            strides.push(profiles.min(u64::MAX as u128) as usize);
            profiles = profiles.saturating_mul(k as u128);
        }
        let entries = profiles.saturating_mul(action_counts.len() as u128);
        if entries > MAX_ENTRIES as u128 {
            return Err(Error::ShapeTooLarge {
                entries,
                cap: MAX_ENTRIES,
            });
        }
        Ok(Self {
            action_counts,
            strides,
            num_profiles: profiles as usize,
        })
    }

    /// `agents` agents with `actions` actions each.
    pub fn uniform(agents: usize, actions: usize) -> Result<Self> {
        Self::new(vec![actions; agents])
    }

    pub fn num_agents(&self) -> usize {
        self.action_counts.len()
    }

    pub fn action_counts(&self) -> &[usize] {
        &self.action_counts
    }

    pub fn actions(&self, agent: usize) -> usize {
        self.action_counts[agent]
    }

    pub fn strides(&self) -> &[usize] {
        &self.strides
    }

    pub fn stride(&self, agent: usize) -> usize {
        self.strides[agent]
    }

    pub fn num_profiles(&self) -> usize {
        self.num_profiles
    }

    pub fn num_entries(&self) -> usize {
        self.num_profiles * self.num_agents()
    }

    pub fn encode(&self, actions: &[usize]) -> Result<usize> {
        if actions.len() != self.num_agents() {
            return Err(Error::IndexOutOfRange(format!(
                "profile has {} components, shape has {} agents",
                actions.len(),
                self.num_agents()
            )));
        }
        let mut flat = 0;
        for (i, (&a, &k)) in actions.iter().zip(&self.action_counts).enumerate() {
            if a >= k {
                return Err(Error::IndexOutOfRange(format!(
                    "action {a} of agent {i} is not below {k}"
                )));
            }
            flat += a * self.strides[i];
        }
        Ok(flat)
    }

    pub fn decode(&self, flat: usize) -> Result<Vec<usize>> {
        let mut out = vec![0; self.num_agents()];
        self.decode_into(flat, &mut out)?;
        Ok(out)
    }

    pub fn decode_into(&self, mut flat: usize, out: &mut [usize]) -> Result<()> {
        self.check_profile(flat)?;
        for (slot, &k) in out.iter_mut().zip(&self.action_counts) {
            *slot = flat % k;
            flat /= k;
        }
        Ok(())
    }

    /// Action of `agent` in the profile `flat` (unchecked).
    #[inline]
    pub fn action_of(&self, flat: usize, agent: usize) -> usize {
        (flat / self.strides[agent]) % self.action_counts[agent]
    }

    /// The line through `flat` in direction `agent`: the `|A_agent|`
    /// profiles that agree with `flat` off that coordinate, ordered by the
    /// agent's action.
    pub fn line(&self, flat: usize, agent: usize) -> Result<Vec<usize>> {
        self.check_profile(flat)?;
        self.check_agent(agent)?;
        let stride = self.strides[agent];
        let base = flat - self.action_of(flat, agent) * stride;
        Ok((0..self.action_counts[agent]).map(|x| base + x * stride).collect())
    }

    pub(crate) fn check_profile(&self, flat: usize) -> Result<()> {
        if flat >= self.num_profiles {
            return Err(Error::IndexOutOfRange(format!(
                "profile {flat} is not below {}",
                self.num_profiles
            )));
        }
        Ok(())
    }

    pub(crate) fn check_agent(&self, agent: usize) -> Result<()> {
        if agent >= self.num_agents() {
            return Err(Error::IndexOutOfRange(format!(
                "agent {agent} is not below {}",
                self.num_agents()
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Game {
    shape: GameShape,
    utilities: Vec<f64>,
}

impl Game {
    pub fn zeros(shape: GameShape) -> Self {
        let utilities = vec![0.0; shape.num_entries()];
        Self { shape, utilities }
    }

    /// Build from an agent-major flat tensor.
    pub fn from_flat(shape: GameShape, utilities: Vec<f64>) -> Result<Self> {
        if utilities.len() != shape.num_entries() {
            return Err(Error::InvalidGame(format!(
                "expected {} utilities, got {}",
                shape.num_entries(),
                utilities.len()
            )));
        }
        if let Some(pos) = utilities.iter().position(|u| !u.is_finite()) {
            return Err(Error::InvalidGame(format!("utility #{pos} is not finite")));
        }
        Ok(Self { shape, utilities })
    }

    /// Build from one table per agent, each in flat-profile order.
    pub fn from_tables(action_counts: Vec<usize>, tables: Vec<Vec<f64>>) -> Result<Self> {
        let shape = GameShape::new(action_counts)?;
        if tables.len() != shape.num_agents() {
            return Err(Error::InvalidGame(format!(
                "expected {} utility tables, got {}",
                shape.num_agents(),
                tables.len()
            )));
        }
        if let Some(t) = tables.iter().find(|t| t.len() != shape.num_profiles()) {
            return Err(Error::InvalidGame(format!(
                "utility table has {} entries, expected {}",
                t.len(),
                shape.num_profiles()
            )));
        }
        Self::from_flat(shape, tables.concat())
    }

    pub fn shape(&self) -> &GameShape {
        &self.shape
    }

    pub fn utilities(&self) -> &[f64] {
        &self.utilities
    }

    pub(crate) fn utilities_mut(&mut self) -> &mut [f64] {
        &mut self.utilities
    }

    /// All utilities of one agent, in flat-profile order.
    #[inline]
    pub fn agent_utilities(&self, agent: usize) -> &[f64] {
        let p = self.shape.num_profiles;
        &self.utilities[agent * p..(agent + 1) * p]
    }

    pub fn utility(&self, agent: usize, flat: usize) -> Result<f64> {
        self.shape.check_agent(agent)?;
        self.shape.check_profile(flat)?;
        Ok(self.utilities[agent * self.shape.num_profiles + flat])
    }

    pub fn set_utility(&mut self, agent: usize, flat: usize, value: f64) -> Result<()> {
        self.shape.check_agent(agent)?;
        self.shape.check_profile(flat)?;
        if !value.is_finite() {
            return Err(Error::InvalidGame(format!("utility {value} is not finite")));
        }
        self.utilities[agent * self.shape.num_profiles + flat] = value;
        Ok(())
    }

    /// Serialize as `{"actions":[...],"utilities":[[...],...]}` with every
    /// utility printed to 17 significant digits.
    pub fn to_json(&self) -> String {
        let mut out = String::with_capacity(24 * self.utilities.len() + 64);
        out.push_str("{\"actions\":[");
        for (i, k) in self.shape.action_counts.iter().enumerate() {
            if i > 0 {
                out.push(',');
            }
            write!(out, "{k}").unwrap();
        }
        out.push_str("],\"utilities\":[");
        for agent in 0..self.shape.num_agents() {
            if agent > 0 {
                out.push(',');
            }
            out.push('[');
            for (j, u) in self.agent_utilities(agent).iter().enumerate() {
                if j > 0 {
                    out.push(',');
                }
                write!(out, "{u:.16e}").unwrap();
            }
            out.push(']');
        }
        out.push_str("]}\n");
        out
    }

    pub fn from_json(text: &str) -> Result<Self> {
        #[derive(Deserialize)]
        #[serde(deny_unknown_fields)]
        struct GameFile {
            actions: Vec<usize>,
            utilities: Vec<Vec<f64>>,
        }
        let file: GameFile = serde_json::from_str(text)?;
        Self::from_tables(file.actions, file.utilities)
    }
}
