//! Built-in controllers used for evaluation runs. Neither looks at the safe
//! sets; keeping the grid safe is entirely the shield's job.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::Observation;
use crate::gridmodel::GridParams;
use crate::shield::Action;

pub trait Agent: Send {
    fn act(&mut self, obs: &Observation, params: &GridParams) -> Action;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AgentKind {
    Random,
    Greedy,
}

impl std::str::FromStr for AgentKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "random" => Ok(AgentKind::Random),
            "greedy" => Ok(AgentKind::Greedy),
            other => Err(format!("unknown agent '{other}' (expected random or greedy)")),
        }
    }
}

pub fn make_agent(kind: AgentKind, seed: u64) -> Box<dyn Agent> {
    match kind {
        AgentKind::Random => Box::new(RandomAdmissibleAgent::new(seed)),
        AgentKind::Greedy => Box::new(GreedyAgent),
    }
}

/// Uniform draws from the rate boxes; balance is left to the shield.
#[derive(Debug, Clone)]
pub struct RandomAdmissibleAgent {
    rng: ChaCha8Rng,
}

impl RandomAdmissibleAgent {
    pub fn new(seed: u64) -> Self {
        RandomAdmissibleAgent {
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }
}

impl Agent for RandomAdmissibleAgent {
    fn act(&mut self, _obs: &Observation, params: &GridParams) -> Action {
        let mut draw = |lo: f64, hi: f64| if hi > lo { self.rng.random_range(lo..=hi) } else { lo };
        let p_storage = params.storages.iter().map(|s| draw(s.p_min, s.p_max)).collect();
        let p_market = params.markets.iter().map(|m| draw(m.p_min, m.p_max)).collect();
        Action::new(p_storage, p_market)
    }
}

/// Storages absorb a surplus and cover a deficit in equal shares up to their
/// rate limits; the first market takes whatever is left.
#[derive(Debug, Clone, Copy, Default)]
pub struct GreedyAgent;

impl Agent for GreedyAgent {
    fn act(&mut self, obs: &Observation, params: &GridParams) -> Action {
        let d = obs.p_load + obs.p_gen;
        let n = params.n() as f64;
        let share = -d / n;
        let p_storage: Vec<f64> = params
            .storages
            .iter()
            .map(|s| share.clamp(s.p_min, s.p_max))
            .collect();
        let mut p_market = vec![0.0; params.m()];
        if let Some(first) = p_market.first_mut() {
            *first = -d - p_storage.iter().sum::<f64>();
        }
        Action::new(p_storage, p_market)
    }
}
