//! Small named games used by the examples and tests, plus a random generator.

use rand::Rng;

use crate::game::{GameSpec, UtilityStructure};
use crate::rational::{q, qi, Q};

fn names(items: &[&str]) -> Vec<String> {
    items.iter().map(|s| s.to_string()).collect()
}

/// Single agent, two arms, `u = f`. The state is the pair of arm means.
fn two_arm_with(low: Q, low_name: &str) -> UtilityStructure {
    let r1 = [low.clone(), low, qi(1), qi(1)];
    let r2 = [qi(0), qi(1), qi(0), qi(1)];
    let table = vec![r1.to_vec(), r2.to_vec()];
    UtilityStructure::new(GameSpec {
        action_names: vec![names(&["a1", "a2"])],
        state_names: vec![
            format!("{low_name}_zero"),
            format!("{low_name}_one"),
            "one_zero".into(),
            "one_one".into(),
        ],
        prior: vec![q(1, 4); 4],
        utilities: vec![table.clone()],
        reward: table,
    })
    .expect("valid instance")
}

/// Arm 1 has mean ½ or 1, arm 2 has mean 0 or 1, all four pairs equally likely.
pub fn two_arm() -> UtilityStructure {
    two_arm_with(q(1, 2), "half")
}

/// Like [`two_arm`] but arm 1's low mean is ¼, which leaves positive slack
/// for recommending arm 2 once arm 1 has been observed low.
pub fn two_arm_strict() -> UtilityStructure {
    two_arm_with(q(1, 4), "quarter")
}

/// One agent, one action, two equally likely states with utility `u1`, `u2`.
pub fn single_action_two_states(u1: Q, u2: Q) -> UtilityStructure {
    let row = vec![u1, u2];
    UtilityStructure::new(GameSpec {
        action_names: vec![names(&["only"])],
        state_names: names(&["low", "high"]),
        prior: vec![q(1, 2), q(1, 2)],
        utilities: vec![vec![row.clone()]],
        reward: vec![row],
    })
    .expect("valid instance")
}

/// One agent, two actions, two states; every utility and reward equals `value`.
pub fn constant_utility(value: Q) -> UtilityStructure {
    let table = vec![vec![value.clone(); 2]; 2];
    UtilityStructure::new(GameSpec {
        action_names: vec![names(&["left", "right"])],
        state_names: names(&["s0", "s1"]),
        prior: vec![q(1, 2), q(1, 2)],
        utilities: vec![table.clone()],
        reward: table,
    })
    .expect("valid instance")
}

/// Two agents whose first action strictly dominates in every state.
pub fn dominant_action() -> UtilityStructure {
    // joint order: (x,x) (x,y) (y,x) (y,y)
    let agent0 = vec![
        vec![q(3, 4), qi(1)],
        vec![q(3, 4), qi(1)],
        vec![q(1, 4), q(1, 2)],
        vec![q(1, 4), q(1, 2)],
    ];
    let agent1 = vec![
        vec![q(3, 4), q(1, 2)],
        vec![q(1, 4), qi(0)],
        vec![q(3, 4), q(1, 2)],
        vec![q(1, 4), qi(0)],
    ];
    let reward = vec![vec![q(1, 2), q(1, 2)], vec![qi(1), qi(0)], vec![qi(0), qi(1)], vec![q(1, 4), q(3, 4)]];
    UtilityStructure::new(GameSpec {
        action_names: vec![names(&["x", "y"]), names(&["x", "y"])],
        state_names: names(&["calm", "storm"]),
        prior: vec![q(1, 3), q(2, 3)],
        utilities: vec![agent0, agent1],
        reward,
    })
    .expect("valid instance")
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RandomParams {
    /// Exact number of agents.
    pub agents: usize,
    /// Each agent gets between 2 and this many actions.
    pub max_actions: usize,
    /// Between 2 and this many states.
    pub max_states: usize,
    /// Utilities, rewards and prior weights live on multiples of `1/grid`.
    pub grid: i64,
}

impl Default for RandomParams {
    fn default() -> Self {
        RandomParams { agents: 1, max_actions: 3, max_states: 4, grid: 8 }
    }
}

/// A random game with positive prior and grid-valued tables.
pub fn random_instance<R: Rng + ?Sized>(rng: &mut R, params: &RandomParams) -> UtilityStructure {
    let counts: Vec<usize> = (0..params.agents).map(|_| rng.gen_range(2..=params.max_actions.max(2))).collect();
    let num_states = rng.gen_range(2..=params.max_states.max(2));
    let joint: usize = counts.iter().product();
    let weights: Vec<i64> = (0..num_states).map(|_| rng.gen_range(1..=params.grid)).collect();
    let total: i64 = weights.iter().sum();
    let mut cell = || q(rng.gen_range(0..=params.grid), params.grid);
    let utilities = (0..params.agents)
        .map(|_| (0..joint).map(|_| (0..num_states).map(|_| cell()).collect()).collect())
        .collect();
    let reward = (0..joint).map(|_| (0..num_states).map(|_| cell()).collect()).collect();
    UtilityStructure::new(GameSpec {
        action_names: counts.iter().map(|&k| (0..k).map(|j| format!("b{j}")).collect()).collect(),
        state_names: (0..num_states).map(|k| format!("t{k}")).collect(),
        prior: weights.iter().map(|&w| q(w, total)).collect(),
        utilities,
        reward,
    })
    .expect("generated instance is valid")
}
