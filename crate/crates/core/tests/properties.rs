use std::collections::BTreeSet;

use bayes_explore::game::{conditional_gain, GameSpec};
use bayes_explore::harness::audit_bic;
use bayes_explore::instances::{random_instance, RandomParams};
use bayes_explore::policy::{explorable_set, max_support_policy, optimal_policy, PolicyTable};
use bayes_explore::rational::{q, qi};
use bayes_explore::signal::{all_info, approx_distance, at_least_as_informative, Coupling};
use bayes_explore::{Error, JointAction, Q, SignalStructure, SignalValue, UtilityStructure};
use num_traits::{Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_map<R: Rng>(rng: &mut R, u: &UtilityStructure) -> Vec<BTreeSet<JointAction>> {
    (0..u.num_states())
        .map(|_| u.joint_actions().filter(|_| rng.gen_bool(0.5)).collect())
        .collect()
}

fn params(agents: usize) -> RandomParams {
    RandomParams { agents, max_actions: if agents == 1 { 3 } else { 2 }, max_states: 3, grid: 8 }
}

#[test]
fn more_information_never_hurts() {
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let zero = Q::zero();
    for trial in 0..60 {
        let u = random_instance(&mut rng, &params(1 + trial % 2));
        let coarse_map = random_map(&mut rng, &u);
        let extra = random_map(&mut rng, &u);
        let fine_map: Vec<BTreeSet<JointAction>> =
            coarse_map.iter().zip(&extra).map(|(a, b)| a.union(b).copied().collect()).collect();
        let fine = all_info(&u, &fine_map).unwrap();
        let coarse = all_info(&u, &coarse_map).unwrap();
        let g = fine.determines(&coarse).expect("finer AllInfo determines coarser");
        let coupling = Coupling::from_state_determined(&fine, &coarse).unwrap();
        assert!(at_least_as_informative(&u, &fine, &coarse, &coupling).unwrap());

        let (_, rew_fine) = optimal_policy(&u, &fine, &zero).unwrap();
        let (x_coarse, rew_coarse) = optimal_policy(&u, &coarse, &zero).unwrap();
        assert!(rew_fine >= rew_coarse, "trial {trial}");

        let ex_fine = explorable_set(&u, &fine, &zero).unwrap();
        let ex_coarse = explorable_set(&u, &coarse, &zero).unwrap();
        for (s, &t) in g.iter().enumerate() {
            assert!(ex_coarse.sets[t].is_subset(&ex_fine.sets[s]), "trial {trial} signal {s}");
        }

        // a coarse policy run on the fine signal through g behaves identically
        let induced = PolicyTable::new(g.iter().map(|&t| x_coarse.column(t).to_vec()).collect()).unwrap();
        assert_eq!(induced.expected_reward(&u, &fine), x_coarse.expected_reward(&u, &coarse));
        for agent in 0..u.num_agents() {
            let k = u.num_actions_of(agent);
            for a in 0..k {
                for b in (0..k).filter(|&b| b != a) {
                    assert_eq!(
                        conditional_gain(&u, &fine, &induced, agent, a, b).unwrap(),
                        conditional_gain(&u, &coarse, &x_coarse, agent, a, b).unwrap()
                    );
                }
            }
        }
    }
}

/// With probability `beta`, each state in `corrupt` reports signal `target`
/// instead of its own. Returns the approximate structure and the coupling.
fn corrupted(
    u: &UtilityStructure,
    s: &SignalStructure,
    beta: &Q,
    corrupt: &[usize],
    target: usize,
) -> (SignalStructure, Coupling) {
    let nx = s.num_signals();
    let mut table = vec![vec![Q::zero(); u.num_states()]; nx];
    let mut joint = vec![vec![vec![Q::zero(); nx]; nx]; u.num_states()];
    for state in 0..u.num_states() {
        let own = s.signal_at(state).expect("state-determined");
        let moved = if corrupt.contains(&state) && own != target { beta.clone() } else { Q::zero() };
        table[own][state] += Q::from_integer(1.into()) - &moved;
        table[target][state] += &moved;
        joint[state][own][own] = Q::from_integer(1.into()) - &moved;
        joint[state][own][target] += &moved;
    }
    (SignalStructure::new(u, s.values().to_vec(), table).unwrap(), Coupling::new(joint))
}

/// The table `x` (indexed by `s`'s signals) applied to whatever `approx` reports.
fn transferred(s: &SignalStructure, approx: &SignalStructure, x: &PolicyTable) -> PolicyTable {
    let columns = (0..approx.num_signals())
        .map(|t| x.column(s.index_of(approx.value(t)).expect("same universe")).to_vec())
        .collect();
    PolicyTable::new(columns).unwrap()
}

#[test]
fn approximate_signal_has_bounded_effect_on_conditional_sums() {
    let mut rng = ChaCha8Rng::seed_from_u64(202);
    let beta = q(1, 10);
    for _ in 0..40 {
        let u = random_instance(&mut rng, &params(1));
        let s = all_info(&u, &random_map(&mut rng, &u)).unwrap();
        let h = qi(rng.gen_range(1..=4));
        let g: Vec<Q> = (0..u.num_states()).map(|_| &h * q(rng.gen_range(0..=8), 8)).collect();
        let corrupt: Vec<usize> = (0..u.num_states()).filter(|_| rng.gen_bool(0.5)).collect();
        let target = rng.gen_range(0..s.num_signals());
        let (approx, coupling) = corrupted(&u, &s, &beta, &corrupt, target);
        assert!(approx_distance(&u, &s, &approx, &coupling).unwrap() <= beta);
        for sig in 0..s.num_signals() {
            let t = approx.index_of(s.value(sig)).unwrap();
            let diff: Q = (0..u.num_states())
                .map(|k| u.prior(k) * &g[k] * (s.prob(sig, k) - approx.prob(t, k)))
                .fold(Q::zero(), |a, b| a + b);
            assert!(diff.abs() <= &beta * &h);
        }
    }
}

#[test]
fn slack_absorbs_small_signal_errors() {
    let mut rng = ChaCha8Rng::seed_from_u64(303);
    let mut checked = 0;
    for trial in 0..80 {
        let u = random_instance(&mut rng, &params(1 + trial % 2));
        let s = all_info(&u, &random_map(&mut rng, &u)).unwrap();
        let delta = q(1, 16);
        let msp = match max_support_policy(&u, &s, &delta) {
            Ok(p) => p,
            Err(Error::DeltaInfeasible { .. }) => continue,
            Err(e) => panic!("{e}"),
        };
        let x = msp.table;
        let beta = &delta * x.pmin().unwrap() * s.min_mass(&u) / qi(2 * s.num_signals() as i64);
        let everyone: Vec<usize> = (0..u.num_states()).collect();
        for target in 0..s.num_signals() {
            let mut patterns: Vec<Vec<usize>> = everyone.iter().map(|&k| vec![k]).collect();
            patterns.push(everyone.clone());
            for corrupt in patterns {
                let (approx, coupling) = corrupted(&u, &s, &beta, &corrupt, target);
                assert!(approx_distance(&u, &s, &approx, &coupling).unwrap() <= beta);
                let y = transferred(&s, &approx, &x);
                let report = audit_bic(&u, &approx, &y, &Q::zero()).unwrap();
                assert!(report.passed(), "trial {trial}: {:?}", report.violations(&u));
                checked += 1;
            }
        }
    }
    assert!(checked >= 100, "only {checked} transfers checked");
}

fn lopsided() -> (UtilityStructure, SignalStructure) {
    let table = vec![vec![qi(1), qi(0)], vec![qi(0), qi(1)]];
    let u = UtilityStructure::new(GameSpec {
        action_names: vec![vec!["a1".into(), "a2".into()]],
        state_names: vec!["common".into(), "rare".into()],
        prior: vec![q(15, 16), q(1, 16)],
        utilities: vec![table.clone()],
        reward: table,
    })
    .unwrap();
    let s = SignalStructure::from_state_values(
        &u,
        vec![SignalValue::Label("s0".into()), SignalValue::Label("s1".into())],
    )
    .unwrap();
    (u, s)
}

#[test]
fn slack_without_signal_mass_is_not_enough() {
    let (u, s) = lopsided();
    let half = q(1, 2);
    let x = PolicyTable::new(vec![vec![qi(1), qi(0)], vec![qi(0), qi(1)]]).unwrap();
    assert!(audit_bic(&u, &s, &x, &half).unwrap().passed());

    // δ·p_min/(2|X|) = 1/8 of the common state leaking into the rare signal
    let loose = &half * x.pmin().unwrap() / qi(4);
    assert_eq!(loose, q(1, 8));
    let (approx, _) = corrupted(&u, &s, &loose, &[0], 1);
    let report = audit_bic(&u, &approx, &transferred(&s, &approx, &x), &Q::zero()).unwrap();
    assert!(!report.passed());
    assert_eq!(report.min_margin().unwrap(), q(1, 16) - q(15, 128));

    let tight = loose * s.min_mass(&u);
    assert_eq!(tight, q(1, 128));
    let (approx, _) = corrupted(&u, &s, &tight, &[0], 1);
    assert!(audit_bic(&u, &approx, &transferred(&s, &approx, &x), &Q::zero()).unwrap().passed());
}

#[test]
fn random_instances_have_consistent_max_support_policies() {
    let mut rng = ChaCha8Rng::seed_from_u64(404);
    for trial in 0..40 {
        let u = random_instance(&mut rng, &params(1 + trial % 2));
        let s = all_info(&u, &random_map(&mut rng, &u)).unwrap();
        let msp = max_support_policy(&u, &s, &Q::zero()).unwrap();
        for sig in 0..s.num_signals() {
            assert_eq!(msp.table.support(sig), msp.explorable.sets[sig]);
        }
        assert!(audit_bic(&u, &s, &msp.table, &Q::zero()).unwrap().passed());
        assert!(msp.table.columns().iter().flatten().all(|p| !p.is_negative()));
    }
}

mod round_trip {
    use bayes_explore::instances::{random_instance, RandomParams};
    use bayes_explore::scenario::Scenario;
    use bayes_explore::NoiseModel;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn scenario_json_round_trips(seed in any::<u64>(), agents in 1usize..=2, bernoulli in any::<bool>(), fixed in proptest::option::of(0usize..2)) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let u = random_instance(&mut rng, &RandomParams { agents, max_actions: 3, max_states: 4, grid: 8 });
            let noise = if bernoulli { NoiseModel::Bernoulli } else { NoiseModel::Deterministic };
            let s = Scenario::new(u, noise, fixed);
            let text = s.to_json().unwrap();
            let back = Scenario::from_json(&text).unwrap();
            prop_assert_eq!(&back, &s);
            prop_assert_eq!(back.to_json().unwrap(), text);
        }
    }
}
