use rand::Rng;

use super::*;
use crate::heuristics::RandomScheduler;
use crate::simenv::EnvConfig;
use crate::workload::{gen_random_dag, DurationModel, JobDag, StageSpec, Workload};

/// A mid-episode state with up to `max_jobs` random DAGs of up to
/// `max_nodes` stages, advanced by a random number of random actions.
pub(crate) fn random_state(seed: u64, max_jobs: usize, max_nodes: usize, multi: bool) -> ClusterState {
    let mut rng = seeded(seed);
    loop {
        let n_jobs = rng.random_range(1..=max_jobs);
        let jobs: Vec<JobDag> = (0..n_jobs)
            .map(|i| gen_random_dag(rng.random(), rng.random_range(1..=max_nodes), 0.35).map(|mut d| {
                d.id = format!("j{i}");
                d
            }))
            .collect::<Result<_>>()
            .unwrap();
        let n_exec = rng.random_range(2..=8);
        let cfg = if multi { EnvConfig::four_class(n_exec.max(4)) } else { EnvConfig::single(n_exec) };
        let mut s = ClusterState::reset(&Workload::batch(jobs), cfg, rng.random()).unwrap();
        let mut sched = RandomScheduler::new(rng.random());
        for _ in 0..rng.random_range(0..6) {
            if s.is_done() {
                break;
            }
            let a = sched.decide(&s).unwrap().unwrap();
            s.step(&a).unwrap();
        }
        if !s.is_done() {
            return s;
        }
    }
}

fn job(id: &str, stages: Vec<(usize, f64)>, edges: Vec<(usize, usize)>) -> JobDag {
    let st = stages
        .into_iter()
        .map(|(t, d)| StageSpec::new(t, DurationModel::new(d, d)))
        .collect();
    JobDag::new(id, st, edges, 0.0).unwrap()
}

fn state_of(jobs: Vec<JobDag>, n: usize) -> ClusterState {
    ClusterState::reset(&Workload::batch(jobs), EnvConfig::single(n), 0).unwrap()
}

#[test]
fn hand_softmax() {
    let p = softmax(&[2f64.ln(), 0.0]);
    assert!((p[0] - 2.0 / 3.0).abs() < 1e-15 && (p[1] - 1.0 / 3.0).abs() < 1e-15);
    let big = softmax(&[1000.0, 1000.0 + 2f64.ln()]);
    assert!((big[1] - 2.0 / 3.0).abs() < 1e-12);
}

#[test]
fn singleton_frontier_and_single_limit() {
    let s = state_of(vec![job("a", vec![(3, 1.0)], vec![])], 1);
    let obs = Observation::from_state(&s);
    let p = PolicyParams::init(1, 4);
    assert_eq!(node_distribution(&p, &obs).unwrap().unwrap(), vec![1.0]);
    assert_eq!(limit_distribution(&p, &obs, 0).unwrap(), vec![1.0]);
    let a = Action::new(StageRef::new(0, 0), 1);
    let g = action_log_prob_grad(&s, &a, &p).unwrap();
    assert!(g.flatten().iter().all(|&x| x == 0.0));
}

#[test]
fn identical_jobs_split_evenly() {
    let s = state_of(vec![job("a", vec![(2, 1.0)], vec![]), job("b", vec![(2, 1.0)], vec![])], 4);
    let obs = Observation::from_state(&s);
    let probs = node_distribution(&PolicyParams::init(1, 9), &obs).unwrap().unwrap();
    assert!((probs[0] - 0.5).abs() < 1e-15 && (probs[1] - 0.5).abs() < 1e-15);
}

#[test]
fn zero_params_give_uniform_limits() {
    let s = state_of(vec![job("a", vec![(5, 1.0), (1, 1.0)], vec![(0, 1)])], 5);
    let obs = Observation::from_state(&s);
    let probs = limit_distribution(&PolicyParams::zeros(1), &obs, 0).unwrap();
    assert_eq!(probs, vec![0.2; 5]);
}

#[test]
fn empty_frontier_is_no_action() {
    let mut s = state_of(vec![job("a", vec![(1, 1.0)], vec![])], 1);
    let obs = Observation::from_state(&s);
    s.step(&Action::new(StageRef::new(0, 0), 1)).unwrap();
    assert!(s.is_done());
    let done = Observation::from_state(&s);
    let p = PolicyParams::init(1, 0);
    assert!(node_distribution(&p, &done).unwrap().is_none());
    assert!(sample_decision(&p, &done, None).unwrap().is_none());
    assert!(node_distribution(&p, &obs).unwrap().is_some());
}

#[test]
fn distributions_normalise_over_legal_sets() {
    for seed in 0..40 {
        let multi = seed % 2 == 1;
        let s = random_state(seed, 3, 8, multi);
        let obs = Observation::from_state(&s);
        let p = PolicyParams::init(obs.num_classes, seed);
        let sc = greedy_scores(&p, &obs).unwrap().unwrap();
        assert_eq!(sc.node_probs.len(), s.schedulable_frontier().len());
        assert!((sc.node_probs.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        let (d, _) = sample_decision(&p, &obs, None).unwrap().unwrap();
        let jp = obs.frontier[d.node].0;
        assert_eq!(sc.limit_probs.len(), obs.num_executors - obs.alloc[jp]);
        assert!((sc.limit_probs.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        if let Some(c) = sc.class_probs {
            assert_eq!(c.len(), obs.classes[d.node].len());
            assert!((c.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        }
    }
}

#[test]
fn greedy_is_deterministic_and_argmax() {
    for seed in 0..20 {
        let s = random_state(100 + seed, 3, 6, false);
        let obs = Observation::from_state(&s);
        let p = PolicyParams::init(1, seed);
        let a = sample_decision(&p, &obs, None).unwrap().unwrap();
        let b = sample_decision(&p, &obs, None).unwrap().unwrap();
        assert_eq!(a, b);
        let sc = greedy_scores(&p, &obs).unwrap().unwrap();
        let best = sc.node_logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        assert_eq!(sc.node_logits[a.0.node], best);
    }
}

#[test]
fn sampled_actions_are_legal_through_episodes() {
    for seed in 0..6 {
        let multi = seed % 2 == 0;
        let s0 = random_state(200 + seed, 3, 8, multi);
        let p = Arc::new(PolicyParams::init(s0.config().num_classes(), seed));
        let mut s = s0.clone();
        let mut sched = PolicyScheduler::sampling(p, seed);
        while !s.is_done() {
            let a = sched.decide(&s).unwrap().unwrap();
            s.validate_action(&a).unwrap();
            s.step(&a).unwrap();
        }
    }
}

#[test]
fn sampling_frequencies_match_probabilities() {
    let s = random_state(7, 3, 8, false);
    let obs = Observation::from_state(&s);
    let p = PolicyParams::init(1, 11);
    let probs = node_distribution(&p, &obs).unwrap().unwrap();
    let mut rng = seeded(3);
    let n = 100_000;
    let mut counts = vec![0usize; probs.len()];
    for _ in 0..n {
        let (d, _) = sample_decision(&p, &obs, Some(&mut rng)).unwrap().unwrap();
        counts[d.node] += 1;
    }
    for (c, &pr) in counts.iter().zip(&probs) {
        let se = (pr * (1.0 - pr) / n as f64).sqrt();
        let f = *c as f64 / n as f64;
        assert!((f - pr).abs() <= 3.0 * se + 1e-12, "freq {f} vs {pr}");
    }
}

fn fd_check(p: &PolicyParams, obs: &Observation, d: &Decision, beta: f64) -> f64 {
    let mut g = p.zeros_like();
    accumulate_grad(p, obs, d, 1.0, beta, &mut g).unwrap();
    let gflat = g.flatten();
    let flat = p.flatten();
    let objective = |q: &PolicyParams| {
        let (lp, h) = log_prob(q, obs, d).unwrap();
        lp + beta * h
    };
    let h = 1e-5;
    let mut worst: f64 = 0.0;
    let mut q = p.clone();
    for i in (0..flat.len()).step_by(13) {
        let mut f = flat.clone();
        f[i] = flat[i] + h;
        q.assign_flat(&f).unwrap();
        let up = objective(&q);
        f[i] = flat[i] - h;
        q.assign_flat(&f).unwrap();
        let dn = objective(&q);
        let fd = (up - dn) / (2.0 * h);
        let err = (fd - gflat[i]).abs() / (fd.abs() + gflat[i].abs()).max(1e-6);
        worst = worst.max(err);
    }
    worst
}

#[test]
fn log_prob_gradient_matches_finite_differences() {
    for seed in 0..6 {
        let multi = seed % 3 == 2;
        let s = random_state(300 + seed, 3, 6, multi);
        let obs = Observation::from_state(&s);
        let p = PolicyParams::init(obs.num_classes, seed);
        let (d, _) = sample_decision(&p, &obs, Some(&mut seeded(seed))).unwrap().unwrap();
        let beta = if seed % 2 == 0 { 0.0 } else { 0.3 };
        let worst = fd_check(&p, &obs, &d, beta);
        assert!(worst < 1e-4, "seed {seed}: {worst}");
    }
}

#[test]
fn gradient_step_raises_log_prob() {
    let s = random_state(17, 3, 6, false);
    let obs = Observation::from_state(&s);
    let p = PolicyParams::init(1, 2);
    let (d, _) = sample_decision(&p, &obs, Some(&mut seeded(1))).unwrap().unwrap();
    let mut g = p.zeros_like();
    let (lp0, _) = accumulate_grad(&p, &obs, &d, 1.0, 0.0, &mut g).unwrap();
    let mut flat = p.flatten();
    for (x, gi) in flat.iter_mut().zip(g.flatten()) {
        *x += 1e-3 * gi;
    }
    let mut q = p.clone();
    q.assign_flat(&flat).unwrap();
    assert!(log_prob(&q, &obs, &d).unwrap().0 > lp0);
}

#[test]
fn illegal_actions_are_usage_errors() {
    let s = state_of(vec![job("a", vec![(3, 1.0), (1, 1.0)], vec![(0, 1)])], 3);
    let p = PolicyParams::init(1, 0);
    for a in [Action::new(StageRef::new(0, 1), 2), Action::new(StageRef::new(0, 0), 4)] {
        assert!(matches!(action_log_prob_grad(&s, &a, &p), Err(Error::Usage(_))));
    }
}

#[test]
fn checkpoint_round_trip() {
    let p = PolicyParams::init(4, 5);
    let text = p.to_archive().to_json();
    let mut q = PolicyParams::zeros(4);
    q.load_archive(&crate::nn::TensorArchive::from_json(&text).unwrap()).unwrap();
    assert_eq!(p, q);
    let mut wrong = PolicyParams::zeros(2);
    assert!(wrong.load_archive(&p.to_archive()).is_err());
}

#[test]
fn class_head_width_must_match_cluster() {
    let s = random_state(1, 2, 4, true);
    let obs = Observation::from_state(&s);
    assert!(matches!(node_distribution(&PolicyParams::init(2, 0), &obs), Err(Error::Shape(_))));
}
