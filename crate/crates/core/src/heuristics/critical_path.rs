use crate::workload::JobDag;

/// Heaviest downstream path from `node`, including the node's own work:
/// `cp(v) = work(v) + max over children cp(u)`.
pub fn critical_path(dag: &JobDag, node: usize) -> f64 {
    critical_path_all(dag)[node]
}

/// Critical path of every node, computed in one reverse-topological sweep.
pub fn critical_path_all(dag: &JobDag) -> Vec<f64> {
    let children = dag.children();
    let order = dag.topo_order().expect("validated DAG is acyclic");
    let mut cp = vec![0.0; dag.num_stages()];
    for &v in order.iter().rev() {
        let tail = children[v].iter().map(|&u| cp[u]).fold(0.0, f64::max);
        cp[v] = dag.stages[v].work() + tail;
    }
    cp
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::workload::{gen_random_dag, DurationModel, StageSpec};

    fn work_stage(work: f64) -> StageSpec {
        StageSpec::new(1, DurationModel::new(work, work))
    }

    /// Exhaustive DFS over every downstream path; independent of the sweep.
    fn cp_by_paths(dag: &JobDag, v: usize) -> f64 {
        let children = dag.children();
        fn go(dag: &JobDag, ch: &[Vec<usize>], v: usize) -> f64 {
            let w = dag.stages[v].work();
            ch[v].iter().map(|&u| w + go(dag, ch, u)).fold(w, f64::max)
        }
        go(dag, &children, v)
    }

    #[test]
    fn leaf_and_chain() {
        let d = JobDag::new("leaf", vec![work_stage(3.0)], vec![], 0.0).unwrap();
        assert_eq!(critical_path(&d, 0), 3.0);
        let d = JobDag::new(
            "chain",
            vec![work_stage(1.0), work_stage(2.0), work_stage(3.0)],
            vec![(0, 1), (1, 2)],
            0.0,
        )
        .unwrap();
        assert_eq!(critical_path(&d, 0), cp_by_paths(&d, 0));
        assert_eq!(critical_path(&d, 0), 6.0);
    }

    #[test]
    fn two_branch_join() {
        // Left branch: 10 task-seconds; right branch: 90; join: epsilon.
        let eps = 0.01;
        let stages = vec![
            StageSpec::new(10, DurationModel::new(1.0, 1.0)),
            StageSpec::new(30, DurationModel::new(1.0, 1.0)),
            StageSpec::new(60, DurationModel::new(1.0, 1.0)),
            work_stage(eps),
        ];
        let d = JobDag::new("a", stages, vec![(0, 3), (1, 2), (2, 3)], 0.0).unwrap();
        let cp = critical_path_all(&d);
        assert!((cp[0] - (10.0 + eps)).abs() < 1e-12);
        assert!((cp[1] - (90.0 + eps)).abs() < 1e-12);
        assert!(cp[1] > cp[0]);
    }

    #[test]
    fn matches_path_enumeration_on_random_dags() {
        for seed in 0..30 {
            let d = gen_random_dag(seed, 9, 0.35).unwrap();
            let cp = critical_path_all(&d);
            for v in 0..d.num_stages() {
                assert!((cp[v] - cp_by_paths(&d, v)).abs() < 1e-9);
            }
        }
    }
}
