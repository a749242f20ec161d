use rand::Rng;
use rand_distr::{Distribution, LogNormal};

use super::dag::StageSpec;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Wave {
    First,
    Later,
}

/// Mean duration of a task given its wave and the stage's parallelism.
pub fn mean_task_duration(stage: &StageSpec, wave: Wave, parallelism: usize) -> f64 {
    let base = match wave {
        Wave::First => stage.duration.first_wave_mean,
        Wave::Later => stage.duration.later_wave_mean,
    };
    base * stage.duration.inflation_at(parallelism.max(1))
}

/// Samples one task duration. Noise is lognormal with unit mean and the
/// model's coefficient of variation; with `noise_cv == 0` the mean is
/// returned exactly and no randomness is consumed.
pub fn sample_task_duration<R: Rng + ?Sized>(
    stage: &StageSpec,
    wave: Wave,
    parallelism: usize,
    rng: &mut R,
) -> f64 {
    let mean = mean_task_duration(stage, wave, parallelism);
    let cv = stage.duration.noise_cv;
    if cv == 0.0 {
        return mean;
    }
    let sigma2 = (1.0 + cv * cv).ln();
    let noise = LogNormal::new(-0.5 * sigma2, sigma2.sqrt())
        .expect("validated noise_cv")
        .sample(rng);
    mean * noise
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;
    use crate::workload::dag::DurationModel;

    fn stage(model: DurationModel) -> StageSpec {
        StageSpec::new(4, model)
    }

    #[test]
    fn zero_noise_returns_wave_means() {
        let s = stage(DurationModel::new(2.0, 1.0));
        let mut rng = seeded(0);
        assert_eq!(sample_task_duration(&s, Wave::Later, 1, &mut rng), 1.0);
        assert_eq!(sample_task_duration(&s, Wave::First, 1, &mut rng), 2.0);
    }

    #[test]
    fn inflation_table_lookup() {
        let s = stage(DurationModel::new(1.0, 1.0).with_inflation(vec![(1, 1.0), (40, 1.5)]));
        let mut rng = seeded(0);
        // Oracle: nearest key at or below 40 is 40 -> 1.5.
        assert_eq!(sample_task_duration(&s, Wave::Later, 40, &mut rng), 1.5);
        assert_eq!(sample_task_duration(&s, Wave::Later, 39, &mut rng), 1.0);
    }

    #[test]
    fn lognormal_noise_has_requested_mean_and_cv() {
        let s = stage(DurationModel::new(3.0, 3.0).with_noise(0.5));
        let mut rng = seeded(11);
        let n = 200_000;
        let xs: Vec<f64> = (0..n)
            .map(|_| sample_task_duration(&s, Wave::Later, 1, &mut rng))
            .collect();
        assert!(xs.iter().all(|&x| x > 0.0));
        let m = xs.iter().sum::<f64>() / n as f64;
        let var = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / n as f64;
        assert!((m - 3.0).abs() < 0.02, "mean {m}");
        assert!((var.sqrt() / m - 0.5).abs() < 0.02, "cv {}", var.sqrt() / m);
    }
}
