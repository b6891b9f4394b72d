//! Synthetic class-record exports.
//!
//! Real student records are not distributable, so the bundled dataset is
//! generated: 82 students, nine columns, with pass/fail driven by a noisy
//! weighted sum of the six criteria. Rows are placed so that the default
//! holdout split puts 19 failing and 42 passing students in the training
//! fold and 4 failing / 17 passing in the test fold.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::eval::{split_indices, EvalError, SplitConfig};
use crate::ingest::{PassLabel, Schema, NUM_FEATURES};

/// The bundled 82-row dataset, produced by `generate_csv(&SynthConfig::default())`.
pub const BUNDLED_CSV: &str = include_str!("../data/students_synthetic.csv");

#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    pub train_fail: usize,
    pub train_pass: usize,
    pub test_fail: usize,
    pub test_pass: usize,
    pub seed: u64,
    /// Split the fold sizes are arranged for.
    pub split: SplitConfig,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            train_fail: 19,
            train_pass: 42,
            test_fail: 4,
            test_pass: 17,
            seed: 2023,
            split: SplitConfig::default(),
        }
    }
}

impl SynthConfig {
    pub fn students(&self) -> usize {
        self.train_fail + self.train_pass + self.test_fail + self.test_pass
    }
}

struct Student {
    scores: [f64; NUM_FEATURES],
    latent: f64,
}

fn score(rng: &mut ChaCha8Rng, mean: f64, spread: f64, ability: f64) -> f64 {
    let noise: f64 = rng.random_range(-1.0..1.0) * spread * 0.6;
    (mean + ability * spread + noise).clamp(0.0, 100.0).round()
}

/// Nine-column CSV text in the canonical export layout.
pub fn generate_csv(config: &SynthConfig) -> Result<String, EvalError> {
    let n = config.students();
    let (train_idx, test_idx) = split_indices(n, &config.split)?;
    if train_idx.len() != config.train_fail + config.train_pass {
        return Err(EvalError::Domain(format!(
            "split puts {} records in training, config asks for {}",
            train_idx.len(),
            config.train_fail + config.train_pass
        )));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut students: Vec<Student> = (0..n)
        .map(|_| {
            // Sum of three uniforms: a cheap bell-shaped ability.
            let ability: f64 = (0..3).map(|_| rng.random_range(-1.0..1.0)).sum::<f64>() / 1.7;
            let growth: f64 = rng.random_range(-0.4..0.4);
            let scores = [
                score(&mut rng, 88.0, 7.0, ability),
                score(&mut rng, 82.0, 9.0, ability),
                score(&mut rng, 74.0, 12.0, ability),
                score(&mut rng, 87.0, 7.0, ability + growth),
                score(&mut rng, 81.0, 9.0, ability + growth),
                score(&mut rng, 72.0, 13.0, ability + growth),
            ];
            let weights = [0.05, 0.15, 0.2, 0.1, 0.2, 0.3];
            let latent = scores.iter().zip(weights).map(|(s, w)| s * w).sum::<f64>()
                + rng.random_range(-4.0..4.0);
            Student { scores, latent }
        })
        .collect();

    // Lowest latent scores fail.
    let n_fail = config.train_fail + config.test_fail;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| students[a].latent.total_cmp(&students[b].latent));
    let mut fails: Vec<usize> = order[..n_fail].to_vec();
    let mut passes: Vec<usize> = order[n_fail..].to_vec();
    fails.shuffle(&mut rng);
    passes.shuffle(&mut rng);

    let mut slots: Vec<Option<(usize, PassLabel)>> = vec![None; n];
    let mut place = |positions: &[usize], pool: &mut Vec<usize>, count: usize, label| {
        for &pos in &positions[..count] {
            slots[pos] = Some((pool.pop().expect("pool sized by config"), label));
        }
    };
    place(&train_idx, &mut fails, config.train_fail, PassLabel::Fail);
    place(
        &train_idx[config.train_fail..],
        &mut passes,
        config.train_pass,
        PassLabel::Pass,
    );
    place(&test_idx, &mut fails, config.test_fail, PassLabel::Fail);
    place(
        &test_idx[config.test_fail..],
        &mut passes,
        config.test_pass,
        PassLabel::Pass,
    );

    let sections = ["CR-CPE101", "CR-CPE102", "CR-CPE201", "CR-CPE202"];
    let mut out = Schema::standard().header().join(",");
    out.push('\n');
    for (row, slot) in slots.iter_mut().enumerate() {
        let (who, label) = slot.take().expect("every slot filled");
        let s = &mut students[who];
        let fields: Vec<String> = s.scores.iter().map(|v| v.to_string()).collect();
        out.push_str(&format!(
            "2023-{:05},{},{},{}\n",
            row + 1,
            sections[rng.random_range(0..sections.len())],
            fields.join(","),
            label.remark()
        ));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval::train_test_split;
    use crate::ingest::{load_csv, CleanOptions};
    use crate::ClassCounts;

    #[test]
    fn bundled_file_matches_generator() {
        assert_eq!(BUNDLED_CSV, generate_csv(&SynthConfig::default()).unwrap());
    }

    #[test]
    fn default_split_reproduces_fold_balance() {
        let (data, report) = load_csv::<f64>(
            BUNDLED_CSV,
            &Schema::standard(),
            "bundled",
            CleanOptions {
                range_validation: true,
            },
        )
        .unwrap();
        assert_eq!(report.input_rows, 82);
        assert_eq!(data.len(), 82);
        let (train, test) = train_test_split(&data, &SplitConfig::default()).unwrap();
        assert_eq!(train.class_counts(), ClassCounts::new(19, 42));
        assert_eq!(test.class_counts(), ClassCounts::new(4, 17));
    }

    #[test]
    fn other_configs_generate() {
        let c = SynthConfig {
            train_fail: 5,
            train_pass: 10,
            test_fail: 2,
            test_pass: 3,
            seed: 1,
            split: SplitConfig::default(),
        };
        let text = generate_csv(&c).unwrap();
        assert_eq!(text.lines().count(), 21);
        let bad = SynthConfig { test_pass: 30, ..c };
        assert!(generate_csv(&bad).is_err());
    }
}
