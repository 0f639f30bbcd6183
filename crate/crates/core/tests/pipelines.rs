//! The level-only fast path against the full sampler and the exact law.

use adasketch::analytics::ModelParams;
use adasketch::montecarlo::{
    generate, joint_tv, run_trials, ColorClass, Execution, Metric, Multiplicity, Order, Pipeline,
    SketchConfig, StreamSpec, TrialConfig, TrialStats,
};
use statrs::distribution::{ChiSquared, ContinuousCDF};

const N: u64 = 4096;
const B: u32 = 16;
const TRIALS: u64 = 20_000;

fn stats(pipeline: Pipeline, seed: u64) -> TrialStats {
    run_trials(
        &StreamSpec::distinct(N, 0),
        &SketchConfig::new(B, 0.5),
        &TrialConfig::new(TRIALS, seed).with_pipeline(pipeline),
        &[],
    )
    .unwrap()
}

#[test]
fn fast_path_matches_full_sampler() {
    let full = stats(Pipeline::Full, 1);
    let fast = stats(Pipeline::LevelOnly, 2);
    let law = ModelParams::symmetric(B).unwrap().joint_law(N).unwrap();
    assert!(joint_tv(&full.joint_pmf(), &law) < 0.02);
    assert!(joint_tv(&fast.joint_pmf(), &law) < 0.02);

    // two-sample chi-square homogeneity over (R, D) cells
    let (a, b) = (full.joint_pmf(), fast.joint_pmf());
    let mut cells: Vec<(u64, u32)> = a.keys().chain(b.keys()).copied().collect();
    cells.sort();
    cells.dedup();
    let t = TRIALS as f64;
    let (mut stat, mut pooled_small, mut df) = (0.0, (0.0, 0.0), 0i64);
    for c in cells {
        let (x, y) = (a.get(&c).copied().unwrap_or(0.0) * t, b.get(&c).copied().unwrap_or(0.0) * t);
        if x + y < 10.0 {
            pooled_small.0 += x;
            pooled_small.1 += y;
            continue;
        }
        stat += (x - y).powi(2) / (x + y);
        df += 1;
    }
    let (x, y) = pooled_small;
    if x + y > 0.0 {
        stat += (x - y).powi(2) / (x + y);
        df += 1;
    }
    let critical = ChiSquared::new((df - 1) as f64).unwrap().inverse_cdf(0.999);
    assert!(stat < critical, "chi2 {stat} on {} df, critical {critical}", df - 1);
}

#[test]
fn parallel_and_sequential_agree() {
    let spec = StreamSpec::distinct(2_000, 0);
    let sk = SketchConfig::new(32, 0.5);
    let cfg = TrialConfig::new(300, 5).with_pipeline(Pipeline::Full);
    let par = run_trials(&spec, &sk, &cfg.with_execution(Execution::Parallel), &[Metric::Z]).unwrap();
    let seq = run_trials(&spec, &sk, &cfg.with_execution(Execution::Sequential), &[Metric::Z]).unwrap();
    assert_eq!(par.values(Metric::Z), seq.values(Metric::Z));
}

#[test]
fn generator_respects_classes_and_multiplicities() {
    let spec = StreamSpec {
        n: 1_000,
        colors: vec![
            ColorClass { tag: 1, proportion: 0.3, multiplicity: Multiplicity::Constant(3) },
            ColorClass { tag: 2, proportion: 0.7, multiplicity: Multiplicity::Uniform { lo: 1, hi: 4 } },
        ],
        order: Order::Shuffled,
        seed: 9,
    };
    let items = generate(&spec).unwrap();
    let mut per_id = std::collections::HashMap::new();
    for it in &items {
        *per_id.entry((it.id, it.color)).or_insert(0u64) += 1;
    }
    assert_eq!(per_id.len(), 1_000);
    assert_eq!(per_id.keys().filter(|(_, c)| c.0 == 1).count(), 300);
    assert!(per_id.iter().filter(|((_, c), _)| c.0 == 1).all(|(_, &m)| m == 3));
    assert!(per_id.iter().filter(|((_, c), _)| c.0 == 2).all(|(_, &m)| (1..=4).contains(&m)));
    assert_eq!(generate(&spec).unwrap(), items);
}
