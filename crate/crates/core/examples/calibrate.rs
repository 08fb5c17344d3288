//! Prints per-token profit statistics and classification accuracy for the
//! default behaviour table at the reference cohort sizes.
//!
//! Usage: `cargo run --release -p tokenlab-core --example calibrate [seeds] [separation] [volatility] [delay_per_item]`

use tokenlab_core::agents::{run_cohort, BehaviorMapping, CohortSpec};
use tokenlab_core::analytics::{cohort_stats, evaluate, reference_split_counts, KnnConfig, SplitSpec};
use tokenlab_core::market::MarketConfig;
use tokenlab_core::rng::{derive_seed, Stream};
use tokenlab_core::tokens::{build_token_set, default_templates, InformationVirtue, TokenId};
use tokenlab_core::PerformanceRecord;

const COUNTS: [u32; 7] = [30, 35, 31, 30, 30, 34, 33];

fn dataset(master: u64, mapping: &BehaviorMapping, config: &MarketConfig) -> Vec<PerformanceRecord> {
    let virtue = InformationVirtue::default();
    let tokens = build_token_set(&virtue, &default_templates()).unwrap();
    let mut first = 0;
    let mut out = Vec::new();
    for (i, token) in tokens.iter().enumerate() {
        let spec = CohortSpec {
            token_id: token.id,
            n_subjects: COUNTS[i],
            seed_base: derive_seed(master, Stream::Cohort, i as u64),
            first_subject_id: first,
        };
        first += COUNTS[i] as u64;
        out.extend(run_cohort(&spec, token, &virtue, mapping, config).unwrap());
    }
    out
}

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let seeds: u64 = args.get(1).map_or(20, |s| s.parse().unwrap());
    let separation: f64 = args.get(2).map_or(1.0, |s| s.parse().unwrap());
    let mut mapping = BehaviorMapping { separation, ..BehaviorMapping::default() };
    let mut config = MarketConfig::default();
    if let Some(v) = args.get(3) {
        config.fundamental.volatility = v.parse().unwrap();
    }
    if let Some(v) = args.get(4) {
        mapping.delay_per_item = v.parse().unwrap();
    }
    let results: Vec<_> = std::thread::scope(|s| {
        let handles: Vec<_> = (0..seeds)
            .map(|seed| {
                let (mapping, config) = (&mapping, &config);
                s.spawn(move || {
                    let data = dataset(seed, mapping, config);
                    let split = SplitSpec::fixed(derive_seed(seed, Stream::Split, 0), reference_split_counts());
                    let ev = evaluate(&data, &split, &KnnConfig::default()).unwrap();
                    (cohort_stats(&data).unwrap(), ev.accuracy())
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().unwrap()).collect()
    });
    for t in TokenId::ALL {
        let means: Vec<f64> = results.iter().map(|(s, _)| s.get(t).unwrap().mean).collect();
        let sds: Vec<f64> = results.iter().map(|(s, _)| s.get(t).unwrap().sd.unwrap()).collect();
        let m = means.iter().sum::<f64>() / means.len() as f64;
        let sd = sds.iter().sum::<f64>() / sds.len() as f64;
        println!("{t}: mean {m:>12.0}  within-sd {sd:>10.0}  cv {:.3}", sd / m.abs().max(1.0));
    }
    let acc: Vec<f64> = results.iter().map(|r| r.1).collect();
    let mean = acc.iter().sum::<f64>() / acc.len() as f64;
    let min = acc.iter().cloned().fold(f64::INFINITY, f64::min);
    println!("accuracy mean {mean:.3} min {min:.3} over {seeds} seeds (separation {separation})");
}
