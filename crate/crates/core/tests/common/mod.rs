#![allow(dead_code)]

use std::sync::Arc;

use chrono::Duration;
use sessmarl::maddpg::{TrainConfig, TrainingData};
use sessmarl::timeseries::{synth_series, Case, CaseRanges, EpisodeWindow, PriceTemperatureSeries, WindowSampler};

pub const CASE_HOURS: usize = 28 * 24;

pub fn series(case: Case, seed: u64) -> PriceTemperatureSeries {
    synth_series(case, CASE_HOURS, seed).unwrap()
}

/// `len`-step window starting `offset` hours into the case range.
pub fn window(case: Case, seed: u64, offset: i64, len: usize) -> EpisodeWindow {
    let s = series(case, seed);
    let start = CaseRanges::default().get(case).start + Duration::hours(offset);
    WindowSampler::new(CaseRanges::default(), len).slice(&s, case, start).unwrap()
}

pub fn training_data(case: Case, seed: u64, horizon: usize) -> TrainingData {
    TrainingData {
        series: Arc::new(series(case, seed)),
        sampler: WindowSampler::new(CaseRanges::default(), horizon),
        case,
    }
}

pub fn tiny_train() -> TrainConfig {
    TrainConfig {
        episodes: 3,
        batch_size: 8,
        checkpoint_every: 1,
        hidden: vec![8, 8],
        ..TrainConfig::default()
    }
}
