use std::io::Write;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sessmarl::timeseries::{
    load_csv, synth_series_with, Case, CaseRanges, ColumnMap, PriceAverage, SynthProfile, WindowMode, WindowSampler,
};

mod common;

#[test]
fn train_windows_start_uniformly_inside_the_range() {
    let series = common::series(Case::Spring, 1);
    let ranges = CaseRanges::default();
    let sampler = WindowSampler::new(ranges.clone(), 96);
    let range = ranges.get(Case::Spring);
    let slots = (range.hours() - 96 + 1) as usize;
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let n = 1000;
    // 12 equal-width bins over the admissible start offsets
    let bins = 12;
    let mut counts = vec![0usize; bins];
    for _ in 0..n {
        let w = sampler.sample(&series, Case::Spring, WindowMode::Train, &mut rng).unwrap();
        let off = (w.start - range.start).num_hours();
        assert!(off >= 0 && (off as usize) < slots);
        assert!(w.start + chrono::Duration::hours(96) <= range.end);
        counts[off as usize * bins / slots] += 1;
    }
    let expected: Vec<f64> = (0..bins)
        .map(|b| {
            let lo = (b * slots).div_ceil(bins);
            let hi = ((b + 1) * slots).div_ceil(bins);
            n as f64 * (hi - lo) as f64 / slots as f64
        })
        .collect();
    let chi2: f64 = counts
        .iter()
        .zip(&expected)
        .map(|(&c, &e)| (c as f64 - e).powi(2) / e)
        .sum();
    // 99.9th percentile of chi-square with 11 degrees of freedom
    assert!(chi2 < 31.26, "chi2 = {chi2}, counts {counts:?}");
}

#[test]
fn eval_windows_are_fixed() {
    let series = common::series(Case::Summer, 3);
    let sampler = WindowSampler::new(CaseRanges::default(), 96);
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let a = sampler.sample(&series, Case::Summer, WindowMode::Eval, &mut rng).unwrap();
    let b = sampler.sample(&series, Case::Summer, WindowMode::Eval, &mut rng).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.start, CaseRanges::default().summer.eval_start);
    assert_eq!(a.len(), 96);
}

#[test]
fn average_price_converges_monotonically() {
    let mut avg = PriceAverage::new(0.0, 0.2).unwrap();
    let mut last = 0.0;
    for _ in 0..200 {
        avg = avg.update(30.0);
        assert!(avg.p_bar >= last && avg.p_bar <= 30.0);
        last = avg.p_bar;
    }
    assert!((30.0 - last).abs() < 1e-9);
    assert!((PriceAverage::new(50.0, 0.2).unwrap().update(60.0).p_bar - 52.0).abs() < 1e-12);
}

#[test]
fn noiseless_synth_is_the_pure_sinusoid() {
    let profile = SynthProfile::for_case(Case::Winter).without_noise();
    let start = CaseRanges::default().winter.start;
    let s = synth_series_with(&profile, start, 120, 7).unwrap();
    for (h, r) in s.records().iter().enumerate() {
        let hod = (h % 24) as f64;
        assert!((r.price - profile.price_at(hod)).abs() < 1e-12);
        assert!((r.outdoor_temp - profile.temp_at(hod)).abs() < 1e-12);
    }
}

#[test]
fn csv_roundtrip_with_renamed_columns() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("data.csv");
    let mut f = std::fs::File::create(&path).unwrap();
    writeln!(f, "time,price actual,temp").unwrap();
    writeln!(f, "2018-01-01 00:00:00,50.5,-2.0").unwrap();
    writeln!(f, "2018-01-01 01:00:00,48.25,-2.5").unwrap();
    drop(f);
    let cols = ColumnMap {
        timestamp: "time".into(),
        price: "price actual".into(),
        temperature: "temp".into(),
    };
    let s = load_csv(&path, &cols).unwrap();
    assert_eq!(s.len(), 2);
    assert_eq!(s.records()[1].price, 48.25);
    assert_eq!(s.records()[1].outdoor_temp, -2.5);

    let out = dir.path().join("out.csv");
    s.write_csv(&out, &ColumnMap::default()).unwrap();
    assert_eq!(load_csv(&out, &ColumnMap::default()).unwrap(), s);
}

#[test]
fn gaps_and_short_ranges_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("gap.csv");
    std::fs::write(
        &path,
        "time,price actual,temp\n2018-01-01 00:00:00,1,1\n2018-01-01 02:00:00,1,1\n",
    )
    .unwrap();
    assert!(load_csv(&path, &ColumnMap::default()).is_err());

    let series = common::series(Case::Winter, 1);
    let sampler = WindowSampler::new(CaseRanges::default(), 28 * 24 + 1);
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    assert!(sampler.sample(&series, Case::Winter, WindowMode::Train, &mut rng).is_err());
}
