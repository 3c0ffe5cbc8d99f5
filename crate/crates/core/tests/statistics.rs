use emitter_core::montecarlo::{run_trials, StreamBlock};
use emitter_core::{
    decide, mp_edges, run_statistics, snapshot_spectrum, synth_snapshots, tw_constants,
    ArrayConfig, CampaignConfig, DetectorKind, Hypothesis, RngStream, ScenarioConfig,
    ThresholdPolicy, ThresholdSource, TwOrder,
};

fn campaign(n: usize, l: usize, snr_db: f64, trials: usize, seed: u64) -> CampaignConfig {
    let scenario = ScenarioConfig::new(snr_db, std::f64::consts::FRAC_PI_6, l, Hypothesis::H0);
    CampaignConfig::new(
        scenario,
        ArrayConfig::half_wavelength(n).unwrap(),
        trials,
        seed,
    )
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len().is_multiple_of(2) {
        0.5 * (v[m - 1] + v[m])
    } else {
        v[m]
    }
}

/// Two-sample Kolmogorov-Smirnov distance.
fn ks_statistic(a: &[f64], b: &[f64]) -> f64 {
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (mut i, mut j, mut d) = (0usize, 0usize, 0.0f64);
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / a.len() as f64 - j as f64 / b.len() as f64).abs());
    }
    d
}

#[test]
fn ratio_max_min_h0_mean_near_edge_ratio() {
    let cfg = campaign(4, 1000, 0.0, 5000, 3).with_detectors(&[DetectorKind::RMaxMin]);
    let stats = run_statistics(&cfg, Hypothesis::H0).unwrap();
    let v = stats.valid(DetectorKind::RMaxMin);
    let mean = v.iter().sum::<f64>() / v.len() as f64;
    assert!((1.0..=1.5).contains(&mean), "mean {mean}");
}

#[test]
fn same_seed_same_statistics() {
    let cfg = campaign(8, 50, -5.0, 200, 17);
    let a = run_statistics(&cfg, Hypothesis::H1).unwrap();
    let b = run_statistics(&cfg, Hypothesis::H1).unwrap();
    for kind in DetectorKind::ALL {
        let (x, y) = (a.get(kind).unwrap(), b.get(kind).unwrap());
        assert!(x.iter().zip(y).all(|(p, q)| p.to_bits() == q.to_bits()));
    }
}

#[test]
fn vanishing_signal_is_indistinguishable_from_noise() {
    let trials = 1000;
    let cfg = campaign(8, 100, -300.0, trials, 23);
    let h0 = run_statistics(&cfg, Hypothesis::H0).unwrap();
    let h1 = run_statistics(&cfg, Hypothesis::H1).unwrap();
    // 1% two-sample critical value: 1.628 * sqrt((n + m) / (n m))
    let critical = 1.628 * (2.0 / trials as f64).sqrt();
    for kind in DetectorKind::ALL {
        let d = ks_statistic(&h0.valid(kind), &h1.valid(kind));
        assert!(d < critical, "{kind}: D = {d}, critical {critical}");
    }
}

#[test]
fn strong_emitter_detected_with_analytic_thresholds() {
    let trials = 1000;
    let cfg = campaign(64, 200, 20.0, trials, 31);
    let policy = ThresholdPolicy::default();
    let source = ThresholdSource::with_embedded_tables();
    let kinds = [DetectorKind::RMaxMin, DetectorKind::RMaxNv];
    let hits = run_trials(&cfg, StreamBlock::Detection, |spec| {
        kinds
            .iter()
            .map(|&k| decide(k, spec, 0.1, &policy, &source).map(|d| d.emitter_present))
            .collect::<emitter_core::Result<Vec<bool>>>()
    })
    .unwrap();
    for (i, kind) in kinds.iter().enumerate() {
        let rate = hits.iter().filter(|h| h[i]).count() as f64 / trials as f64;
        assert!(rate >= 0.99, "{kind}: {rate}");
    }
}

#[test]
fn bulk_eigenvalues_stay_inside_mp_support() {
    let (n, l) = (64, 6400);
    let cfg = campaign(n, l, 0.0, 200, 41);
    let edges = mp_edges(n, l).unwrap();
    let outside = run_trials(&cfg, StreamBlock::Calibration, |spec| {
        Ok(spec
            .values()
            .iter()
            .filter(|&&v| v < edges.a - 0.05 || v > edges.b + 0.05)
            .count())
    })
    .unwrap();
    let fraction = outside.iter().sum::<usize>() as f64 / (200 * n) as f64;
    assert!(fraction <= 0.01, "escapees {fraction}");
}

#[test]
fn largest_eigenvalue_centering_matches_tw2() {
    let (n, l) = (64, 200);
    let cfg = campaign(n, l, 0.0, 2000, 43);
    let tw = tw_constants(n, l, TwOrder::Two).unwrap();
    let standardized = run_trials(&cfg, StreamBlock::Calibration, |spec| {
        Ok(tw.standardize(spec.max()))
    })
    .unwrap();
    let m = median(standardized);
    assert!((m + 1.7711).abs() <= 0.15, "median {m}");
}

#[test]
fn single_trial_matches_campaign_stream() {
    let cfg = campaign(6, 30, -2.0, 100, 9);
    let stats = run_statistics(&cfg, Hypothesis::H0).unwrap();
    let scenario = ScenarioConfig {
        hypothesis: Hypothesis::H0,
        ..cfg.scenario
    };
    let y = synth_snapshots(
        &scenario,
        &cfg.array,
        RngStream::new(9, StreamBlock::Calibration.stream_id(5)),
    )
    .unwrap();
    let spec = snapshot_spectrum(&y).unwrap();
    let direct = emitter_core::detectors::statistic(DetectorKind::RMaxNv, &spec).unwrap();
    assert_eq!(
        stats.get(DetectorKind::RMaxNv).unwrap()[5].to_bits(),
        direct.to_bits()
    );
}
