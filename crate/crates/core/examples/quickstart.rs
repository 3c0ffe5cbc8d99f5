//! Synthesizes one H1 snapshot block and runs every detector on it.

use emitter_core::montecarlo::calibrate_thresholds;
use emitter_core::{
    decide, snapshot_spectrum, synth_snapshots, ArrayConfig, CampaignConfig, DetectorKind,
    Hypothesis, RngStream, ScenarioConfig, ThresholdPolicy, ThresholdSource,
};

fn main() -> emitter_core::Result<()> {
    let array = ArrayConfig::half_wavelength(64)?;
    let scenario = ScenarioConfig::new(-10.0, std::f64::consts::FRAC_PI_6, 200, Hypothesis::H1);
    let y = synth_snapshots(&scenario, &array, RngStream::new(1, 0))?;
    let spec = snapshot_spectrum(&y)?;
    println!("largest eigenvalues: {:.3?}", &spec.values()[..4]);

    let pfa = 0.1;
    let cfg = CampaignConfig::new(scenario, array, 1000, 7);
    let source = ThresholdSource {
        calibration: calibrate_thresholds(&cfg, &[pfa])?,
        ..ThresholdSource::with_embedded_tables()
    };
    for kind in DetectorKind::ALL {
        let d = decide(kind, &spec, pfa, &ThresholdPolicy::empirical(), &source)?;
        println!(
            "{:<14} T = {:>9.4}  gamma = {:>9.4}  present = {}",
            kind.label(),
            d.statistic,
            d.threshold,
            d.emitter_present
        );
    }
    Ok(())
}
