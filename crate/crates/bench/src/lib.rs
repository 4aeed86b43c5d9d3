//! Fixtures shared by the benchmarks.

use evtad::synth::{generate_scene, random_scene, RandomSceneConfig};
use evtad::{AnnotationSet, Detection, EventStream};

/// A seeded random scene of `duration` seconds on a `width` x `height` sensor.
pub fn scene(width: u32, height: u32, duration: f64, n_rois: usize) -> (EventStream, AnnotationSet) {
    let cfg = RandomSceneConfig {
        width,
        height,
        duration,
        n_rois,
        ..RandomSceneConfig::default()
    };
    generate_scene(&random_scene(&cfg, 7).expect("valid scene config")).expect("scene generation")
}

/// Ground truth turned into detections with jittered bounds and scores, plus
/// an equal number of false alarms, so evaluation does real matching work.
pub fn noisy_detections(ann: &AnnotationSet) -> Vec<Detection> {
    let mut out = Vec::new();
    for (k, inst) in ann.instances.iter().enumerate() {
        let shift = (k % 5) as f64 * 0.3;
        let iv = &inst.interval;
        for (start, score) in [(iv.start() + shift, 0.9 - 0.01 * k as f64), (iv.end() + 1.0, 0.5)] {
            out.push(Detection {
                roi_id: inst.roi_id.clone(),
                interval: evtad::Interval::new(start, start + iv.duration()).expect("positive length"),
                score,
                label: inst.label.clone(),
            });
        }
    }
    out
}
