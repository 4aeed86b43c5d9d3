use std::fmt;
use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{anyhow, Context, Result};
use evtad::bottomup::{detect_bottomup, snapshot_training_samples};
use evtad::classify::{scene_training_samples, TrainingSetConfig};
use evtad::eval::{per_roi_report, MetricReport};
use evtad::ingest::{
    crop_to_roi, hot_pixel_filter, ir_flash_filter, parse_annotations, parse_detections, parse_event_csv,
    write_annotations, write_detections, write_event_csv, write_proposals, SensorDims,
};
use evtad::proposals::{event_tag, retag, sliding_window, watershed_baseline};
use evtad::rate::{event_rate, robust_normalize};
use evtad::represent::snapshot;
use evtad::synth::{add_hot_pixels, add_rate_spikes, generate_scene, random_scene};
use evtad::*;
use log::info;
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::config::RunConfig;
use crate::{Cli, Command, DetectMethod, Metric, ProposalMethod, StreamArgs, TrainMethod};

/// A flag combination clap cannot rule out on its own.
#[derive(Debug)]
pub struct UsageError(pub String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

fn usage(msg: impl Into<String>) -> anyhow::Error {
    UsageError(msg.into()).into()
}

/// Runs one subcommand and returns its JSON summary.
pub fn run(cli: Cli) -> Result<Value> {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(s) = cli.seed {
        cfg.seed = Some(s);
    }
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(j) = cli.jobs {
        if j == 0 {
            return Err(usage("--jobs must be at least 1"));
        }
        pool = pool.num_threads(j);
    }
    let pool = pool.build().context("building worker pool")?;
    pool.install(|| dispatch(cli.command, cfg))
}

fn dispatch(command: Command, mut cfg: RunConfig) -> Result<Value> {
    match command {
        Command::Synth {
            out,
            hot_pixels,
            spikes,
            spike_size,
        } => {
            if let Some(n) = hot_pixels {
                cfg.artifacts.hot_pixels = n;
            }
            if let Some(n) = spikes {
                cfg.artifacts.spikes = n;
            }
            if let Some(v) = spike_size {
                cfg.artifacts.spike_events_per_pixel = v;
            }
            synth(&cfg, &out)
        }
        Command::Rate {
            stream,
            annotations,
            roi,
            bin_width,
            percentile,
            normalize,
            out,
        } => {
            if let Some(w) = bin_width {
                cfg.rate.bin_width = w;
            }
            if let Some(p) = percentile {
                cfg.rate.percentile = p;
            }
            rate(&cfg, &stream, annotations.as_deref(), roi.as_deref(), normalize, &out)
        }
        Command::Propose {
            stream,
            annotations,
            method,
            lambda,
            mu,
            nms,
            min_dur,
            out,
        } => {
            let mut single_lambda = 0.2;
            if let Some(l) = lambda {
                single_lambda = *l.first().ok_or_else(|| usage("--lambda needs a value"))?;
                cfg.proposals.lambda_grid = l;
            }
            if let Some(m) = mu {
                cfg.proposals.mu_grid = m;
            }
            if let Some(t) = nms {
                cfg.proposals.nms_tiou = t;
            }
            if let Some(d) = min_dur {
                cfg.proposals.min_duration = d;
            }
            propose(&cfg, &stream, annotations.as_deref(), method, single_lambda, &out)
        }
        Command::Snapshot {
            stream,
            annotations,
            roi,
            t,
            kind,
            window,
            tau,
            size,
            out,
        } => {
            if let Some(k) = kind {
                cfg.features.kind = k.into();
            }
            if let Some(w) = window {
                cfg.features.represent.window = w;
            }
            if let Some(v) = tau {
                cfg.features.represent.tau = v;
            }
            snapshot_cmd(&mut cfg, &stream, annotations.as_deref(), roi.as_deref(), t, size, &out)
        }
        Command::Train {
            stream,
            annotations,
            method,
            kind,
            epochs,
            learning_rate,
            batch_size,
            hidden,
            class_weights,
            negative_factor,
            divisor,
            n_start,
            n_core,
            n_end,
            stride,
            out,
        } => {
            let t = &mut cfg.train;
            if let Some(v) = epochs {
                t.epochs = v;
            }
            if let Some(v) = learning_rate {
                t.learning_rate = v;
            }
            if let Some(v) = batch_size {
                t.batch_size = v;
            }
            if let Some(v) = hidden {
                t.hidden = v;
            }
            if let Some(w) = class_weights {
                t.class_weights = Some([w[0], w[1]]);
            }
            if let Some(v) = negative_factor {
                cfg.labeling.negative_factor = v;
            }
            let features = match method {
                TrainMethod::Atsn => &mut cfg.features,
                TrainMethod::Bottomup => &mut cfg.bottomup.features,
            };
            if let Some(k) = kind {
                features.kind = k.into();
            }
            if let Some(v) = divisor {
                features.divisor = v;
            }
            if let Some(v) = n_start {
                features.sampling.n_start = v;
            }
            if let Some(v) = n_core {
                features.sampling.n_core = v;
            }
            if let Some(v) = n_end {
                features.sampling.n_end = v;
            }
            if let Some(v) = stride {
                cfg.bottomup.stride = v;
            }
            train_cmd(&cfg, &stream, &annotations, method, &out)
        }
        Command::Detect {
            stream,
            annotations,
            method,
            model,
            oracle_tiou,
            morph_kernel,
            no_morph,
            min_score,
            nms,
            out,
        } => {
            if let Some(k) = morph_kernel {
                cfg.bottomup.kernel = Some(k);
            }
            if no_morph {
                cfg.bottomup.kernel = None;
            }
            if let Some(m) = min_score {
                cfg.detect.min_score = Some(m);
            }
            if let Some(t) = nms {
                cfg.detect.nms_tiou = t;
            }
            detect_cmd(
                &cfg,
                &stream,
                annotations.as_deref(),
                method,
                model.as_deref(),
                oracle_tiou,
                &out,
            )
        }
        Command::Eval {
            pred,
            gt,
            metrics,
            tiou,
            top_n,
            interpolated,
            per_roi,
            out,
        } => {
            if let Some(t) = tiou {
                cfg.eval.tiou_thresholds = t;
            }
            if let Some(n) = top_n {
                cfg.eval.top_n = n;
            }
            if interpolated {
                cfg.eval.interpolated = true;
            }
            eval_cmd(&cfg, &pred, &gt, &metrics, per_roi.as_deref(), &out)
        }
        Command::Report {
            stream,
            annotations,
            pred,
            out_dir,
        } => report(&cfg, &stream, &annotations, pred.as_deref(), &out_dir),
    }
}

fn seed(cfg: &RunConfig) -> u64 {
    cfg.seed.unwrap_or(0)
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn load_annotations(path: &Path) -> Result<AnnotationSet> {
    parse_annotations(&read_text(path)?).with_context(|| format!("annotations {}", path.display()))
}

/// Reads and filters an event stream.
fn load_stream(cfg: &RunConfig, args: &StreamArgs) -> Result<EventStream> {
    let file = File::open(&args.events).with_context(|| format!("opening {}", args.events.display()))?;
    let dims = args
        .width
        .zip(args.height)
        .map(|(width, height)| SensorDims { width, height });
    let mut s =
        parse_event_csv(BufReader::new(file), dims).with_context(|| format!("events {}", args.events.display()))?;
    info!("loaded {} events from {}", s.len(), args.events.display());
    if let Some(rate) = args.hot_pixel_rate.or(cfg.filters.hot_pixel_rate) {
        let before = s.len();
        s = hot_pixel_filter(&s, rate)?;
        info!("hot pixel filter removed {} events", before - s.len());
    }
    let flash = cfg.filters.flash.or(args.flash_filter.then(Default::default));
    if let Some(f) = flash {
        let before = s.len();
        s = ir_flash_filter(&s, &f)?;
        info!("flash filter removed {} events", before - s.len());
    }
    Ok(s)
}

/// Roi boxes from annotations, or the whole sensor as roi `sensor`.
fn rois_or_sensor(ann: Option<&AnnotationSet>, s: &EventStream) -> Vec<BoundingBox> {
    match ann {
        Some(a) => a.rois.clone(),
        None => vec![BoundingBox {
            roi_id: "sensor".into(),
            x: 0,
            y: 0,
            w: s.width(),
            h: s.height(),
        }],
    }
}

fn crop_named(s: &EventStream, ann: &AnnotationSet, roi: &str) -> Result<EventStream> {
    let b = ann.roi(roi).ok_or_else(|| evtad::Error::UnknownRoi(roi.to_string()))?;
    Ok(crop_to_roi(s, b)?)
}

fn path_str(p: &Path) -> String {
    p.display().to_string()
}

fn synth(cfg: &RunConfig, out: &Path) -> Result<Value> {
    let seed = seed(cfg);
    let scene = match &cfg.scene {
        Some(sc) => {
            let mut sc = sc.clone();
            if let Some(s) = cfg.seed {
                sc.seed = s;
            }
            sc
        }
        None => random_scene(&cfg.random_scene, seed)?,
    };
    let (mut s, ann) = generate_scene(&scene)?;
    let a = &cfg.artifacts;
    if a.hot_pixels > 0 {
        s = add_hot_pixels(&s, a.hot_pixels, a.hot_pixel_rate, scene.seed)?;
    }
    if a.spikes > 0 {
        s = add_rate_spikes(&s, a.spikes, a.spike_events_per_pixel, cfg.rate.bin_width, scene.seed)?;
    }
    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    let events_path = out.join("events.csv");
    let mut w =
        BufWriter::new(File::create(&events_path).with_context(|| format!("writing {}", events_path.display()))?);
    write_event_csv(&s, &mut w)?;
    w.flush()?;
    let ann_path = out.join("annotations.json");
    write_text(&ann_path, &write_annotations(&ann)?)?;
    write_text(&out.join("scene.json"), &serde_json::to_string_pretty(&scene)?)?;
    info!("scene with {} events and {} instances", s.len(), ann.instances.len());
    Ok(json!({
        "command": "synth",
        "seed": scene.seed,
        "events": s.len(),
        "rois": ann.rois.len(),
        "instances": ann.instances.len(),
        "outputs": [path_str(&events_path), path_str(&ann_path), path_str(&out.join("scene.json"))],
    }))
}

fn rate_csv(r: &RateSeries) -> String {
    let mut out = String::from("bin_start_us,rate\n");
    for (k, v) in r.values().iter().enumerate() {
        out.push_str(&format!("{},{}\n", r.bin_start_us(k), v));
    }
    out
}

fn rate(
    cfg: &RunConfig,
    stream: &StreamArgs,
    annotations: Option<&Path>,
    roi: Option<&str>,
    normalize: bool,
    out: &Path,
) -> Result<Value> {
    cfg.rate.validate()?;
    let mut s = load_stream(cfg, stream)?;
    if let (Some(a), Some(id)) = (annotations, roi) {
        s = crop_named(&s, &load_annotations(a)?, id)?;
    }
    let mut r = event_rate(&s, cfg.rate.bin_width)?;
    if normalize {
        r = robust_normalize(&r, cfg.rate.percentile)?;
    }
    write_text(out, &rate_csv(&r))?;
    Ok(json!({
        "command": "rate",
        "bins": r.len(),
        "normalized": normalize,
        "outputs": [path_str(out)],
    }))
}

fn proposals_for(
    cfg: &RunConfig,
    s: &EventStream,
    method: ProposalMethod,
    lambda: f64,
) -> evtad::Result<Vec<Proposal>> {
    match method {
        ProposalMethod::Retag => retag(
            &robust_normalize(&event_rate(s, cfg.rate.bin_width)?, cfg.rate.percentile)?,
            &cfg.proposals,
        ),
        ProposalMethod::Etag => event_tag(&event_rate(s, cfg.rate.bin_width)?, &cfg.proposals),
        ProposalMethod::Watershed => watershed_baseline(
            &robust_normalize(&event_rate(s, cfg.rate.bin_width)?, cfg.rate.percentile)?,
            lambda,
            cfg.proposals.min_duration,
        ),
        ProposalMethod::Sliding => sliding_window(s.t_begin() as f64 / 1e6, s.t_end() as f64 / 1e6, &cfg.sliding),
    }
}

fn propose(
    cfg: &RunConfig,
    stream: &StreamArgs,
    annotations: Option<&Path>,
    method: ProposalMethod,
    lambda: f64,
    out: &Path,
) -> Result<Value> {
    cfg.rate.validate()?;
    cfg.proposals.validate()?;
    let s = load_stream(cfg, stream)?;
    let ann = annotations.map(load_annotations).transpose()?;
    let rois = rois_or_sensor(ann.as_ref(), &s);
    let groups = rois
        .par_iter()
        .map(|b| proposals_for(cfg, &crop_to_roi(&s, b)?, method, lambda))
        .collect::<evtad::Result<Vec<_>>>()?;
    let total: usize = groups.iter().map(Vec::len).sum();
    write_text(
        out,
        &write_proposals(
            rois.iter()
                .map(|b| b.roi_id.as_str())
                .zip(groups.iter().map(Vec::as_slice)),
        )?,
    )?;
    info!("{total} proposals over {} rois", rois.len());
    Ok(json!({
        "command": "propose",
        "method": format!("{method:?}").to_lowercase(),
        "rois": rois.len(),
        "proposals": total,
        "outputs": [path_str(out)],
    }))
}

fn snapshot_cmd(
    cfg: &mut RunConfig,
    stream: &StreamArgs,
    annotations: Option<&Path>,
    roi: Option<&str>,
    t: f64,
    size: Option<usize>,
    out: &Path,
) -> Result<Value> {
    let mut s = load_stream(cfg, stream)?;
    if let (Some(a), Some(id)) = (annotations, roi) {
        s = crop_named(&s, &load_annotations(a)?, id)?;
    }
    let repr = &mut cfg.features.represent;
    match size {
        Some(0) => {
            repr.out_h = s.height() as usize;
            repr.out_w = s.width() as usize;
        }
        Some(n) => {
            repr.out_h = n;
            repr.out_w = n;
        }
        None => {}
    }
    repr.validate()?;
    let g = snapshot(&s, t, cfg.features.kind, repr);
    write_text(out, &g.to_csv())?;
    let (lo, hi) = g.min_max();
    Ok(json!({
        "command": "snapshot",
        "kind": format!("{:?}", cfg.features.kind).to_lowercase(),
        "t": t,
        "height": g.h,
        "width": g.w,
        "sum": g.sum(),
        "min": lo,
        "max": hi,
        "outputs": [path_str(out)],
    }))
}

fn train_cmd(
    cfg: &RunConfig,
    stream: &StreamArgs,
    annotations: &Path,
    method: TrainMethod,
    out: &Path,
) -> Result<Value> {
    let s = load_stream(cfg, stream)?;
    let ann = load_annotations(annotations)?;
    let seed = seed(cfg);
    let train_cfg = TrainConfig { seed, ..cfg.train };
    let (samples, features) = match method {
        TrainMethod::Atsn => {
            let tcfg = TrainingSetConfig {
                rate: cfg.rate,
                proposals: cfg.proposals.clone(),
                features: cfg.features,
                positive_tiou: cfg.labeling.positive_tiou,
                negative_factor: cfg.labeling.negative_factor,
                include_ground_truth: cfg.labeling.include_ground_truth,
                seed,
            };
            (scene_training_samples(&s, &ann, &tcfg)?, cfg.features)
        }
        TrainMethod::Bottomup => {
            let per_roi = ann
                .rois
                .par_iter()
                .map(|b| snapshot_training_samples(&crop_to_roi(&s, b)?, &ann.intervals_for(&b.roi_id), &cfg.bottomup))
                .collect::<evtad::Result<Vec<_>>>()?;
            (per_roi.into_iter().flatten().collect(), cfg.bottomup.features)
        }
    };
    let positives = samples.iter().filter(|x| x.label).count();
    info!("training on {} samples ({positives} positive)", samples.len());
    let model = evtad::classify::train(&samples, None, features, &train_cfg)?;
    write_text(out, &model.to_json()?)?;
    Ok(json!({
        "command": "train",
        "method": format!("{method:?}").to_lowercase(),
        "samples": samples.len(),
        "positives": positives,
        "loss": model.loss,
        "outputs": [path_str(out)],
    }))
}

fn load_model(path: Option<&Path>) -> Result<Model> {
    let p = path.ok_or_else(|| usage("this method needs --model"))?;
    Model::from_json(&read_text(p)?).with_context(|| format!("model {}", p.display()))
}

fn detect_cmd(
    cfg: &RunConfig,
    stream: &StreamArgs,
    annotations: Option<&Path>,
    method: DetectMethod,
    model: Option<&Path>,
    oracle_tiou: f64,
    out: &Path,
) -> Result<Value> {
    let s = load_stream(cfg, stream)?;
    let ann = annotations.map(load_annotations).transpose()?;
    let rois = rois_or_sensor(ann.as_ref(), &s);
    let dcfg = DetectConfig {
        rate: cfg.rate,
        proposals: cfg.proposals.clone(),
        nms_tiou: cfg.detect.nms_tiou,
        min_score: cfg.detect.min_score,
        label: cfg.detect.label.clone(),
    };
    let dets = match method {
        DetectMethod::Atsn => detect_scene(&s, &rois, &dcfg, &load_model(model)?)?,
        DetectMethod::Perfect => {
            let a = ann
                .as_ref()
                .ok_or_else(|| usage("--method perfect needs --annotations"))?;
            detect_scene(&s, &rois, &dcfg, &PerfectClassifier::new(a, oracle_tiou))?
        }
        DetectMethod::Bottomup => {
            let m = load_model(model)?;
            let bcfg = evtad::bottomup::BottomUpConfig {
                label: cfg.detect.label.clone(),
                ..cfg.bottomup.clone()
            };
            rois.par_iter()
                .map(|b| detect_bottomup(&crop_to_roi(&s, b)?, &b.roi_id, &m, &bcfg))
                .collect::<evtad::Result<Vec<_>>>()?
                .into_iter()
                .flatten()
                .collect()
        }
    };
    write_text(out, &write_detections(&dets)?)?;
    info!("{} detections", dets.len());
    Ok(json!({
        "command": "detect",
        "method": format!("{method:?}").to_lowercase(),
        "rois": rois.len(),
        "detections": dets.len(),
        "outputs": [path_str(out)],
    }))
}

fn eval_cmd(
    cfg: &RunConfig,
    pred: &Path,
    gt: &Path,
    metrics: &[Metric],
    per_roi: Option<&Path>,
    out: &Path,
) -> Result<Value> {
    cfg.eval.validate()?;
    let dets = parse_detections(&read_text(pred)?).with_context(|| format!("predictions {}", pred.display()))?;
    let ann = load_annotations(gt)?;
    let mut report = MetricReport::default();
    let mut summary = serde_json::Map::new();
    summary.insert("command".into(), json!("eval"));
    summary.insert("predictions".into(), json!(dets.len()));
    summary.insert("instances".into(), json!(ann.instances.len()));
    if metrics.contains(&Metric::Ar) {
        let ar = average_recall(&dets, &ann.instances, &cfg.eval)?;
        report.push_ar(&ar);
        summary.insert(
            "ar".into(),
            ar.iter()
                .map(|(n, v)| (format!("top{n}"), json!(v)))
                .collect::<serde_json::Map<_, _>>()
                .into(),
        );
    }
    if metrics.contains(&Metric::Map) {
        let m = mean_ap(&dets, &ann.instances, &cfg.eval)?;
        report.push_map(&m);
        summary.insert("map".into(), json!(m.average));
    }
    write_text(out, &report.to_csv())?;
    let mut outputs = vec![path_str(out)];
    if let Some(p) = per_roi {
        let ids: Vec<String> = ann.rois.iter().map(|b| b.roi_id.clone()).collect();
        write_text(p, &per_roi_report(&dets, &ann.instances, &ids, &cfg.eval)?.to_csv())?;
        outputs.push(path_str(p));
    }
    summary.insert("outputs".into(), json!(outputs));
    Ok(Value::Object(summary))
}

fn report(
    cfg: &RunConfig,
    stream: &StreamArgs,
    annotations: &Path,
    pred: Option<&Path>,
    out_dir: &Path,
) -> Result<Value> {
    cfg.rate.validate()?;
    let s = load_stream(cfg, stream)?;
    let ann = load_annotations(annotations)?;
    fs::create_dir_all(out_dir).with_context(|| format!("creating {}", out_dir.display()))?;
    let curves = ann
        .rois
        .par_iter()
        .map(|b| {
            let raw = event_rate(&crop_to_roi(&s, b)?, cfg.rate.bin_width)?;
            let norm = robust_normalize(&raw, cfg.rate.percentile)?;
            let mut text = String::from("bin_start_us,rate,normalized\n");
            for (k, (r, n)) in raw.values().iter().zip(norm.values()).enumerate() {
                text.push_str(&format!("{},{},{}\n", raw.bin_start_us(k), r, n));
            }
            Ok((b.roi_id.clone(), text))
        })
        .collect::<evtad::Result<Vec<_>>>()?;
    let mut outputs: Vec<PathBuf> = Vec::new();
    for (id, text) in curves {
        let p = out_dir.join(format!("rate_{id}.csv"));
        write_text(&p, &text)?;
        outputs.push(p);
    }
    let mut summary = json!({ "command": "report", "rois": ann.rois.len() });
    if let Some(p) = pred {
        let dets = parse_detections(&read_text(p)?).with_context(|| format!("predictions {}", p.display()))?;
        let ids: Vec<String> = ann.rois.iter().map(|b| b.roi_id.clone()).collect();
        if ann.instances.is_empty() {
            return Err(anyhow!(evtad::Error::EmptyGroundTruth));
        }
        let table = per_roi_report(&dets, &ann.instances, &ids, &cfg.eval)?;
        let path = out_dir.join("per_roi.csv");
        write_text(&path, &table.to_csv())?;
        outputs.push(path);
        summary["map"] = json!(table.averages().map(|m| m.average));
    }
    summary["outputs"] = json!(outputs.iter().map(|p| path_str(p)).collect::<Vec<_>>());
    Ok(summary)
}
