//! One-pass, spatial-robustness and temporal-robustness evaluation.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::dataset::SequenceRecord;
use super::metrics::{auc, iou, success_curve};
use crate::error::{Error, Result};
use crate::fusion::{FusionConfig, SaliencySource};
use crate::imaging::BoundingBox;
use crate::saliency::{PrecomputedSaliency, SaliencyProvider, SpectralResidual};
use crate::tracker::{FrameDiagnostics, TrackerState};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Protocol {
    Ope,
    Sre,
    Tre,
}

impl fmt::Display for Protocol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Protocol::Ope => "ope",
            Protocol::Sre => "sre",
            Protocol::Tre => "tre",
        })
    }
}

impl FromStr for Protocol {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "ope" => Ok(Protocol::Ope),
            "sre" => Ok(Protocol::Sre),
            "tre" => Ok(Protocol::Tre),
            other => Err(Error::InvalidInput(format!("unknown protocol {other:?}"))),
        }
    }
}

pub const SRE_SHIFT: f64 = 0.1;
pub const SRE_SCALES: [f64; 4] = [0.8, 0.9, 1.1, 1.2];
pub const TRE_SEGMENTS: usize = 20;

/// The 12 perturbed initializations: shifts by 10% of the box size along
/// +x, -x, +y, -y; diagonal shifts (+,+), (+,-), (-,+), (-,-); then
/// center-preserving rescales by 0.8, 0.9, 1.1 and 1.2.
pub fn sre_perturbations(b: &BoundingBox) -> Vec<BoundingBox> {
    let (dx, dy) = (SRE_SHIFT * b.w, SRE_SHIFT * b.h);
    let shifts = [
        (dx, 0.0),
        (-dx, 0.0),
        (0.0, dy),
        (0.0, -dy),
        (dx, dy),
        (dx, -dy),
        (-dx, dy),
        (-dx, -dy),
    ];
    let mut out: Vec<BoundingBox> = shifts.iter().map(|&(x, y)| b.translated(x, y)).collect();
    out.extend(SRE_SCALES.iter().map(|&s| b.scaled(s)));
    out
}

/// Segment start frames `floor(i * n / 20)` for `i = 0..20`, deduplicated.
pub fn tre_segments(n_frames: usize) -> Vec<usize> {
    let mut starts: Vec<usize> = (0..TRE_SEGMENTS)
        .map(|i| i * n_frames / TRE_SEGMENTS)
        .collect();
    starts.dedup();
    starts
}

/// Produces boxes for frames `start..` of a sequence; the first entry
/// corresponds to the initialization frame.
pub trait TrackerRunner: Sync {
    fn run(
        &self,
        seq: &SequenceRecord,
        start: usize,
        init: BoundingBox,
    ) -> Result<Vec<BoundingBox>>;
}

/// Runs the saliency-fused tracker.
#[derive(Debug, Clone, Copy)]
pub struct FusionRunner {
    pub config: FusionConfig,
}

impl TrackerRunner for FusionRunner {
    fn run(
        &self,
        seq: &SequenceRecord,
        start: usize,
        init: BoundingBox,
    ) -> Result<Vec<BoundingBox>> {
        Ok(track_sequence(seq, start, init, &self.config)?
            .into_iter()
            .map(|(b, _)| b)
            .collect())
    }
}

/// Emits the ground truth; useful for checking the evaluation itself.
#[derive(Debug, Clone, Copy, Default)]
pub struct GroundTruthOracle;

impl TrackerRunner for GroundTruthOracle {
    fn run(&self, seq: &SequenceRecord, start: usize, _: BoundingBox) -> Result<Vec<BoundingBox>> {
        Ok(seq.truth[start..].to_vec())
    }
}

pub fn provider_for(seq: &SequenceRecord, cfg: &FusionConfig) -> Box<dyn SaliencyProvider> {
    match cfg.saliency_provider {
        SaliencySource::SpectralResidual => Box::new(SpectralResidual),
        SaliencySource::Precomputed => Box::new(PrecomputedSaliency::new(
            &seq.dir,
            seq.frame_numbers.clone(),
        )),
    }
}

/// Tracks from `start` to the last frame, returning per-frame boxes and
/// diagnostics (the first entry describes the initialization frame).
pub fn track_sequence(
    seq: &SequenceRecord,
    start: usize,
    init: BoundingBox,
    cfg: &FusionConfig,
) -> Result<Vec<(BoundingBox, FrameDiagnostics)>> {
    if start >= seq.len() {
        return Err(Error::InvalidInput(format!(
            "start frame {start} beyond {} frames",
            seq.len()
        )));
    }
    let first = seq.read_frame(start)?;
    let mut tracker = TrackerState::init_at(&first, start, init, *cfg, provider_for(seq, cfg))?;
    let mut out = Vec::with_capacity(seq.len() - start);
    out.push((tracker.bbox(), tracker.history()[0]));
    for i in start + 1..seq.len() {
        out.push(tracker.step(&seq.read_frame(i)?)?);
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SequenceScore {
    pub name: String,
    pub auc: f64,
    pub runs: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub protocol: Protocol,
    pub overall_auc: f64,
    pub per_sequence: Vec<SequenceScore>,
    pub per_attribute: BTreeMap<String, f64>,
    pub config_hash: String,
    pub runs: usize,
    pub frames: usize,
    /// Frames per second of tracker time, summed over runs as if executed
    /// on one thread. The only timing-dependent field.
    pub fps: f64,
}

impl EvalReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// Copy with timing fields zeroed, for reproducibility comparisons.
    pub fn without_timing(&self) -> EvalReport {
        EvalReport {
            fps: 0.0,
            ..self.clone()
        }
    }
}

/// Mean anchored at the first value, so identical inputs average to
/// themselves bit-for-bit.
fn mean(values: &[f64]) -> f64 {
    let first = values[0];
    first + values.iter().map(|v| v - first).sum::<f64>() / values.len() as f64
}

struct RunSpec {
    seq: usize,
    start: usize,
    init: BoundingBox,
}

fn plan_runs(protocol: Protocol, dataset: &[SequenceRecord]) -> Vec<RunSpec> {
    let mut runs = Vec::new();
    for (i, seq) in dataset.iter().enumerate() {
        match protocol {
            Protocol::Ope => runs.push(RunSpec {
                seq: i,
                start: 0,
                init: seq.truth[0],
            }),
            Protocol::Sre => runs.extend(sre_perturbations(&seq.truth[0]).into_iter().map(
                |init| RunSpec {
                    seq: i,
                    start: 0,
                    init,
                },
            )),
            Protocol::Tre => {
                runs.extend(tre_segments(seq.len()).into_iter().map(|start| RunSpec {
                    seq: i,
                    start,
                    init: seq.truth[start],
                }))
            }
        }
    }
    runs
}

struct RunOutcome {
    auc: f64,
    frames: usize,
    seconds: f64,
}

fn execute(
    spec: &RunSpec,
    dataset: &[SequenceRecord],
    runner: &dyn TrackerRunner,
) -> Result<RunOutcome> {
    let seq = &dataset[spec.seq];
    let started = Instant::now();
    let boxes = runner
        .run(seq, spec.start, spec.init)
        .map_err(|e| Error::Sequence {
            name: seq.name.clone(),
            source: Box::new(e),
        })?;
    let seconds = started.elapsed().as_secs_f64();
    let truth = &seq.truth[spec.start..];
    if boxes.len() != truth.len() {
        return Err(Error::Sequence {
            name: seq.name.clone(),
            source: Box::new(Error::CountMismatch {
                frames: truth.len(),
                boxes: boxes.len(),
            }),
        });
    }
    let overlaps: Vec<f64> = boxes.iter().zip(truth).map(|(b, g)| iou(b, g)).collect();
    Ok(RunOutcome {
        auc: auc(&success_curve(&overlaps)?),
        frames: boxes.len(),
        seconds,
    })
}

#[cfg(feature = "parallel")]
fn execute_all(
    runs: &[RunSpec],
    dataset: &[SequenceRecord],
    runner: &dyn TrackerRunner,
) -> Vec<Result<RunOutcome>> {
    use rayon::prelude::*;
    runs.par_iter()
        .map(|r| execute(r, dataset, runner))
        .collect()
}

#[cfg(not(feature = "parallel"))]
fn execute_all(
    runs: &[RunSpec],
    dataset: &[SequenceRecord],
    runner: &dyn TrackerRunner,
) -> Vec<Result<RunOutcome>> {
    runs.iter().map(|r| execute(r, dataset, runner)).collect()
}

/// Evaluates the fused tracker with `cfg` under `protocol`.
pub fn run_protocol(
    protocol: Protocol,
    dataset: &[SequenceRecord],
    cfg: &FusionConfig,
) -> Result<EvalReport> {
    cfg.validate()?;
    run_protocol_with(
        protocol,
        dataset,
        &FusionRunner { config: *cfg },
        cfg.hash_hex(),
    )
}

/// Evaluates any runner. Each sequence scores the mean AUC of its runs;
/// attribute columns average the sequences carrying the tag; the overall
/// score averages all sequences.
pub fn run_protocol_with(
    protocol: Protocol,
    dataset: &[SequenceRecord],
    runner: &dyn TrackerRunner,
    config_hash: String,
) -> Result<EvalReport> {
    if dataset.is_empty() {
        return Err(Error::InvalidInput("empty dataset".into()));
    }
    let runs = plan_runs(protocol, dataset);
    let outcomes = execute_all(&runs, dataset, runner)
        .into_iter()
        .collect::<Result<Vec<_>>>()?;

    let mut per_seq: Vec<Vec<f64>> = vec![Vec::new(); dataset.len()];
    for (spec, outcome) in runs.iter().zip(&outcomes) {
        per_seq[spec.seq].push(outcome.auc);
    }
    let per_sequence: Vec<SequenceScore> = dataset
        .iter()
        .zip(&per_seq)
        .map(|(seq, aucs)| SequenceScore {
            name: seq.name.clone(),
            auc: mean(aucs),
            runs: aucs.len(),
        })
        .collect();

    let mut by_tag: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    for (seq, score) in dataset.iter().zip(&per_sequence) {
        for tag in &seq.attributes {
            by_tag.entry(tag.to_string()).or_default().push(score.auc);
        }
    }
    let per_attribute = by_tag.into_iter().map(|(tag, v)| (tag, mean(&v))).collect();

    let overall_auc = mean(&per_sequence.iter().map(|s| s.auc).collect::<Vec<_>>());
    let frames: usize = outcomes.iter().map(|o| o.frames).sum();
    let seconds: f64 = outcomes.iter().map(|o| o.seconds).sum();
    Ok(EvalReport {
        protocol,
        overall_auc,
        per_sequence,
        per_attribute,
        config_hash,
        runs: runs.len(),
        frames,
        fps: if seconds > 0.0 {
            frames as f64 / seconds
        } else {
            0.0
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bench::dataset::Attribute;
    use std::path::PathBuf;

    fn bb(x: f64, y: f64, w: f64, h: f64) -> BoundingBox {
        BoundingBox::new(x, y, w, h).unwrap()
    }

    fn close(a: &BoundingBox, b: &BoundingBox) -> bool {
        [(a.x, b.x), (a.y, b.y), (a.w, b.w), (a.h, b.h)]
            .iter()
            .all(|(p, q)| (p - q).abs() < 1e-12)
    }

    fn fake_sequence(name: &str, n: usize, attributes: Vec<Attribute>) -> SequenceRecord {
        SequenceRecord {
            name: name.into(),
            dir: PathBuf::from(name),
            frames: (0..n).map(|i| PathBuf::from(format!("{i}.png"))).collect(),
            frame_numbers: (1..=n as u64).collect(),
            truth: (0..n).map(|i| bb(i as f64, 5.0, 10.0, 8.0)).collect(),
            attributes,
        }
    }

    #[test]
    fn sre_set_is_exact() {
        let p = sre_perturbations(&bb(100.0, 100.0, 50.0, 40.0));
        assert_eq!(p.len(), 12);
        let expect = [
            bb(105.0, 100.0, 50.0, 40.0),
            bb(95.0, 100.0, 50.0, 40.0),
            bb(100.0, 104.0, 50.0, 40.0),
            bb(100.0, 96.0, 50.0, 40.0),
            bb(105.0, 104.0, 50.0, 40.0),
            bb(105.0, 96.0, 50.0, 40.0),
            bb(95.0, 104.0, 50.0, 40.0),
            bb(95.0, 96.0, 50.0, 40.0),
            bb(105.0, 104.0, 40.0, 32.0),
            bb(102.5, 102.0, 45.0, 36.0),
            bb(97.5, 98.0, 55.0, 44.0),
            bb(95.0, 96.0, 60.0, 48.0),
        ];
        for (a, b) in p.iter().zip(&expect) {
            assert!(close(a, b), "{a:?} vs {b:?}");
            assert!(a.validate().is_ok());
        }
    }

    #[test]
    fn tre_starts() {
        assert_eq!(
            tre_segments(100),
            (0..20).map(|i| i * 5).collect::<Vec<_>>()
        );
        assert_eq!(tre_segments(20), (0..20).collect::<Vec<_>>());
        assert_eq!(tre_segments(5), vec![0, 1, 2, 3, 4]);
        assert_eq!(tre_segments(1), vec![0]);
    }

    #[test]
    fn protocol_names() {
        assert_eq!("SRE".parse::<Protocol>().unwrap(), Protocol::Sre);
        assert!("xyz".parse::<Protocol>().is_err());
        assert_eq!(Protocol::Tre.to_string(), "tre");
    }

    #[test]
    fn oracle_scores_the_strict_grid_maximum() {
        let data = vec![
            fake_sequence("a", 30, vec![Attribute::IV]),
            fake_sequence("b", 100, vec![]),
        ];
        for protocol in [Protocol::Ope, Protocol::Sre, Protocol::Tre] {
            let r = run_protocol_with(protocol, &data, &GroundTruthOracle, "x".into()).unwrap();
            assert_eq!(r.overall_auc, 20.0 / 21.0, "{protocol}");
            assert_eq!(r.per_attribute["IV"], 20.0 / 21.0);
            assert_eq!(r.per_attribute.len(), 1);
        }
    }

    #[test]
    fn run_counts() {
        let data = vec![fake_sequence("a", 100, vec![])];
        let sre =
            run_protocol_with(Protocol::Sre, &data, &GroundTruthOracle, String::new()).unwrap();
        assert_eq!((sre.runs, sre.per_sequence[0].runs), (12, 12));
        let tre =
            run_protocol_with(Protocol::Tre, &data, &GroundTruthOracle, String::new()).unwrap();
        assert_eq!(tre.runs, 20);
        // frames 0..100, 5..100, ..., 95..100
        assert_eq!(tre.frames, (0..20).map(|i| 100 - 5 * i).sum::<usize>());
        let ope =
            run_protocol_with(Protocol::Ope, &data, &GroundTruthOracle, String::new()).unwrap();
        assert_eq!(ope.runs, 1);
    }

    struct Shifted;

    impl TrackerRunner for Shifted {
        fn run(
            &self,
            seq: &SequenceRecord,
            start: usize,
            _: BoundingBox,
        ) -> Result<Vec<BoundingBox>> {
            // overlap 1/3 on every frame of sequence "bad", perfect elsewhere
            let dx = if seq.name == "bad" { 5.0 } else { 0.0 };
            Ok(seq.truth[start..]
                .iter()
                .map(|b| b.translated(dx, 0.0))
                .collect())
        }
    }

    #[test]
    fn overall_is_not_the_mean_of_attribute_columns() {
        let data = vec![
            fake_sequence("bad", 10, vec![Attribute::OC]),
            fake_sequence("good", 10, vec![]),
            fake_sequence("good2", 10, vec![Attribute::IV]),
        ];
        let r = run_protocol_with(Protocol::Ope, &data, &Shifted, String::new()).unwrap();
        // overlap 1/3 succeeds for thresholds 0.00..0.30: 7 of 21
        let bad = 7.0 / 21.0;
        let good = 20.0 / 21.0;
        assert!((r.per_attribute["OC"] - bad).abs() < 1e-15);
        assert!((r.per_attribute["IV"] - good).abs() < 1e-15);
        assert!((r.overall_auc - (bad + 2.0 * good) / 3.0).abs() < 1e-15);
    }

    #[test]
    fn runner_errors_name_the_sequence() {
        struct Failing;
        impl TrackerRunner for Failing {
            fn run(
                &self,
                _: &SequenceRecord,
                _: usize,
                _: BoundingBox,
            ) -> Result<Vec<BoundingBox>> {
                Err(Error::InvalidInput("boom".into()))
            }
        }
        let data = vec![fake_sequence("seq7", 5, vec![])];
        let err = run_protocol_with(Protocol::Ope, &data, &Failing, String::new()).unwrap_err();
        assert!(matches!(&err, Error::Sequence { name, .. } if name == "seq7"));
        assert!(run_protocol_with(Protocol::Ope, &[], &Failing, String::new()).is_err());
    }
}
