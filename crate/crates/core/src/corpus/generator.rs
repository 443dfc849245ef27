use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use super::templates::{TemplateId, TemplateTable, MULTI_SEGMENT, NEUTRAL_FINDINGS};
use crate::error::{Error, Result};
use crate::model::MultiTaskSchema;
use crate::numerics::{Rng, Stream};
use crate::pipeline::{BodyPart, MotionSegment};

/// Training-label counts per task and class, used as default marginals.
fn default_counts(body: BodyPart) -> Vec<(&'static str, Vec<f64>)> {
    match body {
        BodyPart::Lumbar => vec![
            ("stenosis", vec![3787.0, 350.0, 202.0]),
            ("disc", vec![1885.0, 1998.0, 456.0]),
            ("nerve", vec![3790.0, 549.0]),
        ],
        BodyPart::Cervical => vec![
            ("stenosis", vec![5488.0, 561.0, 178.0]),
            ("disc", vec![2731.0, 2699.0, 797.0]),
            ("cord", vec![5702.0, 525.0]),
            ("foraminal", vec![5262.0, 965.0]),
        ],
    }
}

pub fn default_priors(body: BodyPart) -> BTreeMap<String, Vec<f64>> {
    default_counts(body)
        .into_iter()
        .map(|(task, counts)| {
            let total: f64 = counts.iter().sum();
            (task.to_string(), counts.iter().map(|c| c / total).collect())
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GeneratorConfig {
    pub body_part: BodyPart,
    pub n_reports: usize,
    pub practice_styles: usize,
    /// Per-task class probabilities; empty means the built-in marginals.
    pub class_priors: BTreeMap<String, Vec<f64>>,
    pub ocr_noise_rate: f64,
    /// Weight of the shared per-segment severity latent in every task
    /// (0 = independent tasks).
    pub task_correlation: f64,
    /// Probability that a report mentions no spinal level at all.
    pub no_level_rate: f64,
    pub seed: u64,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        GeneratorConfig::new(BodyPart::Lumbar)
    }
}

impl GeneratorConfig {
    pub fn new(body_part: BodyPart) -> Self {
        GeneratorConfig {
            body_part,
            n_reports: 2000,
            practice_styles: 12,
            class_priors: BTreeMap::new(),
            ocr_noise_rate: 0.25,
            task_correlation: 0.8,
            no_level_rate: 0.03,
            seed: 0,
        }
    }

    pub fn schema(&self) -> MultiTaskSchema {
        self.body_part.schema()
    }

    /// Priors in schema order, after validation.
    pub fn priors(&self) -> Result<Vec<Vec<f64>>> {
        let given = if self.class_priors.is_empty() { default_priors(self.body_part) } else { self.class_priors.clone() };
        let schema = self.schema();
        if let Some(extra) = given.keys().find(|k| schema.index_of(k).is_none()) {
            return Err(Error::Config(format!(
                "generator.class_priors.{extra}: not a {} task (valid: {:?})",
                self.body_part.as_str(),
                schema.names()
            )));
        }
        schema
            .tasks
            .iter()
            .map(|t| {
                let p = given.get(&t.name).ok_or_else(|| {
                    Error::Config(format!("generator.class_priors.{}: missing", t.name))
                })?;
                if p.len() != t.n_classes {
                    return Err(Error::Config(format!(
                        "generator.class_priors.{}: {} probabilities for {} classes",
                        t.name,
                        p.len(),
                        t.n_classes
                    )));
                }
                if p.iter().any(|v| !(0.0..=1.0).contains(v)) {
                    return Err(Error::Config(format!("generator.class_priors.{}: entries must lie in [0, 1]", t.name)));
                }
                let sum: f64 = p.iter().sum();
                if (sum - 1.0).abs() > 1e-6 {
                    return Err(Error::Config(format!("generator.class_priors.{}: probabilities sum to {sum}", t.name)));
                }
                Ok(p.clone())
            })
            .collect()
    }

    pub fn validate(&self) -> Result<()> {
        self.priors()?;
        if self.practice_styles == 0 {
            return Err(Error::Config("generator.practice_styles: must be at least 1".into()));
        }
        for (name, v) in [
            ("ocr_noise_rate", self.ocr_noise_rate),
            ("task_correlation", self.task_correlation),
            ("no_level_rate", self.no_level_rate),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::Config(format!("generator.{name}: {v} outside [0, 1]")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LocationSpan {
    pub start: usize,
    pub end: usize,
    pub segment: MotionSegment,
}

/// Which template produced which sentence; kept in memory only.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TemplateUse {
    pub segment: MotionSegment,
    pub template: TemplateId,
    pub start: usize,
    pub end: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnotatedReport {
    pub id: String,
    pub practice: usize,
    pub body_part: BodyPart,
    pub text: String,
    /// Gold class per task for every segment the report describes.
    pub segments: BTreeMap<MotionSegment, BTreeMap<String, usize>>,
    pub spans: Vec<LocationSpan>,
    #[serde(default)]
    pub ocr: bool,
    #[serde(skip)]
    pub provenance: Vec<TemplateUse>,
}

impl AnnotatedReport {
    /// Gold labels of one segment in schema order.
    pub fn labels(&self, segment: MotionSegment, schema: &MultiTaskSchema) -> Option<Vec<usize>> {
        let gold = self.segments.get(&segment)?;
        schema.tasks.iter().map(|t| gold.get(&t.name).copied()).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum MentionFormat {
    Canonical,
    Short,
    Slash,
    Spaced,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum OcrMention {
    Collapsed,
    Doubled,
    Underscore,
    AtSign,
    DroppedLevel,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Prefix {
    Colon,
    AtComma,
    LevelColon,
    AtTheLevel,
}

#[derive(Debug, Clone)]
struct Practice {
    format: MentionFormat,
    prefix: Prefix,
    numbered: bool,
    upper: bool,
    line_per_segment: bool,
    normal_rate: f64,
    header: usize,
}

impl Practice {
    fn draw(rng: &mut Rng) -> Practice {
        Practice {
            format: *rng.choose(&[MentionFormat::Canonical, MentionFormat::Canonical, MentionFormat::Short, MentionFormat::Slash, MentionFormat::Spaced]),
            prefix: *rng.choose(&[Prefix::Colon, Prefix::Colon, Prefix::AtComma, Prefix::LevelColon, Prefix::AtTheLevel]),
            numbered: rng.bernoulli(0.3),
            upper: rng.bernoulli(0.15),
            line_per_segment: rng.bernoulli(0.75),
            normal_rate: rng.uniform_range(0.2, 0.7),
            header: rng.below(3),
        }
    }
}

fn render_mention(seg: MotionSegment, format: MentionFormat) -> String {
    let ((a, x), (b, y)) = seg.vertebrae().expect("real segment");
    match format {
        MentionFormat::Canonical => format!("{a}{x}-{b}{y}"),
        MentionFormat::Short if a == b => format!("{a}{x}-{y}"),
        MentionFormat::Short => format!("{a}{x}-{b}{y}"),
        MentionFormat::Slash => format!("{a}{x}/{b}{y}"),
        MentionFormat::Spaced => format!("{a}{x} - {b}{y}"),
    }
}

fn render_ocr_mention(seg: MotionSegment, kind: OcrMention) -> String {
    let ((a, x), (b, y)) = seg.vertebrae().expect("real segment");
    match kind {
        OcrMention::Collapsed if a == b => format!("{a}{x}{y}"),
        OcrMention::Collapsed | OcrMention::Doubled => format!("{a}{x}{b}{y}"),
        OcrMention::Underscore => format!("{a}{x}_{b}{y}"),
        OcrMention::AtSign => format!("{a}{x}@{b}{y}"),
        OcrMention::DroppedLevel => format!("{a}@{b}{y}"),
    }
}

/// Scanner-style damage to boilerplate: letters swapped for look-alikes or
/// dropped. Only ASCII letters are touched, so punctuation (and with it the
/// sentence structure) survives.
fn ocr_damage(s: &str, rng: &mut Rng, rate: f64) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        if !c.is_ascii_alphabetic() || !rng.bernoulli(rate) {
            out.push(c);
            continue;
        }
        match (c, rng.below(3)) {
            (_, 0) => {}
            ('l' | 'I', _) => out.push('1'),
            ('o' | 'O', _) => out.push('0'),
            ('e', _) => out.push('c'),
            ('m', _) => out.push_str("rn"),
            ('S', _) => out.push('5'),
            (c, _) => out.push(c),
        }
    }
    out
}

fn lower_first(s: &str) -> String {
    let mut c = s.chars();
    match c.next() {
        Some(f) => f.to_lowercase().chain(c).collect(),
        None => String::new(),
    }
}

struct Builder {
    text: String,
    spans: Vec<LocationSpan>,
    provenance: Vec<TemplateUse>,
}

impl Builder {
    fn push(&mut self, s: &str) {
        self.text.push_str(s);
    }

    fn mention(&mut self, seg: MotionSegment, rendered: &str) {
        let start = self.text.len();
        self.text.push_str(rendered);
        self.spans.push(LocationSpan { start, end: self.text.len(), segment: seg });
    }

    fn finding(&mut self, seg: MotionSegment, id: TemplateId, rendered: &str) {
        let start = self.text.len();
        self.text.push_str(rendered);
        self.provenance.push(TemplateUse { segment: seg, template: id, start, end: self.text.len() });
    }
}

const EXAM: [[&str; 3]; 2] = [
    ["EXAM: MRI LUMBAR SPINE WITHOUT CONTRAST", "MRI OF THE LUMBAR SPINE", "Procedure: MR lumbar spine without contrast."],
    ["EXAM: MRI CERVICAL SPINE WITHOUT CONTRAST", "MRI OF THE CERVICAL SPINE", "Procedure: MR cervical spine without contrast."],
];
const HISTORY: [&[&str]; 2] = [
    &["CLINICAL HISTORY: Low back pain.", "History: Low back pain radiating to the left leg.", "Indication: Chronic back pain with radiculopathy.", "CLINICAL INFORMATION: Back pain after lifting."],
    &["CLINICAL HISTORY: Neck pain.", "History: Neck pain radiating to the right arm.", "Indication: Chronic neck pain with numbness.", "CLINICAL INFORMATION: Neck pain after a fall."],
];
const TECHNIQUE: &[&str] = &[
    "TECHNIQUE: Sagittal and axial T1 and T2 weighted images were obtained.",
    "Technique: Multiplanar multisequence imaging was performed without contrast.",
    "TECHNIQUE: Routine protocol.",
];
const GENERAL: [&[&str]; 2] = [
    &["Alignment is normal.", "Vertebral body heights are maintained.", "The conus medullaris terminates normally.", "No marrow signal abnormality.", "Paraspinal soft tissues are unremarkable.", "There is straightening of the normal lordosis."],
    &["Alignment is normal.", "Vertebral body heights are maintained.", "The craniocervical junction is unremarkable.", "No marrow signal abnormality.", "Paraspinal soft tissues are unremarkable.", "There is straightening of the normal lordosis."],
];
const NO_LEVEL: &[&str] = &[
    "Limited examination due to motion artifact.",
    "The study is nondiagnostic.",
    "Images are severely degraded by motion.",
];
const CLOSING: &[&str] = &["Electronically signed.", "Thank you for this referral.", "Dictated by the reading radiologist."];
const QUIET_IMPRESSION: &[&str] = &["Mild degenerative changes as described above.", "No acute findings.", "Stable degenerative changes."];

fn body_index(body: BodyPart) -> usize {
    match body {
        BodyPart::Lumbar => 0,
        BodyPart::Cervical => 1,
    }
}

/// Draws one class per task for a segment: a Gaussian copula with a shared
/// severity latent keeps every marginal equal to its prior.
fn draw_classes(rng: &mut Rng, priors: &[Vec<f64>], rho: f64, normal: &Normal) -> Vec<usize> {
    let shared = rng.normal();
    priors
        .iter()
        .map(|p| {
            let z = rho.sqrt() * shared + (1.0 - rho).sqrt() * rng.normal();
            let u = normal.cdf(z);
            let mut acc = 0.0;
            for (k, pk) in p.iter().enumerate() {
                acc += pk;
                if u < acc {
                    return k;
                }
            }
            p.len() - 1
        })
        .collect()
}

/// Generates `cfg.n_reports` annotated reports; identical configs give
/// identical corpora.
pub fn generate_corpus(cfg: &GeneratorConfig) -> Result<Vec<AnnotatedReport>> {
    cfg.validate()?;
    let priors = cfg.priors()?;
    let root = Rng::new(cfg.seed);
    let practices: Vec<Practice> =
        (0..cfg.practice_styles).map(|p| Practice::draw(&mut root.derive(Stream::Other(1), p as u64))).collect();
    let normal = Normal::standard();
    Ok((0..cfg.n_reports)
        .map(|i| {
            let mut rng = root.derive(Stream::Corpus, i as u64);
            generate_report(cfg, i, &practices, &priors, &normal, &mut rng)
        })
        .collect())
}

fn generate_report(
    cfg: &GeneratorConfig,
    index: usize,
    practices: &[Practice],
    priors: &[Vec<f64>],
    normal: &Normal,
    rng: &mut Rng,
) -> AnnotatedReport {
    let body = cfg.body_part;
    let b = body_index(body);
    let schema = cfg.schema();
    let table = TemplateTable::for_body(body);
    let practice_id = rng.below(practices.len());
    let style = &practices[practice_id];
    let ocr = rng.bernoulli(cfg.ocr_noise_rate);
    let damage = |s: &str, rng: &mut Rng| if ocr { ocr_damage(s, rng, 0.04) } else { s.to_string() };
    let mut out = Builder { text: String::new(), spans: Vec::new(), provenance: Vec::new() };

    let exam = EXAM[b][style.header];
    let history = *rng.choose(HISTORY[b]);
    let technique = *rng.choose(TECHNIQUE);
    for line in [exam, history, technique] {
        let line = damage(line, rng);
        out.push(&line);
        out.push("\n");
    }
    out.push(if style.upper { "FINDINGS:\n" } else { "Findings:\n" });
    let mut general: Vec<&str> = GENERAL[b].to_vec();
    rng.shuffle(&mut general);
    let n_general = 1 + rng.below(3);
    let general = damage(&general[..n_general].join(" "), rng);
    out.push(&general);
    out.push("\n");

    let mut gold = BTreeMap::new();
    if rng.bernoulli(cfg.no_level_rate) {
        let line = damage(&format!("{} {}", rng.choose(NO_LEVEL), "No definite abnormality."), rng);
        out.push(&line);
        out.push("\nIMPRESSION:\n1) Nondiagnostic examination.\n");
        return finish(cfg, index, practice_id, ocr, out, gold);
    }

    let mut segments: Vec<MotionSegment> =
        body.segments().iter().copied().filter(|_| rng.bernoulli(0.8)).collect();
    if segments.is_empty() {
        segments.push(*rng.choose(body.segments()));
    }
    let render = |seg: MotionSegment, rng: &mut Rng| {
        if ocr && rng.bernoulli(0.5) {
            let kind = *rng.choose(&[
                OcrMention::Collapsed,
                OcrMention::Doubled,
                OcrMention::Underscore,
                OcrMention::AtSign,
                OcrMention::DroppedLevel,
            ]);
            render_ocr_mention(seg, kind)
        } else {
            render_mention(seg, style.format)
        }
    };
    let case = |s: &str| if style.upper { s.to_uppercase() } else { s.to_string() };

    for (k, &seg) in segments.iter().enumerate() {
        let classes = draw_classes(rng, priors, cfg.task_correlation, normal);
        gold.insert(seg, schema.tasks.iter().zip(&classes).map(|(t, &c)| (t.name.clone(), c)).collect());

        let mut sentences: Vec<TemplateId> = if classes.iter().all(|&c| c == 0) && rng.bernoulli(style.normal_rate) {
            vec![*rng.choose(&table.normal)]
        } else {
            schema
                .tasks
                .iter()
                .zip(&classes)
                .map(|(t, &c)| *rng.choose(table.bank(&t.name, c)))
                .collect()
        };
        rng.shuffle(&mut sentences);
        let neutral = rng.bernoulli(0.3).then(|| *rng.choose(NEUTRAL_FINDINGS));

        if style.numbered {
            out.push(&format!("{}) ", k + 1));
        }
        let mention = render(seg, rng);
        let first = case(table.get(sentences[0]).text);
        match style.prefix {
            Prefix::Colon => {
                out.mention(seg, &mention);
                out.push(": ");
                out.finding(seg, sentences[0], &first);
            }
            Prefix::LevelColon => {
                out.push(&case("Level "));
                out.mention(seg, &mention);
                out.push(": ");
                out.finding(seg, sentences[0], &first);
            }
            Prefix::AtComma => {
                out.push(&case("At "));
                out.mention(seg, &mention);
                out.push(", ");
                out.finding(seg, sentences[0], &if style.upper { first } else { lower_first(&first) });
            }
            Prefix::AtTheLevel => {
                out.push(&case("At the "));
                out.mention(seg, &mention);
                out.push(&case(" level, "));
                out.finding(seg, sentences[0], &if style.upper { first } else { lower_first(&first) });
            }
        }
        for &id in &sentences[1..] {
            out.push(" ");
            out.finding(seg, id, &case(table.get(id).text));
        }
        if let Some(n) = neutral {
            out.push(" ");
            out.push(&case(n));
        }
        out.push(if style.line_per_segment || k + 1 == segments.len() { "\n" } else { " " });
    }

    if segments.len() >= 2 && rng.bernoulli(0.3) {
        let i = rng.below(segments.len() - 1);
        let template = *rng.choose(MULTI_SEGMENT);
        let (head, rest) = template.split_once("{M}").expect("template has {M}");
        let (mid, tail) = rest.split_once("{N}").expect("template has {N}");
        out.push(&case(head));
        let m = render(segments[i], rng);
        out.mention(segments[i], &m);
        out.push(&case(mid));
        let n = render(segments[i + 1], rng);
        out.mention(segments[i + 1], &n);
        out.push(&case(tail));
        out.push("\n");
    }

    out.push("IMPRESSION:\n");
    let mut item = 0;
    for &seg in &segments {
        let g = &gold[&seg];
        let (task, class) = if g["disc"] > g["stenosis"] { ("disc", g["disc"]) } else { ("stenosis", g["stenosis"]) };
        if class == 0 || !rng.bernoulli(0.7) {
            continue;
        }
        item += 1;
        let id = *rng.choose(table.impression(task, class));
        let text = table.get(id).text;
        let (head, tail) = text.split_once("{M}").expect("impression has {M}");
        out.push(&format!("{item}) "));
        let start = out.text.len();
        out.push(&case(head));
        let m = render(seg, rng);
        out.mention(seg, &m);
        out.push(&case(tail));
        out.provenance.push(TemplateUse { segment: seg, template: id, start, end: out.text.len() });
        out.push("\n");
    }
    if item == 0 {
        out.push("1) ");
        out.push(&case(rng.choose(QUIET_IMPRESSION)));
        out.push("\n");
    }
    if rng.bernoulli(0.4) {
        let closing = damage(rng.choose(CLOSING), rng);
        out.push(&closing);
        out.push("\n");
    }
    finish(cfg, index, practice_id, ocr, out, gold)
}

fn finish(
    cfg: &GeneratorConfig,
    index: usize,
    practice: usize,
    ocr: bool,
    out: Builder,
    segments: BTreeMap<MotionSegment, BTreeMap<String, usize>>,
) -> AnnotatedReport {
    AnnotatedReport {
        id: format!("{}-{index:05}", cfg.body_part.as_str()),
        practice,
        body_part: cfg.body_part,
        text: out.text,
        segments,
        spans: out.spans,
        ocr,
        provenance: out.provenance,
    }
}

pub fn write_corpus(path: &Path, reports: &[AnnotatedReport]) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    for r in reports {
        serde_json::to_writer(&mut w, r)?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_corpus(path: &Path) -> Result<Vec<AnnotatedReport>> {
    let reader = BufReader::new(File::open(path)?);
    let mut out = Vec::new();
    for (n, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let report: AnnotatedReport = serde_json::from_str(&line)
            .map_err(|e| Error::Format(format!("{}:{}: {e}", path.display(), n + 1)))?;
        if let Some(s) = report.spans.iter().find(|s| s.end > report.text.len() || s.start >= s.end) {
            return Err(Error::Format(format!("{}:{}: span {}..{} outside the text", path.display(), n + 1, s.start, s.end)));
        }
        out.push(report);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pipeline::normalize_segment_mention;

    fn small(body: BodyPart, n: usize) -> Vec<AnnotatedReport> {
        generate_corpus(&GeneratorConfig { n_reports: n, seed: 5, ..GeneratorConfig::new(body) }).unwrap()
    }

    #[test]
    fn deterministic() {
        let a = small(BodyPart::Lumbar, 50);
        let b = small(BodyPart::Lumbar, 50);
        let ja: Vec<String> = a.iter().map(|r| serde_json::to_string(r).unwrap()).collect();
        let jb: Vec<String> = b.iter().map(|r| serde_json::to_string(r).unwrap()).collect();
        assert_eq!(ja, jb);
    }

    #[test]
    fn cervical_gold_covers_four_tasks() {
        for r in small(BodyPart::Cervical, 100) {
            assert!(r.segments.len() <= 6);
            for g in r.segments.values() {
                assert_eq!(g.len(), 4);
            }
        }
    }

    #[test]
    fn spans_name_their_segment() {
        for r in small(BodyPart::Lumbar, 200).iter().chain(&small(BodyPart::Cervical, 200)) {
            for s in &r.spans {
                assert_eq!(normalize_segment_mention(&r.text[s.start..s.end]), Some(s.segment), "{:?}", &r.text[s.start..s.end]);
                assert!(r.segments.contains_key(&s.segment));
            }
        }
    }

    #[test]
    fn bad_priors_name_the_field() {
        let mut cfg = GeneratorConfig::default();
        cfg.class_priors = default_priors(BodyPart::Lumbar);
        cfg.class_priors.insert("disc".into(), vec![0.5, 0.5, 0.5]);
        let err = cfg.validate().unwrap_err().to_string();
        assert!(err.contains("generator.class_priors.disc"), "{err}");
        cfg.class_priors.insert("disc".into(), vec![0.5, 0.5]);
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn jsonl_round_trip() {
        let reports = small(BodyPart::Lumbar, 20);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.jsonl");
        write_corpus(&path, &reports).unwrap();
        let back = read_corpus(&path).unwrap();
        assert_eq!(back.len(), 20);
        for (a, b) in reports.iter().zip(&back) {
            assert_eq!((&a.id, &a.text, &a.segments, &a.spans), (&b.id, &b.text, &b.segments, &b.spans));
        }
    }
}
