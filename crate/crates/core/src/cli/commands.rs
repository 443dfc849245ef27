use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Child, Command as Process};

use serde::Serialize;

use super::artifacts::RunDir;
use super::config::RunConfig;
use super::workflow::{
    compare_latency, compare_representations, compare_snapshots, run_trial, score_table, score_table_csv, Prepared,
    ScoreRow, TrainMode, TrialResult,
};
use super::{AnalyzeCommand, CkaArgs, Cli, Command, GenerateArgs, GradsArgs, OutputFormat, PipelineArgs, ReportArgs, TrainArgs};
use crate::analysis::{to_csv, AlignmentReport, BoxSeries, CkaReport};
use crate::corpus::{classifier_examples, encode_tokens, generate_corpus, read_corpus, split_reports, write_corpus, AnnotatedReport, GeneratorConfig, Vocab};
use crate::error::{Error, Result};
use crate::model::{read_gradient_set, Checkpoint, ParameterStore, TokenBatch};
use crate::pipeline::{run_batch, summarize, PipelineModels};
use crate::train::{write_history_jsonl, EpochGradientSnapshot};

pub const CORPUS_FILE: &str = "corpus.jsonl";
pub const TRAIN_IDS: &str = "train_ids.txt";
pub const TEST_IDS: &str = "test_ids.txt";

struct Context {
    cfg: RunConfig,
    config_path: Option<PathBuf>,
    force: bool,
}

impl Context {
    fn inputs<'a>(&'a self, extra: &[&'a Path]) -> Vec<&'a Path> {
        self.config_path.as_deref().into_iter().chain(extra.iter().copied()).collect()
    }
}

pub(super) fn dispatch(cli: Cli) -> Result<()> {
    let cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    let ctx = Context { cfg: cfg.with_seed(cli.seed.unwrap_or(0)), config_path: cli.config, force: cli.force };
    match cli.command {
        Command::Generate(a) => generate(ctx, a),
        Command::Train(a) => train(ctx, a),
        Command::Analyze(AnalyzeCommand::Cka(a)) => analyze_cka(ctx, a),
        Command::Analyze(AnalyzeCommand::Grads(a)) => analyze_grads(ctx, a),
        Command::Pipeline(a) => pipeline(ctx, a),
        Command::Report(a) => report(ctx, a),
    }
}

fn out_dir(flag: Option<PathBuf>, cfg: &RunConfig, fallback: &str) -> PathBuf {
    flag.or_else(|| cfg.paths.out.clone()).unwrap_or_else(|| PathBuf::from(fallback))
}

fn ids_text(reports: &[AnnotatedReport]) -> String {
    reports.iter().map(|r| format!("{}\n", r.id)).collect()
}

fn generate(mut ctx: Context, args: GenerateArgs) -> Result<()> {
    if let Some(b) = args.body_part {
        ctx.cfg.generator.body_part = b;
    }
    if let Some(n) = args.n {
        ctx.cfg.generator.n_reports = n;
    }
    ctx.cfg.validate()?;
    let run = RunDir::create(&out_dir(args.out, &ctx.cfg, "corpus"), ctx.force)?;
    let reports = generate_corpus(&ctx.cfg.generator)?;
    let (train, test) = split_reports(&reports, ctx.cfg.train.test_fraction, ctx.cfg.generator.seed)?;
    write_corpus(&run.path(CORPUS_FILE), &reports)?;
    run.write(TRAIN_IDS, ids_text(&train))?;
    run.write(TEST_IDS, ids_text(&test))?;
    run.finish("generate", &ctx.cfg, &ctx.inputs(&[]))?;
    log::info!("{} reports ({} train, {} test) in {}", reports.len(), train.len(), test.len(), run.root().display());
    Ok(())
}

fn read_ids(path: &Path) -> Result<Vec<String>> {
    Ok(fs::read_to_string(path)?.lines().map(str::trim).filter(|l| !l.is_empty()).map(String::from).collect())
}

/// Reports of a corpus directory (with its split files) or a bare JSONL
/// file. Returns the train and test reports and the files read.
fn load_split(path: &Path, cfg: &RunConfig) -> Result<(Vec<AnnotatedReport>, Vec<AnnotatedReport>, Vec<PathBuf>)> {
    if path.is_dir() {
        let files = [path.join(CORPUS_FILE), path.join(TRAIN_IDS), path.join(TEST_IDS)];
        let reports = read_corpus(&files[0])?;
        let mut by_id: BTreeMap<String, AnnotatedReport> = reports.into_iter().map(|r| (r.id.clone(), r)).collect();
        let mut take = |ids: Vec<String>| {
            ids.into_iter()
                .map(|id| by_id.remove(&id).ok_or_else(|| Error::Format(format!("split lists unknown or repeated report {id}"))))
                .collect::<Result<Vec<_>>>()
        };
        let train = take(read_ids(&files[1])?)?;
        let test = take(read_ids(&files[2])?)?;
        Ok((train, test, files.to_vec()))
    } else {
        let reports = read_corpus(path)?;
        let (train, test) = split_reports(&reports, cfg.train.test_fraction, cfg.generator.seed)?;
        Ok((train, test, vec![path.to_path_buf()]))
    }
}

fn corpus_path(flag: Option<PathBuf>, cfg: &RunConfig) -> Result<PathBuf> {
    flag.or_else(|| cfg.paths.corpus.clone())
        .ok_or_else(|| Error::Config("no corpus given (--corpus or paths.corpus)".into()))
}

#[derive(Serialize)]
struct TrialScores<'a> {
    mode: String,
    seed: u64,
    best_epoch: usize,
    test_scores: &'a BTreeMap<String, f64>,
}

fn save_trial(run: &RunDir, dir: &str, result: &TrialResult, vocab: &Vocab) -> Result<()> {
    run.dir(dir)?;
    Checkpoint { params: result.outcome.params.clone(), vocab: vocab.tokens().to_vec() }
        .save(&run.path(&format!("{dir}/model.ckpt.json")))?;
    write_history_jsonl(&run.path(&format!("{dir}/history.jsonl")), &result.outcome.history)?;
    let grads = run.dir(&format!("{dir}/grads"))?;
    for s in &result.outcome.snapshots {
        s.write(&grads)?;
    }
    run.write_json(
        &format!("{dir}/scores.json"),
        &TrialScores {
            mode: result.mode.to_string(),
            seed: result.seed,
            best_epoch: result.outcome.best_epoch,
            test_scores: &result.test_scores,
        },
    )?;
    Ok(())
}

fn trial_dir(k: usize) -> String {
    format!("trial{k}")
}

fn spawn_worker(ctx: &Context, args: &TrainArgs, corpus: &Path, out: &Path, k: usize) -> Result<Child> {
    let exe = std::env::current_exe()?;
    let mut cmd = Process::new(exe);
    cmd.arg("train")
        .arg("--corpus")
        .arg(corpus)
        .arg("--mode")
        .arg(&args.mode)
        .arg("--out")
        .arg(out)
        .arg("--trial")
        .arg(k.to_string())
        .arg("--seed")
        .arg(ctx.cfg.generator.seed.to_string())
        .arg("--config")
        .arg(out.join(super::RESOLVED_CONFIG));
    Ok(cmd.spawn()?)
}

fn train(mut ctx: Context, args: TrainArgs) -> Result<()> {
    if let Some(t) = args.trials {
        ctx.cfg.train.trials = t;
    }
    ctx.cfg.validate()?;
    let mode: TrainMode = args.mode.parse()?;
    let corpus = corpus_path(args.corpus.clone(), &ctx.cfg)?;
    let (train_reports, test_reports, files) = load_split(&corpus, &ctx.cfg)?;
    let prep = Prepared::new(train_reports, test_reports, &ctx.cfg)?;
    prep.model_config(&ctx.cfg, &mode)?;
    let seed = ctx.cfg.generator.seed;
    let out = out_dir(args.out.clone(), &ctx.cfg, "runs/train");

    if let Some(k) = args.trial {
        let run = RunDir::open(&out)?;
        let result = run_trial(&prep, &ctx.cfg, &mode, seed + k as u64)?;
        return save_trial(&run, &trial_dir(k), &result, &prep.vocab);
    }

    let run = RunDir::create(&out, ctx.force)?;
    let trials = ctx.cfg.train.trials;
    if args.jobs > 1 && trials > 1 {
        run.write(super::RESOLVED_CONFIG, ctx.cfg.to_json()?)?;
        let mut pending: Vec<usize> = (0..trials).rev().collect();
        let mut running: Vec<(usize, Child)> = Vec::new();
        while !pending.is_empty() || !running.is_empty() {
            while running.len() < args.jobs {
                let Some(k) = pending.pop() else { break };
                running.push((k, spawn_worker(&ctx, &args, &corpus, run.root(), k)?));
            }
            let (k, mut child) = running.remove(0);
            let status = child.wait()?;
            if !status.success() {
                for (_, c) in &mut running {
                    let _ = c.kill();
                }
                return Err(Error::Input(format!("trial {k} worker failed ({status})")));
            }
        }
    } else {
        for k in 0..trials {
            log::info!("{mode} trial {k}");
            let result = run_trial(&prep, &ctx.cfg, &mode, seed + k as u64)?;
            save_trial(&run, &trial_dir(k), &result, &prep.vocab)?;
        }
    }

    let mut per_trial = Vec::with_capacity(trials);
    for k in 0..trials {
        let v: serde_json::Value = serde_json::from_slice(&fs::read(run.path(&format!("{}/scores.json", trial_dir(k))))?)?;
        per_trial.push(serde_json::from_value::<BTreeMap<String, f64>>(v["test_scores"].clone())?);
    }
    let table = score_table(&per_trial);
    run.write_json("f1_table.json", &table)?;
    run.write("f1_table.csv", score_table_csv(&table))?;
    let inputs: Vec<&Path> = files.iter().map(PathBuf::as_path).collect();
    run.finish("train", &ctx.cfg, &ctx.inputs(&inputs))?;
    for row in &table {
        println!("{:<10} {:.4} ± {:.4}", row.task, row.mean, row.sd);
    }
    Ok(())
}

fn load_checkpoint(path: &Path) -> Result<Checkpoint> {
    Checkpoint::load(path).map_err(|e| match e {
        Error::Io(io) => Error::Input(format!("{}: {io}", path.display())),
        other => other,
    })
}

fn vocab_of(ckpt: &Checkpoint) -> Result<Vocab> {
    Vocab::from_tokens(ckpt.vocab.clone())
}

fn cka_series(report: &CkaReport, prefix: &str) -> Result<Vec<BoxSeries>> {
    report
        .layers
        .iter()
        .map(|l| BoxSeries::new(format!("{prefix}layer{}", l.layer), l.values.iter().map(|(_, v)| *v).collect()))
        .collect()
}

fn analyze_cka(ctx: Context, args: CkaArgs) -> Result<()> {
    let a = load_checkpoint(&args.a)?;
    let b = load_checkpoint(&args.b)?;
    if a.vocab_hash() != b.vocab_hash() {
        return Err(Error::Config("the two checkpoints use different vocabularies".into()));
    }
    let (_, test, mut files) = load_split(&args.probe, &ctx.cfg)?;
    let vocab = vocab_of(&a)?;
    let max_len = a.params.config().max_seq_len;
    let body = test.first().ok_or_else(|| Error::Input("probe corpus has no test reports".into()))?.body_part;
    let (probe, _) = classifier_examples(&test, &vocab, max_len, &body.schema())?;
    let seqs: Vec<&[u32]> = probe.examples.iter().take(ctx.cfg.analysis.probe_examples).map(|e| e.tokens.as_slice()).collect();
    let report = compare_representations(&a.params, &b.params, &TokenBatch::from_sequences(&seqs), ctx.cfg.analysis.cka_variant)?;

    let run = RunDir::create(&out_dir(args.out, &ctx.cfg, "runs/cka"), ctx.force)?;
    run.write("cka_layers.csv", to_csv(&cka_series(&report, "")?))?;
    run.write_json("cka.json", &serde_json::json!({
        "variant": ctx.cfg.analysis.cka_variant,
        "probe_examples": seqs.len(),
        "medians": report.medians(),
        "layers": report.layers,
    }))?;
    files.extend([args.a.clone(), args.b.clone()]);
    let inputs: Vec<&Path> = files.iter().map(PathBuf::as_path).collect();
    run.finish("analyze cka", &ctx.cfg, &ctx.inputs(&inputs))?;
    for (l, m) in report.medians().iter().enumerate() {
        println!("layer {}: median CKA {m:.4}", l + 1);
    }
    Ok(())
}

/// Epoch snapshots in a trial directory (or its `grads/` directory),
/// ordered by epoch.
pub fn read_snapshots(dir: &Path) -> Result<Vec<EpochGradientSnapshot>> {
    let dir = if dir.join("grads").is_dir() { dir.join("grads") } else { dir.to_path_buf() };
    let mut out = Vec::new();
    for entry in fs::read_dir(&dir)? {
        let path = entry?.path();
        let Some(name) = path.file_name().and_then(|n| n.to_str()) else { continue };
        let Some(stem) = name.strip_prefix("grad_").and_then(|n| n.strip_suffix(".json")) else { continue };
        let Some((task, epoch)) = stem.rsplit_once("_epoch") else { continue };
        let epoch: usize = epoch.parse().map_err(|_| Error::Format(format!("{name}: bad epoch number")))?;
        out.push(EpochGradientSnapshot { epoch, task_name: task.to_string(), gradients: read_gradient_set(&path)? });
    }
    if out.is_empty() {
        return Err(Error::Input(format!("no gradient snapshots in {}", dir.display())));
    }
    out.sort_by_key(|s| s.epoch);
    Ok(out)
}

fn apag_rows(label: &str, series: &[(usize, AlignmentReport)], out: &mut String) {
    for (epoch, r) in series {
        writeln!(out, "{label},{epoch},{:.6},{:.6}", r.apag, r.cosine).unwrap();
    }
}

fn layer_rows(label: &str, series: &[(usize, AlignmentReport)], out: &mut String) {
    for (epoch, r) in series {
        for (layer, (p, c)) in r.layer_proportions.iter().zip(&r.layer_cosines).enumerate() {
            if let (Some(p), Some(c)) = (p, c) {
                writeln!(out, "{label},{epoch},{layer},{p:.6},{c:.6}").unwrap();
            }
        }
    }
}

/// One box per layer over every epoch (and pair) given.
fn layer_boxes(series: &[&[(usize, AlignmentReport)]]) -> Result<Vec<BoxSeries>> {
    let mut by_layer: BTreeMap<usize, Vec<f64>> = BTreeMap::new();
    for s in series {
        for (_, r) in s.iter() {
            for (layer, p) in r.layer_proportions.iter().enumerate() {
                if let Some(p) = p {
                    by_layer.entry(layer).or_default().push(*p);
                }
            }
        }
    }
    by_layer.into_iter().map(|(l, v)| BoxSeries::new(format!("layer{l}"), v)).collect()
}

fn analyze_grads(ctx: Context, args: GradsArgs) -> Result<()> {
    let a = read_snapshots(&args.a)?;
    let b = read_snapshots(&args.b)?;
    let series = compare_snapshots(&a, &b)?;
    let run = RunDir::create(&out_dir(args.out, &ctx.cfg, "runs/grads"), ctx.force)?;
    let mut apag = String::from("pair,epoch,apag,cosine\n");
    let label = format!("{}~{}", a[0].task_name, b[0].task_name);
    apag_rows(&label, &series, &mut apag);
    let mut layers = String::from("pair,epoch,layer,proportion,cosine\n");
    layer_rows(&label, &series, &mut layers);
    run.write("apag.csv", apag)?;
    run.write("layers.csv", layers)?;
    run.write("layers_box.csv", to_csv(&layer_boxes(&[&series])?))?;
    run.write_json("alignment.json", &series)?;
    run.finish("analyze grads", &ctx.cfg, &ctx.inputs(&[]))?;
    for (epoch, r) in &series {
        println!("epoch {epoch}: APAG {:.3}, cosine {:.3}", r.apag, r.cosine);
    }
    Ok(())
}

/// `(id, text)` pairs from a corpus directory, JSONL corpus or plain-text
/// report.
fn pipeline_inputs(path: &Path) -> Result<Vec<(String, String)>> {
    let corpus = if path.is_dir() { path.join(CORPUS_FILE) } else { path.to_path_buf() };
    if corpus.extension().is_some_and(|e| e == "jsonl") {
        return Ok(read_corpus(&corpus)?.into_iter().map(|r| (r.id, r.text)).collect());
    }
    let id = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "report".into());
    Ok(vec![(id, fs::read_to_string(path)?)])
}

fn pipeline(ctx: Context, args: PipelineArgs) -> Result<()> {
    let tagger = load_checkpoint(&args.tagger)?;
    let classifier = load_checkpoint(&args.classifier)?;
    if tagger.vocab_hash() != classifier.vocab_hash() {
        return Err(Error::Config("segmenter and classifier were trained with different vocabularies".into()));
    }
    let vocab = vocab_of(&classifier)?;
    let models = PipelineModels::new(&tagger.params, &classifier.params, &vocab)?;
    let reports = pipeline_inputs(&args.input)?;
    let results = run_batch(&reports, models, args.jobs)?;
    let tasks = classifier.params.config().schema.names();

    let run = RunDir::create(&out_dir(args.out, &ctx.cfg, "runs/pipeline"), ctx.force)?;
    let records: Vec<_> = results.iter().flat_map(|(o, _)| o.records(&tasks)).collect();
    match args.format {
        OutputFormat::Jsonl => {
            let mut s = String::new();
            for r in &records {
                s.push_str(&serde_json::to_string(r)?);
                s.push('\n');
            }
            run.write("predictions.jsonl", s)?;
        }
        OutputFormat::Csv => {
            let mut s = String::from("report_id,segment");
            for t in &tasks {
                write!(s, ",{t},{t}_probability").unwrap();
            }
            s.push('\n');
            for r in &records {
                write!(s, "{},{}", r.report_id, r.segment).unwrap();
                for t in &tasks {
                    let class = r.classes[*t];
                    write!(s, ",{class},{:.6}", r.probabilities[*t][class]).unwrap();
                }
                s.push('\n');
            }
            run.write("predictions.csv", s)?;
        }
    }

    let summary = summarize(&results);
    let mut timing = None;
    if !args.stl.is_empty() {
        let stl: Vec<Checkpoint> = args.stl.iter().map(|p| load_checkpoint(p)).collect::<Result<_>>()?;
        for (p, c) in args.stl.iter().zip(&stl) {
            if c.vocab_hash() != classifier.vocab_hash() {
                return Err(Error::Config(format!("{}: vocabulary differs from the classifier's", p.display())));
            }
        }
        let texts: Vec<&str> = results.iter().flat_map(|(o, _)| o.segmented.buckets.iter().map(|b| b.text.as_str())).collect();
        if texts.is_empty() {
            return Err(Error::Input("no segments found to time".into()));
        }
        let max_len = classifier.params.config().max_seq_len;
        let seqs: Vec<Vec<u32>> = texts.iter().cycle().take(ctx.cfg.analysis.latency_batch).map(|t| encode_tokens(t, &vocab, max_len)).collect();
        let singles: Vec<&ParameterStore> = stl.iter().map(|c| &c.params).collect();
        timing = Some(compare_latency(&classifier.params, &singles, &TokenBatch::from_sequences(&seqs), 20)?);
    }
    run.write_json("summary.json", &serde_json::json!({ "summary": summary, "latency_comparison": timing }))?;
    let mut inputs = vec![args.tagger.as_path(), args.classifier.as_path()];
    if args.input.is_file() {
        inputs.push(&args.input);
    }
    run.finish("pipeline", &ctx.cfg, &ctx.inputs(&inputs))?;
    println!(
        "{} reports, {} segments, {} without segments; latency p50 {:.2} ms, p95 {:.2} ms",
        summary.reports, summary.segments_predicted, summary.no_segments_found, summary.latency_ms_p50, summary.latency_ms_p95
    );
    if let Some(t) = timing {
        println!("one multi-task pass {:.2} ms vs {} single-task passes {:.2} ms ({:.2}x)", t.multi_task_ms, args.stl.len(), t.single_task_ms, t.speedup);
    }
    Ok(())
}

#[derive(Serialize)]
struct ParityRow {
    task: String,
    single_task: ScoreRow,
    multi_task: ScoreRow,
    difference: f64,
}

struct CorpusRun {
    stl: Vec<TrialResult>,
    pairs: Vec<(String, Vec<(usize, AlignmentReport)>, CkaReport)>,
}

/// Trains one single-task model per task at `seed` and compares every pair.
fn single_task_pairs(prep: &Prepared, cfg: &RunConfig, seed: u64) -> Result<CorpusRun> {
    let tasks: Vec<String> = prep.schema().names().into_iter().map(String::from).collect();
    let mut stl = Vec::with_capacity(tasks.len());
    for t in &tasks {
        log::info!("single-task {t}, seed {seed}");
        stl.push(run_trial(prep, cfg, &TrainMode::Single(t.clone()), seed)?);
    }
    let probe = prep.probe_batch(cfg.analysis.probe_examples)?;
    let mut pairs = Vec::new();
    for i in 0..stl.len() {
        for j in i + 1..stl.len() {
            let series = compare_snapshots(&stl[i].outcome.snapshots, &stl[j].outcome.snapshots)?;
            let cka = compare_representations(&stl[i].outcome.params, &stl[j].outcome.params, &probe, cfg.analysis.cka_variant)?;
            pairs.push((format!("{}~{}", tasks[i], tasks[j]), series, cka));
        }
    }
    Ok(CorpusRun { stl, pairs })
}

fn report(ctx: Context, args: ReportArgs) -> Result<()> {
    let cfg = &ctx.cfg;
    cfg.validate()?;
    let run = RunDir::create(&out_dir(args.out, cfg, "runs/report"), ctx.force)?;
    let seed = cfg.generator.seed;
    let reports = generate_corpus(&cfg.generator)?;
    let prep = Prepared::split(&reports, cfg)?;
    let correlated = single_task_pairs(&prep, cfg, seed)?;

    let mut stl_scores: Vec<BTreeMap<String, f64>> = vec![BTreeMap::new(); cfg.train.trials];
    let mut mtl_scores = Vec::with_capacity(cfg.train.trials);
    let mut mtl_params = 0;
    for (k, scores) in stl_scores.iter_mut().enumerate() {
        let trial_seed = seed + k as u64;
        if k == 0 {
            correlated.stl.iter().for_each(|r| scores.extend(r.test_scores.clone()));
        } else {
            for t in prep.schema().names() {
                log::info!("single-task {t}, seed {trial_seed}");
                scores.extend(run_trial(&prep, cfg, &TrainMode::Single(t.to_string()), trial_seed)?.test_scores);
            }
        }
        log::info!("multi-task, seed {trial_seed}");
        let multi = run_trial(&prep, cfg, &TrainMode::Multi, trial_seed)?;
        mtl_params = crate::model::parameter_count(multi.outcome.params.config());
        mtl_scores.push(multi.test_scores);
    }
    let stl_table = score_table(&stl_scores);
    let mtl_table = score_table(&mtl_scores);
    let parity: Vec<ParityRow> = stl_table
        .iter()
        .zip(&mtl_table)
        .map(|(s, m)| ParityRow { task: s.task.clone(), difference: m.mean - s.mean, single_task: s.clone(), multi_task: m.clone() })
        .collect();
    let mut csv = String::from("task,stl_mean,stl_sd,mtl_mean,mtl_sd,difference\n");
    for p in &parity {
        writeln!(csv, "{},{:.6},{:.6},{:.6},{:.6},{:.6}", p.task, p.single_task.mean, p.single_task.sd, p.multi_task.mean, p.multi_task.sd, p.difference).unwrap();
    }
    run.write("f1_parity.csv", csv)?;
    run.write_json("f1_parity.json", &parity)?;

    let control_cfg = RunConfig {
        generator: GeneratorConfig { task_correlation: cfg.analysis.control_task_correlation, ..cfg.generator.clone() },
        ..cfg.clone()
    };
    let control_prep = Prepared::split(&generate_corpus(&control_cfg.generator)?, &control_cfg)?;
    let control = single_task_pairs(&control_prep, &control_cfg, seed)?;

    let mut apag = String::from("corpus,pair,epoch,apag,cosine\n");
    let mut layers = String::from("corpus,pair,epoch,layer,proportion,cosine\n");
    let mut cosine = String::from("corpus,pair,final_epoch,cosine\n");
    let mut cka_boxes = Vec::new();
    for (name, corpus) in [("correlated", &correlated), ("control", &control)] {
        for (pair, series, cka) in &corpus.pairs {
            let label = format!("{name},{pair}");
            apag_rows(&label, series, &mut apag);
            layer_rows(&label, series, &mut layers);
            if let Some((epoch, last)) = series.last() {
                writeln!(cosine, "{label},{epoch},{:.6}", last.cosine).unwrap();
            }
            cka_boxes.extend(cka_series(cka, &format!("{name}/{pair}/"))?);
        }
    }
    run.write("apag_by_epoch.csv", apag)?;
    run.write("layer_alignment.csv", layers)?;
    run.write("grad_cosine.csv", cosine)?;
    run.write("cka_layers_box.csv", to_csv(&cka_boxes))?;
    let series: Vec<&[(usize, AlignmentReport)]> = correlated.pairs.iter().map(|(_, s, _)| s.as_slice()).collect();
    run.write("layer_alignment_box.csv", to_csv(&layer_boxes(&series)?))?;

    log::info!("segmenter, seed {seed}");
    let seg = run_trial(&prep, cfg, &TrainMode::Tagger, seed)?;
    let params_single: usize = correlated.stl.iter().map(|r| crate::model::parameter_count(r.outcome.params.config())).sum();
    run.write_json("summary.json", &serde_json::json!({
        "reports": reports.len(),
        "train_reports": prep.train_reports.len(),
        "test_reports": prep.test_reports.len(),
        "segmenter_test": seg.test_scores,
        "cka_medians": correlated.pairs.iter().map(|(p, _, c)| (p.clone(), c.medians())).collect::<BTreeMap<_, _>>(),
        "control_cka_medians": control.pairs.iter().map(|(p, _, c)| (p.clone(), c.medians())).collect::<BTreeMap<_, _>>(),
        "final_apag": correlated.pairs.iter().map(|(p, s, _)| (p.clone(), s.last().map(|x| x.1.apag))).collect::<BTreeMap<_, _>>(),
        "control_final_apag": control.pairs.iter().map(|(p, s, _)| (p.clone(), s.last().map(|x| x.1.apag))).collect::<BTreeMap<_, _>>(),
        "parameters": { "multi_task": mtl_params, "single_task_total": params_single },
    }))?;
    run.finish("report", cfg, &ctx.inputs(&[]))?;
    for p in &parity {
        println!("{:<10} STL {:.4} ± {:.4}   MTL {:.4} ± {:.4}", p.task, p.single_task.mean, p.single_task.sd, p.multi_task.mean, p.multi_task.sd);
    }
    println!("outputs in {}", run.root().display());
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{init_model, HeadMode, ModelConfig, MultiTaskSchema};
    use crate::numerics::Rng;

    #[test]
    fn snapshots_read_back_in_epoch_order() {
        let tmp = tempfile::tempdir().unwrap();
        let cfg = ModelConfig { vocab_size: 8, max_seq_len: 4, d_model: 4, n_layers: 1, n_heads: 2, d_ff: 4, schema: MultiTaskSchema::new(&[("disc", 3)]), ..Default::default() };
        let groups = crate::model::param_groups(&cfg);
        let n = init_model(&cfg, &Rng::new(0)).unwrap().len();
        for epoch in [2, 1, 10] {
            let flat: Vec<f64> = (0..n).map(|i| (i * epoch) as f64).collect();
            let s = EpochGradientSnapshot { epoch, task_name: "disc".into(), gradients: crate::model::GradientSet::from_flat(&groups, &flat) };
            s.write(tmp.path()).unwrap();
        }
        let back = read_snapshots(tmp.path()).unwrap();
        assert_eq!(back.iter().map(|s| s.epoch).collect::<Vec<_>>(), [1, 2, 10]);
        assert_eq!(back[2].gradients.total_len(), n);
    }

    #[test]
    fn head_mode_guard() {
        let cfg = ModelConfig { vocab_size: 8, max_seq_len: 4, d_model: 4, n_layers: 1, n_heads: 2, d_ff: 4, head_mode: HeadMode::TokenClassifier, schema: MultiTaskSchema::location_tagger(), ..Default::default() };
        let p = init_model(&cfg, &Rng::new(0)).unwrap();
        let vocab = Vocab::from_tokens(crate::corpus::SPECIALS.iter().map(|s| s.to_string()).chain((0..4).map(|i| format!("w{i}"))).collect()).unwrap();
        assert!(PipelineModels::new(&p, &p, &vocab).is_err());
    }
}
