use std::collections::{BTreeMap, HashMap};
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use serde::{Deserialize, Serialize};

use senseloom::annotate::{
    ClusteringMethod, GoldRecord, Project, RecomputeParams, SenseDef, Workspace,
};
use senseloom::corpus::{self, InputFormat, LemmaSpec, MatchConfig, SentenceRecord};
use senseloom::embedstore;
use senseloom::lift::{self, LiftReport, PriorRow, Proportion, SelectedRow};
use senseloom::meta::ArtifactMeta;
use senseloom::numerics::{
    self, KMeansOptions, Linkage, Projection2D, ProjectionExport, ProjectionMethod,
};
use senseloom::wicbuilder::{self, Split, WicPair, WicRecord, WicStats, WordSplit};
use senseloom::wiceval::{self, EvalReport, PairScore, Threshold};
use senseloom::{jsonl, seed};

use crate::config::Config;
use crate::*;

const DEFAULT_SEED: u64 = 42;
const DEFAULT_SAMPLE_SIZE: usize = 100;
const DEFAULT_SUGGESTIONS: usize = 10;
const DEFAULT_ADDR: &str = "127.0.0.1:8080";

struct Ctx {
    cfg: Config,
    seed: u64,
    data: Option<PathBuf>,
}

impl Ctx {
    fn meta(&self, command: &str) -> ArtifactMeta {
        ArtifactMeta::new(command, self.seed)
    }

    fn workspace(&self) -> Result<Workspace> {
        let root = self.data.clone().ok_or_else(|| {
            anyhow!(
                "no project root: pass --data, set SENSELOOM_DATA or add data = ... to the config"
            )
        })?;
        Ok(Workspace::new(root))
    }
}

pub fn run(cli: Cli) -> Result<()> {
    let cfg = match &cli.config {
        Some(path) => Config::load(path)?,
        None => Config::default(),
    };
    let seed = cfg.pick("seed", cli.seed, DEFAULT_SEED)?;
    let data = cfg.pick_opt::<PathBuf>("data", cli.data.clone())?;
    let ctx = Ctx { cfg, seed, data };
    match cli.command {
        Command::Ingest(a) => ingest(&ctx, a),
        Command::Occurrences(a) => occurrences(&ctx, a),
        Command::Sample(a) => sample(&ctx, a),
        Command::Init(a) => init(&ctx, a),
        Command::ValidateEmbeddings(a) => validate_embeddings(&ctx, a),
        Command::Cluster(a) => cluster(&ctx, a),
        Command::Project(a) => project(&ctx, a),
        Command::Suggest(a) => suggest(&ctx, a),
        Command::Serve(a) => serve(&ctx, a),
        Command::Lift(a) => lift_cmd(&ctx, a),
        Command::ExportGold(a) => export_gold(&ctx, a),
        Command::Wic(WicCommand::Build(a)) => wic_build(&ctx, a),
        Command::Wic(WicCommand::Stats(a)) => wic_stats(a),
        Command::Stats(a) => stats(a),
        Command::Eval(EvalCommand::Mark(a)) => eval_mark(&ctx, a),
        Command::Eval(EvalCommand::Tune(a)) => eval_tune(&ctx, a),
        Command::Eval(EvalCommand::Test(a)) => eval_test(&ctx, a),
    }
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    jsonl::write_atomic(path, text.as_bytes())?;
    Ok(())
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = jsonl::read_utf8(path)?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

fn parse_format(s: &str) -> Result<InputFormat> {
    match s {
        "jsonl" => Ok(InputFormat::Jsonl),
        "lines" | "plain-lines" => Ok(InputFormat::PlainLines),
        other => bail!("unknown input format {other:?} (expected jsonl or lines)"),
    }
}

fn ingest(ctx: &Ctx, a: IngestArgs) -> Result<()> {
    let corpus = corpus::load_sentences(&a.input, parse_format(&a.format)?, a.source.as_deref())?;
    jsonl::write(&a.out, &corpus.sentences)?;
    ctx.meta("ingest")
        .with_input(&a.input)?
        .with_param("format", &a.format)
        .write_beside(&a.out)?;
    println!("{} sentences written to {}", corpus.len(), a.out.display());
    Ok(())
}

/// Lemma specs from JSONL, with each lemma added to its own forms if missing.
fn read_lemmas(path: &Path) -> Result<Vec<LemmaSpec>> {
    let raw: Vec<LemmaSpec> = jsonl::read(path)?;
    raw.into_iter()
        .map(|s| {
            let mut spec = LemmaSpec::new(s.lemma, s.forms, s.lang)?;
            spec.gloss_hints = s.gloss_hints;
            Ok(spec)
        })
        .collect()
}

fn occurrences(ctx: &Ctx, a: OccurrencesArgs) -> Result<()> {
    let corpus = corpus::load_sentences(&a.corpus, InputFormat::Jsonl, None)?;
    let specs = read_lemmas(&a.lemmas)?;
    let defaults = MatchConfig::default();
    let config = MatchConfig {
        min_tokens: ctx
            .cfg
            .pick("min_tokens", a.min_tokens, defaults.min_tokens)?,
        max_tokens: ctx
            .cfg
            .pick("max_tokens", a.max_tokens, defaults.max_tokens)?,
        case_fold: a.case_fold || ctx.cfg.pick("case_fold", None, false)?,
    };
    let mut records = Vec::new();
    for spec in &specs {
        let found = corpus::find_occurrences(&corpus, spec, &config);
        println!("{}\t{}", spec.lemma, found.len());
        records.extend(found);
    }
    corpus::write_records(&a.out, &records)?;
    ctx.meta("occurrences")
        .with_input(&a.corpus)?
        .with_input(&a.lemmas)?
        .with_param("min_tokens", config.min_tokens)
        .with_param("max_tokens", config.max_tokens)
        .with_param("case_fold", config.case_fold)
        .write_beside(&a.out)?;
    Ok(())
}

fn by_lemma(records: Vec<SentenceRecord>) -> BTreeMap<String, Vec<SentenceRecord>> {
    let mut out: BTreeMap<String, Vec<SentenceRecord>> = BTreeMap::new();
    for r in records {
        out.entry(r.lemma.clone()).or_default().push(r);
    }
    out
}

fn sample(ctx: &Ctx, a: SampleArgs) -> Result<()> {
    let n = ctx.cfg.pick("sample_size", a.n, DEFAULT_SAMPLE_SIZE)?;
    let mut out = Vec::new();
    for (lemma, records) in by_lemma(corpus::read_records(&a.input)?) {
        let picked = corpus::sample_candidates(&records, n, seed::derive(ctx.seed, &lemma))?;
        println!("{lemma}\t{} of {}", picked.len(), records.len());
        out.extend(picked);
    }
    corpus::write_records(&a.out, &out)?;
    ctx.meta("sample")
        .with_input(&a.input)?
        .with_param("n", n)
        .write_beside(&a.out)?;
    Ok(())
}

fn init(ctx: &Ctx, a: InitArgs) -> Result<()> {
    let lemmas = read_lemmas(&a.lemmas)?;
    let sentences = corpus::read_records(&a.sentences)?;
    let sense_inventory: BTreeMap<String, Vec<SenseDef>> = match &a.senses {
        Some(p) => read_json(p)?,
        None => BTreeMap::new(),
    };
    let project = Project {
        id: a.project.clone(),
        lang: a.lang,
        lemmas,
        sense_inventory,
    };
    let handle = ctx.workspace()?.create_project(project, sentences)?;
    println!(
        "created project {} with {} sentences at {}",
        a.project,
        handle.store().sentence_count(),
        handle.dir().display()
    );
    Ok(())
}

fn validate_embeddings(ctx: &Ctx, a: ValidateArgs) -> Result<()> {
    let m = embedstore::read_embeddings(&a.embeddings)?;
    let lemma = m.lemma().to_string();
    let in_matrix: std::collections::HashSet<&str> = m.ids().iter().map(String::as_str).collect();
    let relevant = |r: &SentenceRecord| r.lemma == lemma || in_matrix.contains(r.id.as_str());

    let mut handle = None;
    let records: Vec<SentenceRecord> = if let Some(path) = &a.sentences {
        corpus::read_records(path)?
            .into_iter()
            .filter(|r| relevant(r))
            .collect()
    } else if let Some(p) = &a.project {
        let h = ctx.workspace()?.open(p)?;
        let recs = h.store().sentences_for(&lemma).cloned().collect();
        handle = Some(h);
        recs
    } else {
        Vec::new()
    };
    if a.sentences.is_some() || a.project.is_some() {
        embedstore::validate_alignment(&m, &records)?;
    }
    println!(
        "ok: {} rows x {} dims for {:?} (model {:?})",
        m.n(),
        m.dim(),
        lemma,
        m.model_id()
    );
    if a.install {
        let h = handle.expect("install requires a project");
        let dest = h.embedding_path(&lemma);
        if let Some(parent) = dest.parent() {
            std::fs::create_dir_all(parent)
                .with_context(|| format!("creating {}", parent.display()))?;
        }
        embedstore::write_embeddings(&m, &dest)?;
        println!("installed to {}", dest.display());
    }
    Ok(())
}

#[derive(Serialize)]
struct ClusterOutput {
    lemma: String,
    method: ClusteringMethod,
    k: usize,
    ids: Vec<String>,
    labels: Vec<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    inertia: Option<f64>,
}

fn cluster(ctx: &Ctx, a: ClusterArgs) -> Result<()> {
    let m = embedstore::read_embeddings(&a.embeddings)?;
    let k = ctx.cfg.pick("k", a.k, 2)?;
    let method: ClusteringMethod = ctx.cfg.pick(
        "clustering",
        a.method
            .as_deref()
            .map(str::parse)
            .transpose()
            .map_err(|e: String| anyhow!(e))?,
        ClusteringMethod::Kmeans,
    )?;
    let restarts = ctx
        .cfg
        .pick("restarts", a.restarts, numerics::DEFAULT_RESTARTS)?;
    let (labels, inertia) = match method {
        ClusteringMethod::Kmeans => {
            let r = numerics::kmeans_best_of(
                &m,
                k,
                ctx.seed,
                restarts.max(1),
                KMeansOptions::default(),
            )?;
            (r.labels, Some(r.inertia))
        }
        ClusteringMethod::Agglomerative => (
            numerics::agglomerative(
                &numerics::pairwise_cosine_distance(&m)?,
                k,
                Linkage::Average,
            )?,
            None,
        ),
    };
    println!("{}: cluster sizes {:?}", m.lemma(), labels.sizes());
    write_json(
        &a.out,
        &ClusterOutput {
            lemma: m.lemma().to_string(),
            method,
            k,
            ids: m.ids().to_vec(),
            labels: labels.labels,
            inertia,
        },
    )?;
    ctx.meta("cluster")
        .with_input(&a.embeddings)?
        .with_param("k", k)
        .with_param("method", format!("{method:?}").to_lowercase())
        .with_param("restarts", restarts)
        .write_beside(&a.out)?;
    Ok(())
}

fn recompute_params(ctx: &Ctx, a: &ProjectArgs) -> Result<RecomputeParams> {
    let method = ctx.cfg.pick(
        "method",
        a.method
            .as_deref()
            .map(str::parse::<ProjectionMethod>)
            .transpose()
            .map_err(|e| anyhow!("{e}"))?,
        ProjectionMethod::Mds,
    )?;
    let clustering = ctx.cfg.pick(
        "clustering",
        a.clustering
            .as_deref()
            .map(str::parse)
            .transpose()
            .map_err(|e: String| anyhow!(e))?,
        ClusteringMethod::Kmeans,
    )?;
    Ok(RecomputeParams {
        k: ctx.cfg.pick_opt("k", a.k)?,
        method,
        clustering,
        seed: ctx.seed,
    })
}

fn project(ctx: &Ctx, a: ProjectArgs) -> Result<()> {
    let params = recompute_params(ctx, &a)?;
    if let Some(p) = &a.project {
        let lemma = a
            .lemma
            .as_deref()
            .expect("clap requires --lemma with --project");
        let mut handle = ctx.workspace()?.open(p)?;
        let export = handle.recompute(lemma, &params)?;
        let out = handle.projection_path(lemma);
        ctx.meta("project")
            .with_input(&handle.embedding_path(lemma))?
            .with_param("method", params.method)
            .write_beside(&out)?;
        println!("{} points written to {}", export.ids.len(), out.display());
        return Ok(());
    }
    let (Some(input), Some(out)) = (&a.embeddings, &a.out) else {
        bail!("--embeddings and --out are required without --project");
    };
    let m = embedstore::read_embeddings(input)?;
    let export = senseloom::annotate::compute_projection(&m, params.k.unwrap_or(2), &params)?;
    write_json(out, &export)?;
    ctx.meta("project")
        .with_input(input)?
        .with_param("method", params.method)
        .with_param("k", params.k.unwrap_or(2))
        .write_beside(out)?;
    println!("{} points written to {}", export.ids.len(), out.display());
    Ok(())
}

#[derive(Serialize)]
struct Suggestions {
    lemma: String,
    indices: Vec<usize>,
    ids: Vec<String>,
}

fn suggest(ctx: &Ctx, a: SuggestArgs) -> Result<()> {
    let export: ProjectionExport = read_json(&a.projection)?;
    let m = ctx.cfg.pick("selection_size", a.m, DEFAULT_SUGGESTIONS)?;
    let p = Projection2D {
        method: export.method,
        points: export.points.clone(),
    };
    let indices = numerics::suggest_dispersed(&p, m, ctx.seed)?;
    let ids: Vec<String> = indices.iter().map(|&i| export.ids[i].clone()).collect();
    for id in &ids {
        println!("{id}");
    }
    if let Some(out) = &a.out {
        write_json(
            out,
            &Suggestions {
                lemma: export.lemma.clone(),
                indices,
                ids,
            },
        )?;
        ctx.meta("suggest")
            .with_input(&a.projection)?
            .with_param("m", m)
            .write_beside(out)?;
    }
    Ok(())
}

fn serve(ctx: &Ctx, a: ServeArgs) -> Result<()> {
    let addr: String = ctx.cfg.pick("addr", a.addr, DEFAULT_ADDR.to_string())?;
    let addr: std::net::SocketAddr = addr
        .parse()
        .with_context(|| format!("invalid address {addr:?}"))?;
    let workspace = ctx.workspace()?;
    eprintln!(
        "serving {} on http://{addr}/api",
        workspace.root().display()
    );
    let runtime = tokio::runtime::Runtime::new()?;
    runtime.block_on(senseloom_server::serve(addr, workspace))?;
    Ok(())
}

#[derive(Serialize)]
struct DirectLift {
    prior: Proportion,
    precision: Proportion,
    lift: Option<f64>,
    lift_display: String,
    effort: Option<lift::Effort>,
    #[serde(skip_serializing_if = "Option::is_none")]
    seconds_per_hit: Option<(f64, f64)>,
}

fn lift_cmd(ctx: &Ctx, a: LiftArgs) -> Result<()> {
    let seconds = ctx
        .cfg
        .pick_opt("seconds_per_sentence", a.seconds_per_sentence)?;
    if let (Some(prior), Some(precision)) = (&a.prior, &a.precision) {
        let prior = Proportion::from_decimal(prior)?;
        let precision = Proportion::from_decimal(precision)?;
        let value = lift::lift(precision, prior)?;
        println!("prior      {}", prior.value());
        println!("precision  {}", precision.value());
        println!("lift       {}", value.render_percent());
        let effort = lift::effort_reduction(prior, precision).ok();
        if let Some(e) = &effort {
            println!("{}", e.headline());
            println!(
                "exact: {:.2} manual, {:.2} assisted, {:.2}x",
                e.manual_reviews, e.assisted_reviews, e.reduction_factor
            );
            if let Some(s) = seconds {
                println!(
                    "time per hit: {:.0}s manual, {:.0}s assisted",
                    e.manual_reviews * s,
                    e.assisted_reviews * s
                );
            }
        }
        if let Some(out) = &a.out {
            let report = DirectLift {
                prior,
                precision,
                lift: matches!(value, lift::LiftValue::Finite(_)).then(|| value.as_f64()),
                lift_display: value.render_percent(),
                seconds_per_hit: effort
                    .zip(seconds)
                    .map(|(e, s)| (e.manual_reviews * s, e.assisted_reviews * s)),
                effort,
            };
            write_json(out, &report)?;
            ctx.meta("lift").write_beside(out)?;
        }
        return Ok(());
    }

    let (Some(prior_path), Some(selected_path)) = (&a.prior_sample, &a.selected) else {
        bail!("pass --prior-sample and --selected, or --prior and --precision");
    };
    let priors: Vec<PriorRow> = jsonl::read(prior_path)?;
    let mut selected: Vec<SelectedRow> = jsonl::read(selected_path)?;
    if let Some(limit) = ctx.cfg.pick_opt("selection_size", a.selection_size)? {
        let mut seen: HashMap<(Option<String>, String), usize> = HashMap::new();
        selected.retain(|r| {
            let c = seen
                .entry((r.lemma.clone(), r.target_sense.clone()))
                .or_insert(0);
            *c += 1;
            *c <= limit
        });
        for ((lemma, sense), count) in &seen {
            if *count < limit {
                eprintln!(
                    "warning: only {count} selected sentences for {}/{sense}, fewer than {limit}",
                    lemma.as_deref().unwrap_or("-")
                );
            }
        }
    }
    let mut glosses = HashMap::new();
    if let Some(path) = &a.senses {
        let inventory: BTreeMap<String, Vec<SenseDef>> = read_json(path)?;
        for (lemma, senses) in inventory {
            for s in senses {
                let text = match &s.gloss_en {
                    Some(en) => format!("{} ({en})", s.gloss),
                    None => s.gloss.clone(),
                };
                glosses.insert((lemma.clone(), s.sense_id.clone()), text);
            }
        }
    }
    let report: LiftReport = lift::build_report(&priors, &selected, &glosses, seconds)?;
    print!("{}", report.render_table());
    if let Some(out) = &a.out {
        write_json(out, &report)?;
        let mut meta = ctx
            .meta("lift")
            .with_input(prior_path)?
            .with_input(selected_path)?;
        if let Some(p) = &a.senses {
            meta = meta.with_input(p)?;
        }
        meta.write_beside(out)?;
    }
    Ok(())
}

fn export_gold(ctx: &Ctx, a: ExportArgs) -> Result<()> {
    let min_per_sense = ctx.cfg.pick("min_per_sense", a.min_per_sense, 30)?;
    let adjudicator = ctx.cfg.pick_opt::<String>("adjudicator", a.adjudicator)?;
    let handle = ctx.workspace()?.open(&a.project)?;
    let rows = handle.export_gold(min_per_sense, adjudicator.as_deref());
    jsonl::write(&a.out, &rows)?;
    let mut meta = ctx
        .meta("export-gold")
        .with_param("project", &a.project)
        .with_param("min_per_sense", min_per_sense)
        .with_param("revision", handle.store().revision());
    if let Some(adj) = &adjudicator {
        meta = meta.with_param("adjudicator", adj);
    }
    if handle.log_path().exists() {
        meta = meta.with_input(&handle.log_path())?;
    }
    meta.write_beside(&a.out)?;
    println!("{} gold records written to {}", rows.len(), a.out.display());
    Ok(())
}

#[derive(Serialize, Deserialize)]
struct WicManifest {
    meta: ArtifactMeta,
    max_per_sentence: usize,
    words: WordSplit,
    excluded: Vec<String>,
    stats: WicStats,
}

fn wic_build(ctx: &Ctx, a: WicBuildArgs) -> Result<()> {
    let max_per_sentence = ctx.cfg.pick(
        "max_per_sentence",
        a.max_per_sentence,
        wicbuilder::DEFAULT_MAX_PER_SENTENCE,
    )?;
    let gold: Vec<GoldRecord> = jsonl::read(&a.gold)?;
    let dataset = wicbuilder::build(&gold, ctx.seed, max_per_sentence)?;
    for lemma in &dataset.sentences.excluded {
        eprintln!("warning: {lemma:?} has a single annotated sense and is left out");
    }
    wicbuilder::write_dataset(&a.out_dir, &dataset, &gold)?;
    let manifest = WicManifest {
        meta: ctx
            .meta("wic build")
            .with_input(&a.gold)?
            .with_param("max_per_sentence", max_per_sentence),
        max_per_sentence,
        words: dataset.words.clone(),
        excluded: dataset.sentences.excluded.clone(),
        stats: dataset.stats.clone(),
    };
    write_json(&a.out_dir.join("manifest.json"), &manifest)?;
    print!("{}", dataset.stats.render());
    Ok(())
}

fn read_split(dir: &Path, split: Split) -> Result<Vec<WicRecord>> {
    Ok(jsonl::read(&dir.join(format!("{split}.jsonl")))?)
}

fn wic_stats(a: WicStatsArgs) -> Result<()> {
    let manifest: WicManifest = read_json(&a.dir.join("manifest.json"))?;
    let mut pairs = Vec::new();
    for split in Split::ALL {
        for r in read_split(&a.dir, split)? {
            pairs.push(WicPair {
                pair_id: r.pair_id,
                lemma: r.lemma,
                sentence_a_id: r.sentence1_id,
                sentence_b_id: r.sentence2_id,
                span_a: r.span1,
                span_b: r.span2,
                label: r.label,
                split,
            });
        }
    }
    let stats = wicbuilder::wic_stats(&pairs, &manifest.words);
    if a.json {
        println!("{}", serde_json::to_string_pretty(&stats)?);
    } else {
        print!("{}", stats.render());
    }
    Ok(())
}

fn stats(a: StatsArgs) -> Result<()> {
    let gold: Vec<GoldRecord> = jsonl::read(&a.gold)?;
    let rows = wicbuilder::dataset_stats(&gold);
    if a.json {
        println!("{}", serde_json::to_string_pretty(&rows)?);
    } else {
        print!("{}", wicbuilder::render_dataset_stats(&rows));
    }
    Ok(())
}

fn eval_mark(ctx: &Ctx, a: MarkArgs) -> Result<()> {
    let records: Vec<WicRecord> = jsonl::read(&a.pairs)?;
    let marked = records
        .iter()
        .map(|r| wiceval::mark_pair(r).with_context(|| format!("pair {:?}", r.pair_id)))
        .collect::<Result<Vec<_>>>()?;
    jsonl::write(&a.out, &marked)?;
    ctx.meta("eval mark")
        .with_input(&a.pairs)?
        .write_beside(&a.out)?;
    println!("{} pairs marked", marked.len());
    Ok(())
}

fn read_scores(paths: &[PathBuf]) -> Result<Vec<PairScore>> {
    let mut out = Vec::new();
    for p in paths {
        out.extend(jsonl::read::<PairScore>(p)?);
    }
    Ok(out)
}

fn scored(records_path: &Path, scores: &[PairScore]) -> Result<Vec<wiceval::ScoredPair>> {
    let records: Vec<WicRecord> = jsonl::read(records_path)?;
    let wanted: std::collections::HashSet<&str> =
        records.iter().map(|r| r.pair_id.as_str()).collect();
    let relevant: Vec<PairScore> = scores
        .iter()
        .filter(|s| wanted.contains(s.pair_id.as_str()))
        .cloned()
        .collect();
    Ok(wiceval::join_scores(&records, &relevant)?)
}

fn eval_tune(ctx: &Ctx, a: TuneArgs) -> Result<()> {
    let scores = read_scores(&a.scores)?;
    let dev = scored(&a.dev, &scores)?;
    let t: Threshold = wiceval::tune_threshold(&dev)?;
    println!("threshold     {}", t.cut);
    println!("dev accuracy  {}", wiceval::percent(t.dev_accuracy));
    if let Some(out) = &a.out {
        write_json(out, &t)?;
        let mut meta = ctx.meta("eval tune").with_input(&a.dev)?;
        for s in &a.scores {
            meta = meta.with_input(s)?;
        }
        meta.write_beside(out)?;
    }
    Ok(())
}

fn eval_test(ctx: &Ctx, a: TestArgs) -> Result<()> {
    let scores = read_scores(&a.scores)?;
    let dev = scored(&a.dev, &scores)?;
    let test = scored(&a.test, &scores)?;
    let report: EvalReport = wiceval::run(&dev, &test)?;
    println!("threshold      {}", report.threshold);
    println!(
        "dev accuracy   {} (n = {})",
        wiceval::percent(report.dev_accuracy),
        report.n_dev
    );
    println!(
        "test accuracy  {} (n = {})",
        wiceval::percent(report.test_accuracy),
        report.n_test
    );
    if let Some(out) = &a.out {
        write_json(out, &report)?;
        let mut meta = ctx
            .meta("eval test")
            .with_input(&a.dev)?
            .with_input(&a.test)?;
        for s in &a.scores {
            meta = meta.with_input(s)?;
        }
        meta.write_beside(out)?;
    }
    Ok(())
}
