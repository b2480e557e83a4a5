//! One function per subcommand. Each resolves its settings (flag, then
//! config section, then default), checks its inputs, runs the stage and
//! records the run in a manifest.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::path::{Path, PathBuf};

use serde::Serialize;
use tkgforge::cluster::{cluster_matrix, distance_matrix, Clustering};
use tkgforge::describe::{
    coverage_check, describe, label_quadruples, DescribeConfig, HttpBackend, HttpConfig, RelationDefinitions,
    Setup, TemplateBackend, TextBackend, TimestampStyle,
};
use tkgforge::generator::{daily_targets, derive_weights, generate_range, GeneratorConfig};
use tkgforge::metrics::{evaluate, read_candidates, EvalReport, ScoredExample};
use tkgforge::rules::{
    evaluate_forecasting, load_rules, mine_rules, save_rules, split_chronological, RuleSet, WalkConfig,
};
use tkgforge::schema::Schema;
use tkgforge::tkg::{
    linearize, load_facts, load_interval_facts, load_labels, prune_rare_entities, read_dataset, resample_matched,
    retime, write_dataset, write_facts, IngestFilter,
};
use tkgforge::{EntityId, Quadruple, TemporalKnowledgeGraph};

use crate::args::*;
use crate::config::{BackendKind, PipelineConfig};
use crate::error::{CliError, Result};
use crate::manifest::{FileRecord, Manifest};

macro_rules! set {
    ($target:expr, $flag:expr) => {
        if let Some(v) = $flag.clone() {
            $target = v;
        }
    };
}

pub struct Context {
    pub config: PipelineConfig,
    pub seed: u64,
    pub run_dir: PathBuf,
    pub manifest: Manifest,
    outputs: Vec<PathBuf>,
}

impl Context {
    pub fn new(command: &str, arguments: Vec<String>, config: PipelineConfig, seed: u64, run_dir: PathBuf) -> Self {
        Self {
            config,
            seed,
            run_dir,
            manifest: Manifest::new(command, arguments, seed),
            outputs: Vec::new(),
        }
    }

    /// Resolves a required input from a flag or the `[paths]` section.
    fn input(&mut self, flag: Option<&PathBuf>, configured: Option<PathBuf>, what: &str) -> Result<PathBuf> {
        let path = flag
            .cloned()
            .or(configured)
            .ok_or_else(|| CliError::Config(format!("no {what} file given (pass --{what} or set paths.{what})")))?;
        self.existing(&path)
    }

    fn existing(&mut self, path: &Path) -> Result<PathBuf> {
        if !path.is_file() {
            return Err(CliError::Data(format!("{}: input file not found", path.display())));
        }
        self.manifest.inputs.push(FileRecord::of(path)?);
        Ok(path.to_owned())
    }

    /// Places an output under the run directory unless it is absolute.
    fn output(&mut self, path: &Path) -> Result<PathBuf> {
        let path = if path.is_absolute() {
            path.to_owned()
        } else {
            self.run_dir.join(path)
        };
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent).map_err(|e| CliError::io(parent, e))?;
        }
        self.outputs.push(path.clone());
        Ok(path)
    }

    fn settings(&mut self, value: impl Serialize) {
        self.manifest.settings = serde_json::to_value(value).expect("settings serialize");
    }

    pub fn finish(mut self) -> Result<PathBuf> {
        for path in &self.outputs {
            self.manifest.outputs.push(FileRecord::of(path)?);
        }
        let path = self.run_dir.join(format!("{}.manifest.json", self.manifest.command));
        self.manifest.write(&path)?;
        Ok(path)
    }
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    let text = serde_json::to_string_pretty(value).expect("output serializes");
    std::fs::write(path, text + "\n").map_err(|e| CliError::io(path, e))
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| CliError::io(path, e))
}

fn facts_graph(path: &Path) -> Result<TemporalKnowledgeGraph> {
    let (graph, report) = load_facts(path)?;
    log::info!("{}: {} facts ({} duplicates dropped)", path.display(), graph.len(), report.duplicates);
    Ok(graph)
}

pub fn run(command: &Command, ctx: &mut Context) -> Result<()> {
    match command {
        Command::Ingest(a) => ingest(a, ctx),
        Command::Mine(a) => mine(a, ctx),
        Command::EvalForecast(a) => eval_forecast(a, ctx),
        Command::Forecast(a) => forecast(a, ctx),
        Command::Cluster(a) => cluster(a, ctx),
        Command::Describe(a) => describe_cmd(a, ctx),
        Command::Evaluate(a) => evaluate_cmd(a, ctx),
        Command::Retime(a) => retime_cmd(a, ctx),
        Command::Resample(a) => resample(a, ctx),
    }
}

fn ingest(a: &IngestArgs, ctx: &mut Context) -> Result<()> {
    let path = ctx.input(a.intervals.as_ref(), ctx.config.paths.intervals.clone(), "intervals")?;
    let mut s = ctx.config.ingest.clone();
    set!(s.exclude, a.exclude);
    set!(s.point_relations, a.point_relations);
    if a.no_prune {
        s.prune = false;
    }
    ctx.settings(&s);

    let facts = load_interval_facts(&path)?;
    let filter = IngestFilter {
        excluded_relations: s.exclude.iter().cloned().collect(),
    };
    let kept: Vec<_> = facts.iter().filter(|f| filter.keeps(&f.relation)).cloned().collect();
    let points: HashSet<String> = s.point_relations.iter().cloned().collect();
    let quads = linearize(&kept, &points)?;
    let (graph, duplicates) = TemporalKnowledgeGraph::from_quadruples(quads);
    let graph = if s.prune { prune_rare_entities(&graph) } else { graph };

    let out = ctx.output(&a.out)?;
    write_facts(&out, &graph.sorted_quadruples())?;
    let m = &mut ctx.manifest;
    m.count("interval_facts", facts.len());
    m.count("excluded", facts.len() - kept.len());
    m.count("duplicates", duplicates);
    m.count("facts", graph.len());
    m.count("entities", graph.entity_count());
    Ok(())
}

fn walk_config(ctx: &Context) -> WalkConfig {
    let s = &ctx.config.mine;
    WalkConfig {
        walks: s.walks,
        lengths: s.lengths.iter().copied().collect(),
        transition: s.transition,
        lambda: s.lambda,
        seed: ctx.seed,
        ordering: s.ordering,
    }
}

fn mine(a: &MineArgs, ctx: &mut Context) -> Result<()> {
    let path = ctx.input(a.facts.as_ref(), ctx.config.paths.facts.clone(), "facts")?;
    let s = &mut ctx.config.mine;
    set!(s.lengths, a.lengths);
    set!(s.walks, a.walks);
    set!(s.transition, a.transition);
    set!(s.lambda, a.lambda);
    set!(s.ordering, a.ordering);
    let walk = walk_config(ctx);
    ctx.settings(&walk);

    let graph = facts_graph(&path)?;
    let rules = mine_rules(&graph, &walk)?;
    let out = ctx.output(&a.out)?;
    save_rules(&out, &rules)?;
    let heads: BTreeSet<_> = rules.iter().map(|r| &r.head).collect();
    ctx.manifest.count("facts", graph.len());
    ctx.manifest.count("rules", rules.len());
    ctx.manifest.count("heads", heads.len());
    Ok(())
}

fn eval_forecast(a: &EvalForecastArgs, ctx: &mut Context) -> Result<()> {
    let path = ctx.input(a.facts.as_ref(), ctx.config.paths.facts.clone(), "facts")?;
    let rules_path = a.rules.as_ref().map(|p| ctx.existing(p)).transpose()?;
    let mut s = ctx.config.eval_forecast.clone();
    set!(s.test_frac, a.test_frac);
    set!(s.k, a.k);
    let mut apply = ctx.config.apply.clone();
    set!(apply.window, a.window);
    let walk = walk_config(ctx);

    #[derive(Serialize)]
    struct Settings<'a> {
        test_frac: f64,
        k: usize,
        apply: &'a tkgforge::rules::ApplyConfig,
        mine: Option<&'a WalkConfig>,
    }
    ctx.settings(Settings {
        test_frac: s.test_frac,
        k: s.k,
        apply: &apply,
        mine: rules_path.is_none().then_some(&walk),
    });

    let graph = facts_graph(&path)?;
    let (train, test) = split_chronological(&graph, s.test_frac)?;
    let rules = match &rules_path {
        Some(p) => load_rules(p)?,
        None => mine_rules(&train, &walk)?,
    };
    let rule_count = rules.len();
    let metrics = evaluate_forecasting(&graph, &RuleSet::new(rules), &test, &apply, s.k)?;

    #[derive(Serialize)]
    struct Report {
        train_facts: usize,
        test_facts: usize,
        rules: usize,
        #[serde(flatten)]
        metrics: tkgforge::rules::ForecastMetrics,
    }
    let report = Report {
        train_facts: train.len(),
        test_facts: test.len(),
        rules: rule_count,
        metrics,
    };
    let out = ctx.output(&a.report)?;
    write_json(&out, &report)?;
    println!("hits@{} = {:.4}  mrr = {:.4}  ({} queries)", metrics.k, metrics.hits_at_k, metrics.mrr, metrics.queries);
    ctx.manifest.count("train_facts", report.train_facts);
    ctx.manifest.count("test_facts", report.test_facts);
    ctx.manifest.count("rules", rule_count);
    Ok(())
}

fn forecast(a: &ForecastArgs, ctx: &mut Context) -> Result<()> {
    let facts_path = ctx.input(a.facts.as_ref(), ctx.config.paths.facts.clone(), "facts")?;
    let rules_path = ctx.input(a.rules.as_ref(), ctx.config.paths.rules.clone(), "rules")?;
    let schema_path = ctx.input(a.schema.as_ref(), ctx.config.paths.schema.clone(), "schema")?;
    let mut s = ctx.config.forecast.clone();
    if a.from.is_some() {
        s.from = a.from;
    }
    if a.to.is_some() {
        s.to = a.to;
    }
    if a.weights_year.is_some() {
        s.weights_year = a.weights_year;
    }
    set!(s.k, a.k);
    set!(s.max_per_day, a.max_per_day);
    set!(s.retries, a.retries);
    set!(s.coherency, a.coherency);
    let mut apply = ctx.config.apply.clone();
    set!(apply.window, a.window);
    let from = s.from.ok_or_else(|| CliError::Config("no start date (pass --from or set forecast.from)".into()))?;
    let to = s.to.ok_or_else(|| CliError::Config("no end date (pass --to or set forecast.to)".into()))?;

    let graph = facts_graph(&facts_path)?;
    let year = match s.weights_year {
        Some(y) => y,
        None => graph
            .time_range()
            .map(|(_, last)| last.year())
            .ok_or_else(|| CliError::Data(format!("{}: no facts", facts_path.display())))?,
    };
    s.weights_year = Some(year);
    let config = GeneratorConfig {
        k: s.k,
        max_per_day: s.max_per_day,
        retries: s.retries,
        coherency: s.coherency,
        seed: ctx.seed,
        apply,
    };
    ctx.settings(serde_json::json!({ "forecast": &s, "generator": &config }));

    let rules = RuleSet::new(load_rules(&rules_path)?);
    let schema = Schema::load(&schema_path)?;
    let weights = derive_weights(&graph, year)?;
    let targets = daily_targets(&graph, year, from, to, s.max_per_day)?;
    let generation = generate_range(&graph, &rules, &schema, &weights, &targets, from, to, &config)?;

    let out = ctx.output(&a.out)?;
    write_facts(&out, &generation.facts)?;
    let sidecar = match &a.diagnostics {
        Some(p) => p.clone(),
        None => {
            let mut name = a.out.clone().into_os_string();
            name.push(".diagnostics.json");
            PathBuf::from(name)
        }
    };
    let sidecar = ctx.output(&sidecar)?;
    write_json(&sidecar, &generation.diagnostics)?;

    let exhausted = generation.diagnostics.days.iter().filter(|d| d.exhausted.is_some()).count();
    if exhausted > 0 {
        log::warn!("{exhausted} days stopped short of their target; see {}", sidecar.display());
    }
    ctx.manifest.count("generated", generation.facts.len());
    ctx.manifest.count("target", targets.values().sum::<usize>());
    ctx.manifest.count("days", targets.len());
    ctx.manifest.count("exhausted_days", exhausted);
    Ok(())
}

fn cluster(a: &ClusterArgs, ctx: &mut Context) -> Result<()> {
    let facts_path = ctx.input(a.facts.as_ref(), ctx.config.paths.facts.clone(), "facts")?;
    let schema_path = ctx.input(a.schema.as_ref(), ctx.config.paths.schema.clone(), "schema")?;
    let mut c = ctx.config.cluster.clone();
    set!(c.alpha, a.alpha);
    set!(c.kappa, a.kappa);
    set!(c.min_size, a.min);
    set!(c.max_size, a.max);
    set!(c.linkage, a.linkage);
    set!(c.threshold, a.threshold);
    ctx.settings(&c);

    let facts = facts_graph(&facts_path)?.sorted_quadruples();
    let schema = Schema::load(&schema_path)?;
    let matrix = distance_matrix(&facts, &schema, &c)?;
    let idx = cluster_matrix(&matrix, &c)?;
    let pick = |g: &[usize]| g.iter().map(|&i| facts[i].clone()).collect::<Vec<_>>();
    let clustering = Clustering {
        clusters: idx.clusters.iter().map(|g| pick(g)).collect(),
        singletons: pick(&idx.singletons),
    };
    let out = ctx.output(&a.out)?;
    write_json(&out, &clustering)?;
    if let Some(p) = &a.matrix_out {
        let p = ctx.output(p)?;
        matrix.save_csv(&p)?;
    }
    ctx.manifest.count("facts", facts.len());
    ctx.manifest.count("clusters", clustering.clusters.len());
    ctx.manifest.count("singletons", clustering.singletons.len());
    Ok(())
}

/// Fact groups to describe: clusters for the multi setup, every fact on
/// its own for the single setup.
fn describe_groups(input: &Path, setup: Setup) -> Result<Vec<Vec<Quadruple>>> {
    let is_json = input.extension().is_some_and(|e| e == "json");
    match (is_json, setup) {
        (true, Setup::Multi) => Ok(read_json::<Clustering>(input)?.clusters),
        (true, Setup::Single) => {
            let c: Clustering = read_json(input)?;
            let mut facts: Vec<Quadruple> = c.clusters.into_iter().flatten().chain(c.singletons).collect();
            facts.sort_by(|a, b| a.chrono_key().cmp(&b.chrono_key()));
            Ok(facts.into_iter().map(|q| vec![q]).collect())
        }
        (false, Setup::Single) => Ok(facts_graph(input)?.sorted_quadruples().into_iter().map(|q| vec![q]).collect()),
        (false, Setup::Multi) => Err(CliError::Config(format!(
            "{}: the multi setup needs a clusters JSON file from `cluster`",
            input.display()
        ))),
    }
}

fn describe_cmd(a: &DescribeArgs, ctx: &mut Context) -> Result<()> {
    let input = ctx.existing(&a.input)?;
    let defs_path = ctx.input(a.definitions.as_ref(), ctx.config.paths.definitions.clone(), "definitions")?;
    let labels_path = match a.labels.clone().or(ctx.config.paths.labels.clone()) {
        Some(p) => Some(ctx.existing(&p)?),
        None => None,
    };
    let mut s = ctx.config.describe.clone();
    set!(s.setup, a.setup);
    set!(s.backend, a.backend);
    set!(s.headline_prob, a.headline_prob);
    set!(s.styles, a.styles);
    set!(s.parallelism, a.parallelism);
    set!(s.retries, a.retries);
    ctx.settings(&s);

    let config = DescribeConfig {
        setup: s.setup,
        styles: s.styles.clone(),
        headline_prob: s.headline_prob,
        headline_window: s.headline_window,
        seed: ctx.seed,
        parallelism: s.parallelism,
        retries: s.retries,
    };
    config.validate()?;
    let backend: Box<dyn TextBackend> = match s.backend {
        BackendKind::Template => Box::new(TemplateBackend),
        BackendKind::Http => {
            let mut http = HttpConfig::from_env()?;
            http.timeout = std::time::Duration::from_secs(s.timeout_secs);
            http.temperature = s.temperature;
            Box::new(HttpBackend::new(http)?)
        }
    };

    let definitions = RelationDefinitions::load(&defs_path)?;
    let labels: HashMap<EntityId, String> = match &labels_path {
        Some(p) => load_labels(p)?,
        None => HashMap::new(),
    };
    let groups: Vec<_> = describe_groups(&input, s.setup)?
        .iter()
        .map(|g| label_quadruples(g, &labels))
        .collect();
    let output = describe(&groups, &definitions, backend.as_ref(), &config)?;
    if !groups.is_empty() && output.examples.is_empty() {
        let reason = output.skipped.first().map(|x| x.reason.as_str()).unwrap_or_default();
        return Err(CliError::Backend(format!("every example failed; first failure: {reason}")));
    }

    let out = ctx.output(&a.out)?;
    write_dataset(&output.examples, &out)?;
    let flagged = output
        .examples
        .iter()
        .filter(|e| !coverage_check(e, &TimestampStyle::ALL).is_clean())
        .count();
    if flagged > 0 {
        log::warn!("{flagged} examples do not mention every label and date");
    }
    ctx.manifest.count("groups", groups.len());
    ctx.manifest.count("examples", output.examples.len());
    ctx.manifest.count("coverage_flagged", flagged);
    ctx.manifest.count("skipped", &output.skipped);
    ctx.manifest.count("backend", backend.name());
    if let Some(model) = backend.model() {
        ctx.manifest.count("model", model);
    }
    Ok(())
}

#[derive(Serialize)]
struct EvaluateReport {
    system: EvalReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    baseline: Option<EvalReport>,
}

fn evaluate_cmd(a: &EvaluateArgs, ctx: &mut Context) -> Result<()> {
    let candidates_path = ctx.existing(&a.candidates)?;
    let references_path = ctx.existing(&a.references)?;
    let baseline_path = a.baseline.as_ref().map(|p| ctx.existing(p)).transpose()?;
    let mut s = ctx.config.evaluate.clone();
    set!(s.modes, a.modes);
    if a.permutation_test.is_some() {
        s.permutation_test = a.permutation_test;
    }
    if s.permutation_test.is_some() && baseline_path.is_none() {
        return Err(CliError::Config("the permutation test compares against --baseline, which is missing".into()));
    }
    ctx.settings(&s);

    let references: Vec<ScoredExample> = read_dataset(&references_path)?.iter().map(ScoredExample::from_dataset).collect();
    let mut system = evaluate(&read_candidates(&candidates_path)?, &references, &s.modes)?;
    let baseline = match &baseline_path {
        Some(p) => Some(evaluate(&read_candidates(p)?, &references, &s.modes)?),
        None => None,
    };
    if let (Some(b), Some(n)) = (&baseline, s.permutation_test) {
        system.attach_significance(b, n, ctx.seed)?;
    }

    for (mode, prf) in &system.modes {
        let p = system.p_values.as_ref().and_then(|p| p.get(mode)).map(|p| format!("  p = {p:.4}")).unwrap_or_default();
        println!("{:<8} P = {:.4}  R = {:.4}  F1 = {:.4}{p}", mode.name(), prf.precision, prf.recall, prf.f1);
    }
    ctx.manifest.count("examples", system.examples_scored);
    let out = ctx.output(&a.report)?;
    write_json(&out, &EvaluateReport { system, baseline })?;
    Ok(())
}

fn retime_cmd(a: &RetimeArgs, ctx: &mut Context) -> Result<()> {
    let input = ctx.existing(&a.input)?;
    ctx.settings(serde_json::json!({ "year": a.year }));
    let out = ctx.output(&a.out)?;
    if input.extension().is_some_and(|e| e == "jsonl") {
        let examples = retime(&read_dataset(&input)?, a.year);
        write_dataset(&examples, &out)?;
        ctx.manifest.count("examples", examples.len());
    } else {
        let graph = retime(&facts_graph(&input)?, a.year);
        write_facts(&out, &graph.sorted_quadruples())?;
        ctx.manifest.count("facts", graph.len());
    }
    Ok(())
}

fn resample(a: &ResampleArgs, ctx: &mut Context) -> Result<()> {
    let pa = ctx.existing(&a.a)?;
    let pb = ctx.existing(&a.b)?;
    ctx.settings(serde_json::json!({}));
    let (ra, rb) = resample_matched(&read_dataset(&pa)?, &read_dataset(&pb)?, ctx.seed)?;
    let (oa, ob) = (ctx.output(&a.out_a)?, ctx.output(&a.out_b)?);
    write_dataset(&ra, &oa)?;
    write_dataset(&rb, &ob)?;
    ctx.manifest.count("examples_per_side", ra.len());
    Ok(())
}
