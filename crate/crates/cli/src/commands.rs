use std::collections::HashMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use log::{info, warn};
use newsrank::corpus::{
    banned_actions, candidate_text_with, filter_generic, parse_candidates, parse_queries, write_candidates,
    write_queries, ActionCodeTable, CandidateTriple, QueryEvent,
};
use newsrank::entities::{
    entity_set, link_offline, EntityCache, EntityIndex, EntityOwner, Gazetteer, RemoteLinker,
};
use newsrank::eval::{compare, evaluate, render_table, EvaluationReport, REPORT_SCHEMA};
use newsrank::features::{read_featurized, write_featurized, FeatureSetName, FeaturizedPair, Featurizer};
use newsrank::labels::{agreement, aggregate, binary_mode, filter_queries, read_judgments, split_by_date, GoldLabels};
use newsrank::ltr::{train, tune, LabelMode, Model, ModelKind, RankingDataset, TrainingLog};
use newsrank::pairing::{make_pairs, read_pair_keys, write_pair_keys, Pair, PairKey};
use newsrank::synth::news_corpus;
use newsrank::error::{EntityError, ModelError};
use serde::Serialize;

use crate::config::EntityMode;
use crate::error::CliError;
use crate::workspace::{schema, Run};

pub const RAW_QUERIES: &str = "raw/queries.jsonl";
pub const RAW_CANDIDATES: &str = "raw/candidates.tsv";
pub const RAW_GAZETTEER: &str = "raw/gazetteer.tsv";
pub const RAW_JUDGMENTS: &str = "raw/judgments.csv";
pub const QUERIES: &str = "data/queries.jsonl";
pub const CANDIDATES: &str = "data/candidates.tsv";
pub const PAIRS: &str = "data/pairs.jsonl";
pub const ENTITIES: &str = "data/entities.jsonl";
pub const FEATURES: &str = "data/features.jsonl";
pub const GOLD: &str = "data/gold.csv";
pub const LABEL_SUMMARY: &str = "data/labels.json";

pub fn split_path(name: &str) -> String {
    format!("split/{name}.jsonl")
}

/// `rf-all`, `lm-b-binary`, ...
pub fn model_tag(kind: ModelKind, set: FeatureSetName, binary: bool) -> String {
    let mut tag = format!("{kind}-{set}");
    if binary {
        tag.push_str("-binary");
    }
    tag
}

fn json_line(w: &mut dyn Write, value: &impl Serialize) -> Result<()> {
    serde_json::to_writer_pretty(&mut *w, value)?;
    w.write_all(b"\n")?;
    Ok(())
}

fn load_queries(run: &mut Run, path: &Path) -> Result<Vec<QueryEvent>> {
    let r = run.input(path, schema::QUERIES, "run `ingest` first")?;
    parse_queries(r).with_context(|| format!("parsing {}", path.display()))
}

fn load_candidates(run: &mut Run, path: &Path) -> Result<Vec<CandidateTriple>> {
    let r = run.input(path, schema::CANDIDATES, "run `ingest` first")?;
    parse_candidates(r).with_context(|| format!("parsing {}", path.display()))
}

fn load_featurized(run: &mut Run, path: &Path, hint: &str) -> Result<Vec<FeaturizedPair>> {
    let r = run.input(path, schema::FEATURES, hint)?;
    read_featurized(r).with_context(|| format!("parsing {}", path.display()))
}

fn load_model(run: &mut Run, path: &Path) -> Result<Model> {
    let r = run.input(path, schema::MODEL, "run `train` or `tune` first")?;
    Model::load(r).map_err(|e| match e {
        ModelError::Version { .. } => CliError::Schema(format!("{}: {e}", path.display())).into(),
        e => anyhow::Error::new(e).context(format!("loading {}", path.display())),
    })
}

fn load_gazetteer(run: &mut Run, path: &Path) -> Result<Gazetteer> {
    let r = run.input(path, schema::GAZETTEER, "offline linking needs a gazetteer")?;
    Gazetteer::read(r).with_context(|| format!("parsing {}", path.display()))
}

/// Fails with a configuration error unless every member of `set` is present.
fn check_feature_set(pairs: &[FeaturizedPair], set: FeatureSetName) -> Result<()> {
    let Some(first) = pairs.first() else {
        return Ok(());
    };
    if let Some(missing) = set.members().into_iter().find(|f| first.features.get(f).is_none()) {
        return Err(CliError::Config(format!(
            "feature set `{set}` needs `{missing}`, which the featurized data lacks (entity linking off?)"
        ))
        .into());
    }
    Ok(())
}

fn dataset(pairs: &[FeaturizedPair], names: &[&str], binary: bool) -> Result<RankingDataset> {
    let data = RankingDataset::from_featurized(pairs, names)?;
    Ok(if binary { filter_queries(binary_mode(data)) } else { data })
}

pub fn synth(run: &mut Run, out: &Path) -> Result<()> {
    let corpus = news_corpus(&run.config.synth);
    let files: [(&str, &str, Box<dyn Fn(&mut dyn Write) -> Result<()>>); 4] = [
        ("queries.jsonl", schema::QUERIES, Box::new(|w| Ok(write_queries(w, &corpus.queries)?))),
        ("candidates.tsv", schema::CANDIDATES, Box::new(|w| Ok(write_candidates(w, &corpus.candidates)?))),
        (
            "gazetteer.tsv",
            schema::GAZETTEER,
            Box::new(|w| {
                for (surface, id) in &corpus.gazetteer {
                    writeln!(w, "{surface}\t{id}")?;
                }
                Ok(())
            }),
        ),
        (
            "judgments.csv",
            schema::JUDGMENTS,
            Box::new(|w| Ok(newsrank::labels::write_judgments(w, &corpus.judgments)?)),
        ),
    ];
    for (name, s, write) in files {
        run.output(&out.join(name), s, |w| write(w))?;
    }
    println!(
        "synthesized {} queries, {} candidates, {} judgments into {}",
        corpus.queries.len(),
        corpus.candidates.len(),
        corpus.judgments.len(),
        out.display()
    );
    Ok(())
}

pub fn ingest(run: &mut Run, queries: &Path, candidates: &Path) -> Result<()> {
    let qs = load_queries(run, queries)?;
    let cs = load_candidates(run, candidates)?;
    let table = match &run.config.corpus.action_codes {
        Some(p) => {
            let p = run.path(p);
            let r = run.input(&p, "newsrank.action-codes/v1", "configured under corpus.action_codes")?;
            let table = ActionCodeTable::read(r).with_context(|| format!("parsing {}", p.display()))?;
            table.validate(&cs).context("validating action codes")?;
            Some(table)
        }
        None => None,
    };
    let banned = banned_actions(&run.config.corpus.ban_actions, table.as_ref());
    let before = cs.len();
    let cs = filter_generic(cs, &banned);
    info!("dropped {} candidates with banned actions", before - cs.len());
    let (qp, cp) = (run.path(QUERIES), run.path(CANDIDATES));
    run.output(&qp, schema::QUERIES, |w| Ok(write_queries(w, &qs)?))?;
    run.output(&cp, schema::CANDIDATES, |w| Ok(write_candidates(w, &cs)?))?;
    println!("ingested {} queries, {} of {before} candidates", qs.len(), cs.len());
    Ok(())
}

pub fn pairs(run: &mut Run) -> Result<()> {
    let qs = load_queries(run, &run.path(QUERIES))?;
    let cs = load_candidates(run, &run.path(CANDIDATES))?;
    let keys: Vec<PairKey> = make_pairs(&qs, &cs, &run.config.pairing).iter().map(Pair::key).collect();
    run.output(&run.path(PAIRS), schema::PAIRS, |w| Ok(write_pair_keys(w, &keys)?))?;
    println!("{} pairs", keys.len());
    Ok(())
}

pub fn link(run: &mut Run, gazetteer: Option<PathBuf>) -> Result<()> {
    let qs = load_queries(run, &run.path(QUERIES))?;
    let cs = load_candidates(run, &run.path(CANDIDATES))?;
    let source = run.config.features.predicate_source;
    let texts: Vec<(EntityOwner, &str, String)> = qs
        .iter()
        .map(|q| (EntityOwner::Query, q.id.as_str(), q.text.clone()))
        .chain(cs.iter().map(|c| (EntityOwner::Candidate, c.id.as_str(), candidate_text_with(c, source))))
        .collect();

    let gazetteer_path = gazetteer
        .or_else(|| run.config.entities.gazetteer.clone())
        .map(|p| run.path(p))
        .unwrap_or_else(|| run.path(RAW_GAZETTEER));
    let annotations = match run.config.entity_mode {
        EntityMode::Off => {
            return Err(CliError::Config("entity_mode is `off`; nothing to link".into()).into());
        }
        EntityMode::Offline => {
            let g = load_gazetteer(run, &gazetteer_path)?;
            texts.iter().map(|(_, _, t)| link_offline(t, &g)).collect::<Vec<_>>()
        }
        EntityMode::Remote => {
            let mut tagme = run.config.entities.tagme.clone();
            tagme.token = std::env::var("NEWSRANK_TAGME_TOKEN").unwrap_or_default();
            if tagme.token.is_empty() {
                return Err(CliError::Config("remote linking needs NEWSRANK_TAGME_TOKEN".into()).into());
            }
            let cache = EntityCache::open(run.path(&run.config.entities.cache))?;
            let linker = RemoteLinker::http(tagme, cache);
            let refs: Vec<&str> = texts.iter().map(|(_, _, t)| t.as_str()).collect();
            let results = linker.link_batch(&refs);
            let fallback = if results.iter().any(Result::is_err) && gazetteer_path.is_file() {
                warn!("remote linking failed for some texts; using the gazetteer for those");
                Some(load_gazetteer(run, &gazetteer_path)?)
            } else {
                None
            };
            results
                .into_iter()
                .zip(&texts)
                .map(|(r, (_, id, t))| match (r, &fallback) {
                    (Ok(a), _) => Ok(a),
                    (Err(EntityError::Transport(_)), Some(g)) => Ok(link_offline(t, g)),
                    (Err(e), _) => Err(anyhow::Error::new(e).context(format!("linking {id}"))),
                })
                .collect::<Result<Vec<_>>>()?
        }
    };
    let mut index = EntityIndex::default();
    for ((owner, id, _), a) in texts.iter().zip(&annotations) {
        index.insert(*owner, *id, entity_set(a));
    }
    run.output(&run.path(ENTITIES), schema::ENTITIES, |w| Ok(index.write(w)?))?;
    let linked = annotations.iter().filter(|a| !a.is_empty()).count();
    println!("linked entities in {linked} of {} texts", texts.len());
    Ok(())
}

pub fn featurize(run: &mut Run) -> Result<()> {
    let qs = load_queries(run, &run.path(QUERIES))?;
    let cs = load_candidates(run, &run.path(CANDIDATES))?;
    let keys = {
        let r = run.input(&run.path(PAIRS), schema::PAIRS, "run `pairs` first")?;
        read_pair_keys(r)?
    };
    let index = match run.config.entity_mode {
        EntityMode::Off => None,
        _ => {
            let r = run.input(&run.path(ENTITIES), schema::ENTITIES, "run `link` or use --entity-mode off")?;
            Some(EntityIndex::read(r)?)
        }
    };
    let qmap: HashMap<&str, &QueryEvent> = qs.iter().map(|q| (q.id.as_str(), q)).collect();
    let cmap: HashMap<&str, &CandidateTriple> = cs.iter().map(|c| (c.id.as_str(), c)).collect();
    let featurizer = Featurizer::new(&cs, run.config.features, index.as_ref());
    let out = keys
        .iter()
        .map(|k| {
            let (Some(query), Some(candidate)) = (qmap.get(k.query_id.as_str()), cmap.get(k.candidate_id.as_str()))
            else {
                bail!("pair ({}, {}) refers to an unknown query or candidate", k.query_id, k.candidate_id);
            };
            let pair = Pair { query, candidate };
            Ok(FeaturizedPair {
                query_id: k.query_id.clone(),
                candidate_id: k.candidate_id.clone(),
                date: query.date,
                label: None,
                features: featurizer.compute(&pair)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    run.output(&run.path(FEATURES), schema::FEATURES, |w| Ok(write_featurized(w, &out)?))?;
    let width = out.first().map_or(0, |p| p.features.len());
    println!("featurized {} pairs with {width} features", out.len());
    Ok(())
}

#[derive(Serialize)]
struct LabelSummary {
    judgments: usize,
    agreement_percent: f64,
    not_relevant: usize,
    relevant: usize,
    very_relevant: usize,
    unlabeled: usize,
}

pub fn labels(run: &mut Run, judgments: &Path) -> Result<()> {
    let js = {
        let r = run.input(judgments, schema::JUDGMENTS, "judgment CSV")?;
        read_judgments(r).with_context(|| format!("parsing {}", judgments.display()))?
    };
    let gold = aggregate(&js, run.config.labels.min_judgments);
    let [nr, r, vr] = gold.counts();
    let summary = LabelSummary {
        judgments: js.len(),
        agreement_percent: agreement(&js)?,
        not_relevant: nr,
        relevant: r,
        very_relevant: vr,
        unlabeled: gold.unlabeled.len(),
    };
    run.output(&run.path(GOLD), schema::GOLD, |w| Ok(gold.write(w)?))?;
    run.output(&run.path(LABEL_SUMMARY), schema::LABEL_SUMMARY, |w| json_line(w, &summary))?;
    println!(
        "agreement {:.2}%  VR {vr}  R {r}  NR {nr}  unlabeled {}",
        summary.agreement_percent, summary.unlabeled
    );
    Ok(())
}

pub fn split(run: &mut Run) -> Result<()> {
    let mut pairs = load_featurized(run, &run.path(FEATURES), "run `featurize` first")?;
    let gold = {
        let r = run.input(&run.path(GOLD), schema::GOLD, "run `labels` first")?;
        GoldLabels::read(r)?
    };
    for p in &mut pairs {
        p.label = gold
            .labels
            .get(&PairKey {
                query_id: p.query_id.clone(),
                candidate_id: p.candidate_id.clone(),
            })
            .copied();
    }
    let total = pairs.len();
    pairs.retain(|p| p.label.is_some());
    if total > pairs.len() {
        info!("{} pairs without a gold label were left out", total - pairs.len());
    }
    let Some(first) = pairs.first() else {
        bail!("no featurized pair has a gold label");
    };
    let names: Vec<String> = first.features.names().map(str::to_string).collect();
    let name_refs: Vec<&str> = names.iter().map(String::as_str).collect();
    let data = filter_queries(RankingDataset::from_featurized(&pairs, &name_refs)?);
    let splits = split_by_date(&data, &run.config.split)?;
    for (name, set) in [("train", &splits.train), ("valid", &splits.valid), ("test", &splits.test)] {
        let out = set.to_featurized();
        run.output(&run.path(split_path(name)), schema::FEATURES, |w| Ok(write_featurized(w, &out)?))?;
        println!("{name}: {} queries, {} pairs", set.groups.len(), set.num_items());
    }
    Ok(())
}

fn training_data(run: &mut Run, binary: bool) -> Result<(RankingDataset, RankingDataset)> {
    let set = run.config.feature_set;
    let train_pairs = load_featurized(run, &run.path(split_path("train")), "run `split` first")?;
    let valid_pairs = load_featurized(run, &run.path(split_path("valid")), "run `split` first")?;
    check_feature_set(&train_pairs, set)?;
    let names = set.members();
    Ok((dataset(&train_pairs, &names, binary)?, dataset(&valid_pairs, &names, binary)?))
}

fn write_model(run: &mut Run, path: &Path, model: &Model, log: &TrainingLog) -> Result<()> {
    run.output(path, schema::MODEL, |w| Ok(model.save(w)?))?;
    run.output(&path.with_extension("log.json"), schema::TRAINING_LOG, |w| json_line(w, log))
}

pub fn train_cmd(run: &mut Run, binary: bool) -> Result<String> {
    let (kind, set) = (run.config.model, run.config.feature_set);
    let (train_set, valid_set) = training_data(run, binary)?;
    let (model, log) = train(kind, &train_set, &valid_set, &run.config.train, run.config.seed)?;
    let tag = model_tag(kind, set, binary);
    write_model(run, &run.path(format!("models/{tag}.json")), &model, &log)?;
    println!("trained {} on {} queries -> models/{tag}.json", model.id(), train_set.groups.len());
    Ok(tag)
}

pub fn tune_cmd(run: &mut Run, binary: bool) -> Result<String> {
    let (kind, set) = (run.config.model, run.config.feature_set);
    let (train_set, valid_set) = training_data(run, binary)?;
    let outcome = tune(kind, &train_set, &valid_set, &run.config.train, &run.config.tune, run.config.seed)?;
    let tag = model_tag(kind, set, binary);
    run.output(&run.path(format!("tune/{tag}.tsv")), schema::TUNE, |w| {
        writeln!(w, "setting\tvalid_ndcg10")?;
        for row in &outcome.rows {
            writeln!(w, "{}\t{}", serde_json::to_string(&row.setting)?, row.valid_ndcg10)?;
        }
        Ok(())
    })?;
    write_model(run, &run.path(format!("tune/{tag}.model.json")), &outcome.model, &outcome.log)?;
    let best = &outcome.rows[outcome.best];
    println!(
        "best of {} settings: {} (valid NDCG@10 {:.4}) -> tune/{tag}.model.json",
        outcome.rows.len(),
        best.setting,
        best.valid_ndcg10
    );
    Ok(tag)
}

fn model_file(run: &Run, explicit: Option<PathBuf>, binary: bool) -> PathBuf {
    explicit.map(|p| run.path(p)).unwrap_or_else(|| {
        run.path(format!(
            "models/{}.json",
            model_tag(run.config.model, run.config.feature_set, binary)
        ))
    })
}

fn file_tag(path: &Path) -> String {
    let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    name.trim_end_matches(".json").trim_end_matches(".model").to_string()
}

fn feature_set_of(model: &Model) -> String {
    FeatureSetName::ALL_SETS
        .into_iter()
        .find(|s| s.members().iter().copied().eq(model.feature_names.iter().map(String::as_str)))
        .map_or_else(|| "custom".to_string(), |s| s.to_string())
}

pub fn rank(run: &mut Run, model: Option<PathBuf>, input: Option<PathBuf>, binary: bool) -> Result<String> {
    let model_path = model_file(run, model, binary);
    let model = load_model(run, &model_path)?;
    let input = input.map(|p| run.path(p)).unwrap_or_else(|| run.path(FEATURES));
    let pairs = load_featurized(run, &input, "run `featurize` first")?;
    let names: Vec<&str> = model.feature_names.iter().map(String::as_str).collect();
    let data = RankingDataset::for_ranking(&pairs, &names)?;
    let tag = file_tag(&model_path);
    run.output(&run.path(format!("rankings/{tag}.tsv")), schema::RANKINGS, |w| {
        writeln!(w, "query_id\trank\tcandidate_id\tscore")?;
        for g in &data.groups {
            for (rank, i) in model.rank_group(g).into_iter().enumerate() {
                let item = &g.items[i];
                let score = model.score_values(&item.features)?;
                writeln!(w, "{}\t{}\t{}\t{score}", g.query_id, rank + 1, item.candidate_id)?;
            }
        }
        Ok(())
    })?;
    println!("ranked {} queries -> rankings/{tag}.tsv", data.groups.len());
    Ok(tag)
}

pub fn evaluate_cmd(run: &mut Run, model: Option<PathBuf>, split: &str, binary: bool) -> Result<String> {
    let model_path = model_file(run, model, binary);
    let model = load_model(run, &model_path)?;
    let pairs = load_featurized(run, &run.path(split_path(split)), "run `split` first")?;
    let names: Vec<&str> = model.feature_names.iter().map(String::as_str).collect();
    let data = dataset(&pairs, &names, model.label_mode == LabelMode::Binary)?;
    let report = evaluate(&model, &data, &run.config.metric_k, &feature_set_of(&model), split);
    let tag = format!("{}-{split}", file_tag(&model_path));
    run.output(&run.path(format!("reports/{tag}.json")), schema::REPORT, |w| json_line(w, &report))?;
    print!("{}", render_table(std::slice::from_ref(&report)));
    Ok(tag)
}

fn load_report(run: &mut Run, path: &Path) -> Result<EvaluationReport> {
    let mut r = run.input(path, schema::REPORT, "run `evaluate` first")?;
    let mut text = String::new();
    std::io::Read::read_to_string(&mut r, &mut text)?;
    let value: serde_json::Value =
        serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
    match value.get("schema").and_then(|s| s.as_str()) {
        Some(REPORT_SCHEMA) => {}
        found => {
            return Err(CliError::Schema(format!(
                "{}: report schema {found:?}, expected `{REPORT_SCHEMA}`",
                path.display()
            ))
            .into())
        }
    }
    Ok(serde_json::from_value(value)?)
}

pub fn report(run: &mut Run, reports: Vec<PathBuf>, compare_pair: Option<(PathBuf, PathBuf)>, metric: &str) -> Result<()> {
    let mut paths: Vec<PathBuf> = reports.into_iter().map(|p| run.path(p)).collect();
    if paths.is_empty() {
        let dir = run.path("reports");
        let entries = fs::read_dir(&dir).map_err(|_| CliError::MissingArtifact {
            path: dir.clone(),
            hint: "run `evaluate` first".into(),
        })?;
        paths = entries
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|e| e == "json"))
            .collect();
        paths.sort();
    }
    let reports = paths.iter().map(|p| load_report(run, p)).collect::<Result<Vec<_>>>()?;
    let mut text = render_table(&reports);
    if let Some((a, b)) = compare_pair {
        let (a, b) = (load_report(run, &run.path(a))?, load_report(run, &run.path(b))?);
        let t = compare(&a, &b, metric)?;
        let t_stat = t.t.map_or_else(|| "n/a".to_string(), |v| format!("{v:.4}"));
        text.push_str(&format!(
            "\npaired t-test on {metric}: {}/{} vs {}/{}  n={}  mean diff={:+.4}  t={t_stat}  p={:.4}\n",
            a.model_kind, a.feature_set, b.model_kind, b.feature_set, t.n, t.mean_diff, t.p_value
        ));
    }
    run.output(&run.path("reports/table.txt"), schema::TABLE, |w| Ok(w.write_all(text.as_bytes())?))?;
    print!("{text}");
    Ok(())
}
