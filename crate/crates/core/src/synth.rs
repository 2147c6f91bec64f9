//! Seeded synthetic data.
//!
//! [`linear_dataset`] draws feature vectors graded by a hidden linear score.
//! [`news_corpus`] builds a small world of actors, places and actions, writes
//! query descriptions and candidate triples about it, and grades each pair by
//! whether the candidate reports the query's event. Queries usually name
//! actors by an alias while candidates use the canonical name, and both
//! forms are in the gazetteer, so entity overlap carries signal that word
//! overlap does not.

use std::collections::{BTreeMap, HashSet};
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use chrono::{Days, NaiveDate};
use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::{write_candidates, write_queries, CandidateTriple, QueryEvent, RelevanceLabel};
use crate::entities::Gazetteer;
use crate::labels::{write_judgments, Judgment};
use crate::ltr::{LabelMode, QueryGroup, RankedItem, RankingDataset};
use crate::pairing::{make_pairs, PairKey, PairingOptions};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LinearConfig {
    pub train_queries: usize,
    pub valid_queries: usize,
    pub test_queries: usize,
    pub items_per_query: usize,
    pub num_features: usize,
    pub seed: u64,
}

impl Default for LinearConfig {
    fn default() -> Self {
        Self {
            train_queries: 50,
            valid_queries: 10,
            test_queries: 10,
            items_per_query: 20,
            num_features: 5,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct LinearData {
    pub weights: Vec<f64>,
    pub train: RankingDataset,
    pub valid: RankingDataset,
    pub test: RankingDataset,
}

/// Uniform features in `[0, 1)`; an item is relevant (grade 1) when its
/// hidden score `w·x` exceeds the median score of its group.
pub fn linear_dataset(config: &LinearConfig) -> LinearData {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let weights: Vec<f64> = (0..config.num_features).map(|_| rng.random_range(-1.0..1.0)).collect();
    let names: Vec<String> = (0..config.num_features).map(|f| format!("x{f}")).collect();
    let day = NaiveDate::from_ymd_opt(2020, 1, 1).expect("valid date");
    let mut make = |prefix: &str, n: usize| {
        let groups = (0..n)
            .map(|q| {
                let xs: Vec<Vec<f64>> = (0..config.items_per_query)
                    .map(|_| (0..config.num_features).map(|_| rng.random::<f64>()).collect())
                    .collect();
                let scores: Vec<f64> = xs.iter().map(|x| x.iter().zip(&weights).map(|(a, b)| a * b).sum()).collect();
                let mut sorted = scores.clone();
                sorted.sort_by(f64::total_cmp);
                let m = sorted.len();
                let median = if m % 2 == 0 {
                    (sorted[m / 2 - 1] + sorted[m / 2]) / 2.0
                } else {
                    sorted[m / 2]
                };
                QueryGroup {
                    query_id: format!("{prefix}{q:03}"),
                    date: day,
                    items: xs
                        .into_iter()
                        .zip(&scores)
                        .enumerate()
                        .map(|(i, (features, &s))| RankedItem {
                            candidate_id: format!("c{i:03}"),
                            features,
                            grade: (s > median) as u8,
                        })
                        .collect(),
                }
            })
            .collect();
        RankingDataset::new(names.clone(), LabelMode::Binary, groups)
    };
    let train = make("train", config.train_queries);
    let valid = make("valid", config.valid_queries);
    let test = make("test", config.test_queries);
    LinearData {
        weights,
        train,
        valid,
        test,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NewsConfig {
    pub start: NaiveDate,
    pub days: usize,
    pub queries_per_day: usize,
    /// Unrelated events reported each day.
    pub background_per_day: usize,
    pub actors: usize,
    pub countries: usize,
    pub cities_per_country: usize,
    pub actions: usize,
    /// Countries in the news on any one day.
    pub countries_per_day: usize,
    /// Candidates with the query's action and place but other actors.
    pub confounders_per_query: usize,
    /// Chance that a query names an actor canonically rather than by alias.
    pub canonical_mention: f64,
    /// Share of actor aliases listed in the gazetteer.
    pub alias_coverage: f64,
    pub annotators: usize,
    /// Chance that one annotator of a pair gives a random grade.
    pub annotator_noise: f64,
    pub seed: u64,
}

impl Default for NewsConfig {
    fn default() -> Self {
        Self {
            start: NaiveDate::from_ymd_opt(2017, 1, 10).expect("valid date"),
            days: 14,
            queries_per_day: 6,
            background_per_day: 100,
            actors: 60,
            countries: 12,
            cities_per_country: 3,
            actions: 15,
            countries_per_day: 3,
            confounders_per_query: 6,
            canonical_mention: 0.3,
            alias_coverage: 0.7,
            annotators: 3,
            annotator_noise: 0.05,
            seed: 0,
        }
    }
}

const FILLER: &[&str] = &[
    "officials", "reported", "government", "forces", "security", "local", "region", "border", "sources",
    "witnesses", "clashes", "tensions", "residents", "capital", "northern", "southern", "police", "authorities",
    "ministry", "statement", "tuesday", "monday", "weekend", "crisis", "violence", "protest", "election",
    "leaders", "talks", "agreement", "troops", "villages", "province", "district", "spokesman", "morning",
    "overnight", "dozens", "several", "people",
];

/// Pronounceable made-up words, unique across the whole world.
struct Words {
    rng: ChaCha8Rng,
    used: HashSet<String>,
}

impl Words {
    const CONS: &'static [u8] = b"bdfgklmnprstvz";
    const VOWELS: &'static [u8] = b"aeiou";
    const CODAS: &'static [&'static str] = &["rb", "lk", "sk", "nd", "rt", "mp", "lt", "nk", "rg", "ld"];

    fn fresh(&mut self, make: impl Fn(&mut ChaCha8Rng) -> String) -> String {
        loop {
            let w = make(&mut self.rng);
            if !FILLER.contains(&w.as_str()) && self.used.insert(w.clone()) {
                return w;
            }
        }
    }

    fn name(&mut self) -> String {
        self.fresh(|rng| {
            let syllables = rng.random_range(2..=3);
            let mut w = String::new();
            for _ in 0..syllables {
                w.push(*Self::CONS.choose(rng).expect("non-empty") as char);
                w.push(*Self::VOWELS.choose(rng).expect("non-empty") as char);
            }
            if rng.random_bool(0.5) {
                w.push(*Self::CONS.choose(rng).expect("non-empty") as char);
            }
            w
        })
    }

    /// A verb root whose `-ing` and `-ed` forms share a Porter stem.
    fn root(&mut self) -> String {
        self.fresh(|rng| {
            let mut w = String::new();
            w.push(*Self::CONS.choose(rng).expect("non-empty") as char);
            w.push(*Self::VOWELS.choose(rng).expect("non-empty") as char);
            w.push_str(Self::CODAS.choose(rng).expect("non-empty"));
            w
        })
    }
}

struct Actor {
    id: String,
    canonical: String,
    alias: String,
}

struct Place {
    city: String,
    city_id: String,
    country: String,
    country_id: String,
}

#[derive(Clone, Copy, PartialEq, Eq, Hash)]
struct Event {
    subject: usize,
    action: usize,
    object: usize,
    place: usize,
}

#[derive(Debug, Clone)]
pub struct NewsCorpus {
    pub queries: Vec<QueryEvent>,
    pub candidates: Vec<CandidateTriple>,
    /// `(surface, entity id)` entries for actor names, some aliases and places.
    pub gazetteer: Vec<(String, String)>,
    /// Gold grades of the relevant pairs; every other pair is NR.
    pub truth: BTreeMap<PairKey, RelevanceLabel>,
    /// Judgments for every same-day pair sharing a word.
    pub judgments: Vec<Judgment>,
}

impl NewsCorpus {
    pub fn grade(&self, query_id: &str, candidate_id: &str) -> RelevanceLabel {
        self.truth
            .get(&PairKey {
                query_id: query_id.into(),
                candidate_id: candidate_id.into(),
            })
            .copied()
            .unwrap_or(RelevanceLabel::NotRelevant)
    }

    pub fn gazetteer(&self) -> Gazetteer {
        let mut g = Gazetteer::new();
        for (s, id) in &self.gazetteer {
            g.insert(s, id).expect("generated gazetteer is consistent");
        }
        g
    }

    /// Writes `queries.jsonl`, `candidates.tsv`, `gazetteer.tsv` and
    /// `judgments.csv` into `dir`.
    pub fn write_dir(&self, dir: &Path) -> std::io::Result<()> {
        std::fs::create_dir_all(dir)?;
        write_queries(BufWriter::new(File::create(dir.join("queries.jsonl"))?), &self.queries)?;
        write_candidates(BufWriter::new(File::create(dir.join("candidates.tsv"))?), &self.candidates)?;
        let mut g = BufWriter::new(File::create(dir.join("gazetteer.tsv"))?);
        for (s, id) in &self.gazetteer {
            writeln!(g, "{s}\t{id}")?;
        }
        g.flush()?;
        write_judgments(BufWriter::new(File::create(dir.join("judgments.csv"))?), &self.judgments)
            .map_err(std::io::Error::other)?;
        Ok(())
    }
}

pub fn news_corpus(config: &NewsConfig) -> NewsCorpus {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut words = Words {
        rng: ChaCha8Rng::seed_from_u64(config.seed ^ 0x5eed),
        used: HashSet::new(),
    };
    let actors: Vec<Actor> = (0..config.actors)
        .map(|i| {
            let canonical = format!("{} {}", words.name(), words.name());
            let alias = format!("{} {}", words.name(), words.name());
            Actor {
                id: format!("Actor_{i:03}"),
                canonical,
                alias,
            }
        })
        .collect();
    let mut places = Vec::new();
    for c in 0..config.countries {
        let country = words.name();
        for k in 0..config.cities_per_country {
            places.push(Place {
                city: words.name(),
                city_id: format!("City_{c:02}_{k}"),
                country: country.clone(),
                country_id: format!("Country_{c:02}"),
            });
        }
    }
    let actions: Vec<String> = (0..config.actions).map(|_| words.root()).collect();

    let mut gazetteer = Vec::new();
    for a in &actors {
        gazetteer.push((a.canonical.clone(), a.id.clone()));
        if words.rng.random_bool(config.alias_coverage) {
            gazetteer.push((a.alias.clone(), a.id.clone()));
        }
    }
    for c in 0..config.countries {
        let p = &places[c * config.cities_per_country];
        gazetteer.push((p.country.clone(), p.country_id.clone()));
    }
    for p in &places {
        gazetteer.push((p.city.clone(), p.city_id.clone()));
    }

    let filler = |rng: &mut ChaCha8Rng, n: usize| -> Vec<&'static str> { FILLER.choose_multiple(rng, n).copied().collect() };
    let candidate = |rng: &mut ChaCha8Rng, e: &Event, date: NaiveDate| {
        let p = &places[e.place];
        let description = if rng.random_bool(0.3) {
            String::new()
        } else {
            let n = rng.random_range(2..=4);
            format!("{} {}ing", filler(rng, n).join(" "), actions[e.action])
        };
        CandidateTriple {
            id: String::new(),
            subject: actors[e.subject].canonical.clone(),
            predicate: format!("{}ing", actions[e.action]),
            predicate_code: format!("{:03}", e.action + 1),
            predicate_description: description,
            object: actors[e.object].canonical.clone(),
            city: if rng.random_bool(0.2) { String::new() } else { p.city.clone() },
            country: p.country.clone(),
            date,
        }
    };
    let two_actors = |rng: &mut ChaCha8Rng| {
        let s = rng.random_range(0..config.actors);
        let mut o = rng.random_range(0..config.actors - 1);
        if o >= s {
            o += 1;
        }
        (s, o)
    };

    let mut queries = Vec::new();
    let mut candidates = Vec::new();
    let mut truth = BTreeMap::new();
    let country_ids: Vec<usize> = (0..config.countries).collect();

    for d in 0..config.days {
        let date = config.start + Days::new(d as u64);
        let todays: Vec<usize> = country_ids.choose_multiple(&mut rng, config.countries_per_day).copied().collect();
        let place_today = |rng: &mut ChaCha8Rng| {
            let c = *todays.choose(rng).expect("countries per day > 0");
            c * config.cities_per_country + rng.random_range(0..config.cities_per_country)
        };
        // (candidate, query index within the day, grade)
        let mut day_cands: Vec<(CandidateTriple, Option<(usize, RelevanceLabel)>)> = Vec::new();
        let mut events = HashSet::new();
        let mut day_queries = Vec::new();

        for qi in 0..config.queries_per_day {
            let (subject, object) = two_actors(&mut rng);
            let e = Event {
                subject,
                action: rng.random_range(0..config.actions),
                object,
                place: place_today(&mut rng),
            };
            if !events.insert(e) {
                continue;
            }
            let mention = |rng: &mut ChaCha8Rng, a: &Actor| {
                if rng.random_bool(config.canonical_mention) {
                    a.canonical.clone()
                } else {
                    a.alias.clone()
                }
            };
            let p = &places[e.place];
            let mut text = format!(
                "{} {}ed {} in {}, {}.",
                mention(&mut rng, &actors[e.subject]),
                actions[e.action],
                mention(&mut rng, &actors[e.object]),
                p.city,
                p.country
            );
            let n = rng.random_range(3..=6);
            text = format!("{} {}", text, filler(&mut rng, n).join(" "));
            day_queries.push((qi, e, text));

            for _ in 0..rng.random_range(2..=4) {
                day_cands.push((candidate(&mut rng, &e, date), Some((qi, RelevanceLabel::VeryRelevant))));
            }
            for _ in 0..rng.random_range(0..=2) {
                let mut other = e;
                other.action = (e.action + rng.random_range(1..config.actions)) % config.actions;
                day_cands.push((candidate(&mut rng, &other, date), Some((qi, RelevanceLabel::Relevant))));
            }
            for _ in 0..config.confounders_per_query {
                let (subject, object) = two_actors(&mut rng);
                let other = Event { subject, object, ..e };
                if other.subject == e.subject && other.object == e.object {
                    continue;
                }
                day_cands.push((candidate(&mut rng, &other, date), None));
            }
            // Same actors, different action and place.
            for _ in 0..2 {
                let other = Event {
                    action: (e.action + rng.random_range(1..config.actions)) % config.actions,
                    place: (e.place + rng.random_range(1..places.len())) % places.len(),
                    ..e
                };
                day_cands.push((candidate(&mut rng, &other, date), None));
            }
        }
        for _ in 0..config.background_per_day {
            let (subject, object) = two_actors(&mut rng);
            let e = Event {
                subject,
                action: rng.random_range(0..config.actions),
                object,
                place: place_today(&mut rng),
            };
            if events.contains(&e) {
                continue;
            }
            day_cands.push((candidate(&mut rng, &e, date), None));
        }

        // Ids follow a shuffled order so they carry no information.
        day_cands.shuffle(&mut rng);
        let qid = |qi: usize| format!("q{d:02}{qi:02}");
        for (n, (mut c, origin)) in day_cands.into_iter().enumerate() {
            c.id = format!("c{d:02}{n:04}");
            if let Some((qi, label)) = origin {
                truth.insert(
                    PairKey {
                        query_id: qid(qi),
                        candidate_id: c.id.clone(),
                    },
                    label,
                );
            }
            candidates.push(c);
        }
        for (qi, _, text) in day_queries {
            queries.push(QueryEvent {
                id: qid(qi),
                text,
                date,
            });
        }
    }

    let mut corpus = NewsCorpus {
        queries,
        candidates,
        gazetteer,
        truth,
        judgments: Vec::new(),
    };
    let keys: Vec<PairKey> = make_pairs(&corpus.queries, &corpus.candidates, &PairingOptions::default())
        .iter()
        .map(|p| p.key())
        .collect();
    let mut judgments = Vec::with_capacity(keys.len() * config.annotators);
    for k in keys {
        let gold = corpus.grade(&k.query_id, &k.candidate_id).grade();
        let noisy = (config.annotators >= 3 && rng.random_bool(config.annotator_noise))
            .then(|| rng.random_range(0..config.annotators));
        for a in 0..config.annotators {
            let grade = if noisy == Some(a) { (gold + rng.random_range(1..3)) % 3 } else { gold };
            judgments.push(Judgment {
                query_id: k.query_id.clone(),
                candidate_id: k.candidate_id.clone(),
                annotator_id: format!("a{a}"),
                grade,
            });
        }
    }
    corpus.judgments = judgments;
    corpus
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::labels::aggregate;
    use crate::textproc::stem;

    #[test]
    fn roots_share_a_stem() {
        let mut w = Words {
            rng: ChaCha8Rng::seed_from_u64(1),
            used: HashSet::new(),
        };
        for _ in 0..50 {
            let r = w.root();
            assert_eq!(stem(&format!("{r}ing")), stem(&format!("{r}ed")), "{r}");
        }
    }

    #[test]
    fn linear_grades_split_at_the_median() {
        let d = linear_dataset(&LinearConfig::default());
        assert_eq!(d.train.groups.len(), 50);
        for g in &d.test.groups {
            assert_eq!(g.items.iter().filter(|i| i.grade == 1).count(), 10);
        }
    }

    #[test]
    fn news_corpus_shape() {
        let c = news_corpus(&NewsConfig::default());
        assert_eq!(c.queries.len(), 14 * 6);
        c.gazetteer();
        let ids: HashSet<_> = c.candidates.iter().map(|x| &x.id).collect();
        assert_eq!(ids.len(), c.candidates.len());
        // Noise never overturns a majority of three.
        let gold = aggregate(&c.judgments, 3);
        for (k, l) in &gold.labels {
            assert_eq!(*l, c.grade(&k.query_id, &k.candidate_id));
        }
        let [nr, r, vr] = gold.counts();
        let total = (nr + r + vr) as f64;
        assert!((0.02..0.05).contains(&(vr as f64 / total)), "VR share {}", vr as f64 / total);
        assert!((0.004..0.02).contains(&(r as f64 / total)), "R share {}", r as f64 / total);
    }

    #[test]
    fn seeded() {
        let cfg = NewsConfig {
            days: 3,
            ..Default::default()
        };
        let a = news_corpus(&cfg);
        let b = news_corpus(&cfg);
        assert_eq!(a.candidates, b.candidates);
        assert_eq!(a.judgments, b.judgments);
    }
}
