//! Query events, candidate triples and their on-disk formats.
//!
//! Queries are JSON lines `{"id", "text", "date"}`. Candidates are a
//! tab-separated table with a fixed header (see [`CANDIDATE_HEADER`]).
//! Dates are accepted either as ISO-8601 days (`2017-01-17`) or in prose
//! form (`17 January 2017`, `17 Jan. 2017`) and always normalized to
//! ISO-8601.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::io::{BufRead, Write};

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::error::ParseError;

/// Columns of the candidate table, in order.
pub const CANDIDATE_HEADER: [&str; 9] = [
    "id",
    "subject",
    "predicate",
    "predicate_code",
    "predicate_description",
    "object",
    "city",
    "country",
    "date",
];

/// A notable event: free-text description plus its publication day.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QueryEvent {
    pub id: String,
    pub text: String,
    pub date: NaiveDate,
}

/// A machine-extracted event: who did what to whom, where and when.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CandidateTriple {
    pub id: String,
    pub subject: String,
    pub predicate: String,
    /// Action-category code; empty when the extractor gave none.
    pub predicate_code: String,
    pub predicate_description: String,
    pub object: String,
    pub city: String,
    pub country: String,
    pub date: NaiveDate,
}

/// Graded relevance of a (query, candidate) pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub enum RelevanceLabel {
    NotRelevant = 0,
    Relevant = 1,
    VeryRelevant = 2,
}

impl RelevanceLabel {
    pub fn grade(self) -> u8 {
        self as u8
    }

    pub fn from_grade(grade: u8) -> Option<Self> {
        match grade {
            0 => Some(Self::NotRelevant),
            1 => Some(Self::Relevant),
            2 => Some(Self::VeryRelevant),
            _ => None,
        }
    }
}

impl TryFrom<u8> for RelevanceLabel {
    type Error = String;

    fn try_from(value: u8) -> Result<Self, Self::Error> {
        Self::from_grade(value).ok_or_else(|| format!("relevance grade {value} not in {{0,1,2}}"))
    }
}

impl From<RelevanceLabel> for u8 {
    fn from(label: RelevanceLabel) -> Self {
        label.grade()
    }
}

impl fmt::Display for RelevanceLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Self::NotRelevant => "NR",
            Self::Relevant => "R",
            Self::VeryRelevant => "VR",
        };
        f.write_str(s)
    }
}

/// Closed table of action-category codes (code → label).
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ActionCodeTable {
    pub codes: BTreeMap<String, String>,
}

impl ActionCodeTable {
    /// Reads a `code<TAB>label` file; blank lines and `#` comments are skipped.
    pub fn read<R: BufRead>(reader: R) -> Result<Self, ParseError> {
        let mut codes = BTreeMap::new();
        for (idx, line) in reader.lines().enumerate() {
            let line = line.map_err(|e| ParseError::io(idx + 1, e))?;
            let line = line.trim_end_matches('\r');
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let (code, label) = line
                .split_once('\t')
                .ok_or_else(|| ParseError::record(idx + 1, "expected `code<TAB>label`"))?;
            codes.insert(code.trim().to_string(), label.trim().to_string());
        }
        Ok(Self { codes })
    }

    pub fn contains(&self, code: &str) -> bool {
        self.codes.contains_key(code)
    }

    /// Codes whose label equals `label`, ignoring case.
    pub fn codes_for_label<'a>(&'a self, label: &'a str) -> impl Iterator<Item = &'a str> + 'a {
        self.codes
            .iter()
            .filter(move |(_, l)| l.eq_ignore_ascii_case(label))
            .map(|(c, _)| c.as_str())
    }

    /// Every candidate with a non-empty code must use a code from the table.
    pub fn validate(&self, candidates: &[CandidateTriple]) -> Result<(), ParseError> {
        for (idx, c) in candidates.iter().enumerate() {
            if !c.predicate_code.is_empty() && !self.contains(&c.predicate_code) {
                return Err(ParseError::record(
                    idx + 2,
                    format!("candidate {}: unknown action code `{}`", c.id, c.predicate_code),
                ));
            }
        }
        Ok(())
    }
}

/// Parses a calendar day in ISO or prose form.
pub fn parse_date(raw: &str) -> Option<NaiveDate> {
    let s = raw.trim();
    if let Ok(d) = NaiveDate::parse_from_str(s, "%Y-%m-%d") {
        return Some(d);
    }
    // "17 Jan. 2017" -> "17 Jan 2017"
    let cleaned: String = s.replace(". ", " ").replace(',', " ");
    let cleaned = cleaned.split_whitespace().collect::<Vec<_>>().join(" ");
    ["%d %B %Y", "%d %b %Y", "%B %d %Y", "%b %d %Y"]
        .iter()
        .find_map(|fmt| NaiveDate::parse_from_str(&cleaned, fmt).ok())
}

#[derive(Deserialize)]
struct RawQuery {
    id: serde_json::Value,
    text: String,
    date: String,
}

/// Parses a JSON-lines query stream. Blank lines are ignored.
pub fn parse_queries<R: BufRead>(reader: R) -> Result<Vec<QueryEvent>, ParseError> {
    let mut out = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let lineno = idx + 1;
        let line = line.map_err(|e| ParseError::io(lineno, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let raw: RawQuery =
            serde_json::from_str(&line).map_err(|e| ParseError::record(lineno, e.to_string()))?;
        let id = match raw.id {
            serde_json::Value::String(s) => s,
            serde_json::Value::Number(n) => n.to_string(),
            other => return Err(ParseError::record(lineno, format!("invalid id {other}"))),
        };
        if id.is_empty() {
            return Err(ParseError::record(lineno, "empty query id"));
        }
        if raw.text.trim().is_empty() {
            return Err(ParseError::record(lineno, "empty query text"));
        }
        let date = parse_date(&raw.date).ok_or_else(|| ParseError::Date {
            line: lineno,
            value: raw.date.clone(),
        })?;
        out.push(QueryEvent {
            id,
            text: raw.text,
            date,
        });
    }
    Ok(out)
}

pub fn write_queries<W: Write>(mut writer: W, queries: &[QueryEvent]) -> std::io::Result<()> {
    for q in queries {
        serde_json::to_writer(&mut writer, q)?;
        writer.write_all(b"\n")?;
    }
    Ok(())
}

/// Parses the tab-separated candidate table. The header row is mandatory.
pub fn parse_candidates<R: BufRead>(reader: R) -> Result<Vec<CandidateTriple>, ParseError> {
    let mut lines = reader.lines().enumerate();
    match lines.next() {
        None => return Ok(Vec::new()),
        Some((_, header)) => {
            let header = header.map_err(|e| ParseError::io(1, e))?;
            let cols: Vec<&str> = header.trim_end_matches('\r').split('\t').collect();
            if cols != CANDIDATE_HEADER {
                return Err(ParseError::record(
                    1,
                    format!("unexpected header, expected `{}`", CANDIDATE_HEADER.join("\\t")),
                ));
            }
        }
    }

    let mut out = Vec::new();
    for (idx, line) in lines {
        let lineno = idx + 1;
        let line = line.map_err(|e| ParseError::io(lineno, e))?;
        let line = line.trim_end_matches('\r');
        if line.is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() != CANDIDATE_HEADER.len() {
            return Err(ParseError::ColumnCount {
                line: lineno,
                expected: CANDIDATE_HEADER.len(),
                found: cols.len(),
            });
        }
        let field = |i: usize| cols[i].trim().to_string();
        for (i, name) in [(0, "id"), (1, "subject"), (2, "predicate"), (5, "object")] {
            if cols[i].trim().is_empty() {
                return Err(ParseError::record(lineno, format!("empty {name}")));
            }
        }
        let date = parse_date(cols[8]).ok_or_else(|| ParseError::Date {
            line: lineno,
            value: cols[8].to_string(),
        })?;
        out.push(CandidateTriple {
            id: field(0),
            subject: field(1),
            predicate: field(2),
            predicate_code: field(3),
            predicate_description: field(4),
            object: field(5),
            city: field(6),
            country: field(7),
            date,
        });
    }
    Ok(out)
}

pub fn write_candidates<W: Write>(
    mut writer: W,
    candidates: &[CandidateTriple],
) -> std::io::Result<()> {
    writeln!(writer, "{}", CANDIDATE_HEADER.join("\t"))?;
    for c in candidates {
        let fields = [
            c.id.as_str(),
            &c.subject,
            &c.predicate,
            &c.predicate_code,
            &c.predicate_description,
            &c.object,
            &c.city,
            &c.country,
        ];
        if fields.iter().any(|f| f.contains(['\t', '\n', '\r'])) {
            return Err(std::io::Error::new(
                std::io::ErrorKind::InvalidData,
                format!("candidate {}: field contains a tab or newline", c.id),
            ));
        }
        writeln!(writer, "{}\t{}", fields.join("\t"), c.date.format("%Y-%m-%d"))?;
    }
    Ok(())
}

/// Builds the banned set used by [`filter_generic`].
///
/// With a code table, each label is resolved to the codes carrying it and
/// candidates are matched by code. Without one, labels are matched against
/// the predicate text.
pub fn banned_actions(labels: &[String], table: Option<&ActionCodeTable>) -> HashSet<String> {
    match table {
        Some(table) => labels
            .iter()
            .flat_map(|l| table.codes_for_label(l).map(str::to_string).collect::<Vec<_>>())
            .collect(),
        None => labels.iter().cloned().collect(),
    }
}

/// Drops candidates whose action code is banned or whose predicate text
/// equals a banned label (case-insensitive). Order is preserved.
pub fn filter_generic(
    candidates: Vec<CandidateTriple>,
    banned: &HashSet<String>,
) -> Vec<CandidateTriple> {
    if banned.is_empty() {
        return candidates;
    }
    let lowered: HashSet<String> = banned.iter().map(|b| b.to_lowercase()).collect();
    candidates
        .into_iter()
        .filter(|c| {
            let by_code = !c.predicate_code.is_empty() && banned.contains(&c.predicate_code);
            let by_label = lowered.contains(&c.predicate.trim().to_lowercase());
            !(by_code || by_label)
        })
        .collect()
}

/// Which field stands in for the predicate in text features.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PredicateSource {
    /// The action text, e.g. "Carry out suicide bombing".
    #[default]
    Gloss,
    /// The action-category code.
    Code,
}

impl CandidateTriple {
    pub fn predicate_text(&self, source: PredicateSource) -> &str {
        match source {
            PredicateSource::Gloss => &self.predicate,
            PredicateSource::Code => &self.predicate_code,
        }
    }
}

/// The candidate serialized as a bag of words; the date is never included.
pub fn candidate_text(c: &CandidateTriple) -> String {
    candidate_text_with(c, PredicateSource::Gloss)
}

pub fn candidate_text_with(c: &CandidateTriple, source: PredicateSource) -> String {
    [
        c.subject.as_str(),
        c.predicate_text(source),
        &c.predicate_description,
        &c.object,
        &c.city,
        &c.country,
    ]
    .iter()
    .flat_map(|f| f.split_whitespace())
    .collect::<Vec<_>>()
    .join(" ")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn date(s: &str) -> NaiveDate {
        NaiveDate::parse_from_str(s, "%Y-%m-%d").unwrap()
    }

    pub(crate) fn c0() -> CandidateTriple {
        CandidateTriple {
            id: "c0".into(),
            subject: "Armed Gang".into(),
            predicate: "Carry out suicide bombing".into(),
            predicate_code: String::new(),
            predicate_description: String::new(),
            object: "Armed rebel".into(),
            city: "Gao".into(),
            country: "Mali".into(),
            date: date("2017-01-17"),
        }
    }

    #[test]
    fn parses_prose_date() {
        let input = r#"{"id": "q0", "text": "A suicide bomber detonates a vehicle full of explosives at a military camp in Gao, Mali", "date": "17 January 2017"}"#;
        let qs = parse_queries(input.as_bytes()).unwrap();
        assert_eq!(qs.len(), 1);
        assert_eq!(qs[0].date, date("2017-01-17"));
    }

    #[test]
    fn date_variants() {
        assert_eq!(parse_date("2017-01-17"), Some(date("2017-01-17")));
        assert_eq!(parse_date("17 Jan. 2017"), Some(date("2017-01-17")));
        assert_eq!(parse_date("20 Jan 2017"), Some(date("2017-01-20")));
        assert_eq!(parse_date("2017-13-40"), None);
        assert_eq!(parse_date("yesterday"), None);
    }

    #[test]
    fn empty_query_stream() {
        assert!(parse_queries(&b""[..]).unwrap().is_empty());
    }

    #[test]
    fn invalid_calendar_date_is_error() {
        let input = "{\"id\":\"q\",\"text\":\"x\",\"date\":\"2017-13-40\"}\n";
        match parse_queries(input.as_bytes()) {
            Err(ParseError::Date { line: 1, .. }) => {}
            other => panic!("expected date error, got {other:?}"),
        }
    }

    #[test]
    fn malformed_record_names_line() {
        let input = "{\"id\":\"q\",\"text\":\"x\",\"date\":\"2017-01-01\"}\nnot json\n";
        let err = parse_queries(input.as_bytes()).unwrap_err();
        assert_eq!(err.line(), Some(2));
    }

    #[test]
    fn parses_table_one_candidate() {
        let input = "id\tsubject\tpredicate\tpredicate_code\tpredicate_description\tobject\tcity\tcountry\tdate\n\
                     c0\tArmed Gang\tCarry out suicide bombing\t\t\tArmed rebel\tGao\tMali\t2017-01-17\n";
        let cs = parse_candidates(input.as_bytes()).unwrap();
        assert_eq!(cs, vec![c0()]);
    }

    #[test]
    fn empty_city_preserved() {
        let input = "id\tsubject\tpredicate\tpredicate_code\tpredicate_description\tobject\tcity\tcountry\tdate\n\
                     c9\tUSA\tHost a visit\t\t\tNarendra Modi\t\tUSA\t20 Jan. 2017\n";
        let cs = parse_candidates(input.as_bytes()).unwrap();
        assert_eq!(cs[0].city, "");
        assert_eq!(cs[0].country, "USA");
        assert_eq!(cs[0].date, date("2017-01-20"));
    }

    #[test]
    fn header_only_and_bad_rows() {
        let header = CANDIDATE_HEADER.join("\t");
        assert!(parse_candidates(format!("{header}\n").as_bytes()).unwrap().is_empty());
        let short = format!("{header}\nc0\ta\tb\n");
        assert!(matches!(
            parse_candidates(short.as_bytes()),
            Err(ParseError::ColumnCount { line: 2, found: 3, .. })
        ));
        let bad_date = format!("{header}\nc0\ta\tb\t\t\tc\t\t\t2017-02-30\n");
        assert!(matches!(parse_candidates(bad_date.as_bytes()), Err(ParseError::Date { .. })));
    }

    #[test]
    fn filter_make_statement() {
        let mut statement = c0();
        statement.id = "c_stmt".into();
        statement.predicate = "Make statement".into();
        let banned: HashSet<String> = ["make STATEMENT".to_string()].into();
        let kept = filter_generic(vec![statement.clone(), c0()], &banned);
        assert_eq!(kept, vec![c0()]);

        assert_eq!(filter_generic(vec![statement.clone(), c0()], &HashSet::new()).len(), 2);
        assert!(filter_generic(vec![statement.clone(), statement], &banned).is_empty());
    }

    #[test]
    fn filter_by_code_table() {
        let table = ActionCodeTable::read("010\tMake statement\n180\tUse unconventional violence\n".as_bytes())
            .unwrap();
        let banned = banned_actions(&["Make statement".into()], Some(&table));
        assert_eq!(banned, HashSet::from(["010".to_string()]));
        let mut coded = c0();
        coded.predicate_code = "010".into();
        coded.predicate = "Say something".into();
        assert!(filter_generic(vec![coded], &banned).is_empty());
        let mut unknown = c0();
        unknown.predicate_code = "999".into();
        assert!(table.validate(&[unknown]).is_err());
    }

    #[test]
    fn candidate_text_table_one() {
        assert_eq!(
            candidate_text(&c0()),
            "Armed Gang Carry out suicide bombing Armed rebel Gao Mali"
        );
        let mut c1 = c0();
        c1.object = "Military".into();
        c1.city = "Bamako".into();
        assert_eq!(
            candidate_text(&c1),
            "Armed Gang Carry out suicide bombing Military Bamako Mali"
        );
        let mut bare = c0();
        bare.subject = "subject".into();
        bare.predicate = "predicate".into();
        bare.object = "object".into();
        bare.city.clear();
        bare.country.clear();
        assert_eq!(candidate_text(&bare), "subject predicate object");
    }
}
