use chrono::NaiveDate;
use newsrank::corpus::{parse_candidates, parse_date, parse_queries, write_candidates, write_queries, CandidateTriple, QueryEvent};
use proptest::prelude::*;

fn date() -> impl Strategy<Value = NaiveDate> {
    (0i64..3000).prop_map(|d| NaiveDate::from_ymd_opt(2010, 1, 1).unwrap() + chrono::Duration::days(d))
}

const WORDS: &str = "[A-Za-z0-9'-]{1,6}( [A-Za-z0-9'-]{1,6}){0,3}";
const MAYBE_WORDS: &str = "([A-Za-z0-9'-]{1,6}( [A-Za-z0-9'-]{1,6}){0,3})?";

fn candidate() -> impl Strategy<Value = CandidateTriple> {
    (
        "[a-z0-9]{1,8}",
        (WORDS, WORDS, "[0-9]{0,3}", MAYBE_WORDS, WORDS),
        (MAYBE_WORDS, MAYBE_WORDS),
        date(),
    )
        .prop_map(|(id, (subject, predicate, predicate_code, predicate_description, object), (city, country), date)| {
            CandidateTriple {
                id,
                subject,
                predicate,
                predicate_code,
                predicate_description,
                object,
                city,
                country,
                date,
            }
        })
}

fn query() -> impl Strategy<Value = QueryEvent> {
    ("[a-z0-9]{1,8}", "[^\\x00-\\x1f]{0,40}[a-z]", date()).prop_map(|(id, text, date)| QueryEvent { id, text, date })
}

proptest! {
    #[test]
    fn candidates_survive_a_round_trip(cs in proptest::collection::vec(candidate(), 0..20)) {
        let mut buf = Vec::new();
        write_candidates(&mut buf, &cs).unwrap();
        prop_assert_eq!(parse_candidates(buf.as_slice()).unwrap(), cs);
    }

    #[test]
    fn queries_survive_a_round_trip(qs in proptest::collection::vec(query(), 0..20)) {
        let mut buf = Vec::new();
        write_queries(&mut buf, &qs).unwrap();
        prop_assert_eq!(parse_queries(buf.as_slice()).unwrap(), qs);
    }

    #[test]
    fn prose_dates_normalize(d in date()) {
        for form in [d.format("%d %B %Y"), d.format("%d %b. %Y"), d.format("%B %d, %Y")] {
            prop_assert_eq!(parse_date(&form.to_string()), Some(d));
        }
    }
}

#[test]
fn malformed_rows_report_their_line() {
    let text = "id\tsubject\tpredicate\tpredicate_code\tpredicate_description\tobject\tcity\tcountry\tdate\n\
                c1\tA\tB\t\t\tC\tX\tY\t2017-01-17\n\
                c2\tA\tB\t\t\tC\tX\t2017-01-17\n";
    let err = parse_candidates(text.as_bytes()).unwrap_err();
    assert_eq!(err.line(), Some(3));
    let err = parse_queries("{\"id\":\"q\",\"text\":\"t\",\"date\":\"someday\"}\n".as_bytes()).unwrap_err();
    assert_eq!(err.line(), Some(1));
}
