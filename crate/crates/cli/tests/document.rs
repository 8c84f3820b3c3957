use l1fit::{PenaltyInterval, SolutionPath, UpperBound};
use l1fit_cli::PathDocument;
use proptest::prelude::*;

fn any_finite() -> impl Strategy<Value = f64> {
    prop_oneof![
        any::<f64>().prop_filter("finite", |x| x.is_finite()),
        -1e3..1e3f64,
        Just(0.0),
        Just(-0.0),
        Just(f64::MIN_POSITIVE),
        Just(f64::MAX),
    ]
}

fn path(m: usize) -> impl Strategy<Value = SolutionPath> {
    let interval = (
        any_finite(),
        prop::collection::vec(any_finite(), m),
        prop::option::of(0..m),
        any_finite(),
        any_finite(),
    );
    (
        prop::collection::vec(interval, 1..6),
        prop::collection::vec((any_finite(), prop::option::of(any_finite())), 0..3),
    )
        .prop_map(|(raw, ambiguous)| {
            let k = raw.len();
            let los: Vec<f64> = raw.iter().map(|r| r.0).collect();
            let intervals = raw
                .into_iter()
                .enumerate()
                .map(|(i, (lo, v_star, preserved, error_intercept, l1_slope))| PenaltyInterval {
                    lo,
                    hi: if i + 1 < k { UpperBound::Finite(los[i + 1]) } else { UpperBound::Unbounded },
                    v_star,
                    preserved,
                    error_intercept,
                    l1_slope,
                })
                .collect();
            let multi_crossing = ambiguous
                .into_iter()
                .map(|(lo, hi)| (lo, hi.map_or(UpperBound::Unbounded, UpperBound::Finite)))
                .collect();
            SolutionPath { intervals, multi_crossing }
        })
}

fn bits(p: &SolutionPath) -> Vec<u64> {
    let bound = |b: UpperBound| b.finite().map_or(u64::MAX, f64::to_bits);
    let mut out = Vec::new();
    for iv in &p.intervals {
        out.push(iv.lo.to_bits());
        out.push(bound(iv.hi));
        out.extend(iv.v_star.iter().map(|x| x.to_bits()));
        out.push(iv.preserved.map_or(u64::MAX, |x| x as u64));
        out.push(iv.error_intercept.to_bits());
        out.push(iv.l1_slope.to_bits());
    }
    for &(lo, hi) in &p.multi_crossing {
        out.push(lo.to_bits());
        out.push(bound(hi));
    }
    out
}

proptest! {
    #[test]
    fn round_trip_is_lossless(p in (2usize..6).prop_flat_map(path), n in 1usize..100) {
        let doc = PathDocument::new(&p, n, "abc".into());
        let parsed = PathDocument::from_json(&doc.to_json()).unwrap();
        prop_assert_eq!(&parsed, &doc);
        prop_assert_eq!(bits(&parsed.to_path()), bits(&p));
    }
}

#[test]
fn rejects_out_of_range_preserved() {
    let text = r#"{"schema_version":1,"fingerprint":"x","n":1,"m":2,
        "intervals":[{"lo":0,"hi":"inf","preserved":0,"v":[1,0],"error_intercept":0,"l1_slope":1}]}"#;
    assert!(PathDocument::from_json(text).is_err());
    let text = text.replace("\"preserved\":0", "\"preserved\":2");
    assert!(PathDocument::from_json(&text).is_ok());
    assert!(PathDocument::from_json(&text.replace("\"inf\"", "\"infinity\"")).is_err());
}
