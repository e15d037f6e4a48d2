use cslab::corpus::{parse_tokens, TaggedToken};
use cslab::metrics::{align, csba, wer, EditOp};
use proptest::prelude::*;

/// Every sequence over `alphabet` of length at most `max`.
fn sequences(alphabet: &[char], max: usize) -> Vec<Vec<char>> {
    let mut all = vec![Vec::new()];
    let mut frontier = vec![Vec::new()];
    for _ in 0..max {
        let mut next = Vec::new();
        for s in &frontier {
            for &c in alphabet {
                let mut t: Vec<char> = s.clone();
                t.push(c);
                next.push(t);
            }
        }
        all.extend(next.iter().cloned());
        frontier = next;
    }
    all
}

/// Plain recursive edit distance, no table.
fn brute_distance(a: &[char], b: &[char]) -> u64 {
    match (a.split_first(), b.split_first()) {
        (None, _) => b.len() as u64,
        (_, None) => a.len() as u64,
        (Some((x, ra)), Some((y, rb))) => {
            let sub = brute_distance(ra, rb) + u64::from(x != y);
            let del = brute_distance(ra, b) + 1;
            let ins = brute_distance(a, rb) + 1;
            sub.min(del).min(ins)
        }
    }
}

fn strings(s: &[char]) -> Vec<String> {
    s.iter().map(|c| c.to_string()).collect()
}

#[test]
fn alignment_distance_matches_recursion_exhaustively() {
    let all = sequences(&['a', 'b', 'c'], 5);
    assert_eq!(all.len(), 364);
    for r in &all {
        let rs = strings(r);
        for h in &all {
            let hs = strings(h);
            let al = align(&rs, &hs);
            let want = brute_distance(r, h);
            assert_eq!(al.distance(), want, "{r:?} vs {h:?}");
            assert_eq!(al.counts().errors(), want);
        }
    }
}

#[test]
fn csba_is_one_for_identity_and_zero_when_switch_words_change() {
    let reference =
        parse_tokens("hello_E sawubona_Z unjani_Z today_E fine_E ngiyabonga_Z").unwrap();
    let al = align(&reference, &reference);
    assert_eq!(csba(&reference, &al), Some(1.0));

    // Replace every word that sits next to a language switch.
    let n = reference.len();
    let at_switch: Vec<bool> = (0..n)
        .map(|i| {
            (i > 0 && reference[i - 1].lang() != reference[i].lang())
                || (i + 1 < n && reference[i + 1].lang() != reference[i].lang())
        })
        .collect();
    let hyp: Vec<String> = reference
        .iter()
        .zip(&at_switch)
        .map(|(t, &s)| {
            if s {
                format!("{}x", t.surface())
            } else {
                t.surface().to_string()
            }
        })
        .collect();
    let al = align(&reference, &hyp);
    assert_eq!(csba(&reference, &al), Some(0.0));
    assert!(al
        .ops
        .iter()
        .all(|op| matches!(op, EditOp::Match { .. } | EditOp::Substitution { .. })));
}

#[test]
fn monolingual_reference_has_no_csba() {
    let reference = parse_tokens("a_E b_E c_E").unwrap();
    assert_eq!(csba(&reference, &align(&reference, &reference)), None);
}

fn tagged(max: usize) -> impl Strategy<Value = Vec<TaggedToken>> {
    let token = (0..4u8, prop::bool::ANY).prop_map(|(w, e)| {
        let lang = if e { "E" } else { "Z" };
        parse_tokens(&format!("w{w}_{lang}")).unwrap().remove(0)
    });
    prop::collection::vec(token, 1..=max)
}

proptest! {
    #[test]
    fn counts_add_up(reference in tagged(8), hyp in prop::collection::vec(0..4u8, 0..8)) {
        let hyp: Vec<String> = hyp.iter().map(|w| format!("w{w}")).collect();
        let al = align(&reference, &hyp);
        let c = al.counts();
        prop_assert_eq!(c.ref_len, reference.len() as u64);
        prop_assert_eq!(c.ref_len - c.del + c.ins, hyp.len() as u64);
        let rate = wer(&reference, &hyp).unwrap();
        prop_assert!((rate - c.errors() as f64 / c.ref_len as f64).abs() < 1e-12);
    }
}
