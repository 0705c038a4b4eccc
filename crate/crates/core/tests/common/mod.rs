#![allow(dead_code)]

pub mod oracle;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rhem::events::{validate_stream, AuthorId, EventStream, Interner, PaperId, PublicationEvent};
use rhem::sampling::{HyperedgeInstance, InstanceTable, StratumKey};

/// Builds a validated stream from labelled events.
pub fn stream(events: &[(f64, &str, &[&str], &[&str])]) -> EventStream {
    let mut a = Interner::new();
    let mut p = Interner::new();
    let evs = events
        .iter()
        .map(|(t, paper, authors, refs)| {
            let au = authors.iter().map(|s| AuthorId(a.intern(s))).collect();
            let focal = PaperId(p.intern(paper));
            let r = refs.iter().map(|s| PaperId(p.intern(s))).collect();
            PublicationEvent::new(*t, focal, au, r)
        })
        .collect();
    validate_stream(evs, a, p).unwrap()
}

pub fn author(s: &EventStream, name: &str) -> AuthorId {
    AuthorId(s.author_labels().get(name).expect("known author"))
}

pub fn paper(s: &EventStream, name: &str) -> PaperId {
    PaperId(s.paper_labels().get(name).expect("known paper"))
}

/// Random small stream: up to `max_events` events over `n_authors` authors
/// and `n_papers` papers, integer times in `0..6` (ties likely). References
/// may point at papers published later in the stream.
pub fn random_stream(seed: u64, max_events: usize, n_authors: u32, n_papers: u32) -> EventStream {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n_events = rng.gen_range(1..=max_events.min(n_papers as usize));
    let mut focal: Vec<u32> = (0..n_papers).collect();
    focal.shuffle(&mut rng);
    let mut a = Interner::new();
    let mut p = Interner::new();
    for i in 0..n_authors {
        a.intern(&format!("i{i}"));
    }
    for j in 0..n_papers {
        p.intern(&format!("j{j}"));
    }
    let mut times: Vec<f64> = (0..n_events).map(|_| f64::from(rng.gen_range(0..6u8))).collect();
    times.sort_by(f64::total_cmp);
    let events = (0..n_events)
        .map(|m| {
            let k = rng.gen_range(1..=3usize.min(n_authors as usize));
            let mut authors: Vec<u32> = (0..n_authors).collect();
            authors.shuffle(&mut rng);
            let others: Vec<u32> = (0..n_papers).filter(|&x| x != focal[m]).collect();
            let l = rng.gen_range(1..=4usize.min(others.len()));
            let refs: Vec<PaperId> = others.choose_multiple(&mut rng, l).map(|&x| PaperId(x)).collect();
            PublicationEvent::new(
                times[m],
                PaperId(focal[m]),
                authors[..k].iter().map(|&x| AuthorId(x)).collect(),
                refs,
            )
        })
        .collect();
    validate_stream(events, a, p).unwrap()
}

/// Random instance table: `q` controls per event, covariates uniform on
/// `(-1, 1)` with the case shifted up on the first column. Consecutive
/// events share a stratum with probability `tie_rate`.
pub fn random_table(seed: u64, n_events: usize, q: usize, p: usize, tie_rate: f64) -> InstanceTable {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut instances = Vec::new();
    let mut time = 0.0;
    for m in 0..n_events {
        if m == 0 || rng.gen::<f64>() >= tie_rate {
            time += 1.0;
        }
        let stratum = StratumKey {
            time,
            n_authors: 2,
            n_refs: Some(3),
        };
        for c in 0..=q {
            instances.push(HyperedgeInstance {
                event_index: m,
                stratum,
                is_case: c == 0,
                n_authors: 2,
                n_refs: 3,
                covariates: (0..p)
                    .map(|k| rng.gen_range(-1.0..1.0) + if c == 0 && k == 0 { 0.5 } else { 0.0 })
                    .collect(),
            });
        }
    }
    InstanceTable {
        columns: (0..p).map(|k| format!("x{k}")).collect(),
        instances,
    }
}

/// Prints one acceptance line and fails the test when `ok` is false.
pub fn report(criterion: &str, ok: bool, detail: &str) {
    println!("[{}] {criterion}: {detail}", if ok { "PASS" } else { "FAIL" });
    assert!(ok, "{criterion} failed: {detail}");
}
