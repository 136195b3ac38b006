//! Synthetic corpora and helpers shared by the integration tests.
#![allow(dead_code)]

pub mod mock;

use std::collections::BTreeSet;
use std::io::Write;
use std::path::Path;

use pareto_core::{Passage, Query};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const CONSONANTS: &[u8] = b"bdfgklmnprstvz";
const VOWELS: &[u8] = b"aeiou";

/// `n` distinct six-letter lowercase words. Equal length means no word is a
/// substring of another, so answer containment only matches whole words.
pub fn words(n: usize, seed: u64, exclude: &BTreeSet<String>) -> Vec<String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut seen = exclude.clone();
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let mut w = String::with_capacity(6);
        for _ in 0..3 {
            w.push(CONSONANTS[rng.gen_range(0..CONSONANTS.len())] as char);
            w.push(VOWELS[rng.gen_range(0..VOWELS.len())] as char);
        }
        if seen.insert(w.clone()) {
            out.push(w);
        }
    }
    out
}

pub fn capitalize(w: &str) -> String {
    let mut c = w.chars();
    match c.next() {
        Some(f) => f.to_ascii_uppercase().to_string() + c.as_str(),
        None => String::new(),
    }
}

/// Joins `words` into a capitalized sentence ending in '.'.
pub fn sentence(words: &[&str]) -> String {
    let mut s = capitalize(words[0]);
    for w in &words[1..] {
        s.push(' ');
        s.push_str(w);
    }
    s.push('.');
    s
}

pub fn write_corpus(path: &Path, passages: &[Passage]) {
    let mut f = std::fs::File::create(path).unwrap();
    for p in passages {
        let line = serde_json::json!({"id": p.id, "title": p.title, "text": p.text});
        writeln!(f, "{line}").unwrap();
    }
}

pub fn write_queries(path: &Path, queries: &[Query]) {
    let mut f = std::fs::File::create(path).unwrap();
    for q in queries {
        let line = serde_json::json!({"id": q.id, "question": q.question, "answers": q.answers});
        writeln!(f, "{line}").unwrap();
    }
}

/// Token-accounting corpus: 1,000 passages, 610 of three sentences and 390
/// of four, 3,390 sentences of 23 or 24 words. Totals: 80,860 words, so
/// 80.86 words per passage and 80,860 / 3,390 = 23.85 per sentence.
pub fn token_budget_corpus(seed: u64) -> (Vec<Passage>, Vec<Query>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let vocab = words(3000, seed ^ 0x5eed, &BTreeSet::new());
    let mut sentence_counts: Vec<usize> = [3usize; 610].into_iter().chain([4usize; 390]).collect();
    sentence_counts.shuffle(&mut rng);
    let total: usize = sentence_counts.iter().sum();
    assert_eq!(total, 3390);
    // 500 sentences of 23 words, 2,890 of 24.
    let mut lengths: Vec<usize> = std::iter::repeat_n(23, 500).chain(std::iter::repeat_n(24, 2890)).collect();
    lengths.shuffle(&mut rng);

    let mut next_len = lengths.into_iter();
    let passages: Vec<Passage> = sentence_counts
        .iter()
        .enumerate()
        .map(|(i, &n)| {
            let text = (0..n)
                .map(|_| {
                    let len = next_len.next().unwrap();
                    let ws: Vec<&str> = (0..len).map(|_| vocab[rng.gen_range(0..vocab.len())].as_str()).collect();
                    sentence(&ws)
                })
                .collect::<Vec<_>>()
                .join(" ");
            Passage::new(format!("p{i:04}"), "", text)
        })
        .collect();
    let queries = (0..50)
        .map(|i| {
            let ws: Vec<&str> = (0..5).map(|_| vocab[rng.gen_range(0..vocab.len())].as_str()).collect();
            Query {
                id: format!("q{i:02}"),
                question: ws.join(" ") + "?",
                answers: vec![],
            }
        })
        .collect();
    (passages, queries)
}

pub const BURIED_TOPICS: usize = 6;
pub const BURIED_PER_TOPIC: usize = 10;
pub const BURIED_DISTRACTORS: usize = 6;
pub const BRIDGE_COMPETITORS: usize = 11;

/// Buried-core corpus.
///
/// Every passage has one gold sentence `"<Entity> won <Prize>."` among six
/// distractor sentences; every distractor carries its passage's topic word
/// and one also names the entity. Query `i` asks about entity `i` together
/// with the topic word of a *different* topic, so whole passages of that
/// topic outscore the diluted gold passage, while the short gold sentence
/// still outscores each distractor sentence.
///
/// One extra "bridge" passage comes last. Its gold sentence
/// `"The bridge was built in 1932."` has word-for-word twins (other years)
/// in eleven earlier passages; only the gold passage's context names the
/// river the query asks about. Core-only scoring ties all twelve and the
/// row tie-break puts the gold one last, outside the top ten.
pub fn buried_core_corpus() -> (Vec<Passage>, Vec<Query>) {
    let n = BURIED_TOPICS * BURIED_PER_TOPIC;
    let vocab = words(n * 2 + BURIED_TOPICS + 600 + 8, 0xb0b, &BTreeSet::new());
    let (entities, rest) = vocab.split_at(n);
    let (prizes, rest) = rest.split_at(n);
    let (topics, rest) = rest.split_at(BURIED_TOPICS);
    let (filler, rest) = rest.split_at(600);
    let extra = rest;
    let mut rng = ChaCha8Rng::seed_from_u64(0xfeed);

    let distractor = |rng: &mut ChaCha8Rng, topic: &str, mention: Option<&str>| {
        let mut ws: Vec<&str> = (0..8).map(|_| filler[rng.gen_range(0..filler.len())].as_str()).collect();
        ws.insert(rng.gen_range(1..ws.len()), topic);
        if let Some(m) = mention {
            ws.insert(rng.gen_range(1..ws.len()), m);
        }
        sentence(&ws)
    };

    let mut passages = Vec::new();
    let mut queries = Vec::new();
    for t in 0..BURIED_TOPICS {
        for m in 0..BURIED_PER_TOPIC {
            let i = t * BURIED_PER_TOPIC + m;
            let gold = format!("{} won {}.", capitalize(&entities[i]), capitalize(&prizes[i]));
            let gold_at = rng.gen_range(0..=BURIED_DISTRACTORS);
            let mention_at = (gold_at + 1 + rng.gen_range(0..BURIED_DISTRACTORS)) % (BURIED_DISTRACTORS + 1);
            let mut sentences = Vec::new();
            for s in 0..=BURIED_DISTRACTORS {
                if s == gold_at {
                    sentences.push(gold.clone());
                } else if s == mention_at {
                    sentences.push(distractor(&mut rng, &topics[t], Some(&entities[i])));
                } else {
                    sentences.push(distractor(&mut rng, &topics[t], None));
                }
            }
            passages.push(Passage::new(format!("t{t}m{m}"), "", sentences.join(" ")));
            let other = &topics[(t + 1) % BURIED_TOPICS];
            queries.push(Query {
                id: format!("q{i:02}"),
                question: format!("Which award did {} receive for {}?", capitalize(&entities[i]), other),
                answers: vec![capitalize(&prizes[i])],
            });
        }
    }

    // Bridge twins replace one distractor in eleven passages spread over the
    // topics (never the mention sentence, never the gold sentence).
    for c in 0..BRIDGE_COMPETITORS {
        let p = &mut passages[c * 5 + 2];
        let sentences: Vec<String> = pareto_core::segment(&p.text).unwrap().into_iter().map(String::from).collect();
        let slot = sentences
            .iter()
            .position(|s| !s.contains(" won ") && !entities.iter().any(|e| s.to_lowercase().contains(e.as_str())))
            .unwrap();
        let mut sentences = sentences;
        sentences[slot] = format!("The bridge was built in {}.", 1900 + c);
        p.text = sentences.join(" ");
    }
    let river = capitalize(&extra[0]);
    let mut bridge = vec!["The bridge was built in 1932.".to_string()];
    bridge.push(format!("The {river} {} past {}.", extra[1], extra[2]));
    for _ in 1..BURIED_DISTRACTORS {
        bridge.push(distractor(&mut rng, &topics[0], None));
    }
    passages.push(Passage::new("bridge", "", bridge.join(" ")));
    queries.push(Query {
        id: "bridge".into(),
        question: format!("When was the bridge over the {river} built?"),
        answers: vec!["1932".into()],
    });
    (passages, queries)
}

/// `rows` random `dim`-vectors with components in [-1, 1), row-major.
pub fn random_rows(rng: &mut ChaCha8Rng, rows: usize, dim: usize) -> Vec<f32> {
    (0..rows * dim).map(|_| rng.gen_range(-1.0f32..1.0)).collect()
}

/// Random passage text exercising the segmenter: abbreviations, decimals,
/// closing quotes and brackets, mixed terminals and irregular whitespace.
pub fn messy_passage(rng: &mut ChaCha8Rng) -> String {
    const WORDS: &[&str] = &[
        "river", "Paris", "the", "Dr.", "Mr.", "e.g.", "U.S.", "3.14", "2,000", "(see", "note)", "\"quoted\"",
        "etc.", "vs.", "42", "alpha", "Beta", "über", "naïve", "x", "St.", "Fig.", "No.",
    ];
    const ENDS: &[&str] = &[".", "!", "?", "?!", "...", ".\"", "!)", ".'"];
    const GAPS: &[&str] = &[" ", "  ", "\t", "\n", " \n "];
    let sentences = rng.gen_range(1..=6);
    let mut text = String::new();
    if rng.gen_bool(0.2) {
        text.push_str(GAPS[rng.gen_range(0..GAPS.len())]);
    }
    for s in 0..sentences {
        if s > 0 {
            text.push_str(GAPS[rng.gen_range(0..GAPS.len())]);
        }
        let first = if rng.gen_bool(0.8) {
            capitalize(WORDS[rng.gen_range(0..WORDS.len())])
        } else {
            rng.gen_range(1..2000).to_string()
        };
        text.push_str(&first);
        for _ in 0..rng.gen_range(0..10) {
            text.push_str(GAPS[rng.gen_range(0..GAPS.len())]);
            text.push_str(WORDS[rng.gen_range(0..WORDS.len())]);
        }
        if rng.gen_bool(0.9) {
            text.push_str(ENDS[rng.gen_range(0..ENDS.len())]);
        }
    }
    text
}

pub fn collapse_ws(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}
