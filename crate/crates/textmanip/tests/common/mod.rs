//! Synthetic corpus and embeddings shared by the integration tests.
//!
//! The vocabulary has 100 clusters of ten words. Each cluster holds a root
//! word, three clitic forms of it (و+root, ب+root, root+ه) and six related
//! words. Roots and related words are spelled from disjoint letter sets, so
//! clitic forms sit above the ratio threshold and related words well below
//! it. In vector space the clitic forms are closest to their root, the
//! related words next.
//!
//! Sentences mix function words (not manipulated) with one or two roots and
//! sometimes a number. Only roots appear in human text, so a character
//! n-gram model can learn to spot substitutions.

#![allow(dead_code)]

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const DIM: usize = 16;
pub const CLUSTERS: usize = 100;
pub const SENTENCES: usize = 500;

const ROOT_LETTERS: &[char] = &['ت', 'ث', 'ج', 'ح', 'خ', 'د', 'ذ', 'ر', 'ز', 'م'];
const RELATED_LETTERS: &[char] = &['س', 'ش', 'ص', 'ض', 'ط', 'ظ', 'ع', 'غ', 'ف', 'ق'];
const FUNCTION_WORDS: &[&str] = &["في", "من", "على", "الى", "عن", "مع", "لكن", "ثم"];

pub struct Cluster {
    pub root: String,
    pub tag: &'static str,
    pub clitics: [String; 3],
    pub related: Vec<String>,
}

pub struct Toy {
    pub clusters: Vec<Cluster>,
    /// `(surface, tag)` per token.
    pub sentences: Vec<Vec<(String, String)>>,
    /// `(word, vector)` rows.
    pub vectors: Vec<(String, Vec<f32>)>,
}

fn word(rng: &mut ChaCha8Rng, letters: &[char], taken: &mut BTreeSet<String>) -> String {
    loop {
        let len = rng.random_range(4..=6);
        let w: String = (0..len).map(|_| letters[rng.random_range(0..letters.len())]).collect();
        if taken.insert(w.clone()) {
            return w;
        }
    }
}

fn unit(rng: &mut ChaCha8Rng) -> Vec<f32> {
    let v: Vec<f32> = (0..DIM).map(|_| rng.random_range(-1.0f32..1.0)).collect();
    let n = v.iter().map(|x| x * x).sum::<f32>().sqrt();
    v.into_iter().map(|x| x / n).collect()
}

fn jitter(rng: &mut ChaCha8Rng, center: &[f32], scale: f32) -> Vec<f32> {
    center.iter().map(|c| c + scale * rng.random_range(-1.0f32..1.0)).collect()
}

pub fn toy(seed: u64) -> Toy {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut taken = BTreeSet::new();
    let mut clusters = Vec::new();
    let mut vectors = Vec::new();
    for c in 0..CLUSTERS {
        let root = word(&mut rng, ROOT_LETTERS, &mut taken);
        let clitics = [format!("و{root}"), format!("ب{root}"), format!("{root}ه")];
        let related: Vec<String> = (0..6).map(|_| word(&mut rng, RELATED_LETTERS, &mut taken)).collect();
        let center = unit(&mut rng);
        vectors.push((root.clone(), center.clone()));
        for w in &clitics {
            vectors.push((w.clone(), jitter(&mut rng, &center, 0.02)));
        }
        for w in &related {
            vectors.push((w.clone(), jitter(&mut rng, &center, 0.12)));
        }
        let tag = if c % 2 == 0 { "N_PROP" } else { "ADJ" };
        clusters.push(Cluster { root, tag, clitics, related });
    }
    let mut sentences = Vec::new();
    for _ in 0..SENTENCES {
        let mut toks: Vec<(String, String)> = Vec::new();
        let n = rng.random_range(6..=10);
        let roots = rng.random_range(1..=2);
        let mut slots: Vec<usize> = (0..n).collect();
        let mut root_at = BTreeSet::new();
        while root_at.len() < roots {
            root_at.insert(slots.remove(rng.random_range(0..slots.len())));
        }
        let number_at = if rng.random_bool(0.3) { Some(slots[rng.random_range(0..slots.len())]) } else { None };
        for i in 0..n {
            if root_at.contains(&i) {
                let c = &clusters[rng.random_range(0..CLUSTERS)];
                toks.push((c.root.clone(), c.tag.into()));
            } else if number_at == Some(i) {
                toks.push((rng.random_range(10..1000).to_string(), "N_NUM".into()));
            } else {
                toks.push((FUNCTION_WORDS[rng.random_range(0..FUNCTION_WORDS.len())].into(), "PREP".into()));
            }
        }
        sentences.push(toks);
    }
    Toy { clusters, sentences, vectors }
}

impl Toy {
    pub fn corpus_text(&self) -> String {
        let mut out = String::new();
        for (i, s) in self.sentences.iter().enumerate() {
            writeln!(out, "# sent_id = toy{i:04}").unwrap();
            for (w, t) in s {
                writeln!(out, "{w}\t{t}").unwrap();
            }
            out.push('\n');
        }
        out
    }

    pub fn vectors_text(&self) -> String {
        let mut out = format!("{} {}\n", self.vectors.len(), DIM);
        for (w, v) in &self.vectors {
            out.push_str(w);
            for x in v {
                write!(out, " {x}").unwrap();
            }
            out.push('\n');
        }
        out
    }

    /// Writes `corpus.tsv` and `vectors.vec` into `dir`.
    pub fn write(&self, dir: &Path) -> (PathBuf, PathBuf) {
        let corpus = dir.join("corpus.tsv");
        let vectors = dir.join("vectors.vec");
        std::fs::write(&corpus, self.corpus_text()).unwrap();
        std::fs::write(&vectors, self.vectors_text()).unwrap();
        (corpus, vectors)
    }
}

pub fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_textmanip")
}

/// Runs the binary with `TEXTMANIP_DATA_DIR` cleared.
pub fn run(args: &[&str]) -> std::process::Output {
    std::process::Command::new(bin())
        .args(args)
        .env_remove("TEXTMANIP_DATA_DIR")
        .env("RUST_LOG", "warn")
        .output()
        .unwrap()
}

pub fn run_ok(args: &[&str]) -> std::process::Output {
    let out = run(args);
    assert!(
        out.status.success(),
        "textmanip {args:?} failed\nstdout: {}\nstderr: {}",
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

pub fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}
