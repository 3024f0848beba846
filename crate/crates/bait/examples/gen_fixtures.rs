//! Writes the synthetic desk-scale corpus under `tests/fixtures/desk`:
//! FNC-style CSVs plus SIM-16 / NLI-32 embedding stores and a sidecar.
//!
//! Each topic has a SIM direction and an NLI direction. A headline sits
//! near both directions of its topic. A body mixes on-topic sentences with
//! noise; in NLI space its on-topic sentences point along the topic
//! direction (agree), against it (disagree) or elsewhere (discuss).
//! Related pairs share a topic and take the body's stance; unrelated pairs
//! cross topics.
//!
//! ```text
//! cargo run -p bait --example gen_fixtures
//! ```

use std::path::PathBuf;

use bait::corpus::{write_bodies_csv, write_sidecar, write_stances_csv, HeadlineTable};
use bait::dataset::StoreSet;
use bait_core::data::{EmbeddingSpace, EmbeddingStore, StanceLabel, TextUnit};
use bait_core::nn::Matrix;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const SEED: u64 = 20_240_601;
const SIM: usize = 16;
const NLI: usize = 32;
const TOPICS: usize = 100;
const BODIES_PER_TOPIC: usize = 3;
const HEADLINES_PER_TOPIC: usize = 4;
const UNRELATED_PER_HEADLINE: usize = 8;
const BODY_ID_BASE: u32 = 1000;

fn gaussian(rng: &mut ChaCha8Rng, dim: usize) -> Vec<f32> {
    // Box-Muller keeps the generator dependency-free.
    (0..dim)
        .map(|_| {
            let u: f64 = rng.gen_range(f64::EPSILON..1.0);
            let v: f64 = rng.gen();
            ((-2.0 * u.ln()).sqrt() * (std::f64::consts::TAU * v).cos()) as f32
        })
        .collect()
}

fn unit(mut v: Vec<f32>) -> Vec<f32> {
    let n = v.iter().map(|x| x * x).sum::<f32>().sqrt();
    v.iter_mut().for_each(|x| *x /= n);
    v
}

fn noisy(rng: &mut ChaCha8Rng, center: &[f32], scale: f32) -> Vec<f32> {
    let noise = unit(gaussian(rng, center.len()));
    center.iter().zip(noise).map(|(c, n)| c + scale * n).collect()
}

fn main() {
    let out = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/desk");
    std::fs::create_dir_all(out.join("stores")).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);

    let sim_dirs: Vec<Vec<f32>> = (0..TOPICS).map(|_| unit(gaussian(&mut rng, SIM))).collect();
    let nli_dirs: Vec<Vec<f32>> = (0..TOPICS).map(|_| unit(gaussian(&mut rng, NLI))).collect();

    let mut sim_head = EmbeddingStore::new(EmbeddingSpace::Sim, TextUnit::Head, SIM);
    let mut nli_head = EmbeddingStore::new(EmbeddingSpace::Nli, TextUnit::Head, NLI);
    let mut sim_body = EmbeddingStore::new(EmbeddingSpace::Sim, TextUnit::Body, SIM);
    let mut nli_body = EmbeddingStore::new(EmbeddingSpace::Nli, TextUnit::Body, NLI);
    let mut headlines = HeadlineTable::default();
    let mut bodies = Vec::new();
    let mut body_stance = Vec::new();

    for t in 0..TOPICS {
        for b in 0..BODIES_PER_TOPIC {
            let id = BODY_ID_BASE + (t * BODIES_PER_TOPIC + b) as u32;
            let r: f64 = rng.gen();
            let stance = if r < 0.27 {
                StanceLabel::Agree
            } else if r < 0.345 {
                StanceLabel::Disagree
            } else {
                StanceLabel::Discuss
            };
            // One empty body and one over the 50-sentence cap.
            let n = match id {
                1007 => 0,
                1011 => 57,
                _ => rng.gen_range(2..=14),
            };
            let elsewhere = unit(gaussian(&mut rng, NLI));
            let (mut s_rows, mut n_rows) = (Vec::new(), Vec::new());
            for _ in 0..n {
                if rng.gen_bool(0.5) {
                    s_rows.extend(noisy(&mut rng, &sim_dirs[t], 0.6));
                    let center: Vec<f32> = match stance {
                        StanceLabel::Agree => nli_dirs[t].clone(),
                        StanceLabel::Disagree => nli_dirs[t].iter().map(|x| -x).collect(),
                        _ => elsewhere.clone(),
                    };
                    n_rows.extend(noisy(&mut rng, &center, 0.6));
                } else {
                    s_rows.extend(unit(gaussian(&mut rng, SIM)));
                    n_rows.extend(unit(gaussian(&mut rng, NLI)));
                }
            }
            sim_body.insert(id, Matrix::from_vec(n, SIM, s_rows).unwrap()).unwrap();
            nli_body.insert(id, Matrix::from_vec(n, NLI, n_rows).unwrap()).unwrap();
            let text = (0..n).map(|i| format!("Sentence {i} of body {id} on topic {t}.")).collect::<Vec<_>>().join(" ");
            bodies.push((id, text));
            body_stance.push((id, t, stance));
        }
        for h in 0..HEADLINES_PER_TOPIC {
            let id = headlines.intern(&format!("Topic {t} claim {h}"));
            sim_head.insert(id, Matrix::row_vector(noisy(&mut rng, &sim_dirs[t], 0.4))).unwrap();
            nli_head.insert(id, Matrix::row_vector(noisy(&mut rng, &nli_dirs[t], 0.4))).unwrap();
        }
    }

    let mut samples = Vec::new();
    for t in 0..TOPICS {
        for h in 0..HEADLINES_PER_TOPIC {
            let hid = (t * HEADLINES_PER_TOPIC + h) as u32;
            for &(bid, bt, stance) in &body_stance {
                if bt == t {
                    samples.push((hid, bid, stance));
                }
            }
            let others: Vec<u32> = body_stance.iter().filter(|b| b.1 != t).map(|b| b.0).collect();
            for &bid in others.choose_multiple(&mut rng, UNRELATED_PER_HEADLINE) {
                samples.push((hid, bid, StanceLabel::Unrelated));
            }
        }
    }
    samples.shuffle(&mut rng);

    write_stances_csv(
        out.join("stances.csv"),
        samples.iter().map(|&(h, b, s)| (headlines.text(h).unwrap(), b, Some(s))),
    )
    .unwrap();
    write_bodies_csv(out.join("bodies.csv"), bodies.iter().map(|(id, t)| (*id, t.as_str()))).unwrap();
    StoreSet { sim_head, nli_head, sim_body, nli_body }.write(out.join("stores")).unwrap();
    write_sidecar(out.join("stores").join(StoreSet::SIDECAR), &headlines).unwrap();
    println!("{} samples, {} headlines, {} bodies -> {}", samples.len(), headlines.len(), bodies.len(), out.display());
}
