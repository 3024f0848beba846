//! Acceptance criteria 1–9, one line each.
//!
//! Criterion 5 needs the real corpora: point `BAIT_FNC1_DIR` at a directory
//! holding `train_stances.csv`, `train_bodies.csv`,
//! `competition_test_stances.csv` and `competition_test_bodies.csv`, and
//! `BAIT_ARC_CSV` at an ARC export (`topic,post,claim,opposing_claim,support`).
//! Without them that criterion reports SKIP.

use std::collections::BTreeMap;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use bait::commands::{cmd_eval, cmd_train};
use bait::config::RunConfig;
use bait::corpus::{load_arc_csv, load_bodies_csv, load_stances_csv, write_stances_csv, Stances};
use bait::lexicon::{load_lm, load_parses, load_wordnet};
use bait_core::augment::arc::adapt_arc;
use bait_core::augment::{balanced_class_weights, negate_headline, WordNetIndex};
use bait_core::data::{
    class_distribution, headline_split, pad_truncate_body, PaddedBody, PairEmbeddings, SamplePair, StanceLabel,
};
use bait_core::hpo::{expected_improvement, tune, Config, GpHyper, GpState, ParamKind, ParamSpec, SearchSpace};
use bait_core::model::{Classifier, ModelConfig, ModelKind};
use bait_core::nn::{multihead_attention, AttentionParams, Matrix, Mode, Tape};
use bait_core::pipeline::fnc_score;
use bait_core::relatednet::{RelatedNet, RelatedNetConfig};
use bait_core::stage2::{AgreemNet, AgreemNetConfig, TopKNet, TopKNetConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

enum Outcome {
    Pass(String),
    Fail(String),
    Skip(String),
}

type Check = std::result::Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> std::result::Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn manifest() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
}

// 1 ------------------------------------------------------------------------

fn parameter_counts() -> Check {
    let rel = ModelConfig::default_for(ModelKind::RelatedNet).parameter_count();
    let topk = ModelConfig::default_for(ModelKind::TopKNet).parameter_count();
    ensure(rel == 2_235_602, || format!("RelatedNet {rel}"))?;
    ensure(topk == 195_543, || format!("TopKNet {topk}"))?;
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let built = ModelConfig::default_for(ModelKind::TopKNet).init(&mut rng).map_err(|e| e.to_string())?;
    ensure(built.parameter_count() == 195_543, || format!("built TopKNet {}", built.parameter_count()))?;
    Ok(format!("RelatedNet {rel}, TopKNet {topk}"))
}

// 2 ------------------------------------------------------------------------

/// Central-difference steps; the attention models take the smaller one.
const STEP: f64 = 1e-3;
const STAGE2_STEP: f64 = 1e-4;
const FLOOR: f64 = 1e-5;

struct Instance {
    sim_heads: Vec<Vec<f32>>,
    nli_heads: Vec<Vec<f32>>,
    sim_bodies: Vec<PaddedBody>,
    nli_bodies: Vec<PaddedBody>,
    labels: Vec<usize>,
    weights: Vec<f64>,
}

impl Instance {
    fn random(rng: &mut ChaCha8Rng, n: usize, sim: usize, nli: usize, classes: usize) -> Self {
        let vec = |rng: &mut ChaCha8Rng, d: usize| -> Vec<f32> { (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect() };
        let mut inst = Instance {
            sim_heads: vec![],
            nli_heads: vec![],
            sim_bodies: vec![],
            nli_bodies: vec![],
            labels: vec![],
            weights: (0..classes).map(|_| rng.gen_range(0.5..2.0)).collect(),
        };
        for _ in 0..n {
            let len = rng.gen_range(1..6);
            inst.sim_heads.push(vec(rng, sim));
            inst.nli_heads.push(vec(rng, nli));
            let s: Vec<f32> = (0..len).flat_map(|_| vec(rng, sim)).collect();
            let v: Vec<f32> = (0..len).flat_map(|_| vec(rng, nli)).collect();
            inst.sim_bodies.push(pad_truncate_body(&Matrix::from_vec(len, sim, s).unwrap()).unwrap());
            inst.nli_bodies.push(pad_truncate_body(&Matrix::from_vec(len, nli, v).unwrap()).unwrap());
            inst.labels.push(rng.gen_range(0..classes));
        }
        inst
    }

    fn pairs(&self) -> Vec<PairEmbeddings<'_>> {
        (0..self.labels.len())
            .map(|i| PairEmbeddings {
                sim_head: &self.sim_heads[i],
                nli_head: &self.nli_heads[i],
                sim_body: &self.sim_bodies[i],
                nli_body: &self.nli_bodies[i],
            })
            .collect()
    }
}

fn loss<M: Classifier<f64>>(model: &M, inst: &Instance, seed: u64) -> (f64, Vec<bool>) {
    let mut tape = Tape::new();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let fwd = model.forward(&mut tape, &inst.pairs(), Mode::Train, &mut rng).unwrap();
    let l = tape.weighted_nll(fwd.probs, &inst.labels, &inst.weights).unwrap();
    (tape.value(l).get(0, 0), tape.relu_pattern())
}

/// Worst relative error over coordinates whose ±step keeps every ReLU on
/// its side, and the number of coordinates skipped.
fn max_rel_error<M: Classifier<f64>>(model: &M, inst: &Instance, seed: u64, step: f64) -> (f64, usize) {
    let analytic: Vec<Matrix<f64>> = {
        let mut tape = Tape::new();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let fwd = model.forward(&mut tape, &inst.pairs(), Mode::Train, &mut rng).unwrap();
        let l = tape.weighted_nll(fwd.probs, &inst.labels, &inst.weights).unwrap();
        let mut g = tape.backward(l).unwrap();
        let shapes: Vec<_> = model.tensors().iter().map(|t| t.shape()).collect();
        fwd.params.iter().zip(shapes).map(|(&v, s)| g.take_or_zero(v, s)).collect()
    };
    let base = loss(model, inst, seed).1;
    let (mut worst, mut skipped) = (0.0f64, 0);
    let mut probe = model.clone();
    for (t, grad) in analytic.iter().enumerate() {
        for j in 0..grad.len() {
            let orig = probe.tensors()[t].as_slice()[j];
            probe.tensors_mut()[t].as_mut_slice()[j] = orig + step;
            let up = loss(&probe, inst, seed);
            probe.tensors_mut()[t].as_mut_slice()[j] = orig - step;
            let down = loss(&probe, inst, seed);
            probe.tensors_mut()[t].as_mut_slice()[j] = orig;
            if up.1 != base || down.1 != base {
                skipped += 1;
                continue;
            }
            let numeric = (up.0 - down.0) / (2.0 * step);
            let a = grad.as_slice()[j];
            worst = worst.max((a - numeric).abs() / a.abs().max(numeric.abs()).max(FLOOR));
        }
    }
    (worst, skipped)
}

fn gradient_fidelity() -> Check {
    let mut worst = [0.0f64; 3];
    for seed in 0..10u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let rel = RelatedNet::<f64>::init(
            RelatedNetConfig { k: 2, hidden_a: 5, hidden_b: 4, dropout_p: 0.2, sim_dim: 4 },
            &mut rng,
        )
        .unwrap();
        let inst = Instance::random(&mut rng, 3, 4, 4, 2);
        let (e, s) = max_rel_error(&rel, &inst, seed + 100, STEP);
        ensure(s * 5 < rel.parameter_count(), || format!("RelatedNet seed {seed}: {s} kink skips"))?;
        worst[0] = worst[0].max(e);

        let topk = TopKNet::<f64>::init(
            TopKNetConfig { k: 2, hidden_a: 5, hidden_b: 4, dropout_p: 0.3, sim_dim: 3, nli_dim: 4 },
            &mut rng,
        )
        .unwrap();
        let inst = Instance::random(&mut rng, 3, 3, 4, 3);
        let (e, s) = max_rel_error(&topk, &inst, seed + 100, STAGE2_STEP);
        ensure(s * 5 < topk.parameter_count(), || format!("TopKNet seed {seed}: {s} kink skips"))?;
        worst[1] = worst[1].max(e);

        let cfg = AgreemNetConfig {
            num_heads: 2,
            d_k: 3,
            d_v: 2,
            hidden_a: 5,
            hidden_b: 4,
            dropout_p: 0.1,
            sim_dim: 4,
            nli_dim: 5,
        };
        let agreem = AgreemNet::<f64>::init(cfg, &mut rng).unwrap();
        let inst = Instance::random(&mut rng, 3, 4, 5, 3);
        let (e, s) = max_rel_error(&agreem, &inst, seed + 100, STAGE2_STEP);
        ensure(s * 5 < agreem.parameter_count(), || format!("AgreemNet seed {seed}: {s} kink skips"))?;
        worst[2] = worst[2].max(e);
    }
    ensure(worst.iter().all(|&w| w < 1e-4), || format!("max relative errors {worst:?}"))?;
    Ok(format!("max relative error {:.1e} / {:.1e} / {:.1e} over 10 instances each", worst[0], worst[1], worst[2]))
}

// 3 ------------------------------------------------------------------------

fn attention_equivalence() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let dim = rng.gen_range(1..9);
        let len = rng.gen_range(1..12);
        let q: Vec<f64> = (0..dim).map(|_| rng.gen_range(-2.0..2.0)).collect();
        let keys: Vec<Vec<f64>> = (0..len).map(|_| (0..dim).map(|_| rng.gen_range(-2.0..2.0)).collect()).collect();
        let vals: Vec<Vec<f64>> = (0..len).map(|_| (0..dim).map(|_| rng.gen_range(-2.0..2.0)).collect()).collect();
        let mut mask: Vec<bool> = (0..len).map(|_| rng.gen_bool(0.8)).collect();
        mask[rng.gen_range(0..len)] = true;

        let scores: Vec<f64> =
            keys.iter().map(|k| q.iter().zip(k).map(|(a, b)| a * b).sum::<f64>() / (dim as f64).sqrt()).collect();
        let z: f64 = scores.iter().zip(&mask).filter(|(_, &m)| m).map(|(s, _)| s.exp()).sum();
        let mut expected = vec![0.0; dim];
        for i in 0..len {
            if mask[i] {
                let alpha = scores[i].exp() / z;
                for (e, b) in expected.iter_mut().zip(&vals[i]) {
                    *e += alpha * b;
                }
            }
        }
        let qm = Matrix::row_vector(q);
        let km = Matrix::from_vec(len, dim, keys.concat()).unwrap();
        let vm = Matrix::from_vec(len, dim, vals.concat()).unwrap();
        let (out, _) = multihead_attention(&qm, &km, &vm, &mask, &AttentionParams::identity(dim)).unwrap();
        for (a, b) in out.iter().zip(&expected) {
            worst = worst.max((a - b).abs());
        }
    }
    ensure(worst < 1e-6, || format!("max deviation {worst:e}"))?;
    Ok(format!("max deviation {worst:.1e} over 100 cases"))
}

// 4 ------------------------------------------------------------------------

fn fnc_scorer() -> Check {
    use StanceLabel::*;
    let cases = [
        (vec![Unrelated, Discuss], vec![Unrelated, Agree], 40.0),
        (vec![Unrelated, Agree], vec![Unrelated, Agree], 100.0),
        (vec![Unrelated, Unrelated], vec![Unrelated, Agree], 20.0),
    ];
    for (pred, gold, want) in &cases {
        let got = fnc_score(pred, gold).map_err(|e| e.to_string())?;
        ensure((got - want).abs() < 1e-9, || format!("{pred:?} vs {gold:?}: {got} != {want}"))?;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for _ in 0..1000 {
        let n = rng.gen_range(1..500);
        let gold: Vec<StanceLabel> = (0..n).map(|_| StanceLabel::ALL[rng.gen_range(0..4)]).collect();
        let u = gold.iter().filter(|g| !g.is_related()).count() as f64;
        let r = n as f64 - u;
        let want = 100.0 * 0.25 * u / (0.25 * u + r);
        let got = fnc_score(&vec![Unrelated; n], &gold).map_err(|e| e.to_string())?;
        ensure((got - want).abs() < 1e-9, || format!("all-unrelated: {got} != {want}"))?;
    }
    Ok("hand cases 40/100/20 exact; all-unrelated closed form on 1000 corpora".into())
}

// 5 ------------------------------------------------------------------------

fn percent_row(samples: &[SamplePair]) -> [f64; 4] {
    class_distribution(samples).unwrap().proportions().map(|p| 100.0 * p)
}

fn fnc_accounting(dir: &Path) -> Check {
    let mut samples = Vec::new();
    let mut bodies = BTreeMap::new();
    for (stances, body_file) in
        [("train_stances.csv", "train_bodies.csv"), ("competition_test_stances.csv", "competition_test_bodies.csv")]
    {
        let s: Stances = load_stances_csv(dir.join(stances)).map_err(|e| e.to_string())?;
        samples.extend(s.samples);
        bodies.extend(load_bodies_csv(dir.join(body_file)).map_err(|e| e.to_string())?);
    }
    ensure(samples.len() == 75_385, || format!("{} samples", samples.len()))?;
    ensure(bodies.len() == 2_587, || format!("{} bodies", bodies.len()))?;
    let got = percent_row(&samples);
    let want = [7.4, 2.0, 17.7, 72.8];
    for (g, w) in got.iter().zip(&want) {
        ensure((g - w).abs() <= 0.1 + 0.05, || format!("proportions {got:.2?} vs {want:?}"))?;
    }
    Ok(format!("75385 samples, 2587 bodies, proportions {got:.2?}"))
}

fn arc_accounting(path: &Path) -> Check {
    let records = load_arc_csv(path).map_err(|e| e.to_string())?;
    let adapted = adapt_arc(&records, 0, 0, 0).map_err(|e| e.to_string())?;
    let got = percent_row(&adapted.samples);
    let want = [8.9, 10.0, 6.1, 75.0];
    for (g, w) in got.iter().zip(&want) {
        ensure((g - w).abs() <= 1.0, || format!("ARC proportions {got:.2?} vs {want:?}"))?;
    }
    Ok(format!("ARC proportions {got:.2?}"))
}

fn dataset_accounting() -> Outcome {
    let fnc = std::env::var_os("BAIT_FNC1_DIR").map(PathBuf::from);
    let arc = std::env::var_os("BAIT_ARC_CSV").map(PathBuf::from);
    let mut notes = Vec::new();
    let mut missing = Vec::new();
    match fnc {
        Some(dir) => match fnc_accounting(&dir) {
            Ok(m) => notes.push(m),
            Err(e) => return Outcome::Fail(e),
        },
        None => missing.push("BAIT_FNC1_DIR"),
    }
    match arc {
        Some(p) => match arc_accounting(&p) {
            Ok(m) => notes.push(m),
            Err(e) => return Outcome::Fail(e),
        },
        None => missing.push("BAIT_ARC_CSV"),
    }
    if missing.is_empty() {
        Outcome::Pass(notes.join("; "))
    } else {
        notes.push(format!("corpus not available, set {}", missing.join(" and ")));
        Outcome::Skip(notes.join("; "))
    }
}

// 6 ------------------------------------------------------------------------

fn forbidden(_: &str) -> f64 {
    panic!("language model consulted although an earlier method applied")
}

fn negation_suite() -> Check {
    let dir = manifest().join("tests/fixtures/negation");
    let parses = load_parses(dir.join("headlines.conllu")).map_err(|e| e.to_string())?;
    let wn = load_wordnet(&dir).map_err(|e| e.to_string())?;
    let lm = load_lm(dir.join("lm_corpus.txt")).map_err(|e| e.to_string())?;
    let text = std::fs::read_to_string(dir.join("expected.tsv")).map_err(|e| e.to_string())?;
    let mut per_method: BTreeMap<String, usize> = BTreeMap::new();
    let empty = WordNetIndex::default();
    for line in text.lines().skip(1) {
        let f: Vec<&str> = line.split('\t').collect();
        let id: u32 = f[0].parse().unwrap();
        let p = &parses[&id];
        let got = negate_headline(p, &wn, &lm).ok_or_else(|| format!("headline {id} not negated"))?;
        ensure(got.method.as_str() == f[1] && got.text == f[2], || {
            format!("headline {id}: {} {:?}, expected {} {:?}", got.method.as_str(), got.text, f[1], f[2])
        })?;
        *per_method.entry(f[1].to_string()).or_default() += 1;
        // Precedence: an earlier method never reaches the scorer, and the
        // swap is the only method depending on the lexicon.
        if f[1] != "antonym_swap" {
            let again = negate_headline(p, &empty, &forbidden).map(|r| r.text);
            ensure(again.as_deref() == Some(f[2]), || format!("headline {id}: precedence broken"))?;
        } else {
            ensure(negate_headline(p, &empty, &forbidden).is_none(), || format!("headline {id}: swap without lexicon"))?;
        }
    }
    ensure(per_method.len() == 3 && per_method.values().all(|&n| n == 10), || format!("{per_method:?}"))?;
    Ok(format!("30/30 exact ({per_method:?}), precedence holds"))
}

// 7 ------------------------------------------------------------------------

fn balanced_weights() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let counts: Vec<usize> = (0..rng.gen_range(1..8)).map(|_| rng.gen_range(1..100_000)).collect();
        let w = balanced_class_weights(&counts).map_err(|e| e.to_string())?;
        let n: usize = counts.iter().sum();
        let mass: f64 = counts.iter().zip(&w).map(|(&c, w)| c as f64 * w).sum();
        worst = worst.max((mass - n as f64).abs() / n as f64);
    }
    ensure(worst <= 1e-9, || format!("relative deviation {worst:e}"))?;
    Ok(format!("1000 count vectors, max relative deviation {worst:.1e}"))
}

// 8 ------------------------------------------------------------------------

fn matern(a: f64, b: f64, h: &GpHyper) -> f64 {
    let r = (a - b).abs() * 5f64.sqrt() / h.length_scale;
    h.signal_variance * (1.0 + r + r * r / 3.0) * (-r).exp()
}

fn solve3(mut a: [[f64; 3]; 3], mut b: [f64; 3]) -> [f64; 3] {
    for col in 0..3 {
        let p = (col..3).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs())).unwrap();
        a.swap(col, p);
        b.swap(col, p);
        for i in col + 1..3 {
            let f = a[i][col] / a[col][col];
            for j in col..3 {
                a[i][j] -= f * a[col][j];
            }
            b[i] -= f * b[col];
        }
    }
    let mut x = [0.0; 3];
    for i in (0..3).rev() {
        x[i] = (b[i] - (i + 1..3).map(|j| a[i][j] * x[j]).sum::<f64>()) / a[i][i];
    }
    x
}

fn hpo() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut worst = 0.0f64;
    for _ in 0..50 {
        let xs: [f64; 3] = [rng.gen(), rng.gen(), rng.gen()];
        let ys: [f64; 3] = [rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0)];
        let h = GpHyper {
            length_scale: rng.gen_range(0.1..1.0),
            signal_variance: rng.gen_range(0.5..2.0),
            noise_variance: rng.gen_range(1e-4..1e-1),
        };
        let pts: Vec<Vec<f64>> = xs.iter().map(|&x| vec![x]).collect();
        let gp = GpState::fit_with(&pts, &ys, h).map_err(|e| e.to_string())?;
        let mu = ys.iter().sum::<f64>() / 3.0;
        let mut k = [[0.0; 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                k[i][j] = matern(xs[i], xs[j], &h) + if i == j { h.noise_variance } else { 0.0 };
            }
        }
        let alpha = solve3(k, ys.map(|y| y - mu));
        for _ in 0..5 {
            let q = rng.gen_range(-0.5..1.5);
            let ks = xs.map(|x| matern(x, q, &h));
            let mean = mu + (0..3).map(|i| ks[i] * alpha[i]).sum::<f64>();
            let v = solve3(k, ks);
            let var = (h.signal_variance - (0..3).map(|i| ks[i] * v[i]).sum::<f64>()).max(0.0);
            let (m, s2) = gp.posterior(&[q]).map_err(|e| e.to_string())?;
            worst = worst.max((m - mean).abs()).max((s2 - var).abs());
        }
    }
    ensure(worst < 1e-8, || format!("posterior deviation {worst:e}"))?;

    for _ in 0..10_000 {
        let ei = expected_improvement(
            rng.gen_range(-1e3..1e3),
            rng.gen_range(0.0..1e3),
            rng.gen_range(-1e3..1e3),
            rng.gen_bool(0.5),
        );
        ensure(ei >= 0.0, || format!("negative EI {ei}"))?;
    }

    let space =
        SearchSpace::new(vec![ParamSpec::new("x", ParamKind::Real { low: 0.0, high: 1.0 }).unwrap()]).unwrap();
    let r = tune(&space, 25, 0, vec![], |c: &Config, _| Ok(-(c["x"] - 0.7).powi(2)), || 0.0, |_| Ok(()))
        .map_err(|e| e.to_string())?;
    let x = r.best.config["x"];
    ensure((x - 0.7).abs() < 0.05, || format!("best x {x}"))?;
    Ok(format!("posterior within {worst:.1e}; EI ≥ 0 on 10^4 draws; 25 trials reach x = {x:.3}"))
}

// 9 ------------------------------------------------------------------------

fn desk_end_to_end() -> Check {
    let desk = manifest().join("tests/fixtures/desk");
    let all = load_stances_csv(desk.join("stances.csv")).map_err(|e| e.to_string())?;
    let picked = bait::commands::subsample(&all.samples, 2000, 2024);
    let split = headline_split(&picked, 0.2, 2024).map_err(|e| e.to_string())?;
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let write = |name: &str, samples: &[SamplePair]| -> std::result::Result<PathBuf, String> {
        let path = tmp.path().join(name);
        write_stances_csv(
            &path,
            samples.iter().map(|s| (all.headlines.text(s.headline_id).unwrap(), s.body_id, Some(s.stance))),
        )
        .map_err(|e| e.to_string())?;
        Ok(path)
    };
    let train = write("train.csv", &split.train)?;
    let test = write("test.csv", &split.validation)?;

    let mut cfg = RunConfig::load(desk.join("desk.conf")).map_err(|e| e.to_string())?;
    let set = |cfg: &mut RunConfig, k: &str, v: String| cfg.set(k, v).map_err(|e| e.to_string());
    set(&mut cfg, "stances", train.display().to_string())?;
    set(&mut cfg, "test_stances", test.display().to_string())?;
    let out = tmp.path().join("out");

    let started = Instant::now();
    set(&mut cfg, "model", "relatednet".into())?;
    let rel = cmd_train(&cfg, &out).map_err(|e| e.to_string())?;
    set(&mut cfg, "model", "agreemnet".into())?;
    set(&mut cfg, "weighted_loss", "true".into())?;
    let stage2 = cmd_train(&cfg, &out).map_err(|e| e.to_string())?;
    set(&mut cfg, "relatednet", rel.checkpoint.display().to_string())?;
    set(&mut cfg, "stage2", stage2.checkpoint.display().to_string())?;
    let eval = cmd_eval(&cfg, &out).map_err(|e| e.to_string())?;
    let elapsed = started.elapsed();

    let acc = eval.report.overall_accuracy;
    ensure(elapsed < Duration::from_secs(300), || format!("took {elapsed:?}"))?;
    ensure(acc > eval.majority_baseline, || {
        format!("overall {:.3} not above majority baseline {:.3}", acc, eval.majority_baseline)
    })?;
    Ok(format!(
        "{} train / {} test samples, overall {:.1}% vs majority {:.1}%, FNC {:.1}%, {:.1}s",
        split.train.len(),
        eval.samples,
        100.0 * acc,
        100.0 * eval.majority_baseline,
        eval.report.fnc_score,
        elapsed.as_secs_f64()
    ))
}

// ---------------------------------------------------------------------------

fn timed(limit: Duration, f: fn() -> Check) -> Outcome {
    let t = Instant::now();
    let r = f();
    let dt = t.elapsed();
    match r {
        Ok(m) if dt <= limit => Outcome::Pass(format!("{m} [{:.2}s]", dt.as_secs_f64())),
        Ok(m) => Outcome::Fail(format!("{m}, but took {:.2}s (limit {:?})", dt.as_secs_f64(), limit)),
        Err(e) => Outcome::Fail(e),
    }
}

#[test]
fn acceptance() {
    let s = Duration::from_secs;
    let results: Vec<(&str, Outcome)> = vec![
        ("1 parameter counts", timed(s(1), parameter_counts)),
        ("2 gradient fidelity", timed(s(60), gradient_fidelity)),
        ("3 attention equivalence", timed(s(1), attention_equivalence)),
        ("4 FNC scorer", timed(s(1), fnc_scorer)),
        ("5 dataset accounting", dataset_accounting()),
        ("6 negation suite", timed(s(1), negation_suite)),
        ("7 balanced weights", timed(s(1), balanced_weights)),
        ("8 hyperparameter search", timed(s(30), hpo)),
        ("9 desk-scale end to end", timed(s(300), desk_end_to_end)),
    ];
    // Bypasses libtest's output capture.
    let mut stdout = std::io::stdout().lock();
    let mut failed = Vec::new();
    for (name, outcome) in &results {
        let line = match outcome {
            Outcome::Pass(m) => format!("PASS  criterion {name}: {m}"),
            Outcome::Skip(m) => format!("SKIP  criterion {name}: {m}"),
            Outcome::Fail(m) => {
                failed.push(*name);
                format!("FAIL  criterion {name}: {m}")
            }
        };
        writeln!(stdout, "{line}").unwrap();
    }
    assert!(failed.is_empty(), "failed: {failed:?}");
}
