//! The `bait` binary end to end: exit codes, artifacts and determinism.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use bait::checkpoint::save_checkpoint;
use bait::corpus::{write_sidecar, write_stances_csv, HeadlineTable};
use bait::dataset::StoreSet;
use bait_core::data::{EmbeddingSpace, EmbeddingStore, StanceLabel, TextUnit};
use bait_core::model::{Classifier, ModelConfig};
use bait_core::nn::Matrix;
use bait_core::relatednet::RelatedNetConfig;
use bait_core::stage2::TopKNetConfig;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::Value;

fn bait(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bait")).args(args).output().unwrap()
}

fn desk() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/desk")
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn ingest_reports_the_distribution() {
    let out = tempfile::tempdir().unwrap();
    let conf = desk().join("desk.conf");
    let o = bait(&["ingest", "--config", s(&conf), "--out-dir", s(out.path())]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = String::from_utf8_lossy(&o.stdout);
    assert!(text.contains("unrelated      3200    72.7"), "{text}");
    let report = json(&out.path().join("ingest.json"));
    assert_eq!(report["samples"], 4400);
    assert_eq!(report["bodies"], 300);
    assert_eq!(report["dropped_samples"], 17);
    assert!(out.path().join("ingest.conf").exists());
}

#[test]
fn missing_file_exits_2_naming_the_path() {
    let out = tempfile::tempdir().unwrap();
    let o = bait(&["ingest", "--set", "stances=/no/such/stances.csv", "--out-dir", s(out.path())]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("/no/such/stances.csv"));
}

#[test]
fn store_corpus_mismatch_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let stances = dir.path().join("s.csv");
    write_stances_csv(&stances, [("A headline nobody embedded", 1000, Some(StanceLabel::Agree))]).unwrap();
    let stores = desk().join("stores");
    let o = bait(&[
        "ingest",
        "--set",
        &format!("stances={}", s(&stances)),
        "--set",
        &format!("stores={}", s(&stores)),
        "--set",
        "sim_dim=16",
        "--set",
        "nli_dim=32",
        "--out-dir",
        s(dir.path()),
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("not in the sidecar"));
}

#[test]
fn unknown_config_key_exits_2() {
    let out = tempfile::tempdir().unwrap();
    let o = bait(&["ingest", "--set", "stanses=x.csv", "--out-dir", s(out.path())]);
    assert_eq!(o.status.code(), Some(2));
}

fn train(out: &Path, extra: &[&str]) -> Value {
    let conf = desk().join("desk.conf");
    let mut args = vec!["train", "--config", s(&conf), "--out-dir", s(out), "--set", "epochs=4"];
    args.extend_from_slice(extra);
    let o = bait(&args);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let model = extra.iter().position(|a| *a == "--model").map_or("topknet", |i| extra[i + 1]);
    json(&out.join(format!("{model}_metrics.json")))
}

#[test]
fn fixed_seed_reruns_are_identical() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let ma = train(a.path(), &["--model", "agreemnet", "--seed", "11"]);
    let mb = train(b.path(), &["--model", "agreemnet", "--seed", "11"]);
    assert_eq!(ma["epochs"], mb["epochs"]);
    assert_eq!(ma["best_val_uaca"], mb["best_val_uaca"]);
    assert_eq!(
        fs::read(a.path().join("agreemnet.ckpt")).unwrap(),
        fs::read(b.path().join("agreemnet.ckpt")).unwrap()
    );
    let c = tempfile::tempdir().unwrap();
    let mc = train(c.path(), &["--model", "agreemnet", "--seed", "12"]);
    assert_ne!(ma["epochs"], mc["epochs"]);
}

#[test]
fn weighted_loss_logs_balanced_weights() {
    let out = tempfile::tempdir().unwrap();
    let m = train(out.path(), &["--model", "topknet", "--weighted-loss"]);
    let counts: Vec<f64> = m["class_counts"].as_array().unwrap().iter().map(|v| v.as_f64().unwrap()).collect();
    let weights: Vec<f64> = m["class_weights"].as_array().unwrap().iter().map(|v| v.as_f64().unwrap()).collect();
    let n: f64 = counts.iter().sum();
    let weighted: f64 = counts.iter().zip(&weights).map(|(c, w)| c * w).sum();
    assert!((weighted - n).abs() < 1e-9, "{weighted} vs {n}");
    assert!(weights[1] > weights[0] && weights[1] > weights[2], "disagree is rarest: {weights:?}");
}

/// Stores whose widths match the default model configs, with one headline
/// and one body per sample.
fn default_width_corpus(dir: &Path, n: usize) -> (PathBuf, PathBuf) {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    use rand::Rng;
    let mut stores = StoreSet {
        sim_head: EmbeddingStore::new(EmbeddingSpace::Sim, TextUnit::Head, 384),
        nli_head: EmbeddingStore::new(EmbeddingSpace::Nli, TextUnit::Head, 768),
        sim_body: EmbeddingStore::new(EmbeddingSpace::Sim, TextUnit::Body, 384),
        nli_body: EmbeddingStore::new(EmbeddingSpace::Nli, TextUnit::Body, 768),
    };
    let mut v = |len: usize| (0..len).map(|_| rng.gen_range(-1.0f32..1.0)).collect::<Vec<_>>();
    let mut heads = HeadlineTable::default();
    let mut rows = Vec::new();
    for i in 0..n {
        let h = heads.intern(&format!("headline {i}"));
        stores.sim_head.insert(h, Matrix::row_vector(v(384))).unwrap();
        stores.nli_head.insert(h, Matrix::row_vector(v(768))).unwrap();
        stores.sim_body.insert(i as u32, Matrix::from_vec(4, 384, v(4 * 384)).unwrap()).unwrap();
        stores.nli_body.insert(i as u32, Matrix::from_vec(4, 768, v(4 * 768)).unwrap()).unwrap();
        rows.push((format!("headline {i}"), i as u32, StanceLabel::RELATED[i % 3]));
    }
    let store_dir = dir.join("stores");
    fs::create_dir_all(&store_dir).unwrap();
    stores.write(&store_dir).unwrap();
    write_sidecar(store_dir.join(StoreSet::SIDECAR), &heads).unwrap();
    let stances = dir.join("stances.csv");
    write_stances_csv(&stances, rows.iter().map(|(h, b, st)| (h.as_str(), *b, Some(*st)))).unwrap();
    (stances, store_dir)
}

#[test]
fn default_topknet_checkpoint_has_195543_parameters() {
    let dir = tempfile::tempdir().unwrap();
    let (stances, stores) = default_width_corpus(dir.path(), 12);
    let out = dir.path().join("out");
    let o = bait(&[
        "train",
        "--model",
        "topknet",
        "--set",
        &format!("stances={}", s(&stances)),
        "--set",
        &format!("stores={}", s(&stores)),
        "--set",
        "epochs=1",
        "--out-dir",
        s(&out),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(String::from_utf8_lossy(&o.stdout).contains("195543 parameters"));
    let ckpt = bait::checkpoint::load_checkpoint(out.join("topknet.ckpt")).unwrap();
    assert_eq!(ckpt.parameter_count(), 195_543);
}

/// Dense layers that copy the first `pass` inputs through every hidden
/// layer and score them with weight 10 in the last layer, using `route` to
/// pick which copied unit feeds each logit.
fn pass_through(model: &mut bait_core::model::AnyModel, pass: usize, route: &[usize]) {
    let mut tensors = model.tensors_mut();
    let n = tensors.len();
    for (i, t) in tensors.iter_mut().enumerate() {
        t.as_mut_slice().fill(0.0);
        let is_weight = i % 2 == 0;
        if !is_weight {
            continue;
        }
        if i == n - 2 {
            for (out, &src) in route.iter().enumerate() {
                t.set(out, src, 10.0);
            }
        } else {
            for j in 0..pass {
                t.set(j, j, 1.0);
            }
        }
    }
}

#[test]
fn perfect_oracle_stubs_score_100_percent() {
    let dir = tempfile::tempdir().unwrap();
    // SIM head [1,0] marks related pairs; the NLI head is the one-hot stage-2 class.
    let mut stores = StoreSet {
        sim_head: EmbeddingStore::new(EmbeddingSpace::Sim, TextUnit::Head, 2),
        nli_head: EmbeddingStore::new(EmbeddingSpace::Nli, TextUnit::Head, 3),
        sim_body: EmbeddingStore::new(EmbeddingSpace::Sim, TextUnit::Body, 2),
        nli_body: EmbeddingStore::new(EmbeddingSpace::Nli, TextUnit::Body, 3),
    };
    let mut heads = HeadlineTable::default();
    let mut rows = Vec::new();
    for (i, stance) in StanceLabel::ALL.iter().cycle().take(12).enumerate() {
        let h = heads.intern(&format!("h{i}"));
        let sim = if stance.is_related() { vec![1.0, 0.0] } else { vec![0.0, 1.0] };
        let mut nli = vec![0.0; 3];
        if let Some(c) = stance.stage2_index() {
            nli[c] = 1.0;
        }
        stores.sim_head.insert(h, Matrix::row_vector(sim)).unwrap();
        stores.nli_head.insert(h, Matrix::row_vector(nli)).unwrap();
        stores.sim_body.insert(i as u32, Matrix::from_vec(2, 2, vec![0.3, 0.4, 0.1, 0.9]).unwrap()).unwrap();
        stores.nli_body.insert(i as u32, Matrix::from_vec(2, 3, vec![0.2; 6]).unwrap()).unwrap();
        rows.push((format!("h{i}"), i as u32, *stance));
    }
    let store_dir = dir.path().join("stores");
    fs::create_dir_all(&store_dir).unwrap();
    stores.write(&store_dir).unwrap();
    write_sidecar(store_dir.join(StoreSet::SIDECAR), &heads).unwrap();
    let stances = dir.path().join("test.csv");
    write_stances_csv(&stances, rows.iter().map(|(h, b, st)| (h.as_str(), *b, Some(*st)))).unwrap();

    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let rel_cfg = RelatedNetConfig { k: 1, hidden_a: 4, hidden_b: 3, dropout_p: 0.2, sim_dim: 2 };
    let mut rel = ModelConfig::RelatedNet(rel_cfg).init(&mut rng).unwrap();
    // Logit 0 (unrelated) reads head unit 1, logit 1 (related) reads unit 0.
    pass_through(&mut rel, 2, &[1, 0]);
    let topk_cfg = TopKNetConfig { k: 1, hidden_a: 4, hidden_b: 3, dropout_p: 0.2, sim_dim: 2, nli_dim: 3 };
    let mut topk = ModelConfig::TopKNet(topk_cfg).init(&mut rng).unwrap();
    pass_through(&mut topk, 3, &[0, 1, 2]);
    let rel_path = dir.path().join("rel.ckpt");
    let topk_path = dir.path().join("topk.ckpt");
    save_checkpoint(&rel_path, &rel).unwrap();
    save_checkpoint(&topk_path, &topk).unwrap();

    let out = dir.path().join("out");
    let set = |k: &str, v: &Path| format!("{k}={}", s(v));
    let o = bait(&[
        "eval",
        "--set",
        &set("test_stances", &stances),
        "--set",
        &set("stores", &store_dir),
        "--set",
        &set("relatednet", &rel_path),
        "--set",
        &set("stage2", &topk_path),
        "--out-dir",
        s(&out),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let report = json(&out.join("report.json"));
    assert_eq!(report["overall_accuracy"], 1.0);
    assert_eq!(report["fnc_score"], 100.0);
    for acc in report["per_class_accuracy"].as_array().unwrap() {
        assert_eq!(acc, 1.0);
    }
    let keys: Vec<&str> = report.as_object().unwrap().keys().map(String::as_str).collect();
    for key in ["samples", "per_class_accuracy", "overall_accuracy", "fnc_score", "confusion_matrix"] {
        assert!(keys.contains(&key), "{keys:?}");
    }
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert!(stdout.contains("agree  disagree   discuss unrelated"), "{stdout}");

    // Predict on the same pairs without labels.
    let unlabeled = dir.path().join("unlabeled.csv");
    fs::write(&unlabeled, "Headline,Body ID\nh0,0\nh3,3\n").unwrap();
    let o = bait(&[
        "predict",
        "--input",
        s(&unlabeled),
        "--set",
        &set("stores", &store_dir),
        "--set",
        &set("relatednet", &rel_path),
        "--set",
        &set("stage2", &topk_path),
        "--out-dir",
        s(&out),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let pred = fs::read_to_string(out.join("predictions.csv")).unwrap();
    assert_eq!(pred, "Headline,Body ID,Stance\nh0,0,agree\nh3,3,unrelated\n");

    // A stage-2 checkpoint in the stage-1 slot is a contract failure.
    let o = bait(&[
        "eval",
        "--set",
        &set("test_stances", &stances),
        "--set",
        &set("stores", &store_dir),
        "--set",
        &set("relatednet", &topk_path),
        "--set",
        &set("stage2", &topk_path),
        "--out-dir",
        s(&out),
    ]);
    assert_eq!(o.status.code(), Some(3));
    // So is a checkpoint built for other store widths.
    let o = bait(&[
        "eval",
        "--set",
        &set("test_stances", &stances),
        "--set",
        &set("stores", &desk().join("stores")),
        "--set",
        &set("relatednet", &rel_path),
        "--set",
        &set("stage2", &topk_path),
        "--out-dir",
        s(&out),
    ]);
    assert_eq!(o.status.code(), Some(3));
}

const CONLLU: &str = "# text = Israel has opened the dams\n\
1\tIsrael\tIsrael\tPROPN\t_\t_\t3\tnsubj\t_\t_\n\
2\thas\thave\tAUX\t_\t_\t3\taux\t_\t_\n\
3\topened\topen\tVERB\t_\t_\t0\troot\t_\t_\n\
4\tthe\tthe\tDET\t_\t_\t5\tdet\t_\t_\n\
5\tdams\tdam\tNOUN\t_\t_\t3\tobj\t_\t_\n\
\n\
# text = Dogs bark\n\
1\tDogs\tdog\tNOUN\t_\t_\t2\tnsubj\t_\t_\n\
2\tbark\tbark\tVERB\t_\t_\t0\troot\t_\t_\n";

fn augment_inputs(dir: &Path) -> Vec<String> {
    let stances = dir.join("stances.csv");
    fs::write(
        &stances,
        "Headline,Body ID,Stance\nIsrael has opened the dams,4,agree\nDogs bark,5,agree\nIsrael has opened the dams,6,discuss\n",
    )
    .unwrap();
    let parses = dir.join("h.conllu");
    // Without `# headline_id` comments the ordinal (0, 1, ...) is the id.
    fs::write(&parses, CONLLU).unwrap();
    let neg = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/negation");
    vec![
        format!("stances={}", s(&stances)),
        format!("parses={}", s(&parses)),
        format!("wordnet={}", s(&neg)),
        format!("lm_corpus={}", s(&neg.join("lm_corpus.txt"))),
    ]
}

fn run_augment(dir: &Path, out: &Path, sets: &[String]) -> Output {
    let _ = dir;
    let mut args = vec!["augment".to_string(), "--out-dir".into(), s(out).into()];
    for kv in sets {
        args.push("--set".into());
        args.push(kv.clone());
    }
    Command::new(env!("CARGO_BIN_EXE_bait")).args(&args).output().unwrap()
}

#[test]
fn augment_emits_one_disagree_row_and_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let sets = augment_inputs(dir.path());
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    assert!(run_augment(dir.path(), &a, &sets).status.success());
    assert!(run_augment(dir.path(), &b, &sets).status.success());
    let rows = fs::read_to_string(a.join("synthetic_stances.csv")).unwrap();
    assert_eq!(rows, "Headline,Body ID,Stance\nIsrael has not opened the dams,4,disagree\n");
    let log = fs::read_to_string(a.join("synthesis_log.jsonl")).unwrap();
    let entry: Value = serde_json::from_str(log.lines().next().unwrap()).unwrap();
    assert_eq!(entry["headline_id"], 2);
    assert_eq!(entry["method"], "insert_not");
    assert!(["remove_not", "insert_not", "antonym_swap"].contains(&entry["method"].as_str().unwrap()));
    assert_eq!(fs::read_to_string(a.join("headlines.txt")).unwrap().lines().last(), Some("Israel has not opened the dams"));
    for f in ["synthetic_stances.csv", "synthesis_log.jsonl", "headlines.txt", "augment.json"] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{f}");
    }
}

#[test]
fn missing_lexicon_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let mut sets = augment_inputs(dir.path());
    sets[2] = "wordnet=/no/such/dict".into();
    let o = run_augment(dir.path(), &dir.path().join("o"), &sets);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn arc_adaptation_writes_fnc_style_files() {
    let dir = tempfile::tempdir().unwrap();
    let arc = dir.path().join("arc.csv");
    let mut text = String::from("topic,post,claim,opposing_claim,support\n");
    for t in 0..4 {
        for p in 0..3 {
            let support = ["claim", "opposing", "neither"][p];
            text.push_str(&format!("t{t},post {t} {p},claim {t},not claim {t},{support}\n"));
        }
    }
    fs::write(&arc, text).unwrap();
    let out = dir.path().join("o");
    let o = run_augment(dir.path(), &out, &[format!("arc={}", s(&arc))]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let adapted = bait::corpus::load_stances_csv(out.join("arc_stances.csv")).unwrap();
    let unrelated = adapted.samples.iter().filter(|p| p.stance == StanceLabel::Unrelated).count();
    assert_eq!(adapted.samples.len(), 48);
    assert_eq!(unrelated, 36);
    assert_eq!(bait::corpus::load_bodies_csv(out.join("arc_bodies.csv")).unwrap().len(), 12);
}

#[test]
fn tune_budget_and_resume() {
    let dir = tempfile::tempdir().unwrap();
    let conf = desk().join("desk.conf");
    let space = dir.path().join("space.txt");
    fs::write(&space, "learning_rate = log 1e-4 1e-2\nhidden_a = int 8 32\n").unwrap();
    let out = dir.path().join("out");
    let tune = |budget: &str| {
        bait(&[
            "tune",
            "--config",
            s(&conf),
            "--model",
            "agreemnet",
            "--space",
            s(&space),
            "--budget",
            budget,
            "--set",
            "epochs=2",
            "--set",
            "subsample=600",
            "--out-dir",
            s(&out),
        ])
    };
    let o = tune("1");
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let history = out.join("tune_history.jsonl");
    assert_eq!(fs::read_to_string(&history).unwrap().lines().count(), 1);

    let o = tune("3");
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let lines: Vec<Value> =
        fs::read_to_string(&history).unwrap().lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(lines.len(), 3);
    let configs: Vec<String> = lines.iter().map(|l| l["config"].to_string()).collect();
    let mut unique = configs.clone();
    unique.sort();
    unique.dedup();
    assert_eq!(unique.len(), 3, "{configs:?}");
    let best = json(&out.join("tune_best.json"));
    let max = lines.iter().filter_map(|l| l["objective"].as_f64()).fold(f64::NEG_INFINITY, f64::max);
    assert_eq!(best["best"]["objective"].as_f64().unwrap(), max);

    let bad = dir.path().join("bad.txt");
    fs::write(&bad, "learning_rate = wobbly 1 2\n").unwrap();
    let o = bait(&["tune", "--config", s(&conf), "--space", s(&bad), "--budget", "1", "--out-dir", s(&out)]);
    assert_eq!(o.status.code(), Some(2));
}
