use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use kanhar::config::PipelineConfig;
use kanhar::formats::{read_features, Checkpoint};
use kanhar_core::kan::KanNetwork;
use kanhar_core::metrics::{evaluate, parse_metrics_csv};

fn fixture() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/motionsense_mini")
}

fn kanhar(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_kanhar"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn fixture_config(dir: &Path) -> PathBuf {
    let path = dir.join("fixture.toml");
    let text = format!(
        "seed = 5\n[data]\nroot = {:?}\n[split]\ntrain = [1]\ntest = [2]\n",
        fixture().to_str().unwrap()
    );
    fs::write(&path, text).unwrap();
    path
}

/// Small, fast synthetic setup: 6 subjects, 4 train and 2 test.
fn synthetic_config(dir: &Path, epochs: (usize, usize)) -> PathBuf {
    let path = dir.join("synthetic.toml");
    let text = format!(
        "seed = 11\n\
         [data]\nsource = \"synthetic\"\n\
         [synthetic]\nsubjects = [1, 2, 3, 4, 5, 6]\nsamples_per_recording = 512\n\
         [split]\ntrain = [1, 2, 3, 4]\ntest = [5, 6]\n\
         [model]\nhidden = [8]\n\
         [train]\npretrain_epochs = {}\nfinetune_epochs = {}\nbatch_size = 16\n",
        epochs.0, epochs.1
    );
    fs::write(&path, text).unwrap();
    path
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn features_on_fixture() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = fixture_config(tmp.path());
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    let out = kanhar(&["features", "--config", s(&cfg), "--out", s(&a)]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    assert!(stdout(&out).contains("train: 18 windows"), "{}", stdout(&out));

    // 256 rows -> 3 windows of 128 at stride 64; the file with a NaN row keeps 255 -> 2
    let train = read_features(&a.join("train_features.csv")).unwrap();
    let test = read_features(&a.join("test_features.csv")).unwrap();
    assert_eq!((train.len(), test.len()), (6 * 3, 5 * 3 + 2));
    assert!(train.iter().all(|f| f.subject_id == 1));
    assert!(test.iter().all(|f| f.subject_id == 2));

    let resolved = PipelineConfig::load(&a.join("features_config.toml"), &[]).unwrap();
    assert_eq!(resolved.seed, Some(5));
    assert_eq!(resolved.out_dir, a);

    assert_eq!(code(&kanhar(&["features", "--config", s(&cfg), "--out", s(&b)])), 0);
    for f in ["train_features.csv", "test_features.csv", "standardizer.csv"] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{f}");
    }
}

#[test]
fn overlapping_split_writes_nothing() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = fixture_config(tmp.path());
    let out_dir = tmp.path().join("out");
    let out = kanhar(&[
        "features",
        "--config",
        s(&cfg),
        "--out",
        s(&out_dir),
        "--override",
        "split.test=[1,2]",
    ]);
    assert_eq!(code(&out), 2);
    assert!(!out_dir.exists());
}

#[test]
fn input_errors_exit_2() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = fixture_config(tmp.path());
    let out = kanhar(&[
        "features",
        "--config",
        s(&cfg),
        "--override",
        "data.root=/no/such/dataset",
    ]);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("/no/such/dataset"));
    assert_eq!(code(&kanhar(&["features", "--config", "/no/such/config.toml"])), 2);
    assert_eq!(
        code(&kanhar(&[
            "features",
            "--config",
            s(&cfg),
            "--override",
            "window.lenght=3"
        ])),
        2
    );
    assert_eq!(code(&kanhar(&["frobnicate"])), 2);
    assert_eq!(code(&kanhar(&["--help"])), 0);
}

#[test]
fn train_is_deterministic_and_checkpoints() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = synthetic_config(tmp.path(), (2, 1));
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    let run = |dir: &Path| {
        kanhar(&[
            "train",
            "--config",
            s(&cfg),
            "--out",
            s(dir),
            "--override",
            "train.checkpoint_every=1",
        ])
    };
    let out = run(&a);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    assert!(stdout(&out).contains("test accuracy"));
    assert_eq!(code(&run(&b)), 0);
    for f in ["checkpoint.json", "history.csv", "checkpoint_epoch_2.json"] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{f}");
    }
    let resolved_a = fs::read_to_string(a.join("train_config.toml")).unwrap();
    let resolved_b = fs::read_to_string(b.join("train_config.toml")).unwrap();
    assert_eq!(resolved_a.replace(s(&a), s(&b)), resolved_b);
    for e in 1..=3 {
        assert!(a.join(format!("checkpoint_epoch_{e}.json")).exists());
    }
    assert_eq!(
        fs::read(a.join("checkpoint_epoch_3.json")).unwrap(),
        fs::read(a.join("checkpoint.json")).unwrap()
    );

    // a different seed changes the result
    let c = tmp.path().join("c");
    assert_eq!(
        code(&kanhar(&["train", "--config", s(&cfg), "--out", s(&c), "--seed", "12"])),
        0
    );
    assert_ne!(
        fs::read(a.join("checkpoint.json")).unwrap(),
        fs::read(c.join("checkpoint.json")).unwrap()
    );
}

#[test]
fn zero_epoch_checkpoint_is_the_initialization() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg_path = synthetic_config(tmp.path(), (0, 0));
    let out_dir = tmp.path().join("out");
    assert_eq!(
        code(&kanhar(&["train", "--config", s(&cfg_path), "--out", s(&out_dir)])),
        0
    );
    let net = Checkpoint::load(&out_dir.join("checkpoint.json"))
        .unwrap()
        .to_network()
        .unwrap();
    let cfg = PipelineConfig::load(&cfg_path, &[]).unwrap();
    let init = KanNetwork::new(&cfg.network_config(36, 6), 11).unwrap();
    assert_eq!(net, init);

    let out = kanhar(&[
        "eval",
        "--config",
        s(&cfg_path),
        "--out",
        s(&out_dir),
        "--checkpoint",
        s(&out_dir.join("checkpoint.json")),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let (names, report) = parse_metrics_csv(&fs::read_to_string(out_dir.join("metrics.csv")).unwrap()).unwrap();
    assert_eq!(names.len(), 6);
    assert_eq!(report.total(), 2 * 6 * 7);

    // An untrained network ignores the labels, so over many initializations
    // its accuracy on balanced classes averages 1/C.
    let data = kanhar::pipeline::prepare_features(&cfg).unwrap().test_set();
    let seeds = 0..16u64;
    let mean: f64 = seeds
        .clone()
        .map(|seed| {
            evaluate(&KanNetwork::new(&cfg.network_config(36, 6), seed).unwrap(), &data)
                .unwrap()
                .accuracy
        })
        .sum::<f64>()
        / seeds.count() as f64;
    assert!((mean - 1.0 / 6.0).abs() < 0.1, "{mean}");
}

#[test]
fn features_then_train_then_eval() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = synthetic_config(tmp.path(), (15, 10));
    let f = tmp.path().join("features");
    let m = tmp.path().join("model");
    assert_eq!(code(&kanhar(&["features", "--config", s(&cfg), "--out", s(&f)])), 0);
    assert_eq!(
        code(&kanhar(&[
            "train",
            "--config",
            s(&cfg),
            "--out",
            s(&m),
            "--features",
            s(&f)
        ])),
        0
    );
    let ckpt = m.join("checkpoint.json");
    let out = kanhar(&[
        "eval",
        "--config",
        s(&cfg),
        "--out",
        s(&m),
        "--checkpoint",
        s(&ckpt),
        "--features",
        s(&f),
    ]);
    assert_eq!(code(&out), 0);
    let text = fs::read_to_string(m.join("report.txt")).unwrap();
    assert_eq!(stdout(&out), text);
    let (_, report) = parse_metrics_csv(&fs::read_to_string(m.join("metrics.csv")).unwrap()).unwrap();
    assert!(report.accuracy > 0.8, "{text}");

    // the checkpoint has 6 outputs; a 4-class config does not fit it
    let out = kanhar(&[
        "eval",
        "--config",
        s(&cfg),
        "--out",
        s(&m),
        "--checkpoint",
        s(&ckpt),
        "--override",
        "synthetic.class_count=4",
    ]);
    assert_eq!(code(&out), 2);
    // nor does a network built for another feature width
    let bad = m.join("bad.json");
    let mut c = Checkpoint::load(&ckpt).unwrap();
    c.layers[0].d_in = 35;
    let d_out = c.layers[0].d_out;
    c.layers[0].params.truncate(35 * d_out * 11 + d_out);
    c.dims[0] = 35;
    c.save(&bad).unwrap();
    assert_eq!(
        code(&kanhar(&[
            "eval",
            "--config",
            s(&cfg),
            "--out",
            s(&m),
            "--checkpoint",
            s(&bad)
        ])),
        2
    );
}

#[test]
fn gradcheck_exit_codes() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = s(tmp.path());
    let out = kanhar(&["gradcheck", "--out", dir]);
    assert_eq!(code(&out), 0, "{}", stdout(&out));
    assert!(stdout(&out).contains("PASS"));
    assert_eq!(code(&kanhar(&["gradcheck", "--inject-fault", "--out", dir])), 1);
    assert_eq!(code(&kanhar(&["gradcheck", "--tolerance", "1e-12", "--out", dir])), 1);
}

#[test]
fn synth_tree_feeds_the_loader() {
    let tmp = tempfile::tempdir().unwrap();
    let out = kanhar(&[
        "synth",
        "--out",
        s(tmp.path()),
        "--override",
        "synthetic.subjects=[20, 21]",
        "--override",
        "synthetic.samples_per_recording=200",
    ]);
    assert_eq!(code(&out), 0);
    let root = tmp.path().join("A_DeviceMotion_data");
    let loaded = kanhar::loader::load_recordings(&root, &Default::default()).unwrap();
    assert_eq!(loaded.recordings.len(), 12);
    assert!(loaded.recordings.iter().all(|r| r.samples.len() == 200));
}
