use std::path::PathBuf;
use std::process::{Command, Output};

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_dyadic-forge"));
    c.env_remove("DYADIC_FORGE_CALIBRATION");
    c
}

fn repo(rel: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../..")
        .join(rel)
        .to_string_lossy()
        .into_owned()
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap()
}

#[test]
fn chain_fixture_splits_into_two_layers() {
    let out = run(&[
        "decompose",
        "--input",
        &repo("fixtures/chain-10.json"),
        "--n",
        "4",
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let layers = v["decomposition"]["layers"].as_array().unwrap();
    assert_eq!(layers.len(), 2);
    assert_eq!(layers[0]["intervals"].as_array().unwrap().len(), 8);
    assert_eq!(v["split_checks"]["saturation_small"], true);
}

#[test]
fn bad_decompose_inputs_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let big = dir.path().join("big.json");
    let items: Vec<String> = (1..=20).map(|j| format!(r#"{{"m":5,"j":{j}}}"#)).collect();
    std::fs::write(&big, format!(r#"{{"intervals":[{}]}}"#, items.join(","))).unwrap();
    assert_eq!(
        code(&run(&[
            "decompose",
            "--input",
            big.to_str().unwrap(),
            "--n",
            "4"
        ])),
        2
    );

    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, r#"{"intervals": [{"m": 1"#).unwrap();
    let out = run(&["decompose", "--input", bad.to_str().unwrap(), "--n", "4"]);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 1"));

    assert_eq!(
        code(&run(&[
            "decompose",
            "--input",
            "/no/such/file.json",
            "--n",
            "4"
        ])),
        2
    );
    assert_eq!(code(&run(&["decompose", "--n", "4"])), 2);
}

#[test]
fn t3_sweep_csv_is_reproducible() {
    let args = [
        "t3-sweep", "--trials", "1", "--seed", "42", "--depth", "6", "--format", "csv",
    ];
    let a = run(&args);
    let b = run(&args);
    assert_eq!(code(&a), 0);
    assert_eq!(a.stdout, b.stdout);
    let text = String::from_utf8(a.stdout).unwrap();
    assert!(text.starts_with("family,case,N,log_factor,lhs_sq,rhs_base,ratio,ratio_f64,bound_ok\n"));
    assert!(text.contains("full_tree,6,127,7,49,7,7,"));
    let other = run(&[
        "t3-sweep", "--trials", "1", "--seed", "43", "--depth", "6", "--format", "csv",
    ]);
    assert_ne!(text.as_bytes(), other.stdout.as_slice());
}

#[test]
fn t4_exit_codes() {
    let cal = repo("calibration/default.json");
    let cheap = ["--s-max", "2", "--depth", "8"];
    let missing = run(&[&["t4-demo"][..], &cheap].concat());
    assert_eq!(code(&missing), 4);

    let absent = run(&[&["t4-demo", "--calibration", "/no/such.json"][..], &cheap].concat());
    assert_eq!(code(&absent), 4);

    let convergent = run(&[
        &[
            "t4-demo",
            "--calibration",
            &cal,
            "--multiplier",
            r#"{"family":"power","params":{"exponent":2}}"#,
        ][..],
        &cheap,
    ]
    .concat());
    assert_eq!(code(&convergent), 2);

    let control = run(&[
        &[
            "t4-demo",
            "--calibration",
            &cal,
            "--permutation",
            "identity",
            "--format",
            "csv",
        ][..],
        &cheap,
    ]
    .concat());
    assert_eq!(code(&control), 0);
    let text = String::from_utf8(control.stdout).unwrap();
    assert!(
        text.starts_with("block_s,threshold,fraction,fraction_f64,min_cell_max,median_cell_max\n")
    );

    let via_env = bin()
        .env("DYADIC_FORGE_CALIBRATION", &cal)
        .args([&["t4-demo", "--permutation", "identity"][..], &cheap].concat())
        .output()
        .unwrap();
    assert_eq!(code(&via_env), 0);
}

#[test]
fn t1_tolerance_failure_exits_3_with_report() {
    let out = run(&["t1-demo", "--depth", "6"]);
    assert_eq!(code(&out), 3);
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["report"]["monotone"], true);
    assert_eq!(code(&run(&["t1-demo", "--depth", "6", "--zero"])), 0);
    let linear = run(&[
        "t1-demo",
        "--depth",
        "6",
        "--multiplier",
        r#"{"family":"power","params":{"exponent":1}}"#,
    ]);
    assert_eq!(code(&linear), 2);
}

#[test]
fn out_flag_and_unwritable_target() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("rc.csv");
    let out = run(&[
        "rc-demo",
        "--k-max",
        "4",
        "--depth",
        "6",
        "--tolerance",
        "0.2",
        "--format",
        "csv",
        "--out",
        file.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0);
    assert!(out.stdout.is_empty());
    assert!(std::fs::read_to_string(&file)
        .unwrap()
        .starts_with("k,delta_sup,delta_l2_sq\n"));
    let blocked = dir.path().join("missing-dir").join("x.json");
    assert_eq!(
        code(&run(&[
            "rc-demo",
            "--k-max",
            "4",
            "--depth",
            "6",
            "--out",
            blocked.to_str().unwrap()
        ])),
        4
    );
}

#[test]
fn invalid_flags_exit_2() {
    assert_eq!(code(&run(&["t3-sweep", "--trials", "0"])), 2);
    assert_eq!(code(&run(&["rc-demo", "--window", "1/2,1/4"])), 2);
    assert_eq!(code(&run(&["rc-demo", "--k-max", "12"])), 2);
    assert_eq!(
        code(&run(&["wavelet-check", "--epsilon", "0", "--depth", "2"])),
        2
    );
}

#[test]
fn haar_bound_rejects_repeated_intervals() {
    let dir = tempfile::tempdir().unwrap();
    let f = dir.path().join("h.json");
    std::fs::write(&f, r#"{"intervals":[{"m":1,"j":1},{"m":1,"j":1}]}"#).unwrap();
    assert_eq!(
        code(&run(&["haar-bound", "--input", f.to_str().unwrap()])),
        2
    );
    std::fs::write(
        &f,
        r#"{"intervals":[{"m":0,"j":1},{"m":1,"j":1}],"coefficients":["1","1/2"]}"#,
    )
    .unwrap();
    let out = run(&[
        "haar-bound",
        "--input",
        f.to_str().unwrap(),
        "--format",
        "csv",
    ]);
    assert_eq!(code(&out), 0);
    // (1 + 1/2)²/2 + 1/2 = 13/8 against 1 + 1/8
    assert!(String::from_utf8(out.stdout)
        .unwrap()
        .contains(",13/8,9/8,13/9,"));
}

#[test]
fn tree_identity_control_is_report_only() {
    let out = run(&[
        "tree-rearrange",
        "--trials",
        "40",
        "--permutation",
        "identity",
    ]);
    assert_eq!(code(&out), 0);
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["ok"], false);
    assert_eq!(code(&run(&["tree-rearrange", "--trials", "40"])), 0);
}
