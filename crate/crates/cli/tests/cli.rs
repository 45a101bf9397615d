use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn chsh(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_chsh"))
        .args(args)
        .env_remove("CHSH_SEED")
        .output()
        .unwrap()
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn stderr(out: &Output) -> String {
    String::from_utf8(out.stderr.clone()).unwrap()
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn run_prints_a_table() {
    let out = chsh(&["run", "--variant", "I", "--shots", "2048", "--seed", "7"]);
    assert!(out.status.success(), "{}", stderr(&out));
    let text = stdout(&out);
    for label in ["QS", "QT", "RS", "RT", "CHSH"] {
        assert!(text.contains(label), "missing {label} in\n{text}");
    }
}

#[test]
fn bad_input_exits_with_two() {
    let cases: &[&[&str]] = &[
        &["run", "--variant", "V"],
        &["run", "--variant", "I", "--shots", "1"],
        &["run", "--variant", "I", "--depolarizing", "0.5"],
        &["run", "--variant", "I", "--channel", "B:p=1.5"],
        &["run", "--variant", "I", "--channel", "Q:p=0.5"],
        &[
            "run",
            "--variant",
            "I",
            "--depolarizing",
            "0.01",
            "--channel",
            "B:p=0.5",
        ],
        &["run"],
        &["noise-table", "--channel", "ZZ"],
        &[
            "feasibility",
            "--circuit",
            "/nonexistent/circuit.txt",
            "--map",
            "qx2",
        ],
        &["frobnicate"],
    ];
    for args in cases {
        let out = chsh(args);
        assert_eq!(out.status.code(), Some(2), "{args:?}: {}", stderr(&out));
        assert!(!stderr(&out).is_empty());
    }
}

#[test]
fn output_files_are_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.json");
    let b = dir.path().join("b.json");
    let base = [
        "run",
        "--variant",
        "III-classical",
        "--shots",
        "20000",
        "--seed",
        "11",
        "--depolarizing",
        "0.01",
    ];
    let mut first = base.to_vec();
    first.extend(["--workers", "1", "--output", path_str(&a)]);
    let mut second = base.to_vec();
    second.extend(["--workers", "4", "--output", path_str(&b)]);
    assert!(chsh(&first).status.success());
    assert!(chsh(&second).status.success());
    let doc = fs::read_to_string(&a).unwrap();
    assert_eq!(doc, fs::read_to_string(&b).unwrap());
    let parsed = chsh_core::ExperimentResult::from_json(&doc).unwrap();
    assert_eq!(parsed.seed, 11);
    assert_eq!(parsed.shots, 20000);
    assert_eq!(parsed.to_json(), doc);
}

#[test]
fn stdout_output_keeps_the_document_clean() {
    let out = chsh(&[
        "run",
        "--variant",
        "II",
        "--shots",
        "256",
        "--seed",
        "2",
        "--output",
        "-",
        "--format",
        "csv",
    ]);
    assert!(out.status.success());
    let text = stdout(&out);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 2);
    assert_eq!(
        lines[0],
        "variant,seed,shots,qs,qs_sd,qt,qt_sd,rs,rs_sd,rt,rt_sd,chsh,chsh_sd"
    );
    assert!(lines[1].starts_with("II,2,256,"));
    assert!(stderr(&out).contains("CHSH"));
}

#[test]
fn flags_override_the_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    fs::write(
        &cfg,
        "# defaults\nvariant = II\nshots = 300\nseed = 5\nformat = csv\n",
    )
    .unwrap();
    let out = chsh(&[
        "run",
        "--config",
        path_str(&cfg),
        "--shots",
        "200",
        "--output",
        "-",
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let text = stdout(&out);
    assert!(
        text.lines().nth(1).unwrap().starts_with("II,5,200,"),
        "{text}"
    );

    fs::write(&cfg, "variant = I\nspeed = 3\n").unwrap();
    let out = chsh(&["run", "--config", path_str(&cfg)]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("speed"));
}

#[test]
fn seed_falls_back_to_the_environment() {
    let run = |env: Option<&str>| {
        let mut cmd = Command::new(env!("CARGO_BIN_EXE_chsh"));
        cmd.args([
            "run",
            "--variant",
            "I",
            "--shots",
            "64",
            "--output",
            "-",
            "--format",
            "csv",
        ]);
        match env {
            Some(v) => cmd.env("CHSH_SEED", v),
            None => cmd.env_remove("CHSH_SEED"),
        };
        stdout(&cmd.output().unwrap())
    };
    assert!(run(Some("42")).lines().nth(1).unwrap().starts_with("I,42,"));
    assert!(run(None).lines().nth(1).unwrap().starts_with("I,0,"));
}

#[test]
fn verify_passes_and_reports_perturbations() {
    let out = chsh(&["verify"]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert!(text.lines().filter(|l| l.starts_with("PASS")).count() >= 80);
    assert!(!text.contains("FAIL"));

    let out = chsh(&["verify", "--theta-offset", "1e-3"]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(
        stdout(&out)
            .lines()
            .filter(|l| l.starts_with("FAIL"))
            .count(),
        1
    );
}

#[test]
fn noise_table_lists_every_grid_point() {
    let out = chsh(&["noise-table", "--channel", "D", "--points", "5"]);
    assert!(out.status.success());
    let text = stdout(&out);
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "channel,param,observable,analytic,computed,abs_error"
    );
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 5 * 4);
    for row in rows {
        let err: f64 = row.rsplit(',').next().unwrap().parse().unwrap();
        assert!(err < 1e-10, "{row}");
    }
}

#[test]
fn dumped_circuits_feed_the_feasibility_check() {
    let dir = tempfile::tempdir().unwrap();
    let circuit = dir.path().join("ii.txt");
    let out = chsh(&["dump", "--variant", "II", "--observable", "RS"]);
    assert!(out.status.success());
    fs::write(&circuit, stdout(&out)).unwrap();

    let fits = chsh(&[
        "feasibility",
        "--circuit",
        path_str(&circuit),
        "--map",
        "qx2",
    ]);
    assert!(fits.status.success());
    assert!(stdout(&fits).starts_with("feasible on qx2"));

    let blocked = chsh(&[
        "feasibility",
        "--circuit",
        path_str(&circuit),
        "--map",
        "vigo",
    ]);
    assert!(blocked.status.success());
    assert!(stdout(&blocked).starts_with("infeasible on vigo"));

    let map = dir.path().join("triangle.txt");
    fs::write(&map, "# three qubits, fully coupled\n3\n0 1\n1 2\n2 0\n").unwrap();
    let custom = chsh(&[
        "feasibility",
        "--circuit",
        path_str(&circuit),
        "--map",
        path_str(&map),
    ]);
    assert!(
        stdout(&custom).starts_with("feasible"),
        "{}",
        stdout(&custom)
    );
}

#[test]
fn dump_round_trips_through_the_parser() {
    for variant in ["I", "II", "III-quantum", "III-classical", "IV"] {
        let out = chsh(&["dump", "--variant", variant]);
        assert!(out.status.success());
        let text = stdout(&out);
        let spec = chsh_core::CircuitSpec::parse(&text).unwrap();
        assert_eq!(spec.to_text(), text);
    }
}
