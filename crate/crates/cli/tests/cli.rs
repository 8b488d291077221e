use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn gkit() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_gkit"));
    c.env_remove("GKIT_THREADS");
    c
}

fn run(args: &[&str]) -> Output {
    gkit().args(args).output().unwrap()
}

fn json(out: &Output) -> Value {
    assert!(
        out.status.success(),
        "exit {:?}: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_slice(&out.stdout).unwrap()
}

fn form_file(dir: &TempDir, name: &str, entries: &str, e: &str, f: &str) -> PathBuf {
    let rows: Vec<Vec<f64>> = serde_json::from_str(entries).unwrap();
    let text = format!(
        r#"{{"schema":1,"rows":{},"cols":{},"entries":{entries},"domain_e":"{e}","domain_f":"{f}"}}"#,
        rows.len(),
        rows[0].len()
    );
    let p = dir.path().join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn norm_examples() {
    let dir = TempDir::new().unwrap();
    let chsh = form_file(&dir, "chsh.json", "[[1,1],[1,-1]]", "linf", "linf");
    let zero = form_file(&dir, "zero.json", "[[0,0],[0,0]]", "linf", "l1");
    let diag = form_file(&dir, "diag.json", "[[3,0],[0,1]]", "l2", "l2");

    let r = json(&run(&["norm", s(&chsh)]));
    assert_eq!(r["schema"], 1);
    assert_eq!(
        (r["lower"].as_f64(), r["upper"].as_f64()),
        (Some(2.0), Some(2.0))
    );
    assert_eq!(json(&run(&["norm", s(&zero)]))["upper"].as_f64(), Some(0.0));
    let d = json(&run(&["norm", s(&diag)]));
    assert!((d["upper"].as_f64().unwrap() - 3.0).abs() < 1e-12);
}

#[test]
fn sdp_examples() {
    let dir = TempDir::new().unwrap();
    let chsh = form_file(&dir, "chsh.json", "[[1,1],[1,-1]]", "linf", "linf");
    let rank1 = form_file(&dir, "rank1.json", "[[1,2,-1],[2,4,-2]]", "linf", "linf");
    let r = json(&run(&["sdp", s(&chsh)]));
    assert!((r["ratio"].as_f64().unwrap() - 2f64.sqrt()).abs() < 1e-6);
    assert_eq!(r["within_kg"], true);
    let r = json(&run(&["sdp", s(&rank1)]));
    assert!((r["ratio"].as_f64().unwrap() - 1.0).abs() < 1e-9);

    let rand5 = dir.path().join("rand5.json");
    assert!(run(&[
        "--seed",
        "1",
        "-o",
        s(&rand5),
        "gen",
        "form",
        "--rows",
        "5",
        "--cols",
        "5"
    ])
    .status
    .success());
    let a = run(&["sdp", s(&rand5), "--seed", "1"]);
    let b = run(&["sdp", s(&rand5), "--seed", "1"]);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn fubini_examples() {
    let dir = TempDir::new().unwrap();
    let phi = dir.path().join("phi.json");
    let x = dir.path().join("x.json");
    run(&[
        "-o",
        s(&phi),
        "--seed",
        "3",
        "gen",
        "form",
        "--rows",
        "3",
        "--cols",
        "4",
        "--domain-e",
        "l2",
    ]);
    run(&[
        "-o",
        s(&x),
        "--seed",
        "3",
        "gen",
        "tensor",
        "--rows",
        "3",
        "--cols",
        "4",
        "--domain-f",
        "linf",
    ]);
    let r = json(&run(&["fubini", s(&phi), s(&x)]));
    assert!(r["relative_spread"].as_f64().unwrap() <= 1e-12);

    let zero = form_file(
        &dir,
        "zero.json",
        "[[0,0,0,0],[0,0,0,0],[0,0,0,0]]",
        "l2",
        "linf",
    );
    let r = json(&run(&["fubini", s(&zero), s(&x)]));
    for k in ["via_t", "via_s", "direct"] {
        assert_eq!(r[k].as_f64(), Some(0.0), "{k}");
    }

    let r = json(&run(&["multifubini", "--random", "3,4,2", "--seed", "5"]));
    let orders = r["orders"].as_array().unwrap();
    assert_eq!(orders.len(), 6);
    let mut seen: Vec<Vec<u64>> = orders
        .iter()
        .map(|o| {
            o["order"]
                .as_array()
                .unwrap()
                .iter()
                .map(|v| v.as_u64().unwrap())
                .collect()
        })
        .collect();
    seen.sort();
    seen.dedup();
    assert_eq!(seen.len(), 6);
    assert!(seen.iter().all(|p| p.iter().all(|&m| (1..=3).contains(&m))));
    assert!(r["relative_spread"].as_f64().unwrap() <= 1e-12);
}

#[test]
fn kernel_examples() {
    let r = json(&run(&["kernel", "inv1p", "--n", "512"]));
    let op = r["op_norm"].as_f64().unwrap();
    assert!(op <= 1.3873, "{op}");

    let r = json(&run(&["green", "--n", "1000", "--weyl"]));
    let slope = r["weyl_slope"].as_f64().unwrap();
    assert!((slope + 2.0).abs() <= 0.1, "{slope}");

    let r = json(&run(&["compose", "green1d", "green1d", "--n", "800"]));
    assert!(r["groupings"]["relative_discrepancy"].as_f64().unwrap() <= 1e-12);
}

#[test]
fn exit_codes() {
    let dir = TempDir::new().unwrap();
    let chsh = form_file(&dir, "chsh.json", "[[1,1],[1,-1]]", "linf", "linf");
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, "{").unwrap();

    assert_eq!(run(&["norm", s(&bad)]).status.code(), Some(1));
    assert_eq!(
        run(&["norm", "/nonexistent/form.json"]).status.code(),
        Some(1)
    );
    assert_eq!(
        run(&["--kg", "1.0", "norm", s(&chsh)]).status.code(),
        Some(1)
    );
    assert_eq!(
        run(&["norm", s(&chsh), "--format", "csv"]).status.code(),
        Some(1)
    );
    assert_eq!(
        run(&["--enum-limit", "1", "norm", s(&chsh)]).status.code(),
        Some(2)
    );
    // The spread is ~1e-17, which no tolerance below that can accept.
    let out = run(&[
        "--tol",
        "1e-30",
        "multifubini",
        "--random",
        "5,5,5,5",
        "--seed",
        "1",
    ]);
    assert_eq!(out.status.code(), Some(3));
    let r: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(r["pass"], false);
}

#[test]
fn output_does_not_depend_on_thread_count() {
    let dir = TempDir::new().unwrap();
    let form = dir.path().join("f.json");
    run(&[
        "-o",
        s(&form),
        "--seed",
        "9",
        "gen",
        "form",
        "--rows",
        "6",
        "--cols",
        "7",
    ]);
    let cases: Vec<Vec<&str>> = vec![
        vec!["norm", s(&form)],
        vec!["sdp", s(&form), "--seed", "4"],
        vec!["multifubini", "--random", "3,3,2,2", "--seed", "2"],
        vec![
            "kernel",
            "gauss(0.3)",
            "--n",
            "96",
            "--spectral",
            "--refine",
            "24",
        ],
        vec!["compose", "inv1p", "green1d", "--n", "64"],
    ];
    for args in cases {
        let base = gkit()
            .arg("--threads")
            .arg("1")
            .args(&args)
            .output()
            .unwrap();
        assert!(base.status.success(), "{args:?}");
        for t in ["2", "0"] {
            let o = gkit().arg("--threads").arg(t).args(&args).output().unwrap();
            assert_eq!(o.stdout, base.stdout, "{args:?} at {t} threads");
        }
        let env = gkit()
            .env("GKIT_THREADS", "3")
            .args(&args)
            .output()
            .unwrap();
        assert_eq!(env.stdout, base.stdout, "{args:?} via GKIT_THREADS");
    }
}

#[test]
fn emitted_files_are_fixed_points() {
    let dir = TempDir::new().unwrap();
    let gens: [(&str, &[&str]); 3] = [
        (
            "form",
            &[
                "gen",
                "form",
                "--rows",
                "3",
                "--cols",
                "5",
                "--domain-f",
                "wl2",
            ],
        ),
        (
            "tensor",
            &[
                "gen",
                "tensor",
                "--rows",
                "4",
                "--cols",
                "2",
                "--domain-e",
                "wl2",
            ],
        ),
        ("multi", &["gen", "multi", "--dims", "2,3,2"]),
    ];
    for (kind, args) in gens {
        let first = dir.path().join(format!("{kind}.json"));
        let out = gkit().arg("-o").arg(&first).args(args).output().unwrap();
        assert!(
            out.status.success(),
            "{kind}: {}",
            String::from_utf8_lossy(&out.stderr)
        );
        let once = run(&["canon", kind, s(&first)]);
        assert!(once.status.success(), "{kind}");
        assert_eq!(once.stdout, std::fs::read(&first).unwrap(), "{kind}");
    }

    let csv = dir.path().join("k.csv");
    let out = run(&[
        "--format",
        "csv",
        "-o",
        s(&csv),
        "kernel",
        "inv1p",
        "--n",
        "12",
    ]);
    assert!(out.status.success());
    let again = run(&["--format", "csv", "canon", "kernel", s(&csv)]);
    assert_eq!(again.stdout, std::fs::read(&csv).unwrap());
    // A CSV-sourced kernel reproduces the built-in report exactly.
    let a = json(&run(&["kernel", s(&csv)]));
    let b = json(&run(&["kernel", "inv1p", "--n", "12"]));
    assert_eq!(a["op_norm"], b["op_norm"]);

    let form = form_file(&dir, "chsh.json", "[[1,1],[1,-1]]", "linf", "linf");
    let wit = dir.path().join("w.csv");
    assert!(run(&["sdp", s(&form), "--witness-file", s(&wit)])
        .status
        .success());
    let again = run(&["--format", "csv", "canon", "witness", s(&wit)]);
    assert_eq!(again.stdout, std::fs::read(&wit).unwrap());
}
