use std::process::Command as Process;

use chainrelay::analysis::exact_secure_prob;
use chainrelay_cli::{commands, execute, Cli};
use clap::Parser;

fn run(args: &[&str]) -> String {
    let cli =
        Cli::try_parse_from(std::iter::once("chainrelay").chain(args.iter().copied())).unwrap();
    execute(&cli).unwrap().0
}

/// Data rows (header row included) with the `#` metadata stripped.
fn table(output: &str) -> Vec<Vec<String>> {
    let body: String = output
        .lines()
        .filter(|l| !l.starts_with('#'))
        .map(|l| format!("{l}\n"))
        .collect();
    csv::Reader::from_reader(body.as_bytes())
        .records()
        .map(|r| r.unwrap().iter().map(str::to_string).collect())
        .collect()
}

fn columns(output: &str) -> Vec<String> {
    output
        .lines()
        .find(|l| !l.starts_with('#'))
        .unwrap()
        .split(',')
        .map(str::to_string)
        .collect()
}

#[test]
fn golden_outputs() {
    let cases: [(&[&str], &str); 5] = [
        (
            &[
                "simulate", "--m", "3", "--n", "2", "--ell", "16", "--t", "0.5", "--trials", "12",
                "--seed", "5",
            ],
            include_str!("golden/simulate.csv"),
        ),
        (
            &[
                "verify-demo",
                "--attack",
                "random-e1b",
                "--ell-1a",
                "16",
                "--ell-1b",
                "8",
                "--ell-2",
                "8",
                "--ell-3",
                "32",
                "--trials",
                "5000",
                "--seed",
                "5",
            ],
            include_str!("golden/verify_demo.csv"),
        ),
        (
            &[
                "analyze", "--n", "1,2", "--m", "1,3", "--t", "0.5,0.9", "--trials", "2000",
                "--seed", "5",
            ],
            include_str!("golden/analyze.csv"),
        ),
        (
            &[
                "dimension",
                "--ps",
                "0.999,0.99",
                "--delta",
                "0.001",
                "--m",
                "3,11",
                "--t",
                "0.5",
            ],
            include_str!("golden/dimension.csv"),
        ),
        (
            &[
                "sweep",
                "--n",
                "1:2",
                "--m",
                "2:3",
                "--t",
                "0.6:0.8:0.1",
                "--trials",
                "500",
                "--seed",
                "5",
            ],
            include_str!("golden/sweep.csv"),
        ),
    ];
    for (args, golden) in cases {
        assert_eq!(run(args), golden, "{args:?}");
    }
}

#[test]
fn column_schemas_are_fixed() {
    let simulate = run(&["simulate", "--trials", "1"]);
    assert_eq!(columns(&simulate), commands::SIMULATE_COLUMNS);
    assert_eq!(
        columns(&run(&["verify-demo", "--trials", "1"])),
        commands::VERIFY_COLUMNS
    );
    assert_eq!(
        columns(&run(&["analyze", "--trials", "0"])),
        commands::analyze_columns()
    );
    assert_eq!(columns(&run(&["dimension"])), commands::DIMENSION_COLUMNS);
    assert_eq!(
        columns(&run(&[
            "sweep", "--trials", "0", "--n", "1:1", "--m", "2:2"
        ])),
        commands::SWEEP_COLUMNS
    );
    assert_eq!(
        commands::analyze_columns(),
        [
            "n",
            "m",
            "t",
            "bound",
            "exact",
            "exact_status",
            "mc_estimate",
            "mc_half_width",
            "mc_trials",
            "model"
        ]
    );
}

#[test]
fn honest_network_never_leaks() {
    let out = run(&["simulate", "--t", "1", "--trials", "100"]);
    let rows = table(&out);
    assert_eq!(rows.len(), 100);
    for row in rows {
        assert_eq!(
            (&row[3][..], &row[4][..], &row[5][..]),
            ("false", "false", "true")
        );
    }
}

#[test]
fn reconstruction_rate_matches_exact_probability() {
    let trials = 100_000;
    let out = run(&[
        "simulate", "--n", "2", "--m", "3", "--ell", "8", "--t", "0.5", "--trials", "100000",
        "--seed", "3",
    ]);
    let rows = table(&out);
    let hits = rows.iter().filter(|r| r[4] == "true").count() as f64;
    assert!(rows.iter().all(|r| r[3] == r[4] && r[5] == "true"));
    let p = 1.0 - exact_secure_prob(2, 3, 0.5).unwrap();
    let sigma = (p * (1.0 - p) / trials as f64).sqrt();
    assert!(
        (hits / trials as f64 - p).abs() < 3.0 * sigma,
        "{} vs {p}",
        hits / trials as f64
    );
}

#[test]
fn fixed_pattern_from_flag() {
    let out = run(&[
        "simulate",
        "--m",
        "3",
        "--n",
        "2",
        "--ell",
        "8",
        "--pattern",
        "101010",
        "--trials",
        "3",
    ]);
    for row in table(&out) {
        assert_eq!(row[1], "101010");
        assert_eq!(row[3], "false");
    }
}

#[test]
fn verify_demo_rates() {
    let row = |args: &[&str]| table(&run(args)).remove(0);

    let none = row(&["verify-demo", "--attack", "none", "--trials", "2000"]);
    assert_eq!(
        (&none[9][..], &none[10][..]),
        ("1.000000000000", "1.000000000000")
    );

    let forge = row(&[
        "verify-demo",
        "--attack",
        "linear-forge",
        "--hash",
        "linear:11",
        "--trials",
        "2000",
    ]);
    assert_eq!(forge[9], "1.000000000000");

    let guess = row(&[
        "verify-demo",
        "--attack",
        "random-e1b",
        "--ell-1b",
        "8",
        "--trials",
        "1000000",
        "--seed",
        "8",
    ]);
    let rate: f64 = guess[9].parse().unwrap();
    let target = 2f64.powi(-8);
    assert!(rate > target / 2.0 && rate < target * 2.0, "{rate}");
}

#[test]
fn dimension_and_analyze_examples() {
    let rows = table(&run(&[
        "dimension",
        "--ps",
        "0.999",
        "--m",
        "11",
        "--t",
        "0.5",
    ]));
    assert_eq!(rows[0][4], "33");

    let rows = table(&run(&[
        "analyze", "--n", "1", "--m", "3", "--t", "0.9", "--trials", "0",
    ]));
    assert_eq!(rows[0][3], "0.656100000000");
    assert_eq!(rows[0][4], "0.729000000000");

    let rows = table(&run(&[
        "analyze", "--n", "1,4", "--m", "2,5", "--t", "1", "--trials", "1000",
    ]));
    for r in rows {
        assert_eq!(
            (&r[3][..], &r[4][..], &r[6][..]),
            ("1.000000000000", "1.000000000000", "1.000000000000")
        );
    }
}

#[test]
fn oversized_cities_fall_back_to_bound_and_monte_carlo() {
    let rows = table(&run(&[
        "analyze", "--n", "14", "--m", "3", "--t", "0.5", "--trials", "1000",
    ]));
    assert_eq!(rows[0][4], "");
    assert_eq!(rows[0][5], "too-large");
    assert!(!rows[0][6].is_empty());
}

#[test]
fn flags_override_config_which_overrides_defaults() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("sim.json");
    std::fs::write(&path, r#"{"m": 5, "n": 2, "trials": 4, "seed": 9}"#).unwrap();
    let p = path.to_str().unwrap();
    let out = run(&["simulate", "--config", p, "--n", "3"]);
    assert!(out.contains(r#""m":5,"n":3,"ell":256"#), "{out}");
    assert!(out.contains("# seed: 9"));
    assert_eq!(table(&out).len(), 4);
}

#[test]
fn output_is_independent_of_thread_count() {
    let base = [
        "simulate", "--m", "4", "--n", "3", "--t", "0.6", "--trials", "3000", "--seed", "1",
    ];
    let one = run(&[&base[..], &["--threads", "1"]].concat());
    let many = run(&[&base[..], &["--threads", "5"]].concat());
    assert_eq!(one, many);
}

fn binary() -> Process {
    Process::new(env!("CARGO_BIN_EXE_chainrelay"))
}

#[test]
fn exit_statuses() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("dim.csv");
    let ok = binary()
        .args(["dimension", "--out", out.to_str().unwrap()])
        .status()
        .unwrap();
    assert_eq!(ok.code(), Some(0));
    assert!(std::fs::read_to_string(&out)
        .unwrap()
        .contains("required_n"));

    let bad = binary()
        .args(["verify-demo", "--attack", "replay"])
        .output()
        .unwrap();
    assert_eq!(bad.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&bad.stderr).contains("unknown attack"));

    let cfg = dir.path().join("bad.json");
    std::fs::write(&cfg, r#"{"m": 3, "colour": "red"}"#).unwrap();
    let bad = binary()
        .args(["simulate", "--config", cfg.to_str().unwrap()])
        .status()
        .unwrap();
    assert_eq!(bad.code(), Some(2));

    let bad = binary().args(["simulate", "--t", "1.5"]).status().unwrap();
    assert_eq!(bad.code(), Some(2));

    let unwritable = dir.path().join("missing").join("x.csv");
    let bad = binary()
        .args(["dimension", "--out", unwritable.to_str().unwrap()])
        .output()
        .unwrap();
    assert_eq!(bad.status.code(), Some(1));
    assert!(!bad.stderr.is_empty());
}
