use std::io::Write;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_ht-options"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout_of(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

#[test]
fn price_reproduces_plateau_value() {
    let out = run(&[
        "price", "--spot", "1", "--strike", "0.9", "--days", "8", "--gamma", "0.02",
    ]);
    assert!(out.status.success());
    let text = stdout_of(&out);
    let price: f64 = text
        .lines()
        .find_map(|l| l.strip_prefix("price "))
        .expect("price line")
        .parse()
        .unwrap();
    assert!((price - 0.102).abs() <= 1e-3, "price {price}");
    assert!(text.contains("intrinsic 0.100000"));
    assert!(text.contains("mgf_defect"));
}

#[test]
fn unresolvable_horizon_exits_2() {
    let out = run(&[
        "price", "--spot", "1", "--strike", "1", "--days", "5000", "--gamma", "0.02",
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("5000"));
}

#[test]
fn usage_errors_exit_64() {
    assert_eq!(run(&["price", "--spot", "1"]).status.code(), Some(64));
    assert_eq!(run(&["--bogus"]).status.code(), Some(64));
    assert_eq!(
        run(&["price", "--spot", "1", "--strike", "1", "--days", "8", "--gamma", "0.02", "--drift", "sideways"])
            .status
            .code(),
        Some(64)
    );
    let bad_grid = run(&[
        "plateau", "--gamma", "0.02", "--strike-ratio", "0.9", "--xmax-grid", "log:nope",
    ]);
    assert_eq!(bad_grid.status.code(), Some(64));
    assert!(run(&["--help"]).status.success());
}

#[test]
fn repeated_runs_are_byte_identical() {
    let args = [
        "price", "--spot", "1", "--strike", "1.05", "--days", "16", "--gamma", "0.015",
    ];
    assert_eq!(run(&args).stdout, run(&args).stdout);
    let mc_args = [
        "validate", "--gamma", "0.02", "--horizons", "1,4", "--paths", "20000", "--seed", "9",
    ];
    assert_eq!(run(&mc_args).stdout, run(&mc_args).stdout);
}

#[test]
fn plateau_emits_csv_and_summary() {
    let out = run(&[
        "plateau",
        "--gamma",
        "0.02",
        "--strike-ratio",
        "0.9",
        "--horizons",
        "1,8",
        "--xmax-grid",
        "1,2,5",
        "--samples",
        "8192",
    ]);
    assert!(out.status.success());
    let text = stdout_of(&out);
    assert!(text.starts_with("horizon_days,x_max,price\n"));
    assert_eq!(text.lines().filter(|l| l.starts_with('#')).count(), 2);
    assert!(text.contains("delta_rel"));
}

#[test]
fn calibrate_without_usable_quotes_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("chains.csv");
    let mut f = std::fs::File::create(&path).unwrap();
    writeln!(f, "symbol,quote_date,expiry_date,strike,type,bid,ask,volume,open_interest").unwrap();
    for k in [90, 100, 110] {
        writeln!(f, "XYZ,2018-02-28,2018-03-12,{k},call,0.0,1.0,5,10").unwrap();
    }
    drop(f);
    let out = run(&[
        "calibrate",
        "--chains",
        path.to_str().unwrap(),
        "--symbol",
        "XYZ",
        "--quote-date",
        "2018-02-28",
        "--spot",
        "100",
    ]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("no usable quotes"));
}

#[test]
fn calibrate_fits_synthetic_chain_and_writes_manifest() {
    // mids generated from the engine itself at gamma = 0.02 (spot 1, r = 2%,
    // 8 trading days to expiry), so the fit should land near 0.02
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("chains.csv");
    let manifest = dir.path().join("manifest.json");
    let mut f = std::fs::File::create(&path).unwrap();
    writeln!(f, "symbol,quote_date,expiry_date,strike,type,bid,ask,volume,open_interest").unwrap();
    for (k, mid) in [
        (0.94, 0.0639727),
        (0.97, 0.0394301),
        (1.00, 0.0209797),
        (1.03, 0.00983553),
        (1.06, 0.00439296),
    ] {
        writeln!(f, "SYN,2018-02-28,2018-03-12,{k},call,{mid},{mid},5,10").unwrap();
    }
    drop(f);
    let out = bin()
        .args([
            "calibrate",
            "--chains",
            path.to_str().unwrap(),
            "--symbol",
            "SYN",
            "--quote-date",
            "2018-02-28",
            "--spot",
            "1",
            "--manifest",
            manifest.to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = stdout_of(&out);
    let json: serde_json::Value = serde_json::from_str(
        &text[..text.find("\nexpiry_date,").unwrap() + 1],
    )
    .unwrap();
    let gamma_hat = json["gamma_hat"].as_f64().unwrap();
    assert!((gamma_hat - 0.02).abs() < 2e-3, "gamma_hat {gamma_hat}");
    assert!(text.contains("expiry_date,horizon_days,n_strikes,mse"));

    let manifest_text = std::fs::read_to_string(&manifest).unwrap();
    let m: serde_json::Value = serde_json::from_str(&manifest_text).unwrap();
    assert_eq!(m["inputs"][0]["sha256"].as_str().unwrap().len(), 64);
    assert!(m["command"]["Calibrate"]["symbol"] == "SYN");
}

#[test]
fn thread_override_is_respected() {
    let out = bin()
        .args(["price", "--spot", "1", "--strike", "1", "--days", "4", "--gamma", "0.02"])
        .env("HT_OPTIONS_THREADS", "1")
        .output()
        .unwrap();
    assert!(out.status.success());
    let bad = bin()
        .args(["price", "--spot", "1", "--strike", "1", "--days", "4", "--gamma", "0.02"])
        .env("HT_OPTIONS_THREADS", "many")
        .output()
        .unwrap();
    assert_eq!(bad.status.code(), Some(64));
}
