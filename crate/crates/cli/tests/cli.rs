use std::process::Command;

const H: &str = "piecewise(1; id; affine(0.5,0.5,pow(2)))";

fn qam(args: &[&str]) -> (i32, String, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_qam")).args(args).env_remove("QAM_SEED").output().unwrap();
    (
        out.status.code().unwrap(),
        String::from_utf8(out.stdout).unwrap(),
        String::from_utf8(out.stderr).unwrap(),
    )
}

fn first_line(s: &str) -> &str {
    s.lines().next().unwrap_or_default()
}

#[test]
fn eval_examples() {
    assert_eq!(qam(&["eval", "--gen", "pow(2)", "--domain", "(0,10)", "--sample", "1,7"]), (0, "5\n".into(), String::new()));
    assert_eq!(qam(&["eval", "--gen", "log", "--domain", "(0,10)", "--sample", "1,4"]).1, "2\n");
    let (code, out, _) = qam(&["eval", "--gen", H, "--domain", "(0,2)", "--sample", "0.5,1.5"]);
    let m: f64 = out.trim().parse().unwrap();
    assert_eq!(code, 0);
    assert!(0.5 < m && m < 1.5);
    assert!((m - 1.125f64.sqrt()).abs() < 1e-15);
}

#[test]
fn eval_prints_seventeen_digits() {
    let (_, out, _) = qam(&["eval", "--gen", "id", "--sample", "0.1:0.5,0.2:0.5"]);
    assert_eq!(out, "0.15000000000000002\n");
}

#[test]
fn compare_examples() {
    let (code, out, _) = qam(&["compare", "--a", "pow(1)", "--b", "pow(2)", "--domain", "(0,10)"]);
    assert_eq!((code, first_line(&out)), (0, "relation: Less"));
    assert_eq!(out.lines().filter(|l| l.contains("SupportsLE")).count(), 6);

    let (code, out, _) = qam(&["compare", "--a", "id", "--b", "affine(2,1,id)", "--domain", "(0,10)"]);
    assert_eq!((code, first_line(&out)), (0, "relation: Equal"));
    assert!(out.contains("alpha = 2, beta = 1"), "{out}");

    let (code, out, _) = qam(&["compare", "--a", "id", "--b", "pow(3)", "--domain", "(-1,1)"]);
    assert_eq!((code, first_line(&out)), (3, "relation: Incomparable"));
    assert_eq!(out.matches("witness").count(), 2);
}

#[test]
fn compare_json_round_trips() {
    let (code, out, _) = qam(&["compare", "--a", "exp(1)", "--b", "pow(2)", "--domain", "(0.5,2)", "--format", "json", "--seed", "9"]);
    assert_eq!(code, 3);
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["relation"], "Incomparable");
    assert_eq!(v["seed"], 9);
    assert_eq!(v["reports"].as_array().unwrap().len(), 6);
}

#[test]
fn other_subcommand_examples() {
    assert_eq!(qam(&["index", "--gen", "exp(1.5)", "--at", "0.3"]).1, "1.5\n");
    assert_eq!(qam(&["window", "--gen", "log", "--x0", "1", "--U", "[0,2]"]).1, "NotMember\n");
    assert_eq!(qam(&["window", "--gen", "log", "--x0", "1", "--U", "[-2,0]"]).1, "Member\n");
    let (code, out, _) = qam(&["sandwich", "--f", "id", "--h", H, "--g", "pow(2)", "--domain", "(0,2)"]);
    assert_eq!((code, first_line(&out)), (0, "sandwich: pass"));
    let (code, out, _) = qam(&["hull", "--gen", "log", "--domain", "(0.5,2)", "--x0", "1", "--U", "[0,2]"]);
    assert_eq!((code, first_line(&out)), (0, "Unknown"));
    let (code, out, _) = qam(&["hull", "--gen", "exp(1)", "--domain", "(0,1)", "--x0", "0.3", "--U", "[1,1]"]);
    assert_eq!((code, first_line(&out)), (0, "Member lambda_lo = 1 lambda_hi = 1"));
    let (code, out, _) = qam(&["witness", "--a", "pow(3)", "--b", "id", "--domain", "(-1,1)", "--x0", "0"]);
    assert_eq!(code, 0);
    assert!(out.contains("seed: "));
}

#[test]
fn exit_codes() {
    let cases: [(&[&str], i32); 9] = [
        (&["eval", "--gen", "pow(", "--sample", "1"], 2),
        (&["eval", "--gen", "log", "--domain", "(-1,1)", "--sample", "0.5"], 2),
        (&["eval", "--gen", "id", "--sample", "11"], 2),
        (&["compare", "--a", "id", "--b", "id", "--grid", "3"], 2),
        (&["compare", "--a", "id", "--b", "id", "--tol.compare", "-1"], 2),
        (&["witness", "--a", "pow(2)", "--b", "id", "--domain", "(0,2)", "--x0", "1"], 5),
        (&["index", "--gen", H, "--domain", "(0,2)", "--at", "1"], 6),
        (&["sandwich", "--f", "pow(2)", "--h", "id", "--g", "log", "--domain", "(0.5,2)"], 1),
        (&["sandwich", "--f", "pow(2)", "--h", "id", "--g", "id", "--domain", "(0.5,2)", "--pins", "0.6,1.5"], 7),
    ];
    for (args, want) in cases {
        let (code, _, err) = qam(args);
        assert_eq!(code, want, "{args:?}: {err}");
        if want != 1 {
            assert_eq!(err.lines().count(), 1, "{err}");
        }
    }
}

#[test]
fn index_of_flat_generator_is_code_six() {
    let (code, _, err) = qam(&["index", "--gen", "pow(3)", "--domain", "(-1,1)", "--at", "0"]);
    assert_eq!(code, 6, "{err}");
}

#[test]
fn help_documents_exit_codes() {
    let (code, out, _) = qam(&["--help"]);
    assert_eq!(code, 0);
    for k in 0..=7 {
        assert!(out.contains(&format!("\n  {k}  ")), "code {k} missing");
    }
}

#[test]
fn envelope_csv_columns() {
    let (code, out, _) = qam(&["sandwich", "--f", "id", "--h", H, "--g", "pow(2)", "--domain", "(0,2)", "--pins", "0.5,1.5", "--format", "csv"]);
    assert_eq!(code, 0);
    let mut lines = out.lines();
    assert_eq!(lines.next(), Some("x,lower,upper,h_normalized"));
    let rows: Vec<Vec<f64>> = lines.map(|l| l.split(',').map(|v| v.parse().unwrap()).collect()).collect();
    assert_eq!(rows.len(), 513 + 512);
    assert_eq!(rows[0], vec![0.5, 0.0, 0.0, 0.0]);
    assert_eq!(rows[512][1..3], [1.0, 1.0]);
    for r in &rows[..513] {
        assert!(r[1] - 1e-9 <= r[3] && r[3] <= r[2] + 1e-9);
    }
}

#[test]
fn seed_comes_from_flag_or_environment() {
    let args = ["hull", "--gen", "pow(2)", "--domain", "(0.5,2)", "--x0", "1", "--U", "[0.4,2.1]", "--format", "json"];
    let a = qam(&args);
    let b = qam(&args);
    assert_eq!(a, b);
    let out = Command::new(env!("CARGO_BIN_EXE_qam")).args(args).env("QAM_SEED", "77").output().unwrap();
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["seed"], 77);
    let (_, out, _) = qam(&[&args[..], &["--seed", "78"]].concat());
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["seed"], 78);
}

#[test]
fn compare_output_is_reproducible() {
    let args = ["compare", "--a", "log", "--b", "exp(-1)", "--domain", "(0.5,2)", "--format", "json"];
    assert_eq!(qam(&args), qam(&args));
}
