use std::fs;
use std::path::Path;
use std::process::Command;

use clap::Parser;
use hvdc_arbitrage::cli::{
    case_ireland_report, run_from, Cli, EXIT_PARSE, EXIT_RESOLUTION, EXIT_VALIDATION,
};
use hvdc_arbitrage::data_io::{case_study_dir, load_case_study};
use hvdc_arbitrage::scheduler::schedule_portfolio;
use hvdc_arbitrage::BiasPolicy;

fn run(args: &[&str]) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let mut argv = vec!["hvdc-arb"];
    argv.extend_from_slice(args);
    let code = run_from(argv, &mut out, &mut err);
    (
        code,
        String::from_utf8(out).unwrap(),
        String::from_utf8(err).unwrap(),
    )
}

fn field(out: &str, key: &str) -> f64 {
    out.lines()
        .find_map(|l| l.strip_prefix(key))
        .and_then(|v| v.split_whitespace().next())
        .and_then(|v| v.parse().ok())
        .unwrap_or_else(|| panic!("no '{key}' in\n{out}"))
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_owned()
}

const TWO_AREA: &str = r#"
[[regions]]
id = "north"

[[regions]]
id = "south"

[[links]]
id = "tie"
from = "north"
to = "south"
capacity_mw = 400.0
loss_fraction = 0.03
"#;

#[test]
fn evaluate_celtic() {
    let (code, out, _) = run(&["evaluate", "--link", "celtic", "--timestep", "1"]);
    assert_eq!(code, 0);
    assert_eq!(field(&out, "profit:"), 30975.0);
    assert!(out.contains("B_to_A (france -> ireland)"));
}

#[test]
fn evaluate_with_prohibitive_bias_idles() {
    let (code, out, _) = run(&[
        "evaluate",
        "--link",
        "celtic",
        "--timestep",
        "1",
        "--bias",
        "100",
    ]);
    assert_eq!(code, 0);
    assert!(out.contains("direction:   Idle"));
    assert_eq!(field(&out, "profit:"), 0.0);
}

#[test]
fn evaluate_equal_prices_idles() {
    let dir = tempfile::tempdir().unwrap();
    let net = write(dir.path(), "net.toml", TWO_AREA);
    let prices = write(
        dir.path(),
        "p.csv",
        "timestep,region_id,price_eur_mwh\n1,north,60\n1,south,60\n",
    );
    let (code, out, _) = run(&[
        "evaluate",
        "--link",
        "tie",
        "--timestep",
        "1",
        "--network",
        &net,
        "--prices",
        &prices,
    ]);
    assert_eq!(code, 0);
    assert!(out.contains("Idle"));
}

#[test]
fn evaluate_unknown_link_or_timestep() {
    let (code, _, err) = run(&["evaluate", "--link", "atlantic", "--timestep", "1"]);
    assert_eq!(code, EXIT_RESOLUTION);
    assert!(err.contains("atlantic"));
    let (code, _, _) = run(&["evaluate", "--link", "celtic", "--timestep", "9"]);
    assert_eq!(code, EXIT_RESOLUTION);
}

#[test]
fn schedule_full_case_study() {
    let (code, out, _) = run(&["schedule"]);
    assert_eq!(code, 0);
    assert_eq!(field(&out, "grand_total_eur:"), 63289.0);
    assert_eq!(field(&out, "annualized_eur:"), 554_411_640.0);
}

#[test]
fn schedule_single_link_footnotes_delta() {
    let (code, out, _) = run(&["schedule", "--link", "moyle"]);
    assert_eq!(code, 0);
    assert_eq!(field(&out, "grand_total_eur:"), 9619.0);
    assert!(out.contains("note: moyle computed 9619.00, published 9622.00"));
    assert!(!out.contains("note: total"));
}

#[test]
fn schedule_zero_capacity_profile() {
    let dir = tempfile::tempdir().unwrap();
    let caps = write(
        dir.path(),
        "caps.csv",
        "timestep,link_id,x_max_mw\n1,celtic,0\n1,ewi,0\n1,greenlink,0\n1,moyle,0\n",
    );
    let out_path = dir.path().join("report.csv");
    let (code, out, _) = run(&[
        "schedule",
        "--capacity",
        &caps,
        "--out",
        out_path.to_str().unwrap(),
    ]);
    assert_eq!(code, 0);
    assert_eq!(field(&out, "grand_total_eur:"), 0.0);
    let report = fs::read_to_string(out_path).unwrap();
    assert_eq!(report.lines().count(), 5);
    assert!(report.lines().skip(1).all(|l| l.contains(",Idle,0,")));
}

#[test]
fn schedule_reports_are_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.json");
    let b = dir.path().join("b.json");
    for p in [&a, &b] {
        let (code, _, _) = run(&[
            "schedule",
            "--format",
            "structured",
            "--out",
            p.to_str().unwrap(),
        ]);
        assert_eq!(code, 0);
    }
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
    let v: serde_json::Value = serde_json::from_slice(&fs::read(&a).unwrap()).unwrap();
    assert_eq!(v["grand_total"], 63289.0);
}

#[test]
fn wheel_france_ireland_scotland() {
    let args = [
        "wheel",
        "--areas",
        "france,ireland,scotland",
        "--links",
        "celtic,moyle",
        "--transit-loss",
        "0.01",
        "--timestep",
        "1",
        "--quantity",
        "500",
    ];
    let (code, out, _) = run(&args);
    assert_eq!(code, 0, "{out}");
    let s123 = out.lines().find(|l| l.starts_with("S123")).unwrap();
    assert!(s123.contains("gates (18.0456, 44.2500) feasible=true"));
    let expected = (120.0 * (1.0 - 0.0575) * (1.0 - 0.00635) * 0.99 - 50.0) * 500.0;
    assert!(s123.contains(&format!("profit={expected:.2}")), "{s123}");
    assert!(out
        .lines()
        .any(|l| l.starts_with("S321") && l.contains("feasible=false")));

    // Walking the chain backwards swaps the scenarios.
    let back = [
        "wheel",
        "--areas",
        "scotland,ireland,france",
        "--links",
        "moyle,celtic",
        "--transit-loss",
        "0.01",
        "--timestep",
        "1",
        "--quantity",
        "500",
    ];
    let (code, rev, _) = run(&back);
    assert_eq!(code, 0);
    let s321 = rev.lines().find(|l| l.starts_with("S321")).unwrap();
    assert!(s321.contains("gates (18.0456, 44.2500) feasible=true"));
    assert!(s321.contains(&format!("profit={expected:.2}")));
}

#[test]
fn wheel_equal_prices_and_bad_chain() {
    let dir = tempfile::tempdir().unwrap();
    let net = write(
        dir.path(),
        "net.toml",
        &format!(
            "{TWO_AREA}\n[[regions]]\nid = \"east\"\n\n[[links]]\nid = \"east_tie\"\nfrom = \"south\"\nto = \"east\"\ncapacity_mw = 400.0\nloss_fraction = 0.01\n"
        ),
    );
    let prices = write(
        dir.path(),
        "p.csv",
        "timestep,region_id,price_eur_mwh\n1,east,70\n1,north,70\n1,south,70\n",
    );
    let base = [
        "--network",
        &net,
        "--prices",
        &prices,
        "--timestep",
        "1",
        "--quantity",
        "100",
    ];
    let mut args = vec![
        "wheel",
        "--areas",
        "north,south,east",
        "--links",
        "tie,east_tie",
    ];
    args.extend_from_slice(&base);
    let (code, out, _) = run(&args);
    assert_eq!(code, 0);
    assert_eq!(out.matches("feasible=false").count(), 2);

    let mut args = vec![
        "wheel",
        "--areas",
        "north,east,south",
        "--links",
        "tie,east_tie",
    ];
    args.extend_from_slice(&base);
    let (code, _, _) = run(&args);
    assert_eq!(code, EXIT_RESOLUTION);
}

#[test]
fn case_ireland_table() {
    let (code, out, _) = run(&["case-ireland"]);
    assert_eq!(code, 0);
    let row = |id: &str| out.lines().find(|l| l.starts_with(id)).unwrap().to_owned();
    assert!(row("celtic").contains("30975.00") && row("celtic").ends_with("match"));
    assert!(
        row("moyle").contains("9619.00")
            && row("moyle").contains("9622.00")
            && row("moyle").contains("DELTA")
    );
    let annual: f64 = row("annual")
        .split_whitespace()
        .nth(1)
        .unwrap()
        .parse()
        .unwrap();
    assert!(annual > 525_000_000.0);
}

#[test]
fn case_ireland_adds_no_arithmetic() {
    let cli = Cli::parse_from(["hvdc-arb", "case-ireland"]);
    let report = case_ireland_report(&cli.config, BiasPolicy::NONE).unwrap();
    let bundle = load_case_study(&case_study_dir()).unwrap();
    let direct =
        schedule_portfolio(&bundle.network, &Default::default(), BiasPolicy::NONE, 1.0).unwrap();
    for s in &direct.schedules {
        assert_eq!(
            report.row(&s.interconnector_id).unwrap().computed_eur,
            s.total_profit
        );
    }
    assert_eq!(
        report.row("total").unwrap().computed_eur,
        direct.grand_total
    );
}

#[test]
fn plot_data_shapes() {
    let (code, out, _) = run(&["plot-data"]);
    assert_eq!(code, 0);
    assert_eq!(out.lines().count(), 1 + 4);

    let (code, out, _) = run(&["plot-data", "--from", "5", "--to", "6"]);
    assert_eq!(code, 0);
    assert_eq!(
        out,
        "link_id,timestep,lambda_eur_mwh,quantity_mw,cumulative_profit_eur\n"
    );
}

#[test]
fn plot_data_sinusoidal_day() {
    let dir = tempfile::tempdir().unwrap();
    let mut csv = String::from("timestep,region_id,price_eur_mwh\n");
    for t in 1..=24u32 {
        let phase = t as f64 / 24.0 * std::f64::consts::TAU;
        for (region, sign) in [
            ("france", 1.0),
            ("ireland", 0.0),
            ("scotland", -1.0),
            ("wales", 0.5),
        ] {
            csv.push_str(&format!(
                "{t},{region},{}\n",
                90.0 + sign * 40.0 * phase.sin()
            ));
        }
    }
    let prices = write(dir.path(), "day.csv", &csv);
    let (code, out, _) = run(&["plot-data", "--prices", &prices]);
    assert_eq!(code, 0);
    let rows: Vec<Vec<String>> = out
        .lines()
        .skip(1)
        .map(|l| l.split(',').map(str::to_owned).collect())
        .collect();
    assert_eq!(rows.len(), 96);
    for link in ["celtic", "ewi", "greenlink", "moyle"] {
        let cum: Vec<f64> = rows
            .iter()
            .filter(|r| r[0] == link)
            .map(|r| r[4].parse().unwrap())
            .collect();
        assert_eq!(cum.len(), 24);
        assert!(cum.windows(2).all(|w| w[1] >= w[0]), "{link}: {cum:?}");
    }
}

#[test]
fn exit_codes_distinguish_failures() {
    let dir = tempfile::tempdir().unwrap();
    let bad_csv = write(
        dir.path(),
        "bad.csv",
        "timestep,region_id,price_eur_mwh\n1,ireland,NaN\n",
    );
    let (code, _, err) = run(&["schedule", "--prices", &bad_csv]);
    assert_eq!(code, EXIT_PARSE);
    assert!(err.contains("line 2"));

    let bad_net = write(dir.path(), "bad.toml", &TWO_AREA.replace("0.03", "1.0"));
    let (code, _, _) = run(&["schedule", "--network", &bad_net]);
    assert_eq!(code, EXIT_VALIDATION);

    let (code, _, _) = run(&["schedule", "--bias=-1"]);
    assert_eq!(code, EXIT_VALIDATION);

    let (code, _, _) = run(&["schedule", "--link", "nope"]);
    assert_eq!(code, EXIT_RESOLUTION);
}

#[test]
fn binary_honours_data_dir_override() {
    let dir = tempfile::tempdir().unwrap();
    let case = dir.path().join("ireland");
    fs::create_dir(&case).unwrap();
    for f in ["network.toml", "expected.toml"] {
        fs::copy(case_study_dir().join(f), case.join(f)).unwrap();
    }
    fs::write(
        case.join("prices.csv"),
        "timestep,region_id,price_eur_mwh\n1,france,100\n1,ireland,100\n1,scotland,100\n1,wales,100\n",
    )
    .unwrap();
    let output = Command::new(env!("CARGO_BIN_EXE_hvdc-arb"))
        .args(["evaluate", "--link", "celtic", "--timestep", "1"])
        .env("HVDC_ARB_DATA_DIR", dir.path())
        .output()
        .unwrap();
    assert!(output.status.success());
    assert!(String::from_utf8_lossy(&output.stdout).contains("Idle"));

    let output = Command::new(env!("CARGO_BIN_EXE_hvdc-arb"))
        .args(["evaluate", "--link", "nope", "--timestep", "1"])
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(EXIT_RESOLUTION));
}

#[test]
fn bias_help_mentions_bang_bang() {
    let (code, out, err) = run(&["schedule", "--help"]);
    assert_eq!(code, 0);
    assert!(format!("{out}{err}").contains("bang-bang"));
}
