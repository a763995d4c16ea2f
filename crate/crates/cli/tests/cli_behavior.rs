use std::fs;
use std::path::Path;
use std::process::Command;

fn small_case() -> &'static str {
    r#"
[[buses]]
id = 1
v_min = 0.92
v_max = 1.05
p_load = 300.0
q_load = 100.0

[[buses]]
id = 2
v_min = 0.92
v_max = 1.05
is_slack_angle_ref = true

[[buses]]
id = 3
v_min = 0.92
v_max = 1.05

[[branches]]
from = 1
to = 2
v_nom = 400.0
r = 3.2
x = 16.0
b_sh = 160.0
i_max = 1587.7

[[branches]]
from = 2
to = 3
v_nom = 400.0
r = 6.4
x = 32.0
b_sh = 320.0
i_max = 1587.7

[[branches]]
from = 1
to = 3
v_nom = 400.0
r = 6.4
x = 32.0
b_sh = 320.0
i_max = 1587.7

[[generators]]
bus = 2
p_min = 0.0
p_max = 400.0
q_min = -200.0
q_max = 300.0
ramp = 100.0
cost_a = 0.01
cost_b = 25.0
cost_c = 100.0

[[generators]]
bus = 3
p_min = 0.0
p_max = 400.0
q_min = -200.0
q_max = 300.0
ramp = 100.0
cost_a = 0.01
cost_b = 40.0
cost_c = 100.0

[[storage]]
bus = 1
soc_min = 20.0
soc_max = 120.0
p_ch_max = 30.0
p_dis_max = 30.0
eta_ch = 0.95
eta_dis = 0.95
soc_initial = 50.0
cost = 40.0

[[res_plants]]
bus = 3
capacity = 100.0

[[contingencies]]
branch = 2
"#
}

fn small_wind() -> &'static str {
    "1,0.2,0.5\n2,0.4,0.6\n3,0.1,0.3\n4,0.0,0.2\n"
}

fn write_fixtures(dir: &Path) -> (String, String) {
    let case = dir.join("case.toml");
    let wind = dir.join("wind.csv");
    fs::write(&case, small_case()).unwrap();
    fs::write(&wind, small_wind()).unwrap();
    (case.display().to_string(), wind.display().to_string())
}

fn scopf() -> Command {
    Command::new(env!("CARGO_BIN_EXE_scopf"))
}

#[test]
fn single_run_writes_artifacts_and_exits_zero() {
    let dir = tempfile::tempdir().unwrap();
    let (case, wind) = write_fixtures(dir.path());
    let out = dir.path().join("out");
    let status = scopf()
        .args(["--case", &case, "--scenarios", &wind, "--enable-ess", "-q"])
        .args(["--out", out.to_str().unwrap()])
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));

    let report = fs::read_to_string(out.join("cost_report.csv")).unwrap();
    assert!(report.starts_with("component,state,cost_eur"));
    assert!(report.lines().any(|l| l.starts_with("total,,")));
    let audit = fs::read_to_string(out.join("feasibility.txt")).unwrap();
    assert!(audit.contains("overall: pass"), "{audit}");

    // Schedule families: storage present, no flexible loads; both states.
    let sched = out.join("schedules");
    for s in 1..=2 {
        for k in 0..=1 {
            assert!(sched.join(format!("soc_s{s}_k{k}.csv")).exists());
            assert!(sched.join(format!("gen_dispatch_s{s}_k{k}.csv")).exists());
            assert!(sched.join(format!("curtailment_s{s}_k{k}.csv")).exists());
            assert!(!sched.join(format!("fl_power_s{s}_k{k}.csv")).exists());
        }
    }
    // Stored-energy table has one row per period.
    let soc = fs::read_to_string(sched.join("soc_s1_k0.csv")).unwrap();
    assert_eq!(soc.lines().count(), 1 + 4);
}

#[test]
fn missing_scenario_file_is_an_input_error() {
    let dir = tempfile::tempdir().unwrap();
    let (case, _) = write_fixtures(dir.path());
    let status = scopf()
        .args(["--case", &case, "--scenarios", "/nonexistent/wind.csv", "-q"])
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(4));
}

#[test]
fn iteration_cap_yields_exit_two_with_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let (case, wind) = write_fixtures(dir.path());
    let out = dir.path().join("out");
    let status = scopf()
        .args(["--case", &case, "--scenarios", &wind, "--max-iter", "1", "-q"])
        .args(["--out", out.to_str().unwrap()])
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(2));
    // Best-effort artifacts exist even without convergence.
    assert!(out.join("cost_report.csv").exists());
    assert!(out.join("feasibility.txt").exists());
}

#[test]
fn ess_toggle_without_storage_is_an_input_error() {
    let dir = tempfile::tempdir().unwrap();
    let case_text = small_case().replace(
        "[[storage]]
bus = 1
soc_min = 20.0
soc_max = 120.0
p_ch_max = 30.0
p_dis_max = 30.0
eta_ch = 0.95
eta_dis = 0.95
soc_initial = 50.0
cost = 40.0

",
        "",
    );
    let case = dir.path().join("case.toml");
    fs::write(&case, case_text).unwrap();
    let wind = dir.path().join("wind.csv");
    fs::write(&wind, small_wind()).unwrap();
    let status = scopf()
        .args([
            "--case",
            case.to_str().unwrap(),
            "--scenarios",
            wind.to_str().unwrap(),
            "--enable-ess",
            "-q",
        ])
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(4));
}

#[test]
fn identical_configs_produce_identical_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let (case, wind) = write_fixtures(dir.path());
    let mut bytes = Vec::new();
    for out in ["a", "b"] {
        let out = dir.path().join(out);
        let status = scopf()
            .args(["--case", &case, "--scenarios", &wind, "--enable-ess", "-q"])
            .args(["--out", out.to_str().unwrap()])
            .status()
            .unwrap();
        assert_eq!(status.code(), Some(0));
        let mut blob = fs::read(out.join("cost_report.csv")).unwrap();
        let mut names: Vec<_> = fs::read_dir(out.join("schedules"))
            .unwrap()
            .map(|e| e.unwrap().path())
            .collect();
        names.sort();
        for name in names {
            blob.extend(fs::read(&name).unwrap());
        }
        bytes.push(blob);
    }
    assert_eq!(bytes[0], bytes[1], "artifacts differ between identical runs");
}

#[test]
fn sweep_writes_one_row_per_capacity() {
    let dir = tempfile::tempdir().unwrap();
    let (case, wind) = write_fixtures(dir.path());
    let out = dir.path().join("out");
    let output = scopf()
        .args(["--case", &case, "--scenarios", &wind, "-q"])
        .args(["--sweep", "0:100:50"])
        .args(["--out", out.to_str().unwrap()])
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(0), "{}", String::from_utf8_lossy(&output.stderr));
    let table = fs::read_to_string(out.join("sweep.csv")).unwrap();
    let lines: Vec<&str> = table.lines().collect();
    assert_eq!(lines.len(), 4);
    assert!(lines[1].starts_with("0,converged"));
    assert!(lines[2].starts_with("50,converged"));
    assert!(lines[3].starts_with("100,converged"));
}

#[test]
fn scalability_reports_counts_and_costs() {
    let dir = tempfile::tempdir().unwrap();
    let (case, wind) = write_fixtures(dir.path());
    let out = dir.path().join("out");
    let output = scopf()
        .args(["--case", &case, "--scenarios", &wind, "-q"])
        .args(["--scalability", "2,4"])
        .args(["--out", out.to_str().unwrap()])
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(0), "{}", String::from_utf8_lossy(&output.stderr));
    let table = fs::read_to_string(out.join("scalability.csv")).unwrap();
    let lines: Vec<&str> = table.lines().collect();
    assert_eq!(lines.len(), 3);
    // Doubling the scenario count doubles variables and constraints.
    let first: Vec<&str> = lines[1].split(',').collect();
    let second: Vec<&str> = lines[2].split(',').collect();
    let (v1, c1): (usize, usize) = (first[3].parse().unwrap(), first[4].parse().unwrap());
    let (v2, c2): (usize, usize) = (second[3].parse().unwrap(), second[4].parse().unwrap());
    assert_eq!(v2, 2 * v1);
    assert_eq!(c2, 2 * c1);
    // Equiprobable duplicates leave the expected cost unchanged.
    let (t1, t2): (f64, f64) = (first[2].parse().unwrap(), second[2].parse().unwrap());
    assert!((t1 - t2).abs() <= 1e-3 * t1.abs(), "{t1} vs {t2}");
    assert!(out.join("scalability_timing.csv").exists());
}

#[test]
fn full_study_exports_per_scenario_state_schedules() {
    // Ten scenarios, 24 periods, all six line outages, storage and
    // flexible loads active at full renewable capacity.
    let case = concat!(env!("CARGO_MANIFEST_DIR"), "/../../data/case5.toml");
    let wind = concat!(env!("CARGO_MANIFEST_DIR"), "/../../data/wind10.csv");
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let status = scopf()
        .args(["--case", case, "--scenarios", wind, "-q"])
        .args(["--enable-ess", "--enable-fl", "--res-capacity", "1000"])
        .args(["--out", out.to_str().unwrap()])
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));

    // One stored-energy table per scenario and state; the second-line
    // outage of scenario 8 carries one row per period.
    let soc = std::fs::read_to_string(out.join("schedules/soc_s8_k2.csv")).unwrap();
    assert_eq!(soc.lines().count(), 1 + 24);
    let files = std::fs::read_dir(out.join("schedules")).unwrap().count();
    // 5 families x 10 scenarios x 7 states
    assert_eq!(files, 5 * 10 * 7);
    let audit = std::fs::read_to_string(out.join("feasibility.txt")).unwrap();
    assert!(audit.contains("overall: pass"));
}

#[test]
fn sig6_renders_six_significant_digits() {
    use scopf_cli::report::sig6;
    assert_eq!(sig6(0.0), "0");
    assert_eq!(sig6(1693208.0), "1.69321e6");
    assert_eq!(sig6(105294.0), "105294");
    assert_eq!(sig6(-0.00123456789), "-0.00123457");
    assert_eq!(sig6(11.0), "11");
    assert_eq!(sig6(0.96), "0.96");
}

#[test]
fn empty_capacity_list_gives_an_empty_table() {
    use scopf_cli::pipeline::{load_inputs, sweep_res_capacity, RunConfig};
    use scopf_cli::report::write_sweep;
    let dir = tempfile::tempdir().unwrap();
    let (case, wind) = write_fixtures(dir.path());
    let config = RunConfig::new(&case, &wind);
    let inputs = load_inputs(&config).unwrap();
    let rows = sweep_res_capacity(&config, &inputs, &[]);
    assert!(rows.is_empty());
    let mut table = Vec::new();
    write_sweep(&rows, &mut table).unwrap();
    assert_eq!(String::from_utf8(table).unwrap().lines().count(), 1);
}
