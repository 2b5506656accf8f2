use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use oirs_core::{brute_force_grouping, power_matrices, GaussianBeam, MirrorArray, Partition, SplitSpec, SplitTarget, Vec3};

const SMALL_MA: &str = r#"
[beam]
waist = "6 cm"
[array]
kind = "ma"
rows = 3
cols = 3
side = "4 cm"
gap = "2 mm"
[[targets]]
center = ["1 cm", 0, "25 cm"]
weight = 1
[[targets]]
center = ["-1 cm", 0, "25 cm"]
weight = 2
[receiver]
radius = "5 mm"
[grid]
half_width = "3 cm"
resolution = 32
[solver]
seed = 2
"#;

const FULL_FILL_OPA: &str = r#"
[beam]
waist = "1 mm"
[array]
kind = "opa"
rows = 16
cols = 16
pitch = "8 um"
active = "8 um"
[setup]
wavelength = "532 nm"
focal_length = "25 cm"
"#;

const SMALL_OPA: &str = r#"
[beam]
waist = "1 mm"
[array]
kind = "opa"
rows = 32
cols = 32
pitch = "8 um"
fill_factor = 0.95
samples_per_pitch = 4
[setup]
wavelength = "532 nm"
focal_length = "25 cm"
[[targets]]
center = ["3 mm", "2 mm"]
radius = "1.5 mm"
weight = 1
[[targets]]
center = ["-3 mm", "-2 mm"]
radius = "1.5 mm"
weight = 2
[solver]
gs_iterations = 200
zero_order = "block"
block_radius = "0.5 mm"
seed = 4
"#;

struct Run {
    _dir: tempfile::TempDir,
    out: PathBuf,
    output: Output,
}

fn run(cmd: &str, scenario: &str) -> Run {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("scenario.toml");
    std::fs::write(&cfg, scenario).unwrap();
    let out = dir.path().join("out");
    let output = Command::new(env!("CARGO_BIN_EXE_oirs"))
        .args([cmd, "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&out)
        .output()
        .unwrap();
    Run { _dir: dir, out, output }
}

fn read(dir: &Path, name: &str) -> String {
    std::fs::read_to_string(dir.join(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
}

fn summary_value(dir: &Path, key: &str) -> f64 {
    read(dir, "summary.txt")
        .lines()
        .find_map(|l| l.strip_prefix(&format!("{key}=")).map(|v| v.parse().unwrap()))
        .unwrap_or_else(|| panic!("{key} missing from summary"))
}

#[test]
fn unknown_key_is_a_config_error() {
    let r = run("powermap", &format!("{SMALL_MA}\n[beam2]\nwaist = 1\n"));
    assert_eq!(r.output.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&r.output.stderr).contains("kind=config"));
}

#[test]
fn bad_value_is_a_config_error() {
    let r = run("aim", &SMALL_MA.replace("waist = \"6 cm\"", "waist = \"-6 cm\""));
    assert_eq!(r.output.status.code(), Some(2));
}

#[test]
fn infeasible_split_exits_with_code_four() {
    let one = SMALL_MA.replace("rows = 3", "rows = 1").replace("cols = 3", "cols = 1");
    let r = run("split-ma", &one);
    assert_eq!(r.output.status.code(), Some(4));
    assert!(String::from_utf8_lossy(&r.output.stderr).contains("kind=infeasible_ratio"));
    assert!(r.out.join("partition.csv").exists());
}

#[test]
fn outputs_carry_provenance_header() {
    let r = run("powermap", SMALL_MA);
    assert!(r.output.status.success());
    let first = read(&r.out, "map.csv").lines().next().unwrap().to_owned();
    assert!(first.starts_with("# oirs powermap config_sha256="), "{first}");
    assert!(first.ends_with("seed=2"), "{first}");
}

#[test]
fn full_fill_opa_is_lossless() {
    let r = run("efficiency", FULL_FILL_OPA);
    assert!(r.output.status.success(), "{}", String::from_utf8_lossy(&r.output.stderr));
    assert_eq!(summary_value(&r.out, "eta_opa"), 1.0);
}

#[test]
fn split_ma_matches_exhaustive_search() {
    let r = run("split-ma", SMALL_MA);
    assert!(r.output.status.success(), "{}", String::from_utf8_lossy(&r.output.stderr));
    let assignment: Vec<usize> = read(&r.out, "partition.csv")
        .lines()
        .filter(|l| !l.starts_with('#') && !l.starts_with("row"))
        .map(|l| l.rsplit(',').next().unwrap().parse().unwrap())
        .collect();

    let array = MirrorArray::grid(3, 3, 0.04, 0.002).unwrap();
    let beam = GaussianBeam::normal_incidence(1.0, 0.06).unwrap();
    let t = |x: f64, w: f64| SplitTarget { center: Vec3::new(x, 0.0, 0.25), weight: w, radius: 0.0 };
    let spec = SplitSpec::new(vec![t(0.01, 1.0), t(-0.01, 2.0)]).unwrap();
    let mats = power_matrices(&array, &beam, &spec).unwrap();
    let cli = Partition::from_assignment(&mats, assignment).unwrap();
    let exact = brute_force_grouping(&mats, &spec.weights(), 0.05).unwrap();
    assert!(cli.deviation(&spec.weights()) <= 0.05);
    assert!(cli.total_power() >= 0.98 * exact.total_power());
}

#[test]
fn split_opa_hits_the_ratio() {
    let r = run("split-opa", SMALL_OPA);
    assert!(r.output.status.success(), "{}", String::from_utf8_lossy(&r.output.stderr));
    let deviation = summary_value(&r.out, "ratio_deviation");
    assert!(deviation <= 0.05, "deviation {deviation}");
    assert!(r.out.join("phase.csv").exists());
}
