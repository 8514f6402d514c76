use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use sha2::{Digest, Sha256};
use tempfile::TempDir;

const SIM_HEADER: &str = "n,gamma,r1,r2,p_e_hat,p_e_ci_lo,p_e_ci_hi,mean_T,q_hat,exponent,e_lower,e_upper,seed";
const BOUNDS_HEADER: &str = "p,r1,r2,d_l,d_u,gamma_star,e_lower,e_upper,e_upper_per_j,surface,in_region";
const MOD3: &str = r#"{"family":"additive","m":3,"p":0.1}"#;
const BSC2: &str = r#"{"family":"product","q1":[[0.9,0.1],[0.1,0.9]],"q2":[[0.9,0.1],[0.1,0.9]]}"#;

fn macfb(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_macfb")).args(args).output().unwrap()
}

fn write(dir: &TempDir, name: &str, body: &str) -> PathBuf {
    let p = dir.path().join(name);
    fs::write(&p, body).unwrap();
    p
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn record(out: &Output) -> Vec<(String, String)> {
    String::from_utf8_lossy(&out.stdout)
        .lines()
        .filter_map(|l| l.split_once('=').map(|(k, v)| (k.to_string(), v.to_string())))
        .collect()
}

fn field(rec: &[(String, String)], key: &str) -> f64 {
    rec.iter().find(|(k, _)| k == key).unwrap().1.parse().unwrap()
}

fn csv_rows(text: &str) -> Vec<Vec<String>> {
    text.lines().skip(1).map(|l| l.split(',').map(String::from).collect()).collect()
}

#[test]
fn bounds_reference_values() {
    let dir = TempDir::new().unwrap();
    let ch = write(&dir, "mod3.json", MOD3);
    let out = macfb(&["bounds", "--channel", s(&ch), "--r1", "0.2", "--r2", "0.2"]);
    assert_eq!(out.status.code(), Some(0));
    let rec = record(&out);
    assert!((field(&rec, "e_lower") - 0.8331).abs() < 1e-4);
    assert!((field(&rec, "e_upper") - 0.8331).abs() < 1e-4);
    assert!((field(&rec, "gamma_star") - 0.3967).abs() < 1e-4);
    let keys: Vec<&str> = rec.iter().map(|(k, _)| k.as_str()).collect();
    assert_eq!(&keys[..5], ["r1", "r2", "d_l", "d_u", "gamma_star"]);

    let zero = record(&macfb(&["bounds", "--channel", s(&ch)]));
    assert!((field(&zero, "e_lower") - 2.1).abs() < 1e-9);
}

#[test]
fn bounds_exit_codes() {
    let dir = TempDir::new().unwrap();
    let ch = write(&dir, "mod3.json", MOD3);
    let c = 3f64.log2() + 0.8 * 0.8f64.log2() + 0.2 * 0.1f64.log2();
    let half = format!("{}", c / 2.0);
    let out = macfb(&["bounds", "--channel", s(&ch), "--r1", &half, "--r2", &half]);
    assert_eq!(out.status.code(), Some(2), "boundary pair");
    assert!(String::from_utf8_lossy(&out.stderr).contains("capacity region"));
    assert_eq!(macfb(&["bounds", "--channel", s(&ch), "--r1", "0.5", "--r2", "0.5"]).status.code(), Some(2));

    assert_eq!(macfb(&["bounds", "--channel", "/nonexistent.json"]).status.code(), Some(1));
    let bad = write(&dir, "bad.json", r#"{"family":"additive","m":3,"p":0.7}"#);
    let out = macfb(&["bounds", "--channel", s(&bad)]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("`p`"));
    assert_eq!(macfb(&["bounds", "--channel", s(&ch), "--r1", "-0.1"]).status.code(), Some(1));
}

#[test]
fn region_shapes() {
    let dir = TempDir::new().unwrap();
    let tri = write(&dir, "mod3.json", MOD3);
    let out = macfb(&["region", "--channel", s(&tri)]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().next().unwrap(), "kind,index,r1,r2,theta,radius");
    let rows = csv_rows(&text);
    let vertices: Vec<_> = rows.iter().filter(|r| r[0] == "vertex").collect();
    assert_eq!(vertices.len(), 3);
    let thetas: Vec<f64> = rows.iter().filter(|r| r[0] == "theta").map(|r| r[4].parse().unwrap()).collect();
    assert!(thetas.windows(2).all(|w| w[1] > w[0]));
    assert!((thetas[thetas.len() - 1] - std::f64::consts::FRAC_PI_2).abs() < 1e-12);

    let rect = write(&dir, "bsc2.json", BSC2);
    let out = macfb(&["region", "--channel", s(&rect)]);
    let rows = csv_rows(&String::from_utf8(out.stdout).unwrap());
    assert_eq!(rows.iter().filter(|r| r[0] == "vertex").count(), 4);
}

#[test]
fn manifest_accompanies_output() {
    let dir = TempDir::new().unwrap();
    let ch = write(&dir, "mod3.json", MOD3);
    let out = dir.path().join("b.txt");
    let st = macfb(&["bounds", "--channel", s(&ch), "--r1", "0.1", "--out", s(&out), "--seed", "3"]);
    assert_eq!(st.status.code(), Some(0));
    let body = fs::read(&out).unwrap();
    let m: Value = serde_json::from_str(&fs::read_to_string(dir.path().join("b.txt.manifest.json")).unwrap()).unwrap();
    assert_eq!(m["command"], "bounds");
    assert_eq!(m["seed"], 3);
    assert_eq!(m["config"]["r1"], 0.1);
    assert_eq!(m["version"], env!("CARGO_PKG_VERSION"));
    assert_eq!(m["outputs"][0]["sha256"], hex::encode(Sha256::digest(&body)));
}

#[test]
fn simulate_header_and_seed_repeat() {
    let dir = TempDir::new().unwrap();
    let ch = write(&dir, "mod3.json", MOD3);
    let run = |name: &str, seed: &str| {
        let out = dir.path().join(name);
        let st = macfb(&[
            "simulate", "--channel", s(&ch), "--n", "24", "--trials", "2000", "--seed", seed, "--out", s(&out),
        ]);
        assert_eq!(st.status.code(), Some(0), "{}", String::from_utf8_lossy(&st.stderr));
        fs::read_to_string(out).unwrap()
    };
    let a = run("a.csv", "5");
    assert_eq!(a.lines().next().unwrap(), SIM_HEADER);
    assert_eq!(a, run("b.csv", "5"));
    assert_ne!(a, run("c.csv", "6"));
    assert!(dir.path().join("a.csv.manifest.json").exists());
}

#[test]
fn simulate_noiseless_genie_is_error_free() {
    let dir = TempDir::new().unwrap();
    let ch = write(&dir, "clean.json", r#"{"family":"additive","m":3,"p":0.0}"#);
    let out = macfb(&[
        "simulate", "--channel", s(&ch), "--n", "20", "--zeta", "0", "--trials", "500", "--quad", "0,0,1,1",
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let rows = csv_rows(&String::from_utf8(out.stdout).unwrap());
    assert_eq!(rows[0][4], "0");
    assert_eq!(rows[0][9], "inf");
    assert_eq!(rows[0][7], "20");
}

#[test]
fn simulate_reference_exponent_is_sandwiched_from_above() {
    let dir = TempDir::new().unwrap();
    let ch = write(&dir, "mod3.json", MOD3);
    let out = macfb(&[
        "simulate", "--channel", s(&ch), "--n", "120", "--gamma", "0.25", "--r1", "0.2", "--r2", "0.2", "--rule",
        "threshold", "--trials", "20000", "--is-samples", "5000",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let rows = csv_rows(&String::from_utf8(out.stdout).unwrap());
    let (exp, eu): (f64, f64) = (rows[0][9].parse().unwrap(), rows[0][11].parse().unwrap());
    assert!(exp > 0.0 && exp <= eu + 0.15, "exponent {exp}, e_upper {eu}");
    // Confirmation of length n*gamma can at best deliver gamma * D_l per use.
    assert!(exp <= 0.25 * 2.1 + 1e-9);
}

#[test]
fn simulate_configuration_errors() {
    let dir = TempDir::new().unwrap();
    let ch = write(&dir, "mod3.json", MOD3);
    assert_eq!(macfb(&["simulate", "--channel", s(&ch), "--gamma", "1.5"]).status.code(), Some(1));
    assert_eq!(macfb(&["simulate", "--channel", s(&ch), "--quad", "0,0,7,1"]).status.code(), Some(1));
    assert_eq!(
        macfb(&["simulate", "--channel", s(&ch), "--mode", "random-code", "--r1", "0.6"]).status.code(),
        Some(1)
    );
}

#[test]
fn sweep_noise_matches_closed_form() {
    let dir = TempDir::new().unwrap();
    let ch = write(&dir, "mod3.json", MOD3);
    let out = macfb(&["sweep", "--channel", s(&ch), "--axis", "p=0.15,0.05,0.1", "--r1", "0", "--r2", "0"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().next().unwrap(), BOUNDS_HEADER);
    let rows = csv_rows(&text);
    let ps: Vec<f64> = rows.iter().map(|r| r[0].parse().unwrap()).collect();
    assert_eq!(ps, [0.05, 0.1, 0.15]);
    for r in &rows {
        let p: f64 = r[0].parse().unwrap();
        let want = (1.0 - 3.0 * p) * ((1.0 - 2.0 * p) / p).log2();
        assert!((r[3].parse::<f64>().unwrap() - want).abs() < 1e-9);
    }
}

#[test]
fn sweep_along_a_ray_is_affine() {
    let dir = TempDir::new().unwrap();
    let ch = write(&dir, "mod3.json", MOD3);
    let out = macfb(&["sweep", "--channel", s(&ch), "--axis", "r1=0,0.05,0.1,0.15,0.2,0.25", "--r2", "0.1"]);
    let rows = csv_rows(&String::from_utf8(out.stdout).unwrap());
    assert_eq!(rows.len(), 6);
    // Along r2 = 0.1 the exponent is affine in r1 for the triangle; check
    // second differences.
    let el: Vec<f64> = rows.iter().map(|r| r[6].parse().unwrap()).collect();
    for w in el.windows(3) {
        assert!((w[0] - 2.0 * w[1] + w[2]).abs() < 1e-9);
    }
    let out = macfb(&["sweep", "--channel", s(&ch), "--axis", "r1=0.05,0.1,0.2", "--axis", "r2=0.05,0.1,0.2"]);
    let rows = csv_rows(&String::from_utf8(out.stdout).unwrap());
    let norms: Vec<f64> = rows
        .iter()
        .filter(|r| r[1] == r[2])
        .map(|r| r[1].parse::<f64>().unwrap().hypot(r[2].parse().unwrap()))
        .collect();
    let el: Vec<f64> = rows.iter().filter(|r| r[1] == r[2]).map(|r| r[6].parse().unwrap()).collect();
    let slope = (el[1] - el[0]) / (norms[1] - norms[0]);
    assert!((el[2] - el[0] - slope * (norms[2] - norms[0])).abs() < 1e-9);
}

#[test]
fn sweep_order_and_empty_grid() {
    let dir = TempDir::new().unwrap();
    let ch = write(&dir, "mod3.json", MOD3);
    let out = dir.path().join("empty.csv");
    let st = macfb(&["sweep", "--channel", s(&ch), "--axis", "r1=", "--out", s(&out)]);
    assert_eq!(st.status.code(), Some(0));
    assert_eq!(fs::read_to_string(&out).unwrap(), format!("{BOUNDS_HEADER}\n"));
    assert!(dir.path().join("empty.csv.manifest.json").exists());

    let out = macfb(&["sweep", "--channel", s(&ch), "--axis", "r2=0.2,0.1", "--axis", "r1=0.1,0"]);
    let rows = csv_rows(&String::from_utf8(out.stdout).unwrap());
    let pairs: Vec<(String, String)> = rows.iter().map(|r| (r[1].clone(), r[2].clone())).collect();
    let want = [("0", "0.1"), ("0", "0.2"), ("0.1", "0.1"), ("0.1", "0.2")];
    assert_eq!(pairs, want.map(|(a, b)| (a.to_string(), b.to_string())));

    let out = macfb(&[
        "sweep", "--channel", s(&ch), "--kind", "simulate", "--axis", "n=12,24", "--trials", "200",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().next().unwrap(), SIM_HEADER);
    let ns: Vec<String> = csv_rows(&text).iter().map(|r| r[0].clone()).collect();
    assert_eq!(ns, ["12", "24"]);

    assert_eq!(macfb(&["sweep", "--channel", s(&ch), "--axis", "q=1"]).status.code(), Some(1));
    assert_eq!(
        macfb(&["sweep", "--channel", s(&ch), "--kind", "simulate", "--axis", "p=0.1"]).status.code(),
        Some(1)
    );
}
