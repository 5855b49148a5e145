use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use ch_core::harness::{Suite, SweepConfig};
use ch_core::intervals::parse_q;
use ch_core::{CutPartition, Sign};
use consensus_cli::commands::{bench, reduce, verify, write_csv, ReduceSource};
use consensus_cli::instance::{parse_instance, Variant};
use serde_json::Value;

fn data(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/data").join(name)
}

fn consensus(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_consensus")).args(args).output().expect("binary runs")
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&out.stderr)))
}

/// Compares against a checked-in file; `UPDATE_GOLDEN=1` rewrites it.
fn golden(name: &str, out: &Output) {
    let path = data("golden").join(name);
    if std::env::var_os("UPDATE_GOLDEN").is_some() {
        std::fs::write(&path, &out.stdout).unwrap();
    }
    let expected = std::fs::read_to_string(&path).unwrap_or_else(|_| panic!("missing golden file {}", path.display()));
    assert_eq!(String::from_utf8_lossy(&out.stdout), expected, "{name}");
}

fn cuts(v: &Value) -> Vec<f64> {
    v["report"]["partition"]["cuts"]
        .as_array()
        .unwrap()
        .iter()
        .map(|c| ch_core::intervals::q_to_f64(&parse_q(c.as_str().unwrap()).unwrap()))
        .collect()
}

#[test]
fn solve_single_agent_spike() {
    let out = consensus(&["solve", data("spike.json").to_str().unwrap(), "--algo", "single"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    let x = cuts(&v)[0];
    // |6x − 1| ≤ 0.1
    assert!((0.15..=0.1834).contains(&x), "{x}");
    assert!(v["report"]["total_eval_queries"].as_u64().unwrap() <= 2 * 5 + 2);
    assert!(v["report"].get("wall_time_secs").is_none());
    golden("spike_single.json", &out);
}

#[test]
fn solve_two_monotone_pair() {
    let out = consensus(&["solve", data("pair.json").to_str().unwrap(), "--algo", "two-monotone"]);
    assert_eq!(out.status.code(), Some(0));
    let c = cuts(&json(&out));
    assert!((c[0] - 0.25).abs() <= 1e-3 && (c[1] - 0.75).abs() <= 1e-3, "{c:?}");
    golden("pair_two_monotone.json", &out);
}

#[test]
fn solve_pair_with_lp_is_exact() {
    let out = consensus(&["solve", data("pair.json").to_str().unwrap(), "--algo", "lp"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["report"]["partition"]["cuts"], serde_json::json!(["0.25", "0.75"]));
    assert_eq!(v["report"]["max_discrepancy"], 0.0);
    golden("pair_lp.json", &out);
}

#[test]
fn solve_pair_in_both_query_models() {
    for model in ["grw", "eval-only"] {
        let out = consensus(&["solve", data("pair.json").to_str().unwrap(), "--algo", "two-monotone-grw", "--query-model", model]);
        assert_eq!(out.status.code(), Some(0), "{model}");
        let v = json(&out);
        let c = cuts(&v);
        assert!((c[0] - 0.25).abs() <= 1e-3 && (c[1] - 0.75).abs() <= 1e-3, "{model}: {c:?}");
        let cut_queries = v["report"]["cut_queries"].as_u64().unwrap();
        assert_eq!(cut_queries > 0, model == "grw");
    }
}

#[test]
fn solve_uniform_with_grid() {
    let out = consensus(&["solve", data("uniform.json").to_str().unwrap(), "--algo", "grid"]);
    assert_eq!(out.status.code(), Some(0));
    let c = cuts(&json(&out));
    assert!((c[0] - 0.5).abs() <= 0.1, "{c:?}");
    golden("uniform_grid.json", &out);
}

#[test]
fn solve_pipeline_recovers_tucker_solution() {
    let out = consensus(&["solve", data("pipeline.json").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["report"]["algo"], "grid");
    assert_eq!(v["tucker"]["verified"], true);
}

#[test]
fn timings_flag_keeps_wall_time() {
    let out = consensus(&["solve", data("uniform.json").to_str().unwrap(), "--algo", "single", "--timings"]);
    assert!(json(&out)["report"]["wall_time_secs"].as_f64().is_some());
}

#[test]
fn malformed_instance_is_a_parse_error() {
    let out = consensus(&["solve", data("malformed.json").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("malformed instance JSON"));
    assert!(parse_instance(r#"{"schema": 2, "kind": "pipeline"}"#).is_err());
}

#[test]
fn wrong_agent_count_is_rejected() {
    let out = consensus(&["solve", data("pair.json").to_str().unwrap(), "--algo", "single"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn oversized_cut_list_is_rejected() {
    let out = consensus(&["verify", data("pair.json").to_str().unwrap(), data("too_many_cuts.json").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("cuts"));
}

#[test]
fn verify_accepts_and_rejects() {
    let uniform = data("uniform.json");
    let accept = consensus(&["verify", uniform.to_str().unwrap(), data("half.json").to_str().unwrap()]);
    assert_eq!(accept.status.code(), Some(0));
    assert_eq!(json(&accept)["agents"][0]["exact"], "0");

    let reject = consensus(&["verify", uniform.to_str().unwrap(), data("all_plus.json").to_str().unwrap()]);
    assert_eq!(reject.status.code(), Some(1));
    assert_eq!(json(&reject)["accepted"], false);
}

#[test]
fn verify_accepts_discrepancy_equal_to_eps() {
    // I⁻ = [0, 3/8], I⁺ = [3/8, 1]: discrepancy 5/8 − 3/8 = 1/4
    let args = |eps: &'static str| {
        consensus(&["verify", data("uniform.json").to_str().unwrap(), data("boundary_cut.json").to_str().unwrap(), "--eps", eps])
    };
    let at = args("0.25");
    assert_eq!(at.status.code(), Some(0));
    assert_eq!(json(&at)["agents"][0]["exact"], "0.25");
    assert_eq!(args("0.2499").status.code(), Some(1));
}

#[test]
fn solve_output_verifies() {
    let dir = tempfile::tempdir().unwrap();
    let report = dir.path().join("report.json");
    let solve = consensus(&["solve", data("pair.json").to_str().unwrap(), "--algo", "two-monotone", "--out", report.to_str().unwrap()]);
    assert_eq!(solve.status.code(), Some(0));
    let check = consensus(&["verify", data("pair.json").to_str().unwrap(), report.to_str().unwrap()]);
    assert_eq!(check.status.code(), Some(0));
}

#[test]
fn reduce_general_metadata() {
    let out = consensus(&["reduce", "--variant", "general", "--eps", "0.25", "--seed", "1", "--n", "2", "--grid", "5"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    // δ = min(2ε, 1); L = max{3, 4n²(N−1)ε + 1}; L_CH = (n+1)L; m = ⌈2n·L_CH/ε⌉
    assert_eq!(v["delta"], 0.5);
    assert_eq!(v["bu_lipschitz"], 17.0);
    assert_eq!(v["ch_lipschitz"], 51.0);
    assert_eq!(v["m"], 816);
    assert_eq!(v["induced_N"], 1633);
    assert_eq!(v["tucker_n"], 2);
    assert!(v.get("c").is_none());
}

#[test]
fn reduce_monotone_metadata() {
    let r = reduce(ReduceSource::Seed { seed: 1, n: 2, grid: 5 }, Variant::Monotone, 0.25).unwrap();
    // C = 1 + 2(n+1)⁴Nε, C_n = (4(n+1)⁴Nε + 2)/(min{2, 1/ε} − 1)
    assert_eq!(r.tucker_n, 1);
    assert_eq!(r.c, Some(1.0 + 2.0 * 81.0 * 5.0 * 0.25));
    assert_eq!(r.c_n, Some(4.0 * 81.0 * 5.0 * 0.25 + 2.0));
    assert_eq!(r.ch_lipschitz, 3.0 * r.bu_lipschitz);
    assert_eq!(r.induced_grid, 2 * r.m + 1);
}

#[test]
fn reduce_variant_dimension_limits() {
    let mono = consensus(&["reduce", "--variant", "monotone", "--eps", "0.25", "--seed", "1", "--n", "1", "--grid", "5"]);
    assert_eq!(mono.status.code(), Some(2));
    let general = consensus(&["reduce", "--variant", "general", "--eps", "0.25", "--seed", "1", "--n", "1", "--grid", "5"]);
    assert_eq!(general.status.code(), Some(0));
    let file = consensus(&["reduce", "--variant", "monotone", "--eps", "0.2", "--tucker", data("tucker_1d.json").to_str().unwrap()]);
    assert_eq!(json(&file)["n"], 2);
}

fn small_sweep(seed: u64) -> SweepConfig {
    SweepConfig { instances: 3, seed, k_min: 4, k_max: 9, grid_agents: vec![1, 2], ..SweepConfig::default() }
}

#[test]
fn bench_csv_is_byte_identical_per_seed() {
    let dir = tempfile::tempdir().unwrap();
    let run = |name: &str, threads: &str| {
        let path = dir.path().join(name);
        let out = Command::new(env!("CARGO_BIN_EXE_consensus"))
            .env("CONSENSUS_THREADS", threads)
            .args(["bench", "--suite", "all", "--instances", "2", "--k-min", "4", "--k-max", "8", "--grid-agents", "1,2"])
            .args(["--seed", "5", "--out", path.to_str().unwrap()])
            .output()
            .unwrap();
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        std::fs::read(path).unwrap()
    };
    let a = run("a.csv", "1");
    let b = run("b.csv", "4");
    assert_eq!(a, b);
    let text = String::from_utf8(a).unwrap();
    assert!(text.starts_with("suite,algo,family,instance,seed,n,lipschitz,eps,log2_ratio,eval_queries,"));
}

#[test]
fn bench_csv_header_matches_rows() {
    let rows = bench(Suite::Single, &small_sweep(1)).unwrap();
    let mut buf = Vec::new();
    write_csv(&rows, &mut buf).unwrap();
    let mut reader = csv::Reader::from_reader(buf.as_slice());
    assert_eq!(reader.headers().unwrap().len(), 20);
    assert_eq!(reader.records().count(), rows.len());
}

#[test]
fn bench_rows_reverify() {
    for suite in [Suite::Single, Suite::TwoMonotone, Suite::Grw, Suite::Grid] {
        for row in bench(suite, &small_sweep(2)).unwrap() {
            let family = match row.suite.as_str() {
                "single" => "single",
                "grid" => "grid",
                _ => "two-agent",
            };
            let spec = parse_instance(&format!(
                r#"{{"schema": 1, "kind": "family", "family": "{family}", "seed": {}, "index": {}, "n": {}, "eps": {}}}"#,
                row.seed, row.instance, row.n, row.eps
            ))
            .unwrap();
            let cuts = if row.cuts.is_empty() { vec![] } else { row.cuts.split(';').map(|c| parse_q(c).unwrap()).collect() };
            let leading = if row.leading == "+" { Sign::Plus } else { Sign::Minus };
            let p = CutPartition::new(cuts, leading).unwrap();
            let v = verify(&spec, &p, Default::default()).unwrap();
            assert!(v.accepted, "{} {} instance {} eps {}", row.suite, row.algo, row.instance, row.eps);
            assert!((v.max_discrepancy - row.max_discrepancy).abs() <= 1e-12);
        }
    }
}
