use std::process::Command;

use kansa::cli::ArkaneReport;
use kansa::workloads::Workload;

fn kansa(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_kansa")).args(args).output().expect("binary runs")
}

#[test]
fn verify_passes_and_detects_fault() {
    let ok = kansa(&["verify"]);
    assert_eq!(ok.status.code(), Some(0), "{}", String::from_utf8_lossy(&ok.stdout));
    let bad = kansa(&["verify", "--inject-lut-fault"]);
    assert_eq!(bad.status.code(), Some(1));
}

#[test]
fn bad_input_exits_with_two() {
    assert_eq!(kansa(&["run", "--workload", "no-such-workload"]).status.code(), Some(2));
    assert_eq!(kansa(&["run", "--workload", "Prefetcher", "--pe", "nm:9:9"]).status.code(), Some(2));
    assert_eq!(kansa(&["run", "--workload", "Prefetcher", "--rows", "0"]).status.code(), Some(2));
}

#[test]
fn run_csv_is_deterministic() {
    let args = ["run", "--workload", "Prefetcher", "--pe", "auto", "--rows", "8", "--cols", "8", "--batch", "16", "--format", "csv"];
    let a = kansa(&args);
    let b = kansa(&args);
    assert_eq!(a.status.code(), Some(0), "{}", String::from_utf8_lossy(&a.stderr));
    assert_eq!(a.stdout, b.stdout);
    let text = String::from_utf8(a.stdout).unwrap();
    let header = text.lines().next().unwrap();
    assert_eq!(
        header,
        "workload,op_index,pe_kind,rows,cols,batch,preload_cycles,compute_cycles,total_cycles,useful_macs,issued_slots,utilization,norm_energy,area_mm2"
    );
    assert!(text.lines().last().unwrap().starts_with("Prefetcher,all,"));
}

#[test]
fn arkane_json_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("arkane.json");
    let out = kansa(&["arkane", "-P", "3", "-G", "5", "-M", "1000", "--format", "json", "--out", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let text = std::fs::read_to_string(&path).unwrap();
    let rows: Vec<ArkaneReport> = serde_json::from_str(&text).unwrap();
    assert_eq!(rows.len(), 1);
    assert_eq!(rows[0].units_at_parity, 72);
    let r = &rows[0];
    assert_eq!(r.arkane_cycles, 4 * r.pe_latency + 5 + 3 - 1 + 1000);
}

#[test]
fn workload_file_runs_like_builtin() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("w.toml");
    let w = Workload::kan_mlp("tiny", "tiny", &[6, 5, 3], 4, 2).with_batch(5);
    w.save(&path).unwrap();
    assert_eq!(Workload::load(&path).unwrap(), w);
    let out = kansa(&["run", "--workload", path.to_str().unwrap(), "--pe", "nm:3:6", "--rows", "4", "--cols", "4", "--mode", "functional"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8(out.stdout).unwrap().contains("tiny,all,nm:3:6,4,4,5,"));
}

#[test]
fn sweep_emits_average_rows() {
    let out = kansa(&["sweep", "--workload", "Prefetcher,Catch22-KAN", "--sizes", "2,4", "--batch", "8", "--format", "csv"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("side,rows,cols,area_mm2,application,utilization,mean_cycles"));
    assert_eq!(text.lines().filter(|l| l.contains(",average,")).count(), 8);
}
