use std::process::Command;

fn askgraph(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_askgraph")).args(args).output().expect("binary runs")
}

#[test]
fn answers_a_question_as_json() {
    let out = askgraph(&["--json", "What was the price of honey in Alabama in 2010?"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let body: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!((body["answer"]["number"].as_f64().unwrap() - 2.4).abs() <= 0.05);
}

#[test]
fn top_n_sets_ranking_length() {
    let out = askgraph(&["--json", "--top-n", "1", "What was the price of honey in Alabama in 2010?"]);
    assert_eq!(out.status.code(), Some(0));
    let body: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(body["viz"]["ranking"].as_array().unwrap().len(), 1);
}

#[test]
fn unintelligible_request_exits_with_two() {
    let out = askgraph(&["zxqv blorf xylophone"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn fuzz_run_is_clean() {
    let out = askgraph(&["--fuzz", "300", "--seed", "5"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
}
