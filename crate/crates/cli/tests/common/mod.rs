#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

pub struct Sample {
    pub id: String,
    pub image: PathBuf,
    pub caption: String,
    pub predicted: String,
}

pub fn suite_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/tests/fixtures/suite")
}

pub fn config() -> PathBuf {
    suite_dir().join("config.toml")
}

/// Suite samples with the label the golden report predicts for them.
pub fn samples() -> Vec<Sample> {
    let golden: serde_json::Value =
        serde_json::from_slice(&std::fs::read(suite_dir().join("golden/report.json")).unwrap()).unwrap();
    let text = std::fs::read_to_string(suite_dir().join("dataset.jsonl")).unwrap();
    text.lines()
        .map(|line| serde_json::from_str::<serde_json::Value>(line).unwrap())
        .map(|r| {
            let id = r["id"].as_str().unwrap().to_string();
            let predicted = golden["per_sample"]
                .as_array()
                .unwrap()
                .iter()
                .find(|s| s["id"] == id.as_str())
                .unwrap()["predicted"]
                .as_str()
                .unwrap()
                .to_string();
            Sample {
                image: suite_dir().join(r["image_path"].as_str().unwrap()),
                caption: r["caption"].as_str().unwrap().to_string(),
                id,
                predicted,
            }
        })
        .collect()
}

pub fn sample(label: &str) -> Sample {
    samples().into_iter().find(|s| s.predicted == label).unwrap()
}

pub fn bin() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_ooc-verify"));
    for var in ["OOC_SEARCH_ENDPOINT", "OOC_EMBED_ENDPOINT", "OOC_CHAT_ENDPOINT"] {
        cmd.env_remove(var);
    }
    cmd
}

pub fn run(cmd: &mut Command) -> (i32, String, String) {
    let Output { status, stdout, stderr } = cmd.output().unwrap();
    (
        status.code().unwrap(),
        String::from_utf8(stdout).unwrap(),
        String::from_utf8(stderr).unwrap(),
    )
}
