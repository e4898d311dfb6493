//! CLI contract tests: exit codes, artifact shapes, idempotence, and the
//! report gallery.

mod common;

use common::{outfit, outfit_env, outfit_ok, synth_corpus, synth_inventory};

#[test]
fn usage_error_exits_1() {
    let dir = tempfile::tempdir().unwrap();
    let out = outfit(dir.path(), &["train", "--model", "svd", "--out", "m.json"]);
    assert_eq!(out.status.code(), Some(1));

    let out = outfit(dir.path(), &["no-such-command"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn help_exits_0() {
    let dir = tempfile::tempdir().unwrap();
    let out = outfit(dir.path(), &["--help"]);
    assert_eq!(out.status.code(), Some(0));
}

#[test]
fn missing_artifact_exits_2_and_names_it() {
    let dir = tempfile::tempdir().unwrap();
    let out = outfit(
        dir.path(),
        &["ingest", "--manifest", "absent.jsonl", "--out", "records.jsonl"],
    );
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("absent.jsonl"), "stderr: {stderr}");
}

#[test]
fn data_error_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("ratings.csv"),
        "query_id,rater_id,a,b\nq1,r1,9,0\n",
    )
    .unwrap();
    let out = outfit(
        dir.path(),
        &["evaluate", "--ratings", "ratings.csv", "--out", "scores.json"],
    );
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn tar_model_file_has_only_seed_and_mode() {
    let dir = tempfile::tempdir().unwrap();
    outfit_ok(
        dir.path(),
        &["train", "--model", "tar", "--seed", "7", "--out", "tar.json"],
    );
    let value: serde_json::Value =
        serde_json::from_slice(&std::fs::read(dir.path().join("tar.json")).unwrap()).unwrap();
    assert_eq!(value["kind"], "tar");
    let params = value["parameters"].as_object().unwrap();
    let mut keys: Vec<&str> = params.keys().map(String::as_str).collect();
    keys.sort_unstable();
    assert_eq!(keys, vec!["mode", "seed"]);
    assert_eq!(params["seed"], 7);
    assert_eq!(params["mode"], "uniform");
}

#[test]
fn ingest_reports_malformed_lines_and_cleanup_drops() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = dir.path().join("manifest.jsonl");
    std::fs::write(
        &manifest,
        concat!(
            r#"{"id":"keep","image_path":"a.png","width":399,"height":400,"parts":[{"part_name":"top","box":[0,0,10,10]}]}"#, "\n",
            "this is not json\n",
            r#"{"id":"drop","image_path":"b.png","width":500,"height":500,"parts":[{"part_name":"top","box":[0,0,10,10]}]}"#, "\n",
        ),
    )
    .unwrap();
    let summary = outfit_ok(
        dir.path(),
        &["ingest", "--manifest", "manifest.jsonl", "--out", "records.jsonl"],
    );
    assert_eq!(summary["parsed"], 2);
    assert_eq!(summary["skipped"], 1);
    assert_eq!(summary["skipped_lines"][0]["line"], 2);
    assert_eq!(summary["dropped_by_cleanup"], 1);
    assert_eq!(summary["records_out"], 1);
}

/// Stage outputs feed the next stage unchanged, and reruns are
/// byte-identical.
#[test]
fn small_pipeline_is_idempotent() {
    let dir = tempfile::tempdir().unwrap();
    synth_corpus(dir.path(), 10, 5);

    let run = |_label: &str| {
        outfit_ok(
            dir.path(),
            &["ingest", "--manifest", "manifest.jsonl", "--out", "records.jsonl"],
        );
        outfit_ok(
            dir.path(),
            &[
                "featurize", "--records", "records.jsonl", "--images-root", ".",
                "--out", "descriptors.jsonl",
            ],
        );
        outfit_ok(
            dir.path(),
            &[
                "codebook", "--descriptors", "descriptors.jsonl", "--k", "4",
                "--seed", "3", "--out", "codebook.json",
            ],
        );
        outfit_ok(
            dir.path(),
            &[
                "train", "--model", "gmm", "--descriptors", "descriptors.jsonl",
                "--codebook", "codebook.json", "--components", "3", "--seed", "3",
                "--out", "model.json",
            ],
        );
        outfit_ok(
            dir.path(),
            &[
                "recommend", "--model", "model.json", "--descriptors", "descriptors.jsonl",
                "--image", "img0000", "--hidden", "top", "--out", "query.json",
            ],
        );
        let mut bytes = Vec::new();
        for f in ["records.jsonl", "descriptors.jsonl", "codebook.json", "model.json", "query.json"] {
            bytes.push(std::fs::read(dir.path().join(f)).unwrap());
        }
        bytes
    };

    let first = run("first");
    let second = run("second");
    assert_eq!(first, second, "pipeline artifacts differ between identical runs");
}

#[test]
fn triad_recommend_yields_two_descriptors_and_one_merged_list() {
    let dir = tempfile::tempdir().unwrap();
    synth_corpus(dir.path(), 8, 11);
    synth_inventory(dir.path(), 20, 13);

    outfit_ok(dir.path(), &["ingest", "--manifest", "manifest.jsonl", "--out", "records.jsonl"]);
    outfit_ok(
        dir.path(),
        &["featurize", "--records", "records.jsonl", "--images-root", ".", "--out", "descriptors.jsonl"],
    );
    outfit_ok(
        dir.path(),
        &["ingest", "--manifest", "inventory_manifest.jsonl", "--out", "inv_records.jsonl"],
    );
    // Inventory images are small; cleanup would drop them, so featurize the
    // manifest records directly.
    outfit_ok(
        dir.path(),
        &["featurize", "--records", "inventory_manifest.jsonl", "--images-root", ".", "--parts", "top", "--out", "inventory.jsonl"],
    );
    outfit_ok(
        dir.path(),
        &["train", "--model", "pr", "--mode", "triad", "--out", "pr.json"],
    );
    let summary = outfit_ok(
        dir.path(),
        &[
            "recommend", "--model", "pr.json", "--descriptors", "descriptors.jsonl",
            "--image", "img0000", "--hidden", "top", "--out", "query.json",
        ],
    );
    assert_eq!(summary["descriptors"], 2);

    let summary = outfit_ok(
        dir.path(),
        &[
            "retrieve", "--query", "query.json", "--inventory", "inventory.jsonl",
            "--topk", "5", "--out", "ranked.json",
        ],
    );
    assert_eq!(summary["queries"], 1);
    let ranked: serde_json::Value =
        serde_json::from_slice(&std::fs::read(dir.path().join("ranked.json")).unwrap()).unwrap();
    let entries = ranked["lists"][0]["entries"].as_array().unwrap();
    assert_eq!(entries.len(), 5);
    let mut ids: Vec<&str> = entries.iter().map(|e| e["item_id"].as_str().unwrap()).collect();
    ids.sort_unstable();
    ids.dedup();
    assert_eq!(ids.len(), 5, "merged list must not repeat items");
}

#[test]
fn report_grid_has_one_row_per_algorithm_and_topk_columns() {
    let dir = tempfile::tempdir().unwrap();
    let inventory = synth_inventory(dir.path(), 12, 3);

    // Five algorithms with identical ranked lists of ten items.
    let entries: Vec<String> = inventory.ids[..10]
        .iter()
        .map(|id| format!(r#"{{"item_id":"{id}","distance":0.5}}"#))
        .collect();
    let mut ranked_args: Vec<String> = Vec::new();
    for name in ["pr", "cnnc", "gmm", "mcl", "tar"] {
        let path = format!("ranked_{name}.json");
        std::fs::write(
            dir.path().join(&path),
            format!(
                r#"{{"version":1,"metric":"l1","topk":10,"lists":[{{"query_id":"q1","k":10,"entries":[{}]}}]}}"#,
                entries.join(",")
            ),
        )
        .unwrap();
        ranked_args.push(format!("{name}={path}"));
    }

    let mut args: Vec<&str> = vec!["report"];
    for pair in &ranked_args {
        args.push("--ranked");
        args.push(pair);
    }
    args.extend([
        "--out", "report.html",
        "--inventory-manifest", "inventory_manifest.jsonl",
        "--seed", "21",
        "--topk", "10",
    ]);
    let summary = outfit_ok(dir.path(), &args);
    assert_eq!(summary["queries"], 1);

    let html = std::fs::read_to_string(dir.path().join("report.html")).unwrap();
    assert_eq!(html.matches("<tr>").count(), 5, "one row per algorithm");
    assert_eq!(html.matches("<img ").count(), 50, "10 columns per row");
    assert!(html.contains("row-order-seed"));

    // Fixed seed: identical bytes on rerun.
    outfit_ok(dir.path(), &args);
    let again = std::fs::read_to_string(dir.path().join("report.html")).unwrap();
    assert_eq!(html, again);
}

#[test]
fn report_with_no_queries_still_renders_header() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("ranked_empty.json"),
        r#"{"version":1,"metric":"l1","topk":10,"lists":[]}"#,
    )
    .unwrap();
    let summary = outfit_ok(
        dir.path(),
        &["report", "--ranked", "pr=ranked_empty.json", "--out", "report.html", "--seed", "4"],
    );
    assert_eq!(summary["queries"], 0);
    let html = std::fs::read_to_string(dir.path().join("report.html")).unwrap();
    assert!(html.contains("<h1>Retrieval gallery</h1>"));
}

#[test]
fn missing_inventory_images_render_placeholders() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("ranked.json"),
        r#"{"version":1,"metric":"l1","topk":2,"lists":[{"query_id":"q","k":2,"entries":[{"item_id":"ghost1","distance":0.1},{"item_id":"ghost2","distance":0.2}]}]}"#,
    )
    .unwrap();
    let summary = outfit_ok(
        dir.path(),
        &["report", "--ranked", "cnnc=ranked.json", "--out", "report.html", "--seed", "1"],
    );
    assert_eq!(summary["missing_images"], 2);
    let html = std::fs::read_to_string(dir.path().join("report.html")).unwrap();
    assert_eq!(html.matches("class=\"missing\"").count(), 2);
}

#[test]
fn config_file_supplies_defaults_and_flags_override() {
    let dir = tempfile::tempdir().unwrap();
    synth_corpus(dir.path(), 6, 9);
    std::fs::write(
        dir.path().join("pipeline.toml"),
        "[paths]\nmanifest = \"manifest.jsonl\"\nrecords = \"records.jsonl\"\n\n[params]\nseed = 11\n",
    )
    .unwrap();

    // Config supplies --manifest and --out.
    let summary = outfit_ok(dir.path(), &["--config", "pipeline.toml", "ingest"]);
    assert_eq!(summary["records_out"], 6);
    assert!(dir.path().join("records.jsonl").exists());

    // Flag overrides the config's records path.
    let summary = outfit_ok(
        dir.path(),
        &["--config", "pipeline.toml", "ingest", "--out", "records2.jsonl"],
    );
    assert_eq!(summary["output"], "records2.jsonl");
    assert!(dir.path().join("records2.jsonl").exists());
}

#[test]
fn env_vars_supply_flag_defaults() {
    let dir = tempfile::tempdir().unwrap();
    synth_corpus(dir.path(), 5, 17);
    let out = outfit_env(
        dir.path(),
        &["ingest", "--out", "records.jsonl"],
        &[("OUTFIT_MANIFEST", "manifest.jsonl")],
    );
    assert!(
        out.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    assert!(dir.path().join("records.jsonl").exists());
}

#[test]
fn records_missing_a_part_are_excluded_from_training_not_fatal() {
    let dir = tempfile::tempdir().unwrap();
    synth_corpus(dir.path(), 6, 23);
    // Append a top-only record backed by an existing image.
    let extra = r#"{"id":"partial","image_path":"images/img0000.png","width":120,"height":420,"parts":[{"part_name":"top","box":[10,20,100,160]}]}"#;
    let manifest = dir.path().join("manifest.jsonl");
    let mut text = std::fs::read_to_string(&manifest).unwrap();
    text.push_str(extra);
    text.push('\n');
    std::fs::write(&manifest, text).unwrap();

    outfit_ok(dir.path(), &["ingest", "--manifest", "manifest.jsonl", "--out", "records.jsonl"]);
    outfit_ok(
        dir.path(),
        &["featurize", "--records", "records.jsonl", "--images-root", ".", "--out", "descriptors.jsonl"],
    );
    let summary = outfit_ok(
        dir.path(),
        &[
            "train", "--model", "cnnc", "--descriptors", "descriptors.jsonl",
            "--neighbors", "3", "--out", "model.json",
        ],
    );
    assert_eq!(summary["examples"], 6);
    assert_eq!(summary["excluded"], 1);
}

#[test]
fn diverse_recommend_returns_d_descriptors() {
    let dir = tempfile::tempdir().unwrap();
    synth_corpus(dir.path(), 10, 31);
    outfit_ok(dir.path(), &["ingest", "--manifest", "manifest.jsonl", "--out", "records.jsonl"]);
    outfit_ok(
        dir.path(),
        &["featurize", "--records", "records.jsonl", "--images-root", ".", "--out", "descriptors.jsonl"],
    );
    outfit_ok(
        dir.path(),
        &[
            "train", "--model", "cnnc", "--descriptors", "descriptors.jsonl",
            "--neighbors", "6", "--out", "model.json",
        ],
    );
    let summary = outfit_ok(
        dir.path(),
        &[
            "recommend", "--model", "model.json", "--descriptors", "descriptors.jsonl",
            "--image", "img0000", "--hidden", "top", "--diverse", "3",
            "--seed", "5", "--out", "query.json",
        ],
    );
    assert_eq!(summary["descriptors"], 3);
}

#[test]
fn mcl_sampling_mode_is_seed_stable() {
    let dir = tempfile::tempdir().unwrap();
    synth_corpus(dir.path(), 10, 37);
    outfit_ok(dir.path(), &["ingest", "--manifest", "manifest.jsonl", "--out", "records.jsonl"]);
    outfit_ok(
        dir.path(),
        &["featurize", "--records", "records.jsonl", "--images-root", ".", "--out", "descriptors.jsonl"],
    );
    outfit_ok(
        dir.path(),
        &["codebook", "--descriptors", "descriptors.jsonl", "--k", "5", "--seed", "2", "--out", "codebook.json"],
    );
    outfit_ok(
        dir.path(),
        &[
            "train", "--model", "mcl", "--descriptors", "descriptors.jsonl",
            "--codebook", "codebook.json", "--topics", "2", "--seed", "2",
            "--out", "model.json",
        ],
    );
    let run = |out: &str| {
        outfit_ok(
            dir.path(),
            &[
                "recommend", "--model", "model.json", "--descriptors", "descriptors.jsonl",
                "--image", "img0001", "--hidden", "top", "--sample", "--seed", "11",
                "--out", out,
            ],
        );
        std::fs::read(dir.path().join(out)).unwrap()
    };
    assert_eq!(run("query_a.json"), run("query_b.json"));
}

#[test]
fn evaluate_emits_agreement_report_and_solid_probability() {
    let dir = tempfile::tempdir().unwrap();
    synth_inventory(dir.path(), 10, 41);
    outfit_ok(
        dir.path(),
        &["featurize", "--records", "inventory_manifest.jsonl", "--images-root", ".", "--parts", "top", "--out", "inventory.jsonl"],
    );

    // One ranked file per algorithm over two queries.
    let inventory_ids: Vec<String> = (0..10).map(|i| format!("item{i:04}")).collect();
    let entries: Vec<String> = inventory_ids
        .iter()
        .take(5)
        .map(|id| format!(r#"{{"item_id":"{id}","distance":0.3}}"#))
        .collect();
    for name in ["pr", "cnnc"] {
        std::fs::write(
            dir.path().join(format!("ranked_{name}.json")),
            format!(
                r#"{{"version":1,"metric":"l1","topk":5,"lists":[{{"query_id":"q1","k":5,"entries":[{e}]}},{{"query_id":"q2","k":5,"entries":[{e}]}}]}}"#,
                e = entries.join(",")
            ),
        )
        .unwrap();
    }
    std::fs::write(
        dir.path().join("ratings.csv"),
        "query_id,rater_id,pr,cnnc\nq1,r1,1,2\nq1,r2,1,2\nq1,r3,0,1\nq2,r1,-1,0\nq2,r2,-1,0\nq2,r3,2,1\n",
    )
    .unwrap();
    std::fs::write(dir.path().join("classes.csv"), "query_id,class\nq1,solid\nq2,patterned\n")
        .unwrap();

    outfit_ok(
        dir.path(),
        &[
            "evaluate", "--ratings", "ratings.csv", "--out", "scores.json",
            "--classes", "classes.csv",
            "--ranked", "pr=ranked_pr.json", "--ranked", "cnnc=ranked_cnnc.json",
            "--inventory", "inventory.jsonl",
            "--html", "scores.html",
        ],
    );
    let scores: serde_json::Value =
        serde_json::from_slice(&std::fs::read(dir.path().join("scores.json")).unwrap()).unwrap();
    assert!(scores["agreement_report"]["solid"]["queries"] == 1);
    assert!(scores["agreement_report"]["patterned"]["queries"] == 1);
    assert!(scores["solid_probability"].is_object());
    let html = std::fs::read_to_string(dir.path().join("scores.html")).unwrap();
    assert!(html.contains("Algorithm scores"));
    assert!(html.contains("Probability of solid retrievals"));
}

#[test]
fn hybrid_recommend_reports_class() {
    let dir = tempfile::tempdir().unwrap();
    synth_corpus(dir.path(), 8, 2);
    outfit_ok(dir.path(), &["ingest", "--manifest", "manifest.jsonl", "--out", "records.jsonl"]);
    outfit_ok(
        dir.path(),
        &["featurize", "--records", "records.jsonl", "--images-root", ".", "--out", "descriptors.jsonl"],
    );
    outfit_ok(
        dir.path(),
        &[
            "train", "--model", "hybrid", "--descriptors", "descriptors.jsonl",
            "--neighbors", "3", "--out", "hybrid.json",
        ],
    );
    outfit_ok(
        dir.path(),
        &[
            "recommend", "--model", "hybrid.json", "--descriptors", "descriptors.jsonl",
            "--image", "img0001", "--hidden", "top", "--out", "query.json",
        ],
    );
    let query: serde_json::Value =
        serde_json::from_slice(&std::fs::read(dir.path().join("query.json")).unwrap()).unwrap();
    assert!(query["class"] == "solid" || query["class"] == "patterned");
}
