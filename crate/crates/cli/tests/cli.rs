use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn popstrat(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_popstrat"))
        .args(args)
        .env_remove("POPSTRAT_WORKERS")
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = popstrat(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}{}",
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn field(report: &str, key: &str) -> String {
    report
        .lines()
        .find_map(|l| l.strip_prefix(&format!("{key}=")))
        .unwrap_or_else(|| panic!("{key} missing from\n{report}"))
        .to_string()
}

fn read(dir: &Path, name: &str) -> String {
    fs::read_to_string(dir.join(name)).unwrap()
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn synth(root: &Path, name: &str, populations: &str, samples: &str, variants: &str) -> PathBuf {
    let dir = root.join(name);
    ok(&[
        "synth",
        "--populations",
        populations,
        "--samples",
        samples,
        "--variants",
        variants,
        "--divergence",
        "0.1",
        "--seed",
        "42",
        "--out",
        path(&dir),
    ]);
    dir
}

#[test]
fn synth_then_kmeans_recovers_populations() {
    let root = tempfile::tempdir().unwrap();
    let cohort = synth(root.path(), "cohort", "3", "100", "3000");
    assert!(cohort.join("cohort.vcf").is_file() && cohort.join("panel.txt").is_file());
    let run = root.path().join("km");
    let stdout = ok(&[
        "cluster-kmeans",
        "--k",
        "3",
        "--input",
        path(&cohort),
        "--restarts",
        "20",
        "--out",
        path(&run),
    ]);
    let report = read(&run, "report.txt");
    let ari: f64 = field(&report, "ari").parse().unwrap();
    assert!(ari >= 0.9, "ari {ari}");
    assert!(stdout.contains("task=cluster-kmeans"));
    let summary = read(&run, "run_summary.txt");
    assert_eq!(field(&summary, "seed"), "42");
    assert_eq!(field(&summary, "featurize_hash").len(), 16);
    assert!(read(&run, "report.csv").starts_with("k,restarts,iterations,wcss,ri,ari"));
    assert_eq!(read(&run, "assignments.csv").lines().count(), 301);
    assert!(run.join("model/manifest.txt").is_file() && run.join("model/arrays.bin").is_file());
}

#[test]
fn output_directories_are_never_overwritten() {
    let root = tempfile::tempdir().unwrap();
    let a = synth(root.path(), "c", "2", "5", "50");
    let out = ok(&["synth", "--populations", "2", "--samples", "5", "--variants", "50", "--out", path(&a)]);
    let second = PathBuf::from(field(&out, "out"));
    assert_ne!(second, a);
    assert!(second.file_name().unwrap().to_str().unwrap().starts_with("c-"));
    assert!(second.join("cohort.vcf").is_file());
}

#[test]
fn featurize_applies_the_min_alt_rule_on_a_full_header() {
    let root = tempfile::tempdir().unwrap();
    let samples: Vec<String> = (0..2504).map(|i| format!("HG{i:05}")).collect();
    let write = |name: &str, alt: usize| {
        let mut s = format!(
            "##fileformat=VCFv4.1\n#CHROM\tPOS\tID\tREF\tALT\tQUAL\tFILTER\tINFO\tFORMAT\t{}\n",
            samples.join("\t")
        );
        s.push_str("1\t15211\trs78601809\tT\tG\t100\tPASS\tAC=3050;AF=0.609026;AN=5008;NS=2504;DP=32245\tGT");
        for i in 0..2504 {
            s.push_str(&format!("\t{}|{}", (2 * i < alt) as u8, (2 * i + 1 < alt) as u8));
        }
        s.push('\n');
        let p = root.path().join(name);
        fs::write(&p, s).unwrap();
        p
    };
    for (alt, kept) in [(3050, "1"), (12, "1"), (11, "0")] {
        let vcf = write(&format!("v{alt}.vcf"), alt);
        let out = root.path().join(format!("f{alt}"));
        ok(&["featurize", "--vcf", path(&vcf), "--min-alt", "12", "--out", path(&out)]);
        let report = read(&out, "report.txt");
        assert_eq!(field(&report, "samples"), "2504");
        assert_eq!(field(&report, "variants_retained"), kept, "alt {alt}");
    }
}

#[test]
fn featurize_cache_feeds_later_tasks() {
    let root = tempfile::tempdir().unwrap();
    let cohort = synth(root.path(), "cohort", "3", "20", "400");
    let feat = root.path().join("feat");
    ok(&["featurize", "--input", path(&cohort), "--out", path(&feat)]);
    assert!(feat.join("matrix.manifest").is_file());
    assert!(read(&feat, "labeled.csv").starts_with("sample_id,label,"));
    let hash = field(&read(&feat, "run_summary.txt"), "featurize_hash");

    let km = root.path().join("km");
    ok(&["cluster-kmeans", "--input", path(&feat), "--k", "3", "--restarts", "5", "--out", path(&km)]);
    assert_eq!(field(&read(&km, "run_summary.txt"), "featurize_hash"), hash);

    let el = root.path().join("elbow");
    ok(&["elbow", "--input", path(&feat), "--k-max", "5", "--restarts", "5", "--out", path(&el)]);
    assert_eq!(read(&el, "elbow.csv").lines().count(), 6);
    assert_eq!(field(&read(&el, "report.txt"), "elbow_k"), "3");
}

#[test]
fn classifiers_and_evaluate_agree() {
    let root = tempfile::tempdir().unwrap();
    let cohort = synth(root.path(), "cohort", "3", "40", "1000");
    for task in ["train-mlp", "train-dbn"] {
        let run = root.path().join(task);
        ok(&[task, "--input", path(&cohort), "--hidden", "32,16", "--epochs", "30", "--out", path(&run)]);
        let report = read(&run, "report.txt");
        assert_eq!(field(&report, "test_rows"), "24");
        let acc: f64 = field(&report, "accuracy").parse().unwrap();
        assert!(acc >= 0.9, "{task} accuracy {acc}");
        assert!(run.join("history.csv").is_file() && run.join("confusion.csv").is_file());

        let ev = root.path().join(format!("{task}-eval"));
        ok(&[
            "evaluate",
            "--truth",
            path(&run.join("truth.csv")),
            "--pred",
            path(&run.join("predictions.csv")),
            "--out",
            path(&ev),
        ]);
        let eval = read(&ev, "report.txt");
        assert_eq!(field(&eval, "accuracy"), field(&report, "accuracy"));
        assert_eq!(field(&eval, "rmse"), field(&report, "rmse"));
    }
}

#[test]
fn evaluate_self_comparison_is_perfect() {
    let root = tempfile::tempdir().unwrap();
    let csv = root.path().join("a.csv");
    fs::write(&csv, "sample_id,label\ns1,GBR\ns2,FIN\ns3,CHB\ns4,GBR\n").unwrap();
    let out = root.path().join("ev");
    ok(&["evaluate", "--truth", path(&csv), "--pred", path(&csv), "--out", path(&out)]);
    let report = read(&out, "report.txt");
    assert_eq!(field(&report, "accuracy").parse::<f64>().unwrap(), 1.0);
    assert_eq!(field(&report, "rmse").parse::<f64>().unwrap(), 0.0);
    assert_eq!(field(&report, "ari").parse::<f64>().unwrap(), 1.0);
}

#[test]
fn identical_runs_write_identical_reports() {
    let root = tempfile::tempdir().unwrap();
    let cohort = synth(root.path(), "cohort", "3", "15", "300");
    let run = |name: &str| {
        let out = root.path().join(name);
        ok(&[
            "cluster-dec",
            "--input",
            path(&cohort),
            "--k",
            "3",
            "--hidden",
            "32,8",
            "--sae-iterations",
            "20",
            "--finetune-iterations",
            "20",
            "--max-iterations",
            "40",
            "--out",
            path(&out),
        ]);
        (read(&out, "report.txt"), read(&out, "embedding.csv"))
    };
    assert_eq!(run("a"), run("b"));
}

#[test]
fn config_file_supplies_defaults_and_flags_override() {
    let root = tempfile::tempdir().unwrap();
    let cohort = synth(root.path(), "cohort", "2", "10", "200");
    let conf = root.path().join("run.conf");
    fs::write(&conf, format!("task = cluster-kmeans\ninput = {}\nk = 4\nrestarts = 3\n", cohort.display()))
        .unwrap();
    let a = root.path().join("a");
    ok(&["--config", path(&conf), "--out", path(&a)]);
    assert_eq!(field(&read(&a, "report.txt"), "k"), "4");
    let b = root.path().join("b");
    ok(&["--config", path(&conf), "--k", "2", "--out", path(&b)]);
    assert_eq!(field(&read(&b, "report.txt"), "k"), "2");
    assert_eq!(field(&read(&b, "report.txt"), "restarts"), "3");
}

#[test]
fn exit_codes_follow_error_categories() {
    let root = tempfile::tempdir().unwrap();
    let out = |n: &str| root.path().join(n).to_str().unwrap().to_string();

    // config: unknown flag, bad value, missing input
    assert_eq!(popstrat(&["cluster-kmeans", "--k", "3", "--bogus"]).status.code(), Some(1));
    assert_eq!(popstrat(&["synth", "--divergence", "2", "--out", &out("s")]).status.code(), Some(1));
    assert_eq!(popstrat(&["cluster-kmeans", "--k", "3", "--out", &out("m")]).status.code(), Some(1));

    // parse: malformed VCF data line
    let vcf = root.path().join("bad.vcf");
    fs::write(&vcf, "##fileformat=VCFv4.1\n#CHROM\tPOS\tID\tREF\tALT\tQUAL\tFILTER\tINFO\tFORMAT\tS1\n1\tx\t.\tA\tG\t.\tPASS\t.\tGT\t0|1\n").unwrap();
    let o = popstrat(&["featurize", "--vcf", path(&vcf), "--out", &out("f")]);
    assert_eq!(o.status.code(), Some(2), "{}", String::from_utf8_lossy(&o.stderr));

    // data: a truth row without a prediction
    let t = root.path().join("t.csv");
    let p = root.path().join("p.csv");
    fs::write(&t, "sample_id,label\na,X\nb,Y\n").unwrap();
    fs::write(&p, "sample_id,label\na,X\nc,Y\n").unwrap();
    let o = popstrat(&["evaluate", "--truth", path(&t), "--pred", path(&p), "--out", &out("e")]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("DataError"));

    assert_eq!(popstrat(&["--help"]).status.code(), Some(0));
}

#[test]
fn worker_count_is_recorded() {
    let root = tempfile::tempdir().unwrap();
    let dir = root.path().join("s");
    let o = Command::new(env!("CARGO_BIN_EXE_popstrat"))
        .args(["synth", "--populations", "2", "--samples", "3", "--variants", "10", "--out", path(&dir)])
        .env("POPSTRAT_WORKERS", "1")
        .output()
        .unwrap();
    assert!(o.status.success());
    assert_eq!(field(&read(&dir, "run_summary.txt"), "workers"), "1");
    assert_eq!(
        popstrat(&["synth", "--workers", "0", "--out", path(&root.path().join("z"))]).status.code(),
        Some(1)
    );
}
