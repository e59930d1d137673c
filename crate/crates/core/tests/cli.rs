use std::path::Path;
use std::process::{Command, Output};

fn run(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_atr-turret"))
        .args(args)
        .current_dir(cwd)
        .env("RUST_LOG", "error")
        .output()
        .expect("binary runs")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn design_prints_both_axes() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["design", "--out", "rep"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.contains("azimuth") && text.contains("elevation"));
    assert!(text.contains("PM = 70.67"), "{text}");
    for f in [
        "design.csv",
        "open_loop.csv",
        "open_loop_magnitude.svg",
        "open_loop_phase.svg",
    ] {
        assert!(dir.path().join("rep").join(f).is_file(), "{f}");
    }
}

#[test]
fn every_verb_runs_on_csv_input() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("det.csv"),
        "image_id,x1,y1,x2,y2,confidence\na,100,100,140,140,0.9\nb,300,200,338,242,0.7\nb,900,500,930,530,0.2\n",
    )
    .unwrap();
    std::fs::write(
        dir.path().join("gt.csv"),
        "image_id,x1,y1,x2,y2\na,102,98,142,138\nb,302,201,342,241\n",
    )
    .unwrap();
    for verb in ["metrics", "design", "simulate", "sweep", "analyze", "all"] {
        let out = format!("out_{verb}");
        let o = run(
            &[
                verb,
                "--detections",
                "det.csv",
                "--ground-truth",
                "gt.csv",
                "--out",
                &out,
                "--ranges",
                "1000:2000:500",
            ],
            dir.path(),
        );
        assert_eq!(o.status.code(), Some(0), "{verb}: {}", stderr(&o));
    }
    let ph = std::fs::read_to_string(dir.path().join("out_sweep/ph_matrix.csv")).unwrap();
    // 5 strata x 3 ranges x 2 origins
    assert_eq!(ph.lines().count(), 1 + 5 * 3 * 2);
}

#[test]
fn origin_and_seed_flags_apply() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(
        &[
            "simulate",
            "--synthetic",
            "20",
            "--origin",
            "center",
            "--seed",
            "3",
            "--out",
            "s",
        ],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let sims = std::fs::read_to_string(dir.path().join("s/simulations.csv")).unwrap();
    assert_eq!(sims.lines().count(), 21);
    assert!(sims.lines().skip(1).all(|l| l.starts_with("center,")));
}

#[test]
fn config_file_drives_the_run() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("gt.csv"),
        "image_id,x1,y1,x2,y2\na,10,10,50,50\n",
    )
    .unwrap();
    std::fs::write(
        dir.path().join("det.csv"),
        "image_id,x1,y1,x2,y2,confidence\na,12,10,52,50,0.8\n",
    )
    .unwrap();
    std::fs::write(
        dir.path().join("run.toml"),
        "seed = 5\nranges_m = [800.0]\n[paths]\ndetections = \"det.csv\"\nground_truth = \"gt.csv\"\nout_dir = \"res\"\n",
    )
    .unwrap();
    let sub = dir.path().join("elsewhere");
    std::fs::create_dir(&sub).unwrap();
    let o = run(&["sweep", "--config", "../run.toml"], &sub);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    // paths resolve against the config file, not the working directory
    assert!(dir.path().join("res/ph_matrix.csv").is_file());
}

#[test]
fn validation_failures_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("gt.csv"),
        "image_id,x1,y1,x2,y2\na,0,0,10,10\n",
    )
    .unwrap();
    std::fs::write(
        dir.path().join("bad.csv"),
        "image_id,x1,y1,x2,y2,confidence\na,0,0,10,10,0.5\na,9,0,3,10,0.5\na,0,0,10,10,1.7\n",
    )
    .unwrap();
    let o = run(
        &[
            "metrics",
            "--detections",
            "bad.csv",
            "--ground-truth",
            "gt.csv",
        ],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(2));
    let e = stderr(&o);
    assert!(e.contains("line 3") && e.contains("line 4"), "{e}");

    let o = run(&["metrics"], dir.path());
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));

    std::fs::write(dir.path().join("typo.toml"), "sede = 1\n").unwrap();
    let o = run(&["design", "--config", "typo.toml"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("sede"));

    let o = run(
        &["sweep", "--synthetic", "5", "--ranges", "-1:3:1"],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(2));
    let o = run(&["design", "--origin", "top-left"], dir.path());
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn infeasible_design_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("lead.toml"),
        "[controllers.azimuth]\nsource = \"design\"\ncrossover_rad_s = 500.0\nphase_margin_deg = 88.0\n[controllers.elevation]\nsource = \"published\"\n",
    )
    .unwrap();
    let o = run(&["design", "--config", "lead.toml"], dir.path());
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
}
