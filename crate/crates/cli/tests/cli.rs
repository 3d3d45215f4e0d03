use std::path::Path;
use std::process::{Command, Output};

fn sicp(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sicp")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn read_csv(path: &Path) -> (Vec<String>, Vec<Vec<String>>) {
    let mut r = csv::Reader::from_path(path).unwrap();
    let header = r.headers().unwrap().iter().map(String::from).collect();
    let rows = r.records().map(|rec| rec.unwrap().iter().map(String::from).collect()).collect();
    (header, rows)
}

#[test]
fn solve_ex1_writes_history_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("ex1.csv");
    let o = sicp(&[
        "solve",
        "--benchmark",
        "ex1",
        "--method",
        "surface",
        "--centering",
        "const:1.0",
        "--sigma-tol",
        "1e-7",
        "--output",
        path.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));

    let out = stdout(&o);
    let mut lines = out.lines();
    assert_eq!(lines.next(), Some("feasibility_cuts,optimality_cuts,final_objective,status"));
    let summary: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(summary[0], "1");
    assert!((35..=43).contains(&summary[1].parse::<usize>().unwrap()), "{summary:?}");
    assert!((summary[2].parse::<f64>().unwrap() - 3.2212).abs() < 1e-3);
    assert_eq!(summary[3], "Converged");

    let (header, rows) = read_csv(&path);
    assert_eq!(header, ["iter", "cut_type", "sigma", "y0", "mu0", "dropped"]);
    let f: usize = summary[0].parse().unwrap();
    let opt: usize = summary[1].parse().unwrap();
    // One row per record, the final stop record included.
    assert_eq!(rows.len(), f + opt + 1);
    assert_eq!(rows.last().unwrap()[1], "stop");
    let sigma: Vec<f64> = rows.iter().map(|r| r[2].parse().unwrap()).collect();
    assert!(sigma.windows(2).all(|w| w[1] <= w[0] + 1e-12), "{sigma:?}");
}

#[test]
fn history_to_stdout_and_iteration_limit() {
    let o = sicp(&["solve", "--benchmark", "ex1", "--max-iters", "3"]);
    assert_eq!(o.status.code(), Some(1));
    let out = stdout(&o);
    assert!(out.starts_with("iter,cut_type,sigma,y0,mu0,dropped\n"));
    assert!(out.contains(",IterLimit\n"));
}

#[test]
fn same_seed_same_bytes() {
    let dir = tempfile::tempdir().unwrap();
    let run = |name: &str| {
        let p = dir.path().join(name);
        let o = sicp(&["solve", "--benchmark", "ex3:m=2", "--seed", "5", "--output", p.to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(0));
        (std::fs::read(p).unwrap(), o.stdout)
    };
    assert_eq!(run("a.csv"), run("b.csv"));
}

#[test]
fn run_file_with_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("run.toml");
    std::fs::write(&file, "benchmark = \"ex4e:n=5\"\nmethod = \"plane\"\nsigma_tol = 1e-5\nbeta = 2.0\n").unwrap();
    let o = sicp(&["solve", "--benchmark", file.to_str().unwrap(), "--method", "surface"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains("ex4e:n=5 Surface"));

    std::fs::write(&file, "benchmark = \"ex1\"\nbogus = 1\n").unwrap();
    assert_eq!(sicp(&["solve", "--benchmark", file.to_str().unwrap()]).status.code(), Some(2));
}

#[test]
fn parse_errors_exit_2() {
    for args in [
        &["solve", "--benchmark", "ex1", "--bogus"][..],
        &["solve", "--benchmark", "ex2"],
        &["solve", "--benchmark", "ex1", "--method", "cone"],
        &["solve", "--benchmark", "ex1", "--centering", "const"],
        &["solve", "--benchmark", "ex1", "--beta", "0.5"],
        &["solve", "--benchmark", "ex1", "--sigma-tol", "abc"],
        &["table", "ex9-sweep"],
        &["frobnicate"],
    ] {
        let o = sicp(args);
        assert_eq!(o.status.code(), Some(2), "{args:?}");
        assert!(!o.stderr.is_empty(), "{args:?}");
    }
    let o = sicp(&["solve", "--benchmark", "ex1", "--bogus"]);
    assert!(String::from_utf8_lossy(&o.stderr).contains("Usage"));
}

#[test]
fn list_benchmarks_names_every_family() {
    let o = sicp(&["list-benchmarks"]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    for id in ["ex1", "seb1", "seb2", "ex4e:n=N", "ex3:m=M", "ex3:inf"] {
        assert!(out.lines().any(|l| l.starts_with(id)), "{id}");
    }
}

#[test]
fn ex1_sweep_table() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("t.csv");
    let o = sicp(&["table", "ex1-sweep", "--output", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let (header, rows) = read_csv(&path);
    assert_eq!(header.len(), 7);
    assert_eq!(rows.iter().map(|r| r[0].as_str()).collect::<Vec<_>>(), ["1e-4", "1e-5", "1e-6", "1e-7"]);
    for (i, r) in rows.iter().enumerate() {
        assert_eq!(r[1], "1");
        // Relative error tracks sigma within a decade.
        let surface: f64 = r[3].parse().unwrap();
        assert!((surface + 4.0 + i as f64).abs() < 1.0, "{r:?}");
    }
}

#[test]
fn ex3_spectrum_table() {
    let o = sicp(&["table", "ex3-spectrum"]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    let mut r = csv::Reader::from_reader(out.as_bytes());
    assert_eq!(r.headers().unwrap(), vec!["m", "optimality_cuts", "feasibility_cuts", "x1", "x2", "z"]);
    let rows: Vec<csv::StringRecord> = r.records().map(Result::unwrap).collect();
    let published = [3.2211, 3.0746, 3.0726, 3.0192, 2.9999, 2.9937, 2.9914, 2.9866];
    assert_eq!(rows.len(), published.len());
    assert_eq!(&rows[7][0], "inf");
    for (row, z) in rows.iter().zip(published) {
        assert!((row[5].parse::<f64>().unwrap() - z).abs() < 2e-3, "{row:?}");
        assert_eq!(&row[4], "0.20000");
    }
}

#[test]
fn moment_max_from_file() {
    let dir = tempfile::tempdir().unwrap();
    let spec = dir.path().join("m.toml");
    std::fs::write(
        &spec,
        "[domain]\nbox = { lo = [0.0], hi = [1.0] }\n\n[[moment]]\nmonomial = [1]\nvalue = 0.5\n",
    )
    .unwrap();
    let out = dir.path().join("support.csv");
    // max E[x^2] with mean 1/2 on [0, 1]: half the mass at each end.
    let o = sicp(&[
        "moment-max",
        "--spec",
        spec.to_str().unwrap(),
        "--objective",
        "x^2",
        "--seed",
        "4",
        "--output",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let (header, rows) = read_csv(&out);
    assert_eq!(header, ["weight", "xi0"]);
    assert!(rows.len() <= 2);
    let value: f64 = rows.iter().map(|r| r[0].parse::<f64>().unwrap() * r[1].parse::<f64>().unwrap().powi(2)).sum();
    assert!((value - 0.5).abs() < 1e-2, "{value}");
    assert!(stdout(&o).starts_with("# value "));

    let bad = sicp(&["moment-max", "--spec", spec.to_str().unwrap(), "--objective", "y^2"]);
    assert_eq!(bad.status.code(), Some(2));
}
