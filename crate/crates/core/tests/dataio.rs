use std::fs;

use spectral_inversion::dataio::{
    builtin, emit_plot_data, load, load_run, save, save_run, DataSet, Format, PlotSource, BUILTIN_LABELS,
};
use spectral_inversion::{build_curve, estimate_critical_coupling, fit_coulomb, invert, Config, Error, Shape};

#[test]
fn embedded_sets_satisfy_invariants() {
    for label in BUILTIN_LABELS {
        let d = builtin(label).unwrap();
        assert_eq!(d.len(), 10, "{label}");
        assert!(d.points().windows(2).all(|w| w[1].0 > w[0].0 && w[1].1 < w[0].1), "{label}");
        assert_eq!(d.metadata.mass, 1.0);
        assert_eq!(d.metadata.vertex_lambda, Some(2.0));
        assert_eq!(d.metadata.smoothing_mass, Some(1.1));
    }
}

#[test]
fn files_round_trip_in_both_formats() {
    let dir = tempfile::tempdir().unwrap();
    for label in BUILTIN_LABELS {
        let d = builtin(label).unwrap();
        let csv = dir.path().join(format!("{label}.csv"));
        save(&d, &csv, Format::Delimited).unwrap();
        assert_eq!(load(&csv, Format::Delimited).unwrap().points(), d.points());
        let toml = dir.path().join(format!("{label}.toml"));
        save(&d, &toml, Format::Structured).unwrap();
        assert_eq!(load(&toml, Format::from_path(&toml)).unwrap(), d);
    }
}

#[test]
fn hand_typed_table_digits_equal_builtin() {
    let text = "v,E\n2.008,-0.01\n2.347,-0.02\n2.627,-0.03\n2.880,-0.04\n3.119,-0.05\n\
                4.203,-0.10\n6.227,-0.20\n8.260,-0.30\n10.40,-0.40\n12.53,-0.50\n";
    let d = DataSet::from_delimited("S2", text).unwrap();
    assert_eq!(d.points(), builtin("S₂").unwrap().points());
}

#[test]
fn malformed_files_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.csv");
    fs::write(&path, "v,E\n3,-0.1\n2,-0.2\n").unwrap();
    assert_eq!(load(&path, Format::Delimited), Err(Error::NonMonotoneAbscissae));
    fs::write(&path, "3,-0.1\n4,-0.2\n").unwrap();
    assert!(matches!(load(&path, Format::Delimited), Err(Error::Parse(_))));
    fs::write(&path, "v,E\n3,x\n").unwrap();
    assert!(matches!(load(&path, Format::Delimited), Err(Error::Parse(_))));
    assert!(matches!(load(&dir.path().join("missing.csv"), Format::Delimited), Err(Error::Io(_))));
}

fn short_run() -> (spectral_inversion::Run, DataSet, Config) {
    let data = builtin("P1").unwrap();
    let v0 = estimate_critical_coupling(data.points()).unwrap();
    let curve = build_curve(data.points(), Some(v0)).unwrap();
    let config = Config { seed: Some(Shape::coulomb(0.2).unwrap()), max_iterations: 1, ..Default::default() };
    (invert(&curve, &config).unwrap(), data, config)
}

#[test]
fn runs_persist_and_emit_plot_files() {
    let (run, data, config) = short_run();
    let dir = tempfile::tempdir().unwrap();
    let run_dir = dir.path().join("run");
    save_run(&run_dir, &run, &data, &config).unwrap();
    let stored = load_run(&run_dir).unwrap();
    assert_eq!(stored.iterates.len(), run.iterates.len());
    assert_eq!(stored.iterates[0], run.iterates[0]);
    assert_eq!(stored.manifest.residual_history, run.residual_history);
    assert_eq!(stored.data.points(), data.points());
    for &r in &run.r_grid {
        assert_eq!(stored.iterates[1].value(r), run.iterates[1].value(r));
    }

    let plots = dir.path().join("plots");
    let written = emit_plot_data(PlotSource::Run(&stored), &plots).unwrap();
    let names: Vec<String> = written.iter().map(|p| p.file_name().unwrap().to_string_lossy().into()).collect();
    assert_eq!(names, ["f_0.csv", "f_1.csv", "F_data.csv", "F_model.csv", "manifest.toml"]);
    let f1 = fs::read_to_string(plots.join("f_1.csv")).unwrap();
    assert_eq!(f1.lines().count(), run.r_grid.len() + 1);
}

#[test]
fn fit_and_empty_plot_sources() {
    let data = builtin("S1").unwrap();
    let fit = fit_coulomb(data.points(), 1.0).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let written = emit_plot_data(PlotSource::Fit { report: &fit, data: &data }, dir.path()).unwrap();
    assert_eq!(written.len(), 4);
    let empty = dir.path().join("empty");
    let written = emit_plot_data(PlotSource::Empty, &empty).unwrap();
    assert_eq!(written, [empty.join("manifest.toml")]);
}

#[test]
fn unwritable_destination_is_an_io_error() {
    let dir = tempfile::tempdir().unwrap();
    let blocker = dir.path().join("file");
    fs::write(&blocker, "").unwrap();
    assert!(matches!(emit_plot_data(PlotSource::Empty, &blocker.join("sub")), Err(Error::Io(_))));
}
