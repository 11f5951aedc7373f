use proptest::prelude::*;
use treewalk::config::{Counts, ExperimentConfig, ExperimentKind, Grid};
use treewalk::runner::{compute, resolve, run, RunOptions};
use treewalk::{Error, Family};

fn small(kind: ExperimentKind) -> ExperimentConfig {
    let text = match kind {
        ExperimentKind::Spectrum => "depths = [1, 2, 3]",
        ExperimentKind::IprPhase => "d = 3\nwidths = [1.0, 8.0]\nrealizations = 3\ndelta_e = 0.5",
        ExperimentKind::IprCenter => {
            "depths = [3, 4]\nwidths = \"2:10:4\"\nrealizations = [4, 3]\nband_rank = 10"
        }
        ExperimentKind::Dynamics => "d = 4\nwidths = [0.0, 1.0]\nrealizations = 3\ntime_points = 12",
        ExperimentKind::LocalDecay => "d = 4\nwidths = [0.8]\nrealizations = 3\ntime_points = 12",
        ExperimentKind::MaxDepth => "depths = [3, 4]\nwidths = [0.0, 2.0]\nrealizations = [3, 2]\ntime_points = 15",
        ExperimentKind::Scattering => "d = 3\nwidths = [0.0, 2.0, 3.0]\nrealizations = 3\nk_points = 4",
        ExperimentKind::Classical => "d = 4\nwidths = \"0:3:1\"",
    };
    let c = ExperimentConfig::parse(&format!("kind = \"{kind}\"\nseed = 2024\n{text}")).unwrap();
    resolve(&c).unwrap()
}

#[test]
fn bundles_do_not_depend_on_worker_count() {
    for kind in ExperimentKind::ALL {
        let c = small(kind);
        let one = treewalk::ensemble::with_workers(Some(1), || compute(&c).unwrap());
        let three = treewalk::ensemble::with_workers(Some(3), || compute(&c).unwrap());
        assert_eq!(one.files, three.files, "{kind}");
        assert!(one.files.iter().any(|(n, _)| n.ends_with(".csv")));
        assert!(one.files.iter().any(|(n, _)| n.ends_with(".svg")));
    }
}

#[test]
fn run_writes_config_data_plots_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("bundle");
    let c = small(ExperimentKind::Classical);
    let report = run(&c, &RunOptions { workers: Some(2), output: Some(out.clone()) }).unwrap();
    assert_eq!(report.dir, out);
    let written = std::fs::read_to_string(out.join("config.toml")).unwrap();
    assert_eq!(ExperimentConfig::parse(&written).unwrap(), resolve(&c).unwrap());
    let manifest: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["seed"], 2024);
    assert_eq!(manifest["kind"], "classical");
    assert!(manifest["version"].as_str().unwrap().starts_with('v'));
    assert!(out.join("classical.csv").exists() && out.join("classical.svg").exists());

    let again = dir.path().join("again");
    run(&c, &RunOptions { workers: Some(1), output: Some(again.clone()) }).unwrap();
    assert_eq!(
        std::fs::read(out.join("classical.csv")).unwrap(),
        std::fs::read(again.join("classical.csv")).unwrap()
    );
}

#[test]
fn failed_runs_leave_nothing_behind() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("bad");
    let mut c = small(ExperimentKind::Dynamics);
    c.start_column = Some(40);
    assert!(run(&c, &RunOptions { workers: Some(1), output: Some(out.clone()) }).is_err());
    assert!(!out.exists());
    assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 0);
}

#[test]
fn invalid_configs_name_the_field() {
    let cases = [
        ("kind = \"spectrum\"\ndepths = [2]", "seed"),
        ("kind = \"classical\"\nseed = 1\nwidths = []", "widths"),
        ("kind = \"scattering\"\nseed = 1\nwidths = \"0:2:-1\"", "widths"),
        ("kind = \"dynamics\"\nseed = 1\nrealizations = 0", "realizations"),
        ("kind = \"dynamics\"\nseed = 1\ngamma = -1.0", "gamma"),
        ("kind = \"teleport\"\nseed = 1", "kind"),
        ("kind = \"spectrum\"\nseed = 1\ncolour = 3", "colour"),
    ];
    for (text, field) in cases {
        let err = ExperimentConfig::parse(text).and_then(|c| resolve(&c).map(|_| ()));
        match err {
            Err(Error::Config { field: f, .. }) => assert_eq!(f, field, "{text}"),
            other => panic!("{text}: expected a config error, got {other:?}"),
        }
    }
}

fn arb_grid() -> impl Strategy<Value = Grid> {
    prop_oneof![
        prop::collection::vec(-50.0f64..50.0, 1..6).prop_map(Grid::List),
        (0.0f64..5.0, 1u32..20, 0.05f64..2.0).prop_map(|(start, n, step)| Grid::Range {
            start,
            stop: start + step * n as f64,
            step
        }),
    ]
}

fn arb_config() -> impl Strategy<Value = ExperimentConfig> {
    (
        prop::sample::select(ExperimentKind::ALL.to_vec()),
        0..=i64::MAX as u64,
        prop::option::of(1usize..12),
        prop::option::of(prop::collection::vec(1usize..12, 1..4)),
        prop::option::of(arb_grid()),
        prop::option::of(prop_oneof![
            (1usize..500).prop_map(Counts::One),
            prop::collection::vec(1usize..500, 1..4).prop_map(Counts::Many)
        ]),
        prop::option::of(prop::sample::select(vec![Family::Sgt, Family::MgtRegular, Family::MgtRandom])),
        prop::option::of(0.1f64..4.0),
        prop::option::of(arb_grid()),
        prop::option::of(1e-12f64..1e-3),
    )
        .prop_map(|(kind, seed, d, depths, widths, realizations, family, gamma, momenta, tol)| ExperimentConfig {
            kind: Some(kind),
            seed: Some(seed),
            d,
            depths,
            widths,
            realizations,
            family,
            gamma,
            momenta,
            tol,
            ..Default::default()
        })
}

proptest! {
    #[test]
    fn config_round_trips_through_text(c in arb_config()) {
        let text = c.to_toml().unwrap();
        prop_assert_eq!(ExperimentConfig::parse(&text).unwrap(), c);
    }

    #[test]
    fn overrides_match_file_values(d in 1usize..20, seed in 0..=i64::MAX as u64, w in 0.0f64..30.0) {
        let base = ExperimentConfig::parse("kind = \"dynamics\"").unwrap();
        let (ds, ss, ws) = (d.to_string(), seed.to_string(), format!("{w:?}"));
        let via_flags = base
            .with_overrides([("--d", ds.as_str()), ("--seed", ss.as_str()), ("--widths", ws.as_str())])
            .unwrap();
        let via_file = ExperimentConfig::parse(&format!("kind = \"dynamics\"\nd = {d}\nseed = {seed}\nwidths = [{w:?}]")).unwrap();
        prop_assert_eq!(via_flags, via_file);
    }
}
