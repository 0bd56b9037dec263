use sparsedom::{
    multilinear_commutator, CubeCollection, GridFunction, OperatorHandle, VectorFunction,
};
use sparsedom_harness::corpus::{case_rng, random_log, random_slots, sample_slots};
use sparsedom_harness::experiments::{
    domain, least_squares_slope, operator, sweep_ratio, weight_constants, weight_system,
};
use sparsedom_harness::report::{Constants, SweepRow};
use sparsedom_harness::{io, run, Experiment, ExperimentKind, HarnessError, OperatorKind};

fn small(kind: ExperimentKind) -> Experiment {
    let mut e = Experiment::preset(kind).at_resolution(7).unwrap();
    e.cases = 2;
    e.smooth_resolutions.retain(|&r| r <= 8);
    e
}

#[test]
fn config_file_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("thm12.ini");
    std::fs::write(
        &path,
        "[experiment]\nname = thm12\nresolutions = 7, 8\nseed = 99\ncases = 3\n\n\
         [weights]\nexponents = 0, 0.5\n\n[exponents]\np = 3, 3\nq = 2, 4\ns = 1, 2\n",
    )
    .unwrap();
    let e = Experiment::from_path(&path, None).unwrap();
    assert_eq!(e.kind, ExperimentKind::Thm12);
    assert_eq!(e.operator, OperatorKind::C2);
    assert_eq!(e.resolutions, vec![7, 8]);
    assert_eq!((e.seed, e.cases), (99, 3));
    assert_eq!(e.sweep(), vec![0.0, 0.5]);
    assert_eq!(
        (e.p.clone(), e.q.clone(), e.s.clone()),
        (vec![3.0, 3.0], vec![2.0, 4.0], vec![1.0, 2.0])
    );
}

#[test]
fn config_rejects_unknown_keys_and_bad_values() {
    assert!(Experiment::parse("[experiment]\nname = thm11\ncolour = red\n", None).is_err());
    assert!(Experiment::parse("[extra]\nx = 1\n", Some(ExperimentKind::Thm11)).is_err());
    assert!(Experiment::parse("[exponents]\np = 0.5, 2\n", Some(ExperimentKind::Thm11)).is_err());
    assert!(Experiment::parse("[experiment]\nseed = x\n", Some(ExperimentKind::Thm11)).is_err());
    assert!(Experiment::parse("", None).is_err());
}

#[test]
fn outputs_are_written_and_readable() {
    let dir = tempfile::tempdir().unwrap();
    let report = run(&small(ExperimentKind::Lemma44)).unwrap();
    let paths = io::write_all(&report, dir.path()).unwrap();
    assert_eq!(paths.len(), 3);

    let mut rd = csv::Reader::from_path(&paths[0]).unwrap();
    let header = rd.headers().unwrap().clone();
    assert_eq!(&header[0], "experiment");
    assert!(header.iter().any(|h| h == "ratio"));
    assert_eq!(rd.records().count(), report.rows.len());

    let json: serde_json::Value =
        serde_json::from_slice(&std::fs::read(&paths[1]).unwrap()).unwrap();
    assert_eq!(json["experiment"], "lemma44");
    assert_eq!(json["rows"].as_array().unwrap().len(), report.rows.len());

    let text = std::fs::read_to_string(&paths[2]).unwrap();
    assert!(text.contains("stability_orlicz"));
}

#[test]
fn runs_are_reproducible() {
    for kind in [
        ExperimentKind::Lemma44,
        ExperimentKind::Dominate,
        ExperimentKind::Thm13,
    ] {
        let e = small(kind);
        assert_eq!(run(&e).unwrap(), run(&e).unwrap(), "{kind}");
    }
}

#[test]
fn parallel_run_matches_serial() {
    let e = small(ExperimentKind::Thm11);
    let serial = sparsedom_harness::run_parallel(&e, 1).unwrap();
    let parallel = sparsedom_harness::run_parallel(&e, 3).unwrap();
    assert_eq!(serial, parallel);
}

#[test]
fn seed_changes_the_corpus() {
    let mut e = small(ExperimentKind::Lemma32);
    let a = run(&e).unwrap();
    e.seed += 1;
    let b = run(&e).unwrap();
    assert_ne!(a.rows, b.rows);
}

#[test]
fn zero_ratio_conventions() {
    assert_eq!(
        SweepRow::new(ExperimentKind::Thm11, 7, "z", 0.0, 0.0, 0.0).ratio,
        0.0
    );
    assert_eq!(
        SweepRow::new(ExperimentKind::Thm11, 7, "z", 0.0, 0.0, 2.0).ratio,
        0.0
    );
    assert!(SweepRow::new(ExperimentKind::Thm11, 7, "z", 0.0, 1.0, 0.0)
        .ratio
        .is_infinite());
}

fn sweep_setup(e: &Experiment, a: f64) -> (sparsedom::WeightSystem, Constants) {
    let d = domain(7).unwrap();
    let ws = weight_system(e, a, d).unwrap();
    let c = weight_constants(
        &ws,
        &CubeCollection::AllMeshAligned(d),
        Some(&CubeCollection::UnionOfShifted(d)),
    )
    .unwrap();
    (ws, c)
}

fn outputs(
    op: &dyn OperatorHandle,
    inputs: &[VectorFunction],
    symbols: &[GridFunction],
) -> VectorFunction {
    let bs: Vec<Option<&GridFunction>> = symbols.iter().map(Some).collect();
    let out = (0..inputs[0].len())
        .map(|k| {
            let fs: Vec<&GridFunction> = inputs.iter().map(|v| &v.entries()[k]).collect();
            if symbols.is_empty() {
                op.eval(&fs).unwrap()
            } else {
                multilinear_commutator(op, &bs, &fs).unwrap()
            }
        })
        .collect();
    VectorFunction::new(out).unwrap()
}

#[test]
fn zero_inputs_give_zero_ratio() {
    let e = Experiment::preset(ExperimentKind::Thm11);
    let (ws, c) = sweep_setup(&e, 0.5);
    let d = *ws.domain();
    let op = operator(e.operator, d).unwrap();
    let zero = vec![VectorFunction::single(GridFunction::zeros(d)); 2];
    let out = outputs(&op, &zero, &[]);
    let (lhs, rhs) = sweep_ratio(&e, &ws, &c, &out, &zero, &[]).unwrap();
    assert_eq!(SweepRow::new(e.kind, 7, "zero", 0.5, lhs, rhs).ratio, 0.0);
}

#[test]
fn sweep_ratio_is_scale_invariant() {
    let e = Experiment::preset(ExperimentKind::Thm12);
    let (ws, c) = sweep_setup(&e, 0.3);
    let d = *ws.domain();
    let op = operator(e.operator, d).unwrap();
    for case in 0..3 {
        let mut rng = case_rng(7, case);
        let inputs = sample_slots(d, &random_slots(&mut rng, 2, 2));
        let symbols: Vec<GridFunction> = (0..2).map(|_| random_log(&mut rng).sample(d)).collect();

        let plain = |ins: &[VectorFunction]| {
            let (l, r) = sweep_ratio(&e, &ws, &c, &outputs(&op, ins, &[]), ins, &[]).unwrap();
            l / r
        };
        let scaled: Vec<VectorFunction> = inputs.iter().map(|v| v.scale(3.5)).collect();
        let (r0, r1) = (plain(&inputs), plain(&scaled));
        assert!((r0 - r1).abs() <= 1e-9 * r0, "case {case}: {r0} vs {r1}");

        let comm = |bs: &[GridFunction]| {
            let (l, r) = sweep_ratio(&e, &ws, &c, &outputs(&op, &inputs, bs), &inputs, bs).unwrap();
            l / r
        };
        let dilated: Vec<GridFunction> = symbols.iter().map(|b| b.scale(0.2)).collect();
        let (r0, r1) = (comm(&symbols), comm(&dilated));
        assert!((r0 - r1).abs() <= 1e-9 * r0, "case {case}: {r0} vs {r1}");
    }
}

#[test]
fn slope_fit_recovers_lines_and_rejects_degenerate_data() {
    let x = [0.0, 0.5, 1.0, 2.0];
    let y: Vec<f64> = x.iter().map(|t| 0.75 * t - 1.0).collect();
    assert!((least_squares_slope(&x, &y).unwrap() - 0.75).abs() < 1e-12);
    assert!(matches!(
        least_squares_slope(&[1.0, 1.0, 2.0], &[0.0, 1.0, 2.0]),
        Err(HarnessError::Degenerate(_))
    ));
}

#[test]
fn every_preset_validates_and_small_runs_finish() {
    for kind in ExperimentKind::ALL {
        let e = Experiment::preset(kind);
        e.validate().unwrap();
        let report = run(&small(kind)).unwrap();
        assert!(!report.rows.is_empty(), "{kind}");
        assert!(
            report
                .rows
                .iter()
                .all(|r| r.ratio.is_finite() && r.ratio >= 0.0),
            "{kind}"
        );
    }
}
