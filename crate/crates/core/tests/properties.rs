use perfmm::apply::{total_field, ApplyPath, FieldOptions};
use perfmm::cell::{make_unit_cell, ParticleSystem, Periodicity, Strengths, UnitCell};
use perfmm::harness::{self, format_sources, format_targets, parse_sources, parse_targets, CellSpec, RunConfig};
use perfmm::kernels::Pde;
use perfmm::oracle::{brute_force_far, OracleKernel};
use perfmm::periodizer::assemble;
use perfmm::scalar::{Cx, Point};
use perfmm::Error;
use proptest::prelude::*;

fn max_diff(a: &[Cx<f64>], b: &[Cx<f64>]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

fn max_abs(v: &[Cx<f64>]) -> f64 {
    v.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

fn cell_points(cell: &UnitCell<f64>, coords: &[(f64, f64)]) -> Vec<Point<f64>> {
    coords.iter().map(|&(a, b)| cell.point(a, b)).collect()
}

fn coords(n: usize, half: f64) -> impl Strategy<Value = Vec<(f64, f64)>> {
    prop::collection::vec((-half..half, -half..half), n)
}

fn neutral(q: &[f64]) -> Vec<f64> {
    let mean = q.iter().sum::<f64>() / q.len() as f64;
    q.iter().map(|v| v - mean).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn total_field_is_linear_in_strengths(
        src in coords(8, 0.45),
        tgt in coords(5, 0.45),
        q1 in prop::collection::vec(-1.0..1.0f64, 8),
        q2 in prop::collection::vec(-1.0..1.0f64, 8),
        a in -2.0..2.0f64,
        eta in 0.2..0.99f64,
    ) {
        let cell = make_unit_cell(1.0, 0.1, eta, Periodicity::Doubly).unwrap();
        let (s, t) = (cell_points(&cell, &src), cell_points(&cell, &tgt));
        let (q1, q2) = (neutral(&q1), neutral(&q2));
        let mix: Vec<f64> = q1.iter().zip(&q2).map(|(x, y)| a * x + y).collect();
        let field = |q: Vec<f64>| {
            let sys = ParticleSystem::new(s.clone(), Strengths::Scalar(q), t.clone()).unwrap();
            total_field(Pde::Poisson, 0.0, &cell, 1e-10, &sys, FieldOptions::default()).unwrap().values
        };
        let (u1, u2, um) = (field(q1), field(q2), field(mix));
        let combined: Vec<Cx<f64>> = u1.iter().zip(&u2).map(|(x, y)| x * a + y).collect();
        let scale = max_abs(&u1) * a.abs() + max_abs(&u2) + 1e-300;
        prop_assert!(max_diff(&um, &combined) <= 1e-12 * scale);
    }

    #[test]
    fn common_translation_leaves_the_field_unchanged(
        src in coords(6, 0.35),
        tgt in coords(4, 0.35),
        q in prop::collection::vec(-1.0..1.0f64, 6),
        shift in (-0.1..0.1f64, -0.1..0.1f64),
    ) {
        let cell = make_unit_cell(1.0, 0.2, 0.7, Periodicity::Doubly).unwrap();
        let moved = |c: &[(f64, f64)]| c.iter().map(|&(a, b)| (a + shift.0, b + shift.1)).collect::<Vec<_>>();
        let field = |s: &[(f64, f64)], t: &[(f64, f64)]| {
            let sys = ParticleSystem::new(cell_points(&cell, s), Strengths::Scalar(q.clone()), cell_points(&cell, t)).unwrap();
            total_field(Pde::ModHelmholtz, 1.0, &cell, 1e-12, &sys, FieldOptions::default()).unwrap().values
        };
        let u = field(&src, &tgt);
        let v = field(&moved(&src), &moved(&tgt));
        prop_assert!(max_diff(&u, &v) <= 1e-11 * max_abs(&u));
    }

    #[test]
    fn source_text_round_trips(
        pts in prop::collection::vec((-1e3..1e3f64, -1e3..1e3f64), 0..20),
        scale in -30i32..30,
    ) {
        let points: Vec<Point<f64>> = pts.iter().map(|&(x, y)| [x, y * 10f64.powi(scale)]).collect();
        let q = Strengths::Vector(pts.iter().map(|&(x, y)| [y / 7.0, x * 1e-9]).collect());
        let text = format_sources(&points, &q, None);
        let back = parse_sources(&text, Pde::Stokes).unwrap();
        prop_assert_eq!(back.points, points.clone());
        prop_assert_eq!(back.strengths, q);
        prop_assert_eq!(parse_targets(&format_targets(&points)).unwrap(), points);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(4))]

    #[test]
    fn far_field_matches_the_image_sum(
        src in coords(10, 0.5),
        tgt in coords(4, 0.5),
        q in prop::collection::vec(-1.0..1.0f64, 10),
        xi in -0.3..0.3f64,
        eta in 0.5..0.9f64,
    ) {
        let cell = make_unit_cell(1.0, xi, eta, Periodicity::Doubly).unwrap();
        let sys = ParticleSystem::new(cell_points(&cell, &src), Strengths::Scalar(q), cell_points(&cell, &tgt)).unwrap();
        let kernel = OracleKernel::Charge { pde: Pde::ModHelmholtz, beta: 2.0 };
        let exact = brute_force_far(kernel, &cell, &sys, None, 30, 1e-13).unwrap();
        let got = assemble(Pde::ModHelmholtz, 2.0, &cell, 1e-12).unwrap().apply_direct(&sys.sources, &sys.strengths, &sys.targets).unwrap();
        prop_assert!(max_diff(&got, &exact) <= 1e-11 * max_abs(&exact));
    }
}

fn small_config(pde: Pde) -> RunConfig {
    RunConfig {
        pde,
        cell: CellSpec::Explicit { d: 1.0, xi: 0.1, eta: 0.6 },
        n_src: 40,
        samples: 20,
        eps: 1e-10,
        accel: ApplyPath::Direct,
        ..RunConfig::default()
    }
}

#[test]
fn direct_validation_is_deterministic() {
    let cfg = small_config(Pde::Stokes);
    let a = harness::validation_fields(&cfg).unwrap();
    let b = harness::validation_fields(&cfg).unwrap();
    assert_eq!(a.values, b.values);
}

#[test]
fn file_apply_reproduces_the_validation_fields() {
    for pde in [Pde::ModHelmholtz, Pde::Stokes] {
        let cfg = small_config(pde);
        let fields = harness::validation_fields(&cfg).unwrap();
        let text = format_sources(&fields.system.sources, &fields.system.strengths, None);
        let out = harness::apply_files(&cfg, &text, &format_targets(&fields.system.targets)).unwrap();
        assert_eq!(out.values, fields.values, "{pde:?}");
    }
}

#[test]
fn validation_passes_on_small_runs() {
    for pde in [Pde::Poisson, Pde::ModHelmholtz, Pde::Stokes, Pde::ModStokes] {
        let r = harness::validate(&small_config(pde)).unwrap();
        assert!(r.passed, "{pde:?}: {:?}", r.failures);
    }
}

#[test]
fn parse_errors_name_the_line() {
    let err = parse_sources("# header\n0.1 0.2 1\n0.3 x 1\n", Pde::Poisson).unwrap_err();
    assert!(matches!(err, Error::Parse { line: 3, .. }), "{err}");
    let err = parse_sources("0 0 1 0\n0 0 1 0 1 0\n", Pde::Stokes).unwrap_err();
    assert!(matches!(err, Error::Parse { line: 2, .. }), "{err}");
    let err = parse_targets("0 0\n\n0 0 0\n").unwrap_err();
    assert!(matches!(err, Error::Parse { line: 3, .. }), "{err}");
}

#[test]
fn empty_target_file_gives_empty_output() {
    let cfg = small_config(Pde::ModHelmholtz);
    let out = harness::apply_files(&cfg, "0.1 0.1 1\n", "# nothing\n").unwrap();
    assert!(out.values.is_empty());
    assert_eq!(out.to_text().lines().count(), 1);
}
