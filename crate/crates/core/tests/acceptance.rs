//! Acceptance suite. Each test prints one `criterion N: PASS|FAIL` line to
//! stderr (uncaptured) and then asserts.

use std::f64::consts::PI;
use std::io::Write;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use riemann_kit::comparison::{
    myers_check, rauch_ratio, riccati_solve, scalar_expansion_fit, sturm_check, volume_compare, CurvatureProfile,
    RiccatiSettings, RiccatiStart, VolumeSettings,
};
use riemann_kit::linalg::Matrix;
use riemann_kit::manifold::{
    builtin, parallelogram_check, parse_params, polarize, Curve, FinslerNorm, FnCurve, MetricChart,
};
use riemann_kit::ode::OdeSettings;
use riemann_kit::surfrev::{
    clairaut_constant, classify_geodesic, delta_theta, geodesic_from_angle, turning_points, GeodesicClass, Profile,
};
use riemann_kit::tensor::{
    berger_curvatures, bianchi_residual, check_symmetries, curvature, curvature_space_dim, normal_taylor_check,
    ricci_contraction, sectional, weyl_decompose, wedge, CurvatureAlgebraElement,
};
use riemann_kit::transport::{integrate_geodesic, integrate_geodesic_frameless, Trajectory};
use riemann_kit::variation::{
    basic_inequality_check, conjugate_points, first_variation, index_form, jacobi_solve, nonminimality_witness,
    EndCondition, FrameField, RectangleSpec,
};

fn report(n: u32, what: &str, ok: bool, detail: String) {
    let verdict = if ok { "PASS" } else { "FAIL" };
    let line = format!("criterion {n:>2}: {verdict}  {what}  [{detail}]\n");
    let _ = std::io::stderr().write_all(line.as_bytes());
    assert!(ok, "criterion {n} failed: {detail}");
}

fn chart(name: &str, params: &str) -> MetricChart<f64> {
    builtin(name, &parse_params(params).unwrap()).unwrap()
}

fn unit(chart: &MetricChart<f64>, p: &[f64], dir: &[f64]) -> Vec<f64> {
    let s = chart.inner(p, dir, dir).unwrap().sqrt();
    dir.iter().map(|x| x / s).collect()
}

fn unit_geodesic(chart: &MetricChart<f64>, p: &[f64], dir: &[f64], len: f64) -> Trajectory<f64> {
    integrate_geodesic(chart, p, &unit(chart, p, dir), len, &OdeSettings::default()).unwrap()
}

fn random_sym(n: usize, rng: &mut ChaCha8Rng) -> Matrix<f64> {
    let mut a = Matrix::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            let x = rng.gen_range(-1.0..1.0);
            a[(i, j)] = x;
            a[(j, i)] = x;
        }
    }
    a
}

#[test]
fn criterion_01_constant_curvature() {
    let mut worst: f64 = 0.0;
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for (name, params, k) in [("sphere_stereo", "n=2,R=1", 1.0), ("hyperbolic_ball", "n=2", -1.0)] {
        let c = chart(name, params);
        for p in c.sample_points(50, 0.8, 7) {
            let r = curvature(&c, &p).unwrap();
            let x = [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)];
            let y = [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)];
            worst = worst.max((sectional(&r, &[1.0, 0.0], &[0.0, 1.0]).unwrap() - k).abs());
            worst = worst.max((sectional(&r, &x, &y).unwrap() - k).abs());
        }
    }
    report(1, "sectional curvature +1 / -1 at 50 points", worst <= 1e-8, format!("max error {worst:.2e}"));
}

#[test]
fn criterion_02_conjugate_points() {
    let s = OdeSettings::default();
    let sphere = chart("sphere_stereo", "n=2,R=1");
    let p = [0.5, 0.0];
    let first = conjugate_points(&sphere, &p, &unit(&sphere, &p, &[0.0, 1.0]), 4.0, &s)
        .unwrap()
        .first();
    let err = first.map_or(f64::INFINITY, |t| (t - PI).abs());
    let hyp = chart("hyperbolic_ball", "n=2");
    let h = conjugate_points(&hyp, &[0.0, 0.0], &[0.5, 0.0], 10.0, &s).unwrap();
    let euc = chart("euclidean", "n=3");
    let e = conjugate_points(&euc, &[0.0, 0.0, 0.0], &[0.6, 0.0, 0.8], 10.0, &s).unwrap();
    let ok = err <= 1e-4 && h.t_conjugate.is_empty() && e.t_conjugate.is_empty();
    report(
        2,
        "first conjugate point pi on S^2, none on H^2 and E^3 up to 10",
        ok,
        format!("|t - pi| = {err:.2e}, hyperbolic {:?}, euclidean {:?}", h.t_conjugate, e.t_conjugate),
    );
}

#[test]
fn criterion_03_jacobi_accuracy() {
    let sphere = chart("sphere_stereo", "n=2,R=1");
    let geo = unit_geodesic(&sphere, &[0.5, 0.0], &[0.0, 1.0], PI);
    let e2 = geo.frame_at(0)[1].clone();
    let j = jacobi_solve(&sphere, &geo, &[0.0, 0.0], &e2).unwrap();
    let s_err = j.times.iter().zip(&j.f).map(|(t, f)| (f[1] - t.sin()).abs()).fold(0.0, f64::max);

    let hyp = chart("hyperbolic_ball", "n=2");
    let geo = unit_geodesic(&hyp, &[0.0, 0.0], &[1.0, 0.0], 5.0);
    let e2 = geo.frame_at(0)[1].clone();
    let j = jacobi_solve(&hyp, &geo, &[0.0, 0.0], &e2).unwrap();
    let h_err = j
        .times
        .iter()
        .zip(&j.f)
        .skip(1)
        .map(|(t, f)| ((f[1] - t.sinh()) / t.sinh()).abs())
        .fold(0.0, f64::max);
    report(
        3,
        "Jacobi fields sin t and sinh t",
        s_err <= 1e-6 && h_err <= 1e-5,
        format!("sphere abs {s_err:.2e}, hyperbolic rel {h_err:.2e}"),
    );
}

#[test]
fn criterion_04_normal_coordinates() {
    let sphere = chart("sphere_stereo", "n=2,R=1");
    let r = normal_taylor_check(&sphere, &[0.1, 0.2], None, 0.1, &OdeSettings::default()).unwrap();
    let k = r.gaussian_fit.unwrap();
    let ok = (k - 1.0).abs() <= 1e-3 && r.christoffel_at_origin <= 1e-6;
    report(
        4,
        "normal-coordinate fit K = -3 E_yy / 2",
        ok,
        format!("E_yy = {:.6}, K = {k:.6}, Christoffel at origin {:.2e}", r.e_yy.unwrap(), r.christoffel_at_origin),
    );
}

#[test]
fn criterion_05_symmetries() {
    let charts = [
        chart("euclidean", "n=3"),
        chart("sphere_stereo", "n=2,R=1"),
        chart("sphere_stereo", "n=3,R=2"),
        chart("hyperbolic_ball", "n=2"),
        chart("hyperbolic_ball", "n=3"),
        chart("torus", "R=2,r=1"),
    ];
    let (mut sym, mut bianchi): (f64, f64) = (0.0, 0.0);
    for c in &charts {
        for p in c.sample_points(20, 0.7, 3) {
            sym = sym.max(check_symmetries(&curvature(c, &p).unwrap()).max());
            bianchi = bianchi.max(bianchi_residual(c, &p).unwrap());
        }
    }
    report(
        5,
        "curvature identities and second Bianchi identity",
        sym <= 1e-8 && bianchi <= 1e-5,
        format!("symmetry {sym:.2e}, Bianchi {bianchi:.2e}"),
    );
}

#[test]
fn criterion_06_weyl() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut contraction: f64 = 0.0;
    for n in [3, 4] {
        let g = Matrix::identity(n);
        for _ in 0..100 {
            let a = random_sym(n, &mut rng);
            let lhs = ricci_contraction(&wedge(&a, &g).add(&wedge(&g, &a)), &g);
            let tr: f64 = (0..n).map(|i| a[(i, i)]).sum();
            let rhs = a.scale((n - 2) as f64).add(&g.scale(tr));
            contraction = contraction.max(lhs.sub(&rhs).max_abs());
        }
    }
    let mut weyl3: f64 = 0.0;
    for seed in 0..50 {
        let metric = if seed % 2 == 0 {
            Matrix::identity(3)
        } else {
            let b = random_sym(3, &mut rng);
            Matrix::identity(3).scale(3.0).add(&b)
        };
        let r = CurvatureAlgebraElement::random(metric, seed, true);
        weyl3 = weyl3.max(weyl_decompose(&r).unwrap().weyl.max_abs());
    }
    let dims = [2, 3, 4].map(curvature_space_dim);
    let ok = contraction <= 1e-10 && weyl3 <= 1e-10 && dims == [1, 6, 20];
    report(
        6,
        "Ricci contraction identity, Weyl vanishing in dimension 3, dimension formula",
        ok,
        format!("contraction {contraction:.2e}, Weyl(n=3) {weyl3:.2e}, dims {dims:?}"),
    );
}

#[test]
fn criterion_07_riccati_and_sturm() {
    let one = CurvatureProfile::constant(1.0);
    let tr = riccati_solve(&one, RiccatiStart::PlusInfinity, 7.0, &RiccatiSettings::default()).unwrap();
    let gap_err = tr.pole_gaps().iter().map(|g| (g - PI).abs()).fold(0.0, f64::max);
    let cot_err = tr
        .samples()
        .filter(|(t, _, _)| (t / PI - (t / PI).round()).abs() > 0.05)
        .map(|(t, f, _)| (f - 1.0 / t.tan()).abs())
        .fold(0.0, f64::max);
    let st = sturm_check(&one, &CurvatureProfile::constant(0.25), 7.0, 1e-3).unwrap();
    let zj = st.zero_j.map_or(f64::INFINITY, |z| (z - PI).abs());
    let zk = st.zero_k.map_or(f64::INFINITY, |z| (z - 2.0 * PI).abs());
    let ok = !tr.poles.is_empty() && gap_err <= 1e-4 && cot_err <= 1e-6 && st.ordered && zj <= 1e-4 && zk <= 1e-4;
    report(
        7,
        "Riccati poles at pi spacing, cot t, Sturm zeros pi and 2 pi",
        ok,
        format!("gap {gap_err:.2e}, cot {cot_err:.2e}, zeros {zj:.2e} / {zk:.2e}"),
    );
}

#[test]
fn criterion_08_rauch() {
    let l = PI - 0.05;
    let e = chart("euclidean", "n=2");
    let s = chart("sphere_stereo", "n=2,R=1");
    let ge = unit_geodesic(&e, &[0.0, 0.0], &[1.0, 0.0], l);
    let gs = unit_geodesic(&s, &[0.5, 0.0], &[0.0, 1.0], l);
    let r = rauch_ratio(&e, &ge, &s, &gs, 1.0, l).unwrap();
    let shape = r
        .times
        .iter()
        .zip(&r.ratio)
        .map(|(t, q)| (q - t * t / t.sin().powi(2)).abs() / q)
        .fold(0.0, f64::max);
    report(
        8,
        "t^2 / sin^2 t nondecreasing",
        r.max_decrease <= 1e-8 && shape <= 1e-6,
        format!("max decrease {:.2e}, relative shape error {shape:.2e}", r.max_decrease),
    );
}

#[test]
fn criterion_09_myers() {
    let s3 = chart("sphere_stereo", "n=3,R=1");
    let p = [0.5, 0.0, 0.0];
    let v = unit(&s3, &p, &[0.0, 1.0, 0.0]);
    let r = myers_check(&s3, &p, &v, 1.0, &OdeSettings::default()).unwrap();
    let err = r.conjugate_distance.map_or(f64::INFINITY, |t| (t - PI).abs());
    report(
        9,
        "conjugate distance pi / sqrt(c) on S^3",
        r.satisfied && err <= 1e-4,
        format!("|t - pi| = {err:.2e}, Ric min {:.6}", r.ric_min),
    );
}

#[test]
fn criterion_10_bishop() {
    let s = chart("sphere_stereo", "n=2,R=1");
    let set = VolumeSettings::default();
    let p = [0.2, -0.1];
    let mut worst: f64 = 0.0;
    let mut strict = true;
    let mut equal: f64 = 0.0;
    for r in [0.5, 1.0, 1.5] {
        let flat = volume_compare(&s, &p, r, 0.0, &set).unwrap();
        worst = worst.max((flat.area - 2.0 * PI * r.sin()).abs());
        strict &= flat.area < 2.0 * PI * r && flat.ratio_le_one;
        let round = volume_compare(&s, &p, r, 1.0, &set).unwrap();
        equal = equal.max((round.area - round.reference).abs());
    }
    report(
        10,
        "geodesic circles 2 pi sin r, strict against K = 0, equal against K = 1",
        worst <= 1e-4 && strict && equal <= 1e-4,
        format!("length error {worst:.2e}, equality error {equal:.2e}"),
    );
}

#[test]
fn criterion_11_scalar_expansion() {
    let set = VolumeSettings::default();
    let mut errs = Vec::new();
    for (name, params, want) in [
        ("sphere_stereo", "n=2,R=1", 1.0 / 6.0),
        ("euclidean", "n=2", 0.0),
        ("hyperbolic_ball", "n=2", -1.0 / 6.0),
    ] {
        let fit = scalar_expansion_fit(&chart(name, params), &[0.0, 0.0], &set).unwrap();
        errs.push((fit.coefficient - want).abs());
    }
    let worst = errs.iter().copied().fold(0.0, f64::max);
    report(
        11,
        "area-deficit coefficient 1/6, 0, -1/6",
        worst <= 1e-4,
        format!("errors {:.1e} {:.1e} {:.1e}", errs[0], errs[1], errs[2]),
    );
}

#[test]
fn criterion_12_clairaut() {
    let torus = Profile::<f64>::torus(2.0, 1.0).unwrap();
    let tc = torus.chart().unwrap();
    let s = OdeSettings::default();
    let traj = geodesic_from_angle(&tc, &torus, 0.0, 0.0, 0.5, 50.0, &s).unwrap();
    let drift = clairaut_constant(&torus, &traj).unwrap().drift;

    let c = 2.5;
    let dt = delta_theta(&torus, c, None).unwrap();
    let traj = geodesic_from_angle(&tc, &torus, 0.0, 0.0, (c / 3.0f64).asin(), 30.0, &s).unwrap();
    let turns = turning_points(&traj);
    let dt_err = if turns.len() >= 2 {
        (turns[1].2 - turns[0].2 - dt).abs()
    } else {
        f64::INFINITY
    };

    let cases = [
        (0.0, 0.0, GeodesicClass::Meridian),
        (1.0, 0.0, GeodesicClass::Meridian),
        (0.0, PI / 2.0, GeodesicClass::ParallelGeodesic),
        (PI, PI / 2.0, GeodesicClass::ParallelGeodesic),
        (PI / 3.0, PI / 2.0, GeodesicClass::Oscillating),
        (0.0, (2.5f64 / 3.0).asin(), GeodesicClass::Oscillating),
        (0.0, (1.0f64 / 3.0).asin(), GeodesicClass::AsymptoticToParallel),
        (PI / 2.0, 0.5f64.asin(), GeodesicClass::AsymptoticToParallel),
    ];
    let mut wrong = Vec::new();
    for (u0, phi0, want) in cases {
        let got = classify_geodesic(&torus, u0, 0.3, phi0, 20.0, &s).unwrap();
        if got.class != want || !got.confirmation.consistent {
            wrong.push((u0, phi0, got.class.name()));
        }
    }
    report(
        12,
        "Clairaut drift, delta theta, torus classification",
        drift <= 1e-6 && dt_err <= 1e-4 && wrong.is_empty(),
        format!("drift {drift:.2e}, delta theta error {dt_err:.2e}, misclassified {wrong:?}"),
    );
}

#[test]
fn criterion_13_berger() {
    let b = berger_curvatures(1.0, 1.0, 1.0).unwrap();
    let round = [b.k12, b.k23, b.k31].iter().map(|k: &f64| (k - 0.25).abs()).fold(0.0, f64::max);
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let mut cross: f64 = 0.0;
    for _ in 0..100 {
        let (a, b, c) = (rng.gen_range(0.5..2.0), rng.gen_range(0.5..2.0), rng.gen_range(0.5..2.0));
        cross = cross.max(berger_curvatures(a, b, c).unwrap().cross_check);
    }
    report(
        13,
        "Berger sphere curvatures",
        round <= 1e-12 && cross <= 1e-12,
        format!("(1,1,1) error {round:.2e}, route discrepancy {cross:.2e}"),
    );
}

/// Ten variations `exp(t V(s))` of assorted base curves.
fn rectangles() -> Vec<(&'static str, MetricChart<f64>, RectangleSpec<f64>)> {
    let mut out = Vec::new();
    let sphere = chart("sphere_stereo", "n=2,R=1");
    let hyp = chart("hyperbolic_ball", "n=2");
    let flat = chart("euclidean", "n=2");
    let flat3 = chart("euclidean", "n=3");
    let s3 = chart("sphere_stereo", "n=3,R=2");
    let torus = Profile::<f64>::torus(3.0, 1.0).unwrap();
    let tc = torus.chart().unwrap();

    let g: Arc<dyn Curve<f64>> = Arc::new(unit_geodesic(&sphere, &[0.5, 0.0], &[0.0, 1.0], 2.0));
    let field = |s: f64| vec![0.3 * (PI * s / 2.0).sin(), 0.1 * (PI * s / 2.0).sin()];
    out.push(("sphere geodesic, bump", sphere.clone(), RectangleSpec::new(g.clone(), field, EndCondition::FixedEnds).unwrap()));
    let field = |s: f64| vec![0.05 * s * (2.0 - s), -0.1 * s * (2.0 - s)];
    out.push(("sphere geodesic, parabola", sphere.clone(), RectangleSpec::new(g, field, EndCondition::FixedEnds).unwrap()));

    let g: Arc<dyn Curve<f64>> = Arc::new(unit_geodesic(&hyp, &[0.1, 0.0], &[1.0, 1.0], 1.5));
    let g2 = g.clone();
    let field = move |s: f64| g2.velocity(s).iter().map(|x| 0.2 * s * x).collect();
    out.push(("hyperbolic geodesic, stretch", hyp.clone(), RectangleSpec::new(g, field, EndCondition::GeodesicTransversals).unwrap()));

    let c: Arc<dyn Curve<f64>> = Arc::new(FnCurve::new(0.0, 1.0, |s| vec![s, s * s], |s| vec![1.0, 2.0 * s]));
    out.push(("plane parabola, translation", flat.clone(), RectangleSpec::new(c, |_| vec![1.0, 1.0], EndCondition::GeodesicTransversals).unwrap()));
    let c: Arc<dyn Curve<f64>> = Arc::new(FnCurve::new(0.0, 1.0, |s| vec![s, s * s], |s| vec![1.0, 2.0 * s]));
    out.push((
        "plane parabola, bump",
        flat,
        RectangleSpec::new(c, |s| vec![0.0, (PI * s).sin()], EndCondition::FixedEnds).unwrap(),
    ));

    let c: Arc<dyn Curve<f64>> = Arc::new(FnCurve::new(
        0.0,
        1.0,
        |s: f64| vec![0.4 * (2.0 * s).cos(), 0.4 * (2.0 * s).sin()],
        |s: f64| vec![-0.8 * (2.0 * s).sin(), 0.8 * (2.0 * s).cos()],
    ));
    out.push((
        "hyperbolic circle arc, radial bump",
        hyp,
        RectangleSpec::new(c, |s| vec![0.2 * (PI * s).sin() * (2.0 * s).cos(), 0.2 * (PI * s).sin() * (2.0 * s).sin()], EndCondition::FixedEnds).unwrap(),
    ));

    let c: Arc<dyn Curve<f64>> = Arc::new(FnCurve::new(
        0.0,
        1.0,
        |s| vec![0.2 + 0.6 * s, 0.1 - 0.4 * s],
        |_| vec![0.6, -0.4],
    ));
    out.push((
        "sphere chord, transversal field",
        sphere,
        RectangleSpec::new(c, |s| vec![0.1 * s, 0.2 - 0.1 * s], EndCondition::GeodesicTransversals).unwrap(),
    ));

    let g: Arc<dyn Curve<f64>> = Arc::new(unit_geodesic(&s3, &[1.0, 0.0, 0.0], &[0.0, 1.0, 0.5], 2.5));
    out.push((
        "S^3 geodesic, twisted field",
        s3,
        RectangleSpec::new(g, |s| vec![0.0, 0.1 * s.cos(), 0.2 * s.sin()], EndCondition::GeodesicTransversals).unwrap(),
    ));

    let lat = FnCurve::new(0.0, 2.0 * PI, |s| vec![1.0, s], |_| vec![0.0, 1.0]);
    let c: Arc<dyn Curve<f64>> = Arc::new(lat);
    out.push((
        "torus latitude, meridional field",
        tc,
        RectangleSpec::new(c, |s| vec![(s / 2.0).sin(), 0.0], EndCondition::FixedEnds).unwrap(),
    ));

    let c: Arc<dyn Curve<f64>> = Arc::new(FnCurve::new(
        0.0,
        3.0,
        |s: f64| vec![s.cos(), s.sin(), 0.3 * s],
        |s: f64| vec![-s.sin(), s.cos(), 0.3],
    ));
    out.push((
        "helix, vertical bump",
        flat3,
        RectangleSpec::new(c, |s| vec![0.0, 0.0, (PI * s / 3.0).sin()], EndCondition::FixedEnds).unwrap(),
    ));
    out
}

#[test]
fn criterion_14_variation() {
    let settings = OdeSettings::default();
    let mut mismatch: f64 = 0.0;
    let mut worst_case = "";
    let rects = rectangles();
    for (name, c, rect) in &rects {
        let fv = first_variation(c, rect, &settings).unwrap();
        if fv.mismatch > mismatch {
            mismatch = fv.mismatch;
            worst_case = name;
        }
    }

    let sphere = chart("sphere_stereo", "n=2,R=1");
    let full = unit_geodesic(&sphere, &[0.5, 0.0], &[0.0, 1.0], PI);
    let jac = FrameField::profiled(vec![0.0, 1.0], f64::sin, f64::cos);
    let jacobi_index = index_form(&sphere, &full, &jac, &jac).unwrap().abs();

    let l = 2.5;
    let short = unit_geodesic(&sphere, &[0.5, 0.0], &[0.0, 1.0], l);
    let matched = basic_inequality_check(&sphere, &short, &jac).unwrap();
    let sl = l.sin();
    let linear = FrameField::profiled(vec![0.0, 1.0], move |t| t * sl / l, move |_| sl / l);
    let other = basic_inequality_check(&sphere, &short, &linear).unwrap();

    let long = unit_geodesic(&sphere, &[0.5, 0.0], &[0.0, 1.0], PI + 0.3);
    let w = nonminimality_witness(&sphere, &long).unwrap();

    let ok = rects.len() == 10
        && mismatch <= 1e-5
        && jacobi_index <= 1e-4
        && matched.gap >= -1e-8
        && matched.gap.abs() <= 1e-8
        && other.gap > 1e-6
        && w.index < -1e-4;
    report(
        14,
        "first variation, Jacobi index, Basic Inequality, nonminimality witness",
        ok,
        format!(
            "FD mismatch {mismatch:.2e} ({worst_case}), Jacobi index {jacobi_index:.2e}, gaps {:.2e} / {:.2e}, witness {:.4}",
            matched.gap, other.gap, w.index
        ),
    );
}

#[test]
fn criterion_15_finsler() {
    let mats = [
        Matrix::identity(2),
        Matrix::from_rows(&[vec![2.0, 0.5], vec![0.5, 1.0]]),
        Matrix::from_rows(&[vec![3.0, -0.4, 0.2], vec![-0.4, 1.5, 0.1], vec![0.2, 0.1, 0.8]]),
    ];
    let mut law: f64 = 0.0;
    let mut polar: f64 = 0.0;
    for g in &mats {
        let n = g.rows();
        let l = FinslerNorm::riemannian(g.clone());
        law = law.max(parallelogram_check(&l, 500, 15).max_violation);
        for i in 0..n {
            for j in 0..n {
                let (mut x, mut y) = (vec![0.0; n], vec![0.0; n]);
                x[i] = 1.0;
                y[j] = 1.0;
                polar = polar.max((polarize(&l, &x, &y) - g[(i, j)]).abs());
            }
        }
    }
    let max = parallelogram_check(&FinslerNorm::<f64>::max_norm(2), 500, 15).max_violation;
    report(
        15,
        "parallelogram law and polarization",
        law <= 1e-9 && max >= 1.0 && polar <= 1e-12,
        format!("Riemannian {law:.2e}, max-norm {max:.3}, polarization {polar:.2e}"),
    );
}

#[test]
fn criterion_16_rk4_order() {
    let sphere = chart("sphere_stereo", "n=2,R=1");
    let exact = 1f64.tan();
    let err = |h: f64| {
        let g = integrate_geodesic_frameless(&sphere, &[0.0, 0.0], &[0.5, 0.0], 2.0, &OdeSettings::with_step(h)).unwrap();
        (g.last_point()[0] - exact).abs()
    };
    let (e1, e2, e3) = (err(0.1), err(0.05), err(0.025));
    let (r1, r2) = (e1 / e2, e2 / e3);
    let ok = (12.0..=20.0).contains(&r1) && (12.0..=20.0).contains(&r2);
    report(16, "RK4 error ratio under step halving", ok, format!("ratios {r1:.2} and {r2:.2}"));
}
