use std::path::Path;
use std::sync::Arc;

use rayon::prelude::*;
use riemann_kit::comparison::{
    compare_driving, myers_check, rauch_ratio, riccati_solve, scalar_expansion_fit, sturm_check, value_compare,
    volume_compare, CurvatureProfile, RiccatiSettings, RiccatiStart, VolumeSettings,
};
use riemann_kit::expr::Expr;
use riemann_kit::linalg::Matrix;
use riemann_kit::manifold::{builtin, load_definition, parse_params, Curve, MetricChart, SampledCurve};
use riemann_kit::ode::OdeSettings;
use riemann_kit::surfrev::{classify_geodesic, clairaut_constant, geodesic_from_angle, Profile, ProfileDefinition};
use riemann_kit::tensor::{bianchi_residual, check_symmetries, christoffel, curvature as curvature_at, ricci, sectional};
use riemann_kit::transport::{
    develop as develop_curve, exp_jacobian, exp_map, integrate_geodesic, log_map, parallel_transport,
    shortest_geodesic, LogSettings, Trajectory,
};
use riemann_kit::variation::{
    basic_inequality_check, conjugate_points_along, energy_report, first_variation, index_form, jacobi_solve,
    myers_fields, nonminimality_witness, EndCondition, FrameField, RectangleSpec,
};
use riemann_kit::{Error, Result};
use serde::Serialize;
use serde_json::{json, Value};

use crate::args::{vectors, GeodesicArgs, ManifoldArgs};
use crate::report::{error_value, write_text};
use crate::{
    CheckCmd, CompareCmd, CompareKind, ConjugateCmd, CurvatureCmd, CurveArgs, DevelopCmd, ExpCmd, GeodesicCmd,
    JacobiCmd, LogCmd, RiccatiCmd, SurfrevCmd, TransportCmd, VariationCmd, VolumeCmd,
};

type Slot = Option<String>;

fn to_json<S: Serialize>(v: &S) -> Value {
    serde_json::to_value(v).expect("serializable")
}

fn rows(m: &Matrix<f64>) -> Value {
    json!(m.to_rows())
}

/// Result of a sub-check that may fail without failing the command.
fn section<S: Serialize>(r: Result<S>) -> Value {
    match r {
        Ok(v) => to_json(&v),
        Err(e) => json!({ "error": error_value(&e) }),
    }
}

fn load(m: &ManifoldArgs, slot: &mut Slot) -> Result<MetricChart<f64>> {
    let (chart, text) = m.load()?;
    *slot = Some(text);
    Ok(chart)
}

fn ode(step: f64) -> OdeSettings<f64> {
    OdeSettings::with_step(step)
}

fn check_len(what: &str, v: &[f64], n: usize) -> Result<()> {
    if v.len() != n {
        return Err(Error::BadParam(format!("{what} has {} components, expected {n}", v.len())));
    }
    Ok(())
}

fn csv_out(path: Option<&Path>, text: &str) -> Result<()> {
    if let Some(p) = path {
        write_text(Some(p), text).map_err(|e| Error::Io(format!("{}: {e}", p.display())))?;
    }
    Ok(())
}

fn geodesic_of(chart: &MetricChart<f64>, g: &GeodesicArgs, step: f64) -> Result<Trajectory<f64>> {
    let n = chart.dim();
    check_len("--point", &g.point, n)?;
    check_len("--velocity", &g.velocity, n)?;
    let mut v = g.velocity.clone();
    if g.unit {
        let s = chart.inner(&g.point, &v, &v)?.sqrt();
        if !(s > 0.0) {
            return Err(Error::BadParam("cannot normalize a zero velocity".into()));
        }
        v.iter_mut().for_each(|x| *x /= s);
    }
    integrate_geodesic(chart, &g.point, &v, g.length, &ode(step))
}

/// `t,x1..xn` rows; a non-numeric first line is taken as a header.
fn read_curve(path: &Path, n: usize) -> Result<SampledCurve<f64>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    let mut grid = Vec::new();
    let mut points = Vec::new();
    for (k, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let fields: std::result::Result<Vec<f64>, _> = line.split(',').map(|x| x.trim().parse::<f64>()).collect();
        let fields = match fields {
            Ok(f) => f,
            Err(_) if k == 0 => continue,
            Err(_) => return Err(Error::Format(format!("{}: line {} is not numeric", path.display(), k + 1))),
        };
        if fields.len() != n + 1 {
            return Err(Error::Format(format!(
                "{}: line {} has {} fields, expected {}",
                path.display(),
                k + 1,
                fields.len(),
                n + 1
            )));
        }
        grid.push(fields[0]);
        points.push(fields[1..].to_vec());
    }
    SampledCurve::new(grid, points, None)
}

fn curve_of(chart: &MetricChart<f64>, c: &CurveArgs, step: f64) -> Result<Arc<dyn Curve<f64>>> {
    match &c.curve {
        Some(path) => {
            let curve = read_curve(path, chart.dim())?;
            curve.validate(chart)?;
            Ok(Arc::new(curve))
        }
        None => {
            if c.point.is_empty() || c.velocity.is_empty() {
                return Err(Error::BadParam("give --curve or both --point and --velocity".into()));
            }
            let g = GeodesicArgs {
                point: c.point.clone(),
                velocity: c.velocity.clone(),
                length: c.length,
                unit: false,
            };
            Ok(Arc::new(geodesic_of(chart, &g, step)?))
        }
    }
}

fn plane(s: &str, n: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    let v = vectors(s).map_err(Error::BadParam)?;
    if v.len() != 2 {
        return Err(Error::BadParam("--plane needs two vectors `x;y`".into()));
    }
    check_len("plane vector", &v[0], n)?;
    check_len("plane vector", &v[1], n)?;
    Ok((v[0].clone(), v[1].clone()))
}

pub fn curvature(c: &CurvatureCmd, slot: &mut Slot) -> Result<Value> {
    let chart = load(&c.m, slot)?;
    let n = chart.dim();
    check_len("--point", &c.point, n)?;
    let p = &c.point;
    let gamma = christoffel(&chart, p)?;
    let r = curvature_at(&chart, p)?;
    let ric = ricci(&r)?;
    let mut planes = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            let mut x = vec![0.0; n];
            let mut y = vec![0.0; n];
            x[i] = 1.0;
            y[j] = 1.0;
            planes.push(json!({ "plane": [i, j], "sectional": sectional(&r, &x, &y)? }));
        }
    }
    let extra = match &c.plane {
        Some(s) => {
            let (x, y) = plane(s, n)?;
            Some(sectional(&r, &x, &y)?)
        }
        None => None,
    };
    let sym = check_symmetries(&r);
    Ok(json!({
        "point": p,
        "metric": rows(&r.metric),
        "christoffel": to_json(&gamma.gamma),
        "riemann_low": to_json(&r.low),
        "ricci": rows(&ric.ric),
        "scalar": ric.scalar,
        "sectional": planes,
        "sectional_plane": extra,
        "symmetries": { "r1": sym.r1, "r2": sym.r2, "r3": sym.r3, "r4": sym.r4, "max": sym.max() },
        "bianchi_residual": bianchi_residual(&chart, p)?,
    }))
}

pub fn geodesic(c: &GeodesicCmd, slot: &mut Slot) -> Result<Value> {
    let chart = load(&c.m, slot)?;
    let geo = geodesic_of(&chart, &c.geo, c.run.step)?;
    csv_out(c.csv.as_deref(), &geo.to_csv())?;
    let p0 = geo.point_at(0);
    let v0 = geo.velocity_at(0);
    let speed = chart.inner(p0, v0, v0)?.sqrt();
    Ok(json!({
        "samples": geo.len(),
        "t_end": geo.t_end(),
        "end_point": geo.last_point(),
        "end_velocity": geo.last_velocity(),
        "speed": speed,
        "length": speed * geo.t_end(),
        "speed_drift": geo.speed_drift(),
        "frame_defect": geo.frame_defect(&chart)?,
    }))
}

pub fn transport(c: &TransportCmd, slot: &mut Slot) -> Result<Value> {
    let chart = load(&c.m, slot)?;
    let curve = curve_of(&chart, &c.curve, c.run.step)?;
    let w0 = vectors(&c.vectors).map_err(Error::BadParam)?;
    let tv = parallel_transport(&chart, curve.as_ref(), &w0, &ode(c.run.step))?;
    if let Some(path) = &c.csv {
        let n = chart.dim();
        let mut s = String::from("t");
        for a in 0..w0.len() {
            for i in 0..n {
                s.push_str(&format!(",w{}_{}", a + 1, i + 1));
            }
        }
        s.push('\n');
        for (t, ws) in tv.times.iter().zip(&tv.vectors) {
            s.push_str(&format!("{t:.16e}"));
            for x in ws.iter().flatten() {
                s.push_str(&format!(",{x:.16e}"));
            }
            s.push('\n');
        }
        csv_out(Some(path), &s)?;
    }
    Ok(json!({
        "samples": tv.times.len(),
        "end_point": curve.point(curve.interval().1),
        "transported": tv.last(),
        "gram_drift": tv.gram_drift(&chart, curve.as_ref())?,
    }))
}

pub fn exp(c: &ExpCmd, slot: &mut Slot) -> Result<Value> {
    let chart = load(&c.m, slot)?;
    let n = chart.dim();
    check_len("--point", &c.point, n)?;
    check_len("--velocity", &c.velocity, n)?;
    let settings = ode(c.run.step);
    if c.jacobian {
        let j = exp_jacobian(&chart, &c.point, &c.velocity, &settings)?;
        Ok(json!({ "point": j.point, "d_base": rows(&j.d_base), "d_velocity": rows(&j.d_velocity) }))
    } else {
        Ok(json!({ "point": exp_map(&chart, &c.point, &c.velocity, &settings)? }))
    }
}

pub fn log(c: &LogCmd, slot: &mut Slot) -> Result<Value> {
    let chart = load(&c.m, slot)?;
    let n = chart.dim();
    check_len("--point", &c.point, n)?;
    check_len("--target", &c.target, n)?;
    let settings = ode(c.run.step);
    if c.tries > 1 {
        let s = shortest_geodesic(&chart, &c.point, &c.target, c.tries, c.run.seed, &settings)?;
        return Ok(json!({
            "velocity": s.velocity,
            "length": s.length,
            "converged": s.converged,
            "tries": s.tries,
            "end_point": s.trajectory.last_point(),
        }));
    }
    let ls = LogSettings {
        tolerance: c.tolerance,
        max_iterations: c.max_iterations,
    };
    let r = log_map(&chart, &c.point, None, &c.target, None, &settings, &ls)?;
    let length = chart.inner(&c.point, &r.velocity, &r.velocity)?.sqrt();
    let mut v = to_json(&r);
    v["length"] = json!(length);
    Ok(v)
}

pub fn develop(c: &DevelopCmd, slot: &mut Slot) -> Result<Value> {
    let chart = load(&c.m, slot)?;
    let curve = curve_of(&chart, &c.curve, c.run.step)?;
    let d = develop_curve(&chart, curve.as_ref(), None, &ode(c.run.step))?;
    if let Some(path) = &c.csv {
        let n = chart.dim();
        let mut s = String::from("t");
        for i in 0..n {
            s.push_str(&format!(",s{}", i + 1));
        }
        s.push('\n');
        for (t, x) in d.times.iter().zip(&d.sigma) {
            s.push_str(&format!("{t:.16e}"));
            for v in x {
                s.push_str(&format!(",{v:.16e}"));
            }
            s.push('\n');
        }
        csv_out(Some(path), &s)?;
    }
    Ok(json!({
        "samples": d.times.len(),
        "end": d.sigma.last(),
        "ray_residual": d.ray_residual(),
        "circle_radius": d.circle_radius(),
    }))
}

pub fn jacobi(c: &JacobiCmd, slot: &mut Slot) -> Result<Value> {
    let chart = load(&c.m, slot)?;
    let n = chart.dim();
    check_len("--j0", &c.j0, n)?;
    check_len("--j0p", &c.j0p, n)?;
    let geo = geodesic_of(&chart, &c.geo, c.run.step)?;
    let j = jacobi_solve(&chart, &geo, &c.j0, &c.j0p)?;
    if let Some(path) = &c.csv {
        let mut s = String::from("t");
        for i in 0..n {
            s.push_str(&format!(",f{}", i + 1));
        }
        for i in 0..n {
            s.push_str(&format!(",fp{}", i + 1));
        }
        s.push('\n');
        for k in 0..j.times.len() {
            s.push_str(&format!("{:.16e}", j.times[k]));
            for x in j.f[k].iter().chain(&j.fp[k]) {
                s.push_str(&format!(",{x:.16e}"));
            }
            s.push('\n');
        }
        csv_out(Some(path), &s)?;
    }
    let last = j.times.len() - 1;
    Ok(json!({
        "samples": j.times.len(),
        "end_components": j.f[last],
        "end_derivative": j.fp[last],
        "end_norm": j.norm_sq(last).sqrt(),
        "symmetry_defect": j.symmetry_defect,
        "tangential_residual": j.tangential_residual,
    }))
}

pub fn conjugate(c: &ConjugateCmd, slot: &mut Slot) -> Result<Value> {
    let chart = load(&c.m, slot)?;
    let geo = geodesic_of(&chart, &c.geo, c.run.step)?;
    let v0 = geo.velocity_at(0);
    let s2 = chart.inner(geo.point_at(0), v0, v0)?;
    if (s2 - 1.0).abs() > 1e-8 {
        return Err(Error::BadParam(format!(
            "the geodesic must have unit speed (|v|^2 = {s2}); pass --unit"
        )));
    }
    let r = conjugate_points_along(&chart, &geo)?;
    csv_out(c.csv.as_deref(), &r.det_csv())?;
    Ok(json!({
        "t_conjugate": r.t_conjugate,
        "multiplicities": r.multiplicities,
        "first": r.first(),
        "scale": r.scale,
        "tmax": r.tmax,
    }))
}

pub fn variation(c: &VariationCmd, slot: &mut Slot) -> Result<Value> {
    let chart = load(&c.m, slot)?;
    let n = chart.dim();
    if n < 2 {
        return Err(Error::BadDimension { required: 2, got: n });
    }
    let geo = Arc::new(geodesic_of(&chart, &c.geo, c.run.step)?);
    let l = geo.t_end();
    let v0 = geo.velocity_at(0);
    let speed = chart.inner(geo.point_at(0), v0, v0)?.sqrt();
    let mut e1 = vec![0.0; n];
    e1[1] = 1.0;
    let parallel = FrameField::parallel(e1.clone());
    let k = std::f64::consts::PI / l;
    let bump = FrameField::profiled(e1.clone(), move |t| (k * t).sin(), move |t| k * (k * t).cos());

    let energy = energy_report(&chart, geo.as_ref())?;
    let g2 = geo.clone();
    let first = RectangleSpec::new(
        geo.clone(),
        move |s| {
            let (_, _, frame) = g2.state(s);
            frame[1].iter().map(|x| x * (k * s).sin()).collect()
        },
        EndCondition::FixedEnds,
    )
    .and_then(|rect| first_variation(&chart, &rect, &ode(c.run.step.max(1e-2))));
    let myers = c.c.map(|cb| {
        myers_fields(n, cb, speed)
            .iter()
            .map(|f| index_form(&chart, &geo, f, f))
            .collect::<Result<Vec<f64>>>()
            .map(|v| json!({ "c": cb, "indices": v, "sum": v.iter().sum::<f64>() }))
    });
    Ok(json!({
        "length": speed * l,
        "energy": to_json(&energy),
        "first_variation": section(first),
        "index_parallel": section(index_form(&chart, &geo, &parallel, &parallel)),
        "index_bump": section(index_form(&chart, &geo, &bump, &bump)),
        "myers": myers.map(section),
        "basic_inequality": section(basic_inequality_check(&chart, &geo, &bump)),
        "witness": section(nonminimality_witness(&chart, &geo)),
    }))
}

fn profile_expr(label: &str, src: &str) -> Result<CurvatureProfile<f64>> {
    let e = Expr::parse(src, &["t"])?;
    e.eval::<f64>(&[0.0])?;
    Ok(CurvatureProfile::new(label, move |t| e.eval(&[t]).unwrap_or(f64::NAN)))
}

fn start(f0: f64) -> RiccatiStart<f64> {
    if f0 == f64::INFINITY {
        RiccatiStart::PlusInfinity
    } else {
        RiccatiStart::Finite(f0)
    }
}

pub fn riccati(c: &RiccatiCmd) -> Result<Value> {
    let h = profile_expr(&c.h, &c.h)?;
    let settings = RiccatiSettings {
        step: c.run.step,
        epsilon: c.epsilon,
        t0: c.t0,
    };
    let tr = riccati_solve(&h, start(c.f0), c.tmax, &settings)?;
    csv_out(c.csv.as_deref(), &tr.to_csv())?;
    Ok(json!({
        "poles": to_json(&tr.poles),
        "first_pole": tr.first_pole(),
        "pole_gaps": tr.pole_gaps(),
        "segments": tr.segments.len(),
        "value_at_tmax": tr.eval(c.tmax),
    }))
}

fn other_chart(c: &CompareCmd) -> Result<MetricChart<f64>> {
    match (&c.other_manifold, &c.other_builtin) {
        (Some(path), _) => {
            let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
            load_definition(&text)
        }
        (None, Some(name)) => builtin(name, &parse_params(&c.other_param)?),
        (None, None) => Err(Error::BadParam("rauch needs --other-manifold or --other-builtin".into())),
    }
}

fn unit_geodesic(chart: &MetricChart<f64>, p: &[f64], v: &[f64], len: f64, step: f64) -> Result<Trajectory<f64>> {
    let g = GeodesicArgs {
        point: p.to_vec(),
        velocity: v.to_vec(),
        length: len,
        unit: true,
    };
    geodesic_of(chart, &g, step)
}

pub fn compare(c: &CompareCmd, slot: &mut Slot) -> Result<Value> {
    let settings = RiccatiSettings {
        step: c.run.step,
        ..Default::default()
    };
    match c.kind {
        CompareKind::Driving => {
            let (h, k) = (profile_expr("H", &c.h)?, profile_expr("K", &c.k)?);
            let r = compare_driving(&h, &k, start(c.f0), c.tmax, &settings)?;
            Ok(json!({
                "verified": r.verified,
                "max_violation": r.max_violation,
                "order_margin": r.order_margin,
                "f_first_pole": r.f_first_pole,
                "g_first_pole": r.g_first_pole,
            }))
        }
        CompareKind::Sturm => {
            let (h, k) = (profile_expr("H", &c.h)?, profile_expr("K", &c.k)?);
            Ok(to_json(&sturm_check(&h, &k, c.tmax, c.run.step)?))
        }
        CompareKind::Value => {
            let h = profile_expr("H", &c.h)?;
            Ok(to_json(&value_compare(&h, c.f0, c.g0, c.tmax, &settings)?))
        }
        CompareKind::Rauch => {
            let m = load(&c.m, slot)?;
            let n = other_chart(c)?;
            let gm = unit_geodesic(&m, &c.point, &c.velocity, c.tmax, c.run.step)?;
            let gn = unit_geodesic(&n, &c.other_point, &c.other_velocity, c.tmax, c.run.step)?;
            let r = rauch_ratio(&m, &gm, &n, &gn, c.j0p_len, c.tmax)?;
            Ok(json!({
                "monotone": r.monotone,
                "max_decrease": r.max_decrease,
                "curvature_margin": r.curvature_margin,
                "samples": r.times.len(),
                "final_ratio": r.ratio.last(),
            }))
        }
        CompareKind::Myers => {
            let m = load(&c.m, slot)?;
            let n = m.dim();
            check_len("--point", &c.point, n)?;
            check_len("--velocity", &c.velocity, n)?;
            let s = m.inner(&c.point, &c.velocity, &c.velocity)?.sqrt();
            let v: Vec<f64> = c.velocity.iter().map(|x| x / s).collect();
            Ok(to_json(&myers_check(&m, &c.point, &v, c.c, &ode(c.run.step))?))
        }
    }
}

pub fn volume(c: &VolumeCmd, slot: &mut Slot) -> Result<Value> {
    let chart = load(&c.m, slot)?;
    check_len("--point", &c.point, chart.dim())?;
    let settings = VolumeSettings {
        directions: c.directions,
        step: c.radial_step,
    };
    let report = volume_compare(&chart, &c.point, c.radius, c.kref, &settings)?;
    let mut v = to_json(&report);
    if c.fit_scalar {
        v["scalar_fit"] = to_json(&scalar_expansion_fit(&chart, &c.point, &settings)?);
    }
    Ok(v)
}

pub fn surfrev(c: &SurfrevCmd, slot: &mut Slot) -> Result<Value> {
    let profile = match (&c.profile, c.torus.as_slice()) {
        (Some(path), _) => {
            let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
            let def: ProfileDefinition = serde_json::from_str(&text).map_err(|e| Error::Format(e.to_string()))?;
            *slot = Some(text);
            Profile::<f64>::from_definition(&def)?
        }
        (None, [big, small]) => {
            *slot = Some(json!({ "torus": [big, small] }).to_string());
            Profile::<f64>::torus(*big, *small)?
        }
        (None, []) => return Err(Error::BadParam("give --profile or --torus R,r".into())),
        (None, _) => return Err(Error::BadParam("--torus takes two radii R,r".into())),
    };
    let settings = ode(c.run.step);
    let class = classify_geodesic(&profile, c.u0, c.theta0, c.phi0, c.length, &settings)?;
    let mut v = to_json(&class);
    let chart = profile.chart()?;
    match geodesic_from_angle(&chart, &profile, c.u0, c.theta0, c.phi0, c.length, &settings) {
        Ok(traj) => {
            csv_out(c.csv.as_deref(), &traj.to_csv())?;
            v["clairaut"] = section(clairaut_constant(&profile, &traj));
        }
        Err(e) => v["clairaut"] = json!({ "error": error_value(&e) }),
    }
    Ok(v)
}

pub fn check(c: &CheckCmd, slot: &mut Slot) -> Result<Value> {
    let chart = load(&c.m, slot)?;
    let points = chart.sample_points(c.count, c.scale, c.run.seed);
    let rows: Vec<Result<(Vec<f64>, f64, f64)>> = points
        .par_iter()
        .map(|p| {
            let r = curvature_at(&chart, p)?;
            Ok((p.clone(), check_symmetries(&r).max(), bianchi_residual(&chart, p)?))
        })
        .collect();
    let rows = rows.into_iter().collect::<Result<Vec<_>>>()?;
    let sym = rows.iter().map(|r| r.1).fold(0.0, f64::max);
    let bianchi = rows.iter().map(|r| r.2).fold(0.0, f64::max);
    Ok(json!({
        "points": rows.len(),
        "max_symmetry_residual": sym,
        "max_bianchi_residual": bianchi,
        "symmetries_ok": sym <= 1e-8,
        "bianchi_ok": bianchi <= 1e-5,
        "samples": rows.iter().map(|r| json!({ "point": r.0, "symmetry": r.1, "bianchi": r.2 })).collect::<Vec<_>>(),
    }))
}
