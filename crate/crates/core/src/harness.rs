//! Validation runs, one-shot evaluation and benchmarks behind the `perfmm`
//! command-line tool. Everything here is `f64`.

use crate::apply::{
    build_periodizer, choose_path, total_field_with, ApplyPath, DirectSum, FieldSpec, FreeSpaceEvaluator, Timings,
};
use crate::cell::{cell_from_angle, make_unit_cell, ParticleSystem, Periodicity, Strengths, UnitCell};
use crate::error::{Error, Result};
use crate::kernels::Pde;
use crate::oracle::{boundary_pairs, periodicity_residual, ResidualReport};
use crate::periodizer::{FieldKind, Periodizer};
use crate::scalar::{Cx, Point};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;
use std::time::Instant;

/// Precisions a run may request.
pub const EPS_RANGE: (f64, f64) = (1e-13, 1e-3);

/// Cell geometry, either explicit or as an aspect ratio and angle with `d = 1`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum CellSpec {
    Explicit { d: f64, xi: f64, eta: f64 },
    Angle { aspect: f64, theta: f64 },
}

impl CellSpec {
    pub fn rectangle(aspect: f64) -> Self {
        CellSpec::Angle { aspect, theta: std::f64::consts::FRAC_PI_2 }
    }

    pub fn build(&self, periodicity: Periodicity) -> Result<UnitCell<f64>> {
        match *self {
            CellSpec::Explicit { d, xi, eta } => make_unit_cell(d, xi, eta, periodicity),
            CellSpec::Angle { aspect, theta } => {
                let c = cell_from_angle(aspect, theta)?;
                make_unit_cell(c.d, c.xi, c.eta, periodicity)
            }
        }
    }

    /// The same shape stretched to aspect ratio `aspect`.
    pub fn with_aspect(&self, aspect: f64) -> Self {
        match *self {
            CellSpec::Explicit { d, xi, eta } => {
                let s = d / (aspect * eta);
                CellSpec::Explicit { d, xi: xi * s, eta: eta * s }
            }
            CellSpec::Angle { theta, .. } => CellSpec::Angle { aspect, theta },
        }
    }
}

/// Everything that defines a run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub pde: Pde,
    pub beta: f64,
    pub cell: CellSpec,
    pub periodicity: Periodicity,
    pub eps: f64,
    pub n_src: usize,
    pub seed: u64,
    /// Targets per cell face in validation runs.
    pub samples: usize,
    pub accel: ApplyPath,
    /// Also evaluate the pressure (Stokes and modified Stokes).
    pub pressure: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            pde: Pde::ModHelmholtz,
            beta: 1.0,
            cell: CellSpec::rectangle(1.0),
            periodicity: Periodicity::Doubly,
            eps: 1e-12,
            n_src: 4000,
            seed: 0,
            samples: 500,
            accel: ApplyPath::Auto,
            pressure: false,
        }
    }
}

impl RunConfig {
    pub fn check(&self) -> Result<()> {
        if !(self.eps >= EPS_RANGE.0 && self.eps <= EPS_RANGE.1) {
            return Err(Error::PrecisionOutOfRange(self.eps));
        }
        if self.pde.is_modified() && !(self.beta > 0.0) {
            return Err(Error::Config(format!("--pde {} needs --beta > 0", self.pde.name())));
        }
        if self.pressure && !self.pde.is_vector() {
            return Err(Error::Config(format!("--pressure needs --pde stokes or mstokes, got {}", self.pde.name())));
        }
        if self.samples < 10 {
            return Err(Error::Config(format!("--samples must be at least 10, got {}", self.samples)));
        }
        Ok(())
    }

    pub fn unit_cell(&self) -> Result<UnitCell<f64>> {
        self.cell.build(self.periodicity)
    }

    fn field(&self) -> FieldSpec<f64> {
        let kind = if self.pde.is_vector() { FieldKind::Velocity } else { FieldKind::Potential };
        FieldSpec { pde: self.pde, beta: self.effective_beta(), kind }
    }

    fn effective_beta(&self) -> f64 {
        if self.pde.is_modified() {
            self.beta
        } else {
            0.0
        }
    }
}

/// Uniform random sources in the cell with strengths in `[-1, 1)`, the mean
/// subtracted when the kernel needs neutrality.
pub fn random_sources(cfg: &RunConfig, cell: &UnitCell<f64>) -> (Vec<Point<f64>>, Strengths<f64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let n = cfg.n_src;
    let src: Vec<Point<f64>> = (0..n).map(|_| cell.point(rng.gen_range(-0.5..0.5), rng.gen_range(-0.5..0.5))).collect();
    let nc = if cfg.pde.is_vector() { 2 } else { 1 };
    let mut q: Vec<[f64; 2]> = (0..n).map(|_| [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)]).collect();
    if cfg.pde.needs_neutrality() && n > 0 {
        for c in 0..nc {
            let mean = q.iter().map(|v| v[c]).sum::<f64>() / n as f64;
            q.iter_mut().for_each(|v| v[c] -= mean);
        }
    }
    let strengths = if nc == 2 {
        Strengths::Vector(q)
    } else {
        Strengths::Scalar(q.into_iter().map(|v| v[0]).collect())
    };
    (src, strengths)
}

/// Validation targets in the order the residual expects: for each periodic
/// direction the lower face, then its image.
pub fn boundary_targets(cell: &UnitCell<f64>, samples: usize) -> Vec<Point<f64>> {
    let mut out = Vec::new();
    for (a, b) in boundary_pairs(cell, samples) {
        out.extend(a);
        out.extend(b);
    }
    out
}

/// One row of a validation table.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TableRow {
    #[serde(rename = "A")]
    pub aspect: f64,
    /// Building and applying the periodizer.
    pub t_per: f64,
    /// Near-image direct sums.
    pub t_near: f64,
    pub t_total: f64,
    /// Free-space sum over the cell alone, for scale.
    pub t_free: f64,
    #[serde(rename = "Error")]
    pub error: f64,
}

/// Cell description in reports.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CellReport {
    pub d: f64,
    pub xi: f64,
    pub eta: f64,
    pub aspect: f64,
    pub periodicity: u8,
}

impl From<&UnitCell<f64>> for CellReport {
    fn from(c: &UnitCell<f64>) -> Self {
        CellReport {
            d: c.d,
            xi: c.xi,
            eta: c.eta,
            aspect: c.aspect,
            periodicity: if c.periodicity == Periodicity::Doubly { 2 } else { 1 },
        }
    }
}

/// Outcome of a validation run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub pde: Pde,
    pub beta: f64,
    pub cell: CellReport,
    pub eps: f64,
    pub n_src: usize,
    /// Rank of each directional part.
    pub rank: Vec<usize>,
    pub residuals: ResidualReport,
    pub pressure_residuals: Option<ResidualReport>,
    pub timings: TableRow,
    /// Pass threshold, `5ε`.
    pub threshold: f64,
    pub passed: bool,
    pub failures: Vec<String>,
}

/// Field values at the validation targets, with timings.
pub struct ValidationFields {
    pub cell: UnitCell<f64>,
    pub system: ParticleSystem<f64>,
    pub values: Vec<Cx<f64>>,
    pub pressure: Option<Vec<Cx<f64>>>,
    pub periodizer: Periodizer<f64>,
    pub timings: Timings,
}

/// Evaluates the total field at the validation targets.
pub fn validation_fields(cfg: &RunConfig) -> Result<ValidationFields> {
    cfg.check()?;
    let cell = cfg.unit_cell()?;
    let (src, q) = random_sources(cfg, &cell);
    let system = ParticleSystem::new(src, q, boundary_targets(&cell, cfg.samples))?;
    evaluate(cfg, &cell, system, None)
}

fn evaluate(
    cfg: &RunConfig,
    cell: &UnitCell<f64>,
    system: ParticleSystem<f64>,
    normals: Option<Vec<Point<f64>>>,
) -> Result<ValidationFields> {
    let mut field = cfg.field();
    if normals.is_some() {
        if cfg.pde != Pde::Stokes {
            return Err(Error::Config("normals (double-layer sources) need --pde stokes".into()));
        }
        field.kind = FieldKind::DoubleLayer;
    }
    let t0 = Instant::now();
    let periodizer = build_periodizer(&field, cell, cfg.eps, normals.as_deref())?;
    let build = t0.elapsed().as_secs_f64();
    let (values, mut timings) = total_field_with(&periodizer, &system, cfg.accel, &DirectSum)?;
    timings.build = build;
    let pressure = if cfg.pressure {
        let spec = FieldSpec { kind: FieldKind::Pressure, ..field };
        let p = build_periodizer(&spec, cell, cfg.eps, None)?;
        Some(total_field_with(&p, &system, cfg.accel, &DirectSum)?.0)
    } else {
        None
    };
    Ok(ValidationFields { cell: *cell, system, values, pressure, periodizer, timings })
}

/// Periodicity residual of values at the boundary targets. Gauge-free
/// fields (defined up to a constant) have their mean over the targets
/// removed first, so the normalization cannot be inflated by the constant.
fn residual_of(id: &str, fields: &ValidationFields, values: &[Cx<f64>], samples: usize, centered: bool) -> Result<ResidualReport> {
    let targets = &fields.system.targets;
    let nc = values.len() / targets.len().max(1);
    let mut v = values.to_vec();
    if centered && !targets.is_empty() {
        for c in 0..nc {
            let mean = v.iter().skip(c).step_by(nc).sum::<Cx<f64>>() / targets.len() as f64;
            v.iter_mut().skip(c).step_by(nc).for_each(|z| *z -= mean);
        }
    }
    periodicity_residual(
        id,
        |t: &[Point<f64>]| {
            debug_assert_eq!(t, targets.as_slice());
            Ok(v.clone())
        },
        &fields.cell,
        samples,
    )
}

/// Runs a validation: random sources, boundary targets, total field, and
/// the periodicity residual gated at `5ε`.
pub fn validate(cfg: &RunConfig) -> Result<ValidationReport> {
    let t0 = Instant::now();
    let fields = validation_fields(cfg)?;
    let t_total = t0.elapsed().as_secs_f64();
    let id = format!("{}:{:?}", cfg.pde.name(), fields.periodizer.kind);
    let residuals = residual_of(&id, &fields, &fields.values, cfg.samples, cfg.pde.needs_neutrality())?;
    let pressure_residuals = match &fields.pressure {
        Some(p) => Some(residual_of(&format!("{}:pressure", cfg.pde.name()), &fields, p, cfg.samples, true)?),
        None => None,
    };
    let t1 = Instant::now();
    let mut scratch = vec![Cx::new(0.0, 0.0); fields.values.len()];
    let sys = &fields.system;
    DirectSum.accumulate(&cfg.field(), &sys.sources, &sys.strengths, None, &sys.targets, &mut scratch)?;
    let t_free = t1.elapsed().as_secs_f64();

    let threshold = 5.0 * cfg.eps;
    let mut failures = Vec::new();
    if !(residuals.gate() <= threshold) {
        failures.push(format!("{} residual {:.3e} > {:.1e}", residuals.kernel, residuals.gate(), threshold));
    }
    if let Some(p) = &pressure_residuals {
        if !(p.gate() <= threshold) {
            failures.push(format!("{} residual {:.3e} > {:.1e}", p.kernel, p.gate(), threshold));
        }
    }
    let t = fields.timings;
    Ok(ValidationReport {
        pde: cfg.pde,
        beta: cfg.effective_beta(),
        cell: CellReport::from(&fields.cell),
        eps: cfg.eps,
        n_src: cfg.n_src,
        rank: fields.periodizer.parts.iter().map(|p| p.rank()).collect(),
        timings: TableRow {
            aspect: fields.cell.aspect,
            t_per: t.build + t.per,
            t_near: t.near,
            t_total,
            t_free,
            error: residuals.gate(),
        },
        residuals,
        pressure_residuals,
        threshold,
        passed: failures.is_empty(),
        failures,
    })
}

/// The cell sweep of the validation tables: rectangles at aspect ratios 1
/// to 1000, singly and doubly periodic, and parallelograms at `π/3` and
/// `π/6`, doubly periodic.
pub fn table_sweep() -> Vec<(String, CellSpec, Periodicity)> {
    let mut out = Vec::new();
    for per in [Periodicity::Singly, Periodicity::Doubly] {
        for a in [1.0, 10.0, 100.0, 1000.0] {
            let p = if per == Periodicity::Doubly { 2 } else { 1 };
            out.push((format!("rectangle A={a} P{p}"), CellSpec::rectangle(a), per));
        }
    }
    for (name, theta) in [("pi/3", std::f64::consts::FRAC_PI_3), ("pi/6", std::f64::consts::FRAC_PI_6)] {
        for a in [2.0, 10.0, 100.0, 1000.0] {
            out.push((format!("theta={name} A={a} P2"), CellSpec::Angle { aspect: a, theta }, Periodicity::Doubly));
        }
    }
    out
}

/// Sources read from a text file.
#[derive(Clone, Debug, PartialEq)]
pub struct SourceFile {
    pub points: Vec<Point<f64>>,
    pub strengths: Strengths<f64>,
    pub normals: Option<Vec<Point<f64>>>,
}

fn records(text: &str) -> impl Iterator<Item = (usize, Vec<&str>)> {
    text.lines().enumerate().filter_map(|(i, line)| {
        let body = line.split('#').next().unwrap_or("");
        let cols: Vec<&str> = body.split_whitespace().collect();
        (!cols.is_empty()).then_some((i + 1, cols))
    })
}

fn numbers(line: usize, cols: &[&str]) -> Result<Vec<f64>> {
    cols.iter()
        .map(|c| {
            let v: f64 = c.parse().map_err(|_| Error::Parse { line, msg: format!("'{c}' is not a number") })?;
            if v.is_finite() {
                Ok(v)
            } else {
                Err(Error::Parse { line, msg: format!("'{c}' is not finite") })
            }
        })
        .collect()
}

/// Parses `x y q` records (scalar kernels) or `x y qx qy [nx ny]` records
/// (vector kernels); `#` starts a comment.
pub fn parse_sources(text: &str, pde: Pde) -> Result<SourceFile> {
    let mut points = Vec::new();
    let mut scalar = Vec::new();
    let mut vector = Vec::new();
    let mut normals: Vec<Point<f64>> = Vec::new();
    let mut with_normals: Option<bool> = None;
    for (line, cols) in records(text) {
        let v = numbers(line, &cols)?;
        points.push([v[0], *v.get(1).unwrap_or(&0.0)]);
        if pde.is_vector() {
            let has = match v.len() {
                4 => false,
                6 => true,
                n => {
                    return Err(Error::Parse { line, msg: format!("expected 4 or 6 columns (x y qx qy [nx ny]), got {n}") })
                }
            };
            if *with_normals.get_or_insert(has) != has {
                return Err(Error::Parse { line, msg: "normals must be given on every line or on none".into() });
            }
            vector.push([v[2], v[3]]);
            if has {
                normals.push([v[4], v[5]]);
            }
        } else {
            if v.len() != 3 {
                return Err(Error::Parse { line, msg: format!("expected 3 columns (x y q), got {}", v.len()) });
            }
            scalar.push(v[2]);
        }
    }
    let strengths = if pde.is_vector() { Strengths::Vector(vector) } else { Strengths::Scalar(scalar) };
    Ok(SourceFile { points, strengths, normals: with_normals.unwrap_or(false).then_some(normals) })
}

/// Parses `x y` target records.
pub fn parse_targets(text: &str) -> Result<Vec<Point<f64>>> {
    records(text)
        .map(|(line, cols)| {
            if cols.len() != 2 {
                return Err(Error::Parse { line, msg: format!("expected 2 columns (x y), got {}", cols.len()) });
            }
            let v = numbers(line, &cols)?;
            Ok([v[0], v[1]])
        })
        .collect()
}

/// Writes sources in the format [`parse_sources`] reads. Values round-trip
/// exactly.
pub fn format_sources(points: &[Point<f64>], strengths: &Strengths<f64>, normals: Option<&[Point<f64>]>) -> String {
    let mut s = String::new();
    for (j, p) in points.iter().enumerate() {
        let _ = write!(s, "{:e} {:e}", p[0], p[1]);
        for c in 0..strengths.components() {
            let _ = write!(s, " {:e}", strengths.get(j, c).re);
        }
        if let Some(n) = normals {
            let _ = write!(s, " {:e} {:e}", n[j][0], n[j][1]);
        }
        s.push('\n');
    }
    s
}

/// Writes `x y` records.
pub fn format_targets(targets: &[Point<f64>]) -> String {
    targets.iter().map(|t| format!("{:e} {:e}\n", t[0], t[1])).collect()
}

/// Result of a one-shot evaluation.
pub struct ApplyOutput {
    pub targets: Vec<Point<f64>>,
    pub values: Vec<Cx<f64>>,
    pub components: usize,
    pub pressure: Option<Vec<Cx<f64>>>,
}

impl ApplyOutput {
    /// One line per target: `x y u... [p]`, with a header comment.
    pub fn to_text(&self) -> String {
        let mut s = String::from("# x y");
        for c in 0..self.components {
            let _ = write!(s, " u{c}");
        }
        if self.pressure.is_some() {
            s.push_str(" p");
        }
        s.push('\n');
        for (i, t) in self.targets.iter().enumerate() {
            let _ = write!(s, "{:e} {:e}", t[0], t[1]);
            for c in 0..self.components {
                let _ = write!(s, " {:e}", self.values[i * self.components + c].re);
            }
            if let Some(p) = &self.pressure {
                let _ = write!(s, " {:e}", p[i].re);
            }
            s.push('\n');
        }
        s
    }
}

/// Evaluates the periodic field of the sources in `sources_text` at the
/// targets in `targets_text`.
pub fn apply_files(cfg: &RunConfig, sources_text: &str, targets_text: &str) -> Result<ApplyOutput> {
    cfg.check()?;
    let cell = cfg.unit_cell()?;
    let src = parse_sources(sources_text, cfg.pde)?;
    let targets = parse_targets(targets_text)?;
    let components = if cfg.pde.is_vector() { 2 } else { 1 };
    if targets.is_empty() {
        return Ok(ApplyOutput { targets, values: Vec::new(), components, pressure: cfg.pressure.then(Vec::new) });
    }
    let system = ParticleSystem::new(src.points, src.strengths, targets)?;
    system.check_in_cell(&cell)?;
    let f = evaluate(cfg, &cell, system, src.normals)?;
    Ok(ApplyOutput { targets: f.system.targets, values: f.values, components, pressure: f.pressure })
}

/// Per-part entry of a benchmark row.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PartTiming {
    pub direction: String,
    pub rank: usize,
    pub path: ApplyPath,
}

/// One benchmark measurement.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    #[serde(rename = "A")]
    pub aspect: f64,
    pub n_src: usize,
    pub parts: Vec<PartTiming>,
    pub t_build: f64,
    /// Fastest far-field apply over the repetitions.
    pub t_per: f64,
    /// `(slowest - fastest) / fastest` over the repetitions.
    pub spread: f64,
}

/// Times the far-field apply over a sweep of aspect ratios and source
/// counts, with as many random targets as sources.
pub fn bench(cfg: &RunConfig, aspects: &[f64], sizes: &[usize], repeats: usize) -> Result<Vec<BenchRow>> {
    cfg.check()?;
    let mut rows = Vec::new();
    for &a in aspects {
        let run = RunConfig { cell: cfg.cell.with_aspect(a), ..cfg.clone() };
        let cell = run.unit_cell()?;
        let t0 = Instant::now();
        let p = build_periodizer(&run.field(), &cell, run.eps, None)?;
        let t_build = t0.elapsed().as_secs_f64();
        for &n in sizes {
            let (src, q) = random_sources(&RunConfig { n_src: n, ..run.clone() }, &cell);
            let (tgt, _) = random_sources(&RunConfig { n_src: n, seed: run.seed ^ 0x9e37_79b9, ..run.clone() }, &cell);
            let mut times = Vec::with_capacity(repeats.max(1));
            for _ in 0..repeats.max(1) {
                let t = Instant::now();
                crate::apply::apply_periodizer(&p, &src, &q, &tgt, run.accel)?;
                times.push(t.elapsed().as_secs_f64());
            }
            let lo = times.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = times.iter().copied().fold(0.0, f64::max);
            let parts = p
                .parts
                .iter()
                .map(|part| PartTiming {
                    direction: format!("{:?}", part.direction).to_lowercase(),
                    rank: part.rank(),
                    path: choose_path(part, cell.periodicity, n, n, run.accel),
                })
                .collect();
            rows.push(BenchRow { aspect: a, n_src: n, parts, t_build, t_per: lo, spread: (hi - lo) / lo.max(1e-12) });
        }
    }
    Ok(rows)
}

/// Plain-text rendering of benchmark rows.
pub fn bench_table(rows: &[BenchRow]) -> String {
    let mut s = String::from("       A      N    t_build      t_per  spread  parts\n");
    for r in rows {
        let parts: Vec<String> = r.parts.iter().map(|p| format!("{}:{}:{:?}", p.direction, p.rank, p.path)).collect();
        let _ = writeln!(
            s,
            "{:>8} {:>6} {:>10.4} {:>10.4} {:>7.3}  {}",
            r.aspect,
            r.n_src,
            r.t_build,
            r.t_per,
            r.spread,
            parts.join(" ")
        );
    }
    s
}
