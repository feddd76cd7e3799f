//! Flat `key = value` run configuration and the built-in initial data.
//!
//! Unknown keys are rejected and every parse or validation failure carries the
//! line number, so a config committed next to a result is self-checking. The
//! format is line-oriented: `#` starts a comment, values are scalars, booleans
//! or `name(arg, ...)` forms.

use crate::error::{Error, Result};
use crate::fields::{DirectorField, ScalarField, VectorField};
use crate::geometry::{DomainSpec, Grid};
use crate::operators;
use crate::singularity::bubble_director;
use crate::solver::{DiffusionTreatment, SolverConfig, TimeStep};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Initial-data selector.
#[derive(Debug, Clone, PartialEq)]
pub enum InitKind {
    Zero,
    /// Rigid vortex `u = c (x2, -x1)` with a constant equatorial director.
    Vortex { c: f64 },
    /// Zero velocity, constant director (normalized).
    ConstantD { k: [f64; 3] },
    /// Annulus steady state with the given winding and vortex amplitude.
    Spiral { winding: i32, c: f64 },
    /// Zero velocity, degree-`k` bubble director of scale `s` at `center`.
    PlantedBubble { scale: f64, center: [f64; 2], degree: u32 },
    /// Seeded low-order smooth data, projected to the BC-satisfying space.
    RandomSmooth { seed: u64, amplitude: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub domain: DomainSpec,
    pub resolution: (usize, usize),
    pub dt: TimeStep,
    pub t_end: f64,
    pub diffusion: DiffusionTreatment,
    pub projection_tol: f64,
    pub max_iters: usize,
    pub init: InitKind,
    pub scan_radii: Vec<f64>,
    pub threshold: f64,
    pub scan_every: usize,
    pub abort_on_event: bool,
    pub output_dir: String,
    pub dump_every: usize,
    pub threads: usize,
    /// Optional life-span diagnostic constants `(eps1, C0, R0)`.
    pub life_span: Option<(f64, f64, f64)>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            domain: DomainSpec::Disk { radius: 1.0 },
            resolution: (64, 128),
            dt: TimeStep::AutoCfl(0.25),
            t_end: 1.0,
            diffusion: DiffusionTreatment::Implicit,
            projection_tol: 1e-10,
            max_iters: 50_000,
            init: InitKind::Zero,
            scan_radii: vec![0.4],
            threshold: 4.0 * std::f64::consts::PI,
            scan_every: 10,
            abort_on_event: true,
            output_dir: "out".to_string(),
            dump_every: 0,
            threads: 0,
            life_span: None,
        }
    }
}

impl RunConfig {
    /// Parses the flat `key = value` format; an empty file yields defaults.
    pub fn parse(text: &str) -> Result<RunConfig> {
        let mut cfg = RunConfig::default();
        let mut life: (Option<f64>, Option<f64>, Option<f64>) = (None, None, None);
        for (lineno, raw) in text.lines().enumerate() {
            let line = lineno + 1;
            let stripped = raw.split('#').next().unwrap_or("").trim();
            if stripped.is_empty() {
                continue;
            }
            let (key, value) = stripped.split_once('=').ok_or(Error::Config {
                line,
                msg: format!("expected `key = value`, got `{stripped}`"),
            })?;
            let key = key.trim();
            let value = value.trim();
            let err = |msg: String| Error::Config { line, msg };
            match key {
                "domain" => cfg.domain = parse_domain(value).map_err(|m| err(m))?,
                "resolution" => {
                    let (a, b) = value
                        .split_once(['x', ' '])
                        .ok_or_else(|| err(format!("resolution `{value}` must be `N1xN2`")))?;
                    cfg.resolution = (
                        a.trim().parse().map_err(|_| err(format!("bad resolution `{value}`")))?,
                        b.trim().parse().map_err(|_| err(format!("bad resolution `{value}`")))?,
                    );
                }
                "dt" => {
                    if let Some(args) = call_args(value, "auto") {
                        let c = parse_floats(&args, 1).map_err(|m| err(m))?[0];
                        cfg.dt = TimeStep::AutoCfl(c);
                    } else {
                        let v: f64 =
                            value.parse().map_err(|_| err(format!("bad dt `{value}`")))?;
                        cfg.dt = TimeStep::Fixed(v);
                    }
                }
                "t_end" => cfg.t_end = parse_f64(value, key, line)?,
                "diffusion" => {
                    cfg.diffusion = match value {
                        "implicit" => DiffusionTreatment::Implicit,
                        "explicit" => DiffusionTreatment::Explicit,
                        _ => return Err(err(format!("diffusion must be implicit|explicit, got `{value}`"))),
                    }
                }
                "projection_tol" => cfg.projection_tol = parse_f64(value, key, line)?,
                "max_iters" => {
                    cfg.max_iters =
                        value.parse().map_err(|_| err(format!("bad max_iters `{value}`")))?
                }
                "init" => cfg.init = parse_init(value).map_err(|m| err(m))?,
                "scan_radii" => {
                    cfg.scan_radii = value
                        .split_whitespace()
                        .map(|s| s.parse::<f64>())
                        .collect::<std::result::Result<_, _>>()
                        .map_err(|_| err(format!("bad scan_radii `{value}`")))?;
                }
                "threshold" => cfg.threshold = parse_f64(value, key, line)?,
                "scan_every" => {
                    cfg.scan_every =
                        value.parse().map_err(|_| err(format!("bad scan_every `{value}`")))?
                }
                "abort_on_event" => {
                    cfg.abort_on_event = value
                        .parse()
                        .map_err(|_| err(format!("bad abort_on_event `{value}`")))?
                }
                "output_dir" => cfg.output_dir = value.to_string(),
                "dump_every" => {
                    cfg.dump_every =
                        value.parse().map_err(|_| err(format!("bad dump_every `{value}`")))?
                }
                "threads" => {
                    cfg.threads =
                        value.parse().map_err(|_| err(format!("bad threads `{value}`")))?
                }
                "eps1" => life.0 = Some(parse_f64(value, key, line)?),
                "c0" => life.1 = Some(parse_f64(value, key, line)?),
                "r0" => life.2 = Some(parse_f64(value, key, line)?),
                _ => return Err(err(format!("unknown key `{key}`"))),
            }
        }
        if let (Some(a), Some(b), Some(c)) = life {
            cfg.life_span = Some((a, b, c));
        }
        cfg.validate().map_err(|e| match e {
            Error::Config { .. } => e,
            other => Error::Config { line: 0, msg: other.to_string() },
        })?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        self.domain.validate()?;
        if self.threshold < 0.0 {
            return Err(Error::InvalidArgument(format!(
                "threshold = {} must be non-negative",
                self.threshold
            )));
        }
        if self.scan_radii.iter().any(|r| *r <= 0.0) {
            return Err(Error::InvalidArgument("scan radii must be positive".into()));
        }
        if let InitKind::PlantedBubble { scale, degree, .. } = self.init {
            if scale <= 0.0 || degree == 0 {
                return Err(Error::InvalidArgument(
                    "planted bubble needs scale > 0 and degree >= 1".into(),
                ));
            }
        }
        self.solver_config().validate()
    }

    pub fn solver_config(&self) -> SolverConfig {
        SolverConfig {
            dt: self.dt,
            t_end: self.t_end,
            diffusion: self.diffusion,
            projection_tol: self.projection_tol,
            max_iters: self.max_iters,
            output_every: self.dump_every,
            degenerate_tol: crate::fields::DEGENERATE_TOL,
        }
    }

    /// Serializes back to the flat format; `parse(to_text(c)) == c`.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let domain = match self.domain {
            DomainSpec::Disk { radius } => format!("disk({radius})"),
            DomainSpec::Annulus { r1, r2 } => format!("annulus({r1}, {r2})"),
            DomainSpec::Ellipse { a, b } => format!("ellipse({a}, {b})"),
            DomainSpec::Strip { width, height, periodic_x } => {
                format!("strip({width}, {height}, {periodic_x})")
            }
        };
        s.push_str(&format!("domain = {domain}\n"));
        s.push_str(&format!("resolution = {}x{}\n", self.resolution.0, self.resolution.1));
        match self.dt {
            TimeStep::Fixed(v) => s.push_str(&format!("dt = {v}\n")),
            TimeStep::AutoCfl(c) => s.push_str(&format!("dt = auto({c})\n")),
        }
        s.push_str(&format!("t_end = {}\n", self.t_end));
        s.push_str(&format!(
            "diffusion = {}\n",
            match self.diffusion {
                DiffusionTreatment::Implicit => "implicit",
                DiffusionTreatment::Explicit => "explicit",
            }
        ));
        s.push_str(&format!("projection_tol = {}\n", self.projection_tol));
        s.push_str(&format!("max_iters = {}\n", self.max_iters));
        let init = match &self.init {
            InitKind::Zero => "zero".to_string(),
            InitKind::Vortex { c } => format!("vortex({c})"),
            InitKind::ConstantD { k } => format!("constant-d({}, {}, {})", k[0], k[1], k[2]),
            InitKind::Spiral { winding, c } => format!("spiral({winding}, {c})"),
            InitKind::PlantedBubble { scale, center, degree } => {
                format!("planted-bubble({scale}, {}, {}, {degree})", center[0], center[1])
            }
            InitKind::RandomSmooth { seed, amplitude } => {
                format!("random-smooth({seed}, {amplitude})")
            }
        };
        s.push_str(&format!("init = {init}\n"));
        s.push_str(&format!(
            "scan_radii = {}\n",
            self.scan_radii.iter().map(|r| r.to_string()).collect::<Vec<_>>().join(" ")
        ));
        s.push_str(&format!("threshold = {}\n", self.threshold));
        s.push_str(&format!("scan_every = {}\n", self.scan_every));
        s.push_str(&format!("abort_on_event = {}\n", self.abort_on_event));
        s.push_str(&format!("output_dir = {}\n", self.output_dir));
        s.push_str(&format!("dump_every = {}\n", self.dump_every));
        s.push_str(&format!("threads = {}\n", self.threads));
        if let Some((a, b, c)) = self.life_span {
            s.push_str(&format!("eps1 = {a}\nc0 = {b}\nr0 = {c}\n"));
        }
        s
    }
}

fn parse_f64(value: &str, key: &str, line: usize) -> Result<f64> {
    value.parse().map_err(|_| Error::Config { line, msg: format!("bad {key} `{value}`") })
}

/// `name(arg, arg, ...)` -> argument list, if `value` calls `name`.
fn call_args(value: &str, name: &str) -> Option<Vec<String>> {
    let rest = value.strip_prefix(name)?.trim_start();
    let inner = rest.strip_prefix('(')?.strip_suffix(')')?;
    Some(
        inner
            .split(',')
            .map(|s| s.trim().to_string())
            .filter(|s| !s.is_empty())
            .collect(),
    )
}

fn parse_floats(args: &[String], want: usize) -> std::result::Result<Vec<f64>, String> {
    if args.len() != want {
        return Err(format!("expected {want} argument(s), got {}", args.len()));
    }
    args.iter()
        .map(|a| a.parse::<f64>().map_err(|_| format!("bad number `{a}`")))
        .collect()
}

fn parse_domain(value: &str) -> std::result::Result<DomainSpec, String> {
    if let Some(a) = call_args(value, "disk") {
        let v = parse_floats(&a, 1)?;
        return Ok(DomainSpec::Disk { radius: v[0] });
    }
    if let Some(a) = call_args(value, "annulus") {
        let v = parse_floats(&a, 2)?;
        return Ok(DomainSpec::Annulus { r1: v[0], r2: v[1] });
    }
    if let Some(a) = call_args(value, "ellipse") {
        let v = parse_floats(&a, 2)?;
        return Ok(DomainSpec::Ellipse { a: v[0], b: v[1] });
    }
    if let Some(a) = call_args(value, "strip") {
        if a.len() == 3 {
            let w: f64 = a[0].parse().map_err(|_| format!("bad number `{}`", a[0]))?;
            let h: f64 = a[1].parse().map_err(|_| format!("bad number `{}`", a[1]))?;
            let p: bool = a[2].parse().map_err(|_| format!("bad bool `{}`", a[2]))?;
            return Ok(DomainSpec::Strip { width: w, height: h, periodic_x: p });
        }
        let v = parse_floats(&a, 2)?;
        return Ok(DomainSpec::Strip { width: v[0], height: v[1], periodic_x: true });
    }
    Err(format!("unknown domain `{value}`"))
}

fn parse_init(value: &str) -> std::result::Result<InitKind, String> {
    if value == "zero" {
        return Ok(InitKind::Zero);
    }
    if let Some(a) = call_args(value, "vortex") {
        let v = parse_floats(&a, 1)?;
        return Ok(InitKind::Vortex { c: v[0] });
    }
    if let Some(a) = call_args(value, "constant-d") {
        let v = parse_floats(&a, 3)?;
        return Ok(InitKind::ConstantD { k: [v[0], v[1], v[2]] });
    }
    if let Some(a) = call_args(value, "spiral") {
        if a.len() == 1 {
            let k: i32 = a[0].parse().map_err(|_| format!("bad winding `{}`", a[0]))?;
            return Ok(InitKind::Spiral { winding: k, c: 1.0 });
        }
        if a.len() == 2 {
            let k: i32 = a[0].parse().map_err(|_| format!("bad winding `{}`", a[0]))?;
            let c: f64 = a[1].parse().map_err(|_| format!("bad amplitude `{}`", a[1]))?;
            return Ok(InitKind::Spiral { winding: k, c });
        }
        return Err("spiral takes 1 or 2 arguments".to_string());
    }
    if let Some(a) = call_args(value, "planted-bubble") {
        let v = parse_floats(&a, 4)?;
        return Ok(InitKind::PlantedBubble {
            scale: v[0],
            center: [v[1], v[2]],
            degree: v[3] as u32,
        });
    }
    if let Some(a) = call_args(value, "random-smooth") {
        let v = parse_floats(&a, 2)?;
        return Ok(InitKind::RandomSmooth { seed: v[0] as u64, amplitude: v[1] });
    }
    Err(format!("unknown init `{value}`"))
}

// ---------------------------------------------------------------------------
// Initial data
// ---------------------------------------------------------------------------

/// Builds the `(u0, d0)` pair for a selector. The run pipeline applies the
/// boundary conditions, renormalization and the initial projection.
pub fn build_initial(grid: &Grid, init: &InitKind) -> Result<(VectorField, DirectorField)> {
    match init {
        InitKind::Zero => Ok((
            VectorField::zeros(grid),
            DirectorField::constant(grid, [1.0, 0.0, 0.0]),
        )),
        InitKind::Vortex { c } => {
            let c = *c;
            Ok((
                VectorField::from_fn(grid, move |x, y| [c * y, -c * x]),
                DirectorField::constant(grid, [1.0, 0.0, 0.0]),
            ))
        }
        InitKind::ConstantD { k } => {
            let n = (k[0] * k[0] + k[1] * k[1] + k[2] * k[2]).sqrt();
            if n <= 0.0 {
                return Err(Error::InvalidArgument("constant director must be nonzero".into()));
            }
            Ok((
                VectorField::zeros(grid),
                DirectorField::constant(grid, [k[0] / n, k[1] / n, k[2] / n]),
            ))
        }
        InitKind::Spiral { winding, c } => {
            let spec = crate::steady::SteadyStateSpec::AnnulusVortexSpiral {
                c: *c,
                k1: 0.6,
                k2: 0.8,
                k3: 1.0,
                winding: *winding,
            };
            let (u, d, _) = crate::steady::make_state(&spec, grid)?;
            Ok((u, d))
        }
        InitKind::PlantedBubble { scale, center, degree } => {
            let (s, c, k) = (*scale, *center, *degree);
            Ok((
                VectorField::zeros(grid),
                DirectorField::from_fn(grid, move |x, y| bubble_director(x, y, c, s, k)),
            ))
        }
        InitKind::RandomSmooth { seed, amplitude } => random_smooth(grid, *seed, *amplitude),
    }
}

/// Seeded smooth data from a low-order basis: a streamfunction vanishing to
/// second order at walls (so its curl is tangential), and a director tilt
/// whose vertical part vanishes at the boundary.
fn random_smooth(grid: &Grid, seed: u64, amplitude: f64) -> Result<(VectorField, DirectorField)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut coef = [0.0f64; 18];
    for c in coef.iter_mut() {
        *c = rng.gen_range(-1.0..1.0);
    }
    let spec = grid.spec;
    let shape = move |x: f64, y: f64| -> (f64, [f64; 6]) {
        // (wall factor in [0,1], six smooth basis functions)
        match spec {
            DomainSpec::Disk { radius } => {
                let r2 = (x * x + y * y) / (radius * radius);
                let (cx, cy) = (x / radius, y / radius);
                (
                    1.0 - r2,
                    [1.0, cx, cy, cx * cx - cy * cy, 2.0 * cx * cy, r2],
                )
            }
            DomainSpec::Ellipse { a, b } => {
                let r2 = (x / a) * (x / a) + (y / b) * (y / b);
                let (cx, cy) = (x / a, y / b);
                (
                    1.0 - r2,
                    [1.0, cx, cy, cx * cx - cy * cy, 2.0 * cx * cy, r2],
                )
            }
            DomainSpec::Annulus { r1, r2 } => {
                let r = (x * x + y * y).sqrt();
                let s = (r - r1) / (r2 - r1);
                let t = y.atan2(x);
                (
                    s * (1.0 - s),
                    [1.0, t.cos(), t.sin(), (2.0 * t).cos(), (2.0 * t).sin(), s],
                )
            }
            DomainSpec::Strip { width, height, .. } => {
                let s = y / height;
                let k = 2.0 * std::f64::consts::PI / width;
                (
                    s * (1.0 - s),
                    [1.0, (k * x).cos(), (k * x).sin(), (2.0 * k * x).cos(), (2.0 * k * x).sin(), s],
                )
            }
        }
    };

    let amp = amplitude;
    let psi = {
        let c: Vec<f64> = coef[0..6].to_vec();
        move |x: f64, y: f64| -> f64 {
            let (wall, basis) = shape(x, y);
            let mut s = 0.0;
            for k in 0..6 {
                s += c[k] * basis[k];
            }
            amp * wall * wall * s
        }
    };
    let mut psi_field = ScalarField::zeros(grid);
    psi_field.fill_with(grid, psi);
    let g = operators::grad(grid, &psi_field)?;
    let mut u = VectorField::zeros(grid);
    for i in 0..grid.n1 as isize {
        for j in 0..grid.n2 as isize {
            let p = grid.pidx(i, j);
            u.c[0][p] = g.c[1][p];
            u.c[1][p] = -g.c[0][p];
        }
    }

    let cd: Vec<f64> = coef[6..18].to_vec();
    let d = DirectorField::from_fn(grid, move |x, y| {
        let (wall, basis) = shape(x, y);
        let mut q = [0.0f64; 3];
        for k in 0..6 {
            q[0] += cd[k] * basis[k];
            q[1] += cd[6 + k] * basis[k];
        }
        q[2] = (cd[3] * basis[1] + cd[9] * basis[2] + cd[5] * basis[3]) * wall;
        let v = [1.0 + amp * 0.5 * q[0], amp * 0.5 * q[1], amp * 0.5 * q[2]];
        let n = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
        [v[0] / n, v[1] / n, v[2] / n]
    });
    Ok((u, d))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_config_is_defaults() {
        let cfg = RunConfig::parse("").unwrap();
        assert_eq!(cfg, RunConfig::default());
        assert_eq!(cfg.resolution, (64, 128));
        assert!(matches!(cfg.domain, DomainSpec::Disk { radius } if radius == 1.0));
        assert_eq!(cfg.init, InitKind::Zero);
    }

    #[test]
    fn spiral_annulus_configuration() {
        let text = "domain = annulus(1, 2.718281828)\ninit = spiral(1)\n";
        let cfg = RunConfig::parse(text).unwrap();
        assert!(matches!(cfg.domain, DomainSpec::Annulus { .. }));
        assert_eq!(cfg.init, InitKind::Spiral { winding: 1, c: 1.0 });
    }

    #[test]
    fn negative_threshold_is_rejected() {
        let err = RunConfig::parse("threshold = -1\n").unwrap_err();
        match err {
            Error::Config { .. } | Error::InvalidArgument(_) => {}
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn unknown_key_reports_line() {
        let err = RunConfig::parse("t_end = 1.0\nbogus = 3\n").unwrap_err();
        match err {
            Error::Config { line, msg } => {
                assert_eq!(line, 2);
                assert!(msg.contains("bogus"));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn comments_and_blank_lines_are_ignored() {
        let cfg = RunConfig::parse("# header\n\nt_end = 2.0 # trailing\n").unwrap();
        assert_eq!(cfg.t_end, 2.0);
    }

    #[test]
    fn parse_to_text_round_trip() {
        let mut cfg = RunConfig::default();
        cfg.domain = DomainSpec::Ellipse { a: 1.5, b: 1.0 };
        cfg.resolution = (32, 64);
        cfg.dt = TimeStep::Fixed(2e-3);
        cfg.init = InitKind::RandomSmooth { seed: 7, amplitude: 0.4 };
        cfg.scan_radii = vec![0.3, 0.5];
        cfg.life_span = Some((0.1, 2.0, 0.5));
        let text = cfg.to_text();
        let parsed = RunConfig::parse(&text).unwrap();
        assert_eq!(cfg, parsed);
    }

    #[test]
    fn random_smooth_is_deterministic() {
        let g = crate::geometry::build_grid(DomainSpec::Disk { radius: 1.0 }, (16, 32)).unwrap();
        let (u1, d1) = build_initial(&g, &InitKind::RandomSmooth { seed: 3, amplitude: 0.5 })
            .unwrap();
        let (u2, d2) = build_initial(&g, &InitKind::RandomSmooth { seed: 3, amplitude: 0.5 })
            .unwrap();
        assert_eq!(u1.c[0], u2.c[0]);
        assert_eq!(d1.c[2], d2.c[2]);
        let (u3, _) = build_initial(&g, &InitKind::RandomSmooth { seed: 4, amplitude: 0.5 })
            .unwrap();
        assert_ne!(u1.c[0], u3.c[0]);
    }
}
