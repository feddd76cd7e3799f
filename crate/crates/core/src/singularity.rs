//! Concentration monitoring, blow-up rescaling, bubble energies and the
//! reflection symmetry test.
//!
//! A singular time is flagged when the local energy `∫_{Ω∩B_r(x)}(|u|^2 +
//! |grad d|^2)` reaches the quantization threshold (default `4π`) for some
//! ball. The scan first bounds the maximum by the total energy (so
//! small-energy runs cost nothing), then maximizes over a coarse candidate
//! lattice with a deterministic local pattern refinement.
//!
//! Bubble energies integrate the gradient density of the degree-`k`
//! stereographic harmonic map, `8 k^2 r^{2k-2} / (1 + r^{2k})^2`, whose total
//! energy is `8πk`; the half-plane restriction of the equatorially oriented
//! `k = 1` bubble carries half of that.

use crate::energy::{self, masked_sum};
use crate::error::{Error, Result};
use crate::fields::{DirectorField, VectorField};
use crate::geometry::{build_grid, DomainSpec, Grid};
use crate::solver::{run, RunReport, SimState, SolverConfig, TimeStep};

/// Scan parameters: the ball radii to monitor and the detection threshold.
#[derive(Debug, Clone)]
pub struct ScanConfig {
    pub radii: Vec<f64>,
    pub threshold: f64,
}

impl ScanConfig {
    pub fn validate(&self) -> Result<()> {
        if self.radii.iter().any(|r| *r <= 0.0) {
            return Err(Error::InvalidArgument("scan radii must be positive".into()));
        }
        Ok(())
    }
}

impl Default for ScanConfig {
    fn default() -> Self {
        Self { radii: vec![0.4], threshold: 4.0 * std::f64::consts::PI }
    }
}

/// One concentration observation.
#[derive(Debug, Clone, Copy)]
pub struct ScanEntry {
    /// Maximizing center (or the cheap bound location when `bounded`).
    pub x: [f64; 2],
    /// Radius achieving the maximum.
    pub r: f64,
    /// `max_r max_x` local energy, or the total-energy upper bound.
    pub value: f64,
    pub fired: bool,
    /// True when the total energy already bounds the scan below threshold and
    /// the lattice search was skipped.
    pub bounded: bool,
}

/// A threshold crossing.
#[derive(Debug, Clone, Copy)]
pub struct ConcentrationEvent {
    pub t: f64,
    pub x: [f64; 2],
    pub r: f64,
    pub value: f64,
}

/// Scan history plus the detected events, sorted by time.
#[derive(Debug, Clone, Default)]
pub struct ConcentrationReport {
    pub entries: Vec<(f64, ScanEntry)>,
    pub events: Vec<ConcentrationEvent>,
}

impl ConcentrationReport {
    pub fn push(&mut self, t: f64, entry: ScanEntry) {
        if entry.fired {
            self.events.push(ConcentrationEvent { t, x: entry.x, r: entry.r, value: entry.value });
        }
        self.entries.push((t, entry));
    }
}

/// Computes `m(r) = max_x` of the local energy for each configured radius and
/// flags an event when the maximum reaches the threshold.
pub fn scan(grid: &Grid, u: &VectorField, d: &DirectorField, cfg: &ScanConfig) -> Result<ScanEntry> {
    cfg.validate()?;
    let dens = energy::energy_density(grid, u, d)?;
    let mut total = 0.0;
    for i in 0..grid.n1 as isize {
        for j in 0..grid.n2 as isize {
            let p = grid.pidx(i, j);
            total += grid.weight[p] * dens.a[p];
        }
    }
    if total <= cfg.threshold {
        return Ok(ScanEntry { x: [0.0, 0.0], r: cfg.radii[0], value: total, fired: false, bounded: true });
    }

    let mut best = ScanEntry { x: [0.0, 0.0], r: cfg.radii[0], value: -1.0, fired: false, bounded: false };
    for &r in &cfg.radii {
        // coarse candidate lattice: every 4th node
        let mut cx = [0.0, 0.0];
        let mut cv = -1.0;
        for i in (0..grid.n1 as isize).step_by(4) {
            for j in (0..grid.n2 as isize).step_by(4) {
                let p = grid.pidx(i, j);
                let v = masked_sum(grid, &dens, [grid.x[p], grid.y[p]], r);
                if v > cv {
                    cv = v;
                    cx = [grid.x[p], grid.y[p]];
                }
            }
        }
        // deterministic pattern refinement around the lattice maximum
        let mut delta = 4.0 * (grid.h1 * grid.h1s.iter().fold(1.0f64, |m, _| m)).max(grid.h1);
        delta = delta.max(4.0 * grid.h1);
        for _ in 0..5 {
            let mut improved = false;
            for dy in [-1.0, 0.0, 1.0] {
                for dx in [-1.0, 0.0, 1.0] {
                    if dx == 0.0 && dy == 0.0 {
                        continue;
                    }
                    let cand = [cx[0] + dx * delta, cx[1] + dy * delta];
                    let v = masked_sum(grid, &dens, cand, r);
                    if v > cv {
                        cv = v;
                        cx = cand;
                        improved = true;
                    }
                }
            }
            if !improved {
                delta *= 0.5;
            }
        }
        if cv > best.value {
            best = ScanEntry { x: cx, r, value: cv, fired: false, bounded: false };
        }
    }
    best.fired = best.value >= cfg.threshold;
    Ok(best)
}

// ---------------------------------------------------------------------------
// Blow-up rescaling
// ---------------------------------------------------------------------------

/// Reference window for the parabolic rescaling.
#[derive(Debug, Clone, Copy)]
pub struct WindowSpec {
    /// Half-width in rescaled units; the window covers `[-w, w]^2`.
    pub half_width: f64,
    /// Samples per half-axis; the window grid is `(2n+1) x (2n+1)`.
    pub n: usize,
}

/// Rescaled fields `u_m = r_m u(x_m + r_m x)`, `d_m = d(x_m + r_m x)` sampled
/// on the reference window.
#[derive(Debug, Clone)]
pub struct BlowupFrame {
    pub window: WindowSpec,
    pub center: [f64; 2],
    pub scale: f64,
    pub u: Vec<[f64; 2]>,
    pub d: Vec<[f64; 3]>,
    /// Which samples landed inside the domain.
    pub mask: Vec<bool>,
    /// Set when the frame is boundary-centered and was clipped.
    pub half_plane: bool,
}

impl BlowupFrame {
    pub fn side(&self) -> usize {
        2 * self.window.n + 1
    }

    /// Window energy `∫(|u_m|^2 + |grad d_m|^2)` by centered differences on
    /// the masked reference grid.
    pub fn energy(&self) -> f64 {
        let m = self.side();
        let h = self.window.half_width / self.window.n as f64;
        let idx = |i: usize, j: usize| i * m + j;
        let mut e = 0.0;
        for i in 1..m - 1 {
            for j in 1..m - 1 {
                let c = idx(i, j);
                if !self.mask[c] {
                    continue;
                }
                let nb = [idx(i + 1, j), idx(i - 1, j), idx(i, j + 1), idx(i, j - 1)];
                if nb.iter().any(|&q| !self.mask[q]) {
                    continue;
                }
                let mut gd2 = 0.0;
                for k in 0..3 {
                    let gx = (self.d[nb[0]][k] - self.d[nb[1]][k]) / (2.0 * h);
                    let gy = (self.d[nb[2]][k] - self.d[nb[3]][k]) / (2.0 * h);
                    gd2 += gx * gx + gy * gy;
                }
                let uu = self.u[c][0] * self.u[c][0] + self.u[c][1] * self.u[c][1];
                e += h * h * (uu + gd2);
            }
        }
        e
    }
}

/// Distance from a point to the domain boundary (analytic, by domain kind).
fn boundary_distance(spec: &DomainSpec, x: f64, y: f64) -> f64 {
    match *spec {
        DomainSpec::Disk { radius } => radius - (x * x + y * y).sqrt(),
        DomainSpec::Annulus { r1, r2 } => {
            let r = (x * x + y * y).sqrt();
            (r - r1).min(r2 - r)
        }
        DomainSpec::Ellipse { a, b } => {
            let rho = ((x / a) * (x / a) + (y / b) * (y / b)).sqrt();
            (1.0 - rho) * a.min(b)
        }
        DomainSpec::Strip { width, height, periodic_x } => {
            let dy = y.min(height - y);
            if periodic_x {
                dy
            } else {
                dy.min(x.min(width - x))
            }
        }
    }
}

/// Parabolic rescaling of a state about `(x_m, r_m)` onto a reference window.
///
/// Interior-centered frames whose window leaves the domain are an error;
/// frames centered within one window-width of the boundary clip the outside
/// samples and set the half-plane flag.
pub fn rescale(
    grid: &Grid,
    u: &VectorField,
    d: &DirectorField,
    x_m: [f64; 2],
    r_m: f64,
    window: WindowSpec,
) -> Result<BlowupFrame> {
    if r_m <= 0.0 {
        return Err(Error::InvalidArgument(format!("rescale requires r_m > 0, got {r_m}")));
    }
    u.require_ghosts("rescale velocity")?;
    d.require_ghosts("rescale director")?;
    let m = 2 * window.n + 1;
    let h = window.half_width / window.n as f64;
    let reach = window.half_width * r_m * std::f64::consts::SQRT_2;
    let near_boundary = boundary_distance(&grid.spec, x_m[0], x_m[1]) < reach;

    let mut frame = BlowupFrame {
        window,
        center: x_m,
        scale: r_m,
        u: vec![[0.0; 2]; m * m],
        d: vec![[1.0, 0.0, 0.0]; m * m],
        mask: vec![false; m * m],
        half_plane: false,
    };
    let mut clipped = false;
    for i in 0..m {
        for j in 0..m {
            let xi = (i as f64 - window.n as f64) * h;
            let yj = (j as f64 - window.n as f64) * h;
            let px = x_m[0] + r_m * xi;
            let py = x_m[1] + r_m * yj;
            match sample(grid, u, d, px, py) {
                Some((us, ds)) => {
                    let c = i * m + j;
                    frame.u[c] = [r_m * us[0], r_m * us[1]];
                    let n = (ds[0] * ds[0] + ds[1] * ds[1] + ds[2] * ds[2]).sqrt();
                    frame.d[c] = if n > 0.0 {
                        [ds[0] / n, ds[1] / n, ds[2] / n]
                    } else {
                        [1.0, 0.0, 0.0]
                    };
                    frame.mask[c] = true;
                }
                None => clipped = true,
            }
        }
    }
    if clipped {
        if near_boundary {
            frame.half_plane = true;
        } else {
            return Err(Error::InvalidArgument(
                "rescale window leaves the domain on an interior-centered frame".into(),
            ));
        }
    }
    Ok(frame)
}

/// Bilinear interpolation of the fields at a physical point.
fn sample(
    grid: &Grid,
    u: &VectorField,
    d: &DirectorField,
    x: f64,
    y: f64,
) -> Option<([f64; 2], [f64; 3])> {
    let (fi, fj) = grid.locate(x, y)?;
    let i0 = fi.floor();
    let j0 = fj.floor();
    let (si, sj) = (fi - i0, fj - j0);
    let i0 = i0 as isize;
    let j0 = j0 as isize;
    let n2 = grid.n2 as isize;
    let wrap = |j: isize| -> isize {
        if grid.ends1[0] == crate::geometry::EndKind::Periodic {
            j.rem_euclid(n2)
        } else {
            j.clamp(0, n2 - 1)
        }
    };
    let i1 = (i0 + 1).min(grid.n1 as isize - 1);
    let i0 = i0.clamp(-1, grid.n1 as isize - 1);
    let corners = [
        (grid.pidx(i0, wrap(j0)), (1.0 - si) * (1.0 - sj)),
        (grid.pidx(i1, wrap(j0)), si * (1.0 - sj)),
        (grid.pidx(i0, wrap(j0 + 1)), (1.0 - si) * sj),
        (grid.pidx(i1, wrap(j0 + 1)), si * sj),
    ];
    let mut us = [0.0; 2];
    let mut ds = [0.0; 3];
    for (p, w) in corners {
        for k in 0..2 {
            us[k] += w * u.c[k][p];
        }
        for k in 0..3 {
            ds[k] += w * d.c[k][p];
        }
    }
    Some((us, ds))
}

// ---------------------------------------------------------------------------
// Bubble energies
// ---------------------------------------------------------------------------

/// Degree-`k` stereographic harmonic map centered at `center` with scale `s`,
/// oriented so the real axis maps to the equator.
pub fn bubble_director(x: f64, y: f64, center: [f64; 2], s: f64, k: u32) -> [f64; 3] {
    let zx = (x - center[0]) / s;
    let zy = (y - center[1]) / s;
    // f = z^k
    let (mut fx, mut fy) = (1.0, 0.0);
    for _ in 0..k {
        let nx = fx * zx - fy * zy;
        let ny = fx * zy + fy * zx;
        fx = nx;
        fy = ny;
    }
    let f2 = fx * fx + fy * fy;
    let den = 1.0 + f2;
    [2.0 * fx / den, (f2 - 1.0) / den, 2.0 * fy / den]
}

/// Gradient energy density of the degree-`k` bubble at radius `r` from its
/// center (scale 1).
pub fn bubble_density(r: f64, k: u32) -> f64 {
    let kk = k as f64;
    let rk = r.powi(2 * k as i32 - 2);
    let r2k = rk * r * r;
    8.0 * kk * kk * rk / ((1.0 + r2k) * (1.0 + r2k))
}

#[derive(Debug, Clone, Copy)]
pub struct BubbleEnergy {
    /// Quadrature of the density over the truncated ball `B_R`.
    pub value: f64,
    /// Geometric extrapolation of the truncation to `R -> infinity`.
    pub extrapolated: f64,
    pub truncation: f64,
}

/// Numerically integrates the degree-`k` bubble energy over `B_R` with a
/// midpoint rule of `resolution` radial intervals; reports the value and its
/// extrapolation to the whole plane. The continuum limit is `8 pi k`.
pub fn bubble_energy(k: u32, truncation: f64, resolution: usize) -> Result<BubbleEnergy> {
    if k == 0 {
        return Err(Error::InvalidArgument("bubble degree must be >= 1".into()));
    }
    if truncation <= 0.0 || resolution < 8 {
        return Err(Error::InvalidArgument("bubble truncation/resolution invalid".into()));
    }
    let integrate = |radius: f64, n: usize| -> f64 {
        let h = radius / n as f64;
        let mut s = 0.0;
        for i in 0..n {
            let r = (i as f64 + 0.5) * h;
            s += bubble_density(r, k) * r * h;
        }
        2.0 * std::f64::consts::PI * s
    };
    let value = integrate(truncation, resolution);
    // tail ~ C / R^{2k}: Richardson on E(R), E(2R)
    let e2 = integrate(2.0 * truncation, 2 * resolution);
    let q = (2.0f64).powi(2 * k as i32);
    let extrapolated = e2 + (e2 - value) / (q - 1.0);
    Ok(BubbleEnergy { value, extrapolated, truncation })
}

/// Energy of the half-plane restriction of the equatorially symmetric `k = 1`
/// bubble over the half-ball of radius `R`; the continuum limit is `4 pi`.
pub fn half_plane_bubble_energy(truncation: f64, resolution: usize) -> Result<f64> {
    Ok(0.5 * bubble_energy(1, truncation, resolution)?.value)
}

// ---------------------------------------------------------------------------
// Reflection symmetry test
// ---------------------------------------------------------------------------

/// Outcome of the reflection test: sup over time and matched nodes of the
/// difference between the half-strip run and the restriction of the
/// reflected full-strip run, per scalar component `(u1, u2, d1, d2, d3)`.
#[derive(Debug, Clone)]
pub struct ReflectReport {
    pub max_discrepancy: f64,
    pub per_component: [f64; 5],
    pub steps: usize,
    pub dt: f64,
}

/// Runs (a) the half strip `[0,W]x[0,H]` with the free/slip wall at `y = 0`
/// and (b) the full strip `[0,W]x[-H,H]` with evenly/oddly reflected initial
/// data, and compares the upper half of (b) with (a) after every step.
pub fn reflect_test(
    width: f64,
    height: f64,
    resolution: (usize, usize),
    init: impl Fn(f64, f64) -> ([f64; 2], [f64; 3]),
    cfg: SolverConfig,
) -> Result<ReflectReport> {
    let (n1, n2) = resolution;
    let half_grid = build_grid(DomainSpec::Strip { width, height, periodic_x: true }, (n1, n2))?;
    let full_grid = build_grid(
        DomainSpec::Strip { width, height: 2.0 * height, periodic_x: true },
        (2 * n1 - 1, n2),
    )?;

    let uh = VectorField::from_fn(&half_grid, |x, y| init(x, y).0);
    let dh = DirectorField::from_fn(&half_grid, |x, y| init(x, y).1);
    // full strip: y' in [0, 2H], reflection plane at y' = H
    let uf = VectorField::from_fn(&full_grid, |x, yp| {
        let s = yp - height;
        if s >= 0.0 {
            init(x, s).0
        } else {
            let v = init(x, -s).0;
            [v[0], -v[1]]
        }
    });
    let df = DirectorField::from_fn(&full_grid, |x, yp| {
        let s = yp - height;
        if s >= 0.0 {
            init(x, s).1
        } else {
            let v = init(x, -s).1;
            [v[0], v[1], -v[2]]
        }
    });

    let mut half_state = prepare(&half_grid, uh, dh, &cfg)?;
    let mut full_state = prepare(&full_grid, uf, df, &cfg)?;
    // same fixed dt for both runs
    let dt = half_state.0.dt;
    let nsteps = (cfg.t_end / dt - 1e-9).ceil().max(1.0) as usize;

    let mut per: [f64; 5] = [0.0; 5];
    let compare = |hs: &SimState, fs: &SimState, per: &mut [f64; 5]| {
        for i in 0..n1 {
            for j in 0..n2 {
                let ph = half_grid.pidx(i as isize, j as isize);
                let pf = full_grid.pidx((n1 - 1 + i) as isize, j as isize);
                per[0] = per[0].max((hs.u.c[0][ph] - fs.u.c[0][pf]).abs());
                per[1] = per[1].max((hs.u.c[1][ph] - fs.u.c[1][pf]).abs());
                for k in 0..3 {
                    per[2 + k] = per[2 + k].max((hs.d.c[k][ph] - fs.d.c[k][pf]).abs());
                }
            }
        }
    };
    compare(&half_state.1, &full_state.1, &mut per);
    for _ in 0..nsteps {
        half_state.0.step(&mut half_state.1, None)?;
        full_state.0.step(&mut full_state.1, None)?;
        compare(&half_state.1, &full_state.1, &mut per);
    }
    let max = per.iter().fold(0.0f64, |m, v| m.max(*v));
    Ok(ReflectReport { max_discrepancy: max, per_component: per, steps: nsteps, dt })
}

type Prepared<'g> = (crate::solver::Solver<'g>, SimState);

fn prepare<'g>(
    grid: &'g Grid,
    u: VectorField,
    d: DirectorField,
    cfg: &SolverConfig,
) -> Result<Prepared<'g>> {
    let mut state = SimState {
        t: 0.0,
        step: 0,
        u,
        d,
        p: crate::fields::ScalarField::zeros(grid),
    };
    crate::fields::renormalize(grid, &mut state.d, cfg.degenerate_tol)?;
    crate::fields::apply_free_bc(grid, &mut state.d);
    let mut cfg = cfg.clone();
    // reflect comparisons need the same dt on both grids
    if let TimeStep::AutoCfl(_) = cfg.dt {
        let tmp = crate::solver::Solver::new(grid, cfg.clone(), &state.u)?;
        cfg.dt = TimeStep::Fixed(tmp.dt);
    }
    let mut solver = crate::solver::Solver::new(grid, cfg, &state.u)?;
    solver.project(&mut state.u)?;
    crate::fields::apply_neumann_bc(grid, &mut state.p);
    Ok((solver, state))
}

/// Runs a state until a concentration event fires or `t_end` is reached;
/// convenience wrapper used by the detector tests.
pub fn detect_concentration(
    grid: &Grid,
    u0: VectorField,
    d0: DirectorField,
    cfg: SolverConfig,
    scan_cfg: ScanConfig,
    every: usize,
) -> Result<RunReport> {
    run(
        grid,
        u0,
        d0,
        cfg,
        Some(crate::solver::MonitorConfig { scan: scan_cfg, every, abort_on_event: true }),
        |_| Ok(()),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::GhostState;

    #[test]
    fn bubble_energy_quantization() {
        let e1 = bubble_energy(1, 50.0, 4096).unwrap();
        let e2 = bubble_energy(2, 50.0, 4096).unwrap();
        let t1 = 8.0 * std::f64::consts::PI;
        let t2 = 16.0 * std::f64::consts::PI;
        assert!((e1.value - t1).abs() / t1 < 0.01, "k=1: {}", e1.value);
        assert!((e2.value - t2).abs() / t2 < 0.01, "k=2: {}", e2.value);
        // per-degree energy constant within 1%
        let ratio = (e1.value / 1.0) / (e2.value / 2.0);
        assert!((ratio - 1.0).abs() < 0.01);
        // extrapolation tightens the truncation error
        assert!((e1.extrapolated - t1).abs() <= (e1.value - t1).abs());
    }

    #[test]
    fn half_plane_bubble_is_half() {
        let h = half_plane_bubble_energy(50.0, 4096).unwrap();
        let t = 4.0 * std::f64::consts::PI;
        assert!((h - t).abs() / t < 0.01, "half: {h}");
    }

    #[test]
    fn bubble_director_is_unit_and_equatorial_on_axis() {
        for (x, y) in [(0.3, 0.0), (-1.2, 0.0), (5.0, 0.0), (0.1, 0.7)] {
            let d = bubble_director(x, y, [0.0, 0.0], 1.0, 1);
            let n = (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt();
            assert!((n - 1.0).abs() < 1e-14);
            if y == 0.0 {
                assert!(d[2].abs() < 1e-14, "equator on the real axis");
            }
        }
    }

    #[test]
    fn scan_zero_state_reports_nothing() {
        let g = build_grid(DomainSpec::Disk { radius: 1.0 }, (16, 32)).unwrap();
        let mut u = VectorField::zeros(&g);
        u.ghosts = GhostState::Filled;
        let mut d = DirectorField::constant(&g, [1.0, 0.0, 0.0]);
        d.ghosts = GhostState::Filled;
        let e = scan(&g, &u, &d, &ScanConfig::default()).unwrap();
        assert!(!e.fired);
        assert!(e.value < 1e-12);
    }

    #[test]
    fn scan_threshold_zero_fires_for_nonzero_data() {
        let g = build_grid(DomainSpec::Disk { radius: 1.0 }, (16, 32)).unwrap();
        let mut u = VectorField::zeros(&g);
        u.fill_with(&g, |x, y| [0.1 * y, -0.1 * x]);
        let mut d = DirectorField::constant(&g, [1.0, 0.0, 0.0]);
        d.ghosts = GhostState::Filled;
        let e = scan(&g, &u, &d, &ScanConfig { radii: vec![0.5], threshold: 0.0 }).unwrap();
        assert!(e.fired);
        let e2 = scan(&g, &u, &d, &ScanConfig { radii: vec![0.5], threshold: f64::INFINITY })
            .unwrap();
        assert!(!e2.fired);
    }

    #[test]
    fn planted_bubble_concentrates_energy() {
        let g = build_grid(DomainSpec::Disk { radius: 1.0 }, (128, 256)).unwrap();
        let s = 0.05;
        let mut u = VectorField::zeros(&g);
        u.ghosts = GhostState::Filled;
        let mut d = DirectorField::zeros(&g);
        d.fill_with(&g, |x, y| bubble_director(x, y, [0.0, 0.0], s, 1));
        let entry = scan(
            &g,
            &u,
            &d,
            &ScanConfig { radii: vec![8.0 * s], threshold: 4.0 * std::f64::consts::PI },
        )
        .unwrap();
        assert!(entry.fired, "bubble must trigger: value {}", entry.value);
        assert!(entry.value >= 0.9 * 8.0 * std::f64::consts::PI);
        // maximizer sits near the planted center
        assert!(entry.x[0].hypot(entry.x[1]) < 0.2);
    }

    #[test]
    fn rescale_constant_state_gives_constant_frame() {
        let g = build_grid(DomainSpec::Disk { radius: 1.0 }, (16, 32)).unwrap();
        let mut u = VectorField::zeros(&g);
        u.ghosts = GhostState::Filled;
        let mut d = DirectorField::constant(&g, [0.0, 1.0, 0.0]);
        d.ghosts = GhostState::Filled;
        let f = rescale(&g, &u, &d, [0.1, 0.0], 0.05, WindowSpec { half_width: 2.0, n: 8 })
            .unwrap();
        assert!(!f.half_plane);
        for (m, dv) in f.mask.iter().zip(&f.d) {
            assert!(*m);
            assert!((dv[1] - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn rescale_window_outside_interior_frame_errors() {
        let g = build_grid(DomainSpec::Disk { radius: 1.0 }, (16, 32)).unwrap();
        let mut u = VectorField::zeros(&g);
        u.ghosts = GhostState::Filled;
        let mut d = DirectorField::constant(&g, [0.0, 1.0, 0.0]);
        d.ghosts = GhostState::Filled;
        // window of physical size ~2.4 centered mid-disk exits the domain
        let r = rescale(&g, &u, &d, [0.4, 0.0], 0.3, WindowSpec { half_width: 4.0, n: 4 });
        assert!(r.is_err() || r.unwrap().half_plane);
    }

    #[test]
    fn rescale_boundary_frame_clips_with_flag() {
        let g = build_grid(DomainSpec::Disk { radius: 1.0 }, (16, 32)).unwrap();
        let mut u = VectorField::zeros(&g);
        u.ghosts = GhostState::Filled;
        let mut d = DirectorField::constant(&g, [0.0, 1.0, 0.0]);
        d.ghosts = GhostState::Filled;
        let f = rescale(&g, &u, &d, [0.99, 0.0], 0.05, WindowSpec { half_width: 2.0, n: 4 })
            .unwrap();
        assert!(f.half_plane);
        assert!(f.mask.iter().any(|m| !*m));
        assert!(f.mask.iter().any(|m| *m));
    }

    #[test]
    fn rescale_preserves_local_energy_of_bubble() {
        // scale invariance of the energy under the parabolic rescaling
        let g = build_grid(DomainSpec::Disk { radius: 1.0 }, (128, 256)).unwrap();
        let s = 0.1;
        let mut u = VectorField::zeros(&g);
        u.ghosts = GhostState::Filled;
        let mut d = DirectorField::zeros(&g);
        d.fill_with(&g, |x, y| bubble_director(x, y, [0.0, 0.0], s, 1));
        let w = WindowSpec { half_width: 4.0, n: 64 };
        let f = rescale(&g, &u, &d, [0.0, 0.0], s, w).unwrap();
        let frame_e = f.energy();
        let local = energy::local_energy(&g, &u, &d, [0.0, 0.0], 4.0 * s).unwrap();
        let rel = (frame_e - local).abs() / local;
        assert!(rel < 0.05, "frame {frame_e} vs local {local}");
    }
}
