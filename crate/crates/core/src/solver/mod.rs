//! Semi-implicit projection integrator for the coupled flow.
//!
//! One step advances, in order:
//!
//! 1. director: `d* = d + dt (lap d + |grad d|^2 d - u . grad d)` with the
//!    diffusion term implicit when configured, followed by renormalization to
//!    the sphere and the free boundary condition;
//! 2. velocity: implicit (or explicit) viscous half-update with the Gram
//!    operator `2 D^T W D`, then the explicit skew advection and elastic
//!    force, both taken at the old time level;
//! 3. pressure projection: `div grad phi = div(u*)/dt` with the Neumann fill,
//!    `u <- u* - dt grad phi`, pressure gauge-fixed to zero mean;
//! 4. energy ledger row.
//!
//! The elastic force is the pointwise pairing `-(grad d)^T (lap d +
//! |grad d|^2 d)` with the same discrete gradient used in the director
//! transport, so the kinetic/elastic exchange cancels exactly in the ledger;
//! advection is skew-symmetrized against its exact weighted adjoint, so
//! `<u . grad u, u> = 0` to roundoff. The projection uses the same divergence
//! operator as the diagnostics, which drives the discrete divergence to the
//! solver tolerance.
//!
//! Steps are strictly sequential; all reductions are fixed-order, so runs are
//! bit-identical across thread counts.

pub mod ops;

use crate::energy::{self, EnergyLedger};
use crate::error::{Error, Result};
use crate::fields::{
    apply_free_bc, apply_navier_bc, apply_neumann_bc, renormalize, DirectorField, PressureField,
    ScalarField, VectorField,
};
use crate::geometry::Grid;
use crate::linalg::{bicgstab, cg, Csr, LinearOp, SolveStats};
use crate::operators;
use crate::singularity::{scan, ConcentrationEvent, ScanConfig};
use ops::{pack_scalar, pack_vector, unpack_scalar, unpack_vector, SkewScratch, SolverOps};

pub const DEFAULT_PROJECTION_TOL: f64 = 1e-10;
pub const DEFAULT_MAX_ITERS: usize = 50_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DiffusionTreatment {
    Explicit,
    Implicit,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TimeStep {
    Fixed(f64),
    /// dt from a CFL fraction of the stability bounds (computed once from the
    /// initial data; no adaptive stepping).
    AutoCfl(f64),
}

#[derive(Debug, Clone)]
pub struct SolverConfig {
    pub dt: TimeStep,
    pub t_end: f64,
    pub diffusion: DiffusionTreatment,
    pub projection_tol: f64,
    pub max_iters: usize,
    /// Ledger/dump cadence in steps (0 disables periodic output callbacks).
    pub output_every: usize,
    pub degenerate_tol: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            dt: TimeStep::AutoCfl(0.25),
            t_end: 1.0,
            diffusion: DiffusionTreatment::Implicit,
            projection_tol: DEFAULT_PROJECTION_TOL,
            max_iters: DEFAULT_MAX_ITERS,
            output_every: 0,
            degenerate_tol: crate::fields::DEGENERATE_TOL,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if let TimeStep::Fixed(dt) = self.dt {
            if dt <= 0.0 {
                return Err(Error::InvalidArgument(format!("dt = {dt} must be positive")));
            }
        }
        if let TimeStep::AutoCfl(c) = self.dt {
            if c <= 0.0 || c > 0.5 {
                return Err(Error::InvalidArgument(format!("cfl = {c} must lie in (0, 0.5]")));
            }
        }
        if self.t_end < 0.0 || self.projection_tol <= 0.0 {
            return Err(Error::InvalidArgument("t_end >= 0 and tolerances > 0 required".into()));
        }
        Ok(())
    }
}

/// Simulation state: time, step index and the field triple.
#[derive(Debug, Clone)]
pub struct SimState {
    pub t: f64,
    pub step: usize,
    pub u: VectorField,
    pub d: DirectorField,
    pub p: PressureField,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct StepStats {
    pub pressure_iters: usize,
    pub viscous_iters: usize,
    pub director_iters: usize,
}

struct ViscousSystem<'a> {
    ops: &'a SolverOps,
    dt: f64,
}

impl LinearOp for ViscousSystem<'_> {
    fn apply(&self, x: &[f64], y: &mut [f64]) {
        let mut scratch = Vec::new();
        self.ops.visc_apply(x, &mut scratch, y);
        for (yi, xi) in y.iter_mut().zip(x) {
            *yi = xi + self.dt * *yi;
        }
    }
    fn dim(&self) -> usize {
        2 * self.ops.n
    }
}

struct PressureSystem<'a> {
    ops: &'a SolverOps,
}

impl LinearOp for PressureSystem<'_> {
    fn apply(&self, x: &[f64], y: &mut [f64]) {
        let mut g = vec![0.0; 2 * self.ops.n];
        self.ops.grad_n.mul(x, &mut g);
        self.ops.div_v.mul(&g, y);
        let m = self.ops.wmean(y);
        for v in y.iter_mut() {
            *v -= m;
        }
    }
    fn dim(&self) -> usize {
        self.ops.n
    }
}

/// The time integrator; owns the assembled operators and warm-start caches.
pub struct Solver<'g> {
    pub grid: &'g Grid,
    pub ops: SolverOps,
    pub cfg: SolverConfig,
    pub dt: f64,
    dir_even: Csr,
    dir_z: Csr,
    dir_even_diag: Vec<f64>,
    dir_z_diag: Vec<f64>,
    phi: Vec<f64>,
    uv_warm: Vec<f64>,
    skew: SkewScratch,
    scratch: Vec<f64>,
}

impl<'g> Solver<'g> {
    pub fn new(grid: &'g Grid, cfg: SolverConfig, u0: &VectorField) -> Result<Self> {
        cfg.validate()?;
        let ops = SolverOps::new(grid);
        let dt = resolve_dt(grid, &cfg, u0);
        let n = ops.n;
        // implicit director systems I - dt * lap
        let build_system = |lap: &Csr| -> Csr {
            let mut m = lap.clone();
            for v in m.values.iter_mut() {
                *v = -dt * *v;
            }
            // add identity
            let mut b = crate::linalg::CsrBuilder::new(n, n);
            for r in 0..n {
                b.push(r, r, 1.0);
                for e in m.row_ptr[r]..m.row_ptr[r + 1] {
                    b.push(r, m.col_idx[e], m.values[e]);
                }
            }
            b.build()
        };
        let dir_even = build_system(&ops.lap_even);
        let dir_z = build_system(&ops.lap_dir);
        let dir_even_diag = dir_even.diagonal();
        let dir_z_diag = dir_z.diagonal();
        Ok(Self {
            grid,
            ops,
            cfg,
            dt,
            dir_even,
            dir_z,
            dir_even_diag,
            dir_z_diag,
            phi: vec![0.0; n],
            uv_warm: Vec::new(),
            skew: SkewScratch::default(),
            scratch: Vec::new(),
        })
    }

    /// Removes the discrete divergence from `u` (used on initial data).
    pub fn project(&mut self, u: &mut VectorField) -> Result<SolveStats> {
        apply_navier_bc(self.grid, u);
        let mut up = pack_vector(self.grid, u);
        let mut rhs = vec![0.0; self.ops.n];
        self.ops.div_v.mul(&up, &mut rhs);
        let m = self.ops.wmean(&rhs);
        for v in rhs.iter_mut() {
            *v -= m;
        }
        let sys = PressureSystem { ops: &self.ops };
        let mut phi = vec![0.0; self.ops.n];
        let stats = bicgstab(
            &sys,
            &self.ops.w,
            &self.ops.press_diag,
            &rhs,
            &mut phi,
            self.cfg.projection_tol,
            self.cfg.max_iters,
            "projection",
        )?;
        let mut gp = vec![0.0; 2 * self.ops.n];
        self.ops.grad_n.mul(&phi, &mut gp);
        for (ui, gi) in up.iter_mut().zip(&gp) {
            *ui -= gi;
        }
        unpack_vector(self.grid, &up, u);
        apply_navier_bc(self.grid, u);
        Ok(stats)
    }

    /// Solves the Neumann Poisson problem `lap phi = rhs` with the projection
    /// operator; the rhs weighted mean is removed first (compatibility) and
    /// the result is gauge-fixed to zero mean. Returns the removed mean as the
    /// compatibility defect.
    pub fn pressure_poisson(&mut self, rhs: &ScalarField) -> Result<(PressureField, SolveStats, f64)> {
        let mut b = pack_scalar(self.grid, rhs);
        let m = self.ops.wmean(&b);
        for v in b.iter_mut() {
            *v -= m;
        }
        let sys = PressureSystem { ops: &self.ops };
        let mut phi = vec![0.0; self.ops.n];
        let stats = bicgstab(
            &sys,
            &self.ops.w,
            &self.ops.press_diag,
            &b,
            &mut phi,
            self.cfg.projection_tol,
            self.cfg.max_iters,
            "pressure poisson",
        )?;
        let mut p = ScalarField::zeros(self.grid);
        unpack_scalar(self.grid, &phi, &mut p);
        p.gauge_fix(self.grid);
        apply_neumann_bc(self.grid, &mut p);
        Ok((p, stats, m))
    }

    /// Advances the state by one time step.
    pub fn step(&mut self, state: &mut SimState, ledger: Option<&mut EnergyLedger>) -> Result<StepStats> {
        let grid = self.grid;
        let dt = self.dt;
        let n = self.ops.n;
        let mut stats = StepStats::default();

        state.u.require_ghosts("step velocity")?;
        state.d.require_ghosts("step director")?;

        // --- old-level quantities shared by the ledger and the force
        let tension = operators::tension(grid, &state.d)?;
        let gn2 = operators::grad_norm2_director(grid, &state.d)?;
        let advected = operators::advect_director(grid, &state.u, &state.d)?;
        let u_old = pack_vector(grid, &state.u);

        // elastic force -(grad d)^T T, packed
        let mut force = vec![0.0; 2 * n];
        for i in 0..grid.n1 {
            for j in 0..grid.n2 {
                let p = grid.pidx(i as isize, j as isize);
                let o = grid.oidx(i, j);
                let mut fx = 0.0;
                let mut fy = 0.0;
                for k in 0..3 {
                    let g = operators::grad_at(grid, &state.d.c[k], p);
                    fx -= tension.c[k][p] * g[0];
                    fy -= tension.c[k][p] * g[1];
                }
                force[o] = fx;
                force[n + o] = fy;
            }
        }

        // ledger uses the old level (left endpoint in time)
        let dissipation = if ledger.is_some() {
            let visc = self.ops.viscous_dissipation(&u_old, &mut self.scratch);
            let mut dir = 0.0;
            for i in 0..grid.n1 as isize {
                for j in 0..grid.n2 as isize {
                    let p = grid.pidx(i, j);
                    dir += 2.0 * grid.weight[p]
                        * (tension.c[0][p] * tension.c[0][p]
                            + tension.c[1][p] * tension.c[1][p]
                            + tension.c[2][p] * tension.c[2][p]);
                }
            }
            Some((visc, dir))
        } else {
            None
        };

        // --- director update
        match self.cfg.diffusion {
            DiffusionTreatment::Explicit => {
                for k in 0..3 {
                    for i in 0..grid.n1 as isize {
                        for j in 0..grid.n2 as isize {
                            let p = grid.pidx(i, j);
                            state.d.c[k][p] += dt * (tension.c[k][p] - advected.c[k][p]);
                        }
                    }
                }
            }
            DiffusionTreatment::Implicit => {
                for k in 0..3 {
                    let mut rhs = vec![0.0; n];
                    for i in 0..grid.n1 {
                        for j in 0..grid.n2 {
                            let p = grid.pidx(i as isize, j as isize);
                            let o = grid.oidx(i, j);
                            rhs[o] = state.d.c[k][p]
                                + dt * (gn2.a[p] * state.d.c[k][p] - advected.c[k][p]);
                        }
                    }
                    let (sys, diag) = if k < 2 {
                        (&self.dir_even, &self.dir_even_diag)
                    } else {
                        // Dirichlet rows are identity; force the constraint
                        for bn in &grid.boundary {
                            let (bi, bj) = (bn.i, bn.j);
                            rhs[grid.oidx(bi, bj)] = 0.0;
                        }
                        (&self.dir_z, &self.dir_z_diag)
                    };
                    let mut x = rhs.clone();
                    let st = bicgstab(
                        sys,
                        &self.ops.w,
                        diag,
                        &rhs,
                        &mut x,
                        self.cfg.projection_tol,
                        self.cfg.max_iters,
                        "director diffusion",
                    )?;
                    stats.director_iters += st.iterations;
                    unpack_scalar_into_component(grid, &x, &mut state.d, k);
                }
            }
        }
        renormalize(grid, &mut state.d, self.cfg.degenerate_tol)?;
        apply_free_bc(grid, &mut state.d);

        // --- velocity update
        let mut uv = u_old.clone();
        match self.cfg.diffusion {
            DiffusionTreatment::Explicit => {
                let mut lap = vec![0.0; 2 * n];
                self.ops.visc_apply(&u_old, &mut self.scratch, &mut lap);
                for (v, l) in uv.iter_mut().zip(&lap) {
                    *v -= dt * l;
                }
            }
            DiffusionTreatment::Implicit => {
                let sys = ViscousSystem { ops: &self.ops, dt };
                let mut diag = vec![0.0; 2 * n];
                for (i, d) in diag.iter_mut().enumerate() {
                    *d = 1.0 + dt * self.ops.visc_diag[i];
                }
                if self.uv_warm.len() != 2 * n {
                    self.uv_warm = u_old.clone();
                }
                let mut x = self.uv_warm.clone();
                let st = cg(
                    &sys,
                    &self.ops.w2,
                    &diag,
                    &u_old,
                    &mut x,
                    self.cfg.projection_tol,
                    self.cfg.max_iters,
                    "viscous diffusion",
                )?;
                stats.viscous_iters = st.iterations;
                self.uv_warm.copy_from_slice(&x);
                uv = x;
            }
        }

        let adv = self.ops.skew_advect(&u_old, &u_old, &mut self.skew);
        let mut ustar = uv;
        for i in 0..2 * n {
            ustar[i] += dt * (force[i] - adv[i]);
        }

        // --- projection
        let mut rhs = vec![0.0; n];
        self.ops.div_v.mul(&ustar, &mut rhs);
        let m = self.ops.wmean(&rhs);
        for v in rhs.iter_mut() {
            *v = (*v - m) / dt;
        }
        let sys = PressureSystem { ops: &self.ops };
        let st = bicgstab(
            &sys,
            &self.ops.w,
            &self.ops.press_diag,
            &rhs,
            &mut self.phi,
            self.cfg.projection_tol,
            self.cfg.max_iters,
            "projection",
        )?;
        stats.pressure_iters = st.iterations;
        let mut gp = vec![0.0; 2 * n];
        self.ops.grad_n.mul(&self.phi, &mut gp);
        for i in 0..2 * n {
            ustar[i] -= dt * gp[i];
        }
        unpack_vector(grid, &ustar, &mut state.u);
        apply_navier_bc(grid, &mut state.u);
        unpack_scalar(grid, &self.phi, &mut state.p);
        state.p.gauge_fix(grid);
        apply_neumann_bc(grid, &mut state.p);

        state.t += dt;
        state.step += 1;

        if let Some(ledger) = ledger {
            let (visc, dir) = dissipation.unwrap();
            let dens = energy::energy_density(grid, &state.u, &state.d)?;
            let mut e = 0.0;
            for i in 0..grid.n1 as isize {
                for j in 0..grid.n2 as isize {
                    let p = grid.pidx(i, j);
                    e += grid.weight[p] * dens.a[p];
                }
            }
            if !e.is_finite() {
                return Err(Error::NumericalAbort {
                    step: state.step,
                    t: state.t,
                    msg: "energy is not finite".into(),
                });
            }
            let last = ledger.rows.last().map(|r| (r.visc_cum, r.dir_cum)).unwrap_or((0.0, 0.0));
            ledger.push(state.t, e, last.0 + dt * visc, last.1 + dt * dir);
        }

        Ok(stats)
    }
}

fn unpack_scalar_into_component(grid: &Grid, v: &[f64], d: &mut DirectorField, k: usize) {
    for i in 0..grid.n1 {
        for j in 0..grid.n2 {
            d.c[k][grid.pidx(i as isize, j as isize)] = v[grid.oidx(i, j)];
        }
    }
    d.ghosts = crate::fields::GhostState::Invalid;
}

/// Stability-bound time step from the initial data.
fn resolve_dt(grid: &Grid, cfg: &SolverConfig, u0: &VectorField) -> f64 {
    match cfg.dt {
        TimeStep::Fixed(dt) => dt,
        TimeStep::AutoCfl(c) => {
            let mut umax: f64 = 0.0;
            let mut hmin = f64::INFINITY;
            for i in 0..grid.n1 as isize {
                for j in 0..grid.n2 as isize {
                    let p = grid.pidx(i, j);
                    umax = umax.max(u0.c[0][p].hypot(u0.c[1][p]));
                    let l1 = grid.h1 * grid.jac[0][p].hypot(grid.jac[1][p]);
                    let l2 = grid.h2 * grid.jac[2][p].hypot(grid.jac[3][p]);
                    hmin = hmin.min(l1.min(l2));
                }
            }
            let mut dt = f64::INFINITY;
            if umax > 0.0 {
                dt = dt.min(hmin / umax).min(2.0 / (umax * umax));
            }
            if cfg.diffusion == DiffusionTreatment::Explicit {
                dt = dt.min(0.25 * hmin * hmin);
            }
            if !dt.is_finite() {
                dt = 1.0;
            }
            (c * dt).min(cfg.t_end.max(f64::MIN_POSITIVE))
        }
    }
}

/// Concentration monitoring attached to a run.
#[derive(Debug, Clone)]
pub struct MonitorConfig {
    pub scan: ScanConfig,
    /// Scan cadence in steps.
    pub every: usize,
    pub abort_on_event: bool,
}

/// Outcome of [`run`].
#[derive(Debug)]
pub struct RunReport {
    pub ledger: EnergyLedger,
    pub events: Vec<ConcentrationEvent>,
    pub final_state: SimState,
    pub dt: f64,
    pub steps: usize,
    pub aborted_by_monitor: bool,
    pub smallness_final: f64,
    pub pressure_iters: usize,
    pub viscous_iters: usize,
    pub director_iters: usize,
}

/// Integrates the system from `(u0, d0)` to `cfg.t_end` (or a monitor abort),
/// calling `on_output` at the configured cadence.
pub fn run(
    grid: &Grid,
    u0: VectorField,
    d0: DirectorField,
    cfg: SolverConfig,
    monitor: Option<MonitorConfig>,
    mut on_output: impl FnMut(&SimState) -> Result<()>,
) -> Result<RunReport> {
    let mut state = SimState {
        t: 0.0,
        step: 0,
        u: u0,
        d: d0,
        p: ScalarField::zeros(grid),
    };
    renormalize(grid, &mut state.d, cfg.degenerate_tol)?;
    apply_free_bc(grid, &mut state.d);
    let mut solver = Solver::new(grid, cfg, &state.u)?;
    solver.project(&mut state.u)?;
    apply_neumann_bc(grid, &mut state.p);

    let mut ledger = EnergyLedger::default();
    let (e, _, _) = energy::global_energy(grid, &state.u, &state.d)?;
    ledger.push(0.0, e, 0.0, 0.0);

    let dt = solver.dt;
    let nsteps = if dt > 0.0 { (solver.cfg.t_end / dt - 1e-9).ceil().max(0.0) as usize } else { 0 };
    let mut events: Vec<ConcentrationEvent> = Vec::new();
    let mut aborted = false;
    let mut totals = (0usize, 0usize, 0usize);

    // initial scan so planted concentrations are detected immediately
    if let Some(m) = &monitor {
        let entry = scan(grid, &state.u, &state.d, &m.scan)?;
        if entry.fired {
            events.push(ConcentrationEvent {
                t: state.t,
                x: entry.x,
                r: entry.r,
                value: entry.value,
            });
            if m.abort_on_event {
                aborted = true;
            }
        }
    }

    let mut step_idx = 0usize;
    while step_idx < nsteps && !aborted {
        let st = solver.step(&mut state, Some(&mut ledger))?;
        totals.0 += st.pressure_iters;
        totals.1 += st.viscous_iters;
        totals.2 += st.director_iters;
        step_idx += 1;

        if let Some(m) = &monitor {
            if m.every > 0 && step_idx % m.every == 0 {
                let entry = scan(grid, &state.u, &state.d, &m.scan)?;
                if entry.fired {
                    events.push(ConcentrationEvent {
                        t: state.t,
                        x: entry.x,
                        r: entry.r,
                        value: entry.value,
                    });
                    if m.abort_on_event {
                        aborted = true;
                    }
                }
            }
        }
        if solver.cfg.output_every > 0 && step_idx % solver.cfg.output_every == 0 {
            on_output(&state)?;
        }
    }

    let smallness = energy::smallness_monitor(grid, &state.u, &state.d)?;
    Ok(RunReport {
        ledger,
        events,
        final_state: state,
        dt,
        steps: step_idx,
        aborted_by_monitor: aborted,
        smallness_final: smallness,
        pressure_iters: totals.0,
        viscous_iters: totals.1,
        director_iters: totals.2,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::max_boundary_normal_flux;
    use crate::geometry::{build_grid, DomainSpec};

    fn disk(n: usize) -> Grid {
        build_grid(DomainSpec::Disk { radius: 1.0 }, (n, 2 * n)).unwrap()
    }

    #[test]
    fn zero_data_is_a_fixed_point() {
        let g = disk(12);
        let u = VectorField::zeros(&g);
        let d = DirectorField::constant(&g, [1.0, 0.0, 0.0]);
        let cfg = SolverConfig {
            dt: TimeStep::Fixed(1e-2),
            t_end: 5e-2,
            ..Default::default()
        };
        let rep = run(&g, u, d, cfg, None, |_| Ok(())).unwrap();
        assert!(rep.final_state.u.max_abs(&g) < 1e-12);
        for r in &rep.ledger.rows {
            assert!(r.e.abs() < 1e-12);
        }
    }

    #[test]
    fn vortex_with_constant_director_is_steady_on_disk() {
        let g = build_grid(DomainSpec::Disk { radius: 1.0 }, (32, 64)).unwrap();
        let u = VectorField::from_fn(&g, |x, y| [y, -x]);
        let d = DirectorField::constant(&g, [1.0, 0.0, 0.0]);
        let cfg = SolverConfig {
            dt: TimeStep::Fixed(2e-3),
            t_end: 2e-2,
            ..Default::default()
        };
        let rep = run(&g, u, d, cfg, None, |_| Ok(())).unwrap();
        let uf = &rep.final_state.u;
        let mut drift: f64 = 0.0;
        for i in 0..g.n1 as isize {
            for j in 0..g.n2 as isize {
                let p = g.pidx(i, j);
                drift = drift.max((uf.c[0][p] - g.y[p]).abs());
                drift = drift.max((uf.c[1][p] + g.x[p]).abs());
            }
        }
        assert!(drift < 1e-9, "vortex drift {drift}");
        // deformation stays at roundoff
        let def = operators::deformation(&g, uf).unwrap();
        let mut dmax: f64 = 0.0;
        for i in 0..g.n1 as isize {
            for j in 0..g.n2 as isize {
                let p = g.pidx(i, j);
                dmax = dmax.max(def.xx[p].abs()).max(def.xy[p].abs()).max(def.yy[p].abs());
            }
        }
        assert!(dmax < 1e-12, "deformation {dmax}");
    }

    #[test]
    fn divergence_is_small_after_projection() {
        let g = disk(16);
        let u = VectorField::from_fn(&g, |x, y| [x * x + y, x - y * y]);
        let d = DirectorField::constant(&g, [1.0, 0.0, 0.0]);
        let cfg = SolverConfig {
            dt: TimeStep::Fixed(1e-3),
            t_end: 3e-3,
            ..Default::default()
        };
        let rep = run(&g, u, d, cfg, None, |_| Ok(())).unwrap();
        let upk = pack_vector(&g, &rep.final_state.u);
        let solver_ops = SolverOps::new(&g);
        let mut div = vec![0.0; solver_ops.n];
        solver_ops.div_v.mul(&upk, &mut div);
        let dmax = div.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        assert!(dmax < crate::fields::DIV_TOL, "divergence {dmax}");
        assert!(max_boundary_normal_flux(&g, &rep.final_state.u) < 1e-13);
    }

    #[test]
    fn energy_decays_monotonically() {
        let g = disk(16);
        let u = VectorField::from_fn(&g, |x, y| {
            let s = 1.0 - x * x - y * y;
            [0.5 * s * y, -0.5 * s * x]
        });
        let d = DirectorField::from_fn(&g, |x, y| {
            let t = 0.4 * x + 0.2 * y * y;
            [t.cos(), t.sin(), 0.0]
        });
        let cfg = SolverConfig {
            dt: TimeStep::Fixed(1e-3),
            t_end: 2e-2,
            ..Default::default()
        };
        let rep = run(&g, u, d, cfg, None, |_| Ok(())).unwrap();
        let e0 = rep.ledger.e0();
        for w in rep.ledger.rows.windows(2) {
            assert!(w[1].e <= w[0].e + 1e-9 * e0, "energy must not grow");
        }
        assert!(rep.ledger.rows.last().unwrap().e < e0);
    }

    #[test]
    fn pressure_poisson_solves_separable_problem() {
        let g = build_grid(
            DomainSpec::Strip { width: 1.0, height: 1.0, periodic_x: true },
            (32, 32),
        )
        .unwrap();
        let l = 1.0;
        let k = 2.0 * std::f64::consts::PI / l;
        let rhs = ScalarField::from_fn(&g, |x, _| (k * x).cos());
        let u0 = VectorField::zeros(&g);
        let mut solver =
            Solver::new(&g, SolverConfig { dt: TimeStep::Fixed(1e-3), ..Default::default() }, &u0)
                .unwrap();
        let (p, _, defect) = solver.pressure_poisson(&rhs).unwrap();
        assert!(defect.abs() < 1e-12);
        let mut err: f64 = 0.0;
        for i in 0..g.n1 as isize {
            for j in 0..g.n2 as isize {
                let q = g.pidx(i, j);
                let exact = -(k * g.x[q]).cos() / (k * k);
                err = err.max((p.a[q] - exact).abs());
            }
        }
        assert!(err < 5e-3, "pressure error {err}");
    }

    #[test]
    fn pressure_poisson_zero_rhs() {
        let g = disk(8);
        let rhs = ScalarField::zeros(&g);
        let u0 = VectorField::zeros(&g);
        let mut solver =
            Solver::new(&g, SolverConfig { dt: TimeStep::Fixed(1e-3), ..Default::default() }, &u0)
                .unwrap();
        let (p, _, _) = solver.pressure_poisson(&rhs).unwrap();
        assert!(p.max_abs(&g) < 1e-12);
    }

    #[test]
    fn pressure_poisson_reports_incompatible_rhs() {
        let g = disk(8);
        let rhs = ScalarField::from_fn(&g, |_, _| 3.0);
        let u0 = VectorField::zeros(&g);
        let mut solver =
            Solver::new(&g, SolverConfig { dt: TimeStep::Fixed(1e-3), ..Default::default() }, &u0)
                .unwrap();
        let (p, _, defect) = solver.pressure_poisson(&rhs).unwrap();
        assert!((defect - 3.0).abs() < 1e-12);
        assert!(p.max_abs(&g) < 1e-10);
    }

    #[test]
    fn skew_advection_is_energy_neutral() {
        let g = disk(16);
        let mut u = VectorField::from_fn(&g, |x, y| [y + 0.3 * x * x, -x + 0.1 * y]);
        apply_navier_bc(&g, &mut u);
        let ops = SolverOps::new(&g);
        let up = pack_vector(&g, &u);
        let mut sk = SkewScratch::default();
        let adv = ops.skew_advect(&up, &up, &mut sk);
        let e = crate::linalg::wdot(&ops.w2, &adv, &up);
        let scale = crate::linalg::wdot(&ops.w2, &up, &up);
        assert!(e.abs() < 1e-12 * scale.max(1.0), "skew defect {e}");
    }
}
