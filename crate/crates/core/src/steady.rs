//! Exact steady states on axisymmetric domains, the radial harmonic-map ODE,
//! stationarity diagnostics, and relaxation with classification of the limit.
//!
//! On the disk the steady pair is a rigid vortex `u = c(x2, -x1)` with a
//! constant unit director; on the annulus the director winds as a logarithmic
//! spiral,
//!
//! ```text
//! d1 = K1 cos(a ln(r/r1)),  d2 = K2 cos(a ln(r/r1)),  d3 = K3 sin(a ln(r/r1)),
//! a ln(r2/r1) = k pi,  |K3| = 1,  K1^2 + K2^2 = 1,
//! ```
//!
//! which satisfies the free boundary condition on both circles. The
//! compatible pressure balances the centripetal acceleration and the radial
//! elastic stress; it is obtained by integrating the one-dimensional radial
//! balance numerically.

use crate::error::{Error, Result};
use crate::fields::{
    apply_free_bc, apply_navier_bc, apply_neumann_bc, DirectorField, PressureField, ScalarField,
    VectorField,
};
use crate::geometry::{DomainSpec, Grid};
use crate::operators;
use crate::solver::{SimState, Solver, SolverConfig};

/// Steady-state families.
#[derive(Debug, Clone, Copy)]
pub enum SteadyStateSpec {
    /// Rigid vortex with constant director on a disk.
    DiskVortexConstantD { c: f64, k: [f64; 3] },
    /// Rigid vortex with the logarithmic-spiral director on an annulus;
    /// `winding` is the integer number of half-turns across the gap.
    AnnulusVortexSpiral { c: f64, k1: f64, k2: f64, k3: f64, winding: i32 },
}

/// Whether a steady spec is compatible with the equatorial boundary
/// condition enforced by the discretization.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Admissibility {
    Strict,
    /// The constant director has a vertical component; the classification
    /// result lists it, but the equatorial condition `d3 = 0` on the wall
    /// forces `K3 = 0`, so such a state is not steady for this discretization.
    EquatorialConflict,
}

impl SteadyStateSpec {
    pub fn validate(&self) -> Result<Admissibility> {
        match *self {
            SteadyStateSpec::DiskVortexConstantD { k, .. } => {
                let n = k[0] * k[0] + k[1] * k[1] + k[2] * k[2];
                if (n - 1.0).abs() > 1e-10 {
                    return Err(Error::InvalidArgument(format!(
                        "constant director must be unit, |K|^2 = {n}"
                    )));
                }
                if k[2].abs() > 1e-14 {
                    Ok(Admissibility::EquatorialConflict)
                } else {
                    Ok(Admissibility::Strict)
                }
            }
            SteadyStateSpec::AnnulusVortexSpiral { k1, k2, k3, .. } => {
                if (k3.abs() - 1.0).abs() > 1e-10 {
                    return Err(Error::InvalidArgument(format!("|K3| must be 1, got {k3}")));
                }
                if (k1 * k1 + k2 * k2 - 1.0).abs() > 1e-10 {
                    return Err(Error::InvalidArgument(format!(
                        "K1^2 + K2^2 must be 1, got {}",
                        k1 * k1 + k2 * k2
                    )));
                }
                Ok(Admissibility::Strict)
            }
        }
    }

    /// Spiral frequency `a = k pi / ln(r2/r1)` on the target annulus.
    pub fn alpha(&self, grid: &Grid) -> f64 {
        match (*self, grid.spec) {
            (
                SteadyStateSpec::AnnulusVortexSpiral { winding, .. },
                DomainSpec::Annulus { r1, r2 },
            ) => winding as f64 * std::f64::consts::PI / (r2 / r1).ln(),
            _ => 0.0,
        }
    }
}

/// Evaluates the steady state on the grid, with the compatible mean-zero
/// pressure; boundary conditions are applied to the returned fields.
pub fn make_state(
    spec: &SteadyStateSpec,
    grid: &Grid,
) -> Result<(VectorField, DirectorField, PressureField)> {
    spec.validate()?;
    match (*spec, grid.spec) {
        (SteadyStateSpec::DiskVortexConstantD { c, k }, DomainSpec::Disk { .. }) => {
            let mut u = VectorField::from_fn(grid, |x, y| [c * y, -c * x]);
            let mut d = DirectorField::constant(grid, k);
            // radial balance: dP/dr = c^2 r (constant director carries no
            // elastic stress)
            let mut p = radial_pressure(grid, |r| c * c * r);
            apply_navier_bc(grid, &mut u);
            apply_free_bc(grid, &mut d);
            apply_neumann_bc(grid, &mut p);
            Ok((u, d, p))
        }
        (
            SteadyStateSpec::AnnulusVortexSpiral { c, k1, k2, k3, .. },
            DomainSpec::Annulus { r1, .. },
        ) => {
            let alpha = spec.alpha(grid);
            let prof = move |r: f64| {
                let s = alpha * (r / r1).ln();
                (s.cos(), s.sin())
            };
            let mut u = VectorField::from_fn(grid, |x, y| [c * y, -c * x]);
            let mut d = DirectorField::from_fn(grid, move |x, y| {
                let r = (x * x + y * y).sqrt();
                let (co, si) = prof(r);
                [k1 * co, k2 * co, k3 * si]
            });
            // radial balance; the elastic radial stress of the unit spiral
            // vanishes identically but is kept in the quadrature
            let mut p = radial_pressure(grid, move |r| {
                let (co, si) = prof(r);
                let a_r = alpha / r;
                // d_k' and (lap d)_k for the radial profiles
                let dp = [-k1 * a_r * si, -k2 * a_r * si, k3 * a_r * co];
                let lap = [
                    -(alpha * alpha) / (r * r) * k1 * co,
                    -(alpha * alpha) / (r * r) * k2 * co,
                    -(alpha * alpha) / (r * r) * k3 * si,
                ];
                let elastic: f64 = (0..3).map(|i| lap[i] * dp[i]).sum();
                c * c * r - elastic
            });
            apply_navier_bc(grid, &mut u);
            apply_free_bc(grid, &mut d);
            apply_neumann_bc(grid, &mut p);
            Ok((u, d, p))
        }
        _ => Err(Error::InvalidDomain(format!(
            "steady state {spec:?} does not match domain {:?}",
            grid.spec
        ))),
    }
}

/// Integrates `dP/dr = f(r)` over the radial nodes (trapezoid) and expands it
/// to the grid with the mean-zero gauge.
fn radial_pressure(grid: &Grid, f: impl Fn(f64) -> f64) -> PressureField {
    let n1 = grid.n1;
    let mut pr = vec![0.0; n1];
    for i in 1..n1 {
        let ra = grid.xi1(i as isize - 1);
        let rb = grid.xi1(i as isize);
        pr[i] = pr[i - 1] + 0.5 * (f(ra) + f(rb)) * (rb - ra);
    }
    let mut p = ScalarField::zeros(grid);
    for i in 0..n1 {
        for j in 0..grid.n2 {
            p.a[grid.pidx(i as isize, j as isize)] = pr[i];
        }
    }
    p.gauge_fix(grid);
    p
}

/// Max-norm residuals of the three steady equations.
#[derive(Debug, Clone, Copy)]
pub struct Residuals {
    pub res_u: f64,
    pub res_d: f64,
    pub res_div: f64,
}

/// Evaluates the steady system with the discrete operators:
/// momentum `u.grad u - lap u + grad P - F(d)`, director
/// `lap d + |grad d|^2 d - u.grad d`, and `div u`; max-norms over owned nodes.
pub fn stationarity_residual(
    grid: &Grid,
    u: &VectorField,
    d: &DirectorField,
    p: &PressureField,
) -> Result<Residuals> {
    u.require_ghosts("stationarity velocity")?;
    d.require_ghosts("stationarity director")?;
    p.require_ghosts("stationarity pressure")?;

    let ten = operators::tension(grid, d)?;
    let adv_d = operators::advect_director(grid, u, d)?;
    let mut res_d: f64 = 0.0;
    for k in 0..3 {
        for i in 0..grid.n1 as isize {
            for j in 0..grid.n2 as isize {
                let q = grid.pidx(i, j);
                res_d = res_d.max((ten.c[k][q] - adv_d.c[k][q]).abs());
            }
        }
    }

    let div = operators::divergence(grid, u)?;
    let res_div = div.max_abs(grid);

    let force = operators::ericksen_force(grid, d)?;
    let mut res_u: f64 = 0.0;
    for i in 0..grid.n1 as isize {
        for j in 0..grid.n2 as isize {
            let q = grid.pidx(i, j);
            let gp = operators::grad_at(grid, &p.a, q);
            for comp in 0..2 {
                let adv = u.c[0][q] * operators::grad_at(grid, &u.c[comp], q)[0]
                    + u.c[1][q] * operators::grad_at(grid, &u.c[comp], q)[1];
                let lap = operators::lap_at(grid, &u.c[comp], q);
                let r = adv - lap + gp[comp] - force.c[comp][q];
                res_u = res_u.max(r.abs());
            }
        }
    }
    Ok(Residuals { res_u, res_d, res_div })
}

// ---------------------------------------------------------------------------
// Radial harmonic-map ODE
// ---------------------------------------------------------------------------

/// Profiles of `w'' + w'/r + (a^2/r^2) w = 0` on `[r1, r2]`, integrated with
/// RK4 next to the closed forms `cos(a ln(r/r1))`, `sin(a ln(r/r1))`.
#[derive(Debug, Clone)]
pub struct RadialOdeResult {
    pub r: Vec<f64>,
    pub cos_profile: Vec<f64>,
    pub sin_profile: Vec<f64>,
    /// Max deviation of the integrated profiles from the closed forms.
    pub max_closed_form_dev: f64,
    /// Max deviation of `|grad d|^2 r^2` from `a^2` along the profiles.
    pub max_invariant_dev: f64,
}

pub fn radial_ode_solve(alpha: f64, r1: f64, r2: f64, resolution: usize) -> Result<RadialOdeResult> {
    if r1 <= 0.0 || r2 <= r1 || resolution < 8 {
        return Err(Error::InvalidArgument(format!(
            "radial ODE needs 0 < r1 < r2 and resolution >= 8, got ({r1}, {r2}, {resolution})"
        )));
    }
    let n = resolution;
    let h = (r2 - r1) / n as f64;
    let rhs = |r: f64, y: [f64; 2]| -> [f64; 2] {
        [y[1], -y[1] / r - alpha * alpha * y[0] / (r * r)]
    };
    let rk4 = |y: [f64; 2], r: f64| -> [f64; 2] {
        let k1 = rhs(r, y);
        let k2 = rhs(r + 0.5 * h, [y[0] + 0.5 * h * k1[0], y[1] + 0.5 * h * k1[1]]);
        let k3 = rhs(r + 0.5 * h, [y[0] + 0.5 * h * k2[0], y[1] + 0.5 * h * k2[1]]);
        let k4 = rhs(r + h, [y[0] + h * k3[0], y[1] + h * k3[1]]);
        [
            y[0] + h / 6.0 * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0]),
            y[1] + h / 6.0 * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1]),
        ]
    };

    let mut r = Vec::with_capacity(n + 1);
    let mut wc = Vec::with_capacity(n + 1);
    let mut ws = Vec::with_capacity(n + 1);
    let mut yc = [1.0, 0.0];
    let mut ys = [0.0, alpha / r1];
    let mut max_dev: f64 = 0.0;
    let mut max_inv: f64 = 0.0;
    for i in 0..=n {
        let ri = r1 + i as f64 * h;
        r.push(ri);
        wc.push(yc[0]);
        ws.push(ys[0]);
        let s = alpha * (ri / r1).ln();
        max_dev = max_dev.max((yc[0] - s.cos()).abs()).max((ys[0] - s.sin()).abs());
        // |grad d|^2 r^2 = (wc'^2 + ws'^2) r^2 for the unit spiral
        let f = (yc[1] * yc[1] + ys[1] * ys[1]) * ri * ri;
        max_inv = max_inv.max((f - alpha * alpha).abs());
        if i < n {
            yc = rk4(yc, ri);
            ys = rk4(ys, ri);
        }
    }
    Ok(RadialOdeResult {
        r,
        cos_profile: wc,
        sin_profile: ws,
        max_closed_form_dev: max_dev,
        max_invariant_dev: max_inv,
    })
}

// ---------------------------------------------------------------------------
// Relaxation and classification
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy)]
pub struct RelaxOptions {
    /// Stopping tolerance on `||D u||_2 + ||lap d + |grad d|^2 d||_2`.
    pub tol: f64,
    pub t_max: f64,
    pub check_every: usize,
    /// Relative residual below which a family fit counts as a match.
    pub fit_tol: f64,
}

impl Default for RelaxOptions {
    fn default() -> Self {
        Self { tol: 1e-6, check_every: 20, t_max: 50.0, fit_tol: 1e-3 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum DirectorClass {
    Constant { k: [f64; 3] },
    Spiral { winding: i32 },
    GenericHarmonicMap,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Classification {
    Steady {
        /// Least-squares vortex amplitude against `(x2, -x1)`.
        c: f64,
        velocity_fit_residual: f64,
        director: DirectorClass,
    },
    Undecided {
        residual_history: Vec<f64>,
    },
}

#[derive(Debug)]
pub struct RelaxReport {
    pub state: SimState,
    pub classification: Classification,
    /// `||D u||_2 + ||tension||_2` at the end.
    pub final_residual: f64,
    /// `∫ |grad u|^2` at the end (Korn-strengthened decay measure).
    pub grad_u_l2: f64,
    pub steps: usize,
}

/// Runs the flow towards a steady state and classifies the limit.
pub fn relax_to_steady(
    grid: &Grid,
    u0: VectorField,
    d0: DirectorField,
    cfg: SolverConfig,
    opts: RelaxOptions,
) -> Result<RelaxReport> {
    let mut state = SimState {
        t: 0.0,
        step: 0,
        u: u0,
        d: d0,
        p: ScalarField::zeros(grid),
    };
    crate::fields::renormalize(grid, &mut state.d, cfg.degenerate_tol)?;
    apply_free_bc(grid, &mut state.d);
    let mut solver = Solver::new(grid, cfg, &state.u)?;
    solver.project(&mut state.u)?;
    apply_neumann_bc(grid, &mut state.p);

    let mut history = Vec::new();
    let mut converged = false;
    let mut steps = 0usize;
    let max_steps = (opts.t_max / solver.dt).ceil() as usize;
    while steps < max_steps {
        let residual = steady_residual_l2(grid, &state)?;
        history.push(residual);
        if residual < opts.tol {
            converged = true;
            break;
        }
        for _ in 0..opts.check_every.max(1) {
            if steps >= max_steps {
                break;
            }
            solver.step(&mut state, None)?;
            steps += 1;
        }
    }
    let final_residual = steady_residual_l2(grid, &state)?;
    if final_residual < opts.tol {
        converged = true;
    }

    let grad_u_l2 = grad_u_squared(grid, &state.u)?;
    let classification = if converged {
        classify(grid, &state, opts.fit_tol)?
    } else {
        Classification::Undecided { residual_history: history }
    };
    Ok(RelaxReport { state, classification, final_residual, grad_u_l2, steps })
}

/// `||D u||_2 + ||tension||_2`.
pub fn steady_residual_l2(grid: &Grid, state: &SimState) -> Result<f64> {
    let def = operators::deformation(grid, &state.u)?;
    let ten = operators::tension(grid, &state.d)?;
    let mut d2 = 0.0;
    let mut t2 = 0.0;
    for i in 0..grid.n1 as isize {
        for j in 0..grid.n2 as isize {
            let p = grid.pidx(i, j);
            let w = grid.weight[p];
            d2 += w * (def.xx[p] * def.xx[p] + 2.0 * def.xy[p] * def.xy[p] + def.yy[p] * def.yy[p]);
            t2 += w
                * (ten.c[0][p] * ten.c[0][p] + ten.c[1][p] * ten.c[1][p]
                    + ten.c[2][p] * ten.c[2][p]);
        }
    }
    Ok(d2.sqrt() + t2.sqrt())
}

/// `∫ |grad u|^2`.
pub fn grad_u_squared(grid: &Grid, u: &VectorField) -> Result<f64> {
    u.require_ghosts("grad u")?;
    let mut s = 0.0;
    for i in 0..grid.n1 as isize {
        for j in 0..grid.n2 as isize {
            let p = grid.pidx(i, j);
            let g0 = operators::grad_at(grid, &u.c[0], p);
            let g1 = operators::grad_at(grid, &u.c[1], p);
            s += grid.weight[p]
                * (g0[0] * g0[0] + g0[1] * g0[1] + g1[0] * g1[0] + g1[1] * g1[1]);
        }
    }
    Ok(s)
}

fn classify(grid: &Grid, state: &SimState, fit_tol: f64) -> Result<Classification> {
    // vortex amplitude by weighted least squares against (y, -x)
    let mut num = 0.0;
    let mut den = 0.0;
    let mut unorm2 = 0.0;
    for i in 0..grid.n1 as isize {
        for j in 0..grid.n2 as isize {
            let p = grid.pidx(i, j);
            let w = grid.weight[p];
            let v = [grid.y[p], -grid.x[p]];
            num += w * (state.u.c[0][p] * v[0] + state.u.c[1][p] * v[1]);
            den += w * (v[0] * v[0] + v[1] * v[1]);
            unorm2 += w * (state.u.c[0][p] * state.u.c[0][p] + state.u.c[1][p] * state.u.c[1][p]);
        }
    }
    let c = if den > 0.0 { num / den } else { 0.0 };
    let mut fit2 = 0.0;
    for i in 0..grid.n1 as isize {
        for j in 0..grid.n2 as isize {
            let p = grid.pidx(i, j);
            let w = grid.weight[p];
            let rx = state.u.c[0][p] - c * grid.y[p];
            let ry = state.u.c[1][p] + c * grid.x[p];
            fit2 += w * (rx * rx + ry * ry);
        }
    }
    let fit_res = (fit2 / unorm2.max(1e-300)).sqrt();

    // director: constant?
    let mut mean = [0.0; 3];
    let mut wsum = 0.0;
    for i in 0..grid.n1 as isize {
        for j in 0..grid.n2 as isize {
            let p = grid.pidx(i, j);
            let w = grid.weight[p];
            wsum += w;
            for k in 0..3 {
                mean[k] += w * state.d.c[k][p];
            }
        }
    }
    for m in mean.iter_mut() {
        *m /= wsum;
    }
    let mn = (mean[0] * mean[0] + mean[1] * mean[1] + mean[2] * mean[2]).sqrt();
    let mut dev: f64 = 0.0;
    if mn > 0.0 {
        for i in 0..grid.n1 as isize {
            for j in 0..grid.n2 as isize {
                let p = grid.pidx(i, j);
                for k in 0..3 {
                    dev = dev.max((state.d.c[k][p] - mean[k] / mn).abs());
                }
            }
        }
    }
    let director = if mn > 0.0 && dev <= 10.0 * fit_tol {
        DirectorClass::Constant { k: [mean[0] / mn, mean[1] / mn, mean[2] / mn] }
    } else if let DomainSpec::Annulus { r1, r2 } = grid.spec {
        spiral_fit(grid, state, r1, r2, fit_tol)
    } else {
        DirectorClass::GenericHarmonicMap
    };

    Ok(Classification::Steady { c, velocity_fit_residual: fit_res, director })
}

fn spiral_fit(grid: &Grid, state: &SimState, r1: f64, r2: f64, fit_tol: f64) -> DirectorClass {
    let lnq = (r2 / r1).ln();
    let mut best: Option<(i32, f64)> = None;
    for winding in 1..=4 {
        let alpha = winding as f64 * std::f64::consts::PI / lnq;
        // least-squares amplitudes for each component against cos/sin profiles
        let mut num = [0.0f64; 3];
        let mut den = [0.0f64; 3];
        for i in 0..grid.n1 as isize {
            for j in 0..grid.n2 as isize {
                let p = grid.pidx(i, j);
                let w = grid.weight[p];
                let r = (grid.x[p] * grid.x[p] + grid.y[p] * grid.y[p]).sqrt();
                let s = alpha * (r / r1).ln();
                let basis = [s.cos(), s.cos(), s.sin()];
                for k in 0..3 {
                    num[k] += w * state.d.c[k][p] * basis[k];
                    den[k] += w * basis[k] * basis[k];
                }
            }
        }
        let amp: Vec<f64> = (0..3)
            .map(|k| if den[k] > 0.0 { num[k] / den[k] } else { 0.0 })
            .collect();
        let mut res2 = 0.0;
        let mut norm2 = 0.0;
        for i in 0..grid.n1 as isize {
            for j in 0..grid.n2 as isize {
                let p = grid.pidx(i, j);
                let w = grid.weight[p];
                let r = (grid.x[p] * grid.x[p] + grid.y[p] * grid.y[p]).sqrt();
                let s = alpha * (r / r1).ln();
                let basis = [s.cos(), s.cos(), s.sin()];
                for k in 0..3 {
                    let rres = state.d.c[k][p] - amp[k] * basis[k];
                    res2 += w * rres * rres;
                    norm2 += w * state.d.c[k][p] * state.d.c[k][p];
                }
            }
        }
        let rel = (res2 / norm2.max(1e-300)).sqrt();
        if best.map(|(_, b)| rel < b).unwrap_or(true) {
            best = Some((winding, rel));
        }
    }
    match best {
        Some((winding, rel)) if rel <= 10.0 * fit_tol => DirectorClass::Spiral { winding },
        _ => DirectorClass::GenericHarmonicMap,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::build_grid;
    use std::f64::consts::{E, PI};

    fn annulus_state(n: (usize, usize)) -> (Grid, VectorField, DirectorField, PressureField) {
        let g = build_grid(DomainSpec::Annulus { r1: 1.0, r2: E }, n).unwrap();
        let spec = SteadyStateSpec::AnnulusVortexSpiral {
            c: 1.0,
            k1: 0.6,
            k2: 0.8,
            k3: 1.0,
            winding: 1,
        };
        let (u, d, p) = make_state(&spec, &g).unwrap();
        (g, u, d, p)
    }

    #[test]
    fn annulus_state_values_at_circles() {
        let (g, u, d, _) = annulus_state((32, 64));
        // alpha = pi for r2/r1 = e, winding 1
        // inner circle: d = (K1, K2, 0); outer: (-K1, -K2, 0)
        for j in 0..g.n2 as isize {
            let din = d.at(&g, 0, j);
            let dout = d.at(&g, g.n1 as isize - 1, j);
            assert!((din[0] - 0.6).abs() < 1e-12 && (din[1] - 0.8).abs() < 1e-12);
            assert!(din[2].abs() < 1e-12);
            assert!((dout[0] + 0.6).abs() < 1e-12 && (dout[1] + 0.8).abs() < 1e-12);
            assert!(dout[2].abs() < 1e-12);
        }
        // |d| = 1 everywhere
        assert!(d.max_unit_deviation(&g) < 1e-14);
        // vortex tangential to both circles
        assert!(crate::fields::max_boundary_normal_flux(&g, &u) < 1e-14);
    }

    #[test]
    fn disk_zero_state_is_trivial() {
        let g = build_grid(DomainSpec::Disk { radius: 1.0 }, (16, 32)).unwrap();
        let spec = SteadyStateSpec::DiskVortexConstantD { c: 0.0, k: [1.0, 0.0, 0.0] };
        let (u, d, p) = make_state(&spec, &g).unwrap();
        assert!(u.max_abs(&g) < 1e-15);
        assert!(p.max_abs(&g) < 1e-12);
        assert_eq!(d.at(&g, 3, 3), [1.0, 0.0, 0.0]);
    }

    #[test]
    fn disk_k3_flagged_as_conflict() {
        let s = 1.0 / 3.0f64.sqrt();
        let spec = SteadyStateSpec::DiskVortexConstantD { c: 1.0, k: [s, s, s] };
        assert_eq!(spec.validate().unwrap(), Admissibility::EquatorialConflict);
        let spec2 = SteadyStateSpec::DiskVortexConstantD { c: 1.0, k: [0.6, 0.8, 0.0] };
        assert_eq!(spec2.validate().unwrap(), Admissibility::Strict);
    }

    #[test]
    fn stationarity_residual_second_order_on_annulus() {
        let (gc, uc, dc, pc) = annulus_state((64, 128));
        let rc = stationarity_residual(&gc, &uc, &dc, &pc).unwrap();
        let (gf, uf, df, pf) = annulus_state((128, 256));
        let rf = stationarity_residual(&gf, &uf, &df, &pf).unwrap();
        let order_u = (rc.res_u / rf.res_u).log2();
        let order_d = (rc.res_d / rf.res_d).log2();
        assert!(order_u >= 1.9, "res_u order {order_u} ({} -> {})", rc.res_u, rf.res_u);
        assert!(order_d >= 1.9, "res_d order {order_d} ({} -> {})", rc.res_d, rf.res_d);
        assert!(rf.res_div < 1e-12, "vortex divergence exact, got {}", rf.res_div);
    }

    #[test]
    fn stationarity_zero_state() {
        let g = build_grid(DomainSpec::Disk { radius: 1.0 }, (16, 32)).unwrap();
        let spec = SteadyStateSpec::DiskVortexConstantD { c: 0.0, k: [0.0, 1.0, 0.0] };
        let (u, d, p) = make_state(&spec, &g).unwrap();
        let r = stationarity_residual(&g, &u, &d, &p).unwrap();
        assert!(r.res_u < 1e-12 && r.res_d < 1e-12 && r.res_div < 1e-12);
    }

    #[test]
    fn perturbation_raises_director_residual() {
        let (g, u, mut d, p) = annulus_state((32, 64));
        let base = stationarity_residual(&g, &u, &d, &p).unwrap();
        // rotate the director by 0.1 rad at one interior node
        let (i, j) = (g.n1 / 2, 5);
        let v = d.at(&g, i as isize, j as isize);
        let (s, c) = (0.1f64.sin(), 0.1f64.cos());
        d.set_component(&g, 0, i, j, c * v[0] - s * v[1]);
        d.set_component(&g, 1, i, j, s * v[0] + c * v[1]);
        apply_free_bc(&g, &mut d);
        let pert = stationarity_residual(&g, &u, &d, &p).unwrap();
        assert!(pert.res_d > 10.0 * base.res_d, "{} vs {}", pert.res_d, base.res_d);
    }

    #[test]
    fn radial_ode_matches_closed_form() {
        let alpha = PI; // winding 1 over [1, e]
        let r = radial_ode_solve(alpha, 1.0, E, 8192).unwrap();
        assert!(r.max_closed_form_dev < 1e-12, "dev {}", r.max_closed_form_dev);
        assert!(r.max_invariant_dev < 1e-10, "invariant {}", r.max_invariant_dev);
        // endpoint: cos(alpha ln e) = cos(pi) = -1
        assert!((r.cos_profile.last().unwrap() + 1.0).abs() < 1e-12);
    }

    #[test]
    fn radial_ode_alpha_zero_gives_constants() {
        let r = radial_ode_solve(0.0, 1.0, 2.0, 256).unwrap();
        for v in &r.cos_profile {
            assert!((v - 1.0).abs() < 1e-13);
        }
        for v in &r.sin_profile {
            assert!(v.abs() < 1e-13);
        }
    }
}
