//! Field containers with one-deep ghost layers and the boundary-condition
//! fills for the partially free boundary model.
//!
//! Conditions realized here, on `∂Ω`:
//!
//! * director: `∂_n d1 = ∂_n d2 = 0` and `d3 = 0`;
//! * velocity: `u·n = 0` and zero tangential traction `(D(u) n)·τ = 0`,
//!   which for tangential fields reads `∂_n(u·τ) = κ (u·τ)` with the signed
//!   curvature convention of [`crate::geometry`];
//! * pressure: `∂_n P = 0`.
//!
//! Ghost values are produced by per-grid fill plans ([`BcPlans`]). On the flat
//! strip walls the fills are plain mirror (even) and odd-mirror extensions, so
//! the discrete scheme commutes exactly with reflection across a wall. On
//! curved walls the fills are one-sided cubic extrapolations constrained by
//! the boundary condition (with oblique-derivative corrections on the mapped
//! ellipse, whose radial lines do not meet the boundary normally); these are
//! fourth-order accurate for fields that satisfy the boundary conditions, so
//! second-order stencils keep full order up to the boundary rows.
//!
//! Every plan is a linear map; the solver folds the same plans into its
//! assembled operators, which keeps the numeric fills and the implicit systems
//! bit-for-bit consistent.

use crate::error::{Error, Result};
use crate::geometry::{DomainSpec, EndKind, Grid};

/// Default tolerance on the unit-norm invariant of the director.
pub const UNIT_NORM_TOL: f64 = 1e-8;
/// Default tolerance on the discrete divergence after projection.
pub const DIV_TOL: f64 = 1e-8;
/// Below this norm a director node counts as degenerate and the scheme has
/// broken down.
pub const DEGENERATE_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GhostState {
    Invalid,
    Filled,
}

/// Scalar nodal field on the padded grid layout.
#[derive(Debug, Clone)]
pub struct ScalarField {
    pub a: Vec<f64>,
    pub ghosts: GhostState,
}

/// Pressure is a scalar field with a mean-zero gauge.
pub type PressureField = ScalarField;

/// Two-component (velocity) field, Cartesian components.
#[derive(Debug, Clone)]
pub struct VectorField {
    pub c: [Vec<f64>; 2],
    pub ghosts: GhostState,
}

pub type VelocityField = VectorField;

/// Three-component director field, components in the target R^3.
#[derive(Debug, Clone)]
pub struct DirectorField {
    pub c: [Vec<f64>; 3],
    pub ghosts: GhostState,
}

/// Symmetric 2x2 tensor field (owned nodes only are meaningful).
#[derive(Debug, Clone)]
pub struct SymTensorField {
    pub xx: Vec<f64>,
    pub xy: Vec<f64>,
    pub yy: Vec<f64>,
}

impl ScalarField {
    pub fn zeros(grid: &Grid) -> Self {
        Self { a: vec![0.0; grid.x.len()], ghosts: GhostState::Invalid }
    }

    /// Samples `f(x, y)` on owned nodes; ghosts stay invalid.
    pub fn from_fn(grid: &Grid, f: impl Fn(f64, f64) -> f64) -> Self {
        let mut s = Self::zeros(grid);
        for i in 0..grid.n1 as isize {
            for j in 0..grid.n2 as isize {
                let p = grid.pidx(i, j);
                s.a[p] = f(grid.x[p], grid.y[p]);
            }
        }
        s
    }

    /// Samples `f` on the whole padded layout, ghosts included; for analytic
    /// operator tests.
    pub fn fill_with(&mut self, grid: &Grid, f: impl Fn(f64, f64) -> f64) {
        for i in -1..=(grid.n1 as isize) {
            for j in -1..=(grid.n2 as isize) {
                let p = grid.pidx(i, j);
                self.a[p] = f(grid.x[p], grid.y[p]);
            }
        }
        self.ghosts = GhostState::Filled;
    }

    #[inline]
    pub fn at(&self, grid: &Grid, i: isize, j: isize) -> f64 {
        self.a[grid.pidx(i, j)]
    }

    pub fn set(&mut self, grid: &Grid, i: usize, j: usize, v: f64) {
        let p = grid.pidx(i as isize, j as isize);
        self.a[p] = v;
        self.ghosts = GhostState::Invalid;
    }

    /// Weighted mean over the domain.
    pub fn mean(&self, grid: &Grid) -> f64 {
        let mut s = 0.0;
        for i in 0..grid.n1 as isize {
            for j in 0..grid.n2 as isize {
                let p = grid.pidx(i, j);
                s += grid.weight[p] * self.a[p];
            }
        }
        s / grid.total_weight
    }

    /// Shifts to the mean-zero gauge; returns the removed mean.
    pub fn gauge_fix(&mut self, grid: &Grid) -> f64 {
        let m = self.mean(grid);
        for v in self.a.iter_mut() {
            *v -= m;
        }
        m
    }

    pub fn max_abs(&self, grid: &Grid) -> f64 {
        let mut m: f64 = 0.0;
        for i in 0..grid.n1 as isize {
            for j in 0..grid.n2 as isize {
                m = m.max(self.a[grid.pidx(i, j)].abs());
            }
        }
        m
    }

    pub fn require_ghosts(&self, name: &'static str) -> Result<()> {
        if self.ghosts == GhostState::Filled {
            Ok(())
        } else {
            Err(Error::MissingGhosts(name))
        }
    }
}

impl VectorField {
    pub fn zeros(grid: &Grid) -> Self {
        let n = grid.x.len();
        Self { c: [vec![0.0; n], vec![0.0; n]], ghosts: GhostState::Invalid }
    }

    pub fn from_fn(grid: &Grid, f: impl Fn(f64, f64) -> [f64; 2]) -> Self {
        let mut u = Self::zeros(grid);
        for i in 0..grid.n1 as isize {
            for j in 0..grid.n2 as isize {
                let p = grid.pidx(i, j);
                let v = f(grid.x[p], grid.y[p]);
                u.c[0][p] = v[0];
                u.c[1][p] = v[1];
            }
        }
        u
    }

    pub fn fill_with(&mut self, grid: &Grid, f: impl Fn(f64, f64) -> [f64; 2]) {
        for i in -1..=(grid.n1 as isize) {
            for j in -1..=(grid.n2 as isize) {
                let p = grid.pidx(i, j);
                let v = f(grid.x[p], grid.y[p]);
                self.c[0][p] = v[0];
                self.c[1][p] = v[1];
            }
        }
        self.ghosts = GhostState::Filled;
    }

    #[inline]
    pub fn at(&self, grid: &Grid, i: isize, j: isize) -> [f64; 2] {
        let p = grid.pidx(i, j);
        [self.c[0][p], self.c[1][p]]
    }

    pub fn max_abs(&self, grid: &Grid) -> f64 {
        let mut m: f64 = 0.0;
        for i in 0..grid.n1 as isize {
            for j in 0..grid.n2 as isize {
                let p = grid.pidx(i, j);
                m = m.max(self.c[0][p].abs()).max(self.c[1][p].abs());
            }
        }
        m
    }

    pub fn require_ghosts(&self, name: &'static str) -> Result<()> {
        if self.ghosts == GhostState::Filled {
            Ok(())
        } else {
            Err(Error::MissingGhosts(name))
        }
    }
}

impl DirectorField {
    pub fn zeros(grid: &Grid) -> Self {
        let n = grid.x.len();
        Self { c: [vec![0.0; n], vec![0.0; n], vec![0.0; n]], ghosts: GhostState::Invalid }
    }

    /// Constant director; not renormalized.
    pub fn constant(grid: &Grid, k: [f64; 3]) -> Self {
        let mut d = Self::zeros(grid);
        for comp in 0..3 {
            d.c[comp].iter_mut().for_each(|v| *v = k[comp]);
        }
        d
    }

    pub fn from_fn(grid: &Grid, f: impl Fn(f64, f64) -> [f64; 3]) -> Self {
        let mut d = Self::zeros(grid);
        for i in 0..grid.n1 as isize {
            for j in 0..grid.n2 as isize {
                let p = grid.pidx(i, j);
                let v = f(grid.x[p], grid.y[p]);
                for comp in 0..3 {
                    d.c[comp][p] = v[comp];
                }
            }
        }
        d
    }

    pub fn fill_with(&mut self, grid: &Grid, f: impl Fn(f64, f64) -> [f64; 3]) {
        for i in -1..=(grid.n1 as isize) {
            for j in -1..=(grid.n2 as isize) {
                let p = grid.pidx(i, j);
                let v = f(grid.x[p], grid.y[p]);
                for comp in 0..3 {
                    self.c[comp][p] = v[comp];
                }
            }
        }
        self.ghosts = GhostState::Filled;
    }

    #[inline]
    pub fn at(&self, grid: &Grid, i: isize, j: isize) -> [f64; 3] {
        let p = grid.pidx(i, j);
        [self.c[0][p], self.c[1][p], self.c[2][p]]
    }

    /// Max deviation of |d| from 1 over owned nodes.
    pub fn max_unit_deviation(&self, grid: &Grid) -> f64 {
        let mut m: f64 = 0.0;
        for i in 0..grid.n1 as isize {
            for j in 0..grid.n2 as isize {
                let p = grid.pidx(i, j);
                let n = (self.c[0][p] * self.c[0][p]
                    + self.c[1][p] * self.c[1][p]
                    + self.c[2][p] * self.c[2][p])
                    .sqrt();
                m = m.max((n - 1.0).abs());
            }
        }
        m
    }

    pub fn require_ghosts(&self, name: &'static str) -> Result<()> {
        if self.ghosts == GhostState::Filled {
            Ok(())
        } else {
            Err(Error::MissingGhosts(name))
        }
    }
}

// ---------------------------------------------------------------------------
// Fill plans
// ---------------------------------------------------------------------------

/// One ghost value as a linear combination of other padded slots.
#[derive(Debug, Clone)]
pub struct ScalarGhost {
    pub ghost: usize,
    pub terms: Vec<(usize, f64)>,
}

#[derive(Debug, Clone, Default)]
pub struct ScalarBcPlan {
    /// Boundary slots forced to zero before ghost evaluation (Dirichlet).
    pub zero_boundary: Vec<usize>,
    /// Ghost entries in evaluation order; later entries may reference earlier
    /// ghosts.
    pub ghosts: Vec<ScalarGhost>,
}

/// One velocity ghost; `terms[k]` builds output component `k` from
/// `(slot, component, coefficient)` triples taken after the boundary
/// projection.
#[derive(Debug, Clone)]
pub struct VectorGhost {
    pub ghost: usize,
    pub terms: [Vec<(usize, u8, f64)>; 2],
}

#[derive(Debug, Clone, Default)]
pub struct VelocityBcPlan {
    /// Boundary slots where the normal component is removed: `u -= n (n·u)`.
    pub project: Vec<(usize, [f64; 2])>,
    pub ghosts: Vec<VectorGhost>,
}

/// The per-grid fill plans for every boundary-condition family.
#[derive(Debug, Clone)]
pub struct BcPlans {
    /// Homogeneous Neumann (director d1/d2, pressure).
    pub neumann: ScalarBcPlan,
    /// Homogeneous Dirichlet (director d3).
    pub dirichlet: ScalarBcPlan,
    /// Navier perfect slip.
    pub velocity: VelocityBcPlan,
}

impl ScalarBcPlan {
    pub fn apply(&self, a: &mut [f64]) {
        for &p in &self.zero_boundary {
            a[p] = 0.0;
        }
        for g in &self.ghosts {
            let mut s = 0.0;
            for &(src, c) in &g.terms {
                s += c * a[src];
            }
            a[g.ghost] = s;
        }
    }
}

impl VelocityBcPlan {
    pub fn apply(&self, u1: &mut [f64], u2: &mut [f64]) {
        for &(p, n) in &self.project {
            let un = n[0] * u1[p] + n[1] * u2[p];
            u1[p] -= un * n[0];
            u2[p] -= un * n[1];
        }
        for g in &self.ghosts {
            let mut v = [0.0; 2];
            for k in 0..2 {
                for &(src, comp, c) in &g.terms[k] {
                    v[k] += c * if comp == 0 { u1[src] } else { u2[src] };
                }
            }
            u1[g.ghost] = v[0];
            u2[g.ghost] = v[1];
        }
    }
}

impl BcPlans {
    pub fn new(grid: &Grid) -> Self {
        let mut neumann = ScalarBcPlan::default();
        let mut dirichlet = ScalarBcPlan::default();
        let mut velocity = VelocityBcPlan::default();
        let flat = matches!(grid.spec, DomainSpec::Strip { .. });
        let n1 = grid.n1 as isize;
        let n2 = grid.n2 as isize;

        // boundary projections / zero lists from the boundary node list
        for bn in &grid.boundary {
            dirichlet.zero_boundary.push(bn.pidx);
            velocity.project.push((bn.pidx, bn.normal));
        }

        // Phase A: axis-0 ends, owned columns.
        for (end, kind) in grid.ends0.iter().enumerate() {
            match kind {
                EndKind::CenterWrap => {
                    debug_assert_eq!(end, 0);
                    let half = n2 / 2;
                    for j in 0..n2 {
                        let src = grid.pidx(0, (j + half) % n2);
                        let ghost = grid.pidx(-1, j);
                        neumann.ghosts.push(ScalarGhost { ghost, terms: vec![(src, 1.0)] });
                        dirichlet.ghosts.push(ScalarGhost { ghost, terms: vec![(src, 1.0)] });
                        velocity.ghosts.push(VectorGhost {
                            ghost,
                            terms: [vec![(src, 0, 1.0)], vec![(src, 1, 1.0)]],
                        });
                    }
                }
                EndKind::Wall => {
                    let (ib, out) = if end == 0 { (0, -1isize) } else { (n1 - 1, 1) };
                    for j in 0..n2 {
                        wall_ghost_axis0(
                            grid, flat, ib, out, j, &mut neumann, &mut dirichlet, &mut velocity,
                        );
                    }
                }
                EndKind::Periodic => unreachable!("axis 0 is never periodic"),
            }
        }

        // Phase B: axis 1

        if grid.ends1[0] == EndKind::Periodic {
            for i in -1..=n1 {
                for (gj, sj) in [(-1, n2 - 1), (n2, 0)] {
                    let ghost = grid.pidx(i, gj);
                    let src = grid.pidx(i, sj);
                    neumann.ghosts.push(ScalarGhost { ghost, terms: vec![(src, 1.0)] });
                    dirichlet.ghosts.push(ScalarGhost { ghost, terms: vec![(src, 1.0)] });
                    velocity.ghosts.push(VectorGhost {
                        ghost,
                        terms: [vec![(src, 0, 1.0)], vec![(src, 1, 1.0)]],
                    });
                }
            }
        } else {
            // Flat side walls of the non-periodic strip; ghost rows included so
            // corner ghosts are defined.
            for (end, jb, out) in [(0usize, 0isize, -1isize), (1, n2 - 1, 1)] {
                let (normal, tangent): ([f64; 2], [f64; 2]) = if end == 0 {
                    ([-1.0, 0.0], [0.0, -1.0])
                } else {
                    ([1.0, 0.0], [0.0, 1.0])
                };
                for i in -1..=n1 {
                    let ghost = grid.pidx(i, jb + out);
                    let p1 = grid.pidx(i, jb - out);
                    neumann.ghosts.push(ScalarGhost { ghost, terms: vec![(p1, 1.0)] });
                    dirichlet.ghosts.push(ScalarGhost { ghost, terms: vec![(p1, -1.0)] });
                    velocity.ghosts.push(flat_velocity_ghost(ghost, p1, normal, tangent));
                }
            }
        }

        BcPlans { neumann, dirichlet, velocity }
    }
}

/// Mirror (even tangential / odd normal) velocity ghost for a flat wall.
fn flat_velocity_ghost(ghost: usize, p1: usize, n: [f64; 2], t: [f64; 2]) -> VectorGhost {
    // ghost = t (t·u1) - n (n·u1)
    let mut terms: [Vec<(usize, u8, f64)>; 2] = [Vec::new(), Vec::new()];
    for k in 0..2 {
        for comp in 0..2usize {
            let c = t[k] * t[comp] - n[k] * n[comp];
            if c != 0.0 {
                terms[k].push((p1, comp as u8, c));
            }
        }
    }
    VectorGhost { ghost, terms }
}

#[allow(clippy::too_many_arguments)]
fn wall_ghost_axis0(
    grid: &Grid,
    flat: bool,
    ib: isize,
    out: isize,
    j: isize,
    neumann: &mut ScalarBcPlan,
    dirichlet: &mut ScalarBcPlan,
    velocity: &mut VelocityBcPlan,
) {
    let n2 = grid.n2 as isize;
    let p0 = grid.pidx(ib, j);
    let p1 = grid.pidx(ib - out, j);
    let p2 = grid.pidx(ib - 2 * out, j);
    let p3 = grid.pidx(ib - 3 * out, j);
    let ghost = grid.pidx(ib + out, j);

    if flat {
        let b = grid.boundary_of[p0];
        let bn = &grid.boundary[b as usize];
        neumann.ghosts.push(ScalarGhost { ghost, terms: vec![(p1, 1.0)] });
        dirichlet.ghosts.push(ScalarGhost { ghost, terms: vec![(p1, -1.0)] });
        velocity.ghosts.push(flat_velocity_ghost(ghost, p1, bn.normal, bn.tangent));
        return;
    }

    let b = grid.boundary_of[p0];
    debug_assert!(b >= 0);
    let bn = &grid.boundary[b as usize];
    let (n, t, kappa) = (bn.normal, bn.tangent, bn.kappa);
    let e1 = [grid.jac[0][p0], grid.jac[1][p0]];
    let e1n = e1[0] * n[0] + e1[1] * n[1];
    let e1t = e1[0] * t[0] + e1[1] * t[1];
    // tangential derivative expressed through the angular logical derivative
    let tg2 = t[0] * grid.ixj[2][p0] + t[1] * grid.ixj[3][p0];
    let ring_p = grid.pidx(ib, (j + 1).rem_euclid(n2));
    let ring_m = grid.pidx(ib, (j - 1).rem_euclid(n2));
    let h1 = grid.h1;
    let h2 = grid.h2;
    let outf = out as f64;

    // Neumann scalar: ghost = -1.5 f0 + 3 f1 - 0.5 f2 + 3 sigma,
    // sigma = h1*out*(e1.t)(t.grad xi2) * d_xi2 f  (zero on orthogonal walls).
    let cring = 3.0 * h1 * outf * e1t * tg2 / (2.0 * h2);
    let mut terms = vec![(p0, -1.5), (p1, 3.0), (p2, -0.5)];
    if cring != 0.0 {
        terms.push((ring_p, cring));
        terms.push((ring_m, -cring));
    }
    neumann.ghosts.push(ScalarGhost { ghost, terms });

    // Dirichlet scalar: cubic through zero at the wall.
    dirichlet.ghosts.push(ScalarGhost {
        ghost,
        terms: vec![(p1, -6.0), (p2, 4.0), (p3, -1.0)],
    });

    // Velocity: tangential part obeys the Robin slip condition
    // d_n(u.t) = kappa (u.t); normal part vanishes at the wall with
    // d_n(u.n) = -d_tau(u.t) from incompressibility.
    let mut a_terms: Vec<(usize, f64)> = vec![
        (p0, -1.5 + 3.0 * h1 * outf * e1n * kappa),
        (p1, 3.0),
        (p2, -0.5),
    ];
    if cring != 0.0 {
        a_terms.push((ring_p, cring));
        a_terms.push((ring_m, -cring));
    }
    let mut b_terms: Vec<(usize, f64)> = vec![(p1, 3.0), (p2, -0.5)];
    if cring != 0.0 {
        b_terms.push((ring_p, cring));
        b_terms.push((ring_m, -cring));
    }
    // -d_tau(u.t) contribution to the normal-component slope
    let cdiva = -3.0 * h1 * outf * e1n * tg2 / (2.0 * h2);
    let b_from_a = if cdiva != 0.0 { vec![(ring_p, cdiva), (ring_m, -cdiva)] } else { Vec::new() };

    let mut terms: [Vec<(usize, u8, f64)>; 2] = [Vec::new(), Vec::new()];
    for k in 0..2 {
        for &(src, c) in &a_terms {
            for comp in 0..2usize {
                let v = t[k] * c * t[comp];
                if v != 0.0 {
                    terms[k].push((src, comp as u8, v));
                }
            }
        }
        for &(src, c) in &b_terms {
            for comp in 0..2usize {
                let v = n[k] * c * n[comp];
                if v != 0.0 {
                    terms[k].push((src, comp as u8, v));
                }
            }
        }
        for &(src, c) in &b_from_a {
            for comp in 0..2usize {
                let v = n[k] * c * t[comp];
                if v != 0.0 {
                    terms[k].push((src, comp as u8, v));
                }
            }
        }
    }
    velocity.ghosts.push(VectorGhost { ghost, terms });
}

// ---------------------------------------------------------------------------
// Boundary-condition application
// ---------------------------------------------------------------------------

/// Enforces the free boundary condition on the director: `d3 = 0` on the
/// boundary, even extension ghosts for `d1, d2`, odd-type extension for `d3`.
pub fn apply_free_bc(grid: &Grid, d: &mut DirectorField) {
    let plans = grid.bc_plans();
    plans.neumann.apply(&mut d.c[0]);
    plans.neumann.apply(&mut d.c[1]);
    plans.dirichlet.apply(&mut d.c[2]);
    d.ghosts = GhostState::Filled;
}

/// Enforces the Navier perfect-slip condition on the velocity: removes the
/// normal component on boundary nodes and fills ghosts so the discrete
/// tangential traction vanishes to the stencil order.
pub fn apply_navier_bc(grid: &Grid, u: &mut VectorField) {
    let plans = grid.bc_plans();
    let (c0, c1) = u.c.split_at_mut(1);
    plans.velocity.apply(&mut c0[0], &mut c1[0]);
    u.ghosts = GhostState::Filled;
}

/// Fills pressure ghosts for the homogeneous Neumann condition.
pub fn apply_neumann_bc(grid: &Grid, p: &mut ScalarField) {
    grid.bc_plans().neumann.apply(&mut p.a);
    p.ghosts = GhostState::Filled;
}

/// Pointwise projection of the director back to the unit sphere. Nodes already
/// unit to machine precision are left untouched, which makes the operation
/// bitwise idempotent. Boundary `d3 = 0` is re-imposed afterwards; ghosts are
/// invalidated.
pub fn renormalize(grid: &Grid, d: &mut DirectorField, degenerate_tol: f64) -> Result<()> {
    for i in 0..grid.n1 as isize {
        for j in 0..grid.n2 as isize {
            let p = grid.pidx(i, j);
            let n2 = d.c[0][p] * d.c[0][p] + d.c[1][p] * d.c[1][p] + d.c[2][p] * d.c[2][p];
            let n = n2.sqrt();
            if n < degenerate_tol {
                return Err(Error::DegenerateDirector {
                    i: i as usize,
                    j: j as usize,
                    norm: n,
                    tol: degenerate_tol,
                });
            }
            // nodes that are already unit to near machine precision stay
            // untouched, making the projection bitwise idempotent
            if (n - 1.0).abs() > 1e-13 {
                d.c[0][p] /= n;
                d.c[1][p] /= n;
                d.c[2][p] /= n;
            }
        }
    }
    for bn in &grid.boundary {
        d.c[2][bn.pidx] = 0.0;
    }
    d.ghosts = GhostState::Invalid;
    Ok(())
}

/// Checks `u . n` at all boundary nodes; max absolute value.
pub fn max_boundary_normal_flux(grid: &Grid, u: &VectorField) -> f64 {
    let mut m: f64 = 0.0;
    for bn in &grid.boundary {
        let un = bn.normal[0] * u.c[0][bn.pidx] + bn.normal[1] * u.c[1][bn.pidx];
        m = m.max(un.abs());
    }
    m
}

/// Discrete tangential traction `(D(u) n) . t` at a boundary node, centered
/// through the ghost layer; diagnostic for tests.
pub fn boundary_traction(grid: &Grid, u: &VectorField, bi: usize) -> f64 {
    let bn = &grid.boundary[bi];
    let d = crate::operators::deformation_at(grid, u, bn.pidx);
    let n = bn.normal;
    let t = bn.tangent;
    let vn = [d[0] * n[0] + d[1] * n[1], d[1] * n[0] + d[2] * n[1]];
    vn[0] * t[0] + vn[1] * t[1]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::build_grid;

    fn disk(n: usize) -> Grid {
        build_grid(DomainSpec::Disk { radius: 1.0 }, (n, 2 * n)).unwrap()
    }

    #[test]
    fn renormalize_scales_to_unit() {
        let g = disk(8);
        let mut d = DirectorField::constant(&g, [0.0, 0.0, 2.0]);
        renormalize(&g, &mut d, DEGENERATE_TOL).unwrap();
        // boundary d3 re-imposed to zero, interior scaled to unit
        let interior = d.at(&g, 2, 3);
        assert_eq!(interior, [0.0, 0.0, 1.0]);
        assert!(d.max_unit_deviation(&g) <= 1.0); // boundary nodes got zeroed
    }

    #[test]
    fn renormalize_unit_is_untouched() {
        let g = disk(8);
        let mut d = DirectorField::constant(&g, [1.0, 0.0, 0.0]);
        let before = d.c[0].clone();
        renormalize(&g, &mut d, DEGENERATE_TOL).unwrap();
        assert_eq!(before, d.c[0]);
    }

    #[test]
    fn renormalize_is_bitwise_idempotent() {
        // field compatible with the boundary condition (d3 = 0 on the wall)
        let g = disk(8);
        let mut d = DirectorField::from_fn(&g, |x, y| {
            [1.0 + 0.3 * x, 0.2 * y, 0.1 * (1.0 - x * x - y * y)]
        });
        renormalize(&g, &mut d, DEGENERATE_TOL).unwrap();
        let snap: Vec<Vec<f64>> = d.c.to_vec();
        renormalize(&g, &mut d, DEGENERATE_TOL).unwrap();
        for c in 0..3 {
            assert_eq!(snap[c], d.c[c], "component {c} changed on second pass");
        }
    }

    #[test]
    fn renormalize_normalization_arithmetic() {
        let g = disk(8);
        let mut d = DirectorField::constant(&g, [1.0, 1.0, 0.0]);
        renormalize(&g, &mut d, DEGENERATE_TOL).unwrap();
        let v = d.at(&g, 3, 1);
        let s = 1.0 / 2.0f64.sqrt();
        assert!((v[0] - s).abs() < 1e-15 && (v[1] - s).abs() < 1e-15);
    }

    #[test]
    fn renormalize_degenerate_names_node() {
        let g = disk(8);
        let mut d = DirectorField::constant(&g, [1.0, 0.0, 0.0]);
        d.set_component(&g, 0, 3, 5, 1e-9);
        let err = renormalize(&g, &mut d, DEGENERATE_TOL).unwrap_err();
        match err {
            Error::DegenerateDirector { i, j, .. } => {
                assert_eq!((i, j), (3, 5));
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn free_bc_constant_field_ghosts() {
        let g = disk(8);
        let mut d = DirectorField::constant(&g, [0.3, -0.7, 0.0]);
        apply_free_bc(&g, &mut d);
        for j in -1..=(g.n2 as isize) {
            for i in [-1, g.n1 as isize] {
                let v = d.at(&g, i, j);
                assert!((v[0] - 0.3).abs() < 1e-14);
                assert!((v[1] + 0.7).abs() < 1e-14);
                assert!(v[2].abs() < 1e-14);
            }
        }
    }

    #[test]
    fn free_bc_strip_odd_extension_for_d3() {
        let g = build_grid(
            DomainSpec::Strip { width: 1.0, height: 1.0, periodic_x: true },
            (9, 8),
        )
        .unwrap();
        // d3 = y near the bottom wall
        let mut d = DirectorField::from_fn(&g, |_, y| [1.0, 0.0, y]);
        apply_free_bc(&g, &mut d);
        let h = g.h1;
        for j in 0..g.n2 as isize {
            let ghost = d.at(&g, -1, j)[2];
            let inner = d.at(&g, 1, j)[2];
            assert!((ghost + inner).abs() < 1e-15, "odd extension");
            assert!((inner - h).abs() < 1e-15);
        }
    }

    #[test]
    fn free_bc_is_idempotent() {
        let g = disk(10);
        let mut d = DirectorField::from_fn(&g, |x, y| {
            let n = (1.0 + 0.2 * x * y).hypot(0.3 * y);
            [(1.0 + 0.2 * x * y) / n, 0.3 * y / n, 0.0]
        });
        apply_free_bc(&g, &mut d);
        let snap = d.c.clone();
        apply_free_bc(&g, &mut d);
        for c in 0..3 {
            for (a, b) in snap[c].iter().zip(d.c[c].iter()) {
                assert!((a - b).abs() <= 1e-15);
            }
        }
    }

    #[test]
    fn navier_bc_vortex_is_traction_free_on_disk() {
        let g = disk(32);
        let mut u = VectorField::from_fn(&g, |x, y| [y, -x]);
        apply_navier_bc(&g, &mut u);
        assert!(max_boundary_normal_flux(&g, &u) < 1e-13);
        for bi in 0..g.boundary.len() {
            let tr = boundary_traction(&g, &u, bi);
            assert!(tr.abs() < 1e-12, "traction {tr}");
        }
        // the fill leaves the rigid rotation exactly intact
        for j in 0..g.n2 as isize {
            let p = g.pidx(g.n1 as isize, j);
            let (x, y) = (g.x[p], g.y[p]);
            assert!((u.c[0][p] - y).abs() < 1e-12);
            assert!((u.c[1][p] + x).abs() < 1e-12);
        }
    }

    #[test]
    fn navier_bc_vortex_exact_on_annulus() {
        let g = build_grid(DomainSpec::Annulus { r1: 1.0, r2: 2.0 }, (16, 32)).unwrap();
        let mut u = VectorField::from_fn(&g, |x, y| [2.0 * y, -2.0 * x]);
        apply_navier_bc(&g, &mut u);
        // ghost row below the inner circle continues the rotation field
        for j in 0..g.n2 as isize {
            let p = g.pidx(-1, j);
            assert!((u.c[0][p] - 2.0 * g.y[p]).abs() < 1e-11);
            assert!((u.c[1][p] + 2.0 * g.x[p]).abs() < 1e-11);
        }
    }

    #[test]
    fn navier_bc_strip_even_extension() {
        let g = build_grid(
            DomainSpec::Strip { width: 1.0, height: 1.0, periodic_x: true },
            (9, 8),
        )
        .unwrap();
        // u = (U(y), 0) with U'(0) = 0
        let mut u = VectorField::from_fn(&g, |_, y| [1.0 - y * y, 0.0]);
        apply_navier_bc(&g, &mut u);
        for j in 0..g.n2 as isize {
            let ghost = u.at(&g, -1, j)[0];
            let mirror = u.at(&g, 1, j)[0];
            assert_eq!(ghost, mirror, "flat-wall fill is an exact mirror");
        }
    }

    #[test]
    fn navier_bc_zero_field_unchanged() {
        let g = disk(8);
        let mut u = VectorField::zeros(&g);
        apply_navier_bc(&g, &mut u);
        assert_eq!(u.max_abs(&g), 0.0);
    }

    #[test]
    fn bc_commutes_with_addition_of_bc_fields() {
        let g = disk(12);
        let mk = |c: f64| VectorField::from_fn(&g, move |x, y| [c * y + 0.1 * c * x * y, -c * x]);
        let mut a = mk(1.0);
        let mut b = mk(-0.4);
        apply_navier_bc(&g, &mut a);
        apply_navier_bc(&g, &mut b);
        let mut sum = VectorField::zeros(&g);
        for k in 0..2 {
            for p in 0..sum.c[k].len() {
                sum.c[k][p] = a.c[k][p] + b.c[k][p];
            }
        }
        let mut sum2 = sum.clone();
        apply_navier_bc(&g, &mut sum2);
        for k in 0..2 {
            for p in 0..sum.c[k].len() {
                assert!((sum.c[k][p] - sum2.c[k][p]).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn pressure_gauge_fix() {
        let g = disk(8);
        let mut p = ScalarField::from_fn(&g, |x, _| 3.0 + x);
        p.gauge_fix(&g);
        assert!(p.mean(&g).abs() < 1e-12);
    }
}

impl DirectorField {
    /// Test helper: set one component at an owned node.
    pub fn set_component(&mut self, grid: &Grid, comp: usize, i: usize, j: usize, v: f64) {
        let p = grid.pidx(i as isize, j as isize);
        self.c[comp][p] = v;
        self.ghosts = GhostState::Invalid;
    }
}
