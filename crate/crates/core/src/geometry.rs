//! Computational domains and structured, body-fitted grids.
//!
//! Every grid is logically rectangular with coordinates `(xi1, xi2)`:
//!
//! * Disk: polar `(r, theta)`, radial nodes staggered so none sits at `r = 0`
//!   (first node at `h/2`, last exactly on the boundary circle).
//! * Annulus: polar, both circles on grid nodes.
//! * Ellipse: radially mapped polar `(rho, theta) -> (a rho cos, b rho sin)`,
//!   staggered at the center like the disk. With `a == b` the grid reduces to
//!   the disk grid node-for-node.
//! * Strip: Cartesian `(y, x)`, optionally periodic in `x`.
//!
//! The angular axis is periodic; the staggered center is closed by a wrap rule
//! (the node "below" `rho = h/2` is the node at `theta + pi`). Quadrature
//! weights are exact cell areas, so total weights reproduce closed-form areas
//! to roundoff.
//!
//! Sign conventions: the tangent is the outward normal rotated by +90 degrees,
//! and the signed curvature is defined by `(tau . grad) n = kappa tau`. On the
//! inner circle of an annulus the outward normal (outward from the fluid
//! domain) points toward the center and `kappa = -1/r1`.

use crate::error::{Error, Result};
use std::io::Write;

/// Domain shapes supported by the solver.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DomainSpec {
    Disk { radius: f64 },
    Annulus { r1: f64, r2: f64 },
    Ellipse { a: f64, b: f64 },
    Strip { width: f64, height: f64, periodic_x: bool },
}

impl DomainSpec {
    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            DomainSpec::Disk { radius } => radius > 0.0,
            DomainSpec::Annulus { r1, r2 } => r1 > 0.0 && r2 > r1,
            DomainSpec::Ellipse { a, b } => a > 0.0 && b > 0.0,
            DomainSpec::Strip { width, height, .. } => width > 0.0 && height > 0.0,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidDomain(format!("{self:?}")))
        }
    }

    /// Closed-form area.
    pub fn area(&self) -> f64 {
        use std::f64::consts::PI;
        match *self {
            DomainSpec::Disk { radius } => PI * radius * radius,
            DomainSpec::Annulus { r1, r2 } => PI * (r2 * r2 - r1 * r1),
            DomainSpec::Ellipse { a, b } => PI * a * b,
            DomainSpec::Strip { width, height, .. } => width * height,
        }
    }

    /// Rough diameter, used to bound scan radii.
    pub fn diameter(&self) -> f64 {
        match *self {
            DomainSpec::Disk { radius } => 2.0 * radius,
            DomainSpec::Annulus { r2, .. } => 2.0 * r2,
            DomainSpec::Ellipse { a, b } => 2.0 * a.max(b),
            DomainSpec::Strip { width, height, .. } => (width * width + height * height).sqrt(),
        }
    }

    pub fn is_axisymmetric(&self) -> bool {
        match *self {
            DomainSpec::Disk { .. } | DomainSpec::Annulus { .. } => true,
            DomainSpec::Ellipse { a, b } => a == b,
            DomainSpec::Strip { .. } => false,
        }
    }
}

/// How an end of logical axis 0 (and, for non-periodic strips, axis 1) closes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EndKind {
    /// Physical wall carrying boundary conditions.
    Wall,
    /// Staggered polar center: ghost row wraps to `theta + pi`.
    CenterWrap,
    /// Periodic identification.
    Periodic,
}

/// Which wall a boundary node belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    /// Low end of axis 0 (annulus inner circle, strip bottom).
    Lo0,
    /// High end of axis 0 (outer circle, strip top).
    Hi0,
    /// Low end of axis 1 (strip left wall; only when not periodic).
    Lo1,
    /// High end of axis 1 (strip right wall).
    Hi1,
}

#[derive(Debug, Clone, Copy)]
pub struct BoundaryNode {
    /// Index into the padded node arrays.
    pub pidx: usize,
    pub i: usize,
    pub j: usize,
    pub side: Side,
    /// Unit outward normal.
    pub normal: [f64; 2],
    /// Unit tangent, `rot90(normal)`.
    pub tangent: [f64; 2],
    /// Signed curvature, `(tau . grad) n = kappa tau`.
    pub kappa: f64,
}

/// Structured grid with metric data and boundary frames.
///
/// Node arrays are padded with a one-deep ghost rim; `pidx(i, j)` accepts
/// `i in [-1, n1]`, `j in [-1, n2]`. Grids are immutable after construction
/// and safe to share across threads.
#[derive(Debug, Clone)]
pub struct Grid {
    pub spec: DomainSpec,
    /// Owned nodes along axis 0 (radial / y).
    pub n1: usize,
    /// Owned nodes along axis 1 (angular / x).
    pub n2: usize,
    /// Logical spacings.
    pub h1: f64,
    pub h2: f64,
    /// Logical coordinate of node i=0 along axis 0 (r, rho or y).
    pub xi1_0: f64,
    pub ends0: [EndKind; 2],
    pub ends1: [EndKind; 2],
    /// Physical coordinates, padded.
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    /// Quadrature weights (exact cell areas) on owned nodes, padded layout,
    /// zero on ghosts.
    pub weight: Vec<f64>,
    /// Inverse Jacobian rows, padded: d(xi1)/dx, d(xi1)/dy, d(xi2)/dx, d(xi2)/dy.
    pub ixj: [Vec<f64>; 4],
    /// Jacobian columns, padded: dx/d(xi1), dy/d(xi1), dx/d(xi2), dy/d(xi2).
    pub jac: [Vec<f64>; 4],
    /// Inverse metric g^{mn} = grad(xi_m) . grad(xi_n), padded: g11, g12, g22.
    pub gup: [Vec<f64>; 3],
    /// Laplacians of the coordinate functions, padded.
    pub lap1: Vec<f64>,
    pub lap2: Vec<f64>,
    /// Whether the mapping is orthogonal (everything except a true ellipse).
    /// Orthogonal grids carry a smooth orthonormal frame and signed scale
    /// factors used by the deformation tensor; rigid rotations then have
    /// exactly zero discrete deformation.
    pub orthogonal: bool,
    /// Unit frame vectors (smooth continuation through the staggered center).
    pub e1: [Vec<f64>; 2],
    pub e2: [Vec<f64>; 2],
    /// Signed scale factors and their analytic logical derivatives.
    pub h1s: Vec<f64>,
    pub h2s: Vec<f64>,
    pub dh1_d2: Vec<f64>,
    pub dh2_d1: Vec<f64>,
    pub boundary: Vec<BoundaryNode>,
    /// Padded-index -> boundary list index (or -1).
    pub boundary_of: Vec<i32>,
    pub total_weight: f64,
    pub(crate) plans: std::sync::OnceLock<crate::fields::BcPlans>,
}

impl Grid {
    #[inline]
    pub fn stride(&self) -> usize {
        self.n2 + 2
    }

    /// Padded index for logical node `(i, j)`, each allowed one step outside.
    #[inline]
    pub fn pidx(&self, i: isize, j: isize) -> usize {
        debug_assert!(i >= -1 && i <= self.n1 as isize);
        debug_assert!(j >= -1 && j <= self.n2 as isize);
        ((i + 1) as usize) * (self.n2 + 2) + (j + 1) as usize
    }

    /// Number of owned nodes.
    #[inline]
    pub fn n_owned(&self) -> usize {
        self.n1 * self.n2
    }

    /// Owned (compact) index.
    #[inline]
    pub fn oidx(&self, i: usize, j: usize) -> usize {
        i * self.n2 + j
    }

    #[inline]
    pub fn owned_of_pidx(&self, p: usize) -> Option<(usize, usize)> {
        let s = self.n2 + 2;
        let i = p / s;
        let j = p % s;
        if i >= 1 && i <= self.n1 && j >= 1 && j <= self.n2 {
            Some((i - 1, j - 1))
        } else {
            None
        }
    }

    /// Logical coordinate along axis 0 of row `i` (may be a ghost row).
    #[inline]
    pub fn xi1(&self, i: isize) -> f64 {
        self.xi1_0 + self.h1 * i as f64
    }

    /// Boundary-condition fill plans, built on first use.
    pub fn bc_plans(&self) -> &crate::fields::BcPlans {
        self.plans.get_or_init(|| crate::fields::BcPlans::new(self))
    }

    /// Orthonormal boundary frame and signed curvature at an owned node.
    /// Errors if the node is not a boundary node.
    pub fn boundary_frame(&self, i: usize, j: usize) -> Result<([f64; 2], [f64; 2], f64)> {
        if i >= self.n1 || j >= self.n2 {
            return Err(Error::InvalidArgument(format!(
                "node ({i},{j}) outside grid {}x{}",
                self.n1, self.n2
            )));
        }
        let b = self.boundary_of[self.pidx(i as isize, j as isize)];
        if b < 0 {
            return Err(Error::InvalidArgument(format!("node ({i},{j}) is not a boundary node")));
        }
        let bn = &self.boundary[b as usize];
        Ok((bn.normal, bn.tangent, bn.kappa))
    }

    /// Writes the grid in the plain-text dump format: one node per line,
    /// `i j x y weight` with `n1 n2 t1 t2 kappa` appended for boundary nodes.
    pub fn dump<W: Write>(&self, out: &mut W) -> Result<()> {
        for i in 0..self.n1 {
            for j in 0..self.n2 {
                let p = self.pidx(i as isize, j as isize);
                let b = self.boundary_of[p];
                if b >= 0 {
                    let bn = &self.boundary[b as usize];
                    writeln!(
                        out,
                        "{} {} {:.17e} {:.17e} {:.17e} {:.17e} {:.17e} {:.17e} {:.17e} {:.17e}",
                        i, j, self.x[p], self.y[p], self.weight[p],
                        bn.normal[0], bn.normal[1], bn.tangent[0], bn.tangent[1], bn.kappa
                    )?;
                } else {
                    writeln!(
                        out,
                        "{} {} {:.17e} {:.17e} {:.17e}",
                        i, j, self.x[p], self.y[p], self.weight[p]
                    )?;
                }
            }
        }
        Ok(())
    }

    /// Maps a physical point to fractional padded indices `(fi, fj)` for
    /// bilinear interpolation, or `None` when the point lies outside the
    /// interpolation range of the grid.
    pub fn locate(&self, x: f64, y: f64) -> Option<(f64, f64)> {
        let (xi1, xi2) = match self.spec {
            DomainSpec::Disk { radius } => {
                let r = (x * x + y * y).sqrt();
                if r > radius * (1.0 + 1e-12) {
                    return None;
                }
                (r, wrap_angle(y.atan2(x)))
            }
            DomainSpec::Annulus { r1, r2 } => {
                let r = (x * x + y * y).sqrt();
                if r < r1 * (1.0 - 1e-12) || r > r2 * (1.0 + 1e-12) {
                    return None;
                }
                (r, wrap_angle(y.atan2(x)))
            }
            DomainSpec::Ellipse { a, b } => {
                let (u, v) = (x / a, y / b);
                let rho = (u * u + v * v).sqrt();
                if rho > 1.0 + 1e-12 {
                    return None;
                }
                (rho, wrap_angle(v.atan2(u)))
            }
            DomainSpec::Strip { width, height, periodic_x } => {
                if y < -1e-12 || y > height + 1e-12 {
                    return None;
                }
                let xv = if periodic_x { x.rem_euclid(width) } else { x };
                if !periodic_x && (xv < -1e-12 || xv > width + 1e-12) {
                    return None;
                }
                (y.clamp(0.0, height), xv)
            }
        };
        let fi = (xi1 - self.xi1_0) / self.h1;
        let fj = xi2 / self.h2;
        // clamp tiny overshoots at walls
        let fi = fi.clamp(
            if self.ends0[0] == EndKind::CenterWrap { -0.999 } else { 0.0 },
            (self.n1 - 1) as f64,
        );
        Some((fi, fj))
    }
}

fn wrap_angle(t: f64) -> f64 {
    let two_pi = 2.0 * std::f64::consts::PI;
    t.rem_euclid(two_pi)
}

/// Builds the grid for `spec` with `resolution = (n1, n2)` nodes.
///
/// Deterministic: identical inputs produce identical grids.
pub fn build_grid(spec: DomainSpec, resolution: (usize, usize)) -> Result<Grid> {
    spec.validate()?;
    let (n1, n2) = resolution;
    if n1 < 8 || n2 < 8 {
        return Err(Error::InvalidResolution(format!(
            "resolution ({n1},{n2}) below minimum 8"
        )));
    }
    match spec {
        DomainSpec::Disk { .. } | DomainSpec::Ellipse { .. } => {
            if n2 % 2 != 0 {
                return Err(Error::InvalidResolution(format!(
                    "angular resolution {n2} must be even for the staggered center wrap"
                )));
            }
        }
        _ => {}
    }

    let two_pi = 2.0 * std::f64::consts::PI;
    let (h1, h2, xi1_0, ends0, ends1) = match spec {
        DomainSpec::Disk { radius } => {
            let h1 = radius / (n1 as f64 - 0.5);
            (h1, two_pi / n2 as f64, 0.5 * h1, [EndKind::CenterWrap, EndKind::Wall], [EndKind::Periodic, EndKind::Periodic])
        }
        DomainSpec::Ellipse { .. } => {
            let h1 = 1.0 / (n1 as f64 - 0.5);
            (h1, two_pi / n2 as f64, 0.5 * h1, [EndKind::CenterWrap, EndKind::Wall], [EndKind::Periodic, EndKind::Periodic])
        }
        DomainSpec::Annulus { r1, r2 } => {
            let h1 = (r2 - r1) / (n1 - 1) as f64;
            (h1, two_pi / n2 as f64, r1, [EndKind::Wall, EndKind::Wall], [EndKind::Periodic, EndKind::Periodic])
        }
        DomainSpec::Strip { width, height, periodic_x } => {
            let h1 = height / (n1 - 1) as f64;
            if periodic_x {
                (h1, width / n2 as f64, 0.0, [EndKind::Wall, EndKind::Wall], [EndKind::Periodic, EndKind::Periodic])
            } else {
                (h1, width / (n2 - 1) as f64, 0.0, [EndKind::Wall, EndKind::Wall], [EndKind::Wall, EndKind::Wall])
            }
        }
    };

    let npad = (n1 + 2) * (n2 + 2);
    let mut g = Grid {
        spec,
        n1,
        n2,
        h1,
        h2,
        xi1_0,
        ends0,
        ends1,
        x: vec![0.0; npad],
        y: vec![0.0; npad],
        weight: vec![0.0; npad],
        ixj: [vec![0.0; npad], vec![0.0; npad], vec![0.0; npad], vec![0.0; npad]],
        jac: [vec![0.0; npad], vec![0.0; npad], vec![0.0; npad], vec![0.0; npad]],
        gup: [vec![0.0; npad], vec![0.0; npad], vec![0.0; npad]],
        lap1: vec![0.0; npad],
        lap2: vec![0.0; npad],
        orthogonal: !matches!(spec, DomainSpec::Ellipse { a, b } if a != b),
        e1: [vec![0.0; npad], vec![0.0; npad]],
        e2: [vec![0.0; npad], vec![0.0; npad]],
        h1s: vec![0.0; npad],
        h2s: vec![0.0; npad],
        dh1_d2: vec![0.0; npad],
        dh2_d1: vec![0.0; npad],
        boundary: Vec::new(),
        boundary_of: vec![-1; npad],
        total_weight: 0.0,
        plans: std::sync::OnceLock::new(),
    };

    // Node-wise geometry, including the ghost rim (ghost coordinates are the
    // smooth extension of the mapping; for the center wrap they land on real
    // points across the center).
    for i in -1..=(n1 as isize) {
        for j in -1..=(n2 as isize) {
            let p = g.pidx(i, j);
            let xi1 = xi1_0 + h1 * i as f64;
            let xi2 = h2 * j as f64;
            let (px, py, jc, il, gu, l1, l2) = map_node(&spec, xi1, xi2);
            g.x[p] = px;
            g.y[p] = py;
            for k in 0..4 {
                g.jac[k][p] = jc[k];
                g.ixj[k][p] = il[k];
            }
            for k in 0..3 {
                g.gup[k][p] = gu[k];
            }
            g.lap1[p] = l1;
            g.lap2[p] = l2;
            if g.orthogonal {
                let (ct, st) = (xi2.cos(), xi2.sin());
                match spec {
                    DomainSpec::Disk { .. } | DomainSpec::Annulus { .. } => {
                        g.e1[0][p] = ct;
                        g.e1[1][p] = st;
                        g.e2[0][p] = -st;
                        g.e2[1][p] = ct;
                        g.h1s[p] = 1.0;
                        g.h2s[p] = xi1;
                        g.dh2_d1[p] = 1.0;
                    }
                    DomainSpec::Ellipse { a, .. } => {
                        g.e1[0][p] = ct;
                        g.e1[1][p] = st;
                        g.e2[0][p] = -st;
                        g.e2[1][p] = ct;
                        g.h1s[p] = a;
                        g.h2s[p] = a * xi1;
                        g.dh2_d1[p] = a;
                    }
                    DomainSpec::Strip { .. } => {
                        g.e1[1][p] = 1.0;
                        g.e2[0][p] = 1.0;
                        g.h1s[p] = 1.0;
                        g.h2s[p] = 1.0;
                    }
                }
            }
        }
    }

    // Quadrature weights: exact cell areas.
    for i in 0..n1 {
        for j in 0..n2 {
            let p = g.pidx(i as isize, j as isize);
            g.weight[p] = cell_area(&spec, &g, i, j);
        }
    }
    g.total_weight = (0..n1)
        .flat_map(|i| (0..n2).map(move |j| (i, j)))
        .map(|(i, j)| g.weight[g.pidx(i as isize, j as isize)])
        .sum();

    build_boundary(&mut g)?;
    Ok(g)
}

/// Mapping data at one logical point: physical coordinates, Jacobian columns,
/// inverse-Jacobian rows, inverse metric and coordinate Laplacians.
#[allow(clippy::type_complexity)]
fn map_node(
    spec: &DomainSpec,
    xi1: f64,
    xi2: f64,
) -> (f64, f64, [f64; 4], [f64; 4], [f64; 3], f64, f64) {
    match *spec {
        DomainSpec::Disk { .. } | DomainSpec::Annulus { .. } => {
            let (r, t) = (xi1, xi2);
            let (ct, st) = (t.cos(), t.sin());
            let x = r * ct;
            let y = r * st;
            // dx/dr, dy/dr, dx/dt, dy/dt
            let jac = [ct, st, -r * st, r * ct];
            // grad r, grad theta
            let ixj = [ct, st, -st / r, ct / r];
            let gup = [1.0, 0.0, 1.0 / (r * r)];
            (x, y, jac, ixj, gup, 1.0 / r, 0.0)
        }
        DomainSpec::Ellipse { a, b } => {
            let (rho, t) = (xi1, xi2);
            let (ct, st) = (t.cos(), t.sin());
            let x = a * rho * ct;
            let y = b * rho * st;
            let jac = [a * ct, b * st, -a * rho * st, b * rho * ct];
            let ixj = [ct / a, st / b, -st / (a * rho), ct / (b * rho)];
            let g11 = ct * ct / (a * a) + st * st / (b * b);
            let g12 = st * ct * (1.0 / (b * b) - 1.0 / (a * a)) / rho;
            let g22 = (st * st / (a * a) + ct * ct / (b * b)) / (rho * rho);
            let lap1 = (ct * ct / (b * b) + st * st / (a * a)) / rho;
            let lap2 = (2.0 * st * ct) * (1.0 / (a * a) - 1.0 / (b * b)) / (rho * rho);
            (x, y, jac, ixj, [g11, g12, g22], lap1, lap2)
        }
        DomainSpec::Strip { .. } => {
            // xi1 = y, xi2 = x
            let x = xi2;
            let y = xi1;
            let jac = [0.0, 1.0, 1.0, 0.0];
            let ixj = [0.0, 1.0, 1.0, 0.0];
            (x, y, jac, ixj, [1.0, 0.0, 1.0], 0.0, 0.0)
        }
    }
}

/// Exact area of the quadrature cell owned by node `(i, j)`.
fn cell_area(spec: &DomainSpec, g: &Grid, i: usize, j: usize) -> f64 {
    let h1 = g.h1;
    let h2 = g.h2;
    let xi = g.xi1_0 + h1 * i as f64;
    match *spec {
        DomainSpec::Disk { radius } => {
            let lo = (xi - 0.5 * h1).max(0.0);
            let hi = (xi + 0.5 * h1).min(radius);
            0.5 * (hi * hi - lo * lo) * h2
        }
        DomainSpec::Annulus { r1, r2 } => {
            let lo = (xi - 0.5 * h1).max(r1);
            let hi = (xi + 0.5 * h1).min(r2);
            0.5 * (hi * hi - lo * lo) * h2
        }
        DomainSpec::Ellipse { a, b } => {
            let lo = (xi - 0.5 * h1).max(0.0);
            let hi = (xi + 0.5 * h1).min(1.0);
            a * b * 0.5 * (hi * hi - lo * lo) * h2
        }
        DomainSpec::Strip { width, height, periodic_x } => {
            let lo = (xi - 0.5 * h1).max(0.0);
            let hi = (xi + 0.5 * h1).min(height);
            let d1 = hi - lo;
            let d2 = if periodic_x {
                h2
            } else {
                let xj = h2 * j as f64;
                let lo2 = (xj - 0.5 * h2).max(0.0);
                let hi2 = (xj + 0.5 * h2).min(width);
                hi2 - lo2
            };
            d1 * d2
        }
    }
}

fn build_boundary(g: &mut Grid) -> Result<()> {
    let n1 = g.n1 as isize;
    let n2 = g.n2 as isize;
    let push = |g: &mut Grid, i: isize, j: isize, side: Side| {
        let p = g.pidx(i, j);
        let (n, t, k) = wall_frame(&g.spec, g.h2, j, side);
        g.boundary_of[p] = g.boundary.len() as i32;
        g.boundary.push(BoundaryNode {
            pidx: p,
            i: i as usize,
            j: j as usize,
            side,
            normal: n,
            tangent: t,
            kappa: k,
        });
    };

    if g.ends0[0] == EndKind::Wall {
        for j in 0..n2 {
            push(g, 0, j, Side::Lo0);
        }
    }
    if g.ends0[1] == EndKind::Wall {
        for j in 0..n2 {
            push(g, n1 - 1, j, Side::Hi0);
        }
    }
    if g.ends1[0] == EndKind::Wall {
        for i in 1..(n1 - 1) {
            push(g, i, 0, Side::Lo1);
        }
    }
    if g.ends1[1] == EndKind::Wall {
        for i in 1..(n1 - 1) {
            push(g, i, n2 - 1, Side::Hi1);
        }
    }
    Ok(())
}

fn wall_frame(spec: &DomainSpec, h2: f64, j: isize, side: Side) -> ([f64; 2], [f64; 2], f64) {
    let t = h2 * j as f64;
    let (ct, st) = (t.cos(), t.sin());
    let rot90 = |v: [f64; 2]| [-v[1], v[0]];
    match (*spec, side) {
        (DomainSpec::Disk { radius }, Side::Hi0) => {
            let n = [ct, st];
            (n, rot90(n), 1.0 / radius)
        }
        (DomainSpec::Annulus { r2, .. }, Side::Hi0) => {
            let n = [ct, st];
            (n, rot90(n), 1.0 / r2)
        }
        (DomainSpec::Annulus { r1, .. }, Side::Lo0) => {
            let n = [-ct, -st];
            (n, rot90(n), -1.0 / r1)
        }
        (DomainSpec::Ellipse { a, b }, Side::Hi0) => {
            let m = (ct * ct / (a * a) + st * st / (b * b)).sqrt();
            let n = [ct / a / m, st / b / m];
            let k = a * b / (a * a * st * st + b * b * ct * ct).powf(1.5);
            (n, rot90(n), k)
        }
        (DomainSpec::Strip { .. }, Side::Lo0) => {
            let n = [0.0, -1.0];
            (n, rot90(n), 0.0)
        }
        (DomainSpec::Strip { .. }, Side::Hi0) => {
            let n = [0.0, 1.0];
            (n, rot90(n), 0.0)
        }
        (DomainSpec::Strip { .. }, Side::Lo1) => {
            let n = [-1.0, 0.0];
            (n, rot90(n), 0.0)
        }
        (DomainSpec::Strip { .. }, Side::Hi1) => {
            let n = [1.0, 0.0];
            (n, rot90(n), 0.0)
        }
        _ => unreachable!("no wall on this side for {spec:?}"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn disk_weights_sum_to_area() {
        let g = build_grid(DomainSpec::Disk { radius: 1.0 }, (32, 64)).unwrap();
        let rel = (g.total_weight - PI).abs() / PI;
        assert!(rel < 1e-10, "rel err {rel}");
    }

    #[test]
    fn annulus_weights_sum_to_area() {
        let g = build_grid(DomainSpec::Annulus { r1: 1.0, r2: 2.0 }, (32, 64)).unwrap();
        let rel = (g.total_weight - 3.0 * PI).abs() / (3.0 * PI);
        assert!(rel < 1e-10, "rel err {rel}");
    }

    #[test]
    fn ellipse_weights_sum_to_area() {
        let g = build_grid(DomainSpec::Ellipse { a: 1.5, b: 1.0 }, (32, 64)).unwrap();
        let rel = (g.total_weight - 1.5 * PI).abs() / (1.5 * PI);
        assert!(rel < 1e-6, "rel err {rel}");
    }

    #[test]
    fn strip_weights_sum_to_area() {
        for periodic in [true, false] {
            let g = build_grid(
                DomainSpec::Strip { width: 2.0, height: 1.0, periodic_x: periodic },
                (16, 24),
            )
            .unwrap();
            let rel = (g.total_weight - 2.0).abs() / 2.0;
            assert!(rel < 1e-12, "rel err {rel}");
        }
    }

    #[test]
    fn weight_error_shrinks_under_refinement() {
        // Weights are exact cell areas; refinement must not increase the error.
        for spec in [
            DomainSpec::Disk { radius: 1.0 },
            DomainSpec::Annulus { r1: 1.0, r2: 2.0 },
        ] {
            let coarse = build_grid(spec, (16, 32)).unwrap();
            let fine = build_grid(spec, (32, 64)).unwrap();
            let ec = (coarse.total_weight - spec.area()).abs();
            let ef = (fine.total_weight - spec.area()).abs();
            assert!(ef <= 0.25 * ec + 1e-12, "ec={ec} ef={ef}");
        }
    }

    #[test]
    fn boundary_frames_are_orthonormal() {
        for spec in [
            DomainSpec::Disk { radius: 1.0 },
            DomainSpec::Annulus { r1: 1.0, r2: 2.0 },
            DomainSpec::Ellipse { a: 1.5, b: 1.0 },
            DomainSpec::Strip { width: 1.0, height: 1.0, periodic_x: true },
        ] {
            let g = build_grid(spec, (16, 32)).unwrap();
            for bn in &g.boundary {
                let n = bn.normal;
                let t = bn.tangent;
                assert!((n[0] * n[0] + n[1] * n[1] - 1.0).abs() < 1e-12);
                assert!((t[0] * t[0] + t[1] * t[1] - 1.0).abs() < 1e-12);
                assert!((n[0] * t[0] + n[1] * t[1]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn curvature_values() {
        let g = build_grid(DomainSpec::Disk { radius: 1.0 }, (16, 32)).unwrap();
        let (_, _, k) = g.boundary_frame(15, 3).unwrap();
        assert!((k - 1.0).abs() < 1e-10);

        let g = build_grid(DomainSpec::Annulus { r1: 1.0, r2: 2.0 }, (16, 32)).unwrap();
        let (_, _, k) = g.boundary_frame(15, 0).unwrap();
        assert!((k - 0.5).abs() < 1e-10);
        let (n, _, k) = g.boundary_frame(0, 0).unwrap();
        assert!((k + 1.0).abs() < 1e-10);
        // inner normal points toward the center
        assert!(n[0] < 0.0);

        let g = build_grid(DomainSpec::Strip { width: 1.0, height: 1.0, periodic_x: true }, (16, 32)).unwrap();
        let (_, _, k) = g.boundary_frame(0, 5).unwrap();
        assert_eq!(k, 0.0);
    }

    #[test]
    fn interior_node_is_not_boundary() {
        let g = build_grid(DomainSpec::Disk { radius: 1.0 }, (16, 32)).unwrap();
        assert!(g.boundary_frame(7, 3).is_err());
    }

    #[test]
    fn ellipse_with_equal_axes_matches_disk() {
        let gd = build_grid(DomainSpec::Disk { radius: 1.3 }, (16, 32)).unwrap();
        let ge = build_grid(DomainSpec::Ellipse { a: 1.3, b: 1.3 }, (16, 32)).unwrap();
        for i in 0..16isize {
            for j in 0..32isize {
                let (pd, pe) = (gd.pidx(i, j), ge.pidx(i, j));
                assert!((gd.x[pd] - ge.x[pe]).abs() < 1e-12);
                assert!((gd.y[pd] - ge.y[pe]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn rejects_bad_specs() {
        assert!(build_grid(DomainSpec::Disk { radius: -1.0 }, (16, 32)).is_err());
        assert!(build_grid(DomainSpec::Annulus { r1: 2.0, r2: 1.0 }, (16, 32)).is_err());
        assert!(build_grid(DomainSpec::Disk { radius: 1.0 }, (4, 32)).is_err());
        assert!(build_grid(DomainSpec::Disk { radius: 1.0 }, (16, 33)).is_err());
    }

    #[test]
    fn disk_grid_is_deterministic() {
        let a = build_grid(DomainSpec::Disk { radius: 1.0 }, (16, 32)).unwrap();
        let b = build_grid(DomainSpec::Disk { radius: 1.0 }, (16, 32)).unwrap();
        assert_eq!(a.x, b.x);
        assert_eq!(a.weight, b.weight);
    }
}
