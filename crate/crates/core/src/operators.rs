//! Second-order discrete differential operators on the mapped grids.
//!
//! All operators are centered stencils in logical coordinates composed with
//! the analytic inverse Jacobian / inverse metric of the mapping, evaluated
//! nodewise:
//!
//! * gradient: `grad f = sum_m grad(xi_m) d_m f`
//! * Laplacian: `lap f = g^{mn} d_mn f + (lap xi_m) d_m f`
//! * divergence, deformation tensor and advection from component gradients.
//!
//! Stencils are uniform over owned nodes including boundary rows; accuracy at
//! the boundary is inherited from the quality of the ghost values (analytic
//! fills in tests, boundary-condition fills in the solver).

use crate::error::Result;
use crate::fields::{DirectorField, ScalarField, SymTensorField, VectorField};
use crate::geometry::{EndKind, Grid};
use crate::par;

#[inline]
fn d1(a: &[f64], p: usize, s: usize, h1: f64) -> f64 {
    (a[p + s] - a[p - s]) / (2.0 * h1)
}

#[inline]
fn d2(a: &[f64], p: usize, h2: f64) -> f64 {
    (a[p + 1] - a[p - 1]) / (2.0 * h2)
}

#[inline]
fn d11(a: &[f64], p: usize, s: usize, h1: f64) -> f64 {
    (a[p + s] - 2.0 * a[p] + a[p - s]) / (h1 * h1)
}

#[inline]
fn d22(a: &[f64], p: usize, h2: f64) -> f64 {
    (a[p + 1] - 2.0 * a[p] + a[p - 1]) / (h2 * h2)
}

#[inline]
fn d12(a: &[f64], p: usize, s: usize, h1: f64, h2: f64) -> f64 {
    (a[p + s + 1] - a[p + s - 1] - a[p - s + 1] + a[p - s - 1]) / (4.0 * h1 * h2)
}

/// Physical gradient of a padded scalar array at padded slot `p`.
#[inline]
pub(crate) fn grad_at(grid: &Grid, a: &[f64], p: usize) -> [f64; 2] {
    let s = grid.stride();
    let f1 = d1(a, p, s, grid.h1);
    let f2 = d2(a, p, grid.h2);
    [
        grid.ixj[0][p] * f1 + grid.ixj[2][p] * f2,
        grid.ixj[1][p] * f1 + grid.ixj[3][p] * f2,
    ]
}

/// Physical Laplacian of a padded scalar array at padded slot `p`.
#[inline]
pub(crate) fn lap_at(grid: &Grid, a: &[f64], p: usize) -> f64 {
    let s = grid.stride();
    grid.gup[0][p] * d11(a, p, s, grid.h1)
        + 2.0 * grid.gup[1][p] * d12(a, p, s, grid.h1, grid.h2)
        + grid.gup[2][p] * d22(a, p, grid.h2)
        + grid.lap1[p] * d1(a, p, s, grid.h1)
        + grid.lap2[p] * d2(a, p, grid.h2)
}

/// `[du1/dx, du1/dy, du2/dx, du2/dy]` at an owned node.
pub fn grad_vector_at(grid: &Grid, u: &VectorField, i: isize, j: isize) -> [f64; 4] {
    let p = grid.pidx(i, j);
    let g0 = grad_at(grid, &u.c[0], p);
    let g1 = grad_at(grid, &u.c[1], p);
    [g0[0], g0[1], g1[0], g1[1]]
}

/// Applies `f(pidx)` over owned nodes into a padded output array (rim zeroed).
fn map_owned(grid: &Grid, out: &mut [f64], f: impl Fn(usize) -> f64 + Sync) {
    let s = grid.stride();
    let n1 = grid.n1;
    let n2 = grid.n2;
    par::for_each_chunk_mut(out, |start, chunk| {
        for (k, v) in chunk.iter_mut().enumerate() {
            let p = start + k;
            let i = p / s;
            let j = p % s;
            if i >= 1 && i <= n1 && j >= 1 && j <= n2 {
                *v = f(p);
            } else {
                *v = 0.0;
            }
        }
    });
}

/// Second-order gradient of a scalar field.
pub fn grad(grid: &Grid, f: &ScalarField) -> Result<VectorField> {
    f.require_ghosts("grad input")?;
    let mut out = VectorField::zeros(grid);
    let a = &f.a;
    map_owned(grid, &mut out.c[0], |p| grad_at(grid, a, p)[0]);
    map_owned(grid, &mut out.c[1], |p| grad_at(grid, a, p)[1]);
    Ok(out)
}

/// Second-order divergence of a vector field.
pub fn divergence(grid: &Grid, u: &VectorField) -> Result<ScalarField> {
    u.require_ghosts("divergence input")?;
    let mut out = ScalarField::zeros(grid);
    let (ux, uy) = (&u.c[0], &u.c[1]);
    map_owned(grid, &mut out.a, |p| {
        grad_at(grid, ux, p)[0] + grad_at(grid, uy, p)[1]
    });
    Ok(out)
}

/// Second-order Laplacian of a scalar field.
pub fn laplacian(grid: &Grid, f: &ScalarField) -> Result<ScalarField> {
    f.require_ghosts("laplacian input")?;
    let mut out = ScalarField::zeros(grid);
    let a = &f.a;
    map_owned(grid, &mut out.a, |p| lap_at(grid, a, p));
    Ok(out)
}

/// Componentwise Laplacian of the director.
pub fn laplacian_director(grid: &Grid, d: &DirectorField) -> Result<DirectorField> {
    d.require_ghosts("laplacian input")?;
    let mut out = DirectorField::zeros(grid);
    for k in 0..3 {
        let a = &d.c[k];
        map_owned(grid, &mut out.c[k], |p| lap_at(grid, a, p));
    }
    Ok(out)
}

/// Deformation tensor `[Dxx, Dxy, Dyy]` at padded slot `p`.
///
/// On orthogonal grids this works in the orthonormal coordinate frame with the
/// metric curvature terms, so a rigid rotation has exactly zero discrete
/// deformation on polar grids; on the mapped ellipse it falls back to the
/// symmetrized chain-rule gradient.
#[inline]
pub(crate) fn deformation_at(grid: &Grid, u: &VectorField, p: usize) -> [f64; 3] {
    let (ux, uy) = (&u.c[0], &u.c[1]);
    if !grid.orthogonal {
        let g0 = grad_at(grid, ux, p);
        let g1 = grad_at(grid, uy, p);
        return [g0[0], 0.5 * (g0[1] + g1[0]), g1[1]];
    }
    let s = grid.stride();
    let (h1, h2) = (grid.h1, grid.h2);
    let v1 = |q: usize| ux[q] * grid.e1[0][q] + uy[q] * grid.e1[1][q];
    let v2 = |q: usize| ux[q] * grid.e2[0][q] + uy[q] * grid.e2[1][q];
    let (h1s, h2s) = (grid.h1s[p], grid.h2s[p]);
    let d11 = (v1(p + s) - v1(p - s)) / (2.0 * h1) / h1s
        + v2(p) * grid.dh1_d2[p] / (h1s * h2s);
    let d22 = (v2(p + 1) - v2(p - 1)) / (2.0 * h2) / h2s
        + v1(p) * grid.dh2_d1[p] / (h1s * h2s);
    let d12 = 0.5
        * ((h2s / h1s) * (v2(p + s) / grid.h2s[p + s] - v2(p - s) / grid.h2s[p - s])
            / (2.0 * h1)
            + (h1s / h2s) * (v1(p + 1) / grid.h1s[p + 1] - v1(p - 1) / grid.h1s[p - 1])
                / (2.0 * h2));
    // rotate the frame tensor to Cartesian components
    let (ax, ay) = (grid.e1[0][p], grid.e1[1][p]);
    let (bx, by) = (grid.e2[0][p], grid.e2[1][p]);
    [
        ax * ax * d11 + 2.0 * ax * bx * d12 + bx * bx * d22,
        ax * ay * d11 + (ax * by + ay * bx) * d12 + bx * by * d22,
        ay * ay * d11 + 2.0 * ay * by * d12 + by * by * d22,
    ]
}

/// Deformation tensor `D(u) = (grad u + grad u^T) / 2`.
pub fn deformation(grid: &Grid, u: &VectorField) -> Result<SymTensorField> {
    u.require_ghosts("deformation input")?;
    let n = grid.x.len();
    let mut t = SymTensorField { xx: vec![0.0; n], xy: vec![0.0; n], yy: vec![0.0; n] };
    map_owned(grid, &mut t.xx, |p| deformation_at(grid, u, p)[0]);
    map_owned(grid, &mut t.xy, |p| deformation_at(grid, u, p)[1]);
    map_owned(grid, &mut t.yy, |p| deformation_at(grid, u, p)[2]);
    Ok(t)
}

/// Advection `u . grad f` of a scalar field.
pub fn advect(grid: &Grid, u: &VectorField, f: &ScalarField) -> Result<ScalarField> {
    u.require_ghosts("advect velocity")?;
    f.require_ghosts("advect input")?;
    let mut out = ScalarField::zeros(grid);
    let a = &f.a;
    let (ux, uy) = (&u.c[0], &u.c[1]);
    map_owned(grid, &mut out.a, |p| {
        let g = grad_at(grid, a, p);
        ux[p] * g[0] + uy[p] * g[1]
    });
    Ok(out)
}

/// Advection `u . grad d` of the director, componentwise.
pub fn advect_director(grid: &Grid, u: &VectorField, d: &DirectorField) -> Result<DirectorField> {
    u.require_ghosts("advect velocity")?;
    d.require_ghosts("advect input")?;
    let mut out = DirectorField::zeros(grid);
    let (ux, uy) = (&u.c[0], &u.c[1]);
    for k in 0..3 {
        let a = &d.c[k];
        map_owned(grid, &mut out.c[k], |p| {
            let g = grad_at(grid, a, p);
            ux[p] * g[0] + uy[p] * g[1]
        });
    }
    Ok(out)
}

/// Elastic energy density `|grad d|^2` per node.
pub fn grad_norm2_director(grid: &Grid, d: &DirectorField) -> Result<ScalarField> {
    d.require_ghosts("grad input")?;
    let mut out = ScalarField::zeros(grid);
    let (a0, a1, a2) = (&d.c[0], &d.c[1], &d.c[2]);
    map_owned(grid, &mut out.a, |p| {
        let g0 = grad_at(grid, a0, p);
        let g1 = grad_at(grid, a1, p);
        let g2 = grad_at(grid, a2, p);
        g0[0] * g0[0] + g0[1] * g0[1] + g1[0] * g1[0] + g1[1] * g1[1] + g2[0] * g2[0]
            + g2[1] * g2[1]
    });
    Ok(out)
}

/// Tension field `lap d + |grad d|^2 d`; vanishes on harmonic maps into the
/// sphere.
pub fn tension(grid: &Grid, d: &DirectorField) -> Result<DirectorField> {
    d.require_ghosts("tension input")?;
    let mut out = DirectorField::zeros(grid);
    let (a0, a1, a2) = (&d.c[0], &d.c[1], &d.c[2]);
    for k in 0..3 {
        let a = &d.c[k];
        map_owned(grid, &mut out.c[k], |p| {
            let g0 = grad_at(grid, a0, p);
            let g1 = grad_at(grid, a1, p);
            let g2 = grad_at(grid, a2, p);
            let gn2 = g0[0] * g0[0] + g0[1] * g0[1] + g1[0] * g1[0] + g1[1] * g1[1]
                + g2[0] * g2[0] + g2[1] * g2[1];
            lap_at(grid, a, p) + gn2 * a[p]
        });
    }
    Ok(out)
}

/// Elastic force on the flow, `-div(grad d ⊙ grad d - |grad d|^2/2 Id)`,
/// evaluated through the pointwise identity with `(grad d)^T lap d`.
pub fn ericksen_force(grid: &Grid, d: &DirectorField) -> Result<VectorField> {
    d.require_ghosts("ericksen input")?;
    let mut out = VectorField::zeros(grid);
    let (a0, a1, a2) = (&d.c[0], &d.c[1], &d.c[2]);
    for comp in 0..2 {
        map_owned(grid, &mut out.c[comp], |p| {
            let mut s = 0.0;
            for a in [a0, a1, a2] {
                let l = lap_at(grid, a, p);
                let g = grad_at(grid, a, p);
                s -= l * g[comp];
            }
            s
        });
    }
    Ok(out)
}

/// Elastic force evaluated in conservative form by differencing the stress
/// tensor; one-sided second-order differences next to walls. Cross-check for
/// [`ericksen_force`].
pub fn ericksen_force_conservative(grid: &Grid, d: &DirectorField) -> Result<VectorField> {
    d.require_ghosts("ericksen input")?;
    let n = grid.x.len();
    // stress components on owned nodes
    let mut sxx = ScalarField { a: vec![0.0; n], ghosts: crate::fields::GhostState::Invalid };
    let mut sxy = sxx.clone();
    let mut syy = sxx.clone();
    let (a0, a1, a2) = (&d.c[0], &d.c[1], &d.c[2]);
    let stress = |p: usize| -> [f64; 3] {
        let mut t = [0.0; 3];
        for a in [a0, a1, a2] {
            let g = grad_at(grid, a, p);
            t[0] += g[0] * g[0];
            t[1] += g[0] * g[1];
            t[2] += g[1] * g[1];
        }
        let half_tr = 0.5 * (t[0] + t[2]);
        [t[0] - half_tr, t[1], t[2] - half_tr]
    };
    map_owned(grid, &mut sxx.a, |p| stress(p)[0]);
    map_owned(grid, &mut sxy.a, |p| stress(p)[1]);
    map_owned(grid, &mut syy.a, |p| stress(p)[2]);
    fill_exchange_ghosts(grid, &mut sxx);
    fill_exchange_ghosts(grid, &mut sxy);
    fill_exchange_ghosts(grid, &mut syy);

    let mut out = VectorField::zeros(grid);
    map_owned(grid, &mut out.c[0], |p| {
        -(grad_fallback(grid, &sxx.a, p)[0] + grad_fallback(grid, &sxy.a, p)[1])
    });
    map_owned(grid, &mut out.c[1], |p| {
        -(grad_fallback(grid, &sxy.a, p)[0] + grad_fallback(grid, &syy.a, p)[1])
    });
    Ok(out)
}

/// Copies wrap/periodic rim values for a derived nodal quantity; wall rims are
/// left stale and must be avoided via one-sided differences.
pub(crate) fn fill_exchange_ghosts(grid: &Grid, f: &mut ScalarField) {
    let n1 = grid.n1 as isize;
    let n2 = grid.n2 as isize;
    if grid.ends0[0] == EndKind::CenterWrap {
        let half = n2 / 2;
        for j in 0..n2 {
            let src = grid.pidx(0, (j + half) % n2);
            let dst = grid.pidx(-1, j);
            f.a[dst] = f.a[src];
        }
    }
    if grid.ends1[0] == EndKind::Periodic {
        for i in -1..=n1 {
            let l = grid.pidx(i, -1);
            let r = grid.pidx(i, n2);
            f.a[l] = f.a[grid.pidx(i, n2 - 1)];
            f.a[r] = f.a[grid.pidx(i, 0)];
        }
    }
}

/// Gradient with second-order one-sided logical differences where the regular
/// neighbor is a wall rim slot.
fn grad_fallback(grid: &Grid, a: &[f64], p: usize) -> [f64; 2] {
    let s = grid.stride();
    let n1 = grid.n1;
    let n2 = grid.n2;
    let i = p / s; // padded row (owned rows are 1..=n1)
    let j = p % s;
    let h1 = grid.h1;
    let h2 = grid.h2;

    let wall_lo0 = grid.ends0[0] == EndKind::Wall;
    let wall_hi0 = grid.ends0[1] == EndKind::Wall;
    let f1 = if i == 1 && wall_lo0 {
        (-1.5 * a[p] + 2.0 * a[p + s] - 0.5 * a[p + 2 * s]) / h1
    } else if i == n1 && wall_hi0 {
        (1.5 * a[p] - 2.0 * a[p - s] + 0.5 * a[p - 2 * s]) / h1
    } else {
        d1(a, p, s, h1)
    };
    let walls1 = grid.ends1[0] == EndKind::Wall;
    let f2 = if walls1 && j == 1 {
        (-1.5 * a[p] + 2.0 * a[p + 1] - 0.5 * a[p + 2]) / h2
    } else if walls1 && j == n2 {
        (1.5 * a[p] - 2.0 * a[p - 1] + 0.5 * a[p - 2]) / h2
    } else {
        d2(a, p, h2)
    };
    [
        grid.ixj[0][p] * f1 + grid.ixj[2][p] * f2,
        grid.ixj[1][p] * f1 + grid.ixj[3][p] * f2,
    ]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::GhostState;
    use crate::geometry::{build_grid, DomainSpec};

    fn strip(n: usize) -> Grid {
        build_grid(DomainSpec::Strip { width: 1.0, height: 1.0, periodic_x: true }, (n, n))
            .unwrap()
    }

    fn disk(n: usize) -> Grid {
        build_grid(DomainSpec::Disk { radius: 1.0 }, (n, 2 * n)).unwrap()
    }

    fn max_err_owned(grid: &Grid, got: &ScalarField, want: impl Fn(f64, f64) -> f64) -> f64 {
        let mut m: f64 = 0.0;
        for i in 0..grid.n1 as isize {
            for j in 0..grid.n2 as isize {
                let p = grid.pidx(i, j);
                m = m.max((got.a[p] - want(grid.x[p], grid.y[p])).abs());
            }
        }
        m
    }

    #[test]
    fn grad_linear_on_strip_is_exact() {
        let g = strip(16);
        let mut f = ScalarField::zeros(&g);
        f.fill_with(&g, |x, _| x);
        let gr = grad(&g, &f).unwrap();
        for i in 0..g.n1 as isize {
            for j in 0..g.n2 as isize {
                let p = g.pidx(i, j);
                assert!((gr.c[0][p] - 1.0).abs() < 1e-12);
                assert!(gr.c[1][p].abs() < 1e-12);
            }
        }
    }

    #[test]
    fn grad_constant_is_zero() {
        let g = disk(12);
        let mut f = ScalarField::zeros(&g);
        f.fill_with(&g, |_, _| 5.5);
        let gr = grad(&g, &f).unwrap();
        assert!(gr.max_abs(&g) < 1e-12);
    }

    #[test]
    fn grad_r2_on_disk() {
        // radial quadratics differentiate exactly on the polar grid
        let g = disk(16);
        let mut f = ScalarField::zeros(&g);
        f.fill_with(&g, |x, y| x * x + y * y);
        let gr = grad(&g, &f).unwrap();
        for i in 0..g.n1 as isize {
            for j in 0..g.n2 as isize {
                let p = g.pidx(i, j);
                assert!((gr.c[0][p] - 2.0 * g.x[p]).abs() < 1e-11);
                assert!((gr.c[1][p] - 2.0 * g.y[p]).abs() < 1e-11);
            }
        }
    }

    #[test]
    fn missing_ghosts_is_an_error() {
        let g = disk(8);
        let f = ScalarField::from_fn(&g, |x, _| x);
        assert!(grad(&g, &f).is_err());
    }

    #[test]
    fn laplacian_of_quadratic() {
        for g in [strip(16), disk(16)] {
            let mut f = ScalarField::zeros(&g);
            f.fill_with(&g, |x, y| x * x + y * y);
            let l = laplacian(&g, &f).unwrap();
            let err = max_err_owned(&g, &l, |_, _| 4.0);
            assert!(err < 1e-10, "err {err}");
        }
    }

    #[test]
    fn laplacian_annulus_log_spiral_profile() {
        // d1 = cos(alpha ln r) satisfies lap d1 = -(alpha^2/r^2) d1
        let alpha = std::f64::consts::PI; // winding for r2/r1 = e
        let g = build_grid(DomainSpec::Annulus { r1: 1.0, r2: std::f64::consts::E }, (64, 128))
            .unwrap();
        let mut f = ScalarField::zeros(&g);
        f.fill_with(&g, |x, y| (alpha * (x * x + y * y).sqrt().ln()).cos());
        let l = laplacian(&g, &f).unwrap();
        let err = max_err_owned(&g, &l, |x, y| {
            let r2 = x * x + y * y;
            -(alpha * alpha / r2) * (alpha * r2.sqrt().ln()).cos()
        });
        assert!(err < 2e-2, "err {err}");
        // refinement: order >= 1.9
        let g2 = build_grid(DomainSpec::Annulus { r1: 1.0, r2: std::f64::consts::E }, (128, 256))
            .unwrap();
        let mut f2 = ScalarField::zeros(&g2);
        f2.fill_with(&g2, |x, y| (alpha * (x * x + y * y).sqrt().ln()).cos());
        let l2 = laplacian(&g2, &f2).unwrap();
        let err2 = max_err_owned(&g2, &l2, |x, y| {
            let r2 = x * x + y * y;
            -(alpha * alpha / r2) * (alpha * r2.sqrt().ln()).cos()
        });
        let order = (err / err2).log2();
        assert!(order >= 1.9, "order {order}");
    }

    #[test]
    fn divergence_of_vortex_is_zero() {
        let g = disk(16);
        let mut u = VectorField::zeros(&g);
        u.fill_with(&g, |x, y| [y, -x]);
        let div = divergence(&g, &u).unwrap();
        assert!(div.max_abs(&g) < 1e-12);
    }

    #[test]
    fn deformation_of_vortex_vanishes() {
        let g = disk(16);
        let mut u = VectorField::zeros(&g);
        u.fill_with(&g, |x, y| [y, -x]);
        let t = deformation(&g, &u).unwrap();
        for i in 0..g.n1 as isize {
            for j in 0..g.n2 as isize {
                let p = g.pidx(i, j);
                assert!(t.xx[p].abs() < 1e-12 && t.xy[p].abs() < 1e-12 && t.yy[p].abs() < 1e-12);
            }
        }
    }

    #[test]
    fn deformation_of_plane_strain_on_strip() {
        let g = strip(12);
        let mut u = VectorField::zeros(&g);
        u.fill_with(&g, |x, y| [x, -y]);
        let t = deformation(&g, &u).unwrap();
        for i in 0..g.n1 as isize {
            for j in 0..g.n2 as isize {
                let p = g.pidx(i, j);
                assert!((t.xx[p] - 1.0).abs() < 1e-12);
                assert!((t.yy[p] + 1.0).abs() < 1e-12);
                assert!(t.xy[p].abs() < 1e-12);
            }
        }
    }

    #[test]
    fn advect_zero_velocity_and_constant_field() {
        let g = disk(8);
        let mut u = VectorField::zeros(&g);
        u.ghosts = GhostState::Filled;
        let mut f = ScalarField::zeros(&g);
        f.fill_with(&g, |x, y| x + 2.0 * y);
        assert!(advect(&g, &u, &f).unwrap().max_abs(&g) < 1e-14);

        let mut c = ScalarField::zeros(&g);
        c.fill_with(&g, |_, _| 3.0);
        let mut v = VectorField::zeros(&g);
        v.fill_with(&g, |x, y| [y, x]);
        assert!(advect(&g, &v, &c).unwrap().max_abs(&g) < 1e-12);
    }

    #[test]
    fn advect_rotation_preserves_radial_functions() {
        let g = disk(16);
        let mut u = VectorField::zeros(&g);
        u.fill_with(&g, |x, y| [y, -x]);
        let mut f = ScalarField::zeros(&g);
        f.fill_with(&g, |x, y| x * x + y * y);
        let a = advect(&g, &u, &f).unwrap();
        assert!(a.max_abs(&g) < 1e-11);
    }

    #[test]
    fn ericksen_force_of_constant_director_is_zero() {
        let g = disk(8);
        let mut d = DirectorField::zeros(&g);
        d.fill_with(&g, |_, _| [0.6, 0.8, 0.0]);
        let f = ericksen_force(&g, &d).unwrap();
        assert!(f.max_abs(&g) < 1e-12);
    }

    #[test]
    fn ericksen_force_of_in_plane_winding_vanishes() {
        // d = (cos x, sin x, 0): stress = diag(1, 0) - Id/2, divergence zero
        let g = strip(24);
        let mut d = DirectorField::zeros(&g);
        d.fill_with(&g, |x, _| [x.cos(), x.sin(), 0.0]);
        let f = ericksen_force(&g, &d).unwrap();
        assert!(f.max_abs(&g) < 5e-3);
        let fc = ericksen_force_conservative(&g, &d).unwrap();
        assert!(fc.max_abs(&g) < 5e-2);
    }

    #[test]
    fn ericksen_identity_forms_agree() {
        let g = strip(16);
        let g2 = strip(32);
        let mut errs = Vec::new();
        for gr in [&g, &g2] {
            let mut d = DirectorField::zeros(gr);
            d.fill_with(gr, |x, y| {
                let a = (2.0 * std::f64::consts::PI * x).sin() * 0.4 + 0.2 * y * y;
                [a.cos(), a.sin(), 0.0]
            });
            let fa = ericksen_force(gr, &d).unwrap();
            let fb = ericksen_force_conservative(gr, &d).unwrap();
            let mut m: f64 = 0.0;
            // compare away from walls where the conservative form is one-sided
            for i in 2..gr.n1 as isize - 2 {
                for j in 0..gr.n2 as isize {
                    let p = gr.pidx(i, j);
                    m = m.max((fa.c[0][p] - fb.c[0][p]).abs());
                    m = m.max((fa.c[1][p] - fb.c[1][p]).abs());
                }
            }
            errs.push(m);
        }
        let order = (errs[0] / errs[1]).log2();
        assert!(order >= 1.5, "forms must agree to second order, got {order} ({errs:?})");
    }

    #[test]
    fn operators_are_linear() {
        let g = disk(12);
        let mut f1 = ScalarField::zeros(&g);
        f1.fill_with(&g, |x, y| (x + 0.3).sin() * y);
        let mut f2 = ScalarField::zeros(&g);
        f2.fill_with(&g, |x, y| x * x - 0.7 * y);
        let (a, b) = (1.7, -0.4);
        let mut combo = ScalarField::zeros(&g);
        for p in 0..combo.a.len() {
            combo.a[p] = a * f1.a[p] + b * f2.a[p];
        }
        combo.ghosts = GhostState::Filled;
        let l1 = laplacian(&g, &f1).unwrap();
        let l2 = laplacian(&g, &f2).unwrap();
        let lc = laplacian(&g, &combo).unwrap();
        let mut m: f64 = 0.0;
        let mut scale: f64 = 0.0;
        for i in 0..g.n1 as isize {
            for j in 0..g.n2 as isize {
                let p = g.pidx(i, j);
                m = m.max((lc.a[p] - a * l1.a[p] - b * l2.a[p]).abs());
                scale = scale.max(lc.a[p].abs());
            }
        }
        assert!(m <= 1e-12 * scale.max(1.0), "nonlinearity {m}");
    }

    #[test]
    fn discrete_integration_by_parts() {
        // |<grad phi, u> + <phi, div u>| = O(h^2) for tangential u
        let mut prev = f64::NAN;
        for n in [16usize, 32] {
            let g = disk(n);
            let mut u = VectorField::zeros(&g);
            u.fill_with(&g, |x, y| {
                let r2 = x * x + y * y;
                let s = 1.0 - r2;
                [s * y + 0.3 * s * x * y, -s * x]
            });
            let mut phi = ScalarField::zeros(&g);
            phi.fill_with(&g, |x, y| (1.3 * x).cos() + 0.5 * y);
            let gphi = grad(&g, &phi).unwrap();
            let divu = divergence(&g, &u).unwrap();
            let mut s1 = 0.0;
            let mut s2 = 0.0;
            for i in 0..g.n1 as isize {
                for j in 0..g.n2 as isize {
                    let p = g.pidx(i, j);
                    s1 += g.weight[p] * (gphi.c[0][p] * u.c[0][p] + gphi.c[1][p] * u.c[1][p]);
                    s2 += g.weight[p] * phi.a[p] * divu.a[p];
                }
            }
            let resid = (s1 + s2).abs();
            if !prev.is_nan() {
                assert!(resid < prev / 3.0, "O(h^2) decay: {prev} -> {resid}");
            }
            prev = resid;
        }
    }
}
