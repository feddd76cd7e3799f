//! Assembled discrete operators for the time integrator.
//!
//! The boundary-condition fill plans are linear, so ghost references in the
//! stencils are folded into sparse matrices over owned degrees of freedom.
//! This keeps the implicit systems, the projection and the skew advection
//! bit-for-bit consistent with the numeric ghost fills:
//!
//! * `grad_n`: chain-rule gradient with the pressure (Neumann) fill;
//! * `div_v`: chain-rule divergence with the Navier fill, including the
//!   removal of boundary normal components;
//! * `def_v`: deformation tensor with the Navier fill (frame form on
//!   orthogonal grids). The viscous operator is the Gram form `2 D^T W D`,
//!   symmetric positive semidefinite in the weighted inner product, with the
//!   rigid vortex in its kernel on polar grids;
//! * `lap_even`, `lap_dir`: direct Laplacians closed with the even/odd
//!   director fills (Dirichlet rows zeroed);
//! * `k1_v`, `k2_v` and transposes: logical central differences used to build
//!   the exactly skew-adjoint advection pair.

use crate::fields::{ScalarBcPlan, VelocityBcPlan};
use crate::geometry::Grid;
use crate::linalg::{Csr, CsrBuilder};
use crate::par;

/// Expansion of every padded slot of a scalar field into owned DOFs.
struct ScalarExpansion {
    terms: Vec<Vec<(u32, f64)>>,
}

impl ScalarExpansion {
    fn new(grid: &Grid, plan: &ScalarBcPlan, dirichlet: bool) -> Self {
        let mut terms: Vec<Vec<(u32, f64)>> = vec![Vec::new(); grid.x.len()];
        for i in 0..grid.n1 as isize {
            for j in 0..grid.n2 as isize {
                let p = grid.pidx(i, j);
                let o = grid.oidx(i as usize, j as usize) as u32;
                terms[p] = vec![(o, 1.0)];
            }
        }
        if dirichlet {
            for &p in &plan.zero_boundary {
                terms[p].clear();
            }
        }
        for g in &plan.ghosts {
            let mut acc: Vec<(u32, f64)> = Vec::new();
            for &(src, c) in &g.terms {
                for &(dof, w) in &terms[src] {
                    acc.push((dof, c * w));
                }
            }
            terms[g.ghost] = merge(acc);
        }
        Self { terms }
    }
}

/// Expansion of every (padded slot, component) of a velocity field into owned
/// DOFs packed as `[comp0 nodes..., comp1 nodes...]`.
struct VelocityExpansion {
    terms: Vec<[Vec<(u32, f64)>; 2]>,
}

impl VelocityExpansion {
    fn new(grid: &Grid, plan: &VelocityBcPlan) -> Self {
        let n = grid.n_owned() as u32;
        let mut terms: Vec<[Vec<(u32, f64)>; 2]> = (0..grid.x.len())
            .map(|_| [Vec::new(), Vec::new()])
            .collect();
        for i in 0..grid.n1 as isize {
            for j in 0..grid.n2 as isize {
                let p = grid.pidx(i, j);
                let o = grid.oidx(i as usize, j as usize) as u32;
                terms[p][0] = vec![(o, 1.0)];
                terms[p][1] = vec![(o + n, 1.0)];
            }
        }
        // boundary projection u -> u - n (n.u)
        for &(p, nrm) in &plan.project {
            let (i, j) = grid.owned_of_pidx(p).expect("projection on owned node");
            let o = grid.oidx(i, j) as u32;
            for k in 0..2 {
                let mut acc = Vec::new();
                for comp in 0..2 {
                    let c = if k == comp { 1.0 } else { 0.0 } - nrm[k] * nrm[comp];
                    if c != 0.0 {
                        acc.push((o + comp as u32 * n, c));
                    }
                }
                terms[p][k] = acc;
            }
        }
        for g in &plan.ghosts {
            let mut out: [Vec<(u32, f64)>; 2] = [Vec::new(), Vec::new()];
            for k in 0..2 {
                let mut acc = Vec::new();
                for &(src, comp, c) in &g.terms[k] {
                    for &(dof, w) in &terms[src][comp as usize] {
                        acc.push((dof, c * w));
                    }
                }
                out[k] = merge(acc);
            }
            terms[g.ghost] = out;
        }
        Self { terms }
    }
}

fn merge(mut v: Vec<(u32, f64)>) -> Vec<(u32, f64)> {
    v.sort_unstable_by_key(|e| e.0);
    let mut out: Vec<(u32, f64)> = Vec::with_capacity(v.len());
    for (d, c) in v {
        if let Some(last) = out.last_mut() {
            if last.0 == d {
                last.1 += c;
                continue;
            }
        }
        out.push((d, c));
    }
    out.retain(|e| e.1 != 0.0);
    out
}

/// All grid-fixed operators used by the solver.
pub struct SolverOps {
    pub n: usize,
    /// Owned quadrature weights (length n) and duplicated (length 2n).
    pub w: Vec<f64>,
    pub w2: Vec<f64>,
    /// Contravariant factors per owned node: d(xi_m)/dx, d(xi_m)/dy.
    pub ixj_owned: [Vec<f64>; 4],
    pub grad_n: Csr,
    pub div_v: Csr,
    pub def_v: Csr,
    pub def_vt: Csr,
    pub lap_even: Csr,
    pub lap_dir: Csr,
    pub k1_v: Csr,
    pub k2_v: Csr,
    pub k1_vt: Csr,
    pub k2_vt: Csr,
    /// Jacobi diagonal of the pressure operator `div grad`.
    pub press_diag: Vec<f64>,
    /// Diagonal of the viscous Gram operator `(2/w) D^T W_t D`.
    pub visc_diag: Vec<f64>,
}

impl SolverOps {
    pub fn new(grid: &Grid) -> Self {
        let plans = grid.bc_plans();
        let neumann = ScalarExpansion::new(grid, &plans.neumann, false);
        let dirichlet = ScalarExpansion::new(grid, &plans.dirichlet, true);
        let velocity = VelocityExpansion::new(grid, &plans.velocity);
        let n = grid.n_owned();

        let mut w = vec![0.0; n];
        let mut ixj_owned = [vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n]];
        for i in 0..grid.n1 {
            for j in 0..grid.n2 {
                let p = grid.pidx(i as isize, j as isize);
                let o = grid.oidx(i, j);
                w[o] = grid.weight[p];
                for k in 0..4 {
                    ixj_owned[k][o] = grid.ixj[k][p];
                }
            }
        }
        let mut w2 = Vec::with_capacity(2 * n);
        w2.extend_from_slice(&w);
        w2.extend_from_slice(&w);

        let grad_n = assemble_grad(grid, &neumann);
        let div_v = assemble_div(grid, &velocity);
        let def_v = assemble_def(grid, &velocity);
        let def_vt = def_v.transpose();
        let lap_even = assemble_lap(grid, &neumann, false);
        let lap_dir = assemble_lap(grid, &dirichlet, true);
        let k1_v = assemble_kd(grid, &velocity, 0);
        let k2_v = assemble_kd(grid, &velocity, 1);
        let k1_vt = k1_v.transpose();
        let k2_vt = k2_v.transpose();

        // diag(div grad) via sparse row-column dots
        let grad_t = grad_n.transpose();
        let mut press_diag = vec![0.0; n];
        for i in 0..n {
            press_diag[i] = sparse_dot(&div_v, i, &grad_t, i);
        }

        // diag of (2/w) def^T W_t def: column sums of weighted squares
        let mut visc_diag = vec![0.0; 2 * n];
        for r in 0..def_v.nrows {
            let node = r % n;
            let block = r / n; // 0: xx, 1: xy, 2: yy
            let wt = if block == 1 { 2.0 * w[node] } else { w[node] };
            for e in def_v.row_ptr[r]..def_v.row_ptr[r + 1] {
                let c = def_v.col_idx[e];
                let v = def_v.values[e];
                visc_diag[c] += 2.0 * wt * v * v;
            }
        }
        for (i, d) in visc_diag.iter_mut().enumerate() {
            *d /= w2[i];
        }

        Self {
            n,
            w,
            w2,
            ixj_owned,
            grad_n,
            div_v,
            def_v,
            def_vt,
            lap_even,
            lap_dir,
            k1_v,
            k2_v,
            k1_vt,
            k2_vt,
            press_diag,
            visc_diag,
        }
    }

    /// Weighted mean over owned nodes.
    pub fn wmean(&self, f: &[f64]) -> f64 {
        let w = &self.w;
        par::sum_indexed(f.len(), |i| w[i] * f[i]) / par::sum_indexed(w.len(), |i| w[i])
    }

    /// Viscous Gram operator `y = (2/w) D^T (W_t (D u))`.
    pub fn visc_apply(&self, u: &[f64], scratch: &mut Vec<f64>, y: &mut [f64]) {
        let n = self.n;
        scratch.resize(3 * n, 0.0);
        self.def_v.mul(u, scratch);
        let w = &self.w;
        par::for_each_chunk_mut(scratch, |start, chunk| {
            for (k, v) in chunk.iter_mut().enumerate() {
                let r = start + k;
                let node = r % n;
                let wt = if r / n == 1 { 2.0 * w[node] } else { w[node] };
                *v *= 2.0 * wt;
            }
        });
        self.def_vt.mul(scratch, y);
        let w2 = &self.w2;
        par::for_each_chunk_mut(y, |start, chunk| {
            for (k, v) in chunk.iter_mut().enumerate() {
                *v /= w2[start + k];
            }
        });
    }

    /// `4 * integral of |D u|^2` for a packed velocity.
    pub fn viscous_dissipation(&self, u: &[f64], scratch: &mut Vec<f64>) -> f64 {
        let n = self.n;
        scratch.resize(3 * n, 0.0);
        self.def_v.mul(u, scratch);
        let w = &self.w;
        let s = &*scratch;
        4.0 * par::sum_indexed(3 * n, |r| {
            let node = r % n;
            let wt = if r / n == 1 { 2.0 * w[node] } else { w[node] };
            wt * s[r] * s[r]
        })
    }

    /// Contravariant components `u . grad(xi_m)` per owned node.
    pub fn contravariant(&self, u: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let n = self.n;
        let mut c1 = vec![0.0; n];
        let mut c2 = vec![0.0; n];
        for o in 0..n {
            c1[o] = u[o] * self.ixj_owned[0][o] + u[n + o] * self.ixj_owned[1][o];
            c2[o] = u[o] * self.ixj_owned[2][o] + u[n + o] * self.ixj_owned[3][o];
        }
        (c1, c2)
    }

    /// Skew-symmetrized advection `A(b) f` with transport velocity `b`:
    /// `A = (C - C^*)/2` where `C f = b^m K_m f` and `C^*` is its exact
    /// weighted adjoint, so `<A f, f>_w = 0` to roundoff.
    pub fn skew_advect(&self, b: &[f64], f: &[f64], scratch: &mut SkewScratch) -> Vec<f64> {
        let n = self.n;
        let (c1, c2) = self.contravariant(b);
        let m = 2 * n;
        scratch.k1f.resize(m, 0.0);
        scratch.k2f.resize(m, 0.0);
        scratch.g1.resize(m, 0.0);
        scratch.g2.resize(m, 0.0);
        scratch.t1.resize(m, 0.0);
        scratch.t2.resize(m, 0.0);
        self.k1_v.mul(f, &mut scratch.k1f);
        self.k2_v.mul(f, &mut scratch.k2f);
        let w2 = &self.w2;
        for r in 0..m {
            let node = r % n;
            scratch.g1[r] = w2[r] * c1[node] * f[r];
            scratch.g2[r] = w2[r] * c2[node] * f[r];
        }
        self.k1_vt.mul(&scratch.g1, &mut scratch.t1);
        self.k2_vt.mul(&scratch.g2, &mut scratch.t2);
        let mut out = vec![0.0; m];
        for r in 0..m {
            let node = r % n;
            let cf = c1[node] * scratch.k1f[r] + c2[node] * scratch.k2f[r];
            let cstar = -(scratch.t1[r] + scratch.t2[r]) / w2[r];
            out[r] = 0.5 * (cf - cstar);
        }
        out
    }
}

#[derive(Default)]
pub struct SkewScratch {
    k1f: Vec<f64>,
    k2f: Vec<f64>,
    g1: Vec<f64>,
    g2: Vec<f64>,
    t1: Vec<f64>,
    t2: Vec<f64>,
}

fn sparse_dot(a: &Csr, ra: usize, b: &Csr, rb: usize) -> f64 {
    let (mut i, mut j) = (a.row_ptr[ra], b.row_ptr[rb]);
    let (ei, ej) = (a.row_ptr[ra + 1], b.row_ptr[rb + 1]);
    let mut s = 0.0;
    while i < ei && j < ej {
        match a.col_idx[i].cmp(&b.col_idx[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                s += a.values[i] * b.values[j];
                i += 1;
                j += 1;
            }
        }
    }
    s
}

/// Pushes `coeff * slot` expanded into owned scalar DOFs.
fn push_scalar(b: &mut CsrBuilder, row: usize, exp: &ScalarExpansion, slot: usize, coeff: f64) {
    if coeff == 0.0 {
        return;
    }
    for &(dof, w) in &exp.terms[slot] {
        b.push(row, dof as usize, coeff * w);
    }
}

fn push_vel(b: &mut CsrBuilder, row: usize, exp: &VelocityExpansion, slot: usize, comp: usize, coeff: f64) {
    if coeff == 0.0 {
        return;
    }
    for &(dof, w) in &exp.terms[slot][comp] {
        b.push(row, dof as usize, coeff * w);
    }
}

fn assemble_grad(grid: &Grid, exp: &ScalarExpansion) -> Csr {
    let n = grid.n_owned();
    let s = grid.stride();
    let mut b = CsrBuilder::new(2 * n, n);
    for i in 0..grid.n1 {
        for j in 0..grid.n2 {
            let p = grid.pidx(i as isize, j as isize);
            let o = grid.oidx(i, j);
            for comp in 0..2 {
                let row = comp * n + o;
                let c1 = grid.ixj[comp][p] / (2.0 * grid.h1);
                let c2 = grid.ixj[2 + comp][p] / (2.0 * grid.h2);
                push_scalar(&mut b, row, exp, p + s, c1);
                push_scalar(&mut b, row, exp, p - s, -c1);
                push_scalar(&mut b, row, exp, p + 1, c2);
                push_scalar(&mut b, row, exp, p - 1, -c2);
            }
        }
    }
    b.build()
}

fn assemble_div(grid: &Grid, exp: &VelocityExpansion) -> Csr {
    let n = grid.n_owned();
    let s = grid.stride();
    let mut b = CsrBuilder::new(n, 2 * n);
    for i in 0..grid.n1 {
        for j in 0..grid.n2 {
            let p = grid.pidx(i as isize, j as isize);
            let row = grid.oidx(i, j);
            for comp in 0..2 {
                let c1 = grid.ixj[comp][p] / (2.0 * grid.h1);
                let c2 = grid.ixj[2 + comp][p] / (2.0 * grid.h2);
                push_vel(&mut b, row, exp, p + s, comp, c1);
                push_vel(&mut b, row, exp, p - s, comp, -c1);
                push_vel(&mut b, row, exp, p + 1, comp, c2);
                push_vel(&mut b, row, exp, p - 1, comp, -c2);
            }
        }
    }
    b.build()
}

/// Deformation rows packed `[xx(n), xy(n), yy(n)]`.
fn assemble_def(grid: &Grid, exp: &VelocityExpansion) -> Csr {
    let n = grid.n_owned();
    let s = grid.stride();
    let mut b = CsrBuilder::new(3 * n, 2 * n);
    for i in 0..grid.n1 {
        for j in 0..grid.n2 {
            let p = grid.pidx(i as isize, j as isize);
            let o = grid.oidx(i, j);
            if !grid.orthogonal {
                // symmetrized chain-rule gradient
                for (block, comps) in [(0, (0usize, 0usize)), (2, (1, 1))] {
                    let row = block * n + o;
                    let comp = comps.0;
                    let cart = comp; // d comp / d x_comp
                    let c1 = grid.ixj[cart][p] / (2.0 * grid.h1);
                    let c2 = grid.ixj[2 + cart][p] / (2.0 * grid.h2);
                    push_vel(&mut b, row, exp, p + s, comp, c1);
                    push_vel(&mut b, row, exp, p - s, comp, -c1);
                    push_vel(&mut b, row, exp, p + 1, comp, c2);
                    push_vel(&mut b, row, exp, p - 1, comp, -c2);
                }
                // xy = (du0/dy + du1/dx)/2
                let row = n + o;
                for (comp, cart) in [(0usize, 1usize), (1, 0)] {
                    let c1 = 0.5 * grid.ixj[cart][p] / (2.0 * grid.h1);
                    let c2 = 0.5 * grid.ixj[2 + cart][p] / (2.0 * grid.h2);
                    push_vel(&mut b, row, exp, p + s, comp, c1);
                    push_vel(&mut b, row, exp, p - s, comp, -c1);
                    push_vel(&mut b, row, exp, p + 1, comp, c2);
                    push_vel(&mut b, row, exp, p - 1, comp, -c2);
                }
                continue;
            }

            // orthonormal frame form; see operators::deformation_at
            let (h1, h2) = (grid.h1, grid.h2);
            let (h1s, h2s) = (grid.h1s[p], grid.h2s[p]);
            let (ax, ay) = (grid.e1[0][p], grid.e1[1][p]);
            let (bx, by) = (grid.e2[0][p], grid.e2[1][p]);
            // frame-tensor entries as lin. combos: list of (slot, frame_comp, coeff)
            // frame_comp 0 = v1 = u.e1(slot), 1 = v2 = u.e2(slot)
            let d11 = [
                (p + s, 0, 1.0 / (2.0 * h1 * h1s)),
                (p - s, 0, -1.0 / (2.0 * h1 * h1s)),
                (p, 1, grid.dh1_d2[p] / (h1s * h2s)),
            ];
            let d22 = [
                (p + 1, 1, 1.0 / (2.0 * h2 * h2s)),
                (p - 1, 1, -1.0 / (2.0 * h2 * h2s)),
                (p, 0, grid.dh2_d1[p] / (h1s * h2s)),
            ];
            let d12 = [
                (p + s, 1, 0.5 * (h2s / h1s) / (2.0 * h1) / grid.h2s[p + s]),
                (p - s, 1, -0.5 * (h2s / h1s) / (2.0 * h1) / grid.h2s[p - s]),
                (p + 1, 0, 0.5 * (h1s / h2s) / (2.0 * h2) / grid.h1s[p + 1]),
                (p - 1, 0, -0.5 * (h1s / h2s) / (2.0 * h2) / grid.h1s[p - 1]),
            ];
            // cartesian rows: xx, xy, yy with rotation coefficients
            let rot = [
                [ax * ax, 2.0 * ax * bx, bx * bx],
                [ax * ay, ax * by + ay * bx, bx * by],
                [ay * ay, 2.0 * ay * by, by * by],
            ];
            for (block, r) in rot.iter().enumerate() {
                let row = block * n + o;
                for (set, rc) in [(&d11[..], r[0]), (&d12[..], r[1]), (&d22[..], r[2])] {
                    for &(slot, fc, c) in set {
                        let ev = if fc == 0 { &grid.e1 } else { &grid.e2 };
                        push_vel(&mut b, row, exp, slot, 0, rc * c * ev[0][slot]);
                        push_vel(&mut b, row, exp, slot, 1, rc * c * ev[1][slot]);
                    }
                }
            }
        }
    }
    b.build()
}

fn assemble_lap(grid: &Grid, exp: &ScalarExpansion, dirichlet: bool) -> Csr {
    let n = grid.n_owned();
    let s = grid.stride();
    let mut b = CsrBuilder::new(n, n);
    for i in 0..grid.n1 {
        for j in 0..grid.n2 {
            let p = grid.pidx(i as isize, j as isize);
            let row = grid.oidx(i, j);
            if dirichlet && grid.boundary_of[p] >= 0 {
                continue; // constrained row, handled by the caller
            }
            let g0 = grid.gup[0][p] / (grid.h1 * grid.h1);
            let g2 = grid.gup[2][p] / (grid.h2 * grid.h2);
            let gx = 2.0 * grid.gup[1][p] / (4.0 * grid.h1 * grid.h2);
            let l1 = grid.lap1[p] / (2.0 * grid.h1);
            let l2 = grid.lap2[p] / (2.0 * grid.h2);
            push_scalar(&mut b, row, exp, p, -2.0 * (g0 + g2));
            push_scalar(&mut b, row, exp, p + s, g0 + l1);
            push_scalar(&mut b, row, exp, p - s, g0 - l1);
            push_scalar(&mut b, row, exp, p + 1, g2 + l2);
            push_scalar(&mut b, row, exp, p - 1, g2 - l2);
            if gx != 0.0 {
                push_scalar(&mut b, row, exp, p + s + 1, gx);
                push_scalar(&mut b, row, exp, p + s - 1, -gx);
                push_scalar(&mut b, row, exp, p - s + 1, -gx);
                push_scalar(&mut b, row, exp, p - s - 1, gx);
            }
        }
    }
    b.build()
}

/// Central logical difference along axis `axis` applied to both velocity
/// components, with the Navier fill folded in.
fn assemble_kd(grid: &Grid, exp: &VelocityExpansion, axis: usize) -> Csr {
    let n = grid.n_owned();
    let s = grid.stride();
    let (step, h) = if axis == 0 { (s, grid.h1) } else { (1, grid.h2) };
    let mut b = CsrBuilder::new(2 * n, 2 * n);
    for i in 0..grid.n1 {
        for j in 0..grid.n2 {
            let p = grid.pidx(i as isize, j as isize);
            let o = grid.oidx(i, j);
            for comp in 0..2 {
                let row = comp * n + o;
                push_vel(&mut b, row, exp, p + step, comp, 1.0 / (2.0 * h));
                push_vel(&mut b, row, exp, p - step, comp, -1.0 / (2.0 * h));
            }
        }
    }
    b.build()
}

/// Packs a scalar field into owned DOF order.
pub fn pack_scalar(grid: &Grid, f: &crate::fields::ScalarField) -> Vec<f64> {
    let mut v = vec![0.0; grid.n_owned()];
    for i in 0..grid.n1 {
        for j in 0..grid.n2 {
            v[grid.oidx(i, j)] = f.a[grid.pidx(i as isize, j as isize)];
        }
    }
    v
}

pub fn unpack_scalar(grid: &Grid, v: &[f64], f: &mut crate::fields::ScalarField) {
    for i in 0..grid.n1 {
        for j in 0..grid.n2 {
            f.a[grid.pidx(i as isize, j as isize)] = v[grid.oidx(i, j)];
        }
    }
    f.ghosts = crate::fields::GhostState::Invalid;
}

pub fn pack_vector(grid: &Grid, u: &crate::fields::VectorField) -> Vec<f64> {
    let n = grid.n_owned();
    let mut v = vec![0.0; 2 * n];
    for i in 0..grid.n1 {
        for j in 0..grid.n2 {
            let p = grid.pidx(i as isize, j as isize);
            let o = grid.oidx(i, j);
            v[o] = u.c[0][p];
            v[n + o] = u.c[1][p];
        }
    }
    v
}

pub fn unpack_vector(grid: &Grid, v: &[f64], u: &mut crate::fields::VectorField) {
    let n = grid.n_owned();
    for i in 0..grid.n1 {
        for j in 0..grid.n2 {
            let p = grid.pidx(i as isize, j as isize);
            let o = grid.oidx(i, j);
            u.c[0][p] = v[o];
            u.c[1][p] = v[n + o];
        }
    }
    u.ghosts = crate::fields::GhostState::Invalid;
}
