//! Bilinear quadrilateral finite elements: dof maps, 2x2 Gauss quadrature,
//! element geometry, global sparse assembly, and symmetric Dirichlet
//! elimination.
//!
//! Assembly loops run in ascending element order with ascending local-dof
//! insertion and mirror local upper triangles, so assembled operators are
//! bit-reproducible and exactly symmetric.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::linsolve::CsrMatrix;
use crate::material::SymTensor;
use crate::mesh::Mesh;

#[derive(Debug, Error)]
pub enum FemError {
    #[error("conflicting Dirichlet values {existing} and {new} on dof {dof}")]
    ConflictingConstraint { dof: usize, existing: f64, new: f64 },
    #[error("constrained dof {dof} out of range (system has {n_dofs} dofs)")]
    ConstraintOutOfRange { dof: usize, n_dofs: usize },
    #[error("element {element} has a singular jacobian")]
    SingularJacobian { element: usize },
}

/// Field layout on mesh nodes.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FieldKind {
    Scalar,
    Vector2,
}

/// Node-to-dof map. Dofs are contiguous and 0-based: scalar fields use the
/// node id, vector fields interleave as (2i, 2i+1).
#[derive(Clone, Copy, Debug)]
pub struct DofMap {
    pub kind: FieldKind,
    pub n_nodes: usize,
}

impl DofMap {
    pub fn scalar(mesh: &Mesh) -> Self {
        DofMap { kind: FieldKind::Scalar, n_nodes: mesh.num_nodes() }
    }

    pub fn vector(mesh: &Mesh) -> Self {
        DofMap { kind: FieldKind::Vector2, n_nodes: mesh.num_nodes() }
    }

    pub fn components(&self) -> usize {
        match self.kind {
            FieldKind::Scalar => 1,
            FieldKind::Vector2 => 2,
        }
    }

    pub fn n_dofs(&self) -> usize {
        self.components() * self.n_nodes
    }

    pub fn dof(&self, node: usize, component: usize) -> usize {
        debug_assert!(component < self.components());
        self.components() * node + component
    }
}

/// Quadrature on the reference square [-1,1]^2.
#[derive(Clone, Debug)]
pub struct QuadratureRule {
    pub points: Vec<[f64; 2]>,
    pub weights: Vec<f64>,
}

impl QuadratureRule {
    /// 2x2 Gauss rule, exact for bilinear x bilinear products.
    pub fn gauss2() -> Self {
        let g = 1.0 / f64::sqrt(3.0);
        QuadratureRule {
            points: vec![[-g, -g], [g, -g], [g, g], [-g, g]],
            weights: vec![1.0; 4],
        }
    }
}

/// Bilinear shape values and reference gradients at a point of [-1,1]^2.
/// Local nodes run counterclockwise from (-1,-1).
pub fn shape_eval(xi: f64, eta: f64) -> ([f64; 4], [[f64; 2]; 4]) {
    let values = [
        0.25 * (1.0 - xi) * (1.0 - eta),
        0.25 * (1.0 + xi) * (1.0 - eta),
        0.25 * (1.0 + xi) * (1.0 + eta),
        0.25 * (1.0 - xi) * (1.0 + eta),
    ];
    let grads = [
        [-0.25 * (1.0 - eta), -0.25 * (1.0 - xi)],
        [0.25 * (1.0 - eta), -0.25 * (1.0 + xi)],
        [0.25 * (1.0 + eta), 0.25 * (1.0 + xi)],
        [-0.25 * (1.0 + eta), 0.25 * (1.0 - xi)],
    ];
    (values, grads)
}

/// Shape data pushed forward to one physical quadrature point.
#[derive(Clone, Copy, Debug)]
pub struct QpData {
    pub shape: [f64; 4],
    /// Physical gradients of the four shape functions.
    pub grads: [[f64; 2]; 4],
    /// Quadrature weight times jacobian determinant.
    pub w_det: f64,
    /// Physical coordinates of the point.
    pub xy: [f64; 2],
}

impl QpData {
    /// Interpolates a nodal scalar field at this point.
    pub fn interp(&self, conn: &[usize; 4], field: &[f64]) -> f64 {
        (0..4).map(|a| self.shape[a] * field[conn[a]]).sum()
    }

    /// Gradient of a nodal scalar field at this point.
    pub fn interp_grad(&self, conn: &[usize; 4], field: &[f64]) -> [f64; 2] {
        let mut g = [0.0; 2];
        for a in 0..4 {
            g[0] += self.grads[a][0] * field[conn[a]];
            g[1] += self.grads[a][1] * field[conn[a]];
        }
        g
    }

    /// Symmetric gradient of a nodal displacement field at this point.
    pub fn strain(&self, conn: &[usize; 4], u: &[f64]) -> SymTensor {
        let mut e = SymTensor::ZERO;
        for a in 0..4 {
            let (ux, uy) = (u[2 * conn[a]], u[2 * conn[a] + 1]);
            let [gx, gy] = self.grads[a];
            e.xx += gx * ux;
            e.yy += gy * uy;
            e.xy += 0.5 * (gy * ux + gx * uy);
        }
        e
    }
}

fn qp_data_at(coords: &[[f64; 2]; 4], xi: f64, eta: f64, weight: f64) -> Option<QpData> {
    let (shape, ref_grads) = shape_eval(xi, eta);
    let mut j = [[0.0f64; 2]; 2];
    let mut xy = [0.0f64; 2];
    for a in 0..4 {
        j[0][0] += ref_grads[a][0] * coords[a][0];
        j[0][1] += ref_grads[a][0] * coords[a][1];
        j[1][0] += ref_grads[a][1] * coords[a][0];
        j[1][1] += ref_grads[a][1] * coords[a][1];
        xy[0] += shape[a] * coords[a][0];
        xy[1] += shape[a] * coords[a][1];
    }
    let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
    if det <= 0.0 || !det.is_finite() {
        return None;
    }
    let inv_det = 1.0 / det;
    let mut grads = [[0.0f64; 2]; 4];
    for a in 0..4 {
        let [gxi, geta] = ref_grads[a];
        grads[a][0] = (j[1][1] * gxi - j[0][1] * geta) * inv_det;
        grads[a][1] = (-j[1][0] * gxi + j[0][0] * geta) * inv_det;
    }
    Some(QpData { shape, grads, w_det: weight * det, xy })
}

/// Pushed-forward 2x2 Gauss data for one element. Panics on degenerate
/// geometry; meshes are validated before assembly.
pub fn element_qps(mesh: &Mesh, el: usize) -> [QpData; 4] {
    let coords = mesh.element_coords(el);
    let rule = gauss2_points();
    let mut out = [QpData { shape: [0.0; 4], grads: [[0.0; 2]; 4], w_det: 0.0, xy: [0.0; 2] }; 4];
    for (qp, point) in rule.iter().enumerate() {
        out[qp] = qp_data_at(&coords, point[0], point[1], 1.0)
            .unwrap_or_else(|| panic!("degenerate element {el}"));
    }
    out
}

fn gauss2_points() -> [[f64; 2]; 4] {
    let g = 1.0 / f64::sqrt(3.0);
    [[-g, -g], [g, -g], [g, g], [-g, g]]
}

/// Strain tensor of a displacement field at one reference point of one
/// element.
pub fn strain_at_qp(mesh: &Mesh, el: usize, xi: f64, eta: f64, u: &[f64]) -> Result<SymTensor, FemError> {
    let coords = mesh.element_coords(el);
    let qp = qp_data_at(&coords, xi, eta, 1.0).ok_or(FemError::SingularJacobian { element: el })?;
    Ok(qp.strain(&mesh.elements[el], u))
}

/// Sparsity pattern of a nodal operator: nodes couple when they share an
/// element.
pub fn scalar_pattern(mesh: &Mesh) -> CsrMatrix {
    let mut rows: Vec<Vec<usize>> = vec![Vec::new(); mesh.num_nodes()];
    for conn in &mesh.elements {
        for &a in conn {
            rows[a].extend_from_slice(conn);
        }
    }
    CsrMatrix::from_pattern(rows)
}

/// Pattern of a 2-component vector operator (2x2 blocks of the scalar one).
pub fn vector_pattern(mesh: &Mesh) -> CsrMatrix {
    let mut rows: Vec<Vec<usize>> = vec![Vec::new(); 2 * mesh.num_nodes()];
    for conn in &mesh.elements {
        for &a in conn {
            for ca in 0..2 {
                let row = &mut rows[2 * a + ca];
                for &b in conn {
                    row.push(2 * b);
                    row.push(2 * b + 1);
                }
            }
        }
    }
    CsrMatrix::from_pattern(rows)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ScalarKind {
    Mass,
    Stiffness,
}

/// Assembles a scalar mass or stiffness matrix with a per-quadrature-point
/// coefficient.
pub fn assemble_bilinear_scalar(
    mesh: &Mesh,
    kind: ScalarKind,
    mut coeff: impl FnMut(usize, usize, &QpData) -> f64,
) -> CsrMatrix {
    let mut a = scalar_pattern(mesh);
    assemble_bilinear_scalar_into(mesh, kind, &mut coeff, &mut a);
    a
}

/// Same as [`assemble_bilinear_scalar`] but accumulates into an existing
/// matrix with the scalar pattern.
pub fn assemble_bilinear_scalar_into(
    mesh: &Mesh,
    kind: ScalarKind,
    coeff: &mut impl FnMut(usize, usize, &QpData) -> f64,
    a: &mut CsrMatrix,
) {
    for el in 0..mesh.num_elements() {
        let conn = mesh.elements[el];
        let qps = element_qps(mesh, el);
        let mut local = [[0.0f64; 4]; 4];
        for (iq, qp) in qps.iter().enumerate() {
            let c = coeff(el, iq, qp) * qp.w_det;
            for i in 0..4 {
                for j in i..4 {
                    let v = match kind {
                        ScalarKind::Mass => qp.shape[i] * qp.shape[j],
                        ScalarKind::Stiffness => {
                            qp.grads[i][0] * qp.grads[j][0] + qp.grads[i][1] * qp.grads[j][1]
                        }
                    };
                    local[i][j] += c * v;
                }
            }
        }
        for i in 0..4 {
            for j in 0..4 {
                let v = if j >= i { local[i][j] } else { local[j][i] };
                a.add_entry(conn[i], conn[j], v);
            }
        }
    }
}

/// Consistent mass matrix of a 2-component vector field.
pub fn assemble_vector_mass(mesh: &Mesh) -> CsrMatrix {
    let mut a = vector_pattern(mesh);
    for el in 0..mesh.num_elements() {
        let conn = mesh.elements[el];
        let qps = element_qps(mesh, el);
        let mut local = [[0.0f64; 4]; 4];
        for qp in &qps {
            for i in 0..4 {
                for j in i..4 {
                    local[i][j] += qp.w_det * qp.shape[i] * qp.shape[j];
                }
            }
        }
        for i in 0..4 {
            for j in 0..4 {
                let v = if j >= i { local[i][j] } else { local[j][i] };
                a.add_entry(2 * conn[i], 2 * conn[j], v);
                a.add_entry(2 * conn[i] + 1, 2 * conn[j] + 1, v);
            }
        }
    }
    a
}

/// Assembles the elasticity operator from a per-point Voigt tangent
/// (mapping (e_xx, e_yy, gamma_xy) to (s_xx, s_yy, s_xy)).
pub fn assemble_elasticity(
    mesh: &Mesh,
    mut tangent: impl FnMut(usize, usize, &QpData) -> [[f64; 3]; 3],
) -> CsrMatrix {
    let mut a = vector_pattern(mesh);
    assemble_elasticity_into(mesh, &mut tangent, &mut a);
    a
}

/// Accumulates the elasticity operator into an existing matrix with the
/// vector pattern.
pub fn assemble_elasticity_into(
    mesh: &Mesh,
    tangent: &mut impl FnMut(usize, usize, &QpData) -> [[f64; 3]; 3],
    a: &mut CsrMatrix,
) {
    for el in 0..mesh.num_elements() {
        let conn = mesh.elements[el];
        let qps = element_qps(mesh, el);
        let mut local = [[0.0f64; 8]; 8];
        for (iq, qp) in qps.iter().enumerate() {
            let d = tangent(el, iq, qp);
            for i in 0..4 {
                let [gxi, gyi] = qp.grads[i];
                // Rows of B_i^T D for the two components of node i.
                let rx = [
                    gxi * d[0][0] + gyi * d[2][0],
                    gxi * d[0][1] + gyi * d[2][1],
                    gxi * d[0][2] + gyi * d[2][2],
                ];
                let ry = [
                    gyi * d[1][0] + gxi * d[2][0],
                    gyi * d[1][1] + gxi * d[2][1],
                    gyi * d[1][2] + gxi * d[2][2],
                ];
                for j in 0..4 {
                    let [gxj, gyj] = qp.grads[j];
                    let (ii, jj) = (2 * i, 2 * j);
                    if jj + 1 >= ii {
                        local[ii][jj] += qp.w_det * (rx[0] * gxj + rx[2] * gyj);
                        local[ii][jj + 1] += qp.w_det * (rx[1] * gyj + rx[2] * gxj);
                        local[ii + 1][jj] += qp.w_det * (ry[0] * gxj + ry[2] * gyj);
                        local[ii + 1][jj + 1] += qp.w_det * (ry[1] * gyj + ry[2] * gxj);
                    }
                }
            }
        }
        for li in 0..8 {
            for lj in 0..8 {
                // Mirror the strict lower triangle for exact symmetry.
                let v = if lj >= li { local[li][lj] } else { local[lj][li] };
                let gi = 2 * conn[li / 2] + li % 2;
                let gj = 2 * conn[lj / 2] + lj % 2;
                a.add_entry(gi, gj, v);
            }
        }
    }
}

/// Quadrature point on a boundary face.
#[derive(Clone, Copy, Debug)]
pub struct FaceQp {
    pub data: QpData,
    /// Outward unit normal.
    pub normal: [f64; 2],
    /// Arc-length weight (gauss weight times |dx/ds|).
    pub ds: f64,
}

/// Two-point Gauss quadrature along one element edge. Edges are traversed
/// counterclockwise, so the outward normal is the tangent rotated by -90
/// degrees.
pub fn face_qps(mesh: &Mesh, el: usize, edge: usize) -> [FaceQp; 2] {
    let coords = mesh.element_coords(el);
    let g = 1.0 / f64::sqrt(3.0);
    let mut out = [FaceQp { data: QpData { shape: [0.0; 4], grads: [[0.0; 2]; 4], w_det: 0.0, xy: [0.0; 2] }, normal: [0.0; 2], ds: 0.0 }; 2];
    for (k, s) in [-g, g].into_iter().enumerate() {
        let (point, ref_dir): ([f64; 2], [f64; 2]) = match edge {
            0 => ([s, -1.0], [1.0, 0.0]),
            1 => ([1.0, s], [0.0, 1.0]),
            2 => ([-s, 1.0], [-1.0, 0.0]),
            _ => ([-1.0, -s], [0.0, -1.0]),
        };
        let data = qp_data_at(&coords, point[0], point[1], 1.0)
            .unwrap_or_else(|| panic!("degenerate element {el}"));
        // Physical edge tangent dx/ds from the reference jacobian.
        let (_, ref_grads) = shape_eval(point[0], point[1]);
        let mut tangent = [0.0f64; 2];
        for a in 0..4 {
            let dn_ds = ref_grads[a][0] * ref_dir[0] + ref_grads[a][1] * ref_dir[1];
            tangent[0] += dn_ds * coords[a][0];
            tangent[1] += dn_ds * coords[a][1];
        }
        let len = (tangent[0] * tangent[0] + tangent[1] * tangent[1]).sqrt();
        out[k] = FaceQp {
            data,
            normal: [tangent[1] / len, -tangent[0] / len],
            ds: len,
        };
    }
    out
}

/// Maximum Frobenius norm of the strain over all element quadrature points,
/// the discrete surrogate for the essential supremum of |e(u)|.
pub fn max_strain_norm(mesh: &Mesh, u: &[f64]) -> f64 {
    let mut sup: f64 = 0.0;
    for el in 0..mesh.num_elements() {
        let conn = mesh.elements[el];
        for qp in element_qps(mesh, el) {
            sup = sup.max(qp.strain(&conn, u).norm());
        }
    }
    sup
}

/// Nodal internal force vector of a stress field: f_a = int B_a^T sigma.
pub fn internal_forces(
    mesh: &Mesh,
    mut stress: impl FnMut(usize, usize, &QpData) -> SymTensor,
) -> Vec<f64> {
    let mut f = vec![0.0; 2 * mesh.num_nodes()];
    for el in 0..mesh.num_elements() {
        let conn = mesh.elements[el];
        let qps = element_qps(mesh, el);
        for (iq, qp) in qps.iter().enumerate() {
            let s = stress(el, iq, qp);
            for a in 0..4 {
                let [gx, gy] = qp.grads[a];
                f[2 * conn[a]] += qp.w_det * (gx * s.xx + gy * s.xy);
                f[2 * conn[a] + 1] += qp.w_det * (gy * s.yy + gx * s.xy);
            }
        }
    }
    f
}

/// Nodal load vector of a scalar density: l_a = int f psi_a.
pub fn assemble_scalar_load(mesh: &Mesh, mut f: impl FnMut(usize, usize, &QpData) -> f64) -> Vec<f64> {
    let mut l = vec![0.0; mesh.num_nodes()];
    for el in 0..mesh.num_elements() {
        let conn = mesh.elements[el];
        let qps = element_qps(mesh, el);
        for (iq, qp) in qps.iter().enumerate() {
            let v = f(el, iq, qp) * qp.w_det;
            for a in 0..4 {
                l[conn[a]] += v * qp.shape[a];
            }
        }
    }
    l
}

/// Scalar weak-form residual: r_a = int (val psi_a + vec . grad psi_a) with
/// (val, vec) supplied per quadrature point.
pub fn assemble_scalar_residual(
    mesh: &Mesh,
    mut integrand: impl FnMut(usize, usize, &QpData) -> (f64, [f64; 2]),
) -> Vec<f64> {
    let mut r = vec![0.0; mesh.num_nodes()];
    for el in 0..mesh.num_elements() {
        let conn = mesh.elements[el];
        let qps = element_qps(mesh, el);
        for (iq, qp) in qps.iter().enumerate() {
            let (val, vec) = integrand(el, iq, qp);
            for a in 0..4 {
                r[conn[a]] += qp.w_det
                    * (val * qp.shape[a] + vec[0] * qp.grads[a][0] + vec[1] * qp.grads[a][1]);
            }
        }
    }
    r
}

/// A set of prescribed dof values. Re-prescribing a dof with the same value
/// is allowed (shared corner nodes); a different value is an error.
#[derive(Clone, Debug, Default)]
pub struct DirichletBc {
    entries: BTreeMap<usize, f64>,
}

impl DirichletBc {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn set(&mut self, dof: usize, value: f64) -> Result<(), FemError> {
        if let Some(&existing) = self.entries.get(&dof) {
            if existing != value {
                return Err(FemError::ConflictingConstraint { dof, existing, new: value });
            }
            return Ok(());
        }
        self.entries.insert(dof, value);
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.entries.iter().map(|(&d, &v)| (d, v))
    }

    pub fn mask(&self, n_dofs: usize) -> Vec<bool> {
        let mut m = vec![false; n_dofs];
        for &dof in self.entries.keys() {
            if dof < n_dofs {
                m[dof] = true;
            }
        }
        m
    }

    /// Writes the prescribed values into a solution vector.
    pub fn impose(&self, x: &mut [f64]) {
        for (&dof, &v) in &self.entries {
            x[dof] = v;
        }
    }
}

/// A linear system together with its right-hand side.
#[derive(Clone, Debug)]
pub struct SparseSystem {
    pub matrix: CsrMatrix,
    pub rhs: Vec<f64>,
}

/// Symmetric elimination of Dirichlet constraints: constrained rows and
/// columns reduce to the identity, and the right-hand side of the remaining
/// equations absorbs the prescribed values, so the solution satisfies the
/// constraints exactly and symmetry is preserved.
pub fn apply_dirichlet(system: &mut SparseSystem, bc: &DirichletBc) -> Result<(), FemError> {
    let n = system.matrix.n();
    for (dof, _) in bc.iter() {
        if dof >= n {
            return Err(FemError::ConstraintOutOfRange { dof, n_dofs: n });
        }
    }
    let mask = bc.mask(n);
    let values: Vec<f64> = {
        let mut v = vec![0.0; n];
        bc.impose(&mut v);
        v
    };
    for i in 0..n {
        if mask[i] {
            continue;
        }
        let (cols, vals) = system.matrix.row_mut(i);
        for (k, &j) in cols.iter().enumerate() {
            if mask[j] {
                system.rhs[i] -= vals[k] * values[j];
                vals[k] = 0.0;
            }
        }
    }
    for (dof, value) in bc.iter() {
        let (cols, vals) = system.matrix.row_mut(dof);
        for (k, &j) in cols.iter().enumerate() {
            vals[k] = if j == dof { 1.0 } else { 0.0 };
        }
        system.rhs[dof] = value;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linsolve::solve_spd;
    use crate::mesh::{build_notched_square, build_unit_square};
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    #[test]
    fn shape_values_frozen() {
        let (v, _) = shape_eval(0.0, 0.0);
        for x in v {
            assert_eq!(x, 0.25);
        }
        let (v, _) = shape_eval(-1.0, -1.0);
        assert_eq!(v, [1.0, 0.0, 0.0, 0.0]);
        // Tensor-product values at (0.3, -0.7), checked by hand.
        let (v, _) = shape_eval(0.3, -0.7);
        let expect = [0.2975, 0.5525, 0.0975, 0.0525];
        for (a, b) in v.iter().zip(expect) {
            assert!((a - b).abs() < 1e-15);
        }
        assert!((v.iter().sum::<f64>() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn partition_of_unity_random_points() {
        let mut rng = StdRng::seed_from_u64(21);
        for _ in 0..100 {
            let xi = rng.gen_range(-1.0..1.0);
            let eta = rng.gen_range(-1.0..1.0);
            let (v, g) = shape_eval(xi, eta);
            assert!((v.iter().sum::<f64>() - 1.0).abs() < 1e-14);
            let gx: f64 = g.iter().map(|gi| gi[0]).sum();
            let gy: f64 = g.iter().map(|gi| gi[1]).sum();
            assert!(gx.abs() < 1e-14 && gy.abs() < 1e-14);
        }
    }

    #[test]
    fn quadrature_weights_and_exactness() {
        let rule = QuadratureRule::gauss2();
        assert_eq!(rule.weights.iter().sum::<f64>(), 4.0);
        // Exact for the bilinear-squared integrand xi^2 eta^2.
        let num: f64 = rule
            .points
            .iter()
            .zip(&rule.weights)
            .map(|(p, w)| w * p[0] * p[0] * p[1] * p[1])
            .sum();
        assert!((num - 4.0 / 9.0).abs() < 1e-15);
    }

    #[test]
    fn strain_of_affine_fields() {
        let mesh = build_unit_square(1);
        let n = mesh.num_nodes();
        let mut u = vec![0.0; 2 * n];
        // u = (x, 0)
        for (i, p) in mesh.nodes.iter().enumerate() {
            u[2 * i] = p[0];
        }
        let e = strain_at_qp(&mesh, 2, 0.2, -0.4, &u).unwrap();
        assert!((e.xx - 1.0).abs() < 1e-14 && e.yy.abs() < 1e-14 && e.xy.abs() < 1e-14);
        // Rigid rotation: symmetric gradient vanishes.
        for (i, p) in mesh.nodes.iter().enumerate() {
            u[2 * i] = -0.3 * p[1];
            u[2 * i + 1] = 0.3 * p[0];
        }
        let e = strain_at_qp(&mesh, 1, -0.5, 0.5, &u).unwrap();
        assert!(e.norm() < 1e-14);
        // Diagonal stretch.
        for (i, p) in mesh.nodes.iter().enumerate() {
            u[2 * i] = 0.001 * p[0];
            u[2 * i + 1] = -0.0003 * p[1];
        }
        let e = strain_at_qp(&mesh, 0, 0.0, 0.0, &u).unwrap();
        assert!((e.xx - 0.001).abs() < 1e-16);
        assert!((e.yy + 0.0003).abs() < 1e-16);
        assert!(e.xy.abs() < 1e-18);
    }

    #[test]
    fn mass_matrix_sums_to_area() {
        let mesh = build_unit_square(2);
        let m = assemble_bilinear_scalar(&mesh, ScalarKind::Mass, |_, _, _| 1.0);
        let ones = vec![1.0; mesh.num_nodes()];
        let row_sums = m.matvec_alloc(&ones);
        let total: f64 = row_sums.iter().sum();
        assert!((total - 1.0).abs() < 1e-13);
        assert!(m.is_symmetric_exact());
    }

    #[test]
    fn stiffness_annihilates_constants() {
        let mesh = build_notched_square(2).unwrap();
        let k = assemble_bilinear_scalar(&mesh, ScalarKind::Stiffness, |_, _, _| 1.0);
        let ones = vec![1.0; mesh.num_nodes()];
        let r = k.matvec_alloc(&ones);
        for v in r {
            assert!(v.abs() < 1e-13);
        }
        assert!(k.is_symmetric_exact());
    }

    #[test]
    fn stiffness_center_diagonal_by_hand() {
        // 2x2-element unit square: the center node accumulates 2/3 from each
        // of its four elements.
        let mesh = build_unit_square(0);
        assert_eq!(mesh.num_elements(), 4);
        let k = assemble_bilinear_scalar(&mesh, ScalarKind::Stiffness, |_, _, _| 1.0);
        let center = mesh
            .nodes
            .iter()
            .position(|p| (p[0] - 0.5).abs() < 1e-12 && (p[1] - 0.5).abs() < 1e-12)
            .unwrap();
        assert!((k.get(center, center) - 8.0 / 3.0).abs() < 1e-14);
    }

    #[test]
    fn elasticity_matrix_symmetric() {
        let mesh = build_notched_square(2).unwrap();
        let d = crate::material::Tangent::isotropic(80.77, 121.15).voigt();
        let k = assemble_elasticity(&mesh, |_, _, _| d);
        assert!(k.is_symmetric_exact());
        // Rigid translation produces no forces.
        let mut u = vec![0.0; 2 * mesh.num_nodes()];
        for i in 0..mesh.num_nodes() {
            u[2 * i] = 1.0;
            u[2 * i + 1] = -2.0;
        }
        let f = k.matvec_alloc(&u);
        for v in f {
            assert!(v.abs() < 1e-9);
        }
    }

    #[test]
    fn dirichlet_identity_cases() {
        let mesh = build_unit_square(1);
        let n = mesh.num_nodes();
        let k = assemble_bilinear_scalar(&mesh, ScalarKind::Stiffness, |_, _, _| 1.0);
        let m = assemble_bilinear_scalar(&mesh, ScalarKind::Mass, |_, _, _| 1.0);
        let mut a = k.clone();
        a.add_scaled(&m, 1.0);

        // No constraints: unchanged.
        let mut sys = SparseSystem { matrix: a.clone(), rhs: vec![1.0; n] };
        apply_dirichlet(&mut sys, &DirichletBc::new()).unwrap();
        for i in 0..n {
            assert_eq!(sys.matrix.row(i).1, a.row(i).1);
        }

        // All dofs constrained to zero: solution is identically zero.
        let mut bc = DirichletBc::new();
        for i in 0..n {
            bc.set(i, 0.0).unwrap();
        }
        let mut sys = SparseSystem { matrix: a.clone(), rhs: vec![1.0; n] };
        apply_dirichlet(&mut sys, &bc).unwrap();
        let x = solve_spd(&sys.matrix, &sys.rhs, 1e-12).unwrap();
        for v in x {
            assert_eq!(v, 0.0);
        }
    }

    #[test]
    fn dirichlet_two_dof_hand_elimination() {
        // A = [[2,1],[1,2]], b = [3,3], constrain x0 = c = 0.5:
        // remaining equation 2 x1 = 3 - c.
        let mut a = CsrMatrix::from_pattern(vec![vec![0, 1], vec![0, 1]]);
        a.add_entry(0, 0, 2.0);
        a.add_entry(0, 1, 1.0);
        a.add_entry(1, 0, 1.0);
        a.add_entry(1, 1, 2.0);
        let mut sys = SparseSystem { matrix: a, rhs: vec![3.0, 3.0] };
        let mut bc = DirichletBc::new();
        bc.set(0, 0.5).unwrap();
        apply_dirichlet(&mut sys, &bc).unwrap();
        assert_eq!(sys.matrix.get(0, 0), 1.0);
        assert_eq!(sys.matrix.get(0, 1), 0.0);
        assert_eq!(sys.matrix.get(1, 0), 0.0);
        assert_eq!(sys.rhs, vec![0.5, 2.5]);
        let x = solve_spd(&sys.matrix, &sys.rhs, 1e-12).unwrap();
        assert_eq!(x[0], 0.5);
        assert!((x[1] - 1.25).abs() < 1e-15);
        assert!(sys.matrix.is_symmetric_exact());
    }

    #[test]
    fn conflicting_constraints_rejected() {
        let mut bc = DirichletBc::new();
        bc.set(3, 1.0).unwrap();
        bc.set(3, 1.0).unwrap();
        assert!(matches!(
            bc.set(3, 2.0),
            Err(FemError::ConflictingConstraint { dof: 3, .. })
        ));
    }

    #[test]
    fn dofmap_counts() {
        let mesh = build_notched_square(4).unwrap();
        let s = DofMap::scalar(&mesh);
        let v = DofMap::vector(&mesh);
        assert_eq!(v.n_dofs(), 2 * s.n_dofs());
        assert_eq!(s.n_dofs(), 1105);
        assert_eq!(v.dof(10, 1), 21);
    }
}
