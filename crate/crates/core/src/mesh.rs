//! Structured quadrilateral meshes for the benchmark geometries.
//!
//! Two families are provided: the unit square with an optional horizontal
//! slit (single edge notched tension/shear tests) and the L-shaped panel.
//! The slit is a true geometric discontinuity: every mesh node on the slit
//! segment except the tip is duplicated, elements below the slit reference
//! the lower copies and elements above the upper copies.
//!
//! Node and element numbering is fully deterministic so that assembled
//! systems and output files are bit-reproducible.

use std::collections::BTreeMap;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum MeshError {
    #[error("refinement level {0} cannot resolve the slit; need n_refine >= 1")]
    SlitNotResolvable(u32),
    #[error("element {element} has nonpositive jacobian {det:e}")]
    DegenerateElement { element: usize, det: f64 },
}

/// Geometric role of a boundary face.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum BoundaryTag {
    Bottom,
    Top,
    Left,
    Right,
    SlitLower,
    SlitUpper,
    /// Loaded section Gamma_u of the L-shaped panel.
    LShapeLoad,
    /// Clamped lower-left edge of the L-shaped panel.
    LShapeFixed,
    Free,
}

/// One tagged element edge on the mesh boundary. Local edge `e` connects
/// local nodes `e` and `(e+1) % 4` of the (counterclockwise) element.
#[derive(Clone, Copy, Debug)]
pub struct BoundaryFace {
    pub element: usize,
    pub edge: usize,
    pub tag: BoundaryTag,
}

#[derive(Clone, Debug)]
pub struct Mesh {
    pub nodes: Vec<[f64; 2]>,
    /// 4-node connectivity, counterclockwise.
    pub elements: Vec<[usize; 4]>,
    pub boundary_faces: Vec<BoundaryFace>,
    /// (lower-face node, upper-face node) for every duplicated slit node.
    pub slit_pairs: Vec<(usize, usize)>,
    h_max: f64,
    h_min: f64,
}

impl Mesh {
    /// Builds a mesh from raw connectivity; all boundary faces are tagged
    /// `Free`. Intended for small hand-made test meshes.
    pub fn from_raw(nodes: Vec<[f64; 2]>, elements: Vec<[usize; 4]>) -> Mesh {
        let mut mesh = Mesh {
            nodes,
            elements,
            boundary_faces: Vec::new(),
            slit_pairs: Vec::new(),
            h_max: 0.0,
            h_min: 0.0,
        };
        mesh.recompute_h();
        tag_boundary(&mut mesh, |_, _| BoundaryTag::Free);
        mesh
    }

    pub fn num_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn num_elements(&self) -> usize {
        self.elements.len()
    }

    /// Maximum element diameter (largest vertex-to-vertex distance).
    pub fn h(&self) -> f64 {
        self.h_max
    }

    /// Minimum element diameter. On graded meshes (the L-shaped panel) this
    /// is the conventional reported mesh size; equals `h()` on uniform grids.
    pub fn h_min(&self) -> f64 {
        self.h_min
    }

    pub fn element_coords(&self, el: usize) -> [[f64; 2]; 4] {
        let conn = self.elements[el];
        [
            self.nodes[conn[0]],
            self.nodes[conn[1]],
            self.nodes[conn[2]],
            self.nodes[conn[3]],
        ]
    }

    /// Global node ids of a local edge.
    pub fn face_nodes(&self, el: usize, edge: usize) -> (usize, usize) {
        let conn = self.elements[el];
        (conn[edge], conn[(edge + 1) % 4])
    }

    /// Sorted, deduplicated node ids lying on faces with the given tag.
    pub fn nodes_with_tag(&self, tag: BoundaryTag) -> Vec<usize> {
        let mut out = Vec::new();
        for bf in &self.boundary_faces {
            if bf.tag == tag {
                let (a, b) = self.face_nodes(bf.element, bf.edge);
                out.push(a);
                out.push(b);
            }
        }
        out.sort_unstable();
        out.dedup();
        out
    }

    pub fn has_tag(&self, tag: BoundaryTag) -> bool {
        self.boundary_faces.iter().any(|bf| bf.tag == tag)
    }

    fn element_centroid(&self, el: usize) -> [f64; 2] {
        let c = self.element_coords(el);
        [
            0.25 * (c[0][0] + c[1][0] + c[2][0] + c[3][0]),
            0.25 * (c[0][1] + c[1][1] + c[2][1] + c[3][1]),
        ]
    }

    fn element_diameter(&self, el: usize) -> f64 {
        let c = self.element_coords(el);
        let mut d2: f64 = 0.0;
        for i in 0..4 {
            for j in (i + 1)..4 {
                let dx = c[i][0] - c[j][0];
                let dy = c[i][1] - c[j][1];
                d2 = d2.max(dx * dx + dy * dy);
            }
        }
        d2.sqrt()
    }

    fn recompute_h(&mut self) {
        let mut hmax: f64 = 0.0;
        let mut hmin = f64::INFINITY;
        for el in 0..self.elements.len() {
            let d = self.element_diameter(el);
            hmax = hmax.max(d);
            hmin = hmin.min(d);
        }
        self.h_max = hmax;
        self.h_min = hmin;
    }

    /// Checks element orientation via the bilinear jacobian at the four
    /// corners (sufficient for convexity of straight-sided quads).
    pub fn validate(&self) -> Result<(), MeshError> {
        for (el, _) in self.elements.iter().enumerate() {
            let c = self.element_coords(el);
            for corner in 0..4 {
                let (xi, eta) = match corner {
                    0 => (-1.0, -1.0),
                    1 => (1.0, -1.0),
                    2 => (1.0, 1.0),
                    _ => (-1.0, 1.0),
                };
                let dn = bilinear_ref_gradients(xi, eta);
                let mut j = [[0.0f64; 2]; 2];
                for a in 0..4 {
                    j[0][0] += dn[a][0] * c[a][0];
                    j[0][1] += dn[a][0] * c[a][1];
                    j[1][0] += dn[a][1] * c[a][0];
                    j[1][1] += dn[a][1] * c[a][1];
                }
                let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
                if det <= 0.0 {
                    return Err(MeshError::DegenerateElement { element: el, det });
                }
            }
        }
        Ok(())
    }
}

fn bilinear_ref_gradients(xi: f64, eta: f64) -> [[f64; 2]; 4] {
    [
        [-0.25 * (1.0 - eta), -0.25 * (1.0 - xi)],
        [0.25 * (1.0 - eta), -0.25 * (1.0 + xi)],
        [0.25 * (1.0 + eta), 0.25 * (1.0 + xi)],
        [-0.25 * (1.0 + eta), 0.25 * (1.0 - xi)],
    ]
}

/// Tensor-product grid over the given break lines; `keep` selects cells by
/// their (left, bottom, right, top) extent.
fn tensor_grid(x_lines: &[f64], y_lines: &[f64], keep: impl Fn(f64, f64, f64, f64) -> bool) -> Mesh {
    let nx = x_lines.len();
    let ny = y_lines.len();
    let mut node_id = vec![usize::MAX; nx * ny];
    let mut nodes = Vec::new();
    let mut elements = Vec::new();
    // Nodes are numbered row-major over the kept region, elements row-major
    // over kept cells.
    let mut keep_cell = vec![false; (nx - 1) * (ny - 1)];
    for j in 0..ny - 1 {
        for i in 0..nx - 1 {
            if keep(x_lines[i], y_lines[j], x_lines[i + 1], y_lines[j + 1]) {
                keep_cell[j * (nx - 1) + i] = true;
            }
        }
    }
    for j in 0..ny {
        for i in 0..nx {
            // A grid point is kept when some kept cell touches it.
            let mut used = false;
            for (dj, di) in [(0usize, 0usize), (0, 1), (1, 0), (1, 1)] {
                if j >= dj && i >= di && j - dj < ny - 1 && i - di < nx - 1 {
                    used |= keep_cell[(j - dj) * (nx - 1) + (i - di)];
                }
            }
            if used {
                node_id[j * nx + i] = nodes.len();
                nodes.push([x_lines[i], y_lines[j]]);
            }
        }
    }
    for j in 0..ny - 1 {
        for i in 0..nx - 1 {
            if keep_cell[j * (nx - 1) + i] {
                elements.push([
                    node_id[j * nx + i],
                    node_id[j * nx + i + 1],
                    node_id[(j + 1) * nx + i + 1],
                    node_id[(j + 1) * nx + i],
                ]);
            }
        }
    }
    let mut mesh = Mesh {
        nodes,
        elements,
        boundary_faces: Vec::new(),
        slit_pairs: Vec::new(),
        h_max: 0.0,
        h_min: 0.0,
    };
    mesh.recompute_h();
    mesh
}

/// Duplicates the selected nodes and repoints elements on the `upper` side
/// to the new copies, turning the selected segment into a geometric cut.
fn cut_slit(mesh: &mut Mesh, on_slit: impl Fn(&[f64; 2]) -> bool, upper: impl Fn(&[f64; 2]) -> bool) {
    let targets: Vec<usize> = (0..mesh.nodes.len())
        .filter(|&n| on_slit(&mesh.nodes[n]))
        .collect();
    let mut pair_of = BTreeMap::new();
    for &n in &targets {
        let copy = mesh.nodes.len();
        mesh.nodes.push(mesh.nodes[n]);
        pair_of.insert(n, copy);
        mesh.slit_pairs.push((n, copy));
    }
    for el in 0..mesh.elements.len() {
        if !upper(&mesh.element_centroid(el)) {
            continue;
        }
        let conn = &mut mesh.elements[el];
        for slot in conn.iter_mut() {
            if let Some(&copy) = pair_of.get(slot) {
                *slot = copy;
            }
        }
    }
}

/// Detects boundary faces (edges adjacent to exactly one element) and tags
/// them through `tag(edge midpoint, element centroid)`.
fn tag_boundary(mesh: &mut Mesh, tag: impl Fn(&[f64; 2], &[f64; 2]) -> BoundaryTag) {
    let mut edge_count: BTreeMap<(usize, usize), u32> = BTreeMap::new();
    for conn in &mesh.elements {
        for e in 0..4 {
            let (a, b) = (conn[e], conn[(e + 1) % 4]);
            let key = (a.min(b), a.max(b));
            *edge_count.entry(key).or_insert(0) += 1;
        }
    }
    let mut faces = Vec::new();
    for (el, conn) in mesh.elements.iter().enumerate() {
        for e in 0..4 {
            let (a, b) = (conn[e], conn[(e + 1) % 4]);
            let key = (a.min(b), a.max(b));
            if edge_count[&key] == 1 {
                let mid = [
                    0.5 * (mesh.nodes[a][0] + mesh.nodes[b][0]),
                    0.5 * (mesh.nodes[a][1] + mesh.nodes[b][1]),
                ];
                let centroid = mesh.element_centroid(el);
                faces.push(BoundaryFace { element: el, edge: e, tag: tag(&mid, &centroid) });
            }
        }
    }
    mesh.boundary_faces = faces;
}

/// Unit square (0,1)^2 meshed by a 2^(n_refine+1) x 2^(n_refine+1) grid,
/// without a slit. Used by patch and contraction tests.
pub fn build_unit_square(n_refine: u32) -> Mesh {
    let m = 1usize << (n_refine + 1);
    let lines: Vec<f64> = (0..=m).map(|i| i as f64 / m as f64).collect();
    let mut mesh = tensor_grid(&lines, &lines, |_, _, _, _| true);
    let tol = 1e-9;
    tag_boundary(&mut mesh, |mid, _| {
        if mid[1] < tol {
            BoundaryTag::Bottom
        } else if mid[1] > 1.0 - tol {
            BoundaryTag::Top
        } else if mid[0] < tol {
            BoundaryTag::Left
        } else if mid[0] > 1.0 - tol {
            BoundaryTag::Right
        } else {
            BoundaryTag::Free
        }
    });
    mesh
}

/// Single-edge-notched unit square: horizontal slit along y = 1/2 for
/// 0 <= x <= 1/2, realized by duplicating every slit node left of the tip;
/// the tip node at (1/2, 1/2) stays single.
pub fn build_notched_square(n_refine: u32) -> Result<Mesh, MeshError> {
    if n_refine < 1 {
        return Err(MeshError::SlitNotResolvable(n_refine));
    }
    let mut mesh = build_unit_square(n_refine);
    let tol = 1e-9;
    cut_slit(
        &mut mesh,
        |p| (p[1] - 0.5).abs() < tol && p[0] < 0.5 - tol,
        |c| c[1] > 0.5,
    );
    tag_boundary(&mut mesh, |mid, centroid| {
        if (mid[1] - 0.5).abs() < tol && mid[0] < 0.5 {
            if centroid[1] < 0.5 {
                BoundaryTag::SlitLower
            } else {
                BoundaryTag::SlitUpper
            }
        } else if mid[1] < tol {
            BoundaryTag::Bottom
        } else if mid[1] > 1.0 - tol {
            BoundaryTag::Top
        } else if mid[0] < tol {
            BoundaryTag::Left
        } else if mid[0] > 1.0 - tol {
            BoundaryTag::Right
        } else {
            BoundaryTag::Free
        }
    });
    Ok(mesh)
}

/// L-shaped panel: 500 x 500 mm minus the closed upper-right quadrant. The
/// loaded section Gamma_u = {470 <= x <= 500, y = 250} is the top face of
/// the lower-right slab (the re-entrant corner (250, 250) lies on the same
/// line), and the bottom edge is clamped.
///
/// The 75-cell coarse grid resolves the 30 mm load strip with a dedicated
/// column: x breaks at 0,50,..,250,305,360,415,470,500 and y breaks every
/// 50 mm. Its smallest cells (30 x 50 next to Gamma_u) set the reported mesh
/// size: one refinement gives the conventional h = 29.1548 mm with exactly
/// 300 elements.
pub fn build_lshape(n_refine: u32) -> Mesh {
    let x_lines = [0.0, 50.0, 100.0, 150.0, 200.0, 250.0, 305.0, 360.0, 415.0, 470.0, 500.0];
    let y_lines = [0.0, 50.0, 100.0, 150.0, 200.0, 250.0, 300.0, 350.0, 400.0, 450.0, 500.0];
    let tol = 500.0 * 1e-9;
    let mut mesh = tensor_grid(&x_lines, &y_lines, |left, bottom, _right, _top| {
        // Remove the upper-right quadrant.
        !(left > 250.0 - tol && bottom > 250.0 - tol)
    });
    tag_boundary(&mut mesh, |mid, centroid| {
        if mid[1] < tol {
            BoundaryTag::LShapeFixed
        } else if (mid[1] - 250.0).abs() < tol && mid[0] > 470.0 - tol && centroid[1] < 250.0 {
            BoundaryTag::LShapeLoad
        } else {
            BoundaryTag::Free
        }
    });
    let mut mesh = mesh;
    for _ in 0..n_refine {
        mesh = refine_uniform(&mesh);
    }
    mesh
}

/// Uniform refinement: each quad splits into four through edge midpoints and
/// its centroid. Boundary tags are inherited by the child faces and slit
/// duplication propagates to the new midpoint nodes on the slit.
pub fn refine_uniform(mesh: &Mesh) -> Mesh {
    let mut nodes = mesh.nodes.clone();
    let mut midpoint: BTreeMap<(usize, usize), usize> = BTreeMap::new();
    for conn in &mesh.elements {
        for e in 0..4 {
            let (a, b) = (conn[e], conn[(e + 1) % 4]);
            let key = (a.min(b), a.max(b));
            midpoint.entry(key).or_insert_with(|| {
                let id = nodes.len();
                nodes.push([
                    0.5 * (nodes[a][0] + nodes[b][0]),
                    0.5 * (nodes[a][1] + nodes[b][1]),
                ]);
                id
            });
        }
    }
    let mut elements = Vec::with_capacity(4 * mesh.elements.len());
    for conn in &mesh.elements {
        let m = |a: usize, b: usize| midpoint[&(conn[a].min(conn[b]), conn[a].max(conn[b]))];
        let center = nodes.len();
        let c = [
            0.25 * (nodes[conn[0]][0] + nodes[conn[1]][0] + nodes[conn[2]][0] + nodes[conn[3]][0]),
            0.25 * (nodes[conn[0]][1] + nodes[conn[1]][1] + nodes[conn[2]][1] + nodes[conn[3]][1]),
        ];
        nodes.push(c);
        let (m01, m12, m23, m30) = (m(0, 1), m(1, 2), m(2, 3), m(3, 0));
        elements.push([conn[0], m01, center, m30]);
        elements.push([m01, conn[1], m12, center]);
        elements.push([center, m12, conn[2], m23]);
        elements.push([m30, center, m23, conn[3]]);
    }
    // Child faces of each tagged parent face, in parent-edge order.
    let mut boundary_faces = Vec::with_capacity(2 * mesh.boundary_faces.len());
    for bf in &mesh.boundary_faces {
        let base = 4 * bf.element;
        let (c0, c1) = match bf.edge {
            0 => (base, base + 1),
            1 => (base + 1, base + 2),
            2 => (base + 2, base + 3),
            _ => (base + 3, base),
        };
        boundary_faces.push(BoundaryFace { element: c0, edge: bf.edge, tag: bf.tag });
        boundary_faces.push(BoundaryFace { element: c1, edge: bf.edge, tag: bf.tag });
    }
    // Propagate slit pairing: the midpoint of a lower slit edge pairs with
    // the midpoint of the corresponding upper edge (partner endpoints, with
    // the shared tip mapping to itself).
    let mut partner: BTreeMap<usize, (usize, bool)> = BTreeMap::new();
    for &(lo, up) in &mesh.slit_pairs {
        partner.insert(lo, (up, true));
        partner.insert(up, (lo, false));
    }
    let mut slit_pairs = mesh.slit_pairs.clone();
    for (&(a, b), &mid_lo) in &midpoint {
        let pa = partner.get(&a);
        let pb = partner.get(&b);
        // Only edges with at least one duplicated endpoint can lie on the
        // slit; unpaired endpoints must be the shared tip.
        let lower_side = match (pa, pb) {
            (Some(&(_, la)), Some(&(_, lb))) => la && lb,
            (Some(&(_, la)), None) | (None, Some(&(_, la))) => la,
            (None, None) => continue,
        };
        if !lower_side {
            continue;
        }
        let qa = pa.map_or(a, |&(p, _)| p);
        let qb = pb.map_or(b, |&(p, _)| p);
        let key = (qa.min(qb), qa.max(qb));
        if let Some(&mid_up) = midpoint.get(&key) {
            if mid_up != mid_lo {
                slit_pairs.push((mid_lo, mid_up));
            }
        }
    }
    let mut out = Mesh {
        nodes,
        elements,
        boundary_faces,
        slit_pairs,
        h_max: 0.0,
        h_min: 0.0,
    };
    out.recompute_h();
    out
}
