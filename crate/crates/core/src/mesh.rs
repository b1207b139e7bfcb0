//! Cartesian cuboidal meshes, metric coefficients, degree-of-freedom
//! classification and the global numbering with gather/scatter for both the
//! full and the condensed system.

use crate::basis::Basis1D;
use crate::error::Error;
use crate::Result;

/// Mesh of `ne1 x ne2 x ne3` axis-aligned cuboids covering a box.
///
/// The element widths in each direction follow a geometric progression with
/// expansion factor `alpha`; `alpha = 1` gives uniform spacing.
#[derive(Debug, Clone)]
pub struct CartesianMesh {
    pub counts: [usize; 3],
    /// Per direction: `counts[d] + 1` strictly increasing breakpoints.
    pub breakpoints: [Vec<f64>; 3],
    /// Domain box as `[min, max]` per direction.
    pub domain: [[f64; 2]; 3],
    pub alpha: f64,
}

impl CartesianMesh {
    pub fn element_count(&self) -> usize {
        self.counts[0] * self.counts[1] * self.counts[2]
    }

    /// Decomposes a linear element index (direction 1 fastest).
    pub fn element_coords(&self, e: usize) -> [usize; 3] {
        let e1 = e % self.counts[0];
        let r = e / self.counts[0];
        [e1, r % self.counts[1], r / self.counts[1]]
    }

    /// Extents `h_e` of element `e`.
    pub fn extents(&self, e: usize) -> [f64; 3] {
        let c = self.element_coords(e);
        [
            self.breakpoints[0][c[0] + 1] - self.breakpoints[0][c[0]],
            self.breakpoints[1][c[1] + 1] - self.breakpoints[1][c[1]],
            self.breakpoints[2][c[2] + 1] - self.breakpoints[2][c[2]],
        ]
    }

    /// Physical coordinate of a nodal point of element `e`.
    pub fn node_coord(
        &self,
        e: usize,
        local: (usize, usize, usize),
        basis: &Basis1D,
    ) -> [f64; 3] {
        let c = self.element_coords(e);
        let loc = [local.0, local.1, local.2];
        let mut x = [0.0; 3];
        for d in 0..3 {
            let lo = self.breakpoints[d][c[d]];
            let hi = self.breakpoints[d][c[d] + 1];
            x[d] = lo + 0.5 * (basis.nodes[loc[d]] + 1.0) * (hi - lo);
        }
        x
    }

    /// Largest ratio of element widths over all direction pairs and
    /// elements.
    pub fn max_aspect_ratio(&self) -> f64 {
        let mut ar: f64 = 1.0;
        for e in 0..self.element_count() {
            let h = self.extents(e);
            for a in 0..3 {
                for b in 0..3 {
                    ar = ar.max(h[a] / h[b]);
                }
            }
        }
        ar
    }
}

/// Builds a mesh with geometrically graded widths `w_{j+1} = alpha * w_j`,
/// scaled so they sum to the domain edge. The grading is applied identically
/// in all three directions.
pub fn build_mesh(
    counts: [usize; 3],
    domain: [[f64; 2]; 3],
    alpha: f64,
) -> Result<CartesianMesh> {
    if alpha <= 0.0 {
        return Err(Error::InvalidParameter(format!(
            "expansion factor must be positive, got {alpha}"
        )));
    }
    if counts.iter().any(|&c| c == 0) {
        return Err(Error::InvalidParameter(
            "element counts must be at least 1 per direction".into(),
        ));
    }
    let mut breakpoints: [Vec<f64>; 3] = Default::default();
    for d in 0..3 {
        let length = domain[d][1] - domain[d][0];
        if length <= 0.0 {
            return Err(Error::DegenerateDomain(length, d + 1));
        }
        let ne = counts[d];
        let w0 = if (alpha - 1.0).abs() < 1e-14 {
            length / ne as f64
        } else {
            length * (alpha - 1.0) / (alpha.powi(ne as i32) - 1.0)
        };
        let mut pts = Vec::with_capacity(ne + 1);
        let mut x = domain[d][0];
        let mut w = w0;
        pts.push(x);
        for _ in 0..ne {
            x += w;
            pts.push(x);
            w *= alpha;
        }
        // pin the last breakpoint to the domain edge
        pts[ne] = domain[d][1];
        breakpoints[d] = pts;
    }
    Ok(CartesianMesh {
        counts,
        breakpoints,
        domain,
        alpha,
    })
}

/// The four coefficients of the element Helmholtz operator: `d0` carries the
/// Helmholtz parameter, `d1..d3` are metric terms.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricCoefficients {
    pub d: [f64; 4],
}

/// `d = (h1 h2 h3 / 8) * (lambda, 4/h1^2, 4/h2^2, 4/h3^2)`.
pub fn metric_coefficients(h: [f64; 3], lambda: f64) -> Result<MetricCoefficients> {
    if lambda < 0.0 {
        return Err(Error::NegativeHelmholtzParameter(lambda));
    }
    if h.iter().any(|&v| v <= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "element extents must be positive, got {h:?}"
        )));
    }
    let vol8 = h[0] * h[1] * h[2] / 8.0;
    Ok(MetricCoefficients {
        d: [
            vol8 * lambda,
            vol8 * 4.0 / (h[0] * h[0]),
            vol8 * 4.0 / (h[1] * h[1]),
            vol8 * 4.0 / (h[2] * h[2]),
        ],
    })
}

/// Classification of the `(p+1)^3` element-local degrees of freedom into
/// interior, face, edge and vertex sets, together with the canonical
/// ordering of the boundary unknowns used by all condensed operators.
///
/// Face order follows compass notation: w/e are the faces with minimal and
/// maximal coordinate in direction 1, s/n in direction 2, b/t in direction 3.
#[derive(Debug, Clone)]
pub struct DofClasses {
    pub p: usize,
    /// Interior local indices, lexicographic (direction 1 fastest).
    pub interior: Vec<usize>,
    /// Six open faces (w, e, s, n, b, t), each with `(p-1)^2` indices
    /// ordered lexicographically over the tangential directions.
    pub faces: [Vec<usize>; 6],
    /// Twelve open edges grouped by tangent direction, 4 per direction.
    pub edges: Vec<Vec<usize>>,
    /// Eight vertices.
    pub vertices: Vec<usize>,
    /// All boundary indices in canonical order: faces, then edges, then
    /// vertices.
    pub boundary_order: Vec<usize>,
    /// Full local index -> position in `boundary_order` (None for interior).
    pub boundary_pos: Vec<Option<usize>>,
}

impl DofClasses {
    pub fn n_boundary(&self) -> usize {
        self.boundary_order.len()
    }

    pub fn n_interior(&self) -> usize {
        self.interior.len()
    }

    /// Offset of face `f` within the canonical boundary ordering.
    pub fn face_offset(&self, f: usize) -> usize {
        let n_i2 = (self.p - 1) * (self.p - 1);
        f * n_i2
    }

    /// Offset of edge `e` (0..12) within the canonical boundary ordering.
    pub fn edge_offset(&self, e: usize) -> usize {
        let n_i = self.p - 1;
        6 * n_i * n_i + e * n_i
    }

    /// Offset of the vertex block within the canonical boundary ordering.
    pub fn vertex_offset(&self) -> usize {
        let n_i = self.p - 1;
        6 * n_i * n_i + 12 * n_i
    }
}

/// Builds the local classification for degree `p >= 2`.
pub fn classify_dofs(p: usize) -> Result<DofClasses> {
    if p < 2 {
        return Err(Error::DegreeTooLow { found: p, min: 2 });
    }
    let n = p + 1;
    let lin = |i: usize, j: usize, k: usize| i + n * (j + n * k);

    let mut interior = Vec::with_capacity((p - 1) * (p - 1) * (p - 1));
    for k in 1..p {
        for j in 1..p {
            for i in 1..p {
                interior.push(lin(i, j, k));
            }
        }
    }

    // face (axis, side): w e s n b t
    let face_defs = [(0, 0), (0, 1), (1, 0), (1, 1), (2, 0), (2, 1)];
    let mut face_sets: Vec<Vec<usize>> = Vec::with_capacity(6);
    for &(axis, side) in &face_defs {
        let (t2, t3) = tangential_axes(axis);
        let mut set = Vec::with_capacity((p - 1) * (p - 1));
        for b in 1..p {
            for a in 1..p {
                let mut c = [0usize; 3];
                c[axis] = side * p;
                c[t2] = a;
                c[t3] = b;
                set.push(lin(c[0], c[1], c[2]));
            }
        }
        face_sets.push(set);
    }

    let mut edges = Vec::with_capacity(12);
    for axis in 0..3 {
        let (t2, t3) = tangential_axes(axis);
        for sb in [0usize, 1] {
            for sa in [0usize, 1] {
                let mut set = Vec::with_capacity(p - 1);
                for a in 1..p {
                    let mut c = [0usize; 3];
                    c[axis] = a;
                    c[t2] = sa * p;
                    c[t3] = sb * p;
                    set.push(lin(c[0], c[1], c[2]));
                }
                edges.push(set);
            }
        }
    }

    let mut vertices = Vec::with_capacity(8);
    for sk in [0usize, 1] {
        for sj in [0usize, 1] {
            for si in [0usize, 1] {
                vertices.push(lin(si * p, sj * p, sk * p));
            }
        }
    }

    let mut boundary_order = Vec::new();
    for set in &face_sets {
        boundary_order.extend_from_slice(set);
    }
    for set in &edges {
        boundary_order.extend_from_slice(set);
    }
    boundary_order.extend_from_slice(&vertices);

    let mut boundary_pos = vec![None; n * n * n];
    for (pos, &idx) in boundary_order.iter().enumerate() {
        boundary_pos[idx] = Some(pos);
    }

    let faces: [Vec<usize>; 6] = face_sets.try_into().unwrap();
    Ok(DofClasses {
        p,
        interior,
        faces,
        edges,
        vertices,
        boundary_order,
        boundary_pos,
    })
}

/// The two tangential axes of a face/edge normal or tangent axis, in
/// ascending order.
pub fn tangential_axes(axis: usize) -> (usize, usize) {
    match axis {
        0 => (1, 2),
        1 => (0, 2),
        2 => (0, 1),
        _ => panic!("axis out of range"),
    }
}

/// A conforming global grid entity of the condensed system.
#[derive(Debug, Clone)]
pub struct GlobalEntity {
    /// Normal axis for faces, tangent axis for edges.
    pub axis: usize,
    /// Global condensed DOF indices, tangential-lexicographic.
    pub dofs: Vec<usize>,
    /// True when the entity lies on the domain boundary.
    pub dirichlet: bool,
}

/// Global numbering and gather/scatter tables.
///
/// Global DOFs are numbered entity class by entity class (vertices, edges,
/// faces, interiors), each class in lexicographic position order, for both
/// the full and the condensed (boundary-only) system.
#[derive(Debug, Clone)]
pub struct DofMap {
    pub p: usize,
    pub n_full: usize,
    pub n_cond: usize,
    /// Per element: local lexicographic index -> global full DOF.
    pub full: Vec<Vec<usize>>,
    /// Per element: canonical boundary position -> global condensed DOF.
    pub cond: Vec<Vec<usize>>,
    pub dirichlet_full: Vec<bool>,
    pub dirichlet_cond: Vec<bool>,
    pub multiplicity_full: Vec<f64>,
    pub multiplicity_cond: Vec<f64>,
    /// Conforming face patches of the condensed system.
    pub global_faces: Vec<GlobalEntity>,
    /// Conforming edge segments of the condensed system.
    pub global_edges: Vec<GlobalEntity>,
    /// Condensed DOF index of every global vertex, with Dirichlet flag.
    pub global_vertices: Vec<(usize, bool)>,
}

/// Builds the conforming numbering for a mesh at degree `p`.
///
/// When `dirichlet` is true, all DOFs on the domain boundary are flagged
/// (they stay in the numbering; solvers mask them).
pub fn build_dof_maps(mesh: &CartesianMesh, p: usize, dirichlet: bool) -> Result<DofMap> {
    let classes = classify_dofs(p)?;
    let ne = mesh.counts;
    let nl = [ne[0] * p + 1, ne[1] * p + 1, ne[2] * p + 1];
    let n_lattice = nl[0] * nl[1] * nl[2];
    let lat = |g: [usize; 3]| g[0] + nl[0] * (g[1] + nl[1] * g[2]);

    // class of a lattice node: number of directions in which it sits on an
    // element boundary plane (3 = vertex, 2 = edge, 1 = face, 0 = interior)
    let node_class = |g: [usize; 3]| -> usize {
        (0..3).filter(|&d| g[d] % p == 0).count()
    };

    const UNSET: usize = usize::MAX;
    let mut full_id = vec![UNSET; n_lattice];
    let mut cond_id = vec![UNSET; n_lattice];
    let mut next_full = 0usize;
    let mut next_cond = 0usize;
    for class in (0..=3usize).rev() {
        for g3 in 0..nl[2] {
            for g2 in 0..nl[1] {
                for g1 in 0..nl[0] {
                    let g = [g1, g2, g3];
                    if node_class(g) != class {
                        continue;
                    }
                    let l = lat(g);
                    full_id[l] = next_full;
                    next_full += 1;
                    if class >= 1 {
                        cond_id[l] = next_cond;
                        next_cond += 1;
                    }
                }
            }
        }
    }
    let n_full = next_full;
    let n_cond = next_cond;

    let on_domain_boundary =
        |g: [usize; 3]| (0..3).any(|d| g[d] == 0 || g[d] == nl[d] - 1);

    let mut dirichlet_full = vec![false; n_full];
    let mut dirichlet_cond = vec![false; n_cond];
    if dirichlet {
        for g3 in 0..nl[2] {
            for g2 in 0..nl[1] {
                for g1 in 0..nl[0] {
                    let g = [g1, g2, g3];
                    if on_domain_boundary(g) {
                        let l = lat(g);
                        dirichlet_full[full_id[l]] = true;
                        if cond_id[l] != UNSET {
                            dirichlet_cond[cond_id[l]] = true;
                        }
                    }
                }
            }
        }
    }

    let n = p + 1;
    let n_elem = mesh.element_count();
    let mut full = Vec::with_capacity(n_elem);
    let mut cond = Vec::with_capacity(n_elem);
    let mut multiplicity_full = vec![0.0; n_full];
    let mut multiplicity_cond = vec![0.0; n_cond];
    for e in 0..n_elem {
        let ec = mesh.element_coords(e);
        let mut fmap = Vec::with_capacity(n * n * n);
        for k in 0..n {
            for j in 0..n {
                for i in 0..n {
                    let g = [ec[0] * p + i, ec[1] * p + j, ec[2] * p + k];
                    let id = full_id[lat(g)];
                    fmap.push(id);
                    multiplicity_full[id] += 1.0;
                }
            }
        }
        let mut cmap = Vec::with_capacity(classes.n_boundary());
        for &loc in &classes.boundary_order {
            let i = loc % n;
            let j = (loc / n) % n;
            let k = loc / (n * n);
            let g = [ec[0] * p + i, ec[1] * p + j, ec[2] * p + k];
            let id = cond_id[lat(g)];
            debug_assert_ne!(id, UNSET);
            cmap.push(id);
            multiplicity_cond[id] += 1.0;
        }
        full.push(fmap);
        cond.push(cmap);
    }

    // conforming entities of the condensed system
    let mut global_faces = Vec::new();
    for axis in 0..3 {
        let (t2, t3) = tangential_axes(axis);
        for plane in 0..=ne[axis] {
            for c3 in 0..ne[t3] {
                for c2 in 0..ne[t2] {
                    let mut dofs = Vec::with_capacity((p - 1) * (p - 1));
                    let mut dir = false;
                    for b in 1..p {
                        for a in 1..p {
                            let mut g = [0usize; 3];
                            g[axis] = plane * p;
                            g[t2] = c2 * p + a;
                            g[t3] = c3 * p + b;
                            dofs.push(cond_id[lat(g)]);
                            dir |= on_domain_boundary(g);
                        }
                    }
                    global_faces.push(GlobalEntity {
                        axis,
                        dofs,
                        dirichlet: dir && dirichlet,
                    });
                }
            }
        }
    }
    let mut global_edges = Vec::new();
    for axis in 0..3 {
        let (t2, t3) = tangential_axes(axis);
        for p3 in 0..=ne[t3] {
            for p2 in 0..=ne[t2] {
                for cell in 0..ne[axis] {
                    let mut dofs = Vec::with_capacity(p - 1);
                    let mut dir = false;
                    for a in 1..p {
                        let mut g = [0usize; 3];
                        g[axis] = cell * p + a;
                        g[t2] = p2 * p;
                        g[t3] = p3 * p;
                        dofs.push(cond_id[lat(g)]);
                        dir |= on_domain_boundary(g);
                    }
                    global_edges.push(GlobalEntity {
                        axis,
                        dofs,
                        dirichlet: dir && dirichlet,
                    });
                }
            }
        }
    }
    let mut global_vertices = Vec::new();
    for v3 in 0..=ne[2] {
        for v2 in 0..=ne[1] {
            for v1 in 0..=ne[0] {
                let g = [v1 * p, v2 * p, v3 * p];
                global_vertices.push((
                    cond_id[lat(g)],
                    on_domain_boundary(g) && dirichlet,
                ));
            }
        }
    }

    Ok(DofMap {
        p,
        n_full,
        n_cond,
        full,
        cond,
        dirichlet_full,
        dirichlet_cond,
        multiplicity_full,
        multiplicity_cond,
        global_faces,
        global_edges,
        global_vertices,
    })
}

impl DofMap {
    /// Direct-stiffness summation of per-element condensed vectors into a
    /// global vector. The summation order is fixed by the element order.
    pub fn gather_cond(&self, local: &[Vec<f64>]) -> Vec<f64> {
        let mut out = vec![0.0; self.n_cond];
        for (map, vals) in self.cond.iter().zip(local) {
            for (&g, &v) in map.iter().zip(vals) {
                out[g] += v;
            }
        }
        out
    }

    /// Copies global condensed values to per-element boundary vectors.
    pub fn scatter_cond(&self, global: &[f64]) -> Vec<Vec<f64>> {
        self.cond
            .iter()
            .map(|map| map.iter().map(|&g| global[g]).collect())
            .collect()
    }

    pub fn gather_full(&self, local: &[Vec<f64>]) -> Vec<f64> {
        let mut out = vec![0.0; self.n_full];
        for (map, vals) in self.full.iter().zip(local) {
            for (&g, &v) in map.iter().zip(vals) {
                out[g] += v;
            }
        }
        out
    }

    pub fn scatter_full(&self, global: &[f64]) -> Vec<Vec<f64>> {
        self.full
            .iter()
            .map(|map| map.iter().map(|&g| global[g]).collect())
            .collect()
    }
}
