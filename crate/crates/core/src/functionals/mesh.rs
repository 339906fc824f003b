//! Structured P1 meshes on intervals and axis-aligned rectangles, with
//! homogeneous Dirichlet boundary handled by eliminating boundary nodes.

use crate::error::{Error, Result};
use crate::linalg::gauss_legendre;
use crate::scalar::Real;

/// Domain descriptor.
#[derive(Clone, Copy, Debug)]
pub enum Domain<T> {
    Interval { a: T, b: T },
    Rectangle { x0: T, x1: T, y0: T, y1: T },
}

/// One element with everything evaluation needs, precomputed.
#[derive(Clone, Debug)]
pub struct Element<T> {
    /// Degrees of freedom of the element's nodes (`None` = boundary node).
    pub dofs: Vec<Option<usize>>,
    /// Constant basis gradients, one per local node (length = dim).
    pub grad_basis: Vec<Vec<T>>,
    /// Element measure (length or area).
    pub measure: T,
    /// Quadrature points in physical coordinates.
    pub quad_points: Vec<Vec<T>>,
    /// Quadrature weights (sum to `measure`).
    pub quad_weights: Vec<T>,
    /// Basis values at the quadrature points, `basis_at[q][local]`.
    pub basis_at: Vec<Vec<T>>,
}

/// A conforming P1 mesh with Dirichlet elimination.
pub struct Mesh<T: Real> {
    pub dim: usize,
    pub domain: Domain<T>,
    /// All node coordinates (including boundary nodes).
    pub nodes: Vec<Vec<T>>,
    /// Interior-node index set: `interior[d]` is the node of dof `d`.
    pub interior: Vec<usize>,
    pub elements: Vec<Element<T>>,
    pub quad_order: usize,
}

impl<T: Real> Mesh<T> {
    /// Uniform mesh on `(a, b)` with `cells` elements.
    pub fn interval(a: T, b: T, cells: usize, quad_order: usize) -> Result<Self> {
        if b <= a {
            return Err(Error::InvalidInput("interval needs b > a".into()));
        }
        if cells < 1 {
            return Err(Error::InvalidInput(
                "interval needs at least one cell".into(),
            ));
        }
        let h = (b - a) / T::of(cells as f64);
        let nodes: Vec<Vec<T>> = (0..=cells).map(|i| vec![a + h * T::of(i as f64)]).collect();
        let mut dof_of_node = vec![None; cells + 1];
        let mut interior = Vec::new();
        for i in 1..cells {
            dof_of_node[i] = Some(interior.len());
            interior.push(i);
        }
        let n_q = quad_points_for_order(quad_order);
        let (qx, qw) = gauss_legendre::<T>(n_q);
        let half = T::of(0.5);
        let elements = (0..cells)
            .map(|e| {
                let xl = nodes[e][0];
                let xr = nodes[e + 1][0];
                let inv_h = T::one() / h;
                let mid = (xl + xr) * half;
                let scale = h * half;
                let quad_points: Vec<Vec<T>> = qx.iter().map(|&t| vec![mid + scale * t]).collect();
                let quad_weights: Vec<T> = qw.iter().map(|&w| w * scale).collect();
                let basis_at = quad_points
                    .iter()
                    .map(|p| {
                        let t = (p[0] - xl) * inv_h;
                        vec![T::one() - t, t]
                    })
                    .collect();
                Element {
                    dofs: vec![dof_of_node[e], dof_of_node[e + 1]],
                    grad_basis: vec![vec![-inv_h], vec![inv_h]],
                    measure: h,
                    quad_points,
                    quad_weights,
                    basis_at,
                }
            })
            .collect();
        Ok(Self {
            dim: 1,
            domain: Domain::Interval { a, b },
            nodes,
            interior,
            elements,
            quad_order,
        })
    }

    /// Uniform triangulated mesh on the rectangle, each grid cell split along
    /// its diagonal into two triangles.
    pub fn rectangle(
        x0: T,
        x1: T,
        y0: T,
        y1: T,
        nx: usize,
        ny: usize,
        quad_order: usize,
    ) -> Result<Self> {
        if x1 <= x0 || y1 <= y0 {
            return Err(Error::InvalidInput(
                "rectangle needs x1 > x0 and y1 > y0".into(),
            ));
        }
        if nx < 1 || ny < 1 {
            return Err(Error::InvalidInput(
                "rectangle needs at least one cell per axis".into(),
            ));
        }
        let hx = (x1 - x0) / T::of(nx as f64);
        let hy = (y1 - y0) / T::of(ny as f64);
        let node_id = |i: usize, j: usize| j * (nx + 1) + i;
        let mut nodes = Vec::with_capacity((nx + 1) * (ny + 1));
        for j in 0..=ny {
            for i in 0..=nx {
                nodes.push(vec![x0 + hx * T::of(i as f64), y0 + hy * T::of(j as f64)]);
            }
        }
        let mut dof_of_node = vec![None; nodes.len()];
        let mut interior = Vec::new();
        for j in 1..ny {
            for i in 1..nx {
                dof_of_node[node_id(i, j)] = Some(interior.len());
                interior.push(node_id(i, j));
            }
        }
        let rule = triangle_rule::<T>(quad_order);
        let mut elements = Vec::with_capacity(2 * nx * ny);
        for j in 0..ny {
            for i in 0..nx {
                let corners = [
                    node_id(i, j),
                    node_id(i + 1, j),
                    node_id(i + 1, j + 1),
                    node_id(i, j + 1),
                ];
                for tri in [
                    [corners[0], corners[1], corners[2]],
                    [corners[0], corners[2], corners[3]],
                ] {
                    elements.push(triangle_element(&nodes, &dof_of_node, tri, &rule)?);
                }
            }
        }
        Ok(Self {
            dim: 2,
            domain: Domain::Rectangle { x0, x1, y0, y1 },
            nodes,
            interior,
            elements,
            quad_order,
        })
    }

    /// Number of degrees of freedom.
    pub fn dofs(&self) -> usize {
        self.interior.len()
    }

    /// Total domain measure.
    pub fn measure(&self) -> T {
        match self.domain {
            Domain::Interval { a, b } => b - a,
            Domain::Rectangle { x0, x1, y0, y1 } => (x1 - x0) * (y1 - y0),
        }
    }

    /// Structural checks: positive element measures, positive quadrature
    /// weights summing to the domain measure.
    pub fn validate(&self) -> Result<()> {
        let mut total = T::zero();
        for e in &self.elements {
            if e.measure <= T::zero() {
                return Err(Error::InvalidInput(
                    "element with non-positive measure".into(),
                ));
            }
            for &w in &e.quad_weights {
                if w <= T::zero() {
                    return Err(Error::InvalidInput("non-positive quadrature weight".into()));
                }
                total += w;
            }
        }
        if (total - self.measure()).abs() > T::of(1e-12) * (T::one() + self.measure()) {
            return Err(Error::InvalidInput(format!(
                "quadrature weights sum to {:e}, expected {:e}",
                total.to_f64_lossy(),
                self.measure().to_f64_lossy()
            )));
        }
        Ok(())
    }
}

/// Points needed for polynomial exactness of the given degree in 1D.
fn quad_points_for_order(order: usize) -> usize {
    (order / 2) + 1
}

/// Symmetric triangle rules on barycentric coordinates; weights sum to 1.
fn triangle_rule<T: Real>(order: usize) -> Vec<([f64; 3], f64)> {
    let _ = std::marker::PhantomData::<T>;
    match order {
        0 | 1 => vec![([1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0], 1.0)],
        2 | 3 => {
            // Midpoints of edges, degree 2.
            vec![
                ([0.5, 0.5, 0.0], 1.0 / 3.0),
                ([0.0, 0.5, 0.5], 1.0 / 3.0),
                ([0.5, 0.0, 0.5], 1.0 / 3.0),
            ]
        }
        _ => {
            // Six-point degree-4 rule.
            let w1 = 0.223_381_589_678_011_3;
            let a = 0.445_948_490_915_965_1;
            let w2 = 0.109_951_743_655_321_87;
            let b = 0.091_576_213_509_770_74;
            let mut pts = Vec::with_capacity(6);
            for (v, w) in [(a, w1), (b, w2)] {
                let u = 1.0 - 2.0 * v;
                pts.push(([u, v, v], w));
                pts.push(([v, u, v], w));
                pts.push(([v, v, u], w));
            }
            pts
        }
    }
}

fn triangle_element<T: Real>(
    nodes: &[Vec<T>],
    dof_of_node: &[Option<usize>],
    tri: [usize; 3],
    rule: &[([f64; 3], f64)],
) -> Result<Element<T>> {
    let p = [&nodes[tri[0]], &nodes[tri[1]], &nodes[tri[2]]];
    let det = (p[1][0] - p[0][0]) * (p[2][1] - p[0][1]) - (p[2][0] - p[0][0]) * (p[1][1] - p[0][1]);
    let area = det.abs() * T::of(0.5);
    if area <= T::zero() {
        return Err(Error::InvalidInput("degenerate triangle".into()));
    }
    // grad of barycentric basis: lambda_i = (a_i + b_i x + c_i y), with
    // b_i = (y_j - y_k) / det, c_i = (x_k - x_j) / det, (i, j, k) cyclic.
    let mut grad_basis = Vec::with_capacity(3);
    for i in 0..3 {
        let j = (i + 1) % 3;
        let k = (i + 2) % 3;
        grad_basis.push(vec![(p[j][1] - p[k][1]) / det, (p[k][0] - p[j][0]) / det]);
    }
    let mut quad_points = Vec::with_capacity(rule.len());
    let mut quad_weights = Vec::with_capacity(rule.len());
    let mut basis_at = Vec::with_capacity(rule.len());
    for (bary, w) in rule {
        let bx: Vec<T> = (0..2)
            .map(|d| p[0][d] * T::of(bary[0]) + p[1][d] * T::of(bary[1]) + p[2][d] * T::of(bary[2]))
            .collect();
        quad_points.push(bx);
        quad_weights.push(area * T::of(*w));
        basis_at.push(vec![T::of(bary[0]), T::of(bary[1]), T::of(bary[2])]);
    }
    Ok(Element {
        dofs: tri.iter().map(|&n| dof_of_node[n]).collect(),
        grad_basis,
        measure: area,
        quad_points,
        quad_weights,
        basis_at,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn interval_mesh_dofs_and_weights() {
        let m = Mesh::<f64>::interval(0.0, 1.0, 8, 4).unwrap();
        assert_eq!(m.dofs(), 7);
        m.validate().unwrap();
        let total: f64 = m.elements.iter().flat_map(|e| e.quad_weights.iter()).sum();
        assert_relative_eq!(total, 1.0, epsilon = 1e-13);
    }

    #[test]
    fn single_interior_node_needs_two_cells() {
        let m = Mesh::<f64>::interval(0.0, 1.0, 2, 4).unwrap();
        assert_eq!(m.dofs(), 1);
        assert_eq!(m.nodes[m.interior[0]][0], 0.5);
        let m1 = Mesh::<f64>::interval(0.0, 1.0, 1, 4).unwrap();
        assert_eq!(m1.dofs(), 0);
    }

    #[test]
    fn rectangle_mesh_area_and_dofs() {
        let m = Mesh::<f64>::rectangle(0.0, 2.0, 0.0, 1.0, 4, 3, 4).unwrap();
        assert_eq!(m.dofs(), 3 * 2);
        assert_eq!(m.elements.len(), 2 * 4 * 3);
        m.validate().unwrap();
        let total: f64 = m.elements.iter().flat_map(|e| e.quad_weights.iter()).sum();
        assert_relative_eq!(total, 2.0, epsilon = 1e-12);
    }

    #[test]
    fn triangle_quadrature_degree_four_exact() {
        // Integrate x^2 y^2 over the unit square via the mesh rule and
        // compare with the exact 1/9.
        let m = Mesh::<f64>::rectangle(0.0, 1.0, 0.0, 1.0, 1, 1, 4).unwrap();
        let mut total = 0.0;
        for e in &m.elements {
            for (p, w) in e.quad_points.iter().zip(&e.quad_weights) {
                total += w * p[0] * p[0] * p[1] * p[1];
            }
        }
        assert_relative_eq!(total, 1.0 / 9.0, epsilon = 1e-14);
    }

    #[test]
    fn basis_gradients_sum_to_zero() {
        let m = Mesh::<f64>::rectangle(0.0, 1.0, 0.0, 1.0, 3, 3, 4).unwrap();
        for e in &m.elements {
            for d in 0..2 {
                let s: f64 = e.grad_basis.iter().map(|g| g[d]).sum();
                assert!(s.abs() < 1e-13);
            }
        }
    }
}
