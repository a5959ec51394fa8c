use super::{signed_volume, MeshError, RawMesh, Result};
use crate::Vec3;

/// Axis-aligned box `[min, max]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoxBounds {
    pub min: Vec3,
    pub max: Vec3,
}

impl BoxBounds {
    pub fn new(min: Vec3, max: Vec3) -> Self {
        BoxBounds { min, max }
    }

    /// The unit cube `[0, 1]^3`.
    pub fn unit() -> Self {
        BoxBounds::new(Vec3::zeros(), Vec3::repeat(1.0))
    }

    pub fn extent(&self) -> Vec3 {
        self.max - self.min
    }

    pub fn volume(&self) -> f64 {
        let e = self.extent();
        e.x * e.y * e.z
    }
}

/// Uniform Kuhn tetrahedralization of a box: every hexahedral cell is split
/// into six tetrahedra sharing its main diagonal.
pub fn structured_box_mesh(bounds: &BoxBounds, divisions: [usize; 3]) -> Result<RawMesh> {
    if divisions.contains(&0) {
        return Err(MeshError::InvalidDivisions(divisions));
    }
    let ext = bounds.extent();
    if !(ext.x > 0.0 && ext.y > 0.0 && ext.z > 0.0) {
        return Err(MeshError::DegenerateBox);
    }
    let axis = |a: usize| -> Vec<f64> {
        let n = divisions[a];
        (0..=n)
            .map(|i| {
                if i == n {
                    bounds.max[a]
                } else {
                    bounds.min[a] + ext[a] * i as f64 / n as f64
                }
            })
            .collect()
    };
    tensor_box_mesh(&axis(0), &axis(1), &axis(2))
}

/// Kuhn tetrahedralization of the tensor grid spanned by three strictly
/// increasing coordinate lists. All elements get region tag 1.
pub fn tensor_box_mesh(xs: &[f64], ys: &[f64], zs: &[f64]) -> Result<RawMesh> {
    for axis in [xs, ys, zs] {
        if axis.len() < 2 || axis.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(MeshError::InvalidAxis);
        }
    }
    let (nx, ny, nz) = (xs.len() - 1, ys.len() - 1, zs.len() - 1);
    let node = |i: usize, j: usize, k: usize| i + (nx + 1) * (j + (ny + 1) * k);

    let mut nodes = Vec::with_capacity((nx + 1) * (ny + 1) * (nz + 1));
    for &z in zs {
        for &y in ys {
            for &x in xs {
                nodes.push(Vec3::new(x, y, z));
            }
        }
    }

    // Monotone corner paths from (0,0,0) to (1,1,1), one per axis permutation.
    const PATHS: [[usize; 3]; 6] = [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];
    let mut tets = Vec::with_capacity(6 * nx * ny * nz);
    for k in 0..nz {
        for j in 0..ny {
            for i in 0..nx {
                for path in PATHS {
                    let mut c = [i, j, k];
                    let mut tet = [node(c[0], c[1], c[2]); 4];
                    for (s, &axis) in path.iter().enumerate() {
                        c[axis] += 1;
                        tet[s + 1] = node(c[0], c[1], c[2]);
                    }
                    let v = signed_volume(&nodes[tet[0]], &nodes[tet[1]], &nodes[tet[2]], &nodes[tet[3]]);
                    if v < 0.0 {
                        tet.swap(2, 3);
                    }
                    tets.push(tet);
                }
            }
        }
    }
    let region_tag = vec![1; tets.len()];
    Ok(RawMesh {
        nodes,
        tets,
        region_tag,
        boundary_markers: Vec::new(),
    })
}

/// Coordinates on `[min, max]` with uniform spacing `fine` over
/// `[focus_lo, focus_hi]` and cells growing geometrically by `growth`
/// towards both ends.
pub fn graded_axis(min: f64, max: f64, focus_lo: f64, focus_hi: f64, fine: f64, growth: f64) -> Result<Vec<f64>> {
    if !(min < max && min <= focus_lo && focus_lo < focus_hi && focus_hi <= max && fine > 0.0 && growth >= 1.0) {
        return Err(MeshError::InvalidAxis);
    }
    let n = ((focus_hi - focus_lo) / fine).ceil().max(1.0) as usize;
    let mut core: Vec<f64> = (0..=n)
        .map(|i| focus_lo + (focus_hi - focus_lo) * i as f64 / n as f64)
        .collect();
    let step = (focus_hi - focus_lo) / n as f64;

    let grow = |from: f64, to: f64| -> Vec<f64> {
        let mut out = Vec::new();
        let dir = (to - from).signum();
        let mut pos = from;
        let mut h = step;
        while (to - pos) * dir > 1e-12 * step {
            h *= growth;
            let next = pos + dir * h;
            if (to - next) * dir < 0.5 * h {
                out.push(to);
                break;
            }
            out.push(next);
            pos = next;
        }
        out
    };

    let mut left = grow(focus_lo, min);
    left.reverse();
    let right = grow(focus_hi, max);
    left.append(&mut core);
    left.extend(right);
    Ok(left)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::build_connectivity;

    #[test]
    fn one_cube_kuhn_split() {
        let raw = structured_box_mesh(&BoxBounds::unit(), [1, 1, 1]).unwrap();
        assert_eq!(raw.num_nodes(), 8);
        assert_eq!(raw.num_tets(), 6);
    }

    #[test]
    fn count_formula() {
        let raw = structured_box_mesh(&BoxBounds::unit(), [2, 2, 2]).unwrap();
        assert_eq!((raw.num_nodes(), raw.num_tets()), (27, 48));
        let b = BoxBounds::new(Vec3::zeros(), Vec3::new(2.0, 1.0, 1.0));
        let raw = structured_box_mesh(&b, [2, 1, 1]).unwrap();
        assert_eq!((raw.num_nodes(), raw.num_tets()), (12, 12));
        let mesh = build_connectivity(structured_box_mesh(&BoxBounds::unit(), [2, 2, 2]).unwrap()).unwrap();
        assert_eq!((mesh.num_nodes(), mesh.num_tets()), (27, 48));
    }

    #[test]
    fn volumes_sum_to_box() {
        let b = BoxBounds::new(Vec3::new(-1.0, 0.5, 2.0), Vec3::new(2.0, 1.75, 2.5));
        for div in [[1, 1, 1], [3, 2, 4], [5, 5, 5]] {
            let mesh = build_connectivity(structured_box_mesh(&b, div).unwrap()).unwrap();
            assert!(mesh.repaired().is_empty());
            let total: f64 = (0..mesh.num_tets()).map(|t| mesh.volume(t)).sum();
            assert!((total - b.volume()).abs() <= 1e-12 * b.volume());
        }
    }

    #[test]
    fn degenerate_inputs() {
        let flat = BoxBounds::new(Vec3::zeros(), Vec3::new(1.0, 0.0, 1.0));
        assert!(matches!(structured_box_mesh(&flat, [1, 1, 1]), Err(MeshError::DegenerateBox)));
        assert!(matches!(
            structured_box_mesh(&BoxBounds::unit(), [1, 0, 1]),
            Err(MeshError::InvalidDivisions(_))
        ));
    }

    #[test]
    fn graded_axis_is_monotone_and_fine_in_focus() {
        let xs = graded_axis(-1000.0, 1000.0, -100.0, 100.0, 20.0, 1.3).unwrap();
        assert_eq!(xs[0], -1000.0);
        assert_eq!(*xs.last().unwrap(), 1000.0);
        assert!(xs.windows(2).all(|w| w[1] > w[0]));
        for w in xs.windows(2) {
            if w[0] >= -100.0 - 1e-9 && w[1] <= 100.0 + 1e-9 {
                assert!(w[1] - w[0] <= 20.0 + 1e-9);
            }
        }
    }
}
