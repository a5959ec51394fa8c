use super::LOCATE_TOL;
use crate::Vec3;
use nalgebra::Matrix3;

/// Uniform bucket grid over element bounding boxes.
///
/// Every element is registered in all buckets its bounding box overlaps, so
/// the candidate list of a bucket contains every element that can contain a
/// point of that bucket. Candidates are stored in ascending element order,
/// which makes the lowest-id tie-break a first-match scan.
#[derive(Debug, Clone)]
pub struct PointLocator {
    lo: Vec3,
    hi: Vec3,
    dims: [usize; 3],
    cell: Vec3,
    start: Vec<usize>,
    items: Vec<usize>,
}

pub(crate) fn barycentric(v: &[Vec3; 4], p: &Vec3) -> [f64; 4] {
    let m = Matrix3::from_columns(&[v[1] - v[0], v[2] - v[0], v[3] - v[0]]);
    let r = match m.try_inverse() {
        Some(inv) => inv * (p - v[0]),
        None => return [f64::NAN; 4],
    };
    [1.0 - r.x - r.y - r.z, r.x, r.y, r.z]
}

impl PointLocator {
    pub(crate) fn new(nodes: &[Vec3], tets: &[[usize; 4]]) -> Self {
        let mut lo = Vec3::repeat(f64::INFINITY);
        let mut hi = Vec3::repeat(f64::NEG_INFINITY);
        for n in nodes {
            lo = lo.inf(n);
            hi = hi.sup(n);
        }
        if nodes.is_empty() {
            lo = Vec3::zeros();
            hi = Vec3::zeros();
        }
        let per_axis = ((tets.len().max(1) as f64).cbrt().ceil() as usize).clamp(1, 128);
        let dims = [per_axis; 3];
        let extent = hi - lo;
        let cell = Vec3::new(
            (extent.x / per_axis as f64).max(f64::MIN_POSITIVE),
            (extent.y / per_axis as f64).max(f64::MIN_POSITIVE),
            (extent.z / per_axis as f64).max(f64::MIN_POSITIVE),
        );
        let mut loc = PointLocator {
            lo,
            hi,
            dims,
            cell,
            start: Vec::new(),
            items: Vec::new(),
        };

        let nb = dims[0] * dims[1] * dims[2];
        let mut ranges = Vec::with_capacity(tets.len());
        let mut counts = vec![0usize; nb + 1];
        for tet in tets {
            let mut blo = Vec3::repeat(f64::INFINITY);
            let mut bhi = Vec3::repeat(f64::NEG_INFINITY);
            for &n in tet {
                blo = blo.inf(&nodes[n]);
                bhi = bhi.sup(&nodes[n]);
            }
            let pad = (bhi - blo) * 1e-9;
            let a = loc.bucket_coords(&(blo - pad));
            let b = loc.bucket_coords(&(bhi + pad));
            for k in a[2]..=b[2] {
                for j in a[1]..=b[1] {
                    for i in a[0]..=b[0] {
                        counts[loc.index([i, j, k]) + 1] += 1;
                    }
                }
            }
            ranges.push((a, b));
        }
        for i in 0..nb {
            counts[i + 1] += counts[i];
        }
        let mut fill = counts.clone();
        let mut items = vec![0usize; counts[nb]];
        for (t, (a, b)) in ranges.into_iter().enumerate() {
            for k in a[2]..=b[2] {
                for j in a[1]..=b[1] {
                    for i in a[0]..=b[0] {
                        let idx = loc.index([i, j, k]);
                        items[fill[idx]] = t;
                        fill[idx] += 1;
                    }
                }
            }
        }
        loc.start = counts;
        loc.items = items;
        loc
    }

    fn bucket_coords(&self, p: &Vec3) -> [usize; 3] {
        let mut c = [0usize; 3];
        for a in 0..3 {
            let x = ((p[a] - self.lo[a]) / self.cell[a]).floor();
            c[a] = if x.is_nan() || x < 0.0 {
                0
            } else {
                (x as usize).min(self.dims[a] - 1)
            };
        }
        c
    }

    fn index(&self, c: [usize; 3]) -> usize {
        c[0] + self.dims[0] * (c[1] + self.dims[1] * c[2])
    }

    pub(crate) fn bounds(&self) -> (Vec3, Vec3) {
        (self.lo, self.hi)
    }

    pub(crate) fn locate(
        &self,
        nodes: &[Vec3],
        tets: &[[usize; 4]],
        point: &Vec3,
    ) -> Option<(usize, [f64; 4])> {
        let size = (self.hi - self.lo).norm().max(f64::MIN_POSITIVE);
        let slack = LOCATE_TOL * size;
        if (0..3).any(|a| point[a] < self.lo[a] - slack || point[a] > self.hi[a] + slack) {
            return None;
        }
        let idx = self.index(self.bucket_coords(point));
        let candidates = &self.items[self.start[idx]..self.start[idx + 1]];
        let found = candidates
            .iter()
            .find_map(|&t| contains(nodes, &tets[t], point).map(|b| (t, b)));
        // Rounding at bucket borders: fall back to a full scan.
        found.or_else(|| {
            tets.iter()
                .enumerate()
                .find_map(|(t, tet)| contains(nodes, tet, point).map(|b| (t, b)))
        })
    }
}

fn contains(nodes: &[Vec3], tet: &[usize; 4], point: &Vec3) -> Option<[f64; 4]> {
    let v = [nodes[tet[0]], nodes[tet[1]], nodes[tet[2]], nodes[tet[3]]];
    let b = barycentric(&v, point);
    if b.iter().all(|&l| l >= -LOCATE_TOL) {
        Some(b)
    } else {
        None
    }
}

#[cfg(test)]
mod tests {
    use crate::mesh::{build_connectivity, structured_box_mesh, BoxBounds, MeshError};
    use crate::Vec3;

    #[test]
    fn centroid_of_first_element() {
        let mesh = build_connectivity(structured_box_mesh(&BoxBounds::unit(), [2, 2, 2]).unwrap()).unwrap();
        let (e, b) = mesh.locate_point(&mesh.centroid(0)).unwrap();
        assert_eq!(e, 0);
        for l in b {
            assert!((l - 0.25).abs() < 1e-14);
        }
    }

    #[test]
    fn shared_face_resolves_to_lowest_id() {
        let mesh = build_connectivity(structured_box_mesh(&BoxBounds::unit(), [2, 2, 2]).unwrap()).unwrap();
        for f in 0..mesh.num_faces() {
            if let [Some(a), Some(b)] = mesh.face_tets(f) {
                let [p, q, r] = mesh.faces()[f];
                let n = mesh.nodes();
                let point = (n[p] + n[q] + n[r]) / 3.0;
                let (e, bary) = mesh.locate_point(&point).unwrap();
                assert_eq!(e, a.min(b), "face {f}");
                assert!((bary.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn point_outside_hull() {
        let mesh = build_connectivity(structured_box_mesh(&BoxBounds::unit(), [1, 1, 1]).unwrap()).unwrap();
        let err = mesh.locate_point(&Vec3::new(2.0, 0.5, 0.5)).unwrap_err();
        assert!(matches!(err, MeshError::OutsideMesh(_)));
    }
}
