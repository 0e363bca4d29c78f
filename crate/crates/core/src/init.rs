//! Constructors for element sets of prescribed measure.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::mesh::{dist, Point, TriMesh};
use crate::rearrange::select_prefix;
use crate::set::ElementSet;

/// Uniformly shuffled elements, prefix taken to measure ≈ `target`.
pub fn random_set(mesh: &TriMesh, target: f64, seed: u64) -> ElementSet {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut order: Vec<usize> = (0..mesh.n_elements()).collect();
    order.shuffle(&mut rng);
    ElementSet::new(select_prefix(mesh.element_area(), &order, target, false))
}

/// Elements nearest to `center` (by centroid distance), measure ≈ `target`.
pub fn ball_set(mesh: &TriMesh, center: Point, target: f64) -> ElementSet {
    let c = mesh.element_centroid();
    let mut order: Vec<usize> = (0..mesh.n_elements()).collect();
    order.sort_by(|&a, &b| dist(c[a], center).total_cmp(&dist(c[b], center)).then(a.cmp(&b)));
    ElementSet::new(select_prefix(mesh.element_area(), &order, target, false))
}

/// Equal-measure balls around each center, total measure ≈ `target`.
/// Each element goes to its nearest center.
pub fn balls_set(mesh: &TriMesh, centers: &[Point], target: f64) -> ElementSet {
    if centers.len() == 1 {
        return ball_set(mesh, centers[0], target);
    }
    let c = mesh.element_centroid();
    let owner = |e: usize| {
        (0..centers.len())
            .min_by(|&i, &j| dist(c[e], centers[i]).total_cmp(&dist(c[e], centers[j])))
            .unwrap()
    };
    let owners: Vec<usize> = (0..mesh.n_elements()).map(owner).collect();
    let share = target / centers.len() as f64;
    let mut taken = Vec::new();
    for (k, &center) in centers.iter().enumerate() {
        let mut order: Vec<usize> = (0..mesh.n_elements()).filter(|&e| owners[e] == k).collect();
        order.sort_by(|&a, &b| dist(c[a], center).total_cmp(&dist(c[b], center)).then(a.cmp(&b)));
        taken.extend(select_prefix(mesh.element_area(), &order, share, false));
    }
    ElementSet::new(taken)
}

/// Elements whose centroid radius lies in `[r_in, r_out)`.
pub fn annulus_set(mesh: &TriMesh, r_in: f64, r_out: f64) -> ElementSet {
    mesh.element_centroid()
        .iter()
        .enumerate()
        .filter_map(|(e, p)| {
            let r = p[0].hypot(p[1]);
            (r >= r_in && r < r_out).then_some(e)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{generate_domain, ShapeSpec};

    #[test]
    fn sets_have_requested_measure() {
        let mesh = generate_domain(&ShapeSpec::Disk { radius: 1.0 }, 0.1).unwrap();
        let amax = mesh.max_element_area();
        let target = 0.8;
        let r = random_set(&mesh, target, 7);
        assert!((r.measure(&mesh) - target).abs() <= amax);
        assert_eq!(r, random_set(&mesh, target, 7));
        assert_ne!(r, random_set(&mesh, target, 8));
        let b = ball_set(&mesh, [0.2, 0.0], target);
        assert!((b.measure(&mesh) - target).abs() <= amax);
        let two = balls_set(&mesh, &[[-0.5, 0.0], [0.5, 0.0]], target);
        assert!((two.measure(&mesh) - target).abs() <= 2.0 * amax);
        let left = two.iter().filter(|&e| mesh.element_centroid()[e][0] < 0.0).count();
        assert!(left > 0 && left < two.len());
    }
}
