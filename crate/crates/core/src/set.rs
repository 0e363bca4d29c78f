use crate::mesh::TriMesh;

/// A set of element indices, kept sorted and unique.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct ElementSet(Vec<usize>);

impl ElementSet {
    pub fn new(mut elements: Vec<usize>) -> Self {
        elements.sort_unstable();
        elements.dedup();
        ElementSet(elements)
    }

    pub fn empty() -> Self {
        ElementSet(Vec::new())
    }

    pub fn all(n: usize) -> Self {
        ElementSet((0..n).collect())
    }

    pub fn from_mask(mask: &[bool]) -> Self {
        ElementSet(
            mask.iter()
                .enumerate()
                .filter_map(|(e, &m)| m.then_some(e))
                .collect(),
        )
    }

    pub fn mask(&self, n: usize) -> Vec<bool> {
        let mut m = vec![false; n];
        for &e in &self.0 {
            m[e] = true;
        }
        m
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.0.iter().copied()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, e: usize) -> bool {
        self.0.binary_search(&e).is_ok()
    }

    pub fn max_index(&self) -> Option<usize> {
        self.0.last().copied()
    }

    pub fn measure(&self, mesh: &TriMesh) -> f64 {
        let area = mesh.element_area();
        self.0.iter().map(|&e| area[e]).sum()
    }

    /// Elements of `self` not in `other`.
    pub fn difference(&self, other: &ElementSet) -> ElementSet {
        ElementSet(self.0.iter().copied().filter(|&e| !other.contains(e)).collect())
    }

    pub fn union(&self, other: &ElementSet) -> ElementSet {
        ElementSet::new(self.0.iter().chain(other.0.iter()).copied().collect())
    }

    pub fn intersection(&self, other: &ElementSet) -> ElementSet {
        ElementSet(self.0.iter().copied().filter(|&e| other.contains(e)).collect())
    }

    pub fn symmetric_difference_area(&self, other: &ElementSet, mesh: &TriMesh) -> f64 {
        self.difference(other).measure(mesh) + other.difference(self).measure(mesh)
    }
}

impl FromIterator<usize> for ElementSet {
    fn from_iter<I: IntoIterator<Item = usize>>(iter: I) -> Self {
        ElementSet::new(iter.into_iter().collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn set_algebra() {
        let a = ElementSet::new(vec![3, 1, 2, 3]);
        let b: ElementSet = [2, 5].into_iter().collect();
        assert_eq!(a.as_slice(), &[1, 2, 3]);
        assert_eq!(a.difference(&b).as_slice(), &[1, 3]);
        assert_eq!(a.union(&b).as_slice(), &[1, 2, 3, 5]);
        assert_eq!(a.intersection(&b).as_slice(), &[2]);
        assert_eq!(ElementSet::from_mask(&a.mask(6)), a);
    }
}
