/// Bijection between reduced unknowns and (field, spatial mode, temporal mode)
/// triples, with `ℓ = ℓ_s n_t + ℓ_t` inside each field and fields stacked in order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IndexMap {
    shapes: Vec<(usize, usize)>,
    offsets: Vec<usize>,
}

impl IndexMap {
    pub fn new(shapes: Vec<(usize, usize)>) -> Self {
        let mut offsets = Vec::with_capacity(shapes.len() + 1);
        let mut acc = 0;
        offsets.push(0);
        for &(s, t) in &shapes {
            acc += s * t;
            offsets.push(acc);
        }
        Self { shapes, offsets }
    }

    pub fn n_fields(&self) -> usize {
        self.shapes.len()
    }

    pub fn shape(&self, field: usize) -> (usize, usize) {
        self.shapes[field]
    }

    pub fn offset(&self, field: usize) -> usize {
        self.offsets[field]
    }

    pub fn field_len(&self, field: usize) -> usize {
        self.offsets[field + 1] - self.offsets[field]
    }

    pub fn total(&self) -> usize {
        *self.offsets.last().unwrap()
    }

    pub fn index(&self, field: usize, ls: usize, lt: usize) -> usize {
        let (ns, nt) = self.shapes[field];
        debug_assert!(ls < ns && lt < nt);
        self.offsets[field] + ls * nt + lt
    }

    pub fn locate(&self, idx: usize) -> (usize, usize, usize) {
        assert!(idx < self.total(), "index {idx} out of range");
        let f = self.offsets.partition_point(|&o| o <= idx) - 1;
        let nt = self.shapes[f].1;
        let local = idx - self.offsets[f];
        (f, local / nt, local % nt)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn index_and_locate_are_inverse() {
        let m = IndexMap::new(vec![(3, 4), (2, 5), (1, 1), (2, 2)]);
        assert_eq!(m.total(), 12 + 10 + 1 + 4);
        assert_eq!(m.index(1, 1, 2), 12 + 5 + 2);
        for i in 0..m.total() {
            let (f, s, t) = m.locate(i);
            assert_eq!(m.index(f, s, t), i);
        }
    }
}
