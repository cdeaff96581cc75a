//! Small dense row-major arrays for indexed geometric objects.

use alloc::vec::Vec;
use core::ops::{Index, IndexMut};

#[derive(Debug, Clone, PartialEq)]
pub struct Tensor<T> {
    shape: Vec<usize>,
    data: Vec<T>,
}

impl<T> Tensor<T> {
    pub fn from_fn(shape: &[usize], mut f: impl FnMut(&[usize]) -> T) -> Self {
        let len = shape.iter().product();
        let mut data = Vec::with_capacity(len);
        let mut idx = alloc::vec![0usize; shape.len()];
        for _ in 0..len {
            data.push(f(&idx));
            for axis in (0..shape.len()).rev() {
                idx[axis] += 1;
                if idx[axis] < shape[axis] {
                    break;
                }
                idx[axis] = 0;
            }
        }
        Tensor { shape: shape.to_vec(), data }
    }

    pub fn try_from_fn<E>(
        shape: &[usize],
        mut f: impl FnMut(&[usize]) -> Result<T, E>,
    ) -> Result<Self, E> {
        let mut err = None;
        let t = Tensor::from_fn(shape, |idx| {
            if err.is_some() {
                return None;
            }
            match f(idx) {
                Ok(v) => Some(v),
                Err(e) => {
                    err = Some(e);
                    None
                }
            }
        });
        match err {
            Some(e) => Err(e),
            None => Ok(t.map(|v| v.expect("filled"))),
        }
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn data(&self) -> &[T] {
        &self.data
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    fn offset(&self, idx: &[usize]) -> usize {
        debug_assert_eq!(idx.len(), self.shape.len());
        let mut off = 0;
        for (i, (&k, &d)) in idx.iter().zip(&self.shape).enumerate() {
            assert!(k < d, "index {k} out of bounds for axis {i} of size {d}");
            off = off * d + k;
        }
        off
    }

    pub fn get(&self, idx: &[usize]) -> &T {
        &self.data[self.offset(idx)]
    }

    pub fn get_mut(&mut self, idx: &[usize]) -> &mut T {
        let off = self.offset(idx);
        &mut self.data[off]
    }

    pub fn map<U>(self, f: impl FnMut(T) -> U) -> Tensor<U> {
        Tensor { shape: self.shape, data: self.data.into_iter().map(f).collect() }
    }

    pub fn map_ref<U>(&self, f: impl FnMut(&T) -> U) -> Tensor<U> {
        Tensor { shape: self.shape.clone(), data: self.data.iter().map(f).collect() }
    }

    /// Multi-indices in storage order, paired with the stored values.
    pub fn indexed(&self) -> impl Iterator<Item = (Vec<usize>, &T)> + '_ {
        let shape = self.shape.clone();
        self.data.iter().enumerate().map(move |(mut flat, v)| {
            let mut idx = alloc::vec![0; shape.len()];
            for axis in (0..shape.len()).rev() {
                idx[axis] = flat % shape[axis];
                flat /= shape[axis];
            }
            (idx, v)
        })
    }
}

impl Tensor<f64> {
    pub fn zeros(shape: &[usize]) -> Self {
        Tensor::from_fn(shape, |_| 0.0)
    }

    /// Largest absolute entry (0 for an empty tensor).
    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| if v.abs() > m { v.abs() } else { m })
    }

    /// Largest absolute entrywise difference against a tensor of the same shape.
    pub fn max_abs_diff(&self, other: &Tensor<f64>) -> f64 {
        assert_eq!(self.shape, other.shape, "shape mismatch");
        self.data
            .iter()
            .zip(&other.data)
            .fold(0.0, |m, (a, b)| if (a - b).abs() > m { (a - b).abs() } else { m })
    }
}

impl<T, const R: usize> Index<[usize; R]> for Tensor<T> {
    type Output = T;
    fn index(&self, idx: [usize; R]) -> &T {
        self.get(&idx)
    }
}

impl<T, const R: usize> IndexMut<[usize; R]> for Tensor<T> {
    fn index_mut(&mut self, idx: [usize; R]) -> &mut T {
        self.get_mut(&idx)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn row_major_layout() {
        let t = Tensor::from_fn(&[2, 3], |i| (10 * i[0] + i[1]) as f64);
        assert_eq!(t.data(), &[0.0, 1.0, 2.0, 10.0, 11.0, 12.0]);
        assert_eq!(t[[1, 2]], 12.0);
        let idx: Vec<_> = t.indexed().map(|(i, _)| i).collect();
        assert_eq!(idx[4], alloc::vec![1, 1]);
    }

    #[test]
    fn try_from_fn_stops_at_first_error() {
        let r: Result<Tensor<u8>, &str> =
            Tensor::try_from_fn(&[3], |i| if i[0] == 1 { Err("bad") } else { Ok(1) });
        assert_eq!(r, Err("bad"));
    }

    #[test]
    fn scalar_tensor_has_one_entry() {
        let t = Tensor::from_fn(&[], |_| 7.0);
        assert_eq!(t.len(), 1);
        assert_eq!(t.max_abs(), 7.0);
    }
}
