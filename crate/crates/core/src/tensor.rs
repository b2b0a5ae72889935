//! Dense cubic tensors over an `n`-dimensional index space.
//!
//! Storage is row-major: the last index varies fastest. Derivative operators
//! append their new index at the end, so `∂T_{ij}/∂y^k` is stored as `[i, j, k]`.
//! Upper/lower placement is not tracked by the type; each pack documents it.

use std::ops::{Index, IndexMut};

use crate::scalar::Scalar;

#[derive(Clone, Debug, PartialEq)]
pub struct Tensor<T> {
    n: usize,
    rank: usize,
    data: Vec<T>,
}

impl<T: Copy> Tensor<T> {
    pub fn filled(n: usize, rank: usize, v: T) -> Self {
        Self {
            n,
            rank,
            data: vec![v; n.pow(rank as u32)],
        }
    }

    pub fn from_vec(n: usize, rank: usize, data: Vec<T>) -> Self {
        assert_eq!(data.len(), n.pow(rank as u32), "tensor data length");
        Self { n, rank, data }
    }

    /// Build from a function of the multi-index.
    pub fn from_fn(n: usize, rank: usize, mut f: impl FnMut(&[usize]) -> T) -> Self {
        let len = n.pow(rank as u32);
        let mut idx = vec![0usize; rank];
        let mut data = Vec::with_capacity(len);
        for _ in 0..len {
            data.push(f(&idx));
            for d in (0..rank).rev() {
                idx[d] += 1;
                if idx[d] < n {
                    break;
                }
                idx[d] = 0;
            }
        }
        Self { n, rank, data }
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn rank(&self) -> usize {
        self.rank
    }

    #[inline]
    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    #[inline]
    pub fn as_mut_slice(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<T> {
        self.data
    }

    #[inline]
    fn offset(&self, idx: &[usize]) -> usize {
        debug_assert_eq!(idx.len(), self.rank);
        idx.iter().fold(0, |acc, &i| {
            debug_assert!(i < self.n);
            acc * self.n + i
        })
    }

    #[inline]
    pub fn get(&self, idx: &[usize]) -> T {
        self.data[self.offset(idx)]
    }

    pub fn map<U: Copy>(&self, f: impl Fn(T) -> U) -> Tensor<U> {
        Tensor {
            n: self.n,
            rank: self.rank,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn zip_with<U: Copy, V: Copy>(&self, o: &Tensor<U>, f: impl Fn(T, U) -> V) -> Tensor<V> {
        assert_eq!((self.n, self.rank), (o.n, o.rank), "tensor shape mismatch");
        Tensor {
            n: self.n,
            rank: self.rank,
            data: self
                .data
                .iter()
                .zip(&o.data)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        }
    }

    /// All multi-indices in storage order.
    pub fn indices(&self) -> Vec<Vec<usize>> {
        let mut out = Vec::with_capacity(self.data.len());
        let _ = Tensor::from_fn(self.n, self.rank, |i| {
            out.push(i.to_vec());
        });
        out
    }

    /// Reorder indices: result index `d` is source index `perm[d]`.
    pub fn permuted(&self, perm: &[usize]) -> Self {
        assert_eq!(perm.len(), self.rank);
        let mut src = vec![0usize; self.rank];
        Tensor::from_fn(self.n, self.rank, |idx| {
            for (d, &p) in perm.iter().enumerate() {
                src[p] = idx[d];
            }
            self.get(&src)
        })
    }
}

impl<T: Scalar> Tensor<T> {
    pub fn zeros(n: usize, rank: usize) -> Self {
        Self::filled(n, rank, T::zero())
    }

    pub fn identity(n: usize) -> Self {
        Tensor::from_fn(n, 2, |i| if i[0] == i[1] { T::one() } else { T::zero() })
    }

    pub fn from_slice(v: &[T]) -> Self {
        Self::from_vec(v.len(), 1, v.to_vec())
    }

    pub fn lift(t: &Tensor<f64>) -> Self {
        t.map(T::cst)
    }

    pub fn scale(&self, s: T) -> Self {
        self.map(|v| v * s)
    }

    pub fn add(&self, o: &Self) -> Self {
        self.zip_with(o, |a, b| a + b)
    }

    pub fn sub(&self, o: &Self) -> Self {
        self.zip_with(o, |a, b| a - b)
    }

    /// Real parts.
    pub fn re(&self) -> Tensor<f64> {
        self.map(|v| v.re())
    }

    /// Contract the last index with a vector.
    pub fn contract_last(&self, v: &[T]) -> Self {
        assert!(self.rank >= 1 && v.len() == self.n);
        let n = self.n;
        let data = self
            .data
            .chunks(n)
            .map(|row| {
                row.iter()
                    .zip(v)
                    .fold(T::zero(), |acc, (&a, &b)| acc + a * b)
            })
            .collect();
        Tensor {
            n,
            rank: self.rank - 1,
            data,
        }
    }

    /// Contract the first index with a vector.
    pub fn contract_first(&self, v: &[T]) -> Self {
        assert!(self.rank >= 1 && v.len() == self.n);
        let stride = self.data.len() / self.n;
        let mut data = vec![T::zero(); stride];
        for (i, &vi) in v.iter().enumerate() {
            for (d, &a) in data.iter_mut().zip(&self.data[i * stride..(i + 1) * stride]) {
                *d += a * vi;
            }
        }
        Tensor {
            n: self.n,
            rank: self.rank - 1,
            data,
        }
    }

    /// Scalar value of a rank-0 tensor.
    pub fn scalar(&self) -> T {
        assert_eq!(self.rank, 0);
        self.data[0]
    }

    /// Outer product `self ⊗ o`.
    pub fn outer(&self, o: &Self) -> Self {
        assert_eq!(self.n, o.n);
        let mut data = Vec::with_capacity(self.data.len() * o.data.len());
        for &a in &self.data {
            for &b in &o.data {
                data.push(a * b);
            }
        }
        Tensor {
            n: self.n,
            rank: self.rank + o.rank,
            data,
        }
    }
}

impl Tensor<f64> {
    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    pub fn frobenius(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }
}

impl<T: Copy, const R: usize> Index<[usize; R]> for Tensor<T> {
    type Output = T;
    #[inline]
    fn index(&self, idx: [usize; R]) -> &T {
        &self.data[self.offset(&idx)]
    }
}

impl<T: Copy, const R: usize> IndexMut<[usize; R]> for Tensor<T> {
    #[inline]
    fn index_mut(&mut self, idx: [usize; R]) -> &mut T {
        let o = self.offset(&idx);
        &mut self.data[o]
    }
}

/// Dot product of two equal-length slices.
#[inline]
pub fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).fold(T::zero(), |acc, (&x, &y)| acc + x * y)
}

/// Lift constant components.
pub fn lift_vec<T: Scalar>(v: &[f64]) -> Vec<T> {
    v.iter().map(|&c| T::cst(c)).collect()
}

/// `M v` for a rank-2 tensor (contracting `M`'s second index).
pub fn mat_vec<T: Scalar>(m: &Tensor<T>, v: &[T]) -> Vec<T> {
    m.contract_last(v).into_vec()
}

/// `A B` for two rank-2 tensors.
pub fn mat_mul<T: Scalar>(a: &Tensor<T>, b: &Tensor<T>) -> Tensor<T> {
    let n = a.dim();
    Tensor::from_fn(n, 2, |i| {
        (0..n).fold(T::zero(), |acc, k| acc + a[[i[0], k]] * b[[k, i[1]]])
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn row_major_layout() {
        let t: Tensor<f64> = Tensor::from_fn(3, 2, |i| (10 * i[0] + i[1]) as f64);
        assert_eq!(t[[2, 1]], 21.0);
        assert_eq!(t.as_slice()[5], 12.0);
        let p = t.permuted(&[1, 0]);
        assert_eq!(p[[1, 2]], 21.0);
    }

    #[test]
    fn contractions() {
        let t: Tensor<f64> = Tensor::from_fn(2, 3, |i| (i[0] * 4 + i[1] * 2 + i[2]) as f64);
        let v = [1.0, -1.0];
        let last = t.contract_last(&v);
        assert_eq!(last[[1, 0]], -1.0);
        let first = t.contract_first(&v);
        assert_eq!(first[[0, 1]], -4.0);
        let o = Tensor::from_slice(&v).outer(&Tensor::from_slice(&[2.0, 3.0]));
        assert_eq!(o[[1, 1]], -3.0);
    }
}
