//! Small dense matrix helpers.

use crate::scalar::Real;

pub(crate) type Mat4<T> = [[T; 4]; 4];

pub(crate) fn matmul<T: Real>(a: &Mat4<T>, b: &Mat4<T>) -> Mat4<T> {
    std::array::from_fn(|i| std::array::from_fn(|j| (0..4).map(|k| a[i][k] * b[k][j]).sum()))
}

/// `e^A` by scaling and squaring with a Taylor core.
pub(crate) fn expm4<T: Real>(a: &Mat4<T>) -> Mat4<T> {
    let norm = a
        .iter()
        .map(|r| r.iter().map(|v| v.abs()).sum::<T>())
        .fold(T::zero(), |m, v| m.max(v));
    let mut squarings = 0u32;
    let mut scale = T::one();
    while norm * scale > T::lit(0.25) {
        scale = scale / T::lit(2.0);
        squarings += 1;
    }
    let s: Mat4<T> = std::array::from_fn(|i| std::array::from_fn(|j| a[i][j] * scale));
    let identity: Mat4<T> = std::array::from_fn(|i| std::array::from_fn(|j| if i == j { T::one() } else { T::zero() }));
    let mut result = identity;
    let mut term = identity;
    for k in 1..=20 {
        term = matmul(&term, &s);
        let inv = T::count(k).recip();
        term = term.map(|r| r.map(|v| v * inv));
        result = std::array::from_fn(|i| std::array::from_fn(|j| result[i][j] + term[i][j]));
    }
    for _ in 0..squarings {
        result = matmul(&result, &result);
    }
    result
}

/// `m·v`.
pub(crate) fn apply4<T: Real>(m: &Mat4<T>, v: [T; 4]) -> [T; 4] {
    std::array::from_fn(|i| (0..4).map(|k| m[i][k] * v[k]).sum())
}
