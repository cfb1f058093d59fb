//! Small dense vector helpers for points in `R^d`, `d` in {2, 3}.

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

pub fn add(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

pub fn scale(a: &[f64], s: f64) -> Vec<f64> {
    a.iter().map(|x| x * s).collect()
}

/// `a + s * b`
pub fn axpy(a: &[f64], s: f64, b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x + s * y).collect()
}

pub fn normalize(a: &[f64]) -> Vec<f64> {
    let n = norm(a);
    scale(a, 1.0 / n)
}

pub fn cross(a: &[f64], b: &[f64]) -> [f64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

/// Unit vector `e_axis` in `R^dim`.
pub fn unit(dim: usize, axis: usize) -> Vec<f64> {
    let mut e = vec![0.0; dim];
    e[axis] = 1.0;
    e
}

/// Deterministic orthonormal basis of `v^perp` for a unit vector `v`.
///
/// In 2D the basis vector is `(v_2, -v_1)`, so `v = e_2` yields `e_1`. In 3D
/// the standard basis vector with the smallest `|v_i|` (first on ties) is
/// orthogonalised against `v` and completed by `v x b_1`; `v = e_3` yields
/// `(e_1, e_2)`.
pub fn orthonormal_complement(v: &[f64]) -> Vec<Vec<f64>> {
    match v.len() {
        2 => vec![vec![v[1], -v[0]]],
        3 => {
            let mut axis = 0;
            for i in 1..3 {
                if v[i].abs() < v[axis].abs() {
                    axis = i;
                }
            }
            let e = unit(3, axis);
            let b1 = normalize(&axpy(&e, -v[axis], v));
            let b2 = cross(v, &b1).to_vec();
            vec![b1, b2]
        }
        d => {
            // Gram-Schmidt over the standard basis for completeness.
            let mut basis: Vec<Vec<f64>> = Vec::new();
            for axis in 0..d {
                let mut w = unit(d, axis);
                let c = dot(&w, v);
                w = axpy(&w, -c, v);
                for b in &basis {
                    let c = dot(&w, b);
                    w = axpy(&w, -c, b);
                }
                if norm(&w) > 1e-8 {
                    basis.push(normalize(&w));
                }
                if basis.len() == d - 1 {
                    break;
                }
            }
            basis
        }
    }
}

/// Row-major multi-index of `flat` for `dims` axes of length `n`.
pub fn unflatten(mut flat: usize, n: usize, dims: usize) -> Vec<usize> {
    let mut idx = vec![0; dims];
    for a in (0..dims).rev() {
        idx[a] = flat % n;
        flat /= n;
    }
    idx
}

pub fn flatten(idx: &[usize], n: usize) -> usize {
    idx.iter().fold(0, |acc, &i| acc * n + i)
}
