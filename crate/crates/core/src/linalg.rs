//! Fixed-size dense helpers for the 2x2 and 3x3 systems that show up in the
//! Newton solvers.

#[allow(unused_imports)]
use num_traits::Float;

pub(crate) type Mat2 = [[f64; 2]; 2];
pub(crate) type Mat3 = [[f64; 3]; 3];

pub(crate) fn det2(m: &Mat2) -> f64 {
    m[0][0] * m[1][1] - m[0][1] * m[1][0]
}

pub(crate) fn inv2(m: &Mat2) -> Option<Mat2> {
    let d = det2(m);
    let scale = m.iter().flatten().fold(0.0f64, |acc, x| acc.max(x.abs()));
    if d == 0.0 || !d.is_finite() || d.abs() <= 1e-300 * scale * scale {
        return None;
    }
    Some([[m[1][1] / d, -m[0][1] / d], [-m[1][0] / d, m[0][0] / d]])
}

/// Gaussian elimination with partial pivoting.
#[allow(clippy::needless_range_loop)]
pub(crate) fn solve3(m: &Mat3, rhs: [f64; 3]) -> Option<[f64; 3]> {
    let mut a = *m;
    let mut b = rhs;
    for col in 0..3 {
        let pivot = (col..3)
            .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
            .unwrap_or(col);
        if a[pivot][col] == 0.0 || !a[pivot][col].is_finite() {
            return None;
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in col + 1..3 {
            let f = a[row][col] / a[col][col];
            for k in col..3 {
                a[row][k] -= f * a[col][k];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = [0.0; 3];
    for row in (0..3).rev() {
        let mut acc = b[row];
        for k in row + 1..3 {
            acc -= a[row][k] * x[k];
        }
        x[row] = acc / a[row][row];
    }
    x.iter().all(|v| v.is_finite()).then_some(x)
}

pub(crate) fn norm3(v: [f64; 3]) -> f64 {
    (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt()
}

pub(crate) fn cross3(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

pub(crate) fn dot3(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solve3_recovers_known_solution() {
        let m = [[2.0, 1.0, 0.0], [0.0, 0.0, 3.0], [1.0, -1.0, 1.0]];
        let x = [1.0, -2.0, 0.5];
        let rhs = [
            2.0 * x[0] + x[1],
            3.0 * x[2],
            x[0] - x[1] + x[2],
        ];
        let got = solve3(&m, rhs).unwrap();
        for i in 0..3 {
            assert!((got[i] - x[i]).abs() < 1e-14);
        }
    }

    #[test]
    fn singular_matrices_are_rejected() {
        assert!(inv2(&[[1.0, 2.0], [2.0, 4.0]]).is_none());
        assert!(solve3(&[[1.0, 0.0, 0.0], [0.0, 0.0, 0.0], [0.0, 0.0, 1.0]], [1.0; 3]).is_none());
    }
}
