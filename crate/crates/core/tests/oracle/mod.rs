//! Rotation-matrix reference implementations, written without the crate's
//! quaternion code, for checking slerp.
#![allow(dead_code)]

pub type Mat = [[f64; 3]; 3];

pub fn from_quat(w: f64, x: f64, y: f64, z: f64) -> Mat {
    [
        [1.0 - 2.0 * (y * y + z * z), 2.0 * (x * y - w * z), 2.0 * (x * z + w * y)],
        [2.0 * (x * y + w * z), 1.0 - 2.0 * (x * x + z * z), 2.0 * (y * z - w * x)],
        [2.0 * (x * z - w * y), 2.0 * (y * z + w * x), 1.0 - 2.0 * (x * x + y * y)],
    ]
}

pub fn mul(a: Mat, b: Mat) -> Mat {
    let mut m = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            m[i][j] = (0..3).map(|k| a[i][k] * b[k][j]).sum();
        }
    }
    m
}

pub fn transpose(a: Mat) -> Mat {
    let mut m = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            m[i][j] = a[j][i];
        }
    }
    m
}

/// Rotation angle of `r`, accurate near zero.
pub fn angle(r: Mat) -> f64 {
    let s = 0.5
        * ((r[2][1] - r[1][2]).powi(2) + (r[0][2] - r[2][0]).powi(2) + (r[1][0] - r[0][1]).powi(2)).sqrt();
    let c = 0.5 * (r[0][0] + r[1][1] + r[2][2] - 1.0);
    s.atan2(c)
}

/// Rotation vector (axis times angle) of `r`.
pub fn log(r: Mat) -> [f64; 3] {
    let th = angle(r);
    if th < 1e-12 {
        return [0.5 * (r[2][1] - r[1][2]), 0.5 * (r[0][2] - r[2][0]), 0.5 * (r[1][0] - r[0][1])];
    }
    let skew = [r[2][1] - r[1][2], r[0][2] - r[2][0], r[1][0] - r[0][1]];
    let axis = if th < std::f64::consts::PI - 1e-3 {
        let s = 2.0 * th.sin();
        [skew[0] / s, skew[1] / s, skew[2] / s]
    } else {
        // Near a half turn the symmetric part carries the axis: (R + I)/2
        // is close to a a^T scaled by (1 - cos)/2.
        let k = (1.0 - th.cos()) * 0.5;
        let d = [(r[0][0] - th.cos()) / (1.0 - th.cos()), (r[1][1] - th.cos()) / (1.0 - th.cos()), (r[2][2] - th.cos()) / (1.0 - th.cos())];
        let i = (0..3).max_by(|&a, &b| d[a].total_cmp(&d[b])).unwrap();
        let mut a = [0.0; 3];
        a[i] = d[i].max(0.0).sqrt();
        for j in 0..3 {
            if j != i {
                a[j] = (r[i][j] + r[j][i]) * 0.5 / (2.0 * k) / a[i];
            }
        }
        // Sign from the skew part.
        if a[0] * skew[0] + a[1] * skew[1] + a[2] * skew[2] < 0.0 {
            a = [-a[0], -a[1], -a[2]];
        }
        let n = (a[0] * a[0] + a[1] * a[1] + a[2] * a[2]).sqrt();
        [a[0] / n, a[1] / n, a[2] / n]
    };
    [axis[0] * th, axis[1] * th, axis[2] * th]
}

/// Rodrigues.
pub fn exp(v: [f64; 3]) -> Mat {
    let th = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
    if th < 1e-15 {
        return [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];
    }
    let (x, y, z) = (v[0] / th, v[1] / th, v[2] / th);
    let (s, c) = th.sin_cos();
    let t = 1.0 - c;
    [
        [c + x * x * t, x * y * t - z * s, x * z * t + y * s],
        [y * x * t + z * s, c + y * y * t, y * z * t - x * s],
        [z * x * t - y * s, z * y * t + x * s, c + z * z * t],
    ]
}

/// Geodesic interpolation `a * exp(w * log(a^T b))`.
pub fn interpolate(a: Mat, b: Mat, w: f64) -> Mat {
    let v = log(mul(transpose(a), b));
    mul(a, exp([v[0] * w, v[1] * w, v[2] * w]))
}

/// Angle between two rotations.
pub fn distance(a: Mat, b: Mat) -> f64 {
    angle(mul(transpose(a), b))
}
