//! Fixed-size 2x2 helpers. Everything in this crate is a two-node network,
//! so a general matrix library would only add noise.

pub type Vec2 = [f64; 2];
pub type Mat2 = [[f64; 2]; 2];

pub const IDENTITY: Mat2 = [[1.0, 0.0], [0.0, 1.0]];

pub fn transpose(m: &Mat2) -> Mat2 {
    [[m[0][0], m[1][0]], [m[0][1], m[1][1]]]
}

pub fn mat_vec(m: &Mat2, v: Vec2) -> Vec2 {
    [
        m[0][0] * v[0] + m[0][1] * v[1],
        m[1][0] * v[0] + m[1][1] * v[1],
    ]
}

pub fn sub(a: &Mat2, b: &Mat2) -> Mat2 {
    [
        [a[0][0] - b[0][0], a[0][1] - b[0][1]],
        [a[1][0] - b[1][0], a[1][1] - b[1][1]],
    ]
}

pub fn det(m: &Mat2) -> f64 {
    m[0][0] * m[1][1] - m[0][1] * m[1][0]
}

pub fn trace(m: &Mat2) -> f64 {
    m[0][0] + m[1][1]
}

/// Solves `m x = b` by Cramer's rule; `None` if `m` is (numerically) singular.
pub fn solve(m: &Mat2, b: Vec2) -> Option<Vec2> {
    let d = det(m);
    let scale = m.iter().flatten().fold(0.0_f64, |acc, x| acc.max(x.abs()));
    if !d.is_finite() || d.abs() <= 1e-14 * scale * scale.max(1.0) {
        return None;
    }
    Some([
        (b[0] * m[1][1] - m[0][1] * b[1]) / d,
        (m[0][0] * b[1] - b[0] * m[1][0]) / d,
    ])
}

/// Spectral radius of a 2x2 matrix with nonnegative entries. The
/// off-diagonal product is nonnegative, so both eigenvalues are real.
pub fn spectral_radius_nonneg(m: &Mat2) -> f64 {
    let half_tr = 0.5 * (m[0][0] + m[1][1]);
    let half_diff = 0.5 * (m[0][0] - m[1][1]);
    let disc = (half_diff * half_diff + m[0][1] * m[1][0]).max(0.0).sqrt();
    (half_tr + disc).abs().max((half_tr - disc).abs())
}

pub fn dot(a: Vec2, b: Vec2) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

pub fn max_abs_diff(a: Vec2, b: Vec2) -> f64 {
    (a[0] - b[0]).abs().max((a[1] - b[1]).abs())
}

pub fn norm_inf(a: Vec2) -> f64 {
    a[0].abs().max(a[1].abs())
}
