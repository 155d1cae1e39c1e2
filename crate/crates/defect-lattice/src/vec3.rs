//! Fixed size vector helpers. Every position lives in R^3; planar
//! lattices keep a zero third component.

pub type Vec3 = [f64; 3];

#[inline]
pub fn add(a: Vec3, b: Vec3) -> Vec3 {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}

#[inline]
pub fn sub(a: Vec3, b: Vec3) -> Vec3 {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

#[inline]
pub fn scale(s: f64, a: Vec3) -> Vec3 {
    [s * a[0], s * a[1], s * a[2]]
}

#[inline]
pub fn dot(a: Vec3, b: Vec3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

#[inline]
pub fn norm(a: Vec3) -> f64 {
    dot(a, a).sqrt()
}

#[inline]
pub fn norm2(a: Vec3) -> f64 {
    dot(a, a)
}

#[inline]
pub fn axpy(s: f64, x: Vec3, y: &mut Vec3) {
    y[0] += s * x[0];
    y[1] += s * x[1];
    y[2] += s * x[2];
}

pub type Mat3 = [[f64; 3]; 3];

pub const ZERO3: Mat3 = [[0.0; 3]; 3];

#[inline]
pub fn outer(a: Vec3, b: Vec3) -> Mat3 {
    let mut m = ZERO3;
    for i in 0..3 {
        for j in 0..3 {
            m[i][j] = a[i] * b[j];
        }
    }
    m
}

#[inline]
pub fn mat_add_scaled(m: &mut Mat3, s: f64, x: &Mat3) {
    for i in 0..3 {
        for j in 0..3 {
            m[i][j] += s * x[i][j];
        }
    }
}

pub fn transpose(m: &Mat3) -> Mat3 {
    let mut t = ZERO3;
    for i in 0..3 {
        for j in 0..3 {
            t[i][j] = m[j][i];
        }
    }
    t
}

pub fn matvec(m: &Mat3, v: Vec3) -> Vec3 {
    [dot(m[0], v), dot(m[1], v), dot(m[2], v)]
}
