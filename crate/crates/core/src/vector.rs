//! Small fixed-size vector helpers. Points are always stored with three
//! coordinates; two-dimensional problems keep `z = 0`.

pub type Point = [f64; 3];

#[inline]
pub fn sub(a: Point, b: Point) -> Point {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

#[inline]
pub fn add(a: Point, b: Point) -> Point {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}

#[inline]
pub fn scale(a: Point, s: f64) -> Point {
    [a[0] * s, a[1] * s, a[2] * s]
}

#[inline]
pub fn dot(a: Point, b: Point) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

#[inline]
pub fn norm(a: Point) -> f64 {
    dot(a, a).sqrt()
}

pub fn dist(a: Point, b: Point) -> f64 {
    norm(sub(a, b))
}

/// Rotation by `angle` about the `z` axis.
pub fn rotate_z(p: Point, angle: f64) -> Point {
    let (s, c) = angle.sin_cos();
    [c * p[0] - s * p[1], s * p[0] + c * p[1], p[2]]
}

/// Spherical point from radius, azimuth and polar cosine.
pub fn spherical(r: f64, phi: f64, cos_theta: f64) -> Point {
    let sin_theta = (1.0 - cos_theta * cos_theta).max(0.0).sqrt();
    let (s, c) = phi.sin_cos();
    [r * sin_theta * c, r * sin_theta * s, r * cos_theta]
}
