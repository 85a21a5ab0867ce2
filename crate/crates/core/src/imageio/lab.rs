//! sRGB <-> CIE L*a*b* (D65).
//!
//! sRGB companding uses the piecewise IEC 61966-2-1 curve (threshold 0.04045,
//! exponent 2.4). Linear RGB maps to XYZ with
//!
//! ```text
//! [0.4124564 0.3575761 0.1804375]
//! [0.2126729 0.7151522 0.0721750]
//! [0.0193339 0.1191920 0.9503041]
//! ```
//!
//! and back with the exact inverse of that matrix (computed at compile time,
//! not the rounded published inverse). The reference white is
//! `(0.95047, 1.0, 1.08883)`.

const RGB_TO_XYZ: [[f64; 3]; 3] = [
    [0.4124564, 0.3575761, 0.1804375],
    [0.2126729, 0.7151522, 0.0721750],
    [0.0193339, 0.1191920, 0.9503041],
];

const XYZ_TO_RGB: [[f64; 3]; 3] = invert3(&RGB_TO_XYZ);

const fn minor(m: &[[f64; 3]; 3], r0: usize, r1: usize, c0: usize, c1: usize) -> f64 {
    m[r0][c0] * m[r1][c1] - m[r0][c1] * m[r1][c0]
}

const fn invert3(m: &[[f64; 3]; 3]) -> [[f64; 3]; 3] {
    let c00 = minor(m, 1, 2, 1, 2);
    let c01 = -minor(m, 1, 2, 0, 2);
    let c02 = minor(m, 1, 2, 0, 1);
    let det = m[0][0] * c00 + m[0][1] * c01 + m[0][2] * c02;
    [
        [
            c00 / det,
            -minor(m, 0, 2, 1, 2) / det,
            minor(m, 0, 1, 1, 2) / det,
        ],
        [
            c01 / det,
            minor(m, 0, 2, 0, 2) / det,
            -minor(m, 0, 1, 0, 2) / det,
        ],
        [
            c02 / det,
            -minor(m, 0, 2, 0, 1) / det,
            minor(m, 0, 1, 0, 1) / det,
        ],
    ]
}

const WHITE: [f64; 3] = [0.95047, 1.0, 1.08883];

const DELTA: f64 = 6.0 / 29.0;

fn to_linear(c: f64) -> f64 {
    if c <= 0.04045 {
        c / 12.92
    } else {
        ((c + 0.055) / 1.055).powf(2.4)
    }
}

fn from_linear(c: f64) -> f64 {
    if c <= 0.0031308 {
        12.92 * c
    } else {
        1.055 * c.powf(1.0 / 2.4) - 0.055
    }
}

fn mul(m: &[[f64; 3]; 3], v: [f64; 3]) -> [f64; 3] {
    [0, 1, 2].map(|r| m[r][0] * v[0] + m[r][1] * v[1] + m[r][2] * v[2])
}

fn f(t: f64) -> f64 {
    if t > DELTA * DELTA * DELTA {
        t.cbrt()
    } else {
        t / (3.0 * DELTA * DELTA) + 4.0 / 29.0
    }
}

fn f_inv(t: f64) -> f64 {
    if t > DELTA {
        t * t * t
    } else {
        3.0 * DELTA * DELTA * (t - 4.0 / 29.0)
    }
}

pub fn srgb_to_lab(rgb: [f64; 3]) -> [f64; 3] {
    let xyz = mul(&RGB_TO_XYZ, rgb.map(to_linear));
    let [fx, fy, fz] = [0, 1, 2].map(|i| f(xyz[i] / WHITE[i]));
    [116.0 * fy - 16.0, 500.0 * (fx - fy), 200.0 * (fy - fz)]
}

/// Inverse of [`srgb_to_lab`]. Out-of-gamut colors come back outside `[0, 1]`.
pub fn lab_to_srgb(lab: [f64; 3]) -> [f64; 3] {
    let fy = (lab[0] + 16.0) / 116.0;
    let fx = fy + lab[1] / 500.0;
    let fz = fy - lab[2] / 200.0;
    let xyz = [fx, fy, fz]
        .iter()
        .zip(WHITE)
        .map(|(&t, w)| w * f_inv(t))
        .collect::<Vec<_>>();
    mul(&XYZ_TO_RGB, [xyz[0], xyz[1], xyz[2]]).map(from_linear)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_colors() {
        let white = srgb_to_lab([1.0, 1.0, 1.0]);
        assert!((white[0] - 100.0).abs() < 1e-3);
        assert!(white[1].abs() < 1e-2 && white[2].abs() < 1e-2);
        assert_eq!(srgb_to_lab([0.0; 3]), [0.0, 0.0, 0.0]);
        // sRGB red in D65 Lab ≈ (53.24, 80.09, 67.20)
        let red = srgb_to_lab([1.0, 0.0, 0.0]);
        assert!((red[0] - 53.24).abs() < 0.01);
        assert!((red[1] - 80.09).abs() < 0.01);
        assert!((red[2] - 67.20).abs() < 0.01);
    }

    #[test]
    fn inverse_matrix() {
        for i in 0..3 {
            for j in 0..3 {
                let p: f64 = (0..3).map(|k| XYZ_TO_RGB[i][k] * RGB_TO_XYZ[k][j]).sum();
                assert!((p - if i == j { 1.0 } else { 0.0 }).abs() < 1e-14);
            }
        }
        // agrees with the commonly published rounded inverse
        assert!((XYZ_TO_RGB[0][0] - 3.2404542).abs() < 1e-6);
    }

    #[test]
    fn round_trip() {
        for r in [0.0, 0.02, 0.3, 0.7, 1.0] {
            for g in [0.0, 0.5, 1.0] {
                for b in [0.1, 0.9] {
                    let back = lab_to_srgb(srgb_to_lab([r, g, b]));
                    for (x, y) in back.iter().zip([r, g, b]) {
                        assert!((x - y).abs() < 1e-12, "{r} {g} {b} -> {back:?}");
                    }
                }
            }
        }
    }
}
