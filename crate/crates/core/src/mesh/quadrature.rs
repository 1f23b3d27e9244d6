//! Symmetric Gauss rules on the reference triangle `{xi >= 0, eta >= 0, xi + eta <= 1}`.

use crate::error::{Error, Result};

pub const SUPPORTED_DEGREES: &[usize] = &[2, 4, 6, 8];

#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    /// `(xi, eta)` reference coordinates.
    pub points: Vec<(f64, f64)>,
    /// Positive weights summing to 1/2.
    pub weights: Vec<f64>,
}

enum Orbit {
    Centroid(f64),
    S21(f64, f64),
    S111(f64, f64, f64),
}

// Weights below are normalized to a unit-area triangle.
const DEGREE_2: &[Orbit] = &[Orbit::S21(1.0 / 6.0, 1.0 / 3.0)];

const DEGREE_4: &[Orbit] = &[
    Orbit::S21(0.445_948_490_915_964_886_32, 0.223_381_589_678_011_465_7),
    Orbit::S21(0.091_576_213_509_770_743_46, 0.109_951_743_655_321_867_64),
];

const DEGREE_6: &[Orbit] = &[
    Orbit::S21(0.249_286_745_170_910_421_29, 0.116_786_275_726_379_366_03),
    Orbit::S21(0.063_089_014_491_502_228_34, 0.050_844_906_370_206_816_921),
    Orbit::S111(
        0.053_145_049_844_816_947_353,
        0.310_352_451_033_784_405_42,
        0.082_851_075_618_373_575_194,
    ),
];

const DEGREE_8: &[Orbit] = &[
    Orbit::Centroid(0.144_315_607_677_787_168_25),
    Orbit::S21(0.459_292_588_292_723_156_03, 0.095_091_634_267_284_624_794),
    Orbit::S21(0.170_569_307_751_760_206_62, 0.103_217_370_534_718_250_28),
    Orbit::S21(0.050_547_228_317_030_975_458, 0.032_458_497_623_198_080_311),
    Orbit::S111(
        0.008_394_777_409_957_605_337_2,
        0.263_112_829_634_638_113_42,
        0.027_230_314_174_434_994_265,
    ),
];

fn expand(orbits: &[Orbit]) -> QuadratureRule {
    let mut points = Vec::new();
    let mut weights = Vec::new();
    for orbit in orbits {
        match *orbit {
            Orbit::Centroid(w) => {
                points.push((1.0 / 3.0, 1.0 / 3.0));
                weights.push(0.5 * w);
            }
            Orbit::S21(a, w) => {
                let b = 1.0 - 2.0 * a;
                for p in [(a, a), (a, b), (b, a)] {
                    points.push(p);
                    weights.push(0.5 * w);
                }
            }
            Orbit::S111(a, b, w) => {
                let c = 1.0 - a - b;
                for p in [(a, b), (b, a), (a, c), (c, a), (b, c), (c, b)] {
                    points.push(p);
                    weights.push(0.5 * w);
                }
            }
        }
    }
    QuadratureRule { points, weights }
}

/// Rule exact for polynomials of total degree `degree`.
pub fn quadrature_rule(degree: usize) -> Result<QuadratureRule> {
    let orbits = match degree {
        2 => DEGREE_2,
        4 => DEGREE_4,
        6 => DEGREE_6,
        8 => DEGREE_8,
        _ => {
            return Err(Error::UnsupportedDegree {
                requested: degree,
                supported: SUPPORTED_DEGREES,
            })
        }
    };
    Ok(expand(orbits))
}

/// The three corners of a sub-triangle of the reference triangle.
pub type SubTriangle = [(f64, f64); 3];

/// Splits a triangle into its four midpoint children.
pub fn split4(t: &SubTriangle) -> [SubTriangle; 4] {
    let mid = |a: (f64, f64), b: (f64, f64)| (0.5 * (a.0 + b.0), 0.5 * (a.1 + b.1));
    let [a, b, c] = *t;
    let (ab, bc, ca) = (mid(a, b), mid(b, c), mid(c, a));
    [[a, ab, ca], [ab, b, bc], [ca, bc, c], [bc, ca, ab]]
}

impl QuadratureRule {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// The same rule mapped affinely onto a sub-triangle, weights scaled by
    /// the area ratio.
    pub fn mapped(&self, t: &SubTriangle) -> QuadratureRule {
        let [a, b, c] = *t;
        let (e1, e2) = ((b.0 - a.0, b.1 - a.1), (c.0 - a.0, c.1 - a.1));
        let scale = (e1.0 * e2.1 - e1.1 * e2.0).abs();
        let points = self
            .points
            .iter()
            .map(|&(s, t)| (a.0 + s * e1.0 + t * e2.0, a.1 + s * e1.1 + t * e2.1))
            .collect();
        let weights = self.weights.iter().map(|w| w * scale).collect();
        QuadratureRule { points, weights }
    }

    /// Composite rule over the `4^levels` congruent sub-triangles.
    pub fn subdivided(&self, levels: u32) -> QuadratureRule {
        let mut tris: Vec<SubTriangle> = vec![[(0.0, 0.0), (1.0, 0.0), (0.0, 1.0)]];
        for _ in 0..levels {
            tris = tris.iter().flat_map(split4).collect();
        }
        let mut out = QuadratureRule {
            points: Vec::with_capacity(tris.len() * self.len()),
            weights: Vec::with_capacity(tris.len() * self.len()),
        };
        for t in &tris {
            let m = self.mapped(t);
            out.points.extend(m.points);
            out.weights.extend(m.weights);
        }
        out
    }

    pub fn integrate(&self, f: impl Fn(f64, f64) -> f64) -> f64 {
        self.points
            .iter()
            .zip(&self.weights)
            .map(|(&(x, y), w)| w * f(x, y))
            .sum()
    }
}
