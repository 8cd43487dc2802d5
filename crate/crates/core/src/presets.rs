//! Initial conditions used by the experiments on the unit square.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use crate::error::Error;
use crate::mesh::Point;

/// A scalar field on the unit square, optionally with the derivative data
/// needed for Ritz-projected initialization.
pub trait InitialField {
    fn value(&self, p: Point) -> f64;

    fn gradient(&self, _p: Point) -> Option<[f64; 2]> {
        None
    }

    fn laplacian(&self, _p: Point) -> Option<f64> {
        None
    }

    /// `∇(Δφ)`.
    fn laplacian_gradient(&self, _p: Point) -> Option<[f64; 2]> {
        None
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Preset {
    /// `½ (1 - cos 4πx)(1 - cos 2πy) - 1`.
    Cosine,
    /// `-1.01 tanh(((x-½)²/0.075 + (y-½)²/0.05 - 1) / (2√ε))`.
    Oval,
    /// `+1` on the closed cross bounded by the lines 0.3, 0.4, 0.6, 0.7 in
    /// both coordinates, `-1` elsewhere.
    Cross,
    Constant(f64),
}

impl Preset {
    /// The preset as a field; only the oval depends on `eps`.
    pub fn field(self, eps: f64) -> PresetField {
        PresetField { preset: self, eps }
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Preset::Cosine => write!(f, "cosine"),
            Preset::Oval => write!(f, "oval"),
            Preset::Cross => write!(f, "cross"),
            Preset::Constant(v) => write!(f, "constant:{v}"),
        }
    }
}

impl FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        match s.trim() {
            "cosine" => Ok(Preset::Cosine),
            "oval" => Ok(Preset::Oval),
            "cross" => Ok(Preset::Cross),
            other => match other.strip_prefix("constant:") {
                Some(v) => v
                    .trim()
                    .parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .map(Preset::Constant)
                    .ok_or_else(|| Error::InvalidArgument(format!("bad constant preset `{other}`"))),
                None => Err(Error::InvalidArgument(format!("unknown preset `{other}`"))),
            },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PresetField {
    pub preset: Preset,
    pub eps: f64,
}

const OVAL_AX: f64 = 0.075;
const OVAL_AY: f64 = 0.05;

impl PresetField {
    fn oval_arg(&self, p: Point) -> (f64, [f64; 2], f64) {
        let scale = 1.0 / (2.0 * self.eps.sqrt());
        let (dx, dy) = (p[0] - 0.5, p[1] - 0.5);
        let s = (dx * dx / OVAL_AX + dy * dy / OVAL_AY - 1.0) * scale;
        let grad = [2.0 * dx / OVAL_AX * scale, 2.0 * dy / OVAL_AY * scale];
        let lap = (2.0 / OVAL_AX + 2.0 / OVAL_AY) * scale;
        (s, grad, lap)
    }
}

fn in_cross(p: Point) -> bool {
    let within = |v: f64, lo: f64, hi: f64| (lo..=hi).contains(&v);
    (within(p[0], 0.4, 0.6) && within(p[1], 0.3, 0.7))
        || (within(p[0], 0.3, 0.7) && within(p[1], 0.4, 0.6))
}

impl InitialField for PresetField {
    fn value(&self, p: Point) -> f64 {
        match self.preset {
            Preset::Cosine => {
                0.5 * (1.0 - (4.0 * PI * p[0]).cos()) * (1.0 - (2.0 * PI * p[1]).cos()) - 1.0
            }
            Preset::Oval => -1.01 * self.oval_arg(p).0.tanh(),
            Preset::Cross => {
                if in_cross(p) {
                    1.0
                } else {
                    -1.0
                }
            }
            Preset::Constant(v) => v,
        }
    }

    fn gradient(&self, p: Point) -> Option<[f64; 2]> {
        match self.preset {
            Preset::Cosine => {
                let a = 1.0 - (4.0 * PI * p[0]).cos();
                let b = 1.0 - (2.0 * PI * p[1]).cos();
                Some([
                    2.0 * PI * (4.0 * PI * p[0]).sin() * b,
                    PI * a * (2.0 * PI * p[1]).sin(),
                ])
            }
            Preset::Oval => {
                let (s, g, _) = self.oval_arg(p);
                let sech2 = 1.0 - s.tanh().powi(2);
                Some([-1.01 * sech2 * g[0], -1.01 * sech2 * g[1]])
            }
            Preset::Cross => None,
            Preset::Constant(_) => Some([0.0, 0.0]),
        }
    }

    fn laplacian(&self, p: Point) -> Option<f64> {
        match self.preset {
            Preset::Cosine => {
                let a = 1.0 - (4.0 * PI * p[0]).cos();
                let b = 1.0 - (2.0 * PI * p[1]).cos();
                Some(
                    8.0 * PI * PI * (4.0 * PI * p[0]).cos() * b
                        + 2.0 * PI * PI * a * (2.0 * PI * p[1]).cos(),
                )
            }
            Preset::Oval => {
                let (s, g, lap) = self.oval_arg(p);
                let th = s.tanh();
                let sech2 = 1.0 - th * th;
                Some(-1.01 * sech2 * (lap - 2.0 * th * (g[0] * g[0] + g[1] * g[1])))
            }
            Preset::Cross => None,
            Preset::Constant(_) => Some(0.0),
        }
    }

    fn laplacian_gradient(&self, p: Point) -> Option<[f64; 2]> {
        match self.preset {
            Preset::Cosine => {
                let (sx, cx) = (4.0 * PI * p[0]).sin_cos();
                let (sy, cy) = (2.0 * PI * p[1]).sin_cos();
                let pi3 = PI * PI * PI;
                Some([
                    -32.0 * pi3 * sx * (1.0 - cy) + 8.0 * pi3 * sx * cy,
                    16.0 * pi3 * cx * sy - 4.0 * pi3 * (1.0 - cx) * sy,
                ])
            }
            Preset::Constant(_) => Some([0.0, 0.0]),
            Preset::Oval | Preset::Cross => None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fd_gradient(f: impl Fn(Point) -> f64, p: Point) -> [f64; 2] {
        let h = 1e-6;
        [
            (f([p[0] + h, p[1]]) - f([p[0] - h, p[1]])) / (2.0 * h),
            (f([p[0], p[1] + h]) - f([p[0], p[1] - h])) / (2.0 * h),
        ]
    }

    #[test]
    fn parse_and_display() {
        for s in ["cosine", "oval", "cross", "constant:1", "constant:-0.5"] {
            let p: Preset = s.parse().unwrap();
            assert_eq!(p.to_string().parse::<Preset>().unwrap(), p);
        }
        assert!("square".parse::<Preset>().is_err());
        assert!("constant:abc".parse::<Preset>().is_err());
    }

    #[test]
    fn derivatives_match_finite_differences() {
        let pts = [[0.13, 0.71], [0.5, 0.5], [0.62, 0.27], [0.9, 0.05]];
        for preset in [Preset::Cosine, Preset::Oval] {
            let f = preset.field(0.03);
            for &p in &pts {
                let g = f.gradient(p).unwrap();
                let fd = fd_gradient(|x| f.value(x), p);
                for k in 0..2 {
                    assert!((g[k] - fd[k]).abs() < 1e-5 * (1.0 + g[k].abs()), "{preset} grad");
                }
                let div = fd_gradient(|x| f.gradient(x).unwrap()[0], p)[0]
                    + fd_gradient(|x| f.gradient(x).unwrap()[1], p)[1];
                let lap = f.laplacian(p).unwrap();
                assert!((lap - div).abs() < 1e-4 * (1.0 + lap.abs()), "{preset} laplacian");
            }
        }
        let f = Preset::Cosine.field(0.05);
        for &p in &pts {
            let g = f.laplacian_gradient(p).unwrap();
            let fd = fd_gradient(|x| f.laplacian(x).unwrap(), p);
            for k in 0..2 {
                assert!((g[k] - fd[k]).abs() < 1e-4 * (1.0 + g[k].abs()));
            }
        }
    }

    #[test]
    fn cross_is_closed() {
        let f = Preset::Cross.field(0.01);
        assert_eq!(f.value([0.5, 0.5]), 1.0);
        assert_eq!(f.value([0.4, 0.3]), 1.0);
        assert_eq!(f.value([0.3, 0.4]), 1.0);
        assert_eq!(f.value([0.3, 0.3]), -1.0);
        assert_eq!(f.value([0.1, 0.5]), -1.0);
        assert!(f.gradient([0.5, 0.5]).is_none());
    }

    #[test]
    fn cosine_values() {
        let f = Preset::Cosine.field(0.05);
        assert!((f.value([0.25, 0.5]) - 1.0).abs() < 1e-15);
        assert!((f.value([0.0, 0.3]) + 1.0).abs() < 1e-15);
    }
}
