#![allow(clippy::excessive_precision)]

/// Symmetric quadrature rule on a triangle. Weights sum to 1, so the
/// integral over a triangle `K` is `|K| Σ w_q f(x_q)`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    pub points: Vec<[f64; 3]>,
    pub weights: Vec<f64>,
    pub degree: usize,
}

impl QuadratureRule {
    /// 16-point rule exact for polynomials of total degree ≤ 8 (Dunavant).
    pub fn degree8() -> Self {
        let mut points = Vec::with_capacity(16);
        let mut weights = Vec::with_capacity(16);

        points.push([1.0 / 3.0; 3]);
        weights.push(0.144_315_607_677_787_168_251_091_110_489);

        let orbits3 = [
            (0.459_292_588_292_723_156_028_815_514_494, 0.095_091_634_267_284_624_793_896_104_388),
            (0.170_569_307_751_760_206_622_293_501_491, 0.103_217_370_534_718_250_281_791_550_292),
            (0.050_547_228_317_030_975_458_423_550_596, 0.032_458_497_623_198_080_310_925_928_341),
        ];
        for (a, w) in orbits3 {
            let b = 1.0 - 2.0 * a;
            points.extend([[b, a, a], [a, b, a], [a, a, b]]);
            weights.extend([w; 3]);
        }

        let (a, b) = (
            0.263_112_829_634_638_113_421_785_786_284,
            0.008_394_777_409_957_605_337_213_834_539,
        );
        let c = 1.0 - a - b;
        let w = 0.027_230_314_174_434_994_264_844_690_073;
        points.extend([[a, b, c], [b, c, a], [c, a, b], [b, a, c], [a, c, b], [c, b, a]]);
        weights.extend([w; 6]);

        QuadratureRule {
            points,
            weights,
            degree: 8,
        }
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }
}
