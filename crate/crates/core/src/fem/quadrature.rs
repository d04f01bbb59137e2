//! Symmetric Gauss rules on the reference triangle and Gauss-Legendre rules
//! on the reference interval.

use nalgebra::Vector2;

use crate::error::{Error, Result};

/// Quadrature on the reference triangle `(0,0), (1,0), (0,1)`. Weights sum
/// to its area, 1/2.
#[derive(Clone, Debug, PartialEq)]
pub struct TriangleRule {
    pub points: Vec<Vector2<f64>>,
    pub weights: Vec<f64>,
    pub degree: usize,
}

/// Quadrature on the reference interval `[0, 1]`. Weights sum to 1.
#[derive(Clone, Debug, PartialEq)]
pub struct EdgeRule {
    pub points: Vec<f64>,
    pub weights: Vec<f64>,
    pub degree: usize,
}

impl TriangleRule {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Vector2<f64>, f64)> {
        self.points.iter().zip(self.weights.iter().copied())
    }
}

impl EdgeRule {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.points.iter().copied().zip(self.weights.iter().copied())
    }
}

/// Symmetry orbits in barycentric coordinates with their (per point) weight.
#[derive(Clone, Copy, Debug)]
enum Orbit {
    /// centroid
    S3(f64),
    /// `(a, a, 1 - 2a)` and its 3 permutations
    S21(f64, f64),
    /// `(a, b, 1 - a - b)` and its 6 permutations
    S111(f64, f64, f64),
}

// Weights refer to the reference triangle of area 1/2.
const RULES: &[(usize, &[Orbit])] = &[
    (1, &[Orbit::S3(0.5)]),
    (2, &[Orbit::S21(1.0 / 6.0, 1.0 / 6.0)]),
    (
        4,
        &[
            Orbit::S21(0.11169079483900573285, 0.44594849091596488632),
            Orbit::S21(0.054975871827660933819, 0.09157621350977074346),
        ],
    ),
    (
        5,
        &[
            Orbit::S3(0.1125),
            Orbit::S21(0.062969590272413576298, 0.1012865073234563388),
            Orbit::S21(0.066197076394253090369, 0.47014206410511508977),
        ],
    ),
    (
        6,
        &[
            Orbit::S21(0.02542245318510340846, 0.06308901449150222834),
            Orbit::S21(0.058393137863189683013, 0.24928674517091042129),
            Orbit::S111(0.041425537809186787597, 0.31035245103378440542, 0.053145049844816947353),
        ],
    ),
    (
        8,
        &[
            Orbit::S3(0.072157803838893584126),
            Orbit::S21(0.016229248811599040155, 0.050547228317030975458),
            Orbit::S21(0.047545817133642312397, 0.45929258829272315603),
            Orbit::S21(0.051608685267359125141, 0.17056930775176020662),
            Orbit::S111(
                0.013615157087217497132,
                0.72849239295540428124,
                0.0083947774099576053372,
            ),
        ],
    ),
    (
        9,
        &[
            Orbit::S3(0.04856789814139941691),
            Orbit::S21(0.038913770502387139658, 0.43708959149293663727),
            Orbit::S21(0.039823869463605126516, 0.18820353561903273024),
            Orbit::S21(0.012788837829349015631, 0.044729513394452709865),
            Orbit::S21(0.015667350113569535268, 0.48968251919873762778),
            Orbit::S111(0.021641769688644688645, 0.22196298916076569568, 0.036838412054736283635),
        ],
    ),
    (
        10,
        &[
            Orbit::S3(0.040871664573142983214),
            Orbit::S21(0.022978981802372364007, 0.14216110105656438509),
            Orbit::S21(0.0066764844065747831378, 0.032055373216943512931),
            Orbit::S111(0.031952453198212022716, 0.32181299528883542123, 0.1481328857838205505),
            Orbit::S111(0.017092324081479714314, 0.36914678182781098691, 0.029619889488729767634),
            Orbit::S111(0.012648878853644192195, 0.16370173373718249567, 0.02836766533993843925),
        ],
    ),
];

/// Smallest tabulated symmetric rule integrating polynomials of total degree
/// `min_degree` exactly.
pub fn triangle_rule(min_degree: usize) -> Result<TriangleRule> {
    if !(1..=10).contains(&min_degree) {
        return Err(Error::UnsupportedQuadrature(format!(
            "triangle rule of degree {min_degree} (supported: 1..=10)"
        )));
    }
    let &(degree, orbits) = RULES
        .iter()
        .find(|(d, _)| *d >= min_degree)
        .expect("table covers degree 10");
    let mut points = Vec::new();
    let mut weights = Vec::new();
    // barycentric (l0, l1, l2) -> reference (l1, l2)
    let mut push = |l: [f64; 3], w: f64| {
        points.push(Vector2::new(l[1], l[2]));
        weights.push(w);
    };
    for orbit in orbits {
        match *orbit {
            Orbit::S3(w) => push([1.0 / 3.0; 3], w),
            Orbit::S21(w, a) => {
                let b = 1.0 - 2.0 * a;
                push([a, a, b], w);
                push([a, b, a], w);
                push([b, a, a], w);
            }
            Orbit::S111(w, a, b) => {
                let c = 1.0 - a - b;
                for l in [[a, b, c], [a, c, b], [b, a, c], [b, c, a], [c, a, b], [c, b, a]] {
                    push(l, w);
                }
            }
        }
    }
    Ok(TriangleRule {
        points,
        weights,
        degree,
    })
}

/// `n_points`-point Gauss-Legendre rule mapped to `[0, 1]`.
pub fn edge_rule(n_points: usize) -> Result<EdgeRule> {
    if !(1..=10).contains(&n_points) {
        return Err(Error::UnsupportedQuadrature(format!(
            "{n_points}-point edge rule (supported: 1..=10)"
        )));
    }
    let (nodes, weights) = gauss_legendre(n_points);
    Ok(EdgeRule {
        points: nodes.iter().map(|t| 0.5 * (t + 1.0)).collect(),
        weights: weights.iter().map(|w| 0.5 * w).collect(),
        degree: 2 * n_points - 1,
    })
}

/// Nodes and weights on `[-1, 1]` by Newton iteration on the Legendre
/// polynomial, ascending order.
fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (p, d) = legendre(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre(n, x);
        if d.is_finite() {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    (nodes, weights)
}

/// `(P_n(x), P_n'(x))` by the three-term recurrence.
fn legendre(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}
