//! Gauss rules on the reference interval and triangle, in barycentric form.

/// Quadrature rule on a reference simplex. Points are barycentric
/// coordinates (unused third entry zero in 1D); weights sum to one so that
/// the physical weight is `weight * cell_measure`.
#[derive(Debug, Clone)]
pub struct QuadRule {
    pub points: Vec<[f64; 3]>,
    pub weights: Vec<f64>,
}

pub const DEFAULT_ORDER: usize = 3;

impl QuadRule {
    /// Rule exact for polynomials of degree `order` on a `dim`-simplex.
    /// `order` is clamped to 1..=5.
    pub fn new(dim: usize, order: usize) -> Self {
        let order = order.clamp(1, 5);
        if dim == 1 {
            gauss_interval(order / 2 + 1)
        } else {
            triangle(order)
        }
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }
}

fn gauss_interval(npts: usize) -> QuadRule {
    // nodes on [-1, 1]
    let (nodes, w): (Vec<f64>, Vec<f64>) = match npts {
        1 => (vec![0.0], vec![2.0]),
        2 => {
            let a = 1.0 / 3f64.sqrt();
            (vec![-a, a], vec![1.0, 1.0])
        }
        _ => {
            let a = (3.0f64 / 5.0).sqrt();
            (vec![-a, 0.0, a], vec![5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0])
        }
    };
    let points = nodes
        .iter()
        .map(|&s| {
            let t = 0.5 * (s + 1.0);
            [1.0 - t, t, 0.0]
        })
        .collect();
    let weights = w.iter().map(|x| 0.5 * x).collect();
    QuadRule { points, weights }
}

fn triangle(order: usize) -> QuadRule {
    match order {
        1 => QuadRule { points: vec![[1.0 / 3.0; 3]], weights: vec![1.0] },
        2 => {
            let a = 1.0 / 6.0;
            let b = 2.0 / 3.0;
            QuadRule {
                points: vec![[b, a, a], [a, b, a], [a, a, b]],
                weights: vec![1.0 / 3.0; 3],
            }
        }
        // Strang-Fix six point rule, degree 4, positive weights.
        3 | 4 => {
            let (a1, b1, w1) = (0.445_948_490_915_965, 0.108_103_018_168_070, 0.223_381_589_678_011);
            let (a2, b2, w2) = (0.091_576_213_509_771, 0.816_847_572_980_459, 0.109_951_743_655_322);
            QuadRule {
                points: vec![
                    [b1, a1, a1],
                    [a1, b1, a1],
                    [a1, a1, b1],
                    [b2, a2, a2],
                    [a2, b2, a2],
                    [a2, a2, b2],
                ],
                weights: vec![w1, w1, w1, w2, w2, w2],
            }
        }
        // Radon seven point rule, degree 5.
        _ => {
            let s15 = 15f64.sqrt();
            let a1 = (6.0 - s15) / 21.0;
            let b1 = (9.0 + 2.0 * s15) / 21.0;
            let a2 = (6.0 + s15) / 21.0;
            let b2 = (9.0 - 2.0 * s15) / 21.0;
            let w1 = (155.0 - s15) / 1200.0;
            let w2 = (155.0 + s15) / 1200.0;
            QuadRule {
                points: vec![
                    [1.0 / 3.0; 3],
                    [b1, a1, a1],
                    [a1, b1, a1],
                    [a1, a1, b1],
                    [b2, a2, a2],
                    [a2, b2, a2],
                    [a2, a2, b2],
                ],
                weights: vec![9.0 / 40.0, w1, w1, w1, w2, w2, w2],
            }
        }
    }
}
