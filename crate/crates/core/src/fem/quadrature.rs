//! Symmetric quadrature rules on the reference triangle (Strang-Fix /
//! Dunavant families). Points are barycentric; weights sum to 1/2.

#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    pub points: Vec<[f64; 3]>,
    pub weights: Vec<f64>,
    pub order: usize,
}

impl QuadratureRule {
    /// Cheapest available rule exact for polynomials of degree `order`.
    ///
    /// Panics for `order > 6`.
    pub fn of_order(order: usize) -> Self {
        match order {
            0 | 1 => centroid(),
            2 => three_point(),
            3 | 4 => six_point(),
            5 => seven_point(),
            6 => twelve_point(),
            _ => panic!("no quadrature rule of order {order}"),
        }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Builds a rule from orbit generators; each weight is relative to area 1.
fn from_orbits(orbits: &[(Orbit, f64)], order: usize) -> QuadratureRule {
    let mut points = Vec::new();
    let mut weights = Vec::new();
    for &(orbit, w) in orbits {
        let pts: Vec<[f64; 3]> = match orbit {
            Orbit::Center => vec![[1.0 / 3.0; 3]],
            Orbit::Two(a) => {
                let b = 1.0 - 2.0 * a;
                vec![[a, a, b], [a, b, a], [b, a, a]]
            }
            Orbit::Three(a, b) => {
                let c = 1.0 - a - b;
                vec![[a, b, c], [a, c, b], [b, a, c], [b, c, a], [c, a, b], [c, b, a]]
            }
        };
        for p in pts {
            points.push(p);
            weights.push(0.5 * w);
        }
    }
    QuadratureRule {
        points,
        weights,
        order,
    }
}

#[derive(Clone, Copy)]
enum Orbit {
    Center,
    /// `(a, a, 1 − 2a)` and permutations.
    Two(f64),
    /// `(a, b, 1 − a − b)` and permutations.
    Three(f64, f64),
}

fn centroid() -> QuadratureRule {
    from_orbits(&[(Orbit::Center, 1.0)], 1)
}

fn three_point() -> QuadratureRule {
    from_orbits(&[(Orbit::Two(1.0 / 6.0), 1.0 / 3.0)], 2)
}

fn six_point() -> QuadratureRule {
    from_orbits(
        &[
            (Orbit::Two(0.445_948_490_915_965), 0.223_381_589_678_011),
            (Orbit::Two(0.091_576_213_509_771), 0.109_951_743_655_322),
        ],
        4,
    )
}

fn seven_point() -> QuadratureRule {
    let s15 = 15f64.sqrt();
    from_orbits(
        &[
            (Orbit::Center, 9.0 / 40.0),
            (Orbit::Two((6.0 - s15) / 21.0), (155.0 - s15) / 1200.0),
            (Orbit::Two((6.0 + s15) / 21.0), (155.0 + s15) / 1200.0),
        ],
        5,
    )
}

fn twelve_point() -> QuadratureRule {
    from_orbits(
        &[
            (Orbit::Two(0.249_286_745_170_910), 0.116_786_275_726_379),
            (Orbit::Two(0.063_089_014_491_502), 0.050_844_906_370_207),
            (
                Orbit::Three(0.310_352_451_033_784, 0.053_145_049_844_817),
                0.082_851_075_618_374,
            ),
        ],
        6,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn factorial(n: u32) -> f64 {
        (1..=n).map(f64::from).product()
    }

    /// ∫_T x^p y^q over the reference triangle = p! q! / (p + q + 2)!.
    fn monomial_exact(p: u32, q: u32) -> f64 {
        factorial(p) * factorial(q) / factorial(p + q + 2)
    }

    #[test]
    fn weights_sum_to_reference_area() {
        for order in [1, 2, 4, 5, 6] {
            let r = QuadratureRule::of_order(order);
            let s: f64 = r.weights.iter().sum();
            assert!((s - 0.5).abs() < 1e-14, "order {order}: {s}");
            for p in &r.points {
                assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn monomials_are_integrated_exactly_up_to_order() {
        for order in [1, 2, 4, 5, 6] {
            let r = QuadratureRule::of_order(order);
            for p in 0..=order as u32 {
                for q in 0..=(order as u32 - p) {
                    let approx: f64 = r
                        .points
                        .iter()
                        .zip(&r.weights)
                        .map(|(b, w)| w * b[1].powi(p as i32) * b[2].powi(q as i32))
                        .sum();
                    let exact = monomial_exact(p, q);
                    assert!(
                        (approx - exact).abs() < 1e-13 * exact.max(1.0),
                        "order {order}, x^{p} y^{q}: {approx} vs {exact}"
                    );
                }
            }
        }
    }

    #[test]
    fn order_six_is_not_exact_for_degree_eight() {
        let r = QuadratureRule::of_order(6);
        let approx: f64 = r
            .points
            .iter()
            .zip(&r.weights)
            .map(|(b, w)| w * b[1].powi(8))
            .sum();
        assert!((approx - monomial_exact(8, 0)).abs() > 1e-8);
    }
}
