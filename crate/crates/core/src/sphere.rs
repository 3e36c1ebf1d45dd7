//! Quadrature on the unit sphere and finitely supported spherical measures.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::scalar::{dot, lit, norm, Real};
use crate::specfun::unit_ball_volume;

/// Unit vectors with surface-measure weights.
#[derive(Clone, Debug, PartialEq)]
pub struct DirectionSet<T> {
    dim: usize,
    // row-major, `dim` entries per direction
    coords: Vec<T>,
    weights: Vec<T>,
}

impl<T: Real> DirectionSet<T> {
    /// Deterministic set: equal angles on the circle, a Fibonacci lattice on
    /// the 2-sphere. All weights equal `nκ_n / m`.
    pub fn new(dim: usize, m: usize) -> Result<Self> {
        match dim {
            2 => {
                if m < 4 {
                    return Err(domain("make_direction_set", format!("need m >= 4 on the circle, got {m}")));
                }
                let step = lit::<T>(2.0) * T::PI() / T::from_count(m);
                let mut coords = Vec::with_capacity(2 * m);
                for i in 0..m {
                    let (s, c) = (step * T::from_count(i)).sin_cos();
                    coords.push(c);
                    coords.push(s);
                }
                Ok(Self {
                    dim,
                    coords,
                    weights: vec![step; m],
                })
            }
            3 => {
                if m < 32 {
                    return Err(domain("make_direction_set", format!("need m >= 32 on the sphere, got {m}")));
                }
                let golden = T::PI() * (lit::<T>(3.0) - lit::<T>(5.0).sqrt());
                let mm = T::from_count(m);
                let mut coords = Vec::with_capacity(3 * m);
                for i in 0..m {
                    let z = T::one() - T::from_count(2 * i + 1) / mm;
                    let r = (T::one() - z * z).max(T::zero()).sqrt();
                    let (s, c) = (golden * T::from_count(i)).sin_cos();
                    coords.extend_from_slice(&[r * c, r * s, z]);
                }
                let w = lit::<T>(4.0) * T::PI() / mm;
                Ok(Self {
                    dim,
                    coords,
                    weights: vec![w; m],
                })
            }
            _ => Err(Error::UnsupportedDimension {
                op: "make_direction_set",
                dim,
            }),
        }
    }

    /// Monte Carlo set for any dimension >= 2 (normalized Gaussian samples,
    /// equal weights). Experimental: accuracy is `O(m^{-1/2})`.
    pub fn monte_carlo(dim: usize, m: usize, seed: u64) -> Result<Self> {
        if dim < 2 || m == 0 {
            return Err(domain("monte_carlo_directions", format!("dim = {dim}, m = {m}")));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut coords = Vec::with_capacity(dim * m);
        let mut v = vec![T::zero(); dim];
        while coords.len() < dim * m {
            for x in v.iter_mut() {
                let g: f64 = StandardNormal.sample(&mut rng);
                *x = lit(g);
            }
            let r = norm(&v);
            if r > lit(1e-8) {
                coords.extend(v.iter().map(|&x| x / r));
            }
        }
        let area = T::from_count(dim) * unit_ball_volume(T::from_count(dim))?;
        Ok(Self {
            dim,
            coords,
            weights: vec![area / T::from_count(m); m],
        })
    }

    /// Builds a set from explicit data; directions are checked to be unit.
    pub fn from_parts(dim: usize, directions: &[Vec<T>], weights: Vec<T>) -> Result<Self> {
        if directions.len() != weights.len() {
            return Err(Error::LengthMismatch {
                op: "DirectionSet::from_parts",
                expected: directions.len(),
                got: weights.len(),
            });
        }
        let mut coords = Vec::with_capacity(dim * directions.len());
        for u in directions {
            check_unit("DirectionSet::from_parts", dim, u)?;
            coords.extend_from_slice(u);
        }
        Ok(Self { dim, coords, weights })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    #[inline]
    pub fn direction(&self, i: usize) -> &[T] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub fn directions(&self) -> impl Iterator<Item = &[T]> {
        self.coords.chunks_exact(self.dim)
    }

    pub fn weights(&self) -> &[T] {
        &self.weights
    }

    pub fn total_weight(&self) -> T {
        self.weights.iter().copied().sum()
    }
}

fn check_unit<T: Real>(op: &'static str, dim: usize, u: &[T]) -> Result<()> {
    if u.len() != dim {
        return Err(Error::LengthMismatch {
            op,
            expected: dim,
            got: u.len(),
        });
    }
    let r = norm(u);
    if (r - T::one()).abs() > lit(1e-12) {
        return Err(domain(op, format!("direction has norm {r}")));
    }
    Ok(())
}

/// `Σ w_i values_i`.
pub fn integrate_sphere<T: Real>(ds: &DirectionSet<T>, values: &[T]) -> Result<T> {
    if values.len() != ds.len() {
        return Err(Error::LengthMismatch {
            op: "integrate_sphere",
            expected: ds.len(),
            got: values.len(),
        });
    }
    Ok(ds.weights.iter().zip(values).map(|(&w, &v)| w * v).sum())
}

/// Finitely supported positive measure `Σ α_j δ_{u_j}` on the sphere.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct DiscreteSphereMeasure<T: Real> {
    pub dim: usize,
    pub directions: Vec<Vec<T>>,
    pub weights: Vec<T>,
}

impl<T: Real> DiscreteSphereMeasure<T> {
    /// Validates unit atoms and strictly positive weights.
    pub fn new(dim: usize, directions: Vec<Vec<T>>, weights: Vec<T>) -> Result<Self> {
        let mu = Self {
            dim,
            directions,
            weights,
        };
        mu.validate()?;
        Ok(mu)
    }

    pub fn validate(&self) -> Result<()> {
        if self.directions.len() != self.weights.len() {
            return Err(Error::LengthMismatch {
                op: "DiscreteSphereMeasure",
                expected: self.directions.len(),
                got: self.weights.len(),
            });
        }
        if self.dim < 2 {
            return Err(Error::UnsupportedDimension {
                op: "DiscreteSphereMeasure",
                dim: self.dim,
            });
        }
        for u in &self.directions {
            check_unit("DiscreteSphereMeasure", self.dim, u)?;
        }
        if let Some(w) = self.weights.iter().find(|&&w| !(w > T::zero())) {
            return Err(domain("DiscreteSphereMeasure", format!("nonpositive weight {w}")));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn total_mass(&self) -> T {
        self.weights.iter().copied().sum()
    }

    /// Reads `{ "dim", "directions", "weights" }`.
    pub fn from_json(text: &str) -> Result<Self> {
        let mu: Self = serde_json::from_str(text)?;
        mu.validate()?;
        Ok(mu)
    }
}

/// `min_u Σ_j α_j (u·u_j)_+` over the probe directions.
pub fn hemisphere_mass_min<T: Real>(mu: &DiscreteSphereMeasure<T>, probes: &DirectionSet<T>) -> T {
    probes
        .directions()
        .map(|u| {
            mu.directions
                .iter()
                .zip(&mu.weights)
                .map(|(v, &a)| a * dot(u, v).max(T::zero()))
                .sum::<T>()
        })
        .fold(T::infinity(), T::min)
}

/// Probe set used by the hemisphere gate: 720 directions on the circle, 2000
/// on the 2-sphere.
pub fn gate_probes<T: Real>(dim: usize) -> Result<DirectionSet<T>> {
    match dim {
        2 => DirectionSet::new(2, 720),
        3 => DirectionSet::new(3, 2000),
        _ => Err(Error::UnsupportedDimension {
            op: "hemisphere_gate",
            dim,
        }),
    }
}

/// Accepts the measure iff its minimal hemisphere mass exceeds `1e-8 Σα_j`
/// on the probes and the atoms positively span space (which the probes alone
/// can miss when all atoms sit just inside a half-space).
pub fn hemisphere_gate<T: Real>(mu: &DiscreteSphereMeasure<T>) -> Result<()> {
    let probes = gate_probes(mu.dim)?;
    let m = hemisphere_mass_min(mu, &probes);
    if mu.len() <= mu.dim || crate::convexgeom::check_bounded(&mu.directions).is_err() {
        return Err(Error::Hemisphere { min_mass: 0.0 });
    }
    if m > lit::<T>(1e-8) * mu.total_mass() {
        Ok(())
    } else {
        Err(Error::Hemisphere { min_mass: m.as_f64() })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn circle_four_directions() {
        let ds = DirectionSet::<f64>::new(2, 4).unwrap();
        let expected = [[1.0, 0.0], [0.0, 1.0], [-1.0, 0.0], [0.0, -1.0]];
        for (u, e) in ds.directions().zip(expected) {
            assert!((u[0] - e[0]).abs() < 1e-15 && (u[1] - e[1]).abs() < 1e-15);
        }
        assert!(ds.weights().iter().all(|&w| (w - PI / 2.0).abs() < 1e-15));
    }

    #[test]
    fn weights_sum_to_sphere_area() {
        let ds = DirectionSet::<f64>::new(2, 360).unwrap();
        assert!((ds.total_weight() - 2.0 * PI).abs() < 1e-12);
        let ds = DirectionSet::<f64>::new(3, 1000).unwrap();
        assert!((integrate_sphere(&ds, &vec![1.0; 1000]).unwrap() - 4.0 * PI).abs() < 1e-12);
    }

    #[test]
    fn second_moment_on_sphere() {
        let ds = DirectionSet::<f64>::new(3, 1000).unwrap();
        let vals: Vec<f64> = ds.directions().map(|u| u[2] * u[2]).collect();
        assert!((integrate_sphere(&ds, &vals).unwrap() - 4.0 * PI / 3.0).abs() < 1e-3);
        for u in ds.directions() {
            assert!((norm(u) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn half_cosine_moments() {
        let ds = DirectionSet::<f64>::new(2, 720).unwrap();
        let v1: Vec<f64> = ds.directions().map(|u| u[0].max(0.0)).collect();
        let v2: Vec<f64> = v1.iter().map(|x| x * x).collect();
        assert!((integrate_sphere(&ds, &v1).unwrap() - 2.0).abs() < 1e-4);
        assert!((integrate_sphere(&ds, &v2).unwrap() - PI / 2.0).abs() < 1e-4);
        assert!(integrate_sphere(&ds, &v1[..10]).is_err());
    }

    #[test]
    fn first_moments_vanish() {
        for (dim, m, tol) in [(2, 7, 1e-10), (2, 360, 1e-10), (3, 500, 1e-3), (3, 2000, 1e-3)] {
            let ds = DirectionSet::<f64>::new(dim, m).unwrap();
            for k in 0..dim {
                let vals: Vec<f64> = ds.directions().map(|u| u[k]).collect();
                assert!(integrate_sphere(&ds, &vals).unwrap().abs() < tol);
            }
        }
    }

    #[test]
    fn refinement_ladder_converges() {
        // ∫ exp(u_3) over S^2 = 4π sinh(1)
        let exact = 4.0 * PI * 1.0f64.sinh();
        let mut last = f64::INFINITY;
        for m in [250, 500, 1000, 2000] {
            let ds = DirectionSet::<f64>::new(3, m).unwrap();
            let vals: Vec<f64> = ds.directions().map(|u| u[2].exp()).collect();
            let err = (integrate_sphere(&ds, &vals).unwrap() - exact).abs();
            assert!(err < last, "m = {m}: {err} !< {last}");
            last = err;
        }
        // equal angles integrate trigonometric polynomials of degree < m exactly
        let exact = 35.0 * PI / 4.0;
        let ds = DirectionSet::<f64>::new(2, 5).unwrap();
        let vals: Vec<f64> = ds.directions().map(|u| (1.0 + u[0]).powi(4)).collect();
        assert!((integrate_sphere(&ds, &vals).unwrap() - exact).abs() < 1e-12);
    }

    #[test]
    fn bad_sizes_rejected() {
        assert!(DirectionSet::<f64>::new(2, 3).is_err());
        assert!(DirectionSet::<f64>::new(3, 31).is_err());
        assert!(matches!(
            DirectionSet::<f64>::new(4, 100),
            Err(Error::UnsupportedDimension { .. })
        ));
    }

    #[test]
    fn monte_carlo_directions_are_unit() {
        let ds = DirectionSet::<f64>::monte_carlo(4, 2000, 7).unwrap();
        assert_eq!(ds.len(), 2000);
        for u in ds.directions() {
            assert!((norm(u) - 1.0).abs() < 1e-12);
        }
        // |S^3| = 2π²
        assert!((ds.total_weight() - 2.0 * PI * PI).abs() < 1e-10);
        assert_eq!(ds, DirectionSet::monte_carlo(4, 2000, 7).unwrap());
    }

    fn square_measure() -> DiscreteSphereMeasure<f64> {
        DiscreteSphereMeasure::new(
            2,
            vec![vec![1.0, 0.0], vec![0.0, 1.0], vec![-1.0, 0.0], vec![0.0, -1.0]],
            vec![1.0; 4],
        )
        .unwrap()
    }

    #[test]
    fn hemisphere_mass_of_square() {
        let probes = DirectionSet::new(2, 360).unwrap();
        let m = hemisphere_mass_min(&square_measure(), &probes);
        // 1-D scan: min of |cos θ| + |sin θ| is 1 at the axes
        let scan = (0..100_000)
            .map(|i| {
                let t = 2.0 * PI * f64::from(i) / 100_000.0;
                t.cos().abs() + t.sin().abs()
            })
            .fold(f64::INFINITY, f64::min);
        assert!(m >= 1.0 - 1e-12);
        assert!((m - scan).abs() < 1e-9);
        assert!(hemisphere_gate(&square_measure()).is_ok());
    }

    #[test]
    fn concentrated_measures_fail_gate() {
        let probes = DirectionSet::new(2, 720).unwrap();
        let one = DiscreteSphereMeasure::<f64>::new(2, vec![vec![1.0, 0.0]], vec![1.0]).unwrap();
        assert!(hemisphere_mass_min(&one, &probes).abs() < 1e-15);
        assert!(matches!(hemisphere_gate(&one), Err(Error::Hemisphere { .. })));
        let two = DiscreteSphereMeasure::<f64>::new(2, vec![vec![1.0, 0.0], vec![-1.0, 0.0]], vec![1.0, 2.0]).unwrap();
        assert!(hemisphere_mass_min(&two, &probes) < 1e-15);
        assert!(hemisphere_gate(&two).is_err());
    }

    #[test]
    fn measure_json_round_trip() {
        let mu = square_measure();
        let text = serde_json::to_string(&mu).unwrap();
        assert_eq!(DiscreteSphereMeasure::from_json(&text).unwrap(), mu);
        let bad = r#"{"dim":2,"directions":[[1.0,0.0]],"weights":[-1.0]}"#;
        assert!(DiscreteSphereMeasure::<f64>::from_json(bad).is_err());
        let not_unit = r#"{"dim":2,"directions":[[2.0,0.0]],"weights":[1.0]}"#;
        assert!(DiscreteSphereMeasure::<f64>::from_json(not_unit).is_err());
    }
}
