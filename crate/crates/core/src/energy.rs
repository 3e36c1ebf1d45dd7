//! Directional half-norms `‖D_u^+ f‖_p`, the support profile they define and
//! the affine energies built on it.

use std::sync::Arc;

use rayon::prelude::*;

use crate::error::{domain, Error, Result};
use crate::gridfn::{gradient_field, GridFunction};
use crate::scalar::{dot, lit, norm, Power, Real};
use crate::specfun::c_np;
use crate::sphere::{integrate_sphere, DirectionSet};

/// Nonzero gradient vectors of a grid function with the cell volume, the
/// input shared by every directional evaluation.
#[derive(Clone, Debug)]
pub struct GradientSamples<T> {
    dim: usize,
    vectors: Vec<T>,
    cell_volume: T,
}

impl<T: Real> GradientSamples<T> {
    pub fn new(f: &GridFunction<T>) -> Self {
        Self {
            dim: f.dim(),
            vectors: gradient_field(f).nonzero_vectors(),
            cell_volume: f.cell_volume(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn is_trivial(&self) -> bool {
        self.vectors.is_empty()
    }

    /// `(Σ (g·u)_+^p h^n, Σ (g·u)_-^p h^n)` in one pass.
    pub fn directional_sums(&self, u: &[T], p: T) -> (T, T) {
        let pw = Power::new(p);
        let (mut pos, mut neg) = (T::zero(), T::zero());
        for g in self.vectors.chunks_exact(self.dim) {
            let d = dot(g, u);
            if d > T::zero() {
                pos = pos + pw.eval(d);
            } else if d < T::zero() {
                neg = neg + pw.eval(-d);
            }
        }
        (pos * self.cell_volume, neg * self.cell_volume)
    }

    /// `(max (g·u)_+, max (g·u)_-)`.
    pub fn directional_max(&self, u: &[T]) -> (T, T) {
        let (mut pos, mut neg) = (T::zero(), T::zero());
        for g in self.vectors.chunks_exact(self.dim) {
            let d = dot(g, u);
            pos = pos.max(d);
            neg = neg.max(-d);
        }
        (pos, neg)
    }

    /// `(Σ |g|^p h^n)^{1/p}`.
    pub fn gradient_lp(&self, p: T) -> T {
        let pw = Power::new(p);
        let s: T = self
            .vectors
            .chunks_exact(self.dim)
            .map(|g| pw.eval(norm(g)))
            .sum();
        (s * self.cell_volume).powf(T::one() / p)
    }
}

/// Positive values of a support function sampled on a direction set.
#[derive(Clone, Debug)]
pub struct SupportProfile<T> {
    pub ds: Arc<DirectionSet<T>>,
    pub values: Vec<T>,
}

impl<T: Real> SupportProfile<T> {
    pub fn new(ds: Arc<DirectionSet<T>>, values: Vec<T>) -> Result<Self> {
        if values.len() != ds.len() {
            return Err(Error::LengthMismatch {
                op: "SupportProfile",
                expected: ds.len(),
                got: values.len(),
            });
        }
        Ok(Self { ds, values })
    }

    pub fn min(&self) -> T {
        self.values.iter().copied().fold(T::infinity(), T::min)
    }

    pub fn max(&self) -> T {
        self.values.iter().copied().fold(T::zero(), T::max)
    }

    /// `∫ h^{-n} du`, after the degeneracy guard.
    pub fn dual_integral(&self) -> Result<T> {
        guard_profile(&self.values)?;
        let n = self.ds.dim() as i32;
        let inv: Vec<T> = self.values.iter().map(|&h| h.powi(-n)).collect();
        integrate_sphere(&self.ds, &inv)
    }
}

/// Profile values below `1e-12 · max` signal a trivial or degenerate input.
fn guard_profile<T: Real>(values: &[T]) -> Result<()> {
    let max = values.iter().copied().fold(T::zero(), T::max);
    if max == T::zero() {
        return Err(Error::TrivialFunction);
    }
    let min = values.iter().copied().fold(T::infinity(), T::min);
    if !(min >= lit::<T>(1e-12) * max) {
        return Err(Error::DegenerateProfile {
            ratio: (min / max).as_f64(),
        });
    }
    Ok(())
}

fn check_p<T: Real>(op: &'static str, p: T) -> Result<()> {
    if p > T::one() && p.is_finite() {
        Ok(())
    } else {
        Err(domain(op, format!("need finite p > 1, got {p}")))
    }
}

fn check_unit<T: Real>(dim: usize, u: &[T]) -> Result<()> {
    if u.len() != dim {
        return Err(Error::LengthMismatch {
            op: "half_norm",
            expected: dim,
            got: u.len(),
        });
    }
    let r = norm(u);
    if (r - T::one()).abs() > lit(1e-12) {
        return Err(domain("half_norm", format!("direction has norm {r}")));
    }
    Ok(())
}

/// `‖D_u^+ f‖_p = (Σ (∇f_i·u)_+^p h^n)^{1/p}`.
pub fn half_norm<T: Real>(f: &GridFunction<T>, u: &[T], p: T) -> Result<T> {
    check_p("half_norm", p)?;
    check_unit(f.dim(), u)?;
    let (pos, _) = GradientSamples::new(f).directional_sums(u, p);
    Ok(pos.powf(T::one() / p))
}

/// Half and full directional norms for every direction of `ds`.
pub fn directional_profiles<T: Real>(grad: &GradientSamples<T>, ds: &DirectionSet<T>, p: T) -> (Vec<T>, Vec<T>) {
    let inv_p = T::one() / p;
    let pairs: Vec<(T, T)> = (0..ds.len())
        .into_par_iter()
        .map(|i| {
            let (pos, neg) = grad.directional_sums(ds.direction(i), p);
            (pos.powf(inv_p), (pos + neg).powf(inv_p))
        })
        .collect();
    pairs.into_iter().unzip()
}

/// `h_f(u) = ‖D_u^+ f‖_p` on `ds`.
pub fn support_profile<T: Real>(f: &GridFunction<T>, ds: Arc<DirectionSet<T>>, p: T) -> Result<SupportProfile<T>> {
    check_p("support_profile", p)?;
    let grad = GradientSamples::new(f);
    if grad.is_trivial() {
        return Err(Error::TrivialFunction);
    }
    let (half, _) = directional_profiles(&grad, &ds, p);
    guard_profile(&half)?;
    SupportProfile::new(ds, half)
}

/// The three `L^p` gradient functionals of one function.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Energies<T> {
    /// `E_p^+(f)`
    pub plus: T,
    /// `E_p(f)`
    pub sym: T,
    /// `‖∇f‖_p`
    pub grad: T,
}

/// `E_p^+`, `E_p` and `‖∇f‖_p` from one gradient pass per direction.
pub fn energies<T: Real>(f: &GridFunction<T>, ds: &DirectionSet<T>, p: T) -> Result<Energies<T>> {
    check_p("energies", p)?;
    let grad = GradientSamples::new(f);
    energies_from(&grad, ds, p)
}

pub fn energies_from<T: Real>(grad: &GradientSamples<T>, ds: &DirectionSet<T>, p: T) -> Result<Energies<T>> {
    check_p("energies", p)?;
    if grad.is_trivial() {
        return Err(Error::TrivialFunction);
    }
    if ds.dim() != grad.dim() {
        return Err(Error::LengthMismatch {
            op: "energies",
            expected: grad.dim(),
            got: ds.dim(),
        });
    }
    let n = grad.dim();
    let (half, full) = directional_profiles(grad, ds, p);
    let c = c_np(n, p)?;
    let plus = lit::<T>(2.0).powf(T::one() / p) * c * polar_integral(ds, &half)?;
    let sym = c * polar_integral(ds, &full)?;
    Ok(Energies {
        plus,
        sym,
        grad: grad.gradient_lp(p),
    })
}

/// `(∫ h^{-n} du)^{-1/n}`.
fn polar_integral<T: Real>(ds: &DirectionSet<T>, values: &[T]) -> Result<T> {
    guard_profile(values)?;
    let n = ds.dim() as i32;
    let inv: Vec<T> = values.iter().map(|&h| h.powi(-n)).collect();
    Ok(integrate_sphere(ds, &inv)?.powf(-T::one() / T::from_count(ds.dim())))
}

/// `E_p^+(f) = 2^{1/p} c_{n,p} (∫ ‖D_u^+ f‖_p^{-n} du)^{-1/n}`.
pub fn affine_energy_plus<T: Real>(f: &GridFunction<T>, ds: &DirectionSet<T>, p: T) -> Result<T> {
    Ok(energies(f, ds, p)?.plus)
}

/// `E_p(f) = c_{n,p} (∫ ‖D_u f‖_p^{-n} du)^{-1/n}`.
pub fn affine_energy_sym<T: Real>(f: &GridFunction<T>, ds: &DirectionSet<T>, p: T) -> Result<T> {
    Ok(energies(f, ds, p)?.sym)
}

/// `‖∇f‖_p`, `p >= 1`.
pub fn gradient_lp<T: Real>(f: &GridFunction<T>, p: T) -> Result<T> {
    if !(p >= T::one()) || !p.is_finite() {
        return Err(domain("gradient_lp", format!("need finite p >= 1, got {p}")));
    }
    Ok(GradientSamples::new(f).gradient_lp(p))
}

/// `E_∞^+(f) = (∫ ‖D_u^+ f‖_∞^{-n} du)^{-1/n}`, no normalising constant.
pub fn affine_energy_inf_plus<T: Real>(f: &GridFunction<T>, ds: &DirectionSet<T>) -> Result<T> {
    let grad = GradientSamples::new(f);
    if grad.is_trivial() {
        return Err(Error::TrivialFunction);
    }
    let half: Vec<T> = (0..ds.len())
        .into_par_iter()
        .map(|i| grad.directional_max(ds.direction(i)).0)
        .collect();
    polar_integral(ds, &half)
}
