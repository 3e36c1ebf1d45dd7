//! Discrete volume-normalized `L^p` Minkowski problem: given atoms
//! `(u_j, α_j)` find `P` with `F_j = V(P) h_j^{p-1} α_j`.
//!
//! The solver maximizes `log V(h) - (n/p) log S(h)`, `S = (1/n) Σ α_j h_j^p`,
//! which is scale invariant and whose critical points are exactly the
//! solutions (`λ = nV/p` absorbs the multiplier). Iterates are rescaled so
//! that `S = 1`.

use serde::{Deserialize, Serialize};

use crate::convexgeom::{polytope_from_support, Polytope};
use crate::error::{domain, Error, Result};
use crate::scalar::{dot, lit, Power, Real};
use crate::specfun::unit_ball_volume;
use crate::sphere::{gate_probes, hemisphere_gate, DiscreteSphereMeasure};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverOptions {
    pub tol: f64,
    pub max_iter: usize,
    pub step0: f64,
    pub backtrack: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_iter: 10_000,
            step0: 0.1,
            backtrack: 0.5,
        }
    }
}

impl SolverOptions {
    pub fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0) || self.max_iter == 0 || !(self.backtrack > 0.0 && self.backtrack < 1.0) || !(self.step0 > 0.0)
        {
            return Err(domain("SolverOptions", format!("{self:?}")));
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct SolverResult<T> {
    pub polytope: Polytope<T>,
    pub residual: T,
    pub iterations: usize,
    /// `(1/n) Σ α_j h_j^p`
    pub normalization_check: T,
    pub converged: bool,
    /// Whether the normalized volume never decreased across accepted steps.
    pub volume_monotone: bool,
}

/// `max_j |F_j - V h_j^{p-1} α_j| / (V α_j h_j^{p-1})` with atoms matched to
/// facets by normal.
pub fn residual<T: Real>(poly: &Polytope<T>, mu: &DiscreteSphereMeasure<T>, p: T) -> Result<T> {
    mu.validate()?;
    let mut worst = T::zero();
    for (i, (u, &a)) in mu.directions.iter().zip(&mu.weights).enumerate() {
        let j = poly
            .facet_index(u, lit(1e-9))
            .ok_or(Error::MissingDirection { index: i })?;
        let h = poly.support()[j];
        let target = poly.volume() * h.powf(p - T::one()) * a;
        worst = worst.max(((poly.facet_areas()[j] - target) / target).abs());
    }
    Ok(worst)
}

/// Volume lower bound `κ_n (n/μ(S^{n-1}))^{n/p}` and whether the premise
/// `Σ α_j (u·u_j)_+^p >= n/c^p` held on the probe directions.
pub fn feasibility_bounds<T: Real>(mu: &DiscreteSphereMeasure<T>, p: T, c: T) -> Result<(T, bool)> {
    mu.validate()?;
    if !(p > T::one()) {
        return Err(domain("feasibility_bounds", format!("need p > 1, got {p}")));
    }
    let n = T::from_count(mu.dim);
    let bound = unit_ball_volume(n)? * (n / mu.total_mass()).powf(n / p);
    let probes = gate_probes::<T>(mu.dim)?;
    let need = n / c.powf(p);
    let pw = Power::new(p);
    let holds = probes.directions().all(|u| {
        let s: T = mu
            .directions
            .iter()
            .zip(&mu.weights)
            .map(|(v, &a)| a * pw.eval(dot(u, v).max(T::zero())))
            .sum();
        s >= need * (T::one() - lit::<T>(1e-12))
    });
    Ok((bound, holds))
}

struct Problem<'a, T: Real> {
    mu: &'a DiscreteSphereMeasure<T>,
    p: T,
    n: T,
}

struct State<T> {
    h: Vec<T>,
    poly: Polytope<T>,
    rho: Vec<T>,
    objective: T,
}

impl<T: Real> Problem<'_, T> {
    fn norm_sum(&self, h: &[T]) -> T {
        self.mu.weights.iter().zip(h).map(|(&a, &x)| a * x.powf(self.p)).sum::<T>() / self.n
    }

    fn rescaled(&self, h: &[T]) -> Vec<T> {
        let s = self.norm_sum(h).powf(T::one() / self.p);
        h.iter().map(|&x| x / s).collect()
    }

    /// State at the rescaled support vector, `None` when `h` is infeasible.
    fn state(&self, h: &[T]) -> Option<State<T>> {
        if h.iter().any(|x| !(*x > T::zero()) || !x.is_finite()) {
            return None;
        }
        let h = self.rescaled(h);
        let poly = polytope_from_support(self.mu.directions.clone(), h.clone()).ok()?;
        let v = poly.volume();
        let rho = (0..h.len())
            .map(|j| poly.facet_areas()[j] / (v * self.mu.weights[j] * h[j].powf(self.p - T::one())))
            .collect();
        Some(State {
            objective: v.ln(),
            h,
            poly,
            rho,
        })
    }

    /// `G_j = F_j - V α_j h_j^{p-1}`, scaled by `1/α_j`.
    fn defect(&self, poly: &Polytope<T>) -> Vec<T> {
        let v = poly.volume();
        (0..poly.len())
            .map(|j| {
                let a = self.mu.weights[j];
                (poly.facet_areas()[j] - v * a * poly.support()[j].powf(self.p - T::one())) / a
            })
            .collect()
    }

    /// One Newton step on `G(h) = 0` with a forward-difference Jacobian.
    fn newton(&self, st: &State<T>) -> Option<State<T>> {
        let k = st.h.len();
        let g0 = self.defect(&st.poly);
        let mut jac = vec![vec![T::zero(); k]; k];
        for i in 0..k {
            let step = lit::<T>(1e-7) * st.h[i];
            let mut hp = st.h.clone();
            hp[i] = hp[i] + step;
            let poly = polytope_from_support(self.mu.directions.clone(), hp).ok()?;
            let g = self.defect(&poly);
            for r in 0..k {
                jac[r][i] = (g[r] - g0[r]) / step;
            }
        }
        let rhs: Vec<T> = g0.iter().map(|&x| -x).collect();
        let delta = solve_linear(jac, rhs)?;
        let h: Vec<T> = st.h.iter().zip(&delta).map(|(&a, &d)| a + d).collect();
        self.state(&h)
    }
}

fn max_defect<T: Real>(rho: &[T]) -> T {
    rho.iter().fold(T::zero(), |m, &r| m.max((r - T::one()).abs()))
}

/// Gaussian elimination with partial pivoting.
fn solve_linear<T: Real>(mut a: Vec<Vec<T>>, mut b: Vec<T>) -> Option<Vec<T>> {
    let n = b.len();
    for c in 0..n {
        let piv = (c..n).max_by(|&x, &y| a[x][c].abs().partial_cmp(&a[y][c].abs()).unwrap_or(std::cmp::Ordering::Equal))?;
        if !(a[piv][c].abs() > T::epsilon()) {
            return None;
        }
        a.swap(c, piv);
        b.swap(c, piv);
        for r in c + 1..n {
            let f = a[r][c] / a[c][c];
            if f != T::zero() {
                for j in c..n {
                    a[r][j] = a[r][j] - f * a[c][j];
                }
                b[r] = b[r] - f * b[c];
            }
        }
    }
    let mut x = vec![T::zero(); n];
    for r in (0..n).rev() {
        let s: T = (r + 1..n).map(|j| a[r][j] * x[j]).sum();
        x[r] = (b[r] - s) / a[r][r];
    }
    x.iter().all(|v| v.is_finite()).then_some(x)
}

/// Residual below which Newton steps are attempted.
const NEWTON_SWITCH: f64 = 1e-2;

/// Solves `V(P) h(P,·)^{p-1} μ = S(P,·)` for a discrete measure `μ` not
/// concentrated on a closed hemisphere.
pub fn solve_normalized<T: Real>(mu: &DiscreteSphereMeasure<T>, p: T, opts: &SolverOptions) -> Result<SolverResult<T>> {
    mu.validate()?;
    opts.validate()?;
    if !(p > T::one()) || !p.is_finite() {
        return Err(domain("solve_normalized", format!("need finite p > 1, got {p}")));
    }
    if mu.len() < mu.dim + 1 {
        return Err(domain("solve_normalized", format!("need at least {} atoms", mu.dim + 1)));
    }
    hemisphere_gate(mu)?;
    let prob = Problem {
        mu,
        p,
        n: T::from_count(mu.dim),
    };
    let tol = lit::<T>(opts.tol);
    let h0 = vec![(prob.n / mu.total_mass()).powf(T::one() / p); mu.len()];
    polytope_from_support(mu.directions.clone(), h0.clone())?;
    let mut st = prob
        .state(&h0)
        .ok_or_else(|| Error::InvalidPolytope("initial support vector does not define a polytope".into()))?;
    let mut monotone = true;
    let mut t = lit::<T>(opts.step0);
    let back = lit::<T>(opts.backtrack);
    let slack = lit::<T>(1e-14);
    let mut iterations = 0;
    let mut res = max_defect(&st.rho);
    while res > tol && iterations < opts.max_iter {
        iterations += 1;
        if res < lit(NEWTON_SWITCH) {
            if let Some(next) = prob.newton(&st) {
                let r = max_defect(&next.rho);
                if r < res && next.objective >= st.objective - slack * st.objective.abs().max(T::one()) {
                    if next.objective < st.objective {
                        // within rounding of the optimum
                        monotone &= st.objective - next.objective <= slack * st.objective.abs().max(T::one());
                    }
                    st = next;
                    res = r;
                    continue;
                }
            }
        }
        // log-coordinate ascent: x_j += t (ρ_j - 1), slope Σ α h^p (ρ-1)^2
        let d: Vec<T> = st.rho.iter().map(|&r| r - T::one()).collect();
        let slope: T = (0..d.len())
            .map(|j| mu.weights[j] * st.h[j].powf(p) * d[j] * d[j])
            .sum::<T>()
            / prob.n;
        let mut accepted = None;
        let mut trial = t;
        for _ in 0..60 {
            let h: Vec<T> = st.h.iter().zip(&d).map(|(&x, &dj)| x * (trial * dj).exp()).collect();
            if let Some(next) = prob.state(&h) {
                if next.objective >= st.objective + lit::<T>(1e-4) * trial * slope {
                    accepted = Some(next);
                    break;
                }
            }
            trial = trial * back;
        }
        match accepted {
            Some(next) => {
                monotone &= next.objective >= st.objective;
                st = next;
                res = max_defect(&st.rho);
                t = (trial / back).min(T::one());
            }
            None => break,
        }
    }
    let zero_facet = st.poly.facet_areas().iter().any(|&f| f == T::zero());
    let normalization_check = prob.norm_sum(&st.h);
    Ok(SolverResult {
        residual: res,
        iterations,
        normalization_check,
        converged: res <= tol && !zero_facet,
        volume_monotone: monotone,
        polytope: st.poly,
    })
}
