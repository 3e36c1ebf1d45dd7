//! Convex polytopes given by facet normals and support numbers, their surface
//! area measures, mixed volumes and `L^p` projection bodies.

use std::cmp::Ordering;
use std::sync::Arc;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal, Uniform};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::energy::SupportProfile;
use crate::error::{domain, Error, Result};
use crate::report::InequalityReport;
use crate::scalar::{dot, lit, norm, Power, Real};
use crate::specfun::unit_ball_volume;
use crate::sphere::{DirectionSet, DiscreteSphereMeasure};

/// Default relative tolerance of the Petty report.
pub const PETTY_TOLERANCE: f64 = 1e-2;

/// `P = ∩_j {x : x·u_j <= h_j}` with derived vertices, facet areas and volume.
/// Redundant halfspaces are kept with facet area zero.
#[derive(Clone, Debug, PartialEq)]
pub struct Polytope<T> {
    dim: usize,
    normals: Vec<Vec<T>>,
    support: Vec<T>,
    vertices: Vec<Vec<T>>,
    facet_areas: Vec<T>,
    volume: T,
}

/// On-disk form `{ "dim", "normals", "support" }`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct PolytopeData<T: Real> {
    pub dim: usize,
    pub normals: Vec<Vec<T>>,
    pub support: Vec<T>,
}

impl<T: Real> Polytope<T> {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn normals(&self) -> &[Vec<T>] {
        &self.normals
    }

    pub fn support(&self) -> &[T] {
        &self.support
    }

    pub fn vertices(&self) -> &[Vec<T>] {
        &self.vertices
    }

    pub fn facet_areas(&self) -> &[T] {
        &self.facet_areas
    }

    pub fn volume(&self) -> T {
        self.volume
    }

    pub fn len(&self) -> usize {
        self.support.len()
    }

    pub fn is_empty(&self) -> bool {
        self.support.is_empty()
    }

    /// `h(P, u) = max_v v·u` over the vertices.
    pub fn support_at(&self, u: &[T]) -> T {
        self.vertices
            .iter()
            .map(|v| dot(v, u))
            .fold(T::neg_infinity(), T::max)
    }

    pub fn surface_area(&self) -> T {
        self.facet_areas.iter().copied().sum()
    }

    /// Index of the facet whose normal equals `u` within `tol`.
    pub fn facet_index(&self, u: &[T], tol: T) -> Option<usize> {
        self.normals
            .iter()
            .position(|v| v.iter().zip(u).all(|(a, b)| (*a - *b).abs() <= tol))
    }

    pub fn to_data(&self) -> PolytopeData<T> {
        PolytopeData {
            dim: self.dim,
            normals: self.normals.clone(),
            support: self.support.clone(),
        }
    }

    pub fn from_data(data: PolytopeData<T>) -> Result<Self> {
        if data.normals.iter().any(|u| u.len() != data.dim) {
            return Err(Error::InvalidPolytope(format!("normals must have {} coordinates", data.dim)));
        }
        polytope_from_support(data.normals, data.support)
    }

    /// Support numbers scaled by `c` (the body `cP`).
    pub fn scaled(&self, c: T) -> Result<Self> {
        polytope_from_support(self.normals.clone(), self.support.iter().map(|&h| h * c).collect())
    }

    /// The reflected body `-P`.
    pub fn reflected(&self) -> Result<Self> {
        polytope_from_support(
            self.normals.iter().map(|u| u.iter().map(|&x| -x).collect()).collect(),
            self.support.clone(),
        )
    }
}

/// Builds the polytope `∩_j {x·u_j <= h_j}`.
pub fn polytope_from_support<T: Real>(normals: Vec<Vec<T>>, support: Vec<T>) -> Result<Polytope<T>> {
    if normals.len() != support.len() {
        return Err(Error::LengthMismatch {
            op: "polytope_from_support",
            expected: normals.len(),
            got: support.len(),
        });
    }
    let dim = normals.first().map(|u| u.len()).unwrap_or(0);
    if !(2..=3).contains(&dim) {
        return Err(Error::UnsupportedDimension {
            op: "polytope_from_support",
            dim,
        });
    }
    if normals.len() < dim + 1 {
        return Err(Error::Unbounded(format!("{} halfspaces cannot bound a body in dimension {dim}", normals.len())));
    }
    let mut units = Vec::with_capacity(normals.len());
    for u in &normals {
        if u.len() != dim {
            return Err(Error::InvalidPolytope("normals of mixed dimension".into()));
        }
        let r = norm(u);
        if (r - T::one()).abs() > lit(1e-9) {
            return Err(Error::InvalidPolytope(format!("normal has norm {r}")));
        }
        units.push(u.iter().map(|&x| x / r).collect::<Vec<T>>());
    }
    if let Some(h) = support.iter().find(|h| !(**h > T::zero()) || !h.is_finite()) {
        return Err(Error::InvalidPolytope(format!("support number {h} must be positive")));
    }
    check_bounded(&units)?;
    let (vertices, facet_areas) = if dim == 2 {
        planar_facets(&units, &support)?
    } else {
        spatial_facets(&units, &support)?
    };
    let n = T::from_count(dim);
    let volume = support
        .iter()
        .zip(&facet_areas)
        .map(|(&h, &f)| h * f)
        .sum::<T>()
        / n;
    let p = Polytope {
        dim,
        normals: units,
        support,
        vertices,
        facet_areas,
        volume,
    };
    check_invariants(&p)?;
    Ok(p)
}

/// The recession cone `{d : u_j·d <= 0}` is trivial iff the normals span and
/// no candidate extreme ray lies in it.
pub(crate) fn check_bounded<T: Real>(units: &[Vec<T>]) -> Result<()> {
    let tol = lit::<T>(1e-12);
    let in_cone = |d: &[T]| units.iter().all(|u| dot(u, d) <= tol);
    let dim = units[0].len();
    let k = units.len();
    if dim == 2 {
        if !(0..k).any(|a| (a + 1..k).any(|b| cross2(&units[a], &units[b]).abs() > tol)) {
            return Err(Error::Unbounded("normals are collinear".into()));
        }
        for u in units {
            let d = [-u[1], u[0]];
            if in_cone(&d) || in_cone(&[u[1], -u[0]]) {
                return Err(Error::Unbounded("normals do not positively span the plane".into()));
            }
        }
    } else {
        let mut spans = false;
        'outer: for a in 0..k {
            for b in a + 1..k {
                let c = cross3(&units[a], &units[b]);
                for u in &units[b + 1..] {
                    if dot(&c, u).abs() > tol {
                        spans = true;
                        break 'outer;
                    }
                }
            }
        }
        if !spans {
            return Err(Error::Unbounded("normals are coplanar".into()));
        }
        for a in 0..k {
            for b in a + 1..k {
                let c = cross3(&units[a], &units[b]);
                let r = norm(&c);
                if r <= tol {
                    continue;
                }
                let d: Vec<T> = c.iter().map(|&x| x / r).collect();
                let e: Vec<T> = d.iter().map(|&x| -x).collect();
                if in_cone(&d) || in_cone(&e) {
                    return Err(Error::Unbounded("normals do not positively span space".into()));
                }
            }
        }
    }
    Ok(())
}

fn cross2<T: Real>(a: &[T], b: &[T]) -> T {
    a[0] * b[1] - a[1] * b[0]
}

fn cross3<T: Real>(a: &[T], b: &[T]) -> [T; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

/// Planar case via the dual hull of the points `u_j / h_j`: hull vertices are
/// the non-redundant facets, in counter-clockwise order.
fn planar_facets<T: Real>(u: &[Vec<T>], h: &[T]) -> Result<(Vec<Vec<T>>, Vec<T>)> {
    let k = u.len();
    let q: Vec<[T; 2]> = (0..k).map(|j| [u[j][0] / h[j], u[j][1] / h[j]]).collect();
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| {
        q[a][0]
            .partial_cmp(&q[b][0])
            .unwrap_or(Ordering::Equal)
            .then(q[a][1].partial_cmp(&q[b][1]).unwrap_or(Ordering::Equal))
            .then(a.cmp(&b))
    });
    let turn = |o: usize, a: usize, b: usize| {
        (q[a][0] - q[o][0]) * (q[b][1] - q[o][1]) - (q[a][1] - q[o][1]) * (q[b][0] - q[o][0])
    };
    let mut hull: Vec<usize> = Vec::with_capacity(2 * k);
    for &i in &order {
        while hull.len() >= 2 && turn(hull[hull.len() - 2], hull[hull.len() - 1], i) <= T::zero() {
            hull.pop();
        }
        hull.push(i);
    }
    let lower = hull.len() + 1;
    for &i in order.iter().rev().skip(1) {
        while hull.len() >= lower && turn(hull[hull.len() - 2], hull[hull.len() - 1], i) <= T::zero() {
            hull.pop();
        }
        hull.push(i);
    }
    hull.pop();
    let m = hull.len();
    if m < 3 {
        return Err(Error::Unbounded("dual hull is degenerate".into()));
    }
    // origin strictly inside the dual hull
    for e in 0..m {
        let (a, b) = (hull[e], hull[(e + 1) % m]);
        let c = (q[b][0] - q[a][0]) * (-q[a][1]) - (q[b][1] - q[a][1]) * (-q[a][0]);
        if c <= T::zero() {
            return Err(Error::Unbounded("origin not interior to the dual hull".into()));
        }
    }
    let meet = |a: usize, b: usize| {
        let det = cross2(&u[a], &u[b]);
        vec![
            (h[a] * u[b][1] - h[b] * u[a][1]) / det,
            (u[a][0] * h[b] - u[b][0] * h[a]) / det,
        ]
    };
    // vertex e joins facets hull[e] and hull[e+1]
    let vertices: Vec<Vec<T>> = (0..m).map(|e| meet(hull[e], hull[(e + 1) % m])).collect();
    let mut areas = vec![T::zero(); k];
    for e in 0..m {
        let prev = &vertices[(e + m - 1) % m];
        let next = &vertices[e];
        areas[hull[e]] = ((next[0] - prev[0]).powi(2) + (next[1] - prev[1]).powi(2)).sqrt();
    }
    Ok((vertices, areas))
}

/// Spatial case by direct vertex enumeration over plane triples.
fn spatial_facets<T: Real>(u: &[Vec<T>], h: &[T]) -> Result<(Vec<Vec<T>>, Vec<T>)> {
    let k = u.len();
    let scale = h.iter().copied().fold(T::zero(), T::max);
    let tol = lit::<T>(1e-10) * scale;
    let mut vertices: Vec<[T; 3]> = Vec::new();
    for a in 0..k {
        for b in a + 1..k {
            let ab = cross3(&u[a], &u[b]);
            for c in b + 1..k {
                let det = dot(&ab, &u[c]);
                if det.abs() < lit(1e-12) {
                    continue;
                }
                // Cramer via x = (h_a (u_b × u_c) + h_b (u_c × u_a) + h_c (u_a × u_b)) / det
                let bc = cross3(&u[b], &u[c]);
                let ca = cross3(&u[c], &u[a]);
                let mut x = [T::zero(); 3];
                for i in 0..3 {
                    x[i] = (h[a] * bc[i] + h[b] * ca[i] + h[c] * ab[i]) / det;
                }
                if (0..k).all(|j| dot(&x, &u[j]) <= h[j] + tol) {
                    let dup = vertices
                        .iter()
                        .any(|v| (0..3).all(|i| (v[i] - x[i]).abs() <= lit::<T>(10.0) * tol));
                    if !dup {
                        vertices.push(x);
                    }
                }
            }
        }
    }
    if vertices.len() < 4 {
        return Err(Error::InvalidPolytope("fewer than four vertices".into()));
    }
    let mut areas = vec![T::zero(); k];
    for j in 0..k {
        let on: Vec<&[T; 3]> = vertices
            .iter()
            .filter(|v| (dot(&v[..], &u[j]) - h[j]).abs() <= lit::<T>(10.0) * tol)
            .collect();
        if on.len() < 3 {
            continue;
        }
        areas[j] = facet_polygon_area(&u[j], &on);
    }
    Ok((vertices.into_iter().map(|v| v.to_vec()).collect(), areas))
}

fn plane_basis<T: Real>(n: &[T]) -> ([T; 3], [T; 3]) {
    let pick = if n[0].abs() < lit(0.6) {
        [T::one(), T::zero(), T::zero()]
    } else {
        [T::zero(), T::one(), T::zero()]
    };
    let e1 = cross3(n, &pick);
    let r = norm(&e1);
    let e1 = [e1[0] / r, e1[1] / r, e1[2] / r];
    let e2 = cross3(n, &e1);
    (e1, e2)
}

fn ordered_facet<'a, T: Real>(normal: &[T], pts: &[&'a [T; 3]]) -> Vec<&'a [T; 3]> {
    let m = T::from_count(pts.len());
    let mut c = [T::zero(); 3];
    for p in pts {
        for i in 0..3 {
            c[i] = c[i] + p[i] / m;
        }
    }
    let (e1, e2) = plane_basis(normal);
    let mut with_angle: Vec<(T, &[T; 3])> = pts
        .iter()
        .map(|p| {
            let d = [p[0] - c[0], p[1] - c[1], p[2] - c[2]];
            (dot(&d, &e2).atan2(dot(&d, &e1)), *p)
        })
        .collect();
    with_angle.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap_or(Ordering::Equal));
    with_angle.into_iter().map(|(_, p)| p).collect()
}

fn facet_polygon_area<T: Real>(normal: &[T], pts: &[&[T; 3]]) -> T {
    let ring = ordered_facet(normal, pts);
    let mut acc = [T::zero(); 3];
    for i in 0..ring.len() {
        let c = cross3(ring[i], ring[(i + 1) % ring.len()]);
        for k in 0..3 {
            acc[k] = acc[k] + c[k];
        }
    }
    (dot(&acc, normal) / lit(2.0)).abs()
}

/// Independent volume: shoelace in the plane, signed tetrahedra from the
/// origin over triangulated facets in space.
fn direct_volume<T: Real>(p: &Polytope<T>) -> T {
    if p.dim == 2 {
        let v = &p.vertices;
        let m = v.len();
        (0..m)
            .map(|i| cross2(&v[i], &v[(i + 1) % m]))
            .sum::<T>()
            / lit(2.0)
    } else {
        let tol = lit::<T>(1e-9) * p.support.iter().copied().fold(T::zero(), T::max);
        let verts: Vec<[T; 3]> = p.vertices.iter().map(|v| [v[0], v[1], v[2]]).collect();
        let mut vol = T::zero();
        for (j, u) in p.normals.iter().enumerate() {
            if p.facet_areas[j] == T::zero() {
                continue;
            }
            let on: Vec<&[T; 3]> = verts.iter().filter(|v| (dot(&v[..], u) - p.support[j]).abs() <= tol).collect();
            let ring = ordered_facet(u, &on);
            for i in 1..ring.len().saturating_sub(1) {
                let c = cross3(ring[i], ring[i + 1]);
                vol = vol + dot(&ring[0][..], &c).abs() / lit(6.0);
            }
        }
        vol
    }
}

fn check_invariants<T: Real>(p: &Polytope<T>) -> Result<()> {
    let total = p.surface_area();
    let mut closure = vec![T::zero(); p.dim];
    for (u, &f) in p.normals.iter().zip(&p.facet_areas) {
        for i in 0..p.dim {
            closure[i] = closure[i] + f * u[i];
        }
    }
    if norm(&closure) > lit::<T>(1e-9) * total {
        return Err(Error::InvalidPolytope(format!(
            "surface area measure not closed: |Σ F u| = {}",
            norm(&closure)
        )));
    }
    if !(p.volume > T::zero()) {
        return Err(Error::InvalidPolytope("empty interior".into()));
    }
    let direct = direct_volume(p);
    if (direct - p.volume).abs() > lit::<T>(1e-9) * p.volume {
        return Err(Error::InvalidPolytope(format!(
            "volume {} disagrees with direct computation {direct}",
            p.volume
        )));
    }
    Ok(())
}

/// Atoms `(u_j, F_j)` with positive facet area.
pub fn surface_area_measure<T: Real>(p: &Polytope<T>) -> DiscreteSphereMeasure<T> {
    let (directions, weights) = p
        .normals
        .iter()
        .zip(&p.facet_areas)
        .filter(|(_, &f)| f > T::zero())
        .map(|(u, &f)| (u.clone(), f))
        .unzip();
    DiscreteSphereMeasure {
        dim: p.dim,
        directions,
        weights,
    }
}

/// `V(K*) = (1/n) ∫ h(K, u)^{-n} du`.
pub fn polar_volume<T: Real>(profile: &SupportProfile<T>) -> Result<T> {
    if let Some(h) = profile.values.iter().find(|h| !(**h > T::zero())) {
        return Err(domain("polar_volume", format!("nonpositive support value {h}")));
    }
    Ok(profile.dual_integral()? / T::from_count(profile.ds.dim()))
}

/// `(a h_K^p + b h_L^p)^{1/p}` pointwise.
pub fn lp_combination<T: Real>(
    hk: &SupportProfile<T>,
    hl: &SupportProfile<T>,
    a: T,
    b: T,
    p: T,
) -> Result<SupportProfile<T>> {
    if !Arc::ptr_eq(&hk.ds, &hl.ds) && *hk.ds != *hl.ds {
        return Err(domain("lp_combination", "profiles live on different direction sets"));
    }
    if !(p >= T::one()) {
        return Err(domain("lp_combination", format!("p = {p} < 1")));
    }
    if !(a >= T::zero() && b >= T::zero()) || a + b == T::zero() {
        return Err(domain("lp_combination", format!("coefficients a = {a}, b = {b}")));
    }
    let pw = Power::new(p);
    let values = hk
        .values
        .iter()
        .zip(&hl.values)
        .map(|(&x, &y)| (a * pw.eval(x) + b * pw.eval(y)).powf(T::one() / p))
        .collect();
    SupportProfile::new(hk.ds.clone(), values)
}

/// Support function of a polytope sampled on `ds`.
pub fn polytope_profile<T: Real>(p: &Polytope<T>, ds: Arc<DirectionSet<T>>) -> Result<SupportProfile<T>> {
    let values = ds.directions().map(|u| p.support_at(u)).collect();
    SupportProfile::new(ds, values)
}

fn same_dim<T: Real>(op: &'static str, a: &Polytope<T>, b: &Polytope<T>) -> Result<()> {
    if a.dim == b.dim {
        Ok(())
    } else {
        Err(Error::LengthMismatch {
            op,
            expected: a.dim,
            got: b.dim,
        })
    }
}

/// `V_1(M, K) = (1/n) Σ_j h(K, u_j) F_j(M)`.
pub fn mixed_volume_v1<T: Real>(m: &Polytope<T>, k: &Polytope<T>) -> Result<T> {
    same_dim("mixed_volume_v1", m, k)?;
    let s: T = m
        .normals
        .iter()
        .zip(&m.facet_areas)
        .filter(|(_, &f)| f > T::zero())
        .map(|(u, &f)| k.support_at(u) * f)
        .sum();
    Ok(s / T::from_count(m.dim))
}

/// `V_p(K, L) = (1/n) Σ_j h(L, u_j)^p h_j^{1-p} F_j`.
pub fn lp_mixed_volume<T: Real>(k: &Polytope<T>, l: &Polytope<T>, p: T) -> Result<T> {
    same_dim("lp_mixed_volume", k, l)?;
    if !(p >= T::one()) {
        return Err(domain("lp_mixed_volume", format!("p = {p} < 1")));
    }
    let pw = Power::new(p);
    let s: T = (0..k.len())
        .filter(|&j| k.facet_areas[j] > T::zero())
        .map(|j| pw.eval(l.support_at(&k.normals[j])) * k.support[j].powf(T::one() - p) * k.facet_areas[j])
        .sum();
    Ok(s / T::from_count(k.dim))
}

/// Facet data `(u_j, h_j^{1-p} F_j)` over positive-area facets.
fn weighted_atoms<T: Real>(p: &Polytope<T>, exponent: T) -> (Vec<T>, Vec<T>) {
    let mut dirs = Vec::new();
    let mut w = Vec::new();
    for j in 0..p.len() {
        if p.facet_areas[j] > T::zero() {
            dirs.extend_from_slice(&p.normals[j]);
            w.push(p.support[j].powf(T::one() - exponent) * p.facet_areas[j]);
        }
    }
    (dirs, w)
}

fn projection_profile<T: Real>(
    op: &'static str,
    poly: &Polytope<T>,
    p: T,
    ds: Arc<DirectionSet<T>>,
    symmetric: bool,
) -> Result<SupportProfile<T>> {
    if !(p >= T::one()) || !p.is_finite() {
        return Err(domain(op, format!("need finite p >= 1, got {p}")));
    }
    if ds.dim() != poly.dim {
        return Err(Error::LengthMismatch {
            op,
            expected: poly.dim,
            got: ds.dim(),
        });
    }
    let (dirs, w) = weighted_atoms(poly, p);
    let n = poly.dim;
    let pw = Power::new(p);
    let values = (0..ds.len())
        .into_par_iter()
        .map(|i| {
            let u = ds.direction(i);
            let s: T = dirs
                .chunks_exact(n)
                .zip(&w)
                .map(|(v, &wj)| {
                    let d = dot(u, v);
                    let d = if symmetric { d.abs() } else { d.max(T::zero()) };
                    pw.eval(d) * wj
                })
                .sum();
            let s = if symmetric { s / lit(2.0) } else { s };
            s.powf(T::one() / p)
        })
        .collect();
    SupportProfile::new(ds, values)
}

/// `h(Π_p^+ P, u)^p = Σ_j (u·u_j)_+^p h_j^{1-p} F_j`.
pub fn projection_body_plus<T: Real>(poly: &Polytope<T>, p: T, ds: Arc<DirectionSet<T>>) -> Result<SupportProfile<T>> {
    projection_profile("projection_body_plus", poly, p, ds, false)
}

/// `Π_p P = ½·Π_p^+ P +_p ½·Π_p^+(-P)`, i.e. `h^p = ½ Σ_j |u·u_j|^p h_j^{1-p} F_j`.
pub fn projection_body_sym<T: Real>(poly: &Polytope<T>, p: T, ds: Arc<DirectionSet<T>>) -> Result<SupportProfile<T>> {
    projection_profile("projection_body_sym", poly, p, ds, true)
}

/// `(κ_n κ_{p-1} / κ_{n+p-2})^{n/p}`, the value at centred ellipsoids.
pub fn petty_bound<T: Real>(n: usize, p: T) -> Result<T> {
    let nn = T::from_count(n);
    let ratio = unit_ball_volume(nn)? * unit_ball_volume(p - T::one())? / unit_ball_volume(nn + p - lit(2.0))?;
    Ok(ratio.powf(nn / p))
}

/// `V(P)^{n/p-1} V(Π_p^{+,*} P) <= (κ_n κ_{p-1}/κ_{n+p-2})^{n/p}`.
pub fn petty_functional_plus<T: Real>(poly: &Polytope<T>, p: T, ds: Arc<DirectionSet<T>>) -> Result<InequalityReport> {
    petty_report(poly, p, ds, PETTY_TOLERANCE)
}

pub fn petty_report<T: Real>(poly: &Polytope<T>, p: T, ds: Arc<DirectionSet<T>>, tolerance: f64) -> Result<InequalityReport> {
    if !(p > T::one()) {
        return Err(domain("petty_functional_plus", format!("need p > 1, got {p}")));
    }
    let m = ds.len();
    let n = poly.dim;
    let pi = projection_body_plus(poly, p, ds)?;
    let polar = polar_volume(&pi)?;
    let lhs = poly.volume.powf(T::from_count(n) / p - T::one()) * polar;
    let rhs = petty_bound(n, p)?;
    Ok(InequalityReport::new(
        "petty",
        n,
        Some(p.as_f64()),
        None,
        lhs.as_f64(),
        rhs.as_f64(),
        tolerance,
    )
    .with("directions", m)
    .with("facets", poly.len())
    .with("volume", poly.volume.as_f64())
    .with("polar_projection_volume", polar.as_f64()))
}

/// Regular `k`-gon with normals at angles `2πj/k` and support `h`.
pub fn regular_polygon<T: Real>(k: usize, h: T) -> Result<Polytope<T>> {
    let step = lit::<T>(2.0) * T::PI() / T::from_count(k);
    let normals = (0..k)
        .map(|j| {
            let (s, c) = (step * T::from_count(j)).sin_cos();
            vec![c, s]
        })
        .collect();
    polytope_from_support(normals, vec![h; k])
}

/// `A P` for an invertible matrix `A`.
pub fn linear_image<T: Real>(poly: &Polytope<T>, a: &[Vec<T>]) -> Result<Polytope<T>> {
    let n = poly.dim;
    if a.len() != n || a.iter().any(|r| r.len() != n) {
        return Err(domain("linear_image", format!("matrix must be {n}x{n}")));
    }
    let inv_t = inverse_transpose(a)?;
    let mut normals = Vec::with_capacity(poly.len());
    let mut support = Vec::with_capacity(poly.len());
    for (u, &h) in poly.normals.iter().zip(&poly.support) {
        // h(AP, A^{-T}u/|A^{-T}u|) = h(P, u)/|A^{-T}u|
        let w: Vec<T> = (0..n).map(|i| dot(&inv_t[i], u)).collect();
        let r = norm(&w);
        normals.push(w.iter().map(|&x| x / r).collect());
        support.push(h / r);
    }
    polytope_from_support(normals, support)
}

fn inverse_transpose<T: Real>(a: &[Vec<T>]) -> Result<Vec<Vec<T>>> {
    let n = a.len();
    if n == 2 {
        let det = a[0][0] * a[1][1] - a[0][1] * a[1][0];
        if det.abs() < lit(1e-14) {
            return Err(domain("linear_image", "singular matrix"));
        }
        Ok(vec![vec![a[1][1] / det, -a[1][0] / det], vec![-a[0][1] / det, a[0][0] / det]])
    } else {
        let cof = |r: usize, c: usize| {
            let rs: Vec<usize> = (0..3).filter(|&i| i != r).collect();
            let cs: Vec<usize> = (0..3).filter(|&i| i != c).collect();
            let m = a[rs[0]][cs[0]] * a[rs[1]][cs[1]] - a[rs[0]][cs[1]] * a[rs[1]][cs[0]];
            if (r + c) % 2 == 0 {
                m
            } else {
                -m
            }
        };
        let det = (0..3).map(|c| a[0][c] * cof(0, c)).sum::<T>();
        if det.abs() < lit(1e-14) {
            return Err(domain("linear_image", "singular matrix"));
        }
        // (A^{-1})^T = cofactor matrix / det
        Ok((0..3).map(|r| (0..3).map(|c| cof(r, c) / det).collect()).collect())
    }
}

/// Uniform random unit vectors.
pub fn random_unit_vectors<T: Real, R: Rng + ?Sized>(dim: usize, k: usize, rng: &mut R) -> Vec<Vec<T>> {
    let mut out = Vec::with_capacity(k);
    while out.len() < k {
        let v: Vec<f64> = (0..dim).map(|_| StandardNormal.sample(&mut *rng)).collect();
        let r = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if r > 1e-8 {
            out.push(v.iter().map(|x| lit::<T>(x / r)).collect());
        }
    }
    out
}

/// Random polytope: `k` uniform normals redrawn until they positively span,
/// support numbers uniform on `[0.5, 1.5]`.
pub fn random_polytope<T: Real, R: Rng + ?Sized>(dim: usize, k: usize, rng: &mut R) -> Result<Polytope<T>> {
    if k < dim + 1 {
        return Err(domain("random_polytope", format!("need at least {} facets", dim + 1)));
    }
    let normals = loop {
        let cand: Vec<Vec<T>> = random_unit_vectors(dim, k, rng);
        if check_bounded(&cand).is_ok() {
            break cand;
        }
    };
    let dist = Uniform::new(0.5f64, 1.5).expect("valid range");
    let support = (0..k).map(|_| lit::<T>(dist.sample(&mut *rng))).collect();
    polytope_from_support(normals, support)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn square() -> Polytope<f64> {
        polytope_from_support(
            vec![vec![1.0, 0.0], vec![0.0, 1.0], vec![-1.0, 0.0], vec![0.0, -1.0]],
            vec![1.0; 4],
        )
        .unwrap()
    }

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs()
    }

    #[test]
    fn unit_square() {
        let s = square();
        assert!((s.volume() - 4.0).abs() < 1e-12);
        for &f in s.facet_areas() {
            assert!((f - 2.0).abs() < 1e-12);
        }
        assert_eq!(s.vertices().len(), 4);
    }

    #[test]
    fn hexagon_closed_form() {
        let h = regular_polygon(6, 1.0f64).unwrap();
        assert!(rel(h.volume(), 2.0 * 3f64.sqrt()) < 1e-12);
        for &f in h.facet_areas() {
            assert!(rel(f, 2.0 / 3f64.sqrt()) < 1e-12);
        }
    }

    #[test]
    fn redundant_halfspace_gets_zero_area() {
        let s = polytope_from_support(
            vec![vec![1.0, 0.0], vec![0.0, 1.0], vec![-1.0, 0.0], vec![0.0, -1.0], vec![1.0, 0.0]],
            vec![1.0f64, 1.0, 1.0, 1.0, 10.0],
        )
        .unwrap();
        assert!((s.volume() - 4.0).abs() < 1e-12);
        assert_eq!(s.facet_areas()[4], 0.0);
        assert_eq!(surface_area_measure(&s).len(), 4);
    }

    #[test]
    fn unbounded_and_invalid_inputs() {
        let half = polytope_from_support(vec![vec![1.0, 0.0], vec![0.0, 1.0], vec![-1.0, 0.0]], vec![1.0; 3]);
        assert!(matches!(half, Err(Error::Unbounded(_))));
        let neg = polytope_from_support(
            vec![vec![1.0, 0.0], vec![0.0, 1.0], vec![-1.0, 0.0], vec![0.0, -1.0]],
            vec![1.0, 1.0, -1.0, 1.0],
        );
        assert!(neg.is_err());
        let slab = polytope_from_support(
            vec![vec![0.0, 0.0, 1.0], vec![0.0, 0.0, -1.0], vec![1.0, 0.0, 0.0], vec![-1.0, 0.0, 0.0]],
            vec![1.0; 4],
        );
        assert!(matches!(slab, Err(Error::Unbounded(_))));
    }

    #[test]
    fn cube_and_tetrahedron() {
        let mut normals = Vec::new();
        for k in 0..3 {
            for s in [1.0, -1.0] {
                let mut u = vec![0.0; 3];
                u[k] = s;
                normals.push(u);
            }
        }
        let cube = polytope_from_support(normals, vec![1.0f64; 6]).unwrap();
        assert!((cube.volume() - 8.0).abs() < 1e-12);
        assert!(cube.facet_areas().iter().all(|&f| (f - 4.0).abs() < 1e-12));
        assert_eq!(cube.vertices().len(), 8);

        // regular tetrahedron with inradius 1: volume 8√3
        let s = 1.0 / 3f64.sqrt();
        let tn = vec![vec![s, s, s], vec![s, -s, -s], vec![-s, s, -s], vec![-s, -s, s]];
        let tet = polytope_from_support(tn, vec![1.0; 4]).unwrap();
        assert!(rel(tet.volume(), 8.0 * 3f64.sqrt()) < 1e-12);
    }

    #[test]
    fn surface_measure_of_square() {
        let mu = surface_area_measure(&square());
        assert_eq!(mu.len(), 4);
        assert!(mu.weights.iter().all(|&w| (w - 2.0).abs() < 1e-12));
        assert!((mu.total_mass() - 8.0).abs() < 1e-12);
        let sx: f64 = mu.directions.iter().zip(&mu.weights).map(|(u, w)| u[0] * w).sum();
        assert!(sx.abs() < 1e-12);
    }

    #[test]
    fn polar_volumes() {
        let ds = Arc::new(DirectionSet::<f64>::new(2, 720).unwrap());
        let one = SupportProfile::new(ds.clone(), vec![1.0; 720]).unwrap();
        assert!(rel(polar_volume(&one).unwrap(), PI) < 1e-12);
        let r = SupportProfile::new(ds.clone(), vec![2.5; 720]).unwrap();
        assert!(rel(polar_volume(&r).unwrap(), PI / 6.25) < 1e-12);
        // square [-1,1]^2 has h = |u_1| + |u_2|; its polar is the cross-polytope of area 2
        let sq = polytope_profile(&square(), ds.clone()).unwrap();
        assert!(rel(polar_volume(&sq).unwrap(), 2.0) < 1e-4);
        let bad = SupportProfile::new(ds, vec![0.0; 720]).unwrap();
        assert!(polar_volume(&bad).is_err());
    }

    #[test]
    fn lp_combinations() {
        let ds = Arc::new(DirectionSet::<f64>::new(2, 64).unwrap());
        let k = polytope_profile(&square(), ds.clone()).unwrap();
        let l = SupportProfile::new(ds.clone(), vec![1.0; 64]).unwrap();
        let same = lp_combination(&k, &l, 1.0, 0.0, 2.0).unwrap();
        assert!(same.values.iter().zip(&k.values).all(|(a, b)| (a - b).abs() < 1e-15));
        let mid = lp_combination(&k, &k, 0.5, 0.5, 3.0).unwrap();
        assert!(mid.values.iter().zip(&k.values).all(|(a, b)| (a - b).abs() < 1e-14));
        let sum = lp_combination(&k, &l, 1.0, 1.0, 1.0).unwrap();
        assert!(sum.values.iter().zip(&k.values).all(|(a, b)| (a - (b + 1.0)).abs() < 1e-14));
        let other = SupportProfile::new(Arc::new(DirectionSet::new(2, 32).unwrap()), vec![1.0; 32]).unwrap();
        assert!(lp_combination(&k, &other, 1.0, 1.0, 2.0).is_err());
    }

    #[test]
    fn mixed_volumes() {
        let s = square();
        assert!((mixed_volume_v1(&s, &s).unwrap() - 4.0).abs() < 1e-12);
        // h ≡ 1 on the square's normals: (1/2)·Σ 1·2 = 4
        let disk = regular_polygon(720, 1.0f64).unwrap();
        assert!((mixed_volume_v1(&s, &disk).unwrap() - 4.0).abs() < 1e-12);
        let hex = regular_polygon(6, 1.0f64).unwrap();
        for p in [1.0, 1.5, 2.0, 3.0] {
            assert!(rel(lp_mixed_volume(&s, &s, p).unwrap(), 4.0) < 1e-10);
            assert!(rel(lp_mixed_volume(&hex, &hex, p).unwrap(), hex.volume()) < 1e-10);
        }
        let big = s.scaled(2.0).unwrap();
        assert!(rel(lp_mixed_volume(&s, &big, 2.0).unwrap(), 16.0) < 1e-12);
        assert!(rel(lp_mixed_volume(&s, &big, 1.0).unwrap(), mixed_volume_v1(&s, &big).unwrap()) < 1e-12);
    }

    #[test]
    fn minkowski_and_brunn_minkowski_on_random_pairs() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..50 {
            let m: Polytope<f64> = random_polytope(2, 7, &mut rng).unwrap();
            let k: Polytope<f64> = random_polytope(2, 9, &mut rng).unwrap();
            let v1 = mixed_volume_v1(&m, &k).unwrap();
            assert!(v1 * v1 >= m.volume() * k.volume() * (1.0 - 1e-12));
            // shared normal fan for Brunn–Minkowski
            let dist = Uniform::new(0.5f64, 1.5).unwrap();
            let h2: Vec<f64> = (0..m.len()).map(|_| dist.sample(&mut rng)).collect();
            let n = polytope_from_support(m.normals().to_vec(), h2.clone()).unwrap();
            let sum: Vec<f64> = m.support().iter().zip(&h2).map(|(a, b)| a + b).collect();
            let mn = polytope_from_support(m.normals().to_vec(), sum).unwrap();
            assert!(mn.volume().sqrt() - m.volume().sqrt() - n.volume().sqrt() >= -1e-10);
        }
    }

    #[test]
    fn disk_projection_body() {
        let disk = regular_polygon(360, 1.0f64).unwrap();
        let ds = Arc::new(DirectionSet::new(2, 720).unwrap());
        let prof = projection_body_plus(&disk, 2.0, ds).unwrap();
        let target = (PI / 2.0).sqrt();
        assert!(prof.values.iter().all(|&v| rel(v, target) < 5e-3));
    }

    #[test]
    fn p1_projection_body_is_even() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let ds = Arc::new(DirectionSet::new(2, 64).unwrap());
        for _ in 0..10 {
            let p: Polytope<f64> = random_polytope(2, 8, &mut rng).unwrap();
            let prof = projection_body_plus(&p, 1.0, ds.clone()).unwrap();
            for i in 0..32 {
                assert!((prof.values[i] - prof.values[i + 32]).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn projection_body_scaling() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let p: Polytope<f64> = random_polytope(2, 8, &mut rng).unwrap();
        let ds = Arc::new(DirectionSet::new(2, 90).unwrap());
        let c = 2.0;
        for q in [1.5, 2.0, 3.0] {
            let a = projection_body_plus(&p, q, ds.clone()).unwrap();
            let b = projection_body_plus(&p.scaled(c).unwrap(), q, ds.clone()).unwrap();
            // F ~ c^{n-1}, h^{1-p} ~ c^{1-p}: profile ~ c^{(n-p)/p}
            let factor = c.powf((2.0 - q) / q);
            for (x, y) in a.values.iter().zip(&b.values) {
                assert!(rel(*y, factor * x) < 1e-12);
            }
        }
    }

    #[test]
    fn symmetric_projection_body() {
        let ds = Arc::new(DirectionSet::new(2, 90).unwrap());
        let hex = regular_polygon(6, 1.0f64).unwrap();
        let a = projection_body_plus(&hex, 2.0, ds.clone()).unwrap();
        let b = projection_body_sym(&hex, 2.0, ds.clone()).unwrap();
        assert!(a.values.iter().zip(&b.values).all(|(x, y)| (x - y).abs() < 1e-10));

        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let fine = Arc::new(DirectionSet::new(2, 720).unwrap());
        for _ in 0..50 {
            let p: Polytope<f64> = random_polytope(2, 7, &mut rng).unwrap();
            let sym = projection_body_sym(&p, 2.0, ds.clone()).unwrap();
            for i in 0..45 {
                assert!((sym.values[i] - sym.values[i + 45]).abs() < 1e-10);
            }
            // matches the Firey midpoint built from -P
            let plus_neg = projection_body_plus(&p.reflected().unwrap(), 2.0, ds.clone()).unwrap();
            let plus = projection_body_plus(&p, 2.0, ds.clone()).unwrap();
            let mid = lp_combination(&plus, &plus_neg, 0.5, 0.5, 2.0).unwrap();
            assert!(mid.values.iter().zip(&sym.values).all(|(x, y)| (x - y).abs() < 1e-12));
            let vs = polar_volume(&projection_body_sym(&p, 2.0, fine.clone()).unwrap()).unwrap();
            let vp = polar_volume(&projection_body_plus(&p, 2.0, fine.clone()).unwrap()).unwrap();
            assert!(vs <= vp * (1.0 + 1e-12));
        }
    }

    #[test]
    fn petty_on_disk_and_random_polygons() {
        let ds = Arc::new(DirectionSet::new(2, 720).unwrap());
        let disk = regular_polygon(360, 1.0f64).unwrap();
        let r = petty_functional_plus(&disk, 2.0, ds.clone()).unwrap();
        assert!((r.rhs - 2.0).abs() < 1e-12);
        assert!((0.99..=1.01).contains(&r.ratio), "{}", r.ratio);

        let sheared = linear_image(&disk, &[vec![1.0, 1.5], vec![0.0, 1.0]]).unwrap();
        assert!(rel(sheared.volume(), disk.volume()) < 1e-10);
        let rs = petty_functional_plus(&sheared, 2.0, ds.clone()).unwrap();
        assert!(rel(rs.lhs, r.lhs) < 0.01);

        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for _ in 0..50 {
            let p: Polytope<f64> = random_polytope(2, 8, &mut rng).unwrap();
            for q in [1.5, 2.0, 3.0] {
                assert!(petty_functional_plus(&p, q, ds.clone()).unwrap().passed());
            }
        }
    }

    #[test]
    fn spatial_petty() {
        let ds = Arc::new(DirectionSet::new(3, 2000).unwrap());
        let mut rng = ChaCha8Rng::seed_from_u64(29);
        for _ in 0..5 {
            let p: Polytope<f64> = random_polytope(3, 14, &mut rng).unwrap();
            assert!(petty_functional_plus(&p, 2.0, ds.clone()).unwrap().passed());
        }
    }

    #[test]
    fn linear_image_preserves_volume_for_unimodular_maps() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let p: Polytope<f64> = random_polytope(3, 12, &mut rng).unwrap();
        let a = vec![vec![1.0, 0.5, 0.0], vec![0.0, 1.0, -0.3], vec![0.0, 0.0, 1.0]];
        let q = linear_image(&p, &a).unwrap();
        assert!(rel(q.volume(), p.volume()) < 1e-10);
    }

    #[test]
    fn json_round_trip() {
        let data = square().to_data();
        let text = serde_json::to_string(&data).unwrap();
        assert!(text.starts_with(r#"{"dim":2,"normals":[[1.0,0.0]"#));
        let back = Polytope::from_data(serde_json::from_str::<PolytopeData<f64>>(&text).unwrap()).unwrap();
        assert_eq!(back, square());
    }
}
