//! Grid functions on uniform isotropic 2-D/3-D grids: sampling of analytic
//! families, gradients, norms, distribution functions and rearrangements.

use std::cmp::Ordering;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::scalar::{lit, Real};
use crate::specfun::{bessel_j, gn_q_max, neumann_radial_eigenvalue, unit_ball_volume};

/// Width in cells of the boundary layer on which grid functions vanish.
pub const SHELL: usize = 2;

/// A real function sampled at the points `origin + h·i` of a uniform grid,
/// stored row-major (last axis fastest).
#[derive(Clone, Debug, PartialEq)]
pub struct GridFunction<T> {
    dim: usize,
    shape: Vec<usize>,
    origin: Vec<T>,
    spacing: T,
    values: Vec<T>,
}

impl<T: Real> GridFunction<T> {
    /// Checks finiteness and the zero boundary shell.
    pub fn new(shape: Vec<usize>, origin: Vec<T>, spacing: T, values: Vec<T>) -> Result<Self> {
        let f = Self::from_raw(shape, origin, spacing, values)?;
        if let Some(i) = f.shell_indices().find(|&i| f.values[i] != T::zero()) {
            return Err(Error::InvalidGrid(format!("nonzero value {} on the boundary shell at cell {i}", f.values[i])));
        }
        Ok(f)
    }

    /// Like [`GridFunction::new`] but zeroes the shell instead of rejecting it.
    pub fn with_zero_shell(shape: Vec<usize>, origin: Vec<T>, spacing: T, values: Vec<T>) -> Result<Self> {
        let mut f = Self::from_raw(shape, origin, spacing, values)?;
        f.clear_shell();
        Ok(f)
    }

    fn from_raw(shape: Vec<usize>, origin: Vec<T>, spacing: T, values: Vec<T>) -> Result<Self> {
        let dim = shape.len();
        if !(2..=3).contains(&dim) {
            return Err(Error::UnsupportedDimension { op: "GridFunction", dim });
        }
        if origin.len() != dim {
            return Err(Error::LengthMismatch {
                op: "GridFunction origin",
                expected: dim,
                got: origin.len(),
            });
        }
        if shape.iter().any(|&s| s < 2 * SHELL + 1) {
            return Err(Error::InvalidGrid(format!("shape {shape:?} too small")));
        }
        if !(spacing > T::zero()) || !spacing.is_finite() {
            return Err(Error::InvalidGrid(format!("spacing {spacing} must be positive")));
        }
        let count: usize = shape.iter().product();
        if values.len() != count {
            return Err(Error::LengthMismatch {
                op: "GridFunction values",
                expected: count,
                got: values.len(),
            });
        }
        if let Some(v) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::InvalidGrid(format!("non-finite value {v}")));
        }
        Ok(Self {
            dim,
            shape,
            origin,
            spacing,
            values,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn origin(&self) -> &[T] {
        &self.origin
    }

    pub fn spacing(&self) -> T {
        self.spacing
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// `h^n`.
    pub fn cell_volume(&self) -> T {
        self.spacing.powi(self.dim as i32)
    }

    /// Point at the integer centre index `⌊N_k/2⌋` of every axis.
    pub fn center(&self) -> Vec<T> {
        (0..self.dim)
            .map(|k| self.origin[k] + self.spacing * T::from_count(self.shape[k] / 2))
            .collect()
    }

    /// Multi-index of a flat index.
    pub fn unflatten(&self, mut flat: usize) -> [usize; 3] {
        let mut idx = [0; 3];
        for k in (0..self.dim).rev() {
            idx[k] = flat % self.shape[k];
            flat /= self.shape[k];
        }
        idx
    }

    /// Coordinates of a flat index.
    pub fn point(&self, flat: usize) -> [T; 3] {
        let idx = self.unflatten(flat);
        let mut x = [T::zero(); 3];
        for k in 0..self.dim {
            x[k] = self.origin[k] + self.spacing * T::from_count(idx[k]);
        }
        x
    }

    fn stride(&self, axis: usize) -> usize {
        self.shape[axis + 1..].iter().product()
    }

    fn in_shell(&self, flat: usize) -> bool {
        let idx = self.unflatten(flat);
        (0..self.dim).any(|k| idx[k] < SHELL || idx[k] + SHELL >= self.shape[k])
    }

    fn shell_indices(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.values.len()).filter(move |&i| self.in_shell(i))
    }

    fn clear_shell(&mut self) {
        for i in 0..self.values.len() {
            if self.in_shell(i) {
                self.values[i] = T::zero();
            }
        }
    }

    /// `λ f`.
    pub fn scaled(&self, lambda: T) -> Self {
        let mut g = self.clone();
        g.values.iter_mut().for_each(|v| *v = *v * lambda);
        g
    }

    /// Same grid, new values (shell must vanish).
    pub fn with_values(&self, values: Vec<T>) -> Result<Self> {
        Self::new(self.shape.clone(), self.origin.clone(), self.spacing, values)
    }

    pub fn max_abs(&self) -> T {
        self.values.iter().fold(T::zero(), |m, v| m.max(v.abs()))
    }

    pub fn is_trivial(&self) -> bool {
        self.values.iter().all(|v| *v == T::zero())
    }

    /// Writes the JSON header to `header` and the raw little-endian `f64`
    /// data next to it (same stem, `.bin` extension).
    pub fn write(&self, header: &Path) -> Result<()> {
        let data_path = header.with_extension("bin");
        let mut bytes = Vec::with_capacity(8 * self.values.len());
        for v in &self.values {
            bytes.extend_from_slice(&v.as_f64().to_le_bytes());
        }
        fs::write(&data_path, bytes)?;
        let name = data_path
            .file_name()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default();
        let head = GridHeader {
            dim: self.dim,
            shape: self.shape.clone(),
            origin: self.origin.iter().map(|v| v.as_f64()).collect(),
            spacing: self.spacing.as_f64(),
            data: name,
        };
        fs::write(header, crate::io::to_json_string(&head)?)?;
        Ok(())
    }

    /// Reads a header written by [`GridFunction::write`]; a relative data
    /// path is resolved against the header's directory.
    pub fn read(header: &Path) -> Result<Self> {
        let head: GridHeader = serde_json::from_str(&fs::read_to_string(header)?)?;
        let mut data = PathBuf::from(&head.data);
        if data.is_relative() {
            if let Some(dir) = header.parent() {
                data = dir.join(data);
            }
        }
        let bytes = fs::read(&data)?;
        if bytes.len() % 8 != 0 {
            return Err(Error::InvalidGrid(format!("data file has {} bytes, not a multiple of 8", bytes.len())));
        }
        let values = bytes
            .chunks_exact(8)
            .map(|c| lit(f64::from_le_bytes(c.try_into().expect("8-byte chunk"))))
            .collect();
        if head.dim != head.shape.len() {
            return Err(Error::InvalidGrid(format!("dim {} but shape {:?}", head.dim, head.shape)));
        }
        Self::new(
            head.shape,
            head.origin.into_iter().map(lit).collect(),
            lit(head.spacing),
            values,
        )
    }
}

#[derive(Serialize, Deserialize)]
struct GridHeader {
    dim: usize,
    shape: Vec<usize>,
    origin: Vec<f64>,
    spacing: f64,
    data: String,
}

/// How tails reaching the boundary shell are handled when sampling.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Truncation {
    /// `Shift` for polynomially decaying families, `Zero` otherwise.
    #[default]
    Auto,
    /// Zero the shell only.
    Zero,
    /// Subtract the largest shell value and clip at zero, so the sampled
    /// function is continuous across the edge of its support.
    Shift,
}

/// Cube `[lo, hi]^dim` with `cells` points per axis (spacing `(hi-lo)/cells`).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridParams {
    pub dim: usize,
    pub lo: f64,
    pub hi: f64,
    pub cells: usize,
    #[serde(default)]
    pub truncation: Truncation,
}

impl GridParams {
    pub fn square(lo: f64, hi: f64, cells: usize) -> Self {
        Self {
            dim: 2,
            lo,
            hi,
            cells,
            truncation: Truncation::Auto,
        }
    }

    pub fn cube(lo: f64, hi: f64, cells: usize) -> Self {
        Self {
            dim: 3,
            ..Self::square(lo, hi, cells)
        }
    }

    pub fn spacing(&self) -> f64 {
        (self.hi - self.lo) / self.cells as f64
    }
}

/// One compactly supported C^∞ bump `amplitude · e · exp(-1/(1 - |x-c|²/r²))`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Bump {
    pub center: Vec<f64>,
    pub radius: f64,
    #[serde(default = "one")]
    pub amplitude: f64,
}

fn one() -> f64 {
    1.0
}

fn is_none<X>(x: &Option<X>) -> bool {
    x.is_none()
}

/// Analytic test functions. All families except `bump_sum` are radial about
/// the origin; `sheared` composes with `x ↦ M(x - offset)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", content = "params", rename_all = "snake_case")]
pub enum AnalyticSpec {
    /// `amplitude · exp(-|x|²/a)`.
    Gaussian {
        #[serde(default = "one")]
        a: f64,
        #[serde(default = "one")]
        amplitude: f64,
    },
    /// `(a + |x|^{p/(p-1)})^{1-n/p}`, `1 < p < n`.
    SobolevExtremal {
        #[serde(default, skip_serializing_if = "is_none")]
        n: Option<usize>,
        p: f64,
        #[serde(default = "one")]
        a: f64,
    },
    /// `π^{n/2}Γ(1+n/2) / (a^{n(p-1)/p} Γ(1+n(p-1)/p)) · exp(-|x|^{p/(p-1)}/a)`.
    LogsobExtremal {
        #[serde(default, skip_serializing_if = "is_none")]
        n: Option<usize>,
        p: f64,
        #[serde(default = "one")]
        a: f64,
    },
    /// `a (1 - |b x|^{(p-n)/(p-1)})_+`, `p > n`.
    MorreyExtremal {
        #[serde(default, skip_serializing_if = "is_none")]
        n: Option<usize>,
        p: f64,
        #[serde(default = "one")]
        a: f64,
        #[serde(default = "one")]
        b: f64,
    },
    /// `a (1 - |x|/radius)_+`.
    Cone {
        #[serde(default = "one")]
        a: f64,
        #[serde(default = "one")]
        radius: f64,
    },
    /// `a (u(|x|/radius) - u(1))` on the ball, `u(r) = J_0(√λ_2 r)/(1 - J_0(√λ_2))`;
    /// planar only.
    NashExtremal {
        #[serde(default = "one")]
        a: f64,
        #[serde(default = "one")]
        radius: f64,
    },
    /// `a (1 + |x|^{p/(p-1)})^{-(p-1)/(q-p)}`.
    GnExtremal {
        #[serde(default, skip_serializing_if = "is_none")]
        n: Option<usize>,
        p: f64,
        q: f64,
        #[serde(default = "one")]
        a: f64,
    },
    BumpSum { bumps: Vec<Bump> },
    /// `x ↦ inner(M (x - offset))`.
    Sheared {
        inner: Box<AnalyticSpec>,
        matrix: Vec<Vec<f64>>,
        #[serde(default, skip_serializing_if = "Vec::is_empty")]
        offset: Vec<f64>,
    },
}

impl AnalyticSpec {
    pub fn family(&self) -> &'static str {
        match self {
            AnalyticSpec::Gaussian { .. } => "gaussian",
            AnalyticSpec::SobolevExtremal { .. } => "sobolev_extremal",
            AnalyticSpec::LogsobExtremal { .. } => "logsob_extremal",
            AnalyticSpec::MorreyExtremal { .. } => "morrey_extremal",
            AnalyticSpec::Cone { .. } => "cone",
            AnalyticSpec::NashExtremal { .. } => "nash_extremal",
            AnalyticSpec::GnExtremal { .. } => "gn_extremal",
            AnalyticSpec::BumpSum { .. } => "bump_sum",
            AnalyticSpec::Sheared { .. } => "sheared",
        }
    }

    /// Wraps `self` in a shear `x ↦ M x`.
    pub fn sheared(self, matrix: Vec<Vec<f64>>) -> Self {
        AnalyticSpec::Sheared {
            inner: Box::new(self),
            matrix,
            offset: Vec::new(),
        }
    }

    /// Wraps `self` in a translation by `offset`.
    pub fn translated(self, offset: Vec<f64>) -> Self {
        let n = offset.len();
        let matrix = (0..n).map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect()).collect();
        AnalyticSpec::Sheared {
            inner: Box::new(self),
            matrix,
            offset,
        }
    }

    fn heavy_tailed(&self) -> bool {
        match self {
            AnalyticSpec::SobolevExtremal { .. } | AnalyticSpec::GnExtremal { .. } => true,
            AnalyticSpec::Sheared { inner, .. } => inner.heavy_tailed(),
            _ => false,
        }
    }

    /// Parameter checks and a compiled evaluator for dimension `n`.
    fn compile(&self, n: usize) -> Result<Evaluator> {
        let check_n = |given: &Option<usize>| match given {
            Some(m) if *m != n => Err(domain(
                "sample_function",
                format!("family declares n = {m} but the grid has dimension {n}"),
            )),
            _ => Ok(()),
        };
        let nf = n as f64;
        Ok(match self {
            AnalyticSpec::Gaussian { a, amplitude } => {
                positive("gaussian a", *a)?;
                Evaluator::Radial(Radial::Gaussian { a: *a, amp: *amplitude })
            }
            AnalyticSpec::SobolevExtremal { n: m, p, a } => {
                check_n(m)?;
                if !(*p > 1.0 && *p < nf) {
                    return Err(domain("sobolev_extremal", format!("need 1 < p < n, got p = {p}")));
                }
                positive("sobolev_extremal a", *a)?;
                Evaluator::Radial(Radial::Sobolev {
                    a: *a,
                    s: p / (p - 1.0),
                    e: 1.0 - nf / p,
                })
            }
            AnalyticSpec::LogsobExtremal { n: m, p, a } => {
                check_n(m)?;
                if !(*p > 1.0) {
                    return Err(domain("logsob_extremal", format!("need p > 1, got p = {p}")));
                }
                positive("logsob_extremal a", *a)?;
                let g: f64 = nf * (p - 1.0) / p;
                let pref = std::f64::consts::PI.powf(nf / 2.0) * crate::specfun::gamma_fn(1.0 + nf / 2.0)?
                    / (a.powf(g) * crate::specfun::gamma_fn(1.0 + g)?);
                Evaluator::Radial(Radial::Logsob {
                    pref,
                    a: *a,
                    s: p / (p - 1.0),
                })
            }
            AnalyticSpec::MorreyExtremal { n: m, p, a, b } => {
                check_n(m)?;
                if !(*p > nf) {
                    return Err(domain("morrey_extremal", format!("need p > n, got p = {p}")));
                }
                positive("morrey_extremal b", *b)?;
                Evaluator::Radial(Radial::Morrey {
                    a: *a,
                    b: *b,
                    e: (p - nf) / (p - 1.0),
                })
            }
            AnalyticSpec::Cone { a, radius } => {
                positive("cone radius", *radius)?;
                Evaluator::Radial(Radial::Cone { a: *a, r: *radius })
            }
            AnalyticSpec::NashExtremal { a, radius } => {
                if n != 2 {
                    return Err(Error::UnsupportedDimension { op: "nash_extremal", dim: n });
                }
                positive("nash_extremal radius", *radius)?;
                let k = neumann_radial_eigenvalue::<f64>(2)?.sqrt();
                let j_end = bessel_j(0, k)?;
                Evaluator::Radial(Radial::Nash {
                    a: *a,
                    r: *radius,
                    k,
                    j_end,
                })
            }
            AnalyticSpec::GnExtremal { n: m, p, q, a } => {
                check_n(m)?;
                if !(*p > 1.0 && *p < nf && *q > *p && *q <= gn_q_max(n, *p) * (1.0 + 1e-12)) {
                    return Err(domain("gn_extremal", format!("parameters p = {p}, q = {q} out of range")));
                }
                Evaluator::Radial(Radial::Gn {
                    a: *a,
                    s: p / (p - 1.0),
                    e: -(p - 1.0) / (q - p),
                })
            }
            AnalyticSpec::BumpSum { bumps } => {
                for b in bumps {
                    if b.center.len() != n {
                        return Err(Error::LengthMismatch {
                            op: "bump center",
                            expected: n,
                            got: b.center.len(),
                        });
                    }
                    positive("bump radius", b.radius)?;
                }
                Evaluator::Bumps(bumps.clone())
            }
            AnalyticSpec::Sheared { inner, matrix, offset } => {
                if matrix.len() != n || matrix.iter().any(|r| r.len() != n) {
                    return Err(domain("sheared", format!("matrix must be {n}x{n}")));
                }
                if !offset.is_empty() && offset.len() != n {
                    return Err(Error::LengthMismatch {
                        op: "sheared offset",
                        expected: n,
                        got: offset.len(),
                    });
                }
                let mut m = [[0.0; 3]; 3];
                for i in 0..n {
                    for j in 0..n {
                        m[i][j] = matrix[i][j];
                    }
                }
                if det(&m, n).abs() < 1e-12 {
                    return Err(domain("sheared", "matrix is singular"));
                }
                let mut off = [0.0; 3];
                off[..offset.len()].copy_from_slice(offset);
                Evaluator::Sheared(Box::new(inner.compile(n)?), m, off)
            }
        })
    }

    /// Evaluates the function at `x` (dimension taken from `x.len()`).
    pub fn eval(&self, x: &[f64]) -> Result<f64> {
        let n = x.len();
        let ev = self.compile(n)?;
        let mut p = [0.0; 3];
        p[..n].copy_from_slice(x);
        Ok(ev.eval(&p, n))
    }
}

fn positive(what: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(domain("sample_function", format!("{what} = {v} must be positive")))
    }
}

fn det(m: &[[f64; 3]; 3], n: usize) -> f64 {
    if n == 2 {
        m[0][0] * m[1][1] - m[0][1] * m[1][0]
    } else {
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    }
}

#[derive(Clone, Debug)]
enum Radial {
    Gaussian { a: f64, amp: f64 },
    Sobolev { a: f64, s: f64, e: f64 },
    Logsob { pref: f64, a: f64, s: f64 },
    Morrey { a: f64, b: f64, e: f64 },
    Cone { a: f64, r: f64 },
    Nash { a: f64, r: f64, k: f64, j_end: f64 },
    Gn { a: f64, s: f64, e: f64 },
}

impl Radial {
    fn eval(&self, r: f64) -> f64 {
        match *self {
            Radial::Gaussian { a, amp } => amp * (-r * r / a).exp(),
            Radial::Sobolev { a, s, e } => (a + r.powf(s)).powf(e),
            Radial::Logsob { pref, a, s } => pref * (-r.powf(s) / a).exp(),
            Radial::Morrey { a, b, e } => a * (1.0 - (b * r).powf(e)).max(0.0),
            Radial::Cone { a, r: rad } => a * (1.0 - r / rad).max(0.0),
            Radial::Nash { a, r: rad, k, j_end } => {
                if r >= rad {
                    0.0
                } else {
                    let j = bessel_j(0, k * r / rad).expect("argument in range");
                    a * (j - j_end) / (1.0 - j_end)
                }
            }
            Radial::Gn { a, s, e } => a * (1.0 + r.powf(s)).powf(e),
        }
    }

    /// Radius beyond which the profile vanishes, if compact.
    fn support_radius(&self) -> Option<f64> {
        match *self {
            Radial::Morrey { b, .. } => Some(1.0 / b),
            Radial::Cone { r, .. } | Radial::Nash { r, .. } => Some(r),
            _ => None,
        }
    }

    /// Decay exponent `d` with `|f| ~ r^{-d}` for polynomial tails.
    fn tail_decay(&self) -> Option<f64> {
        match *self {
            Radial::Sobolev { s, e, .. } | Radial::Gn { s, e, .. } => Some(-s * e),
            _ => None,
        }
    }
}

#[derive(Clone, Debug)]
enum Evaluator {
    Radial(Radial),
    Bumps(Vec<Bump>),
    Sheared(Box<Evaluator>, [[f64; 3]; 3], [f64; 3]),
}

impl Evaluator {
    fn eval(&self, x: &[f64; 3], n: usize) -> f64 {
        match self {
            Evaluator::Radial(r) => r.eval(x[..n].iter().map(|v| v * v).sum::<f64>().sqrt()),
            Evaluator::Bumps(bumps) => bumps
                .iter()
                .map(|b| {
                    let d2: f64 = (0..n).map(|k| (x[k] - b.center[k]).powi(2)).sum::<f64>() / (b.radius * b.radius);
                    if d2 < 1.0 {
                        b.amplitude * (1.0 - 1.0 / (1.0 - d2)).exp()
                    } else {
                        0.0
                    }
                })
                .sum(),
            Evaluator::Sheared(inner, m, off) => {
                let mut y = [0.0; 3];
                for i in 0..n {
                    y[i] = (0..n).map(|j| m[i][j] * (x[j] - off[j])).sum();
                }
                inner.eval(&y, n)
            }
        }
    }

    /// Lower bound on the fraction of `‖f‖_1` inside the ball of radius
    /// `reach` around `centre` (0 when the mass is infinite).
    fn l1_capture(&self, n: usize, centre: &[f64; 3], reach: f64) -> f64 {
        match self {
            Evaluator::Radial(r) => {
                let dist = centre[..n].iter().map(|v| v * v).sum::<f64>().sqrt();
                radial_capture(r, n, reach - dist)
            }
            Evaluator::Bumps(bumps) => {
                let total: f64 = bumps.iter().map(|b| b.amplitude.abs() * b.radius.powi(n as i32)).sum();
                if total == 0.0 {
                    return 1.0;
                }
                let inside: f64 = bumps
                    .iter()
                    .filter(|b| {
                        let d: f64 = (0..n).map(|k| (b.center[k] - centre[k]).powi(2)).sum::<f64>().sqrt();
                        d + b.radius <= reach
                    })
                    .map(|b| b.amplitude.abs() * b.radius.powi(n as i32))
                    .sum();
                inside / total
            }
            Evaluator::Sheared(inner, m, off) => {
                // the ball B(c, R) contains {x : |M(x - off)| <= σ_min (R - |c - off|)}
                let dist = (0..n).map(|k| (centre[k] - off[k]).powi(2)).sum::<f64>().sqrt();
                let sigma = smallest_singular_lower_bound(m, n);
                inner.l1_capture(n, &[0.0; 3], sigma * (reach - dist))
            }
        }
    }
}

/// `1 / ‖M^{-1}‖_F`, a lower bound for the smallest singular value.
fn smallest_singular_lower_bound(m: &[[f64; 3]; 3], n: usize) -> f64 {
    let d = det(m, n);
    let mut frob = 0.0;
    for i in 0..n {
        for j in 0..n {
            // cofactor C_ji / det is entry (i, j) of the inverse
            let c = if n == 2 {
                let s = if (i + j) % 2 == 0 { 1.0 } else { -1.0 };
                s * m[1 - j][1 - i]
            } else {
                let (r0, r1) = match j {
                    0 => (1, 2),
                    1 => (0, 2),
                    _ => (0, 1),
                };
                let (c0, c1) = match i {
                    0 => (1, 2),
                    1 => (0, 2),
                    _ => (0, 1),
                };
                let s = if (i + j) % 2 == 0 { 1.0 } else { -1.0 };
                s * (m[r0][c0] * m[r1][c1] - m[r0][c1] * m[r1][c0])
            };
            frob += (c / d).powi(2);
        }
    }
    1.0 / frob.sqrt()
}

fn radial_capture(r: &Radial, n: usize, reach: f64) -> f64 {
    if reach <= 0.0 {
        return 0.0;
    }
    if let Some(rs) = r.support_radius() {
        if rs <= reach {
            return 1.0;
        }
    }
    if let Some(d) = r.tail_decay() {
        if d <= n as f64 {
            return 0.0;
        }
    }
    let w = |t: f64| r.eval(t).abs() * t.powi(n as i32 - 1);
    let inner = simpson(&w, 0.0, reach, 4000);
    // tail by t = reach/s
    let tail = simpson(
        &|s: f64| if s <= 0.0 { 0.0 } else { w(reach / s) * reach / (s * s) },
        0.0,
        1.0,
        4000,
    );
    if inner + tail == 0.0 {
        1.0
    } else {
        inner / (inner + tail)
    }
}

fn simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, m: usize) -> f64 {
    let h = (b - a) / m as f64;
    let mut s = f(a) + f(b);
    for i in 1..m {
        let x = a + h * i as f64;
        s += if i % 2 == 1 { 4.0 } else { 2.0 } * f(x);
    }
    s * h / 3.0
}

/// Sampling options.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct SampleOptions {
    /// Escalate a mass-capture shortfall to an error.
    pub strict: bool,
}

/// A sampled function with its diagnostics.
#[derive(Clone, Debug)]
pub struct Sampled<T> {
    pub function: GridFunction<T>,
    /// Lower bound on the captured fraction of `‖f‖_1`.
    pub mass_captured: f64,
    /// Value subtracted by shift truncation (0 when not applied).
    pub shift: f64,
}

impl<T> Sampled<T> {
    pub fn warning(&self) -> Option<String> {
        (self.mass_captured < 0.999).then(|| {
            format!(
                "grid captures at least {:.6} of the L1 mass (target 0.999)",
                self.mass_captured
            )
        })
    }
}

/// Samples `spec` on `grid` (non-strict).
pub fn sample_function<T: Real>(spec: &AnalyticSpec, grid: &GridParams) -> Result<GridFunction<T>> {
    Ok(sample_function_with(spec, grid, SampleOptions::default())?.function)
}

/// Samples `spec` at the grid points, flushes values below `1e-300` to zero,
/// applies the truncation policy and zeroes the boundary shell.
pub fn sample_function_with<T: Real>(
    spec: &AnalyticSpec,
    grid: &GridParams,
    opts: SampleOptions,
) -> Result<Sampled<T>> {
    let n = grid.dim;
    if !(2..=3).contains(&n) {
        return Err(Error::UnsupportedDimension {
            op: "sample_function",
            dim: n,
        });
    }
    if !(grid.hi > grid.lo) || grid.cells < 2 * SHELL + 1 {
        return Err(Error::InvalidGrid(format!(
            "grid [{}, {}] with {} cells",
            grid.lo, grid.hi, grid.cells
        )));
    }
    let ev = spec.compile(n)?;
    let h = grid.spacing();
    let cells = grid.cells;
    let row = cells;
    let count = cells.pow(n as u32);
    let mut raw: Vec<f64> = vec![0.0; count];
    raw.par_chunks_mut(row).enumerate().for_each(|(r, chunk)| {
        let mut x = [0.0; 3];
        // r enumerates all leading indices; the last axis runs along the chunk
        if n == 2 {
            x[0] = grid.lo + h * r as f64;
        } else {
            x[0] = grid.lo + h * (r / cells) as f64;
            x[1] = grid.lo + h * (r % cells) as f64;
        }
        for (j, v) in chunk.iter_mut().enumerate() {
            x[n - 1] = grid.lo + h * j as f64;
            let y = ev.eval(&x, n);
            *v = if y.abs() < 1e-300 { 0.0 } else { y };
        }
    });

    let shape = vec![cells; n];
    let mut f = GridFunction::from_raw(shape, vec![grid.lo; n], h, raw)?;
    let shift_wanted = match grid.truncation {
        Truncation::Auto => spec.heavy_tailed(),
        Truncation::Zero => false,
        Truncation::Shift => true,
    };
    let mut shift = 0.0;
    if shift_wanted {
        shift = f.shell_indices().fold(0.0f64, |m, i| m.max(f.values[i].abs()));
        if shift > 0.0 {
            for v in f.values.iter_mut() {
                let a = (v.abs() - shift).max(0.0);
                *v = if a < 1e-300 { 0.0 } else { a.copysign(*v) };
            }
        }
    }
    f.clear_shell();
    if f.is_trivial() {
        return Err(Error::TrivialFunction);
    }

    let centre = [(grid.lo + grid.hi) / 2.0; 3];
    let reach = (grid.hi - grid.lo) / 2.0 - SHELL as f64 * h;
    let captured = ev.l1_capture(n, &centre, reach);
    // a shifted profile is sampled as the compactly supported (|f| - shift)_+,
    // so the shortfall only describes the untruncated tail
    if opts.strict && captured < 0.999 && shift == 0.0 {
        return Err(Error::MassNotCaptured { captured });
    }
    let values = f.values.iter().map(|&v| lit::<T>(v)).collect();
    let function = GridFunction {
        dim: n,
        shape: f.shape,
        origin: vec![lit(grid.lo); n],
        spacing: lit(h),
        values,
    };
    Ok(Sampled {
        function,
        mass_captured: captured,
        shift,
    })
}

/// Central-difference gradient, one vector per cell, zero on the outermost
/// cell layer.
#[derive(Clone, Debug, PartialEq)]
pub struct GradientField<T> {
    dim: usize,
    data: Vec<T>,
}

impl<T: Real> GradientField<T> {
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn at(&self, flat: usize) -> &[T] {
        &self.data[flat * self.dim..(flat + 1) * self.dim]
    }

    pub fn vectors(&self) -> impl Iterator<Item = &[T]> {
        self.data.chunks_exact(self.dim)
    }

    /// Flat copy of the nonzero gradient vectors only.
    pub fn nonzero_vectors(&self) -> Vec<T> {
        self.vectors()
            .filter(|g| g.iter().any(|&c| c != T::zero()))
            .flat_map(|g| g.iter().copied())
            .collect()
    }
}

pub fn gradient_field<T: Real>(f: &GridFunction<T>) -> GradientField<T> {
    let n = f.dim;
    let two_h = f.spacing + f.spacing;
    let mut data = vec![T::zero(); n * f.values.len()];
    let strides: Vec<usize> = (0..n).map(|k| f.stride(k)).collect();
    data.par_chunks_mut(n).enumerate().for_each(|(i, g)| {
        let idx = f.unflatten(i);
        if (0..n).any(|k| idx[k] == 0 || idx[k] + 1 == f.shape[k]) {
            return;
        }
        for k in 0..n {
            g[k] = (f.values[i + strides[k]] - f.values[i - strides[k]]) / two_h;
        }
    });
    GradientField { dim: n, data }
}

/// `(Σ|f_i|^p h^n)^{1/p}`, or `max|f_i|` for `p = ∞`.
pub fn lp_norm<T: Real>(f: &GridFunction<T>, p: T) -> Result<T> {
    if p == T::infinity() {
        return Ok(f.max_abs());
    }
    if !(p >= T::one()) {
        return Err(domain("lp_norm", format!("p = {p} < 1")));
    }
    let pw = crate::scalar::Power::new(p);
    let s: T = f.values.iter().map(|v| pw.eval(v.abs())).sum();
    Ok((s * f.cell_volume()).powf(T::one() / p))
}

/// `h^n · #{|f_i| > eps_rel ‖f‖_∞}`.
pub fn support_volume<T: Real>(f: &GridFunction<T>, eps_rel: T) -> Result<T> {
    if !(eps_rel >= T::zero() && eps_rel < T::one()) {
        return Err(domain("support_volume", format!("eps_rel = {eps_rel} outside [0, 1)")));
    }
    let m = f.max_abs();
    if m == T::zero() {
        return Err(Error::TrivialFunction);
    }
    let cut = eps_rel * m;
    let count = f.values.iter().filter(|v| v.abs() > cut).count();
    Ok(T::from_count(count) * f.cell_volume())
}

/// Default relative threshold of [`support_volume`].
pub const SUPPORT_EPS: f64 = 1e-12;

/// `μ_f(t_k)` at increasing thresholds.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct DistributionProfile<T: Real> {
    pub thresholds: Vec<T>,
    pub masses: Vec<T>,
}

/// `f*(s_k)` at increasing arguments.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct DecreasingProfile<T: Real> {
    pub s_grid: Vec<T>,
    pub values: Vec<T>,
}

fn check_increasing<T: Real>(op: &'static str, xs: &[T], strictly_positive: bool) -> Result<()> {
    if xs.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(domain(op, "sequence must be strictly increasing"));
    }
    if let Some(&x0) = xs.first() {
        if (strictly_positive && !(x0 > T::zero())) || !(x0 >= T::zero()) {
            return Err(domain(op, format!("first entry {x0} out of range")));
        }
    }
    Ok(())
}

/// Magnitudes sorted in decreasing order (ties keep cell order).
fn sorted_magnitudes<T: Real>(f: &GridFunction<T>) -> Vec<T> {
    let mut v: Vec<T> = f.values.iter().map(|x| x.abs()).filter(|x| *x > T::zero()).collect();
    v.sort_by(|a, b| b.partial_cmp(a).unwrap_or(Ordering::Equal));
    v
}

/// Cell-count distribution function `μ_f(t) = h^n #{|f_i| > t}`.
pub fn distribution_function<T: Real>(f: &GridFunction<T>, thresholds: &[T]) -> Result<DistributionProfile<T>> {
    check_increasing("distribution_function", thresholds, true)?;
    let desc = sorted_magnitudes(f);
    let vol = f.cell_volume();
    let masses = thresholds
        .iter()
        .map(|&t| T::from_count(desc.partition_point(|&v| v > t)) * vol)
        .collect();
    Ok(DistributionProfile {
        thresholds: thresholds.to_vec(),
        masses,
    })
}

/// `f*(s) = sup{t : μ_f(t) > s}` inverted exactly on the cell staircase.
pub fn decreasing_rearrangement<T: Real>(f: &GridFunction<T>, s_grid: &[T]) -> Result<DecreasingProfile<T>> {
    check_increasing("decreasing_rearrangement", s_grid, false)?;
    let desc = sorted_magnitudes(f);
    let vol = f.cell_volume();
    let values = s_grid.iter().map(|&s| staircase_value(&desc, vol, s)).collect();
    Ok(DecreasingProfile {
        s_grid: s_grid.to_vec(),
        values,
    })
}

fn staircase_value<T: Real>(desc: &[T], vol: T, s: T) -> T {
    // k = #{j >= 1 : j·vol <= s}, robust to rounding in s / vol
    let mut k = (s / vol).floor().to_usize().unwrap_or(usize::MAX);
    if k < desc.len() {
        if T::from_count(k + 1) * vol <= s {
            k += 1;
        } else if k > 0 && T::from_count(k) * vol > s {
            k -= 1;
        }
    }
    desc.get(k).copied().unwrap_or(T::zero())
}

/// Discretisation of `f★(x) = f*(κ_n |x - c|^n)`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RearrangementScheme {
    /// Invert a distribution function built from a per-cell linear model of
    /// `|f|`; smooth in the radius, preserves `‖f‖_∞` exactly.
    #[default]
    Subcell,
    /// Invert the cell staircase directly.
    Staircase,
    /// Hand out the sorted cell values in order of distance to the centre;
    /// the output has exactly the value multiset of the input.
    LatticeOrder,
}

/// Number of threshold levels of the subcell distribution function.
pub const SUBCELL_LEVELS: usize = 4096;

pub fn symmetric_rearrangement<T: Real>(f: &GridFunction<T>) -> Result<GridFunction<T>> {
    symmetric_rearrangement_with(f, RearrangementScheme::Subcell)
}

pub fn symmetric_rearrangement_with<T: Real>(
    f: &GridFunction<T>,
    scheme: RearrangementScheme,
) -> Result<GridFunction<T>> {
    let n = f.dim;
    let centre = f.center();
    let kappa = unit_ball_volume(T::from_count(n))?;
    let ball_volume = |flat: usize| {
        let x = f.point(flat);
        let r2: T = (0..n).map(|k| (x[k] - centre[k]) * (x[k] - centre[k])).sum();
        kappa * r2.sqrt().powi(n as i32)
    };
    let mut out = vec![T::zero(); f.values.len()];
    match scheme {
        RearrangementScheme::Staircase => {
            let desc = sorted_magnitudes(f);
            let vol = f.cell_volume();
            out.par_iter_mut().enumerate().for_each(|(i, o)| {
                *o = staircase_value(&desc, vol, ball_volume(i));
            });
        }
        RearrangementScheme::LatticeOrder => {
            let desc = sorted_magnitudes(f);
            let mut cells: Vec<(T, usize)> = (0..f.values.len())
                .filter(|&i| !f.in_shell(i))
                .map(|i| (ball_volume(i), i))
                .collect();
            cells.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap_or(Ordering::Equal).then(a.1.cmp(&b.1)));
            for (v, (_, i)) in desc.iter().zip(&cells) {
                out[*i] = *v;
            }
        }
        RearrangementScheme::Subcell => {
            let profile = subcell_distribution(f, SUBCELL_LEVELS)?;
            let top = f.max_abs();
            out.par_iter_mut().enumerate().for_each(|(i, o)| {
                *o = invert_profile(&profile, ball_volume(i)).min(top);
            });
        }
    }
    let mut g = GridFunction {
        dim: n,
        shape: f.shape.clone(),
        origin: f.origin.clone(),
        spacing: f.spacing,
        values: out,
    };
    g.clear_shell();
    Ok(g)
}

/// Piecewise-linear inverse of a nonincreasing distribution profile:
/// the `t` at which `μ(t) = s`, or `0` for `s >= μ(t_0)`.
pub fn invert_profile<T: Real>(profile: &DistributionProfile<T>, s: T) -> T {
    let m = &profile.masses;
    let t = &profile.thresholds;
    let k = m.partition_point(|&mass| mass > s);
    if k == 0 {
        return T::zero();
    }
    if k == m.len() {
        return t[t.len() - 1];
    }
    let (m0, m1) = (m[k - 1], m[k]);
    let frac = if m0 > m1 { (m0 - s) / (m0 - m1) } else { T::zero() };
    t[k - 1] + (t[k] - t[k - 1]) * frac
}

/// Distribution function of the per-cell linear model of `|f|` at `levels + 1`
/// equally spaced thresholds `0, ‖f‖_∞/levels, ..., ‖f‖_∞`.
///
/// Inside a cell `|f| ≈ v + g·δ` with `δ` uniform on the cell, so the cell
/// value is `v` plus a sum of independent uniforms of widths `|g_k| h`; its
/// tail probability has the closed inclusion–exclusion form used below.
pub fn subcell_distribution<T: Real>(f: &GridFunction<T>, levels: usize) -> Result<DistributionProfile<T>> {
    if levels < 1 {
        return Err(domain("subcell_distribution", "need at least one level"));
    }
    let top = f.max_abs();
    if top == T::zero() {
        return Err(Error::TrivialFunction);
    }
    let n = f.dim;
    let grad = gradient_field(f);
    let h = f.spacing;
    let vol = f.cell_volume();
    let dt = top / T::from_count(levels);
    let thresholds: Vec<T> = (0..=levels).map(|k| dt * T::from_count(k)).collect();

    // difference array for thresholds fully below a cell's value range
    let mut below = vec![T::zero(); levels + 2];
    let mut partial = vec![T::zero(); levels + 1];
    for i in 0..f.values.len() {
        let v = f.values[i].abs();
        let g = grad.at(i);
        let sign = if f.values[i] < T::zero() { -T::one() } else { T::one() };
        let mut widths = [T::zero(); 3];
        let mut wmax = T::zero();
        for k in 0..n {
            widths[k] = (sign * g[k]).abs() * h;
            wmax = wmax.max(widths[k]);
        }
        if v == T::zero() && wmax == T::zero() {
            continue;
        }
        let mut kept = [T::zero(); 3];
        let mut nk = 0;
        for &w in &widths[..n] {
            if w > lit::<T>(1e-9) * wmax {
                kept[nk] = w;
                nk += 1;
            }
        }
        let total: T = kept[..nk].iter().copied().sum();
        let lo = v - total / lit(2.0);
        let hi = v + total / lit(2.0);
        // thresholds t_k < lo see the whole cell
        let first = if lo <= T::zero() {
            0
        } else {
            ((lo / dt).ceil().to_usize().unwrap_or(levels + 1)).min(levels + 1)
        };
        below[0] = below[0] + vol;
        below[first] = below[first] - vol;
        if nk == 0 {
            continue;
        }
        let mut k = first;
        while k <= levels && thresholds[k] < hi {
            let tail = T::one() - uniform_sum_cdf(&kept[..nk], thresholds[k] - lo);
            partial[k] = partial[k] + vol * tail;
            k += 1;
        }
    }
    let mut masses = Vec::with_capacity(levels + 1);
    let mut run = T::zero();
    for k in 0..=levels {
        run = run + below[k];
        masses.push(run + partial[k]);
    }
    // enforce monotonicity against rounding
    for k in 1..masses.len() {
        if masses[k] > masses[k - 1] {
            masses[k] = masses[k - 1];
        }
    }
    Ok(DistributionProfile { thresholds, masses })
}

/// CDF at `s` of a sum of independent uniforms on `[0, a_k]`.
fn uniform_sum_cdf<T: Real>(a: &[T], s: T) -> T {
    let m = a.len();
    let total: T = a.iter().copied().sum();
    if s <= T::zero() {
        return T::zero();
    }
    if s >= total {
        return T::one();
    }
    let mut acc = T::zero();
    for mask in 0u32..(1 << m) {
        let mut shift = T::zero();
        for (k, &ak) in a.iter().enumerate() {
            if mask & (1 << k) != 0 {
                shift = shift + ak;
            }
        }
        let x = s - shift;
        if x > T::zero() {
            let term = x.powi(m as i32);
            acc = if mask.count_ones() % 2 == 0 { acc + term } else { acc - term };
        }
    }
    let mut denom = a.iter().copied().fold(T::one(), |p, ak| p * ak);
    for k in 2..=m {
        denom = denom * T::from_count(k);
    }
    (acc / denom).max(T::zero()).min(T::one())
}
