//! Special functions and the sharp constants of the affine functional
//! inequalities.

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::scalar::{lit, Real};

const LANCZOS_G: f64 = 7.0;
const LANCZOS_COEFFS: [f64; 9] = [
    0.999_999_999_999_809_9,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];

/// Gamma function for `0 < x <= 170`: factorial products at integers and
/// half-integers up to 40, Lanczos (g = 7, nine terms) elsewhere.
pub fn gamma_fn<T: Real>(x: T) -> Result<T> {
    if !(x > T::zero()) || x > lit(170.0) {
        return Err(domain("gamma_fn", format!("argument {x} outside (0, 170]")));
    }
    let twice = x + x;
    if twice == twice.round() && x <= lit(40.0) {
        // Γ(k) = (k-1)!, Γ(k + 1/2) = √π · (1/2)(3/2)···(k - 1/2)
        let (mut acc, mut y) = if twice.as_f64() as u64 % 2 == 0 {
            (T::one(), T::one())
        } else {
            (T::PI().sqrt(), lit(0.5))
        };
        while y < x {
            acc = acc * y;
            y = y + T::one();
        }
        return Ok(acc);
    }
    Ok(lanczos(x))
}

fn lanczos<T: Real>(x: T) -> T {
    if x < lit(0.5) {
        // Γ(x) = Γ(x + 1) / x keeps the series argument in its accurate range.
        return lanczos(x + T::one()) / x;
    }
    let z = x - T::one();
    let mut series = lit::<T>(LANCZOS_COEFFS[0]);
    for (i, &c) in LANCZOS_COEFFS.iter().enumerate().skip(1) {
        series = series + lit::<T>(c) / (z + T::from_count(i));
    }
    let t = z + lit(LANCZOS_G + 0.5);
    // split the power so that t^(z + 1/2) never overflows before e^{-t} is applied
    let half_pow = t.powf((z + lit(0.5)) / lit(2.0));
    let sqrt_two_pi: T = (lit::<T>(2.0) * T::PI()).sqrt();
    sqrt_two_pi * half_pow * (half_pow * (-t).exp()) * series
}

/// Volume of the unit ball extended to a real index: `π^{p/2} / Γ(1 + p/2)`.
pub fn unit_ball_volume<T: Real>(p: T) -> Result<T> {
    if !(p >= T::zero()) {
        return Err(domain("unit_ball_volume", format!("index {p} < 0")));
    }
    let half = p / lit(2.0);
    Ok(T::PI().powf(half) / gamma_fn(T::one() + half)?)
}

/// Bessel function of the first kind of order 0 or 1 on `[0, 50]`.
///
/// Power series up to `x = 12`, Hankel asymptotic expansion above; both
/// branches are accurate to about 1e-13 absolute.
pub fn bessel_j<T: Real>(order: u32, x: T) -> Result<T> {
    if order > 1 {
        return Err(domain("bessel_j", format!("order {order} not in {{0, 1}}")));
    }
    if !(x >= T::zero()) || x > lit(50.0) {
        return Err(domain("bessel_j", format!("argument {x} outside [0, 50]")));
    }
    if x <= lit(12.0) {
        Ok(bessel_series(order, x))
    } else {
        Ok(bessel_hankel(order, x))
    }
}

fn bessel_series<T: Real>(order: u32, x: T) -> T {
    let half = x / lit(2.0);
    let mut term = if order == 0 { T::one() } else { half };
    let mut sum = term;
    let q = half * half;
    for k in 1..200usize {
        let kk = T::from_count(k);
        term = -term * q / (kk * (kk + T::from_count(order as usize)));
        sum = sum + term;
        if term.abs() < lit::<T>(1e-17) * sum.abs().max(T::one()) && kk > half {
            break;
        }
    }
    sum
}

fn bessel_hankel<T: Real>(order: u32, x: T) -> T {
    let mu = lit::<T>(4.0 * f64::from(order * order));
    let eight_x = lit::<T>(8.0) * x;
    let mut p = T::one();
    let mut q = T::zero();
    let mut term = T::one();
    let mut last = T::infinity();
    for k in 1..60usize {
        let odd = T::from_count(2 * k - 1);
        term = term * (mu - odd * odd) / (T::from_count(k) * eight_x);
        if term.abs() > last {
            break;
        }
        last = term.abs();
        // terms alternate between Q (odd k) and P (even k) with signs + - - + + ...
        match k % 4 {
            1 => q = q + term,
            2 => p = p - term,
            3 => q = q - term,
            _ => p = p + term,
        }
        if last < lit(1e-17) {
            break;
        }
    }
    let chi = x - (lit::<T>(f64::from(order)) / lit(2.0) + lit(0.25)) * T::PI();
    (lit::<T>(2.0) / (T::PI() * x)).sqrt() * (p * chi.cos() - q * chi.sin())
}

/// First nonzero Neumann eigenvalue of `-Δ` on radial functions on the unit
/// ball, for `n ∈ {2, 3}`.
pub fn neumann_radial_eigenvalue<T: Real>(n: usize) -> Result<T> {
    let root = match n {
        // u = J_0(kr), u'(1) = -k J_1(k) = 0
        2 => bisect(|x| bessel_series(1, x), lit(3.0), lit(4.5)),
        // u = sin(kr)/(kr), u'(1) = 0 <=> tan k = k <=> sin k - k cos k = 0
        3 => bisect(|x: T| x.sin() - x * x.cos(), T::PI(), lit(1.5 * std::f64::consts::PI)),
        _ => {
            return Err(Error::UnsupportedDimension {
                op: "neumann_radial_eigenvalue",
                dim: n,
            })
        }
    };
    Ok(root * root)
}

fn bisect<T: Real>(f: impl Fn(T) -> T, mut lo: T, mut hi: T) -> T {
    let mut flo = f(lo);
    for _ in 0..200 {
        let mid = (lo + hi) / lit(2.0);
        if mid <= lo || mid >= hi {
            break;
        }
        let fm = f(mid);
        if (fm > T::zero()) == (flo > T::zero()) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    (lo + hi) / lit(2.0)
}

/// Which sharp constant to evaluate.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConstantKind {
    /// Normalisation `c_{n,p}` of the affine energies.
    CNp,
    /// `e_{n,p} = κ_{n+p-2} / (n^{p/n} κ_n κ_{p-1})`.
    ENp,
    /// Sharp `L^p` Sobolev constant `a_{n,p}`.
    ASobolev,
    /// Sharp `L^p` logarithmic Sobolev constant `b_{n,p}`.
    BLogsob,
    /// Sharp Morrey–Sobolev constant `α_{n,p}`.
    AlphaMorrey,
    /// Sharp Nash constant `β_n`.
    BetaNash,
    /// Sharp Gagliardo–Nirenberg constant `γ_{n,p,q}`.
    GammaGn,
    /// Gagliardo–Nirenberg interpolation exponent θ.
    ThetaGn,
    /// Gagliardo–Nirenberg Lebesgue exponent r.
    RGn,
    /// Unit ball volume `κ_n`.
    Kappa,
}

impl ConstantKind {
    pub const ALL: [ConstantKind; 10] = [
        ConstantKind::CNp,
        ConstantKind::ENp,
        ConstantKind::ASobolev,
        ConstantKind::BLogsob,
        ConstantKind::AlphaMorrey,
        ConstantKind::BetaNash,
        ConstantKind::GammaGn,
        ConstantKind::ThetaGn,
        ConstantKind::RGn,
        ConstantKind::Kappa,
    ];

    pub fn tag(self) -> &'static str {
        match self {
            ConstantKind::CNp => "c_np",
            ConstantKind::ENp => "e_np",
            ConstantKind::ASobolev => "a_sobolev",
            ConstantKind::BLogsob => "b_logsob",
            ConstantKind::AlphaMorrey => "alpha_morrey",
            ConstantKind::BetaNash => "beta_nash",
            ConstantKind::GammaGn => "gamma_gn",
            ConstantKind::ThetaGn => "theta_gn",
            ConstantKind::RGn => "r_gn",
            ConstantKind::Kappa => "kappa",
        }
    }

    pub fn from_tag(tag: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.tag() == tag)
    }
}

/// A request for one sharp constant.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ConstantQuery<T> {
    pub kind: ConstantKind,
    pub n: usize,
    pub p: Option<T>,
    pub q: Option<T>,
}

impl<T: Real> ConstantQuery<T> {
    pub fn new(kind: ConstantKind, n: usize) -> Self {
        Self {
            kind,
            n,
            p: None,
            q: None,
        }
    }

    pub fn with_p(mut self, p: T) -> Self {
        self.p = Some(p);
        self
    }

    pub fn with_q(mut self, q: T) -> Self {
        self.q = Some(q);
        self
    }
}

/// Evaluates the closed form of the requested constant.
pub fn sharp_constant<T: Real>(query: &ConstantQuery<T>) -> Result<T> {
    let n = query.n;
    if n < 2 {
        return Err(domain("sharp_constant", format!("dimension {n} < 2")));
    }
    let p = || query.p.ok_or(Error::MissingParameter("p"));
    let q = || query.q.ok_or(Error::MissingParameter("q"));
    match query.kind {
        ConstantKind::Kappa => unit_ball_volume(T::from_count(n)),
        ConstantKind::CNp => c_np(n, p()?),
        ConstantKind::ENp => e_np(n, p()?),
        ConstantKind::ASobolev => a_sobolev(n, p()?),
        ConstantKind::BLogsob => b_logsob(n, p()?),
        ConstantKind::AlphaMorrey => alpha_morrey(n, p()?),
        ConstantKind::BetaNash => beta_nash(n),
        ConstantKind::GammaGn => Ok(gn_exponents(n, p()?, q()?)?.gamma),
        ConstantKind::ThetaGn => Ok(gn_exponents(n, p()?, q()?)?.theta),
        ConstantKind::RGn => Ok(gn_exponents(n, p()?, q()?)?.r),
    }
}

fn require(op: &'static str, ok: bool, detail: impl FnOnce() -> String) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(domain(op, detail()))
    }
}

/// `c_{n,p} = (nκ_n)^{1/n} (nκ_nκ_{p-1} / (2κ_{n+p-2}))^{1/p}`, `p >= 1`.
pub fn c_np<T: Real>(n: usize, p: T) -> Result<T> {
    require("c_np", p >= T::one(), || format!("p = {p} < 1"))?;
    let nn = T::from_count(n);
    let kn = unit_ball_volume(nn)?;
    let kp1 = unit_ball_volume(p - T::one())?;
    let knp2 = unit_ball_volume(nn + p - lit(2.0))?;
    Ok((nn * kn).powf(T::one() / nn) * (nn * kn * kp1 / (lit::<T>(2.0) * knp2)).powf(T::one() / p))
}

/// `e_{n,p} = κ_{n+p-2} / (n^{p/n} κ_n κ_{p-1})`, `p >= 1`.
pub fn e_np<T: Real>(n: usize, p: T) -> Result<T> {
    require("e_np", p >= T::one(), || format!("p = {p} < 1"))?;
    let nn = T::from_count(n);
    Ok(unit_ball_volume(nn + p - lit(2.0))?
        / (nn.powf(p / nn) * unit_ball_volume(nn)? * unit_ball_volume(p - T::one())?))
}

/// Sharp Sobolev constant `a_{n,p}` for `1 <= p < n`.
pub fn a_sobolev<T: Real>(n: usize, p: T) -> Result<T> {
    let nn = T::from_count(n);
    require("a_sobolev", p >= T::one() && p < nn, || format!("need 1 <= p < n, got p = {p}, n = {n}"))?;
    let kn = unit_ball_volume(nn)?;
    if p == T::one() {
        // limit of the closed form: the isoperimetric constant
        return Ok(T::one() / (nn * kn.powf(T::one() / nn)));
    }
    let gammas = gamma_fn(nn)? / (kn * gamma_fn(nn / p)? * gamma_fn(nn + T::one() - nn / p)?);
    Ok(nn.powf(-T::one() / p)
        * ((p - T::one()) / (nn - p)).powf(T::one() - T::one() / p)
        * gammas.powf(T::one() / nn))
}

/// Sharp log-Sobolev constant `b_{n,p}` for `p >= 1`; `p = 1` is the analytic
/// limit `n^{-1} κ_n^{-1/n}`.
pub fn b_logsob<T: Real>(n: usize, p: T) -> Result<T> {
    require("b_logsob", p >= T::one(), || format!("p = {p} < 1"))?;
    let nn = T::from_count(n);
    if p == T::one() {
        return Ok(T::one() / (nn * unit_ball_volume(nn)?.powf(T::one() / nn)));
    }
    let half_n = nn / lit(2.0);
    let gammas = gamma_fn(T::one() + half_n)?
        / (T::PI().powf(half_n) * gamma_fn(T::one() + nn * (p - T::one()) / p)?);
    Ok((p / nn).powf(T::one() / p)
        * ((p - T::one()) / T::E()).powf(T::one() - T::one() / p)
        * gammas.powf(T::one() / nn))
}

/// Sharp Morrey–Sobolev constant `α_{n,p}` for `p > n`.
pub fn alpha_morrey<T: Real>(n: usize, p: T) -> Result<T> {
    let nn = T::from_count(n);
    require("alpha_morrey", p > nn, || format!("need p > n, got p = {p}, n = {n}"))?;
    Ok(nn.powf(-T::one() / p)
        * unit_ball_volume(nn)?.powf(-T::one() / nn)
        * ((p - T::one()) / (p - nn)).powf((p - T::one()) / p))
}

/// Sharp Nash constant `β_n`, with the ball volume `κ_n` in the denominator.
pub fn beta_nash<T: Real>(n: usize) -> Result<T> {
    let lambda: T = neumann_radial_eigenvalue(n)?;
    let nn = T::from_count(n);
    let one_half_n = T::one() + nn / lit(2.0);
    let kn = unit_ball_volume(nn)?;
    let sq = lit::<T>(2.0) * one_half_n.powf(one_half_n) / (nn * lambda * kn.powf(lit::<T>(2.0) / nn));
    Ok(sq.sqrt())
}

/// Exponents and optimal constant of the sharp Gagliardo–Nirenberg family.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GnExponents<T> {
    pub r: T,
    pub theta: T,
    pub delta: T,
    pub gamma: T,
}

/// Upper end `p(n-1)/(n-p)` of the admissible `q` range.
pub fn gn_q_max<T: Real>(n: usize, p: T) -> T {
    let nn = T::from_count(n);
    p * (nn - T::one()) / (nn - p)
}

/// `r`, `θ`, `δ` and `γ_{n,p,q}` for `1 < p < n`, `p < q <= p(n-1)/(n-p)`.
pub fn gn_exponents<T: Real>(n: usize, p: T, q: T) -> Result<GnExponents<T>> {
    let nn = T::from_count(n);
    require("gamma_gn", p > T::one() && p < nn, || format!("need 1 < p < n, got p = {p}, n = {n}"))?;
    let q_max = gn_q_max(n, p);
    // allow rounding of a q computed as p(n-1)/(n-p) elsewhere
    let q_tol = q_max * lit(4.0) * T::epsilon();
    require("gamma_gn", q > p && q <= q_max + q_tol, || {
        format!("need p < q <= {q_max}, got q = {q}")
    })?;
    let one = T::one();
    let r = p * (q - one) / (p - one);
    let delta = nn * p - q * (nn - p);
    let theta = nn * (q - p) / ((q - one) * delta);
    let gammas = gamma_fn(q * (p - one) / (q - p))? * gamma_fn(one + nn / lit(2.0))?
        / (gamma_fn(delta * (p - one) / (p * (q - p)))? * gamma_fn(one + nn * (p - one) / p)?);
    let gamma = ((q - p) / (p * T::PI().sqrt())).powf(theta)
        * (p * q / (nn * (q - p))).powf(theta / p)
        * (delta / (p * q)).powf(one / r)
        * gammas.powf(theta / nn);
    Ok(GnExponents {
        r,
        theta,
        delta,
        gamma,
    })
}
