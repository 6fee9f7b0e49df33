//! Eigenpairs of −Δ on the sphere and the Dirichlet interval.
//!
//! Real spherical harmonics are built from fully normalized associated
//! Legendre functions, so no intermediate quantity overflows at high degree.
//! The convention is fixed as follows: `Y_{l0} = P̄_l^0`,
//! `Y_{lm} = √2 P̄_l^m cos(mφ)` for `m > 0` and
//! `Y_{l,-m} = √2 P̄_l^m sin(mφ)`, without a Condon–Shortley phase. Every
//! downstream quantity only uses sums over `m`, which are convention-free.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{Domain, DomainPoint};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpectralError {
    #[error("argument {0} outside [-1, 1]")]
    OutOfRange(f64),
    #[error("order |m| = {m} exceeds degree {l}")]
    OrderExceedsDegree { l: usize, m: i64 },
    #[error("invalid argument: {0}")]
    Argument(String),
}

/// Legendre polynomial `P_l(t)` by the three-term recurrence.
pub fn legendre_p(l: usize, t: f64) -> Result<f64, SpectralError> {
    if !(-1.0..=1.0).contains(&t) {
        return Err(SpectralError::OutOfRange(t));
    }
    let (mut prev, mut cur) = (1.0, t);
    if l == 0 {
        return Ok(1.0);
    }
    for k in 1..l {
        let kf = k as f64;
        let next = ((2.0 * kf + 1.0) * t * cur - kf * prev) / (kf + 1.0);
        prev = cur;
        cur = next;
    }
    Ok(cur)
}

/// `P_0(t), …, P_L(t)` in one pass.
pub fn legendre_table(max_degree: usize, t: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(max_degree + 1);
    out.push(1.0);
    if max_degree == 0 {
        return out;
    }
    out.push(t);
    for k in 1..max_degree {
        let kf = k as f64;
        let next = ((2.0 * kf + 1.0) * t * out[k] - kf * out[k - 1]) / (kf + 1.0);
        out.push(next);
    }
    out
}

/// Position of `(l, m)` in the basis order used throughout the crate:
/// increasing `l`, then `m = −l, …, l`.
#[inline]
pub fn sh_index(l: usize, m: i64) -> usize {
    (l * l) as usize + (l as i64 + m) as usize
}

/// Evaluates every real spherical harmonic of degree `≤ max_degree` at the
/// sphere point with colatitude `theta` and longitude `phi`, writing them in
/// basis order into `out` (length `(L+1)²`).
pub fn real_spherical_harmonics_into(max_degree: usize, theta: f64, phi: f64, out: &mut [f64]) {
    let lmax = max_degree;
    assert_eq!(out.len(), (lmax + 1) * (lmax + 1));
    let (st, ct) = theta.sin_cos();
    let st = st.abs();
    let sqrt2 = std::f64::consts::SQRT_2;

    // Column m of the normalized associated Legendre table, m = 0..=L.
    let mut pmm = (1.0 / (4.0 * PI)).sqrt();
    // cos(mφ), sin(mφ) by angle-addition recurrence.
    let (sp, cp) = phi.sin_cos();
    let (mut cm, mut sm) = (1.0f64, 0.0f64);
    for m in 0..=lmax {
        if m > 0 {
            let mf = m as f64;
            pmm *= ((2.0 * mf + 1.0) / (2.0 * mf)).sqrt() * st;
            let c2 = cm * cp - sm * sp;
            sm = sm * cp + cm * sp;
            cm = c2;
        }
        let mi = m as i64;
        let mut write = |l: usize, p: f64| {
            if m == 0 {
                out[sh_index(l, 0)] = p;
            } else {
                out[sh_index(l, mi)] = sqrt2 * p * cm;
                out[sh_index(l, -mi)] = sqrt2 * p * sm;
            }
        };
        write(m, pmm);
        if m == lmax {
            break;
        }
        let mf = m as f64;
        let mut p_lm2 = pmm;
        let mut p_lm1 = (2.0 * mf + 3.0).sqrt() * ct * pmm;
        write(m + 1, p_lm1);
        for l in (m + 2)..=lmax {
            let lf = l as f64;
            let a = ((4.0 * lf * lf - 1.0) / (lf * lf - mf * mf)).sqrt();
            let b = (((lf - 1.0).powi(2) - mf * mf) / (4.0 * (lf - 1.0).powi(2) - 1.0)).sqrt();
            let p = a * (ct * p_lm1 - b * p_lm2);
            write(l, p);
            p_lm2 = p_lm1;
            p_lm1 = p;
        }
    }
}

/// All real spherical harmonics through `max_degree` at a sphere point.
pub fn real_spherical_harmonics(max_degree: usize, x: &DomainPoint) -> Vec<f64> {
    let (theta, phi) = x.spherical_angles();
    let mut out = vec![0.0; (max_degree + 1) * (max_degree + 1)];
    real_spherical_harmonics_into(max_degree, theta, phi, &mut out);
    out
}

/// A single real spherical harmonic `Y_{lm}`.
pub fn real_spherical_harmonic(l: usize, m: i64, x: &DomainPoint) -> Result<f64, SpectralError> {
    if m.unsigned_abs() as usize > l {
        return Err(SpectralError::OrderExceedsDegree { l, m });
    }
    if x.domain() != Domain::Sphere {
        return Err(SpectralError::Argument(
            "spherical harmonics need a sphere point".into(),
        ));
    }
    Ok(real_spherical_harmonics(l, x)[sh_index(l, m)])
}

/// Dirichlet eigenfunction `√(2/π) sin(i x)` on (0, π), eigenvalue `i²`.
pub fn interval_eigenfunction(i: usize, x: f64) -> Result<f64, SpectralError> {
    if i == 0 {
        return Err(SpectralError::Argument(
            "Dirichlet eigenfunctions are indexed from 1".into(),
        ));
    }
    Ok((2.0 / PI).sqrt() * (i as f64 * x).sin())
}

/// Ordered eigenvalues (with multiplicity) of −Δ for one of the supported
/// settings. Indices are 1-based as in `λ_1 ≤ λ_2 ≤ …`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum EigenSystem {
    /// `λ = l(l+1)` with multiplicity `2l+1`, `l = 0..=max_degree`.
    Sphere { max_degree: usize },
    /// Dirichlet Laplacian on (0, π): `λ_i = i²`, `i = 1..=modes`.
    Interval { modes: usize },
    /// Weyl-exact synthetic sequence `λ_i = i^{2/d}` for dimensions with no
    /// implemented manifold.
    Synthetic { dim: usize, len: usize },
}

impl EigenSystem {
    /// Sphere system holding at least `count` eigenvalues.
    pub fn sphere_with_count(count: usize) -> Self {
        let mut l = 0;
        while (l + 1) * (l + 1) < count {
            l += 1;
        }
        EigenSystem::Sphere { max_degree: l }
    }

    pub fn dim(&self) -> usize {
        match self {
            EigenSystem::Sphere { .. } => 2,
            EigenSystem::Interval { .. } => 1,
            EigenSystem::Synthetic { dim, .. } => *dim,
        }
    }

    pub fn len(&self) -> usize {
        match self {
            EigenSystem::Sphere { max_degree } => (max_degree + 1) * (max_degree + 1),
            EigenSystem::Interval { modes } => *modes,
            EigenSystem::Synthetic { len, .. } => *len,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// `(l, m)` of the 1-based sphere index `i`.
    pub fn degree_order(i: usize) -> (usize, i64) {
        let j = i - 1;
        let l = (j as f64).sqrt() as usize;
        let l = if (l + 1) * (l + 1) <= j { l + 1 } else if l * l > j { l - 1 } else { l };
        (l, j as i64 - (l * l + l) as i64)
    }

    /// Eigenvalue `λ_i` for the 1-based index `i`.
    pub fn eigenvalue(&self, i: usize) -> f64 {
        assert!(i >= 1, "eigenvalues are 1-indexed");
        match self {
            EigenSystem::Sphere { .. } => {
                let (l, _) = Self::degree_order(i);
                (l * (l + 1)) as f64
            }
            EigenSystem::Interval { .. } => (i * i) as f64,
            EigenSystem::Synthetic { dim, .. } => (i as f64).powf(2.0 / *dim as f64),
        }
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        (1..=self.len()).map(|i| self.eigenvalue(i)).collect()
    }
}

/// Empirical Weyl constants: min and max of `(1+λ_i)/i^{2/d}` over
/// `2 ≤ i ≤ count`.
pub fn weyl_check(es: &EigenSystem, count: usize) -> Result<(f64, f64), SpectralError> {
    if count < 10 {
        return Err(SpectralError::Argument(format!(
            "Weyl check needs at least 10 eigenvalues, got {count}"
        )));
    }
    if count > es.len() {
        return Err(SpectralError::Argument(format!(
            "eigensystem has only {} eigenvalues",
            es.len()
        )));
    }
    let p = 2.0 / es.dim() as f64;
    let mut lo = f64::INFINITY;
    let mut hi = 0.0f64;
    for i in 2..=count {
        let r = (1.0 + es.eigenvalue(i)) / (i as f64).powf(p);
        lo = lo.min(r);
        hi = hi.max(r);
    }
    Ok((lo, hi))
}
