//! Domains, distances and quasi-uniform point designs.
//!
//! Two domains are supported: the unit sphere S² embedded in R³ and the open
//! interval (0, π) carrying Dirichlet boundary conditions. Distances on the
//! sphere are great-circle (geodesic) distances; the restricted Euclidean
//! kernels additionally use the chordal distance in the ambient space.

use std::f64::consts::PI;
use std::sync::OnceLock;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Tolerance on `|‖x‖ − 1|` for sphere coordinates.
pub const UNIT_NORM_TOL: f64 = 1e-12;

/// Two points closer than this (in the domain metric) count as duplicates.
pub const DUPLICATE_TOL: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("points live on different domains ({0:?} vs {1:?})")]
    DomainMismatch(Domain, Domain),
    #[error("sphere coordinates must have unit norm, got norm {0}")]
    NotUnit(f64),
    #[error("interval coordinate {0} is not inside (0, pi)")]
    OutsideInterval(f64),
    #[error("invalid argument: {0}")]
    Argument(String),
    #[error("points {0} and {1} coincide")]
    DuplicatePoints(usize, usize),
    #[error("degenerate design: {0}")]
    DegenerateDesign(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Domain {
    Sphere,
    Interval,
}

impl Domain {
    /// Intrinsic dimension `d`.
    pub fn dim(self) -> usize {
        match self {
            Domain::Sphere => 2,
            Domain::Interval => 1,
        }
    }

    /// Dimension of the ambient Euclidean space the domain is embedded in.
    pub fn ambient_dim(self) -> usize {
        match self {
            Domain::Sphere => 3,
            Domain::Interval => 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum DomainPoint {
    Sphere([f64; 3]),
    Interval(f64),
}

impl DomainPoint {
    /// A sphere point from a vector that must already have unit norm.
    pub fn sphere(v: [f64; 3]) -> Result<Self, GeometryError> {
        let norm = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
        if !norm.is_finite() || (norm - 1.0).abs() > UNIT_NORM_TOL {
            return Err(GeometryError::NotUnit(norm));
        }
        Ok(DomainPoint::Sphere(v))
    }

    /// Sphere point from colatitude `theta ∈ [0, π]` and longitude `phi`.
    pub fn from_spherical(theta: f64, phi: f64) -> Self {
        let st = theta.sin();
        DomainPoint::Sphere([st * phi.cos(), st * phi.sin(), theta.cos()])
    }

    /// Sphere point obtained by normalizing an arbitrary nonzero vector.
    pub fn normalized(v: [f64; 3]) -> Result<Self, GeometryError> {
        let norm = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
        if !(norm > 0.0 && norm.is_finite()) {
            return Err(GeometryError::NotUnit(norm));
        }
        Ok(DomainPoint::Sphere([v[0] / norm, v[1] / norm, v[2] / norm]))
    }

    pub fn interval(x: f64) -> Result<Self, GeometryError> {
        if !(x > 0.0 && x < PI) {
            return Err(GeometryError::OutsideInterval(x));
        }
        Ok(DomainPoint::Interval(x))
    }

    pub fn domain(&self) -> Domain {
        match self {
            DomainPoint::Sphere(_) => Domain::Sphere,
            DomainPoint::Interval(_) => Domain::Interval,
        }
    }

    /// Unit vector of a sphere point; panics on interval points.
    pub fn unit_vector(&self) -> [f64; 3] {
        match self {
            DomainPoint::Sphere(v) => *v,
            DomainPoint::Interval(_) => panic!("unit_vector called on an interval point"),
        }
    }

    /// Colatitude and longitude of a sphere point.
    pub fn spherical_angles(&self) -> (f64, f64) {
        let [x, y, z] = self.unit_vector();
        (z.clamp(-1.0, 1.0).acos(), y.atan2(x))
    }
}

fn dot(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

/// Cosine of the angle between two sphere points, clamped to [−1, 1].
pub fn cos_angle(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    dot(a, b).clamp(-1.0, 1.0)
}

/// Great-circle distance on the sphere, absolute difference on the interval.
pub fn geodesic_distance(a: &DomainPoint, b: &DomainPoint) -> Result<f64, GeometryError> {
    match (a, b) {
        (DomainPoint::Sphere(x), DomainPoint::Sphere(y)) => Ok(sphere_distance(x, y)),
        (DomainPoint::Interval(x), DomainPoint::Interval(y)) => Ok((x - y).abs()),
        _ => Err(GeometryError::DomainMismatch(a.domain(), b.domain())),
    }
}

/// Euclidean distance in the ambient space.
pub fn chordal_distance(a: &DomainPoint, b: &DomainPoint) -> Result<f64, GeometryError> {
    match (a, b) {
        (DomainPoint::Sphere(x), DomainPoint::Sphere(y)) => {
            let d = [x[0] - y[0], x[1] - y[1], x[2] - y[2]];
            Ok(dot(&d, &d).sqrt())
        }
        (DomainPoint::Interval(x), DomainPoint::Interval(y)) => Ok((x - y).abs()),
        _ => Err(GeometryError::DomainMismatch(a.domain(), b.domain())),
    }
}

fn sphere_distance(x: &[f64; 3], y: &[f64; 3]) -> f64 {
    // atan2 form is accurate for nearly coincident and nearly antipodal pairs;
    // it agrees with the clamped arccos everywhere else.
    let c = [
        x[1] * y[2] - x[2] * y[1],
        x[2] * y[0] - x[0] * y[2],
        x[0] * y[1] - x[1] * y[0],
    ];
    dot(&c, &c).sqrt().atan2(cos_angle(x, y))
}

/// Fill distance, separation radius and mesh ratio of a design.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DesignDiagnostics {
    pub fill_distance: f64,
    pub separation_radius: f64,
    pub mesh_ratio: f64,
}

/// An ordered set of pairwise distinct points on one domain.
#[derive(Debug)]
pub struct PointSet {
    domain: Domain,
    points: Vec<DomainPoint>,
    separation: OnceLock<Option<f64>>,
}

impl Clone for PointSet {
    fn clone(&self) -> Self {
        PointSet {
            domain: self.domain,
            points: self.points.clone(),
            separation: self.separation.clone(),
        }
    }
}

impl PointSet {
    /// Validates that all points share `domain` and are pairwise distinct.
    pub fn new(domain: Domain, points: Vec<DomainPoint>) -> Result<Self, GeometryError> {
        for p in &points {
            if p.domain() != domain {
                return Err(GeometryError::DomainMismatch(domain, p.domain()));
            }
        }
        for i in 0..points.len() {
            for j in (i + 1)..points.len() {
                if geodesic_distance(&points[i], &points[j])? <= DUPLICATE_TOL {
                    return Err(GeometryError::DuplicatePoints(i, j));
                }
            }
        }
        Ok(PointSet {
            domain,
            points,
            separation: OnceLock::new(),
        })
    }

    pub fn empty(domain: Domain) -> Self {
        PointSet {
            domain,
            points: Vec::new(),
            separation: OnceLock::new(),
        }
    }

    pub fn domain(&self) -> Domain {
        self.domain
    }

    pub fn dim(&self) -> usize {
        self.domain.dim()
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[DomainPoint] {
        &self.points
    }

    pub fn get(&self, i: usize) -> &DomainPoint {
        &self.points[i]
    }

    /// The first `k` points as a new design.
    pub fn prefix(&self, k: usize) -> PointSet {
        PointSet {
            domain: self.domain,
            points: self.points[..k].to_vec(),
            separation: OnceLock::new(),
        }
    }

    /// A copy with one extra point appended (checked for duplicates).
    pub fn with_point(&self, p: DomainPoint) -> Result<PointSet, GeometryError> {
        if p.domain() != self.domain {
            return Err(GeometryError::DomainMismatch(self.domain, p.domain()));
        }
        for (i, q) in self.points.iter().enumerate() {
            if geodesic_distance(&p, q)? <= DUPLICATE_TOL {
                return Err(GeometryError::DuplicatePoints(i, self.points.len()));
            }
        }
        let mut points = self.points.clone();
        points.push(p);
        Ok(PointSet {
            domain: self.domain,
            points,
            separation: OnceLock::new(),
        })
    }

    /// Exact separation radius. On the interval the distance to the boundary
    /// is included, i.e. this is `min(q_x, dist(x, ∂M))`.
    pub fn separation_radius(&self) -> Result<f64, GeometryError> {
        let cached = self.separation.get_or_init(|| self.compute_separation());
        cached.ok_or_else(|| {
            GeometryError::DegenerateDesign(format!(
                "separation radius needs at least two points, got {}",
                self.len()
            ))
        })
    }

    fn compute_separation(&self) -> Option<f64> {
        if self.points.len() < 2 {
            return None;
        }
        let mut min = f64::INFINITY;
        for i in 0..self.points.len() {
            for j in (i + 1)..self.points.len() {
                let d = geodesic_distance(&self.points[i], &self.points[j]).unwrap();
                min = min.min(d);
            }
        }
        let mut q = 0.5 * min;
        if self.domain == Domain::Interval {
            for p in &self.points {
                if let DomainPoint::Interval(x) = p {
                    q = q.min(*x).min(PI - x);
                }
            }
        }
        Some(q)
    }

    /// Distance from `y` to the nearest design point.
    pub fn distance_to_design(&self, y: &DomainPoint) -> f64 {
        self.points
            .iter()
            .map(|p| geodesic_distance(p, y).unwrap_or(f64::INFINITY))
            .fold(f64::INFINITY, f64::min)
    }
}

fn round_half_up(x: f64) -> usize {
    (x + 0.5).floor().max(0.0) as usize
}

/// Latitude-band points of the regular placement construction for a target
/// count. Returns the natural count of the construction, which is close to
/// but generally not equal to `n_requested`.
pub fn deserno_points(n_requested: usize) -> Vec<DomainPoint> {
    if n_requested == 1 {
        return vec![DomainPoint::Sphere([0.0, 0.0, 1.0])];
    }
    let area = 4.0 * PI / n_requested as f64;
    let d = area.sqrt();
    let bands = round_half_up(PI / d).max(1);
    let d_theta = PI / bands as f64;
    let d_phi = area / d_theta;
    let mut out = Vec::with_capacity(n_requested + n_requested / 10 + 4);
    for m in 0..bands {
        let theta = PI * (m as f64 + 0.5) / bands as f64;
        let per_band = round_half_up(2.0 * PI * theta.sin() / d_phi);
        for k in 0..per_band {
            let phi = 2.0 * PI * k as f64 / per_band as f64;
            out.push(DomainPoint::from_spherical(theta, phi));
        }
    }
    out
}

/// Nearly equidistant sphere design from latitude bands of height
/// `≈ √(4π/n)` filled at spacing `≈ d_θ / sin θ`.
pub fn regular_placement_sphere(n_requested: usize) -> Result<PointSet, GeometryError> {
    if n_requested == 0 {
        return Err(GeometryError::Argument(
            "regular placement needs at least one point".into(),
        ));
    }
    let points = deserno_points(n_requested);
    // Band points are distinct by construction; skip the quadratic check.
    Ok(PointSet {
        domain: Domain::Sphere,
        points,
        separation: OnceLock::new(),
    })
}

/// Interior equispaced grid `x_i = π i / (n + 1)`, `i = 1..=n`.
pub fn uniform_grid_interval(n: usize) -> Result<PointSet, GeometryError> {
    if n == 0 {
        return Err(GeometryError::Argument(
            "interval grid needs at least one point".into(),
        ));
    }
    let points = (1..=n)
        .map(|i| DomainPoint::Interval(PI * i as f64 / (n + 1) as f64))
        .collect();
    Ok(PointSet {
        domain: Domain::Interval,
        points,
        separation: OnceLock::new(),
    })
}

/// Independent uniform points on the sphere. Exploration only; these designs
/// are not quasi-uniform.
pub fn random_sphere(n: usize, seed: u64) -> Result<PointSet, GeometryError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut points = Vec::with_capacity(n);
    while points.len() < n {
        let z: f64 = rng.random_range(-1.0..1.0);
        let phi: f64 = rng.random_range(0.0..2.0 * PI);
        let r = (1.0 - z * z).sqrt();
        points.push(DomainPoint::Sphere([r * phi.cos(), r * phi.sin(), z]));
    }
    PointSet::new(Domain::Sphere, points)
}

/// Dense candidate set used to approximate suprema over the domain: a finer
/// regular placement on the sphere, a closed uniform grid on the interval.
pub fn candidate_points(domain: Domain, resolution: usize) -> Vec<DomainPoint> {
    match domain {
        Domain::Sphere => deserno_points(resolution.max(2)),
        Domain::Interval => {
            let m = resolution.max(2);
            (0..m)
                .map(|k| DomainPoint::Interval(PI * k as f64 / (m - 1) as f64))
                .collect()
        }
    }
}

/// Pattern search maximizing the distance to the design, starting at `y`.
fn local_ascent(ps: &PointSet, y: &DomainPoint, d0: f64, step0: f64) -> f64 {
    let mut best = d0;
    let mut step = step0;
    match *y {
        DomainPoint::Sphere(v) => {
            let mut x = v;
            while step > 1e-9 {
                // tangent basis at x
                let a = if x[0].abs() < 0.9 { [1.0, 0.0, 0.0] } else { [0.0, 1.0, 0.0] };
                let mut e1 = [a[0] - dot(&a, &x) * x[0], a[1] - dot(&a, &x) * x[1], a[2] - dot(&a, &x) * x[2]];
                let n1 = dot(&e1, &e1).sqrt();
                e1 = [e1[0] / n1, e1[1] / n1, e1[2] / n1];
                let e2 = [
                    x[1] * e1[2] - x[2] * e1[1],
                    x[2] * e1[0] - x[0] * e1[2],
                    x[0] * e1[1] - x[1] * e1[0],
                ];
                let mut moved = false;
                for (dir, sgn) in [(e1, 1.0), (e1, -1.0), (e2, 1.0), (e2, -1.0)] {
                    let c = [x[0] + sgn * step * dir[0], x[1] + sgn * step * dir[1], x[2] + sgn * step * dir[2]];
                    if let Ok(p) = DomainPoint::normalized(c) {
                        let d = ps.distance_to_design(&p);
                        if d > best {
                            best = d;
                            x = p.unit_vector();
                            moved = true;
                            break;
                        }
                    }
                }
                if !moved {
                    step *= 0.5;
                }
            }
        }
        DomainPoint::Interval(v) => {
            let mut x = v;
            while step > 1e-12 {
                let mut moved = false;
                for c in [(x + step).min(PI), (x - step).max(0.0)] {
                    let d = ps.distance_to_design(&DomainPoint::Interval(c));
                    if d > best {
                        best = d;
                        x = c;
                        moved = true;
                        break;
                    }
                }
                if !moved {
                    step *= 0.5;
                }
            }
        }
    }
    best
}

/// Fill distance (approximated from below over a candidate set of size
/// `candidate_resolution`), exact separation radius and their ratio.
pub fn design_diagnostics(
    ps: &PointSet,
    candidate_resolution: usize,
) -> Result<DesignDiagnostics, GeometryError> {
    if ps.len() < 2 {
        return Err(GeometryError::DegenerateDesign(format!(
            "diagnostics need at least two points, got {}",
            ps.len()
        )));
    }
    if candidate_resolution < 10 * ps.len() {
        return Err(GeometryError::Argument(format!(
            "candidate resolution {} is below 10 x {} points",
            candidate_resolution,
            ps.len()
        )));
    }
    let q = ps.separation_radius()?;
    let candidates = candidate_points(ps.domain(), candidate_resolution);
    let mut scored: Vec<(f64, usize)> = candidates
        .iter()
        .enumerate()
        .map(|(k, y)| (ps.distance_to_design(y), k))
        .collect();
    scored.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
    // Local ascent from the most distant candidates sharpens the lower bound.
    let spacing = match ps.domain() {
        Domain::Sphere => (4.0 * PI / candidates.len() as f64).sqrt(),
        Domain::Interval => PI / (candidates.len() - 1) as f64,
    };
    let starts = (scored.len() / 20).max(8).min(scored.len());
    let mut h = scored[0].0;
    for &(d0, k) in &scored[..starts] {
        h = h.max(local_ascent(ps, &candidates[k], d0, spacing));
    }
    Ok(DesignDiagnostics {
        fill_distance: h,
        separation_radius: q,
        mesh_ratio: h / q,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn sp(v: [f64; 3]) -> DomainPoint {
        DomainPoint::sphere(v).unwrap()
    }

    #[test]
    fn distance_examples() {
        let a = sp([1.0, 0.0, 0.0]);
        let b = sp([0.0, 1.0, 0.0]);
        let c = sp([-1.0, 0.0, 0.0]);
        assert_abs_diff_eq!(geodesic_distance(&a, &b).unwrap(), PI / 2.0, epsilon = 1e-15);
        assert_eq!(geodesic_distance(&a, &a).unwrap(), 0.0);
        assert_abs_diff_eq!(geodesic_distance(&a, &c).unwrap(), PI, epsilon = 1e-15);
    }

    #[test]
    fn mismatched_domains_error() {
        let a = sp([1.0, 0.0, 0.0]);
        let b = DomainPoint::interval(1.0).unwrap();
        assert!(matches!(
            geodesic_distance(&a, &b),
            Err(GeometryError::DomainMismatch(..))
        ));
    }

    #[test]
    fn constructors_validate() {
        assert!(DomainPoint::sphere([1.0, 1.0, 0.0]).is_err());
        assert!(DomainPoint::interval(0.0).is_err());
        assert!(DomainPoint::interval(PI).is_err());
        let dup = vec![sp([0.0, 0.0, 1.0]), sp([0.0, 0.0, 1.0])];
        assert_eq!(
            PointSet::new(Domain::Sphere, dup).unwrap_err(),
            GeometryError::DuplicatePoints(0, 1)
        );
    }

    #[test]
    fn deserno_small_and_counts() {
        let one = regular_placement_sphere(1).unwrap();
        assert_eq!(one.len(), 1);
        assert_eq!(one.get(0), &DomainPoint::Sphere([0.0, 0.0, 1.0]));
        assert!(regular_placement_sphere(0).is_err());

        for n in [100usize, 400, 1000, 1600] {
            let ps = regular_placement_sphere(n).unwrap();
            let m = ps.len() as f64;
            assert!((m - n as f64).abs() <= 0.1 * n as f64, "n={n} m={m}");
            assert!(ps.separation_radius().unwrap() > 0.0);
        }
        // deterministic
        assert_eq!(deserno_points(321), deserno_points(321));
    }

    #[test]
    fn deserno_points_are_distinct() {
        let pts = deserno_points(500);
        assert!(PointSet::new(Domain::Sphere, pts).is_ok());
    }

    #[test]
    fn interval_grid() {
        let ps = uniform_grid_interval(1).unwrap();
        assert_eq!(ps.points(), &[DomainPoint::Interval(PI / 2.0)]);
        let ps = uniform_grid_interval(3).unwrap();
        let xs: Vec<f64> = ps
            .points()
            .iter()
            .map(|p| match p {
                DomainPoint::Interval(x) => *x,
                _ => unreachable!(),
            })
            .collect();
        assert_abs_diff_eq!(xs[0], PI / 4.0, epsilon = 1e-15);
        assert_abs_diff_eq!(xs[1], PI / 2.0, epsilon = 1e-15);
        assert_abs_diff_eq!(xs[2], 3.0 * PI / 4.0, epsilon = 1e-15);

        let ps = uniform_grid_interval(9).unwrap();
        assert_abs_diff_eq!(ps.separation_radius().unwrap(), PI / 20.0, epsilon = 1e-14);
        let diag = design_diagnostics(&ps, 1000).unwrap();
        assert_abs_diff_eq!(diag.fill_distance, PI / 10.0, epsilon = 1e-12);
        assert!(diag.mesh_ratio <= 2.0 + 1e-9);
        assert!(uniform_grid_interval(0).is_err());
    }

    #[test]
    fn antipodal_pair_diagnostics() {
        let ps = PointSet::new(
            Domain::Sphere,
            vec![sp([0.0, 0.0, 1.0]), sp([0.0, 0.0, -1.0])],
        )
        .unwrap();
        assert_abs_diff_eq!(ps.separation_radius().unwrap(), PI / 2.0, epsilon = 1e-15);
        let diag = design_diagnostics(&ps, 2000).unwrap();
        assert!(diag.fill_distance <= PI / 2.0 + 1e-12);
        assert!(diag.fill_distance > PI / 2.0 - 0.05, "h={}", diag.fill_distance);
    }

    #[test]
    fn single_point_is_degenerate() {
        let ps = regular_placement_sphere(1).unwrap();
        assert!(matches!(
            design_diagnostics(&ps, 100),
            Err(GeometryError::DegenerateDesign(_))
        ));
    }

    #[test]
    fn fill_distance_refinement_is_stable() {
        let ps = regular_placement_sphere(100).unwrap();
        let coarse = design_diagnostics(&ps, 10 * ps.len()).unwrap().fill_distance;
        let fine = design_diagnostics(&ps, 40 * ps.len()).unwrap().fill_distance;
        assert!(fine <= 1.05 * coarse && coarse <= 1.05 * fine, "{coarse} {fine}");
    }

    fn arb_sphere() -> impl Strategy<Value = DomainPoint> {
        (-1.0f64..1.0, 0.0f64..(2.0 * PI)).prop_map(|(z, phi)| {
            let r = (1.0 - z * z).sqrt();
            DomainPoint::normalized([r * phi.cos(), r * phi.sin(), z]).unwrap()
        })
    }

    proptest! {
        #[test]
        fn triangle_inequality(a in arb_sphere(), b in arb_sphere(), c in arb_sphere()) {
            let ab = geodesic_distance(&a, &b).unwrap();
            let bc = geodesic_distance(&b, &c).unwrap();
            let ac = geodesic_distance(&a, &c).unwrap();
            prop_assert!(ac <= ab + bc + 1e-10);
            prop_assert!((ab - geodesic_distance(&b, &a).unwrap()).abs() < 1e-15);
            prop_assert!(ab <= PI + 1e-15);
        }
    }
}
