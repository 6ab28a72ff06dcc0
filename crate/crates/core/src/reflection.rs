//! Root systems, reflections, the generated finite group, the weight
//! function and orbit geometry.
//!
//! Roots are always stored normalised to `|α|² = 2`, so the reflection is
//! `σ_α(x) = x − ⟨x,α⟩α`. Catalogue systems additionally carry an exact
//! direction for every root (a vector over `Q(√D)` parallel to `α`), which
//! is what the exact polynomial machinery works with.

use std::collections::{HashMap, HashSet, VecDeque};
use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use num_rational::BigRational;
use serde::{Deserialize, Serialize};

use crate::error::ReflectionError;
use crate::polyalg::scalar::{simplest_ratio, QuadSurd, Scalar};

/// Tolerance used when matching reflected roots against the root list.
const MATCH_TOL: f64 = 1e-9;

/// A root normalised to squared length 2.
#[derive(Clone, Debug, PartialEq)]
pub struct Root(Vec<f64>);

impl Root {
    /// Rescales `v` to squared length 2.
    pub fn normalized(v: &[f64]) -> Option<Self> {
        let n2: f64 = v.iter().map(|c| c * c).sum();
        if !(n2 > 0.0) || !n2.is_finite() {
            return None;
        }
        let s = (2.0 / n2).sqrt();
        Some(Self(v.iter().map(|c| c * s).collect()))
    }

    pub fn components(&self) -> &[f64] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn dot(&self, x: &[f64]) -> f64 {
        self.0.iter().zip(x).map(|(a, b)| a * b).sum()
    }

    /// `σ_α(x) = x − ⟨x,α⟩α`.
    pub fn reflect(&self, x: &[f64]) -> Vec<f64> {
        let p = self.dot(x);
        x.iter().zip(&self.0).map(|(xi, ai)| xi - p * ai).collect()
    }

    /// The reflection as a `d×d` matrix `I − ααᵀ`.
    pub fn matrix(&self) -> DMatrix<f64> {
        let d = self.dim();
        DMatrix::from_fn(d, d, |i, j| if i == j { 1.0 } else { 0.0 } - self.0[i] * self.0[j])
    }
}

/// Free function form of [`Root::reflect`].
pub fn reflect(alpha: &Root, x: &[f64]) -> Vec<f64> {
    alpha.reflect(x)
}

/// Named root systems with known group orders.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Catalogue {
    /// `Z2^d`: the coordinate sign changes, one root per axis.
    Z2Power(usize),
    A2,
    B2,
    /// Dihedral system with `m` positive roots at angles `kπ/m`.
    Dihedral(u32),
}

impl Catalogue {
    pub fn dim(self) -> usize {
        match self {
            Catalogue::Z2Power(d) => d,
            _ => 2,
        }
    }

    pub fn group_order(self) -> usize {
        match self {
            Catalogue::Z2Power(d) => 1 << d,
            Catalogue::A2 => 6,
            Catalogue::B2 => 8,
            Catalogue::Dihedral(m) => 2 * m as usize,
        }
    }

    /// Root directions in floating point, unnormalised.
    fn float_directions(self) -> Vec<Vec<f64>> {
        match self {
            Catalogue::Z2Power(d) => (0..d).map(|j| unit(d, j)).collect(),
            Catalogue::A2 => Catalogue::Dihedral(3).float_directions(),
            Catalogue::B2 => Catalogue::Dihedral(4).float_directions(),
            Catalogue::Dihedral(m) => (0..m)
                .map(|k| {
                    let th = std::f64::consts::PI * k as f64 / m as f64;
                    vec![th.cos(), th.sin()]
                })
                .collect(),
        }
    }

    /// Exact directions over `Q(√D)` when they exist.
    fn exact_directions(self) -> Option<Vec<Vec<QuadSurd>>> {
        match self {
            Catalogue::Z2Power(d) => Some(
                (0..d)
                    .map(|j| (0..d).map(|i| if i == j { QuadSurd::one() } else { QuadSurd::zero() }).collect())
                    .collect(),
            ),
            Catalogue::A2 => Catalogue::Dihedral(3).exact_directions(),
            Catalogue::B2 => Catalogue::Dihedral(4).exact_directions(),
            Catalogue::Dihedral(m) => {
                if 360 % m != 0 {
                    return None;
                }
                (0..m)
                    .map(|k| {
                        let half_degrees = 360 * k / m;
                        if half_degrees == 180 {
                            Some(vec![QuadSurd::zero(), QuadSurd::one()])
                        } else {
                            exact_tan_half_degrees(half_degrees).map(|t| vec![QuadSurd::one(), t])
                        }
                    })
                    .collect()
            }
        }
    }
}

/// `tan` of an angle given in half-degrees, for the angles whose tangent
/// lies in `Q(√2)` or `Q(√3)`.
fn exact_tan_half_degrees(a: u32) -> Option<QuadSurd> {
    if a > 180 {
        return exact_tan_half_degrees(360 - a).map(|t| -t);
    }
    let r = QuadSurd::from_ratio;
    let s2 = QuadSurd::sqrt_of(2);
    let s3 = QuadSurd::sqrt_of(3);
    Some(match a {
        0 => r(0, 1),
        30 => r(2, 1) - s3,
        45 => s2 - r(1, 1),
        60 => s3 / r(3, 1),
        90 => r(1, 1),
        120 => s3,
        135 => s2 + r(1, 1),
        150 => r(2, 1) + s3,
        _ => return None,
    })
}

fn unit(d: usize, j: usize) -> Vec<f64> {
    let mut e = vec![0.0; d];
    e[j] = 1.0;
    e
}

impl fmt::Display for Catalogue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Catalogue::Z2Power(1) => write!(f, "z2"),
            Catalogue::Z2Power(d) => write!(f, "z2^{d}"),
            Catalogue::A2 => write!(f, "a2"),
            Catalogue::B2 => write!(f, "b2"),
            Catalogue::Dihedral(m) => write!(f, "i2({m})"),
        }
    }
}

impl FromStr for Catalogue {
    type Err = ReflectionError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let t = s.trim().to_ascii_lowercase();
        let bad = || ReflectionError::UnknownCatalogue(s.to_string());
        match t.as_str() {
            "z2" => Ok(Catalogue::Z2Power(1)),
            "a2" => Ok(Catalogue::A2),
            "b2" => Ok(Catalogue::B2),
            _ => {
                if let Some(d) = t.strip_prefix("z2^") {
                    let d: usize = d.parse().map_err(|_| bad())?;
                    if d == 0 {
                        return Err(bad());
                    }
                    Ok(Catalogue::Z2Power(d))
                } else if let Some(m) = t.strip_prefix("i2(").and_then(|r| r.strip_suffix(')')) {
                    let m: u32 = m.parse().map_err(|_| bad())?;
                    if m < 2 {
                        return Err(bad());
                    }
                    Ok(Catalogue::Dihedral(m))
                } else {
                    Err(bad())
                }
            }
        }
    }
}

/// Multiplicity values as written in a config: a single number, or a list
/// with one entry per orbit or per positive root.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MultiplicityValues {
    Uniform(f64),
    List(Vec<f64>),
}

impl MultiplicityValues {
    pub fn as_slice(&self) -> &[f64] {
        match self {
            MultiplicityValues::Uniform(k) => std::slice::from_ref(k),
            MultiplicityValues::List(v) => v,
        }
    }
}

/// The root-system block of a run configuration.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase", deny_unknown_fields)]
pub enum RootSystemConfig {
    Catalogue { name: String, multiplicity: MultiplicityValues },
    Explicit { roots: Vec<Vec<f64>>, multiplicity: MultiplicityValues },
}

impl RootSystemConfig {
    pub fn build(&self) -> Result<RootSystem, ReflectionError> {
        match self {
            RootSystemConfig::Catalogue { name, multiplicity } => {
                RootSystem::catalogue(name.parse()?, multiplicity.as_slice())
            }
            RootSystemConfig::Explicit { roots, multiplicity } => RootSystem::explicit(roots, multiplicity.as_slice()),
        }
    }
}

/// Exact data for the polynomial machinery: a direction parallel to each
/// positive root and the multiplicities as rationals.
#[derive(Clone, Debug, PartialEq)]
pub struct ExactRoots {
    pub directions: Vec<Vec<QuadSurd>>,
    pub multiplicities: Vec<BigRational>,
}

/// A reduced root system with a `G`-invariant multiplicity function.
#[derive(Clone, Debug, PartialEq)]
pub struct RootSystem {
    dim: usize,
    roots: Vec<Root>,
    multiplicity: Vec<f64>,
    orbit_of: Vec<usize>,
    catalogue: Option<Catalogue>,
    exact: Option<ExactRoots>,
    // roots as supplied, before normalisation
    source: Vec<Vec<f64>>,
}

impl RootSystem {
    /// A catalogued system. `kappa` holds one value, one per orbit, or one
    /// per positive root.
    pub fn catalogue(kind: Catalogue, kappa: &[f64]) -> Result<Self, ReflectionError> {
        let dirs = kind.float_directions();
        let mut rs = Self::assemble(kind.dim(), &dirs, kappa)?;
        rs.catalogue = Some(kind);
        rs.exact = kind.exact_directions().and_then(|d| exact_multiplicities(&rs.multiplicity).map(|m| ExactRoots {
            directions: d,
            multiplicities: m,
        }));
        Ok(rs)
    }

    /// `Z2^d` with per-axis multiplicities (a single value is broadcast).
    pub fn z2_power(dim: usize, kappa: &[f64]) -> Result<Self, ReflectionError> {
        Self::catalogue(Catalogue::Z2Power(dim), kappa)
    }

    /// An explicit list of positive roots. Roots of any length are rescaled
    /// to `|α|² = 2`. Exact arithmetic is used when every coordinate is a
    /// small rational.
    pub fn explicit(roots: &[Vec<f64>], kappa: &[f64]) -> Result<Self, ReflectionError> {
        let dim = roots.first().map(Vec::len).unwrap_or(0);
        let mut rs = Self::assemble(dim, roots, kappa)?;
        let dirs: Option<Vec<Vec<QuadSurd>>> = roots
            .iter()
            .map(|r| {
                r.iter()
                    .map(|&c| if c == 0.0 { Some(QuadSurd::zero()) } else { simplest_ratio(c, 10_000, 1e-13).map(QuadSurd::rational) })
                    .collect()
            })
            .collect();
        rs.exact = dirs.and_then(|d| exact_multiplicities(&rs.multiplicity).map(|m| ExactRoots {
            directions: d,
            multiplicities: m,
        }));
        Ok(rs)
    }

    fn assemble(dim: usize, dirs: &[Vec<f64>], kappa: &[f64]) -> Result<Self, ReflectionError> {
        let mut roots = Vec::with_capacity(dirs.len());
        for (i, v) in dirs.iter().enumerate() {
            if v.len() != dim {
                return Err(ReflectionError::RootDimension { index: i, expected: dim, found: v.len() });
            }
            roots.push(Root::normalized(v).ok_or(ReflectionError::ZeroRoot { index: i })?);
        }
        for i in 0..roots.len() {
            for j in i + 1..roots.len() {
                if (roots[i].dot(roots[j].components()).abs() - 2.0).abs() < MATCH_TOL {
                    return Err(ReflectionError::NotReduced { first: i, second: j });
                }
            }
        }
        let orbit_of = root_orbits(&roots)?;
        let n_orbits = orbit_of.iter().copied().max().map_or(0, |m| m + 1);
        let multiplicity: Vec<f64> = match kappa.len() {
            1 => vec![kappa[0]; roots.len()],
            n if n == n_orbits => orbit_of.iter().map(|&o| kappa[o]).collect(),
            n if n == roots.len() => kappa.to_vec(),
            n => {
                return Err(ReflectionError::MultiplicityCount {
                    expected: format!("1, {n_orbits} or {}", roots.len()),
                    found: n,
                })
            }
        };
        for (i, &k) in multiplicity.iter().enumerate() {
            if !(k >= 0.0) || !k.is_finite() {
                return Err(ReflectionError::NegativeMultiplicity { index: i, value: k });
            }
        }
        for i in 0..roots.len() {
            for j in i + 1..roots.len() {
                if orbit_of[i] == orbit_of[j] && multiplicity[i] != multiplicity[j] {
                    return Err(ReflectionError::NonInvariantMultiplicity { first: i, second: j });
                }
            }
        }
        Ok(Self { dim, roots, multiplicity, orbit_of, catalogue: None, exact: None, source: dirs.to_vec() })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn positive_roots(&self) -> &[Root] {
        &self.roots
    }

    pub fn multiplicities(&self) -> &[f64] {
        &self.multiplicity
    }

    /// Orbit label of each positive root (labels are `0..n_orbits`, in order
    /// of first appearance).
    pub fn orbit_labels(&self) -> &[usize] {
        &self.orbit_of
    }

    pub fn catalogue_kind(&self) -> Option<Catalogue> {
        self.catalogue
    }

    /// A configuration block that rebuilds this system, with one
    /// multiplicity per positive root.
    pub fn config(&self) -> RootSystemConfig {
        let multiplicity = MultiplicityValues::List(self.multiplicity.clone());
        match self.catalogue {
            Some(c) => RootSystemConfig::Catalogue { name: c.to_string(), multiplicity },
            None => RootSystemConfig::Explicit { roots: self.source.clone(), multiplicity },
        }
    }

    pub fn exact(&self) -> Option<&ExactRoots> {
        self.exact.as_ref()
    }

    /// Multiplicity per coordinate axis when every root is axis-aligned,
    /// i.e. the system is `Z2^k` embedded in `R^d`.
    pub fn axis_multiplicities(&self) -> Option<Vec<f64>> {
        let mut out = vec![0.0; self.dim];
        let mut seen = vec![false; self.dim];
        for (r, &k) in self.roots.iter().zip(&self.multiplicity) {
            let nz: Vec<usize> = (0..self.dim).filter(|&j| r.components()[j].abs() > MATCH_TOL).collect();
            if nz.len() != 1 || seen[nz[0]] {
                return None;
            }
            seen[nz[0]] = true;
            out[nz[0]] = k;
        }
        Some(out)
    }

    pub fn is_product(&self) -> bool {
        self.axis_multiplicities().is_some()
    }

    /// `γ_κ = Σ_{α∈R₊} κ(α)`.
    pub fn gamma(&self) -> f64 {
        self.multiplicity.iter().sum()
    }

    /// `w_κ(x) = Π_{α∈R₊} |⟨α,x⟩|^{2κ(α)}`.
    pub fn weight(&self, x: &[f64]) -> f64 {
        self.roots
            .iter()
            .zip(&self.multiplicity)
            .filter(|(_, &k)| k != 0.0)
            .map(|(r, &k)| r.dot(x).abs().powf(2.0 * k))
            .product()
    }

    /// `ln w_κ(x)`; `-∞` on a mirror with positive multiplicity.
    pub fn log_weight(&self, x: &[f64]) -> f64 {
        self.roots
            .iter()
            .zip(&self.multiplicity)
            .filter(|(_, &k)| k != 0.0)
            .map(|(r, &k)| 2.0 * k * r.dot(x).abs().ln())
            .sum()
    }

    /// Short identifier used in reports and cache keys.
    pub fn label(&self) -> String {
        match self.catalogue {
            Some(c) => c.to_string(),
            None => {
                let parts: Vec<String> =
                    self.roots.iter().map(|r| format!("{:?}", r.components())).collect();
                format!("explicit[{}]", parts.join(";"))
            }
        }
    }

    pub fn generate_group(&self) -> Result<ReflectionGroup, ReflectionError> {
        ReflectionGroup::generate(self, ReflectionGroup::DEFAULT_CAP)
    }
}

fn exact_multiplicities(k: &[f64]) -> Option<Vec<BigRational>> {
    k.iter()
        .map(|&v| if v == 0.0 { Some(BigRational::from_integer(0.into())) } else { simplest_ratio(v, 10_000, 1e-13) })
        .collect()
}

/// Orbit labels of the positive roots under the reflections, checking
/// closure of `R = R₊ ∪ −R₊` on the way.
fn root_orbits(roots: &[Root]) -> Result<Vec<usize>, ReflectionError> {
    let n = roots.len();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut [usize], i: usize) -> usize {
        let mut r = i;
        while p[r] != r {
            r = p[r];
        }
        let mut c = i;
        while p[c] != r {
            let next = p[c];
            p[c] = r;
            c = next;
        }
        r
    }
    for i in 0..n {
        for j in 0..n {
            let img = roots[i].reflect(roots[j].components());
            let k = (0..n).find(|&k| {
                let r = roots[k].components();
                img.iter().zip(r).all(|(a, b)| (a - b).abs() < MATCH_TOL)
                    || img.iter().zip(r).all(|(a, b)| (a + b).abs() < MATCH_TOL)
            });
            match k {
                Some(k) => {
                    let (a, b) = (find(&mut parent, j), find(&mut parent, k));
                    if a != b {
                        parent[a.max(b)] = a.min(b);
                    }
                }
                None => return Err(ReflectionError::NotClosed { mirror: i, target: j }),
            }
        }
    }
    let mut labels = HashMap::new();
    Ok((0..n)
        .map(|i| {
            let r = find(&mut parent, i);
            let next = labels.len();
            *labels.entry(r).or_insert(next)
        })
        .collect())
}

/// The finite group generated by the reflections of a root system.
#[derive(Clone, Debug)]
pub struct ReflectionGroup {
    dim: usize,
    elements: Vec<DMatrix<f64>>,
}

impl ReflectionGroup {
    pub const DEFAULT_CAP: usize = 1_000_000;

    /// Breadth-first closure of the generating reflections, deduplicated on
    /// entries rounded to `1e-9`.
    pub fn generate(rs: &RootSystem, cap: usize) -> Result<Self, ReflectionError> {
        let d = rs.dim();
        let gens: Vec<DMatrix<f64>> = rs.positive_roots().iter().map(Root::matrix).collect();
        let key = |m: &DMatrix<f64>| -> Vec<i64> { m.iter().map(|v| (v * 1e9).round() as i64).collect() };
        let id = DMatrix::<f64>::identity(d, d);
        let mut seen: HashSet<Vec<i64>> = HashSet::new();
        seen.insert(key(&id));
        let mut elements = vec![id.clone()];
        let mut queue = VecDeque::from([id]);
        while let Some(g) = queue.pop_front() {
            for s in &gens {
                let h = s * &g;
                if seen.insert(key(&h)) {
                    if elements.len() >= cap {
                        return Err(ReflectionError::NonClosedSystem { cap });
                    }
                    elements.push(h.clone());
                    queue.push_back(h);
                }
            }
        }
        Ok(Self { dim: d, elements })
    }

    pub fn order(&self) -> usize {
        self.elements.len()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn elements(&self) -> &[DMatrix<f64>] {
        &self.elements
    }

    pub fn act(&self, g: usize, x: &[f64]) -> Vec<f64> {
        let m = &self.elements[g];
        (0..self.dim).map(|i| (0..self.dim).map(|j| m[(i, j)] * x[j]).sum()).collect()
    }

    /// The orbit `G·x` (with repetitions when `x` has a nontrivial stabiliser).
    pub fn orbit(&self, x: &[f64]) -> Vec<Vec<f64>> {
        (0..self.order()).map(|g| self.act(g, x)).collect()
    }

    /// `min_{g∈G} |g·x − y|`.
    pub fn min_orbit_distance(&self, x: &[f64], y: &[f64]) -> f64 {
        self.orbit(x).iter().map(|gx| dist(gx, y)).fold(f64::INFINITY, f64::min)
    }

    /// `max_{g∈G} |g·x − y|`.
    pub fn max_orbit_distance(&self, x: &[f64], y: &[f64]) -> f64 {
        self.orbit(x).iter().map(|gx| dist(gx, y)).fold(0.0, f64::max)
    }
}

/// Free function form of [`ReflectionGroup::min_orbit_distance`].
pub fn min_orbit_distance(group: &ReflectionGroup, x: &[f64], y: &[f64]) -> f64 {
    group.min_orbit_distance(x, y)
}

pub(crate) fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(p, q)| (p - q) * (p - q)).sum::<f64>().sqrt()
}

#[cfg(test)]
pub(crate) fn norm2(a: &[f64]) -> f64 {
    a.iter().map(|v| v * v).sum()
}
