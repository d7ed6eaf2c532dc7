//! Index arithmetic on cube-shaped boxes of the integer lattice and the
//! signed-permutation symmetries of those boxes.

use serde::{Deserialize, Serialize};
use std::fmt;

use crate::error::{Error, Result};

pub const MAX_DIMENSION: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Convention {
    /// Coordinates `1..=N` on every axis.
    Unit,
    /// Coordinates `-N..=N` on every axis.
    Centered,
}

impl fmt::Display for Convention {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Convention::Unit => f.write_str("unit"),
            Convention::Centered => f.write_str("centered"),
        }
    }
}

impl std::str::FromStr for Convention {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "unit" => Ok(Convention::Unit),
            "centered" | "centred" => Ok(Convention::Centered),
            other => Err(Error::Domain(format!("unknown grid convention `{other}`"))),
        }
    }
}

/// A cube-shaped box of lattice points in dimension `n`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct GridSpec {
    dimension: usize,
    convention: Convention,
    side: usize,
}

impl GridSpec {
    pub fn new(dimension: usize, convention: Convention, side: usize) -> Result<Self> {
        if dimension == 0 || dimension > MAX_DIMENSION {
            return Err(Error::Domain(format!(
                "dimension must be in 1..={MAX_DIMENSION}, got {dimension}"
            )));
        }
        if side == 0 {
            return Err(Error::Domain("side parameter N must be positive".into()));
        }
        let grid = Self {
            dimension,
            convention,
            side,
        };
        grid.axis_len()
            .checked_pow(dimension as u32)
            .filter(|&l| l <= i64::MAX as usize)
            .ok_or_else(|| Error::Domain(format!("grid {grid} is too large to index")))?;
        Ok(grid)
    }

    pub fn unit(dimension: usize, side: usize) -> Result<Self> {
        Self::new(dimension, Convention::Unit, side)
    }

    pub fn centered(dimension: usize, side: usize) -> Result<Self> {
        Self::new(dimension, Convention::Centered, side)
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn convention(&self) -> Convention {
        self.convention
    }

    pub fn side(&self) -> usize {
        self.side
    }

    /// Points per axis: `N` (unit) or `2N+1` (centered).
    pub fn axis_len(&self) -> usize {
        match self.convention {
            Convention::Unit => self.side,
            Convention::Centered => 2 * self.side + 1,
        }
    }

    pub fn num_points(&self) -> usize {
        self.axis_len().pow(self.dimension as u32)
    }

    /// Smallest coordinate value on each axis.
    pub fn axis_min(&self) -> i64 {
        match self.convention {
            Convention::Unit => 1,
            Convention::Centered => -(self.side as i64),
        }
    }

    pub fn axis_max(&self) -> i64 {
        self.side as i64
    }

    /// Reflection of one coordinate about the box center.
    #[inline]
    pub fn reflect_coord(&self, x: i64) -> i64 {
        match self.convention {
            Convention::Unit => self.side as i64 + 1 - x,
            Convention::Centered => -x,
        }
    }

    pub fn contains(&self, p: &LatticePoint) -> bool {
        p.dimension() == self.dimension
            && p.0
                .iter()
                .all(|&x| (self.axis_min()..=self.axis_max()).contains(&x))
    }

    /// Row-major linear index with axis 1 slowest.
    pub fn linear_index(&self, p: &LatticePoint) -> Result<usize> {
        if !self.contains(p) {
            return Err(Error::Range(format!("point {p} lies outside grid {self}")));
        }
        Ok(self.index_unchecked(&p.0))
    }

    #[inline]
    pub(crate) fn index_unchecked(&self, coords: &[i64]) -> usize {
        let len = self.axis_len();
        let lo = self.axis_min();
        coords
            .iter()
            .fold(0usize, |acc, &x| acc * len + (x - lo) as usize)
    }

    pub fn point_of(&self, index: usize) -> Result<LatticePoint> {
        if index >= self.num_points() {
            return Err(Error::Range(format!(
                "index {index} out of range for grid {self} with {} points",
                self.num_points()
            )));
        }
        let mut coords = vec![0; self.dimension];
        self.coords_into(index, &mut coords);
        Ok(LatticePoint(coords))
    }

    #[inline]
    pub(crate) fn coords_into(&self, mut index: usize, out: &mut [i64]) {
        let len = self.axis_len();
        let lo = self.axis_min();
        for slot in out.iter_mut().rev() {
            *slot = (index % len) as i64 + lo;
            index /= len;
        }
    }

    /// All lattice points in linear-index order.
    pub fn points(&self) -> impl Iterator<Item = LatticePoint> + '_ {
        (0..self.num_points()).map(move |i| {
            let mut coords = vec![0; self.dimension];
            self.coords_into(i, &mut coords);
            LatticePoint(coords)
        })
    }

    /// The point closest to the box center; for even `N` on the unit
    /// convention this picks coordinate `N/2` on every axis (all candidates
    /// are equivalent under reflections).
    pub fn central_point(&self) -> LatticePoint {
        let c = match self.convention {
            Convention::Unit => (self.side as i64 + 1) / 2,
            Convention::Centered => 0,
        };
        LatticePoint(vec![c; self.dimension])
    }

    pub fn isometry_group(&self) -> Vec<Isometry> {
        isometry_group(self.dimension)
    }
}

impl fmt::Display for GridSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "n={} N={} ({})",
            self.dimension, self.side, self.convention
        )
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct LatticePoint(pub Vec<i64>);

impl LatticePoint {
    pub fn new(coords: impl Into<Vec<i64>>) -> Self {
        Self(coords.into())
    }

    pub fn dimension(&self) -> usize {
        self.0.len()
    }

    pub fn coords(&self) -> &[i64] {
        &self.0
    }

    pub fn offset_from(&self, other: &LatticePoint) -> Vec<i64> {
        self.0.iter().zip(&other.0).map(|(a, b)| a - b).collect()
    }

    /// Exact squared Euclidean distance.
    pub fn dist2(&self, other: &LatticePoint) -> i64 {
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| (a - b) * (a - b))
            .sum()
    }
}

impl fmt::Display for LatticePoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("(")?;
        for (i, x) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{x}")?;
        }
        f.write_str(")")
    }
}

/// A signed permutation of the axes: output axis `i` takes input axis
/// `permutation[i]`, reflected about the box center when `reflections[i]`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Isometry {
    pub permutation: Vec<usize>,
    pub reflections: Vec<bool>,
}

impl Isometry {
    pub fn identity(dimension: usize) -> Self {
        Self {
            permutation: (0..dimension).collect(),
            reflections: vec![false; dimension],
        }
    }

    /// Exchange of two axes.
    pub fn swap(dimension: usize, a: usize, b: usize) -> Self {
        let mut iso = Self::identity(dimension);
        iso.permutation.swap(a, b);
        iso
    }

    pub fn reflection(dimension: usize, axis: usize) -> Self {
        let mut iso = Self::identity(dimension);
        iso.reflections[axis] = true;
        iso
    }

    pub fn dimension(&self) -> usize {
        self.permutation.len()
    }

    pub fn is_identity(&self) -> bool {
        self.reflections.iter().all(|r| !r)
            && self.permutation.iter().enumerate().all(|(i, &p)| i == p)
    }

    pub fn apply(&self, p: &LatticePoint, grid: &GridSpec) -> LatticePoint {
        let mut out = vec![0; p.dimension()];
        self.apply_coords(&p.0, grid, &mut out);
        LatticePoint(out)
    }

    #[inline]
    pub(crate) fn apply_coords(&self, p: &[i64], grid: &GridSpec, out: &mut [i64]) {
        for (i, slot) in out.iter_mut().enumerate() {
            let x = p[self.permutation[i]];
            *slot = if self.reflections[i] {
                grid.reflect_coord(x)
            } else {
                x
            };
        }
    }

    /// `self ∘ other`: apply `other` first.
    pub fn compose(&self, other: &Isometry) -> Isometry {
        let permutation = self.permutation.iter().map(|&j| other.permutation[j]).collect();
        let reflections = self
            .reflections
            .iter()
            .zip(&self.permutation)
            .map(|(&r, &j)| r ^ other.reflections[j])
            .collect();
        Isometry {
            permutation,
            reflections,
        }
    }

    /// Permutation of linear indices induced on `grid`: entry `i` holds the
    /// index of the image of point `i`.
    pub fn index_map(&self, grid: &GridSpec) -> Vec<usize> {
        let n = grid.dimension();
        let mut p = vec![0; n];
        let mut q = vec![0; n];
        (0..grid.num_points())
            .map(|i| {
                grid.coords_into(i, &mut p);
                self.apply_coords(&p, grid, &mut q);
                grid.index_unchecked(&q)
            })
            .collect()
    }
}

/// All `2^n * n!` signed permutations in dimension `n`, identity first.
pub fn isometry_group(dimension: usize) -> Vec<Isometry> {
    let mut perms = Vec::new();
    permutations(&mut (0..dimension).collect(), 0, &mut perms);
    perms.sort();
    let mut group = Vec::with_capacity(perms.len() << dimension);
    for perm in perms {
        for mask in 0..(1usize << dimension) {
            group.push(Isometry {
                permutation: perm.clone(),
                reflections: (0..dimension).map(|i| mask >> i & 1 == 1).collect(),
            });
        }
    }
    group
}

fn permutations(items: &mut Vec<usize>, k: usize, out: &mut Vec<Vec<usize>>) {
    if k == items.len() {
        out.push(items.clone());
        return;
    }
    for i in k..items.len() {
        items.swap(k, i);
        permutations(items, k + 1, out);
        items.swap(k, i);
    }
}
