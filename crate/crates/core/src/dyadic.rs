//! Cubes, dyadic and one-third shifted grids, and sparse families.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

#[cfg(feature = "serde")]
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mesh::Domain;

/// A mesh-aligned box inside a domain, in integer cell coordinates.
///
/// Boxes produced by clipping (for example `3Q` near the boundary) need not
/// have equal sides; [`Cube::is_cube`] tells them apart.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct Cube {
    domain: Domain,
    lo: [i64; 2],
    len: [i64; 2],
}

impl Cube {
    /// Cube with lower corner `corner` and `side` cells per axis.
    pub fn new(domain: Domain, corner: [i64; 2], side: i64) -> Result<Self> {
        let ys = if domain.dim() == 1 { 1 } else { side };
        Self::new_box(domain, corner, [side, ys])
    }

    /// Box with lower corner `corner` and per-axis extents `extent`.
    pub fn new_box(domain: Domain, corner: [i64; 2], extent: [i64; 2]) -> Result<Self> {
        let n = domain.axis_cells() as i64;
        let (lo, len) = if domain.dim() == 1 {
            ([corner[0], 0], [extent[0], 1])
        } else {
            (corner, extent)
        };
        let dims = domain.dim();
        for a in 0..dims {
            if len[a] <= 0 {
                return Err(Error::Parameter("cube side must be positive"));
            }
            if lo[a] < 0 || lo[a] + len[a] > n {
                return Err(Error::OutsideDomain);
            }
        }
        Ok(Self { domain, lo, len })
    }

    /// The interval `[a, b)` of a 1D domain; endpoints must be mesh-aligned.
    pub fn interval(domain: Domain, a: f64, b: f64) -> Result<Self> {
        if domain.dim() != 1 {
            return Err(Error::Unsupported("intervals live in one dimension"));
        }
        let i = domain.edge_index(a);
        let j = domain.edge_index(b);
        Self::new(domain, [i, 0], j - i)
    }

    pub(crate) fn from_box(domain: Domain, lo: [i64; 2], len: [i64; 2]) -> Self {
        Self { domain, lo, len }
    }

    /// Intersection of an arbitrary integer box with the domain.
    pub(crate) fn clip(domain: Domain, lo: [i64; 2], len: [i64; 2]) -> Option<Self> {
        let n = domain.axis_cells() as i64;
        let mut out_lo = [0, 0];
        let mut out_len = [1, 1];
        for a in 0..domain.dim() {
            let a0 = lo[a].max(0);
            let a1 = (lo[a] + len[a]).min(n);
            if a1 <= a0 {
                return None;
            }
            out_lo[a] = a0;
            out_len[a] = a1 - a0;
        }
        Some(Self {
            domain,
            lo: out_lo,
            len: out_len,
        })
    }

    pub fn domain(&self) -> &Domain {
        &self.domain
    }

    pub fn corner(&self) -> [i64; 2] {
        self.lo
    }

    pub fn extent(&self) -> [i64; 2] {
        self.len
    }

    /// All sides equal.
    pub fn is_cube(&self) -> bool {
        self.domain.dim() == 1 || self.len[0] == self.len[1]
    }

    /// Side length in cells, `None` for a non-square box.
    pub fn side(&self) -> Option<i64> {
        self.is_cube().then_some(self.len[0])
    }

    /// Longest side in cells.
    pub fn max_extent(&self) -> i64 {
        if self.domain.dim() == 1 {
            self.len[0]
        } else {
            self.len[0].max(self.len[1])
        }
    }

    pub fn cell_count(&self) -> u64 {
        (self.len[0] * self.len[1]) as u64
    }

    /// Lebesgue measure.
    pub fn measure(&self) -> f64 {
        self.cell_count() as f64 * self.domain.cell_measure()
    }

    /// Physical `[a, b)` along axis `axis`.
    pub fn bounds(&self, axis: usize) -> (f64, f64) {
        (
            self.domain.edge(self.lo[axis]),
            self.domain.edge(self.lo[axis] + self.len[axis]),
        )
    }

    pub fn contains_coords(&self, c: [i64; 2]) -> bool {
        (0..self.domain.dim()).all(|a| c[a] >= self.lo[a] && c[a] < self.lo[a] + self.len[a])
    }

    pub fn contains_cell(&self, index: usize) -> bool {
        let [x, y] = self.domain.coords(index);
        self.contains_coords([x as i64, y as i64])
    }

    pub fn contains(&self, other: &Cube) -> bool {
        (0..self.domain.dim()).all(|a| {
            other.lo[a] >= self.lo[a] && other.lo[a] + other.len[a] <= self.lo[a] + self.len[a]
        })
    }

    pub fn intersect(&self, other: &Cube) -> Option<Cube> {
        if self.domain != other.domain {
            return None;
        }
        let mut lo = [0, 0];
        let mut len = [1, 1];
        for a in 0..self.domain.dim() {
            let a0 = self.lo[a].max(other.lo[a]);
            let a1 = (self.lo[a] + self.len[a]).min(other.lo[a] + other.len[a]);
            if a1 <= a0 {
                return None;
            }
            lo[a] = a0;
            len[a] = a1 - a0;
        }
        Some(Cube::from_box(self.domain, lo, len))
    }

    pub fn intersects(&self, other: &Cube) -> bool {
        self.intersect(other).is_some()
    }

    /// Visits flat cell indices in row-major order.
    #[inline]
    pub fn for_each_cell(&self, mut f: impl FnMut(usize)) {
        let n = self.domain.axis_cells();
        let (x0, x1) = (self.lo[0] as usize, (self.lo[0] + self.len[0]) as usize);
        for y in self.lo[1] as usize..(self.lo[1] + self.len[1]) as usize {
            let base = y * n;
            for x in x0..x1 {
                f(base + x);
            }
        }
    }

    /// Half-open flat index ranges, one per row.
    pub fn row_ranges(&self) -> Vec<(usize, usize)> {
        let n = self.domain.axis_cells();
        let (x0, x1) = (self.lo[0] as usize, (self.lo[0] + self.len[0]) as usize);
        (self.lo[1] as usize..(self.lo[1] + self.len[1]) as usize)
            .map(|y| (y * n + x0, y * n + x1))
            .collect()
    }

    pub fn cells(&self) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.cell_count() as usize);
        self.for_each_cell(|i| out.push(i));
        out
    }

    /// True when [`children`] succeeds.
    pub fn can_subdivide(&self) -> bool {
        self.is_cube() && self.len[0] >= 2 && self.len[0] % 2 == 0
    }
}

impl PartialOrd for Cube {
    fn partial_cmp(&self, other: &Self) -> Option<core::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Cube {
    fn cmp(&self, other: &Self) -> core::cmp::Ordering {
        (self.lo[1], self.lo[0], self.len[0], self.len[1]).cmp(&(
            other.lo[1],
            other.lo[0],
            other.len[0],
            other.len[1],
        ))
    }
}

/// The `2^n` halves of `q`.
pub fn children(q: &Cube) -> Result<Vec<Cube>> {
    if !q.can_subdivide() {
        return Err(Error::Subdivision {
            extent: q.max_extent(),
        });
    }
    let s = q.len[0] / 2;
    let d = q.domain;
    let mut out = Vec::with_capacity(4);
    if d.dim() == 1 {
        for i in 0..2 {
            out.push(Cube::from_box(d, [q.lo[0] + i * s, 0], [s, 1]));
        }
    } else {
        for j in 0..2 {
            for i in 0..2 {
                out.push(Cube::from_box(
                    d,
                    [q.lo[0] + i * s, q.lo[1] + j * s],
                    [s, s],
                ));
            }
        }
    }
    Ok(out)
}

/// `q` together with all its repeated halvings, coarse to fine.
pub fn dyadic_descendants(q: &Cube) -> Vec<Cube> {
    let mut out = vec![*q];
    let mut i = 0;
    while i < out.len() {
        let c = out[i];
        if c.can_subdivide() {
            out.extend(children(&c).unwrap_or_default());
        }
        i += 1;
    }
    out
}

/// The box with the same centre as `q` and `λ` times its extents, clipped to the domain.
pub fn dilate(q: &Cube, lambda: u32) -> Result<Cube> {
    if lambda == 0 || lambda % 2 == 0 {
        return Err(Error::Parameter("dilation factor must be odd"));
    }
    let l = lambda as i64;
    let mut lo = q.lo;
    let mut len = q.len;
    for a in 0..q.domain.dim() {
        lo[a] -= (l - 1) / 2 * q.len[a];
        len[a] *= l;
    }
    Ok(Cube::clip(q.domain, lo, len).expect("a dilate contains the original cube"))
}

/// A dyadic grid shifted by `t ∈ {0, 1/3, 2/3}^n`, with level `k` cubes
/// `2^{-k}([0,1)^n + j + (-1)^k t)` clipped to the domain.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct DyadicGrid {
    domain: Domain,
    shift: [u8; 2],
}

impl DyadicGrid {
    /// `shift` is measured in thirds; each entry must be 0, 1 or 2.
    pub fn new(domain: Domain, shift: [u8; 2]) -> Result<Self> {
        if shift.iter().any(|&t| t > 2) {
            return Err(Error::Parameter("shift entries are 0, 1 or 2 thirds"));
        }
        let shift = if domain.dim() == 1 {
            [shift[0], 0]
        } else {
            shift
        };
        Ok(Self { domain, shift })
    }

    /// The unshifted grid.
    pub fn standard(domain: Domain) -> Self {
        Self {
            domain,
            shift: [0, 0],
        }
    }

    pub fn domain(&self) -> &Domain {
        &self.domain
    }

    pub fn shift_thirds(&self) -> [u8; 2] {
        self.shift
    }

    /// Finest level `K`; its cubes have side `2^{-K}`, three cells.
    pub fn finest_level(&self) -> i32 {
        self.domain.refinement() as i32
    }

    /// Coarsest level kept; a few levels beyond the domain width so every
    /// domain cube has an enclosing grid cube of comparable size.
    pub fn coarsest_level(&self) -> i32 {
        -(self.domain.half_width_exp() + 3)
    }

    pub fn levels(&self) -> core::ops::RangeInclusive<i32> {
        self.coarsest_level()..=self.finest_level()
    }

    /// Unclipped side of level-`k` cubes, in cells.
    pub fn side(&self, k: i32) -> i64 {
        3i64 << (self.finest_level() - k)
    }

    /// Position of the level-`k` lattice modulo the side, per axis.
    fn residue(&self, k: i32, axis: usize) -> i64 {
        let s = self.side(k);
        let origin = (self.domain.axis_cells() / 2) as i64;
        let t = self.shift[axis] as i64 * (1i64 << (self.finest_level() - k));
        let signed = if k.rem_euclid(2) == 0 { t } else { -t };
        (origin + signed).rem_euclid(s)
    }

    /// Unclipped lower corner of the level-`k` cube containing cell `c`.
    fn lattice_corner(&self, c: [i64; 2], k: i32) -> [i64; 2] {
        let s = self.side(k);
        let mut lo = [0, 0];
        for a in 0..self.domain.dim() {
            let r = self.residue(k, a);
            lo[a] = c[a] - (c[a] - r).rem_euclid(s);
        }
        lo
    }

    /// The clipped level-`k` cube containing cell coordinates `c`.
    pub fn cube_containing(&self, c: [i64; 2], k: i32) -> Cube {
        let s = self.side(k);
        let lo = self.lattice_corner(c, k);
        Cube::clip(self.domain, lo, [s, s]).expect("cell lies inside the domain")
    }

    /// Clipped level-`k` cubes meeting the box `within`, in row-major order.
    pub fn cubes_at_within(&self, k: i32, within: &Cube) -> Vec<Cube> {
        let s = self.side(k);
        let first = self.lattice_corner(within.lo, k);
        let mut out = Vec::new();
        let ny = if self.domain.dim() == 1 {
            1
        } else {
            (within.lo[1] + within.len[1] - first[1] + s - 1) / s
        };
        let nx = (within.lo[0] + within.len[0] - first[0] + s - 1) / s;
        for j in 0..ny {
            for i in 0..nx {
                let lo = [first[0] + i * s, first[1] + j * s];
                if let Some(c) = Cube::clip(self.domain, lo, [s, s]) {
                    out.push(c);
                }
            }
        }
        out
    }

    /// Clipped level-`k` cubes; they partition the domain.
    pub fn cubes_at(&self, k: i32) -> Vec<Cube> {
        self.cubes_at_within(k, &self.domain.whole())
    }

    /// All distinct clipped grid cubes, sorted.
    pub fn cubes(&self) -> Vec<Cube> {
        let mut out: Vec<Cube> = self.levels().flat_map(|k| self.cubes_at(k)).collect();
        out.sort();
        out.dedup();
        out
    }

    /// Finest grid cube containing `r`, with its level. Uses unclipped sides.
    pub fn enclosing(&self, r: &Cube) -> Option<(i32, Cube)> {
        let far = [r.lo[0] + r.len[0] - 1, r.lo[1] + r.len[1] - 1];
        for k in self.levels().rev() {
            let a = self.lattice_corner(r.lo, k);
            let b = self.lattice_corner(far, k);
            if a == b {
                return Some((k, self.cube_containing(r.lo, k)));
            }
        }
        None
    }
}

/// The `3^n` grids with shifts in `{0, 1/3, 2/3}^n`.
pub fn shifted_grids(domain: Domain) -> Vec<DyadicGrid> {
    let mut out = Vec::new();
    if domain.dim() == 1 {
        for t in 0..3 {
            out.push(DyadicGrid {
                domain,
                shift: [t, 0],
            });
        }
    } else {
        for ty in 0..3 {
            for tx in 0..3 {
                out.push(DyadicGrid {
                    domain,
                    shift: [tx, ty],
                });
            }
        }
    }
    out
}

/// Range of cubes over which a supremum is taken.
#[derive(Clone, Debug, PartialEq)]
pub enum CubeCollection {
    /// Every mesh-aligned cube inside the domain (intervals in 1D).
    AllMeshAligned(Domain),
    /// The cubes of one grid.
    Dyadic(DyadicGrid),
    /// The cubes of the `3^n` shifted grids.
    UnionOfShifted(Domain),
    /// An explicit list.
    Explicit(Vec<Cube>),
}

impl CubeCollection {
    pub fn tag(&self) -> &'static str {
        match self {
            Self::AllMeshAligned(_) => "all-mesh-aligned",
            Self::Dyadic(_) => "dyadic",
            Self::UnionOfShifted(_) => "union-of-shifted",
            Self::Explicit(_) => "explicit",
        }
    }

    pub fn is_empty(&self) -> bool {
        matches!(self, Self::Explicit(v) if v.is_empty())
    }

    /// Domain of the cubes, `None` for an empty explicit list.
    pub fn domain(&self) -> Option<Domain> {
        match self {
            Self::AllMeshAligned(d) | Self::UnionOfShifted(d) => Some(*d),
            Self::Dyadic(g) => Some(g.domain),
            Self::Explicit(v) => v.first().map(|c| c.domain),
        }
    }

    /// The grids behind a grid-based collection.
    pub fn grids(&self) -> Vec<DyadicGrid> {
        match self {
            Self::Dyadic(g) => vec![*g],
            Self::UnionOfShifted(d) => shifted_grids(*d),
            _ => Vec::new(),
        }
    }

    /// Visits every cube; grid levels may repeat a clipped cube.
    pub fn for_each_cube(&self, mut f: impl FnMut(&Cube)) {
        match self {
            Self::AllMeshAligned(d) => {
                let n = d.axis_cells() as i64;
                if d.dim() == 1 {
                    for i in 0..n {
                        for j in i + 1..=n {
                            f(&Cube::from_box(*d, [i, 0], [j - i, 1]));
                        }
                    }
                } else {
                    for s in 1..=n {
                        for y in 0..=n - s {
                            for x in 0..=n - s {
                                f(&Cube::from_box(*d, [x, y], [s, s]));
                            }
                        }
                    }
                }
            }
            Self::Dyadic(_) | Self::UnionOfShifted(_) => {
                for g in self.grids() {
                    for k in g.levels() {
                        for c in g.cubes_at(k) {
                            f(&c);
                        }
                    }
                }
            }
            Self::Explicit(v) => v.iter().for_each(f),
        }
    }

    /// Materialized cube list (distinct cubes only for grid collections).
    pub fn to_vec(&self) -> Vec<Cube> {
        let mut out = Vec::new();
        self.for_each_cube(|c| out.push(*c));
        if !matches!(self, Self::Explicit(_)) {
            out.sort();
            out.dedup();
        }
        out
    }
}

/// A positive rational `num/den` in `(0, 1]`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct Ratio {
    pub num: u32,
    pub den: u32,
}

impl Ratio {
    pub fn new(num: u32, den: u32) -> Result<Self> {
        if num == 0 || den == 0 || num > den {
            return Err(Error::Parameter("sparsity must lie in (0, 1]"));
        }
        Ok(Self { num, den })
    }

    pub fn value(&self) -> f64 {
        self.num as f64 / self.den as f64
    }
}

/// Cubes with disjoint witness sets `E_Q ⊂ Q`, given as flat cell ranges.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct SparseFamily {
    domain: Domain,
    eta: Ratio,
    cubes: Vec<Cube>,
    witnesses: Vec<Vec<(usize, usize)>>,
}

impl SparseFamily {
    pub fn new(
        domain: Domain,
        eta: Ratio,
        cubes: Vec<Cube>,
        witnesses: Vec<Vec<(usize, usize)>>,
    ) -> Result<Self> {
        if cubes.len() != witnesses.len() {
            return Err(Error::Length {
                expected: cubes.len(),
                found: witnesses.len(),
            });
        }
        if cubes.iter().any(|c| c.domain != domain) {
            return Err(Error::DomainMismatch);
        }
        Ok(Self {
            domain,
            eta,
            cubes,
            witnesses,
        })
    }

    pub fn empty(domain: Domain, eta: Ratio) -> Self {
        Self {
            domain,
            eta,
            cubes: Vec::new(),
            witnesses: Vec::new(),
        }
    }

    /// Pairwise disjoint cubes witnessed by themselves, `η = 1`.
    pub fn disjoint(domain: Domain, cubes: Vec<Cube>) -> Result<Self> {
        let witnesses = cubes.iter().map(Cube::row_ranges).collect();
        Self::new(domain, Ratio { num: 1, den: 1 }, cubes, witnesses)
    }

    pub fn push(&mut self, cube: Cube, witness: Vec<(usize, usize)>) -> Result<()> {
        if cube.domain != self.domain {
            return Err(Error::DomainMismatch);
        }
        self.cubes.push(cube);
        self.witnesses.push(witness);
        Ok(())
    }

    pub fn domain(&self) -> &Domain {
        &self.domain
    }

    pub fn eta(&self) -> Ratio {
        self.eta
    }

    pub fn cubes(&self) -> &[Cube] {
        &self.cubes
    }

    pub fn witnesses(&self) -> &[Vec<(usize, usize)>] {
        &self.witnesses
    }

    pub fn len(&self) -> usize {
        self.cubes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cubes.is_empty()
    }

    /// Same cubes and witnesses with another sparsity parameter.
    pub fn with_eta(mut self, eta: Ratio) -> Self {
        self.eta = eta;
        self
    }
}

/// Merges a sorted list of flat cell indices into half-open ranges.
pub fn ranges_from_cells(cells: &[usize]) -> Vec<(usize, usize)> {
    let mut out: Vec<(usize, usize)> = Vec::new();
    for &c in cells {
        match out.last_mut() {
            Some(last) if last.1 == c => last.1 = c + 1,
            _ => out.push((c, c + 1)),
        }
    }
    out
}

/// First reason a family fails to be sparse.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SparseViolation {
    /// A witness range is empty, reversed or leaves the domain.
    MalformedRange {
        cube: usize,
        start: usize,
        end: usize,
    },
    /// Two witness sets share a cell.
    Overlap {
        cell: usize,
        first: usize,
        second: usize,
    },
    /// A witness cell lies outside its cube.
    Escapes { cube: usize, cell: usize },
    /// `|E_Q| < η|Q|`.
    Deficient {
        cube: usize,
        witness: u64,
        size: u64,
    },
}

impl fmt::Display for SparseViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::MalformedRange { cube, start, end } => {
                write!(f, "cube {cube}: bad witness range [{start}, {end})")
            }
            Self::Overlap {
                cell,
                first,
                second,
            } => write!(f, "cell {cell} witnesses cubes {first} and {second}"),
            Self::Escapes { cube, cell } => write!(f, "cube {cube}: witness cell {cell} outside"),
            Self::Deficient {
                cube,
                witness,
                size,
            } => write!(f, "cube {cube}: witness has {witness} of {size} cells"),
        }
    }
}

/// Checks disjointness, containment and `|E_Q| ≥ η|Q|` in integer arithmetic.
pub fn verify_sparse(s: &SparseFamily) -> core::result::Result<(), SparseViolation> {
    let total = s.domain.cell_count();
    let mut all: Vec<(usize, usize, usize)> = Vec::new();
    for (q, ranges) in s.witnesses.iter().enumerate() {
        for &(start, end) in ranges {
            if start >= end || end > total {
                return Err(SparseViolation::MalformedRange {
                    cube: q,
                    start,
                    end,
                });
            }
            all.push((start, end, q));
        }
    }
    all.sort_unstable();
    let mut reach: Option<(usize, usize)> = None;
    for &(start, end, q) in &all {
        if let Some((r_end, owner)) = reach {
            if start < r_end {
                return Err(SparseViolation::Overlap {
                    cell: start,
                    first: owner.min(q),
                    second: owner.max(q),
                });
            }
        }
        if reach.is_none_or(|(r_end, _)| end > r_end) {
            reach = Some((end, q));
        }
    }
    for (q, (cube, ranges)) in s.cubes.iter().zip(&s.witnesses).enumerate() {
        let mut count = 0u64;
        for &(start, end) in ranges {
            for cell in start..end {
                if !cube.contains_cell(cell) {
                    return Err(SparseViolation::Escapes { cube: q, cell });
                }
            }
            count += (end - start) as u64;
        }
        let size = cube.cell_count();
        if (count as u128) * (s.eta.den as u128) < (size as u128) * (s.eta.num as u128) {
            return Err(SparseViolation::Deficient {
                cube: q,
                witness: count,
                size,
            });
        }
    }
    Ok(())
}
