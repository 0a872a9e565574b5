//! Planar hexagonal-lattice airspace.
//!
//! Vertices are axial coordinates `(q, r)` embedded at `x = q + r/2`,
//! `y = r·√3/2` (east = +x, north = +y), so every edge has unit length and
//! one lattice axis runs exactly east–west. A lattice of radius `R` is the
//! regular hexagon of vertices with `|q|, |r|, |q + r| ≤ R`.

use std::collections::VecDeque;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A lattice vertex in axial coordinates. Serializes as `[q, r]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(from = "[i32; 2]", into = "[i32; 2]")]
pub struct AxialCoord {
    pub q: i32,
    pub r: i32,
}

impl AxialCoord {
    pub const ORIGIN: AxialCoord = AxialCoord { q: 0, r: 0 };

    pub const fn new(q: i32, r: i32) -> Self {
        Self { q, r }
    }

    /// Moves one lattice step along `heading`.
    pub fn step(self, heading: Heading) -> Self {
        let (dq, dr) = heading.offset();
        Self::new(self.q + dq, self.r + dr)
    }

    /// Euclidean embedding `(x, y)`.
    pub fn embed(self) -> (f64, f64) {
        let q = f64::from(self.q);
        let r = f64::from(self.r);
        (q + r / 2.0, r * 3f64.sqrt() / 2.0)
    }
}

impl From<[i32; 2]> for AxialCoord {
    fn from([q, r]: [i32; 2]) -> Self {
        Self { q, r }
    }
}

impl From<AxialCoord> for [i32; 2] {
    fn from(c: AxialCoord) -> Self {
        [c.q, c.r]
    }
}

impl fmt::Display for AxialCoord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.q, self.r)
    }
}

/// Track direction of a lattice edge, in compass degrees (0 = north,
/// clockwise positive). Variants are ordered clockwise from 30°.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(into = "u16", try_from = "u16")]
pub enum Heading {
    NorthEast,
    East,
    SouthEast,
    SouthWest,
    West,
    NorthWest,
}

impl Heading {
    pub const ALL: [Heading; 6] =
        [Heading::NorthEast, Heading::East, Heading::SouthEast, Heading::SouthWest, Heading::West, Heading::NorthWest];

    /// Clockwise step index, 0 for 30° through 5 for 330°.
    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Self {
        Self::ALL[i % 6]
    }

    pub fn compass(self) -> u16 {
        30 + 60 * self as u16
    }

    pub fn from_compass(deg: u16) -> Option<Self> {
        if deg >= 360 || deg % 60 != 30 {
            return None;
        }
        Some(Self::from_index(usize::from((deg - 30) / 60)))
    }

    /// Axial offset of one step along this heading.
    pub fn offset(self) -> (i32, i32) {
        match self {
            Heading::NorthEast => (0, 1),
            Heading::East => (1, 0),
            Heading::SouthEast => (1, -1),
            Heading::SouthWest => (0, -1),
            Heading::West => (-1, 0),
            Heading::NorthWest => (-1, 1),
        }
    }

    pub fn from_offset(dq: i32, dr: i32) -> Option<Self> {
        Self::ALL.into_iter().find(|h| h.offset() == (dq, dr))
    }

    /// Rotates clockwise by `steps` lattice steps of 60° (negative = left).
    pub fn rotate(self, steps: i32) -> Self {
        Self::from_index((self as i32 + steps).rem_euclid(6) as usize)
    }

    pub fn reverse(self) -> Self {
        self.rotate(3)
    }

    /// Clockwise steps in `0..6` needed to turn from `self` to `to`.
    pub fn steps_to(self, to: Heading) -> usize {
        (to as usize + 6 - self as usize) % 6
    }

    /// True for tracks with a southward component, or due west.
    pub fn is_south_or_due_west(self) -> bool {
        matches!(self, Heading::SouthEast | Heading::SouthWest | Heading::West)
    }
}

impl From<Heading> for u16 {
    fn from(h: Heading) -> u16 {
        h.compass()
    }
}

impl TryFrom<u16> for Heading {
    type Error = String;

    fn try_from(deg: u16) -> std::result::Result<Self, String> {
        Heading::from_compass(deg).ok_or_else(|| format!("{deg} is not a lattice heading"))
    }
}

impl fmt::Display for Heading {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}°", self.compass())
    }
}

/// Neighbor offsets in canonical order; every neighbor list follows it.
pub const CANONICAL_HEADINGS: [Heading; 6] =
    [Heading::East, Heading::NorthEast, Heading::NorthWest, Heading::West, Heading::SouthWest, Heading::SouthEast];

/// Position of `h` in [`CANONICAL_HEADINGS`].
pub fn canonical_rank(h: Heading) -> usize {
    match h {
        Heading::East => 0,
        Heading::NorthEast => 1,
        Heading::NorthWest => 2,
        Heading::West => 3,
        Heading::SouthWest => 4,
        Heading::SouthEast => 5,
    }
}

/// Heading difference `(intruder − own) mod 360` between two distinct tracks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ConflictAngle {
    Deg60,
    Deg120,
    Deg180,
    Deg240,
    Deg300,
}

impl ConflictAngle {
    pub fn degrees(self) -> u16 {
        match self {
            ConflictAngle::Deg60 => 60,
            ConflictAngle::Deg120 => 120,
            ConflictAngle::Deg180 => 180,
            ConflictAngle::Deg240 => 240,
            ConflictAngle::Deg300 => 300,
        }
    }
}

pub fn conflict_angle(own: Heading, intruder: Heading) -> Result<ConflictAngle> {
    match own.steps_to(intruder) {
        1 => Ok(ConflictAngle::Deg60),
        2 => Ok(ConflictAngle::Deg120),
        3 => Ok(ConflictAngle::Deg180),
        4 => Ok(ConflictAngle::Deg240),
        5 => Ok(ConflictAngle::Deg300),
        _ => Err(Error::NonConflictGeometry),
    }
}

/// Heading of the edge `from → to`.
pub fn heading_between(from: AxialCoord, to: AxialCoord) -> Result<Heading> {
    Heading::from_offset(to.q - from.q, to.r - from.r).ok_or(Error::InvalidEdge(from, to))
}

pub fn hex_distance(a: AxialCoord, b: AxialCoord) -> u32 {
    let dq = a.q - b.q;
    let dr = a.r - b.r;
    (dq.unsigned_abs() + dr.unsigned_abs() + (dq + dr).unsigned_abs()) / 2
}

/// An undirected edge; `(a, b)` and `(b, a)` are the same resource.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct EdgeId {
    lo: AxialCoord,
    hi: AxialCoord,
}

impl EdgeId {
    pub fn new(a: AxialCoord, b: AxialCoord) -> Result<Self> {
        if hex_distance(a, b) != 1 {
            return Err(Error::InvalidEdge(a, b));
        }
        Ok(Self::normalized(a, b))
    }

    pub(crate) fn normalized(a: AxialCoord, b: AxialCoord) -> Self {
        if a <= b {
            Self { lo: a, hi: b }
        } else {
            Self { lo: b, hi: a }
        }
    }

    pub fn endpoints(&self) -> (AxialCoord, AxialCoord) {
        (self.lo, self.hi)
    }
}

impl fmt::Display for EdgeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}–{}", self.lo, self.hi)
    }
}

const NO_VERTEX: u32 = u32::MAX;

/// Regular-hexagon lattice with precomputed adjacency and all-pairs
/// graph distances. Immutable after construction.
#[derive(Debug, Clone)]
pub struct HexLattice {
    radius: u32,
    vertices: Vec<AxialCoord>,
    /// Dense `(q, r)` → vertex index lookup over the bounding square.
    slots: Vec<u32>,
    /// Neighbor list per vertex in canonical order.
    adjacency: Vec<Vec<u32>>,
    dist: Vec<u8>,
}

impl HexLattice {
    pub fn new(radius: u32) -> Self {
        let r = radius as i32;
        let side = (2 * radius + 1) as usize;
        let mut vertices = Vec::new();
        let mut slots = vec![NO_VERTEX; side * side];
        for q in -r..=r {
            for rr in -r..=r {
                if (q + rr).abs() <= r {
                    slots[(q + r) as usize * side + (rr + r) as usize] = vertices.len() as u32;
                    vertices.push(AxialCoord::new(q, rr));
                }
            }
        }

        let mut lat = Self { radius, vertices, slots, adjacency: Vec::new(), dist: Vec::new() };
        lat.adjacency = lat
            .vertices
            .iter()
            .map(|&v| CANONICAL_HEADINGS.iter().filter_map(|&h| lat.index_of(v.step(h)).map(|i| i as u32)).collect())
            .collect();
        lat.dist = lat.all_pairs_bfs();
        lat
    }

    fn all_pairs_bfs(&self) -> Vec<u8> {
        let n = self.vertices.len();
        let mut dist = vec![u8::MAX; n * n];
        let mut queue = VecDeque::new();
        for src in 0..n {
            let row = &mut dist[src * n..(src + 1) * n];
            row[src] = 0;
            queue.push_back(src);
            while let Some(u) = queue.pop_front() {
                for &w in &self.adjacency[u] {
                    let w = w as usize;
                    if row[w] == u8::MAX {
                        row[w] = row[u] + 1;
                        queue.push_back(w);
                    }
                }
            }
        }
        dist
    }

    pub fn radius(&self) -> u32 {
        self.radius
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn edge_count(&self) -> usize {
        self.adjacency.iter().map(Vec::len).sum::<usize>() / 2
    }

    pub fn vertices(&self) -> &[AxialCoord] {
        &self.vertices
    }

    pub fn contains(&self, c: AxialCoord) -> bool {
        self.index_of(c).is_some()
    }

    pub fn index_of(&self, c: AxialCoord) -> Option<usize> {
        let r = self.radius as i32;
        if c.q.abs() > r || c.r.abs() > r || (c.q + c.r).abs() > r {
            return None;
        }
        let side = (2 * self.radius + 1) as usize;
        let slot = self.slots[(c.q + r) as usize * side + (c.r + r) as usize];
        (slot != NO_VERTEX).then_some(slot as usize)
    }

    pub fn coord(&self, index: usize) -> AxialCoord {
        self.vertices[index]
    }

    /// Neighbors of `c` in canonical order (empty if `c` is off-lattice).
    pub fn neighbors(&self, c: AxialCoord) -> Vec<AxialCoord> {
        match self.index_of(c) {
            Some(i) => self.adjacency[i].iter().map(|&j| self.vertices[j as usize]).collect(),
            None => Vec::new(),
        }
    }

    pub(crate) fn neighbor_indices(&self, index: usize) -> &[u32] {
        &self.adjacency[index]
    }

    pub fn neighbor(&self, c: AxialCoord, heading: Heading) -> Option<AxialCoord> {
        let n = c.step(heading);
        self.contains(n).then_some(n)
    }

    pub fn is_edge(&self, a: AxialCoord, b: AxialCoord) -> bool {
        self.contains(a) && self.contains(b) && hex_distance(a, b) == 1
    }

    /// Graph distance between two lattice vertices.
    pub fn distance(&self, a: AxialCoord, b: AxialCoord) -> Option<u32> {
        Some(self.distance_idx(self.index_of(a)?, self.index_of(b)?))
    }

    pub(crate) fn distance_idx(&self, a: usize, b: usize) -> u32 {
        u32::from(self.dist[a * self.vertices.len() + b])
    }

    /// A minimum-length path `src ..= dst`. At each vertex the first neighbor
    /// in canonical order that lies on some shortest path is taken.
    pub fn shortest_path(&self, src: AxialCoord, dst: AxialCoord) -> Option<Vec<AxialCoord>> {
        let (mut cur, goal) = (self.index_of(src)?, self.index_of(dst)?);
        let mut path = vec![src];
        while cur != goal {
            let d = self.distance_idx(cur, goal);
            cur = self.adjacency[cur].iter().map(|&j| j as usize).find(|&j| self.distance_idx(j, goal) + 1 == d)?;
            path.push(self.vertices[cur]);
        }
        Some(path)
    }
}
