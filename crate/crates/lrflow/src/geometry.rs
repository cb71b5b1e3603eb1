//! Blocks, polymers, connectivity, small sets and the circle product on the torus.

use std::collections::{HashSet, VecDeque};

use crate::error::{Error, Result};
use crate::jet::Algebra;
use crate::lattice::LatticeSpec;

/// The j-blocks of a torus, indexed by block coordinates in [0, K)^d with K = M/L^j.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BlockLattice {
    pub d: usize,
    pub j: u32,
    /// Blocks per axis.
    pub k: u64,
    /// Block side L^j.
    pub side: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Block {
    pub j: u32,
    pub anchor: Vec<u64>,
}

/// A union of j-blocks, stored as sorted block indices.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Polymer {
    pub j: u32,
    pub blocks: Vec<usize>,
}

impl Polymer {
    pub fn new(j: u32, mut blocks: Vec<usize>) -> Self {
        blocks.sort_unstable();
        blocks.dedup();
        Self { j, blocks }
    }

    pub fn empty(j: u32) -> Self {
        Self { j, blocks: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    pub fn contains(&self, b: usize) -> bool {
        self.blocks.binary_search(&b).is_ok()
    }
}

impl BlockLattice {
    pub fn new(spec: &LatticeSpec, j: u32) -> Result<Self> {
        if j > spec.n {
            return Err(Error::domain(format!("block scale {j} exceeds N = {}", spec.n)));
        }
        let k = spec.l.pow(spec.n - j);
        let total = (k as u128).pow(spec.d as u32);
        if total > (1u128 << 40) {
            return Err(Error::Resource("too many blocks to index".into()));
        }
        Ok(Self { d: spec.d, j, k, side: spec.l.pow(j) })
    }

    pub fn count(&self) -> usize {
        (self.k as usize).pow(self.d as u32)
    }

    pub fn coords(&self, mut idx: usize) -> Vec<u64> {
        let k = self.k as usize;
        let mut out = vec![0u64; self.d];
        for slot in out.iter_mut().rev() {
            *slot = (idx % k) as u64;
            idx /= k;
        }
        out
    }

    pub fn index(&self, coords: &[i64]) -> usize {
        let k = self.k as i64;
        coords.iter().fold(0usize, |acc, &c| acc * self.k as usize + c.rem_euclid(k) as usize)
    }

    pub fn blocks(&self) -> Vec<Block> {
        (0..self.count())
            .map(|i| Block { j: self.j, anchor: self.coords(i).iter().map(|c| c * self.side).collect() })
            .collect()
    }

    pub fn block_of_anchor(&self, anchor: &[i64]) -> Result<usize> {
        if anchor.len() != self.d || anchor.iter().any(|a| a.rem_euclid(self.side as i64) != 0) {
            return Err(Error::domain(format!("{anchor:?} is not a {}-block anchor", self.j)));
        }
        let c: Vec<i64> = anchor.iter().map(|a| a.div_euclid(self.side as i64)).collect();
        Ok(self.index(&c))
    }

    pub fn anchors(&self, x: &Polymer) -> Vec<Vec<u64>> {
        x.blocks.iter().map(|&b| self.coords(b).iter().map(|c| c * self.side).collect()).collect()
    }

    /// Cyclic sup-distance between two blocks in block units.
    pub fn block_distance(&self, a: usize, b: usize) -> u64 {
        let (ca, cb) = (self.coords(a), self.coords(b));
        ca.iter()
            .zip(&cb)
            .map(|(x, y)| {
                let diff = x.abs_diff(*y);
                diff.min(self.k - diff)
            })
            .max()
            .unwrap_or(0)
    }

    /// Two blocks touch iff their point sets are within sup-distance 1.
    pub fn blocks_touch(&self, a: usize, b: usize) -> bool {
        self.block_distance(a, b) <= 1
    }

    /// Blocks within cyclic sup-distance `r` of `b`, including `b`.
    pub fn ball(&self, b: usize, r: u64) -> Vec<usize> {
        let c = self.coords(b);
        let r = r.min(self.k / 2) as i64;
        let width = (2 * r + 1) as usize;
        let mut out = HashSet::new();
        for flat in 0..width.pow(self.d as u32) {
            let mut rem = flat;
            let mut y = vec![0i64; self.d];
            for slot in y.iter_mut().rev() {
                *slot = (rem % width) as i64 - r;
                rem /= width;
            }
            let z: Vec<i64> = c.iter().zip(&y).map(|(a, o)| *a as i64 + o).collect();
            out.insert(self.index(&z));
        }
        let mut v: Vec<usize> = out.into_iter().collect();
        v.sort_unstable();
        v
    }

    pub fn neighbours(&self, b: usize) -> Vec<usize> {
        self.ball(b, 1).into_iter().filter(|&x| x != b).collect()
    }

    pub fn touching(&self, x: &Polymer, y: &Polymer) -> bool {
        x.blocks.iter().any(|&a| y.blocks.iter().any(|&b| self.blocks_touch(a, b)))
    }

    pub fn components(&self, x: &Polymer) -> Vec<Polymer> {
        let mut seen = vec![false; x.blocks.len()];
        let mut out = Vec::new();
        for start in 0..x.blocks.len() {
            if seen[start] {
                continue;
            }
            seen[start] = true;
            let mut comp = vec![x.blocks[start]];
            let mut queue = VecDeque::from([start]);
            while let Some(i) = queue.pop_front() {
                for k in 0..x.blocks.len() {
                    if !seen[k] && self.blocks_touch(x.blocks[i], x.blocks[k]) {
                        seen[k] = true;
                        comp.push(x.blocks[k]);
                        queue.push_back(k);
                    }
                }
            }
            out.push(Polymer::new(x.j, comp));
        }
        out
    }

    pub fn is_connected(&self, x: &Polymer) -> bool {
        !x.is_empty() && self.components(x).len() == 1
    }

    /// Connected with at most 2^d blocks.
    pub fn is_small_set(&self, x: &Polymer) -> bool {
        self.is_connected(x) && x.len() <= 1 << self.d
    }

    /// Union of the small sets meeting X. A connected chain of 2^d blocks from a block
    /// reaches exactly the blocks within sup-distance 2^d − 1, so the union is that ball
    /// around X.
    pub fn small_set_neighbourhood(&self, x: &Polymer) -> Polymer {
        let r = (1u64 << self.d) - 1;
        let mut all = Vec::new();
        for &b in &x.blocks {
            all.extend(self.ball(b, r));
        }
        Polymer::new(x.j, all)
    }

    /// (F₁ ∘ F₂)(Y) = Σ_{X ⊆ Y} F₁(Y \ X) F₂(X), over block subsets of Y.
    pub fn circle_product<A, F1, F2>(&self, f1: F1, f2: F2, y: &Polymer) -> Result<A>
    where
        A: Algebra,
        F1: Fn(&Polymer) -> A,
        F2: Fn(&Polymer) -> A,
    {
        let n = y.len();
        if n > 20 {
            return Err(Error::Resource(format!("circle product over {n} blocks exceeds 2^20 subsets")));
        }
        let mut acc = A::zero();
        for mask in 0u32..(1u32 << n) {
            let (mut inside, mut outside) = (Vec::new(), Vec::new());
            for (i, &b) in y.blocks.iter().enumerate() {
                if mask >> i & 1 == 1 {
                    inside.push(b);
                } else {
                    outside.push(b);
                }
            }
            acc = acc + f1(&Polymer::new(y.j, outside)) * f2(&Polymer::new(y.j, inside));
        }
        Ok(acc)
    }

    /// All connected n-block polymers touching block `b`, each once, in sorted order.
    pub fn enumerate_connected_polymers(&self, n: usize, b: usize) -> Result<Vec<Polymer>> {
        if n == 0 || n > 8 {
            return Err(Error::domain(format!("polymer size {n} outside 1..=8")));
        }
        if n > self.count() {
            return Ok(Vec::new());
        }
        let mut level: HashSet<Vec<usize>> = self.ball(b, 1).into_iter().map(|s| vec![s]).collect();
        for _ in 1..n {
            let mut next = HashSet::new();
            for set in &level {
                for &blk in set {
                    for nb in self.neighbours(blk) {
                        if set.binary_search(&nb).is_err() {
                            let mut grown = set.clone();
                            let pos = grown.binary_search(&nb).unwrap_err();
                            grown.insert(pos, nb);
                            next.insert(grown);
                        }
                    }
                }
            }
            level = next;
        }
        let mut out: Vec<Polymer> = level.into_iter().map(|v| Polymer { j: self.j, blocks: v }).collect();
        out.sort();
        Ok(out)
    }

    /// Space-separated anchors, coordinates joined by ':'.
    pub fn format_polymer(&self, x: &Polymer) -> String {
        self.anchors(x)
            .iter()
            .map(|a| a.iter().map(|c| c.to_string()).collect::<Vec<_>>().join(":"))
            .collect::<Vec<_>>()
            .join(" ")
    }

    pub fn parse_polymer(&self, s: &str) -> Result<Polymer> {
        let mut blocks = Vec::new();
        for tok in s.split_whitespace() {
            let coords: std::result::Result<Vec<i64>, _> = tok.split(':').map(|c| c.parse::<i64>()).collect();
            let coords = coords.map_err(|_| Error::domain(format!("bad anchor '{tok}'")))?;
            blocks.push(self.block_of_anchor(&coords)?);
        }
        Ok(Polymer::new(self.j, blocks))
    }
}
