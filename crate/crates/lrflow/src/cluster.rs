//! Polymer-gas partition functions: Ursell functions, the cluster series for log z,
//! brute-force partition sums and the per-block convergence sums.
//!
//! Compatibility of polymers is non-touching, with g(X, X′) = −1 when X and X′ touch.
//! [`ursell`] is the plain connected-graph sum Σ_G Π_{ij∈G} g(X_i, X_j) (no 1/n!), so
//! log z = Σ_n (1/n!) Σ_{X_1..X_n} p(X_1)⋯p(X_n) u(X_1, …, X_n).

use std::collections::{BTreeMap, BTreeSet, HashMap};

use crate::error::{Error, Result};
use crate::geometry::{BlockLattice, Polymer};
use crate::jet::Algebra;

/// Finitely supported activity on connected polymers of one block lattice.
#[derive(Debug, Clone)]
pub struct ClusterActivity<A: Algebra> {
    pub lattice: BlockLattice,
    values: BTreeMap<Polymer, A>,
}

impl<A: Algebra> ClusterActivity<A> {
    pub fn new(lattice: BlockLattice) -> Self {
        Self { lattice, values: BTreeMap::new() }
    }

    pub fn insert(&mut self, x: Polymer, value: A) -> Result<()> {
        if x.j != self.lattice.j {
            return Err(Error::domain(format!("polymer at scale {} on a scale-{} lattice", x.j, self.lattice.j)));
        }
        if x.blocks.iter().any(|&b| b >= self.lattice.count()) {
            return Err(Error::domain("polymer block outside the torus"));
        }
        if !self.lattice.is_connected(&x) {
            return Err(Error::domain("activities live on connected polymers"));
        }
        self.values.insert(x, value);
        Ok(())
    }

    pub fn get(&self, x: &Polymer) -> A {
        self.values.get(x).copied().unwrap_or_else(A::zero)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Polymer, &A)> {
        self.values.iter()
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.values().fold(0.0f64, |a, v| a.max(v.norm()))
    }

    fn support(&self) -> (Vec<Polymer>, Vec<A>) {
        self.values.iter().filter(|(_, v)| v.norm() > 0.0).map(|(x, v)| (x.clone(), *v)).unzip()
    }
}

/// Every connected polymer of at most `max_size` blocks.
pub fn all_connected_polymers(lat: &BlockLattice, max_size: usize) -> Result<Vec<Polymer>> {
    let mut out = BTreeSet::new();
    for n in 1..=max_size.min(lat.count()) {
        for b in 0..lat.count() {
            out.extend(lat.enumerate_connected_polymers(n, b)?);
        }
    }
    Ok(out.into_iter().collect())
}

/// Activity M′ s̄^{3 + a′(|X| − 2^d)_+} on every connected polymer up to `max_size` blocks.
pub fn synthetic_activity(lat: &BlockLattice, s_bar: f64, m_prime: f64, a_prime: f64, max_size: usize) -> Result<ClusterActivity<f64>> {
    let mut act = ClusterActivity::new(lat.clone());
    let small = 1usize << lat.d;
    for x in all_connected_polymers(lat, max_size)? {
        let excess = x.len().saturating_sub(small) as f64;
        act.insert(x, m_prime * s_bar.powf(3.0 + a_prime * excess))?;
    }
    Ok(act)
}

fn touch_matrix(lat: &BlockLattice, xs: &[Polymer]) -> Vec<Vec<bool>> {
    xs.iter().map(|a| xs.iter().map(|b| lat.touching(a, b)).collect()).collect()
}

/// u(X_1, …, X_n) for n ≤ 8 by the connected-part recursion over vertex subsets:
/// u(S) = Z(S) − Σ_{T ∋ min S, T ⊊ S} u(T) Z(S \ T), with Z(S) = 1 if S is independent.
pub fn ursell(lat: &BlockLattice, xs: &[Polymer]) -> Result<f64> {
    let n = xs.len();
    if n == 0 || n > 8 {
        return Err(Error::domain(format!("Ursell function needs 1 ≤ n ≤ 8, got {n}")));
    }
    let t = touch_matrix(lat, xs);
    let full = (1usize << n) - 1;
    let independent: Vec<bool> = (0..=full)
        .map(|s| (0..n).all(|i| s >> i & 1 == 0 || (i + 1..n).all(|k| s >> k & 1 == 0 || !t[i][k])))
        .collect();
    let mut u = vec![0.0f64; full + 1];
    for s in 1..=full {
        let low = s & s.wrapping_neg();
        let mut acc = if independent[s] { 1.0 } else { 0.0 };
        // proper subsets T of s containing its lowest vertex
        let rest = s & !low;
        let mut r = rest;
        while r != 0 {
            let tset = s & !r;
            if independent[r] {
                acc -= u[tset];
            }
            r = (r - 1) & rest;
        }
        u[s] = acc;
    }
    Ok(u[full])
}

/// u by explicit enumeration of the 2^{n(n−1)/2} subgraphs, n ≤ 5.
pub fn ursell_bruteforce(lat: &BlockLattice, xs: &[Polymer]) -> Result<f64> {
    let n = xs.len();
    if n == 0 || n > 5 {
        return Err(Error::domain(format!("brute-force Ursell function needs 1 ≤ n ≤ 5, got {n}")));
    }
    let t = touch_matrix(lat, xs);
    let edges: Vec<(usize, usize)> = (0..n).flat_map(|i| (i + 1..n).map(move |k| (i, k))).collect();
    let mut total = 0.0;
    for mask in 0u32..(1u32 << edges.len()) {
        let chosen: Vec<(usize, usize)> =
            edges.iter().enumerate().filter(|(e, _)| mask >> e & 1 == 1).map(|(_, &p)| p).collect();
        if chosen.iter().any(|&(i, k)| !t[i][k]) {
            continue;
        }
        let mut parent: Vec<usize> = (0..n).collect();
        fn find(p: &mut [usize], mut i: usize) -> usize {
            while p[i] != i {
                p[i] = p[p[i]];
                i = p[i];
            }
            i
        }
        for &(i, k) in &chosen {
            let (a, b) = (find(&mut parent, i), find(&mut parent, k));
            parent[a] = b;
        }
        let root = find(&mut parent, 0);
        if (0..n).all(|i| find(&mut parent, i) == root) {
            total += if chosen.len() % 2 == 0 { 1.0 } else { -1.0 };
        }
    }
    Ok(total)
}

/// Ursell values of multisets over a fixed list of polymer types, memoised by
/// multiplicity vector. Repeated polymers form cliques, so the vertex-subset
/// recursion collapses to a sum over independent type sets.
struct MultisetUrsell {
    touch: Vec<Vec<bool>>,
    memo: HashMap<Vec<u8>, f64>,
}

impl MultisetUrsell {
    fn new(touch: Vec<Vec<bool>>) -> Self {
        Self { touch, memo: HashMap::new() }
    }

    fn support_connected(&self, supp: &[usize]) -> bool {
        let mut seen = vec![false; supp.len()];
        let mut stack = vec![0];
        seen[0] = true;
        while let Some(i) = stack.pop() {
            for k in 0..supp.len() {
                if !seen[k] && self.touch[supp[i]][supp[k]] {
                    seen[k] = true;
                    stack.push(k);
                }
            }
        }
        seen.into_iter().all(|s| s)
    }

    fn get(&mut self, m: &[u8]) -> f64 {
        if let Some(v) = self.memo.get(m) {
            return *v;
        }
        let supp: Vec<usize> = (0..m.len()).filter(|&i| m[i] > 0).collect();
        let total: u32 = m.iter().map(|&c| c as u32).sum();
        let value = if total == 1 {
            1.0
        } else if !self.support_connected(&supp) {
            0.0
        } else {
            let k = supp[0];
            let mut acc = 0.0;
            let s = supp.len();
            for mask in 1u32..(1u32 << s) {
                let set: Vec<usize> = (0..s).filter(|i| mask >> i & 1 == 1).map(|i| supp[i]).collect();
                if set.iter().enumerate().any(|(a, &x)| set[a + 1..].iter().any(|&y| self.touch[x][y])) {
                    continue;
                }
                // vertex choices: one copy of each type, never the fixed copy of type k
                let mut ways = 1.0;
                for &i in &set {
                    ways *= if i == k { m[i] as f64 - 1.0 } else { m[i] as f64 };
                }
                if ways == 0.0 {
                    continue;
                }
                let mut rest = m.to_vec();
                for &i in &set {
                    rest[i] -= 1;
                }
                acc -= ways * self.get(&rest);
            }
            acc
        };
        self.memo.insert(m.to_vec(), value);
        value
    }
}

/// Truncated cluster series for log z.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusterSeries<A> {
    pub value: A,
    pub n_max: usize,
    /// Order-n contribution, index n − 1.
    pub orders: Vec<A>,
    /// Σ_{|m| = n} Π‖p‖^m/m! |u(m)|, index n − 1.
    pub abs_orders: Vec<f64>,
    /// Geometric extrapolation of the absolute series past n_max; infinite if the
    /// last ratio is ≥ 1.
    pub tail_estimate: f64,
}

pub const MAX_SERIES_ORDER: usize = 12;

/// Visits every multiplicity vector with 1 ≤ |m| ≤ n_max over `types` types.
fn for_each_multiset(types: usize, n_max: usize, f: &mut impl FnMut(&[u8], usize)) {
    fn rec(m: &mut Vec<u8>, start: usize, left: usize, total: usize, f: &mut impl FnMut(&[u8], usize)) {
        for i in start..m.len() {
            m[i] += 1;
            f(m, total + 1);
            if left > 1 {
                rec(m, i, left - 1, total + 1, f);
            }
            m[i] -= 1;
        }
    }
    let mut m = vec![0u8; types];
    if n_max > 0 {
        rec(&mut m, 0, n_max, 0, f);
    }
}

fn factorial(n: u8) -> f64 {
    (1..=n as u32).map(f64::from).product()
}

pub fn log_partition<A: Algebra>(activity: &ClusterActivity<A>, n_max: usize) -> Result<ClusterSeries<A>> {
    if n_max == 0 || n_max > MAX_SERIES_ORDER {
        return Err(Error::domain(format!("series order {n_max} outside 1..={MAX_SERIES_ORDER}")));
    }
    let (xs, ps) = activity.support();
    if xs.len() > 4096 {
        return Err(Error::Resource(format!("{} polymer types is too many for the cluster series", xs.len())));
    }
    let norms: Vec<f64> = ps.iter().map(|p| p.norm()).collect();
    let mut urs = MultisetUrsell::new(touch_matrix(&activity.lattice, &xs));
    let mut orders = vec![A::zero(); n_max];
    let mut abs_orders = vec![0.0; n_max];
    for_each_multiset(xs.len(), n_max, &mut |m, total| {
        let u = urs.get(m);
        if u == 0.0 {
            return;
        }
        let mut term = A::one();
        let mut abs_term = u.abs();
        for (i, &c) in m.iter().enumerate() {
            if c > 0 {
                let inv = 1.0 / factorial(c);
                let mut pw = A::one();
                for _ in 0..c {
                    pw = pw * ps[i];
                }
                term = term * pw.scale(inv);
                abs_term *= norms[i].powi(c as i32) * inv;
            }
        }
        orders[total - 1] = orders[total - 1] + term.scale(u);
        abs_orders[total - 1] += abs_term;
    });
    let value = orders.iter().fold(A::zero(), |a, t| a + *t);
    let tail_estimate = tail_from(&abs_orders);
    Ok(ClusterSeries { value, n_max, orders, abs_orders, tail_estimate })
}

fn tail_from(abs_orders: &[f64]) -> f64 {
    let n = abs_orders.len();
    let last = abs_orders[n - 1];
    if last == 0.0 {
        return 0.0;
    }
    if n < 2 || abs_orders[n - 2] == 0.0 {
        return f64::INFINITY;
    }
    let ratio = last / abs_orders[n - 2];
    if ratio >= 1.0 {
        f64::INFINITY
    } else {
        last * ratio / (1.0 - ratio)
    }
}

pub const MAX_BRUTEFORCE_BLOCKS: usize = 16;

/// z = Σ_{X ⊆ Λ} Π_{Y component of X} p(Y), over all block subsets.
pub fn partition_bruteforce<A: Algebra>(activity: &ClusterActivity<A>) -> Result<A> {
    let lat = &activity.lattice;
    let nb = lat.count();
    if nb > MAX_BRUTEFORCE_BLOCKS {
        return Err(Error::Resource(format!("{nb} blocks exceeds the brute-force limit {MAX_BRUTEFORCE_BLOCKS}")));
    }
    let mut z = A::zero();
    'subsets: for mask in 0u32..(1u32 << nb) {
        let x = Polymer::new(lat.j, (0..nb).filter(|b| mask >> b & 1 == 1).collect());
        let mut term = A::one();
        for comp in lat.components(&x) {
            let p = activity.get(&comp);
            if p.norm() == 0.0 {
                continue 'subsets;
            }
            term = term * p;
        }
        z = z + term;
    }
    Ok(z)
}

/// Per-block sums Σ_{Y touching B} ‖p(Y)‖ e^{|Y|}.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceReport {
    pub per_block: Vec<f64>,
    pub threshold: f64,
    pub within: Vec<bool>,
    /// Contribution of polymers of each size to the largest per-block sum, index |Y| − 1.
    pub by_size: Vec<f64>,
}

pub fn convergence_check<A: Algebra>(activity: &ClusterActivity<A>, threshold: f64) -> ConvergenceReport {
    let lat = &activity.lattice;
    let nb = lat.count();
    let max_size = activity.iter().map(|(x, _)| x.len()).max().unwrap_or(0);
    let mut per_block = vec![0.0; nb];
    let mut sizes = vec![vec![0.0; max_size]; nb];
    for (y, p) in activity.iter() {
        let w = p.norm() * (y.len() as f64).exp();
        if w == 0.0 {
            continue;
        }
        let reach = lat.small_set_neighbourhood(y);
        for b in (0..nb).filter(|&b| reach.contains(b)) {
            if y.blocks.iter().any(|&c| lat.blocks_touch(b, c)) {
                per_block[b] += w;
                sizes[b][y.len() - 1] += w;
            }
        }
    }
    let worst = (0..nb).max_by(|&a, &b| per_block[a].total_cmp(&per_block[b])).unwrap_or(0);
    let by_size = sizes.get(worst).cloned().unwrap_or_default();
    let within = per_block.iter().map(|v| *v <= threshold).collect();
    ConvergenceReport { per_block, threshold, within, by_size }
}

/// Σ_n n Σ_{X_2..X_n} ‖p(X_2)⋯p(X_n)‖ |u(X_1, …, X_n)| / n!, through order n_max,
/// with the n = 1 term equal to 1.
pub fn weighted_tail<A: Algebra>(activity: &ClusterActivity<A>, x1: &Polymer, n_max: usize) -> Result<f64> {
    if n_max == 0 || n_max > MAX_SERIES_ORDER {
        return Err(Error::domain(format!("series order {n_max} outside 1..={MAX_SERIES_ORDER}")));
    }
    let (mut xs, ps) = activity.support();
    let mut norms: Vec<f64> = ps.iter().map(|p| p.norm()).collect();
    let anchor = match xs.iter().position(|x| x == x1) {
        Some(i) => i,
        None => {
            xs.push(x1.clone());
            norms.push(0.0);
            xs.len() - 1
        }
    };
    let mut urs = MultisetUrsell::new(touch_matrix(&activity.lattice, &xs));
    // ordered (X_2..X_n) with multiplicity M number (n−1)!/M!, times n/n!
    let mut total = 1.0;
    for_each_multiset(xs.len(), n_max - 1, &mut |m, _| {
        let mut weight = 1.0;
        for (i, &c) in m.iter().enumerate() {
            if c > 0 {
                weight *= norms[i].powi(c as i32) / factorial(c);
            }
        }
        if weight == 0.0 {
            return;
        }
        let mut full = m.to_vec();
        full[anchor] += 1;
        total += weight * urs.get(&full).abs();
    });
    Ok(total)
}
