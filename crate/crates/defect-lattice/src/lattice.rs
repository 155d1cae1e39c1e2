//! Bravais lattices, defective reference configurations, Voronoi
//! neighbour sets, lattice paths and admissibility diagnostics.

use crate::error::{input, Error, Result};
use crate::spatial::SpatialHash;
use crate::vec3::{add, dot, norm, norm2, scale, sub, Vec3};
use serde::{Deserialize, Serialize};
use std::collections::{HashMap, HashSet, VecDeque};

/// Stacking of atoms along the dislocation line for the projected
/// two-dimensional setting. The column above the site with integer
/// coordinates `n` holds atoms at heights `offset . n + period * Z`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Column {
    pub period: f64,
    pub offset: [f64; 2],
}

impl Column {
    pub fn height(&self, n: [i64; 3]) -> f64 {
        self.offset[0] * n[0] as f64 + self.offset[1] * n[1] as f64
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BravaisLattice {
    pub d: usize,
    pub ds: usize,
    /// Lattice vectors; only the first `d` entries are used.
    pub vectors: [Vec3; 3],
    pub column: Option<Column>,
    inv: [[f64; 3]; 3],
}

impl BravaisLattice {
    /// `vectors` are the columns of A (each of length `d`).
    pub fn new(d: usize, ds: usize, vectors: &[Vec<f64>]) -> Result<Self> {
        if !(d == 2 || d == 3) {
            return input(format!("lattice dimension must be 2 or 3, got {d}"));
        }
        if ds < d || ds > 3 {
            return input(format!("physical dimension {ds} incompatible with d = {d}"));
        }
        if vectors.len() != d || vectors.iter().any(|v| v.len() != d) {
            return input(format!("lattice matrix must be {d}x{d}"));
        }
        let mut vs = [[0.0; 3]; 3];
        for (j, v) in vectors.iter().enumerate() {
            for (i, x) in v.iter().enumerate() {
                if !x.is_finite() {
                    return input("lattice matrix has non-finite entries");
                }
                vs[j][i] = *x;
            }
        }
        if d == 2 {
            vs[2] = [0.0, 0.0, 1.0];
        }
        let m = nalgebra::Matrix3::from_fn(|i, j| vs[j][i]);
        let det = m.determinant();
        let scale = vs.iter().take(d).map(|v| norm(*v)).fold(0.0, f64::max);
        if det.abs() <= 1e-12 * scale.powi(d as i32) {
            return input("lattice matrix is singular");
        }
        let inv_m = m.try_inverse().ok_or_else(|| Error::Input("lattice matrix is singular".into()))?;
        let mut inv = [[0.0; 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                inv[i][j] = inv_m[(i, j)];
            }
        }
        Ok(BravaisLattice { d, ds, vectors: vs, column: None, inv })
    }

    pub fn square(a: f64) -> Self {
        Self::new(2, 2, &[vec![a, 0.0], vec![0.0, a]]).expect("square lattice")
    }

    pub fn triangular(a: f64) -> Self {
        Self::new(2, 2, &[vec![a, 0.0], vec![0.5 * a, 0.5 * 3f64.sqrt() * a]]).expect("triangular lattice")
    }

    pub fn cubic(a: f64) -> Self {
        Self::new(3, 3, &[vec![a, 0.0, 0.0], vec![0.0, a, 0.0], vec![0.0, 0.0, a]]).expect("cubic lattice")
    }

    /// Attach a stacking column and switch to the projected (d=2, ds=3) setting.
    pub fn with_column(mut self, column: Column) -> Result<Self> {
        if self.d != 2 {
            return input("columns are only defined for planar lattices");
        }
        if !(column.period > 0.0) || !column.period.is_finite() {
            return input("column period must be positive");
        }
        self.ds = 3;
        self.column = Some(column);
        Ok(self)
    }

    /// Uniformly rescaled copy.
    pub fn scaled(&self, s: f64) -> Self {
        let vecs: Vec<Vec<f64>> = (0..self.d).map(|j| self.vectors[j][..self.d].iter().map(|x| x * s).collect()).collect();
        let mut l = Self::new(self.d, self.ds, &vecs).expect("rescaled lattice");
        if let Some(c) = self.column {
            l.column = Some(Column { period: s * c.period, offset: [s * c.offset[0], s * c.offset[1]] });
            l.ds = self.ds;
        }
        l
    }

    pub fn position(&self, n: [i64; 3]) -> Vec3 {
        let mut x = [0.0; 3];
        for j in 0..self.d {
            x = add(x, scale(n[j] as f64, self.vectors[j]));
        }
        x
    }

    /// Fractional coordinates A^{-1} x.
    pub fn fractional(&self, x: Vec3) -> Vec3 {
        [dot(self.inv[0], x), dot(self.inv[1], x), dot(self.inv[2], x)]
    }

    /// Integer coordinates of `x` if it is a lattice point.
    pub fn coords_of(&self, x: Vec3) -> Option<[i64; 3]> {
        let f = self.fractional(x);
        let mut n = [0i64; 3];
        for j in 0..self.d {
            n[j] = f[j].round() as i64;
        }
        if norm(sub(self.position(n), x)) <= 1e-9 * self.max_vector_len() {
            Some(n)
        } else {
            None
        }
    }

    pub fn max_vector_len(&self) -> f64 {
        (0..self.d).map(|j| norm(self.vectors[j])).fold(0.0, f64::max)
    }

    /// Shortest nonzero lattice vector length.
    pub fn nn_distance(&self) -> f64 {
        let mut best = f64::INFINITY;
        for n in self.box_coords(3) {
            if n != [0, 0, 0] {
                best = best.min(norm(self.position(n)));
            }
        }
        best
    }

    /// Volume (area) of the unit cell.
    pub fn cell_volume(&self) -> f64 {
        let m = nalgebra::Matrix3::from_fn(|i, j| self.vectors[j][i]);
        m.determinant().abs()
    }

    fn box_coords(&self, k: i64) -> Vec<[i64; 3]> {
        let mut out = Vec::new();
        let kz = if self.d == 3 { k } else { 0 };
        for i in -k..=k {
            for j in -k..=k {
                for l in -kz..=kz {
                    out.push([i, j, l]);
                }
            }
        }
        out
    }

    /// Integer coordinates of all lattice points with |x - centre| <= r,
    /// in lexicographic order.
    pub fn points_in_ball(&self, centre: Vec3, r: f64) -> Vec<[i64; 3]> {
        let fc = self.fractional(centre);
        let mut lo = [0i64; 3];
        let mut hi = [0i64; 3];
        for i in 0..self.d {
            let row = norm(self.inv[i]);
            lo[i] = (fc[i] - r * row).floor() as i64 - 1;
            hi[i] = (fc[i] + r * row).ceil() as i64 + 1;
        }
        let r2 = r * r * (1.0 + 1e-12) + 1e-24;
        let mut out = Vec::new();
        for i in lo[0]..=hi[0] {
            for j in lo[1]..=hi[1] {
                for l in lo[2]..=hi[2] {
                    let n = [i, j, l];
                    if norm2(sub(self.position(n), centre)) <= r2 {
                        out.push(n);
                    }
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum DefectKind {
    None,
    /// Lattice sites (integer coordinates) removed from the crystal.
    Vacancy { sites: Vec<[i64; 3]> },
    /// Extra atoms at explicit positions.
    Interstitial { positions: Vec<Vec3> },
    /// Lattice sites replaced by atoms at explicit positions.
    Substitution { removed: Vec<[i64; 3]>, positions: Vec<Vec3> },
    /// Straight dislocation; the reference lattice itself is homogeneous.
    Dislocation,
}

#[derive(Debug, Clone)]
pub struct ReferenceConfig {
    pub lattice: BravaisLattice,
    pub kind: DefectKind,
    pub r_def: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Site {
    /// Integer lattice coordinates, `None` for explicitly placed core atoms.
    pub coord: Option<[i64; 3]>,
    pub pos: Vec3,
}

impl ReferenceConfig {
    pub fn homogeneous(lattice: BravaisLattice) -> Self {
        ReferenceConfig { lattice, kind: DefectKind::None, r_def: 0.0 }
    }

    pub fn vacancy(lattice: BravaisLattice, sites: Vec<[i64; 3]>, r_def: f64) -> Result<Self> {
        let c = ReferenceConfig { lattice, kind: DefectKind::Vacancy { sites }, r_def };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.r_def.is_finite() || self.r_def < 0.0 {
            return input("R_def must be finite and non-negative");
        }
        let tol = 1e-9 * self.lattice.max_vector_len();
        let removed = self.removed();
        for n in &removed {
            if norm(self.lattice.position(*n)) > self.r_def + tol {
                return input(format!("removed site {n:?} lies outside B_R_def"));
            }
        }
        let added = self.core_sites();
        for (i, p) in added.iter().enumerate() {
            if norm(*p) > self.r_def + tol {
                return input(format!("core atom {i} lies outside B_R_def"));
            }
            if let Some(n) = self.lattice.coords_of(*p) {
                if !removed.contains(&n) {
                    return input(format!("core atom {i} coincides with lattice site {n:?}"));
                }
            }
            for q in &added[..i] {
                if norm(sub(*p, *q)) <= tol {
                    return input(format!("core atom {i} duplicates another core atom"));
                }
            }
        }
        if matches!(self.kind, DefectKind::Dislocation) && self.lattice.d != 2 {
            return input("dislocations require a planar lattice");
        }
        Ok(())
    }

    pub fn removed(&self) -> Vec<[i64; 3]> {
        match &self.kind {
            DefectKind::Vacancy { sites } => sites.clone(),
            DefectKind::Substitution { removed, .. } => removed.clone(),
            _ => Vec::new(),
        }
    }

    /// Explicit core atoms, in input order.
    pub fn core_sites(&self) -> Vec<Vec3> {
        match &self.kind {
            DefectKind::Interstitial { positions } => positions.clone(),
            DefectKind::Substitution { positions, .. } => positions.clone(),
            _ => Vec::new(),
        }
    }

    pub fn is_homogeneous(&self) -> bool {
        self.removed().is_empty() && self.core_sites().is_empty()
    }
}

/// All sites of the reference configuration with |x| <= r: lattice sites in
/// lexicographic order of their integer coordinates, then core atoms in
/// input order.
pub fn generate_sites(config: &ReferenceConfig, r: f64) -> Result<Vec<Site>> {
    if !r.is_finite() {
        return input("site radius must be finite");
    }
    if r <= 0.0 {
        return input("site radius must be positive");
    }
    let removed: HashSet<[i64; 3]> = config.removed().into_iter().collect();
    let mut sites: Vec<Site> = config
        .lattice
        .points_in_ball([0.0; 3], r)
        .into_iter()
        .filter(|n| !removed.contains(n))
        .map(|n| Site { coord: Some(n), pos: config.lattice.position(n) })
        .collect();
    for p in config.core_sites() {
        if norm(p) <= r {
            sites.push(Site { coord: None, pos: p });
        }
    }
    Ok(sites)
}

/// Sites inside a ball together with a lookup structure.
#[derive(Debug, Clone)]
pub struct Domain {
    pub radius: f64,
    pub sites: Vec<Site>,
    pub positions: Vec<Vec3>,
    index: HashMap<[i64; 3], usize>,
    hash: SpatialHash,
}

impl Domain {
    pub fn new(config: &ReferenceConfig, radius: f64) -> Result<Self> {
        let sites = generate_sites(config, radius)?;
        let positions: Vec<Vec3> = sites.iter().map(|s| s.pos).collect();
        let index = sites
            .iter()
            .enumerate()
            .filter_map(|(i, s)| s.coord.map(|c| (c, i)))
            .collect();
        let hash = SpatialHash::new(&positions, config.lattice.max_vector_len());
        Ok(Domain { radius, sites, positions, index, hash })
    }

    pub fn len(&self) -> usize {
        self.sites.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sites.is_empty()
    }

    pub fn index_of(&self, n: [i64; 3]) -> Option<usize> {
        self.index.get(&n).copied()
    }

    /// Index of the site at position `x`, if any.
    pub fn find(&self, x: Vec3, tol: f64) -> Option<usize> {
        self.hash.within(&self.positions, x, tol).first().copied()
    }

    pub fn within(&self, x: Vec3, r: f64) -> Vec<usize> {
        self.hash.within(&self.positions, x, r)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NeighborSet {
    pub center: usize,
    pub neighbors: Vec<usize>,
    pub offsets: Vec<Vec3>,
}

/// Radius around a site that bounds every Voronoi face point of that site.
fn face_bound(config: &ReferenceConfig) -> f64 {
    1.5 * config.lattice.max_vector_len()
}

/// Margin a site needs from the domain edge for a reliable Voronoi cell.
pub fn neighbor_margin(config: &ReferenceConfig) -> f64 {
    2.0 * face_bound(config)
}

/// Voronoi-adjacent sites of `l`: every `m` for which some point is
/// equidistant from `l` and `m` and no closer to any other site (within
/// a tolerance of 1e-9 |A|).
pub fn neighbors(config: &ReferenceConfig, domain: &Domain, l: usize) -> Result<NeighborSet> {
    if l >= domain.len() {
        return input(format!("site index {l} out of range"));
    }
    let x = domain.positions[l];
    let bound = face_bound(config);
    if norm(x) + 2.0 * bound > domain.radius + 1e-12 {
        return Err(Error::Boundary(format!(
            "site {l} at distance {:.3} is within {:.3} of the domain edge",
            norm(x),
            2.0 * bound
        )));
    }
    let tol = 1e-9 * config.lattice.max_vector_len();
    let pool: Vec<usize> = domain.within(x, 2.0 * bound).into_iter().filter(|&k| k != l).collect();
    let rel: Vec<Vec3> = pool.iter().map(|&k| sub(domain.positions[k], x)).collect();
    let dim = config.lattice.d;
    let mut nb = Vec::new();
    let mut off = Vec::new();
    for (i, &m) in pool.iter().enumerate() {
        if voronoi_adjacent(&rel, i, bound, tol, dim) {
            nb.push(m);
            off.push(rel[i]);
        }
    }
    if nb.is_empty() {
        return Err(Error::Numeric(format!("empty neighbour set at site {l}")));
    }
    Ok(NeighborSet { center: l, neighbors: nb, offsets: off })
}

/// Feasibility of the face between the origin and `rel[i]`: points `a` on
/// the bisector with |a| <= bound and a.(k) <= |k|^2/2 + tol |k| for all k.
fn voronoi_adjacent(rel: &[Vec3], i: usize, bound: f64, tol: f64, dim: usize) -> bool {
    let m = rel[i];
    let mlen = norm(m);
    if mlen > 2.0 * bound {
        return false;
    }
    let nrm = scale(1.0 / mlen, m);
    let mid = scale(0.5, m);
    // basis of the bisector
    let p = perpendicular(nrm, dim);
    if dim == 2 {
        let (mut lo, mut hi) = (-bound, bound);
        for (j, k) in rel.iter().enumerate() {
            if j == i {
                continue;
            }
            // (mid + t p).k <= |k|^2/2 + tol |k|
            let alpha = dot(p, *k);
            let beta = 0.5 * norm2(*k) + tol * norm(*k) - dot(mid, *k);
            if alpha.abs() < 1e-14 {
                if beta < 0.0 {
                    return false;
                }
            } else if alpha > 0.0 {
                hi = hi.min(beta / alpha);
            } else {
                lo = lo.max(beta / alpha);
            }
            if lo > hi {
                return false;
            }
        }
        true
    } else {
        let q = cross(nrm, p);
        let mut poly: Vec<[f64; 2]> = vec![[-bound, -bound], [bound, -bound], [bound, bound], [-bound, bound]];
        for (j, k) in rel.iter().enumerate() {
            if j == i {
                continue;
            }
            let a = [dot(p, *k), dot(q, *k)];
            let beta = 0.5 * norm2(*k) + tol * norm(*k) - dot(mid, *k);
            poly = clip(&poly, a, beta);
            if poly.is_empty() {
                return false;
            }
        }
        true
    }
}

fn perpendicular(n: Vec3, dim: usize) -> Vec3 {
    if dim == 2 {
        return [-n[1], n[0], 0.0];
    }
    let t = if n[0].abs() < 0.9 { [1.0, 0.0, 0.0] } else { [0.0, 1.0, 0.0] };
    let c = cross(n, t);
    scale(1.0 / norm(c), c)
}

fn cross(a: Vec3, b: Vec3) -> Vec3 {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

/// Sutherland-Hodgman clip of a convex polygon to {x : a.x <= b}.
fn clip(poly: &[[f64; 2]], a: [f64; 2], b: f64) -> Vec<[f64; 2]> {
    let f = |x: [f64; 2]| a[0] * x[0] + a[1] * x[1] - b;
    let mut out = Vec::with_capacity(poly.len() + 1);
    for idx in 0..poly.len() {
        let cur = poly[idx];
        let nxt = poly[(idx + 1) % poly.len()];
        let (fc, fn_) = (f(cur), f(nxt));
        if fc <= 0.0 {
            out.push(cur);
        }
        if (fc <= 0.0) != (fn_ <= 0.0) {
            let t = fc / (fc - fn_);
            out.push([cur[0] + t * (nxt[0] - cur[0]), cur[1] + t * (nxt[1] - cur[1])]);
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct LatticePath {
    pub sites: Vec<Site>,
    /// Number of steps divided by |l - m| (zero for the trivial path).
    pub ratio: f64,
}

impl LatticePath {
    pub fn steps(&self) -> usize {
        self.sites.len() - 1
    }
}

/// Path of neighbouring sites from `l` to `m`. Between lattice sites the
/// path uses steps +-A e_j and avoids the core ball when both endpoints lie
/// outside it; otherwise it falls back to a breadth-first search on the
/// Voronoi neighbour graph.
pub fn lattice_path(config: &ReferenceConfig, l: Site, m: Site) -> Result<LatticePath> {
    let tol = 1e-9 * config.lattice.max_vector_len();
    let valid = |s: &Site| -> bool {
        match s.coord {
            Some(n) => !config.removed().contains(&n) && norm(sub(config.lattice.position(n), s.pos)) <= tol,
            None => config.core_sites().iter().any(|p| norm(sub(*p, s.pos)) <= tol),
        }
    };
    if !valid(&l) || !valid(&m) {
        return input("path endpoints must be sites of the reference configuration");
    }
    let dist = norm(sub(l.pos, m.pos));
    if dist <= tol {
        return Ok(LatticePath { sites: vec![l], ratio: 0.0 });
    }
    if let (Some(a), Some(b)) = (l.coord, m.coord) {
        let outside = norm(l.pos) > config.r_def + tol && norm(m.pos) > config.r_def + tol;
        if let Some(p) = axis_path(config, a, b, outside) {
            let n = p.len() - 1;
            let sites = p.into_iter().map(|c| Site { coord: Some(c), pos: config.lattice.position(c) }).collect();
            return Ok(LatticePath { sites, ratio: n as f64 / dist });
        }
    }
    graph_path(config, l, m, dist)
}

fn axis_path(config: &ReferenceConfig, a: [i64; 3], b: [i64; 3], avoid_core: bool) -> Option<Vec<[i64; 3]>> {
    let lat = &config.lattice;
    let removed: HashSet<[i64; 3]> = config.removed().into_iter().collect();
    let tol = 1e-9 * lat.max_vector_len();
    let blocked = |n: &[i64; 3]| -> bool {
        removed.contains(n) || (avoid_core && norm(lat.position(*n)) <= config.r_def + tol)
    };
    let core_k = {
        let mut k = 0i64;
        for i in 0..lat.d {
            k = k.max((config.r_def * norm(lat.inv[i])).ceil() as i64);
        }
        k + 2
    };
    let mut lo = [0i64; 3];
    let mut hi = [0i64; 3];
    for i in 0..lat.d {
        lo[i] = a[i].min(b[i]).min(-core_k) - 1;
        hi[i] = a[i].max(b[i]).max(core_k) + 1;
    }
    let inside = |n: &[i64; 3]| (0..lat.d).all(|i| n[i] >= lo[i] && n[i] <= hi[i]);
    let mut prev: HashMap<[i64; 3], [i64; 3]> = HashMap::new();
    let mut queue = VecDeque::new();
    queue.push_back(a);
    prev.insert(a, a);
    while let Some(c) = queue.pop_front() {
        if c == b {
            let mut path = vec![b];
            let mut cur = b;
            while cur != a {
                cur = prev[&cur];
                path.push(cur);
            }
            path.reverse();
            return Some(path);
        }
        for j in 0..lat.d {
            for s in [-1i64, 1] {
                let mut nx = c;
                nx[j] += s;
                if inside(&nx) && !blocked(&nx) && !prev.contains_key(&nx) {
                    prev.insert(nx, c);
                    queue.push_back(nx);
                }
            }
        }
    }
    None
}

fn graph_path(config: &ReferenceConfig, l: Site, m: Site, dist: f64) -> Result<LatticePath> {
    let reach = norm(l.pos).max(norm(m.pos)) + config.r_def + 2.0 * config.lattice.max_vector_len();
    let domain = Domain::new(config, reach + neighbor_margin(config))?;
    let tol = 1e-9 * config.lattice.max_vector_len();
    let start = domain.find(l.pos, tol).ok_or_else(|| Error::Input("path start not found".into()))?;
    let goal = domain.find(m.pos, tol).ok_or_else(|| Error::Input("path end not found".into()))?;
    let mut prev = vec![usize::MAX; domain.len()];
    prev[start] = start;
    let mut queue = VecDeque::new();
    queue.push_back(start);
    while let Some(c) = queue.pop_front() {
        if c == goal {
            break;
        }
        if norm(domain.positions[c]) > reach {
            continue;
        }
        for nb in neighbors(config, &domain, c)?.neighbors {
            if prev[nb] == usize::MAX {
                prev[nb] = c;
                queue.push_back(nb);
            }
        }
    }
    if prev[goal] == usize::MAX {
        return Err(Error::Numeric("no lattice path found".into()));
    }
    let mut idx = vec![goal];
    let mut cur = goal;
    while cur != start {
        cur = prev[cur];
        idx.push(cur);
    }
    idx.reverse();
    let n = idx.len() - 1;
    Ok(LatticePath { sites: idx.into_iter().map(|i| domain.sites[i]).collect(), ratio: n as f64 / dist })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Admissibility {
    pub m_hat: f64,
    pub lambda_hat: f64,
    pub admissible: bool,
}

/// Minimum stretch ratio over nearby pairs and covering radius of the
/// deformed positions `y` of reference sites `x`.
///
/// Pairs are taken within `pair_cutoff` in the reference configuration,
/// plus all pairs among sites inside `core_radius`. Probe points for the
/// covering radius lie on a grid of spacing `probe_h` inside the ball that
/// stays `2 * pair_cutoff` away from the outermost deformed site.
pub fn admissibility_check(x: &[Vec3], y: &[Vec3], pair_cutoff: f64, core_radius: f64, probe_h: f64) -> Result<Admissibility> {
    if x.len() != y.len() {
        return input("reference and deformed position counts differ");
    }
    if x.len() < 2 {
        return input("admissibility needs at least two sites");
    }
    if y.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::Evaluation("non-finite deformed position".into()));
    }
    let hash = SpatialHash::new(x, pair_cutoff.max(1e-6));
    let mut m_hat = f64::INFINITY;
    let core: Vec<usize> = (0..x.len()).filter(|&i| norm(x[i]) <= core_radius).collect();
    let mut visit = |i: usize, j: usize| {
        let r = norm(sub(x[i], x[j]));
        if r > 0.0 {
            m_hat = m_hat.min(norm(sub(y[i], y[j])) / r);
        }
    };
    for i in 0..x.len() {
        for j in hash.within(x, x[i], pair_cutoff) {
            if j > i {
                visit(i, j);
            }
        }
    }
    for (a, &i) in core.iter().enumerate() {
        for &j in &core[a + 1..] {
            visit(i, j);
        }
    }
    let centre = {
        let mut c = [0.0; 3];
        for p in y {
            c = add(c, *p);
        }
        scale(1.0 / y.len() as f64, c)
    };
    let outer = y.iter().map(|p| norm(sub(*p, centre))).fold(0.0, f64::max);
    let r_in = outer - 2.0 * pair_cutoff;
    let mut lambda_hat = 0.0f64;
    if r_in > 0.0 && probe_h > 0.0 {
        let planar = y.iter().all(|p| p[2] == 0.0);
        let yh = SpatialHash::new(y, pair_cutoff.max(1e-6));
        let k = (r_in / probe_h).floor() as i64;
        let kz = if planar { 0 } else { k };
        for i in -k..=k {
            for j in -k..=k {
                for l in -kz..=kz {
                    let off = [i as f64 * probe_h, j as f64 * probe_h, l as f64 * probe_h];
                    if norm(off) > r_in {
                        continue;
                    }
                    let p = add(centre, off);
                    if let Some((_, d)) = yh.nearest(y, p, outer * 2.0) {
                        lambda_hat = lambda_hat.max(d);
                    }
                }
            }
        }
    }
    let admissible = m_hat > 0.0 && m_hat.is_finite();
    Ok(Admissibility { m_hat: if m_hat.is_finite() { m_hat } else { 0.0 }, lambda_hat, admissible })
}
