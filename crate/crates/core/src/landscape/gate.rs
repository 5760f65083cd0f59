use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::potentials::{Potential, PotentialModel};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub x_range: (f64, f64),
    pub y_range: (f64, f64),
    pub nx: usize,
    pub ny: usize,
    /// Band around the communication height in which gate cells are
    /// collected. Defaults to twice the largest jump from the merging node
    /// to one of its neighbours.
    pub gate_tol: Option<f64>,
}

impl GridSpec {
    pub fn square(half_width: f64, n: usize) -> Self {
        Self {
            x_range: (-half_width, half_width),
            y_range: (-half_width, half_width),
            nx: n,
            ny: n,
            gate_tol: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GateResult {
    pub communication_height: f64,
    pub gate_cells: Vec<[f64; 2]>,
    pub path_witness: Vec<[f64; 2]>,
}

struct Grid {
    spec: GridSpec,
    hx: f64,
    hy: f64,
    values: Vec<f64>,
}

impl Grid {
    fn coords(&self, n: usize) -> [f64; 2] {
        let ix = n % self.spec.nx;
        let iy = n / self.spec.nx;
        [
            self.spec.x_range.0 + ix as f64 * self.hx,
            self.spec.y_range.0 + iy as f64 * self.hy,
        ]
    }

    fn nearest(&self, p: &[f64]) -> usize {
        let ix = ((p[0] - self.spec.x_range.0) / self.hx).round() as usize;
        let iy = ((p[1] - self.spec.y_range.0) / self.hy).round() as usize;
        ix.min(self.spec.nx - 1) + self.spec.nx * iy.min(self.spec.ny - 1)
    }

    /// The 8 neighbours in cyclic order around the node; `None` off-grid.
    fn ring(&self, n: usize) -> [Option<usize>; 8] {
        const OFFSETS: [(i64, i64); 8] = [(1, 0), (1, 1), (0, 1), (-1, 1), (-1, 0), (-1, -1), (0, -1), (1, -1)];
        let ix = (n % self.spec.nx) as i64;
        let iy = (n / self.spec.nx) as i64;
        let mut out = [None; 8];
        for (k, (dx, dy)) in OFFSETS.iter().enumerate() {
            let (jx, jy) = (ix + dx, iy + dy);
            if jx >= 0 && jy >= 0 && (jx as usize) < self.spec.nx && (jy as usize) < self.spec.ny {
                out[k] = Some(jx as usize + self.spec.nx * jy as usize);
            }
        }
        out
    }
}

struct UnionFind {
    parent: Vec<usize>,
    rank: Vec<u8>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        Self {
            parent: (0..n).collect(),
            rank: vec![0; n],
        }
    }

    fn find(&mut self, mut a: usize) -> usize {
        while self.parent[a] != a {
            self.parent[a] = self.parent[self.parent[a]];
            a = self.parent[a];
        }
        a
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return;
        }
        match self.rank[ra].cmp(&self.rank[rb]) {
            std::cmp::Ordering::Less => self.parent[ra] = rb,
            std::cmp::Ordering::Greater => self.parent[rb] = ra,
            std::cmp::Ordering::Equal => {
                self.parent[rb] = ra;
                self.rank[ra] += 1;
            }
        }
    }
}

/// Min-max path value between `a` and `b` on the 8-connected grid graph,
/// computed by activating nodes in ascending order of V and merging
/// neighbouring components until `a` and `b` share one.
pub fn communication_height_2d(model: &PotentialModel, a: &[f64], b: &[f64], spec: &GridSpec) -> Result<GateResult> {
    if model.dim() != 2 {
        return Err(invalid(format!("grid oracle needs d = 2, model has d = {}", model.dim())));
    }
    if spec.nx < 2 || spec.ny < 2 {
        return Err(invalid("grid needs at least two nodes per axis"));
    }
    for p in [a, b] {
        if p.len() != 2
            || p[0] < spec.x_range.0
            || p[0] > spec.x_range.1
            || p[1] < spec.y_range.0
            || p[1] > spec.y_range.1
        {
            return Err(invalid(format!("point {p:?} outside the grid box")));
        }
    }
    let hx = (spec.x_range.1 - spec.x_range.0) / (spec.nx - 1) as f64;
    let hy = (spec.y_range.1 - spec.y_range.0) / (spec.ny - 1) as f64;
    let mut grid = Grid {
        spec: *spec,
        hx,
        hy,
        values: Vec::new(),
    };
    let total = spec.nx * spec.ny;
    grid.values = (0..total).map(|n| model.value(&grid.coords(n))).collect();
    let ia = grid.nearest(a);
    let ib = grid.nearest(b);
    if ia == ib {
        let c = grid.coords(ia);
        return Ok(GateResult {
            communication_height: grid.values[ia],
            gate_cells: vec![c],
            path_witness: vec![c],
        });
    }

    let mut order: Vec<usize> = (0..total).collect();
    order.sort_by(|&p, &q| grid.values[p].total_cmp(&grid.values[q]).then(p.cmp(&q)));
    let mut uf = UnionFind::new(total);
    let mut active = vec![false; total];
    let mut merge_node = None;
    for &n in &order {
        active[n] = true;
        for m in grid.ring(n).into_iter().flatten() {
            if active[m] {
                uf.union(n, m);
            }
        }
        if active[ia] && active[ib] && uf.find(ia) == uf.find(ib) {
            merge_node = Some(n);
            break;
        }
    }
    let merge = merge_node.ok_or_else(|| invalid("endpoints never connected on the grid"))?;
    let height = grid.values[merge];

    let tol = spec.gate_tol.unwrap_or_else(|| {
        2.0 * grid
            .ring(merge)
            .into_iter()
            .flatten()
            .map(|m| (grid.values[m] - height).abs())
            .fold(0.0, f64::max)
    });

    // Nodes reachable from a within {V ≤ height + tol}.
    let reach = flood(&grid, ia, height + tol);
    let mut gate_cells = vec![grid.coords(merge)];
    for n in 0..total {
        if n == merge || !reach[n] || (grid.values[n] - height).abs() > tol {
            continue;
        }
        if lower_arcs(&grid, n) >= 2 {
            gate_cells.push(grid.coords(n));
        }
    }

    let path_witness = bfs_path(&grid, ia, ib, height)
        .ok_or_else(|| invalid("no path below the communication height (internal error)"))?
        .into_iter()
        .map(|n| grid.coords(n))
        .collect();

    Ok(GateResult {
        communication_height: height,
        gate_cells,
        path_witness,
    })
}

/// Number of connected arcs of strictly lower neighbours around `n`.
fn lower_arcs(grid: &Grid, n: usize) -> usize {
    let v = grid.values[n];
    let ring = grid.ring(n);
    if ring.iter().any(Option::is_none) {
        return 0;
    }
    let low: Vec<bool> = ring.iter().map(|m| grid.values[m.unwrap()] < v).collect();
    (0..8).filter(|&k| low[k] && !low[(k + 7) % 8]).count()
}

fn flood(grid: &Grid, start: usize, level: f64) -> Vec<bool> {
    let mut seen = vec![false; grid.values.len()];
    let mut queue = VecDeque::from([start]);
    seen[start] = true;
    while let Some(n) = queue.pop_front() {
        for m in grid.ring(n).into_iter().flatten() {
            if !seen[m] && grid.values[m] <= level {
                seen[m] = true;
                queue.push_back(m);
            }
        }
    }
    seen
}

fn bfs_path(grid: &Grid, from: usize, to: usize, level: f64) -> Option<Vec<usize>> {
    let mut prev = vec![usize::MAX; grid.values.len()];
    let mut queue = VecDeque::from([from]);
    prev[from] = from;
    while let Some(n) = queue.pop_front() {
        if n == to {
            let mut path = vec![to];
            let mut c = to;
            while c != from {
                c = prev[c];
                path.push(c);
            }
            path.reverse();
            return Some(path);
        }
        for m in grid.ring(n).into_iter().flatten() {
            if prev[m] == usize::MAX && grid.values[m] <= level {
                prev[m] = n;
                queue.push_back(m);
            }
        }
    }
    None
}
