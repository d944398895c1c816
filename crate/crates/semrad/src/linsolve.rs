//! Direct solution of the sparse symmetric system.
//!
//! The matrix graph is reordered with reverse Cuthill-McKee to shrink the
//! envelope, then factorized once as L D L^T within the envelope. Repeated
//! solves against one factorization are the hot path of the time loop.

use std::time::Instant;

use sprs::CsMat;

use crate::{Error, Result};

/// Bandwidth of a sparse matrix pattern under an optional permutation
/// (`perm[old] = new` position).
pub fn bandwidth(a: &CsMat<f64>, perm: Option<&[usize]>) -> usize {
    let mut bw = 0usize;
    for (i, row) in a.outer_iterator().enumerate() {
        for (j, _) in row.iter() {
            let (pi, pj) = match perm {
                Some(p) => (p[i], p[j]),
                None => (i, j),
            };
            bw = bw.max(pi.abs_diff(pj));
        }
    }
    bw
}

/// Reverse Cuthill-McKee ordering of a structurally symmetric matrix.
///
/// Returns `perm` with `perm[old_index] = new_index`. Each connected
/// component is ordered from a pseudo-peripheral seed found by repeated
/// breadth-first sweeps. If the reordering does not improve the bandwidth
/// the identity permutation is returned instead.
pub fn rcm_permutation(a: &CsMat<f64>) -> Vec<usize> {
    let n = a.rows();
    let adj: Vec<Vec<usize>> = {
        let mut adj = vec![Vec::new(); n];
        for (i, row) in a.outer_iterator().enumerate() {
            for (j, _) in row.iter() {
                if i != j {
                    adj[i].push(j);
                }
            }
        }
        for list in adj.iter_mut() {
            list.sort_unstable();
            list.dedup();
        }
        adj
    };
    let degree: Vec<usize> = adj.iter().map(|l| l.len()).collect();

    // BFS returning the visit order (Cuthill-McKee style: neighbors by
    // increasing degree) and the eccentricity.
    let bfs = |start: usize, visited: &mut [bool]| -> (Vec<usize>, usize) {
        let mut order = vec![start];
        visited[start] = true;
        let mut head = 0usize;
        let mut level_of = vec![0usize; n];
        while head < order.len() {
            let u = order[head];
            head += 1;
            let mut next: Vec<usize> = adj[u].iter().copied().filter(|&v| !visited[v]).collect();
            next.sort_by_key(|&v| (degree[v], v));
            for v in next {
                visited[v] = true;
                level_of[v] = level_of[u] + 1;
                order.push(v);
            }
        }
        let ecc = order.iter().map(|&v| level_of[v]).max().unwrap_or(0);
        (order, ecc)
    };

    let mut ordered: Vec<usize> = Vec::with_capacity(n);
    let mut assigned = vec![false; n];
    for seed0 in 0..n {
        if assigned[seed0] {
            continue;
        }
        // George-Liu style pseudo-peripheral search within this component.
        let mut scratch = assigned.clone();
        let (mut order, mut ecc) = bfs(seed0, &mut scratch);
        loop {
            let candidate = *order.last().unwrap();
            let mut scratch2 = assigned.clone();
            let (order2, ecc2) = bfs(candidate, &mut scratch2);
            if ecc2 > ecc {
                order = order2;
                ecc = ecc2;
            } else {
                break;
            }
        }
        let mut scratch3 = assigned.clone();
        let (component, _) = bfs(order[0], &mut scratch3);
        for &v in &component {
            assigned[v] = true;
        }
        ordered.extend(component);
    }

    // Reverse the Cuthill-McKee order.
    ordered.reverse();
    let mut perm = vec![0usize; n];
    for (new, &old) in ordered.iter().enumerate() {
        perm[old] = new;
    }
    if bandwidth(a, Some(&perm)) <= bandwidth(a, None) {
        perm
    } else {
        (0..n).collect()
    }
}

/// Envelope L D L^T factorization of a permuted symmetric matrix.
#[derive(Debug, Clone)]
pub struct Factorization {
    /// `perm[old] = new`.
    pub perm: Vec<usize>,
    pub n_dof: usize,
    /// Fill-in: envelope entries not present in the sparse pattern.
    pub fill_in: usize,
    /// Wall-clock seconds spent factorizing.
    pub factor_seconds: f64,
    /// First stored column of each row.
    band_start: Vec<usize>,
    /// Row-major envelope storage of L (unit diagonal not stored).
    rows: Vec<Vec<f64>>,
    diag: Vec<f64>,
}

/// Factorize `P A P^T` with the given permutation. `A` must be symmetric
/// positive definite.
pub fn factorize(a: &CsMat<f64>, perm: &[usize]) -> Result<Factorization> {
    let t0 = Instant::now();
    let n = a.rows();
    assert_eq!(perm.len(), n, "permutation length mismatch");

    // Envelope extents of the permuted matrix.
    let mut band_start: Vec<usize> = (0..n).collect();
    let mut nnz_lower = 0usize;
    for (i, row) in a.outer_iterator().enumerate() {
        for (j, _) in row.iter() {
            let (pi, pj) = (perm[i], perm[j]);
            if pj < pi {
                band_start[pi] = band_start[pi].min(pj);
                nnz_lower += 1;
            }
        }
    }
    let mut rows: Vec<Vec<f64>> = (0..n).map(|i| vec![0.0; i - band_start[i]]).collect();
    let mut diag = vec![0.0; n];
    for (i, row) in a.outer_iterator().enumerate() {
        for (j, &v) in row.iter() {
            let (pi, pj) = (perm[i], perm[j]);
            if pj < pi {
                rows[pi][pj - band_start[pi]] = v;
            } else if pj == pi {
                diag[pi] = v;
            }
        }
    }
    let envelope: usize = rows.iter().map(|r| r.len()).sum();
    let fill_in = envelope - nnz_lower;

    // In-place envelope LDL^T.
    let scale: f64 = diag.iter().fold(0.0f64, |m, d| m.max(d.abs())).max(1.0);
    for i in 0..n {
        let start_i = band_start[i];
        let (done, tail) = rows.split_at_mut(i);
        let row_i = &mut tail[0];
        for j in start_i..i {
            let start = start_i.max(band_start[j]);
            let mut acc = row_i[j - start_i];
            let row_j = &done[j];
            for k in start..j {
                acc -= row_i[k - start_i] * diag[k] * row_j[k - band_start[j]];
            }
            row_i[j - start_i] = acc / diag[j];
        }
        let mut d = diag[i];
        for k in start_i..i {
            let l = row_i[k - start_i];
            d -= l * l * diag[k];
        }
        if !(d > scale * 1e-14) {
            return Err(Error::NotPositiveDefinite { pivot: i, value: d });
        }
        diag[i] = d;
    }

    Ok(Factorization {
        perm: perm.to_vec(),
        n_dof: n,
        fill_in,
        factor_seconds: t0.elapsed().as_secs_f64(),
        band_start,
        rows,
        diag,
    })
}

impl Factorization {
    /// Solve `A x = b` using the stored factorization.
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.n_dof;
        assert_eq!(b.len(), n, "rhs length mismatch");
        // Forward: L y = P b.
        let mut y = vec![0.0; n];
        for (old, &new) in self.perm.iter().enumerate() {
            y[new] = b[old];
        }
        for i in 0..n {
            let start = self.band_start[i];
            let mut acc = y[i];
            let row = &self.rows[i];
            for (k, &l) in row.iter().enumerate() {
                acc -= l * y[start + k];
            }
            y[i] = acc;
        }
        // Diagonal scaling.
        for i in 0..n {
            y[i] /= self.diag[i];
        }
        // Backward: L^T x = y.
        for i in (0..n).rev() {
            let start = self.band_start[i];
            let yi = y[i];
            let row = &self.rows[i];
            for (k, &l) in row.iter().enumerate() {
                y[start + k] -= l * yi;
            }
        }
        // Un-permute.
        let mut x = vec![0.0; n];
        for (old, &new) in self.perm.iter().enumerate() {
            x[old] = y[new];
        }
        x
    }

    /// Solve and report the wall-clock duration in seconds.
    pub fn timed_solve(&self, b: &[f64]) -> (Vec<f64>, f64) {
        let t0 = Instant::now();
        let x = self.solve(b);
        (x, t0.elapsed().as_secs_f64())
    }
}

/// Median per-solve seconds over `repeats` timing samples, batching the
/// inner loop when a single solve is below the timer resolution.
pub fn median_solve_seconds(fact: &Factorization, b: &[f64], repeats: usize) -> f64 {
    let batch = {
        let (_, t) = fact.timed_solve(b);
        ((20e-6 / t.max(1e-9)).ceil() as usize).clamp(1, 10_000)
    };
    let mut times: Vec<f64> = (0..repeats.max(1))
        .map(|_| {
            let t0 = Instant::now();
            for _ in 0..batch {
                std::hint::black_box(fact.solve(std::hint::black_box(b)));
            }
            t0.elapsed().as_secs_f64() / batch as f64
        })
        .collect();
    times.sort_by(f64::total_cmp);
    times[times.len() / 2]
}

/// Sparse matvec helper (CSR).
pub fn matvec(a: &CsMat<f64>, x: &[f64]) -> Vec<f64> {
    let mut y = vec![0.0; a.rows()];
    for (i, row) in a.outer_iterator().enumerate() {
        let mut acc = 0.0;
        for (j, &v) in row.iter() {
            acc += v * x[j];
        }
        y[i] = acc;
    }
    y
}
