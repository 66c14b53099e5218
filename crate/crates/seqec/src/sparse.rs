//! Sparse embedded operators.
//!
//! Gate matrices act on one or two qubits; embedded into an `n`-qubit
//! register they have at most `2^k` entries per row, so they are kept in CSR
//! form and cached by `(gate name, targets, n)`. Named-gate fast paths in
//! [`crate::dm`] cover the hot loops; this module serves the general case
//! (arbitrary unitaries, Kraus operators, projector algebra).

use crate::dm::{CMat, DensityMatrix, C_ZERO};
use crate::{Result, SimError};
use num_complex::Complex64;
use std::collections::HashMap;
use std::sync::{Arc, OnceLock, RwLock};

/// Compressed sparse row complex matrix.
#[derive(Clone, Debug)]
pub struct CsrMatrix {
    pub dim: usize,
    pub row_ptr: Vec<usize>,
    pub col_idx: Vec<u32>,
    pub vals: Vec<Complex64>,
}

impl CsrMatrix {
    pub fn identity(dim: usize) -> Self {
        Self {
            dim,
            row_ptr: (0..=dim).collect(),
            col_idx: (0..dim as u32).collect(),
            vals: vec![Complex64::new(1.0, 0.0); dim],
        }
    }

    pub fn from_dense(m: &CMat) -> Self {
        let dim = m.dim;
        let mut row_ptr = Vec::with_capacity(dim + 1);
        let mut col_idx = Vec::new();
        let mut vals = Vec::new();
        row_ptr.push(0);
        for r in 0..dim {
            for c in 0..dim {
                let v = m.get(r, c);
                if v.norm() > 0.0 {
                    col_idx.push(c as u32);
                    vals.push(v);
                }
            }
            row_ptr.push(col_idx.len());
        }
        Self { dim, row_ptr, col_idx, vals }
    }

    pub fn to_dense(&self) -> CMat {
        let mut m = CMat::zeros(self.dim);
        for r in 0..self.dim {
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                m.set(r, self.col_idx[k] as usize, self.vals[k]);
            }
        }
        m
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    /// Sparse-sparse product, used to check embedding composition laws.
    pub fn mul(&self, other: &Self) -> Self {
        assert_eq!(self.dim, other.dim);
        let dim = self.dim;
        let mut row_ptr = Vec::with_capacity(dim + 1);
        let mut col_idx = Vec::new();
        let mut vals = Vec::new();
        row_ptr.push(0);
        let mut acc: HashMap<u32, Complex64> = HashMap::new();
        for r in 0..dim {
            acc.clear();
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                let mid = self.col_idx[k] as usize;
                let v = self.vals[k];
                for k2 in other.row_ptr[mid]..other.row_ptr[mid + 1] {
                    *acc.entry(other.col_idx[k2]).or_insert(C_ZERO) += v * other.vals[k2];
                }
            }
            let mut cols: Vec<u32> = acc.keys().copied().collect();
            cols.sort_unstable();
            for c in cols {
                let v = acc[&c];
                if v.norm() > 1e-300 {
                    col_idx.push(c);
                    vals.push(v);
                }
            }
            row_ptr.push(col_idx.len());
        }
        Self { dim, row_ptr, col_idx, vals }
    }

    /// `out = A * rho * A^dagger`, accumulated into `out`.
    pub fn conj_apply_into(&self, rho: &DensityMatrix, out: &mut DensityMatrix) {
        let dim = self.dim;
        debug_assert_eq!(rho.dim(), dim);
        // B = A * rho
        let mut b = vec![C_ZERO; dim * dim];
        for r in 0..dim {
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                let mid = self.col_idx[k] as usize;
                let v = self.vals[k];
                let src = &rho.m.a[mid * dim..(mid + 1) * dim];
                let dst = &mut b[r * dim..(r + 1) * dim];
                for (d, s) in dst.iter_mut().zip(src.iter()) {
                    *d += v * s;
                }
            }
        }
        // out += B * A^dagger: out[r, c] += sum_k B[r, k] conj(A[c, k])
        for c in 0..dim {
            for k in self.row_ptr[c]..self.row_ptr[c + 1] {
                let mid = self.col_idx[k] as usize;
                let v = self.vals[k].conj();
                for r in 0..dim {
                    out.m.a[r * dim + c] += b[r * dim + mid] * v;
                }
            }
        }
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.to_dense().max_abs_diff(&other.to_dense())
    }
}

/// Embed a `k`-qubit operator on `targets` of an `n_qubits` register,
/// identity elsewhere. `targets[j]` carries bit `j` (most significant first)
/// of the small operator's own index space.
pub fn embed_operator(op: &CMat, targets: &[usize], n_qubits: usize) -> Result<CsrMatrix> {
    let k = targets.len();
    if op.dim != 1 << k {
        return Err(SimError::DimensionMismatch(format!(
            "{}x{} operator embedded on {k} targets",
            op.dim, op.dim
        )));
    }
    for (i, &t) in targets.iter().enumerate() {
        if t >= n_qubits || targets[..i].contains(&t) {
            return Err(SimError::BadTargets(targets.to_vec()));
        }
    }
    let dim = 1usize << n_qubits;
    let kk = 1usize << k;
    let tbits: Vec<usize> = targets.iter().map(|&q| 1usize << (n_qubits - 1 - q)).collect();

    let scatter = |a: usize| -> usize {
        let mut out = 0usize;
        for (j, tb) in tbits.iter().enumerate() {
            if (a >> (k - 1 - j)) & 1 == 1 {
                out |= tb;
            }
        }
        out
    };

    let mut row_ptr = Vec::with_capacity(dim + 1);
    let mut col_idx = Vec::new();
    let mut vals = Vec::new();
    row_ptr.push(0);
    for r in 0..dim {
        let mut a = 0usize;
        let mut rest = r;
        for (j, tb) in tbits.iter().enumerate() {
            if r & tb != 0 {
                a |= 1 << (k - 1 - j);
                rest &= !tb;
            }
        }
        for b in 0..kk {
            let v = op.get(a, b);
            if v.norm() > 0.0 {
                col_idx.push((rest | scatter(b)) as u32);
                vals.push(v);
            }
        }
        // CSR needs sorted columns within the row for deterministic output.
        let start = row_ptr[r];
        let mut pairs: Vec<(u32, Complex64)> = col_idx[start..]
            .iter()
            .copied()
            .zip(vals[start..].iter().copied())
            .collect();
        pairs.sort_unstable_by_key(|p| p.0);
        for (i, (c, v)) in pairs.into_iter().enumerate() {
            col_idx[start + i] = c;
            vals[start + i] = v;
        }
        row_ptr.push(col_idx.len());
    }
    Ok(CsrMatrix { dim, row_ptr, col_idx, vals })
}

#[derive(PartialEq, Eq, Hash, Clone)]
struct OpKey {
    gate: String,
    targets: Vec<usize>,
    n_qubits: usize,
}

static OP_CACHE: OnceLock<RwLock<HashMap<OpKey, Arc<CsrMatrix>>>> = OnceLock::new();

/// Embed a named gate with caching by `(gate, targets, n)`.
pub fn embed_named(name: &str, op: &CMat, targets: &[usize], n_qubits: usize) -> Result<Arc<CsrMatrix>> {
    let key = OpKey { gate: name.to_string(), targets: targets.to_vec(), n_qubits };
    let cache = OP_CACHE.get_or_init(|| RwLock::new(HashMap::new()));
    if let Some(hit) = cache.read().unwrap().get(&key) {
        return Ok(Arc::clone(hit));
    }
    let embedded = Arc::new(embed_operator(op, targets, n_qubits)?);
    cache
        .write()
        .unwrap()
        .entry(key)
        .or_insert_with(|| Arc::clone(&embedded));
    Ok(embedded)
}
