//! Symmetric sparse storage, a cached sparse LDLᵀ and PCG.

use faer::dyn_stack::{MemBuffer, MemStack};
use faer::sparse::linalg::cholesky::{
    factorize_symbolic_cholesky, CholeskySymbolicParams, LdltRef, SymbolicCholesky, SymbolicCholeskyRaw, SymmetricOrdering,
};
use faer::sparse::{SparseColMatRef, SymbolicSparseColMatRef};
use faer::{Conj, MatMut, Par, Side};
use serde::{Deserialize, Serialize};

use super::FemError;

const NONE: u32 = u32::MAX;

/// Square symmetric matrix in CSR with both triangles stored and sorted columns.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseSym {
    pub n: usize,
    pub row_ptr: Vec<usize>,
    pub col: Vec<u32>,
    pub val: Vec<f64>,
}

impl SparseSym {
    /// Zero matrix with the given (symmetric) row patterns.
    pub fn from_pattern(mut rows: Vec<Vec<u32>>) -> Self {
        let n = rows.len();
        let mut row_ptr = Vec::with_capacity(n + 1);
        row_ptr.push(0);
        let mut col = Vec::new();
        for r in &mut rows {
            r.sort_unstable();
            r.dedup();
            col.extend_from_slice(r);
            row_ptr.push(col.len());
        }
        let val = vec![0.0; col.len()];
        Self { n, row_ptr, col, val }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::from_pattern((0..n as u32).map(|i| vec![i]).collect());
        m.val.iter_mut().for_each(|v| *v = 1.0);
        m
    }

    /// Dense row-major input; entries with `|a| == 0` are dropped.
    pub fn from_dense(a: &[Vec<f64>]) -> Self {
        let n = a.len();
        let rows = (0..n).map(|i| (0..n as u32).filter(|&j| a[i][j as usize] != 0.0 || i == j as usize).collect()).collect();
        let mut m = Self::from_pattern(rows);
        for i in 0..n {
            for p in m.row_ptr[i]..m.row_ptr[i + 1] {
                m.val[p] = a[i][m.col[p] as usize];
            }
        }
        m
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut a = vec![vec![0.0; self.n]; self.n];
        for i in 0..self.n {
            for p in self.row_ptr[i]..self.row_ptr[i + 1] {
                a[i][self.col[p] as usize] = self.val[p];
            }
        }
        a
    }

    pub fn find(&self, i: usize, j: usize) -> Option<usize> {
        let r = &self.col[self.row_ptr[i]..self.row_ptr[i + 1]];
        r.binary_search(&(j as u32)).ok().map(|k| self.row_ptr[i] + k)
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.find(i, j).map_or(0.0, |p| self.val[p])
    }

    pub fn nnz(&self) -> usize {
        self.col.len()
    }

    pub fn matvec(&self, x: &[f64], y: &mut [f64]) {
        for (i, yi) in y.iter_mut().enumerate() {
            let mut s = 0.0;
            for p in self.row_ptr[i]..self.row_ptr[i + 1] {
                s += self.val[p] * x[self.col[p] as usize];
            }
            *yi = s;
        }
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.get(i, i)).collect()
    }
}

/// Jacobi-preconditioned conjugate gradients to relative residual `tol`.
pub fn pcg(a: &SparseSym, b: &[f64], tol: f64, max_iter: usize) -> Result<Vec<f64>, FemError> {
    let n = a.n;
    let minv: Vec<f64> = a.diagonal().iter().map(|&d| if d > 0.0 { 1.0 / d } else { 1.0 }).collect();
    let dot = |x: &[f64], y: &[f64]| x.iter().zip(y).map(|(a, b)| a * b).sum::<f64>();
    let bnorm = dot(b, b).sqrt();
    let mut x = vec![0.0; n];
    if bnorm == 0.0 {
        return Ok(x);
    }
    let mut r = b.to_vec();
    let mut z: Vec<f64> = r.iter().zip(&minv).map(|(r, m)| r * m).collect();
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut ap = vec![0.0; n];
    for _ in 0..max_iter {
        a.matvec(&p, &mut ap);
        let pap = dot(&p, &ap);
        if !(pap > 0.0) {
            return Err(FemError::Singular("conjugate gradients met a non-positive curvature direction".into()));
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        if dot(&r, &r).sqrt() <= tol * bnorm {
            return Ok(x);
        }
        for i in 0..n {
            z[i] = r[i] * minv[i];
        }
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    Err(FemError::Singular(format!("conjugate gradients did not converge in {max_iter} iterations")))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LinearSolverKind {
    #[default]
    Direct,
    Iterative,
}

/// Sparse LDLᵀ with a fixed symbolic analysis (AMD ordering, supernodal
/// when profitable). No pivoting: indefinite matrices factor as long as no
/// pivot vanishes.
pub struct LdltFactor {
    col_ptr: Vec<usize>,
    row_idx: Vec<usize>,
    symbolic: SymbolicCholesky<usize>,
    values: Vec<f64>,
    ready: bool,
}

impl std::fmt::Debug for LdltFactor {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("LdltFactor").field("n", &(self.col_ptr.len() - 1)).field("nnz_l", &self.values.len()).finish()
    }
}

impl LdltFactor {
    pub fn analyze(a: &SparseSym) -> Result<Self, FemError> {
        let col_ptr = a.row_ptr.clone();
        let row_idx: Vec<usize> = a.col.iter().map(|&c| c as usize).collect();
        let pattern = SymbolicSparseColMatRef::new_checked(a.n, a.n, &col_ptr, None, &row_idx);
        let symbolic =
            factorize_symbolic_cholesky(pattern, Side::Lower, SymmetricOrdering::Amd, CholeskySymbolicParams::default())
                .map_err(|e| FemError::Singular(format!("symbolic analysis failed: {e:?}")))?;
        let values = vec![0.0; symbolic.len_val()];
        Ok(Self { col_ptr, row_idx, symbolic, values, ready: false })
    }

    pub fn nnz_l(&self) -> usize {
        self.values.len()
    }

    /// Numeric factorization of `a`, which must share the analysed pattern.
    pub fn factor(&mut self, a: &SparseSym) -> Result<(), FemError> {
        debug_assert_eq!(a.row_ptr, self.col_ptr);
        self.ready = false;
        let mat = SparseColMatRef::new(
            SymbolicSparseColMatRef::new_checked(a.n, a.n, &self.col_ptr, None, &self.row_idx),
            &a.val,
        );
        let req = self.symbolic.factorize_numeric_ldlt_scratch::<f64>(Par::Seq, Default::default());
        let mut buf = MemBuffer::new(req);
        self.symbolic
            .factorize_numeric_ldlt(
                &mut self.values,
                mat,
                Side::Lower,
                Default::default(),
                Par::Seq,
                MemStack::new(&mut buf),
                Default::default(),
            )
            .map_err(|e| FemError::Singular(format!("LDLᵀ factorization failed: {e:?}")))?;
        let d = self.pivots();
        let scale = d.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if d.iter().any(|v| !v.is_finite() || v.abs() <= 1e-14 * scale) {
            return Err(FemError::Singular("zero pivot in LDLᵀ".into()));
        }
        self.ready = true;
        Ok(())
    }

    /// Diagonal of D in elimination order.
    fn pivots(&self) -> Vec<f64> {
        let mut d = Vec::with_capacity(self.col_ptr.len() - 1);
        match self.symbolic.raw() {
            SymbolicCholeskyRaw::Simplicial(s) => {
                let cp = s.col_ptr();
                for j in 0..s.nrows() {
                    d.push(self.values[cp[j]]);
                }
            }
            SymbolicCholeskyRaw::Supernodal(s) => {
                let begin = s.supernode_begin();
                let end = s.supernode_end();
                let vp = s.col_ptr_for_val();
                let rp = s.col_ptr_for_row_idx();
                for k in 0..s.n_supernodes() {
                    let ncols = end[k] - begin[k];
                    let nrows = ncols + (rp[k + 1] - rp[k]);
                    for j in 0..ncols {
                        d.push(self.values[vp[k] + j * nrows + j]);
                    }
                }
            }
        }
        d
    }

    pub fn negative_pivots(&self) -> usize {
        self.pivots().iter().filter(|&&v| v < 0.0).count()
    }

    pub fn solve_in_place(&self, x: &mut [f64]) {
        assert!(self.ready, "solve before a successful factorization");
        let n = x.len();
        let ldlt = LdltRef::new(&self.symbolic, &self.values);
        let req = self.symbolic.solve_in_place_scratch::<f64>(1, Par::Seq);
        let mut buf = MemBuffer::new(req);
        let rhs = MatMut::from_column_major_slice_mut(x, n, 1);
        ldlt.solve_in_place_with_conj(Conj::No, rhs, Par::Seq, MemStack::new(&mut buf));
    }
}

/// Constraint-reduced copy of a fixed-pattern matrix with a cached symbolic
/// factorization.
#[derive(Debug)]
pub struct ReducedSystem {
    /// Reduced index → full index.
    pub free: Vec<u32>,
    /// Full entry → reduced entry.
    map: Vec<u32>,
    pub a: SparseSym,
    factor: LdltFactor,
    pub last_negative_pivots: usize,
}

impl ReducedSystem {
    pub fn new(k: &SparseSym, constrained: &[bool]) -> Result<Self, FemError> {
        let mut red = vec![NONE; k.n];
        let mut free = Vec::new();
        for i in 0..k.n {
            if !constrained[i] {
                red[i] = free.len() as u32;
                free.push(i as u32);
            }
        }
        let rows: Vec<Vec<u32>> = free
            .iter()
            .map(|&i| {
                let i = i as usize;
                k.col[k.row_ptr[i]..k.row_ptr[i + 1]].iter().map(|&j| red[j as usize]).filter(|&j| j != NONE).collect()
            })
            .collect();
        let a = SparseSym::from_pattern(rows);
        let mut map = vec![NONE; k.nnz()];
        for i in 0..k.n {
            if red[i] == NONE {
                continue;
            }
            for p in k.row_ptr[i]..k.row_ptr[i + 1] {
                let j = k.col[p] as usize;
                if red[j] != NONE {
                    map[p] = a.find(red[i] as usize, red[j] as usize).unwrap() as u32;
                }
            }
        }
        let factor = LdltFactor::analyze(&a)?;
        Ok(Self { free, map, a, factor, last_negative_pivots: 0 })
    }

    pub fn load(&mut self, k: &SparseSym) {
        self.a.val.iter_mut().for_each(|v| *v = 0.0);
        for (p, &q) in self.map.iter().enumerate() {
            if q != NONE {
                self.a.val[q as usize] = k.val[p];
            }
        }
    }

    pub fn fill_nnz(&self) -> usize {
        self.factor.nnz_l()
    }

    /// Solve `K x = rhs` for the free entries of `x`; constrained entries of
    /// `x` hold `prescribed` and their coupling is moved to the right side.
    pub fn solve(
        &mut self,
        k: &SparseSym,
        rhs: &[f64],
        prescribed: &[f64],
        kind: LinearSolverKind,
    ) -> Result<Vec<f64>, FemError> {
        self.load(k);
        let mut x = prescribed.to_vec();
        let mut is_free = vec![false; k.n];
        for &i in &self.free {
            is_free[i as usize] = true;
        }
        for i in 0..k.n {
            if is_free[i] {
                x[i] = 0.0;
            }
        }
        let mut b: Vec<f64> = self
            .free
            .iter()
            .map(|&i| {
                let i = i as usize;
                let mut s = rhs[i];
                for p in k.row_ptr[i]..k.row_ptr[i + 1] {
                    let j = k.col[p] as usize;
                    if !is_free[j] {
                        s -= k.val[p] * prescribed[j];
                    }
                }
                s
            })
            .collect();
        match kind {
            LinearSolverKind::Direct => {
                self.factor.factor(&self.a)?;
                self.last_negative_pivots = self.factor.negative_pivots();
                self.factor.solve_in_place(&mut b);
            }
            LinearSolverKind::Iterative => {
                b = pcg(&self.a, &b, 1e-10, 20 * self.a.n.max(100))?;
            }
        }
        for (r, &i) in self.free.iter().enumerate() {
            x[i as usize] = b[r];
        }
        Ok(x)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    fn grid_laplacian(nx: usize, ny: usize) -> SparseSym {
        let id = |i: usize, j: usize| (i * ny + j) as u32;
        let mut rows = vec![Vec::new(); nx * ny];
        for i in 0..nx {
            for j in 0..ny {
                let r = &mut rows[id(i, j) as usize];
                r.push(id(i, j));
                if i > 0 { r.push(id(i - 1, j)); }
                if i + 1 < nx { r.push(id(i + 1, j)); }
                if j > 0 { r.push(id(i, j - 1)); }
                if j + 1 < ny { r.push(id(i, j + 1)); }
            }
        }
        let mut a = SparseSym::from_pattern(rows);
        for i in 0..a.n {
            for p in a.row_ptr[i]..a.row_ptr[i + 1] {
                a.val[p] = if a.col[p] as usize == i { 4.01 } else { -1.0 };
            }
        }
        a
    }

    #[test]
    fn indefinite_solve_and_inertia_match_dense_oracle() {
        // shifted Laplacian: eigenvalues 4.01 - 2cos(a) - 2cos(b) - 3 straddle zero
        let mut a = grid_laplacian(9, 7);
        for i in 0..a.n {
            let p = a.find(i, i).unwrap();
            a.val[p] -= 3.0;
        }
        let dense = nalgebra::DMatrix::from_fn(a.n, a.n, |i, j| a.get(i, j));
        let eig = nalgebra::SymmetricEigen::new(dense.clone());
        let negative = eig.eigenvalues.iter().filter(|&&v| v < 0.0).count();
        assert!(negative > 0 && negative < a.n);
        let b: Vec<f64> = (0..a.n).map(|i| ((i * 7) % 5) as f64 - 2.0).collect();
        let oracle = dense.lu().solve(&nalgebra::DVector::from_vec(b.clone())).unwrap();
        let mut rs = ReducedSystem::new(&a, &vec![false; a.n]).unwrap();
        let x = rs.solve(&a, &b, &vec![0.0; a.n], LinearSolverKind::Direct).unwrap();
        assert_eq!(rs.last_negative_pivots, negative);
        for i in 0..a.n {
            assert!((x[i] - oracle[i]).abs() < 1e-9 * (1.0 + oracle[i].abs()));
        }
    }

    #[test]
    fn constrained_entries_move_to_the_right_side() {
        let a = grid_laplacian(6, 5);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let x: Vec<f64> = (0..a.n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let mut b = vec![0.0; a.n];
        a.matvec(&x, &mut b);
        let mask: Vec<bool> = (0..a.n).map(|i| i % 4 == 0).collect();
        let prescribed: Vec<f64> = (0..a.n).map(|i| if mask[i] { x[i] } else { 0.0 }).collect();
        let mut rs = ReducedSystem::new(&a, &mask).unwrap();
        let got = rs.solve(&a, &b, &prescribed, LinearSolverKind::Direct).unwrap();
        for i in 0..a.n {
            assert!((got[i] - x[i]).abs() < 1e-10);
        }
    }

    #[test]
    fn ldl_and_pcg_agree_with_exact_solution() {
        let a = grid_laplacian(15, 12);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let x: Vec<f64> = (0..a.n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let mut b = vec![0.0; a.n];
        a.matvec(&x, &mut b);
        let mut rs = ReducedSystem::new(&a, &vec![false; a.n]).unwrap();
        let zero = vec![0.0; a.n];
        let xd = rs.solve(&a, &b, &zero, LinearSolverKind::Direct).unwrap();
        let xi = rs.solve(&a, &b, &zero, LinearSolverKind::Iterative).unwrap();
        for i in 0..a.n {
            assert!((xd[i] - x[i]).abs() < 1e-10);
            assert!((xi[i] - xd[i]).abs() < 1e-8);
        }
    }

    #[test]
    fn singular_matrix_is_reported() {
        let a = SparseSym::from_dense(&[vec![1.0, 1.0], vec![1.0, 1.0]]);
        let mut rs = ReducedSystem::new(&a, &[false, false]).unwrap();
        let r = rs.solve(&a, &[1.0, 1.0], &[0.0, 0.0], LinearSolverKind::Direct);
        assert!(matches!(r, Err(FemError::Singular(_))));
    }
}
