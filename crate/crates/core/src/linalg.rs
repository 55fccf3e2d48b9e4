//! Small direct linear-algebra kernel: triplet assembly plus an LU
//! factorization that switches between banded and dense storage.
//!
//! The meshes produced in this crate are structured, so after the natural
//! node ordering the system matrices are narrow-banded (tridiagonal in 1D,
//! bandwidth ~ nx in 2D). A banded LU with partial pivoting keeps repeated
//! solves cheap during the monotone iteration; dense LU is the fallback for
//! anything wide.

use nalgebra::{DMatrix, DVector};

use crate::error::{CoreError, Result};

/// Matrix in triplet (coordinate) form. Duplicate entries are summed.
#[derive(Debug, Clone)]
pub struct Triplets {
    pub n: usize,
    pub entries: Vec<(usize, usize, f64)>,
}

impl Triplets {
    pub fn new(n: usize) -> Self {
        Triplets {
            n,
            entries: Vec::new(),
        }
    }

    pub fn push(&mut self, row: usize, col: usize, value: f64) {
        debug_assert!(row < self.n && col < self.n);
        self.entries.push((row, col, value));
    }

    /// Half-bandwidths (kl, ku) of the assembled pattern.
    pub fn bandwidths(&self) -> (usize, usize) {
        let mut kl = 0usize;
        let mut ku = 0usize;
        for &(i, j, _) in &self.entries {
            if i > j {
                kl = kl.max(i - j);
            } else {
                ku = ku.max(j - i);
            }
        }
        (kl, ku)
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.n, self.n);
        for &(i, j, v) in &self.entries {
            m[(i, j)] += v;
        }
        m
    }

    /// Dump in coordinate-list text form (row, col, value), entries summed
    /// and sorted row-major.
    pub fn to_coo_text(&self) -> String {
        use std::collections::BTreeMap;
        let mut map: BTreeMap<(usize, usize), f64> = BTreeMap::new();
        for &(i, j, v) in &self.entries {
            *map.entry((i, j)).or_insert(0.0) += v;
        }
        let mut out = String::new();
        for ((i, j), v) in map {
            out.push_str(&format!("{} {} {:.17e}\n", i, j, v));
        }
        out
    }
}

/// LU factorization of a square system, banded or dense depending on the
/// pattern. Rows are equilibrated before factoring: boundary-condition rows
/// sit many orders of magnitude below shifted interior rows, and partial
/// pivoting alone then eliminates in an order that cancels catastrophically.
pub struct Factorized {
    /// per-row max-norm scales applied to the matrix and each rhs
    scales: Vec<f64>,
    route: Route,
}

enum Route {
    Banded(BandedLu),
    Dense(nalgebra::LU<f64, nalgebra::Dyn, nalgebra::Dyn>),
}

impl Factorized {
    pub fn solve(&self, rhs: &[f64]) -> Result<Vec<f64>> {
        if rhs.len() != self.scales.len() {
            return Err(CoreError::invalid("rhs length mismatch"));
        }
        let scaled: Vec<f64> = rhs
            .iter()
            .zip(&self.scales)
            .map(|(&b, &s)| b / s)
            .collect();
        match &self.route {
            Route::Banded(lu) => lu.solve(&scaled),
            Route::Dense(lu) => {
                let b = DVector::from_column_slice(&scaled);
                let x = lu
                    .solve(&b)
                    .ok_or_else(|| CoreError::NumericError("dense LU solve failed".into()))?;
                Ok(x.as_slice().to_vec())
            }
        }
    }

    pub fn is_banded(&self) -> bool {
        matches!(self.route, Route::Banded(_))
    }
}

/// Factor a triplet matrix, choosing banded storage when it pays off.
pub fn factor(t: &Triplets) -> Result<Factorized> {
    let n = t.n;
    if n == 0 {
        return Err(CoreError::invalid("empty system"));
    }
    let mut scales = vec![0.0f64; n];
    for &(i, _, v) in &t.entries {
        scales[i] = scales[i].max(v.abs());
    }
    if let Some(i) = scales.iter().position(|&s| !(s > 0.0) || !s.is_finite()) {
        return Err(CoreError::NumericError(format!(
            "row {i} is zero or non-finite"
        )));
    }
    let mut scaled = Triplets::new(n);
    for &(i, j, v) in &t.entries {
        scaled.push(i, j, v / scales[i]);
    }
    let (kl, ku) = scaled.bandwidths();
    // banded storage costs n*(2kl+ku+1); take it when clearly below dense
    let route = if n > 8 && (2 * kl + ku + 1) * 4 < n * 3 {
        Route::Banded(BandedLu::factor(&scaled, kl, ku)?)
    } else {
        let lu = scaled.to_dense().lu();
        if !lu.is_invertible() {
            return Err(CoreError::NumericError(
                "singular system (dense LU)".into(),
            ));
        }
        Route::Dense(lu)
    };
    Ok(Factorized { scales, route })
}

/// Banded LU with partial pivoting, LAPACK `gbtrf`-style storage: the
/// factored band has `kl` extra superdiagonals of fill.
pub struct BandedLu {
    n: usize,
    kl: usize,
    /// effective upper bandwidth after fill (= kl + ku)
    kue: usize,
    ab: Vec<f64>,
    ipiv: Vec<usize>,
}

impl BandedLu {
    #[inline]
    fn idx(&self, i: usize, j: usize) -> usize {
        // valid for j.saturating_sub(kue) <= i <= j + kl
        j * (self.kl + self.kue + 1) + (self.kue + i - j)
    }

    pub fn factor(t: &Triplets, kl: usize, ku: usize) -> Result<Self> {
        let n = t.n;
        let kue = kl + ku;
        let ldab = kl + kue + 1;
        let mut lu = BandedLu {
            n,
            kl,
            kue,
            ab: vec![0.0; ldab * n],
            ipiv: vec![0; n],
        };
        for &(i, j, v) in &t.entries {
            if i + kue < j || j + kl < i {
                return Err(CoreError::invalid("entry outside declared band"));
            }
            let k = lu.idx(i, j);
            lu.ab[k] += v;
        }
        for j in 0..n {
            let imax = (j + kl).min(n - 1);
            // partial pivot down the column
            let mut p = j;
            let mut best = lu.ab[lu.idx(j, j)].abs();
            for i in (j + 1)..=imax {
                let a = lu.ab[lu.idx(i, j)].abs();
                if a > best {
                    best = a;
                    p = i;
                }
            }
            lu.ipiv[j] = p;
            if best == 0.0 {
                return Err(CoreError::NumericError(format!(
                    "singular banded system at column {j}"
                )));
            }
            let cmax = (j + lu.kue).min(n - 1);
            if p != j {
                for c in j..=cmax {
                    let a = lu.idx(j, c);
                    let b = lu.idx(p, c);
                    lu.ab.swap(a, b);
                }
            }
            let pivot = lu.ab[lu.idx(j, j)];
            for i in (j + 1)..=imax {
                let l = lu.ab[lu.idx(i, j)] / pivot;
                let li = lu.idx(i, j);
                lu.ab[li] = l;
                if l != 0.0 {
                    for c in (j + 1)..=cmax {
                        let jc = lu.ab[lu.idx(j, c)];
                        let ic = lu.idx(i, c);
                        lu.ab[ic] -= l * jc;
                    }
                }
            }
        }
        Ok(lu)
    }

    pub fn solve(&self, rhs: &[f64]) -> Result<Vec<f64>> {
        if rhs.len() != self.n {
            return Err(CoreError::invalid("rhs length mismatch"));
        }
        let mut b = rhs.to_vec();
        for j in 0..self.n {
            let p = self.ipiv[j];
            if p != j {
                b.swap(j, p);
            }
            let bj = b[j];
            if bj != 0.0 {
                let imax = (j + self.kl).min(self.n - 1);
                for i in (j + 1)..=imax {
                    b[i] -= self.ab[self.idx(i, j)] * bj;
                }
            }
        }
        for j in (0..self.n).rev() {
            b[j] /= self.ab[self.idx(j, j)];
            let bj = b[j];
            if bj != 0.0 {
                let imin = j.saturating_sub(self.kue);
                for i in imin..j {
                    b[i] -= self.ab[self.idx(i, j)] * bj;
                }
            }
        }
        Ok(b)
    }
}
