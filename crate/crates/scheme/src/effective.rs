use num_complex::Complex64;
use serde::ser::SerializeStruct;
use serde::{Serialize, Serializer};

use crate::{ComplexMatrix, SchemeError, StackedPattern};

/// Block-diagonal effective channel: block `m` holds the columns of the
/// pooled channel matrix seen by column `m` of the stacked pattern.
/// Column indices are stored 0-based and serialized 1-based.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EffectiveChannel {
    pub k: usize,
    pub m: usize,
    pub n: usize,
    pub l: usize,
    pub blocks: Vec<Vec<usize>>,
}

impl Serialize for EffectiveChannel {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let blocks: Vec<Vec<usize>> = self.blocks.iter().map(|b| b.iter().map(|j| j + 1).collect()).collect();
        let mut st = s.serialize_struct("EffectiveChannel", 2)?;
        st.serialize_field("T", &self.blocks.len())?;
        st.serialize_field("blocks", &blocks)?;
        st.end()
    }
}

impl EffectiveChannel {
    pub fn t(&self) -> usize {
        self.blocks.len()
    }

    /// Number of effective-channel columns (transmitted complex symbols).
    pub fn width(&self) -> usize {
        self.blocks.iter().map(Vec::len).sum()
    }

    /// Occurrences of each pooled column across blocks.
    pub fn occurrences(&self) -> Vec<usize> {
        let mut occ = vec![0; self.k * self.m];
        for b in &self.blocks {
            for &j in b {
                occ[j] += 1;
            }
        }
        occ
    }

    /// Dense `N·T × width` block-diagonal matrix. Effective columns follow
    /// block order, and within a block the pooled column order.
    pub fn assemble(&self, h: &ComplexMatrix) -> ComplexMatrix {
        let rows = h.rows() * self.t();
        let mut out = ComplexMatrix::zeros(rows, self.width());
        let mut col = 0;
        for (bi, b) in self.blocks.iter().enumerate() {
            for &j in b {
                for i in 0..h.rows() {
                    out.set(bi * h.rows() + i, col, h.get(i, j));
                }
                col += 1;
            }
        }
        out
    }

    /// Owning user (0-based) of each effective column, in `assemble` order.
    pub fn column_users(&self) -> Vec<usize> {
        self.blocks.iter().flatten().map(|j| j / self.m).collect()
    }
}

/// Blocks obtained by scanning the nonzero rows of each pattern column.
pub fn effective_structure(p: &StackedPattern) -> EffectiveChannel {
    let blocks = (0..p.t)
        .map(|c| (0..p.rows()).filter(|&r| p.cell(r, c).is_some()).collect())
        .collect();
    EffectiveChannel { k: p.k, m: p.m, n: p.n, l: p.l, blocks }
}

/// Closed-form blocks: the first `N−M+1` hold every column; in pair `v` the
/// first block keeps antennas `1..M−v` of every user and the second keeps
/// antennas `v+1..M`.
pub fn rule_blocks(m: usize, n: usize, l: usize, k: usize) -> Vec<Vec<usize>> {
    let all: Vec<usize> = (0..k * m).collect();
    let mut blocks = vec![all; n - m + 1];
    for v in 1..m - l {
        blocks.push((0..k).flat_map(|u| u * m..u * m + m - v).collect());
        blocks.push((0..k).flat_map(|u| u * m + v..u * m + m).collect());
    }
    blocks
}

/// Effective channel of `h` (N × kM) under `pattern`, checked against the
/// closed-form deletion rule.
pub fn effective_channel(h: &ComplexMatrix, pattern: &StackedPattern) -> Result<EffectiveChannel, SchemeError> {
    if h.rows() != pattern.n || h.cols() != pattern.rows() {
        return Err(SchemeError::Shape(format!(
            "H is {}×{}, pattern needs {}×{}",
            h.rows(),
            h.cols(),
            pattern.n,
            pattern.rows()
        )));
    }
    let eff = effective_structure(pattern);
    let rule = rule_blocks(pattern.m, pattern.n, pattern.l, pattern.k);
    if let Some(i) = (0..eff.t()).find(|&i| rule.get(i) != Some(&eff.blocks[i])) {
        return Err(SchemeError::RuleMismatch(i + 1));
    }
    if rule.len() != eff.t() {
        return Err(SchemeError::RuleMismatch(eff.t() + 1));
    }
    Ok(eff)
}

/// Number of blocks containing antenna `b` (1-based) of user `a` (0-based).
pub fn occurrence_count(m: usize, n: usize, l: usize, _a: usize, b: usize) -> usize {
    let free = m - l - 1;
    n - m + 1 + free.min(m - b) + free.min(b - 1)
}

/// Same count read off the pattern: nonzero cells in the antenna's row.
pub fn pattern_occurrence_count(p: &StackedPattern, a: usize, b: usize) -> usize {
    let row = a * p.m + b - 1;
    (0..p.t).filter(|&c| p.cell(row, c).is_some()).count()
}

/// Product of the per-block Gram determinants `|Ĥ_mᴴ Ĥ_m|`.
pub fn gram_determinant(h: &ComplexMatrix, eff: &EffectiveChannel) -> f64 {
    eff.blocks.iter().map(|b| h.select_columns(b).gram_det()).product()
}

/// Squared norm of column `column` after projecting out `preceding`, raised
/// to the number of blocks in which exactly that ordering occurs.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ColumnFactor {
    pub column: usize,
    pub preceding: Vec<usize>,
    pub norm_sq: f64,
    pub exponent: usize,
}

fn residual_norm_sq(h: &ComplexMatrix, j: usize, basis_cols: &[usize]) -> f64 {
    // modified Gram–Schmidt with one re-orthogonalization pass
    let mut q: Vec<Vec<Complex64>> = Vec::with_capacity(basis_cols.len());
    let project = |v: &mut Vec<Complex64>, q: &[Vec<Complex64>]| {
        for _ in 0..2 {
            for e in q {
                let dot: Complex64 = e.iter().zip(v.iter()).map(|(a, b)| a.conj() * b).sum();
                for (vi, ei) in v.iter_mut().zip(e) {
                    *vi -= dot * ei;
                }
            }
        }
    };
    for &c in basis_cols {
        let mut v = h.column(c).to_vec();
        project(&mut v, &q);
        let nrm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if nrm == 0.0 {
            return 0.0;
        }
        q.push(v.into_iter().map(|z| z / nrm).collect());
    }
    let mut v = h.column(j).to_vec();
    project(&mut v, &q);
    v.iter().map(|z| z.norm_sqr()).sum()
}

/// Per-column factorization of the Gram determinant by sequential orthogonal
/// projections; the product of `norm_sq^exponent` equals
/// [`gram_determinant`]. Columns and preceding sets are 1-based.
pub fn determinant_decomposition(h: &ComplexMatrix, eff: &EffectiveChannel) -> Vec<ColumnFactor> {
    let mut out: Vec<ColumnFactor> = Vec::new();
    for b in &eff.blocks {
        for (pos, &j) in b.iter().enumerate() {
            let preceding: Vec<usize> = b[..pos].iter().map(|x| x + 1).collect();
            if let Some(f) = out.iter_mut().find(|f| f.column == j + 1 && f.preceding == preceding) {
                f.exponent += 1;
            } else {
                out.push(ColumnFactor {
                    column: j + 1,
                    norm_sq: residual_norm_sq(h, j, &b[..pos]),
                    preceding,
                    exponent: 1,
                });
            }
        }
    }
    out.sort_by(|a, b| (a.column, &a.preceding).cmp(&(b.column, &b.preceding)));
    out
}
