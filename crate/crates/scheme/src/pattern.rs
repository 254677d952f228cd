use macdmt_core::MacConfig;
use serde::{Deserialize, Serialize};

use crate::SchemeError;

/// One user's symbol placement: `m` antennas × `t` channel uses; each cell is
/// empty or carries a 1-based symbol index.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TransmissionPattern {
    pub m: usize,
    pub n: usize,
    pub l: usize,
    pub t: usize,
    cells: Vec<Vec<Option<usize>>>,
}

/// Placement of one appended column: (0-based column, 0-based antennas).
fn layout(m: usize, n: usize, l: usize) -> Vec<(usize, Vec<usize>)> {
    let dense = n - m + 1;
    let mut cols: Vec<(usize, Vec<usize>)> = (0..dense).map(|c| (c, (0..m).collect())).collect();
    // pair v carries M−v symbols per column: antennas 1..M−v, then v+1..M
    for v in 1..m - l {
        cols.push((dense + 2 * (v - 1), (0..m - v).collect()));
        cols.push((dense + 2 * (v - 1) + 1, (v..m).collect()));
    }
    cols
}

/// Pattern for `D_l = (MN − l(l+1)) / (N+M−1−2l)` average dimensions per
/// channel use. The first `N−M+1` columns are dense; each further pair of
/// columns drops one antenna from the bottom, then from the top. Symbols are
/// numbered column by column, antennas top to bottom.
pub fn build_pattern(m: usize, n: usize, l: usize) -> Result<TransmissionPattern, SchemeError> {
    if m == 0 || m > n {
        return Err(SchemeError::Range(format!("need 1 ≤ M ≤ N (M={m}, N={n})")));
    }
    if l >= m {
        return Err(SchemeError::Range(format!("level {l} outside 0..{m}")));
    }
    let t = n + m - 1 - 2 * l;
    let mut cells = vec![vec![None; t]; m];
    let mut next = 1;
    for (col, ants) in layout(m, n, l) {
        for a in ants {
            cells[a][col] = Some(next);
            next += 1;
        }
    }
    Ok(TransmissionPattern { m, n, l, t, cells })
}

impl TransmissionPattern {
    pub fn cell(&self, row: usize, col: usize) -> Option<usize> {
        self.cells[row][col]
    }

    pub fn symbol_count(&self) -> usize {
        self.cells.iter().flatten().filter(|c| c.is_some()).count()
    }

    /// Cells as 1-based `(row, col, symbol)` triples, column-major.
    pub fn triples(&self) -> Vec<[usize; 3]> {
        let mut out = Vec::new();
        for c in 0..self.t {
            for r in 0..self.m {
                if let Some(s) = self.cells[r][c] {
                    out.push([r + 1, c + 1, s]);
                }
            }
        }
        out
    }
}

/// How symbol indices are assigned across users in a stacked pattern.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Numbering {
    /// User `i` uses indices offset by `(i−1)(MN − l(l+1))`.
    #[default]
    PerUser,
    /// All users' dense blocks first, then each appended pair across users in
    /// turn — the labeling of the classic two-user, two-antenna example.
    ByLevel,
}

/// Patterns of the first `k` users stacked vertically.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StackedPattern {
    pub k: usize,
    pub m: usize,
    pub n: usize,
    pub l: usize,
    pub t: usize,
    pub users: Vec<TransmissionPattern>,
}

pub fn stack_patterns(cfg: &MacConfig, l: usize, k: usize) -> Result<StackedPattern, SchemeError> {
    stack_patterns_numbered(cfg, l, k, Numbering::PerUser)
}

pub fn stack_patterns_numbered(
    cfg: &MacConfig,
    l: usize,
    k: usize,
    numbering: Numbering,
) -> Result<StackedPattern, SchemeError> {
    if k == 0 || k > cfg.k {
        return Err(SchemeError::Range(format!("k={k} outside 1..={}", cfg.k)));
    }
    let base = build_pattern(cfg.m, cfg.n, l)?;
    let per_user = base.symbol_count();
    let mut users: Vec<TransmissionPattern> = vec![base.clone(); k];
    match numbering {
        Numbering::PerUser => {
            for (i, u) in users.iter_mut().enumerate() {
                for s in u.cells.iter_mut().flatten().flatten() {
                    *s += i * per_user;
                }
            }
        }
        Numbering::ByLevel => {
            let (m, n) = (cfg.m, cfg.n);
            let lay = layout(m, n, l);
            let dense = n - m + 1;
            let mut next = 1;
            for u in users.iter_mut() {
                for (col, ants) in &lay[..dense] {
                    for &a in ants {
                        u.cells[a][*col] = Some(next);
                        next += 1;
                    }
                }
            }
            for pair in lay[dense..].chunks(2) {
                for u in users.iter_mut() {
                    for (col, ants) in pair {
                        for &a in ants {
                            u.cells[a][*col] = Some(next);
                            next += 1;
                        }
                    }
                }
            }
        }
    }
    Ok(StackedPattern { k, m: cfg.m, n: cfg.n, l, t: base.t, users })
}

impl StackedPattern {
    pub fn rows(&self) -> usize {
        self.k * self.m
    }

    /// Cell of the stacked `kM × T` matrix (0-based).
    pub fn cell(&self, row: usize, col: usize) -> Option<usize> {
        self.users[row / self.m].cell(row % self.m, col)
    }

    pub fn symbol_count(&self) -> usize {
        self.users.iter().map(|u| u.symbol_count()).sum()
    }

    /// 1-based `(row, col, symbol)` triples, column-major.
    pub fn triples(&self) -> Vec<[usize; 3]> {
        let mut out = Vec::new();
        for c in 0..self.t {
            for r in 0..self.rows() {
                if let Some(s) = self.cell(r, c) {
                    out.push([r + 1, c + 1, s]);
                }
            }
        }
        out
    }

    /// Text grid with symbol indices and `.` for empty cells; a dashed line
    /// separates users.
    pub fn render(&self) -> String {
        let width = self.symbol_count().to_string().len().max(1);
        let mut s = String::new();
        for r in 0..self.rows() {
            if r > 0 && r % self.m == 0 {
                s.push_str(&"-".repeat(self.t * (width + 1) - 1));
                s.push('\n');
            }
            let row: Vec<String> = (0..self.t)
                .map(|c| match self.cell(r, c) {
                    Some(x) => format!("{x:>width$}"),
                    None => format!("{:>width$}", "."),
                })
                .collect();
            s.push_str(&row.join(" "));
            s.push('\n');
        }
        s
    }
}
