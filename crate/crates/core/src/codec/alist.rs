//! Sparse binary parity-check matrices and the plain-text alist format.
//!
//! The alist layout: `N M` (columns, rows), maximum column and row weights,
//! the per-column weights, the per-row weights, then one line of 1-based row
//! indices per column and one line of 1-based column indices per row.
//! Zero entries used as padding by irregular files are ignored on parse.

use crate::error::{Error, Result};

/// A sparse matrix over GF(2) stored as row and column adjacency.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SparseBinaryMatrix {
    rows: usize,
    cols: usize,
    row_neighbors: Vec<Vec<u32>>,
    col_neighbors: Vec<Vec<u32>>,
}

impl SparseBinaryMatrix {
    /// Builds a matrix from per-row column indices.
    pub fn from_rows(rows: usize, cols: usize, row_neighbors: Vec<Vec<u32>>) -> Result<Self> {
        if row_neighbors.len() != rows {
            return Err(Error::Asset(format!(
                "expected {rows} rows, got {}",
                row_neighbors.len()
            )));
        }
        let mut col_neighbors = vec![Vec::new(); cols];
        for (r, neigh) in row_neighbors.iter().enumerate() {
            for &c in neigh {
                if c as usize >= cols {
                    return Err(Error::Asset(format!(
                        "row {r} references column {c} out of {cols}"
                    )));
                }
                col_neighbors[c as usize].push(r as u32);
            }
        }
        let mut row_neighbors = row_neighbors;
        for neigh in row_neighbors.iter_mut() {
            neigh.sort_unstable();
            neigh.dedup();
        }
        for neigh in col_neighbors.iter_mut() {
            neigh.sort_unstable();
        }
        Ok(Self {
            rows,
            cols,
            row_neighbors,
            col_neighbors,
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, r: usize) -> &[u32] {
        &self.row_neighbors[r]
    }

    pub fn col(&self, c: usize) -> &[u32] {
        &self.col_neighbors[c]
    }

    /// True when every column has weight `col_weight` and every row
    /// `row_weight`.
    pub fn is_regular(&self, col_weight: usize, row_weight: usize) -> bool {
        self.col_neighbors.iter().all(|n| n.len() == col_weight)
            && self.row_neighbors.iter().all(|n| n.len() == row_weight)
    }

    /// True when no two rows share more than one column (girth at least 6
    /// in the Tanner graph).
    pub fn has_no_four_cycle(&self) -> bool {
        let mut seen = std::collections::HashSet::new();
        for col in &self.col_neighbors {
            for i in 0..col.len() {
                for j in (i + 1)..col.len() {
                    if !seen.insert((col[i], col[j])) {
                        return false;
                    }
                }
            }
        }
        true
    }

    /// Parses alist text.
    pub fn from_alist(text: &str) -> Result<Self> {
        let mut nums = text
            .split_whitespace()
            .map(|tok| {
                tok.parse::<i64>()
                    .map_err(|_| Error::Asset(format!("non-integer token `{tok}` in alist")))
            })
            .collect::<Result<Vec<_>>>()?
            .into_iter();
        let mut next = |what: &str| -> Result<i64> {
            nums.next()
                .ok_or_else(|| Error::Asset(format!("alist truncated before {what}")))
        };

        let cols = next("column count")? as usize;
        let rows = next("row count")? as usize;
        if rows == 0 || cols == 0 {
            return Err(Error::Asset("alist declares an empty matrix".into()));
        }
        let max_col = next("max column weight")? as usize;
        let max_row = next("max row weight")? as usize;

        let mut col_weights = Vec::with_capacity(cols);
        for c in 0..cols {
            let w = next("column weights")? as usize;
            if w > max_col {
                return Err(Error::Asset(format!(
                    "column {c} weight {w} exceeds declared maximum {max_col}"
                )));
            }
            col_weights.push(w);
        }
        let mut row_weights = Vec::with_capacity(rows);
        for r in 0..rows {
            let w = next("row weights")? as usize;
            if w > max_row {
                return Err(Error::Asset(format!(
                    "row {r} weight {w} exceeds declared maximum {max_row}"
                )));
            }
            row_weights.push(w);
        }

        let mut col_lists: Vec<Vec<u32>> = Vec::with_capacity(cols);
        for (c, &w) in col_weights.iter().enumerate() {
            let mut list = Vec::with_capacity(w);
            for _ in 0..w {
                let v = next("column adjacency")?;
                if v == 0 {
                    continue; // padding
                }
                if v < 1 || v as usize > rows {
                    return Err(Error::Asset(format!(
                        "column {c} references row {v} out of 1..={rows}"
                    )));
                }
                list.push((v - 1) as u32);
            }
            col_lists.push(list);
        }
        let mut row_lists: Vec<Vec<u32>> = Vec::with_capacity(rows);
        for (r, &w) in row_weights.iter().enumerate() {
            let mut list = Vec::with_capacity(w);
            for _ in 0..w {
                let v = next("row adjacency")?;
                if v == 0 {
                    continue;
                }
                if v < 1 || v as usize > cols {
                    return Err(Error::Asset(format!(
                        "row {r} references column {v} out of 1..={cols}"
                    )));
                }
                list.push((v - 1) as u32);
            }
            row_lists.push(list);
        }

        let matrix = Self::from_rows(rows, cols, row_lists)?;
        // Cross-check: the column lists must describe the same matrix.
        for (c, mut list) in col_lists.into_iter().enumerate() {
            list.sort_unstable();
            if list != matrix.col_neighbors[c] {
                return Err(Error::Asset(format!(
                    "alist column {c} adjacency disagrees with row adjacency"
                )));
            }
        }
        Ok(matrix)
    }

    /// Serializes to alist text (no padding; trailing newline included).
    pub fn to_alist(&self) -> String {
        let max_col = self.col_neighbors.iter().map(Vec::len).max().unwrap_or(0);
        let max_row = self.row_neighbors.iter().map(Vec::len).max().unwrap_or(0);
        let mut out = String::new();
        out.push_str(&format!("{} {}\n", self.cols, self.rows));
        out.push_str(&format!("{max_col} {max_row}\n"));
        let weights = |lists: &[Vec<u32>]| {
            lists
                .iter()
                .map(|l| l.len().to_string())
                .collect::<Vec<_>>()
                .join(" ")
        };
        out.push_str(&weights(&self.col_neighbors));
        out.push('\n');
        out.push_str(&weights(&self.row_neighbors));
        out.push('\n');
        for list in self.col_neighbors.iter().chain(&self.row_neighbors) {
            let line = list
                .iter()
                .map(|&i| (i + 1).to_string())
                .collect::<Vec<_>>()
                .join(" ");
            out.push_str(&line);
            out.push('\n');
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny() -> SparseBinaryMatrix {
        // H = [1 1 0 1; 0 1 1 0]
        SparseBinaryMatrix::from_rows(2, 4, vec![vec![0, 1, 3], vec![1, 2]]).unwrap()
    }

    #[test]
    fn alist_round_trip() {
        let m = tiny();
        let text = m.to_alist();
        let back = SparseBinaryMatrix::from_alist(&text).unwrap();
        assert_eq!(m, back);
    }

    #[test]
    fn rejects_inconsistent_adjacency() {
        let mut text = tiny().to_alist();
        // Corrupt one row-adjacency token (column 4 -> column 3 in row 0).
        text = text.replace("1 2 4", "1 2 3");
        assert!(SparseBinaryMatrix::from_alist(&text).is_err());
    }

    #[test]
    fn rejects_out_of_range_indices() {
        let text = "2 2\n1 1\n1 1\n1 1\n3\n1\n1\n2\n";
        assert!(SparseBinaryMatrix::from_alist(text).is_err());
    }

    #[test]
    fn four_cycle_detection() {
        let with_cycle =
            SparseBinaryMatrix::from_rows(2, 3, vec![vec![0, 1], vec![0, 1]]).unwrap();
        assert!(!with_cycle.has_no_four_cycle());
        assert!(tiny().has_no_four_cycle());
    }
}
