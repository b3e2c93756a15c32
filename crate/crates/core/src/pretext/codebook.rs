use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::fsutil::write_atomic;

pub const ALGORITHM: &str = "greedy-maxmin-hamming-v1";
pub const DEFAULT_COUNT: usize = 100;
pub const DEFAULT_GRID: usize = 9;
/// Environment variable naming the directory for cached codebooks.
pub const CACHE_ENV: &str = "PRETEXT_FORGE_CACHE";

/// Fixed, indexed set of tile orderings; the index is the puzzle class label.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PermutationCodebook {
    grid: usize,
    entries: Vec<Vec<u8>>,
    /// Minimum pairwise Hamming distance; `None` for a single entry.
    d_min: Option<usize>,
}

fn factorial(n: usize) -> usize {
    (1..=n).product()
}

/// All permutations of `0..n` in lexicographic order, flattened.
fn all_permutations(n: usize) -> Vec<u8> {
    let mut p: Vec<u8> = (0..n as u8).collect();
    let mut out = Vec::with_capacity(factorial(n) * n);
    loop {
        out.extend_from_slice(&p);
        // next lexicographic permutation
        let Some(i) = (0..n.saturating_sub(1)).rev().find(|&i| p[i] < p[i + 1]) else {
            return out;
        };
        let j = (i + 1..n)
            .rev()
            .find(|&j| p[j] > p[i])
            .expect("successor exists");
        p.swap(i, j);
        p[i + 1..].reverse();
    }
}

pub fn hamming(a: &[u8], b: &[u8]) -> usize {
    a.iter().zip(b).filter(|(x, y)| x != y).count()
}

impl PermutationCodebook {
    /// Greedy max-min Hamming selection over every permutation of `grid`
    /// elements. Entry 0 is the identity; each next entry maximizes the
    /// distance to its nearest chosen entry, ties going to the
    /// lexicographically smallest permutation.
    pub fn build(count: usize, grid: usize) -> Result<Self> {
        if !(2..=9).contains(&grid) {
            return Err(Error::Codebook(format!(
                "grid must be in 2..=9, got {grid}"
            )));
        }
        let max = factorial(grid);
        if count > max {
            return Err(Error::CountTooLarge { count, grid, max });
        }
        if count == 0 {
            return Err(Error::Codebook("count must be at least 1".into()));
        }
        let perms = all_permutations(grid);
        let mut nearest = vec![u8::MAX; max];
        let mut chosen = 0usize;
        let mut entries = Vec::with_capacity(count);
        let mut d_min = None;
        loop {
            let c = &perms[chosen * grid..(chosen + 1) * grid];
            entries.push(c.to_vec());
            if entries.len() == count {
                break;
            }
            let mut best = (0u8, 0usize);
            for (i, (p, near)) in perms.chunks_exact(grid).zip(nearest.iter_mut()).enumerate() {
                let d = hamming(p, c) as u8;
                if d < *near {
                    *near = d;
                }
                if *near > best.0 {
                    best = (*near, i);
                }
            }
            chosen = best.1;
            d_min = Some(best.0 as usize);
        }
        Ok(Self {
            grid,
            entries,
            d_min,
        })
    }

    pub fn default_set() -> Result<Self> {
        Self::build(DEFAULT_COUNT, DEFAULT_GRID)
    }

    /// Loads `codebook-g{grid}-n{count}.txt` from `dir`, building and
    /// storing it on a miss or when the cached copy does not match a fresh
    /// build's header.
    pub fn cached(count: usize, grid: usize, dir: &Path) -> Result<Self> {
        let path = dir.join(format!("codebook-g{grid}-n{count}.txt"));
        if let Ok(text) = std::fs::read_to_string(&path) {
            if let Ok(cb) = Self::parse(&text) {
                if cb.grid == grid && cb.len() == count {
                    return Ok(cb);
                }
            }
        }
        let cb = Self::build(count, grid)?;
        cb.save(&path)?;
        Ok(cb)
    }

    /// Uses the cache directory from [`CACHE_ENV`] when set.
    pub fn from_env(count: usize, grid: usize) -> Result<Self> {
        match std::env::var_os(CACHE_ENV) {
            Some(dir) if !dir.is_empty() => Self::cached(count, grid, &PathBuf::from(dir)),
            _ => Self::build(count, grid),
        }
    }

    pub fn grid(&self) -> usize {
        self.grid
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn d_min(&self) -> Option<usize> {
        self.d_min
    }

    pub fn entries(&self) -> &[Vec<u8>] {
        &self.entries
    }

    pub fn get(&self, index: usize) -> Result<&[u8]> {
        self.entries
            .get(index)
            .map(Vec::as_slice)
            .ok_or(Error::InvalidTarget {
                index,
                classes: self.entries.len(),
            })
    }

    pub fn index_of(&self, perm: &[u8]) -> Option<usize> {
        self.entries.iter().position(|e| e == perm)
    }

    /// Smallest Hamming distance over all pairs, computed directly.
    pub fn pairwise_min_distance(&self) -> Option<usize> {
        let mut best = None;
        for (i, a) in self.entries.iter().enumerate() {
            for b in &self.entries[i + 1..] {
                let d = hamming(a, b);
                best = Some(best.map_or(d, |x: usize| x.min(d)));
            }
        }
        best
    }

    pub fn to_text(&self) -> String {
        let d = self
            .d_min
            .map_or_else(|| "none".to_string(), |d| d.to_string());
        let mut s = format!(
            "# grid={} count={} algorithm={ALGORITHM} d_min={d}\n",
            self.grid,
            self.len()
        );
        for e in &self.entries {
            let row: Vec<String> = e.iter().map(u8::to_string).collect();
            writeln!(s, "{}", row.join(",")).expect("string write");
        }
        s
    }

    pub fn parse(text: &str) -> Result<Self> {
        let bad = |m: String| Error::Codebook(m);
        let mut lines = text.lines();
        let header = lines.next().ok_or_else(|| bad("empty file".into()))?;
        let fields = header
            .strip_prefix("# ")
            .ok_or_else(|| bad("missing header".into()))?;
        let (mut grid, mut count, mut algo, mut d_min) = (None, None, None, None);
        for kv in fields.split_whitespace() {
            let (k, v) = kv
                .split_once('=')
                .ok_or_else(|| bad(format!("bad header field `{kv}`")))?;
            match k {
                "grid" => grid = v.parse::<usize>().ok(),
                "count" => count = v.parse::<usize>().ok(),
                "algorithm" => algo = Some(v.to_string()),
                "d_min" => {
                    d_min = Some(if v == "none" {
                        None
                    } else {
                        Some(
                            v.parse::<usize>()
                                .map_err(|_| bad(format!("bad d_min `{v}`")))?,
                        )
                    })
                }
                _ => return Err(bad(format!("unknown header field `{k}`"))),
            }
        }
        let (Some(grid), Some(count), Some(algo), Some(d_min)) = (grid, count, algo, d_min) else {
            return Err(bad("incomplete header".into()));
        };
        if algo != ALGORITHM {
            return Err(bad(format!("unsupported algorithm `{algo}`")));
        }
        let mut entries = Vec::with_capacity(count);
        for line in lines.filter(|l| !l.trim().is_empty()) {
            let e = line
                .split(',')
                .map(|t| t.trim().parse::<u8>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|_| bad(format!("bad entry `{line}`")))?;
            let mut sorted = e.clone();
            sorted.sort_unstable();
            if sorted != (0..grid as u8).collect::<Vec<_>>() {
                return Err(bad(format!("`{line}` is not a permutation of 0..{grid}")));
            }
            entries.push(e);
        }
        if entries.len() != count {
            return Err(bad(format!(
                "header says {count} entries, found {}",
                entries.len()
            )));
        }
        let cb = Self {
            grid,
            entries,
            d_min,
        };
        if cb.pairwise_min_distance() != d_min {
            return Err(bad("entries do not match the recorded d_min".into()));
        }
        Ok(cb)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        write_atomic(path, self.to_text().as_bytes())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn permutations_are_lexicographic() {
        let p = all_permutations(3);
        let rows: Vec<&[u8]> = p.chunks(3).collect();
        assert_eq!(
            rows,
            vec![
                &[0, 1, 2][..],
                &[0, 2, 1],
                &[1, 0, 2],
                &[1, 2, 0],
                &[2, 0, 1],
                &[2, 1, 0]
            ]
        );
        assert_eq!(all_permutations(9).len(), 362_880 * 9);
    }

    #[test]
    fn small_counts() {
        let one = PermutationCodebook::build(1, 9).unwrap();
        assert_eq!(one.entries(), &[vec![0, 1, 2, 3, 4, 5, 6, 7, 8]]);
        assert_eq!(one.d_min(), None);
        let two = PermutationCodebook::build(2, 9).unwrap();
        assert_eq!(two.entries()[1], vec![1, 0, 3, 2, 5, 4, 7, 8, 6]);
        assert_eq!(two.d_min(), Some(9));
    }

    #[test]
    fn count_limits() {
        assert!(matches!(
            PermutationCodebook::build(7, 3),
            Err(Error::CountTooLarge {
                count: 7,
                grid: 3,
                max: 6
            })
        ));
        assert!(PermutationCodebook::build(0, 3).is_err());
        let all = PermutationCodebook::build(6, 3).unwrap();
        assert_eq!(all.len(), 6);
        assert_eq!(all.d_min(), all.pairwise_min_distance());
    }

    #[test]
    fn text_round_trip() {
        let cb = PermutationCodebook::build(10, 4).unwrap();
        let back = PermutationCodebook::parse(&cb.to_text()).unwrap();
        assert_eq!(back, cb);
        let tampered = cb.to_text().replacen("0,1,2,3", "0,1,2,2", 1);
        assert!(PermutationCodebook::parse(&tampered).is_err());
    }

    #[test]
    fn cache_is_reused() {
        let dir = tempfile::tempdir().unwrap();
        let a = PermutationCodebook::cached(5, 4, dir.path()).unwrap();
        let path = dir.path().join("codebook-g4-n5.txt");
        let first = std::fs::read(&path).unwrap();
        let b = PermutationCodebook::cached(5, 4, dir.path()).unwrap();
        assert_eq!(a, b);
        assert_eq!(std::fs::read(&path).unwrap(), first);
    }
}
