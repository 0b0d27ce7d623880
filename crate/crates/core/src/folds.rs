use std::ops::Range;

use crate::error::{Error, Result};

/// Contiguous fold blocks by position: fold i covers `[i*m/k, (i+1)*m/k)`.
pub fn fold_ranges(m: usize, folds: usize) -> Result<Vec<Range<usize>>> {
    if folds < 2 || folds > m {
        return Err(Error::InvalidFolds { folds, m });
    }
    Ok((0..folds).map(|i| i * m / folds..(i + 1) * m / folds).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn blocks_partition_positions() {
        assert_eq!(fold_ranges(3, 2).unwrap(), vec![0..1, 1..3]);
        assert_eq!(fold_ranges(4, 4).unwrap(), vec![0..1, 1..2, 2..3, 3..4]);
        assert!(fold_ranges(3, 1).is_err());
        assert!(fold_ranges(2, 3).is_err());
        for m in 2..12 {
            for k in 2..=m {
                let r = fold_ranges(m, k).unwrap();
                assert_eq!(r.first().unwrap().start, 0);
                assert_eq!(r.last().unwrap().end, m);
                assert!(r.windows(2).all(|w| w[0].end == w[1].start));
                assert!(r.iter().all(|b| !b.is_empty()));
            }
        }
    }
}
