//! Sparse user-item rating storage, file ingestion and train/test splitting.
//!
//! External user and item ids are opaque integers (Epinions ids are sparse
//! and large); internally both are remapped to dense indices in
//! first-appearance order. [`RatingMatrix`] is immutable after construction
//! and safe to share across threads.

use std::collections::HashMap;
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Opaque external user identifier.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct UserId(pub u64);

/// Opaque external item identifier.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ItemId(pub u64);

impl fmt::Display for UserId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl fmt::Display for ItemId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Input file format. The format fixes the declared rating scale;
/// `GenericTriples` infers the scale from the observed data.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RatingFormat {
    FilmTrust,
    Epinions,
    GenericTriples,
}

impl RatingFormat {
    /// Declared scale bounds, or `None` when the scale is inferred.
    pub fn scale(self) -> Option<(f64, f64)> {
        match self {
            RatingFormat::FilmTrust => Some((0.5, 4.0)),
            RatingFormat::Epinions => Some((1.0, 5.0)),
            RatingFormat::GenericTriples => None,
        }
    }
}

impl FromStr for RatingFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "filmtrust" => Ok(RatingFormat::FilmTrust),
            "epinions" => Ok(RatingFormat::Epinions),
            "generic-triples" | "generic" => Ok(RatingFormat::GenericTriples),
            other => Err(Error::InvalidParams(format!(
                "unknown rating format `{other}` (expected filmtrust, epinions or generic-triples)"
            ))),
        }
    }
}

impl fmt::Display for RatingFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            RatingFormat::FilmTrust => "filmtrust",
            RatingFormat::Epinions => "epinions",
            RatingFormat::GenericTriples => "generic-triples",
        };
        f.write_str(s)
    }
}

/// Sparse user → item → rating store with the exact item → users transpose.
///
/// Invariants maintained by construction:
/// * every stored rating lies within `[scale_min, scale_max]`;
/// * the item index is the exact transpose of the per-user rows;
/// * no duplicate (user, item) pair.
#[derive(Debug, Clone)]
pub struct RatingMatrix {
    users: Vec<UserId>,
    items: Vec<ItemId>,
    user_lookup: HashMap<UserId, usize>,
    item_lookup: HashMap<ItemId, usize>,
    /// Per user: `(item index, rating)` sorted by item index.
    rows: Vec<Vec<(usize, f64)>>,
    /// Per item: rater user indices, sorted.
    raters: Vec<Vec<usize>>,
    scale_min: f64,
    scale_max: f64,
}

impl RatingMatrix {
    /// Builds a matrix from `(user, item, rating)` triples. Duplicate
    /// (user, item) pairs are resolved by keeping the last occurrence.
    pub fn from_triples(triples: &[(UserId, ItemId, f64)], scale_min: f64, scale_max: f64) -> Result<Self> {
        if !(scale_min.is_finite() && scale_max.is_finite()) || scale_min > scale_max {
            return Err(Error::InvalidParams(format!(
                "invalid scale bounds [{scale_min}, {scale_max}]"
            )));
        }

        let mut users = Vec::new();
        let mut items = Vec::new();
        let mut user_lookup = HashMap::new();
        let mut item_lookup = HashMap::new();
        let mut cells: HashMap<(usize, usize), f64> = HashMap::new();

        for &(u, i, r) in triples {
            if !r.is_finite() || r < scale_min || r > scale_max {
                return Err(Error::OutOfRange {
                    what: "rating",
                    range: "the declared scale",
                    value: r,
                });
            }
            let ui = *user_lookup.entry(u).or_insert_with(|| {
                users.push(u);
                users.len() - 1
            });
            let ii = *item_lookup.entry(i).or_insert_with(|| {
                items.push(i);
                items.len() - 1
            });
            cells.insert((ui, ii), r); // last write wins
        }

        let mut rows = vec![Vec::new(); users.len()];
        let mut raters = vec![Vec::new(); items.len()];
        for (&(ui, ii), &r) in &cells {
            rows[ui].push((ii, r));
            raters[ii].push(ui);
        }
        for row in &mut rows {
            row.sort_unstable_by_key(|&(ii, _)| ii);
        }
        for list in &mut raters {
            list.sort_unstable();
        }

        Ok(RatingMatrix {
            users,
            items,
            user_lookup,
            item_lookup,
            rows,
            raters,
            scale_min,
            scale_max,
        })
    }

    pub fn n_users(&self) -> usize {
        self.users.len()
    }

    pub fn n_items(&self) -> usize {
        self.items.len()
    }

    pub fn n_ratings(&self) -> usize {
        self.rows.iter().map(Vec::len).sum()
    }

    pub fn scale_min(&self) -> f64 {
        self.scale_min
    }

    pub fn scale_max(&self) -> f64 {
        self.scale_max
    }

    /// External user ids in dense-index order.
    pub fn users(&self) -> &[UserId] {
        &self.users
    }

    /// External item ids in dense-index order.
    pub fn items(&self) -> &[ItemId] {
        &self.items
    }

    pub fn user_index(&self, u: UserId) -> Option<usize> {
        self.user_lookup.get(&u).copied()
    }

    pub fn item_index(&self, i: ItemId) -> Option<usize> {
        self.item_lookup.get(&i).copied()
    }

    pub fn user_id(&self, index: usize) -> UserId {
        self.users[index]
    }

    pub fn item_id(&self, index: usize) -> ItemId {
        self.items[index]
    }

    /// A user's `(item index, rating)` row, sorted by item index.
    pub fn ratings_of(&self, user_index: usize) -> &[(usize, f64)] {
        &self.rows[user_index]
    }

    /// Sorted user indices that rated the item.
    pub fn raters_of(&self, item_index: usize) -> &[usize] {
        &self.raters[item_index]
    }

    pub fn rating(&self, u: UserId, i: ItemId) -> Option<f64> {
        let ui = self.user_index(u)?;
        let ii = self.item_index(i)?;
        self.rating_by_index(ui, ii)
    }

    pub fn rating_by_index(&self, user_index: usize, item_index: usize) -> Option<f64> {
        let row = &self.rows[user_index];
        row.binary_search_by_key(&item_index, |&(ii, _)| ii)
            .ok()
            .map(|pos| row[pos].1)
    }

    /// Arithmetic mean of the user's ratings.
    pub fn user_mean(&self, u: UserId) -> Result<f64> {
        let ui = self.user_index(u).ok_or(Error::UnknownUser(u))?;
        self.user_mean_by_index(ui).ok_or(Error::UnknownUser(u))
    }

    pub fn user_mean_by_index(&self, user_index: usize) -> Option<f64> {
        let row = &self.rows[user_index];
        if row.is_empty() {
            return None;
        }
        Some(row.iter().map(|&(_, r)| r).sum::<f64>() / row.len() as f64)
    }

    pub fn item_mean_by_index(&self, item_index: usize) -> Option<f64> {
        let list = &self.raters[item_index];
        if list.is_empty() {
            return None;
        }
        let sum: f64 = list
            .iter()
            .map(|&ui| self.rating_by_index(ui, item_index).expect("transpose consistency"))
            .sum();
        Some(sum / list.len() as f64)
    }

    pub fn global_mean(&self) -> Option<f64> {
        let n = self.n_ratings();
        if n == 0 {
            return None;
        }
        let sum: f64 = self.rows.iter().flatten().map(|&(_, r)| r).sum();
        Some(sum / n as f64)
    }

    /// Items rated by both users, as external ids sorted ascending.
    /// `u == v` yields the user's full item set.
    pub fn common_items(&self, u: UserId, v: UserId) -> Result<Vec<ItemId>> {
        let ui = self.user_index(u).ok_or(Error::UnknownUser(u))?;
        let vi = self.user_index(v).ok_or(Error::UnknownUser(v))?;
        let mut ids: Vec<ItemId> = if ui == vi {
            self.rows[ui].iter().map(|&(ii, _)| self.items[ii]).collect()
        } else {
            self.common_ratings(ui, vi)
                .iter()
                .map(|&(ii, _, _)| self.items[ii])
                .collect()
        };
        ids.sort_unstable();
        Ok(ids)
    }

    /// Sorted-merge intersection of two user rows: `(item index, r_u, r_v)`.
    pub(crate) fn common_ratings(&self, ui: usize, vi: usize) -> Vec<(usize, f64, f64)> {
        let a = &self.rows[ui];
        let b = &self.rows[vi];
        let mut out = Vec::new();
        let (mut x, mut y) = (0, 0);
        while x < a.len() && y < b.len() {
            match a[x].0.cmp(&b[y].0) {
                std::cmp::Ordering::Less => x += 1,
                std::cmp::Ordering::Greater => y += 1,
                std::cmp::Ordering::Equal => {
                    out.push((a[x].0, a[x].1, b[y].1));
                    x += 1;
                    y += 1;
                }
            }
        }
        out
    }

    /// All `(user, item, rating)` triples in dense (user, item) order.
    pub fn triples(&self) -> impl Iterator<Item = (UserId, ItemId, f64)> + '_ {
        self.rows.iter().enumerate().flat_map(move |(ui, row)| {
            row.iter().map(move |&(ii, r)| (self.users[ui], self.items[ii], r))
        })
    }

    /// Copy of the matrix with the given `(u, item)` entries removed.
    /// Dense indices are preserved, so rows referencing the remaining
    /// entries stay valid.
    pub fn without_user_items(&self, u: UserId, items: &[ItemId]) -> Result<RatingMatrix> {
        let ui = self.user_index(u).ok_or(Error::UnknownUser(u))?;
        let mut removed = Vec::new();
        for &i in items {
            let ii = self.item_index(i).ok_or(Error::UnknownItem(i))?;
            removed.push(ii);
        }
        let mut out = self.clone();
        out.rows[ui].retain(|&(ii, _)| !removed.contains(&ii));
        for &ii in &removed {
            out.raters[ii].retain(|&r| r != ui);
        }
        Ok(out)
    }

    /// Writes `user item rating` triples, one per line.
    pub fn write_triples<W: Write>(&self, w: &mut W) -> std::io::Result<()> {
        for (u, i, r) in self.triples() {
            writeln!(w, "{u} {i} {r}")?;
        }
        Ok(())
    }
}

/// Parses a plain-text rating triple file: one `user item rating` per line,
/// whitespace or comma separated, `#`-prefixed comment lines ignored.
pub fn parse_ratings_file<P: AsRef<Path>>(path: P, format: RatingFormat) -> Result<RatingMatrix> {
    let file = File::open(path.as_ref())?;
    let reader = BufReader::new(file);

    let declared = format.scale();
    let mut triples = Vec::new();
    for (lineno, line) in reader.lines().enumerate() {
        let line = line?;
        let lineno = lineno + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let normalized = trimmed.replace(',', " ");
        let fields: Vec<&str> = normalized.split_whitespace().collect();
        if fields.len() != 3 {
            return Err(Error::Parse {
                line: lineno,
                message: format!("expected `user item rating`, got {} field(s)", fields.len()),
            });
        }
        let user: u64 = fields[0].parse().map_err(|_| Error::Parse {
            line: lineno,
            message: format!("invalid user id `{}`", fields[0]),
        })?;
        let item: u64 = fields[1].parse().map_err(|_| Error::Parse {
            line: lineno,
            message: format!("invalid item id `{}`", fields[1]),
        })?;
        let rating: f64 = fields[2].parse().map_err(|_| Error::Parse {
            line: lineno,
            message: format!("invalid rating `{}`", fields[2]),
        })?;
        if !rating.is_finite() {
            return Err(Error::Parse {
                line: lineno,
                message: format!("non-finite rating `{}`", fields[2]),
            });
        }
        if let Some((lo, hi)) = declared {
            if rating < lo || rating > hi {
                return Err(Error::RatingOutOfScale {
                    line: lineno,
                    rating,
                    min: lo,
                    max: hi,
                });
            }
        }
        triples.push((UserId(user), ItemId(item), rating));
    }

    if triples.is_empty() {
        return Err(Error::EmptyFile);
    }

    let (lo, hi) = declared.unwrap_or_else(|| {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for &(_, _, r) in &triples {
            lo = lo.min(r);
            hi = hi.max(r);
        }
        (lo, hi)
    });
    RatingMatrix::from_triples(&triples, lo, hi)
}

/// A disjoint train/test partition of a source matrix.
#[derive(Debug, Clone)]
pub struct RatingSplit {
    pub train: RatingMatrix,
    pub test: RatingMatrix,
    pub seed: u64,
    pub test_fraction: f64,
}

/// Seeded uniform holdout over individual ratings.
///
/// The test set has `round(n_ratings * test_fraction)` entries drawn
/// uniformly without replacement; ratings of users with a single rating are
/// pinned to train so every such user stays trainable.
pub fn split_ratings(m: &RatingMatrix, test_fraction: f64, seed: u64) -> Result<RatingSplit> {
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(Error::OutOfRange {
            what: "test_fraction",
            range: "(0, 1)",
            value: test_fraction,
        });
    }

    let mut eligible: Vec<(usize, usize, f64)> = Vec::new();
    let mut pinned: Vec<(usize, usize, f64)> = Vec::new();
    for ui in 0..m.n_users() {
        let row = m.ratings_of(ui);
        let target = if row.len() >= 2 { &mut eligible } else { &mut pinned };
        for &(ii, r) in row {
            target.push((ui, ii, r));
        }
    }

    let total = eligible.len() + pinned.len();
    let want = ((total as f64) * test_fraction).round() as usize;
    let take = want.min(eligible.len());

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (test_slice, _) = eligible.partial_shuffle(&mut rng, take);
    let mut test_cells: Vec<(usize, usize, f64)> = test_slice.to_vec();
    test_cells.sort_unstable_by_key(|&(ui, ii, _)| (ui, ii));
    let picked: std::collections::HashSet<(usize, usize)> =
        test_cells.iter().map(|&(ui, ii, _)| (ui, ii)).collect();

    let mut train_triples = Vec::with_capacity(total - take);
    for ui in 0..m.n_users() {
        for &(ii, r) in m.ratings_of(ui) {
            if !picked.contains(&(ui, ii)) {
                train_triples.push((m.user_id(ui), m.item_id(ii), r));
            }
        }
    }
    let test_triples: Vec<_> = test_cells
        .iter()
        .map(|&(ui, ii, r)| (m.user_id(ui), m.item_id(ii), r))
        .collect();

    Ok(RatingSplit {
        train: RatingMatrix::from_triples(&train_triples, m.scale_min, m.scale_max)?,
        test: RatingMatrix::from_triples(&test_triples, m.scale_min, m.scale_max)?,
        seed,
        test_fraction,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write_temp(contents: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(contents.as_bytes()).unwrap();
        f
    }

    fn tiny(triples: &[(u64, u64, f64)], lo: f64, hi: f64) -> RatingMatrix {
        let t: Vec<_> = triples
            .iter()
            .map(|&(u, i, r)| (UserId(u), ItemId(i), r))
            .collect();
        RatingMatrix::from_triples(&t, lo, hi).unwrap()
    }

    #[test]
    fn parses_filmtrust_line() {
        let f = write_temp("1 5 3.5\n");
        let m = parse_ratings_file(f.path(), RatingFormat::FilmTrust).unwrap();
        assert_eq!(m.rating(UserId(1), ItemId(5)), Some(3.5));
        assert_eq!(m.scale_min(), 0.5);
        assert_eq!(m.scale_max(), 4.0);
    }

    #[test]
    fn parses_comma_separated_and_comments() {
        let f = write_temp("# comment\n1, 5, 3.5\n\n2,5,1.0\n");
        let m = parse_ratings_file(f.path(), RatingFormat::FilmTrust).unwrap();
        assert_eq!(m.n_ratings(), 2);
        assert_eq!(m.rating(UserId(2), ItemId(5)), Some(1.0));
    }

    #[test]
    fn empty_file_is_an_error() {
        let f = write_temp("");
        assert!(matches!(
            parse_ratings_file(f.path(), RatingFormat::FilmTrust),
            Err(Error::EmptyFile)
        ));
        let f = write_temp("# only comments\n\n");
        assert!(matches!(
            parse_ratings_file(f.path(), RatingFormat::FilmTrust),
            Err(Error::EmptyFile)
        ));
    }

    #[test]
    fn duplicate_lines_keep_last() {
        let f = write_temp("1 1 2.0\n1 1 3.0\n");
        let m = parse_ratings_file(f.path(), RatingFormat::FilmTrust).unwrap();
        assert_eq!(m.n_ratings(), 1);
        assert_eq!(m.rating(UserId(1), ItemId(1)), Some(3.0));
    }

    #[test]
    fn malformed_line_reports_line_number() {
        let f = write_temp("1 1 2.0\n1 oops 3.0\n");
        match parse_ratings_file(f.path(), RatingFormat::FilmTrust) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn out_of_scale_reports_line_number() {
        let f = write_temp("1 1 2.0\n2 1 9.0\n");
        match parse_ratings_file(f.path(), RatingFormat::FilmTrust) {
            Err(Error::RatingOutOfScale { line, rating, .. }) => {
                assert_eq!(line, 2);
                assert_eq!(rating, 9.0);
            }
            other => panic!("expected scale error, got {other:?}"),
        }
    }

    #[test]
    fn generic_format_infers_scale() {
        let f = write_temp("1 1 -2.0\n1 2 7.5\n");
        let m = parse_ratings_file(f.path(), RatingFormat::GenericTriples).unwrap();
        assert_eq!(m.scale_min(), -2.0);
        assert_eq!(m.scale_max(), 7.5);
    }

    #[test]
    fn user_mean_examples() {
        let m = tiny(&[(1, 1, 2.0), (1, 2, 4.0), (2, 1, 3.0)], 0.5, 4.0);
        assert_eq!(m.user_mean(UserId(1)).unwrap(), 3.0);
        assert_eq!(m.user_mean(UserId(2)).unwrap(), 3.0);
        let m = tiny(&[(1, 1, 0.5), (1, 2, 0.5), (1, 3, 4.0)], 0.5, 4.0);
        assert!((m.user_mean(UserId(1)).unwrap() - 5.0 / 3.0).abs() < 1e-12);
        assert!(matches!(m.user_mean(UserId(9)), Err(Error::UnknownUser(_))));
    }

    #[test]
    fn common_items_examples() {
        let m = tiny(
            &[
                (1, 1, 1.0),
                (1, 2, 1.0),
                (1, 3, 1.0),
                (2, 2, 1.0),
                (2, 3, 1.0),
                (2, 4, 1.0),
                (3, 9, 1.0),
            ],
            0.5,
            4.0,
        );
        assert_eq!(
            m.common_items(UserId(1), UserId(2)).unwrap(),
            vec![ItemId(2), ItemId(3)]
        );
        assert_eq!(
            m.common_items(UserId(1), UserId(1)).unwrap(),
            vec![ItemId(1), ItemId(2), ItemId(3)]
        );
        assert!(m.common_items(UserId(1), UserId(3)).unwrap().is_empty());
        assert!(m.common_items(UserId(1), UserId(42)).is_err());
    }

    #[test]
    fn transpose_is_consistent() {
        let m = tiny(
            &[(3, 7, 1.0), (3, 2, 2.0), (5, 7, 3.0), (9, 1, 4.0)],
            0.5,
            4.0,
        );
        let mut from_rows: Vec<(usize, usize)> = Vec::new();
        for ui in 0..m.n_users() {
            for &(ii, _) in m.ratings_of(ui) {
                from_rows.push((ui, ii));
            }
        }
        let mut from_index: Vec<(usize, usize)> = Vec::new();
        for ii in 0..m.n_items() {
            for &ui in m.raters_of(ii) {
                from_index.push((ui, ii));
            }
        }
        from_rows.sort_unstable();
        from_index.sort_unstable();
        assert_eq!(from_rows, from_index);
    }

    /// 100 ratings from users with >= 2 ratings each: the 0.2 holdout takes
    /// exactly 20, disjoint from train.
    #[test]
    fn split_counts_and_partition() {
        let mut triples = Vec::new();
        for u in 0..20u64 {
            for i in 0..5u64 {
                triples.push((u, i, 1.0 + ((u + i) % 4) as f64));
            }
        }
        let m = tiny(&triples, 1.0, 5.0);
        assert_eq!(m.n_ratings(), 100);
        let split = split_ratings(&m, 0.2, 7).unwrap();
        assert_eq!(split.test.n_ratings(), 20);
        assert_eq!(split.train.n_ratings(), 80);

        let test_pairs: std::collections::HashSet<_> =
            split.test.triples().map(|(u, i, _)| (u, i)).collect();
        for (u, i, _) in split.train.triples() {
            assert!(!test_pairs.contains(&(u, i)));
        }
        let mut union: Vec<_> = split.train.triples().chain(split.test.triples()).collect();
        union.sort_by_key(|&(u, i, _)| (u, i));
        let mut source: Vec<_> = m.triples().collect();
        source.sort_by_key(|&(u, i, _)| (u, i));
        assert_eq!(union, source);
    }

    #[test]
    fn split_is_deterministic() {
        let mut triples = Vec::new();
        for u in 0..15u64 {
            for i in 0..4u64 {
                triples.push((u, i, (1 + (u * i) % 4) as f64));
            }
        }
        let m = tiny(&triples, 1.0, 5.0);
        let a = split_ratings(&m, 0.3, 99).unwrap();
        let b = split_ratings(&m, 0.3, 99).unwrap();
        assert_eq!(a.train.triples().collect::<Vec<_>>(), b.train.triples().collect::<Vec<_>>());
        assert_eq!(a.test.triples().collect::<Vec<_>>(), b.test.triples().collect::<Vec<_>>());
        let c = split_ratings(&m, 0.3, 100).unwrap();
        assert_ne!(a.test.triples().collect::<Vec<_>>(), c.test.triples().collect::<Vec<_>>());
    }

    #[test]
    fn single_rating_users_stay_in_train() {
        let mut triples = vec![(999, 1, 2.0)];
        for u in 0..10u64 {
            for i in 0..10u64 {
                triples.push((u, i, 3.0));
            }
        }
        let m = tiny(&triples, 1.0, 5.0);
        for seed in 0..50 {
            let split = split_ratings(&m, 0.5, seed).unwrap();
            assert_eq!(split.train.rating(UserId(999), ItemId(1)), Some(2.0));
        }
    }

    #[test]
    fn split_rejects_bad_fraction() {
        let m = tiny(&[(1, 1, 2.0), (1, 2, 2.0)], 1.0, 5.0);
        assert!(split_ratings(&m, 0.0, 1).is_err());
        assert!(split_ratings(&m, 1.0, 1).is_err());
    }

    #[test]
    fn without_user_items_removes_only_requested() {
        let m = tiny(&[(1, 1, 2.0), (1, 2, 3.0), (2, 1, 4.0)], 1.0, 5.0);
        let masked = m.without_user_items(UserId(1), &[ItemId(1)]).unwrap();
        assert_eq!(masked.rating(UserId(1), ItemId(1)), None);
        assert_eq!(masked.rating(UserId(1), ItemId(2)), Some(3.0));
        assert_eq!(masked.rating(UserId(2), ItemId(1)), Some(4.0));
        // raters index updated too
        let ii = masked.item_index(ItemId(1)).unwrap();
        assert_eq!(masked.raters_of(ii).len(), 1);
    }

    mod properties {
        use super::*;
        use proptest::prelude::*;

        fn arb_matrix() -> impl Strategy<Value = RatingMatrix> {
            proptest::collection::vec(
                (0u64..12, 0u64..12, 1u64..=8),
                1..60,
            )
            .prop_map(|raw| {
                let triples: Vec<_> = raw
                    .into_iter()
                    .map(|(u, i, r)| (UserId(u), ItemId(i), r as f64 * 0.5))
                    .collect();
                RatingMatrix::from_triples(&triples, 0.5, 4.0).unwrap()
            })
        }

        proptest! {
            #[test]
            fn transpose_consistency(m in arb_matrix()) {
                let mut a: Vec<(usize, usize)> = Vec::new();
                for ui in 0..m.n_users() {
                    for &(ii, _) in m.ratings_of(ui) { a.push((ui, ii)); }
                }
                let mut b: Vec<(usize, usize)> = Vec::new();
                for ii in 0..m.n_items() {
                    for &ui in m.raters_of(ii) { b.push((ui, ii)); }
                }
                a.sort_unstable();
                b.sort_unstable();
                prop_assert_eq!(a, b);
            }

            #[test]
            fn split_partitions(m in arb_matrix(), seed in 0u64..1000) {
                prop_assume!(m.n_ratings() >= 2);
                let split = split_ratings(&m, 0.25, seed).unwrap();
                let mut union: Vec<_> = split.train.triples().chain(split.test.triples()).collect();
                union.sort_by_key(|&(u, i, _)| (u, i));
                let mut source: Vec<_> = m.triples().collect();
                source.sort_by_key(|&(u, i, _)| (u, i));
                prop_assert_eq!(union, source);
            }
        }
    }
}
