//! Classical state-wise retrograde analysis with a perfect ranking function.
//!
//! Serves as the exhaustive correctness oracle for the set-based engine.
//! Each partition stores a dense array of 4-bit values indexed by the
//! mixed-radix rank of the deal, so rank order equals canonical order.

use std::collections::HashMap;

use crate::cards::{Player, Suit, Trump};
use crate::deal::{self, first_deal, next_suit_permutation, CanonicalDeal};
use crate::prior::PriorDb;
use crate::rules::{trick_value, Value};
use crate::shape::Shape;
use crate::store::Partition;
use crate::{Error, Result};

pub(crate) fn binomial(n: u64, k: u64) -> u64 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut result = 1u64;
    for i in 0..k {
        result = result * (n - i) / (i + 1);
    }
    result
}

/// Number of distinct arrangements of a multiset with the given
/// multiplicities: `(sum)! / prod(counts!)`.
pub(crate) fn multinomial(counts: [u8; 4]) -> u64 {
    let mut remaining: u64 = counts.iter().map(|&c| c as u64).sum();
    let mut result = 1u64;
    for &c in &counts {
        result *= binomial(remaining, c as u64);
        remaining -= c as u64;
    }
    result
}

/// Bijection between the deals of one partition and `0..state_count`, in
/// canonical position order.
#[derive(Clone, Debug)]
pub struct StateIndexer {
    partition: Partition,
    /// Per-suit multiset permutation counts (the mixed radix).
    radices: [u64; 4],
}

impl StateIndexer {
    pub fn new(partition: Partition) -> StateIndexer {
        let mut radices = [1u64; 4];
        for suit in Suit::ALL {
            radices[suit.index()] = multinomial(partition.shape.column(suit));
        }
        StateIndexer { partition, radices }
    }

    pub fn partition(&self) -> &Partition {
        &self.partition
    }

    pub fn state_count(&self) -> u64 {
        self.radices.iter().product()
    }

    pub fn rank(&self, deal: &CanonicalDeal) -> u64 {
        debug_assert_eq!(deal.shape(), self.partition.shape);
        let mut rank = 0u64;
        for suit in Suit::ALL {
            let s = suit.index();
            rank = rank * self.radices[s]
                + word_rank(
                    deal.words()[s],
                    self.partition.shape.column(suit),
                );
        }
        rank
    }

    pub fn unrank(&self, index: u64) -> Result<CanonicalDeal> {
        let count = self.state_count();
        if index >= count {
            return Err(Error::IndexOutOfRange { index, count });
        }
        let mut remaining = index;
        let mut words = [0u32; 4];
        let mut counts = [0u8; 4];
        for suit in Suit::ALL.iter().rev() {
            let s = suit.index();
            let word_index = remaining % self.radices[s];
            remaining /= self.radices[s];
            let column = self.partition.shape.column(*suit);
            words[s] = word_unrank(word_index, column);
            counts[s] = column.iter().sum();
        }
        Ok(CanonicalDeal::from_parts(
            words,
            counts,
            self.partition.leader,
            self.partition.trump,
        ))
    }
}

/// Lexicographic rank of a holder word among all multiset permutations of
/// the column capacities, highest card most significant.
fn word_rank(word: u32, column: [u8; 4]) -> u64 {
    let n: u8 = column.iter().sum();
    let mut counts = column;
    let mut rank = 0u64;
    for pos in 0..n {
        let digit = deal::word_get(word, n + 1 - pos);
        for smaller in 0..digit {
            if counts[smaller as usize] > 0 {
                counts[smaller as usize] -= 1;
                rank += multinomial(counts);
                counts[smaller as usize] += 1;
            }
        }
        debug_assert!(counts[digit as usize] > 0, "word inconsistent with shape");
        counts[digit as usize] -= 1;
    }
    rank
}

fn word_unrank(mut index: u64, column: [u8; 4]) -> u32 {
    let n: u8 = column.iter().sum();
    let mut counts = column;
    let mut word = 0u32;
    for pos in 0..n {
        let rank_in_suit = n + 1 - pos;
        for digit in 0..4u8 {
            if counts[digit as usize] == 0 {
                continue;
            }
            counts[digit as usize] -= 1;
            let below = multinomial(counts);
            if index < below {
                word = deal::word_set(word, rank_in_suit, digit);
                break;
            }
            index -= below;
            counts[digit as usize] += 1;
        }
    }
    word
}

/// Iterate every deal of a partition in canonical position order.
pub fn iter_deals(partition: &Partition) -> DealIter {
    DealIter {
        partition: *partition,
        current: Some(first_deal(
            &partition.shape,
            partition.leader,
            partition.trump,
        )),
    }
}

pub struct DealIter {
    partition: Partition,
    current: Option<CanonicalDeal>,
}

impl Iterator for DealIter {
    type Item = CanonicalDeal;

    fn next(&mut self) -> Option<CanonicalDeal> {
        let out = self.current?;
        self.current = advance(&self.partition, &out);
        Some(out)
    }
}

/// Odometer step: advance the least significant suit that has a successor
/// permutation and reset every suit below it to its first word.
fn advance(partition: &Partition, deal: &CanonicalDeal) -> Option<CanonicalDeal> {
    for s in (0..4).rev() {
        let suit = Suit::from_index(s);
        let n = deal.suit_count(suit);
        if n == 0 {
            continue;
        }
        if let Some(mut next) = next_suit_permutation(deal, suit, n) {
            for lower in s + 1..4 {
                next = reset_suit(partition, &next, Suit::from_index(lower));
            }
            return Some(next);
        }
    }
    None
}

fn reset_suit(partition: &Partition, deal: &CanonicalDeal, suit: Suit) -> CanonicalDeal {
    let s = suit.index();
    let n = deal.suit_count(suit);
    if n == 0 {
        return *deal;
    }
    let mut remaining = partition.shape.column(suit);
    let mut word = 0u32;
    let mut rank = n + 1;
    for digit in 0..4u8 {
        while remaining[digit as usize] > 0 {
            word = deal::word_set(word, rank, digit);
            remaining[digit as usize] -= 1;
            rank -= 1;
        }
    }
    let mut words = deal.words();
    words[s] = word;
    let mut counts = [0u8; 4];
    for suit in Suit::ALL {
        counts[suit.index()] = deal.suit_count(suit);
    }
    CanonicalDeal::from_parts(words, counts, deal.leader(), deal.trump())
}

/// A fully built retrograde partition: 0.5 bytes per state.
#[derive(Clone)]
pub struct RetroDb {
    indexer: StateIndexer,
    /// Packed 4-bit values, low nibble = even index.
    values: Vec<u8>,
}

const RETRO_MAGIC: &[u8; 4] = b"RGDB";
const RETRO_VERSION: u16 = 1;

impl RetroDb {
    pub fn partition(&self) -> &Partition {
        self.indexer.partition()
    }

    pub fn indexer(&self) -> &StateIndexer {
        &self.indexer
    }

    pub fn state_count(&self) -> u64 {
        self.indexer.state_count()
    }

    pub fn value_at(&self, index: u64) -> Value {
        let byte = self.values[(index / 2) as usize];
        if index % 2 == 0 {
            byte & 0x0f
        } else {
            byte >> 4
        }
    }

    fn set_value_at(&mut self, index: u64, value: Value) {
        debug_assert!(value <= 13);
        let slot = &mut self.values[(index / 2) as usize];
        if index % 2 == 0 {
            *slot = (*slot & 0xf0) | value;
        } else {
            *slot = (*slot & 0x0f) | (value << 4);
        }
    }

    pub fn value(&self, deal: &CanonicalDeal) -> Value {
        self.value_at(self.indexer.rank(deal))
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let partition = self.partition();
        let mut out = Vec::with_capacity(33 + self.values.len());
        out.extend_from_slice(RETRO_MAGIC);
        out.extend_from_slice(&RETRO_VERSION.to_le_bytes());
        out.push(partition.tricks());
        out.push(partition.trump.code());
        out.push(partition.leader.seat_index());
        out.extend_from_slice(&partition.shape.seat_major_bytes());
        out.extend_from_slice(&self.state_count().to_le_bytes());
        out.extend_from_slice(&self.values);
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<RetroDb> {
        let header = Header::parse(bytes, RETRO_MAGIC, RETRO_VERSION)?;
        let state_count = header.read_u64(25)?;
        let body = header.body(33)?;
        let expected = state_count.div_ceil(2) as usize;
        if body.len() != expected {
            return Err(Error::Format {
                offset: 33,
                message: format!(
                    "value array is {} bytes, expected {expected}",
                    body.len()
                ),
            });
        }
        let indexer = StateIndexer::new(header.partition()?);
        if indexer.state_count() != state_count {
            return Err(Error::Format {
                offset: 25,
                message: format!(
                    "state count {state_count} does not match shape ({})",
                    indexer.state_count()
                ),
            });
        }
        Ok(RetroDb {
            indexer,
            values: body.to_vec(),
        })
    }
}

/// Shared header reader for the two partition file formats.
pub(crate) struct Header<'a> {
    bytes: &'a [u8],
    d: u8,
    trump: u8,
    leader: u8,
    shape: [u8; 16],
}

impl<'a> Header<'a> {
    pub(crate) fn parse(bytes: &'a [u8], magic: &[u8; 4], version: u16) -> Result<Header<'a>> {
        if bytes.len() < 9 {
            return Err(Error::Format {
                offset: bytes.len(),
                message: "truncated header".into(),
            });
        }
        if &bytes[0..4] != magic {
            return Err(Error::Format {
                offset: 0,
                message: format!(
                    "bad magic {:?}, expected {:?}",
                    &bytes[0..4],
                    std::str::from_utf8(magic).unwrap()
                ),
            });
        }
        let found = u16::from_le_bytes([bytes[4], bytes[5]]);
        if found != version {
            return Err(Error::Format {
                offset: 4,
                message: format!("unsupported version {found}"),
            });
        }
        if bytes.len() < 25 {
            return Err(Error::Format {
                offset: bytes.len(),
                message: "truncated header".into(),
            });
        }
        let mut shape = [0u8; 16];
        shape.copy_from_slice(&bytes[9..25]);
        Ok(Header {
            bytes,
            d: bytes[6],
            trump: bytes[7],
            leader: bytes[8],
            shape,
        })
    }

    pub(crate) fn read_u64(&self, offset: usize) -> Result<u64> {
        let end = offset + 8;
        if self.bytes.len() < end {
            return Err(Error::Format {
                offset: self.bytes.len(),
                message: "truncated header".into(),
            });
        }
        Ok(u64::from_le_bytes(
            self.bytes[offset..end].try_into().unwrap(),
        ))
    }

    pub(crate) fn body(&self, offset: usize) -> Result<&'a [u8]> {
        if self.bytes.len() < offset {
            return Err(Error::Format {
                offset: self.bytes.len(),
                message: "truncated file".into(),
            });
        }
        Ok(&self.bytes[offset..])
    }

    pub(crate) fn partition(&self) -> Result<Partition> {
        let shape = Shape::from_seat_major_bytes(&self.shape).map_err(|e| Error::Format {
            offset: 9,
            message: e.to_string(),
        })?;
        if shape.tricks() != self.d {
            return Err(Error::Format {
                offset: 6,
                message: format!("depth {} does not match shape ({})", self.d, shape.tricks()),
            });
        }
        let trump = Trump::from_code(self.trump).map_err(|e| Error::Format {
            offset: 7,
            message: e.to_string(),
        })?;
        let leader = Player::from_seat_index(self.leader).map_err(|e| Error::Format {
            offset: 8,
            message: e.to_string(),
        })?;
        Ok(Partition::new(shape, leader, trump))
    }
}

/// Build the retrograde database of one partition. Every deal is visited
/// exactly once in canonical order; `prior` must cover all partitions
/// reachable by one trick.
pub fn build_retro_db(partition: &Partition, prior: &dyn PriorDb) -> Result<RetroDb> {
    let indexer = StateIndexer::new(*partition);
    let state_count = indexer.state_count();
    let mut db = RetroDb {
        indexer,
        values: vec![0u8; state_count.div_ceil(2) as usize],
    };
    let mut visited = 0u64;
    for deal in iter_deals(partition) {
        debug_assert_eq!(db.indexer.rank(&deal), visited);
        let value = trick_value(&deal, &mut |ns_won, successor| {
            Ok(ns_won + prior.lookup(successor)?)
        })?;
        db.set_value_at(visited, value);
        visited += 1;
    }
    debug_assert_eq!(visited, state_count, "every state visited exactly once");
    Ok(db)
}

/// Prior view over a map of finalized retro partitions.
pub struct RetroPriorSet<'a> {
    pub dbs: &'a HashMap<Partition, RetroDb>,
}

impl PriorDb for RetroPriorSet<'_> {
    fn lookup(&self, deal: &CanonicalDeal) -> Result<Value> {
        let partition = Partition::new(deal.shape(), deal.leader(), deal.trump());
        match self.dbs.get(&partition) {
            Some(db) => Ok(db.value(deal)),
            None => Err(Error::MissingPartition(partition.id())),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prior::ZeroPrior;
    use crate::rules::minimax_value;

    fn single_suit_partition(d: u8) -> Partition {
        Partition::new(Shape::single_suit(d), Player::East, Trump::NoTrump)
    }

    #[test]
    fn binomials_and_multinomials() {
        assert_eq!(binomial(13, 8), 1287);
        assert_eq!(multinomial([2, 2, 2, 2]), 2520);
        assert_eq!(multinomial([3, 3, 3, 3]), 369_600);
        assert_eq!(multinomial([1, 1, 1, 1]), 24);
        assert_eq!(multinomial([0, 0, 0, 0]), 1);
    }

    #[test]
    fn first_deal_has_rank_zero() {
        for d in 1..=3 {
            let partition = single_suit_partition(d);
            let indexer = StateIndexer::new(partition);
            let first = first_deal(&partition.shape, partition.leader, partition.trump);
            assert_eq!(indexer.rank(&first), 0);
        }
    }

    #[test]
    fn rank_unrank_round_trip_all_24_deals() {
        // Independent enumeration: all 4! assignments of four cards.
        let partition = single_suit_partition(1);
        let indexer = StateIndexer::new(partition);
        assert_eq!(indexer.state_count(), 24);
        let mut seen = std::collections::HashSet::new();
        for index in 0..24 {
            let deal = indexer.unrank(index).unwrap();
            assert_eq!(indexer.rank(&deal), index);
            seen.insert(deal);
        }
        assert_eq!(seen.len(), 24);
        assert!(indexer.unrank(24).is_err());
    }

    #[test]
    fn rank_order_is_canonical_order() {
        let partition = single_suit_partition(2);
        let indexer = StateIndexer::new(partition);
        assert_eq!(indexer.state_count(), 2520);
        let mut expected = 0u64;
        for deal in iter_deals(&partition) {
            assert_eq!(indexer.rank(&deal), expected);
            assert_eq!(indexer.unrank(expected).unwrap(), deal);
            expected += 1;
        }
        assert_eq!(expected, 2520);
    }

    #[test]
    fn multi_suit_iteration_counts_match() {
        let shape = Shape::try_new([
            [1, 1, 0, 0],
            [1, 1, 0, 0],
            [1, 1, 0, 0],
            [1, 1, 0, 0],
        ])
        .unwrap();
        let partition = Partition::new(shape, Player::North, Trump::Spades);
        let indexer = StateIndexer::new(partition);
        assert_eq!(indexer.state_count(), 24 * 24);
        let deals: Vec<_> = iter_deals(&partition).collect();
        assert_eq!(deals.len(), 576);
        for (i, deal) in deals.iter().enumerate() {
            assert_eq!(indexer.rank(deal), i as u64);
        }
        // Strictly increasing positions.
        for pair in deals.windows(2) {
            assert!(pair[0].position() < pair[1].position());
        }
    }

    #[test]
    fn depth_one_values_follow_the_top_spade() {
        let partition = single_suit_partition(1);
        let db = build_retro_db(&partition, &ZeroPrior).unwrap();
        let indexer = StateIndexer::new(partition);
        for index in 0..db.state_count() {
            let deal = indexer.unrank(index).unwrap();
            let holder = deal.holder(crate::cards::Card::new(Suit::Spades, 5));
            let expected = holder.is_north_south() as u8;
            assert_eq!(db.value_at(index), expected);
            assert_eq!(minimax_value(&deal), expected);
        }
    }

    #[test]
    fn depth_two_matches_minimax_exhaustively() {
        let d1 = single_suit_partition(1);
        let mut dbs = HashMap::new();
        for leader in Player::ALL {
            let partition = Partition::new(d1.shape, leader, d1.trump);
            dbs.insert(partition, build_retro_db(&partition, &ZeroPrior).unwrap());
        }
        let d2 = single_suit_partition(2);
        let db = build_retro_db(&d2, &RetroPriorSet { dbs: &dbs }).unwrap();
        let indexer = StateIndexer::new(d2);
        for index in 0..db.state_count() {
            let deal = indexer.unrank(index).unwrap();
            assert_eq!(db.value_at(index), minimax_value(&deal));
        }
        // The appendix opening deal is worth two tricks.
        let first = first_deal(&d2.shape, d2.leader, d2.trump);
        assert_eq!(db.value(&first), 2);
    }

    #[test]
    fn missing_prior_is_reported_by_partition() {
        let dbs = HashMap::new();
        let err = build_retro_db(
            &single_suit_partition(2),
            &RetroPriorSet { dbs: &dbs },
        )
        .unwrap_err();
        match err {
            Error::MissingPartition(id) => {
                assert!(id.contains("4/NT/"), "unexpected partition id {id}")
            }
            other => panic!("expected missing partition, got {other}"),
        }
    }

    #[test]
    fn nibbles_pack_low_even() {
        let partition = single_suit_partition(1);
        let mut db = RetroDb {
            indexer: StateIndexer::new(partition),
            values: vec![0; 12],
        };
        db.set_value_at(0, 1);
        db.set_value_at(1, 2);
        assert_eq!(db.values[0], 0x21);
        assert_eq!(db.value_at(0), 1);
        assert_eq!(db.value_at(1), 2);
    }

    #[test]
    fn retro_file_round_trips() {
        let partition = single_suit_partition(1);
        let db = build_retro_db(&partition, &ZeroPrior).unwrap();
        let bytes = db.to_bytes();
        let back = RetroDb::from_bytes(&bytes).unwrap();
        assert_eq!(back.partition(), db.partition());
        for index in 0..db.state_count() {
            assert_eq!(back.value_at(index), db.value_at(index));
        }
        // Corrupt magic is rejected.
        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(matches!(
            RetroDb::from_bytes(&bad),
            Err(Error::Format { offset: 0, .. })
        ));
    }
}
