//! The set algebra: consistent sets of deals written as per-card holder
//! masks plus per-suit x-counts.
//!
//! A set fixes the partition (shape, leader, trump), constrains each ranked
//! card to a subset of holders (one bit per player, N,S,E,W from bit 0) and
//! leaves the lowest `x_count` cards of every suit interchangeable. Its
//! members are all deals of the partition satisfying every mask; the x cards
//! are placed freely within the shape.

use std::collections::HashMap;
use std::fmt;
use std::ops::ControlFlow;

use crate::cards::{rank_symbol, Player, Suit};
use crate::deal::{word_set, CanonicalDeal};
use crate::retro::multinomial;
use crate::rules::Value;
use crate::store::Partition;
use crate::{Error, Result};

/// Which players may hold a card: 4 bits in N, S, E, W order from bit 0.
/// A concrete state's mask has exactly one bit set.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct HolderMask(pub u8);

impl HolderMask {
    pub const ANY: HolderMask = HolderMask(0b1111);

    pub fn single(player: Player) -> HolderMask {
        HolderMask(1 << player.canonical_index())
    }

    pub fn allows(self, player: Player) -> bool {
        self.0 & (1 << player.canonical_index()) != 0
    }

    pub fn is_subset_of(self, other: HolderMask) -> bool {
        self.0 & !other.0 == 0
    }

    pub fn union(self, other: HolderMask) -> HolderMask {
        HolderMask(self.0 | other.0)
    }

    pub fn intersect(self, other: HolderMask) -> HolderMask {
        HolderMask(self.0 & other.0)
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn players(self) -> impl Iterator<Item = Player> {
        (0..4).filter_map(move |i| {
            (self.0 & (1 << i) != 0).then(|| Player::from_canonical_index(i))
        })
    }
}

impl fmt::Debug for HolderMask {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        // N,S,E,W order, matching the published diagrams.
        for player in Player::ALL {
            write!(f, "{}", self.allows(player) as u8)?;
        }
        Ok(())
    }
}

/// A consistent set with its exact value.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct SetEntry {
    partition: Partition,
    /// Per suit, masks for the top `n - x_count` cards, highest first.
    ranked: [Vec<HolderMask>; 4],
    x_counts: [u8; 4],
    value: Value,
}

impl SetEntry {
    /// Build an entry, normalizing trailing unconstrained ranked cards into
    /// x's so that equal member sets compare equal.
    pub fn try_new(
        partition: Partition,
        mut ranked: [Vec<HolderMask>; 4],
        mut x_counts: [u8; 4],
        value: Value,
    ) -> Result<SetEntry> {
        for suit in Suit::ALL {
            let s = suit.index();
            let n = partition.shape.suit_count(suit);
            if n == 0 {
                if x_counts[s] != 0 || !ranked[s].is_empty() {
                    return Err(Error::Invalid(format!(
                        "suit {suit} is not in play but carries cards"
                    )));
                }
                continue;
            }
            if x_counts[s] < 1 || x_counts[s] > n {
                return Err(Error::XCountOutOfRange {
                    count: x_counts[s],
                    in_play: n,
                });
            }
            if ranked[s].len() != (n - x_counts[s]) as usize {
                return Err(Error::Invalid(format!(
                    "suit {suit} has {} ranked masks for {} ranked cards",
                    ranked[s].len(),
                    n - x_counts[s]
                )));
            }
            if ranked[s].iter().any(|m| m.is_empty()) {
                return Err(Error::Invalid(format!("suit {suit} has an empty mask")));
            }
            // An unconstrained card just above the x region is an x.
            while ranked[s].last() == Some(&HolderMask::ANY) {
                ranked[s].pop();
                x_counts[s] += 1;
            }
        }
        let entry = SetEntry {
            partition,
            ranked,
            x_counts,
            value,
        };
        if entry.member_count() == 0 {
            return Err(Error::Invalid(
                "set entry has an empty member set".to_string(),
            ));
        }
        Ok(entry)
    }

    pub fn partition(&self) -> &Partition {
        &self.partition
    }

    pub fn value(&self) -> Value {
        self.value
    }

    pub fn x_count(&self, suit: Suit) -> u8 {
        self.x_counts[suit.index()]
    }

    pub fn total_x(&self) -> u8 {
        self.x_counts.iter().sum()
    }

    pub fn ranked_masks(&self, suit: Suit) -> &[HolderMask] {
        &self.ranked[suit.index()]
    }

    pub fn ranked_count(&self, suit: Suit) -> u8 {
        self.ranked[suit.index()].len() as u8
    }

    /// Mask of a card by suit and rank; x cards are unconstrained.
    pub fn mask(&self, suit: Suit, rank: u8) -> HolderMask {
        let s = suit.index();
        let n = self.partition.shape.suit_count(suit);
        debug_assert!(rank >= 2 && rank <= n + 1);
        if rank <= self.x_counts[s] + 1 {
            HolderMask::ANY
        } else {
            self.ranked[s][(n + 1 - rank) as usize]
        }
    }

    fn column(&self, suit: Suit) -> [u8; 4] {
        self.partition.shape.column(suit)
    }

    /// Number of member deals: per suit, mask-respecting assignments of the
    /// ranked cards weighted by the placements of the x block, multiplied
    /// across suits.
    pub fn member_count(&self) -> u64 {
        Suit::ALL
            .iter()
            .map(|&suit| {
                suit_assignment_count(&self.ranked[suit.index()], self.column(suit))
            })
            .product()
    }

    /// Stream every member deal once, in ascending canonical order, with
    /// early exit.
    pub fn for_each_member<F>(&self, mut f: F) -> ControlFlow<()>
    where
        F: FnMut(&CanonicalDeal) -> ControlFlow<()>,
    {
        let words: Vec<Vec<u32>> = Suit::ALL
            .iter()
            .map(|&suit| suit_words(&self.ranked[suit.index()], self.column(suit)))
            .collect();
        let mut counts = [0u8; 4];
        for suit in Suit::ALL {
            counts[suit.index()] = self.partition.shape.suit_count(suit);
        }
        let mut chosen = [0u32; 4];
        self.cross_product(&words, 0, &mut chosen, counts, &mut f)
    }

    fn cross_product<F>(
        &self,
        words: &[Vec<u32>],
        suit: usize,
        chosen: &mut [u32; 4],
        counts: [u8; 4],
        f: &mut F,
    ) -> ControlFlow<()>
    where
        F: FnMut(&CanonicalDeal) -> ControlFlow<()>,
    {
        if suit == 4 {
            let deal = CanonicalDeal::from_parts(
                *chosen,
                counts,
                self.partition.leader,
                self.partition.trump,
            );
            return f(&deal);
        }
        for &word in &words[suit] {
            chosen[suit] = word;
            self.cross_product(words, suit + 1, chosen, counts, f)?;
        }
        ControlFlow::Continue(())
    }
}

impl fmt::Debug for SetEntry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "SetEntry({self})")
    }
}

impl fmt::Display for SetEntry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for suit in Suit::ALL {
            let s = suit.index();
            let n = self.partition.shape.suit_count(suit);
            for (i, mask) in self.ranked[s].iter().enumerate() {
                if !first {
                    f.write_str(" ")?;
                }
                first = false;
                write!(f, "{}{}[", suit.glyph(), rank_symbol(n + 1 - i as u8))?;
                for player in mask.players() {
                    write!(f, "{}", player.letter())?;
                }
                f.write_str("]")?;
            }
            for _ in 0..self.x_counts[s] {
                if !first {
                    f.write_str(" ")?;
                }
                first = false;
                write!(f, "{}x", suit.glyph())?;
            }
        }
        write!(f, " => {}", self.value)
    }
}

/// Count of mask-respecting assignments of the ranked cards into the column
/// capacities, each weighted by the number of distinct x placements in the
/// remaining slots.
fn suit_assignment_count(masks: &[HolderMask], column: [u8; 4]) -> u64 {
    fn rec(
        masks: &[HolderMask],
        idx: usize,
        caps: [u8; 4],
        memo: &mut HashMap<(usize, [u8; 4]), u64>,
    ) -> u64 {
        if idx == masks.len() {
            return multinomial(caps);
        }
        if let Some(&v) = memo.get(&(idx, caps)) {
            return v;
        }
        let mut total = 0u64;
        for p in 0..4usize {
            if masks[idx].0 & (1 << p) != 0 && caps[p] > 0 {
                let mut next = caps;
                next[p] -= 1;
                total += rec(masks, idx + 1, next, memo);
            }
        }
        memo.insert((idx, caps), total);
        total
    }
    let mut memo = HashMap::new();
    rec(masks, 0, column, &mut memo)
}

/// All suit words consistent with the masks, ascending.
fn suit_words(masks: &[HolderMask], column: [u8; 4]) -> Vec<u32> {
    let n: u8 = column.iter().sum();
    if n == 0 {
        return vec![0];
    }
    let mut out = Vec::new();
    fn rec(
        masks: &[HolderMask],
        n: u8,
        rank: u8,
        caps: [u8; 4],
        word: u32,
        out: &mut Vec<u32>,
    ) {
        if rank < 2 {
            out.push(word);
            return;
        }
        let idx = (n + 1 - rank) as usize;
        let allowed = if idx < masks.len() { masks[idx].0 } else { 0b1111 };
        for p in 0..4u8 {
            if allowed & (1 << p) != 0 && caps[p as usize] > 0 {
                let mut next = caps;
                next[p as usize] -= 1;
                rec(masks, n, rank - 1, next, word_set(word, rank, p), out);
            }
        }
    }
    rec(masks, n, n + 1, column, 0, &mut out);
    out
}

/// Membership: same partition and every ranked card's holder bit set in its
/// mask. A partition mismatch is `false`, not an error.
pub fn member(entry: &SetEntry, deal: &CanonicalDeal) -> bool {
    if deal.leader() != entry.partition.leader
        || deal.trump() != entry.partition.trump
        || deal.shape() != entry.partition.shape
    {
        return false;
    }
    for suit in Suit::ALL {
        let s = suit.index();
        let n = entry.partition.shape.suit_count(suit);
        for (i, mask) in entry.ranked[s].iter().enumerate() {
            let rank = n + 1 - i as u8;
            if !mask.allows(deal.holder(crate::cards::Card::new(suit, rank))) {
                return false;
            }
        }
    }
    true
}

/// Every member deal exactly once.
pub fn enumerate_members(entry: &SetEntry) -> Vec<CanonicalDeal> {
    let mut out = Vec::new();
    entry.for_each_member(|deal| {
        out.push(*deal);
        ControlFlow::Continue(())
    });
    out
}

/// The candidate set of a deal at the given per-suit x-counts: ranked cards
/// carry the deal's holders as singleton masks, the bottom `x_counts[s]`
/// cards of each suit are x.
pub fn candidate_with_x_counts(deal: &CanonicalDeal, x_counts: [u8; 4]) -> Result<SetEntry> {
    candidate_with_value(deal, x_counts, 0)
}

/// As [`candidate_with_x_counts`] but carrying a value.
pub fn candidate_with_value(
    deal: &CanonicalDeal,
    x_counts: [u8; 4],
    value: Value,
) -> Result<SetEntry> {
    let partition = Partition::new(deal.shape(), deal.leader(), deal.trump());
    let mut ranked: [Vec<HolderMask>; 4] = Default::default();
    for suit in Suit::ALL {
        let s = suit.index();
        let n = partition.shape.suit_count(suit);
        if n == 0 {
            if x_counts[s] != 0 {
                return Err(Error::XCountOutOfRange {
                    count: x_counts[s],
                    in_play: 0,
                });
            }
            continue;
        }
        if x_counts[s] < 1 || x_counts[s] > n {
            return Err(Error::XCountOutOfRange {
                count: x_counts[s],
                in_play: n,
            });
        }
        for rank in (x_counts[s] + 2..=n + 1).rev() {
            ranked[s].push(HolderMask::single(
                deal.holder(crate::cards::Card::new(suit, rank)),
            ));
        }
    }
    SetEntry::try_new(partition, ranked, x_counts, value)
}

/// Whether `a`'s member set contains `b`'s, decided card-wise: `a` must have
/// at least as many x's per suit and every shared ranked card's mask of `b`
/// must be a subset of `a`'s.
pub fn subsumes(a: &SetEntry, b: &SetEntry) -> bool {
    if a.partition != b.partition {
        return false;
    }
    for suit in Suit::ALL {
        let s = suit.index();
        if a.x_counts[s] < b.x_counts[s] {
            return false;
        }
        for (i, mask_a) in a.ranked[s].iter().enumerate() {
            if !b.ranked[s][i].is_subset_of(*mask_a) {
                return false;
            }
        }
    }
    true
}

/// Merge two entries into one when their union is itself a mask-product
/// set: equal values, equal x-counts and identical masks except at exactly
/// one card, with the member count confirming union exactness. Also returns
/// the subsumer when one entry subsumes the other. `None` means the pair is
/// not mergeable.
pub fn try_merge(a: &SetEntry, b: &SetEntry) -> Option<SetEntry> {
    if a.partition != b.partition {
        return None;
    }
    if a.value == b.value {
        if subsumes(a, b) {
            return Some(a.clone());
        }
        if subsumes(b, a) {
            return Some(b.clone());
        }
    }
    if a.value != b.value || a.x_counts != b.x_counts {
        return None;
    }
    let mut diff: Option<(usize, usize)> = None;
    for s in 0..4 {
        for i in 0..a.ranked[s].len() {
            if a.ranked[s][i] != b.ranked[s][i] {
                if diff.is_some() {
                    return None;
                }
                diff = Some((s, i));
            }
        }
    }
    let (s, i) = diff?;
    let mut ranked = a.ranked.clone();
    ranked[s][i] = a.ranked[s][i].union(b.ranked[s][i]);
    let merged = SetEntry::try_new(a.partition, ranked, a.x_counts, a.value).ok()?;
    // Union exactness: |merged| = |a| + |b| - |a ∩ b|. The intersection of
    // two mask products differing at one card is the AND at that card.
    let mut inter = a.ranked.clone();
    inter[s][i] = a.ranked[s][i].intersect(b.ranked[s][i]);
    let inter_count = if inter[s][i].is_empty() {
        0
    } else {
        SetEntry {
            partition: a.partition,
            ranked: inter,
            x_counts: a.x_counts,
            value: a.value,
        }
        .member_count()
    };
    if merged.member_count() == a.member_count() + b.member_count() - inter_count {
        Some(merged)
    } else {
        None
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cards::Trump;
    use crate::deal::first_deal;
    use crate::retro::iter_deals;
    use crate::shape::Shape;

    fn eight_card_first() -> CanonicalDeal {
        first_deal(&Shape::single_suit(2), Player::East, Trump::NoTrump)
    }

    fn four_card_partition() -> Partition {
        Partition::new(Shape::single_suit(1), Player::East, Trump::NoTrump)
    }

    /// The published union entry: spade 9 and 8 with N or S, the rest x.
    fn fig4_union(value: Value) -> SetEntry {
        SetEntry::try_new(
            Partition::new(Shape::single_suit(2), Player::East, Trump::NoTrump),
            [
                vec![
                    HolderMask::single(Player::North).union(HolderMask::single(Player::South)),
                    HolderMask::single(Player::North).union(HolderMask::single(Player::South)),
                ],
                vec![],
                vec![],
                vec![],
            ],
            [6, 0, 0, 0],
            value,
        )
        .unwrap()
    }

    #[test]
    fn masks_print_in_ns_ew_order() {
        let ns = HolderMask::single(Player::North).union(HolderMask::single(Player::South));
        assert_eq!(format!("{ns:?}"), "1100");
        let ew = HolderMask::single(Player::East).union(HolderMask::single(Player::West));
        assert_eq!(format!("{ew:?}"), "0011");
    }

    #[test]
    fn fig4_union_membership() {
        let entry = fig4_union(2);
        let inside = CanonicalDeal::parse("N:98... E:54... S:76... W:32... leader=E trump=NT")
            .unwrap();
        assert!(member(&entry, &inside));
        let split = CanonicalDeal::parse("N:96... E:54... S:82... W:73... leader=E trump=NT")
            .unwrap();
        assert!(member(&entry, &split));
        let east_nine =
            CanonicalDeal::parse("N:87... E:95... S:64... W:32... leader=E trump=NT").unwrap();
        assert!(!member(&entry, &east_nine));
        // Partition mismatch is false, not an error.
        let other_leader =
            CanonicalDeal::parse("N:98... E:54... S:76... W:32... leader=N trump=NT").unwrap();
        assert!(!member(&entry, &other_leader));
    }

    #[test]
    fn concrete_entry_contains_exactly_itself() {
        let deal = eight_card_first();
        let entry = candidate_with_x_counts(&deal, [1, 0, 0, 0]).unwrap();
        assert!(member(&entry, &deal));
        assert_eq!(enumerate_members(&entry), vec![deal]);
        assert_eq!(entry.member_count(), 1);
    }

    #[test]
    fn fig1_right_has_90_members() {
        // N:98 fixed, six x's into S, E, W (two each).
        let deal = eight_card_first();
        let entry = candidate_with_x_counts(&deal, [6, 0, 0, 0]).unwrap();
        // Only N's cards stay ranked.
        assert_eq!(entry.ranked_count(Suit::Spades), 2);
        assert_eq!(entry.member_count(), 90);
        let members = enumerate_members(&entry);
        assert_eq!(members.len(), 90);
        assert!(members.iter().all(|m| member(&entry, m)));
        // All members distinct.
        let set: std::collections::HashSet<_> = members.iter().collect();
        assert_eq!(set.len(), 90);
    }

    #[test]
    fn member_agrees_with_enumeration_by_brute_force() {
        // Characteristic functions agree over the whole 2520-deal partition.
        let partition = Partition::new(Shape::single_suit(2), Player::East, Trump::NoTrump);
        let deal = eight_card_first();
        for x in 1..=8u8 {
            let entry = candidate_with_x_counts(&deal, [x.min(8), 0, 0, 0]).unwrap();
            let members: std::collections::HashSet<_> =
                enumerate_members(&entry).into_iter().collect();
            assert_eq!(members.len() as u64, entry.member_count());
            let mut hits = 0u64;
            for d in iter_deals(&partition) {
                let inside = member(&entry, &d);
                assert_eq!(inside, members.contains(&d));
                hits += inside as u64;
            }
            assert_eq!(hits, entry.member_count());
        }
    }

    #[test]
    fn fig4_union_count_is_the_sum_of_the_four_diagrams() {
        let partition = Partition::new(Shape::single_suit(2), Player::East, Trump::NoTrump);
        let n = HolderMask::single(Player::North);
        let s = HolderMask::single(Player::South);
        let diagrams: Vec<SetEntry> = [(n, n), (s, s), (n, s), (s, n)]
            .into_iter()
            .map(|(nine, eight)| {
                SetEntry::try_new(
                    partition,
                    [vec![nine, eight], vec![], vec![], vec![]],
                    [6, 0, 0, 0],
                    2,
                )
                .unwrap()
            })
            .collect();
        let union = fig4_union(2);
        // Brute-force filter over all 2520 deals of the partition.
        let mut union_hits = 0u64;
        let mut diagram_hits = 0u64;
        for d in iter_deals(&partition) {
            union_hits += member(&union, &d) as u64;
            diagram_hits += diagrams.iter().filter(|e| member(e, &d)).count() as u64;
        }
        assert_eq!(union_hits, diagram_hits);
        assert_eq!(union_hits, union.member_count());
    }

    #[test]
    fn candidates_match_the_published_sets() {
        let deal = eight_card_first();
        // Six x's: set f, N:98 and the rest x.
        let f = candidate_with_x_counts(&deal, [6, 0, 0, 0]).unwrap();
        assert_eq!(f.ranked_masks(Suit::Spades).len(), 2);
        assert!(f
            .ranked_masks(Suit::Spades)
            .iter()
            .all(|m| *m == HolderMask::single(Player::North)));
        // Seven x's: set g, N:9x and the rest x.
        let g = candidate_with_x_counts(&deal, [7, 0, 0, 0]).unwrap();
        assert_eq!(g.ranked_masks(Suit::Spades).len(), 1);
        assert!(member(&g, &deal));
        // One x: the concrete state itself.
        let concrete = candidate_with_x_counts(&deal, [1, 0, 0, 0]).unwrap();
        assert_eq!(concrete.member_count(), 1);
        // Out of range x-counts are rejected.
        assert!(matches!(
            candidate_with_x_counts(&deal, [9, 0, 0, 0]),
            Err(Error::XCountOutOfRange { .. })
        ));
        assert!(matches!(
            candidate_with_x_counts(&deal, [1, 1, 0, 0]),
            Err(Error::XCountOutOfRange { .. })
        ));
    }

    #[test]
    fn broader_candidates_subsume_narrower_ones() {
        let deal = eight_card_first();
        let f = candidate_with_x_counts(&deal, [6, 0, 0, 0]).unwrap();
        for x in 1..=6u8 {
            let narrower = candidate_with_x_counts(&deal, [x, 0, 0, 0]).unwrap();
            assert!(subsumes(&f, &narrower));
            assert!(subsumes(&narrower, &narrower), "subsumption is reflexive");
            if x < 6 {
                assert!(!subsumes(&narrower, &f));
            }
        }
    }

    #[test]
    fn subsumption_agrees_with_member_inclusion() {
        // Seeded random candidate pairs at two tricks; card-wise decision vs
        // brute-force member-set inclusion.
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0x5e7_ba5e);
        let partition = Partition::new(Shape::single_suit(2), Player::East, Trump::NoTrump);
        let indexer = crate::retro::StateIndexer::new(partition);
        for _ in 0..100 {
            let da = indexer.unrank(rng.gen_range(0..indexer.state_count())).unwrap();
            let db = indexer.unrank(rng.gen_range(0..indexer.state_count())).unwrap();
            let a = candidate_with_x_counts(&da, [rng.gen_range(1..=8), 0, 0, 0]).unwrap();
            let b = candidate_with_x_counts(&db, [rng.gen_range(1..=8), 0, 0, 0]).unwrap();
            let members_a: std::collections::HashSet<_> =
                enumerate_members(&a).into_iter().collect();
            let included = enumerate_members(&b).iter().all(|m| members_a.contains(m));
            assert_eq!(subsumes(&a, &b), included);
        }
    }

    #[test]
    fn merging_the_published_four_card_entries() {
        let partition = four_card_partition();
        let single = |p: Player, v: Value| {
            SetEntry::try_new(
                partition,
                [vec![HolderMask::single(p)], vec![], vec![], vec![]],
                [3, 0, 0, 0],
                v,
            )
            .unwrap()
        };
        let merged = try_merge(&single(Player::North, 1), &single(Player::South, 1)).unwrap();
        assert_eq!(format!("{:?}", merged.mask(Suit::Spades, 5)), "1100");
        assert_eq!(merged.value(), 1);
        // Different values never merge.
        assert!(try_merge(&single(Player::North, 1), &single(Player::South, 0)).is_none());
        // Merging an entry with its subsumer returns the subsumer.
        let wide = merged.clone();
        let narrow = single(Player::North, 1);
        assert_eq!(try_merge(&wide, &narrow), Some(wide.clone()));
    }

    #[test]
    fn iterated_merging_reaches_the_fig4_union() {
        let partition = Partition::new(Shape::single_suit(2), Player::East, Trump::NoTrump);
        let n = HolderMask::single(Player::North);
        let s = HolderMask::single(Player::South);
        let mk = |nine: HolderMask, eight: HolderMask| {
            SetEntry::try_new(
                partition,
                [vec![nine, eight], vec![], vec![], vec![]],
                [6, 0, 0, 0],
                2,
            )
            .unwrap()
        };
        let m1 = try_merge(&mk(n, n), &mk(n, s)).unwrap();
        let m2 = try_merge(&mk(s, s), &mk(s, n)).unwrap();
        let union = try_merge(&m1, &m2).unwrap();
        assert_eq!(union, fig4_union(2));
        // Union exactness checked by enumeration.
        let mut all: std::collections::HashSet<_> = enumerate_members(&mk(n, n)).into_iter().collect();
        all.extend(enumerate_members(&mk(n, s)));
        all.extend(enumerate_members(&mk(s, s)));
        all.extend(enumerate_members(&mk(s, n)));
        let union_members: std::collections::HashSet<_> =
            enumerate_members(&union).into_iter().collect();
        assert_eq!(all, union_members);
    }

    #[test]
    fn inexact_unions_are_refused() {
        // {9:N,8:S} ∪ {9:S,8:N} is not a product set: OR-ing one card would
        // admit {9:N,8:N}.
        let partition = Partition::new(Shape::single_suit(2), Player::East, Trump::NoTrump);
        let n = HolderMask::single(Player::North);
        let s = HolderMask::single(Player::South);
        let mk = |nine: HolderMask, eight: HolderMask| {
            SetEntry::try_new(
                partition,
                [vec![nine, eight], vec![], vec![], vec![]],
                [6, 0, 0, 0],
                2,
            )
            .unwrap()
        };
        // Differs at two cards: refused outright.
        assert!(try_merge(&mk(n, s), &mk(s, n)).is_none());
    }

    #[test]
    fn trailing_unconstrained_masks_normalize_to_x() {
        let partition = Partition::new(Shape::single_suit(2), Player::East, Trump::NoTrump);
        let entry = SetEntry::try_new(
            partition,
            [
                vec![HolderMask::single(Player::North), HolderMask::ANY],
                vec![],
                vec![],
                vec![],
            ],
            [6, 0, 0, 0],
            2,
        )
        .unwrap();
        assert_eq!(entry.x_count(Suit::Spades), 7);
        assert_eq!(entry.ranked_count(Suit::Spades), 1);
    }

    #[test]
    fn display_uses_the_set_grammar() {
        let entry = fig4_union(2);
        assert_eq!(
            entry.to_string(),
            "♠9[NS] ♠8[NS] ♠x ♠x ♠x ♠x ♠x ♠x => 2"
        );
    }
}
