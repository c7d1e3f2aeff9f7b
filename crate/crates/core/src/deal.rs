//! Canonical deals: relative-rank encoding, the canonical ordering, and the
//! permutation machinery the set-based iteration depends on.
//!
//! Each suit's holders are packed into a 32-bit word, two bits per card,
//! with the highest card in the most significant occupied bits and digits
//! taken from the canonical player order (N=0, S=1, E=2, W=3). Words of the
//! same shape therefore compare as plain integers, and a whole deal compares
//! by its words in the fixed suit order. This is the canonical position.

use std::fmt;

use crate::cards::{rank_from_symbol, rank_symbol, Card, Player, Suit, Trump};
use crate::shape::Shape;
use crate::{Error, Result};

/// Digit of `rank` inside a packed suit word.
#[inline]
pub(crate) fn word_get(word: u32, rank: u8) -> u8 {
    ((word >> (2 * (rank - 2))) & 3) as u8
}

#[inline]
pub(crate) fn word_set(word: u32, rank: u8, digit: u8) -> u32 {
    let shift = 2 * (rank - 2) as u32;
    (word & !(3 << shift)) | ((digit as u32) << shift)
}

/// Remove `rank` from a word of `count` cards, sliding higher cards down one
/// rank so the suit stays gap-free.
#[inline]
pub(crate) fn word_remove(word: u32, count: u8, rank: u8) -> u32 {
    debug_assert!(rank >= 2 && rank <= count + 1);
    let shift = 2 * (rank - 2) as u32;
    let below = word & ((1u32 << shift) - 1);
    let above = (word >> (shift + 2)) << shift;
    below | above
}

/// Total order over deals of one shape: most significant digit is the
/// highest card, suits compared spades first.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct Position(pub [u32; 4]);

/// A relative-rank deal plus leader and trump; the unit of state-wise
/// solving. Instances are immutable values.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct CanonicalDeal {
    words: [u32; 4],
    counts: [u8; 4],
    leader: Player,
    trump: Trump,
}

impl CanonicalDeal {
    pub(crate) fn from_parts(
        words: [u32; 4],
        counts: [u8; 4],
        leader: Player,
        trump: Trump,
    ) -> CanonicalDeal {
        CanonicalDeal {
            words,
            counts,
            leader,
            trump,
        }
    }

    pub fn leader(&self) -> Player {
        self.leader
    }

    pub fn trump(&self) -> Trump {
        self.trump
    }

    pub fn with_leader(&self, leader: Player) -> CanonicalDeal {
        CanonicalDeal { leader, ..*self }
    }

    /// Tricks remaining.
    pub fn tricks(&self) -> u8 {
        (self.counts.iter().map(|&c| c as u32).sum::<u32>() / 4) as u8
    }

    pub fn suit_count(&self, suit: Suit) -> u8 {
        self.counts[suit.index()]
    }

    pub(crate) fn words(&self) -> [u32; 4] {
        self.words
    }

    pub fn holder(&self, card: Card) -> Player {
        debug_assert!(card.rank <= self.counts[card.suit.index()] + 1);
        Player::from_canonical_index(word_get(self.words[card.suit.index()], card.rank) as usize)
    }

    pub fn position(&self) -> Position {
        Position(self.words)
    }

    /// The 4×4 length matrix of this deal.
    pub fn shape(&self) -> Shape {
        let mut lengths = [[0u8; 4]; 4];
        for suit in Suit::ALL {
            let s = suit.index();
            for rank in 2..=self.counts[s] + 1 {
                lengths[word_get(self.words[s], rank) as usize][s] += 1;
            }
        }
        Shape::try_new(lengths).expect("a canonical deal always has a valid shape")
    }

    /// Cards held by `player` in `suit`, rank descending.
    pub fn suit_holding(&self, player: Player, suit: Suit) -> Vec<u8> {
        let s = suit.index();
        let digit = player.canonical_index() as u8;
        (2..=self.counts[s] + 1)
            .rev()
            .filter(|&r| word_get(self.words[s], r) == digit)
            .collect()
    }

    pub fn hand(&self, player: Player) -> Vec<Card> {
        let mut cards: Vec<Card> = Suit::ALL
            .iter()
            .flat_map(|&suit| {
                self.suit_holding(player, suit)
                    .into_iter()
                    .map(move |rank| Card::new(suit, rank))
            })
            .collect();
        cards.sort();
        cards
    }

    pub fn has_suit(&self, player: Player, suit: Suit) -> bool {
        let s = suit.index();
        let digit = player.canonical_index() as u8;
        (2..=self.counts[s] + 1).any(|r| word_get(self.words[s], r) == digit)
    }

    /// Play out one full trick: remove the four played cards, re-compress
    /// ranks, and put the winner on lead.
    pub fn after_trick(&self, plays: &[(Player, Card); 4], winner: Player) -> CanonicalDeal {
        let mut words = self.words;
        let mut counts = self.counts;
        // Remove highest ranks first so lower positions stay valid.
        let mut cards: Vec<Card> = plays.iter().map(|&(_, c)| c).collect();
        cards.sort(); // global order: highest first
        for card in cards {
            let s = card.suit.index();
            words[s] = word_remove(words[s], counts[s], card.rank);
            counts[s] -= 1;
        }
        CanonicalDeal {
            words,
            counts,
            leader: winner,
            trump: self.trump,
        }
    }

    /// Parse the deal text grammar, canonicalizing any absolute ranks.
    pub fn parse(text: &str) -> Result<CanonicalDeal> {
        AbsoluteDeal::parse(text).and_then(|abs| canonicalize(&abs))
    }
}

impl fmt::Debug for CanonicalDeal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "CanonicalDeal({self})")
    }
}

impl fmt::Display for CanonicalDeal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, player) in Player::SEAT_ORDER.iter().enumerate() {
            if i > 0 {
                f.write_str(" ")?;
            }
            write!(f, "{}:", player.letter())?;
            for (j, suit) in Suit::ALL.iter().enumerate() {
                if j > 0 {
                    f.write_str(".")?;
                }
                let holding = self.suit_holding(*player, *suit);
                if holding.is_empty() {
                    f.write_str("-")?;
                } else {
                    for rank in holding {
                        write!(f, "{}", rank_symbol(rank))?;
                    }
                }
            }
        }
        write!(f, " leader={} trump={}", self.leader.letter(), self.trump)
    }
}

/// A deal over the standard 52-card alphabet with any subset in play.
/// Holdings are rank bitmasks (bit r set = rank r held, 2..=14).
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub struct AbsoluteDeal {
    pub holdings: [[u16; 4]; 4],
    pub leader: Player,
    pub trump: Trump,
}

impl AbsoluteDeal {
    pub fn new(leader: Player, trump: Trump) -> AbsoluteDeal {
        AbsoluteDeal {
            holdings: [[0; 4]; 4],
            leader,
            trump,
        }
    }

    pub fn add(&mut self, player: Player, suit: Suit, rank: u8) -> Result<()> {
        debug_assert!((2..=14).contains(&rank));
        for p in 0..4 {
            if self.holdings[p][suit.index()] & (1 << rank) != 0 {
                return Err(Error::MalformedDeal(format!(
                    "duplicate card {}{}",
                    suit.glyph(),
                    rank_symbol(rank)
                )));
            }
        }
        self.holdings[player.canonical_index()][suit.index()] |= 1 << rank;
        Ok(())
    }

    /// Parse `N:<s>.<h>.<d>.<c> E:... S:... W:... leader=<X> trump=<Y>`.
    /// Suit fields list rank symbols high to low; `-` (or empty) is void.
    pub fn parse(text: &str) -> Result<AbsoluteDeal> {
        let mut holdings: [Option<[u16; 4]>; 4] = [None; 4];
        let mut leader = None;
        let mut trump = None;
        let mut offset = 0;
        for token in text.split_whitespace() {
            // Track column offsets against the original text for error reporting.
            offset = match text[offset..].find(token) {
                Some(pos) => offset + pos,
                None => offset,
            };
            let parse_err = |message: String, extra: usize| Error::Parse {
                offset: offset + extra,
                message,
            };
            if let Some(rest) = token.strip_prefix("leader=") {
                let player = rest
                    .chars()
                    .next()
                    .and_then(Player::from_letter)
                    .filter(|_| rest.len() == 1)
                    .ok_or_else(|| parse_err(format!("bad leader `{rest}`"), 7))?;
                leader = Some(player);
            } else if let Some(rest) = token.strip_prefix("trump=") {
                let t = Trump::from_label(rest)
                    .ok_or_else(|| parse_err(format!("bad trump `{rest}`"), 6))?;
                trump = Some(t);
            } else if token.len() >= 2 && token.as_bytes()[1] == b':' {
                let player = Player::from_letter(token.chars().next().unwrap())
                    .ok_or_else(|| parse_err(format!("unknown hand `{token}`"), 0))?;
                let idx = player.canonical_index();
                if holdings[idx].is_some() {
                    return Err(parse_err(format!("hand {} given twice", player.letter()), 0));
                }
                let mut suits = [0u16; 4];
                let fields: Vec<&str> = token[2..].split('.').collect();
                if fields.len() != 4 {
                    return Err(parse_err(
                        format!("hand needs 4 dot-separated suits, got {}", fields.len()),
                        2,
                    ));
                }
                let mut col = 2;
                for (suit, field) in fields.iter().enumerate() {
                    if *field != "-" {
                        for ch in field.chars() {
                            let rank = rank_from_symbol(ch).ok_or_else(|| {
                                parse_err(format!("bad rank symbol `{ch}`"), col)
                            })?;
                            if suits[suit] & (1 << rank) != 0 {
                                return Err(parse_err(format!("duplicate rank `{ch}`"), col));
                            }
                            suits[suit] |= 1 << rank;
                            col += ch.len_utf8();
                        }
                    } else {
                        col += 1;
                    }
                    col += 1; // dot
                }
                holdings[idx] = Some(suits);
            } else {
                return Err(parse_err(format!("unexpected token `{token}`"), 0));
            }
            offset += token.len();
        }
        let leader = leader.ok_or_else(|| Error::Parse {
            offset: text.len(),
            message: "missing leader=<N|E|S|W>".into(),
        })?;
        let trump = trump.ok_or_else(|| Error::Parse {
            offset: text.len(),
            message: "missing trump=<NT|S|H|D|C>".into(),
        })?;
        let mut deal = AbsoluteDeal::new(leader, trump);
        for (idx, hand) in holdings.iter().enumerate() {
            let hand = hand.ok_or_else(|| Error::Parse {
                offset: text.len(),
                message: format!(
                    "missing hand {}",
                    Player::from_canonical_index(idx).letter()
                ),
            })?;
            deal.holdings[idx] = hand;
        }
        // Cross-hand duplicates.
        for suit in 0..4 {
            let mut seen = 0u16;
            for p in 0..4 {
                if seen & deal.holdings[p][suit] != 0 {
                    return Err(Error::MalformedDeal(format!(
                        "suit {} held by two hands",
                        Suit::from_index(suit).glyph()
                    )));
                }
                seen |= deal.holdings[p][suit];
            }
        }
        Ok(deal)
    }
}

/// Remap each suit's in-play cards order-preservingly onto `{2..n+1}`.
/// Holders, leader and trump are unchanged.
pub fn canonicalize(deal: &AbsoluteDeal) -> Result<CanonicalDeal> {
    let sizes: Vec<u32> = (0..4)
        .map(|p| (0..4).map(|s| deal.holdings[p][s].count_ones()).sum())
        .collect();
    if sizes.iter().any(|&n| n != sizes[0]) {
        return Err(Error::MalformedDeal(format!(
            "unequal hand sizes {:?} (canonical player order N,S,E,W)",
            sizes
        )));
    }
    let mut words = [0u32; 4];
    let mut counts = [0u8; 4];
    for suit in 0..4 {
        let mut rel = 2u8;
        for abs_rank in 2..=14u8 {
            for p in 0..4 {
                if deal.holdings[p][suit] & (1 << abs_rank) != 0 {
                    words[suit] = word_set(words[suit], rel, p as u8);
                    rel += 1;
                }
            }
        }
        counts[suit] = rel - 2;
    }
    Ok(CanonicalDeal {
        words,
        counts,
        leader: deal.leader,
        trump: deal.trump,
    })
}

/// The lexicographically least deal of `shape` under the canonical position:
/// per suit, highest cards go to the least player with remaining capacity.
pub fn first_deal(shape: &Shape, leader: Player, trump: Trump) -> CanonicalDeal {
    let mut words = [0u32; 4];
    let mut counts = [0u8; 4];
    for suit in Suit::ALL {
        let s = suit.index();
        let n = shape.suit_count(suit);
        counts[s] = n;
        let mut remaining = shape.column(suit);
        let mut rank = n + 1;
        for digit in 0..4u8 {
            while remaining[digit as usize] > 0 {
                words[s] = word_set(words[s], rank, digit);
                remaining[digit as usize] -= 1;
                rank -= 1;
            }
        }
    }
    CanonicalDeal {
        words,
        counts,
        leader,
        trump,
    }
}

/// Advance the holder word of the top `fixed_high_count` cards of `suit` to
/// its lexicographic successor among shape-feasible words, resetting all
/// lower cards of that suit to their least feasible completion. Other suits
/// are untouched. Returns `None` when the high word is already maximal.
pub fn next_suit_permutation(
    deal: &CanonicalDeal,
    suit: Suit,
    fixed_high_count: u8,
) -> Option<CanonicalDeal> {
    assert!(fixed_high_count >= 1, "fixed_high_count must be at least 1");
    let s = suit.index();
    let n = deal.counts[s];
    let k = fixed_high_count.min(n);
    if n == 0 {
        return None;
    }
    // Column capacities for this suit.
    let mut capacity = [0u8; 4];
    for rank in 2..=n + 1 {
        capacity[word_get(deal.words[s], rank) as usize] += 1;
    }
    // Digits of the top-k prefix, highest card first.
    let prefix: Vec<u8> = (0..k).map(|i| word_get(deal.words[s], n + 1 - i)).collect();
    let mut used = [0u8; 4];
    for &digit in &prefix {
        used[digit as usize] += 1;
    }
    // Rightmost prefix position that can be bumped to a larger feasible digit.
    for i in (0..k as usize).rev() {
        used[prefix[i] as usize] -= 1;
        for digit in prefix[i] + 1..4 {
            if used[digit as usize] < capacity[digit as usize] {
                let mut word = deal.words[s];
                word = word_set(word, n + 1 - i as u8, digit);
                let mut remaining = capacity;
                for (d, r) in remaining.iter_mut().zip(used.iter()) {
                    *d -= r;
                }
                remaining[digit as usize] -= 1;
                // Least completion: fill remaining positions ascending.
                let mut rank = n + 1 - i as u8 - 1;
                for d in 0..4u8 {
                    while remaining[d as usize] > 0 {
                        word = word_set(word, rank, d);
                        remaining[d as usize] -= 1;
                        rank -= 1;
                    }
                }
                let mut words = deal.words;
                words[s] = word;
                return Some(CanonicalDeal {
                    words,
                    counts: deal.counts,
                    leader: deal.leader,
                    trump: deal.trump,
                });
            }
        }
    }
    None
}
