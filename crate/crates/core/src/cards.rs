//! Card, player and trump domain types.
//!
//! Two distinct player orders exist and must not be confused:
//!
//! * play order is clockwise N, E, S, W — it drives trick mechanics;
//! * canonical order is N < S < E < W — it drives the lexicographic
//!   ordering of deals and the bit order of holder masks.
//!
//! Everything in memory is indexed by canonical order; seat order appears
//! only in trick rotation and in the on-disk headers.

use std::fmt;

use crate::{Error, Result};

/// Rank symbols for relative ranks 2..=14, lowest first.
pub const RANK_SYMBOLS: &[u8; 13] = b"23456789TJQKA";

pub fn rank_symbol(rank: u8) -> char {
    debug_assert!((2..=14).contains(&rank));
    RANK_SYMBOLS[(rank - 2) as usize] as char
}

pub fn rank_from_symbol(symbol: char) -> Option<u8> {
    let upper = symbol.to_ascii_uppercase() as u8;
    RANK_SYMBOLS.iter().position(|&s| s == upper).map(|i| i as u8 + 2)
}

/// Suits in the fixed global order: spades highest, clubs lowest.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub enum Suit {
    Spades = 0,
    Hearts = 1,
    Diamonds = 2,
    Clubs = 3,
}

impl Suit {
    pub const ALL: [Suit; 4] = [Suit::Spades, Suit::Hearts, Suit::Diamonds, Suit::Clubs];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(index: usize) -> Suit {
        Suit::ALL[index]
    }

    pub fn letter(self) -> char {
        match self {
            Suit::Spades => 'S',
            Suit::Hearts => 'H',
            Suit::Diamonds => 'D',
            Suit::Clubs => 'C',
        }
    }

    pub fn glyph(self) -> char {
        match self {
            Suit::Spades => '♠',
            Suit::Hearts => '♥',
            Suit::Diamonds => '♦',
            Suit::Clubs => '♣',
        }
    }
}

impl fmt::Display for Suit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.glyph())
    }
}

/// Seats, declared in canonical comparison order N < S < E < W.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub enum Player {
    North = 0,
    South = 1,
    East = 2,
    West = 3,
}

impl Player {
    /// Canonical comparison order.
    pub const ALL: [Player; 4] = [Player::North, Player::South, Player::East, Player::West];

    /// Clockwise seating order, used by trick rotation and file headers.
    pub const SEAT_ORDER: [Player; 4] = [Player::North, Player::East, Player::South, Player::West];

    pub fn canonical_index(self) -> usize {
        self as usize
    }

    pub fn from_canonical_index(index: usize) -> Player {
        Player::ALL[index]
    }

    /// 0=N, 1=E, 2=S, 3=W.
    pub fn seat_index(self) -> u8 {
        match self {
            Player::North => 0,
            Player::East => 1,
            Player::South => 2,
            Player::West => 3,
        }
    }

    pub fn from_seat_index(index: u8) -> Result<Player> {
        Player::SEAT_ORDER
            .get(index as usize)
            .copied()
            .ok_or_else(|| Error::Invalid(format!("seat index {index} out of range")))
    }

    pub fn next_clockwise(self) -> Player {
        match self {
            Player::North => Player::East,
            Player::East => Player::South,
            Player::South => Player::West,
            Player::West => Player::North,
        }
    }

    pub fn is_north_south(self) -> bool {
        matches!(self, Player::North | Player::South)
    }

    pub fn partner(self) -> Player {
        match self {
            Player::North => Player::South,
            Player::South => Player::North,
            Player::East => Player::West,
            Player::West => Player::East,
        }
    }

    pub fn letter(self) -> char {
        match self {
            Player::North => 'N',
            Player::South => 'S',
            Player::East => 'E',
            Player::West => 'W',
        }
    }

    pub fn from_letter(letter: char) -> Option<Player> {
        match letter.to_ascii_uppercase() {
            'N' => Some(Player::North),
            'S' => Some(Player::South),
            'E' => Some(Player::East),
            'W' => Some(Player::West),
            _ => None,
        }
    }
}

impl fmt::Display for Player {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.letter())
    }
}

#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub enum Trump {
    NoTrump = 0,
    Spades = 1,
    Hearts = 2,
    Diamonds = 3,
    Clubs = 4,
}

impl Trump {
    pub const ALL: [Trump; 5] = [
        Trump::NoTrump,
        Trump::Spades,
        Trump::Hearts,
        Trump::Diamonds,
        Trump::Clubs,
    ];

    pub fn suit(self) -> Option<Suit> {
        match self {
            Trump::NoTrump => None,
            Trump::Spades => Some(Suit::Spades),
            Trump::Hearts => Some(Suit::Hearts),
            Trump::Diamonds => Some(Suit::Diamonds),
            Trump::Clubs => Some(Suit::Clubs),
        }
    }

    /// File encoding: 0=NT, 1=♠, 2=♥, 3=♦, 4=♣.
    pub fn code(self) -> u8 {
        self as u8
    }

    pub fn from_code(code: u8) -> Result<Trump> {
        Trump::ALL
            .get(code as usize)
            .copied()
            .ok_or_else(|| Error::Invalid(format!("trump code {code} out of range")))
    }

    pub fn label(self) -> &'static str {
        match self {
            Trump::NoTrump => "NT",
            Trump::Spades => "S",
            Trump::Hearts => "H",
            Trump::Diamonds => "D",
            Trump::Clubs => "C",
        }
    }

    pub fn from_label(label: &str) -> Option<Trump> {
        match label.to_ascii_uppercase().as_str() {
            "NT" | "N" => Some(Trump::NoTrump),
            "S" => Some(Trump::Spades),
            "H" => Some(Trump::Hearts),
            "D" => Some(Trump::Diamonds),
            "C" => Some(Trump::Clubs),
            _ => None,
        }
    }
}

impl fmt::Display for Trump {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// A card under relative ranks: if a suit has `n` cards in play its ranks are
/// exactly `2..=n+1`.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
pub struct Card {
    pub suit: Suit,
    pub rank: u8,
}

impl Card {
    pub fn new(suit: Suit, rank: u8) -> Card {
        debug_assert!((2..=14).contains(&rank));
        Card { suit, rank }
    }
}

impl PartialOrd for Card {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Card {
    /// Global card order: rank descending, ties broken spades first. The
    /// *smallest* card under `Ord` is the highest-priority card, so sorting
    /// ascending yields the global high-to-low order.
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        other
            .rank
            .cmp(&self.rank)
            .then_with(|| self.suit.cmp(&other.suit))
    }
}

impl fmt::Display for Card {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}", self.suit.glyph(), rank_symbol(self.rank))
    }
}
