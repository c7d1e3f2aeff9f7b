//! Hand shapes: the 4×4 matrix of per-player per-suit lengths that keys
//! every database partition.

use std::fmt;

use crate::cards::{Player, Suit};
use crate::{Error, Result};

/// Per-player per-suit lengths. Rows are indexed by canonical player order
/// (N, S, E, W), columns by the global suit order. All rows sum to the
/// number of tricks remaining.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Shape {
    lengths: [[u8; 4]; 4],
}

impl Shape {
    pub fn try_new(lengths: [[u8; 4]; 4]) -> Result<Shape> {
        let d: u8 = lengths[0].iter().sum();
        for row in &lengths {
            let sum: u8 = row.iter().sum();
            if sum != d {
                return Err(Error::InvalidShape(format!(
                    "row sums differ: expected {d}, found {sum}"
                )));
            }
        }
        for suit in 0..4 {
            let col: u8 = (0..4).map(|p| lengths[p][suit]).sum();
            if col > 13 {
                return Err(Error::InvalidShape(format!(
                    "suit {} has {col} cards in play (max 13)",
                    Suit::from_index(suit)
                )));
            }
        }
        Ok(Shape { lengths })
    }

    /// The single-suit shape at depth `d`: every player holds `d` spades.
    pub fn single_suit(d: u8) -> Shape {
        assert!(d as usize * 4 <= 13, "single-suit shape needs 4d <= 13 cards");
        Shape {
            lengths: [[d, 0, 0, 0]; 4],
        }
    }

    pub fn len(&self, player: Player, suit: Suit) -> u8 {
        self.lengths[player.canonical_index()][suit.index()]
    }

    /// Tricks remaining (every row sums to this).
    pub fn tricks(&self) -> u8 {
        self.lengths[0].iter().sum()
    }

    pub fn cards(&self) -> u8 {
        self.tricks() * 4
    }

    /// In-play card count of a suit (column sum).
    pub fn suit_count(&self, suit: Suit) -> u8 {
        (0..4).map(|p| self.lengths[p][suit.index()]).sum()
    }

    pub fn column(&self, suit: Suit) -> [u8; 4] {
        let s = suit.index();
        [
            self.lengths[0][s],
            self.lengths[1][s],
            self.lengths[2][s],
            self.lengths[3][s],
        ]
    }

    /// Row-major bytes in seat order (N, E, S, W), as stored in file headers.
    pub fn seat_major_bytes(&self) -> [u8; 16] {
        let mut out = [0u8; 16];
        for (row, player) in Player::SEAT_ORDER.iter().enumerate() {
            for suit in 0..4 {
                out[row * 4 + suit] = self.lengths[player.canonical_index()][suit];
            }
        }
        out
    }

    pub fn from_seat_major_bytes(bytes: &[u8; 16]) -> Result<Shape> {
        let mut lengths = [[0u8; 4]; 4];
        for (row, player) in Player::SEAT_ORDER.iter().enumerate() {
            for suit in 0..4 {
                lengths[player.canonical_index()][suit] = bytes[row * 4 + suit];
            }
        }
        Shape::try_new(lengths)
    }

    /// 16 hex digits, seat-major, used as partition file stem.
    pub fn id(&self) -> String {
        self.seat_major_bytes().iter().map(|&b| {
            debug_assert!(b <= 13);
            char::from_digit(b as u32, 16).unwrap()
        }).collect()
    }

    pub fn from_id(id: &str) -> Result<Shape> {
        if id.len() != 16 {
            return Err(Error::InvalidShape(format!("shape id `{id}` must be 16 hex digits")));
        }
        let mut bytes = [0u8; 16];
        for (i, ch) in id.chars().enumerate() {
            bytes[i] = ch
                .to_digit(16)
                .ok_or_else(|| Error::InvalidShape(format!("bad digit `{ch}` in shape id")))?
                as u8;
        }
        Shape::from_seat_major_bytes(&bytes)
    }

    /// Whether the suit columns are already in canonical order: descending by
    /// (column sum, column vector). Suit-permuted variants of the same shape
    /// share exactly one canonical representative.
    pub fn is_canonical(&self) -> bool {
        let keys: Vec<(u8, [u8; 4])> = Suit::ALL
            .iter()
            .map(|&s| (self.suit_count(s), self.column(s)))
            .collect();
        keys.windows(2).all(|w| w[0] >= w[1])
    }
}

impl fmt::Debug for Shape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Shape({})", self.id())
    }
}

impl fmt::Display for Shape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.id())
    }
}

/// Every canonical shape with the given number of in-play cards, in a
/// deterministic order. Shapes that differ only by a suit permutation are
/// reported once, via their canonical representative; this matches the
/// partition counts used to bound the database size.
pub fn enumerate_shapes(cards: u8) -> Result<Vec<Shape>> {
    if cards < 4 || cards > 52 || cards % 4 != 0 {
        return Err(Error::Invalid(format!(
            "cards must be a multiple of 4 in 4..=52, got {cards}"
        )));
    }
    let d = cards / 4;
    let rows = row_compositions(d);
    let mut shapes = Vec::new();
    // Nested loops over per-player rows with column-sum pruning.
    let mut cols = [0u8; 4];
    for r0 in &rows {
        if !add_row(&mut cols, r0) {
            continue;
        }
        for r1 in &rows {
            if !add_row(&mut cols, r1) {
                continue;
            }
            for r2 in &rows {
                if !add_row(&mut cols, r2) {
                    continue;
                }
                for r3 in &rows {
                    if !add_row(&mut cols, r3) {
                        continue;
                    }
                    let shape = Shape {
                        lengths: [*r0, *r1, *r2, *r3],
                    };
                    if shape.is_canonical() {
                        shapes.push(shape);
                    }
                    remove_row(&mut cols, r3);
                }
                remove_row(&mut cols, r2);
            }
            remove_row(&mut cols, r1);
        }
        remove_row(&mut cols, r0);
    }
    Ok(shapes)
}

fn add_row(cols: &mut [u8; 4], row: &[u8; 4]) -> bool {
    for i in 0..4 {
        if cols[i] + row[i] > 13 {
            for j in 0..i {
                cols[j] -= row[j];
            }
            return false;
        }
        cols[i] += row[i];
    }
    true
}

fn remove_row(cols: &mut [u8; 4], row: &[u8; 4]) {
    for i in 0..4 {
        cols[i] -= row[i];
    }
}

/// All ways to split `d` cards over 4 suits, lexicographic order.
fn row_compositions(d: u8) -> Vec<[u8; 4]> {
    let mut out = Vec::new();
    for a in 0..=d.min(13) {
        for b in 0..=(d - a).min(13) {
            for c in 0..=(d - a - b).min(13) {
                let e = d - a - b - c;
                if e <= 13 {
                    out.push([a, b, c, e]);
                }
            }
        }
    }
    out
}

/// Shapes reachable from `shape` by playing out exactly one trick, i.e. by
/// removing one card per player under the follow-suit rule for some choice
/// of leader and led suit. Deduplicated, deterministic order.
pub fn successor_shapes(shape: &Shape) -> Vec<Shape> {
    let mut out = Vec::new();
    if shape.tricks() == 0 {
        return out;
    }
    for leader in Player::ALL {
        for led in Suit::ALL {
            if shape.len(leader, led) == 0 {
                continue;
            }
            // Per player, the set of suits they may discard from this trick.
            let mut choices: [Vec<Suit>; 4] = Default::default();
            for player in Player::ALL {
                let idx = player.canonical_index();
                if shape.len(player, led) > 0 {
                    choices[idx] = vec![led];
                } else {
                    choices[idx] = Suit::ALL
                        .iter()
                        .copied()
                        .filter(|&s| shape.len(player, s) > 0)
                        .collect();
                }
            }
            let mut pick = [Suit::Spades; 4];
            collect_removals(shape, &choices, 0, &mut pick, &mut out);
        }
    }
    out.sort();
    out.dedup();
    out
}

fn collect_removals(
    shape: &Shape,
    choices: &[Vec<Suit>; 4],
    player: usize,
    pick: &mut [Suit; 4],
    out: &mut Vec<Shape>,
) {
    if player == 4 {
        let mut lengths = shape.lengths;
        for (p, suit) in pick.iter().enumerate() {
            lengths[p][suit.index()] -= 1;
        }
        out.push(Shape { lengths });
        return;
    }
    for &suit in &choices[player] {
        pick[player] = suit;
        collect_removals(shape, choices, player + 1, pick, out);
    }
}
