//! Trick-play mechanics and the brute-force perfect-play evaluator.
//!
//! `minimax_value` is the ground-truth oracle: a plain partnership minimax
//! (N and S maximize North-South tricks, E and W minimize) with alpha-beta
//! and no further enhancements. The same within-trick walker also powers the
//! database-backed evaluation in [`crate::setro`] and [`crate::retro`].

use std::collections::HashSet;

use crate::cards::{Card, Player, Suit, Trump};
use crate::deal::CanonicalDeal;
use crate::Result;

/// Tricks won by North–South from a position under perfect play, `0..=d`.
pub type Value = u8;

/// A deal with a partially played trick.
#[derive(Clone, Debug)]
pub struct TrickState {
    pub deal: CanonicalDeal,
    /// Plays so far this trick, clockwise from the trick leader.
    pub played: Vec<(Player, Card)>,
    pub ns_tricks_so_far: u8,
}

impl TrickState {
    pub fn new(deal: CanonicalDeal) -> TrickState {
        TrickState {
            deal,
            played: Vec::new(),
            ns_tricks_so_far: 0,
        }
    }

    pub fn suit_led(&self) -> Option<Suit> {
        self.played.first().map(|&(_, card)| card.suit)
    }

    pub fn to_play(&self) -> Player {
        nth_to_play(self.deal.leader(), self.played.len())
    }
}

pub(crate) fn nth_to_play(leader: Player, n: usize) -> Player {
    let mut player = leader;
    for _ in 0..n {
        player = player.next_clockwise();
    }
    player
}

/// All legal cards for the player to act: follow suit when possible, any
/// held card otherwise (and any card on lead).
pub fn legal_plays(state: &TrickState) -> Vec<Card> {
    assert!(state.played.len() < 4, "trick already complete");
    let player = state.to_play();
    if let Some(led) = state.suit_led() {
        if state.deal.has_suit(player, led) {
            return state
                .deal
                .suit_holding(player, led)
                .into_iter()
                .map(|rank| Card::new(led, rank))
                .collect();
        }
    }
    state.deal.hand(player)
}

/// Legal plays collapsed to one representative per equivalence class:
/// cards of the same suit on consecutive relative ranks held by the same
/// player are interchangeable, both for the trick winner and for the
/// rank-compressed successor. Highest card first.
pub(crate) fn class_plays(
    deal: &CanonicalDeal,
    player: Player,
    suit_led: Option<Suit>,
) -> Vec<Card> {
    let suits: Vec<Suit> = match suit_led {
        Some(led) if deal.has_suit(player, led) => vec![led],
        _ => Suit::ALL
            .iter()
            .copied()
            .filter(|&s| deal.has_suit(player, s))
            .collect(),
    };
    let mut cards = Vec::new();
    for suit in suits {
        let holding = deal.suit_holding(player, suit); // rank descending
        let mut i = 0;
        while i < holding.len() {
            cards.push(Card::new(suit, holding[i]));
            // Skip the rest of this consecutive run.
            let mut j = i + 1;
            while j < holding.len() && holding[j] + 1 == holding[j - 1] {
                j += 1;
            }
            i = j;
        }
    }
    cards.sort();
    cards
}

/// The winner of a completed trick: highest trump if any trump was played,
/// otherwise the highest card of the suit led.
pub fn trick_winner(plays: &[(Player, Card); 4], suit_led: Suit, trump: Trump) -> Player {
    if let Some(trump_suit) = trump.suit() {
        if let Some(&(player, _)) = plays
            .iter()
            .filter(|(_, card)| card.suit == trump_suit)
            .max_by_key(|(_, card)| card.rank)
        {
            return player;
        }
    }
    plays
        .iter()
        .filter(|(_, card)| card.suit == suit_led)
        .max_by_key(|(_, card)| card.rank)
        .expect("the leader's card always matches the suit led")
        .0
}

/// Partnership minimax over the current trick. `leaf` receives whether NS
/// won the trick and the canonicalized successor (winner on lead) and
/// returns the value of the rest of the deal.
pub(crate) fn trick_value<F>(deal: &CanonicalDeal, leaf: &mut F) -> Result<Value>
where
    F: FnMut(u8, &CanonicalDeal) -> Result<Value>,
{
    debug_assert!(deal.tricks() >= 1);
    let mut plays = Vec::with_capacity(4);
    let d = deal.tricks() as i16;
    walk(deal, &mut plays, -1, d + 1, leaf)
}

fn walk<F>(
    deal: &CanonicalDeal,
    plays: &mut Vec<(Player, Card)>,
    mut alpha: i16,
    mut beta: i16,
    leaf: &mut F,
) -> Result<Value>
where
    F: FnMut(u8, &CanonicalDeal) -> Result<Value>,
{
    if plays.len() == 4 {
        let trick = [plays[0], plays[1], plays[2], plays[3]];
        let suit_led = trick[0].1.suit;
        let winner = trick_winner(&trick, suit_led, deal.trump());
        let ns_won = winner.is_north_south() as u8;
        let successor = deal.after_trick(&trick, winner);
        return leaf(ns_won, &successor);
    }
    let player = nth_to_play(deal.leader(), plays.len());
    let suit_led = plays.first().map(|&(_, card)| card.suit);
    let maximizing = player.is_north_south();
    let mut best: i16 = if maximizing { i16::MIN } else { i16::MAX };
    for card in class_plays(deal, player, suit_led) {
        plays.push((player, card));
        let value = walk(deal, plays, alpha, beta, leaf)? as i16;
        plays.pop();
        if maximizing {
            best = best.max(value);
            alpha = alpha.max(best);
        } else {
            best = best.min(value);
            beta = beta.min(best);
        }
        if alpha >= beta {
            break;
        }
    }
    Ok(best as Value)
}

/// Game-theoretic North-South tricks by full search to the end of the deal.
pub fn minimax_value(deal: &CanonicalDeal) -> Value {
    if deal.tricks() == 0 {
        return 0;
    }
    trick_value(deal, &mut |ns_won, successor| {
        Ok(ns_won + minimax_value(successor))
    })
    .expect("minimax leaves never fail")
}

/// All distinct outcomes of playing out exactly one full trick. Successors
/// are canonicalized with the winner on lead; outcomes producing identical
/// `(ns_won, successor)` pairs are merged.
pub fn trick_successors(deal: &CanonicalDeal) -> Vec<(u8, CanonicalDeal)> {
    assert!(deal.tricks() >= 1);
    let mut out = Vec::new();
    let mut plays = Vec::with_capacity(4);
    collect_successors(deal, &mut plays, &mut out);
    let mut seen = HashSet::new();
    out.retain(|entry| seen.insert(*entry));
    out
}

fn collect_successors(
    deal: &CanonicalDeal,
    plays: &mut Vec<(Player, Card)>,
    out: &mut Vec<(u8, CanonicalDeal)>,
) {
    if plays.len() == 4 {
        let trick = [plays[0], plays[1], plays[2], plays[3]];
        let suit_led = trick[0].1.suit;
        let winner = trick_winner(&trick, suit_led, deal.trump());
        out.push((
            winner.is_north_south() as u8,
            deal.after_trick(&trick, winner),
        ));
        return;
    }
    let player = nth_to_play(deal.leader(), plays.len());
    let suit_led = plays.first().map(|&(_, card)| card.suit);
    for card in class_plays(deal, player, suit_led) {
        plays.push((player, card));
        collect_successors(deal, plays, out);
        plays.pop();
    }
}
