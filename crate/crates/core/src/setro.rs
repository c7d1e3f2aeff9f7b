//! The set-based retrograde driver: open-list iteration over independent
//! states, database-backed evaluation, the consistency oracle, and
//! binary-search generalization.

use std::collections::{BTreeMap, HashMap};
use std::ops::ControlFlow;
use std::time::Instant;

use serde::Serialize;

use crate::cards::{Player, Suit, Trump};
use crate::deal::{first_deal, next_suit_permutation, CanonicalDeal, Position};
use crate::prior::{PriorDb, SetPrior};
use crate::retro::iter_deals;
use crate::rules::{trick_value, Value};
use crate::setdb::PartitionTree;
use crate::sets::{candidate_with_value, HolderMask, SetEntry};
use crate::store::Partition;
use crate::{Error, Result};

/// Value of a state at depth `d`: within-trick partnership minimax where
/// each completed trick contributes the trick plus the stored value of the
/// canonicalized successor.
pub fn database_lookup(deal: &CanonicalDeal, prior: &dyn PriorDb) -> Result<Value> {
    assert!(deal.tricks() >= 1);
    trick_value(deal, &mut |ns_won, successor| {
        Ok(ns_won + prior.lookup(successor)?)
    })
}

/// Memoizing wrapper around [`database_lookup`], scoped to one partition
/// build (all deals share leader and trump, so holder words are a complete
/// key).
pub struct Evaluator<'a> {
    prior: &'a dyn PriorDb,
    memo: HashMap<[u32; 4], Value>,
}

impl<'a> Evaluator<'a> {
    pub fn new(prior: &'a dyn PriorDb) -> Evaluator<'a> {
        Evaluator {
            prior,
            memo: HashMap::new(),
        }
    }

    pub fn lookup(&mut self, deal: &CanonicalDeal) -> Result<Value> {
        if let Some(&value) = self.memo.get(&deal.words()) {
            return Ok(value);
        }
        let value = database_lookup(deal, self.prior)?;
        self.memo.insert(deal.words(), value);
        Ok(value)
    }
}

/// Whether all members of a set share the given value. The reference
/// implementation enumerates members with early exit on the first mismatch.
pub fn oracle(entry: &SetEntry, value: Value, prior: &dyn PriorDb) -> Result<bool> {
    let mut evaluator = Evaluator::new(prior);
    oracle_with(entry, value, &mut evaluator)
}

fn oracle_with(entry: &SetEntry, value: Value, evaluator: &mut Evaluator) -> Result<bool> {
    let mut verdict = true;
    let mut failure = None;
    entry.for_each_member(|deal| match evaluator.lookup(deal) {
        Ok(v) if v == value => ControlFlow::Continue(()),
        Ok(_) => {
            verdict = false;
            ControlFlow::Break(())
        }
        Err(e) => {
            failure = Some(e);
            ControlFlow::Break(())
        }
    });
    match failure {
        Some(e) => Err(e),
        None => Ok(verdict),
    }
}

/// One oracle probe during generalization.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ProbeRecord {
    pub suit: Suit,
    pub x_count: u8,
    pub consistent: bool,
}

/// Find the consistent set containing `deal` that maximizes the total
/// x-count under the per-suit binary-search protocol. Suits are processed
/// in decreasing in-play size (ties by the global suit order); within a
/// suit the search keeps `lo = 1` (trivially consistent), probes the
/// rounded-up midpoint, and tightens until `lo == hi`.
pub fn generalize_to_set(
    deal: &CanonicalDeal,
    value: Value,
    prior: &dyn PriorDb,
) -> Result<(SetEntry, Vec<ProbeRecord>)> {
    let mut evaluator = Evaluator::new(prior);
    let mut queries = 0u64;
    generalize_with(deal, value, &mut evaluator, &mut queries)
}

fn generalize_with(
    deal: &CanonicalDeal,
    value: Value,
    evaluator: &mut Evaluator,
    oracle_queries: &mut u64,
) -> Result<(SetEntry, Vec<ProbeRecord>)> {
    let mut suits: Vec<Suit> = Suit::ALL
        .iter()
        .copied()
        .filter(|&s| deal.suit_count(s) > 0)
        .collect();
    suits.sort_by_key(|&s| (std::cmp::Reverse(deal.suit_count(s)), s));
    let mut x_counts = [0u8; 4];
    for &suit in &suits {
        x_counts[suit.index()] = 1;
    }
    let mut probes = Vec::new();
    for &suit in &suits {
        let n = deal.suit_count(suit);
        let mut lo = 1u8;
        let mut hi = n;
        while lo < hi {
            let mid = (lo + hi + 1) / 2;
            x_counts[suit.index()] = mid;
            let candidate = candidate_with_value(deal, x_counts, value)?;
            *oracle_queries += 1;
            let consistent = oracle_with(&candidate, value, evaluator)?;
            probes.push(ProbeRecord {
                suit,
                x_count: mid,
                consistent,
            });
            if consistent {
                lo = mid;
            } else {
                hi = mid - 1;
            }
        }
        // Probing is monotone by construction of the search window: every
        // recorded failure sits above every recorded success.
        debug_assert!(monotone(&probes, suit));
        x_counts[suit.index()] = lo;
    }
    let entry = candidate_with_value(deal, x_counts, value)?;
    Ok((entry, probes))
}

fn monotone(probes: &[ProbeRecord], suit: Suit) -> bool {
    let max_true = probes
        .iter()
        .filter(|p| p.suit == suit && p.consistent)
        .map(|p| p.x_count)
        .max()
        .unwrap_or(0);
    probes
        .iter()
        .filter(|p| p.suit == suit && !p.consistent)
        .all(|p| p.x_count > max_true)
}

/// Pending independent-candidate states, popped greatest position first.
#[derive(Default)]
pub struct OpenList {
    pending: BTreeMap<Position, CanonicalDeal>,
}

impl OpenList {
    pub fn new() -> OpenList {
        OpenList::default()
    }

    /// Returns false when an equal deal is already pending.
    pub fn push(&mut self, deal: CanonicalDeal) -> bool {
        self.pending.insert(deal.position(), deal).is_none()
    }

    pub fn pop_greatest(&mut self) -> Option<CanonicalDeal> {
        self.pending.pop_last().map(|(_, deal)| deal)
    }

    pub fn len(&self) -> usize {
        self.pending.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pending.is_empty()
    }
}

/// Instrumentation of one partition build.
#[derive(Clone, Debug, Default, Serialize)]
pub struct BuildReport {
    pub generated_states: u64,
    pub independent_states: u64,
    pub duplicate_states: u64,
    pub entries_before_compaction: u64,
    pub entries_after_compaction: u64,
    pub elapsed_ms: u64,
    pub oracle_queries: u64,
    pub peak_open_len: u64,
}

/// Push the successors of the entry just inserted (one suit permutation per
/// ranked suit), then pop pending deals greatest-first, discarding any the
/// tree already covers. `None` when the open list empties.
pub fn next_independent_state(
    open: &mut OpenList,
    tree: &PartitionTree,
    last: Option<(&SetEntry, &CanonicalDeal)>,
    report: &mut BuildReport,
) -> Option<CanonicalDeal> {
    if let Some((entry, source)) = last {
        for suit in Suit::ALL {
            let ranked = entry.ranked_count(suit);
            if ranked == 0 {
                continue;
            }
            if let Some(successor) = next_suit_permutation(source, suit, ranked) {
                report.generated_states += 1;
                if !open.push(successor) {
                    // Already pending: cheap duplicate detection at push time.
                    report.duplicate_states += 1;
                }
            }
        }
    }
    report.peak_open_len = report.peak_open_len.max(open.len() as u64);
    while let Some(deal) = open.pop_greatest() {
        if tree.lookup_state(&deal).is_some() {
            report.duplicate_states += 1;
            continue;
        }
        return Some(deal);
    }
    None
}

/// Options for [`build_setro_db`].
#[derive(Clone, Copy, Debug, Default)]
pub struct SetroBuildOptions {
    /// Record per-state generalization traces (testing aid).
    pub record_traces: bool,
    /// Keep a clone of the tree as it was before compaction.
    pub keep_uncompacted: bool,
    /// After the build, sweep the whole partition asserting coverage and
    /// re-verify a 1% sample of entries against the oracle.
    pub debug_sweep: bool,
}

/// What happened to one independent state during a build.
#[derive(Clone, Debug)]
pub struct StateTrace {
    pub deal: CanonicalDeal,
    pub value: Value,
    pub probes: Vec<ProbeRecord>,
    pub entry: SetEntry,
}

pub struct SetroBuildOutcome {
    pub tree: PartitionTree,
    pub report: BuildReport,
    pub uncompacted: Option<PartitionTree>,
    pub traces: Vec<StateTrace>,
}

/// Build the set database of one partition: seed the open list with the
/// canonically first deal, then evaluate, generalize, insert and advance
/// until the open list empties; finally compact.
pub fn build_setro_db(
    partition: &Partition,
    prior: &dyn PriorDb,
    options: &SetroBuildOptions,
) -> Result<SetroBuildOutcome> {
    assert!(partition.tricks() >= 1);
    let start = Instant::now();
    let mut tree = PartitionTree::new(*partition);
    let mut open = OpenList::new();
    let mut report = BuildReport::default();
    let mut evaluator = Evaluator::new(prior);
    let mut traces = Vec::new();

    let seed = first_deal(&partition.shape, partition.leader, partition.trump);
    report.generated_states += 1;
    open.push(seed);

    let mut last: Option<(SetEntry, CanonicalDeal)> = None;
    loop {
        let next = {
            let last_ref = last.as_ref().map(|(entry, deal)| (entry, deal));
            next_independent_state(&mut open, &tree, last_ref, &mut report)
        };
        let Some(deal) = next else { break };
        report.independent_states += 1;
        let value = evaluator.lookup(&deal)?;
        let (entry, probes) =
            generalize_with(&deal, value, &mut evaluator, &mut report.oracle_queries)?;
        tree.insert(&entry);
        if options.record_traces {
            traces.push(StateTrace {
                deal,
                value,
                probes,
                entry: entry.clone(),
            });
        }
        last = Some((entry, deal));
    }

    report.entries_before_compaction = tree.entry_count();
    let uncompacted = options.keep_uncompacted.then(|| tree.clone());
    tree.compact();
    report.entries_after_compaction = tree.entry_count();
    debug_assert_eq!(
        report.generated_states,
        report.independent_states + report.duplicate_states
    );

    if options.debug_sweep {
        for deal in iter_deals(partition) {
            if tree.lookup_state(&deal).is_none() {
                return Err(Error::Invalid(format!(
                    "partition {partition} misses {deal} after the build"
                )));
            }
        }
        for (i, entry) in tree.entries().iter().enumerate() {
            if i % 100 == 0 && !oracle_with(entry, entry.value(), &mut evaluator)? {
                return Err(Error::Invalid(format!(
                    "entry {entry} fails re-verification in partition {partition}"
                )));
            }
        }
    }

    report.elapsed_ms = start.elapsed().as_millis() as u64;
    Ok(SetroBuildOutcome {
        tree,
        report,
        uncompacted,
        traces,
    })
}

// ---------------------------------------------------------------------------
// Set-wise oracle (optional fast path)
// ---------------------------------------------------------------------------

/// Set-wise consistency check, restricted to no-trump deals with no voids
/// and singleton-mask entries. Identical verdict to [`oracle`]; any position
/// outside the restriction (or any inconclusive line) defers to the
/// reference oracle.
pub fn oracle_setwise(
    entry: &SetEntry,
    value: Value,
    prior: &(impl SetPrior + ?Sized),
) -> Result<bool> {
    if setwise_supported(entry) {
        match check_setwise(entry, value, prior)? {
            SetVerdict::Confirmed => return Ok(true),
            SetVerdict::Refuted => return Ok(false),
            SetVerdict::Unknown => {}
        }
    }
    oracle(entry, value, prior)
}

fn setwise_supported(entry: &SetEntry) -> bool {
    let partition = entry.partition();
    if partition.trump != Trump::NoTrump || partition.tricks() < 1 {
        return false;
    }
    for suit in Suit::ALL {
        if partition.shape.suit_count(suit) == 0 {
            continue;
        }
        for player in Player::ALL {
            if partition.shape.len(player, suit) == 0 {
                return false;
            }
        }
        if entry
            .ranked_masks(suit)
            .iter()
            .any(|mask| mask.0.count_ones() != 1)
        {
            return false;
        }
    }
    true
}

#[derive(Debug, PartialEq, Eq)]
enum SetVerdict {
    Confirmed,
    Refuted,
    Unknown,
}

/// A set of deals with definite ranked holders and per-player x budgets.
#[derive(Clone)]
struct SetState {
    /// Per suit, holder (canonical index) of each ranked card, highest
    /// first. Positions encode the relative ranks.
    ranked: [Vec<u8>; 4],
    /// Per suit per player, count of interchangeable low cards.
    x_left: [[u8; 4]; 4],
    leader: Player,
    trump: Trump,
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
enum ClassPlay {
    /// Index into the suit's ranked vector (0 = highest).
    Ranked(usize),
    LowX,
}

impl SetState {
    fn from_entry(entry: &SetEntry) -> SetState {
        let partition = entry.partition();
        let mut ranked: [Vec<u8>; 4] = Default::default();
        let mut x_left = [[0u8; 4]; 4];
        for suit in Suit::ALL {
            let s = suit.index();
            let mut per_player_ranked = [0u8; 4];
            for mask in entry.ranked_masks(suit) {
                let player = mask.players().next().expect("singleton mask");
                ranked[s].push(player.canonical_index() as u8);
                per_player_ranked[player.canonical_index()] += 1;
            }
            for player in Player::ALL {
                let p = player.canonical_index();
                x_left[s][p] = partition.shape.len(player, suit) - per_player_ranked[p];
            }
        }
        SetState {
            ranked,
            x_left,
            leader: partition.leader,
            trump: partition.trump,
        }
    }

    fn suit_count(&self, suit: Suit) -> u8 {
        let s = suit.index();
        self.ranked[s].len() as u8 + self.x_left[s].iter().sum::<u8>()
    }

    fn tricks(&self) -> u8 {
        Suit::ALL
            .iter()
            .map(|&s| self.suit_count(s) as u32)
            .sum::<u32>() as u8
            / 4
    }

    fn player_len(&self, suit: Suit, player: Player) -> u8 {
        let s = suit.index();
        let p = player.canonical_index() as u8;
        self.ranked[s].iter().filter(|&&h| h == p).count() as u8
            + self.x_left[s][p as usize]
    }

    /// Class plays of a player in a suit: one representative per run of
    /// consecutive ranked cards plus an x when the player has one.
    fn class_plays(&self, suit: Suit, player: Player) -> Vec<ClassPlay> {
        let s = suit.index();
        let p = player.canonical_index() as u8;
        let mut plays = Vec::new();
        let mut i = 0;
        let holders = &self.ranked[s];
        while i < holders.len() {
            if holders[i] == p {
                plays.push(ClassPlay::Ranked(i));
                while i < holders.len() && holders[i] == p {
                    i += 1;
                }
            } else {
                i += 1;
            }
        }
        if self.x_left[s][p as usize] > 0 {
            plays.push(ClassPlay::LowX);
        }
        plays
    }

    /// Remove one full trick in `suit` and put `winner` on lead.
    fn after_trick(&self, suit: Suit, plays: &[(Player, ClassPlay); 4], winner: Player) -> SetState {
        let s = suit.index();
        let mut next = self.clone();
        let mut remove: Vec<usize> = plays
            .iter()
            .filter_map(|(_, play)| match play {
                ClassPlay::Ranked(index) => Some(*index),
                ClassPlay::LowX => None,
            })
            .collect();
        remove.sort_unstable_by(|a, b| b.cmp(a));
        for index in remove {
            next.ranked[s].remove(index);
        }
        for (player, play) in plays {
            if *play == ClassPlay::LowX {
                next.x_left[s][player.canonical_index()] -= 1;
            }
        }
        next.leader = winner;
        next
    }

    /// The state as a probe entry (singleton masks). Fails when a nonempty
    /// suit ends with no x cards, which the entry form cannot express.
    fn to_probe_entry(&self) -> Result<SetEntry> {
        let mut lengths = [[0u8; 4]; 4];
        for suit in Suit::ALL {
            let s = suit.index();
            for player in Player::ALL {
                lengths[player.canonical_index()][s] = self.player_len(suit, player);
            }
        }
        let shape = crate::shape::Shape::try_new(lengths)
            .map_err(|e| Error::Invalid(format!("unbalanced resultant set: {e}")))?;
        let partition = Partition::new(shape, self.leader, self.trump);
        let mut ranked: [Vec<HolderMask>; 4] = Default::default();
        let mut x_counts = [0u8; 4];
        for suit in Suit::ALL {
            let s = suit.index();
            let n = self.suit_count(suit);
            if n == 0 {
                continue;
            }
            let x: u8 = self.x_left[s].iter().sum();
            if x == 0 {
                return Err(Error::Invalid(
                    "resultant set constrains the lowest card".into(),
                ));
            }
            x_counts[s] = x;
            ranked[s] = self.ranked[s]
                .iter()
                .map(|&p| HolderMask::single(Player::from_canonical_index(p as usize)))
                .collect();
        }
        SetEntry::try_new(partition, ranked, x_counts, 0)
    }
}

/// Value interval with endpoint attainment: every member's value lies in
/// `[lo, hi]`; an attained endpoint is realized by some member.
#[derive(Clone, Copy, Debug)]
struct Interval {
    lo: i16,
    hi: i16,
    lo_attained: bool,
    hi_attained: bool,
}

impl Interval {
    fn shift(self, by: i16) -> Interval {
        Interval {
            lo: self.lo + by,
            hi: self.hi + by,
            ..self
        }
    }

    fn hull(self, other: Interval) -> Interval {
        Interval {
            lo: self.lo.min(other.lo),
            hi: self.hi.max(other.hi),
            lo_attained: false,
            hi_attained: false,
        }
    }
}

fn check_setwise(
    entry: &SetEntry,
    value: Value,
    prior: &(impl SetPrior + ?Sized),
) -> Result<SetVerdict> {
    let state = SetState::from_entry(entry);
    if let Some(verdict) = forced_trick_rule(&state, value, prior)? {
        return Ok(verdict);
    }
    let mut plays = Vec::with_capacity(4);
    match interval_of(&state, &mut plays, prior)? {
        Some(interval) => {
            let v = value as i16;
            if interval.lo == v && interval.hi == v {
                Ok(SetVerdict::Confirmed)
            } else if v < interval.lo
                || v > interval.hi
                || (interval.lo_attained && interval.lo != v)
                || (interval.hi_attained && interval.hi != v)
            {
                Ok(SetVerdict::Refuted)
            } else {
                Ok(SetVerdict::Unknown)
            }
        }
        None => Ok(SetVerdict::Unknown),
    }
}

fn nth_player(leader: Player, n: usize) -> Player {
    let mut player = leader;
    for _ in 0..n {
        player = player.next_clockwise();
    }
    player
}

/// All (suit, class) options of the player to act given plays so far.
fn options(state: &SetState, plays: &[(Player, Suit, ClassPlay)]) -> Vec<(Suit, ClassPlay)> {
    let player = nth_player(state.leader, plays.len());
    match plays.first() {
        Some(&(_, led, _)) => state
            .class_plays(led, player)
            .into_iter()
            .map(|c| (led, c))
            .collect(),
        None => Suit::ALL
            .iter()
            .flat_map(|&suit| {
                state
                    .class_plays(suit, player)
                    .into_iter()
                    .map(move |c| (suit, c))
            })
            .collect(),
    }
}

/// Sound value interval of the set under set-level play. `None` when some
/// line cannot be bounded (ambiguity the entry form cannot express).
fn interval_of(
    state: &SetState,
    plays: &mut Vec<(Player, Suit, ClassPlay)>,
    prior: &(impl SetPrior + ?Sized),
) -> Result<Option<Interval>> {
    if plays.len() == 4 {
        return line_interval(state, plays, prior);
    }
    let player = nth_player(state.leader, plays.len());
    let opts = options(state, plays);
    debug_assert!(!opts.is_empty());
    let mut combined: Option<Interval> = None;
    let maximizing = player.is_north_south();
    for (suit, class) in opts {
        plays.push((player, suit, class));
        let child = interval_of(state, plays, prior)?;
        plays.pop();
        let Some(child) = child else { return Ok(None) };
        combined = Some(match combined {
            None => child,
            Some(best) => combine(best, child, maximizing),
        });
    }
    Ok(combined)
}

/// Minimax combination. For a maximizer the upper endpoint's attainment
/// survives (the member attaining the best line's maximum attains the
/// node's maximum); the lower endpoint's does not, because different
/// members may exceed the bound through different lines. Dually for a
/// minimizer.
fn combine(a: Interval, b: Interval, maximizing: bool) -> Interval {
    if maximizing {
        let (hi, hi_attained) = if b.hi > a.hi {
            (b.hi, b.hi_attained)
        } else if a.hi > b.hi {
            (a.hi, a.hi_attained)
        } else {
            (a.hi, a.hi_attained || b.hi_attained)
        };
        Interval {
            lo: a.lo.max(b.lo),
            hi,
            lo_attained: false,
            hi_attained,
        }
    } else {
        let (lo, lo_attained) = if b.lo < a.lo {
            (b.lo, b.lo_attained)
        } else if a.lo < b.lo {
            (a.lo, a.lo_attained)
        } else {
            (a.lo, a.lo_attained || b.lo_attained)
        };
        Interval {
            lo,
            lo_attained,
            hi: a.hi.min(b.hi),
            hi_attained: false,
        }
    }
}

/// Interval of one completed trick line. The winner is certain when any
/// ranked card was played (an x is strictly lower); an all-x trick is
/// member-dependent, so the interval hulls over every possible winner.
fn line_interval(
    state: &SetState,
    plays: &[(Player, Suit, ClassPlay)],
    prior: &(impl SetPrior + ?Sized),
) -> Result<Option<Interval>> {
    let suit = plays[0].1;
    let trick: [(Player, ClassPlay); 4] = [
        (plays[0].0, plays[0].2),
        (plays[1].0, plays[1].2),
        (plays[2].0, plays[2].2),
        (plays[3].0, plays[3].2),
    ];
    match certain_winner(&trick) {
        Some(winner) => resultant_interval(state, suit, &trick, winner, prior),
        None => {
            // All four played x: hull over every resolution, unattained.
            let mut hull: Option<Interval> = None;
            for (winner, _) in trick {
                let Some(iv) = resultant_interval(state, suit, &trick, winner, prior)? else {
                    return Ok(None);
                };
                let iv = Interval {
                    lo_attained: false,
                    hi_attained: false,
                    ..iv
                };
                hull = Some(match hull {
                    None => iv,
                    Some(h) => h.hull(iv),
                });
            }
            Ok(hull)
        }
    }
}

fn certain_winner(trick: &[(Player, ClassPlay); 4]) -> Option<Player> {
    trick
        .iter()
        .filter_map(|(player, play)| match play {
            ClassPlay::Ranked(index) => Some((*index, *player)),
            ClassPlay::LowX => None,
        })
        .min_by_key(|(index, _)| *index)
        .map(|(_, player)| player)
}

fn resultant_interval(
    state: &SetState,
    suit: Suit,
    trick: &[(Player, ClassPlay); 4],
    winner: Player,
    prior: &(impl SetPrior + ?Sized),
) -> Result<Option<Interval>> {
    let ns_won = winner.is_north_south() as i16;
    let next = state.after_trick(suit, trick, winner);
    let probe = match next.to_probe_entry() {
        Ok(probe) => probe,
        Err(_) => return Ok(None),
    };
    let (lo, hi) = prior.overlap_bounds(&probe)?;
    Ok(Some(Interval {
        lo: lo as i16,
        hi: hi as i16,
        lo_attained: true,
        hi_attained: true,
    }
    .shift(ns_won)))
}

/// Decision rule for tricks that are forced up to the last player, under an
/// all-or-nothing claim (the claiming side needs every remaining trick).
/// The last player's single ranked class must win the trick and leave a
/// resultant worth exactly the rest; an attained deviation refutes, using
/// the freedom of x placements to make any x line lose.
fn forced_trick_rule(
    state: &SetState,
    value: Value,
    prior: &(impl SetPrior + ?Sized),
) -> Result<Option<SetVerdict>> {
    let d = state.tricks();
    let mut plays: Vec<(Player, Suit, ClassPlay)> = Vec::new();
    for position in 0..3 {
        let player = nth_player(state.leader, position);
        let opts = options(state, &plays);
        if opts.len() != 1 {
            return Ok(None);
        }
        plays.push((player, opts[0].0, opts[0].1));
    }
    let last = nth_player(state.leader, 3);
    let opts = options(state, &plays);
    if opts.len() < 2 {
        return Ok(None); // fully forced: the generic interval is exact
    }
    let side_ns = last.is_north_south();
    let all_or_nothing = (side_ns && value == d) || (!side_ns && value == 0);
    if !all_or_nothing {
        return Ok(None);
    }
    let ranked: Vec<usize> = opts
        .iter()
        .filter_map(|(_, class)| match class {
            ClassPlay::Ranked(index) => Some(*index),
            ClassPlay::LowX => None,
        })
        .collect();
    let has_x = opts.iter().any(|(_, class)| *class == ClassPlay::LowX);
    if ranked.len() != 1 || opts.len() > 2 {
        return Ok(None);
    }
    let suit = plays[0].1;
    let trick: [(Player, Suit, ClassPlay); 4] = [
        plays[0],
        plays[1],
        plays[2],
        (last, suit, ClassPlay::Ranked(ranked[0])),
    ];
    let trick_plays: [(Player, ClassPlay); 4] = trick.map(|(p, _, c)| (p, c));
    let winner = certain_winner(&trick_plays).expect("the last player played a ranked card");
    if winner.is_north_south() != side_ns {
        // Even the best card loses the trick, so the claiming side cannot
        // take them all (or concede none).
        return Ok(Some(SetVerdict::Refuted));
    }
    let Some(interval) = resultant_interval(state, suit, &trick_plays, winner, prior)? else {
        return Ok(None);
    };
    let needed = value as i16;
    if interval.lo == needed && interval.hi == needed {
        // This line alone banks the trick and exactly the rest for every
        // member; no member can exceed an all-or-nothing claim.
        return Ok(Some(SetVerdict::Confirmed));
    }
    let deviates = interval.lo != needed || interval.hi != needed;
    if !deviates {
        return Ok(None);
    }
    if !has_x {
        // Single line: attained endpoints are member values.
        return Ok(Some(SetVerdict::Refuted));
    }
    // The x line must be losable for the claiming side so that the deviating
    // member cannot rescue the claim through it.
    if x_line_losable(state, &plays, last, suit, side_ns) {
        return Ok(Some(SetVerdict::Refuted));
    }
    Ok(None)
}

/// Whether the line where the last player contributes an x can be made to
/// go against `side_ns` by choosing x placements: either a forced ranked
/// card of the other side already wins it, or the trick is all-x with the
/// other side holding one of the x's (which can then be the highest).
fn x_line_losable(
    state: &SetState,
    forced: &[(Player, Suit, ClassPlay)],
    last: Player,
    suit: Suit,
    side_ns: bool,
) -> bool {
    let _ = (state, last, suit);
    let ranked_plays: Vec<(Player, usize)> = forced
        .iter()
        .filter_map(|(player, _, class)| match class {
            ClassPlay::Ranked(index) => Some((*player, *index)),
            ClassPlay::LowX => None,
        })
        .collect();
    if ranked_plays.is_empty() {
        // All-x trick: the opposing side certainly contributed x's.
        return forced
            .iter()
            .any(|(player, _, _)| player.is_north_south() != side_ns);
    }
    let (winner, _) = ranked_plays
        .iter()
        .copied()
        .min_by_key(|(_, index)| *index)
        .expect("nonempty");
    winner.is_north_south() != side_ns
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prior::ZeroPrior;
    use crate::retro::{build_retro_db, RetroDb, RetroPriorSet, StateIndexer};
    use crate::rules::minimax_value;
    use crate::setdb::SetroPriorSet;
    use crate::shape::Shape;

    fn partition(d: u8, leader: Player) -> Partition {
        Partition::new(Shape::single_suit(d), leader, Trump::NoTrump)
    }

    /// Build single-suit set databases bottom-up through depth `d` for all
    /// leaders, returning the trees plus the outcome of the east-lead
    /// partition at depth `d`.
    fn build_single_suit(
        depth: u8,
        options: &SetroBuildOptions,
    ) -> (HashMap<Partition, PartitionTree>, SetroBuildOutcome) {
        let mut trees: HashMap<Partition, PartitionTree> = HashMap::new();
        let mut outcome = None;
        for d in 1..=depth {
            let mut level = HashMap::new();
            for leader in Player::ALL {
                let part = partition(d, leader);
                let built = if d == 1 {
                    build_setro_db(&part, &ZeroPrior, options).unwrap()
                } else {
                    let prior = SetroPriorSet { trees: &trees };
                    build_setro_db(&part, &prior, options).unwrap()
                };
                if d == depth && leader == Player::East {
                    level.insert(part, built.tree.clone());
                    outcome = Some(built);
                } else {
                    level.insert(part, built.tree);
                }
            }
            trees.extend(level);
        }
        (trees, outcome.unwrap())
    }

    #[test]
    fn four_card_probe_trace_matches_the_published_search() {
        let options = SetroBuildOptions {
            record_traces: true,
            ..Default::default()
        };
        let (_, outcome) = build_single_suit(1, &options);
        // Four independent states, each probing 3 (true) then 4 (false).
        assert_eq!(outcome.report.independent_states, 4);
        for trace in &outcome.traces {
            let probes: Vec<(u8, bool)> = trace
                .probes
                .iter()
                .map(|p| (p.x_count, p.consistent))
                .collect();
            assert_eq!(probes, vec![(3, true), (4, false)]);
            assert_eq!(trace.entry.x_count(Suit::Spades), 3);
        }
        assert_eq!(outcome.report.entries_before_compaction, 4);
        assert_eq!(outcome.report.entries_after_compaction, 2);
    }

    #[test]
    fn eight_card_first_state_probes_five_seven_six() {
        let options = SetroBuildOptions {
            record_traces: true,
            ..Default::default()
        };
        let (_, outcome) = build_single_suit(2, &options);
        let first = &outcome.traces[0];
        assert_eq!(
            first.deal,
            CanonicalDeal::parse("N:98... E:54... S:76... W:32... leader=E trump=NT").unwrap()
        );
        assert_eq!(first.value, 2);
        let probes: Vec<(u8, bool)> = first
            .probes
            .iter()
            .map(|p| (p.x_count, p.consistent))
            .collect();
        assert_eq!(probes, vec![(5, true), (7, false), (6, true)]);
        assert_eq!(first.entry.x_count(Suit::Spades), 6);
        // The next independent state trades the eight to South.
        let second = &outcome.traces[1];
        assert_eq!(
            second.deal,
            CanonicalDeal::parse("N:97... E:54... S:86... W:32... leader=E trump=NT").unwrap()
        );
    }

    #[test]
    fn single_suit_entry_counts_track_the_published_database() {
        let (_, d1) = build_single_suit(1, &SetroBuildOptions::default());
        assert_eq!(d1.report.entries_after_compaction, 2);
        let (_, d2) = build_single_suit(2, &SetroBuildOptions::default());
        let entries = d2.report.entries_after_compaction;
        assert!(
            (15..=23).contains(&entries),
            "depth-2 entry count {entries} outside 19±4"
        );
    }

    #[test]
    fn eight_card_lookup_agrees_with_retro_everywhere() {
        let (trees, outcome) = build_single_suit(2, &SetroBuildOptions::default());
        let _ = trees;
        let part = partition(2, Player::East);
        // Retro side.
        let mut retro: HashMap<Partition, RetroDb> = HashMap::new();
        for leader in Player::ALL {
            let p1 = partition(1, leader);
            retro.insert(p1, build_retro_db(&p1, &ZeroPrior).unwrap());
        }
        let rdb = build_retro_db(&part, &RetroPriorSet { dbs: &retro }).unwrap();
        let indexer = StateIndexer::new(part);
        for index in 0..indexer.state_count() {
            let deal = indexer.unrank(index).unwrap();
            let tree_value = outcome.tree.lookup_state(&deal);
            assert_eq!(tree_value, Some(rdb.value_at(index)), "mismatch at {deal}");
        }
        assert_eq!(indexer.state_count(), 2520);
    }

    #[test]
    fn database_lookup_matches_minimax_on_all_2520_deals() {
        let (trees, _) = build_single_suit(1, &SetroBuildOptions::default());
        let prior = SetroPriorSet { trees: &trees };
        let part = partition(2, Player::East);
        for deal in iter_deals(&part) {
            assert_eq!(
                database_lookup(&deal, &prior).unwrap(),
                minimax_value(&deal)
            );
        }
    }

    #[test]
    fn report_identity_holds() {
        let (_, outcome) = build_single_suit(2, &SetroBuildOptions::default());
        let r = &outcome.report;
        assert_eq!(r.generated_states, r.independent_states + r.duplicate_states);
        assert_eq!(r.independent_states, r.entries_before_compaction);
        assert!(r.oracle_queries > 0);
        assert!(r.peak_open_len >= 1);
    }

    #[test]
    fn debug_sweep_passes_on_single_suit_builds() {
        let options = SetroBuildOptions {
            debug_sweep: true,
            ..Default::default()
        };
        let (_, outcome) = build_single_suit(2, &options);
        assert_eq!(outcome.report.entries_after_compaction >= 15, true);
    }

    #[test]
    fn incomplete_prior_is_reported() {
        let trees = HashMap::new();
        let prior = SetroPriorSet { trees: &trees };
        let err = build_setro_db(
            &partition(2, Player::East),
            &prior,
            &SetroBuildOptions::default(),
        )
        .unwrap_err();
        assert!(matches!(err, Error::MissingPartition(_)));
    }

    #[test]
    fn oracle_verdicts_on_the_published_candidate_ladder() {
        let (trees, _) = build_single_suit(1, &SetroBuildOptions::default());
        let prior = SetroPriorSet { trees: &trees };
        let deal = first_deal(&Shape::single_suit(2), Player::East, Trump::NoTrump);
        // Candidates with 1..=6 x's are consistent at two tricks; 7 and 8
        // are not.
        for x in 1..=8u8 {
            let candidate = candidate_with_value(&deal, [x, 0, 0, 0], 2).unwrap();
            let expected = x <= 6;
            assert_eq!(
                oracle(&candidate, 2, &prior).unwrap(),
                expected,
                "x-count {x}"
            );
        }
        // A singleton entry is consistent at its own value.
        let single = candidate_with_value(&deal, [1, 0, 0, 0], 2).unwrap();
        assert!(oracle(&single, 2, &prior).unwrap());
        assert!(!oracle(&single, 1, &prior).unwrap());
    }

    #[test]
    fn setwise_oracle_confirms_f_and_refutes_g() {
        let (trees, _) = build_single_suit(1, &SetroBuildOptions::default());
        let prior = SetroPriorSet { trees: &trees };
        let deal = first_deal(&Shape::single_suit(2), Player::East, Trump::NoTrump);
        let f = candidate_with_value(&deal, [6, 0, 0, 0], 2).unwrap();
        assert_eq!(check_setwise(&f, 2, &prior).unwrap(), SetVerdict::Confirmed);
        assert!(oracle_setwise(&f, 2, &prior).unwrap());
        let g = candidate_with_value(&deal, [7, 0, 0, 0], 2).unwrap();
        assert_eq!(check_setwise(&g, 2, &prior).unwrap(), SetVerdict::Refuted);
        assert!(!oracle_setwise(&g, 2, &prior).unwrap());
        // h defers but still agrees through the reference oracle.
        let h = candidate_with_value(&deal, [8, 0, 0, 0], 2).unwrap();
        assert!(!oracle_setwise(&h, 2, &prior).unwrap());
    }

    #[test]
    fn setwise_oracle_agrees_with_reference_on_random_probes() {
        use rand::{Rng, SeedableRng};
        let (trees, _) = build_single_suit(1, &SetroBuildOptions::default());
        let prior = SetroPriorSet { trees: &trees };
        let part = partition(2, Player::East);
        let indexer = StateIndexer::new(part);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0x0dd5_c0de);
        let mut fast_path_hits = 0;
        for _ in 0..10_000 {
            let deal = indexer
                .unrank(rng.gen_range(0..indexer.state_count()))
                .unwrap();
            let x = rng.gen_range(1..=8u8);
            let v = rng.gen_range(0..=2u8);
            let candidate = candidate_with_value(&deal, [x, 0, 0, 0], v).unwrap();
            let reference = oracle(&candidate, v, &prior).unwrap();
            if setwise_supported(&candidate) {
                if check_setwise(&candidate, v, &prior).unwrap() != SetVerdict::Unknown {
                    fast_path_hits += 1;
                }
            }
            assert_eq!(oracle_setwise(&candidate, v, &prior).unwrap(), reference);
        }
        assert!(fast_path_hits > 0, "the fast path never engaged");
    }

    #[test]
    fn open_list_pops_greatest_position_first() {
        let mut open = OpenList::new();
        let shape = Shape::single_suit(1);
        let a = first_deal(&shape, Player::East, Trump::NoTrump);
        let b = next_suit_permutation(&a, Suit::Spades, 4).unwrap();
        assert!(open.push(a));
        assert!(open.push(b));
        assert!(!open.push(a), "no duplicates pending");
        assert_eq!(open.pop_greatest().unwrap(), b);
        assert_eq!(open.pop_greatest().unwrap(), a);
        assert!(open.pop_greatest().is_none());
    }

    #[test]
    fn covering_entry_empties_the_open_list() {
        // After inserting an entry covering the whole partition, pushing its
        // successors yields nothing and the driver stops.
        let part = partition(1, Player::East);
        let mut tree = PartitionTree::new(part);
        let deal = first_deal(&part.shape, part.leader, part.trump);
        let whole = candidate_with_value(&deal, [4, 0, 0, 0], 0).unwrap();
        tree.insert(&whole);
        let mut open = OpenList::new();
        let mut report = BuildReport::default();
        let next = next_independent_state(&mut open, &tree, Some((&whole, &deal)), &mut report);
        assert_eq!(next, None);
        assert_eq!(report.generated_states, 0);
    }
}
