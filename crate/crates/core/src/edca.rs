//! IEEE 802.11p EDCA MAC model: four prioritized drop-tail queues with
//! AIFS plus binary-exponential-backoff contention.
//!
//! [`MacState`] holds the queues and per-AC contention state; the event
//! loop in [`crate::sim`] drives it. Contention follows the usual EDCA
//! shape: once the medium goes idle every backlogged AC waits its AIFS,
//! then counts down a backoff drawn uniformly from `[0, CW]`; the first
//! counter to hit zero transmits, a simultaneous expiry within the station
//! is a virtual collision won by the higher AC index, and counters freeze
//! whenever the medium goes busy.

use std::collections::VecDeque;

use rand::Rng;
use serde::Deserialize;
use thiserror::Error;

use crate::units::{Nanos, NANOS_PER_MICRO};

pub const AC_COUNT: usize = 4;
/// Background traffic (lowest priority).
pub const AC_BK: usize = 0;
/// Best effort.
pub const AC_BE: usize = 1;
/// Video.
pub const AC_VI: usize = 2;
/// Voice (highest priority).
pub const AC_VO: usize = 3;

/// 802.11p 10 MHz timing: SIFS 32 us, slot 13 us. These reproduce the
/// standard T_AIFS values for both channel parameter sets.
pub const DEFAULT_SIFS_US: u64 = 32;
pub const DEFAULT_SLOT_US: u64 = 13;
pub const DEFAULT_QUEUE_CAPACITY: usize = 50;
pub const DEFAULT_RETRY_LIMIT: u32 = 7;

/// Which of the two standard EDCA parameter tables to use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ParameterSet {
    /// Control channel.
    Cch,
    /// Service channel (the default here).
    Sch,
}

/// Per-AC contention parameters and queue capacity.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AccessCategoryConfig {
    pub ac_index: usize,
    /// Initial contention window, of the form `2^k - 1`.
    pub cw_min: u32,
    /// Contention window cap, of the form `2^k - 1`.
    pub cw_max: u32,
    pub aifsn: u32,
    /// Queue capacity in packets (the interface queue, IFQ).
    pub queue_capacity: usize,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum AcConfigError {
    #[error("AC[{ac}]: contention window {value} is not of the form 2^k - 1")]
    ContentionWindowShape { ac: usize, value: u32 },
    #[error("AC[{ac}]: cw_min {cw_min} exceeds cw_max {cw_max}")]
    ContentionWindowOrder { ac: usize, cw_min: u32, cw_max: u32 },
    #[error("AC[{ac}]: aifsn must be at least 1")]
    AifsnTooSmall { ac: usize },
    #[error("AC[{ac}]: queue capacity must be at least 1")]
    ZeroCapacity { ac: usize },
}

impl AccessCategoryConfig {
    pub fn validate(&self) -> Result<(), AcConfigError> {
        for value in [self.cw_min, self.cw_max] {
            if !(value + 1).is_power_of_two() {
                return Err(AcConfigError::ContentionWindowShape {
                    ac: self.ac_index,
                    value,
                });
            }
        }
        if self.cw_min > self.cw_max {
            return Err(AcConfigError::ContentionWindowOrder {
                ac: self.ac_index,
                cw_min: self.cw_min,
                cw_max: self.cw_max,
            });
        }
        if self.aifsn < 1 {
            return Err(AcConfigError::AifsnTooSmall { ac: self.ac_index });
        }
        if self.queue_capacity == 0 {
            return Err(AcConfigError::ZeroCapacity { ac: self.ac_index });
        }
        Ok(())
    }
}

/// The standard access category table for the chosen channel.
///
/// CCH rows (BK..VO): CW 15/1023 aifsn 9, 7/15 aifsn 6, 3/7 aifsn 3,
/// 3/7 aifsn 2. SCH rows: 31/1023 aifsn 7, 31/1023 aifsn 3, 15/31 aifsn 2,
/// 7/15 aifsn 2.
pub fn standard_ac_set(
    set: ParameterSet,
    queue_capacity: usize,
) -> [AccessCategoryConfig; AC_COUNT] {
    let rows: [(u32, u32, u32); AC_COUNT] = match set {
        ParameterSet::Cch => [(15, 1023, 9), (7, 15, 6), (3, 7, 3), (3, 7, 2)],
        ParameterSet::Sch => [(31, 1023, 7), (31, 1023, 3), (15, 31, 2), (7, 15, 2)],
    };
    core::array::from_fn(|ac| AccessCategoryConfig {
        ac_index: ac,
        cw_min: rows[ac].0,
        cw_max: rows[ac].1,
        aifsn: rows[ac].2,
        queue_capacity,
    })
}

/// Arbitration inter-frame space: `SIFS + AIFSN x slot`, in microseconds.
pub fn derive_aifs(aifsn: u32, sifs_us: u64, slot_us: u64) -> u64 {
    sifs_us + u64::from(aifsn) * slot_us
}

/// Air time of one transmission attempt in microseconds:
/// `overhead + 8 * payload / rate`.
pub fn transmission_duration_us(payload_bytes: u32, phy_rate_bps: f64, overhead_us: f64) -> f64 {
    debug_assert!(phy_rate_bps > 0.0);
    overhead_us + 8.0 * f64::from(payload_bytes) / phy_rate_bps * 1e6
}

/// MAC-wide parameters shared by all ACs.
#[derive(Debug, Clone, Copy)]
pub struct MacParams {
    pub sifs_us: u64,
    pub slot_us: u64,
    pub retry_limit: u32,
    pub acs: [AccessCategoryConfig; AC_COUNT],
}

impl MacParams {
    pub fn new(acs: [AccessCategoryConfig; AC_COUNT]) -> Self {
        Self {
            sifs_us: DEFAULT_SIFS_US,
            slot_us: DEFAULT_SLOT_US,
            retry_limit: DEFAULT_RETRY_LIMIT,
            acs,
        }
    }

    pub fn aifs_ns(&self, ac: usize) -> Nanos {
        derive_aifs(self.acs[ac].aifsn, self.sifs_us, self.slot_us) * NANOS_PER_MICRO
    }

    pub fn slot_ns(&self) -> Nanos {
        self.slot_us * NANOS_PER_MICRO
    }
}

/// Where a queued MAC payload came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PacketOrigin {
    Video { packet_id: u64 },
    Background { source: usize },
}

/// A payload sitting in (or leaving) an AC queue.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct QueuedPacket {
    pub size: u32,
    /// Expiry time; `None` for background traffic, which has no deadline.
    pub deadline: Option<Nanos>,
    pub origin: PacketOrigin,
}

/// Per-AC counters. `arrivals = enqueued + dropped_overflow`, and at any
/// instant `arrivals = transmitted + dropped_overflow + dropped_deadline +
/// dropped_retry + queued + in_flight`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct AcStats {
    pub arrivals: u64,
    pub enqueued: u64,
    pub transmitted: u64,
    pub dropped_overflow: u64,
    pub dropped_deadline: u64,
    pub dropped_retry: u64,
}

impl AcStats {
    /// Conservation identity with `residual` packets still held by the MAC.
    pub fn conserved(&self, residual: u64) -> bool {
        self.arrivals
            == self.transmitted
                + self.dropped_overflow
                + self.dropped_deadline
                + self.dropped_retry
                + residual
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EnqueueOutcome {
    Accepted,
    DroppedOverflow,
}

/// Outcome of a finished transmission attempt.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TxResolution {
    /// Channel success; the packet left the MAC.
    Delivered(QueuedPacket),
    /// Channel loss, retry budget left; the packet is back at head of line.
    Requeued,
    /// Channel loss and the retry limit was exhausted; the packet is gone.
    RetryDropped(QueuedPacket),
}

#[derive(Debug)]
pub struct AcQueue {
    pub config: AccessCategoryConfig,
    queue: VecDeque<QueuedPacket>,
    /// Current contention window.
    pub cw: u32,
    /// Remaining backoff slots; `None` means a fresh draw is needed.
    pub backoff: Option<u32>,
    /// When the AIFS wait began for the current idle period.
    pub anchor: Option<Nanos>,
    pub retry_count: u32,
    pub stats: AcStats,
}

impl AcQueue {
    fn new(config: AccessCategoryConfig) -> Self {
        Self {
            config,
            queue: VecDeque::new(),
            cw: config.cw_min,
            backoff: None,
            anchor: None,
            retry_count: 0,
            stats: AcStats::default(),
        }
    }

    pub fn len(&self) -> usize {
        self.queue.len()
    }

    pub fn is_empty(&self) -> bool {
        self.queue.is_empty()
    }

    fn clear_contention(&mut self) {
        self.anchor = None;
        self.backoff = None;
    }
}

/// A packet currently on the air.
#[derive(Debug, Clone, Copy)]
pub struct InFlight {
    pub ac: usize,
    pub packet: QueuedPacket,
    pub started: Nanos,
}

/// Queues, contention state and statistics of one EDCA station.
#[derive(Debug)]
pub struct MacState {
    pub params: MacParams,
    acs: [AcQueue; AC_COUNT],
    in_flight: Option<InFlight>,
}

impl MacState {
    pub fn new(params: MacParams) -> Self {
        let acs = core::array::from_fn(|ac| AcQueue::new(params.acs[ac]));
        Self {
            params,
            acs,
            in_flight: None,
        }
    }

    pub fn ac(&self, ac: usize) -> &AcQueue {
        &self.acs[ac]
    }

    pub fn ac_mut(&mut self, ac: usize) -> &mut AcQueue {
        &mut self.acs[ac]
    }

    pub fn qlen(&self, ac: usize) -> usize {
        self.acs[ac].len()
    }

    pub fn stats(&self, ac: usize) -> AcStats {
        self.acs[ac].stats
    }

    pub fn in_flight(&self) -> Option<&InFlight> {
        self.in_flight.as_ref()
    }

    /// Packets currently held by the MAC for this AC (queued + on air).
    pub fn occupancy(&self, ac: usize) -> usize {
        let flying = match &self.in_flight {
            Some(f) if f.ac == ac => 1,
            _ => 0,
        };
        self.acs[ac].len() + flying
    }

    pub fn any_backlog(&self) -> bool {
        self.acs.iter().any(|q| !q.is_empty())
    }

    /// FIFO enqueue with drop-tail overflow. The in-flight packet counts
    /// toward capacity so a failed attempt can always be requeued.
    pub fn enqueue(&mut self, ac: usize, packet: QueuedPacket) -> EnqueueOutcome {
        let capacity = self.acs[ac].config.queue_capacity;
        let occupancy = self.occupancy(ac);
        let q = &mut self.acs[ac];
        q.stats.arrivals += 1;
        if occupancy >= capacity {
            q.stats.dropped_overflow += 1;
            return EnqueueOutcome::DroppedOverflow;
        }
        q.queue.push_back(packet);
        q.stats.enqueued += 1;
        debug_assert!(self.occupancy(ac) <= capacity);
        EnqueueOutcome::Accepted
    }

    /// Remove every queued video packet whose deadline lies strictly in
    /// the past (`deadline < now`; a packet expiring exactly now is kept).
    /// Returns the removed packets tagged with their AC.
    pub fn purge_expired(&mut self, now: Nanos) -> Vec<(usize, QueuedPacket)> {
        let mut removed = Vec::new();
        for ac in 0..AC_COUNT {
            let q = &mut self.acs[ac];
            let before = q.queue.len();
            if before == 0 {
                continue;
            }
            let mut kept = VecDeque::with_capacity(before);
            for pkt in q.queue.drain(..) {
                match pkt.deadline {
                    Some(deadline) if deadline < now => {
                        q.stats.dropped_deadline += 1;
                        removed.push((ac, pkt));
                    }
                    _ => kept.push_back(pkt),
                }
            }
            q.queue = kept;
            if q.queue.is_empty() {
                q.clear_contention();
            }
        }
        removed
    }

    /// Draw a fresh backoff uniformly from `[0, cw]` if none is pending.
    pub fn ensure_backoff<R: Rng + ?Sized>(&mut self, ac: usize, rng: &mut R) {
        let q = &mut self.acs[ac];
        if q.backoff.is_none() {
            q.backoff = Some(rng.random_range(0..=q.cw));
        }
    }

    /// Double the contention window, capped at `cw_max`.
    pub fn double_cw(&mut self, ac: usize) {
        let q = &mut self.acs[ac];
        q.cw = (q.cw * 2 + 1).min(q.config.cw_max);
    }

    /// Absolute time this AC's counter reaches zero, if it is contending.
    pub fn finish_time(&self, ac: usize) -> Option<Nanos> {
        let q = &self.acs[ac];
        if q.is_empty() {
            return None;
        }
        let anchor = q.anchor?;
        let backoff = q.backoff?;
        Some(anchor + self.params.aifs_ns(ac) + Nanos::from(backoff) * self.params.slot_ns())
    }

    /// Earliest finish time over all contending ACs.
    pub fn earliest_finish(&self) -> Option<Nanos> {
        (0..AC_COUNT).filter_map(|ac| self.finish_time(ac)).min()
    }

    /// Freeze one AC's countdown at `now`: credit the slots fully elapsed
    /// since its AIFS completed and drop the anchor.
    pub fn freeze(&mut self, ac: usize, now: Nanos) {
        let aifs = self.params.aifs_ns(ac);
        let slot = self.params.slot_ns();
        let q = &mut self.acs[ac];
        if let (Some(anchor), Some(backoff)) = (q.anchor, q.backoff) {
            let counting = now.saturating_sub(anchor).saturating_sub(aifs);
            let completed = (counting / slot).min(Nanos::from(backoff)) as u32;
            q.backoff = Some(backoff - completed);
        }
        q.anchor = None;
    }

    pub fn freeze_all(&mut self, now: Nanos) {
        for ac in 0..AC_COUNT {
            self.freeze(ac, now);
        }
    }

    /// Pop the head-of-line packet of `ac` onto the air.
    pub fn begin_tx(&mut self, ac: usize, now: Nanos) -> QueuedPacket {
        debug_assert!(self.in_flight.is_none(), "tx already in flight");
        let q = &mut self.acs[ac];
        let packet = q.queue.pop_front().expect("begin_tx on empty queue");
        q.backoff = None;
        q.anchor = None;
        self.in_flight = Some(InFlight {
            ac,
            packet,
            started: now,
        });
        packet
    }

    /// Resolve the in-flight attempt given the channel verdict.
    pub fn resolve_tx(&mut self, lost: bool) -> (usize, TxResolution) {
        let flight = self.in_flight.take().expect("resolve_tx without tx");
        let ac = flight.ac;
        let q = &mut self.acs[ac];
        if !lost {
            q.stats.transmitted += 1;
            q.cw = q.config.cw_min;
            q.retry_count = 0;
            return (ac, TxResolution::Delivered(flight.packet));
        }
        q.retry_count += 1;
        if q.retry_count > self.params.retry_limit {
            q.stats.dropped_retry += 1;
            q.cw = q.config.cw_min;
            q.retry_count = 0;
            (ac, TxResolution::RetryDropped(flight.packet))
        } else {
            let cw_max = q.config.cw_max;
            q.cw = (q.cw * 2 + 1).min(cw_max);
            q.queue.push_front(flight.packet);
            (ac, TxResolution::Requeued)
        }
    }

    /// Queue capacity invariant, checked by the event loop after every event.
    pub fn assert_capacity(&self) {
        for ac in 0..AC_COUNT {
            debug_assert!(
                self.occupancy(ac) <= self.acs[ac].config.queue_capacity,
                "AC[{ac}] over capacity"
            );
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream_rng;

    fn video(packet_id: u64, deadline: Nanos) -> QueuedPacket {
        QueuedPacket {
            size: 1024,
            deadline: Some(deadline),
            origin: PacketOrigin::Video { packet_id },
        }
    }

    #[test]
    fn aifs_matches_voice_best_effort_background_rows() {
        assert_eq!(derive_aifs(2, 32, 13), 58);
        assert_eq!(derive_aifs(6, 32, 13), 110);
        assert_eq!(derive_aifs(9, 32, 13), 149);
    }

    #[test]
    fn standard_tables_reproduce_all_aifs_values() {
        let expected_cch = [149, 110, 71, 58];
        let expected_sch = [123, 71, 58, 58];
        for (set, expected) in [
            (ParameterSet::Cch, expected_cch),
            (ParameterSet::Sch, expected_sch),
        ] {
            let acs = standard_ac_set(set, DEFAULT_QUEUE_CAPACITY);
            for (ac, want) in expected.into_iter().enumerate() {
                assert_eq!(
                    derive_aifs(acs[ac].aifsn, DEFAULT_SIFS_US, DEFAULT_SLOT_US),
                    want,
                    "{set:?} AC[{ac}]"
                );
                acs[ac].validate().unwrap();
            }
        }
    }

    #[test]
    fn enqueue_respects_ifq_of_50() {
        let params = MacParams::new(standard_ac_set(ParameterSet::Sch, 50));
        let mut mac = MacState::new(params);
        for id in 0..49 {
            assert_eq!(
                mac.enqueue(AC_VI, video(id, 1_000)),
                EnqueueOutcome::Accepted
            );
        }
        assert_eq!(mac.qlen(AC_VI), 49);
        assert_eq!(
            mac.enqueue(AC_VI, video(49, 1_000)),
            EnqueueOutcome::Accepted
        );
        assert_eq!(mac.qlen(AC_VI), 50);
        assert_eq!(
            mac.enqueue(AC_VI, video(50, 1_000)),
            EnqueueOutcome::DroppedOverflow
        );
        assert_eq!(mac.qlen(AC_VI), 50);
        assert_eq!(mac.stats(AC_VI).dropped_overflow, 1);
        assert_eq!(mac.stats(AC_VI).arrivals, 51);
    }

    #[test]
    fn enqueue_into_empty_queue() {
        let params = MacParams::new(standard_ac_set(ParameterSet::Sch, 50));
        let mut mac = MacState::new(params);
        assert_eq!(
            mac.enqueue(AC_BE, video(0, 1_000)),
            EnqueueOutcome::Accepted
        );
        assert_eq!(mac.qlen(AC_BE), 1);
    }

    #[test]
    fn purge_drops_strictly_expired_only() {
        let params = MacParams::new(standard_ac_set(ParameterSet::Sch, 50));
        let mut mac = MacState::new(params);
        let ms = crate::units::NANOS_PER_MILLI;
        mac.enqueue(AC_VI, video(0, 100 * ms));
        mac.enqueue(AC_VI, video(1, 100 * ms));
        let removed = mac.purge_expired(100 * ms);
        assert!(removed.is_empty(), "deadline == now is kept");
        let removed = mac.purge_expired(101 * ms);
        assert_eq!(removed.len(), 2);
        assert_eq!(mac.stats(AC_VI).dropped_deadline, 2);
        assert_eq!(mac.qlen(AC_VI), 0);
    }

    #[test]
    fn purge_counts_exactly_the_expired() {
        let params = MacParams::new(standard_ac_set(ParameterSet::Sch, 50));
        let mut mac = MacState::new(params);
        for id in 0..5u64 {
            let deadline = if id < 2 { 50 } else { 500 };
            mac.enqueue(AC_VI, video(id, deadline));
        }
        let removed = mac.purge_expired(100);
        assert_eq!(removed.len(), 2);
        assert_eq!(mac.qlen(AC_VI), 3);
    }

    #[test]
    fn background_packets_never_expire() {
        let params = MacParams::new(standard_ac_set(ParameterSet::Sch, 50));
        let mut mac = MacState::new(params);
        mac.enqueue(
            AC_BK,
            QueuedPacket {
                size: 100,
                deadline: None,
                origin: PacketOrigin::Background { source: 0 },
            },
        );
        assert!(mac.purge_expired(u64::MAX).is_empty());
        assert_eq!(mac.qlen(AC_BK), 1);
    }

    #[test]
    fn transmission_duration_examples() {
        let d = transmission_duration_us(1024, 6e6, 0.0);
        assert!((d - 8.0 * 1024.0 / 6e6 * 1e6).abs() < 1e-9);
        assert!((d - 1365.33).abs() < 0.01);
        assert_eq!(transmission_duration_us(0, 6e6, 42.5), 42.5);
        let slow = transmission_duration_us(1024, 6e6, 0.0);
        let fast = transmission_duration_us(1024, 12e6, 0.0);
        assert!((slow - 2.0 * fast).abs() < 1e-9);
    }

    #[test]
    fn backoff_draw_stays_within_window() {
        let params = MacParams::new(standard_ac_set(ParameterSet::Sch, 50));
        let mut mac = MacState::new(params);
        let mut rng = stream_rng(9, "backoff");
        mac.enqueue(AC_VI, video(0, u64::MAX));
        for _ in 0..2000 {
            mac.ac_mut(AC_VI).backoff = None;
            mac.ensure_backoff(AC_VI, &mut rng);
            let b = mac.ac(AC_VI).backoff.unwrap();
            assert!(b <= mac.ac(AC_VI).cw);
        }
    }

    #[test]
    fn cw_doubles_and_caps() {
        let params = MacParams::new(standard_ac_set(ParameterSet::Sch, 50));
        let mut mac = MacState::new(params);
        assert_eq!(mac.ac(AC_VI).cw, 15);
        mac.double_cw(AC_VI);
        assert_eq!(mac.ac(AC_VI).cw, 31);
        mac.double_cw(AC_VI);
        assert_eq!(mac.ac(AC_VI).cw, 31, "capped at cw_max");
    }

    #[test]
    fn freeze_credits_elapsed_slots() {
        let params = MacParams::new(standard_ac_set(ParameterSet::Sch, 50));
        let mut mac = MacState::new(params);
        mac.enqueue(AC_VI, video(0, u64::MAX));
        mac.ac_mut(AC_VI).anchor = Some(0);
        mac.ac_mut(AC_VI).backoff = Some(10);
        // AIFS(VI/SCH) = 58 us; freeze 58 us + 3.5 slots later
        let now = (58 + 3 * 13 + 6) * NANOS_PER_MICRO;
        mac.freeze(AC_VI, now);
        assert_eq!(mac.ac(AC_VI).backoff, Some(7));
        assert_eq!(mac.ac(AC_VI).anchor, None);
        // freezing before the AIFS completes credits nothing
        mac.ac_mut(AC_VI).anchor = Some(0);
        mac.freeze(AC_VI, 10 * NANOS_PER_MICRO);
        assert_eq!(mac.ac(AC_VI).backoff, Some(7));
    }

    #[test]
    fn finish_time_is_anchor_plus_aifs_plus_slots() {
        let params = MacParams::new(standard_ac_set(ParameterSet::Sch, 50));
        let mut mac = MacState::new(params);
        mac.enqueue(AC_VI, video(0, u64::MAX));
        mac.ac_mut(AC_VI).anchor = Some(1_000);
        mac.ac_mut(AC_VI).backoff = Some(4);
        let expect = 1_000 + 58 * NANOS_PER_MICRO + 4 * 13 * NANOS_PER_MICRO;
        assert_eq!(mac.finish_time(AC_VI), Some(expect));
        assert_eq!(mac.finish_time(AC_VO), None);
    }

    #[test]
    fn retry_exhaustion_drops_after_limit() {
        let mut params = MacParams::new(standard_ac_set(ParameterSet::Sch, 50));
        params.retry_limit = 2;
        let mut mac = MacState::new(params);
        mac.enqueue(AC_VI, video(0, u64::MAX));
        // attempt 1 fails -> requeued
        mac.begin_tx(AC_VI, 0);
        assert!(matches!(
            mac.resolve_tx(true),
            (AC_VI, TxResolution::Requeued)
        ));
        assert_eq!(mac.ac(AC_VI).cw, 31);
        // attempt 2 fails -> requeued, cw capped at 31 for SCH video
        mac.begin_tx(AC_VI, 10);
        assert!(matches!(
            mac.resolve_tx(true),
            (AC_VI, TxResolution::Requeued)
        ));
        // attempt 3 fails -> retry limit (2) exhausted
        mac.begin_tx(AC_VI, 20);
        let (_, resolution) = mac.resolve_tx(true);
        assert!(matches!(resolution, TxResolution::RetryDropped(_)));
        assert_eq!(mac.stats(AC_VI).dropped_retry, 1);
        assert_eq!(mac.ac(AC_VI).cw, 15, "window resets after the drop");
        assert_eq!(mac.qlen(AC_VI), 0);
    }

    #[test]
    fn successful_tx_resets_window_and_counts() {
        let params = MacParams::new(standard_ac_set(ParameterSet::Sch, 50));
        let mut mac = MacState::new(params);
        mac.enqueue(AC_VI, video(7, u64::MAX));
        mac.double_cw(AC_VI);
        mac.begin_tx(AC_VI, 0);
        let (ac, resolution) = mac.resolve_tx(false);
        assert_eq!(ac, AC_VI);
        match resolution {
            TxResolution::Delivered(pkt) => {
                assert_eq!(pkt.origin, PacketOrigin::Video { packet_id: 7 });
            }
            other => panic!("unexpected {other:?}"),
        }
        assert_eq!(mac.stats(AC_VI).transmitted, 1);
        assert_eq!(mac.ac(AC_VI).cw, 15);
    }

    #[test]
    fn in_flight_counts_toward_capacity() {
        let params = MacParams::new(standard_ac_set(ParameterSet::Sch, 2));
        let mut mac = MacState::new(params);
        mac.enqueue(AC_VI, video(0, u64::MAX));
        mac.enqueue(AC_VI, video(1, u64::MAX));
        mac.begin_tx(AC_VI, 0);
        assert_eq!(mac.qlen(AC_VI), 1);
        // one on air + one queued = capacity 2, so a new arrival is dropped
        assert_eq!(
            mac.enqueue(AC_VI, video(2, u64::MAX)),
            EnqueueOutcome::DroppedOverflow
        );
        // a failed attempt can therefore always be requeued
        let (_, resolution) = mac.resolve_tx(true);
        assert_eq!(resolution, TxResolution::Requeued);
        assert_eq!(mac.qlen(AC_VI), 2);
        mac.assert_capacity();
    }

    #[test]
    fn cw_shape_validation() {
        let mut ac = standard_ac_set(ParameterSet::Sch, 50)[0];
        ac.cw_min = 30;
        assert!(matches!(
            ac.validate(),
            Err(AcConfigError::ContentionWindowShape { .. })
        ));
        let mut ac = standard_ac_set(ParameterSet::Sch, 50)[0];
        ac.cw_min = 1023;
        ac.cw_max = 31;
        assert!(matches!(
            ac.validate(),
            Err(AcConfigError::ContentionWindowOrder { .. })
        ));
    }
}
