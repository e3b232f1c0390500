//! Deterministic event loop joining trace arrivals, the mapping policy,
//! the EDCA MAC and the channel model.
//!
//! Events are processed in non-decreasing time; ties break on a fixed
//! kind order (TxComplete, ChannelBusyEnd, PacketArrival,
//! ChannelBusyStart, BackoffExpiry) and then on insertion sequence, so a
//! run is a pure function of its inputs. Pending backoff expiries carry a
//! generation tag; any contention change bumps the generation and stale
//! events are skipped when popped.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::channel::{generate_background, BackgroundSource, BusyProcess, LossModel, LossProcess};
use crate::edca::{
    transmission_duration_us, AcStats, MacParams, MacState, PacketOrigin, QueuedPacket,
    TxResolution, AC_COUNT, AC_VI,
};
use crate::mapper::{Mapper, MapperConfig, MapperPolicy};
use crate::receiver::{DeliveryRecord, DeliveryStatus};
use crate::rng::stream_rng;
use crate::trace::Packet;
use crate::units::{ms_to_ns, ns_to_ms, us_to_ns, Nanos};

pub const DEFAULT_MAX_EVENTS: u64 = 50_000_000;

/// Everything a single simulation run needs.
#[derive(Debug, Clone)]
pub struct SimInputs {
    pub mac_params: MacParams,
    pub phy_rate_bps: f64,
    pub tx_overhead_us: f64,
    pub video_packets: Vec<Packet>,
    pub background: Vec<BackgroundSource>,
    /// Horizon for background generation, ms (normally the play time).
    pub background_horizon_ms: f64,
    pub mapper_policy: MapperPolicy,
    pub mapper_config: MapperConfig,
    pub loss_model: LossModel,
    pub mean_busy_us: f64,
    pub mean_idle_us: f64,
    pub seed: u64,
    pub max_events: u64,
}

/// One queue-length change: the probe stream behind the queue-fill CSV.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct QlenSample {
    pub t: Nanos,
    pub ac: u8,
    pub qlen: u32,
}

#[derive(Debug, Clone)]
pub struct SimOutput {
    /// One record per video packet, indexed by packet id.
    pub records: Vec<DeliveryRecord>,
    /// Access category each video packet was mapped to, by packet id.
    pub assignments: Vec<u8>,
    pub stats: [AcStats; AC_COUNT],
    pub qlen_log: Vec<QlenSample>,
    pub events_processed: u64,
}

#[derive(Debug, Error)]
pub enum SimError {
    #[error("event budget of {budget} exceeded; configuration appears divergent")]
    EventBudgetExceeded { budget: u64 },
    #[error("internal accounting error: {0}")]
    Internal(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum ArrivalPayload {
    /// Index into `video_packets`.
    Video(usize),
    /// Index into `background`.
    Background(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum EventKind {
    TxComplete,
    ChannelBusyEnd,
    PacketArrival(ArrivalPayload),
    ChannelBusyStart { end: Nanos },
    BackoffExpiry { generation: u64 },
}

impl EventKind {
    fn rank(&self) -> u8 {
        match self {
            EventKind::TxComplete => 0,
            EventKind::ChannelBusyEnd => 1,
            EventKind::PacketArrival(_) => 2,
            EventKind::ChannelBusyStart { .. } => 3,
            EventKind::BackoffExpiry { .. } => 4,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct HeapEvent {
    time: Nanos,
    rank: u8,
    seq: u64,
    kind: EventKind,
}

impl Ord for HeapEvent {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        (self.time, self.rank, self.seq).cmp(&(other.time, other.rank, other.seq))
    }
}

impl PartialOrd for HeapEvent {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

struct Runner<'a> {
    inputs: &'a SimInputs,
    mac: MacState,
    mapper: Mapper<ChaCha8Rng>,
    loss: LossProcess<ChaCha8Rng>,
    busy: BusyProcess<ChaCha8Rng>,
    backoff_rng: ChaCha8Rng,
    heap: BinaryHeap<Reverse<HeapEvent>>,
    seq: u64,
    generation: u64,
    ext_busy_until: Option<Nanos>,
    arrivals_pending: usize,
    records: Vec<Option<DeliveryRecord>>,
    assignments: Vec<u8>,
    qlen_log: Vec<QlenSample>,
}

/// Run one simulation to completion.
pub fn run(inputs: &SimInputs) -> Result<SimOutput, SimError> {
    Runner::new(inputs).run()
}

impl<'a> Runner<'a> {
    fn new(inputs: &'a SimInputs) -> Self {
        let seed = inputs.seed;
        Self {
            inputs,
            mac: MacState::new(inputs.mac_params),
            mapper: Mapper::new(
                inputs.mapper_policy,
                inputs.mapper_config,
                stream_rng(seed, "mapper"),
            ),
            loss: LossProcess::new(inputs.loss_model, stream_rng(seed, "loss")),
            busy: BusyProcess::new(
                inputs.mean_busy_us,
                inputs.mean_idle_us,
                stream_rng(seed, "busy"),
            ),
            backoff_rng: stream_rng(seed, "backoff"),
            heap: BinaryHeap::new(),
            seq: 0,
            generation: 0,
            ext_busy_until: None,
            arrivals_pending: 0,
            records: vec![None; inputs.video_packets.len()],
            assignments: vec![0; inputs.video_packets.len()],
            qlen_log: Vec::new(),
        }
    }

    fn push(&mut self, time: Nanos, kind: EventKind) {
        self.seq += 1;
        self.heap.push(Reverse(HeapEvent {
            time,
            rank: kind.rank(),
            seq: self.seq,
            kind,
        }));
    }

    fn ext_busy(&self, now: Nanos) -> bool {
        self.ext_busy_until.is_some_and(|until| now < until)
    }

    fn medium_busy(&self, now: Nanos) -> bool {
        self.mac.in_flight().is_some() || self.ext_busy(now)
    }

    fn work_exists(&self) -> bool {
        self.arrivals_pending > 0 || self.mac.any_backlog() || self.mac.in_flight().is_some()
    }

    fn log_qlen(&mut self, t: Nanos, ac: usize) {
        self.qlen_log.push(QlenSample {
            t,
            ac: ac as u8,
            qlen: self.mac.qlen(ac) as u32,
        });
    }

    fn record(&mut self, packet_id: u64, record: DeliveryRecord) -> Result<(), SimError> {
        let slot = self
            .records
            .get_mut(packet_id as usize)
            .ok_or_else(|| SimError::Internal(format!("packet id {packet_id} out of range")))?;
        if slot.is_some() {
            return Err(SimError::Internal(format!(
                "packet id {packet_id} resolved twice"
            )));
        }
        *slot = Some(record);
        Ok(())
    }

    /// Purge expired video packets from every queue, recording the drops.
    fn purge(&mut self, now: Nanos) -> Result<(), SimError> {
        let removed = self.mac.purge_expired(now);
        if removed.is_empty() {
            return Ok(());
        }
        let mut touched = [false; AC_COUNT];
        for (ac, pkt) in &removed {
            touched[*ac] = true;
            if let PacketOrigin::Video { packet_id } = pkt.origin {
                self.record(
                    packet_id,
                    DeliveryRecord {
                        packet_id,
                        delivery_time_ms: None,
                        status: DeliveryStatus::DroppedDeadline,
                    },
                )?;
            }
        }
        for (ac, was_touched) in touched.iter().enumerate() {
            if *was_touched {
                self.log_qlen(now, ac);
            }
        }
        Ok(())
    }

    /// Invalidate any pending expiry and schedule one at the new earliest
    /// finish, if anyone is contending.
    fn reschedule_expiry(&mut self) {
        self.generation += 1;
        if let Some(finish) = self.mac.earliest_finish() {
            let generation = self.generation;
            self.push(finish, EventKind::BackoffExpiry { generation });
        }
    }

    /// The medium just became fully idle: every backlogged AC starts its
    /// AIFS wait and resumes (or draws) its backoff countdown.
    fn on_medium_idle(&mut self, now: Nanos) {
        debug_assert!(!self.medium_busy(now));
        let mut any = false;
        for ac in 0..AC_COUNT {
            if !self.mac.ac(ac).is_empty() {
                self.mac.ac_mut(ac).anchor = Some(now);
                self.mac.ensure_backoff(ac, &mut self.backoff_rng);
                any = true;
            }
        }
        if any {
            self.reschedule_expiry();
        }
    }

    fn run(mut self) -> Result<SimOutput, SimError> {
        let horizon_ns = ms_to_ns(self.inputs.background_horizon_ms);
        for (idx, packet) in self.inputs.video_packets.iter().enumerate() {
            if packet.packet_id != idx as u64 {
                return Err(SimError::Internal(format!(
                    "video packet ids must be dense, found {} at {}",
                    packet.packet_id, idx
                )));
            }
            self.push(
                ms_to_ns(packet.arrival_time_ms),
                EventKind::PacketArrival(ArrivalPayload::Video(idx)),
            );
            self.arrivals_pending += 1;
        }
        for (source_idx, source) in self.inputs.background.iter().enumerate() {
            let mut rng = stream_rng(self.inputs.seed, &format!("background/{source_idx}"));
            for t in generate_background(source, horizon_ns, &mut rng) {
                self.push(
                    t,
                    EventKind::PacketArrival(ArrivalPayload::Background(source_idx)),
                );
                self.arrivals_pending += 1;
            }
        }
        if let Some((start, end)) = self.busy.next_interval() {
            self.push(start, EventKind::ChannelBusyStart { end });
        }

        let mut events_processed: u64 = 0;
        while let Some(Reverse(event)) = self.heap.pop() {
            events_processed += 1;
            if events_processed > self.inputs.max_events {
                return Err(SimError::EventBudgetExceeded {
                    budget: self.inputs.max_events,
                });
            }
            let now = event.time;
            match event.kind {
                EventKind::PacketArrival(payload) => self.on_arrival(now, payload)?,
                EventKind::BackoffExpiry { generation } => self.on_expiry(now, generation)?,
                EventKind::TxComplete => self.on_tx_complete(now)?,
                EventKind::ChannelBusyStart { end } => self.on_busy_start(now, end),
                EventKind::ChannelBusyEnd => self.on_busy_end(now),
            }
            self.mac.assert_capacity();
        }

        if self.mac.in_flight().is_some() || self.mac.any_backlog() {
            return Err(SimError::Internal(
                "event loop drained with packets still in the MAC".into(),
            ));
        }
        let records: Vec<DeliveryRecord> = self
            .records
            .iter()
            .enumerate()
            .map(|(id, r)| {
                r.ok_or_else(|| SimError::Internal(format!("packet {id} never resolved")))
            })
            .collect::<Result<_, _>>()?;
        let stats = core::array::from_fn(|ac| self.mac.stats(ac));
        Ok(SimOutput {
            records,
            assignments: self.assignments,
            stats,
            qlen_log: self.qlen_log,
            events_processed,
        })
    }

    fn on_arrival(&mut self, now: Nanos, payload: ArrivalPayload) -> Result<(), SimError> {
        self.arrivals_pending -= 1;
        self.purge(now)?;
        let (ac, queued, video_id) = match payload {
            ArrivalPayload::Video(idx) => {
                let packet = &self.inputs.video_packets[idx];
                let qlen_ac2 = self.mac.qlen(AC_VI) as u32;
                let decision = self.mapper.map(packet, qlen_ac2);
                self.assignments[idx] = decision.target_ac as u8;
                (
                    decision.target_ac,
                    QueuedPacket {
                        size: packet.payload_size,
                        deadline: Some(ms_to_ns(packet.deadline_ms)),
                        origin: PacketOrigin::Video {
                            packet_id: packet.packet_id,
                        },
                    },
                    Some(packet.packet_id),
                )
            }
            ArrivalPayload::Background(source_idx) => {
                let source = &self.inputs.background[source_idx];
                (
                    source.target_ac,
                    QueuedPacket {
                        size: source.packet_size,
                        deadline: None,
                        origin: PacketOrigin::Background { source: source_idx },
                    },
                    None,
                )
            }
        };
        let was_empty = self.mac.qlen(ac) == 0;
        match self.mac.enqueue(ac, queued) {
            crate::edca::EnqueueOutcome::Accepted => {
                self.log_qlen(now, ac);
                if was_empty && !self.medium_busy(now) {
                    self.mac.ac_mut(ac).anchor = Some(now);
                    self.mac.ensure_backoff(ac, &mut self.backoff_rng);
                    self.reschedule_expiry();
                }
            }
            crate::edca::EnqueueOutcome::DroppedOverflow => {
                if let Some(packet_id) = video_id {
                    self.record(
                        packet_id,
                        DeliveryRecord {
                            packet_id,
                            delivery_time_ms: None,
                            status: DeliveryStatus::DroppedOverflow,
                        },
                    )?;
                }
            }
        }
        Ok(())
    }

    fn on_expiry(&mut self, now: Nanos, generation: u64) -> Result<(), SimError> {
        if generation != self.generation {
            return Ok(()); // superseded
        }
        if self.medium_busy(now) {
            debug_assert!(false, "valid expiry while the medium is busy");
            return Ok(());
        }
        // head-of-line selection moment: expired packets leave first
        self.purge(now)?;
        let Some(earliest) = self.mac.earliest_finish() else {
            self.reschedule_expiry(); // nothing left to contend
            return Ok(());
        };
        if earliest > now {
            // the purge changed the contender set; try again later
            self.reschedule_expiry();
            return Ok(());
        }
        debug_assert_eq!(earliest, now, "missed a backoff expiry");
        let mut winner = None;
        for ac in 0..AC_COUNT {
            if self.mac.finish_time(ac) == Some(now) {
                winner = Some(ac); // ascending scan leaves the highest AC
            }
        }
        let winner = winner.expect("earliest == now implies a finisher");
        // virtual collision: same-instant losers redraw with a doubled window
        for ac in 0..winner {
            if self.mac.finish_time(ac) == Some(now) {
                self.mac.double_cw(ac);
                self.mac.ac_mut(ac).backoff = None;
                self.mac.ensure_backoff(ac, &mut self.backoff_rng);
                self.mac.ac_mut(ac).anchor = None;
            }
        }
        // everyone else freezes while the winner transmits
        for ac in 0..AC_COUNT {
            if ac != winner {
                self.mac.freeze(ac, now);
            }
        }
        let packet = self.mac.begin_tx(winner, now);
        self.log_qlen(now, winner);
        self.generation += 1; // no expiry is valid during the transmission
        let duration = us_to_ns(transmission_duration_us(
            packet.size,
            self.inputs.phy_rate_bps,
            self.inputs.tx_overhead_us,
        ));
        self.push(now + duration, EventKind::TxComplete);
        Ok(())
    }

    fn on_tx_complete(&mut self, now: Nanos) -> Result<(), SimError> {
        let lost = self.loss.sample_loss();
        let (ac, resolution) = self.mac.resolve_tx(lost);
        match resolution {
            TxResolution::Delivered(packet) => {
                if let PacketOrigin::Video { packet_id } = packet.origin {
                    let deadline = packet.deadline.expect("video packets carry deadlines");
                    let status = if now <= deadline {
                        DeliveryStatus::Delivered
                    } else {
                        DeliveryStatus::LateDiscard
                    };
                    self.record(
                        packet_id,
                        DeliveryRecord {
                            packet_id,
                            delivery_time_ms: Some(ns_to_ms(now)),
                            status,
                        },
                    )?;
                }
            }
            TxResolution::Requeued => {
                self.log_qlen(now, ac);
            }
            TxResolution::RetryDropped(packet) => {
                if let PacketOrigin::Video { packet_id } = packet.origin {
                    self.record(
                        packet_id,
                        DeliveryRecord {
                            packet_id,
                            delivery_time_ms: None,
                            status: DeliveryStatus::LostChannel,
                        },
                    )?;
                }
            }
        }
        if !self.ext_busy(now) {
            self.on_medium_idle(now);
        }
        Ok(())
    }

    fn on_busy_start(&mut self, now: Nanos, end: Nanos) {
        self.ext_busy_until = Some(end);
        self.push(end, EventKind::ChannelBusyEnd);
        if self.mac.in_flight().is_none() {
            self.mac.freeze_all(now);
            self.generation += 1; // pending expiry, if any, is now stale
        }
    }

    fn on_busy_end(&mut self, now: Nanos) {
        self.ext_busy_until = None;
        if self.work_exists() {
            if let Some((start, end)) = self.busy.next_interval() {
                self.push(start, EventKind::ChannelBusyStart { end });
            }
        }
        if self.mac.in_flight().is_none() {
            self.on_medium_idle(now);
        }
    }
}
