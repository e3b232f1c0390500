//! Receiver side: frame reassembly, end-to-end deadline enforcement and
//! frame-copy error concealment.
//!
//! A frame counts as received only when every fragment arrived on time.
//! A lost frame is replaced by its temporal neighbor from the other
//! description when that neighbor survived, preferring the previous frame
//! (a real-time player cannot wait for future ones; only frame 0 may copy
//! forward). When no neighbor survived the last displayed content is
//! repeated, and a run that loses its very first frames displays a gray
//! sentinel (`reference_index == -1`).

use thiserror::Error;

use crate::trace::{Packet, VideoTraceFrame};

/// Reference index value for the gray start-up sentinel.
pub const GRAY_SENTINEL: i64 = -1;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DeliveryStatus {
    /// Channel success, on time.
    Delivered,
    /// Channel loss after the retry budget.
    LostChannel,
    /// Tail-dropped at a full queue.
    DroppedOverflow,
    /// Purged from a queue past its deadline.
    DroppedDeadline,
    /// Channel success, but past the deadline.
    LateDiscard,
}

/// Fate of one video packet.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeliveryRecord {
    pub packet_id: u64,
    /// Arrival time at the receiver in ms, for packets that got there.
    pub delivery_time_ms: Option<f64>,
    pub status: DeliveryStatus,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FrameStatus {
    Received,
    Lost,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReconSource {
    /// All fragments delivered on time.
    Own,
    /// Copied from the adjacent frame of the other description.
    CopiedFromOther,
    /// Repeats the last displayed content (or the gray sentinel).
    CopiedPrevious,
}

/// What is actually displayed at one frame position.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ReconstructedFrame {
    pub frame_index: u32,
    pub source: ReconSource,
    /// Index of the frame whose content is displayed; [`GRAY_SENTINEL`]
    /// when nothing displayable exists yet.
    pub reference_index: i64,
}

#[derive(Debug, Error)]
pub enum ReceiverError {
    #[error("delivery record references unknown packet id {packet_id}")]
    UnknownPacket { packet_id: u64 },
    #[error("packet id {packet_id} has no delivery record")]
    MissingRecord { packet_id: u64 },
    #[error("packet id {packet_id} references frame {frame_index} outside 0..{frame_count}")]
    FrameOutOfRange {
        packet_id: u64,
        frame_index: u32,
        frame_count: usize,
    },
    #[error(
        "frame {frame_index} lacks distortion data; rerun in loss-count-only \
         mode or provide the mse_if_lost column"
    )]
    MissingDistortion { frame_index: u32 },
}

/// Fold packet fates into per-frame received/lost statuses.
///
/// A frame is `Received` iff every fragment was `Delivered` no later than
/// its deadline (the boundary `delivery_time == deadline` is on time).
pub fn assemble_frames(
    records: &[DeliveryRecord],
    packets: &[Packet],
    frame_count: usize,
) -> Result<Vec<FrameStatus>, ReceiverError> {
    let by_id: std::collections::HashMap<u64, usize> = packets
        .iter()
        .enumerate()
        .map(|(pos, p)| (p.packet_id, pos))
        .collect();
    let mut received: Vec<bool> = vec![true; frame_count];
    let mut covered: Vec<bool> = vec![false; packets.len()];
    for record in records {
        let pos = *by_id
            .get(&record.packet_id)
            .ok_or(ReceiverError::UnknownPacket {
                packet_id: record.packet_id,
            })?;
        let packet = &packets[pos];
        let idx = packet.frame_index as usize;
        if idx >= frame_count {
            return Err(ReceiverError::FrameOutOfRange {
                packet_id: packet.packet_id,
                frame_index: packet.frame_index,
                frame_count,
            });
        }
        covered[pos] = true;
        let on_time = match (record.status, record.delivery_time_ms) {
            (DeliveryStatus::Delivered, Some(t)) => t <= packet.deadline_ms,
            _ => false,
        };
        if !on_time {
            received[idx] = false;
        }
    }
    if let Some(pos) = covered.iter().position(|c| !c) {
        return Err(ReceiverError::MissingRecord {
            packet_id: packets[pos].packet_id,
        });
    }
    // frames with no packets at all cannot have been received
    let mut has_packets = vec![false; frame_count];
    for p in packets {
        if (p.frame_index as usize) < frame_count {
            has_packets[p.frame_index as usize] = true;
        }
    }
    Ok((0..frame_count)
        .map(|k| {
            if received[k] && has_packets[k] {
                FrameStatus::Received
            } else {
                FrameStatus::Lost
            }
        })
        .collect())
}

/// Frame-copy concealment over per-frame statuses.
///
/// Always yields exactly one displayed frame per input position.
pub fn conceal(statuses: &[FrameStatus]) -> Vec<ReconstructedFrame> {
    let k_total = statuses.len();
    let mut out = Vec::with_capacity(k_total);
    // content actually displayed at each position (frame index or sentinel)
    let mut displayed: Vec<i64> = Vec::with_capacity(k_total);
    for k in 0..k_total {
        let received = statuses[k] == FrameStatus::Received;
        let (source, reference) = if received {
            (ReconSource::Own, k as i64)
        } else if k >= 1 && statuses[k - 1] == FrameStatus::Received {
            (ReconSource::CopiedFromOther, (k - 1) as i64)
        } else if k == 0 && k_total > 1 && statuses[1] == FrameStatus::Received {
            (ReconSource::CopiedFromOther, 1)
        } else if k == 0 {
            (ReconSource::CopiedPrevious, GRAY_SENTINEL)
        } else {
            (ReconSource::CopiedPrevious, displayed[k - 1])
        };
        displayed.push(reference);
        out.push(ReconstructedFrame {
            frame_index: k as u32,
            source,
            reference_index: reference,
        });
    }
    out
}

/// Per-frame MSE series for a reconstruction, from the trace's distortion
/// columns: own frames cost `mse_if_received` (default 0), concealed
/// frames cost the concealed frame's `mse_if_lost`, and the gray sentinel
/// costs `d^2`.
pub fn distortion_of_reconstruction(
    reconstruction: &[ReconstructedFrame],
    frames: &[VideoTraceFrame],
    peak: f64,
) -> Result<Vec<f64>, ReceiverError> {
    reconstruction
        .iter()
        .map(|r| {
            let k = r.frame_index as usize;
            match r.source {
                ReconSource::Own => Ok(frames[k].mse_if_received.unwrap_or(0.0)),
                _ if r.reference_index == GRAY_SENTINEL => Ok(peak * peak),
                _ => frames[k]
                    .mse_if_lost
                    .ok_or(ReceiverError::MissingDistortion {
                        frame_index: r.frame_index,
                    }),
            }
        })
        .collect()
}
