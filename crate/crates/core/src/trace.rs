//! Video trace ingestion, odd/even description splitting, and MTU
//! packetization.
//!
//! A trace file stands in for real encoder output: one frame per line,
//! `frame_index capture_time_ms size_bytes [mse_if_lost] [mse_if_received]`,
//! whitespace-separated ASCII decimal with `.` as the decimal separator.
//! Lines starting with `#` are comments. The two distortion columns are
//! optional; without them a run reports loss counts only.

use std::io::BufRead;

use thiserror::Error;

/// Default MAC payload limit in bytes.
pub const DEFAULT_MTU: u32 = 1024;
/// Default end-to-end latency budget in milliseconds.
pub const DEFAULT_LATENCY_BUDGET_MS: f64 = 100.0;

/// One source video frame as recorded in a trace.
#[derive(Debug, Clone, PartialEq)]
pub struct VideoTraceFrame {
    pub frame_index: u32,
    /// Capture timestamp in milliseconds, non-decreasing in frame index.
    pub capture_time_ms: f64,
    /// Encoded frame size in bytes, at least 1.
    pub size: u32,
    /// Distortion (frame MSE) incurred when this frame is lost and concealed.
    pub mse_if_lost: Option<f64>,
    /// Residual coding distortion when the frame is received (defaults to 0).
    pub mse_if_received: Option<f64>,
}

/// The two temporal descriptions of the odd/even MDC split.
///
/// `D1` carries the odd-indexed frames (the protected description), `D2`
/// the even-indexed ones (frame 0 goes to `D2`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Description {
    D1,
    D2,
}

impl Description {
    pub fn of_frame(frame_index: u32) -> Self {
        if frame_index % 2 == 1 {
            Description::D1
        } else {
            Description::D2
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Description::D1 => "D1",
            Description::D2 => "D2",
        }
    }
}

/// An MTU-bounded MAC payload unit carrying one fragment of a frame.
#[derive(Debug, Clone, PartialEq)]
pub struct Packet {
    /// Unique, dense id; doubles as an index into per-run record tables.
    pub packet_id: u64,
    pub frame_index: u32,
    pub description: Description,
    /// Payload bytes, `<= mtu`.
    pub payload_size: u32,
    pub fragment_index: u32,
    pub fragment_count: u32,
    /// Time the packet is handed to the MAC layer (frame capture time), ms.
    pub arrival_time_ms: f64,
    /// `arrival_time_ms` plus the latency budget, ms.
    pub deadline_ms: f64,
}

#[derive(Debug, Error)]
pub enum TraceError {
    #[error("trace line {line}: {reason}")]
    Malformed { line: usize, reason: String },
    #[error("trace line {line}: expected frame index {expected}, found {found}")]
    NonConsecutiveIndex {
        line: usize,
        expected: u32,
        found: u32,
    },
    #[error("trace line {line}: capture time {found} ms is below previous {previous} ms")]
    DecreasingCaptureTime {
        line: usize,
        found: f64,
        previous: f64,
    },
    #[error("trace is empty")]
    Empty,
    #[error("i/o error reading trace: {0}")]
    Io(#[from] std::io::Error),
}

/// Parse a line-oriented trace into frames sorted by index.
///
/// Indices must be consecutive from 0 and capture times non-decreasing;
/// violations are reported with the offending line number.
pub fn parse_trace<R: BufRead>(reader: R) -> Result<Vec<VideoTraceFrame>, TraceError> {
    let mut frames: Vec<VideoTraceFrame> = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line?;
        let body = line.trim();
        if body.is_empty() || body.starts_with('#') {
            continue;
        }
        let frame = parse_line(body, line_no)?;
        let expected = frames.len() as u32;
        if frame.frame_index != expected {
            return Err(TraceError::NonConsecutiveIndex {
                line: line_no,
                expected,
                found: frame.frame_index,
            });
        }
        if let Some(prev) = frames.last() {
            if frame.capture_time_ms < prev.capture_time_ms {
                return Err(TraceError::DecreasingCaptureTime {
                    line: line_no,
                    found: frame.capture_time_ms,
                    previous: prev.capture_time_ms,
                });
            }
        }
        frames.push(frame);
    }
    if frames.is_empty() {
        return Err(TraceError::Empty);
    }
    Ok(frames)
}

/// Convenience wrapper over [`parse_trace`] for in-memory text.
pub fn parse_trace_str(text: &str) -> Result<Vec<VideoTraceFrame>, TraceError> {
    parse_trace(text.as_bytes())
}

fn parse_line(body: &str, line_no: usize) -> Result<VideoTraceFrame, TraceError> {
    let malformed = |reason: String| TraceError::Malformed {
        line: line_no,
        reason,
    };
    let fields: Vec<&str> = body.split_whitespace().collect();
    if fields.len() < 3 || fields.len() > 5 {
        return Err(malformed(format!(
            "expected 3 to 5 fields, found {}",
            fields.len()
        )));
    }
    let frame_index: u32 = fields[0]
        .parse()
        .map_err(|_| malformed(format!("invalid frame index {:?}", fields[0])))?;
    let capture_time_ms: f64 = fields[1]
        .parse()
        .map_err(|_| malformed(format!("invalid capture time {:?}", fields[1])))?;
    if !capture_time_ms.is_finite() || capture_time_ms < 0.0 {
        return Err(malformed(format!(
            "capture time must be finite and non-negative, got {capture_time_ms}"
        )));
    }
    let size: u32 = fields[2]
        .parse()
        .map_err(|_| malformed(format!("invalid size {:?}", fields[2])))?;
    if size == 0 {
        return Err(malformed("frame size must be at least 1 byte".to_string()));
    }
    let parse_mse = |field: &str, what: &str| -> Result<f64, TraceError> {
        let v: f64 = field
            .parse()
            .map_err(|_| malformed(format!("invalid {what} {field:?}")))?;
        if !v.is_finite() || v < 0.0 {
            return Err(malformed(format!("{what} must be non-negative, got {v}")));
        }
        Ok(v)
    };
    let mse_if_lost = match fields.get(3) {
        Some(f) => Some(parse_mse(f, "mse_if_lost")?),
        None => None,
    };
    let mse_if_received = match fields.get(4) {
        Some(f) => Some(parse_mse(f, "mse_if_received")?),
        None => None,
    };
    Ok(VideoTraceFrame {
        frame_index,
        capture_time_ms,
        size,
        mse_if_lost,
        mse_if_received,
    })
}

/// Split frames into the two descriptions: `(D1 = odd, D2 = even)`.
pub fn split_mdc(frames: &[VideoTraceFrame]) -> (Vec<VideoTraceFrame>, Vec<VideoTraceFrame>) {
    let mut d1 = Vec::with_capacity(frames.len() / 2);
    let mut d2 = Vec::with_capacity(frames.len() / 2 + 1);
    for frame in frames {
        match Description::of_frame(frame.frame_index) {
            Description::D1 => d1.push(frame.clone()),
            Description::D2 => d2.push(frame.clone()),
        }
    }
    (d1, d2)
}

/// Fragment one frame into MTU-sized packets.
///
/// All fragments are `mtu` bytes except possibly the last. Packet ids are
/// assigned sequentially starting at `first_packet_id`.
pub fn packetize(
    frame: &VideoTraceFrame,
    mtu: u32,
    latency_budget_ms: f64,
    first_packet_id: u64,
) -> Vec<Packet> {
    assert!(mtu >= 1, "mtu must be at least 1 byte");
    let fragment_count = frame.size.div_ceil(mtu);
    let description = Description::of_frame(frame.frame_index);
    (0..fragment_count)
        .map(|fragment_index| {
            let payload_size = if fragment_index + 1 == fragment_count {
                frame.size - mtu * (fragment_count - 1)
            } else {
                mtu
            };
            Packet {
                packet_id: first_packet_id + u64::from(fragment_index),
                frame_index: frame.frame_index,
                description,
                payload_size,
                fragment_index,
                fragment_count,
                arrival_time_ms: frame.capture_time_ms,
                deadline_ms: frame.capture_time_ms + latency_budget_ms,
            }
        })
        .collect()
}

/// Packetize a whole trace with globally unique, dense packet ids.
pub fn packetize_all(frames: &[VideoTraceFrame], mtu: u32, latency_budget_ms: f64) -> Vec<Packet> {
    let mut packets = Vec::new();
    for frame in frames {
        let first = packets.len() as u64;
        packets.extend(packetize(frame, mtu, latency_budget_ms, first));
    }
    packets
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn frame(index: u32, time: f64, size: u32) -> VideoTraceFrame {
        VideoTraceFrame {
            frame_index: index,
            capture_time_ms: time,
            size,
            mse_if_lost: None,
            mse_if_received: None,
        }
    }

    #[test]
    fn parses_minimal_line() {
        let frames = parse_trace_str("0 0.0 3000").unwrap();
        assert_eq!(frames.len(), 1);
        assert_eq!(frames[0], frame(0, 0.0, 3000));
    }

    #[test]
    fn parses_comments_blanks_and_distortion_columns() {
        let text = "# header\n\n0 0.0 3000 650.25\n1 16.67 2800 12.5 0.75\n";
        let frames = parse_trace_str(text).unwrap();
        assert_eq!(frames.len(), 2);
        assert_eq!(frames[0].mse_if_lost, Some(650.25));
        assert_eq!(frames[0].mse_if_received, None);
        assert_eq!(frames[1].mse_if_lost, Some(12.5));
        assert_eq!(frames[1].mse_if_received, Some(0.75));
    }

    #[test]
    fn sixty_fps_trace_has_600_frames_over_10s() {
        let mut text = String::new();
        for k in 0..600 {
            let t = k as f64 * (1000.0 / 60.0);
            text.push_str(&format!("{k} {t:.4} 5000\n"));
        }
        let frames = parse_trace_str(&text).unwrap();
        assert_eq!(frames.len(), 600);
        let step = frames[1].capture_time_ms - frames[0].capture_time_ms;
        assert!((step - 16.67).abs() < 0.01, "step was {step}");
        assert!(frames.last().unwrap().capture_time_ms < 10_000.0);
    }

    #[test]
    fn index_gap_is_a_structural_error() {
        let err = parse_trace_str("0 0.0 1000\n1 1.0 1000\n3 2.0 1000\n").unwrap_err();
        match err {
            TraceError::NonConsecutiveIndex {
                line,
                expected,
                found,
            } => {
                assert_eq!((line, expected, found), (3, 2, 3));
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn malformed_line_reports_line_number() {
        let err = parse_trace_str("0 0.0 1000\nnot a line\n").unwrap_err();
        match err {
            TraceError::Malformed { line, .. } => assert_eq!(line, 2),
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn rejects_zero_size_and_decreasing_time() {
        assert!(matches!(
            parse_trace_str("0 0.0 0"),
            Err(TraceError::Malformed { line: 1, .. })
        ));
        assert!(matches!(
            parse_trace_str("0 5.0 100\n1 4.0 100"),
            Err(TraceError::DecreasingCaptureTime { line: 2, .. })
        ));
    }

    #[test]
    fn split_assigns_odd_to_d1_even_to_d2() {
        let frames: Vec<_> = (0..4).map(|k| frame(k, k as f64, 100)).collect();
        let (d1, d2) = split_mdc(&frames);
        assert_eq!(
            d1.iter().map(|f| f.frame_index).collect::<Vec<_>>(),
            vec![1, 3]
        );
        assert_eq!(
            d2.iter().map(|f| f.frame_index).collect::<Vec<_>>(),
            vec![0, 2]
        );
    }

    #[test]
    fn split_single_frame_goes_to_d2() {
        let frames = vec![frame(0, 0.0, 100)];
        let (d1, d2) = split_mdc(&frames);
        assert!(d1.is_empty());
        assert_eq!(d2.len(), 1);
    }

    #[test]
    fn split_600_frames_evenly() {
        let frames: Vec<_> = (0..600).map(|k| frame(k, k as f64, 100)).collect();
        let (d1, d2) = split_mdc(&frames);
        // parity classes of 0..599 counted by enumeration
        let odd = (0..600u32).filter(|k| k % 2 == 1).count();
        let even = (0..600u32).filter(|k| k % 2 == 0).count();
        assert_eq!(d1.len(), odd);
        assert_eq!(d2.len(), even);
        assert_eq!((d1.len(), d2.len()), (300, 300));
    }

    #[test]
    fn packetize_3000_bytes_at_1024() {
        let packets = packetize(&frame(0, 0.0, 3000), 1024, 100.0, 0);
        let sizes: Vec<u32> = packets.iter().map(|p| p.payload_size).collect();
        assert_eq!(sizes, vec![1024, 1024, 952]);
        assert!(packets.iter().all(|p| p.fragment_count == 3));
    }

    #[test]
    fn packetize_exact_fit_and_boundary() {
        let exact = packetize(&frame(0, 0.0, 1024), 1024, 100.0, 0);
        assert_eq!(
            exact.iter().map(|p| p.payload_size).collect::<Vec<_>>(),
            vec![1024]
        );
        let over = packetize(&frame(0, 0.0, 1025), 1024, 100.0, 0);
        assert_eq!(
            over.iter().map(|p| p.payload_size).collect::<Vec<_>>(),
            vec![1024, 1]
        );
    }

    #[test]
    fn packetize_sets_arrival_and_deadline() {
        let packets = packetize(&frame(7, 116.69, 2000), 1024, 100.0, 5);
        for p in &packets {
            assert_eq!(p.arrival_time_ms, 116.69);
            assert_eq!(p.deadline_ms, 216.69);
            assert_eq!(p.frame_index, 7);
            assert_eq!(p.description, Description::D1);
        }
        assert_eq!(packets[0].packet_id, 5);
        assert_eq!(packets[1].packet_id, 6);
    }

    proptest! {
        #[test]
        fn split_partitions_and_reassembles(count in 0usize..200) {
            let frames: Vec<_> = (0..count as u32).map(|k| frame(k, k as f64, k + 1)).collect();
            let (d1, d2) = split_mdc(&frames);
            let mut merged: Vec<_> = d1.into_iter().chain(d2).collect();
            merged.sort_by_key(|f| f.frame_index);
            prop_assert_eq!(merged, frames);
        }

        #[test]
        fn fragment_sizes_sum_to_frame_size(size in 1u32..100_000, mtu in 1u32..4096) {
            let f = frame(0, 0.0, size);
            let packets = packetize(&f, mtu, 100.0, 0);
            prop_assert_eq!(packets.len() as u32, size.div_ceil(mtu));
            prop_assert_eq!(packets.iter().map(|p| p.payload_size).sum::<u32>(), size);
            prop_assert!(packets.iter().all(|p| p.payload_size <= mtu && p.payload_size > 0));
            for (i, p) in packets.iter().enumerate() {
                prop_assert_eq!(p.fragment_index as usize, i);
            }
        }

        #[test]
        fn deadline_minus_arrival_is_budget(time in 0.0f64..10_000.0, budget in 1.0f64..500.0) {
            let packets = packetize(&frame(0, time, 5000), 1024, budget, 0);
            for p in packets {
                prop_assert!((p.deadline_ms - p.arrival_time_ms - budget).abs() < 1e-9);
            }
        }
    }
}
