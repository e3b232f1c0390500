//! Video quality and loss metrics: per-frame MSE/PSNR, average PSNR from
//! the mean MSE, the MSE standard deviation as a temporal-variability
//! proxy, structural similarity on raw luma frames, and per-description
//! loss accounting.
//!
//! Average PSNR is `10 log10(d^2 / mean(MSE))`, computed from the mean of
//! the per-frame MSEs, never by averaging per-frame PSNR values.

use thiserror::Error;

use crate::receiver::{DeliveryRecord, DeliveryStatus};
use crate::trace::{Description, Packet};

/// Peak sample value for 8-bit video.
pub const PEAK_8BIT: f64 = 255.0;
/// PSNR reported for a zero-MSE frame.
pub const DEFAULT_PSNR_CAP_DB: f64 = 100.0;
/// Default SSIM window edge in pixels (non-overlapping tiling).
pub const DEFAULT_SSIM_WINDOW: usize = 8;

#[derive(Debug, Error, PartialEq)]
pub enum MetricsError {
    #[error("frame dimensions differ: {a_width}x{a_height} vs {b_width}x{b_height}")]
    DimensionMismatch {
        a_width: usize,
        a_height: usize,
        b_width: usize,
        b_height: usize,
    },
    #[error("sample buffer holds {len} values, expected {expected} for {width}x{height}")]
    BadSampleCount {
        len: usize,
        expected: usize,
        width: usize,
        height: usize,
    },
    #[error("ssim window {window} invalid for a {width}x{height} frame")]
    BadWindow {
        window: usize,
        width: usize,
        height: usize,
    },
    #[error("empty MSE series")]
    EmptySeries,
    #[error("MSE standard deviation needs at least 2 frames, got {len}")]
    SeriesTooShort { len: usize },
}

/// A planar 8-bit luma frame, row major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawFrame {
    width: usize,
    height: usize,
    samples: Vec<u8>,
}

impl RawFrame {
    pub fn new(width: usize, height: usize, samples: Vec<u8>) -> Result<Self, MetricsError> {
        if samples.len() != width * height {
            return Err(MetricsError::BadSampleCount {
                len: samples.len(),
                expected: width * height,
                width,
                height,
            });
        }
        Ok(Self {
            width,
            height,
            samples,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn samples(&self) -> &[u8] {
        &self.samples
    }

    fn sample(&self, x: usize, y: usize) -> f64 {
        f64::from(self.samples[y * self.width + x])
    }

    fn check_same_dims(&self, other: &RawFrame) -> Result<(), MetricsError> {
        if self.width != other.width || self.height != other.height {
            return Err(MetricsError::DimensionMismatch {
                a_width: self.width,
                a_height: self.height,
                b_width: other.width,
                b_height: other.height,
            });
        }
        Ok(())
    }
}

/// Mean squared error between two equally sized frames.
pub fn frame_mse(reference: &RawFrame, test: &RawFrame) -> Result<f64, MetricsError> {
    reference.check_same_dims(test)?;
    let sum: f64 = reference
        .samples
        .iter()
        .zip(test.samples.iter())
        .map(|(&a, &b)| {
            let d = f64::from(a) - f64::from(b);
            d * d
        })
        .sum();
    Ok(sum / (reference.width * reference.height) as f64)
}

/// Per-frame PSNR in dB with the default cap for zero MSE.
pub fn frame_psnr(mse: f64, peak: f64) -> f64 {
    frame_psnr_capped(mse, peak, DEFAULT_PSNR_CAP_DB)
}

pub fn frame_psnr_capped(mse: f64, peak: f64, cap_db: f64) -> f64 {
    debug_assert!(mse >= 0.0);
    if mse <= 0.0 {
        return cap_db;
    }
    (10.0 * (peak * peak / mse).log10()).min(cap_db)
}

/// Average PSNR over a sequence: `10 log10(d^2 / mean MSE)`.
pub fn average_psnr(mse_series: &[f64], peak: f64) -> Result<f64, MetricsError> {
    average_psnr_capped(mse_series, peak, DEFAULT_PSNR_CAP_DB)
}

pub fn average_psnr_capped(
    mse_series: &[f64],
    peak: f64,
    cap_db: f64,
) -> Result<f64, MetricsError> {
    if mse_series.is_empty() {
        return Err(MetricsError::EmptySeries);
    }
    let mean = mse_series.iter().sum::<f64>() / mse_series.len() as f64;
    Ok(frame_psnr_capped(mean, peak, cap_db))
}

/// Sample standard deviation of the per-frame MSE series (K-1 denominator).
pub fn sigma_mse(mse_series: &[f64]) -> Result<f64, MetricsError> {
    let k = mse_series.len();
    if k < 2 {
        return Err(MetricsError::SeriesTooShort { len: k });
    }
    let mean = mse_series.iter().sum::<f64>() / k as f64;
    let ss: f64 = mse_series.iter().map(|v| (v - mean) * (v - mean)).sum();
    Ok((ss / (k as f64 - 1.0)).sqrt())
}

/// Mean structural similarity over non-overlapping `window x window` tiles
/// (edge tiles may be smaller). Uses the standard three-term
/// luminance/contrast/structure product with `C1 = (0.01 d)^2`,
/// `C2 = (0.03 d)^2`, `C3 = C2 / 2`, and population moments, so
/// single-pixel tiles degenerate to the luminance term.
pub fn frame_ssim(
    reference: &RawFrame,
    test: &RawFrame,
    window: usize,
) -> Result<f64, MetricsError> {
    reference.check_same_dims(test)?;
    let (w, h) = (reference.width, reference.height);
    if window == 0 || window > w.min(h) {
        return Err(MetricsError::BadWindow {
            window,
            width: w,
            height: h,
        });
    }
    let c1 = (0.01 * PEAK_8BIT) * (0.01 * PEAK_8BIT);
    let c2 = (0.03 * PEAK_8BIT) * (0.03 * PEAK_8BIT);
    let c3 = c2 / 2.0;

    let mut total = 0.0;
    let mut tiles = 0usize;
    let mut y0 = 0;
    while y0 < h {
        let y1 = (y0 + window).min(h);
        let mut x0 = 0;
        while x0 < w {
            let x1 = (x0 + window).min(w);
            let n = ((x1 - x0) * (y1 - y0)) as f64;
            let (mut sx, mut sy, mut sxx, mut syy, mut sxy) = (0.0, 0.0, 0.0, 0.0, 0.0);
            for y in y0..y1 {
                for x in x0..x1 {
                    let a = reference.sample(x, y);
                    let b = test.sample(x, y);
                    sx += a;
                    sy += b;
                    sxx += a * a;
                    syy += b * b;
                    sxy += a * b;
                }
            }
            let mx = sx / n;
            let my = sy / n;
            let vx = (sxx / n - mx * mx).max(0.0);
            let vy = (syy / n - my * my).max(0.0);
            let cov = sxy / n - mx * my;
            let (dx, dy) = (vx.sqrt(), vy.sqrt());
            let luminance = (2.0 * mx * my + c1) / (mx * mx + my * my + c1);
            let contrast = (2.0 * dx * dy + c2) / (vx + vy + c2);
            let structure = (cov + c3) / (dx * dy + c3);
            total += luminance * contrast * structure;
            tiles += 1;
            x0 = x1;
        }
        y0 = y1;
    }
    Ok(total / tiles as f64)
}

/// Lost video packets split by description.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct LossCounts {
    pub d1: u64,
    pub d2: u64,
}

impl LossCounts {
    pub fn total(&self) -> u64 {
        self.d1 + self.d2
    }
}

/// Count non-delivered video packets per description. A packet counts as
/// delivered only when its record says so and it arrived by its deadline.
pub fn loss_accounting(records: &[DeliveryRecord], packets: &[Packet]) -> LossCounts {
    let by_id: std::collections::HashMap<u64, &Packet> =
        packets.iter().map(|p| (p.packet_id, p)).collect();
    let mut counts = LossCounts::default();
    for record in records {
        let Some(packet) = by_id.get(&record.packet_id) else {
            continue;
        };
        let delivered = record.status == DeliveryStatus::Delivered
            && record
                .delivery_time_ms
                .is_some_and(|t| t <= packet.deadline_ms);
        if !delivered {
            match packet.description {
                Description::D1 => counts.d1 += 1,
                Description::D2 => counts.d2 += 1,
            }
        }
    }
    counts
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trace::{packetize_all, VideoTraceFrame};
    use proptest::prelude::*;

    fn flat(width: usize, height: usize, value: u8) -> RawFrame {
        RawFrame::new(width, height, vec![value; width * height]).unwrap()
    }

    #[test]
    fn mse_of_identical_frames_is_zero() {
        let a = flat(8, 8, 42);
        assert_eq!(frame_mse(&a, &a).unwrap(), 0.0);
    }

    #[test]
    fn mse_of_constant_offset_is_one() {
        let a = flat(8, 8, 100);
        let b = flat(8, 8, 101);
        assert_eq!(frame_mse(&a, &b).unwrap(), 1.0);
    }

    #[test]
    fn mse_two_by_two_single_difference() {
        let a = RawFrame::new(2, 2, vec![0, 0, 0, 0]).unwrap();
        let b = RawFrame::new(2, 2, vec![2, 0, 0, 0]).unwrap();
        assert_eq!(frame_mse(&a, &b).unwrap(), 1.0); // 4 / 4
    }

    #[test]
    fn mse_dimension_mismatch_errors() {
        let a = flat(4, 4, 0);
        let b = flat(4, 5, 0);
        assert!(matches!(
            frame_mse(&a, &b),
            Err(MetricsError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn psnr_examples() {
        assert_eq!(frame_psnr(65_025.0, 255.0), 0.0);
        assert!((frame_psnr(650.25, 255.0) - 20.0).abs() < 1e-12);
        assert_eq!(frame_psnr(0.0, 255.0), 100.0);
    }

    #[test]
    fn average_psnr_uses_mean_mse() {
        let v = average_psnr(&[100.0, 100.0], 255.0).unwrap();
        assert!((v - 10.0 * (65_025.0f64 / 100.0).log10()).abs() < 1e-12);
        assert!((v - 28.13).abs() < 0.01);
        assert_eq!(average_psnr(&[0.0, 0.0, 0.0], 255.0).unwrap(), 100.0);
    }

    #[test]
    fn average_psnr_lies_below_naive_average() {
        // {0, 65025}: Eq-style average is ~3.01 dB, naive mean of the
        // per-frame values (100 cap and 0) would be 50 dB
        let avg = average_psnr(&[0.0, 65_025.0], 255.0).unwrap();
        assert!((avg - 10.0 * (65_025.0f64 / 32_512.5).log10()).abs() < 1e-12);
        assert!((avg - 3.01).abs() < 0.01);
        let naive = (frame_psnr(0.0, 255.0) + frame_psnr(65_025.0, 255.0)) / 2.0;
        assert_eq!(naive, 50.0);
        assert!(avg < naive);
    }

    #[test]
    fn average_psnr_rejects_empty() {
        assert!(matches!(
            average_psnr(&[], 255.0),
            Err(MetricsError::EmptySeries)
        ));
    }

    #[test]
    fn sigma_mse_examples() {
        assert_eq!(sigma_mse(&[5.0, 5.0, 5.0]).unwrap(), 0.0);
        assert!((sigma_mse(&[0.0, 2.0]).unwrap() - 2.0f64.sqrt()).abs() < 1e-12);
        assert!((sigma_mse(&[1.0, 2.0, 3.0, 4.0]).unwrap() - (5.0f64 / 3.0).sqrt()).abs() < 1e-12);
        assert!(matches!(
            sigma_mse(&[1.0]),
            Err(MetricsError::SeriesTooShort { len: 1 })
        ));
    }

    fn gradient8() -> RawFrame {
        let samples: Vec<u8> = (0..64).map(|i| (i * 4) as u8).collect();
        RawFrame::new(8, 8, samples).unwrap()
    }

    #[test]
    fn ssim_identical_frames_is_one() {
        let a = gradient8();
        let s = frame_ssim(&a, &a, 8).unwrap();
        assert!((s - 1.0).abs() < 1e-12, "ssim {s}");
    }

    #[test]
    fn ssim_of_inverted_high_variance_frame_is_low() {
        let a = gradient8();
        let inverted = RawFrame::new(8, 8, a.samples().iter().map(|&v| 255 - v).collect()).unwrap();
        let s = frame_ssim(&a, &inverted, 8).unwrap();
        assert!(s < 0.5, "ssim {s} should be well below 0.5");
    }

    #[test]
    fn ssim_constant_frames_reduce_to_luminance_term() {
        let a = flat(8, 8, 60);
        let b = flat(8, 8, 120);
        let s = frame_ssim(&a, &b, 8).unwrap();
        let c1 = (0.01 * 255.0f64).powi(2);
        let expected = (2.0 * 60.0 * 120.0 + c1) / (60.0f64 * 60.0 + 120.0 * 120.0 + c1);
        assert!((s - expected).abs() < 1e-12, "ssim {s} vs {expected}");
    }

    #[test]
    fn ssim_window_validation() {
        let a = flat(8, 8, 0);
        assert!(matches!(
            frame_ssim(&a, &a, 0),
            Err(MetricsError::BadWindow { .. })
        ));
        assert!(matches!(
            frame_ssim(&a, &a, 9),
            Err(MetricsError::BadWindow { .. })
        ));
    }

    #[test]
    fn raw_frame_rejects_bad_sample_count() {
        assert!(matches!(
            RawFrame::new(4, 4, vec![0; 15]),
            Err(MetricsError::BadSampleCount { .. })
        ));
    }

    fn mk_frames(n: u32) -> Vec<VideoTraceFrame> {
        (0..n)
            .map(|k| VideoTraceFrame {
                frame_index: k,
                capture_time_ms: k as f64,
                size: 100,
                mse_if_lost: None,
                mse_if_received: None,
            })
            .collect()
    }

    #[test]
    fn loss_accounting_splits_by_description() {
        let packets = packetize_all(&mk_frames(6), 1024, 100.0);
        // deliver everything on time except the even frames (D2)
        let records: Vec<DeliveryRecord> = packets
            .iter()
            .map(|p| {
                if p.description == Description::D2 {
                    DeliveryRecord {
                        packet_id: p.packet_id,
                        delivery_time_ms: None,
                        status: DeliveryStatus::DroppedOverflow,
                    }
                } else {
                    DeliveryRecord {
                        packet_id: p.packet_id,
                        delivery_time_ms: Some(p.arrival_time_ms + 1.0),
                        status: DeliveryStatus::Delivered,
                    }
                }
            })
            .collect();
        let counts = loss_accounting(&records, &packets);
        assert_eq!(counts.d1, 0);
        assert_eq!(counts.d2, 3);
        assert_eq!(counts.total(), 3);
    }

    #[test]
    fn loss_accounting_no_losses() {
        let packets = packetize_all(&mk_frames(4), 1024, 100.0);
        let records: Vec<DeliveryRecord> = packets
            .iter()
            .map(|p| DeliveryRecord {
                packet_id: p.packet_id,
                delivery_time_ms: Some(p.arrival_time_ms),
                status: DeliveryStatus::Delivered,
            })
            .collect();
        let counts = loss_accounting(&records, &packets);
        assert_eq!((counts.d1, counts.d2, counts.total()), (0, 0, 0));
    }

    proptest! {
        #[test]
        fn mse_is_symmetric(
            a in proptest::collection::vec(0u8..=255, 64),
            b in proptest::collection::vec(0u8..=255, 64),
        ) {
            let fa = RawFrame::new(8, 8, a).unwrap();
            let fb = RawFrame::new(8, 8, b).unwrap();
            let ab = frame_mse(&fa, &fb).unwrap();
            let ba = frame_mse(&fb, &fa).unwrap();
            prop_assert_eq!(ab, ba);
        }

        #[test]
        fn ssim_self_similarity_is_one(
            a in proptest::collection::vec(0u8..=255, 64),
        ) {
            let fa = RawFrame::new(8, 8, a).unwrap();
            let s = frame_ssim(&fa, &fa, 8).unwrap();
            prop_assert!((s - 1.0).abs() < 1e-9);
        }

        #[test]
        fn loss_totals_add_up(
            lost_mask in proptest::collection::vec(proptest::bool::ANY, 1..40),
        ) {
            let frames = mk_frames(lost_mask.len() as u32);
            let packets = packetize_all(&frames, 1024, 100.0);
            let records: Vec<DeliveryRecord> = packets
                .iter()
                .map(|p| {
                    if lost_mask[p.frame_index as usize] {
                        DeliveryRecord {
                            packet_id: p.packet_id,
                            delivery_time_ms: None,
                            status: DeliveryStatus::LostChannel,
                        }
                    } else {
                        DeliveryRecord {
                            packet_id: p.packet_id,
                            delivery_time_ms: Some(p.arrival_time_ms + 1.0),
                            status: DeliveryStatus::Delivered,
                        }
                    }
                })
                .collect();
            let counts = loss_accounting(&records, &packets);
            prop_assert_eq!(counts.total(), counts.d1 + counts.d2);
            prop_assert_eq!(
                counts.total() as usize,
                lost_mask.iter().filter(|&&l| l).count()
            );
        }
    }
}
