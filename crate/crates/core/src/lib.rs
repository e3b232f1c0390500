//! Discrete-event simulator of IEEE 802.11p EDCA medium access carrying
//! odd/even multiple-description video.
//!
//! The pipeline: a video trace is split into two temporal descriptions and
//! packetized to MTU-sized MAC payloads ([`trace`]); a mapping policy
//! ([`mapper`]) assigns each video packet to one of the four EDCA access
//! categories, optionally reacting to the live video-queue fill; the MAC
//! model ([`edca`]) contends for a shared medium disturbed by external
//! occupancy and random loss ([`channel`]); the receiver ([`receiver`])
//! reassembles frames, enforces the end-to-end latency budget and conceals
//! losses by frame copy; [`metrics`] turns the reconstruction into PSNR /
//! SSIM / loss reports.
//!
//! [`scenario`] ties everything together behind a TOML configuration
//! ([`config`]) and [`report`] emits plot-ready CSV files.

pub mod channel;
pub mod config;
pub mod edca;
pub mod mapper;
pub mod metrics;
pub mod receiver;
pub mod report;
pub mod rng;
pub mod scenario;
pub mod sim;
pub mod synth;
pub mod trace;
pub mod units;
