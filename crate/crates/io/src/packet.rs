//! The 41-byte controller packet emulating the wireless link.
//!
//! Layout, little-endian:
//!
//! ```text
//! [0xC7][id u8][seq u16][t_us u64][gyro 3×f32][accel 3×f32][buttons u8][jaw f32]
//! ```
//!
//! Decoding is total over 41-byte buffers with the right magic byte: the
//! raw id and jaw are kept as sent so every decoded packet re-encodes to
//! the same bytes. Range checks happen when converting to domain values.

use dextrain_core::imu::ImuSample;
use dextrain_core::{Micros, Side, Vec3};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const PACKET_LEN: usize = 41;
pub const MAGIC: u8 = 0xC7;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum PacketError {
    #[error("packet is {0} bytes, expected {PACKET_LEN}")]
    Length(usize),
    #[error("bad magic byte {0:#04x}")]
    Magic(u8),
    #[error("unknown controller id {0}")]
    ControllerId(u8),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ControllerPacket {
    pub id: u8,
    pub seq: u16,
    pub t_us: Micros,
    pub gyro: [f32; 3],
    pub accel: [f32; 3],
    pub buttons: u8,
    pub jaw: f32,
}

impl ControllerPacket {
    pub fn encode(&self) -> [u8; PACKET_LEN] {
        let mut out = [0u8; PACKET_LEN];
        out[0] = MAGIC;
        out[1] = self.id;
        out[2..4].copy_from_slice(&self.seq.to_le_bytes());
        out[4..12].copy_from_slice(&self.t_us.to_le_bytes());
        for (i, v) in self.gyro.iter().chain(&self.accel).enumerate() {
            out[12 + 4 * i..16 + 4 * i].copy_from_slice(&v.to_le_bytes());
        }
        out[36] = self.buttons;
        out[37..41].copy_from_slice(&self.jaw.to_le_bytes());
        out
    }

    pub fn decode(bytes: &[u8]) -> Result<Self, PacketError> {
        let b: &[u8; PACKET_LEN] = bytes.try_into().map_err(|_| PacketError::Length(bytes.len()))?;
        if b[0] != MAGIC {
            return Err(PacketError::Magic(b[0]));
        }
        let f = |at: usize| f32::from_le_bytes([b[at], b[at + 1], b[at + 2], b[at + 3]]);
        Ok(Self {
            id: b[1],
            seq: u16::from_le_bytes([b[2], b[3]]),
            t_us: u64::from_le_bytes(b[4..12].try_into().expect("8 bytes")),
            gyro: [f(12), f(16), f(20)],
            accel: [f(24), f(28), f(32)],
            buttons: b[36],
            jaw: f(37),
        })
    }

    pub fn controller(&self) -> Result<Side, PacketError> {
        Side::from_index(self.id as usize).ok_or(PacketError::ControllerId(self.id))
    }

    /// Bit 0: the multifunction button.
    pub fn button(&self) -> bool {
        self.buttons & 1 != 0
    }

    /// Jaw command clamped to [0, 1]; NaN reads as open.
    pub fn jaw_command(&self) -> f64 {
        let j = self.jaw as f64;
        if j.is_nan() {
            0.0
        } else {
            j.clamp(0.0, 1.0)
        }
    }

    pub fn imu_sample(&self) -> ImuSample {
        let v = |a: [f32; 3]| Vec3::new(a[0] as f64, a[1] as f64, a[2] as f64);
        ImuSample { t_us: self.t_us, gyro: v(self.gyro), accel: v(self.accel) }
    }
}
