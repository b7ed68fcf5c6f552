//! Mono 16-bit PCM WAV (RIFF) reading and writing.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::features::AudioBuffer;

/// Reads a mono 16-bit PCM RIFF/WAVE file. The utterance id is taken from
/// the file stem. Unknown chunks are skipped.
pub fn read_wav(path: &Path) -> Result<AudioBuffer> {
    let bytes = fs::read(path)
        .map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display()))))?;
    let name = path.display().to_string();
    let bad = |msg: &str| Error::format("WAV", name.clone(), msg);

    if bytes.len() < 12 || &bytes[0..4] != b"RIFF" || &bytes[8..12] != b"WAVE" {
        return Err(bad("missing RIFF/WAVE header"));
    }

    let mut pos = 12usize;
    let mut format: Option<(u16, u16, u32, u16)> = None; // codec, channels, rate, bits
    let mut data: Option<&[u8]> = None;

    while pos + 8 <= bytes.len() {
        let id = &bytes[pos..pos + 4];
        let size = u32::from_le_bytes(bytes[pos + 4..pos + 8].try_into().unwrap()) as usize;
        let body_start = pos + 8;
        if body_start + size > bytes.len() {
            return Err(bad("chunk extends past end of file"));
        }
        let body = &bytes[body_start..body_start + size];
        match id {
            b"fmt " => {
                if size < 16 {
                    return Err(bad("fmt chunk too short"));
                }
                format = Some((
                    u16::from_le_bytes(body[0..2].try_into().unwrap()),
                    u16::from_le_bytes(body[2..4].try_into().unwrap()),
                    u32::from_le_bytes(body[4..8].try_into().unwrap()),
                    u16::from_le_bytes(body[14..16].try_into().unwrap()),
                ));
            }
            b"data" => data = Some(body),
            _ => {}
        }
        // chunks are word-aligned
        pos = body_start + size + (size & 1);
    }

    let (codec, channels, rate, bits) = format.ok_or_else(|| bad("no fmt chunk"))?;
    if codec != 1 {
        return Err(bad("only PCM (format tag 1) is supported"));
    }
    if channels != 1 {
        return Err(bad("only mono audio is supported"));
    }
    if bits != 16 {
        return Err(bad("only 16-bit samples are supported"));
    }
    let data = data.ok_or_else(|| bad("no data chunk"))?;
    if data.len() % 2 != 0 {
        return Err(bad("data chunk has odd length"));
    }

    let samples: Vec<f64> = data
        .chunks_exact(2)
        .map(|b| i16::from_le_bytes([b[0], b[1]]) as f64 / 32768.0)
        .collect();

    let id = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "utterance".to_string());
    AudioBuffer::new(id, rate, samples)
}

/// Writes a mono 16-bit PCM WAV file. Samples are clamped to [-1, 1].
pub fn write_wav(path: &Path, audio: &AudioBuffer) -> Result<()> {
    let n = audio.len();
    let data_len = (n * 2) as u32;
    let mut out = Vec::with_capacity(44 + n * 2);
    out.extend_from_slice(b"RIFF");
    out.extend_from_slice(&(36 + data_len).to_le_bytes());
    out.extend_from_slice(b"WAVE");
    out.extend_from_slice(b"fmt ");
    out.extend_from_slice(&16u32.to_le_bytes());
    out.extend_from_slice(&1u16.to_le_bytes()); // PCM
    out.extend_from_slice(&1u16.to_le_bytes()); // mono
    out.extend_from_slice(&audio.sample_rate().to_le_bytes());
    out.extend_from_slice(&(audio.sample_rate() * 2).to_le_bytes()); // byte rate
    out.extend_from_slice(&2u16.to_le_bytes()); // block align
    out.extend_from_slice(&16u16.to_le_bytes()); // bits
    out.extend_from_slice(b"data");
    out.extend_from_slice(&data_len.to_le_bytes());
    for &s in audio.samples() {
        let v = (s.clamp(-1.0, 1.0) * 32767.0).round() as i16;
        out.extend_from_slice(&v.to_le_bytes());
    }
    fs::write(path, out)?;
    Ok(())
}
