//! Shared helpers for the CLI test suites: synthetic corpus generation and
//! binary invocation.

#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use image::{Rgb, RgbImage};

/// A palette of saturated colors whose hues fall in distinct histogram bins.
pub const PALETTE: [[u8; 3]; 6] = [
    [220, 30, 30],  // red
    [230, 140, 20], // orange
    [40, 200, 40],  // green
    [30, 170, 200], // cyan-ish
    [40, 40, 220],  // blue
    [200, 40, 200], // magenta
];

pub struct SynthCorpus {
    pub manifest: PathBuf,
    pub ids: Vec<String>,
}

/// Tiny deterministic RNG so fixtures don't depend on crate rngs.
pub struct Lcg(pub u64);

impl Lcg {
    pub fn next_u32(&mut self) -> u32 {
        self.0 = self
            .0
            .wrapping_mul(6364136223846793005)
            .wrapping_add(1442695040888963407);
        (self.0 >> 33) as u32
    }

    pub fn below(&mut self, n: u32) -> u32 {
        self.next_u32() % n
    }
}

fn jitter(c: u8, r: &mut Lcg) -> u8 {
    let delta = r.below(31) as i16 - 15;
    (c as i16 + delta).clamp(0, 255) as u8
}

/// Write one two-part outfit image: the top half in `top_color`, the bottom
/// half in `bottom_color`, with per-pixel noise so descriptors stay distinct.
pub fn write_outfit_image(
    path: &Path,
    width: u32,
    height: u32,
    top_color: [u8; 3],
    bottom_color: [u8; 3],
    rng: &mut Lcg,
) {
    let mut img = RgbImage::new(width, height);
    for y in 0..height {
        let base = if y < height / 2 { top_color } else { bottom_color };
        for x in 0..width {
            img.put_pixel(
                x,
                y,
                Rgb([jitter(base[0], rng), jitter(base[1], rng), jitter(base[2], rng)]),
            );
        }
    }
    img.save(path).expect("failed to write synthetic image");
}

/// Generate a corpus of `n` two-part records under `dir` with a paired color
/// rule: the bottom color index determines the top color index.
pub fn synth_corpus(dir: &Path, n: usize, seed: u64) -> SynthCorpus {
    let images = dir.join("images");
    std::fs::create_dir_all(&images).unwrap();
    let mut rng = Lcg(seed);
    let (width, height) = (120u32, 420u32);
    let mut lines = Vec::new();
    let mut ids = Vec::new();
    for i in 0..n {
        let bottom = rng.below(PALETTE.len() as u32) as usize;
        let top = (bottom + 2) % PALETTE.len();
        let id = format!("img{i:04}");
        let rel = format!("images/{id}.png");
        write_outfit_image(
            &dir.join(&rel),
            width,
            height,
            PALETTE[top],
            PALETTE[bottom],
            &mut rng,
        );
        lines.push(format!(
            r#"{{"id":"{id}","image_path":"{rel}","width":{width},"height":{height},"parts":[{{"part_name":"top","box":[10,20,100,160]}},{{"part_name":"bottom","box":[10,230,100,160]}}],"tags":["street"]}}"#
        ));
        ids.push(id);
    }
    let manifest = dir.join("manifest.jsonl");
    std::fs::write(&manifest, lines.join("\n") + "\n").unwrap();
    SynthCorpus { manifest, ids }
}

/// Generate an inventory of `n` single-part records ("top" only).
pub fn synth_inventory(dir: &Path, n: usize, seed: u64) -> SynthCorpus {
    let images = dir.join("inventory_images");
    std::fs::create_dir_all(&images).unwrap();
    let mut rng = Lcg(seed);
    let (width, height) = (100u32, 140u32);
    let mut lines = Vec::new();
    let mut ids = Vec::new();
    for i in 0..n {
        let color = PALETTE[rng.below(PALETTE.len() as u32) as usize];
        let id = format!("item{i:04}");
        let rel = format!("inventory_images/{id}.png");
        write_outfit_image(&dir.join(&rel), width, height, color, color, &mut rng);
        lines.push(format!(
            r#"{{"id":"{id}","image_path":"{rel}","width":{width},"height":{height},"parts":[{{"part_name":"top","box":[5,5,90,130]}}],"tags":[]}}"#
        ));
        ids.push(id);
    }
    let manifest = dir.join("inventory_manifest.jsonl");
    std::fs::write(&manifest, lines.join("\n") + "\n").unwrap();
    SynthCorpus { manifest, ids }
}

/// Run the pipeline binary with the given arguments in `dir`.
pub fn outfit(dir: &Path, args: &[&str]) -> Output {
    outfit_env(dir, args, &[])
}

/// As [`outfit`], with extra environment variables set.
pub fn outfit_env(dir: &Path, args: &[&str], env: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_outfit"));
    cmd.args(args).current_dir(dir).env_remove("OUTFIT_CONFIG");
    for (key, value) in env {
        cmd.env(key, value);
    }
    cmd.output().expect("failed to launch the pipeline binary")
}

/// Run and require exit code 0, returning the stdout summary JSON.
pub fn outfit_ok(dir: &Path, args: &[&str]) -> serde_json::Value {
    let out = outfit(dir, args);
    assert!(
        out.status.success(),
        "command {:?} failed with {:?}\nstdout: {}\nstderr: {}",
        args,
        out.status.code(),
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_slice(&out.stdout).expect("run summary is not valid JSON")
}
